//! Vary only the feature-matching weight and watch generated profiles go
//! from near-identical to user specific.

use ganmf::dataset::{split, synthetic::two_block_urm, TEST_RATIO};
use ganmf::evaluation::{evaluate, similarity_stats};
use ganmf::training::{generated_user_profiles, train, GeneratorRecommender, TrainConfig};

pub fn run_example() -> ganmf::Result<()> {
    let bundle = split(&two_block_urm(), TEST_RATIO, 0)?;
    let fit = bundle.train.without(&bundle.earlystop)?;
    println!("alpha  MAP@5  similarity mean (std)");
    for step in 0..=5 {
        let config = TrainConfig {
            epochs_max: 50,
            k: 8,
            coding_dim: 16,
            batch_size: 64,
            alpha: step as f64 / 5.0,
            ..TrainConfig::default()
        };
        let out = train(&fit, &bundle.earlystop, &config)?;
        let gen = out.checkpoint.generator;
        let profiles = generated_user_profiles(&gen, config.mode)?;
        let sim = similarity_stats(&profiles, 100_000, 0)?;
        let rec = GeneratorRecommender {
            generator: gen,
            mode: config.mode,
        };
        let map = evaluate(&rec, &bundle.train, &bundle.test, &[5])?.map_at(5);
        println!("{:>5.1}  {map:.3}  {:.3} ({:.3})", config.alpha, sim.mean, sim.std);
    }
    Ok(())
}

#[allow(dead_code)]
fn main() {
    if let Err(e) = run_example() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
