//! Same generator, same budget, two discriminators: the autoencoder energy
//! and a plain binary classifier.

use ganmf::dataset::{split, synthetic::two_block_urm, TEST_RATIO};
use ganmf::evaluation::evaluate;
use ganmf::training::{train, DiscKind, GeneratorRecommender, TrainConfig};

pub fn run_example() -> ganmf::Result<()> {
    let bundle = split(&two_block_urm(), TEST_RATIO, 0)?;
    let fit = bundle.train.without(&bundle.earlystop)?;
    for seed in 0..3 {
        let mut line = format!("seed {seed}:");
        for disc in [DiscKind::Energy, DiscKind::Binary] {
            let config = TrainConfig {
                epochs_max: 100,
                k: 8,
                coding_dim: 16,
                batch_size: 64,
                discriminator: disc,
                seed,
                ..TrainConfig::default()
            };
            let out = train(&fit, &bundle.earlystop, &config)?;
            let rec = GeneratorRecommender {
                generator: out.checkpoint.generator,
                mode: config.mode,
            };
            let map = evaluate(&rec, &bundle.train, &bundle.test, &[5])?.map_at(5);
            line += &format!("  {disc:?} MAP@5 {map:.3}");
        }
        println!("{line}");
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
