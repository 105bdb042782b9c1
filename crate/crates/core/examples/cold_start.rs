//! Accuracy per training-profile length: users with few interactions
//! against users with many.

use ganmf::baselines::{ItemKnn, TopPopular};
use ganmf::dataset::{split, synthetic::cold_start_urm, TEST_RATIO};
use ganmf::evaluation::evaluate_by_profile_length;
use ganmf::training::{train, GeneratorRecommender, TrainConfig};

pub fn run_example() -> ganmf::Result<()> {
    // 3 communities of 80 users; a third of each sees only 3 items
    let urm = cold_start_urm(3, 80, 60, 27, 3, 30, 11);
    let bundle = split(&urm, TEST_RATIO, 2)?;
    let fit = bundle.train.without(&bundle.earlystop)?;
    let edges = [1, 5, 20];

    let config = TrainConfig {
        epochs_max: 60,
        k: 12,
        coding_dim: 32,
        batch_size: 64,
        ..TrainConfig::default()
    };
    let out = train(&fit, &bundle.earlystop, &config)?;
    let ganmf = GeneratorRecommender {
        generator: out.checkpoint.generator,
        mode: config.mode,
    };
    let knn = ItemKnn::fit(&bundle.train, 50, 2.0)?;
    let top = TopPopular::fit(&bundle.train);

    for (name, rec) in [
        ("ganmf-u", &ganmf as &dyn ganmf::baselines::Recommender),
        ("itemknn", &knn),
        ("toppop", &top),
    ] {
        let report = evaluate_by_profile_length(rec, &bundle.train, &bundle.test, &[5], &edges)?;
        println!("{name}");
        for b in report.buckets.iter().flatten() {
            let upper = b.upper.map_or("inf".into(), |u| u.to_string());
            let map = b.metrics.as_ref().map_or(f64::NAN, |m| m[0].map);
            println!("  [{:>2}, {upper:>3})  {:>3} users  MAP@5 {map:.3}", b.lower, b.n_users);
        }
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
