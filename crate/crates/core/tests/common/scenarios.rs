//! Training runs on the two-community dataset shared by several suites.

use ganmf::dataset::synthetic::two_block_urm;
use ganmf::dataset::{split, TEST_RATIO};
use ganmf::evaluation::{evaluate, similarity_stats};
use ganmf::training::{generated_user_profiles, train, DiscKind, GeneratorRecommender, TrainConfig};

pub const SEEDS: [u64; 3] = [0, 1, 2];

pub fn block_config(seed: u64, epochs: usize) -> TrainConfig {
    TrainConfig {
        epochs_max: epochs,
        k: 8,
        coding_dim: 16,
        batch_size: 64,
        seed,
        ..TrainConfig::default()
    }
}

/// Test MAP@5 after training on train minus the early-stopping set, with
/// early stopping on the latter.
pub fn block_map5(config: &TrainConfig) -> f64 {
    let b = split(&two_block_urm(), TEST_RATIO, config.seed).unwrap();
    let fit = b.train.without(&b.earlystop).unwrap();
    let out = train(&fit, &b.earlystop, config).unwrap();
    let rec = GeneratorRecommender {
        generator: out.checkpoint.generator,
        mode: config.mode,
    };
    evaluate(&rec, &b.train, &b.test, &[5]).unwrap().map_at(5)
}

/// Mean pairwise cosine similarity of all generated user profiles after
/// training on the whole matrix for exactly `epochs_max` epochs.
pub fn block_similarity(config: &TrainConfig) -> f64 {
    let urm = two_block_urm();
    let none = urm.with_rows(vec![Vec::new(); urm.n_users()]).unwrap();
    let out = train(&urm, &none, config).unwrap();
    let profiles = generated_user_profiles(&out.checkpoint.generator, config.mode).unwrap();
    similarity_stats(&profiles, 1_000_000, 0).unwrap().mean
}

pub fn mean_over_seeds<F: Fn(u64) -> f64>(f: F) -> f64 {
    SEEDS.iter().map(|&s| f(s)).sum::<f64>() / SEEDS.len() as f64
}

pub fn with_disc(mut c: TrainConfig, d: DiscKind) -> TrainConfig {
    c.discriminator = d;
    c
}
