//! Random search over a narrowed space: trials train on subtrain, stop
//! early on the early-stopping set and are ranked by validation MAP@5.

use ganmf::dataset::{split, synthetic::two_block_urm, TEST_RATIO};
use ganmf::search::{random_search, IntRange, SearchOptions, SearchSpace};

pub fn run_example() -> ganmf::Result<()> {
    let bundle = split(&two_block_urm(), TEST_RATIO, 4)?;
    let space = SearchSpace {
        epochs: IntRange { lo: 10, hi: 40 },
        k: IntRange { lo: 2, hi: 16 },
        coding_dim: IntRange { lo: 4, hi: 32 },
        batch_size: vec![64, 128],
        ..SearchSpace::default()
    };
    let dir = tempfile::tempdir().map_err(|e| ganmf::Error::io("temporary directory", e))?;
    let opts = SearchOptions {
        budget: 6,
        workers: 2,
        base_seed: 17,
        log: Some(dir.path().join("trials.jsonl")),
    };
    let outcome = random_search(&space, &bundle, &opts)?;
    for t in &outcome.trials {
        println!(
            "trial {}  k {:>2}  coding {:>2}  epochs {:>2}  lr_g {:.1e}  MAP@5 {:.3}",
            t.index,
            t.config.k,
            t.config.coding_dim,
            t.config.epochs_max,
            t.config.lr_g,
            t.score()
        );
    }
    println!(
        "winner #{}; refit on train for {} epochs",
        outcome.best.index, outcome.best.epochs_used
    );
    Ok(())
}

#[allow(dead_code)]
fn main() {
    if let Err(e) = run_example() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
