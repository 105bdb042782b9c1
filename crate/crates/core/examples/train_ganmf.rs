//! Train the adversarial factorization on two disjoint communities, in
//! user and item mode, then recommend for one user.

use ganmf::dataset::{split, synthetic::two_block_urm, TEST_RATIO};
use ganmf::evaluation::evaluate;
use ganmf::model::{Checkpoint, Mode};
use ganmf::training::{recommend, train_with_log, GeneratorRecommender, TrainConfig};

pub fn run_example() -> ganmf::Result<()> {
    let urm = two_block_urm();
    let bundle = split(&urm, TEST_RATIO, 1)?;
    let fit = bundle.train.without(&bundle.earlystop)?;

    for mode in [Mode::User, Mode::Item] {
        let config = TrainConfig {
            epochs_max: 60,
            k: 8,
            coding_dim: 16,
            batch_size: 64,
            mode,
            ..TrainConfig::default()
        }
        .validated()?;
        let out = train_with_log(&fit, &bundle.earlystop, &config, |rec| {
            if let Some(m) = rec.earlystop_map5 {
                println!(
                    "  epoch {:>3}  D {:>8.3}  G {:>7.3}  early-stop MAP@5 {m:.3}",
                    rec.epoch, rec.d_loss.total, rec.g_loss.total
                );
            }
        })?;

        let rec = GeneratorRecommender {
            generator: out.checkpoint.generator.clone(),
            mode,
        };
        let report = evaluate(&rec, &bundle.train, &bundle.test, &[5, 20])?;
        println!(
            "{mode:?} mode: best epoch {}, test MAP@5 {:.3}, NDCG@5 {:.3}",
            out.history.best_epoch,
            report.map_at(5),
            report.ndcg_at(5)
        );

        let top = recommend(&out.checkpoint.generator, mode, &bundle.train, 0, 5)?;
        println!("  user 0 (community 0, items 0..50): {top:?}");

        let bytes = out.checkpoint.to_bytes();
        assert_eq!(Checkpoint::from_bytes(&bytes)?, out.checkpoint);
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
