//! One line per acceptance criterion. Criteria that need the public
//! datasets read them from `GANMF_DATA_DIR` and report NOT RUN without it.

mod common;

use std::collections::HashSet;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::time::Instant;

use common::gradcheck::{hinge_regimes, worst_over, TOL};
use common::scenarios::{block_config, block_map5, block_similarity, mean_over_seeds, with_disc};
use ganmf::baselines::{
    cosine_similarity_row, p3alpha_similarity_row, randomized_svd, TopPopular,
};
use ganmf::dataset::synthetic::random_urm;
use ganmf::dataset::{build_urm, split, DatasetFormat, Urm, MIN_INTERACTIONS, TEST_RATIO};
use ganmf::evaluation::{evaluate, map_at_k, ndcg_at_k};
use ganmf::model::{
    bin_disc_loss_and_grads, disc_loss_and_grads, gen_loss_and_grads, BinaryDiscParams, DiscriminatorParams,
    GeneratorParams,
};
use ganmf::numerics::DenseMatrix;
use ganmf::training::{train, DiscKind, GeneratorRecommender, TrainConfig};
use nalgebra::{DMatrix, SymmetricEigen};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

enum Outcome {
    Pass(String),
    Fail(String),
    NotRun(String),
}

fn verdict(ok: bool, detail: String) -> Outcome {
    if ok {
        Outcome::Pass(detail)
    } else {
        Outcome::Fail(detail)
    }
}

fn data_dir() -> Option<PathBuf> {
    std::env::var_os("GANMF_DATA_DIR").map(PathBuf::from)
}

const EXACT: f64 = 1e-12;

fn dataset_fidelity() -> Outcome {
    let Some(dir) = data_dir() else {
        return Outcome::NotRun("GANMF_DATA_DIR unset".into());
    };
    let cases = [
        (DatasetFormat::MovieLens1M, "ml-1m/ratings.dat", "1000209 6040 3706 95.53%"),
        (DatasetFormat::Hetrec, "hetrec2011-movielens-2k-v2/user_ratedmovies.dat", "855598 2113 10109 96.00%"),
        (DatasetFormat::Lastfm, "hetrec2011-lastfm-2k/user_artists.dat", "92834 1884 17626 99.72%"),
    ];
    let mut lines = Vec::new();
    let mut ok = true;
    for (format, file, want) in cases {
        let path = dir.join(file);
        if !path.exists() {
            return Outcome::NotRun(format!("{} missing", path.display()));
        }
        let got = match format.parse(&path).and_then(|log| build_urm(&log, MIN_INTERACTIONS)) {
            Ok(urm) => urm.stats().to_string(),
            Err(e) => e.to_string(),
        };
        ok &= got == want;
        lines.push(format!("{}: {got} (want {want})", format.tag()));
    }
    verdict(ok, lines.join("; "))
}

fn gradients() -> Outcome {
    let w = worst_over(50);
    let (active, inactive) = hinge_regimes(50);
    verdict(
        w.error < TOL && active > 0 && inactive > 0,
        format!("50 models, worst rel err {:.2e} at {} (tol {TOL:e}); hinge rows active {active} inactive {inactive}", w.error, w.at),
    )
}

fn oracle_ndcg(ranked: &[u32], relevant: &HashSet<u32>, k: usize) -> f64 {
    common::oracles::ndcg(ranked, relevant, k)
}

fn metric_oracles() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let n = rng.gen_range(1..40u32);
        let mut items: Vec<u32> = (0..n).collect();
        items.shuffle(&mut rng);
        let ranked = items[..rng.gen_range(0..=n as usize)].to_vec();
        let relevant: HashSet<u32> = (0..n).filter(|_| rng.gen_bool(0.3)).collect();
        let k = rng.gen_range(1..25);
        worst = worst
            .max((ndcg_at_k(&ranked, &relevant, k).unwrap() - oracle_ndcg(&ranked, &relevant, k)).abs())
            .max((map_at_k(&ranked, &relevant, k).unwrap() - common::oracles::average_precision(&ranked, &relevant, k)).abs());
    }
    let relevant: HashSet<u32> = [20, 50].into();
    let ranked = [10, 20, 30, 40, 50];
    let n = format!("{:.5}", ndcg_at_k(&ranked, &relevant, 5).unwrap());
    let m = format!("{:.5}", map_at_k(&ranked, &relevant, 5).unwrap());
    verdict(
        worst <= EXACT && n == "0.62405" && m == "0.45000",
        format!("1000 lists, max |diff| {worst:.1e} (tol {EXACT:e}); worked example NDCG@5 {n} MAP@5 {m}"),
    )
}

/// Autoencoder with zero decoder, so energy is the squared norm of the
/// profile, and an encoder that copies the first two items.
fn copy_two_encoder(n_items: usize, coding: usize) -> DiscriminatorParams {
    let mut w_enc = DenseMatrix::zeros(coding, n_items);
    w_enc.set(0, 0, 1.0);
    w_enc.set(1, 1, 1.0);
    DiscriminatorParams::new(w_enc, DenseMatrix::zeros(1, coding), DenseMatrix::zeros(n_items, coding), DenseMatrix::zeros(1, n_items))
        .unwrap()
}

/// One user whose generated profile is `profile`.
fn fixed_generator(profile: &[f64]) -> GeneratorParams {
    GeneratorParams {
        sigma: DenseMatrix::from_rows(&[vec![1.0]]).unwrap(),
        v: DenseMatrix::from_rows(&profile.iter().map(|&p| vec![p]).collect::<Vec<_>>()).unwrap(),
    }
}

fn loss_arithmetic() -> Outcome {
    let disc = copy_two_encoder(3, 4);
    let row = |v: &[f64]| DenseMatrix::from_rows(&[v.to_vec()]).unwrap();
    // (name, got, want)
    let mut sums: Vec<(&str, f64, f64)> = Vec::new();

    // D(x) = 0.5, D(G(y)) = 0.8, m = 2
    let real = row(&[0.5, 0.5, 0.0]);
    let (active, _) = disc_loss_and_grads(&disc, &fixed_generator(&[0.8, 0.4, 0.0]), &[0], &real, 2.0, 0.0).unwrap();
    sums.push(("L_D", active.total, 0.7));

    // D(G(y)) >= m D(x) on two different fakes: loss is D(x) and the
    // gradients cannot depend on the fake
    let (a, ga) = disc_loss_and_grads(&disc, &fixed_generator(&[1.0, 0.2, 0.0]), &[0], &real, 2.0, 0.0).unwrap();
    let (b, gb) = disc_loss_and_grads(&disc, &fixed_generator(&[0.0, 0.0, 1.5]), &[0], &real, 2.0, 0.0).unwrap();
    sums.push(("inactive L_D", a.total, 0.5));
    sums.push(("inactive L_D", b.total, 0.5));

    // D(G(y)) = 0.4, feature matching 0.2, alpha = 0.5
    let (g, _) = gen_loss_and_grads(&disc, &fixed_generator(&[0.6, 0.2, 0.0]), &[0], &row(&[0.2, 0.4, 0.0]), 0.5, 0.0).unwrap();
    sums.push(("L_G", g.total, 0.3));

    // a zero classifier outputs 0.5 on everything
    let bin = BinaryDiscParams::new(DenseMatrix::zeros(4, 3), DenseMatrix::zeros(1, 4), DenseMatrix::zeros(1, 4), DenseMatrix::zeros(1, 1))
        .unwrap();
    let (bce, _) = bin_disc_loss_and_grads(&bin, &fixed_generator(&[0.3, 0.1, 0.9]), &[0], &real).unwrap();
    sums.push(("BCE", bce.total, std::f64::consts::LN_2));

    let ok = ga == gb && sums.iter().all(|&(_, got, want)| (got - want).abs() <= EXACT);
    let notes: Vec<String> = sums.iter().map(|(name, got, _)| format!("{name} {got:.6}")).collect();
    verdict(
        ok,
        format!("{}, inactive hinge grads independent of fake {} (tol {EXACT:e})", notes.join(", "), ga == gb),
    )
}

fn feature_matching() -> Outcome {
    let plain = mean_over_seeds(|s| block_similarity(&TrainConfig { alpha: 0.0, ..block_config(s, 50) }));
    let fm = mean_over_seeds(|s| block_similarity(&TrainConfig { alpha: 0.25, ..block_config(s, 50) }));
    verdict(
        plain - fm >= 0.2,
        format!("mean cosine alpha=0 {plain:.4}, alpha=0.25 {fm:.4}, gap {:.4} (need >= 0.2)", plain - fm),
    )
}

fn end_to_end() -> Outcome {
    let Some(dir) = data_dir() else {
        return Outcome::NotRun("GANMF_DATA_DIR unset".into());
    };
    let path = dir.join("ml-1m/ratings.dat");
    if !path.exists() {
        return Outcome::NotRun(format!("{} missing", path.display()));
    }
    let urm = build_urm(&DatasetFormat::MovieLens1M.parse(&path).unwrap(), MIN_INTERACTIONS).unwrap();
    let b = split(&urm, TEST_RATIO, 42).unwrap();
    let top = evaluate(&TopPopular::fit(&b.train), &b.train, &b.test, &[5]).unwrap().ndcg_at(5);
    let config = TrainConfig::default();
    let fit = b.train.without(&b.earlystop).unwrap();
    let out = train(&fit, &b.earlystop, &config).unwrap();
    let rec = GeneratorRecommender {
        generator: out.checkpoint.generator,
        mode: config.mode,
    };
    let gan = evaluate(&rec, &b.train, &b.test, &[5]).unwrap().ndcg_at(5);
    verdict(
        gan >= 1.3 * top && (top - 0.2248).abs() <= 0.02,
        format!("GANMF-u NDCG@5 {gan:.4}, TopPop {top:.4} (need ratio >= 1.3 and TopPop within 0.02 of 0.2248)"),
    )
}

fn ablation() -> Outcome {
    let energy = mean_over_seeds(|s| block_map5(&block_config(s, 100)));
    let binary = mean_over_seeds(|s| block_map5(&with_disc(block_config(s, 100), DiscKind::Binary)));
    verdict(energy > binary, format!("MAP@5 energy {energy:.4}, binary {binary:.4}"))
}

fn invariants() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut broken = Vec::new();
    for trial in 0..1000 {
        let n_users = rng.gen_range(1..12);
        let n_items = rng.gen_range(2..25);
        let rows: Vec<Vec<u32>> = (0..n_users)
            .map(|_| {
                let mut all: Vec<u32> = (0..n_items as u32).collect();
                all.shuffle(&mut rng);
                all.truncate(rng.gen_range(2..=n_items));
                all
            })
            .collect();
        let urm = Urm::from_rows(n_items, rows).unwrap();
        if let Err(e) = split(&urm, TEST_RATIO, trial).unwrap().check_invariants(&urm) {
            broken.push(format!("urm {trial}: {e}"));
        }
    }
    let dir = tempfile::tempdir().unwrap();
    let differing = common::cli::nondeterministic_commands(dir.path());
    verdict(
        broken.is_empty() && differing.is_empty(),
        format!(
            "1000 split bundles, {} broken; CLI commands with differing outputs: {}",
            broken.len(),
            if differing.is_empty() { "none".to_string() } else { differing.join(", ") }
        ),
    )
}

fn baseline_oracles() -> Outcome {
    let mut worst: f64 = 0.0;
    for seed in 0..10 {
        let urm = random_urm(8, 6, 0.5, 2, seed);
        let d = urm.to_dense();
        let a = DMatrix::from_row_slice(d.rows(), d.cols(), d.data());
        let mut want: Vec<f64> = SymmetricEigen::new(a.transpose() * &a)
            .eigenvalues
            .iter()
            .map(|l| l.max(0.0).sqrt())
            .collect();
        want.sort_by(|x, y| y.total_cmp(x));
        for (g, w) in randomized_svd(&urm, 6, seed).unwrap().singular_values.iter().zip(&want) {
            worst = worst.max((g - w).abs() / w.abs().max(1e-300));
        }
    }
    let cos_urm = Urm::from_rows(2, vec![vec![0, 1], vec![0]]).unwrap();
    let cos = cosine_similarity_row(&cos_urm, &cos_urm.transpose(), 0, 0.0)[1];
    let p3_urm = Urm::from_rows(2, vec![vec![0, 1], vec![1]]).unwrap();
    let t = p3_urm.transpose();
    let (p12, p21) = (p3alpha_similarity_row(&p3_urm, &t, 0, 1.0)[1], p3alpha_similarity_row(&p3_urm, &t, 1, 1.0)[0]);
    let (cos, p12, p21) = (format!("{cos:.5}"), format!("{p12:.5}"), format!("{p21:.5}"));
    verdict(
        worst < 1e-6 && cos == "0.70711" && p12 == "0.50000" && p21 == "0.25000",
        format!("SVD max rel err {worst:.1e} (tol 1e-6); cosine {cos}; P3alpha {p12} / {p21}"),
    )
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 9] = [
        ("dataset fidelity", dataset_fidelity),
        ("gradient correctness", gradients),
        ("metric oracles", metric_oracles),
        ("loss arithmetic", loss_arithmetic),
        ("feature-matching conditioning", feature_matching),
        ("end-to-end ranking quality", end_to_end),
        ("ablation direction", ablation),
        ("split and determinism invariants", invariants),
        ("baseline oracles", baseline_oracles),
    ];
    let (mut failed, mut not_run) = (0, 0);
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Outcome::Fail(format!("panicked: {msg}"))
        });
        let secs = start.elapsed().as_secs_f64();
        let (tag, detail) = match outcome {
            Outcome::Pass(d) => ("PASS", d),
            Outcome::Fail(d) => {
                failed += 1;
                ("FAIL", d)
            }
            Outcome::NotRun(d) => {
                not_run += 1;
                ("NOT RUN", d)
            }
        };
        println!("{tag:<7} {} {name}: {detail} [{secs:.1}s]", i + 1);
    }
    println!(
        "acceptance: {} passed, {failed} failed, {not_run} not run",
        criteria.len() - failed - not_run
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
