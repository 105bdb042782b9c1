//! Analytic gradients against central finite differences on random tiny
//! models.

use ganmf::model::*;
use ganmf::numerics::{finite_diff_grad, glorot_uniform, relative_error, DenseMatrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const H: f64 = 1e-5;
pub const TOL: f64 = 1e-5;

struct Tiny {
    gen: GeneratorParams,
    disc: DiscriminatorParams,
    bin: BinaryDiscParams,
    users: Vec<usize>,
    real: DenseMatrix,
    margin: f64,
    lambda: f64,
}

fn tiny(seed: u64) -> Tiny {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_items = rng.gen_range(3..=20);
    let n_users = rng.gen_range(2..=8);
    let k = rng.gen_range(1..=5);
    let c = rng.gen_range(4..=6);
    let gen = GeneratorParams::init(n_users, n_items, k, &mut rng).unwrap();
    let mut disc = DiscriminatorParams::init(n_items, c, &mut rng).unwrap();
    disc.b_enc = glorot_uniform(1, c, seed ^ 1);
    disc.b_dec = glorot_uniform(1, n_items, seed ^ 2);
    let mut bin = BinaryDiscParams::init(n_items, c, &mut rng).unwrap();
    bin.b_hidden = glorot_uniform(1, c, seed ^ 3);
    bin.b_out = glorot_uniform(1, 1, seed ^ 4);
    let batch = rng.gen_range(1..=4);
    let users: Vec<usize> = (0..batch).map(|_| rng.gen_range(0..n_users)).collect();
    let mut real = DenseMatrix::zeros(batch, n_items);
    for v in real.data_mut() {
        *v = if rng.gen_bool(0.4) { 1.0 } else { 0.0 };
    }
    Tiny {
        gen,
        disc,
        bin,
        users,
        real,
        margin: rng.gen_range(1..=10) as f64,
        lambda: 10f64.powf(rng.gen_range(-6.0..-1.0)),
    }
}

/// Worst relative error seen so far and where.
#[derive(Debug, Default)]
pub struct Worst {
    pub error: f64,
    pub at: String,
}

fn check(worst: &mut Worst, name: &str, seed: u64, analytic: &DenseMatrix, numeric: &DenseMatrix) {
    let err = relative_error(analytic, numeric);
    if !(err <= worst.error) {
        worst.error = err;
        worst.at = format!("seed {seed}: {name}");
    }
}

fn check_energy_disc(w: &mut Worst, t: &Tiny, seed: u64) {
    let loss = |d: &DiscriminatorParams| {
        disc_loss_and_grads(d, &t.gen, &t.users, &t.real, t.margin, t.lambda)
            .unwrap()
            .0
            .total
    };
    let (_, g) = disc_loss_and_grads(&t.disc, &t.gen, &t.users, &t.real, t.margin, t.lambda).unwrap();
    type Pick = fn(&mut DiscriminatorParams) -> &mut DenseMatrix;
    let params: [(&str, Pick, &DenseMatrix); 4] = [
        ("w_enc", |d| &mut d.w_enc, &g.w_enc),
        ("b_enc", |d| &mut d.b_enc, &g.b_enc),
        ("w_dec", |d| &mut d.w_dec, &g.w_dec),
        ("b_dec", |d| &mut d.b_dec, &g.b_dec),
    ];
    for (name, pick, analytic) in params {
        let mut probe = t.disc.clone();
        let at = pick(&mut probe).clone();
        let num = finite_diff_grad(
            |m| {
                *pick(&mut probe) = m.clone();
                loss(&probe)
            },
            &at,
            H,
        )
        .unwrap();
        check(w, name, seed, analytic, &num);
    }
}

fn check_generator<F>(w: &mut Worst, t: &Tiny, seed: u64, label: &str, loss_and_grads: F)
where
    F: Fn(&GeneratorParams) -> (LossBreakdown, GenGrads),
{
    let (_, g) = loss_and_grads(&t.gen);
    let num_sigma = finite_diff_grad(
        |m| {
            let mut p = t.gen.clone();
            p.sigma = m.clone();
            loss_and_grads(&p).0.total
        },
        &t.gen.sigma,
        H,
    )
    .unwrap();
    check(w, &format!("{label} sigma"), seed, &g.sigma, &num_sigma);
    let num_v = finite_diff_grad(
        |m| {
            let mut p = t.gen.clone();
            p.v = m.clone();
            loss_and_grads(&p).0.total
        },
        &t.gen.v,
        H,
    )
    .unwrap();
    check(w, &format!("{label} v"), seed, &g.v, &num_v);
}

fn check_binary_disc(w: &mut Worst, t: &Tiny, seed: u64) {
    let (_, g) = bin_disc_loss_and_grads(&t.bin, &t.gen, &t.users, &t.real).unwrap();
    type Pick = fn(&mut BinaryDiscParams) -> &mut DenseMatrix;
    let params: [(&str, Pick, &DenseMatrix); 4] = [
        ("w_hidden", |d| &mut d.w_hidden, &g.w_hidden),
        ("b_hidden", |d| &mut d.b_hidden, &g.b_hidden),
        ("w_out", |d| &mut d.w_out, &g.w_out),
        ("b_out", |d| &mut d.b_out, &g.b_out),
    ];
    for (name, pick, analytic) in params {
        let mut probe = t.bin.clone();
        let at = pick(&mut probe).clone();
        let num = finite_diff_grad(
            |m| {
                *pick(&mut probe) = m.clone();
                bin_disc_loss_and_grads(&probe, &t.gen, &t.users, &t.real).unwrap().0.total
            },
            &at,
            H,
        )
        .unwrap();
        check(w, name, seed, analytic, &num);
    }
}

/// Runs every gradient check on one random model: energy discriminator,
/// generator against both discriminators at three feature-matching
/// weights, binary discriminator.
pub fn check_all(seed: u64, w: &mut Worst) {
    let t = tiny(seed);
    check_energy_disc(w, &t, seed);
    for alpha in [0.0, 0.3, 1.0] {
        check_generator(w, &t, seed, &format!("energy alpha={alpha}"), |g| {
            gen_loss_and_grads(&t.disc, g, &t.users, &t.real, alpha, t.lambda).unwrap()
        });
        check_generator(w, &t, seed, &format!("binary alpha={alpha}"), |g| {
            bin_gen_loss_and_grads(&t.bin, g, &t.users, &t.real, alpha, 0.0).unwrap()
        });
    }
    check_binary_disc(w, &t, seed);
}

/// Worst error over `n` random models.
pub fn worst_over(n: u64) -> Worst {
    let mut w = Worst::default();
    for seed in 0..n {
        check_all(seed, &mut w);
    }
    w
}

/// Counts batch rows on each side of the hinge over `n` random models.
pub fn hinge_regimes(n: u64) -> (usize, usize) {
    let mut active = 0;
    let mut inactive = 0;
    for seed in 0..n {
        let t = tiny(seed);
        let fake = generate(&t.gen, &t.users).unwrap();
        let er = energy(&t.disc, &t.real).unwrap();
        let ef = energy(&t.disc, &fake).unwrap();
        for (r, f) in er.iter().zip(&ef) {
            if t.margin * r > *f {
                active += 1;
            } else {
                inactive += 1;
            }
        }
    }
    (active, inactive)
}
