//! Compare hand-derived gradients with central finite differences on a
//! tiny random model.

use ganmf::model::{disc_loss_and_grads, gen_loss_and_grads, DiscriminatorParams, GeneratorParams};
use ganmf::numerics::{finite_diff_grad, relative_error, DenseMatrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn run_example() -> ganmf::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (users, items, k, coding) = (6, 10, 3, 4);
    let gen = GeneratorParams::init(users, items, k, &mut rng)?;
    let disc = DiscriminatorParams::init(items, coding, &mut rng)?;
    let batch = [0, 2, 5];
    let real = DenseMatrix::from_vec(
        batch.len(),
        items,
        (0..batch.len() * items).map(|_| f64::from(rng.gen_bool(0.4) as u8)).collect(),
    )?;
    let (margin, lambda_d, alpha) = (2.0, 1e-3, 0.3);
    let h = 1e-5;

    let (_, dg) = disc_loss_and_grads(&disc, &gen, &batch, &real, margin, lambda_d)?;
    let num = finite_diff_grad(
        |w| {
            let d = DiscriminatorParams { w_enc: w.clone(), ..disc.clone() };
            disc_loss_and_grads(&d, &gen, &batch, &real, margin, lambda_d).map_or(f64::NAN, |(l, _)| l.total)
        },
        &disc.w_enc,
        h,
    )?;
    println!("discriminator encoder weights: relative error {:.2e}", relative_error(&dg.w_enc, &num));

    let (_, gg) = gen_loss_and_grads(&disc, &gen, &batch, &real, alpha, 0.0)?;
    let num = finite_diff_grad(
        |s| {
            let g = GeneratorParams::new(s.clone(), gen.v.clone()).expect("same shape");
            gen_loss_and_grads(&disc, &g, &batch, &real, alpha, 0.0).map_or(f64::NAN, |(l, _)| l.total)
        },
        &gen.sigma,
        h,
    )?;
    println!("generator user factors:        relative error {:.2e}", relative_error(&gg.sigma, &num));
    let num = finite_diff_grad(
        |v| {
            let g = GeneratorParams::new(gen.sigma.clone(), v.clone()).expect("same shape");
            gen_loss_and_grads(&disc, &g, &batch, &real, alpha, 0.0).map_or(f64::NAN, |(l, _)| l.total)
        },
        &gen.v,
        h,
    )?;
    println!("generator item factors:        relative error {:.2e}", relative_error(&gg.v, &num));
    Ok(())
}

#[allow(dead_code)]
fn main() {
    if let Err(e) = run_example() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
