//! Linear autoencoder discriminator. Its squared reconstruction error is an
//! energy: low for real profiles, pushed up for generated ones.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::generator::{backprop_generator, generate, GenGrads, GeneratorParams};
use super::LossBreakdown;
use crate::error::{Error, Result};
use crate::numerics::{glorot_uniform_with, matmul, matmul_nt, matmul_tn_acc, DenseMatrix};

pub const MIN_CODING_DIM: usize = 4;
pub const MAX_CODING_DIM: usize = 1024;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiscriminatorParams {
    /// coding_dim x n_profile
    pub w_enc: DenseMatrix,
    /// 1 x coding_dim
    pub b_enc: DenseMatrix,
    /// n_profile x coding_dim
    pub w_dec: DenseMatrix,
    /// 1 x n_profile
    pub b_dec: DenseMatrix,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DiscGrads {
    pub w_enc: DenseMatrix,
    pub b_enc: DenseMatrix,
    pub w_dec: DenseMatrix,
    pub b_dec: DenseMatrix,
}

impl DiscriminatorParams {
    pub fn new(w_enc: DenseMatrix, b_enc: DenseMatrix, w_dec: DenseMatrix, b_dec: DenseMatrix) -> Result<Self> {
        let (c, n) = w_enc.shape();
        if b_enc.shape() != (1, c) || w_dec.shape() != (n, c) || b_dec.shape() != (1, n) {
            return Err(Error::shape(format!(
                "autoencoder: w_enc {:?}, b_enc {:?}, w_dec {:?}, b_dec {:?}",
                w_enc.shape(),
                b_enc.shape(),
                w_dec.shape(),
                b_dec.shape()
            )));
        }
        Ok(Self { w_enc, b_enc, w_dec, b_dec })
    }

    /// Glorot weights, zero biases.
    pub fn init<R: Rng>(n_profile: usize, coding_dim: usize, rng: &mut R) -> Result<Self> {
        if !(MIN_CODING_DIM..=MAX_CODING_DIM).contains(&coding_dim) {
            return Err(Error::param(format!(
                "coding units {coding_dim} outside [{MIN_CODING_DIM}, {MAX_CODING_DIM}]"
            )));
        }
        Ok(Self {
            w_enc: glorot_uniform_with(coding_dim, n_profile, rng),
            b_enc: DenseMatrix::zeros(1, coding_dim),
            w_dec: glorot_uniform_with(n_profile, coding_dim, rng),
            b_dec: DenseMatrix::zeros(1, n_profile),
        })
    }

    pub fn coding_dim(&self) -> usize {
        self.w_enc.rows()
    }

    pub fn n_profile(&self) -> usize {
        self.w_enc.cols()
    }

    fn zero_grads(&self) -> DiscGrads {
        DiscGrads {
            w_enc: DenseMatrix::zeros(self.w_enc.rows(), self.w_enc.cols()),
            b_enc: DenseMatrix::zeros(1, self.coding_dim()),
            w_dec: DenseMatrix::zeros(self.w_dec.rows(), self.w_dec.cols()),
            b_dec: DenseMatrix::zeros(1, self.n_profile()),
        }
    }

    fn weight_norm(&self) -> f64 {
        self.w_enc.sum_squares() + self.w_dec.sum_squares()
    }
}

fn check_width(disc: &DiscriminatorParams, x: &DenseMatrix) -> Result<()> {
    if x.cols() != disc.n_profile() {
        return Err(Error::shape(format!(
            "profiles have {} columns, autoencoder expects {}",
            x.cols(),
            disc.n_profile()
        )));
    }
    Ok(())
}

/// Coding-layer activations, one row per input row.
pub fn encode(disc: &DiscriminatorParams, x: &DenseMatrix) -> Result<DenseMatrix> {
    check_width(disc, x)?;
    let mut h = matmul_nt(x, &disc.w_enc)?;
    h.add_row_broadcast(disc.b_enc.data())?;
    Ok(h)
}

fn decode(disc: &DiscriminatorParams, codes: &DenseMatrix) -> Result<DenseMatrix> {
    let mut r = matmul_nt(codes, &disc.w_dec)?;
    r.add_row_broadcast(disc.b_dec.data())?;
    Ok(r)
}

pub fn reconstruct(disc: &DiscriminatorParams, x: &DenseMatrix) -> Result<DenseMatrix> {
    decode(disc, &encode(disc, x)?)
}

struct Forward {
    codes: DenseMatrix,
    residual: DenseMatrix,
    energy: Vec<f64>,
}

fn forward(disc: &DiscriminatorParams, x: &DenseMatrix) -> Result<Forward> {
    let codes = encode(disc, x)?;
    let mut residual = decode(disc, &codes)?;
    residual.add_scaled(x, -1.0)?;
    let energy = (0..residual.rows())
        .map(|b| residual.row(b).iter().map(|e| e * e).sum())
        .collect();
    Ok(Forward { codes, residual, energy })
}

/// Squared reconstruction error summed over every profile coordinate.
pub fn energy(disc: &DiscriminatorParams, x: &DenseMatrix) -> Result<Vec<f64>> {
    Ok(forward(disc, x)?.energy)
}

/// Accumulates `d/dΩ Σ_b coeff[b] · energy(x_b)` into `grads`.
fn accumulate_energy_grads(
    disc: &DiscriminatorParams,
    x: &DenseMatrix,
    fwd: &Forward,
    coeff: &[f64],
    grads: &mut DiscGrads,
) -> Result<()> {
    let mut d_recon = fwd.residual.clone();
    for (b, &c) in coeff.iter().enumerate() {
        d_recon.row_mut(b).iter_mut().for_each(|e| *e *= 2.0 * c);
    }
    matmul_tn_acc(&d_recon, &fwd.codes, &mut grads.w_dec)?;
    add_into(&mut grads.b_dec, &d_recon.column_sums());
    let d_codes = matmul(&d_recon, &disc.w_dec)?;
    matmul_tn_acc(&d_codes, x, &mut grads.w_enc)?;
    add_into(&mut grads.b_enc, &d_codes.column_sums());
    Ok(())
}

fn add_into(m: &mut DenseMatrix, v: &[f64]) {
    for (a, b) in m.data_mut().iter_mut().zip(v) {
        *a += b;
    }
}

/// Hinge loss of the discriminator, averaged over the batch:
/// `D(x) + max(0, m·D(x) − D(G(y))) + λ_D (‖W_enc‖² + ‖W_dec‖²)`.
///
/// Generated profiles are inputs here; nothing flows back to the generator.
pub fn disc_loss_and_grads(
    disc: &DiscriminatorParams,
    gen: &GeneratorParams,
    users: &[usize],
    real: &DenseMatrix,
    margin: f64,
    lambda_d: f64,
) -> Result<(LossBreakdown, DiscGrads)> {
    let fake = generate(gen, users)?;
    disc_loss_on_profiles(disc, real, &fake, margin, lambda_d)
}

/// [`disc_loss_and_grads`] with the generated profiles already computed.
pub fn disc_loss_on_profiles(
    disc: &DiscriminatorParams,
    real: &DenseMatrix,
    fake: &DenseMatrix,
    margin: f64,
    lambda_d: f64,
) -> Result<(LossBreakdown, DiscGrads)> {
    if real.shape() != fake.shape() {
        return Err(Error::shape(format!(
            "real {:?} vs generated {:?}",
            real.shape(),
            fake.shape()
        )));
    }
    let batch = real.rows();
    if batch == 0 {
        return Err(Error::param("empty batch"));
    }
    let fr = forward(disc, real)?;
    let ff = forward(disc, fake)?;
    let inv = 1.0 / batch as f64;
    let mut adversarial = 0.0;
    let mut c_real = vec![0.0; batch];
    let mut c_fake = vec![0.0; batch];
    for b in 0..batch {
        let hinge = margin * fr.energy[b] - ff.energy[b];
        adversarial += fr.energy[b];
        c_real[b] = inv;
        if hinge > 0.0 {
            adversarial += hinge;
            c_real[b] += margin * inv;
            c_fake[b] = -inv;
        }
    }
    adversarial *= inv;
    let mut grads = disc.zero_grads();
    accumulate_energy_grads(disc, real, &fr, &c_real, &mut grads)?;
    if c_fake.iter().any(|&c| c != 0.0) {
        accumulate_energy_grads(disc, fake, &ff, &c_fake, &mut grads)?;
    }
    let regularization = lambda_d * disc.weight_norm();
    if lambda_d != 0.0 {
        grads.w_enc.add_scaled(&disc.w_enc, 2.0 * lambda_d)?;
        grads.w_dec.add_scaled(&disc.w_dec, 2.0 * lambda_d)?;
    }
    Ok((
        LossBreakdown {
            total: adversarial + regularization,
            adversarial,
            feature_matching: 0.0,
            regularization,
        },
        grads,
    ))
}

/// Generator loss, averaged over the batch:
/// `(1 − α)·D(G(y)) + α·‖Enc(x) − Enc(G(y))‖² + λ_G (‖Σ‖² + ‖V‖²)`,
/// where `x` is the real profile of the same id. The discriminator is held
/// fixed.
pub fn gen_loss_and_grads(
    disc: &DiscriminatorParams,
    gen: &GeneratorParams,
    users: &[usize],
    real: &DenseMatrix,
    alpha: f64,
    lambda_g: f64,
) -> Result<(LossBreakdown, GenGrads)> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::param(format!("feature matching weight {alpha} outside [0, 1]")));
    }
    if real.rows() != users.len() {
        return Err(Error::shape(format!("{} real profiles for {} ids", real.rows(), users.len())));
    }
    check_width(disc, real)?;
    let batch = users.len();
    if batch == 0 {
        return Err(Error::param("empty batch"));
    }
    let inv = 1.0 / batch as f64;
    let fake = generate(gen, users)?;
    let ff = forward(disc, &fake)?;

    // d energy / d input = 2·(r W_dec W_enc − r) for residual r
    let mut d_fake = matmul(&matmul(&ff.residual, &disc.w_dec)?, &disc.w_enc)?;
    d_fake.add_scaled(&ff.residual, -1.0)?;
    d_fake.scale(2.0 * (1.0 - alpha) * inv);
    let adversarial = ff.energy.iter().sum::<f64>() * inv;

    let mut feature_matching = 0.0;
    if alpha != 0.0 {
        let mut diff = encode(disc, real)?;
        diff.add_scaled(&ff.codes, -1.0)?;
        feature_matching = diff.sum_squares() * inv;
        let d_codes = matmul(&diff, &disc.w_enc)?;
        d_fake.add_scaled(&d_codes, -2.0 * alpha * inv)?;
    }

    let (grads, regularization) = backprop_generator(gen, users, &d_fake, lambda_g)?;
    Ok((
        LossBreakdown {
            total: (1.0 - alpha) * adversarial + alpha * feature_matching + regularization,
            adversarial,
            feature_matching,
            regularization,
        },
        grads,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{finite_diff_grad, relative_error};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn identity_ae(n: usize) -> DiscriminatorParams {
        DiscriminatorParams::new(
            DenseMatrix::identity(n),
            DenseMatrix::zeros(1, n),
            DenseMatrix::identity(n),
            DenseMatrix::zeros(1, n),
        )
        .unwrap()
    }

    fn zero_ae(n: usize, c: usize) -> DiscriminatorParams {
        DiscriminatorParams::new(
            DenseMatrix::zeros(c, n),
            DenseMatrix::zeros(1, c),
            DenseMatrix::zeros(n, c),
            DenseMatrix::zeros(1, n),
        )
        .unwrap()
    }

    #[test]
    fn identity_autoencoder_reconstructs() {
        let x = DenseMatrix::from_rows(&[vec![1.0, 0.0, 1.0], vec![0.3, -2.0, 0.0]]).unwrap();
        let ae = identity_ae(3);
        assert_eq!(reconstruct(&ae, &x).unwrap(), x);
        assert_eq!(energy(&ae, &x).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn zero_autoencoder_energy_is_squared_norm() {
        let x = DenseMatrix::from_rows(&[vec![1.0, 0.0, 1.0, 0.0]]).unwrap();
        let ae = zero_ae(4, 2);
        assert!(reconstruct(&ae, &x).unwrap().data().iter().all(|&v| v == 0.0));
        assert_eq!(energy(&ae, &x).unwrap(), vec![2.0]);
    }

    #[test]
    fn matches_two_matmul_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut ae = DiscriminatorParams::init(7, 4, &mut rng).unwrap();
        ae.b_enc = crate::numerics::glorot_uniform(1, 4, 1);
        ae.b_dec = crate::numerics::glorot_uniform(1, 7, 2);
        let x = crate::numerics::glorot_uniform(3, 7, 3);
        let r = reconstruct(&ae, &x).unwrap();
        let e = energy(&ae, &x).unwrap();
        for b in 0..3 {
            let codes: Vec<f64> = (0..4)
                .map(|c| ae.b_enc.get(0, c) + (0..7).map(|i| ae.w_enc.get(c, i) * x.get(b, i)).sum::<f64>())
                .collect();
            let mut norm = 0.0;
            for i in 0..7 {
                let ri = ae.b_dec.get(0, i) + (0..4).map(|c| ae.w_dec.get(i, c) * codes[c]).sum::<f64>();
                assert!((ri - r.get(b, i)).abs() < 1e-12);
                norm += (ri - x.get(b, i)).powi(2);
            }
            assert!((norm - e[b]).abs() < 1e-12);
        }
    }

    #[test]
    fn width_mismatch() {
        let ae = zero_ae(4, 2);
        assert!(matches!(encode(&ae, &DenseMatrix::zeros(1, 3)), Err(Error::Shape(_))));
    }

    /// Autoencoder whose energy on a 1-wide profile is `(s·x − x)²` so the
    /// energies in the loss examples can be dialed in exactly.
    fn scalar_ae(scale: f64) -> DiscriminatorParams {
        let mut w = DenseMatrix::zeros(4, 1);
        w.set(0, 0, 1.0);
        let mut d = DenseMatrix::zeros(1, 4);
        d.set(0, 0, scale);
        DiscriminatorParams::new(w, DenseMatrix::zeros(1, 4), d, DenseMatrix::zeros(1, 1)).unwrap()
    }

    fn scalar_gen(values: &[f64]) -> GeneratorParams {
        GeneratorParams::new(
            DenseMatrix::from_vec(values.len(), 1, values.to_vec()).unwrap(),
            DenseMatrix::from_rows(&[vec![1.0]]).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn hinge_worked_example() {
        // (s − 1)² = 0.5 with x = 1; generated g has (s − 1)²·g² = 0.8
        let s = 1.0 + 0.5f64.sqrt();
        let ae = scalar_ae(s);
        let g = (0.8f64 / 0.5).sqrt();
        let gen = scalar_gen(&[g]);
        let real = DenseMatrix::from_rows(&[vec![1.0]]).unwrap();
        let (loss, _) = disc_loss_and_grads(&ae, &gen, &[0], &real, 2.0, 0.0).unwrap();
        assert!((loss.total - 0.7).abs() < 1e-12, "{}", loss.total);

        let (loss, _) = disc_loss_and_grads(&ae, &gen, &[0], &real, 1.0, 0.0).unwrap();
        assert!((loss.total - 0.5).abs() < 1e-12);
    }

    #[test]
    fn inactive_hinge_contributes_no_gradient() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let ae = DiscriminatorParams::init(5, 4, &mut rng).unwrap();
        let real = DenseMatrix::from_rows(&[vec![1.0, 0.0, 0.0, 1.0, 0.0]]).unwrap();
        // a generated profile far from anything reconstructable
        let gen = GeneratorParams::new(
            DenseMatrix::from_rows(&[vec![50.0]]).unwrap(),
            DenseMatrix::from_rows(&[vec![1.0], vec![-1.0], vec![1.0], vec![-1.0], vec![1.0]]).unwrap(),
        )
        .unwrap();
        let fake = generate(&gen, &[0]).unwrap();
        assert!(energy(&ae, &fake).unwrap()[0] > 3.0 * energy(&ae, &real).unwrap()[0]);
        let (with_hinge, g1) = disc_loss_and_grads(&ae, &gen, &[0], &real, 3.0, 1e-5).unwrap();
        let plain = energy(&ae, &real).unwrap()[0] + 1e-5 * (ae.w_enc.sum_squares() + ae.w_dec.sum_squares());
        assert!((with_hinge.total - plain).abs() < 1e-12);
        // the gradient equals that of D(x) + reg alone
        let f = |w: &DenseMatrix| {
            let mut a = ae.clone();
            a.w_enc = w.clone();
            energy(&a, &real).unwrap()[0] + 1e-5 * (a.w_enc.sum_squares() + a.w_dec.sum_squares())
        };
        let num = finite_diff_grad(f, &ae.w_enc, 1e-5).unwrap();
        assert!(relative_error(&num, &g1.w_enc) < 1e-6);
    }

    #[test]
    fn gen_loss_worked_example() {
        // D(G) = 0.4 through the scalar autoencoder; FM term 0.2 with a
        // code difference of sqrt(0.2)
        let s = 1.0 + 0.4f64.sqrt();
        let ae = scalar_ae(s);
        let gen = scalar_gen(&[1.0]);
        let real = DenseMatrix::from_rows(&[vec![1.0 + 0.2f64.sqrt()]]).unwrap();
        let (loss, _) = gen_loss_and_grads(&ae, &gen, &[0], &real, 0.5, 0.0).unwrap();
        assert!((loss.adversarial - 0.4).abs() < 1e-12);
        assert!((loss.feature_matching - 0.2).abs() < 1e-12);
        assert!((loss.total - 0.3).abs() < 1e-12);
    }

    #[test]
    fn feature_matching_vanishes_on_real_profile() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let ae = DiscriminatorParams::init(6, 4, &mut rng).unwrap();
        let gen = GeneratorParams::init(3, 6, 2, &mut rng).unwrap();
        let real = generate(&gen, &[2, 0]).unwrap();
        let (loss, _) = gen_loss_and_grads(&ae, &gen, &[2, 0], &real, 0.7, 0.0).unwrap();
        assert_eq!(loss.feature_matching, 0.0);
    }

    #[test]
    fn alpha_zero_is_mean_energy() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let ae = DiscriminatorParams::init(6, 4, &mut rng).unwrap();
        let gen = GeneratorParams::init(3, 6, 2, &mut rng).unwrap();
        let users = [0, 1, 2];
        let real = DenseMatrix::zeros(3, 6);
        let (loss, _) = gen_loss_and_grads(&ae, &gen, &users, &real, 0.0, 0.0).unwrap();
        let e = energy(&ae, &generate(&gen, &users).unwrap()).unwrap();
        assert!((loss.total - e.iter().sum::<f64>() / 3.0).abs() < 1e-15);
    }

    #[test]
    fn bad_alpha_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let ae = DiscriminatorParams::init(6, 4, &mut rng).unwrap();
        let gen = GeneratorParams::init(3, 6, 2, &mut rng).unwrap();
        let real = DenseMatrix::zeros(1, 6);
        assert!(gen_loss_and_grads(&ae, &gen, &[0], &real, 1.5, 0.0).is_err());
    }
}
