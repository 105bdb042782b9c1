//! Binary-classifier discriminator used for the ablation: one ReLU hidden
//! layer and a logistic output giving the probability that a profile is
//! real. Feature matching uses the hidden layer.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::generator::{backprop_generator, generate, GenGrads, GeneratorParams};
use super::LossBreakdown;
use crate::error::{Error, Result};
use crate::numerics::{glorot_uniform_with, matmul, matmul_nt, matmul_tn_acc, DenseMatrix};

/// Probabilities are clamped to `[PROB_EPS, 1 − PROB_EPS]` before the log.
pub const PROB_EPS: f64 = 1e-7;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BinaryDiscParams {
    /// hidden_dim x n_profile
    pub w_hidden: DenseMatrix,
    /// 1 x hidden_dim
    pub b_hidden: DenseMatrix,
    /// 1 x hidden_dim
    pub w_out: DenseMatrix,
    /// 1 x 1
    pub b_out: DenseMatrix,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BinaryDiscGrads {
    pub w_hidden: DenseMatrix,
    pub b_hidden: DenseMatrix,
    pub w_out: DenseMatrix,
    pub b_out: DenseMatrix,
}

impl BinaryDiscParams {
    pub fn new(w_hidden: DenseMatrix, b_hidden: DenseMatrix, w_out: DenseMatrix, b_out: DenseMatrix) -> Result<Self> {
        let h = w_hidden.rows();
        if b_hidden.shape() != (1, h) || w_out.shape() != (1, h) || b_out.shape() != (1, 1) {
            return Err(Error::shape("binary discriminator parameter shapes"));
        }
        Ok(Self { w_hidden, b_hidden, w_out, b_out })
    }

    pub fn init<R: Rng>(n_profile: usize, hidden_dim: usize, rng: &mut R) -> Result<Self> {
        if !(super::energy::MIN_CODING_DIM..=super::energy::MAX_CODING_DIM).contains(&hidden_dim) {
            return Err(Error::param(format!("hidden units {hidden_dim} outside [4, 1024]")));
        }
        Ok(Self {
            w_hidden: glorot_uniform_with(hidden_dim, n_profile, rng),
            b_hidden: DenseMatrix::zeros(1, hidden_dim),
            w_out: glorot_uniform_with(1, hidden_dim, rng),
            b_out: DenseMatrix::zeros(1, 1),
        })
    }

    pub fn hidden_dim(&self) -> usize {
        self.w_hidden.rows()
    }

    pub fn n_profile(&self) -> usize {
        self.w_hidden.cols()
    }

    fn zero_grads(&self) -> BinaryDiscGrads {
        BinaryDiscGrads {
            w_hidden: DenseMatrix::zeros(self.hidden_dim(), self.n_profile()),
            b_hidden: DenseMatrix::zeros(1, self.hidden_dim()),
            w_out: DenseMatrix::zeros(1, self.hidden_dim()),
            b_out: DenseMatrix::zeros(1, 1),
        }
    }
}

struct Forward {
    pre: DenseMatrix,
    hidden: DenseMatrix,
    prob: Vec<f64>,
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

fn forward(d: &BinaryDiscParams, x: &DenseMatrix) -> Result<Forward> {
    if x.cols() != d.n_profile() {
        return Err(Error::shape(format!(
            "profiles have {} columns, classifier expects {}",
            x.cols(),
            d.n_profile()
        )));
    }
    let mut pre = matmul_nt(x, &d.w_hidden)?;
    pre.add_row_broadcast(d.b_hidden.data())?;
    let mut hidden = pre.clone();
    hidden.data_mut().iter_mut().for_each(|v| *v = v.max(0.0));
    let w = d.w_out.data();
    let prob = (0..hidden.rows())
        .map(|b| sigmoid(hidden.row(b).iter().zip(w).map(|(h, w)| h * w).sum::<f64>() + d.b_out.get(0, 0)))
        .collect();
    Ok(Forward { pre, hidden, prob })
}

/// Probability that each row is a real profile.
pub fn classify(d: &BinaryDiscParams, x: &DenseMatrix) -> Result<Vec<f64>> {
    Ok(forward(d, x)?.prob)
}

/// Hidden-layer features used for feature matching.
pub fn hidden_features(d: &BinaryDiscParams, x: &DenseMatrix) -> Result<DenseMatrix> {
    Ok(forward(d, x)?.hidden)
}

fn clamped(p: f64) -> bool {
    !(PROB_EPS..=1.0 - PROB_EPS).contains(&p)
}

/// Backprop `d loss / d logit` (one per row) and `d loss / d hidden`
/// through the ReLU layer. Returns `d loss / d pre-activation`.
fn d_preactivation(d: &BinaryDiscParams, fwd: &Forward, d_logit: &[f64], d_hidden: Option<&DenseMatrix>) -> DenseMatrix {
    let mut d_pre = DenseMatrix::zeros(fwd.pre.rows(), fwd.pre.cols());
    for b in 0..fwd.pre.rows() {
        let row = d_pre.row_mut(b);
        for (j, g) in row.iter_mut().enumerate() {
            if fwd.pre.get(b, j) > 0.0 {
                let mut v = d_logit[b] * d.w_out.get(0, j);
                if let Some(dh) = d_hidden {
                    v += dh.get(b, j);
                }
                *g = v;
            }
        }
    }
    d_pre
}

fn accumulate(d: &BinaryDiscParams, x: &DenseMatrix, fwd: &Forward, d_logit: &[f64], grads: &mut BinaryDiscGrads) -> Result<()> {
    for (b, &dz) in d_logit.iter().enumerate() {
        for (g, h) in grads.w_out.data_mut().iter_mut().zip(fwd.hidden.row(b)) {
            *g += dz * h;
        }
        grads.b_out.data_mut()[0] += dz;
    }
    let d_pre = d_preactivation(d, fwd, d_logit, None);
    matmul_tn_acc(&d_pre, x, &mut grads.w_hidden)?;
    for (g, s) in grads.b_hidden.data_mut().iter_mut().zip(d_pre.column_sums()) {
        *g += s;
    }
    Ok(())
}

/// Binary cross-entropy labeling real profiles 1 and generated ones 0,
/// `mean_b (−ln p(x_b) − ln(1 − p(G(y_b)))) / 2`.
pub fn bin_disc_loss_and_grads(
    d: &BinaryDiscParams,
    gen: &GeneratorParams,
    users: &[usize],
    real: &DenseMatrix,
) -> Result<(LossBreakdown, BinaryDiscGrads)> {
    let fake = generate(gen, users)?;
    bin_disc_loss_on_profiles(d, real, &fake)
}

pub fn bin_disc_loss_on_profiles(
    d: &BinaryDiscParams,
    real: &DenseMatrix,
    fake: &DenseMatrix,
) -> Result<(LossBreakdown, BinaryDiscGrads)> {
    if real.shape() != fake.shape() || real.rows() == 0 {
        return Err(Error::shape(format!("real {:?} vs generated {:?}", real.shape(), fake.shape())));
    }
    let inv = 0.5 / real.rows() as f64;
    let fr = forward(d, real)?;
    let ff = forward(d, fake)?;
    let mut loss = 0.0;
    let mut dz_real = Vec::with_capacity(real.rows());
    let mut dz_fake = Vec::with_capacity(real.rows());
    for (&pr, &pf) in fr.prob.iter().zip(&ff.prob) {
        loss -= pr.clamp(PROB_EPS, 1.0 - PROB_EPS).ln() + (1.0 - pf.clamp(PROB_EPS, 1.0 - PROB_EPS)).ln();
        dz_real.push(if clamped(pr) { 0.0 } else { (pr - 1.0) * inv });
        dz_fake.push(if clamped(pf) { 0.0 } else { pf * inv });
    }
    loss *= inv;
    let mut grads = d.zero_grads();
    accumulate(d, real, &fr, &dz_real, &mut grads)?;
    accumulate(d, fake, &ff, &dz_fake, &mut grads)?;
    Ok((
        LossBreakdown {
            total: loss,
            adversarial: loss,
            feature_matching: 0.0,
            regularization: 0.0,
        },
        grads,
    ))
}

/// `mean_b (1 − α)(−ln p(G(y_b))) + α‖h(x_b) − h(G(y_b))‖² + λ_G‖Ω_G‖²`
/// with `h` the hidden layer of the classifier.
pub fn bin_gen_loss_and_grads(
    d: &BinaryDiscParams,
    gen: &GeneratorParams,
    users: &[usize],
    real: &DenseMatrix,
    alpha: f64,
    lambda_g: f64,
) -> Result<(LossBreakdown, GenGrads)> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::param(format!("feature matching weight {alpha} outside [0, 1]")));
    }
    if real.rows() != users.len() || users.is_empty() {
        return Err(Error::shape(format!("{} real profiles for {} ids", real.rows(), users.len())));
    }
    let inv = 1.0 / users.len() as f64;
    let fake = generate(gen, users)?;
    let ff = forward(d, &fake)?;
    let mut adversarial = 0.0;
    let d_logit: Vec<f64> = ff
        .prob
        .iter()
        .map(|&p| {
            adversarial -= p.clamp(PROB_EPS, 1.0 - PROB_EPS).ln();
            if clamped(p) {
                0.0
            } else {
                (1.0 - alpha) * (p - 1.0) * inv
            }
        })
        .collect();
    adversarial *= inv;
    let mut feature_matching = 0.0;
    let mut d_hidden = None;
    if alpha != 0.0 {
        let mut diff = forward(d, real)?.hidden;
        diff.add_scaled(&ff.hidden, -1.0)?;
        feature_matching = diff.sum_squares() * inv;
        diff.scale(-2.0 * alpha * inv);
        d_hidden = Some(diff);
    }
    let d_pre = d_preactivation(d, &ff, &d_logit, d_hidden.as_ref());
    let d_fake = matmul(&d_pre, &d.w_hidden)?;
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
