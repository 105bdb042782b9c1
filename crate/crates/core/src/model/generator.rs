use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{glorot_uniform_with, matmul, matmul_nt, matmul_tn, DenseMatrix};

/// Matrix-factorization generator: one latent row per conditioning id
/// (`sigma`) and one per profile coordinate (`v`). The profile generated
/// for id `y` is `v · sigma[y]ᵀ`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneratorParams {
    pub sigma: DenseMatrix,
    pub v: DenseMatrix,
}

pub const MAX_LATENT_FACTORS: usize = 250;

impl GeneratorParams {
    pub fn new(sigma: DenseMatrix, v: DenseMatrix) -> Result<Self> {
        if sigma.cols() != v.cols() {
            return Err(Error::shape(format!(
                "sigma has {} factors, v has {}",
                sigma.cols(),
                v.cols()
            )));
        }
        Ok(Self { sigma, v })
    }

    pub fn init<R: Rng>(n_cond: usize, n_profile: usize, k: usize, rng: &mut R) -> Result<Self> {
        if !(1..=MAX_LATENT_FACTORS).contains(&k) {
            return Err(Error::param(format!("latent factors {k} outside [1, {MAX_LATENT_FACTORS}]")));
        }
        Ok(Self {
            sigma: glorot_uniform_with(n_cond, k, rng),
            v: glorot_uniform_with(n_profile, k, rng),
        })
    }

    pub fn k(&self) -> usize {
        self.sigma.cols()
    }

    pub fn n_cond(&self) -> usize {
        self.sigma.rows()
    }

    pub fn n_profile(&self) -> usize {
        self.v.rows()
    }
}

/// Gradient of a loss with respect to both factor matrices.
#[derive(Clone, Debug, PartialEq)]
pub struct GenGrads {
    pub sigma: DenseMatrix,
    pub v: DenseMatrix,
}

/// Synthetic profiles for a batch of conditioning ids, one row each.
pub fn generate(gen: &GeneratorParams, users: &[usize]) -> Result<DenseMatrix> {
    let factors = gen.sigma.select_rows(users)?;
    matmul_nt(&factors, &gen.v)
}

/// Profiles for every conditioning id.
pub fn generate_all(gen: &GeneratorParams) -> Result<DenseMatrix> {
    matmul_nt(&gen.sigma, &gen.v)
}

/// Chains `d loss / d profiles` (batch x profile length) back to the
/// factors, adding `lambda * ‖Ω‖²` regularization.
pub(crate) fn backprop_generator(
    gen: &GeneratorParams,
    users: &[usize],
    d_profiles: &DenseMatrix,
    lambda: f64,
) -> Result<(GenGrads, f64)> {
    let factors = gen.sigma.select_rows(users)?;
    let d_factors = matmul(d_profiles, &gen.v)?;
    let mut d_sigma = DenseMatrix::zeros(gen.sigma.rows(), gen.k());
    for (b, &y) in users.iter().enumerate() {
        for (g, d) in d_sigma.row_mut(y).iter_mut().zip(d_factors.row(b)) {
            *g += d;
        }
    }
    let mut d_v = matmul_tn(d_profiles, &factors)?;
    let mut reg = 0.0;
    if lambda != 0.0 {
        reg = lambda * (gen.sigma.sum_squares() + gen.v.sum_squares());
        d_sigma.add_scaled(&gen.sigma, 2.0 * lambda)?;
        d_v.add_scaled(&gen.v, 2.0 * lambda)?;
    }
    Ok((GenGrads { sigma: d_sigma, v: d_v }, reg))
}
