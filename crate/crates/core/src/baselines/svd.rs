//! Truncated SVD by randomized range finding.

use rand::Rng;

use super::Recommender;
use crate::dataset::Urm;
use crate::error::{Error, Result};
use crate::numerics::{matmul, matmul_nt, matmul_tn, orthonormalize_columns, symmetric_eigen, DenseMatrix};
use crate::seeds::{self, Stream};

pub const SVD_OVERSAMPLING: usize = 10;
pub const POWER_ITERATIONS: usize = 4;

/// `A ≈ U · diag(s) · Vᵀ` with `k` components.
#[derive(Clone, Debug)]
pub struct TruncatedSvd {
    /// n_rows x k
    pub u: DenseMatrix,
    pub singular_values: Vec<f64>,
    /// n_cols x k
    pub v: DenseMatrix,
}

/// `A · M` for sparse binary A.
fn sparse_mul(a: &Urm, m: &DenseMatrix) -> DenseMatrix {
    let mut out = DenseMatrix::zeros(a.n_users(), m.cols());
    for u in 0..a.n_users() {
        let row = out.row_mut(u);
        for &i in a.row(u) {
            for (o, x) in row.iter_mut().zip(m.row(i as usize)) {
                *o += x;
            }
        }
    }
    out
}

/// `Aᵀ · M` for sparse binary A.
fn sparse_t_mul(a: &Urm, m: &DenseMatrix) -> DenseMatrix {
    let mut out = DenseMatrix::zeros(a.n_items(), m.cols());
    for u in 0..a.n_users() {
        let src = m.row(u);
        for &i in a.row(u) {
            for (o, x) in out.row_mut(i as usize).iter_mut().zip(src) {
                *o += x;
            }
        }
    }
    out
}

/// Rank-`k` SVD of a binary matrix: random test matrix with `k + 10`
/// columns, four power iterations with re-orthonormalization, then an exact
/// decomposition of the small projected matrix.
pub fn randomized_svd(a: &Urm, k: usize, seed: u64) -> Result<TruncatedSvd> {
    let (n, m) = (a.n_users(), a.n_items());
    let full = n.min(m);
    if k < 1 || k > full {
        return Err(Error::param(format!("rank {k} outside [1, {full}]")));
    }
    let width = (k + SVD_OVERSAMPLING).min(full);
    let mut rng = seeds::rng(seed, Stream::Svd);
    let mut omega = DenseMatrix::zeros(m, width);
    omega.data_mut().iter_mut().for_each(|x| *x = rng.gen_range(-1.0..1.0));
    let mut q = orthonormalize_columns(&sparse_mul(a, &omega));
    for _ in 0..POWER_ITERATIONS {
        let z = orthonormalize_columns(&sparse_t_mul(a, &q));
        q = orthonormalize_columns(&sparse_mul(a, &z));
    }
    // B = Qᵀ A, kept transposed (m x width)
    let bt = sparse_t_mul(a, &q);
    let gram = matmul_tn(&bt, &bt)?;
    let (vals, vecs) = symmetric_eigen(&gram)?;
    let singular_values: Vec<f64> = vals.iter().take(k).map(|&l| l.max(0.0).sqrt()).collect();
    let ub = DenseMatrix::from_vec(
        width,
        k,
        (0..width).flat_map(|r| (0..k).map(move |c| (r, c))).map(|(r, c)| vecs.get(r, c)).collect(),
    )?;
    let u = matmul(&q, &ub)?;
    let mut v = matmul(&bt, &ub)?;
    for c in 0..k {
        let s = singular_values[c];
        for r in 0..m {
            let x = v.get(r, c);
            v.set(r, c, if s > 0.0 { x / s } else { 0.0 });
        }
    }
    Ok(TruncatedSvd { u, singular_values, v })
}

impl TruncatedSvd {
    pub fn reconstruct(&self) -> Result<DenseMatrix> {
        let mut us = self.u.clone();
        for r in 0..us.rows() {
            for (x, s) in us.row_mut(r).iter_mut().zip(&self.singular_values) {
                *x *= s;
            }
        }
        matmul_nt(&us, &self.v)
    }
}

/// Scores are the user's row of the rank-k reconstruction.
#[derive(Clone, Debug)]
pub struct PureSvd {
    user_factors: DenseMatrix,
    item_factors: DenseMatrix,
}

impl PureSvd {
    pub fn fit(urm: &Urm, k: usize, seed: u64) -> Result<Self> {
        let svd = randomized_svd(urm, k, seed)?;
        let mut user_factors = svd.u;
        for r in 0..user_factors.rows() {
            for (x, s) in user_factors.row_mut(r).iter_mut().zip(&svd.singular_values) {
                *x *= s;
            }
        }
        Ok(Self {
            user_factors,
            item_factors: svd.v,
        })
    }
}

impl Recommender for PureSvd {
    fn n_users(&self) -> usize {
        self.user_factors.rows()
    }

    fn n_items(&self) -> usize {
        self.item_factors.rows()
    }

    fn score(&self, user: usize) -> Vec<f64> {
        let f = self.user_factors.row(user);
        (0..self.item_factors.rows())
            .map(|i| self.item_factors.row(i).iter().zip(f).map(|(a, b)| a * b).sum())
            .collect()
    }
}
