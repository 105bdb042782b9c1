use serde::{Deserialize, Serialize};

use super::Recommender;
use crate::dataset::Urm;
use crate::error::{Error, Result};
use crate::numerics::DenseMatrix;

/// Item-item similarity kept as the top neighbors of every item.
///
/// `rows[i]` holds `(j, S[i][j])` for the retained neighbors of `i`;
/// `by_source[j]` is the same data grouped by `j` for scoring, where
/// `score[i] = Σ_{j in history} S[i][j]`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SparseSimilarity {
    n_users: usize,
    rows: Vec<Vec<(u32, f64)>>,
    by_source: Vec<Vec<(u32, f64)>>,
    history: Vec<Vec<u32>>,
}

impl SparseSimilarity {
    fn build<F>(urm: &Urm, neighborhood: usize, mut row_fn: F) -> Self
    where
        F: FnMut(usize) -> Vec<f64>,
    {
        let n = urm.n_items();
        let mut rows = Vec::with_capacity(n);
        let mut by_source = vec![Vec::new(); n];
        for i in 0..n {
            let mut full = row_fn(i);
            full[i] = 0.0;
            let mut cand: Vec<(u32, f64)> = full
                .iter()
                .enumerate()
                .filter(|(_, &s)| s > 0.0)
                .map(|(j, &s)| (j as u32, s))
                .collect();
            let cmp = |a: &(u32, f64), b: &(u32, f64)| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0));
            if cand.len() > neighborhood {
                cand.select_nth_unstable_by(neighborhood - 1, cmp);
                cand.truncate(neighborhood);
            }
            cand.sort_unstable_by_key(|&(j, _)| j);
            for &(j, s) in &cand {
                by_source[j as usize].push((i as u32, s));
            }
            rows.push(cand);
        }
        Self {
            n_users: urm.n_users(),
            rows,
            by_source,
            history: urm.rows(),
        }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.rows[i]
            .binary_search_by_key(&(j as u32), |&(k, _)| k)
            .map_or(0.0, |p| self.rows[i][p].1)
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let n = self.rows.len();
        let mut out = DenseMatrix::zeros(n, n);
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, s) in row {
                out.set(i, j as usize, s);
            }
        }
        out
    }

    fn score_history(&self, history: &[u32]) -> Vec<f64> {
        let mut scores = vec![0.0; self.rows.len()];
        for &j in history {
            for &(i, s) in &self.by_source[j as usize] {
                scores[i as usize] += s;
            }
        }
        scores
    }
}

/// Cosine similarity of item `i` against every item, with shrinkage:
/// `|users(i) ∩ users(j)| / (‖c_i‖‖c_j‖ + shrink)`.
pub fn cosine_similarity_row(urm: &Urm, urm_t: &Urm, i: usize, shrink: f64) -> Vec<f64> {
    let mut co = vec![0.0; urm.n_items()];
    for &u in urm_t.row(i) {
        for &j in urm.row(u as usize) {
            co[j as usize] += 1.0;
        }
    }
    let ni = (urm_t.row_len(i) as f64).sqrt();
    for (j, c) in co.iter_mut().enumerate() {
        if *c > 0.0 {
            *c /= ni * (urm_t.row_len(j) as f64).sqrt() + shrink;
        }
    }
    co
}

/// Two-step walk item → user → item with transition probabilities raised to
/// `alpha`: `S[i][j] = Σ_u (1/deg(i))^α (1/deg(u))^α`.
pub fn p3alpha_similarity_row(urm: &Urm, urm_t: &Urm, i: usize, alpha: f64) -> Vec<f64> {
    let mut out = vec![0.0; urm.n_items()];
    let deg_i = urm_t.row_len(i);
    if deg_i == 0 {
        return out;
    }
    let p_iu = (1.0 / deg_i as f64).powf(alpha);
    for &u in urm_t.row(i) {
        let p_ui = (1.0 / urm.row_len(u as usize) as f64).powf(alpha);
        for &j in urm.row(u as usize) {
            out[j as usize] += p_iu * p_ui;
        }
    }
    out
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ItemKnn {
    pub similarity: SparseSimilarity,
}

impl ItemKnn {
    pub fn fit(urm: &Urm, neighborhood: usize, shrink: f64) -> Result<Self> {
        if neighborhood < 1 || !(shrink >= 0.0) {
            return Err(Error::param(format!("neighborhood {neighborhood}, shrink {shrink}")));
        }
        let urm_t = urm.transpose();
        Ok(Self {
            similarity: SparseSimilarity::build(urm, neighborhood, |i| cosine_similarity_row(urm, &urm_t, i, shrink)),
        })
    }
}

impl Recommender for ItemKnn {
    fn n_users(&self) -> usize {
        self.similarity.n_users
    }

    fn n_items(&self) -> usize {
        self.similarity.rows.len()
    }

    fn score(&self, user: usize) -> Vec<f64> {
        self.similarity.score_history(&self.similarity.history[user])
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct P3Alpha {
    pub similarity: SparseSimilarity,
}

impl P3Alpha {
    pub fn fit(urm: &Urm, neighborhood: usize, alpha: f64) -> Result<Self> {
        if neighborhood < 1 || !(alpha > 0.0) {
            return Err(Error::param(format!("neighborhood {neighborhood}, alpha {alpha}")));
        }
        let urm_t = urm.transpose();
        Ok(Self {
            similarity: SparseSimilarity::build(urm, neighborhood, |i| p3alpha_similarity_row(urm, &urm_t, i, alpha)),
        })
    }
}

impl Recommender for P3Alpha {
    fn n_users(&self) -> usize {
        self.similarity.n_users
    }

    fn n_items(&self) -> usize {
        self.similarity.rows.len()
    }

    fn score(&self, user: usize) -> Vec<f64> {
        self.similarity.score_history(&self.similarity.history[user])
    }
}
