//! Reference recommenders: popularity, truncated SVD, item-item cosine
//! neighbors and the two-step random walk.

mod knn;
mod svd;

pub use knn::{cosine_similarity_row, p3alpha_similarity_row, ItemKnn, P3Alpha, SparseSimilarity};
pub use svd::{randomized_svd, PureSvd, TruncatedSvd, POWER_ITERATIONS, SVD_OVERSAMPLING};

use crate::dataset::Urm;
use crate::numerics::DenseMatrix;

/// Anything that can score every item for a user. Higher is better;
/// scores must be finite.
pub trait Recommender: Sync {
    fn n_users(&self) -> usize;
    fn n_items(&self) -> usize;
    fn score(&self, user: usize) -> Vec<f64>;
}

/// Non-personalized: every user gets the item interaction counts.
#[derive(Clone, Debug)]
pub struct TopPopular {
    n_users: usize,
    counts: Vec<f64>,
}

impl TopPopular {
    pub fn fit(urm: &Urm) -> Self {
        Self {
            n_users: urm.n_users(),
            counts: urm.item_counts().into_iter().map(|c| c as f64).collect(),
        }
    }
}

impl Recommender for TopPopular {
    fn n_users(&self) -> usize {
        self.n_users
    }

    fn n_items(&self) -> usize {
        self.counts.len()
    }

    fn score(&self, _user: usize) -> Vec<f64> {
        self.counts.clone()
    }
}

/// Precomputed dense scores, one row per user.
#[derive(Clone, Debug)]
pub struct ScoreMatrix {
    scores: DenseMatrix,
}

impl ScoreMatrix {
    pub fn new(scores: DenseMatrix) -> Self {
        Self { scores }
    }
}

impl Recommender for ScoreMatrix {
    fn n_users(&self) -> usize {
        self.scores.rows()
    }

    fn n_items(&self) -> usize {
        self.scores.cols()
    }

    fn score(&self, user: usize) -> Vec<f64> {
        self.scores.row(user).to_vec()
    }
}
