//! Ranking metrics, whole-model reports, cold-start buckets and
//! generated-profile similarity statistics.

use std::collections::HashSet;
use std::fmt::Write as _;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::Recommender;
use crate::dataset::Urm;
use crate::error::{Error, Result};
use crate::numerics::DenseMatrix;
use crate::seeds::{self, Stream};

pub const DEFAULT_CUTOFFS: [usize; 2] = [5, 20];
pub const DEFAULT_BUCKET_EDGES: [usize; 4] = [2, 25, 100, 500];

/// Above this many pairs [`similarity_stats`] samples instead of
/// enumerating.
pub const MAX_EXACT_PAIRS: usize = 1_000_000;

/// Top-`n` items by score, skipping `exclude` (sorted). Ties go to the
/// lower item id.
pub fn top_n(scores: &[f64], exclude: &[u32], n: usize) -> Vec<u32> {
    let mut cand: Vec<u32> = (0..scores.len() as u32)
        .filter(|i| exclude.binary_search(i).is_err())
        .collect();
    let cmp = |a: &u32, b: &u32| scores[*b as usize].total_cmp(&scores[*a as usize]).then(a.cmp(b));
    if n < cand.len() {
        if n == 0 {
            return Vec::new();
        }
        cand.select_nth_unstable_by(n - 1, cmp);
        cand.truncate(n);
    }
    cand.sort_unstable_by(cmp);
    cand
}

fn check_k(k: usize) -> Result<()> {
    if k < 1 {
        Err(Error::param("cutoff must be at least 1"))
    } else {
        Ok(())
    }
}

/// NDCG@k with binary relevance.
pub fn ndcg_at_k(ranked: &[u32], relevant: &HashSet<u32>, k: usize) -> Result<f64> {
    check_k(k)?;
    if relevant.is_empty() {
        return Ok(0.0);
    }
    let dcg: f64 = ranked
        .iter()
        .take(k)
        .enumerate()
        .filter(|(_, i)| relevant.contains(i))
        .map(|(p, _)| 1.0 / ((p + 2) as f64).log2())
        .sum();
    let idcg: f64 = (0..k.min(relevant.len())).map(|p| 1.0 / ((p + 2) as f64).log2()).sum();
    Ok(dcg / idcg)
}

/// Average precision at k, normalized by `min(k, |relevant|)`.
pub fn map_at_k(ranked: &[u32], relevant: &HashSet<u32>, k: usize) -> Result<f64> {
    check_k(k)?;
    if relevant.is_empty() {
        return Ok(0.0);
    }
    let mut hits = 0usize;
    let mut sum = 0.0;
    for (p, i) in ranked.iter().take(k).enumerate() {
        if relevant.contains(i) {
            hits += 1;
            sum += hits as f64 / (p + 1) as f64;
        }
    }
    Ok(sum / k.min(relevant.len()) as f64)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CutoffMetrics {
    pub cutoff: usize,
    pub ndcg: f64,
    pub map: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BucketReport {
    pub lower: usize,
    /// `None` for the open-ended last bucket.
    pub upper: Option<usize>,
    pub n_users: usize,
    /// `None` when the bucket is empty.
    pub metrics: Option<Vec<CutoffMetrics>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub metrics: Vec<CutoffMetrics>,
    pub n_users_evaluated: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub buckets: Option<Vec<BucketReport>>,
}

impl EvalReport {
    pub fn at(&self, cutoff: usize) -> Option<&CutoffMetrics> {
        self.metrics.iter().find(|m| m.cutoff == cutoff)
    }

    pub fn map_at(&self, cutoff: usize) -> f64 {
        self.at(cutoff).map_or(0.0, |m| m.map)
    }

    pub fn ndcg_at(&self, cutoff: usize) -> f64 {
        self.at(cutoff).map_or(0.0, |m| m.ndcg)
    }
}

/// Neumaier-compensated mean.
fn mean(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    let mut n = 0usize;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
        n += 1;
    }
    if n == 0 {
        0.0
    } else {
        (sum + comp) / n as f64
    }
}

/// Per-user metrics: one `(ndcg, map)` pair per cutoff.
type UserScores = Vec<(f64, f64)>;

fn check_consistent(rec: &dyn Recommender, train: &Urm, test: &Urm) -> Result<()> {
    if !train.same_index_space(test) {
        return Err(Error::Consistency("train and test matrices index different users or items".into()));
    }
    if rec.n_users() != train.n_users() || rec.n_items() != train.n_items() {
        return Err(Error::Consistency(format!(
            "recommender covers {}x{}, data is {}x{}",
            rec.n_users(),
            rec.n_items(),
            train.n_users(),
            train.n_items()
        )));
    }
    Ok(())
}

fn score_users(rec: &dyn Recommender, train: &Urm, test: &Urm, cutoffs: &[usize]) -> Result<Vec<Option<UserScores>>> {
    for &k in cutoffs {
        check_k(k)?;
    }
    let max_k = cutoffs.iter().copied().max().unwrap_or(0);
    (0..train.n_users())
        .into_par_iter()
        .map(|u| {
            if test.row_len(u) == 0 {
                return Ok(None);
            }
            let scores = rec.score(u);
            let ranked = top_n(&scores, train.row(u), max_k);
            let relevant: HashSet<u32> = test.row(u).iter().copied().collect();
            cutoffs
                .iter()
                .map(|&k| Ok((ndcg_at_k(&ranked, &relevant, k)?, map_at_k(&ranked, &relevant, k)?)))
                .collect::<Result<Vec<_>>>()
                .map(Some)
        })
        .collect()
}

fn summarize(per_user: &[&UserScores], cutoffs: &[usize]) -> Vec<CutoffMetrics> {
    cutoffs
        .iter()
        .enumerate()
        .map(|(c, &cutoff)| CutoffMetrics {
            cutoff,
            ndcg: mean(per_user.iter().map(|s| s[c].0)),
            map: mean(per_user.iter().map(|s| s[c].1)),
        })
        .collect()
}

/// Ranks every user's unseen items and scores them against the test set.
/// Users without test items do not count.
pub fn evaluate(rec: &dyn Recommender, train: &Urm, test: &Urm, cutoffs: &[usize]) -> Result<EvalReport> {
    check_consistent(rec, train, test)?;
    let per_user = score_users(rec, train, test, cutoffs)?;
    let scored: Vec<&UserScores> = per_user.iter().flatten().collect();
    Ok(EvalReport {
        metrics: summarize(&scored, cutoffs),
        n_users_evaluated: scored.len(),
        buckets: None,
    })
}

/// Like [`evaluate`], plus one sub-report per train-profile-length bucket
/// `[edges[j], edges[j+1])`, the last one open-ended. Users shorter than
/// `edges[0]` are counted in the first bucket.
pub fn evaluate_by_profile_length(
    rec: &dyn Recommender,
    train: &Urm,
    test: &Urm,
    cutoffs: &[usize],
    edges: &[usize],
) -> Result<EvalReport> {
    if edges.is_empty() || edges.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::param("bucket edges must be non-empty and strictly increasing"));
    }
    check_consistent(rec, train, test)?;
    let per_user = score_users(rec, train, test, cutoffs)?;
    let bucket_of = |len: usize| edges.iter().rposition(|&e| len >= e).unwrap_or(0);
    let mut members: Vec<Vec<&UserScores>> = vec![Vec::new(); edges.len()];
    for (u, s) in per_user.iter().enumerate() {
        if let Some(s) = s {
            members[bucket_of(train.row_len(u))].push(s);
        }
    }
    let buckets = members
        .iter()
        .enumerate()
        .map(|(j, m)| BucketReport {
            lower: edges[j],
            upper: edges.get(j + 1).copied(),
            n_users: m.len(),
            metrics: (!m.is_empty()).then(|| summarize(m, cutoffs)),
        })
        .collect();
    let scored: Vec<&UserScores> = per_user.iter().flatten().collect();
    Ok(EvalReport {
        metrics: summarize(&scored, cutoffs),
        n_users_evaluated: scored.len(),
        buckets: Some(buckets),
    })
}

/// Table-shaped CSV: `algorithm,bucket,cutoff,metric,value`.
pub fn reports_to_csv(rows: &[(String, &EvalReport)]) -> String {
    let mut out = String::from("algorithm,bucket,cutoff,metric,value\n");
    let mut emit = |alg: &str, bucket: &str, metrics: &[CutoffMetrics]| {
        for m in metrics {
            let _ = writeln!(out, "{alg},{bucket},{},NDCG,{:.6}", m.cutoff, m.ndcg);
            let _ = writeln!(out, "{alg},{bucket},{},MAP,{:.6}", m.cutoff, m.map);
        }
    };
    for (alg, report) in rows {
        emit(alg, "all", &report.metrics);
        for b in report.buckets.iter().flatten() {
            let label = match b.upper {
                Some(u) => format!("[{}-{})", b.lower, u),
                None => format!("[{}-inf)", b.lower),
            };
            if let Some(m) = &b.metrics {
                emit(alg, &label, m);
            }
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimilarityStats {
    pub mean: f64,
    pub std: f64,
    pub pairs: usize,
}

fn cosine(a: &[f64], b: &[f64], na: f64, nb: f64) -> f64 {
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    (dot / (na * nb)).clamp(-1.0, 1.0)
}

fn row_norms(profiles: &DenseMatrix) -> Vec<f64> {
    (0..profiles.rows())
        .map(|r| profiles.row(r).iter().map(|x| x * x).sum::<f64>().sqrt())
        .collect()
}

/// Mean and standard deviation of pairwise cosine similarity between rows.
/// Every pair is used when there are at most [`MAX_EXACT_PAIRS`], otherwise
/// `sample` seeded random pairs.
pub fn similarity_stats(profiles: &DenseMatrix, sample: usize, seed: u64) -> Result<SimilarityStats> {
    let n = profiles.rows();
    if n < 2 {
        return Err(Error::param("need at least two profiles"));
    }
    let norms = row_norms(profiles);
    let sim = |i: usize, j: usize| cosine(profiles.row(i), profiles.row(j), norms[i], norms[j]);
    let total_pairs = n * (n - 1) / 2;
    let values: Vec<f64> = if total_pairs <= MAX_EXACT_PAIRS {
        (0..n)
            .into_par_iter()
            .flat_map_iter(|i| (i + 1..n).map(move |j| (i, j)))
            .map(|(i, j)| sim(i, j))
            .collect()
    } else {
        let mut rng = seeds::rng(seed, Stream::Similarity);
        (0..sample.max(1))
            .map(|_| {
                let i = rng.gen_range(0..n);
                let mut j = rng.gen_range(0..n - 1);
                if j >= i {
                    j += 1;
                }
                sim(i, j)
            })
            .collect()
    };
    let m = mean(values.iter().copied());
    let var = mean(values.iter().map(|v| (v - m) * (v - m)));
    Ok(SimilarityStats {
        mean: m,
        std: var.sqrt(),
        pairs: values.len(),
    })
}

/// Full row-by-row cosine similarity matrix.
pub fn similarity_matrix(profiles: &DenseMatrix) -> DenseMatrix {
    let n = profiles.rows();
    let norms = row_norms(profiles);
    let mut out = DenseMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            out.set(i, j, cosine(profiles.row(i), profiles.row(j), norms[i], norms[j]));
        }
    }
    out
}

pub fn matrix_to_csv(m: &DenseMatrix) -> String {
    let mut out = String::new();
    for r in 0..m.rows() {
        let line: Vec<String> = m.row(r).iter().map(|v| format!("{v:.6}")).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}
