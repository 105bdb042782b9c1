//! Straight-from-the-definition reimplementations used as oracles.

use std::collections::HashSet;

use ganmf::baselines::Recommender;
use ganmf::dataset::Urm;

pub fn ndcg(ranked: &[u32], relevant: &HashSet<u32>, k: usize) -> f64 {
    if relevant.is_empty() {
        return 0.0;
    }
    let mut dcg = 0.0;
    for (p, item) in ranked.iter().take(k).enumerate() {
        if relevant.contains(item) {
            dcg += 1.0 / ((p + 2) as f64).log2();
        }
    }
    let mut idcg = 0.0;
    for p in 0..k.min(relevant.len()) {
        idcg += 1.0 / ((p + 2) as f64).log2();
    }
    dcg / idcg
}

pub fn average_precision(ranked: &[u32], relevant: &HashSet<u32>, k: usize) -> f64 {
    if relevant.is_empty() {
        return 0.0;
    }
    let mut hits = 0.0;
    let mut sum = 0.0;
    for (p, item) in ranked.iter().take(k).enumerate() {
        if relevant.contains(item) {
            hits += 1.0;
            sum += hits / (p + 1) as f64;
        }
    }
    sum / k.min(relevant.len()) as f64
}

/// Full sort of unseen items by (score desc, id asc).
pub fn ranking(scores: &[f64], seen: &[u32], n: usize) -> Vec<u32> {
    let mut cand: Vec<(f64, u32)> = (0..scores.len() as u32)
        .filter(|i| !seen.contains(i))
        .map(|i| (scores[i as usize], i))
        .collect();
    cand.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1)));
    cand.into_iter().take(n).map(|c| c.1).collect()
}

/// Mean NDCG@k and MAP@k over users with test items, summed naively.
pub fn evaluate(rec: &dyn Recommender, train: &Urm, test: &Urm, k: usize) -> (f64, f64, usize) {
    let (mut n, mut m, mut users) = (0.0, 0.0, 0);
    for u in 0..train.n_users() {
        if test.row_len(u) == 0 {
            continue;
        }
        let relevant: HashSet<u32> = test.row(u).iter().copied().collect();
        let ranked = ranking(&rec.score(u), train.row(u), k);
        n += ndcg(&ranked, &relevant, k);
        m += average_precision(&ranked, &relevant, k);
        users += 1;
    }
    (n / users as f64, m / users as f64, users)
}
