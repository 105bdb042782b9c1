use ganmf::baselines::{randomized_svd, ItemKnn, P3Alpha, PureSvd, Recommender, TopPopular};
use ganmf::dataset::synthetic::random_urm;
use ganmf::dataset::Urm;
use nalgebra::{DMatrix, SymmetricEigen};

fn dense(urm: &Urm) -> DMatrix<f64> {
    let d = urm.to_dense();
    DMatrix::from_row_slice(d.rows(), d.cols(), d.data())
}

/// Singular values as square roots of the Gram matrix eigenvalues,
/// descending.
pub fn gram_singular_values(urm: &Urm) -> Vec<f64> {
    let a = dense(urm);
    let eig = SymmetricEigen::new(a.transpose() * &a);
    let mut s: Vec<f64> = eig.eigenvalues.iter().map(|l| l.max(0.0).sqrt()).collect();
    s.sort_by(|x, y| y.total_cmp(x));
    s
}

#[test]
fn singular_values_match_gram_oracle() {
    for seed in 0..10 {
        let urm = random_urm(8, 6, 0.5, 2, seed);
        let want = gram_singular_values(&urm);
        for k in [1, 3, 6] {
            let got = randomized_svd(&urm, k, seed).unwrap().singular_values;
            for (g, w) in got.iter().zip(&want) {
                let rel = (g - w).abs() / w.abs().max(1e-300);
                assert!(rel < 1e-6, "seed {seed} k {k}: {g} vs {w}");
            }
        }
    }
}

#[test]
fn svd_factors_are_orthonormal() {
    let urm = random_urm(40, 25, 0.2, 2, 3);
    let svd = randomized_svd(&urm, 5, 0).unwrap();
    for m in [&svd.u, &svd.v] {
        let g = DMatrix::from_row_slice(m.rows(), m.cols(), m.data());
        let gram = g.transpose() * &g;
        assert!((gram - DMatrix::identity(5, 5)).abs().max() < 1e-9);
    }
}

#[test]
fn pure_svd_scores_are_reconstruction_rows() {
    let urm = random_urm(12, 10, 0.3, 2, 4);
    let svd = randomized_svd(&urm, 4, 7).unwrap();
    let rec = PureSvd::fit(&urm, 4, 7).unwrap();
    let full = svd.reconstruct().unwrap();
    for u in 0..12 {
        for (i, s) in rec.score(u).into_iter().enumerate() {
            assert!((s - full.get(u, i)).abs() < 1e-12);
        }
    }
}

#[test]
fn cosine_matches_dense_formula() {
    let urm = random_urm(25, 15, 0.3, 2, 5);
    let a = dense(&urm);
    let shrink = 3.0;
    let co = a.transpose() * &a;
    let knn = ItemKnn::fit(&urm, 15, shrink).unwrap().similarity.to_dense();
    for i in 0..15 {
        for j in 0..15 {
            let want = if i == j || co[(i, j)] == 0.0 {
                0.0
            } else {
                co[(i, j)] / (co[(i, i)].sqrt() * co[(j, j)].sqrt() + shrink)
            };
            assert!((knn.get(i, j) - want).abs() < 1e-12);
        }
    }
}

#[test]
fn p3alpha_matches_dense_formula() {
    let urm = random_urm(25, 15, 0.3, 2, 6);
    let a = dense(&urm);
    let alpha = 0.6;
    let p_ui = DMatrix::from_fn(25, 15, |u, i| {
        let deg = a.row(u).sum();
        if a[(u, i)] > 0.0 {
            (1.0 / deg).powf(alpha)
        } else {
            0.0
        }
    });
    let p_iu = DMatrix::from_fn(15, 25, |i, u| {
        let deg = a.column(i).sum();
        if a[(u, i)] > 0.0 {
            (1.0 / deg).powf(alpha)
        } else {
            0.0
        }
    });
    let s = &p_iu * &p_ui;
    let got = P3Alpha::fit(&urm, 15, alpha).unwrap().similarity.to_dense();
    for i in 0..15 {
        for j in 0..15 {
            let want = if i == j { 0.0 } else { s[(i, j)] };
            assert!((got.get(i, j) - want).abs() < 1e-12);
        }
    }
}

#[test]
fn baselines_are_deterministic() {
    let urm = random_urm(30, 20, 0.2, 2, 7);
    let fits = || -> Vec<Box<dyn Recommender>> {
        vec![
            Box::new(TopPopular::fit(&urm)),
            Box::new(PureSvd::fit(&urm, 5, 1).unwrap()),
            Box::new(ItemKnn::fit(&urm, 5, 1.0).unwrap()),
            Box::new(P3Alpha::fit(&urm, 5, 0.5).unwrap()),
        ]
    };
    for (a, b) in fits().iter().zip(fits().iter()) {
        for u in 0..30 {
            assert_eq!(a.score(u), b.score(u));
        }
    }
}
