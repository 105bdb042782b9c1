//! The four reference recommenders on a noisy community dataset.

use ganmf::baselines::{ItemKnn, P3Alpha, PureSvd, Recommender, TopPopular};
use ganmf::dataset::{split, synthetic::cold_start_urm, TEST_RATIO};
use ganmf::evaluation::{evaluate, reports_to_csv};

pub fn run_example() -> ganmf::Result<()> {
    let urm = cold_start_urm(4, 60, 40, 20, 3, 15, 5);
    let bundle = split(&urm, TEST_RATIO, 3)?;
    let train = &bundle.train;

    let models: Vec<(&str, Box<dyn Recommender>)> = vec![
        ("toppop", Box::new(TopPopular::fit(train))),
        ("puresvd", Box::new(PureSvd::fit(train, 8, 0)?)),
        ("itemknn", Box::new(ItemKnn::fit(train, 50, 5.0)?)),
        ("p3alpha", Box::new(P3Alpha::fit(train, 50, 0.8)?)),
    ];
    let mut reports = Vec::new();
    for (name, model) in &models {
        let r = evaluate(model.as_ref(), train, &bundle.test, &[5, 20])?;
        println!("{name:<8} NDCG@5 {:.4}  MAP@5 {:.4}", r.ndcg_at(5), r.map_at(5));
        reports.push((name.to_string(), r));
    }
    let rows: Vec<(String, &_)> = reports.iter().map(|(n, r)| (n.clone(), r)).collect();
    print!("\n{}", reports_to_csv(&rows));
    Ok(())
}

#[allow(dead_code)]
fn main() {
    if let Err(e) = run_example() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
