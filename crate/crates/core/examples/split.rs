//! Per-user train/test split plus the inner validation and early-stopping
//! sets, saved to disk and reloaded.

use ganmf::dataset::{split, synthetic::random_urm, SplitBundle, TEST_RATIO};

pub fn run_example() -> ganmf::Result<()> {
    let urm = random_urm(300, 120, 0.08, 2, 7);
    let bundle = split(&urm, TEST_RATIO, 42)?;
    bundle
        .check_invariants(&urm)
        .map_err(ganmf::Error::Consistency)?;

    println!("full        {}", urm.stats());
    for (name, part) in [
        ("train", &bundle.train),
        ("test", &bundle.test),
        ("subtrain", &bundle.subtrain),
        ("validation", &bundle.validation),
        ("earlystop", &bundle.earlystop),
    ] {
        println!("{name:<11} {}", part.stats());
    }

    let dir = tempfile::tempdir().map_err(|e| ganmf::Error::io("temporary directory", e))?;
    bundle.save(dir.path())?;
    assert_eq!(SplitBundle::load(dir.path())?, bundle);
    println!("saved and reloaded from {}", dir.path().display());
    Ok(())
}

#[allow(dead_code)]
fn main() {
    if let Err(e) = run_example() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
