//! Parse a ratings file, build the binary matrix, print its statistics and
//! round-trip the cache.
//!
//! ```text
//! cargo run --example ingest -- ml1m path/to/ratings.dat
//! ```
//!
//! Without arguments a small file in the MovieLens layout is written to a
//! temporary directory and used instead.

use std::path::PathBuf;

use ganmf::dataset::{build_urm, DatasetFormat, Urm, MIN_INTERACTIONS};

const SAMPLE: &str = "\
1::10::5::978300760
1::11::3::978302109
1::12::4::978301968
2::10::4::978300275
2::13::5::978824291
3::11::2::978824291
3::13::4::978300760
3::12::1::978300760
4::10::5::978300760
";

pub fn run_example() -> ganmf::Result<()> {
    run(&[])
}

fn run(args: &[String]) -> ganmf::Result<()> {
    let scratch = tempfile::tempdir().map_err(|e| ganmf::Error::io("temporary directory", e))?;
    let (format, path) = match args {
        [fmt, path] => {
            let format = match fmt.as_str() {
                "ml1m" => DatasetFormat::MovieLens1M,
                "hetrec" => DatasetFormat::Hetrec,
                "lastfm" => DatasetFormat::Lastfm,
                other => return Err(ganmf::Error::param(format!("unknown format {other}"))),
            };
            (format, PathBuf::from(path))
        }
        _ => {
            let path = scratch.path().join("ratings.dat");
            std::fs::write(&path, SAMPLE).map_err(|e| ganmf::Error::io("writing sample", e))?;
            (DatasetFormat::MovieLens1M, path)
        }
    };

    let log = format.parse(&path)?;
    println!("{} raw interactions from {}", log.len(), path.display());
    let urm = build_urm(&log, MIN_INTERACTIONS)?;
    // interactions users items sparsity
    println!("{}", urm.stats());

    let cache = scratch.path().join("data.urm");
    urm.save(&cache)?;
    let back = Urm::load(&cache)?;
    assert_eq!(back, urm);
    println!("user 0 is raw id {:?} with items {:?}", urm.user_ids()[0], urm.row(0));
    Ok(())
}

#[allow(dead_code)]
fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    if let Err(e) = run(&args) {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
