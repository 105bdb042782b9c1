//! Drives the `ganmf` binary.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

/// Timings make the search trial log differ run to run; everything else
/// must be byte-identical.
pub const NONDETERMINISTIC: &[&str] = &["trials.jsonl"];

pub fn ganmf(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ganmf"))
        .args(args)
        .env("NO_COLOR", "1")
        .output()
        .expect("spawning ganmf")
}

pub fn ok(args: &[&str]) -> String {
    let out = ganmf(args);
    assert!(
        out.status.success(),
        "ganmf {args:?} failed:\n{}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

/// Every file under `dir`, keyed by relative path.
pub fn snapshot(dir: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in std::fs::read_dir(&d).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else if !NONDETERMINISTIC.iter().any(|n| p.ends_with(n)) {
                out.insert(p.strip_prefix(dir).unwrap().to_path_buf(), std::fs::read(&p).unwrap());
            }
        }
    }
    out
}

pub const ML1M_SAMPLE: &str = "\
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

/// Experiment config over the two-community dataset, writing to `out`.
pub fn block_config(out: &Path, model: &str, epochs: usize) -> String {
    format!(
        r#"out = "{}"
model = "{model}"

[dataset]
name = "two-blocks"
format = "blocks"
blocks = {{ blocks = 2, users_per_block = 100, items_per_block = 50 }}

[train]
epochs_max = {epochs}
k = 8
coding_dim = 16
batch_size = 64

[evaluation]
similarity_sample = 5000

[search]
epochs = {{ lo = 5, hi = 15 }}
k = {{ lo = 2, hi = 12 }}
coding_dim = {{ lo = 4, hi = 24 }}
batch_size = [64, 128]
"#,
        out.display()
    )
}

/// Runs every command twice into the same output locations and returns the
/// names of commands whose outputs differed.
pub fn nondeterministic_commands(root: &Path) -> Vec<String> {
    use ganmf::dataset::synthetic::two_block_urm;

    let data = root.join("data");
    std::fs::create_dir_all(&data).unwrap();
    std::fs::write(data.join("ratings.dat"), ML1M_SAMPLE).unwrap();
    two_block_urm().save(&data.join("blocks.urm")).unwrap();
    let cfg = data.join("exp.toml");
    let run_dir = root.join("run");
    std::fs::write(&cfg, block_config(&run_dir, "ganmf-u", 15)).unwrap();
    let s = |p: &Path| p.display().to_string();

    let r = |name: &str| root.join(name);
    let commands: Vec<(&str, PathBuf, Vec<String>)> = vec![
        (
            "ingest",
            r("ingest"),
            vec!["ingest".into(), "--dataset".into(), "ml1m".into(), "--input".into(), s(&data.join("ratings.dat")), "--out".into(), s(&r("ingest").join("ml.urm"))],
        ),
        (
            "split",
            r("split"),
            vec!["split".into(), "--urm".into(), s(&data.join("blocks.urm")), "--seed".into(), "3".into(), "--out".into(), s(&r("split"))],
        ),
        ("train", run_dir.clone(), vec!["train".into(), "--config".into(), s(&cfg)]),
        (
            "evaluate checkpoint",
            r("eval-ckpt"),
            vec!["evaluate".into(), "--checkpoint".into(), s(&run_dir.join("model.ckpt")), "--split".into(), s(&run_dir.join("split")), "--buckets".into(), "--out".into(), s(&r("eval-ckpt"))],
        ),
        (
            "evaluate baselines",
            r("eval-base"),
            vec!["evaluate".into(), "--config".into(), s(&cfg), "--baseline".into(), "puresvd".into(), "--out".into(), s(&r("eval-base"))],
        ),
        (
            "search",
            r("search"),
            vec!["search".into(), "--config".into(), s(&cfg), "--budget".into(), "3".into(), "--workers".into(), "2".into(), "--out".into(), s(&r("search"))],
        ),
        (
            "ablate fm-sweep",
            r("fm"),
            vec!["ablate".into(), "--which".into(), "fm-sweep".into(), "--config".into(), s(&cfg), "--out".into(), s(&r("fm"))],
        ),
        (
            "ablate bin-disc",
            r("bd"),
            vec!["ablate".into(), "--which".into(), "bin-disc".into(), "--config".into(), s(&cfg), "--out".into(), s(&r("bd"))],
        ),
        (
            "simstats",
            r("sim"),
            vec!["simstats".into(), "--checkpoint".into(), s(&run_dir.join("model.ckpt")), "--sample".into(), "500".into(), "--out".into(), s(&r("sim"))],
        ),
    ];

    let mut bad = Vec::new();
    for (name, out_dir, args) in &commands {
        let args: Vec<&str> = args.iter().map(String::as_str).collect();
        ok(&args);
        let first = snapshot(out_dir);
        if *name != "train" {
            std::fs::remove_dir_all(out_dir).unwrap();
        } else {
            // later commands read the checkpoint; rerun in place
            for f in first.keys() {
                std::fs::remove_file(out_dir.join(f)).unwrap();
            }
        }
        ok(&args);
        let second = snapshot(out_dir);
        if first.is_empty() || first != second {
            bad.push(name.to_string());
        }
    }
    bad
}
