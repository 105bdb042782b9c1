//! Per-user random holdout splits.
//!
//! The full matrix is split into train and test; train is further split into
//! a sub-train part, a validation part (hyperparameter selection) and an
//! early-stopping part. All five matrices share the full matrix's index
//! space.

use std::path::Path;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::urm::Urm;
use crate::error::{Error, Result};
use crate::seeds::{self, Stream};

/// Fraction of each user's train items moved into validation, and the
/// same again into early stopping.
pub const INNER_RATIO: f64 = 0.1;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SplitBundle {
    pub train: Urm,
    pub test: Urm,
    pub subtrain: Urm,
    pub validation: Urm,
    pub earlystop: Urm,
    pub seed: u64,
}

#[derive(Serialize, Deserialize)]
struct SplitManifest {
    seed: u64,
    test_ratio: f64,
    inner_ratio: f64,
}

/// `ceil(ratio * n)` without the float noise that turns `0.2 * 10` into 3.
fn ratio_count(ratio: f64, n: usize) -> usize {
    ((ratio * n as f64) - 1e-9).ceil().max(0.0) as usize
}

pub fn split(urm: &Urm, test_ratio: f64, seed: u64) -> Result<SplitBundle> {
    if !(0.0..1.0).contains(&test_ratio) || test_ratio == 0.0 {
        return Err(Error::param(format!("test ratio {test_ratio} outside (0, 1)")));
    }
    let mut outer = seeds::rng(seed, Stream::Split);
    let mut inner = seeds::rng(seed, Stream::InnerSplit);
    let n = urm.n_users();
    let mut train = Vec::with_capacity(n);
    let mut test = Vec::with_capacity(n);
    let mut subtrain = Vec::with_capacity(n);
    let mut validation = Vec::with_capacity(n);
    let mut earlystop = Vec::with_capacity(n);
    for u in 0..n {
        let len = urm.row_len(u);
        if len < 2 {
            return Err(Error::Precondition(format!(
                "user {} has {len} interaction(s), at least 2 are needed",
                urm.user_ids()[u]
            )));
        }
        let mut items = urm.row(u).to_vec();
        items.shuffle(&mut outer);
        let n_test = ratio_count(test_ratio, len).clamp(1, len - 1);
        test.push(items[..n_test].to_vec());
        let mut tr = items[n_test..].to_vec();

        tr.shuffle(&mut inner);
        let k = ratio_count(INNER_RATIO, tr.len()).max(1);
        if tr.len() > 2 * k {
            validation.push(tr[..k].to_vec());
            earlystop.push(tr[k..2 * k].to_vec());
            subtrain.push(tr[2 * k..].to_vec());
        } else {
            validation.push(Vec::new());
            earlystop.push(Vec::new());
            subtrain.push(tr.clone());
        }
        train.push(tr);
    }
    Ok(SplitBundle {
        train: urm.with_rows(train)?,
        test: urm.with_rows(test)?,
        subtrain: urm.with_rows(subtrain)?,
        validation: urm.with_rows(validation)?,
        earlystop: urm.with_rows(earlystop)?,
        seed,
    })
}

impl SplitBundle {
    const PARTS: [&'static str; 5] = ["train", "test", "subtrain", "validation", "earlystop"];

    fn parts(&self) -> [&Urm; 5] {
        [&self.train, &self.test, &self.subtrain, &self.validation, &self.earlystop]
    }

    /// Writes `<part>.urm` for every part plus `split.json`.
    pub fn save(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(format!("creating {}", dir.display()), e))?;
        for (name, urm) in Self::PARTS.iter().zip(self.parts()) {
            urm.save(&dir.join(format!("{name}.urm")))?;
        }
        let manifest = SplitManifest {
            seed: self.seed,
            test_ratio: 0.2,
            inner_ratio: INNER_RATIO,
        };
        let path = dir.join("split.json");
        std::fs::write(&path, serde_json::to_string_pretty(&manifest)? + "\n")
            .map_err(|e| Error::io(format!("writing {}", path.display()), e))
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let path = dir.join("split.json");
        let text = std::fs::read_to_string(&path).map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
        let manifest: SplitManifest = serde_json::from_str(&text)?;
        let load = |name: &str| Urm::load(&dir.join(format!("{name}.urm")));
        let bundle = SplitBundle {
            train: load("train")?,
            test: load("test")?,
            subtrain: load("subtrain")?,
            validation: load("validation")?,
            earlystop: load("earlystop")?,
            seed: manifest.seed,
        };
        if !bundle.parts().iter().all(|p| p.same_index_space(&bundle.train)) {
            return Err(Error::Consistency(format!("split parts in {} disagree on ids", dir.display())));
        }
        Ok(bundle)
    }

    /// Checks every structural guarantee of a split against the matrix it
    /// came from. Returns a description of the first violation.
    pub fn check_invariants(&self, full: &Urm) -> std::result::Result<(), String> {
        for u in 0..full.n_users() {
            let tr = self.train.row(u);
            let te = self.test.row(u);
            if tr.is_empty() || te.is_empty() {
                return Err(format!("user {u}: train {} test {}", tr.len(), te.len()));
            }
            let mut union: Vec<u32> = tr.iter().chain(te).copied().collect();
            union.sort_unstable();
            let len = union.len();
            union.dedup();
            if union.len() != len {
                return Err(format!("user {u}: train and test overlap"));
            }
            if union != full.row(u) {
                return Err(format!("user {u}: train and test do not cover the full row"));
            }
            let mut inner: Vec<u32> = self
                .subtrain
                .row(u)
                .iter()
                .chain(self.validation.row(u))
                .chain(self.earlystop.row(u))
                .copied()
                .collect();
            inner.sort_unstable();
            let len = inner.len();
            inner.dedup();
            if inner.len() != len {
                return Err(format!("user {u}: inner parts overlap"));
            }
            if inner != tr {
                return Err(format!("user {u}: inner parts do not cover train"));
            }
            if self.subtrain.row(u).is_empty() {
                return Err(format!("user {u}: empty subtrain"));
            }
        }
        Ok(())
    }
}
