//! Random hyperparameter search maximizing validation MAP@5.

use std::collections::BTreeMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{SplitBundle, Urm};
use crate::error::{Error, Result};
use crate::model::Mode;
use crate::seeds::{self, Stream};
use crate::training::{holdout_map5, train, DiscKind, TrainConfig, TrainOutcome, BATCH_SIZES};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntRange {
    pub lo: usize,
    pub hi: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RealRange {
    pub lo: f64,
    pub hi: f64,
}

impl IntRange {
    fn sample<R: Rng>(&self, rng: &mut R) -> usize {
        rng.gen_range(self.lo..=self.hi)
    }
}

impl RealRange {
    fn uniform<R: Rng>(&self, rng: &mut R) -> f64 {
        if self.lo == self.hi {
            self.lo
        } else {
            rng.gen_range(self.lo..self.hi)
        }
    }

    fn log_uniform<R: Rng>(&self, rng: &mut R) -> f64 {
        if self.lo == self.hi {
            return self.lo;
        }
        let x = rng.gen_range(self.lo.ln()..self.hi.ln()).exp();
        x.clamp(self.lo, self.hi)
    }
}

/// Domains and priors. Integers and α are uniform, batch size is
/// categorical, learning rates and λ_D are log-uniform.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SearchSpace {
    pub epochs: IntRange,
    pub k: IntRange,
    pub coding_dim: IntRange,
    pub margin: IntRange,
    pub batch_size: Vec<usize>,
    pub alpha: RealRange,
    pub lr_d: RealRange,
    pub lr_g: RealRange,
    pub lambda_d: RealRange,
    pub mode: Mode,
    pub discriminator: DiscKind,
    pub eval_every: usize,
    pub patience: usize,
}

impl Default for SearchSpace {
    fn default() -> Self {
        Self {
            epochs: IntRange { lo: 10, hi: 300 },
            k: IntRange { lo: 1, hi: 250 },
            coding_dim: IntRange { lo: 4, hi: 1024 },
            margin: IntRange { lo: 1, hi: 10 },
            batch_size: BATCH_SIZES.to_vec(),
            alpha: RealRange { lo: 0.01, hi: 0.5 },
            lr_d: RealRange { lo: 1e-4, hi: 1e-2 },
            lr_g: RealRange { lo: 1e-4, hi: 1e-2 },
            lambda_d: RealRange { lo: 1e-6, hi: 1e-4 },
            mode: Mode::User,
            discriminator: DiscKind::Energy,
            eval_every: 5,
            patience: 5,
        }
    }
}

impl SearchSpace {
    /// Checks every bound against the training limits by validating the
    /// two corner configurations.
    pub fn validate(&self) -> Result<()> {
        let ints = [self.epochs, self.k, self.coding_dim, self.margin];
        let reals = [self.alpha, self.lr_d, self.lr_g, self.lambda_d];
        if ints.iter().any(|r| r.lo > r.hi) || reals.iter().any(|r| !(r.lo <= r.hi)) {
            return Err(Error::param("search range with lo > hi"));
        }
        if self.batch_size.is_empty() {
            return Err(Error::param("empty batch size list"));
        }
        for upper in [false, true] {
            let i = |r: &IntRange| if upper { r.hi } else { r.lo };
            let f = |r: &RealRange| if upper { r.hi } else { r.lo };
            for &b in &self.batch_size {
                TrainConfig {
                    epochs_max: i(&self.epochs),
                    k: i(&self.k),
                    coding_dim: i(&self.coding_dim),
                    margin: i(&self.margin) as u32,
                    batch_size: b,
                    alpha: f(&self.alpha),
                    lr_d: f(&self.lr_d),
                    lr_g: f(&self.lr_g),
                    lambda_d: f(&self.lambda_d),
                    ..self.base(0)
                }
                .validate()?;
            }
        }
        Ok(())
    }

    fn base(&self, seed: u64) -> TrainConfig {
        TrainConfig {
            mode: self.mode,
            discriminator: self.discriminator,
            eval_every: self.eval_every,
            patience: self.patience,
            lambda_g: 0.0,
            seed,
            ..TrainConfig::default()
        }
    }

    /// Center of every domain (geometric center for log priors, middle
    /// element of the batch list).
    pub fn midpoint(&self, seed: u64) -> TrainConfig {
        let mid = |r: IntRange| (r.lo + r.hi) / 2;
        let geo = |r: RealRange| (r.lo * r.hi).sqrt();
        TrainConfig {
            epochs_max: mid(self.epochs),
            k: mid(self.k),
            coding_dim: mid(self.coding_dim),
            margin: mid(self.margin) as u32,
            batch_size: self.batch_size[self.batch_size.len() / 2],
            alpha: (self.alpha.lo + self.alpha.hi) / 2.0,
            lr_d: geo(self.lr_d),
            lr_g: geo(self.lr_g),
            lambda_d: geo(self.lambda_d),
            ..self.base(seed)
        }
    }
}

/// Draws every field independently from its prior; the training seed is
/// supplied by the caller.
pub fn sample_config<R: Rng>(space: &SearchSpace, rng: &mut R, seed: u64) -> TrainConfig {
    TrainConfig {
        epochs_max: space.epochs.sample(rng),
        k: space.k.sample(rng),
        coding_dim: space.coding_dim.sample(rng),
        margin: space.margin.sample(rng) as u32,
        batch_size: space.batch_size[rng.gen_range(0..space.batch_size.len())],
        alpha: space.alpha.uniform(rng),
        lr_d: space.lr_d.log_uniform(rng),
        lr_g: space.lr_g.log_uniform(rng),
        lambda_d: space.lambda_d.log_uniform(rng),
        ..space.base(seed)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrialStatus {
    Ok,
    Diverged,
}

/// What an objective reports for one configuration.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Evaluated {
    pub objective: f64,
    /// Epochs actually worth training; the final refit uses this.
    pub epochs_used: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub index: usize,
    pub config: TrainConfig,
    /// `None` for diverged trials, which rank as -inf.
    pub objective: Option<f64>,
    pub epochs_used: usize,
    pub seed: u64,
    pub status: TrialStatus,
    pub seconds: f64,
}

impl TrialRecord {
    pub fn score(&self) -> f64 {
        match (self.status, self.objective) {
            (TrialStatus::Ok, Some(v)) => v,
            _ => f64::NEG_INFINITY,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SearchOptions {
    pub budget: usize,
    pub workers: usize,
    pub base_seed: u64,
    /// Append-only JSON-lines trial log; trials already in it are reused.
    pub log: Option<PathBuf>,
}

/// Config and training seed of trial `index`.
pub fn trial_config(space: &SearchSpace, base_seed: u64, index: usize) -> TrainConfig {
    let seed = seeds::derive(base_seed, index as u64);
    let mut rng = seeds::rng(seed, Stream::Search);
    sample_config(space, &mut rng, seed)
}

fn read_log(path: &Path) -> Result<BTreeMap<usize, TrialRecord>> {
    let mut done = BTreeMap::new();
    if !path.exists() {
        return Ok(done);
    }
    let file = File::open(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    for line in BufReader::new(file).lines() {
        let line = line.map_err(|e| Error::io(path.display().to_string(), e))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: TrialRecord = serde_json::from_str(&line)?;
        done.insert(rec.index, rec);
    }
    Ok(done)
}

/// Runs `budget` trials of an arbitrary objective and returns every record,
/// ordered by index. Divergence marks a trial as diverged; other errors
/// abort the search.
pub fn run_trials<F>(space: &SearchSpace, opts: &SearchOptions, objective: F) -> Result<Vec<TrialRecord>>
where
    F: Fn(&TrainConfig) -> Result<Evaluated> + Sync,
{
    space.validate()?;
    if opts.budget < 1 {
        return Err(Error::param("budget must be at least 1"));
    }
    let mut done = match &opts.log {
        Some(p) => read_log(p)?,
        None => BTreeMap::new(),
    };
    done.retain(|&i, _| i < opts.budget);
    let todo: Vec<usize> = (0..opts.budget).filter(|i| !done.contains_key(i)).collect();
    let sink = match &opts.log {
        Some(p) => Some(Mutex::new(
            OpenOptions::new()
                .create(true)
                .append(true)
                .open(p)
                .map_err(|e| Error::io(p.display().to_string(), e))?,
        )),
        None => None,
    };

    let run_one = |index: usize| -> Result<TrialRecord> {
        let config = trial_config(space, opts.base_seed, index);
        let started = Instant::now();
        let result = objective(&config);
        let seconds = started.elapsed().as_secs_f64();
        let (objective, epochs_used, status) = match result {
            Ok(e) if e.objective.is_finite() => (Some(e.objective), e.epochs_used, TrialStatus::Ok),
            Ok(_) | Err(Error::Divergence { .. }) => (None, 0, TrialStatus::Diverged),
            Err(e) => return Err(e),
        };
        let rec = TrialRecord {
            index,
            seed: config.seed,
            config,
            objective,
            epochs_used,
            status,
            seconds,
        };
        if let Some(sink) = &sink {
            let line = serde_json::to_string(&rec)?;
            let mut f = sink.lock().expect("trial log lock");
            writeln!(f, "{line}").map_err(|e| Error::io("trial log", e))?;
        }
        Ok(rec)
    };

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.workers.max(1))
        .build()
        .map_err(|e| Error::param(format!("worker pool: {e}")))?;
    let fresh: Vec<TrialRecord> = pool.install(|| todo.par_iter().map(|&i| run_one(i)).collect::<Result<_>>())?;
    for rec in fresh {
        done.insert(rec.index, rec);
    }
    Ok(done.into_values().collect())
}

/// Highest-scoring ok trial; ties go to the lower index.
pub fn best_trial(trials: &[TrialRecord]) -> Option<&TrialRecord> {
    trials
        .iter()
        .filter(|t| t.status == TrialStatus::Ok)
        .fold(None, |best: Option<&TrialRecord>, t| match best {
            Some(b) if b.score() >= t.score() => Some(b),
            _ => Some(t),
        })
}

/// [`best_trial`], or a search failure naming the trial log.
pub fn pick_winner<'a>(trials: &'a [TrialRecord], log: Option<&Path>) -> Result<&'a TrialRecord> {
    best_trial(trials).ok_or_else(|| {
        let log = log.map_or("<no log>".to_string(), |p| p.display().to_string());
        Error::SearchFailed(format!("all {} trials diverged; see {log}", trials.len()))
    })
}

/// Train on `fit`, early-stop on `earlystop`, score MAP@5 on `holdout`.
pub fn ganmf_objective(fit: &Urm, earlystop: &Urm, holdout: &Urm, config: &TrainConfig) -> Result<(Evaluated, TrainOutcome)> {
    let out = train(fit, earlystop, config)?;
    let objective = holdout_map5(&out.checkpoint.generator, config.mode, fit, holdout)?.unwrap_or(0.0);
    let evaluated = Evaluated {
        objective,
        epochs_used: out.history.best_epoch,
    };
    Ok((evaluated, out))
}

#[derive(Clone, Debug)]
pub struct SearchOutcome {
    pub trials: Vec<TrialRecord>,
    pub best: TrialRecord,
    /// The winning trial retrained on the subtrain split (reproduces its
    /// validation objective).
    pub winner: TrainOutcome,
    /// The winning config retrained on the full train split.
    pub refit: TrainOutcome,
}

/// Full protocol on a split bundle: trials train on subtrain with early
/// stopping on the early-stop set and are scored on validation; the winner
/// is replayed and then refit on train for the number of epochs it used.
pub fn random_search(space: &SearchSpace, data: &SplitBundle, opts: &SearchOptions) -> Result<SearchOutcome> {
    let trials = run_trials(space, opts, |cfg| {
        ganmf_objective(&data.subtrain, &data.earlystop, &data.validation, cfg).map(|(e, _)| e)
    })?;
    let best = pick_winner(&trials, opts.log.as_deref())?.clone();
    let (replayed, winner) = ganmf_objective(&data.subtrain, &data.earlystop, &data.validation, &best.config)?;
    if Some(replayed.objective) != best.objective {
        return Err(Error::Consistency(format!(
            "trial {} replayed to {} instead of {:?}",
            best.index, replayed.objective, best.objective
        )));
    }
    let refit_config = TrainConfig {
        epochs_max: best.epochs_used,
        ..best.config.clone()
    };
    let no_stop = data.train.with_rows(vec![Vec::new(); data.train.n_users()])?;
    let refit = train(&data.train, &no_stop, &refit_config)?;
    Ok(SearchOutcome {
        trials,
        best,
        winner,
        refit,
    })
}
