use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;

use super::config::{BaselineParams, ExperimentConfig, ModelKind};
use super::{Ablation, Command, Target};
use crate::baselines::{ItemKnn, P3Alpha, PureSvd, Recommender, TopPopular};
use crate::dataset::{build_urm, split, DatasetFormat, SplitBundle, Urm, MIN_INTERACTIONS, TEST_RATIO};
use crate::error::{Error, Result};
use crate::evaluation::{
    evaluate, evaluate_by_profile_length, matrix_to_csv, reports_to_csv, similarity_matrix, similarity_stats,
    EvalReport, SimilarityStats,
};
use crate::model::Checkpoint;
use crate::search::{random_search, SearchOptions, SearchSpace, TrialStatus};
use crate::training::{generated_user_profiles, train_with_log, DiscKind, GeneratorRecommender, TrainConfig, TrainOutcome};

pub(super) fn dispatch(cmd: Command) -> Result<()> {
    match cmd {
        Command::Ingest { dataset, input, out } => ingest(dataset, &input, &out),
        Command::Split { urm, seed, out } => split_cmd(&urm, seed, &out),
        Command::Train {
            config,
            out,
            seed,
            epochs,
        } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            if let Some(s) = seed {
                cfg.train.seed = s;
            }
            if let Some(e) = epochs {
                cfg.train.epochs_max = e;
            }
            if let Some(o) = out {
                cfg.out = o;
            }
            cfg.resolve()?;
            train_cmd(&cfg)
        }
        Command::Evaluate {
            config,
            checkpoint,
            baseline,
            split,
            cutoffs,
            buckets,
            target,
            out,
        } => {
            let cfg = config.as_deref().map(ExperimentConfig::load).transpose()?;
            let source = match checkpoint {
                Some(p) => Source::Checkpoint(p),
                None => Source::Baseline(baseline.expect("clap requires one of the two")),
            };
            evaluate_cmd(cfg, source, split, cutoffs, buckets, target, out)
        }
        Command::Search {
            config,
            space,
            budget,
            workers,
            seed,
            out,
        } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            if let Some(p) = space {
                let text = read_text(&p)?;
                cfg.search = toml::from_str::<SearchSpace>(&text).map_err(|e| Error::Format(format!("{}: {e}", p.display())))?;
            }
            if let Some(s) = seed {
                cfg.train.seed = s;
            }
            if let Some(o) = out {
                cfg.out = o;
            }
            cfg.resolve()?;
            search_cmd(&cfg, budget, workers)
        }
        Command::Ablate { which, config, out } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            if let Some(o) = out {
                cfg.out = o;
            }
            cfg.resolve()?;
            ablate_cmd(&cfg, which)
        }
        Command::Simstats {
            checkpoint,
            sample,
            seed,
            matrix_users,
            out,
        } => simstats_cmd(&checkpoint, sample, seed, matrix_users, &out),
    }
}

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(format!("reading {}", path.display()), e))
}

fn write(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(format!("creating {}", dir.display()), e))?;
    }
    std::fs::write(path, contents).map_err(|e| Error::io(format!("writing {}", path.display()), e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    write(path, serde_json::to_string_pretty(value)? + "\n")
}

fn echo<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    write(path, toml::to_string(value).map_err(|e| Error::Format(format!("echoing settings: {e}")))?)
}

fn echo_config(cfg: &ExperimentConfig) -> Result<()> {
    write(&cfg.out.join("config.toml"), cfg.to_toml()?)
}

fn ingest(format: DatasetFormat, input: &Path, out: &Path) -> Result<()> {
    #[derive(Serialize)]
    struct Echo<'a> {
        command: &'a str,
        dataset: &'a str,
        input: &'a Path,
        out: &'a Path,
        min_interactions: usize,
    }
    let urm = build_urm(&format.parse(input)?, MIN_INTERACTIONS)?;
    write(out, urm.to_bytes())?;
    echo(
        &out.with_extension("toml"),
        &Echo {
            command: "ingest",
            dataset: format.tag(),
            input,
            out,
            min_interactions: MIN_INTERACTIONS,
        },
    )?;
    println!("{}", urm.stats());
    Ok(())
}

fn split_cmd(urm_path: &Path, seed: u64, out: &Path) -> Result<()> {
    #[derive(Serialize)]
    struct Echo<'a> {
        command: &'a str,
        urm: &'a Path,
        seed: u64,
        test_ratio: f64,
    }
    let urm = Urm::load(urm_path)?;
    let bundle = split(&urm, TEST_RATIO, seed)?;
    bundle.save(out)?;
    echo(
        &out.join("split.toml"),
        &Echo {
            command: "split",
            urm: urm_path,
            seed,
            test_ratio: TEST_RATIO,
        },
    )?;
    println!("train {}", bundle.train.stats());
    println!("test  {}", bundle.test.stats());
    Ok(())
}

fn bundle_from(cfg: &ExperimentConfig) -> Result<SplitBundle> {
    split(&cfg.dataset.load()?, TEST_RATIO, cfg.split.seed)
}

fn adversarial_config(cfg: &ExperimentConfig) -> Result<&TrainConfig> {
    match cfg.model.adversarial() {
        Some(_) => Ok(&cfg.train),
        None => Err(Error::param(format!(
            "model '{}' is a baseline; baselines are fit by `evaluate --baseline`",
            cfg.model.name()
        ))),
    }
}

/// Fits on train minus the early-stopping set and stops on the latter.
fn fit_adversarial(config: &TrainConfig, bundle: &SplitBundle) -> Result<(TrainOutcome, String)> {
    let fit = bundle.train.without(&bundle.earlystop)?;
    let mut log = String::new();
    let mut line_err = None;
    let out = train_with_log(&fit, &bundle.earlystop, config, |rec| match serde_json::to_string(rec) {
        Ok(line) => {
            log.push_str(&line);
            log.push('\n');
        }
        Err(e) => line_err = Some(e),
    })?;
    if let Some(e) = line_err {
        return Err(e.into());
    }
    Ok((out, log))
}

fn train_cmd(cfg: &ExperimentConfig) -> Result<()> {
    let config = adversarial_config(cfg)?;
    let bundle = bundle_from(cfg)?;
    let started = Instant::now();
    let (out, log) = fit_adversarial(config, &bundle)?;
    bundle.save(&cfg.out.join("split"))?;
    out.checkpoint.save(&cfg.out.join("model.ckpt"))?;
    write(&cfg.out.join("train_log.jsonl"), log)?;
    echo_config(cfg)?;
    println!(
        "{}: {} epochs, best epoch {}, {:.1}s",
        cfg.model.name(),
        out.history.epochs.len(),
        out.history.best_epoch,
        started.elapsed().as_secs_f64()
    );
    Ok(())
}

pub(super) enum Source {
    Checkpoint(PathBuf),
    Baseline(ModelKind),
}

fn fit_baseline(kind: ModelKind, params: &BaselineParams, urm: &Urm, seed: u64) -> Result<Box<dyn Recommender>> {
    Ok(match kind {
        ModelKind::Toppop => Box::new(TopPopular::fit(urm)),
        ModelKind::Puresvd => Box::new(PureSvd::fit(urm, params.svd_k, seed)?),
        ModelKind::Itemknn => Box::new(ItemKnn::fit(urm, params.knn_neighborhood, params.knn_shrink)?),
        ModelKind::P3alpha => Box::new(P3Alpha::fit(urm, params.p3_neighborhood, params.p3_alpha)?),
        other => {
            return Err(Error::param(format!(
                "'{}' is not a baseline; evaluate its checkpoint instead",
                other.name()
            )))
        }
    })
}

fn evaluate_cmd(
    cfg: Option<ExperimentConfig>,
    source: Source,
    split_dir: Option<PathBuf>,
    cutoffs: Option<Vec<usize>>,
    buckets: bool,
    target: Target,
    out: Option<PathBuf>,
) -> Result<()> {
    #[derive(Serialize)]
    struct Echo<'a> {
        command: &'a str,
        recommender: String,
        split: String,
        target: Target,
        cutoffs: &'a [usize],
        #[serde(skip_serializing_if = "Option::is_none")]
        bucket_edges: Option<&'a [usize]>,
        #[serde(skip_serializing_if = "Option::is_none")]
        baseline: Option<&'a BaselineParams>,
        #[serde(skip_serializing_if = "Option::is_none")]
        config: Option<&'a ExperimentConfig>,
    }
    let out = out
        .or_else(|| cfg.as_ref().map(|c| c.out.clone()))
        .ok_or_else(|| Error::param("evaluate needs --out or a config"))?;
    let defaults = super::config::EvaluationParams::default();
    let eval = cfg.as_ref().map_or(&defaults, |c| &c.evaluation);
    let cutoffs = cutoffs.unwrap_or_else(|| eval.cutoffs.clone());
    if cutoffs.is_empty() || cutoffs.contains(&0) {
        return Err(Error::param("cutoffs must be positive"));
    }
    let (bundle, split_desc) = match (&split_dir, &cfg) {
        (Some(dir), _) => (SplitBundle::load(dir)?, dir.display().to_string()),
        (None, Some(c)) => (bundle_from(c)?, format!("{} seed {}", c.dataset.name, c.split.seed)),
        (None, None) => return Err(Error::param("evaluate needs --split or a config")),
    };
    let (exclude, holdout) = match target {
        Target::Test => (&bundle.train, &bundle.test),
        Target::Validation => (&bundle.subtrain, &bundle.validation),
    };
    let default_params = BaselineParams::default();
    let params = cfg.as_ref().map_or(&default_params, |c| &c.baseline);
    let (rec, name, is_baseline): (Box<dyn Recommender>, String, bool) = match &source {
        Source::Checkpoint(p) => {
            let ck = Checkpoint::load(p)?;
            let name = ck.mode_label();
            (
                Box::new(GeneratorRecommender {
                    generator: ck.generator,
                    mode: ck.mode,
                }),
                name,
                false,
            )
        }
        Source::Baseline(kind) => (fit_baseline(*kind, params, exclude, bundle.seed)?, kind.name().to_string(), true),
    };
    let report = if buckets {
        evaluate_by_profile_length(rec.as_ref(), exclude, holdout, &cutoffs, &eval.bucket_edges)?
    } else {
        evaluate(rec.as_ref(), exclude, holdout, &cutoffs)?
    };
    write_json(&out.join("report.json"), &report)?;
    write(&out.join("report.csv"), reports_to_csv(&[(name.clone(), &report)]))?;
    echo(
        &out.join("evaluate.toml"),
        &Echo {
            command: "evaluate",
            recommender: match &source {
                Source::Checkpoint(p) => p.display().to_string(),
                Source::Baseline(k) => k.name().to_string(),
            },
            split: split_desc,
            target,
            cutoffs: &cutoffs,
            bucket_edges: buckets.then_some(eval.bucket_edges.as_slice()),
            baseline: is_baseline.then_some(params),
            config: cfg.as_ref(),
        },
    )?;
    print_report(&name, &report);
    Ok(())
}

fn print_report(name: &str, report: &EvalReport) {
    let mut line = format!("{name} ({} users)", report.n_users_evaluated);
    for m in &report.metrics {
        let _ = write!(line, "  NDCG@{0} {1:.4}  MAP@{0} {2:.4}", m.cutoff, m.ndcg, m.map);
    }
    println!("{line}");
    for b in report.buckets.iter().flatten() {
        let upper = b.upper.map_or("inf".to_string(), |u| u.to_string());
        match &b.metrics {
            Some(ms) => {
                let mut line = format!("  [{}, {upper}) {} users", b.lower, b.n_users);
                for m in ms {
                    let _ = write!(line, "  NDCG@{0} {1:.4}  MAP@{0} {2:.4}", m.cutoff, m.ndcg, m.map);
                }
                println!("{line}");
            }
            None => println!("  [{}, {upper}) no users", b.lower),
        }
    }
}

fn search_cmd(cfg: &ExperimentConfig, budget: usize, workers: usize) -> Result<()> {
    #[derive(Serialize)]
    struct TrialSummary<'a> {
        index: usize,
        objective: Option<f64>,
        status: TrialStatus,
        epochs_used: usize,
        config: &'a TrainConfig,
    }
    #[derive(Serialize)]
    struct Summary<'a> {
        best_index: usize,
        best_objective: Option<f64>,
        refit_epochs: usize,
        trials: Vec<TrialSummary<'a>>,
    }
    adversarial_config(cfg)?;
    let bundle = bundle_from(cfg)?;
    std::fs::create_dir_all(&cfg.out).map_err(|e| Error::io(format!("creating {}", cfg.out.display()), e))?;
    let opts = SearchOptions {
        budget,
        workers,
        base_seed: cfg.train.seed,
        log: Some(cfg.out.join("trials.jsonl")),
    };
    let outcome = random_search(&cfg.search, &bundle, &opts)?;
    let summary = Summary {
        best_index: outcome.best.index,
        best_objective: outcome.best.objective,
        refit_epochs: outcome.best.epochs_used,
        trials: outcome
            .trials
            .iter()
            .map(|t| TrialSummary {
                index: t.index,
                objective: t.objective,
                status: t.status,
                epochs_used: t.epochs_used,
                config: &t.config,
            })
            .collect(),
    };
    bundle.save(&cfg.out.join("split"))?;
    write_json(&cfg.out.join("search.json"), &summary)?;
    write_json(&cfg.out.join("best_config.json"), &outcome.best.config)?;
    outcome.winner.checkpoint.save(&cfg.out.join("best_trial.ckpt"))?;
    outcome.refit.checkpoint.save(&cfg.out.join("best.ckpt"))?;
    echo_config(cfg)?;
    let ok = outcome.trials.iter().filter(|t| t.status == TrialStatus::Ok).count();
    println!(
        "{} trials ({ok} ok), best #{} validation MAP@5 {:.4}",
        outcome.trials.len(),
        outcome.best.index,
        outcome.best.score()
    );
    Ok(())
}

#[derive(Serialize)]
struct AblationRow {
    label: String,
    alpha: f64,
    report: EvalReport,
    similarity: SimilarityStats,
}

fn ablation_run(cfg: &ExperimentConfig, bundle: &SplitBundle, config: &TrainConfig, label: String) -> Result<AblationRow> {
    let (out, _) = fit_adversarial(config, bundle)?;
    let gen = &out.checkpoint.generator;
    let rec = GeneratorRecommender {
        generator: gen.clone(),
        mode: config.mode,
    };
    let report = evaluate(&rec, &bundle.train, &bundle.test, &cfg.evaluation.cutoffs)?;
    let profiles = generated_user_profiles(gen, config.mode)?;
    let similarity = similarity_stats(&profiles, cfg.evaluation.similarity_sample, config.seed)?;
    Ok(AblationRow {
        label,
        alpha: config.alpha,
        report,
        similarity,
    })
}

fn ablate_cmd(cfg: &ExperimentConfig, which: Ablation) -> Result<()> {
    let base = adversarial_config(cfg)?;
    let bundle = bundle_from(cfg)?;
    let mode_tag = if cfg.model.name().ends_with('u') { "u" } else { "i" };
    let runs: Vec<(String, TrainConfig)> = match which {
        Ablation::FmSweep => (0..=5)
            .map(|s| {
                let alpha = s as f64 / 5.0;
                (format!("alpha={alpha:.1}"), TrainConfig { alpha, ..base.clone() })
            })
            .collect(),
        Ablation::BinDisc => [DiscKind::Energy, DiscKind::Binary]
            .into_iter()
            .map(|d| {
                let name = match d {
                    DiscKind::Energy => format!("ganmf-{mode_tag}"),
                    DiscKind::Binary => format!("binganmf-{mode_tag}"),
                };
                (name, TrainConfig { discriminator: d, ..base.clone() })
            })
            .collect(),
    };
    let rows = runs
        .into_iter()
        .map(|(label, c)| ablation_run(cfg, &bundle, &c, label))
        .collect::<Result<Vec<_>>>()?;

    let mut csv = String::from("label,alpha");
    for c in &cfg.evaluation.cutoffs {
        let _ = write!(csv, ",ndcg@{c},map@{c}");
    }
    csv.push_str(",similarity_mean,similarity_std\n");
    for r in &rows {
        let _ = write!(csv, "{},{}", r.label, r.alpha);
        for m in &r.report.metrics {
            let _ = write!(csv, ",{:.6},{:.6}", m.ndcg, m.map);
        }
        let _ = writeln!(csv, ",{:.6},{:.6}", r.similarity.mean, r.similarity.std);
    }
    let stem = match which {
        Ablation::FmSweep => "fm_sweep",
        Ablation::BinDisc => "bin_disc",
    };
    write(&cfg.out.join(format!("{stem}.csv")), &csv)?;
    write_json(&cfg.out.join(format!("{stem}.json")), &rows)?;
    echo_config(cfg)?;
    print!("{csv}");
    Ok(())
}

fn simstats_cmd(checkpoint: &Path, sample: usize, seed: u64, matrix_users: usize, out: &Path) -> Result<()> {
    #[derive(Serialize)]
    struct Echo<'a> {
        command: &'a str,
        checkpoint: &'a Path,
        sample: usize,
        seed: u64,
        matrix_users: usize,
    }
    let ck = Checkpoint::load(checkpoint)?;
    let profiles = generated_user_profiles(&ck.generator, ck.mode)?;
    let stats = similarity_stats(&profiles, sample, seed)?;
    let shown: Vec<usize> = (0..profiles.rows().min(matrix_users)).collect();
    let matrix = similarity_matrix(&profiles.select_rows(&shown)?);
    write_json(&out.join("similarity.json"), &stats)?;
    write(&out.join("similarity.csv"), matrix_to_csv(&matrix))?;
    echo(
        &out.join("simstats.toml"),
        &Echo {
            command: "simstats",
            checkpoint,
            sample,
            seed,
            matrix_users,
        },
    )?;
    println!("mean {:.4} std {:.4} over {} pairs", stats.mean, stats.std, stats.pairs);
    Ok(())
}
