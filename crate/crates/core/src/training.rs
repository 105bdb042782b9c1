//! Alternating discriminator/generator optimization with early stopping,
//! and top-N recommendation from a trained generator.

use std::time::Instant;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::baselines::Recommender;
use crate::dataset::Urm;
use crate::error::{Error, Result};
use crate::evaluation::{evaluate, top_n};
use crate::model::{
    bin_disc_loss_on_profiles, bin_gen_loss_and_grads, disc_loss_on_profiles, gen_loss_and_grads, generate,
    BinaryDiscParams, Checkpoint, Discriminator, DiscriminatorParams, GeneratorParams, LossBreakdown, Mode,
};
use crate::numerics::{adam_step, AdamState, DenseMatrix};
use crate::seeds::{self, Stream};

pub const BATCH_SIZES: [usize; 5] = [64, 128, 256, 512, 1024];
pub const MAX_EPOCHS: usize = 300;

/// Which discriminator the generator is trained against.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DiscKind {
    /// Linear autoencoder energy with the hinge loss.
    Energy,
    /// Binary classifier (ablation).
    Binary,
}

/// Every knob of one training run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub epochs_max: usize,
    /// Latent factors.
    pub k: usize,
    /// Coding units of the autoencoder, or hidden units of the classifier.
    pub coding_dim: usize,
    pub batch_size: usize,
    pub margin: u32,
    /// Feature-matching weight.
    pub alpha: f64,
    pub lr_d: f64,
    pub lr_g: f64,
    pub lambda_d: f64,
    pub lambda_g: f64,
    pub mode: Mode,
    pub discriminator: DiscKind,
    pub seed: u64,
    /// Epochs between early-stopping evaluations.
    pub eval_every: usize,
    /// Evaluations without improvement before stopping.
    pub patience: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs_max: 100,
            k: 64,
            coding_dim: 128,
            batch_size: 128,
            margin: 2,
            alpha: 0.25,
            lr_d: 1e-3,
            lr_g: 1e-3,
            lambda_d: 1e-5,
            lambda_g: 0.0,
            mode: Mode::User,
            discriminator: DiscKind::Energy,
            seed: 42,
            eval_every: 5,
            patience: 5,
        }
    }
}

fn in_range<T: PartialOrd + std::fmt::Display>(name: &str, v: T, lo: T, hi: T) -> Result<()> {
    if v >= lo && v <= hi {
        Ok(())
    } else {
        Err(Error::param(format!("{name} = {v} outside [{lo}, {hi}]")))
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        in_range("epochs_max", self.epochs_max, 0, MAX_EPOCHS)?;
        in_range("k", self.k, 1, crate::model::MAX_LATENT_FACTORS)?;
        in_range("coding_dim", self.coding_dim, crate::model::MIN_CODING_DIM, crate::model::MAX_CODING_DIM)?;
        if !BATCH_SIZES.contains(&self.batch_size) {
            return Err(Error::param(format!("batch_size {} not one of {BATCH_SIZES:?}", self.batch_size)));
        }
        in_range("margin", self.margin, 1, 10)?;
        in_range("alpha", self.alpha, 0.0, 1.0)?;
        in_range("lr_d", self.lr_d, 1e-4, 1e-2)?;
        in_range("lr_g", self.lr_g, 1e-4, 1e-2)?;
        in_range("lambda_d", self.lambda_d, 1e-6, 1e-4)?;
        if self.lambda_g != 0.0 {
            return Err(Error::param("lambda_g is fixed at 0"));
        }
        if self.eval_every < 1 || self.patience < 1 {
            return Err(Error::param("eval_every and patience must be at least 1"));
        }
        Ok(())
    }

    pub fn validated(self) -> Result<Self> {
        self.validate()?;
        Ok(self)
    }
}

/// One epoch of training, as written to the JSON-lines log.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub d_loss: LossBreakdown,
    pub g_loss: LossBreakdown,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub earlystop_map5: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainHistory {
    pub epochs: Vec<EpochRecord>,
    /// Wall-clock seconds per epoch; kept apart so the records stay
    /// reproducible.
    pub epoch_seconds: Vec<f64>,
    /// Epoch whose parameters were returned (0 = initialization).
    pub best_epoch: usize,
}

/// Walks a seeded permutation of `0..n` in contiguous slices.
#[derive(Clone, Debug)]
pub struct BatchSampler {
    order: Vec<usize>,
    pos: usize,
}

impl BatchSampler {
    pub fn new<R: Rng>(n: usize, rng: &mut R) -> Self {
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(rng);
        Self { order, pos: 0 }
    }

    /// Next slice of at most `batch_size` ids; empty once exhausted.
    pub fn sample_batch(&mut self, batch_size: usize) -> &[usize] {
        let start = self.pos;
        self.pos = (start + batch_size.max(1)).min(self.order.len());
        &self.order[start..self.pos]
    }
}

/// Iterations per epoch: `ceil(n / batch)`.
pub fn iterations_per_epoch(n: usize, batch_size: usize) -> usize {
    n.div_ceil(batch_size.max(1))
}

/// Scores from a trained generator. In user mode the score vector of user
/// `u` is its generated profile; in item mode the generator produces item
/// profiles over users, and user `u` reads coordinate `u` of each.
#[derive(Clone, Debug)]
pub struct GeneratorRecommender {
    pub generator: GeneratorParams,
    pub mode: Mode,
}

impl Recommender for GeneratorRecommender {
    fn n_users(&self) -> usize {
        match self.mode {
            Mode::User => self.generator.sigma.rows(),
            Mode::Item => self.generator.v.rows(),
        }
    }

    fn n_items(&self) -> usize {
        match self.mode {
            Mode::User => self.generator.v.rows(),
            Mode::Item => self.generator.sigma.rows(),
        }
    }

    fn score(&self, user: usize) -> Vec<f64> {
        let (query, table) = match self.mode {
            Mode::User => (self.generator.sigma.row(user), &self.generator.v),
            Mode::Item => (self.generator.v.row(user), &self.generator.sigma),
        };
        (0..table.rows())
            .map(|i| table.row(i).iter().zip(query).map(|(a, b)| a * b).sum())
            .collect()
    }
}

/// Top-`n` unseen items for a user.
pub fn recommend(gen: &GeneratorParams, mode: Mode, urm_train: &Urm, user: usize, n: usize) -> Result<Vec<u32>> {
    let rec = GeneratorRecommender {
        generator: gen.clone(),
        mode,
    };
    if user >= rec.n_users() || user >= urm_train.n_users() {
        return Err(Error::Index(format!("user {user} of {}", urm_train.n_users())));
    }
    if rec.n_items() != urm_train.n_items() {
        return Err(Error::Consistency("generator and matrix disagree on item count".into()));
    }
    Ok(top_n(&rec.score(user), urm_train.row(user), n))
}

struct DiscOpt {
    params: Discriminator,
    states: [AdamState; 4],
}

/// Parameters, optimizer state and data of one run, with the two
/// alternating steps exposed individually.
pub struct Trainer {
    config: TrainConfig,
    /// Training matrix in generator orientation (transposed in item mode).
    data: Urm,
    pub generator: GeneratorParams,
    gen_states: [AdamState; 2],
    disc: DiscOpt,
}

impl Trainer {
    pub fn new(urm_train: &Urm, config: &TrainConfig) -> Result<Self> {
        config.validate()?;
        if urm_train.nnz() == 0 {
            return Err(Error::EmptyDataset);
        }
        let data = match config.mode {
            Mode::User => urm_train.clone(),
            Mode::Item => urm_train.transpose(),
        };
        let mut rng = seeds::rng(config.seed, Stream::Init);
        let generator = GeneratorParams::init(data.n_users(), data.n_items(), config.k, &mut rng)?;
        let gen_states = [
            AdamState::for_param(&generator.sigma, config.lr_g),
            AdamState::for_param(&generator.v, config.lr_g),
        ];
        let params = match config.discriminator {
            DiscKind::Energy => Discriminator::Energy(DiscriminatorParams::init(data.n_items(), config.coding_dim, &mut rng)?),
            DiscKind::Binary => Discriminator::Binary(BinaryDiscParams::init(data.n_items(), config.coding_dim, &mut rng)?),
        };
        let states = match &params {
            Discriminator::Energy(d) => [&d.w_enc, &d.b_enc, &d.w_dec, &d.b_dec].map(|m| AdamState::for_param(m, config.lr_d)),
            Discriminator::Binary(d) => {
                [&d.w_hidden, &d.b_hidden, &d.w_out, &d.b_out].map(|m| AdamState::for_param(m, config.lr_d))
            }
        };
        Ok(Self {
            config: config.clone(),
            data,
            generator,
            gen_states,
            disc: DiscOpt { params, states },
        })
    }

    pub fn discriminator(&self) -> &Discriminator {
        &self.disc.params
    }

    pub fn n_conditions(&self) -> usize {
        self.data.n_users()
    }

    /// One Adam step of the discriminator on the given ids. The generator
    /// is only read.
    pub fn disc_step(&mut self, ids: &[usize]) -> Result<LossBreakdown> {
        let real = self.data.dense_rows(ids);
        let fake = generate(&self.generator, ids)?;
        let st = &mut self.disc.states;
        match &mut self.disc.params {
            Discriminator::Energy(d) => {
                let (loss, g) = disc_loss_on_profiles(d, &real, &fake, self.config.margin as f64, self.config.lambda_d)?;
                adam_step(&mut d.w_enc, &g.w_enc, &mut st[0])?;
                adam_step(&mut d.b_enc, &g.b_enc, &mut st[1])?;
                adam_step(&mut d.w_dec, &g.w_dec, &mut st[2])?;
                adam_step(&mut d.b_dec, &g.b_dec, &mut st[3])?;
                Ok(loss)
            }
            Discriminator::Binary(d) => {
                let (mut loss, g) = bin_disc_loss_on_profiles(d, &real, &fake)?;
                let lambda = self.config.lambda_d;
                let mut gw = g.w_hidden;
                let mut go = g.w_out;
                gw.add_scaled(&d.w_hidden, 2.0 * lambda)?;
                go.add_scaled(&d.w_out, 2.0 * lambda)?;
                loss.regularization = lambda * (d.w_hidden.sum_squares() + d.w_out.sum_squares());
                loss.total += loss.regularization;
                adam_step(&mut d.w_hidden, &gw, &mut st[0])?;
                adam_step(&mut d.b_hidden, &g.b_hidden, &mut st[1])?;
                adam_step(&mut d.w_out, &go, &mut st[2])?;
                adam_step(&mut d.b_out, &g.b_out, &mut st[3])?;
                Ok(loss)
            }
        }
    }

    /// One Adam step of the generator on the given ids. The discriminator
    /// is only read.
    pub fn gen_step(&mut self, ids: &[usize]) -> Result<LossBreakdown> {
        let real = self.data.dense_rows(ids);
        let c = &self.config;
        let (loss, g) = match &self.disc.params {
            Discriminator::Energy(d) => gen_loss_and_grads(d, &self.generator, ids, &real, c.alpha, c.lambda_g)?,
            Discriminator::Binary(d) => bin_gen_loss_and_grads(d, &self.generator, ids, &real, c.alpha, c.lambda_g)?,
        };
        adam_step(&mut self.generator.sigma, &g.sigma, &mut self.gen_states[0])?;
        adam_step(&mut self.generator.v, &g.v, &mut self.gen_states[1])?;
        Ok(loss)
    }

    pub fn checkpoint(&self) -> Checkpoint {
        Checkpoint {
            mode: self.config.mode,
            generator: self.generator.clone(),
            discriminator: self.disc.params.clone(),
        }
    }
}

fn accumulate(acc: &mut LossBreakdown, l: &LossBreakdown, w: f64) {
    acc.total += w * l.total;
    acc.adversarial += w * l.adversarial;
    acc.feature_matching += w * l.feature_matching;
    acc.regularization += w * l.regularization;
}

fn finite(l: &LossBreakdown) -> bool {
    l.total.is_finite() && l.adversarial.is_finite() && l.feature_matching.is_finite()
}

/// MAP@5 of a generator on a held-out matrix, or `None` when no user has
/// held-out items.
pub fn holdout_map5(gen: &GeneratorParams, mode: Mode, train: &Urm, holdout: &Urm) -> Result<Option<f64>> {
    let rec = GeneratorRecommender {
        generator: gen.clone(),
        mode,
    };
    let report = evaluate(&rec, train, holdout, &[5])?;
    Ok((report.n_users_evaluated > 0).then(|| report.map_at(5)))
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub checkpoint: Checkpoint,
    pub history: TrainHistory,
}

pub fn train(urm_train: &Urm, earlystop: &Urm, config: &TrainConfig) -> Result<TrainOutcome> {
    train_with_log(urm_train, earlystop, config, |_| {})
}

/// Runs training, calling `on_epoch` after every epoch. Returns the
/// parameters with the best early-stopping MAP@5 seen, or the last ones
/// when the early-stopping set is empty.
pub fn train_with_log<F>(urm_train: &Urm, earlystop: &Urm, config: &TrainConfig, mut on_epoch: F) -> Result<TrainOutcome>
where
    F: FnMut(&EpochRecord),
{
    if !urm_train.same_index_space(earlystop) {
        return Err(Error::Consistency("train and early-stopping matrices differ in shape or ids".into()));
    }
    let mut trainer = Trainer::new(urm_train, config)?;
    let mut history = TrainHistory::default();
    let mut batch_rng = seeds::rng(config.seed, Stream::Batch);
    let n = trainer.n_conditions();
    let iters = iterations_per_epoch(n, config.batch_size);
    let mut best: Option<(f64, Checkpoint)> = None;
    let mut stale = 0;

    for epoch in 1..=config.epochs_max {
        let started = Instant::now();
        let mut d_sampler = BatchSampler::new(n, &mut batch_rng);
        let mut g_sampler = BatchSampler::new(n, &mut batch_rng);
        let mut d_acc = LossBreakdown::default();
        let mut g_acc = LossBreakdown::default();
        let w = 1.0 / iters as f64;
        for _ in 0..iters {
            let ids = d_sampler.sample_batch(config.batch_size).to_vec();
            let dl = trainer.disc_step(&ids)?;
            let ids = g_sampler.sample_batch(config.batch_size).to_vec();
            let gl = trainer.gen_step(&ids)?;
            if !finite(&dl) || !finite(&gl) {
                return Err(Error::Divergence {
                    epoch,
                    msg: format!("discriminator loss {}, generator loss {}", dl.total, gl.total),
                });
            }
            accumulate(&mut d_acc, &dl, w);
            accumulate(&mut g_acc, &gl, w);
        }
        if !trainer.generator.sigma.is_finite() || !trainer.generator.v.is_finite() {
            return Err(Error::Divergence {
                epoch,
                msg: "generator parameters are no longer finite".into(),
            });
        }

        let mut metric = None;
        if epoch % config.eval_every == 0 || epoch == config.epochs_max {
            metric = holdout_map5(&trainer.generator, config.mode, urm_train, earlystop)?;
        }
        let record = EpochRecord {
            epoch,
            d_loss: d_acc,
            g_loss: g_acc,
            earlystop_map5: metric,
        };
        on_epoch(&record);
        history.epochs.push(record);
        history.epoch_seconds.push(started.elapsed().as_secs_f64());

        if let Some(m) = metric {
            if best.as_ref().is_none_or(|(b, _)| m > *b) {
                best = Some((m, trainer.checkpoint()));
                history.best_epoch = epoch;
                stale = 0;
            } else {
                stale += 1;
                if stale >= config.patience {
                    break;
                }
            }
        }
    }

    let checkpoint = match best {
        Some((_, ck)) => ck,
        None => {
            history.best_epoch = history.epochs.len();
            trainer.checkpoint()
        }
    };
    Ok(TrainOutcome { checkpoint, history })
}

/// Generated user profiles (users x items) whatever the training mode.
pub fn generated_user_profiles(gen: &GeneratorParams, mode: Mode) -> Result<DenseMatrix> {
    let all = crate::model::generate_all(gen)?;
    Ok(match mode {
        Mode::User => all,
        Mode::Item => all.transpose(),
    })
}
