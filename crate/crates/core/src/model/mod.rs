//! Generator, discriminators, their losses and hand-derived gradients.

mod binary;
mod checkpoint;
mod energy;
mod generator;

use serde::{Deserialize, Serialize};

pub use binary::{
    bin_disc_loss_and_grads, bin_disc_loss_on_profiles, bin_gen_loss_and_grads, classify, hidden_features,
    BinaryDiscGrads, BinaryDiscParams, PROB_EPS,
};
pub use checkpoint::Checkpoint;
pub use energy::{
    disc_loss_and_grads, disc_loss_on_profiles, encode, energy, gen_loss_and_grads, reconstruct, DiscGrads,
    DiscriminatorParams, MAX_CODING_DIM, MIN_CODING_DIM,
};
pub use generator::{generate, generate_all, GenGrads, GeneratorParams, MAX_LATENT_FACTORS};

/// Components of a batch-averaged loss. `total` is the weighted sum the
/// optimizer sees.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LossBreakdown {
    pub total: f64,
    pub adversarial: f64,
    pub feature_matching: f64,
    pub regularization: f64,
}

/// Whether the generator is conditioned on users (profiles over items) or
/// on items (profiles over users, trained on the transposed matrix).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    User,
    Item,
}

/// Which discriminator a model was trained against.
#[derive(Clone, Debug, PartialEq)]
pub enum Discriminator {
    Energy(DiscriminatorParams),
    Binary(BinaryDiscParams),
}
