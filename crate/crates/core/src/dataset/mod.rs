//! Raw dataset ingestion, the interaction matrix and holdout splits.

mod parse;
mod split;
pub mod synthetic;
mod urm;

pub use parse::{
    parse_hetrec, parse_lastfm, parse_movielens_1m, read_movielens_1m, read_tab_separated, DatasetFormat,
    Interaction, InteractionLog,
};
pub use split::{split, SplitBundle, INNER_RATIO};
pub use urm::{build_urm, numbered_ids, DatasetStats, Urm};

/// Minimum distinct items per user kept by [`build_urm`].
pub const MIN_INTERACTIONS: usize = 2;

/// Share of each user's interactions held out for testing.
pub const TEST_RATIO: f64 = 0.2;
