//! Two-party exploration: a scientist with secret functions and thresholds,
//! database owners with plaintext rows.

pub mod analytics;
pub mod context;
pub mod data;
pub mod profile;
pub mod roles;
pub mod wire;

pub use analytics::KeyInventory;
pub use context::{Contexts, ModuliPlan};
pub use data::{plaintext_bit, plaintext_scores, Bounds, Database, SelectionMatrix};
pub use profile::{ChainConfig, PrimeRun, Profile, ProfileKind};
pub use roles::{
    required_exponents, DatabaseOwner, EvalKeySet, Exploration, ExplorationResult, KeySizes, PackedScores, Query,
    Scientist, ScientistSecrets, Stage, StageReport,
};
pub use wire::Wire;
