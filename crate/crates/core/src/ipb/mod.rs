//! Intelligence preparation of the battlefield: framing, terrain analysis,
//! enemy capability assessment and enemy courses of action.

pub mod ecoa;
pub mod enemy;
pub mod frame;
pub mod template;
pub mod terrain;

use thiserror::Error;

pub use ecoa::{generate_enemy_coas, EnemyArchetype, EnemyCoA, EnemyCoaSet};
pub use enemy::{
    assess_enemy_capability, EnemySituationMap, EnemyUnitEntry, Observation, Provenance, Sensor,
};
pub use frame::{evaluate_battlespace, BattlespaceFrame};
pub use template::{Constraint, ConstraintKind, DoctrinalTemplate, TemplateEntry};
pub use terrain::{analyze_battlespace, LayerKind, TerrainAnalysisMap};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IpbError {
    #[error("cannot frame battlespace without objectives")]
    NoObjectives,
    #[error("invalid observation: {0}")]
    InvalidObservation(String),
    #[error("enemy situation map is empty")]
    EmptySituation,
    #[error("k must be at least 1")]
    ZeroK,
}
