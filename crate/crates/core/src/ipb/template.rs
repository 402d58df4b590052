//! Doctrinal templates: declarative placement rules for enemy roles.

use serde::{Deserialize, Serialize};

use crate::grid::Role;
use crate::scenario::{Echelon, Posture};

/// A placement rule. Every variant names its parameters explicitly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ConstraintKind {
    /// Elevation percentile within the AO is at least `percentile`.
    OnHighGround { percentile: f64 },
    /// Adjacent to a higher high-ground cell that lies closer to the friendly entry zones.
    ReverseSlope { high_ground_percentile: f64 },
    /// Within `distance` cells of the highest-scored friendly avenue.
    OnMainAxis { distance: i32 },
    /// Within `distance` cells of an enemy unit of `role`.
    WithinRange { role: Role, distance: i32 },
    /// Depth behind the forward line between `min` and `max` cells inclusive.
    InDepth { min: i32, max: i32 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Constraint {
    #[serde(flatten)]
    pub kind: ConstraintKind,
    #[serde(default)]
    pub hard: bool,
}

impl Constraint {
    pub fn hard(kind: ConstraintKind) -> Self {
        Self { kind, hard: true }
    }

    pub fn soft(kind: ConstraintKind) -> Self {
        Self { kind, hard: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TemplateEntry {
    pub role: Role,
    pub count: u32,
    #[serde(default = "default_entry_cp")]
    pub combat_power: f64,
    #[serde(default = "default_entry_echelon")]
    pub echelon: Echelon,
    #[serde(default = "default_entry_posture")]
    pub posture: Posture,
    #[serde(default)]
    pub constraints: Vec<Constraint>,
}

fn default_entry_cp() -> f64 {
    5.0
}

fn default_entry_echelon() -> Echelon {
    Echelon::Company
}

fn default_entry_posture() -> Posture {
    Posture::DefendPrepared
}

impl TemplateEntry {
    pub fn new(role: Role, count: u32, constraints: Vec<Constraint>) -> Self {
        Self {
            role,
            count,
            combat_power: default_entry_cp(),
            echelon: default_entry_echelon(),
            posture: default_entry_posture(),
            constraints,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DoctrinalTemplate {
    #[serde(default)]
    pub entries: Vec<TemplateEntry>,
}

impl DoctrinalTemplate {
    pub fn is_empty(&self) -> bool {
        self.entries.iter().all(|e| e.count == 0)
    }

    pub fn total_count(&self) -> u32 {
        self.entries.iter().map(|e| e.count).sum()
    }

    /// Parameter sanity problems, reported alongside scenario validation.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        for (i, e) in self.entries.iter().enumerate() {
            if e.combat_power.is_nan() || e.combat_power < 0.0 {
                out.push(format!("template.entries[{i}]: combat_power must be >= 0"));
            }
            for c in &e.constraints {
                let bad = match &c.kind {
                    ConstraintKind::OnHighGround { percentile } => {
                        !(0.0..=1.0).contains(percentile)
                    }
                    ConstraintKind::ReverseSlope {
                        high_ground_percentile,
                    } => !(0.0..=1.0).contains(high_ground_percentile),
                    ConstraintKind::OnMainAxis { distance } => *distance < 0,
                    ConstraintKind::WithinRange { distance, .. } => *distance < 0,
                    ConstraintKind::InDepth { min, max } => min > max,
                };
                if bad {
                    out.push(format!(
                        "template.entries[{i}]: invalid constraint parameters {:?}",
                        c.kind
                    ));
                }
            }
        }
        out
    }
}
