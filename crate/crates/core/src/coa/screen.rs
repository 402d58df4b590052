use serde::{Deserialize, Serialize};

use crate::coa::CourseOfAction;
use crate::grid::Coord;
use crate::ipb::ecoa::hold_in_place;
use crate::ipb::enemy::EnemySituationMap;
use crate::opord::MissionAnalysis;
use crate::pathfind::edge_overlap;
use crate::scenario::Scenario;
use crate::wargame::{monte_carlo_evaluate_with, McConfig};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScreenConfig {
    /// Minimum friendly/enemy combat power ratio on every axis.
    pub force_ratio: f64,
    /// Enemy units within this many cells of an axis count against it.
    pub axis_radius: i32,
    /// Projected friendly loss must stay strictly below this fraction.
    pub loss_cap: f64,
    pub replications: usize,
    pub seed: u64,
    /// Maximum main-effort edge overlap with an already accepted CoA.
    pub max_overlap: f64,
}

impl Default for ScreenConfig {
    fn default() -> Self {
        Self {
            force_ratio: 1.5,
            axis_radius: 2,
            loss_cap: 0.4,
            replications: 50,
            seed: 7,
            max_overlap: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScreenCheck {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityVerdict {
    pub feasible: bool,
    pub checks: Vec<ScreenCheck>,
}

impl FeasibilityVerdict {
    pub fn from_checks(checks: Vec<ScreenCheck>) -> Self {
        Self {
            feasible: checks.iter().all(|c| c.passed),
            checks,
        }
    }

    pub fn check(&self, name: &str) -> Option<&ScreenCheck> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn failures(&self) -> Vec<&ScreenCheck> {
        self.checks.iter().filter(|c| !c.passed).collect()
    }
}

pub fn check_suitability(
    coa: &CourseOfAction,
    mission: &MissionAnalysis,
    scenario: &Scenario,
) -> ScreenCheck {
    let addressed = coa.objectives(scenario);
    let missing: Vec<String> = mission
        .specified_objectives(scenario)
        .into_iter()
        .filter(|o| !addressed.contains(o))
        .collect();
    ScreenCheck {
        name: "suitability".into(),
        passed: missing.is_empty(),
        detail: if missing.is_empty() {
            format!("addresses {}", addressed.join(", "))
        } else {
            format!("does not address {}", missing.join(", "))
        },
    }
}

/// Friendly combat power moving along `axis`: every manoeuvre unit whose route
/// shares at least half its edges with it.
fn axis_cp(coa: &CourseOfAction, scenario: &Scenario, axis: &[Coord]) -> f64 {
    coa.tasked_units()
        .into_iter()
        .filter_map(|id| scenario.unit(id))
        .filter(|u| u.role.is_maneuver())
        .filter(|u| {
            let r = coa.full_route(&u.id);
            r.len() >= 2 && (r == axis || edge_overlap(&r, axis) >= 0.5)
        })
        .map(|u| u.combat_power)
        .sum()
}

pub fn check_force_ratio(
    coa: &CourseOfAction,
    esm: &EnemySituationMap,
    scenario: &Scenario,
    config: &ScreenConfig,
) -> ScreenCheck {
    let mut passed = true;
    let mut parts = Vec::new();
    for id in coa.tasked_units() {
        let Some(u) = scenario.unit(id) else { continue };
        if !u.role.is_maneuver() {
            continue;
        }
        let axis = coa.full_route(id);
        if axis.len() < 2 {
            continue;
        }
        let friendly = axis_cp(coa, scenario, &axis);
        let enemy = esm.weighted_cp_near(&scenario.map, &axis, config.axis_radius);
        let ratio = if enemy > 0.0 {
            friendly / enemy
        } else {
            f64::INFINITY
        };
        if ratio < config.force_ratio {
            passed = false;
        }
        parts.push(if ratio.is_finite() {
            format!("{id} axis {friendly:.1} vs {enemy:.1} (ratio {ratio:.2})")
        } else {
            format!("{id} axis {friendly:.1} vs 0.0 (unopposed)")
        });
    }
    ScreenCheck {
        name: "feasibility".into(),
        passed,
        detail: format!("threshold {:.2}: {}", config.force_ratio, parts.join("; ")),
    }
}

pub fn check_acceptability(
    coa: &CourseOfAction,
    esm: &EnemySituationMap,
    scenario: &Scenario,
    config: &ScreenConfig,
) -> ScreenCheck {
    let enemy = hold_in_place(esm);
    let mc = McConfig::new(config.replications.max(1), config.seed);
    match monte_carlo_evaluate_with(scenario, coa, &enemy, &mc) {
        Ok(stats) => ScreenCheck {
            name: "acceptability".into(),
            passed: stats.friendly_loss_rate < config.loss_cap,
            detail: format!(
                "projected loss {:.1}% (cap {:.0}%, {} replications)",
                stats.friendly_loss_rate * 100.0,
                config.loss_cap * 100.0,
                stats.replications
            ),
        },
        Err(e) => ScreenCheck {
            name: "acceptability".into(),
            passed: false,
            detail: e.to_string(),
        },
    }
}

pub fn check_distinguishability(
    coa: &CourseOfAction,
    accepted: &[CourseOfAction],
    config: &ScreenConfig,
) -> ScreenCheck {
    let me = coa.main_effort_route();
    let worst = accepted
        .iter()
        .map(|a| (a.id.as_str(), edge_overlap(&me, &a.main_effort_route())))
        .fold(None, |best: Option<(&str, f64)>, x| match best {
            Some(b) if b.1 >= x.1 => Some(b),
            _ => Some(x),
        });
    match worst {
        Some((id, overlap)) => ScreenCheck {
            name: "distinguishability".into(),
            passed: overlap <= config.max_overlap,
            detail: format!("main-effort overlap {:.0}% with {id}", overlap * 100.0),
        },
        None => ScreenCheck {
            name: "distinguishability".into(),
            passed: true,
            detail: "first accepted CoA".into(),
        },
    }
}

/// Runs the four screening checks. The wargame-based acceptability check only
/// runs when the cheaper checks pass.
pub fn screen_coa(
    coa: &CourseOfAction,
    mission: &MissionAnalysis,
    esm: &EnemySituationMap,
    scenario: &Scenario,
    accepted: &[CourseOfAction],
    config: &ScreenConfig,
) -> FeasibilityVerdict {
    let mut checks = vec![
        check_suitability(coa, mission, scenario),
        check_force_ratio(coa, esm, scenario, config),
        check_distinguishability(coa, accepted, config),
    ];
    if checks.iter().all(|c| c.passed) {
        checks.insert(2, check_acceptability(coa, esm, scenario, config));
    } else {
        checks.insert(
            2,
            ScreenCheck {
                name: "acceptability".into(),
                passed: false,
                detail: "not evaluated: earlier checks failed".into(),
            },
        );
    }
    FeasibilityVerdict::from_checks(checks)
}
