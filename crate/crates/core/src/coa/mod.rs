//! Courses of action: data model, candidate generation, screening and
//! battle-boundary assignment.

pub mod boundaries;
pub mod generate;
pub mod screen;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::grid::Coord;
use crate::opord::Task;
use crate::scenario::{Scenario, Side, Zone};

pub use boundaries::{assign_boundaries, BoundaryError};
pub use generate::{generate_friendly_coas, CoaConfig, CoaGenError};
pub use screen::{screen_coa, FeasibilityVerdict, ScreenCheck, ScreenConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnitTask {
    pub unit_id: String,
    pub task: Task,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub route: Option<Vec<Coord>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Phase {
    pub index: usize,
    pub tasks: Vec<UnitTask>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum Trigger {
    Tick(u32),
    ObjectiveSeized(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Synchronization {
    pub phase: usize,
    pub trigger: Trigger,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CourseOfAction {
    pub id: String,
    pub side: Side,
    pub phases: Vec<Phase>,
    pub boundaries: BTreeMap<String, Zone>,
    pub synchronization: Vec<Synchronization>,
    pub summary: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub main_effort: Option<String>,
}

impl CourseOfAction {
    /// Every unit id that appears in any task.
    pub fn tasked_units(&self) -> BTreeSet<&str> {
        self.phases
            .iter()
            .flat_map(|p| p.tasks.iter().map(|t| t.unit_id.as_str()))
            .collect()
    }

    pub fn task_for(&self, phase: usize, unit_id: &str) -> Option<&UnitTask> {
        self.phases
            .get(phase)?
            .tasks
            .iter()
            .find(|t| t.unit_id == unit_id)
    }

    /// Objective ids this CoA attacks (targets of offensive tasks), first-seen order.
    pub fn objectives(&self, scenario: &Scenario) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for p in &self.phases {
            for t in &p.tasks {
                if !t.task.verb.is_offensive() {
                    continue;
                }
                if let Some(target) = &t.target {
                    if scenario.objective(target).is_some() && !out.contains(target) {
                        out.push(target.clone());
                    }
                }
            }
        }
        out
    }

    /// The full path of a unit across all phases, joined end to end.
    pub fn full_route(&self, unit_id: &str) -> Vec<Coord> {
        let mut out: Vec<Coord> = Vec::new();
        for p in &self.phases {
            if let Some(r) = p
                .tasks
                .iter()
                .find(|t| t.unit_id == unit_id)
                .and_then(|t| t.route.as_ref())
            {
                for c in r {
                    if out.last() != Some(c) {
                        out.push(*c);
                    }
                }
            }
        }
        out
    }

    pub fn main_effort_route(&self) -> Vec<Coord> {
        self.main_effort
            .as_deref()
            .map(|u| self.full_route(u))
            .unwrap_or_default()
    }

    /// Structural problems: phase numbering, unknown units, broken routes.
    pub fn structural_violations(&self, scenario: &Scenario) -> Vec<String> {
        let mut out = Vec::new();
        if self.phases.is_empty() {
            out.push(format!("{}: no phases", self.id));
        }
        for (i, p) in self.phases.iter().enumerate() {
            if p.index != i {
                out.push(format!("{}: phase {} at position {i}", self.id, p.index));
            }
            for t in &p.tasks {
                if scenario.unit(&t.unit_id).is_none() && self.side == Side::Friendly {
                    out.push(format!("{}: unknown unit '{}'", self.id, t.unit_id));
                }
                if let Some(r) = &t.route {
                    if r.iter().any(|c| !scenario.map.in_bounds(*c)) {
                        out.push(format!(
                            "{}: route of {} leaves the map",
                            self.id, t.unit_id
                        ));
                    } else if r.windows(2).any(|w| !scenario.map.adjacent(w[0], w[1])) {
                        out.push(format!("{}: route of {} is not a path", self.id, t.unit_id));
                    }
                }
            }
        }
        for s in &self.synchronization {
            if s.phase >= self.phases.len() {
                out.push(format!(
                    "{}: trigger for missing phase {}",
                    self.id, s.phase
                ));
            }
        }
        out
    }
}

/// Structured text export: one block per phase, routes as coordinate lists.
pub fn export_coa(coa: &CourseOfAction) -> String {
    let mut out = format!("coa {}\nside {}\n", coa.id, coa.side);
    if let Some(me) = &coa.main_effort {
        out.push_str(&format!("main_effort {me}\n"));
    }
    out.push_str(&format!("summary {}\n", coa.summary));
    for p in &coa.phases {
        out.push_str(&format!("phase {}\n", p.index));
        if let Some(s) = coa.synchronization.iter().find(|s| s.phase == p.index) {
            match &s.trigger {
                Trigger::Tick(t) => out.push_str(&format!("  trigger tick {t}\n")),
                Trigger::ObjectiveSeized(o) => out.push_str(&format!("  trigger seized {o}\n")),
            }
        }
        for t in &p.tasks {
            out.push_str(&format!(
                "  task {} {} {} [{:?}]",
                t.unit_id, t.task.verb, t.task.object, t.task.function
            ));
            if let Some(r) = &t.route {
                let cells: Vec<String> = r.iter().map(|c| c.to_string()).collect();
                out.push_str(&format!(" route {}", cells.join(" ")));
            }
            out.push('\n');
        }
    }
    for (unit, zone) in &coa.boundaries {
        let cells: Vec<String> = zone.iter().map(|c| c.to_string()).collect();
        out.push_str(&format!("boundary {unit} {}\n", cells.join(" ")));
    }
    out
}
