use serde::{Deserialize, Serialize};

use crate::coa::CourseOfAction;
use crate::grid::{Coord, GridMap, Role};
use crate::ipb::enemy::EnemySituationMap;
use crate::wargame::engine::SimResult;
use crate::wargame::WargameStats;

use super::select::SensitivityEntry;

pub const ASSUMPTION_RADIUS: i32 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FindingKind {
    Advantage,
    Disadvantage,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseFinding {
    pub phase: usize,
    pub kind: FindingKind,
    pub friendly_cp_delta: f64,
    pub enemy_cp_delta: f64,
    /// Enemy loss magnitude minus friendly loss magnitude.
    pub margin: f64,
    pub narrative: String,
}

pub type Finding = PhaseFinding;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Assumption {
    pub unit_id: String,
    pub role: Role,
    pub location: Coord,
    pub confidence: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Explanation {
    pub coa_id: String,
    pub verdict: String,
    pub per_phase_findings: Vec<PhaseFinding>,
    pub assumptions: Vec<Assumption>,
    pub sensitivity: Vec<SensitivityEntry>,
    pub weight_sensitive: bool,
    /// Outcome lines from the sampled traces.
    pub trace_notes: Vec<String>,
}

impl Explanation {
    pub fn to_text(&self) -> String {
        let mut out = format!("{}: {}\n", self.coa_id, self.verdict);
        for f in &self.per_phase_findings {
            out.push_str(&format!("  {}\n", f.narrative));
        }
        for n in &self.trace_notes {
            out.push_str(&format!("  {n}\n"));
        }
        if self.assumptions.is_empty() {
            out.push_str("  assumptions: none\n");
        } else {
            for a in &self.assumptions {
                out.push_str(&format!(
                    "  assumes inferred {} {} at {} (confidence {:.3})\n",
                    a.role.as_str(),
                    a.unit_id,
                    a.location,
                    a.confidence
                ));
            }
        }
        for s in &self.sensitivity {
            out.push_str(&format!(
                "  sensitivity {} {:+.1}: {}\n",
                s.criterion,
                s.perturbation,
                if s.flips {
                    format!("recommendation becomes {}", s.top)
                } else {
                    "no change".into()
                }
            ));
        }
        out
    }
}

pub fn classify(friendly_cp_delta: f64, enemy_cp_delta: f64) -> FindingKind {
    if enemy_cp_delta.abs() >= friendly_cp_delta.abs() {
        FindingKind::Advantage
    } else {
        FindingKind::Disadvantage
    }
}

pub fn phase_narrative(phase: usize, friendly: f64, enemy: f64, kind: FindingKind) -> String {
    let label = match kind {
        FindingKind::Advantage => "advantage",
        FindingKind::Disadvantage => "disadvantage",
    };
    format!(
        "phase {phase}: {label}, friendly CP change {friendly:.3} vs enemy CP change {enemy:.3}"
    )
}

fn trace_notes(traces: &[SimResult]) -> Vec<String> {
    if traces.is_empty() {
        return Vec::new();
    }
    let n = traces.len();
    let wins = traces.iter().filter(|t| t.success).count();
    let engagements: usize = traces
        .iter()
        .map(|t| {
            t.trace()
                .iter()
                .filter(|e| e.kind == crate::wargame::EventKind::Engage)
                .count()
        })
        .sum();
    let destroyed: usize = traces
        .iter()
        .map(|t| {
            t.trace()
                .iter()
                .filter(|e| e.kind == crate::wargame::EventKind::Destroy)
                .count()
        })
        .sum();
    vec![format!(
        "sampled traces: {wins} of {n} succeeded, {engagements} engagements, {destroyed} units destroyed"
    )]
}

/// Per-phase findings, assumptions and trace notes. Verdict and sensitivity are
/// filled in by `select_coa`.
pub fn explain(
    coa: &CourseOfAction,
    stats: &WargameStats,
    traces: &[SimResult],
    esm: &EnemySituationMap,
    map: &GridMap,
) -> Explanation {
    let per_phase_findings = stats
        .per_phase
        .iter()
        .map(|p| {
            let kind = classify(p.friendly_cp_delta, p.enemy_cp_delta);
            PhaseFinding {
                phase: p.phase,
                kind,
                friendly_cp_delta: p.friendly_cp_delta,
                enemy_cp_delta: p.enemy_cp_delta,
                margin: p.enemy_cp_delta.abs() - p.friendly_cp_delta.abs(),
                narrative: phase_narrative(p.phase, p.friendly_cp_delta, p.enemy_cp_delta, kind),
            }
        })
        .collect();
    let routes: Vec<Coord> = coa
        .tasked_units()
        .into_iter()
        .flat_map(|id| coa.full_route(id))
        .collect();
    let near = map.dilate(routes.iter(), ASSUMPTION_RADIUS);
    let assumptions = esm
        .inferred()
        .filter(|e| near.contains(&e.unit.position))
        .map(|e| Assumption {
            unit_id: e.unit.id.clone(),
            role: e.unit.role,
            location: e.unit.position,
            confidence: e.confidence,
        })
        .collect();
    Explanation {
        coa_id: coa.id.clone(),
        verdict: String::new(),
        per_phase_findings,
        assumptions,
        sensitivity: Vec::new(),
        weight_sensitive: false,
        trace_notes: trace_notes(traces),
    }
}
