//! Systematic friendly CoA search: avenue assignment per manoeuvre unit, main
//! effort designation and phasing scheme.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::coa::boundaries::assign_boundaries;
use crate::coa::screen::{screen_coa, FeasibilityVerdict, ScreenConfig};
use crate::coa::{CourseOfAction, Phase, Synchronization, Trigger, UnitTask};
use crate::grid::{sort_row_major, Coord, GridMap, Role, WeatherState};
use crate::ipb::enemy::EnemySituationMap;
use crate::ipb::terrain::{AvenueRoute, TerrainAnalysisMap};
use crate::opord::{MissionAnalysis, Task, TaskSource, TaskVerb, WarfightingFunction};
use crate::pathfind::least_cost_route;
use crate::scenario::{FeatureKind, Scenario, Side, Unit};

pub const EXPOSURE_RADIUS: i32 = 2;
pub const ARTILLERY_REPOSITION: i32 = 2;
pub const RATIO_CAP: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoaConfig {
    pub k: usize,
    pub screen: ScreenConfig,
}

impl Default for CoaConfig {
    fn default() -> Self {
        Self {
            k: 3,
            screen: ScreenConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CoaGenError {
    #[error("mission analysis names no scenario objective")]
    NoSpecifiedObjective,
    #[error("no friendly avenue reaches a specified objective")]
    NoAvenues,
    #[error("no friendly manoeuvre units")]
    NoManeuverUnits,
    #[error("no feasible CoA; best candidate {id} failed: {}", describe_failures(.verdict))]
    NoFeasible {
        id: String,
        verdict: FeasibilityVerdict,
    },
}

fn describe_failures(v: &FeasibilityVerdict) -> String {
    v.failures()
        .iter()
        .map(|c| format!("{} ({})", c.name, c.detail))
        .collect::<Vec<_>>()
        .join(", ")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phasing {
    SinglePhase,
    TwoPhase,
}

/// One point of the search space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub id: String,
    /// Index into the avenue list for each manoeuvre unit, in unit order.
    pub assignment: Vec<usize>,
    pub main_effort: usize,
    pub phasing: Phasing,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoredCandidate {
    pub coa: CourseOfAction,
    pub score: f64,
}

/// Path cost for `role` along `cells`, infinite if any step is not traversable.
pub fn route_cost(map: &GridMap, weather: &WeatherState, role: Role, cells: &[Coord]) -> f64 {
    cells
        .windows(2)
        .map(|w| map.step_cost(weather, w[0], w[1], role))
        .sum()
}

/// The unit's path onto an avenue: least-cost connector to the nearest avenue
/// cell, then the avenue's remainder. `None` if the role cannot traverse it.
pub fn unit_route(scenario: &Scenario, unit: &Unit, avenue: &[Coord]) -> Option<Vec<Coord>> {
    let map = &scenario.map;
    let join = (0..avenue.len()).min_by_key(|&j| (map.distance(unit.position, avenue[j]), j))?;
    let connector = if unit.position == avenue[join] {
        vec![unit.position]
    } else {
        least_cost_route(
            map,
            &scenario.weather,
            unit.role,
            &[unit.position],
            avenue[join],
        )?
        .cells
    };
    let mut cells = connector;
    cells.extend_from_slice(&avenue[join + 1..]);
    let cost = route_cost(map, &scenario.weather, unit.role, &cells);
    cost.is_finite().then_some(cells)
}

/// Artillery repositioning: the passable cell within two cells that is nearest
/// the objective (grid distance, then Manhattan distance, then row-major).
pub fn artillery_route(scenario: &Scenario, unit: &Unit, toward: Coord) -> Vec<Coord> {
    let map = &scenario.map;
    let mut cells: Vec<Coord> = map
        .dilate([unit.position].iter(), ARTILLERY_REPOSITION)
        .into_iter()
        .filter(|c| map.passable(*c, unit.role))
        .collect();
    sort_row_major(&mut cells);
    let best = cells
        .into_iter()
        .min_by_key(|c| {
            (
                map.distance(*c, toward),
                (c.x - toward.x).abs() + (c.y - toward.y).abs(),
            )
        })
        .unwrap_or(unit.position);
    if best == unit.position || map.distance(unit.position, toward) <= map.distance(best, toward) {
        return vec![unit.position];
    }
    least_cost_route(map, &scenario.weather, unit.role, &[unit.position], best)
        .filter(|r| r.cells.len() <= (ARTILLERY_REPOSITION + 1) as usize)
        .map_or(vec![unit.position], |r| r.cells)
}

fn avenue_name(scenario: &Scenario, avenue: &AvenueRoute, index: usize) -> String {
    let on_route = scenario
        .features
        .iter()
        .filter(|f| f.kind == FeatureKind::Route)
        .map(|f| {
            let n = avenue
                .route
                .cells
                .iter()
                .filter(|c| f.cells.contains(c))
                .count();
            (n, f.name.as_str())
        })
        .max_by_key(|(n, _)| *n);
    match on_route {
        Some((n, name)) if 2 * n >= avenue.route.cells.len() => name.to_string(),
        _ => format!("avenue {}", index + 1),
    }
}

fn support_task(unit: &Unit, main_effort: &str) -> (Task, WarfightingFunction) {
    let (function, text) = match unit.role {
        Role::Artillery => (
            WarfightingFunction::Fires,
            format!("Support {main_effort} with fires"),
        ),
        Role::CommandPost => (
            WarfightingFunction::CommandControl,
            "Support the operation with command and control".to_string(),
        ),
        Role::Logistics => (
            WarfightingFunction::Sustainment,
            "Support the operation with sustainment".to_string(),
        ),
        _ => (
            WarfightingFunction::Protection,
            "Support the main effort".to_string(),
        ),
    };
    (
        Task {
            verb: TaskVerb::Support,
            object: main_effort.to_string(),
            function,
            source: TaskSource::Implied,
            reference: "support plan".into(),
            text,
        },
        function,
    )
}

/// Inputs shared by every candidate, computed once.
pub struct SearchSpace<'a> {
    pub scenario: &'a Scenario,
    pub mission: &'a MissionAnalysis,
    pub avenues: Vec<&'a AvenueRoute>,
    pub avenue_names: Vec<String>,
    pub maneuver: Vec<&'a Unit>,
    pub support: Vec<&'a Unit>,
    /// `routes[u][a]`: route of manoeuvre unit `u` along avenue `a`.
    pub routes: Vec<Vec<Option<Vec<Coord>>>>,
}

impl<'a> SearchSpace<'a> {
    pub fn new(
        mission: &'a MissionAnalysis,
        terrain: &'a TerrainAnalysisMap,
        scenario: &'a Scenario,
    ) -> Result<Self, CoaGenError> {
        let objectives = mission.specified_objectives(scenario);
        if objectives.is_empty() {
            return Err(CoaGenError::NoSpecifiedObjective);
        }
        let avenues: Vec<&AvenueRoute> = terrain
            .avenues(Side::Friendly)
            .filter(|a| objectives.contains(&a.objective_id))
            .collect();
        if avenues.is_empty() {
            return Err(CoaGenError::NoAvenues);
        }
        let maneuver: Vec<&Unit> = scenario
            .friendly_units
            .iter()
            .filter(|u| u.role.is_maneuver())
            .collect();
        if maneuver.is_empty() {
            return Err(CoaGenError::NoManeuverUnits);
        }
        let support = scenario
            .friendly_units
            .iter()
            .filter(|u| !u.role.is_maneuver())
            .collect();
        let routes = maneuver
            .iter()
            .map(|u| {
                avenues
                    .iter()
                    .map(|a| unit_route(scenario, u, &a.route.cells))
                    .collect()
            })
            .collect();
        let avenue_names = avenues
            .iter()
            .enumerate()
            .map(|(i, a)| avenue_name(scenario, a, i))
            .collect();
        Ok(Self {
            scenario,
            mission,
            avenues,
            avenue_names,
            maneuver,
            support,
            routes,
        })
    }

    /// Every candidate in enumeration order: assignments as an odometer with
    /// the last unit fastest, then main effort, then phasing.
    pub fn candidates(&self) -> Vec<Candidate> {
        let m = self.maneuver.len();
        let a = self.avenues.len();
        let total = a.pow(m as u32);
        let mut out = Vec::new();
        for code in 0..total {
            let mut assignment = vec![0; m];
            let mut rest = code;
            for slot in assignment.iter_mut().rev() {
                *slot = rest % a;
                rest /= a;
            }
            for main_effort in 0..m {
                for phasing in [Phasing::SinglePhase, Phasing::TwoPhase] {
                    out.push(Candidate {
                        id: format!("COA-{:03}", out.len() + 1),
                        assignment: assignment.clone(),
                        main_effort,
                        phasing,
                    });
                }
            }
        }
        out
    }

    fn verb_for(&self, objective: &str) -> TaskVerb {
        self.mission
            .specified_tasks
            .iter()
            .find(|t| t.object == objective)
            .map_or(TaskVerb::Seize, |t| t.verb)
    }

    /// Builds the CoA for a candidate, or `None` if a unit cannot use its avenue.
    pub fn build(&self, c: &Candidate) -> Option<CourseOfAction> {
        let scenario = self.scenario;
        let map = &scenario.map;
        let mut routes = Vec::new();
        for (u, &a) in c.assignment.iter().enumerate() {
            routes.push(self.routes[u][a].clone()?);
        }
        let me_unit = self.maneuver[c.main_effort];
        let me_avenue = self.avenues[c.assignment[c.main_effort]];
        let me_obj = scenario.objective(&me_avenue.objective_id)?;

        let offensive = |u: usize, route: Vec<Coord>| {
            let avenue = self.avenues[c.assignment[u]];
            let obj = scenario
                .objective(&avenue.objective_id)
                .expect("avenues end at objectives");
            let verb = self.verb_for(&obj.id);
            let role = if u == c.main_effort {
                "main effort"
            } else {
                "supporting effort"
            };
            UnitTask {
                unit_id: self.maneuver[u].id.clone(),
                task: Task {
                    verb,
                    object: obj.id.clone(),
                    function: WarfightingFunction::MovementManeuver,
                    source: TaskSource::Specified,
                    reference: role.into(),
                    text: format!(
                        "{} {} via {} ({role})",
                        verb.title(),
                        obj.label,
                        self.avenue_names[c.assignment[u]]
                    ),
                },
                route: Some(route),
                target: Some(obj.id.clone()),
            }
        };
        let support_tasks: Vec<UnitTask> = self
            .support
            .iter()
            .map(|u| {
                let (task, _) = support_task(u, &me_unit.id);
                let route = if u.role == Role::Artillery {
                    artillery_route(scenario, u, me_obj.location)
                } else {
                    vec![u.position]
                };
                UnitTask {
                    unit_id: u.id.clone(),
                    task,
                    route: Some(route),
                    target: None,
                }
            })
            .collect();

        let (phases, synchronization) = match c.phasing {
            Phasing::SinglePhase => {
                let mut tasks: Vec<UnitTask> = routes
                    .iter()
                    .enumerate()
                    .map(|(u, r)| offensive(u, r.clone()))
                    .collect();
                tasks.extend(support_tasks);
                (vec![Phase { index: 0, tasks }], Vec::new())
            }
            Phasing::TwoPhase => {
                let mut first = Vec::new();
                let mut second = Vec::new();
                let mut sync_tick = 1u32;
                for (u, r) in routes.iter().enumerate() {
                    let mid = r.len() / 2;
                    let avenue = self.avenues[c.assignment[u]];
                    let obj = scenario.objective(&avenue.objective_id)?;
                    let lead_cost =
                        route_cost(map, &scenario.weather, self.maneuver[u].role, &r[..=mid]);
                    sync_tick = sync_tick.max(lead_cost.ceil() as u32 + 1);
                    first.push(UnitTask {
                        unit_id: self.maneuver[u].id.clone(),
                        task: Task {
                            verb: TaskVerb::Move,
                            object: obj.id.clone(),
                            function: WarfightingFunction::MovementManeuver,
                            source: TaskSource::Implied,
                            reference: "phase line".into(),
                            text: format!(
                                "Move to phase line at {} on {}",
                                r[mid], self.avenue_names[c.assignment[u]]
                            ),
                        },
                        route: Some(r[..=mid].to_vec()),
                        target: None,
                    });
                    second.push(offensive(u, r[mid..].to_vec()));
                }
                first.extend(support_tasks);
                let sync_tick = sync_tick.min((scenario.time_limit / 2).max(1));
                (
                    vec![
                        Phase {
                            index: 0,
                            tasks: first,
                        },
                        Phase {
                            index: 1,
                            tasks: second,
                        },
                    ],
                    vec![Synchronization {
                        phase: 1,
                        trigger: Trigger::Tick(sync_tick),
                    }],
                )
            }
        };

        let mut axes: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
        for (u, &a) in c.assignment.iter().enumerate() {
            axes.entry(self.avenue_names[a].as_str())
                .or_default()
                .push(self.maneuver[u].id.as_str());
        }
        let axes_text: Vec<String> = axes
            .iter()
            .map(|(name, units)| format!("{} on {name}", units.join("+")))
            .collect();
        let summary = format!(
            "Main effort {} via {} to {}; {}; {}",
            me_unit.id,
            self.avenue_names[c.assignment[c.main_effort]],
            me_obj.label,
            axes_text.join(", "),
            match c.phasing {
                Phasing::SinglePhase => "single phase",
                Phasing::TwoPhase => "two phases with a synchronised phase line",
            }
        );
        Some(CourseOfAction {
            id: c.id.clone(),
            side: Side::Friendly,
            phases,
            boundaries: BTreeMap::new(),
            synchronization,
            summary,
            main_effort: Some(me_unit.id.clone()),
        })
    }
}

/// Expected force ratio at the objectives minus route exposure, plus a small
/// bonus for weighting the main effort.
pub fn score_coa(coa: &CourseOfAction, esm: &EnemySituationMap, scenario: &Scenario) -> f64 {
    let map = &scenario.map;
    let mut per_objective: BTreeMap<String, f64> = BTreeMap::new();
    let mut route_cells = 0usize;
    let mut exposed = 0usize;
    let mut maneuver_cp = 0.0;
    for id in coa.tasked_units() {
        let Some(u) = scenario.unit(id) else { continue };
        if !u.role.is_maneuver() {
            continue;
        }
        maneuver_cp += u.combat_power;
        let route = coa.full_route(id);
        route_cells += route.len();
        exposed += route
            .iter()
            .filter(|c| {
                esm.units
                    .iter()
                    .any(|e| map.distance(**c, e.unit.position) <= EXPOSURE_RADIUS)
            })
            .count();
        let target = coa
            .phases
            .iter()
            .flat_map(|p| p.tasks.iter())
            .filter(|t| t.unit_id == id)
            .find_map(|t| t.target.clone());
        if let Some(obj) = target {
            *per_objective.entry(obj).or_insert(0.0) += u.combat_power;
        }
    }
    let ratios: Vec<f64> = per_objective
        .iter()
        .filter_map(|(obj, cp)| {
            let o = scenario.objective(obj)?;
            let enemy = esm
                .weighted_cp_near(map, &[o.location], EXPOSURE_RADIUS)
                .max(1.0);
            Some((cp / enemy).min(RATIO_CAP))
        })
        .collect();
    let ratio = if ratios.is_empty() {
        0.0
    } else {
        ratios.iter().sum::<f64>() / ratios.len() as f64
    };
    let exposure = if route_cells > 0 {
        exposed as f64 / route_cells as f64
    } else {
        0.0
    };
    let me_share = coa
        .main_effort
        .as_deref()
        .and_then(|id| scenario.unit(id))
        .map_or(0.0, |u| {
            if maneuver_cp > 0.0 {
                u.combat_power / maneuver_cp
            } else {
                0.0
            }
        });
    ratio - exposure + 0.1 * me_share
}

/// Every constructible candidate with boundaries assigned, sorted by score
/// descending then id. Candidates whose axes collapse onto one route are dropped.
pub fn ranked_candidates(
    mission: &MissionAnalysis,
    terrain: &TerrainAnalysisMap,
    esm: &EnemySituationMap,
    scenario: &Scenario,
) -> Result<Vec<ScoredCandidate>, CoaGenError> {
    let space = SearchSpace::new(mission, terrain, scenario)?;
    let mut out: Vec<ScoredCandidate> = space
        .candidates()
        .iter()
        .filter_map(|c| space.build(c))
        .filter_map(|coa| assign_boundaries(&coa, scenario).ok())
        .map(|coa| ScoredCandidate {
            score: score_coa(&coa, esm, scenario),
            coa,
        })
        .collect();
    out.sort_by(|a, b| {
        b.score
            .total_cmp(&a.score)
            .then_with(|| a.coa.id.cmp(&b.coa.id))
    });
    Ok(out)
}

pub fn generate_friendly_coas(
    mission: &MissionAnalysis,
    terrain: &TerrainAnalysisMap,
    esm: &EnemySituationMap,
    scenario: &Scenario,
    config: &CoaConfig,
) -> Result<Vec<CourseOfAction>, CoaGenError> {
    let ranked = ranked_candidates(mission, terrain, esm, scenario)?;
    let mut accepted: Vec<CourseOfAction> = Vec::new();
    let mut best_failure: Option<(String, FeasibilityVerdict)> = None;
    for cand in ranked {
        if accepted.len() >= config.k {
            break;
        }
        let verdict = screen_coa(&cand.coa, mission, esm, scenario, &accepted, &config.screen);
        if verdict.feasible {
            accepted.push(cand.coa);
        } else {
            // Report the candidate that got furthest through the checks, earliest on ties.
            let passed = |v: &FeasibilityVerdict| v.checks.iter().take_while(|c| c.passed).count();
            if best_failure
                .as_ref()
                .is_none_or(|(_, b)| passed(&verdict) > passed(b))
            {
                best_failure = Some((cand.coa.id.clone(), verdict));
            }
        }
    }
    if accepted.is_empty() {
        let (id, verdict) = best_failure.unwrap_or_else(|| {
            (
                "none".into(),
                FeasibilityVerdict::from_checks(vec![crate::coa::ScreenCheck {
                    name: "feasibility".into(),
                    passed: false,
                    detail: "no constructible candidate".into(),
                }]),
            )
        });
        return Err(CoaGenError::NoFeasible { id, verdict });
    }
    Ok(accepted)
}

/// All friendly manoeuvre units advancing on the main avenue in one phase:
/// the yardstick for enemy CoA threat.
pub fn reference_advance(
    scenario: &Scenario,
    terrain: &TerrainAnalysisMap,
) -> Option<CourseOfAction> {
    let avenue = terrain.main_avenue()?;
    let obj = scenario.objective(&avenue.objective_id)?;
    let mut tasks = Vec::new();
    for u in scenario
        .friendly_units
        .iter()
        .filter(|u| u.role.is_maneuver())
    {
        let Some(route) = unit_route(scenario, u, &avenue.route.cells) else {
            continue;
        };
        tasks.push(UnitTask {
            unit_id: u.id.clone(),
            task: Task {
                verb: TaskVerb::Seize,
                object: obj.id.clone(),
                function: WarfightingFunction::MovementManeuver,
                source: TaskSource::Implied,
                reference: "reference advance".into(),
                text: format!("Seize {}", obj.label),
            },
            route: Some(route),
            target: Some(obj.id.clone()),
        });
    }
    if tasks.is_empty() {
        return None;
    }
    let main_effort = tasks.first().map(|t| t.unit_id.clone());
    Some(CourseOfAction {
        id: "REF".into(),
        side: Side::Friendly,
        phases: vec![Phase { index: 0, tasks }],
        boundaries: BTreeMap::new(),
        synchronization: Vec::new(),
        summary: format!("Reference advance on the main avenue to {}", obj.label),
        main_effort,
    })
}
