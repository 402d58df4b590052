//! Enemy courses of action from doctrinal archetypes.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::coa::generate::reference_advance;
use crate::coa::{CourseOfAction, Phase, Synchronization, Trigger, UnitTask};
use crate::grid::{sort_row_major, Coord};
use crate::ipb::enemy::{EnemySituationMap, PlacementContext};
use crate::ipb::terrain::TerrainAnalysisMap;
use crate::ipb::IpbError;
use crate::opord::{Task, TaskSource, TaskVerb, WarfightingFunction};
use crate::pathfind::least_cost_route;
use crate::scenario::{Posture, Scenario, Side, Unit, Zone};
use crate::wargame::monte_carlo_evaluate;

pub const TERRAIN_WEIGHT: f64 = 0.6;
pub const POSTURE_WEIGHT: f64 = 0.4;
pub const TEMPERATURE: f64 = 1.0;
pub const THREAT_REPLICATIONS: usize = 50;
pub const THREAT_SEED: u64 = 11;
const DEPTH_STEP: i32 = 3;
const WITHDRAW_STEP: i32 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnemyArchetype {
    DefendForward,
    DefendInDepth,
    CounterattackMainAvenue,
    WithdrawDelay,
}

impl EnemyArchetype {
    pub const ALL: [EnemyArchetype; 4] = [
        EnemyArchetype::DefendForward,
        EnemyArchetype::DefendInDepth,
        EnemyArchetype::CounterattackMainAvenue,
        EnemyArchetype::WithdrawDelay,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            EnemyArchetype::DefendForward => "defend_forward",
            EnemyArchetype::DefendInDepth => "defend_in_depth",
            EnemyArchetype::CounterattackMainAvenue => "counterattack_main_avenue",
            EnemyArchetype::WithdrawDelay => "withdraw_delay",
        }
    }
}

impl std::fmt::Display for EnemyArchetype {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnemyCoA {
    pub coa: CourseOfAction,
    pub archetype: EnemyArchetype,
    /// Enemy units with the posture this CoA assigns them.
    pub forces: Vec<Unit>,
    pub likelihood: f64,
    pub threat: f64,
    /// Raw archetype fit before normalisation.
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnemyCoaSet {
    pub coas: Vec<EnemyCoA>,
    pub diagnostics: Vec<String>,
}

impl EnemyCoaSet {
    pub fn most_likely(&self) -> Option<&EnemyCoA> {
        self.coas.first()
    }
}

/// Softmax over min-max normalised scores. A constant score vector is uniform.
pub fn likelihoods(scores: &[f64]) -> Vec<f64> {
    if scores.is_empty() {
        return Vec::new();
    }
    let lo = scores.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let norm: Vec<f64> = scores
        .iter()
        .map(|s| if hi > lo { (s - lo) / (hi - lo) } else { 1.0 })
        .collect();
    let exp: Vec<f64> = norm
        .iter()
        .map(|n| ((n - 1.0) / TEMPERATURE).exp())
        .collect();
    let total: f64 = exp.iter().sum();
    exp.iter().map(|e| e / total).collect()
}

fn task(verb: TaskVerb, object: &str, text: String) -> Task {
    Task {
        verb,
        object: object.to_string(),
        function: WarfightingFunction::MovementManeuver,
        source: TaskSource::Implied,
        reference: "enemy doctrine".into(),
        text,
    }
}

fn defend_task(u: &Unit, route: Vec<Coord>) -> UnitTask {
    UnitTask {
        unit_id: u.id.clone(),
        task: task(
            TaskVerb::Defend,
            &u.id,
            format!("Defend in position at {}", u.position),
        ),
        route: Some(route),
        target: None,
    }
}

/// Every unit holds its current position in a prepared defence.
pub fn hold_in_place(esm: &EnemySituationMap) -> EnemyCoA {
    let forces: Vec<Unit> = esm
        .units
        .iter()
        .map(|e| Unit {
            posture: Posture::DefendPrepared,
            ..e.unit.clone()
        })
        .collect();
    let tasks = forces
        .iter()
        .map(|u| defend_task(u, vec![u.position]))
        .collect();
    EnemyCoA {
        coa: CourseOfAction {
            id: "ECOA-HOLD".into(),
            side: Side::Enemy,
            phases: vec![Phase { index: 0, tasks }],
            boundaries: BTreeMap::new(),
            synchronization: Vec::new(),
            summary: "All enemy units hold in place".into(),
            main_effort: None,
        },
        archetype: EnemyArchetype::DefendForward,
        forces,
        likelihood: 1.0,
        threat: 0.0,
        score: 0.0,
    }
}

struct Instantiation {
    archetype: EnemyArchetype,
    forces: Vec<Unit>,
    phases: Vec<Phase>,
    synchronization: Vec<Synchronization>,
    summary: String,
    terrain_fit: f64,
    posture_fit: f64,
}

fn finite_depth(ctx: &PlacementContext, c: Coord) -> Option<i32> {
    let d = ctx.depth(c);
    (d != i32::MAX).then_some(d)
}

fn mean(values: impl IntoIterator<Item = f64>) -> f64 {
    let (sum, n) = values
        .into_iter()
        .fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

fn fraction<T>(items: &[T], pred: impl Fn(&T) -> bool) -> f64 {
    if items.is_empty() {
        0.0
    } else {
        items.iter().filter(|x| pred(x)).count() as f64 / items.len() as f64
    }
}

/// Median depth over units with a finite depth.
fn median_depth(ctx: &PlacementContext, units: &[Unit]) -> i32 {
    let mut d: Vec<i32> = units
        .iter()
        .filter_map(|u| finite_depth(ctx, u.position))
        .collect();
    d.sort_unstable();
    d.get(d.len().saturating_sub(1) / 2).copied().unwrap_or(0)
}

/// Best cell within `step` cells that is deeper than `from`: deepest first,
/// then highest ground, then row-major.
fn deeper_cell(
    ctx: &PlacementContext,
    scenario: &Scenario,
    u: &Unit,
    step: i32,
) -> Option<Vec<Coord>> {
    let here = finite_depth(ctx, u.position)?;
    let mut cells: Vec<Coord> = ctx
        .map
        .dilate([u.position].iter(), step)
        .into_iter()
        .filter(|c| ctx.map.passable(*c, u.role))
        .filter(|c| finite_depth(ctx, *c).is_some_and(|d| d > here))
        .collect();
    sort_row_major(&mut cells);
    let best = cells
        .into_iter()
        .fold(None, |best: Option<Coord>, c| match best {
            Some(b) => {
                let kb = (ctx.depth(b), ctx.high_ground(b));
                let kc = (ctx.depth(c), ctx.high_ground(c));
                if kc.0 > kb.0 || (kc.0 == kb.0 && kc.1 > kb.1) {
                    Some(c)
                } else {
                    Some(b)
                }
            }
            None => Some(c),
        })?;
    least_cost_route(ctx.map, &scenario.weather, u.role, &[u.position], best).map(|r| r.cells)
}

fn with_posture(units: &[Unit], posture: impl Fn(&Unit) -> Posture) -> Vec<Unit> {
    units
        .iter()
        .map(|u| Unit {
            posture: posture(u),
            ..u.clone()
        })
        .collect()
}

fn defend_forward(ctx: &PlacementContext, units: &[Unit]) -> Instantiation {
    let median = median_depth(ctx, units);
    let forward: Vec<&Unit> = units
        .iter()
        .filter(|u| finite_depth(ctx, u.position).is_some_and(|d| d <= median))
        .collect();
    let forces = with_posture(units, |_| Posture::DefendPrepared);
    let tasks = forces
        .iter()
        .map(|u| defend_task(u, vec![u.position]))
        .collect();
    Instantiation {
        archetype: EnemyArchetype::DefendForward,
        terrain_fit: mean(forward.iter().map(|u| ctx.high_ground(u.position))),
        posture_fit: fraction(units, |u| u.posture == Posture::DefendPrepared),
        forces,
        phases: vec![Phase { index: 0, tasks }],
        synchronization: Vec::new(),
        summary: "Enemy defends forward on current positions".into(),
    }
}

fn defend_in_depth(ctx: &PlacementContext, scenario: &Scenario, units: &[Unit]) -> Instantiation {
    let median = median_depth(ctx, units);
    let depths: Vec<i32> = units
        .iter()
        .filter_map(|u| finite_depth(ctx, u.position))
        .collect();
    let spread = match (depths.iter().min(), depths.iter().max()) {
        (Some(lo), Some(hi)) => (hi - lo) as f64,
        _ => 0.0,
    };
    let mut forces = Vec::new();
    let mut tasks = Vec::new();
    for u in units {
        let forward = finite_depth(ctx, u.position).is_some_and(|d| d <= median);
        let route = if forward && u.role.is_maneuver() {
            deeper_cell(ctx, scenario, u, DEPTH_STEP).unwrap_or_else(|| vec![u.position])
        } else {
            vec![u.position]
        };
        let unit = Unit {
            posture: if forward {
                Posture::DefendHasty
            } else {
                u.posture
            },
            ..u.clone()
        };
        let end = *route.last().expect("route is never empty");
        tasks.push(UnitTask {
            unit_id: u.id.clone(),
            task: task(TaskVerb::Defend, &u.id, format!("Defend in depth at {end}")),
            route: Some(route),
            target: None,
        });
        forces.push(unit);
    }
    Instantiation {
        archetype: EnemyArchetype::DefendInDepth,
        terrain_fit: spread / (spread + 3.0),
        posture_fit: fraction(units, |u| {
            u.posture.is_defending() && finite_depth(ctx, u.position).is_some_and(|d| d >= 2)
        }),
        forces,
        phases: vec![Phase { index: 0, tasks }],
        synchronization: Vec::new(),
        summary: "Enemy trades space for depth, pulling forward units back".into(),
    }
}

fn reserve_candidates<'u>(ctx: &PlacementContext, units: &'u [Unit]) -> Vec<&'u Unit> {
    let reserves: Vec<&Unit> = units
        .iter()
        .filter(|u| u.posture == Posture::Reserve && u.role.is_maneuver())
        .collect();
    if !reserves.is_empty() {
        return reserves;
    }
    units
        .iter()
        .filter(|u| u.role.is_maneuver())
        .filter_map(|u| finite_depth(ctx, u.position).map(|d| (d, u)))
        .fold(None, |best: Option<(i32, &Unit)>, x| match best {
            Some(b) if b.0 >= x.0 => Some(b),
            _ => Some(x),
        })
        .map(|(_, u)| vec![u])
        .unwrap_or_default()
}

fn counterattack(
    ctx: &PlacementContext,
    scenario: &Scenario,
    terrain: &TerrainAnalysisMap,
    units: &[Unit],
) -> Option<Instantiation> {
    let avenue = terrain.main_avenue()?;
    let reserve = reserve_candidates(ctx, units);
    if reserve.is_empty() {
        return None;
    }
    let ids: Vec<&str> = reserve.iter().map(|u| u.id.as_str()).collect();
    let mut forces = Vec::new();
    let mut tasks = Vec::new();
    for u in units {
        if ids.contains(&u.id.as_str()) {
            let target = avenue
                .route
                .cells
                .iter()
                .copied()
                .filter(|c| ctx.map.passable(*c, u.role))
                .min_by_key(|c| ctx.map.distance(u.position, *c));
            let route = target
                .and_then(|t| {
                    least_cost_route(ctx.map, &scenario.weather, u.role, &[u.position], t)
                })
                .map_or(vec![u.position], |r| r.cells);
            let end = *route.last().expect("route is never empty");
            tasks.push(UnitTask {
                unit_id: u.id.clone(),
                task: task(
                    TaskVerb::Destroy,
                    &avenue.objective_id,
                    format!("Counterattack onto the main avenue at {end}"),
                ),
                route: Some(route),
                target: None,
            });
            forces.push(Unit {
                posture: Posture::Attack,
                ..u.clone()
            });
        } else {
            let unit = Unit {
                posture: Posture::DefendPrepared,
                ..u.clone()
            };
            tasks.push(defend_task(&unit, vec![u.position]));
            forces.push(unit);
        }
    }
    Some(Instantiation {
        archetype: EnemyArchetype::CounterattackMainAvenue,
        terrain_fit: reserve
            .iter()
            .map(|u| {
                let d = ctx.main_axis_distance(u.position);
                if d == i32::MAX {
                    0.0
                } else {
                    1.0 / (1.0 + d as f64 / 3.0)
                }
            })
            .fold(0.0, f64::max),
        posture_fit: fraction(units, |u| {
            matches!(
                u.posture,
                Posture::Reserve | Posture::Attack | Posture::Moving
            )
        }),
        forces,
        phases: vec![Phase { index: 0, tasks }],
        synchronization: Vec::new(),
        summary: format!(
            "Enemy counterattacks the main avenue with {}",
            ids.join(", ")
        ),
    })
}

fn withdraw_delay(ctx: &PlacementContext, scenario: &Scenario, units: &[Unit]) -> Instantiation {
    let forces = with_posture(units, |_| Posture::DefendHasty);
    let hold = forces
        .iter()
        .map(|u| defend_task(u, vec![u.position]))
        .collect();
    let withdraw = forces
        .iter()
        .map(|u| {
            let route =
                deeper_cell(ctx, scenario, u, WITHDRAW_STEP).unwrap_or_else(|| vec![u.position]);
            let end = *route.last().expect("route is never empty");
            UnitTask {
                unit_id: u.id.clone(),
                task: task(
                    TaskVerb::Move,
                    &u.id,
                    format!("Withdraw to delay position at {end}"),
                ),
                route: Some(route),
                target: None,
            }
        })
        .collect();
    Instantiation {
        archetype: EnemyArchetype::WithdrawDelay,
        terrain_fit: 1.0 - mean(units.iter().map(|u| ctx.high_ground(u.position))),
        posture_fit: fraction(units, |u| {
            matches!(u.posture, Posture::DefendHasty | Posture::Moving)
        }),
        forces,
        phases: vec![
            Phase {
                index: 0,
                tasks: hold,
            },
            Phase {
                index: 1,
                tasks: withdraw,
            },
        ],
        synchronization: vec![Synchronization {
            phase: 1,
            trigger: Trigger::Tick((scenario.time_limit / 3).max(1)),
        }],
        summary: "Enemy delays forward, then withdraws to depth".into(),
    }
}

fn boundaries(
    map: &crate::grid::GridMap,
    phases: &[Phase],
    forces: &[Unit],
) -> BTreeMap<String, Zone> {
    forces
        .iter()
        .map(|u| {
            let mut cells: Vec<Coord> = phases
                .iter()
                .flat_map(|p| p.tasks.iter())
                .filter(|t| t.unit_id == u.id)
                .filter_map(|t| t.route.clone())
                .flatten()
                .collect();
            cells.push(u.position);
            (u.id.clone(), Zone::new(map.dilate(cells.iter(), 1)))
        })
        .collect()
}

pub fn generate_enemy_coas(
    esm: &EnemySituationMap,
    terrain: &TerrainAnalysisMap,
    scenario: &Scenario,
    k: usize,
) -> Result<EnemyCoaSet, IpbError> {
    if k == 0 {
        return Err(IpbError::ZeroK);
    }
    if esm.is_empty() {
        return Err(IpbError::EmptySituation);
    }
    let ctx = PlacementContext::new(scenario, terrain);
    let units: Vec<Unit> = esm.units.iter().map(|e| e.unit.clone()).collect();
    let mut diagnostics = Vec::new();

    let mut inst = vec![
        defend_forward(&ctx, &units),
        defend_in_depth(&ctx, scenario, &units),
    ];
    match counterattack(&ctx, scenario, terrain, &units) {
        Some(i) => inst.push(i),
        None => diagnostics.push(
            "counterattack_main_avenue not instantiable: no manoeuvre reserve or main avenue"
                .into(),
        ),
    }
    inst.push(withdraw_delay(&ctx, scenario, &units));

    let scores: Vec<f64> = inst
        .iter()
        .map(|i| TERRAIN_WEIGHT * i.terrain_fit + POSTURE_WEIGHT * i.posture_fit)
        .collect();
    let probs = likelihoods(&scores);

    let reference = reference_advance(scenario, terrain);
    if reference.is_none() {
        diagnostics.push("no reference friendly advance; threat set to 0".into());
    }
    let mut coas: Vec<EnemyCoA> = inst
        .into_iter()
        .zip(scores.iter().zip(&probs))
        .map(|(i, (&score, &likelihood))| {
            let boundaries = boundaries(&scenario.map, &i.phases, &i.forces);
            EnemyCoA {
                coa: CourseOfAction {
                    id: format!("ECOA-{}", i.archetype.as_str()),
                    side: Side::Enemy,
                    phases: i.phases,
                    boundaries,
                    synchronization: i.synchronization,
                    summary: i.summary,
                    main_effort: None,
                },
                archetype: i.archetype,
                forces: i.forces,
                likelihood,
                threat: 0.0,
                score,
            }
        })
        .collect();
    coas.sort_by(|a, b| {
        b.likelihood
            .total_cmp(&a.likelihood)
            .then_with(|| a.archetype.cmp(&b.archetype))
    });
    if k > coas.len() {
        diagnostics.push(format!(
            "requested {k} enemy CoAs but only {} archetypes are instantiable",
            coas.len()
        ));
    }
    coas.truncate(k);
    let total: f64 = coas.iter().map(|c| c.likelihood).sum();
    for c in &mut coas {
        c.likelihood /= total;
    }
    if let Some(reference) = &reference {
        for c in &mut coas {
            match monte_carlo_evaluate(scenario, reference, c, THREAT_REPLICATIONS, THREAT_SEED) {
                Ok(stats) => c.threat = stats.friendly_loss_rate.clamp(0.0, 1.0),
                Err(e) => diagnostics.push(format!("threat of {}: {e}", c.coa.id)),
            }
        }
    }
    Ok(EnemyCoaSet { coas, diagnostics })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn likelihoods_sum_to_one() {
        let p = likelihoods(&[0.2, 0.9, 0.4, 0.1]);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(p[1] > p[2] && p[2] > p[0] && p[0] > p[3]);
    }

    #[test]
    fn constant_scores_are_uniform() {
        let p = likelihoods(&[0.5, 0.5, 0.5]);
        for x in p {
            assert!((x - 1.0 / 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn likelihoods_are_scale_free() {
        let a = likelihoods(&[0.2, 0.9, 0.4]);
        let b = likelihoods(&[2.0 * 0.2 + 5.0, 2.0 * 0.9 + 5.0, 2.0 * 0.4 + 5.0]);
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn archetype_order_is_tie_break_order() {
        let mut v = EnemyArchetype::ALL.to_vec();
        v.reverse();
        v.sort();
        assert_eq!(v, EnemyArchetype::ALL.to_vec());
    }
}
