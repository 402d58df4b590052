use std::collections::{BTreeMap, BTreeSet};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal};
use serde::{Deserialize, Serialize};

use crate::coa::{CourseOfAction, Trigger};
use crate::grid::{Coord, Role, Surface};
use crate::ipb::ecoa::EnemyCoA;
use crate::scenario::{Scenario, Side, Unit, Zone};
use crate::wargame::attrition::{resolve_engagement_k, K};
use crate::wargame::{Event, EventKind, WargameError};

pub const ARTILLERY_RANGE: i32 = 5;
pub const COLLAPSE_FRACTION: f64 = 0.1;
pub const HIGH_GROUND_PERCENTILE: f64 = 0.75;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub k: f64,
    /// Log-space standard deviation of the engagement noise; 0 disables noise.
    pub noise_sigma: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            k: K,
            noise_sigma: 0.2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimState {
    pub tick: u32,
    pub units: Vec<Unit>,
    pub seized_objectives: BTreeSet<String>,
    pub event_log: Vec<Event>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseMark {
    pub phase: usize,
    pub tick: u32,
    pub friendly_cp: f64,
    pub enemy_cp: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimResult {
    pub state: SimState,
    pub success: bool,
    pub duration: u32,
    pub friendly_start_cp: f64,
    pub enemy_start_cp: f64,
    pub friendly_end_cp: f64,
    pub enemy_end_cp: f64,
    /// Friendly phase starts, with side totals at that moment.
    pub phase_marks: Vec<PhaseMark>,
}

impl SimResult {
    pub fn trace(&self) -> &[Event] {
        &self.state.event_log
    }

    /// Per friendly phase `(friendly_delta, enemy_delta)`; phases never reached are absent.
    pub fn phase_deltas(&self) -> Vec<(usize, f64, f64)> {
        let mut out = Vec::new();
        for (i, m) in self.phase_marks.iter().enumerate() {
            let (f_end, e_end) = match self.phase_marks.get(i + 1) {
                Some(n) => (n.friendly_cp, n.enemy_cp),
                None => (self.friendly_end_cp, self.enemy_end_cp),
            };
            out.push((m.phase, f_end - m.friendly_cp, e_end - m.enemy_cp));
        }
        out
    }
}

#[derive(Debug, Clone)]
struct Agent {
    unit: Unit,
    side: Side,
    route: Vec<Coord>,
    pos_idx: usize,
    budget: f64,
    zone: Option<Zone>,
}

impl Agent {
    fn live(&self) -> bool {
        self.unit.combat_power > 0.0
    }

    fn range(&self) -> i32 {
        if self.unit.role == Role::Artillery {
            ARTILLERY_RANGE
        } else {
            1
        }
    }
}

/// Precomputed, validated inputs shared by every replication.
#[derive(Debug, Clone)]
pub struct Battle<'a> {
    scenario: &'a Scenario,
    friendly: &'a CourseOfAction,
    enemy: &'a CourseOfAction,
    agents: Vec<Agent>,
    objectives: Vec<(String, Coord)>,
    high_ground: Vec<bool>,
    config: SimConfig,
}

fn initial_route(coa: &CourseOfAction, unit: &Unit) -> Vec<Coord> {
    match coa.task_for(0, &unit.id).and_then(|t| t.route.clone()) {
        Some(r) if !r.is_empty() => r,
        _ => vec![unit.position],
    }
}

impl<'a> Battle<'a> {
    pub fn new(
        scenario: &'a Scenario,
        friendly: &'a CourseOfAction,
        enemy: &'a EnemyCoA,
        config: SimConfig,
    ) -> Result<Self, WargameError> {
        for (coa, forces) in [
            (friendly, &scenario.friendly_units),
            (&enemy.coa, &enemy.forces),
        ] {
            for id in coa.tasked_units() {
                if !forces.iter().any(|u| u.id == id) {
                    return Err(WargameError::UnknownUnit {
                        coa: coa.id.clone(),
                        unit: id.to_string(),
                    });
                }
            }
        }
        let mut agents = Vec::new();
        for (side, coa, forces) in [
            (Side::Friendly, friendly, &scenario.friendly_units),
            (Side::Enemy, &enemy.coa, &enemy.forces),
        ] {
            for u in forces {
                agents.push(Agent {
                    unit: u.clone(),
                    side,
                    route: initial_route(coa, u),
                    pos_idx: 0,
                    budget: 0.0,
                    zone: coa.boundaries.get(&u.id).cloned(),
                });
            }
        }
        let objectives = friendly
            .objectives(scenario)
            .into_iter()
            .filter_map(|id| scenario.objective(&id).map(|o| (id.clone(), o.location)))
            .collect();
        let map = &scenario.map;
        let mut elev: Vec<f64> = map.cells.iter().map(|c| c.elevation).collect();
        elev.sort_by(f64::total_cmp);
        let denom = (elev.len().max(2) - 1) as f64;
        let high_ground = map
            .cells
            .iter()
            .map(|c| {
                elev.partition_point(|e| *e < c.elevation) as f64 / denom >= HIGH_GROUND_PERCENTILE
            })
            .collect();
        Ok(Self {
            scenario,
            friendly,
            enemy: &enemy.coa,
            agents,
            objectives,
            high_ground,
            config,
        })
    }

    fn terrain_mod(&self, c: Coord) -> f64 {
        let map = &self.scenario.map;
        let cover = match map.cell(c).surface {
            Surface::Forest | Surface::Urban => 1.3,
            _ => 1.0,
        };
        let high = if self.high_ground[map.index(c)] {
            1.2
        } else {
            1.0
        };
        cover * high
    }

    pub fn run(&self, seed: u64) -> SimResult {
        Run::new(self, seed).play()
    }
}

struct Run<'b, 'a> {
    battle: &'b Battle<'a>,
    agents: Vec<Agent>,
    rng: ChaCha8Rng,
    noise: Option<LogNormal<f64>>,
    tick: u32,
    phase: [usize; 2],
    broken: [bool; 2],
    seized: BTreeSet<String>,
    log: Vec<Event>,
    start_cp: [f64; 2],
    marks: Vec<PhaseMark>,
}

fn side_idx(side: Side) -> usize {
    match side {
        Side::Friendly => 0,
        Side::Enemy => 1,
    }
}

impl<'b, 'a> Run<'b, 'a> {
    fn new(battle: &'b Battle<'a>, seed: u64) -> Self {
        let agents = battle.agents.clone();
        let mut start_cp = [0.0; 2];
        for a in &agents {
            start_cp[side_idx(a.side)] += a.unit.combat_power;
        }
        let sigma = battle.config.noise_sigma;
        let noise = (sigma > 0.0).then(|| {
            LogNormal::new(-sigma * sigma / 2.0, sigma).expect("sigma is positive and finite")
        });
        Self {
            battle,
            agents,
            rng: ChaCha8Rng::seed_from_u64(seed),
            noise,
            tick: 0,
            phase: [0, 0],
            broken: [false, false],
            seized: BTreeSet::new(),
            log: Vec::new(),
            start_cp,
            marks: vec![PhaseMark {
                phase: 0,
                tick: 0,
                friendly_cp: start_cp[0],
                enemy_cp: start_cp[1],
            }],
        }
    }

    fn totals(&self) -> [f64; 2] {
        let mut t = [0.0; 2];
        for a in &self.agents {
            t[side_idx(a.side)] += a.unit.combat_power;
        }
        t
    }

    fn active(&self, i: usize) -> bool {
        let a = &self.agents[i];
        a.live() && !self.broken[side_idx(a.side)]
    }

    fn coa(&self, side: Side) -> &'b CourseOfAction {
        match side {
            Side::Friendly => self.battle.friendly,
            Side::Enemy => self.battle.enemy,
        }
    }

    fn emit(&mut self, kind: EventKind, actors: Vec<String>, detail: Vec<f64>) {
        self.log.push(Event {
            tick: self.tick,
            kind,
            actors,
            detail,
        });
    }

    fn routes_done(&self, side: Side) -> bool {
        self.agents
            .iter()
            .filter(|a| a.side == side && a.live())
            .all(|a| a.pos_idx + 1 >= a.route.len())
    }

    fn advance_phases(&mut self) {
        for side in [Side::Friendly, Side::Enemy] {
            let s = side_idx(side);
            let coa = self.coa(side);
            let next = self.phase[s] + 1;
            if next >= coa.phases.len() {
                continue;
            }
            let triggers: Vec<&Trigger> = coa
                .synchronization
                .iter()
                .filter(|x| x.phase == next)
                .map(|x| &x.trigger)
                .collect();
            let fire = if triggers.is_empty() {
                self.routes_done(side)
            } else {
                triggers.iter().any(|t| match t {
                    Trigger::Tick(t) => self.tick >= *t,
                    Trigger::ObjectiveSeized(o) => self.seized.contains(o),
                })
            };
            if !fire {
                continue;
            }
            let phase = &coa.phases[next];
            for a in self.agents.iter_mut().filter(|a| a.side == side) {
                let Some(task) = phase.tasks.iter().find(|t| t.unit_id == a.unit.id) else {
                    continue;
                };
                let Some(r) = &task.route else { continue };
                let mut route: Vec<Coord> = a.route[a.pos_idx..].to_vec();
                for c in r {
                    if route.last() != Some(c) {
                        route.push(*c);
                    }
                }
                a.route = route;
                a.pos_idx = 0;
            }
            self.phase[s] = next;
            if side == Side::Friendly {
                let t = self.totals();
                self.marks.push(PhaseMark {
                    phase: next,
                    tick: self.tick,
                    friendly_cp: t[0],
                    enemy_cp: t[1],
                });
            }
            self.emit(
                EventKind::PhaseAdvance,
                vec![side.to_string()],
                vec![next as f64],
            );
        }
    }

    fn opponent_within(&self, i: usize, at: Coord, radius: i32) -> bool {
        let map = &self.battle.scenario.map;
        let side = self.agents[i].side;
        (0..self.agents.len()).any(|j| {
            self.agents[j].side != side
                && self.active(j)
                && map.distance(self.agents[j].unit.position, at) <= radius
        })
    }

    fn move_units(&mut self) {
        let map = &self.battle.scenario.map;
        let weather = &self.battle.scenario.weather;
        for i in 0..self.agents.len() {
            if !self.active(i) {
                continue;
            }
            if self.opponent_within(i, self.agents[i].unit.position, 1) {
                self.agents[i].budget = 0.0;
                continue;
            }
            if self.agents[i].pos_idx + 1 >= self.agents[i].route.len() {
                self.agents[i].budget = 0.0;
                continue;
            }
            self.agents[i].budget += 1.0;
            loop {
                let a = &self.agents[i];
                let Some(&next) = a.route.get(a.pos_idx + 1) else {
                    self.agents[i].budget = 0.0;
                    break;
                };
                let here = a.unit.position;
                let blocked = self.opponent_within(i, next, 0)
                    || a.zone.as_ref().is_some_and(|z| !z.contains(next));
                let cost = map.step_cost(weather, here, next, a.unit.role);
                if blocked || !cost.is_finite() {
                    let a = &mut self.agents[i];
                    a.budget = a.budget.min(1.0);
                    break;
                }
                if cost > a.budget + 1e-9 {
                    break;
                }
                let a = &mut self.agents[i];
                a.budget -= cost;
                a.pos_idx += 1;
                a.unit.position = next;
                let id = a.unit.id.clone();
                self.emit(
                    EventKind::Move,
                    vec![id],
                    vec![here.x as f64, here.y as f64, next.x as f64, next.y as f64],
                );
                if self.opponent_within(i, next, 1) {
                    self.agents[i].budget = 0.0;
                    break;
                }
            }
        }
    }

    fn choose_target(&self, i: usize) -> Option<usize> {
        let map = &self.battle.scenario.map;
        let me = &self.agents[i];
        let anchor = if me.unit.role == Role::Artillery && me.side == Side::Friendly {
            self.battle
                .friendly
                .main_effort
                .as_deref()
                .and_then(|id| self.agents.iter().find(|a| a.unit.id == id && a.live()))
                .map(|a| a.unit.position)
        } else {
            None
        };
        (0..self.agents.len())
            .filter(|&j| {
                self.agents[j].side != me.side
                    && self.active(j)
                    && map.distance(me.unit.position, self.agents[j].unit.position) <= me.range()
            })
            .min_by(|&a, &b| {
                let ua = &self.agents[a].unit;
                let ub = &self.agents[b].unit;
                let key = |u: &Unit| {
                    (
                        anchor.map_or(0, |p| map.distance(p, u.position)),
                        map.distance(me.unit.position, u.position),
                    )
                };
                key(ua).cmp(&key(ub)).then_with(|| ua.id.cmp(&ub.id))
            })
    }

    fn draw_noise(&mut self) -> (f64, f64) {
        match &self.noise {
            Some(d) => (d.sample(&mut self.rng), d.sample(&mut self.rng)),
            None => (1.0, 1.0),
        }
    }

    fn is_defender(&self, i: usize, other: usize) -> bool {
        let a = &self.agents[i].unit;
        let b = &self.agents[other].unit;
        match (a.posture.is_defending(), b.posture.is_defending()) {
            (true, false) => true,
            (false, true) => false,
            _ => self.agents[i].side == Side::Enemy,
        }
    }

    fn engage(&mut self) {
        let n = self.agents.len();
        let targets: Vec<Option<usize>> = (0..n)
            .map(|i| {
                if self.active(i) {
                    self.choose_target(i)
                } else {
                    None
                }
            })
            .collect();
        let vis = self.battle.scenario.weather.visibility_modifier();
        let k = self.battle.config.k;
        let mut delta = vec![0.0; n];
        for i in 0..n {
            let Some(j) = targets[i] else { continue };
            let mutual = targets[j] == Some(i);
            if mutual && j < i {
                continue;
            }
            let noise = self.draw_noise();
            let cp = |x: usize| self.agents[x].unit.combat_power;
            let (att, def) = if mutual {
                if self.is_defender(i, j) {
                    (j, i)
                } else {
                    (i, j)
                }
            } else if self.agents[i].unit.posture.is_defending() {
                (j, i)
            } else {
                (i, j)
            };
            let att_cp = if mutual || att == i { cp(att) } else { 0.0 };
            let def_cp = if mutual || def == i { cp(def) } else { 0.0 };
            let dpos = self.agents[def].unit.position;
            let (da, dd) = resolve_engagement_k(
                k,
                att_cp,
                def_cp,
                self.battle.terrain_mod(dpos),
                self.agents[def].unit.posture.modifier(),
                vis,
                noise,
            )
            .expect("engine only passes valid inputs");
            delta[att] += da;
            delta[def] += dd;
            let actors = vec![
                self.agents[att].unit.id.clone(),
                self.agents[def].unit.id.clone(),
            ];
            self.emit(EventKind::Engage, actors, vec![da, dd]);
        }
        for (i, d) in delta.into_iter().enumerate() {
            if d == 0.0 {
                continue;
            }
            let a = &mut self.agents[i];
            let before = a.unit.combat_power;
            a.unit.combat_power = (before + d).max(0.0);
            if before > 0.0 && a.unit.combat_power == 0.0 {
                let p = a.unit.position;
                let id = a.unit.id.clone();
                self.emit(EventKind::Destroy, vec![id], vec![p.x as f64, p.y as f64]);
            }
        }
    }

    fn seize(&mut self) {
        let map = &self.battle.scenario.map;
        for (id, loc) in &self.battle.objectives {
            if self.seized.contains(id) {
                continue;
            }
            let held = (0..self.agents.len()).find(|&i| {
                self.agents[i].side == Side::Friendly
                    && self.active(i)
                    && self.agents[i].unit.position == *loc
            });
            let Some(holder) = held else { continue };
            let contested = (0..self.agents.len()).any(|j| {
                self.agents[j].side == Side::Enemy
                    && self.active(j)
                    && map.distance(self.agents[j].unit.position, *loc) <= 1
            });
            if contested {
                continue;
            }
            self.seized.insert(id.clone());
            let actor = self.agents[holder].unit.id.clone();
            self.log.push(Event {
                tick: self.tick,
                kind: EventKind::Seize,
                actors: vec![actor, id.clone()],
                detail: vec![loc.x as f64, loc.y as f64],
            });
        }
    }

    fn check_collapse(&mut self) {
        let t = self.totals();
        let frac = |s: usize| {
            if self.start_cp[s] > 0.0 {
                t[s] / self.start_cp[s]
            } else {
                1.0
            }
        };
        let (f, e) = (frac(0), frac(1));
        let low = [f < COLLAPSE_FRACTION, e < COLLAPSE_FRACTION];
        match low {
            [true, true] => {
                if f <= e {
                    self.broken[0] = true;
                }
                if e <= f {
                    self.broken[1] = true;
                }
            }
            [true, false] => self.broken[0] = true,
            [false, true] => self.broken[1] = true,
            [false, false] => {}
        }
    }

    fn all_seized(&self) -> bool {
        !self.battle.objectives.is_empty()
            && self
                .battle
                .objectives
                .iter()
                .all(|(id, _)| self.seized.contains(id))
    }

    fn play(mut self) -> SimResult {
        let limit = self.battle.scenario.time_limit;
        while self.tick < limit {
            self.tick += 1;
            self.advance_phases();
            self.move_units();
            self.engage();
            self.check_collapse();
            self.seize();
            if self.all_seized() || self.broken[0] {
                break;
            }
        }
        let t = self.totals();
        let success = self.all_seized() && !self.broken[0];
        let units: Vec<Unit> = self.agents.iter().map(|a| a.unit.clone()).collect();
        SimResult {
            success,
            duration: self.tick,
            friendly_start_cp: self.start_cp[0],
            enemy_start_cp: self.start_cp[1],
            friendly_end_cp: t[0],
            enemy_end_cp: t[1],
            phase_marks: self.marks,
            state: SimState {
                tick: self.tick,
                units,
                seized_objectives: self.seized,
                event_log: self.log,
            },
        }
    }
}

pub fn simulate(
    scenario: &Scenario,
    friendly: &CourseOfAction,
    enemy: &EnemyCoA,
    seed: u64,
) -> Result<SimResult, WargameError> {
    simulate_with(scenario, friendly, enemy, seed, SimConfig::default())
}

pub fn simulate_with(
    scenario: &Scenario,
    friendly: &CourseOfAction,
    enemy: &EnemyCoA,
    seed: u64,
    config: SimConfig,
) -> Result<SimResult, WargameError> {
    Ok(Battle::new(scenario, friendly, enemy, config)?.run(seed))
}

/// Positions of every unit after each tick, replayed from a trace.
pub fn replay_positions(start: &[Unit], trace: &[Event]) -> BTreeMap<String, Vec<(u32, Coord)>> {
    let mut out: BTreeMap<String, Vec<(u32, Coord)>> = start
        .iter()
        .map(|u| (u.id.clone(), vec![(0, u.position)]))
        .collect();
    for e in trace.iter().filter(|e| e.kind == EventKind::Move) {
        let to = Coord::new(e.detail[2] as i32, e.detail[3] as i32);
        out.entry(e.actors[0].clone())
            .or_default()
            .push((e.tick, to));
    }
    out
}
