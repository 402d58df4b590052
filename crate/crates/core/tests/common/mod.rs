//! Builders and brute-force oracles shared by the integration tests and the
//! acceptance run.
#![allow(dead_code)]

use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap};
use std::path::PathBuf;

use coaforge_core::coa::boundaries::assign_boundaries;
use coaforge_core::coa::{CourseOfAction, Phase, UnitTask};
use coaforge_core::grid::{Coord, GridMap, Role, Surface, Topology, WeatherState};
use coaforge_core::ipb::ecoa::{EnemyArchetype, EnemyCoA};
use coaforge_core::ipb::enemy::PlacementContext;
use coaforge_core::ipb::frame::evaluate_battlespace;
use coaforge_core::ipb::template::{Constraint, ConstraintKind, DoctrinalTemplate, TemplateEntry};
use coaforge_core::ipb::terrain::{analyze_battlespace, TerrainAnalysisMap};
use coaforge_core::opord::{Task, TaskSource, TaskVerb, WarfightingFunction};
use coaforge_core::pathfind::least_cost_route;
use coaforge_core::scenario::*;
use rand::seq::IndexedRandom;
use rand::Rng;

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(name)
}

pub fn read_fixture(name: &str) -> String {
    std::fs::read_to_string(fixture(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

pub fn blank_scenario(map: GridMap) -> Scenario {
    Scenario {
        name: "test".into(),
        own_unit_name: "1st Battalion".into(),
        map,
        weather: WeatherState::default(),
        friendly_units: vec![],
        enemy_observed_units: vec![],
        enemy_template: DoctrinalTemplate::default(),
        objectives: vec![],
        entry_zones: EntryZones::default(),
        features: vec![],
        time_limit: 50,
        mettc: Mettc {
            mission: String::new(),
            enemy: String::new(),
            terrain_weather: String::new(),
            troops_available: TroopsAvailable {
                count: 0,
                combat_power: 0.0,
            },
            time_available: 50,
            civil_considerations: vec![],
        },
    }
}

pub fn unit(id: &str, side: Side, role: Role, cp: f64, at: Coord, posture: Posture) -> Unit {
    Unit {
        id: id.into(),
        side,
        echelon: Echelon::Company,
        role,
        combat_power: cp,
        position: at,
        posture,
        zone: None,
    }
}

pub fn task(unit_id: &str, verb: TaskVerb, object: &str, route: Option<Vec<Coord>>) -> UnitTask {
    UnitTask {
        unit_id: unit_id.into(),
        task: Task {
            verb,
            object: object.into(),
            function: WarfightingFunction::MovementManeuver,
            source: TaskSource::Specified,
            reference: "test".into(),
            text: format!("{} {object}", verb.title()),
        },
        route,
        target: Some(object.into()),
    }
}

pub fn single_phase(id: &str, side: Side, tasks: Vec<UnitTask>) -> CourseOfAction {
    CourseOfAction {
        id: id.into(),
        side,
        phases: vec![Phase { index: 0, tasks }],
        boundaries: BTreeMap::new(),
        synchronization: vec![],
        summary: String::new(),
        main_effort: None,
    }
}

pub fn enemy_coa(coa: CourseOfAction, forces: Vec<Unit>) -> EnemyCoA {
    EnemyCoA {
        coa,
        archetype: EnemyArchetype::DefendForward,
        forces,
        likelihood: 1.0,
        threat: 0.0,
        score: 0.0,
    }
}

const SURFACES: [Surface; 7] = [
    Surface::Open,
    Surface::Forest,
    Surface::Urban,
    Surface::Road,
    Surface::River,
    Surface::Marsh,
    Surface::Impassable,
];

/// Mostly open ground with a sprinkling of every other surface.
pub fn random_map(rng: &mut impl Rng, topology: Topology, width: i32, height: i32) -> GridMap {
    let mut map = GridMap::filled(topology, width, height, Surface::Open);
    for c in map.coords().collect::<Vec<_>>() {
        let s = if rng.random_bool(0.45) {
            *SURFACES[1..].choose(rng).expect("non-empty")
        } else {
            Surface::Open
        };
        map.set_surface(c, s);
        map.cell_mut(c).elevation = rng.random_range(0..8) as f64 * 25.0;
    }
    map
}

#[derive(Copy, Clone, PartialEq)]
struct State(f64, usize);

impl Eq for State {}

impl PartialOrd for State {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for State {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .0
            .total_cmp(&self.0)
            .then_with(|| other.1.cmp(&self.1))
    }
}

/// Textbook binary-heap Dijkstra over the cell graph, independent of the
/// production search. Returns the optimal cost, or `None` if unreachable.
pub fn dijkstra_oracle(
    map: &GridMap,
    weather: &WeatherState,
    role: Role,
    sources: &[Coord],
    target: Coord,
) -> Option<f64> {
    let mut dist = vec![f64::INFINITY; map.len()];
    let mut heap = BinaryHeap::new();
    for s in sources {
        dist[map.index(*s)] = 0.0;
        heap.push(State(0.0, map.index(*s)));
    }
    while let Some(State(d, i)) = heap.pop() {
        if d > dist[i] {
            continue;
        }
        let here = map.coord(i);
        if here == target {
            return Some(d);
        }
        for n in map.neighbors_unchecked(here) {
            let c = map.step_cost(weather, here, n, role);
            if !c.is_finite() {
                continue;
            }
            let j = map.index(n);
            if d + c < dist[j] {
                dist[j] = d + c;
                heap.push(State(d + c, j));
            }
        }
    }
    None
}

/// Random placement problem on a small map: friendly entry along the top row,
/// one objective, and a three-entry template whose range constraints only
/// refer to roles placed by earlier entries.
pub fn random_placement_instance(
    rng: &mut impl Rng,
) -> (Scenario, TerrainAnalysisMap, DoctrinalTemplate) {
    let w = rng.random_range(5..=8);
    let h = rng.random_range(5..=8);
    let mut map = GridMap::filled(Topology::Square8, w, h, Surface::Open);
    for c in map.coords().collect::<Vec<_>>() {
        map.cell_mut(c).elevation = rng.random_range(0..10) as f64 * 10.0;
        if rng.random_bool(0.15) {
            map.set_surface(c, Surface::Forest);
        }
    }
    let mut s = blank_scenario(map);
    s.entry_zones.friendly = vec![Zone::rect(0, 0, w - 1, 0)];
    s.entry_zones.enemy = vec![Zone::rect(0, h - 1, w - 1, h - 1)];
    let obj = Coord::new(rng.random_range(0..w), rng.random_range(h / 2..h));
    s.objectives = vec![Objective {
        id: "OBJ".into(),
        location: obj,
        kind: ObjectiveKind::Seize,
        label: "OBJ".into(),
    }];
    s.friendly_units = vec![unit(
        "F",
        Side::Friendly,
        Role::Infantry,
        10.0,
        Coord::new(0, 0),
        Posture::Attack,
    )];
    let roles = [Role::Infantry, Role::Artillery, Role::CommandPost];
    let mut entries = Vec::new();
    for (i, role) in roles.iter().enumerate() {
        let mut constraints = Vec::new();
        let n = rng.random_range(1..=3);
        for _ in 0..n {
            let kind = match rng.random_range(0..5) {
                0 => ConstraintKind::OnHighGround {
                    percentile: rng.random_range(1..=9) as f64 / 10.0,
                },
                1 => ConstraintKind::ReverseSlope {
                    high_ground_percentile: rng.random_range(3..=8) as f64 / 10.0,
                },
                2 => ConstraintKind::OnMainAxis {
                    distance: rng.random_range(0..=3),
                },
                3 if i > 0 => ConstraintKind::WithinRange {
                    role: roles[rng.random_range(0..i)],
                    distance: rng.random_range(1..=4),
                },
                _ => {
                    let min = rng.random_range(-3..=1);
                    ConstraintKind::InDepth {
                        min,
                        max: min + rng.random_range(1..=4),
                    }
                }
            };
            let c = if rng.random_bool(0.3) {
                Constraint::hard(kind)
            } else {
                Constraint::soft(kind)
            };
            constraints.push(c);
        }
        entries.push(TemplateEntry::new(*role, 1, constraints));
    }
    let template = DoctrinalTemplate { entries };
    s.enemy_template = template.clone();
    let frame = evaluate_battlespace(&s).expect("objective present");
    let terrain = analyze_battlespace(&s, &frame);
    (s, terrain, template)
}

/// Sum of entry scores for one cell per entry, each entry scored against the
/// units of the entries before it. `None` if a hard constraint fails or two
/// entries share a cell.
pub fn joint_score(
    ctx: &PlacementContext,
    template: &DoctrinalTemplate,
    cells: &[Coord],
) -> Option<f64> {
    let mut units: Vec<(Role, Coord)> = Vec::new();
    let mut total = 0.0;
    for (entry, c) in template.entries.iter().zip(cells) {
        if units.iter().any(|(_, p)| p == c) {
            return None;
        }
        total += ctx.entry_score(entry, *c, &units)?;
        units.push((entry.role, *c));
    }
    Some(total)
}

/// Best joint score over every assignment of distinct candidate cells.
pub fn exhaustive_placement(ctx: &PlacementContext, template: &DoctrinalTemplate) -> Option<f64> {
    let candidates: Vec<Vec<Coord>> = template
        .entries
        .iter()
        .map(|e| ctx.candidate_cells(e.role))
        .collect();
    let mut best: Option<f64> = None;
    let mut cells = Vec::with_capacity(candidates.len());
    fn rec(
        ctx: &PlacementContext,
        template: &DoctrinalTemplate,
        candidates: &[Vec<Coord>],
        cells: &mut Vec<Coord>,
        best: &mut Option<f64>,
    ) {
        if cells.len() == candidates.len() {
            if let Some(s) = joint_score(ctx, template, cells) {
                if best.is_none_or(|b| s > b) {
                    *best = Some(s);
                }
            }
            return;
        }
        // Prune on the prefix: hard constraints only look backwards.
        if !cells.is_empty() {
            let prefix = DoctrinalTemplate {
                entries: template.entries[..cells.len()].to_vec(),
            };
            if joint_score(ctx, &prefix, cells).is_none() {
                return;
            }
        }
        for &c in &candidates[cells.len()] {
            cells.push(c);
            rec(ctx, template, candidates, cells, best);
            cells.pop();
        }
    }
    rec(ctx, template, &candidates, &mut cells, &mut best);
    best
}

/// Parameters of a stationary one-on-one fight.
#[derive(Debug, Clone, Copy)]
pub struct Duel {
    pub friendly_cp: f64,
    pub enemy_cp: f64,
    pub enemy_posture: Posture,
    pub enemy_surface: Surface,
    pub visibility: f64,
    pub time_limit: u32,
}

/// Friendly infantry at (1,1) facing enemy infantry at (2,1) on flat ground.
/// The objective sits under the enemy, so the friendly side wins only by
/// breaking the enemy and stepping onto it.
pub fn duel(d: Duel) -> (Scenario, CourseOfAction, EnemyCoA) {
    let mut map = GridMap::filled(Topology::Square8, 4, 3, Surface::Open);
    map.set_surface(Coord::new(2, 1), d.enemy_surface);
    let mut s = blank_scenario(map);
    s.weather.visibility = d.visibility;
    s.time_limit = d.time_limit;
    let f_at = Coord::new(1, 1);
    let e_at = Coord::new(2, 1);
    s.objectives = vec![Objective {
        id: "OBJ".into(),
        location: e_at,
        kind: ObjectiveKind::Seize,
        label: "OBJ".into(),
    }];
    s.entry_zones.friendly = vec![Zone::rect(0, 0, 0, 2)];
    s.entry_zones.enemy = vec![Zone::rect(3, 0, 3, 2)];
    let f = unit(
        "F",
        Side::Friendly,
        Role::Infantry,
        d.friendly_cp,
        f_at,
        Posture::Attack,
    );
    let e = unit(
        "E",
        Side::Enemy,
        Role::Infantry,
        d.enemy_cp,
        e_at,
        d.enemy_posture,
    );
    s.friendly_units = vec![f];
    s.enemy_observed_units = vec![e.clone()];
    let friendly = single_phase(
        "COA-F",
        Side::Friendly,
        vec![task("F", TaskVerb::Seize, "OBJ", Some(vec![f_at, e_at]))],
    );
    let enemy = single_phase(
        "ECOA-E",
        Side::Enemy,
        vec![task("E", TaskVerb::Defend, "OBJ", None)],
    );
    (s, friendly, enemy_coa(enemy, vec![e]))
}

/// Square-law recurrence for the duel above with noise off: both sides fire
/// simultaneously, the defender's fire scaled by terrain and posture.
pub fn square_law(d: &Duel, terrain_mod: f64, k: f64, ticks: usize) -> Vec<(f64, f64)> {
    let vis = (d.visibility / 5000.0).clamp(0.5, 1.0);
    let (mut a, mut e) = (d.friendly_cp, d.enemy_cp);
    let mut out = vec![(a, e)];
    for _ in 0..ticks {
        let a_loss = (k * e * terrain_mod * d.enemy_posture.modifier() * vis).min(a);
        let e_loss = (k * a * vis).min(e);
        a -= a_loss;
        e -= e_loss;
        out.push((a, e));
    }
    out
}

/// Random multi-unit battle on a 12x12 map with routed friendly units, routed
/// or stationary enemies and boundaries on both sides.
pub fn random_battle(rng: &mut impl Rng) -> (Scenario, CourseOfAction, EnemyCoA) {
    let topology = if rng.random_bool(0.5) {
        Topology::Square8
    } else {
        Topology::HexOddRow
    };
    let mut map = random_map(rng, topology, 12, 12);
    for x in 0..12 {
        for y in [0, 1, 10, 11] {
            map.set_surface(Coord::new(x, y), Surface::Open);
        }
    }
    let mut s = blank_scenario(map);
    s.time_limit = rng.random_range(10..40);
    s.weather.precipitation = rng.random_range(0..20) as f64;
    s.weather.visibility = rng.random_range(1000..10000) as f64;
    s.entry_zones.friendly = vec![Zone::rect(0, 0, 11, 1)];
    s.entry_zones.enemy = vec![Zone::rect(0, 10, 11, 11)];
    let obj = Coord::new(rng.random_range(2..10), rng.random_range(8..11));
    s.map.set_surface(obj, Surface::Open);
    s.objectives = vec![Objective {
        id: "OBJ".into(),
        location: obj,
        kind: ObjectiveKind::Seize,
        label: "OBJ".into(),
    }];

    let roles = [Role::Infantry, Role::Armor, Role::Engineer, Role::Artillery];
    let mut tasks = Vec::new();
    let nf = rng.random_range(1..=4);
    for i in 0..nf {
        let at = Coord::new(rng.random_range(0..12), rng.random_range(0..2));
        let role = *roles.choose(rng).expect("non-empty");
        let id = format!("F{i}");
        s.friendly_units.push(unit(
            &id,
            Side::Friendly,
            role,
            rng.random_range(2.0..15.0),
            at,
            Posture::Attack,
        ));
        let route = least_cost_route(&s.map, &s.weather, role, &[at], obj).map(|r| r.cells);
        tasks.push(task(&id, TaskVerb::Seize, "OBJ", route));
    }
    let friendly = single_phase("COA-R", Side::Friendly, tasks);
    let friendly = match assign_boundaries(&friendly, &s) {
        Ok(c) => c,
        // Two units on one route: keep a single unit.
        Err(_) => {
            s.friendly_units.truncate(1);
            let mut c = friendly.clone();
            c.phases[0].tasks.truncate(1);
            assign_boundaries(&c, &s).expect("one unit has distinct axes")
        }
    };

    let postures = [
        Posture::DefendPrepared,
        Posture::DefendHasty,
        Posture::Attack,
        Posture::Reserve,
    ];
    let mut forces = Vec::new();
    let mut etasks = Vec::new();
    let mut boundaries = BTreeMap::new();
    let ne = rng.random_range(1..=4);
    for i in 0..ne {
        let at = Coord::new(rng.random_range(0..12), rng.random_range(6..12));
        if !s.map.passable(at, Role::Infantry) || forces.iter().any(|u: &Unit| u.position == at) {
            continue;
        }
        let role = *roles.choose(rng).expect("non-empty");
        let id = format!("E{i}");
        let posture = *postures.choose(rng).expect("non-empty");
        let route = if rng.random_bool(0.5) {
            let goal = Coord::new(rng.random_range(0..12), rng.random_range(2..12));
            least_cost_route(&s.map, &s.weather, role, &[at], goal).map(|r| r.cells)
        } else {
            None
        };
        let cells = route.clone().unwrap_or_else(|| vec![at]);
        boundaries.insert(id.clone(), Zone::new(s.map.dilate(cells.iter(), 1)));
        forces.push(unit(
            &id,
            Side::Enemy,
            role,
            rng.random_range(2.0..15.0),
            at,
            posture,
        ));
        etasks.push(task(&id, TaskVerb::Defend, "OBJ", route));
    }
    if forces.is_empty() {
        let at = Coord::new(0, 11);
        s.map.set_surface(at, Surface::Open);
        boundaries.insert("E0".into(), Zone::new(s.map.dilate([at].iter(), 1)));
        forces.push(unit(
            "E0",
            Side::Enemy,
            Role::Infantry,
            5.0,
            at,
            Posture::DefendHasty,
        ));
        etasks.push(task("E0", TaskVerb::Defend, "OBJ", None));
    }
    let mut enemy = single_phase("ECOA-R", Side::Enemy, etasks);
    enemy.boundaries = boundaries;
    s.enemy_observed_units = forces.clone();
    (s, friendly, enemy_coa(enemy, forces))
}
