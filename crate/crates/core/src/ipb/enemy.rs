//! Enemy capability assessment: observation fusion plus doctrinal template
//! placement, producing the versioned enemy situation map.

use serde::{Deserialize, Serialize};

use crate::grid::{Coord, GridMap, Role};
use crate::ipb::template::{Constraint, ConstraintKind, DoctrinalTemplate, TemplateEntry};
use crate::ipb::terrain::{LayerKind, TerrainAnalysisMap};
use crate::ipb::IpbError;
use crate::scenario::{Echelon, Posture, Scenario, Side, Unit};
use crate::util::digest;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sensor {
    Uav,
    Sigint,
    GroundRecon,
    Satellite,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub time: u32,
    pub location: Coord,
    pub role_guess: Role,
    pub size_estimate: f64,
    pub confidence: f64,
    pub sensor: Sensor,
    /// Identifier of a known unit this report refers to, if any.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_id: Option<String>,
}

impl Observation {
    /// A known enemy unit from the scenario, reported with full confidence.
    pub fn from_known_unit(unit: &Unit) -> Self {
        Self {
            time: 0,
            location: unit.position,
            role_guess: unit.role,
            size_estimate: unit.combat_power,
            confidence: 1.0,
            sensor: Sensor::GroundRecon,
            source_id: Some(unit.id.clone()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Observed,
    Inferred,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnemyUnitEntry {
    pub unit: Unit,
    pub provenance: Provenance,
    pub confidence: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EsmBasis {
    pub terrain_digest: String,
    pub template_digest: String,
    pub observations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnemySituationMap {
    pub units: Vec<EnemyUnitEntry>,
    pub version: u64,
    pub basis: EsmBasis,
    pub diagnostics: Vec<String>,
}

impl EnemySituationMap {
    pub fn observed(&self) -> impl Iterator<Item = &EnemyUnitEntry> {
        self.units
            .iter()
            .filter(|e| e.provenance == Provenance::Observed)
    }

    pub fn inferred(&self) -> impl Iterator<Item = &EnemyUnitEntry> {
        self.units
            .iter()
            .filter(|e| e.provenance == Provenance::Inferred)
    }

    pub fn observed_count(&self) -> usize {
        self.observed().count()
    }

    pub fn inferred_count(&self) -> usize {
        self.inferred().count()
    }

    pub fn is_empty(&self) -> bool {
        self.units.is_empty()
    }

    /// Confidence-weighted enemy combat power within `radius` of any of `cells`.
    pub fn weighted_cp_near(&self, map: &GridMap, cells: &[Coord], radius: i32) -> f64 {
        self.units
            .iter()
            .filter(|e| {
                cells
                    .iter()
                    .any(|c| map.distance(*c, e.unit.position) <= radius)
            })
            .map(|e| e.unit.combat_power * e.confidence)
            .sum()
    }
}

/// Noisy-OR combination of independent confidences.
pub fn noisy_or(confidences: impl IntoIterator<Item = f64>) -> f64 {
    1.0 - confidences.into_iter().map(|c| 1.0 - c).product::<f64>()
}

#[derive(Debug, Clone, PartialEq)]
pub struct FusedObservation {
    pub id: String,
    pub location: Coord,
    pub role: Role,
    pub size: f64,
    pub confidence: f64,
    pub members: usize,
}

/// Greedy fusion: each report joins the first existing track of the same role
/// whose anchor lies within one cell, otherwise it opens a new track.
/// Tracks never merge with each other, so appending a report can only add or
/// extend a track.
pub fn fuse_observations(map: &GridMap, observations: &[Observation]) -> Vec<FusedObservation> {
    struct Track<'a> {
        anchor: Coord,
        role: Role,
        members: Vec<&'a Observation>,
    }
    let mut tracks: Vec<Track> = Vec::new();
    for obs in observations {
        match tracks
            .iter_mut()
            .find(|t| t.role == obs.role_guess && map.distance(t.anchor, obs.location) <= 1)
        {
            Some(t) => t.members.push(obs),
            None => tracks.push(Track {
                anchor: obs.location,
                role: obs.role_guess,
                members: vec![obs],
            }),
        }
    }
    tracks
        .into_iter()
        .enumerate()
        .map(|(i, t)| {
            let confidence = noisy_or(t.members.iter().map(|o| o.confidence));
            let wsum: f64 = t.members.iter().map(|o| o.confidence).sum();
            let size = if wsum > 0.0 {
                t.members
                    .iter()
                    .map(|o| o.size_estimate * o.confidence)
                    .sum::<f64>()
                    / wsum
            } else {
                t.members.iter().map(|o| o.size_estimate).sum::<f64>() / t.members.len() as f64
            };
            let id = t
                .members
                .iter()
                .find_map(|o| o.source_id.clone())
                .unwrap_or_else(|| format!("OBS-{:02}", i + 1));
            FusedObservation {
                id,
                location: t.anchor,
                role: t.role,
                size,
                confidence,
                members: t.members.len(),
            }
        })
        .collect()
}

/// Geometry shared by every constraint evaluation on one terrain analysis.
pub struct PlacementContext<'a> {
    pub map: &'a GridMap,
    pub terrain: &'a TerrainAnalysisMap,
    friendly_distance: Vec<i32>,
    forward_offset: i32,
    main_axis_distance: Vec<i32>,
}

impl<'a> PlacementContext<'a> {
    pub fn new(scenario: &'a Scenario, terrain: &'a TerrainAnalysisMap) -> Self {
        let map = &scenario.map;
        let friendly: Vec<Coord> = scenario
            .entry_zones
            .cells(Side::Friendly)
            .into_iter()
            .collect();
        let friendly_distance = map.distance_field(&friendly);
        let forward_offset = scenario
            .objectives
            .iter()
            .map(|o| friendly_distance[map.index(o.location)])
            .min()
            .unwrap_or(0);
        let main_axis_distance = match terrain.main_avenue() {
            Some(a) => map.distance_field(&a.route.cells),
            None => vec![i32::MAX; map.len()],
        };
        Self {
            map,
            terrain,
            friendly_distance,
            forward_offset,
            main_axis_distance,
        }
    }

    pub fn high_ground(&self, c: Coord) -> f64 {
        self.terrain.score(LayerKind::HighGround, c)
    }

    /// Cells behind the forward line (the friendly-facing edge of the nearest objective).
    pub fn depth(&self, c: Coord) -> i32 {
        let d = self.friendly_distance[self.map.index(c)];
        if d == i32::MAX {
            return i32::MAX;
        }
        d - self.forward_offset
    }

    pub fn friendly_distance(&self, c: Coord) -> i32 {
        self.friendly_distance[self.map.index(c)]
    }

    pub fn main_axis_distance(&self, c: Coord) -> i32 {
        self.main_axis_distance[self.map.index(c)]
    }

    fn decay(gap: i32) -> f64 {
        if gap == i32::MAX {
            0.0
        } else {
            1.0 / (1.0 + gap.max(0) as f64)
        }
    }

    /// Whether `c` satisfies the constraint, and its graded score in [0, 1].
    pub fn evaluate(
        &self,
        kind: &ConstraintKind,
        c: Coord,
        units: &[(Role, Coord)],
    ) -> (bool, f64) {
        match kind {
            ConstraintKind::OnHighGround { percentile } => {
                let p = self.high_ground(c);
                let ok = p >= *percentile;
                let score = if *percentile > 0.0 {
                    (p / percentile).min(1.0)
                } else {
                    1.0
                };
                (ok, score)
            }
            ConstraintKind::ReverseSlope {
                high_ground_percentile,
            } => {
                let here = self.map.cell(c).elevation;
                let fd = self.friendly_distance(c);
                let ok = self.map.neighbors_unchecked(c).into_iter().any(|h| {
                    self.high_ground(h) >= *high_ground_percentile
                        && self.map.cell(h).elevation > here
                        && self.friendly_distance(h) < fd
                });
                (ok, if ok { 1.0 } else { 0.0 })
            }
            ConstraintKind::OnMainAxis { distance } => {
                let d = self.main_axis_distance(c);
                let ok = d <= *distance;
                let gap = if d == i32::MAX {
                    i32::MAX
                } else {
                    d - distance
                };
                (ok, Self::decay(gap))
            }
            ConstraintKind::WithinRange { role, distance } => {
                let d = units
                    .iter()
                    .filter(|(r, _)| r == role)
                    .map(|(_, p)| self.map.distance(*p, c))
                    .min()
                    .unwrap_or(i32::MAX);
                let ok = d <= *distance;
                let gap = if d == i32::MAX {
                    i32::MAX
                } else {
                    d - distance
                };
                (ok, Self::decay(gap))
            }
            ConstraintKind::InDepth { min, max } => {
                let d = self.depth(c);
                if d == i32::MAX {
                    return (false, 0.0);
                }
                let gap = if d < *min {
                    min - d
                } else if d > *max {
                    d - max
                } else {
                    0
                };
                (gap == 0, Self::decay(gap))
            }
        }
    }

    /// Mean soft score of `entry` at `c`, or `None` if a hard constraint fails.
    pub fn entry_score(
        &self,
        entry: &TemplateEntry,
        c: Coord,
        units: &[(Role, Coord)],
    ) -> Option<f64> {
        let mut soft_total = 0.0;
        let mut soft_n = 0usize;
        for Constraint { kind, hard } in &entry.constraints {
            let (ok, score) = self.evaluate(kind, c, units);
            if *hard {
                if !ok {
                    return None;
                }
            } else {
                soft_total += score;
                soft_n += 1;
            }
        }
        Some(if soft_n == 0 {
            1.0
        } else {
            soft_total / soft_n as f64
        })
    }

    /// AO cells an enemy unit of `role` may occupy, in row-major order.
    pub fn candidate_cells(&self, role: Role) -> Vec<Coord> {
        let mut cells: Vec<Coord> = self
            .terrain
            .frame
            .area_of_operations
            .iter()
            .copied()
            .filter(|c| self.map.passable(*c, role))
            .collect();
        crate::grid::sort_row_major(&mut cells);
        cells
    }
}

/// Outcome of placing one template slot.
#[derive(Debug, Clone, PartialEq)]
pub struct Placement {
    pub entry_index: usize,
    pub cell: Coord,
    pub score: f64,
}

/// Best score `entry` can reach on a free cell given `units`.
fn best_reachable(
    ctx: &PlacementContext,
    entry: &TemplateEntry,
    units: &[(Role, Coord)],
) -> Option<f64> {
    ctx.candidate_cells(entry.role)
        .into_iter()
        .filter(|c| !units.iter().any(|(_, p)| p == c))
        .filter_map(|c| ctx.entry_score(entry, c, units))
        .max_by(f64::total_cmp)
}

/// Greedy placement in template order: each slot takes the free cell that
/// maximises its own score plus the best reachable score of later entries
/// constrained to stay within range of it, ties broken row-major. Cells that
/// leave such an entry with no feasible cell are taken only as a last resort.
/// `remaining[i]` is the number of unmatched slots of entry `i`; `occupied`
/// holds already-present enemy units.
pub fn place_greedy(
    ctx: &PlacementContext,
    template: &DoctrinalTemplate,
    remaining: &[u32],
    occupied: &[(Role, Coord)],
    diagnostics: &mut Vec<String>,
) -> Vec<Placement> {
    let mut units: Vec<(Role, Coord)> = occupied.to_vec();
    let mut out = Vec::new();
    for (i, entry) in template.entries.iter().enumerate() {
        let candidates = ctx.candidate_cells(entry.role);
        let dependents: Vec<&TemplateEntry> = template
            .entries
            .iter()
            .enumerate()
            .skip(i + 1)
            .filter(|(j, e)| {
                remaining.get(*j).copied().unwrap_or(0) > 0
                    && e.constraints
                        .iter()
                        .any(|c| matches!(c.kind, ConstraintKind::WithinRange { role, .. } if role == entry.role))
            })
            .map(|(_, e)| e)
            .collect();
        for slot in 0..remaining.get(i).copied().unwrap_or(0) {
            let mut best: Option<(Coord, f64, (bool, f64))> = None;
            for &c in &candidates {
                if units.iter().any(|(_, p)| *p == c) {
                    continue;
                }
                let Some(s) = ctx.entry_score(entry, c, &units) else {
                    continue;
                };
                let mut key = (true, s);
                if !dependents.is_empty() {
                    units.push((entry.role, c));
                    for d in &dependents {
                        match best_reachable(ctx, d, &units) {
                            Some(v) => key.1 += v,
                            None => key.0 = false,
                        }
                    }
                    units.pop();
                }
                if best.is_none_or(|(_, _, b)| (key.0 && !b.0) || (key.0 == b.0 && key.1 > b.1)) {
                    best = Some((c, s, key));
                }
            }
            match best {
                Some((cell, score, _)) => {
                    units.push((entry.role, cell));
                    out.push(Placement {
                        entry_index: i,
                        cell,
                        score,
                    });
                }
                None => diagnostics.push(format!(
                    "template entry {i} ({}) slot {}: hard constraints unsatisfiable on this terrain",
                    entry.role,
                    slot + 1
                )),
            }
        }
    }
    out
}

pub fn assess_enemy_capability(
    scenario: &Scenario,
    terrain: &TerrainAnalysisMap,
    template: &DoctrinalTemplate,
    observations: &[Observation],
    previous: Option<&EnemySituationMap>,
) -> Result<EnemySituationMap, IpbError> {
    for (i, o) in observations.iter().enumerate() {
        if !(0.0..=1.0).contains(&o.confidence) {
            return Err(IpbError::InvalidObservation(format!(
                "observation {i}: confidence {} outside [0,1]",
                o.confidence
            )));
        }
        if !terrain.frame.area_of_interest.contains(o.location) {
            return Err(IpbError::InvalidObservation(format!(
                "observation {i}: location {} outside the area of interest",
                o.location
            )));
        }
    }
    let map = &scenario.map;
    let mut diagnostics = Vec::new();
    let fused = fuse_observations(map, observations);

    let mut remaining: Vec<u32> = template.entries.iter().map(|e| e.count).collect();
    let mut units = Vec::new();
    for f in &fused {
        let matched = template
            .entries
            .iter()
            .enumerate()
            .find(|(i, e)| e.role == f.role && remaining[*i] > 0)
            .map(|(i, _)| i);
        let (mut echelon, mut posture) = match matched {
            Some(i) => {
                remaining[i] -= 1;
                (template.entries[i].echelon, template.entries[i].posture)
            }
            None => (Echelon::Company, Posture::DefendHasty),
        };
        if let Some(known) = scenario.enemy_observed_units.iter().find(|u| u.id == f.id) {
            echelon = known.echelon;
            posture = known.posture;
        }
        units.push(EnemyUnitEntry {
            unit: Unit {
                id: f.id.clone(),
                side: Side::Enemy,
                echelon,
                role: f.role,
                combat_power: f.size.max(0.0),
                position: f.location,
                posture,
                zone: None,
            },
            provenance: Provenance::Observed,
            confidence: f.confidence,
        });
    }

    let ctx = PlacementContext::new(scenario, terrain);
    let occupied: Vec<(Role, Coord)> = units
        .iter()
        .map(|e| (e.unit.role, e.unit.position))
        .collect();
    let placements = place_greedy(&ctx, template, &remaining, &occupied, &mut diagnostics);
    for (n, p) in placements.iter().enumerate() {
        let entry = &template.entries[p.entry_index];
        units.push(EnemyUnitEntry {
            unit: Unit {
                id: format!("INF-{:02}", n + 1),
                side: Side::Enemy,
                echelon: entry.echelon,
                role: entry.role,
                combat_power: entry.combat_power,
                position: p.cell,
                posture: entry.posture,
                zone: None,
            },
            provenance: Provenance::Inferred,
            confidence: 0.5 * p.score,
        });
    }

    Ok(EnemySituationMap {
        units,
        version: previous.map_or(1, |p| p.version + 1),
        basis: EsmBasis {
            terrain_digest: digest(&terrain.layers),
            template_digest: digest(template),
            observations: observations.len(),
        },
        diagnostics,
    })
}
