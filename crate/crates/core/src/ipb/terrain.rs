//! Battlespace analysis: the five-layer terrain analysis map.

use serde::{Deserialize, Serialize};

use crate::grid::{Coord, GridMap, Role, Surface, WeatherState};
use crate::ipb::frame::BattlespaceFrame;
use crate::pathfind::{diverse_routes, Route};
use crate::scenario::{Scenario, Side};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LayerKind {
    HighGround,
    HydrologyRoads,
    Obstacles,
    KeyTerrain,
    AvenuesOfApproach,
}

impl LayerKind {
    pub const ALL: [LayerKind; 5] = [
        LayerKind::HighGround,
        LayerKind::HydrologyRoads,
        LayerKind::Obstacles,
        LayerKind::KeyTerrain,
        LayerKind::AvenuesOfApproach,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            LayerKind::HighGround => "high_ground",
            LayerKind::HydrologyRoads => "hydrology_roads",
            LayerKind::Obstacles => "obstacles",
            LayerKind::KeyTerrain => "key_terrain",
            LayerKind::AvenuesOfApproach => "avenues_of_approach",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.as_str() == s)
    }

    /// Weight in the combined overlay.
    fn overlay_weight(self) -> f64 {
        match self {
            LayerKind::HighGround => 0.2,
            LayerKind::HydrologyRoads => 0.1,
            LayerKind::Obstacles => 0.2,
            LayerKind::KeyTerrain => 0.3,
            LayerKind::AvenuesOfApproach => 0.2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AvenueRoute {
    pub side: Side,
    pub objective_id: String,
    pub route: Route,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TerrainLayer {
    pub kind: LayerKind,
    /// Row-major per-cell scores in [0, 1].
    pub scores: Vec<f64>,
    /// Only populated for the avenues layer.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub routes: Vec<AvenueRoute>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TerrainAnalysisMap {
    pub frame: BattlespaceFrame,
    pub width: i32,
    pub height: i32,
    pub layers: Vec<TerrainLayer>,
    pub combined_overlay: Vec<f64>,
    pub weather_adjusted: bool,
    pub weather: WeatherState,
    pub diagnostics: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AvenueConfig {
    /// Routes per side and objective.
    pub k: usize,
    pub max_overlap: f64,
    /// Yen paths examined per objective before giving up on diversity.
    pub max_examined: usize,
}

impl Default for AvenueConfig {
    fn default() -> Self {
        Self {
            k: 3,
            max_overlap: 0.5,
            max_examined: 64,
        }
    }
}

impl TerrainAnalysisMap {
    pub fn layer(&self, kind: LayerKind) -> &TerrainLayer {
        self.layers
            .iter()
            .find(|l| l.kind == kind)
            .expect("every layer kind is present")
    }

    pub fn score(&self, kind: LayerKind, c: Coord) -> f64 {
        self.layer(kind).scores[(c.y * self.width + c.x) as usize]
    }

    pub fn avenues(&self, side: Side) -> impl Iterator<Item = &AvenueRoute> {
        self.layer(LayerKind::AvenuesOfApproach)
            .routes
            .iter()
            .filter(move |r| r.side == side)
    }

    pub fn avenues_to(&self, side: Side, objective_id: &str) -> Vec<&AvenueRoute> {
        self.avenues(side)
            .filter(|r| r.objective_id == objective_id)
            .collect()
    }

    /// The highest-scored (cheapest) friendly avenue; first in layer order on ties.
    pub fn main_avenue(&self) -> Option<&AvenueRoute> {
        self.avenues(Side::Friendly)
            .fold(None, |best: Option<&AvenueRoute>, r| match best {
                Some(b) if b.route.cost <= r.route.cost => Some(b),
                _ => Some(r),
            })
    }

    /// Per-cell raster text in the same framing as the elevation raster.
    pub fn export_raster(&self, kind: LayerKind) -> String {
        raster_text(self.width, &self.layer(kind).scores)
    }

    pub fn export_overlay(&self) -> String {
        raster_text(self.width, &self.combined_overlay)
    }
}

pub fn raster_text(width: i32, values: &[f64]) -> String {
    let mut out = String::new();
    for row in values.chunks(width.max(1) as usize) {
        let line: Vec<String> = row.iter().map(|v| format!("{v:.4}")).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    out
}

/// Elevation percentile of every cell relative to the AO's elevation distribution.
pub fn elevation_percentiles(map: &GridMap, frame: &BattlespaceFrame) -> Vec<f64> {
    let mut ao: Vec<f64> = frame
        .area_of_operations
        .iter()
        .map(|c| map.cell(*c).elevation)
        .collect();
    ao.sort_by(f64::total_cmp);
    let denom = (ao.len().max(2) - 1) as f64;
    map.cells
        .iter()
        .map(|cell| {
            let below = ao.partition_point(|e| *e < cell.elevation);
            (below as f64 / denom).clamp(0.0, 1.0)
        })
        .collect()
}

fn road_adjacent(map: &GridMap, c: Coord) -> bool {
    map.neighbors_unchecked(c)
        .into_iter()
        .any(|n| map.cell(n).surface == Surface::Road)
}

pub fn analyze_battlespace(scenario: &Scenario, frame: &BattlespaceFrame) -> TerrainAnalysisMap {
    analyze_battlespace_with(scenario, frame, &AvenueConfig::default())
}

pub fn analyze_battlespace_with(
    scenario: &Scenario,
    frame: &BattlespaceFrame,
    config: &AvenueConfig,
) -> TerrainAnalysisMap {
    let map = &scenario.map;
    let n = map.len();
    let mut diagnostics = Vec::new();

    let high_ground = elevation_percentiles(map, frame);

    let hydrology: Vec<f64> = map
        .cells
        .iter()
        .map(|c| match c.surface {
            Surface::River | Surface::Road => 1.0,
            _ => 0.0,
        })
        .collect();

    let obstacles: Vec<f64> = map
        .coords()
        .map(|c| match map.cell(c).surface {
            Surface::Impassable | Surface::Marsh => 1.0,
            Surface::River if !road_adjacent(map, c) => 1.0,
            _ => 0.0,
        })
        .collect();

    let mut routes = Vec::new();
    for side in [Side::Friendly, Side::Enemy] {
        let sources: Vec<Coord> = scenario
            .entry_zones
            .cells(side)
            .into_iter()
            .filter(|c| map.cell(*c).base_mobility_cost.is_finite())
            .collect();
        if sources.is_empty() {
            if side == Side::Friendly {
                diagnostics.push("no passable friendly entry zone cells; no avenues".to_string());
            }
            continue;
        }
        for obj in &scenario.objectives {
            let mut found = Vec::new();
            for role in [Role::Infantry, Role::Engineer] {
                found = diverse_routes(
                    map,
                    &scenario.weather,
                    role,
                    &sources,
                    obj.location,
                    config.k,
                    config.max_overlap,
                    config.max_examined,
                );
                if !found.is_empty() {
                    break;
                }
            }
            if found.is_empty() {
                diagnostics.push(format!(
                    "{side} avenues: objective '{}' unreachable from entry zones for every role",
                    obj.id
                ));
            }
            routes.extend(found.into_iter().map(|route| AvenueRoute {
                side,
                objective_id: obj.id.clone(),
                route,
            }));
        }
    }

    let friendly_routes: Vec<&AvenueRoute> =
        routes.iter().filter(|r| r.side == Side::Friendly).collect();
    let mut chokepoint = vec![0.0; n];
    if !friendly_routes.is_empty() {
        for r in &friendly_routes {
            for c in &r.route.cells {
                chokepoint[map.index(*c)] += 1.0;
            }
        }
        let total = friendly_routes.len() as f64;
        for v in &mut chokepoint {
            *v /= total;
        }
    }

    let objective_cells: Vec<Coord> = scenario.objectives.iter().map(|o| o.location).collect();
    let obj_dist = map.distance_field(&objective_cells);
    let key_terrain: Vec<f64> = (0..n)
        .map(|i| {
            let proximity = 1.0 / (1.0 + obj_dist[i] as f64);
            (0.4 * high_ground[i] + 0.4 * chokepoint[i] + 0.2 * proximity).clamp(0.0, 1.0)
        })
        .collect();

    let mut avenues = vec![0.0f64; n];
    for r in &routes {
        let best = routes
            .iter()
            .filter(|o| o.side == r.side && o.objective_id == r.objective_id)
            .map(|o| o.route.cost)
            .fold(f64::INFINITY, f64::min);
        let score = if r.route.cost > 0.0 {
            (best / r.route.cost).clamp(0.0, 1.0)
        } else {
            1.0
        };
        for c in &r.route.cells {
            let i = map.index(*c);
            avenues[i] = avenues[i].max(score);
        }
    }

    let layers = vec![
        TerrainLayer {
            kind: LayerKind::HighGround,
            scores: high_ground,
            routes: Vec::new(),
        },
        TerrainLayer {
            kind: LayerKind::HydrologyRoads,
            scores: hydrology,
            routes: Vec::new(),
        },
        TerrainLayer {
            kind: LayerKind::Obstacles,
            scores: obstacles,
            routes: Vec::new(),
        },
        TerrainLayer {
            kind: LayerKind::KeyTerrain,
            scores: key_terrain,
            routes: Vec::new(),
        },
        TerrainLayer {
            kind: LayerKind::AvenuesOfApproach,
            scores: avenues,
            routes,
        },
    ];

    let weight_sum: f64 = LayerKind::ALL.iter().map(|k| k.overlay_weight()).sum();
    let combined_overlay = (0..n)
        .map(|i| {
            let s: f64 = layers
                .iter()
                .map(|l| l.kind.overlay_weight() * l.scores[i])
                .sum();
            (s / weight_sum).clamp(0.0, 1.0)
        })
        .collect();

    TerrainAnalysisMap {
        frame: frame.clone(),
        width: map.width,
        height: map.height,
        layers,
        combined_overlay,
        weather_adjusted: true,
        weather: scenario.weather,
        diagnostics,
    }
}

/// Chokepoint component of key terrain: fraction of friendly avenue routes through each cell.
pub fn chokepoint_scores(terrain: &TerrainAnalysisMap) -> Vec<f64> {
    let n = (terrain.width * terrain.height) as usize;
    let routes: Vec<&AvenueRoute> = terrain.avenues(Side::Friendly).collect();
    let mut out = vec![0.0; n];
    if routes.is_empty() {
        return out;
    }
    for r in &routes {
        for c in &r.route.cells {
            out[(c.y * terrain.width + c.x) as usize] += 1.0;
        }
    }
    for v in &mut out {
        *v /= routes.len() as f64;
    }
    out
}
