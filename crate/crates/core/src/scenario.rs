//! The world model every planning stage reads, and its text document format.
//!
//! A scenario document is TOML with top-level keys `map`, `weather`, `units`,
//! `objectives`, `entry_zones`, `template` and `time_limit`. Terrain is a
//! character raster (`.` open, `F` forest, `U` urban, `R` road, `~` river,
//! `M` marsh, `#` impassable) with a parallel raster of integer elevations.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::{Coord, GridMap, Role, Surface, TerrainCell, Topology, WeatherState};
use crate::ipb::template::DoctrinalTemplate;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Friendly,
    Enemy,
}

impl Side {
    pub fn opponent(self) -> Side {
        match self {
            Side::Friendly => Side::Enemy,
            Side::Enemy => Side::Friendly,
        }
    }
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Side::Friendly => "friendly",
            Side::Enemy => "enemy",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Echelon {
    Company,
    Battalion,
    Brigade,
    Division,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Posture {
    Attack,
    DefendPrepared,
    DefendHasty,
    Moving,
    Reserve,
}

impl Posture {
    pub fn is_defending(self) -> bool {
        matches!(self, Posture::DefendPrepared | Posture::DefendHasty)
    }

    /// Fire multiplier enjoyed by a defender in this posture.
    pub fn modifier(self) -> f64 {
        match self {
            Posture::DefendPrepared => 1.5,
            Posture::DefendHasty => 1.2,
            _ => 1.0,
        }
    }
}

/// A contiguous set of cells, e.g. an assigned battle boundary.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Zone {
    pub cells: BTreeSet<Coord>,
}

impl Zone {
    pub fn new(cells: impl IntoIterator<Item = Coord>) -> Self {
        Self {
            cells: cells.into_iter().collect(),
        }
    }

    /// Inclusive rectangle `[x0, y0] .. [x1, y1]`.
    pub fn rect(x0: i32, y0: i32, x1: i32, y1: i32) -> Self {
        let mut cells = BTreeSet::new();
        for y in y0.min(y1)..=y0.max(y1) {
            for x in x0.min(x1)..=x0.max(x1) {
                cells.insert(Coord::new(x, y));
            }
        }
        Self { cells }
    }

    pub fn contains(&self, c: Coord) -> bool {
        self.cells.contains(&c)
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Coord> {
        self.cells.iter()
    }

    pub fn is_subset(&self, other: &Zone) -> bool {
        self.cells.is_subset(&other.cells)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Unit {
    pub id: String,
    pub side: Side,
    pub echelon: Echelon,
    pub role: Role,
    pub combat_power: f64,
    pub position: Coord,
    pub posture: Posture,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub zone: Option<Zone>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObjectiveKind {
    Seize,
    Secure,
    Destroy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Objective {
    pub id: String,
    pub location: Coord,
    pub kind: ObjectiveKind,
    pub label: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureKind {
    Route,
    River,
    Ridge,
    Obstacle,
}

/// A named terrain feature ("Route 1", "Route 00"), used to name implied tasks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Feature {
    pub name: String,
    pub kind: FeatureKind,
    pub cells: Vec<Coord>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CivilKind {
    Hospital,
    Heritage,
    CivilianArea,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CivilConsideration {
    pub location: Coord,
    pub kind: CivilKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TroopsAvailable {
    pub count: usize,
    pub combat_power: f64,
}

/// Mission, Enemy, Terrain and weather, Troops, Time, Civil considerations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mettc {
    pub mission: String,
    pub enemy: String,
    pub terrain_weather: String,
    pub troops_available: TroopsAvailable,
    pub time_available: u32,
    pub civil_considerations: Vec<CivilConsideration>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EntryZones {
    #[serde(default)]
    pub friendly: Vec<Zone>,
    #[serde(default)]
    pub enemy: Vec<Zone>,
}

impl EntryZones {
    pub fn for_side(&self, side: Side) -> &[Zone] {
        match side {
            Side::Friendly => &self.friendly,
            Side::Enemy => &self.enemy,
        }
    }

    pub fn cells(&self, side: Side) -> BTreeSet<Coord> {
        self.for_side(side)
            .iter()
            .flat_map(|z| z.cells.iter().copied())
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub name: String,
    pub own_unit_name: String,
    pub map: GridMap,
    pub weather: WeatherState,
    pub friendly_units: Vec<Unit>,
    pub enemy_observed_units: Vec<Unit>,
    pub enemy_template: DoctrinalTemplate,
    pub objectives: Vec<Objective>,
    pub entry_zones: EntryZones,
    pub features: Vec<Feature>,
    pub time_limit: u32,
    pub mettc: Mettc,
}

impl Scenario {
    pub fn objective(&self, id: &str) -> Option<&Objective> {
        self.objectives.iter().find(|o| o.id == id)
    }

    pub fn unit(&self, id: &str) -> Option<&Unit> {
        self.friendly_units
            .iter()
            .chain(&self.enemy_observed_units)
            .find(|u| u.id == id)
    }

    pub fn friendly_cp(&self) -> f64 {
        self.friendly_units.iter().map(|u| u.combat_power).sum()
    }
}

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("scenario schema error: {0}")]
    Schema(String),
    #[error("scenario validation failed:\n  {}", .0.join("\n  "))]
    Invalid(Vec<String>),
}

impl ScenarioError {
    pub fn violations(&self) -> &[String] {
        match self {
            ScenarioError::Invalid(v) => v,
            ScenarioError::Schema(_) => &[],
        }
    }
}

// ---------------------------------------------------------------------------
// Document schema

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioDoc {
    #[serde(default)]
    name: String,
    #[serde(default)]
    own_unit_name: String,
    #[serde(default)]
    mission: String,
    time_limit: u32,
    map: MapDoc,
    #[serde(default)]
    weather: WeatherState,
    #[serde(default)]
    units: Vec<Unit>,
    #[serde(default)]
    objectives: Vec<Objective>,
    #[serde(default)]
    entry_zones: EntryZonesDoc,
    #[serde(default)]
    features: Vec<FeatureDoc>,
    #[serde(default)]
    civil: Vec<CivilConsideration>,
    #[serde(default)]
    template: DoctrinalTemplate,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MapDoc {
    topology: Topology,
    #[serde(default = "one")]
    cell_size_km: f64,
    #[serde(default = "ten")]
    tick_minutes: f64,
    terrain: String,
    elevation: String,
}

fn one() -> f64 {
    1.0
}

fn ten() -> f64 {
    10.0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
enum ZoneDoc {
    Rect { rect: [i32; 4] },
    Cells { cells: Vec<Coord> },
}

impl ZoneDoc {
    fn into_zone(self) -> Zone {
        match self {
            ZoneDoc::Rect { rect } => Zone::rect(rect[0], rect[1], rect[2], rect[3]),
            ZoneDoc::Cells { cells } => Zone::new(cells),
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EntryZonesDoc {
    #[serde(default)]
    friendly: Vec<ZoneDoc>,
    #[serde(default)]
    enemy: Vec<ZoneDoc>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct FeatureDoc {
    name: String,
    kind: FeatureKind,
    cells: Vec<Coord>,
}

/// Parse the character raster and elevation raster into a map.
pub fn parse_rasters(
    topology: Topology,
    terrain: &str,
    elevation: &str,
) -> Result<GridMap, Vec<String>> {
    let mut errors = Vec::new();
    let rows: Vec<&str> = terrain
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .collect();
    let elev_rows: Vec<Vec<&str>> = elevation
        .lines()
        .map(|l| l.split_whitespace().collect::<Vec<_>>())
        .filter(|r| !r.is_empty())
        .collect();
    let height = rows.len() as i32;
    let width = rows.first().map_or(0, |r| r.chars().count()) as i32;
    if width < 1 || height < 1 {
        return Err(vec![
            "map.terrain: raster must have at least one row and column".into(),
        ]);
    }
    if elev_rows.len() as i32 != height {
        errors.push(format!(
            "map.elevation: {} rows, terrain raster has {height}",
            elev_rows.len()
        ));
    }
    let mut cells = Vec::with_capacity((width * height) as usize);
    for (y, row) in rows.iter().enumerate() {
        let chars: Vec<char> = row.chars().collect();
        if chars.len() as i32 != width {
            errors.push(format!(
                "map.terrain row {y}: {} cells, expected {width}",
                chars.len()
            ));
        }
        let elev_row = elev_rows.get(y);
        if let Some(er) = elev_row {
            if er.len() as i32 != width {
                errors.push(format!(
                    "map.elevation row {y}: {} values, expected {width}",
                    er.len()
                ));
            }
        }
        for x in 0..width as usize {
            let surface = match chars.get(x).copied().map(|c| (c, Surface::from_char(c))) {
                Some((_, Some(s))) => s,
                Some((c, None)) => {
                    errors.push(format!(
                        "map.terrain ({x},{y}): unknown cell character '{c}'"
                    ));
                    Surface::Open
                }
                None => Surface::Open,
            };
            let elevation = match elev_row.and_then(|r| r.get(x)) {
                Some(tok) => match tok.parse::<i64>() {
                    Ok(v) => v as f64,
                    Err(_) => {
                        errors.push(format!(
                            "map.elevation ({x},{y}): '{tok}' is not an integer"
                        ));
                        0.0
                    }
                },
                None => 0.0,
            };
            cells.push(TerrainCell::new(surface, elevation));
        }
    }
    if !errors.is_empty() {
        return Err(errors);
    }
    Ok(GridMap {
        topology,
        width,
        height,
        cells,
        cell_size_km: 1.0,
        tick_minutes: 10.0,
    })
}

/// Render the terrain and elevation rasters of a map.
pub fn render_rasters(map: &GridMap) -> (String, String) {
    let mut terrain = String::new();
    let mut elevation = String::new();
    for y in 0..map.height {
        let mut elev = Vec::with_capacity(map.width as usize);
        for x in 0..map.width {
            let cell = map.cell(Coord::new(x, y));
            terrain.push(cell.surface.to_char());
            elev.push(format!("{}", cell.elevation.round() as i64));
        }
        terrain.push('\n');
        elevation.push_str(&elev.join(" "));
        elevation.push('\n');
    }
    (terrain, elevation)
}

pub fn load_scenario(source: &str) -> Result<Scenario, ScenarioError> {
    let doc: ScenarioDoc =
        toml::from_str(source).map_err(|e| ScenarioError::Schema(e.to_string()))?;
    let mut violations = Vec::new();

    let mut map = match parse_rasters(doc.map.topology, &doc.map.terrain, &doc.map.elevation) {
        Ok(m) => m,
        Err(errs) => return Err(ScenarioError::Invalid(errs)),
    };
    map.cell_size_km = doc.map.cell_size_km;
    map.tick_minutes = doc.map.tick_minutes;

    let weather = doc.weather;
    if weather.precipitation.is_nan() || weather.precipitation < 0.0 {
        violations.push("weather.precipitation must be >= 0".to_string());
    }
    if weather.visibility.is_nan() || weather.visibility <= 0.0 {
        violations.push("weather.visibility must be > 0".to_string());
    }
    if weather.wind_speed.is_nan() || weather.wind_speed < 0.0 {
        violations.push("weather.wind_speed must be >= 0".to_string());
    }
    if doc.time_limit < 1 {
        violations.push("time_limit must be >= 1".to_string());
    }
    for (i, cell) in map.cells.iter().enumerate() {
        if cell.elevation < -500.0 {
            violations.push(format!("map cell {}: elevation below -500", map.coord(i)));
        }
    }

    let mut seen_ids = BTreeSet::new();
    for (i, u) in doc.units.iter().enumerate() {
        if !seen_ids.insert(u.id.clone()) {
            violations.push(format!("units[{i}] '{}': duplicate unit id", u.id));
        }
        if !map.in_bounds(u.position) {
            violations.push(format!(
                "units[{i}] '{}': position {} out of bounds",
                u.id, u.position
            ));
        }
        if u.combat_power.is_nan() || u.combat_power < 0.0 {
            violations.push(format!("units[{i}] '{}': combat_power must be >= 0", u.id));
        }
        if let Some(z) = &u.zone {
            if !z.contains(u.position) {
                violations.push(format!(
                    "units[{i}] '{}': position {} outside its zone",
                    u.id, u.position
                ));
            }
            check_zone(&map, z, &format!("units[{i}].zone"), &mut violations);
        }
    }

    for (i, o) in doc.objectives.iter().enumerate() {
        if !map.in_bounds(o.location) {
            violations.push(format!(
                "objectives[{i}] '{}': location {} out of bounds",
                o.id, o.location
            ));
        }
    }

    let entry_zones = EntryZones {
        friendly: doc
            .entry_zones
            .friendly
            .into_iter()
            .map(ZoneDoc::into_zone)
            .collect(),
        enemy: doc
            .entry_zones
            .enemy
            .into_iter()
            .map(ZoneDoc::into_zone)
            .collect(),
    };
    for (side, zones) in [
        ("friendly", &entry_zones.friendly),
        ("enemy", &entry_zones.enemy),
    ] {
        for (i, z) in zones.iter().enumerate() {
            check_zone(
                &map,
                z,
                &format!("entry_zones.{side}[{i}]"),
                &mut violations,
            );
        }
    }

    let features: Vec<Feature> = doc
        .features
        .into_iter()
        .map(|f| Feature {
            name: f.name,
            kind: f.kind,
            cells: f.cells,
        })
        .collect();
    for f in &features {
        for c in &f.cells {
            if !map.in_bounds(*c) {
                violations.push(format!("feature '{}': cell {c} out of bounds", f.name));
            }
        }
    }
    for (i, c) in doc.civil.iter().enumerate() {
        if !map.in_bounds(c.location) {
            violations.push(format!("civil[{i}]: location {} out of bounds", c.location));
        }
    }
    violations.extend(doc.template.violations());

    if !violations.is_empty() {
        return Err(ScenarioError::Invalid(violations));
    }

    let (friendly_units, enemy_observed_units): (Vec<Unit>, Vec<Unit>) = doc
        .units
        .into_iter()
        .partition(|u| u.side == Side::Friendly);

    let mettc = derive_mettc(
        &doc.mission,
        &map,
        &weather,
        &friendly_units,
        &enemy_observed_units,
        doc.time_limit,
        doc.civil,
    );

    Ok(Scenario {
        name: doc.name,
        own_unit_name: doc.own_unit_name,
        map,
        weather,
        friendly_units,
        enemy_observed_units,
        enemy_template: doc.template,
        objectives: doc.objectives,
        entry_zones,
        features,
        time_limit: doc.time_limit,
        mettc,
    })
}

fn check_zone(map: &GridMap, zone: &Zone, what: &str, violations: &mut Vec<String>) {
    if zone.is_empty() {
        violations.push(format!("{what}: zone is empty"));
        return;
    }
    if let Some(c) = zone.iter().find(|c| !map.in_bounds(**c)) {
        violations.push(format!("{what}: cell {c} out of bounds"));
        return;
    }
    if !map.is_contiguous(&zone.cells) {
        violations.push(format!("{what}: zone is not contiguous"));
    }
}

fn count_by_role(units: &[Unit]) -> String {
    let mut parts = Vec::new();
    for role in Role::ALL {
        let n = units.iter().filter(|u| u.role == role).count();
        if n > 0 {
            parts.push(format!("{n} {role}"));
        }
    }
    if parts.is_empty() {
        "none".to_string()
    } else {
        parts.join(", ")
    }
}

fn derive_mettc(
    mission: &str,
    map: &GridMap,
    weather: &WeatherState,
    friendly: &[Unit],
    enemy: &[Unit],
    time_limit: u32,
    civil: Vec<CivilConsideration>,
) -> Mettc {
    let mut surfaces = Vec::new();
    for s in [
        Surface::Forest,
        Surface::Urban,
        Surface::Road,
        Surface::River,
        Surface::Marsh,
        Surface::Impassable,
    ] {
        let n = map.cells.iter().filter(|c| c.surface == s).count();
        if n > 0 {
            surfaces.push(format!("{n} {s:?}").to_lowercase());
        }
    }
    let terrain_weather = format!(
        "{}x{} cells ({}); precipitation {} mm/h, visibility {} m, wind {} m/s",
        map.width,
        map.height,
        if surfaces.is_empty() {
            "all open".to_string()
        } else {
            surfaces.join(", ")
        },
        weather.precipitation,
        weather.visibility,
        weather.wind_speed
    );
    Mettc {
        mission: mission.to_string(),
        enemy: format!(
            "{} units observed ({}), CP {}",
            enemy.len(),
            count_by_role(enemy),
            enemy.iter().map(|u| u.combat_power).sum::<f64>()
        ),
        terrain_weather,
        troops_available: TroopsAvailable {
            count: friendly.len(),
            combat_power: friendly.iter().map(|u| u.combat_power).sum(),
        },
        time_available: time_limit,
        civil_considerations: civil,
    }
}

/// Write a scenario back to its document form; `load_scenario` inverts this.
pub fn serialize_scenario(scenario: &Scenario) -> String {
    let (terrain, elevation) = render_rasters(&scenario.map);
    let doc = ScenarioDoc {
        name: scenario.name.clone(),
        own_unit_name: scenario.own_unit_name.clone(),
        mission: scenario.mettc.mission.clone(),
        time_limit: scenario.time_limit,
        map: MapDoc {
            topology: scenario.map.topology,
            cell_size_km: scenario.map.cell_size_km,
            tick_minutes: scenario.map.tick_minutes,
            terrain,
            elevation,
        },
        weather: scenario.weather,
        units: scenario
            .friendly_units
            .iter()
            .chain(&scenario.enemy_observed_units)
            .cloned()
            .collect(),
        objectives: scenario.objectives.clone(),
        entry_zones: EntryZonesDoc {
            friendly: zone_docs(&scenario.entry_zones.friendly),
            enemy: zone_docs(&scenario.entry_zones.enemy),
        },
        features: scenario
            .features
            .iter()
            .map(|f| FeatureDoc {
                name: f.name.clone(),
                kind: f.kind,
                cells: f.cells.clone(),
            })
            .collect(),
        civil: scenario.mettc.civil_considerations.clone(),
        template: scenario.enemy_template.clone(),
    };
    toml::to_string(&doc).expect("scenario document is always representable")
}

fn zone_docs(zones: &[Zone]) -> Vec<ZoneDoc> {
    zones
        .iter()
        .map(|z| ZoneDoc::Cells {
            cells: z.cells.iter().copied().collect(),
        })
        .collect()
}
