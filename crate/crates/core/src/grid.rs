//! Grid geometry: coordinates, topologies, terrain cells and movement cost.
//!
//! Two topologies are supported. `square-8-neighbor` uses Chebyshev distance.
//! `hex-odd-row` uses offset coordinates where odd rows are shifted half a
//! cell to the east; distances go through cube coordinates.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// A cell address. `x` is the column (west to east), `y` the row (north to south).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(from = "[i32; 2]", into = "[i32; 2]")]
pub struct Coord {
    pub x: i32,
    pub y: i32,
}

impl Coord {
    pub const fn new(x: i32, y: i32) -> Self {
        Self { x, y }
    }

    /// Row-major ordering key, used for every deterministic tie-break.
    pub fn row_major(self) -> (i32, i32) {
        (self.y, self.x)
    }
}

impl From<[i32; 2]> for Coord {
    fn from(v: [i32; 2]) -> Self {
        Coord::new(v[0], v[1])
    }
}

impl From<Coord> for [i32; 2] {
    fn from(c: Coord) -> Self {
        [c.x, c.y]
    }
}

impl fmt::Display for Coord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.x, self.y)
    }
}

/// Sort coordinates row-major (y, then x).
pub fn sort_row_major(cells: &mut [Coord]) {
    cells.sort_by_key(|c| c.row_major());
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Topology {
    #[serde(rename = "hex-odd-row")]
    HexOddRow,
    #[serde(rename = "square-8-neighbor")]
    Square8,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Surface {
    Open,
    Forest,
    Urban,
    Road,
    River,
    Marsh,
    Impassable,
}

impl Surface {
    pub fn from_char(c: char) -> Option<Self> {
        Some(match c {
            '.' => Surface::Open,
            'F' => Surface::Forest,
            'U' => Surface::Urban,
            'R' => Surface::Road,
            '~' => Surface::River,
            'M' => Surface::Marsh,
            '#' => Surface::Impassable,
            _ => return None,
        })
    }

    pub fn to_char(self) -> char {
        match self {
            Surface::Open => '.',
            Surface::Forest => 'F',
            Surface::Urban => 'U',
            Surface::Road => 'R',
            Surface::River => '~',
            Surface::Marsh => 'M',
            Surface::Impassable => '#',
        }
    }

    /// Time units to enter a cell of this surface before role and weather modifiers.
    pub fn base_cost(self) -> f64 {
        match self {
            Surface::Open => 1.0,
            Surface::Forest => 2.0,
            Surface::Urban => 1.5,
            Surface::Road => 0.5,
            Surface::River => 1.0,
            Surface::Marsh => 3.0,
            Surface::Impassable => f64::INFINITY,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TerrainCell {
    pub elevation: f64,
    pub surface: Surface,
    /// `f64::INFINITY` encodes impassable.
    pub base_mobility_cost: f64,
}

impl TerrainCell {
    pub fn new(surface: Surface, elevation: f64) -> Self {
        Self {
            elevation,
            surface,
            base_mobility_cost: surface.base_cost(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Infantry,
    Armor,
    Artillery,
    Engineer,
    CommandPost,
    Logistics,
    Recon,
}

impl Role {
    pub const ALL: [Role; 7] = [
        Role::Infantry,
        Role::Armor,
        Role::Artillery,
        Role::Engineer,
        Role::CommandPost,
        Role::Logistics,
        Role::Recon,
    ];

    /// Units that manoeuvre along avenues toward objectives.
    pub fn is_maneuver(self) -> bool {
        matches!(
            self,
            Role::Infantry | Role::Armor | Role::Engineer | Role::Recon
        )
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Role::Infantry => "infantry",
            Role::Armor => "armor",
            Role::Artillery => "artillery",
            Role::Engineer => "engineer",
            Role::CommandPost => "command_post",
            Role::Logistics => "logistics",
            Role::Recon => "recon",
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeatherState {
    /// mm/h
    pub precipitation: f64,
    /// metres
    pub visibility: f64,
    /// m/s
    pub wind_speed: f64,
}

impl Default for WeatherState {
    fn default() -> Self {
        Self {
            precipitation: 0.0,
            visibility: 10_000.0,
            wind_speed: 0.0,
        }
    }
}

impl WeatherState {
    /// Multiplicative movement penalty: 1 + 0.025 per mm/h, capped at 1.5.
    pub fn mobility_modifier(&self) -> f64 {
        (1.0 + 0.025 * self.precipitation).min(1.5)
    }

    /// Combat visibility factor applied to both sides' fire.
    pub fn visibility_modifier(&self) -> f64 {
        (self.visibility / 5000.0).clamp(0.5, 1.0)
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum GridError {
    #[error("coordinate {0} is out of bounds")]
    OutOfBounds(Coord),
    #[error("cells {0} and {1} are not adjacent")]
    NotAdjacent(Coord, Coord),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridMap {
    pub topology: Topology,
    pub width: i32,
    pub height: i32,
    /// Row-major, `width * height` entries.
    pub cells: Vec<TerrainCell>,
    #[serde(default = "default_cell_km")]
    pub cell_size_km: f64,
    #[serde(default = "default_tick_minutes")]
    pub tick_minutes: f64,
}

fn default_cell_km() -> f64 {
    1.0
}

fn default_tick_minutes() -> f64 {
    10.0
}

const SQUARE_OFFSETS: [(i32, i32); 8] = [
    (-1, -1),
    (0, -1),
    (1, -1),
    (-1, 0),
    (1, 0),
    (-1, 1),
    (0, 1),
    (1, 1),
];
const HEX_EVEN_ROW: [(i32, i32); 6] = [(-1, -1), (0, -1), (-1, 0), (1, 0), (-1, 1), (0, 1)];
const HEX_ODD_ROW: [(i32, i32); 6] = [(0, -1), (1, -1), (-1, 0), (1, 0), (0, 1), (1, 1)];

impl GridMap {
    /// A uniform map, mostly useful for tests and generated instances.
    pub fn filled(topology: Topology, width: i32, height: i32, surface: Surface) -> Self {
        let n = (width.max(0) * height.max(0)) as usize;
        Self {
            topology,
            width,
            height,
            cells: vec![TerrainCell::new(surface, 0.0); n],
            cell_size_km: default_cell_km(),
            tick_minutes: default_tick_minutes(),
        }
    }

    pub fn in_bounds(&self, c: Coord) -> bool {
        c.x >= 0 && c.y >= 0 && c.x < self.width && c.y < self.height
    }

    pub fn index(&self, c: Coord) -> usize {
        (c.y * self.width + c.x) as usize
    }

    pub fn coord(&self, index: usize) -> Coord {
        let i = index as i32;
        Coord::new(i % self.width, i / self.width)
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn cell(&self, c: Coord) -> &TerrainCell {
        &self.cells[self.index(c)]
    }

    pub fn cell_mut(&mut self, c: Coord) -> &mut TerrainCell {
        let i = self.index(c);
        &mut self.cells[i]
    }

    pub fn set_surface(&mut self, c: Coord, surface: Surface) {
        let cell = self.cell_mut(c);
        cell.surface = surface;
        cell.base_mobility_cost = surface.base_cost();
    }

    /// All coordinates in row-major order.
    pub fn coords(&self) -> impl Iterator<Item = Coord> + '_ {
        (0..self.cells.len()).map(move |i| self.coord(i))
    }

    fn offsets(&self, at: Coord) -> &'static [(i32, i32)] {
        match self.topology {
            Topology::Square8 => &SQUARE_OFFSETS,
            Topology::HexOddRow if at.y.rem_euclid(2) == 1 => &HEX_ODD_ROW,
            Topology::HexOddRow => &HEX_EVEN_ROW,
        }
    }

    pub fn neighbors(&self, at: Coord) -> Result<Vec<Coord>, GridError> {
        if !self.in_bounds(at) {
            return Err(GridError::OutOfBounds(at));
        }
        Ok(self.neighbors_unchecked(at))
    }

    /// Same as [`GridMap::neighbors`] for callers that already know `at` is in bounds.
    pub fn neighbors_unchecked(&self, at: Coord) -> Vec<Coord> {
        self.offsets(at)
            .iter()
            .map(|&(dx, dy)| Coord::new(at.x + dx, at.y + dy))
            .filter(|c| self.in_bounds(*c))
            .collect()
    }

    /// Grid distance in steps (Chebyshev on square grids, hex distance on hex grids).
    pub fn distance(&self, a: Coord, b: Coord) -> i32 {
        match self.topology {
            Topology::Square8 => (a.x - b.x).abs().max((a.y - b.y).abs()),
            Topology::HexOddRow => {
                let (aq, ar) = offset_to_axial(a);
                let (bq, br) = offset_to_axial(b);
                let dq = aq - bq;
                let dr = ar - br;
                (dq.abs() + dr.abs() + (dq + dr).abs()) / 2
            }
        }
    }

    pub fn adjacent(&self, a: Coord, b: Coord) -> bool {
        a != b && self.distance(a, b) == 1
    }

    /// All in-bounds cells within `radius` steps of any cell in `seeds`.
    pub fn dilate<'a>(
        &self,
        seeds: impl IntoIterator<Item = &'a Coord>,
        radius: i32,
    ) -> BTreeSet<Coord> {
        let mut out: BTreeSet<Coord> = seeds
            .into_iter()
            .copied()
            .filter(|c| self.in_bounds(*c))
            .collect();
        let mut frontier: Vec<Coord> = out.iter().copied().collect();
        for _ in 0..radius {
            let mut next = Vec::new();
            for c in frontier {
                for n in self.neighbors_unchecked(c) {
                    if out.insert(n) {
                        next.push(n);
                    }
                }
            }
            frontier = next;
        }
        out
    }

    /// Distance from every cell to the nearest seed, `i32::MAX` when there are no seeds.
    pub fn distance_field<'a>(&self, seeds: impl IntoIterator<Item = &'a Coord>) -> Vec<i32> {
        let mut dist = vec![i32::MAX; self.cells.len()];
        let mut queue = std::collections::VecDeque::new();
        for &s in seeds {
            if self.in_bounds(s) && dist[self.index(s)] != 0 {
                dist[self.index(s)] = 0;
                queue.push_back(s);
            }
        }
        while let Some(c) = queue.pop_front() {
            let d = dist[self.index(c)];
            for n in self.neighbors_unchecked(c) {
                let i = self.index(n);
                if dist[i] == i32::MAX {
                    dist[i] = d + 1;
                    queue.push_back(n);
                }
            }
        }
        dist
    }

    /// True when `cells` is non-empty and connected under the neighbor relation.
    pub fn is_contiguous(&self, cells: &BTreeSet<Coord>) -> bool {
        let Some(&start) = cells.iter().next() else {
            return false;
        };
        let mut seen = BTreeSet::from([start]);
        let mut stack = vec![start];
        while let Some(c) = stack.pop() {
            if !self.in_bounds(c) {
                continue;
            }
            for n in self.neighbors_unchecked(c) {
                if cells.contains(&n) && seen.insert(n) {
                    stack.push(n);
                }
            }
        }
        seen.len() == cells.len()
    }

    /// Cost of moving from `from` into the adjacent cell `to` for a unit of `role`.
    ///
    /// Infinite when the destination is impassable, when armour enters marsh, or
    /// when a non-engineer enters a river cell other than from a road (a bridge).
    pub fn mobility_cost(
        &self,
        weather: &WeatherState,
        from: Coord,
        to: Coord,
        role: Role,
    ) -> Result<f64, GridError> {
        for c in [from, to] {
            if !self.in_bounds(c) {
                return Err(GridError::OutOfBounds(c));
            }
        }
        if !self.adjacent(from, to) {
            return Err(GridError::NotAdjacent(from, to));
        }
        Ok(self.step_cost(weather, from, to, role))
    }

    /// Unchecked variant of [`GridMap::mobility_cost`] for hot loops over known neighbors.
    pub fn step_cost(&self, weather: &WeatherState, from: Coord, to: Coord, role: Role) -> f64 {
        let dest = self.cell(to);
        let base = dest.base_mobility_cost;
        if !base.is_finite() {
            return f64::INFINITY;
        }
        let role_cost = match (dest.surface, role) {
            (Surface::River, Role::Engineer) => 4.0,
            (Surface::River, _) if self.cell(from).surface != Surface::Road => f64::INFINITY,
            (Surface::Road, Role::Armor) => base * 0.5,
            (Surface::Forest, Role::Armor) => base * 1.5,
            (Surface::Marsh, Role::Armor) => f64::INFINITY,
            _ => base,
        };
        role_cost * weather.mobility_modifier()
    }

    /// Static passability of a cell for a role (river cells count as passable; the
    /// bridge rule is directional and handled by [`GridMap::step_cost`]).
    pub fn passable(&self, c: Coord, role: Role) -> bool {
        match self.cell(c).surface {
            Surface::Impassable => false,
            Surface::Marsh => role != Role::Armor,
            _ => true,
        }
    }
}

fn offset_to_axial(c: Coord) -> (i32, i32) {
    let q = c.x - (c.y - (c.y & 1)) / 2;
    (q, c.y)
}
