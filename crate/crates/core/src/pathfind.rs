//! Least-cost routing over the mobility graph: Dijkstra, lazy Yen k-shortest
//! paths, and the overlap-constrained route search used for avenues of approach.

use std::cmp::Ordering;
use std::collections::{BTreeSet, BinaryHeap, HashSet};

use serde::{Deserialize, Serialize};

use crate::grid::{Coord, GridMap, Role, WeatherState};

#[derive(Debug, Clone, Copy, PartialEq)]
struct HeapEntry {
    cost: f64,
    node: usize,
}

impl Eq for HeapEntry {}

impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        // Min-heap on cost, then on node index for a deterministic expansion order.
        other
            .cost
            .total_cmp(&self.cost)
            .then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// A directed graph with non-negative edge costs over nodes `0..len()`.
pub trait Graph {
    fn len(&self) -> usize;
    fn is_empty(&self) -> bool {
        self.len() == 0
    }
    fn successors(&self, node: usize, out: &mut Vec<(usize, f64)>);
}

/// Shortest path from any of `sources` to `target`, skipping blocked nodes and edges.
///
/// Returns the node sequence (starting at a source) and its cost, computed as the
/// left-to-right sum of edge costs.
pub fn dijkstra<G: Graph>(
    graph: &G,
    sources: &[usize],
    target: usize,
    blocked_nodes: &[bool],
    blocked_edges: &HashSet<(usize, usize)>,
) -> Option<(Vec<usize>, f64)> {
    let n = graph.len();
    let mut dist = vec![f64::INFINITY; n];
    let mut prev = vec![usize::MAX; n];
    let mut heap = BinaryHeap::new();
    for &s in sources {
        if blocked_nodes.get(s).copied().unwrap_or(false) {
            continue;
        }
        if dist[s] > 0.0 {
            dist[s] = 0.0;
            heap.push(HeapEntry { cost: 0.0, node: s });
        }
    }
    let mut succ = Vec::new();
    while let Some(HeapEntry { cost, node }) = heap.pop() {
        if cost > dist[node] {
            continue;
        }
        if node == target {
            break;
        }
        succ.clear();
        graph.successors(node, &mut succ);
        for &(next, w) in &succ {
            if !w.is_finite() || blocked_nodes.get(next).copied().unwrap_or(false) {
                continue;
            }
            if blocked_edges.contains(&(node, next)) {
                continue;
            }
            let nd = cost + w;
            if nd < dist[next] {
                dist[next] = nd;
                prev[next] = node;
                heap.push(HeapEntry {
                    cost: nd,
                    node: next,
                });
            }
        }
    }
    if !dist[target].is_finite() {
        return None;
    }
    let mut path = vec![target];
    let mut cur = target;
    while prev[cur] != usize::MAX {
        cur = prev[cur];
        path.push(cur);
    }
    path.reverse();
    Some((path, dist[target]))
}

/// Sum of edge costs along `path`, left to right. Infinite if an edge is missing.
pub fn path_cost<G: Graph>(graph: &G, path: &[usize]) -> f64 {
    let mut total = 0.0;
    let mut succ = Vec::new();
    for w in path.windows(2) {
        succ.clear();
        graph.successors(w[0], &mut succ);
        match succ.iter().find(|(n, _)| *n == w[1]) {
            Some(&(_, c)) => total += c,
            None => return f64::INFINITY,
        }
    }
    total
}

#[derive(Debug, Clone, PartialEq)]
struct Candidate {
    cost: f64,
    path: Vec<usize>,
}

impl Eq for Candidate {}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        // Min-heap: cheapest first, then fewer nodes, then lexicographic nodes.
        other
            .cost
            .total_cmp(&self.cost)
            .then_with(|| other.path.len().cmp(&self.path.len()))
            .then_with(|| other.path.cmp(&self.path))
    }
}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Graph wrapper adding a virtual super-source wired to every real source at zero cost.
struct WithSuperSource<'a, G: Graph> {
    inner: &'a G,
    sources: &'a [usize],
}

impl<G: Graph> Graph for WithSuperSource<'_, G> {
    fn len(&self) -> usize {
        self.inner.len() + 1
    }

    fn successors(&self, node: usize, out: &mut Vec<(usize, f64)>) {
        if node == self.inner.len() {
            out.extend(self.sources.iter().map(|&s| (s, 0.0)));
        } else {
            self.inner.successors(node, out);
        }
    }
}

/// Lazy Yen enumeration of loopless paths in non-decreasing cost order.
pub struct KShortestPaths<'a, G: Graph> {
    graph: WithSuperSource<'a, G>,
    target: usize,
    accepted: Vec<Vec<usize>>,
    candidates: BinaryHeap<Candidate>,
    seen: HashSet<Vec<usize>>,
    exhausted: bool,
}

impl<'a, G: Graph> KShortestPaths<'a, G> {
    pub fn new(graph: &'a G, sources: &'a [usize], target: usize) -> Self {
        Self {
            graph: WithSuperSource {
                inner: graph,
                sources,
            },
            target,
            accepted: Vec::new(),
            candidates: BinaryHeap::new(),
            seen: HashSet::new(),
            exhausted: false,
        }
    }

    fn super_source(&self) -> usize {
        self.graph.inner.len()
    }

    fn strip(path: &[usize]) -> Vec<usize> {
        path[1..].to_vec()
    }

    /// Next path as (nodes starting at a real source, cost), or `None` when exhausted.
    pub fn next_path(&mut self) -> Option<(Vec<usize>, f64)> {
        if self.exhausted {
            return None;
        }
        let n = self.graph.len();
        if self.accepted.is_empty() {
            let blocked = vec![false; n];
            let Some((path, _)) = dijkstra(
                &self.graph,
                &[self.super_source()],
                self.target,
                &blocked,
                &HashSet::new(),
            ) else {
                self.exhausted = true;
                return None;
            };
            let cost = path_cost(&self.graph, &path);
            self.seen.insert(path.clone());
            self.accepted.push(path.clone());
            return Some((Self::strip(&path), cost));
        }

        let last = self.accepted.last().expect("non-empty").clone();
        let mut blocked = vec![false; n];
        for i in 0..last.len() - 1 {
            let spur = last[i];
            let root = &last[..=i];
            let mut blocked_edges = HashSet::new();
            for p in &self.accepted {
                if p.len() > i + 1 && &p[..=i] == root {
                    blocked_edges.insert((p[i], p[i + 1]));
                }
            }
            for b in blocked.iter_mut() {
                *b = false;
            }
            for &r in &root[..i] {
                blocked[r] = true;
            }
            if let Some((spur_path, _)) =
                dijkstra(&self.graph, &[spur], self.target, &blocked, &blocked_edges)
            {
                let mut total = root[..i].to_vec();
                total.extend_from_slice(&spur_path);
                if self.seen.insert(total.clone()) {
                    let cost = path_cost(&self.graph, &total);
                    self.candidates.push(Candidate { cost, path: total });
                }
            }
        }
        match self.candidates.pop() {
            Some(c) => {
                self.accepted.push(c.path.clone());
                Some((Self::strip(&c.path), c.cost))
            }
            None => {
                self.exhausted = true;
                None
            }
        }
    }
}

/// Undirected edge set of a cell path.
pub fn edge_set(path: &[Coord]) -> BTreeSet<(Coord, Coord)> {
    path.windows(2)
        .map(|w| {
            if w[0] <= w[1] {
                (w[0], w[1])
            } else {
                (w[1], w[0])
            }
        })
        .collect()
}

/// Shared edges as a fraction of the shorter path's edge count.
pub fn edge_overlap(a: &[Coord], b: &[Coord]) -> f64 {
    let ea = edge_set(a);
    let eb = edge_set(b);
    let shorter = ea.len().min(eb.len());
    if shorter == 0 {
        return if a == b { 1.0 } else { 0.0 };
    }
    ea.intersection(&eb).count() as f64 / shorter as f64
}

/// The cell graph seen by one role under one weather state.
pub struct MobilityGraph<'a> {
    pub map: &'a GridMap,
    pub weather: &'a WeatherState,
    pub role: Role,
}

impl<'a> MobilityGraph<'a> {
    pub fn new(map: &'a GridMap, weather: &'a WeatherState, role: Role) -> Self {
        Self { map, weather, role }
    }
}

impl Graph for MobilityGraph<'_> {
    fn len(&self) -> usize {
        self.map.len()
    }

    fn successors(&self, node: usize, out: &mut Vec<(usize, f64)>) {
        let from = self.map.coord(node);
        for to in self.map.neighbors_unchecked(from) {
            let c = self.map.step_cost(self.weather, from, to, self.role);
            if c.is_finite() {
                out.push((self.map.index(to), c));
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Route {
    pub cells: Vec<Coord>,
    pub cost: f64,
    pub role: Role,
}

impl Route {
    pub fn start(&self) -> Coord {
        self.cells[0]
    }

    pub fn end(&self) -> Coord {
        *self.cells.last().expect("routes are non-empty")
    }
}

/// Least-cost route for `role` from any source cell to `target`.
pub fn least_cost_route(
    map: &GridMap,
    weather: &WeatherState,
    role: Role,
    sources: &[Coord],
    target: Coord,
) -> Option<Route> {
    let graph = MobilityGraph::new(map, weather, role);
    let src: Vec<usize> = sources.iter().map(|c| map.index(*c)).collect();
    let blocked = vec![false; map.len()];
    dijkstra(&graph, &src, map.index(target), &blocked, &HashSet::new()).map(|(p, _)| {
        let cost = path_cost(&graph, &p);
        Route {
            cells: p.into_iter().map(|i| map.coord(i)).collect(),
            cost,
            role,
        }
    })
}

/// Up to `k` routes in cost order whose pairwise edge overlap is at most
/// `max_overlap`, drawn from the first `max_examined` Yen paths.
#[allow(clippy::too_many_arguments)]
pub fn diverse_routes(
    map: &GridMap,
    weather: &WeatherState,
    role: Role,
    sources: &[Coord],
    target: Coord,
    k: usize,
    max_overlap: f64,
    max_examined: usize,
) -> Vec<Route> {
    let graph = MobilityGraph::new(map, weather, role);
    let src: Vec<usize> = sources.iter().map(|c| map.index(*c)).collect();
    let mut yen = KShortestPaths::new(&graph, &src, map.index(target));
    let mut out: Vec<Route> = Vec::new();
    let mut examined = 0;
    while out.len() < k && examined < max_examined {
        let Some((path, cost)) = yen.next_path() else {
            break;
        };
        examined += 1;
        let cells: Vec<Coord> = path.into_iter().map(|i| map.coord(i)).collect();
        if out
            .iter()
            .all(|r| edge_overlap(&r.cells, &cells) <= max_overlap)
        {
            out.push(Route { cells, cost, role });
        }
    }
    out
}
