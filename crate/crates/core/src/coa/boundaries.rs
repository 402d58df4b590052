use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::coa::CourseOfAction;
use crate::grid::Coord;
use crate::scenario::{Scenario, Zone};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BoundaryError {
    #[error("indistinct axes; regenerate CoA ({0} and {1} share a route)")]
    IndistinctAxes(String, String),
    #[error("unit '{0}' is not in the scenario")]
    UnknownUnit(String),
}

/// Corridor width on each side of a route.
pub const CORRIDOR: i32 = 1;

/// Corridors for manoeuvre units: each route dilated by one cell, contested
/// cells going to the unit whose route is closer (lower id on ties). Cells on
/// a route belong to every unit whose route passes through them. Support units
/// get their own dilated footprint outside the partition.
pub fn assign_boundaries(
    coa: &CourseOfAction,
    scenario: &Scenario,
) -> Result<CourseOfAction, BoundaryError> {
    let map = &scenario.map;
    let mut maneuver: BTreeMap<String, Vec<Coord>> = BTreeMap::new();
    let mut support: BTreeMap<String, Vec<Coord>> = BTreeMap::new();
    for id in coa.tasked_units() {
        let unit = scenario
            .unit(id)
            .ok_or_else(|| BoundaryError::UnknownUnit(id.to_string()))?;
        let mut route = coa.full_route(id);
        if route.is_empty() {
            route.push(unit.position);
        }
        if unit.role.is_maneuver() {
            maneuver.insert(id.to_string(), route);
        } else {
            support.insert(id.to_string(), route);
        }
    }

    let ids: Vec<&String> = maneuver.keys().collect();
    for (i, a) in ids.iter().enumerate() {
        for b in &ids[i + 1..] {
            if maneuver[*a] == maneuver[*b] {
                return Err(BoundaryError::IndistinctAxes((*a).clone(), (*b).clone()));
            }
        }
    }

    let route_sets: BTreeMap<&String, BTreeSet<Coord>> = maneuver
        .iter()
        .map(|(id, r)| (id, r.iter().copied().collect()))
        .collect();
    let dilated: BTreeMap<&String, BTreeSet<Coord>> = maneuver
        .iter()
        .map(|(id, r)| (id, map.dilate(r.iter(), CORRIDOR)))
        .collect();
    let all: BTreeSet<Coord> = dilated.values().flatten().copied().collect();

    let mut zones: BTreeMap<String, BTreeSet<Coord>> = maneuver
        .keys()
        .map(|id| (id.clone(), BTreeSet::new()))
        .collect();
    for c in all {
        let on_route: Vec<&&String> = route_sets
            .iter()
            .filter(|(_, s)| s.contains(&c))
            .map(|(id, _)| id)
            .collect();
        if !on_route.is_empty() {
            for id in on_route {
                zones.get_mut(id.as_str()).unwrap().insert(c);
            }
            continue;
        }
        let owner = dilated
            .iter()
            .filter(|(_, d)| d.contains(&c))
            .map(|(id, _)| {
                let d = maneuver[*id]
                    .iter()
                    .map(|r| map.distance(*r, c))
                    .min()
                    .unwrap_or(i32::MAX);
                (d, *id)
            })
            .min();
        if let Some((_, id)) = owner {
            zones.get_mut(id.as_str()).unwrap().insert(c);
        }
    }

    let mut out = coa.clone();
    out.boundaries.clear();
    for (id, cells) in zones {
        out.boundaries.insert(id, Zone { cells });
    }
    for (id, route) in support {
        out.boundaries.insert(
            id,
            Zone {
                cells: map.dilate(route.iter(), CORRIDOR),
            },
        );
    }
    Ok(out)
}

/// Cells claimed by more than one manoeuvre zone that are not on a shared route.
pub fn boundary_conflicts(coa: &CourseOfAction, scenario: &Scenario) -> Vec<Coord> {
    let mut routes: BTreeMap<&str, BTreeSet<Coord>> = BTreeMap::new();
    for id in coa.tasked_units() {
        if scenario.unit(id).is_some_and(|u| u.role.is_maneuver()) {
            routes.insert(id, coa.full_route(id).into_iter().collect());
        }
    }
    let mut out = Vec::new();
    let ids: Vec<&str> = routes.keys().copied().collect();
    for (i, a) in ids.iter().enumerate() {
        for b in &ids[i + 1..] {
            let (Some(za), Some(zb)) = (coa.boundaries.get(*a), coa.boundaries.get(*b)) else {
                continue;
            };
            for c in za.cells.intersection(&zb.cells) {
                if !(routes[a].contains(c) && routes[b].contains(c)) {
                    out.push(*c);
                }
            }
        }
    }
    out
}
