use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::grid::{Coord, Role};
use crate::ipb::IpbError;
use crate::scenario::{Scenario, Zone};

/// Dilation applied to the friendly/objective bounding box to obtain the AO.
pub const AO_MARGIN: i32 = 2;
/// Default enemy weapon reach used to grow the AO into the AI.
pub const DEFAULT_ENEMY_REACH: i32 = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BattlespaceFrame {
    pub area_of_operations: Zone,
    pub area_of_interest: Zone,
    pub general_enemy_assessment: String,
    pub enemy_counts: BTreeMap<Role, usize>,
}

pub fn evaluate_battlespace(scenario: &Scenario) -> Result<BattlespaceFrame, IpbError> {
    evaluate_battlespace_with_reach(scenario, DEFAULT_ENEMY_REACH)
}

pub fn evaluate_battlespace_with_reach(
    scenario: &Scenario,
    enemy_reach: i32,
) -> Result<BattlespaceFrame, IpbError> {
    if scenario.objectives.is_empty() {
        return Err(IpbError::NoObjectives);
    }
    let map = &scenario.map;
    let anchors: Vec<Coord> = scenario
        .entry_zones
        .cells(crate::scenario::Side::Friendly)
        .into_iter()
        .chain(scenario.objectives.iter().map(|o| o.location))
        .collect();
    let min_x = anchors.iter().map(|c| c.x).min().unwrap_or(0);
    let max_x = anchors.iter().map(|c| c.x).max().unwrap_or(0);
    let min_y = anchors.iter().map(|c| c.y).min().unwrap_or(0);
    let max_y = anchors.iter().map(|c| c.y).max().unwrap_or(0);
    let bbox = Zone::rect(min_x, min_y, max_x, max_y);
    let ao = Zone {
        cells: map.dilate(bbox.iter(), AO_MARGIN),
    };
    let ai = Zone {
        cells: map.dilate(ao.iter(), enemy_reach.max(0)),
    };

    let mut enemy_counts = BTreeMap::new();
    for u in &scenario.enemy_observed_units {
        *enemy_counts.entry(u.role).or_insert(0) += 1;
    }
    let summary = if enemy_counts.is_empty() {
        "no enemy units in contact".to_string()
    } else {
        let parts: Vec<String> = enemy_counts
            .iter()
            .map(|(role, n)| format!("{n} {role}"))
            .collect();
        let cp: f64 = scenario
            .enemy_observed_units
            .iter()
            .map(|u| u.combat_power)
            .sum();
        format!(
            "{} enemy units in contact ({}), total CP {}",
            scenario.enemy_observed_units.len(),
            parts.join(", "),
            cp
        )
    };

    Ok(BattlespaceFrame {
        area_of_operations: ao,
        area_of_interest: ai,
        general_enemy_assessment: summary,
        enemy_counts,
    })
}
