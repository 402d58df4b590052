//! Rule-based mission analysis: specified tasks, purpose, implied tasks,
//! constraints, end state and the composed mission statement.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::{Coord, GridMap, Role, Surface};
use crate::ipb::frame::evaluate_battlespace;
use crate::ipb::terrain::TerrainAnalysisMap;
use crate::opord::OpOrder;
use crate::pathfind::{least_cost_route, Route};
use crate::scenario::{FeatureKind, Scenario, Side, Zone};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskVerb {
    Seize,
    Secure,
    Destroy,
    Defend,
    Move,
    Support,
}

impl TaskVerb {
    pub const ALL: [TaskVerb; 6] = [
        TaskVerb::Seize,
        TaskVerb::Secure,
        TaskVerb::Destroy,
        TaskVerb::Defend,
        TaskVerb::Move,
        TaskVerb::Support,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            TaskVerb::Seize => "seize",
            TaskVerb::Secure => "secure",
            TaskVerb::Destroy => "destroy",
            TaskVerb::Defend => "defend",
            TaskVerb::Move => "move",
            TaskVerb::Support => "support",
        }
    }

    pub fn title(self) -> String {
        capitalize(self.as_str())
    }

    /// Matches the verb and its common inflections.
    pub fn from_word(word: &str) -> Option<Self> {
        let w = word.to_lowercase();
        Self::ALL.into_iter().find(|v| {
            let stem = v.as_str();
            let base = stem.trim_end_matches('e');
            w == stem
                || w == format!("{stem}s")
                || w == format!("{stem}d")
                || w == format!("{stem}ed")
                || w == format!("{base}ing")
        })
    }

    /// Verbs whose object is a place to be taken.
    pub fn is_offensive(self) -> bool {
        matches!(self, TaskVerb::Seize | TaskVerb::Secure | TaskVerb::Destroy)
    }
}

impl fmt::Display for TaskVerb {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WarfightingFunction {
    CommandControl,
    Intelligence,
    MovementManeuver,
    Fires,
    Protection,
    Sustainment,
}

impl WarfightingFunction {
    pub const ALL: [WarfightingFunction; 6] = [
        WarfightingFunction::CommandControl,
        WarfightingFunction::Intelligence,
        WarfightingFunction::MovementManeuver,
        WarfightingFunction::Fires,
        WarfightingFunction::Protection,
        WarfightingFunction::Sustainment,
    ];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskSource {
    Specified,
    Implied,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Task {
    pub verb: TaskVerb,
    /// Objective id, feature name or unit id.
    pub object: String,
    pub function: WarfightingFunction,
    pub source: TaskSource,
    /// Order line ("3.c item 2") for specified tasks, triggering rule for implied ones.
    pub reference: String,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MissionAnalysis {
    pub specified_tasks: Vec<Task>,
    pub operation_purpose: String,
    pub implied_tasks: Vec<Task>,
    pub constraints: Vec<String>,
    pub end_state: String,
    pub mission_statement: String,
}

impl MissionAnalysis {
    /// Objective ids named by specified tasks, in order, without repeats.
    pub fn specified_objectives(&self, scenario: &Scenario) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for t in &self.specified_tasks {
            if scenario.objective(&t.object).is_some() && !out.contains(&t.object) {
                out.push(t.object.clone());
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AnalysisError {
    #[error("no specified task addressed to unit '{0}'")]
    NoSpecifiedTask(String),
    #[error("{reference}: no task verb in '{text}'")]
    NoVerb { reference: String, text: String },
    #[error("{reference}: '{text}' names nothing in the scenario")]
    UnresolvedObject { reference: String, text: String },
}

pub const FLANK_DISTANCE: i32 = 3;

fn capitalize(s: &str) -> String {
    let mut c = s.chars();
    match c.next() {
        Some(f) => f.to_uppercase().chain(c).collect(),
        None => String::new(),
    }
}

fn decapitalize(s: &str) -> String {
    let mut c = s.chars();
    match c.next() {
        Some(f) => f.to_lowercase().chain(c).collect(),
        None => String::new(),
    }
}

fn strip_period(s: &str) -> &str {
    s.trim().trim_end_matches('.').trim()
}

/// The clause after "in order to", without the trailing period.
pub fn purpose_clause(mission: &str) -> Option<String> {
    let lower = mission.to_lowercase();
    let at = lower.find("in order to")?;
    let rest = strip_period(&mission[at + "in order to".len()..]);
    (!rest.is_empty()).then(|| rest.to_string())
}

fn end_state(intent: &str) -> String {
    let lower = intent.to_lowercase();
    match lower.find("end state:") {
        Some(at) => {
            let rest = &intent[at + "end state:".len()..];
            let sentence = rest.split('.').next().unwrap_or("");
            sentence.trim().to_string()
        }
        None => String::new(),
    }
}

fn find_verb(text: &str) -> Option<TaskVerb> {
    text.split(|c: char| !c.is_alphanumeric())
        .find_map(TaskVerb::from_word)
}

enum Object<'a> {
    Objective(&'a str, &'a str),
    Feature(&'a str),
    Unit(&'a str),
}

fn contains_phrase(haystack_lower: &str, phrase: &str) -> bool {
    let p = phrase.to_lowercase();
    let mut from = 0;
    while let Some(i) = haystack_lower[from..].find(&p) {
        let start = from + i;
        let end = start + p.len();
        let before = haystack_lower[..start].chars().next_back();
        let after = haystack_lower[end..].chars().next();
        let boundary = |c: Option<char>| c.is_none_or(|c| !c.is_alphanumeric());
        if boundary(before) && boundary(after) {
            return true;
        }
        from = start + 1;
    }
    false
}

fn resolve_object<'a>(scenario: &'a Scenario, text: &str) -> Option<Object<'a>> {
    let lower = text.to_lowercase();
    let mut best: Option<(usize, Object<'a>)> = None;
    let mut consider = |len: usize, obj: Object<'a>| {
        if best.as_ref().is_none_or(|(l, _)| len > *l) {
            best = Some((len, obj));
        }
    };
    for o in &scenario.objectives {
        for name in [&o.label, &o.id] {
            if !name.is_empty() && contains_phrase(&lower, name) {
                consider(name.len(), Object::Objective(&o.id, &o.label));
            }
        }
    }
    for f in &scenario.features {
        if contains_phrase(&lower, &f.name) {
            consider(f.name.len(), Object::Feature(&f.name));
        }
    }
    for u in scenario
        .friendly_units
        .iter()
        .chain(&scenario.enemy_observed_units)
    {
        if contains_phrase(&lower, &u.id) {
            consider(u.id.len(), Object::Unit(&u.id));
        }
    }
    best.map(|(_, o)| o)
}

fn function_for(verb: TaskVerb, text: &str) -> WarfightingFunction {
    let lower = text.to_lowercase();
    match verb {
        TaskVerb::Defend => WarfightingFunction::Protection,
        TaskVerb::Support => {
            if lower.contains("fire") || lower.contains("artillery") {
                WarfightingFunction::Fires
            } else if lower.contains("screen") || lower.contains("recon") {
                WarfightingFunction::Intelligence
            } else if lower.contains("supply")
                || lower.contains("logistic")
                || lower.contains("sustain")
            {
                WarfightingFunction::Sustainment
            } else if lower.contains("command") {
                WarfightingFunction::CommandControl
            } else {
                WarfightingFunction::Protection
            }
        }
        _ => WarfightingFunction::MovementManeuver,
    }
}

fn entry_sources(scenario: &Scenario, map: &GridMap) -> Vec<Coord> {
    scenario
        .entry_zones
        .cells(Side::Friendly)
        .into_iter()
        .filter(|c| map.passable(*c, Role::Infantry))
        .collect()
}

/// Infantry axis from the friendly entry zones to `target` on `map`.
pub fn reference_axis(scenario: &Scenario, map: &GridMap, target: Coord) -> Option<Route> {
    let sources = entry_sources(scenario, map);
    least_cost_route(map, &scenario.weather, Role::Infantry, &sources, target)
}

fn with_blocked(map: &GridMap, cells: &[Coord]) -> GridMap {
    let mut m = map.clone();
    for c in cells {
        if m.in_bounds(*c) {
            m.set_surface(*c, Surface::Impassable);
        }
    }
    m
}

fn compass(dx: i32, dy: i32) -> (&'static str, &'static str) {
    if dx.abs() >= dy.abs() {
        if dx < 0 {
            ("east", "west")
        } else {
            ("west", "east")
        }
    } else if dy > 0 {
        ("north", "south")
    } else {
        ("south", "north")
    }
}

pub fn analyze_mission(
    order: &OpOrder,
    scenario: &Scenario,
    terrain: Option<&TerrainAnalysisMap>,
) -> Result<MissionAnalysis, AnalysisError> {
    let own = scenario.own_unit_name.trim().to_lowercase();
    let mut specified = Vec::new();
    for (i, t) in order.execution.tasks_to_subordinates.iter().enumerate() {
        if t.unit_name.trim().to_lowercase() != own {
            continue;
        }
        let reference = format!("3.c item {}", i + 1);
        let verb = find_verb(&t.task_text).ok_or_else(|| AnalysisError::NoVerb {
            reference: reference.clone(),
            text: t.task_text.clone(),
        })?;
        let (object, text) = match resolve_object(scenario, &t.task_text) {
            Some(Object::Objective(id, label)) => {
                (id.to_string(), format!("{} {label}", verb.title()))
            }
            Some(Object::Feature(name)) => (name.to_string(), format!("{} {name}", verb.title())),
            Some(Object::Unit(id)) => (id.to_string(), format!("{} {id}", verb.title())),
            None => {
                return Err(AnalysisError::UnresolvedObject {
                    reference,
                    text: t.task_text.clone(),
                })
            }
        };
        specified.push(Task {
            verb,
            object,
            function: function_for(verb, &t.task_text),
            source: TaskSource::Specified,
            reference,
            text,
        });
    }
    if specified.is_empty() {
        return Err(AnalysisError::NoSpecifiedTask(
            scenario.own_unit_name.clone(),
        ));
    }

    let purpose = purpose_clause(&order.mission).unwrap_or_default();
    let operation_purpose = capitalize(&purpose);

    let map = &scenario.map;
    let objectives: Vec<_> = specified
        .iter()
        .filter_map(|t| scenario.objective(&t.object))
        .collect();

    let mut implied: Vec<Task> = Vec::new();
    let mut push_implied = |task: Task| {
        if !implied.iter().any(|t| t.text == task.text) {
            implied.push(task);
        }
    };
    let routes: Vec<_> = scenario
        .features
        .iter()
        .filter(|f| f.kind == FeatureKind::Route)
        .collect();
    let mut axes: Vec<Route> = Vec::new();
    for obj in &objectives {
        let Some(axis) = reference_axis(scenario, map, obj.location) else {
            continue;
        };
        for r in &routes {
            let cut: Vec<Coord> = r
                .cells
                .iter()
                .copied()
                .filter(|c| *c != obj.location)
                .collect();
            let blocked = with_blocked(map, &cut);
            if reference_axis(scenario, &blocked, obj.location).is_none() {
                push_implied(Task {
                    verb: TaskVerb::Secure,
                    object: r.name.clone(),
                    function: WarfightingFunction::MovementManeuver,
                    source: TaskSource::Implied,
                    reference: "rule: reachability".into(),
                    text: format!("Secure {} to enable seizure of {}", r.name, obj.label),
                });
            }
        }
        for c in &axis.cells {
            let on_named_route = routes.iter().any(|r| r.cells.contains(c));
            if map.cell(*c).surface == Surface::River && !on_named_route {
                let river = scenario
                    .features
                    .iter()
                    .find(|f| f.kind == FeatureKind::River && f.cells.contains(c))
                    .map_or("river".to_string(), |f| f.name.clone());
                push_implied(Task {
                    verb: TaskVerb::Secure,
                    object: river.clone(),
                    function: WarfightingFunction::MovementManeuver,
                    source: TaskSource::Implied,
                    reference: "rule: river crossing".into(),
                    text: format!(
                        "Secure crossing of {river} at {c} to enable seizure of {}",
                        obj.label
                    ),
                });
            }
        }
        axes.push(axis);
    }
    for e in &scenario.enemy_observed_units {
        if scenario.objectives.iter().any(|o| o.location == e.position) {
            continue;
        }
        let near = axes.iter().any(|a| {
            a.cells
                .iter()
                .any(|c| map.distance(*c, e.position) <= FLANK_DISTANCE)
        });
        if near {
            push_implied(Task {
                verb: TaskVerb::Support,
                object: e.id.clone(),
                function: WarfightingFunction::Protection,
                source: TaskSource::Implied,
                reference: "rule: flank security".into(),
                text: format!("Support: screen against enemy {} at {}", e.id, e.position),
            });
        }
    }

    let ao: Zone = match terrain {
        Some(t) => t.frame.area_of_operations.clone(),
        None => evaluate_battlespace(scenario)
            .map(|f| f.area_of_operations)
            .unwrap_or_default(),
    };
    let mut constraints = Vec::new();
    for f in &scenario.features {
        if f.cells.is_empty() || !f.cells.iter().any(|c| ao.contains(*c)) {
            continue;
        }
        match f.kind {
            FeatureKind::River => {
                let (first, last) = (f.cells[0], f.cells[f.cells.len() - 1]);
                let (source, mouth) = if map.cell(last).elevation > map.cell(first).elevation {
                    (last, first)
                } else {
                    (first, last)
                };
                let (from, to) = compass(mouth.x - source.x, mouth.y - source.y);
                constraints.push(format!("{} flowing from {from} to {to}", f.name));
            }
            FeatureKind::Obstacle => constraints.push(format!("{} restricts movement", f.name)),
            _ => {}
        }
    }
    for sentence in order.execution.coordination.split('.') {
        let s = sentence.trim();
        let lower = format!(" {} ", s.to_lowercase());
        let restrictive = [
            " not ",
            " no ",
            " only ",
            " must ",
            " prohibited",
            " restrict",
            " nlt ",
            " before ",
            " avoid",
        ]
        .iter()
        .any(|k| lower.contains(k));
        if !s.is_empty() && restrictive {
            constraints.push(s.to_string());
        }
    }

    let task_phrases: Vec<String> = specified
        .iter()
        .enumerate()
        .map(|(i, t)| {
            let verb = if i == 0 {
                t.verb.title()
            } else {
                t.verb.as_str().to_string()
            };
            format!("{verb} {}", t.object)
        })
        .collect();
    let mut mission_statement = task_phrases.join(", ");
    if !purpose.is_empty() {
        mission_statement.push_str(" and ");
        mission_statement.push_str(&decapitalize(&purpose));
    }

    Ok(MissionAnalysis {
        specified_tasks: specified,
        operation_purpose,
        implied_tasks: implied,
        constraints,
        end_state: end_state(&order.execution.commanders_intent),
        mission_statement,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn verb_inflections() {
        assert_eq!(TaskVerb::from_word("seizes"), Some(TaskVerb::Seize));
        assert_eq!(TaskVerb::from_word("Securing"), Some(TaskVerb::Secure));
        assert_eq!(TaskVerb::from_word("destroyed"), Some(TaskVerb::Destroy));
        assert_eq!(TaskVerb::from_word("supports"), Some(TaskVerb::Support));
        assert_eq!(TaskVerb::from_word("screen"), None);
    }

    #[test]
    fn purpose_after_in_order_to() {
        assert_eq!(
            purpose_clause("The 1st Infantry Battalion seizes Objective XYZ at 0600 on 20 March 2025 in order to prevent enemy advance.")
                .as_deref(),
            Some("prevent enemy advance")
        );
        assert_eq!(purpose_clause("Hold the line."), None);
    }

    #[test]
    fn end_state_phrase() {
        assert_eq!(
            end_state("Seize the crossing quickly. End state: Enemy neutralized within the operational area. Key task: speed."),
            "Enemy neutralized within the operational area"
        );
    }

    #[test]
    fn compass_directions() {
        assert_eq!(compass(-5, 1), ("east", "west"));
        assert_eq!(compass(4, 0), ("west", "east"));
        assert_eq!(compass(0, 3), ("north", "south"));
    }

    #[test]
    fn phrase_boundaries() {
        assert!(contains_phrase("secure route 1.", "Route 1"));
        assert!(!contains_phrase("secure route 10.", "Route 1"));
    }
}
