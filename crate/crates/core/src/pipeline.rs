//! End-to-end planning: documents in, ranked and explained CoAs out.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::coa::{generate_friendly_coas, CoaConfig, CourseOfAction};
use crate::evaluate::{
    build_decision_matrix, explain, select_coa, DecisionMatrix, Explanation, Weights,
};
use crate::ipb::frame::{evaluate_battlespace, BattlespaceFrame};
use crate::ipb::terrain::{analyze_battlespace, TerrainAnalysisMap};
use crate::ipb::{
    assess_enemy_capability, generate_enemy_coas, EnemyArchetype, EnemyCoA, EnemySituationMap,
    Observation,
};
use crate::opord::{analyze_mission, parse_opord, MissionAnalysis, OpOrder, Task};
use crate::scenario::{load_scenario, Scenario};
use crate::util::digest;
use crate::wargame::{monte_carlo_evaluate_with, sample_traces, McConfig, WargameStats};

pub const EXPLANATION_TRACES: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    LoadScenario,
    ParseOrder,
    EvaluateBattlespace,
    AnalyzeBattlespace,
    AnalyzeMission,
    AssessEnemy,
    EnemyCoas,
    FriendlyCoas,
    Wargame,
    Decision,
}

impl Stage {
    pub fn as_str(self) -> &'static str {
        match self {
            Stage::LoadScenario => "load_scenario",
            Stage::ParseOrder => "parse_opord",
            Stage::EvaluateBattlespace => "evaluate_battlespace",
            Stage::AnalyzeBattlespace => "analyze_battlespace",
            Stage::AnalyzeMission => "analyze_mission",
            Stage::AssessEnemy => "assess_enemy_capability",
            Stage::EnemyCoas => "generate_enemy_coas",
            Stage::FriendlyCoas => "generate_friendly_coas",
            Stage::Wargame => "monte_carlo_evaluate",
            Stage::Decision => "decision",
        }
    }

    /// Input documents were malformed, as opposed to planning failing on valid input.
    pub fn is_validation(self) -> bool {
        matches!(self, Stage::LoadScenario | Stage::ParseOrder)
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, thiserror::Error)]
#[error("{stage}: {message}")]
pub struct PipelineError {
    pub stage: Stage,
    pub message: String,
}

impl PipelineError {
    fn at(stage: Stage, e: impl fmt::Display) -> Self {
        Self {
            stage,
            message: e.to_string(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlanningConfig {
    /// Friendly CoAs to develop.
    pub k: usize,
    /// Enemy CoAs to develop.
    pub k_enemy: usize,
    pub replications: usize,
    pub seed: u64,
    pub weights: Weights,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
}

impl Default for PlanningConfig {
    fn default() -> Self {
        Self {
            k: 3,
            k_enemy: 3,
            replications: 200,
            seed: 42,
            weights: Weights::default(),
            threads: None,
        }
    }
}

/// Everything upstream of enemy CoA generation. Observations only change the ESM.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prepared {
    pub scenario: Scenario,
    pub order: OpOrder,
    pub frame: BattlespaceFrame,
    pub terrain: TerrainAnalysisMap,
    pub mission: MissionAnalysis,
    pub observations: Vec<Observation>,
    pub esm: EnemySituationMap,
    pub input_digest: String,
    pub diagnostics: Vec<String>,
}

pub fn prepare(scenario_src: &str, opord_src: &str) -> Result<Prepared, PipelineError> {
    let scenario =
        load_scenario(scenario_src).map_err(|e| PipelineError::at(Stage::LoadScenario, e))?;
    let order = parse_opord(opord_src).map_err(|e| PipelineError::at(Stage::ParseOrder, e))?;
    let input_digest = digest(&(scenario_src, opord_src));
    prepare_parsed(scenario, order, input_digest)
}

pub fn prepare_parsed(
    scenario: Scenario,
    order: OpOrder,
    input_digest: String,
) -> Result<Prepared, PipelineError> {
    let frame = evaluate_battlespace(&scenario)
        .map_err(|e| PipelineError::at(Stage::EvaluateBattlespace, e))?;
    let terrain = analyze_battlespace(&scenario, &frame);
    let mission = analyze_mission(&order, &scenario, Some(&terrain))
        .map_err(|e| PipelineError::at(Stage::AnalyzeMission, e))?;
    let mut diagnostics = terrain.diagnostics.clone();
    let mut observations = Vec::new();
    for u in &scenario.enemy_observed_units {
        if frame.area_of_interest.contains(u.position) {
            observations.push(Observation::from_known_unit(u));
        } else {
            diagnostics.push(format!(
                "enemy unit {} at {} lies outside the area of interest and is ignored",
                u.id, u.position
            ));
        }
    }
    let esm = assess_enemy_capability(
        &scenario,
        &terrain,
        &scenario.enemy_template,
        &observations,
        None,
    )
    .map_err(|e| PipelineError::at(Stage::AssessEnemy, e))?;
    Ok(Prepared {
        scenario,
        order,
        frame,
        terrain,
        mission,
        observations,
        esm,
        input_digest,
        diagnostics,
    })
}

impl Prepared {
    /// Re-assesses the enemy with one more observation. The prepared state is
    /// unchanged on error.
    pub fn inject(&mut self, obs: Observation) -> Result<u64, PipelineError> {
        let mut observations = self.observations.clone();
        observations.push(obs);
        let esm = assess_enemy_capability(
            &self.scenario,
            &self.terrain,
            &self.scenario.enemy_template,
            &observations,
            Some(&self.esm),
        )
        .map_err(|e| PipelineError::at(Stage::AssessEnemy, e))?;
        self.observations = observations;
        self.esm = esm;
        Ok(self.esm.version)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CacheKey {
    pub esm_version: u64,
    pub coa_id: String,
    pub replications: usize,
    pub seed: u64,
    pub enemy: EnemyArchetype,
}

/// Wargame statistics reusable across re-plans of one session.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct StatsCache {
    entries: BTreeMap<CacheKey, WargameStats>,
    pub hits: usize,
    pub misses: usize,
}

impl StatsCache {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    fn get_or_run(
        &mut self,
        key: CacheKey,
        run: impl FnOnce() -> Result<WargameStats, PipelineError>,
    ) -> Result<WargameStats, PipelineError> {
        if let Some(s) = self.entries.get(&key) {
            self.hits += 1;
            return Ok(s.clone());
        }
        self.misses += 1;
        let s = run()?;
        self.entries.insert(key, s.clone());
        Ok(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnemyCoaSummary {
    pub id: String,
    pub archetype: EnemyArchetype,
    pub likelihood: f64,
    pub threat: f64,
    pub summary: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedCoa {
    pub rank: usize,
    pub total: f64,
    pub coa: CourseOfAction,
    pub stats: WargameStats,
    /// Statistics against the second most likely enemy CoA.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub robustness: Option<WargameStats>,
    pub explanation: Explanation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanningReport {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub session_id: Option<String>,
    pub scenario: String,
    pub input_digest: String,
    pub esm_version: u64,
    pub config: PlanningConfig,
    pub mission_statement: String,
    pub specified_tasks: Vec<Task>,
    pub operation_purpose: String,
    pub implied_tasks: Vec<Task>,
    pub constraints: Vec<String>,
    pub end_state: String,
    pub enemy_coas: Vec<EnemyCoaSummary>,
    pub enemy_coa_used: String,
    pub coas: Vec<RankedCoa>,
    pub matrix: DecisionMatrix,
    pub recommended: String,
    pub tie: bool,
    pub weight_sensitive: bool,
    pub diagnostics: Vec<String>,
}

impl PlanningReport {
    pub fn coa(&self, id: &str) -> Option<&RankedCoa> {
        self.coas.iter().find(|c| c.coa.id == id)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report is always serialisable") + "\n"
    }

    pub fn from_json(s: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(s)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("PLANNING REPORT: {}\n", self.scenario));
        if let Some(id) = &self.session_id {
            out.push_str(&format!("session {id}\n"));
        }
        out.push_str(&format!(
            "esm version {}; k {}; replications {}; seed {}; weights {}\n\n",
            self.esm_version,
            self.config.k,
            self.config.replications,
            self.config.seed,
            self.config
                .weights
                .0
                .iter()
                .map(|w| format!("{w:.3}"))
                .collect::<Vec<_>>()
                .join(",")
        ));
        out.push_str(&format!("MISSION\n{}\n", self.mission_statement));
        for t in &self.specified_tasks {
            out.push_str(&format!("  specified: {} [{}]\n", t.text, t.reference));
        }
        out.push_str(&format!("  purpose: {}\n", self.operation_purpose));
        for t in &self.implied_tasks {
            out.push_str(&format!("  implied: {} [{}]\n", t.text, t.reference));
        }
        for c in &self.constraints {
            out.push_str(&format!("  constraint: {c}\n"));
        }
        out.push_str(&format!("  end state: {}\n", self.end_state));
        out.push_str("\nENEMY COURSES OF ACTION\n");
        for e in &self.enemy_coas {
            out.push_str(&format!(
                "  {} likelihood {:.3} threat {:.3}{}\n",
                e.id,
                e.likelihood,
                e.threat,
                if e.id == self.enemy_coa_used {
                    " (used for ranking)"
                } else {
                    ""
                }
            ));
        }
        out.push_str("\nDECISION MATRIX\n");
        out.push_str(&self.matrix.to_table());
        out.push_str(&format!("\nRECOMMENDED: {}\n", self.recommended));
        for c in &self.coas {
            out.push_str(&format!("\n{}. {} ({})\n", c.rank, c.coa.id, c.coa.summary));
            out.push_str(&format!(
                "  success {:.3}, loss {:.3}, attrition {:.3}, duration {:.1}, reliability {:.3}\n",
                c.stats.success_probability,
                c.stats.friendly_loss_rate,
                c.stats.enemy_attrition_rate,
                c.stats.mean_duration,
                c.stats.reliability
            ));
            if let Some(r) = &c.robustness {
                out.push_str(&format!(
                    "  against second enemy CoA: success {:.3}, loss {:.3}\n",
                    r.success_probability, r.friendly_loss_rate
                ));
            }
            for line in c.explanation.to_text().lines() {
                out.push_str(&format!("  {line}\n"));
            }
        }
        if !self.diagnostics.is_empty() {
            out.push_str("\nDIAGNOSTICS\n");
            for d in &self.diagnostics {
                out.push_str(&format!("  {d}\n"));
            }
        }
        out
    }
}

fn mc_config(config: &PlanningConfig) -> McConfig {
    McConfig {
        threads: config.threads,
        ..McConfig::new(config.replications, config.seed)
    }
}

/// Wargames `coa` against `enemy` through the cache.
pub fn evaluate_cached(
    prepared: &Prepared,
    coa: &CourseOfAction,
    enemy: &EnemyCoA,
    config: &PlanningConfig,
    cache: &mut StatsCache,
) -> Result<WargameStats, PipelineError> {
    let key = CacheKey {
        esm_version: prepared.esm.version,
        coa_id: coa.id.clone(),
        replications: config.replications,
        seed: config.seed,
        enemy: enemy.archetype,
    };
    cache.get_or_run(key, || {
        monte_carlo_evaluate_with(&prepared.scenario, coa, enemy, &mc_config(config))
            .map_err(|e| PipelineError::at(Stage::Wargame, e))
    })
}

/// Enemy CoAs onward: everything downstream of the current ESM.
pub fn plan(
    prepared: &Prepared,
    config: &PlanningConfig,
    cache: &mut StatsCache,
) -> Result<PlanningReport, PipelineError> {
    config
        .weights
        .validate()
        .map_err(|e| PipelineError::at(Stage::Decision, e))?;
    let scenario = &prepared.scenario;
    let mut diagnostics = prepared.diagnostics.clone();
    diagnostics.extend(prepared.esm.diagnostics.iter().cloned());

    let enemy = generate_enemy_coas(
        &prepared.esm,
        &prepared.terrain,
        scenario,
        config.k_enemy.max(1),
    )
    .map_err(|e| PipelineError::at(Stage::EnemyCoas, e))?;
    diagnostics.extend(enemy.diagnostics.iter().cloned());
    let most_likely = enemy
        .coas
        .first()
        .ok_or_else(|| PipelineError::at(Stage::EnemyCoas, "no enemy CoA"))?;
    let second = enemy.coas.get(1);

    let coa_config = CoaConfig {
        k: config.k,
        ..CoaConfig::default()
    };
    let friendly = generate_friendly_coas(
        &prepared.mission,
        &prepared.terrain,
        &prepared.esm,
        scenario,
        &coa_config,
    )
    .map_err(|e| PipelineError::at(Stage::FriendlyCoas, e))?;
    if friendly.len() < config.k {
        diagnostics.push(format!(
            "only {} of {} requested CoAs are feasible",
            friendly.len(),
            config.k
        ));
    }

    let mut stats = Vec::new();
    let mut robustness = Vec::new();
    for coa in &friendly {
        stats.push(evaluate_cached(prepared, coa, most_likely, config, cache)?);
        robustness.push(match second {
            Some(e) => Some(evaluate_cached(prepared, coa, e, config, cache)?),
            None => None,
        });
    }

    let rows: Vec<(&CourseOfAction, &WargameStats)> = friendly.iter().zip(stats.iter()).collect();
    let matrix = build_decision_matrix(&rows, config.weights)
        .map_err(|e| PipelineError::at(Stage::Decision, e))?;
    let mut explanations = Vec::new();
    for (coa, s) in friendly.iter().zip(&stats) {
        let traces = sample_traces(
            scenario,
            coa,
            most_likely,
            &mc_config(config),
            EXPLANATION_TRACES,
        )
        .map_err(|e| PipelineError::at(Stage::Wargame, e))?;
        explanations.push(explain(coa, s, &traces, &prepared.esm, &scenario.map));
    }
    let selection = select_coa(&matrix, explanations);

    let mut coas = Vec::new();
    for (rank, id) in selection.ranking.iter().enumerate() {
        let i = friendly
            .iter()
            .position(|c| &c.id == id)
            .expect("ranked ids come from the CoA set");
        coas.push(RankedCoa {
            rank: rank + 1,
            total: matrix.totals[matrix.position(id).expect("present")],
            coa: friendly[i].clone(),
            stats: stats[i].clone(),
            robustness: robustness[i].clone(),
            explanation: selection
                .explanation(id)
                .cloned()
                .expect("one explanation per CoA"),
        });
    }

    Ok(PlanningReport {
        session_id: None,
        scenario: scenario.name.clone(),
        input_digest: prepared.input_digest.clone(),
        esm_version: prepared.esm.version,
        config: *config,
        mission_statement: prepared.mission.mission_statement.clone(),
        specified_tasks: prepared.mission.specified_tasks.clone(),
        operation_purpose: prepared.mission.operation_purpose.clone(),
        implied_tasks: prepared.mission.implied_tasks.clone(),
        constraints: prepared.mission.constraints.clone(),
        end_state: prepared.mission.end_state.clone(),
        enemy_coas: enemy
            .coas
            .iter()
            .map(|e| EnemyCoaSummary {
                id: e.coa.id.clone(),
                archetype: e.archetype,
                likelihood: e.likelihood,
                threat: e.threat,
                summary: e.coa.summary.clone(),
            })
            .collect(),
        enemy_coa_used: most_likely.coa.id.clone(),
        coas,
        matrix,
        recommended: selection.recommended,
        tie: selection.tie,
        weight_sensitive: selection.weight_sensitive,
        diagnostics,
    })
}

pub fn run_pipeline(
    scenario_src: &str,
    opord_src: &str,
    config: &PlanningConfig,
) -> Result<PlanningReport, PipelineError> {
    let prepared = prepare(scenario_src, opord_src)?;
    plan(&prepared, config, &mut StatsCache::default())
}
