use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coa::CourseOfAction;
use crate::ipb::ecoa::EnemyCoA;
use crate::scenario::Scenario;
use crate::wargame::engine::{Battle, SimConfig, SimResult};
use crate::wargame::WargameError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseStat {
    pub phase: usize,
    pub friendly_cp_delta: f64,
    pub enemy_cp_delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WargameStats {
    pub replications: usize,
    pub success_probability: f64,
    pub friendly_loss_rate: f64,
    pub enemy_attrition_rate: f64,
    pub mean_duration: f64,
    pub reliability: f64,
    pub per_phase: Vec<PhaseStat>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McConfig {
    pub replications: usize,
    pub seed: u64,
    /// Worker threads; `None` uses the global pool.
    pub threads: Option<usize>,
    pub sim: SimConfig,
}

impl McConfig {
    pub fn new(replications: usize, seed: u64) -> Self {
        Self {
            replications,
            seed,
            threads: None,
            sim: SimConfig::default(),
        }
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of replication `index`: `splitmix64(seed ^ splitmix64(index))`.
pub fn replication_seed(seed: u64, index: u64) -> u64 {
    splitmix64(seed ^ splitmix64(index))
}

/// 95% Wilson score interval half-width for `successes` out of `n`.
pub fn wilson_half_width(successes: usize, n: usize) -> f64 {
    let z = 1.959_963_984_540_054_f64;
    let n = n as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    z / (1.0 + z2 / n) * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt()
}

struct Summary {
    success: bool,
    loss: f64,
    attrition: f64,
    duration: u32,
    phases: Vec<(usize, f64, f64)>,
}

fn summarize(r: &SimResult) -> Summary {
    let frac = |start: f64, end: f64| {
        if start > 0.0 {
            ((start - end) / start).clamp(0.0, 1.0)
        } else {
            0.0
        }
    };
    Summary {
        success: r.success,
        loss: frac(r.friendly_start_cp, r.friendly_end_cp),
        attrition: frac(r.enemy_start_cp, r.enemy_end_cp),
        duration: r.duration,
        phases: r.phase_deltas(),
    }
}

pub fn monte_carlo_evaluate(
    scenario: &Scenario,
    friendly: &CourseOfAction,
    enemy: &EnemyCoA,
    n: usize,
    seed: u64,
) -> Result<WargameStats, WargameError> {
    monte_carlo_evaluate_with(scenario, friendly, enemy, &McConfig::new(n, seed))
}

/// Replications run in parallel; results are reduced in index order so the
/// statistics do not depend on the thread count.
pub fn monte_carlo_evaluate_with(
    scenario: &Scenario,
    friendly: &CourseOfAction,
    enemy: &EnemyCoA,
    config: &McConfig,
) -> Result<WargameStats, WargameError> {
    let n = config.replications;
    if n == 0 {
        return Err(WargameError::NoReplications);
    }
    let battle = Battle::new(scenario, friendly, enemy, config.sim)?;
    let run = || -> Vec<Summary> {
        (0..n as u64)
            .into_par_iter()
            .map(|i| summarize(&battle.run(replication_seed(config.seed, i))))
            .collect()
    };
    let summaries = match config.threads {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t.max(1))
            .build()
            .map_err(|e| WargameError::ThreadPool(e.to_string()))?
            .install(run),
        None => run(),
    };

    let nf = n as f64;
    let successes = summaries.iter().filter(|s| s.success).count();
    let phase_count = friendly.phases.len().max(1);
    let mut per_phase: Vec<PhaseStat> = (0..phase_count)
        .map(|phase| PhaseStat {
            phase,
            friendly_cp_delta: 0.0,
            enemy_cp_delta: 0.0,
        })
        .collect();
    let mut loss = 0.0;
    let mut attrition = 0.0;
    let mut duration = 0.0;
    for s in &summaries {
        loss += s.loss;
        attrition += s.attrition;
        duration += s.duration as f64;
        for (phase, fd, ed) in &s.phases {
            if let Some(p) = per_phase.get_mut(*phase) {
                p.friendly_cp_delta += fd;
                p.enemy_cp_delta += ed;
            }
        }
    }
    for p in &mut per_phase {
        p.friendly_cp_delta /= nf;
        p.enemy_cp_delta /= nf;
    }
    Ok(WargameStats {
        replications: n,
        success_probability: successes as f64 / nf,
        friendly_loss_rate: loss / nf,
        enemy_attrition_rate: attrition / nf,
        mean_duration: duration / nf,
        reliability: (1.0 - wilson_half_width(successes, n)).clamp(0.0, 1.0),
        per_phase,
    })
}

/// Full results of the first `count` replications, for explanation and export.
pub fn sample_traces(
    scenario: &Scenario,
    friendly: &CourseOfAction,
    enemy: &EnemyCoA,
    config: &McConfig,
    count: usize,
) -> Result<Vec<SimResult>, WargameError> {
    let battle = Battle::new(scenario, friendly, enemy, config.sim)?;
    Ok((0..count.min(config.replications) as u64)
        .map(|i| battle.run(replication_seed(config.seed, i)))
        .collect())
}
