use serde::{Deserialize, Serialize};

use super::explain::Explanation;
use super::matrix::{Criterion, DecisionMatrix, Weights};

pub const PERTURBATION: f64 = 0.1;
/// Totals closer than this are reported as a tie.
pub const TIE_EPSILON: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivityEntry {
    pub criterion: Criterion,
    pub perturbation: f64,
    pub weights: Weights,
    /// Recommended CoA under the perturbed weights.
    pub top: String,
    pub flips: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    pub recommended: String,
    pub ranking: Vec<String>,
    pub tie: bool,
    pub weight_sensitive: bool,
    pub sensitivity: Vec<SensitivityEntry>,
    pub explanations: Vec<Explanation>,
}

impl Selection {
    pub fn explanation(&self, id: &str) -> Option<&Explanation> {
        self.explanations.iter().find(|e| e.coa_id == id)
    }
}

/// Each criterion weight moved by ±0.1 (floored at zero) and the vector renormalised.
pub fn sensitivity(matrix: &DecisionMatrix) -> Vec<SensitivityEntry> {
    let top = matrix.ranking.first().cloned().unwrap_or_default();
    let mut out = Vec::new();
    for c in Criterion::ALL {
        for delta in [PERTURBATION, -PERTURBATION] {
            let mut raw = matrix.weights.0;
            raw[c.index()] = (raw[c.index()] + delta).max(0.0);
            let Ok(weights) = Weights::normalized(raw) else {
                continue;
            };
            let alt = matrix.reweighted(weights);
            let new_top = alt.ranking.first().cloned().unwrap_or_default();
            out.push(SensitivityEntry {
                criterion: c,
                perturbation: delta,
                weights,
                flips: new_top != top,
                top: new_top,
            });
        }
    }
    out
}

/// Recommends the top-ranked CoA and completes each explanation with its
/// verdict and the shared sensitivity analysis.
pub fn select_coa(matrix: &DecisionMatrix, explanations: Vec<Explanation>) -> Selection {
    let recommended = matrix.ranking[0].clone();
    let best = matrix.total(&recommended).unwrap_or(0.0);
    let tied: Vec<&String> = matrix
        .ranking
        .iter()
        .skip(1)
        .filter(|id| (matrix.total(id).unwrap_or(f64::NEG_INFINITY) - best).abs() <= TIE_EPSILON)
        .collect();
    let sens = sensitivity(matrix);
    let weight_sensitive = sens.iter().any(|s| s.flips);
    let n = matrix.ranking.len();
    let explanations = matrix
        .ranking
        .iter()
        .enumerate()
        .map(|(rank, id)| {
            let mut e = explanations
                .iter()
                .find(|e| &e.coa_id == id)
                .cloned()
                .unwrap_or_else(|| Explanation {
                    coa_id: id.clone(),
                    verdict: String::new(),
                    per_phase_findings: Vec::new(),
                    assumptions: Vec::new(),
                    sensitivity: Vec::new(),
                    weight_sensitive: false,
                    trace_notes: Vec::new(),
                });
            let total = matrix.total(id).unwrap_or(0.0);
            let mut verdict = if rank == 0 {
                format!("recommended, rank 1 of {n} with weighted total {total:.4}")
            } else {
                format!(
                    "rank {} of {n} with weighted total {total:.4} ({:.4} behind {recommended})",
                    rank + 1,
                    best - total
                )
            };
            if rank == 0 && !tied.is_empty() {
                let names: Vec<&str> = tied.iter().map(|s| s.as_str()).collect();
                verdict.push_str(&format!(
                    "; tied with {} on total, lower id preferred",
                    names.join(", ")
                ));
            }
            if rank == 0 && weight_sensitive {
                let flips: Vec<String> = sens
                    .iter()
                    .filter(|s| s.flips)
                    .map(|s| format!("{} {:+.1}", s.criterion, s.perturbation))
                    .collect();
                verdict.push_str(&format!("; weight-sensitive ({})", flips.join(", ")));
            }
            e.verdict = verdict;
            e.sensitivity = sens.clone();
            e.weight_sensitive = weight_sensitive;
            e
        })
        .collect();
    Selection {
        recommended,
        ranking: matrix.ranking.clone(),
        tie: !tied.is_empty(),
        weight_sensitive,
        sensitivity: sens,
        explanations,
    }
}
