use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::coa::CourseOfAction;
use crate::wargame::WargameStats;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Criterion {
    SuccessProbability,
    FriendlyLossRate,
    EnemyAttritionRate,
    MeanDuration,
    Reliability,
}

impl Criterion {
    pub const ALL: [Criterion; 5] = [
        Criterion::SuccessProbability,
        Criterion::FriendlyLossRate,
        Criterion::EnemyAttritionRate,
        Criterion::MeanDuration,
        Criterion::Reliability,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Criterion::SuccessProbability => "success_probability",
            Criterion::FriendlyLossRate => "friendly_loss_rate",
            Criterion::EnemyAttritionRate => "enemy_attrition_rate",
            Criterion::MeanDuration => "mean_duration",
            Criterion::Reliability => "reliability",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.as_str() == s)
    }

    pub fn maximize(self) -> bool {
        !matches!(self, Criterion::FriendlyLossRate | Criterion::MeanDuration)
    }

    pub fn index(self) -> usize {
        Self::ALL.iter().position(|c| *c == self).expect("listed")
    }

    pub fn value(self, stats: &WargameStats) -> f64 {
        match self {
            Criterion::SuccessProbability => stats.success_probability,
            Criterion::FriendlyLossRate => stats.friendly_loss_rate,
            Criterion::EnemyAttritionRate => stats.enemy_attrition_rate,
            Criterion::MeanDuration => stats.mean_duration,
            Criterion::Reliability => stats.reliability,
        }
    }
}

impl std::fmt::Display for Criterion {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Criterion weights in `Criterion::ALL` order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Weights(pub [f64; 5]);

impl Default for Weights {
    fn default() -> Self {
        Weights([0.4, 0.2, 0.2, 0.1, 0.1])
    }
}

impl Weights {
    pub fn new(w: [f64; 5]) -> Result<Self, EvaluateError> {
        let w = Weights(w);
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<(), EvaluateError> {
        if self.0.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(EvaluateError::InvalidWeights(
                "weights must be finite and non-negative".into(),
            ));
        }
        let sum: f64 = self.0.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(EvaluateError::InvalidWeights(format!(
                "weights sum to {sum}, not 1"
            )));
        }
        Ok(())
    }

    /// Scales non-negative weights to sum 1.
    pub fn normalized(raw: [f64; 5]) -> Result<Self, EvaluateError> {
        if raw.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(EvaluateError::InvalidWeights(
                "weights must be finite and non-negative".into(),
            ));
        }
        let sum: f64 = raw.iter().sum();
        if sum <= 0.0 {
            return Err(EvaluateError::InvalidWeights("weights sum to zero".into()));
        }
        Ok(Weights(raw.map(|w| w / sum)))
    }

    /// Parses "0.4,0.2,0.2,0.1,0.1" or "success_probability=0.5,..." (unnamed
    /// criteria get zero), then normalises.
    pub fn parse(s: &str) -> Result<Self, EvaluateError> {
        let parts: Vec<&str> = s
            .split(',')
            .map(str::trim)
            .filter(|p| !p.is_empty())
            .collect();
        let mut raw = [0.0; 5];
        if parts.iter().all(|p| p.contains('=')) {
            for p in parts {
                let (k, v) = p.split_once('=').expect("checked");
                let c = Criterion::parse(k.trim()).ok_or_else(|| {
                    EvaluateError::InvalidWeights(format!("unknown criterion '{}'", k.trim()))
                })?;
                raw[c.index()] = parse_number(v)?;
            }
        } else {
            if parts.len() != 5 {
                return Err(EvaluateError::InvalidWeights(format!(
                    "expected 5 weights, got {}",
                    parts.len()
                )));
            }
            for (slot, p) in raw.iter_mut().zip(parts) {
                *slot = parse_number(p)?;
            }
        }
        Self::normalized(raw)
    }

    pub fn get(&self, c: Criterion) -> f64 {
        self.0[c.index()]
    }
}

fn parse_number(s: &str) -> Result<f64, EvaluateError> {
    s.trim()
        .parse()
        .map_err(|_| EvaluateError::InvalidWeights(format!("'{}' is not a number", s.trim())))
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvaluateError {
    #[error("no CoA results to compare")]
    Empty,
    #[error("duplicate CoA id '{0}'")]
    DuplicateId(String),
    #[error("invalid weights: {0}")]
    InvalidWeights(String),
    #[error("non-finite value for {coa} / {criterion}")]
    NonFinite { coa: String, criterion: Criterion },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionMatrix {
    pub coas: Vec<String>,
    pub criteria: Vec<Criterion>,
    /// `raw[i][j]`: CoA `i`, criterion `j`.
    pub raw: Vec<[f64; 5]>,
    pub normalized: Vec<[f64; 5]>,
    pub weights: Weights,
    pub totals: Vec<f64>,
    /// CoA ids, best first.
    pub ranking: Vec<String>,
}

impl DecisionMatrix {
    pub fn position(&self, id: &str) -> Option<usize> {
        self.coas.iter().position(|c| c == id)
    }

    pub fn total(&self, id: &str) -> Option<f64> {
        self.position(id).map(|i| self.totals[i])
    }

    pub fn rank_of(&self, id: &str) -> Option<usize> {
        self.ranking.iter().position(|c| c == id)
    }

    /// The same raw values scored under different weights.
    pub fn reweighted(&self, weights: Weights) -> DecisionMatrix {
        let (totals, ranking) = score(&self.coas, &self.normalized, &weights);
        DecisionMatrix {
            weights,
            totals,
            ranking,
            ..self.clone()
        }
    }

    /// Markdown-style table: one row per CoA in ranking order.
    pub fn to_table(&self) -> String {
        let mut out = String::from("| rank | coa |");
        for c in &self.criteria {
            out.push_str(&format!(" {c} |"));
        }
        out.push_str(" total |\n|---|---|");
        for _ in &self.criteria {
            out.push_str("---|");
        }
        out.push_str("---|\n");
        for (rank, id) in self.ranking.iter().enumerate() {
            let i = self.position(id).expect("ranked ids are present");
            out.push_str(&format!("| {} | {id} |", rank + 1));
            for j in 0..self.criteria.len() {
                out.push_str(&format!(
                    " {:.3} ({:.3}) |",
                    self.raw[i][j], self.normalized[i][j]
                ));
            }
            out.push_str(&format!(" {:.4} |\n", self.totals[i]));
        }
        out
    }
}

fn score(coas: &[String], normalized: &[[f64; 5]], weights: &Weights) -> (Vec<f64>, Vec<String>) {
    let totals: Vec<f64> = normalized
        .iter()
        .map(|row| row.iter().zip(weights.0.iter()).map(|(n, w)| n * w).sum())
        .collect();
    let mut order: Vec<usize> = (0..coas.len()).collect();
    order.sort_by(|&a, &b| {
        totals[b]
            .total_cmp(&totals[a])
            .then_with(|| coas[a].cmp(&coas[b]))
    });
    (totals, order.into_iter().map(|i| coas[i].clone()).collect())
}

/// Builds the matrix from raw criterion values per CoA id.
pub fn matrix_from_raw(
    rows: &[(String, [f64; 5])],
    weights: Weights,
) -> Result<DecisionMatrix, EvaluateError> {
    if rows.is_empty() {
        return Err(EvaluateError::Empty);
    }
    weights.validate()?;
    let mut seen = BTreeSet::new();
    for (id, raw) in rows {
        if !seen.insert(id.as_str()) {
            return Err(EvaluateError::DuplicateId(id.clone()));
        }
        if let Some(j) = raw.iter().position(|v| !v.is_finite()) {
            return Err(EvaluateError::NonFinite {
                coa: id.clone(),
                criterion: Criterion::ALL[j],
            });
        }
    }
    let coas: Vec<String> = rows.iter().map(|(id, _)| id.clone()).collect();
    let raw: Vec<[f64; 5]> = rows.iter().map(|(_, r)| *r).collect();
    let mut normalized = vec![[0.0; 5]; raw.len()];
    for (j, c) in Criterion::ALL.iter().enumerate() {
        let lo = raw.iter().map(|r| r[j]).fold(f64::INFINITY, f64::min);
        let hi = raw.iter().map(|r| r[j]).fold(f64::NEG_INFINITY, f64::max);
        for (i, r) in raw.iter().enumerate() {
            let n = if hi > lo {
                (r[j] - lo) / (hi - lo)
            } else {
                1.0
            };
            normalized[i][j] = if hi > lo && !c.maximize() { 1.0 - n } else { n };
        }
    }
    let (totals, ranking) = score(&coas, &normalized, &weights);
    Ok(DecisionMatrix {
        coas,
        criteria: Criterion::ALL.to_vec(),
        raw,
        normalized,
        weights,
        totals,
        ranking,
    })
}

pub fn build_decision_matrix(
    results: &[(&CourseOfAction, &WargameStats)],
    weights: Weights,
) -> Result<DecisionMatrix, EvaluateError> {
    let rows: Vec<(String, [f64; 5])> = results
        .iter()
        .map(|(coa, stats)| (coa.id.clone(), Criterion::ALL.map(|c| c.value(stats))))
        .collect();
    matrix_from_raw(&rows, weights)
}
