//! Aggregate Lanchester square-law attrition between combat power indices.

use thiserror::Error;

/// Attrition coefficient per tick.
pub const K: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EngagementError {
    #[error("combat power must be non-negative (attacker {0}, defender {1})")]
    NegativeCp(f64, f64),
    #[error("modifiers and noise must be positive")]
    NonPositiveModifier,
}

/// Returns `(attacker_delta, defender_delta)`, both non-positive.
///
/// The defender's fire is boosted by its terrain and posture; visibility scales
/// both sides. Losses are clamped so neither side drops below zero.
pub fn resolve_engagement(
    attacker_cp: f64,
    defender_cp: f64,
    terrain_mod: f64,
    posture_mod: f64,
    visibility_mod: f64,
    noise: (f64, f64),
) -> Result<(f64, f64), EngagementError> {
    resolve_engagement_k(
        K,
        attacker_cp,
        defender_cp,
        terrain_mod,
        posture_mod,
        visibility_mod,
        noise,
    )
}

pub fn resolve_engagement_k(
    k: f64,
    attacker_cp: f64,
    defender_cp: f64,
    terrain_mod: f64,
    posture_mod: f64,
    visibility_mod: f64,
    noise: (f64, f64),
) -> Result<(f64, f64), EngagementError> {
    if !(attacker_cp >= 0.0 && defender_cp >= 0.0) {
        return Err(EngagementError::NegativeCp(attacker_cp, defender_cp));
    }
    if !(terrain_mod > 0.0
        && posture_mod > 0.0
        && visibility_mod > 0.0
        && noise.0 > 0.0
        && noise.1 > 0.0)
    {
        return Err(EngagementError::NonPositiveModifier);
    }
    let defender_loss = k * attacker_cp * visibility_mod * noise.0;
    let attacker_loss = k * defender_cp * terrain_mod * posture_mod * visibility_mod * noise.1;
    Ok((
        -attacker_loss.min(attacker_cp),
        -defender_loss.min(defender_cp),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_attacker_inflicts_nothing() {
        let (_, d) = resolve_engagement(0.0, 10.0, 1.0, 1.0, 1.0, (1.0, 1.0)).unwrap();
        assert_eq!(d, 0.0);
    }

    #[test]
    fn even_fight() {
        let (a, d) = resolve_engagement(10.0, 10.0, 1.0, 1.0, 1.0, (1.0, 1.0)).unwrap();
        assert!((a + 0.5).abs() < 1e-12 && (d + 0.5).abs() < 1e-12);
    }

    #[test]
    fn prepared_defence_hurts_more() {
        let (prepared, _) = resolve_engagement(10.0, 10.0, 1.0, 1.5, 1.0, (1.0, 1.0)).unwrap();
        let (hasty, _) = resolve_engagement(10.0, 10.0, 1.0, 1.2, 1.0, (1.0, 1.0)).unwrap();
        assert!(prepared < hasty);
    }

    #[test]
    fn clamps_at_zero() {
        let (a, d) = resolve_engagement(1000.0, 1.0, 1.0, 1.0, 1.0, (1.0, 1.0)).unwrap();
        assert_eq!(d, -1.0);
        assert!(a < 0.0);
    }

    #[test]
    fn negative_cp_rejected() {
        assert!(resolve_engagement(-1.0, 1.0, 1.0, 1.0, 1.0, (1.0, 1.0)).is_err());
    }
}
