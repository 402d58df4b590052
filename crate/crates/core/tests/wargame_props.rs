mod common;

use std::collections::BTreeMap;

use coaforge_core::grid::Surface;
use coaforge_core::scenario::{Posture, Zone};
use coaforge_core::wargame::engine::replay_positions;
use coaforge_core::wargame::{
    monte_carlo_evaluate_with, simulate_with, trace_to_jsonl, EventKind, McConfig, SimConfig,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::{duel, random_battle, square_law, Duel};

fn symmetric() -> Duel {
    Duel {
        friendly_cp: 10.0,
        enemy_cp: 10.0,
        enemy_posture: Posture::Attack,
        enemy_surface: Surface::Open,
        visibility: 10_000.0,
        time_limit: 200,
    }
}

#[test]
fn traces_repeat_exactly() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (s, coa, enemy) = random_battle(&mut rng);
    let first = simulate_with(&s, &coa, &enemy, 99, SimConfig::default()).expect("valid battle");
    let text = trace_to_jsonl(first.trace());
    for _ in 0..20 {
        let again =
            simulate_with(&s, &coa, &enemy, 99, SimConfig::default()).expect("valid battle");
        assert_eq!(again, first);
        assert_eq!(trace_to_jsonl(again.trace()), text);
    }
}

#[test]
fn statistics_do_not_depend_on_thread_count() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let (s, coa, enemy) = random_battle(&mut rng);
    let stats: Vec<_> = [1, 4, 8]
        .into_iter()
        .map(|t| {
            let mut c = McConfig::new(200, 42);
            c.threads = Some(t);
            monte_carlo_evaluate_with(&s, &coa, &enemy, &c).expect("valid battle")
        })
        .collect();
    assert_eq!(stats[0], stats[1]);
    assert_eq!(stats[0], stats[2]);
}

#[test]
fn mirrored_duel_is_a_coin_flip() {
    let (s, coa, enemy) = duel(symmetric());
    let stats =
        monte_carlo_evaluate_with(&s, &coa, &enemy, &McConfig::new(1000, 42)).expect("valid duel");
    assert!(
        (stats.success_probability - 0.5).abs() <= 0.05,
        "p = {}",
        stats.success_probability
    );
}

#[test]
fn noiseless_mirrored_duel_is_a_draw() {
    let (s, coa, enemy) = duel(symmetric());
    let sim = SimConfig {
        noise_sigma: 0.0,
        ..SimConfig::default()
    };
    let r = simulate_with(&s, &coa, &enemy, 1, sim).expect("valid duel");
    assert!(!r.success);
    assert_eq!(r.friendly_end_cp, r.enemy_end_cp);
}

/// Per-tick `(friendly, enemy)` totals rebuilt from engagement events.
fn trajectory(d: &Duel, k: f64) -> Vec<(f64, f64)> {
    let (s, coa, enemy) = duel(*d);
    let sim = SimConfig {
        k,
        noise_sigma: 0.0,
    };
    let r = simulate_with(&s, &coa, &enemy, 0, sim).expect("valid duel");
    let (mut f, mut e) = (d.friendly_cp, d.enemy_cp);
    let mut out = vec![(f, e)];
    for ev in r.trace().iter().filter(|ev| ev.kind == EventKind::Engage) {
        for (actor, delta) in ev.actors.iter().zip(&ev.detail) {
            if actor == "F" {
                f += delta;
            } else {
                e += delta;
            }
        }
        out.push((f, e));
    }
    out
}

#[test]
fn prepared_defender_matches_hand_recurrence() {
    let d = Duel {
        friendly_cp: 20.0,
        enemy_cp: 10.0,
        enemy_posture: Posture::DefendPrepared,
        enemy_surface: Surface::Open,
        visibility: 10_000.0,
        time_limit: 200,
    };
    let got = trajectory(&d, 0.05);
    // First tick by hand: 20 - 0.05*10*1.5 and 10 - 0.05*20.
    assert!((got[1].0 - 19.25).abs() < 1e-12);
    assert!((got[1].1 - 9.0).abs() < 1e-12);
    let want = square_law(&d, 1.0, 0.05, got.len() - 1);
    for (t, (g, w)) in got.iter().zip(&want).enumerate() {
        assert!(
            (g.0 - w.0).abs() < 1e-9 && (g.1 - w.1).abs() < 1e-9,
            "tick {t}: {g:?} vs {w:?}"
        );
    }
    // The enemy breaks first.
    let last = got.last().expect("non-empty");
    assert!(last.1 < 0.1 * d.enemy_cp);
    assert!(last.0 >= 0.1 * d.friendly_cp);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(20))]

    #[test]
    fn noiseless_duels_follow_the_square_law(
        fcp in 2.0..30.0f64,
        ecp in 2.0..30.0f64,
        posture in prop::sample::select(vec![Posture::DefendPrepared, Posture::DefendHasty, Posture::Attack]),
        surface in prop::sample::select(vec![Surface::Open, Surface::Forest, Surface::Urban]),
        visibility in 1000.0..8000.0f64,
        k in 0.02..0.1f64,
    ) {
        let d = Duel { friendly_cp: fcp, enemy_cp: ecp, enemy_posture: posture, enemy_surface: surface, visibility, time_limit: 300 };
        let terrain = if surface == Surface::Open { 1.0 } else { 1.3 };
        let got = trajectory(&d, k);
        prop_assert!(got.len() > 1);
        let want = square_law(&d, terrain, k, got.len() - 1);
        for (g, w) in got.iter().zip(&want) {
            prop_assert!((g.0 - w.0).abs() < 1e-9 && (g.1 - w.1).abs() < 1e-9, "{:?} vs {:?}", g, w);
        }
    }

    #[test]
    fn combat_power_never_rises_and_units_stay_in_bounds(seed in any::<u64>(), sim_seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (s, coa, enemy) = random_battle(&mut rng);
        let r = simulate_with(&s, &coa, &enemy, sim_seed, SimConfig::default()).expect("valid battle");
        let start: Vec<_> = s.friendly_units.iter().chain(&enemy.forces).cloned().collect();
        let mut cp: BTreeMap<String, f64> = start.iter().map(|u| (u.id.clone(), u.combat_power)).collect();
        for ev in r.trace().iter().filter(|ev| ev.kind == EventKind::Engage) {
            for (actor, delta) in ev.actors.iter().zip(&ev.detail) {
                prop_assert!(*delta <= 0.0);
                let v = cp.get_mut(actor).expect("known actor");
                *v += delta;
                prop_assert!(*v >= -1e-12);
            }
        }
        for u in &r.state.units {
            prop_assert!(u.combat_power >= 0.0);
            prop_assert!(u.combat_power <= start.iter().find(|s| s.id == u.id).expect("known").combat_power);
        }
        let zones: BTreeMap<&String, &Zone> = coa.boundaries.iter().chain(&enemy.coa.boundaries).collect();
        for (id, path) in replay_positions(&start, r.trace()) {
            if let Some(z) = zones.get(&id) {
                for (_, c) in path.iter().skip(1) {
                    prop_assert!(z.contains(*c), "{} left its zone at {}", id, c);
                }
            }
        }
    }
}
