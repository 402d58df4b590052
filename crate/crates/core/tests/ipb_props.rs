mod common;

use coaforge_core::grid::{Coord, Role};
use coaforge_core::ipb::ecoa::likelihoods;
use coaforge_core::ipb::enemy::{fuse_observations, noisy_or, Observation, Provenance, Sensor};
use coaforge_core::pipeline::prepare;
use proptest::prelude::*;

use common::read_fixture;

fn obs(x: i32, y: i32, role: Role, confidence: f64) -> Observation {
    Observation {
        time: 1,
        location: Coord::new(x, y),
        role_guess: role,
        size_estimate: 4.0,
        confidence,
        sensor: Sensor::Uav,
        source_id: None,
    }
}

fn battalion() -> coaforge_core::pipeline::Prepared {
    prepare(
        &read_fixture("fig5_battalion.scn"),
        &read_fixture("fig5.opord"),
    )
    .expect("fixture prepares")
}

#[test]
fn observing_an_inferred_unit_replaces_it() {
    let mut p = battalion();
    let (observed, inferred) = (p.esm.observed_count(), p.esm.inferred_count());
    let inferred_artillery = p
        .esm
        .inferred()
        .find(|e| e.unit.role == Role::Artillery)
        .expect("template infers artillery")
        .unit
        .position;
    let v = p.esm.version;
    assert_eq!(
        p.inject(obs(
            inferred_artillery.x,
            inferred_artillery.y,
            Role::Artillery,
            0.9
        ))
        .unwrap(),
        v + 1
    );
    assert_eq!(p.esm.observed_count(), observed + 1);
    assert_eq!(p.esm.inferred_count(), inferred - 1);
    assert!(p.esm.inferred().all(|e| e.unit.role != Role::Artillery));

    // A second report of the same battery fuses into the first.
    p.inject(obs(
        inferred_artillery.x,
        inferred_artillery.y,
        Role::Artillery,
        0.5,
    ))
    .unwrap();
    assert_eq!(p.esm.version, v + 2);
    assert_eq!(p.esm.observed_count(), observed + 1);
    let fused = p
        .esm
        .observed()
        .find(|e| e.unit.position == inferred_artillery)
        .expect("fused track");
    assert!((fused.confidence - 0.95).abs() < 1e-12);
}

#[test]
fn observed_units_are_never_moved_by_inference() {
    let p = battalion();
    for u in &p.scenario.enemy_observed_units {
        let e = p
            .esm
            .units
            .iter()
            .find(|e| e.unit.id == u.id)
            .expect("known unit kept");
        assert_eq!(e.provenance, Provenance::Observed);
        assert_eq!(e.unit.position, u.position);
    }
}

#[test]
fn invalid_observation_leaves_state_untouched() {
    let mut p = battalion();
    let before = p.clone();
    assert!(p.inject(obs(0, 0, Role::Infantry, 1.5)).is_err());
    assert!(p.inject(obs(500, 500, Role::Infantry, 0.5)).is_err());
    assert_eq!(p, before);
}

#[test]
fn different_roles_do_not_fuse() {
    let map = coaforge_core::grid::GridMap::filled(
        coaforge_core::grid::Topology::Square8,
        5,
        5,
        coaforge_core::grid::Surface::Open,
    );
    let fused = fuse_observations(
        &map,
        &[obs(2, 2, Role::Infantry, 0.5), obs(2, 3, Role::Armor, 0.5)],
    );
    assert_eq!(fused.len(), 2);
    let far = fuse_observations(
        &map,
        &[
            obs(0, 0, Role::Infantry, 0.5),
            obs(2, 2, Role::Infantry, 0.5),
        ],
    );
    assert_eq!(far.len(), 2);
}

proptest! {
    #[test]
    fn fused_confidence_is_noisy_or(cs in prop::collection::vec(0.0..=1.0f64, 1..6)) {
        let map = coaforge_core::grid::GridMap::filled(
            coaforge_core::grid::Topology::Square8, 5, 5, coaforge_core::grid::Surface::Open,
        );
        let reports: Vec<_> = cs.iter().map(|c| obs(2, 2, Role::Infantry, *c)).collect();
        let fused = fuse_observations(&map, &reports);
        prop_assert_eq!(fused.len(), 1);
        let want = 1.0 - cs.iter().map(|c| 1.0 - c).product::<f64>();
        prop_assert!((fused[0].confidence - want).abs() < 1e-12);
        prop_assert!(fused[0].confidence >= cs.iter().copied().fold(0.0, f64::max) - 1e-12);
        prop_assert_eq!(fused[0].members, cs.len());
        prop_assert!((noisy_or(cs.iter().copied()) - want).abs() < 1e-12);
    }

    #[test]
    fn likelihoods_are_a_distribution_with_stable_argmax(
        scores in prop::collection::vec(-5.0..5.0f64, 1..6),
        scale in 0.01..100.0f64,
        shift in -100.0..100.0f64,
    ) {
        let l = likelihoods(&scores);
        prop_assert!((l.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        prop_assert!(l.iter().all(|p| *p >= 0.0));
        let moved: Vec<f64> = scores.iter().map(|s| scale * s + shift).collect();
        let m = likelihoods(&moved);
        for (a, b) in l.iter().zip(&m) {
            prop_assert!((a - b).abs() < 1e-9);
        }
    }
}
