mod common;

use std::time::Instant;

use coaforge_core::evaluate::Weights;
use coaforge_core::ipb::enemy::Observation;
use coaforge_core::pipeline::{
    evaluate_cached, plan, prepare, run_pipeline, PlanningConfig, PlanningReport, Stage, StatsCache,
};

use common::read_fixture;

fn river_crossing() -> (String, String) {
    (read_fixture("table2.scn"), read_fixture("table2.opord"))
}

fn battalion() -> (String, String) {
    (
        read_fixture("fig5_battalion.scn"),
        read_fixture("fig5.opord"),
    )
}

#[test]
fn river_crossing_mission_analysis() {
    let (scn, opord) = river_crossing();
    let started = Instant::now();
    let r = run_pipeline(&scn, &opord, &PlanningConfig::default()).expect("plans");
    assert!(started.elapsed().as_secs_f64() < 5.0);
    assert_eq!(
        r.mission_statement,
        "Secure Objective 00 and ensure maneuver conditions for follow-on forces"
    );
    let specified: Vec<&str> = r.specified_tasks.iter().map(|t| t.text.as_str()).collect();
    assert_eq!(specified, ["Secure Objective Area 00"]);
    assert_eq!(
        r.operation_purpose,
        "Ensure maneuver conditions for follow-on forces"
    );
    assert!(r
        .implied_tasks
        .iter()
        .any(|t| t.text == "Secure Route 00 to enable seizure of Objective Area 00"));
    assert!(r
        .constraints
        .iter()
        .any(|c| c == "River flowing from east to west"));
    assert_eq!(r.end_state, "Enemy neutralized within the operational area");
    assert!(!r.coas.is_empty());
    assert_eq!(r.coas[0].coa.id, r.recommended);
}

fn distinct_main_routes(r: &PlanningReport) -> usize {
    let mut routes: Vec<_> = r.coas.iter().map(|c| c.coa.main_effort_route()).collect();
    routes.sort();
    routes.dedup();
    routes.len()
}

#[test]
fn battalion_attack_regenerates_from_its_snapshot() {
    let (scn, opord) = battalion();
    let config = PlanningConfig {
        k: 3,
        replications: 200,
        seed: 42,
        ..PlanningConfig::default()
    };
    let started = Instant::now();
    let r = run_pipeline(&scn, &opord, &config).expect("plans");
    assert!(started.elapsed().as_secs_f64() < 60.0);
    assert!(r.coas.len() >= 2, "{} CoAs", r.coas.len());
    assert!(distinct_main_routes(&r) >= 2);
    assert!(r.coa(&r.recommended).is_some());

    let snapshot = PlanningReport::from_json(&r.to_json()).expect("report parses");
    assert_eq!(snapshot, r);
    let again = run_pipeline(&scn, &opord, &snapshot.config).expect("plans");
    assert_eq!(again.to_json(), r.to_json());
    assert_eq!(again.to_text(), r.to_text());
}

#[test]
fn explanations_quote_the_statistics() {
    let (scn, opord) = river_crossing();
    let r = run_pipeline(&scn, &opord, &PlanningConfig::default()).expect("plans");
    for c in &r.coas {
        let i = r.matrix.position(&c.coa.id).expect("in matrix");
        assert!((r.matrix.totals[i] - c.total).abs() < 1e-12);
        assert_eq!(r.matrix.raw[i][0], c.stats.success_probability);
        assert!(c.explanation.verdict.contains(&format!("{:.4}", c.total)));
        assert_eq!(c.explanation.coa_id, c.coa.id);
    }
    assert!(r.coas[0].explanation.verdict.starts_with("recommended"));
}

#[test]
fn weight_only_replan_reuses_wargames() {
    let (scn, opord) = river_crossing();
    let prepared = prepare(&scn, &opord).expect("prepares");
    let mut cache = StatsCache::default();
    let config = PlanningConfig::default();
    let first = plan(&prepared, &config, &mut cache).expect("plans");
    let misses = cache.misses;
    assert_eq!(cache.hits, 0);
    let reweighted = PlanningConfig {
        weights: Weights::new([0.0, 1.0, 0.0, 0.0, 0.0]).unwrap(),
        ..config
    };
    let second = plan(&prepared, &reweighted, &mut cache).expect("plans");
    assert_eq!(cache.misses, misses);
    assert_eq!(cache.hits, misses);
    for c in &second.coas {
        assert_eq!(Some(&c.stats), first.coa(&c.coa.id).map(|f| &f.stats));
    }
}

#[test]
fn unreachable_objective_is_reported_by_stage() {
    let (scn, opord) = river_crossing();
    let walled = scn.replacen(
        "..F..R...F..\n.....R......\n",
        "..F..R...F..\n############\n",
        1,
    );
    assert_ne!(walled, scn);
    let err = run_pipeline(&walled, &opord, &PlanningConfig::default())
        .expect_err("objective unreachable");
    assert!(!err.stage.is_validation());
    assert!(
        matches!(err.stage, Stage::AnalyzeMission | Stage::FriendlyCoas),
        "{err}"
    );
}

#[test]
fn malformed_inputs_fail_validation() {
    let (scn, opord) = river_crossing();
    let err = run_pipeline("not a scenario", &opord, &PlanningConfig::default()).unwrap_err();
    assert_eq!(err.stage, Stage::LoadScenario);
    assert!(err.stage.is_validation());
    let err = run_pipeline(&scn, "", &PlanningConfig::default()).unwrap_err();
    assert_eq!(err.stage, Stage::ParseOrder);
}

#[test]
fn reserve_on_the_axis_lowers_the_leading_coa() {
    let (scn, opord) = battalion();
    let mut prepared = prepare(&scn, &opord).expect("prepares");
    let config = PlanningConfig {
        replications: 1000,
        ..PlanningConfig::default()
    };
    let mut cache = StatsCache::default();
    let before = plan(&prepared, &config, &mut cache).expect("plans");
    let leader = before
        .coa(&before.recommended)
        .expect("recommended")
        .coa
        .clone();
    let reserve: Observation =
        serde_json::from_str(&read_fixture("replan_reserve.json")).expect("fixture");
    assert!(leader.main_effort_route().iter().any(|c| prepared
        .scenario
        .map
        .distance(*c, reserve.location)
        <= 1));
    prepared.inject(reserve).expect("valid observation");

    let enemy = coaforge_core::ipb::ecoa::generate_enemy_coas(
        &prepared.esm,
        &prepared.terrain,
        &prepared.scenario,
        config.k_enemy,
    )
    .expect("enemy CoAs");
    let after =
        evaluate_cached(&prepared, &leader, &enemy.coas[0], &config, &mut cache).expect("wargames");
    let was = before.coa(&leader.id).unwrap().stats.success_probability;
    assert!(
        was - after.success_probability >= 0.05,
        "{was} -> {}",
        after.success_probability
    );
}
