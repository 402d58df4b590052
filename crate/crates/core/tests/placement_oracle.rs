mod common;

use coaforge_core::ipb::enemy::{place_greedy, PlacementContext};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::{exhaustive_placement, joint_score, random_placement_instance};

#[test]
fn greedy_meets_hard_constraints_and_stays_near_optimum() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut checked = 0;
    while checked < 50 {
        let (scenario, terrain, template) = random_placement_instance(&mut rng);
        let ctx = PlacementContext::new(&scenario, &terrain);
        let Some(optimum) = exhaustive_placement(&ctx, &template) else {
            continue;
        };
        checked += 1;
        let mut diagnostics = Vec::new();
        let placed = place_greedy(&ctx, &template, &[1, 1, 1], &[], &mut diagnostics);
        assert_eq!(placed.len(), 3, "unplaced slots: {diagnostics:?}");
        let cells: Vec<_> = placed.iter().map(|p| p.cell).collect();
        let greedy = joint_score(&ctx, &template, &cells)
            .expect("greedy placement violates a hard constraint");
        let reported: f64 = placed.iter().map(|p| p.score).sum();
        assert!((greedy - reported).abs() < 1e-12);
        assert!(greedy <= optimum + 1e-12);
        assert!(
            greedy >= 0.85 * optimum,
            "greedy {greedy} vs optimum {optimum}"
        );
    }
}

#[test]
fn impossible_hard_constraint_is_reported() {
    use coaforge_core::grid::Role;
    use coaforge_core::ipb::template::{
        Constraint, ConstraintKind, DoctrinalTemplate, TemplateEntry,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (scenario, terrain, _) = random_placement_instance(&mut rng);
    let ctx = PlacementContext::new(&scenario, &terrain);
    let template = DoctrinalTemplate {
        entries: vec![TemplateEntry::new(
            Role::Artillery,
            1,
            vec![Constraint::hard(ConstraintKind::InDepth {
                min: 50,
                max: 60,
            })],
        )],
    };
    let mut diagnostics = Vec::new();
    assert!(place_greedy(&ctx, &template, &[1], &[], &mut diagnostics).is_empty());
    assert_eq!(diagnostics.len(), 1);
    assert!(diagnostics[0].contains("hard constraints unsatisfiable"));
}
