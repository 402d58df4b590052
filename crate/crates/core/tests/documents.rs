mod common;

use coaforge_core::grid::Topology;
use coaforge_core::opord::{parse_opord, render_opord};
use coaforge_core::scenario::{load_scenario, serialize_scenario};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::{fixture, random_battle, random_map, read_fixture};

#[test]
fn corpus_round_trips() {
    let mut files: Vec<_> = std::fs::read_dir(fixture("opord_corpus"))
        .expect("corpus")
        .map(|e| e.expect("entry").path())
        .collect();
    files.sort();
    assert_eq!(files.len(), 20);
    for path in files {
        let src = std::fs::read_to_string(&path).expect("readable");
        let first = parse_opord(&src).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        let rendered = render_opord(&first);
        let second = parse_opord(&rendered).expect("rendered order parses");
        assert_eq!(first, second, "{}", path.display());
        assert_eq!(render_opord(&second), rendered);
    }
}

#[test]
fn fixtures_load() {
    for name in ["table2.scn", "fig5_battalion.scn"] {
        let s = load_scenario(&read_fixture(name)).unwrap_or_else(|e| panic!("{name}: {e}"));
        let again = load_scenario(&serialize_scenario(&s)).expect("serialized scenario loads");
        assert_eq!(s, again, "{name}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn random_scenarios_round_trip(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (mut s, _, _) = random_battle(&mut rng);
        if seed % 2 == 0 {
            s.map = random_map(&mut rng, Topology::HexOddRow, 12, 12);
        }
        let text = serialize_scenario(&s);
        let loaded = load_scenario(&text);
        prop_assert!(loaded.is_ok(), "{:?}", loaded.err());
        let mut loaded = loaded.unwrap();
        // The situation summary is derived on load.
        s.mettc = loaded.mettc.clone();
        prop_assert_eq!(&loaded, &s);
        loaded = load_scenario(&serialize_scenario(&loaded)).expect("reloads");
        prop_assert_eq!(serialize_scenario(&loaded), text);
    }

    #[test]
    fn rendered_orders_are_fixpoints(
        unit in "[A-Z][a-z]{2,8} (Company|Battalion)",
        objective in "Objective [A-Z][a-z]{3,6}",
        purpose in "[a-z]{3,8} the [a-z]{3,8}",
    ) {
        let src = read_fixture("table1.opord")
            .replace("The 1st Infantry Battalion seizes Objective XYZ", &format!("{unit} seizes {objective}"))
            .replace("prevent enemy advance", &purpose)
            .replace("- A Company: Seize Objective XYZ.", &format!("- {unit}: Seize {objective}."));
        let first = parse_opord(&src).expect("template order parses");
        let second = parse_opord(&render_opord(&first)).expect("rendered order parses");
        prop_assert_eq!(first, second);
    }
}
