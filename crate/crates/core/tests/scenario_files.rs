use opinion_core::file::{parse_document, parse_scenario_str, ScenarioFile};
use opinion_core::intersection::{intersection_example, intersection_file};
use opinion_core::random::{random_scenario, seeded};
use opinion_core::{validate_scenario, Error};
use proptest::prelude::*;

#[test]
fn bundled_intersection_matches_generator() {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/../../scenarios/intersection.json");
    let text = std::fs::read_to_string(path).unwrap();
    assert_eq!(text, intersection_file().to_json());
    assert_eq!(parse_scenario_str(&text).unwrap(), intersection_example());
}

#[test]
fn invalid_structure_is_reported_not_parsed() {
    let mut scenario = intersection_example();
    scenario.groups[1].members.push(1);
    let text = ScenarioFile::from_scenario(&scenario, None).to_json();
    assert!(parse_document(&text).is_ok());
    match parse_scenario_str(&text) {
        Err(Error::Invalid(report)) => assert!(report.mentions("groups must partition agents"), "{report}"),
        other => panic!("unexpected {other:?}"),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn json_round_trip(seed in any::<u64>()) {
        let scenario = random_scenario(&mut seeded(seed), 6, 4);
        let text = ScenarioFile::from_scenario(&scenario, Some("note".into())).to_json();
        let back = parse_scenario_str(&text).unwrap();
        prop_assert_eq!(&back, &scenario);
        prop_assert!(validate_scenario(&back).is_pass());
    }
}
