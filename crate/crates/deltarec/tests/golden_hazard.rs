//! Golden-file coverage for the hazard-table JSON dump/load interface.
//!
//! Regenerate with: UPDATE_GOLDEN=1 cargo test -p deltarec --test golden_hazard

use deltarec::hazard::HazardTable;
use deltarec::DiscreteModel;

const GOLDEN_PATH: &str = concat!(
    env!("CARGO_MANIFEST_DIR"),
    "/tests/data/hazard_geometric_weak.json"
);

fn build_reference() -> std::sync::Arc<HazardTable> {
    let model = DiscreteModel::geometric(0.5).unwrap();
    HazardTable::build_with_depth(&model, -1, 24).unwrap()
}

#[test]
fn golden_dump_and_load() {
    let table = build_reference();
    let json = table.to_json_string().unwrap();
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::write(GOLDEN_PATH, &json).unwrap();
        return;
    }
    let golden_text = std::fs::read_to_string(GOLDEN_PATH)
        .expect("golden file present; regenerate with UPDATE_GOLDEN=1");
    // The committed dump must load into a table that matches a fresh build
    // value for value.
    let golden = HazardTable::from_json_str(&golden_text).unwrap();
    assert_eq!(golden.delta(), table.delta());
    assert_eq!(golden.depth(), table.depth());
    assert_eq!(golden.tail_bound(), table.tail_bound());
    for m in -1..=table.depth() {
        assert_eq!(golden.theta(m), table.theta(m), "theta({m})");
        assert_eq!(
            golden.cond_var_increment(m),
            table.cond_var_increment(m),
            "z({m})"
        );
    }
    for k in 0..=table.depth() {
        assert_eq!(golden.delta_rate(k), table.delta_rate(k), "s({k})");
    }
    // And the dump of the loaded table reproduces the golden bytes.
    assert_eq!(golden.to_json_string().unwrap(), golden_text);
}
