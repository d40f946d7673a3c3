mod common;

#[test]
fn heuristic_bounds_never_exceed_truncated_oracle() {
    for seed in [2024, 31337] {
        let checked = common::soundness_sweep(seed, 200).unwrap();
        assert_eq!(checked, [200, 200]);
    }
}
