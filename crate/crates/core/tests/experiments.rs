use proptest::prelude::*;

use seqreg::experiments::{presets, rerun_cell, run_consistency, run_smallball_validation, ExperimentKind};

fn small_consistency() -> seqreg::experiments::ExperimentConfig {
    let mut cfg = presets::consistency();
    cfg.n_grid = vec![300, 900];
    cfg.replicates = 5;
    cfg
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    // any single cell can be recomputed from its coordinates alone
    #[test]
    fn cells_rerun_in_isolation(n_idx in 0usize..2, rep in 0usize..5) {
        let cfg = small_consistency();
        let report = run_consistency(&cfg, 1).unwrap();
        let n = cfg.n_grid[n_idx];
        let stored = report
            .records
            .iter()
            .find(|r| r.n == n && r.replicate == rep && r.point == 0)
            .unwrap();
        let again = rerun_cell(&cfg, ExperimentKind::Consistency, n, rep, 0).unwrap();
        prop_assert_eq!(stored, &again);
    }
}

#[test]
fn moving_average_slope_tracks_the_dependence_factor() {
    // the dependent slope is the i.i.d. slope times C_A^{2/(2p-1)}
    let iid = run_smallball_validation(&presets::smallball(false), 1).unwrap();
    let ma = run_smallball_validation(&presets::smallball(true), 1).unwrap();
    let p = iid.constants.p;
    let factor = ma.constants.c_a.powf(2.0 / (2.0 * p - 1.0));
    let ratio = ma.fit.slope / iid.fit.slope;
    assert!((ratio / factor - 1.0).abs() < 0.3, "ratio {ratio}, factor {factor}");
    assert!((ma.predicted_slope / iid.predicted_slope - factor).abs() < 1e-12);
}
