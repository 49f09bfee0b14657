mod common;

use common::trig;
use holonomic::lagrangians::Lagrangian;
use holonomic::measures::{holonomy_residual, is_holonomic};
use holonomic::optimize::{
    assemble, criticality_scan, GridSpec, ScanGenerator, TangencyChecks, VelocityPreset,
};
use holonomic::variations::{random_generators, BatteryConfig};
use proptest::prelude::*;

const LP_TOL: f64 = 1e-6;

proptest! {
    #![proptest_config(common::config(12))]

    #[test]
    fn solutions_are_feasible_and_monotone_in_the_cutoff(
        potential in trig(2),
        samples in 4usize..7,
        rho in -1.0..1.0f64,
    ) {
        let spec = GridSpec::preset(2, samples, VelocityPreset::Lattice16).unwrap();
        let l = Lagrangian::Mechanical { potential };
        let mut last = f64::NEG_INFINITY;
        for k in 0..=3 {
            let lp = assemble(&spec, &l, k, Some(&[rho, 0.0])).unwrap();
            let sol = lp.solve().unwrap();
            prop_assert!(sol.holonomy_residual <= 1e-8);
            prop_assert!(sol.probability_residual <= 1e-10);
            prop_assert!(sol.homology_residual.unwrap() <= 1e-8);
            prop_assert!(is_holonomic(&sol.measure, k, 1e-8));
            let max_res = holonomy_residual(&sol.measure, k).iter().fold(0.0_f64, |m, r| m.max(r.abs()));
            prop_assert!(max_res <= 1e-8);
            prop_assert!(sol.objective >= last - 1e-9, "K = {}: {} < {}", k, sol.objective, last);
            last = sol.objective;
        }
    }
}

#[test]
fn homological_lp_outputs_are_critical() {
    for (samples, rho, seed) in [(4, [1.0, 0.0], 1), (6, [0.0, 1.0], 2), (8, [1.0, 0.0], 3)] {
        let spec = GridSpec::preset(2, samples, VelocityPreset::Lattice16).unwrap();
        let l = Lagrangian::mechanical(2);
        let sol = assemble(&spec, &l, 2, Some(&rho)).unwrap().solve().unwrap();
        assert!((sol.objective - 0.5).abs() <= 1e-10);
        let cfg = BatteryConfig {
            homological: true,
            ..BatteryConfig::default()
        };
        let gens: Vec<ScanGenerator> = random_generators(&sol.measure, &cfg, seed)
            .unwrap()
            .iter()
            .map(ScanGenerator::from)
            .collect();
        let checks = TangencyChecks {
            homological: true,
            ..TangencyChecks::default()
        };
        let report = criticality_scan(&sol.measure, &l, &gens, 10.0 * LP_TOL, &checks).unwrap();
        assert!(report.critical && report.excluded.is_empty(), "{report:?}");
        assert_eq!(report.values.len(), gens.len());
    }
}

#[test]
fn optimum_approaches_one_half_as_velocities_refine() {
    let l = Lagrangian::mechanical(2);
    let coarse = GridSpec {
        d: 2,
        samples: 6,
        velocities: [[1.0, 1.0], [1.0, -1.0], [-1.0, 1.0], [-1.0, -1.0]]
            .iter()
            .map(|v| vec![v.to_vec()])
            .collect(),
    };
    let fine = GridSpec::preset(2, 6, VelocityPreset::Lattice16).unwrap();
    let a = assemble(&coarse, &l, 2, Some(&[1.0, 0.0])).unwrap().solve().unwrap().objective;
    let b = assemble(&fine, &l, 2, Some(&[1.0, 0.0])).unwrap().solve().unwrap().objective;
    assert!((a - 1.0).abs() <= 1e-10, "{a}");
    assert!(b <= a && (b - 0.5).abs() <= 1e-10, "{b}");
}
