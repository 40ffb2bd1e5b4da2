use approx::assert_relative_eq;
use proptest::prelude::*;

use cusplab::bootstrap::BootstrapParams;
use cusplab::geometry::FlatTorusMetric;
use cusplab::grid::RadialGrid;
use cusplab::ode::{decompose_growth, GrowthEnvelope, QuadraticODE};
use cusplab::operator::apply_l_cusp;
use cusplab::sampling::{random_tensor, rng};
use cusplab::tensor::{average, TrivialEinsteinVariation};

fn grid() -> RadialGrid {
    RadialGrid::new(10.0, 0.01).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn trivial_variations_are_in_the_kernel(a in -2.0..2.0f64, b in -2.0..2.0f64) {
        let v = TrivialEinsteinVariation::traceless(a, b);
        let g = grid();
        prop_assert!(apply_l_cusp(&v.to_radial(g)).sup_norm() <= 1e-6 * (1.0 + v.norm()));
        let r = v.to_radial(g);
        for i in [0, 300, 1000] {
            assert_relative_eq!(r.norm_at(i), v.norm(), max_relative = 1e-12);
        }
    }

    #[test]
    fn operator_is_linear(a in -3.0..3.0f64, seed in 0u64..1000) {
        let g = RadialGrid::new(3.0, 0.02).unwrap();
        let flat = FlatTorusMetric::square(1.0).unwrap();
        let h = average(&random_tensor(flat, g, 2, 1, 1.0, 0.5..=1.5, &mut rng(seed)).unwrap());
        let k = average(&random_tensor(flat, g, 2, 1, 1.0, 0.5..=1.5, &mut rng(seed + 1)).unwrap());
        let lhs = apply_l_cusp(&h.combine(a, &k, 1.0));
        let rhs = apply_l_cusp(&h).combine(a, &apply_l_cusp(&k), 1.0);
        prop_assert!(lhs.sub(&rhs).sup_norm() <= 1e-9 * (1.0 + lhs.sup_norm()));
    }

    #[test]
    fn decomposition_recovers_planted_coefficient(
        a1 in -1.0..1.0f64,
        beta in 0.1..2.0f64,
        mu in -2.0..-1.5f64,
    ) {
        let ode = QuadraticODE::q2();
        let (l1, _) = ode.roots();
        let g = grid();
        let y = g.sample(|r| a1 * (l1 * r).exp() + beta / ode.eval(mu) * (mu * r).exp());
        let d = decompose_growth(&g, &y, &ode, &GrowthEnvelope::new(vec![(beta, mu)]).unwrap()).unwrap();
        prop_assert!((d.a1 - a1).abs() < 1e-8);
        prop_assert!(d.a2.abs() < 1e-10);
        prop_assert!(d.constant <= 1.0 / ode.eval(mu).abs() + 1e-8);
    }

    #[test]
    fn weight_trajectory_avoids_excluded_weight(eta in 1.05..3.0f64, lambda in 0.05..0.95f64) {
        let params = BootstrapParams { eta, lambda, ..BootstrapParams::default() };
        let w = params.weights().unwrap();
        let traj = params.sigma_trajectory().unwrap();
        prop_assert_eq!(traj[0], 0.0);
        for pair in traj.windows(2) {
            prop_assert!(pair[1] > pair[0]);
            prop_assert!(pair[1] - pair[0] <= w.s0() + 1e-12);
        }
        let last = *traj.last().unwrap();
        prop_assert!(last <= w.b().max(0.0) + 1e-12);
        for s in &traj {
            let analysed = params.analysis_sigma(*s);
            prop_assert!(!params.in_excluded_band(analysed));
        }
    }

    #[test]
    fn level_tori_shrink_exponentially(x in -0.5..0.5f64, y in 0.9..3.0f64, r in 0.0..10.0f64) {
        let flat = FlatTorusMetric::from_basis([1.0, 0.0], [x, y]).unwrap();
        let cusp = cusplab::CuspMetric::new(flat, grid());
        let d = cusp.level_torus_diameter(r).unwrap();
        assert_relative_eq!(d, flat.diameter() * (-r).exp(), max_relative = 1e-12);
        prop_assert!(flat.lambda1().unwrap() * flat.diameter().powi(2) >= (-2.0f64).exp());
    }
}
