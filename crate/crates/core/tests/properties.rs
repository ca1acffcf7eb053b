use approx::assert_relative_eq;
use proptest::prelude::*;

use isocurv::ambient::ModelConstant;
use isocurv::catalog::generic_graphs;
use isocurv::chart::Grid;
use isocurv::check::Check;
use isocurv::eigenframe::cluster_values;
use isocurv::immersion::shape_data;
use isocurv::parallel::{
    charpoly_from_power_sums, curvature_derivative, power_sums, real_roots, transport_curvature,
    transport_curvature_t,
};

fn model() -> impl Strategy<Value = ModelConstant> {
    prop_oneof![Just(1), Just(-1)].prop_map(|c| ModelConstant::new(c).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn unit_relation_on_graphs(which in 0usize..3, w in prop::collection::vec(0.05f64..0.95, 3)) {
        let chart = generic_graphs().swap_remove(which);
        let d = chart.domain();
        let u: Vec<f64> = (0..chart.n()).map(|i| d.lo[i] + w[i] * (d.hi[i] - d.lo[i])).collect();
        let sd = shape_data(chart.as_ref(), &u).unwrap();
        assert_relative_eq!(sd.tnorm * sd.tnorm + sd.nu * sd.nu, 1.0, epsilon = 1e-12);
        let a_sym = &sd.g * &sd.a;
        assert_relative_eq!((&a_sym - a_sym.transpose()).amax(), 0.0, epsilon = 1e-10);
    }

    #[test]
    fn transport_composes(
        c in model(),
        lambda in -1.5f64..1.5,
        tnorm in 0.05f64..1.0,
        s in -0.3f64..0.3,
        t in -0.3f64..0.3,
    ) {
        let Ok(mid) = transport_curvature(lambda, tnorm, c, s) else { return Ok(()) };
        let (Ok(two), Ok(one)) = (
            transport_curvature(mid, tnorm, c, t),
            transport_curvature(lambda, tnorm, c, s + t),
        ) else { return Ok(()) };
        prop_assume!(one.abs() < 1e3 && mid.abs() < 1e3);
        assert_relative_eq!(two, one, epsilon = 1e-9, max_relative = 1e-9);
    }

    #[test]
    fn t_direction_transport_composes(lambda in -2.0f64..2.0, s in -0.2f64..0.2, t in -0.2f64..0.2) {
        let mid = transport_curvature_t(lambda, s).unwrap();
        let two = transport_curvature_t(mid, t).unwrap();
        let one = transport_curvature_t(lambda, s + t).unwrap();
        assert_relative_eq!(two, one, epsilon = 1e-12, max_relative = 1e-12);
    }

    #[test]
    fn first_derivatives_follow_the_flow(
        c in model(),
        lambda in -1.0f64..1.0,
        tnorm in 0.0f64..1.0,
        s in -0.2f64..0.2,
    ) {
        let at = transport_curvature(lambda, tnorm, c, s).unwrap();
        let h = 1e-4;
        let fd = (transport_curvature(lambda, tnorm, c, s + h).unwrap()
            - transport_curvature(lambda, tnorm, c, s - h).unwrap())
            / (2.0 * h);
        let d1 = curvature_derivative(at, tnorm, c, 1).unwrap();
        assert_relative_eq!(d1, c.value() * tnorm * tnorm + at * at, epsilon = 1e-12);
        assert_relative_eq!(fd, d1, epsilon = 1e-6, max_relative = 1e-6);
    }

    #[test]
    fn newton_round_trip(mut spectrum in prop::collection::vec(-2.0f64..2.0, 1..6)) {
        spectrum.sort_by(f64::total_cmp);
        prop_assume!(spectrum.windows(2).all(|w| w[1] - w[0] > 1e-2));
        let p = power_sums(&spectrum, spectrum.len());
        let roots = real_roots(&charpoly_from_power_sums(&p)).unwrap();
        prop_assert_eq!(roots.len(), spectrum.len());
        for (r, l) in roots.iter().zip(&spectrum) {
            assert_relative_eq!(r, l, epsilon = 1e-6);
        }
    }

    #[test]
    fn clustering_recovers_multiplicities(
        centers in prop::collection::btree_set(-20i32..20, 1..5),
        mults in prop::collection::vec(1usize..4, 4),
        jitter in prop::collection::vec(-1.0f64..1.0, 16),
        seed in any::<u64>(),
    ) {
        let centers: Vec<f64> = centers.into_iter().map(|k| 0.25 * k as f64).collect();
        let mut values = Vec::new();
        for (i, c) in centers.iter().enumerate() {
            for j in 0..mults[i] {
                values.push(c + 1e-10 * jitter[(4 * i + j) % 16]);
            }
        }
        let k = values.len();
        values.rotate_left((seed as usize) % k);
        let s = cluster_values(&values, 1e-8).unwrap();
        let expected: Vec<usize> = (0..centers.len()).rev().map(|i| mults[i]).collect();
        prop_assert_eq!(s.multiplicities, expected);
        prop_assert!(s.eigenvalues.windows(2).all(|w| w[0] > w[1]));
    }

    #[test]
    fn grid_index_round_trip(counts in prop::collection::vec(2usize..6, 1..4), pick in any::<prop::sample::Index>()) {
        let n = counts.len();
        let grid = Grid::new(vec![-1.0; n], vec![1.0; n], counts).unwrap();
        let flat = pick.index(grid.len());
        prop_assert_eq!(grid.flat_index(&grid.multi_index(flat)), flat);
        if let Some(p) = grid.parent(flat) {
            prop_assert!(p < flat);
        }
    }

    #[test]
    fn tolerance_checks_reject_nan(tol in 0.0f64..1.0) {
        prop_assert!(!Check::at_most("x", f64::NAN, tol).passed());
        prop_assert!(Check::at_most("x", tol, tol).passed());
    }
}
