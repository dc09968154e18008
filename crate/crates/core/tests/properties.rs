use proptest::prelude::*;

use proxflow::linalg;
use proxflow::params::{check_conditions, lyapunov_constants, SystemParams};
use proxflow::problems::{brute_force_prox, BoxIndicator, GridSpec, L1Norm, NonsmoothOracle};
use proxflow::rate::{polynomial_exponent, theta_from_polynomial_slope};

fn vec2() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-5.0..5.0f64, 2)
}

proptest! {
    #[test]
    fn soft_threshold_is_nonexpansive(gamma in 1e-3..10.0f64, lambda in 0.0..5.0f64, u in vec2(), v in vec2()) {
        let f = L1Norm::new(2, lambda).unwrap();
        let d = linalg::dist(&f.prox_vec(gamma, &u), &f.prox_vec(gamma, &v));
        prop_assert!(d <= linalg::dist(&u, &v) + 1e-12);
    }

    #[test]
    fn projection_is_nonexpansive_and_idempotent(r in 0.01..3.0f64, u in vec2(), v in vec2()) {
        let f = BoxIndicator::cube(2, r).unwrap();
        let (pu, pv) = (f.prox_vec(1.0, &u), f.prox_vec(1.0, &v));
        prop_assert!(linalg::dist(&pu, &pv) <= linalg::dist(&u, &v) + 1e-12);
        prop_assert!(f.contains(&pu));
        prop_assert_eq!(f.prox_vec(1.0, &pu), pu);
    }

    #[test]
    fn soft_threshold_matches_grid_in_1d(gamma in 0.1..2.0f64, lambda in 0.0..2.0f64, v in -3.0..3.0f64) {
        let f = L1Norm::new(1, lambda).unwrap();
        let step = 1e-4;
        let grid = brute_force_prox(|u| f.value(u), gamma, &[v], GridSpec::with_step(step)).unwrap();
        prop_assert!((grid[0] - f.prox_vec(gamma, &[v])[0]).abs() <= 2.0 * step);
    }

    #[test]
    fn admissible_tuples_have_positive_weights(
        a in 1e-6..2.0f64, b in 1e-6..10.0f64, lg in -8.0..0.0f64, lipschitz in 0.0..10.0f64
    ) {
        let p = SystemParams::new(a, b, 10f64.powf(lg), lipschitz).unwrap();
        if check_conditions(&p).unwrap().admissible() {
            let k = lyapunov_constants(&p);
            prop_assert!(k.m1 > 0.0 && k.m2 > 0.0, "{:?} {:?}", p, k);
        }
    }

    #[test]
    fn theta_round_trip(theta in 0.5000001..0.9999999f64) {
        let back = theta_from_polynomial_slope(-polynomial_exponent(theta)).unwrap();
        prop_assert!((back - theta).abs() <= 1e-12);
    }
}
