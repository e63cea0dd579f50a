use num_complex::Complex64;
use proptest::prelude::*;
use unitroot::matpoly::complexify;
use unitroot::numla::{fro, Mat};
use unitroot::MatrixPolynomial;

fn polynomial() -> impl Strategy<Value = MatrixPolynomial> {
    (1usize..=4, 0usize..=4).prop_flat_map(|(n, k)| {
        prop::collection::vec(prop::collection::vec(-1.0f64..1.0, n * n), k + 1).prop_map(
            move |cs| {
                MatrixPolynomial::new(cs.into_iter().map(|v| Mat::from_vec(n, n, v)).collect())
                    .expect("square coefficients")
            },
        )
    })
}

fn rel(a: &Mat, b: &Mat) -> f64 {
    fro(&(a - b)) / fro(b).max(1.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn taylor_coefficients_reexpand(p in polynomial()) {
        let w: f64 = 0.3;
        let n = p.dim();
        let re = p
            .taylor_coeffs_at_one()
            .iter()
            .enumerate()
            .fold(Mat::zeros(n, n), |acc, (k, a)| acc + a * w.powi(k as i32));
        prop_assert!(rel(&re, &p.evaluate_real(1.0 + w)) <= 1e-12);
    }

    #[test]
    fn derivatives_match_finite_differences(p in polynomial()) {
        // central stencils; all are exact on quartics, so only roundoff remains
        let h = 1e-3;
        let f = |x: f64| p.evaluate_real(x);
        let d1 = (f(1.0 - 2.0 * h) - f(1.0 - h) * 8.0 + f(1.0 + h) * 8.0 - f(1.0 + 2.0 * h))
            / (12.0 * h);
        let d2 = (-f(1.0 - 2.0 * h) + f(1.0 - h) * 16.0 - f(1.0) * 30.0 + f(1.0 + h) * 16.0
            - f(1.0 + 2.0 * h))
            / (12.0 * h * h);
        let h3 = 1e-2;
        let d3 = (f(1.0 + 2.0 * h3) - f(1.0 + h3) * 2.0 + f(1.0 - h3) * 2.0 - f(1.0 - 2.0 * h3))
            / (2.0 * h3.powi(3));
        let d4 = (f(1.0 + 2.0 * h3) - f(1.0 + h3) * 4.0 + f(1.0) * 6.0 - f(1.0 - h3) * 4.0
            + f(1.0 - 2.0 * h3))
            / h3.powi(4);
        let scale = p.scale().max(1.0);
        for (k, fd) in [(1, d1), (2, d2), (3, d3), (4, d4)] {
            let exact = p.derivative_at_one(k);
            let err = fro(&(&exact - fd)) / (fro(&exact).max(scale));
            prop_assert!(err <= 1e-6, "k {} err {:e}", k, err);
        }
    }

    #[test]
    fn var_form_is_identity_at_zero(
        n in 1usize..=4,
        lags in prop::collection::vec(prop::collection::vec(-1.0f64..1.0, 16), 1..=3),
    ) {
        let lags: Vec<Mat> = lags.iter().map(|v| Mat::from_fn(n, n, |i, j| v[i * 4 + j])).collect();
        let p = MatrixPolynomial::from_var(&lags).unwrap();
        prop_assert_eq!(p.evaluate_real(0.0), Mat::identity(n, n));
    }

    #[test]
    fn inverse_sanity(p in polynomial(), re in -2.0f64..2.0, im in -2.0f64..2.0) {
        let z = Complex64::new(re, im);
        let a = p.evaluate(z);
        let sv = a.clone().svd(false, false).singular_values;
        let smin = sv.iter().copied().fold(f64::INFINITY, f64::min);
        prop_assume!(smin > 1e-3 * sv.max());
        let inv = a.clone().try_inverse().unwrap();
        let n = p.dim();
        let err = (&a * &inv - complexify(&Mat::identity(n, n))).norm();
        prop_assert!(err <= 1e-9);
    }
}
