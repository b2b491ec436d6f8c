use std::f64::consts::PI;

use isp_core::funcspace::{antiderivative, differentiate, integrate, sobolev_norm, GridFunction};
use isp_core::Complex64;
use proptest::prelude::*;

fn discrete_l2(a: &GridFunction, b: &GridFunction) -> f64 {
    let m = a.grid_size() as f64;
    (a.values().iter().zip(b.values()).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>() / (m + 1.0)).sqrt()
}

fn trig(m: usize, tag: i32, amp: f64, freq: f64, quad: f64) -> GridFunction {
    GridFunction::from_real_fn(m, tag, move |x| amp * (freq * PI * x).sin() + quad * x * x)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn derivative_of_antiderivative_converges_at_second_order(
        amp in -3.0f64..3.0, freq in 0.5f64..4.0, quad in -2.0f64..2.0,
    ) {
        let err = |m: usize| {
            let f = trig(m, 0, amp, freq, quad);
            discrete_l2(&differentiate(&antiderivative(&f, false)).unwrap(), &f)
        };
        let (coarse, fine) = (err(100), err(400));
        let scale = amp.abs() * (freq * PI).powi(2) + quad.abs() + 1.0;
        prop_assert!(coarse <= 2.0 * scale / 100f64.powi(2), "coarse {coarse}");
        prop_assert!(fine <= 2.0 * scale / 400f64.powi(2), "fine {fine}");
    }

    #[test]
    fn sobolev_norm_is_monotone_in_order(amp in -3.0f64..3.0, freq in 0.5f64..4.0, quad in -2.0f64..2.0) {
        let f = trig(300, 3, amp, freq, quad);
        let norms: Vec<f64> = (0..=3).map(|k| sobolev_norm(&f, k).unwrap()).collect();
        for w in norms.windows(2) {
            prop_assert!(w[1] >= w[0]);
        }
    }

    #[test]
    fn integrate_is_linear(
        a in -5.0f64..5.0, b in -5.0f64..5.0,
        f1 in 0.5f64..4.0, f2 in 0.5f64..4.0, m in 20usize..200,
    ) {
        let f = trig(m, 0, 1.0, f1, 0.3);
        let g = trig(m, 0, -0.7, f2, 1.1);
        let combo = f.zip_with(&g, |x, y| x * a + y * b);
        let lhs = integrate(&combo);
        let rhs = integrate(&f) * a + integrate(&g) * b;
        prop_assert!((lhs - rhs).norm() < 1e-12);
    }

    #[test]
    fn integrate_is_exact_on_low_degree_polynomials(
        c in proptest::collection::vec(-3.0f64..3.0, 4), half in 10usize..100,
    ) {
        // Simpson on an even grid is exact through cubics
        let even = GridFunction::from_real_fn(2 * half, 0, |x| c[0] + c[1] * x + c[2] * x * x + c[3] * x * x * x);
        let exact = c[0] + c[1] / 2.0 + c[2] / 3.0 + c[3] / 4.0;
        prop_assert!((integrate(&even).re - exact).abs() < 1e-12);
        // the trapezoid fallback on an odd grid is exact for linear functions
        let odd = GridFunction::from_real_fn(2 * half + 1, 0, |x| c[0] + c[1] * x);
        prop_assert!((integrate(&odd).re - (c[0] + c[1] / 2.0)).abs() < 1e-12);
    }

    #[test]
    fn minus_one_norm_ignores_the_mean_of_the_antiderivative(c in -4.0f64..4.0, m in 50usize..300) {
        // the mean-zero antiderivative of a constant c is c(x - 1/2)
        let f = GridFunction::from_real_fn(m, 0, |_| c);
        let want = c.abs() / 12f64.sqrt();
        prop_assert!((sobolev_norm(&f, -1).unwrap() - want).abs() < 1e-3 * (1.0 + c.abs()));
    }
}

#[test]
fn antiderivative_mean_zero_integrates_to_zero() {
    let f = GridFunction::from_fn(400, 0, |x| Complex64::new((3.0 * x).cos(), x));
    assert!(integrate(&antiderivative(&f, true)).norm() < 1e-14);
}
