use proptest::prelude::*;

use projfinsler::distance::{funk_distance_hyperbolic, funk_distance_interval, funk_distance_interval_literal, IntervalPair};
use projfinsler::metrics::{FunkBall, Klein};
use projfinsler::projective::{cross_ratio, MobiusTransform};
use projfinsler::FinslerStructure;

fn inside() -> impl Strategy<Value = f64> {
    -0.99f64..0.99
}

fn ball_point() -> impl Strategy<Value = Vec<f64>> {
    (0.0f64..0.9, 0.0f64..std::f64::consts::TAU).prop_map(|(r, t)| vec![r * t.cos(), r * t.sin()])
}

fn direction() -> impl Strategy<Value = Vec<f64>> {
    (0.1f64..3.0, 0.0f64..std::f64::consts::TAU).prop_map(|(r, t)| vec![r * t.cos(), r * t.sin()])
}

proptest! {
    #[test]
    fn interval_funk_forms_agree(a in inside(), b in inside(), k in 0.2f64..5.0) {
        let p = IntervalPair::new(a, b, k).unwrap();
        let stable = funk_distance_interval(&p).unwrap();
        let literal = funk_distance_interval_literal(&p).unwrap();
        prop_assert!((stable - literal).abs() <= 1e-10 * stable.abs().max(1.0));
        let hyp = funk_distance_hyperbolic(a.atanh(), b.atanh(), k);
        prop_assert!((stable - hyp).abs() <= 1e-10 * stable.abs().max(1.0));
    }

    #[test]
    fn interval_funk_triangle(a in inside(), b in inside(), c in inside()) {
        let d = |u: f64, v: f64| funk_distance_interval(&IntervalPair::new(u, v, 1.0).unwrap()).unwrap();
        prop_assert!(d(a, c) <= d(a, b) + d(b, c) + 1e-12);
        prop_assert!(d(a, b) >= 0.0);
    }

    #[test]
    fn homogeneity(x in ball_point(), y in direction(), l in 0.01f64..100.0) {
        for m in [Box::new(Klein::new(2).unwrap()) as Box<dyn FinslerStructure>, Box::new(FunkBall::new(2, 1.0).unwrap())] {
            let f = m.norm(&x, &y).unwrap();
            let scaled: Vec<f64> = y.iter().map(|c| c * l).collect();
            let fl = m.norm(&x, &scaled).unwrap();
            prop_assert!((fl - l * f).abs() <= 1e-13 * l * f);
            prop_assert!(f > 0.0);
        }
    }

    #[test]
    fn mobius_cross_ratio(a in -3.0f64..3.0, b in -3.0f64..3.0, c in -3.0f64..3.0, d in -3.0f64..3.0,
                          t in prop::array::uniform4(-0.9f64..0.9)) {
        prop_assume!((a * d - b * c).abs() > 0.1);
        let m = MobiusTransform::new(a, b, c, d).unwrap();
        let mut img = [0.0; 4];
        for (i, &s) in t.iter().enumerate() {
            prop_assume!((c * s + d).abs() > 0.05);
            img[i] = m.apply(s).unwrap();
        }
        prop_assume!((t[0] - t[2]).abs() > 0.05 && (t[1] - t[3]).abs() > 0.05 && (t[0] - t[3]).abs() > 0.05 && (t[1] - t[2]).abs() > 0.05);
        let before = cross_ratio(t[0], t[1], t[2], t[3]);
        let after = cross_ratio(img[0], img[1], img[2], img[3]);
        prop_assert!((before - after).abs() <= 1e-8 * before.abs().max(1.0));
    }

    #[test]
    fn mobius_inverse(a in -3.0f64..3.0, b in -3.0f64..3.0, c in -3.0f64..3.0, d in -3.0f64..3.0) {
        prop_assume!((a * d - b * c).abs() > 0.1);
        let m = MobiusTransform::new(a, b, c, d).unwrap();
        prop_assert!(m.compose(&m.invert()).approx_eq(&MobiusTransform::identity(), 1e-10));
    }
}
