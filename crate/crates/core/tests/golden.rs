use std::sync::Arc;

use projfinsler::curvature::ricci_scalar;
use projfinsler::diffengine::{partial, DerivativeRequest, EnergyField, EngineConfig};
use projfinsler::distance::{funk_distance_ball, funk_distance_interval, ChainLink, IntervalPair};
use projfinsler::geodesics::{extend_geodesic, finsler_distance, spray_vector, ConnectOptions, GeodesicOptions};
use projfinsler::metrics::{FunkBall, Klein};
use projfinsler::projective::ProjectiveParameter;
use projfinsler::verify::golden;
use projfinsler::{FinslerStructure, Metric};

fn close(a: f64, b: f64, tol: f64) {
    assert!((a - b).abs() <= tol, "{a} vs {b} (tol {tol})");
}

#[test]
fn funk_ball_pointwise_values() {
    let g = golden();
    let f = FunkBall::new(2, 1.0).unwrap();
    let (x, y) = ([0.5, 0.0], [1.0, 0.0]);
    close(f.norm(&x, &y).unwrap(), g.funk_ball_norm_at_half, 1e-14);

    let req = DerivativeRequest { x: x.to_vec(), y: y.to_vec(), x_orders: vec![1, 0], y_orders: vec![0, 0] };
    let jet = partial(&EnergyField(&f), &req, &EngineConfig::default()).unwrap();
    close(jet, g.funk_ball_dsq_dx1_at_half, 1e-12);
    let fd = partial(&EnergyField(&f), &req, &EngineConfig::finite_difference()).unwrap();
    close(fd, g.funk_ball_dsq_dx1_at_half, 1e-6);

    let s = spray_vector(&f, &x, &y, &EngineConfig::default()).unwrap();
    for (a, b) in s.iter().zip(&g.funk_ball_spray_at_half) {
        close(*a, *b, 1e-12);
    }
}

#[test]
fn ricci_constants() {
    let g = golden();
    let cfg = EngineConfig::default();
    let cases: [(Box<dyn FinslerStructure>, f64); 4] = [
        (Box::new(Klein::new(2).unwrap()), g.klein_ricci_n2),
        (Box::new(Klein::new(3).unwrap()), g.klein_ricci_n3),
        (Box::new(FunkBall::new(2, 1.0).unwrap()), g.funk_ball_ricci_n2),
        (Box::new(FunkBall::new(3, 1.0).unwrap()), g.funk_ball_ricci_n3),
    ];
    for (m, expected) in cases {
        let n = m.dim();
        let x: Vec<f64> = (0..n).map(|i| 0.1 * (i as f64 + 1.0)).collect();
        let y: Vec<f64> = (0..n).map(|i| if i == 0 { 1.0 } else { -0.4 }).collect();
        close(ricci_scalar(m.as_ref(), &x, &y, &cfg).unwrap(), expected, 1e-9);
    }
}

#[test]
fn distances() {
    let g = golden();
    let klein: Metric = Arc::new(Klein::new(2).unwrap());
    let d = finsler_distance(&klein, &[0.0, 0.0], &[0.5, 0.0], &ConnectOptions::default()).unwrap();
    close(d, g.klein_distance_origin_half, 1e-9);

    close(funk_distance_ball(&[0.0, 0.0], &[0.5, 0.0], 1.0).unwrap(), g.funk_ball_distance_forward, 1e-15);
    close(funk_distance_ball(&[0.5, 0.0], &[0.0, 0.0], 1.0).unwrap(), g.funk_ball_distance_backward, 1e-15);
    let funk: Metric = Arc::new(FunkBall::new(2, 1.0).unwrap());
    let d = finsler_distance(&funk, &[0.0, 0.0], &[0.5, 0.0], &ConnectOptions::default()).unwrap();
    close(d, g.funk_ball_distance_forward, 1e-9);

    close(funk_distance_interval(&IntervalPair::new(0.0, 0.5, 1.0).unwrap()).unwrap(), g.interval_funk_0_half, 1e-15);
    close(funk_distance_interval(&IntervalPair::new(0.5, 0.0, 1.0).unwrap()).unwrap(), g.interval_funk_half_0, 1e-15);
}

#[test]
fn klein_identity_chart() {
    let g = golden();
    let klein: Metric = Arc::new(Klein::new(2).unwrap());
    let link = ChainLink::build(&klein, &[0.0, 0.0], &[0.5, 0.0], 1.0, &ConnectOptions::default(), 50.0).unwrap();
    close(link.base_length(), g.klein_identity_chart_value, 1e-8);
}

#[test]
fn funk_parameter_range() {
    let g = golden();
    let f: Metric = Arc::new(FunkBall::new(2, 1.0).unwrap());
    let seg = extend_geodesic(&f, &[0.0, 0.0], &[1.0, 0.0], 50.0, 50.0, &GeodesicOptions::default()).unwrap();
    let r = ProjectiveParameter::along(&seg, 0.0).unwrap().range();
    close(r.lo, g.funk_ball_parameter_range[0], 1e-6);
    close(r.hi, g.funk_ball_parameter_range[1], 1e-6);
}
