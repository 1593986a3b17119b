use std::sync::Arc;

use projfinsler::distance::{pseudo_distance_upper, schwarz_ratio, ChainLink, PseudoDistanceOptions};
use projfinsler::geodesics::ConnectOptions;
use projfinsler::metrics::{Euclidean, Klein};
use projfinsler::Metric;

#[test]
fn euclidean_pseudo_distance_vanishes() {
    let e: Metric = Arc::new(Euclidean::new(2));
    let r = pseudo_distance_upper(&e, &[0.0, 0.0], &[3.0, -1.0], &PseudoDistanceOptions::default()).unwrap();
    assert!(r.upper_estimate < 1e-9, "{}", r.upper_estimate);
}

#[test]
fn coincident_points() {
    let k: Metric = Arc::new(Klein::new(2).unwrap());
    let r = pseudo_distance_upper(&k, &[0.2, 0.1], &[0.2, 0.1], &PseudoDistanceOptions::default()).unwrap();
    assert_eq!(r.upper_estimate, 0.0);
}

#[test]
fn budget_doubling_never_increases() {
    let k: Metric = Arc::new(Klein::new(2).unwrap());
    let mut last = f64::INFINITY;
    for budget in [16, 32, 64, 128] {
        let opts = PseudoDistanceOptions { budget, ..Default::default() };
        let v = pseudo_distance_upper(&k, &[-0.3, 0.2], &[0.4, 0.1], &opts).unwrap().upper_estimate;
        assert!(v <= last, "budget {budget}: {v} > {last}");
        last = v;
    }
}

#[test]
fn klein_schwarz_ratio_closed_form() {
    let k: Metric = Arc::new(Klein::new(2).unwrap());
    let link = ChainLink::build(&k, &[0.0, 0.0], &[0.5, 0.0], 1.0, &ConnectOptions::default(), 50.0).unwrap();
    let grid = [-0.5, 0.0, 0.5];
    let r = schwarz_ratio(&link, &grid, 1.0).unwrap();
    for (u, h) in grid.iter().zip(&r.h) {
        assert!((h - 1.0 / (1.0 + u)).abs() < 1e-6, "u = {u}: {h}");
    }
    assert!(r.hypothesis.pass);
}

#[test]
fn lower_bound_requires_ricci_bound() {
    let e: Metric = Arc::new(Euclidean::new(2));
    let opts = PseudoDistanceOptions { c: Some(1.0), ..Default::default() };
    let report = pseudo_distance_upper(&e, &[0.0, 0.0], &[1.0, 0.0], &opts).unwrap();
    assert!(report.hypothesis.is_none());
    assert!(report.lower_bound.is_none());

    let k: Metric = Arc::new(Klein::new(2).unwrap());
    let report = pseudo_distance_upper(&k, &[0.0, 0.0], &[0.5, 0.0], &opts).unwrap();
    assert!(report.hypothesis.as_ref().is_some_and(|h| h.pass));
    let lb = report.lower_bound.unwrap();
    assert!((lb - 2.0 * 0.5f64.atanh()).abs() < 1e-8, "{lb}");
}
