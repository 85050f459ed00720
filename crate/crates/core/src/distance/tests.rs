use super::*;
use crate::domain::Shape;
use crate::geodesic::PhasePoint;
use crate::minkowski::{GaussianBump, MatrixField, OneFormField};
use std::f64::consts::TAU;

fn randers() -> FiberNorm {
    FiberNorm::randers(MatrixField::identity(2), OneFormField::constant(&[0.5, 0.0])).unwrap()
}

fn disk() -> Domain {
    Domain::unit_disk(128)
}

fn strong_bump() -> FiberNorm {
    FiberNorm::conformal(
        2,
        vec![GaussianBump {
            center: vec![0.0, 0.0],
            sigma: 0.25,
            amplitude: 1.5,
        }],
    )
    .unwrap()
}

#[test]
fn ring_offset_counts() {
    assert_eq!(ring_offsets(1).len(), 8);
    assert_eq!(ring_offsets(2).len(), 16);
    assert_eq!(ring_offsets(3).len(), 32);
}

#[test]
fn curve_lengths() {
    let e = FiberNorm::euclidean(2);
    assert_eq!(curve_length(&e, &[vec![0.0, 0.0], vec![1.0, 0.0]]).unwrap(), 1.0);
    let fwd = vec![vec![0.0, 0.0], vec![0.5, 0.0], vec![1.0, 0.0]];
    let back: Vec<Vec<f64>> = fwd.iter().rev().cloned().collect();
    assert!((curve_length(&randers(), &fwd).unwrap() - 1.5).abs() < 1e-14);
    assert!((curve_length(&randers(), &back).unwrap() - 0.5).abs() < 1e-14);
    let r = 0.7;
    let circle: Vec<Vec<f64>> = (0..=10_000)
        .map(|i| {
            let t = TAU * i as f64 / 10_000.0;
            vec![r * t.cos(), r * t.sin()]
        })
        .collect();
    assert!((curve_length(&e, &circle).unwrap() - TAU * r).abs() < 1e-4);
    assert!(curve_length(&e, &circle[..1]).is_err());
}

#[test]
fn flat_and_randers_oracle() {
    let o = DistanceOracle::new(&FiberNorm::euclidean(2), &disk(), OracleOptions::new(0.02)).unwrap();
    let d = o.distance(&[0.0, 0.0], &[1.0, 0.0]).unwrap();
    assert!((d - 1.0).abs() < 0.01);
    let (a, b) = ([0.1, -0.3], [-0.4, 0.5]);
    let ab = o.distance(&a, &b).unwrap();
    let ba = o.distance(&b, &a).unwrap();
    assert!((ab - ba).abs() <= 2.0 * o.abs_tolerance(ab));

    let o = DistanceOracle::new(&randers(), &disk(), OracleOptions::new(0.02)).unwrap();
    let d = o.distance(&[0.0, 0.0], &[0.9, 0.0]).unwrap();
    assert!((d - 1.35).abs() < 0.01 * 1.35);
    let d = o.distance(&[0.9, 0.0], &[0.0, 0.0]).unwrap();
    assert!((d - 0.45).abs() < 0.01 * 0.45);
}

#[test]
fn plain_graph_error_without_shortcuts() {
    // the k-ring graph alone overestimates between lattice directions
    let mut opts = OracleOptions::new(0.02);
    opts.any_angle = false;
    let o = DistanceOracle::new(&FiberNorm::euclidean(2), &disk(), opts).unwrap();
    let f = o.forward_from(&[0.0, 0.0]).unwrap();
    let worst = f
        .boundary_values(&o)
        .iter()
        .map(|v| (v - 1.0).abs())
        .fold(0.0, f64::max);
    assert!(worst > 1e-3 && worst < 0.015, "{worst}");
}

#[test]
fn shooting_flat_and_randers() {
    let e = FiberNorm::euclidean(2);
    let s = shoot_distance(&e, &disk(), &[0.0, 0.0], 1.0, None).unwrap();
    assert!((s.distance - 1.0).abs() < 1e-9);
    let dir = s.direction.unwrap();
    assert!((dir[0] - 1f64.cos()).abs() < 1e-7 && (dir[1] - 1f64.sin()).abs() < 1e-7);

    let r = randers();
    let o = DistanceOracle::new(&r, &disk(), OracleOptions::new(0.02)).unwrap();
    for (k, x) in disk().interior_samples(10, 0.1, 3).iter().enumerate() {
        let f = o.forward_from(x).unwrap();
        let theta = 0.6 * k as f64;
        let s = shoot_distance(&r, &disk(), x, theta, Some((&o, &f))).unwrap();
        let od = s.oracle_distance.unwrap();
        assert!((s.distance - od).abs() <= 0.01 * od, "{} {od}", s.distance);
        assert_eq!(s.minimizing, Some(true));
    }
}

#[test]
fn shooting_finds_non_minimizing_geodesics_through_a_bump() {
    let n = strong_bump();
    let o = DistanceOracle::new(&n, &disk(), OracleOptions::new(0.02)).unwrap();
    let x = [-0.7, 0.0];
    let f = o.forward_from(&x).unwrap();
    let s = shoot_distance(&n, &disk(), &x, 0.0, Some((&o, &f))).unwrap();
    let od = s.oracle_distance.unwrap();
    assert!(s.arrivals.len() >= 2);
    let through = s.arrivals.iter().cloned().fold(0.0, f64::max);
    assert!(through > od + o.abs_tolerance(od));
    assert!((s.distance - od).abs() <= o.abs_tolerance(od) + 1e-3 * od);
}

#[test]
fn boundary_distance_functions_flat() {
    let o = DistanceOracle::new(&FiberNorm::euclidean(2), &disk(), OracleOptions::new(0.02)).unwrap();
    let r = boundary_distance_function(&o, &[0.0, 0.0]).unwrap();
    assert!(r.values.iter().all(|v| (v - 1.0).abs() < 1e-9));
    let r = boundary_distance_function(&o, &[0.5, 0.0]).unwrap();
    let min = r.values.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = r.values.iter().cloned().fold(0.0, f64::max);
    assert!((min - 0.5).abs() < 1e-9 && (max - 1.5).abs() < 1e-9);
    assert!(r.clone().blinded().source.is_none());
}

#[test]
fn boundary_distance_function_randers_spot_check() {
    let r = randers();
    let o = DistanceOracle::new(&r, &disk(), OracleOptions::new(0.02)).unwrap();
    let x = [0.2, -0.3];
    let bdf = boundary_distance_function(&o, &x).unwrap();
    for (k, node) in disk().boundary_mesh().iter().enumerate().step_by(16) {
        let d = [node.point[0] - x[0], node.point[1] - x[1]];
        let exact = r.value(&x, &d);
        assert!((bdf.values[k] - exact).abs() < 1e-9 * exact + 1e-12);
    }
}

#[test]
fn quasi_symmetry() {
    let o = DistanceOracle::new(&FiberNorm::euclidean(2), &disk(), OracleOptions::new(0.02)).unwrap();
    let pairs = random_pairs(&disk(), 100, 0.05, 0.1, 9);
    let l = quasi_symmetry_constant(&o, &pairs).unwrap();
    assert!(l >= 1.0 && l < 1.0 + 2.0 * o.tolerance());
    let o = DistanceOracle::new(&randers(), &disk(), OracleOptions::new(0.02)).unwrap();
    let mut pairs = random_pairs(&disk(), 100, 0.05, 0.1, 9);
    pairs.push((vec![-0.5, 0.0], vec![0.5, 0.0]));
    let l = quasi_symmetry_constant(&o, &pairs).unwrap();
    assert!((l - 3.0).abs() < 1e-6, "{l}");
}

#[test]
fn flat_directions_are_good() {
    let o = DistanceOracle::new(&FiberNorm::euclidean(2), &disk(), OracleOptions::new(0.02)).unwrap();
    let probe = GoodSetProbe::new(&o, &[0.3, -0.2]).unwrap();
    for k in 0..16 {
        let a = TAU * k as f64 / 16.0;
        let v = [a.cos(), a.sin()];
        assert_eq!(probe.classify(&v).unwrap().class, GClass::InG);
    }
    assert!(probe.classify_hat(&[0.6, 0.8]).unwrap());
    assert!(classify_ghat(&o, &[1.0, 0.0], &[1.0, 0.2]).unwrap());
}

#[test]
fn bump_ray_is_not_minimizing() {
    let n = strong_bump();
    let o = DistanceOracle::new(&n, &disk(), OracleOptions::new(0.02)).unwrap();
    assert_eq!(classify_g(&o, &[-0.7, 0.0], &[1.0, 0.0]).unwrap(), GClass::NotMinimizing);
}

#[test]
fn two_minimizers_break_smoothness() {
    // behind a symmetric bump the two minimizers around it meet on the axis
    let n = strong_bump();
    let o = DistanceOracle::new(&n, &disk(), OracleOptions::new(0.02)).unwrap();
    let x = [-0.7, 0.0];
    let f = o.forward_from(&x).unwrap();
    let s = shoot_distance(&n, &disk(), &x, 0.0, Some((&o, &f))).unwrap();
    let v = s.direction.unwrap();
    let probe = GoodSetProbe::new(&o, &x).unwrap();
    assert_eq!(probe.classify(&v).unwrap().class, GClass::InG);
    assert!(!probe.classify_hat(&v).unwrap());
}

#[test]
fn tangential_exit_at_an_inflection_point() {
    let d = Domain::new(
        Shape::Star {
            radius: 1.0,
            amplitude: 0.25,
            lobes: 3,
        },
        128,
    )
    .unwrap();
    // locate an inflection of the boundary: sign change of the curvature
    let curv = |t: f64| {
        let a = d.tangent(t);
        let (p, m) = (d.tangent(t + 1e-5), d.tangent(t - 1e-5));
        let b = [(p[0] - m[0]) / 2e-5, (p[1] - m[1]) / 2e-5];
        a[0] * b[1] - a[1] * b[0]
    };
    let (mut lo, mut hi) = (0.0, std::f64::consts::FRAC_PI_3);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if curv(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let ti = 0.5 * (lo + hi);
    let z = d.point(ti);
    let t = d.tangent(ti);
    let tn = (t[0] * t[0] + t[1] * t[1]).sqrt();
    let t = [t[0] / tn, t[1] / tn];
    // approach along the tangent line from the side where it lies inside
    let dir = if d.clearance(&[z[0] - 0.05 * t[0], z[1] - 0.05 * t[1]]) > 0.0 {
        t
    } else {
        [-t[0], -t[1]]
    };
    let x = [z[0] - 0.3 * dir[0], z[1] - 0.3 * dir[1]];
    assert!(d.clearance(&x) > 0.0);
    let n = FiberNorm::euclidean(2);
    let o = DistanceOracle::new(&n, &d, OracleOptions::new(0.02)).unwrap();
    assert_eq!(classify_g(&o, &x, &dir).unwrap(), GClass::TangentialExit);
    let tr = crate::geodesic::integrate_geodesic(&n, &d, &PhasePoint::new(&x, &dir), 2.0, None).unwrap();
    assert!(crate::numeric::distance(&tr.exit.unwrap().point, &z) < 1e-3);
}

#[test]
fn calibration_on_flat_disk() {
    let c = calibrate_flat(&disk(), &OracleOptions::new(0.02), 4, 1).unwrap();
    assert!(c.flat_max_rel_error < 1e-9);
    assert_eq!(c.eps, EPS_FLOOR);
}

#[test]
fn directed_triangle_inequality() {
    let n = FiberNorm::conformal(
        2,
        vec![GaussianBump {
            center: vec![0.2, 0.1],
            sigma: 0.2,
            amplitude: 1.0,
        }],
    )
    .unwrap();
    let o = DistanceOracle::new(&n, &disk(), OracleOptions::new(0.03)).unwrap();
    let pts = disk().interior_samples(6, 0.05, 11);
    let fields: Vec<SourceField> = pts.iter().map(|p| o.forward_from(p).unwrap()).collect();
    for a in 0..6 {
        for b in 0..6 {
            for c in 0..6 {
                let ab = fields[a].query(&o, &pts[b]).unwrap();
                let bc = fields[b].query(&o, &pts[c]).unwrap();
                let ac = fields[a].query(&o, &pts[c]).unwrap();
                assert!(ac <= ab + bc + 2.0 * o.abs_tolerance(ac));
            }
        }
    }
}
