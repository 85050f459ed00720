use super::*;
use crate::domain::Shape;
use crate::minkowski::{GaussianBump, MatrixField, OneFormField};
use nalgebra::DMatrix;

fn bump() -> FiberNorm {
    FiberNorm::conformal(
        2,
        vec![GaussianBump {
            center: vec![0.2, 0.1],
            sigma: 0.2,
            amplitude: 1.0,
        }],
    )
    .unwrap()
}

fn randers() -> FiberNorm {
    FiberNorm::randers(MatrixField::identity(2), OneFormField::constant(&[0.5, 0.0])).unwrap()
}

fn disk() -> Domain {
    Domain::unit_disk(64)
}

fn strip() -> Domain {
    Domain::new(
        Shape::Stadium {
            half_length: 2.0,
            radius: 0.5,
        },
        64,
    )
    .unwrap()
}

/// Christoffel symbols of a metric field from differences of its matrix.
fn christoffel_acceleration(metric: &MatrixField, x: &[f64], y: &[f64]) -> Vec<f64> {
    let h = 1e-5;
    let dg: Vec<DMatrix<f64>> = (0..2)
        .map(|k| {
            let mut a = x.to_vec();
            let mut b = x.to_vec();
            a[k] += h;
            b[k] -= h;
            (metric.matrix_at(&a) - metric.matrix_at(&b)) / (2.0 * h)
        })
        .collect();
    let ginv = metric.matrix_at(x).try_inverse().unwrap();
    let mut acc = vec![0.0; 2];
    for (i, a) in acc.iter_mut().enumerate() {
        for l in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    let gam = 0.5 * (dg[j][(l, k)] + dg[k][(l, j)] - dg[l][(j, k)]);
                    *a -= ginv[(i, l)] * gam * y[j] * y[k];
                }
            }
        }
    }
    acc
}

#[test]
fn flat_spray_vanishes() {
    let a = spray(&FiberNorm::euclidean(2), &[0.3, 0.1], &[1.0, 2.0], 2.0).unwrap();
    assert_eq!(a, vec![0.0, 0.0]);
    let a = spray(&randers(), &[0.3, 0.1], &[1.0, 2.0], 2.0).unwrap();
    assert_eq!(a, vec![0.0, 0.0]);
}

#[test]
fn conformal_spray_matches_christoffel_symbols() {
    let n = bump();
    let FiberNorm::Riemannian { metric } = &n else { unreachable!() };
    for (x, y) in [([0.1, 0.0], [1.0, 0.3]), ([0.3, 0.3], [-0.2, 0.9]), ([-0.5, 0.2], [0.4, -0.4])] {
        let a = spray(&n, &x, &y, 2.0).unwrap();
        let c = christoffel_acceleration(metric, &x, &y);
        for i in 0..2 {
            assert!((a[i] - c[i]).abs() < 1e-6 * (1.0 + c[i].abs()), "{a:?} {c:?}");
        }
    }
}

#[test]
fn generic_spray_agrees_with_closed_form() {
    let n = bump();
    let m = n.clone();
    let custom = FiberNorm::custom("bump", 2, move |x, y| m.value(x, y));
    for (x, y) in [([0.1, 0.0], [1.0, 0.3]), ([0.3, 0.3], [-0.2, 0.9])] {
        let a = spray(&n, &x, &y, 2.0).unwrap();
        let b = spray(&custom, &x, &y, 2.0).unwrap();
        for i in 0..2 {
            assert!((a[i] - b[i]).abs() < 1e-4 * (1.0 + a[i].abs()), "{a:?} {b:?}");
        }
    }
}

#[test]
fn spray_is_quadratic_in_velocity() {
    let n = bump();
    let nonconst = FiberNorm::randers(
        MatrixField::Conformal {
            dim: 2,
            bumps: vec![GaussianBump {
                center: vec![0.0, 0.0],
                sigma: 0.3,
                amplitude: 0.5,
            }],
        },
        OneFormField::constant(&[0.2, 0.1]),
    )
    .unwrap();
    for norm in [n, nonconst] {
        let x = [0.15, -0.05];
        let y = [0.7, -0.4];
        let a = spray(&norm, &x, &y, 2.0).unwrap();
        let b = spray(&norm, &x, &[2.0 * y[0], 2.0 * y[1]], 2.0).unwrap();
        for i in 0..2 {
            assert!((b[i] - 4.0 * a[i]).abs() <= 1e-8 * (4.0 * a[i].abs()).max(1e-3), "{a:?} {b:?}");
        }
    }
}

#[test]
fn flat_disk_exits() {
    let n = FiberNorm::euclidean(2);
    for dir in [[1.0, 0.0], [0.6, 0.8]] {
        let tr = integrate_geodesic(&n, &disk(), &PhasePoint::new(&[0.0, 0.0], &dir), 5.0, None).unwrap();
        let e = tr.exit.unwrap();
        assert!((e.time - 1.0).abs() < 1e-8);
        assert!((e.point[0] - dir[0]).abs() < 1e-8 && (e.point[1] - dir[1]).abs() < 1e-8);
        assert!(!e.tangential && (e.normal_component - 1.0).abs() < 1e-8);
    }
}

#[test]
fn conformal_speed_is_conserved_and_step_halving_agrees() {
    let n = bump();
    let f1 = Flow::for_domain(&n, &disk());
    let f2 = Flow::for_domain(&n, &disk()).with_step(f1.ds / 2.0);
    for a in [0.2, 1.1, 2.5, 4.0] {
        let st = PhasePoint::unit(&n, &[-0.4, -0.2], &[f64::cos(a), f64::sin(a)]).unwrap();
        let t1 = f1.integrate(None, &st, 2.0).unwrap();
        let t2 = f2.integrate(None, &st, 2.0).unwrap();
        assert!(t1.max_drift <= 1e-6 * 2.0);
        let e = crate::numeric::distance(&t1.end().x, &t2.end().x);
        assert!(e < 1e-8, "{e}");
    }
}

#[test]
fn reparameterization() {
    let n = bump();
    let fl = Flow::for_domain(&n, &disk());
    let x = [-0.3, 0.2];
    let y = [0.8, -0.1];
    let base = fl.integrate(None, &PhasePoint::new(&x, &y), 1.0).unwrap();
    for a in [0.5, 2.0] {
        let ya = [a * y[0], a * y[1]];
        let tr = fl.integrate(None, &PhasePoint::new(&x, &ya), 1.0 / a).unwrap();
        let e = crate::numeric::distance(&tr.end().x, &base.end().x);
        assert!(e < 1e-6, "{e}");
    }
}

#[test]
fn exp_map_flat() {
    let n = FiberNorm::euclidean(2);
    let p = exp_map(&n, &[0.0, 0.0], &[0.3, 0.4], 2.0).unwrap();
    assert!((p[0] - 0.3).abs() < 1e-12 && (p[1] - 0.4).abs() < 1e-12);
    let q = exp_map(&n, &[0.0, 0.0], &[0.15, 0.2], 2.0).unwrap();
    assert!((q[0] - 0.15).abs() < 1e-12 && (q[1] - 0.2).abs() < 1e-12);
}

#[test]
fn unit_normals() {
    let e = FiberNorm::euclidean(2);
    let nu = unit_normal(&e, &disk(), 0.0, Orientation::Inward, false).unwrap();
    assert!((nu[0] + 1.0).abs() < 1e-12 && nu[1].abs() < 1e-12);

    let r = randers();
    let theta = std::f64::consts::FRAC_PI_2;
    let z = disk().point(theta);
    for orientation in [Orientation::Inward, Orientation::Outward] {
        let nu = unit_normal(&r, &disk(), theta, orientation, false).unwrap();
        assert!((r.value(&z, &nu) - 1.0).abs() < 1e-10);
        let t = [-1.0, 0.0];
        let p = r.legendre(&z, &nu).unwrap();
        assert!(crate::numeric::dot(&p, &t).abs() < 1e-10);
        // independent oracle: the unit vector maximizing <n, v>
        let n_e = match orientation {
            Orientation::Inward => [0.0, -1.0],
            Orientation::Outward => [0.0, 1.0],
        };
        let (_, v) = r.dual_maximizer(&z, &n_e).unwrap();
        assert!(crate::numeric::distance(&v, &nu) < 1e-7, "{v:?} {nu:?}");
    }
    let b = bump();
    let f = unit_normal(&b, &disk(), 0.7, Orientation::Inward, false).unwrap();
    let g = unit_normal(&b, &disk(), 0.7, Orientation::Inward, true).unwrap();
    assert!(crate::numeric::distance(&f, &g) < 1e-12);
}

#[test]
fn normal_exponential_flat() {
    let e = FiberNorm::euclidean(2);
    let p = normal_exp(&e, &disk(), 0.0, 0.5).unwrap();
    assert!((p[0] - 0.5).abs() < 1e-12 && p[1].abs() < 1e-12);
    assert_eq!(normal_exp(&e, &disk(), 0.0, 0.0).unwrap(), vec![1.0, 0.0]);
}

#[test]
fn normal_exponential_step_halving() {
    let n = bump();
    let rev = n.reverse();
    let nu = unit_normal(&rev, &disk(), 1.0, Orientation::Inward, false).unwrap();
    let z = disk().point(1.0);
    let fl = Flow::for_domain(&rev, &disk()).with_step(1e-3);
    let fine = fl.integrate(None, &PhasePoint::new(&z, &nu), 0.8).unwrap();
    let p = normal_exp(&n, &disk(), 1.0, 0.8).unwrap();
    assert!(crate::numeric::distance(&p, &fine.end().x) < 1e-8);
}

#[test]
fn disk_focuses_at_center() {
    let e = FiberNorm::euclidean(2);
    let (_, det) = jacobian_normal_exp(&e, &disk(), 0.3, 1.0).unwrap();
    assert!(det.abs() < 1e-6);
    let (_, det) = jacobian_normal_exp(&e, &disk(), 0.3, 0.5).unwrap();
    assert!((det - 0.5).abs() < 1e-6);
    let f = focal_distance(&e, &disk(), 0.3, 1.5).unwrap().unwrap();
    assert!((f - 1.0).abs() < 1e-3);
}

#[test]
fn strip_has_no_focal_points() {
    let e = FiberNorm::euclidean(2);
    // theta on the straight upper side
    let theta = strip().param_of(&[0.3, 0.5]);
    assert!(focal_distance(&e, &strip(), theta, 2.0).unwrap().is_none());
}

#[test]
fn bump_focal_distance_matches_dense_scan() {
    let n = FiberNorm::conformal(
        2,
        vec![GaussianBump {
            center: vec![0.0, 0.0],
            sigma: 0.3,
            amplitude: -0.8,
        }],
    )
    .unwrap();
    let coarse = focal_distance(&n, &disk(), 0.4, 2.0).unwrap();
    let dense = focal_distance_scan(&n, &disk(), 0.4, 2.0, 1024).unwrap();
    match (coarse, dense) {
        (Some(a), Some(b)) => assert!((a - b).abs() < 2e-4, "{a} {b}"),
        (a, b) => panic!("{a:?} {b:?}"),
    }
}

#[test]
fn trajectory_csv_header() {
    let n = FiberNorm::euclidean(2);
    let tr = integrate_geodesic(&n, &disk(), &PhasePoint::new(&[0.0, 0.0], &[1.0, 0.0]), 0.01, None).unwrap();
    let csv = tr.to_csv(&n);
    assert!(csv.starts_with("t,x1,x2,y1,y2,speed\n"));
}

#[test]
fn boundary_cut_distances_flat_disk() {
    use crate::distance::{DistanceOracle, OracleOptions};
    let n = FiberNorm::euclidean(2);
    let o = DistanceOracle::new(&n, &disk(), OracleOptions::new(0.04)).unwrap();
    let tb = o.to_boundary();
    let coarse = boundary_cut_distance(&o, &tb, 0.7, 3.0).unwrap();
    assert!((coarse.tau - 1.0).abs() < 3e-3, "{coarse:?}");
    let fine = boundary_cut_distance_refined(&o, &tb, 0.7, 3.0).unwrap();
    assert!((fine.tau - 1.0).abs() < 2.0 * cut::REFINED_RESOLUTION * 2.0, "{fine:?}");
    let nu = unit_normal(&n, &disk(), 0.7, Orientation::Inward, false).unwrap();
    let cut = cut_distance(&o, true, &disk().point(0.7), &nu, 3.0).unwrap();
    assert!(cut.censored && (cut.tau - 2.0).abs() < 1e-6);
}

#[test]
fn lens_boundary_cut_precedes_focal_points() {
    use crate::distance::{DistanceOracle, OracleOptions};
    let n = FiberNorm::conformal(
        2,
        vec![GaussianBump {
            center: vec![0.0, 0.0],
            sigma: 0.25,
            amplitude: -1.0,
        }],
    )
    .unwrap();
    let o = DistanceOracle::new(&n, &disk(), OracleOptions::new(0.02)).unwrap();
    let tb = o.to_boundary();
    for theta in [0.3, 2.0, 4.4] {
        let cut = boundary_cut_distance_refined(&o, &tb, theta, 4.0).unwrap();
        let focal = focal_distance(&n, &disk(), theta, 4.0).unwrap().unwrap();
        assert!(cut.tau <= focal + 2e-3, "{cut:?} {focal}");
    }
}
