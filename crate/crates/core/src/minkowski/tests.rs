use super::*;
use crate::elastic::StiffnessField;
use nalgebra::DMatrix;
use proptest::prelude::*;

fn randers() -> FiberNorm {
    FiberNorm::randers(MatrixField::identity(2), OneFormField::constant(&[0.5, 0.0])).unwrap()
}

fn aniso() -> FiberNorm {
    FiberNorm::riemannian(DMatrix::from_row_slice(2, 2, &[4.0, 0.0, 0.0, 1.0])).unwrap()
}

fn bumpy() -> FiberNorm {
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

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

#[test]
fn euclidean_values() {
    let e = FiberNorm::euclidean(2);
    assert_eq!(e.eval(&[0.0, 0.0], &[3.0, 4.0]).unwrap(), 5.0);
    assert_eq!(e.eval(&[0.0, 0.0], &[0.0, 0.0]).unwrap(), 0.0);
    assert_eq!(e.legendre(&[0.0, 0.0], &[3.0, 4.0]).unwrap().0, vec![3.0, 4.0]);
    assert!(close(e.dual_norm(&[0.0, 0.0], &[3.0, 4.0]).unwrap(), 5.0, 1e-12));
    let y = e.legendre_inverse(&[0.0, 0.0], &[3.0, 4.0]).unwrap();
    assert!(close(y[0], 3.0, 1e-7) && close(y[1], 4.0, 1e-7));
    let g = e.fundamental_tensor(&[0.1, 0.2], &[0.3, -1.0]).unwrap();
    assert!((g.matrix - DMatrix::identity(2, 2)).norm() < 1e-15);
}

#[test]
fn zero_vector_is_a_domain_error() {
    let e = FiberNorm::euclidean(2);
    assert!(matches!(e.fundamental_tensor(&[0.0, 0.0], &[0.0, 0.0]), Err(Error::Domain(_))));
    assert!(matches!(e.legendre(&[0.0, 0.0], &[0.0, 0.0]), Err(Error::Domain(_))));
    assert!(matches!(e.dual_norm(&[0.0, 0.0], &[0.0, 0.0]), Err(Error::Domain(_))));
    assert!(matches!(e.eval(&[0.0, f64::NAN], &[1.0, 0.0]), Err(Error::Input(_))));
}

#[test]
fn riemannian_index_lowering_and_raising() {
    let n = aniso();
    let x = [0.0, 0.0];
    assert_eq!(n.legendre(&x, &[1.0, 0.0]).unwrap().0, vec![4.0, 0.0]);
    assert!(close(n.dual_norm(&x, &[1.0, 0.0]).unwrap(), 0.5, 1e-12));
    let y = n.legendre_inverse(&x, &[4.0, 0.0]).unwrap();
    assert!(close(y[0], 1.0, 1e-7) && close(y[1], 0.0, 1e-7));
}

#[test]
fn randers_values_and_duality() {
    let n = randers();
    let x = [0.0, 0.0];
    assert!(close(n.eval(&x, &[1.0, 0.0]).unwrap(), 1.5, 1e-15));
    assert!(close(n.eval(&x, &[-1.0, 0.0]).unwrap(), 0.5, 1e-15));
    let p = n.legendre(&x, &[1.0, 0.0]).unwrap();
    assert!(close(p[0], 2.25, 1e-14));
    let p = n.legendre(&x, &[0.0, 1.0]).unwrap();
    assert!(close(n.dual_norm(&x, &p).unwrap(), 1.0, 1e-10));
    let p = n.legendre(&x, &[0.6, 0.8]).unwrap();
    let y = n.legendre_inverse(&x, &p).unwrap();
    assert!(close(y[0], 0.6, 1e-6) && close(y[1], 0.8, 1e-6));
}

#[test]
fn randers_tensor_matches_fd_hessian() {
    let n = randers();
    let x = [0.0, 0.0];
    let y = [0.0, 1.0];
    let g = n.fundamental_tensor(&x, &y).unwrap();
    let fd = hessian_fd(|v: &[f64]| 0.5 * n.value(&x, v).powi(2), &y, 1e-4);
    assert!((g.matrix - fd).norm() < 1e-6);
}

#[test]
fn randers_rejects_large_one_form() {
    assert!(FiberNorm::randers(MatrixField::identity(2), OneFormField::constant(&[1.0, 0.0])).is_err());
}

#[test]
fn reversal() {
    let r = randers().reverse();
    let x = [0.0, 0.0];
    assert!(close(r.eval(&x, &[1.0, 0.0]).unwrap(), 0.5, 1e-15));
    let rr = r.reverse();
    for y in crate::numeric::sphere_seeds(2, 16) {
        assert_eq!(rr.value(&x, &y), randers().value(&x, &y));
    }
    let c = FiberNorm::custom("shifted", 2, |_x, y| (y[0] * y[0] + y[1] * y[1]).sqrt() + 0.3 * y[1]);
    assert!(close(c.reverse().value(&x, &[0.0, 1.0]), 0.7, 1e-15));
    assert!(close(c.reverse().reverse().value(&x, &[0.0, 1.0]), 1.3, 1e-15));
}

#[test]
fn isotropic_qp_reversal_is_symmetric() {
    let n = FiberNorm::QpDual {
        medium: StiffnessField::isotropic(2.0, 1.0, 1.0).unwrap(),
    };
    let r = n.reverse();
    let x = [0.0; 3];
    for y in crate::numeric::sphere_seeds(3, 100) {
        assert!(close(n.value(&x, &y), r.value(&x, &y), 1e-12));
        assert!(close(n.value(&x, &y), 0.5, 1e-9));
    }
}

#[test]
fn qp_round_trips_on_ti_medium() {
    let m = StiffnessField::transversely_isotropic(20.0, 6.0, 12.0, 3.5, 6.5, 1.0).unwrap();
    let n = FiberNorm::QpDual { medium: m.clone() };
    let x = [0.0; 3];
    for y in crate::numeric::sphere_seeds(3, 50) {
        let f = n.value(&x, &y);
        let p = n.legendre(&x, &y).unwrap();
        assert!(close(m.conorm(&x, &p), f, 1e-10 * f));
        // <p, y> = F(y)^2 at the maximizer
        assert!(close(crate::numeric::dot(&p, &y), f * f, 1e-8 * f * f));
        let back = n.legendre_inverse(&x, &p).unwrap();
        let err = crate::numeric::distance(&back, &y);
        assert!(err < 1e-6, "{err}");
        assert!(euler_residual(&n, &x, &y).unwrap() < 1e-8);
    }
}

#[test]
fn perturbed_with_zero_amplitude_is_base() {
    let b = DirectionalBump {
        center: vec![0.0, 0.0],
        radius: 0.3,
        angle: 0.0,
        half_width: 0.5,
    };
    let h = FiberNorm::perturbed(bumpy(), 0.0, b.clone());
    let x = [0.05, 0.0];
    for y in crate::numeric::sphere_seeds(2, 8) {
        assert_eq!(h.value(&x, &y), bumpy().value(&x, &y));
    }
    let h = FiberNorm::perturbed(FiberNorm::euclidean(2), 0.1, b);
    assert!(h.value(&x, &[1.0, 0.0]) > 1.0);
    assert!(close(h.reverse().value(&x, &[-1.0, 0.0]), h.value(&x, &[1.0, 0.0]), 1e-15));
    assert!(h.fundamental_tensor(&x, &[1.0, 0.0]).unwrap().min_eigenvalue() > 0.0);
}

fn families() -> Vec<FiberNorm> {
    vec![FiberNorm::euclidean(2), aniso(), randers(), bumpy()]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn homogeneity(k in 0usize..4, x0 in -0.8f64..0.8, x1 in -0.5f64..0.5, a in 0.0f64..6.3, s in 0.01f64..10.0) {
        let n = &families()[k];
        let x = [x0, x1];
        let y = [a.cos(), a.sin()];
        let ys = [s * y[0], s * y[1]];
        let f = n.value(&x, &y);
        prop_assert!((n.value(&x, &ys) - s * f).abs() <= 1e-12 * s * f);
        let g1 = n.fundamental_tensor(&x, &y).unwrap().matrix;
        let g2 = n.fundamental_tensor(&x, &ys).unwrap().matrix;
        prop_assert!((g1 - g2).norm() <= 1e-9);
    }

    #[test]
    fn duality_identities(k in 0usize..4, x0 in -0.8f64..0.8, x1 in -0.5f64..0.5, a in 0.0f64..6.3, s in 0.1f64..3.0) {
        let n = &families()[k];
        let x = [x0, x1];
        let y = [s * a.cos(), s * a.sin()];
        let f = n.value(&x, &y);
        let p = n.legendre(&x, &y).unwrap();
        prop_assert!((n.dual_norm(&x, &p).unwrap() - f).abs() <= 1e-8 * f);
        let back = n.legendre_inverse(&x, &p).unwrap();
        prop_assert!(crate::numeric::distance(&back, &y) <= 1e-6 * s);
        prop_assert!(euler_residual(n, &x, &y).unwrap() <= 1e-9);
        let ay = [2.0 * y[0], 2.0 * y[1]];
        let p2 = n.legendre(&x, &ay).unwrap();
        prop_assert!((p2[0] - 2.0 * p[0]).abs() + (p2[1] - 2.0 * p[1]).abs() <= 1e-9 * (1.0 + f));
    }
}
