//! Small dense helpers shared by the geometry modules.
//!
//! Points and fiber vectors are plain `&[f64]` slices of length 2 or 3; the
//! helpers here keep the hot paths allocation free where possible.

use nalgebra::DMatrix;

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

pub fn scale(a: &[f64], s: f64) -> Vec<f64> {
    a.iter().map(|x| x * s).collect()
}

/// `a + s * b`
pub fn axpy(a: &[f64], s: f64, b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + s * y).collect()
}

pub fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

pub fn all_finite(a: &[f64]) -> bool {
    a.iter().all(|v| v.is_finite())
}

/// Wraps an angle into `(-pi, pi]`.
pub fn wrap_angle(a: f64) -> f64 {
    let two_pi = std::f64::consts::TAU;
    let mut r = a.rem_euclid(two_pi);
    if r > std::f64::consts::PI {
        r -= two_pi;
    }
    r
}

/// Central-difference gradient of a scalar function.
pub fn gradient_fd<F: Fn(&[f64]) -> f64>(f: F, y: &[f64], h: f64) -> Vec<f64> {
    let mut buf = y.to_vec();
    (0..y.len())
        .map(|i| {
            buf[i] = y[i] + h;
            let fp = f(&buf);
            buf[i] = y[i] - h;
            let fm = f(&buf);
            buf[i] = y[i];
            (fp - fm) / (2.0 * h)
        })
        .collect()
}

/// Central-difference Hessian of a scalar function; symmetric by construction.
pub fn hessian_fd<F: Fn(&[f64]) -> f64>(f: F, y: &[f64], h: f64) -> DMatrix<f64> {
    let n = y.len();
    let mut hess = DMatrix::zeros(n, n);
    let mut buf = y.to_vec();
    let f0 = f(y);
    for i in 0..n {
        buf[i] = y[i] + h;
        let fp = f(&buf);
        buf[i] = y[i] - h;
        let fm = f(&buf);
        buf[i] = y[i];
        hess[(i, i)] = (fp - 2.0 * f0 + fm) / (h * h);
        for j in (i + 1)..n {
            let mut eval = |si: f64, sj: f64| {
                buf[i] = y[i] + si * h;
                buf[j] = y[j] + sj * h;
                let v = f(&buf);
                buf[i] = y[i];
                buf[j] = y[j];
                v
            };
            let v = (eval(1.0, 1.0) - eval(1.0, -1.0) - eval(-1.0, 1.0) + eval(-1.0, -1.0))
                / (4.0 * h * h);
            hess[(i, j)] = v;
            hess[(j, i)] = v;
        }
    }
    hess
}

pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Smallest eigenvalue of a symmetric matrix.
pub fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    m.clone()
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min)
}

/// Eigenvalue ratio of a symmetric positive definite matrix; infinity if singular.
pub fn condition_number(m: &DMatrix<f64>) -> f64 {
    let svd = m.clone().svd(false, false);
    let s = &svd.singular_values;
    let max = s.iter().cloned().fold(0.0, f64::max);
    let min = s.iter().cloned().fold(f64::INFINITY, f64::min);
    if min <= 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Quasi-uniform points on the unit sphere (Fibonacci lattice).
pub fn fibonacci_sphere(count: usize) -> Vec<[f64; 3]> {
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    (0..count)
        .map(|i| {
            let z = 1.0 - 2.0 * (i as f64 + 0.5) / count as f64;
            let r = (1.0 - z * z).max(0.0).sqrt();
            let phi = golden * i as f64;
            [r * phi.cos(), r * phi.sin(), z]
        })
        .collect()
}

/// Unit directions used to seed searches over a fiber sphere:
/// `count` equally spaced angles in 2-D, a Fibonacci lattice in 3-D.
pub fn sphere_seeds(dim: usize, count: usize) -> Vec<Vec<f64>> {
    match dim {
        2 => (0..count)
            .map(|i| {
                let a = std::f64::consts::TAU * i as f64 / count as f64;
                vec![a.cos(), a.sin()]
            })
            .collect(),
        3 => fibonacci_sphere(count).into_iter().map(|p| p.to_vec()).collect(),
        _ => panic!("fiber dimension {dim} not supported"),
    }
}

/// Orthonormal basis of the tangent plane of the unit sphere at `u` (3-D).
pub fn tangent_basis3(u: &[f64]) -> ([f64; 3], [f64; 3]) {
    let a = if u[0].abs() < 0.9 {
        [1.0, 0.0, 0.0]
    } else {
        [0.0, 1.0, 0.0]
    };
    let d = dot(&a, u);
    let mut e1 = [a[0] - d * u[0], a[1] - d * u[1], a[2] - d * u[2]];
    let n1 = norm(&e1);
    e1.iter_mut().for_each(|v| *v /= n1);
    let e2 = [
        u[1] * e1[2] - u[2] * e1[1],
        u[2] * e1[0] - u[0] * e1[2],
        u[0] * e1[1] - u[1] * e1[0],
    ];
    (e1, e2)
}

/// Two-point Gauss-Legendre nodes on [0, 1].
pub const GAUSS2: [(f64, f64); 2] = [
    (0.211_324_865_405_187_1, 0.5),
    (0.788_675_134_594_812_9, 0.5),
];

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fd_hessian_of_quadratic_is_exact() {
        let f = |y: &[f64]| 2.0 * y[0] * y[0] + y[0] * y[1] + 3.0 * y[1] * y[1];
        let h = hessian_fd(f, &[0.3, -0.2], 1e-3);
        assert!((h[(0, 0)] - 4.0).abs() < 1e-6);
        assert!((h[(0, 1)] - 1.0).abs() < 1e-6);
        assert!((h[(1, 1)] - 6.0).abs() < 1e-6);
    }

    #[test]
    fn wrap_angle_range() {
        assert!((wrap_angle(3.0 * std::f64::consts::PI) - std::f64::consts::PI).abs() < 1e-12);
        assert!((wrap_angle(-0.5) + 0.5).abs() < 1e-15);
    }

    #[test]
    fn fibonacci_points_are_unit() {
        for p in fibonacci_sphere(50) {
            assert!((norm(&p) - 1.0).abs() < 1e-12);
        }
    }
}
