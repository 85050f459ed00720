//! Unit normals, the normal exponential map and focal distances.
//!
//! The normal exponential map follows the reversed norm: `exp⊥(z, s)` is the
//! point at parameter `s` on the `F̄`-geodesic leaving `z(theta)` along the
//! inward `F̄`-unit normal. Its distance to the boundary is measured with `F`.

use nalgebra::Matrix2;
use serde::Serialize;

use super::{Flow, PhasePoint, Trajectory};
use crate::domain::Domain;
use crate::error::{Error, Result};
use crate::minkowski::FiberNorm;
use crate::numeric::dot;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    Inward,
    Outward,
}

/// Step in the boundary parameter for the Jacobian of `exp⊥`.
pub const JACOBIAN_STEP: f64 = 1e-5;

/// `F`-unit vector `nu` at `z(theta)` with `g_nu(nu, w) = 0` for boundary
/// tangents `w`; with `reversed` the same for the reversed norm.
pub fn unit_normal(
    norm: &FiberNorm,
    domain: &Domain,
    theta: f64,
    orientation: Orientation,
    reversed: bool,
) -> Result<Vec<f64>> {
    if reversed {
        return unit_normal(&norm.reverse(), domain, theta, orientation, false);
    }
    let z = domain.point(theta);
    let t = domain.tangent(theta);
    let tn = (t[0] * t[0] + t[1] * t[1]).sqrt();
    let t = [t[0] / tn, t[1] / tn];
    let n_out = domain.outward_normal(theta);
    let n_e = match orientation {
        Orientation::Outward => n_out,
        Orientation::Inward => [-n_out[0], -n_out[1]],
    };
    // residual of the orthogonality condition, homogeneous of degree zero
    let resid = |phi: f64| -> Result<f64> {
        let u = [phi.cos(), phi.sin()];
        let p = norm.legendre(&z, &u)?;
        Ok(dot(&p, &t) / norm.value(&z, &u))
    };
    let mut phi = n_e[1].atan2(n_e[0]);
    let mut r = resid(phi)?;
    let d = 1e-6;
    let mut converged = r.abs() <= 1e-13;
    for _ in 0..60 {
        if converged {
            break;
        }
        let slope = (resid(phi + d)? - resid(phi - d)?) / (2.0 * d);
        if !(slope.abs() > 0.0) {
            break;
        }
        let mut step = (-r / slope).clamp(-0.5, 0.5);
        let mut next = phi + step;
        let mut rn = resid(next)?;
        let mut halvings = 0;
        while rn.abs() > r.abs() && halvings < 30 {
            step *= 0.5;
            next = phi + step;
            rn = resid(next)?;
            halvings += 1;
        }
        phi = next;
        r = rn;
        converged = r.abs() <= 1e-13 || step.abs() < 1e-15;
    }
    let u = [phi.cos(), phi.sin()];
    if !(r.abs() <= 1e-10) || dot(&u, &n_e) <= 0.0 {
        return Err(Error::numeric("unit normal Newton iteration diverged", Some(r.abs())));
    }
    let f = norm.value(&z, &u);
    Ok(vec![u[0] / f, u[1] / f])
}

/// The `F̄`-geodesic from `z(theta)` along the inward `F̄`-normal, on `[0, s_max]`.
pub fn normal_geodesic(norm: &FiberNorm, domain: &Domain, theta: f64, s_max: f64) -> Result<Trajectory> {
    let rev = norm.reverse();
    let nu = unit_normal(&rev, domain, theta, Orientation::Inward, false)?;
    let z = domain.point(theta);
    Flow::for_domain(&rev, domain).integrate(None, &PhasePoint::new(&z, &nu), s_max.max(1e-12))
}

/// `exp⊥(z(theta), s)`
pub fn normal_exp(norm: &FiberNorm, domain: &Domain, theta: f64, s: f64) -> Result<Vec<f64>> {
    if s == 0.0 {
        return Ok(domain.point(theta).to_vec());
    }
    Ok(normal_geodesic(norm, domain, theta, s)?.end().x.clone())
}

/// Three normal geodesics at `theta - d, theta, theta + d`, enough to
/// evaluate `D exp⊥` at any `s` up to `s_max`.
pub struct NormalFan {
    rev: FiberNorm,
    length_scale: f64,
    pub theta: f64,
    pub s_max: f64,
    center: Trajectory,
    minus: Trajectory,
    plus: Trajectory,
}

impl NormalFan {
    pub fn new(norm: &FiberNorm, domain: &Domain, theta: f64, s_max: f64) -> Result<Self> {
        let d = JACOBIAN_STEP;
        Ok(NormalFan {
            rev: norm.reverse(),
            length_scale: domain.diameter(),
            theta,
            s_max,
            center: normal_geodesic(norm, domain, theta, s_max)?,
            minus: normal_geodesic(norm, domain, theta - d, s_max)?,
            plus: normal_geodesic(norm, domain, theta + d, s_max)?,
        })
    }

    fn flow(&self) -> Flow<'_> {
        Flow::new(&self.rev, self.length_scale)
    }

    pub fn point(&self, s: f64) -> Result<Vec<f64>> {
        Ok(self.flow().state_at(&self.center, s)?.x)
    }

    /// Columns `d exp⊥ / d theta` and `d exp⊥ / ds`.
    pub fn jacobian(&self, s: f64) -> Result<Matrix2<f64>> {
        let fl = self.flow();
        let c = fl.state_at(&self.center, s)?;
        let a = fl.state_at(&self.plus, s)?;
        let b = fl.state_at(&self.minus, s)?;
        let d = 2.0 * JACOBIAN_STEP;
        Ok(Matrix2::new(
            (a.x[0] - b.x[0]) / d,
            c.y[0],
            (a.x[1] - b.x[1]) / d,
            c.y[1],
        ))
    }

    pub fn det(&self, s: f64) -> Result<f64> {
        Ok(self.jacobian(s)?.determinant())
    }

    /// First zero of `det D exp⊥` on `(0, s_max]` from a scan with `samples`
    /// points, refined by bisection to `tol`. Without a sign change, a near
    /// touch (`|det|` below `1e-6` of its initial value) is reported at the
    /// sample minimizing `|det|`.
    pub fn first_focal(&self, samples: usize, tol: f64) -> Result<Option<f64>> {
        let ds = self.s_max / samples as f64;
        let d0 = self.det(ds)?;
        let mut prev = (0.0, d0.signum());
        let mut min_abs = (d0.abs(), ds);
        for i in 1..=samples {
            let s = ds * i as f64;
            let v = self.det(s)?;
            if v.abs() < min_abs.0 {
                min_abs = (v.abs(), s);
            }
            if v == 0.0 {
                return Ok(Some(s));
            }
            if v.signum() != prev.1 {
                let (mut lo, mut hi) = (prev.0, s);
                while hi - lo > tol {
                    let mid = 0.5 * (lo + hi);
                    if self.det(mid)?.signum() == prev.1 {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                return Ok(Some(0.5 * (lo + hi)));
            }
            prev = (s, v.signum());
        }
        if min_abs.0 <= 1e-6 * d0.abs() {
            return Ok(Some(min_abs.1));
        }
        Ok(None)
    }
}

/// `D exp⊥` at `(z(theta), s)` and its determinant.
pub fn jacobian_normal_exp(norm: &FiberNorm, domain: &Domain, theta: f64, s: f64) -> Result<(Matrix2<f64>, f64)> {
    if !(s > 0.0) {
        return Err(Error::Input("Jacobian of the normal map needs s > 0".into()));
    }
    let fan = NormalFan::new(norm, domain, theta, s)?;
    let j = fan.jacobian(s)?;
    Ok((j, j.determinant()))
}

/// Focal distance `tau_f(z(theta))` searched on `(0, s_max]`: 64-sample sign
/// scan, bisection to `1e-4`.
pub fn focal_distance(norm: &FiberNorm, domain: &Domain, theta: f64, s_max: f64) -> Result<Option<f64>> {
    focal_distance_scan(norm, domain, theta, s_max, 64)
}

/// As [`focal_distance`] with a custom scan density.
pub fn focal_distance_scan(
    norm: &FiberNorm,
    domain: &Domain,
    theta: f64,
    s_max: f64,
    samples: usize,
) -> Result<Option<f64>> {
    NormalFan::new(norm, domain, theta, s_max)?.first_focal(samples, 1e-4)
}
