//! Geodesic spray and flow integration.
//!
//! Geodesics solve `x'' = -2 G(x, x')`. With `L = F^2 / 2` the spray is
//! obtained from the Euler-Lagrange equations,
//! `x'' = g^{-1} (L_x - L_{yx} x')`, using closed forms where the norm family
//! allows it and central differences in the base point otherwise. The
//! integrator is classical fixed-step RK4; boundary crossings are located by
//! bisection on the domain clearance.

mod cut;
mod normal;

pub use cut::{boundary_cut_distance, boundary_cut_distance_refined, cut_distance, CutDistance};
pub use normal::{
    focal_distance, focal_distance_scan, jacobian_normal_exp, normal_exp, normal_geodesic, unit_normal,
    NormalFan, Orientation,
};

use nalgebra::DVector;
use serde::Serialize;

use crate::domain::Domain;
use crate::error::{Error, Result};
use crate::minkowski::FiberNorm;
use crate::numeric::{all_finite, condition_number, dot};

/// Default spatial step of the integrator, as a fraction of the domain diameter.
pub const DEFAULT_STEP_FRACTION: f64 = 2e-3;
/// Base-point finite-difference step, as a fraction of the length scale.
pub const SPATIAL_FD_FRACTION: f64 = 1e-5;
/// Relative speed drift that aborts an integration.
pub const MAX_DRIFT: f64 = 1e-4;
/// Normal component below which a boundary exit counts as tangential.
pub const TANGENCY_THRESHOLD: f64 = 1e-3;
/// Clearance tolerance of the boundary event.
pub const EVENT_TOL: f64 = 1e-10;

/// A base point with a nonzero fiber vector.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PhasePoint {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl PhasePoint {
    pub fn new(x: &[f64], y: &[f64]) -> Self {
        PhasePoint {
            x: x.to_vec(),
            y: y.to_vec(),
        }
    }

    /// `(x, v / F(x, v))`
    pub fn unit(norm: &FiberNorm, x: &[f64], v: &[f64]) -> Result<Self> {
        let f = norm.eval(x, v)?;
        if !(f > 0.0) {
            return Err(Error::Domain("zero fiber vector".into()));
        }
        Ok(PhasePoint {
            x: x.to_vec(),
            y: v.iter().map(|c| c / f).collect(),
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    TimeOut,
    BoundaryExit,
}

/// Where and how a trajectory left the domain.
#[derive(Clone, Debug, Serialize)]
pub struct ExitRecord {
    pub time: f64,
    pub point: Vec<f64>,
    pub theta: f64,
    pub direction: Vec<f64>,
    /// Component of the unit exit velocity along the outward unit normal.
    pub normal_component: f64,
    pub tangential: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<PhasePoint>,
    pub termination: Termination,
    pub exit: Option<ExitRecord>,
    /// Largest relative deviation of `F(x, x')` from its initial value.
    pub max_drift: f64,
    /// Fixed time step used.
    pub dt: f64,
}

impl Trajectory {
    pub fn end(&self) -> &PhasePoint {
        self.states.last().expect("trajectory has at least one state")
    }

    pub fn duration(&self) -> f64 {
        *self.times.last().unwrap_or(&0.0)
    }

    /// Polyline of base points.
    pub fn polyline(&self) -> Vec<Vec<f64>> {
        self.states.iter().map(|s| s.x.clone()).collect()
    }

    /// CSV dump with header `t,x1,..,xn,y1,..,yn,speed`.
    pub fn to_csv(&self, norm: &FiberNorm) -> String {
        let n = self.states.first().map_or(2, |s| s.x.len());
        let mut out = String::from("t");
        for i in 1..=n {
            out.push_str(&format!(",x{i}"));
        }
        for i in 1..=n {
            out.push_str(&format!(",y{i}"));
        }
        out.push_str(",speed\n");
        for (t, s) in self.times.iter().zip(&self.states) {
            out.push_str(&format!("{t:.16e}"));
            for v in s.x.iter().chain(&s.y) {
                out.push_str(&format!(",{v:.16e}"));
            }
            out.push_str(&format!(",{:.16e}\n", norm.value(&s.x, &s.y)));
        }
        out
    }
}

/// Spray evaluation and RK4 stepping for one norm.
#[derive(Clone, Debug)]
pub struct Flow<'a> {
    pub norm: &'a FiberNorm,
    /// Base-point finite-difference step.
    pub hx: f64,
    /// Spatial step of the integrator (the time step is `ds / F(y)`).
    pub ds: f64,
}

impl<'a> Flow<'a> {
    /// Flow with default steps for a problem of size `length_scale`.
    pub fn new(norm: &'a FiberNorm, length_scale: f64) -> Self {
        Flow {
            norm,
            hx: SPATIAL_FD_FRACTION * length_scale,
            ds: DEFAULT_STEP_FRACTION * length_scale,
        }
    }

    pub fn for_domain(norm: &'a FiberNorm, domain: &Domain) -> Self {
        Self::new(norm, domain.diameter())
    }

    pub fn with_step(mut self, ds: f64) -> Self {
        self.ds = ds;
        self
    }

    /// Geodesic acceleration `x'' = -2 G(x, y)`.
    pub fn acceleration(&self, x: &[f64], y: &[f64]) -> Result<Vec<f64>> {
        let n = self.norm;
        if n.is_homogeneous_in_space() {
            return Ok(vec![0.0; x.len()]);
        }
        if let FiberNorm::Riemannian { metric } = n {
            if let Some((_, grad)) = metric.conformal_exponent(x) {
                // 2G = 2 (grad phi . y) y - |y|^2 grad phi
                let gy = dot(&grad, y);
                let yy = dot(y, y);
                return Ok((0..x.len()).map(|i| yy * grad[i] - 2.0 * gy * y[i]).collect());
            }
        }
        self.generic_acceleration(x, y)
    }

    fn generic_acceleration(&self, x: &[f64], y: &[f64]) -> Result<Vec<f64>> {
        let n = self.norm;
        let dim = x.len();
        let g = n.fundamental_tensor(x, y)?.matrix;
        if condition_number(&g) > 1e12 {
            return Err(Error::numeric("fundamental tensor nearly singular", None));
        }
        let lag = |p: &[f64]| 0.5 * n.value(p, y).powi(2);
        let h = self.hx;
        let mut xp = x.to_vec();
        let mut lx = vec![0.0; dim];
        for j in 0..dim {
            xp[j] = x[j] + h;
            let a = lag(&xp);
            xp[j] = x[j] - h;
            let b = lag(&xp);
            xp[j] = x[j];
            lx[j] = (a - b) / (2.0 * h);
        }
        // L_{yx} y as the derivative of the Legendre map along y; legendre
        // maps obtained by differences in the fiber need a wider step.
        let closed = matches!(n, FiberNorm::Riemannian { .. } | FiberNorm::Randers { .. });
        let hy = if closed { h } else { 100.0 * h };
        let eps = hy / crate::numeric::norm(y);
        let xa: Vec<f64> = x.iter().zip(y).map(|(a, b)| a + eps * b).collect();
        let xb: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - eps * b).collect();
        let pa = n.legendre(&xa, y)?;
        let pb = n.legendre(&xb, y)?;
        let rhs = DVector::from_fn(dim, |i, _| lx[i] - (pa[i] - pb[i]) / (2.0 * eps));
        let acc = g
            .lu()
            .solve(&rhs)
            .ok_or_else(|| Error::numeric("singular fundamental tensor in spray", None))?;
        Ok(acc.as_slice().to_vec())
    }

    fn deriv(&self, x: &[f64], y: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        Ok((y.to_vec(), self.acceleration(x, y)?))
    }

    /// One classical RK4 step of size `dt`.
    pub fn rk4(&self, s: &PhasePoint, dt: f64) -> Result<PhasePoint> {
        let (k1x, k1y) = self.deriv(&s.x, &s.y)?;
        let mid = |kx: &[f64], ky: &[f64], c: f64| {
            (
                s.x.iter().zip(kx).map(|(a, b)| a + c * b).collect::<Vec<f64>>(),
                s.y.iter().zip(ky).map(|(a, b)| a + c * b).collect::<Vec<f64>>(),
            )
        };
        let (x2, y2) = mid(&k1x, &k1y, 0.5 * dt);
        let (k2x, k2y) = self.deriv(&x2, &y2)?;
        let (x3, y3) = mid(&k2x, &k2y, 0.5 * dt);
        let (k3x, k3y) = self.deriv(&x3, &y3)?;
        let (x4, y4) = mid(&k3x, &k3y, dt);
        let (k4x, k4y) = self.deriv(&x4, &y4)?;
        let comb = |v: &[f64], a: &[f64], b: &[f64], c: &[f64], d: &[f64]| {
            (0..v.len())
                .map(|i| v[i] + dt / 6.0 * (a[i] + 2.0 * b[i] + 2.0 * c[i] + d[i]))
                .collect::<Vec<f64>>()
        };
        let out = PhasePoint {
            x: comb(&s.x, &k1x, &k2x, &k3x, &k4x),
            y: comb(&s.y, &k1y, &k2y, &k3y, &k4y),
        };
        if !all_finite(&out.x) || !all_finite(&out.y) {
            return Err(Error::numeric("non-finite state in integration", None));
        }
        Ok(out)
    }

    /// Integrates from `start` for at most `t_max`. With a domain the flow
    /// stops at the first boundary crossing.
    pub fn integrate(&self, domain: Option<&Domain>, start: &PhasePoint, t_max: f64) -> Result<Trajectory> {
        let f0 = self.norm.eval(&start.x, &start.y)?;
        if !(f0 > 0.0) {
            return Err(Error::Domain("geodesic with zero initial velocity".into()));
        }
        if let Some(d) = domain {
            if d.clearance(&start.x) < -1e-9 {
                return Err(Error::Input(format!("start point {:?} outside the domain", start.x)));
            }
        }
        let steps = ((t_max * f0 / self.ds).ceil() as usize).max(1);
        let dt = t_max / steps as f64;
        let mut times = vec![0.0];
        let mut states = vec![start.clone()];
        let mut max_drift: f64 = 0.0;
        let mut cur = start.clone();
        for k in 0..steps {
            let t = k as f64 * dt;
            let next = self.rk4(&cur, dt)?;
            if let Some(d) = domain {
                if d.clearance(&next.x) < 0.0 {
                    let (tau, hit) = self.locate_exit(d, &cur, dt)?;
                    let drift = (self.norm.value(&hit.x, &hit.y) - f0).abs() / f0;
                    max_drift = max_drift.max(drift);
                    let exit = self.exit_record(d, &hit, t + tau)?;
                    times.push(t + tau);
                    states.push(hit);
                    return Ok(Trajectory {
                        times,
                        states,
                        termination: Termination::BoundaryExit,
                        exit: Some(exit),
                        max_drift,
                        dt,
                    });
                }
            }
            let drift = (self.norm.value(&next.x, &next.y) - f0).abs() / f0;
            if drift > MAX_DRIFT {
                return Err(Error::StepFailure { t: t + dt, drift });
            }
            max_drift = max_drift.max(drift);
            cur = next;
            times.push((k + 1) as f64 * dt);
            states.push(cur.clone());
        }
        Ok(Trajectory {
            times,
            states,
            termination: Termination::TimeOut,
            exit: None,
            max_drift,
            dt,
        })
    }

    fn locate_exit(&self, d: &Domain, from: &PhasePoint, dt: f64) -> Result<(f64, PhasePoint)> {
        let (mut lo, mut hi) = (0.0, dt);
        let mut hit = self.rk4(from, dt)?;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            let s = self.rk4(from, mid)?;
            let c = d.clearance(&s.x);
            if c >= 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
            if c.abs() <= EVENT_TOL {
                return Ok((mid, s));
            }
            hit = s;
            if hi - lo < 1e-15 * dt.max(1.0) {
                break;
            }
        }
        Ok((0.5 * (lo + hi), hit))
    }

    fn exit_record(&self, d: &Domain, s: &PhasePoint, t: f64) -> Result<ExitRecord> {
        let theta = d.param_of(&s.x);
        let n_out = d.outward_normal(theta);
        let f = self.norm.value(&s.x, &s.y);
        let w: Vec<f64> = s.y.iter().map(|c| c / f).collect();
        // the outward unit normal nu maximizes <n_out, .> on the unit sphere, so
        // the nu-component of w is <n_out, w> / F*(n_out)
        let fstar = self.norm.dual_norm(&s.x, &n_out)?;
        let a = dot(&n_out, &w) / fstar;
        Ok(ExitRecord {
            time: t,
            point: s.x.clone(),
            theta,
            direction: s.y.clone(),
            normal_component: a,
            tangential: a < TANGENCY_THRESHOLD,
        })
    }

    /// State at time `t` of a trajectory produced by this flow.
    pub fn state_at(&self, traj: &Trajectory, t: f64) -> Result<PhasePoint> {
        if t <= 0.0 {
            return Ok(traj.states[0].clone());
        }
        let k = ((t / traj.dt).floor() as usize).min(traj.states.len() - 1);
        let base = &traj.states[k];
        let tau = t - traj.times[k];
        if tau.abs() < 1e-15 {
            return Ok(base.clone());
        }
        self.rk4(base, tau)
    }
}

/// Geodesic acceleration `-2 G(x, y)` with base-point differences scaled to `length_scale`.
pub fn spray(norm: &FiberNorm, x: &[f64], y: &[f64], length_scale: f64) -> Result<Vec<f64>> {
    if y.iter().all(|v| *v == 0.0) {
        return Err(Error::Domain("spray is undefined at the zero vector".into()));
    }
    Flow::new(norm, length_scale).acceleration(x, y)
}

/// Integrates the geodesic from `start` inside `domain` until exit or `t_max`.
pub fn integrate_geodesic(
    norm: &FiberNorm,
    domain: &Domain,
    start: &PhasePoint,
    t_max: f64,
    ds: Option<f64>,
) -> Result<Trajectory> {
    let mut flow = Flow::for_domain(norm, domain);
    if let Some(ds) = ds {
        flow.ds = ds;
    }
    flow.integrate(Some(domain), start, t_max)
}

/// `exp_x(y) = gamma_{x, y}(1)`, integrated on the whole plane.
pub fn exp_map(norm: &FiberNorm, x: &[f64], y: &[f64], length_scale: f64) -> Result<Vec<f64>> {
    if y.iter().all(|v| *v == 0.0) {
        return Ok(x.to_vec());
    }
    let flow = Flow::new(norm, length_scale);
    Ok(flow.integrate(None, &PhasePoint::new(x, y), 1.0)?.end().x.clone())
}

#[cfg(test)]
mod tests;
