//! Cut distances measured against the distance oracle.

use serde::Serialize;

use super::{Flow, PhasePoint, Trajectory};
use crate::distance::{closest_boundary_point, DistanceOracle, SourceField};
use crate::error::Result;
use crate::minkowski::FiberNorm;

/// Bisection resolution of cut distances.
pub const CUT_RESOLUTION: f64 = 1e-3;
const SCAN: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CutDistance {
    pub tau: f64,
    /// The geodesic was still minimizing when it left the domain or reached
    /// `t_max`; `tau` is then a lower bound.
    pub censored: bool,
}

/// Largest `t` on `[0, t_end]` with `|dist(gamma(t)) - t| <= tol(t) + slack(t)`,
/// by a scan followed by bisection.
fn last_minimizing<D, S>(
    flow: &Flow,
    tr: &Trajectory,
    oracle: &DistanceOracle,
    dist: D,
    slack: S,
    censored_end: bool,
) -> Result<CutDistance>
where
    D: Fn(&[f64]) -> Result<f64>,
    S: Fn(f64) -> f64,
{
    let t_end = tr.duration();
    let holds = |t: f64| -> Result<bool> {
        let p = flow.state_at(tr, t)?;
        let d = dist(&p.x)?;
        Ok((d - t).abs() <= oracle.abs_tolerance(t) + slack(t))
    };
    let mut last_ok = 0.0;
    for i in 1..=SCAN {
        let t = t_end * i as f64 / SCAN as f64;
        if holds(t)? {
            last_ok = t;
            continue;
        }
        let (mut lo, mut hi) = (last_ok, t);
        while hi - lo > CUT_RESOLUTION {
            let mid = 0.5 * (lo + hi);
            if holds(mid)? {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        return Ok(CutDistance {
            tau: 0.5 * (lo + hi),
            censored: false,
        });
    }
    Ok(CutDistance {
        tau: t_end,
        censored: censored_end,
    })
}

/// Cut distance `tau(x, v) = sup { t : d(x, gamma_{x,v}(t)) = t }` along the
/// geodesic of the oracle's norm (or of its reversal, with distances
/// `d_F̄(x, .) = d_F(., x)`). The geodesic is followed until it leaves the
/// domain or `t_max`.
pub fn cut_distance(oracle: &DistanceOracle, reversed: bool, x: &[f64], v: &[f64], t_max: f64) -> Result<CutDistance> {
    let domain = oracle.domain();
    let norm: FiberNorm = if reversed {
        oracle.norm().reverse()
    } else {
        oracle.norm().clone()
    };
    let field = if reversed {
        oracle.backward_to(x)?
    } else {
        oracle.forward_from(x)?
    };
    let flow = Flow::for_domain(&norm, domain);
    let start = PhasePoint::unit(&norm, x, v)?;
    let tr = flow.integrate(Some(domain), &start, t_max)?;
    last_minimizing(&flow, &tr, oracle, |p| field.query(oracle, p), |_| 0.0, true)
}

/// Boundary cut distance `sup { t : d_F(exp⊥(z, t), ∂M) = t }` at `z(theta)`,
/// with `to_boundary` the oracle's multi-source run towards the boundary.
pub fn boundary_cut_distance(
    oracle: &DistanceOracle,
    to_boundary: &SourceField,
    theta: f64,
    s_max: f64,
) -> Result<CutDistance> {
    let domain = oracle.domain();
    let rev = oracle.norm().reverse();
    let nu = super::unit_normal(&rev, domain, theta, super::Orientation::Inward, false)?;
    let z = domain.point(theta);
    let flow = Flow::for_domain(&rev, domain);
    let tr = flow.integrate(Some(domain), &PhasePoint::new(&z, &nu), s_max)?;
    // the run only sees boundary mesh nodes: at distance t from the boundary
    // the nearest node can be up to s^2 / (8 t) farther than the curve
    let s = mesh_spacing(domain);
    let slack = |t: f64| if t > 0.0 { s * s / (8.0 * t) } else { f64::INFINITY };
    last_minimizing(&flow, &tr, oracle, |p| to_boundary.query(oracle, p), slack, true)
}

fn mesh_spacing(domain: &crate::domain::Domain) -> f64 {
    let mesh = domain.boundary_mesh();
    (0..mesh.len())
        .map(|i| crate::numeric::distance(&mesh[i].point, &mesh[(i + 1) % mesh.len()].point))
        .fold(0.0, f64::max)
}

/// Resolution of [`boundary_cut_distance_refined`], relative to the diameter.
pub const REFINED_RESOLUTION: f64 = 1e-4;

/// [`boundary_cut_distance`] sharpened past the oracle tolerance: the coarse
/// value is bracketed and bisected on `d_F(gamma(t), ∂M) >= t - 1e-7`, with
/// the distance to the boundary found by shooting.
pub fn boundary_cut_distance_refined(
    oracle: &DistanceOracle,
    to_boundary: &SourceField,
    theta: f64,
    s_max: f64,
) -> Result<CutDistance> {
    let coarse = boundary_cut_distance(oracle, to_boundary, theta, s_max)?;
    if coarse.censored {
        return Ok(coarse);
    }
    let domain = oracle.domain();
    let norm = oracle.norm();
    let rev = norm.reverse();
    let nu = super::unit_normal(&rev, domain, theta, super::Orientation::Inward, false)?;
    let z = domain.point(theta);
    let flow = Flow::for_domain(&rev, domain);
    let tr = flow.integrate(Some(domain), &PhasePoint::new(&z, &nu), s_max)?;
    let t_end = tr.duration();
    let holds = |t: f64| -> Result<bool> {
        if t <= 0.0 {
            return Ok(true);
        }
        let p = flow.state_at(&tr, t)?;
        Ok(closest_boundary_point(norm, domain, &p.x)?.distance >= t - 1e-7 * t.max(1.0))
    };
    let w = 4.0 * oracle.abs_tolerance(coarse.tau) + 2.0 * CUT_RESOLUTION;
    let mut lo = (coarse.tau - w).max(0.0);
    while !holds(lo)? {
        lo = (lo - w).max(0.0);
    }
    let mut hi = (coarse.tau + w).min(t_end);
    while holds(hi)? {
        if hi >= t_end {
            return Ok(CutDistance { tau: t_end, censored: true });
        }
        lo = hi;
        hi = (hi + w).min(t_end);
    }
    let res = REFINED_RESOLUTION * domain.diameter();
    while hi - lo > res {
        let mid = 0.5 * (lo + hi);
        if holds(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(CutDistance {
        tau: 0.5 * (lo + hi),
        censored: false,
    })
}
