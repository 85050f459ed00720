//! Geodesic shooting between an interior point and the boundary.

use std::f64::consts::TAU;

use serde::Serialize;

use super::oracle::{DistanceOracle, SourceField};
use crate::domain::Domain;
use crate::error::{Error, Result};
use crate::geodesic::{Flow, PhasePoint, Trajectory};
use crate::minkowski::FiberNorm;
use crate::numeric::{distance, dot, wrap_angle};

const SHOTS: usize = 64;

#[derive(Clone, Debug, Serialize)]
pub struct ShotResult {
    /// Shortest arrival time among converged shots (oracle value if none converged).
    pub distance: f64,
    /// Unit initial velocity of the shortest converged shot.
    pub direction: Option<Vec<f64>>,
    /// False when no geodesic was found reaching the target.
    pub reached: bool,
    pub oracle_distance: Option<f64>,
    /// Arrival time within oracle tolerance of the oracle distance.
    pub minimizing: Option<bool>,
    /// Arrival times of every converged shot.
    pub arrivals: Vec<f64>,
}

pub(crate) fn horizon(norm: &FiberNorm, domain: &Domain, x: &[f64]) -> f64 {
    let (_, hi) = norm.speed_bounds(x);
    4.0 * domain.diameter() * hi.max(1.0)
}

pub(crate) fn shoot(flow: &Flow, domain: &Domain, x: &[f64], phi: f64, t_max: f64) -> Result<Trajectory> {
    let start = PhasePoint::unit(flow.norm, x, &[phi.cos(), phi.sin()])?;
    flow.integrate(Some(domain), &start, t_max)
}

/// Shortest geodesic from `x` to the boundary point `z(theta)`: 64 unit
/// directions are shot, and every bracket of the exit-parameter mismatch
/// is refined by safeguarded regula falsi on the direction angle.
pub fn shoot_distance(
    norm: &FiberNorm,
    domain: &Domain,
    x: &[f64],
    theta: f64,
    oracle: Option<(&DistanceOracle, &SourceField)>,
) -> Result<ShotResult> {
    let flow = Flow::for_domain(norm, domain);
    let t_max = horizon(norm, domain, x);
    let z = domain.point(theta);
    let mut samples: Vec<Option<(f64, f64)>> = Vec::with_capacity(SHOTS);
    for i in 0..SHOTS {
        let phi = TAU * i as f64 / SHOTS as f64;
        let tr = shoot(&flow, domain, x, phi, t_max)?;
        samples.push(tr.exit.as_ref().map(|e| (wrap_angle(e.theta - theta), e.time)));
    }
    let mut arrivals = Vec::new();
    let mut best: Option<(f64, f64)> = None;
    for i in 0..SHOTS {
        let j = (i + 1) % SHOTS;
        let (Some((ma, _)), Some((mb, _))) = (samples[i], samples[j]) else {
            continue;
        };
        if ma * mb > 0.0 || (ma - mb).abs() >= std::f64::consts::PI {
            continue;
        }
        let pa = TAU * i as f64 / SHOTS as f64;
        let pb = pa + TAU / SHOTS as f64;
        if let Some((phi, t)) = refine(&flow, domain, x, theta, &z, (pa, ma), (pb, mb), t_max)? {
            arrivals.push(t);
            if best.map_or(true, |b| t < b.1) {
                best = Some((phi, t));
            }
        }
    }
    let oracle_distance = match oracle {
        Some((o, f)) => Some(f.query(o, &z)?),
        None => None,
    };
    let (distance, direction, reached) = match best {
        Some((phi, t)) => {
            let f = norm.value(x, &[phi.cos(), phi.sin()]);
            (t, Some(vec![phi.cos() / f, phi.sin() / f]), true)
        }
        None => (oracle_distance.unwrap_or(f64::NAN), None, false),
    };
    let minimizing = match (oracle, oracle_distance) {
        (Some((o, _)), Some(d)) if reached => Some(distance <= d + o.abs_tolerance(d)),
        (Some(_), Some(_)) => Some(false),
        _ => None,
    };
    Ok(ShotResult {
        distance,
        direction,
        reached,
        oracle_distance,
        minimizing,
        arrivals,
    })
}

/// Distances from `x` to many boundary points `z(theta_k)` sharing one fan
/// of `shots` geodesics. Each entry is the shortest converged arrival, or
/// `None` when no geodesic of the fan brackets the target.
pub fn shoot_distances(
    norm: &FiberNorm,
    domain: &Domain,
    x: &[f64],
    thetas: &[f64],
    shots: usize,
) -> Result<Vec<Option<f64>>> {
    let flow = Flow::for_domain(norm, domain);
    let t_max = horizon(norm, domain, x);
    let step = TAU / shots as f64;
    let exits: Vec<Option<f64>> = (0..shots)
        .map(|i| Ok(shoot(&flow, domain, x, step * i as f64, t_max)?.exit.map(|e| e.theta)))
        .collect::<Result<_>>()?;
    let mut out = Vec::with_capacity(thetas.len());
    for &theta in thetas {
        let z = domain.point(theta);
        let mut best: Option<f64> = None;
        for i in 0..shots {
            let j = (i + 1) % shots;
            let (Some(ea), Some(eb)) = (exits[i], exits[j]) else {
                continue;
            };
            let (ma, mb) = (wrap_angle(ea - theta), wrap_angle(eb - theta));
            if ma * mb > 0.0 || (ma - mb).abs() >= std::f64::consts::PI {
                continue;
            }
            let pa = step * i as f64;
            if let Some((_, t)) = refine(&flow, domain, x, theta, &z, (pa, ma), (pa + step, mb), t_max)? {
                best = Some(best.map_or(t, |b: f64| b.min(t)));
            }
        }
        out.push(best);
    }
    Ok(out)
}

#[allow(clippy::too_many_arguments)]
fn refine(
    flow: &Flow,
    domain: &Domain,
    x: &[f64],
    theta: f64,
    z: &[f64; 2],
    a: (f64, f64),
    b: (f64, f64),
    t_max: f64,
) -> Result<Option<(f64, f64)>> {
    let (mut a, mut b) = (a, b);
    let mut side = 0i32;
    for _ in 0..100 {
        let mut phi = (a.0 * b.1 - b.0 * a.1) / (b.1 - a.1);
        if !phi.is_finite() || phi <= a.0.min(b.0) || phi >= a.0.max(b.0) {
            phi = 0.5 * (a.0 + b.0);
        }
        let tr = shoot(flow, domain, x, phi, t_max)?;
        let Some(e) = tr.exit else {
            return Ok(None);
        };
        let m = wrap_angle(e.theta - theta);
        if distance(&e.point, z) < 1e-10 || (b.0 - a.0).abs() < 1e-14 {
            return Ok((distance(&e.point, z) < 1e-7).then_some((phi, e.time)));
        }
        // Illinois modification keeps both ends moving
        if m * b.1 < 0.0 {
            a = b;
            b = (phi, m);
            side = 0;
        } else {
            b = (phi, m);
            if side == 1 {
                a.1 *= 0.5;
            }
            side = 1;
        }
        if m == 0.0 {
            return Ok(Some((phi, e.time)));
        }
    }
    Ok(None)
}

/// The `F`-closest boundary point to an interior point, found by minimizing
/// the exit time over the initial direction.
#[derive(Clone, Debug, Serialize)]
pub struct ClosestBoundary {
    pub distance: f64,
    pub theta: f64,
    pub point: Vec<f64>,
    pub initial_direction: Vec<f64>,
    pub arrival_velocity: Vec<f64>,
    /// `|g_nu(nu, T)|` for the unit arrival velocity `nu` and the Euclidean
    /// unit boundary tangent `T`.
    pub orthogonality_residual: f64,
}

pub fn closest_boundary_point(norm: &FiberNorm, domain: &Domain, x: &[f64]) -> Result<ClosestBoundary> {
    let flow = Flow::for_domain(norm, domain);
    let t_max = horizon(norm, domain, x);
    let exit_time = |phi: f64| -> Result<f64> {
        Ok(shoot(&flow, domain, x, phi, t_max)?
            .exit
            .map_or(f64::INFINITY, |e| e.time))
    };
    let step = TAU / SHOTS as f64;
    let mut best = (0usize, f64::INFINITY);
    for i in 0..SHOTS {
        let t = exit_time(step * i as f64)?;
        if t < best.1 {
            best = (i, t);
        }
    }
    if !best.1.is_finite() {
        return Err(Error::Topology("no geodesic from the point reaches the boundary".into()));
    }
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let (mut lo, mut hi) = (step * (best.0 as f64 - 1.0), step * (best.0 as f64 + 1.0));
    let mut c = hi - g * (hi - lo);
    let mut d = lo + g * (hi - lo);
    let (mut fc, mut fd) = (exit_time(c)?, exit_time(d)?);
    while hi - lo > 1e-7 {
        if fc < fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - g * (hi - lo);
            fc = exit_time(c)?;
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + g * (hi - lo);
            fd = exit_time(d)?;
        }
    }
    let phi = 0.5 * (lo + hi);
    let tr = shoot(&flow, domain, x, phi, t_max)?;
    let e = tr
        .exit
        .ok_or_else(|| Error::Topology("closest-point geodesic did not exit".into()))?;
    let f = norm.value(&e.point, &e.direction);
    let nu: Vec<f64> = e.direction.iter().map(|c| c / f).collect();
    let t = domain.tangent(e.theta);
    let tn = (t[0] * t[0] + t[1] * t[1]).sqrt();
    let p = norm.legendre(&e.point, &nu)?;
    let resid = dot(&p, &[t[0] / tn, t[1] / tn]).abs();
    let f0 = norm.value(x, &[phi.cos(), phi.sin()]);
    Ok(ClosestBoundary {
        distance: e.time,
        theta: e.theta,
        point: e.point.clone(),
        initial_direction: vec![phi.cos() / f0, phi.sin() / f0],
        arrival_velocity: nu,
        orthogonality_residual: resid,
    })
}
