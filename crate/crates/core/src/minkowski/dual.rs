//! Maximization of a linear functional over the unit sphere of a norm.
//!
//! Both the dual norm `F*(p) = max_{F(v)=1} p(v)` and the qP Finsler norm
//! (the dual of the co-norm `f`) reduce to this problem. The objective
//! `psi(u) = <target, u> / N(u)` is homogeneous of degree zero, so it is
//! maximized over Euclidean unit directions: seeds on the sphere, then a
//! projected Newton ascent in a local chart.

use crate::error::{Error, Result};
use crate::numeric::{dot, norm, sphere_seeds, tangent_basis3};

const MAX_ITER: usize = 100;
/// Newton restarts from this many of the best seeds.
const POLISHED_SEEDS: usize = 4;
const FD_STEP: f64 = 1e-4;

#[derive(Clone, Debug)]
pub struct SupportMax {
    /// `max_u <target, u> / N(u)`
    pub value: f64,
    /// Euclidean-unit maximizing direction.
    pub direction: Vec<f64>,
}

fn seed_count(dim: usize) -> usize {
    if dim == 2 {
        32
    } else {
        128
    }
}

/// Maximizes `<target, u> / norm(u)` over nonzero `u`.
pub fn support_max<N: Fn(&[f64]) -> f64>(norm_fn: N, target: &[f64]) -> Result<SupportMax> {
    let dim = target.len();
    let psi = |u: &[f64]| dot(target, u) / norm_fn(u);
    let mut seeds: Vec<(f64, Vec<f64>)> = sphere_seeds(dim, seed_count(dim))
        .into_iter()
        .map(|u| (psi(&u), u))
        .collect();
    seeds.sort_by(|a, b| b.0.total_cmp(&a.0));

    let mut best: Option<SupportMax> = None;
    let mut failure = None;
    for (_, seed) in seeds.into_iter().take(POLISHED_SEEDS) {
        let res = if dim == 2 {
            ascend_circle(&psi, &seed)
        } else {
            ascend_sphere(&psi, &seed)
        };
        match res {
            Ok(r) => {
                if best.as_ref().map_or(true, |b| r.value > b.value) {
                    best = Some(r);
                }
            }
            Err(e) => failure = Some(e),
        }
    }
    match (best, failure) {
        (Some(b), _) => Ok(b),
        (None, Some(e)) => Err(e),
        (None, None) => Err(Error::numeric("support maximization produced no candidate", None)),
    }
}

fn ascend_circle<P: Fn(&[f64]) -> f64>(psi: &P, seed: &[f64]) -> Result<SupportMax> {
    let at = |t: f64| psi(&[t.cos(), t.sin()]);
    let mut theta = seed[1].atan2(seed[0]);
    let mut value = at(theta);
    for _ in 0..MAX_ITER {
        let h = FD_STEP;
        let (vp, vm) = (at(theta + h), at(theta - h));
        let d1 = (vp - vm) / (2.0 * h);
        let d2 = (vp - 2.0 * value + vm) / (h * h);
        let mut step = if d2 < 0.0 {
            (-d1 / d2).clamp(-0.5, 0.5)
        } else {
            0.05 * d1.signum()
        };
        let mut accepted = false;
        for _ in 0..40 {
            let cand = at(theta + step);
            if cand >= value - 1e-15 * value.abs() {
                theta += step;
                value = cand.max(value);
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted || step.abs() < 1e-11 {
            return Ok(SupportMax {
                value,
                direction: vec![theta.cos(), theta.sin()],
            });
        }
    }
    Err(Error::numeric("dual-norm ascent did not converge", Some(value)))
}

fn ascend_sphere<P: Fn(&[f64]) -> f64>(psi: &P, seed: &[f64]) -> Result<SupportMax> {
    let mut u = seed.to_vec();
    let mut value = psi(&u);
    let chart = |u: &[f64], e1: &[f64; 3], e2: &[f64; 3], a: f64, b: f64| {
        let mut v = [
            u[0] + a * e1[0] + b * e2[0],
            u[1] + a * e1[1] + b * e2[1],
            u[2] + a * e1[2] + b * e2[2],
        ];
        let n = norm(&v);
        v.iter_mut().for_each(|c| *c /= n);
        v
    };
    for _ in 0..MAX_ITER {
        let (e1, e2) = tangent_basis3(&u);
        let h = FD_STEP;
        let f = |a: f64, b: f64| psi(&chart(&u, &e1, &e2, a, b));
        let (fa_p, fa_m, fb_p, fb_m) = (f(h, 0.0), f(-h, 0.0), f(0.0, h), f(0.0, -h));
        let g = [(fa_p - fa_m) / (2.0 * h), (fb_p - fb_m) / (2.0 * h)];
        let haa = (fa_p - 2.0 * value + fa_m) / (h * h);
        let hbb = (fb_p - 2.0 * value + fb_m) / (h * h);
        let hab = (f(h, h) - f(h, -h) - f(-h, h) + f(-h, -h)) / (4.0 * h * h);
        let det = haa * hbb - hab * hab;
        let (mut sa, mut sb) = if haa < 0.0 && det > 0.0 {
            // Newton step solves H s = -g
            ((-g[0] * hbb + g[1] * hab) / det, (-g[1] * haa + g[0] * hab) / det)
        } else {
            let gn = (g[0] * g[0] + g[1] * g[1]).sqrt().max(1e-300);
            (0.05 * g[0] / gn, 0.05 * g[1] / gn)
        };
        let len = (sa * sa + sb * sb).sqrt();
        if len > 0.5 {
            sa *= 0.5 / len;
            sb *= 0.5 / len;
        }
        let mut accepted = false;
        for _ in 0..40 {
            let cand_u = chart(&u, &e1, &e2, sa, sb);
            let cand = psi(&cand_u);
            if cand >= value - 1e-15 * value.abs() {
                u = cand_u.to_vec();
                value = cand.max(value);
                accepted = true;
                break;
            }
            sa *= 0.5;
            sb *= 0.5;
        }
        if !accepted || (sa * sa + sb * sb).sqrt() < 1e-11 {
            return Ok(SupportMax { value, direction: u });
        }
    }
    Err(Error::numeric("dual-norm ascent did not converge", Some(value)))
}
