use std::f64::consts::TAU;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::Engine;
use crate::distance::SmoothnessProbe;
use crate::error::{Error, Result};
use crate::minkowski::{dual::support_max, legendre_inverse_of_conorm};
use crate::numeric::{dot, wrap_angle};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RecoveryOptions {
    /// Number of reported directions, spread over the covered cone.
    pub directions: usize,
    /// Multiquadric shape parameter in units of the mean node spacing.
    pub shape: f64,
    /// A gap between consecutive covector angles wider than this many
    /// median gaps (and than 8 mesh cells) is left uncovered.
    pub gap_factor: f64,
}

impl Default for RecoveryOptions {
    fn default() -> Self {
        RecoveryOptions {
            directions: 64,
            shape: 2.0,
            gap_factor: 4.0,
        }
    }
}

/// The recovered reversed co-norm `F̄*` at a point: a multiquadric
/// interpolant of `F̄*` on Euclidean unit covectors, extended
/// 1-homogeneously. Covectors are parameterized by angle.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecoveredNorm {
    pub base: [f64; 2],
    pub angles: Vec<f64>,
    pub weights: Vec<f64>,
    pub constant: f64,
    pub shape: f64,
    /// Covered covector arcs `[start, end]`, counter-clockwise, in radians.
    pub arcs: Vec<[f64; 2]>,
}

fn chord2(a: f64, b: f64) -> f64 {
    let s = (0.5 * (a - b)).sin();
    4.0 * s * s
}

impl RecoveredNorm {
    fn unit_value(&self, angle: f64) -> f64 {
        let c2 = self.shape * self.shape;
        self.constant
            + self
                .angles
                .iter()
                .zip(&self.weights)
                .map(|(a, w)| w * (chord2(angle, *a) + c2).sqrt())
                .sum::<f64>()
    }

    /// `F̄*(p)`.
    pub fn dual(&self, p: &[f64]) -> f64 {
        let r = (p[0] * p[0] + p[1] * p[1]).sqrt();
        if r == 0.0 {
            return 0.0;
        }
        r * self.unit_value(p[1].atan2(p[0]))
    }

    pub fn covers(&self, p: &[f64]) -> bool {
        let a = p[1].atan2(p[0]);
        self.arcs.iter().any(|[s, e]| {
            let t = (a - s).rem_euclid(TAU);
            t <= (e - s).rem_euclid(TAU) || e - s >= TAU
        })
    }

    /// Recovered `F(y) = F̄(-y)`, the support function of the recovered
    /// dual unit ball. Meaningful for directions whose maximizing covector
    /// is covered.
    pub fn value(&self, y: &[f64]) -> Result<f64> {
        let r = (y[0] * y[0] + y[1] * y[1]).sqrt();
        if r == 0.0 {
            return Ok(0.0);
        }
        let u = [-y[0] / r, -y[1] / r];
        Ok(r * support_max(|p: &[f64]| self.dual(p), &u)?.value)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormSample {
    /// Euclidean unit velocity.
    pub direction: [f64; 2],
    pub recovered: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truth: Option<f64>,
}

impl NormSample {
    pub fn relative_error(&self) -> Option<f64> {
        self.truth.map(|t| (self.recovered - t).abs() / t)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RecoveredNormSamples {
    pub base: [f64; 2],
    pub samples: Vec<NormSample>,
    /// Fraction of the covector circle inside covered arcs.
    pub coverage: f64,
    /// Boundary nodes whose distance function passed the smoothness test.
    pub certified: usize,
    /// Largest `|F̄*(p) - 1|` over certified differentials, with the true
    /// co-norm.
    pub dual_residual: f64,
    pub norm: RecoveredNorm,
}

impl RecoveredNormSamples {
    pub fn max_relative_error(&self) -> Option<f64> {
        self.samples
            .iter()
            .map(|s| s.relative_error())
            .collect::<Option<Vec<f64>>>()
            .map(|v| v.into_iter().fold(0.0, f64::max))
    }
}

fn fit(angles: &[f64], values: &[f64], shape: f64) -> Result<(Vec<f64>, f64)> {
    let n = angles.len();
    let c2 = shape * shape;
    let mut a = DMatrix::zeros(n + 1, n + 1);
    for i in 0..n {
        for j in 0..n {
            a[(i, j)] = (chord2(angles[i], angles[j]) + c2).sqrt();
        }
        a[(i, n)] = 1.0;
        a[(n, i)] = 1.0;
    }
    let mut b = DVector::zeros(n + 1);
    b.rows_mut(0, n).copy_from_slice(values);
    let sol = a
        .clone()
        .lu()
        .solve(&b)
        .ok_or_else(|| Error::numeric("singular interpolation system", None))?;
    let res = (&a * &sol - &b).amax();
    if !(res < 1e-8 * values.iter().cloned().fold(1.0, f64::max)) {
        return Err(Error::numeric("ill-conditioned interpolation system", Some(res)));
    }
    Ok((sol.rows(0, n).iter().cloned().collect(), sol[n]))
}

/// Nodes closer than this fraction of the mean angular spacing are merged
/// before interpolation.
pub const MERGE_FRACTION: f64 = 0.25;

/// Merges runs of sorted `(angle, value)` nodes closer than `fraction` of the
/// mean spacing of their span, averaging both coordinates.
fn thin(nodes: &[(f64, f64)], fraction: f64) -> Vec<(f64, f64)> {
    let span = nodes[nodes.len() - 1].0 - nodes[0].0;
    let min_gap = fraction * span.max(1e-12) / nodes.len() as f64;
    let mut out: Vec<(f64, f64)> = Vec::with_capacity(nodes.len());
    let mut group: Vec<(f64, f64)> = Vec::new();
    let flush = |group: &mut Vec<(f64, f64)>, out: &mut Vec<(f64, f64)>| {
        if !group.is_empty() {
            let k = group.len() as f64;
            out.push((
                group.iter().map(|g| g.0).sum::<f64>() / k,
                group.iter().map(|g| g.1).sum::<f64>() / k,
            ));
            group.clear();
        }
    };
    for &n in nodes {
        if let Some(first) = group.first() {
            if n.0 - first.0 >= min_gap {
                flush(&mut group, &mut out);
            }
        }
        group.push(n);
    }
    flush(&mut group, &mut out);
    out
}

/// Covered arcs of sorted angles and the covered fraction.
fn covered_arcs(sorted: &[f64], mesh: usize, gap_factor: f64) -> (Vec<[f64; 2]>, f64) {
    let n = sorted.len();
    let gaps: Vec<f64> = (0..n)
        .map(|i| {
            let next = if i + 1 < n { sorted[i + 1] } else { sorted[0] + TAU };
            next - sorted[i]
        })
        .collect();
    let mut g = gaps.clone();
    g.sort_by(f64::total_cmp);
    let limit = (gap_factor * g[n / 2]).max(8.0 * TAU / mesh as f64);
    let breaks: Vec<usize> = (0..n).filter(|&i| gaps[i] > limit).collect();
    if breaks.is_empty() {
        return (vec![[sorted[0], sorted[0] + TAU]], 1.0);
    }
    let mut arcs = Vec::new();
    let mut uncovered = 0.0;
    for (j, &b) in breaks.iter().enumerate() {
        uncovered += gaps[b];
        let start = sorted[(b + 1) % n];
        let mut end = sorted[breaks[(j + 1) % breaks.len()]];
        if end < start {
            end += TAU;
        }
        arcs.push([start, end]);
    }
    (arcs, 1.0 - uncovered / TAU)
}

/// Pointwise recovery of the norm at interior `x`.
///
/// Differentials `p` of `d(., z)` at `x` are collected for boundary nodes
/// where `d(., z)` passes the smoothness test; each satisfies `F̄*(p) = 1`.
/// The co-norm is interpolated on the covered cone, inverted through the
/// Legendre transform, and reversed: `F(x, y) = F̄(x, -y)`.
pub fn recover_norm_at(engine: &Engine, x: &[f64], opts: &RecoveryOptions) -> Result<RecoveredNormSamples> {
    let oracle = engine.oracle();
    let norm = oracle.norm();
    let m = engine.mesh().len();
    let certified: Vec<usize> = (0..m)
        .into_par_iter()
        .map(|k| {
            let z = engine.mesh()[k].point;
            Ok(SmoothnessProbe::new(oracle, engine.back(k)?, &z, x)?.smooth.then_some(k))
        })
        .collect::<Result<Vec<Option<usize>>>>()?
        .into_iter()
        .flatten()
        .collect();
    let covectors = engine.differentials(x, &certified)?;
    let needed = 2 * x.len();
    if covectors.len() < needed {
        return Err(Error::InsufficientCone {
            found: covectors.len(),
            needed,
        });
    }
    let mut dual_residual: f64 = 0.0;
    for p in &covectors {
        let rev = norm.dual_norm(x, &[-p[0], -p[1]])?;
        dual_residual = dual_residual.max((rev - 1.0).abs());
    }

    let mut nodes: Vec<(f64, f64)> = covectors
        .iter()
        .map(|p| (p[1].atan2(p[0]), 1.0 / (p[0] * p[0] + p[1] * p[1]).sqrt()))
        .collect();
    nodes.sort_by(|a, b| a.0.total_cmp(&b.0));
    let nodes = thin(&nodes, MERGE_FRACTION);
    let angles: Vec<f64> = nodes.iter().map(|n| n.0).collect();
    let values: Vec<f64> = nodes.iter().map(|n| n.1).collect();
    let (arcs, coverage) = covered_arcs(&angles, m, opts.gap_factor);
    let shape = opts.shape * coverage * TAU / angles.len() as f64;
    let (weights, constant) = fit(&angles, &values, shape)?;
    let rec = RecoveredNorm {
        base: [x[0], x[1]],
        angles,
        weights,
        constant,
        shape,
        arcs,
    };

    let total: f64 = rec.arcs.iter().map(|[s, e]| e - s).sum();
    let mut samples = Vec::with_capacity(opts.directions);
    for [s, e] in &rec.arcs {
        let k = ((opts.directions as f64 * (e - s) / total).round() as usize).max(1);
        let full = e - s >= TAU - 1e-12;
        for i in 0..k {
            let t = if full {
                i as f64 / k as f64
            } else {
                (i as f64 + 0.5) / k as f64
            };
            let a = wrap_angle(s + t * (e - s));
            let u = [a.cos(), a.sin()];
            let w = rec.dual(&u);
            let p = [u[0] / w, u[1] / w];
            let ybar = legendre_inverse_of_conorm(|q: &[f64]| rec.dual(q), &p)?;
            let y = [-ybar[0], -ybar[1]];
            let r = (y[0] * y[0] + y[1] * y[1]).sqrt();
            let direction = [y[0] / r, y[1] / r];
            samples.push(NormSample {
                direction,
                recovered: 1.0 / r,
                truth: Some(norm.value(x, &direction)),
            });
        }
    }
    Ok(RecoveredNormSamples {
        base: [x[0], x[1]],
        samples,
        coverage,
        certified: covectors.len(),
        dual_residual,
        norm: rec,
    })
}

/// Boundary value `F(z, y)` for outward `y` from difference quotients
/// `d(z - s y, z) / s` at `s = h, h/2, h/4` (`h = 1e-2` diameter),
/// Richardson-extrapolated.
pub fn boundary_norm_recovery(engine: &Engine, theta: f64, y: &[f64]) -> Result<f64> {
    let oracle = engine.oracle();
    let domain = oracle.domain();
    let nu = domain.outward_normal(theta);
    let ny = (y[0] * y[0] + y[1] * y[1]).sqrt();
    if !(dot(&nu, y) > 1e-3 * ny) {
        return Err(Error::Domain(format!(
            "velocity {y:?} is not strictly outward at boundary parameter {theta}"
        )));
    }
    let z = domain.point(theta);
    let field = oracle.backward_to(&z)?;
    let h = super::DIFFERENTIAL_FRACTION * domain.diameter();
    let mut q = [0.0; 3];
    for (i, qi) in q.iter_mut().enumerate() {
        let s = h / f64::powi(2.0, i as i32);
        let c = [z[0] - s * y[0], z[1] - s * y[1]];
        if domain.clearance(&c) <= 0.0 {
            return Err(Error::Domain(format!("curve point {c:?} leaves the domain")));
        }
        *qi = field.query(oracle, &c)? / s;
    }
    let r1 = 2.0 * q[1] - q[0];
    let r2 = 2.0 * q[2] - q[1];
    Ok((4.0 * r2 - r1) / 3.0)
}
