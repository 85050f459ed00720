//! Finsler distances: curve length, the graph oracle, geodesic shooting,
//! boundary distance functions and the good-set classifiers.

mod classify;
mod oracle;
mod shoot;

pub use classify::{classify_g, classify_ghat, GClass, GVerdict, GoodSetProbe, SmoothnessProbe};
pub use oracle::{ring_offsets, DistanceOracle, OracleOptions, RunDirection, SourceField, EPS_FLOOR};
pub use shoot::{closest_boundary_point, shoot_distance, shoot_distances, ClosestBoundary, ShotResult};

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::domain::Domain;
use crate::error::{Error, Result};
use crate::minkowski::FiberNorm;
use crate::numeric::distance;

/// Finsler length of a polyline, midpoint rule per segment.
pub fn curve_length(norm: &FiberNorm, polyline: &[Vec<f64>]) -> Result<f64> {
    if polyline.len() < 2 {
        return Err(Error::Input("a polyline needs at least two points".into()));
    }
    let mut total = 0.0;
    for w in polyline.windows(2) {
        let d: Vec<f64> = w[1].iter().zip(&w[0]).map(|(b, a)| b - a).collect();
        let m: Vec<f64> = w[1].iter().zip(&w[0]).map(|(b, a)| 0.5 * (a + b)).collect();
        total += norm.value(&m, &d);
    }
    Ok(total)
}

/// `r_x`: the distances from a source to every boundary node.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundaryDistanceFunction {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<Vec<f64>>,
    pub values: Vec<f64>,
}

impl BoundaryDistanceFunction {
    pub fn blinded(mut self) -> Self {
        self.source = None;
        self
    }
}

/// `r_x` from a forward oracle run.
pub fn boundary_distance_function(oracle: &DistanceOracle, x: &[f64]) -> Result<BoundaryDistanceFunction> {
    let field = oracle.forward_from(x)?;
    Ok(BoundaryDistanceFunction {
        source: Some(x.to_vec()),
        values: field.boundary_values(oracle),
    })
}

/// `r_x` for many sources, in parallel.
pub fn boundary_distance_functions(
    oracle: &DistanceOracle,
    sources: &[Vec<f64>],
) -> Result<Vec<BoundaryDistanceFunction>> {
    sources
        .par_iter()
        .map(|x| boundary_distance_function(oracle, x))
        .collect()
}

/// `max d(a, b) / d(b, a)` over sampled pairs.
pub fn quasi_symmetry_constant(oracle: &DistanceOracle, pairs: &[(Vec<f64>, Vec<f64>)]) -> Result<f64> {
    let ratios: Result<Vec<f64>> = pairs
        .par_iter()
        .map(|(a, b)| {
            let ab = oracle.distance(a, b)?;
            let ba = oracle.distance(b, a)?;
            Ok((ab / ba).max(ba / ab))
        })
        .collect();
    Ok(ratios?.into_iter().fold(1.0, f64::max))
}

/// Flat-metric self test of the oracle discretization.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Calibration {
    pub h: f64,
    pub ring: usize,
    /// Largest relative error of source-to-boundary distances in the
    /// Euclidean metric.
    pub flat_max_rel_error: f64,
    /// Tolerance adopted: `max(flat error, floor)`.
    pub eps: f64,
}

/// Builds the Euclidean oracle on `domain` at the given resolution and
/// compares source-to-boundary distances from `sources` random interior
/// points against straight-line lengths.
pub fn calibrate_flat(domain: &Domain, opts: &OracleOptions, sources: usize, seed: u64) -> Result<Calibration> {
    let flat = FiberNorm::euclidean(2);
    let oracle = DistanceOracle::new(&flat, domain, opts.clone())?;
    let mut pts = domain.interior_samples(sources, 0.05 * domain.diameter(), seed);
    if domain.inside(&[0.0, 0.0]) {
        pts.insert(0, [0.0, 0.0]);
    }
    let mut worst: f64 = 0.0;
    for x in &pts {
        let f = oracle.forward_from(x)?;
        for (k, b) in domain.boundary_mesh().iter().enumerate() {
            if !domain.segment_inside(x, &b.point, 1e-3, 0.0) {
                continue;
            }
            let exact = distance(x, &b.point);
            let got = f.at_node(oracle.boundary_nodes()[k]);
            worst = worst.max((got - exact).abs() / exact);
        }
    }
    Ok(Calibration {
        h: opts.h,
        ring: opts.ring,
        flat_max_rel_error: worst,
        eps: worst.max(EPS_FLOOR),
    })
}

/// Random point pairs in the domain, at least `min_sep` apart.
pub fn random_pairs(domain: &Domain, count: usize, margin: f64, min_sep: f64, seed: u64) -> Vec<(Vec<f64>, Vec<f64>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let pts = domain.interior_samples(2, margin, rng.gen());
        if distance(&pts[0], &pts[1]) >= min_sep {
            out.push((pts[0].to_vec(), pts[1].to_vec()));
        }
    }
    out
}

#[cfg(test)]
mod tests;
