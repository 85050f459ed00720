use std::f64::consts::TAU;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distance::{DistanceOracle, GClass, GoodSetProbe, OracleOptions};
use crate::domain::Domain;
use crate::error::{Error, Result};
use crate::minkowski::{DirectionalBump, FiberNorm};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NonuniquenessOptions {
    /// Candidate base-point spacing, in diameters.
    pub spacing: f64,
    /// Angular cells per base point.
    pub angles: usize,
    /// Cells kept between the bump support and any good direction.
    pub margin_cells: usize,
    /// Minimum distance of the base support from the boundary, in diameters.
    pub boundary_margin: f64,
    /// Initial base radius of the bump, in diameters.
    pub radius: f64,
    /// Upper bound of the amplitude `s`.
    pub max_amplitude: f64,
    /// Side of the base x direction verification lattice.
    pub lattice: usize,
}

impl Default for NonuniquenessOptions {
    fn default() -> Self {
        NonuniquenessOptions {
            spacing: 0.0625,
            angles: 64,
            margin_cells: 2,
            boundary_margin: 0.1,
            radius: 0.05,
            max_amplitude: 0.2,
            lattice: 64,
        }
    }
}

/// Outcome of the positivity sweep for `H`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Admissibility {
    pub lattice_points: usize,
    pub min_eigenvalue: f64,
    /// Fraction of sampled `(x, v)` found outside the good set.
    pub complement_fraction: f64,
    pub candidates: usize,
    /// Bad angular run shared by the chosen base point and its rim, in cells.
    pub run_cells: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NonuniquenessPair {
    pub base: FiberNorm,
    pub perturbed: FiberNorm,
    pub bump: DirectionalBump,
    pub amplitude: f64,
    pub admissibility: Admissibility,
}

fn outside_good_set(c: GClass) -> bool {
    matches!(c, GClass::NotMinimizing | GClass::TrappedUpToHorizon)
}

fn cell_direction(k: usize, cells: usize) -> [f64; 2] {
    let a = TAU * k as f64 / cells as f64;
    [a.cos(), a.sin()]
}

/// Longest cyclic run of `true`; `(start, length)`.
fn longest_run(flags: &[bool]) -> (usize, usize) {
    let n = flags.len();
    if flags.iter().all(|&f| f) {
        return (0, n);
    }
    let mut best = (0, 0);
    for start in 0..n {
        if !flags[start] || flags[(start + n - 1) % n] {
            continue;
        }
        let len = (0..n).take_while(|&i| flags[(start + i) % n]).count();
        if len > best.1 {
            best = (start, len);
        }
    }
    best
}

/// Lowest eigenvalue of the fundamental tensor of `norm` over base points
/// in the bump support and directions in its angular window.
fn min_tensor_eigenvalue(norm: &FiberNorm, bump: &DirectionalBump, side: usize) -> Result<f64> {
    let pts: Vec<([f64; 2], [f64; 2])> = (0..side)
        .flat_map(|i| {
            let r = bump.radius * (i as f64 + 0.5) / side as f64;
            let phi = TAU * i as f64 * 0.618_033_988_749_894_9;
            let x = [bump.center[0] + r * phi.cos(), bump.center[1] + r * phi.sin()];
            (0..side).map(move |j| {
                let a = bump.angle + bump.half_width * (2.0 * (j as f64 + 0.5) / side as f64 - 1.0);
                (x, [a.cos(), a.sin()])
            })
        })
        .collect();
    let eig: Result<Vec<f64>> = pts
        .par_iter()
        .map(|(x, y)| Ok(norm.fundamental_tensor(x, y)?.min_eigenvalue()))
        .collect();
    Ok(eig?.into_iter().fold(f64::INFINITY, f64::min))
}

/// Builds `H = (1 + s alpha) F` with `alpha` a bump supported in the sampled
/// complement of the closure of the good set.
///
/// The good set is sampled on a grid of base points with `angles` directions
/// each. The base point with the longest run of bad directions carries the
/// bump; its angular support keeps `margin_cells` cells clear of good
/// samples, after intersecting its bad directions with those of eight points
/// on the rim of the base support. `s` is the largest value up to `max_amplitude` for which
/// the fundamental tensor stays positive definite on the verification
/// lattice.
pub fn make_nonuniqueness_pair(oracle: &DistanceOracle, opts: &NonuniquenessOptions) -> Result<NonuniquenessPair> {
    let domain = oracle.domain();
    let norm = oracle.norm();
    let diam = domain.diameter();
    let radius0 = opts.radius * diam;
    let clearance = opts.boundary_margin * diam + radius0;
    let (lo, hi) = domain.bounding_box();
    let step = opts.spacing * diam;
    let mut candidates = Vec::new();
    let mut y = lo[1];
    while y <= hi[1] {
        let mut x = lo[0];
        while x <= hi[0] {
            if domain.clearance(&[x, y]) >= clearance {
                candidates.push([x, y]);
            }
            x += step;
        }
        y += step;
    }
    let cells = opts.angles;
    let flags: Vec<Vec<bool>> = candidates
        .par_iter()
        .map(|x| {
            let probe = GoodSetProbe::new(oracle, x)?;
            (0..cells)
                .map(|k| Ok(outside_good_set(probe.classify(&cell_direction(k, cells))?.class)))
                .collect::<Result<Vec<bool>>>()
        })
        .collect::<Result<_>>()?;
    let bad: usize = flags.iter().map(|f| f.iter().filter(|&&b| b).count()).sum();
    let complement_fraction = bad as f64 / (cells * candidates.len()).max(1) as f64;

    let mut ranked: Vec<(usize, (usize, usize))> = flags.iter().map(|f| longest_run(f)).enumerate().collect();
    ranked.sort_by(|a, b| b.1 .1.cmp(&a.1 .1).then(a.0.cmp(&b.0)));
    let cell = TAU / cells as f64;
    let needed = 2 * opts.margin_cells + 2;
    let mut chosen = None;
    'search: for &(idx, (_, len)) in ranked.iter().take(8) {
        if len < needed {
            break;
        }
        let center = candidates[idx];
        for r in [radius0, 0.5 * radius0, 0.25 * radius0] {
            // bad directions shared by the center and eight rim points
            let mut common = flags[idx].clone();
            for j in 0..8 {
                let a = TAU * j as f64 / 8.0;
                let p = [center[0] + r * a.cos(), center[1] + r * a.sin()];
                let probe = GoodSetProbe::new(oracle, &p)?;
                for (k, c) in common.iter_mut().enumerate() {
                    if *c && !outside_good_set(probe.classify(&cell_direction(k, cells))?.class) {
                        *c = false;
                    }
                }
            }
            let (start, len) = longest_run(&common);
            if len < needed {
                continue;
            }
            let (angle, half_width) = if len == cells {
                (0.0, std::f64::consts::PI - cell)
            } else {
                (
                    (start as f64 + 0.5 * (len as f64 - 1.0)) * cell,
                    (0.5 * (len as f64 - 1.0) + 1.0 - opts.margin_cells as f64) * cell,
                )
            };
            chosen = Some((
                DirectionalBump {
                    center: center.to_vec(),
                    radius: r,
                    angle: crate::numeric::wrap_angle(angle),
                    half_width,
                },
                len,
            ));
            break 'search;
        }
    }
    let Some((bump, run_cells)) = chosen else {
        return Err(Error::ConstructionImpossible(format!(
            "no base point with a bad angular run wider than {} cells and a stable neighborhood \
             ({} candidates, complement fraction {complement_fraction:.3})",
            2 * opts.margin_cells + 1,
            candidates.len()
        )));
    };

    let pd = |s: f64| -> Result<f64> {
        let h = FiberNorm::perturbed(norm.clone(), s, bump.clone());
        min_tensor_eigenvalue(&h, &bump, opts.lattice)
    };
    let mut s = opts.max_amplitude;
    let mut min_eig = pd(s)?;
    if !(min_eig > 0.0) {
        let (mut good, mut badv) = (0.0, s);
        for _ in 0..30 {
            let mid = 0.5 * (good + badv);
            if pd(mid)? > 0.0 {
                good = mid;
            } else {
                badv = mid;
            }
        }
        s = good;
        min_eig = pd(s)?;
    }
    if !(s > 0.0) {
        return Err(Error::ConstructionImpossible("no positive amplitude keeps the perturbation convex".into()));
    }
    Ok(NonuniquenessPair {
        base: norm.clone(),
        perturbed: FiberNorm::perturbed(norm.clone(), s, bump.clone()),
        bump,
        amplitude: s,
        admissibility: Admissibility {
            lattice_points: opts.lattice * opts.lattice,
            min_eigenvalue: min_eig,
            complement_fraction,
            candidates: candidates.len(),
            run_cells,
        },
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NonuniquenessReport {
    pub sources: usize,
    /// `max |d_F - d_H|` over sources and boundary nodes.
    pub matrix_diff: f64,
    /// Largest per-entry allowance `2 (eps d_F + 1e-9)`.
    pub bound: f64,
    /// `max |d_F - d_H| / allowance`; at most 1 when the data agree.
    pub worst_ratio: f64,
    /// `sup |F - H|` over sampled unit vectors.
    pub norm_gap: f64,
    pub degenerate: bool,
    pub pass: bool,
}

/// Compares the boundary distance data of `f` and `h` from `sources` and
/// the sup-norm gap between the norms. Passes when every entry agrees
/// within `2 eps` and the gap is at least ten times the bound.
pub fn verify_nonuniqueness(
    f: &FiberNorm,
    h: &FiberNorm,
    domain: &Domain,
    opts: &OracleOptions,
    sources: &[[f64; 2]],
    eps: f64,
) -> Result<NonuniquenessReport> {
    let of = DistanceOracle::new(f, domain, opts.clone())?;
    let oh = DistanceOracle::new(h, domain, opts.clone())?;
    let rows: Vec<(f64, f64, f64)> = sources
        .par_iter()
        .map(|s| {
            let a = of.forward_from(s)?.boundary_values(&of);
            let b = oh.forward_from(s)?.boundary_values(&oh);
            let mut diff: f64 = 0.0;
            let mut bound: f64 = 0.0;
            let mut ratio: f64 = 0.0;
            for (x, y) in a.iter().zip(&b) {
                let allow = 2.0 * (eps * x + 1e-9);
                diff = diff.max((x - y).abs());
                bound = bound.max(allow);
                ratio = ratio.max((x - y).abs() / allow);
            }
            Ok((diff, bound, ratio))
        })
        .collect::<Result<_>>()?;
    let matrix_diff = rows.iter().map(|r| r.0).fold(0.0, f64::max);
    let bound = rows.iter().map(|r| r.1).fold(0.0, f64::max);
    let worst_ratio = rows.iter().map(|r| r.2).fold(0.0, f64::max);

    let mut pts = Vec::new();
    let (lo, hi) = domain.bounding_box();
    let step = 0.05 * domain.diameter();
    let mut y = lo[1];
    while y <= hi[1] {
        let mut x = lo[0];
        while x <= hi[0] {
            if domain.clearance(&[x, y]) > 0.0 {
                pts.push([x, y]);
            }
            x += step;
        }
        y += step;
    }
    if let FiberNorm::Perturbed { bump, .. } = h {
        for i in 0..16 {
            let r = bump.radius * i as f64 / 16.0;
            let a = TAU * i as f64 * 0.618_033_988_749_894_9;
            pts.push([bump.center[0] + r * a.cos(), bump.center[1] + r * a.sin()]);
        }
    }
    let norm_gap = pts
        .par_iter()
        .map(|x| {
            (0..256)
                .map(|k| {
                    let u = cell_direction(k, 256);
                    (f.value(x, &u) - h.value(x, &u)).abs()
                })
                .fold(0.0, f64::max)
        })
        .reduce(|| 0.0, f64::max);
    let degenerate = norm_gap == 0.0;
    Ok(NonuniquenessReport {
        sources: sources.len(),
        matrix_diff,
        bound,
        worst_ratio,
        norm_gap,
        degenerate,
        pass: !degenerate && worst_ratio <= 1.0 && norm_gap >= 10.0 * bound,
    })
}
