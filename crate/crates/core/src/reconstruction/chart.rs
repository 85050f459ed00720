use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::Engine;
use crate::error::{Error, Result};
use crate::geodesic::boundary_cut_distance;
use crate::numeric::condition_number;

/// Random tuples tried before a chart is declared impossible.
pub const MAX_TUPLES: usize = 200;
/// Smallest accepted determinant of the row-normalized differential matrix.
pub const DET_THRESHOLD: f64 = 1e-6;

/// Distance coordinates `x -> (d(x, z_1), ..., d(x, z_n))` certified at a point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChartCertificate {
    pub center: [f64; 2],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub center_index: Option<usize>,
    /// Boundary node indices; the first is the closest boundary node.
    pub nodes: Vec<usize>,
    pub det: f64,
    pub condition: f64,
    pub tuples_tried: usize,
}

/// Determinant and condition number of the matrix whose rows are the
/// normalized differentials of `d(., z_k)` at `x`.
pub fn chart_determinant(engine: &Engine, x: &[f64], nodes: &[usize]) -> Result<(f64, f64)> {
    let n = nodes.len();
    let mut m = DMatrix::zeros(n, 2);
    for (r, &k) in nodes.iter().enumerate() {
        let p = engine.differential(k, x)?;
        let s = (p[0] * p[0] + p[1] * p[1]).sqrt();
        if s == 0.0 {
            return Ok((0.0, f64::INFINITY));
        }
        m[(r, 0)] = p[0] / s;
        m[(r, 1)] = p[1] / s;
    }
    if n != 2 {
        return Err(Error::Input(format!("a 2-D chart needs 2 boundary nodes, got {n}")));
    }
    Ok((m.determinant(), condition_number(&m)))
}

/// Finds distance coordinates at `x`: `z_1` is the closest boundary node,
/// `z_2` is drawn from the nodes within an eighth of the mesh around it.
pub fn build_chart(engine: &Engine, x: &[f64], seed: u64) -> Result<ChartCertificate> {
    let oracle = engine.oracle();
    let domain = oracle.domain();
    if domain.clearance(x) <= 0.0 {
        return Err(Error::Domain(format!("chart center {x:?} is not interior")));
    }
    let r = oracle.forward_from(x)?.boundary_values(oracle);
    let z1 = (0..r.len()).min_by(|&a, &b| r[a].total_cmp(&r[b])).expect("non-empty mesh");
    let (_, hi) = oracle.norm().speed_bounds(x);
    let s_max = 2.0 * domain.diameter() * hi.max(1.0);
    let cut = boundary_cut_distance(oracle, engine.to_boundary(), engine.mesh()[z1].theta, s_max)?;
    if !cut.censored && r[z1] > cut.tau + oracle.abs_tolerance(cut.tau) {
        return Err(Error::Domain(format!(
            "{x:?} lies beyond the boundary cut distance {} of its closest boundary point",
            cut.tau
        )));
    }
    let m = r.len();
    let reach = (m / 8).max(2) as i64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best = 0.0f64;
    for tried in 1..=MAX_TUPLES {
        let mut off = 0;
        while off == 0 {
            off = rng.gen_range(-reach..=reach);
        }
        let z2 = (z1 as i64 + off).rem_euclid(m as i64) as usize;
        let nodes = vec![z1, z2];
        let (det, condition) = chart_determinant(engine, x, &nodes)?;
        if det.abs() > DET_THRESHOLD {
            return Ok(ChartCertificate {
                center: [x[0], x[1]],
                center_index: None,
                nodes,
                det,
                condition,
                tuples_tried: tried,
            });
        }
        best = best.max(det.abs());
    }
    Err(Error::ChartFailure { best_det: best })
}

/// Local injectivity of the distance coordinates on a 3x3 stencil of
/// spacing `h`: the nine images are distinct and every cell's discrete
/// Jacobian has the sign of the certificate.
pub fn stencil_injective(engine: &Engine, cert: &ChartCertificate, h: f64) -> Result<bool> {
    let oracle = engine.oracle();
    let fields: Vec<_> = cert.nodes.iter().map(|&k| engine.back(k)).collect::<Result<_>>()?;
    let mut img = [[[0.0f64; 2]; 3]; 3];
    for (i, row) in img.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            let p = [
                cert.center[0] + h * (i as f64 - 1.0),
                cert.center[1] + h * (j as f64 - 1.0),
            ];
            for (c, f) in fields.iter().enumerate() {
                v[c] = f.query(oracle, &p)?;
            }
        }
    }
    let flat: Vec<[f64; 2]> = img.iter().flatten().cloned().collect();
    for a in 0..flat.len() {
        for b in a + 1..flat.len() {
            if flat[a] == flat[b] {
                return Ok(false);
            }
        }
    }
    let sign = cert.det.signum();
    for i in 0..2 {
        for j in 0..2 {
            let o = img[i][j];
            let ex = img[i + 1][j];
            let ey = img[i][j + 1];
            let det = (ex[0] - o[0]) * (ey[1] - o[1]) - (ey[0] - o[0]) * (ex[1] - o[1]);
            if det * sign <= 0.0 {
                return Ok(false);
            }
        }
    }
    Ok(true)
}
