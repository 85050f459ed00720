//! The inverse pipeline.
//!
//! Two sides are kept apart. The *data side* ([`extend_to_boundary`],
//! [`embedding_check`], [`match_datasets`]) works on unlabeled r-vectors only.
//! The *engine side* ([`build_chart`], [`recover_norm_at`],
//! [`boundary_norm_recovery`]) needs distances off the sample set, which
//! blinded data cannot supply, and therefore runs against a forward
//! [`Engine`] built on the true norm. Non-uniqueness lives in
//! [`make_nonuniqueness_pair`] and [`verify_nonuniqueness`].

mod chart;
mod matching;
mod nonunique;
mod recover;

pub use chart::{build_chart, chart_determinant, stencil_injective, ChartCertificate, MAX_TUPLES, DET_THRESHOLD};
pub use matching::{hungarian, match_datasets, Matching};
pub use nonunique::{
    make_nonuniqueness_pair, verify_nonuniqueness, Admissibility, NonuniquenessOptions, NonuniquenessPair,
    NonuniquenessReport,
};
pub use recover::{
    boundary_norm_recovery, recover_norm_at, NormSample, RecoveredNorm, RecoveredNormSamples, RecoveryOptions,
};

use std::sync::OnceLock;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distance::{boundary_distance_functions, shoot_distances, DistanceOracle, SourceField};
use crate::domain::{BoundaryNode, Domain};
use crate::error::{Error, Result};

/// Unlabeled boundary distance data: `N` r-vectors over an `m`-node mesh.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundaryDistanceData {
    pub domain: Domain,
    pub mesh: Vec<BoundaryNode>,
    pub r_vectors: Vec<Vec<f64>>,
    /// Source locations, row-aligned with `r_vectors`. Absent in blinded data.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sources: Option<Vec<[f64; 2]>>,
}

impl BoundaryDistanceData {
    /// Samples `r_x` for each source through the oracle.
    pub fn generate(oracle: &DistanceOracle, sources: &[[f64; 2]]) -> Result<Self> {
        let pts: Vec<Vec<f64>> = sources.iter().map(|s| s.to_vec()).collect();
        let rs = boundary_distance_functions(oracle, &pts)?;
        Ok(BoundaryDistanceData {
            domain: oracle.domain().clone(),
            mesh: oracle.domain().boundary_mesh(),
            r_vectors: rs.into_iter().map(|r| r.values).collect(),
            sources: Some(sources.to_vec()),
        })
    }

    pub fn blinded(mut self) -> Self {
        self.sources = None;
        self
    }

    pub fn len(&self) -> usize {
        self.r_vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r_vectors.is_empty()
    }

    pub fn mesh_len(&self) -> usize {
        self.mesh.len()
    }

    pub fn validate(&self) -> Result<()> {
        let m = self.mesh.len();
        if m == 0 {
            return Err(Error::Input("empty boundary mesh".into()));
        }
        for (i, r) in self.r_vectors.iter().enumerate() {
            if r.len() != m {
                return Err(Error::Input(format!("r-vector {i} has length {} (mesh has {m})", r.len())));
            }
            if r.iter().any(|v| !v.is_finite() || *v < 0.0) {
                return Err(Error::Input(format!("r-vector {i} has a negative or non-finite entry")));
            }
        }
        if let Some(s) = &self.sources {
            if s.len() != self.r_vectors.len() {
                return Err(Error::Input("source list and r-vectors differ in length".into()));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let d: Self = serde_json::from_str(s)?;
        d.validate()?;
        Ok(d)
    }
}

/// `r_x` for boundary sources, `r_x(z) = sup_q (r_q(z) - r_q(x))` over the
/// stored r-vectors. Row `i` belongs to the boundary node `i`; the diagonal
/// is zero. Each entry is a lower bound of the exact value.
pub fn extend_to_boundary(data: &BoundaryDistanceData) -> Vec<Vec<f64>> {
    let m = data.mesh_len();
    (0..m)
        .into_par_iter()
        .map(|x| {
            let mut row = vec![0.0f64; m];
            for r in &data.r_vectors {
                for (z, out) in row.iter_mut().enumerate() {
                    *out = out.max(r[z] - r[x]);
                }
            }
            row[x] = 0.0;
            row
        })
        .collect()
}

/// Injectivity and Lipschitz summary of `x -> r_x` on the sample set.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EmbeddingReport {
    /// Smallest `||r_a - r_b||_inf` over distinct pairs.
    pub min_sup_gap: f64,
    /// Pairs whose sup-gap is below twice the oracle tolerance.
    pub collisions: Vec<(usize, usize)>,
    /// `min / max` of `||r_a - r_b||_inf / d(a, b)`, when sources and an
    /// oracle are available.
    pub min_ratio: Option<f64>,
    pub max_ratio: Option<f64>,
    pub ratios: Vec<RatioRow>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RatioRow {
    pub a: usize,
    pub b: usize,
    pub sup_gap: f64,
    pub distance: f64,
    pub ratio: f64,
}

fn sup_gap(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Collision check at tolerance `eps`; with `oracle` and source locations,
/// also the ratio table against `d(a, b)`.
pub fn embedding_check(
    data: &BoundaryDistanceData,
    eps: f64,
    oracle: Option<&DistanceOracle>,
) -> Result<EmbeddingReport> {
    data.validate()?;
    let n = data.len();
    let mut min_gap = f64::INFINITY;
    let mut collisions = Vec::new();
    let mut gaps = vec![Vec::new(); n];
    for a in 0..n {
        for b in a + 1..n {
            let (ra, rb) = (&data.r_vectors[a], &data.r_vectors[b]);
            let g = sup_gap(ra, rb);
            let scale = ra.iter().chain(rb).cloned().fold(0.0, f64::max);
            if g < 2.0 * (eps * scale + 1e-9) {
                collisions.push((a, b));
            }
            min_gap = min_gap.min(g);
            gaps[a].push((b, g));
        }
    }
    let mut ratios = Vec::new();
    if let (Some(oracle), Some(src)) = (oracle, &data.sources) {
        let fields: Result<Vec<SourceField>> = src.par_iter().map(|s| oracle.forward_from(s)).collect();
        let fields = fields?;
        for (a, row) in gaps.iter().enumerate() {
            for &(b, g) in row {
                let d = fields[a].query(oracle, &src[b])?;
                if d > 0.0 {
                    ratios.push(RatioRow {
                        a,
                        b,
                        sup_gap: g,
                        distance: d,
                        ratio: g / d,
                    });
                }
            }
        }
    }
    let (min_ratio, max_ratio) = if ratios.is_empty() {
        (None, None)
    } else {
        (
            Some(ratios.iter().map(|r| r.ratio).fold(f64::INFINITY, f64::min)),
            Some(ratios.iter().map(|r| r.ratio).fold(0.0, f64::max)),
        )
    };
    Ok(EmbeddingReport {
        min_sup_gap: min_gap,
        collisions,
        min_ratio,
        max_ratio,
        ratios,
    })
}

/// Where distance differentials come from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DifferentialSource {
    /// Backward oracle runs; exact for norms constant in space on convex
    /// domains, noisy at the oracle tolerance otherwise.
    Oracle,
    /// A fan of geodesics shot from each stencil point.
    Shooting,
}

/// Geodesics per fan for shooting differentials.
pub const FAN_SHOTS: usize = 256;

/// Forward engine for the engine-side pipeline: an oracle plus lazily
/// computed backward runs to every boundary node.
pub struct Engine<'a> {
    oracle: &'a DistanceOracle,
    source: DifferentialSource,
    mesh: Vec<BoundaryNode>,
    back: Vec<OnceLock<SourceField>>,
    to_boundary: OnceLock<SourceField>,
}

impl<'a> Engine<'a> {
    pub fn new(oracle: &'a DistanceOracle) -> Self {
        let mesh = oracle.domain().boundary_mesh();
        let source = if oracle.norm().is_homogeneous_in_space() {
            DifferentialSource::Oracle
        } else {
            DifferentialSource::Shooting
        };
        Engine {
            oracle,
            source,
            back: (0..mesh.len()).map(|_| OnceLock::new()).collect(),
            mesh,
            to_boundary: OnceLock::new(),
        }
    }

    pub fn with_source(mut self, source: DifferentialSource) -> Self {
        self.source = source;
        self
    }

    pub fn source(&self) -> DifferentialSource {
        self.source
    }

    pub fn oracle(&self) -> &DistanceOracle {
        self.oracle
    }

    pub fn mesh(&self) -> &[BoundaryNode] {
        &self.mesh
    }

    /// `d(., z_k)` as a backward run.
    pub fn back(&self, k: usize) -> Result<&SourceField> {
        if let Some(f) = self.back[k].get() {
            return Ok(f);
        }
        let f = self.oracle.backward_to(&self.mesh[k].point)?;
        Ok(self.back[k].get_or_init(|| f))
    }

    /// Computes every backward run up front, in parallel.
    pub fn prefill(&self) -> Result<()> {
        (0..self.mesh.len()).into_par_iter().try_for_each(|k| self.back(k).map(|_| ()))
    }

    pub fn to_boundary(&self) -> &SourceField {
        self.to_boundary.get_or_init(|| self.oracle.to_boundary())
    }

    /// Differential of `d(., z_k)` at `x` by central differences with step
    /// `1e-2` of the diameter.
    pub fn differential(&self, k: usize, x: &[f64]) -> Result<[f64; 2]> {
        Ok(self.differentials(x, &[k])?[0])
    }

    /// Differentials at `x` for several boundary nodes.
    pub fn differentials(&self, x: &[f64], nodes: &[usize]) -> Result<Vec<[f64; 2]>> {
        let h = DIFFERENTIAL_FRACTION * self.oracle.domain().diameter();
        let stencil = [[x[0] + h, x[1]], [x[0] - h, x[1]], [x[0], x[1] + h], [x[0], x[1] - h]];
        let values: Vec<Vec<f64>> = match self.source {
            DifferentialSource::Oracle => stencil
                .iter()
                .map(|p| {
                    nodes
                        .iter()
                        .map(|&k| self.back(k)?.query(self.oracle, p))
                        .collect::<Result<Vec<f64>>>()
                })
                .collect::<Result<_>>()?,
            DifferentialSource::Shooting => {
                let thetas: Vec<f64> = nodes.iter().map(|&k| self.mesh[k].theta).collect();
                stencil
                    .par_iter()
                    .map(|p| {
                        shoot_distances(self.oracle.norm(), self.oracle.domain(), p, &thetas, FAN_SHOTS)?
                            .into_iter()
                            .map(|d| d.ok_or_else(|| Error::numeric("no geodesic reaches a boundary node", None)))
                            .collect::<Result<Vec<f64>>>()
                    })
                    .collect::<Result<_>>()?
            }
        };
        Ok((0..nodes.len())
            .map(|i| {
                [
                    (values[0][i] - values[1][i]) / (2.0 * h),
                    (values[2][i] - values[3][i]) / (2.0 * h),
                ]
            })
            .collect())
    }
}

/// Central-difference step for distance differentials, relative to the
/// domain diameter.
pub const DIFFERENTIAL_FRACTION: f64 = 1e-2;
