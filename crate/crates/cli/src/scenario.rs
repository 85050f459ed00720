//! Scenario files: one TOML document per run.

use std::path::{Path, PathBuf};

use finsler_core::distance::OracleOptions;
use finsler_core::domain::Domain;
use finsler_core::minkowski::DirectionalBump;
use finsler_core::reconstruction::{NonuniquenessOptions, RecoveryOptions};
use finsler_core::FiberNorm;
use serde::Deserialize;

use crate::Failure;

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default)]
    pub name: String,
    #[serde(default)]
    pub seed: u64,
    pub metric: Option<FiberNorm>,
    pub domain: Option<Domain>,
    pub oracle: Option<OracleOptions>,
    #[serde(default)]
    pub sources: Sources,
    #[serde(default)]
    pub recover: RecoverSection,
    #[serde(default)]
    pub nonunique: NonuniqueSection,
    #[serde(default)]
    pub elastic: ElasticSection,
    #[serde(default)]
    pub geodesy: GeodesySection,
    /// Directory of the scenario file; relative paths resolve against it.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Sources {
    /// Random interior sources.
    pub count: usize,
    /// Minimum clearance of random sources, in diameters.
    pub margin: f64,
    /// Fixed sources, placed before the random ones.
    pub points: Vec<[f64; 2]>,
}

impl Default for Sources {
    fn default() -> Self {
        Sources {
            count: 40,
            margin: 0.0,
            points: Vec::new(),
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(default)]
pub struct RecoverSection {
    /// Boundary distance data file; generated from the scenario if absent.
    pub data: Option<PathBuf>,
    pub points: usize,
    /// Minimum clearance of recovery points, in diameters.
    pub margin: f64,
    /// Largest relative error of the recovered norm on the covered cone.
    pub tolerance: f64,
    pub charts: bool,
    #[serde(flatten)]
    pub options: RecoveryOptions,
}

impl Default for RecoverSection {
    fn default() -> Self {
        RecoverSection {
            data: None,
            points: 8,
            margin: 0.2,
            tolerance: 1e-2,
            charts: true,
            options: RecoveryOptions::default(),
        }
    }
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(default)]
pub struct NonuniqueSection {
    /// A fixed bump to verify instead of the constructed one.
    pub control: Option<Control>,
    #[serde(flatten)]
    pub options: NonuniquenessOptions,
}

#[derive(Clone, Debug, Deserialize)]
pub struct Control {
    #[serde(flatten)]
    pub bump: DirectionalBump,
    pub amplitude: f64,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ElasticSection {
    /// Stiffness field JSON file.
    pub stiffness: Option<PathBuf>,
    /// Directions in the admissibility sweep.
    pub directions: usize,
    /// Rows of the travel-time table.
    pub table: usize,
}

impl Default for ElasticSection {
    fn default() -> Self {
        ElasticSection {
            stiffness: None,
            directions: 512,
            table: 32,
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeodesySection {
    /// Boundary nodes in the cut and focal table.
    pub nodes: usize,
    /// Normal geodesics dumped as trajectories, evenly spread over the nodes.
    pub trajectories: usize,
    /// Sharpen boundary cut distances by shooting (the oracle-only value
    /// can overshoot by the oracle tolerance).
    pub refined: bool,
    /// Allowed excess of the boundary cut distance over the focal distance.
    pub focal_slack: f64,
}

impl Default for GeodesySection {
    fn default() -> Self {
        GeodesySection {
            nodes: 32,
            trajectories: 4,
            refined: true,
            focal_slack: 2e-3,
        }
    }
}

impl Scenario {
    pub fn load(path: &Path) -> Result<Self, Failure> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut s: Scenario =
            toml::from_str(&text).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
        s.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        s.validate()?;
        Ok(s)
    }

    fn validate(&self) -> Result<(), Failure> {
        let bad = |m: &str| Err(Failure::Config(m.to_string()));
        if let Some(d) = &self.domain {
            d.validate().map_err(|e| Failure::Config(e.to_string()))?;
        }
        if let Some(o) = &self.oracle {
            if !(o.h > 0.0) || o.ring == 0 {
                return bad("oracle.h and oracle.ring must be positive");
            }
        }
        if let Some(m) = &self.metric {
            if m.dim() != 2 {
                return bad("metric must be two-dimensional");
            }
        }
        if self.sources.count + self.sources.points.len() == 0 {
            return bad("at least one source is required");
        }
        if self.recover.points == 0 || self.recover.options.directions == 0 {
            return bad("recover.points and recover.directions must be positive");
        }
        let n = &self.nonunique.options;
        if n.angles == 0 || n.lattice == 0 || !(n.spacing > 0.0) || !(n.radius > 0.0) {
            return bad("nonunique resolutions must be positive");
        }
        if self.elastic.directions == 0 || self.elastic.table == 0 {
            return bad("elastic.directions and elastic.table must be positive");
        }
        if self.geodesy.nodes == 0 {
            return bad("geodesy.nodes must be positive");
        }
        Ok(())
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn metric(&self) -> Result<&FiberNorm, Failure> {
        self.metric.as_ref().ok_or_else(|| Failure::Config("missing [metric]".into()))
    }

    pub fn domain(&self) -> Result<&Domain, Failure> {
        self.domain.as_ref().ok_or_else(|| Failure::Config("missing [domain]".into()))
    }

    pub fn oracle(&self) -> Result<&OracleOptions, Failure> {
        self.oracle.as_ref().ok_or_else(|| Failure::Config("missing [oracle]".into()))
    }

    /// Fixed sources followed by `count` seeded random ones.
    pub fn source_points(&self, domain: &Domain) -> Result<Vec<[f64; 2]>, Failure> {
        for p in &self.sources.points {
            if !domain.inside(p) {
                return Err(Failure::Config(format!("source {p:?} is outside the domain")));
            }
        }
        let mut pts = self.sources.points.clone();
        pts.extend(domain.interior_samples(
            self.sources.count,
            self.sources.margin * domain.diameter(),
            self.seed,
        ));
        Ok(pts)
    }
}
