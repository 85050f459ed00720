//! Classification of unit directions into the good sets.

use serde::Serialize;

use super::oracle::{DistanceOracle, SourceField};
use crate::error::Result;
use crate::geodesic::{ExitRecord, Flow, PhasePoint};
use crate::numeric::{distance, dot};

/// Horizon for trapped geodesics, in diameters.
pub const HORIZON_DIAMETERS: f64 = 10.0;
/// Stencil step for smoothness probes, as a fraction of the diameter.
pub const STENCIL_FRACTION: f64 = 1e-2;
/// Allowed ratio of the stencil residual to the flat reference.
pub const SMOOTHNESS_FACTOR: f64 = 10.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GClass {
    InG,
    NotMinimizing,
    TrappedUpToHorizon,
    TangentialExit,
}

/// Classification of all directions at one base point, sharing the
/// forward oracle run from it.
pub struct GoodSetProbe<'a> {
    oracle: &'a DistanceOracle,
    x: Vec<f64>,
    field: SourceField,
    horizon: f64,
}

/// Outcome of a good-set classification with the supporting numbers.
#[derive(Clone, Debug, Serialize)]
pub struct GVerdict {
    pub class: GClass,
    pub exit: Option<ExitRecord>,
    pub oracle_distance: Option<f64>,
}

impl<'a> GoodSetProbe<'a> {
    pub fn new(oracle: &'a DistanceOracle, x: &[f64]) -> Result<Self> {
        let field = oracle.forward_from(x)?;
        let (_, hi) = oracle.norm().speed_bounds(x);
        Ok(GoodSetProbe {
            oracle,
            x: x.to_vec(),
            field,
            horizon: HORIZON_DIAMETERS * oracle.domain().diameter() * hi.max(1.0),
        })
    }

    pub fn field(&self) -> &SourceField {
        &self.field
    }

    pub fn classify(&self, v: &[f64]) -> Result<GVerdict> {
        let norm = self.oracle.norm();
        let domain = self.oracle.domain();
        let flow = Flow::for_domain(norm, domain);
        let start = PhasePoint::unit(norm, &self.x, v)?;
        let tr = flow.integrate(Some(domain), &start, self.horizon)?;
        let Some(exit) = tr.exit else {
            return Ok(GVerdict {
                class: GClass::TrappedUpToHorizon,
                exit: None,
                oracle_distance: None,
            });
        };
        if exit.tangential {
            return Ok(GVerdict {
                class: GClass::TangentialExit,
                exit: Some(exit),
                oracle_distance: None,
            });
        }
        let d = self.field.query(self.oracle, &exit.point)?;
        let class = if exit.time <= d + self.oracle.abs_tolerance(d) {
            GClass::InG
        } else {
            GClass::NotMinimizing
        };
        Ok(GVerdict {
            class,
            exit: Some(exit),
            oracle_distance: Some(d),
        })
    }

    /// Membership in the smooth good set: in `G` and `d(., z)` smooth at `x`
    /// for the exit point `z`.
    pub fn classify_hat(&self, v: &[f64]) -> Result<bool> {
        let verdict = self.classify(v)?;
        if verdict.class != GClass::InG {
            return Ok(false);
        }
        let z = verdict.exit.expect("in G implies an exit").point;
        let back = self.oracle.backward_to(&z)?;
        Ok(SmoothnessProbe::new(self.oracle, &back, &z, &self.x)?.smooth)
    }
}

/// `(x, v)` classification against the oracle.
pub fn classify_g(oracle: &DistanceOracle, x: &[f64], v: &[f64]) -> Result<GClass> {
    if is_boundary_outward(oracle, x, v) {
        return Ok(GClass::InG);
    }
    Ok(GoodSetProbe::new(oracle, x)?.classify(v)?.class)
}

/// Smooth good set membership. Outward vectors at boundary points belong to
/// it by definition.
pub fn classify_ghat(oracle: &DistanceOracle, x: &[f64], v: &[f64]) -> Result<bool> {
    if is_boundary_outward(oracle, x, v) {
        return Ok(true);
    }
    GoodSetProbe::new(oracle, x)?.classify_hat(v)
}

fn is_boundary_outward(oracle: &DistanceOracle, x: &[f64], v: &[f64]) -> bool {
    let d = oracle.domain();
    if d.clearance(x).abs() > 1e-12 {
        return false;
    }
    dot(&d.outward_normal(d.param_of(x)), v) > 0.0
}

/// Second-difference smoothness test of an oracle distance field at `x`.
///
/// The largest second difference over four stencil axes, divided by `h^2`,
/// is compared against the same quantity for the Euclidean distance to the
/// field's source point, scaled by the local speed bound.
#[derive(Clone, Debug, Serialize)]
pub struct SmoothnessProbe {
    pub residual: f64,
    pub threshold: f64,
    pub smooth: bool,
}

impl SmoothnessProbe {
    pub fn new(oracle: &DistanceOracle, field: &SourceField, source: &[f64], x: &[f64]) -> Result<Self> {
        let h = STENCIL_FRACTION * oracle.domain().diameter();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let axes = [[1.0, 0.0], [0.0, 1.0], [s, s], [s, -s]];
        let f0 = field.query(oracle, x)?;
        let e0 = distance(source, x);
        let mut residual: f64 = 0.0;
        let mut flat: f64 = 0.0;
        for a in axes {
            let p = [x[0] + h * a[0], x[1] + h * a[1]];
            let m = [x[0] - h * a[0], x[1] - h * a[1]];
            let d2 = field.query(oracle, &p)? + field.query(oracle, &m)? - 2.0 * f0;
            residual = residual.max(d2.abs() / (h * h));
            let e2 = distance(source, &p) + distance(source, &m) - 2.0 * e0;
            flat = flat.max(e2.abs() / (h * h));
        }
        let (_, hi) = oracle.norm().speed_bounds(x);
        let threshold = SMOOTHNESS_FACTOR * flat * hi.max(1.0);
        Ok(SmoothnessProbe {
            residual,
            threshold,
            smooth: residual <= threshold,
        })
    }
}
