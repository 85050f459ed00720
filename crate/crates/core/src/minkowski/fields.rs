//! Spatial coefficient fields used by the closed-form norm families.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A Gaussian term `amplitude * exp(-|x - center|^2 / (2 sigma^2))`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaussianBump {
    pub center: Vec<f64>,
    pub sigma: f64,
    pub amplitude: f64,
}

impl GaussianBump {
    #[inline]
    fn weight(&self, x: &[f64]) -> f64 {
        let r2: f64 = x
            .iter()
            .zip(&self.center)
            .map(|(a, c)| (a - c) * (a - c))
            .sum();
        (-r2 / (2.0 * self.sigma * self.sigma)).exp()
    }
}

/// Symmetric positive definite matrix field `A(x)` of a Riemannian metric.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MatrixField {
    Constant { matrix: Vec<Vec<f64>> },
    /// `A(x) = exp(2 phi(x)) I` with `phi` a sum of Gaussian bumps.
    Conformal { dim: usize, bumps: Vec<GaussianBump> },
}

impl MatrixField {
    pub fn identity(dim: usize) -> Self {
        MatrixField::Constant {
            matrix: (0..dim)
                .map(|i| (0..dim).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
                .collect(),
        }
    }

    pub fn constant(matrix: DMatrix<f64>) -> Self {
        MatrixField::Constant {
            matrix: matrix
                .row_iter()
                .map(|r| r.iter().cloned().collect())
                .collect(),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            MatrixField::Constant { matrix } => matrix.len(),
            MatrixField::Conformal { dim, .. } => *dim,
        }
    }

    pub fn is_constant(&self) -> bool {
        match self {
            MatrixField::Constant { .. } => true,
            MatrixField::Conformal { bumps, .. } => bumps.iter().all(|b| b.amplitude == 0.0),
        }
    }

    pub(crate) fn validate(&self) -> Result<()> {
        match self {
            MatrixField::Constant { matrix } => {
                let n = matrix.len();
                if !(n == 2 || n == 3) || matrix.iter().any(|r| r.len() != n) {
                    return Err(Error::Input(format!("metric matrix must be 2x2 or 3x3, got {n} rows")));
                }
                let m = self.matrix_at(&vec![0.0; n]);
                if (&m - m.transpose()).amax() > 1e-12 * m.amax() {
                    return Err(Error::Input("metric matrix is not symmetric".into()));
                }
                let min = crate::numeric::min_eigenvalue(&m);
                if min <= 0.0 {
                    return Err(Error::ConvexityViolation { min_eigenvalue: min });
                }
            }
            MatrixField::Conformal { dim, bumps } => {
                if !(*dim == 2 || *dim == 3) {
                    return Err(Error::Input(format!("unsupported dimension {dim}")));
                }
                if bumps.iter().any(|b| b.center.len() != *dim || !(b.sigma > 0.0)) {
                    return Err(Error::Input("conformal bump has wrong dimension or sigma <= 0".into()));
                }
            }
        }
        Ok(())
    }

    /// Conformal exponent `phi(x)` and its gradient.
    pub fn conformal_exponent(&self, x: &[f64]) -> Option<(f64, Vec<f64>)> {
        match self {
            MatrixField::Conformal { dim, bumps } => {
                let mut phi = 0.0;
                let mut grad = vec![0.0; *dim];
                for b in bumps {
                    let w = b.amplitude * b.weight(x);
                    phi += w;
                    let s2 = b.sigma * b.sigma;
                    for (g, (xi, ci)) in grad.iter_mut().zip(x.iter().zip(&b.center)) {
                        *g -= w * (xi - ci) / s2;
                    }
                }
                Some((phi, grad))
            }
            _ => None,
        }
    }

    #[inline]
    fn conformal_phi(bumps: &[GaussianBump], x: &[f64]) -> f64 {
        bumps.iter().map(|b| b.amplitude * b.weight(x)).sum()
    }

    /// `y^T A(x) y`
    #[inline]
    pub fn quad(&self, x: &[f64], y: &[f64]) -> f64 {
        match self {
            MatrixField::Constant { matrix } => {
                let mut s = 0.0;
                for (i, row) in matrix.iter().enumerate() {
                    for (j, a) in row.iter().enumerate() {
                        s += a * y[i] * y[j];
                    }
                }
                s
            }
            MatrixField::Conformal { bumps, .. } => {
                let e = (2.0 * Self::conformal_phi(bumps, x)).exp();
                e * crate::numeric::dot(y, y)
            }
        }
    }

    pub fn matrix_at(&self, x: &[f64]) -> DMatrix<f64> {
        match self {
            MatrixField::Constant { matrix } => {
                let n = matrix.len();
                DMatrix::from_fn(n, n, |i, j| matrix[i][j])
            }
            MatrixField::Conformal { dim, bumps } => {
                let e = (2.0 * Self::conformal_phi(bumps, x)).exp();
                DMatrix::identity(*dim, *dim) * e
            }
        }
    }
}

/// A one-form field `b(x) = constant + sum of Gaussian-weighted vectors`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OneFormField {
    pub constant: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub bumps: Vec<OneFormBump>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OneFormBump {
    pub center: Vec<f64>,
    pub sigma: f64,
    pub vector: Vec<f64>,
}

impl OneFormField {
    pub fn constant(b: &[f64]) -> Self {
        OneFormField {
            constant: b.to_vec(),
            bumps: Vec::new(),
        }
    }

    pub fn is_constant(&self) -> bool {
        self.bumps.is_empty()
    }

    pub fn negated(&self) -> Self {
        OneFormField {
            constant: self.constant.iter().map(|v| -v).collect(),
            bumps: self
                .bumps
                .iter()
                .map(|b| OneFormBump {
                    center: b.center.clone(),
                    sigma: b.sigma,
                    vector: b.vector.iter().map(|v| -v).collect(),
                })
                .collect(),
        }
    }

    /// `b(x) . y`
    #[inline]
    pub fn apply(&self, x: &[f64], y: &[f64]) -> f64 {
        let mut s = crate::numeric::dot(&self.constant, y);
        for b in &self.bumps {
            let r2: f64 = x
                .iter()
                .zip(&b.center)
                .map(|(a, c)| (a - c) * (a - c))
                .sum();
            s += (-r2 / (2.0 * b.sigma * b.sigma)).exp() * crate::numeric::dot(&b.vector, y);
        }
        s
    }

    pub fn at(&self, x: &[f64]) -> Vec<f64> {
        let mut v = self.constant.clone();
        for b in &self.bumps {
            let r2: f64 = x
                .iter()
                .zip(&b.center)
                .map(|(a, c)| (a - c) * (a - c))
                .sum();
            let w = (-r2 / (2.0 * b.sigma * b.sigma)).exp();
            for (vi, bi) in v.iter_mut().zip(&b.vector) {
                *vi += w * bi;
            }
        }
        v
    }
}
