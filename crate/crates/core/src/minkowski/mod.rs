//! Fiberwise Minkowski norms: evaluation, fundamental tensor, Legendre
//! transform, dual norm and reversal.
//!
//! A [`FiberNorm`] is a Finsler function `F(x, y)` on a 2-D or 3-D region.
//! Closed forms are used for the Riemannian and Randers families; everything
//! else goes through finite differences of `F^2 / 2` and the generic
//! support maximization in [`dual`].

pub mod bump;
pub mod dual;
pub mod fields;

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::elastic::StiffnessField;
use crate::error::{Error, Result};
use crate::numeric::{all_finite, gradient_fd, hessian_fd, min_eigenvalue, symmetrize};

pub use bump::DirectionalBump;
pub use fields::{GaussianBump, MatrixField, OneFormBump, OneFormField};

/// Relative finite-difference step for derivatives of `F^2 / 2` in the fiber.
pub const FIBER_FD_STEP: f64 = 1e-5;
/// Relative finite-difference step for the Hessian of `(F*)^2 / 2`.
pub const DUAL_FD_STEP: f64 = 1e-4;

/// A strongly convex, positively 1-homogeneous norm on each tangent fiber.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum FiberNorm {
    /// `F(x, y) = sqrt(y^T A(x) y)`
    Riemannian { metric: MatrixField },
    /// `F(x, y) = sqrt(y^T A(x) y) + b(x) . y` with `|b|_A < 1`.
    Randers {
        metric: MatrixField,
        one_form: OneFormField,
    },
    /// Finsler norm dual to the qP co-norm `f(x, p) = sqrt(lambda_max(Gamma(x, p)))`.
    QpDual { medium: StiffnessField },
    /// `H(x, y) = (1 + s alpha(x, y / F(x, y))) F(x, y)`
    Perturbed {
        base: Box<FiberNorm>,
        amplitude: f64,
        bump: DirectionalBump,
    },
    #[serde(skip)]
    Custom(CustomNorm),
}

/// A user supplied norm closure. Not serializable.
#[derive(Clone)]
pub struct CustomNorm {
    pub name: String,
    dim: usize,
    func: Arc<dyn Fn(&[f64], &[f64]) -> f64 + Send + Sync>,
    reversed: bool,
}

impl fmt::Debug for CustomNorm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomNorm")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("reversed", &self.reversed)
            .finish()
    }
}

/// Hessian of `F^2 / 2` in the fiber variable at a fixed base point and direction.
#[derive(Clone, Debug)]
pub struct FundamentalTensor {
    pub matrix: DMatrix<f64>,
    pub point: Vec<f64>,
    pub direction: Vec<f64>,
}

impl FundamentalTensor {
    pub fn min_eigenvalue(&self) -> f64 {
        min_eigenvalue(&self.matrix)
    }

    /// `g_y(u, v)`
    pub fn apply(&self, u: &[f64], v: &[f64]) -> f64 {
        let u = DVector::from_column_slice(u);
        let v = DVector::from_column_slice(v);
        (u.transpose() * &self.matrix * v)[(0, 0)]
    }
}

/// A cotangent vector (momentum).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Covector(pub Vec<f64>);

impl std::ops::Deref for Covector {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

fn check_point(x: &[f64], y: &[f64], dim: usize) -> Result<()> {
    if x.len() != dim || y.len() != dim {
        return Err(Error::Input(format!(
            "expected dimension {dim}, got point {} / vector {}",
            x.len(),
            y.len()
        )));
    }
    if !all_finite(x) || !all_finite(y) {
        return Err(Error::Input("non-finite coordinates".into()));
    }
    Ok(())
}

fn is_zero(y: &[f64]) -> bool {
    y.iter().all(|v| *v == 0.0)
}

impl FiberNorm {
    pub fn euclidean(dim: usize) -> Self {
        FiberNorm::Riemannian {
            metric: MatrixField::identity(dim),
        }
    }

    pub fn riemannian(matrix: DMatrix<f64>) -> Result<Self> {
        let metric = MatrixField::constant(matrix);
        metric.validate()?;
        Ok(FiberNorm::Riemannian { metric })
    }

    /// Conformal metric `exp(2 phi) delta` with Gaussian `phi`.
    pub fn conformal(dim: usize, bumps: Vec<GaussianBump>) -> Result<Self> {
        let metric = MatrixField::Conformal { dim, bumps };
        metric.validate()?;
        Ok(FiberNorm::Riemannian { metric })
    }

    /// Randers norm; admissibility `|b|_A < 1` is checked at the origin and
    /// at every one-form bump center.
    pub fn randers(metric: MatrixField, one_form: OneFormField) -> Result<Self> {
        metric.validate()?;
        if one_form.constant.len() != metric.dim() {
            return Err(Error::Input("one-form dimension mismatch".into()));
        }
        let norm = FiberNorm::Randers { metric, one_form };
        let mut pts = vec![vec![0.0; norm.dim()]];
        if let FiberNorm::Randers { one_form, .. } = &norm {
            pts.extend(one_form.bumps.iter().map(|b| b.center.clone()));
        }
        norm.check_admissible(&pts)?;
        Ok(norm)
    }

    pub fn perturbed(base: FiberNorm, amplitude: f64, bump: DirectionalBump) -> Self {
        FiberNorm::Perturbed {
            base: Box::new(base),
            amplitude,
            bump,
        }
    }

    pub fn custom<F>(name: &str, dim: usize, f: F) -> Self
    where
        F: Fn(&[f64], &[f64]) -> f64 + Send + Sync + 'static,
    {
        FiberNorm::Custom(CustomNorm {
            name: name.to_string(),
            dim,
            func: Arc::new(f),
            reversed: false,
        })
    }

    pub fn dim(&self) -> usize {
        match self {
            FiberNorm::Riemannian { metric } | FiberNorm::Randers { metric, .. } => metric.dim(),
            FiberNorm::QpDual { .. } => 3,
            FiberNorm::Perturbed { base, .. } => base.dim(),
            FiberNorm::Custom(c) => c.dim,
        }
    }

    /// True when `F(x, y)` does not depend on `x`.
    pub fn is_homogeneous_in_space(&self) -> bool {
        match self {
            FiberNorm::Riemannian { metric } => metric.is_constant(),
            FiberNorm::Randers { metric, one_form } => metric.is_constant() && one_form.is_constant(),
            FiberNorm::QpDual { medium } => medium.is_constant(),
            FiberNorm::Perturbed { amplitude, base, .. } => {
                *amplitude == 0.0 && base.is_homogeneous_in_space()
            }
            FiberNorm::Custom(_) => false,
        }
    }

    /// Checks structural admissibility at the given base points: Randers
    /// one-form strictly inside the unit co-ball, positive definite
    /// fundamental tensor on a ring of directions otherwise.
    pub fn check_admissible(&self, points: &[Vec<f64>]) -> Result<()> {
        match self {
            FiberNorm::Riemannian { metric } => metric.validate(),
            FiberNorm::Randers { metric, one_form } => {
                for x in points {
                    let a = metric.matrix_at(x);
                    let b = DVector::from_vec(one_form.at(x));
                    let inv = a
                        .try_inverse()
                        .ok_or_else(|| Error::Input("singular Randers metric".into()))?;
                    let bn = (b.transpose() * inv * &b)[(0, 0)].sqrt();
                    if !(bn < 1.0) {
                        return Err(Error::Input(format!(
                            "Randers one-form has norm {bn} >= 1 at {x:?}"
                        )));
                    }
                }
                Ok(())
            }
            _ => {
                for x in points {
                    for y in crate::numeric::sphere_seeds(self.dim(), 16) {
                        let g = self.fundamental_tensor(x, &y)?;
                        let m = g.min_eigenvalue();
                        if !(m > 0.0) {
                            return Err(Error::ConvexityViolation { min_eigenvalue: m });
                        }
                    }
                }
                Ok(())
            }
        }
    }

    /// Norm value without input checks. `y = 0` gives 0.
    #[inline]
    pub fn value(&self, x: &[f64], y: &[f64]) -> f64 {
        match self {
            FiberNorm::Riemannian { metric } => metric.quad(x, y).max(0.0).sqrt(),
            FiberNorm::Randers { metric, one_form } => {
                metric.quad(x, y).max(0.0).sqrt() + one_form.apply(x, y)
            }
            FiberNorm::QpDual { medium } => {
                if is_zero(y) {
                    return 0.0;
                }
                match dual::support_max(|p: &[f64]| medium.conorm(x, p), y) {
                    Ok(r) => r.value,
                    Err(Error::Numeric { best: Some(b), .. }) => b,
                    Err(_) => f64::NAN,
                }
            }
            FiberNorm::Perturbed {
                base,
                amplitude,
                bump,
            } => {
                let f = base.value(x, y);
                if f == 0.0 {
                    return 0.0;
                }
                (1.0 + amplitude * bump.value(x, y)) * f
            }
            FiberNorm::Custom(c) => {
                if c.reversed {
                    let neg: Vec<f64> = y.iter().map(|v| -v).collect();
                    (c.func)(x, &neg)
                } else {
                    (c.func)(x, y)
                }
            }
        }
    }

    /// `F(x, y)` with input validation.
    pub fn eval(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        check_point(x, y, self.dim())?;
        if is_zero(y) {
            return Ok(0.0);
        }
        Ok(self.value(x, y))
    }

    fn nonzero(&self, x: &[f64], y: &[f64], what: &str) -> Result<()> {
        check_point(x, y, self.dim())?;
        if is_zero(y) {
            return Err(Error::Domain(format!("{what} is undefined at the zero vector")));
        }
        Ok(())
    }

    /// Hessian of `F^2 / 2` with respect to `y`.
    pub fn fundamental_tensor(&self, x: &[f64], y: &[f64]) -> Result<FundamentalTensor> {
        self.nonzero(x, y, "fundamental tensor")?;
        let matrix = match self {
            FiberNorm::Riemannian { metric } => metric.matrix_at(x),
            FiberNorm::Randers { metric, one_form } => {
                let a = metric.matrix_at(x);
                let yv = DVector::from_column_slice(y);
                let ay = &a * &yv;
                let alpha = yv.dot(&ay).sqrt();
                let b = DVector::from_vec(one_form.at(x));
                let f = alpha + b.dot(&yv);
                let grad = &ay / alpha + &b;
                let hess_f = (&a - &ay * ay.transpose() / (alpha * alpha)) / alpha;
                &grad * grad.transpose() + hess_f * f
            }
            FiberNorm::QpDual { medium } => {
                // Hessians of F^2/2 and f^2/2 are inverse at Legendre-related points.
                let p = self.legendre(x, y)?;
                let gf = medium.conorm_half_square_hessian(x, &p)?;
                gf.try_inverse()
                    .ok_or_else(|| Error::numeric("singular co-norm Hessian", None))?
            }
            _ => {
                let h = FIBER_FD_STEP * self.value(x, y);
                symmetrize(&hessian_fd(
                    |v: &[f64]| 0.5 * self.value(x, v).powi(2),
                    y,
                    h,
                ))
            }
        };
        let g = FundamentalTensor {
            matrix,
            point: x.to_vec(),
            direction: y.to_vec(),
        };
        let m = g.min_eigenvalue();
        if !(m > 0.0) {
            return Err(Error::ConvexityViolation { min_eigenvalue: m });
        }
        Ok(g)
    }

    /// Legendre transform `y -> g_y(y, .)`.
    pub fn legendre(&self, x: &[f64], y: &[f64]) -> Result<Covector> {
        self.nonzero(x, y, "Legendre transform")?;
        let p = match self {
            FiberNorm::Riemannian { metric } => {
                let a = metric.matrix_at(x);
                (a * DVector::from_column_slice(y)).as_slice().to_vec()
            }
            FiberNorm::Randers { metric, one_form } => {
                let a = metric.matrix_at(x);
                let yv = DVector::from_column_slice(y);
                let ay = &a * &yv;
                let alpha = yv.dot(&ay).sqrt();
                let b = DVector::from_vec(one_form.at(x));
                let f = alpha + b.dot(&yv);
                ((&ay / alpha + &b) * f).as_slice().to_vec()
            }
            FiberNorm::QpDual { medium } => {
                // F(y) = max_p <p, y> / f(p); the gradient of F is the maximizer
                // normalized to f = 1.
                let r = dual::support_max(|p: &[f64]| medium.conorm(x, p), y)?;
                let fu = medium.conorm(x, &r.direction);
                r.direction.iter().map(|c| r.value * c / fu).collect()
            }
            _ => {
                let h = FIBER_FD_STEP * self.value(x, y);
                gradient_fd(|v: &[f64]| 0.5 * self.value(x, v).powi(2), y, h)
            }
        };
        Ok(Covector(p))
    }

    /// Dual norm together with the `F`-unit vector `v` attaining `p(v) = F*(p)`.
    pub fn dual_maximizer(&self, x: &[f64], p: &[f64]) -> Result<(f64, Vec<f64>)> {
        self.nonzero(x, p, "dual norm maximizer")?;
        let r = dual::support_max(|u: &[f64]| self.value(x, u), p)?;
        let f = self.value(x, &r.direction);
        Ok((r.value, r.direction.iter().map(|c| c / f).collect()))
    }

    /// `F*(x, p) = max_{F(x, v) = 1} p(v)`.
    pub fn dual_norm(&self, x: &[f64], p: &[f64]) -> Result<f64> {
        self.nonzero(x, p, "dual norm")?;
        match self {
            // the co-norm is the dual of its own dual
            FiberNorm::QpDual { medium } => Ok(medium.conorm(x, p)),
            _ => Ok(dual::support_max(|u: &[f64]| self.value(x, u), p)?.value),
        }
    }

    /// Inverse Legendre transform `p -> (1/2) Hess_p (F*)^2 . p`.
    pub fn legendre_inverse(&self, x: &[f64], p: &[f64]) -> Result<Vec<f64>> {
        self.nonzero(x, p, "inverse Legendre transform")?;
        match self {
            FiberNorm::QpDual { medium } => {
                legendre_inverse_of_conorm(|q: &[f64]| medium.conorm(x, q), p)
            }
            _ => {
                let conorm = |q: &[f64]| match dual::support_max(|u: &[f64]| self.value(x, u), q) {
                    Ok(r) => r.value,
                    Err(Error::Numeric { best: Some(b), .. }) => b,
                    Err(_) => f64::NAN,
                };
                legendre_inverse_of_conorm(conorm, p)
            }
        }
    }

    /// The reversed norm `y -> F(x, -y)`.
    pub fn reverse(&self) -> FiberNorm {
        match self {
            FiberNorm::Riemannian { .. } | FiberNorm::QpDual { .. } => self.clone(),
            FiberNorm::Randers { metric, one_form } => FiberNorm::Randers {
                metric: metric.clone(),
                one_form: one_form.negated(),
            },
            FiberNorm::Perturbed {
                base,
                amplitude,
                bump,
            } => FiberNorm::Perturbed {
                base: Box::new(base.reverse()),
                amplitude: *amplitude,
                bump: bump.flipped(),
            },
            FiberNorm::Custom(c) => FiberNorm::Custom(CustomNorm {
                reversed: !c.reversed,
                ..c.clone()
            }),
        }
    }

    /// Symmetric norms agree with their reversal.
    pub fn is_reversible(&self) -> bool {
        match self {
            FiberNorm::Riemannian { .. } | FiberNorm::QpDual { .. } => true,
            FiberNorm::Randers { one_form, .. } => {
                one_form.constant.iter().all(|v| *v == 0.0) && one_form.bumps.is_empty()
            }
            FiberNorm::Perturbed { base, amplitude, .. } => *amplitude == 0.0 && base.is_reversible(),
            FiberNorm::Custom(_) => false,
        }
    }

    /// Euclidean-to-Finsler speed bounds on a ring of directions at `x`
    /// (`min F(u)`, `max F(u)` over Euclidean unit `u`).
    pub fn speed_bounds(&self, x: &[f64]) -> (f64, f64) {
        crate::numeric::sphere_seeds(self.dim(), 64)
            .iter()
            .map(|u| self.value(x, u))
            .fold((f64::INFINITY, 0.0), |(lo, hi), v| (lo.min(v), hi.max(v)))
    }
}

/// Inverse Legendre transform computed from a co-norm alone:
/// `y_j = (1/2) d^2 (F*)^2 / dp_i dp_j p_i`, central differences with step
/// `1e-4 F*(p)`.
pub fn legendre_inverse_of_conorm<C: Fn(&[f64]) -> f64>(conorm: C, p: &[f64]) -> Result<Vec<f64>> {
    let fp = conorm(p);
    if !(fp > 0.0) || !fp.is_finite() {
        return Err(Error::numeric("co-norm not positive at covector", Some(fp)));
    }
    let h = DUAL_FD_STEP * fp;
    let hess = hessian_fd(|q: &[f64]| 0.5 * conorm(q).powi(2), p, h);
    let y = hess * DVector::from_column_slice(p);
    Ok(y.as_slice().to_vec())
}

/// `g_y(y, y) = F(y)^2` residual, relative.
pub fn euler_residual(norm: &FiberNorm, x: &[f64], y: &[f64]) -> Result<f64> {
    let g = norm.fundamental_tensor(x, y)?;
    let f = norm.eval(x, y)?;
    Ok((g.apply(y, y) - f * f).abs() / (f * f))
}

#[cfg(test)]
mod tests;
