//! Anisotropic elastic media and the qP Finsler norm.
//!
//! Stiffness is given per node in Voigt form (21 upper-triangle entries,
//! row-major: C11 C12 .. C16 C22 .. C66) together with a density. The full
//! density-normalized tensor `a_ijkl = c_ijkl / rho` is expanded once at
//! construction. Fields with several nodes are blended with Gaussian
//! Shepard weights, which keeps every symmetry of the tensor.

use nalgebra::{DMatrix, Matrix3, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::minkowski::FiberNorm;
use crate::numeric::{dot, hessian_fd, min_eigenvalue, norm, symmetrize};

/// Relative threshold on `lambda_1 - max(lambda_2, lambda_3)`.
pub const SEPARATION_REL: f64 = 1e-8;
/// Tolerance of the full-tensor symmetry check.
pub const SYMMETRY_TOL: f64 = 1e-12;

/// Voigt index of the pair `(i, j)`, zero based.
pub fn voigt_index(i: usize, j: usize) -> usize {
    match (i.min(j), i.max(j)) {
        (0, 0) => 0,
        (1, 1) => 1,
        (2, 2) => 2,
        (1, 2) => 3,
        (0, 2) => 4,
        (0, 1) => 5,
        _ => unreachable!(),
    }
}

/// Expands 21 Voigt entries into a symmetric 6x6 matrix.
pub fn voigt_matrix(entries: &[f64]) -> Result<[[f64; 6]; 6]> {
    if entries.len() != 21 {
        return Err(Error::Input(format!(
            "expected 21 Voigt entries, got {}",
            entries.len()
        )));
    }
    let mut m = [[0.0; 6]; 6];
    let mut k = 0;
    for i in 0..6 {
        for j in i..6 {
            m[i][j] = entries[k];
            m[j][i] = entries[k];
            k += 1;
        }
    }
    Ok(m)
}

fn idx(i: usize, j: usize, k: usize, l: usize) -> usize {
    ((i * 3 + j) * 3 + k) * 3 + l
}

/// Full 81-entry tensor from a 6x6 Voigt matrix.
pub fn full_tensor(voigt: &[[f64; 6]; 6]) -> Vec<f64> {
    let mut t = vec![0.0; 81];
    for i in 0..3 {
        for j in 0..3 {
            for k in 0..3 {
                for l in 0..3 {
                    t[idx(i, j, k, l)] = voigt[voigt_index(i, j)][voigt_index(k, l)];
                }
            }
        }
    }
    t
}

/// Largest violation of `c_ijkl = c_jikl = c_klij`, relative to the largest entry.
pub fn symmetry_defect(t: &[f64]) -> f64 {
    let scale = t.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
    let mut worst = 0.0f64;
    for i in 0..3 {
        for j in 0..3 {
            for k in 0..3 {
                for l in 0..3 {
                    let c = t[idx(i, j, k, l)];
                    worst = worst
                        .max((c - t[idx(j, i, k, l)]).abs())
                        .max((c - t[idx(k, l, i, j)]).abs());
                }
            }
        }
    }
    worst / scale
}

/// One stiffness sample.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MediumNode {
    pub position: Vec<f64>,
    pub density: f64,
    /// 21 Voigt entries, upper triangle, row-major.
    pub voigt: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct StiffnessSpec {
    nodes: Vec<MediumNode>,
    #[serde(default = "default_sigma")]
    blend_sigma: f64,
}

fn default_sigma() -> f64 {
    0.25
}

/// Density-normalized stiffness `a_ijkl(x)`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(try_from = "StiffnessSpec", into = "StiffnessSpec")]
pub struct StiffnessField {
    nodes: Vec<MediumNode>,
    blend_sigma: f64,
    normalized: Vec<Vec<f64>>,
}

impl TryFrom<StiffnessSpec> for StiffnessField {
    type Error = Error;
    fn try_from(s: StiffnessSpec) -> Result<Self> {
        StiffnessField::new(s.nodes, s.blend_sigma)
    }
}

impl From<StiffnessField> for StiffnessSpec {
    fn from(f: StiffnessField) -> Self {
        StiffnessSpec {
            nodes: f.nodes,
            blend_sigma: f.blend_sigma,
        }
    }
}

impl StiffnessField {
    pub fn new(nodes: Vec<MediumNode>, blend_sigma: f64) -> Result<Self> {
        if nodes.is_empty() {
            return Err(Error::Input("stiffness field needs at least one node".into()));
        }
        if !(blend_sigma > 0.0) {
            return Err(Error::Input("blend width must be positive".into()));
        }
        let mut normalized = Vec::with_capacity(nodes.len());
        for n in &nodes {
            if n.position.len() != 3 {
                return Err(Error::Input("stiffness nodes must be 3-D points".into()));
            }
            if !(n.density > 0.0) || !n.density.is_finite() {
                return Err(Error::Input(format!("density {} is not positive", n.density)));
            }
            if n.voigt.iter().any(|v| !v.is_finite()) {
                return Err(Error::Input("non-finite stiffness entry".into()));
            }
            let t = full_tensor(&voigt_matrix(&n.voigt)?);
            let defect = symmetry_defect(&t);
            if defect > SYMMETRY_TOL {
                return Err(Error::Input(format!("stiffness symmetry defect {defect:e}")));
            }
            normalized.push(t.iter().map(|c| c / n.density).collect());
        }
        let field = StiffnessField {
            nodes,
            blend_sigma,
            normalized,
        };
        for n in &field.nodes {
            for p in crate::numeric::sphere_seeds(3, 64) {
                let g = field.christoffel(&n.position, &p);
                if !(min_eigenvalue(&g.dmatrix()) > 0.0) {
                    return Err(Error::Input(format!(
                        "Christoffel matrix not positive definite along {p:?}"
                    )));
                }
            }
        }
        Ok(field)
    }

    /// Spatially constant medium.
    pub fn constant(density: f64, voigt: Vec<f64>) -> Result<Self> {
        Self::new(
            vec![MediumNode {
                position: vec![0.0; 3],
                density,
                voigt,
            }],
            default_sigma(),
        )
    }

    /// Isotropic medium with Lame parameters `lambda`, `mu`.
    pub fn isotropic(lambda: f64, mu: f64, density: f64) -> Result<Self> {
        let p = lambda + 2.0 * mu;
        Self::constant(
            density,
            voigt_upper(&[
                [p, lambda, lambda, 0.0, 0.0, 0.0],
                [lambda, p, lambda, 0.0, 0.0, 0.0],
                [lambda, lambda, p, 0.0, 0.0, 0.0],
                [0.0, 0.0, 0.0, mu, 0.0, 0.0],
                [0.0, 0.0, 0.0, 0.0, mu, 0.0],
                [0.0, 0.0, 0.0, 0.0, 0.0, mu],
            ]),
        )
    }

    /// Transversely isotropic medium with symmetry axis `x3`.
    pub fn transversely_isotropic(
        c11: f64,
        c13: f64,
        c33: f64,
        c44: f64,
        c66: f64,
        density: f64,
    ) -> Result<Self> {
        let c12 = c11 - 2.0 * c66;
        Self::constant(
            density,
            voigt_upper(&[
                [c11, c12, c13, 0.0, 0.0, 0.0],
                [c12, c11, c13, 0.0, 0.0, 0.0],
                [c13, c13, c33, 0.0, 0.0, 0.0],
                [0.0, 0.0, 0.0, c44, 0.0, 0.0],
                [0.0, 0.0, 0.0, 0.0, c44, 0.0],
                [0.0, 0.0, 0.0, 0.0, 0.0, c66],
            ]),
        )
    }

    pub fn nodes(&self) -> &[MediumNode] {
        &self.nodes
    }

    pub fn is_constant(&self) -> bool {
        self.nodes.len() == 1
    }

    /// `a_ijkl(x)` as 81 entries.
    pub fn tensor_at(&self, x: &[f64]) -> Vec<f64> {
        if self.is_constant() {
            return self.normalized[0].clone();
        }
        let s2 = 2.0 * self.blend_sigma * self.blend_sigma;
        let w: Vec<f64> = self
            .nodes
            .iter()
            .map(|n| {
                let d2: f64 = n.position.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum();
                (-d2 / s2).exp()
            })
            .collect();
        let total: f64 = w.iter().sum();
        if !(total > 1e-300) {
            // far from every node: nearest node wins
            let k = self
                .nodes
                .iter()
                .enumerate()
                .map(|(i, n)| (i, crate::numeric::distance(&n.position, x)))
                .min_by(|a, b| a.1.total_cmp(&b.1))
                .map(|(i, _)| i)
                .unwrap_or(0);
            return self.normalized[k].clone();
        }
        let mut t = vec![0.0; 81];
        for (wi, a) in w.iter().zip(&self.normalized) {
            for (ti, ai) in t.iter_mut().zip(a) {
                *ti += wi / total * ai;
            }
        }
        t
    }

    /// `Gamma_il(x, p) = a_ijkl p_j p_k`
    pub fn christoffel(&self, x: &[f64], p: &[f64]) -> ChristoffelMatrix {
        let a = self.tensor_at(x);
        ChristoffelMatrix {
            matrix: contract(&a, p),
            point: x.to_vec(),
            momentum: p.to_vec(),
        }
    }

    /// Largest Christoffel eigenvalue and its separation from the others.
    pub fn qp_eigen(&self, x: &[f64], p: &[f64]) -> Result<(f64, f64)> {
        check3(x, p)?;
        let e = eigen_sorted(&self.christoffel(x, p).matrix);
        let margin = e.values[0] - e.values[1];
        if !(margin > SEPARATION_REL * e.values[0]) {
            return Err(Error::SeparationViolation {
                margin,
                direction: p.to_vec(),
            });
        }
        Ok((e.values[0], margin))
    }

    /// The qP co-norm `f(x, p) = sqrt(lambda_1)`, without separation check.
    #[inline]
    pub fn conorm(&self, x: &[f64], p: &[f64]) -> f64 {
        let g = contract(&self.tensor_at(x), p);
        largest_eigenvalue(&g).max(0.0).sqrt()
    }

    /// Hessian of `f^2 / 2 = lambda_1 / 2` in `p`, from first-order
    /// perturbation of the eigen-decomposition.
    pub fn conorm_half_square_hessian(&self, x: &[f64], p: &[f64]) -> Result<DMatrix<f64>> {
        let a = self.tensor_at(x);
        let e = eigen_sorted(&contract(&a, p));
        let lam1 = e.values[0];
        if !(e.values[0] - e.values[1] > SEPARATION_REL * lam1) {
            return Err(Error::SeparationViolation {
                margin: e.values[0] - e.values[1],
                direction: p.to_vec(),
            });
        }
        // dGamma / dp_j
        let mut d = [Matrix3::<f64>::zeros(); 3];
        for (j, dj) in d.iter_mut().enumerate() {
            for i in 0..3 {
                for l in 0..3 {
                    let mut s = 0.0;
                    for k in 0..3 {
                        s += (a[idx(i, j, k, l)] + a[idx(i, k, j, l)]) * p[k];
                    }
                    dj[(i, l)] = s;
                }
            }
        }
        let q = &e.vectors[0];
        let mut h = DMatrix::zeros(3, 3);
        for j in 0..3 {
            for k in 0..3 {
                let mut s = 0.0;
                for i in 0..3 {
                    for l in 0..3 {
                        s += (a[idx(i, j, k, l)] + a[idx(i, k, j, l)]) * q[i] * q[l];
                    }
                }
                for m in 1..3 {
                    let qm = &e.vectors[m];
                    let uj = qm.dot(&(d[j] * q));
                    let uk = qm.dot(&(d[k] * q));
                    s += 2.0 * uj * uk / (lam1 - e.values[m]);
                }
                h[(j, k)] = 0.5 * s;
            }
        }
        Ok(symmetrize(&h))
    }
}

fn check3(x: &[f64], p: &[f64]) -> Result<()> {
    if x.len() != 3 || p.len() != 3 {
        return Err(Error::Input("elastic media are 3-D".into()));
    }
    if p.iter().all(|v| *v == 0.0) {
        return Err(Error::Domain("zero momentum".into()));
    }
    if !crate::numeric::all_finite(x) || !crate::numeric::all_finite(p) {
        return Err(Error::Input("non-finite coordinates".into()));
    }
    Ok(())
}

fn voigt_upper(m: &[[f64; 6]; 6]) -> Vec<f64> {
    let mut v = Vec::with_capacity(21);
    for i in 0..6 {
        for j in i..6 {
            v.push(m[i][j]);
        }
    }
    v
}

fn contract(a: &[f64], p: &[f64]) -> Matrix3<f64> {
    let mut g = Matrix3::zeros();
    for i in 0..3 {
        for l in 0..3 {
            let mut s = 0.0;
            for j in 0..3 {
                for k in 0..3 {
                    s += a[idx(i, j, k, l)] * p[j] * p[k];
                }
            }
            g[(i, l)] = s;
        }
    }
    (g + g.transpose()) * 0.5
}

struct SortedEigen {
    values: [f64; 3],
    vectors: [nalgebra::Vector3<f64>; 3],
}

fn eigen_sorted(g: &Matrix3<f64>) -> SortedEigen {
    let e = SymmetricEigen::new(*g);
    let mut order = [0usize, 1, 2];
    order.sort_by(|&i, &j| e.eigenvalues[j].total_cmp(&e.eigenvalues[i]));
    SortedEigen {
        values: order.map(|i| e.eigenvalues[i]),
        vectors: order.map(|i| e.eigenvectors.column(i).into_owned()),
    }
}

fn largest_eigenvalue(g: &Matrix3<f64>) -> f64 {
    let e = SymmetricEigen::new(*g);
    e.eigenvalues.max()
}

/// Symmetric 3x3 Christoffel matrix at a point and momentum.
#[derive(Clone, Debug)]
pub struct ChristoffelMatrix {
    pub matrix: Matrix3<f64>,
    pub point: Vec<f64>,
    pub momentum: Vec<f64>,
}

impl ChristoffelMatrix {
    pub fn dmatrix(&self) -> DMatrix<f64> {
        DMatrix::from_iterator(3, 3, self.matrix.iter().cloned())
    }

    /// Eigenvalues in descending order.
    pub fn eigenvalues(&self) -> [f64; 3] {
        eigen_sorted(&self.matrix).values
    }
}

/// Per-direction co-Finsler diagnostics.
#[derive(Clone, Debug, Serialize)]
pub struct CofinslerSample {
    pub direction: Vec<f64>,
    pub homogeneity_residual: f64,
    pub min_hessian_eigenvalue: f64,
    pub margin: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct CofinslerReport {
    pub point: Vec<f64>,
    pub samples: Vec<CofinslerSample>,
    /// Directions where the qP eigenvalue is not separated.
    pub separation_violations: Vec<Vec<f64>>,
    pub min_hessian_eigenvalue: f64,
    pub min_relative_margin: f64,
    pub pass: bool,
}

/// Sweeps `count` directions at `x`: homogeneity of `f`, positivity of the
/// finite-difference Hessian of `f^2 / 2`, and separation of `lambda_1`.
/// Local minima of the margin on the lattice are refined off-lattice, so
/// crossings that fall between samples are still found.
pub fn verify_cofinsler(field: &StiffnessField, x: &[f64], count: usize) -> CofinslerReport {
    let dirs = crate::numeric::sphere_seeds(3, count);
    let a = field.tensor_at(x);
    let mut samples = Vec::with_capacity(dirs.len());
    let mut violations = Vec::new();
    let mut min_h = f64::INFINITY;
    let mut min_margin = f64::INFINITY;
    for p in &dirs {
        let e = eigen_sorted(&contract(&a, p));
        let margin = e.values[0] - e.values[1];
        let rel = margin / e.values[0];
        min_margin = min_margin.min(rel);
        let f1 = field.conorm(x, p);
        let p3: Vec<f64> = p.iter().map(|v| 3.0 * v).collect();
        let hom = (field.conorm(x, &p3) - 3.0 * f1).abs() / (3.0 * f1);
        let hess = hessian_fd(|q: &[f64]| 0.5 * field.conorm(x, q).powi(2), p, 1e-4 * f1);
        let mh = min_eigenvalue(&symmetrize(&hess));
        min_h = min_h.min(mh);
        if !(rel > SEPARATION_REL) {
            violations.push(p.clone());
        }
        samples.push(CofinslerSample {
            direction: p.clone(),
            homogeneity_residual: hom,
            min_hessian_eigenvalue: mh,
            margin,
        });
    }
    // local minima of the margin are refined by a compass search, which
    // descends onto conical points and crossing curves between samples
    let spacing = (4.0 * std::f64::consts::PI / dirs.len() as f64).sqrt();
    for i in 0..dirs.len() {
        let rel_i = relative_margin(&a, &dirs[i]);
        if rel_i > 0.2 {
            continue;
        }
        let mut near: Vec<(usize, f64)> = (0..dirs.len())
            .filter(|&j| j != i)
            .map(|j| (j, dot(&dirs[i], &dirs[j])))
            .collect();
        near.sort_by(|a, b| b.1.total_cmp(&a.1));
        let is_min = near
            .iter()
            .take(6)
            .all(|&(j, _)| relative_margin(&a, &dirs[j]) >= rel_i);
        if !is_min {
            continue;
        }
        let (rel, p) = compass_min_margin(&a, &dirs[i], spacing);
        min_margin = min_margin.min(rel);
        if !(rel > SEPARATION_REL) {
            violations.push(p);
        }
    }
    let pass = violations.is_empty() && min_h > 0.0;
    CofinslerReport {
        point: x.to_vec(),
        samples,
        separation_violations: violations,
        min_hessian_eigenvalue: min_h,
        min_relative_margin: min_margin,
        pass,
    }
}

fn relative_margin(a: &[f64], p: &[f64]) -> f64 {
    let e = eigen_sorted(&contract(a, p));
    (e.values[0] - e.values[1]) / e.values[0]
}

fn compass_min_margin(a: &[f64], start: &[f64], spacing: f64) -> (f64, Vec<f64>) {
    let mut u = start.to_vec();
    let mut best = relative_margin(a, &u);
    let mut step = spacing;
    while step > 1e-13 && best > 0.0 {
        let (e1, e2) = crate::numeric::tangent_basis3(&u);
        let mut improved = false;
        for k in 0..8 {
            let ang = std::f64::consts::FRAC_PI_4 * k as f64;
            let (c, s) = (ang.cos(), ang.sin());
            let w: Vec<f64> = (0..3).map(|i| u[i] + step * (c * e1[i] + s * e2[i])).collect();
            let n = norm(&w);
            let w: Vec<f64> = w.into_iter().map(|v| v / n).collect();
            let r = relative_margin(a, &w);
            if r < best {
                best = r;
                u = w;
                improved = true;
                break;
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    (best, u)
}

/// Builds the qP Finsler norm after checking the co-Finsler conditions at
/// every node of the field (256 directions each).
pub fn qp_finsler(field: &StiffnessField) -> Result<FiberNorm> {
    for n in field.nodes() {
        let r = verify_cofinsler(field, &n.position, 256);
        if let Some(d) = r.separation_violations.first() {
            return Err(Error::SeparationViolation {
                margin: r.min_relative_margin,
                direction: d.clone(),
            });
        }
        if !(r.min_hessian_eigenvalue > 0.0) {
            return Err(Error::ConvexityViolation {
                min_eigenvalue: r.min_hessian_eigenvalue,
            });
        }
    }
    Ok(FiberNorm::QpDual {
        medium: field.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ti() -> StiffnessField {
        // strongly anisotropic shale-like sample, units km^2/s^2 after rho = 1
        StiffnessField::transversely_isotropic(20.0, 6.0, 12.0, 3.5, 6.5, 1.0).unwrap()
    }

    fn naive_christoffel(field: &StiffnessField, p: &[f64]) -> [[f64; 3]; 3] {
        let a = field.tensor_at(&[0.0; 3]);
        let mut g = [[0.0; 3]; 3];
        for (i, row) in g.iter_mut().enumerate() {
            for (l, gil) in row.iter_mut().enumerate() {
                for j in 0..3 {
                    for k in 0..3 {
                        *gil += a[27 * i + 9 * j + 3 * k + l] * p[j] * p[k];
                    }
                }
            }
        }
        g
    }

    #[test]
    fn isotropic_christoffel() {
        let f = StiffnessField::isotropic(2.0, 1.0, 1.0).unwrap();
        let g = f.christoffel(&[0.0; 3], &[1.0, 0.0, 0.0]).matrix;
        let want = Matrix3::from_diagonal(&nalgebra::Vector3::new(4.0, 1.0, 1.0));
        assert!((g - want).norm() < 1e-14);
        let g2 = f.christoffel(&[0.0; 3], &[2.0, 0.0, 0.0]).matrix;
        assert!((g2 - want * 4.0).norm() < 1e-13);
    }

    #[test]
    fn ti_christoffel_matches_quadruple_loop() {
        let f = ti();
        for p in [[0.0, 0.0, 1.0], [0.3, -0.5, 0.8]] {
            let g = f.christoffel(&[0.0; 3], &p).matrix;
            let n = naive_christoffel(&f, &p);
            for i in 0..3 {
                for l in 0..3 {
                    assert!((g[(i, l)] - n[i][l]).abs() < 1e-12);
                }
            }
        }
    }

    /// Largest root of the characteristic cubic by bracketing bisection.
    fn cubic_root_oracle(g: &[[f64; 3]; 3]) -> f64 {
        let det = |t: f64| {
            let m = [
                [g[0][0] - t, g[0][1], g[0][2]],
                [g[1][0], g[1][1] - t, g[1][2]],
                [g[2][0], g[2][1], g[2][2] - t],
            ];
            m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
                - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
                + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
        };
        // Gershgorin upper bound; det(G - t) < 0 beyond the largest root
        let mut hi = (0..3).map(|i| g[i].iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max) + 1.0;
        let mut lo = hi;
        // walk down until the sign flips
        let step = hi / 4096.0;
        while det(lo) < 0.0 {
            lo -= step;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if det(mid) < 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn qp_eigen_matches_cubic_oracle() {
        let f = ti();
        for p in crate::numeric::sphere_seeds(3, 100) {
            let (l1, _) = f.qp_eigen(&[0.0; 3], &p).unwrap();
            let oracle = cubic_root_oracle(&naive_christoffel(&f, &p));
            assert!((l1 - oracle).abs() <= 1e-10 * l1, "{l1} vs {oracle}");
        }
    }

    #[test]
    fn isotropic_eigen_and_homogeneity() {
        let f = StiffnessField::isotropic(2.0, 1.0, 1.0).unwrap();
        let (l, m) = f.qp_eigen(&[0.0; 3], &[0.0, 0.6, 0.8]).unwrap();
        assert!((l - 4.0).abs() < 1e-12 && (m - 3.0).abs() < 1e-12);
        let (l3, _) = f.qp_eigen(&[0.0; 3], &[0.0, 1.8, 2.4]).unwrap();
        assert!((l3 - 36.0).abs() < 1e-10);
    }

    #[test]
    fn analytic_hessian_matches_fd() {
        let f = ti();
        let x = [0.0; 3];
        for p in crate::numeric::sphere_seeds(3, 20) {
            let h = f.conorm_half_square_hessian(&x, &p).unwrap();
            let fd = hessian_fd(|q: &[f64]| 0.5 * f.conorm(&x, q).powi(2), &p, 1e-4);
            assert!((&h - &fd).norm() < 1e-6 * h.norm(), "{h} vs {fd}");
        }
    }

    #[test]
    fn isotropic_hessian_is_scaled_identity() {
        let f = StiffnessField::isotropic(2.0, 1.0, 1.0).unwrap();
        let h = f.conorm_half_square_hessian(&[0.0; 3], &[0.2, -0.4, 0.7]).unwrap();
        assert!((h - DMatrix::identity(3, 3) * 4.0).norm() < 1e-12);
    }

    #[test]
    fn cofinsler_isotropic_and_ti_pass() {
        let r = verify_cofinsler(&StiffnessField::isotropic(2.0, 1.0, 1.0).unwrap(), &[0.0; 3], 128);
        assert!(r.pass);
        assert!((r.min_hessian_eigenvalue - 4.0).abs() < 1e-5);
        let r = verify_cofinsler(&ti(), &[0.0; 3], 256);
        assert!(r.pass && r.min_hessian_eigenvalue > 0.0);
    }

    #[test]
    fn degenerate_media_are_rejected() {
        // lambda = -mu: every Christoffel eigenvalue equals mu
        let f = StiffnessField::isotropic(-1.0, 1.0, 1.0).unwrap();
        assert!(matches!(f.qp_eigen(&[0.0; 3], &[1.0, 0.0, 0.0]), Err(Error::SeparationViolation { .. })));
        assert!(!verify_cofinsler(&f, &[0.0; 3], 64).pass);
        assert!(matches!(qp_finsler(&f), Err(Error::SeparationViolation { .. })));
        // shear faster than compression along the axis: qP and qS cross on a cone
        let f = StiffnessField::transversely_isotropic(20.0, 2.0, 4.0, 8.0, 6.0, 1.0).unwrap();
        let r = verify_cofinsler(&f, &[0.0; 3], 256);
        assert!(!r.separation_violations.is_empty());
    }

    #[test]
    fn voigt_round_trip_and_symmetry() {
        let v: Vec<f64> = (0..21).map(|i| i as f64 + 1.0).collect();
        let t = full_tensor(&voigt_matrix(&v).unwrap());
        assert!(symmetry_defect(&t) == 0.0);
        // c_1233 is C63, stored as C36
        assert_eq!(t[idx(0, 1, 2, 2)], v[14]);
        assert!(voigt_matrix(&v[..20]).is_err());
    }

    #[test]
    fn serde_round_trip() {
        let f = ti();
        let s = serde_json::to_string(&f).unwrap();
        let g: StiffnessField = serde_json::from_str(&s).unwrap();
        assert_eq!(g.nodes(), f.nodes());
    }
}
