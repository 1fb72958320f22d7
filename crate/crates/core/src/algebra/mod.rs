//! Finite-dimensional Lie algebras in coordinates.
//!
//! An algebra is given by its structure constants in a fixed ordered basis,
//! `[eᵢ, eⱼ] = Σₖ C[i][j][k] eₖ`, together with a metric matrix `M` so that
//! `⟨ξ, η⟩ = ξᵀ M η`. Every operator is then a small dense matrix computation.
//!
//! The coadjoint convention is `(ad*_ξ μ)(η) = μ([ξ, η])` with no extra sign.

mod group;
mod vector;

pub use group::{group_step, GroupModel, Trivialization};
pub use vector::{AlgebraCovector, AlgebraVector};

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::{check_dim, Error, Result};

/// Residual bound used by [`LieAlgebraSpec::validate`] for antisymmetry,
/// Jacobi and metric symmetry.
pub const STRUCTURE_TOLERANCE: f64 = 1e-12;

/// Dense rank-3 array of structure constants, indexed from zero.
#[derive(Debug, Clone, PartialEq)]
pub struct StructureConstants {
    dim: usize,
    data: Vec<f64>,
}

impl StructureConstants {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![0.0; dim * dim * dim],
        }
    }

    /// Builds the constants from `(i, j, k, value)` entries. Entries are taken
    /// literally; antisymmetric partners must be listed explicitly.
    pub fn from_entries(
        dim: usize,
        entries: impl IntoIterator<Item = (usize, usize, usize, f64)>,
    ) -> Result<Self> {
        let mut c = Self::zeros(dim);
        for (i, j, k, value) in entries {
            if i >= dim || j >= dim || k >= dim {
                return Err(Error::Contract(format!(
                    "structure constant index ({i}, {j}, {k}) out of range for dimension {dim}"
                )));
            }
            c.set(i, j, k, value);
        }
        Ok(c)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.data[(i * self.dim + j) * self.dim + k]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, k: usize, value: f64) {
        let n = self.dim;
        self.data[(i * n + j) * n + k] = value;
    }

    /// Non-zero entries in lexicographic order.
    pub fn entries(&self) -> Vec<(usize, usize, usize, f64)> {
        let n = self.dim;
        let mut out = Vec::new();
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let v = self.get(i, j, k);
                    if v != 0.0 {
                        out.push((i, j, k, v));
                    }
                }
            }
        }
        out
    }

    /// Structure constants after the change of basis `e'ⱼ = Σᵢ P[i][j] eᵢ`.
    pub fn change_basis(&self, p: &DMatrix<f64>) -> Result<Self> {
        let n = self.dim;
        check_dim("change of basis", n, p.nrows())?;
        check_dim("change of basis", n, p.ncols())?;
        let p_inv = p
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::Contract("change-of-basis matrix is singular".into()))?;
        let mut out = Self::zeros(n);
        for a in 0..n {
            for b in 0..n {
                let ea = p.column(a).into_owned();
                let eb = p.column(b).into_owned();
                let br = self.bracket_coords(&ea, &eb);
                let coords = &p_inv * br;
                for c in 0..n {
                    out.set(a, b, c, coords[c]);
                }
            }
        }
        Ok(out)
    }

    fn bracket_coords(&self, x: &DVector<f64>, y: &DVector<f64>) -> DVector<f64> {
        let n = self.dim;
        let mut out = DVector::zeros(n);
        for i in 0..n {
            if x[i] == 0.0 {
                continue;
            }
            for j in 0..n {
                let xy = x[i] * y[j];
                if xy == 0.0 {
                    continue;
                }
                for k in 0..n {
                    out[k] += self.get(i, j, k) * xy;
                }
            }
        }
        out
    }
}

/// A Lie algebra with inner product, in basis coordinates.
#[derive(Debug, Clone)]
pub struct LieAlgebraSpec {
    name: String,
    constants: StructureConstants,
    metric: DMatrix<f64>,
    metric_factor: Option<Cholesky<f64, Dyn>>,
}

/// Outcome of [`LieAlgebraSpec::validate`].
#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub max_antisymmetry_violation: f64,
    pub max_jacobi_violation: f64,
    pub max_metric_asymmetry: f64,
    pub min_metric_eigenvalue: f64,
}

impl ValidationReport {
    pub fn antisymmetric(&self) -> bool {
        self.max_antisymmetry_violation <= STRUCTURE_TOLERANCE
    }

    pub fn jacobi(&self) -> bool {
        self.max_jacobi_violation <= STRUCTURE_TOLERANCE
    }

    pub fn metric_positive_definite(&self) -> bool {
        self.max_metric_asymmetry <= STRUCTURE_TOLERANCE && self.min_metric_eigenvalue > 0.0
    }

    pub fn passed(&self) -> bool {
        self.antisymmetric() && self.jacobi() && self.metric_positive_definite()
    }
}

impl LieAlgebraSpec {
    /// Assembles an algebra. Only shapes are checked here; structural
    /// invariants are reported by [`validate`](Self::validate). Operations
    /// needing `M⁻¹` fail with [`Error::MetricNotPositiveDefinite`] when the
    /// metric has no Cholesky factor.
    pub fn new(
        name: impl Into<String>,
        constants: StructureConstants,
        metric: DMatrix<f64>,
    ) -> Result<Self> {
        let n = constants.dim();
        if n == 0 {
            return Err(Error::Parameter(
                "algebra dimension must be positive".into(),
            ));
        }
        check_dim("metric rows", n, metric.nrows())?;
        check_dim("metric columns", n, metric.ncols())?;
        let metric_factor = if is_symmetric(&metric) {
            Cholesky::new(metric.clone())
        } else {
            None
        };
        Ok(Self {
            name: name.into(),
            constants,
            metric,
            metric_factor,
        })
    }

    /// `so(3)` with `[eᵢ, eⱼ] = εᵢⱼₖ eₖ` (the cross product under the hat map).
    pub fn so3(metric: DMatrix<f64>) -> Result<Self> {
        Self::new("so3", so3_constants(3), metric)
    }

    /// `se(3)` in the basis `(ω, v)`, `[(ω₁,v₁),(ω₂,v₂)] = (ω₁×ω₂, ω₁×v₂ − ω₂×v₁)`.
    pub fn se3(metric: DMatrix<f64>) -> Result<Self> {
        let mut c = so3_constants(6);
        for (i, j, k, s) in levi_civita_entries() {
            // [e_i, e_{j+3}] = ε_ijk e_{k+3}, and the antisymmetric partner
            c.set(i, j + 3, k + 3, s);
            c.set(j + 3, i, k + 3, -s);
        }
        Self::new("se3", c, metric)
    }

    /// `so(3) × ℝ`, the last basis element central.
    pub fn so3_r(metric: DMatrix<f64>) -> Result<Self> {
        Self::new("so3xr", so3_constants(4), metric)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.constants.dim()
    }

    pub fn structure_constants(&self) -> &StructureConstants {
        &self.constants
    }

    pub fn metric(&self) -> &DMatrix<f64> {
        &self.metric
    }

    pub fn check_vector(&self, context: &'static str, x: &AlgebraVector) -> Result<()> {
        check_dim(context, self.dim(), x.dim())
    }

    pub fn check_covector(&self, context: &'static str, mu: &AlgebraCovector) -> Result<()> {
        check_dim(context, self.dim(), mu.dim())
    }

    /// `[x, y]ₖ = Σ C[i][j][k] xⁱ yʲ`.
    pub fn bracket(&self, x: &AlgebraVector, y: &AlgebraVector) -> Result<AlgebraVector> {
        self.check_vector("bracket", x)?;
        self.check_vector("bracket", y)?;
        Ok(self.constants.bracket_coords(x.coords(), y.coords()).into())
    }

    /// Matrix of `ad_x`, so that `ad_x · y = [x, y]`.
    pub fn ad_matrix(&self, x: &AlgebraVector) -> Result<DMatrix<f64>> {
        self.check_vector("ad", x)?;
        let n = self.dim();
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            let xi = x[i];
            if xi == 0.0 {
                continue;
            }
            for j in 0..n {
                for k in 0..n {
                    m[(k, j)] += xi * self.constants.get(i, j, k);
                }
            }
        }
        Ok(m)
    }

    /// `(ad*_x μ)ⱼ = Σ xⁱ C[i][j][k] μₖ`, i.e. `(ad*_x μ)(y) = μ([x, y])`.
    pub fn ad_star(&self, x: &AlgebraVector, mu: &AlgebraCovector) -> Result<AlgebraCovector> {
        self.check_covector("ad_star", mu)?;
        let ad = self.ad_matrix(x)?;
        Ok(ad.tr_mul(mu.coords()).into())
    }

    pub fn flat(&self, x: &AlgebraVector) -> Result<AlgebraCovector> {
        self.check_vector("flat", x)?;
        Ok((&self.metric * x.coords()).into())
    }

    pub fn sharp(&self, mu: &AlgebraCovector) -> Result<AlgebraVector> {
        self.check_covector("sharp", mu)?;
        let factor = self
            .metric_factor
            .as_ref()
            .ok_or(Error::MetricNotPositiveDefinite)?;
        Ok(factor.solve(mu.coords()).into())
    }

    pub fn inner(&self, x: &AlgebraVector, y: &AlgebraVector) -> Result<f64> {
        self.check_vector("inner", x)?;
        self.check_vector("inner", y)?;
        Ok(x.coords().dot(&(&self.metric * y.coords())))
    }

    /// Reduced kinetic energy `½⟨ξ, ξ⟩`.
    pub fn energy(&self, x: &AlgebraVector) -> Result<f64> {
        Ok(0.5 * self.inner(x, x)?)
    }

    /// `♯(ad*_x ♭x)`, the quadratic term of the Euler-Poincaré equation.
    pub fn coadjoint_term(&self, x: &AlgebraVector) -> Result<AlgebraVector> {
        let mu = self.flat(x)?;
        self.sharp(&self.ad_star(x, &mu)?)
    }

    /// Checks antisymmetry, the Jacobi identity and positivity of the metric.
    /// Never fails; inspect the report.
    pub fn validate(&self) -> ValidationReport {
        let n = self.dim();
        let c = &self.constants;
        let mut anti = 0.0_f64;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    anti = anti.max((c.get(i, j, k) + c.get(j, i, k)).abs());
                }
            }
        }
        let mut jacobi = 0.0_f64;
        for i in 0..n {
            for j in 0..n {
                for l in 0..n {
                    for k in 0..n {
                        let mut s = 0.0;
                        for m in 0..n {
                            s += c.get(i, j, m) * c.get(m, l, k)
                                + c.get(j, l, m) * c.get(m, i, k)
                                + c.get(l, i, m) * c.get(m, j, k);
                        }
                        jacobi = jacobi.max(s.abs());
                    }
                }
            }
        }
        let asym = (&self.metric - self.metric.transpose()).amax();
        let sym = (&self.metric + self.metric.transpose()) * 0.5;
        let min_eig = sym
            .symmetric_eigenvalues()
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min);
        ValidationReport {
            max_antisymmetry_violation: anti,
            max_jacobi_violation: jacobi,
            max_metric_asymmetry: asym,
            min_metric_eigenvalue: min_eig,
        }
    }
}

/// Free-function form of [`LieAlgebraSpec::validate`].
pub fn validate_algebra(algebra: &LieAlgebraSpec) -> ValidationReport {
    algebra.validate()
}

fn is_symmetric(m: &DMatrix<f64>) -> bool {
    (m - m.transpose()).amax() <= STRUCTURE_TOLERANCE * m.amax().max(1.0)
}

fn levi_civita_entries() -> [(usize, usize, usize, f64); 6] {
    [
        (0, 1, 2, 1.0),
        (1, 2, 0, 1.0),
        (2, 0, 1, 1.0),
        (1, 0, 2, -1.0),
        (2, 1, 0, -1.0),
        (0, 2, 1, -1.0),
    ]
}

fn so3_constants(dim: usize) -> StructureConstants {
    let mut c = StructureConstants::zeros(dim);
    for (i, j, k, s) in levi_civita_entries() {
        c.set(i, j, k, s);
    }
    c
}

/// The hat map `ℝ³ → so(3)`.
pub fn hat(w: &[f64]) -> nalgebra::Matrix3<f64> {
    nalgebra::Matrix3::new(0.0, -w[2], w[1], w[2], 0.0, -w[0], -w[1], w[0], 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn so3_diag(l: [f64; 3]) -> LieAlgebraSpec {
        LieAlgebraSpec::so3(DMatrix::from_diagonal(&DVector::from_column_slice(&l))).unwrap()
    }

    fn v(x: &[f64]) -> AlgebraVector {
        AlgebraVector::from_slice(x)
    }

    #[test]
    fn so3_bracket_of_unit_axes() {
        let a = so3_diag([1.0, 1.0, 1.0]);
        let r = a
            .bracket(&v(&[1.0, 0.0, 0.0]), &v(&[0.0, 1.0, 0.0]))
            .unwrap();
        assert_eq!(r, v(&[0.0, 0.0, 1.0]));
    }

    #[test]
    fn self_bracket_vanishes() {
        let a = LieAlgebraSpec::se3(DMatrix::identity(6, 6)).unwrap();
        let x = v(&[0.3, -1.2, 2.0, 0.7, 0.1, -0.4]);
        assert!(a.bracket(&x, &x).unwrap().norm() < 1e-15);
    }

    #[test]
    fn se3_bracket_matches_homogeneous_commutator() {
        let a = LieAlgebraSpec::se3(DMatrix::identity(6, 6)).unwrap();
        let embed = |x: &AlgebraVector| {
            let mut m = DMatrix::<f64>::zeros(4, 4);
            m.view_mut((0, 0), (3, 3))
                .copy_from(&hat(&x.as_slice()[..3]));
            for r in 0..3 {
                m[(r, 3)] = x[r + 3];
            }
            m
        };
        let x = v(&[1.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        let y = v(&[0.0, 0.0, 0.0, 0.0, 1.0, 0.0]);
        let r = a.bracket(&x, &y).unwrap();
        assert_eq!(r, v(&[0.0, 0.0, 0.0, 0.0, 0.0, 1.0]));

        let x = v(&[0.3, -0.2, 0.9, 1.1, -0.5, 0.25]);
        let y = v(&[-0.7, 0.4, 0.1, 0.2, 0.6, -1.3]);
        let (ex, ey) = (embed(&x), embed(&y));
        let comm = &ex * &ey - &ey * &ex;
        assert_abs_diff_eq!(embed(&a.bracket(&x, &y).unwrap()), comm, epsilon = 1e-15);
    }

    #[test]
    fn ad_star_of_zero_is_zero() {
        let a = so3_diag([1.0, 2.0, 3.0]);
        let mu = AlgebraCovector::from_slice(&[1.0, -2.0, 0.5]);
        assert_eq!(
            a.ad_star(&AlgebraVector::zeros(3), &mu).unwrap().norm(),
            0.0
        );
    }

    #[test]
    fn coadjoint_term_matches_cross_product() {
        // J⁻¹(JΩ × Ω) with J = diag(1,2,3), Ω = (1,1,1): JΩ×Ω = (−1, 2, −1)
        let a = so3_diag([1.0, 2.0, 3.0]);
        let r = a.coadjoint_term(&v(&[1.0, 1.0, 1.0])).unwrap();
        assert_abs_diff_eq!(
            r.coords(),
            v(&[-1.0, 1.0, -1.0 / 3.0]).coords(),
            epsilon = 1e-15
        );
    }

    #[test]
    fn flat_with_identity_metric_copies_coordinates() {
        let a = so3_diag([1.0, 1.0, 1.0]);
        let x = v(&[0.1, 0.2, 0.3]);
        assert_eq!(a.flat(&x).unwrap().as_slice(), x.as_slice());
    }

    #[test]
    fn flat_on_rotor_metric() {
        let (l3, j) = (3.0, 0.5);
        let m = DMatrix::from_row_slice(
            4,
            4,
            &[
                1.0, 0.0, 0.0, 0.0, 0.0, 2.0, 0.0, 0.0, 0.0, 0.0, l3, j, 0.0, 0.0, j, j,
            ],
        );
        let a = LieAlgebraSpec::so3_r(m).unwrap();
        let mu = a.flat(&v(&[0.0, 0.0, 1.0, 0.0])).unwrap();
        assert_eq!(mu.as_slice(), &[0.0, 0.0, l3, j]);
    }

    #[test]
    fn catalog_algebras_validate() {
        for a in [
            so3_diag([1.0, 2.0, 3.0]),
            LieAlgebraSpec::se3(DMatrix::identity(6, 6)).unwrap(),
            LieAlgebraSpec::so3_r(DMatrix::identity(4, 4)).unwrap(),
        ] {
            let report = a.validate();
            assert!(report.passed(), "{}: {report:?}", a.name());
            assert_eq!(report.max_jacobi_violation, 0.0);
        }
    }

    #[test]
    fn constructed_antisymmetry_violation_is_reported() {
        // C[1][2][3] = 1 and C[2][1][3] = 1 in one-based indexing
        let c = StructureConstants::from_entries(3, [(0, 1, 2, 1.0), (1, 0, 2, 1.0)]).unwrap();
        let a = LieAlgebraSpec::new("bad", c, DMatrix::identity(3, 3)).unwrap();
        let report = a.validate();
        assert_eq!(report.max_antisymmetry_violation, 2.0);
        assert!(!report.passed());
    }

    #[test]
    fn indefinite_rotor_metric_fails_positivity() {
        // J λ₃ − J² = 0.5·0.4 − 0.25 < 0
        let (l3, j) = (0.4, 0.5);
        let m = DMatrix::from_row_slice(
            4,
            4,
            &[
                1.0, 0.0, 0.0, 0.0, 0.0, 2.0, 0.0, 0.0, 0.0, 0.0, l3, j, 0.0, 0.0, j, j,
            ],
        );
        let a = LieAlgebraSpec::so3_r(m).unwrap();
        let report = a.validate();
        assert!(report.min_metric_eigenvalue < 0.0);
        assert!(!report.metric_positive_definite());
        assert_eq!(
            a.sharp(&AlgebraCovector::zeros(4)),
            Err(Error::MetricNotPositiveDefinite)
        );
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let a = so3_diag([1.0, 1.0, 1.0]);
        assert!(matches!(
            a.bracket(&v(&[1.0, 0.0]), &v(&[0.0, 1.0, 0.0])),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn basis_change_preserves_jacobi() {
        let p = DMatrix::from_row_slice(3, 3, &[1.0, 2.0, 0.0, 0.5, -1.0, 1.0, 0.0, 0.3, 2.0]);
        let c = so3_constants(3).change_basis(&p).unwrap();
        let a = LieAlgebraSpec::new("so3'", c, DMatrix::identity(3, 3)).unwrap();
        let report = a.validate();
        assert!(report.max_jacobi_violation < 1e-12, "{report:?}");
        assert!(report.max_antisymmetry_violation < 1e-12);
    }
}
