//! The Levi-Civita `𝔤`-connection, projector pairs, and the nonholonomic and
//! induced constrained connections, all on the Lie algebra.
//!
//! For a constant projector `Π` the covariant derivative `(∇_ξ Π)(η)` expands
//! to `∇_ξ(Πη) − Π(∇_ξ η)`. Both the nonholonomic connection `∇ᵈ` and the
//! constrained connection `∇ᶜ` are `∇_ξ η + (∇_ξ Π_along)(η)`; they differ only
//! in which projector pair is used (metric-orthogonal vs. along the inputs).

use nalgebra::{DMatrix, DVector};

use crate::algebra::{AlgebraVector, LieAlgebraSpec, Trivialization};
use crate::error::{check_dim, Error, Result};

/// Relative singular-value threshold for rank decisions.
pub const RANK_TOLERANCE: f64 = 1e-10;

/// A linear subspace of the algebra, stored as an `n × k` basis matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Subspace {
    basis: DMatrix<f64>,
}

impl Subspace {
    /// Fails with [`Error::RankDeficient`] unless the columns are independent.
    pub fn new(basis: DMatrix<f64>) -> Result<Self> {
        let rank = numerical_rank(&basis);
        if rank < basis.ncols() {
            return Err(Error::RankDeficient {
                rank,
                columns: basis.ncols(),
            });
        }
        Ok(Self { basis })
    }

    pub fn from_vectors(dim: usize, vectors: &[AlgebraVector]) -> Result<Self> {
        let mut basis = DMatrix::zeros(dim, vectors.len());
        for (c, v) in vectors.iter().enumerate() {
            check_dim("subspace basis vector", dim, v.dim())?;
            basis.set_column(c, v.coords());
        }
        Self::new(basis)
    }

    /// The whole algebra.
    pub fn full(dim: usize) -> Self {
        Self {
            basis: DMatrix::identity(dim, dim),
        }
    }

    /// The zero subspace.
    pub fn zero(dim: usize) -> Self {
        Self {
            basis: DMatrix::zeros(dim, 0),
        }
    }

    pub fn ambient_dim(&self) -> usize {
        self.basis.nrows()
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    pub fn basis_vector(&self, i: usize) -> AlgebraVector {
        self.basis.column(i).into_owned().into()
    }

    /// The vector `Σ cᵢ bᵢ`.
    pub fn combine(&self, coefficients: &[f64]) -> Result<AlgebraVector> {
        check_dim("subspace coefficients", self.dim(), coefficients.len())?;
        Ok((&self.basis * DVector::from_column_slice(coefficients)).into())
    }

    /// Metric-orthogonal complement `{ξ : ⟨ξ, η⟩ = 0 ∀η ∈ self}`.
    pub fn orthogonal_complement(&self, metric: &DMatrix<f64>) -> Result<Subspace> {
        check_dim("metric", self.ambient_dim(), metric.nrows())?;
        let mb = metric * &self.basis;
        Subspace::new(orthonormal_complement(&mb))
    }
}

impl AsRef<Subspace> for Subspace {
    fn as_ref(&self) -> &Subspace {
        self
    }
}

/// `a₀ + 𝔡`.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineSubspace {
    pub offset: AlgebraVector,
    pub direction: Subspace,
}

impl AffineSubspace {
    pub fn new(offset: AlgebraVector, direction: Subspace) -> Result<Self> {
        check_dim("affine offset", direction.ambient_dim(), offset.dim())?;
        Ok(Self { offset, direction })
    }
}

impl AsRef<Subspace> for AffineSubspace {
    fn as_ref(&self) -> &Subspace {
        &self.direction
    }
}

/// Complementary projectors with `onto + along = I`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectorPair {
    pub onto: DMatrix<f64>,
    pub along: DMatrix<f64>,
}

impl ProjectorPair {
    fn from_onto(onto: DMatrix<f64>) -> Self {
        let n = onto.nrows();
        let along = DMatrix::identity(n, n) - &onto;
        Self { onto, along }
    }

    pub fn project(&self, x: &AlgebraVector) -> AlgebraVector {
        (&self.onto * x.coords()).into()
    }

    pub fn complement(&self, x: &AlgebraVector) -> AlgebraVector {
        (&self.along * x.coords()).into()
    }
}

/// Levi-Civita connection of the invariant metric restricted to the algebra.
///
/// For right trivialization this is
/// `∇_ξ η = −½[ξ,η] + ½♯(ad*_ξ ♭η) + ½♯(ad*_η ♭ξ)`; left trivialization
/// flips the overall sign, so that `ξ̇ = −∇_ξ ξ` is the free motion in both
/// cases.
pub fn g_connection(
    algebra: &LieAlgebraSpec,
    trivialization: Trivialization,
    x: &AlgebraVector,
    y: &AlgebraVector,
) -> Result<AlgebraVector> {
    let bracket = algebra.bracket(x, y)?;
    let ad_x_y = algebra.sharp(&algebra.ad_star(x, &algebra.flat(y)?)?)?;
    let ad_y_x = algebra.sharp(&algebra.ad_star(y, &algebra.flat(x)?)?)?;
    let right = (ad_x_y + ad_y_x - bracket) * 0.5;
    Ok(right * trivialization.sign())
}

/// `𝔓 = B(BᵀMB)⁻¹BᵀM` onto `d` and `𝔔 = I − 𝔓` onto its metric complement.
pub fn orthogonal_projectors(algebra: &LieAlgebraSpec, d: &Subspace) -> Result<ProjectorPair> {
    check_dim("constraint subspace", algebra.dim(), d.ambient_dim())?;
    let n = algebra.dim();
    if d.dim() == 0 {
        return Ok(ProjectorPair::from_onto(DMatrix::zeros(n, n)));
    }
    let b = d.basis();
    let bt_m = b.transpose() * algebra.metric();
    let gram = &bt_m * b;
    let chol = gram.cholesky().ok_or(Error::MetricNotPositiveDefinite)?;
    let onto = b * chol.solve(&bt_m);
    Ok(ProjectorPair::from_onto(onto))
}

/// Projectors of the direct sum `𝔤 = 𝔡 ⊕ 𝔣`: `onto` = 𝔭 (onto `d` along `f`),
/// `along` = 𝔮 (onto `f` along `d`).
pub fn oblique_projectors(
    algebra: &LieAlgebraSpec,
    d: &Subspace,
    f: &Subspace,
) -> Result<ProjectorPair> {
    let n = algebra.dim();
    check_dim("constraint subspace", n, d.ambient_dim())?;
    check_dim("input subspace", n, f.ambient_dim())?;
    let report = check_transversal(d, f);
    if !report.transversal {
        return Err(report.into_error());
    }
    let stacked = stack_columns(d.basis(), f.basis());
    let inverse = stacked
        .clone()
        .lu()
        .solve(&DMatrix::identity(n, n))
        .ok_or_else(|| report.clone().into_error())?;
    // the first k rows of S⁻¹ give the d-coordinates of a vector
    let k = d.dim();
    let onto = d.basis() * inverse.rows(0, k);
    Ok(ProjectorPair::from_onto(onto))
}

/// `∇_x y + ∇_x(Π y) − Π(∇_x y)` with `Π = projectors.along`.
pub fn projected_connection(
    algebra: &LieAlgebraSpec,
    trivialization: Trivialization,
    projectors: &ProjectorPair,
    x: &AlgebraVector,
    y: &AlgebraVector,
) -> Result<AlgebraVector> {
    check_dim("projector", algebra.dim(), projectors.along.nrows())?;
    let nabla = g_connection(algebra, trivialization, x, y)?;
    let along_y = projectors.complement(y);
    let nabla_along = g_connection(algebra, trivialization, x, &along_y)?;
    let along_nabla = projectors.complement(&nabla);
    Ok(nabla + nabla_along - along_nabla)
}

/// Nonholonomic connection `∇ᵈ_x y = ∇_x y + (∇_x 𝔔)(y)`.
pub fn d_connection(
    algebra: &LieAlgebraSpec,
    trivialization: Trivialization,
    d: &Subspace,
    x: &AlgebraVector,
    y: &AlgebraVector,
) -> Result<AlgebraVector> {
    let p = orthogonal_projectors(algebra, d)?;
    projected_connection(algebra, trivialization, &p, x, y)
}

/// Induced constrained connection `∇ᶜ_x y = ∇_x y + (∇_x 𝔮)(y)`.
pub fn c_connection(
    algebra: &LieAlgebraSpec,
    trivialization: Trivialization,
    d: &Subspace,
    f: &Subspace,
    x: &AlgebraVector,
    y: &AlgebraVector,
) -> Result<AlgebraVector> {
    let p = oblique_projectors(algebra, d, f)?;
    projected_connection(algebra, trivialization, &p, x, y)
}

/// Result of a transversality test `𝔤 = 𝔡 ⊕ 𝔣`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransversalityReport {
    pub transversal: bool,
    pub rank: usize,
    pub expected: usize,
    pub constraint_dim: usize,
    pub input_dim: usize,
}

impl TransversalityReport {
    pub fn into_error(self) -> Error {
        Error::NotTransversal {
            rank: self.rank,
            expected: self.expected,
            constraint_dim: self.constraint_dim,
            input_dim: self.input_dim,
        }
    }
}

/// True iff `dim d + dim f = n` and `[B_d | B_f]` has full rank. Affine
/// constraints are tested through their direction.
pub fn check_transversal(constraint: &impl AsRef<Subspace>, f: &Subspace) -> TransversalityReport {
    let d = constraint.as_ref();
    let n = d.ambient_dim();
    let rank = if f.ambient_dim() == n {
        numerical_rank(&stack_columns(d.basis(), f.basis()))
    } else {
        0
    };
    TransversalityReport {
        transversal: f.ambient_dim() == n && d.dim() + f.dim() == n && rank == n,
        rank,
        expected: n,
        constraint_dim: d.dim(),
        input_dim: f.dim(),
    }
}

pub(crate) fn stack_columns(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let mut s = DMatrix::zeros(a.nrows(), a.ncols() + b.ncols());
    s.view_mut((0, 0), (a.nrows(), a.ncols())).copy_from(a);
    s.view_mut((0, a.ncols()), (b.nrows(), b.ncols()))
        .copy_from(b);
    s
}

/// Rank with singular values below `RANK_TOLERANCE · σ_max` treated as zero.
pub fn numerical_rank(m: &DMatrix<f64>) -> usize {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0;
    }
    let sv = m.singular_values();
    let max = sv.max();
    if max == 0.0 {
        return 0;
    }
    sv.iter().filter(|s| **s > RANK_TOLERANCE * max).count()
}

/// Euclidean-orthonormal basis (as columns) of the complement of the column
/// space of `b`. Columns are ordered by the symmetric eigensolver and signed
/// so that each column's largest-magnitude entry is positive.
pub(crate) fn orthonormal_complement(b: &DMatrix<f64>) -> DMatrix<f64> {
    let n = b.nrows();
    let residual = if b.ncols() == 0 {
        DMatrix::identity(n, n)
    } else {
        // I − B B⁺ via the thin SVD, robust to scaling of the columns
        let svd = b.clone().svd(true, false);
        let u = svd.u.expect("requested U");
        let max = svd.singular_values.max();
        let mut proj = DMatrix::<f64>::zeros(n, n);
        for (i, s) in svd.singular_values.iter().enumerate() {
            if *s > RANK_TOLERANCE * max {
                let col = u.column(i);
                proj += col * col.transpose();
            }
        }
        DMatrix::identity(n, n) - proj
    };
    let eig = residual.symmetric_eigen();
    let mut picks: Vec<(f64, usize)> = eig
        .eigenvalues
        .iter()
        .enumerate()
        .filter(|(_, v)| **v > 0.5)
        .map(|(i, v)| (*v, i))
        .collect();
    picks.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    let mut out = DMatrix::zeros(n, picks.len());
    for (c, (_, i)) in picks.iter().enumerate() {
        let mut col = eig.eigenvectors.column(*i).into_owned();
        let pivot = col.iamax();
        if col[pivot] < 0.0 {
            col = -col;
        }
        out.set_column(c, &col);
    }
    out
}
