//! Virtual nonholonomic constraints and their enforcing feedback.
//!
//! A [`ControlledSystem`] couples the reduced dynamics
//! `ξ̇ = −σ♯(ad*_ξ ♭ξ) + Σ uₐ fₐ` with a constraint `μᵃ(ξ − a₀) = 0` and input
//! directions `fₐ`. When `𝔤 = 𝔡 ⊕ 𝔣` the matrix `μᵃ(f_b)` is invertible and
//! there is exactly one `u(ξ)` making the constraint invariant.

use nalgebra::{DMatrix, DVector, Dyn, LU};

use crate::algebra::{AlgebraCovector, AlgebraVector, GroupModel, LieAlgebraSpec, Trivialization};
use crate::connections::{
    check_transversal, numerical_rank, oblique_projectors, orthonormal_complement,
    projected_connection, AffineSubspace, ProjectorPair, Subspace, TransversalityReport,
};
use crate::error::{check_dim, Error, Result};

/// Feedback values `u = (u₁, …, u_m)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlVector(pub DVector<f64>);

impl ControlVector {
    pub fn zeros(m: usize) -> Self {
        Self(DVector::zeros(m))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        self.0.as_slice()
    }

    pub fn norm(&self) -> f64 {
        self.0.norm()
    }
}

impl std::ops::Index<usize> for ControlVector {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// Rows `μᵃ` spanning an annihilator.
#[derive(Debug, Clone, PartialEq)]
pub struct CovectorBasis {
    rows: DMatrix<f64>,
}

impl CovectorBasis {
    pub fn new(rows: DMatrix<f64>) -> Result<Self> {
        let rank = numerical_rank(&rows);
        if rank < rows.nrows() {
            return Err(Error::RankDeficient {
                rank,
                columns: rows.nrows(),
            });
        }
        Ok(Self { rows })
    }

    pub fn rows(&self) -> &DMatrix<f64> {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.nrows() == 0
    }

    pub fn covector(&self, a: usize) -> AlgebraCovector {
        self.rows.row(a).transpose().into()
    }

    /// `(μ¹(x), …, μʳ(x))`.
    pub fn apply(&self, x: &AlgebraVector) -> DVector<f64> {
        &self.rows * x.coords()
    }
}

/// Orthonormal basis of the annihilator of `d`, i.e. the left null space of
/// its basis matrix.
pub fn annihilator(d: &Subspace) -> CovectorBasis {
    let rows = orthonormal_complement(d.basis()).transpose();
    CovectorBasis { rows }
}

/// A linear or affine velocity constraint `μᵃ(ξ) = levelsᵃ`.
#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    direction: Subspace,
    offset: AlgebraVector,
    covectors: CovectorBasis,
    levels: DVector<f64>,
}

impl Constraint {
    /// `ξ ∈ 𝔡`.
    pub fn linear(d: Subspace) -> Self {
        let covectors = annihilator(&d);
        let n = d.ambient_dim();
        let r = covectors.len();
        Self {
            direction: d,
            offset: AlgebraVector::zeros(n),
            covectors,
            levels: DVector::zeros(r),
        }
    }

    /// `ξ ∈ a₀ + 𝔡`.
    pub fn affine(a: AffineSubspace) -> Self {
        let covectors = annihilator(&a.direction);
        let levels = covectors.apply(&a.offset);
        Self {
            direction: a.direction,
            offset: a.offset,
            covectors,
            levels,
        }
    }

    /// `μᵃ(ξ) = levelsᵃ` for the given rows, which are kept verbatim so that
    /// residuals are reported in the caller's units. The direction is the
    /// kernel of the rows unless `direction` is supplied.
    pub fn from_covectors(
        rows: DMatrix<f64>,
        levels: DVector<f64>,
        direction: Option<Subspace>,
    ) -> Result<Self> {
        check_dim("constraint levels", rows.nrows(), levels.len())?;
        let covectors = CovectorBasis::new(rows)?;
        let n = covectors.rows.ncols();
        let direction = match direction {
            Some(d) => {
                check_dim("constraint direction", n, d.ambient_dim())?;
                check_dim("constraint direction rank", n - covectors.len(), d.dim())?;
                let defect = (covectors.rows() * d.basis()).amax();
                if defect > 1e-12 * covectors.rows().amax().max(1.0) {
                    return Err(Error::Contract(format!(
                        "constraint direction is not annihilated by the covectors (defect {defect:e})"
                    )));
                }
                d
            }
            None => Subspace::new(orthonormal_complement(&covectors.rows.transpose()))?,
        };
        // minimum-norm particular solution A a₀ = levels
        let offset = if covectors.is_empty() {
            DVector::zeros(n)
        } else {
            let a = covectors.rows();
            let gram = a * a.transpose();
            let y = gram
                .lu()
                .solve(&levels)
                .ok_or_else(|| Error::Contract("constraint rows are dependent".into()))?;
            a.transpose() * y
        };
        Ok(Self {
            direction,
            offset: offset.into(),
            covectors,
            levels,
        })
    }

    /// No constraint at all: `𝔡 = 𝔤`.
    pub fn none(dim: usize) -> Self {
        Self::linear(Subspace::full(dim))
    }

    pub fn direction(&self) -> &Subspace {
        &self.direction
    }

    pub fn offset(&self) -> &AlgebraVector {
        &self.offset
    }

    pub fn covectors(&self) -> &CovectorBasis {
        &self.covectors
    }

    pub fn levels(&self) -> &DVector<f64> {
        &self.levels
    }

    pub fn is_affine(&self) -> bool {
        self.levels.iter().any(|l| *l != 0.0)
    }

    /// `μᵃ(x) − levelsᵃ`, which is `A·x` for linear and `A·(x − a₀)` for
    /// affine constraints.
    pub fn residual(&self, x: &AlgebraVector) -> Result<DVector<f64>> {
        check_dim("constraint residual", self.direction.ambient_dim(), x.dim())?;
        Ok(self.covectors.apply(x) - &self.levels)
    }

    /// Whether `x` satisfies the constraint to `tol`.
    pub fn contains(&self, x: &AlgebraVector, tol: f64) -> Result<bool> {
        Ok(self.residual(x)?.amax() <= tol)
    }
}

impl AsRef<Subspace> for Constraint {
    fn as_ref(&self) -> &Subspace {
        &self.direction
    }
}

/// Free-function form of [`Constraint::residual`].
pub fn constraint_residual(constraint: &Constraint, x: &AlgebraVector) -> Result<DVector<f64>> {
    constraint.residual(x)
}

/// A mechanical control system on a Lie group with a virtual constraint.
#[derive(Debug, Clone)]
pub struct ControlledSystem {
    label: String,
    algebra: LieAlgebraSpec,
    group: GroupModel,
    trivialization: Trivialization,
    inputs: DMatrix<f64>,
    input_subspace: Subspace,
    constraint: Constraint,
    projectors: ProjectorPair,
    coupling: Option<LU<f64, Dyn, Dyn>>,
}

impl ControlledSystem {
    /// Validates the algebra, the input columns and the transversality
    /// `𝔤 = 𝔣 ⊕ 𝔡`.
    pub fn new(
        label: impl Into<String>,
        algebra: LieAlgebraSpec,
        group: GroupModel,
        trivialization: Trivialization,
        inputs: DMatrix<f64>,
        constraint: Constraint,
    ) -> Result<Self> {
        let n = algebra.dim();
        let report = algebra.validate();
        if !report.metric_positive_definite() {
            return Err(Error::MetricNotPositiveDefinite);
        }
        if !report.antisymmetric() || !report.jacobi() {
            return Err(Error::Parameter(format!(
                "structure constants of '{}' are not a Lie algebra \
                 (antisymmetry {:e}, Jacobi {:e})",
                algebra.name(),
                report.max_antisymmetry_violation,
                report.max_jacobi_violation
            )));
        }
        check_dim("group model", n, group.algebra_dim())?;
        check_dim("input columns", n, inputs.nrows())?;
        check_dim("constraint", n, constraint.direction.ambient_dim())?;
        let m = inputs.ncols();
        if m >= n {
            return Err(Error::Parameter(format!(
                "need fewer inputs than the algebra dimension, got {m} for n = {n}"
            )));
        }
        let input_subspace = Subspace::new(inputs.clone())?;
        let transversal = check_transversal(&constraint, &input_subspace);
        if !transversal.transversal {
            return Err(transversal.into_error());
        }
        let projectors = oblique_projectors(&algebra, &constraint.direction, &input_subspace)?;
        let coupling = if m == 0 {
            None
        } else {
            let af = constraint.covectors.rows() * &inputs;
            let lu = af.lu();
            if !lu.is_invertible() {
                return Err(transversal.into_error());
            }
            Some(lu)
        };
        Ok(Self {
            label: label.into(),
            algebra,
            group,
            trivialization,
            inputs,
            input_subspace,
            constraint,
            projectors,
            coupling,
        })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn algebra(&self) -> &LieAlgebraSpec {
        &self.algebra
    }

    pub fn group(&self) -> &GroupModel {
        &self.group
    }

    pub fn trivialization(&self) -> Trivialization {
        self.trivialization
    }

    pub fn dim(&self) -> usize {
        self.algebra.dim()
    }

    pub fn input_count(&self) -> usize {
        self.inputs.ncols()
    }

    /// Input columns `fₐ` in algebra coordinates.
    pub fn inputs(&self) -> &DMatrix<f64> {
        &self.inputs
    }

    pub fn input_subspace(&self) -> &Subspace {
        &self.input_subspace
    }

    pub fn constraint(&self) -> &Constraint {
        &self.constraint
    }

    /// Projectors of `𝔤 = 𝔡 ⊕ 𝔣`: `onto` is 𝔭, `along` is 𝔮.
    pub fn projectors(&self) -> &ProjectorPair {
        &self.projectors
    }

    pub fn transversality(&self) -> TransversalityReport {
        check_transversal(&self.constraint, &self.input_subspace)
    }

    /// Uncontrolled acceleration `−σ♯(ad*_x ♭x)`.
    pub fn drift(&self, x: &AlgebraVector) -> Result<AlgebraVector> {
        Ok(self
            .algebra
            .coadjoint_term(x)?
            .scale(-self.trivialization.sign()))
    }

    /// The unique `u` with `μᵃ(drift(x) + Σ u_b f_b) = 0` for every `a`.
    pub fn control_law(&self, x: &AlgebraVector) -> Result<ControlVector> {
        let Some(lu) = &self.coupling else {
            self.algebra.check_vector("control law", x)?;
            return Ok(ControlVector::zeros(0));
        };
        let drift = self.drift(x)?;
        let rhs = -self.constraint.covectors.apply(&drift);
        let u = lu
            .solve(&rhs)
            .ok_or_else(|| self.transversality().into_error())?;
        Ok(ControlVector(u))
    }

    /// `Σ uₐ fₐ`.
    pub fn input_force(&self, u: &ControlVector) -> Result<AlgebraVector> {
        check_dim("control vector", self.input_count(), u.dim())?;
        Ok((&self.inputs * &u.0).into())
    }

    /// `drift(x) + F·u*(x)`.
    pub fn closed_loop_field(&self, x: &AlgebraVector) -> Result<AlgebraVector> {
        let u = self.control_law(x)?;
        Ok(self.drift(x)? + self.input_force(&u)?)
    }

    /// Closed-loop field together with the control that produced it.
    pub fn closed_loop_with_control(
        &self,
        x: &AlgebraVector,
    ) -> Result<(AlgebraVector, ControlVector)> {
        let u = self.control_law(x)?;
        let field = self.drift(x)? + self.input_force(&u)?;
        Ok((field, u))
    }

    pub fn constraint_residual(&self, x: &AlgebraVector) -> Result<DVector<f64>> {
        self.constraint.residual(x)
    }

    pub fn energy(&self, x: &AlgebraVector) -> Result<f64> {
        self.algebra.energy(x)
    }

    /// `∇ᶜ_x y` for this system's constraint and inputs.
    pub fn constrained_connection(
        &self,
        x: &AlgebraVector,
        y: &AlgebraVector,
    ) -> Result<AlgebraVector> {
        projected_connection(&self.algebra, self.trivialization, &self.projectors, x, y)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn so3(l: [f64; 3]) -> LieAlgebraSpec {
        LieAlgebraSpec::so3(DMatrix::from_diagonal(&DVector::from_column_slice(&l))).unwrap()
    }

    fn planar_system() -> ControlledSystem {
        // so(3), constrain ω₃ = 0 with a torque about e₃
        let d =
            Subspace::from_vectors(3, &[AlgebraVector::basis(3, 0), AlgebraVector::basis(3, 1)])
                .unwrap();
        ControlledSystem::new(
            "planar",
            so3([1.0, 2.0, 3.0]),
            GroupModel::So3,
            Trivialization::Right,
            DMatrix::from_column_slice(3, 1, &[0.0, 0.0, 1.0]),
            Constraint::linear(d),
        )
        .unwrap()
    }

    #[test]
    fn annihilator_of_coordinate_subspace() {
        let d =
            Subspace::from_vectors(4, &[AlgebraVector::basis(4, 0), AlgebraVector::basis(4, 1)])
                .unwrap();
        let a = annihilator(&d);
        assert_eq!(a.len(), 2);
        assert_abs_diff_eq!(a.rows() * d.basis(), DMatrix::zeros(2, 2), epsilon = 1e-15);
        assert_eq!(numerical_rank(a.rows()), 2);
    }

    #[test]
    fn annihilator_of_full_space_is_empty() {
        assert!(annihilator(&Subspace::full(3)).is_empty());
    }

    #[test]
    fn zero_state_gives_zero_control() {
        let sys = planar_system();
        let u = sys.control_law(&AlgebraVector::zeros(3)).unwrap();
        assert_eq!(u.as_slice(), &[0.0]);
    }

    #[test]
    fn planar_law_cancels_third_component() {
        // drift₃ = ((λ₂ − λ₁)/λ₃) ω₁ω₂ for σ = +1, so u = −drift₃
        let sys = planar_system();
        let x = AlgebraVector::from([0.7, -1.3, 0.0]);
        let u = sys.control_law(&x).unwrap();
        assert_abs_diff_eq!(u[0], -((2.0 - 1.0) / 3.0) * 0.7 * -1.3, epsilon = 1e-15);
        let field = sys.closed_loop_field(&x).unwrap();
        assert_abs_diff_eq!(field[2], 0.0, epsilon = 1e-15);
    }

    #[test]
    fn too_many_inputs_is_rejected() {
        let err = ControlledSystem::new(
            "overactuated",
            so3([1.0, 2.0, 3.0]),
            GroupModel::So3,
            Trivialization::Right,
            DMatrix::identity(3, 3),
            Constraint::linear(Subspace::zero(3)),
        )
        .unwrap_err();
        assert!(matches!(err, Error::Parameter(_)));
    }

    #[test]
    fn input_inside_constraint_is_not_transversal() {
        let d =
            Subspace::from_vectors(3, &[AlgebraVector::basis(3, 0), AlgebraVector::basis(3, 1)])
                .unwrap();
        let err = ControlledSystem::new(
            "bad",
            so3([1.0, 2.0, 3.0]),
            GroupModel::So3,
            Trivialization::Right,
            DMatrix::from_column_slice(3, 1, &[1.0, 1.0, 0.0]),
            Constraint::linear(d),
        )
        .unwrap_err();
        assert!(matches!(err, Error::NotTransversal { rank: 2, .. }));
    }

    #[test]
    fn covector_constraint_keeps_rows_and_offset() {
        let rows = DMatrix::from_row_slice(1, 3, &[0.0, 2.0, 1.0]);
        let c = Constraint::from_covectors(rows, DVector::from_element(1, 0.5), None).unwrap();
        assert_abs_diff_eq!(c.residual(c.offset()).unwrap()[0], 0.0, epsilon = 1e-15);
        let x = AlgebraVector::from([3.0, 1.0, 1.0]);
        assert_abs_diff_eq!(c.residual(&x).unwrap()[0], 2.5, epsilon = 1e-15);
        assert_eq!(c.direction().dim(), 2);
        assert!(c.is_affine());
    }

    #[test]
    fn covector_constraint_rejects_wrong_direction() {
        let rows = DMatrix::from_row_slice(1, 2, &[1.0, 1.0]);
        let d = Subspace::from_vectors(2, &[AlgebraVector::from([1.0, 1.0])]).unwrap();
        assert!(Constraint::from_covectors(rows, DVector::zeros(1), Some(d)).is_err());
    }

    #[test]
    fn affine_residual_vanishes_at_offset() {
        let d = Subspace::from_vectors(3, &[AlgebraVector::basis(3, 0)]).unwrap();
        let a0 = AlgebraVector::from([0.0, 1.0, -2.0]);
        let c = Constraint::affine(AffineSubspace::new(a0.clone(), d).unwrap());
        assert_abs_diff_eq!(c.residual(&a0).unwrap(), DVector::zeros(2), epsilon = 1e-15);
        let moved = &a0 + &AlgebraVector::from([5.0, 0.0, 0.0]);
        assert_abs_diff_eq!(
            c.residual(&moved).unwrap(),
            DVector::zeros(2),
            epsilon = 1e-15
        );
    }
}
