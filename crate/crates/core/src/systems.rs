//! Pre-built systems with closed-form oracles.
//!
//! * `so3_rigid_body`: free rigid body, `𝕁Ω̇ = Ω × 𝕁Ω`.
//! * `se3_homogeneous`: homogeneous body on SE(3) held to
//!   `ω₁ + ẏ = 0, ω₂ − ẋ = 0, ω₃ = 0, ż = 0` by four inputs.
//! * `rotor`: rigid body with an internal rotor on SO(3) × S¹, held to
//!   `(J − kλ₃)ω₃ + J(1 − k)α̇ = p` by a rotor torque.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::algebra::{AlgebraVector, GroupModel, LieAlgebraSpec, Trivialization};
use crate::connections::Subspace;
use crate::error::{Error, Result};
use crate::vnhc::{Constraint, ControlVector, ControlledSystem};

/// Closed-form map evaluated against the generic machinery in tests.
pub type Oracle<T> = Arc<dyn Fn(&AlgebraVector) -> T + Send + Sync>;

#[derive(Clone)]
pub struct CatalogEntry {
    pub name: &'static str,
    pub system: ControlledSystem,
    pub closed_form_control: Option<Oracle<ControlVector>>,
    pub closed_form_drift: Option<Oracle<AlgebraVector>>,
}

impl fmt::Debug for CatalogEntry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CatalogEntry")
            .field("name", &self.name)
            .field("system", &self.system)
            .field("closed_form_control", &self.closed_form_control.is_some())
            .field("closed_form_drift", &self.closed_form_drift.is_some())
            .finish()
    }
}

/// Catalog names as used in configuration documents.
pub const CATALOG_NAMES: [&str; 3] = ["so3_rigid_body", "se3_homogeneous", "rotor"];

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::Parameter(format!(
            "{name} must be positive, got {v}"
        )))
    }
}

fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

/// Free rigid body with principal inertias `λ`, right trivialized.
pub fn build_so3_rigid_body(lambda: [f64; 3]) -> Result<CatalogEntry> {
    for (i, l) in lambda.iter().enumerate() {
        positive(&format!("lambda_{}", i + 1), *l)?;
    }
    let metric = DMatrix::from_diagonal(&DVector::from_column_slice(&lambda));
    let algebra = LieAlgebraSpec::so3(metric)?;
    let system = ControlledSystem::new(
        "so3_rigid_body",
        algebra,
        GroupModel::So3,
        Trivialization::Right,
        DMatrix::zeros(3, 0),
        Constraint::none(3),
    )?;
    let drift: Oracle<AlgebraVector> = Arc::new(move |x: &AlgebraVector| {
        let w = [x[0], x[1], x[2]];
        let jw = [lambda[0] * w[0], lambda[1] * w[1], lambda[2] * w[2]];
        let c = cross(w, jw);
        AlgebraVector::from([c[0] / lambda[0], c[1] / lambda[1], c[2] / lambda[2]])
    });
    Ok(CatalogEntry {
        name: "so3_rigid_body",
        system,
        closed_form_control: None,
        closed_form_drift: Some(drift),
    })
}

/// Homogeneous body of mass `m` and radius of gyration `k` on SE(3).
///
/// Inputs are `f₁ = e₁/mk² − e₅/m`, `f₂ = e₂/mk² − e₄/m`, `f₃ = e₃/mk²`,
/// `f₄ = e₆/m`, which reproduce the component equations
/// `mk²ω̇₁ = u₁, …, mẍ = m(ω₂ż − ω₃ẏ) − u₂, mÿ = m(ω₃ẋ − ω₁ż) − u₁,
/// mz̈ = m(ω₁ẏ − ω₂ẋ) + u_z`. At `k = 1` the first input lies inside the
/// constraint subspace and the system is rejected as non-transversal.
pub fn build_se3_homogeneous(m: f64, k: f64) -> Result<CatalogEntry> {
    positive("m", m)?;
    positive("k", k)?;
    let i = m * k * k;
    let metric = DMatrix::from_diagonal(&DVector::from_column_slice(&[i, i, i, m, m, m]));
    let algebra = LieAlgebraSpec::se3(metric)?;
    let e = |j: usize| AlgebraVector::basis(6, j);
    let d = Subspace::from_vectors(6, &[&e(0) - &e(4), &e(1) + &e(3)])?;
    #[rustfmt::skip]
    let inputs = DMatrix::from_column_slice(6, 4, &[
        1.0 / i, 0.0, 0.0, 0.0, -1.0 / m, 0.0,
        0.0, 1.0 / i, 0.0, -1.0 / m, 0.0, 0.0,
        0.0, 0.0, 1.0 / i, 0.0, 0.0, 0.0,
        0.0, 0.0, 0.0, 0.0, 0.0, 1.0 / m,
    ]);
    let system = ControlledSystem::new(
        "se3_homogeneous",
        algebra,
        GroupModel::Se3,
        Trivialization::Right,
        inputs,
        Constraint::linear(d),
    )
    .map_err(|e| match e {
        Error::NotTransversal { .. } => Error::Parameter(format!(
            "k = {k} makes the input subspace meet the constraint subspace ({e})"
        )),
        other => other,
    })?;
    let control: Oracle<ControlVector> = Arc::new(move |x: &AlgebraVector| {
        ControlVector(DVector::from_column_slice(&[
            0.0,
            0.0,
            0.0,
            m * (x[0] * x[0] + x[1] * x[1]),
        ]))
    });
    let drift: Oracle<AlgebraVector> = Arc::new(|x: &AlgebraVector| {
        let v = cross([x[0], x[1], x[2]], [x[3], x[4], x[5]]);
        AlgebraVector::from([0.0, 0.0, 0.0, v[0], v[1], v[2]])
    });
    Ok(CatalogEntry {
        name: "se3_homogeneous",
        system,
        closed_form_control: Some(control),
        closed_form_drift: Some(drift),
    })
}

/// Parameters of the rigid body with rotor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotorParams {
    pub lambda: [f64; 3],
    /// Rotor inertia.
    pub j: f64,
    /// Feedback gain.
    pub k: f64,
    /// Constraint level.
    pub p: f64,
}

impl RotorParams {
    /// `D = Jλ₃ − J²`.
    pub fn d(&self) -> f64 {
        self.j * self.lambda[2] - self.j * self.j
    }

    /// Constraint covector `(0, 0, J − kλ₃, J(1 − k))`.
    pub fn constraint_covector(&self) -> [f64; 4] {
        [
            0.0,
            0.0,
            self.j - self.k * self.lambda[2],
            self.j * (1.0 - self.k),
        ]
    }

    pub fn metric(&self) -> DMatrix<f64> {
        let [l1, l2, l3] = self.lambda;
        let j = self.j;
        #[rustfmt::skip]
        let m = DMatrix::from_row_slice(4, 4, &[
            l1, 0.0, 0.0, 0.0,
            0.0, l2, 0.0, 0.0,
            0.0, 0.0, l3, j,
            0.0, 0.0, j, j,
        ]);
        m
    }

    pub fn check(&self) -> Result<()> {
        for (i, l) in self.lambda.iter().enumerate() {
            positive(&format!("lambda_{}", i + 1), *l)?;
        }
        if !self.j.is_finite() || !self.k.is_finite() || !self.p.is_finite() {
            return Err(Error::Parameter("rotor parameters must be finite".into()));
        }
        if self.d() <= 0.0 {
            return Err(Error::Parameter(format!(
                "rotor metric is not positive-definite: J*lambda_3 - J^2 = {} must be > 0",
                self.d()
            )));
        }
        Ok(())
    }
}

/// Rigid body with rotor, left trivialized so the drift reproduces
/// `ω̇₁ = −(1/λ₁)((λ₃−λ₂)ω₂ω₃ + Jω₂α̇)` and its companions.
///
/// The constraint subspace is the kernel of the constraint covector, spanned
/// by `e₁, e₂, J(1−k)e₃ − (J−kλ₃)e₄`; the input is the pure rotor torque
/// `f = −(J/D)e₃ + (λ₃/D)e₄`, for which `♭f = e⁴`.
pub fn build_rotor(params: RotorParams) -> Result<CatalogEntry> {
    params.check()?;
    let RotorParams { lambda, j, k, p } = params;
    let d_det = params.d();
    let algebra = LieAlgebraSpec::so3_r(params.metric())?;
    let cov = params.constraint_covector();
    let direction = Subspace::from_vectors(
        4,
        &[
            AlgebraVector::basis(4, 0),
            AlgebraVector::basis(4, 1),
            AlgebraVector::from([0.0, 0.0, cov[3], -cov[2]]),
        ],
    )?;
    let constraint = Constraint::from_covectors(
        DMatrix::from_row_slice(1, 4, &cov),
        DVector::from_element(1, p),
        Some(direction),
    )?;
    let inputs = DMatrix::from_column_slice(4, 1, &[0.0, 0.0, -j / d_det, lambda[2] / d_det]);
    let system = ControlledSystem::new(
        "rotor",
        algebra,
        GroupModel::So3xS1,
        Trivialization::Left,
        inputs,
        constraint,
    )?;
    let control: Oracle<ControlVector> = Arc::new(move |x: &AlgebraVector| {
        ControlVector(DVector::from_element(
            1,
            k * (lambda[0] - lambda[1]) * x[0] * x[1],
        ))
    });
    let drift: Oracle<AlgebraVector> = Arc::new(move |x: &AlgebraVector| {
        let [l1, l2, l3] = lambda;
        let (w1, w2, w3, a) = (x[0], x[1], x[2], x[3]);
        let c = (l2 - l1) * w1 * w2;
        AlgebraVector::from([
            -((l3 - l2) * w2 * w3 + j * w2 * a) / l1,
            -((l1 - l3) * w1 * w3 - j * w1 * a) / l2,
            -(j / d_det) * c,
            (j / d_det) * c,
        ])
    });
    Ok(CatalogEntry {
        name: "rotor",
        system,
        closed_form_control: Some(control),
        closed_form_drift: Some(drift),
    })
}
