//! Serde representations of algebras and systems for configuration documents.
//!
//! Basis indices in documents are one-based, matching `e₁ … eₙ`. Matrices are
//! row-major flat arrays; subspaces are lists of basis vectors.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::algebra::{
    AlgebraVector, GroupModel, LieAlgebraSpec, StructureConstants, Trivialization,
};
use crate::connections::{AffineSubspace, Subspace};
use crate::error::{Error, Result};
use crate::systems::{self, CatalogEntry, RotorParams};
use crate::vnhc::{Constraint, ControlledSystem};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlgebraDoc {
    #[serde(default = "default_algebra_name")]
    pub name: String,
    pub dim: usize,
    /// `(i, j, k, value)` with one-based indices; zero entries omitted.
    pub structure_constants: Vec<(usize, usize, usize, f64)>,
    /// Row-major `dim × dim`.
    pub metric: Vec<f64>,
}

fn default_algebra_name() -> String {
    "custom".into()
}

impl AlgebraDoc {
    pub fn from_algebra(a: &LieAlgebraSpec) -> Self {
        let n = a.dim();
        let metric = (0..n)
            .flat_map(|r| (0..n).map(move |c| (r, c)))
            .map(|(r, c)| a.metric()[(r, c)])
            .collect();
        Self {
            name: a.name().to_string(),
            dim: n,
            structure_constants: a
                .structure_constants()
                .entries()
                .into_iter()
                .map(|(i, j, k, v)| (i + 1, j + 1, k + 1, v))
                .collect(),
            metric,
        }
    }

    pub fn to_algebra(&self) -> Result<LieAlgebraSpec> {
        let n = self.dim;
        if self.metric.len() != n * n {
            return Err(Error::Parameter(format!(
                "metric must have {} entries for dim = {n}, found {}",
                n * n,
                self.metric.len()
            )));
        }
        let mut entries = Vec::with_capacity(self.structure_constants.len());
        for &(i, j, k, v) in &self.structure_constants {
            if i == 0 || j == 0 || k == 0 {
                return Err(Error::Parameter(format!(
                    "structure constant indices are one-based, found ({i}, {j}, {k})"
                )));
            }
            entries.push((i - 1, j - 1, k - 1, v));
        }
        let c = StructureConstants::from_entries(n, entries)?;
        LieAlgebraSpec::new(
            self.name.clone(),
            c,
            DMatrix::from_row_slice(n, n, &self.metric),
        )
    }
}

/// Linear (`basis`) or affine (`basis` + `offset`) constraint, or one given
/// directly by covector rows and their levels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct ConstraintDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub basis: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub offset: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub covectors: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub levels: Option<Vec<f64>>,
}

pub fn subspace_from_vectors(dim: usize, vectors: &[Vec<f64>]) -> Result<Subspace> {
    let vs: Vec<AlgebraVector> = vectors
        .iter()
        .map(|v| AlgebraVector::from(v.clone()))
        .collect();
    Subspace::from_vectors(dim, &vs)
}

pub fn subspace_to_vectors(s: &Subspace) -> Vec<Vec<f64>> {
    (0..s.dim())
        .map(|c| s.basis().column(c).iter().copied().collect())
        .collect()
}

impl ConstraintDoc {
    pub fn to_constraint(&self, dim: usize) -> Result<Constraint> {
        match (&self.basis, &self.covectors) {
            (Some(_), Some(_)) => Err(Error::Parameter(
                "constraint takes either `basis` or `covectors`, not both".into(),
            )),
            (Some(basis), None) => {
                if self.levels.is_some() {
                    return Err(Error::Parameter("`levels` requires `covectors`".into()));
                }
                let d = subspace_from_vectors(dim, basis)?;
                match &self.offset {
                    None => Ok(Constraint::linear(d)),
                    Some(o) => Ok(Constraint::affine(AffineSubspace::new(
                        AlgebraVector::from(o.clone()),
                        d,
                    )?)),
                }
            }
            (None, Some(rows)) => {
                if self.offset.is_some() {
                    return Err(Error::Parameter("`offset` requires `basis`".into()));
                }
                let r = rows.len();
                let mut a = DMatrix::zeros(r, dim);
                for (i, row) in rows.iter().enumerate() {
                    if row.len() != dim {
                        return Err(Error::DimensionMismatch {
                            context: "constraint covector",
                            expected: dim,
                            found: row.len(),
                        });
                    }
                    for (j, v) in row.iter().enumerate() {
                        a[(i, j)] = *v;
                    }
                }
                let levels = self.levels.clone().unwrap_or_else(|| vec![0.0; r]);
                Constraint::from_covectors(a, DVector::from_vec(levels), None)
            }
            (None, None) => Ok(Constraint::none(dim)),
        }
    }
}

/// Fully inline system description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CustomSystemDoc {
    #[serde(default = "default_algebra_name")]
    pub label: String,
    #[serde(default = "default_sigma")]
    pub sigma: i64,
    pub algebra: AlgebraDoc,
    /// Input columns `fₐ` in algebra coordinates.
    #[serde(default)]
    pub inputs: Vec<Vec<f64>>,
    #[serde(default)]
    pub constraint: ConstraintDoc,
    /// Optional matrix generators `Gᵢ` (row-major); the adjoint
    /// representation is used otherwise.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub group_generators: Option<Vec<Vec<f64>>>,
}

fn default_sigma() -> i64 {
    1
}

/// System selector: a catalog entry with its parameters, or a custom system.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
#[allow(clippy::large_enum_variant)]
pub enum SystemDoc {
    So3RigidBody {
        lambda: [f64; 3],
    },
    Se3Homogeneous {
        m: f64,
        k: f64,
    },
    Rotor {
        lambda: [f64; 3],
        #[serde(rename = "J")]
        j: f64,
        k: f64,
        #[serde(default)]
        p: f64,
    },
    Custom(CustomSystemDoc),
}

/// A resolved system and, for catalog systems, its closed-form oracles.
#[derive(Debug, Clone)]
pub enum ResolvedSystem {
    Catalog(CatalogEntry),
    Custom(ControlledSystem),
}

impl ResolvedSystem {
    pub fn system(&self) -> &ControlledSystem {
        match self {
            ResolvedSystem::Catalog(e) => &e.system,
            ResolvedSystem::Custom(s) => s,
        }
    }
}

impl SystemDoc {
    pub fn name(&self) -> &str {
        match self {
            SystemDoc::So3RigidBody { .. } => "so3_rigid_body",
            SystemDoc::Se3Homogeneous { .. } => "se3_homogeneous",
            SystemDoc::Rotor { .. } => "rotor",
            SystemDoc::Custom(c) => &c.label,
        }
    }

    pub fn build(&self) -> Result<ResolvedSystem> {
        Ok(match self {
            SystemDoc::So3RigidBody { lambda } => {
                ResolvedSystem::Catalog(systems::build_so3_rigid_body(*lambda)?)
            }
            SystemDoc::Se3Homogeneous { m, k } => {
                ResolvedSystem::Catalog(systems::build_se3_homogeneous(*m, *k)?)
            }
            SystemDoc::Rotor { lambda, j, k, p } => {
                ResolvedSystem::Catalog(systems::build_rotor(RotorParams {
                    lambda: *lambda,
                    j: *j,
                    k: *k,
                    p: *p,
                })?)
            }
            SystemDoc::Custom(c) => ResolvedSystem::Custom(c.build()?),
        })
    }

    /// Overrides one scalar parameter by name (`m`, `k`, `J`, `p`,
    /// `lambda_1` … `lambda_3`), for parameter sweeps.
    pub fn with_parameter(&self, name: &str, value: f64) -> Result<SystemDoc> {
        let mut out = self.clone();
        let unknown = || {
            Error::Parameter(format!(
                "system '{}' has no parameter '{name}'",
                self.name()
            ))
        };
        let lambda_index = |name: &str| match name {
            "lambda_1" => Some(0),
            "lambda_2" => Some(1),
            "lambda_3" => Some(2),
            _ => None,
        };
        match &mut out {
            SystemDoc::So3RigidBody { lambda } => {
                lambda[lambda_index(name).ok_or_else(unknown)?] = value;
            }
            SystemDoc::Se3Homogeneous { m, k } => match name {
                "m" => *m = value,
                "k" => *k = value,
                _ => return Err(unknown()),
            },
            SystemDoc::Rotor { lambda, j, k, p } => match name {
                "J" => *j = value,
                "k" => *k = value,
                "p" => *p = value,
                other => lambda[lambda_index(other).ok_or_else(unknown)?] = value,
            },
            SystemDoc::Custom(_) => return Err(unknown()),
        }
        Ok(out)
    }
}

impl CustomSystemDoc {
    pub fn build(&self) -> Result<ControlledSystem> {
        let algebra = self.algebra.to_algebra()?;
        let n = algebra.dim();
        let group = match &self.group_generators {
            None => GroupModel::adjoint(&algebra),
            Some(gs) => {
                if gs.len() != n {
                    return Err(Error::DimensionMismatch {
                        context: "group generators",
                        expected: n,
                        found: gs.len(),
                    });
                }
                let size = (gs.first().map_or(0, Vec::len) as f64).sqrt() as usize;
                let mut generators = Vec::with_capacity(n);
                for g in gs {
                    if g.len() != size * size || size == 0 {
                        return Err(Error::Parameter(
                            "group generators must be square and of equal size".into(),
                        ));
                    }
                    generators.push(DMatrix::from_row_slice(size, size, g));
                }
                GroupModel::Matrix { generators }
            }
        };
        let mut inputs = DMatrix::zeros(n, self.inputs.len());
        for (c, col) in self.inputs.iter().enumerate() {
            if col.len() != n {
                return Err(Error::DimensionMismatch {
                    context: "input column",
                    expected: n,
                    found: col.len(),
                });
            }
            inputs.set_column(c, &DVector::from_column_slice(col));
        }
        let constraint = self.constraint.to_constraint(n)?;
        ControlledSystem::new(
            self.label.clone(),
            algebra,
            group,
            Trivialization::from_sign(self.sigma)?,
            inputs,
            constraint,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn algebra_document_round_trip() {
        let a = LieAlgebraSpec::se3(DMatrix::from_diagonal(&DVector::from_column_slice(&[
            0.25, 0.25, 0.25, 1.0, 1.0, 1.0,
        ])))
        .unwrap();
        let doc = AlgebraDoc::from_algebra(&a);
        assert_eq!(doc.structure_constants.len(), 18);
        let text = toml::to_string(&doc).unwrap();
        let back: AlgebraDoc = toml::from_str(&text).unwrap();
        let b = back.to_algebra().unwrap();
        assert_eq!(b.structure_constants(), a.structure_constants());
        assert_eq!(b.metric(), a.metric());
    }

    #[test]
    fn zero_based_index_is_rejected() {
        let doc = AlgebraDoc {
            name: "x".into(),
            dim: 2,
            structure_constants: vec![(0, 1, 1, 1.0)],
            metric: vec![1.0, 0.0, 0.0, 1.0],
        };
        assert!(doc.to_algebra().is_err());
    }

    #[test]
    fn catalog_selector_parses() {
        let doc: SystemDoc = toml::from_str(
            r#"
kind = "rotor"
lambda = [1.0, 2.0, 3.0]
J = 0.5
k = 0.5
"#,
        )
        .unwrap();
        assert_eq!(
            doc,
            SystemDoc::Rotor {
                lambda: [1.0, 2.0, 3.0],
                j: 0.5,
                k: 0.5,
                p: 0.0
            }
        );
        let swept = doc.with_parameter("k", 0.9).unwrap();
        assert!(matches!(swept, SystemDoc::Rotor { k, .. } if k == 0.9));
        assert!(doc.with_parameter("m", 1.0).is_err());
    }

    #[test]
    fn custom_system_builds_with_adjoint_group() {
        let doc: SystemDoc = toml::from_str(
            r#"
kind = "custom"
label = "planar"
sigma = 1
inputs = [[0.0, 0.0, 1.0]]

[algebra]
dim = 3
structure_constants = [[1, 2, 3, 1.0], [2, 1, 3, -1.0], [2, 3, 1, 1.0],
                       [3, 2, 1, -1.0], [3, 1, 2, 1.0], [1, 3, 2, -1.0]]
metric = [1.0, 0.0, 0.0, 0.0, 2.0, 0.0, 0.0, 0.0, 3.0]

[constraint]
basis = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]
"#,
        )
        .unwrap();
        let sys = doc.build().unwrap();
        let sys = sys.system();
        assert_eq!(sys.dim(), 3);
        assert_eq!(sys.input_count(), 1);
        assert!(matches!(sys.group(), GroupModel::Matrix { .. }));
    }
}
