//! Matrix-group models used to reconstruct `g(t)` from `ξ(t)`.

use std::ops::Range;

use nalgebra::{DMatrix, Matrix3};

use super::{hat, AlgebraVector};
use crate::error::{check_dim, Error, Result};

/// Below this rotation angle the closed-form exponentials switch to series.
const SMALL_ANGLE: f64 = 1e-8;

/// Group elements handed to [`group_step`] must have an orthogonality defect
/// below this bound in their rotation block.
pub const GROUP_MEMBERSHIP_TOLERANCE: f64 = 1e-8;

/// Which side velocities are trivialized on.
///
/// `Right` means `ξ = ġ g⁻¹` with free motion `ξ̇ = −♯(ad*_ξ ♭ξ)`; `Left` means
/// `ξ = g⁻¹ ġ` with `ξ̇ = +♯(ad*_ξ ♭ξ)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Trivialization {
    Right,
    Left,
}

impl Trivialization {
    /// `σ = +1` for right, `−1` for left.
    pub fn sign(self) -> f64 {
        match self {
            Trivialization::Right => 1.0,
            Trivialization::Left => -1.0,
        }
    }

    pub fn from_sign(sigma: i64) -> Result<Self> {
        match sigma {
            1 => Ok(Trivialization::Right),
            -1 => Ok(Trivialization::Left),
            other => Err(Error::Parameter(format!(
                "sigma must be +1 or -1, got {other}"
            ))),
        }
    }
}

/// A faithful-enough matrix representation of the group.
#[derive(Debug, Clone, PartialEq)]
pub enum GroupModel {
    /// 3×3 rotation matrices.
    So3,
    /// 4×4 homogeneous transforms `[[R, r], [0, 1]]`; algebra coordinates `(ω, v)`.
    Se3,
    /// `SO(3) × S¹` as block-diagonal `diag(R, rot(α))`, 5×5.
    So3xS1,
    /// Generic model: `embed(ξ) = Σ ξⁱ Gᵢ`, exponential by Padé scaling-and-squaring.
    Matrix { generators: Vec<DMatrix<f64>> },
}

impl GroupModel {
    /// Adjoint representation of `algebra`: `Gᵢ = ad_{eᵢ}`. Faithful only when
    /// the centre is trivial, but always a homomorphic image suitable for
    /// reconstruction.
    pub fn adjoint(algebra: &super::LieAlgebraSpec) -> Self {
        let n = algebra.dim();
        let generators = (0..n)
            .map(|i| {
                algebra
                    .ad_matrix(&AlgebraVector::basis(n, i))
                    .expect("basis vector conforms")
            })
            .collect();
        GroupModel::Matrix { generators }
    }

    pub fn algebra_dim(&self) -> usize {
        match self {
            GroupModel::So3 => 3,
            GroupModel::Se3 => 6,
            GroupModel::So3xS1 => 4,
            GroupModel::Matrix { generators } => generators.len(),
        }
    }

    pub fn matrix_size(&self) -> usize {
        match self {
            GroupModel::So3 => 3,
            GroupModel::Se3 => 4,
            GroupModel::So3xS1 => 5,
            GroupModel::Matrix { generators } => generators.first().map_or(0, |g| g.nrows()),
        }
    }

    pub fn identity(&self) -> DMatrix<f64> {
        let s = self.matrix_size();
        DMatrix::identity(s, s)
    }

    /// Index range of the rotation block whose orthogonality is monitored.
    pub fn orthogonality_block(&self) -> Option<Range<usize>> {
        match self {
            GroupModel::So3 | GroupModel::Se3 | GroupModel::So3xS1 => Some(0..3),
            GroupModel::Matrix { .. } => None,
        }
    }

    /// `‖RᵀR − I‖_F` of the rotation block, or zero when there is none.
    pub fn orthogonality_drift(&self, g: &DMatrix<f64>) -> f64 {
        match self.orthogonality_block() {
            Some(r) => {
                let len = r.len();
                let block = g.view((r.start, r.start), (len, len));
                (block.transpose() * block - DMatrix::identity(len, len)).norm()
            }
            None => 0.0,
        }
    }

    /// The linear embedding of the algebra into square matrices.
    pub fn embed(&self, x: &AlgebraVector) -> Result<DMatrix<f64>> {
        check_dim("group embedding", self.algebra_dim(), x.dim())?;
        let s = self.matrix_size();
        let mut m = DMatrix::zeros(s, s);
        match self {
            GroupModel::So3 => m.copy_from(&hat(x.as_slice())),
            GroupModel::Se3 => {
                m.view_mut((0, 0), (3, 3))
                    .copy_from(&hat(&x.as_slice()[..3]));
                for r in 0..3 {
                    m[(r, 3)] = x[r + 3];
                }
            }
            GroupModel::So3xS1 => {
                m.view_mut((0, 0), (3, 3))
                    .copy_from(&hat(&x.as_slice()[..3]));
                m[(3, 4)] = -x[3];
                m[(4, 3)] = x[3];
            }
            GroupModel::Matrix { generators } => {
                for (g, c) in generators.iter().zip(x.as_slice()) {
                    m += g * *c;
                }
            }
        }
        Ok(m)
    }

    /// `exp(embed(x))`, closed form for the rotation and rigid-motion models.
    pub fn exp(&self, x: &AlgebraVector) -> Result<DMatrix<f64>> {
        check_dim("group exponential", self.algebra_dim(), x.dim())?;
        let w = x.as_slice();
        Ok(match self {
            GroupModel::So3 => DMatrix::from_iterator(3, 3, so3_exp(&w[..3]).iter().copied()),
            GroupModel::Se3 => {
                let (r, v) = se3_exp_parts(&w[..3]);
                let t = v * nalgebra::Vector3::new(w[3], w[4], w[5]);
                let mut m = DMatrix::identity(4, 4);
                m.view_mut((0, 0), (3, 3)).copy_from(&r);
                m.view_mut((0, 3), (3, 1)).copy_from(&t);
                m
            }
            GroupModel::So3xS1 => {
                let r = so3_exp(&w[..3]);
                let (s, c) = w[3].sin_cos();
                let mut m = DMatrix::zeros(5, 5);
                m.view_mut((0, 0), (3, 3)).copy_from(&r);
                m[(3, 3)] = c;
                m[(3, 4)] = -s;
                m[(4, 3)] = s;
                m[(4, 4)] = c;
                m
            }
            GroupModel::Matrix { .. } => self.embed(x)?.exp(),
        })
    }

    pub fn compose(&self, a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
        a * b
    }

    pub fn check_element(&self, g: &DMatrix<f64>) -> Result<()> {
        let s = self.matrix_size();
        check_dim("group element rows", s, g.nrows())?;
        check_dim("group element columns", s, g.ncols())?;
        if !g.iter().all(|v| v.is_finite()) {
            return Err(Error::Integration {
                time: f64::NAN,
                reason: "group element has non-finite entries".into(),
            });
        }
        let defect = self.orthogonality_drift(g);
        if defect > GROUP_MEMBERSHIP_TOLERANCE {
            return Err(Error::NotInGroup { defect });
        }
        Ok(())
    }
}

/// Rodrigues' formula.
pub(crate) fn so3_exp(w: &[f64]) -> Matrix3<f64> {
    let k = hat(w);
    let theta = (w[0] * w[0] + w[1] * w[1] + w[2] * w[2]).sqrt();
    let k2 = k * k;
    if theta < SMALL_ANGLE {
        Matrix3::identity() + k + k2 * 0.5
    } else {
        Matrix3::identity()
            + k * (theta.sin() / theta)
            + k2 * ((1.0 - theta.cos()) / (theta * theta))
    }
}

/// Rotation and left Jacobian `V` of the SE(3) exponential.
fn se3_exp_parts(w: &[f64]) -> (Matrix3<f64>, Matrix3<f64>) {
    let k = hat(w);
    let theta = (w[0] * w[0] + w[1] * w[1] + w[2] * w[2]).sqrt();
    let k2 = k * k;
    let r = so3_exp(w);
    let v = if theta < SMALL_ANGLE {
        Matrix3::identity() + k * 0.5 + k2 * (1.0 / 6.0)
    } else {
        let t2 = theta * theta;
        Matrix3::identity()
            + k * ((1.0 - theta.cos()) / t2)
            + k2 * ((theta - theta.sin()) / (t2 * theta))
    };
    (r, v)
}

/// One reconstruction step: `g' = exp(h·ξ)·g` for right trivialization,
/// `g' = g·exp(h·ξ)` for left.
pub fn group_step(
    model: &GroupModel,
    g: &DMatrix<f64>,
    x: &AlgebraVector,
    h: f64,
    trivialization: Trivialization,
) -> Result<DMatrix<f64>> {
    if !h.is_finite() || h <= 0.0 {
        return Err(Error::Contract(format!("step must be positive, got {h}")));
    }
    model.check_element(g)?;
    if !x.is_finite() {
        return Err(Error::Integration {
            time: f64::NAN,
            reason: "non-finite algebra velocity in reconstruction".into(),
        });
    }
    let e = model.exp(&x.scale(h))?;
    let next = match trivialization {
        Trivialization::Right => model.compose(&e, g),
        Trivialization::Left => model.compose(g, &e),
    };
    if !next.iter().all(|v| v.is_finite()) {
        return Err(Error::Integration {
            time: f64::NAN,
            reason: "reconstruction produced non-finite group element".into(),
        });
    }
    Ok(next)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn zero_velocity_leaves_element_unchanged() {
        for model in [GroupModel::So3, GroupModel::Se3, GroupModel::So3xS1] {
            let g = model
                .exp(&AlgebraVector::from(vec![0.3; model.algebra_dim()]))
                .unwrap();
            let x = AlgebraVector::zeros(model.algebra_dim());
            let next = group_step(&model, &g, &x, 0.1, Trivialization::Right).unwrap();
            assert_eq!(next, g);
        }
    }

    #[test]
    fn quarter_turn_about_z() {
        let g = GroupModel::So3.identity();
        let x = AlgebraVector::from([0.0, 0.0, FRAC_PI_2]);
        let r = group_step(&GroupModel::So3, &g, &x, 1.0, Trivialization::Right).unwrap();
        let expected =
            DMatrix::from_row_slice(3, 3, &[0.0, -1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0]);
        assert_abs_diff_eq!(r, expected, epsilon = 1e-15);
    }

    #[test]
    fn se3_pure_translation() {
        let model = GroupModel::Se3;
        let g = model
            .exp(&AlgebraVector::from([0.2, -0.1, 0.4, 1.0, 2.0, 3.0]))
            .unwrap();
        let x = AlgebraVector::from([0.0, 0.0, 0.0, 1.0, 0.0, 0.0]);
        let next = group_step(&model, &g, &x, 0.5, Trivialization::Right).unwrap();
        assert_abs_diff_eq!(
            next.view((0, 0), (3, 3)).into_owned(),
            g.view((0, 0), (3, 3)).into_owned(),
            epsilon = 0.0
        );
        assert_abs_diff_eq!(next[(0, 3)] - g[(0, 3)], 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(next[(1, 3)], g[(1, 3)], epsilon = 1e-15);
        assert_abs_diff_eq!(next[(2, 3)], g[(2, 3)], epsilon = 1e-15);
    }

    #[test]
    fn closed_forms_match_matrix_exponential() {
        let xs = [
            vec![0.4, -1.1, 0.7],
            vec![0.4, -1.1, 0.7, 0.3, 2.0, -0.5],
            vec![0.4, -1.1, 0.7, 2.5],
        ];
        for (model, x) in [GroupModel::So3, GroupModel::Se3, GroupModel::So3xS1]
            .into_iter()
            .zip(xs)
        {
            let x = AlgebraVector::from(x);
            let closed = model.exp(&x).unwrap();
            let pade = model.embed(&x).unwrap().exp();
            assert_abs_diff_eq!(closed, pade, epsilon = 1e-13);
        }
    }

    #[test]
    fn small_angle_branch_is_continuous() {
        let tiny = AlgebraVector::from([3e-9, -2e-9, 1e-9, 1.0, 0.0, 0.0]);
        let closed = GroupModel::Se3.exp(&tiny).unwrap();
        let pade = GroupModel::Se3.embed(&tiny).unwrap().exp();
        assert_abs_diff_eq!(closed, pade, epsilon = 1e-15);
    }

    #[test]
    fn rodrigues_output_is_orthogonal() {
        let r = GroupModel::So3
            .exp(&AlgebraVector::from([2.0, -3.0, 0.5]))
            .unwrap();
        assert!(GroupModel::So3.orthogonality_drift(&r) < 1e-12);
    }

    #[test]
    fn left_and_right_steps_differ_by_side() {
        let model = GroupModel::So3;
        let g = model.exp(&AlgebraVector::from([0.0, 1.0, 0.0])).unwrap();
        let x = AlgebraVector::from([0.5, 0.0, 0.0]);
        let e = model.exp(&x.scale(0.2)).unwrap();
        assert_eq!(
            group_step(&model, &g, &x, 0.2, Trivialization::Right).unwrap(),
            &e * &g
        );
        assert_eq!(
            group_step(&model, &g, &x, 0.2, Trivialization::Left).unwrap(),
            &g * &e
        );
    }

    #[test]
    fn rejects_non_finite_and_off_group_inputs() {
        let model = GroupModel::So3;
        let mut g = model.identity();
        let x = AlgebraVector::from([f64::NAN, 0.0, 0.0]);
        assert!(matches!(
            group_step(&model, &g, &x, 0.1, Trivialization::Right),
            Err(Error::Integration { .. })
        ));
        g[(0, 0)] = 2.0;
        let x = AlgebraVector::zeros(3);
        assert!(matches!(
            group_step(&model, &g, &x, 0.1, Trivialization::Right),
            Err(Error::NotInGroup { .. })
        ));
    }
}
