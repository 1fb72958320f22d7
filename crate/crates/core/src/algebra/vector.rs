use std::fmt;
use std::ops::{Add, Index, Mul, Neg, Sub};

use nalgebra::DVector;

/// Coordinates `ξ = ξⁱ eᵢ` of a Lie algebra element in a fixed ordered basis.
#[derive(Debug, Clone, PartialEq)]
pub struct AlgebraVector(DVector<f64>);

/// Components `μ = μᵢ eⁱ` of an element of the dual algebra.
#[derive(Debug, Clone, PartialEq)]
pub struct AlgebraCovector(DVector<f64>);

macro_rules! coordinate_array {
    ($ty:ident) => {
        impl $ty {
            pub fn new(coords: DVector<f64>) -> Self {
                Self(coords)
            }

            pub fn zeros(dim: usize) -> Self {
                Self(DVector::zeros(dim))
            }

            pub fn from_slice(values: &[f64]) -> Self {
                Self(DVector::from_column_slice(values))
            }

            /// Unit element of the ordered basis (zero-based index).
            pub fn basis(dim: usize, index: usize) -> Self {
                let mut v = DVector::zeros(dim);
                v[index] = 1.0;
                Self(v)
            }

            pub fn dim(&self) -> usize {
                self.0.len()
            }

            pub fn as_slice(&self) -> &[f64] {
                self.0.as_slice()
            }

            pub fn coords(&self) -> &DVector<f64> {
                &self.0
            }

            pub fn into_inner(self) -> DVector<f64> {
                self.0
            }

            pub fn norm(&self) -> f64 {
                self.0.norm()
            }

            pub fn is_finite(&self) -> bool {
                self.0.iter().all(|v| v.is_finite())
            }

            pub fn scale(&self, factor: f64) -> Self {
                Self(&self.0 * factor)
            }
        }

        impl From<DVector<f64>> for $ty {
            fn from(v: DVector<f64>) -> Self {
                Self(v)
            }
        }

        impl From<Vec<f64>> for $ty {
            fn from(v: Vec<f64>) -> Self {
                Self(DVector::from_vec(v))
            }
        }

        impl<const N: usize> From<[f64; N]> for $ty {
            fn from(v: [f64; N]) -> Self {
                Self::from_slice(&v)
            }
        }

        impl Index<usize> for $ty {
            type Output = f64;

            fn index(&self, i: usize) -> &f64 {
                &self.0[i]
            }
        }

        impl Add for &$ty {
            type Output = $ty;

            fn add(self, rhs: &$ty) -> $ty {
                $ty(&self.0 + &rhs.0)
            }
        }

        impl Add for $ty {
            type Output = $ty;

            fn add(self, rhs: $ty) -> $ty {
                $ty(self.0 + rhs.0)
            }
        }

        impl Sub for &$ty {
            type Output = $ty;

            fn sub(self, rhs: &$ty) -> $ty {
                $ty(&self.0 - &rhs.0)
            }
        }

        impl Sub for $ty {
            type Output = $ty;

            fn sub(self, rhs: $ty) -> $ty {
                $ty(self.0 - rhs.0)
            }
        }

        impl Neg for $ty {
            type Output = $ty;

            fn neg(self) -> $ty {
                $ty(-self.0)
            }
        }

        impl Mul<f64> for &$ty {
            type Output = $ty;

            fn mul(self, rhs: f64) -> $ty {
                $ty(&self.0 * rhs)
            }
        }

        impl Mul<f64> for $ty {
            type Output = $ty;

            fn mul(self, rhs: f64) -> $ty {
                $ty(self.0 * rhs)
            }
        }

        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, "(")?;
                for (i, v) in self.0.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{v}")?;
                }
                write!(f, ")")
            }
        }
    };
}

coordinate_array!(AlgebraVector);
coordinate_array!(AlgebraCovector);

impl AlgebraCovector {
    /// Natural pairing `μ(ξ)`.
    pub fn pair(&self, x: &AlgebraVector) -> f64 {
        self.0.dot(&x.0)
    }
}
