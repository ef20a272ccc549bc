use std::ops::{Add, AddAssign, Deref, DerefMut, Div, Mul, Neg, Sub, SubAssign};

use serde::{Deserialize, Serialize};

/// Real nodal values on a periodic grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, Default)]
#[serde(transparent)]
pub struct Field(Vec<f64>);

impl Field {
    pub fn new(values: Vec<f64>) -> Self {
        Field(values)
    }

    pub fn zeros(n: usize) -> Self {
        Field(vec![0.0; n])
    }

    pub fn constant(n: usize, c: f64) -> Self {
        Field(vec![c; n])
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Field {
        Field(self.0.iter().map(|&v| f(v)).collect())
    }

    pub fn zip_map(&self, other: &Field, f: impl Fn(f64, f64) -> f64) -> Field {
        assert_eq!(self.len(), other.len(), "field length mismatch");
        Field(self.0.iter().zip(&other.0).map(|(&a, &b)| f(a, b)).collect())
    }

    pub fn powi(&self, k: i32) -> Field {
        self.map(|v| v.powi(k))
    }

    pub fn recip(&self) -> Field {
        self.map(f64::recip)
    }

    pub fn sum(&self) -> f64 {
        self.0.iter().sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Euclidean norm of the nodal vector.
    pub fn norm(&self) -> f64 {
        self.0.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn dot(&self, other: &Field) -> f64 {
        self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum()
    }

    /// Cyclic shift: `out[i] = self[i - s]` (indices mod n).
    pub fn shifted(&self, s: isize) -> Field {
        let n = self.len() as isize;
        Field(
            (0..n)
                .map(|i| self.0[((i - s).rem_euclid(n)) as usize])
                .collect(),
        )
    }

    /// `self + a * other`
    pub fn axpy(&self, a: f64, other: &Field) -> Field {
        self.zip_map(other, |x, y| x + a * y)
    }
}

impl Deref for Field {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl DerefMut for Field {
    fn deref_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }
}

impl From<Vec<f64>> for Field {
    fn from(v: Vec<f64>) -> Self {
        Field(v)
    }
}

impl FromIterator<f64> for Field {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        Field(iter.into_iter().collect())
    }
}

macro_rules! binop {
    ($tr:ident, $method:ident, $op:tt) => {
        impl $tr<&Field> for &Field {
            type Output = Field;
            fn $method(self, rhs: &Field) -> Field {
                self.zip_map(rhs, |a, b| a $op b)
            }
        }
        impl $tr<Field> for &Field {
            type Output = Field;
            fn $method(self, rhs: Field) -> Field {
                self $op &rhs
            }
        }
        impl $tr<&Field> for Field {
            type Output = Field;
            fn $method(self, rhs: &Field) -> Field {
                &self $op rhs
            }
        }
        impl $tr<Field> for Field {
            type Output = Field;
            fn $method(self, rhs: Field) -> Field {
                &self $op &rhs
            }
        }
        impl $tr<f64> for &Field {
            type Output = Field;
            fn $method(self, rhs: f64) -> Field {
                self.map(|a| a $op rhs)
            }
        }
        impl $tr<f64> for Field {
            type Output = Field;
            fn $method(self, rhs: f64) -> Field {
                &self $op rhs
            }
        }
        impl $tr<&Field> for f64 {
            type Output = Field;
            fn $method(self, rhs: &Field) -> Field {
                rhs.map(|b| self $op b)
            }
        }
        impl $tr<Field> for f64 {
            type Output = Field;
            fn $method(self, rhs: Field) -> Field {
                self $op &rhs
            }
        }
    };
}

binop!(Add, add, +);
binop!(Sub, sub, -);
binop!(Mul, mul, *);
binop!(Div, div, /);

impl Neg for &Field {
    type Output = Field;
    fn neg(self) -> Field {
        self.map(|a| -a)
    }
}

impl Neg for Field {
    type Output = Field;
    fn neg(self) -> Field {
        -&self
    }
}

impl AddAssign<&Field> for Field {
    fn add_assign(&mut self, rhs: &Field) {
        for (a, b) in self.0.iter_mut().zip(&rhs.0) {
            *a += b;
        }
    }
}

impl SubAssign<&Field> for Field {
    fn sub_assign(&mut self, rhs: &Field) {
        for (a, b) in self.0.iter_mut().zip(&rhs.0) {
            *a -= b;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn arithmetic_is_pointwise() {
        let a = Field::new(vec![1.0, 2.0, 3.0]);
        let b = Field::new(vec![2.0, 2.0, 2.0]);
        assert_eq!((&a * &b).to_vec(), vec![2.0, 4.0, 6.0]);
        assert_eq!((&a - 1.0).to_vec(), vec![0.0, 1.0, 2.0]);
        assert_eq!((1.0 / &b).to_vec(), vec![0.5, 0.5, 0.5]);
        assert_eq!((-&a).to_vec(), vec![-1.0, -2.0, -3.0]);
    }

    #[test]
    fn shift_is_cyclic() {
        let a = Field::new(vec![1.0, 2.0, 3.0, 4.0]);
        assert_eq!(a.shifted(1).to_vec(), vec![4.0, 1.0, 2.0, 3.0]);
        assert_eq!(a.shifted(-1).to_vec(), vec![2.0, 3.0, 4.0, 1.0]);
        assert_eq!(a.shifted(4), a);
    }
}
