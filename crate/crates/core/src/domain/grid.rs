use serde::{Deserialize, Serialize};

use crate::{Error, Field, Result};

/// Uniform periodic grid on `[0, length)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    n: usize,
    length: f64,
}

impl Grid {
    pub fn new(n: usize, length: f64) -> Result<Self> {
        if n < 8 || n % 2 != 0 {
            return Err(Error::InvalidParameter {
                name: "n",
                reason: format!("grid size must be even and at least 8, got {n}"),
            });
        }
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::InvalidParameter {
                name: "length",
                reason: format!("domain length must be positive, got {length}"),
            });
        }
        Ok(Grid { n, length })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn dx(&self) -> f64 {
        self.length / self.n as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        self.length * i as f64 / self.n as f64
    }

    pub fn nodes(&self) -> Field {
        (0..self.n).map(|i| self.x(i)).collect()
    }

    /// Samples `f` at the grid nodes.
    pub fn sample(&self, f: impl Fn(f64) -> f64) -> Field {
        (0..self.n).map(|i| f(self.x(i))).collect()
    }

    /// Angular wavenumber of Fourier mode `j`.
    pub fn wavenumber(&self, j: usize) -> f64 {
        2.0 * std::f64::consts::PI * j as f64 / self.length
    }

    /// Largest resolved angular wavenumber (the Nyquist mode).
    pub fn nyquist_wavenumber(&self) -> f64 {
        self.wavenumber(self.n / 2)
    }

    pub fn check(&self, f: &Field) -> Result<()> {
        if f.len() != self.n {
            return Err(Error::GridMismatch {
                expected: self.n,
                got: f.len(),
            });
        }
        Ok(())
    }
}
