//! Pseudo-spectral operators on a periodic grid.
//!
//! Derivatives act on the trigonometric interpolant. Odd derivatives of the
//! Nyquist mode are set to zero, so the first-derivative matrix is exactly
//! skew-symmetric.

use std::fmt;
use std::sync::{Arc, OnceLock};

use nalgebra::{DMatrix, DVector};
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::{Error, Field, Grid, Result};

/// Spectral toolkit bound to one grid. Cheap to clone and safe to share.
#[derive(Clone)]
pub struct Spectral {
    grid: Grid,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    wavenumbers: Arc<Vec<f64>>,
    diff_matrix: Arc<OnceLock<DMatrix<f64>>>,
}

impl fmt::Debug for Spectral {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Spectral").field("grid", &self.grid).finish()
    }
}

impl Spectral {
    pub fn new(grid: Grid) -> Self {
        let n = grid.n();
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        let wavenumbers = (0..n)
            .map(|j| {
                let signed = if j <= n / 2 { j as f64 } else { j as f64 - n as f64 };
                2.0 * std::f64::consts::PI * signed / grid.length()
            })
            .collect();
        Spectral {
            grid,
            forward,
            inverse,
            wavenumbers: Arc::new(wavenumbers),
            diff_matrix: Arc::new(OnceLock::new()),
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn n(&self) -> usize {
        self.grid.n()
    }

    pub fn dx(&self) -> f64 {
        self.grid.dx()
    }

    /// Spectral derivative of order 1 to 4.
    pub fn diff(&self, f: &Field, order: u32) -> Field {
        assert!((1..=4).contains(&order), "derivative order must be 1..=4");
        let n = self.n();
        assert_eq!(f.len(), n, "field does not live on this grid");
        let mut buf: Vec<Complex64> = f.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.forward.process(&mut buf);
        let nyq = n / 2;
        for (j, c) in buf.iter_mut().enumerate() {
            let k = self.wavenumbers[j];
            if j == nyq && order % 2 == 1 {
                *c = Complex64::new(0.0, 0.0);
                continue;
            }
            let factor = Complex64::new(0.0, k).powu(order);
            *c *= factor;
        }
        self.inverse.process(&mut buf);
        let scale = 1.0 / n as f64;
        buf.iter().map(|c| c.re * scale).collect()
    }

    pub fn dx1(&self, f: &Field) -> Field {
        self.diff(f, 1)
    }

    pub fn dx2(&self, f: &Field) -> Field {
        self.diff(f, 2)
    }

    /// Rectangle rule `dx * sum(f)`.
    pub fn integrate(&self, f: &Field) -> f64 {
        self.dx() * f.sum()
    }

    /// Discrete L2 pairing `dx * sum(f g)`.
    pub fn inner(&self, f: &Field, g: &Field) -> f64 {
        self.dx() * f.dot(g)
    }

    /// Dense matrix of the first derivative (rows act on nodal vectors).
    pub fn derivative_matrix(&self) -> &DMatrix<f64> {
        self.diff_matrix.get_or_init(|| {
            let n = self.n();
            let mut d = DMatrix::zeros(n, n);
            let mut e = Field::zeros(n);
            for j in 0..n {
                e[j] = 1.0;
                let col = self.dx1(&e);
                for i in 0..n {
                    d[(i, j)] = col[i];
                }
                e[j] = 0.0;
            }
            d
        })
    }

    /// Applies `alpha u - (beta u_x)_x`.
    pub fn elliptic_apply(&self, alpha: &Field, beta: &Field, u: &Field) -> Field {
        alpha * u - self.dx1(&(beta * &self.dx1(u)))
    }

    /// Solves `alpha u - (beta u_x)_x = rhs` with a dense LU factorization.
    pub fn solve_elliptic(&self, alpha: &Field, beta: &Field, rhs: &Field) -> Result<Field> {
        let n = self.n();
        if beta.iter().all(|&b| b == 0.0) {
            if let Some(i) = alpha.iter().position(|&a| a == 0.0) {
                return Err(Error::Solver {
                    reason: format!("alpha vanishes at node {i}"),
                    condition: f64::INFINITY,
                });
            }
            return Ok(rhs / alpha);
        }
        let d = self.derivative_matrix();
        let mut db = d.clone();
        for j in 0..n {
            for i in 0..n {
                db[(i, j)] *= beta[i];
            }
        }
        let mut m = -(d * db);
        for i in 0..n {
            m[(i, i)] += alpha[i];
        }
        let lu = m.lu();
        let diag = lu.u().diagonal();
        let (lo, hi) = diag
            .iter()
            .fold((f64::INFINITY, 0.0f64), |(lo, hi), v| (lo.min(v.abs()), hi.max(v.abs())));
        let condition = if lo > 0.0 { hi / lo } else { f64::INFINITY };
        if !condition.is_finite() || condition > 1e14 {
            return Err(Error::Solver {
                reason: "operator is singular or ill-conditioned".into(),
                condition,
            });
        }
        let b = DVector::from_column_slice(rhs);
        let mut x = lu.solve(&b).ok_or(Error::Solver {
            reason: "LU solve failed".into(),
            condition,
        })?;
        let scale = rhs.norm().max(f64::MIN_POSITIVE);
        for _ in 0..3 {
            let u: Field = x.iter().copied().collect();
            let r = rhs - self.elliptic_apply(alpha, beta, &u);
            if r.norm() <= 1e-12 * scale {
                return Ok(u);
            }
            let dx = lu
                .solve(&DVector::from_column_slice(&r))
                .ok_or(Error::Solver {
                    reason: "LU refinement failed".into(),
                    condition,
                })?;
            x += dx;
        }
        let u: Field = x.iter().copied().collect();
        let r = rhs - self.elliptic_apply(alpha, beta, &u);
        if r.norm() > 1e-10 * scale {
            return Err(Error::Solver {
                reason: format!("residual {:e} exceeds tolerance", r.norm() / scale),
                condition,
            });
        }
        Ok(u)
    }
}

/// A linear map on fields over one grid.
pub struct LinearOperator {
    apply: Box<dyn Fn(&Field) -> Field + Send + Sync>,
    pub description: String,
    pub n: usize,
}

impl fmt::Debug for LinearOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "LinearOperator({}, n = {})", self.description, self.n)
    }
}

impl LinearOperator {
    pub fn new(
        n: usize,
        description: impl Into<String>,
        apply: impl Fn(&Field) -> Field + Send + Sync + 'static,
    ) -> Self {
        LinearOperator {
            apply: Box::new(apply),
            description: description.into(),
            n,
        }
    }

    pub fn zero(n: usize) -> Self {
        Self::new(n, "0", move |_| Field::zeros(n))
    }

    /// Spectral derivative of the given order.
    pub fn derivative(ops: &Spectral, order: u32) -> Self {
        let ops = ops.clone();
        Self::new(ops.n(), format!("d^{order}/dx^{order}"), move |f| {
            ops.diff(f, order)
        })
    }

    pub fn apply(&self, f: &Field) -> Field {
        (self.apply)(f)
    }

    /// `(1 + eps^2 D) f`
    pub fn near_identity(&self, f: &Field, eps: f64) -> Field {
        f.axpy(eps * eps, &self.apply(f))
    }
}

/// Truncated inverse of `1 + eps^2 D`: returns `(1 - eps^2 D) f`.
pub fn near_identity_inverse(d: &LinearOperator, f: &Field, eps: f64) -> Field {
    f.axpy(-eps * eps, &d.apply(f))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn ops(n: usize, l: f64) -> Spectral {
        Spectral::new(Grid::new(n, l).unwrap())
    }

    fn band_limited(ops: &Spectral, seed: u64) -> Field {
        crate::verify::random_field(ops.grid(), seed, 0.0, 1.0, ops.n() / 6)
    }

    #[test]
    fn single_mode_derivative() {
        let s = ops(64, 3.0);
        let k = 2.0 * PI / 3.0;
        let f = s.grid().sample(|x| (k * x).sin());
        let d = s.dx1(&f);
        let exact = s.grid().sample(|x| k * (k * x).cos());
        assert!((&d - &exact).max_abs() <= 1e-12 * exact.max_abs());
    }

    #[test]
    fn constants_are_annihilated() {
        let s = ops(32, 5.0);
        let f = Field::constant(32, 3.7);
        for order in 1..=4 {
            assert!(s.diff(&f, order).max_abs() < 1e-12);
        }
    }

    #[test]
    fn second_derivative_is_composition() {
        let s = ops(128, 20.0);
        let f = band_limited(&s, 7);
        let a = s.diff(&f, 2);
        let b = s.dx1(&s.dx1(&f));
        assert!((&a - &b).max_abs() <= 1e-10 * a.max_abs().max(1.0));
    }

    #[test]
    fn nyquist_mode_has_zero_odd_derivative() {
        let s = ops(16, 2.0 * PI);
        let f: Field = (0..16).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
        assert!(s.dx1(&f).max_abs() < 1e-12);
        let d2 = s.diff(&f, 2);
        assert!((&d2 + &(&f * 64.0)).max_abs() < 1e-10);
    }

    #[test]
    fn integrals() {
        let s = ops(64, 10.0);
        let c = s.grid().sample(|x| (2.0 * PI * x / 10.0).cos());
        assert!(s.integrate(&c).abs() < 1e-12);
        assert!((s.integrate(&Field::constant(64, 1.0)) - 10.0).abs() < 1e-12);
        let s2 = ops(64, 2.0 * PI);
        let sq = s2.grid().sample(|x| x.sin().powi(2));
        assert!((s2.integrate(&sq) - PI).abs() < 1e-12);
    }

    #[test]
    fn near_identity_single_mode() {
        let s = ops(64, 2.0 * PI);
        let d = LinearOperator::derivative(&s, 2);
        let k = 3.0;
        let f = s.grid().sample(|x| (k * x).cos());
        let eps = 0.1;
        let out = near_identity_inverse(&d, &f, eps);
        let exact = &f * (1.0 + eps * eps * k * k);
        assert!((&out - &exact).max_abs() < 1e-12);
        let zero = LinearOperator::zero(64);
        assert_eq!(near_identity_inverse(&zero, &f, eps), f);
    }

    #[test]
    fn near_identity_round_trip_is_fourth_order() {
        let s = ops(128, 20.0);
        let d = LinearOperator::derivative(&s, 2);
        let f = band_limited(&s, 3);
        let err = |eps: f64| (&near_identity_inverse(&d, &d.near_identity(&f, eps), eps) - &f).norm();
        let ratio = err(0.1) / err(0.05);
        assert!((ratio - 16.0).abs() < 0.5, "ratio {ratio}");
    }

    #[test]
    fn elliptic_constant_coefficients() {
        let s = ops(64, 2.0 * PI);
        let (k, c) = (3.0, 0.4);
        let u = s.grid().sample(|x| (k * x).sin());
        let rhs = &u * (1.0 + c * k * k);
        let sol = s
            .solve_elliptic(&Field::constant(64, 1.0), &Field::constant(64, c), &rhs)
            .unwrap();
        assert!((&sol - &u).max_abs() < 1e-10);
    }

    #[test]
    fn elliptic_without_dispersion_is_pointwise() {
        let s = ops(16, 1.0);
        let alpha = s.grid().sample(|x| 2.0 + x);
        let rhs = s.grid().sample(|x| x * x);
        let sol = s.solve_elliptic(&alpha, &Field::zeros(16), &rhs).unwrap();
        assert_eq!(sol, &rhs / &alpha);
    }

    #[test]
    fn elliptic_apply_solve_round_trip() {
        let s = ops(96, 15.0);
        let alpha = band_limited(&s, 11).map(|v| 1.5 + 0.4 * v.tanh());
        let beta = band_limited(&s, 12).map(|v| 0.3 + 0.1 * v.tanh());
        let u = band_limited(&s, 13);
        let rhs = s.elliptic_apply(&alpha, &beta, &u);
        let sol = s.solve_elliptic(&alpha, &beta, &rhs).unwrap();
        assert!((&sol - &u).norm() <= 1e-8 * u.norm());
    }

    #[test]
    fn singular_operator_is_reported() {
        let s = ops(16, 1.0);
        let err = s
            .solve_elliptic(&Field::zeros(16), &Field::constant(16, 1.0), &Field::zeros(16))
            .unwrap_err();
        assert!(matches!(err, Error::Solver { .. }));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(64))]

            #[test]
            fn derivative_is_linear(sa in 0u64..1000, sb in 0u64..1000, a in -3.0f64..3.0, b in -3.0f64..3.0) {
                let s = ops(48, 7.0);
                let (f, g) = (band_limited(&s, sa), band_limited(&s, sb));
                let lhs = s.dx1(&(&f * a + &g * b));
                let rhs = s.dx1(&f) * a + s.dx1(&g) * b;
                prop_assert!((&lhs - &rhs).max_abs() <= 1e-11 * (1.0 + lhs.max_abs()));
            }

            #[test]
            fn integration_by_parts(sa in 0u64..1000, sb in 0u64..1000, n in prop::sample::select(vec![8usize, 16, 34, 64])) {
                let s = ops(n, 9.0);
                let f = crate::verify::random_field(s.grid(), sa, 0.3, 1.0, n / 2 - 1);
                let g = crate::verify::random_field(s.grid(), sb, -0.2, 1.0, n / 2 - 1);
                let lhs = s.inner(&s.dx1(&f), &g);
                let rhs = -s.inner(&f, &s.dx1(&g));
                prop_assert!((lhs - rhs).abs() <= 1e-10 * (1.0 + lhs.abs()));
            }

            #[test]
            fn derivative_annihilates_constants(c in -10.0f64..10.0, half in 4usize..35) {
                let n = 2 * half;
                let s = ops(n, 3.0);
                prop_assert!(s.dx1(&Field::constant(n, c)).max_abs() <= 1e-12 * (1.0 + c.abs()));
                prop_assert!(s.integrate(&s.dx1(&band_limited(&s, n as u64))).abs() <= 1e-11);
            }
        }
    }
}
