//! Central finite differences used by the chart engine to differentiate
//! user-supplied coefficient functions.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FdError {
    #[error("finite-difference step must be positive, got {0}")]
    NonPositiveStep(f64),
    #[error("finite-difference order must be 2 or 4, got {0}")]
    UnsupportedOrder(usize),
}

/// A central-difference scheme: step size and order (2 or 4).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FdScheme {
    h: f64,
    order: usize,
}

impl FdScheme {
    pub fn new(h: f64, order: usize) -> Result<Self, FdError> {
        if h <= 0.0 {
            return Err(FdError::NonPositiveStep(h));
        }
        if order != 2 && order != 4 {
            return Err(FdError::UnsupportedOrder(order));
        }
        Ok(FdScheme { h, order })
    }

    /// Default for coefficient-function derivatives: order 2, h = 1e−6.
    pub fn coefficient_default() -> Self {
        FdScheme { h: 1e-6, order: 2 }
    }

    /// Default for differentiating the group chart map: order 4, h = 1e−3.
    /// The wider stencil keeps noise low when the result is differentiated
    /// again (the engine nests these derivatives).
    pub fn group_default() -> Self {
        FdScheme { h: 1e-3, order: 4 }
    }

    pub fn step(&self) -> f64 {
        self.h
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// d/dt f(t) at t = 0.
    pub fn derivative<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        match self.order {
            2 => (f(self.h) - f(-self.h)) / (2.0 * self.h),
            _ => {
                (-f(2.0 * self.h) + 8.0 * f(self.h) - 8.0 * f(-self.h) + f(-2.0 * self.h))
                    / (12.0 * self.h)
            }
        }
    }

    /// Gradient of a multivariate function at `x`.
    pub fn gradient<F: Fn(&[f64]) -> f64>(&self, f: F, x: &[f64]) -> Vec<f64> {
        (0..x.len())
            .map(|k| {
                self.derivative(|t| {
                    let mut p = x.to_vec();
                    p[k] += t;
                    f(&p)
                })
            })
            .collect()
    }

    /// Jacobian of a vector-valued function at `x`: `jac[r][c] = ∂f_r/∂x_c`.
    pub fn jacobian<F: Fn(&[f64]) -> Vec<f64>>(
        &self,
        f: F,
        x: &[f64],
        rows: usize,
    ) -> Vec<Vec<f64>> {
        let mut jac = vec![vec![0.0; x.len()]; rows];
        for c in 0..x.len() {
            let eval = |t: f64| {
                let mut p = x.to_vec();
                p[c] += t;
                f(&p)
            };
            let col = match self.order {
                2 => {
                    let fp = eval(self.h);
                    let fm = eval(-self.h);
                    (0..rows)
                        .map(|r| (fp[r] - fm[r]) / (2.0 * self.h))
                        .collect::<Vec<_>>()
                }
                _ => {
                    let f2p = eval(2.0 * self.h);
                    let fp = eval(self.h);
                    let fm = eval(-self.h);
                    let f2m = eval(-2.0 * self.h);
                    (0..rows)
                        .map(|r| (-f2p[r] + 8.0 * fp[r] - 8.0 * fm[r] + f2m[r]) / (12.0 * self.h))
                        .collect::<Vec<_>>()
                }
            };
            for r in 0..rows {
                jac[r][c] = col[r];
            }
        }
        jac
    }
}

/// Solve a small dense linear system `a x = b` by Gaussian elimination with
/// partial pivoting. Used for group-sized (dG × dG) systems.
pub fn solve_dense(a: &[Vec<f64>], b: &[f64]) -> Option<Vec<f64>> {
    let n = b.len();
    let mut m: Vec<Vec<f64>> = a.to_vec();
    let mut rhs = b.to_vec();
    for col in 0..n {
        let (pivot_row, pivot) = (col..n)
            .map(|r| (r, m[r][col].abs()))
            .max_by(|a, b| a.1.total_cmp(&b.1))?;
        if pivot < 1e-300 {
            return None;
        }
        m.swap(col, pivot_row);
        rhs.swap(col, pivot_row);
        for r in 0..n {
            if r == col {
                continue;
            }
            let factor = m[r][col] / m[col][col];
            for c in col..n {
                m[r][c] -= factor * m[col][c];
            }
            rhs[r] -= factor * rhs[col];
        }
    }
    Some((0..n).map(|r| rhs[r] / m[r][r]).collect())
}

/// Invert a small dense matrix.
pub fn invert_dense(a: &[Vec<f64>]) -> Option<Vec<Vec<f64>>> {
    let n = a.len();
    let mut cols = Vec::with_capacity(n);
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        cols.push(solve_dense(a, &e)?);
    }
    // cols[j] is the j-th column of the inverse.
    let mut inv = vec![vec![0.0; n]; n];
    for (j, col) in cols.iter().enumerate() {
        for i in 0..n {
            inv[i][j] = col[i];
        }
    }
    Some(inv)
}
