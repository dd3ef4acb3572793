//! Dense LU factorization with row equilibration and partial pivoting.
//!
//! The constraint systems mix rows of very different magnitude (covariance
//! differences next to a row of ones), so every row is scaled to unit
//! max-norm before elimination. Row scaling leaves the solution of a system
//! whose right-hand side is zero on every scaled row unchanged, and the
//! determinant is recovered by dividing out the scale factors.

use nalgebra::{DMatrix, DVector};

/// Relative pivot threshold below which a matrix is treated as singular.
pub const PIVOT_TOLERANCE: f64 = 1e-12;

/// Condition number above which a matrix is treated as singular.
pub const MAX_CONDITION: f64 = 1e12;

/// A row, or an eliminated column, was numerically zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmallPivot {
    pub step: usize,
    pub pivot: f64,
}

/// LU factors `P·D·A = L·U` of a square matrix `A`, where `D` is the
/// diagonal row-equilibration and `P` the pivoting permutation.
#[derive(Debug, Clone)]
pub struct LuFactors {
    lu: DMatrix<f64>,
    /// `perm[k]` is the original row that ended up in position `k`.
    perm: Vec<usize>,
    row_scale: Vec<f64>,
    swaps: usize,
    norm1: f64,
}

impl LuFactors {
    /// Factor `a`, failing on a pivot below `PIVOT_TOLERANCE` relative to the
    /// largest equilibrated entry. The condition check is separate; see
    /// [`LuFactors::condition_1`].
    pub fn factor(a: &DMatrix<f64>) -> Result<Self, SmallPivot> {
        assert!(a.is_square(), "LU factorization needs a square matrix");
        let n = a.nrows();
        let mut lu = a.clone();
        let mut row_scale = vec![1.0; n];

        for (i, scale) in row_scale.iter_mut().enumerate() {
            let max = lu.row(i).iter().fold(0.0_f64, |m, v| m.max(v.abs()));
            if max == 0.0 || !max.is_finite() {
                return Err(SmallPivot { step: i, pivot: 0.0 });
            }
            *scale = 1.0 / max;
            lu.row_mut(i).scale_mut(*scale);
        }

        let norm1 = (0..n)
            .map(|j| lu.column(j).iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max);
        let threshold = PIVOT_TOLERANCE * lu.amax();

        let mut perm: Vec<usize> = (0..n).collect();
        let mut swaps = 0;
        for k in 0..n {
            let (offset, pivot_abs) = lu
                .view((k, k), (n - k, 1))
                .iter()
                .map(|v| v.abs())
                .enumerate()
                .fold((0, -1.0), |best, (i, v)| if v > best.1 { (i, v) } else { best });
            if pivot_abs < threshold || !pivot_abs.is_finite() {
                return Err(SmallPivot {
                    step: k,
                    pivot: pivot_abs.max(0.0),
                });
            }
            let p = k + offset;
            if p != k {
                lu.swap_rows(k, p);
                perm.swap(k, p);
                swaps += 1;
            }
            let pivot = lu[(k, k)];
            for i in (k + 1)..n {
                let factor = lu[(i, k)] / pivot;
                lu[(i, k)] = factor;
                if factor != 0.0 {
                    for j in (k + 1)..n {
                        lu[(i, j)] -= factor * lu[(k, j)];
                    }
                }
            }
        }

        Ok(Self {
            lu,
            perm,
            row_scale,
            swaps,
            norm1,
        })
    }

    pub fn dim(&self) -> usize {
        self.lu.nrows()
    }

    /// Solve `A·x = b` for the original (unscaled) matrix.
    pub fn solve(&self, b: &DVector<f64>) -> DVector<f64> {
        let scaled: DVector<f64> =
            DVector::from_iterator(b.len(), b.iter().zip(&self.row_scale).map(|(v, s)| v * s));
        self.solve_scaled(&scaled)
    }

    // Solves (D·A)·x = b.
    fn solve_scaled(&self, b: &DVector<f64>) -> DVector<f64> {
        let n = self.dim();
        let mut x = DVector::from_iterator(n, self.perm.iter().map(|&p| b[p]));
        for i in 0..n {
            let mut acc = x[i];
            for j in 0..i {
                acc -= self.lu[(i, j)] * x[j];
            }
            x[i] = acc;
        }
        for i in (0..n).rev() {
            let mut acc = x[i];
            for j in (i + 1)..n {
                acc -= self.lu[(i, j)] * x[j];
            }
            x[i] = acc / self.lu[(i, i)];
        }
        x
    }

    /// Determinant of the original matrix.
    pub fn determinant(&self) -> f64 {
        let sign = if self.swaps.is_multiple_of(2) { 1.0 } else { -1.0 };
        let diag: f64 = (0..self.dim()).map(|i| self.lu[(i, i)]).product();
        let scale: f64 = self.row_scale.iter().product();
        sign * diag / scale
    }

    /// Exact 1-norm condition number of the equilibrated matrix, from `n`
    /// unit-vector solves.
    pub fn condition_1(&self) -> f64 {
        let n = self.dim();
        let mut inv_norm = 0.0_f64;
        for j in 0..n {
            let col = self.solve_scaled(&DVector::from_fn(n, |i, _| if i == j { 1.0 } else { 0.0 }));
            inv_norm = inv_norm.max(col.iter().map(|v| v.abs()).sum());
        }
        self.norm1 * inv_norm
    }

    /// Pivots of the equilibrated matrix in elimination order.
    pub fn pivots(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.lu[(i, i)]).collect()
    }

    pub fn permutation(&self) -> &[usize] {
        &self.perm
    }

    pub fn row_swaps(&self) -> usize {
        self.swaps
    }
}

/// Determinant of a 3×3 matrix given row-major.
pub fn det3(m: [[f64; 3]; 3]) -> f64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}
