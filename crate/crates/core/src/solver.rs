//! Optimal budget shares under the minimum-variance (MV) and maximum
//! risk-adjusted-return (MRAR) criteria.
//!
//! Both criteria reduce to a square linear system whose first `n - 1` rows
//! are first-order conditions built from the covariance (and, for MRAR, the
//! means) and whose last row is the budget constraint `Σ w = 1`:
//!
//! ```text
//! MV:   B[i][j] = (σ[i+1][j] + σ[j][i+1]) - (σ[i][j] + σ[j][i])
//! MRAR: G[i][j] = r̄[i]·(σ[i+1][j] + σ[j][i+1]) - r̄[i+1]·(σ[i][j] + σ[j][i])
//!
//!       E = [B; 1ᵀ],  K = [G; 1ᵀ],  rhs = (0, …, 0, 1)
//! ```
//!
//! `B·w = 0` says every entry of `Ω·w` is equal, `G·w = 0` says `(Ω·w)[i] / r̄[i]`
//! is the same for every asset. The general path solves the stacked system by
//! pivoted elimination; [`cramer_solve_4`] and the `closed_form_*` functions
//! are independent routes used to cross-check it.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::linalg::{det3, LuFactors, MAX_CONDITION, PIVOT_TOLERANCE};
use crate::moments::MomentEstimate;

/// Budget identity tolerance for solver output.
pub const BUDGET_TOLERANCE: f64 = 1e-10;

/// Portfolio variances this far below zero are rounding and clamp to zero.
pub const VARIANCE_CLAMP: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    /// Minimum variance.
    Mv,
    /// Maximum risk-adjusted return.
    Mrar,
}

impl Method {
    pub const ALL: [Method; 2] = [Method::Mv, Method::Mrar];

    pub fn label(self) -> &'static str {
        match self {
            Method::Mv => "MV",
            Method::Mrar => "MRAR",
        }
    }

    /// Names of the first-order block and the stacked system.
    pub fn matrix_names(self) -> (&'static str, &'static str) {
        match self {
            Method::Mv => ("B", "E"),
            Method::Mrar => ("G", "K"),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolveError {
    #[error("at least 2 assets are needed, got {n}")]
    TooFewAssets { n: usize },
    #[error("expected a {expected}-asset system, got {found}")]
    WrongDimension { expected: usize, found: usize },
    #[error("{}", describe_singular(*.method, *.pivot, *.condition_estimate))]
    SingularSystem {
        method: Option<Method>,
        pivot: Option<f64>,
        condition_estimate: Option<f64>,
    },
    #[error("normalizing sum {value:e} is numerically zero")]
    DegenerateNormalization { value: f64 },
    #[error("{weights} weights for {assets} assets")]
    DimensionMismatch { weights: usize, assets: usize },
    #[error("weights sum to {sum}, not 1")]
    BudgetViolation { sum: f64 },
    #[error("portfolio variance {variance:e} is negative; covariance is not positive semi-definite")]
    IndefiniteCovariance { variance: f64 },
    #[error("malformed constraint system: {0}")]
    InvalidSystem(&'static str),
}

fn describe_singular(method: Option<Method>, pivot: Option<f64>, cond: Option<f64>) -> String {
    let name = match method {
        Some(m) => format!("{m} system |{}| = 0", m.matrix_names().1),
        None => "system".to_owned(),
    };
    match (pivot, cond) {
        (_, Some(c)) => format!("singular {name}: condition estimate {c:e} exceeds {MAX_CONDITION:e}"),
        (Some(p), None) => format!("singular {name}: pivot {p:e} below {PIVOT_TOLERANCE:e} of matrix scale"),
        (None, None) => format!("singular {name}"),
    }
}

/// First-order block stacked over the budget row, with right-hand side
/// `(0, …, 0, 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintSystem {
    method: Method,
    matrix: DMatrix<f64>,
    rhs: DVector<f64>,
}

impl ConstraintSystem {
    pub fn new(method: Method, matrix: DMatrix<f64>) -> Result<Self, SolveError> {
        let n = matrix.nrows();
        if !matrix.is_square() {
            return Err(SolveError::InvalidSystem("matrix is not square"));
        }
        if n < 2 {
            return Err(SolveError::TooFewAssets { n });
        }
        if matrix.row(n - 1).iter().any(|&v| v != 1.0) {
            return Err(SolveError::InvalidSystem("last row must be all ones"));
        }
        let rhs = DVector::from_fn(n, |i, _| if i == n - 1 { 1.0 } else { 0.0 });
        Ok(Self { method, matrix, rhs })
    }

    pub fn method(&self) -> Method {
        self.method
    }

    /// The full `n × n` matrix (E or K).
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn rhs(&self) -> &DVector<f64> {
        &self.rhs
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// The `(n-1) × n` first-order block (B or G).
    pub fn block(&self) -> DMatrix<f64> {
        self.matrix.rows(0, self.dim() - 1).into_owned()
    }
}

fn stack_with_budget_row(method: Method, n: usize, entry: impl Fn(usize, usize) -> f64) -> ConstraintSystem {
    let matrix = DMatrix::from_fn(n, n, |i, j| if i == n - 1 { 1.0 } else { entry(i, j) });
    ConstraintSystem::new(method, matrix).expect("stacked system is well-formed by construction")
}

pub fn build_mv_system(moments: &MomentEstimate) -> Result<ConstraintSystem, SolveError> {
    let n = moments.num_assets();
    if n < 2 {
        return Err(SolveError::TooFewAssets { n });
    }
    let s = moments.covariance();
    Ok(stack_with_budget_row(Method::Mv, n, |i, j| {
        (s[(i + 1, j)] + s[(j, i + 1)]) - (s[(i, j)] + s[(j, i)])
    }))
}

pub fn build_mrar_system(moments: &MomentEstimate) -> Result<ConstraintSystem, SolveError> {
    let n = moments.num_assets();
    if n < 2 {
        return Err(SolveError::TooFewAssets { n });
    }
    let s = moments.covariance();
    let r = moments.means();
    Ok(stack_with_budget_row(Method::Mrar, n, |i, j| {
        r[i] * (s[(i + 1, j)] + s[(j, i + 1)]) - r[i + 1] * (s[(i, j)] + s[(j, i)])
    }))
}

pub fn build_system(moments: &MomentEstimate, method: Method) -> Result<ConstraintSystem, SolveError> {
    match method {
        Method::Mv => build_mv_system(moments),
        Method::Mrar => build_mrar_system(moments),
    }
}

/// Budget shares summing to one. Negative entries are short positions.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector(DVector<f64>);

impl WeightVector {
    pub fn new(weights: DVector<f64>) -> Result<Self, SolveError> {
        Self::with_tolerance(weights, BUDGET_TOLERANCE)
    }

    /// Accept weights whose sum is within `tolerance` of one, e.g. published
    /// figures rounded to a fixed number of decimals.
    pub fn with_tolerance(weights: DVector<f64>, tolerance: f64) -> Result<Self, SolveError> {
        let sum = weights.sum();
        if !sum.is_finite() || (sum - 1.0).abs() > tolerance {
            return Err(SolveError::BudgetViolation { sum });
        }
        Ok(Self(weights))
    }

    pub fn as_vector(&self) -> &DVector<f64> {
        &self.0
    }

    pub fn as_slice(&self) -> &[f64] {
        self.0.as_slice()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn sum(&self) -> f64 {
        self.0.sum()
    }
}

/// Numbers produced while solving, for diagnostics and trace output.
#[derive(Debug, Clone, PartialEq)]
pub struct SolveDiagnostics {
    /// 1-norm condition number of the row-equilibrated system.
    pub condition_estimate: f64,
    /// Determinant of the unscaled system (|E| or |K|).
    pub determinant: f64,
    /// Pivots of the equilibrated matrix in elimination order.
    pub pivots: Vec<f64>,
    /// Original row index placed at each elimination step.
    pub row_order: Vec<usize>,
}

pub fn solve_system(system: &ConstraintSystem) -> Result<WeightVector, SolveError> {
    solve_system_with_diagnostics(system).map(|(w, _)| w)
}

/// Solve by partially pivoted elimination after row equilibration.
pub fn solve_system_with_diagnostics(
    system: &ConstraintSystem,
) -> Result<(WeightVector, SolveDiagnostics), SolveError> {
    let method = Some(system.method);
    let lu = LuFactors::factor(&system.matrix).map_err(|p| SolveError::SingularSystem {
        method,
        pivot: Some(p.pivot),
        condition_estimate: None,
    })?;
    let condition = lu.condition_1();
    if !(condition <= MAX_CONDITION) {
        return Err(SolveError::SingularSystem {
            method,
            pivot: None,
            condition_estimate: Some(condition),
        });
    }
    let x = lu.solve(&system.rhs);
    if x.iter().any(|v| !v.is_finite()) {
        return Err(SolveError::SingularSystem {
            method,
            pivot: None,
            condition_estimate: Some(condition),
        });
    }
    let diagnostics = SolveDiagnostics {
        condition_estimate: condition,
        determinant: lu.determinant(),
        pivots: lu.pivots(),
        row_order: lu.permutation().to_vec(),
    };
    Ok((WeightVector::new(x)?, diagnostics))
}

/// Cofactors of the budget row and the determinant of a 4-asset system.
///
/// The numerator of `w[j]` is the signed minor `(-1)^(4+j)·|M[4][j]|`, where
/// `M[4][j]` drops the budget row and column `j` (1-based). Expanding the
/// determinant along the all-ones row makes the determinant the plain sum of
/// those numerators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CramerTerms {
    pub numerators: [f64; 4],
    pub determinant: f64,
}

pub fn cramer_terms_4(system: &ConstraintSystem) -> Result<CramerTerms, SolveError> {
    if system.dim() != 4 {
        return Err(SolveError::WrongDimension {
            expected: 4,
            found: system.dim(),
        });
    }
    let a = &system.matrix;
    let mut numerators = [0.0; 4];
    for (j, numerator) in numerators.iter_mut().enumerate() {
        let mut minor = [[0.0; 3]; 3];
        for (r, row) in minor.iter_mut().enumerate() {
            let mut cols = (0..4).filter(|&c| c != j);
            for cell in row.iter_mut() {
                *cell = a[(r, cols.next().unwrap())];
            }
        }
        // (-1)^(4 + (j + 1))
        let sign = if j % 2 == 0 { -1.0 } else { 1.0 };
        *numerator = sign * det3(minor);
    }
    let determinant = (0..4).map(|j| a[(3, j)] * numerators[j]).sum();
    Ok(CramerTerms {
        numerators,
        determinant,
    })
}

/// Cramer's rule for exactly four assets.
pub fn cramer_solve_4(system: &ConstraintSystem) -> Result<WeightVector, SolveError> {
    let terms = cramer_terms_4(system)?;
    let hadamard: f64 = system.matrix.row_iter().map(|r| r.norm()).product();
    if !(terms.determinant.abs() > PIVOT_TOLERANCE * hadamard) {
        return Err(SolveError::SingularSystem {
            method: Some(system.method),
            pivot: Some(terms.determinant.abs() / hadamard),
            condition_estimate: None,
        });
    }
    let w = DVector::from_iterator(4, terms.numerators.iter().map(|n| n / terms.determinant));
    WeightVector::new(w)
}

// Solve Ω·x = b with nalgebra's LU, rejecting pivots below the usual
// relative threshold.
fn covariance_solve(
    moments: &MomentEstimate,
    b: &DVector<f64>,
    method: Method,
) -> Result<DVector<f64>, SolveError> {
    let lu = moments.covariance().clone().lu();
    let u = lu.u();
    let diag = u.diagonal();
    let largest = diag.amax();
    let smallest = diag.iter().fold(f64::INFINITY, |m, v| m.min(v.abs()));
    let singular = SolveError::SingularSystem {
        method: Some(method),
        pivot: Some(smallest),
        condition_estimate: None,
    };
    if !(smallest > PIVOT_TOLERANCE * largest) {
        return Err(singular);
    }
    lu.solve(b)
        .filter(|x| x.iter().all(|v| v.is_finite()))
        .ok_or(singular)
}

fn normalize(x: DVector<f64>) -> Result<WeightVector, SolveError> {
    let total = x.sum();
    let scale: f64 = x.iter().map(|v| v.abs()).sum();
    if !(total.abs() > PIVOT_TOLERANCE * scale) {
        return Err(SolveError::DegenerateNormalization { value: total });
    }
    WeightVector::new(x / total)
}

/// Global minimum-variance weights `Ω⁻¹·1 / (1ᵀ·Ω⁻¹·1)`.
pub fn closed_form_mv(moments: &MomentEstimate) -> Result<WeightVector, SolveError> {
    let n = moments.num_assets();
    if n < 2 {
        return Err(SolveError::TooFewAssets { n });
    }
    normalize(covariance_solve(
        moments,
        &DVector::from_element(n, 1.0),
        Method::Mv,
    )?)
}

/// Maximum risk-adjusted-return weights `Ω⁻¹·r̄ / (1ᵀ·Ω⁻¹·r̄)`.
pub fn closed_form_mrar(moments: &MomentEstimate) -> Result<WeightVector, SolveError> {
    let n = moments.num_assets();
    if n < 2 {
        return Err(SolveError::TooFewAssets { n });
    }
    normalize(covariance_solve(moments, moments.means(), Method::Mrar)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolutionWarning {
    /// `1ᵀ·Ω⁻¹·r̄ < 0`: the stationary point minimizes the risk-adjusted
    /// return instead of maximizing it. Detected through a negative
    /// portfolio mean, which has the same sign when `Ω` is positive definite.
    RarMinimized,
}

impl SolutionWarning {
    pub fn message(self) -> &'static str {
        match self {
            SolutionWarning::RarMinimized => {
                "stationary point minimizes the risk-adjusted return (negative normalization)"
            }
        }
    }
}

/// Weights plus portfolio mean `F(w)`, variance `V(w)` and their ratio.
#[derive(Debug, Clone, PartialEq)]
pub struct PortfolioSolution {
    pub method: Method,
    pub weights: WeightVector,
    pub mean: f64,
    pub variance: f64,
    pub std_dev: f64,
    /// `mean / std_dev`; `None` for a zero-variance portfolio.
    pub rar: Option<f64>,
    /// Condition estimate of the solved system, when one was solved.
    pub condition_estimate: Option<f64>,
    pub warning: Option<SolutionWarning>,
}

pub fn evaluate_portfolio(
    weights: &WeightVector,
    moments: &MomentEstimate,
    method: Method,
) -> Result<PortfolioSolution, SolveError> {
    if weights.len() != moments.num_assets() {
        return Err(SolveError::DimensionMismatch {
            weights: weights.len(),
            assets: moments.num_assets(),
        });
    }
    let w = weights.as_vector();
    let mean = moments.means().dot(w);
    let mut variance = w.dot(&(moments.covariance() * w));
    if variance < 0.0 {
        if variance < -VARIANCE_CLAMP {
            return Err(SolveError::IndefiniteCovariance { variance });
        }
        variance = 0.0;
    }
    let std_dev = variance.sqrt();
    Ok(PortfolioSolution {
        method,
        weights: weights.clone(),
        mean,
        variance,
        std_dev,
        rar: (std_dev > 0.0).then(|| mean / std_dev),
        condition_estimate: None,
        warning: None,
    })
}

/// Build, solve and evaluate one criterion.
pub fn optimize(moments: &MomentEstimate, method: Method) -> Result<PortfolioSolution, SolveError> {
    let system = build_system(moments, method)?;
    let (weights, diagnostics) = solve_system_with_diagnostics(&system)?;
    let mut solution = evaluate_portfolio(&weights, moments, method)?;
    solution.condition_estimate = Some(diagnostics.condition_estimate);
    if method == Method::Mrar && solution.mean < 0.0 {
        solution.warning = Some(SolutionWarning::RarMinimized);
    }
    Ok(solution)
}

/// Intermediate quantities of one solve, for step-by-step output.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemTrace {
    pub method: Method,
    pub asset_names: Vec<String>,
    pub means: DVector<f64>,
    pub covariance: DMatrix<f64>,
    pub system: ConstraintSystem,
    /// Present when the elimination succeeded.
    pub diagnostics: Option<SolveDiagnostics>,
    /// Signed-minor numerators and determinant for four assets.
    pub cramer: Option<CramerTerms>,
    pub failure: Option<String>,
}

/// Collect the matrices and determinants behind [`optimize`]. Only an
/// unbuildable system is an error; solve failures are recorded in the trace.
pub fn trace_system(moments: &MomentEstimate, method: Method) -> Result<SystemTrace, SolveError> {
    let system = build_system(moments, method)?;
    let (diagnostics, failure) = match solve_system_with_diagnostics(&system) {
        Ok((_, d)) => (Some(d), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let cramer = cramer_terms_4(&system).ok();
    Ok(SystemTrace {
        method,
        asset_names: moments.asset_names().to_vec(),
        means: moments.means().clone(),
        covariance: moments.covariance().clone(),
        system,
        diagnostics,
        cramer,
        failure,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn moments(means: &[f64], cov: &[f64]) -> MomentEstimate {
        let n = means.len();
        MomentEstimate::unnamed(
            DVector::from_column_slice(means),
            DMatrix::from_row_slice(n, n, cov),
        )
        .unwrap()
    }

    fn assert_weights(w: &WeightVector, expected: &[f64], tol: f64) {
        for (a, b) in w.as_slice().iter().zip(expected) {
            assert!((a - b).abs() <= tol, "{:?} vs {expected:?}", w.as_slice());
        }
    }

    #[test]
    fn mv_system_identity() {
        let s = build_mv_system(&moments(&[0.0, 0.0], &[1.0, 0.0, 0.0, 1.0])).unwrap();
        assert_eq!(s.matrix(), &DMatrix::from_row_slice(2, 2, &[-2.0, 2.0, 1.0, 1.0]));
        assert_eq!(s.rhs().as_slice(), [0.0, 1.0]);
        assert_eq!(s.method(), Method::Mv);
    }

    #[test]
    fn mv_system_scaled_identity() {
        let v = 0.3;
        let m = moments(&[0.0; 3], &[v, 0.0, 0.0, 0.0, v, 0.0, 0.0, 0.0, v]);
        let b = build_mv_system(&m).unwrap().block();
        assert_eq!(
            b.row(0).iter().copied().collect::<Vec<_>>(),
            [-2.0 * v, 2.0 * v, 0.0]
        );
        assert_eq!(
            b.row(1).iter().copied().collect::<Vec<_>>(),
            [0.0, -2.0 * v, 2.0 * v]
        );
    }

    #[test]
    fn mrar_system_reduces_to_mv_for_unit_means() {
        let s = build_mrar_system(&moments(&[1.0, 1.0], &[1.0, 0.0, 0.0, 1.0])).unwrap();
        assert_eq!(s.block().row(0).iter().copied().collect::<Vec<_>>(), [-2.0, 2.0]);
    }

    #[test]
    fn zero_means_make_mrar_singular() {
        let s = build_mrar_system(&moments(&[0.0, 0.0], &[1.0, 0.0, 0.0, 1.0])).unwrap();
        assert!(s.block().iter().all(|&v| v == 0.0));
        assert!(matches!(solve_system(&s), Err(SolveError::SingularSystem { .. })));
    }

    #[test]
    fn too_few_assets() {
        let m = moments(&[0.1], &[1.0]);
        assert_eq!(build_mv_system(&m), Err(SolveError::TooFewAssets { n: 1 }));
        assert_eq!(build_mrar_system(&m), Err(SolveError::TooFewAssets { n: 1 }));
    }

    #[test]
    fn equal_weights_under_scaled_identity() {
        for n in 2..=9 {
            let mut cov = vec![0.0; n * n];
            for i in 0..n {
                cov[i * n + i] = 0.04;
            }
            let w = solve_system(&build_mv_system(&moments(&vec![0.01; n], &cov)).unwrap()).unwrap();
            assert_weights(&w, &vec![1.0 / n as f64; n], 1e-14);
        }
    }

    #[test]
    fn two_asset_diagonal_mv() {
        let m = moments(&[0.0, 0.0], &[1.0, 0.0, 0.0, 3.0]);
        assert_weights(
            &solve_system(&build_mv_system(&m).unwrap()).unwrap(),
            &[0.75, 0.25],
            1e-15,
        );
        assert_weights(&closed_form_mv(&m).unwrap(), &[0.75, 0.25], 1e-15);
    }

    #[test]
    fn mrar_identity_covariance() {
        let m = moments(
            &[0.02, 0.01, 0.01],
            &[1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0],
        );
        let expected = [0.5, 0.25, 0.25];
        assert_weights(
            &solve_system(&build_mrar_system(&m).unwrap()).unwrap(),
            &expected,
            1e-14,
        );
        assert_weights(&closed_form_mrar(&m).unwrap(), &expected, 1e-15);
    }

    #[test]
    fn duplicated_asset_is_singular() {
        let m = moments(
            &[0.01, 0.01, 0.02],
            &[0.04, 0.04, 0.01, 0.04, 0.04, 0.01, 0.01, 0.01, 0.09],
        );
        for method in Method::ALL {
            let err = optimize(&m, method).unwrap_err();
            assert!(matches!(err, SolveError::SingularSystem { .. }), "{err}");
        }
        // non-adjacent duplicate
        let m = moments(
            &[0.01, 0.02, 0.01],
            &[0.04, 0.01, 0.04, 0.01, 0.09, 0.01, 0.04, 0.01, 0.04],
        );
        assert!(matches!(
            optimize(&m, Method::Mv),
            Err(SolveError::SingularSystem { .. })
        ));
        assert!(matches!(
            closed_form_mv(&m),
            Err(SolveError::SingularSystem { .. })
        ));
    }

    #[test]
    fn cramer_identity() {
        let mut cov = vec![0.0; 16];
        for i in 0..4 {
            cov[i * 4 + i] = 1.0;
        }
        let s = build_mv_system(&moments(&[0.1; 4], &cov)).unwrap();
        let terms = cramer_terms_4(&s).unwrap();
        assert_eq!(terms.determinant, -32.0);
        assert_weights(&cramer_solve_4(&s).unwrap(), &[0.25; 4], 0.0);
    }

    #[test]
    fn cramer_rejects_other_sizes() {
        let s = build_mv_system(&moments(&[0.0, 0.0], &[1.0, 0.0, 0.0, 3.0])).unwrap();
        assert_eq!(
            cramer_solve_4(&s),
            Err(SolveError::WrongDimension {
                expected: 4,
                found: 2
            })
        );
    }

    #[test]
    fn cramer_singular() {
        let m = moments(
            &[0.01, 0.01, 0.02, 0.03],
            &[
                0.04, 0.04, 0.01, 0.0, //
                0.04, 0.04, 0.01, 0.0, //
                0.01, 0.01, 0.09, 0.0, //
                0.0, 0.0, 0.0, 0.01,
            ],
        );
        let s = build_mv_system(&m).unwrap();
        assert!(matches!(
            cramer_solve_4(&s),
            Err(SolveError::SingularSystem { .. })
        ));
    }

    #[test]
    fn zero_means_degenerate_normalization() {
        let m = moments(&[0.0, 0.0], &[1.0, 0.2, 0.2, 2.0]);
        assert!(matches!(
            closed_form_mrar(&m),
            Err(SolveError::DegenerateNormalization { .. })
        ));
    }

    #[test]
    fn evaluate_unit_vector() {
        let m = moments(&[0.03, 0.01], &[0.04, 0.01, 0.01, 0.09]);
        let w = WeightVector::new(DVector::from_vec(vec![1.0, 0.0])).unwrap();
        let p = evaluate_portfolio(&w, &m, Method::Mv).unwrap();
        assert_eq!(p.mean, 0.03);
        assert_eq!(p.variance, 0.04);
        assert_eq!(p.std_dev, 0.2);
        assert!((p.rar.unwrap() * p.std_dev - p.mean).abs() < 1e-15);
        assert_eq!(p.condition_estimate, None);

        let short = WeightVector::new(DVector::from_vec(vec![1.0, 0.0, 0.0])).unwrap();
        assert!(matches!(
            evaluate_portfolio(&short, &m, Method::Mv),
            Err(SolveError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn zero_variance_portfolio_has_no_rar() {
        let m = moments(&[0.03, 0.01], &[0.0, 0.0, 0.0, 0.0]);
        let w = WeightVector::new(DVector::from_vec(vec![0.5, 0.5])).unwrap();
        let p = evaluate_portfolio(&w, &m, Method::Mrar).unwrap();
        assert_eq!(p.variance, 0.0);
        assert_eq!(p.rar, None);
    }

    #[test]
    fn indefinite_covariance_rejected() {
        let m = moments(&[0.03, 0.01], &[1.0, 2.0, 2.0, 1.0]);
        let w = WeightVector::new(DVector::from_vec(vec![0.5, 0.5])).unwrap();
        assert!(evaluate_portfolio(&w, &m, Method::Mv).is_ok());
        let w = WeightVector::new(DVector::from_vec(vec![2.0, -1.0])).unwrap();
        assert!(matches!(
            evaluate_portfolio(&w, &m, Method::Mv),
            Err(SolveError::IndefiniteCovariance { .. })
        ));
    }

    #[test]
    fn budget_violation() {
        assert!(matches!(
            WeightVector::new(DVector::from_vec(vec![0.5, 0.6])),
            Err(SolveError::BudgetViolation { .. })
        ));
        assert!(WeightVector::with_tolerance(DVector::from_vec(vec![0.5, 0.50000001]), 2e-8).is_ok());
    }

    #[test]
    fn negative_normalization_warns() {
        // Both means negative: 1ᵀΩ⁻¹r̄ < 0.
        let m = moments(&[-0.02, -0.01], &[0.04, 0.0, 0.0, 0.09]);
        let p = optimize(&m, Method::Mrar).unwrap();
        assert_eq!(p.warning, Some(SolutionWarning::RarMinimized));
        assert!(p.mean < 0.0);
        assert_eq!(optimize(&m, Method::Mv).unwrap().warning, None);
    }

    #[test]
    fn trace_collects_cramer_terms_for_four_assets() {
        let mut cov = vec![0.0; 16];
        for i in 0..4 {
            cov[i * 4 + i] = 1.0;
        }
        let m = moments(&[0.1; 4], &cov);
        let t = trace_system(&m, Method::Mv).unwrap();
        assert_eq!(t.cramer.unwrap().determinant, -32.0);
        let d = t.diagnostics.unwrap();
        assert!((d.determinant + 32.0).abs() < 1e-12);
        assert!(t.failure.is_none());
        assert!(t.system.matrix().row(3).iter().all(|&v| v == 1.0));
    }
}
