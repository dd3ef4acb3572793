//! Every asset subset of size two or more, solved under both criteria and
//! ranked by risk-adjusted return.
//!
//! Subsets are ordered by descending size, then lexicographically by asset
//! position, and numbered from 1 in that order. For `n` assets there are
//! `Σ_{l=0}^{n-2} C(n, n-l) = 2ⁿ - n - 1` of them.

use rayon::prelude::*;
use thiserror::Error;

use crate::moments::MomentEstimate;
use crate::solver::{optimize, Method, PortfolioSolution, SolveError};

/// Largest universe enumerated without an explicit override.
pub const DEFAULT_ENUMERATION_CAP: usize = 20;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EnumerationError {
    #[error("at least 2 assets are needed, got {n}")]
    TooFewAssets { n: usize },
    #[error("portfolio count for {n} assets overflows a 64-bit counter")]
    Overflow { n: usize },
    #[error("{n} assets exceed the enumeration cap of {cap}; raise it with --max-assets")]
    EnumerationCapExceeded { n: usize, cap: usize },
    #[error("every subset portfolio failed to solve")]
    AllSubsetsSingular,
    #[error(transparent)]
    Solve(#[from] SolveError),
}

/// Number of subsets with at least two assets, summed term by term.
pub fn count_portfolios(n: usize) -> Result<u64, EnumerationError> {
    if n < 2 {
        return Err(EnumerationError::TooFewAssets { n });
    }
    if n > 62 {
        return Err(EnumerationError::Overflow { n });
    }
    // Σ_{l=0}^{n-2} C(n, n-l) = Σ_{k=2}^{n} C(n, k)
    let mut total = 0u64;
    let mut binom = 1u64; // C(n, 0)
    for k in 1..=n as u64 {
        binom = binom * (n as u64 - k + 1) / k;
        if k >= 2 {
            total += binom;
        }
    }
    Ok(total)
}

/// A portfolio's member assets as 0-based positions, and its 1-based ordinal.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AssetSubset {
    pub ordinal: usize,
    positions: Vec<usize>,
}

impl AssetSubset {
    pub fn new(ordinal: usize, positions: Vec<usize>) -> Self {
        debug_assert!(positions.windows(2).all(|w| w[0] < w[1]));
        Self { ordinal, positions }
    }

    /// 0-based positions, strictly increasing.
    pub fn positions(&self) -> &[usize] {
        &self.positions
    }

    /// 1-based asset indices as reported to users.
    pub fn indices(&self) -> Vec<usize> {
        self.positions.iter().map(|p| p + 1).collect()
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }
}

fn push_combinations(n: usize, k: usize, start: usize, current: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    if current.len() == k {
        out.push(current.clone());
        return;
    }
    let remaining = k - current.len();
    for i in start..=(n - remaining) {
        current.push(i);
        push_combinations(n, k, i + 1, current, out);
        current.pop();
    }
}

/// All subsets of size ≥ 2 in canonical order.
pub fn enumerate_subsets(n: usize, cap: usize) -> Result<Vec<AssetSubset>, EnumerationError> {
    if n < 2 {
        return Err(EnumerationError::TooFewAssets { n });
    }
    if n > cap {
        return Err(EnumerationError::EnumerationCapExceeded { n, cap });
    }
    let total = count_portfolios(n)? as usize;
    let mut sets = Vec::with_capacity(total);
    let mut current = Vec::with_capacity(n);
    for k in (2..=n).rev() {
        push_combinations(n, k, 0, &mut current, &mut sets);
    }
    debug_assert_eq!(sets.len(), total);
    Ok(sets
        .into_iter()
        .enumerate()
        .map(|(i, positions)| AssetSubset::new(i + 1, positions))
        .collect())
}

/// Which criteria to solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MethodSelection {
    Mv,
    Mrar,
    #[default]
    Both,
}

impl MethodSelection {
    pub fn includes(self, method: Method) -> bool {
        matches!(
            (self, method),
            (MethodSelection::Both, _)
                | (MethodSelection::Mv, Method::Mv)
                | (MethodSelection::Mrar, Method::Mrar)
        )
    }

    pub fn methods(self) -> impl Iterator<Item = Method> {
        Method::ALL.into_iter().filter(move |&m| self.includes(m))
    }

    /// Method whose RAR orders a top-K listing.
    pub fn ranking_method(self) -> Method {
        if self.includes(Method::Mrar) {
            Method::Mrar
        } else {
            Method::Mv
        }
    }
}

/// Outcome of one criterion on one subset; failures keep their reason.
pub type Outcome = Result<PortfolioSolution, SolveError>;

#[derive(Debug, Clone, PartialEq)]
pub struct SubsetRecord {
    pub subset: AssetSubset,
    pub asset_names: Vec<String>,
    /// `None` when the criterion was not requested.
    pub mv: Option<Outcome>,
    pub mrar: Option<Outcome>,
}

impl SubsetRecord {
    pub fn outcome(&self, method: Method) -> Option<&Outcome> {
        match method {
            Method::Mv => self.mv.as_ref(),
            Method::Mrar => self.mrar.as_ref(),
        }
    }

    pub fn solution(&self, method: Method) -> Option<&PortfolioSolution> {
        self.outcome(method).and_then(|o| o.as_ref().ok())
    }

    /// Risk-adjusted return of a successful solve, if defined.
    pub fn rar(&self, method: Method) -> Option<f64> {
        self.solution(method).and_then(|s| s.rar)
    }
}

/// All solved portfolios and the best ordinal under each criterion.
#[derive(Debug, Clone, PartialEq)]
pub struct RankingReport {
    pub records: Vec<SubsetRecord>,
    pub best_mv: Option<usize>,
    pub best_mrar: Option<usize>,
    pub portfolio_count: u64,
    pub methods: MethodSelection,
}

impl RankingReport {
    pub fn best(&self, method: Method) -> Option<usize> {
        match method {
            Method::Mv => self.best_mv,
            Method::Mrar => self.best_mrar,
        }
    }

    pub fn record(&self, ordinal: usize) -> Option<&SubsetRecord> {
        self.records.iter().find(|r| r.subset.ordinal == ordinal)
    }

    /// Records sorted by descending RAR under `method`; undefined RARs last,
    /// ties by ordinal.
    pub fn ranked(&self, method: Method) -> Vec<&SubsetRecord> {
        let mut refs: Vec<&SubsetRecord> = self.records.iter().collect();
        refs.sort_by(|a, b| match (a.rar(method), b.rar(method)) {
            (Some(x), Some(y)) => y.total_cmp(&x).then(a.subset.ordinal.cmp(&b.subset.ordinal)),
            (Some(_), None) => std::cmp::Ordering::Less,
            (None, Some(_)) => std::cmp::Ordering::Greater,
            (None, None) => a.subset.ordinal.cmp(&b.subset.ordinal),
        });
        refs
    }

    /// Keep only the `k` best records under the selection's ranking method.
    pub fn top(&self, k: usize) -> RankingReport {
        let records = self
            .ranked(self.methods.ranking_method())
            .into_iter()
            .take(k)
            .cloned()
            .collect();
        RankingReport {
            records,
            ..self.clone()
        }
    }
}

fn solve_subset(moments: &MomentEstimate, subset: AssetSubset, methods: MethodSelection) -> SubsetRecord {
    let sub = moments.select(subset.positions());
    let solve = |m: Method| methods.includes(m).then(|| optimize(&sub, m));
    SubsetRecord {
        asset_names: sub.asset_names().to_vec(),
        mv: solve(Method::Mv),
        mrar: solve(Method::Mrar),
        subset,
    }
}

// Highest RAR wins; scanning in ordinal order with a strict comparison
// leaves exact ties with the lowest ordinal.
fn best_ordinal(records: &[SubsetRecord], method: Method) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for r in records {
        if let Some(rar) = r.rar(method) {
            if best.is_none_or(|(_, b)| rar > b) {
                best = Some((r.subset.ordinal, rar));
            }
        }
    }
    best.map(|(o, _)| o)
}

fn assemble(
    records: Vec<SubsetRecord>,
    portfolio_count: u64,
    methods: MethodSelection,
) -> Result<RankingReport, EnumerationError> {
    let any_solved = records
        .iter()
        .any(|r| methods.methods().any(|m| r.solution(m).is_some()));
    if !any_solved {
        return Err(EnumerationError::AllSubsetsSingular);
    }
    Ok(RankingReport {
        best_mv: best_ordinal(&records, Method::Mv),
        best_mrar: best_ordinal(&records, Method::Mrar),
        records,
        portfolio_count,
        methods,
    })
}

/// Solve every subset of size ≥ 2 and pick the best under each criterion.
///
/// Subsets are solved in parallel; records come back in ordinal order.
pub fn rank_portfolios(
    moments: &MomentEstimate,
    methods: MethodSelection,
    cap: usize,
) -> Result<RankingReport, EnumerationError> {
    let n = moments.num_assets();
    let subsets = enumerate_subsets(n, cap)?;
    let count = subsets.len() as u64;
    let records: Vec<SubsetRecord> = subsets
        .into_par_iter()
        .map(|s| solve_subset(moments, s, methods))
        .collect();
    assemble(records, count, methods)
}

/// Report for the full asset set alone (portfolio 1, count 1).
///
/// Unlike enumeration, a failed solve here is an error.
pub fn single_portfolio(
    moments: &MomentEstimate,
    methods: MethodSelection,
) -> Result<RankingReport, EnumerationError> {
    let n = moments.num_assets();
    if n < 2 {
        return Err(EnumerationError::TooFewAssets { n });
    }
    let record = solve_subset(moments, AssetSubset::new(1, (0..n).collect()), methods);
    for method in methods.methods() {
        if let Some(Err(e)) = record.outcome(method) {
            return Err(EnumerationError::Solve(e.clone()));
        }
    }
    assemble(vec![record], 1, methods)
}
