//! Price tables, per-period returns and directly supplied parameter sets.

use std::collections::HashSet;
use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use serde::Deserialize;
use thiserror::Error;

/// Relative tolerance for accepting a hand-entered covariance as symmetric.
pub const SYMMETRY_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DataError {
    #[error("no data rows")]
    EmptyInput,
    #[error("line {line}, column {column} ({asset}): '{value}' is not a finite number")]
    NonNumericCell {
        line: u64,
        column: usize,
        asset: String,
        value: String,
    },
    #[error("line {line}, column {column} ({asset}): price {value} is not positive")]
    NonPositivePrice {
        line: u64,
        column: usize,
        asset: String,
        value: f64,
    },
    #[error("line {line}: expected {expected} fields, found {found}")]
    RaggedRows {
        line: u64,
        expected: usize,
        found: usize,
    },
    #[error("duplicate asset name '{0}'")]
    DuplicateAssetName(String),
    #[error("column {column}: empty asset name")]
    EmptyAssetName { column: usize },
    #[error("no asset columns")]
    NoAssets,
    #[error("{rows} price rows; at least 3 are needed")]
    TooFewRows { rows: usize },
    #[error("{what}: expected {expected} entries, found {found}")]
    DimensionMismatch {
        what: String,
        expected: usize,
        found: usize,
    },
    #[error("covariance[{row}][{col}] differs from its transpose by {deviation:e}")]
    AsymmetricCovariance { row: usize, col: usize, deviation: f64 },
    #[error("variance of asset {index} is negative ({value})")]
    NegativeVariance { index: usize, value: f64 },
    #[error("malformed parameter document: {0}")]
    MalformedDocument(String),
}

/// How per-period returns are derived from consecutive prices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ReturnKind {
    /// `p[t+1] / p[t] - 1`
    #[default]
    Simple,
    /// `ln(p[t+1] / p[t])`
    Log,
}

fn check_names(names: &[String]) -> Result<(), DataError> {
    if names.is_empty() {
        return Err(DataError::NoAssets);
    }
    let mut seen = HashSet::new();
    for (i, name) in names.iter().enumerate() {
        if name.trim().is_empty() {
            return Err(DataError::EmptyAssetName { column: i + 1 });
        }
        if !seen.insert(name.as_str()) {
            return Err(DataError::DuplicateAssetName(name.clone()));
        }
    }
    Ok(())
}

/// Asset prices on a common time grid, one column per asset.
#[derive(Debug, Clone, PartialEq)]
pub struct PriceTable {
    asset_names: Vec<String>,
    prices: DMatrix<f64>,
    period_labels: Option<Vec<String>>,
}

impl PriceTable {
    pub fn new(
        asset_names: Vec<String>,
        prices: DMatrix<f64>,
        period_labels: Option<Vec<String>>,
    ) -> Result<Self, DataError> {
        check_names(&asset_names)?;
        if prices.ncols() != asset_names.len() {
            return Err(DataError::DimensionMismatch {
                what: "price columns".into(),
                expected: asset_names.len(),
                found: prices.ncols(),
            });
        }
        if prices.nrows() == 0 {
            return Err(DataError::EmptyInput);
        }
        if prices.nrows() < 3 {
            return Err(DataError::TooFewRows { rows: prices.nrows() });
        }
        if let Some(labels) = &period_labels {
            if labels.len() != prices.nrows() {
                return Err(DataError::DimensionMismatch {
                    what: "period labels".into(),
                    expected: prices.nrows(),
                    found: labels.len(),
                });
            }
        }
        for t in 0..prices.nrows() {
            for (i, name) in asset_names.iter().enumerate() {
                let value = prices[(t, i)];
                if !value.is_finite() {
                    return Err(DataError::NonNumericCell {
                        line: t as u64 + 2,
                        column: i + 1,
                        asset: name.clone(),
                        value: value.to_string(),
                    });
                }
                if value <= 0.0 {
                    return Err(DataError::NonPositivePrice {
                        line: t as u64 + 2,
                        column: i + 1,
                        asset: name.clone(),
                        value,
                    });
                }
            }
        }
        Ok(Self {
            asset_names,
            prices,
            period_labels,
        })
    }

    pub fn asset_names(&self) -> &[String] {
        &self.asset_names
    }

    /// T×n price matrix.
    pub fn prices(&self) -> &DMatrix<f64> {
        &self.prices
    }

    pub fn period_labels(&self) -> Option<&[String]> {
        self.period_labels.as_deref()
    }

    pub fn num_assets(&self) -> usize {
        self.asset_names.len()
    }

    pub fn num_periods(&self) -> usize {
        self.prices.nrows()
    }

    /// Render as CSV in the same layout `parse_price_table` accepts. A label
    /// column is written first when the table carries period labels.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let labelled = self.period_labels.is_some();
        if labelled {
            out.push_str("period,");
        }
        out.push_str(&self.asset_names.join(","));
        out.push('\n');
        for t in 0..self.num_periods() {
            if let Some(labels) = &self.period_labels {
                let _ = write!(out, "{},", labels[t]);
            }
            let row: Vec<String> = self.prices.row(t).iter().map(|v| v.to_string()).collect();
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}

/// Parse a comma-delimited price table whose first row names the assets.
///
/// With `has_label_column`, the first column holds period labels and is not
/// an asset. Line numbers in errors are 1-based file lines.
pub fn parse_price_table(text: &str, has_label_column: bool) -> Result<PriceTable, DataError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());

    let mut records = reader.records();
    let header = match records.next() {
        Some(Ok(h)) => h,
        Some(Err(e)) => return Err(DataError::MalformedDocument(e.to_string())),
        None => return Err(DataError::EmptyInput),
    };
    let skip = usize::from(has_label_column);
    let width = header.len();
    let names: Vec<String> = header.iter().skip(skip).map(str::to_owned).collect();
    check_names(&names)?;

    let mut values = Vec::new();
    let mut labels = Vec::new();
    let mut rows = 0;
    for record in records {
        let record = record.map_err(|e| DataError::MalformedDocument(e.to_string()))?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != width {
            return Err(DataError::RaggedRows {
                line,
                expected: width,
                found: record.len(),
            });
        }
        if has_label_column {
            labels.push(record[0].to_owned());
        }
        for (i, cell) in record.iter().skip(skip).enumerate() {
            let value = cell
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| DataError::NonNumericCell {
                    line,
                    column: i + 1 + skip,
                    asset: names[i].clone(),
                    value: cell.to_owned(),
                })?;
            if value <= 0.0 {
                return Err(DataError::NonPositivePrice {
                    line,
                    column: i + 1 + skip,
                    asset: names[i].clone(),
                    value,
                });
            }
            values.push(value);
        }
        rows += 1;
    }
    if rows == 0 {
        return Err(DataError::EmptyInput);
    }
    if rows < 3 {
        return Err(DataError::TooFewRows { rows });
    }
    let prices = DMatrix::from_row_slice(rows, names.len(), &values);
    PriceTable::new(names, prices, has_label_column.then_some(labels))
}

/// Per-period returns, one row fewer than the price table they came from.
#[derive(Debug, Clone, PartialEq)]
pub struct ReturnMatrix {
    asset_names: Vec<String>,
    returns: DMatrix<f64>,
}

impl ReturnMatrix {
    /// Build directly from returns, e.g. when they were computed elsewhere.
    pub fn new(asset_names: Vec<String>, returns: DMatrix<f64>) -> Result<Self, DataError> {
        check_names(&asset_names)?;
        if returns.ncols() != asset_names.len() {
            return Err(DataError::DimensionMismatch {
                what: "return columns".into(),
                expected: asset_names.len(),
                found: returns.ncols(),
            });
        }
        if let Some(bad) = returns.iter().find(|v| !v.is_finite()) {
            return Err(DataError::MalformedDocument(format!("non-finite return {bad}")));
        }
        Ok(Self { asset_names, returns })
    }

    pub fn asset_names(&self) -> &[String] {
        &self.asset_names
    }

    /// m×n return matrix.
    pub fn returns(&self) -> &DMatrix<f64> {
        &self.returns
    }

    pub fn num_observations(&self) -> usize {
        self.returns.nrows()
    }
}

pub fn compute_returns(table: &PriceTable, kind: ReturnKind) -> ReturnMatrix {
    let p = table.prices();
    let returns = DMatrix::from_fn(p.nrows() - 1, p.ncols(), |t, i| {
        let ratio = p[(t + 1, i)] / p[(t, i)];
        match kind {
            ReturnKind::Simple => ratio - 1.0,
            ReturnKind::Log => ratio.ln(),
        }
    });
    ReturnMatrix {
        asset_names: table.asset_names.clone(),
        returns,
    }
}

/// Mean returns and covariance entered directly instead of estimated.
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterSet {
    asset_names: Vec<String>,
    means: DVector<f64>,
    covariance: DMatrix<f64>,
}

impl ParameterSet {
    /// Validate and, when asymmetry is within tolerance, symmetrize as
    /// `(M + Mᵀ) / 2`.
    pub fn new(
        asset_names: Vec<String>,
        means: DVector<f64>,
        covariance: DMatrix<f64>,
    ) -> Result<Self, DataError> {
        check_names(&asset_names)?;
        let n = asset_names.len();
        if means.len() != n {
            return Err(DataError::DimensionMismatch {
                what: "means".into(),
                expected: n,
                found: means.len(),
            });
        }
        if covariance.nrows() != n || covariance.ncols() != n {
            return Err(DataError::DimensionMismatch {
                what: "covariance".into(),
                expected: n,
                found: if covariance.nrows() != n {
                    covariance.nrows()
                } else {
                    covariance.ncols()
                },
            });
        }
        if means.iter().chain(covariance.iter()).any(|v| !v.is_finite()) {
            return Err(DataError::MalformedDocument("non-finite parameter".into()));
        }
        let tol = SYMMETRY_TOLERANCE * covariance.amax();
        for i in 0..n {
            for j in (i + 1)..n {
                let deviation = (covariance[(i, j)] - covariance[(j, i)]).abs();
                if deviation > tol {
                    return Err(DataError::AsymmetricCovariance {
                        row: i,
                        col: j,
                        deviation,
                    });
                }
            }
        }
        for i in 0..n {
            if covariance[(i, i)] < 0.0 {
                return Err(DataError::NegativeVariance {
                    index: i,
                    value: covariance[(i, i)],
                });
            }
        }
        let covariance = (&covariance + covariance.transpose()) * 0.5;
        Ok(Self {
            asset_names,
            means,
            covariance,
        })
    }

    pub fn asset_names(&self) -> &[String] {
        &self.asset_names
    }

    pub fn means(&self) -> &DVector<f64> {
        &self.means
    }

    pub fn covariance(&self) -> &DMatrix<f64> {
        &self.covariance
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ParameterDocument {
    assets: Vec<String>,
    means: Vec<f64>,
    covariance: Vec<Vec<f64>>,
}

/// Parse a parameter document with exactly the fields `assets`, `means` and
/// `covariance` (row-major). JSON is recognised by a leading `{`; anything
/// else is read as TOML.
pub fn parse_parameter_file(text: &str) -> Result<ParameterSet, DataError> {
    let doc: ParameterDocument = if text.trim_start().starts_with('{') {
        serde_json::from_str(text).map_err(|e| DataError::MalformedDocument(e.to_string()))?
    } else {
        toml::from_str(text).map_err(|e| DataError::MalformedDocument(e.to_string()))?
    };
    let n = doc.assets.len();
    if doc.means.len() != n {
        return Err(DataError::DimensionMismatch {
            what: "means".into(),
            expected: n,
            found: doc.means.len(),
        });
    }
    if doc.covariance.len() != n {
        return Err(DataError::DimensionMismatch {
            what: "covariance rows".into(),
            expected: n,
            found: doc.covariance.len(),
        });
    }
    if let Some((i, row)) = doc.covariance.iter().enumerate().find(|(_, r)| r.len() != n) {
        return Err(DataError::DimensionMismatch {
            what: format!("covariance row {}", i + 1),
            expected: n,
            found: row.len(),
        });
    }
    let covariance = DMatrix::from_fn(n, n, |i, j| doc.covariance[i][j]);
    ParameterSet::new(doc.assets, DVector::from_vec(doc.means), covariance)
}
