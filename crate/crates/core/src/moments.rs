//! Mean-return vectors and variance–covariance matrices.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::market_data::{DataError, ParameterSet, ReturnMatrix};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MomentError {
    #[error("{observations} return observations; at least 2 are needed")]
    TooFewObservations { observations: usize },
    #[error("moment estimate needs at least one asset")]
    NoAssets,
    #[error("{what}: expected {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("covariance is not symmetric at ({row}, {col})")]
    Asymmetric { row: usize, col: usize },
    #[error("variance of asset {index} is negative ({value})")]
    NegativeVariance { index: usize, value: f64 },
    #[error("non-finite moment")]
    NonFinite,
}

/// Divisor used when averaging cross-products of deviations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CovDivisor {
    /// `m - 1`
    #[default]
    Sample,
    /// `m`
    Population,
}

/// Mean returns `r̄` and covariance `Ω` for a set of named assets.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentEstimate {
    asset_names: Vec<String>,
    means: DVector<f64>,
    covariance: DMatrix<f64>,
    sample_size: usize,
}

impl MomentEstimate {
    /// Assemble from parts. The covariance must already be symmetric to
    /// within `1e-12` of its largest entry; it is stored exactly symmetric.
    pub fn new(
        asset_names: Vec<String>,
        means: DVector<f64>,
        covariance: DMatrix<f64>,
        sample_size: usize,
    ) -> Result<Self, MomentError> {
        let n = asset_names.len();
        if n == 0 {
            return Err(MomentError::NoAssets);
        }
        if means.len() != n {
            return Err(MomentError::DimensionMismatch {
                what: "means",
                expected: n,
                found: means.len(),
            });
        }
        if covariance.shape() != (n, n) {
            return Err(MomentError::DimensionMismatch {
                what: "covariance",
                expected: n,
                found: covariance.nrows(),
            });
        }
        if means.iter().chain(covariance.iter()).any(|v| !v.is_finite()) {
            return Err(MomentError::NonFinite);
        }
        let tol = 1e-12 * covariance.amax();
        for i in 0..n {
            if covariance[(i, i)] < 0.0 {
                return Err(MomentError::NegativeVariance {
                    index: i,
                    value: covariance[(i, i)],
                });
            }
            for j in (i + 1)..n {
                if (covariance[(i, j)] - covariance[(j, i)]).abs() > tol {
                    return Err(MomentError::Asymmetric { row: i, col: j });
                }
            }
        }
        let covariance = DMatrix::from_fn(n, n, |i, j| {
            if i <= j {
                covariance[(i, j)]
            } else {
                covariance[(j, i)]
            }
        });
        Ok(Self {
            asset_names,
            means,
            covariance,
            sample_size,
        })
    }

    /// Like [`MomentEstimate::new`] with generated names `A1..An` and no
    /// sample size.
    pub fn unnamed(means: DVector<f64>, covariance: DMatrix<f64>) -> Result<Self, MomentError> {
        let names = (1..=means.len()).map(|i| format!("A{i}")).collect();
        Self::new(names, means, covariance, 0)
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

    /// Number of return observations behind the estimate; 0 for parameters.
    pub fn sample_size(&self) -> usize {
        self.sample_size
    }

    pub fn num_assets(&self) -> usize {
        self.asset_names.len()
    }

    /// Sub-vector of means and principal submatrix of the covariance for the
    /// given 0-based asset positions, in the order given.
    pub fn select(&self, positions: &[usize]) -> MomentEstimate {
        MomentEstimate {
            asset_names: positions.iter().map(|&i| self.asset_names[i].clone()).collect(),
            means: DVector::from_iterator(positions.len(), positions.iter().map(|&i| self.means[i])),
            covariance: DMatrix::from_fn(positions.len(), positions.len(), |a, b| {
                self.covariance[(positions[a], positions[b])]
            }),
            sample_size: self.sample_size,
        }
    }

    pub fn to_parameter_set(&self) -> Result<ParameterSet, DataError> {
        ParameterSet::new(
            self.asset_names.clone(),
            self.means.clone(),
            self.covariance.clone(),
        )
    }
}

/// Two-pass estimate: means first, then averaged cross-products of
/// deviations from those means.
pub fn estimate_moments(returns: &ReturnMatrix, divisor: CovDivisor) -> Result<MomentEstimate, MomentError> {
    let r = returns.returns();
    let (m, n) = r.shape();
    if m < 2 {
        return Err(MomentError::TooFewObservations { observations: m });
    }
    let means = DVector::from_fn(n, |i, _| r.column(i).sum() / m as f64);
    let mut deviations = r.clone();
    for (i, mut col) in deviations.column_iter_mut().enumerate() {
        col.add_scalar_mut(-means[i]);
    }
    let denom = match divisor {
        CovDivisor::Sample => (m - 1) as f64,
        CovDivisor::Population => m as f64,
    };
    let mut covariance = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let s = deviations.column(i).dot(&deviations.column(j)) / denom;
            covariance[(i, j)] = s;
            covariance[(j, i)] = s;
        }
    }
    Ok(MomentEstimate {
        asset_names: returns.asset_names().to_vec(),
        means,
        covariance,
        sample_size: m,
    })
}

pub fn moments_from_parameters(params: &ParameterSet) -> MomentEstimate {
    MomentEstimate {
        asset_names: params.asset_names().to_vec(),
        means: params.means().clone(),
        covariance: params.covariance().clone(),
        sample_size: 0,
    }
}

/// Per-asset mean, standard deviation and risk-adjusted return.
#[derive(Debug, Clone, PartialEq)]
pub struct AssetStats {
    pub name: String,
    pub mean: f64,
    pub std_dev: f64,
    /// `mean / std_dev`; `None` for a zero-variance asset.
    pub rar: Option<f64>,
}

pub fn asset_stats(moments: &MomentEstimate) -> Vec<AssetStats> {
    moments
        .asset_names
        .iter()
        .enumerate()
        .map(|(i, name)| {
            let mean = moments.means[i];
            let std_dev = moments.covariance[(i, i)].sqrt();
            AssetStats {
                name: name.clone(),
                mean,
                std_dev,
                rar: (std_dev > 0.0).then(|| mean / std_dev),
            }
        })
        .collect()
}
