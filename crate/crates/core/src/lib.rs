//! Portfolio construction under two criteria, minimum variance (MV) and
//! maximum risk-adjusted return (MRAR), with the portfolio dimension chosen
//! by solving every subset of two or more assets and ranking the results.
//!
//! The pipeline is
//! [`market_data`] → [`moments`] → [`solver`] → [`enumeration`] → [`report`],
//! tied together by [`cli`].

pub mod cli;
pub mod enumeration;
pub mod linalg;
pub mod market_data;
pub mod moments;
pub mod report;
pub mod solver;

pub use enumeration::{count_portfolios, enumerate_subsets, rank_portfolios, MethodSelection, RankingReport};
pub use market_data::{
    compute_returns, parse_parameter_file, parse_price_table, ParameterSet, PriceTable, ReturnMatrix,
};
pub use moments::{asset_stats, estimate_moments, moments_from_parameters, AssetStats, MomentEstimate};
pub use solver::{
    build_mrar_system, build_mv_system, closed_form_mrar, closed_form_mv, cramer_solve_4, evaluate_portfolio,
    optimize, solve_system, ConstraintSystem, Method, PortfolioSolution, WeightVector,
};
