mod common;

use common::*;
use portfolio_rar::enumeration::{count_portfolios, rank_portfolios, MethodSelection};
use portfolio_rar::solver::Method;

#[test]
fn record_count_matches_portfolio_count() {
    let mut rng = rng(21);
    for n in 2..=12 {
        let m = random_instance(&mut rng, n);
        let report = rank_portfolios(&m, MethodSelection::Both, 20).unwrap();
        assert_eq!(report.records.len() as u64, count_portfolios(n).unwrap());
        assert_eq!(report.portfolio_count, (1u64 << n) - n as u64 - 1);
    }
}

#[test]
fn every_subset_satisfies_solver_invariants() {
    let mut rng = rng(22);
    let m = random_instance(&mut rng, 6);
    let report = rank_portfolios(&m, MethodSelection::Both, 20).unwrap();
    for record in &report.records {
        let sub = m.select(record.subset.positions());
        let mv = record.solution(Method::Mv).unwrap();
        assert!((mv.weights.sum() - 1.0).abs() <= 1e-10);
        let marginal = sub.covariance() * mv.weights.as_vector();
        assert!(marginal
            .iter()
            .all(|v| (v - marginal[0]).abs() <= 1e-9 * marginal.amax()));

        let mrar = record.solution(Method::Mrar).unwrap();
        assert!((mrar.weights.sum() - 1.0).abs() <= 1e-10);
        let marginal = sub.covariance() * mrar.weights.as_vector();
        let q0 = marginal[0] / sub.means()[0];
        for (v, r) in marginal.iter().zip(sub.means().iter()) {
            assert!((v / r - q0).abs() <= 1e-9 * q0.abs());
        }
        let rar = mrar.rar.unwrap();
        assert!((rar * mrar.std_dev - mrar.mean).abs() <= 1e-9 * mrar.mean.abs().max(1e-300));
    }
}

#[test]
fn best_records_dominate() {
    let mut rng = rng(23);
    for n in 2..=7 {
        let m = random_instance(&mut rng, n);
        let report = rank_portfolios(&m, MethodSelection::Both, 20).unwrap();
        for method in Method::ALL {
            let best = report.best(method).unwrap();
            let best_rar = report.record(best).unwrap().rar(method).unwrap();
            for r in &report.records {
                let rar = r.rar(method).unwrap();
                assert!(best_rar >= rar);
                if rar == best_rar {
                    assert!(best <= r.subset.ordinal);
                }
            }
        }
    }
}

#[test]
fn full_set_dominates_under_mrar() {
    let mut rng = rng(24);
    let mut tested = 0;
    while tested < 100 {
        let n = 2 + tested % 6;
        let m = random_instance(&mut rng, n);
        let report = rank_portfolios(&m, MethodSelection::Mrar, 20).unwrap();
        let all_maximizing = report
            .records
            .iter()
            .all(|r| mrar_normalizer(&m.select(r.subset.positions())) > 0.0);
        if !all_maximizing {
            continue;
        }
        tested += 1;
        let full = report.record(1).unwrap().rar(Method::Mrar).unwrap();
        for r in &report.records {
            assert!(full >= r.rar(Method::Mrar).unwrap() - 1e-12 * full.abs());
        }
        assert_eq!(report.best_mrar, Some(1));
    }
}

#[test]
fn repeated_runs_are_identical() {
    let mut rng = rng(25);
    let m = random_instance(&mut rng, 9);
    let a = rank_portfolios(&m, MethodSelection::Both, 20).unwrap();
    let b = rank_portfolios(&m, MethodSelection::Both, 20).unwrap();
    assert_eq!(a, b);
    let ordinals: Vec<usize> = a.records.iter().map(|r| r.subset.ordinal).collect();
    assert_eq!(ordinals, (1..=a.records.len()).collect::<Vec<_>>());
}
