#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use portfolio_rar::MomentEstimate;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random SPD covariance `s²·(A·Aᵀ/n + 0.2·I)` and positive means `s·u`,
/// `u ∈ [0.2, 1.2)`, with the return scale `s` log-uniform in `[1e-3, 1]`.
pub fn random_instance(rng: &mut ChaCha8Rng, n: usize) -> MomentEstimate {
    let scale = 10f64.powf(rng.gen_range(-3.0..0.0));
    let a = DMatrix::from_fn(n, n, |_, _| rng.sample::<f64, _>(StandardNormal));
    let cov = (&a * a.transpose() / n as f64 + DMatrix::identity(n, n) * 0.2) * (scale * scale);
    let cov = (&cov + cov.transpose()) * 0.5;
    let means = DVector::from_fn(n, |_, _| scale * rng.gen_range(0.2..1.2));
    MomentEstimate::unnamed(means, cov).unwrap()
}

/// `1ᵀ·Ω⁻¹·r̄`, the MRAR normalizer.
pub fn mrar_normalizer(m: &MomentEstimate) -> f64 {
    let x = m.covariance().clone().cholesky().unwrap().solve(m.means());
    x.sum()
}

/// Random feasible perturbation: components sum to zero, Euclidean norm at
/// most `radius`.
pub fn perturbation(rng: &mut ChaCha8Rng, n: usize, radius: f64) -> DVector<f64> {
    let mut d = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
    let mean = d.mean();
    d.add_scalar_mut(-mean);
    let norm = d.norm();
    if norm == 0.0 {
        return d;
    }
    d * (rng.gen_range(0.0..radius) / norm)
}

pub fn variance(m: &MomentEstimate, w: &DVector<f64>) -> f64 {
    w.dot(&(m.covariance() * w))
}

pub fn rar(m: &MomentEstimate, w: &DVector<f64>) -> f64 {
    m.means().dot(w) / variance(m, w).sqrt()
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Random permutation of `0..n`.
pub fn permutation(rng: &mut ChaCha8Rng, n: usize) -> Vec<usize> {
    use rand::seq::SliceRandom;
    let mut p: Vec<usize> = (0..n).collect();
    p.shuffle(rng);
    p
}

pub fn permute(m: &MomentEstimate, perm: &[usize]) -> MomentEstimate {
    m.select(perm)
}

pub fn scaled(m: &MomentEstimate, c: f64) -> MomentEstimate {
    MomentEstimate::unnamed(m.means() * c, m.covariance() * (c * c)).unwrap()
}

/// Synthetic geometric random-walk price table as CSV text.
pub fn price_csv(rng: &mut ChaCha8Rng, assets: usize, periods: usize) -> String {
    let mut out = String::from("date");
    for i in 0..assets {
        out.push_str(&format!(",Asset{}", i + 1));
    }
    out.push('\n');
    let common: Vec<f64> = (0..periods)
        .map(|_| rng.sample::<f64, _>(StandardNormal) * 0.01)
        .collect();
    let mut prices: Vec<f64> = (0..assets).map(|i| 50.0 + 10.0 * i as f64).collect();
    let betas: Vec<f64> = (0..assets).map(|_| rng.gen_range(0.2..1.5)).collect();
    for (t, shock) in common.iter().enumerate() {
        out.push_str(&format!("t{t}"));
        for i in 0..assets {
            if t > 0 {
                let idio: f64 = rng.sample::<f64, _>(StandardNormal) * 0.015;
                prices[i] *= 1.0 + 0.0005 * (i as f64 + 1.0) + betas[i] * shock + idio;
            }
            out.push_str(&format!(",{}", prices[i]));
        }
        out.push('\n');
    }
    out
}
