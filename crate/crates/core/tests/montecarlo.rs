//! Statistical checks of the randomized operations against closed-form expectations.

use privrank::base::{BaseRanker, WeightOracle};
use privrank::central::{dp_kwiksort, reduce_noise_all, CentralAnswerer, Mechanism, NoiseSpec, PrivacyBudget};
use privrank::harness::{mallows_sample, uniform_profile};
use privrank::local::{local_full_matrix, randomized_response, reduce_local_noise_all, RrConfig};
use privrank::ranking::{build_weights, kendall_tau, max_pairs, PairwiseWeights, Ranking, RankingProfile};
use privrank::seed::{derive_rng, derive_seed, rng_from_seed};

fn mean_sd(xs: &[f64]) -> (f64, f64) {
    let k = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / k;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (k - 1.0);
    (mean, var.sqrt())
}

fn unanimous_profile(m: usize, n: usize) -> RankingProfile {
    RankingProfile::new(vec![Ranking::identity(m); n]).unwrap()
}

#[test]
fn kendall_worked_example() {
    let a = Ranking::from_order(&[0, 1, 2, 3]).unwrap();
    let b = Ranking::from_order(&[1, 2, 0, 3]).unwrap();
    assert_eq!(kendall_tau(&a, &b).unwrap(), 2);
}

#[test]
fn clipped_laplace_error_is_below_scale() {
    let m = 10;
    let w = PairwiseWeights::from_upper(m, |i, j| ((i + 2 * j) % 7) as f64 / 6.0);
    let budget = PrivacyBudget::pure(1.0).unwrap();
    let q = (m * m) as u64;
    let noise = NoiseSpec::laplace(budget, q, 10_000).unwrap();
    assert!((noise.scale - 0.01).abs() < 1e-15);
    let trials = 100_000;
    let mut total = 0.0;
    for t in 0..trials {
        let mut ans = CentralAnswerer::new(&w, noise, q, derive_rng(7, &[t]));
        total += (ans.query(0, 3).unwrap() - w.get(0, 3)).abs();
    }
    let mean = total / trials as f64;
    assert!(mean <= 0.01, "mean |error| {mean}");
}

#[test]
fn gaussian_noise_std_matches_sigma() {
    let w = PairwiseWeights::from_upper(3, |_, _| 0.5);
    let budget = PrivacyBudget::new(1.0, 1e-6).unwrap();
    let noise = NoiseSpec::gaussian(budget, 2, 1000).unwrap();
    let expected = (4.0f64 * (1.25e6f64).ln()).sqrt() / 1000.0;
    assert!((noise.scale - expected).abs() < 1e-15);
    assert!((noise.scale - 0.00749).abs() < 5e-6);
    let mut draws = Vec::with_capacity(100_000);
    for t in 0..100_000u64 {
        let mut ans = CentralAnswerer::new(&w, noise, 2, derive_rng(3, &[t]));
        ans.query(1, 2).unwrap();
        draws.push(ans.raw_noise(1, 2).unwrap());
    }
    let (_, sd) = mean_sd(&draws);
    assert!((sd / noise.scale - 1.0).abs() < 0.02, "sd {sd} vs {}", noise.scale);
}

#[test]
fn noise_all_on_unanimous_profile_is_accurate() {
    let m = 5;
    let w = build_weights(&unanimous_profile(m, 10_000));
    let budget = PrivacyBudget::pure(1.0).unwrap();
    let costs: Vec<f64> = (0..100)
        .map(|s| reduce_noise_all(&w, budget, Mechanism::Laplace, 10_000, BaseRanker::Exact, s).unwrap().cost)
        .collect();
    let mean = costs.iter().sum::<f64>() / costs.len() as f64;
    assert!(mean <= 0.05 * max_pairs(m) as f64, "mean cost {mean}");
}

#[test]
fn dp_kwiksort_rarely_falls_back() {
    let p = mallows_sample(&Ranking::identity(10), 0.7, 10_000, &mut rng_from_seed(1)).unwrap();
    let w = build_weights(&p);
    let budget = PrivacyBudget::pure(1.0).unwrap();
    let fallbacks = (0..1000)
        .filter(|&s| dp_kwiksort(&w, budget, Mechanism::Laplace, 10_000, 8.0, s).unwrap().fallback_used)
        .count();
    assert!(fallbacks < 10, "{fallbacks} fallbacks in 1000 runs");
}

#[test]
fn randomized_response_of_zero_is_centred() {
    let rr = RrConfig::new(1.0).unwrap();
    let mut rng = rng_from_seed(11);
    let k = 100_000;
    let sum: f64 = (0..k).map(|_| randomized_response(0.0, &rr, &mut rng).unwrap()).sum();
    let mean = sum / k as f64;
    // each report has variance d_eps^2
    let sigma = rr.d_eps() / (k as f64).sqrt();
    assert!(mean.abs() <= 3.0 * sigma, "mean {mean}, sigma {sigma}");
}

#[test]
fn full_matrix_converges_for_many_users() {
    let est = local_full_matrix(&unanimous_profile(3, 1_000_000), 2.0, 4).unwrap();
    for i in 0..3 {
        for j in 0..3 {
            if i != j {
                let truth = if i < j { 1.0 } else { 0.0 };
                assert!((est.weights.get(i, j) - truth).abs() <= 0.02, "w[{i}][{j}]");
            }
        }
    }
}

#[test]
fn full_matrix_entry_is_unbiased() {
    // two of three voters put 0 before 1
    let a = Ranking::from_order(&[0, 1, 2]).unwrap();
    let b = Ranking::from_order(&[2, 0, 1]).unwrap();
    let c = Ranking::from_order(&[1, 2, 0]).unwrap();
    let n = 100_000;
    let rankings: Vec<Ranking> = (0..n).map(|k| [&a, &b, &c][k % 3].clone()).collect();
    let profile = RankingProfile::new(rankings).unwrap();
    let truth = build_weights(&profile).get(0, 1);
    assert!((truth - 2.0 / 3.0).abs() < 1e-5);
    let raws: Vec<f64> = (0..200).map(|s| local_full_matrix(&profile, 1.0, s).unwrap().raw(0, 1)).collect();
    let (mean, sd) = mean_sd(&raws);
    let se = sd / (raws.len() as f64).sqrt();
    assert!((mean - truth).abs() <= 3.0 * se, "mean {mean} truth {truth} se {se}");
}

#[test]
fn local_noise_all_on_unanimous_profile() {
    let m = 5;
    let profile = unanimous_profile(m, 64_000);
    let costs: Vec<f64> = (0..40)
        .map(|s| reduce_local_noise_all(&profile, 2.0, BaseRanker::Exact, s).unwrap().cost)
        .collect();
    let mean = costs.iter().sum::<f64>() / costs.len() as f64;
    assert!(mean <= 0.1 * max_pairs(m) as f64, "mean cost {mean}");
}

#[test]
fn uniform_mallows_frequencies() {
    let n = 60_000;
    let p = mallows_sample(&Ranking::from_order(&[1, 2, 0]).unwrap(), 1.0, n, &mut rng_from_seed(5)).unwrap();
    let mut counts = std::collections::HashMap::new();
    for r in p.rankings() {
        *counts.entry(r.order()).or_insert(0usize) += 1;
    }
    assert_eq!(counts.len(), 6);
    let pr = 1.0 / 6.0;
    let sigma = (n as f64 * pr * (1.0 - pr)).sqrt();
    for (order, c) in counts {
        assert!((c as f64 - n as f64 * pr).abs() <= 3.0 * sigma, "{order:?}: {c}");
    }
}

#[test]
fn two_item_mallows_center_probability() {
    let n = 60_000;
    let center = Ranking::identity(2);
    let p = mallows_sample(&center, 0.5, n, &mut rng_from_seed(6)).unwrap();
    let hits = p.rankings().iter().filter(|r| **r == center).count() as f64;
    let pr = 2.0 / 3.0;
    let sigma = (n as f64 * pr * (1.0 - pr)).sqrt();
    assert!((hits - n as f64 * pr).abs() <= 3.0 * sigma, "{hits}");
}

#[test]
fn uniform_profile_passes_chi_square() {
    let n = 60_000;
    let p = uniform_profile(3, n, &mut rng_from_seed(derive_seed(1, &[2]))).unwrap();
    let mut counts = std::collections::HashMap::new();
    for r in p.rankings() {
        *counts.entry(r.order()).or_insert(0usize) += 1;
    }
    let expected = n as f64 / 6.0;
    let chi2: f64 = counts.values().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
    // 0.999 quantile of chi-square with 5 degrees of freedom
    assert!(chi2 < 20.515, "chi2 {chi2}");
}
