//! Distribution checks for the random codebook samplers.

use aslab::codes::{self, sample_codebook, sample_codebook_iid};
use statrs::distribution::{Binomial, ChiSquared, ContinuousCDF, Discrete};

const SEED: u64 = 7_051_960;
const TRIALS: u64 = 2000;
// Two-sided screen; seeds are fixed, so this is a regression guard rather than a flaky test.
const MIN_P_VALUE: f64 = 1e-4;

/// Chi-square goodness of fit of observed sizes against Binomial(2^n, p),
/// merging bins until each expects at least five samples.
fn size_p_value(sizes: &[usize], n: u32, k: u32) -> f64 {
    let p = 0.5f64.powi((n - k - 1) as i32);
    let dist = Binomial::new(p, 1 << n).unwrap();
    let total = sizes.len() as f64;
    let max = 1usize << n;
    let mut observed = vec![0f64; max + 1];
    for &s in sizes {
        observed[s] += 1.0;
    }
    let mut bins: Vec<(f64, f64)> = Vec::new();
    let (mut o, mut e) = (0.0, 0.0);
    for s in 0..=max {
        o += observed[s];
        e += dist.pmf(s as u64) * total;
        if e >= 5.0 {
            bins.push((o, e));
            (o, e) = (0.0, 0.0);
        }
    }
    if let Some(last) = bins.last_mut() {
        last.0 += o;
        last.1 += e;
    }
    let stat: f64 = bins.iter().map(|(o, e)| (o - e) * (o - e) / e).sum();
    1.0 - ChiSquared::new((bins.len() - 1) as f64).unwrap().cdf(stat)
}

/// Chi-square test that every string is equally likely to be a member.
fn uniformity_p_value(hits: &[u64]) -> f64 {
    let total: u64 = hits.iter().sum();
    let e = total as f64 / hits.len() as f64;
    let stat: f64 = hits.iter().map(|&h| (h as f64 - e).powi(2) / e).sum();
    1.0 - ChiSquared::new((hits.len() - 1) as f64).unwrap().cdf(stat)
}

#[test]
fn binomial_sampler_matches_per_string_coins() {
    for (n, k) in [(8, 3), (10, 4)] {
        let mut hits = vec![0u64; 1 << n];
        let mut fast = Vec::new();
        let mut slow = Vec::new();
        for t in 0..TRIALS {
            let s = sample_codebook(n, k, SEED, t).unwrap();
            for &m in &s.members {
                hits[m as usize] += 1;
            }
            fast.push(s.len());
            slow.push(sample_codebook_iid(n, k, SEED, t).unwrap().len());
        }
        let pf = size_p_value(&fast, n, k);
        let ps = size_p_value(&slow, n, k);
        let pu = uniformity_p_value(&hits);
        assert!(pf > MIN_P_VALUE, "n={n} k={k}: binomial sampler sizes p = {pf}");
        assert!(ps > MIN_P_VALUE, "n={n} k={k}: per-string sampler sizes p = {ps}");
        assert!(pu > MIN_P_VALUE, "n={n} k={k}: membership uniformity p = {pu}");
    }
}

#[test]
fn sampled_members_are_distinct_and_in_range() {
    for t in 0..50 {
        let s = sample_codebook(12, 5, SEED, t).unwrap();
        assert!(s.members.windows(2).all(|w| w[0] < w[1]));
        assert!(s.members.iter().all(|&m| m < 1 << 12));
    }
}

#[test]
fn mean_codebook_size_is_twice_two_to_the_k() {
    let (n, k) = (16u32, 6u32);
    let p = 0.5f64.powi((n - k - 1) as i32);
    let sizes: Vec<f64> = (0..1000).map(|t| sample_codebook(n, k, SEED, t).unwrap().len() as f64).collect();
    let mean = sizes.iter().sum::<f64>() / sizes.len() as f64;
    let expected = (1u64 << n) as f64 * p;
    assert_eq!(expected, (1u64 << (k + 1)) as f64);
    let se = (expected * (1.0 - p) / sizes.len() as f64).sqrt();
    assert!((mean - expected).abs() < 5.0 * se, "mean {mean}, expected {expected}, se {se}");
}

#[test]
fn random_erasures_keep_exactly_k_positions() {
    let fam = codes::random_erasures(20, 7, 500, SEED, 3);
    let patterns = fam.patterns().unwrap();
    assert_eq!(patterns.len(), 500);
    for xi in patterns {
        assert_eq!(xi.known(), 7);
        assert_eq!(xi.kept & !xi.mask, 0);
    }
}

#[test]
fn trials_are_reproducible_from_the_seed() {
    let a = codes::run_trials(16, 6, 256, 8, SEED, 6).unwrap();
    let b = codes::run_trials(16, 6, 256, 8, SEED, 6).unwrap();
    assert_eq!(a, b);
    let c = codes::run_trials(16, 6, 256, 8, SEED + 1, 6).unwrap();
    assert_ne!(a.trials, c.trials);
}
