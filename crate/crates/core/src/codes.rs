//! Holographic strings, thresholded and random list-decodable codes for
//! erasures, and exact checks of the random construction's bounds.
//!
//! Positions are 1-based from the left. A position mask uses the same bit
//! orientation as string values: position `i` of an `n`-bit string is bit
//! `n - i` of the mask.
//!
//! Random codebooks use ChaCha8 seeded with the master seed; trial `t`
//! draws its codebook from stream `t` and its random family from stream
//! `t + 2^32`, so every number is reproducible from `(seed, t)`.

use num::bigint::BigInt;
use num::rational::BigRational;
use num::{One, ToPrimitive, Zero};
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::Serialize;

use crate::bits::BitString;
use crate::complexity::{outputs_shorter_than, Complexity, Lab};
use crate::error::{LabError, Result};
use crate::machine::DescriptionMode;
use crate::profiles::check_feasible;
use crate::sets::SetBitmap;

/// Largest length for holographic censuses.
pub const MAX_HOLO_N: u32 = 5;
/// Largest length for random codebooks.
pub const MAX_SAMPLE_N: u32 = 40;
/// Largest expected codebook size `2^(k+1)` that is materialized.
pub const MAX_SAMPLE_LOG_SIZE: u32 = 25;
/// Offset separating family streams from codebook streams.
const FAMILY_STREAM: u64 = 1 << 32;

fn low_mask(n: u32) -> u64 {
    if n == 64 { u64::MAX } else { (1u64 << n) - 1 }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct PartialString {
    pub n: u32,
    /// Known positions.
    pub mask: u64,
    /// Known bits, zero outside the mask.
    pub kept: u64,
}

impl PartialString {
    pub fn new(x: &BitString, mask: u64) -> PartialString {
        let mask = mask & low_mask(x.len());
        PartialString { n: x.len(), mask, kept: x.value() as u64 & mask }
    }

    /// Mask from 1-based positions.
    pub fn positions_mask(n: u32, positions: &[u32]) -> u64 {
        positions.iter().fold(0, |m, &i| {
            assert!((1..=n).contains(&i), "position {i} outside 1..={n}");
            m | 1u64 << (n - i)
        })
    }

    pub fn known(&self) -> u32 {
        self.mask.count_ones()
    }

    pub fn matches(&self, y: u64) -> bool {
        y & self.mask == self.kept
    }

    /// The set `{x' : x'_I = x_I}`.
    pub fn completions(&self) -> SetBitmap {
        SetBitmap::from_members(self.n, (0..1u64 << self.n).filter(|&y| self.matches(y)))
    }
}

/// Two bits per position: `00` is 0, `01` is 1, `10` is blank.
pub fn encode_partial(x: &BitString, mask: u64) -> BitString {
    let p = PartialString::new(x, mask);
    let mut out = BitString::EMPTY;
    for i in (0..p.n).rev() {
        if (p.mask >> i) & 1 == 1 {
            out.push(false);
            out.push((p.kept >> i) & 1 == 1);
        } else {
            out.push(true);
            out.push(false);
        }
    }
    out
}

/// Inverse of [`encode_partial`]; the unused pair `11` reads as blank.
pub fn decode_partial(enc: &BitString) -> Result<PartialString> {
    if enc.len() % 2 != 0 {
        return Err(LabError::Decode(format!("odd-length partial string encoding ({} bits)", enc.len())));
    }
    let n = enc.len() / 2;
    let (mut mask, mut kept) = (0u64, 0u64);
    for i in 0..n {
        mask <<= 1;
        kept <<= 1;
        if !enc.bit(2 * i) {
            mask |= 1;
            kept |= enc.bit(2 * i + 1) as u64;
        }
    }
    Ok(PartialString { n, mask, kept })
}

/// Every `n`-bit output of a program shorter than `eps` on `enc(x_I)`.
pub fn decode_list<M: DescriptionMode>(lab: &Lab<M>, xi: &PartialString, eps: u32) -> Result<Vec<BitString>> {
    let cond = encode_partial(&BitString::from_u64(xi.kept, xi.n), xi.mask);
    let list = outputs_shorter_than(&*lab.table(&cond)?, eps, xi.n);
    if list.len() as u64 > (1u64 << eps.min(63)) - 1 {
        return Err(LabError::Invariant(format!("{} candidates from programs shorter than {eps}", list.len())));
    }
    Ok(list)
}

/// All `k`-element position masks over `n` positions, increasing.
pub fn k_subsets(n: u32, k: u32) -> Vec<u64> {
    assert!(n <= 20, "too many position subsets");
    (0..1u64 << n).filter(|m| m.count_ones() == k).collect()
}

/// `max_I c_cond(x, enc(x_I))` over `|I| = k`.
pub fn eps_holo<M: DescriptionMode>(lab: &Lab<M>, x: &BitString, k: u32) -> Result<Complexity> {
    let mut worst = Complexity::Bits(0);
    for mask in k_subsets(x.len(), k) {
        worst = worst.max(lab.c_cond(x, &encode_partial(x, mask))?);
    }
    Ok(worst)
}

/// `C(x | x_I) < eps` for every `k`-element `I`.
pub fn is_holographic<M: DescriptionMode>(lab: &Lab<M>, x: &BitString, k: u32, eps: u32) -> Result<bool> {
    Ok(eps_holo(lab, x, k)?.less_than(eps))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum CodebookSource {
    Holographic { eps: u32 },
    Threshold { d_thr: u32 },
    Sampled { seed: u64, trial: u64 },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Codebook {
    pub n: u32,
    pub k: u32,
    /// Member values, increasing.
    pub members: Vec<u64>,
    pub source: CodebookSource,
}

impl Codebook {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, y: u64) -> bool {
        self.members.binary_search(&y).is_ok()
    }
}

/// `eps_holo` of every `n`-bit string, in lexicographic order.
pub fn holo_table<M: DescriptionMode>(lab: &Lab<M>, n: u32, k: u32) -> Result<Vec<(BitString, Complexity)>> {
    check_feasible(lab, n, MAX_HOLO_N)?;
    if k > n {
        return Err(LabError::InvalidArgument(format!("k = {k} exceeds n = {n}")));
    }
    let conditions: Vec<BitString> = BitString::all_of_len(n)
        .flat_map(|x| k_subsets(n, k).into_iter().map(move |m| encode_partial(&x, m)))
        .collect::<std::collections::BTreeSet<_>>()
        .into_iter()
        .collect();
    conditions.par_iter().try_for_each(|y| lab.table(y).map(drop))?;
    BitString::all_of_len(n).map(|x| Ok((x, eps_holo(lab, &x, k)?))).collect()
}

pub fn census_holographic<M: DescriptionMode>(lab: &Lab<M>, n: u32, k: u32, eps: u32) -> Result<Codebook> {
    let members = holo_table(lab, n, k)?
        .into_iter()
        .filter(|(_, e)| e.less_than(eps))
        .map(|(x, _)| x.value() as u64)
        .collect();
    Ok(Codebook { n, k, members, source: CodebookSource::Holographic { eps } })
}

/// A family of `2^(n-k)`-element subsets of `{0,1}^n`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum LossFamily {
    Explicit { n: u32, k: u32, sets: Vec<SetBitmap> },
    /// Every `{x' : x'_I = v}` with `|I| = k`.
    Erasure { n: u32, k: u32 },
    /// Listed erasure patterns `(mask, kept)`.
    Patterns { n: u32, k: u32, patterns: Vec<PartialString> },
}

pub fn erasure_family(n: u32, k: u32) -> Result<LossFamily> {
    if k > n || n > 64 {
        return Err(LabError::InvalidArgument(format!("need k <= n <= 64, got n = {n}, k = {k}")));
    }
    Ok(LossFamily::Erasure { n, k })
}

impl LossFamily {
    pub fn n(&self) -> u32 {
        match self {
            LossFamily::Explicit { n, .. } | LossFamily::Erasure { n, .. } | LossFamily::Patterns { n, .. } => *n,
        }
    }

    pub fn k(&self) -> u32 {
        match self {
            LossFamily::Explicit { k, .. } | LossFamily::Erasure { k, .. } | LossFamily::Patterns { k, .. } => *k,
        }
    }

    /// Generator members; `None` for explicit families.
    pub fn patterns(&self) -> Option<Vec<PartialString>> {
        match self {
            LossFamily::Explicit { .. } => None,
            LossFamily::Erasure { n, k } => Some(
                k_subsets(*n, *k)
                    .into_iter()
                    .flat_map(|mask| {
                        let bits: Vec<u32> = (0..*n).filter(|i| (mask >> i) & 1 == 1).collect();
                        (0..1u64 << k).map(move |v| {
                            let kept = bits.iter().enumerate().fold(0u64, |acc, (j, &b)| acc | ((v >> j) & 1) << b);
                            PartialString { n: *n, mask, kept }
                        })
                    })
                    .collect(),
            ),
            LossFamily::Patterns { patterns, .. } => Some(patterns.clone()),
        }
    }

    pub fn len(&self) -> usize {
        match self {
            LossFamily::Explicit { sets, .. } => sets.len(),
            LossFamily::Patterns { patterns, .. } => patterns.len(),
            LossFamily::Erasure { .. } => self.patterns().map_or(0, |p| p.len()),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Materialized bitmaps, deduplicated, in increasing order.
    pub fn to_explicit(&self) -> Result<LossFamily> {
        let (n, k) = (self.n(), self.k());
        if n > crate::sets::MAX_SET_N {
            return Err(LabError::Infeasible(format!("cannot materialize subsets of {{0,1}}^{n}")));
        }
        let mut sets: Vec<SetBitmap> = match self {
            LossFamily::Explicit { sets, .. } => sets.clone(),
            _ => self.patterns().unwrap().iter().map(|p| p.completions()).collect(),
        };
        sets.sort();
        sets.dedup();
        Ok(LossFamily::Explicit { n, k, sets })
    }

    /// `|A ∩ S|` for every member, in member order.
    pub fn intersections(&self, s: &Codebook) -> Vec<u64> {
        match self {
            LossFamily::Explicit { sets, .. } => {
                sets.par_iter().map(|a| s.members.iter().filter(|&&y| a.contains(y)).count() as u64).collect()
            }
            _ => self
                .patterns()
                .unwrap()
                .par_iter()
                .map(|p| s.members.iter().filter(|&&y| p.matches(y)).count() as u64)
                .collect(),
        }
    }
}

/// `{y : c_cond(y, bitmap(A)) < d_thr for every member A ∋ y}`.
pub fn threshold_codebook<M: DescriptionMode>(lab: &Lab<M>, family: &LossFamily, d_thr: u32) -> Result<Codebook> {
    let LossFamily::Explicit { n, k, sets } = family.to_explicit()? else { unreachable!() };
    let tables = sets.par_iter().map(|a| lab.table(&a.to_bitstring())).collect::<Result<Vec<_>>>()?;
    let members: Vec<u64> = (0..1u64 << n)
        .filter(|&y| {
            let ys = BitString::from_u64(y, n);
            sets.iter().zip(&tables).all(|(a, t)| !a.contains(y) || t.get(&ys).less_than(d_thr))
        })
        .collect();
    let book = Codebook { n, k, members, source: CodebookSource::Threshold { d_thr } };
    let cap = (1u64 << d_thr.min(63)) - 1;
    for a in &sets {
        let hits = book.members.iter().filter(|&&y| a.contains(y)).count() as u64;
        if hits > cap {
            return Err(LabError::Invariant(format!("{a} holds {hits} codewords, more than {cap}")));
        }
    }
    Ok(book)
}

fn check_sample_params(n: u32, k: u32) -> Result<()> {
    if n > MAX_SAMPLE_N || k + 2 > n {
        return Err(LabError::InvalidArgument(format!("need k <= n - 2 and n <= {MAX_SAMPLE_N}, got n = {n}, k = {k}")));
    }
    if k + 1 > MAX_SAMPLE_LOG_SIZE {
        return Err(LabError::Infeasible(format!("expected codebook size 2^{} is too large", k + 1)));
    }
    Ok(())
}

fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Every `n`-bit string independently with probability `2^-(n-k-1)`:
/// a binomial size, then a uniform subset of that size.
pub fn sample_codebook(n: u32, k: u32, seed: u64, trial: u64) -> Result<Codebook> {
    check_sample_params(n, k)?;
    let mut rng = rng_for(seed, trial);
    Ok(sample_with(&mut rng, n, k, CodebookSource::Sampled { seed, trial }))
}

fn sample_with(rng: &mut ChaCha8Rng, n: u32, k: u32, source: CodebookSource) -> Codebook {
    let p = 0.5f64.powi((n - k - 1) as i32);
    let size = Binomial::new(1u64 << n, p).expect("valid binomial").sample(rng);
    let mut members: Vec<u64> =
        index::sample(rng, 1usize << n, size as usize).into_iter().map(|v| v as u64).collect();
    members.sort_unstable();
    Codebook { n, k, members, source }
}

/// Same distribution as [`sample_codebook`], drawn one coin per string.
pub fn sample_codebook_iid(n: u32, k: u32, seed: u64, trial: u64) -> Result<Codebook> {
    check_sample_params(n, k)?;
    if n > 24 {
        return Err(LabError::Infeasible("per-string sampling is limited to n <= 24".into()));
    }
    let mut rng = rng_for(seed, trial);
    let p = 0.5f64.powi((n - k - 1) as i32);
    let members = (0..1u64 << n).filter(|_| rng.random_bool(p)).collect();
    Ok(Codebook { n, k, members, source: CodebookSource::Sampled { seed, trial } })
}

/// `family_size` random erasure patterns keeping `k` of `n` positions.
pub fn random_erasures(n: u32, k: u32, family_size: usize, seed: u64, trial: u64) -> LossFamily {
    let mut rng = rng_for(seed, trial + FAMILY_STREAM);
    let patterns = (0..family_size)
        .map(|_| {
            let mask = index::sample(&mut rng, n as usize, k as usize).into_iter().fold(0u64, |m, i| m | 1 << i);
            PartialString { n, mask, kept: rng.random::<u64>() & mask }
        })
        .collect();
    LossFamily::Patterns { n, k, patterns }
}

/// `ceil(log2 |family|) + 1`.
pub fn default_list_bound(family_size: usize) -> u64 {
    crate::bits::ceil_log2(family_size.max(1) as u64) as u64 + 1
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct VerifyReport {
    pub size: usize,
    pub size_ok: bool,
    pub max_intersection: u64,
    pub list_bound: u64,
    pub all_bounded: bool,
    /// `histogram[i]` = members holding exactly `i` codewords.
    pub histogram: Vec<u64>,
}

pub fn verify_codebook(s: &Codebook, family: &LossFamily, list_bound: u64) -> VerifyReport {
    let hits = family.intersections(s);
    let max_intersection = hits.iter().copied().max().unwrap_or(0);
    let mut histogram = vec![0u64; max_intersection as usize + 1];
    for h in hits {
        histogram[h as usize] += 1;
    }
    VerifyReport {
        size: s.len(),
        size_ok: s.len() as u64 >= 1 << s.k,
        max_intersection,
        list_bound,
        all_bounded: max_intersection <= list_bound,
        histogram,
    }
}

/// Codewords consistent with the unerased positions.
pub fn list_decode(s: &Codebook, xi: &PartialString) -> Vec<u64> {
    s.members.iter().copied().filter(|&y| xi.matches(y)).collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TrialOutcome {
    pub trial: u64,
    pub report: VerifyReport,
    pub success: bool,
}

pub fn run_trial(n: u32, k: u32, family_size: usize, list_bound: u64, seed: u64, trial: u64) -> Result<TrialOutcome> {
    let s = sample_codebook(n, k, seed, trial)?;
    let family = random_erasures(n, k, family_size, seed, trial);
    let report = verify_codebook(&s, &family, list_bound);
    let success = report.size_ok && report.all_bounded;
    Ok(TrialOutcome { trial, report, success })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TailRow {
    pub i: u32,
    /// Fraction of (trial, member) pairs with `|A ∩ S| >= i`.
    pub frequency: f64,
    pub std_error: f64,
    /// `2^-i`.
    pub stated_bound: f64,
    /// `C(2^(n-k), i) p^i` with the sampling probability actually used.
    pub exact_bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialSummary {
    pub n: u32,
    pub k: u32,
    pub family_size: usize,
    pub list_bound: u64,
    pub trials: Vec<TrialOutcome>,
    pub success_fraction: f64,
    pub mean_size: f64,
    pub tail: Vec<TailRow>,
}

pub fn run_trials(n: u32, k: u32, family_size: usize, trials: u64, seed: u64, max_i: u32) -> Result<TrialSummary> {
    let list_bound = default_list_bound(family_size);
    let outcomes =
        (0..trials).into_par_iter().map(|t| run_trial(n, k, family_size, list_bound, seed, t)).collect::<Result<Vec<_>>>()?;
    let success_fraction = outcomes.iter().filter(|o| o.success).count() as f64 / trials.max(1) as f64;
    let mean_size = outcomes.iter().map(|o| o.report.size as f64).sum::<f64>() / trials.max(1) as f64;
    let total = (trials as usize * family_size).max(1) as f64;
    let p = 0.5f64.powi((n - k - 1) as i32);
    let tail = (1..=max_i)
        .map(|i| {
            let at_least: u64 =
                outcomes.iter().map(|o| o.report.histogram.iter().skip(i as usize).sum::<u64>()).sum();
            let f = at_least as f64 / total;
            TailRow {
                i,
                frequency: f,
                std_error: (f * (1.0 - f) / total).sqrt(),
                stated_bound: 0.5f64.powi(i as i32),
                exact_bound: binomial_f64((n - k) as i32, i) * p.powi(i as i32),
            }
        })
        .collect();
    Ok(TrialSummary { n, k, family_size, list_bound, trials: outcomes, success_fraction, mean_size, tail })
}

/// `C(2^log_n, i)` as a float.
fn binomial_f64(log_n: i32, i: u32) -> f64 {
    let big = 2f64.powi(log_n);
    (0..i).fold(1.0, |acc, j| acc * (big - j as f64) / (j + 1) as f64)
}

fn pow2(e: i64) -> BigRational {
    let two = BigRational::from_integer(BigInt::from(2));
    if e >= 0 { num::pow(two, e as usize) } else { num::pow(two, (-e) as usize).recip() }
}

fn ratio_string(r: &BigRational) -> String {
    if r.denom().is_one() { r.numer().to_string() } else { format!("{}/{}", r.numer(), r.denom()) }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChainRow {
    pub i: u32,
    pub binomial_term: String,
    pub power_term: String,
    pub factorial_term: String,
    pub final_term: String,
    /// `binomial <= power = factorial <= final`, exactly.
    pub holds: bool,
    /// `C(2^(n-k), i) · p^i` with `p = 2^-(n-k-1)`.
    pub at_sampling_p: String,
    /// That value against `2^i / i!`.
    pub at_sampling_p_holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnalyticReport {
    pub n: u32,
    pub k: u32,
    pub sigma2: String,
    pub sigma2_ok: bool,
    /// `σ² / 2^(2k)`, the Chebyshev bound on `P(||S| - 2^(k+1)| >= 2^k)`.
    pub chebyshev: String,
    pub chebyshev_at_most_quarter: bool,
    pub chain: Vec<ChainRow>,
    pub chain_ok: bool,
    pub list_bound: u64,
    /// `2^-i / i!` at `i = list_bound`, against `1 / (2 |family|)`.
    pub union_bound_ok: bool,
    /// `2^i / i!` at `i = list_bound`, against `1 / (2 |family|)`.
    pub union_bound_at_sampling_p_ok: bool,
}

impl AnalyticReport {
    pub fn all_stated_ok(&self) -> bool {
        self.sigma2_ok && self.chain_ok
    }
}

/// Exact rational evaluation of the random construction's bounds.
pub fn analytic_bounds(n: u32, k: u32, family_size: u64) -> Result<AnalyticReport> {
    if n > MAX_SAMPLE_N || k < 2 || k + 2 > n {
        return Err(LabError::InvalidArgument(format!("need 2 <= k <= n - 2 <= 38, got n = {n}, k = {k}")));
    }
    let (n64, k64) = (n as i64, k as i64);
    let p = pow2(-(n64 - k64 - 1));
    let one = BigRational::one();
    let sigma2 = pow2(n64) * &p * (&one - &p);
    let sigma2_ok = sigma2 <= pow2(k64 + 1);
    let chebyshev = &sigma2 / pow2(2 * k64);
    let quarter = BigRational::new(BigInt::from(1), BigInt::from(4));

    let a_size = BigInt::from(1) << (n - k);
    let max_i = 64u64.min(1u64 << (n - k).min(63)) as u32;
    let q = pow2(-(n64 - k64 + 1));
    let mut binom = BigInt::one();
    let mut fact = BigInt::one();
    let mut chain = Vec::new();
    let mut chain_ok = true;
    for i in 1..=max_i {
        binom = binom * (&a_size - BigInt::from(i - 1)) / BigInt::from(i);
        fact *= BigInt::from(i);
        let qi = num::pow(q.clone(), i as usize);
        let binomial_term = BigRational::from_integer(binom.clone()) * &qi;
        let power_term =
            BigRational::from_integer(num::pow(a_size.clone(), i as usize)) / BigRational::from_integer(fact.clone()) * &qi;
        let factorial_term = pow2(-(i as i64)) / BigRational::from_integer(fact.clone());
        let final_term = pow2(-(i as i64));
        let holds = binomial_term <= power_term && power_term == factorial_term && factorial_term <= final_term;
        chain_ok &= holds;
        let at_p = BigRational::from_integer(binom.clone()) * num::pow(p.clone(), i as usize);
        let at_p_bound = pow2(i as i64) / BigRational::from_integer(fact.clone());
        chain.push(ChainRow {
            i,
            binomial_term: ratio_string(&binomial_term),
            power_term: ratio_string(&power_term),
            factorial_term: ratio_string(&factorial_term),
            final_term: ratio_string(&final_term),
            holds,
            at_sampling_p_holds: at_p <= at_p_bound,
            at_sampling_p: ratio_string(&at_p),
        });
    }

    let list_bound = default_list_bound(family_size as usize);
    let fact_at = (1..=list_bound).fold(BigInt::one(), |f, j| f * BigInt::from(j));
    let target = BigRational::new(BigInt::one(), BigInt::from(2) * BigInt::from(family_size.max(1)));
    let lb = list_bound as i64;
    let union_bound_ok = pow2(-lb) / BigRational::from_integer(fact_at.clone()) < target;
    let union_bound_at_sampling_p_ok = pow2(lb) / BigRational::from_integer(fact_at) < target;
    Ok(AnalyticReport {
        n,
        k,
        sigma2: ratio_string(&sigma2),
        sigma2_ok,
        chebyshev_at_most_quarter: chebyshev <= quarter,
        chebyshev: ratio_string(&chebyshev),
        chain,
        chain_ok,
        list_bound,
        union_bound_ok,
        union_bound_at_sampling_p_ok,
    })
}

/// Exact rational as a float, for summaries.
pub fn ratio_to_f64(s: &str) -> Option<f64> {
    let (a, b) = s.split_once('/').unwrap_or((s, "1"));
    let r = BigRational::new(a.parse().ok()?, b.parse().ok()?);
    if r.is_zero() { Some(0.0) } else { r.to_f64() }
}
