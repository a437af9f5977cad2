//! Experiment configuration and report builders.
//!
//! Each builder is a pure function of the lab (machine config) and its
//! parameters, so identical inputs give byte-identical reports.

use std::collections::BTreeMap;
use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

use crate::antistochastic::{self, decode_from_omega, OmegaAdvice};
use crate::bits::{ceil_log2, BitString};
use crate::codes::{self, LossFamily, PartialString};
use crate::complexity::{Complexity, Domain, Lab};
use crate::error::{LabError, Result};
use crate::machine::{DescriptionMode, EnumOrder, MachineConfig};
use crate::profiles::{self, ReferenceCurves};
use crate::reconstruct::{self, prefix_split};
use crate::report::{fixed, Format, Report};
use crate::sets::SetBitmap;

pub const DEFAULT_SEED: u64 = 20_160_705;

#[derive(Debug, Clone, Default, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MachineSection {
    pub budget: Option<u32>,
    pub n_max: Option<u32>,
    pub l_max: Option<u32>,
    pub enum_order: Option<EnumOrder>,
}

impl MachineSection {
    pub fn apply(&self, mut cfg: MachineConfig) -> MachineConfig {
        if let Some(v) = self.budget {
            cfg.budget = v;
        }
        if let Some(v) = self.n_max {
            cfg.n_max = v;
        }
        if let Some(v) = self.l_max {
            cfg.l_max = v;
        }
        if let Some(v) = self.enum_order {
            cfg.enum_order = v;
        }
        cfg
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    pub n: Option<u32>,
    pub k: Option<u32>,
    pub eps: Option<u32>,
    pub d_thr: Option<u32>,
    pub trials: Option<u64>,
    pub seed: Option<u64>,
    pub family_size: Option<usize>,
    pub k_blocks: Option<u32>,
    pub n_block: Option<u32>,
    pub x: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub dir: Option<PathBuf>,
    pub format: Option<String>,
}

/// A plain-text (TOML) experiment description.
///
/// ```toml
/// [machine]
/// l_max = 18
/// [experiment]
/// name = "reconstruct"
/// [params]
/// n = 4
/// k = 2
/// ```
#[derive(Debug, Clone, Default, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub machine: MachineSection,
    #[serde(default)]
    pub experiment: ExperimentSection,
    #[serde(default)]
    pub params: Params,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSection {
    pub name: Option<String>,
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<ExperimentConfig> {
        toml::from_str(text).map_err(|e| LabError::Config(e.to_string()))
    }

    pub fn load(path: &std::path::Path) -> Result<ExperimentConfig> {
        ExperimentConfig::parse(&std::fs::read_to_string(path)?)
    }

    pub fn machine_config(&self) -> MachineConfig {
        self.machine.apply(MachineConfig::default())
    }

    pub fn format(&self) -> Result<Format> {
        self.output.format.as_deref().unwrap_or("csv").parse()
    }

    /// Runs the named experiment.
    pub fn run<M: DescriptionMode>(&self, lab: &Lab<M>) -> Result<Vec<Report>> {
        let p = &self.params;
        let seed = p.seed.unwrap_or(DEFAULT_SEED);
        let need = |v: Option<u32>, what: &str| v.ok_or_else(|| LabError::Config(format!("missing params.{what}")));
        let name = self.experiment.name.as_deref().ok_or_else(|| LabError::Config("missing experiment.name".into()))?;
        Ok(match name {
            "enumerate" => vec![enumerate_report(lab)],
            "profile" => {
                let x: BitString = p.x.as_deref().ok_or_else(|| LabError::Config("missing params.x".into()))?.parse()?;
                vec![profile_report(lab, &x)?]
            }
            "construct-anti" => vec![construct_report(lab, p.n, p.k)?],
            "census-anti" => census_reports(lab, need(p.n, "n")?)?,
            "reconstruct" => vec![reconstruct_report(lab, need(p.n, "n")?, need(p.k, "k")?, None)?],
            "holographic" => vec![holographic_report(lab, need(p.n, "n")?, need(p.k, "k")?)?],
            "ct" => vec![ct_report(lab, p.k_blocks.unwrap_or(2), p.n_block.unwrap_or(2))?],
            "codes-sample" => vec![sample_report(need(p.n, "n")?, need(p.k, "k")?, p.trials.unwrap_or(1), seed, lab.mode().config())?],
            "codes-trial" => trial_reports(
                need(p.n, "n")?,
                need(p.k, "k")?,
                p.family_size.unwrap_or(1 << 12),
                p.trials.unwrap_or(100),
                seed,
                lab.mode().config(),
            )?,
            "codes-bounds" => vec![bounds_report(p.n, p.k, p.family_size.map(|f| f as u64), lab.mode().config())?],
            "suite" => suite(lab, seed)?,
            other => return Err(LabError::Config(format!("unknown experiment {other:?}"))),
        })
    }
}

fn c_str(c: Complexity) -> String {
    c.to_string()
}

fn opt_str<T: ToString>(v: Option<T>) -> String {
    v.map_or_else(|| "none".to_string(), |v| v.to_string())
}

/// `Ω_i` for strings and for every bitmap universe.
pub fn enumerate_report<M: DescriptionMode>(lab: &Lab<M>) -> Report {
    let om = lab.omega();
    let mut cols = vec!["bound".to_string(), "omega".to_string()];
    cols.extend((0..om.sets.len()).map(|n| format!("omega_set_n{n}")));
    let col_refs: Vec<&str> = cols.iter().map(String::as_str).collect();
    let mut r = Report::new("enumerate", lab.mode().config(), &col_refs);
    for i in 0..=lab.l_max() {
        let mut row = vec![i.to_string(), om.omega(i).to_string()];
        row.extend(om.sets.iter().map(|s| s[i as usize].to_string()));
        r.push(row);
    }
    r.note("halting_runs", lab.stream().events().len());
    r.note("distinct_outputs", lab.unconditional().len());
    r
}

/// Profile curve with `P_min`/`P_max` reference rows.
pub fn profile_report<M: DescriptionMode>(lab: &Lab<M>, x: &BitString) -> Result<Report> {
    let sf = profiles::profile(lab, x)?;
    let mut r = Report::new("profile", lab.mode().config(), &["series", "l", "m", "slack_vs_min"]);
    let k = sf.k_bits()?;
    let refs = ReferenceCurves { n: sf.n, k };
    for l in 0..=sf.n {
        let slack = match sf.h(l) {
            Complexity::Bits(m) => (m as i64 - refs.h_min(l) as i64).to_string(),
            Complexity::Overflow => "overflow".into(),
        };
        r.push(vec!["profile".into(), l.to_string(), c_str(sf.h(l)), slack]);
    }
    for l in 0..=sf.n {
        r.push(vec!["p_min".into(), l.to_string(), refs.h_min(l).to_string(), "0".into()]);
    }
    for l in 0..=sf.n {
        let slack = refs.h_max(l) as i64 - refs.h_min(l) as i64;
        r.push(vec!["p_max".into(), l.to_string(), refs.h_max(l).to_string(), slack.to_string()]);
    }
    let s = profiles::slack(&sf)?;
    r.note("x", x);
    r.note("n", sf.n);
    r.note("k", k);
    r.note("epsilon_star", profiles::deficiency(&sf)?);
    r.note("delta_max", opt_str(s.delta_max));
    r.note("above_min", opt_str(s.above_min));
    r.note("split_slack", opt_str(s.split.map(|v| if v == i64::MAX { "overflow".into() } else { v.to_string() })));
    Ok(r)
}

/// Constructions for one `(n, k)` or, when either is absent, every `1 <= k <= n <= 5`.
pub fn construct_report<M: DescriptionMode>(lab: &Lab<M>, n: Option<u32>, k: Option<u32>) -> Result<Report> {
    let mut r = Report::new(
        "construct-anti",
        lab.mode().config(),
        &["n", "k", "x", "c_x", "epsilon_star", "c_singleton", "family_size", "family_cap", "union_size", "lemma3"],
    );
    let pairs: Vec<(u32, u32)> = match (n, k) {
        (Some(n), Some(k)) => vec![(n, k)],
        (Some(n), None) => (1..=n).map(|k| (n, k)).collect(),
        _ => (1..=antistochastic::MAX_CONSTRUCT_N).flat_map(|n| (1..=n).map(move |k| (n, k))).collect(),
    };
    let mut all_ok = true;
    for (n, k) in pairs {
        let c = antistochastic::construct(lab, n, k)?;
        all_ok &= c.union_size < 1 << n && !c.c_singleton.less_than(k) && c.lemma3;
        r.push(vec![
            n.to_string(),
            k.to_string(),
            c.x.to_string(),
            c_str(c.c_x),
            opt_str(c.epsilon_star),
            c_str(c.c_singleton),
            c.family_size.to_string(),
            ((1u64 << k) - 1).to_string(),
            c.union_size.to_string(),
            c.lemma3.to_string(),
        ]);
    }
    r.note("all_invariants_hold", all_ok);
    Ok(r)
}

/// Census rows plus the `(k, ε)` count table.
pub fn census_reports<M: DescriptionMode>(lab: &Lab<M>, n: u32) -> Result<Vec<Report>> {
    let c = antistochastic::census(lab, n)?;
    let cfg = lab.mode().config();
    let mut rows = Report::new("census-anti", cfg, &["x", "k", "epsilon_star", "c_singleton"]);
    for row in &c.rows {
        rows.push(vec![row.x.to_string(), c_str(row.k), opt_str(row.epsilon_star), c_str(row.c_singleton)]);
    }
    rows.note("n", n);
    rows.note("overflow_rows", c.overflow);
    let mut counts = Report::new("census-anti-counts", cfg, &["k", "epsilon", "count", "bound_2_pow_eps"]);
    let mut monotone = true;
    for (&(k, e), &count) in &c.counts {
        if e > 0 && c.counts[&(k, e - 1)] > count {
            monotone = false;
        }
        counts.push(vec![k.to_string(), e.to_string(), count.to_string(), (1u64 << e.min(63)).to_string()]);
    }
    counts.note("n", n);
    counts.note("monotone_in_epsilon", monotone);
    Ok(vec![rows, counts])
}

/// Exhaustive Ω-advice round trip for every `k <= max_k`.
pub fn omega_roundtrip_report<M: DescriptionMode>(lab: &Lab<M>, max_k: u32) -> Result<Report> {
    let mut r = Report::new("omega-roundtrip", lab.mode().config(), &["k", "omega_k", "strings", "failures", "c_given_omega_max"]);
    let mut total_failures = 0;
    for k in 0..=max_k.min(lab.l_max()) {
        let om = lab.omega().omega(k);
        let mut failures = 0u64;
        let mut strings = 0u64;
        let mut worst = Complexity::Bits(0);
        for (x, c, _) in lab.unconditional().iter() {
            if c > k {
                continue;
            }
            strings += 1;
            let adv = OmegaAdvice::for_string(lab, &x, k)?;
            if decode_from_omega(lab, om, adv)? != x {
                failures += 1;
            }
            if k <= 10 {
                worst = worst.max(antistochastic::complexity_given_omega(lab, &x, k)?);
            }
        }
        total_failures += failures;
        r.push(vec![k.to_string(), om.to_string(), strings.to_string(), failures.to_string(), c_str(worst)]);
    }
    r.note("failures", total_failures);
    Ok(r)
}

/// Every set `A ∋ x` over `{0,1}^n` with `|A| <= cap`, by increasing mask.
pub fn sets_containing(n: u32, x: u64, cap: u64) -> Result<Vec<SetBitmap>> {
    if n > 4 {
        return Err(LabError::Infeasible(format!("listing all subsets of {{0,1}}^{n} is infeasible")));
    }
    Ok(SetBitmap::all_containing(n, x).filter(|a| a.len() <= cap).collect())
}

/// Advice decoding of `x* = construct(n, k)` from every admissible set (or the given ones).
pub fn reconstruct_report<M: DescriptionMode>(lab: &Lab<M>, n: u32, k: u32, sets: Option<Vec<SetBitmap>>) -> Result<Report> {
    let con = antistochastic::construct(lab, n, k)?;
    let x = con.x;
    let sets = match sets {
        Some(s) => s,
        None => sets_containing(n, x.value() as u64, 1 << (n - k))?,
    };
    let mut r = Report::new(
        "reconstruct",
        lab.mode().config(),
        &["set", "size", "c_set", "path", "advice_bits", "cover_bits", "omega_bits", "case1", "cover_k", "b_size", "ok"],
    );
    let mut ok_count = 0;
    let mut hist: BTreeMap<usize, u64> = BTreeMap::new();
    for a in &sets {
        let opts = reconstruct::advice_options(lab, &x, a, k)?;
        let best = opts.best();
        let ok = reconstruct::reconstruct(lab, a, &best).ok() == Some(x)
            && reconstruct::reconstruct(lab, a, &opts.cover).ok() == Some(x)
            && opts.omega.is_none_or(|o| reconstruct::reconstruct(lab, a, &o).ok() == Some(x));
        ok_count += ok as usize;
        *hist.entry(best.bit_len()).or_insert(0) += 1;
        let reconstruct::Advice::Cover { k_cover, .. } = opts.cover else { unreachable!("cover advice") };
        let b = reconstruct::cover_set(n, &reconstruct::cover_family(lab, a, k)?, k_cover);
        r.push(vec![
            a.to_hex(),
            a.len().to_string(),
            c_str(lab.c_set(a)),
            if best.is_omega() { "omega".into() } else { "cover".into() },
            best.bit_len().to_string(),
            opts.cover.bit_len().to_string(),
            opt_str(opts.omega.map(|o| o.bit_len())),
            opt_str(opts.case1),
            k_cover.to_string(),
            b.len().to_string(),
            ok.to_string(),
        ]);
    }
    r.note("x", x);
    r.note("k", k);
    r.note("sets", sets.len());
    r.note("succeeded", ok_count);
    if let Some(eps) = con.epsilon_star {
        let reference = 2 * eps + ceil_log2(lab.l_max() as u64 + 1) + ceil_log2(n as u64 + 1);
        r.note("reference_2eps_plus_logs", reference);
    }
    for (bits, count) in hist {
        r.note(&format!("advice_bits_{bits:03}"), count);
    }
    Ok(r)
}

/// `|{(N, Ω)}|` fuzzed prefix splits, all identities checked.
pub fn prefix_split_report(config: &MachineConfig, pairs: u64, seed: u64) -> Result<Report> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut failures = 0u64;
    let mut by_l: BTreeMap<u32, u64> = BTreeMap::new();
    for _ in 0..pairs {
        let omega = rng.random_range(1..=1u64 << 40);
        let n = rng.random_range(1..=omega);
        let s = prefix_split(n, omega)?;
        failures += !s.check(n, omega) as u64;
        *by_l.entry(s.l).or_insert(0) += 1;
    }
    let mut r = Report::new("prefix-split", config, &["l", "pairs"]);
    for (l, c) in by_l {
        r.push(vec![l.to_string(), c.to_string()]);
    }
    r.note("pairs", pairs);
    r.note("seed", seed);
    r.note("failures", failures);
    Ok(r)
}

/// Per-string `eps_holo` with census counts over ε.
pub fn holographic_report<M: DescriptionMode>(lab: &Lab<M>, n: u32, k: u32) -> Result<Report> {
    let table = codes::holo_table(lab, n, k)?;
    let mut r = Report::new("holographic", lab.mode().config(), &["x", "eps_holo"]);
    for (x, e) in &table {
        r.push(vec![x.to_string(), c_str(*e)]);
    }
    let mut previous = 0;
    let mut monotone = true;
    for eps in 0..=lab.l_max() + 1 {
        let count = table.iter().filter(|(_, e)| e.less_than(eps)).count();
        monotone &= count >= previous;
        previous = count;
        r.note(&format!("census_eps_{eps:02}"), count);
    }
    r.note("n", n);
    r.note("k", k);
    r.note("benchmark_2_pow_k", 1u64 << k);
    r.note("monotone_in_epsilon", monotone);
    Ok(r)
}

/// List-size bounds for `decode_list` and `threshold_codebook` over a grid.
pub fn list_bounds_report<M: DescriptionMode>(lab: &Lab<M>, max_n: u32) -> Result<Report> {
    let mut r = Report::new("list-bounds", lab.mode().config(), &["kind", "n", "k", "param", "calls", "max_list", "bound", "ok"]);
    let eps_grid = [0, 1, 3, 6, 9, 12, 13, 15, 18, 19];
    let mut all_ok = true;
    for n in 1..=max_n {
        for &eps in &eps_grid {
            let mut max_list = 0usize;
            let mut calls = 0;
            let mut ok = true;
            for x in BitString::all_of_len(n) {
                for mask in 0..1u64 << n {
                    match codes::decode_list(lab, &PartialString::new(&x, mask), eps) {
                        Ok(list) => max_list = max_list.max(list.len()),
                        Err(LabError::Invariant(_)) => ok = false,
                        Err(e) => return Err(e),
                    }
                    calls += 1;
                }
            }
            all_ok &= ok;
            let bound = (1u64 << eps) - 1;
            r.push(vec![
                "decode_list".into(),
                n.to_string(),
                "-".into(),
                eps.to_string(),
                calls.to_string(),
                max_list.to_string(),
                bound.to_string(),
                ok.to_string(),
            ]);
        }
        for k in 1..=n {
            let fam = codes::erasure_family(n, k)?;
            for d in 0..=lab.l_max() + 1 {
                let (max_list, ok, size) = match codes::threshold_codebook(lab, &fam, d) {
                    Ok(s) => {
                        let hits = fam.to_explicit()?.intersections(&s);
                        (hits.into_iter().max().unwrap_or(0) as usize, true, s.len())
                    }
                    Err(LabError::Invariant(_)) => (0, false, 0),
                    Err(e) => return Err(e),
                };
                all_ok &= ok;
                r.push(vec![
                    format!("threshold(|S|={size})"),
                    n.to_string(),
                    k.to_string(),
                    d.to_string(),
                    fam.len().to_string(),
                    max_list.to_string(),
                    ((1u64 << d) - 1).to_string(),
                    ok.to_string(),
                ]);
            }
        }
    }
    r.note("all_bounds_hold", all_ok);
    Ok(r)
}

/// Sizes of sampled codebooks against `2^(k+1)`.
pub fn sample_report(n: u32, k: u32, trials: u64, seed: u64, config: &MachineConfig) -> Result<Report> {
    let mut r = Report::new("codes-sample", config, &["trial", "size"]);
    let mut sizes = Vec::new();
    for t in 0..trials {
        let s = codes::sample_codebook(n, k, seed, t)?;
        sizes.push(s.len() as f64);
        r.push(vec![t.to_string(), s.len().to_string()]);
    }
    let mean = sizes.iter().sum::<f64>() / sizes.len().max(1) as f64;
    let p = 0.5f64.powi((n - k - 1) as i32);
    let sigma = (2f64.powi(n as i32) * p * (1.0 - p)).sqrt();
    r.note("n", n);
    r.note("k", k);
    r.note("seed", seed);
    r.note("expected_size", 1u64 << (k + 1));
    r.note("mean_size", fixed(mean));
    r.note("std_error", fixed(sigma / (trials.max(1) as f64).sqrt()));
    Ok(r)
}

/// One sampled codebook against a family: full histogram.
pub fn verify_report(n: u32, k: u32, family_size: usize, seed: u64, trial: u64, config: &MachineConfig) -> Result<Report> {
    let s = codes::sample_codebook(n, k, seed, trial)?;
    let family = if n <= 6 && family_size == 0 { codes::erasure_family(n, k)? } else {
        codes::random_erasures(n, k, family_size, seed, trial)
    };
    let v = codes::verify_codebook(&s, &family, codes::default_list_bound(family.len()));
    let mut r = Report::new("codes-verify", config, &["intersection", "members"]);
    for (i, c) in v.histogram.iter().enumerate() {
        r.push(vec![i.to_string(), c.to_string()]);
    }
    r.note("size", v.size);
    r.note("size_ok", v.size_ok);
    r.note("max_intersection", v.max_intersection);
    r.note("list_bound", v.list_bound);
    r.note("all_bounded", v.all_bounded);
    r.note("seed", seed);
    r.note("trial", trial);
    Ok(r)
}

/// Monte-Carlo trials and the empirical intersection tail.
pub fn trial_reports(n: u32, k: u32, family_size: usize, trials: u64, seed: u64, config: &MachineConfig) -> Result<Vec<Report>> {
    let summary = codes::run_trials(n, k, family_size, trials, seed, 16)?;
    let mut t = Report::new("codes-trial", config, &["trial", "size", "size_ok", "max_intersection", "all_bounded", "success"]);
    for o in &summary.trials {
        t.push(vec![
            o.trial.to_string(),
            o.report.size.to_string(),
            o.report.size_ok.to_string(),
            o.report.max_intersection.to_string(),
            o.report.all_bounded.to_string(),
            o.success.to_string(),
        ]);
    }
    t.note("n", n);
    t.note("k", k);
    t.note("family_size", family_size);
    t.note("list_bound", summary.list_bound);
    t.note("seed", seed);
    t.note("success_fraction", fixed(summary.success_fraction));
    t.note("mean_size", fixed(summary.mean_size));
    let mut tail = Report::new(
        "codes-tail",
        config,
        &["i", "frequency", "std_error", "stated_bound", "stated_plus_3se", "within_stated", "exact_bound", "within_exact"],
    );
    for row in &summary.tail {
        let allowance = 3.0 * row.std_error;
        tail.push(vec![
            row.i.to_string(),
            fixed(row.frequency),
            fixed(row.std_error),
            fixed(row.stated_bound),
            fixed(row.stated_bound + allowance),
            (row.frequency <= row.stated_bound + allowance).to_string(),
            fixed(row.exact_bound),
            (row.frequency <= row.exact_bound + allowance).to_string(),
        ]);
    }
    tail.note("n", n);
    tail.note("k", k);
    tail.note("sampling_p", format!("2^-{}", n - k - 1));
    Ok(vec![t, tail])
}

/// Exact bounds for one `(n, k)` or the whole grid `2 <= k <= n - 2 <= 38`.
pub fn bounds_report(n: Option<u32>, k: Option<u32>, family_size: Option<u64>, config: &MachineConfig) -> Result<Report> {
    let mut r = Report::new(
        "codes-bounds",
        config,
        &["n", "k", "sigma2", "sigma2_ok", "chebyshev", "chebyshev_le_quarter", "chain_links", "chain_ok", "sampling_p_ok", "union_ok", "union_at_sampling_p_ok"],
    );
    let pairs: Vec<(u32, u32)> = match (n, k) {
        (Some(n), Some(k)) => vec![(n, k)],
        _ => (4..=40).flat_map(|n| (2..=n - 2).map(move |k| (n, k))).collect(),
    };
    let mut violations = 0u64;
    let mut links = 0u64;
    for (n, k) in pairs {
        let fam = family_size.unwrap_or(1 << k.min(62));
        let b = codes::analytic_bounds(n, k, fam)?;
        violations += !b.sigma2_ok as u64 + b.chain.iter().filter(|c| !c.holds).count() as u64;
        links += b.chain.len() as u64;
        r.push(vec![
            n.to_string(),
            k.to_string(),
            b.sigma2.clone(),
            b.sigma2_ok.to_string(),
            b.chebyshev.clone(),
            b.chebyshev_at_most_quarter.to_string(),
            b.chain.len().to_string(),
            b.chain_ok.to_string(),
            b.chain.iter().all(|c| c.at_sampling_p_holds).to_string(),
            b.union_bound_ok.to_string(),
            b.union_bound_at_sampling_p_ok.to_string(),
        ]);
    }
    r.note("chain_links_checked", links);
    r.note("violations", violations);
    Ok(r)
}

/// Blocks of an antistochastic string: plain versus total conditional complexity.
pub fn ct_report<M: DescriptionMode>(lab: &Lab<M>, k_blocks: u32, n_block: u32) -> Result<Report> {
    let n = k_blocks * n_block;
    if k_blocks < 2 || n_block == 0 {
        return Err(LabError::InvalidArgument("need at least 2 non-empty blocks".into()));
    }
    if n > antistochastic::MAX_CONSTRUCT_N || (k_blocks - 1) * n_block > 12 {
        return Err(LabError::Infeasible(format!("{k_blocks} blocks of {n_block} bits exceed the exhaustive cutoff")));
    }
    let con = antistochastic::construct(lab, n, n_block.min(n))?;
    let x = con.x;
    let blocks: Vec<BitString> = (0..k_blocks).map(|i| x.slice(i * n_block, n_block)).collect();
    let mut r = Report::new(
        "ct",
        lab.mode().config(),
        &["target", "condition", "domain_bits", "c_cond", "ct", "gap", "image_size", "image_ok"],
    );
    let mut dominance = true;
    let mut max_gap: Option<i64> = None;
    let mut row = |r: &mut Report, target: usize, cond_label: String, y: BitString, domain_bits: u32| -> Result<()> {
        let domain = Domain::FixedLength(domain_bits);
        let c = lab.c_cond(&blocks[target], &y)?;
        let ct = lab.ct(&blocks[target], &y, &domain)?;
        dominance &= ct >= c;
        let gap = match (c, ct) {
            (Complexity::Bits(a), Complexity::Bits(b)) => {
                let g = b as i64 - a as i64;
                max_gap = Some(max_gap.map_or(g, |m| m.max(g)));
                g.to_string()
            }
            _ => "overflow".into(),
        };
        let (image_size, image_ok) = match lab.ct_table(&y, &domain)?.witness(&blocks[target]) {
            Some(p) => {
                let image: std::collections::BTreeSet<BitString> =
                    domain.elements().iter().filter_map(|d| lab.mode().run(p, d).output()).collect();
                let ok = image.len() as u64 <= domain.size() && image.contains(&blocks[target]);
                (image.len().to_string(), ok.to_string())
            }
            None => ("none".into(), "true".into()),
        };
        r.push(vec![format!("x{}", target + 1), cond_label, domain_bits.to_string(), c_str(c), c_str(ct), gap, image_size, image_ok]);
        Ok(())
    };
    for i in 0..k_blocks as usize {
        for j in 0..k_blocks as usize {
            if i != j {
                row(&mut r, i, format!("x{}", j + 1), blocks[j], n_block)?;
            }
        }
        let rest = blocks
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != i)
            .fold(BitString::EMPTY, |acc, (_, b)| acc.concat(b));
        if k_blocks > 2 {
            row(&mut r, i, "rest".into(), rest, (k_blocks - 1) * n_block)?;
        }
    }

    // Symmetry of information with total programs on both sides.
    let unconditional = Domain::Strings(vec![BitString::EMPTY]);
    let ct_x1 = lab.ct(&blocks[0], &BitString::EMPTY, &unconditional)?;
    let ct_x = lab.ct(&x, &BitString::EMPTY, &unconditional)?;
    let ct_x1_given_x = lab.ct(&blocks[0], &x, &Domain::FixedLength(n))?;
    let ct_x_given_x1 = lab.ct(&x, &blocks[0], &Domain::FixedLength(n_block))?;
    let diff = |a: Complexity, b: Complexity| match (a, b) {
        (Complexity::Bits(a), Complexity::Bits(b)) => (a as i64 - b as i64).to_string(),
        _ => "overflow".into(),
    };

    // Any gap at all between the two complexities on blocks of this size.
    let mut gap_pairs = 0;
    for a in BitString::all_of_len(n_block) {
        for y in BitString::all_of_len(n_block) {
            let c = lab.c_cond(&a, &y)?;
            let ct = lab.ct(&a, &y, &Domain::FixedLength(n_block))?;
            gap_pairs += (ct > c) as u32;
        }
    }

    r.note("x", x);
    r.note("k_blocks", k_blocks);
    r.note("n_block", n_block);
    r.note("dominance_ok", dominance);
    r.note("max_gap", opt_str(max_gap));
    r.note("positive_gap", max_gap.is_some_and(|g| g > 0));
    r.note("ct_x1", c_str(ct_x1));
    r.note("ct_x1_given_x", c_str(ct_x1_given_x));
    r.note("ct_x", c_str(ct_x));
    r.note("ct_x_given_x1", c_str(ct_x_given_x1));
    r.note("sym_ct_x1_minus_ct_x1_given_x", diff(ct_x1, ct_x1_given_x));
    r.note("sym_ct_x_minus_ct_x_given_x1", diff(ct_x, ct_x_given_x1));
    r.note("block_pairs_with_any_gap", gap_pairs);
    Ok(r)
}

/// The reports behind every acceptance criterion, in criterion order.
pub fn suite<M: DescriptionMode>(lab: &Lab<M>, seed: u64) -> Result<Vec<Report>> {
    let cfg = lab.mode().config();
    let mut out = vec![construct_report(lab, None, None)?, omega_roundtrip_report(lab, 10)?];
    out.push(reconstruct_report(lab, 4, 2, None)?);
    out.push(prefix_split_report(cfg, 100_000, seed)?);
    out.push(holographic_report(lab, 4, 4)?);
    for n in 1..=4 {
        for k in 0..=n {
            if (n, k) != (4, 4) {
                out.push(holographic_report(lab, n, k)?);
            }
        }
    }
    out.push(list_bounds_report(lab, 4)?);
    out.push(bounds_report(None, None, None, cfg)?);
    out.extend(trial_reports(24, 10, 1 << 12, 100, seed, cfg)?);
    out.push(ct_report(lab, 2, 2)?);
    Ok(out)
}

/// Loss family for `codes verify` on small universes.
pub fn small_family(n: u32, k: u32) -> Result<LossFamily> {
    codes::erasure_family(n, k)?.to_explicit()
}
