//! `aslab`: command-line front end for the laboratory.
//!
//! Exit codes: 0 success, 1 invariant violation, 2 infeasible or invalid
//! parameters, 3 cache error.

use std::path::PathBuf;
use std::process::ExitCode;

use aslab::cache::{FileStatus, TableCache, CACHE_DIR_ENV};
use aslab::codes;
use aslab::experiment::{self, ExperimentConfig, DEFAULT_SEED};
use aslab::machine::{EnumOrder, MachineConfig};
use aslab::report::{Format, Report};
use aslab::{BitString, DescriptionMode, Lab, LabError, Result, SetBitmap, Tvm1};
use clap::{Args, Parser, Subcommand};

const DEFAULT_CACHE_DIR: &str = ".aslab-cache";

#[derive(Parser)]
#[command(name = "aslab", version, about = "Exact algorithmic statistics on the TVM-1 machine")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Longest enumerated program in bits (at most 24).
    #[arg(long, global = true)]
    l_max: Option<u32>,
    /// Step budget T.
    #[arg(long, global = true)]
    budget: Option<u32>,
    /// Output cap N_max in bits (at most 64).
    #[arg(long, global = true)]
    n_max: Option<u32>,
    /// Enumeration order: dovetail or length-lex.
    #[arg(long, global = true)]
    enum_order: Option<EnumOrder>,
    /// TOML experiment file; its [machine] section sets defaults for the flags above.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Table cache directory (default: $ASLAB_CACHE_DIR, else .aslab-cache).
    #[arg(long, global = true)]
    cache_dir: Option<PathBuf>,
    /// Report format: csv or json.
    #[arg(long, global = true, default_value = "csv")]
    format: String,
    /// Directory to write reports into instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Ω tables for strings and bitmap universes.
    Enumerate,
    /// Profile of a string with P_min/P_max reference rows.
    Profile {
        #[arg(long)]
        x: BitString,
    },
    /// The exclusion construction for one (n, k), or all of them.
    ConstructAnti {
        #[arg(long)]
        n: Option<u32>,
        #[arg(long)]
        k: Option<u32>,
    },
    /// Deficiency of every string of length n.
    CensusAnti {
        #[arg(long)]
        n: u32,
    },
    /// Recover the constructed string from small sets plus advice.
    Reconstruct {
        #[arg(long)]
        n: u32,
        #[arg(long)]
        k: u32,
        /// Every admissible set (the default).
        #[arg(long, conflicts_with = "set")]
        all_sets: bool,
        /// One set, as the hex of its MSB-first bitmap.
        #[arg(long)]
        set: Option<String>,
    },
    /// Holographic deficiency of every string of length n.
    Holographic {
        #[arg(long)]
        n: u32,
        #[arg(long)]
        k: u32,
    },
    /// Plain versus total conditional complexity on the blocks of an antistochastic string.
    Ct {
        #[arg(long, default_value_t = 2)]
        k_blocks: u32,
        #[arg(long, default_value_t = 2)]
        n_block: u32,
    },
    /// Erasure codes.
    #[command(subcommand)]
    Codes(CodesCommand),
    /// Table cache administration.
    #[command(subcommand)]
    Cache(CacheCommand),
    /// Every report behind the acceptance criteria.
    Report {
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
    },
    /// Runs the experiment named in --config.
    Run,
}

#[derive(Subcommand)]
enum CodesCommand {
    /// Sizes of random codebooks.
    Sample {
        #[arg(long)]
        n: u32,
        #[arg(long)]
        k: u32,
        #[arg(long, default_value_t = 1)]
        trials: u64,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
    },
    /// Intersection histogram of one random codebook against a family.
    Verify {
        #[arg(long)]
        n: u32,
        #[arg(long)]
        k: u32,
        /// Random erasure members; 0 means the full erasure family (n <= 6).
        #[arg(long, default_value_t = 0)]
        family_size: usize,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        #[arg(long, default_value_t = 0)]
        trial: u64,
    },
    /// Monte-Carlo trials of the random construction.
    Trial {
        #[arg(long)]
        n: u32,
        #[arg(long)]
        k: u32,
        #[arg(long, default_value_t = 4096)]
        family_size: usize,
        #[arg(long, default_value_t = 100)]
        trials: u64,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
    },
    /// Exact rational bound checks for one (n, k) or the full grid.
    Bounds {
        #[arg(long, requires = "k")]
        n: Option<u32>,
        #[arg(long, requires = "n")]
        k: Option<u32>,
        #[arg(long)]
        family_size: Option<u64>,
    },
    /// Holographic and thresholded codebooks against the erasure family.
    Holographic {
        #[arg(long)]
        n: u32,
        #[arg(long)]
        k: u32,
        #[arg(long)]
        eps: u32,
    },
}

#[derive(Subcommand)]
enum CacheCommand {
    /// Builds and stores the unconditional table.
    Build,
    /// Re-derives digests and re-runs 1% of witnesses.
    Verify,
    /// Removes files that fail verification.
    Invalidate,
}

fn machine_config(g: &Global, file: Option<&ExperimentConfig>) -> Result<MachineConfig> {
    let mut cfg = file.map(|f| f.machine_config()).unwrap_or_default();
    if let Some(v) = g.l_max {
        cfg.l_max = v;
    }
    if let Some(v) = g.budget {
        cfg.budget = v;
    }
    if let Some(v) = g.n_max {
        cfg.n_max = v;
    }
    if let Some(v) = g.enum_order {
        cfg.enum_order = v;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn cache(g: &Global) -> Result<TableCache> {
    match &g.cache_dir {
        Some(dir) => TableCache::new(dir),
        None => TableCache::from_env(DEFAULT_CACHE_DIR),
    }
}

fn emit(reports: &[Report], format: Format, out: Option<&PathBuf>) -> Result<()> {
    let ext = match format {
        Format::Csv => "csv",
        Format::Json => "json",
    };
    for (i, r) in reports.iter().enumerate() {
        let text = r.render(format)?;
        match out {
            Some(dir) => {
                std::fs::create_dir_all(dir)?;
                std::fs::write(dir.join(format!("{i:02}-{}.{ext}", r.name)), text)?;
            }
            None => {
                if i > 0 {
                    println!();
                }
                print!("{text}");
            }
        }
    }
    Ok(())
}

fn codes_holographic(lab: &Lab, n: u32, k: u32, eps: u32) -> Result<Report> {
    let holo = codes::census_holographic(lab, n, k, eps)?;
    let family = codes::erasure_family(n, k)?;
    let mut r = Report::new("codes-holographic", lab.mode().config(), &["codebook", "param", "size", "max_list", "list_bound"]);
    let v = codes::verify_codebook(&holo, &family, (1u64 << eps) - 1);
    r.push(vec!["holographic".into(), eps.to_string(), holo.len().to_string(), v.max_intersection.to_string(), v.list_bound.to_string()]);
    for d in 0..=lab.l_max() + 1 {
        let s = codes::threshold_codebook(lab, &family, d)?;
        let v = codes::verify_codebook(&s, &family, (1u64 << d) - 1);
        r.push(vec!["threshold".into(), d.to_string(), s.len().to_string(), v.max_intersection.to_string(), v.list_bound.to_string()]);
    }
    r.note("n", n);
    r.note("k", k);
    r.note("benchmark_2_pow_k", 1u64 << k);
    Ok(r)
}

fn cache_report(lab_cfg: &MachineConfig, statuses: &[(PathBuf, FileStatus)], name: &str) -> Report {
    let mut r = Report::new(name, lab_cfg, &["file", "status", "entries", "audited"]);
    for (path, status) in statuses {
        let file = path.file_name().map(|f| f.to_string_lossy().into_owned()).unwrap_or_default();
        match status {
            FileStatus::Ok { entries, audited } => r.push(vec![file, "ok".into(), entries.to_string(), audited.to_string()]),
            FileStatus::Mismatch(why) => r.push(vec![file, format!("mismatch: {why}"), "-".into(), "-".into()]),
        }
    }
    r
}

fn run(cli: Cli) -> Result<()> {
    let file = cli.global.config.as_deref().map(ExperimentConfig::load).transpose()?;
    let cfg = machine_config(&cli.global, file.as_ref())?;
    let format: Format = cli.global.format.parse()?;
    let out = cli.global.out.as_ref();
    let cache = cache(&cli.global)?;
    let mode = Tvm1::new(cfg.clone())?;
    let lab = Lab::new(mode).with_cache(cache.clone());
    if !matches!(cli.command, Command::Cache(_)) {
        // Surface cache errors here; later lookups of this table assume it loads.
        lab.table(&BitString::EMPTY)?;
    }

    let reports = match cli.command {
        Command::Enumerate => vec![experiment::enumerate_report(&lab)],
        Command::Profile { x } => vec![experiment::profile_report(&lab, &x)?],
        Command::ConstructAnti { n, k } => vec![experiment::construct_report(&lab, n, k)?],
        Command::CensusAnti { n } => experiment::census_reports(&lab, n)?,
        Command::Reconstruct { n, k, set, .. } => {
            let sets = set.map(|hex| SetBitmap::from_hex(n, &hex).map(|s| vec![s])).transpose()?;
            vec![experiment::reconstruct_report(&lab, n, k, sets)?]
        }
        Command::Holographic { n, k } => vec![experiment::holographic_report(&lab, n, k)?],
        Command::Ct { k_blocks, n_block } => vec![experiment::ct_report(&lab, k_blocks, n_block)?],
        Command::Codes(c) => match c {
            CodesCommand::Sample { n, k, trials, seed } => vec![experiment::sample_report(n, k, trials, seed, &cfg)?],
            CodesCommand::Verify { n, k, family_size, seed, trial } => {
                vec![experiment::verify_report(n, k, family_size, seed, trial, &cfg)?]
            }
            CodesCommand::Trial { n, k, family_size, trials, seed } => {
                experiment::trial_reports(n, k, family_size, trials, seed, &cfg)?
            }
            CodesCommand::Bounds { n, k, family_size } => vec![experiment::bounds_report(n, k, family_size, &cfg)?],
            CodesCommand::Holographic { n, k, eps } => vec![codes_holographic(&lab, n, k, eps)?],
        },
        Command::Cache(c) => match c {
            CacheCommand::Build => {
                lab.table(&BitString::EMPTY)?;
                let statuses = cache.verify(lab.mode())?;
                vec![cache_report(&cfg, &statuses, "cache-build")]
            }
            CacheCommand::Verify => {
                let statuses = cache.verify(lab.mode())?;
                let bad: Vec<String> = statuses
                    .iter()
                    .filter(|(_, s)| matches!(s, FileStatus::Mismatch(_)))
                    .map(|(p, _)| p.display().to_string())
                    .collect();
                emit(&[cache_report(&cfg, &statuses, "cache-verify")], format, out)?;
                if let Some(first) = bad.first() {
                    return Err(LabError::CacheCorrupt { path: first.into(), reason: format!("{} file(s) failed verification", bad.len()) });
                }
                return Ok(());
            }
            CacheCommand::Invalidate => {
                let removed = cache.invalidate(lab.mode())?;
                let mut r = Report::new("cache-invalidate", &cfg, &["removed"]);
                for p in removed {
                    r.push(vec![p.display().to_string()]);
                }
                vec![r]
            }
        },
        Command::Report { seed } => experiment::suite(&lab, seed)?,
        Command::Run => {
            let file = file.ok_or_else(|| LabError::Config("run needs --config".into()))?;
            file.run(&lab)?
        }
    };
    emit(&reports, format, out)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("aslab: {e}");
            if matches!(e, LabError::CacheVersion { .. } | LabError::CacheCorrupt { .. }) {
                eprintln!("hint: `aslab cache invalidate` removes stale files (cache dir from --cache-dir or ${CACHE_DIR_ENV})");
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
