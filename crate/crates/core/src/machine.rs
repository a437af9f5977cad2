//! The fixed description mode: TVM-1, a 3-bit-opcode tape machine.
//!
//! A program is read as consecutive 3-bit opcodes; 1–2 trailing bits are
//! ignored, so every bit sequence is a valid program. The machine has an
//! output buffer and a read head `h` over the condition `y` (starting at 0).
//!
//! | code | name  | effect                                                    |
//! |------|-------|-----------------------------------------------------------|
//! | 000  | OUT0  | append 0                                                  |
//! | 001  | OUT1  | append 1                                                  |
//! | 010  | READ  | append `y[h]`, `h += 1`; no-op if `h >= |y|`              |
//! | 011  | SKIP  | `h += 1`; no-op if `h >= |y|`                             |
//! | 100  | CEND  | skip next opcode iff `h >= |y|`                           |
//! | 101  | CBIT  | skip next opcode iff `h < |y|` and `y[h] = 1`             |
//! | 110  | JBACK | continue at opcode `max(i - 3, 0)`, `i` = own index       |
//! | 111  | DUP   | output becomes output·output                              |
//!
//! Every executed opcode costs one step; skipped opcodes cost nothing. The
//! run halts when the program counter passes the last opcode. Exceeding the
//! step budget `T` or the output cap `N_max` is divergence.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::bits::{BitString, Program};
use crate::error::{LabError, Result};

pub const OUT0: u8 = 0b000;
pub const OUT1: u8 = 0b001;
pub const READ: u8 = 0b010;
pub const SKIP: u8 = 0b011;
pub const CEND: u8 = 0b100;
pub const CBIT: u8 = 0b101;
pub const JBACK: u8 = 0b110;
pub const DUP: u8 = 0b111;

pub const OPCODE_NAMES: [&str; 8] = ["OUT0", "OUT1", "READ", "SKIP", "CEND", "CBIT", "JBACK", "DUP"];

pub const VERSION_ID: &str = "TVM-1";
pub const CACHE_MAGIC: &[u8; 4] = b"ASLB";
pub const CACHE_FORMAT_VERSION: u8 = 1;
pub const L_MAX_HARD_CAP: u32 = 24;
/// Outputs are held in 64 bits so that conditions (`2 * N_max`) fit in 128.
pub const N_MAX_CAP: u32 = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum EnumOrder {
    /// Halting step ascending, then program length-lex.
    #[default]
    Dovetail,
    /// Program length-lex only.
    LengthLex,
}

impl EnumOrder {
    pub fn code(self) -> u8 {
        match self {
            EnumOrder::Dovetail => 0,
            EnumOrder::LengthLex => 1,
        }
    }

    pub fn from_code(code: u8) -> Option<EnumOrder> {
        match code {
            0 => Some(EnumOrder::Dovetail),
            1 => Some(EnumOrder::LengthLex),
            _ => None,
        }
    }
}

impl fmt::Display for EnumOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EnumOrder::Dovetail => "dovetail",
            EnumOrder::LengthLex => "length-lex",
        })
    }
}

impl FromStr for EnumOrder {
    type Err = LabError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dovetail" => Ok(EnumOrder::Dovetail),
            "length-lex" | "lengthlex" => Ok(EnumOrder::LengthLex),
            _ => Err(LabError::InvalidArgument(format!("unknown enumeration order {s:?}"))),
        }
    }
}

/// Resource bounds of the machine. These replace uncomputability: every
/// complexity in this crate is relative to one `MachineConfig`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MachineConfig {
    pub version_id: String,
    /// Step budget: maximal number of executed opcodes.
    pub budget: u32,
    /// Output cap in bits.
    pub n_max: u32,
    /// Longest enumerated program, in bits.
    pub l_max: u32,
    pub enum_order: EnumOrder,
}

impl Default for MachineConfig {
    fn default() -> Self {
        MachineConfig {
            version_id: VERSION_ID.to_string(),
            budget: 256,
            n_max: 64,
            l_max: 18,
            enum_order: EnumOrder::Dovetail,
        }
    }
}

impl MachineConfig {
    pub fn validate(&self) -> Result<()> {
        if self.version_id.is_empty() || self.version_id.len() > 255 {
            return Err(LabError::Config("version_id must be 1..=255 bytes".into()));
        }
        if self.budget == 0 {
            return Err(LabError::Config("step budget must be positive".into()));
        }
        if self.n_max == 0 || self.n_max > N_MAX_CAP {
            return Err(LabError::Config(format!("N_max must be in 1..={N_MAX_CAP}")));
        }
        if self.l_max == 0 || self.l_max > L_MAX_HARD_CAP {
            return Err(LabError::Config(format!("L_max must be in 1..={L_MAX_HARD_CAP}")));
        }
        Ok(())
    }

    /// Header fields up to (not including) the digest.
    fn header_prefix(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(24);
        out.extend_from_slice(CACHE_MAGIC);
        out.push(CACHE_FORMAT_VERSION);
        out.push(self.version_id.len() as u8);
        out.extend_from_slice(self.version_id.as_bytes());
        out.extend_from_slice(&self.budget.to_le_bytes());
        out.extend_from_slice(&(self.n_max as u16).to_le_bytes());
        out.push(self.l_max as u8);
        out.push(self.enum_order.code());
        out
    }

    /// Stable 64-bit digest: first 8 bytes (big-endian) of SHA-256 over the header prefix.
    pub fn digest(&self) -> u64 {
        digest64(&self.header_prefix())
    }

    /// Serialized header: prefix followed by the digest, little-endian.
    pub fn header_bytes(&self) -> Vec<u8> {
        let mut out = self.header_prefix();
        out.extend_from_slice(&self.digest().to_le_bytes());
        out
    }

    /// Parses a header from the front of `bytes`, returning the config and
    /// the number of bytes consumed. The embedded digest is returned
    /// unchecked as the third element so callers can report mismatches.
    pub fn parse_header(bytes: &[u8]) -> std::result::Result<(MachineConfig, usize, u64), String> {
        let take = |at: usize, n: usize| -> std::result::Result<&[u8], String> {
            bytes.get(at..at + n).ok_or_else(|| "truncated header".to_string())
        };
        if take(0, 4)? != CACHE_MAGIC {
            return Err("bad magic".into());
        }
        let format = take(4, 1)?[0];
        if format != CACHE_FORMAT_VERSION {
            return Err(format!("unsupported format version {format}"));
        }
        let id_len = take(5, 1)?[0] as usize;
        let version_id = String::from_utf8(take(6, id_len)?.to_vec()).map_err(|_| "version id not utf-8")?;
        let mut at = 6 + id_len;
        let budget = u32::from_le_bytes(take(at, 4)?.try_into().unwrap());
        at += 4;
        let n_max = u16::from_le_bytes(take(at, 2)?.try_into().unwrap()) as u32;
        at += 2;
        let l_max = take(at, 1)?[0] as u32;
        let order_code = take(at + 1, 1)?[0];
        at += 2;
        let enum_order = EnumOrder::from_code(order_code).ok_or("unknown enumeration order code")?;
        let digest = u64::from_le_bytes(take(at, 8)?.try_into().unwrap());
        at += 8;
        Ok((MachineConfig { version_id, budget, n_max, l_max, enum_order }, at, digest))
    }
}

pub(crate) fn digest64(bytes: &[u8]) -> u64 {
    let hash = Sha256::digest(bytes);
    u64::from_be_bytes(hash[..8].try_into().unwrap())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DivergeReason {
    StepBudget,
    OutputCap,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RunResult {
    Halted { output: BitString, steps: u32 },
    Diverged(DivergeReason),
}

impl RunResult {
    pub fn is_halted(&self) -> bool {
        matches!(self, RunResult::Halted { .. })
    }

    pub fn output(&self) -> Option<BitString> {
        match self {
            RunResult::Halted { output, .. } => Some(*output),
            RunResult::Diverged(_) => None,
        }
    }
}

/// A partial function `D(p, y)` behind fixed resource bounds.
///
/// Implementations must be deterministic and pure; enumeration code calls
/// `run` from many threads at once.
pub trait DescriptionMode: Send + Sync {
    fn config(&self) -> &MachineConfig;

    fn run(&self, program: Program, input: &BitString) -> RunResult;

    /// True when `program` behaves exactly like one of its strict prefixes
    /// (same output and step count on every input). Enumeration skips such
    /// programs: the prefix precedes them in every enumeration order.
    fn is_redundant(&self, _program: Program) -> bool {
        false
    }

    /// Halts on every element of `domain`.
    fn is_total_on(&self, program: Program, domain: &[BitString]) -> bool {
        domain.iter().all(|y| self.run(program, y).is_halted())
    }

    fn digest(&self) -> u64 {
        self.config().digest()
    }
}

/// The reference TVM-1 interpreter.
#[derive(Debug, Clone)]
pub struct Tvm1 {
    config: MachineConfig,
}

impl Tvm1 {
    pub fn new(config: MachineConfig) -> Result<Tvm1> {
        config.validate()?;
        if config.version_id != VERSION_ID {
            return Err(LabError::Config(format!("TVM-1 cannot run version {:?}", config.version_id)));
        }
        Ok(Tvm1 { config })
    }
}

impl Default for Tvm1 {
    fn default() -> Self {
        Tvm1 { config: MachineConfig::default() }
    }
}

impl DescriptionMode for Tvm1 {
    fn config(&self) -> &MachineConfig {
        &self.config
    }

    fn run(&self, program: Program, input: &BitString) -> RunResult {
        let ops = program.opcode_count();
        let cap = self.config.n_max;
        let y_len = input.len();
        let mut pc = 0usize;
        let mut steps = 0u32;
        let mut head = 0u32;
        let mut out = 0u128;
        let mut out_len = 0u32;

        while pc < ops {
            if steps == self.config.budget {
                return RunResult::Diverged(DivergeReason::StepBudget);
            }
            steps += 1;
            match program.opcode(pc) {
                op @ (OUT0 | OUT1) => {
                    if out_len == cap {
                        return RunResult::Diverged(DivergeReason::OutputCap);
                    }
                    out = (out << 1) | (op == OUT1) as u128;
                    out_len += 1;
                }
                READ => {
                    if head < y_len {
                        if out_len == cap {
                            return RunResult::Diverged(DivergeReason::OutputCap);
                        }
                        out = (out << 1) | input.bit(head) as u128;
                        out_len += 1;
                        head += 1;
                    }
                }
                SKIP => {
                    if head < y_len {
                        head += 1;
                    }
                }
                CEND => {
                    if head >= y_len {
                        pc += 1;
                    }
                }
                CBIT => {
                    if head < y_len && input.bit(head) {
                        pc += 1;
                    }
                }
                JBACK => {
                    pc = pc.saturating_sub(3);
                    continue;
                }
                DUP => {
                    if 2 * out_len > cap {
                        return RunResult::Diverged(DivergeReason::OutputCap);
                    }
                    out = (out << out_len) | out;
                    out_len *= 2;
                }
                _ => unreachable!("3-bit opcode"),
            }
            pc += 1;
        }
        RunResult::Halted { output: BitString::new(out, out_len), steps }
    }

    fn is_redundant(&self, program: Program) -> bool {
        program.len() % 3 != 0
    }
}

/// Disassembles a program into opcode names.
pub fn disassemble(program: Program) -> String {
    let names: Vec<&str> = (0..program.opcode_count()).map(|i| OPCODE_NAMES[program.opcode(i) as usize]).collect();
    names.join("·")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn bs(s: &str) -> BitString {
        s.parse().unwrap()
    }

    fn prog(s: &str) -> Program {
        s.parse().unwrap()
    }

    fn run(p: &str, y: &str) -> RunResult {
        Tvm1::default().run(prog(p), &bs(y))
    }

    #[test]
    fn empty_program_halts_immediately() {
        assert_eq!(run("", ""), RunResult::Halted { output: BitString::EMPTY, steps: 0 });
    }

    #[test]
    fn single_out1() {
        assert_eq!(run("001", ""), RunResult::Halted { output: bs("1"), steps: 1 });
    }

    #[test]
    fn copy_loop_hand_trace() {
        // READ(1) CEND JBACK READ(0) CEND[skips JBACK] -> 5 executed opcodes
        assert_eq!(run("010100110", "10"), RunResult::Halted { output: bs("10"), steps: 5 });
    }

    #[test]
    fn jback_at_zero_loops() {
        assert_eq!(run("110", ""), RunResult::Diverged(DivergeReason::StepBudget));
    }

    #[test]
    fn trailing_bits_ignored() {
        assert_eq!(run("00110", ""), run("001", ""));
        assert_eq!(run("01", "1"), run("", "1"));
    }

    #[test]
    fn dup_and_cap() {
        // OUT1 then four DUP: the full 16-bit bitmap
        let p = Program::from_opcodes(&[OUT1, DUP, DUP, DUP, DUP]);
        let out = Tvm1::default().run(p, &BitString::EMPTY).output().unwrap();
        assert_eq!(out, BitString::new(0xffff, 16));
        let cfg = MachineConfig { n_max: 8, ..MachineConfig::default() };
        let m = Tvm1::new(cfg).unwrap();
        assert_eq!(m.run(p, &BitString::EMPTY), RunResult::Diverged(DivergeReason::OutputCap));
    }

    #[test]
    fn read_past_end_is_noop() {
        let p = Program::from_opcodes(&[READ, READ, READ]);
        assert_eq!(Tvm1::default().run(p, &bs("1")).output(), Some(bs("1")));
    }

    #[test]
    fn cbit_jback_totality() {
        let m = Tvm1::default();
        let p = prog("101110");
        assert!(!m.is_total_on(p, &[bs("0"), bs("1")]));
        assert!(m.is_total_on(p, &[bs("1")]));
        assert!(m.is_total_on(prog("001"), &[bs("0"), bs("1"), bs("0110")]));
    }

    #[test]
    fn copy_loop_total_on_short_strings() {
        let m = Tvm1::default();
        let domain: Vec<BitString> = BitString::all_up_to_len(4).collect();
        assert_eq!(domain.len(), 31);
        let p = prog("010100110");
        assert!(m.is_total_on(p, &domain));
        for y in &domain {
            assert_eq!(m.run(p, y).output(), Some(*y));
        }
    }

    #[test]
    fn header_round_trip_and_digest_sensitivity() {
        let cfg = MachineConfig::default();
        let bytes = cfg.header_bytes();
        let (back, used, digest) = MachineConfig::parse_header(&bytes).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(used, bytes.len());
        assert_eq!(digest, cfg.digest());
        let other = MachineConfig { l_max: 17, ..cfg.clone() };
        assert_ne!(other.digest(), cfg.digest());
        assert_eq!(MachineConfig::default().digest(), cfg.digest());
    }

    #[test]
    fn config_validation() {
        assert!(MachineConfig { l_max: 25, ..Default::default() }.validate().is_err());
        assert!(MachineConfig { budget: 0, ..Default::default() }.validate().is_err());
        assert!(MachineConfig { n_max: 65, ..Default::default() }.validate().is_err());
        assert!(Tvm1::new(MachineConfig { version_id: "X".into(), ..Default::default() }).is_err());
    }

    fn arb_program() -> impl Strategy<Value = Program> {
        (0u32..=18).prop_flat_map(|len| (0u32..(1 << len)).prop_map(move |b| Program::new(b, len)))
    }

    fn arb_input() -> impl Strategy<Value = BitString> {
        (0u32..=12).prop_flat_map(|len| (0u64..(1 << len)).prop_map(move |v| BitString::from_u64(v, len)))
    }

    proptest! {
        #[test]
        fn deterministic(p in arb_program(), y in arb_input()) {
            let m = Tvm1::default();
            prop_assert_eq!(m.run(p, &y), m.run(p, &y));
        }

        #[test]
        fn halted_runs_respect_bounds(p in arb_program(), y in arb_input()) {
            let m = Tvm1::default();
            if let RunResult::Halted { output, steps } = m.run(p, &y) {
                prop_assert!(output.len() <= m.config().n_max);
                prop_assert!(steps <= m.config().budget);
            }
        }

        #[test]
        fn straight_line_never_exhausts_budget(ops in proptest::collection::vec(0u8..8, 0..=8), y in arb_input()) {
            let ops: Vec<u8> = ops.into_iter().map(|o| if o == JBACK { DUP } else { o }).collect();
            let p = Program::from_opcodes(&ops);
            match Tvm1::default().run(p, &y) {
                RunResult::Halted { steps, .. } => prop_assert!(steps as usize <= ops.len()),
                RunResult::Diverged(reason) => prop_assert_eq!(reason, DivergeReason::OutputCap),
            }
        }

        #[test]
        fn budget_monotone(p in arb_program(), y in arb_input(), t in 1u32..64, n in 1u32..32) {
            let small = Tvm1::new(MachineConfig { budget: t, n_max: n, ..Default::default() }).unwrap();
            let big = Tvm1::new(MachineConfig { budget: t * 4, n_max: (n * 2).min(64), ..Default::default() }).unwrap();
            if let RunResult::Halted { output, steps } = small.run(p, &y) {
                prop_assert_eq!(big.run(p, &y), RunResult::Halted { output, steps });
            }
        }

        #[test]
        fn totality_anti_monotone(p in arb_program(), dom in proptest::collection::vec(arb_input(), 0..6), cut in 0usize..6) {
            let m = Tvm1::default();
            let sub = &dom[..cut.min(dom.len())];
            if m.is_total_on(p, &dom) {
                prop_assert!(m.is_total_on(p, sub));
            }
        }
    }
}
