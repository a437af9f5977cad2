//! Exact machine-relative complexities by exhaustive program enumeration.
//!
//! Every program of length `<= L_max` is run on the condition; the minimal
//! length among those that halt with a given output is that output's
//! complexity. Outputs no program reaches have complexity `Overflow`.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::sync::{Arc, Mutex, OnceLock};

use rayon::prelude::*;
use serde::{Serialize, Serializer};

use crate::bits::{BitString, Program};
use crate::cache::TableCache;
use crate::error::{LabError, Result};
use crate::machine::{DescriptionMode, EnumOrder, RunResult, Tvm1};
use crate::sets::SetBitmap;

/// A complexity value in bits, or more than `L_max`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Complexity {
    Bits(u32),
    Overflow,
}

impl Complexity {
    pub fn bits(self) -> Option<u32> {
        match self {
            Complexity::Bits(b) => Some(b),
            Complexity::Overflow => None,
        }
    }

    pub fn is_overflow(self) -> bool {
        self == Complexity::Overflow
    }

    /// `self < bound` with overflow treated as larger than every bound.
    pub fn less_than(self, bound: u32) -> bool {
        matches!(self, Complexity::Bits(b) if b < bound)
    }

    pub fn at_most(self, bound: u32) -> bool {
        matches!(self, Complexity::Bits(b) if b <= bound)
    }

    pub fn expect_bits(self, what: impl FnOnce() -> String, l_max: u32) -> Result<u32> {
        self.bits().ok_or_else(|| LabError::Overflow { what: what(), l_max })
    }
}

impl fmt::Display for Complexity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Complexity::Bits(b) => write!(f, "{b}"),
            Complexity::Overflow => f.write_str("overflow"),
        }
    }
}

impl Serialize for Complexity {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Complexity::Bits(b) => s.serialize_u32(*b),
            Complexity::Overflow => s.serialize_str("overflow"),
        }
    }
}

/// Minimal description lengths of every reachable output under one condition.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ComplexityTable {
    condition: BitString,
    digest: u64,
    l_max: u32,
    /// Output -> length-lex least program of minimal length.
    entries: BTreeMap<BitString, Program>,
}

impl ComplexityTable {
    pub fn from_witnesses(
        condition: BitString,
        digest: u64,
        l_max: u32,
        entries: BTreeMap<BitString, Program>,
    ) -> ComplexityTable {
        ComplexityTable { condition, digest, l_max, entries }
    }

    pub fn condition(&self) -> BitString {
        self.condition
    }

    pub fn digest(&self) -> u64 {
        self.digest
    }

    pub fn l_max(&self) -> u32 {
        self.l_max
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, x: &BitString) -> Complexity {
        self.entries.get(x).map_or(Complexity::Overflow, |p| Complexity::Bits(p.len()))
    }

    pub fn witness(&self, x: &BitString) -> Option<Program> {
        self.entries.get(x).copied()
    }

    /// `(output, complexity, witness)` in length-lex output order.
    pub fn iter(&self) -> impl Iterator<Item = (BitString, u32, Program)> + '_ {
        self.entries.iter().map(|(x, p)| (*x, p.len(), *p))
    }

    /// Entries whose output has exactly `len` bits.
    pub fn of_len(&self, len: u32) -> impl Iterator<Item = (BitString, u32, Program)> + '_ {
        let lo = BitString::new(0, len);
        let hi = BitString::new(u128::MAX, len);
        self.entries.range(lo..=hi).map(|(x, p)| (*x, p.len(), *p))
    }

    /// Number of outputs with complexity at most `i`.
    pub fn count_at_most(&self, i: u32) -> u64 {
        self.entries.values().filter(|p| p.len() <= i).count() as u64
    }
}

fn keep_min(acc: &mut HashMap<BitString, Program>, output: BitString, program: Program) {
    acc.entry(output).and_modify(|w| *w = (*w).min(program)).or_insert(program);
}

fn merge_min(mut a: HashMap<BitString, Program>, b: HashMap<BitString, Program>) -> HashMap<BitString, Program> {
    let (mut big, small) = if a.len() >= b.len() { (std::mem::take(&mut a), b) } else { (b, a) };
    for (x, p) in small {
        keep_min(&mut big, x, p);
    }
    big
}

/// Scans program indices `range` sequentially.
fn scan_range<M: DescriptionMode + ?Sized>(
    mode: &M,
    condition: &BitString,
    allowed: Option<&TotalityTable>,
    range: std::ops::Range<u64>,
) -> HashMap<BitString, Program> {
    let mut acc = HashMap::new();
    for index in range {
        let p = Program::from_index(index);
        if mode.is_redundant(p) || allowed.is_some_and(|t| !t.is_total(p)) {
            continue;
        }
        if let RunResult::Halted { output, .. } = mode.run(p, condition) {
            keep_min(&mut acc, output, p);
        }
    }
    acc
}

/// Program indices `0..total`, split into parallel chunks of 4096.
fn par_indices(total: u64) -> impl ParallelIterator<Item = u64> {
    const CHUNK: u64 = 1 << 12;
    (0..total.div_ceil(CHUNK)).into_par_iter().flat_map_iter(move |c| c * CHUNK..((c + 1) * CHUNK).min(total))
}

fn check_condition<M: DescriptionMode + ?Sized>(mode: &M, condition: &BitString) -> Result<()> {
    if condition.len() > 2 * mode.config().n_max {
        return Err(LabError::Precondition(format!(
            "condition of {} bits exceeds 2·N_max = {}",
            condition.len(),
            2 * mode.config().n_max
        )));
    }
    Ok(())
}

/// Builds the exact table for `condition` as a parallel map-reduce over program ranges.
///
/// With `allowed`, only programs marked total in that table are enumerated
/// (this is how total conditional complexity is computed).
pub fn build_table<M: DescriptionMode + ?Sized>(
    mode: &M,
    condition: &BitString,
    allowed: Option<&TotalityTable>,
) -> Result<ComplexityTable> {
    check_condition(mode, condition)?;
    let cfg = mode.config();
    let total = Program::count_up_to(cfg.l_max);
    let chunk = 1u64 << 12;
    let chunks = total.div_ceil(chunk);
    let merged = (0..chunks)
        .into_par_iter()
        .map(|c| scan_range(mode, condition, allowed, c * chunk..((c + 1) * chunk).min(total)))
        .reduce(HashMap::new, merge_min);
    Ok(ComplexityTable::from_witnesses(*condition, mode.digest(), cfg.l_max, merged.into_iter().collect()))
}

/// Serial build over `parts` contiguous program ranges, merged at the end.
/// Exists to check that results do not depend on partitioning.
pub fn build_table_partitioned<M: DescriptionMode + ?Sized>(
    mode: &M,
    condition: &BitString,
    parts: u64,
) -> Result<ComplexityTable> {
    check_condition(mode, condition)?;
    let cfg = mode.config();
    let total = Program::count_up_to(cfg.l_max);
    let parts = parts.clamp(1, total);
    let step = total.div_ceil(parts);
    let mut merged = HashMap::new();
    for k in 0..parts {
        let range = (k * step).min(total)..((k + 1) * step).min(total);
        merged = merge_min(merged, scan_range(mode, condition, None, range));
    }
    Ok(ComplexityTable::from_witnesses(*condition, mode.digest(), cfg.l_max, merged.into_iter().collect()))
}

/// One halting run in the enumeration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Event {
    pub steps: u32,
    pub program: Program,
    pub output: BitString,
}

/// Strings in order of first appearance, with a position index.
#[derive(Debug, Clone, Default)]
pub struct Appearances {
    events: Vec<Event>,
    positions: HashMap<BitString, usize>,
}

impl Appearances {
    fn from_events<'a>(events: impl Iterator<Item = &'a Event>) -> Appearances {
        let mut out = Appearances::default();
        for e in events {
            if let std::collections::hash_map::Entry::Vacant(v) = out.positions.entry(e.output) {
                v.insert(out.events.len());
                out.events.push(*e);
            }
        }
        out
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// 0-based position of `x`'s first appearance.
    pub fn position(&self, x: &BitString) -> Option<usize> {
        self.positions.get(x).copied()
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn outputs(&self) -> impl Iterator<Item = BitString> + '_ {
        self.events.iter().map(|e| e.output)
    }
}

/// The ordered log of all halting runs under one condition.
///
/// Restricting the log to programs of length `<= i` and keeping first
/// appearances gives the enumeration of all strings of complexity `<= i`.
pub struct EnumStream {
    order: EnumOrder,
    events: Vec<Event>,
    bounded: Vec<OnceLock<Arc<Appearances>>>,
    by_len: Mutex<HashMap<(u32, u32), Arc<Appearances>>>,
}

impl EnumStream {
    pub fn build<M: DescriptionMode + ?Sized>(mode: &M, condition: &BitString) -> Result<EnumStream> {
        check_condition(mode, condition)?;
        let cfg = mode.config();
        let total = Program::count_up_to(cfg.l_max);
        let mut events: Vec<Event> = par_indices(total)
            .filter_map(|i| {
                let p = Program::from_index(i);
                if mode.is_redundant(p) {
                    return None;
                }
                match mode.run(p, condition) {
                    RunResult::Halted { output, steps } => Some(Event { steps, program: p, output }),
                    RunResult::Diverged(_) => None,
                }
            })
            .collect();
        match cfg.enum_order {
            EnumOrder::Dovetail => events.sort_by_key(|e| (e.steps, e.program)),
            EnumOrder::LengthLex => events.sort_by_key(|e| e.program),
        }
        Ok(EnumStream {
            order: cfg.enum_order,
            events,
            bounded: (0..=cfg.l_max).map(|_| OnceLock::new()).collect(),
            by_len: Mutex::new(HashMap::new()),
        })
    }

    pub fn order(&self) -> EnumOrder {
        self.order
    }

    pub fn l_max(&self) -> u32 {
        self.bounded.len() as u32 - 1
    }

    /// Every halting run, in enumeration order.
    pub fn events(&self) -> &[Event] {
        &self.events
    }

    /// Position of `e` in [`EnumStream::events`].
    pub fn log_position(&self, e: &Event) -> Option<usize> {
        match self.order {
            EnumOrder::Dovetail => self.events.binary_search_by_key(&(e.steps, e.program), |x| (x.steps, x.program)),
            EnumOrder::LengthLex => self.events.binary_search_by_key(&e.program, |x| x.program),
        }
        .ok()
    }

    /// First appearances among programs of length `<= bound`.
    pub fn appearances(&self, bound: u32) -> Arc<Appearances> {
        let bound = bound.min(self.l_max());
        self.bounded[bound as usize]
            .get_or_init(|| {
                Arc::new(Appearances::from_events(self.events.iter().filter(|e| e.program.len() <= bound)))
            })
            .clone()
    }

    /// First appearances of `len`-bit outputs among programs of length `<= bound`.
    pub fn appearances_of_len(&self, bound: u32, len: u32) -> Arc<Appearances> {
        let bound = bound.min(self.l_max());
        if let Some(a) = self.by_len.lock().unwrap().get(&(bound, len)) {
            return a.clone();
        }
        let all = self.appearances(bound);
        let a = Arc::new(Appearances::from_events(all.events().iter().filter(|e| e.output.len() == len)));
        self.by_len.lock().unwrap().entry((bound, len)).or_insert(a).clone()
    }
}

/// Counts Ω_i of outputs with complexity at most i, for strings and per set universe.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct OmegaTable {
    /// `strings[i]` = Ω_i for i in 0..=L_max.
    pub strings: Vec<u64>,
    /// `sets[n][i]` = number of 2^n-bit bitmaps with complexity at most i.
    pub sets: Vec<Vec<u64>>,
}

impl OmegaTable {
    pub fn from_table(table: &ComplexityTable, n_max: u32) -> OmegaTable {
        let l_max = table.l_max();
        let mut strings = vec![0u64; l_max as usize + 1];
        for (_, c, _) in table.iter() {
            strings[c as usize] += 1;
        }
        prefix_sums(&mut strings);
        let mut sets = Vec::new();
        let mut n = 0u32;
        while (1u32 << n) <= n_max {
            let mut counts = vec![0u64; l_max as usize + 1];
            for (_, c, _) in table.of_len(1 << n) {
                counts[c as usize] += 1;
            }
            prefix_sums(&mut counts);
            sets.push(counts);
            n += 1;
        }
        OmegaTable { strings, sets }
    }

    pub fn omega(&self, i: u32) -> u64 {
        self.strings[(i as usize).min(self.strings.len() - 1)]
    }

    pub fn omega_set(&self, n: u32, i: u32) -> Option<u64> {
        let row = self.sets.get(n as usize)?;
        Some(row[(i as usize).min(row.len() - 1)])
    }
}

fn prefix_sums(v: &mut [u64]) {
    for i in 1..v.len() {
        v[i] += v[i - 1];
    }
}

/// The finite domain over which totality is checked.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Domain {
    /// All strings of exactly this length.
    FixedLength(u32),
    Strings(Vec<BitString>),
}

impl Domain {
    pub fn elements(&self) -> Vec<BitString> {
        match self {
            Domain::FixedLength(len) => BitString::all_of_len(*len).collect(),
            Domain::Strings(v) => v.clone(),
        }
    }

    pub fn size(&self) -> u64 {
        match self {
            Domain::FixedLength(len) => 1u64 << len,
            Domain::Strings(v) => v.len() as u64,
        }
    }
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Domain::FixedLength(len) => write!(f, "{{0,1}}^{len}"),
            Domain::Strings(v) => write!(f, "{} strings", v.len()),
        }
    }
}

/// Which programs of length `<= L_max` halt on every element of a domain.
pub struct TotalityTable {
    domain: Domain,
    total: Vec<bool>,
}

impl TotalityTable {
    pub fn build<M: DescriptionMode + ?Sized>(mode: &M, domain: Domain) -> TotalityTable {
        let elements = domain.elements();
        let count = Program::count_up_to(mode.config().l_max);
        let total = par_indices(count)
            .map(|i| mode.is_total_on(Program::from_index(i), &elements))
            .collect();
        TotalityTable { domain, total }
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn is_total(&self, p: Program) -> bool {
        self.total.get(p.index() as usize).copied().unwrap_or(false)
    }

    pub fn total_count(&self) -> usize {
        self.total.iter().filter(|&&t| t).count()
    }
}

/// Everything `build_tables` produces for a list of conditions.
pub struct TableSet {
    pub tables: Vec<Arc<ComplexityTable>>,
    pub omega: OmegaTable,
}

/// Lazily built, shared complexity tables for one description mode.
///
/// Tables are immutable once built; concurrent readers share them through
/// `Arc`. Building happens outside any lock so nested parallelism is safe.
pub struct Lab<M: DescriptionMode = Tvm1> {
    mode: M,
    cache: Option<TableCache>,
    tables: Mutex<HashMap<BitString, Arc<ComplexityTable>>>,
    ct_tables: Mutex<HashMap<(BitString, Domain), Arc<ComplexityTable>>>,
    totality: Mutex<HashMap<Domain, Arc<TotalityTable>>>,
    stream: OnceLock<EnumStream>,
    omega: OnceLock<OmegaTable>,
}

impl Default for Lab<Tvm1> {
    fn default() -> Self {
        Lab::new(Tvm1::default())
    }
}

impl<M: DescriptionMode> Lab<M> {
    pub fn new(mode: M) -> Lab<M> {
        Lab {
            mode,
            cache: None,
            tables: Mutex::new(HashMap::new()),
            ct_tables: Mutex::new(HashMap::new()),
            totality: Mutex::new(HashMap::new()),
            stream: OnceLock::new(),
            omega: OnceLock::new(),
        }
    }

    /// Persists every conditional table built from now on under `cache`.
    pub fn with_cache(mut self, cache: TableCache) -> Lab<M> {
        self.cache = Some(cache);
        self
    }

    pub fn mode(&self) -> &M {
        &self.mode
    }

    pub fn l_max(&self) -> u32 {
        self.mode.config().l_max
    }

    pub fn digest(&self) -> u64 {
        self.mode.digest()
    }

    /// The table for condition `y`, from memory, cache or a fresh build.
    pub fn table(&self, y: &BitString) -> Result<Arc<ComplexityTable>> {
        if let Some(t) = self.tables.lock().unwrap().get(y) {
            return Ok(t.clone());
        }
        let table = match &self.cache {
            Some(cache) => match cache.load(self.mode.config(), y)? {
                Some(t) => t,
                None => {
                    let t = build_table(&self.mode, y, None)?;
                    cache.store(self.mode.config(), &t)?;
                    t
                }
            },
            None => build_table(&self.mode, y, None)?,
        };
        Ok(self.tables.lock().unwrap().entry(*y).or_insert_with(|| Arc::new(table)).clone())
    }

    /// Drops in-memory conditional tables (the unconditional one stays).
    pub fn forget_conditional(&self) {
        self.tables.lock().unwrap().retain(|k, _| k.is_empty());
    }

    pub fn unconditional(&self) -> Arc<ComplexityTable> {
        self.table(&BitString::EMPTY).expect("the empty condition is always valid")
    }

    /// Builds (or loads) tables for every condition plus the Ω table.
    pub fn build_tables(&self, conditions: &[BitString]) -> Result<TableSet> {
        let tables = conditions.iter().map(|y| self.table(y)).collect::<Result<Vec<_>>>()?;
        Ok(TableSet { tables, omega: self.omega().clone() })
    }

    pub fn stream(&self) -> &EnumStream {
        self.stream.get_or_init(|| EnumStream::build(&self.mode, &BitString::EMPTY).expect("empty condition"))
    }

    pub fn omega(&self) -> &OmegaTable {
        self.omega.get_or_init(|| OmegaTable::from_table(&self.unconditional(), self.mode.config().n_max))
    }

    pub fn c(&self, x: &BitString) -> Complexity {
        self.unconditional().get(x)
    }

    pub fn c_cond(&self, x: &BitString, y: &BitString) -> Result<Complexity> {
        Ok(self.table(y)?.get(x))
    }

    /// Complexity of a set: of its characteristic bitmap, output unconditionally.
    pub fn c_set(&self, set: &SetBitmap) -> Complexity {
        self.c(&set.to_bitstring())
    }

    /// Number of distinct strings of complexity `<= i` appearing strictly after `x`.
    pub fn count_after(&self, x: &BitString, i: u32) -> Result<u64> {
        if !self.c(x).at_most(i) {
            return Err(LabError::Precondition(format!("C({x}) = {} exceeds {i}", self.c(x))));
        }
        let app = self.stream().appearances(i);
        let pos = app.position(x).ok_or_else(|| LabError::Invariant(format!("{x} missing from enumeration")))?;
        Ok((app.len() - 1 - pos) as u64)
    }

    pub fn totality(&self, domain: &Domain) -> Arc<TotalityTable> {
        if let Some(t) = self.totality.lock().unwrap().get(domain) {
            return t.clone();
        }
        let t = Arc::new(TotalityTable::build(&self.mode, domain.clone()));
        self.totality.lock().unwrap().entry(domain.clone()).or_insert(t).clone()
    }

    /// Table of minimal lengths over programs that are total on `domain`.
    pub fn ct_table(&self, y: &BitString, domain: &Domain) -> Result<Arc<ComplexityTable>> {
        let key = (*y, domain.clone());
        if let Some(t) = self.ct_tables.lock().unwrap().get(&key) {
            return Ok(t.clone());
        }
        let totality = self.totality(domain);
        let t = Arc::new(build_table(&self.mode, y, Some(&totality))?);
        Ok(self.ct_tables.lock().unwrap().entry(key).or_insert(t).clone())
    }

    /// Total conditional complexity relative to a finite domain.
    pub fn ct(&self, x: &BitString, y: &BitString, domain: &Domain) -> Result<Complexity> {
        Ok(self.ct_table(y, domain)?.get(x))
    }

    /// Re-runs every recorded witness and checks it reproduces its output.
    pub fn audit_table(&self, table: &ComplexityTable, stride: usize) -> Result<usize> {
        let mut checked = 0;
        for (x, c, p) in table.iter().step_by(stride.max(1)) {
            if p.len() != c || self.mode.run(p, &table.condition()).output() != Some(x) {
                return Err(LabError::Invariant(format!("witness {p} does not reproduce {x}")));
            }
            checked += 1;
        }
        Ok(checked)
    }
}

/// Exact set of distinct outputs over programs shorter than `bound` (used by list bounds).
pub fn outputs_shorter_than(table: &ComplexityTable, bound: u32, len: u32) -> Vec<BitString> {
    table.of_len(len).filter(|(_, c, _)| *c < bound).map(|(x, _, _)| x).collect()
}

/// Distinct outputs in `events` seen before position `stop`, produced by programs of length `<= bound`.
pub(crate) fn distinct_outputs_within(events: &[Event], stop: usize, bound: u32) -> u64 {
    let mut seen = HashSet::new();
    for e in &events[..stop] {
        if e.program.len() <= bound {
            seen.insert(e.output);
        }
    }
    seen.len() as u64
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bs(s: &str) -> BitString {
        s.parse().unwrap()
    }

    fn small_lab() -> Lab {
        Lab::new(Tvm1::new(crate::machine::MachineConfig { l_max: 12, ..Default::default() }).unwrap())
    }

    #[test]
    fn basic_values() {
        let lab = Lab::default();
        assert_eq!(lab.c(&BitString::EMPTY), Complexity::Bits(0));
        assert_eq!(lab.c(&bs("1")), Complexity::Bits(3));
        assert_eq!(lab.c(&bs("0")), Complexity::Bits(3));
        assert_eq!(lab.omega().omega(2), 1);
        assert_eq!(lab.omega().omega(3), 3);
    }

    #[test]
    fn single_opcode_oracle() {
        // Independent scan: the 8 one-opcode programs plus all shorter programs.
        let m = Tvm1::default();
        let mut outs = HashSet::new();
        for i in 0..Program::count_up_to(3) {
            if let Some(o) = m.run(Program::from_index(i), &BitString::EMPTY).output() {
                outs.insert(o);
            }
        }
        assert_eq!(outs.len(), 3);
        assert_eq!(Lab::default().omega().omega(3), outs.len() as u64);
    }

    #[test]
    fn copy_program_bounds_conditional() {
        let lab = small_lab();
        for y in BitString::all_up_to_len(5) {
            assert!(lab.c_cond(&y, &y).unwrap().at_most(9), "{y}");
        }
        assert_eq!(lab.c_cond(&bs("0110"), &BitString::EMPTY).unwrap(), lab.c(&bs("0110")));
    }

    #[test]
    fn full_universe_set() {
        let lab = Lab::default();
        assert!(lab.c_set(&SetBitmap::full(4)).at_most(15));
    }

    #[test]
    fn overflow_is_explicit() {
        let lab = small_lab();
        // A 20-bit string needs more than four opcodes of output.
        let x = BitString::new(0b1011_0011_1000_1111_0101, 20);
        assert_eq!(lab.c(&x), Complexity::Overflow);
        assert!(!lab.c(&x).at_most(24));
        assert!(Complexity::Bits(24) < Complexity::Overflow);
    }

    #[test]
    fn omega_two_paths_agree() {
        let lab = Lab::default();
        for i in 0..=lab.l_max() {
            assert_eq!(lab.stream().appearances(i).len() as u64, lab.omega().omega(i), "i = {i}");
        }
    }

    #[test]
    fn omega_bounds() {
        let lab = Lab::default();
        let o = lab.omega();
        for i in 0..=lab.l_max() {
            assert!(o.omega(i) <= (1u64 << (i + 1)) - 1);
            if i > 0 {
                assert!(o.omega(i) >= o.omega(i - 1));
            }
        }
    }

    #[test]
    fn partitioning_does_not_matter() {
        let m = Tvm1::new(crate::machine::MachineConfig { l_max: 12, ..Default::default() }).unwrap();
        let y = bs("0110");
        let reference = build_table(&m, &y, None).unwrap();
        for parts in [1, 3, 7, 64, 1000] {
            assert_eq!(build_table_partitioned(&m, &y, parts).unwrap(), reference);
        }
    }

    #[test]
    fn witnesses_reproduce() {
        let lab = Lab::default();
        let t = lab.unconditional();
        assert_eq!(lab.audit_table(&t, 1).unwrap(), t.len());
    }

    #[test]
    fn count_after_concrete() {
        let lab = Lab::default();
        let mut js: Vec<u64> = ["", "0", "1"].iter().map(|s| lab.count_after(&bs(s), 3).unwrap()).collect();
        js.sort();
        assert_eq!(js, vec![0, 1, 2]);
        // Dovetail: Λ halts at step 0 via the empty program, so it appears first.
        assert_eq!(lab.count_after(&BitString::EMPTY, 3).unwrap(), 2);
        assert!(lab.count_after(&bs("01"), 3).is_err());
    }

    #[test]
    fn count_after_is_a_bijection() {
        let lab = Lab::default();
        for i in [0, 3, 6, 9, 12] {
            let omega = lab.omega().omega(i);
            let mut seen = vec![false; omega as usize];
            for (x, c, _) in lab.unconditional().iter() {
                if c <= i {
                    let j = lab.count_after(&x, i).unwrap() as usize;
                    assert!(!seen[j]);
                    seen[j] = true;
                }
            }
            assert!(seen.iter().all(|&s| s));
        }
    }

    #[test]
    fn each_output_appears_once() {
        let lab = Lab::default();
        let app = lab.stream().appearances(lab.l_max());
        let distinct: HashSet<_> = app.outputs().collect();
        assert_eq!(distinct.len(), app.len());
        let keys: Vec<_> = app.events().iter().map(|e| (e.steps, e.program)).collect();
        assert!(keys.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn total_conditional_dominates() {
        let lab = small_lab();
        let domain = Domain::FixedLength(2);
        for y in BitString::all_of_len(2) {
            let plain = lab.table(&y).unwrap();
            let total = lab.ct_table(&y, &domain).unwrap();
            for (x, _, _) in plain.iter() {
                assert!(total.get(&x) >= plain.get(&x));
            }
            assert!(lab.ct(&y, &y, &domain).unwrap().at_most(9));
        }
    }

    #[test]
    fn cbit_jback_excluded_from_ct() {
        let lab = small_lab();
        let t = lab.totality(&Domain::FixedLength(2));
        assert!(!t.is_total("101110".parse().unwrap()));
        assert!(t.is_total("010100110".parse().unwrap()));
    }

    #[test]
    fn oversized_condition_rejected() {
        let lab = Lab::default();
        let too_long = BitString::new(0, 128).concat(&BitString::EMPTY);
        let cfg = crate::machine::MachineConfig { n_max: 32, ..Default::default() };
        let small = Lab::new(Tvm1::new(cfg).unwrap());
        assert!(small.table(&BitString::new(0, 65)).is_err());
        assert!(lab.table(&too_long).is_ok());
    }
}
