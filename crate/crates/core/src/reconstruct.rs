//! Recovering `x` from a small set `A ∋ x` plus a few bits of advice.
//!
//! The decoder has free access to the enumeration; only the advice fields
//! are charged. Two paths:
//!
//! - OMEGA: the index `N` of `A` among enumerated bitmaps shares its leading
//!   bits with `Ω^set_{C(A)}`. Waiting for that many bitmaps to appear
//!   bounds `Ω_{C(x)}` from below; the advice carries the correction `δ`,
//!   `C(x)` and the count `j` of strings appearing after `x`.
//! - COVER: the chunk of bitmaps around `A` is filtered to small sets; `x`
//!   is named by its rank among strings covered at least `K` times.
//!
//! Advice fields are LEB128 varints (7 payload bits per byte, high bit set
//! on every byte but the last), preceded by one path flag bit.

use serde::Serialize;

use crate::antistochastic::{decode_from_omega, OmegaAdvice};
use crate::bits::BitString;
use crate::complexity::{distinct_outputs_within, Complexity, Lab};
use crate::error::{LabError, Result};
use crate::machine::DescriptionMode;
use crate::profiles;
use crate::sets::SetBitmap;

/// 1-based position of `A` among bitmaps of complexity `<= C(A)`, in enumeration order.
pub fn index_of<M: DescriptionMode>(lab: &Lab<M>, a: &SetBitmap) -> Result<u64> {
    let bitmap = a.to_bitstring();
    let c = lab.c(&bitmap).expect_bits(|| format!("C({a})"), lab.l_max())?;
    let app = lab.stream().appearances_of_len(c, bitmap.len());
    let pos = app.position(&bitmap).ok_or_else(|| LabError::Invariant(format!("{a} missing from enumeration")))?;
    Ok(pos as u64 + 1)
}

/// `Ω^set_i` for the universe of `a`, read from one place.
fn omega_set<M: DescriptionMode>(lab: &Lab<M>, n: u32, i: u32) -> Result<u64> {
    lab.omega()
        .omega_set(n, i)
        .ok_or_else(|| LabError::Infeasible(format!("2^{n}-bit bitmaps exceed N_max")))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct PrefixSplit {
    pub w: u32,
    pub m: u32,
    pub l: u32,
    pub a: u64,
    pub b: u64,
    pub c: u64,
}

fn bit_length(v: u64) -> u32 {
    64 - v.leading_zeros()
}

pub fn prefix_split(n_index: u64, omega: u64) -> Result<PrefixSplit> {
    if n_index == 0 || n_index > omega {
        return Err(LabError::InvalidArgument(format!("need 1 <= N <= Ω, got N = {n_index}, Ω = {omega}")));
    }
    let w = bit_length(omega);
    let l = bit_length(n_index ^ omega);
    let low = (1u64 << l) - 1;
    Ok(PrefixSplit { w, m: w - l, l, a: n_index >> l, b: n_index & low, c: omega & low })
}

impl PrefixSplit {
    pub fn check(&self, n_index: u64, omega: u64) -> bool {
        let half = if self.l > 0 { 1u64 << (self.l - 1) } else { 0 };
        (self.a << self.l) + self.b == n_index
            && (self.a << self.l) + self.c == omega
            && self.b <= self.c
            && self.c < 1u64 << self.l
            && (self.l == 0 || (self.b < half && half <= self.c))
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ChunkFamily {
    pub set: SetBitmap,
    pub k: u32,
    pub c_set: u32,
    pub index: u64,
    pub split: PrefixSplit,
    /// 0-based chunk number and size.
    pub chunk: u64,
    pub chunk_size: u64,
    pub complete: bool,
    /// Chunk members with `|A'| <= 2^(n-k)`, in enumeration order.
    pub members: Vec<SetBitmap>,
}

pub fn chunk_family<M: DescriptionMode>(lab: &Lab<M>, a: &SetBitmap, k: u32) -> Result<ChunkFamily> {
    let n = a.n();
    if k > n {
        return Err(LabError::InvalidArgument(format!("k = {k} exceeds n = {n}")));
    }
    let c = lab.c_set(a).expect_bits(|| format!("C({a})"), lab.l_max())?;
    let index = index_of(lab, a)?;
    let omega = omega_set(lab, n, c)?;
    let split = prefix_split(index, omega)?;
    let size = if split.l == 0 { 1 } else { 1u64 << (split.l - 1) };
    let chunk = (index - 1) / size;
    let start = chunk * size;
    let complete = start + size <= omega;
    let app = lab.stream().appearances_of_len(c, 1 << n);
    let cap = 1u64 << (n - k);
    let mut members = Vec::new();
    for e in &app.events()[start as usize..((start + size) as usize).min(app.len())] {
        let s = SetBitmap::from_bitstring(&e.output)?;
        if s.len() <= cap {
            members.push(s);
        }
    }
    let fam = ChunkFamily { set: *a, k, c_set: c, index, split, chunk, chunk_size: size, complete, members };
    if !fam.complete || !fam.members.contains(a) || fam.members.len() as u64 > 1 << split.l {
        return Err(LabError::Invariant(format!("chunk family of {a} is malformed")));
    }
    Ok(fam)
}

#[derive(Debug, Clone, Serialize)]
pub struct CoveringModel {
    pub k_cover: u64,
    pub b: SetBitmap,
    pub total_size: u64,
}

impl CoveringModel {
    pub fn bound(&self) -> f64 {
        self.total_size as f64 / self.k_cover as f64
    }
}

/// Strings covered by at least `k_cover` members of `family`.
pub fn cover_set(n: u32, family: &[SetBitmap], k_cover: u64) -> SetBitmap {
    let members = (0..1u64 << n).filter(|&y| family.iter().filter(|s| s.contains(y)).count() as u64 >= k_cover);
    SetBitmap::from_members(n, members)
}

pub fn covering_model(family: &[SetBitmap], x: &BitString) -> Result<CoveringModel> {
    let n = x.len();
    let v = x.value() as u64;
    let k_cover = family.iter().filter(|s| s.contains(v)).count() as u64;
    if k_cover == 0 {
        return Err(LabError::Precondition(format!("{x} lies in no member of the family")));
    }
    let b = cover_set(n, family, k_cover);
    let total_size: u64 = family.iter().map(|s| s.len()).sum();
    if !b.contains(v) || b.len() * k_cover > total_size {
        return Err(LabError::Invariant(format!("covering bound fails: |B| = {}, K = {k_cover}", b.len())));
    }
    Ok(CoveringModel { k_cover, b, total_size })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct OmegaEstimate {
    pub estimate: u64,
    pub delta: u64,
}

/// Lower bound on `Ω_l` from the leading bits `a = Ω_m >> (m - l)`: the
/// number of strings of complexity `<= l` seen by the time `a·2^(m-l)`
/// strings of complexity `<= m` have appeared.
pub fn omega_from_prefix<M: DescriptionMode>(lab: &Lab<M>, a: u64, m: u32, l: u32) -> Result<OmegaEstimate> {
    if l > m || m > lab.l_max() {
        return Err(LabError::InvalidArgument(format!("need l <= m <= L_max, got l = {l}, m = {m}")));
    }
    let threshold = a.checked_shl(m - l).filter(|t| t >> (m - l) == a).unwrap_or(u64::MAX);
    let omega_m = lab.omega().omega(m);
    if threshold > omega_m {
        return Err(LabError::InvalidArgument(format!("prefix {a} exceeds Ω_{m} = {omega_m}")));
    }
    let stream = lab.stream();
    let stop = if threshold == 0 {
        0
    } else {
        let app = stream.appearances(m);
        stream.log_position(&app.events()[threshold as usize - 1]).expect("appearance comes from the log") + 1
    };
    let estimate = distinct_outputs_within(stream.events(), stop, l);
    Ok(OmegaEstimate { estimate, delta: lab.omega().omega(l) - estimate })
}

/// Same lower bound, driven by the bitmap enumeration: wait until
/// `prefix·2^l` bitmaps of complexity `<= c` over `{0,1}^n` have appeared.
fn omega_from_set_prefix<M: DescriptionMode>(lab: &Lab<M>, n: u32, c: u32, split: &PrefixSplit, kx: u32) -> u64 {
    let threshold = split.a << split.l;
    if threshold == 0 {
        return 0;
    }
    let stream = lab.stream();
    let app = stream.appearances_of_len(c, 1 << n);
    let stop = stream.log_position(&app.events()[threshold as usize - 1]).expect("appearance comes from the log") + 1;
    distinct_outputs_within(stream.events(), stop, kx)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "path")]
pub enum Advice {
    Omega { kx: u32, j: u64, delta: u64 },
    Cover { k: u32, k_cover: u64, r: u64 },
}

fn push_varint(out: &mut Vec<u8>, mut v: u64) {
    loop {
        let byte = (v & 0x7f) as u8;
        v >>= 7;
        if v == 0 {
            out.push(byte);
            return;
        }
        out.push(byte | 0x80);
    }
}

fn read_varint(bytes: &[u8], at: &mut usize) -> Result<u64> {
    let mut v = 0u64;
    for shift in (0..64).step_by(7) {
        let byte = *bytes.get(*at).ok_or_else(|| LabError::Decode("truncated varint".into()))?;
        *at += 1;
        v |= ((byte & 0x7f) as u64) << shift;
        if byte & 0x80 == 0 {
            return Ok(v);
        }
    }
    Err(LabError::Decode("varint too long".into()))
}

impl Advice {
    pub fn is_omega(&self) -> bool {
        matches!(self, Advice::Omega { .. })
    }

    fn fields(&self) -> [u64; 3] {
        match *self {
            Advice::Omega { kx, j, delta } => [kx as u64, j, delta],
            Advice::Cover { k, k_cover, r } => [k as u64, k_cover, r],
        }
    }

    /// Flag bit followed by the varint bytes, MSB-first.
    pub fn to_bits(&self) -> Vec<bool> {
        let mut bytes = Vec::new();
        for f in self.fields() {
            push_varint(&mut bytes, f);
        }
        let mut bits = vec![self.is_omega()];
        for b in bytes {
            bits.extend((0..8).rev().map(|i| (b >> i) & 1 == 1));
        }
        bits
    }

    pub fn bit_len(&self) -> usize {
        self.to_bits().len()
    }

    pub fn from_bits(bits: &[bool]) -> Result<Advice> {
        let (&flag, rest) = bits.split_first().ok_or_else(|| LabError::Decode("empty advice".into()))?;
        if rest.len() % 8 != 0 {
            return Err(LabError::Decode("advice is not flag + whole bytes".into()))?;
        }
        let bytes: Vec<u8> = rest.chunks(8).map(|c| c.iter().fold(0u8, |acc, &b| acc << 1 | b as u8)).collect();
        let mut at = 0;
        let mut f = [0u64; 3];
        for slot in &mut f {
            *slot = read_varint(&bytes, &mut at)?;
        }
        if at != bytes.len() {
            return Err(LabError::Decode("trailing advice bytes".into()));
        }
        let small = |v: u64| u32::try_from(v).map_err(|_| LabError::Decode("field out of range".into()));
        Ok(if flag {
            Advice::Omega { kx: small(f[0])?, j: f[1], delta: f[2] }
        } else {
            Advice::Cover { k: small(f[0])?, k_cover: f[1], r: f[2] }
        })
    }
}

/// Both advice candidates for `x ∈ A` at nominal complexity `k`.
#[derive(Debug, Clone, Serialize)]
pub struct AdviceOptions {
    pub cover: Advice,
    pub omega: Option<Advice>,
    /// `m >= k` for the split of `N(A)` against `Ω^set_{C(A)}`.
    pub case1: Option<bool>,
}

impl AdviceOptions {
    /// OMEGA only when strictly shorter.
    pub fn best(&self) -> Advice {
        match self.omega {
            Some(o) if o.bit_len() < self.cover.bit_len() => o,
            _ => self.cover,
        }
    }
}

/// The family the COVER path works over: the filtered chunk, or `{A}`
/// alone when `C(A)` exceeds `L_max` and no enumeration index exists.
pub fn cover_family<M: DescriptionMode>(lab: &Lab<M>, a: &SetBitmap, k: u32) -> Result<Vec<SetBitmap>> {
    if lab.c_set(a).is_overflow() {
        return Ok(vec![*a]);
    }
    Ok(chunk_family(lab, a, k)?.members)
}

fn check_admissible(x: &BitString, a: &SetBitmap, k: u32) -> Result<()> {
    if !a.contains_str(x) {
        return Err(LabError::Precondition(format!("{x} is not in {a}")));
    }
    if k > a.n() || a.len() > 1 << (a.n() - k) {
        return Err(LabError::Precondition(format!("|A| = {} exceeds 2^(n-k) for k = {k}", a.len())));
    }
    Ok(())
}

pub fn advice_options<M: DescriptionMode>(lab: &Lab<M>, x: &BitString, a: &SetBitmap, k: u32) -> Result<AdviceOptions> {
    check_admissible(x, a, k)?;
    let family = cover_family(lab, a, k)?;
    let model = covering_model(&family, x)?;
    let r = model.b.members().position(|v| v == x.value() as u64).expect("x in B") as u64;
    let cover = Advice::Cover { k, k_cover: model.k_cover, r };
    let (omega, case1) = match (lab.c_set(a), lab.c(x)) {
        (Complexity::Bits(c), Complexity::Bits(kx)) => {
            let split = prefix_split(index_of(lab, a)?, omega_set(lab, a.n(), c)?)?;
            let estimate = omega_from_set_prefix(lab, a.n(), c, &split, kx);
            let delta = lab.omega().omega(kx) - estimate;
            let j = lab.count_after(x, kx)?;
            (Some(Advice::Omega { kx, j, delta }), Some(split.m >= k))
        }
        _ => (None, None),
    };
    Ok(AdviceOptions { cover, omega, case1 })
}

pub fn encode_advice<M: DescriptionMode>(lab: &Lab<M>, x: &BitString, a: &SetBitmap, k: u32) -> Result<Advice> {
    Ok(advice_options(lab, x, a, k)?.best())
}

pub fn reconstruct<M: DescriptionMode>(lab: &Lab<M>, a: &SetBitmap, advice: &Advice) -> Result<BitString> {
    let n = a.n();
    let x = match *advice {
        Advice::Cover { k, k_cover, r } => {
            if k > n || k_cover == 0 {
                return Err(LabError::Decode(format!("bad cover advice k = {k}, K = {k_cover}")));
            }
            let b = cover_set(n, &cover_family(lab, a, k)?, k_cover);
            let v = b.members().nth(r as usize).ok_or_else(|| LabError::Decode(format!("rank {r} beyond |B|")))?;
            BitString::from_u64(v, n)
        }
        Advice::Omega { kx, j, delta } => {
            let c = lab.c_set(a).bits().ok_or_else(|| LabError::Decode(format!("C({a}) overflows")))?;
            if kx > lab.l_max() {
                return Err(LabError::Decode(format!("C(x) = {kx} beyond L_max")));
            }
            let split = prefix_split(index_of(lab, a)?, omega_set(lab, n, c)?)?;
            let omega_kx = omega_from_set_prefix(lab, n, c, &split, kx) + delta;
            decode_from_omega(lab, omega_kx, OmegaAdvice { k: kx, j }).map_err(|e| LabError::Decode(e.to_string()))?
        }
    };
    if !a.contains_str(&x) {
        return Err(LabError::Decode(format!("decoded {x} is not in {a}")));
    }
    Ok(x)
}

/// Outcome of looking for a small, simple set around a string that is not
/// δ-antistochastic.
#[derive(Debug, Clone, Serialize)]
pub enum Converse {
    Antistochastic,
    /// `c_set(A) + δ <= k`, `|A| <= 2^(n-k)`, and the advice needed from `A`.
    Witness { set: String, c_set: u32, size: u64, advice_bits: usize },
    /// The profile point that breaks δ-antistochasticity has no set small enough.
    Unsplittable { m: u32, l: u32 },
}

pub fn converse_check<M: DescriptionMode>(lab: &Lab<M>, x: &BitString, delta: u32) -> Result<Converse> {
    let sf = profiles::profile(lab, x)?;
    if profiles::deficiency(&sf)? <= delta {
        return Ok(Converse::Antistochastic);
    }
    let k = sf.k_bits()? as i64;
    let n = x.len();
    let d = delta as i64;
    if k <= n as i64 {
        let cap = 1u64 << (n - k as u32);
        let mut best: Option<(SetBitmap, u32)> = None;
        for (bitmap, c, _) in lab.unconditional().of_len(1 << n) {
            let s = SetBitmap::from_bitstring(&bitmap)?;
            if s.contains_str(x) && s.len() <= cap && c as i64 + d <= k && best.is_none_or(|(_, bc)| c < bc) {
                best = Some((s, c));
            }
        }
        if let Some((s, c)) = best {
            let advice = encode_advice(lab, x, &s, k as u32)?;
            return Ok(Converse::Witness { set: s.to_string(), c_set: c, size: s.len(), advice_bits: advice.bit_len() });
        }
    }
    let (m, l) = (0..=n)
        .filter_map(|l| sf.h(l).bits().map(|m| (m, l)))
        .find(|&(m, l)| (m as i64) <= k - d && (m + l) as i64 <= n as i64 - d)
        .ok_or_else(|| LabError::Invariant(format!("{x} has deficiency above {delta} but no violating pair")))?;
    Ok(Converse::Unsplittable { m, l })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn bs(s: &str) -> BitString {
        s.parse().unwrap()
    }

    #[test]
    fn split_examples() {
        let s = prefix_split(0b1011, 0b1101).unwrap();
        assert_eq!((s.m, s.l, s.a, s.b, s.c), (1, 3, 1, 3, 5));
        let t = prefix_split(9, 9).unwrap();
        assert_eq!((t.m, t.l), (t.w, 0));
        assert!(prefix_split(0, 3).is_err());
        assert!(prefix_split(4, 3).is_err());
    }

    proptest! {
        #[test]
        fn split_identities(omega in 1u64..1 << 40, frac in 0.0f64..1.0) {
            let n = 1 + ((omega - 1) as f64 * frac) as u64;
            let s = prefix_split(n, omega).unwrap();
            prop_assert!(s.check(n, omega));
        }

        #[test]
        fn advice_round_trip(omega in any::<bool>(), a in 0u32..64, b in any::<u64>(), c in any::<u64>()) {
            let adv = if omega {
                Advice::Omega { kx: a, j: b, delta: c }
            } else {
                Advice::Cover { k: a, k_cover: b, r: c }
            };
            let bits = adv.to_bits();
            prop_assert_eq!(Advice::from_bits(&bits).unwrap(), adv);
            prop_assert_eq!(bits.len() % 8, 1);
        }
    }

    #[test]
    fn covering_example() {
        let (x, u, v, w) = (0u64, 1, 2, 3);
        let fam = [
            SetBitmap::from_members(2, [x, u]),
            SetBitmap::from_members(2, [x, v]),
            SetBitmap::from_members(2, [w, v]),
        ];
        let m = covering_model(&fam, &BitString::from_u64(x, 2)).unwrap();
        assert_eq!(m.k_cover, 2);
        assert_eq!(m.b, SetBitmap::from_members(2, [x, v]));
        assert_eq!(m.bound(), 3.0);
        let single = SetBitmap::from_members(2, [1, 3]);
        let m = covering_model(&[single], &bs("11")).unwrap();
        assert_eq!((m.k_cover, m.b), (1, single));
        assert!(covering_model(&fam[..1], &bs("11")).is_err());
    }

    #[test]
    fn index_is_one_based_and_bounded() {
        let lab = Lab::default();
        for n in 0..=5u32 {
            let omega = &lab.omega().sets[n as usize];
            let app = lab.stream().appearances_of_len(lab.l_max(), 1 << n);
            for e in app.events() {
                let a = SetBitmap::from_bitstring(&e.output).unwrap();
                let c = lab.c_set(&a).bits().unwrap();
                let idx = index_of(&lab, &a).unwrap();
                assert!(idx >= 1 && idx <= omega[c as usize]);
            }
            if let Some(first) = lab.stream().appearances_of_len(3 * (n + 2), 1 << n).events().first() {
                assert_eq!(index_of(&lab, &SetBitmap::from_bitstring(&first.output).unwrap()).unwrap(), 1);
            }
        }
    }

    #[test]
    fn omega_prefix_edges() {
        let lab = Lab::default();
        for m in 0..=10 {
            let om = lab.omega().omega(m);
            let same = omega_from_prefix(&lab, om, m, m).unwrap();
            assert_eq!((same.estimate, same.delta), (om, 0));
            for l in 0..=m {
                let zero = omega_from_prefix(&lab, 0, m, l).unwrap();
                assert_eq!((zero.estimate, zero.delta), (0, lab.omega().omega(l)));
                let est = omega_from_prefix(&lab, om >> (m - l), m, l).unwrap();
                assert_eq!(est.estimate + est.delta, lab.omega().omega(l));
            }
        }
        assert!(omega_from_prefix(&lab, 1000, 3, 3).is_err());
    }

    #[test]
    fn singleton_set_gives_minimal_cover_advice() {
        let lab = Lab::default();
        let x = bs("0110");
        let a = SetBitmap::singleton(4, x.value() as u64);
        let opts = advice_options(&lab, &x, &a, 2).unwrap();
        assert_eq!(opts.cover, Advice::Cover { k: 2, k_cover: 1, r: 0 });
        assert_eq!(reconstruct(&lab, &a, &opts.best()).unwrap(), x);
    }

    #[test]
    fn round_trip_on_small_grid() {
        let lab = Lab::default();
        for n in 1..=3u32 {
            for k in 1..=n {
                for mask in 1..1u64 << (1 << n) {
                    let a = SetBitmap::new(n, mask);
                    if a.len() > 1 << (n - k) {
                        continue;
                    }
                    for x in a.member_strings() {
                        let opts = advice_options(&lab, &x, &a, k).unwrap();
                        assert_eq!(reconstruct(&lab, &a, &opts.cover).unwrap(), x);
                        if let Some(o) = opts.omega {
                            assert_eq!(reconstruct(&lab, &a, &o).unwrap(), x);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn chunk_families_on_describable_sets() {
        let lab = Lab::default();
        for n in 1..=4u32 {
            for (bitmap, _, _) in lab.unconditional().of_len(1 << n) {
                let a = SetBitmap::from_bitstring(&bitmap).unwrap();
                for k in 0..=n {
                    if a.len() > 1 << (n - k) {
                        continue;
                    }
                    let fam = chunk_family(&lab, &a, k).unwrap();
                    assert!(fam.members.contains(&a) && fam.complete);
                    if fam.split.l == 0 {
                        assert_eq!(fam.members, vec![a]);
                    }
                }
            }
        }
    }

    #[test]
    fn converse_outcomes_respect_predicates() {
        let lab = Lab::default();
        for n in 1..=4 {
            for x in BitString::all_of_len(n) {
                let sf = profiles::profile(&lab, &x).unwrap();
                let eps = profiles::deficiency(&sf).unwrap();
                let k = sf.k_bits().unwrap();
                for delta in 0..=eps + 1 {
                    match converse_check(&lab, &x, delta).unwrap() {
                        Converse::Antistochastic => assert!(eps <= delta),
                        Converse::Witness { c_set, size, .. } => {
                            assert!(c_set + delta <= k && size <= 1 << (n - k));
                        }
                        Converse::Unsplittable { m, l } => {
                            assert!(eps > delta && m + delta <= k && m + l + delta <= n);
                        }
                    }
                }
            }
        }
    }
}
