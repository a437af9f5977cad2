//! Antistochastic strings: the exclusion construction, the deficiency
//! census and the Ω-advice decoder.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;

use crate::bits::BitString;
use crate::complexity::{Complexity, Lab};
use crate::error::{LabError, Result};
use crate::machine::DescriptionMode;
use crate::profiles::{self, check_feasible, StructureFunction};
use crate::sets::SetBitmap;

/// Largest length for the construction.
pub const MAX_CONSTRUCT_N: u32 = 5;
/// Largest length for a full census.
pub const MAX_CENSUS_N: u32 = 4;

/// All sets with `c_set(A) < k` and `|A| <= 2^(n-k)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ExclusionFamily {
    pub n: u32,
    pub k: u32,
    /// `(A, c_set(A))` in bitmap order.
    pub sets: Vec<(SetBitmap, u32)>,
    pub union: SetBitmap,
}

impl ExclusionFamily {
    pub fn build<M: DescriptionMode>(lab: &Lab<M>, n: u32, k: u32) -> Result<ExclusionFamily> {
        if !(1..=n).contains(&k) {
            return Err(LabError::InvalidArgument(format!("need 1 <= k <= n, got n = {n}, k = {k}")));
        }
        check_feasible(lab, n, MAX_CONSTRUCT_N)?;
        let cap = 1u64 << (n - k);
        let mut sets = Vec::new();
        let mut union = SetBitmap::empty(n);
        for (bitmap, c, _) in lab.unconditional().of_len(1 << n) {
            if c >= k {
                continue;
            }
            let a = SetBitmap::from_bitstring(&bitmap)?;
            if a.len() <= cap {
                union = union.union(&a);
                sets.push((a, c));
            }
        }
        let family = ExclusionFamily { n, k, sets, union };
        family.check()?;
        Ok(family)
    }

    /// The counting invariants, exactly.
    pub fn check(&self) -> Result<()> {
        let programs_below_k = (1u64 << self.k) - 1;
        if self.sets.len() as u64 > programs_below_k {
            return Err(LabError::Invariant(format!("{} sets of complexity < {}", self.sets.len(), self.k)));
        }
        let bound = programs_below_k << (self.n - self.k);
        if self.union.len() > bound || bound >= 1 << self.n {
            return Err(LabError::Invariant(format!("union of {} strings exceeds {bound}", self.union.len())));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Construction {
    pub n: u32,
    pub k: u32,
    pub x: BitString,
    pub family_size: usize,
    pub union_size: u64,
    pub c_x: Complexity,
    pub c_singleton: Complexity,
    /// `None` when `C(x)` overflows.
    pub epsilon_star: Option<u32>,
    pub lemma3: bool,
}

/// The lexicographically least `n`-bit string outside every set of the family.
pub fn construct<M: DescriptionMode>(lab: &Lab<M>, n: u32, k: u32) -> Result<Construction> {
    let family = ExclusionFamily::build(lab, n, k)?;
    let v = (0..1u64 << n)
        .find(|&v| !family.union.contains(v))
        .ok_or_else(|| LabError::Invariant("exclusion union covers the universe".into()))?;
    let x = BitString::from_u64(v, n);
    let c_singleton = lab.c_set(&SetBitmap::singleton(n, v));
    if c_singleton.less_than(k) {
        return Err(LabError::Invariant(format!("singleton of {x} has complexity {c_singleton} < {k}")));
    }
    let sf = profiles::profile(lab, &x)?;
    let lemma3 = profiles::lemma3_check_at(&sf, k, 1);
    if !lemma3 {
        return Err(LabError::Invariant(format!("({}, {}) lies in the profile of {x}", k - 1, n - k)));
    }
    Ok(Construction {
        n,
        k,
        x,
        family_size: family.sets.len(),
        union_size: family.union.len(),
        c_x: sf.k,
        c_singleton,
        epsilon_star: profiles::deficiency(&sf).ok(),
        lemma3,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct CensusRow {
    pub x: BitString,
    pub k: Complexity,
    pub epsilon_star: Option<u32>,
    pub c_singleton: Complexity,
}

#[derive(Debug, Clone, Serialize)]
pub struct Census {
    pub n: u32,
    pub rows: Vec<CensusRow>,
    /// `(k, ε) -> number of strings of complexity k that are ε-antistochastic`,
    /// for ε from 0 to the largest deficiency seen.
    pub counts: BTreeMap<(u32, u32), u64>,
    /// Rows whose complexity overflows, left out of `counts`.
    pub overflow: usize,
}

pub fn census<M: DescriptionMode>(lab: &Lab<M>, n: u32) -> Result<Census> {
    check_feasible(lab, n, MAX_CENSUS_N)?;
    let rows = BitString::all_of_len(n)
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|x| {
            let sf = profiles::profile(lab, &x)?;
            Ok(CensusRow {
                x,
                k: sf.k,
                epsilon_star: profiles::deficiency(&sf).ok(),
                c_singleton: lab.c_set(&SetBitmap::singleton(n, x.value() as u64)),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let max_eps = rows.iter().filter_map(|r| r.epsilon_star).max().unwrap_or(0);
    let mut counts = BTreeMap::new();
    let mut overflow = 0;
    for r in &rows {
        match (r.k, r.epsilon_star) {
            (Complexity::Bits(k), Some(e)) => {
                for eps in 0..=max_eps {
                    *counts.entry((k, eps)).or_insert(0) += (e <= eps) as u64;
                }
            }
            _ => overflow += 1,
        }
    }
    Ok(Census { n, rows, counts, overflow })
}

/// Advice for recovering `x` from `Ω_k`: how many strings of complexity
/// `<= k` first appear after it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct OmegaAdvice {
    pub k: u32,
    pub j: u64,
}

impl OmegaAdvice {
    pub fn for_string<M: DescriptionMode>(lab: &Lab<M>, x: &BitString, k: u32) -> Result<OmegaAdvice> {
        Ok(OmegaAdvice { k, j: lab.count_after(x, k)? })
    }
}

/// Runs the enumeration until `omega_k` strings of complexity `<= k` have
/// appeared and returns the one with exactly `j` strings after it.
pub fn decode_from_omega<M: DescriptionMode>(lab: &Lab<M>, omega_k: u64, advice: OmegaAdvice) -> Result<BitString> {
    if advice.j >= omega_k {
        return Err(LabError::InvalidArgument(format!("j = {} out of range for Ω = {omega_k}", advice.j)));
    }
    let app = lab.stream().appearances(advice.k);
    if (app.len() as u64) < omega_k {
        return Err(LabError::Decode(format!("only {} strings appear, Ω claims {omega_k}", app.len())));
    }
    Ok(app.events()[(omega_k - 1 - advice.j) as usize].output)
}

/// `Ω_k` as a `(k+1)`-bit numeral, for machine-conditional measurements.
pub fn omega_numeral<M: DescriptionMode>(lab: &Lab<M>, k: u32) -> BitString {
    BitString::numeral(lab.omega().omega(k), k + 1)
}

/// `c_cond(x, [Ω_k])`, reported only: the bound involves a machine constant.
pub fn complexity_given_omega<M: DescriptionMode>(lab: &Lab<M>, x: &BitString, k: u32) -> Result<Complexity> {
    lab.c_cond(x, &omega_numeral(lab, k))
}

/// The complete portion of `2^l` consecutive enumerated strings containing `x`.
#[derive(Debug, Clone, Serialize)]
pub struct Portion {
    pub k: u32,
    pub j: u64,
    pub l: u32,
    pub index: u64,
    pub members: Vec<BitString>,
    pub complete: bool,
    /// The portion as a set, when all members have the length of `x`.
    pub set: Option<SetBitmap>,
    pub c_set: Option<Complexity>,
}

impl Portion {
    /// The profile point `(c_set, l)` the portion witnesses.
    pub fn pair(&self) -> Option<(Complexity, u32)> {
        self.c_set.map(|c| (c, self.l))
    }
}

pub fn portion_pairs<M: DescriptionMode>(lab: &Lab<M>, x: &BitString, k: u32) -> Result<Portion> {
    let j = lab.count_after(x, k)?;
    if j == 0 {
        return Err(LabError::Precondition(format!("{x} is the last string of complexity <= {k}")));
    }
    let app = lab.stream().appearances(k);
    let pos = app.position(x).expect("count_after found it") as u64;
    let l = 63 - j.leading_zeros();
    let size = 1u64 << l;
    let index = pos / size;
    let start = index * size;
    let complete = start + size <= app.len() as u64;
    let members: Vec<BitString> = app.events()[start as usize..((start + size) as usize).min(app.len())]
        .iter()
        .map(|e| e.output)
        .collect();
    let n = x.len();
    let set = (n <= crate::sets::MAX_SET_N && members.iter().all(|m| m.len() == n))
        .then(|| SetBitmap::from_members(n, members.iter().map(|m| m.value() as u64)));
    let c_set = set.filter(|s| (1u32 << s.n()) <= lab.mode().config().n_max).map(|s| lab.c_set(&s));
    Ok(Portion { k, j, l, index, members, complete, set, c_set })
}

/// Deficiency of `x` (a convenience over the profile).
pub fn deficiency_of<M: DescriptionMode>(lab: &Lab<M>, x: &BitString) -> Result<(StructureFunction, u32)> {
    let sf = profiles::profile(lab, x)?;
    let eps = profiles::deficiency(&sf)?;
    Ok((sf, eps))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn construction_over_all_parameters() {
        let lab = Lab::default();
        for n in 1..=5 {
            for k in 1..=n {
                let c = construct(&lab, n, k).unwrap();
                assert!(c.union_size < 1 << n);
                assert!(!c.c_singleton.less_than(k));
                assert!(c.lemma3);
            }
        }
        assert_eq!(construct(&lab, 1, 1).unwrap().x.to_string(), "0");
    }

    #[test]
    fn exclusion_family_against_full_scan() {
        let lab = Lab::default();
        for n in 1..=4 {
            for k in 1..=n {
                let fam = ExclusionFamily::build(&lab, n, k).unwrap();
                let expected: Vec<SetBitmap> = (0..1u64 << (1 << n))
                    .map(|m| SetBitmap::new(n, m))
                    .filter(|a| !a.is_empty() && a.len() <= 1 << (n - k) && lab.c_set(a).less_than(k))
                    .collect();
                assert_eq!(fam.sets.iter().map(|(a, _)| *a).collect::<Vec<_>>(), expected);
            }
        }
    }

    #[test]
    fn bad_parameters() {
        let lab = Lab::default();
        assert!(matches!(construct(&lab, 3, 0), Err(LabError::InvalidArgument(_))));
        assert!(matches!(construct(&lab, 3, 4), Err(LabError::InvalidArgument(_))));
        assert!(matches!(construct(&lab, 6, 2), Err(LabError::Infeasible(_))));
        assert!(matches!(census(&lab, 5), Err(LabError::Infeasible(_))));
    }

    #[test]
    fn census_shape() {
        let lab = Lab::default();
        for n in 1..=4 {
            let c = census(&lab, n).unwrap();
            assert_eq!(c.rows.len(), 1 << n);
            let max_eps = c.counts.keys().map(|&(_, e)| e).max().unwrap();
            for (&(k, e), &count) in &c.counts {
                if e < max_eps {
                    assert!(c.counts[&(k, e + 1)] >= count);
                }
            }
        }
    }

    #[test]
    fn omega_round_trip_every_bound() {
        let lab = Lab::default();
        let omega = lab.omega();
        for k in 0..=lab.l_max() {
            for (x, c, _) in lab.unconditional().iter() {
                if c > k {
                    continue;
                }
                let adv = OmegaAdvice::for_string(&lab, &x, k).unwrap();
                assert!(adv.j < omega.omega(k));
                assert_eq!(decode_from_omega(&lab, omega.omega(k), adv).unwrap(), x);
            }
        }
    }

    #[test]
    fn omega_decoder_edges() {
        let lab = Lab::default();
        let om = lab.omega().omega(3);
        assert_eq!(om, 3);
        let decoded: Vec<BitString> =
            (0..3).map(|j| decode_from_omega(&lab, om, OmegaAdvice { k: 3, j }).unwrap()).collect();
        let app = lab.stream().appearances(3);
        assert_eq!(decoded[0], app.events().last().unwrap().output);
        assert!(decode_from_omega(&lab, om, OmegaAdvice { k: 3, j: 3 }).is_err());
    }

    #[test]
    fn portions_are_complete_and_contain_x() {
        let lab = Lab::default();
        let k = 12;
        for (x, c, _) in lab.unconditional().iter() {
            if c > k || lab.count_after(&x, k).unwrap() == 0 {
                continue;
            }
            let p = portion_pairs(&lab, &x, k).unwrap();
            assert!(p.complete);
            assert_eq!(p.members.len() as u64, 1 << p.l);
            assert!(p.members.contains(&x));
            assert!(p.j >= 1 << p.l);
        }
    }
}
