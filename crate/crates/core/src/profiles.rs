//! Profiles `P_x` as structure functions over the machine's model class.
//!
//! The model class is every set `A ⊆ {0,1}^n` whose bitmap has complexity
//! at most `L_max`. `h(l)` is the least `c_set(A)` over members `A ∋ x`
//! with `ceil(log2 |A|) <= l`; `(m, l) ∈ P_x` iff `m >= h(l)`.
//!
//! Integer conventions, all in one place:
//! - `l` is `ceil(log2 |A|)`, so `|A| = 2^l` maps to `l` and `|A| <= 2^l` iff `ceil(log2 |A|) <= l`.
//! - ε-antistochastic uses the strict inequalities `m > k - ε` or `m + l > n - ε`.
//! - pairs with a negative coordinate are never in a profile.

use serde::Serialize;

use crate::bits::BitString;
use crate::complexity::{Complexity, Lab};
use crate::error::{LabError, Result};
use crate::machine::DescriptionMode;
use crate::sets::SetBitmap;

/// Longest string whose profile is computed exactly.
pub const MAX_PROFILE_N: u32 = 5;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StructureFunction {
    pub x: BitString,
    pub n: u32,
    /// `C(x)`.
    pub k: Complexity,
    /// `h[l]` for `l` in `0..=n`.
    pub h: Vec<Complexity>,
}

impl StructureFunction {
    pub fn h(&self, l: u32) -> Complexity {
        self.h[l.min(self.n) as usize]
    }

    /// `(m, l) ∈ P_x`.
    pub fn contains(&self, m: i64, l: i64) -> bool {
        if m < 0 || l < 0 {
            return false;
        }
        self.h(l.min(self.n as i64) as u32).at_most(m.min(u32::MAX as i64) as u32)
    }

    pub fn k_bits(&self) -> Result<u32> {
        self.k.bits().ok_or_else(|| LabError::Overflow { what: format!("C({})", self.x), l_max: u32::MAX })
    }
}

pub fn check_feasible<M: DescriptionMode>(lab: &Lab<M>, n: u32, max_n: u32) -> Result<()> {
    if n > max_n || (1u32 << n) > lab.mode().config().n_max {
        return Err(LabError::Infeasible(format!(
            "n = {n} exceeds the exhaustive cutoff (n <= {max_n} and 2^n <= N_max = {})",
            lab.mode().config().n_max
        )));
    }
    Ok(())
}

/// Exact structure function of `x` over sets describable within `L_max`.
pub fn profile<M: DescriptionMode>(lab: &Lab<M>, x: &BitString) -> Result<StructureFunction> {
    let n = x.len();
    check_feasible(lab, n, MAX_PROFILE_N)?;
    let mut h = vec![Complexity::Overflow; n as usize + 1];
    let table = lab.unconditional();
    for (bitmap, c, _) in table.of_len(1 << n) {
        let set = SetBitmap::from_bitstring(&bitmap)?;
        if !set.contains(x.value() as u64) {
            continue;
        }
        let l = set.log_size().expect("contains x");
        for slot in &mut h[l as usize..] {
            *slot = (*slot).min(Complexity::Bits(c));
        }
    }
    Ok(StructureFunction { x: *x, n, k: lab.c(x), h })
}

/// Least ε >= 0 such that every `(m, l) ∈ P_x` has `m > k - ε` or `m + l > n - ε`.
///
/// Only boundary pairs `(h(l), l)` matter: both conditions get easier as `m`
/// grows, and pairs with `l > n` satisfy the second condition for every ε >= 0.
pub fn deficiency(sf: &StructureFunction) -> Result<u32> {
    let k = sf.k_bits()? as i64;
    let n = sf.n as i64;
    let mut eps = 0i64;
    for l in 0..=sf.n {
        if let Complexity::Bits(m) = sf.h(l) {
            let m = m as i64;
            eps = eps.max((k - m).min(n - m - l as i64) + 1);
        }
    }
    Ok(eps as u32)
}

/// Same quantity as [`deficiency`], by scanning every pair of the profile
/// for increasing ε. Independent of the boundary argument.
pub fn deficiency_by_scan(sf: &StructureFunction, l_max: u32) -> Result<u32> {
    let k = sf.k_bits()? as i64;
    let n = sf.n as i64;
    let bound = (k.max(n) + 1) as u32;
    for eps in 0..=bound {
        let e = eps as i64;
        let ok = (0..=l_max as i64).all(|m| {
            (0..=n + 1).all(|l| !sf.contains(m, l) || m > k - e || m + l > n - e)
        });
        if ok {
            return Ok(eps);
        }
    }
    Err(LabError::Invariant(format!("no ε <= {bound} works for {}", sf.x)))
}

pub fn is_antistochastic(sf: &StructureFunction, eps: u32) -> Result<bool> {
    Ok(deficiency(sf)? <= eps)
}

/// `(k - ε, n - k) ∉ P_x` with `k = C(x)`.
pub fn lemma3_check(sf: &StructureFunction, eps: u32) -> Result<bool> {
    Ok(lemma3_check_at(sf, sf.k_bits()?, eps))
}

/// `(k - ε, n - k) ∉ P_x` for an explicit nominal complexity `k`.
pub fn lemma3_check_at(sf: &StructureFunction, k: u32, eps: u32) -> bool {
    !sf.contains(k as i64 - eps as i64, sf.n as i64 - k as i64)
}

/// Boundaries of `P_min = {m + l >= n or m >= k}` and `P_max = {m + l >= k}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ReferenceCurves {
    pub n: u32,
    pub k: u32,
}

impl ReferenceCurves {
    pub fn in_min(&self, m: i64, l: i64) -> bool {
        m >= 0 && l >= 0 && (m + l >= self.n as i64 || m >= self.k as i64)
    }

    pub fn in_max(&self, m: i64, l: i64) -> bool {
        m >= 0 && l >= 0 && m + l >= self.k as i64
    }

    /// Least `m` with `(m, l) ∈ P_min`.
    pub fn h_min(&self, l: u32) -> u32 {
        self.k.min(self.n.saturating_sub(l))
    }

    /// Least `m` with `(m, l) ∈ P_max`.
    pub fn h_max(&self, l: u32) -> u32 {
        self.k.saturating_sub(l)
    }
}

/// Measured distances between a profile and the properties that only hold
/// up to machine constants.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ProfileSlack {
    /// `max_l (k - h(l) - l)`: how far below `P_max` the boundary reaches.
    pub delta_max: Option<i64>,
    /// `max_l (h(l) - h_min(l))`: how far `P_min` sticks out of `P_x`.
    pub above_min: Option<i64>,
    /// `max_{l, i <= l} (h(l - i) - h(l) - i)`: constant the set-splitting
    /// property would need (0 or less means it holds exactly).
    pub split: Option<i64>,
}

pub fn slack(sf: &StructureFunction) -> Result<ProfileSlack> {
    let k = sf.k_bits()?;
    let refs = ReferenceCurves { n: sf.n, k };
    let mut delta_max = None::<i64>;
    let mut above_min = None::<i64>;
    let mut split = None::<i64>;
    for l in 0..=sf.n {
        let Complexity::Bits(m) = sf.h(l) else { continue };
        let d = k as i64 - m as i64 - l as i64;
        delta_max = Some(delta_max.map_or(d, |v| v.max(d)));
        let a = m as i64 - refs.h_min(l) as i64;
        above_min = Some(above_min.map_or(a, |v| v.max(a)));
        for i in 0..=l {
            let need = match sf.h(l - i) {
                Complexity::Bits(m2) => m2 as i64 - m as i64 - i as i64,
                Complexity::Overflow => i64::MAX,
            };
            split = Some(split.map_or(need, |v| v.max(need)));
        }
    }
    Ok(ProfileSlack { delta_max, above_min, split })
}
