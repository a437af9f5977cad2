//! Finite sets `A ⊆ {0,1}^n` as characteristic bitmaps.
//!
//! The machine describes `A` by outputting a `2^n`-bit string whose bit at
//! position `i` (counted from the start) is 1 iff the member with numeric
//! value `i` belongs to `A`.

use std::fmt;

use crate::bits::{ceil_log2, BitString};
use crate::error::{LabError, Result};

/// Largest universe whose bitmap fits in 64 bits.
pub const MAX_SET_N: u32 = 6;

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SetBitmap {
    n: u8,
    /// Bit `v` set iff the string with value `v` is a member.
    mask: u64,
}

impl SetBitmap {
    pub fn new(n: u32, mask: u64) -> SetBitmap {
        assert!(n <= MAX_SET_N, "set universe 2^{n} too large");
        let universe = if n == MAX_SET_N { u64::MAX } else { (1u64 << (1u32 << n)) - 1 };
        SetBitmap { n: n as u8, mask: mask & universe }
    }

    pub fn empty(n: u32) -> SetBitmap {
        SetBitmap::new(n, 0)
    }

    pub fn full(n: u32) -> SetBitmap {
        SetBitmap::new(n, u64::MAX)
    }

    pub fn singleton(n: u32, x: u64) -> SetBitmap {
        SetBitmap::new(n, 1u64 << x)
    }

    pub fn from_members(n: u32, members: impl IntoIterator<Item = u64>) -> SetBitmap {
        let mask = members.into_iter().fold(0u64, |m, v| {
            assert!(v < (1u64 << n));
            m | (1u64 << v)
        });
        SetBitmap::new(n, mask)
    }

    pub fn n(&self) -> u32 {
        self.n as u32
    }

    pub fn mask(&self) -> u64 {
        self.mask
    }

    pub fn len(&self) -> u64 {
        self.mask.count_ones() as u64
    }

    pub fn is_empty(&self) -> bool {
        self.mask == 0
    }

    pub fn contains(&self, x: u64) -> bool {
        x < 64 && (self.mask >> x) & 1 == 1
    }

    pub fn contains_str(&self, x: &BitString) -> bool {
        x.len() == self.n() && self.contains(x.value() as u64)
    }

    /// Member values in increasing (lexicographic) order.
    pub fn members(&self) -> impl Iterator<Item = u64> + '_ {
        (0..64u64).filter(move |&v| self.contains(v))
    }

    pub fn member_strings(&self) -> impl Iterator<Item = BitString> + '_ {
        let n = self.n();
        self.members().map(move |v| BitString::from_u64(v, n))
    }

    /// `ceil(log2 |A|)`; `None` for the empty set.
    pub fn log_size(&self) -> Option<u32> {
        (!self.is_empty()).then(|| ceil_log2(self.len()))
    }

    pub fn union(&self, other: &SetBitmap) -> SetBitmap {
        assert_eq!(self.n, other.n);
        SetBitmap::new(self.n(), self.mask | other.mask)
    }

    pub fn intersection(&self, other: &SetBitmap) -> SetBitmap {
        assert_eq!(self.n, other.n);
        SetBitmap::new(self.n(), self.mask & other.mask)
    }

    /// The characteristic bitmap as a machine output.
    pub fn to_bitstring(&self) -> BitString {
        let width = 1u32 << self.n;
        let reversed = self.mask.reverse_bits() >> (64 - width);
        BitString::from_u64(reversed, width)
    }

    /// Reads a bitmap back; its length must be `2^n` for some `n <= 6`.
    pub fn from_bitstring(b: &BitString) -> Result<SetBitmap> {
        let len = b.len();
        if !len.is_power_of_two() || len > 64 {
            return Err(LabError::InvalidArgument(format!("{len}-bit string is not a set bitmap")));
        }
        let n = len.trailing_zeros();
        let mask = (b.value() as u64).reverse_bits() >> (64 - len);
        Ok(SetBitmap::new(n, mask))
    }

    /// Every set over `{0,1}^n` containing `x`. Test oracle; exponential.
    pub fn all_containing(n: u32, x: u64) -> impl Iterator<Item = SetBitmap> {
        assert!(n <= 4, "2^(2^{n}) sets is too many to list");
        let width = 1u64 << n;
        (0..1u64 << width).filter(move |m| (m >> x) & 1 == 1).map(move |m| SetBitmap::new(n, m))
    }

    /// Hex rendering of the MSB-first bitmap, as accepted on the command line.
    pub fn to_hex(&self) -> String {
        let b = self.to_bitstring();
        let digits = (b.len() as usize).div_ceil(4);
        let value = b.value() << ((digits as u32 * 4) - b.len());
        format!("{:0width$x}", value, width = digits)
    }

    pub fn from_hex(n: u32, hex: &str) -> Result<SetBitmap> {
        let width = 1u32 << n;
        let digits = (width as usize).div_ceil(4);
        let hex = hex.trim_start_matches("0x");
        if hex.len() != digits {
            return Err(LabError::InvalidArgument(format!("expected {digits} hex digits for n = {n}")));
        }
        let raw = u128::from_str_radix(hex, 16).map_err(|e| LabError::InvalidArgument(e.to_string()))?;
        let pad = digits as u32 * 4 - width;
        if raw & ((1u128 << pad) - 1) != 0 {
            return Err(LabError::InvalidArgument("padding bits must be zero".into()));
        }
        SetBitmap::from_bitstring(&BitString::new(raw >> pad, width))
    }
}

impl fmt::Display for SetBitmap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let members: Vec<String> = self.member_strings().map(|s| s.to_string()).collect();
        write!(f, "{{{}}}", members.join(","))
    }
}

impl serde::Serialize for SetBitmap {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl fmt::Debug for SetBitmap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SetBitmap(n={}, {})", self.n, self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn bitmap_orientation() {
        // {"00"} has value 0 -> first bitmap bit.
        let s = SetBitmap::singleton(2, 0);
        assert_eq!(s.to_bitstring().to_string(), "1000");
        let t = SetBitmap::from_members(2, [1, 3]);
        assert_eq!(t.to_bitstring().to_string(), "0101");
        assert_eq!(SetBitmap::full(4).to_bitstring(), BitString::new(0xffff, 16));
        assert_eq!(t.to_hex(), "5");
        assert_eq!(SetBitmap::from_hex(2, "5").unwrap(), t);
    }

    #[test]
    fn log_size_rounds_up() {
        assert_eq!(SetBitmap::singleton(3, 5).log_size(), Some(0));
        assert_eq!(SetBitmap::from_members(3, [0, 1, 2]).log_size(), Some(2));
        assert_eq!(SetBitmap::from_members(3, [0, 1, 2, 3]).log_size(), Some(2));
        assert_eq!(SetBitmap::empty(3).log_size(), None);
    }

    #[test]
    fn containing_count() {
        assert_eq!(SetBitmap::all_containing(2, 1).count(), 8);
        assert!(SetBitmap::all_containing(3, 6).all(|a| a.contains(6)));
    }

    proptest! {
        #[test]
        fn bitstring_round_trip(n in 0u32..=6, mask in any::<u64>()) {
            let s = SetBitmap::new(n, mask);
            prop_assert_eq!(SetBitmap::from_bitstring(&s.to_bitstring()).unwrap(), s);
            prop_assert_eq!(SetBitmap::from_hex(n, &s.to_hex()).unwrap(), s);
        }
    }
}
