//! Bit sequences and programs.
//!
//! Both types store their bits right-aligned in an integer, with the first
//! (most significant) bit of the sequence at position `len - 1`. Equal-length
//! values therefore compare by numeric value, which gives length-lexicographic
//! order when length is compared first.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::LabError;

/// Longest bit sequence representable (conditions may be up to `2 * N_max`).
pub const MAX_BITS: u32 = 128;

/// A finite bit sequence of at most 128 bits.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct BitString {
    len: u8,
    bits: u128,
}

impl BitString {
    /// The empty string Λ.
    pub const EMPTY: BitString = BitString { len: 0, bits: 0 };

    /// Builds a sequence from the low `len` bits of `bits`.
    pub fn new(bits: u128, len: u32) -> BitString {
        assert!(len <= MAX_BITS, "bit string longer than {MAX_BITS} bits");
        let masked = if len == MAX_BITS { bits } else { bits & ((1u128 << len) - 1) };
        BitString { len: len as u8, bits: masked }
    }

    pub fn from_u64(value: u64, len: u32) -> BitString {
        BitString::new(value as u128, len)
    }

    pub fn len(&self) -> u32 {
        self.len as u32
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// The numeric value of the sequence read MSB-first.
    pub fn value(&self) -> u128 {
        self.bits
    }

    /// Bit at position `i`, counted from the start of the sequence.
    pub fn bit(&self, i: u32) -> bool {
        debug_assert!(i < self.len());
        (self.bits >> (self.len() - 1 - i)) & 1 == 1
    }

    /// Appends one bit; panics beyond 128 bits.
    pub fn push(&mut self, bit: bool) {
        assert!(self.len() < MAX_BITS);
        self.bits = (self.bits << 1) | bit as u128;
        self.len += 1;
    }

    pub fn concat(&self, other: &BitString) -> BitString {
        let len = self.len() + other.len();
        assert!(len <= MAX_BITS);
        let high = if other.len() == MAX_BITS { 0 } else { self.bits << other.len() };
        BitString { len: len as u8, bits: high | other.bits }
    }

    /// The substring `[start, start + len)`.
    pub fn slice(&self, start: u32, len: u32) -> BitString {
        assert!(start + len <= self.len());
        let shift = self.len() - start - len;
        BitString::new(self.bits >> shift, len)
    }

    pub fn count_ones(&self) -> u32 {
        self.bits.count_ones()
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len()).map(move |i| self.bit(i))
    }

    /// Every string of exactly `len` bits, in increasing numeric order.
    pub fn all_of_len(len: u32) -> impl Iterator<Item = BitString> {
        assert!(len < 64, "refusing to enumerate 2^{len} strings");
        (0..1u64 << len).map(move |v| BitString::from_u64(v, len))
    }

    /// Every string of length at most `max_len`, in length-lexicographic order.
    pub fn all_up_to_len(max_len: u32) -> impl Iterator<Item = BitString> {
        (0..=max_len).flat_map(BitString::all_of_len)
    }

    /// Fixed-width MSB-first numeral.
    pub fn numeral(value: u64, width: u32) -> BitString {
        assert!(width >= 64 || value < (1u64 << width), "{value} does not fit in {width} bits");
        BitString::from_u64(value, width)
    }

    /// Packs the bits MSB-first into `ceil(len / 8)` bytes, zero padded.
    pub fn to_bytes(&self) -> Vec<u8> {
        let nbytes = self.len().div_ceil(8) as usize;
        let padded = self.bits << (nbytes as u32 * 8 - self.len());
        let all = padded.to_be_bytes();
        all[16 - nbytes..].to_vec()
    }

    pub fn from_bytes(bytes: &[u8], len: u32) -> Result<BitString, LabError> {
        let nbytes = len.div_ceil(8) as usize;
        if len > MAX_BITS || bytes.len() != nbytes {
            return Err(LabError::InvalidArgument(format!(
                "{} bytes cannot hold a {len}-bit string",
                bytes.len()
            )));
        }
        let mut buf = [0u8; 16];
        buf[16 - nbytes..].copy_from_slice(bytes);
        let padded = u128::from_be_bytes(buf);
        let pad = nbytes as u32 * 8 - len;
        if padded & ((1u128 << pad) - 1) != 0 {
            return Err(LabError::InvalidArgument("non-zero padding bits".into()));
        }
        Ok(BitString::new(padded >> pad, len))
    }
}

impl Ord for BitString {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.len, self.bits).cmp(&(other.len, other.bits))
    }
}

impl PartialOrd for BitString {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_empty() {
            return write!(f, "Λ");
        }
        for b in self.iter() {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "\"{self}\"")
    }
}

impl FromStr for BitString {
    type Err = LabError;

    /// Accepts `0`/`1` characters, ignores spaces and underscores; `Λ` or `""` is empty.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut out = BitString::EMPTY;
        for ch in s.chars() {
            match ch {
                '0' | '1' => {
                    if out.len() == MAX_BITS {
                        return Err(LabError::InvalidArgument(format!("{s:?} is too long")));
                    }
                    out.push(ch == '1');
                }
                ' ' | '_' | 'Λ' => {}
                _ => return Err(LabError::InvalidArgument(format!("bad bit {ch:?} in {s:?}"))),
            }
        }
        Ok(out)
    }
}

/// A machine program: a bit sequence of at most 32 bits.
///
/// Programs are indexed in length-lexicographic order: index `i` is the
/// program whose length is `floor(log2(i + 1))` and whose value is
/// `i + 1 - 2^len`. Index order and program order coincide.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Program {
    len: u8,
    bits: u32,
}

impl Program {
    pub const EMPTY: Program = Program { len: 0, bits: 0 };

    pub fn new(bits: u32, len: u32) -> Program {
        assert!(len <= 31);
        Program { len: len as u8, bits: bits & ((1u32 << len) - 1) }
    }

    pub fn len(&self) -> u32 {
        self.len as u32
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn from_index(index: u64) -> Program {
        let len = 63 - (index + 1).leading_zeros();
        Program::new((index + 1 - (1u64 << len)) as u32, len)
    }

    pub fn index(&self) -> u64 {
        (1u64 << self.len) - 1 + self.bits as u64
    }

    /// Number of programs of length at most `max_len`.
    pub fn count_up_to(max_len: u32) -> u64 {
        (1u64 << (max_len + 1)) - 1
    }

    /// Number of complete 3-bit opcodes.
    pub fn opcode_count(&self) -> usize {
        self.len as usize / 3
    }

    /// The `i`-th 3-bit opcode, MSB-first.
    pub fn opcode(&self, i: usize) -> u8 {
        let shift = self.len as usize - 3 * (i + 1);
        ((self.bits >> shift) & 0b111) as u8
    }

    /// Concatenates 3-bit opcodes into a program.
    pub fn from_opcodes(ops: &[u8]) -> Program {
        let mut bits = 0u32;
        for &op in ops {
            assert!(op < 8);
            bits = (bits << 3) | op as u32;
        }
        Program::new(bits, 3 * ops.len() as u32)
    }

    pub fn as_bitstring(&self) -> BitString {
        BitString::new(self.bits as u128, self.len())
    }
}

impl fmt::Display for Program {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(&self.as_bitstring(), f)
    }
}

impl fmt::Debug for Program {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Program(\"{self}\")")
    }
}

impl FromStr for Program {
    type Err = LabError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let b: BitString = s.parse()?;
        if b.len() > 31 {
            return Err(LabError::InvalidArgument(format!("program {s:?} longer than 31 bits")));
        }
        Ok(Program::new(b.value() as u32, b.len()))
    }
}

/// Smallest `l` with `2^l >= size`; `ceil_log2(1) == 0`.
pub fn ceil_log2(size: u64) -> u32 {
    assert!(size > 0);
    64 - (size - 1).leading_zeros()
}
