//! Binary activation vectors over a fixed sensor index set.
//!
//! A configuration marks each of the `n` sensors as active (1) or sleeping
//! (0). It is stored as a bitmask, so enumeration over all `2^n` or all
//! `C(n, k)` configurations stays cheap for the exact oracles.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest supported sensor count; bitmasks are held in a `u64`.
pub const MAX_SENSORS: usize = 64;

/// Activation vector for `n` sensors, bit `j` set means sensor `j` is active.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, PartialOrd, Ord)]
pub struct Configuration {
    bits: u64,
    n: usize,
}

impl Configuration {
    /// Builds a configuration, rejecting bits at index `>= n` and `n > 64`.
    pub fn new(bits: u64, n: usize) -> Result<Self> {
        if n == 0 || n > MAX_SENSORS {
            return Err(Error::InvalidParameter(format!(
                "sensor count must be in 1..={MAX_SENSORS}, got {n}"
            )));
        }
        if bits & !mask(n) != 0 {
            return Err(Error::InvalidParameter(format!(
                "bitmask {bits:#x} has bits set at index >= {n}"
            )));
        }
        Ok(Self { bits, n })
    }

    /// All sensors sleeping.
    pub fn empty(n: usize) -> Result<Self> {
        Self::new(0, n)
    }

    /// All sensors active.
    pub fn full(n: usize) -> Result<Self> {
        Self::new(mask(n), n)
    }

    /// Configuration with exactly the listed sensors active.
    pub fn from_indices(indices: &[usize], n: usize) -> Result<Self> {
        let mut bits = 0u64;
        for &j in indices {
            if j >= n {
                return Err(Error::InvalidParameter(format!(
                    "sensor index {j} out of range for n = {n}"
                )));
            }
            bits |= 1 << j;
        }
        Self::new(bits, n)
    }

    pub fn bits(&self) -> u64 {
        self.bits
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of active sensors.
    pub fn popcount(&self) -> u32 {
        self.bits.count_ones()
    }

    pub fn is_empty(&self) -> bool {
        self.bits == 0
    }

    pub fn is_full(&self) -> bool {
        self.bits == mask(self.n)
    }

    pub fn get(&self, j: usize) -> bool {
        debug_assert!(j < self.n);
        self.bits >> j & 1 == 1
    }

    /// Copy with sensor `j` forced to `active`.
    pub fn with_bit(&self, j: usize, active: bool) -> Self {
        debug_assert!(j < self.n);
        let bits = if active {
            self.bits | 1 << j
        } else {
            self.bits & !(1 << j)
        };
        Self { bits, n: self.n }
    }

    /// Copy with sensor `j` toggled.
    pub fn flipped(&self, j: usize) -> Self {
        debug_assert!(j < self.n);
        Self {
            bits: self.bits ^ (1 << j),
            n: self.n,
        }
    }

    /// Active sensor indices in ascending order.
    pub fn active_indices(&self) -> Vec<usize> {
        (0..self.n).filter(|&j| self.get(j)).collect()
    }

    /// Sleeping sensor indices in ascending order.
    pub fn inactive_indices(&self) -> Vec<usize> {
        (0..self.n).filter(|&j| !self.get(j)).collect()
    }

    /// True when every sensor active here is also active in `other`.
    pub fn is_subset_of(&self, other: &Self) -> bool {
        self.n == other.n && self.bits & !other.bits == 0
    }

    /// Hamming distance between two configurations of equal length.
    pub fn hamming(&self, other: &Self) -> u32 {
        debug_assert_eq!(self.n, other.n);
        (self.bits ^ other.bits).count_ones()
    }

    /// Lowercase hex rendering of the bitmask, no prefix.
    pub fn to_hex(&self) -> String {
        format!("{:x}", self.bits)
    }

    /// Parses a lowercase/uppercase hex bitmask for `n` sensors.
    pub fn from_hex(s: &str, n: usize) -> Result<Self> {
        let t = s.trim().trim_start_matches("0x");
        let bits = u64::from_str_radix(t, 16)
            .map_err(|e| Error::Parse(format!("bad hex bitmask {s:?}: {e}")))?;
        Self::new(bits, n)
    }
}

impl std::fmt::Display for Configuration {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:x}", self.bits)
    }
}

// Serialized as {"bits": "<hex>", "n": N} so masks survive JSON number precision.
impl Serialize for Configuration {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = s.serialize_struct("Configuration", 2)?;
        st.serialize_field("bits", &self.to_hex())?;
        st.serialize_field("n", &self.n)?;
        st.end()
    }
}

impl<'de> Deserialize<'de> for Configuration {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Repr {
            bits: String,
            n: usize,
        }
        let r = Repr::deserialize(d)?;
        Configuration::from_hex(&r.bits, r.n).map_err(serde::de::Error::custom)
    }
}

/// Bitmask with the low `n` bits set.
pub(crate) fn mask(n: usize) -> u64 {
    debug_assert!(n >= 1 && n <= MAX_SENSORS);
    if n == MAX_SENSORS {
        u64::MAX
    } else {
        (1u64 << n) - 1
    }
}

/// Iterates all bitmasks of popcount `k` over `n` bits in ascending order.
///
/// Uses Gosper's hack to step to the next mask with the same popcount.
pub fn cardinality_masks(n: usize, k: usize) -> impl Iterator<Item = u64> {
    assert!(n >= 1 && n <= MAX_SENSORS && k <= n);
    let limit = mask(n);
    let first = if k == 0 { 0 } else { mask(k) };
    let mut cur = Some(first);
    std::iter::from_fn(move || {
        let v = cur?;
        cur = if v == 0 {
            None
        } else {
            let c = v & v.wrapping_neg();
            let r = v + c;
            // (((r ^ v) >> 2) / c) | r restores the trailing ones block.
            let next = (((r ^ v) >> 2) / c) | r;
            (next <= limit && r != 0).then_some(next)
        };
        Some(v)
    })
}

/// Binomial coefficient C(n, k), saturating at `u128::MAX`.
pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.saturating_mul((n - i) as u128) / (i as u128 + 1);
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_out_of_range_bits() {
        assert!(Configuration::new(0b100, 2).is_err());
        assert!(Configuration::new(0b011, 2).is_ok());
    }

    #[test]
    fn popcount_and_indices_agree() {
        let c = Configuration::from_indices(&[0, 3, 4], 6).unwrap();
        assert_eq!(c.popcount(), 3);
        assert_eq!(c.active_indices(), vec![0, 3, 4]);
        assert_eq!(c.inactive_indices(), vec![1, 2, 5]);
        assert_eq!(c.to_hex(), "19");
    }

    #[test]
    fn flip_is_involutive() {
        let c = Configuration::new(0b1010, 4).unwrap();
        for j in 0..4 {
            assert_eq!(c.flipped(j).flipped(j), c, "double flip at {j}");
        }
    }

    #[test]
    fn hex_round_trip() {
        let c = Configuration::new(0x2b, 6).unwrap();
        assert_eq!(Configuration::from_hex(&c.to_hex(), 6).unwrap(), c);
    }

    #[test]
    fn serde_round_trip() {
        let c = Configuration::new(0x1f, 9).unwrap();
        let s = serde_json::to_string(&c).unwrap();
        assert_eq!(s, r#"{"bits":"1f","n":9}"#);
        let back: Configuration = serde_json::from_str(&s).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn cardinality_masks_enumerates_choose() {
        let got: Vec<u64> = cardinality_masks(5, 2).collect();
        assert_eq!(got.len(), binomial(5, 2) as usize);
        assert!(got.windows(2).all(|w| w[0] < w[1]), "ascending order");
        assert!(got.iter().all(|m| m.count_ones() == 2));
        assert_eq!(cardinality_masks(4, 0).collect::<Vec<_>>(), vec![0]);
        assert_eq!(cardinality_masks(4, 4).collect::<Vec<_>>(), vec![0b1111]);
    }

    #[test]
    fn binomial_values() {
        assert_eq!(binomial(12, 5), 792);
        assert_eq!(binomial(18, 10), 43758);
        assert_eq!(binomial(5, 6), 0);
    }
}
