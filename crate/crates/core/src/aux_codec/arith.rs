//! Adaptive order-0 binary arithmetic coder over a 32-bit range with
//! underflow (pending bit) handling.

use super::BitString;
use crate::error::{Error, Result};

const TOP: u64 = 1 << 32;
const HALF: u64 = TOP / 2;
const QUARTER: u64 = TOP / 4;

/// Counts are halved once their sum reaches this value.
pub const MODEL_LIMIT: u32 = 1 << 16;

#[derive(Debug, Clone, Copy)]
struct Model {
    c0: u32,
    c1: u32,
}

impl Model {
    fn new() -> Self {
        Self { c0: 1, c1: 1 }
    }

    #[inline]
    fn update(&mut self, bit: bool) {
        if bit {
            self.c1 += 1;
        } else {
            self.c0 += 1;
        }
        if self.c0 + self.c1 >= MODEL_LIMIT {
            self.c0 = (self.c0 / 2).max(1);
            self.c1 = (self.c1 / 2).max(1);
        }
    }
}

/// Interval state shared by encoder and decoder. The decoder replays the
/// encoder's output through a checking sink, so any corruption, truncation
/// or wrong symbol count shows up as a mismatch.
struct Coder<S: FnMut(bool) -> bool> {
    low: u64,
    high: u64,
    pending: u64,
    sink: S,
    ok: bool,
}

impl<S: FnMut(bool) -> bool> Coder<S> {
    fn new(sink: S) -> Self {
        Self {
            low: 0,
            high: TOP - 1,
            pending: 0,
            sink,
            ok: true,
        }
    }

    #[inline]
    fn split(&self, m: &Model) -> u64 {
        let range = self.high - self.low + 1;
        self.low + range * u64::from(m.c0) / u64::from(m.c0 + m.c1) - 1
    }

    #[inline]
    fn emit(&mut self, bit: bool) {
        self.ok &= (self.sink)(bit);
        while self.pending > 0 {
            self.ok &= (self.sink)(!bit);
            self.pending -= 1;
        }
    }

    /// Narrows to the sub-interval of `bit` and renormalizes. Returns the
    /// number of bits shifted out of the window so the decoder can follow.
    #[inline]
    fn narrow(&mut self, split: u64, bit: bool) -> u32 {
        if bit {
            self.low = split + 1;
        } else {
            self.high = split;
        }
        let mut shifts = 0;
        loop {
            if self.high < HALF {
                self.emit(false);
            } else if self.low >= HALF {
                self.emit(true);
                self.low -= HALF;
                self.high -= HALF;
            } else if self.low >= QUARTER && self.high < HALF + QUARTER {
                self.pending += 1;
                self.low -= QUARTER;
                self.high -= QUARTER;
            } else {
                break;
            }
            self.low <<= 1;
            self.high = (self.high << 1) | 1;
            shifts += 1;
        }
        shifts
    }

    fn finish(&mut self) {
        self.pending += 1;
        self.emit(self.low >= QUARTER);
    }
}

pub fn arith_encode(bits: &BitString) -> BitString {
    let mut out = BitString::with_capacity(bits.len() / 2 + 8);
    if bits.is_empty() {
        return out;
    }
    {
        let mut coder = Coder::new(|b| {
            out.push(b);
            true
        });
        let mut model = Model::new();
        for bit in bits.iter() {
            let split = coder.split(&model);
            coder.narrow(split, bit);
            model.update(bit);
        }
        coder.finish();
    }
    out
}

/// Decodes exactly `n` symbols. The code must be exactly what
/// `arith_encode` produced for those symbols.
pub fn arith_decode(code: &BitString, n: usize) -> Result<BitString> {
    if n == 0 {
        return if code.is_empty() {
            Ok(BitString::new())
        } else {
            Err(Error::CodecDesync)
        };
    }
    let code_bits = code.as_slice();
    let read = |i: usize| u64::from(code_bits.get(i).copied().unwrap_or(false));

    let mut value = 0u64;
    for i in 0..32 {
        value = (value << 1) | read(i);
    }
    let mut next = 32;

    let mut checked = 0usize;
    let mut out = BitString::with_capacity(n);
    let mut model = Model::new();
    let mut coder = Coder::new(|b| {
        let matches = code_bits.get(checked) == Some(&b);
        checked += 1;
        matches
    });

    for _ in 0..n {
        let split = coder.split(&model);
        let bit = value > split;
        // the window's offset relative to `low` is invariant under the
        // subtractions in `narrow`, so track value the same way
        let before_low = if bit { split + 1 } else { coder.low };
        let offset = value - before_low;
        let shifts = coder.narrow(split, bit);
        // replay the shifts on value: low's evolution is known, so value is
        // low + (offset << shifts) + the next code bits
        let mut v = offset;
        for _ in 0..shifts {
            v = (v << 1) | read(next);
            next += 1;
        }
        value = coder.low + v;
        if value > coder.high {
            return Err(Error::CodecDesync);
        }
        out.push(bit);
        model.update(bit);
    }
    coder.finish();
    let ok = coder.ok;
    if !ok || checked != code.len() {
        return Err(Error::CodecDesync);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn empty_round_trip() {
        assert!(arith_encode(&BitString::new()).is_empty());
        assert!(arith_decode(&BitString::new(), 0).unwrap().is_empty());
    }

    #[test]
    fn exhaustive_short_strings() {
        for len in 0..=12u32 {
            for v in 0..(1u64 << len) {
                let mut s = BitString::new();
                s.push_uint(v, len);
                let code = arith_encode(&s);
                assert_eq!(arith_decode(&code, s.len()).unwrap(), s);
            }
        }
    }

    #[test]
    fn zeros_compress_well() {
        let code = arith_encode(&BitString::zeros(10_000));
        assert!(code.len() < 200, "{} bits", code.len());
        assert_eq!(arith_decode(&code, 10_000).unwrap(), BitString::zeros(10_000));
    }

    #[test]
    fn wrong_count_is_desync() {
        let s = BitString::from("0110100111010001011101");
        let code = arith_encode(&s);
        for n in [0, 1, s.len() - 1, s.len() + 1, s.len() + 40] {
            assert!(
                matches!(arith_decode(&code, n), Err(Error::CodecDesync)),
                "n = {n}"
            );
        }
    }

    #[test]
    fn trailing_or_missing_bits_are_desync() {
        let s: BitString = (0..500).map(|i| i % 7 == 0).collect();
        let code = arith_encode(&s);
        let mut longer = code.clone();
        longer.push(false);
        assert!(arith_decode(&longer, s.len()).is_err());
        let shorter = code.slice(0..code.len() - 1);
        assert!(arith_decode(&shorter, s.len()).is_err());
    }

    #[test]
    fn flipped_bit_is_rejected_or_canonical() {
        let s: BitString = (0..300).map(|i| (i * 37) % 11 < 3).collect();
        let code = arith_encode(&s);
        for i in 0..code.len() {
            let flipped: BitString = code
                .iter()
                .enumerate()
                .map(|(j, b)| b ^ (i == j))
                .collect();
            // a flip either breaks the code or lands on the code of some
            // other string; the decoder never accepts a non-canonical code
            if let Ok(other) = arith_decode(&flipped, s.len()) {
                assert_ne!(other, s, "flip at {i}");
                assert_eq!(arith_encode(&other), flipped, "flip at {i}");
            }
        }
    }

    proptest! {
        #[test]
        fn round_trip(bits in proptest::collection::vec(any::<bool>(), 0..3000)) {
            let s = BitString::from(bits);
            let code = arith_encode(&s);
            prop_assert_eq!(arith_decode(&code, s.len()).unwrap(), s);
        }

        #[test]
        fn skewed_round_trip(ones in proptest::collection::btree_set(0usize..20_000, 0..40)) {
            let s: BitString = (0..20_000).map(|i| ones.contains(&i)).collect();
            let code = arith_encode(&s);
            prop_assert_eq!(arith_decode(&code, s.len()).unwrap(), s);
        }
    }
}
