use super::BitString;

const MUL: u64 = 6_364_136_223_846_793_005;
const INC: u64 = 1_442_695_040_888_963_407;

/// 64-bit LCG; each step yields the top bit of the new state.
#[derive(Debug, Clone)]
pub struct Lcg {
    state: u64,
}

impl Lcg {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    #[inline]
    pub fn next_bit(&mut self) -> bool {
        self.state = self.state.wrapping_mul(MUL).wrapping_add(INC);
        self.state >> 63 == 1
    }
}

impl Iterator for Lcg {
    type Item = bool;

    fn next(&mut self) -> Option<bool> {
        Some(self.next_bit())
    }
}

pub fn prng_payload(seed: u64, n: usize) -> BitString {
    Lcg::new(seed).take(n).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    /// The recurrence evaluated with 128-bit integers and an explicit modulus.
    fn oracle(seed: u64, n: usize) -> Vec<bool> {
        let m: u128 = 1 << 64;
        let mut s = seed as u128;
        (0..n)
            .map(|_| {
                s = (6364136223846793005u128 * s + 1442695040888963407u128) % m;
                s >= 1 << 63
            })
            .collect()
    }

    #[test]
    fn seed_zero_golden() {
        let bits = prng_payload(0, 8);
        assert_eq!(bits.as_slice(), oracle(0, 8).as_slice());
        assert_eq!(bits, BitString::from("00100100"));
    }

    #[test]
    fn matches_oracle_and_is_deterministic() {
        for seed in [1, 42, u64::MAX] {
            assert_eq!(prng_payload(seed, 500).as_slice(), oracle(seed, 500).as_slice());
            assert_eq!(prng_payload(seed, 500), prng_payload(seed, 500));
        }
        assert!(prng_payload(9, 0).is_empty());
    }
}
