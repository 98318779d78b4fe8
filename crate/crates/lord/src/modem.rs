//! Square QAM constellations, reflected-Gray bit mapping, and PAM slicing.
//!
//! An `M^2`-QAM symbol is treated as two independent `M`-PAM coordinates on
//! the odd integers `{-(M-1), ..., -1, 1, ..., M-1}`. Bit words carry the I
//! label first and the Q label second, each `log2 M` bits MSB first, with a
//! reflected Gray labeling per dimension (adjacent levels differ in exactly
//! one bit). The detectors slice in these integer coordinates; the `amp`
//! factor restores unit average symbol energy at transmit.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// One square QAM constellation.
#[derive(Debug, Clone, PartialEq)]
pub struct Constellation {
    /// PAM order per real dimension (`M`), a power of two.
    m: usize,
    /// The `M` odd-integer levels in ascending order.
    levels: Vec<i32>,
    /// Transmit scale giving `E[|X_c|^2] = 1`.
    amp: f64,
    /// Bits per complex symbol, `2 log2 M`.
    mc: usize,
}

impl Constellation {
    #[inline]
    pub fn pam_order(&self) -> usize {
        self.m
    }

    #[inline]
    pub fn qam_size(&self) -> usize {
        self.m * self.m
    }

    #[inline]
    pub fn levels(&self) -> &[i32] {
        &self.levels
    }

    #[inline]
    pub fn amp(&self) -> f64 {
        self.amp
    }

    /// Bits per complex symbol.
    #[inline]
    pub fn bits_per_symbol(&self) -> usize {
        self.mc
    }

    /// Bits per real (PAM) dimension.
    #[inline]
    pub fn bits_per_pam(&self) -> usize {
        self.mc / 2
    }

    /// Gray label of a level, as bits MSB first.
    pub fn level_bits(&self, level: i32) -> Vec<u8> {
        let rank = ((level + self.m as i32 - 1) / 2) as usize;
        debug_assert!(rank < self.m && self.levels[rank] == level);
        let gray = rank ^ (rank >> 1);
        let nb = self.bits_per_pam();
        (0..nb).map(|i| ((gray >> (nb - 1 - i)) & 1) as u8).collect()
    }

    /// Single bit of a level's Gray label, `pos` counted MSB first.
    #[inline]
    pub fn level_bit(&self, level: i32, pos: usize) -> u8 {
        let rank = ((level + self.m as i32 - 1) / 2) as usize;
        let gray = rank ^ (rank >> 1);
        let nb = self.bits_per_pam();
        ((gray >> (nb - 1 - pos)) & 1) as u8
    }

    /// Level whose Gray label is `bits` (MSB first).
    pub fn bits_to_level(&self, bits: &[u8]) -> Result<i32> {
        if bits.len() != self.bits_per_pam() {
            return Err(Error::BitWordLength {
                got: bits.len(),
                want: self.bits_per_pam(),
            });
        }
        let gray = bits.iter().fold(0usize, |acc, &b| (acc << 1) | b as usize);
        // Inverse Gray code: prefix XOR.
        let mut rank = gray;
        let mut shift = 1;
        while (1 << shift) <= self.m {
            rank ^= rank >> shift;
            shift <<= 1;
        }
        Ok(self.levels[rank])
    }
}

/// Builds a supported square constellation from its QAM size `M^2`.
pub fn build_constellation(m2: usize) -> Result<Constellation> {
    let m = match m2 {
        4 => 2,
        16 => 4,
        64 => 8,
        other => return Err(Error::UnsupportedConstellation(other)),
    };
    let levels: Vec<i32> = (0..m).map(|i| 2 * i as i32 - (m as i32 - 1)).collect();
    // Mean of level^2 is (M^2 - 1)/3 per dimension, so this gives unit
    // average complex symbol energy.
    let amp = (3.0 / (2.0 * (m2 as f64 - 1.0))).sqrt();
    Ok(Constellation {
        m,
        levels,
        amp,
        mc: 2 * m.ilog2() as usize,
    })
}

/// Maps a bit word (I bits then Q bits, MSB first) to a unit-average-energy
/// complex symbol.
pub fn map_bits(word: &[u8], c: &Constellation) -> Result<Complex64> {
    if word.len() != c.bits_per_symbol() {
        return Err(Error::BitWordLength {
            got: word.len(),
            want: c.bits_per_symbol(),
        });
    }
    let nb = c.bits_per_pam();
    let li = c.bits_to_level(&word[..nb])?;
    let lq = c.bits_to_level(&word[nb..])?;
    Ok(Complex64::new(li as f64, lq as f64) * c.amp())
}

/// Hard inverse of [`map_bits`]: slices each dimension and reads the labels.
pub fn symbol_to_bits(symbol: Complex64, c: &Constellation) -> Vec<u8> {
    let li = slice_pam(symbol.re / c.amp(), c);
    let lq = slice_pam(symbol.im / c.amp(), c);
    let mut bits = c.level_bits(li);
    bits.extend(c.level_bits(lq));
    bits
}

/// Nearest PAM level to `v` in integer-level coordinates, clipped to the
/// extreme levels. Exact midpoints resolve to the lower level.
pub fn slice_pam(v: f64, c: &Constellation) -> i32 {
    let m = c.pam_order() as i32;
    // Rank space: levels sit at integers 0..M, decision midpoints at
    // half-integers; round half down.
    let rank = ((v + (m - 1) as f64) / 2.0 - 0.5).ceil();
    let rank = rank.clamp(0.0, (m - 1) as f64) as i32;
    2 * rank - (m - 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn supported_sizes() {
        let c4 = build_constellation(4).unwrap();
        assert_eq!(c4.levels(), &[-1, 1]);
        assert!((c4.amp() - (0.5f64).sqrt()).abs() < 1e-15);
        assert_eq!(c4.bits_per_symbol(), 2);

        let c16 = build_constellation(16).unwrap();
        assert_eq!(c16.levels(), &[-3, -1, 1, 3]);
        assert!((c16.amp() - (0.1f64).sqrt()).abs() < 1e-15);
        assert_eq!(c16.bits_per_symbol(), 4);

        let c64 = build_constellation(64).unwrap();
        assert_eq!(c64.levels(), &[-7, -5, -3, -1, 1, 3, 5, 7]);
        assert!((c64.amp() - (1.0f64 / 42.0).sqrt()).abs() < 1e-15);
        assert_eq!(c64.bits_per_symbol(), 6);

        assert!(build_constellation(32).is_err());
    }

    #[test]
    fn unit_energy() {
        for m2 in [4usize, 16, 64] {
            let c = build_constellation(m2).unwrap();
            let mean_sq: f64 = c
                .levels()
                .iter()
                .map(|&l| (l as f64 * c.amp()).powi(2))
                .sum::<f64>()
                / c.pam_order() as f64;
            assert!((2.0 * mean_sq - 1.0).abs() < 1e-12, "E|X|^2 != 1 for {m2}");
        }
    }

    #[test]
    fn gray_adjacency() {
        for m2 in [4usize, 16, 64] {
            let c = build_constellation(m2).unwrap();
            for w in c.levels().windows(2) {
                let a = c.level_bits(w[0]);
                let b = c.level_bits(w[1]);
                let diff: usize = a.iter().zip(&b).filter(|(x, y)| x != y).count();
                assert_eq!(diff, 1, "levels {} and {} in {m2}-QAM", w[0], w[1]);
            }
        }
    }

    #[test]
    fn qpsk_word_convention() {
        // 0 -> -1, 1 -> +1 per dimension; word [1, 0] is I=+1, Q=-1.
        let c = build_constellation(4).unwrap();
        let s = map_bits(&[1, 0], &c).unwrap();
        assert!((s - Complex64::new(c.amp(), -c.amp())).norm() < 1e-15);
    }

    #[test]
    fn mapping_is_a_bijection() {
        let c = build_constellation(16).unwrap();
        let mut seen = std::collections::HashSet::new();
        for w in 0..16u32 {
            let word: Vec<u8> = (0..4).map(|i| ((w >> (3 - i)) & 1) as u8).collect();
            let s = map_bits(&word, &c).unwrap();
            assert!(seen.insert(format!("{:.9},{:.9}", s.re, s.im)));
            assert_eq!(symbol_to_bits(s, &c), word);
        }
        assert_eq!(seen.len(), 16);
        assert!(map_bits(&[1, 0, 1], &c).is_err());
    }

    #[test]
    fn slicing_examples() {
        let c = build_constellation(16).unwrap();
        assert_eq!(slice_pam(1.0, &c), 1);
        assert_eq!(slice_pam(1.7, &c), 1); // nearest of {-3,-1,1,3}
        assert_eq!(slice_pam(100.0, &c), 3);
        assert_eq!(slice_pam(-100.0, &c), -3);
        // Midpoints resolve to the lower level.
        assert_eq!(slice_pam(2.0, &c), 1);
        assert_eq!(slice_pam(0.0, &c), -1);
        assert_eq!(slice_pam(-2.0, &c), -3);
    }

    #[test]
    fn slicing_matches_nearest_neighbor_search() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for m2 in [4usize, 16, 64] {
            let c = build_constellation(m2).unwrap();
            for _ in 0..100_000 / 3 {
                let v: f64 = rng.random_range(-12.0..12.0);
                let sliced = slice_pam(v, &c);
                let best = c
                    .levels()
                    .iter()
                    .copied()
                    .min_by(|&a, &b| {
                        (v - a as f64)
                            .abs()
                            .partial_cmp(&(v - b as f64).abs())
                            .unwrap()
                    })
                    .unwrap();
                assert!(
                    (v - sliced as f64).abs() <= (v - best as f64).abs() + 1e-12,
                    "slice({v}) = {sliced}, brute force {best}"
                );
            }
        }
    }
}
