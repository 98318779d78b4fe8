//! Real-valued lattice formulation of the complex MIMO system.
//!
//! A complex system `y_c = H_c x_c + n_c` with `L_t` transmit and `L_r`
//! receive antennas is rewritten over the reals by interleaving the I and Q
//! parts of every complex entry. The resulting `2L_r x 2L_t` matrix carries
//! its columns in pairs: the two columns of a pair are orthogonal by
//! construction, have equal norms, and cross products between pairs come in
//! rotation form. All later preprocessing stages live off these identities.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Complex channel matrix with `lr` rows (receive antennas) and `lt`
/// columns (transmit antennas), stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexChannel {
    entries: Vec<Complex64>,
    lt: usize,
    lr: usize,
}

impl ComplexChannel {
    pub fn new(lr: usize, lt: usize, entries: Vec<Complex64>) -> Result<Self> {
        if entries.len() != lr * lt || lt == 0 || lr == 0 {
            return Err(Error::DimensionMismatch(format!(
                "channel wants {lr}x{lt} = {} entries, got {}",
                lr * lt,
                entries.len()
            )));
        }
        if entries.iter().any(|e| !e.re.is_finite() || !e.im.is_finite()) {
            return Err(Error::DimensionMismatch(
                "channel entries must be finite".into(),
            ));
        }
        Ok(Self { entries, lt, lr })
    }

    pub fn identity(n: usize) -> Self {
        let mut entries = vec![Complex64::new(0.0, 0.0); n * n];
        for i in 0..n {
            entries[i * n + i] = Complex64::new(1.0, 0.0);
        }
        Self {
            entries,
            lt: n,
            lr: n,
        }
    }

    #[inline]
    pub fn lt(&self) -> usize {
        self.lt
    }

    #[inline]
    pub fn lr(&self) -> usize {
        self.lr
    }

    /// Gain from transmit antenna `i` to receive antenna `j` (0-based).
    #[inline]
    pub fn gain(&self, j: usize, i: usize) -> Complex64 {
        self.entries[j * self.lt + i]
    }

    /// Scales every gain by a real factor, e.g. to fold transmit energy
    /// normalization into the channel.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            entries: self.entries.iter().map(|e| e * factor).collect(),
            lt: self.lt,
            lr: self.lr,
        }
    }

    /// `y = H x` for a complex symbol vector.
    pub fn apply(&self, x: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(x.len(), self.lt, "symbol vector length");
        (0..self.lr)
            .map(|j| (0..self.lt).map(|i| self.gain(j, i) * x[i]).sum())
            .collect()
    }
}

/// Real channel matrix with interleaved I/Q column pairs, stored by column.
///
/// Column `2k` (0-based) stacks `[Re H_1k, Im H_1k, ..., Re H_{Lr,k}, Im H_{Lr,k}]`
/// and column `2k+1` the 90-degree rotation `[-Im H_1k, Re H_1k, ...]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RealLattice {
    cols: Vec<Vec<f64>>,
    lt: usize,
    lr: usize,
}

impl RealLattice {
    #[inline]
    pub fn lt(&self) -> usize {
        self.lt
    }

    #[inline]
    pub fn lr(&self) -> usize {
        self.lr
    }

    /// Number of real rows, `2 L_r`.
    #[inline]
    pub fn rows(&self) -> usize {
        2 * self.lr
    }

    /// Number of real columns, `2 L_t`.
    #[inline]
    pub fn ncols(&self) -> usize {
        2 * self.lt
    }

    /// Real column `k` (0-based).
    #[inline]
    pub fn col(&self, k: usize) -> &[f64] {
        &self.cols[k]
    }

    /// Reorders the column pairs so that pair `p` of the result is the pair
    /// of complex symbol `perm[p]` (0-based symbol indices).
    pub fn permuted(&self, perm: &[usize]) -> Self {
        assert_eq!(perm.len(), self.lt, "permutation length");
        let mut cols = Vec::with_capacity(2 * self.lt);
        for &sym in perm {
            cols.push(self.cols[2 * sym].clone());
            cols.push(self.cols[2 * sym + 1].clone());
        }
        Self {
            cols,
            lt: self.lt,
            lr: self.lr,
        }
    }

    /// `H_r x` for a real symbol vector of length `2 L_t`.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), 2 * self.lt, "real symbol vector length");
        let mut y = vec![0.0; 2 * self.lr];
        for (c, &xc) in self.cols.iter().zip(x) {
            for (yi, &ci) in y.iter_mut().zip(c) {
                *yi += ci * xc;
            }
        }
        y
    }
}

/// Maps the complex channel onto its real lattice generator.
pub fn realize_channel(hc: &ComplexChannel) -> RealLattice {
    let (lt, lr) = (hc.lt(), hc.lr());
    let mut cols = Vec::with_capacity(2 * lt);
    for i in 0..lt {
        let mut ci = Vec::with_capacity(2 * lr);
        let mut cq = Vec::with_capacity(2 * lr);
        for j in 0..lr {
            let g = hc.gain(j, i);
            ci.push(g.re);
            ci.push(g.im);
            cq.push(-g.im);
            cq.push(g.re);
        }
        cols.push(ci);
        cols.push(cq);
    }
    RealLattice { cols, lt, lr }
}

/// Stacks a complex observation as `[Re Y_1, Im Y_1, ..., Re Y_Lr, Im Y_Lr]`.
pub fn realize_observation(yc: &[Complex64]) -> Vec<f64> {
    let mut y = Vec::with_capacity(2 * yc.len());
    for v in yc {
        y.push(v.re);
        y.push(v.im);
    }
    y
}

/// Interleaves a complex symbol vector as `[X_1I, X_1Q, ..., X_LtI, X_LtQ]`.
pub fn interleave_symbols(xc: &[Complex64]) -> Vec<f64> {
    realize_observation(xc)
}

/// Inverse of [`interleave_symbols`].
pub fn deinterleave_symbols(xr: &[f64]) -> Vec<Complex64> {
    assert!(xr.len() % 2 == 0, "interleaved vector length must be even");
    xr.chunks_exact(2)
        .map(|p| Complex64::new(p[0], p[1]))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn random_channel(rng: &mut ChaCha8Rng, lr: usize, lt: usize) -> ComplexChannel {
        let entries = (0..lr * lt)
            .map(|_| {
                Complex64::new(
                    rng.sample::<f64, _>(StandardNormal),
                    rng.sample::<f64, _>(StandardNormal),
                )
            })
            .collect();
        ComplexChannel::new(lr, lt, entries).unwrap()
    }

    fn dot(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| x * y).sum()
    }

    #[test]
    fn identity_maps_to_identity() {
        let h = realize_channel(&ComplexChannel::identity(2));
        for k in 0..4 {
            for r in 0..4 {
                let want = if r == k { 1.0 } else { 0.0 };
                assert_eq!(h.col(k)[r], want);
            }
        }
    }

    #[test]
    fn pure_imaginary_gain() {
        let hc = ComplexChannel::new(1, 1, vec![Complex64::new(0.0, 1.0)]).unwrap();
        let h = realize_channel(&hc);
        assert_eq!(h.col(0), &[0.0, 1.0]);
        assert_eq!(h.col(1), &[-1.0, 0.0]);
        // As a 2x2 matrix by rows: [[0, -1], [1, 0]].
    }

    #[test]
    fn column_structure_2x2_example() {
        let hc = ComplexChannel::new(
            2,
            2,
            vec![
                Complex64::new(1.0, 0.0),
                Complex64::new(0.0, 1.0),
                Complex64::new(0.0, 0.0),
                Complex64::new(1.0, 0.0),
            ],
        )
        .unwrap();
        let h = realize_channel(&hc);
        assert_eq!(h.col(0), &[1.0, 0.0, 0.0, 0.0]);
        assert_eq!(h.col(1), &[0.0, 1.0, 0.0, 0.0]);
        assert_eq!(h.col(2), &[0.0, 1.0, 1.0, 0.0]);
        assert_eq!(h.col(3), &[-1.0, 0.0, 0.0, 1.0]);
        // Pairwise orthogonality relations, by direct dot products.
        assert_eq!(dot(h.col(0), h.col(1)), 0.0);
        assert_eq!(dot(h.col(2), h.col(3)), 0.0);
        assert_eq!(dot(h.col(0), h.col(2)), dot(h.col(1), h.col(3)));
        assert_eq!(dot(h.col(0), h.col(3)), -dot(h.col(1), h.col(2)));
    }

    #[test]
    fn observation_stacking() {
        assert_eq!(
            realize_observation(&[Complex64::new(1.0, 2.0)]),
            vec![1.0, 2.0]
        );
        assert_eq!(
            realize_observation(&[Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0)]),
            vec![0.0, 0.0, 0.0, 0.0]
        );
        assert_eq!(
            realize_observation(&[Complex64::new(3.0, -1.0), Complex64::new(-2.0, 0.0)]),
            vec![3.0, -1.0, -2.0, 0.0]
        );
    }

    #[test]
    fn symbol_interleaving_round_trip() {
        let xc = vec![Complex64::new(1.0, 1.0), Complex64::new(-1.0, -1.0)];
        let xr = interleave_symbols(&xc);
        assert_eq!(xr, vec![1.0, 1.0, -1.0, -1.0]);
        assert_eq!(deinterleave_symbols(&xr), xc);
        assert_eq!(
            interleave_symbols(&[Complex64::new(3.0, -3.0)]),
            vec![3.0, -3.0]
        );
    }

    #[test]
    fn pairwise_identities_hold_on_random_channels() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for trial in 0..10_000 {
            let (lr, lt) = match trial % 3 {
                0 => (2, 2),
                1 => (3, 2),
                _ => (4, 3),
            };
            let h = realize_channel(&random_channel(&mut rng, lr, lt));
            for k in 0..lt {
                let (hi, hq) = (h.col(2 * k), h.col(2 * k + 1));
                let n2 = dot(hi, hi);
                assert!(dot(hi, hq).abs() <= 1e-12 * n2);
                assert!((n2 - dot(hq, hq)).abs() <= 1e-12 * n2);
                for j in 0..lt {
                    if j == k {
                        continue;
                    }
                    let (gi, gq) = (h.col(2 * j), h.col(2 * j + 1));
                    let scale = n2.sqrt() * dot(gi, gi).sqrt();
                    assert!((dot(hi, gi) - dot(hq, gq)).abs() <= 1e-12 * scale);
                    assert!((dot(hi, gq) + dot(hq, gi)).abs() <= 1e-12 * scale);
                }
            }
        }
    }

    #[test]
    fn real_product_matches_complex_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..1000 {
            let hc = random_channel(&mut rng, 3, 2);
            let h = realize_channel(&hc);
            let xc: Vec<Complex64> = (0..2)
                .map(|_| {
                    Complex64::new(
                        rng.sample::<f64, _>(StandardNormal),
                        rng.sample::<f64, _>(StandardNormal),
                    )
                })
                .collect();
            let via_complex = realize_observation(&hc.apply(&xc));
            let via_real = h.apply(&interleave_symbols(&xc));
            let scale: f64 = via_complex.iter().map(|v| v * v).sum::<f64>().sqrt();
            for (a, b) in via_complex.iter().zip(&via_real) {
                assert!((a - b).abs() <= 1e-12 * scale.max(1.0));
            }
        }
    }
}
