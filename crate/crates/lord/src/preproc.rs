//! Channel orthogonalization into an upper-triangular real model.
//!
//! The preprocessing stage turns the real lattice system `y = H_r x + n`
//! into `ytilde = Rtilde x + ntilde` with `Rtilde` upper triangular, by a
//! Gram-Schmidt orthogonalization that defers all normalizations. Deferral
//! keeps every `2L_r`-element scalar product a function of raw channel
//! columns, so one shared [`GramCache`] serves every layer ordering: the
//! per-ordering work reduces to short scalar linear combinations.
//!
//! Three equivalent builders are provided:
//!
//! * [`preprocess_2tx`]: closed form for two transmit antennas, in the
//!   natural or shifted ordering.
//! * [`preprocess_gso`]: classic orthogonalization that tracks each
//!   orthogonal column as coefficients over the original columns; every
//!   derived scalar is a flat linear combination of cached products.
//! * [`preprocess_recursive`]: level-by-level scalar recursions (the
//!   modified-GSO counterpart of [`preprocess_gso`]), instrumented with the
//!   real-multiplication cost model.
//!
//! The per-component noise variances of the transformed model are
//! `(N0/2) * weights[i]`; the detector folds the weights into its metric, so
//! the model itself stays independent of the noise level.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::lattice::RealLattice;

/// Relative rank threshold on each orthogonalization pivot. Unnormalized
/// pivots grow as products of column norms, so the threshold is applied
/// against the positive product term of the pivot's own recursion rather
/// than as an absolute value.
pub const EPS_RANK: f64 = 1e-9;

/// Running count of real multiplications (RMs), split into terms that
/// depend only on the channel and terms that involve the observation.
///
/// Counts follow the standard operation-count model for this preprocessing:
/// every `2L_r`-element scalar product charges `2L_r`, every scalar pivot
/// update charges 3, and every transformed-observation or cross-term pair
/// charges 3 per real component. Counters are cheap value types; accumulate
/// per task and merge.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RmCounter {
    pub channel_rm: u64,
    pub obs_rm: u64,
}

impl RmCounter {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn total(&self) -> u64 {
        self.channel_rm + self.obs_rm
    }

    pub fn merge(&mut self, other: &RmCounter) {
        self.channel_rm += other.channel_rm;
        self.obs_rm += other.obs_rm;
    }

    #[inline]
    fn charge_channel_dot(&mut self, lr: usize) {
        self.channel_rm += 2 * lr as u64;
    }

    #[inline]
    fn charge_obs_dot(&mut self, lr: usize) {
        self.obs_rm += 2 * lr as u64;
    }

    /// Pivot update `sigma*sigma' - re^2 - im^2`.
    #[inline]
    fn charge_pivot_update(&mut self) {
        self.channel_rm += 3;
    }

    /// One cross-term pair (`r_I`, `r_Q`) formed from cached products.
    #[inline]
    fn charge_cross_pair(&mut self) {
        self.channel_rm += 6;
    }

    /// One transformed-observation pair update.
    #[inline]
    fn charge_obs_pair(&mut self) {
        self.obs_rm += 6;
    }

    /// Completing the second two-antenna ordering on top of the first one;
    /// the shared-preprocessing accounting charges the reordered
    /// observation pair as one combined update.
    #[inline]
    fn charge_shifted_completion(&mut self) {
        self.obs_rm += 3;
    }
}

/// All `2L_r`-element scalar products the orthogonalization ever needs,
/// computed once per channel/observation and shared across layer orderings.
///
/// For column pairs `(2i, 2i+1)` and `(2j, 2j+1)` of the real lattice the
/// stored complex product `s(i, j) = a + j b` packs `a = h_{2i}^T h_{2j}`
/// and `b = h_{2i+1}^T h_{2j}`; the remaining two cross products follow
/// from the lattice pairing identities. `a` is symmetric with the squared
/// column norms on its diagonal, `b` antisymmetric.
#[derive(Debug, Clone)]
pub struct GramCache {
    lt: usize,
    lr: usize,
    a: Vec<f64>,
    b: Vec<f64>,
    v: Vec<f64>,
}

impl GramCache {
    #[inline]
    pub fn lt(&self) -> usize {
        self.lt
    }

    #[inline]
    pub fn lr(&self) -> usize {
        self.lr
    }

    /// Squared norm of symbol `i`'s columns.
    #[inline]
    pub fn sigma2(&self, i: usize) -> f64 {
        self.a[i * self.lt + i]
    }

    /// Packed cross products between the column pairs of symbols `i` and `j`.
    #[inline]
    pub fn s(&self, i: usize, j: usize) -> Complex64 {
        Complex64::new(self.a[i * self.lt + j], self.b[i * self.lt + j])
    }

    /// Matched-filter output `V_k = h_k^T y` for `k = 0..2L_t`.
    #[inline]
    pub fn v(&self, k: usize) -> f64 {
        self.v[k]
    }

    /// Matched-filter pair of symbol `i`, packed as `V_{2i} + j V_{2i+1}`.
    #[inline]
    pub fn v_pair(&self, i: usize) -> Complex64 {
        Complex64::new(self.v[2 * i], self.v[2 * i + 1])
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Computes the shared scalar products of channel columns and observation.
pub fn compute_gram(h: &RealLattice, y: &[f64], rm: &mut RmCounter) -> Result<GramCache> {
    let (lt, lr) = (h.lt(), h.lr());
    if y.len() != 2 * lr {
        return Err(Error::DimensionMismatch(format!(
            "observation length {} does not match 2*L_r = {}",
            y.len(),
            2 * lr
        )));
    }
    let mut a = vec![0.0; lt * lt];
    let mut b = vec![0.0; lt * lt];
    for i in 0..lt {
        a[i * lt + i] = dot(h.col(2 * i), h.col(2 * i));
        rm.charge_channel_dot(lr);
        for j in i + 1..lt {
            let aij = dot(h.col(2 * i), h.col(2 * j));
            let bij = dot(h.col(2 * i + 1), h.col(2 * j));
            rm.charge_channel_dot(lr);
            rm.charge_channel_dot(lr);
            a[i * lt + j] = aij;
            a[j * lt + i] = aij;
            b[i * lt + j] = bij;
            b[j * lt + i] = -bij;
        }
    }
    let mut v = Vec::with_capacity(2 * lt);
    for k in 0..2 * lt {
        v.push(dot(h.col(k), y));
        rm.charge_obs_dot(lr);
    }
    Ok(GramCache { lt, lr, a, b, v })
}

/// Upper-triangular real model produced by the preprocessing stage.
///
/// Row pairs `(2k, 2k+1)` share the diagonal value `diag[k]`, have a zero
/// in the paired off-diagonal position, and every off-diagonal 2x2 block
/// has rotation form `[[a, b], [-b, a]]`. The noise component variances
/// are `(N0/2) * weights[i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct TriangularModel {
    lt: usize,
    rtilde: Vec<f64>,
    ytilde: Vec<f64>,
    weights: Vec<f64>,
    diag: Vec<f64>,
    perm: Vec<usize>,
}

impl TriangularModel {
    #[inline]
    pub fn lt(&self) -> usize {
        self.lt
    }

    /// Dimension of the real model, `2 L_t`.
    #[inline]
    pub fn dim(&self) -> usize {
        2 * self.lt
    }

    #[inline]
    pub fn r(&self, row: usize, col: usize) -> f64 {
        self.rtilde[row * self.dim() + col]
    }

    #[inline]
    pub fn ytilde(&self) -> &[f64] {
        &self.ytilde
    }

    /// Per-component noise variance divided by `N0/2`.
    #[inline]
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Distinct diagonal value of each layer pair.
    #[inline]
    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    /// Symbol ordering: layer position `p` holds complex symbol `perm[p]`.
    #[inline]
    pub fn perm(&self) -> &[usize] {
        &self.perm
    }

    /// The symbol whose layer sits at the bottom of the model (the layer
    /// enumerated exhaustively by the lattice search).
    #[inline]
    pub fn reference_symbol(&self) -> usize {
        *self.perm.last().expect("nonempty permutation")
    }

    fn new_empty(lt: usize, perm: Vec<usize>) -> Self {
        Self {
            lt,
            rtilde: vec![0.0; 4 * lt * lt],
            ytilde: vec![0.0; 2 * lt],
            weights: vec![0.0; 2 * lt],
            diag: vec![0.0; lt],
            perm,
        }
    }

    fn set_r(&mut self, row: usize, col: usize, v: f64) {
        let d = self.dim();
        self.rtilde[row * d + col] = v;
    }

    /// Writes the rotation block for layer pair `(i, k)` from the packed
    /// cross term `z = r_I + j r_Q`.
    fn set_block(&mut self, i: usize, k: usize, z: Complex64) {
        self.set_r(2 * i, 2 * k, z.re);
        self.set_r(2 * i, 2 * k + 1, -z.im);
        self.set_r(2 * i + 1, 2 * k, z.im);
        self.set_r(2 * i + 1, 2 * k + 1, z.re);
    }

    fn set_layer(&mut self, k: usize, pivot: f64, y: Complex64, weight: f64) {
        self.set_r(2 * k, 2 * k, pivot);
        self.set_r(2 * k + 1, 2 * k + 1, pivot);
        self.diag[k] = pivot;
        self.ytilde[2 * k] = y.re;
        self.ytilde[2 * k + 1] = y.im;
        self.weights[2 * k] = weight;
        self.weights[2 * k + 1] = weight;
    }
}

fn singular_check(layer: usize, pivot: f64, scale: f64) -> Result<()> {
    let threshold = EPS_RANK * scale.abs();
    if !(pivot > threshold) {
        return Err(Error::SingularChannel {
            layer,
            value: pivot,
            threshold,
        });
    }
    Ok(())
}

/// Layer ordering for the two-antenna closed form.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TwoTxOrdering {
    /// Symbol 2 at the bottom (reference) layer.
    Natural,
    /// Symbol 1 at the bottom layer.
    Shifted,
}

/// Closed-form model builder for `L_t = 2`.
pub fn preprocess_2tx(
    g: &GramCache,
    order: TwoTxOrdering,
    rm: &mut RmCounter,
) -> Result<TriangularModel> {
    if g.lt() != 2 {
        return Err(Error::DimensionMismatch(format!(
            "two-antenna closed form called with L_t = {}",
            g.lt()
        )));
    }
    let (top, bottom) = match order {
        TwoTxOrdering::Natural => (0usize, 1usize),
        TwoTxOrdering::Shifted => (1, 0),
    };
    let model = build_2tx(g, top, bottom, true, rm)?;
    Ok(model)
}

/// Both two-antenna orderings from one shared set of products. The second
/// ordering reuses everything but its reordered observation pair.
pub fn preprocess_2tx_both(
    g: &GramCache,
    rm: &mut RmCounter,
) -> Result<(TriangularModel, TriangularModel)> {
    let natural = build_2tx(g, 0, 1, true, rm)?;
    let shifted = build_2tx(g, 1, 0, false, rm)?;
    rm.charge_shifted_completion();
    Ok((natural, shifted))
}

fn build_2tx(
    g: &GramCache,
    top: usize,
    bottom: usize,
    charge: bool,
    rm: &mut RmCounter,
) -> Result<TriangularModel> {
    let sig_top = g.sigma2(top);
    let sig_bot = g.sigma2(bottom);
    let z = g.s(top, bottom);
    singular_check(0, sig_top, sig_top)?;
    let r3 = (sig_top * sig_bot - z.re * z.re) - z.im * z.im;
    singular_check(1, r3, sig_top * sig_bot)?;
    if charge {
        rm.charge_pivot_update();
        rm.charge_obs_pair();
    }
    let v_top = g.v_pair(top);
    let v_bot = g.v_pair(bottom);
    // ytilde bottom pair: conj(-z) * V_top + sigma_top * V_bot.
    let y_bot = (-z).conj() * v_top + sig_top * v_bot;

    let mut m = TriangularModel::new_empty(2, vec![top, bottom]);
    m.set_layer(0, sig_top, v_top, sig_top);
    m.set_layer(1, r3, y_bot, sig_top * r3);
    m.set_block(0, 1, z);
    Ok(m)
}

/// General unnormalized Gram-Schmidt orthogonalization for the column pairs
/// of `H_r` reordered by `perm`.
///
/// Each orthogonal column pair is tracked as complex coefficients over the
/// original pairs, so cross terms and the transformed observation are flat
/// linear combinations of the cached products; no `2L_r`-element vector is
/// ever formed.
pub fn preprocess_gso(g: &GramCache, perm: &[usize]) -> Result<TriangularModel> {
    let lt = g.lt();
    check_perm(lt, perm)?;

    let mut m = TriangularModel::new_empty(lt, perm.to_vec());
    // Final coefficient vector, pivot and transformed pair of each layer.
    let mut coeffs: Vec<Vec<Complex64>> = Vec::with_capacity(lt);
    let mut pivots: Vec<f64> = Vec::with_capacity(lt);
    let mut yhat: Vec<Complex64> = Vec::with_capacity(lt);
    let mut weight = 1.0;

    for k in 0..lt {
        let sig_init = g.sigma2(perm[k]);
        let mut c = vec![Complex64::new(0.0, 0.0); lt];
        c[k] = Complex64::new(1.0, 0.0);
        let mut cross = Vec::with_capacity(k);
        for i in 0..k {
            // z = q_i^T applied to the original columns of layer k.
            let mut z = Complex64::new(0.0, 0.0);
            for (p, cp) in coeffs[i].iter().enumerate().take(i + 1) {
                z += cp.conj() * g.s(perm[p], perm[k]);
            }
            m.set_block(i, k, z);
            for p in 0..=i {
                c[p] = pivots[i] * c[p] - z * coeffs[i][p];
            }
            c[k] *= pivots[i];
            cross.push(z);
        }
        // Pivot from the unrolled product form: the full prefix product of
        // earlier pivots times the raw norm, minus the weighted square
        // magnitudes of the cross terms.
        let mut lead = sig_init;
        for p in &pivots {
            lead *= p;
        }
        let mut pivot = lead;
        for (i, z) in cross.iter().enumerate() {
            let mut tail = 1.0;
            for p in &pivots[i + 1..] {
                tail *= p;
            }
            pivot -= tail * (z.re * z.re);
            pivot -= tail * (z.im * z.im);
        }
        singular_check(k, pivot, lead)?;

        // Transformed observation pair as a combination of the cached
        // matched-filter outputs.
        let mut y = Complex64::new(0.0, 0.0);
        for p in 0..=k {
            y += c[p].conj() * g.v_pair(perm[p]);
        }

        weight *= pivot;
        m.set_layer(k, pivot, y, weight);
        coeffs.push(c);
        pivots.push(pivot);
        yhat.push(y);
    }
    Ok(m)
}

/// Recursive formulation of the preprocessing: all quantities advance one
/// orthogonalization level at a time through three scalar recursions
/// (pivot, cross-term pair, observation pair). Charges `rm` per step.
pub fn preprocess_recursive(
    g: &GramCache,
    perm: &[usize],
    rm: &mut RmCounter,
) -> Result<TriangularModel> {
    let lt = g.lt();
    check_perm(lt, perm)?;

    let mut m = TriangularModel::new_empty(lt, perm.to_vec());
    // Level state, indexed by layer position.
    let mut sigma: Vec<f64> = (0..lt).map(|j| g.sigma2(perm[j])).collect();
    let mut scale: Vec<f64> = sigma.clone();
    let mut y: Vec<Complex64> = (0..lt).map(|j| g.v_pair(perm[j])).collect();
    let mut cross: Vec<Vec<Complex64>> = (0..lt)
        .map(|j| (j + 1..lt).map(|k| g.s(perm[j], perm[k])).collect())
        .collect();
    let mut weight = 1.0;

    for d in 0..lt {
        singular_check(d, sigma[d], scale[d])?;
        let sig_d = sigma[d];
        weight *= sig_d;
        m.set_layer(d, sig_d, y[d], weight);
        for k in d + 1..lt {
            m.set_block(d, k, cross[d][k - d - 1]);
        }
        // Advance the remaining layers one level.
        for j in d + 1..lt {
            let zj = cross[d][j - d - 1];
            let lead = sig_d * sigma[j];
            sigma[j] = (lead - zj.re * zj.re) - zj.im * zj.im;
            scale[j] = lead;
            rm.charge_pivot_update();
            y[j] = sig_d * y[j] - zj.conj() * y[d];
            rm.charge_obs_pair();
            for k in j + 1..lt {
                let zk = cross[d][k - d - 1];
                cross[j][k - j - 1] = sig_d * cross[j][k - j - 1] - zj.conj() * zk;
                // Per-level cost model: cross pairs are charged where they
                // surface on the next anchor row.
                if j == d + 1 {
                    rm.charge_cross_pair();
                }
            }
        }
    }
    Ok(m)
}

fn check_perm(lt: usize, perm: &[usize]) -> Result<()> {
    if lt < 2 {
        return Err(Error::DimensionMismatch(format!(
            "preprocessing needs at least two transmit antennas, got {lt}"
        )));
    }
    if perm.len() != lt {
        return Err(Error::DimensionMismatch(format!(
            "permutation length {} does not match L_t = {lt}",
            perm.len()
        )));
    }
    let mut seen = vec![false; lt];
    for &p in perm {
        if p >= lt || seen[p] {
            return Err(Error::DimensionMismatch(format!(
                "invalid symbol permutation {perm:?}"
            )));
        }
        seen[p] = true;
    }
    Ok(())
}

/// The layer-ordering set used for soft output: ordering `j` places complex
/// symbol `j` on the bottom (reference) layer, each symbol exactly once.
/// The first entry is the natural order.
pub fn permutation_set(lt: usize) -> Vec<Vec<usize>> {
    assert!(lt >= 2, "permutation set needs at least two antennas");
    (0..lt)
        .rev()
        .map(|j| {
            let mut p: Vec<usize> = (0..lt).filter(|&i| i != j).collect();
            p.push(j);
            p
        })
        .collect()
}

/// Builds the full permutation-model set from one shared [`GramCache`].
/// The model for symbol `j`'s soft output is the entry whose
/// [`TriangularModel::reference_symbol`] is `j`.
pub fn preprocess_all(g: &GramCache, rm: &mut RmCounter) -> Result<Vec<TriangularModel>> {
    if g.lt() == 2 {
        let (natural, shifted) = preprocess_2tx_both(g, rm)?;
        return Ok(vec![natural, shifted]);
    }
    permutation_set(g.lt())
        .iter()
        .map(|perm| preprocess_recursive(g, perm, rm))
        .collect()
}

/// Measured counts plus the closed-form operation-count predictions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RmReport {
    pub lt: usize,
    pub lr: usize,
    pub channel_rm: u64,
    pub obs_rm: u64,
    pub total: u64,
    /// Itemized per-step prediction for one full preprocessing pass in one
    /// ordering (shared products included).
    pub predicted_single: u64,
    /// Prediction when both two-antenna orderings are built together;
    /// `None` for more than two antennas.
    pub predicted_both_2tx: Option<u64>,
    /// Closed-form cross-term complexity `K(L_t)`.
    pub k_closed_form: u64,
    /// Closed-form observation-combination complexity `W(L_t)`.
    pub w_closed_form: u64,
}

/// Closed-form count of the cross-term computations, quadratic in the
/// number of antennas from four antennas up.
pub fn k_closed_form(lt: usize) -> u64 {
    match lt {
        0..=2 => 0,
        3 => 6,
        _ => {
            let lt = lt as u64;
            (21 * lt * lt - 121 * lt + 174) / 2
        }
    }
}

/// Closed-form count of the observation linear combinations.
pub fn w_closed_form(lt: usize) -> u64 {
    match lt {
        0..=2 => 6,
        3 => 16,
        _ => 14 * lt as u64 - 26,
    }
}

/// Itemized per-step total for one preprocessing pass: layer `j` costs its
/// three initialization products plus, per level, the two cross products
/// and the three scalar recursions.
pub fn predicted_single(lt: usize, lr: usize) -> u64 {
    let lr = lr as u64;
    let mut total = 0;
    for j in 1..=lt as u64 {
        total += 6 * lr; // sigma + observation pair initialization
        total += (j - 1) * 4 * lr; // raw cross products against earlier layers
        if j >= 2 {
            total += 9 + 15 * (j - 2); // scalar recursions per level
        }
    }
    total
}

/// Builds the report for a completed preprocessing run.
pub fn rm_report(counter: &RmCounter, lt: usize, lr: usize) -> RmReport {
    RmReport {
        lt,
        lr,
        channel_rm: counter.channel_rm,
        obs_rm: counter.obs_rm,
        total: counter.total(),
        predicted_single: predicted_single(lt, lr),
        predicted_both_2tx: (lt == 2).then(|| 16 * lr as u64 + 12),
        k_closed_form: k_closed_form(lt),
        w_closed_form: w_closed_form(lt),
    }
}
