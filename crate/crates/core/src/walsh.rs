//! Walsh function generation, ordering conversions, digital filters, and the
//! fast Walsh-Hadamard transform.
//!
//! The Walsh functions `w_m` form a complete orthonormal basis of ±1-valued
//! piecewise-constant functions on the unit interval, the digital analogue of
//! the Fourier basis. Three index conventions are supported:
//!
//! * **Sequency**: `w_m` has exactly `m` sign changes on `[0, 1)`. This is the
//!   natural ordering for pulsed control, where `m` equals the number of
//!   π-pulses in the corresponding decoupling sequence.
//! * **Paley** (dyadic): `w_m = Π_k r_k^{m_k}` over the bits `m_k` of `m`,
//!   with `r_k` the Rademacher square waves.
//! * **Hadamard**: rows of the 2ⁿ×2ⁿ Walsh-Hadamard matrix
//!   `H(i, j) = (−1)^{popcount(i & j)}` read on the dyadic grid.
//!
//! Internally everything is evaluated in the Paley picture,
//! `w_p(t) = (−1)^{popcount(p & bitrev(cell(t)))}`; the sequency↔Paley map is
//! the gray code and Paley↔Hadamard is an n-bit reversal. Both maps are
//! validated against the sign-change-count oracle in the test suite, since
//! textbook conventions differ.
//!
//! Walsh coefficients follow the averaging convention
//! `b̂(m) = (1/T)∫₀ᵀ b(t) w_m(t/T) dt`, so `b̂(0)` is the mean field and the
//! discrete transform of samples on the dyadic grid carries a `1/N`
//! normalization. With that convention Parseval reads
//! `(1/N)·Σ_j x_j² = Σ_m b̂(m)²`.

use crate::error::{Error, Result};

/// Default quadrature refinement: grids carry `64·2ⁿ` points so that filter
/// switchings always land on grid-cell boundaries.
pub const DEFAULT_GRID_MULTIPLIER: usize = 64;

/// Default cap on materialized Hadamard matrix order; larger orders must use
/// [`fwht`].
pub const DEFAULT_HADAMARD_CAP: u32 = 20;

/// Labeling convention for the Walsh basis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Ordering {
    Sequency,
    Paley,
    Hadamard,
}

/// A Walsh function index together with its order `n`, the smallest integer
/// with `m ≤ 2ⁿ − 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct WalshIndex {
    m: u32,
}

impl WalshIndex {
    pub fn new(m: u32) -> Self {
        WalshIndex { m }
    }

    /// The index value; in sequency ordering this is the number of sign
    /// changes on `[0, 1)` and the number of control π-pulses.
    pub fn sequency(&self) -> u32 {
        self.m
    }

    /// Smallest `n` with `m ≤ 2ⁿ − 1`; zero iff `m = 0`.
    pub fn order(&self) -> u32 {
        order_of(self.m)
    }
}

impl From<u32> for WalshIndex {
    fn from(m: u32) -> Self {
        WalshIndex::new(m)
    }
}

/// Smallest `n` such that `m ≤ 2ⁿ − 1`.
pub fn order_of(m: u32) -> u32 {
    32 - m.leading_zeros()
}

/// Binary-reflected gray code; maps a sequency index to its Paley index.
fn gray(m: u32) -> u32 {
    m ^ (m >> 1)
}

/// Inverse gray code (prefix xor); maps a Paley index to its sequency.
fn gray_inverse(g: u32) -> u32 {
    let mut m = g;
    m ^= m >> 1;
    m ^= m >> 2;
    m ^= m >> 4;
    m ^= m >> 8;
    m ^= m >> 16;
    m
}

/// Reverse the lowest `n` bits of `i`.
fn bit_reverse(i: u32, n: u32) -> u32 {
    if n == 0 {
        0
    } else {
        i.reverse_bits() >> (32 - n)
    }
}

fn check_unit_time(t: f64) -> Result<()> {
    if !(0.0..1.0).contains(&t) {
        return Err(Error::TimeOutOfDomain { t, limit: 1.0 });
    }
    Ok(())
}

/// Rademacher function `r_k(t) = r(2^{k−1} t)`, where `r` is +1 on
/// `[0, ½)`, −1 on `[½, 1)`, extended periodically. `r_k` has `2^k − 1` jump
/// discontinuities on the unit interval.
pub fn rademacher(k: u32, t: f64) -> Result<i8> {
    if k == 0 || k > 52 {
        return Err(Error::InvalidRademacherOrder(k));
    }
    check_unit_time(t)?;
    let cell = (t * (1u64 << k) as f64).floor() as u64;
    Ok(if cell & 1 == 0 { 1 } else { -1 })
}

/// Paley index of the function labeled `index` in `ordering`, given `n` bits.
fn to_paley(index: u32, ordering: Ordering, n: u32) -> u32 {
    match ordering {
        Ordering::Sequency => gray(index),
        Ordering::Paley => index,
        Ordering::Hadamard => bit_reverse(index, n),
    }
}

/// Label in `ordering` of the function with Paley index `p`, given `n` bits.
fn from_paley(p: u32, ordering: Ordering, n: u32) -> u32 {
    match ordering {
        Ordering::Sequency => gray_inverse(p),
        Ordering::Paley => p,
        Ordering::Hadamard => bit_reverse(p, n),
    }
}

/// Value of the Paley-indexed function `w_p` on dyadic cell `j` of `2ⁿ`.
fn paley_sign(p: u32, j: u32, n: u32) -> i8 {
    if (p & bit_reverse(j, n)).count_ones() & 1 == 0 {
        1
    } else {
        -1
    }
}

/// Evaluate `w_m(t)` with `m` interpreted in `ordering` within a basis of
/// order `n`. `w_0 ≡ 1` in every ordering.
///
/// Sequency and Paley labels are order-independent (any `n` that contains
/// the index gives the same function); Hadamard labels are relative to the
/// basis size `2ⁿ`.
pub fn walsh_in_order(index: u32, ordering: Ordering, n: u32, t: f64) -> Result<i8> {
    if n > 31 || u64::from(index) >= 1u64 << n {
        return Err(Error::IndexOutOfRange { m: index, n });
    }
    check_unit_time(t)?;
    let p = to_paley(index, ordering, n);
    let cell = (t * (1u64 << n) as f64).floor() as u32;
    Ok(paley_sign(p, cell, n))
}

/// Evaluate `w_m(t)` at the smallest order that contains `m`; see
/// [`walsh_in_order`] for the order-relative Hadamard caveat.
pub fn walsh(index: WalshIndex, ordering: Ordering, t: f64) -> Result<i8> {
    walsh_in_order(index.sequency(), ordering, index.order(), t)
}

/// Per-cell signs of the function labeled `index` on the dyadic grid of `2ⁿ`
/// cells.
pub fn walsh_cells_in_order(index: u32, ordering: Ordering, n: u32) -> Result<Vec<i8>> {
    if n > 31 || u64::from(index) >= 1u64 << n {
        return Err(Error::IndexOutOfRange { m: index, n });
    }
    let p = to_paley(index, ordering, n);
    Ok((0..1u32 << n).map(|j| paley_sign(p, j, n)).collect())
}

/// Per-cell signs of `w_index` on the dyadic grid of `2ⁿ` cells, where `n` is
/// the smallest order containing the index.
pub fn walsh_cells(index: WalshIndex, ordering: Ordering) -> Vec<i8> {
    walsh_cells_in_order(index.sequency(), ordering, index.order())
        .expect("minimal order always contains the index")
}

/// Relabel `m` from one ordering to another at fixed order `n`.
/// Conversions are bijections on `{0, …, 2ⁿ − 1}` and round-trip exactly.
pub fn convert_index(m: u32, from: Ordering, to: Ordering, n: u32) -> Result<u32> {
    if n > 31 || u64::from(m) >= 1u64 << n {
        return Err(Error::IndexOutOfRange { m, n });
    }
    Ok(from_paley(to_paley(m, from, n), to, n))
}

/// A sequency-ordered Walsh digital filter: ±1 valued, `+1` on `[0, t₁)`,
/// switching sign at each listed time. The switching times are the π-pulse
/// application times of the corresponding decoupling sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct DigitalFilter {
    pub index: WalshIndex,
    pub period_us: f64,
    pub switching_times_us: Vec<f64>,
}

/// Zero-crossing times of the sequency-`m` Walsh function scaled to `[0, T)`.
/// The filter has exactly `m` switchings; `m = 0` (Ramsey) has none and
/// `m = 1` (spin echo) switches once at `T/2`.
pub fn switching_times(index: WalshIndex, period_us: f64) -> Result<DigitalFilter> {
    if period_us <= 0.0 {
        return Err(Error::NonPositive { what: "period", value: period_us });
    }
    let cells = walsh_cells(index, Ordering::Sequency);
    let n_cells = cells.len();
    let dt = period_us / n_cells as f64;
    let times: Vec<f64> = (1..n_cells)
        .filter(|&j| cells[j] != cells[j - 1])
        .map(|j| j as f64 * dt)
        .collect();
    debug_assert_eq!(times.len() as u32, index.sequency());
    Ok(DigitalFilter { index, period_us, switching_times_us: times })
}

/// Dense ±1 Walsh-Hadamard matrix of size `2ⁿ`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HadamardMatrix {
    n: u32,
    size: usize,
    data: Vec<i8>,
}

impl HadamardMatrix {
    pub fn order(&self) -> u32 {
        self.n
    }

    pub fn size(&self) -> usize {
        self.size
    }

    /// Entry at 0-based row `i`, column `j`.
    pub fn get(&self, i: usize, j: usize) -> i8 {
        self.data[i * self.size + j]
    }

    pub fn row(&self, i: usize) -> &[i8] {
        &self.data[i * self.size..(i + 1) * self.size]
    }
}

/// Materialize `H^{(n)}` with `H(i, j) = (−1)^{popcount(i & j)}` (0-based;
/// equivalently `Π_l (−1)^{i_l·j_l}` in 1-based notation). Symmetric, and
/// `H·Hᵀ = 2ⁿ·I`.
pub fn hadamard_matrix(n: u32) -> Result<HadamardMatrix> {
    hadamard_matrix_with_cap(n, DEFAULT_HADAMARD_CAP)
}

/// [`hadamard_matrix`] with an explicit order cap for the memory budget.
pub fn hadamard_matrix_with_cap(n: u32, cap: u32) -> Result<HadamardMatrix> {
    if n > cap {
        return Err(Error::OrderAboveCap { n, cap });
    }
    let size = 1usize << n;
    let mut data = vec![0i8; size * size];
    for i in 0..size {
        for j in 0..size {
            data[i * size + j] = if (i & j).count_ones() & 1 == 0 { 1 } else { -1 };
        }
    }
    Ok(HadamardMatrix { n, size, data })
}

/// A truncated Walsh spectrum: `N = 2ⁿ` coefficients over an acquisition
/// period, in a declared ordering, with optional per-coefficient standard
/// uncertainties.
///
/// Coefficient units follow the averaging convention of the transform, so
/// they match the field's units (nT for `b̂(m)`, dimensionless for the
/// normalized `f̂(m)`).
#[derive(Debug, Clone, PartialEq)]
pub struct WalshSpectrum {
    pub period_us: f64,
    pub ordering: Ordering,
    pub coeffs: Vec<f64>,
    pub sigmas: Option<Vec<f64>>,
}

impl WalshSpectrum {
    pub fn new(period_us: f64, ordering: Ordering, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.is_empty() || !coeffs.len().is_power_of_two() {
            return Err(Error::NonPowerOfTwoLength(coeffs.len()));
        }
        if period_us <= 0.0 {
            return Err(Error::NonPositive { what: "period", value: period_us });
        }
        Ok(WalshSpectrum { period_us, ordering, coeffs, sigmas: None })
    }

    pub fn with_sigmas(mut self, sigmas: Vec<f64>) -> Result<Self> {
        if sigmas.len() != self.coeffs.len() {
            return Err(Error::LengthMismatch { left: self.coeffs.len(), right: sigmas.len() });
        }
        self.sigmas = Some(sigmas);
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// `n` with `len == 2ⁿ`.
    pub fn order(&self) -> u32 {
        self.coeffs.len().trailing_zeros()
    }

    /// Same spectrum relabeled into another ordering.
    pub fn to_ordering(&self, target: Ordering) -> Self {
        let n = self.order();
        let len = self.len();
        let mut coeffs = vec![0.0; len];
        let mut sigmas = self.sigmas.as_ref().map(|_| vec![0.0; len]);
        for m in 0..len {
            let m_target = from_paley(to_paley(m as u32, self.ordering, n), target, n) as usize;
            coeffs[m_target] = self.coeffs[m];
            if let (Some(out), Some(src)) = (sigmas.as_mut(), self.sigmas.as_ref()) {
                out[m_target] = src[m];
            }
        }
        WalshSpectrum { period_us: self.period_us, ordering: target, coeffs, sigmas }
    }

    /// Synthesize the `N`-point piecewise-constant partial sum on the dyadic
    /// grid: `x_j = Σ_m coeff(m)·w_m(j/N)`. Exact inverse of [`fwht`].
    pub fn synthesize(&self) -> Vec<f64> {
        let n = self.order();
        let len = self.len();
        let mut buf = vec![0.0; len];
        for m in 0..len {
            let h = bit_reverse(to_paley(m as u32, self.ordering, n), n) as usize;
            buf[h] = self.coeffs[m];
        }
        fwht_in_place(&mut buf);
        buf
    }

    /// Evaluate the partial sum `b_N(t) = Σ_m coeff(m)·w_m(t/T)` at one time.
    pub fn evaluate(&self, t_us: f64) -> Result<f64> {
        if !(0.0..self.period_us).contains(&t_us) {
            return Err(Error::TimeOutOfDomain { t: t_us, limit: self.period_us });
        }
        let cell = (t_us / self.period_us * self.len() as f64).floor() as usize;
        let cell = cell.min(self.len() - 1);
        Ok(self.synthesize()[cell])
    }
}

/// Unnormalized in-place Walsh-Hadamard butterfly; output is in Hadamard
/// (natural) order: `y_h = Σ_j x_j·(−1)^{popcount(h & j)}`.
fn fwht_in_place(data: &mut [f64]) {
    let len = data.len();
    let mut half = 1;
    while half < len {
        let step = half * 2;
        for block in (0..len).step_by(step) {
            for i in block..block + half {
                let a = data[i];
                let b = data[i + half];
                data[i] = a + b;
                data[i + half] = a - b;
            }
        }
        half = step;
    }
}

/// Fast Walsh-Hadamard transform of `2ⁿ` samples on the dyadic grid, with the
/// `1/N` averaging normalization and output permuted into `ordering`.
///
/// For a field constant on each dyadic subinterval the output equals
/// `b̂(m) = (1/T)∫ b·w_m dt` exactly.
pub fn fwht(samples: &[f64], ordering: Ordering, period_us: f64) -> Result<WalshSpectrum> {
    if samples.is_empty() || !samples.len().is_power_of_two() {
        return Err(Error::NonPowerOfTwoLength(samples.len()));
    }
    let len = samples.len();
    let n = len.trailing_zeros();
    let mut buf = samples.to_vec();
    fwht_in_place(&mut buf);
    let scale = 1.0 / len as f64;
    let mut coeffs = vec![0.0; len];
    for (m, c) in coeffs.iter_mut().enumerate() {
        let h = bit_reverse(to_paley(m as u32, ordering, n), n) as usize;
        *c = buf[h] * scale;
    }
    WalshSpectrum::new(period_us, ordering, coeffs)
}

fn check_quadrature_grid(grid_points: usize, n: u32) -> Result<()> {
    let cells = 1usize << n;
    if !grid_points.is_power_of_two() || grid_points < cells {
        return Err(Error::GridMisaligned { grid: grid_points, required_multiple: cells });
    }
    Ok(())
}

/// Walsh coefficient `b̂(m) = (1/T)∫₀ᵀ b(t)·w_m(t/T) dt` of a field (sequency
/// ordering) by composite midpoint quadrature on a dyadic grid that aligns
/// with the filter's constant pieces. Quadrature error is `O(grid⁻²)` for
/// twice-differentiable fields.
///
/// `grid_points` must be a power of two no smaller than `2ⁿ`, so that every
/// switching of `w_m` falls on a grid-cell boundary.
pub fn walsh_coefficient<F>(field: F, index: WalshIndex, period_us: f64, grid_points: usize) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    if period_us <= 0.0 {
        return Err(Error::NonPositive { what: "period", value: period_us });
    }
    let n = index.order();
    check_quadrature_grid(grid_points, n)?;
    let cells = walsh_cells(index, Ordering::Sequency);
    let per_cell = grid_points >> n;
    let dt = period_us / grid_points as f64;
    let mut sum = 0.0;
    for (cell_idx, &sign) in cells.iter().enumerate() {
        let mut cell_sum = 0.0;
        let base = cell_idx * per_cell;
        for j in 0..per_cell {
            let t = (base + j) as f64 * dt + 0.5 * dt;
            cell_sum += field(t);
        }
        sum += f64::from(sign) * cell_sum;
    }
    Ok(sum / grid_points as f64)
}

/// All `2ⁿ` sequency-ordered Walsh coefficients of a field at once, by cell
/// averaging followed by [`fwht`]. Identical to calling [`walsh_coefficient`]
/// per index with `grid_points = grid_multiplier·2ⁿ`, but `O(G + N log N)`.
pub fn walsh_spectrum_of<F>(
    field: F,
    n: u32,
    period_us: f64,
    grid_multiplier: usize,
) -> Result<WalshSpectrum>
where
    F: Fn(f64) -> f64,
{
    if period_us <= 0.0 {
        return Err(Error::NonPositive { what: "period", value: period_us });
    }
    let cells = 1usize << n;
    if grid_multiplier == 0 || !grid_multiplier.is_power_of_two() {
        return Err(Error::GridMisaligned {
            grid: grid_multiplier * cells,
            required_multiple: cells,
        });
    }
    let grid_points = cells * grid_multiplier;
    let dt = period_us / grid_points as f64;
    let inv_q = 1.0 / grid_multiplier as f64;
    let averages: Vec<f64> = (0..cells)
        .map(|cell| {
            let base = cell * grid_multiplier;
            let mut s = 0.0;
            for j in 0..grid_multiplier {
                let t = (base + j) as f64 * dt + 0.5 * dt;
                s += field(t);
            }
            s * inv_q
        })
        .collect();
    fwht(&averages, Ordering::Sequency, period_us)
}

/// Evaluate the inverse Walsh transform (order-`N` partial sum) at `t`.
pub fn inverse_walsh(spectrum: &WalshSpectrum, t_us: f64) -> Result<f64> {
    spectrum.evaluate(t_us)
}

/// Truncation-error bound for the order-`N = 2ⁿ` partial Walsh sum:
/// `e_N ≤ max_s |d b(T·s)/ds| / 2^{n+1}`, with the derivative taken on the
/// time-rescaled unit interval (`max_unit_derivative = T·max_t |∂_t b|`).
/// Monotone decreasing in `n`: raising the order by one halves the bound.
pub fn truncation_bound(max_unit_derivative: f64, n: u32) -> Result<f64> {
    if max_unit_derivative < 0.0 {
        return Err(Error::NonPositive {
            what: "max_unit_derivative",
            value: max_unit_derivative,
        });
    }
    Ok(max_unit_derivative / (1u64 << (n + 1)) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    /// Naive O(N²) transform straight from the definition; the oracle for fwht.
    fn naive_transform(samples: &[f64], ordering: Ordering, period_us: f64) -> WalshSpectrum {
        let len = samples.len();
        let n = len.trailing_zeros();
        let coeffs: Vec<f64> = (0..len)
            .map(|m| {
                let p = to_paley(m as u32, ordering, n);
                let mut s = 0.0;
                for (j, &x) in samples.iter().enumerate() {
                    s += x * f64::from(paley_sign(p, j as u32, n));
                }
                s / len as f64
            })
            .collect();
        WalshSpectrum { period_us, ordering, coeffs, sigmas: None }
    }

    /// Count sign changes of a ±1 cell pattern.
    fn sign_changes(cells: &[i8]) -> usize {
        cells.windows(2).filter(|w| w[0] != w[1]).count()
    }

    #[test]
    fn rademacher_piecewise_values() {
        assert_eq!(rademacher(1, 0.25).unwrap(), 1);
        assert_eq!(rademacher(1, 0.75).unwrap(), -1);
        // r_2(0.30) = r(0.60), second half of the unit square wave
        assert_eq!(rademacher(2, 0.30).unwrap(), -1);
    }

    #[test]
    fn rademacher_rejects_bad_domain() {
        assert!(rademacher(0, 0.5).is_err());
        assert!(rademacher(1, 1.0).is_err());
        assert!(rademacher(1, -0.1).is_err());
        assert!(rademacher(53, 0.5).is_err());
    }

    #[test]
    fn rademacher_jump_count() {
        for k in 1..=8u32 {
            let grid = 1usize << (k + 2);
            let vals: Vec<i8> = (0..grid)
                .map(|j| rademacher(k, j as f64 / grid as f64).unwrap())
                .collect();
            assert_eq!(sign_changes(&vals), (1 << k) - 1, "r_{k}");
        }
    }

    #[test]
    fn rademacher_is_paley_power_of_two() {
        for k in 1..=6u32 {
            let m = WalshIndex::new(1 << (k - 1));
            for j in 0..64 {
                let t = (j as f64 + 0.5) / 64.0;
                assert_eq!(walsh(m, Ordering::Paley, t).unwrap(), rademacher(k, t).unwrap());
            }
        }
    }

    #[test]
    fn walsh_zero_is_constant() {
        for ordering in [Ordering::Sequency, Ordering::Paley, Ordering::Hadamard] {
            assert_eq!(walsh(WalshIndex::new(0), ordering, 0.9).unwrap(), 1);
        }
    }

    #[test]
    fn walsh_spin_echo_and_cpmg_values() {
        // w₁ (sequency) is the spin-echo filter with a single switch at t = ½.
        assert_eq!(walsh(WalshIndex::new(1), Ordering::Sequency, 0.75).unwrap(), -1);
        assert_eq!(walsh(WalshIndex::new(1), Ordering::Sequency, 0.25).unwrap(), 1);
        // w₂ (sequency) = +1 on [0,¼), −1 on [¼,¾), +1 on [¾,1).
        assert_eq!(walsh(WalshIndex::new(2), Ordering::Sequency, 0.5).unwrap(), -1);
        assert_eq!(walsh(WalshIndex::new(2), Ordering::Sequency, 0.1).unwrap(), 1);
        assert_eq!(walsh(WalshIndex::new(2), Ordering::Sequency, 0.8).unwrap(), 1);
    }

    #[test]
    fn sequency_equals_sign_change_count() {
        for m in 0..256u32 {
            let cells = walsh_cells(WalshIndex::new(m), Ordering::Sequency);
            assert_eq!(sign_changes(&cells) as u32, m, "w_{m}");
        }
    }

    /// Pointwise-matching oracle: the converted index must label the function
    /// with identical values on the full dyadic grid.
    #[test]
    fn index_conversions_match_pointwise_oracle() {
        let orderings = [Ordering::Sequency, Ordering::Paley, Ordering::Hadamard];
        for n in 1..=6u32 {
            let len = 1u32 << n;
            for &from in &orderings {
                for &to in &orderings {
                    let mut seen = vec![false; len as usize];
                    for m in 0..len {
                        let c = convert_index(m, from, to, n).unwrap();
                        assert!(c < len);
                        assert!(!seen[c as usize], "conversion not injective");
                        seen[c as usize] = true;
                        // identical values everywhere on the dyadic grid
                        let pf = to_paley(m, from, n);
                        let pt = to_paley(c, to, n);
                        for j in 0..len {
                            assert_eq!(paley_sign(pf, j, n), paley_sign(pt, j, n));
                        }
                        // round trip
                        assert_eq!(convert_index(c, to, from, n).unwrap(), m);
                    }
                }
            }
        }
    }

    #[test]
    fn conversion_examples() {
        assert_eq!(convert_index(0, Ordering::Sequency, Ordering::Paley, 4).unwrap(), 0);
        assert_eq!(convert_index(3, Ordering::Sequency, Ordering::Paley, 2).unwrap(), 2);
        assert_eq!(convert_index(2, Ordering::Sequency, Ordering::Paley, 2).unwrap(), 3);
        assert!(convert_index(4, Ordering::Sequency, Ordering::Paley, 2).is_err());
    }

    #[test]
    fn switching_times_match_known_sequences() {
        let echo = switching_times(WalshIndex::new(1), 10.0).unwrap();
        assert_eq!(echo.switching_times_us, vec![5.0]);
        let cpmg2 = switching_times(WalshIndex::new(2), 8.0).unwrap();
        assert_eq!(cpmg2.switching_times_us, vec![2.0, 6.0]);
        let ramsey = switching_times(WalshIndex::new(0), 10.0).unwrap();
        assert!(ramsey.switching_times_us.is_empty());
    }

    #[test]
    fn switching_count_equals_sequency() {
        for m in 0..64u32 {
            let filt = switching_times(WalshIndex::new(m), 1.0).unwrap();
            assert_eq!(filt.switching_times_us.len() as u32, m);
            // strictly increasing, inside (0, T)
            for w in filt.switching_times_us.windows(2) {
                assert!(w[0] < w[1]);
            }
            if let (Some(first), Some(last)) =
                (filt.switching_times_us.first(), filt.switching_times_us.last())
            {
                assert!(*first > 0.0 && *last < 1.0);
            }
        }
    }

    #[test]
    fn hadamard_matrix_small_orders() {
        let h0 = hadamard_matrix(0).unwrap();
        assert_eq!(h0.size(), 1);
        assert_eq!(h0.get(0, 0), 1);

        let h1 = hadamard_matrix(1).unwrap();
        assert_eq!(h1.row(0), &[1, 1]);
        assert_eq!(h1.row(1), &[1, -1]);

        // entry (4,4) in 1-based indexing, i = j = 3
        let h2 = hadamard_matrix(2).unwrap();
        assert_eq!(h2.get(3, 3), 1);
    }

    #[test]
    fn hadamard_is_symmetric_and_orthogonal() {
        for n in 0..=5u32 {
            let h = hadamard_matrix(n).unwrap();
            let size = h.size();
            for i in 0..size {
                for j in 0..size {
                    assert_eq!(h.get(i, j), h.get(j, i));
                    let dot: i64 = (0..size)
                        .map(|k| i64::from(h.get(i, k)) * i64::from(h.get(j, k)))
                        .sum();
                    assert_eq!(dot, if i == j { size as i64 } else { 0 });
                }
            }
        }
    }

    #[test]
    fn hadamard_cap_is_enforced() {
        assert!(matches!(
            hadamard_matrix_with_cap(6, 5),
            Err(Error::OrderAboveCap { n: 6, cap: 5 })
        ));
    }

    #[test]
    fn fwht_constant_input() {
        for ordering in [Ordering::Sequency, Ordering::Paley, Ordering::Hadamard] {
            let sp = fwht(&[1.0, 1.0, 1.0, 1.0], ordering, 1.0).unwrap();
            assert_eq!(sp.coeffs, vec![1.0, 0.0, 0.0, 0.0]);
        }
    }

    #[test]
    fn fwht_of_fastest_filter() {
        // +,−,+,− on the 4-point grid is the highest-sequency basis function.
        let x = [1.0, -1.0, 1.0, -1.0];
        let seq = fwht(&x, Ordering::Sequency, 1.0).unwrap();
        assert_eq!(seq.coeffs, vec![0.0, 0.0, 0.0, 1.0]);
        let pal = fwht(&x, Ordering::Paley, 1.0).unwrap();
        assert_eq!(pal.coeffs, vec![0.0, 0.0, 1.0, 0.0]);
        let had = fwht(&x, Ordering::Hadamard, 1.0).unwrap();
        assert_eq!(had.coeffs, vec![0.0, 1.0, 0.0, 0.0]);
    }

    #[test]
    fn fwht_rejects_non_power_of_two() {
        assert!(fwht(&[1.0, 2.0, 3.0], Ordering::Sequency, 1.0).is_err());
        assert!(fwht(&[], Ordering::Sequency, 1.0).is_err());
    }

    #[test]
    fn fwht_matches_naive_transform() {
        let mut rng = crate::rng::stream(0xA11CE, &[1]);
        for n in 1..=7u32 {
            let len = 1usize << n;
            for ordering in [Ordering::Sequency, Ordering::Paley, Ordering::Hadamard] {
                let x: Vec<f64> = (0..len).map(|_| rng.random_range(-1.0..1.0)).collect();
                let fast = fwht(&x, ordering, 1.0).unwrap();
                let slow = naive_transform(&x, ordering, 1.0);
                for (a, b) in fast.coeffs.iter().zip(&slow.coeffs) {
                    assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0));
                }
            }
        }
    }

    #[test]
    fn synthesize_round_trips() {
        let mut rng = crate::rng::stream(0xB0B, &[2]);
        for n in 1..=8u32 {
            let len = 1usize << n;
            for ordering in [Ordering::Sequency, Ordering::Paley, Ordering::Hadamard] {
                let x: Vec<f64> = (0..len).map(|_| rng.random_range(-10.0..10.0)).collect();
                let back = fwht(&x, ordering, 1.0).unwrap().synthesize();
                for (a, b) in x.iter().zip(&back) {
                    assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
                }
            }
        }
    }

    #[test]
    fn parseval_on_the_dyadic_grid() {
        let mut rng = crate::rng::stream(0xCAFE, &[3]);
        for n in 1..=8u32 {
            let len = 1usize << n;
            let x: Vec<f64> = (0..len).map(|_| rng.random_range(-2.0..2.0)).collect();
            let sp = fwht(&x, Ordering::Sequency, 1.0).unwrap();
            let mean_sq: f64 = x.iter().map(|v| v * v).sum::<f64>() / len as f64;
            let coeff_sq: f64 = sp.coeffs.iter().map(|c| c * c).sum();
            assert!((mean_sq - coeff_sq).abs() <= 1e-10 * mean_sq.max(1e-300));
        }
    }

    #[test]
    fn orthonormality_all_orderings() {
        let n = 6u32;
        let len = 1usize << n;
        for ordering in [Ordering::Sequency, Ordering::Paley, Ordering::Hadamard] {
            let rows: Vec<Vec<i8>> = (0..len)
                .map(|m| walsh_cells_in_order(m as u32, ordering, n).unwrap())
                .collect();
            for i in 0..len {
                for j in 0..len {
                    let dot: i64 = (0..len)
                        .map(|k| i64::from(rows[i][k]) * i64::from(rows[j][k]))
                        .sum();
                    assert_eq!(dot, if i == j { len as i64 } else { 0 });
                }
            }
        }
    }

    #[test]
    fn fixed_order_evaluation_is_consistent_with_conversion() {
        // walsh(m, A, t) == walsh(convert_index(m, A, B, n), B, t) pointwise
        let orderings = [Ordering::Sequency, Ordering::Paley, Ordering::Hadamard];
        let n = 5u32;
        let len = 1u32 << n;
        for &from in &orderings {
            for &to in &orderings {
                for m in 0..len {
                    let c = convert_index(m, from, to, n).unwrap();
                    for j in 0..len {
                        let t = (j as f64 + 0.5) / len as f64;
                        assert_eq!(
                            walsh_in_order(m, from, n, t).unwrap(),
                            walsh_in_order(c, to, n, t).unwrap()
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn cpmg_symmetric_pdd_antisymmetric() {
        // CPMG filters w_{2^k} are even about t = ½, PDD filters w_{2^k − 1} odd.
        let grid = 512usize;
        for k in 1..=6u32 {
            let cpmg = WalshIndex::new(1 << k);
            let pdd = WalshIndex::new((1 << k) - 1);
            for j in 0..grid / 2 {
                let t = (j as f64 + 0.5) / grid as f64;
                let mirror = 1.0 - t;
                assert_eq!(
                    walsh(cpmg, Ordering::Sequency, t).unwrap(),
                    walsh(cpmg, Ordering::Sequency, mirror).unwrap()
                );
                assert_eq!(
                    walsh(pdd, Ordering::Sequency, t).unwrap(),
                    -walsh(pdd, Ordering::Sequency, mirror).unwrap()
                );
            }
        }
    }

    #[test]
    fn spin_echo_coefficient_of_sine() {
        // b̂(1) of sin(2πt/T) is 2/π; the calibration anchor.
        let period = 10.0;
        let f = |t: f64| (2.0 * std::f64::consts::PI * t / period).sin();
        let c = walsh_coefficient(f, WalshIndex::new(1), period, 1 << 15).unwrap();
        let expect = 2.0 / std::f64::consts::PI;
        assert!((c - expect).abs() < 1e-6 * expect, "got {c}");
    }

    #[test]
    fn sine_and_cosine_quadrature_oracle() {
        // Analytic integration over the three constant pieces of w₂ gives 0
        // for sine and 2/π for cosine.
        let period = 10.0;
        let tau = 2.0 * std::f64::consts::PI;
        let sine = |t: f64| (tau * t / period).sin();
        let cosine = |t: f64| (tau * t / period).cos();
        let c_sin = walsh_coefficient(sine, WalshIndex::new(2), period, 1 << 15).unwrap();
        let c_cos = walsh_coefficient(cosine, WalshIndex::new(2), period, 1 << 15).unwrap();
        assert!(c_sin.abs() < 1e-9, "got {c_sin}");
        let expect = 2.0 / std::f64::consts::PI;
        assert!((c_cos - expect).abs() < 1e-6 * expect, "got {c_cos}");
    }

    #[test]
    fn quadrature_grid_must_align() {
        let f = |_t: f64| 1.0;
        assert!(walsh_coefficient(f, WalshIndex::new(3), 1.0, 100).is_err());
        assert!(walsh_coefficient(f, WalshIndex::new(7), 1.0, 4).is_err());
        assert!(walsh_coefficient(f, WalshIndex::new(7), 1.0, 8).is_ok());
    }

    #[test]
    fn spectrum_of_matches_per_index_quadrature() {
        let period = 7.0;
        let f = |t: f64| (0.9 * t).sin() + 0.3 * (2.7 * t).cos();
        let n = 4u32;
        let q = 64usize;
        let sp = walsh_spectrum_of(f, n, period, q).unwrap();
        for m in 0..(1usize << n) {
            let c = walsh_coefficient(f, WalshIndex::new(m as u32), period, q << n).unwrap();
            assert!((sp.coeffs[m] - c).abs() < 1e-12 * c.abs().max(1.0), "m={m}");
        }
    }

    #[test]
    fn inverse_walsh_constant_spectrum() {
        let sp = WalshSpectrum::new(10.0, Ordering::Sequency, vec![5.0, 0.0, 0.0, 0.0]).unwrap();
        for t in [0.0, 2.5, 9.99] {
            assert_eq!(inverse_walsh(&sp, t).unwrap(), 5.0);
        }
        assert!(inverse_walsh(&sp, 10.0).is_err());
        assert!(inverse_walsh(&sp, -0.01).is_err());
    }

    #[test]
    fn inverse_walsh_reproduces_basis_function() {
        let period = 4.0;
        let w3: Vec<f64> = walsh_cells(WalshIndex::new(3), Ordering::Sequency)
            .iter()
            .map(|&s| f64::from(s))
            .collect();
        let sp = fwht(&w3, Ordering::Sequency, period).unwrap();
        // only the m = 3 coefficient survives
        for (m, c) in sp.coeffs.iter().enumerate() {
            let expect = if m == 3 { 1.0 } else { 0.0 };
            assert!((c - expect).abs() < 1e-14);
        }
        for (j, &v) in w3.iter().enumerate() {
            let t = (j as f64 + 0.5) / w3.len() as f64 * period;
            assert_eq!(inverse_walsh(&sp, t).unwrap(), v);
        }
    }

    #[test]
    fn inverse_walsh_matches_direct_partial_sum() {
        // Bichromatic field, direct summation oracle at off-grid times.
        let period = 10.0;
        let tau = 2.0 * std::f64::consts::PI;
        let field = move |t: f64| {
            0.3 * (tau * 0.1 * t - 0.0741).sin() + 0.2 * (tau * 0.25 * t - 1.9686).sin()
        };
        let n = 5u32;
        let sp = walsh_spectrum_of(field, n, period, 64).unwrap();
        for j in 0..97 {
            let t = period * (j as f64 + 0.13) / 97.5;
            let direct: f64 = sp
                .coeffs
                .iter()
                .enumerate()
                .map(|(m, c)| {
                    c * f64::from(
                        walsh(WalshIndex::new(m as u32), Ordering::Sequency, t / period).unwrap(),
                    )
                })
                .sum();
            let fast = inverse_walsh(&sp, t).unwrap();
            assert!((fast - direct).abs() < 1e-10, "t={t}: {fast} vs {direct}");
        }
    }

    #[test]
    fn ordering_relabel_preserves_functions() {
        let mut rng = crate::rng::stream(0xD00D, &[4]);
        let x: Vec<f64> = (0..32).map(|_| rng.random_range(-1.0..1.0)).collect();
        let seq = fwht(&x, Ordering::Sequency, 1.0).unwrap();
        for target in [Ordering::Paley, Ordering::Hadamard] {
            let re = seq.to_ordering(target);
            let back = re.synthesize();
            for (a, b) in x.iter().zip(&back) {
                assert!((a - b).abs() < 1e-12);
            }
            let round = re.to_ordering(Ordering::Sequency);
            for (a, b) in seq.coeffs.iter().zip(&round.coeffs) {
                assert!((a - b).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn truncation_bound_algebra() {
        assert_eq!(truncation_bound(0.0, 4).unwrap(), 0.0);
        let b4 = truncation_bound(3.0, 4).unwrap();
        let b5 = truncation_bound(3.0, 5).unwrap();
        assert!((b4 / 2.0 - b5).abs() < 1e-15);
        assert!((b4 - 3.0 / 32.0).abs() < 1e-15);
        assert!(truncation_bound(-1.0, 2).is_err());
    }
}
