//! Assembling coefficient estimates into reconstructed waveforms, error
//! quantification, top-k spectrum compression, and decoupling-subset
//! (CPMG/PDD) reconstruction.

use crate::error::{Error, Result};
use crate::estimation::amplitude_resolution;
use crate::walsh::{
    convert_index, truncation_bound, walsh_spectrum_of, Ordering, WalshSpectrum,
};
use crate::waveform::max_abs_derivative_of;

/// Which coefficients a reconstruction was built from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SubsetTag {
    FullWalsh,
    TopK(usize),
    /// Even-parity CPMG sequences, sequencies {2^k}.
    Cpmg,
    /// Odd-parity PDD sequences, sequencies {2^k − 1}.
    Pdd,
    CpmgPdd,
}

/// An `N`-point piecewise-constant reconstruction of the field on `[0, T)`,
/// with the (time-constant) pointwise uncertainty propagated from the
/// uncorrelated coefficient estimates.
#[derive(Debug, Clone, PartialEq)]
pub struct Reconstruction {
    pub period_us: f64,
    /// Value on each dyadic subinterval.
    pub values_nt: Vec<f64>,
    /// Per-point standard uncertainty `δb_N = √(Σ_m σ_m²)`, constant in time.
    pub sigma_nt: f64,
    pub spectrum: WalshSpectrum,
    pub subset: SubsetTag,
}

impl Reconstruction {
    /// Value of the reconstructed trace at `t`.
    pub fn evaluate(&self, t_us: f64) -> Result<f64> {
        if !(0.0..self.period_us).contains(&t_us) {
            return Err(Error::TimeOutOfDomain { t: t_us, limit: self.period_us });
        }
        let n = self.values_nt.len();
        let cell = ((t_us / self.period_us * n as f64).floor() as usize).min(n - 1);
        Ok(self.values_nt[cell])
    }
}

fn reconstruct_tagged(spectrum: &WalshSpectrum, subset: SubsetTag) -> Result<Reconstruction> {
    if spectrum.is_empty() {
        return Err(Error::EmptyInput("spectrum"));
    }
    let sigma_nt = match &spectrum.sigmas {
        Some(s) => amplitude_resolution(s)?,
        None => 0.0,
    };
    Ok(Reconstruction {
        period_us: spectrum.period_us,
        values_nt: spectrum.synthesize(),
        sigma_nt,
        spectrum: spectrum.clone(),
        subset,
    })
}

/// Inverse Walsh transform of the spectrum into an `N`-point trace, with
/// uncertainty propagation from the coefficient sigmas.
pub fn reconstruct(spectrum: &WalshSpectrum) -> Result<Reconstruction> {
    reconstruct_tagged(spectrum, SubsetTag::FullWalsh)
}

/// Least-squares reconstruction error
/// `e_N = √((1/T)·∫ (b_N(t) − b(t))² dt)`, evaluated on a dense midpoint grid
/// of `grid_multiplier` points per reconstruction cell.
pub fn l2_error<F>(rec: &Reconstruction, truth: F, grid_multiplier: usize) -> f64
where
    F: Fn(f64) -> f64,
{
    let q = grid_multiplier.max(1);
    let cells = rec.values_nt.len();
    let grid = cells * q;
    let dt = rec.period_us / grid as f64;
    let mut sum_sq = 0.0;
    for j in 0..grid {
        let t = (j as f64 + 0.5) * dt;
        let d = rec.values_nt[j / q] - truth(t);
        sum_sq += d * d;
    }
    (sum_sq / grid as f64).sqrt()
}

/// Keep the `k` largest-magnitude coefficients (ties broken toward lower
/// sequency) and zero the rest. By Parseval the reconstruction error is
/// non-increasing in `k`.
pub fn compress_top_k(spectrum: &WalshSpectrum, k: usize) -> Result<WalshSpectrum> {
    let n = spectrum.len();
    if k == 0 || k > n {
        return Err(Error::BudgetOutOfRange { budget: k, n_coeffs: n });
    }
    let order = spectrum.order();
    let mut ranked: Vec<usize> = (0..n).collect();
    ranked.sort_by(|&a, &b| {
        let mag = spectrum.coeffs[b].abs().partial_cmp(&spectrum.coeffs[a].abs()).unwrap();
        mag.then_with(|| {
            let seq_a = convert_index(a as u32, spectrum.ordering, Ordering::Sequency, order)
                .expect("index in range");
            let seq_b = convert_index(b as u32, spectrum.ordering, Ordering::Sequency, order)
                .expect("index in range");
            seq_a.cmp(&seq_b)
        })
    });
    let mut keep = vec![false; n];
    for &i in ranked.iter().take(k) {
        keep[i] = true;
    }
    let coeffs = (0..n).map(|i| if keep[i] { spectrum.coeffs[i] } else { 0.0 }).collect();
    let sigmas = spectrum
        .sigmas
        .as_ref()
        .map(|s| (0..n).map(|i| if keep[i] { s[i] } else { 0.0 }).collect());
    Ok(WalshSpectrum {
        period_us: spectrum.period_us,
        ordering: spectrum.ordering,
        coeffs,
        sigmas,
    })
}

/// Reconstruction from a top-k compressed spectrum.
pub fn reconstruct_top_k(spectrum: &WalshSpectrum, k: usize) -> Result<Reconstruction> {
    reconstruct_tagged(&compress_top_k(spectrum, k)?, SubsetTag::TopK(k))
}

/// CPMG sequencies `{2^k, k ≥ 1}` below `2ⁿ`.
pub fn cpmg_indices(order: u32) -> Vec<u32> {
    (1..order.max(1)).map(|k| 1u32 << k).filter(|&m| m < 1u32 << order).collect()
}

/// PDD sequencies `{2^k − 1, k ≥ 1}` below `2ⁿ` (the Rademacher family).
pub fn pdd_indices(order: u32) -> Vec<u32> {
    (1..=order).map(|k| (1u32 << k) - 1).filter(|&m| m < 1u32 << order).collect()
}

fn subset_members(subset: SubsetTag, order: u32) -> Vec<u32> {
    match subset {
        SubsetTag::FullWalsh => (0..1u32 << order).collect(),
        SubsetTag::Cpmg => cpmg_indices(order),
        SubsetTag::Pdd => pdd_indices(order),
        SubsetTag::CpmgPdd => {
            let mut joint = cpmg_indices(order);
            joint.extend(pdd_indices(order));
            joint.sort_unstable();
            joint.dedup();
            joint
        }
        SubsetTag::TopK(_) => Vec::new(),
    }
}

/// Error report for a subset reconstruction at a fixed coefficient budget.
#[derive(Debug, Clone, PartialEq)]
pub struct SubsetReport {
    pub subset: SubsetTag,
    pub budget_requested: usize,
    /// Coefficients actually used; smaller than requested when the subset has
    /// fewer members below `2ⁿ`.
    pub budget_used: usize,
    pub truncated: bool,
    pub error_nt: f64,
    /// Error of the plain Walsh reconstruction using the same budget of
    /// lowest-sequency coefficients.
    pub full_walsh_error_nt: f64,
    pub bound_nt: f64,
}

/// Reconstruct the field from only a decoupling subset of the order-`n`
/// spectrum (coefficients outside the subset treated as zero) and compare the
/// error against a full-Walsh reconstruction of equal budget.
///
/// CPMG filters are symmetric about `T/2` and PDD filters antisymmetric, so
/// each subset samples only one parity of the field.
pub fn subset_reconstruct<F>(
    field: F,
    subset: SubsetTag,
    budget: usize,
    order: u32,
    period_us: f64,
    grid_multiplier: usize,
) -> Result<(Reconstruction, SubsetReport)>
where
    F: Fn(f64) -> f64,
{
    if budget == 0 || budget > 1usize << order {
        return Err(Error::BudgetOutOfRange { budget, n_coeffs: 1usize << order });
    }
    if matches!(subset, SubsetTag::TopK(_)) {
        return Err(Error::EmptyInput("subset family (use compress_top_k for TopK)"));
    }
    let spectrum = walsh_spectrum_of(&field, order, period_us, grid_multiplier)?;

    let members = subset_members(subset, order);
    let truncated = budget > members.len() && !matches!(subset, SubsetTag::FullWalsh);
    let used: Vec<u32> = members.into_iter().take(budget).collect();

    let mask_spectrum = |kept: &[u32]| -> WalshSpectrum {
        let mut coeffs = vec![0.0; spectrum.len()];
        for &m in kept {
            coeffs[m as usize] = spectrum.coeffs[m as usize];
        }
        WalshSpectrum {
            period_us: spectrum.period_us,
            ordering: spectrum.ordering,
            coeffs,
            sigmas: None,
        }
    };

    let rec = reconstruct_tagged(&mask_spectrum(&used), subset)?;
    let error_nt = l2_error(&rec, &field, grid_multiplier);

    let full_members: Vec<u32> = (0..budget as u32).collect();
    let full_rec = reconstruct_tagged(&mask_spectrum(&full_members), SubsetTag::FullWalsh)?;
    let full_walsh_error_nt = l2_error(&full_rec, &field, grid_multiplier);

    let unit_derivative =
        period_us * max_abs_derivative_of(&field, period_us, (1usize << order) * grid_multiplier);
    let bound_nt = truncation_bound(unit_derivative, order)?;

    let report = SubsetReport {
        subset,
        budget_requested: budget,
        budget_used: used.len(),
        truncated,
        error_nt,
        full_walsh_error_nt,
        bound_nt,
    };
    Ok((rec, report))
}
