//! Kendall rank concordance and the concordance-to-band verdict.

use crate::error::{Error, Result};
use crate::ingestion::AqiBand;

/// Pair counts behind a τ value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PairCounts {
    pub concordant: u64,
    pub discordant: u64,
    pub total: u64,
}

impl PairCounts {
    /// τ-a: ties count in neither numerator term but stay in the denominator.
    pub fn tau(&self) -> f64 {
        (self.concordant as f64 - self.discordant as f64) / self.total as f64
    }

    /// Every pair is tied in at least one sequence.
    pub fn is_degenerate(&self) -> bool {
        self.concordant + self.discordant == 0
    }
}

/// Sum of `t(t−1)/2` over runs of equal adjacent values.
fn tied_pairs<T: PartialEq>(sorted: impl Iterator<Item = T>) -> u64 {
    let mut total = 0u64;
    let mut run = 0u64;
    let mut prev: Option<T> = None;
    for x in sorted {
        if prev.as_ref() == Some(&x) {
            run += 1;
        } else {
            total += run * (run + 1) / 2;
            run = 0;
        }
        prev = Some(x);
    }
    total + run * (run + 1) / 2
}

/// Merge sort that counts strict inversions.
fn count_inversions(v: &mut [f64], buf: &mut [f64]) -> u64 {
    let n = v.len();
    if n < 2 {
        return 0;
    }
    let mid = n / 2;
    let mut inv = count_inversions(&mut v[..mid], &mut buf[..mid]);
    inv += count_inversions(&mut v[mid..], &mut buf[mid..]);
    let (mut i, mut j, mut k) = (0, mid, 0);
    while i < mid && j < n {
        if v[j] < v[i] {
            buf[k] = v[j];
            inv += (mid - i) as u64;
            j += 1;
        } else {
            buf[k] = v[i];
            i += 1;
        }
        k += 1;
    }
    buf[k..k + mid - i].copy_from_slice(&v[i..mid]);
    k += mid - i;
    buf[k..k + n - j].copy_from_slice(&v[j..n]);
    v.copy_from_slice(&buf[..n]);
    inv
}

/// Concordant and discordant pair counts in `O(n log n)`.
pub fn pair_counts(u: &[f64], v: &[f64]) -> Result<PairCounts> {
    if u.len() != v.len() {
        return Err(Error::DimensionMismatch {
            expected: u.len(),
            actual: v.len(),
        });
    }
    let n = u.len();
    if n < 2 {
        return Err(Error::invalid("kendall tau needs at least two observations"));
    }
    if u.iter().chain(v).any(|x| x.is_nan()) {
        return Err(Error::invalid("kendall tau input contains NaN"));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&i, &j| u[i].total_cmp(&u[j]).then(v[i].total_cmp(&v[j])));

    let ties_u = tied_pairs(idx.iter().map(|&i| u[i].to_bits()));
    let ties_uv = tied_pairs(idx.iter().map(|&i| (u[i].to_bits(), v[i].to_bits())));
    let mut vs: Vec<f64> = idx.iter().map(|&i| v[i]).collect();
    let mut buf = vec![0.0; n];
    // Sorted by (u, v), so an inversion in v is a pair strictly ordered
    // both ways but in opposite directions.
    let discordant = count_inversions(&mut vs, &mut buf);
    let ties_v = tied_pairs(vs.iter().map(|x| x.to_bits()));

    let total = (n as u64) * (n as u64 - 1) / 2;
    let untied = total + ties_uv - ties_u - ties_v;
    Ok(PairCounts {
        concordant: untied - discordant,
        discordant,
        total,
    })
}

/// Kendall's τ-a of two equally long sequences.
pub fn kendall_tau(u: &[f64], v: &[f64]) -> Result<f64> {
    pair_counts(u, v).map(|c| c.tau())
}

/// τ together with the band it maps to.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TauVerdict {
    pub tau: f64,
    pub band: AqiBand,
    /// Set when every pair was tied, in which case `tau` is reported as 0.
    pub degenerate: bool,
}

pub const TAU_ZERO_TOL: f64 = 1e-12;

/// Maps a concordance value to a band:
///
/// | τ            | band         |
/// |--------------|--------------|
/// | [−1, −0.5]   | Very Poor    |
/// | (−0.5, 0)    | Poor         |
/// | 0            | Good         |
/// | (0, 0.5]     | Satisfactory |
/// | (0.5, 1]     | Moderate     |
///
/// "Zero" means within `1e-12`. Values outside `[−1, 1]` by more than that
/// are rejected.
pub fn tau_band(tau: f64) -> Result<AqiBand> {
    if !(-1.0 - TAU_ZERO_TOL..=1.0 + TAU_ZERO_TOL).contains(&tau) {
        return Err(Error::invalid(format!("tau {tau} outside [-1, 1]")));
    }
    Ok(if tau.abs() <= TAU_ZERO_TOL {
        AqiBand::Good
    } else if tau <= -0.5 {
        AqiBand::VeryPoor
    } else if tau < 0.0 {
        AqiBand::Poor
    } else if tau <= 0.5 {
        AqiBand::Satisfactory
    } else {
        AqiBand::Moderate
    })
}

/// τ between predicted and observed sequences, with its band.
pub fn tau_verdict(predicted: &[f64], observed: &[f64]) -> Result<TauVerdict> {
    let c = pair_counts(predicted, observed)?;
    let tau = if c.is_degenerate() { 0.0 } else { c.tau() };
    Ok(TauVerdict {
        tau,
        band: tau_band(tau)?,
        degenerate: c.is_degenerate(),
    })
}
