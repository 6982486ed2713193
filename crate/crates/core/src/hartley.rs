//! Two-dimensional discrete Hartley transform and spectral denoising.
//!
//! The forward transform of a `P × Q` grid `x` is
//!
//! ```text
//! H(a, b) = Σ_d Σ_h x[d][h] · cas(2π (a·d/P + b·h/Q)),   cas θ = cos θ + sin θ
//! ```
//!
//! with zero-based indices. The kernel is its own inverse up to a factor of
//! `1 / (P·Q)`, which is applied entirely on the inverse.
//!
//! [`dht_forward`] evaluates the sum separably in `O(PQ(P + Q))` using
//! `cas(α + β) = cos α · cas β + sin α · cas(−β)`; [`dht_forward_naive`] is
//! the direct quadruple loop and serves as the reference.

use std::f64::consts::TAU;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::ingestion::StationGrid;
use crate::matrix::Matrix;

/// Hartley coefficients `H(a, b)` of a grid, with the same shape.
#[derive(Debug, Clone, PartialEq)]
pub struct HartleySpectrum {
    pub coefficients: Matrix,
}

impl HartleySpectrum {
    pub fn rows(&self) -> usize {
        self.coefficients.rows()
    }

    pub fn cols(&self) -> usize {
        self.coefficients.cols()
    }

    pub fn energy(&self) -> f64 {
        self.coefficients.sum_squares()
    }

    /// `a,b,value` triples, one per line, with a header.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("a,b,value\n");
        for a in 0..self.rows() {
            for b in 0..self.cols() {
                let _ = writeln!(s, "{a},{b},{}", self.coefficients[(a, b)]);
            }
        }
        s
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut triples = Vec::new();
        let mut rdr = csv::Reader::from_reader(text.as_bytes());
        for rec in rdr.deserialize() {
            let t: (usize, usize, f64) = rec?;
            triples.push(t);
        }
        let rows = triples.iter().map(|t| t.0 + 1).max().unwrap_or(0);
        let cols = triples.iter().map(|t| t.1 + 1).max().unwrap_or(0);
        if triples.len() != rows * cols {
            return Err(Error::format("spectrum csv", "coefficients do not fill a rectangle"));
        }
        let mut m = Matrix::zeros(rows, cols);
        for (a, b, v) in triples {
            m[(a, b)] = v;
        }
        Ok(HartleySpectrum { coefficients: m })
    }
}

/// Spectral denoising settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DenoiseConfig {
    keep_fraction: f64,
}

impl DenoiseConfig {
    pub const DEFAULT_KEEP_FRACTION: f64 = 0.95;

    /// `keep_fraction` is the share of spectral energy retained, in `(0, 1]`.
    pub fn new(keep_fraction: f64) -> Result<Self> {
        if !(keep_fraction > 0.0 && keep_fraction <= 1.0) {
            return Err(Error::invalid(format!(
                "keep_fraction must lie in (0, 1], got {keep_fraction}"
            )));
        }
        Ok(DenoiseConfig { keep_fraction })
    }

    pub fn keep_fraction(&self) -> f64 {
        self.keep_fraction
    }
}

impl Default for DenoiseConfig {
    fn default() -> Self {
        DenoiseConfig {
            keep_fraction: Self::DEFAULT_KEEP_FRACTION,
        }
    }
}

/// `cos` and `sin` of `2πk/n` for `k` in `0..n`. Phases are reduced modulo
/// `n` before lookup so large index products stay exact.
struct Twiddles {
    cos: Vec<f64>,
    sin: Vec<f64>,
}

impl Twiddles {
    fn new(n: usize) -> Self {
        let (cos, sin) = (0..n)
            .map(|k| {
                let t = TAU * k as f64 / n as f64;
                (t.cos(), t.sin())
            })
            .unzip();
        Twiddles { cos, sin }
    }

    fn cas(&self, k: usize) -> f64 {
        let k = k % self.cos.len();
        self.cos[k] + self.sin[k]
    }
}

fn transform(x: &Matrix) -> Matrix {
    let (p, q) = (x.rows(), x.cols());
    let tp = Twiddles::new(p);
    let tq = Twiddles::new(q);

    // Hartley transform along each row.
    let mut rows = Matrix::zeros(p, q);
    for d in 0..p {
        let src = x.row(d);
        let dst = rows.row_mut(d);
        for (b, out) in dst.iter_mut().enumerate() {
            *out = src
                .iter()
                .enumerate()
                .map(|(h, v)| v * tq.cas(b * h))
                .sum();
        }
    }

    let mut out = Matrix::zeros(p, q);
    for a in 0..p {
        for b in 0..q {
            let mirror = (q - b) % q;
            let mut acc = 0.0;
            for d in 0..p {
                let k = (a * d) % p;
                acc += tp.cos[k] * rows[(d, b)] + tp.sin[k] * rows[(d, mirror)];
            }
            out[(a, b)] = acc;
        }
    }
    out
}

/// Forward transform of a grid.
pub fn dht_forward(grid: &StationGrid) -> HartleySpectrum {
    HartleySpectrum {
        coefficients: transform(&grid.values),
    }
}

/// Direct evaluation of the defining double sum for every coefficient.
pub fn dht_forward_naive(grid: &StationGrid) -> HartleySpectrum {
    let x = &grid.values;
    let (p, q) = (x.rows(), x.cols());
    let coefficients = Matrix::from_fn(p, q, |a, b| {
        let mut acc = 0.0;
        for d in 0..p {
            for h in 0..q {
                let phase = ((a * d) % p) as f64 / p as f64 + ((b * h) % q) as f64 / q as f64;
                let theta = TAU * phase;
                acc += x[(d, h)] * (theta.cos() + theta.sin());
            }
        }
        acc
    });
    HartleySpectrum { coefficients }
}

/// Inverse transform, normalized by `1 / (P·Q)`.
pub fn dht_inverse(spectrum: &HartleySpectrum) -> Matrix {
    let mut x = transform(&spectrum.coefficients);
    let scale = 1.0 / (spectrum.rows() * spectrum.cols()) as f64;
    x.as_mut_slice().iter_mut().for_each(|v| *v *= scale);
    x
}

/// Zeroes every coefficient outside the smallest high-energy prefix that
/// carries `keep_fraction` of the total energy. Equal energies are ordered by
/// ascending `(a, b)`. Returns the number of coefficients kept.
pub fn threshold_spectrum(spectrum: &mut HartleySpectrum, keep_fraction: f64) -> usize {
    let coeffs = spectrum.coefficients.as_mut_slice();
    let mut order: Vec<usize> = (0..coeffs.len()).collect();
    // Flat index order is (a, b) lexicographic, so a stable sort breaks ties.
    order.sort_by(|&i, &j| (coeffs[j] * coeffs[j]).total_cmp(&(coeffs[i] * coeffs[i])));
    let total: f64 = coeffs.iter().map(|c| c * c).sum();
    let target = keep_fraction * total;

    let mut kept = 0;
    let mut acc = 0.0;
    for &i in &order {
        if acc >= target && kept > 0 {
            break;
        }
        acc += coeffs[i] * coeffs[i];
        kept += 1;
    }
    for &i in &order[kept..] {
        coeffs[i] = 0.0;
    }
    kept
}

/// Forward transform, energy-fraction threshold, inverse transform.
pub fn denoise(grid: &StationGrid, config: &DenoiseConfig) -> StationGrid {
    let mut spectrum = dht_forward(grid);
    threshold_spectrum(&mut spectrum, config.keep_fraction);
    grid.with_values(dht_inverse(&spectrum))
}
