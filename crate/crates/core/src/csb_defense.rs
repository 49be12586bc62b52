//! Circulant shift-based beamforming.
//!
//! Every data symbol goes out on a random 2D circulant shift of the
//! codebook beamformer. On any grid direction `(i, j)` the shift `(m, n)`
//! multiplies the beam gain by `exp(-j2π(m·j/rows + n·i/cols))`; the
//! transmitter pre-rotates the symbol by the conjugate of the receiver's
//! factor, so the receiver sees the unshifted link while every other grid
//! direction sees artificial phase noise (APN).

use std::f64::consts::TAU;
use std::fmt::Write as _;

use ndarray::Array2;
use num_complex::Complex64;
use num_integer::Integer;
use rand::Rng;

use crate::array::{ArrayConfig, Beamformer, GridIndex};
use crate::error::{CsbError, Result};
use crate::mutual_info::psk_mutual_information;

/// Circulant shift: `m` rows (elevation), `n` columns (azimuth).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ShiftPair {
    pub m: usize,
    pub n: usize,
}

impl ShiftPair {
    pub fn new(m: usize, n: usize) -> Self {
        Self { m, n }
    }
}

/// `[P_{m,n}(A)]_{k,ℓ} = A_{(k-m) mod rows, (ℓ-n) mod cols}`.
pub fn circulant_shift(f: &Beamformer, s: ShiftPair) -> Beamformer {
    let (r, c) = f.shape();
    let (m, n) = (s.m % r, s.n % c);
    let src = f.entries();
    Beamformer::from_raw(Array2::from_shape_fn((r, c), |(k, l)| src[[(k + r - m) % r, (l + c - n) % c]]))
}

/// Gain multiplier a shift induces at grid direction `g`:
/// `exp(-j2π(m·j/rows + n·i/cols))`.
pub fn shift_phase_factor(s: ShiftPair, g: GridIndex, cfg: &ArrayConfig) -> Complex64 {
    let (r, c) = (cfg.rows as u64, cfg.cols as u64);
    let p = ((s.m as u64 % r) * g.j as u64 * c + (s.n as u64 % c) * g.i as u64 * r) % (r * c);
    Complex64::from_polar(1.0, -TAU * p as f64 / (r * c) as f64)
}

/// Pre-rotated symbol `x·conj(factor)` that cancels the shift at `rx_grid`.
pub fn compensated_symbol(x: Complex64, s: ShiftPair, rx_grid: GridIndex, cfg: &ArrayConfig) -> Complex64 {
    x * shift_phase_factor(s, rx_grid, cfg).conj()
}

pub fn draw_shift<R: Rng + ?Sized>(rng: &mut R, cfg: &ArrayConfig) -> ShiftPair {
    ShiftPair { m: rng.random_range(0..cfg.rows), n: rng.random_range(0..cfg.cols) }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CsbTransmission {
    pub beamformer: Beamformer,
    pub symbol: Complex64,
    pub shift: ShiftPair,
}

/// One CSB symbol: draws a uniform shift, shifts `f` and compensates `x`.
pub fn csb_transmit<R: Rng + ?Sized>(
    f: &Beamformer,
    x: Complex64,
    rx_grid: GridIndex,
    cfg: &ArrayConfig,
    rng: &mut R,
) -> CsbTransmission {
    let shift = draw_shift(rng, cfg);
    CsbTransmission {
        beamformer: circulant_shift(f, shift),
        symbol: compensated_symbol(x, shift, rx_grid, cfg),
        shift,
    }
}

/// Phase error seen at `eve` for shift `s` when compensating for `rx`,
/// as an index in units of `2π/n_t` (square arrays).
pub fn apn_index(s: ShiftPair, rx: GridIndex, eve: GridIndex, n_t: usize) -> usize {
    let n = n_t as i64;
    let di = rx.i as i64 - eve.i as i64;
    let dj = rx.j as i64 - eve.j as i64;
    (s.m as i64 * dj + s.n as i64 * di).rem_euclid(n) as usize
}

/// Exact law of the artificial phase noise for grid offset `(Δi, Δj)`:
/// uniform over the multiples of `gcd(n_t, g)` (in units of `2π/n_t`),
/// with `g = gcd(Δi, Δj)` and `gcd(0, 0) = 0`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ApnLaw {
    pub n_t: usize,
    pub delta_i: i64,
    pub delta_j: i64,
    pub g: u64,
    /// Support as phase indices `k` (phase `2πk/n_t`), ascending.
    pub support: Vec<u64>,
    /// Probability of each atom as the exact fraction `prob_num / prob_den`.
    pub prob_num: u64,
    pub prob_den: u64,
}

impl ApnLaw {
    pub fn support_phases(&self) -> Vec<f64> {
        self.support.iter().map(|&k| TAU * k as f64 / self.n_t as f64).collect()
    }

    pub fn probability(&self) -> f64 {
        self.prob_num as f64 / self.prob_den as f64
    }

    /// `|Ω_Φg|`
    pub fn support_size(&self) -> usize {
        self.support.len()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("phase_deg,probability\n");
        for &k in &self.support {
            writeln!(out, "{},{}", 360.0 * k as f64 / self.n_t as f64, self.probability()).unwrap();
        }
        out
    }
}

pub fn apn_law(delta_i: i64, delta_j: i64, n_t: usize) -> ApnLaw {
    let g = delta_i.unsigned_abs().gcd(&delta_j.unsigned_abs());
    let n = n_t as u64;
    let step = n.gcd(&g);
    let size = n / step;
    let mut support: Vec<u64> = (0..size).map(|i| (g * i) % n).collect();
    support.sort_unstable();
    ApnLaw { n_t, delta_i, delta_j, g, support, prob_num: step, prob_den: n }
}

/// `|Ω_Φg| = n_t / gcd(n_t, g)`.
pub fn apn_support_size(g: u64, n_t: usize) -> usize {
    n_t / (n_t as u64).gcd(&g) as usize
}

/// Classes of M-PSK symbol indices an eavesdropper cannot tell apart under
/// APN with gcd `g`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartitionReport {
    pub m_order: usize,
    pub class_size: usize,
    pub num_classes: usize,
    pub classes: Vec<Vec<usize>>,
}

impl PartitionReport {
    /// Symbols still distinguishable at the eavesdropper.
    pub fn distinguishable(&self) -> usize {
        self.num_classes
    }

    /// High-SNR information left to the eavesdropper.
    pub fn bits(&self) -> f64 {
        (self.num_classes as f64).log2()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("class,symbol_indices\n");
        for (c, members) in self.classes.iter().enumerate() {
            let idx: Vec<String> = members.iter().map(|k| k.to_string()).collect();
            writeln!(out, "{c},[{}]", idx.join(" ")).unwrap();
        }
        out
    }
}

pub fn partition_report(m_order: usize, g: u64, n_t: usize) -> Result<PartitionReport> {
    if m_order < 2 || !m_order.is_power_of_two() {
        return Err(CsbError::InvalidParameter(format!("PSK order {m_order} is not a power of two >= 2")));
    }
    let class_size = apn_support_size(g, n_t).gcd(&m_order);
    let num_classes = m_order / class_size;
    let classes = (0..num_classes)
        .map(|k1| (0..class_size).map(|i| k1 + i * num_classes).collect())
        .collect();
    Ok(PartitionReport { m_order, class_size, num_classes, classes })
}

/// Effective PSK order an eavesdropper with APN gcd `g` is left with.
pub fn effective_order(m_order: usize, g: u64, n_t: usize) -> usize {
    m_order / apn_support_size(g, n_t).gcd(&m_order)
}

/// Secrecy mutual information under CSB,
/// `max(I(ρ_R, M) - I(ρ_E, M / gcd(|Ω_Φg|, M)), 0)`, where the SNR terms
/// already include the squared beam gains.
pub fn smi(rx_snr_term: f64, eve_snr_term: f64, m_order: usize, g: u64, n_t: usize) -> f64 {
    let rx = psk_mutual_information(rx_snr_term, m_order);
    let eve = psk_mutual_information(eve_snr_term, effective_order(m_order, g, n_t));
    (rx - eve).max(0.0)
}
