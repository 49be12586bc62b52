//! Antenna subset modulation (ASM-c): each symbol switches off a random
//! subset of antennas and rotates the symbol so the receiver direction keeps
//! its training-time phase.

use ndarray::Array2;
use num_complex::Complex64;
use rand::seq::index::sample;
use rand::Rng;

use crate::array::{beam_gain, ArrayResponse, Beamformer};
use crate::error::{CsbError, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AsmConfig {
    /// Fraction of active antennas, in (0, 1].
    pub c: f64,
}

impl AsmConfig {
    pub fn new(c: f64) -> Result<Self> {
        if !(c > 0.0 && c <= 1.0) {
            return Err(CsbError::InvalidParameter(format!("ASM fraction {c} outside (0, 1]")));
        }
        Ok(Self { c })
    }

    pub fn active_count(&self, num_elements: usize) -> Result<usize> {
        let k = (self.c * num_elements as f64).round() as usize;
        if k == 0 {
            return Err(CsbError::InvalidParameter(format!(
                "ASM fraction {} leaves no active antenna out of {num_elements}",
                self.c
            )));
        }
        Ok(k.min(num_elements))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AsmTransmission {
    pub beamformer: Beamformer,
    pub symbol: Complex64,
}

/// Keeps a uniform random subset of `round(c·N)` entries of `f` (others
/// zeroed, no renormalization) and rotates `x` so that
/// `⟨V_rx, F_asm⟩·x′` has the phase of `⟨V_rx, F⟩·x`. With the full-beam
/// training estimate at the receiver this leaves the decided symbol intact.
pub fn asm_transmit<R: Rng + ?Sized>(
    f: &Beamformer,
    x: Complex64,
    v_rx: &ArrayResponse,
    cfg: &AsmConfig,
    rng: &mut R,
) -> Result<AsmTransmission> {
    let (rows, cols) = f.shape();
    let n = rows * cols;
    let k = cfg.active_count(n)?;
    if k == n {
        return Ok(AsmTransmission { beamformer: f.clone(), symbol: x });
    }
    let mut mask = vec![false; n];
    for idx in sample(rng, n, k) {
        mask[idx] = true;
    }
    let src = f.entries();
    let entries = Array2::from_shape_fn((rows, cols), |(r, c)| {
        if mask[r * cols + c] {
            src[[r, c]]
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    let beamformer = Beamformer::from_raw(entries);
    let full = beam_gain(v_rx, f)?;
    let sub = beam_gain(v_rx, &beamformer)?;
    let rotation = if full.norm() > 0.0 && sub.norm() > 0.0 {
        Complex64::from_polar(1.0, full.arg() - sub.arg())
    } else {
        Complex64::new(1.0, 0.0)
    };
    Ok(AsmTransmission { beamformer, symbol: x * rotation })
}
