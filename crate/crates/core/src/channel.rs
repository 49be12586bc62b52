//! Line-of-sight narrowband link: `y = √P·e^{jν}·⟨V, F⟩·x + n`, with
//! training-based equalization on the fixed beam and nearest-symbol PSK
//! detection at both the receiver and the eavesdropper.

use std::f64::consts::TAU;
use std::fmt::Write as _;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::array::{beam_gain, ArrayConfig, ArrayResponse, Beamformer, GridIndex};
use crate::asm::{asm_transmit, AsmConfig};
use crate::csb_defense::csb_transmit;
use crate::error::{CsbError, Result};

/// Constellation dumps never hold more than this many points.
pub const CONSTELLATION_CAP: usize = 10_000;

const STREAM_SYMBOLS: u64 = 0;
const STREAM_RX_NOISE: u64 = 1;
const STREAM_EVE_NOISE: u64 = 2;
const STREAM_DEFENSE: u64 = 3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkState {
    pub p_r: f64,
    pub nu: f64,
    pub sigma2: f64,
}

impl LinkState {
    pub fn new(p_r: f64, nu: f64, sigma2: f64) -> Result<Self> {
        if !(p_r >= 0.0) || !(sigma2 > 0.0) || !nu.is_finite() {
            return Err(CsbError::InvalidParameter(format!("bad link state p_r={p_r} sigma2={sigma2} nu={nu}")));
        }
        Ok(Self { p_r, nu, sigma2 })
    }

    /// Composite channel `√P·e^{jν}·g` for beam gain `g`.
    pub fn channel(&self, gain: Complex64) -> Complex64 {
        Complex64::from_polar(self.p_r.sqrt(), self.nu) * gain
    }

    pub fn noise<R: Rng + ?Sized>(&self, rng: &mut R) -> Complex64 {
        let d = Normal::new(0.0, (self.sigma2 / 2.0).sqrt()).expect("positive noise power");
        Complex64::new(d.sample(rng), d.sample(rng))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PskConstellation {
    pub m_order: usize,
    pub symbols: Vec<Complex64>,
}

impl PskConstellation {
    pub fn new(m_order: usize) -> Result<Self> {
        if m_order < 2 {
            return Err(CsbError::InvalidParameter(format!("PSK order {m_order} < 2")));
        }
        let symbols = (0..m_order).map(|k| Complex64::from_polar(1.0, TAU * k as f64 / m_order as f64)).collect();
        Ok(Self { m_order, symbols })
    }

    /// Nearest symbol index to `z` (ML for equal-energy PSK in AWGN).
    pub fn nearest(&self, z: Complex64) -> usize {
        let m = self.m_order as f64;
        ((z.arg() / TAU * m).round().rem_euclid(m)) as usize % self.m_order
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SerResult {
    pub trials: u64,
    pub rx_errors: u64,
    pub eve_errors: u64,
}

impl SerResult {
    pub fn rx_ser(&self) -> f64 {
        self.rx_errors as f64 / self.trials.max(1) as f64
    }

    pub fn eve_ser(&self) -> f64 {
        self.eve_errors as f64 / self.trials.max(1) as f64
    }

    pub fn merge(self, other: SerResult) -> SerResult {
        SerResult {
            trials: self.trials + other.trials,
            rx_errors: self.rx_errors + other.rx_errors,
            eve_errors: self.eve_errors + other.eve_errors,
        }
    }
}

pub fn received_symbol(link: &LinkState, v: &ArrayResponse, f: &Beamformer, x: Complex64, noise: Complex64) -> Result<Complex64> {
    Ok(link.channel(beam_gain(v, f)?) * x + noise)
}

/// Free-space power `p0·(r0/r)²`.
pub fn path_power(r: f64, p0: f64, r0: f64) -> Result<f64> {
    if !(r > 0.0) || !(r0 > 0.0) {
        return Err(CsbError::InvalidParameter(format!("non-positive distance r={r} r0={r0}")));
    }
    Ok(p0 * (r0 / r).powi(2))
}

/// Decision on `y / h_hat`; `None` when there is no channel to invert.
pub fn equalize_and_detect(y: Complex64, h_hat: Complex64, constellation: &PskConstellation) -> Option<usize> {
    if h_hat.norm_sqr() == 0.0 || !h_hat.is_finite() {
        return None;
    }
    Some(constellation.nearest(y / h_hat))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Defense {
    None,
    Csb,
    Asm(AsmConfig),
}

impl Defense {
    pub fn label(&self) -> String {
        match self {
            Defense::None => "none".into(),
            Defense::Csb => "csb".into(),
            Defense::Asm(c) => format!("asm-{}", c.c),
        }
    }
}

/// Everything fixed for the duration of one packet.
#[derive(Debug, Clone)]
pub struct LinkSetup {
    pub array: ArrayConfig,
    /// Fixed beam used for training and as the base of every defense.
    pub beamformer: Beamformer,
    /// Grid direction CSB compensates for.
    pub rx_grid: GridIndex,
    pub v_rx: ArrayResponse,
    pub v_eve: ArrayResponse,
    pub rx: LinkState,
    pub eve: LinkState,
}

impl LinkSetup {
    /// Receiver SNR after beamforming with the fixed beam, linear.
    pub fn rx_snr(&self) -> Result<f64> {
        Ok(self.rx.p_r * beam_gain(&self.v_rx, &self.beamformer)?.norm_sqr() / self.rx.sigma2)
    }

    pub fn eve_snr(&self) -> Result<f64> {
        Ok(self.eve.p_r * beam_gain(&self.v_eve, &self.beamformer)?.norm_sqr() / self.eve.sigma2)
    }
}

/// Outcome of one transmitted symbol.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymbolOutcome {
    pub sent: usize,
    pub rx_sample: Complex64,
    pub eve_sample: Complex64,
    pub rx_decision: Option<usize>,
    pub eve_decision: Option<usize>,
}

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

fn for_each_symbol(
    setup: &LinkSetup,
    defense: Defense,
    m_order: usize,
    num_symbols: usize,
    seed: u64,
    mut visit: impl FnMut(&SymbolOutcome),
) -> Result<()> {
    let psk = PskConstellation::new(m_order)?;
    let h_rx = setup.rx.channel(beam_gain(&setup.v_rx, &setup.beamformer)?);
    let h_eve = setup.eve.channel(beam_gain(&setup.v_eve, &setup.beamformer)?);
    let mut sym_rng = stream(seed, STREAM_SYMBOLS);
    let mut rx_rng = stream(seed, STREAM_RX_NOISE);
    let mut eve_rng = stream(seed, STREAM_EVE_NOISE);
    let mut def_rng = stream(seed, STREAM_DEFENSE);
    for _ in 0..num_symbols {
        let sent = sym_rng.random_range(0..m_order);
        let x = psk.symbols[sent];
        let (f, xt) = match defense {
            Defense::None => (None, x),
            Defense::Csb => {
                let t = csb_transmit(&setup.beamformer, x, setup.rx_grid, &setup.array, &mut def_rng);
                (Some(t.beamformer), t.symbol)
            }
            Defense::Asm(cfg) => {
                let t = asm_transmit(&setup.beamformer, x, &setup.v_rx, &cfg, &mut def_rng)?;
                (Some(t.beamformer), t.symbol)
            }
        };
        let f = f.as_ref().unwrap_or(&setup.beamformer);
        let y_rx = received_symbol(&setup.rx, &setup.v_rx, f, xt, setup.rx.noise(&mut rx_rng))?;
        let y_eve = received_symbol(&setup.eve, &setup.v_eve, f, xt, setup.eve.noise(&mut eve_rng))?;
        visit(&SymbolOutcome {
            sent,
            rx_sample: y_rx / h_rx,
            eve_sample: y_eve / h_eve,
            rx_decision: equalize_and_detect(y_rx, h_rx, &psk),
            eve_decision: equalize_and_detect(y_eve, h_eve, &psk),
        });
    }
    Ok(())
}

/// Per-symbol trace of one packet. Noise and symbols come from fixed
/// sub-streams of `seed`, so runs that differ only in `defense` see the same
/// symbols and the same noise.
pub fn simulate_link(setup: &LinkSetup, defense: Defense, m_order: usize, num_symbols: usize, seed: u64) -> Result<Vec<SymbolOutcome>> {
    let mut out = Vec::with_capacity(num_symbols);
    for_each_symbol(setup, defense, m_order, num_symbols, seed, |o| out.push(*o))?;
    Ok(out)
}

/// An eavesdropper-equalized sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstellationPoint {
    pub sample: Complex64,
    pub true_symbol_index: usize,
}

pub fn run_ser_experiment(
    setup: &LinkSetup,
    defense: Defense,
    m_order: usize,
    num_symbols: usize,
    seed: u64,
    capture: bool,
) -> Result<(SerResult, Option<Vec<ConstellationPoint>>)> {
    if num_symbols == 0 {
        return Err(CsbError::InvalidParameter("num_symbols must be >= 1".into()));
    }
    let mut res = SerResult::default();
    let mut points = capture.then(Vec::new);
    for_each_symbol(setup, defense, m_order, num_symbols, seed, |o| {
        res.trials += 1;
        res.rx_errors += (o.rx_decision != Some(o.sent)) as u64;
        res.eve_errors += (o.eve_decision != Some(o.sent)) as u64;
        if let Some(p) = points.as_mut() {
            if p.len() < CONSTELLATION_CAP && o.eve_sample.is_finite() {
                p.push(ConstellationPoint { sample: o.eve_sample, true_symbol_index: o.sent });
            }
        }
    })?;
    Ok((res, points))
}

pub fn constellation_csv(points: &[ConstellationPoint]) -> String {
    let mut out = String::from("re,im,true_symbol_index\n");
    for p in points {
        writeln!(out, "{},{},{}", p.sample.re, p.sample.im, p.true_symbol_index).unwrap();
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct SerRow {
    pub snr_db: f64,
    pub defense: String,
    pub result: SerResult,
}

pub fn ser_csv(rows: &[SerRow]) -> String {
    let mut out = String::from("snr_db,defense,rx_ser,eve_ser,trials\n");
    for r in rows {
        writeln!(out, "{},{},{},{},{}", r.snr_db, r.defense, r.result.rx_ser(), r.result.eve_ser(), r.result.trials).unwrap();
    }
    out
}
