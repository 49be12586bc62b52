//! Planar array responses, q-bit phase quantization and the quantized
//! 2D-DFT codebook.
//!
//! Matrices are `rows × cols`. Row index `k` carries the elevation phase
//! and column index `ℓ` the azimuth phase:
//! `[V(θ, φ)]_{k,ℓ} = exp(-jπ(k·sin φ + ℓ·sin θ))`. Grid index `i` is the
//! azimuth (column) coordinate and `j` the elevation (row) coordinate.
//! A linear array is the degenerate `1 × n` case.

use std::f64::consts::{PI, TAU};
use std::fmt::Write as _;

use ndarray::{Array1, Array2, Zip};
use num_complex::Complex64;

use crate::error::{CsbError, Result};

pub type Matrix = Array2<Complex64>;

/// Phase-shifter resolution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Resolution {
    Bits(u32),
    Unquantized,
}

impl Resolution {
    /// Number of phase levels, `None` when unquantized.
    pub fn levels(self) -> Option<u64> {
        match self {
            Resolution::Bits(q) => Some(1u64 << q),
            Resolution::Unquantized => None,
        }
    }

    pub fn label(self) -> String {
        match self {
            Resolution::Bits(q) => format!("q{q}"),
            Resolution::Unquantized => "qinf".to_string(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ArrayConfig {
    pub rows: usize,
    pub cols: usize,
    pub resolution: Resolution,
}

/// Position on the 2D-DFT beam grid, both coordinates reduced modulo the
/// array size. `i` ↔ azimuth (`cols`), `j` ↔ elevation (`rows`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GridIndex {
    pub i: usize,
    pub j: usize,
}

impl GridIndex {
    pub fn new(i: usize, j: usize) -> Self {
        Self { i, j }
    }
}

fn signed_of(idx: usize, n: usize) -> i64 {
    if 2 * idx <= n {
        idx as i64
    } else {
        idx as i64 - n as i64
    }
}

fn wrap(idx: i64, n: usize) -> usize {
    idx.rem_euclid(n as i64) as usize
}

impl ArrayConfig {
    pub fn new(rows: usize, cols: usize, resolution: Resolution) -> Result<Self> {
        let dim_ok = |n: usize| n >= 2 && n.is_multiple_of(2);
        if !dim_ok(cols) || !(rows == 1 || dim_ok(rows)) {
            return Err(CsbError::InvalidArray(format!(
                "array dimensions must be even (rows may be 1), got {rows}x{cols}"
            )));
        }
        if let Resolution::Bits(q) = resolution {
            if q == 0 || q > 16 {
                return Err(CsbError::InvalidArray(format!("phase resolution q = {q}")));
            }
        }
        Ok(Self { rows, cols, resolution })
    }

    pub fn square(n_t: usize, resolution: Resolution) -> Result<Self> {
        Self::new(n_t, n_t, resolution)
    }

    /// A `1 × n` uniform linear array steering in azimuth only.
    pub fn linear(n: usize, resolution: Resolution) -> Result<Self> {
        Self::new(1, n, resolution)
    }

    pub fn with_resolution(self, resolution: Resolution) -> Self {
        Self { resolution, ..self }
    }

    pub fn num_elements(&self) -> usize {
        self.rows * self.cols
    }

    /// Per-element amplitude giving a unit Frobenius norm (`1/N_T` for a
    /// square array).
    pub fn element_amplitude(&self) -> f64 {
        1.0 / (self.num_elements() as f64).sqrt()
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn response(&self, theta: f64, phi: f64) -> ArrayResponse {
        array_response_dims(theta, phi, self.rows, self.cols)
    }

    pub fn grid(&self, i: i64, j: i64) -> GridIndex {
        GridIndex { i: wrap(i, self.cols), j: wrap(j, self.rows) }
    }

    /// Signed grid coordinates `(i, j)`, each in `(-n/2, n/2]`.
    pub fn signed(&self, g: GridIndex) -> (i64, i64) {
        (signed_of(g.i, self.cols), signed_of(g.j, self.rows))
    }

    pub fn negate(&self, g: GridIndex) -> GridIndex {
        self.grid(-(g.i as i64), -(g.j as i64))
    }

    /// Physical direction of a grid point: `sin θ = 2i/cols`, `sin φ = 2j/rows`.
    pub fn grid_angles(&self, g: GridIndex) -> (f64, f64) {
        let (i, j) = self.signed(g);
        let theta = (2.0 * i as f64 / self.cols as f64).asin();
        let phi = if self.rows == 1 { 0.0 } else { (2.0 * j as f64 / self.rows as f64).asin() };
        (theta, phi)
    }

    /// Nearest grid point to a direction, `i = round(cols/2 · sin θ)`.
    pub fn nearest_grid(&self, theta: f64, phi: f64) -> GridIndex {
        let i = (self.cols as f64 / 2.0 * theta.sin()).round() as i64;
        let j = (self.rows as f64 / 2.0 * phi.sin()).round() as i64;
        self.grid(i, j)
    }

    pub fn grid_points(&self) -> impl Iterator<Item = GridIndex> + '_ {
        (0..self.cols).flat_map(move |i| (0..self.rows).map(move |j| GridIndex { i, j }))
    }

    /// Array response at a grid direction, built from exact rational phases
    /// `2π(j·k/rows + i·ℓ/cols)` so that it is exactly periodic.
    pub fn grid_response(&self, g: GridIndex) -> ArrayResponse {
        let (r, c) = (self.rows, self.cols);
        let period = (r * c) as u64;
        ArrayResponse(Array2::from_shape_fn((r, c), |(k, l)| {
            let p = (g.j as u64 * k as u64 * c as u64 + g.i as u64 * l as u64 * r as u64) % period;
            Complex64::from_polar(1.0, -TAU * p as f64 / period as f64)
        }))
    }

    /// Codebook entry for grid point `g`:
    /// `exp(j·Q_q(2π(j·k/rows + i·ℓ/cols))) / √(rows·cols)`.
    ///
    /// Unquantized, this is the conjugate of the grid response, so under
    /// the conjugating inner product its mainlobe sits at the grid point
    /// `-g`. Use [`ArrayConfig::beam_toward`] to steer at a direction.
    pub fn codeword(&self, g: GridIndex) -> Beamformer {
        dft_codeword(g, self)
    }

    /// The codeword whose mainlobe points at grid direction `g`.
    pub fn beam_toward(&self, g: GridIndex) -> Beamformer {
        dft_codeword(self.negate(g), self)
    }

    pub fn codebook(&self) -> Vec<(GridIndex, Beamformer)> {
        self.grid_points().map(|g| (g, self.codeword(g))).collect()
    }
}

/// Vandermonde steering vector, entry `k` is `exp(-jπk·sin θ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SteeringVector(pub Array1<Complex64>);

pub fn steering_vector(theta: f64, n: usize) -> SteeringVector {
    let s = theta.sin();
    SteeringVector(Array1::from_shape_fn(n, |k| Complex64::from_polar(1.0, -PI * k as f64 * s)))
}

/// Far-field array response `V(θ, φ) = a(φ)·a(θ)ᵀ`.
#[derive(Debug, Clone, PartialEq)]
pub struct ArrayResponse(pub Matrix);

impl ArrayResponse {
    pub fn entries(&self) -> &Matrix {
        &self.0
    }
}

pub fn array_response(theta: f64, phi: f64, n_t: usize) -> ArrayResponse {
    array_response_dims(theta, phi, n_t, n_t)
}

pub fn array_response_dims(theta: f64, phi: f64, rows: usize, cols: usize) -> ArrayResponse {
    let (sp, st) = (phi.sin(), theta.sin());
    ArrayResponse(Array2::from_shape_fn((rows, cols), |(k, l)| {
        Complex64::from_polar(1.0, -PI * (k as f64 * sp + l as f64 * st))
    }))
}

/// Transmit beamformer. Codebook members have unit-modulus phases scaled to
/// unit Frobenius norm; [`Beamformer::from_raw`] admits anything else (for
/// instance antenna-subset patterns with switched-off elements).
#[derive(Debug, Clone, PartialEq)]
pub struct Beamformer(Matrix);

impl Beamformer {
    pub fn from_raw(entries: Matrix) -> Self {
        Self(entries)
    }

    pub fn entries(&self) -> &Matrix {
        &self.0
    }

    pub fn into_entries(self) -> Matrix {
        self.0
    }

    pub fn shape(&self) -> (usize, usize) {
        self.0.dim()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// True when every entry is real up to `tol` (±amplitude for 1-bit codewords).
    pub fn is_real(&self, tol: f64) -> bool {
        self.0.iter().all(|z| z.im.abs() <= tol)
    }
}

/// Rounds a phase to the nearest member of `B_q = {2πi/2^q}` under circular
/// distance. A phase exactly midway between two members goes to the one
/// with the smaller value in `[0, 2π)`.
pub fn quantize_phase(x: f64, q: u32) -> f64 {
    let levels = 1u64 << q;
    let step = TAU / levels as f64;
    let t = x.rem_euclid(TAU) / step;
    let lo = t.floor();
    let frac = t - lo;
    let lo = lo as u64 % levels;
    let hi = (lo + 1) % levels;
    let k = if frac < 0.5 {
        lo
    } else if frac > 0.5 {
        hi
    } else {
        lo.min(hi)
    };
    k as f64 * step
}

/// Exact rational variant: quantizes the phase `2π·num/den`, returning the
/// level index in `0..2^q`.
fn quantize_rational(num: u64, den: u64, q: u32) -> u64 {
    let levels = 1u64 << q;
    let scaled = (num % den) * levels;
    let lo = scaled / den;
    let rem2 = 2 * (scaled % den);
    let hi = (lo + 1) % levels;
    if rem2 < den {
        lo
    } else if rem2 > den {
        hi
    } else {
        lo.min(hi)
    }
}

/// Phase-quantized beamformer from any matrix with nonzero entries:
/// `exp(j·Q_q(∠F_{k,ℓ})) / √(rows·cols)`.
pub fn quantized_beamformer(f: &Matrix, resolution: Resolution) -> Beamformer {
    let amp = 1.0 / (f.len() as f64).sqrt();
    Beamformer(f.mapv(|z| {
        let phase = match resolution {
            Resolution::Bits(q) => quantize_phase(z.arg(), q),
            Resolution::Unquantized => z.arg(),
        };
        Complex64::from_polar(amp, phase)
    }))
}

pub fn dft_codeword(g: GridIndex, cfg: &ArrayConfig) -> Beamformer {
    let (r, c) = (cfg.rows, cfg.cols);
    let period = (r * c) as u64;
    let amp = cfg.element_amplitude();
    Beamformer(Array2::from_shape_fn((r, c), |(k, l)| {
        let p = (g.j as u64 * k as u64 * c as u64 + g.i as u64 * l as u64 * r as u64) % period;
        let phase = match cfg.resolution {
            Resolution::Bits(q) => {
                let levels = 1u64 << q;
                TAU * quantize_rational(p, period, q) as f64 / levels as f64
            }
            Resolution::Unquantized => TAU * p as f64 / period as f64,
        };
        Complex64::from_polar(amp, phase)
    }))
}

/// `⟨V, F⟩ = Σ V_{k,ℓ}·conj(F_{k,ℓ})`.
pub fn beam_gain(v: &ArrayResponse, f: &Beamformer) -> Result<Complex64> {
    inner(&v.0, &f.0)
}

pub(crate) fn inner(a: &Matrix, b: &Matrix) -> Result<Complex64> {
    if a.dim() != b.dim() {
        return Err(CsbError::DimensionMismatch(a.dim(), b.dim()));
    }
    Ok(Zip::from(a).and(b).fold(Complex64::new(0.0, 0.0), |acc, x, y| acc + x * y.conj()))
}

/// `|⟨V(θ,φ), F⟩|` over a list of directions, normalized by its maximum.
pub fn beam_pattern(f: &Beamformer, grid: &[(f64, f64)]) -> Result<Vec<f64>> {
    if grid.is_empty() {
        return Err(CsbError::EmptyGrid);
    }
    let (r, c) = f.shape();
    let amps: Vec<f64> = grid
        .iter()
        .map(|&(th, ph)| inner(&array_response_dims(th, ph, r, c).0, &f.0).map(|g| g.norm()))
        .collect::<Result<_>>()?;
    Ok(normalize_by_max(amps))
}

fn normalize_by_max(mut amps: Vec<f64>) -> Vec<f64> {
    let max = amps.iter().cloned().fold(0.0, f64::max);
    if max > 0.0 {
        amps.iter_mut().for_each(|a| *a /= max);
    }
    amps
}

/// Complex gains over the product grid `phis × thetas`, indexed
/// `[phi_index, theta_index]`. Uses the separability of the response:
/// `⟨V, F⟩ = a(φ)ᵀ·conj(F)·a(θ)`.
pub fn gain_map(f: &Beamformer, thetas: &[f64], phis: &[f64]) -> Matrix {
    let (r, c) = f.shape();
    let a_phi = Array2::from_shape_fn((phis.len(), r), |(p, k)| {
        Complex64::from_polar(1.0, -PI * k as f64 * phis[p].sin())
    });
    let a_theta = Array2::from_shape_fn((c, thetas.len()), |(l, t)| {
        Complex64::from_polar(1.0, -PI * l as f64 * thetas[t].sin())
    });
    let fc = f.0.mapv(|z| z.conj());
    a_phi.dot(&fc).dot(&a_theta)
}

/// Gains toward every grid direction, indexed `[j, i]`, from exact grid
/// steering phases.
pub fn grid_gains(f: &Beamformer) -> Matrix {
    let (r, c) = f.shape();
    let dft = |n: usize| {
        Array2::from_shape_fn((n, n), |(a, b)| {
            Complex64::from_polar(1.0, -TAU * ((a * b) % n) as f64 / n as f64)
        })
    };
    let fc = f.0.mapv(|z| z.conj());
    dft(r).dot(&fc).dot(&dft(c))
}

/// CSV of the normalized amplitude over a `thetas × phis` degree grid,
/// theta-major.
pub fn beam_pattern_csv(f: &Beamformer, thetas_deg: &[f64], phis_deg: &[f64]) -> Result<String> {
    if thetas_deg.is_empty() || phis_deg.is_empty() {
        return Err(CsbError::EmptyGrid);
    }
    let th: Vec<f64> = thetas_deg.iter().map(|d| d.to_radians()).collect();
    let ph: Vec<f64> = phis_deg.iter().map(|d| d.to_radians()).collect();
    let map = gain_map(f, &th, &ph);
    let amps = normalize_by_max(map.t().iter().map(|z| z.norm()).collect());
    let mut out = String::from("theta_deg,phi_deg,normalized_amplitude\n");
    let mut it = amps.iter();
    for t in thetas_deg {
        for p in phis_deg {
            writeln!(out, "{t},{p},{:.12}", it.next().unwrap()).unwrap();
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use std::f64::consts::FRAC_PI_2;

    fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
        (a - b).norm() <= tol
    }

    #[test]
    fn steering_examples() {
        let a = steering_vector(0.0, 4);
        assert!(a.0.iter().all(|z| close(*z, Complex64::new(1.0, 0.0), 1e-15)));
        let a = steering_vector(FRAC_PI_2, 4);
        for (k, z) in a.0.iter().enumerate() {
            let want = if k % 2 == 0 { 1.0 } else { -1.0 };
            assert!(close(*z, Complex64::new(want, 0.0), 1e-14));
        }
        let a = steering_vector((2.0f64 / 16.0).asin(), 16);
        for (k, z) in a.0.iter().enumerate() {
            assert!(close(*z, Complex64::from_polar(1.0, -TAU * k as f64 / 16.0), 1e-14));
        }
    }

    #[test]
    fn response_examples() {
        assert!(array_response(0.0, 0.0, 4).0.iter().all(|z| close(*z, Complex64::new(1.0, 0.0), 1e-15)));

        let cfg = ArrayConfig::square(16, Resolution::Unquantized).unwrap();
        let g = GridIndex::new(3, 5);
        let (th, ph) = cfg.grid_angles(g);
        let v = cfg.response(th, ph);
        let exact = cfg.grid_response(g);
        for ((k, l), z) in v.0.indexed_iter() {
            let want = Complex64::from_polar(1.0, -TAU / 16.0 * (5 * k + 3 * l) as f64);
            assert!(close(*z, want, 1e-12));
            assert!(close(exact.0[[k, l]], want, 1e-12));
        }

        let v = array_response(0.3, -0.7, 8);
        let w = array_response(-0.3, 0.7, 8);
        assert!(v.0.iter().zip(w.0.iter()).all(|(a, b)| close(*a, b.conj(), 1e-13)));
    }

    #[test]
    fn response_is_rank_one_outer_product() {
        let (th, ph) = (0.4, -0.9);
        let v = array_response(th, ph, 6);
        let (a_t, a_p) = (steering_vector(th, 6).0, steering_vector(ph, 6).0);
        for ((k, l), z) in v.0.indexed_iter() {
            assert!(close(*z, a_p[k] * a_t[l], 1e-13));
            assert_abs_diff_eq!(z.norm(), 1.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn quantize_examples() {
        assert_eq!(quantize_phase(0.4 * PI, 1), 0.0);
        assert_eq!(quantize_phase(1.6 * PI, 1), 0.0);
        assert_eq!(quantize_phase(FRAC_PI_2, 2), FRAC_PI_2);
        assert_eq!(quantize_phase(0.6 * PI, 1), PI);
        assert_eq!(quantize_phase(-0.1, 2), 0.0);
        // ties go to the smaller phase, 0 winning at the seam
        assert_eq!(quantize_phase(FRAC_PI_2, 1), 0.0);
        assert_eq!(quantize_phase(1.5 * PI, 1), 0.0);
        assert_eq!(quantize_phase(PI / 4.0, 2), 0.0);
    }

    #[test]
    fn quantize_matches_enumerated_circular_argmin() {
        // oracle: enumerate B_q and take the circular argmin
        for q in 1..=3u32 {
            let levels = 1 << q;
            for s in 0..997 {
                let x = -7.0 + 14.0 * s as f64 / 997.0;
                let dist = |b: f64| {
                    let d = (x - b).rem_euclid(TAU);
                    d.min(TAU - d)
                };
                let best = (0..levels)
                    .map(|i| TAU * i as f64 / levels as f64)
                    .min_by(|a, b| dist(*a).partial_cmp(&dist(*b)).unwrap())
                    .unwrap();
                assert_abs_diff_eq!(quantize_phase(x, q), best, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn quantized_beamformer_examples() {
        let v = array_response(0.7, -0.2, 8);
        let f = quantized_beamformer(&v.0, Resolution::Unquantized);
        for (a, b) in f.entries().iter().zip(v.0.iter()) {
            assert_abs_diff_eq!(a.norm(), 1.0 / 8.0, epsilon = 1e-15);
            assert!(close(*a * 8.0, *b, 1e-13));
        }
        for q in [Resolution::Bits(1), Resolution::Bits(2), Resolution::Unquantized] {
            let f = quantized_beamformer(&array_response(0.0, 0.0, 4).0, q);
            assert!(f.entries().iter().all(|z| close(*z, Complex64::new(0.25, 0.0), 1e-15)));
        }
        let v = array_response((-30f64).to_radians(), (-42f64).to_radians(), 16);
        let f = quantized_beamformer(&v.0, Resolution::Bits(1));
        assert!(f.is_real(1e-15));
        assert!(f.entries().iter().all(|z| (z.re.abs() - 1.0 / 16.0).abs() < 1e-15));
    }

    #[test]
    fn codeword_examples() {
        let cfg = ArrayConfig::square(16, Resolution::Unquantized).unwrap();
        let f = cfg.codeword(GridIndex::new(0, 0));
        assert!(f.entries().iter().all(|z| close(*z, Complex64::new(1.0 / 16.0, 0.0), 1e-15)));

        // elevation index j drives the row phase
        let f = cfg.codeword(GridIndex::new(0, 1));
        for ((k, _), z) in f.entries().indexed_iter() {
            assert!(close(*z, Complex64::from_polar(1.0 / 16.0, TAU * k as f64 / 16.0), 1e-15));
        }
        let f = cfg.codeword(GridIndex::new(1, 0));
        for ((_, l), z) in f.entries().indexed_iter() {
            assert!(close(*z, Complex64::from_polar(1.0 / 16.0, TAU * l as f64 / 16.0), 1e-15));
        }

        let one_bit = cfg.with_resolution(Resolution::Bits(1));
        for g in one_bit.grid_points() {
            assert!(one_bit.codeword(g).is_real(1e-15));
        }
    }

    #[test]
    fn codeword_matches_float_quantization_away_from_ties() {
        let cfg = ArrayConfig::square(8, Resolution::Bits(2)).unwrap();
        let unq = cfg.with_resolution(Resolution::Unquantized);
        for g in cfg.grid_points() {
            let exact = cfg.codeword(g);
            let float = quantized_beamformer(unq.codeword(g).entries(), Resolution::Bits(2));
            let agree = exact.entries().iter().zip(float.entries().iter()).filter(|(a, b)| close(**a, **b, 1e-12)).count();
            // only the exact ties can differ
            assert!(agree >= 64 - 16, "{g:?}: {agree}");
        }
    }

    #[test]
    fn gain_examples() {
        let cfg = ArrayConfig::square(16, Resolution::Unquantized).unwrap();
        let g = GridIndex::new(2, 13);
        let v = cfg.grid_response(g);
        let matched = beam_gain(&v, &cfg.beam_toward(g)).unwrap();
        assert_abs_diff_eq!(matched.norm(), 16.0, epsilon = 1e-12);
        let other = beam_gain(&v, &cfg.beam_toward(GridIndex::new(3, 13))).unwrap();
        assert_abs_diff_eq!(other.norm(), 0.0, epsilon = 1e-12);
        // the codeword indexed by g is conjugate-matched to -g
        let conj = beam_gain(&cfg.grid_response(cfg.negate(g)), &cfg.codeword(g)).unwrap();
        assert_abs_diff_eq!(conj.norm(), 16.0, epsilon = 1e-12);

        let bad = Beamformer::from_raw(Array2::zeros((4, 4)));
        assert!(matches!(beam_gain(&v, &bad), Err(CsbError::DimensionMismatch(..))));
    }

    #[test]
    fn dft_orthogonality() {
        for n in [4usize, 8, 16] {
            let cfg = ArrayConfig::square(n, Resolution::Unquantized).unwrap();
            for g2 in cfg.grid_points() {
                let gains = grid_gains(&cfg.codeword(g2));
                for g1 in cfg.grid_points() {
                    let want = if cfg.negate(g1) == g2 { n as f64 } else { 0.0 };
                    assert_abs_diff_eq!(gains[[g1.j, g1.i]].norm(), want, epsilon = 1e-10);
                }
            }
        }
    }

    #[test]
    fn grid_gains_agree_with_direct_inner_product() {
        let cfg = ArrayConfig::square(8, Resolution::Bits(2)).unwrap();
        let f = cfg.codeword(GridIndex::new(3, 6));
        let gains = grid_gains(&f);
        for g in cfg.grid_points() {
            let direct = beam_gain(&cfg.grid_response(g), &f).unwrap();
            assert!(close(gains[[g.j, g.i]], direct, 1e-12));
        }
        let lin = ArrayConfig::linear(12, Resolution::Bits(1)).unwrap();
        let f = lin.codeword(GridIndex::new(1, 0));
        let gains = grid_gains(&f);
        for g in lin.grid_points() {
            let direct = beam_gain(&lin.grid_response(g), &f).unwrap();
            assert!(close(gains[[g.j, g.i]], direct, 1e-12));
        }
    }

    #[test]
    fn gain_map_agrees_with_direct_inner_product() {
        let cfg = ArrayConfig::square(8, Resolution::Bits(1)).unwrap();
        let f = cfg.codeword(GridIndex::new(1, 2));
        let thetas = [-1.2, -0.3, 0.0, 0.8];
        let phis = [-0.5, 0.1, 1.4];
        let map = gain_map(&f, &thetas, &phis);
        for (p, ph) in phis.iter().enumerate() {
            for (t, th) in thetas.iter().enumerate() {
                let direct = beam_gain(&cfg.response(*th, *ph), &f).unwrap();
                assert!(close(map[[p, t]], direct, 1e-12));
            }
        }
    }

    #[test]
    fn beam_pattern_maxima() {
        let (th0, ph0) = ((-30f64).to_radians(), (-42f64).to_radians());
        let v = array_response(th0, ph0, 16);
        let grid: Vec<(f64, f64)> = (-90..=90)
            .step_by(3)
            .flat_map(|t| (-75..=90).step_by(3).map(move |p| ((t as f64).to_radians(), (p as f64).to_radians())))
            .collect();
        let ideal = beam_pattern(&quantized_beamformer(&v.0, Resolution::Unquantized), &grid).unwrap();
        let one = beam_pattern(&quantized_beamformer(&v.0, Resolution::Bits(1)), &grid).unwrap();
        let two = beam_pattern(&quantized_beamformer(&v.0, Resolution::Bits(2)), &grid).unwrap();
        let idx = |t: i32, p: i32| grid.iter().position(|&(a, b)| (a - (t as f64).to_radians()).abs() < 1e-9 && (b - (p as f64).to_radians()).abs() < 1e-9).unwrap();
        let (target, mirror) = (idx(-30, -42), idx(30, 42));
        assert_abs_diff_eq!(ideal[target], 1.0);
        assert!(ideal.iter().enumerate().all(|(k, a)| k == target || *a < 1.0));
        assert_abs_diff_eq!(one[target], one[mirror], epsilon = 1e-12);
        assert_abs_diff_eq!(one[target], 1.0, epsilon = 1e-12);
        assert!(two[target] == 1.0 && two[mirror] < 0.9);
        assert!(one[mirror] > ideal[mirror]);
        assert!(matches!(beam_pattern(&quantized_beamformer(&v.0, Resolution::Bits(1)), &[]), Err(CsbError::EmptyGrid)));
    }

    #[test]
    fn rejects_odd_arrays() {
        assert!(ArrayConfig::square(5, Resolution::Bits(1)).is_err());
        assert!(ArrayConfig::new(3, 4, Resolution::Bits(1)).is_err());
        assert!(ArrayConfig::linear(12, Resolution::Bits(1)).is_ok());
        assert!(ArrayConfig::square(4, Resolution::Bits(0)).is_err());
    }

    #[test]
    fn nearest_grid_snaps() {
        let cfg = ArrayConfig::square(16, Resolution::Bits(2)).unwrap();
        assert_eq!(cfg.nearest_grid(0.0, 0.0), GridIndex::new(0, 0));
        let g = GridIndex::new(14, 3);
        let (th, ph) = cfg.grid_angles(g);
        assert_eq!(cfg.nearest_grid(th, ph), g);
        assert_eq!(cfg.signed(g), (-2, 3));
    }

    #[test]
    fn csv_header_and_rows() {
        let cfg = ArrayConfig::square(4, Resolution::Unquantized).unwrap();
        let csv = beam_pattern_csv(&cfg.beam_toward(GridIndex::new(0, 0)), &[-10.0, 0.0], &[0.0, 5.0, 10.0]).unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "theta_deg,phi_deg,normalized_amplitude");
        assert_eq!(lines.len(), 7);
        assert_eq!(lines[4], "0,0,1.000000000000");
    }

    proptest! {
        #[test]
        fn quantization_is_idempotent(re in proptest::collection::vec(-1.0f64..1.0, 16), im in proptest::collection::vec(-1.0f64..1.0, 16), q in 1u32..4) {
            let m = Array2::from_shape_fn((4, 4), |(k, l)| Complex64::new(re[4 * k + l] + 1e-3, im[4 * k + l]));
            let once = quantized_beamformer(&m, Resolution::Bits(q));
            let twice = quantized_beamformer(once.entries(), Resolution::Bits(q));
            prop_assert_eq!(&once, &twice);
            prop_assert!((once.frobenius_norm() - 1.0).abs() < 1e-14);
        }

        #[test]
        fn one_bit_mirror_symmetry(th in -1.5f64..1.5, ph in -1.5f64..1.5, gi in 0usize..8, gj in 0usize..8) {
            let cfg = ArrayConfig::square(8, Resolution::Bits(1)).unwrap();
            let f = cfg.codeword(GridIndex::new(gi, gj));
            let a = beam_gain(&cfg.response(th, ph), &f).unwrap().norm();
            let b = beam_gain(&cfg.response(-th, -ph), &f).unwrap().norm();
            prop_assert!((a - b).abs() < 1e-12);
        }

        #[test]
        fn codewords_have_unit_norm(gi in 0usize..16, gj in 0usize..16, q in 1u32..4) {
            let cfg = ArrayConfig::square(16, Resolution::Bits(q)).unwrap();
            let f = cfg.codeword(GridIndex::new(gi, gj));
            prop_assert!((f.frobenius_norm() - 1.0).abs() < 1e-14);
            let levels = 1u64 << q;
            for z in f.entries().iter() {
                let k = z.arg().rem_euclid(TAU) / (TAU / levels as f64);
                prop_assert!((k - k.round()).abs() < 1e-9);
            }
        }
    }
}
