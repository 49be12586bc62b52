//! Mutual information of PSK signalling over AWGN and over channels whose
//! gain is drawn from a finite, equiprobable set unknown to the receiver.

use std::f64::consts::{LN_2, PI, TAU};
use std::sync::OnceLock;

use gauss_quad::hermite::GaussHermite;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Normal};

/// Gauss–Hermite degrees tried in turn; the estimate is accepted once two
/// consecutive degrees agree to [`MI_TOLERANCE`].
const GH_DEGREES: [usize; 5] = [10, 20, 40, 80, 160];
pub const MI_TOLERANCE: f64 = 1e-4;

fn gh_rule(level: usize) -> &'static [(f64, f64)] {
    static RULES: OnceLock<Vec<Vec<(f64, f64)>>> = OnceLock::new();
    &RULES.get_or_init(|| {
        GH_DEGREES
            .iter()
            .map(|&n| GaussHermite::new(n).expect("degree >= 2").as_node_weight_pairs().to_vec())
            .collect()
    })[level]
}

pub fn psk_symbol(k: usize, m_order: usize) -> Complex64 {
    Complex64::from_polar(1.0, TAU * k as f64 / m_order as f64)
}

fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + xs.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}

fn psk_mi_with_rule(rule: &[(f64, f64)], sigma: f64, m_order: usize) -> f64 {
    // By rotational symmetry only symbol 0 needs averaging.
    let x0 = psk_symbol(0, m_order);
    let diffs: Vec<Complex64> = (0..m_order).map(|j| x0 - psk_symbol(j, m_order)).collect();
    let mut expo = vec![0.0; m_order];
    let mut acc = 0.0;
    for &(ta, wa) in rule {
        for &(tb, wb) in rule {
            for (e, d) in expo.iter_mut().zip(&diffs) {
                *e = -(d.norm_sqr() / (sigma * sigma) + 2.0 * (d.re * ta + d.im * tb) / sigma);
            }
            acc += wa * wb * log_sum_exp(&expo);
        }
    }
    (m_order as f64).log2() - acc / PI / LN_2
}

/// `I(ρ, M)` in bits per symbol for equiprobable unit-energy M-PSK over
/// complex AWGN at linear SNR `rho`, by 2D Gauss–Hermite quadrature over
/// the noise with node count doubled until it converges to 1e-4 bits.
pub fn psk_mutual_information(rho: f64, m_order: usize) -> f64 {
    if m_order <= 1 || rho <= 0.0 {
        return 0.0;
    }
    let sigma = (1.0 / rho).sqrt();
    let mut prev = psk_mi_with_rule(gh_rule(0), sigma, m_order);
    for level in 1..GH_DEGREES.len() {
        let cur = psk_mi_with_rule(gh_rule(level), sigma, m_order);
        if (cur - prev).abs() < MI_TOLERANCE {
            return cur.clamp(0.0, (m_order as f64).log2());
        }
        prev = cur;
    }
    prev.clamp(0.0, (m_order as f64).log2())
}

/// Monte-Carlo mutual information of `y = h·x + n`, `n ~ CN(0, noise_var)`,
/// with `x` equiprobable M-PSK and `h` drawn uniformly from `gains` on
/// every symbol, unknown to the receiver (which knows the set).
///
/// Symbols and gains are cycled deterministically; only the noise is random.
pub fn mixture_channel_mi<R: Rng + ?Sized>(
    gains: &[Complex64],
    noise_var: f64,
    m_order: usize,
    samples: usize,
    rng: &mut R,
) -> f64 {
    if m_order <= 1 || samples == 0 || gains.iter().all(|g| g.norm_sqr() == 0.0) {
        return 0.0;
    }
    let normal = Normal::new(0.0, (noise_var / 2.0).sqrt()).expect("finite noise variance");
    let symbols: Vec<Complex64> = (0..m_order).map(|k| psk_symbol(k, m_order)).collect();
    let mut terms = vec![0.0; gains.len()];
    let mut per_symbol = vec![0.0; m_order];
    let mut acc = 0.0;
    for s in 0..samples {
        let xi = s % m_order;
        let h = gains[(s / m_order) % gains.len()];
        let n = Complex64::new(normal.sample(rng), normal.sample(rng));
        let y = h * symbols[xi] + n;
        for (slot, x) in per_symbol.iter_mut().zip(&symbols) {
            for (t, g) in terms.iter_mut().zip(gains) {
                *t = -(y - g * x).norm_sqr() / noise_var;
            }
            *slot = log_sum_exp(&terms);
        }
        let marginal = log_sum_exp(&per_symbol) - (m_order as f64).ln();
        acc += per_symbol[xi] - marginal;
    }
    (acc / samples as f64 / LN_2).max(0.0)
}
