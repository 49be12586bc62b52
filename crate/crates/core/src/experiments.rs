//! The experiments behind each CLI command. Every function is deterministic
//! given its config and seed and returns named CSV files.

use std::fmt::Write as _;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::airspy::{brute_force_best_trajectory, episode_secrecy_profile, trajectory_csv, AttackProblem, AttackStep, Trajectory};
use crate::array::{array_response_dims, beam_gain, beam_pattern_csv, quantized_beamformer, ArrayConfig, ArrayResponse, Beamformer, GridIndex, Resolution};
use crate::asm::{asm_transmit, AsmConfig};
use crate::channel::{constellation_csv, run_ser_experiment, ser_csv, ConstellationPoint, Defense, LinkSetup, LinkState, SerResult, SerRow, CONSTELLATION_CAP};
use crate::config::{ExperimentConfig, SmiSection};
use crate::csb_defense::{apn_law, circulant_shift, partition_report, shift_phase_factor, smi, ShiftPair};
use crate::error::{CsbError, Result};
use crate::mutual_info::{mixture_channel_mi, psk_mutual_information};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OutputFile {
    pub name: String,
    pub contents: String,
}

impl OutputFile {
    fn new(name: impl Into<String>, contents: String) -> Self {
        Self { name: name.into(), contents }
    }
}

/// `lo, lo+step, …` up to and including `hi` (within rounding).
pub fn angle_range(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    if !(step > 0.0) || hi < lo {
        return Vec::new();
    }
    let n = ((hi - lo) / step + 1e-9).floor() as usize;
    (0..=n).map(|k| lo + step * k as f64).collect()
}

pub fn cmd_beam_pattern(cfg: &ExperimentConfig) -> Result<Vec<OutputFile>> {
    let bp = &cfg.beam_pattern;
    let (rows, cols) = (cfg.scenario.rows, cfg.scenario.cols);
    let v = array_response_dims(bp.target_theta_deg.to_radians(), bp.target_phi_deg.to_radians(), rows, cols);
    let thetas = angle_range(bp.theta_min_deg, bp.theta_max_deg, bp.step_deg);
    let phis = angle_range(bp.phi_min_deg, bp.phi_max_deg, bp.step_deg);
    bp.resolutions
        .iter()
        .map(|&res| {
            ArrayConfig::new(rows, cols, res)?;
            let f = quantized_beamformer(&v.0, res);
            Ok(OutputFile::new(format!("beam_pattern_{}.csv", res.label()), beam_pattern_csv(&f, &thetas, &phis)?))
        })
        .collect()
}

/// Effective gains `⟨V, P_s(F)⟩·conj(c_s(rx))` over every shift `s`: the
/// channel a receiver at `v` sees under CSB compensated for `rx_grid`.
pub fn csb_gain_atoms(array: &ArrayConfig, f: &Beamformer, rx_grid: GridIndex, v: &ArrayResponse) -> Result<Vec<Complex64>> {
    let mut out = Vec::with_capacity(array.num_elements());
    for m in 0..array.rows {
        for n in 0..array.cols {
            let s = ShiftPair::new(m, n);
            out.push(beam_gain(v, &circulant_shift(f, s))? * shift_phase_factor(s, rx_grid, array).conj());
        }
    }
    Ok(out)
}

/// Beamformers and symbol rotations of `count` ASM draws.
pub fn asm_draws(f: &Beamformer, v_rx: &ArrayResponse, c: f64, count: usize, seed: u64) -> Result<Vec<(Beamformer, Complex64)>> {
    let cfg = AsmConfig::new(c)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| asm_transmit(f, Complex64::new(1.0, 0.0), v_rx, &cfg, &mut rng).map(|t| (t.beamformer, t.symbol)))
        .collect()
}

pub fn asm_gain_atoms(draws: &[(Beamformer, Complex64)], v: &ArrayResponse) -> Result<Vec<Complex64>> {
    draws.iter().map(|(b, rot)| Ok(beam_gain(v, b)? * rot)).collect()
}

/// PSK mutual information through a channel whose gain is drawn uniformly
/// from `atoms` per symbol and unknown to the receiver. A single distinct
/// atom reduces to the AWGN quadrature.
pub fn channel_mi(atoms: &[Complex64], rho: f64, m_order: usize, samples: usize, seed: u64) -> f64 {
    let first = atoms[0];
    if atoms.iter().all(|a| (a - first).norm() <= 1e-12 * (1.0 + first.norm())) {
        return psk_mutual_information(rho * first.norm_sqr(), m_order);
    }
    let scaled: Vec<Complex64> = atoms.iter().map(|a| a * rho.sqrt()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    mixture_channel_mi(&scaled, 1.0, m_order, samples, &mut rng)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SmiRow {
    pub eve_theta_deg: f64,
    pub defense: String,
    pub smi_bits: f64,
}

pub fn smi_csv(rows: &[SmiRow]) -> String {
    let mut out = String::from("eve_theta_deg,defense,smi_bits\n");
    for r in rows {
        writeln!(out, "{},{},{}", r.eve_theta_deg, r.defense, r.smi_bits).unwrap();
    }
    out
}

/// SMI of CSB and each ASM fraction for an eavesdropper at every angle of
/// `eve_thetas_deg` on a linear array, plus the closed-form CSB value at
/// the on-grid angles among them.
pub fn smi_at_directions(sec: &SmiSection, resolution: Resolution, seed: u64, eve_thetas_deg: &[f64]) -> Result<Vec<SmiRow>> {
    let array = ArrayConfig::linear(sec.n, resolution)?;
    let rho = 10f64.powf(sec.snr_db / 10.0);
    let m = sec.m_order;
    let rx_theta = sec.rx_theta_deg.to_radians();
    let rx_grid = array.nearest_grid(rx_theta, 0.0);
    let f = array.beam_toward(rx_grid);
    let v_rx = array.response(rx_theta, 0.0);

    let csb_seed = seed;
    let csb_rx = channel_mi(&csb_gain_atoms(&array, &f, rx_grid, &v_rx)?, rho, m, sec.mc_samples, csb_seed);
    let g_rx = beam_gain(&v_rx, &f)?;
    let mut asm = Vec::new();
    for (k, &c) in sec.asm_fractions.iter().enumerate() {
        let draw_seed = seed ^ (0x5eed_0000 + k as u64);
        let draws = asm_draws(&f, &v_rx, c, sec.asm_atoms, draw_seed)?;
        let mi_seed = seed.wrapping_add(1 + k as u64);
        let rx_mi = channel_mi(&asm_gain_atoms(&draws, &v_rx)?, rho, m, sec.mc_samples, mi_seed);
        asm.push((c, draws, mi_seed, rx_mi));
    }

    let mut rows = Vec::new();
    for &deg in eve_thetas_deg {
        let v = array.response(deg.to_radians(), 0.0);
        let eve = channel_mi(&csb_gain_atoms(&array, &f, rx_grid, &v)?, rho, m, sec.mc_samples, csb_seed);
        rows.push(SmiRow { eve_theta_deg: deg, defense: "csb".into(), smi_bits: (csb_rx - eve).max(0.0) });
        for (c, draws, mi_seed, rx_mi) in &asm {
            let e = channel_mi(&asm_gain_atoms(draws, &v)?, rho, m, sec.mc_samples, *mi_seed);
            rows.push(SmiRow { eve_theta_deg: deg, defense: format!("asm-{c}"), smi_bits: (rx_mi - e).max(0.0) });
        }
        let idx = (sec.n as f64 / 2.0) * deg.to_radians().sin();
        if (idx - idx.round()).abs() < 1e-9 {
            let (ri, _) = array.signed(rx_grid);
            let g = (ri - idx.round() as i64).unsigned_abs();
            let g_e = beam_gain(&v, &f)?;
            let value = smi(rho * g_rx.norm_sqr(), rho * g_e.norm_sqr(), m, g, sec.n);
            rows.push(SmiRow { eve_theta_deg: deg, defense: "csb-theory".into(), smi_bits: value });
        }
    }
    Ok(rows)
}

/// Angles of the on-grid directions of an `n`-element linear array, in
/// degrees, ascending.
pub fn on_grid_angles_deg(n: usize) -> Vec<f64> {
    let h = n as i64 / 2;
    (-h..h).map(|i| (i as f64 / h as f64).asin().to_degrees()).collect()
}

pub fn cmd_smi_sweep(cfg: &ExperimentConfig) -> Result<Vec<OutputFile>> {
    let seed = cfg.seed()?;
    let sec = &cfg.smi;
    let mut eves = angle_range(sec.eve_min_deg, sec.eve_max_deg, sec.eve_step_deg);
    eves.extend(on_grid_angles_deg(sec.n).into_iter().filter(|a| (sec.eve_min_deg..=sec.eve_max_deg).contains(a)));
    eves.sort_by(f64::total_cmp);
    eves.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    sec.resolutions
        .iter()
        .map(|&res| Ok(OutputFile::new(format!("smi_sweep_{}.csv", res.label()), smi_csv(&smi_at_directions(sec, res, seed, &eves)?))))
        .collect()
}

/// Planned trajectory and its per-step profile for one resolution.
#[derive(Debug, Clone)]
pub struct AttackRun {
    pub resolution: Resolution,
    pub problem: AttackProblem,
    pub trajectory: Trajectory,
    pub profile: Vec<AttackStep>,
}

/// Same config shrunk to a `G = 5`, `N = 4` instance.
pub fn tiny_config(cfg: &ExperimentConfig) -> ExperimentConfig {
    let mut c = cfg.clone();
    c.attack.grid_g = 5;
    let span = c.scenario.y_end - c.scenario.y_start;
    c.scenario.t_s = span / (3.0 * c.scenario.rx_speed);
    c
}

pub fn run_attack(cfg: &ExperimentConfig, resolution: Resolution) -> Result<AttackRun> {
    let scenario = cfg.scenario.build(resolution)?;
    let constraints = cfg.attack.build(scenario.theta_tilt)?;
    let problem = AttackProblem::new(&scenario, &constraints)?;
    let trajectory = problem.extract_trajectory(&problem.value_iteration())?;
    let profile = episode_secrecy_profile(&problem, &trajectory)?;
    Ok(AttackRun { resolution, problem, trajectory, profile })
}

pub fn secrecy_profile_csv(steps: &[AttackStep]) -> String {
    let mut out = String::from("t_s,secrecy_rate,clamped_secrecy_rate\n");
    for s in steps {
        writeln!(out, "{},{},{}", s.time, s.secrecy_rate, s.secrecy_rate.max(0.0)).unwrap();
    }
    out
}

/// In tiny mode each resolution also gets the exhaustive-search trajectory,
/// which must match the planned one byte for byte.
pub fn cmd_attack(cfg: &ExperimentConfig, tiny: bool) -> Result<Vec<OutputFile>> {
    let cfg = if tiny { tiny_config(cfg) } else { cfg.clone() };
    let mut files = Vec::new();
    for &res in &cfg.attack.resolutions {
        let run = run_attack(&cfg, res)?;
        let label = res.label();
        files.push(OutputFile::new(format!("attack_trajectory_{label}.csv"), trajectory_csv(&run.profile)));
        files.push(OutputFile::new(format!("attack_secrecy_{label}.csv"), secrecy_profile_csv(&run.profile)));
        if tiny {
            let oracle = brute_force_best_trajectory(&run.problem)?;
            let profile = episode_secrecy_profile(&run.problem, &oracle)?;
            files.push(OutputFile::new(format!("attack_trajectory_{label}_oracle.csv"), trajectory_csv(&profile)));
        }
    }
    Ok(files)
}

/// Per-step links of an episode with the eavesdropper on `run`'s
/// trajectory; noise powers are set per SNR point later.
struct EpisodeLink {
    array: ArrayConfig,
    beam: Beamformer,
    rx_grid: GridIndex,
    v_rx: ArrayResponse,
    v_eve: ArrayResponse,
    p_rx: f64,
    p_eve: f64,
    g_rx2: f64,
}

fn episode_links(run: &AttackRun) -> Result<Vec<EpisodeLink>> {
    let scenario = run.problem.scenario().ok_or(CsbError::NoChannel)?;
    let array = scenario.array;
    run.profile
        .iter()
        .zip(run.problem.rx_states())
        .zip(run.problem.beams())
        .map(|((step, rx), beam)| {
            let v_rx = array.response(rx.position.theta, rx.position.phi);
            let g_rx2 = beam_gain(&v_rx, beam)?.norm_sqr();
            Ok(EpisodeLink {
                array,
                beam: beam.clone(),
                rx_grid: rx.grid,
                v_rx,
                v_eve: array.response(step.eve.theta, step.eve.phi),
                p_rx: scenario.received_power(rx.position.r)?,
                p_eve: scenario.received_power(step.eve.r)?,
                g_rx2,
            })
        })
        .collect()
}

impl EpisodeLink {
    /// Setup with `σ²` chosen so the undefended receiver SNR is `snr_db`.
    fn setup(&self, snr_db: f64) -> Result<LinkSetup> {
        let sigma2 = self.p_rx * self.g_rx2 / 10f64.powf(snr_db / 10.0);
        Ok(LinkSetup {
            array: self.array,
            beamformer: self.beam.clone(),
            rx_grid: self.rx_grid,
            v_rx: self.v_rx.clone(),
            v_eve: self.v_eve.clone(),
            rx: LinkState::new(self.p_rx, 0.0, sigma2)?,
            eve: LinkState::new(self.p_eve, 0.0, sigma2)?,
        })
    }
}

pub fn ser_defenses(fractions: &[f64]) -> Result<Vec<Defense>> {
    let mut d = vec![Defense::None, Defense::Csb];
    for &c in fractions {
        d.push(Defense::Asm(AsmConfig::new(c)?));
    }
    Ok(d)
}

/// SER over an episode at one undefended receiver SNR, with the
/// eavesdropper on the planned trajectory.
pub fn episode_ser(run: &AttackRun, defense: Defense, m_order: usize, snr_db: f64, num_symbols: usize, seed: u64, capture: bool) -> Result<(SerResult, Vec<ConstellationPoint>)> {
    let links = episode_links(run)?;
    let per_step = num_symbols.div_ceil(links.len()).max(1);
    let mut total = SerResult::default();
    let mut points = Vec::new();
    for (t, link) in links.iter().enumerate() {
        let setup = link.setup(snr_db)?;
        let (r, p) = run_ser_experiment(&setup, defense, m_order, per_step, seed.wrapping_add(t as u64), capture && points.len() < CONSTELLATION_CAP)?;
        total = total.merge(r);
        if let Some(p) = p {
            points.extend(p.into_iter().take(CONSTELLATION_CAP - points.len()));
        }
    }
    Ok((total, points))
}

/// Mean receiver SNR in dB over the episode under `defense`, with noise
/// set so the undefended receiver sits at `snr_db`.
pub fn episode_rx_snr_db(run: &AttackRun, defense: Defense, snr_db: f64, draws: usize, seed: u64) -> Result<f64> {
    let links = episode_links(run)?;
    let mut acc = 0.0;
    for (t, link) in links.iter().enumerate() {
        let mean_gain2 = match defense {
            Defense::None => link.g_rx2,
            Defense::Csb => {
                let atoms = csb_gain_atoms(&link.array, &link.beam, link.rx_grid, &link.v_rx)?;
                atoms.iter().map(|a| a.norm_sqr()).sum::<f64>() / atoms.len() as f64
            }
            Defense::Asm(cfg) => {
                let d = asm_draws(&link.beam, &link.v_rx, cfg.c, draws, seed.wrapping_add(t as u64))?;
                asm_gain_atoms(&d, &link.v_rx)?.iter().map(|a| a.norm_sqr()).sum::<f64>() / draws as f64
            }
        };
        acc += if link.g_rx2 > 0.0 { mean_gain2 / link.g_rx2 } else { 0.0 };
    }
    Ok(snr_db + 10.0 * (acc / links.len() as f64).log10())
}

pub fn cmd_ser(cfg: &ExperimentConfig) -> Result<Vec<OutputFile>> {
    let seed = cfg.seed()?;
    let sec = &cfg.ser;
    let run = run_attack(cfg, sec.resolution)?;
    let defenses = ser_defenses(&sec.asm_fractions)?;
    let top = sec.snr_db.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut rows = Vec::new();
    let mut files = Vec::new();
    for (k, &snr) in sec.snr_db.iter().enumerate() {
        let point_seed = seed.wrapping_add((k as u64) << 20);
        for &d in &defenses {
            let capture = sec.capture_constellation && snr == top;
            let (r, pts) = episode_ser(&run, d, sec.m_order, snr, sec.num_symbols, point_seed, capture)?;
            rows.push(SerRow { snr_db: snr, defense: d.label(), result: r });
            if capture {
                files.push(OutputFile::new(format!("constellation_{}.csv", d.label()), constellation_csv(&pts)));
            }
        }
    }
    files.insert(0, OutputFile::new("ser_sweep.csv", ser_csv(&rows)));
    let mut table = String::from("defense,c,rx_snr_db\n");
    for &d in &defenses {
        let c = match d {
            Defense::Asm(a) => a.c,
            _ => 1.0,
        };
        let snr = episode_rx_snr_db(&run, d, sec.table_snr_db, 256, seed)?;
        writeln!(table, "{},{},{}", d.label(), c, snr).unwrap();
    }
    files.push(OutputFile::new("ser_rx_snr_vs_c.csv", table));
    Ok(files)
}

pub fn cmd_apn_dist(cfg: &ExperimentConfig) -> Result<Vec<OutputFile>> {
    let sec = &cfg.apn;
    let mut summary = String::from("delta_i,delta_j,g,support_size,probability,class_size,num_classes,eve_bits\n");
    let mut files = Vec::new();
    for (&di, &dj) in sec.delta_i.iter().zip(&sec.delta_j) {
        let law = apn_law(di, dj, sec.n_t);
        let part = partition_report(sec.m_order, law.g, sec.n_t)?;
        writeln!(
            summary,
            "{di},{dj},{},{},{},{},{},{}",
            law.g,
            law.support_size(),
            law.probability(),
            part.class_size,
            part.num_classes,
            part.bits()
        )
        .unwrap();
        files.push(OutputFile::new(format!("apn_di{di}_dj{dj}.csv"), law.to_csv()));
        files.push(OutputFile::new(format!("partition_di{di}_dj{dj}.csv"), part.to_csv()));
    }
    files.insert(0, OutputFile::new("apn_summary.csv", summary));
    Ok(files)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn base() -> ExperimentConfig {
        ExperimentConfig { seed: Some(11), ..Default::default() }
    }

    #[test]
    fn ranges_include_endpoints() {
        assert_eq!(angle_range(-1.0, 1.0, 0.5), vec![-1.0, -0.5, 0.0, 0.5, 1.0]);
        assert_eq!(angle_range(-90.0, 90.0, 1.0).len(), 181);
        assert!(angle_range(1.0, 0.0, 1.0).is_empty());
    }

    #[test]
    fn boresight_pattern_has_one_peak() {
        let mut c = base();
        c.scenario.rows = 4;
        c.scenario.cols = 4;
        c.beam_pattern.target_theta_deg = 0.0;
        c.beam_pattern.target_phi_deg = 0.0;
        c.beam_pattern.resolutions = vec![Resolution::Unquantized];
        c.beam_pattern.step_deg = 5.0;
        let files = cmd_beam_pattern(&c).unwrap();
        assert_eq!(files[0].name, "beam_pattern_qinf.csv");
        let peaks: Vec<&str> = files[0].contents.lines().skip(1).filter(|l| l.ends_with(",1.000000000000")).collect();
        assert_eq!(peaks, vec!["0,0,1.000000000000"]);
    }

    #[test]
    fn csb_atoms_on_grid_are_constant() {
        let array = ArrayConfig::linear(16, Resolution::Bits(1)).unwrap();
        let rx = GridIndex::new(3, 0);
        let f = array.beam_toward(rx);
        let atoms = csb_gain_atoms(&array, &f, rx, &array.grid_response(rx)).unwrap();
        assert_eq!(atoms.len(), 16);
        assert!(atoms.iter().all(|a| (a - atoms[0]).norm() < 1e-12));
    }

    #[test]
    fn smi_examples() {
        let sec = SmiSection { n: 16, rx_theta_deg: (3.0f64 / 8.0).asin().to_degrees(), mc_samples: 4000, asm_atoms: 32, ..Default::default() };
        let rx = sec.rx_theta_deg;
        let marker = (-5.0f64 / 8.0).asin().to_degrees();
        let rows = smi_at_directions(&sec, Resolution::Bits(2), 5, &[rx, marker]).unwrap();
        for r in rows.iter().filter(|r| r.eve_theta_deg == rx) {
            assert_eq!(r.smi_bits, 0.0, "{r:?}");
        }
        let theory = rows.iter().find(|r| r.eve_theta_deg == marker && r.defense == "csb-theory").unwrap();
        let rx_mi = psk_mutual_information(10.0 * 16.0, 4);
        // the eavesdropper is left with BPSK: at most one bit
        assert!(theory.smi_bits >= rx_mi - 1.0 - 1e-3 && theory.smi_bits <= rx_mi, "{theory:?}");
        assert_abs_diff_eq!(marker, -38.68, epsilon = 0.01);
    }

    #[test]
    fn tiny_attack_matches_oracle_file() {
        let files = cmd_attack(&base(), true).unwrap();
        for label in ["q1", "q2"] {
            let get = |n: String| files.iter().find(|f| f.name == n).unwrap().contents.clone();
            let dp = get(format!("attack_trajectory_{label}.csv"));
            assert_eq!(dp, get(format!("attack_trajectory_{label}_oracle.csv")));
            assert_eq!(dp.lines().count(), 5);
        }
    }

    #[test]
    fn apn_summary_rows() {
        let files = cmd_apn_dist(&base()).unwrap();
        let lines: Vec<&str> = files[0].contents.lines().collect();
        assert_eq!(lines[1], "1,0,1,16,0.0625,4,1,0");
        assert_eq!(lines[4], "8,0,8,2,0.5,2,2,1");
        assert_eq!(lines[5], "0,0,0,1,1,1,4,2");
        assert_eq!(files.len(), 1 + 2 * 5);
    }

    #[test]
    fn rx_snr_table_orders_asm_by_fraction() {
        let mut c = tiny_config(&base());
        c.scenario.y_start = -4.0;
        c.scenario.y_end = 4.0;
        let c = tiny_config(&c);
        let run = run_attack(&c, Resolution::Bits(2)).unwrap();
        let none = episode_rx_snr_db(&run, Defense::None, 10.0, 64, 1).unwrap();
        assert_abs_diff_eq!(none, 10.0, epsilon = 1e-12);
        let mut prev = f64::NEG_INFINITY;
        for f in [0.3, 0.5, 0.7, 0.9] {
            let s = episode_rx_snr_db(&run, Defense::Asm(AsmConfig::new(f).unwrap()), 10.0, 256, 1).unwrap();
            assert!(s > prev && s < none);
            prev = s;
        }
    }
}
