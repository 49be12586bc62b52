//! Experiment configuration: TOML with one flat table per command.

use serde::{Deserialize, Serialize};

use crate::airspy::{AttackConstraints, Scenario};
use crate::array::{ArrayConfig, Resolution};
use crate::error::{CsbError, Result};
use crate::geometry::UavPlaneSpec;

impl std::str::FromStr for Resolution {
    type Err = CsbError;

    /// `"inf"` / `"qinf"` or a bit count such as `"2"` / `"q2"`.
    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim().trim_start_matches('q');
        if t == "inf" {
            return Ok(Resolution::Unquantized);
        }
        t.parse::<u32>()
            .ok()
            .filter(|b| (1..=16).contains(b))
            .map(Resolution::Bits)
            .ok_or_else(|| CsbError::InvalidParameter(format!("resolution {s:?}")))
    }
}

impl std::fmt::Display for Resolution {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Resolution::Bits(b) => write!(f, "{b}"),
            Resolution::Unquantized => f.write_str("inf"),
        }
    }
}

mod resolution_list {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &[Resolution], s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_seq(v.iter().map(|r| r.to_string()))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<Resolution>, D::Error> {
        let raw = Vec::<String>::deserialize(d)?;
        raw.iter().map(|s| s.parse().map_err(serde::de::Error::custom)).collect()
    }
}

mod resolution_one {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &Resolution, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&v.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Resolution, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

/// TOML integers are signed; seeds above `i64::MAX` are written as strings.
mod seed_repr {
    use serde::{Deserialize, Deserializer, Serializer};

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        Int(i64),
        Text(String),
    }

    pub fn serialize<S: Serializer>(v: &Option<u64>, s: S) -> Result<S::Ok, S::Error> {
        match v {
            Some(x) if *x <= i64::MAX as u64 => s.serialize_i64(*x as i64),
            Some(x) => s.serialize_str(&x.to_string()),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<u64>, D::Error> {
        match Option::<Raw>::deserialize(d)? {
            None => Ok(None),
            Some(Raw::Int(i)) => u64::try_from(i).map(Some).map_err(|_| serde::de::Error::custom("seed must be >= 0")),
            Some(Raw::Text(t)) => t.parse().map(Some).map_err(serde::de::Error::custom),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioSection {
    pub rows: usize,
    pub cols: usize,
    pub theta_tilt_deg: f64,
    pub h: f64,
    pub lane_x: f64,
    pub rx_speed: f64,
    pub y_start: f64,
    pub y_end: f64,
    pub t_s: f64,
    pub sigma2: f64,
    pub p0: f64,
    pub r0: f64,
    pub path_loss_exponent: f64,
}

/// Degrees rounded to 1e-9 so defaults print as written.
fn clean_degrees(rad: f64) -> f64 {
    (rad.to_degrees() * 1e9).round() / 1e9
}

impl Default for ScenarioSection {
    fn default() -> Self {
        let s = Scenario::reference(Resolution::Bits(1));
        Self {
            rows: s.array.rows,
            cols: s.array.cols,
            theta_tilt_deg: clean_degrees(s.theta_tilt),
            h: s.h,
            lane_x: s.lane_x,
            rx_speed: s.rx_speed,
            y_start: s.y_start,
            y_end: s.y_end,
            t_s: s.t_s,
            sigma2: s.sigma2,
            p0: s.p0,
            r0: s.r0,
            path_loss_exponent: s.path_loss_exponent,
        }
    }
}

impl ScenarioSection {
    pub fn build(&self, resolution: Resolution) -> Result<Scenario> {
        let s = Scenario {
            array: ArrayConfig::new(self.rows, self.cols, resolution)?,
            theta_tilt: self.theta_tilt_deg.to_radians(),
            h: self.h,
            lane_x: self.lane_x,
            rx_speed: self.rx_speed,
            y_start: self.y_start,
            y_end: self.y_end,
            t_s: self.t_s,
            sigma2: self.sigma2,
            p0: self.p0,
            r0: self.r0,
            path_loss_exponent: self.path_loss_exponent,
        };
        s.validate()?;
        Ok(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AttackSection {
    pub plane_d: f64,
    pub beta_deg: f64,
    pub v_max: f64,
    pub epsilon_deg: f64,
    pub grid_g: usize,
    #[serde(with = "resolution_list")]
    pub resolutions: Vec<Resolution>,
}

impl Default for AttackSection {
    fn default() -> Self {
        let c = AttackConstraints::reference(0.0);
        Self {
            plane_d: c.uav_plane.d,
            beta_deg: clean_degrees(c.uav_plane.beta),
            v_max: c.v_max,
            epsilon_deg: clean_degrees(c.epsilon),
            grid_g: c.grid_g,
            resolutions: vec![Resolution::Bits(1), Resolution::Bits(2)],
        }
    }
}

impl AttackSection {
    pub fn build(&self, theta_tilt: f64) -> Result<AttackConstraints> {
        let c = AttackConstraints {
            uav_plane: UavPlaneSpec::new(self.plane_d, self.beta_deg.to_radians(), theta_tilt)?,
            v_max: self.v_max,
            epsilon: self.epsilon_deg.to_radians(),
            grid_g: self.grid_g,
        };
        c.validate()?;
        Ok(c)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BeamPatternSection {
    pub target_theta_deg: f64,
    pub target_phi_deg: f64,
    pub theta_min_deg: f64,
    pub theta_max_deg: f64,
    pub phi_min_deg: f64,
    pub phi_max_deg: f64,
    pub step_deg: f64,
    #[serde(with = "resolution_list")]
    pub resolutions: Vec<Resolution>,
}

impl Default for BeamPatternSection {
    fn default() -> Self {
        Self {
            target_theta_deg: -30.0,
            target_phi_deg: -42.0,
            theta_min_deg: -90.0,
            theta_max_deg: 90.0,
            phi_min_deg: -90.0,
            phi_max_deg: 90.0,
            step_deg: 1.0,
            resolutions: vec![Resolution::Unquantized, Resolution::Bits(1), Resolution::Bits(2)],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SmiSection {
    /// Elements of the linear array.
    pub n: usize,
    pub rx_theta_deg: f64,
    pub eve_min_deg: f64,
    pub eve_max_deg: f64,
    pub eve_step_deg: f64,
    pub m_order: usize,
    /// `P/σ²` before beamforming, shared by receiver and eavesdropper.
    pub snr_db: f64,
    pub asm_fractions: Vec<f64>,
    /// Random subsets standing in for the ASM gain distribution.
    pub asm_atoms: usize,
    pub mc_samples: usize,
    #[serde(with = "resolution_list")]
    pub resolutions: Vec<Resolution>,
}

impl Default for SmiSection {
    fn default() -> Self {
        Self {
            n: 16,
            rx_theta_deg: 25.0,
            eve_min_deg: -90.0,
            eve_max_deg: 90.0,
            eve_step_deg: 1.0,
            m_order: 4,
            snr_db: 10.0,
            asm_fractions: vec![0.3, 0.5, 0.7],
            asm_atoms: 64,
            mc_samples: 4000,
            resolutions: vec![Resolution::Bits(1), Resolution::Bits(2)],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SerSection {
    pub m_order: usize,
    pub snr_db: Vec<f64>,
    /// Symbols per SNR point, spread evenly over the episode.
    pub num_symbols: usize,
    pub asm_fractions: Vec<f64>,
    #[serde(with = "resolution_one")]
    pub resolution: Resolution,
    /// Undefended receiver SNR at which the SNR-vs-c table is reported.
    pub table_snr_db: f64,
    pub capture_constellation: bool,
}

impl Default for SerSection {
    fn default() -> Self {
        Self {
            m_order: 4,
            snr_db: (0..=20).map(|k| -10.0 + 2.0 * k as f64).collect(),
            num_symbols: 41_000,
            asm_fractions: vec![0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9],
            resolution: Resolution::Bits(2),
            table_snr_db: 10.0,
            capture_constellation: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ApnSection {
    pub n_t: usize,
    pub m_order: usize,
    /// Offsets as paired lists: `(delta_i[k], delta_j[k])`.
    pub delta_i: Vec<i64>,
    pub delta_j: Vec<i64>,
}

impl Default for ApnSection {
    fn default() -> Self {
        Self { n_t: 16, m_order: 4, delta_i: vec![1, 2, 4, 8, 0], delta_j: vec![0, 0, 0, 0, 0] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    #[serde(with = "seed_repr", skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<String>,
    pub scenario: ScenarioSection,
    pub attack: AttackSection,
    pub beam_pattern: BeamPatternSection,
    pub smi: SmiSection,
    pub ser: SerSection,
    pub apn: ApnSection,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| CsbError::InvalidParameter(format!("config: {e}")))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is always representable")
    }

    pub fn seed(&self) -> Result<u64> {
        self.seed.ok_or_else(|| CsbError::InvalidParameter("a seed is required (config `seed` or --seed)".into()))
    }

    /// Checks every section so commands fail before doing any work.
    pub fn validate(&self) -> Result<()> {
        self.seed()?;
        let s = self.scenario.build(Resolution::Bits(1))?;
        self.attack.build(s.theta_tilt)?;
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(CsbError::InvalidParameter(format!("{name} = {v} must be positive")))
            }
        };
        positive("beam_pattern.step_deg", self.beam_pattern.step_deg)?;
        positive("smi.eve_step_deg", self.smi.eve_step_deg)?;
        ArrayConfig::linear(self.smi.n, Resolution::Unquantized)?;
        for (name, m) in [("smi.m_order", self.smi.m_order), ("ser.m_order", self.ser.m_order), ("apn.m_order", self.apn.m_order)] {
            if m < 2 || !m.is_power_of_two() {
                return Err(CsbError::InvalidParameter(format!("{name} = {m} must be a power of two >= 2")));
            }
        }
        for &c in self.smi.asm_fractions.iter().chain(&self.ser.asm_fractions) {
            crate::asm::AsmConfig::new(c)?;
        }
        if self.smi.asm_atoms == 0 || self.smi.mc_samples == 0 || self.ser.num_symbols == 0 {
            return Err(CsbError::InvalidParameter("sample counts must be >= 1".into()));
        }
        if self.apn.delta_i.len() != self.apn.delta_j.len() || self.apn.n_t < 2 {
            return Err(CsbError::InvalidParameter("apn.delta_i and apn.delta_j must pair up; n_t >= 2".into()));
        }
        Ok(())
    }
}
