//! Run configuration, presets and hashing.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::grid::GridConfig;
use crate::propagator::{time_axis, Precision};
use crate::units::{BarrierSpec, PacketSpec, WidthConvention};

/// Source distribution for first-click statistics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    #[default]
    Exact,
    Sda,
    Frozen,
    Photon,
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Source::Exact => "exact",
            Source::Sda => "sda",
            Source::Frozen => "frozen",
            Source::Photon => "photon",
        })
    }
}

impl FromStr for Source {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(Source::Exact),
            "sda" => Ok(Source::Sda),
            "frozen" => Ok(Source::Frozen),
            "photon" => Ok(Source::Photon),
            _ => Err(Error::config("source", format!("unknown source `{s}`"))),
        }
    }
}

/// Flat run configuration. Lengths in ƛ, times in ƛ/c, energies in mc².
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub velocity: f64,
    pub packet_width: f64,
    #[serde(default)]
    pub width_convention: WidthConvention,
    /// Distance from the packet centre to the barrier entrance.
    pub start_offset: f64,
    pub barrier_height: f64,
    pub barrier_width: f64,
    pub n_points: usize,
    pub window_sigmas: f64,
    pub refine_ratio: f64,
    pub refine_q: f64,
    pub t_start: f64,
    pub t_end: f64,
    pub t_step: f64,
    pub n_particles: f64,
    pub precision: Precision,
    pub seed: u64,
    pub out_dir: String,
    pub formats: Vec<String>,
    pub source: Source,
    pub mc_trials: usize,
    /// Fraction of δt_1st added to t_1st before silence reads as a 0.
    pub quiet_fraction: f64,
    pub taumap_re: [f64; 2],
    pub taumap_im: [f64; 2],
    pub taumap_resolution: [usize; 2],
}

/// Keys a config file must set; everything else falls back to the
/// bottom-panel preset.
const REQUIRED: [&str; 5] = [
    "velocity",
    "packet_width",
    "start_offset",
    "barrier_height",
    "barrier_width",
];

pub const PRESET_NAMES: [&str; 2] = ["fig1-top", "fig1-bottom"];

impl RunConfig {
    pub fn fig1_bottom() -> Self {
        Self {
            velocity: 0.99,
            packet_width: 6.0,
            width_convention: WidthConvention::DensityStd,
            start_offset: 120.0,
            barrier_height: 6.52,
            barrier_width: 8.0,
            n_points: 1_000_000,
            window_sigmas: 10.0,
            refine_ratio: 30.0,
            refine_q: 0.2,
            t_start: 0.0,
            t_end: 400.0,
            t_step: 0.5,
            n_particles: 1e12,
            precision: Precision::Extended,
            seed: 1,
            out_dir: "out".into(),
            formats: vec!["csv".into(), "svg".into()],
            source: Source::Exact,
            mc_trials: 0,
            quiet_fraction: 0.25,
            taumap_re: [6.6, 7.6],
            taumap_im: [-1.2, 1.8],
            taumap_resolution: [201, 181],
        }
    }

    pub fn fig1_top() -> Self {
        Self {
            packet_width: 10.0,
            barrier_height: 7.5,
            barrier_width: 10.0,
            n_points: 100_000,
            ..Self::fig1_bottom()
        }
    }

    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "fig1-top" => Ok(Self::fig1_top()),
            "fig1-bottom" => Ok(Self::fig1_bottom()),
            _ => Err(Error::config(
                "preset",
                format!("unknown preset `{name}` (expected one of {PRESET_NAMES:?})"),
            )),
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let table: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| Error::config("config", e.to_string()))?;
        for key in REQUIRED {
            if !table.contains_key(key) {
                return Err(Error::config(key, "missing required key"));
            }
        }
        let mut merged = toml::Table::try_from(Self::fig1_bottom())
            .map_err(|e| Error::config("config", e.to_string()))?;
        for (k, v) in table {
            if !merged.contains_key(&k) {
                return Err(Error::config(&k, "unknown key"));
            }
            merged.insert(k, v);
        }
        let cfg: Self = merged
            .try_into()
            .map_err(|e: toml::de::Error| Error::config("config", e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// SHA-256 of the canonical serialization, hex encoded.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.to_toml_string().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn validate(&self) -> Result<()> {
        let check = |ok: bool, field: &str, msg: &str| {
            if ok {
                Ok(())
            } else {
                Err(Error::config(field, msg))
            }
        };
        check(
            self.velocity > 0.0 && self.velocity < 1.0,
            "velocity",
            "must lie in (0, 1)",
        )?;
        check(self.packet_width > 0.0, "packet_width", "must be positive")?;
        check(self.start_offset > 0.0, "start_offset", "must be positive")?;
        check(
            self.barrier_height.is_finite() && self.barrier_height >= 0.0,
            "barrier_height",
            "must be finite and non-negative",
        )?;
        check(
            self.barrier_width.is_finite() && self.barrier_width >= 0.0,
            "barrier_width",
            "must be finite and non-negative",
        )?;
        check(self.n_points >= 1000, "n_points", "must be at least 1000")?;
        check(
            self.window_sigmas > 0.0,
            "window_sigmas",
            "must be positive",
        )?;
        check(
            self.refine_ratio >= 1.0,
            "refine_ratio",
            "must be at least 1",
        )?;
        check(
            self.refine_q > 0.0 && self.refine_q < 1.0,
            "refine_q",
            "must lie in (0, 1)",
        )?;
        check(self.t_step > 0.0, "t_step", "must be positive")?;
        check(self.t_end > self.t_start, "t_end", "must exceed t_start")?;
        check(
            self.n_particles >= 1.0 && self.n_particles.is_finite(),
            "n_particles",
            "must be a finite number ≥ 1",
        )?;
        check(
            self.seed <= i64::MAX as u64,
            "seed",
            "must fit a TOML integer (≤ 2^63 - 1)",
        )?;
        check(
            self.mc_trials == 0 || self.mc_trials >= 10_000,
            "mc_trials",
            "must be 0 or at least 10000",
        )?;
        check(
            self.quiet_fraction >= 0.0,
            "quiet_fraction",
            "must be non-negative",
        )?;
        check(
            self.taumap_re[0] > 0.0 && self.taumap_re[1] > self.taumap_re[0],
            "taumap_re",
            "must be an increasing range with Re p > 0",
        )?;
        check(
            self.taumap_im[1] > self.taumap_im[0],
            "taumap_im",
            "must be increasing",
        )?;
        check(
            self.taumap_resolution.iter().all(|&n| n >= 2),
            "taumap_resolution",
            "need at least 2 samples per axis",
        )?;
        for f in &self.formats {
            check(
                f == "csv" || f == "svg",
                "formats",
                "entries must be `csv` or `svg`",
            )?;
        }
        Ok(())
    }

    pub fn packet(&self) -> Result<PacketSpec> {
        PacketSpec::from_velocity(
            self.velocity,
            self.packet_width,
            -self.start_offset,
            self.width_convention,
        )
    }

    pub fn barrier(&self) -> Result<BarrierSpec> {
        BarrierSpec::new(self.barrier_height, 0.0, self.barrier_width)
    }

    pub fn grid(&self) -> GridConfig {
        GridConfig {
            n_points: self.n_points,
            window_sigmas: self.window_sigmas,
            refine_ratio: self.refine_ratio,
            refine_q: self.refine_q,
        }
    }

    pub fn times(&self) -> Vec<f64> {
        time_axis(self.t_start, self.t_end, self.t_step)
    }

    pub fn wants(&self, format: &str) -> bool {
        self.formats.iter().any(|f| f == format)
    }
}
