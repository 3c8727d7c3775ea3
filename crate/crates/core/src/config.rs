//! Flat `key = value` configuration.
//!
//! Lengths, powers and times may carry a unit suffix (`10 um`, `100 mW`,
//! `10 us`); everything else is bare SI.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::concentrators::{CpwGeometry, GridSpec, LoopGeometry};
use crate::model::{
    beta_from_protocol, BeamGeometry, DetectorModel, NoiseKind, NoiseModel, NvEnsemble, Optics, Protocol,
    ProtocolKind,
};
use crate::probe::ProbeRegion;
use crate::scaling::{GeometryConstants, ScalingGeometry};
use crate::{NvError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Dim {
    Length,
    Power,
    Time,
    Plain,
}

const KEYS: [(&str, Dim); 28] = [
    ("protocol.kind", Dim::Plain),
    ("protocol.beta", Dim::Plain),
    ("protocol.cmax", Dim::Plain),
    ("protocol.tau", Dim::Time),
    ("noise.kappa", Dim::Plain),
    ("noise.xi", Dim::Plain),
    ("nv.rho", Dim::Plain),
    ("nv.sigma", Dim::Plain),
    ("optics.p_laser", Dim::Power),
    ("optics.i_sat", Dim::Plain),
    ("optics.beam", Dim::Plain),
    ("cpw.w", Dim::Length),
    ("cpw.z", Dim::Plain),
    ("cpw.l", Dim::Length),
    ("cpw.standoff", Dim::Length),
    ("loop.r", Dim::Length),
    ("loop.z", Dim::Plain),
    ("loop.wire_ratio", Dim::Plain),
    ("probe.c1", Dim::Plain),
    ("probe.c2", Dim::Plain),
    ("probe.t_fixed", Dim::Length),
    ("grid.nx", Dim::Plain),
    ("grid.nz", Dim::Plain),
    ("grid.extent", Dim::Plain),
    ("sweep.min", Dim::Length),
    ("sweep.max", Dim::Length),
    ("sweep.points", Dim::Plain),
    ("out.dir", Dim::Plain),
];

/// Keys without a default.
pub const REQUIRED_KEYS: [&str; 13] = [
    "protocol.kind",
    "noise.kappa",
    "noise.xi",
    "nv.rho",
    "nv.sigma",
    "optics.p_laser",
    "optics.i_sat",
    "optics.beam",
    "cpw.w",
    "cpw.z",
    "cpw.l",
    "loop.r",
    "loop.z",
];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Config {
    pub protocol: ProtocolKind,
    /// Field-to-contrast ratio, 1/T. Takes precedence over `cmax`/`tau`.
    pub beta: Option<f64>,
    pub cmax: Option<f64>,
    /// s
    pub tau: Option<f64>,
    pub noise: NoiseKind,
    pub xi: f64,
    /// 1/m^3
    pub rho_nv: f64,
    /// 1/s
    pub sigma_nv: f64,
    /// W
    pub p_laser: f64,
    /// W/m^2
    pub i_sat: f64,
    pub beam: BeamGeometry,
    pub cpw_w: f64,
    pub cpw_z: f64,
    pub cpw_l: f64,
    pub cpw_standoff: f64,
    pub loop_r: f64,
    pub loop_z: f64,
    pub loop_wire_ratio: f64,
    pub c1: f64,
    pub c2: f64,
    /// Fixed diamond thickness for the loop, m. Overrides `c2` when set.
    pub t_fixed: Option<f64>,
    pub grid: GridSpec,
    pub sweep_min: f64,
    pub sweep_max: f64,
    pub sweep_points: usize,
    pub out_dir: String,
}

fn cfg_err(line: usize, key: &str, message: impl Into<String>) -> NvError {
    NvError::Config {
        line,
        key: key.to_string(),
        message: message.into(),
    }
}

/// Divisor taking a suffixed value to SI. Dividing by an exact power of ten
/// keeps `10 um` equal to the literal `1e-5`.
fn unit_divisor(dim: Dim, unit: &str) -> Option<f64> {
    let f = match (dim, unit) {
        (_, "") => 1.0,
        (Dim::Length, "m") | (Dim::Power, "W") | (Dim::Time, "s") => 1.0,
        (Dim::Length, "mm") | (Dim::Power, "mW") | (Dim::Time, "ms") => 1e3,
        (Dim::Length, "um") | (Dim::Power, "uW") | (Dim::Time, "us") => 1e6,
        (Dim::Length, "nm") | (Dim::Time, "ns") => 1e9,
        _ => return None,
    };
    Some(f)
}

fn parse_number(line: usize, key: &str, dim: Dim, raw: &str) -> Result<f64> {
    let split = raw
        .find(|c: char| c.is_ascii_alphabetic() && c != 'e' && c != 'E')
        .unwrap_or(raw.len());
    let (num, unit) = raw.split_at(split);
    let num = num.trim();
    let unit = unit.trim();
    let value: f64 = num
        .parse()
        .map_err(|_| cfg_err(line, key, format!("malformed number {raw:?}")))?;
    let divisor = unit_divisor(dim, unit).ok_or_else(|| cfg_err(line, key, format!("unit {unit:?} not accepted here")))?;
    if !value.is_finite() {
        return Err(cfg_err(line, key, "value must be finite"));
    }
    Ok(value / divisor)
}

fn parse_count(line: usize, key: &str, raw: &str) -> Result<usize> {
    raw.parse()
        .map_err(|_| cfg_err(line, key, format!("expected a whole number, got {raw:?}")))
}

impl Config {
    /// The parameter set of the published figures: w = R = 10 um, Z = 50 ohm,
    /// L = 1 mm, P = 1 W, beta = 1e4 / T, shot noise.
    pub fn paper_defaults() -> Self {
        Self {
            protocol: ProtocolKind::Slope,
            beta: Some(1e4),
            cmax: Some(0.03),
            tau: Some(1e-5),
            noise: NoiseKind::PlDependent,
            xi: 1.0,
            rho_nv: 8e23,
            sigma_nv: 1e5,
            p_laser: 1.0,
            i_sat: 1e9,
            beam: BeamGeometry::ParallelCpw,
            cpw_w: 10e-6,
            cpw_z: 50.0,
            cpw_l: 1e-3,
            cpw_standoff: 0.0,
            loop_r: 10e-6,
            loop_z: 50.0,
            loop_wire_ratio: LoopGeometry::DEFAULT_WIRE_RATIO,
            c1: 1.0,
            c2: 1.0,
            t_fixed: None,
            grid: GridSpec::default(),
            sweep_min: 1e-7,
            sweep_max: 1e-3,
            sweep_points: 81,
            out_dir: "out".into(),
        }
    }

    pub fn preset(name: &str) -> Option<Self> {
        match name {
            "paper_defaults" => Some(Self::paper_defaults()),
            _ => None,
        }
    }

    /// Applies the assignments in `text` on top of `self`.
    pub fn overlay(&self, text: &str) -> Result<Self> {
        let mut cfg = self.clone();
        cfg.apply(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    fn apply(&mut self, text: &str) -> Result<BTreeSet<&'static str>> {
        let mut seen = BTreeSet::new();
        for (idx, raw_line) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw_line.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let Some((key, value)) = content.split_once('=') else {
                return Err(cfg_err(line, content, "expected `key = value`"));
            };
            let key = key.trim();
            let value = value.trim();
            let Some(&(name, dim)) = KEYS.iter().find(|(k, _)| *k == key) else {
                return Err(cfg_err(line, key, "unknown key"));
            };
            if !seen.insert(name) {
                return Err(cfg_err(line, key, "duplicate key"));
            }
            if value.is_empty() {
                return Err(cfg_err(line, key, "missing value"));
            }
            self.set(line, name, dim, value)?;
        }
        Ok(seen)
    }

    fn set(&mut self, line: usize, key: &str, dim: Dim, value: &str) -> Result<()> {
        let num = || parse_number(line, key, dim, value);
        let positive = |v: f64| {
            if v > 0.0 {
                Ok(v)
            } else {
                Err(cfg_err(line, key, "must be positive"))
            }
        };
        match key {
            "protocol.kind" => {
                self.protocol = match value {
                    "slope" => ProtocolKind::Slope,
                    "variance" => ProtocolKind::Variance,
                    _ => return Err(cfg_err(line, key, "expected `slope` or `variance`")),
                }
            }
            "protocol.beta" => self.beta = Some(positive(num()?)?),
            "protocol.cmax" => {
                let v = num()?;
                if !(v > 0.0 && v <= 1.0) {
                    return Err(cfg_err(line, key, "must lie in (0, 1]"));
                }
                self.cmax = Some(v);
            }
            "protocol.tau" => self.tau = Some(positive(num()?)?),
            "noise.kappa" => {
                self.noise = NoiseKind::from_kappa(num()?).map_err(|_| cfg_err(line, key, "must be 0 or 0.5"))?
            }
            "noise.xi" => {
                let v = num()?;
                if v < 1.0 {
                    return Err(cfg_err(line, key, "must be at least 1"));
                }
                self.xi = v;
            }
            "nv.rho" => self.rho_nv = positive(num()?)?,
            "nv.sigma" => self.sigma_nv = positive(num()?)?,
            "optics.p_laser" => self.p_laser = positive(num()?)?,
            "optics.i_sat" => self.i_sat = positive(num()?)?,
            "optics.beam" => {
                self.beam = match value {
                    "parallel" => BeamGeometry::ParallelCpw,
                    "perpendicular" => BeamGeometry::PerpendicularCpw,
                    "loop" => BeamGeometry::LoopAxial,
                    _ => return Err(cfg_err(line, key, "expected `parallel`, `perpendicular` or `loop`")),
                }
            }
            "cpw.w" => self.cpw_w = positive(num()?)?,
            "cpw.z" => self.cpw_z = positive(num()?)?,
            "cpw.l" => self.cpw_l = positive(num()?)?,
            "cpw.standoff" => {
                let v = num()?;
                if v < 0.0 {
                    return Err(cfg_err(line, key, "must be non-negative"));
                }
                self.cpw_standoff = v;
            }
            "loop.r" => self.loop_r = positive(num()?)?,
            "loop.z" => self.loop_z = positive(num()?)?,
            "loop.wire_ratio" => {
                let v = num()?;
                if !(v > 0.0 && v < 1.0) {
                    return Err(cfg_err(line, key, "must lie in (0, 1)"));
                }
                self.loop_wire_ratio = v;
            }
            "probe.c1" => self.c1 = positive(num()?)?,
            "probe.c2" => self.c2 = positive(num()?)?,
            "probe.t_fixed" => self.t_fixed = Some(positive(num()?)?),
            "grid.nx" => self.grid.nx = parse_count(line, key, value)?,
            "grid.nz" => self.grid.nz = parse_count(line, key, value)?,
            "grid.extent" => self.grid.extent = num()?,
            "sweep.min" => self.sweep_min = positive(num()?)?,
            "sweep.max" => self.sweep_max = positive(num()?)?,
            "sweep.points" => self.sweep_points = parse_count(line, key, value)?,
            "out.dir" => self.out_dir = value.to_string(),
            _ => unreachable!("key table and setter out of sync: {key}"),
        }
        Ok(())
    }

    /// Cross-field checks. Errors report line 0.
    pub fn validate(&self) -> Result<()> {
        self.grid.validate().map_err(|e| cfg_err(0, "grid", e.to_string()))?;
        if self.sweep_min >= self.sweep_max {
            return Err(cfg_err(0, "sweep.min", "must be below sweep.max"));
        }
        if self.sweep_points < 8 {
            return Err(cfg_err(0, "sweep.points", "need at least 8 points"));
        }
        if self.beta.is_none() && (self.cmax.is_none() || self.tau.is_none()) {
            return Err(cfg_err(0, "protocol.beta", "missing (give it, or both protocol.cmax and protocol.tau)"));
        }
        if self.out_dir.is_empty() {
            return Err(cfg_err(0, "out.dir", "must not be empty"));
        }
        Ok(())
    }

    /// Field-to-contrast ratio in use, 1/T.
    pub fn beta(&self) -> Result<f64> {
        match (self.beta, self.cmax, self.tau) {
            (Some(b), _, _) => Ok(b),
            (None, Some(c), Some(t)) => beta_from_protocol(c, t),
            _ => Err(cfg_err(0, "protocol.beta", "missing")),
        }
    }

    pub fn model(&self) -> Result<DetectorModel> {
        Ok(DetectorModel {
            protocol: Protocol::new(self.protocol, self.beta()?)?,
            noise: NoiseModel::new(self.noise, self.xi)?,
            ensemble: NvEnsemble::new(self.rho_nv, self.sigma_nv)?,
            optics: Optics::new(self.p_laser, self.i_sat, self.beam)?,
        })
    }

    pub fn cpw(&self) -> Result<CpwGeometry> {
        CpwGeometry::new(self.cpw_w, self.cpw_z, self.cpw_l)?.with_standoff(self.cpw_standoff)
    }

    pub fn loop_geometry(&self) -> Result<LoopGeometry> {
        LoopGeometry::with_wire_ratio(self.loop_r, self.loop_z, self.loop_wire_ratio)
    }

    /// Probe region for the configured beam.
    pub fn region(&self) -> Result<ProbeRegion> {
        match self.beam {
            BeamGeometry::ParallelCpw => ProbeRegion::cpw(&self.cpw()?, self.c1, self.c2),
            BeamGeometry::PerpendicularCpw => {
                let g = CpwGeometry::new(self.cpw_w, self.cpw_z, self.cpw_w)?.with_standoff(self.cpw_standoff)?;
                ProbeRegion::cpw(&g, self.c1, self.c2)
            }
            BeamGeometry::LoopAxial => match self.t_fixed {
                Some(t) => ProbeRegion::loop_fixed(&self.loop_geometry()?, self.c1, t),
                None => ProbeRegion::loop_relative(&self.loop_geometry()?, self.c1, self.c2),
            },
        }
    }

    /// Constants held fixed in size sweeps. Loop sweeps take `loop.z`.
    pub fn constants(&self, geometry: ScalingGeometry) -> GeometryConstants {
        GeometryConstants {
            z_impedance: match geometry {
                ScalingGeometry::Loop => self.loop_z,
                _ => self.cpw_z,
            },
            length_l: self.cpw_l,
            c1: self.c1,
            c2: self.c2,
            standoff: self.cpw_standoff,
            wire_ratio: self.loop_wire_ratio,
        }
    }

    /// Canonical text form; parsing it back yields an equal config.
    pub fn serialize(&self) -> String {
        let mut out = String::new();
        let mut put = |k: &str, v: String| {
            out.push_str(k);
            out.push_str(" = ");
            out.push_str(&v);
            out.push('\n');
        };
        put("protocol.kind", self.protocol.name().into());
        if let Some(b) = self.beta {
            put("protocol.beta", format!("{b:e}"));
        }
        if let Some(c) = self.cmax {
            put("protocol.cmax", format!("{c:e}"));
        }
        if let Some(t) = self.tau {
            put("protocol.tau", format!("{t:e}"));
        }
        put("noise.kappa", format!("{:e}", self.noise.kappa()));
        put("noise.xi", format!("{:e}", self.xi));
        put("nv.rho", format!("{:e}", self.rho_nv));
        put("nv.sigma", format!("{:e}", self.sigma_nv));
        put("optics.p_laser", format!("{:e}", self.p_laser));
        put("optics.i_sat", format!("{:e}", self.i_sat));
        put("optics.beam", self.beam.name().into());
        put("cpw.w", format!("{:e}", self.cpw_w));
        put("cpw.z", format!("{:e}", self.cpw_z));
        put("cpw.l", format!("{:e}", self.cpw_l));
        put("cpw.standoff", format!("{:e}", self.cpw_standoff));
        put("loop.r", format!("{:e}", self.loop_r));
        put("loop.z", format!("{:e}", self.loop_z));
        put("loop.wire_ratio", format!("{:e}", self.loop_wire_ratio));
        put("probe.c1", format!("{:e}", self.c1));
        put("probe.c2", format!("{:e}", self.c2));
        if let Some(t) = self.t_fixed {
            put("probe.t_fixed", format!("{t:e}"));
        }
        put("grid.nx", self.grid.nx.to_string());
        put("grid.nz", self.grid.nz.to_string());
        put("grid.extent", format!("{:e}", self.grid.extent));
        put("sweep.min", format!("{:e}", self.sweep_min));
        put("sweep.max", format!("{:e}", self.sweep_max));
        put("sweep.points", self.sweep_points.to_string());
        put("out.dir", self.out_dir.clone());
        out
    }
}

/// Parses a complete configuration. Keys in [`REQUIRED_KEYS`] must appear;
/// the rest fall back to [`Config::paper_defaults`].
pub fn parse_config(text: &str) -> Result<Config> {
    let mut cfg = Config::paper_defaults();
    cfg.beta = None;
    cfg.cmax = None;
    cfg.tau = None;
    let seen = cfg.apply(text)?;
    if let Some(missing) = REQUIRED_KEYS.iter().find(|k| !seen.contains(*k)) {
        return Err(cfg_err(0, missing, "required key missing"));
    }
    cfg.validate()?;
    Ok(cfg)
}
