//! Report bundle: headline numbers, figure datasets, exponent tables,
//! probe optimisation and the fixed-thickness loop analysis.

use std::path::Path;

use serde::Serialize;
use serde_json::Value;

use crate::concentrators::{cpw_alpha_ref, cpw_field_map, loop_field_map};
use crate::config::Config;
use crate::fmt::round_sig9;
use crate::model::{magnetic_from_power, PlLaw, ProtocolKind, SensitivityResult};
use crate::probe::{optimize_probe, OptimizationResult, Plateau, SearchGrid};
use crate::scaling::{
    evaluate_at, exponent_csv, fixed_thickness_report, sweep_sensitivity, verify_scaling, ExponentRecord,
    FixedThicknessCheck, ScalingGeometry, SweepSpec, VerifySettings, ZetaMode,
};
use crate::{NvError, Result};

pub const SCHEMA: u32 = 1;

/// Laser powers of the figure curve families, W.
pub const FIGURE_LASERS: [f64; 3] = [0.01, 0.1, 1.0];

/// `(name, geometry, protocol)` of each figure dataset.
pub const FIGURES: [(&str, ScalingGeometry, ProtocolKind); 6] = [
    ("fig2c", ScalingGeometry::CpwParallel, ProtocolKind::Slope),
    ("fig2d", ScalingGeometry::CpwPerpendicular, ProtocolKind::Slope),
    ("fig2e", ScalingGeometry::CpwParallel, ProtocolKind::Variance),
    ("fig2f", ScalingGeometry::CpwPerpendicular, ProtocolKind::Variance),
    ("fig3b", ScalingGeometry::Loop, ProtocolKind::Slope),
    ("fig3c", ScalingGeometry::Loop, ProtocolKind::Variance),
];

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Quantity {
    pub value: f64,
    pub unit: &'static str,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Headline {
    pub eta_slope: Quantity,
    pub eta_var: Quantity,
    pub b_sens_slope: Quantity,
    pub b_sens_var: Quantity,
    pub alpha_ref: Quantity,
    pub regime: &'static str,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Figure {
    pub name: &'static str,
    pub geometry: &'static str,
    pub beam: &'static str,
    pub protocol: &'static str,
    pub csv: String,
}

/// Optimiser outcome without the search trace.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OptimizationRecord {
    pub geometry: &'static str,
    pub protocol: &'static str,
    pub include_returns: bool,
    pub c1_opt: f64,
    pub c2_opt: f64,
    pub zeta: f64,
    pub fom: f64,
    pub fom_unit: String,
    pub volume: f64,
    pub volume_unit: &'static str,
    pub plateau: Plateau,
    pub rejected: usize,
}

impl OptimizationRecord {
    fn new(geometry: &'static str, protocol: ProtocolKind, include_returns: bool, r: &OptimizationResult, kappa_noise: f64) -> Self {
        Self {
            geometry,
            protocol: protocol.name(),
            include_returns,
            c1_opt: r.c1_opt,
            c2_opt: r.c2_opt,
            zeta: r.zeta,
            fom: r.fom,
            fom_unit: format!("(T/W^0.5)^{} m^{}", protocol.kappa(), 3.0 * (1.0 - kappa_noise)),
            volume: r.volume,
            volume_unit: "m^3",
            plateau: r.plateau,
            rejected: r.rejected,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Provenance {
    pub toolkit: &'static str,
    pub version: &'static str,
    pub config: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReportBundle {
    pub schema: u32,
    pub section4: Headline,
    pub figure_lasers_w: Vec<f64>,
    pub figures: Vec<Figure>,
    pub tables: Vec<ExponentRecord>,
    pub tables_pass: bool,
    pub optimization: Vec<OptimizationRecord>,
    pub fixed_thickness: Vec<FixedThicknessCheck>,
    pub provenance: Provenance,
}

fn quantity(r: &SensitivityResult) -> Quantity {
    Quantity {
        value: r.eta,
        unit: r.unit.label(),
    }
}

/// Evaluates everything the bundle holds. Figures and tables use the
/// closed-form reference fields; optimisation uses field maps on the
/// configured grid.
pub fn run_report(cfg: &Config) -> Result<ReportBundle> {
    cfg.validate()?;
    let model = cfg.model()?;
    let geometry = ScalingGeometry::CpwParallel;
    let constants = cfg.constants(geometry);
    let zeta = ZetaMode::default();
    let eval = |p: ProtocolKind| {
        evaluate_at(&model.with_protocol(p), geometry, &constants, &zeta, PlLaw::Saturation, cfg.cpw_w, cfg.p_laser)
    };
    let slope = eval(ProtocolKind::Slope)?;
    let var = eval(ProtocolKind::Variance)?;
    let alpha_ref = cpw_alpha_ref(&cfg.cpw()?);
    let bs = magnetic_from_power(&slope, alpha_ref)?;
    let bv = magnetic_from_power(&var, alpha_ref)?;
    let section4 = Headline {
        eta_slope: quantity(&slope),
        eta_var: quantity(&var),
        b_sens_slope: Quantity {
            value: bs.value,
            unit: bs.unit.label(),
        },
        b_sens_var: Quantity {
            value: bv.value,
            unit: bv.unit.label(),
        },
        alpha_ref: Quantity {
            value: alpha_ref,
            unit: "T/W^0.5",
        },
        regime: slope.regime.map_or("unknown", |r| r.name()),
    };

    let mut figures = Vec::new();
    for (name, g, protocol) in FIGURES {
        let spec = SweepSpec {
            geometry: g,
            min: cfg.sweep_min,
            max: cfg.sweep_max,
            points: cfg.sweep_points,
            model: model.with_protocol(protocol),
            p_lasers: FIGURE_LASERS.to_vec(),
            constants: cfg.constants(g),
            zeta_mode: zeta,
            pl_law: PlLaw::Saturation,
        };
        let table = sweep_sensitivity(&spec)?;
        figures.push(Figure {
            name,
            geometry: g.concentrator(),
            beam: g.beam_name(),
            protocol: protocol.name(),
            csv: table.to_csv(),
        });
    }

    let mut tables = verify_scaling(
        &model,
        &cfg.constants(ScalingGeometry::CpwParallel),
        &[ScalingGeometry::CpwParallel, ScalingGeometry::CpwPerpendicular],
        &VerifySettings::default(),
    )?;
    tables.extend(verify_scaling(
        &model,
        &cfg.constants(ScalingGeometry::Loop),
        &[ScalingGeometry::Loop],
        &VerifySettings::default(),
    )?);
    let tables_pass = tables.iter().all(|r| r.pass);

    let kn = cfg.noise.kappa();
    let mut optimization = Vec::new();
    let cpw_map = cpw_field_map(&cfg.cpw()?, &cfg.grid, true)?;
    let loop_map = loop_field_map(&cfg.loop_geometry()?, &cfg.grid)?;
    for protocol in ProtocolKind::ALL {
        let r = optimize_probe(&cpw_map, protocol, kn, &SearchGrid::default_for(&cpw_map))?;
        optimization.push(OptimizationRecord::new("cpw", protocol, true, &r, kn));
    }
    for protocol in ProtocolKind::ALL {
        let r = optimize_probe(&loop_map, protocol, kn, &SearchGrid::default_for(&loop_map))?;
        optimization.push(OptimizationRecord::new("loop", protocol, false, &r, kn));
    }

    let thickness = cfg.t_fixed.unwrap_or(cfg.loop_r);
    let fixed_thickness = fixed_thickness_report(thickness, cfg.noise)?;

    Ok(ReportBundle {
        schema: SCHEMA,
        section4,
        figure_lasers_w: FIGURE_LASERS.to_vec(),
        figures,
        tables,
        tables_pass,
        optimization,
        fixed_thickness,
        provenance: Provenance {
            toolkit: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            config: cfg.serialize(),
        },
    })
}

fn round_numbers(v: &mut Value) {
    match v {
        Value::Number(n) if n.is_f64() => {
            if let Some(x) = n.as_f64() {
                if let Some(r) = serde_json::Number::from_f64(round_sig9(x)) {
                    *n = r;
                }
            }
        }
        Value::Array(items) => items.iter_mut().for_each(round_numbers),
        Value::Object(map) => map.values_mut().for_each(round_numbers),
        _ => {}
    }
}

impl ReportBundle {
    /// Pretty JSON with every float rounded to 9 significant digits. Figure
    /// CSVs are kept in the bundle as strings.
    pub fn to_json(&self) -> Result<String> {
        let mut v = serde_json::to_value(self).map_err(|e| NvError::Unsupported(e.to_string()))?;
        round_numbers(&mut v);
        let mut s = serde_json::to_string_pretty(&v).map_err(|e| NvError::Unsupported(e.to_string()))?;
        s.push('\n');
        Ok(s)
    }

    /// Files making up the bundle on disk, as `(file name, contents)`.
    pub fn artifacts(&self) -> Result<Vec<(String, String)>> {
        let mut files = vec![("report.json".to_string(), self.to_json()?)];
        for f in &self.figures {
            files.push((format!("{}.csv", f.name), f.csv.clone()));
        }
        files.push(("exponents.csv".to_string(), exponent_csv(&self.tables)));
        Ok(files)
    }

    /// Writes [`artifacts`](Self::artifacts) into `dir`, returning the paths.
    pub fn write_to(&self, dir: &Path) -> std::io::Result<Vec<std::path::PathBuf>> {
        std::fs::create_dir_all(dir)?;
        let files = self
            .artifacts()
            .map_err(|e| std::io::Error::other(e.to_string()))?;
        let mut written = Vec::new();
        for (name, contents) in files {
            let path = dir.join(name);
            std::fs::write(&path, contents)?;
            written.push(path);
        }
        Ok(written)
    }
}
