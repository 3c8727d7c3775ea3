//! Browser bindings. Each export takes plain numbers and strings and returns
//! a JSON document for the page to draw.

use nvrf_core::concentrators::{cpw_field_map, loop_field_map, CpwGeometry, FieldMap, GridSpec, LoopGeometry};
use nvrf_core::config::Config;
use nvrf_core::model::{NoiseKind, PlLaw, ProtocolKind};
use nvrf_core::probe::{optimize_probe, SearchGrid};
use nvrf_core::scaling::{crossover_width, sweep_sensitivity, ScalingGeometry, SweepSpec, ZetaMode};
use serde::Serialize;
use wasm_bindgen::prelude::*;

fn protocol(name: &str) -> Result<ProtocolKind, String> {
    match name {
        "slope" => Ok(ProtocolKind::Slope),
        "variance" => Ok(ProtocolKind::Variance),
        _ => Err(format!("unknown protocol `{name}`")),
    }
}

fn geometry(name: &str) -> Result<ScalingGeometry, String> {
    match name {
        "parallel" => Ok(ScalingGeometry::CpwParallel),
        "perpendicular" => Ok(ScalingGeometry::CpwPerpendicular),
        "loop" => Ok(ScalingGeometry::Loop),
        _ => Err(format!("unknown geometry `{name}`")),
    }
}

fn to_json<T: Serialize>(v: &T) -> Result<String, String> {
    serde_json::to_string(v).map_err(|e| e.to_string())
}

#[derive(Serialize)]
struct Curve {
    p_laser_w: f64,
    crossover_m: f64,
    size_m: Vec<f64>,
    eta: Vec<Option<f64>>,
    regime: Vec<&'static str>,
}

#[derive(Serialize)]
struct Curves {
    unit: &'static str,
    curves: Vec<Curve>,
}

/// Sensitivity against concentrator size for the reference parameter set,
/// one curve per laser power.
pub fn sensitivity_curves_json(geom: &str, proto: &str, kappa_noise: f64, lasers_w: &[f64]) -> Result<String, String> {
    let g = geometry(geom)?;
    let kind = protocol(proto)?;
    let noise = NoiseKind::from_kappa(kappa_noise).map_err(|e| e.to_string())?;
    let cfg = Config::paper_defaults();
    let model = cfg.model().map_err(|e| e.to_string())?.with_protocol(kind).with_noise(noise);
    let spec = SweepSpec {
        geometry: g,
        min: cfg.sweep_min,
        max: cfg.sweep_max,
        points: cfg.sweep_points,
        model,
        p_lasers: lasers_w.to_vec(),
        constants: cfg.constants(g),
        zeta_mode: ZetaMode::default(),
        pl_law: PlLaw::Saturation,
    };
    let table = sweep_sensitivity(&spec).map_err(|e| e.to_string())?;
    let mut curves = Vec::new();
    for &p in lasers_w {
        let rows: Vec<_> = table.curve(p).collect();
        curves.push(Curve {
            p_laser_w: p,
            crossover_m: crossover_width(p, cfg.i_sat, g, cfg.c1, cfg.c2).map_err(|e| e.to_string())?,
            size_m: rows.iter().map(|r| r.param_m).collect(),
            eta: rows.iter().map(|r| r.eta).collect(),
            regime: rows.iter().map(|r| r.regime.map_or("error", |x| x.name())).collect(),
        });
    }
    to_json(&Curves {
        unit: table.unit.label(),
        curves,
    })
}

#[derive(Serialize)]
struct MapView<'a> {
    nx: usize,
    nz: usize,
    x0: f64,
    z0: f64,
    dx: f64,
    dz: f64,
    alpha_ref: f64,
    alpha: &'a [f64],
    masked: &'a [bool],
}

fn build_map(geom: &str, returns: bool, nodes: usize) -> Result<FieldMap, String> {
    let grid = GridSpec::new(nodes, nodes, 3.0).map_err(|e| e.to_string())?;
    let map = match geom {
        "cpw" => cpw_field_map(&CpwGeometry::new(10e-6, 50.0, 1e-3).map_err(|e| e.to_string())?, &grid, returns),
        "loop" => loop_field_map(&LoopGeometry::new(10e-6, 50.0).map_err(|e| e.to_string())?, &grid),
        _ => return Err(format!("unknown concentrator `{geom}`")),
    };
    map.map_err(|e| e.to_string())
}

/// Field-to-power map of a 10 um waveguide (`cpw`) or loop (`loop`).
pub fn field_map_json(geom: &str, returns: bool, nodes: usize) -> Result<String, String> {
    let map = build_map(geom, returns, nodes)?;
    to_json(&MapView {
        nx: map.nx,
        nz: map.nz,
        x0: map.x0,
        z0: map.z0,
        dx: map.dx,
        dz: map.dz,
        alpha_ref: map.alpha_ref(),
        alpha: &map.alpha,
        masked: &map.masked,
    })
}

#[derive(Serialize)]
struct Optimum {
    c1_opt: f64,
    c2_opt: f64,
    zeta: f64,
    rejected: usize,
    c1: Vec<f64>,
    c2: Vec<f64>,
    /// Figure of merit relative to the optimum, row-major over (c2, c1);
    /// `null` for skipped candidates.
    relative_fom: Vec<Option<f64>>,
}

/// Grid search over the normalised probe dimensions on a field map.
pub fn optimize_json(geom: &str, proto: &str, kappa_noise: f64, returns: bool, nodes: usize) -> Result<String, String> {
    let kind = protocol(proto)?;
    NoiseKind::from_kappa(kappa_noise).map_err(|e| e.to_string())?;
    let map = build_map(geom, returns, nodes)?;
    let grid = SearchGrid::default_for(&map);
    let r = optimize_probe(&map, kind, kappa_noise, &grid).map_err(|e| e.to_string())?;
    let mut relative_fom = vec![None; grid.c1.len() * grid.c2.len()];
    for t in &r.search_trace {
        let i = grid.c1.iter().position(|&c| c == t.c1);
        let j = grid.c2.iter().position(|&c| c == t.c2);
        if let (Some(i), Some(j)) = (i, j) {
            relative_fom[j * grid.c1.len() + i] = Some(t.fom / r.fom);
        }
    }
    to_json(&Optimum {
        c1_opt: r.c1_opt,
        c2_opt: r.c2_opt,
        zeta: r.zeta,
        rejected: r.rejected,
        c1: grid.c1,
        c2: grid.c2,
        relative_fom,
    })
}

#[wasm_bindgen]
pub fn sensitivity_curves(geometry: &str, protocol: &str, kappa_noise: f64, lasers_w: Vec<f64>) -> Result<String, JsValue> {
    sensitivity_curves_json(geometry, protocol, kappa_noise, &lasers_w).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn field_map(geometry: &str, returns: bool, nodes: usize) -> Result<String, JsValue> {
    field_map_json(geometry, returns, nodes).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn optimize(geometry: &str, protocol: &str, kappa_noise: f64, returns: bool, nodes: usize) -> Result<String, JsValue> {
    optimize_json(geometry, protocol, kappa_noise, returns, nodes).map_err(|e| JsValue::from_str(&e))
}
