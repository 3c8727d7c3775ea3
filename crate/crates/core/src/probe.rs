//! Probe-volume integration over field maps and grid-search optimisation of
//! the normalised probe dimensions.
//!
//! Waveguide regions are boxes of width `c1 w` centred on the track, sitting
//! on the diamond surface with height `c2 w`, extending `L` along the track.
//! Loop regions are coaxial cylinders of radius `c1 R` and thickness `c2 R`
//! (or a fixed thickness) centred on the loop plane.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::concentrators::{CpwGeometry, FieldMap, LoopGeometry, MapGeometry};
use crate::error::positive;
use crate::model::{fom_lin, fom_sat, BeamFootprint, BeamGeometry, ProtocolKind};
use crate::{par, NvError, Result};

/// Minimum number of unmasked quadrature nodes inside a region.
pub const MIN_REGION_NODES: usize = 16;

/// Largest masked share (by quadrature weight) of an admissible region.
pub const MAX_MASKED_FRACTION: f64 = 0.2;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Thickness {
    /// Thickness `c2 R`.
    Relative(f64),
    /// Absolute thickness, m.
    Fixed(f64),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProbeRegion {
    Cpw {
        c1: f64,
        c2: f64,
        w: f64,
        length_l: f64,
        standoff: f64,
    },
    Loop {
        c1: f64,
        r_loop: f64,
        thickness: Thickness,
    },
}

impl ProbeRegion {
    pub fn cpw(geom: &CpwGeometry, c1: f64, c2: f64) -> Result<Self> {
        positive("c1", c1)?;
        positive("c2", c2)?;
        Ok(ProbeRegion::Cpw {
            c1,
            c2,
            w: geom.w,
            length_l: geom.length_l,
            standoff: geom.standoff,
        })
    }

    pub fn loop_relative(geom: &LoopGeometry, c1: f64, c2: f64) -> Result<Self> {
        positive("c2", c2)?;
        Self::loop_with(geom, c1, Thickness::Relative(c2))
    }

    pub fn loop_fixed(geom: &LoopGeometry, c1: f64, thickness: f64) -> Result<Self> {
        positive("thickness", thickness)?;
        Self::loop_with(geom, c1, Thickness::Fixed(thickness))
    }

    fn loop_with(geom: &LoopGeometry, c1: f64, thickness: Thickness) -> Result<Self> {
        if !(c1 > 0.0 && c1 <= 1.0) {
            return Err(NvError::domain("c1", c1, "loop probe radius must lie in (0, R]"));
        }
        Ok(ProbeRegion::Loop {
            c1,
            r_loop: geom.r_loop,
            thickness,
        })
    }

    /// Region with normalised dimensions `(c1, c2)` on the geometry of `map`.
    pub fn for_map(map: &FieldMap, c1: f64, c2: f64) -> Result<Self> {
        match &map.geometry {
            MapGeometry::Cpw(g) => Self::cpw(g, c1, c2),
            MapGeometry::Loop(g) => Self::loop_relative(g, c1, c2),
        }
    }

    pub fn c1(&self) -> f64 {
        match *self {
            ProbeRegion::Cpw { c1, .. } | ProbeRegion::Loop { c1, .. } => c1,
        }
    }

    /// Normalised height or thickness.
    pub fn c2(&self) -> f64 {
        match *self {
            ProbeRegion::Cpw { c2, .. } => c2,
            ProbeRegion::Loop {
                r_loop, thickness, ..
            } => match thickness {
                Thickness::Relative(c2) => c2,
                Thickness::Fixed(t) => t / r_loop,
            },
        }
    }

    /// Probe height (waveguide) or thickness (loop), m.
    pub fn thickness(&self) -> f64 {
        match *self {
            ProbeRegion::Cpw { c2, w, .. } => c2 * w,
            ProbeRegion::Loop { r_loop, .. } => self.c2() * r_loop,
        }
    }

    pub fn volume(&self) -> f64 {
        match *self {
            ProbeRegion::Cpw {
                c1, c2, w, length_l, ..
            } => c1 * c2 * w * w * length_l,
            ProbeRegion::Loop { c1, r_loop, .. } => {
                let r = c1 * r_loop;
                PI * r * r * self.thickness()
            }
        }
    }

    /// Beam cross-section and path through the region. A perpendicular
    /// waveguide beam covers `c1 w x L` from the top.
    pub fn footprint(&self, beam: BeamGeometry) -> Result<BeamFootprint> {
        match (*self, beam) {
            (ProbeRegion::Cpw { c1, c2, w, length_l, .. }, BeamGeometry::ParallelCpw) => Ok(BeamFootprint {
                area: c1 * c2 * w * w,
                path_length: length_l,
            }),
            (ProbeRegion::Cpw { c1, c2, w, length_l, .. }, BeamGeometry::PerpendicularCpw) => Ok(BeamFootprint {
                area: c1 * w * length_l,
                path_length: c2 * w,
            }),
            (ProbeRegion::Loop { c1, r_loop, .. }, BeamGeometry::LoopAxial) => {
                let r = c1 * r_loop;
                Ok(BeamFootprint {
                    area: PI * r * r,
                    path_length: self.thickness(),
                })
            }
            _ => Err(NvError::Unsupported(format!(
                "beam geometry {} does not apply to this probe region",
                beam.name()
            ))),
        }
    }

    /// Window `(x_lo, x_hi, z_lo, z_hi)` in map coordinates.
    fn window(&self) -> (f64, f64, f64, f64) {
        match *self {
            ProbeRegion::Cpw { c1, c2, w, standoff, .. } => {
                (-0.5 * c1 * w, 0.5 * c1 * w, standoff, standoff + c2 * w)
            }
            ProbeRegion::Loop { c1, r_loop, .. } => {
                let half = 0.5 * self.thickness();
                (0.0, c1 * r_loop, -half, half)
            }
        }
    }
}

/// Analytic probe volume, m^3.
pub fn region_volume(region: &ProbeRegion) -> f64 {
    region.volume()
}

fn node_range(lo: f64, hi: f64, origin: f64, spacing: f64, n: usize) -> std::ops::Range<usize> {
    const TOL: f64 = 1e-9;
    let first = ((lo - origin) / spacing - TOL).ceil().max(0.0) as usize;
    let last = ((hi - origin) / spacing + TOL).floor();
    if last < 0.0 {
        return 0..0;
    }
    first..((last as usize + 1).min(n))
}

/// Midpoint-rule average of `alpha^kappa_prot` over the unmasked nodes inside
/// `region`; loop maps are weighted by `rho`.
pub fn avg_alpha_pow(map: &FieldMap, region: &ProbeRegion, kappa_prot: i32) -> Result<f64> {
    match (&map.geometry, region) {
        (MapGeometry::Cpw(_), ProbeRegion::Cpw { .. }) | (MapGeometry::Loop(_), ProbeRegion::Loop { .. }) => {}
        _ => {
            return Err(NvError::Unsupported(
                "probe region and field map describe different concentrators".into(),
            ))
        }
    }
    let (x_lo, x_hi, z_lo, z_hi) = region.window();
    let (mx_lo, mx_hi, mz_lo, mz_hi) = map.bounds();
    let slack_x = 1e-9 * map.dx;
    let slack_z = 1e-9 * map.dz;
    if x_lo < mx_lo - slack_x || x_hi > mx_hi + slack_x || z_lo < mz_lo - slack_z || z_hi > mz_hi + slack_z {
        return Err(NvError::OutsideMap(format!(
            "region [{x_lo:.3e}, {x_hi:.3e}] x [{z_lo:.3e}, {z_hi:.3e}] m exceeds map window \
             [{mx_lo:.3e}, {mx_hi:.3e}] x [{mz_lo:.3e}, {mz_hi:.3e}] m"
        )));
    }
    let axisymmetric = map.is_axisymmetric();
    let xs = node_range(x_lo, x_hi, map.x0, map.dx, map.nx);
    let zs = node_range(z_lo, z_hi, map.z0, map.dz, map.nz);

    let mut sum = 0.0;
    let mut weight = 0.0;
    let mut masked_weight = 0.0;
    let mut nodes = 0;
    for j in zs {
        for i in xs.clone() {
            let wgt = if axisymmetric { map.x(i) } else { 1.0 };
            if map.is_masked(i, j) {
                masked_weight += wgt;
            } else {
                sum += wgt * map.alpha_at(i, j).powi(kappa_prot);
                weight += wgt;
                nodes += 1;
            }
        }
    }
    let total = weight + masked_weight;
    if total > 0.0 && masked_weight / total > MAX_MASKED_FRACTION {
        return Err(NvError::MaskedRegion {
            percent: 100.0 * masked_weight / total,
        });
    }
    if nodes < MIN_REGION_NODES {
        return Err(NvError::Resolution {
            nodes,
            required: MIN_REGION_NODES,
        });
    }
    Ok(sum / weight)
}

/// `<alpha^k>` relative to `alpha_ref^k`.
pub fn zeta_of_region(map: &FieldMap, region: &ProbeRegion, alpha_ref: f64, kappa_prot: i32) -> Result<f64> {
    positive("alpha_ref", alpha_ref)?;
    Ok(avg_alpha_pow(map, region, kappa_prot)? / alpha_ref.powi(kappa_prot))
}

/// Everything the optimiser and reports need about one region.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegionFigures {
    pub avg_alpha_pow: f64,
    pub zeta: f64,
    pub volume: f64,
    pub fom_sat: f64,
}

pub fn evaluate_region(
    map: &FieldMap,
    region: &ProbeRegion,
    kappa_prot: i32,
    kappa_noise: f64,
) -> Result<RegionFigures> {
    let avg = avg_alpha_pow(map, region, kappa_prot)?;
    let volume = region_volume(region);
    Ok(RegionFigures {
        avg_alpha_pow: avg,
        zeta: avg / map.alpha_ref().powi(kappa_prot),
        volume,
        fom_sat: fom_sat(avg, volume, kappa_noise),
    })
}

/// Linear-regime figure of merit of a region for a given beam.
pub fn region_fom_lin(
    map: &FieldMap,
    region: &ProbeRegion,
    beam: BeamGeometry,
    kappa_prot: i32,
    kappa_noise: f64,
) -> Result<f64> {
    let avg = avg_alpha_pow(map, region, kappa_prot)?;
    let fp = region.footprint(beam)?;
    Ok(fom_lin(avg, region_volume(region), fp.area, kappa_noise))
}

/// Candidate normalised dimensions. Every `(c1, c2)` pair is evaluated.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchGrid {
    pub c1: Vec<f64>,
    pub c2: Vec<f64>,
}

impl SearchGrid {
    pub const STEP: f64 = 0.05;
    pub const MAX: f64 = 3.0;

    /// Multiples of 0.05 in `(0, max]`.
    pub fn steps(max: f64) -> Vec<f64> {
        let n = (max / Self::STEP + 1e-9).floor() as usize;
        (1..=n).map(|i| i as f64 / 20.0).collect()
    }

    /// 0.05 steps up to 3, clipped to what the map covers (and to `c1 < 1`
    /// for loops).
    pub fn default_for(map: &FieldMap) -> Self {
        let (x_lo, x_hi, z_lo, z_hi) = map.bounds();
        let scale = map.scale();
        match map.geometry {
            MapGeometry::Cpw(g) => Self {
                c1: Self::steps((x_hi - x_lo).min(-2.0 * x_lo).min(2.0 * x_hi) / scale)
                    .into_iter()
                    .filter(|&c| c <= Self::MAX)
                    .collect(),
                c2: Self::steps(((z_hi - g.standoff) / scale).min(Self::MAX)),
            },
            MapGeometry::Loop(_) => Self {
                c1: Self::steps((x_hi / scale).min(0.99)),
                c2: Self::steps((2.0 * z_hi.min(-z_lo) / scale).min(Self::MAX)),
            },
        }
    }

    /// Searches `c2` with `c1` held fixed.
    pub fn fixed_c1(c1: f64, c2: Vec<f64>) -> Self {
        Self { c1: vec![c1], c2 }
    }

    /// Searches `c1` with `c2` held fixed.
    pub fn fixed_c2(c1: Vec<f64>, c2: f64) -> Self {
        Self { c1, c2: vec![c2] }
    }

    /// Candidates in canonical ascending `(c1, c2)` order, duplicates removed.
    pub fn canonical(&self) -> Vec<(f64, f64)> {
        let sorted = |v: &[f64]| {
            let mut v = v.to_vec();
            v.sort_by(f64::total_cmp);
            v.dedup();
            v
        };
        let c1 = sorted(&self.c1);
        let c2 = sorted(&self.c2);
        c1.iter()
            .flat_map(|&a| c2.iter().map(move |&b| (a, b)))
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub c1: f64,
    pub c2: f64,
    pub fom: f64,
    pub zeta: f64,
    pub volume: f64,
}

/// Range of a normalised dimension over which the sensitivity stays within
/// 1% of the optimum, the other dimension held at its optimum.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Plateau {
    pub c1: (f64, f64),
    pub c2: (f64, f64),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizationResult {
    pub c1_opt: f64,
    pub c2_opt: f64,
    pub zeta: f64,
    pub fom: f64,
    pub volume: f64,
    pub avg_alpha_pow: f64,
    pub plateau: Plateau,
    /// Candidates that could not be integrated (too few nodes or too much of
    /// the region inside a conductor).
    pub rejected: usize,
    pub search_trace: Vec<TraceEntry>,
}

impl OptimizationResult {
    /// Trace export `c1,c2,fom,zeta,volume` in canonical order.
    pub fn trace_csv(&self) -> String {
        use crate::fmt::sci;
        let mut out = String::from("c1,c2,fom,zeta,volume\n");
        for t in &self.search_trace {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                sci(t.c1),
                sci(t.c2),
                sci(t.fom),
                sci(t.zeta),
                sci(t.volume)
            ));
        }
        out
    }
}

fn better(candidate: &TraceEntry, best: &TraceEntry) -> bool {
    if candidate.fom != best.fom {
        return candidate.fom > best.fom;
    }
    (candidate.volume, candidate.c1, candidate.c2) < (best.volume, best.c1, best.c2)
}

/// Exhaustive maximisation of the saturated figure of merit
/// `<alpha^k> V^(1 - kappa_noise)` over `grid`.
///
/// Ties go to the smaller volume, then smaller `c1`, then smaller `c2`.
/// Candidates that are under-resolved or too heavily masked are skipped;
/// candidates outside the map are an error.
pub fn optimize_probe(
    map: &FieldMap,
    protocol: ProtocolKind,
    kappa_noise: f64,
    grid: &SearchGrid,
) -> Result<OptimizationResult> {
    let candidates = grid.canonical();
    if candidates.is_empty() {
        return Err(NvError::EmptySearch);
    }
    let kappa = protocol.kappa();
    let evaluated = par::map(&candidates, |&(c1, c2)| {
        let region = ProbeRegion::for_map(map, c1, c2)?;
        evaluate_region(map, &region, kappa, kappa_noise).map(|f| TraceEntry {
            c1,
            c2,
            fom: f.fom_sat,
            zeta: f.zeta,
            volume: f.volume,
        })
    });

    let mut trace = Vec::with_capacity(evaluated.len());
    let mut rejected = 0;
    let mut first_rejection = None;
    for outcome in evaluated {
        match outcome {
            Ok(t) => trace.push(t),
            Err(e) if e.is_numerical() => {
                rejected += 1;
                first_rejection.get_or_insert(e);
            }
            Err(e) => return Err(e),
        }
    }
    let Some(mut best) = trace.first().copied() else {
        return Err(first_rejection.unwrap_or(NvError::EmptySearch));
    };
    for t in &trace[1..] {
        if better(t, &best) {
            best = *t;
        }
    }
    let region = ProbeRegion::for_map(map, best.c1, best.c2)?;
    let avg = avg_alpha_pow(map, &region, kappa)?;
    let plateau = plateau(&trace, &best, kappa);
    Ok(OptimizationResult {
        c1_opt: best.c1,
        c2_opt: best.c2,
        zeta: best.zeta,
        fom: best.fom,
        volume: best.volume,
        avg_alpha_pow: avg,
        plateau,
        rejected,
        search_trace: trace,
    })
}

fn plateau(trace: &[TraceEntry], best: &TraceEntry, kappa: i32) -> Plateau {
    // eta within 1% <=> FoM >= FoM_opt * 1.01^(-kappa/2)
    let floor = best.fom * 1.01f64.powf(-0.5 * f64::from(kappa));
    let interval = |line: Vec<(f64, f64)>, at: f64| {
        let pos = line.iter().position(|&(c, _)| c == at).unwrap_or(0);
        let mut lo = pos;
        while lo > 0 && line[lo - 1].1 >= floor {
            lo -= 1;
        }
        let mut hi = pos;
        while hi + 1 < line.len() && line[hi + 1].1 >= floor {
            hi += 1;
        }
        (line[lo].0, line[hi].0)
    };
    let row: Vec<_> = trace.iter().filter(|t| t.c1 == best.c1).map(|t| (t.c2, t.fom)).collect();
    let column: Vec<_> = trace.iter().filter(|t| t.c2 == best.c2).map(|t| (t.c1, t.fom)).collect();
    Plateau {
        c1: interval(column, best.c1),
        c2: interval(row, best.c2),
    }
}
