//! Coplanar waveguide modelled as a thin strip of uniform current density.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::field_map::{FieldComponent, FieldMap, GridSpec, MapGeometry};
use crate::error::positive;
use crate::{par, NvError, Result, MU_0};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CpwGeometry {
    /// Track width, m.
    pub w: f64,
    /// Line impedance, ohm.
    pub z_impedance: f64,
    /// Probe extent along the track, m.
    pub length_l: f64,
    /// Height of the diamond surface above the track, m.
    #[serde(default)]
    pub standoff: f64,
}

impl CpwGeometry {
    pub fn new(w: f64, z_impedance: f64, length_l: f64) -> Result<Self> {
        let g = Self {
            w,
            z_impedance,
            length_l,
            standoff: 0.0,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn with_standoff(mut self, standoff: f64) -> Result<Self> {
        if !(standoff.is_finite() && standoff >= 0.0) {
            return Err(NvError::domain("standoff", standoff, "must be non-negative"));
        }
        self.standoff = standoff;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        positive("w", self.w)?;
        positive("z_impedance", self.z_impedance)?;
        positive("length_l", self.length_l)?;
        if !(self.standoff.is_finite() && self.standoff >= 0.0) {
            return Err(NvError::domain("standoff", self.standoff, "must be non-negative"));
        }
        Ok(())
    }

    /// RMS line current per sqrt(W) for a matched line, A/W^0.5.
    pub fn current_per_root_watt(&self) -> f64 {
        1.0 / self.z_impedance.sqrt()
    }

    /// Spatially rescaled copy (width, length and standoff times `k`).
    pub fn scaled(&self, k: f64) -> Self {
        Self {
            w: self.w * k,
            length_l: self.length_l * k,
            standoff: self.standoff * k,
            ..*self
        }
    }
}

/// Surface field-to-power ratio mu0 / (2 w sqrt(Z)), T/W^0.5.
pub fn cpw_alpha_ref(geom: &CpwGeometry) -> f64 {
    MU_0 / (2.0 * geom.w * geom.z_impedance.sqrt())
}

/// Horizontal field of a strip of width `width` centred at `x = centre` in
/// the plane `z = 0`, carrying total `current` uniformly along y.
///
/// Bx = mu0 I / (2 pi w) [atan((x - x_c + w/2)/z) - atan((x - x_c - w/2)/z)],
/// which tends to mu0 I / (2 w) just above the strip.
pub fn strip_bx(x: f64, z: f64, centre: f64, width: f64, current: f64) -> f64 {
    let u = x - centre;
    let subtended = (u + 0.5 * width).atan2(z) - (u - 0.5 * width).atan2(z);
    MU_0 * current / (2.0 * PI * width) * subtended
}

/// Horizontal field of the waveguide at `(x, z)` for a given track current.
///
/// With return conductors, each ground strip is as wide as the track, sits a
/// gap of `w/2` from it and carries `-I/2`.
pub fn cpw_bx(geom: &CpwGeometry, x: f64, z: f64, include_returns: bool, current: f64) -> f64 {
    let w = geom.w;
    let mut bx = strip_bx(x, z, 0.0, w, current);
    if include_returns {
        let offset = 0.5 * w + 0.5 * w + 0.5 * w;
        bx += strip_bx(x, z, offset, w, -0.5 * current);
        bx += strip_bx(x, z, -offset, w, -0.5 * current);
    }
    bx
}

/// Samples |Bx| per sqrt(W) over the cross-section above the track.
///
/// The window spans `x` in `[-extent w/2, extent w/2]` and `z` from the
/// standoff to `standoff + extent w`.
pub fn cpw_field_map(geom: &CpwGeometry, grid: &GridSpec, include_returns: bool) -> Result<FieldMap> {
    geom.validate()?;
    grid.validate()?;
    let w = geom.w;
    let dx = grid.extent * w / grid.nx as f64;
    let dz = grid.extent * w / grid.nz as f64;
    if dx > w / 8.0 || dz > w / 8.0 {
        return Err(NvError::InvalidGrid(format!(
            "node spacing {:.3e} m x {:.3e} m coarser than w/8",
            dx, dz
        )));
    }
    let x0 = -0.5 * grid.extent * w + 0.5 * dx;
    let z0 = geom.standoff + 0.5 * dz;
    let current = geom.current_per_root_watt();
    let nx = grid.nx;
    let alpha = par::map_range(grid.nx * grid.nz, |k| {
        let (i, j) = (k % nx, k / nx);
        let x = x0 + i as f64 * dx;
        let z = z0 + j as f64 * dz;
        cpw_bx(geom, x, z, include_returns, current).abs()
    });
    Ok(FieldMap {
        geometry: MapGeometry::Cpw(*geom),
        component: FieldComponent::InPlaneX,
        include_returns,
        nx: grid.nx,
        nz: grid.nz,
        x0,
        z0,
        dx,
        dz,
        masked: vec![false; alpha.len()],
        alpha,
    })
}
