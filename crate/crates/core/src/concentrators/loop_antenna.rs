//! Single-turn loop terminating a shorted line, modelled as a circular
//! filament.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::elliptic::ellip_ke;
use super::field_map::{FieldComponent, FieldMap, GridSpec, MapGeometry};
use crate::error::positive;
use crate::{par, NvError, Result, MU_0};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LoopGeometry {
    /// Loop radius, m.
    pub r_loop: f64,
    /// Line impedance, ohm.
    pub z_impedance: f64,
    /// Wire diameter over loop radius. Only sets the masked tube around the
    /// filament.
    pub wire_ratio: f64,
}

impl LoopGeometry {
    pub const DEFAULT_WIRE_RATIO: f64 = 0.2;

    pub fn new(r_loop: f64, z_impedance: f64) -> Result<Self> {
        Self::with_wire_ratio(r_loop, z_impedance, Self::DEFAULT_WIRE_RATIO)
    }

    pub fn with_wire_ratio(r_loop: f64, z_impedance: f64, wire_ratio: f64) -> Result<Self> {
        let g = Self {
            r_loop,
            z_impedance,
            wire_ratio,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        positive("r_loop", self.r_loop)?;
        positive("z_impedance", self.z_impedance)?;
        if !(self.wire_ratio > 0.0 && self.wire_ratio < 1.0) {
            return Err(NvError::domain("wire_ratio", self.wire_ratio, "must lie in (0, 1)"));
        }
        Ok(())
    }

    /// Loop current per sqrt(W); a shorted line doubles the matched-line
    /// current. A/W^0.5.
    pub fn current_per_root_watt(&self) -> f64 {
        2.0 / self.z_impedance.sqrt()
    }

    /// Radius of the masked tube around the filament, m.
    pub fn wire_radius(&self) -> f64 {
        0.5 * self.wire_ratio * self.r_loop
    }

    pub fn scaled(&self, k: f64) -> Self {
        Self {
            r_loop: self.r_loop * k,
            ..*self
        }
    }
}

/// Centre field-to-power ratio mu0 / (R sqrt(Z)), T/W^0.5.
pub fn loop_alpha_ref(geom: &LoopGeometry) -> f64 {
    MU_0 / (geom.r_loop * geom.z_impedance.sqrt())
}

/// Axial field on the loop axis at height `z`, T.
pub fn loop_onaxis_bz(geom: &LoopGeometry, z: f64, i_rf: f64) -> f64 {
    let r = geom.r_loop;
    let q = z * z + r * r;
    MU_0 * i_rf * r * r / (2.0 * q * q.sqrt())
}

/// Axial field of a circular filament of radius `radius` at cylindrical
/// position `(rho, z)`, T.
pub fn loop_bz(radius: f64, rho: f64, z: f64, current: f64) -> f64 {
    let a = radius;
    if rho == 0.0 {
        let q = z * z + a * a;
        return MU_0 * current * a * a / (2.0 * q * q.sqrt());
    }
    let q = (a + rho) * (a + rho) + z * z;
    let d = (a - rho) * (a - rho) + z * z;
    let (k, e) = ellip_ke(4.0 * a * rho / q);
    MU_0 * current / (2.0 * PI * q.sqrt()) * (k + (a * a - rho * rho - z * z) / d * e)
}

/// Samples |Bz| per sqrt(W) on the `(rho, z)` half-plane.
///
/// The window spans `rho` in `[0, extent R/2]` and `z` in
/// `[-extent R/2, extent R/2]`. Nodes inside the wire tube are masked.
pub fn loop_field_map(geom: &LoopGeometry, grid: &GridSpec) -> Result<FieldMap> {
    geom.validate()?;
    grid.validate()?;
    let r = geom.r_loop;
    let dx = 0.5 * grid.extent * r / grid.nx as f64;
    let dz = grid.extent * r / grid.nz as f64;
    if dx > r / 8.0 || dz > r / 8.0 {
        return Err(NvError::InvalidGrid(format!(
            "node spacing {:.3e} m x {:.3e} m coarser than R/8",
            dx, dz
        )));
    }
    let x0 = 0.5 * dx;
    let z0 = -0.5 * grid.extent * r + 0.5 * dz;
    let current = geom.current_per_root_watt();
    let tube = geom.wire_radius();
    let nx = grid.nx;
    let nodes = par::map_range(grid.nx * grid.nz, |k| {
        let rho = x0 + (k % nx) as f64 * dx;
        let z = z0 + (k / nx) as f64 * dz;
        if (rho - r).hypot(z) < tube {
            (0.0, true)
        } else {
            (loop_bz(r, rho, z, current).abs(), false)
        }
    });
    let (alpha, masked) = nodes.into_iter().unzip();
    Ok(FieldMap {
        geometry: MapGeometry::Loop(*geom),
        component: FieldComponent::AxialZ,
        include_returns: false,
        nx: grid.nx,
        nz: grid.nz,
        x0,
        z0,
        dx,
        dz,
        alpha,
        masked,
    })
}
