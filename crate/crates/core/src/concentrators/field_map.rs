use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{cpw_alpha_ref, loop_alpha_ref, CpwGeometry, LoopGeometry};
use crate::fmt::sci;
use crate::{NvError, Result};

/// Sampling lattice for a field map.
///
/// A map covers a square window whose side is `extent` times the
/// characteristic size (track width or loop radius). Nodes sit at cell
/// centres, so node sums are midpoint-rule quadratures.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub nx: usize,
    pub nz: usize,
    pub extent: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            nx: 240,
            nz: 240,
            extent: 3.0,
        }
    }
}

impl GridSpec {
    pub fn new(nx: usize, nz: usize, extent: f64) -> Result<Self> {
        let g = Self { nx, nz, extent };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if self.nx < 16 || self.nz < 16 {
            return Err(NvError::InvalidGrid(format!(
                "node counts {}x{} below the minimum of 16",
                self.nx, self.nz
            )));
        }
        if !(self.extent.is_finite() && self.extent >= 2.0) {
            return Err(NvError::InvalidGrid(format!(
                "extent {} must be at least 2",
                self.extent
            )));
        }
        Ok(())
    }

    /// Same window, twice the nodes per axis.
    pub fn refined(&self) -> Self {
        Self {
            nx: self.nx * 2,
            nz: self.nz * 2,
            extent: self.extent,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MapGeometry {
    Cpw(CpwGeometry),
    Loop(LoopGeometry),
}

impl MapGeometry {
    /// Track width or loop radius, m.
    pub fn scale(&self) -> f64 {
        match self {
            MapGeometry::Cpw(g) => g.w,
            MapGeometry::Loop(g) => g.r_loop,
        }
    }

    pub fn alpha_ref(&self) -> f64 {
        match self {
            MapGeometry::Cpw(g) => cpw_alpha_ref(g),
            MapGeometry::Loop(g) => loop_alpha_ref(g),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldComponent {
    /// Horizontal in-plane component of a waveguide cross-section.
    InPlaneX,
    /// Component along a loop axis.
    AxialZ,
}

/// Field-to-power ratio sampled on a regular 2D lattice: a waveguide
/// cross-section `(x, z)` or an axisymmetric loop half-plane `(rho, z)`.
///
/// Values are stored row-major with `x` (or `rho`) varying fastest.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldMap {
    pub geometry: MapGeometry,
    pub component: FieldComponent,
    pub include_returns: bool,
    pub nx: usize,
    pub nz: usize,
    /// Coordinates of node (0, 0), m.
    pub x0: f64,
    pub z0: f64,
    /// Node spacing, m.
    pub dx: f64,
    pub dz: f64,
    /// |alpha| per node, T/W^0.5. Masked nodes hold 0.
    pub alpha: Vec<f64>,
    pub masked: Vec<bool>,
}

impl FieldMap {
    pub(crate) fn index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x0 + i as f64 * self.dx
    }

    pub fn z(&self, j: usize) -> f64 {
        self.z0 + j as f64 * self.dz
    }

    pub fn alpha_at(&self, i: usize, j: usize) -> f64 {
        self.alpha[self.index(i, j)]
    }

    pub fn is_masked(&self, i: usize, j: usize) -> bool {
        self.masked[self.index(i, j)]
    }

    pub fn scale(&self) -> f64 {
        self.geometry.scale()
    }

    pub fn alpha_ref(&self) -> f64 {
        self.geometry.alpha_ref()
    }

    pub fn is_axisymmetric(&self) -> bool {
        matches!(self.geometry, MapGeometry::Loop(_))
    }

    /// Covered window `(x_lo, x_hi, z_lo, z_hi)`, cell edges included.
    pub fn bounds(&self) -> (f64, f64, f64, f64) {
        (
            self.x0 - 0.5 * self.dx,
            self.x0 + (self.nx as f64 - 0.5) * self.dx,
            self.z0 - 0.5 * self.dz,
            self.z0 + (self.nz as f64 - 0.5) * self.dz,
        )
    }

    pub fn masked_count(&self) -> usize {
        self.masked.iter().filter(|&&m| m).count()
    }

    pub fn csv_header(&self) -> &'static str {
        if self.is_axisymmetric() {
            "rho,z,alpha,masked"
        } else {
            "x,z,alpha,masked"
        }
    }

    /// CSV export: coordinates in m, alpha in T/W^0.5, row-major.
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(64 * self.alpha.len());
        out.push_str(self.csv_header());
        out.push('\n');
        for j in 0..self.nz {
            for i in 0..self.nx {
                let k = self.index(i, j);
                let _ = writeln!(
                    out,
                    "{},{},{},{}",
                    sci(self.x(i)),
                    sci(self.z(j)),
                    sci(self.alpha[k]),
                    u8::from(self.masked[k])
                );
            }
        }
        out
    }
}
