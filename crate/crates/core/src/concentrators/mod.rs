//! RF concentrators: coplanar waveguide and loop antenna.
//!
//! Each geometry provides a closed-form reference field-to-power ratio and a
//! sampled [`FieldMap`] of the component the NV spins couple to.

mod cpw;
mod elliptic;
mod field_map;
mod loop_antenna;

pub use cpw::{cpw_alpha_ref, cpw_bx, cpw_field_map, strip_bx, CpwGeometry};
pub use elliptic::ellip_ke;
pub use field_map::{FieldComponent, FieldMap, GridSpec, MapGeometry};
pub use loop_antenna::{loop_alpha_ref, loop_bz, loop_field_map, loop_onaxis_bz, LoopGeometry};
