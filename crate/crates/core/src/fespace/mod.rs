//! Discrete spaces of the mixed stress formulation.

pub mod dofs;
pub mod element;
pub mod interp;
pub mod local;
pub mod maps;
pub mod space;
pub mod table;

pub use element::{ElementGeometry, LocalFacet, QuadPoints};
pub use interp::{interpolate_bdm, interpolate_rt, interpolate_stress, l2_project};
pub use local::{enrichment_basis, matrix_bubble, stress_local_basis};
pub use space::{
    build_bdm_space, build_pressure_space, build_stress_space, build_velocity_space, build_vorticity_space, FeSpace,
    SpaceKind,
};
pub use table::ShapeTable;
