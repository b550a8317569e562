//! Mass-conserving mixed-stress (MCS) finite elements for steady Stokes flow
//! with weakly imposed stress symmetry.

pub mod error;
pub mod fespace;
pub mod forms;
pub mod harness;
pub mod linsolve;
pub mod manufactured;
pub mod mesh;
pub mod poly;
pub mod postproc;

pub use error::{McsError, Result};
