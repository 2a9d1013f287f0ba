//! Verification engine for the general (1+3) threading decomposition of a
//! Lorentzian spacetime.
//!
//! A metric in threading form is evaluated as truncated Taylor jets at sample
//! points; kinematic, connection, curvature and field-equation quantities are
//! assembled from the split formulas and certified against a direct 4D
//! curvature computation.

pub mod checks;
pub mod corpus;
pub mod cosmology;
pub mod efe;
pub mod error;
pub mod exprlang;
pub mod jets;
pub mod metric;
pub mod oracle;
pub mod pipeline;
pub mod report;
pub mod residual;
pub mod spatial;
pub mod structure;
pub mod tensor;

pub use error::GeometryError;
