//! Anisotropic flat torus: geometry, truncated Fourier fields and transforms.

pub mod fft;
pub mod field;
pub mod geometry;
pub mod lattice;
pub mod operators;
pub mod snapshot;
pub mod strichartz;

pub use fft::{padded_size, to_coeffs, to_grid, transform, ComplexGrid, Direction, Fft3, RealGrid, Representation};
pub use field::SpectralField;
pub use geometry::{laplacian_symbol, q_form, Convention, TorusGeometry};
pub use lattice::FrequencyLattice;
pub use operators::{
    bump, free_propagate, lp_project, projection_multiplier, sobolev_norm, sobolev_norm_sqr, symbol_table, IntCube,
    Projection,
};
pub use snapshot::FieldSnapshot;
pub use strichartz::{strichartz_certificate, CertificateMode, CertificateStats};
