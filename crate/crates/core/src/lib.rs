//! Two-level-atom inversion dynamics in the Jaynes-Cummings model under
//! irreducible and finite-`N` reducible representations of the canonical
//! commutation relations.
//!
//! The crate is organized bottom-up:
//!
//! * [`params`]: validated physical parameters and unit conversion,
//! * [`weights`]: binomial, Gaussian, thermal and Poisson weight tables,
//! * [`dynamics`]: closed-form inversion signals behind a model registry,
//! * [`oracle`]: dense-matrix realization of the reducible representation,
//! * [`analysis`]: envelopes, spectra and least-squares fitting,
//! * [`csv`] and [`scenario`]: file formats and named figure presets.

pub mod params;
pub mod sum;
pub mod weights;
pub mod dynamics;
pub mod oracle;
pub mod analysis;
pub mod csv;
pub mod scenario;
