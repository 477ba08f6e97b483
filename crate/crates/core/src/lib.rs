//! Mean-field simulator for a hybrid system in which a damped vibrational
//! mode of a nanomembrane couples to a Bose-Einstein condensate held in the
//! optical lattice of the out-coupled cavity light.
//!
//! Two independent routes compute the same physics and cross-validate each
//! other:
//!
//! * [`variational`] — a Gaussian ansatz for the condensate reduces the
//!   dynamics to six coupled ODEs with a closed-form potential energy.
//!   Steady states, the critical coupling of the symmetry-breaking
//!   transition, the energy surface and trajectories all come from here.
//! * [`gpe`] — the full one-dimensional Gross-Pitaevskii equation on a
//!   periodic single-site grid: imaginary-time ground states, split-step
//!   real-time evolution and the Bogoliubov-de Gennes eigenproblem.
//!
//! [`linres`] linearizes the variational system around a steady state,
//! yielding collective mode frequencies, decay rates, ground-state
//! covariances and the atom-membrane logarithmic negativity.
//! [`observables`] derives momentum distributions and order parameters from
//! either route.
//!
//! All frequencies and energies are expressed in units of the atomic recoil
//! frequency; couplings carry the square-root-of-atom-number scaling, so the
//! membrane coupling knob is `Lambda = sqrt(N) * lambda`.

pub mod config;
pub mod error;
pub mod gpe;
pub mod linres;
pub mod observables;
pub mod params;
pub mod variational;

pub use error::{Error, Result};
pub use params::{ModelParams, PhysicalPreset};
