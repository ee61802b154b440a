//! Distribution of the mean energy `E = Tr[U rho U^dagger H]` over Haar-random
//! unitaries `U`.
//!
//! The crate computes the moments of that distribution exactly (through the
//! Weingarten calculus of the unitary group, with exact rational Weingarten
//! functions), compares them with the moments of the Gaussian of equal
//! variance, evaluates analytic envelopes on the discrepancy for individual
//! moments and for the moment generating function, and cross-checks
//! everything with a seeded Monte Carlo sampler of Haar unitaries.
//!
//! Module map:
//!
//! - [`perm_comb`]: partitions, cycle types, permutations and the counting
//!   functions of the symmetric group.
//! - [`weingarten`]: exact Weingarten tables from the class-collapsed Gram
//!   system, closed forms for small orders, asymptotics and two-sided bounds.
//! - [`spectral`]: spectra, centering, Schatten norms, the `eta` functional,
//!   trace functionals of cycle types and orbit energy ranges.
//! - [`moments`]: raw and central moments of `E`, Gaussian reference moments
//!   and the moment report.
//! - [`bounds`]: the moment-level and MGF-level error envelopes.
//! - [`montecarlo`]: Haar sampling, empirical moments, characteristic function
//!   and histograms.
//! - [`cli`]: the `orbit-energy` command line front end.

pub mod bounds;
pub mod cli;
pub mod error;
pub mod moments;
pub mod montecarlo;
pub mod perm_comb;
pub mod spectral;
pub mod weingarten;

pub use error::{Error, Result};
pub use moments::{MomentReport, MomentRow};
pub use montecarlo::{Histogram, SampleRun};
pub use perm_comb::{CycleType, Permutation};
pub use spectral::{CenteredSpectrum, HamiltonianSpectrum, StateSpectrum};
pub use weingarten::WeingartenTable;
