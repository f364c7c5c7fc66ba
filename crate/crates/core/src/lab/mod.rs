//! Verification harness: test Hamiltonians, orbit catalogs, index windows
//! and the theorem inequalities on the shipped models.
//!
//! Nothing here computes Floer homology. Special orbits are found by
//! enumeration and window filtering, and displacement energies are
//! configured constants that every report flags as such.

pub mod catalog;
pub mod checks;
pub mod fuzz;
pub mod profile;
pub mod report;

pub use catalog::{catalog_csv, closed_form_action, direct_action, orbit_catalog, orbit_mean_index, plot_data_csv, OrbitRecord};
pub use checks::{
    lemma33_report, lemma35_band_check, prop31_check, prop31_report, prop32_report, theorem_bounds_check,
    Prop31Result,
};
pub use fuzz::{admissible_cz_count, lemma33_fuzz, prop32_window_check, WindowSummary};
pub use profile::{build_profile, neighbourhood_energy, Band, TestHamiltonianProfile};
pub use report::{ExperimentReport, REPORT_SCHEMA};
