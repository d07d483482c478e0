//! Estimators, certificates and experiments over constructed families.
//!
//! Every experiment returns an [`ExperimentReport`]: scalars, indexed series
//! and named verdicts, each tied to a declared tolerance. Reports serialize to
//! versioned JSON and to one CSV file per series.

mod fourier;
mod mass;
mod region;
mod report;
mod resonance;
mod sharpness;
mod sparsity;
mod suites;

pub use fourier::{
    fourier_decay_profile, hoeffding_envelope, increment_concentration, increment_sup, DecaySpec, IncrementSup,
    NetSpec,
};
pub use mass::{
    center_schedule, frostman_fit, heavy_core_certificate, inverse_scale_radii, lower_mass_check,
    salem_support_points, support_radius_sq, LowerMassPoints, MassFloor,
};
pub use region::{convex_hull, hull_contains, ExponentRegion, RegionKind};
pub use report::{
    log_log_slope, non_increasing_within, strictly_increasing, ExperimentReport, Verdict, REPORT_SCHEMA,
};
pub use resonance::{
    bohr_points, energy_series, in_resonance_set, resonance_check, resonance_closed_form, tent, wn_vn_energy,
    BohrSet,
};
pub use sharpness::{
    conv_sharpness_geometric, conv_sharpness_nongeometric, resonance_interval_measure,
    restriction_experiment_geometric, restriction_experiment_nongeometric, unit_ball_volume,
};
pub use sparsity::sparsity_certificate;
pub use suites::{
    factorization_report, restriction_geo_suite, run_experiment, verify_suite, ExperimentKind, ExperimentSpec, BOHR_C,
    ENERGY_C, ENERGY_GRID,
};
