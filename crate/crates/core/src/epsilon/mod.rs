//! ε-strong simulation of fBM through record-breakers.

pub mod bce;
pub mod bounds;
pub mod ecm;
pub mod measure;
mod params;
mod path;
pub mod search;
pub mod sfbm;

pub use bce::{bce_check, bce_check_with, max_checking_offset, BceReport, Conditioner};
pub use bounds::{
    fbm_holder_certificate, holder_error_bound, holder_norm_dyadic, truncation_level, uniform_error_bound,
};
pub use ecm::{ecm, EcmOutcome, TiltedProposal};
pub use measure::{k_of_nu, sample_g, starting_level, tilt_parameter, z_n, LevelProposal};
pub use params::RecordParams;
pub use path::{is_record_broken, midpoint_deviation, DyadicPath};
pub use search::{slrb, snrb, BreakerLedger, SnrbOutcome};
pub use sfbm::{
    finish, refine_block, refine_tolerance, sfbm, with_holder, EpsilonCertificate, HolderCertificate, RETRY_CAP,
};
