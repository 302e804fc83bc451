//! Verification harnesses: sparse covers, end-to-end domination, weak-type
//! profiles, off-diagonal integrals and random-grid statistics.

mod cover;
mod domination;
mod goodness_stats;
mod offdiag;
mod random;
mod weak11;

pub use cover::{build_sparse_cover, domination_integral, CoverReport, SparseCover};
pub use domination::{
    domination_study, verify_domination, DominationConfig, DominationReport, DominationStudy,
    FamilySummary, StudyRow,
};
pub use goodness_stats::{goodness_stats, GoodnessStats, GoodnessStatsConfig};
pub use offdiag::{
    offdiag_bound, offdiag_check, offdiag_eta, random_admissible_pairs, OffDiagResult,
};
pub use random::random_pair;
pub use weak11::{weak11_profile, Weak11Row, Weak11Table};
