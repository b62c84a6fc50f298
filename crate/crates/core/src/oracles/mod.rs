//! Independent brute-force and Monte Carlo checks of the combinatorial,
//! approximation, complexity and structural results the bounds rest on.

mod combinatorics;
mod cones;
mod covering;
mod equivalence;
mod maurey;
mod pointwise;
mod rademacher;
mod report;

pub use combinatorics::{lemma1_exact, lemma2_exact, Lemma1Result, Lemma2Result, ENUMERATION_LIMIT};
pub use cones::{collinearity_report, sign_pattern_groups, CollinearityOptions, CollinearityReport, GroupCosine};
pub use covering::{ball_grid, covering_packing_lower_bound, CoveringResult};
pub use equivalence::{equivalence_check_relu, EquivalenceReport, EquivalenceRow, EQUIVALENCE_TOL};
pub use maurey::{maurey_sampling_check, MaureyResult};
pub use pointwise::{pointwise_norm_check, PointwiseResult, POINTWISE_TOL};
pub use rademacher::{rademacher_mc, RademacherConfig, RademacherEstimate};
pub use report::OracleReport;
