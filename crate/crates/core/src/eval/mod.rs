//! Minutiae correspondence, detection-rate metrics, threshold sweeps and
//! the Tversky agreement measure between enhanced images.

mod hungarian;
mod matching;
mod metrics;
mod sweep;
mod tversky;

pub use matching::{admissible, match_minutiae, match_minutiae_with, Assignment, MatchCriteria, Matching, TypeMode};
pub use metrics::{exclude_boundary, prf1, Counts, EvalReport};
pub use sweep::{parse_values, sweep, sweep_csv, SweepAxis, SweepPoint};
pub use tversky::{tversky_from_parts, tversky_loss, tversky_parts, tversky_similarity, TverskyParams, TverskyParts};
