//! Error types shared across the crate.

use thiserror::Error;

/// Errors from the geometric kernel.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeomError {
    /// Two sites coincide with equal weights: the bisector is the whole
    /// plane. Callers must deduplicate before asking for a bisector.
    #[error("coincident sites {0} and {1} with equal weights")]
    CoincidentSites(usize, usize),
    /// Two intersection roots coincide within tolerance; the caller should
    /// apply the perturbation policy and retry.
    #[error("near-tangent intersection")]
    NearTangency,
    /// A point handed to a curve walk does not lie on the curve.
    #[error("point is not on the curve (residual {0:e})")]
    OffCurve(f64),
    /// Degenerate configuration (e.g. collinear triple) with no closed form;
    /// numeric fallback also failed.
    #[error("degenerate site configuration")]
    Degenerate,
}

/// Errors from half-plane diagram construction and queries.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum VdError {
    #[error("site {0} is not strictly below the reference line (y = {1})")]
    SiteAboveLine(usize, f64),
    #[error("empty input")]
    EmptyInput,
    #[error("query point is below the reference line (y = {0})")]
    QueryBelowLine(f64),
    #[error("non-finite coordinate on site {0}")]
    NonFinite(usize),
    #[error(transparent)]
    Merge(#[from] MergeError),
}

/// Errors from the diagram merge.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum MergeError {
    /// The contour trace found no admissible crossing in the current
    /// sub-regions. Indicates a numeric inconsistency; the caller aborts the
    /// merge and retries with a fresh perturbation.
    #[error("contour trace stalled: {0}")]
    TraceStall(String),
    /// A contour/line root coincides with an l-edge endpoint or another
    /// root within tolerance.
    #[error("degenerate tangency during merge: {0}")]
    DegenerateTangency(String),
}

/// Errors from the nearest-neighbor structures.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum NnError {
    #[error("site {0} is not strictly below the separating line (y = {1})")]
    SiteAboveLine(usize, f64),
    #[error("query point is below the separating line (y = {0})")]
    QueryBelowLine(f64),
    #[error("query on an empty structure")]
    EmptyStructure,
    #[error("query at op {0} precedes any insertion")]
    QueryBeforeAnyInsert(usize),
    #[error(transparent)]
    Vd(#[from] VdError),
}

/// Errors from the shortest-path driver.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum SsspError {
    #[error("source index {0} out of range (n = {1})")]
    UnknownSource(usize, usize),
    #[error("cells are not separated by the chosen axis-parallel line")]
    NotSeparated,
    #[error(transparent)]
    Vd(#[from] VdError),
    #[error(transparent)]
    Nn(#[from] NnError),
}

/// Errors from text-format parsing, with 1-based line numbers.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("line {line}: {msg}")]
pub struct ParseError {
    pub line: usize,
    pub msg: String,
}

impl ParseError {
    pub fn new(line: usize, msg: impl Into<String>) -> Self {
        ParseError { line, msg: msg.into() }
    }
}
