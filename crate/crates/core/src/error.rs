use thiserror::Error;

/// Errors surfaced by the numerical core.
///
/// Geometry construction and support-fitting failures are separated from
/// ordinary invalid-input errors so callers can map them to a distinct
/// process exit code.
#[derive(Debug, Error)]
pub enum CoreError {
    /// A lattice geometry violates a construction rule.
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    /// Two operands live on different geometries.
    #[error("geometry mismatch: {left} vs {right}")]
    GeometryMismatch { left: String, right: String },

    /// A requested family member does not fit on any admissible lattice,
    /// or the supplied lattice is too small for it.  The message names the
    /// minimal adequate geometry.
    #[error("unresolvable support: {0}")]
    UnresolvableSupport(String),

    /// A homogeneous symbol with negative exponent was hit on its zero set
    /// by nonzero coefficient mass.
    #[error("singular symbol: {0}")]
    SingularSymbol(String),

    /// An estimate quotient with vanishing right-hand side.
    #[error("undefined quotient: right-hand side product norm is zero")]
    UndefinedQuotient,

    /// Frequency support too close to the band edge for an operation that
    /// requires alias-free sums.
    #[error("aliasing: {0}")]
    Aliasing(String),

    /// Operation defined only for one storage kind (e.g. transforms need
    /// dense fields).
    #[error("invalid operation: {0}")]
    InvalidOperation(String),

    /// A probe that needs converged solves observed divergence.
    #[error("probe aborted: {0}")]
    ProbeAborted(String),

    /// Malformed experiment input (bad parameter combination, empty lists,
    /// unknown identifiers).
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

impl CoreError {
    /// True for errors that denote an unusable or unbuildable lattice.
    pub fn is_geometry(&self) -> bool {
        matches!(
            self,
            CoreError::InvalidGeometry(_)
                | CoreError::GeometryMismatch { .. }
                | CoreError::UnresolvableSupport(_)
        )
    }
}
