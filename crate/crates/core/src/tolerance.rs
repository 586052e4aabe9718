//! Numerical tolerances shared by every module.

/// The tolerance record consulted by validity checks across the crate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Unitarity, Hermiticity and trace checks on constructed objects.
    pub structural: f64,
    /// Exact algebraic identities (tensor/adjoint laws, block structure).
    pub algebraic: f64,
    /// Trace preservation of Kraus lists and reconstructed channels.
    pub channel: f64,
    /// Allowed negative eigenvalue of a state or a positive operator.
    pub positivity: f64,
}

pub const TOLERANCES: Tolerances = Tolerances {
    structural: 1e-10,
    algebraic: 1e-12,
    channel: 1e-8,
    positivity: 1e-9,
};
