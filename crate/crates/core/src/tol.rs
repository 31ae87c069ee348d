/// Numerical thresholds shared by every analysis.
///
/// The defaults target double precision on desk-sized systems (state
/// dimension up to a few dozen, polynomial degree up to ~20).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Relative singular-value threshold for rank, null-space and GCD decisions.
    pub rank: f64,
    /// Eigenvalues closer than this (absolute) are treated as one pole.
    pub cluster: f64,
    /// `Re λ >= -rhp` counts as the closed right half-plane.
    pub rhp: f64,
    /// A matrix is Hurwitz when its spectral abscissa is below `-hurwitz`.
    pub hurwitz: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            rank: 1e-8,
            cluster: 1e-6,
            rhp: 1e-7,
            hurwitz: 1e-9,
        }
    }
}

impl Tolerances {
    /// Defaults with the rank/GCD threshold overridden.
    pub fn with_rank(rank: f64) -> Self {
        Self {
            rank,
            ..Self::default()
        }
    }

    pub fn in_closed_rhp(&self, lambda: crate::C64) -> bool {
        lambda.re >= -self.rhp
    }
}
