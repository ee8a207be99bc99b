//! Numeric thresholds shared across the crate.
//!
//! Everything here is a plain `f64`/`usize` constant so that tests, the
//! library, and the CLI agree on one set of defaults. Condition-audit
//! thresholds can be overridden per run through
//! [`crate::diagnostics::Thresholds`]; the rest are fixed policy.

/// Relative tolerance for identities that hold in exact arithmetic
/// (telescoping sums, algebraic rewrites of the same quantity).
pub const TOL_ALGEBRAIC: f64 = 1e-12;

/// Relative tolerance for reconstructing a path from its decomposition,
/// where the two sides accumulate rounding differently.
pub const TOL_RECONSTRUCT: f64 = 1e-10;

/// A path whose state magnitude exceeds this is declared divergent; the
/// state is frozen at the first offending step and the step recorded.
pub const DIVERGENCE_GUARD: f64 = 1e12;

/// Observation cap for the branching-process model. Population sizes are
/// frozen at this value so that sums of observations stay finite; the
/// estimator identity is unaffected because it holds for any positive
/// observation sequence.
pub const OBSERVATION_CAP: f64 = 1e300;

/// Largest mean for which the exact (log-space Knuth) Poisson sampler is
/// used; above it a rounded normal approximation takes over.
pub const POISSON_EXACT_MAX_MEAN: f64 = 1e4;

/// Total below which a monitored cumulative sum is treated as identically
/// zero: sums whose terms vanish by design can still pick up isolated
/// rounding crumbs on the order of machine epsilon per step.
pub const NEGLIGIBLE_TOTAL: f64 = 1e-12;

/// Tail share below which a cumulative nonnegative sum is classified as
/// converged: the last decade of the horizon contributes less than this
/// fraction of the total.
pub const FLAT_TAIL_SHARE: f64 = 0.01;

/// Tail share above which a cumulative nonnegative sum is classified as
/// divergent (still growing at the end of the horizon).
pub const DIVERGENT_TAIL_SHARE: f64 = 0.07;

/// Absolute magnitude at which a nondecreasing monitored sum is declared
/// divergent outright, with the crossing step as witness.
pub const HARD_DIVERGENCE_WITNESS: f64 = 1e6;

/// Ratio bounds for the boundedness classifier: the maximum over the last
/// 90% of the horizon is compared with the maximum over an earlier window.
pub const BOUNDED_RATIO: f64 = 1.02;
pub const UNBOUNDED_RATIO: f64 = 1.5;

/// Ratio bounds for the decay classifier (late window versus earlier one).
pub const DECAY_RATIO: f64 = 0.9;
pub const GROWTH_RATIO: f64 = 1.1;

/// Strict-positivity floor for "eventually positive" checks over the final
/// half of a horizon.
pub const EVENTUAL_POSITIVE_FLOOR: f64 = 1e-9;

/// Number of log-spaced samples kept when thinning a monitored trajectory
/// for reports and CSV output.
pub const TRAJECTORY_SAMPLES: usize = 256;

/// Grid of state magnitudes (per sign) used when scanning drift bounds over
/// a compact annulus.
pub const SCAN_POINTS_PER_SIGN: usize = 40;

/// Annulus parameters for infimum-style scans: each `eps` induces the state
/// range `[eps, 1/eps]` scanned log-uniformly on both signs.
pub const SCAN_EPSILONS: [f64; 2] = [0.1, 0.01];
