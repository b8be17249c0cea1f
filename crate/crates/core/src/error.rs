use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("denominator has no coefficients")]
    EmptyDenominator,
    #[error("leading denominator coefficient is zero")]
    ZeroLeadingCoefficient,
    #[error("coefficient is not finite")]
    NonFiniteCoefficient,
    #[error("denominator vanishes on the imaginary axis at omega = {omega} rad/s")]
    PoleOnImaginaryAxis { omega: f64 },
    #[error("feedback denominator is identically zero")]
    DegenerateLoop,
    #[error("numerical failure: {0}")]
    NumericalFailure(String),
    #[error("transfer function is improper (numerator degree {num} > denominator degree {den})")]
    ImproperSystem { num: usize, den: usize },
    #[error("step {dt} s exceeds the limit {max} s set by the fastest pole/zero")]
    StepTooLarge { dt: f64, max: f64 },
    #[error("frequency grid too coarse: {per_decade:.1} points per decade (need {required})")]
    GridTooCoarse { per_decade: f64, required: f64 },
    #[error("no resonance peaks found in band")]
    NoPeaksFound,
    #[error("every scenario was excluded from the design set")]
    AllScenariosExcluded,
    #[error("plant is unstable (max pole real part {max_re})")]
    UnstablePlant { max_re: f64 },
    #[error("invariant violated: {0}")]
    InvariantViolation(String),
    #[error("design set is empty")]
    EmptyDesignSet,
    #[error("frequency grid is empty")]
    EmptyGrid,
    #[error("no restart produced a feasible compensator")]
    NoFeasiblePoint,
    #[error("damping ratio undefined for a pole at the origin")]
    ZeroPole,
    #[error("mode residue system is singular")]
    UnsolvableResidue,
    #[error("modes overlap: {0}")]
    ModeOverlap(String),
    #[error("mode list is empty")]
    EmptyModes,
    #[error("parse error: {0}")]
    ParseError(String),
    #[error("unknown format `{0}`")]
    UnknownFormat(String),
    #[error("unknown {kind} `{name}` (available: {available})")]
    UnknownStrategy {
        kind: &'static str,
        name: String,
        available: String,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
