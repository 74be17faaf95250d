use core::fmt;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A domain needs at least one dimension.
    EmptyDomain,
    /// `lo >= hi` (or a non-finite bound) on some margin.
    InvalidMargin {
        dim: usize,
        lo: f64,
        hi: f64,
    },
    DimensionOutOfRange {
        dim: usize,
        p: usize,
    },
    /// A split whose cutpoint does not strictly partition the node's current box.
    DegenerateSplit {
        dim: usize,
        cut: f64,
        lo: f64,
        hi: f64,
    },
    DimensionMismatch {
        expected: usize,
        got: usize,
    },
    EmptyEnsemble,
    NonFiniteLeaf,
    PointOutsideDomain {
        dim: usize,
        value: f64,
    },
    /// An interval that is not contained in the support of its marginal.
    OutsideSupport {
        dim: usize,
        lo: f64,
        hi: f64,
    },
    /// Measure margins and ensemble domain margins differ.
    MeasureMismatch {
        dim: usize,
    },
    /// The covariance kernel produced a variance below the rounding tolerance.
    NegativeVariance {
        value: f64,
    },
    EmptyIndexSet,
    DuplicateLevels,
    TooFewCells,
    LengthMismatch {
        left: usize,
        right: usize,
    },
    InvalidRanking,
    EmptyRanking,
    BudgetExceeded {
        cells: u128,
        budget: u128,
    },
    TooFewInputs {
        p: usize,
        p0: usize,
    },
    UnknownFunction,
    EmptyPosterior,
    TooFewSamples {
        n: usize,
        min: usize,
    },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::EmptyDomain => write!(f, "domain must have at least one dimension"),
            Error::InvalidMargin { dim, lo, hi } => {
                write!(
                    f,
                    "invalid margin on dimension {}: [{}, {}]",
                    dim + 1,
                    lo,
                    hi
                )
            }
            Error::DimensionOutOfRange { dim, p } => {
                write!(f, "dimension {} out of range for p = {}", dim + 1, p)
            }
            Error::DegenerateSplit { dim, cut, lo, hi } => write!(
                f,
                "degenerate split: x{} < {} does not partition [{}, {}]",
                dim + 1,
                cut,
                lo,
                hi
            ),
            Error::DimensionMismatch { expected, got } => {
                write!(f, "dimension mismatch: expected {}, got {}", expected, got)
            }
            Error::EmptyEnsemble => write!(f, "ensemble has no trees"),
            Error::NonFiniteLeaf => write!(f, "leaf value is not finite"),
            Error::PointOutsideDomain { dim, value } => {
                write!(f, "x{} = {} lies outside the domain", dim + 1, value)
            }
            Error::OutsideSupport { dim, lo, hi } => write!(
                f,
                "interval [{}, {}] outside the support of marginal {}",
                lo,
                hi,
                dim + 1
            ),
            Error::MeasureMismatch { dim } => {
                write!(
                    f,
                    "measure support differs from domain on dimension {}",
                    dim + 1
                )
            }
            Error::NegativeVariance { value } => {
                write!(f, "negative variance beyond tolerance: {:e}", value)
            }
            Error::EmptyIndexSet => write!(f, "index set must be nonempty"),
            Error::DuplicateLevels => {
                write!(f, "piecewise-constant function has repeated levels")
            }
            Error::TooFewCells => write!(f, "at least two cells are required"),
            Error::LengthMismatch { left, right } => {
                write!(f, "length mismatch: {} != {}", left, right)
            }
            Error::InvalidRanking => write!(f, "not a standard competition ranking"),
            Error::EmptyRanking => write!(f, "ranking input is empty"),
            Error::BudgetExceeded { cells, budget } => {
                write!(f, "grid has {} cells, budget is {}", cells, budget)
            }
            Error::TooFewInputs { p, p0 } => {
                write!(f, "function needs at least {} inputs, got {}", p0, p)
            }
            Error::UnknownFunction => write!(f, "unknown test function"),
            Error::EmptyPosterior => write!(f, "posterior has no draws"),
            Error::TooFewSamples { n, min } => {
                write!(f, "{} samples requested, at least {} required", n, min)
            }
        }
    }
}

impl core::error::Error for Error {}
