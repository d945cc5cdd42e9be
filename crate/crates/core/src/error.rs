use alloc::string::String;
use core::fmt;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Error {
    UnsupportedSeries(String),
    RankZero,
    RankTooLarge(usize),
    BadSystemSpec(String),
    InvalidParameter(String),
    BudgetExceeded { cells: usize, budget: usize },
    CellNotInComplex,
    DegreeMismatch { expected: i32, found: i32 },
    HullClipped { cell: usize },
    NotFaceClosed,
    /// A linear system that must be solvable was not.
    Inconsistent(String),
    /// An invariant that holds by construction was observed to fail.
    Internal(String),
    WindowOverflow { index: i64, radius: i64 },
    AxiomViolation(String),
    MissingInclusion { from: usize, to: usize },
    Divergent(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::UnsupportedSeries(s) => write!(f, "unsupported root system series `{s}`"),
            Error::RankZero => write!(f, "root system of rank 0"),
            Error::RankTooLarge(r) => write!(f, "total rank {r} exceeds the supported maximum of 4"),
            Error::BadSystemSpec(s) => write!(f, "cannot parse system spec `{s}`"),
            Error::InvalidParameter(s) => write!(f, "invalid parameter: {s}"),
            Error::BudgetExceeded { cells, budget } => {
                write!(f, "cell budget exceeded: {cells} cells > budget {budget}")
            }
            Error::CellNotInComplex => write!(f, "cell is not part of the complex"),
            Error::DegreeMismatch { expected, found } => {
                write!(f, "chain degree mismatch: expected {expected}, found {found}")
            }
            Error::HullClipped { cell } => {
                write!(f, "hull of cell {cell} is clipped by the truncation radius")
            }
            Error::NotFaceClosed => write!(f, "cell set is not face-closed"),
            Error::Inconsistent(s) => write!(f, "inconsistent linear system: {s}"),
            Error::Internal(s) => write!(f, "internal invariant violated: {s}"),
            Error::WindowOverflow { index, radius } => {
                write!(f, "index {index} leaves the window [-{radius}, {radius}]")
            }
            Error::AxiomViolation(s) => write!(f, "finite model axiom violated: {s}"),
            Error::MissingInclusion { from, to } => {
                write!(f, "no inclusion from the space at cell {from} into cell {to}")
            }
            Error::Divergent(s) => write!(f, "orbit sum diverges: {s}"),
        }
    }
}

pub type Result<T> = core::result::Result<T, Error>;

impl core::error::Error for Error {}
