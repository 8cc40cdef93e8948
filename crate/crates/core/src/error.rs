use core::fmt;

use crate::lattice::LatticeIndex;
use crate::radii::SublatticeLabel;

/// Lattice axis along which a boundary value is propagated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    /// `f(n, 0)`
    N,
    /// `f(0, m)`
    M,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A parameter is outside its admissible range.
    InvalidParameter(&'static str),
    /// More than one argument sits at the point at infinity.
    MultipleInfinities,
    /// A quadrilateral is too degenerate for the cross-ratio to be defined
    /// or solved. `index` is the lower-left lattice index when known.
    DegenerateQuad { index: Option<LatticeIndex> },
    /// The constraint cannot be solved for the next axis value.
    SingularStep { axis: Axis, n: usize },
    /// An edge of the source lattice has (numerically) zero length.
    ZeroEdge {
        from: LatticeIndex,
        to: LatticeIndex,
    },
    /// The dual edge sums depend on the integration path.
    InconsistentDual { index: LatticeIndex, defect: f64 },
    /// The edges at a circle center do not share a common length.
    EquiViolation { label: SublatticeLabel, spread: f64 },
    /// A label needed by a stencil is absent from the field.
    MissingNeighbor(SublatticeLabel),
    /// The circle at this label is a straight line (infinite radius).
    LineCircle(SublatticeLabel),
    /// The unitary branch of discrete Painlevé II was lost.
    BranchLoss { n: usize, alpha: f64, drift: f64 },
    /// Not enough samples for an asymptotic analysis.
    InsufficientData { needed: usize, available: usize },
    /// Index outside the generated lattice.
    OutOfRange(LatticeIndex),
    /// A vertex needed by the operation is the point at infinity.
    InfiniteVertex(LatticeIndex),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidParameter(what) => write!(f, "invalid parameter: {what}"),
            Error::MultipleInfinities => f.write_str("more than one argument at infinity"),
            Error::DegenerateQuad { index: Some(i) } => {
                write!(f, "degenerate quadrilateral at ({}, {})", i.n, i.m)
            }
            Error::DegenerateQuad { index: None } => f.write_str("degenerate quadrilateral"),
            Error::SingularStep { axis, n } => {
                write!(f, "singular constraint step along {axis:?} axis at n = {n}")
            }
            Error::ZeroEdge { from, to } => write!(
                f,
                "zero-length edge ({}, {}) -> ({}, {})",
                from.n, from.m, to.n, to.m
            ),
            Error::InconsistentDual { index, defect } => write!(
                f,
                "dual edge sums are path dependent at ({}, {}) (defect {defect:e})",
                index.n, index.m
            ),
            Error::EquiViolation { label, spread } => write!(
                f,
                "edge lengths disagree at label {label} (relative spread {spread:e})"
            ),
            Error::MissingNeighbor(label) => {
                write!(f, "missing neighbor label {label}")
            }
            Error::LineCircle(label) => write!(f, "circle {label} is a straight line"),
            Error::BranchLoss { n, alpha, drift } => write!(
                f,
                "lost the unitary branch at n = {n} (alpha = {alpha}, drift = {drift:e})"
            ),
            Error::InsufficientData { needed, available } => {
                write!(f, "insufficient data: need {needed}, have {available}")
            }
            Error::OutOfRange(i) => write!(f, "index ({}, {}) outside the lattice", i.n, i.m),
            Error::InfiniteVertex(i) => write!(f, "vertex ({}, {}) is at infinity", i.n, i.m),
        }
    }
}

impl core::error::Error for Error {}

pub type Result<T> = core::result::Result<T, Error>;
