//! File formats, SVG rendering and the command-line front end for
//! `dcmap-core`.

// negated comparisons reject NaN on purpose
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod format;
pub mod render;
