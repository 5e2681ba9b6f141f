//! Tests of mutual independence for high-dimensional data.
//!
//! Two families of statistics are computed from the off-diagonal entries of
//! the sample covariance matrix and of the Spearman rank correlation
//! matrix: sums of squares (`S_n`, `T_n`), which detect many small
//! dependencies, and maxima (`L_n`, `M_n`), which detect a few strong ones.
//! Because the sum and the maximum are asymptotically independent, their
//! normalized values can be added; the combined tests compare the sum with
//! a quantile of the convolution of the normal law and the intermediate
//! extreme-value law.

// `!(x >= 0.0)` is how input checks reject NaN along with negatives.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod data;
pub mod empirical;
pub mod error;
pub mod limits;
pub mod normalization;
pub mod quadrature;
pub mod rng;
pub mod simulation;
pub mod statistics;
pub mod testing;

pub use data::{column_moments, load_matrix, standardize, ColumnMoments, DataMatrix};
pub use error::{Error, Result};
pub use statistics::{compute_ranks, quartet, RankMatrix, StatisticQuartet};
