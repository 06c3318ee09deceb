//! Exact concordant monotone correlation (CMC) of finite joint distributions
//! over partially ordered alphabets.
//!
//! The crate is organised bottom-up:
//!
//! - [`order`]: finite posets, reverse/product orders, monotonicity, merge partitions
//! - [`dist`]: joint pmfs, marginals, merged and product pmfs, moments
//! - [`classic`]: Pearson, Spearman, Kendall tau-b and comparator-based rank correlation
//! - [`maxcorr`]: Witsenhausen matrix, its SVD, maximal correlation
//! - [`engine`]: exact CMC by merge enumeration, order reversal, MGF lower bound
//! - [`oracle`]: independent grid/best-response reference computation
//! - [`harness`]: seeded verification suites for the structural properties

// `!(a <= b)` is used on purpose so NaN fails the check
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod classic;
pub mod dist;
pub mod engine;
pub mod error;
pub mod harness;
pub mod maxcorr;
pub mod oracle;
pub mod order;

pub use dist::{CorrelationReport, JointPmf, ScoredPair};
pub use engine::{cmc_exact, cmc_plus, cmc_x_reversed, CmcMode, CmcOptions};
pub use error::{Error, Result};
pub use order::{OrderKind, Poset};
