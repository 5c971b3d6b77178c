//! Statistical inference on ranks.
//!
//! - [`ranking`]: integer and fractional ranks with a tie parameter.
//! - [`rankcs`]: bootstrap confidence sets for ranks from estimates and their covariance.
//! - [`multinomcs`]: finite-sample confidence sets for ranks of multinomial category probabilities.
//! - [`rankreg`]: regressions on ranks with standard errors that account for estimated ranks.
//! - [`cli`]: the `rankinfer` command line.

pub mod cli;
pub mod multinomcs;
pub mod numerics;
pub mod rankcs;
pub mod ranking;
pub mod rankreg;
pub mod table;
