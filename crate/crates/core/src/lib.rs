//! Model-free price bounds and static-arbitrage detection for multi-asset
//! derivatives, via (survival) quasi-copulas constrained by market prices.

pub mod arbitrage;
pub mod cli;
pub mod error;
pub mod marginals;
pub mod optimize;
pub mod oracle;
pub mod pricing;
pub mod quasicopula;
pub mod root;
pub mod spec_file;
pub mod special;

pub use error::{Error, Result};
