//! Click-efficiency ranking under a cascade click model.
//!
//! A user scans a ranked list top-down. At each entity they click with
//! probability `C`, abandon with probability `γ`, or move on. Ranking by
//! `U·C/(C+γ)` maximizes expected utility; the same score drives an ad
//! auction whose equilibrium matches VCG revenue. [`diversity`] adds
//! residual utilities for near-duplicate results.

pub mod checks;
pub mod cli;
pub mod diversity;
pub mod equilibrium;
pub mod error;
pub mod mechanism;
pub mod model;
pub mod ranking;
pub mod scenario;
pub mod simulator;

pub use error::{Error, Result};
pub use mechanism::{Advertiser, AuctionOutcome, BidVector, Mechanism};
pub use model::{expected_utility, ClickParams, Entity, Ranking, UtilityReport};
pub use ranking::{rank_by_ce, rank_by_variant, RankingVariant};
