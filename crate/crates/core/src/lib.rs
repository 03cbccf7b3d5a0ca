//! Bidding in repeated second-price auctions when the bidder's own value is
//! only revealed on rounds it wins.
//!
//! Strategies: [`UcbidState`] for i.i.d. values, [`ExpTree`] and
//! [`ExpTreeP`] for adversarial sequences, and [`DoublingExpTree`] when the
//! horizon and gap are unknown. [`env`] supplies value and opponent-bid
//! processes, including lower-bound constructions, and [`harness`] runs
//! seeded replications and measures regret.

pub mod auction;
pub mod env;
pub mod exptree;
pub mod harness;
pub mod partition;
pub mod seeding;
pub mod strategy;
pub mod ucbid;

pub use auction::{Bid, Interval, RoundOutcome};
pub use env::Environment;
pub use exptree::{exptree_configure, exptreep_configure, DoublingExpTree, ExpTree, ExpTreeP, ExpTreePParams};
pub use partition::IntervalPartition;
pub use strategy::{ConstantBid, Strategy, StrategyError};
pub use ucbid::UcbidState;
