//! The arena crawler, its discretization ladder and two baseline learners.
//!
//! The crawler is a closed-form stand-in for a walking robot: joints swing
//! to target angles, backward swings push the body forward, and a segment
//! that swings too much knocks it over. See `docs/crawler.md`.

mod baselines;
mod crawler;
mod ladder;

use thiserror::Error;

use crate::continuous::ContinuousError;

pub use baselines::{
    baseline_random, baseline_repeat, BaselineOptions, BaselineReport, GaitEnv, RepeatReport, StableGait,
};
pub use crawler::{crawler_dynamics, crawler_reward, Crawler, CrawlerConfig, CrawlerState};
pub use ladder::{
    build_ladder, crawler_resolution, CrawlerLadder, CrawlerLevel, CrawlerLevelEnv, Exploration, LevelOptions,
    LevelSummary,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EnvError {
    #[error("invalid crawler configuration: {0}")]
    Config(String),
    #[error("level {0} is below 2")]
    Level(usize),
    #[error("level {0} has too many potential actions to index")]
    TooManyActions(usize),
    #[error(transparent)]
    Continuous(#[from] ContinuousError),
}
