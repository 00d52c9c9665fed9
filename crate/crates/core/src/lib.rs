//! Structural model of the Aurora exascale system: dragonfly fabric
//! generation and validation, bandwidth metrics, routing, an alpha-beta-gamma
//! collective cost model, node and storage arithmetic, and a reproduction
//! report against published figures.

pub mod cli;
pub mod config;
pub mod metrics;
pub mod node;
pub mod perfmodel;
pub mod reference;
pub mod report;
pub mod routing;
pub mod storage;
pub mod topology;
pub mod units;
