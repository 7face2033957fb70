//! Experiment driver for semantic MOEA/D-GP: configuration, repeated runs,
//! result files and plots.

pub mod campaign;
pub mod config;
pub mod svg;

pub use campaign::{run_campaign, run_campaign_on, CampaignError, CampaignSummary, PairSummary, RunStats};
pub use config::{parse_config, ConfigError, ExperimentConfig, Method, Overrides, SemanticSetting};
pub use svg::emit_svg_scatter;
