//! TOML run configuration.
//!
//! ```toml
//! fixture = "two-level"   # one of the bundled fixtures
//! seed = 7                # optional, default 0; --seed overrides it
//! dump_at = ["2", "3/1"]  # optional state dump ticks
//!
//! [params]                # optional fixture knobs
//! agents = 3
//!
//! [[levels]]              # optional: replaces the fixture's time models
//! name = "A"
//! ticks = [0, 1, 2, 3, 4] # integers or "num/den" strings
//!
//! [[levels]]
//! name = "B"
//! start = 0               # or a periodic model
//! step = 2
//! end = 4
//!
//! [graphs]                # optional: replaces the complete graphs
//! perception = [["A", "A"], ["A", "B"], ["B", "B"]]
//! influence = [["A", "B"], ["B", "A"], ["B", "B"]]
//! ```

use std::path::Path;

use serde::Deserialize;
use thiserror::Error;

use crate::models::{build_fixture, Fixture, FixtureError, FixtureParams};
use crate::state::LevelId;
use crate::time::{LevelTimeModel, TimeError, Timestamp};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid level {name}: {msg}")]
    Level { name: String, msg: String },
    #[error(transparent)]
    Fixture(#[from] FixtureError),
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    pub agents: Option<usize>,
    pub ticks: Option<u32>,
    pub total: Option<i64>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LevelConfig {
    pub name: String,
    pub ticks: Option<Vec<Timestamp>>,
    pub start: Option<Timestamp>,
    pub step: Option<Timestamp>,
    pub end: Option<Timestamp>,
}

impl LevelConfig {
    pub fn time_model(&self) -> Result<LevelTimeModel, ConfigError> {
        let bad = |msg: String| ConfigError::Level {
            name: self.name.clone(),
            msg,
        };
        let level = LevelId::from(self.name.as_str());
        let model = match (&self.ticks, self.start, self.step, self.end) {
            (Some(ticks), None, None, None) => LevelTimeModel::new(level, ticks.clone()),
            (None, Some(start), Some(step), Some(end)) => LevelTimeModel::periodic(level, start, step, end),
            _ => return Err(bad("give either `ticks` or all of `start`, `step`, `end`".into())),
        };
        model.map_err(|e: TimeError| bad(e.to_string()))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphsConfig {
    pub perception: Option<Vec<(String, String)>>,
    pub influence: Option<Vec<(String, String)>>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub fixture: String,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub dump_at: Vec<Timestamp>,
    #[serde(default)]
    pub params: Params,
    #[serde(default)]
    pub levels: Vec<LevelConfig>,
    #[serde(default)]
    pub graphs: GraphsConfig,
}

fn edges(list: &Option<Vec<(String, String)>>) -> Option<Vec<(LevelId, LevelId)>> {
    list.as_ref().map(|l| {
        l.iter()
            .map(|(a, b)| (LevelId::from(a.as_str()), LevelId::from(b.as_str())))
            .collect()
    })
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text)
    }

    pub fn fixture_params(&self) -> Result<FixtureParams, ConfigError> {
        let time_models = if self.levels.is_empty() {
            None
        } else {
            Some(self.levels.iter().map(LevelConfig::time_model).collect::<Result<_, _>>()?)
        };
        Ok(FixtureParams {
            agents: self.params.agents,
            ticks: self.params.ticks,
            total: self.params.total,
            time_models,
            perception: edges(&self.graphs.perception),
            influence: edges(&self.graphs.influence),
        })
    }

    /// The configured fixture, seeded.
    pub fn build(&self) -> Result<Fixture, ConfigError> {
        let mut fixture = build_fixture(&self.fixture, &self.fixture_params()?)?;
        fixture.set_seed(self.seed);
        Ok(fixture)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn documented_example_parses() {
        let text = r#"
            fixture = "two-level"
            seed = 7
            dump_at = ["2", 3]
            [params]
            agents = 3
            [[levels]]
            name = "A"
            ticks = [0, 1, "3/2", 2, 3, 4]
            [[levels]]
            name = "B"
            start = 0
            step = 2
            end = 4
            [graphs]
            perception = [["A", "A"], ["A", "B"], ["B", "B"]]
            influence = [["A", "B"], ["B", "B"]]
        "#;
        let cfg = RunConfig::parse(text).unwrap();
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.dump_at, vec![Timestamp::from_integer(2), Timestamp::from_integer(3)]);
        let fixture = cfg.build().unwrap();
        assert_eq!(fixture.time().ticks().len(), 6);
    }

    #[test]
    fn rejects_half_periodic_levels_and_unknown_keys() {
        let cfg = RunConfig::parse("fixture = \"two-level\"\n[[levels]]\nname = \"A\"\nstart = 0\n").unwrap();
        assert!(matches!(cfg.build(), Err(ConfigError::Level { .. })));
        assert!(RunConfig::parse("fixture = \"x\"\ncolour = 1\n").is_err());
    }
}
