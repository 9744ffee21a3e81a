use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::discovery::DiscoveryModel;
use crate::envs::{BaselineOptions, CrawlerConfig, Exploration, LevelOptions};
use crate::urmax::DiagonalConfig;

/// What runs in each (method, level, seed) cell of the grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// URMAX with a systematic scan of the level's actions.
    BruteForce,
    /// URMAX with uniformly random action probes.
    BruteForceRandom,
    /// URMAX with expert hints.
    Apprenticeship,
    BaselineRandom,
    BaselineRepeat,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::BruteForce => "brute_force",
            Method::BruteForceRandom => "brute_force_random",
            Method::Apprenticeship => "apprenticeship",
            Method::BaselineRandom => "baseline_random",
            Method::BaselineRepeat => "baseline_repeat",
        }
    }

    /// Exploration mode for the URMAX methods.
    pub fn exploration(self, beta: f64) -> Option<Exploration> {
        match self {
            Method::BruteForce => Some(Exploration::Systematic),
            Method::BruteForceRandom => Some(Exploration::Random),
            Method::Apprenticeship => Some(Exploration::Apprenticeship { beta }),
            Method::BaselineRandom | Method::BaselineRepeat => None,
        }
    }
}

impl std::str::FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        [
            Method::BruteForce,
            Method::BruteForceRandom,
            Method::Apprenticeship,
            Method::BaselineRandom,
            Method::BaselineRepeat,
        ]
        .into_iter()
        .find(|m| m.name() == s)
        .ok_or_else(|| format!("unknown method `{s}`"))
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Environment {
    Crawler {
        #[serde(default)]
        crawler: CrawlerConfig,
        #[serde(default)]
        sampling: LevelOptions,
    },
}

impl Default for Environment {
    fn default() -> Self {
        Environment::Crawler { crawler: CrawlerConfig::default(), sampling: LevelOptions::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Budget {
    /// Interactions per (method, level, seed) run.
    pub total: u64,
    /// Interactions per diagonal cell of the URMAX methods.
    pub cell: u64,
}

impl Default for Budget {
    fn default() -> Self {
        Self { total: 20_000, cell: 10_000 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Evaluation {
    /// Steps per evaluation episode, for learners and baselines alike.
    pub horizon: usize,
    /// Episodes per evaluation; unset means `⌈8 ln(2/δ)/ε²⌉`.
    pub runs: Option<usize>,
    pub epsilon: f64,
    pub delta: f64,
    pub planning_sweeps: usize,
}

impl Default for Evaluation {
    fn default() -> Self {
        Self { horizon: 50, runs: None, epsilon: 0.1, delta: 0.1, planning_sweeps: 5_000 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DiscoverySettings {
    /// Hint strength of the apprenticeship method.
    pub apprenticeship_beta: f64,
    /// Model used to size explore budgets for every URMAX method; unset
    /// means each level's own brute-force model (or `beta` for
    /// apprenticeship).
    pub model: Option<DiscoveryModel>,
}

impl Default for DiscoverySettings {
    fn default() -> Self {
        Self { apprenticeship_beta: 0.5, model: None }
    }
}

/// An experiment document. See `docs/config.md`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub environment: Environment,
    #[serde(default)]
    pub discovery: DiscoverySettings,
    pub methods: Vec<Method>,
    pub levels: Vec<usize>,
    #[serde(default)]
    pub budget: Budget,
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub evaluation: Evaluation,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, HarnessError> {
        let cfg: Self = toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::Io(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configs serialize")
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |field: &str, why: String| Err(HarnessError::Field { field: field.to_string(), message: why });
        if self.seeds.is_empty() {
            return bad("seeds", "at least one seed is required".into());
        }
        if self.budget.total == 0 {
            return bad("budget.total", "must be positive".into());
        }
        if self.budget.cell == 0 {
            return bad("budget.cell", "must be positive".into());
        }
        if let Some(&l) = self.levels.iter().find(|&&l| l < 2) {
            return bad("levels", format!("level {l} is below 2"));
        }
        if self.evaluation.horizon == 0 {
            return bad("evaluation.horizon", "must be positive".into());
        }
        if self.evaluation.runs == Some(0) {
            return bad("evaluation.runs", "must be positive".into());
        }
        if !(self.evaluation.epsilon > 0.0) {
            return bad("evaluation.epsilon", "must be positive".into());
        }
        if !(self.evaluation.delta > 0.0 && self.evaluation.delta < 1.0) {
            return bad("evaluation.delta", "must lie in (0, 1)".into());
        }
        if self.evaluation.planning_sweeps == 0 {
            return bad("evaluation.planning_sweeps", "must be positive".into());
        }
        if let Err(e) = (Exploration::Apprenticeship { beta: self.discovery.apprenticeship_beta }).validate() {
            return bad("discovery.apprenticeship_beta", e);
        }
        if let Some(m) = &self.discovery.model {
            if let Err(e) = m.validate() {
                return bad("discovery.model", e.to_string());
            }
        }
        match &self.environment {
            Environment::Crawler { crawler, sampling } => {
                if let Err(e) = crawler.validate() {
                    return bad("environment.crawler", e);
                }
                if sampling.kernel_samples == 0 || sampling.useful_samples == 0 {
                    return bad("environment.sampling", "sample counts must be positive".into());
                }
            }
        }
        Ok(())
    }

    pub fn diagonal(&self) -> DiagonalConfig {
        DiagonalConfig {
            epsilon: self.evaluation.epsilon,
            delta: self.evaluation.delta,
            cell_budget: self.budget.cell,
            eval_runs: self.evaluation.runs,
            eval_horizon: self.evaluation.horizon,
            planning_sweeps: self.evaluation.planning_sweeps,
        }
    }

    pub fn baseline(&self) -> BaselineOptions {
        let goal = match &self.environment {
            Environment::Crawler { crawler, .. } => crawler.arena_radius,
        };
        BaselineOptions { horizon: self.evaluation.horizon, goal }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
methods = ["brute_force", "baseline_repeat"]
levels = [2]
seeds = [1]
"#;

    #[test]
    fn minimal_document_uses_defaults() {
        let cfg = ExperimentConfig::from_toml(MINIMAL).unwrap();
        assert_eq!(cfg.methods, vec![Method::BruteForce, Method::BaselineRepeat]);
        assert_eq!(cfg.environment, Environment::default());
        assert_eq!(cfg.budget, Budget::default());
        let again = ExperimentConfig::from_toml(&cfg.to_toml()).unwrap();
        assert_eq!(again, cfg);
    }

    #[test]
    fn discovery_model_in_toml() {
        let doc = format!("{MINIMAL}\n[discovery.model]\nkind = \"power_law\"\nc = 1.0\np = 1.0\n");
        let cfg = ExperimentConfig::from_toml(&doc).unwrap();
        assert_eq!(cfg.discovery.model, Some(DiscoveryModel::power_law(1.0, 1.0)));
        let bad = doc.replace("c = 1.0", "c = 2.0");
        assert!(ExperimentConfig::from_toml(&bad).unwrap_err().to_string().contains("discovery.model"));
    }

    #[test]
    fn diagnostics_name_the_field() {
        let no_seeds = MINIMAL.replace("seeds = [1]", "seeds = []");
        let err = ExperimentConfig::from_toml(&no_seeds).unwrap_err();
        assert!(err.to_string().contains("seeds"), "{err}");
        let low = MINIMAL.replace("levels = [2]", "levels = [1, 2]");
        assert!(ExperimentConfig::from_toml(&low).unwrap_err().to_string().contains("levels"));
        let env = format!("{MINIMAL}\n[environment]\nkind = \"humanoid\"\n");
        assert!(ExperimentConfig::from_toml(&env).unwrap_err().to_string().contains("humanoid"));
        let typo = format!("{MINIMAL}\n[budget]\ntotl = 5\n");
        assert!(ExperimentConfig::from_toml(&typo).unwrap_err().to_string().contains("totl"));
        let beta = format!("{MINIMAL}\n[discovery]\napprenticeship_beta = 0.0\n");
        assert!(ExperimentConfig::from_toml(&beta).unwrap_err().to_string().contains("apprenticeship_beta"));
    }
}
