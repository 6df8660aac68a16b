use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ModelId, ModelSpec};
use crate::posterior::McmcSettings;

/// How `E_X` under the true distribution is evaluated.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TestRule {
    /// A fresh Monte Carlo test set of `test_size` points per replication.
    #[default]
    Mc,
    /// A tensor Gauss-Hermite rule of `hermite_order` nodes per axis.
    Hermite,
}

/// Sampler budget; the inverse temperature comes from the experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct McmcBudget {
    pub n_chains: usize,
    pub burn_in: usize,
    pub kept_per_chain: usize,
    pub thin: usize,
    pub init_jitter: f64,
    pub target_accept: f64,
}

impl Default for McmcBudget {
    fn default() -> Self {
        let d = McmcSettings::default();
        McmcBudget {
            n_chains: d.n_chains,
            burn_in: d.burn_in,
            kept_per_chain: d.kept_per_chain,
            thin: d.thin,
            init_jitter: d.init_jitter,
            target_accept: d.target_accept,
        }
    }
}

fn default_beta() -> f64 {
    1.0
}

fn default_test_size() -> usize {
    10_000
}

fn default_hermite_order() -> usize {
    48
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelId,
    #[serde(default = "default_beta")]
    pub beta: f64,
    pub n_grid: Vec<usize>,
    pub replications: usize,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default = "default_test_size")]
    pub test_size: usize,
    #[serde(default)]
    pub test_rule: TestRule,
    #[serde(default = "default_hermite_order")]
    pub hermite_order: usize,
    #[serde(default)]
    pub use_quadrature_oracle: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quadrature_nodes: Option<usize>,
    #[serde(default)]
    pub mcmc: McmcBudget,
}

impl ExperimentConfig {
    /// Defaults for `model`: the standard n grid with R = 400 replications.
    pub fn defaults_for(model: ModelId) -> Self {
        let n_grid = match model {
            ModelId::NonrenormA => vec![200, 500, 1000, 2000],
            _ => vec![100, 200, 400, 800],
        };
        ExperimentConfig {
            model,
            beta: 1.0,
            n_grid,
            replications: 400,
            master_seed: 0,
            test_size: default_test_size(),
            test_rule: TestRule::Mc,
            hermite_order: default_hermite_order(),
            use_quadrature_oracle: false,
            quadrature_nodes: None,
            mcmc: McmcBudget::default(),
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig =
            toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes to TOML")
    }

    pub fn model_spec(&self) -> ModelSpec {
        ModelSpec::builtin(self.model)
    }

    pub fn mcmc_settings(&self) -> McmcSettings {
        McmcSettings {
            beta: self.beta,
            n_chains: self.mcmc.n_chains,
            burn_in: self.mcmc.burn_in,
            kept_per_chain: self.mcmc.kept_per_chain,
            thin: self.mcmc.thin,
            init_jitter: self.mcmc.init_jitter,
            target_accept: self.mcmc.target_accept,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let field = |name: &str, msg: String| Err(Error::Config(format!("field `{name}`: {msg}")));
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return field(
                "beta",
                format!("must be positive and finite, got {}", self.beta),
            );
        }
        if self.n_grid.is_empty() {
            return field("n_grid", "must not be empty".into());
        }
        if let Some(n) = self.n_grid.iter().find(|&&n| n < 50) {
            return field("n_grid", format!("every n must be >= 50, got {n}"));
        }
        if self.n_grid.windows(2).any(|w| w[0] >= w[1]) {
            return field("n_grid", "must be strictly increasing".into());
        }
        if self.replications < 50 {
            return field(
                "replications",
                format!("must be >= 50, got {}", self.replications),
            );
        }
        if self.test_size == 0 {
            return field("test_size", "must be positive".into());
        }
        if self.hermite_order == 0 {
            return field("hermite_order", "must be positive".into());
        }
        let spec = self.model_spec();
        if self.use_quadrature_oracle && spec.dim_w > 2 {
            return field("use_quadrature_oracle", "only available for d <= 2".into());
        }
        if let Some(k) = self.quadrature_nodes {
            let min = crate::posterior::default_quadrature_nodes(spec.dim_w);
            if k < min {
                return field(
                    "quadrature_nodes",
                    format!("must be >= {min} for this model, got {k}"),
                );
            }
        }
        self.mcmc_settings()
            .validate()
            .or_else(|e| field("mcmc", e.to_string()))
    }
}
