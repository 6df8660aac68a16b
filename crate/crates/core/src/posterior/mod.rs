//! Tempered posteriors `prod_i p(X_i|w)^beta phi(w) / Z`.
//!
//! Two representations: Metropolis draws ([`PosteriorDraws`]) and a
//! normalized grid over the parameter box ([`QuadratureGrid`]). Both reduce to
//! a weighted set of atoms ([`PosteriorAtoms`]) for the observables.

pub mod diagnostics;
mod mcmc;
mod quadrature;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use mcmc::{run_mcmc, sample_chains};
pub use quadrature::{
    default_nodes as default_quadrature_nodes, run_quadrature, run_quadrature_with, QuadratureGrid,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McmcSettings {
    /// Inverse temperature applied to the likelihood.
    pub beta: f64,
    pub n_chains: usize,
    pub burn_in: usize,
    pub kept_per_chain: usize,
    pub thin: usize,
    /// Half-width of the uniform jitter added to the optimum at start.
    pub init_jitter: f64,
    pub target_accept: f64,
}

impl Default for McmcSettings {
    fn default() -> Self {
        McmcSettings {
            beta: 1.0,
            n_chains: 4,
            burn_in: 5000,
            kept_per_chain: 2500,
            thin: 4,
            init_jitter: 0.1,
            target_accept: 0.35,
        }
    }
}

impl McmcSettings {
    pub fn with_beta(beta: f64) -> Self {
        McmcSettings {
            beta,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Invalid(m));
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return bad(format!(
                "beta must be positive and finite, got {}",
                self.beta
            ));
        }
        if self.n_chains < 2 {
            return bad(format!("n_chains must be >= 2, got {}", self.n_chains));
        }
        if self.thin < 1 {
            return bad("thin must be >= 1".into());
        }
        if self.kept_per_chain < 4 || self.kept_per_chain * self.n_chains < 500 {
            return bad(format!(
                "kept_per_chain * n_chains must be >= 500, got {} * {}",
                self.kept_per_chain, self.n_chains
            ));
        }
        if !(self.init_jitter >= 0.0) {
            return bad("init_jitter must be non-negative".into());
        }
        if !(self.target_accept > 0.0 && self.target_accept < 1.0) {
            return bad(format!(
                "target_accept must lie in (0,1), got {}",
                self.target_accept
            ));
        }
        Ok(())
    }

    /// Same settings with burn-in and kept draws doubled.
    pub fn doubled(&self) -> Self {
        McmcSettings {
            burn_in: self.burn_in * 2,
            kept_per_chain: self.kept_per_chain * 2,
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    /// Post-burn-in acceptance rate of each chain.
    pub accept_rate: Vec<f64>,
    /// Frozen proposal scale of each chain.
    pub step_size: Vec<f64>,
    /// Pooled effective sample size per coordinate.
    pub ess: Vec<f64>,
    /// Split-chain R-hat per coordinate.
    pub rhat: Vec<f64>,
}

impl Diagnostics {
    pub fn min_ess(&self) -> f64 {
        self.ess.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_rhat(&self) -> f64 {
        self.rhat.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn mean_accept_rate(&self) -> f64 {
        self.accept_rate.iter().sum::<f64>() / self.accept_rate.len() as f64
    }

    pub fn mixed(&self) -> bool {
        self.min_ess() >= 100.0 && self.max_rhat() <= 1.1
    }
}

/// Kept Metropolis draws, stored chain-major.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorDraws {
    pub(crate) dim: usize,
    pub(crate) n_chains: usize,
    pub(crate) per_chain: usize,
    pub(crate) values: Vec<f64>,
    pub beta: f64,
    pub diagnostics: Diagnostics,
}

impl PosteriorDraws {
    pub fn len(&self) -> usize {
        self.n_chains * self.per_chain
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_chains(&self) -> usize {
        self.n_chains
    }

    pub fn per_chain(&self) -> usize {
        self.per_chain
    }

    pub fn draw(&self, s: usize) -> &[f64] {
        &self.values[s * self.dim..(s + 1) * self.dim]
    }

    pub fn draws(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.values.chunks_exact(self.dim)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Mean of `g` over draws.
    pub fn expect(&self, mut g: impl FnMut(&[f64]) -> f64) -> f64 {
        self.draws().map(&mut g).sum::<f64>() / self.len() as f64
    }

    /// Splits a per-draw series (length `len()`, chain-major) into chains.
    pub fn chains_of<'a>(&self, series: &'a [f64]) -> Vec<&'a [f64]> {
        assert_eq!(series.len(), self.len());
        series.chunks_exact(self.per_chain).collect()
    }

    /// Monte Carlo standard error of the mean of a per-draw series, using
    /// the pooled effective sample size of that series.
    pub fn mcse(&self, series: &[f64]) -> f64 {
        let chains = self.chains_of(series);
        let ess = diagnostics::effective_sample_size(&chains);
        let n = series.len() as f64;
        let m = series.iter().sum::<f64>() / n;
        let var = series.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1.0);
        (var / ess).sqrt()
    }
}

/// A posterior as a finite weighted set of parameter atoms.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorAtoms {
    pub(crate) dim: usize,
    pub(crate) params: Vec<f64>,
    /// Normalized weights, summing to one.
    pub(crate) weights: Vec<f64>,
    /// True when atoms are equally weighted Monte Carlo draws; sample
    /// variances then use the `S - 1` denominator.
    pub(crate) sampled: bool,
}

impl PosteriorAtoms {
    /// Equally weighted atoms, e.g. draws from any sampler.
    pub fn from_draws(dim: usize, params: Vec<f64>) -> Result<Self> {
        if dim == 0 || params.is_empty() || !params.len().is_multiple_of(dim) {
            return Err(Error::Invalid(
                "draws must be a non-empty multiple of dim".into(),
            ));
        }
        let s = params.len() / dim;
        Ok(PosteriorAtoms {
            dim,
            params,
            weights: vec![1.0 / s as f64; s],
            sampled: true,
        })
    }

    /// Weighted atoms; weights are renormalized.
    pub fn weighted(dim: usize, params: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if dim == 0 || params.len() != weights.len() * dim || weights.is_empty() {
            return Err(Error::Invalid("atom and weight counts disagree".into()));
        }
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) || weights.iter().any(|w| *w < 0.0 || !w.is_finite()) {
            return Err(Error::Invalid(
                "weights must be finite, non-negative, not all zero".into(),
            ));
        }
        Ok(PosteriorAtoms {
            dim,
            params,
            weights: weights.iter().map(|w| w / total).collect(),
            sampled: false,
        })
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_sampled(&self) -> bool {
        self.sampled
    }

    pub fn atom(&self, s: usize) -> &[f64] {
        &self.params[s * self.dim..(s + 1) * self.dim]
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[f64], f64)> + '_ {
        self.params
            .chunks_exact(self.dim)
            .zip(self.weights.iter().copied())
    }

    pub fn expect(&self, mut g: impl FnMut(&[f64]) -> f64) -> f64 {
        self.iter().map(|(w, p)| p * g(w)).sum()
    }

    /// Kish effective number of atoms, `1 / sum p^2`.
    pub fn effective_size(&self) -> f64 {
        1.0 / self.weights.iter().map(|p| p * p).sum::<f64>()
    }
}

impl From<&PosteriorDraws> for PosteriorAtoms {
    fn from(d: &PosteriorDraws) -> Self {
        PosteriorAtoms {
            dim: d.dim,
            params: d.values.clone(),
            weights: vec![1.0 / d.len() as f64; d.len()],
            sampled: true,
        }
    }
}

/// Either posterior representation.
#[derive(Debug, Clone, PartialEq)]
pub enum Posterior {
    Draws(PosteriorDraws),
    Grid(QuadratureGrid),
}

impl Posterior {
    /// Posterior expectation of `g`: a draw average or a weighted grid sum.
    pub fn expect(&self, g: impl FnMut(&[f64]) -> f64) -> f64 {
        match self {
            Posterior::Draws(d) => d.expect(g),
            Posterior::Grid(q) => q.expect(g),
        }
    }

    pub fn atoms(&self) -> PosteriorAtoms {
        match self {
            Posterior::Draws(d) => d.into(),
            Posterior::Grid(q) => q.atoms(),
        }
    }

    pub fn beta(&self) -> f64 {
        match self {
            Posterior::Draws(d) => d.beta,
            Posterior::Grid(q) => q.beta,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn settings_validation() {
        assert!(McmcSettings::default().validate().is_ok());
        let s = McmcSettings {
            n_chains: 1,
            ..Default::default()
        };
        assert!(s.validate().is_err());
        let s = McmcSettings {
            kept_per_chain: 100,
            ..Default::default()
        };
        assert!(s.validate().is_err());
        let s = McmcSettings {
            thin: 0,
            ..Default::default()
        };
        assert!(s.validate().is_err());
        assert!(McmcSettings::with_beta(0.0).validate().is_err());
        let d = McmcSettings::default().doubled();
        assert_eq!((d.burn_in, d.kept_per_chain), (10_000, 5000));
    }

    #[test]
    fn atoms_expectations() {
        let a = PosteriorAtoms::weighted(1, vec![0.0, 1.0, 2.0], vec![1.0, 2.0, 1.0]).unwrap();
        assert_eq!(a.expect(|_| 1.0), 1.0);
        assert_eq!(a.expect(|w| w[0]), 1.0);
        assert!((a.effective_size() - 16.0 / 6.0).abs() < 1e-12);
        assert!(PosteriorAtoms::weighted(1, vec![0.0], vec![-1.0]).is_err());
        let d = PosteriorAtoms::from_draws(2, vec![0.0, 1.0, 2.0, 3.0]).unwrap();
        assert_eq!(d.len(), 2);
        assert_eq!(d.expect(|w| w[1]), 2.0);
    }
}
