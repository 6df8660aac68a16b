use crate::error::{Error, Result};
use crate::model::{Dataset, ModelSpec};
use crate::numeric::log_sum_exp;

use super::PosteriorAtoms;

/// Atoms whose normalized weight falls below `exp(PRUNE_LOG)` times the
/// largest weight are dropped by [`QuadratureGrid::atoms`].
const PRUNE_LOG: f64 = -46.0;

/// Midpoint-rule grid over the parameter box with normalized log-weights
/// `beta * log-likelihood - log Z` (the uniform prior is constant).
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureGrid {
    pub(crate) dim: usize,
    pub(crate) nodes_per_dim: usize,
    pub(crate) param_box: Vec<(f64, f64)>,
    pub(crate) log_weights: Vec<f64>,
    pub beta: f64,
}

pub fn default_nodes(dim_w: usize) -> usize {
    if dim_w == 1 {
        2000
    } else {
        400
    }
}

fn min_nodes(dim_w: usize) -> usize {
    default_nodes(dim_w)
}

impl QuadratureGrid {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nodes_per_dim(&self) -> usize {
        self.nodes_per_dim
    }

    pub fn len(&self) -> usize {
        self.log_weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.log_weights.is_empty()
    }

    pub fn log_weights(&self) -> &[f64] {
        &self.log_weights
    }

    fn axis_value(&self, axis: usize, k: usize) -> f64 {
        let (lo, hi) = self.param_box[axis];
        lo + (k as f64 + 0.5) * (hi - lo) / self.nodes_per_dim as f64
    }

    /// Coordinates of node `k` (row-major over axes).
    pub fn node(&self, k: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        self.write_node(k, &mut out);
        out
    }

    fn write_node(&self, k: usize, out: &mut [f64]) {
        let m = self.nodes_per_dim;
        let mut rest = k;
        for axis in (0..self.dim).rev() {
            out[axis] = self.axis_value(axis, rest % m);
            rest /= m;
        }
    }

    /// Weighted sum of `g` over all nodes.
    pub fn expect(&self, mut g: impl FnMut(&[f64]) -> f64) -> f64 {
        let mut w = vec![0.0; self.dim];
        let mut acc = 0.0;
        for (k, &lw) in self.log_weights.iter().enumerate() {
            let p = lw.exp();
            if p > 0.0 {
                self.write_node(k, &mut w);
                acc += p * g(&w);
            }
        }
        acc
    }

    pub fn weight_sum(&self) -> f64 {
        self.log_weights.iter().map(|lw| lw.exp()).sum()
    }

    /// Nodes carrying non-negligible weight, renormalized.
    pub fn atoms(&self) -> PosteriorAtoms {
        let max = self
            .log_weights
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max);
        let cut = max + PRUNE_LOG;
        let mut params = Vec::new();
        let mut weights = Vec::new();
        let mut w = vec![0.0; self.dim];
        for (k, &lw) in self.log_weights.iter().enumerate() {
            if lw >= cut {
                self.write_node(k, &mut w);
                params.extend_from_slice(&w);
                weights.push(lw.exp());
            }
        }
        let total: f64 = weights.iter().sum();
        weights.iter_mut().for_each(|p| *p /= total);
        PosteriorAtoms {
            dim: self.dim,
            params,
            weights,
            sampled: false,
        }
    }
}

/// Grid posterior with the default node count: 2000 for `d = 1`,
/// 400 per axis for `d = 2`.
pub fn run_quadrature(model: &ModelSpec, data: &Dataset, beta: f64) -> Result<QuadratureGrid> {
    run_quadrature_with(model, data, beta, default_nodes(model.dim_w))
}

pub fn run_quadrature_with(
    model: &ModelSpec,
    data: &Dataset,
    beta: f64,
    nodes_per_dim: usize,
) -> Result<QuadratureGrid> {
    let d = model.dim_w;
    if d > 2 {
        return Err(Error::Dimension {
            what: "quadrature parameter space",
            expected: 2,
            got: d,
        });
    }
    if nodes_per_dim < min_nodes(d) {
        return Err(Error::Invalid(format!(
            "quadrature needs at least {} nodes per axis for d = {d}, got {nodes_per_dim}",
            min_nodes(d)
        )));
    }
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::Invalid(format!("beta must be positive, got {beta}")));
    }
    if data.dim() != model.dim_x {
        return Err(Error::Dimension {
            what: "sample point",
            expected: model.dim_x,
            got: data.dim(),
        });
    }
    let stats = data.stats();
    let mut grid = QuadratureGrid {
        dim: d,
        nodes_per_dim,
        param_box: model.param_box.clone(),
        log_weights: Vec::new(),
        beta,
    };
    let total = nodes_per_dim.pow(d as u32);
    let mut w = vec![0.0; d];
    let mut lw = Vec::with_capacity(total);
    for k in 0..total {
        grid.write_node(k, &mut w);
        lw.push(beta * model.log_likelihood(&stats, &w));
    }
    let z = log_sum_exp(&lw);
    lw.iter_mut().for_each(|v| *v -= z);
    grid.log_weights = lw;
    Ok(grid)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ModelId;
    use crate::numeric::{std_normal_cdf, std_normal_pdf};

    /// Mean and variance of N(mu, s^2) truncated to [lo, hi].
    fn truncated_normal(mu: f64, s: f64, lo: f64, hi: f64) -> (f64, f64) {
        let (a, b) = ((lo - mu) / s, (hi - mu) / s);
        let z = std_normal_cdf(b) - std_normal_cdf(a);
        let (pa, pb) = (std_normal_pdf(a), std_normal_pdf(b));
        let mean = mu + s * (pa - pb) / z;
        let var = s * s * (1.0 + (a * pa - b * pb) / z - ((pa - pb) / z).powi(2));
        (mean, var)
    }

    #[test]
    fn regular_matches_conjugate_closed_form() {
        let m = ModelSpec::builtin(ModelId::Regular1d);
        for (beta, seed) in [(1.0, 1u64), (0.5, 2), (2.0, 3)] {
            let data = m.sample_true(100, seed).unwrap();
            let n = data.n() as f64;
            let xbar = data.stats().sum[0] / n;
            let g = run_quadrature(&m, &data, beta).unwrap();
            assert!((g.weight_sum() - 1.0).abs() < 1e-12);
            let (mean, var) = truncated_normal(xbar, 1.0 / (beta * n).sqrt(), -3.0, 3.0);
            let qm = g.expect(|w| w[0]);
            assert!((qm - mean).abs() < 1e-6, "{qm} vs {mean}");
            let qv = g.expect(|w| w[0] * w[0]) - qm * qm;
            assert!((qv / var - 1.0).abs() < 1e-6);
            assert!((qv * beta * n - 1.0).abs() < 0.02);
        }
    }

    #[test]
    fn weights_normalized_for_all_models() {
        for id in ModelId::ALL {
            let m = ModelSpec::builtin(id);
            let data = m.sample_true(100, 7).unwrap();
            for beta in [0.5, 1.0, 2.0] {
                let g = run_quadrature(&m, &data, beta).unwrap();
                assert!((g.weight_sum() - 1.0).abs() < 1e-12);
                assert!((g.expect(|_| 1.0) - 1.0).abs() < 1e-12);
                assert!((g.expect(|w| f64::from(m.contains(w))) - 1.0).abs() < 1e-12);
                let atoms = g.atoms();
                assert!(atoms.len() <= g.len());
                assert!((atoms.expect(|w| w[0]) - g.expect(|w| w[0])).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn node_layout() {
        let m = ModelSpec::builtin(ModelId::SingularAb);
        let data = m.sample_true(10, 1).unwrap();
        let g = run_quadrature(&m, &data, 1.0).unwrap();
        assert_eq!(g.len(), 400 * 400);
        let h = 2.0 / 400.0;
        assert_eq!(g.node(0), vec![-1.0 + h / 2.0, -1.0 + h / 2.0]);
        assert_eq!(g.node(1), vec![-1.0 + h / 2.0, -1.0 + 1.5 * h]);
        assert_eq!(g.node(400)[0], -1.0 + 1.5 * h);
    }

    #[test]
    fn too_few_nodes_rejected() {
        let m = ModelSpec::builtin(ModelId::Regular1d);
        let data = m.sample_true(10, 1).unwrap();
        assert!(run_quadrature_with(&m, &data, 1.0, 100).is_err());
        assert!(run_quadrature(&m, &data, 0.0).is_err());
    }
}
