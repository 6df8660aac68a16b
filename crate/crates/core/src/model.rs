//! Built-in true distributions, model families and their loss geometry.
//!
//! Every built-in is a unit-covariance Gaussian location family,
//! `p(x|w) = N(x; m(w), I_N)`, with true distribution `q = N(0, I_N)` and a
//! uniform prior on a parameter box. Closed forms follow from that:
//! `L(w) = (N/2)(log 2pi + 1) + |m(w)|^2 / 2` and
//! `D(p0||p_w) = |m(w) - m(w0)|^2 / 2`.

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{gamma_fn, LN_2PI};
use crate::observables::ObservableSet;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ModelId {
    #[serde(rename = "regular1d")]
    Regular1d,
    #[serde(rename = "singular_ab")]
    SingularAb,
    #[serde(rename = "nonrenorm_a")]
    NonrenormA,
}

impl ModelId {
    pub const ALL: [ModelId; 3] = [ModelId::Regular1d, ModelId::SingularAb, ModelId::NonrenormA];

    pub fn as_str(self) -> &'static str {
        match self {
            ModelId::Regular1d => "regular1d",
            ModelId::SingularAb => "singular_ab",
            ModelId::NonrenormA => "nonrenorm_a",
        }
    }
}

impl fmt::Display for ModelId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ModelId::ALL
            .into_iter()
            .find(|id| id.as_str() == s)
            .ok_or_else(|| {
                Error::Invalid(format!(
                    "unknown model id `{s}` (expected one of regular1d, singular_ab, nonrenorm_a)"
                ))
            })
    }
}

/// One observation `x` in R^N.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplePoint(pub Vec<f64>);

/// One parameter `w` in R^d.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamPoint(pub Vec<f64>);

impl std::ops::Deref for SamplePoint {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl std::ops::Deref for ParamPoint {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl From<Vec<f64>> for ParamPoint {
    fn from(v: Vec<f64>) -> Self {
        ParamPoint(v)
    }
}

impl From<Vec<f64>> for SamplePoint {
    fn from(v: Vec<f64>) -> Self {
        SamplePoint(v)
    }
}

/// An ordered i.i.d. sample stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    dim: usize,
    values: Vec<f64>,
}

/// Per-coordinate sums that determine the Gaussian log-likelihood.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SufficientStats {
    pub n: usize,
    pub sum: [f64; 2],
    pub sum_sq: [f64; 2],
}

impl Dataset {
    pub fn new(dim: usize, values: Vec<f64>) -> Result<Self> {
        if dim == 0 || dim > 2 {
            return Err(Error::Invalid(format!(
                "sample dimension {dim} not in 1..=2"
            )));
        }
        if values.is_empty() || !values.len().is_multiple_of(dim) {
            return Err(Error::Invalid(format!(
                "dataset needs a positive multiple of {dim} values, got {}",
                values.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::Invalid(format!("non-finite coordinate {v}")));
        }
        Ok(Dataset { dim, values })
    }

    pub fn from_points(points: &[SamplePoint]) -> Result<Self> {
        let dim = points
            .first()
            .map(|p| p.len())
            .ok_or_else(|| Error::Invalid("dataset must contain at least one point".into()))?;
        if let Some(p) = points.iter().find(|p| p.len() != dim) {
            return Err(Error::Dimension {
                what: "sample point",
                expected: dim,
                got: p.len(),
            });
        }
        Dataset::new(
            dim,
            points.iter().flat_map(|p| p.0.iter().copied()).collect(),
        )
    }

    pub fn n(&self) -> usize {
        self.values.len() / self.dim
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.values.chunks_exact(self.dim)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn stats(&self) -> SufficientStats {
        let mut s = SufficientStats {
            n: self.n(),
            sum: [0.0; 2],
            sum_sq: [0.0; 2],
        };
        for p in self.points() {
            for (j, &v) in p.iter().enumerate() {
                s.sum[j] += v;
                s.sum_sq[j] += v * v;
            }
        }
        s
    }
}

/// Constants of the asymptotic theory for one model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoryCard {
    pub model: ModelId,
    /// Log canonical threshold.
    pub lambda: f64,
    /// Singular fluctuation; `None` when not known in closed form.
    pub nu: Option<f64>,
    /// Multiplicity of the largest pole.
    pub m: u32,
    #[serde(rename = "L0")]
    pub l0: f64,
    /// Learning-curve rate exponent.
    pub kappa: f64,
    /// Coefficient constant of the anomalous law, nonrenormalizable model only.
    #[serde(rename = "Q")]
    pub q: Option<f64>,
    pub derivation_note: String,
}

/// `Q = 2^(7/6) Gamma(7/6) / sqrt(2 pi)`, the absolute moment `E|Z|^(4/3)`.
pub fn anomalous_q() -> f64 {
    2f64.powf(7.0 / 6.0) * gamma_fn(7.0 / 6.0) / (2.0 * std::f64::consts::PI).sqrt()
}

impl TheoryCard {
    /// Expected observables predicted by the learning-curve laws.
    ///
    /// With `kappa == 1` the universal law applies and every coefficient is
    /// built from `lambda`, `nu` and `beta`; otherwise the anomalous law with
    /// constant `Q` and rate `n^(-2/3)`.
    pub fn predict(&self, beta: f64, n: usize) -> Result<ObservableSet> {
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(Error::Invalid(format!("beta must be positive, got {beta}")));
        }
        if n == 0 {
            return Err(Error::Invalid("n must be positive".into()));
        }
        let nf = n as f64;
        let (bg, bt, gg, gt, y) = if let Some(q) = self.q {
            let s = q / nf.powf(2.0 / 3.0);
            (
                (0.5 - 1.0 / beta) * s,
                -(1.5 + 1.0 / beta) * s,
                0.5 * s,
                -1.5 * s,
                2.0 / beta * s,
            )
        } else {
            let nu = self.nu.ok_or(Error::MissingConstant("nu"))?;
            let lam = self.lambda;
            (
                ((lam - nu) / beta + nu) / nf,
                ((lam - nu) / beta - nu) / nf,
                (lam / beta + nu) / nf,
                (lam / beta - nu) / nf,
                2.0 * nu / beta / nf,
            )
        };
        let l0 = self.l0;
        Ok(ObservableSet {
            n,
            beta,
            bg: l0 + bg,
            bt: l0 + bt,
            gg: l0 + gg,
            gt: l0 + gt,
            yg: y,
            yt: y,
            waic: l0 + bt + beta * y,
            vt: nf * y,
            ln0: l0,
        })
    }

    /// `E[G_g] + E[G_t] - 2 L0 = 2 lambda / (beta n)`, which needs only lambda.
    pub fn predict_gibbs_sum(&self, beta: f64, n: usize) -> Result<f64> {
        if let Some(q) = self.q {
            return Ok(-q / (n as f64).powf(2.0 / 3.0));
        }
        Ok(2.0 * self.lambda / (beta * n as f64))
    }
}

/// Fisher information `I` and loss Hessian `J` at a parameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FisherPair {
    pub i: Vec<Vec<f64>>,
    pub j: Vec<Vec<f64>>,
}

impl FisherPair {
    /// `tr(I J^-1) / 2`, the singular fluctuation of a regular model.
    pub fn half_trace_ij_inv(&self) -> f64 {
        let jinv = invert_small(&self.j);
        let d = self.i.len();
        let tr: f64 = (0..d)
            .flat_map(|a| (0..d).map(move |b| (a, b)))
            .map(|(a, b)| self.i[a][b] * jinv[b][a])
            .sum();
        tr / 2.0
    }
}

fn invert_small(m: &[Vec<f64>]) -> Vec<Vec<f64>> {
    match m.len() {
        1 => vec![vec![1.0 / m[0][0]]],
        2 => {
            let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
            vec![
                vec![m[1][1] / det, -m[0][1] / det],
                vec![-m[1][0] / det, m[0][0] / det],
            ]
        }
        d => panic!("matrix dimension {d} not supported"),
    }
}

fn min_eigenvalue_sym(m: &[Vec<f64>]) -> f64 {
    match m.len() {
        1 => m[0][0],
        2 => {
            let (a, b, c) = (m[0][0], 0.5 * (m[0][1] + m[1][0]), m[1][1]);
            let mid = 0.5 * (a + c);
            let rad = (0.25 * (a - c).powi(2) + b * b).sqrt();
            mid - rad
        }
        d => panic!("matrix dimension {d} not supported"),
    }
}

/// A fully specified (true distribution, model, prior) triple.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    pub id: ModelId,
    pub dim_x: usize,
    pub dim_w: usize,
    pub param_box: Vec<(f64, f64)>,
}

/// `h(a) = sqrt(a^4 - a^2 + 1) - 1`, written without cancellation near 0.
pub fn nonrenorm_h(a: f64) -> f64 {
    let u = a * a * a * a - a * a;
    u / ((u + 1.0).sqrt() + 1.0)
}

impl ModelSpec {
    pub fn builtin(id: ModelId) -> Self {
        let (dim_x, param_box) = match id {
            ModelId::Regular1d => (1, vec![(-3.0, 3.0)]),
            ModelId::SingularAb => (1, vec![(-1.0, 1.0), (-1.0, 1.0)]),
            ModelId::NonrenormA => (2, vec![(-1.5, 1.5)]),
        };
        ModelSpec {
            id,
            dim_x,
            dim_w: param_box.len(),
            param_box,
        }
    }

    pub fn from_id(id: &str) -> Result<Self> {
        Ok(ModelSpec::builtin(id.parse()?))
    }

    /// The minimizing parameter; zero for every built-in.
    pub fn optimum(&self) -> ParamPoint {
        ParamPoint(vec![0.0; self.dim_w])
    }

    pub fn box_volume(&self) -> f64 {
        self.param_box.iter().map(|(lo, hi)| hi - lo).product()
    }

    pub fn contains(&self, w: &[f64]) -> bool {
        w.len() == self.dim_w
            && w.iter()
                .zip(&self.param_box)
                .all(|(&v, &(lo, hi))| v >= lo && v <= hi)
    }

    /// Uniform prior density on the parameter box.
    pub fn prior_density(&self, w: &[f64]) -> f64 {
        if self.contains(w) {
            1.0 / self.box_volume()
        } else {
            0.0
        }
    }

    fn check(&self, w: &[f64]) -> Result<()> {
        if w.len() != self.dim_w {
            return Err(Error::Dimension {
                what: "parameter",
                expected: self.dim_w,
                got: w.len(),
            });
        }
        if !self.contains(w) {
            return Err(Error::OutsideBox {
                model: self.id.as_str(),
                w: w.to_vec(),
            });
        }
        Ok(())
    }

    fn check_x(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim_x {
            return Err(Error::Dimension {
                what: "sample point",
                expected: self.dim_x,
                got: x.len(),
            });
        }
        Ok(())
    }

    /// Mean of `p(.|w)`. Only the first `dim_x` entries are meaningful.
    #[inline]
    pub fn location(&self, w: &[f64]) -> [f64; 2] {
        match self.id {
            ModelId::Regular1d => [w[0], 0.0],
            ModelId::SingularAb => [w[0] * w[1], 0.0],
            ModelId::NonrenormA => [w[0], 1.0 + nonrenorm_h(w[0])],
        }
    }

    /// `d m / d w` as rows indexed by x-coordinate.
    pub fn location_jacobian(&self, w: &[f64]) -> Vec<Vec<f64>> {
        match self.id {
            ModelId::Regular1d => vec![vec![1.0]],
            ModelId::SingularAb => vec![vec![w[1], w[0]]],
            ModelId::NonrenormA => {
                let a = w[0];
                let s = 1.0 + nonrenorm_h(a);
                vec![vec![1.0], vec![(2.0 * a * a * a - a) / s]]
            }
        }
    }

    #[inline]
    pub(crate) fn log_norm(&self) -> f64 {
        -0.5 * self.dim_x as f64 * LN_2PI
    }

    /// `log p(x|w)` without domain checks.
    #[inline]
    pub fn log_p_unchecked(&self, x: &[f64], w: &[f64]) -> f64 {
        let m = self.location(w);
        let mut sq = 0.0;
        for (j, &xj) in x.iter().enumerate() {
            sq += (xj - m[j]) * (xj - m[j]);
        }
        self.log_norm() - 0.5 * sq
    }

    pub fn log_p(&self, x: &[f64], w: &[f64]) -> Result<f64> {
        self.check_x(x)?;
        self.check(w)?;
        Ok(self.log_p_unchecked(x, w))
    }

    pub fn log_q(&self, x: &[f64]) -> Result<f64> {
        self.check_x(x)?;
        Ok(self.log_norm() - 0.5 * x.iter().map(|v| v * v).sum::<f64>())
    }

    /// `sum_i log p(X_i|w)` from sufficient statistics.
    #[inline]
    pub fn log_likelihood(&self, stats: &SufficientStats, w: &[f64]) -> f64 {
        let m = self.location(w);
        let n = stats.n as f64;
        let sq: f64 = m
            .iter()
            .zip(stats.sum.iter().zip(&stats.sum_sq))
            .map(|(mj, (s, s2))| s2 - 2.0 * mj * s + n * mj * mj)
            .sum();
        n * self.log_norm() - 0.5 * sq
    }

    /// Minimal loss `L0 = min_w L(w)`.
    pub fn min_loss(&self) -> f64 {
        match self.id {
            ModelId::Regular1d | ModelId::SingularAb => 0.5 * LN_2PI + 0.5,
            ModelId::NonrenormA => LN_2PI + 1.5,
        }
    }

    /// Entropy `S = -E_q[log q(X)]`.
    pub fn entropy(&self) -> f64 {
        0.5 * self.dim_x as f64 * (LN_2PI + 1.0)
    }

    /// `L(w) - L0` without domain checks.
    #[inline]
    pub fn excess_loss_unchecked(&self, w: &[f64]) -> f64 {
        match self.id {
            ModelId::Regular1d => 0.5 * w[0] * w[0],
            ModelId::SingularAb => 0.5 * (w[0] * w[1]).powi(2),
            ModelId::NonrenormA => 0.5 * w[0].powi(4),
        }
    }

    /// `L(w) = -E_q[log p(X|w)]` without domain checks.
    #[inline]
    pub fn loss_unchecked(&self, w: &[f64]) -> f64 {
        self.min_loss() + self.excess_loss_unchecked(w)
    }

    pub fn loss(&self, w: &[f64]) -> Result<f64> {
        self.check(w)?;
        Ok(self.loss_unchecked(w))
    }

    /// `L(w) - L0 >= 0`.
    pub fn kl_true(&self, w: &[f64]) -> Result<f64> {
        self.check(w)?;
        Ok(self.excess_loss_unchecked(w))
    }

    /// `D(p0||p_w)` without domain checks.
    #[inline]
    pub fn kl_from_p0_unchecked(&self, w: &[f64]) -> f64 {
        match self.id {
            ModelId::Regular1d => 0.5 * w[0] * w[0],
            ModelId::SingularAb => 0.5 * (w[0] * w[1]).powi(2),
            ModelId::NonrenormA => {
                let a = w[0];
                0.5 * a.powi(4) - nonrenorm_h(a)
            }
        }
    }

    pub fn kl_from_p0(&self, w: &[f64]) -> Result<f64> {
        self.check(w)?;
        Ok(self.kl_from_p0_unchecked(w))
    }

    /// `f(x, w) = log p(x|w0) - log p(x|w)` in closed form.
    pub fn log_density_ratio(&self, x: &[f64], w: &[f64]) -> Result<f64> {
        self.check_x(x)?;
        self.check(w)?;
        Ok(match self.id {
            ModelId::Regular1d => {
                let a = w[0];
                0.5 * a * a - a * x[0]
            }
            ModelId::SingularAb => {
                let m = w[0] * w[1];
                0.5 * m * m - m * x[0]
            }
            ModelId::NonrenormA => {
                let a = w[0];
                -a * x[0] - nonrenorm_h(a) * x[1] + 0.5 * a.powi(4)
            }
        })
    }

    /// `n` i.i.d. draws from `q = N(0, I_N)`, deterministic in `seed`.
    pub fn sample_true(&self, n: usize, seed: u64) -> Result<Dataset> {
        if n == 0 {
            return Err(Error::Invalid("sample size n must be at least 1".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let values = (0..n * self.dim_x)
            .map(|_| StandardNormal.sample(&mut rng))
            .collect();
        Dataset::new(self.dim_x, values)
    }

    pub fn theory_card(&self) -> TheoryCard {
        let l0 = self.min_loss();
        match self.id {
            ModelId::Regular1d => TheoryCard {
                model: self.id,
                lambda: 0.5,
                nu: Some(0.5),
                m: 1,
                l0,
                kappa: 1.0,
                q: None,
                derivation_note: "regular realizable model with d = 1: lambda = d/2 = 1/2; \
                    I = J = 1 at a = 0, so nu = tr(I J^-1)/2 = 1/2"
                    .into(),
            },
            ModelId::SingularAb => TheoryCard {
                model: self.id,
                lambda: 0.5,
                nu: None,
                m: 2,
                l0,
                kappa: 1.0,
                q: None,
                derivation_note: "zeta(z) = (1/4) int_[-1,1]^2 (a^2 b^2 / 2)^z da db \
                    = 2^(-z) / (2z + 1)^2; the largest pole z = -1/2 has order 2, \
                    so lambda = 1/2 and m = 2; nu has no closed form and is measured"
                    .into(),
            },
            ModelId::NonrenormA => TheoryCard {
                model: self.id,
                lambda: 0.25,
                nu: None,
                m: 1,
                l0,
                kappa: 2.0 / 3.0,
                q: Some(anomalous_q()),
                derivation_note: "L(a) - L0 = a^4/2 while D(p0||p_a) ~ a^2/2, so the pair is \
                    not renormalizable; zeta(z) = (1/3) int_[-1.5,1.5] (a^4/2)^z da has its \
                    largest pole at z = -1/4 (lambda = 1/4, m = 1) but the universal law does \
                    not apply; observables scale as Q n^(-2/3) with \
                    Q = 2^(7/6) Gamma(7/6) / sqrt(2 pi)"
                    .into(),
            },
        }
    }

    /// `(L(w) - L0) / D(p0||p_w)` at one parameter.
    pub fn renormalizability_ratio_at(&self, w: &[f64]) -> Result<f64> {
        let d = self.kl_from_p0(w)?;
        if d <= 0.0 {
            return Err(Error::Invalid("D(p0||p_w) = 0 at this parameter".into()));
        }
        Ok(self.excess_loss_unchecked(w) / d)
    }

    /// Minimum of `(L(w) - L0) / D(p0||p_w)` over a grid of `10^4` cell
    /// midpoints per parameter dimension, restricted to `0 < D <= eps`.
    ///
    /// Renormalizable pairs stay bounded away from zero as `eps -> 0`. This is
    /// a grid diagnostic, not a proof.
    pub fn renormalizability_ratio(&self, eps: f64) -> Result<f64> {
        self.renormalizability_ratio_with(eps, 10_000)
    }

    pub fn renormalizability_ratio_with(&self, eps: f64, per_dim: usize) -> Result<f64> {
        if !(eps > 0.0) {
            return Err(Error::Invalid(format!("eps must be positive, got {eps}")));
        }
        let axes: Vec<Vec<f64>> = self
            .param_box
            .iter()
            .map(|&(lo, hi)| {
                let h = (hi - lo) / per_dim as f64;
                (0..per_dim).map(|k| lo + (k as f64 + 0.5) * h).collect()
            })
            .collect();
        let mut best = f64::INFINITY;
        let mut visit = |w: &[f64]| {
            let d = self.kl_from_p0_unchecked(w);
            if d > 0.0 && d <= eps {
                best = best.min(self.excess_loss_unchecked(w) / d);
            }
        };
        match self.dim_w {
            1 => axes[0].iter().for_each(|&a| visit(&[a])),
            2 => {
                for &a in &axes[0] {
                    for &b in &axes[1] {
                        visit(&[a, b]);
                    }
                }
            }
            d => {
                return Err(Error::Dimension {
                    what: "parameter",
                    expected: 2,
                    got: d,
                })
            }
        }
        if best.is_finite() {
            Ok(best)
        } else {
            Err(Error::EmptyGrid { eps })
        }
    }

    /// Monte Carlo Fisher information and finite-difference loss Hessian.
    pub fn fisher_pair(&self, w0: &[f64], mc_budget: usize, seed: u64) -> Result<FisherPair> {
        self.check(w0)?;
        if mc_budget == 0 {
            return Err(Error::Invalid("mc_budget must be positive".into()));
        }
        let d = self.dim_w;
        let data = self.sample_true(mc_budget, seed)?;
        let m = self.location(w0);
        let jac = self.location_jacobian(w0);
        let mut info = vec![vec![0.0; d]; d];
        let mut score = vec![0.0; d];
        for x in data.points() {
            // grad_w log p(x|w) = (dm/dw)^T (x - m(w))
            for (k, s) in score.iter_mut().enumerate() {
                *s = (0..self.dim_x).map(|j| jac[j][k] * (x[j] - m[j])).sum();
            }
            for a in 0..d {
                for b in 0..d {
                    info[a][b] += score[a] * score[b];
                }
            }
        }
        for row in &mut info {
            for v in row.iter_mut() {
                *v /= mc_budget as f64;
            }
        }
        let hess = self.loss_hessian_fd(w0, 1e-4);
        let min_eig = min_eigenvalue_sym(&hess);
        if min_eig < 1e-6 {
            return Err(Error::SingularJ {
                min_eigenvalue: min_eig,
            });
        }
        Ok(FisherPair { i: info, j: hess })
    }

    /// Central second differences of `L(w) - L0`.
    pub fn loss_hessian_fd(&self, w: &[f64], h: f64) -> Vec<Vec<f64>> {
        let d = self.dim_w;
        let f = |v: &[f64]| self.excess_loss_unchecked(v);
        let mut hess = vec![vec![0.0; d]; d];
        let mut p = w.to_vec();
        for a in 0..d {
            p[a] = w[a] + h;
            let fp = f(&p);
            p[a] = w[a] - h;
            let fm = f(&p);
            p[a] = w[a];
            hess[a][a] = (fp - 2.0 * f(w) + fm) / (h * h);
            for b in (a + 1)..d {
                let mut e = |sa: f64, sb: f64| {
                    p[a] = w[a] + sa * h;
                    p[b] = w[b] + sb * h;
                    let v = f(&p);
                    p[a] = w[a];
                    p[b] = w[b];
                    v
                };
                let v = (e(1.0, 1.0) - e(1.0, -1.0) - e(-1.0, 1.0) + e(-1.0, -1.0)) / (4.0 * h * h);
                hess[a][b] = v;
                hess[b][a] = v;
            }
        }
        hess
    }
}
