//! The six Bayes observables and WAIC.
//!
//! For a posterior `<.>` over `w`, training points `X_i` and fresh points
//! `X ~ q`:
//!
//! | observable | definition |
//! |---|---|
//! | `Bg` | `-E_X[log <p(X|w)>]` |
//! | `Bt` | `-(1/n) sum_i log <p(X_i|w)>` |
//! | `Gg` | `<L(w)>` |
//! | `Gt` | `-<(1/n) sum_i log p(X_i|w)>` |
//! | `Yg` | `E_X[<(log p(X|w))^2> - <log p(X|w)>^2]` |
//! | `Yt` | `(1/n) sum_i {<(log p(X_i|w))^2> - <log p(X_i|w)>^2}` |
//!
//! `WAIC = Bt + beta * Yt` and `Vt = n * Yt`. `E_X` is taken over an
//! [`EvalSet`]: either a Monte Carlo test set or a Gauss-Hermite rule for `q`.
//! `Gg` uses the closed-form loss, so it is exact in `X`.
//!
//! Log-densities of the predictive mixture are combined with a max-shifted
//! log-sum-exp. Posterior variances over Monte Carlo draws use the `S - 1`
//! denominator; over weighted grid atoms they are exact weighted variances.
//! The training-loss definitions use all `n` points rather than leave-one-out
//! sums, which differ at order `o(1/n)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Dataset, ModelSpec};
use crate::numeric::gauss_hermite;
use crate::posterior::{PosteriorAtoms, PosteriorDraws};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObservableSet {
    pub n: usize,
    pub beta: f64,
    #[serde(rename = "Bg")]
    pub bg: f64,
    #[serde(rename = "Bt")]
    pub bt: f64,
    #[serde(rename = "Gg")]
    pub gg: f64,
    #[serde(rename = "Gt")]
    pub gt: f64,
    #[serde(rename = "Yg")]
    pub yg: f64,
    #[serde(rename = "Yt")]
    pub yt: f64,
    pub waic: f64,
    #[serde(rename = "Vt")]
    pub vt: f64,
    /// Training loss at the optimum, `-(1/n) sum_i log p(X_i|w0)`. Its
    /// expectation is exactly `L0`, which makes it a control variate for the
    /// training losses.
    #[serde(rename = "Ln0")]
    pub ln0: f64,
}

/// Weighted points standing in for `E_X` under `q`.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalSet {
    dim: usize,
    points: Vec<f64>,
    weights: Vec<f64>,
}

impl EvalSet {
    /// Equally weighted fresh draws from `q`.
    pub fn monte_carlo(model: &ModelSpec, size: usize, seed: u64) -> Result<Self> {
        Ok(EvalSet::from_dataset(&model.sample_true(size, seed)?))
    }

    /// Tensor Gauss-Hermite rule of `order` nodes per axis for
    /// `q = N(0, I_N)`. Deterministic and free of test-set noise.
    pub fn hermite(model: &ModelSpec, order: usize) -> Result<Self> {
        if order == 0 {
            return Err(Error::Invalid("Hermite order must be positive".into()));
        }
        let (x, w) = gauss_hermite(order);
        let (points, weights) = match model.dim_x {
            1 => (x, w),
            2 => {
                let mut pts = Vec::with_capacity(2 * order * order);
                let mut wts = Vec::with_capacity(order * order);
                for (xi, wi) in x.iter().zip(&w) {
                    for (yj, wj) in x.iter().zip(&w) {
                        pts.extend_from_slice(&[*xi, *yj]);
                        wts.push(wi * wj);
                    }
                }
                (pts, wts)
            }
            d => {
                return Err(Error::Dimension {
                    what: "sample space",
                    expected: 2,
                    got: d,
                })
            }
        };
        Ok(EvalSet {
            dim: model.dim_x,
            points,
            weights,
        })
    }

    pub fn from_dataset(data: &Dataset) -> Self {
        let n = data.n();
        EvalSet {
            dim: data.dim(),
            points: data.values().to_vec(),
            weights: vec![1.0 / n as f64; n],
        }
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

    fn iter(&self) -> impl Iterator<Item = (&[f64], f64)> + '_ {
        self.points
            .chunks_exact(self.dim)
            .zip(self.weights.iter().copied())
    }
}

/// Posterior summaries of `log p(x|w)` at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointSummary {
    /// `log <p(x|w)>`
    pub log_mean_p: f64,
    /// `<log p(x|w)>`
    pub mean_log_p: f64,
    /// Posterior variance of `log p(x|w)`.
    pub var_log_p: f64,
}

/// Summarizes per-atom log-densities `l` under normalized weights `w`
/// (`log_w = ln w`). `sampled` selects the `S - 1` variance denominator.
pub fn summarize_log_densities(log_w: &[f64], w: &[f64], l: &[f64], sampled: bool) -> PointSummary {
    let s = l.len();
    let mut max = f64::NEG_INFINITY;
    let mut mean = 0.0;
    for k in 0..s {
        max = max.max(log_w[k] + l[k]);
        mean += w[k] * l[k];
    }
    let mut sum = 0.0;
    let mut var = 0.0;
    for k in 0..s {
        sum += (log_w[k] + l[k] - max).exp();
        var += w[k] * (l[k] - mean) * (l[k] - mean);
    }
    if sampled {
        var = if s > 1 {
            var * s as f64 / (s as f64 - 1.0)
        } else {
            0.0
        };
    }
    PointSummary {
        log_mean_p: max + sum.ln(),
        mean_log_p: mean,
        var_log_p: var,
    }
}

const COMPRESS_ABOVE: usize = 8192;
const COMPRESS_BINS: usize = 2048;

/// Merges weighted one-dimensional locations into `bins` equal-width bins.
///
/// Each occupied bin becomes two atoms of half its weight at `mean +/- sd` of
/// the locations inside it, so the weight, mean and variance of every bin are
/// kept exactly. Densities of the Gaussian location family then change only
/// through fourth and higher within-bin moments.
fn compress_locations(loc: &[f64], weights: &[f64], bins: usize) -> (Vec<f64>, Vec<f64>) {
    let (lo, hi) = loc
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &m| {
            (a.min(m), b.max(m))
        });
    let width = (hi - lo) / bins as f64;
    if !(width > 0.0) {
        return (vec![lo], vec![weights.iter().sum()]);
    }
    let mut w = vec![0.0; bins];
    let mut s1 = vec![0.0; bins];
    for (&m, &p) in loc.iter().zip(weights) {
        let k = (((m - lo) / width) as usize).min(bins - 1);
        w[k] += p;
        s1[k] += p * m;
    }
    let mean: Vec<f64> = s1
        .iter()
        .zip(&w)
        .map(|(s, &p)| if p > 0.0 { s / p } else { 0.0 })
        .collect();
    let mut s2 = vec![0.0; bins];
    for (&m, &p) in loc.iter().zip(weights) {
        let k = (((m - lo) / width) as usize).min(bins - 1);
        s2[k] += p * (m - mean[k]) * (m - mean[k]);
    }
    let (mut out_loc, mut out_w) = (Vec::with_capacity(2 * bins), Vec::with_capacity(2 * bins));
    for k in 0..bins {
        if w[k] > 0.0 {
            let sd = (s2[k] / w[k]).sqrt();
            out_loc.extend([mean[k] - sd, mean[k] + sd]);
            out_w.extend([0.5 * w[k], 0.5 * w[k]]);
        }
    }
    (out_loc, out_w)
}

/// The posterior predictive mixture, atoms mapped to their locations.
///
/// Large weighted grids over a one-dimensional location are first merged by
/// location with [`compress_locations`].
struct Mixture {
    dim_x: usize,
    loc: [Vec<f64>; 2],
    weights: Vec<f64>,
    log_weights: Vec<f64>,
    sampled: bool,
    log_norm: f64,
}

impl Mixture {
    fn new(model: &ModelSpec, atoms: &PosteriorAtoms) -> Result<Self> {
        Self::build(model, atoms, true)
    }

    fn build(model: &ModelSpec, atoms: &PosteriorAtoms, compress: bool) -> Result<Self> {
        if atoms.dim() != model.dim_w {
            return Err(Error::Dimension {
                what: "posterior atom",
                expected: model.dim_w,
                got: atoms.dim(),
            });
        }
        let mut loc = [
            Vec::with_capacity(atoms.len()),
            Vec::with_capacity(atoms.len()),
        ];
        for (w, _) in atoms.iter() {
            let m = model.location(w);
            loc[0].push(m[0]);
            loc[1].push(m[1]);
        }
        let mut weights = atoms.weights.clone();
        if compress && !atoms.is_sampled() && model.dim_x == 1 && weights.len() > COMPRESS_ABOVE {
            let (l, w) = compress_locations(&loc[0], &weights, COMPRESS_BINS);
            loc = [l, Vec::new()];
            weights = w;
        }
        Ok(Mixture {
            dim_x: model.dim_x,
            loc,
            log_weights: weights.iter().map(|p| p.ln()).collect(),
            weights,
            sampled: atoms.is_sampled(),
            log_norm: model.log_norm(),
        })
    }

    fn log_densities(&self, x: &[f64], out: &mut [f64]) {
        let c = self.log_norm;
        if self.dim_x == 1 {
            let x0 = x[0];
            for (o, m) in out.iter_mut().zip(&self.loc[0]) {
                *o = c - 0.5 * (x0 - m) * (x0 - m);
            }
        } else {
            let (x0, x1) = (x[0], x[1]);
            for ((o, m0), m1) in out.iter_mut().zip(&self.loc[0]).zip(&self.loc[1]) {
                *o = c - 0.5 * ((x0 - m0) * (x0 - m0) + (x1 - m1) * (x1 - m1));
            }
        }
    }

    fn summarize(&self, x: &[f64], scratch: &mut [f64]) -> PointSummary {
        self.log_densities(x, scratch);
        summarize_log_densities(&self.log_weights, &self.weights, scratch, self.sampled)
    }

    fn check_points(&self, dim: usize) -> Result<()> {
        if dim != self.dim_x {
            return Err(Error::Dimension {
                what: "sample point",
                expected: self.dim_x,
                got: dim,
            });
        }
        Ok(())
    }

    /// Weighted sums over points of `(-log <p>, -<log p>, Var log p)`.
    fn accumulate<'a>(&self, points: impl Iterator<Item = (&'a [f64], f64)>) -> (f64, f64, f64) {
        let mut scratch = vec![0.0; self.weights.len()];
        let (mut b, mut g, mut y) = (0.0, 0.0, 0.0);
        for (x, v) in points {
            let s = self.summarize(x, &mut scratch);
            b -= v * s.log_mean_p;
            g -= v * s.mean_log_p;
            y += v * s.var_log_p;
        }
        (b, g, y)
    }
}

fn train_points(data: &Dataset) -> impl Iterator<Item = (&[f64], f64)> + '_ {
    let v = 1.0 / data.n() as f64;
    data.points().map(move |x| (x, v))
}

/// `Bg = -E_X[log <p(X|w)>]`.
pub fn bayes_gen_loss(model: &ModelSpec, atoms: &PosteriorAtoms, eval: &EvalSet) -> Result<f64> {
    let mix = Mixture::new(model, atoms)?;
    mix.check_points(eval.dim())?;
    Ok(mix.accumulate(eval.iter()).0)
}

/// `Bt = -(1/n) sum_i log <p(X_i|w)>`.
pub fn bayes_train_loss(model: &ModelSpec, atoms: &PosteriorAtoms, train: &Dataset) -> Result<f64> {
    let mix = Mixture::new(model, atoms)?;
    mix.check_points(train.dim())?;
    Ok(mix.accumulate(train_points(train)).0)
}

/// `Gg = <L(w)>` with the closed-form loss.
pub fn gibbs_gen_loss(model: &ModelSpec, atoms: &PosteriorAtoms) -> Result<f64> {
    if atoms.dim() != model.dim_w {
        return Err(Error::Dimension {
            what: "posterior atom",
            expected: model.dim_w,
            got: atoms.dim(),
        });
    }
    Ok(atoms.expect(|w| model.loss_unchecked(w)))
}

/// `Gt = -<(1/n) sum_i log p(X_i|w)>`.
pub fn gibbs_train_loss(model: &ModelSpec, atoms: &PosteriorAtoms, train: &Dataset) -> Result<f64> {
    let mix = Mixture::new(model, atoms)?;
    mix.check_points(train.dim())?;
    Ok(mix.accumulate(train_points(train)).1)
}

/// `Yt`, the mean posterior variance of `log p(X_i|w)` over training points.
pub fn functional_variance_train(
    model: &ModelSpec,
    atoms: &PosteriorAtoms,
    train: &Dataset,
) -> Result<f64> {
    let mix = Mixture::new(model, atoms)?;
    mix.check_points(train.dim())?;
    Ok(mix.accumulate(train_points(train)).2)
}

/// `Yg`, the posterior variance of `log p(X|w)` averaged over `q`.
pub fn functional_variance_gen(
    model: &ModelSpec,
    atoms: &PosteriorAtoms,
    eval: &EvalSet,
) -> Result<f64> {
    let mix = Mixture::new(model, atoms)?;
    mix.check_points(eval.dim())?;
    Ok(mix.accumulate(eval.iter()).2)
}

pub fn waic(bt: f64, yt: f64, beta: f64) -> f64 {
    bt + beta * yt
}

/// All observables in one pass over training and evaluation points.
pub fn compute_observables(
    model: &ModelSpec,
    atoms: &PosteriorAtoms,
    beta: f64,
    train: &Dataset,
    eval: &EvalSet,
) -> Result<ObservableSet> {
    let mix = Mixture::new(model, atoms)?;
    mix.check_points(train.dim())?;
    mix.check_points(eval.dim())?;
    let (bt, gt, yt) = mix.accumulate(train_points(train));
    let (bg, _, yg) = mix.accumulate(eval.iter());
    let gg = gibbs_gen_loss(model, atoms)?;
    let n = train.n();
    Ok(ObservableSet {
        n,
        beta,
        bg,
        bt,
        gg,
        gt,
        yg,
        yt,
        waic: waic(bt, yt, beta),
        vt: n as f64 * yt,
        ln0: -model.log_likelihood(&train.stats(), &model.optimum()) / n as f64,
    })
}

/// Monte Carlo standard errors of each observable computed from `draws`.
///
/// Every observable is a smooth functional of the draw distribution; its
/// first-order influence series (one value per draw) is formed and the
/// standard error taken as `sd / sqrt(ESS)` with the pooled multi-chain ESS
/// of that series.
pub fn mcmc_standard_errors(
    model: &ModelSpec,
    draws: &PosteriorDraws,
    train: &Dataset,
    eval: &EvalSet,
) -> Result<ObservableSet> {
    let atoms = PosteriorAtoms::from(draws);
    let mix = Mixture::new(model, &atoms)?;
    mix.check_points(train.dim())?;
    mix.check_points(eval.dim())?;
    let s = draws.len();

    let influence = |points: &mut dyn Iterator<Item = (&[f64], f64)>| {
        let mut psi_b = vec![0.0; s];
        let mut psi_g = vec![0.0; s];
        let mut psi_y = vec![0.0; s];
        let mut l = vec![0.0; s];
        let corr = s as f64 / (s as f64 - 1.0);
        for (x, v) in points {
            mix.log_densities(x, &mut l);
            let sum = summarize_log_densities(&mix.log_weights, &mix.weights, &l, true);
            for k in 0..s {
                psi_b[k] -= v * (l[k] - sum.log_mean_p).exp();
                psi_g[k] -= v * l[k];
                psi_y[k] += v * corr * (l[k] - sum.mean_log_p).powi(2);
            }
        }
        (psi_b, psi_g, psi_y)
    };
    let (tb, tg, ty) = influence(&mut train_points(train));
    let (gb, _, gy) = influence(&mut eval.iter());
    let loss: Vec<f64> = draws.draws().map(|w| model.loss_unchecked(w)).collect();
    let waic_series: Vec<f64> = tb
        .iter()
        .zip(&ty)
        .map(|(b, y)| b + draws.beta * y)
        .collect();
    let n = train.n();
    let yt = draws.mcse(&ty);
    Ok(ObservableSet {
        n,
        beta: draws.beta,
        bg: draws.mcse(&gb),
        bt: draws.mcse(&tb),
        gg: draws.mcse(&loss),
        gt: draws.mcse(&tg),
        yg: draws.mcse(&gy),
        yt,
        waic: draws.mcse(&waic_series),
        vt: n as f64 * yt,
        ln0: 0.0,
    })
}
