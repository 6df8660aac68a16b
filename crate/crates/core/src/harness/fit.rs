//! Estimators of lambda, nu and the learning-curve exponent from aggregate
//! tables, and the checks reported in `fits.json`.

use serde::{Deserialize, Serialize};

use super::aggregate::{AggregateTable, MeanSe, Series};
use crate::error::{Error, Result};
use crate::model::{ModelSpec, TheoryCard};
use crate::numeric::ols;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub se: f64,
}

impl Estimate {
    /// Distance from `target` in standard errors; infinite when `se == 0`
    /// and the values differ.
    pub fn z(&self, target: f64) -> f64 {
        let d = (self.value - target).abs();
        if d == 0.0 {
            0.0
        } else {
            d / self.se
        }
    }

    /// `|value - target| <= k se`, with a relative floor of 1e-12 so exact
    /// inputs with zero SE pass despite rounding.
    pub fn within(&self, target: f64, k: f64) -> bool {
        (self.value - target).abs() <= k * self.se + 1e-12 * target.abs().max(1.0)
    }
}

/// Inverse-variance weighted mean; equal weights when any SE is zero.
pub fn pool(points: &[Estimate]) -> Estimate {
    assert!(!points.is_empty());
    if points.iter().any(|p| !(p.se > 0.0)) {
        let k = points.len() as f64;
        let value = points.iter().map(|p| p.value).sum::<f64>() / k;
        let se = points.iter().map(|p| p.se * p.se).sum::<f64>().sqrt() / k;
        return Estimate { value, se };
    }
    let wsum: f64 = points.iter().map(|p| 1.0 / (p.se * p.se)).sum();
    let value = points.iter().map(|p| p.value / (p.se * p.se)).sum::<f64>() / wsum;
    Estimate {
        value,
        se: wsum.sqrt().recip(),
    }
}

fn scaled(m: MeanSe, offset: f64, scale: f64) -> Estimate {
    Estimate {
        value: scale * (m.mean - offset),
        se: scale * m.se,
    }
}

/// Per-n values of `(beta n / 2)(Gg + Gt - 2 L0)`.
pub fn lambda_by_n(table: &AggregateTable, l0: f64, beta: f64) -> Vec<Estimate> {
    table
        .rows
        .iter()
        .map(|r| scaled(r.get(Series::GibbsSum), 2.0 * l0, beta * r.n as f64 / 2.0))
        .collect()
}

/// Per-n values of the same quantity with one `L0` replaced by the
/// per-replication training loss at the optimum `Ln0`.
///
/// `E[Ln0] = L0` exactly, so the mean is unchanged, while the `O(n^-1/2)`
/// fluctuation of the empirical entropy inside `Gt` cancels. The much
/// smaller SE makes finite-n bias visible.
pub fn lambda_cv_by_n(table: &AggregateTable, l0: f64, beta: f64) -> Vec<Estimate> {
    table
        .rows
        .iter()
        .map(|r| scaled(r.get(Series::GibbsSumCentered), l0, beta * r.n as f64 / 2.0))
        .collect()
}

/// `lambda_hat`, pooled over the n grid with inverse-variance weights.
pub fn estimate_lambda(table: &AggregateTable, l0: f64, beta: f64) -> Estimate {
    pool(&lambda_by_n(table, l0, beta))
}

/// Per-n values of `(beta / 2) n Yt`.
pub fn nu_by_n(table: &AggregateTable, beta: f64) -> Vec<Estimate> {
    table
        .rows
        .iter()
        .map(|r| scaled(r.get(Series::Yt), 0.0, beta * r.n as f64 / 2.0))
        .collect()
}

/// `nu_hat`, pooled over the n grid with inverse-variance weights.
pub fn estimate_nu(table: &AggregateTable, beta: f64) -> Estimate {
    pool(&nu_by_n(table, beta))
}

/// Rate exponent `kappa_hat = -slope` of `log(mean - offset)` on `log n`.
///
/// The slope SE is propagated from the per-n standard errors (delta method
/// on the log), treating the per-n means as independent.
pub fn fit_exponent(table: &AggregateTable, series: Series, offset: f64) -> Result<Estimate> {
    if table.rows.len() < 2 {
        return Err(Error::Invalid(
            "exponent fit needs at least two sample sizes".into(),
        ));
    }
    let (mut x, mut y, mut se) = (vec![], vec![], vec![]);
    let sign = (table.rows[0].get(series).mean - offset).signum();
    for r in &table.rows {
        let m = r.get(series);
        let d = m.mean - offset;
        if d == 0.0 || d.signum() != sign {
            return Err(Error::SignChange);
        }
        x.push((r.n as f64).ln());
        y.push(d.abs().ln());
        se.push(m.se / d.abs());
    }
    let fit = ols(&x, &y, &se);
    Ok(Estimate {
        value: -fit.slope,
        se: fit.slope_se,
    })
}

/// Log-log slope of `Vt` against `n`.
pub fn check_vt_growth(table: &AggregateTable) -> Result<Estimate> {
    let k = fit_exponent(table, Series::Vt, 0.0)?;
    Ok(Estimate {
        value: -k.value,
        se: k.se,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StateResidual {
    pub n: usize,
    /// `n^kappa (Bg - Bt - beta Yt)`
    pub bayes: Estimate,
    /// `n^kappa (Gg - Gt - beta Yt)`
    pub gibbs: Estimate,
}

/// Scaled residuals of the two equations of state at every n.
pub fn check_state_equations(table: &AggregateTable, kappa: f64) -> Vec<StateResidual> {
    table
        .rows
        .iter()
        .map(|r| {
            let s = (r.n as f64).powf(kappa);
            StateResidual {
                n: r.n,
                bayes: scaled(r.get(Series::EosBayes), 0.0, s),
                gibbs: scaled(r.get(Series::EosGibbs), 0.0, s),
            }
        })
        .collect()
}

/// Coefficients of the anomalous law in units of `Q n^(-2/3)` for
/// `(Bg - L0, Bt - L0, Gg - L0, Gt - L0, Yt)`.
pub fn anomalous_pattern(beta: f64) -> [f64; 5] {
    [0.5 - 1.0 / beta, -(1.5 + 1.0 / beta), 0.5, -1.5, 2.0 / beta]
}

pub const PATTERN_SERIES: [Series; 5] =
    [Series::Bg, Series::Bt, Series::Gg, Series::Gt, Series::Yt];

/// `n^kappa (mean - offset)` of `series`, pooled over the n grid.
pub fn pooled_scaled(table: &AggregateTable, series: Series, offset: f64, kappa: f64) -> Estimate {
    let pts: Vec<Estimate> = table
        .rows
        .iter()
        .map(|r| scaled(r.get(series), offset, (r.n as f64).powf(kappa)))
        .collect();
    pool(&pts)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    /// Rate exponent; absent when the n grid has a single point.
    pub kappa_hat: Option<f64>,
    pub kappa_se: Option<f64>,
    pub lambda_hat: Option<f64>,
    pub lambda_se: Option<f64>,
    /// The same estimator with the `Ln0` control variate.
    pub lambda_cv_hat: Option<f64>,
    pub lambda_cv_se: Option<f64>,
    pub nu_hat: Option<f64>,
    pub nu_se: Option<f64>,
    pub vt_slope: Option<f64>,
    pub vt_slope_se: Option<f64>,
    pub state_eq_residuals: Vec<StateResidual>,
    /// Per-n `lambda` and `nu` values behind the pooled estimates.
    pub lambda_by_n: Vec<Estimate>,
    pub lambda_cv_by_n: Vec<Estimate>,
    pub nu_by_n: Vec<Estimate>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub se: f64,
    pub target: f64,
    pub rule: String,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub model: String,
    pub beta: f64,
    pub n_grid: Vec<usize>,
    pub theory_card: TheoryCard,
    pub fit: FitResult,
    pub checks: Vec<Check>,
}

fn check_within(name: &str, est: Estimate, target: f64, k: f64) -> Check {
    Check {
        name: name.into(),
        value: est.value,
        se: est.se,
        target,
        rule: format!("|value - target| <= {k} se"),
        pass: est.within(target, k),
    }
}

/// All estimators and checks for one aggregate table.
pub fn fit_table(table: &AggregateTable) -> Result<FitReport> {
    let card = ModelSpec::builtin(table.model).theory_card();
    let beta = table.beta;
    let l0 = card.l0;
    let (kappa, vt) = if table.rows.len() >= 2 {
        (
            Some(fit_exponent(table, Series::Gg, l0)?),
            Some(check_vt_growth(table)?),
        )
    } else {
        (None, None)
    };
    let residuals = check_state_equations(table, card.kappa);
    let renormalizable = card.q.is_none();
    let (lam, lam_cv, nu) = if renormalizable {
        (
            Some(estimate_lambda(table, l0, beta)),
            Some(pool(&lambda_cv_by_n(table, l0, beta))),
            Some(estimate_nu(table, beta)),
        )
    } else {
        (None, None, None)
    };

    let mut checks = Vec::new();
    if let Some(l) = lam {
        checks.push(check_within("lambda", l, card.lambda, 3.0));
    }
    if let (Some(v), Some(target)) = (nu, card.nu) {
        checks.push(check_within("nu", v, target, 3.0));
    }
    let eos_pass = residuals
        .iter()
        .all(|r| r.bayes.within(0.0, 3.0) && r.gibbs.within(0.0, 3.0));
    let worst = residuals
        .iter()
        .flat_map(|r| [r.bayes, r.gibbs])
        .max_by(|a, b| a.z(0.0).total_cmp(&b.z(0.0)))
        .expect("non-empty table");
    checks.push(Check {
        name: "state_equations".into(),
        value: worst.value,
        se: worst.se,
        target: 0.0,
        rule: "every scaled residual within 3 se of 0 (worst reported)".into(),
        pass: eos_pass,
    });
    if let Some(vt) = vt {
        let vt_target = if renormalizable { 0.0 } else { 1.0 / 3.0 };
        checks.push(check_within("vt_slope", vt, vt_target, 3.0));
    }

    if let Some(q) = card.q {
        if let Some(kappa) = kappa {
            checks.push(Check {
                name: "kappa_range".into(),
                value: kappa.value,
                se: kappa.se,
                target: card.kappa,
                rule: "0.58 <= value <= 0.75 and (1 - value) >= 4 se".into(),
                pass: (0.58..=0.75).contains(&kappa.value) && (1.0 - kappa.value) >= 4.0 * kappa.se,
            });
        }
        let coef = pooled_scaled(table, Series::Gg, l0, card.kappa);
        let target = q / 2.0;
        checks.push(Check {
            name: "gg_coefficient".into(),
            value: coef.value,
            se: coef.se,
            target,
            rule: "|value - target| <= 0.25 target".into(),
            pass: (coef.value - target).abs() <= 0.25 * target,
        });
        for (series, c) in PATTERN_SERIES.iter().zip(anomalous_pattern(beta)) {
            let offset = if series.is_loss() { l0 } else { 0.0 };
            let est = pooled_scaled(table, *series, offset, card.kappa);
            checks.push(check_within(
                &format!("pattern_{}", series.name()),
                est,
                c * q,
                3.0,
            ));
        }
    } else if let Some(kappa) = kappa {
        checks.push(check_within("kappa", kappa, 1.0, 3.0));
    }

    Ok(FitReport {
        model: table.model.to_string(),
        beta,
        n_grid: table.ns(),
        theory_card: card,
        fit: FitResult {
            kappa_hat: kappa.map(|e| e.value),
            kappa_se: kappa.map(|e| e.se),
            lambda_hat: lam.map(|e| e.value),
            lambda_se: lam.map(|e| e.se),
            lambda_cv_hat: lam_cv.map(|e| e.value),
            lambda_cv_se: lam_cv.map(|e| e.se),
            nu_hat: nu.map(|e| e.value),
            nu_se: nu.map(|e| e.se),
            vt_slope: vt.map(|e| e.value),
            vt_slope_se: vt.map(|e| e.se),
            state_eq_residuals: residuals,
            lambda_by_n: if renormalizable {
                lambda_by_n(table, l0, beta)
            } else {
                vec![]
            },
            lambda_cv_by_n: if renormalizable {
                lambda_cv_by_n(table, l0, beta)
            } else {
                vec![]
            },
            nu_by_n: if renormalizable {
                nu_by_n(table, beta)
            } else {
                vec![]
            },
        },
        checks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ModelId;

    fn exact_table(id: ModelId, beta: f64, ns: &[usize]) -> AggregateTable {
        let card = ModelSpec::builtin(id).theory_card();
        let card = if id == ModelId::SingularAb {
            TheoryCard {
                nu: Some(0.3),
                ..card
            }
        } else {
            card
        };
        let sets: Vec<_> = ns.iter().map(|&n| card.predict(beta, n).unwrap()).collect();
        AggregateTable::exact(id, beta, &sets)
    }

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn exact_universal_tables_round_trip() {
        for beta in [0.5, 1.0, 2.0] {
            let t = exact_table(ModelId::Regular1d, beta, &[100, 200, 400, 800]);
            let l0 = ModelSpec::builtin(ModelId::Regular1d).min_loss();
            assert!(rel(estimate_lambda(&t, l0, beta).value, 0.5) < 1e-12);
            assert!(rel(estimate_nu(&t, beta).value, 0.5) < 1e-12);
            assert!(rel(fit_exponent(&t, Series::Gg, l0).unwrap().value, 1.0) < 1e-12);
            for r in check_state_equations(&t, 1.0) {
                assert!(r.bayes.value.abs() < 1e-12 && r.gibbs.value.abs() < 1e-12);
            }
        }
    }

    #[test]
    fn exact_anomalous_table_recovers_two_thirds() {
        let t = exact_table(ModelId::NonrenormA, 1.0, &[200, 500, 1000, 2000]);
        let l0 = ModelSpec::builtin(ModelId::NonrenormA).min_loss();
        let k = fit_exponent(&t, Series::Gg, l0).unwrap();
        assert!(rel(k.value, 2.0 / 3.0) < 1e-12);
        let vt = check_vt_growth(&t).unwrap();
        assert!(rel(vt.value, 1.0 / 3.0) < 1e-12);
        for r in check_state_equations(&t, 2.0 / 3.0) {
            assert!(r.bayes.value.abs() < 1e-12 && r.gibbs.value.abs() < 1e-12);
        }
        let report = fit_table(&t).unwrap();
        assert!(report.checks.iter().all(|c| c.pass), "{:#?}", report.checks);
    }

    #[test]
    fn sign_change_is_an_error() {
        let t = exact_table(ModelId::Regular1d, 1.0, &[100, 200]);
        let l0 = ModelSpec::builtin(ModelId::Regular1d).min_loss();
        // Gt - L0 = 0 at beta = 1
        assert!(matches!(
            fit_exponent(&t, Series::Gt, l0),
            Err(Error::SignChange)
        ));
    }

    #[test]
    fn pooling() {
        let p = pool(&[
            Estimate {
                value: 1.0,
                se: 1.0,
            },
            Estimate {
                value: 3.0,
                se: 1.0,
            },
        ]);
        assert_eq!(p.value, 2.0);
        assert!((p.se - 0.5f64.sqrt()).abs() < 1e-15);
        let p = pool(&[
            Estimate {
                value: 1.0,
                se: 0.0,
            },
            Estimate {
                value: 3.0,
                se: 0.0,
            },
        ]);
        assert_eq!((p.value, p.se), (2.0, 0.0));
    }

    #[test]
    fn anomalous_pattern_satisfies_state_equations() {
        for beta in [0.5, 1.0, 2.0] {
            let [bg, bt, gg, gt, yt] = anomalous_pattern(beta);
            assert!((bg - bt - beta * yt).abs() < 1e-15);
            assert!((gg - gt - beta * yt).abs() < 1e-15);
        }
    }
}
