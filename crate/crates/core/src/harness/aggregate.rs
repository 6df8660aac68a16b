use serde::{Deserialize, Serialize};

use crate::model::ModelId;
use crate::observables::ObservableSet;

/// Columns tracked per replication and averaged in the aggregate table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Series {
    Bg,
    Bt,
    Gg,
    Gt,
    Yg,
    Yt,
    Vt,
    Waic,
    /// `Bg - Bt - beta * Yt`
    EosBayes,
    /// `Gg - Gt - beta * Yt`
    EosGibbs,
    /// `Gg + Gt`
    GibbsSum,
    /// Training loss at the optimum.
    Ln0,
    /// `Gg + Gt - Ln0`, same mean as `Gg + Gt - L0` with the empirical
    /// entropy fluctuation removed.
    GibbsSumCentered,
}

impl Series {
    pub const ALL: [Series; 13] = [
        Series::Bg,
        Series::Bt,
        Series::Gg,
        Series::Gt,
        Series::Yg,
        Series::Yt,
        Series::Vt,
        Series::Waic,
        Series::EosBayes,
        Series::EosGibbs,
        Series::GibbsSum,
        Series::Ln0,
        Series::GibbsSumCentered,
    ];

    /// The six Bayes observables.
    pub const OBSERVABLES: [Series; 6] = [
        Series::Bg,
        Series::Bt,
        Series::Gg,
        Series::Gt,
        Series::Yg,
        Series::Yt,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Series::Bg => "Bg",
            Series::Bt => "Bt",
            Series::Gg => "Gg",
            Series::Gt => "Gt",
            Series::Yg => "Yg",
            Series::Yt => "Yt",
            Series::Vt => "Vt",
            Series::Waic => "waic",
            Series::EosBayes => "eos_bayes",
            Series::EosGibbs => "eos_gibbs",
            Series::GibbsSum => "GgGt",
            Series::Ln0 => "Ln0",
            Series::GibbsSumCentered => "GgGt_centered",
        }
    }

    pub fn from_name(s: &str) -> Option<Series> {
        Series::ALL.into_iter().find(|v| v.name() == s)
    }

    fn index(self) -> usize {
        Series::ALL.iter().position(|&v| v == self).unwrap()
    }

    pub fn of(self, o: &ObservableSet) -> f64 {
        match self {
            Series::Bg => o.bg,
            Series::Bt => o.bt,
            Series::Gg => o.gg,
            Series::Gt => o.gt,
            Series::Yg => o.yg,
            Series::Yt => o.yt,
            Series::Vt => o.vt,
            Series::Waic => o.waic,
            Series::EosBayes => o.bg - o.bt - o.beta * o.yt,
            Series::EosGibbs => o.gg - o.gt - o.beta * o.yt,
            Series::GibbsSum => o.gg + o.gt,
            Series::Ln0 => o.ln0,
            Series::GibbsSumCentered => o.gg + o.gt - o.ln0,
        }
    }

    /// Whether the series is a loss, i.e. sits at `L0` plus an offset.
    pub fn is_loss(self) -> bool {
        matches!(
            self,
            Series::Bg | Series::Bt | Series::Gg | Series::Gt | Series::Waic | Series::Ln0
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanSe {
    pub mean: f64,
    pub se: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AggregateRow {
    pub n: usize,
    pub replications: usize,
    stats: Vec<MeanSe>,
}

impl AggregateRow {
    pub fn new(n: usize, replications: usize, stats: Vec<MeanSe>) -> Self {
        assert_eq!(stats.len(), Series::ALL.len());
        AggregateRow {
            n,
            replications,
            stats,
        }
    }

    pub fn get(&self, s: Series) -> MeanSe {
        self.stats[s.index()]
    }

    /// Mean and standard error (`sd / sqrt(R)`) of each series.
    pub fn from_sets(n: usize, sets: &[ObservableSet]) -> Self {
        let r = sets.len();
        let rf = r as f64;
        let stats = Series::ALL
            .iter()
            .map(|s| {
                let v: Vec<f64> = sets.iter().map(|o| s.of(o)).collect();
                let mean = v.iter().sum::<f64>() / rf;
                let se = if r > 1 {
                    (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (rf - 1.0) / rf).sqrt()
                } else {
                    0.0
                };
                MeanSe { mean, se }
            })
            .collect();
        AggregateRow::new(n, r, stats)
    }
}

/// Replication means and standard errors per sample size.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregateTable {
    pub model: ModelId,
    pub beta: f64,
    pub rows: Vec<AggregateRow>,
}

impl AggregateTable {
    pub fn ns(&self) -> Vec<usize> {
        self.rows.iter().map(|r| r.n).collect()
    }

    pub fn row(&self, n: usize) -> Option<&AggregateRow> {
        self.rows.iter().find(|r| r.n == n)
    }

    /// A table holding exact expectations with zero standard errors.
    pub fn exact(model: ModelId, beta: f64, sets: &[ObservableSet]) -> Self {
        AggregateTable {
            model,
            beta,
            rows: sets
                .iter()
                .map(|o| AggregateRow::from_sets(o.n, std::slice::from_ref(o)))
                .collect(),
        }
    }
}
