//! Multi-chain convergence diagnostics: effective sample size and the
//! split-chain potential scale reduction factor.

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn sample_var(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() as f64 - 1.0)
}

/// Biased (1/N) autocovariance at `lag`.
fn autocov(xs: &[f64], m: f64, lag: usize) -> f64 {
    let n = xs.len();
    xs[..n - lag]
        .iter()
        .zip(&xs[lag..])
        .map(|(a, b)| (a - m) * (b - m))
        .sum::<f64>()
        / n as f64
}

/// Pooled effective sample size of a scalar quantity tracked across chains.
///
/// Combines within-chain autocovariances with the between-chain variance and
/// truncates the autocorrelation sum with Geyer's initial monotone positive
/// sequence. Chains are trimmed to the shortest length. Returns the total
/// draw count when the series is constant.
pub fn effective_sample_size(chains: &[&[f64]]) -> f64 {
    let m = chains.len();
    let n = chains.iter().map(|c| c.len()).min().unwrap_or(0);
    assert!(
        m >= 1 && n >= 4,
        "ESS needs at least one chain of length >= 4"
    );
    let chains: Vec<&[f64]> = chains.iter().map(|c| &c[..n]).collect();
    let total = (m * n) as f64;
    let means: Vec<f64> = chains.iter().map(|c| mean(c)).collect();
    let acov0: Vec<f64> = chains
        .iter()
        .zip(&means)
        .map(|(c, &mu)| autocov(c, mu, 0))
        .collect();
    let nf = n as f64;
    let mean_var = mean(&acov0) * nf / (nf - 1.0);
    let mut var_plus = mean_var * (nf - 1.0) / nf;
    if m > 1 {
        var_plus += sample_var(&means);
    }
    if !(var_plus > 0.0) {
        return total;
    }
    let rho = |lag: usize| -> f64 {
        let acov = chains
            .iter()
            .zip(&means)
            .map(|(c, &mu)| autocov(c, mu, lag))
            .sum::<f64>()
            / m as f64;
        1.0 - (mean_var - acov) / var_plus
    };

    // Geyer: sum consecutive pairs while positive, enforcing monotonicity.
    let mut tau = -1.0;
    let mut prev_pair = f64::INFINITY;
    let mut lag = 0;
    while lag + 1 < n {
        let pair = rho(lag) + rho(lag + 1);
        if pair <= 0.0 {
            break;
        }
        let pair = pair.min(prev_pair);
        tau += 2.0 * pair;
        prev_pair = pair;
        lag += 2;
    }
    let tau = tau.max(1.0 / total.log10().max(1.0));
    total / tau
}

/// Split-chain potential scale reduction factor.
///
/// Each chain is halved, giving `2m` sequences of length `n/2`; returns
/// `sqrt(var_plus / W)`.
pub fn split_rhat(chains: &[&[f64]]) -> f64 {
    let n = chains.iter().map(|c| c.len()).min().unwrap_or(0);
    let half = n / 2;
    assert!(half >= 2, "split R-hat needs chains of length >= 4");
    let mut pieces: Vec<&[f64]> = Vec::with_capacity(2 * chains.len());
    for c in chains {
        pieces.push(&c[..half]);
        pieces.push(&c[n - half..n]);
    }
    let hf = half as f64;
    let means: Vec<f64> = pieces.iter().map(|p| mean(p)).collect();
    let w = mean(&pieces.iter().map(|p| sample_var(p)).collect::<Vec<_>>());
    let b = hf * sample_var(&means);
    if w == 0.0 {
        return if b == 0.0 { 1.0 } else { f64::INFINITY };
    }
    let var_plus = (hf - 1.0) / hf * w + b / hf;
    (var_plus / w).sqrt()
}
