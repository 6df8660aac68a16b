use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use slt_lab::{ModelId, ModelSpec};

#[test]
fn monte_carlo_excess_loss_matches_closed_form() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for id in ModelId::ALL {
        let model = ModelSpec::builtin(id);
        let data = model.sample_true(100_000, 99).unwrap();
        for _ in 0..20 {
            let w: Vec<f64> = model
                .param_box
                .iter()
                .map(|&(lo, hi)| rng.random_range(lo..hi))
                .collect();
            let f: Vec<f64> = data
                .points()
                .map(|x| model.log_density_ratio(x, &w).unwrap())
                .collect();
            let s = f.len() as f64;
            let mean = f.iter().sum::<f64>() / s;
            let sd = (f.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (s - 1.0)).sqrt();
            let target = model.kl_true(&w).unwrap();
            let se = sd / s.sqrt();
            assert!(
                (mean - target).abs() <= 4.0 * se.max(1e-15),
                "{id} w={w:?}: mc {mean} vs {target} (se {se})"
            );
        }
    }
}

#[test]
fn monte_carlo_loss_matches_closed_form() {
    for id in ModelId::ALL {
        let model = ModelSpec::builtin(id);
        let data = model.sample_true(100_000, 5).unwrap();
        let w: Vec<f64> = model
            .param_box
            .iter()
            .map(|&(lo, hi)| lo + 0.3 * (hi - lo))
            .collect();
        let v: Vec<f64> = data
            .points()
            .map(|x| -model.log_p(x, &w).unwrap())
            .collect();
        let s = v.len() as f64;
        let mean = v.iter().sum::<f64>() / s;
        let sd = (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (s - 1.0)).sqrt();
        let target = model.loss(&w).unwrap();
        assert!(
            (mean - target).abs() <= 4.0 * sd / s.sqrt(),
            "{id}: {mean} vs {target}"
        );
    }
}

#[test]
fn nonrenorm_kl_from_p0_is_quadratic_near_zero() {
    let model = ModelSpec::builtin(ModelId::NonrenormA);
    for a in [0.1, 0.01, 0.001] {
        let ratio = model.kl_from_p0(&[a]).unwrap() / (a * a / 2.0);
        assert!((ratio - 1.0).abs() <= 2.0 * a * a, "a={a}: {ratio}");
    }
}

#[test]
fn theory_sums_match_universal_law() {
    for id in [ModelId::Regular1d] {
        let card = ModelSpec::builtin(id).theory_card();
        let (lam, nu) = (card.lambda, card.nu.unwrap());
        for beta in [0.5, 1.0, 2.0] {
            for n in [100, 1000] {
                let o = card.predict(beta, n).unwrap();
                let bn = beta * n as f64;
                assert!(
                    ((o.bg - card.l0) + (o.bt - card.l0) - 2.0 * (lam - nu) / bn).abs() < 1e-14
                );
                assert!(((o.gg - card.l0) + (o.gt - card.l0) - 2.0 * lam / bn).abs() < 1e-14);
            }
        }
    }
}

#[test]
fn renormalizability_ratios() {
    let r = ModelSpec::builtin(ModelId::Regular1d);
    for eps in [1e-3, 0.01, 0.5, 4.0] {
        assert_eq!(r.renormalizability_ratio(eps).unwrap(), 1.0);
    }
    assert!(
        ModelSpec::builtin(ModelId::SingularAb)
            .renormalizability_ratio(0.01)
            .unwrap()
            >= 0.99
    );
    assert!(
        ModelSpec::builtin(ModelId::NonrenormA)
            .renormalizability_ratio(5e-5)
            .unwrap()
            <= 0.02
    );
}
