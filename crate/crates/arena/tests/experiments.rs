use arena::curves::{run_lowerbounds, LbSpec};
use arena::experiment::{run_experiment, ExperimentConfig, Setup};
use arena_core::bounds::rtruth_lb_ratio;
use arena_core::MechanismKind;

fn small(setup: Setup, alphas: Vec<f64>, trials: usize) -> ExperimentConfig {
    let mut config = ExperimentConfig::new(setup);
    config.alphas = alphas;
    config.trials = trials;
    config
}

#[test]
fn two_query_instance_orders_the_auctions() {
    let out = run_experiment(&small(Setup::C, vec![1.4], 3)).unwrap();
    let mean = |k| out.mean_poa(k, 1.4).unwrap().mean_poa;
    let (spa, rfpa, rtruth) = (
        mean(MechanismKind::Spa),
        mean(MechanismKind::Rfpa),
        mean(MechanismKind::Rtruth),
    );
    assert!(
        rfpa <= rtruth && rfpa <= spa,
        "spa {spa} rfpa {rfpa} rtruth {rtruth}"
    );
    assert!(out.rows.iter().all(|r| r.converged));
}

#[test]
fn single_query_rfpa_matches_the_misallocation_probability() {
    let alphas = vec![1.05, 1.1, 1.2, 1.4, 1.7, 2.0];
    let mut config = small(Setup::D, alphas.clone(), 2);
    config.mechanisms = vec![MechanismKind::Spa, MechanismKind::Rfpa];
    let out = run_experiment(&config).unwrap();
    assert_eq!(out.mean_poa(MechanismKind::Spa, 1.0).unwrap().mean_poa, 1.0);
    let mut prev = 1.0;
    for &alpha in &alphas {
        let poa = out.mean_poa(MechanismKind::Rfpa, alpha).unwrap().mean_poa;
        let ln_ratio = (1.0f64 / 0.9).ln();
        let expected = if alpha <= 1.0 / 0.9 {
            1.0
        } else {
            let p = 0.5 * (1.0 - ln_ratio / alpha.ln());
            1.0 / (1.0 - 0.1 * p)
        };
        assert!(
            (poa - expected).abs() < 1e-6,
            "alpha {alpha}: {poa} vs {expected}"
        );
        assert!(poa >= prev - 1e-12);
        prev = poa;
    }
}

#[test]
fn rtruth_lower_bound_sweep_tracks_the_limit() {
    let specs: Vec<LbSpec> = (0..=10)
        .map(|k| LbSpec::Rtruth {
            alpha: 1.1 + 0.09 * k as f64,
            epsilon: 1e-4,
        })
        .collect();
    for row in run_lowerbounds(&specs).unwrap() {
        assert!(row.is_equilibrium, "{row:?}");
        let limit = rtruth_lb_ratio(row.alpha).unwrap();
        assert!((row.measured_ratio - limit).abs() < 1e-3, "{row:?}");
    }
}

#[test]
fn deterministic_lower_bounds_approach_two() {
    for kind in [MechanismKind::Fpa, MechanismKind::Spa] {
        let specs: Vec<LbSpec> = [1e2, 1e3, 1e4]
            .iter()
            .map(|&b2| LbSpec::Deterministic {
                kind,
                b1: 1.0,
                b2,
                epsilon: 1e-3,
                gamma: 1e-2,
            })
            .collect();
        let rows = run_lowerbounds(&specs).unwrap();
        for w in rows.windows(2) {
            assert!(w[1].measured_ratio > w[0].measured_ratio);
        }
        for r in &rows {
            assert!(r.is_equilibrium && r.measured_ratio < 2.0, "{r:?}");
        }
    }
}
