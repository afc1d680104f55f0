//! The acceptance suite run by `arena verify` and the `acceptance` test
//! target. Every check prints one line; tolerances are fixed constants.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use anyhow::{Context, Result};
use arena_core::autobidder::{
    check_bid_floors, check_undominated, rfpa_best_response, rfpa_grid_oracle, DeviationGrid,
    ResponseOptions,
};
use arena_core::bounds::{eval_f, optimize_f, BetaGrid, BoundVariant, Case1Term, OptimizeConfig};
use arena_core::equilibrium::{run_dynamics, DynamicsConfig};
use arena_core::mechanisms::{myerson_price_numeric, rfpa_win_prob, rtruth_expected_price};
use arena_core::{BidProfile, Instance, MechanismKind, MechanismSpec};
use rand::distributions::{Distribution, Uniform};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::curves::{self, BoundsConfig, LbSpec};
use crate::experiment::{self, ExperimentConfig, ExperimentOutput, Setup};

#[derive(Debug, Clone)]
pub struct CriterionResult {
    pub id: u32,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub elapsed: Duration,
}

impl CriterionResult {
    pub fn line(&self) -> String {
        format!(
            "[{}] {:>2} {:<28} {:>8.2}s  {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.elapsed.as_secs_f64(),
            self.detail
        )
    }
}

#[derive(Debug, Clone)]
pub struct VerifyConfig {
    pub seed: u64,
    /// Where CSV outputs go; criterion 10 writes a second copy next to it.
    pub out_dir: PathBuf,
}

fn timed(
    id: u32,
    name: &'static str,
    f: impl FnOnce() -> Result<(bool, String)>,
) -> CriterionResult {
    let start = Instant::now();
    let (passed, detail) = match f() {
        Ok(r) => r,
        Err(e) => (false, format!("error: {e:#}")),
    };
    CriterionResult {
        id,
        name,
        passed,
        detail,
        elapsed: start.elapsed(),
    }
}

fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn uniform_instance(rng: &mut ChaCha8Rng, queries: usize) -> Result<Instance> {
    let u = Uniform::new_inclusive(0.3, 1.0);
    let rows = (0..2)
        .map(|_| (0..queries).map(|_| u.sample(rng)).collect())
        .collect();
    Ok(Instance::with_unit_targets(rows)?)
}

pub const BOUND_TARGET: f64 = 1.0 / 1.8;

/// 1. rFPA bound at α = 1.4, γ = 0.56.
pub fn c1_rfpa_bound() -> CriterionResult {
    timed(1, "rfpa bound f(1.4)", || {
        let start = Instant::now();
        let e = eval_f(
            1.4,
            0.56,
            BoundVariant::Rfpa,
            &BetaGrid::default(),
            Case1Term::EtaAlpha,
        )?;
        let secs = start.elapsed().as_secs_f64();
        let ok = e.f_value >= BOUND_TARGET - 1e-6
            && (e.term_eta_alpha - 0.616).abs() <= 1e-9
            && e.term_gamma == 0.56
            && e.g_min >= BOUND_TARGET
            && secs < 1.0;
        Ok((
            ok,
            format!(
                "f={:.6} eta*alpha={:.9} gamma={} min_g={:.6} at beta={:.4} (1/1.8={:.6}) eval {:.3}s",
                e.f_value, e.term_eta_alpha, e.term_gamma, e.g_min, e.g_argmin, BOUND_TARGET, secs
            ),
        ))
    })
}

/// 2. Best rTruth bound over (α, γ).
pub fn c2_rtruth_bound() -> CriterionResult {
    timed(2, "rtruth bound optimum", || {
        let start = Instant::now();
        let spend = optimize_f(BoundVariant::Rtruth, &OptimizeConfig::default())?;
        let secs = start.elapsed().as_secs_f64();
        let with_alpha = optimize_f(
            BoundVariant::Rtruth,
            &OptimizeConfig {
                case1: Case1Term::EtaAlpha,
                ..OptimizeConfig::default()
            },
        )?;
        let e = eval_f(
            spend.alpha,
            spend.gamma,
            BoundVariant::Rtruth,
            &BetaGrid::default(),
            Case1Term::EtaSpend,
        )?;
        let ok = spend.poa <= 1.91 && secs < 30.0;
        Ok((
            ok,
            format!(
                "PoA<={:.4} at alpha={:.4} gamma={:.4} ({:.1}s); first term eta*alpha={:.4} vs eta*spend={:.4}; \
                 optimum with eta*alpha term: PoA<={:.4} at alpha={:.4}",
                spend.poa,
                spend.alpha,
                spend.gamma,
                secs,
                e.term_eta_alpha,
                e.term_eta_spend,
                with_alpha.poa,
                with_alpha.alpha
            ),
        ))
    })
}

/// 3. Quadrature of the rTruth allocation rule against the closed-form price.
pub fn c3_myerson_oracle() -> CriterionResult {
    timed(3, "myerson oracle", || {
        let alphas = [1.1, 1.4, 2.0, 3.0];
        let other = 1.0;
        let mut worst: f64 = 0.0;
        for &alpha in &alphas {
            let la = f64::ln(alpha);
            for k in 0..50 {
                let beta = (-la + 2.0 * la * k as f64 / 49.0).exp();
                let bid = beta * other;
                let numeric = myerson_price_numeric(
                    |b, o| rfpa_win_prob(b, o, alpha).unwrap_or(0.0),
                    bid,
                    other,
                )?;
                let closed = rtruth_expected_price(bid, other, alpha);
                worst = worst.max((numeric - closed).abs());
            }
        }
        Ok((
            worst <= 1e-6,
            format!("max |numeric - closed| = {worst:.3e} over 50x4 grid"),
        ))
    })
}

/// 4. rTruth lower-bound instance at α = 1.4.
pub fn c4_rtruth_lb() -> CriterionResult {
    timed(4, "rtruth lower bound", || {
        let row = curves::verify_lb(&LbSpec::Rtruth {
            alpha: 1.4,
            epsilon: 1e-3,
        })?;
        let sweep = curves::run_lowerbounds(&[1e-2, 1e-3, 1e-4, 1e-5, 1e-6].map(|epsilon| {
            LbSpec::Rtruth {
                alpha: 1.4,
                epsilon,
            }
        }))?;
        let last = sweep.last().expect("non-empty sweep");
        let sweep_ok = sweep
            .iter()
            .all(|r| r.is_equilibrium && r.rel_error <= 1e-6)
            && sweep
                .windows(2)
                .all(|w| w[1].measured_ratio > w[0].measured_ratio)
            && last.measured_ratio >= 1.98;
        let ok = row.is_equilibrium && (1.978..=1.982).contains(&row.measured_ratio) && sweep_ok;
        Ok((
            ok,
            format!(
                "gamma=0 check {} measured={:.6} predicted={:.6}; eps=1e-6 gives {:.6} (limit {:.6})",
                if row.is_equilibrium { "passed" } else { "failed" },
                row.measured_ratio,
                row.predicted_ratio,
                last.measured_ratio,
                last.limit_ratio
            ),
        ))
    })
}

/// 5. Deterministic lower bound for FPA.
pub fn c5_det_lb() -> CriterionResult {
    timed(5, "fpa lower bound", || {
        let row = curves::verify_lb(&LbSpec::Deterministic {
            kind: MechanismKind::Fpa,
            b1: 1.0,
            b2: 1e4,
            epsilon: 1e-3,
            gamma: 1e-2,
        })?;
        let ok = row.is_equilibrium && row.measured_ratio >= 1.99;
        Ok((
            ok,
            format!(
                "gamma=0.01 check {} measured={:.6} predicted={:.6}",
                if row.is_equilibrium {
                    "passed"
                } else {
                    "failed"
                },
                row.measured_ratio,
                row.predicted_ratio
            ),
        ))
    })
}

fn random_dynamics(
    seed: u64,
    stream_base: u64,
    count: usize,
    mechanism: MechanismSpec,
) -> Result<Vec<(Instance, arena_core::equilibrium::EquilibriumReport)>> {
    let cfg = DynamicsConfig::default();
    crate::with_pool(|| {
        (0..count)
            .into_par_iter()
            .map(|k| {
                let inst = uniform_instance(&mut rng_for(seed, stream_base + k as u64), 10)?;
                let r = run_dynamics(
                    &inst,
                    &mechanism,
                    &DynamicsConfig {
                        seed: k as u64,
                        ..cfg
                    },
                )?;
                Ok((inst, r))
            })
            .collect::<Result<Vec<_>>>()
    })?
}

/// 6. FPA equilibria keep half the optimal welfare.
pub fn c6_fpa_half(seed: u64) -> CriterionResult {
    timed(6, "fpa welfare >= opt/2", || {
        let runs = random_dynamics(seed, 6_000, 100, MechanismSpec::fpa())?;
        let converged: Vec<_> = runs.iter().filter(|(_, r)| r.converged).collect();
        let violations = converged
            .iter()
            .filter(|(_, r)| r.lw_eq < r.lw_opt / 2.0 - 1e-6)
            .count();
        let worst = converged.iter().map(|(_, r)| r.poa).fold(1.0f64, f64::max);
        Ok((
            violations == 0 && !converged.is_empty(),
            format!(
                "{} of 100 converged, {violations} violations, worst PoA {worst:.4}",
                converged.len()
            ),
        ))
    })
}

/// 7. rFPA(1.4) equilibria respect the bid floors and are undominated.
pub fn c7_rfpa_invariants(seed: u64) -> CriterionResult {
    timed(7, "rfpa equilibrium invariants", || {
        let mech = MechanismSpec::rfpa(1.4)?;
        let runs = random_dynamics(seed, 7_000, 50, mech)?;
        let grid = DeviationGrid::default();
        let mut converged = 0;
        let mut floor_flags = 0;
        let mut dominated = 0;
        for (inst, r) in &runs {
            if !r.converged {
                continue;
            }
            converged += 1;
            let norm = inst.normalize();
            floor_flags += check_bid_floors(&norm, &r.bids, 1.4)?.flags.len();
            dominated += check_undominated(&norm, &r.bids, &mech, &grid)?
                .violations
                .len();
        }
        Ok((
            floor_flags == 0 && dominated == 0 && converged > 0,
            format!(
                "{converged} of 50 converged, {floor_flags} bid floor flags, {dominated} undominated violations ({} grid points)",
                grid.points
            ),
        ))
    })
}

/// 8. Dual-decomposition best response against the exhaustive grid oracle.
pub fn c8_oracle_equivalence(seed: u64) -> CriterionResult {
    timed(8, "best-response oracle", || {
        let opts = ResponseOptions::default();
        let results = crate::with_pool(|| {
            (0..200u64)
                .into_par_iter()
                .map(|k| {
                    let mut rng = rng_for(seed, 8_000 + k);
                    let m = rng.gen_range(1..=3);
                    let inst = uniform_instance(&mut rng, m)?;
                    let mut bids = BidProfile::truthful(&inst);
                    let scale = Uniform::new_inclusive(0.5, 2.0);
                    for j in 0..m {
                        bids.set_bid(1, j, inst.value(1, j) * scale.sample(&mut rng));
                    }
                    let fast = rfpa_best_response(&inst, 0, &bids, 1.4, &opts)?;
                    let slow = rfpa_grid_oracle(&inst, 0, &bids, 1.4, 1e-3, &opts)?;
                    let rel = (slow.value - fast.value) / slow.value.max(1e-12);
                    Ok(rel)
                })
                .collect::<Result<Vec<f64>>>()
        })??;
        let worst = results.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let beats = results.iter().filter(|&&r| r < 0.0).count();
        let bad = results.iter().filter(|&&r| r > 1e-3).count();
        Ok((
            bad == 0,
            format!("200 instances, {bad} mismatches > 1e-3, worst oracle excess {worst:.2e}, fast >= oracle on {beats}"),
        ))
    })
}

fn experiment_config(setup: Setup, seed: u64, out: &Path) -> ExperimentConfig {
    ExperimentConfig {
        seed,
        out_dir: Some(out.to_path_buf()),
        ..ExperimentConfig::new(setup)
    }
}

fn mean(out: &ExperimentOutput, kind: MechanismKind, alpha: f64) -> f64 {
    out.mean_poa(kind, alpha).map_or(f64::NAN, |r| r.mean_poa)
}

/// Curves for setups a and b: every (mechanism, α) has a row, and the best
/// rFPA α is at least as good as SPA and as the best rTruth α.
fn curve_check(out: &ExperimentOutput, alphas: &[f64]) -> (bool, String) {
    let best = |kind: MechanismKind| {
        alphas
            .iter()
            .map(|&a| (a, mean(out, kind, a)))
            .filter(|p| p.1.is_finite())
            .fold(
                (f64::NAN, f64::INFINITY),
                |b, p| if p.1 < b.1 { p } else { b },
            )
    };
    let complete = out.summary.len() == 1 + 2 * alphas.len()
        && out.summary.iter().all(|s| s.mean_poa.is_finite());
    let spa = mean(out, MechanismKind::Spa, 1.0);
    let (ra, rfpa) = best(MechanismKind::Rfpa);
    let (ta, rtruth) = best(MechanismKind::Rtruth);
    let failures: usize = out.summary.iter().map(|s| s.not_converged).sum();
    let ok = complete && rfpa <= spa + 1e-9 && rfpa <= rtruth + 1e-9;
    (
        ok,
        format!(
            "spa={spa:.4} best rfpa={rfpa:.4}@{ra} best rtruth={rtruth:.4}@{ta} non-converged={failures}"
        ),
    )
}

/// 9. The four experiment setups with 20 trials on the default α grid.
pub fn c9_experiments(config: &VerifyConfig) -> CriterionResult {
    timed(9, "experiment reproduction", || {
        let start = Instant::now();
        let outs = run_experiment_suite(config.seed, &config.out_dir)?;
        let secs = start.elapsed().as_secs_f64();
        let alphas = experiment::default_alphas();
        let (a, b, c, d) = (&outs[0], &outs[1], &outs[2], &outs[3]);
        let (ok_a, msg_a) = curve_check(a, &alphas);
        let (ok_b, msg_b) = curve_check(b, &alphas);
        let c_rfpa = mean(c, MechanismKind::Rfpa, 1.4);
        let c_spa = mean(c, MechanismKind::Spa, 1.0);
        let d_rfpa = mean(d, MechanismKind::Rfpa, 1.4);
        let d_spa = mean(d, MechanismKind::Spa, 1.0);
        let ok_c = c_rfpa < c_spa;
        let ok_d = (d_spa - 1.0).abs() <= 1e-9 && d_rfpa > 1.0;
        let ok = ok_a && ok_b && ok_c && ok_d && secs < 300.0;
        Ok((
            ok,
            format!(
                "(a) {} {msg_a}; (b) {} {msg_b}; (c) rfpa(1.4)={c_rfpa:.4} spa={c_spa:.4}; \
                 (d) spa={d_spa:.6} rfpa(1.4)={d_rfpa:.4}; total {secs:.1}s",
                if ok_a { "ok" } else { "bad" },
                if ok_b { "ok" } else { "bad" },
            ),
        ))
    })
}

/// Runs setups a–d with all three mechanisms and writes their CSVs.
pub fn run_experiment_suite(seed: u64, out: &Path) -> Result<Vec<ExperimentOutput>> {
    [Setup::A, Setup::B, Setup::C, Setup::D]
        .into_iter()
        .map(|s| experiment::run_experiment(&experiment_config(s, seed, out)))
        .collect()
}

/// Writes every CSV that `arena verify` produces.
pub fn write_all_outputs(seed: u64, out: &Path) -> Result<()> {
    run_experiment_suite(seed, out)?;
    write_bound_outputs(out)
}

fn write_bound_outputs(out: &Path) -> Result<()> {
    let single = curves::run_bounds(&BoundsConfig {
        variant: BoundVariant::Rfpa,
        alphas: vec![1.4],
        gamma: Some(0.56),
        beta_points: 4096,
        case1: Case1Term::EtaAlpha,
    })?;
    curves::write_bounds(&single, out)?;
    let sweep = curves::run_bounds(&BoundsConfig {
        variant: BoundVariant::Rtruth,
        alphas: experiment::default_alphas(),
        gamma: None,
        beta_points: 1024,
        case1: Case1Term::EtaSpend,
    })?;
    curves::write_bounds(&sweep, out)?;
    let rtruth: Vec<LbSpec> = (0..10)
        .map(|k| LbSpec::Rtruth {
            alpha: 1.1 + 0.1 * k as f64,
            epsilon: 1e-3,
        })
        .collect();
    curves::write_lowerbounds(&curves::run_lowerbounds(&rtruth)?, out, "rtruth")?;
    let fpa: Vec<LbSpec> = [1e2, 1e3, 1e4]
        .map(|b2| LbSpec::Deterministic {
            kind: MechanismKind::Fpa,
            b1: 1.0,
            b2,
            epsilon: 1e-3,
            gamma: 1e-2,
        })
        .to_vec();
    curves::write_lowerbounds(&curves::run_lowerbounds(&fpa)?, out, "fpa")?;
    Ok(())
}

fn csv_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .with_context(|| format!("listing {}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .collect();
    files.sort();
    Ok(files)
}

/// 10. A second run with the same seed writes byte-identical CSV files.
///
/// Expects criterion 9 to have populated `out_dir` already.
pub fn c10_determinism(config: &VerifyConfig) -> CriterionResult {
    timed(10, "determinism", || {
        write_bound_outputs(&config.out_dir)?;
        let second = config.out_dir.join("rerun");
        if second.exists() {
            fs::remove_dir_all(&second)?;
        }
        write_all_outputs(config.seed, &second)?;
        let first = csv_files(&config.out_dir)?;
        let again = csv_files(&second)?;
        let names = |v: &[PathBuf]| {
            v.iter()
                .map(|p| p.file_name().map(|n| n.to_owned()))
                .collect::<Vec<_>>()
        };
        if names(&first) != names(&again) {
            return Ok((
                false,
                format!("file sets differ: {} vs {}", first.len(), again.len()),
            ));
        }
        let mut differing = Vec::new();
        for (a, b) in first.iter().zip(&again) {
            if fs::read(a)? != fs::read(b)? {
                differing.push(
                    a.file_name()
                        .unwrap_or_default()
                        .to_string_lossy()
                        .into_owned(),
                );
            }
        }
        Ok((
            differing.is_empty(),
            if differing.is_empty() {
                format!("{} CSV files byte-identical", first.len())
            } else {
                format!("differing: {}", differing.join(", "))
            },
        ))
    })
}

/// Runs all ten criteria in order, calling `report` after each.
pub fn run_all(
    config: &VerifyConfig,
    mut report: impl FnMut(&CriterionResult),
) -> Vec<CriterionResult> {
    let mut results = Vec::with_capacity(10);
    let mut push = |r: CriterionResult| {
        report(&r);
        results.push(r);
    };
    push(c1_rfpa_bound());
    push(c2_rtruth_bound());
    push(c3_myerson_oracle());
    push(c4_rtruth_lb());
    push(c5_det_lb());
    push(c6_fpa_half(config.seed));
    push(c7_rfpa_invariants(config.seed));
    push(c8_oracle_equivalence(config.seed));
    push(c9_experiments(config));
    push(c10_determinism(config));
    results
}
