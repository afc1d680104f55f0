//! Seeded best-response experiments over the four synthetic setups.
//!
//! Each trial draws its instance from `ChaCha8Rng::seed_from_u64(seed)` on
//! stream `trial`, so a trial's instance does not depend on how many other
//! trials run or in which order. Every (mechanism, α) pair of a trial shares
//! that instance. SPA and FPA have no α and get a single row per trial with
//! `alpha = 1`.

use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{bail, Context, Result};
use arena_core::equilibrium::{run_dynamics, DynamicsConfig};
use arena_core::{Instance, MechanismKind, MechanismSpec};
use rand::distributions::{Distribution, Uniform};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::format::load_instance;
use crate::plot::{self, Chart, HLine, Series};

#[derive(Debug, Clone, PartialEq)]
pub enum Setup {
    /// i.i.d. Uniform[0.3, 1] values.
    A,
    /// Each advertiser is "high" (Uniform[1, 1.2]) or "low" (Uniform[0.3, 0.5])
    /// with probability ½, independently.
    B,
    /// `[[1, 0.01], [0.01, 0.99]]`.
    C,
    /// `[[1], [0.9]]`.
    D,
    File(PathBuf),
}

impl Setup {
    pub fn id(&self) -> &str {
        match self {
            Setup::A => "a",
            Setup::B => "b",
            Setup::C => "c",
            Setup::D => "d",
            Setup::File(_) => "file",
        }
    }

    /// Whether the instance depends on the random stream.
    pub fn is_random(&self) -> bool {
        matches!(self, Setup::A | Setup::B)
    }
}

impl FromStr for Setup {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "a" => Setup::A,
            "b" => Setup::B,
            "c" => Setup::C,
            "d" => Setup::D,
            other => match other.strip_prefix("file:") {
                Some(p) => Setup::File(PathBuf::from(p)),
                None => bail!("unknown setup {other:?} (expected a, b, c, d or file:<path>)"),
            },
        })
    }
}

pub const DEFAULT_QUERIES: usize = 50;

pub fn gen_instance<R: Rng + ?Sized>(
    setup: &Setup,
    queries: usize,
    rng: &mut R,
) -> Result<Instance> {
    let inst = match setup {
        Setup::A => {
            let u = Uniform::new_inclusive(0.3, 1.0);
            let rows = (0..2)
                .map(|_| (0..queries).map(|_| u.sample(rng)).collect())
                .collect();
            Instance::with_unit_targets(rows)?
        }
        Setup::B => {
            let high = Uniform::new_inclusive(1.0, 1.2);
            let low = Uniform::new_inclusive(0.3, 0.5);
            let rows = (0..2)
                .map(|_| {
                    let u = if rng.gen_bool(0.5) { high } else { low };
                    (0..queries).map(|_| u.sample(rng)).collect()
                })
                .collect();
            Instance::with_unit_targets(rows)?
        }
        Setup::C => Instance::with_unit_targets(vec![vec![1.0, 0.01], vec![0.01, 0.99]])?,
        Setup::D => Instance::with_unit_targets(vec![vec![1.0], vec![0.9]])?,
        Setup::File(path) => {
            load_instance(path).with_context(|| format!("reading {}", path.display()))?
        }
    };
    Ok(inst)
}

/// The instance of trial `trial`.
pub fn trial_instance(setup: &Setup, queries: usize, seed: u64, trial: usize) -> Result<Instance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial as u64);
    gen_instance(setup, queries, &mut rng)
}

/// Parses `lo:hi:step` (inclusive, with `hi` kept if the last step lands
/// within 1e-9 of it) or a comma-separated list.
pub fn parse_alphas(s: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = s.split(':').collect();
    let alphas = if parts.len() == 3 {
        let lo: f64 = parts[0].trim().parse()?;
        let hi: f64 = parts[1].trim().parse()?;
        let step: f64 = parts[2].trim().parse()?;
        if !(step > 0.0 && hi >= lo) {
            bail!("bad alpha range {s:?}");
        }
        let n = ((hi - lo) / step + 1e-9).floor() as usize;
        // Rounding to 12 decimals keeps 1.1 + 3·0.05 printing as 1.25.
        (0..=n)
            .map(|k| ((lo + step * k as f64) * 1e12).round() / 1e12)
            .collect()
    } else {
        s.split(',')
            .map(|t| t.trim().parse::<f64>().map_err(Into::into))
            .collect::<Result<Vec<_>>>()?
    };
    if alphas.is_empty() || alphas.iter().any(|&a| a.is_nan() || a < 1.0) {
        bail!("alphas must be >= 1, got {s:?}");
    }
    Ok(alphas)
}

pub fn parse_mechanisms(s: &str) -> Result<Vec<MechanismKind>> {
    s.split(',')
        .map(|t| MechanismKind::parse(t).ok_or_else(|| anyhow::anyhow!("unknown mechanism {t:?}")))
        .collect()
}

pub fn default_alphas() -> Vec<f64> {
    parse_alphas("1.05:2.0:0.05").expect("valid default grid")
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub setup: Setup,
    pub mechanisms: Vec<MechanismKind>,
    pub alphas: Vec<f64>,
    pub trials: usize,
    pub seed: u64,
    pub queries: usize,
    pub out_dir: Option<PathBuf>,
    pub dynamics: DynamicsConfig,
}

impl ExperimentConfig {
    pub fn new(setup: Setup) -> Self {
        Self {
            setup,
            mechanisms: vec![
                MechanismKind::Spa,
                MechanismKind::Rfpa,
                MechanismKind::Rtruth,
            ],
            alphas: default_alphas(),
            trials: 20,
            seed: 7,
            queries: DEFAULT_QUERIES,
            out_dir: None,
            dynamics: DynamicsConfig::default(),
        }
    }

    /// Mechanisms in output order: each randomized kind once per α.
    pub fn specs(&self) -> Result<Vec<MechanismSpec>> {
        let mut specs = Vec::new();
        for &kind in &self.mechanisms {
            match kind {
                MechanismKind::Spa | MechanismKind::Fpa => {
                    specs.push(MechanismSpec::new(kind, 1.0)?)
                }
                MechanismKind::Rfpa | MechanismKind::Rtruth => {
                    for &a in &self.alphas {
                        specs.push(MechanismSpec::new(kind, a)?);
                    }
                }
            }
        }
        Ok(specs)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialRow {
    pub trial: usize,
    pub setup: String,
    pub mechanism: String,
    pub alpha: f64,
    pub converged: bool,
    pub iterations: usize,
    pub lw_eq: f64,
    pub lw_opt: f64,
    pub poa: f64,
    pub gamma_achieved: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub setup: String,
    pub mechanism: String,
    pub alpha: f64,
    pub trials: usize,
    pub converged: usize,
    pub not_converged: usize,
    /// Mean over converged trials; NaN if none converged.
    pub mean_poa: f64,
}

pub struct ExperimentOutput {
    pub rows: Vec<TrialRow>,
    pub summary: Vec<SummaryRow>,
}

impl ExperimentOutput {
    pub fn mean_poa(&self, mechanism: MechanismKind, alpha: f64) -> Option<&SummaryRow> {
        let alpha = if matches!(mechanism, MechanismKind::Spa | MechanismKind::Fpa) {
            1.0
        } else {
            alpha
        };
        self.summary
            .iter()
            .find(|r| r.mechanism == mechanism.name() && (r.alpha - alpha).abs() < 1e-12)
    }
}

/// Runs every (trial, mechanism, α) combination on the worker pool. Rows
/// come back in trial-major order regardless of scheduling.
pub fn run_trials(config: &ExperimentConfig) -> Result<Vec<TrialRow>> {
    if config.trials == 0 {
        bail!("trials must be >= 1");
    }
    let specs = config.specs()?;
    let instances = (0..config.trials)
        .map(|t| trial_instance(&config.setup, config.queries, config.seed, t))
        .collect::<Result<Vec<_>>>()?;
    let jobs: Vec<(usize, MechanismSpec)> = (0..config.trials)
        .flat_map(|t| specs.iter().map(move |s| (t, *s)))
        .collect();
    let setup = config.setup.id().to_string();
    let rows = crate::with_pool(|| {
        jobs.par_iter()
            .map(|&(trial, spec)| {
                let dyn_cfg = DynamicsConfig {
                    seed: trial as u64,
                    ..config.dynamics
                };
                let r = run_dynamics(&instances[trial], &spec, &dyn_cfg)?;
                Ok(TrialRow {
                    trial,
                    setup: setup.clone(),
                    mechanism: spec.kind.name().to_string(),
                    alpha: spec.alpha,
                    converged: r.converged,
                    iterations: r.iterations,
                    lw_eq: r.lw_eq,
                    lw_opt: r.lw_opt,
                    poa: r.poa,
                    gamma_achieved: r.gamma_achieved,
                })
            })
            .collect::<Result<Vec<_>>>()
    })??;
    Ok(rows)
}

pub fn summarize(rows: &[TrialRow]) -> Vec<SummaryRow> {
    let mut out: Vec<SummaryRow> = Vec::new();
    let mut sums: Vec<f64> = Vec::new();
    for r in rows {
        let k = match out
            .iter()
            .position(|s| s.mechanism == r.mechanism && s.alpha == r.alpha && s.setup == r.setup)
        {
            Some(k) => k,
            None => {
                out.push(SummaryRow {
                    setup: r.setup.clone(),
                    mechanism: r.mechanism.clone(),
                    alpha: r.alpha,
                    trials: 0,
                    converged: 0,
                    not_converged: 0,
                    mean_poa: f64::NAN,
                });
                sums.push(0.0);
                out.len() - 1
            }
        };
        out[k].trials += 1;
        if r.converged {
            out[k].converged += 1;
            sums[k] += r.poa;
        } else {
            out[k].not_converged += 1;
        }
    }
    for (s, sum) in out.iter_mut().zip(sums) {
        if s.converged > 0 {
            s.mean_poa = sum / s.converged as f64;
        }
    }
    out
}

pub fn write_csv<T: Serialize>(rows: &[T], path: &Path) -> Result<()> {
    let mut w =
        csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Mean PoA against α, one curve per randomized mechanism and a flat line
/// per deterministic one.
pub fn poa_chart(setup: &str, summary: &[SummaryRow]) -> Chart<'static> {
    let mut series: Vec<Series> = Vec::new();
    let mut hlines = Vec::new();
    for s in summary.iter().filter(|s| s.mean_poa.is_finite()) {
        if s.mechanism == "spa" || s.mechanism == "fpa" {
            hlines.push(HLine {
                name: s.mechanism.clone(),
                y: s.mean_poa,
            });
            continue;
        }
        match series.iter_mut().find(|c| c.name == s.mechanism) {
            Some(c) => c.points.push((s.alpha, s.mean_poa)),
            None => series.push(Series {
                name: s.mechanism.clone(),
                points: vec![(s.alpha, s.mean_poa)],
            }),
        }
    }
    let title: &'static str = match setup {
        "a" => "setup a: mean PoA vs alpha",
        "b" => "setup b: mean PoA vs alpha",
        "c" => "setup c: mean PoA vs alpha",
        "d" => "setup d: mean PoA vs alpha",
        _ => "mean PoA vs alpha",
    };
    Chart {
        title,
        x_label: "alpha",
        y_label: "PoA (lower is better)",
        series,
        hlines,
    }
}

/// Runs the experiment and, if `out_dir` is set, writes
/// `<setup>_trials.csv`, `<setup>_summary.csv` and `<setup>_poa.svg`.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentOutput> {
    if let Some(dir) = &config.out_dir {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let rows = run_trials(config)?;
    let summary = summarize(&rows);
    if let Some(dir) = &config.out_dir {
        let id = config.setup.id();
        write_csv(&rows, &dir.join(format!("{id}_trials.csv")))?;
        write_csv(&summary, &dir.join(format!("{id}_summary.csv")))?;
        let chart = poa_chart(id, &summary);
        // Without an α sweep there is no x axis to draw.
        if !chart.series.is_empty() {
            plot::render(&chart, &dir.join(format!("{id}_poa.svg")))?;
        }
    }
    Ok(ExperimentOutput { rows, summary })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixed_setups() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let c = gen_instance(&Setup::C, 50, &mut rng).unwrap();
        assert_eq!(c.rows(), vec![vec![1.0, 0.01], vec![0.01, 0.99]]);
        let d = gen_instance(&Setup::D, 50, &mut rng).unwrap();
        assert_eq!(d.rows(), vec![vec![1.0], vec![0.9]]);
    }

    #[test]
    fn random_setups_are_reproducible_and_in_range() {
        let a = trial_instance(&Setup::A, 50, 7, 3).unwrap();
        assert_eq!(a, trial_instance(&Setup::A, 50, 7, 3).unwrap());
        assert_ne!(a, trial_instance(&Setup::A, 50, 7, 4).unwrap());
        assert_eq!(a.num_queries(), 50);
        assert!(a.rows().iter().flatten().all(|&v| (0.3..=1.0).contains(&v)));

        for t in 0..20 {
            let b = trial_instance(&Setup::B, 50, 7, t).unwrap();
            for row in b.rows() {
                let high = row.iter().all(|&v| (1.0..=1.2).contains(&v));
                let low = row.iter().all(|&v| (0.3..=0.5).contains(&v));
                assert!(high ^ low);
            }
        }
    }

    #[test]
    fn alpha_grids() {
        let a = parse_alphas("1.1:2.0:0.05").unwrap();
        assert_eq!(a.len(), 19);
        assert_eq!(a[0], 1.1);
        assert_eq!(a[3], 1.25);
        assert_eq!(*a.last().unwrap(), 2.0);
        assert_eq!(default_alphas().len(), 20);
        assert_eq!(parse_alphas("1.4, 2").unwrap(), vec![1.4, 2.0]);
        assert!(parse_alphas("0.5").is_err());
        assert!(parse_alphas("2:1:0.1").is_err());
    }

    #[test]
    fn summary_excludes_non_converged() {
        let row = |trial, converged, poa| TrialRow {
            trial,
            setup: "a".into(),
            mechanism: "spa".into(),
            alpha: 1.0,
            converged,
            iterations: 1,
            lw_eq: 1.0,
            lw_opt: poa,
            poa,
            gamma_achieved: 0.0,
        };
        let s = summarize(&[row(0, true, 1.0), row(1, false, 9.0), row(2, true, 1.5)]);
        assert_eq!(s.len(), 1);
        assert_eq!((s[0].trials, s[0].converged, s[0].not_converged), (3, 2, 1));
        assert_eq!(s[0].mean_poa, 1.25);
    }
}
