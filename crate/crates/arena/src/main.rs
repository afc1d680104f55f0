use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Result};
use arena::acceptance::{self, VerifyConfig};
use arena::curves::{self, BoundsConfig, LbSpec};
use arena::experiment::{self, ExperimentConfig, Setup};
use arena::format;
use arena_core::bounds::{optimize_f, BoundVariant, Case1Term, OptimizeConfig};
use arena_core::MechanismKind;
use clap::{Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(
    name = "arena",
    version,
    about = "Auto-bidding auction experiments and bounds"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Variant {
    Rfpa,
    Rtruth,
}

impl From<Variant> for BoundVariant {
    fn from(v: Variant) -> Self {
        match v {
            Variant::Rfpa => BoundVariant::Rfpa,
            Variant::Rtruth => BoundVariant::Rtruth,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Case1 {
    EtaAlpha,
    EtaSpend,
}

impl From<Case1> for Case1Term {
    fn from(c: Case1) -> Self {
        match c {
            Case1::EtaAlpha => Case1Term::EtaAlpha,
            Case1::EtaSpend => Case1Term::EtaSpend,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum LbKind {
    Rtruth,
    Fpa,
    Spa,
}

#[derive(Subcommand)]
enum Command {
    /// Run best-response dynamics over a setup and write per-trial CSV,
    /// summary CSV and a PoA plot.
    Run {
        /// a, b, c, d or file:<path>
        #[arg(long)]
        setup: Setup,
        #[arg(long, default_value = "spa,rfpa,rtruth")]
        mechanisms: String,
        /// `lo:hi:step` or a comma-separated list.
        #[arg(long, default_value = "1.05:2.0:0.05")]
        alphas: String,
        #[arg(long, default_value_t = 20)]
        trials: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        /// Queries per instance for setups a and b.
        #[arg(long, default_value_t = experiment::DEFAULT_QUERIES)]
        queries: usize,
        #[arg(long, default_value = "results")]
        out: PathBuf,
        #[arg(long, default_value_t = 500)]
        max_rounds: usize,
    },
    /// Evaluate the welfare bound f at one α or over an α range.
    Bounds {
        #[arg(long, value_enum)]
        variant: Variant,
        /// A value, `lo:hi:step` or a comma-separated list.
        #[arg(long, default_value = "1.4")]
        alpha: String,
        /// Fixed γ; the best γ per α is used if omitted.
        #[arg(long)]
        gamma: Option<f64>,
        #[arg(long, default_value_t = 4096)]
        beta_points: usize,
        /// First term of the rTruth bound.
        #[arg(long, value_enum, default_value = "eta-spend")]
        case1: Case1,
        #[arg(long, default_value = "results")]
        out: PathBuf,
    },
    /// Search (α, γ) for the best bound.
    Optimize {
        #[arg(long, value_enum)]
        variant: Variant,
        #[arg(long, default_value_t = 1.01)]
        alpha_lo: f64,
        #[arg(long, default_value_t = 4.0)]
        alpha_hi: f64,
        #[arg(long, value_enum, default_value = "eta-spend")]
        case1: Case1,
    },
    /// Build and verify lower-bound instances.
    Lb {
        #[arg(long, value_enum)]
        kind: LbKind,
        /// rTruth: a value, `lo:hi:step` or a list.
        #[arg(long, default_value = "1.4")]
        alpha: String,
        #[arg(long, default_value_t = 1e-3)]
        eps: f64,
        #[arg(long, default_value_t = 1.0)]
        b1: f64,
        /// Deterministic auctions: comma-separated B2 values.
        #[arg(long, default_value = "100,1000,10000")]
        b2: String,
        #[arg(long, default_value_t = 1e-2)]
        gamma: f64,
        #[arg(long, default_value = "results")]
        out: PathBuf,
    },
    /// Write a setup's instance for one trial in the text format.
    Gen {
        #[arg(long)]
        setup: Setup,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long, default_value_t = 0)]
        trial: usize,
        #[arg(long, default_value_t = experiment::DEFAULT_QUERIES)]
        queries: usize,
        /// Output file; stdout if omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the acceptance suite.
    Verify {
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long, default_value = "verify_out")]
        out: PathBuf,
    },
}

fn parse_list(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|t| t.trim().parse::<f64>().map_err(Into::into))
        .collect()
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Run {
            setup,
            mechanisms,
            alphas,
            trials,
            seed,
            queries,
            out,
            max_rounds,
        } => {
            let mut config = ExperimentConfig::new(setup);
            config.mechanisms = experiment::parse_mechanisms(&mechanisms)?;
            config.alphas = experiment::parse_alphas(&alphas)?;
            config.trials = trials;
            config.seed = seed;
            config.queries = queries;
            config.out_dir = Some(out.clone());
            config.dynamics.max_rounds = max_rounds;
            let result = experiment::run_experiment(&config)?;
            println!("mechanism,alpha,trials,converged,not_converged,mean_poa");
            for s in &result.summary {
                println!(
                    "{},{},{},{},{},{:.6}",
                    s.mechanism, s.alpha, s.trials, s.converged, s.not_converged, s.mean_poa
                );
            }
            eprintln!("wrote {}", out.display());
        }
        Command::Bounds {
            variant,
            alpha,
            gamma,
            beta_points,
            case1,
            out,
        } => {
            let config = BoundsConfig {
                variant: variant.into(),
                alphas: experiment::parse_alphas(&alpha)?,
                gamma,
                beta_points,
                case1: case1.into(),
            };
            let evals = curves::run_bounds(&config)?;
            println!(
                "alpha,gamma,eta_alpha,eta_spend,first_term,gamma_term,min_g,argmin_beta,f,inv_f"
            );
            for e in &evals {
                println!(
                    "{},{:.6},{:.9},{:.9},{:.9},{:.9},{:.9},{:.6},{:.9},{:.6}",
                    e.alpha,
                    e.gamma,
                    e.term_eta_alpha,
                    e.term_eta_spend,
                    e.term_case1(),
                    e.term_gamma,
                    e.g_min,
                    e.g_argmin,
                    e.f_value,
                    1.0 / e.f_value
                );
            }
            curves::write_bounds(&evals, &out)?;
            eprintln!("wrote {}", out.display());
        }
        Command::Optimize {
            variant,
            alpha_lo,
            alpha_hi,
            case1,
        } => {
            let best = optimize_f(
                variant.into(),
                &OptimizeConfig {
                    alpha_lo,
                    alpha_hi,
                    case1: case1.into(),
                    ..OptimizeConfig::default()
                },
            )?;
            println!(
                "alpha={:.6} gamma={:.6} f={:.9} poa={:.6}",
                best.alpha, best.gamma, best.f, best.poa
            );
        }
        Command::Lb {
            kind,
            alpha,
            eps,
            b1,
            b2,
            gamma,
            out,
        } => {
            let (name, specs): (&str, Vec<LbSpec>) = match kind {
                LbKind::Rtruth => (
                    "rtruth",
                    experiment::parse_alphas(&alpha)?
                        .into_iter()
                        .map(|alpha| LbSpec::Rtruth {
                            alpha,
                            epsilon: eps,
                        })
                        .collect(),
                ),
                LbKind::Fpa | LbKind::Spa => {
                    let mech = if matches!(kind, LbKind::Fpa) {
                        MechanismKind::Fpa
                    } else {
                        MechanismKind::Spa
                    };
                    (
                        mech.name(),
                        parse_list(&b2)?
                            .into_iter()
                            .map(|b2| LbSpec::Deterministic {
                                kind: mech,
                                b1,
                                b2,
                                epsilon: eps,
                                gamma,
                            })
                            .collect(),
                    )
                }
            };
            let rows = curves::run_lowerbounds(&specs)?;
            println!("kind,alpha,b1,b2,epsilon,gamma,predicted,measured,limit,equilibrium");
            for r in &rows {
                println!(
                    "{},{},{},{},{},{},{:.9},{:.9},{:.9},{}",
                    r.kind,
                    r.alpha,
                    r.b1,
                    r.b2,
                    r.epsilon,
                    r.gamma,
                    r.predicted_ratio,
                    r.measured_ratio,
                    r.limit_ratio,
                    r.is_equilibrium
                );
            }
            curves::write_lowerbounds(&rows, &out, name)?;
            eprintln!("wrote {}", out.display());
            return Ok(rows.iter().all(|r| r.is_equilibrium));
        }
        Command::Gen {
            setup,
            seed,
            trial,
            queries,
            out,
        } => {
            let inst = experiment::trial_instance(&setup, queries, seed, trial)?;
            match out {
                Some(path) => format::save_instance(&inst, &path)?,
                None => print!("{}", format::write_instance(&inst)),
            }
        }
        Command::Verify { seed, out } => {
            if out.exists() && !out.is_dir() {
                bail!("{} exists and is not a directory", out.display());
            }
            let results = acceptance::run_all(&VerifyConfig { seed, out_dir: out }, |r| {
                println!("{}", r.line())
            });
            let passed = results.iter().filter(|r| r.passed).count();
            println!("{passed}/{} criteria passed", results.len());
            return Ok(passed == results.len());
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
