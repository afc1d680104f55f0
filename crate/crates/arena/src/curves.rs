//! Bound curves and lower-bound verification tables.

use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use arena_core::bounds::{
    eval_f, make_det_lb_instance, make_rtruth_lb_instance, optimize_gamma, rtruth_lb_ratio,
    verify_lower_bound, BetaGrid, BoundEvaluation, BoundVariant, Case1Term, LowerBoundInstance,
};
use arena_core::equilibrium::GammaScan;
use arena_core::MechanismKind;
use rayon::prelude::*;
use serde::Serialize;

use crate::experiment::write_csv;
use crate::plot::{self, Chart, HLine, Series};

/// One β sample of the bound at `(α, γ)`.
///
/// `term_eta_alpha` holds the first term actually used in `f`: `η·α` for
/// rFPA, and for rTruth whichever of `η·α` and `η·(α − 1/α)/(2 ln α)` the
/// evaluation selected.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundRow {
    pub alpha: f64,
    pub gamma: f64,
    pub beta: f64,
    pub g: f64,
    pub term_eta_alpha: f64,
    pub term_gamma: f64,
    pub f: f64,
}

pub fn bound_rows(e: &BoundEvaluation) -> Vec<BoundRow> {
    e.g_curve
        .iter()
        .map(|&(beta, g)| BoundRow {
            alpha: e.alpha,
            gamma: e.gamma,
            beta,
            g,
            term_eta_alpha: e.term_case1(),
            term_gamma: e.term_gamma,
            f: e.f_value,
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct BoundsConfig {
    pub variant: BoundVariant,
    pub alphas: Vec<f64>,
    /// Fixed γ, or `None` to pick the best γ for each α.
    pub gamma: Option<f64>,
    pub beta_points: usize,
    pub case1: Case1Term,
}

/// Evaluates the bound at every α (in parallel, results in input order).
pub fn run_bounds(config: &BoundsConfig) -> Result<Vec<BoundEvaluation>> {
    let grid = BetaGrid {
        points: config.beta_points,
        refine: true,
    };
    crate::with_pool(|| {
        config
            .alphas
            .par_iter()
            .map(|&alpha| {
                let gamma = match config.gamma {
                    Some(g) => g,
                    None => optimize_gamma(alpha, config.variant, 1e-3, config.case1)?.0,
                };
                Ok(eval_f(alpha, gamma, config.variant, &grid, config.case1)?)
            })
            .collect::<Result<Vec<_>>>()
    })?
}

/// The three components of `f` against β for one evaluation.
pub fn component_chart(e: &BoundEvaluation) -> Chart<'static> {
    let first = e.term_case1();
    let xs = || e.g_curve.iter().map(|p| p.0);
    Chart {
        title: "components of f(alpha)",
        x_label: "beta",
        y_label: "bound",
        series: vec![
            Series {
                name: "g(beta)".into(),
                points: e.g_curve.clone(),
            },
            Series {
                name: format!("first term = {first:.4}"),
                points: xs().map(|b| (b, first)).collect(),
            },
            Series {
                name: format!("gamma = {:.4}", e.term_gamma),
                points: xs().map(|b| (b, e.term_gamma)).collect(),
            },
        ],
        hlines: vec![HLine {
            name: format!("f = {:.6}", e.f_value),
            y: e.f_value,
        }],
    }
}

/// `1/f(α)` across an α sweep.
pub fn sweep_chart(evals: &[BoundEvaluation]) -> Chart<'static> {
    Chart {
        title: "PoA upper bound 1/f(alpha)",
        x_label: "alpha",
        y_label: "1/f",
        series: vec![Series {
            name: "1/f".into(),
            points: evals.iter().map(|e| (e.alpha, 1.0 / e.f_value)).collect(),
        }],
        hlines: Vec::new(),
    }
}

/// Writes `bounds_<variant>.csv` and a plot: the component plot for a
/// single α, the `1/f` sweep otherwise.
pub fn write_bounds(evals: &[BoundEvaluation], dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let Some(first) = evals.first() else {
        return Ok(());
    };
    let name = first.variant.name();
    let rows: Vec<BoundRow> = evals.iter().flat_map(bound_rows).collect();
    write_csv(&rows, &dir.join(format!("bounds_{name}.csv")))?;
    if evals.len() == 1 {
        plot::render(
            &component_chart(first),
            &dir.join(format!("bounds_{name}.svg")),
        )?;
    } else {
        plot::render(
            &sweep_chart(evals),
            &dir.join(format!("bounds_{name}_sweep.svg")),
        )?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LbRow {
    pub kind: String,
    pub alpha: f64,
    pub b1: f64,
    pub b2: f64,
    pub epsilon: f64,
    pub gamma: f64,
    pub predicted_ratio: f64,
    pub measured_ratio: f64,
    pub rel_error: f64,
    /// `1 + 2 ln α / (α − 1/α)` for rTruth, 2 for the deterministic auctions.
    pub limit_ratio: f64,
    pub is_equilibrium: bool,
    pub gamma_achieved: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LbSpec {
    Rtruth {
        alpha: f64,
        epsilon: f64,
    },
    Deterministic {
        kind: MechanismKind,
        b1: f64,
        b2: f64,
        epsilon: f64,
        gamma: f64,
    },
}

impl LbSpec {
    pub fn build(&self) -> Result<LowerBoundInstance> {
        Ok(match *self {
            LbSpec::Rtruth { alpha, epsilon } => make_rtruth_lb_instance(alpha, epsilon)?,
            LbSpec::Deterministic {
                kind,
                b1,
                b2,
                epsilon,
                gamma,
            } => make_det_lb_instance(kind, b1, b2, epsilon, gamma)?,
        })
    }
}

pub fn verify_lb(spec: &LbSpec) -> Result<LbRow> {
    let lb = spec.build()?;
    let v = verify_lower_bound(&lb, &GammaScan::default())?;
    let (kind, alpha, b1, b2, epsilon, limit_ratio) = match *spec {
        LbSpec::Rtruth { alpha, epsilon } => (
            "rtruth",
            alpha,
            f64::NAN,
            f64::NAN,
            epsilon,
            rtruth_lb_ratio(alpha)?,
        ),
        LbSpec::Deterministic {
            kind,
            b1,
            b2,
            epsilon,
            ..
        } => (kind.name(), 1.0, b1, b2, epsilon, 2.0),
    };
    Ok(LbRow {
        kind: kind.to_string(),
        alpha,
        b1,
        b2,
        epsilon,
        gamma: lb.gamma,
        predicted_ratio: v.predicted_ratio,
        measured_ratio: v.measured_ratio,
        rel_error: v.rel_error,
        limit_ratio,
        is_equilibrium: v.check.is_equilibrium,
        gamma_achieved: v.check.gamma_achieved,
    })
}

pub fn run_lowerbounds(specs: &[LbSpec]) -> Result<Vec<LbRow>> {
    crate::with_pool(|| specs.par_iter().map(verify_lb).collect::<Result<Vec<_>>>())?
}

pub fn write_lowerbounds(rows: &[LbRow], dir: &Path, name: &str) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    write_csv(rows, &dir.join(format!("lb_{name}.csv")))?;
    if rows.len() > 1 {
        let rtruth = rows.iter().all(|r| r.kind == "rtruth");
        let x = |r: &LbRow| if rtruth { r.alpha } else { r.b2.log10() };
        let chart = Chart {
            title: "lower-bound instances: welfare ratio",
            x_label: if rtruth { "alpha" } else { "log10 B2" },
            y_label: "lw_opt / lw_eq",
            series: vec![
                Series {
                    name: "measured".into(),
                    points: rows.iter().map(|r| (x(r), r.measured_ratio)).collect(),
                },
                Series {
                    name: "limit".into(),
                    points: rows.iter().map(|r| (x(r), r.limit_ratio)).collect(),
                },
            ],
            hlines: Vec::new(),
        };
        plot::render(&chart, &dir.join(format!("lb_{name}.svg")))?;
    }
    Ok(())
}
