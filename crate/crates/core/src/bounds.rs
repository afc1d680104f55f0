//! Welfare guarantees for the randomized auctions and the instances that
//! witness lower bounds on their price of anarchy.
//!
//! For two bidders and undominated bids, a query falls in one of three
//! classes according to the ratio between the optimal bidder's bid and the
//! other bid. Each class gives a matching coefficient `m` (probability the
//! optimal bidder is served) and a spend coefficient `s` (spend per unit of
//! optimal value). Mixing the welfare bound `Σ m·v*` and the spend bound
//! `Σ s·v*` with weights `γ` and `η = 1 − γ` gives
//!
//! ```text
//! f(α) = max_γ min { η·s₁, γ, min_β γ·m(β) + η·s(β) }
//! ```
//!
//! where the middle class is parameterised by `β ∈ [1/α, α]`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::equilibrium::{check_gamma_equilibrium, GammaEqCheck, GammaScan};
use crate::error::{Error, Result};
use crate::math;
use crate::mechanisms::{play, MechanismKind, MechanismSpec};
use crate::model::{optimal_welfare, BidProfile, Instance};
use crate::numeric::{golden_section_max, golden_section_min};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BoundVariant {
    Rfpa,
    Rtruth,
}

impl BoundVariant {
    pub fn name(self) -> &'static str {
        match self {
            BoundVariant::Rfpa => "rfpa",
            BoundVariant::Rtruth => "rtruth",
        }
    }
}

/// First term of the rTruth bound. The welfare-bound formula for rTruth
/// reuses `η·α`; the spend of a query lost outright under rTruth is
/// `b*·(α − 1/α)/(2 ln α)`, which gives `η·(α − 1/α)/(2 ln α)` instead.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Case1Term {
    EtaAlpha,
    #[default]
    EtaSpend,
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha.is_finite() && alpha > 1.0) {
        return Err(Error::Domain(format!("alpha must be > 1, got {alpha}")));
    }
    Ok(())
}

fn check_args(alpha: f64, beta: f64, gamma: f64, eta: f64) -> Result<()> {
    check_alpha(alpha)?;
    let slack = 1e-12 * alpha;
    if !(beta >= 1.0 / alpha - slack && beta <= alpha + slack) {
        return Err(Error::Domain(format!(
            "beta {beta} outside [1/alpha, alpha]"
        )));
    }
    if !(gamma >= 0.0 && eta >= 0.0 && math::abs(gamma + eta - 1.0) <= 1e-12) {
        return Err(Error::Domain(format!(
            "gamma ({gamma}) and eta ({eta}) must be non-negative and sum to 1"
        )));
    }
    Ok(())
}

/// Probability that the optimal bidder is served when its bid is `1/β`
/// times the other bid.
pub fn matching_coefficient(alpha: f64, beta: f64) -> f64 {
    0.5 * (1.0 + math::ln(beta) / math::ln(alpha))
}

/// rFPA spend per unit of optimal value on a shared query, using the lower
/// bound on undominated bids.
pub fn rfpa_spend_coefficient(alpha: f64, beta: f64) -> f64 {
    let r = math::ln(beta) / math::ln(alpha);
    let d = 1.0 + math::ln(alpha) + math::ln(beta);
    (1.0 + r) / (2.0 * d) + (1.0 - r) / (2.0 * beta * d)
}

/// rTruth spend per unit of optimal value on a shared query, for bids at
/// least the value.
pub fn rtruth_spend_coefficient(alpha: f64, beta: f64) -> f64 {
    (1.0 - 1.0 / alpha) * (1.0 + 1.0 / beta) / (2.0 * math::ln(alpha))
}

/// `(α − 1/α) / (2 ln α)`: rTruth's price for an outright win, per unit of
/// the losing bid.
pub fn rtruth_outright_price_factor(alpha: f64) -> f64 {
    (alpha - 1.0 / alpha) / (2.0 * math::ln(alpha))
}

pub fn g_rfpa(alpha: f64, beta: f64, gamma: f64, eta: f64) -> Result<f64> {
    check_args(alpha, beta, gamma, eta)?;
    Ok(g_unchecked(BoundVariant::Rfpa, alpha, beta, gamma, eta))
}

pub fn g_rtruth(alpha: f64, beta: f64, gamma: f64, eta: f64) -> Result<f64> {
    check_args(alpha, beta, gamma, eta)?;
    Ok(g_unchecked(BoundVariant::Rtruth, alpha, beta, gamma, eta))
}

#[inline]
fn g_unchecked(variant: BoundVariant, alpha: f64, beta: f64, gamma: f64, eta: f64) -> f64 {
    let spend = match variant {
        BoundVariant::Rfpa => rfpa_spend_coefficient(alpha, beta),
        BoundVariant::Rtruth => rtruth_spend_coefficient(alpha, beta),
    };
    gamma * matching_coefficient(alpha, beta) + eta * spend
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BetaGrid {
    /// Log-spaced points over `[1/α, α]`.
    pub points: usize,
    /// Refine the grid minimum by golden-section search.
    pub refine: bool,
}

impl Default for BetaGrid {
    fn default() -> Self {
        Self {
            points: 4096,
            refine: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundEvaluation {
    pub variant: BoundVariant,
    pub alpha: f64,
    pub gamma: f64,
    pub eta: f64,
    /// `η·α`.
    pub term_eta_alpha: f64,
    /// `η·(α − 1/α)/(2 ln α)`; only meaningful for rTruth.
    pub term_eta_spend: f64,
    pub case1: Case1Term,
    /// `γ` (queries the optimal bidder wins outright).
    pub term_gamma: f64,
    /// `(β, g)` on the grid.
    pub g_curve: Vec<(f64, f64)>,
    pub g_min: f64,
    pub g_argmin: f64,
    pub f_value: f64,
}

impl BoundEvaluation {
    /// The first term as used in `f_value`.
    pub fn term_case1(&self) -> f64 {
        match (self.variant, self.case1) {
            (BoundVariant::Rtruth, Case1Term::EtaSpend) => self.term_eta_spend,
            _ => self.term_eta_alpha,
        }
    }
}

fn first_term(variant: BoundVariant, case1: Case1Term, alpha: f64, eta: f64) -> f64 {
    match (variant, case1) {
        (BoundVariant::Rtruth, Case1Term::EtaSpend) => eta * rtruth_outright_price_factor(alpha),
        _ => eta * alpha,
    }
}

/// `min_β g` over a log-spaced grid, optionally refined. Returns
/// `(argmin β, min g)`.
fn g_min(variant: BoundVariant, alpha: f64, gamma: f64, points: usize, refine: bool) -> (f64, f64) {
    let eta = 1.0 - gamma;
    let la = math::ln(alpha);
    let n = points.max(2);
    let at = |k: usize| -la + 2.0 * la * k as f64 / (n - 1) as f64;
    let g = |lb: f64| g_unchecked(variant, alpha, math::exp(lb), gamma, eta);
    let (mut best_k, mut best) = (0, f64::INFINITY);
    for k in 0..n {
        let v = g(at(k));
        if v < best {
            best = v;
            best_k = k;
        }
    }
    let mut best_lb = at(best_k);
    if refine {
        let lo = at(best_k.saturating_sub(1));
        let hi = at((best_k + 1).min(n - 1));
        let (lb, v) = golden_section_min(g, lo, hi, 1e-8);
        if v < best {
            best = v;
            best_lb = lb;
        }
    }
    (math::exp(best_lb), best)
}

/// Evaluates the three terms of `f` at fixed `(α, γ)`.
pub fn eval_f(
    alpha: f64,
    gamma: f64,
    variant: BoundVariant,
    grid: &BetaGrid,
    case1: Case1Term,
) -> Result<BoundEvaluation> {
    check_alpha(alpha)?;
    if !(0.0..=1.0).contains(&gamma) {
        return Err(Error::Domain(format!("gamma {gamma} outside [0, 1]")));
    }
    if grid.points < 2 {
        return Err(Error::Domain("beta grid needs at least 2 points".into()));
    }
    let eta = 1.0 - gamma;
    let la = math::ln(alpha);
    let n = grid.points;
    let g_curve: Vec<(f64, f64)> = (0..n)
        .map(|k| {
            let beta = math::exp(-la + 2.0 * la * k as f64 / (n - 1) as f64);
            (beta, g_unchecked(variant, alpha, beta, gamma, eta))
        })
        .collect();
    let (g_argmin, g_min) = g_min(variant, alpha, gamma, n, grid.refine);
    let term_eta_alpha = eta * alpha;
    let term_eta_spend = eta * rtruth_outright_price_factor(alpha);
    let first = first_term(variant, case1, alpha, eta);
    Ok(BoundEvaluation {
        variant,
        alpha,
        gamma,
        eta,
        term_eta_alpha,
        term_eta_spend,
        case1,
        term_gamma: gamma,
        g_curve,
        g_min,
        g_argmin,
        f_value: first.min(gamma).min(g_min),
    })
}

/// `f` at fixed `(α, γ)` without materialising the curve.
pub fn f_value(
    alpha: f64,
    gamma: f64,
    variant: BoundVariant,
    grid: &BetaGrid,
    case1: Case1Term,
) -> f64 {
    let eta = 1.0 - gamma;
    let (_, g) = g_min(variant, alpha, gamma, grid.points, grid.refine);
    first_term(variant, case1, alpha, eta).min(gamma).min(g)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizeConfig {
    pub alpha_lo: f64,
    pub alpha_hi: f64,
    pub alpha_points: usize,
    pub gamma_step: f64,
    pub case1: Case1Term,
}

impl Default for OptimizeConfig {
    fn default() -> Self {
        Self {
            alpha_lo: 1.01,
            alpha_hi: 4.0,
            alpha_points: 300,
            gamma_step: 1e-3,
            case1: Case1Term::default(),
        }
    }
}

impl OptimizeConfig {
    pub fn fixed_alpha(alpha: f64) -> Self {
        Self {
            alpha_lo: alpha,
            alpha_hi: alpha,
            alpha_points: 1,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimumBound {
    pub alpha: f64,
    pub gamma: f64,
    pub f: f64,
    /// `1 / f`.
    pub poa: f64,
}

/// Best `γ` at fixed `α`: a grid with step `gamma_step` on a coarse β grid,
/// then golden-section refinement with the full β grid. `f` is concave in
/// `γ` (a minimum of functions affine in `γ`).
pub fn optimize_gamma(
    alpha: f64,
    variant: BoundVariant,
    gamma_step: f64,
    case1: Case1Term,
) -> Result<(f64, f64)> {
    check_alpha(alpha)?;
    if !(gamma_step > 0.0 && gamma_step <= 1e-3) {
        return Err(Error::Domain(format!(
            "gamma step must be in (0, 1e-3], got {gamma_step}"
        )));
    }
    let coarse = BetaGrid {
        points: 512,
        refine: false,
    };
    let steps = math::round(1.0 / gamma_step) as usize;
    let (mut best_gamma, mut best_f) = (0.0, f64::NEG_INFINITY);
    for k in 0..=steps {
        let gamma = k as f64 / steps as f64;
        let f = f_value(alpha, gamma, variant, &coarse, case1);
        if f > best_f {
            best_f = f;
            best_gamma = gamma;
        }
    }
    let full = BetaGrid::default();
    let lo = (best_gamma - 2.0 * gamma_step).max(0.0);
    let hi = (best_gamma + 2.0 * gamma_step).min(1.0);
    let (gamma, f) = golden_section_max(|g| f_value(alpha, g, variant, &full, case1), lo, hi, 1e-9);
    let at_grid = f_value(alpha, best_gamma, variant, &full, case1);
    Ok(if at_grid >= f {
        (best_gamma, at_grid)
    } else {
        (gamma, f)
    })
}

/// Nested search over `α` (grid, then local golden-section refinement) and
/// `γ` maximising `f`.
pub fn optimize_f(variant: BoundVariant, config: &OptimizeConfig) -> Result<OptimumBound> {
    check_alpha(config.alpha_lo)?;
    if config.alpha_hi < config.alpha_lo {
        return Err(Error::Domain("empty alpha range".into()));
    }
    let points = if config.alpha_hi == config.alpha_lo {
        1
    } else {
        config.alpha_points.max(2)
    };
    let alpha_at = |k: usize| {
        if points == 1 {
            config.alpha_lo
        } else {
            config.alpha_lo + (config.alpha_hi - config.alpha_lo) * k as f64 / (points - 1) as f64
        }
    };
    let mut best = OptimumBound {
        alpha: config.alpha_lo,
        gamma: 0.0,
        f: f64::NEG_INFINITY,
        poa: f64::INFINITY,
    };
    let mut best_k = 0;
    for k in 0..points {
        let alpha = alpha_at(k);
        let (gamma, f) = optimize_gamma(alpha, variant, config.gamma_step, config.case1)?;
        if f > best.f {
            best = OptimumBound {
                alpha,
                gamma,
                f,
                poa: 1.0 / f,
            };
            best_k = k;
        }
    }
    if points > 1 {
        let lo = alpha_at(best_k.saturating_sub(1)).max(1.0 + 1e-9);
        let hi = alpha_at((best_k + 1).min(points - 1));
        let inner = |a: f64| {
            optimize_gamma(a, variant, config.gamma_step, config.case1)
                .map_or(f64::NEG_INFINITY, |(_, f)| f)
        };
        let (alpha, _) = golden_section_max(inner, lo, hi, 1e-6);
        let (gamma, f) = optimize_gamma(alpha, variant, config.gamma_step, config.case1)?;
        if f > best.f {
            best = OptimumBound {
                alpha,
                gamma,
                f,
                poa: 1.0 / f,
            };
        }
    }
    Ok(best)
}

/// Worst-case PoA of rTruth(α) witnessed by [`make_rtruth_lb_instance`]:
/// `1 + 2 ln α / (α − 1/α)`.
pub fn rtruth_lb_ratio(alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    Ok(1.0 + 2.0 * math::ln(alpha) / (alpha - 1.0 / alpha))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LbParams {
    Rtruth { alpha: f64, epsilon: f64 },
    Deterministic { b1: f64, b2: f64, epsilon: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct LowerBoundInstance {
    pub instance: Instance,
    pub bids: BidProfile,
    pub mechanism: MechanismSpec,
    pub gamma: f64,
    pub predicted_ratio: f64,
    pub params: LbParams,
}

/// Two queries on which rTruth(α) reaches welfare ratio `(1 + 1/s)/(1 + ε)`,
/// `s = (α − 1/α)/(2 ln α)`.
///
/// Query 1 has values `(1, 0)`, query 2 has values `(ε, 1/s)`. Advertiser 1
/// bids the uniform multiplier `α/(ε s)` and takes both queries; advertiser 2
/// bids its values and cannot win anything without breaking ROS.
pub fn make_rtruth_lb_instance(alpha: f64, epsilon: f64) -> Result<LowerBoundInstance> {
    check_alpha(alpha)?;
    let s = rtruth_outright_price_factor(alpha);
    if s < 1.0 {
        return Err(Error::Domain(format!("price factor {s} < 1")));
    }
    if !(epsilon > 0.0 && epsilon < 1.0 / s) {
        return Err(Error::Domain(format!(
            "epsilon must be in (0, 1/s = {}), got {epsilon}",
            1.0 / s
        )));
    }
    let instance = Instance::with_unit_targets(vec![vec![1.0, epsilon], vec![0.0, 1.0 / s]])?;
    let bids = BidProfile::uniform(&instance, &[alpha / (epsilon * s), 1.0]);
    Ok(LowerBoundInstance {
        instance,
        bids,
        mechanism: MechanismSpec::rtruth(alpha)?,
        gamma: 0.0,
        predicted_ratio: (1.0 + 1.0 / s) / (1.0 + epsilon),
        params: LbParams::Rtruth { alpha, epsilon },
    })
}

/// Two-query γ-equilibrium with welfare ratio approaching 2 for a
/// deterministic auction (FPA or SPA), built from the auction's price
/// function `price(b₁, b₂)`.
pub fn make_det_lb_instance(
    kind: MechanismKind,
    b1: f64,
    b2: f64,
    epsilon: f64,
    gamma: f64,
) -> Result<LowerBoundInstance> {
    let price = |own: f64, other: f64| match kind {
        MechanismKind::Fpa => Ok(own),
        MechanismKind::Spa => Ok(other),
        _ => Err(Error::Domain(format!(
            "deterministic lower bound needs FPA or SPA, got {}",
            kind.name()
        ))),
    };
    if !(b1 > 0.0 && b2 > b1 && b2.is_finite()) {
        return Err(Error::Domain(format!(
            "need 0 < B1 < B2, got B1={b1}, B2={b2}"
        )));
    }
    if !(epsilon >= 0.0 && epsilon < gamma) {
        return Err(Error::Domain(format!(
            "need 0 <= epsilon < gamma, got {epsilon}, {gamma}"
        )));
    }
    let top = price(b2, b2)?;
    let base = price(b1, 0.0)?;
    if top - epsilon < 0.0 {
        return Err(Error::Domain("price(B2, B2) must exceed epsilon".into()));
    }
    let instance = Instance::with_unit_targets(vec![
        vec![top + base, epsilon * base],
        vec![0.0, top - epsilon],
    ])?;
    let bids = BidProfile::new(vec![vec![b1, b2], vec![0.0, 0.0]])?;
    Ok(LowerBoundInstance {
        instance,
        bids,
        mechanism: MechanismSpec::new(kind, 1.0)?,
        gamma,
        predicted_ratio: (2.0 * top + base - epsilon) / (top + base * (1.0 + epsilon)),
        params: LbParams::Deterministic { b1, b2, epsilon },
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct LbVerification {
    pub check: GammaEqCheck,
    pub lw_eq: f64,
    pub lw_opt: f64,
    pub measured_ratio: f64,
    pub predicted_ratio: f64,
    /// `|measured − predicted| / predicted`.
    pub rel_error: f64,
}

impl LbVerification {
    pub fn passed(&self, rel_tol: f64) -> bool {
        self.check.is_equilibrium && self.rel_error <= rel_tol
    }
}

/// Runs the γ-equilibrium check at the instance's declared γ and measures
/// the welfare ratio of its bids.
pub fn verify_lower_bound(lb: &LowerBoundInstance, scan: &GammaScan) -> Result<LbVerification> {
    let check = check_gamma_equilibrium(&lb.instance, &lb.mechanism, &lb.bids, lb.gamma, scan)?;
    let outcome = play(&lb.instance, &lb.bids, &lb.mechanism)?;
    let lw_eq = outcome.liquid_welfare(&lb.instance);
    let (lw_opt, _) = optimal_welfare(&lb.instance);
    let measured_ratio = crate::equilibrium::poa(lw_opt, lw_eq);
    Ok(LbVerification {
        check,
        lw_eq,
        lw_opt,
        measured_ratio,
        predicted_ratio: lb.predicted_ratio,
        rel_error: math::abs(measured_ratio - lb.predicted_ratio) / lb.predicted_ratio,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn g_rfpa_examples() {
        let la = 1.4f64.ln();
        assert_abs_diff_eq!(
            g_rfpa(1.4, 1.0, 0.56, 0.44).unwrap(),
            0.28 + 2.0 * 0.44 / (2.0 * (1.0 + la)),
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            g_rfpa(1.4, 1.0, 0.56, 0.44).unwrap(),
            0.609_224_946_050_791_9,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            g_rfpa(1.4, 1.0 / 1.4, 0.56, 0.44).unwrap(),
            0.616,
            epsilon = 1e-12
        );
        let g = g_rfpa(1.4, 0.9, 0.56, 0.44).unwrap();
        assert_abs_diff_eq!(g, 0.575_796_364_923_347_6, epsilon = 1e-12);
        assert!(g >= 1.0 / 1.8);
    }

    #[test]
    fn g_rtruth_examples() {
        let second = 0.472 * (1.0 - 1.0 / 1.4) * 2.0 / (2.0 * 1.4f64.ln());
        assert_abs_diff_eq!(second, 0.400_797_237_273_872_5, epsilon = 1e-12);
        assert_abs_diff_eq!(
            g_rtruth(1.4, 1.0, 0.528, 0.472).unwrap(),
            0.264 + second,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(matching_coefficient(1.4, 1.4), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(matching_coefficient(1.4, 1.0 / 1.4), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn g_domain_errors() {
        assert!(g_rfpa(1.0, 1.0, 0.5, 0.5).is_err());
        assert!(g_rfpa(1.4, 2.0, 0.5, 0.5).is_err());
        assert!(g_rfpa(1.4, 1.0, 0.5, 0.6).is_err());
        assert!(g_rtruth(1.4, 0.5, 0.5, 0.5).is_err());
    }

    #[test]
    fn eval_f_at_reference_point() {
        let e = eval_f(
            1.4,
            0.56,
            BoundVariant::Rfpa,
            &BetaGrid::default(),
            Case1Term::EtaAlpha,
        )
        .unwrap();
        assert_abs_diff_eq!(e.term_eta_alpha, 0.616, epsilon = 1e-9);
        assert_eq!(e.term_gamma, 0.56);
        assert!(e.g_min >= 1.0 / 1.8);
        assert!(e.f_value >= 1.0 / 1.8 - 1e-6);
        assert_eq!(e.g_curve.len(), 4096);
    }

    #[test]
    fn eval_f_degenerate_weights() {
        let grid = BetaGrid::default();
        let e = eval_f(1.4, 1.0, BoundVariant::Rfpa, &grid, Case1Term::EtaAlpha).unwrap();
        assert_eq!(e.f_value, 0.0);
        let e = eval_f(1.4, 0.0, BoundVariant::Rfpa, &grid, Case1Term::EtaAlpha).unwrap();
        assert_eq!(e.f_value, 0.0);
        assert!(eval_f(0.9, 0.5, BoundVariant::Rfpa, &grid, Case1Term::EtaAlpha).is_err());
    }

    #[test]
    fn rtruth_lb_ratio_examples() {
        assert_abs_diff_eq!(
            rtruth_lb_ratio(1.4).unwrap(),
            1.981_377_356_811_871,
            epsilon = 1e-12
        );
        let e = core::f64::consts::E;
        assert_abs_diff_eq!(
            rtruth_lb_ratio(e).unwrap(),
            1.850_918_128_239_321_5,
            epsilon = 1e-12
        );
        assert!(rtruth_lb_ratio(1.0).is_err());
    }

    #[test]
    fn rtruth_lb_instance_params() {
        let lb = make_rtruth_lb_instance(1.4, 1e-3).unwrap();
        let s = rtruth_outright_price_factor(1.4);
        assert_abs_diff_eq!(s, 1.018_976_026_967_472_5, epsilon = 1e-12);
        assert_abs_diff_eq!(
            lb.instance.value(1, 1),
            0.981_377_356_811_871,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(lb.predicted_ratio, 1.979_397_958_853_018, epsilon = 1e-12);
        assert!(make_rtruth_lb_instance(1.4, 1.0).is_err());
        assert!(make_rtruth_lb_instance(1.4, 0.0).is_err());
    }

    #[test]
    fn det_lb_instance_params() {
        let lb = make_det_lb_instance(MechanismKind::Fpa, 1.0, 1000.0, 1e-3, 0.01).unwrap();
        assert_abs_diff_eq!(
            lb.predicted_ratio,
            (2001.0 - 0.001) / 1001.001,
            epsilon = 1e-12
        );
        let lb = make_det_lb_instance(MechanismKind::Spa, 1.0, 1000.0, 1e-3, 0.01).unwrap();
        assert_eq!(lb.instance.value(0, 0), 1000.0);
        assert_eq!(lb.instance.value(0, 1), 0.0);
        assert_abs_diff_eq!(lb.instance.value(1, 1), 1000.0 - 1e-3);
        assert!(make_det_lb_instance(MechanismKind::Fpa, 1.0, 1000.0, 0.02, 0.01).is_err());
        assert!(make_det_lb_instance(MechanismKind::Rfpa, 1.0, 1000.0, 1e-3, 0.01).is_err());
    }
}
