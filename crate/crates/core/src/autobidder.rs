//! Best responses of a single value-maximising advertiser under its ROS
//! constraint, holding the other advertisers' bids fixed.
//!
//! Values here are target-weighted (`T_i · v_ij`), so the constraint reads
//! `spend ≤ value` and a response's `value` is its liquid-welfare
//! contribution.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math;
use crate::mechanisms::{rfpa_win_prob, MechanismKind, MechanismSpec};
use crate::model::{BidProfile, Instance};
use crate::WELFARE_TOL;

/// Slack accepted as non-negative inside the optimisers, relative to the
/// instance scale. Only absorbs rounding.
const ROUNDING_SLACK: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BestResponseMethod {
    UniformMultiplier,
    DualDecomposition,
    KnapsackDp,
    KnapsackGreedy,
    GridOracle,
}

impl BestResponseMethod {
    /// Greedy subset selection carries no optimality guarantee.
    pub fn is_heuristic(self) -> bool {
        matches!(self, BestResponseMethod::KnapsackGreedy)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BestResponse {
    pub bids: Vec<f64>,
    pub value: f64,
    pub spend: f64,
    pub method: BestResponseMethod,
    /// Uniform bid multiplier, for [`BestResponseMethod::UniformMultiplier`].
    pub multiplier: Option<f64>,
    /// Lagrange multiplier of the ROS constraint, for dual decomposition.
    pub dual: Option<f64>,
}

impl BestResponse {
    pub fn slack(&self) -> f64 {
        self.value - self.spend
    }
}

/// What an FPA best response bids on queries it decides to lose.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LosingBid {
    #[default]
    Zero,
    /// The highest price at which the query could still be added to the
    /// winning set without breaking ROS, capped strictly below the current
    /// highest bid so the query is still lost.
    MaxWillingness,
    /// The advertiser's own value, capped strictly below the current highest
    /// bid. Winning such a query by accident never costs more than it is
    /// worth.
    Value,
}

/// Which of the value-maximising uniform multipliers a truthful-auction
/// best response bids.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MultiplierChoice {
    #[default]
    Smallest,
    /// The largest ROS-feasible multiplier.
    Largest,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResponseOptions {
    /// Minimum overbid for first-price wins; `None` means `1e-6` of the
    /// instance's largest value.
    pub tick: Option<f64>,
    /// FPA subset selection is solved exactly up to this many queries.
    pub fpa_exact_limit: usize,
    pub losing_bid: LosingBid,
    pub multiplier: MultiplierChoice,
}

impl Default for ResponseOptions {
    fn default() -> Self {
        Self {
            tick: None,
            fpa_exact_limit: 20,
            losing_bid: LosingBid::Zero,
            multiplier: MultiplierChoice::Smallest,
        }
    }
}

impl ResponseOptions {
    pub fn tick_for(&self, instance: &Instance) -> f64 {
        self.tick
            .unwrap_or(1e-6 * instance.max_value().max(f64::MIN_POSITIVE))
    }
}

fn effective_values(instance: &Instance, advertiser: usize) -> Vec<f64> {
    let t = instance.target(advertiser);
    instance
        .values_of(advertiser)
        .iter()
        .map(|v| t * v)
        .collect()
}

/// Highest bid among the other advertisers on every query.
fn opponent_max(profile: &BidProfile, advertiser: usize) -> Vec<f64> {
    (0..profile.num_queries())
        .map(|j| {
            (0..profile.num_advertisers())
                .filter(|&k| k != advertiser)
                .map(|k| profile.bid(k, j))
                .fold(0.0, f64::max)
        })
        .collect()
}

fn check_advertiser(instance: &Instance, profile: &BidProfile, advertiser: usize) -> Result<()> {
    profile.check_shape(instance)?;
    if advertiser >= instance.num_advertisers() {
        return Err(Error::InvalidInstance(format!(
            "advertiser {advertiser} out of range"
        )));
    }
    Ok(())
}

/// Target-weighted value and spend of one advertiser if it bids `row` while
/// everyone else keeps their bids in `profile`.
pub fn advertiser_totals(
    instance: &Instance,
    profile: &BidProfile,
    advertiser: usize,
    mechanism: &MechanismSpec,
    row: &[f64],
) -> Result<(f64, f64)> {
    let n = instance.num_advertisers();
    let t = instance.target(advertiser);
    let mut value = 0.0;
    let mut spend = 0.0;
    let mut qb = vec![0.0; n];
    for (j, &own) in row.iter().enumerate() {
        for (k, b) in qb.iter_mut().enumerate() {
            *b = if k == advertiser {
                own
            } else {
                profile.bid(k, j)
            };
        }
        if qb.iter().all(|b| *b == 0.0) {
            continue;
        }
        let out = mechanism.outcome(&qb)?;
        value += out.win_prob[advertiser] * t * instance.value(advertiser, j);
        spend += out.expected_payment[advertiser];
    }
    Ok((value, spend))
}

/// Best uniform response `c · v` in a truthful auction (SPA or rTruth).
///
/// For `c ≥ 1` the allocation is monotone in `c` and the ROS slack is
/// non-increasing, so the feasible multipliers form an interval `[1, c*]`.
/// The value-maximising set is found at `c*`; the returned multiplier is the
/// smallest `c` that attains the same value.
pub fn uniform_best_response(
    instance: &Instance,
    advertiser: usize,
    profile: &BidProfile,
    mechanism: &MechanismSpec,
) -> Result<BestResponse> {
    uniform_best_response_with(
        instance,
        advertiser,
        profile,
        mechanism,
        MultiplierChoice::Smallest,
    )
}

pub fn uniform_best_response_with(
    instance: &Instance,
    advertiser: usize,
    profile: &BidProfile,
    mechanism: &MechanismSpec,
    choice: MultiplierChoice,
) -> Result<BestResponse> {
    check_advertiser(instance, profile, advertiser)?;
    if !mechanism.is_truthful() {
        return Err(Error::InvalidMechanism(format!(
            "uniform bidding is only a best response in truthful auctions, not {}",
            mechanism.kind.name()
        )));
    }
    mechanism.check_bidders(instance.num_advertisers())?;
    let values = effective_values(instance, advertiser);
    let scale = instance.scale();
    let eval = |c: f64| -> Result<(f64, f64)> {
        let row: Vec<f64> = values.iter().map(|v| c * v).collect();
        advertiser_totals(instance, profile, advertiser, mechanism, &row)
    };
    // Exact: near `b = other/α` a tolerance on the slack buys a value gain of
    // order its square root.
    let feasible = |(value, spend): (f64, f64)| value - spend >= 0.0;
    let respond = |c: f64, value: f64, spend: f64| BestResponse {
        bids: values.iter().map(|v| c * v).collect(),
        value,
        spend,
        method: BestResponseMethod::UniformMultiplier,
        multiplier: Some(c),
        dual: None,
    };

    // Beyond c_hi the outcome no longer changes.
    let reach = if mechanism.kind == MechanismKind::Rtruth {
        mechanism.alpha
    } else {
        1.0
    };
    let others = opponent_max(profile, advertiser);
    let c_hi = values
        .iter()
        .zip(&others)
        .filter(|(v, _)| **v > 0.0)
        .map(|(v, o)| reach * o / v)
        .fold(1.0, f64::max)
        * (1.0 + 1e-9);

    let at_hi = eval(c_hi)?;
    let at_one = eval(1.0)?;
    let c_star = if feasible(at_hi) {
        c_hi
    } else if feasible(at_one) {
        let (mut lo, mut hi) = (1.0f64, c_hi);
        for _ in 0..200 {
            if hi / lo - 1.0 < 1e-14 {
                break;
            }
            let mid = math::sqrt(lo * hi);
            if feasible(eval(mid)?) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    } else {
        // Not expected for truthful auctions; scan a grid instead.
        let mut best: Option<(f64, f64, f64)> = None;
        for k in 0..=200 {
            let c = math::powf(c_hi, k as f64 / 200.0);
            let (v, s) = eval(c)?;
            if feasible((v, s)) && best.is_none_or(|(_, bv, _)| v > bv) {
                best = Some((c, v, s));
            }
        }
        return Ok(match best {
            Some((c, v, s)) => respond(c, v, s),
            None => respond(0.0, 0.0, 0.0),
        });
    };
    let (v_star, s_star) = eval(c_star)?;
    if choice == MultiplierChoice::Largest {
        return Ok(respond(c_star, v_star, s_star));
    }
    let threshold = v_star - 1e-12 * scale;
    if at_one.0 >= threshold {
        return Ok(respond(1.0, at_one.0, at_one.1));
    }
    let (mut lo, mut hi) = (1.0f64, c_star);
    let mut hi_eval = (v_star, s_star);
    for _ in 0..200 {
        if hi / lo - 1.0 < 1e-15 {
            break;
        }
        let mid = math::sqrt(lo * hi);
        let e = eval(mid)?;
        if e.0 >= threshold {
            hi = mid;
            hi_eval = e;
        } else {
            lo = mid;
        }
    }
    if feasible(hi_eval) {
        Ok(respond(hi, hi_eval.0, hi_eval.1))
    } else {
        Ok(respond(c_star, v_star, s_star))
    }
}

/// Per-query maximiser of `(1+λ)·π(b)·v − λ·b·π(b)` for rFPA against an
/// opponent bid `other > 0`, returned as `(bid, π)`.
///
/// In log-ratio coordinates `t = log_α(b / other) ∈ [-1, 1]` the objective
/// is `(1+t)/2 · ((1+λ)v − λ·other·α^t)`, which is strictly concave, so the
/// stationarity condition has at most one root.
pub fn rfpa_query_response(value: f64, other: f64, alpha: f64, lambda: f64) -> Result<(f64, f64)> {
    let k = math::ln(alpha);
    let bid_at = |t: f64| other * math::exp(k * t);
    if value <= 0.0 {
        return Ok((0.0, 0.0));
    }
    if lambda == 0.0 {
        return Ok((alpha * other, 1.0));
    }
    // λ = ∞ is the limit that maximises each query's surplus `π·(v − b)`.
    let (a, b) = if lambda.is_infinite() {
        (value, other)
    } else {
        ((1.0 + lambda) * value, lambda * other)
    };
    let slope = |t: f64| a - b * math::exp(k * t) * (1.0 + k * (1.0 + t));
    if slope(-1.0) <= 0.0 {
        return Ok((other / alpha, 0.0));
    }
    if slope(1.0) >= 0.0 {
        return Ok((alpha * other, 1.0));
    }
    let (mut lo, mut hi) = (-1.0f64, 1.0f64);
    let mut t = 0.0;
    for iter in 0..200 {
        let d = slope(t);
        if math::abs(d) <= 1e-15 * a || hi - lo <= 1e-15 {
            let t = t.clamp(-1.0, 1.0);
            return Ok((bid_at(t), 0.5 * (1.0 + t)));
        }
        if d > 0.0 {
            lo = t;
        } else {
            hi = t;
        }
        let curvature = -b * k * math::exp(k * t) * (2.0 + k * (1.0 + t));
        let newton = t - d / curvature;
        t = if newton > lo && newton < hi && iter % 8 != 7 {
            newton
        } else {
            0.5 * (lo + hi)
        };
    }
    Err(Error::NoConvergence {
        iterations: 200,
        detail: format!("rFPA stationarity root for v={value}, other={other}, lambda={lambda}"),
    })
}

/// Best response in rFPA(α) for two advertisers via Lagrangian decomposition
/// of the single ROS constraint: bisection on the multiplier `λ`, with each
/// query solved independently by [`rfpa_query_response`].
///
/// Queries the opponent does not bid on are won with a bid of `tick`.
pub fn rfpa_best_response(
    instance: &Instance,
    advertiser: usize,
    profile: &BidProfile,
    alpha: f64,
    options: &ResponseOptions,
) -> Result<BestResponse> {
    check_advertiser(instance, profile, advertiser)?;
    let mechanism = MechanismSpec::rfpa(alpha)?;
    mechanism.check_bidders(instance.num_advertisers())?;
    if alpha == 1.0 {
        return fpa_best_response_with(instance, advertiser, profile, options);
    }
    let values = effective_values(instance, advertiser);
    let others = opponent_max(profile, advertiser);
    let tick = options.tick_for(instance);
    let scale = instance.scale();

    let solve = |lambda: f64| -> Result<(Vec<f64>, f64, f64)> {
        let mut bids = vec![0.0; values.len()];
        let mut value = 0.0;
        let mut spend = 0.0;
        for (j, (&v, &o)) in values.iter().zip(&others).enumerate() {
            if v <= 0.0 {
                continue;
            }
            if o == 0.0 {
                let take = if lambda.is_infinite() {
                    v >= tick
                } else {
                    (1.0 + lambda) * v >= lambda * tick
                };
                if take {
                    bids[j] = tick;
                    value += v;
                    spend += tick;
                }
                continue;
            }
            let (b, p) = rfpa_query_response(v, o, alpha, lambda)?;
            bids[j] = b;
            value += p * v;
            spend += p * b;
        }
        Ok((bids, value, spend))
    };
    let respond = |(bids, value, spend): (Vec<f64>, f64, f64), lambda: f64| BestResponse {
        bids,
        value,
        spend,
        method: BestResponseMethod::DualDecomposition,
        multiplier: None,
        dual: Some(lambda),
    };

    let free = solve(0.0)?;
    if free.1 - free.2 >= 0.0 {
        return Ok(respond(free, 0.0));
    }
    let mut lo = 0.0f64;
    let mut hi = 1e6f64;
    let mut at_hi = solve(hi)?;
    while at_hi.1 - at_hi.2 < 0.0 && hi < 1e12 {
        lo = hi;
        hi *= 10.0;
        at_hi = solve(hi)?;
    }
    if at_hi.1 - at_hi.2 < 0.0 {
        // Only queries with value within rounding of `other/α` can keep the
        // slack negative this far out; the surplus-maximising limit drops them.
        let limit = solve(f64::INFINITY)?;
        if limit.1 - limit.2 >= 0.0 {
            return Ok(respond(limit, f64::INFINITY));
        }
        return Err(Error::NoConvergence {
            iterations: 0,
            detail: format!("no feasible dual multiplier up to {hi:e}"),
        });
    }
    for _ in 0..200 {
        let slack = at_hi.1 - at_hi.2;
        if slack <= 1e-8 * scale || hi - lo <= 1e-12 * hi.max(1.0) {
            return Ok(respond(at_hi, hi));
        }
        let mid = 0.5 * (lo + hi);
        let at_mid = solve(mid)?;
        if at_mid.1 - at_mid.2 >= 0.0 {
            hi = mid;
            at_hi = at_mid;
        } else {
            lo = mid;
        }
    }
    Err(Error::NoConvergence {
        iterations: 200,
        detail: format!(
            "dual bisection bracket [{lo:e}, {hi:e}], slack {:e}",
            at_hi.1 - at_hi.2
        ),
    })
}

/// Exhaustive log-bid grid oracle for the rFPA best response.
///
/// Independent of the dual route: all but the last contested query are
/// enumerated on a grid in `ln b` with spacing `log_step` (a coarse pass
/// followed by a fine local pass when two or more queries are enumerated),
/// and the last contested query takes the largest bid that keeps the ROS
/// constraint. Supports up to three contested queries.
pub fn rfpa_grid_oracle(
    instance: &Instance,
    advertiser: usize,
    profile: &BidProfile,
    alpha: f64,
    log_step: f64,
    options: &ResponseOptions,
) -> Result<BestResponse> {
    check_advertiser(instance, profile, advertiser)?;
    let mechanism = MechanismSpec::rfpa(alpha)?;
    mechanism.check_bidders(instance.num_advertisers())?;
    if alpha <= 1.0 {
        return Err(Error::Domain("grid oracle needs alpha > 1".into()));
    }
    let values = effective_values(instance, advertiser);
    let others = opponent_max(profile, advertiser);
    let tick = options.tick_for(instance);
    let k = math::ln(alpha);

    let mut bids = vec![0.0; values.len()];
    let mut base_value = 0.0;
    let mut base_spend = 0.0;
    let mut contested = Vec::new();
    for (j, (&v, &o)) in values.iter().zip(&others).enumerate() {
        if v <= 0.0 {
            continue;
        }
        if o == 0.0 {
            bids[j] = tick;
            base_value += v;
            base_spend += tick;
        } else {
            contested.push(j);
        }
    }
    if contested.len() > 3 {
        return Err(Error::Domain(format!(
            "grid oracle supports at most 3 contested queries, got {}",
            contested.len()
        )));
    }
    // Contribution of query j at log-ratio t: (value, spend).
    let term = |j: usize, t: f64| {
        let p = 0.5 * (1.0 + t);
        (p * values[j], p * others[j] * math::exp(k * t))
    };
    // Largest feasible t for the last query given the slack left by the rest.
    let last_best = |j: usize, rest_slack: f64| -> Option<f64> {
        if rest_slack < 0.0 {
            return None;
        }
        let ok = |t: f64| {
            let (v, s) = term(j, t);
            rest_slack + v - s >= 0.0
        };
        if ok(1.0) {
            return Some(1.0);
        }
        let (mut lo, mut hi) = (-1.0f64, 1.0f64);
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if ok(mid) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Some(lo)
    };
    let t_step = log_step / k;
    let eval_prefix = |ts: &[f64]| -> Option<(f64, f64)> {
        let (last, rest) = contested.split_last()?;
        let mut value = base_value;
        let mut spend = base_spend;
        for (&j, &t) in rest.iter().zip(ts) {
            let (v, s) = term(j, t);
            value += v;
            spend += s;
        }
        let t_last = last_best(*last, value - spend)?;
        let (v, _) = term(*last, t_last);
        Some((value + v, t_last))
    };
    let grid = |lo: f64, hi: f64, step: f64| -> Vec<f64> {
        let lo = lo.max(-1.0);
        let hi = hi.min(1.0);
        let n = math::ceil((hi - lo) / step).max(1.0) as usize;
        (0..=n)
            .map(|i| (lo + (hi - lo) * i as f64 / n as f64).clamp(-1.0, 1.0))
            .collect()
    };

    let dims = contested.len().saturating_sub(1);
    let mut best_ts: Vec<f64> = vec![-1.0; dims];
    let mut best_value = f64::NEG_INFINITY;
    let search = |axes: &[Vec<f64>], best_ts: &mut Vec<f64>, best_value: &mut f64| {
        let mut idx = vec![0usize; axes.len()];
        loop {
            let ts: Vec<f64> = idx.iter().zip(axes).map(|(&i, a)| a[i]).collect();
            if let Some((v, _)) = eval_prefix(&ts) {
                if v > *best_value {
                    *best_value = v;
                    *best_ts = ts;
                }
            }
            let mut d = 0;
            loop {
                if d == axes.len() {
                    return;
                }
                idx[d] += 1;
                if idx[d] < axes[d].len() {
                    break;
                }
                idx[d] = 0;
                d += 1;
            }
        }
    };
    if !contested.is_empty() && dims <= 1 {
        let axes: Vec<Vec<f64>> = (0..dims).map(|_| grid(-1.0, 1.0, t_step)).collect();
        search(&axes, &mut best_ts, &mut best_value);
    } else if dims > 1 {
        let coarse = 0.02;
        let axes: Vec<Vec<f64>> = (0..dims).map(|_| grid(-1.0, 1.0, coarse)).collect();
        search(&axes, &mut best_ts, &mut best_value);
        let centre = best_ts.clone();
        let axes: Vec<Vec<f64>> = centre
            .iter()
            .map(|&c| grid(c - 2.0 * coarse, c + 2.0 * coarse, t_step))
            .collect();
        search(&axes, &mut best_ts, &mut best_value);
    }

    let mut value = base_value;
    let mut spend = base_spend;
    if let Some((&last, rest)) = contested.split_last() {
        for (&j, &t) in rest.iter().zip(&best_ts) {
            let (v, s) = term(j, t);
            bids[j] = others[j] * math::exp(k * t);
            value += v;
            spend += s;
        }
        let t_last = last_best(last, value - spend).unwrap_or(-1.0);
        let (v, s) = term(last, t_last);
        bids[last] = others[last] * math::exp(k * t_last);
        value += v;
        spend += s;
    }
    Ok(BestResponse {
        bids,
        value,
        spend,
        method: BestResponseMethod::GridOracle,
        multiplier: None,
        dual: None,
    })
}

/// FPA best response with default options and the given tick.
pub fn fpa_best_response(
    instance: &Instance,
    advertiser: usize,
    profile: &BidProfile,
    tick: f64,
) -> Result<BestResponse> {
    let options = ResponseOptions {
        tick: Some(tick),
        ..ResponseOptions::default()
    };
    fpa_best_response_with(instance, advertiser, profile, &options)
}

/// First-price best response: win a set `S` of queries at `max other bid +
/// tick`, maximising `Σ_S v` subject to `Σ_S (p − v) ≤ 0`.
///
/// Queries priced at or below value are always taken; the rest form a 0/1
/// knapsack whose capacity is the surplus they generate. The knapsack is
/// solved by dynamic programming over values discretised to `1e-4` of the
/// instance scale when there are at most `fpa_exact_limit` queries, and
/// greedily by deficit-to-value ratio otherwise.
pub fn fpa_best_response_with(
    instance: &Instance,
    advertiser: usize,
    profile: &BidProfile,
    options: &ResponseOptions,
) -> Result<BestResponse> {
    check_advertiser(instance, profile, advertiser)?;
    if options.tick.is_some_and(|t| !(t > 0.0 && t.is_finite())) {
        return Err(Error::Domain("tick must be positive".into()));
    }
    let tick = options.tick_for(instance);
    let values = effective_values(instance, advertiser);
    let others = opponent_max(profile, advertiser);
    let scale = instance.scale();

    let mut win = vec![false; values.len()];
    let mut surplus = 0.0;
    let mut candidates = Vec::new();
    for (j, (&v, &o)) in values.iter().zip(&others).enumerate() {
        if v <= 0.0 {
            continue;
        }
        let price = o + tick;
        if price <= v {
            win[j] = true;
            surplus += v - price;
        } else {
            candidates.push((j, price - v));
        }
    }

    let exact = values.len() <= options.fpa_exact_limit;
    let capacity = surplus + ROUNDING_SLACK * scale;
    let chosen = if exact {
        knapsack_dp(&candidates, &values, capacity, 1e-4 * scale)
    } else {
        knapsack_greedy(&candidates, &values, capacity)
    };
    let mut used = 0.0;
    for &(j, deficit) in chosen.iter().filter_map(|&c| candidates.get(c)) {
        win[j] = true;
        used += deficit;
    }
    let remaining = (surplus - used).max(0.0);

    let mut bids = vec![0.0; values.len()];
    let mut value = 0.0;
    let mut spend = 0.0;
    for (j, (&v, &o)) in values.iter().zip(&others).enumerate() {
        if win[j] {
            bids[j] = o + tick;
            value += v;
            spend += o + tick;
        } else if v > 0.0 {
            match options.losing_bid {
                LosingBid::Zero => {}
                LosingBid::MaxWillingness => bids[j] = (v + remaining).min(o - tick).max(0.0),
                LosingBid::Value => bids[j] = v.min(o - tick).max(0.0),
            }
        }
    }
    Ok(BestResponse {
        bids,
        value,
        spend,
        method: if exact {
            BestResponseMethod::KnapsackDp
        } else {
            BestResponseMethod::KnapsackGreedy
        },
        multiplier: None,
        dual: None,
    })
}

/// Indices into `items` (query, deficit) maximising total discretised value
/// with total deficit within `capacity`.
fn knapsack_dp(items: &[(usize, f64)], values: &[f64], capacity: f64, unit: f64) -> Vec<usize> {
    if items.is_empty() {
        return Vec::new();
    }
    let weights: Vec<usize> = items
        .iter()
        .map(|&(j, _)| (math::round(values[j] / unit) as usize).max(1))
        .collect();
    let total: usize = weights.iter().sum();
    // min_deficit[w] = least deficit reaching discretised value exactly w.
    let mut min_deficit = vec![f64::INFINITY; total + 1];
    min_deficit[0] = 0.0;
    let mut take = vec![false; items.len() * (total + 1)];
    let mut reach = 0;
    for (k, (&(_, deficit), &w)) in items.iter().zip(&weights).enumerate() {
        reach += w;
        for s in (w..=reach).rev() {
            let cand = min_deficit[s - w] + deficit;
            if cand < min_deficit[s] {
                min_deficit[s] = cand;
                take[k * (total + 1) + s] = true;
            }
        }
    }
    let Some(mut s) = (0..=total).rev().find(|&s| min_deficit[s] <= capacity) else {
        return Vec::new();
    };
    let mut chosen = Vec::new();
    for k in (0..items.len()).rev() {
        if take[k * (total + 1) + s] {
            chosen.push(k);
            s -= weights[k];
        }
    }
    chosen
}

fn knapsack_greedy(items: &[(usize, f64)], values: &[f64], capacity: f64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..items.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = items[a].1 / values[items[a].0];
        let rb = items[b].1 / values[items[b].0];
        ra.total_cmp(&rb).then(a.cmp(&b))
    });
    let mut used = 0.0;
    let mut chosen = Vec::new();
    for k in order {
        if used + items[k].1 <= capacity {
            used += items[k].1;
            chosen.push(k);
        }
    }
    chosen
}

/// Dispatches to the best-response oracle of the mechanism.
pub fn best_response(
    instance: &Instance,
    advertiser: usize,
    profile: &BidProfile,
    mechanism: &MechanismSpec,
    options: &ResponseOptions,
) -> Result<BestResponse> {
    match mechanism.kind {
        MechanismKind::Spa | MechanismKind::Rtruth if mechanism.alpha == 1.0 => {
            uniform_best_response_with(
                instance,
                advertiser,
                profile,
                &MechanismSpec::spa(),
                options.multiplier,
            )
        }
        MechanismKind::Spa | MechanismKind::Rtruth => {
            uniform_best_response_with(instance, advertiser, profile, mechanism, options.multiplier)
        }
        MechanismKind::Rfpa => {
            rfpa_best_response(instance, advertiser, profile, mechanism.alpha, options)
        }
        MechanismKind::Fpa => fpa_best_response_with(instance, advertiser, profile, options),
    }
}

/// Single-query deviation grid for [`check_undominated`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeviationGrid {
    /// Multiplicative grid points spanning `[b°/α · 0.5, α · b° · 2]`.
    pub points: usize,
    /// Minimum value gain (relative to the instance scale) that counts.
    pub value_tol: f64,
    /// ROS slack tolerance (relative to the instance scale).
    pub ros_tol: f64,
}

impl Default for DeviationGrid {
    fn default() -> Self {
        Self {
            points: 400,
            value_tol: 1e-6,
            ros_tol: WELFARE_TOL,
        }
    }
}

impl DeviationGrid {
    /// Candidate bids for one query: the multiplicative grid around the
    /// highest competing bid, zero, and the advertiser's own value.
    pub fn candidates(&self, other: f64, alpha: f64, own_value: f64, scale: f64) -> Vec<f64> {
        let (lo, hi) = if other > 0.0 {
            (other / alpha * 0.5, other * alpha * 2.0)
        } else {
            (1e-6 * scale, 2.0 * scale.max(own_value))
        };
        let mut out = Vec::with_capacity(self.points + 2);
        out.push(0.0);
        if own_value > 0.0 {
            out.push(own_value);
        }
        let n = self.points.max(2);
        let ratio = math::ln(hi / lo);
        for k in 0..n {
            out.push(lo * math::exp(ratio * k as f64 / (n - 1) as f64));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub advertiser: usize,
    pub query: usize,
    pub better_bid: f64,
    pub value_gain: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct UndominatedReport {
    pub ok: bool,
    pub violations: Vec<Violation>,
    pub grid: DeviationGrid,
}

/// Checks every ROS-feasible single-query deviation on the grid; a
/// violation raises the deviating advertiser's value by more than the
/// tolerance. Joint deviations across queries are not considered.
pub fn check_undominated(
    instance: &Instance,
    profile: &BidProfile,
    mechanism: &MechanismSpec,
    grid: &DeviationGrid,
) -> Result<UndominatedReport> {
    profile.check_shape(instance)?;
    let n = instance.num_advertisers();
    mechanism.check_bidders(n)?;
    let scale = instance.scale();
    let mut violations = Vec::new();
    for i in 0..n {
        let row = profile.bids_of(i).to_vec();
        let (value, spend) = advertiser_totals(instance, profile, i, mechanism, &row)?;
        if value - spend < -grid.ros_tol * scale {
            return Err(Error::Infeasible {
                advertiser: i,
                slack: value - spend,
            });
        }
        let others = opponent_max(profile, i);
        let t = instance.target(i);
        let mut qb = vec![0.0; n];
        let mut contribution = |j: usize, own: f64| -> Result<(f64, f64)> {
            for (k, b) in qb.iter_mut().enumerate() {
                *b = if k == i { own } else { profile.bid(k, j) };
            }
            if qb.iter().all(|b| *b == 0.0) {
                return Ok((0.0, 0.0));
            }
            let out = mechanism.outcome(&qb)?;
            Ok((
                out.win_prob[i] * t * instance.value(i, j),
                out.expected_payment[i],
            ))
        };
        for j in 0..instance.num_queries() {
            let (cur_v, cur_s) = contribution(j, row[j])?;
            let mut best: Option<Violation> = None;
            let own_value = t * instance.value(i, j);
            for b in grid.candidates(others[j], mechanism.alpha, own_value, scale) {
                let (v, s) = contribution(j, b)?;
                let new_value = value - cur_v + v;
                let new_spend = spend - cur_s + s;
                let gain = new_value - value;
                if gain > grid.value_tol * scale
                    && new_value - new_spend >= -grid.ros_tol * scale
                    && best.as_ref().is_none_or(|w| gain > w.value_gain)
                {
                    best = Some(Violation {
                        advertiser: i,
                        query: j,
                        better_bid: b,
                        value_gain: gain,
                    });
                }
            }
            violations.extend(best);
        }
    }
    Ok(UndominatedReport {
        ok: violations.is_empty(),
        violations,
        grid: *grid,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BidFloorFlag {
    /// A certain winner bids below `α` times the loser's value.
    WinnerBidTooLow {
        query: usize,
        advertiser: usize,
        bid: f64,
        required: f64,
    },
    /// A shared query where the bid is below `v / (1 + ln α + ln β)`.
    SharedBidTooLow {
        query: usize,
        advertiser: usize,
        bid: f64,
        required: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct BidFloorReport {
    pub flags: Vec<BidFloorFlag>,
    pub tol: f64,
}

impl BidFloorReport {
    pub fn ok(&self) -> bool {
        self.flags.is_empty()
    }
}

/// Necessary conditions for undominated rFPA(α) bids (two advertisers),
/// with absolute tolerance `1e-6` of the instance scale.
pub fn check_bid_floors(
    instance: &Instance,
    profile: &BidProfile,
    alpha: f64,
) -> Result<BidFloorReport> {
    check_bid_floors_with_tol(instance, profile, alpha, 1e-6 * instance.scale())
}

pub fn check_bid_floors_with_tol(
    instance: &Instance,
    profile: &BidProfile,
    alpha: f64,
    tol: f64,
) -> Result<BidFloorReport> {
    profile.check_shape(instance)?;
    MechanismSpec::rfpa(alpha)?.check_bidders(instance.num_advertisers())?;
    if alpha <= 1.0 {
        return Err(Error::Domain("bid floors need alpha > 1".into()));
    }
    let ln_alpha = math::ln(alpha);
    let mut flags = Vec::new();
    for j in 0..instance.num_queries() {
        let b = [profile.bid(0, j), profile.bid(1, j)];
        if b[0] == 0.0 && b[1] == 0.0 {
            continue;
        }
        let p1 = rfpa_win_prob(b[0], b[1], alpha)?;
        let probs = [p1, 1.0 - p1];
        for i in 0..2 {
            let o = 1 - i;
            let v_own = instance.target(i) * instance.value(i, j);
            let v_other = instance.target(o) * instance.value(o, j);
            if probs[i] >= 1.0 - 1e-12 {
                let required = alpha * v_other;
                if b[i] < required - tol {
                    flags.push(BidFloorFlag::WinnerBidTooLow {
                        query: j,
                        advertiser: i,
                        bid: b[i],
                        required,
                    });
                }
            } else if probs[i] > 1e-12 {
                let ln_beta = math::ln(b[i]) - math::ln(b[o]);
                let required = v_own / (1.0 + ln_alpha + ln_beta);
                if b[i] < required - tol {
                    flags.push(BidFloorFlag::SharedBidTooLow {
                        query: j,
                        advertiser: i,
                        bid: b[i],
                        required,
                    });
                }
            }
        }
    }
    Ok(BidFloorReport { flags, tol })
}
