//! Single-slot allocation and pricing rules.
//!
//! `rFPA(α)` and `rTruth(α)` share one allocation rule for two bidders: with
//! `β = b1 / b2 ∈ [1/α, α]` bidder 1 wins with probability
//! `(1 + log_α β) / 2`, otherwise the higher bidder wins outright. rFPA charges
//! the winner its bid; rTruth charges the Myerson price of that allocation.
//!
//! Payments in [`QueryOutcome`] are always *expected* costs (price times win
//! probability).

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math;
use crate::model::{Allocation, BidProfile, Instance, WelfareSummary};
use crate::numeric::adaptive_simpson;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MechanismKind {
    Spa,
    Fpa,
    Rfpa,
    Rtruth,
}

impl MechanismKind {
    pub fn name(self) -> &'static str {
        match self {
            MechanismKind::Spa => "spa",
            MechanismKind::Fpa => "fpa",
            MechanismKind::Rfpa => "rfpa",
            MechanismKind::Rtruth => "rtruth",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "spa" => Some(MechanismKind::Spa),
            "fpa" => Some(MechanismKind::Fpa),
            "rfpa" => Some(MechanismKind::Rfpa),
            "rtruth" => Some(MechanismKind::Rtruth),
            _ => None,
        }
    }
}

/// Deterministic tie-breaking rule. Only one rule exists today; it is carried
/// in the spec so that alternative rules can be added without changing
/// call sites.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum TieBreak {
    /// Equal highest bids go to the lowest advertiser index.
    #[default]
    LowestIndex,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MechanismSpec {
    pub kind: MechanismKind,
    /// Randomization width, `≥ 1`. Fixed to 1 for SPA and FPA.
    pub alpha: f64,
    pub tie_break: TieBreak,
}

impl MechanismSpec {
    pub fn spa() -> Self {
        Self {
            kind: MechanismKind::Spa,
            alpha: 1.0,
            tie_break: TieBreak::LowestIndex,
        }
    }

    pub fn fpa() -> Self {
        Self {
            kind: MechanismKind::Fpa,
            alpha: 1.0,
            tie_break: TieBreak::LowestIndex,
        }
    }

    pub fn rfpa(alpha: f64) -> Result<Self> {
        check_alpha(alpha)?;
        Ok(Self {
            kind: MechanismKind::Rfpa,
            alpha,
            tie_break: TieBreak::LowestIndex,
        })
    }

    pub fn rtruth(alpha: f64) -> Result<Self> {
        check_alpha(alpha)?;
        Ok(Self {
            kind: MechanismKind::Rtruth,
            alpha,
            tie_break: TieBreak::LowestIndex,
        })
    }

    pub fn new(kind: MechanismKind, alpha: f64) -> Result<Self> {
        match kind {
            MechanismKind::Spa => Ok(Self::spa()),
            MechanismKind::Fpa => Ok(Self::fpa()),
            MechanismKind::Rfpa => Self::rfpa(alpha),
            MechanismKind::Rtruth => Self::rtruth(alpha),
        }
    }

    /// Whether bidding one's value is a dominant strategy for a
    /// quasi-linear bidder (SPA, rTruth).
    pub fn is_truthful(&self) -> bool {
        matches!(self.kind, MechanismKind::Spa | MechanismKind::Rtruth)
    }

    pub fn check_bidders(&self, n: usize) -> Result<()> {
        match self.kind {
            MechanismKind::Rfpa | MechanismKind::Rtruth if n != 2 => Err(Error::BidderCount {
                need: "exactly 2",
                got: n,
            }),
            MechanismKind::Spa | MechanismKind::Fpa if n < 2 => Err(Error::BidderCount {
                need: "at least 2",
                got: n,
            }),
            _ => Ok(()),
        }
    }

    /// Outcome of a single query.
    pub fn outcome(&self, bids: &[f64]) -> Result<QueryOutcome> {
        self.check_bidders(bids.len())?;
        match self.kind {
            MechanismKind::Spa => spa_outcome(bids),
            MechanismKind::Fpa => fpa_outcome(bids),
            MechanismKind::Rfpa => rfpa_outcome(bids[0], bids[1], self.alpha),
            MechanismKind::Rtruth => rtruth_outcome(bids[0], bids[1], self.alpha),
        }
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha.is_finite() && alpha >= 1.0) {
        return Err(Error::InvalidMechanism(format!(
            "alpha must be >= 1, got {alpha}"
        )));
    }
    Ok(())
}

/// Win probabilities and expected payments for one query.
#[derive(Debug, Clone, PartialEq)]
pub struct QueryOutcome {
    pub win_prob: Vec<f64>,
    pub expected_payment: Vec<f64>,
}

impl QueryOutcome {
    pub fn unallocated(n: usize) -> Self {
        Self {
            win_prob: vec![0.0; n],
            expected_payment: vec![0.0; n],
        }
    }

    fn winner(n: usize, winner: usize, price: f64) -> Self {
        let mut out = Self::unallocated(n);
        out.win_prob[winner] = 1.0;
        out.expected_payment[winner] = price;
        out
    }
}

fn check_bids(bids: &[f64]) -> Result<()> {
    if bids.len() < 2 {
        return Err(Error::BidderCount {
            need: "at least 2",
            got: bids.len(),
        });
    }
    if let Some(b) = bids.iter().find(|b| !(b.is_finite() && **b >= 0.0)) {
        return Err(Error::InvalidInstance(format!("invalid bid {b}")));
    }
    Ok(())
}

/// Index of the highest bid (lowest index on ties) and the highest bid among
/// the others.
fn top_two(bids: &[f64]) -> (usize, f64) {
    let mut winner = 0;
    for (i, &b) in bids.iter().enumerate().skip(1) {
        if b > bids[winner] {
            winner = i;
        }
    }
    let second = bids
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != winner)
        .map(|(_, b)| *b)
        .fold(0.0, f64::max);
    (winner, second)
}

/// Second-price auction: highest bid wins and pays the second-highest bid.
pub fn spa_outcome(bids: &[f64]) -> Result<QueryOutcome> {
    check_bids(bids)?;
    let (winner, second) = top_two(bids);
    Ok(QueryOutcome::winner(bids.len(), winner, second))
}

/// First-price auction: highest bid wins and pays its bid.
pub fn fpa_outcome(bids: &[f64]) -> Result<QueryOutcome> {
    check_bids(bids)?;
    let (winner, _) = top_two(bids);
    Ok(QueryOutcome::winner(bids.len(), winner, bids[winner]))
}

/// Probability that bidder 1 wins under the shared rFPA/rTruth allocation.
///
/// `α = 1` is the deterministic first-price allocation (ties to bidder 1).
pub fn rfpa_win_prob(b1: f64, b2: f64, alpha: f64) -> Result<f64> {
    if !(b1.is_finite() && b2.is_finite() && b1 >= 0.0 && b2 >= 0.0) {
        return Err(Error::InvalidInstance(format!("invalid bids ({b1}, {b2})")));
    }
    check_alpha(alpha)?;
    if b1 == 0.0 && b2 == 0.0 {
        return Err(Error::AmbiguousOutcome);
    }
    if b2 == 0.0 {
        return Ok(1.0);
    }
    if b1 == 0.0 {
        return Ok(0.0);
    }
    if alpha == 1.0 {
        return Ok(if b1 >= b2 { 1.0 } else { 0.0 });
    }
    let ln_alpha = math::ln(alpha);
    let ln_beta = math::ln(b1) - math::ln(b2);
    if ln_beta > ln_alpha {
        Ok(1.0)
    } else if ln_beta < -ln_alpha {
        Ok(0.0)
    } else {
        Ok((0.5 * (1.0 + ln_beta / ln_alpha)).clamp(0.0, 1.0))
    }
}

/// Randomized first-price auction for two bidders.
pub fn rfpa_outcome(b1: f64, b2: f64, alpha: f64) -> Result<QueryOutcome> {
    if alpha == 1.0 && !(b1 == 0.0 && b2 == 0.0) {
        return fpa_outcome(&[b1, b2]);
    }
    let p1 = rfpa_win_prob(b1, b2, alpha)?;
    let p2 = 1.0 - p1;
    Ok(QueryOutcome {
        win_prob: vec![p1, p2],
        expected_payment: vec![p1 * b1, p2 * b2],
    })
}

/// Expected rTruth payment of a bidder bidding `bid` against `other`
/// (`α > 1`).
pub fn rtruth_expected_price(bid: f64, other: f64, alpha: f64) -> f64 {
    if bid == 0.0 || other == 0.0 {
        return 0.0;
    }
    let ln_alpha = math::ln(alpha);
    let ln_beta = math::ln(bid) - math::ln(other);
    if ln_beta < -ln_alpha {
        return 0.0;
    }
    let beta = if ln_beta >= ln_alpha {
        alpha
    } else {
        math::exp(ln_beta)
    };
    (other * (beta - 1.0 / alpha) / (2.0 * ln_alpha)).max(0.0)
}

/// Truthful randomized auction: rFPA's allocation with Myerson prices.
///
/// `α = 1` degenerates to the second-price auction.
pub fn rtruth_outcome(b1: f64, b2: f64, alpha: f64) -> Result<QueryOutcome> {
    if alpha == 1.0 && !(b1 == 0.0 && b2 == 0.0) {
        return spa_outcome(&[b1, b2]);
    }
    let p1 = rfpa_win_prob(b1, b2, alpha)?;
    Ok(QueryOutcome {
        win_prob: vec![p1, 1.0 - p1],
        expected_payment: vec![
            rtruth_expected_price(b1, b2, alpha),
            rtruth_expected_price(b2, b1, alpha),
        ],
    })
}

/// Myerson expected payment `b·π(b) − ∫₀ᵇ π(z) dz` by adaptive Simpson
/// quadrature, where `win_prob(z, other)` is the bidder's allocation curve.
///
/// The curve is sampled on a uniform grid first; a decrease larger than
/// `1e-12` is reported as an oracle precondition error.
pub fn myerson_price_numeric<F>(win_prob: F, bid: f64, other: f64) -> Result<f64>
where
    F: Fn(f64, f64) -> f64,
{
    if !(bid.is_finite() && other.is_finite() && bid >= 0.0 && other >= 0.0) {
        return Err(Error::OraclePrecondition(format!(
            "bids must be finite and non-negative, got ({bid}, {other})"
        )));
    }
    if bid == 0.0 {
        return Ok(0.0);
    }
    const GRID: usize = 1024;
    let mut prev = win_prob(0.0, other);
    for k in 1..=GRID {
        let z = bid * k as f64 / GRID as f64;
        let p = win_prob(z, other);
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::OraclePrecondition(format!(
                "win probability {p} at bid {z} outside [0, 1]"
            )));
        }
        if p < prev - 1e-12 {
            return Err(Error::OraclePrecondition(format!(
                "allocation curve decreases at bid {z} ({prev} -> {p})"
            )));
        }
        prev = p;
    }
    let curve = |z: f64| win_prob(z, other);
    let integral = adaptive_simpson(&curve, 0.0, bid, 1e-11, 48);
    Ok(bid * win_prob(bid, other) - integral)
}

/// Outcome of a full bid profile: the allocation plus per-advertiser
/// expected value and spend.
#[derive(Debug, Clone, PartialEq)]
pub struct Play {
    pub allocation: Allocation,
    pub value: Vec<f64>,
    pub spend: Vec<f64>,
}

impl Play {
    /// `T_i · value_i − spend_i`.
    pub fn slack(&self, instance: &Instance) -> Vec<f64> {
        crate::model::ros_slack(instance, &self.value, &self.spend)
    }

    pub fn liquid_welfare(&self, instance: &Instance) -> f64 {
        self.value
            .iter()
            .enumerate()
            .map(|(i, v)| instance.target(i) * v)
            .sum()
    }

    pub fn summary(&self, instance: &Instance) -> WelfareSummary {
        WelfareSummary {
            lw_alloc: self.liquid_welfare(instance),
            lw_opt: crate::model::optimal_welfare(instance).0,
            spend: self.spend.clone(),
            value: self.value.clone(),
        }
    }
}

/// Runs the mechanism on every query. A query where every bid is zero is
/// left unallocated.
pub fn play(instance: &Instance, bids: &BidProfile, mechanism: &MechanismSpec) -> Result<Play> {
    bids.check_shape(instance)?;
    let n = instance.num_advertisers();
    mechanism.check_bidders(n)?;
    let mut allocation = Allocation::zeros(n, instance.num_queries());
    let mut value = vec![0.0; n];
    let mut spend = vec![0.0; n];
    for j in 0..instance.num_queries() {
        let qb = bids.query_bids(j);
        if qb.iter().all(|b| *b == 0.0) {
            continue;
        }
        let out = mechanism.outcome(&qb)?;
        for i in 0..n {
            allocation.set(i, j, out.win_prob[i]);
            value[i] += out.win_prob[i] * instance.value(i, j);
            spend[i] += out.expected_payment[i];
        }
    }
    Ok(Play {
        allocation,
        value,
        spend,
    })
}
