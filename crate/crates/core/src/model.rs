//! Instances, bid profiles and welfare accounting.
//!
//! Every query has a single slot. Matrices are stored row-major with one row
//! per advertiser and one column per query.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math;

/// Values `v[i][j]` and ROS targets `T[i]` for `n` advertisers and `m` queries.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    num_advertisers: usize,
    num_queries: usize,
    values: Vec<f64>,
    targets: Vec<f64>,
}

impl Instance {
    pub fn new(values: Vec<Vec<f64>>, targets: Vec<f64>) -> Result<Self> {
        let num_advertisers = values.len();
        if num_advertisers == 0 {
            return Err(Error::InvalidInstance("no advertisers".into()));
        }
        let num_queries = values[0].len();
        if num_queries == 0 {
            return Err(Error::InvalidInstance("no queries".into()));
        }
        if targets.len() != num_advertisers {
            return Err(Error::InvalidInstance(format!(
                "{} targets for {} advertisers",
                targets.len(),
                num_advertisers
            )));
        }
        let mut flat = Vec::with_capacity(num_advertisers * num_queries);
        for (i, row) in values.into_iter().enumerate() {
            if row.len() != num_queries {
                return Err(Error::InvalidInstance(format!(
                    "advertiser {i} has {} values, expected {num_queries}",
                    row.len()
                )));
            }
            if let Some(v) = row.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
                return Err(Error::InvalidInstance(format!(
                    "advertiser {i} has invalid value {v}"
                )));
            }
            flat.extend(row);
        }
        if let Some((i, t)) = targets
            .iter()
            .enumerate()
            .find(|(_, t)| !(t.is_finite() && **t > 0.0))
        {
            return Err(Error::InvalidInstance(format!(
                "advertiser {i} has non-positive target {t}"
            )));
        }
        Ok(Self {
            num_advertisers,
            num_queries,
            values: flat,
            targets,
        })
    }

    /// Instance with every target equal to 1.
    pub fn with_unit_targets(values: Vec<Vec<f64>>) -> Result<Self> {
        let n = values.len();
        Self::new(values, vec![1.0; n])
    }

    pub fn num_advertisers(&self) -> usize {
        self.num_advertisers
    }

    pub fn num_queries(&self) -> usize {
        self.num_queries
    }

    #[inline]
    pub fn value(&self, advertiser: usize, query: usize) -> f64 {
        self.values[advertiser * self.num_queries + query]
    }

    pub fn values_of(&self, advertiser: usize) -> &[f64] {
        let start = advertiser * self.num_queries;
        &self.values[start..start + self.num_queries]
    }

    pub fn target(&self, advertiser: usize) -> f64 {
        self.targets[advertiser]
    }

    pub fn targets(&self) -> &[f64] {
        &self.targets
    }

    pub fn is_normalized(&self) -> bool {
        self.targets.iter().all(|&t| t == 1.0)
    }

    /// Folds the targets into the values: `v[i][j] <- T[i] * v[i][j]`, `T[i] <- 1`.
    ///
    /// Liquid welfare of any allocation is unchanged.
    pub fn normalize(&self) -> Instance {
        let mut values = self.values.clone();
        for (i, row) in values.chunks_mut(self.num_queries).enumerate() {
            let t = self.targets[i];
            row.iter_mut().for_each(|v| *v *= t);
        }
        Instance {
            num_advertisers: self.num_advertisers,
            num_queries: self.num_queries,
            values,
            targets: vec![1.0; self.num_advertisers],
        }
    }

    /// Largest target-weighted value, used to scale tolerances.
    pub fn max_value(&self) -> f64 {
        (0..self.num_advertisers)
            .flat_map(|i| {
                let t = self.targets[i];
                self.values_of(i).iter().map(move |v| t * v)
            })
            .fold(0.0, f64::max)
    }

    /// `max(1, max_value)`; multiplies absolute tolerances.
    pub fn scale(&self) -> f64 {
        self.max_value().max(1.0)
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.values
            .chunks(self.num_queries)
            .map(|r| r.to_vec())
            .collect()
    }
}

/// A dense non-negative matrix with one row per advertiser.
#[derive(Debug, Clone, PartialEq)]
struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        let m = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(n * m);
        for row in rows {
            if row.len() != m {
                return Err(Error::ShapeMismatch {
                    expected: (n, m),
                    found: (n, row.len()),
                });
            }
            data.extend(row);
        }
        Ok(Self {
            rows: n,
            cols: m,
            data,
        })
    }

    #[inline]
    fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }
}

/// One bid per advertiser per query.
#[derive(Debug, Clone, PartialEq)]
pub struct BidProfile(Matrix);

impl BidProfile {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let m = Matrix::from_rows(rows)?;
        if let Some(b) = m.data.iter().find(|b| !(b.is_finite() && **b >= 0.0)) {
            return Err(Error::InvalidInstance(format!("invalid bid {b}")));
        }
        Ok(Self(m))
    }

    pub fn zeros(num_advertisers: usize, num_queries: usize) -> Self {
        Self(Matrix::zeros(num_advertisers, num_queries))
    }

    /// Every advertiser bids its (target-weighted) value.
    pub fn truthful(instance: &Instance) -> Self {
        Self::uniform(instance, &vec![1.0; instance.num_advertisers()])
    }

    /// Advertiser `i` bids `multipliers[i] * T[i] * v[i][j]` on every query.
    pub fn uniform(instance: &Instance, multipliers: &[f64]) -> Self {
        let mut m = Matrix::zeros(instance.num_advertisers(), instance.num_queries());
        for (i, &c) in multipliers.iter().enumerate() {
            let t = instance.target(i);
            for (b, v) in m.row_mut(i).iter_mut().zip(instance.values_of(i)) {
                *b = c * t * v;
            }
        }
        Self(m)
    }

    pub fn num_advertisers(&self) -> usize {
        self.0.rows
    }

    pub fn num_queries(&self) -> usize {
        self.0.cols
    }

    #[inline]
    pub fn bid(&self, advertiser: usize, query: usize) -> f64 {
        self.0.get(advertiser, query)
    }

    pub fn bids_of(&self, advertiser: usize) -> &[f64] {
        self.0.row(advertiser)
    }

    /// Bids of all advertisers on one query.
    pub fn query_bids(&self, query: usize) -> Vec<f64> {
        (0..self.0.rows).map(|i| self.0.get(i, query)).collect()
    }

    /// Replaces one advertiser's bid vector.
    ///
    /// Panics if `bids` has the wrong length or contains a negative or
    /// non-finite entry.
    pub fn set_bids_of(&mut self, advertiser: usize, bids: &[f64]) {
        assert_eq!(bids.len(), self.0.cols, "bid vector length");
        assert!(
            bids.iter().all(|b| b.is_finite() && *b >= 0.0),
            "bids must be finite and non-negative"
        );
        self.0.row_mut(advertiser).copy_from_slice(bids);
    }

    pub fn set_bid(&mut self, advertiser: usize, query: usize, bid: f64) {
        assert!(
            bid.is_finite() && bid >= 0.0,
            "bid must be finite and non-negative"
        );
        let cols = self.0.cols;
        self.0.data[advertiser * cols + query] = bid;
    }

    /// Sup-norm distance between two profiles of the same shape.
    pub fn sup_distance(&self, other: &BidProfile) -> f64 {
        self.0
            .data
            .iter()
            .zip(&other.0.data)
            .map(|(a, b)| math::abs(a - b))
            .fold(0.0, f64::max)
    }

    pub fn check_shape(&self, instance: &Instance) -> Result<()> {
        let expected = (instance.num_advertisers(), instance.num_queries());
        let found = (self.0.rows, self.0.cols);
        if expected != found {
            return Err(Error::ShapeMismatch { expected, found });
        }
        Ok(())
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.0.rows).map(|i| self.0.row(i).to_vec()).collect()
    }
}

/// Per-query win probabilities `π[i][j]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Allocation(Matrix);

impl Allocation {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let m = Matrix::from_rows(rows)?;
        if let Some(p) = m.data.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(Error::InvalidInstance(format!(
                "win probability {p} outside [0, 1]"
            )));
        }
        for j in 0..m.cols {
            let total: f64 = (0..m.rows).map(|i| m.get(i, j)).sum();
            if total > 1.0 + 1e-12 {
                return Err(Error::InvalidInstance(format!(
                    "query {j} allocated with total probability {total}"
                )));
            }
        }
        Ok(Self(m))
    }

    pub fn zeros(num_advertisers: usize, num_queries: usize) -> Self {
        Self(Matrix::zeros(num_advertisers, num_queries))
    }

    #[inline]
    pub fn prob(&self, advertiser: usize, query: usize) -> f64 {
        self.0.get(advertiser, query)
    }

    pub(crate) fn set(&mut self, advertiser: usize, query: usize, p: f64) {
        let cols = self.0.cols;
        self.0.data[advertiser * cols + query] = p;
    }

    pub fn num_advertisers(&self) -> usize {
        self.0.rows
    }

    pub fn num_queries(&self) -> usize {
        self.0.cols
    }

    /// Scales every probability by `lambda`.
    pub fn scaled(&self, lambda: f64) -> Allocation {
        let mut m = self.0.clone();
        m.data.iter_mut().for_each(|p| *p *= lambda);
        Allocation(m)
    }

    /// The advertiser that receives query `j` with probability 1, if any.
    pub fn deterministic_winner(&self, query: usize) -> Option<usize> {
        (0..self.0.rows).find(|&i| self.0.get(i, query) == 1.0)
    }
}

/// Liquid welfare of an allocation and the optimum, with per-advertiser totals.
#[derive(Debug, Clone, PartialEq)]
pub struct WelfareSummary {
    pub lw_alloc: f64,
    pub lw_opt: f64,
    pub spend: Vec<f64>,
    pub value: Vec<f64>,
}

/// `Σ_i T_i Σ_j π_ij v_ij`.
pub fn liquid_welfare(instance: &Instance, alloc: &Allocation) -> Result<f64> {
    let expected = (instance.num_advertisers(), instance.num_queries());
    let found = (alloc.num_advertisers(), alloc.num_queries());
    if expected != found {
        return Err(Error::ShapeMismatch { expected, found });
    }
    Ok((0..instance.num_advertisers())
        .map(|i| {
            let row: f64 = instance
                .values_of(i)
                .iter()
                .enumerate()
                .map(|(j, v)| alloc.prob(i, j) * v)
                .sum();
            instance.target(i) * row
        })
        .sum())
}

/// Optimal liquid welfare: each query goes to an advertiser maximising
/// `T_i v_ij`, ties to the lowest index.
pub fn optimal_welfare(instance: &Instance) -> (f64, Allocation) {
    let n = instance.num_advertisers();
    let m = instance.num_queries();
    let mut alloc = Allocation::zeros(n, m);
    let mut total = 0.0;
    for j in 0..m {
        let mut best = 0;
        let mut best_v = instance.target(0) * instance.value(0, j);
        for i in 1..n {
            let v = instance.target(i) * instance.value(i, j);
            if v > best_v {
                best = i;
                best_v = v;
            }
        }
        alloc.set(best, j, 1.0);
        total += best_v;
    }
    (total, alloc)
}

/// `T_i * value_i - spend_i` per advertiser; the ROS constraint holds iff
/// the slack is non-negative (up to tolerance).
pub fn ros_slack(instance: &Instance, value: &[f64], spend: &[f64]) -> Vec<f64> {
    value
        .iter()
        .zip(spend)
        .enumerate()
        .map(|(i, (v, s))| instance.target(i) * v - s)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn inst(rows: &[&[f64]]) -> Instance {
        Instance::with_unit_targets(rows.iter().map(|r| r.to_vec()).collect()).unwrap()
    }

    #[test]
    fn normalize_identity_with_unit_targets() {
        let a = inst(&[&[1.0, 2.0], &[0.5, 0.25]]);
        assert_eq!(a.normalize(), a);
    }

    #[test]
    fn normalize_folds_target_into_values() {
        let a = Instance::new(vec![vec![3.0], vec![1.0]], vec![2.0, 1.0]).unwrap();
        let n = a.normalize();
        assert_eq!(n.targets(), &[1.0, 1.0]);
        assert_eq!(n.value(0, 0), 6.0);
        assert_eq!(n.value(1, 0), 1.0);
    }

    #[test]
    fn non_positive_target_rejected() {
        let err = Instance::new(vec![vec![1.0]], vec![0.0]).unwrap_err();
        assert!(matches!(err, Error::InvalidInstance(_)));
        assert!(Instance::new(vec![vec![1.0]], vec![-1.0]).is_err());
        assert!(Instance::new(vec![vec![-1.0]], vec![1.0]).is_err());
        assert!(Instance::new(vec![vec![1.0], vec![1.0, 2.0]], vec![1.0, 1.0]).is_err());
    }

    #[test]
    fn liquid_welfare_examples() {
        let i = inst(&[&[1.0], &[0.9]]);
        assert_eq!(liquid_welfare(&i, &Allocation::zeros(2, 1)).unwrap(), 0.0);
        let full = Allocation::new(vec![vec![1.0], vec![0.0]]).unwrap();
        assert_abs_diff_eq!(liquid_welfare(&i, &full).unwrap(), 1.0);
        let half = Allocation::new(vec![vec![0.5], vec![0.5]]).unwrap();
        assert_abs_diff_eq!(liquid_welfare(&i, &half).unwrap(), 0.95, epsilon = 1e-15);
    }

    #[test]
    fn liquid_welfare_shape_mismatch() {
        let i = inst(&[&[1.0], &[0.9]]);
        let err = liquid_welfare(&i, &Allocation::zeros(2, 2)).unwrap_err();
        assert!(matches!(err, Error::ShapeMismatch { .. }));
    }

    #[test]
    fn allocation_rejects_overallocated_query() {
        assert!(Allocation::new(vec![vec![0.7], vec![0.7]]).is_err());
        assert!(Allocation::new(vec![vec![1.5]]).is_err());
    }

    #[test]
    fn optimal_welfare_examples() {
        let (v, a) = optimal_welfare(&inst(&[&[1.0, 0.01], &[0.01, 0.99]]));
        assert_abs_diff_eq!(v, 1.99, epsilon = 1e-15);
        assert_eq!(a.deterministic_winner(0), Some(0));
        assert_eq!(a.deterministic_winner(1), Some(1));

        let (v, _) = optimal_welfare(&inst(&[&[1.0], &[0.9]]));
        assert_eq!(v, 1.0);
        let (v, _) = optimal_welfare(&inst(&[&[1.0, 1.0]]));
        assert_eq!(v, 2.0);
    }

    #[test]
    fn optimal_welfare_ties_go_to_lowest_index() {
        let (_, a) = optimal_welfare(&inst(&[&[0.5], &[0.5]]));
        assert_eq!(a.deterministic_winner(0), Some(0));
    }

    #[test]
    fn ros_slack_examples() {
        let i = inst(&[&[1.0]]);
        assert_eq!(ros_slack(&i, &[1.4], &[1.4]), vec![0.0]);
        assert_abs_diff_eq!(ros_slack(&i, &[2.0], &[1.4])[0], 0.6, epsilon = 1e-15);
        assert_eq!(ros_slack(&i, &[0.0], &[0.1]), vec![-0.1]);
    }

    #[test]
    fn sup_distance_and_set_bids() {
        let mut a = BidProfile::zeros(2, 2);
        let b = BidProfile::new(vec![vec![0.0, 0.5], vec![0.25, 0.0]]).unwrap();
        assert_eq!(a.sup_distance(&b), 0.5);
        a.set_bids_of(0, &[0.0, 0.5]);
        a.set_bid(1, 0, 0.25);
        assert_eq!(a, b);
    }
}
