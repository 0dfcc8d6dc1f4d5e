//! User-side node selection policies and the shared sampling primitive.

use alloc::vec;
use alloc::vec::Vec;

use rand_core::RngCore;

use crate::error::PolicyError;
use crate::model::QosIndicator;
use crate::rng::uniform;

/// Floor applied to delays and costs before inverting them, so an idle
/// node (advertised delay 0) gets a large finite weight instead of an
/// infinite one. 10 milliseconds.
pub const DELAY_EPSILON: f64 = 0.01;

/// Uniform random node selection.
pub fn urns_probabilities(node_count: usize) -> Result<Vec<f64>, PolicyError> {
    if node_count == 0 {
        return Err(PolicyError::EmptyNodeSet);
    }
    Ok(vec![1.0 / node_count as f64; node_count])
}

/// Reputation-weighted selection.
pub fn rbns_probabilities(reputations: &[f64]) -> Result<Vec<f64>, PolicyError> {
    if reputations.is_empty() {
        return Err(PolicyError::EmptyNodeSet);
    }
    if reputations.iter().any(|r| !(*r > 0.0)) {
        return Err(PolicyError::NonPositiveReputation);
    }
    let total: f64 = reputations.iter().sum();
    Ok(reputations.iter().map(|r| r / total).collect())
}

/// Delay-aware selection: weight each node by reputation over advertised
/// delay, so underutilised high-reputation nodes attract traffic.
pub fn dbns_probabilities(
    reputations: &[f64],
    delays: &[f64],
) -> Result<Vec<f64>, PolicyError> {
    if reputations.is_empty() {
        return Err(PolicyError::EmptyNodeSet);
    }
    if reputations.len() != delays.len() {
        return Err(PolicyError::LengthMismatch);
    }
    if reputations.iter().any(|r| !(*r > 0.0)) {
        return Err(PolicyError::NonPositiveReputation);
    }
    let weights: Vec<f64> = reputations
        .iter()
        .zip(delays)
        .map(|(r, d)| r / d.max(DELAY_EPSILON))
        .collect();
    let total: f64 = weights.iter().sum();
    Ok(weights.into_iter().map(|w| w / total).collect())
}

/// What one user weighs up when scoring a node.
#[derive(Clone, Copy, Debug)]
pub struct PolicyInput<'a> {
    pub reputations: &'a [f64],
    pub indicators: &'a [QosIndicator],
    /// Delay-versus-fee weight `a` in the cost.
    pub tradeoff_weight: f64,
    /// Nodes costing more than this are not worth selecting.
    pub cost_threshold: f64,
}

/// Scalar cost a user assigns to a node: a blend of advertised delay and fee.
pub fn cost(delay: f64, fee: f64, tradeoff_weight: f64) -> f64 {
    tradeoff_weight * delay + (1.0 - tradeoff_weight) * fee
}

/// Outcome of a cost-aware selection attempt.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Selection {
    Node(usize),
    /// Every node exceeded the user's cost threshold; the transaction is
    /// withheld and retried later.
    NoEligibleNode,
}

/// Eligible nodes under the cost threshold together with their selection
/// probabilities (reputation over clamped cost, normalized). An empty
/// result means every node was too expensive.
pub fn dbns_plus_weights(
    input: &PolicyInput<'_>,
) -> Result<(Vec<usize>, Vec<f64>), PolicyError> {
    if input.reputations.is_empty() {
        return Err(PolicyError::EmptyNodeSet);
    }
    if input.reputations.len() != input.indicators.len() {
        return Err(PolicyError::LengthMismatch);
    }
    if input.reputations.iter().any(|r| !(*r > 0.0)) {
        return Err(PolicyError::NonPositiveReputation);
    }
    let mut eligible = Vec::new();
    let mut weights = Vec::new();
    for (j, (r, ind)) in input.reputations.iter().zip(input.indicators).enumerate() {
        let c = cost(ind.expected_delay, ind.fee, input.tradeoff_weight);
        if c <= input.cost_threshold {
            eligible.push(j);
            weights.push(r / c.max(DELAY_EPSILON));
        }
    }
    let total: f64 = weights.iter().sum();
    for w in &mut weights {
        *w /= total;
    }
    Ok((eligible, weights))
}

/// Cost-aware selection with deferral: sample among nodes whose cost sits
/// within the user's threshold, or report that none qualifies.
pub fn dbns_plus_select(
    input: &PolicyInput<'_>,
    rng: &mut impl RngCore,
) -> Result<Selection, PolicyError> {
    let (eligible, weights) = dbns_plus_weights(input)?;
    if eligible.is_empty() {
        return Ok(Selection::NoEligibleNode);
    }
    let pick = sample_index(&weights, rng)?;
    Ok(Selection::Node(eligible[pick]))
}

/// Sample an index from a probability vector using a single uniform draw
/// through the inverse CDF.
pub fn sample_node(probabilities: &[f64], rng: &mut impl RngCore) -> Result<usize, PolicyError> {
    sample_index(probabilities, rng)
}

fn sample_index(probabilities: &[f64], rng: &mut impl RngCore) -> Result<usize, PolicyError> {
    sample_node_at(probabilities, uniform(rng))
}

/// Deterministic half of [`sample_node`]: pick the first index whose
/// cumulative probability exceeds the uniform draw `u`.
pub fn sample_node_at(probabilities: &[f64], u: f64) -> Result<usize, PolicyError> {
    if probabilities.is_empty() {
        return Err(PolicyError::EmptyNodeSet);
    }
    if probabilities.iter().any(|p| !(*p >= 0.0)) {
        return Err(PolicyError::BadDistribution);
    }
    let total: f64 = probabilities.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(PolicyError::BadDistribution);
    }
    let mut cumulative = 0.0;
    for (i, p) in probabilities.iter().enumerate() {
        cumulative += p;
        if u < cumulative {
            return Ok(i);
        }
    }
    // Rounding left the total a hair under u: take the last nonzero entry.
    let last = probabilities
        .iter()
        .rposition(|p| *p > 0.0)
        .expect("total is 1, some entry is positive");
    Ok(last)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    fn ind(delay: f64, fee: f64) -> QosIndicator {
        QosIndicator {
            expected_delay: delay,
            fee,
            published_at: 0.0,
        }
    }

    #[test]
    fn urns_is_uniform() {
        assert_eq!(urns_probabilities(4).unwrap(), vec![0.25; 4]);
        assert_eq!(urns_probabilities(1).unwrap(), vec![1.0]);
        let p = urns_probabilities(50).unwrap();
        assert!((p[0] - 0.02).abs() < 1e-12);
        assert!(urns_probabilities(0).is_err());
    }

    #[test]
    fn rbns_follows_reputation_shares() {
        let p = rbns_probabilities(&[2.0, 1.0, 1.0]).unwrap();
        assert_eq!(p, vec![0.5, 0.25, 0.25]);
        let p = rbns_probabilities(&[1.0, 1.0]).unwrap();
        assert_eq!(p, vec![0.5, 0.5]);
        let p = rbns_probabilities(&[3.0, 1.0]).unwrap();
        assert_eq!(p, vec![0.75, 0.25]);
        assert!(rbns_probabilities(&[]).is_err());
        assert!(rbns_probabilities(&[1.0, 0.0]).is_err());
    }

    #[test]
    fn dbns_weights_reputation_by_inverse_delay() {
        let p = dbns_probabilities(&[2.0, 1.0], &[1.0, 2.0]).unwrap();
        assert!((p[0] - 0.8).abs() < 1e-12);
        assert!((p[1] - 0.2).abs() < 1e-12);

        // Equal reputation and equal delay: uniform.
        let p = dbns_probabilities(&[1.0, 1.0], &[3.0, 3.0]).unwrap();
        assert!((p[0] - 0.5).abs() < 1e-12);

        let p = dbns_probabilities(&[1.0, 1.0, 1.0], &[1.0, 2.0, 4.0]).unwrap();
        assert!((p[0] - 4.0 / 7.0).abs() < 1e-12);
        assert!((p[1] - 2.0 / 7.0).abs() < 1e-12);
        assert!((p[2] - 1.0 / 7.0).abs() < 1e-12);
    }

    #[test]
    fn dbns_clamps_zero_delay() {
        // An idle node gets weight rep/epsilon, not infinity.
        let p = dbns_probabilities(&[1.0, 1.0], &[0.0, 1.0]).unwrap();
        assert!(p[0].is_finite());
        assert!((p[0] - (1.0 / 0.01) / (1.0 / 0.01 + 1.0)).abs() < 1e-12);
        assert!(dbns_probabilities(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn cost_blends_delay_and_fee() {
        assert!((cost(10.0, 0.0, 0.6) - 6.0).abs() < 1e-12);
        assert!((cost(10.0, 5.0, 1.0) - 10.0).abs() < 1e-12);
        assert!((cost(10.0, 5.0, 0.0) - 5.0).abs() < 1e-12);
        assert!((cost(20.0, 4.0, 0.6) - 13.6).abs() < 1e-12);
    }

    #[test]
    fn dbns_plus_keeps_only_affordable_nodes() {
        let inds = [ind(10.0, 0.0), ind(30.0, 8.0)];
        let input = PolicyInput {
            reputations: &[1.0, 5.0],
            indicators: &inds,
            tradeoff_weight: 0.6,
            cost_threshold: 12.0,
        };
        // Costs are 6 and 21.2: only node 0 is eligible.
        let (eligible, weights) = dbns_plus_weights(&input).unwrap();
        assert_eq!(eligible, vec![0]);
        assert!((weights[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn dbns_plus_equal_costs_split_by_reputation() {
        let inds = [ind(2.0, 2.0), ind(2.0, 2.0)];
        let input = PolicyInput {
            reputations: &[2.0, 1.0],
            indicators: &inds,
            tradeoff_weight: 0.5,
            cost_threshold: 10.0,
        };
        let (eligible, weights) = dbns_plus_weights(&input).unwrap();
        assert_eq!(eligible, vec![0, 1]);
        assert!((weights[0] - 2.0 / 3.0).abs() < 1e-12);
        assert!((weights[1] - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn dbns_plus_defers_when_everything_is_too_expensive() {
        let inds = [ind(40.0, 20.0), ind(35.0, 18.0)];
        let input = PolicyInput {
            reputations: &[1.0, 1.0],
            indicators: &inds,
            tradeoff_weight: 0.6,
            cost_threshold: 12.0,
        };
        let mut r = rng::stream(1, rng::ROLE_USER, 0);
        assert_eq!(
            dbns_plus_select(&input, &mut r).unwrap(),
            Selection::NoEligibleNode
        );
    }

    #[test]
    fn dbns_plus_threshold_boundary_is_inclusive() {
        let inds = [ind(20.0, 0.0)];
        let input = PolicyInput {
            reputations: &[1.0],
            indicators: &inds,
            tradeoff_weight: 0.6,
            cost_threshold: 12.0,
        };
        // Cost is exactly 12.0: still eligible.
        let (eligible, _) = dbns_plus_weights(&input).unwrap();
        assert_eq!(eligible, vec![0]);
    }

    #[test]
    fn sample_node_at_walks_the_cdf() {
        assert_eq!(sample_node_at(&[1.0], 0.99).unwrap(), 0);
        assert_eq!(sample_node_at(&[0.5, 0.5], 0.25).unwrap(), 0);
        assert_eq!(sample_node_at(&[0.5, 0.5], 0.75).unwrap(), 1);
        assert_eq!(sample_node_at(&[0.2, 0.3, 0.5], 0.2).unwrap(), 1);
        // A draw at the very top lands on the last nonzero entry.
        assert_eq!(sample_node_at(&[0.5, 0.5, 0.0], 1.0 - 1e-16).unwrap(), 1);
        assert!(sample_node_at(&[], 0.5).is_err());
        assert!(sample_node_at(&[0.5, 0.4], 0.5).is_err());
        assert!(sample_node_at(&[1.5, -0.5], 0.5).is_err());
    }

    #[test]
    fn sample_node_frequencies_match_probabilities() {
        // Binomial check: p(node 0) = 0.8, 1e5 draws, 3-sigma band
        // 0.8 +/- 0.0038.
        let p = [0.8, 0.2];
        let mut r = rng::stream(2024, rng::ROLE_USER, 7);
        let n = 100_000;
        let hits = (0..n)
            .filter(|_| sample_node(&p, &mut r).unwrap() == 0)
            .count();
        let freq = hits as f64 / n as f64;
        assert!((0.796..=0.804).contains(&freq), "freq {freq}");
    }

    #[test]
    fn sample_node_chi_square_goodness_of_fit() {
        let p = [0.5, 0.3, 0.2];
        let mut r = rng::stream(99, rng::ROLE_USER, 11);
        let n = 100_000usize;
        let mut counts = [0u64; 3];
        for _ in 0..n {
            counts[sample_node(&p, &mut r).unwrap()] += 1;
        }
        let chi2: f64 = p
            .iter()
            .zip(&counts)
            .map(|(pi, c)| {
                let expect = pi * n as f64;
                (*c as f64 - expect).powi(2) / expect
            })
            .sum();
        // Critical value for 2 degrees of freedom at significance 0.001.
        assert!(chi2 < 13.8155, "chi2 {chi2}, counts {counts:?}");
    }
}
