//! Exact stationary distribution of small truncated instances.
//!
//! For a book with few levels and a per-level volume cap the state space is
//! small enough to enumerate: all count vectors with the same first occupied
//! index on both sides. The generator is assembled from the transition
//! table, transitions that would push any level beyond the cap are dropped
//! (reflecting truncation), and the balance equations are solved directly
//! (dense LU) or by uniformized power iteration when the space is large.
//! The probability mass sitting on capped states is reported as a
//! truncation-quality diagnostic.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use thiserror::Error;

use crate::book::{enumerate_transitions, BookState, ModelParams, ParamsError, Side};

/// Hard ceiling on the enumerated space.
const MAX_STATES: usize = 1_000_000;
/// Spaces up to this size are solved by dense LU, larger ones iteratively.
const DENSE_LIMIT: usize = 1_500;
const POWER_TOL: f64 = 1e-13;
const POWER_MAX_ITERS: usize = 400_000;

#[derive(Debug, Error, PartialEq)]
pub enum OracleError {
    #[error(transparent)]
    Params(#[from] ParamsError),
    #[error("exact enumeration supports at most 3 levels per side, got {0}")]
    TooManyLevels(usize),
    #[error("truncated space has {0} states, exceeding the {MAX_STATES} limit")]
    SpaceTooLarge(usize),
    #[error("boundary volume exceeds the cap; refill transitions would all be dropped")]
    BoundaryAboveCap,
    #[error("stationary solve did not converge")]
    NoConvergence,
}

/// Stationary distribution of the truncated chain. States carry a zero
/// price anchor; the stationary law does not depend on it.
#[derive(Debug, Clone)]
pub struct StationaryDistribution {
    pub states: Vec<BookState>,
    pub probabilities: Vec<f64>,
    pub cap: u32,
    /// Probability of states with at least one level at the cap.
    pub boundary_mass: f64,
}

/// Summary row used when exporting the distribution.
#[derive(Debug, Clone, Serialize)]
pub struct StationarySummary {
    pub n_states: usize,
    pub cap: u32,
    pub boundary_mass: f64,
}

impl StationaryDistribution {
    /// Marginal law of the spread, indices `1..=N+1` mapped to `0..=N`.
    pub fn spread_marginal(&self, levels: usize) -> Vec<f64> {
        let mut marginal = vec![0.0; levels + 1];
        for (state, &p) in self.states.iter().zip(&self.probabilities) {
            marginal[state.spread_ticks() - 1] += p;
        }
        marginal
    }

    /// Expectation of an arbitrary state functional.
    pub fn expect<F: Fn(&BookState) -> f64>(&self, f: F) -> f64 {
        self.states
            .iter()
            .zip(&self.probabilities)
            .map(|(s, &p)| p * f(s))
            .sum()
    }

    pub fn summary(&self) -> StationarySummary {
        StationarySummary {
            n_states: self.states.len(),
            cap: self.cap,
            boundary_mass: self.boundary_mass,
        }
    }
}

/// All vectors of length `levels` with entries `0..=cap` and first nonzero
/// index exactly `spread` (1-based; `spread == levels + 1` means all zero).
fn side_vectors(levels: usize, cap: u32, spread: usize) -> Vec<Vec<u32>> {
    if spread == levels + 1 {
        return vec![vec![0; levels]];
    }
    let free = levels - spread;
    let mut out = Vec::new();
    let mut tail = vec![0u32; free];
    loop {
        for lead in 1..=cap {
            let mut v = vec![0u32; spread - 1];
            v.push(lead);
            v.extend_from_slice(&tail);
            out.push(v);
        }
        // Odometer over the free tail positions.
        let mut idx = 0;
        loop {
            if idx == free {
                return out;
            }
            if tail[idx] < cap {
                tail[idx] += 1;
                break;
            }
            tail[idx] = 0;
            idx += 1;
        }
    }
}

fn enumerate_states(levels: usize, cap: u32) -> Vec<BookState> {
    let mut states = Vec::new();
    for spread in 1..=levels + 1 {
        let asks = side_vectors(levels, cap, spread);
        let bids = asks.clone();
        for a in &asks {
            for b in &bids {
                states.push(BookState::new(a.clone(), b.clone(), 0).expect("valid by construction"));
            }
        }
    }
    states
}

fn state_key(state: &BookState) -> Vec<u32> {
    let mut key = state.counts(Side::Ask).to_vec();
    key.extend_from_slice(state.counts(Side::Bid));
    key
}

struct TruncatedChain {
    /// (from, to, rate), self-loops excluded.
    edges: Vec<(u32, u32, f64)>,
    out_rates: Vec<f64>,
    n: usize,
}

fn build_chain(states: &[BookState], params: &ModelParams, cap: u32) -> TruncatedChain {
    let index: HashMap<Vec<u32>, u32> = states
        .iter()
        .enumerate()
        .map(|(i, s)| (state_key(s), i as u32))
        .collect();
    let mut edges = Vec::new();
    let mut out_rates = vec![0.0; states.len()];
    for (from, state) in states.iter().enumerate() {
        for tr in enumerate_transitions(state, params) {
            let capped = tr
                .state
                .counts(Side::Ask)
                .iter()
                .chain(tr.state.counts(Side::Bid))
                .any(|&c| c > cap);
            if capped {
                continue; // reflected by truncation
            }
            let to = *index
                .get(&state_key(&tr.state))
                .expect("successor stays inside the truncated space");
            if to as usize == from {
                continue;
            }
            edges.push((from as u32, to, tr.rate));
            out_rates[from] += tr.rate;
        }
    }
    TruncatedChain {
        edges,
        out_rates,
        n: states.len(),
    }
}

/// Dense solve of `pi Q = 0`, `sum pi = 1`: one balance equation is replaced
/// by the normalization (the dropped one is implied, columns of `Q` sum to
/// zero).
fn solve_dense(chain: &TruncatedChain) -> Result<Vec<f64>, OracleError> {
    let n = chain.n;
    let mut a = DMatrix::<f64>::zeros(n, n);
    for &(from, to, rate) in &chain.edges {
        a[(to as usize, from as usize)] += rate;
    }
    for (i, &out) in chain.out_rates.iter().enumerate() {
        a[(i, i)] -= out;
    }
    for j in 0..n {
        a[(0, j)] = 1.0;
    }
    let mut b = DVector::<f64>::zeros(n);
    b[0] = 1.0;
    let solution = a.lu().solve(&b).ok_or(OracleError::NoConvergence)?;
    Ok(solution.iter().copied().collect())
}

/// Uniformized power iteration: `pi <- pi (I + Q/c)` until the L1 update is
/// negligible.
fn solve_power(chain: &TruncatedChain) -> Result<Vec<f64>, OracleError> {
    let n = chain.n;
    let c = chain.out_rates.iter().fold(0.0f64, |m, &r| m.max(r)) * 1.001 + 1e-9;
    let mut pi = vec![1.0 / n as f64; n];
    let mut flux = vec![0.0f64; n];
    for _ in 0..POWER_MAX_ITERS {
        flux.iter_mut().for_each(|x| *x = 0.0);
        for &(from, to, rate) in &chain.edges {
            let flow = pi[from as usize] * rate;
            flux[to as usize] += flow;
            flux[from as usize] -= flow;
        }
        let mut delta = 0.0;
        let mut total = 0.0;
        for i in 0..n {
            let step = flux[i] / c;
            delta += step.abs();
            pi[i] += step;
            total += pi[i];
        }
        // Guard against drift of the simplex constraint.
        pi.iter_mut().for_each(|p| *p /= total);
        if delta < POWER_TOL {
            return Ok(pi);
        }
    }
    Err(OracleError::NoConvergence)
}

/// Exact stationary distribution of the book truncated at `cap` counts per
/// level.
pub fn truncated_stationary(
    params: &ModelParams,
    cap: u32,
) -> Result<StationaryDistribution, OracleError> {
    params.validate()?;
    if params.levels > 3 {
        return Err(OracleError::TooManyLevels(params.levels));
    }
    let unit = u64::from(params.unit);
    if params.boundary_ask > u64::from(cap) * unit || params.boundary_bid > u64::from(cap) * unit {
        return Err(OracleError::BoundaryAboveCap);
    }
    // Valid states per side and spread: cap * (cap+1)^(levels-spread), plus
    // the all-empty vector; squared and summed over spreads.
    let mut predicted = 1usize;
    for spread in 1..=params.levels {
        let per_side = cap as usize * (cap as usize + 1).pow((params.levels - spread) as u32);
        predicted = predicted.saturating_add(per_side.saturating_mul(per_side));
    }
    if predicted > MAX_STATES {
        return Err(OracleError::SpaceTooLarge(predicted));
    }

    let states = enumerate_states(params.levels, cap);
    debug_assert_eq!(states.len(), predicted);
    let chain = build_chain(&states, params, cap);
    let mut probabilities = if states.len() <= DENSE_LIMIT {
        solve_dense(&chain)?
    } else {
        solve_power(&chain)?
    };

    // Tidy tiny negatives from the linear solve and renormalize.
    let mut total = 0.0;
    for p in probabilities.iter_mut() {
        if *p < 0.0 {
            if *p < -1e-9 {
                return Err(OracleError::NoConvergence);
            }
            *p = 0.0;
        }
        total += *p;
    }
    if !(total.is_finite() && total > 0.0) {
        return Err(OracleError::NoConvergence);
    }
    probabilities.iter_mut().for_each(|p| *p /= total);

    let boundary_mass = states
        .iter()
        .zip(&probabilities)
        .filter(|(s, _)| {
            s.counts(Side::Ask)
                .iter()
                .chain(s.counts(Side::Bid))
                .any(|&c| c == cap)
        })
        .map(|(_, &p)| p)
        .sum();

    Ok(StationaryDistribution {
        states,
        probabilities,
        cap,
        boundary_mass,
    })
}

/// Total variation distance between two distributions on the same support,
/// `0.5 * sum |p - q|`.
pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p
        .iter()
        .zip(q)
        .map(|(a, b)| (a - b).abs())
        .sum::<f64>()
        + 0.5
            * if p.len() > q.len() {
                p[q.len()..].iter().sum::<f64>()
            } else {
                q[p.len()..].iter().sum::<f64>()
            }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::book::CancelMode;

    fn n2_params() -> ModelParams {
        ModelParams::flat(2, 1, 1.0, 1.0, 1.0, 1.0, 1, CancelMode::Proportional)
    }

    #[test]
    fn enumeration_matches_prediction() {
        // N=2, cap 5: spread-1 sides 5*6=30, spread-2 sides 5, empty 1;
        // 30^2 + 5^2 + 1 = 926 states.
        let states = enumerate_states(2, 5);
        assert_eq!(states.len(), 926);
        let mut keys: Vec<Vec<u32>> = states.iter().map(state_key).collect();
        keys.sort();
        keys.dedup();
        assert_eq!(keys.len(), 926, "states must be distinct");
    }

    #[test]
    fn solution_is_a_probability_vector() {
        let dist = truncated_stationary(&n2_params(), 5).unwrap();
        assert!(dist.probabilities.iter().all(|&p| p >= 0.0));
        let total: f64 = dist.probabilities.iter().sum();
        assert!((total - 1.0).abs() < 1e-10);
        let marginal = dist.spread_marginal(2);
        assert!((marginal.iter().sum::<f64>() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn dense_and_power_solvers_agree() {
        let params = n2_params();
        let states = enumerate_states(2, 3);
        let chain = build_chain(&states, &params, 3);
        let dense = solve_dense(&chain).unwrap();
        let power = solve_power(&chain).unwrap();
        let tv = total_variation(&dense, &power);
        assert!(tv < 1e-10, "solver disagreement {tv}");
    }

    #[test]
    fn oracle_matches_hand_built_single_level_chain() {
        // Independent route: write out the N=1 transition rules longhand,
        // solve the balance equations with a small elimination, and compare
        // with the production pipeline (enumeration + generator assembly +
        // LU). States: (0,0) and (i,j), 1 <= i,j <= cap.
        let params = ModelParams::flat(1, 1, 1.0, 0.0, 1.0, 1.0, 1, CancelMode::Proportional);
        let cap = 6u32;
        let index = |i: u32, j: u32| -> usize {
            if i == 0 {
                0
            } else {
                (1 + (i - 1) * cap + (j - 1)) as usize
            }
        };
        let n = (cap * cap + 1) as usize;
        let mut q = vec![vec![0.0f64; n]; n];
        let mut add = |from: usize, to: usize, rate: f64| {
            q[from][to] += rate;
            q[from][from] -= rate;
        };
        // Empty book revives through either limit order: the frame slides
        // and the far side refills at the boundary volume (one share).
        add(index(0, 0), index(1, 1), 2.0);
        for i in 1..=cap {
            for j in 1..=cap {
                let from = index(i, j);
                if i < cap {
                    add(from, index(i + 1, j), 1.0); // sell limit
                }
                if j < cap {
                    add(from, index(i, j + 1), 1.0); // buy limit
                }
                // Cancelling the last order on a side empties the frame on
                // both sides (the shift drops the survivor).
                let (ask_to, ask_rate) = if i == 1 {
                    (index(0, 0), 1.0)
                } else {
                    (index(i - 1, j), i as f64)
                };
                add(from, ask_to, ask_rate);
                let (bid_to, bid_rate) = if j == 1 {
                    (index(0, 0), 1.0)
                } else {
                    (index(i, j - 1), j as f64)
                };
                add(from, bid_to, bid_rate);
            }
        }
        // Solve pi Q = 0 by Gaussian elimination on Q^T with the first
        // equation replaced by normalization.
        let mut a = vec![vec![0.0f64; n + 1]; n];
        for col in 0..n {
            a[0][col] = 1.0;
        }
        a[0][n] = 1.0;
        for row in 1..n {
            for col in 0..n {
                a[row][col] = q[col][row];
            }
        }
        for col in 0..n {
            let pivot = (col..n)
                .max_by(|&x, &y| a[x][col].abs().partial_cmp(&a[y][col].abs()).unwrap())
                .unwrap();
            a.swap(col, pivot);
            let p = a[col][col];
            assert!(p.abs() > 1e-12, "singular hand system");
            for row in 0..n {
                if row != col {
                    let factor = a[row][col] / p;
                    for k in col..=n {
                        let delta = factor * a[col][k];
                        a[row][k] -= delta;
                    }
                }
            }
        }
        let mut hand = vec![0.0f64; n];
        for row in 0..n {
            hand[row] = a[row][n] / a[row][row];
        }

        let dist = truncated_stationary(&params, cap).unwrap();
        assert_eq!(dist.states.len(), n);
        let mut produced = vec![0.0f64; n];
        for (state, &p) in dist.states.iter().zip(&dist.probabilities) {
            let i = state.counts(Side::Ask)[0];
            let j = state.counts(Side::Bid)[0];
            produced[index(i, j)] = p;
        }
        let tv = total_variation(&hand, &produced);
        assert!(tv < 1e-12, "hand-built chain disagrees, tv = {tv}");
    }

    #[test]
    fn cancelling_the_last_order_couples_the_sides() {
        // The single-level marginal is close to, but measurably distinct
        // from, the Poisson law of an isolated queue: emptying one side
        // drops the other side's orders out of the frame.
        let params = ModelParams::flat(1, 1, 1.0, 0.0, 1.0, 1.0, 1, CancelMode::Proportional);
        let dist = truncated_stationary(&params, 20).unwrap();
        let mut ask_marginal = vec![0.0f64; 21];
        for (state, &p) in dist.states.iter().zip(&dist.probabilities) {
            ask_marginal[state.counts(Side::Ask)[0] as usize] += p;
        }
        let mut poisson = vec![0.0f64; 21];
        let mut factorial = 1.0;
        for (k, slot) in poisson.iter_mut().enumerate() {
            if k > 0 {
                factorial *= k as f64;
            }
            *slot = (-1.0f64).exp() / factorial;
        }
        let tv = total_variation(&ask_marginal, &poisson);
        assert!(tv < 0.25, "marginal unexpectedly far from Poisson: {tv}");
        assert!(tv > 1e-3, "frame coupling should be visible: {tv}");
    }

    #[test]
    fn boundary_mass_shrinks_as_the_cap_grows() {
        let params = n2_params();
        let mut previous = f64::INFINITY;
        for cap in [4, 6, 8] {
            let dist = truncated_stationary(&params, cap).unwrap();
            assert!(
                dist.boundary_mass < previous,
                "boundary mass not decreasing at cap {cap}"
            );
            previous = dist.boundary_mass;
        }
        assert!(previous < 1e-3);
    }

    #[test]
    fn oracle_rejects_oversized_problems() {
        let params = ModelParams::flat(4, 1, 1.0, 1.0, 1.0, 1.0, 1, CancelMode::Proportional);
        assert_eq!(
            truncated_stationary(&params, 3).unwrap_err(),
            OracleError::TooManyLevels(4)
        );
        let params3 = ModelParams::flat(3, 1, 1.0, 1.0, 1.0, 1.0, 1, CancelMode::Proportional);
        assert!(matches!(
            truncated_stationary(&params3, 100).unwrap_err(),
            OracleError::SpaceTooLarge(_)
        ));
        assert_eq!(
            truncated_stationary(&n2_params(), 0).unwrap_err(),
            OracleError::BoundaryAboveCap
        );
    }

    #[test]
    fn total_variation_handles_unequal_support() {
        assert_eq!(total_variation(&[1.0], &[1.0]), 0.0);
        assert_eq!(total_variation(&[0.5, 0.5], &[0.5]), 0.25);
        assert!((total_variation(&[1.0, 0.0], &[0.0, 1.0]) - 1.0).abs() < 1e-15);
    }
}
