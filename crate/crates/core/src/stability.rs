//! Foster-Lyapunov stability verification.
//!
//! Ergodicity of the book rests on geometric drift conditions: in continuous
//! time `LV <= -beta V + gamma` for the linear test function (total shares
//! plus one order), and for the embedded jump chain
//! `DV <= -beta V + gamma 1_C` for the exponential test function
//! `V = z^phi`, `phi` the total shares. The constants are not proven here:
//! `beta` comes from the explicit expressions (half the minimum cancel rate,
//! respectively `min_C (1 - z^-q) / (2 max_C)`), and `gamma` and the
//! sublevel threshold are fitted from exact evaluations of the drift on a
//! state sample. A check passes when the fitted threshold lies strictly
//! inside the sampled range, i.e. every sampled state beyond it has drift
//! below `-beta V`.
//!
//! With state-independent cancellation the drift argument instead yields an
//! explicit sufficient inequality on the rates, evaluated by
//! [`stability_condition`].

use serde::Serialize;
use thiserror::Error;

use crate::book::{BookState, CancelMode, ModelParams};
use crate::flow::{derive_replica_rng, step, FlowError};
use crate::generator::apply_generator;

#[derive(Debug, Error, PartialEq)]
pub enum StabilityError {
    #[error("drift checks require proportional cancellation; use the explicit stability condition for constant rates")]
    RequiresProportional,
    #[error("the explicit stability condition applies to constant cancellation only; proportional books are covered by the drift checks")]
    RequiresConstant,
    #[error("exponential test function needs z > 1, got {0}")]
    BadBase(f64),
    #[error("minimum cancel rate must be positive")]
    ZeroMinCancel,
    #[error("empty state sample")]
    EmptySample,
    #[error(transparent)]
    Flow(#[from] FlowError),
}

/// Linear Lyapunov function: total shares in the book plus one order size.
pub fn lyapunov_linear(state: &BookState, params: &ModelParams) -> f64 {
    (state.total_shares(params) + u64::from(params.unit)) as f64
}

/// Exponential Lyapunov function `z^phi(x)`, `phi` the total shares.
/// Overflows to infinity for gigantic books; drift ratios are computed from
/// share differences instead, which stay bounded.
pub fn lyapunov_exp(state: &BookState, params: &ModelParams, z: f64) -> Result<f64, StabilityError> {
    if !(z > 1.0) {
        return Err(StabilityError::BadBase(z));
    }
    Ok(z.powf(state.total_shares(params) as f64))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum DriftKind {
    /// Generator drift of the linear test function.
    Continuous,
    /// One-step drift of the exponential test function under the jump chain.
    Embedded,
}

/// Drift evaluation at one sampled state.
#[derive(Debug, Clone, Serialize)]
pub struct DriftRecord {
    pub state: String,
    /// Total shares `phi(x)`.
    pub phi: f64,
    /// Test function value `V(x)`.
    pub v: f64,
    /// `LV(x)` (continuous) or `DV(x)` (embedded).
    pub drift: f64,
    /// `drift / V`, the quantity compared against `-beta`.
    pub ratio: f64,
}

/// Outcome of a drift-condition check over a state sample.
#[derive(Debug, Clone, Serialize)]
pub struct DriftReport {
    pub kind: DriftKind,
    pub beta: f64,
    pub gamma: f64,
    /// Fitted sublevel threshold: largest `V` (continuous) or `phi`
    /// (embedded) among states violating `drift/V <= -beta`; zero when none
    /// violate.
    pub threshold: f64,
    /// Number of sampled states inside the fitted sublevel set.
    pub sublevel_size: usize,
    pub passed: bool,
    pub records: Vec<DriftRecord>,
}

impl DriftReport {
    fn fit(kind: DriftKind, beta: f64, records: Vec<DriftRecord>, gamma: f64) -> DriftReport {
        let coordinate = |r: &DriftRecord| match kind {
            DriftKind::Continuous => r.v,
            DriftKind::Embedded => r.phi,
        };
        let max_coord = records.iter().map(&coordinate).fold(0.0f64, f64::max);
        let threshold = records
            .iter()
            .filter(|r| r.ratio > -beta)
            .map(&coordinate)
            .fold(0.0f64, f64::max);
        let sublevel_size = records
            .iter()
            .filter(|r| coordinate(r) <= threshold)
            .count();
        let passed = threshold < max_coord && gamma.is_finite();
        DriftReport {
            kind,
            beta,
            gamma,
            threshold,
            sublevel_size,
            passed,
            records,
        }
    }
}

/// Check the continuous-time geometric drift condition
/// `LV <= -beta V + gamma`, `V` the linear test function and
/// `beta = min_cancel / 2`. `gamma` is fitted as the smallest non-negative
/// constant making the inequality hold on the whole sample.
pub fn drift_check_continuous(
    params: &ModelParams,
    sample: &[BookState],
) -> Result<DriftReport, StabilityError> {
    if params.cancel_mode != CancelMode::Proportional {
        return Err(StabilityError::RequiresProportional);
    }
    if params.min_cancel_rate() <= 0.0 {
        return Err(StabilityError::ZeroMinCancel);
    }
    if sample.is_empty() {
        return Err(StabilityError::EmptySample);
    }
    let beta = params.min_cancel_rate() / 2.0;
    let mut gamma = 0.0f64;
    let mut records = Vec::with_capacity(sample.len());
    for state in sample {
        let v = lyapunov_linear(state, params);
        let drift = apply_generator(|s| lyapunov_linear(s, params), state, params);
        gamma = gamma.max(drift + beta * v);
        records.push(DriftRecord {
            state: state.digest(),
            phi: state.total_shares(params) as f64,
            v,
            drift,
            ratio: drift / v,
        });
    }
    Ok(DriftReport::fit(DriftKind::Continuous, beta, records, gamma))
}

/// One-step drift ratio `DV(x) / V(x)` of the exponential test function
/// under the embedded chain, computed from share differences so it never
/// overflows: `sum_e p(e|x) (z^{dphi_e} - 1)`.
pub fn embedded_drift_ratio(
    state: &BookState,
    params: &ModelParams,
    z: f64,
) -> Result<f64, StabilityError> {
    if !(z > 1.0) {
        return Err(StabilityError::BadBase(z));
    }
    let transitions = crate::book::enumerate_transitions(state, params);
    let total: f64 = transitions.iter().map(|t| t.rate).sum();
    if total <= 0.0 {
        return Err(StabilityError::Flow(FlowError::ZeroTotalRate));
    }
    let phi = state.total_shares(params) as f64;
    let mut ratio = 0.0;
    for tr in &transitions {
        let dphi = tr.state.total_shares(params) as f64 - phi;
        ratio += tr.rate / total * (z.powf(dphi) - 1.0);
    }
    Ok(ratio)
}

/// Check the embedded-chain geometric drift condition
/// `DV <= -beta V + gamma 1_C` with `V = z^phi` and
/// `beta = min_cancel (1 - z^-q) / (2 max_cancel)`. The sublevel set `C` is
/// fitted as the states up to the largest `phi` violating
/// `DV/V <= -beta`; `gamma` is the largest drift seen inside it.
pub fn drift_check_embedded(
    params: &ModelParams,
    z: f64,
    sample: &[BookState],
) -> Result<DriftReport, StabilityError> {
    if params.cancel_mode != CancelMode::Proportional {
        return Err(StabilityError::RequiresProportional);
    }
    if !(z > 1.0) {
        return Err(StabilityError::BadBase(z));
    }
    if sample.is_empty() {
        return Err(StabilityError::EmptySample);
    }
    let q = f64::from(params.unit);
    let beta =
        params.min_cancel_rate() * (1.0 - z.powf(-q)) / (2.0 * params.max_cancel_rate());
    let mut records = Vec::with_capacity(sample.len());
    for state in sample {
        let ratio = embedded_drift_ratio(state, params, z)?;
        let phi = state.total_shares(params) as f64;
        let v = z.powf(phi);
        records.push(DriftRecord {
            state: state.digest(),
            phi,
            v,
            drift: ratio * v,
            ratio,
        });
    }
    // gamma = max drift inside the fitted sublevel set (clamped at zero, a
    // valid and tidier constant).
    let threshold = records
        .iter()
        .filter(|r| r.ratio > -beta)
        .map(|r| r.phi)
        .fold(0.0f64, f64::max);
    let gamma = records
        .iter()
        .filter(|r| r.phi <= threshold)
        .map(|r| r.drift)
        .fold(0.0f64, f64::max);
    Ok(DriftReport::fit(DriftKind::Embedded, beta, records, gamma))
}

/// Symmetric special case of the stability inequality (unit order size,
/// flat symmetric rates): `lambda_M + N lambda_C > N lambda_L (1 + N d_inf)`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SymmetricCondition {
    pub lhs: f64,
    pub rhs: f64,
}

/// Verdict of the explicit stability inequality for constant cancellation:
/// `lambda_M+ + lambda_M- + Lambda_C+ + Lambda_C- >
///  (Lambda_L+ + Lambda_L-) (1 + N d_inf / q)`.
#[derive(Debug, Clone, Serialize)]
pub struct StabilityVerdict {
    pub holds: bool,
    pub margin: f64,
    pub lhs: f64,
    pub rhs: f64,
    /// Present when the parameters are flat, symmetric and have unit order
    /// size, where the inequality collapses to the symmetric form.
    pub symmetric: Option<SymmetricCondition>,
}

pub fn stability_condition(params: &ModelParams) -> Result<StabilityVerdict, StabilityError> {
    if params.cancel_mode != CancelMode::Constant {
        return Err(StabilityError::RequiresConstant);
    }
    let sum = |v: &[f64]| v.iter().sum::<f64>();
    let limit_total = sum(&params.rate_limit_ask) + sum(&params.rate_limit_bid);
    let cancel_total = sum(&params.rate_cancel_ask) + sum(&params.rate_cancel_bid);
    let d_inf = params.boundary_max() as f64;
    let q = f64::from(params.unit);
    let n = params.levels as f64;
    let lhs = params.rate_market_buy + params.rate_market_sell + cancel_total;
    let rhs = limit_total * (1.0 + n * d_inf / q);
    let flat = |v: &[f64]| v.iter().all(|&r| r == v[0]);
    let symmetric = (params.unit == 1
        && params.rate_market_buy == params.rate_market_sell
        && flat(&params.rate_limit_ask)
        && params.rate_limit_ask == params.rate_limit_bid
        && flat(&params.rate_cancel_ask)
        && params.rate_cancel_ask == params.rate_cancel_bid)
        .then(|| SymmetricCondition {
            lhs: params.rate_market_buy + n * params.rate_cancel_ask[0],
            rhs: n * params.rate_limit_ask[0] * (1.0 + n * d_inf),
        });
    Ok(StabilityVerdict {
        holds: lhs > rhs,
        margin: lhs - rhs,
        lhs,
        rhs,
        symmetric,
    })
}

/// States visited by a simulation, one kept every `stride` jumps after
/// `burn_in` jumps are discarded. The usual source of the drift-check
/// sample.
pub fn simulated_sample(
    params: &ModelParams,
    count: usize,
    stride: u64,
    burn_in: u64,
    seed: u64,
) -> Result<Vec<BookState>, StabilityError> {
    params.validate().map_err(FlowError::Params)?;
    let mut rng = derive_replica_rng(seed, 0);
    let mut state = BookState::full(params, 0);
    for _ in 0..burn_in {
        step(&mut state, params, &mut rng)?;
    }
    let stride = stride.max(1);
    let mut sample = Vec::with_capacity(count);
    while sample.len() < count {
        for _ in 0..stride {
            step(&mut state, params, &mut rng)?;
        }
        sample.push(state.clone());
    }
    Ok(sample)
}

/// Hand-built large-volume states covering the tail the simulation rarely
/// visits: for each target total share count, a uniformly filled book, a
/// front-loaded one, a back-loaded one, and a wide-spread one.
pub fn adversarial_sample(params: &ModelParams, phi_targets: &[u64]) -> Vec<BookState> {
    let n = params.levels;
    let mut sample = Vec::new();
    for &phi in phi_targets {
        let total_counts = (phi / u64::from(params.unit)).max(2) as u32;
        let per_side = total_counts / 2;
        let uniform = (per_side / n as u32).max(1);
        let make = |ask: Vec<u32>, bid: Vec<u32>| BookState::new(ask, bid, 0).ok();
        let mut fill = vec![uniform; n];
        fill[0] = fill[0].max(1);
        sample.extend(make(fill.clone(), fill.clone()));
        let mut front = vec![0u32; n];
        front[0] = per_side.max(1);
        sample.extend(make(front.clone(), front.clone()));
        let mut back = vec![0u32; n];
        back[n - 1] = per_side.max(1);
        sample.extend(make(back.clone(), back.clone()));
        if n > 1 {
            // Widest in-frame spread: all volume at the last level.
            let mut wide_ask = vec![0u32; n];
            wide_ask[n - 1] = per_side.max(1);
            let mut wide_bid = vec![0u32; n];
            wide_bid[n - 1] = total_counts.saturating_sub(per_side).max(1);
            sample.extend(make(wide_ask, wide_bid));
        }
    }
    sample
}
