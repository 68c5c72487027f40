//! Numeric application of the infinitesimal generator.
//!
//! For a function `f` on book states the generator value at `x` is the
//! rate-weighted sum of `f(x') - f(x)` over the active transitions; the
//! transition table makes this exact, no sampling involved. The same table
//! doubles as the oracle for the closed-form conditional drifts of the
//! mid-price and the spread.

use serde::Serialize;

use crate::book::{
    enumerate_transitions, inverse_depth, BookState, CancelMode, ModelParams, Side,
};

/// Apply the generator of the chain to `f` at `state`:
/// `sum_e rate(e) * (f(x_e) - f(x))`. Constants are in the kernel by
/// construction, and the operator is linear in `f`.
pub fn apply_generator<F>(f: F, state: &BookState, params: &ModelParams) -> f64
where
    F: Fn(&BookState) -> f64,
{
    let base = f(state);
    enumerate_transitions(state, params)
        .iter()
        .map(|tr| tr.rate * (f(&tr.state) - base))
        .sum()
}

/// Instantaneous conditional drifts of mid-price and spread, in price units
/// per unit time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Drifts {
    pub mid: f64,
    pub spread: f64,
}

/// Closed-form conditional drifts given the current depth profile.
///
/// Only three event classes move a quote: a market order (quote steps to the
/// inverse depth at one order size), a limit order inside the spread (quote
/// steps to its level), and a cancellation emptying the best level (same
/// step as a market order). Market terms carry the nonempty-side indicator
/// that gates their intensity. Must agree with [`enumerated_drifts`] to
/// floating-point accuracy; the enumeration is the reference.
pub fn conditional_drifts(state: &BookState, params: &ModelParams) -> Drifts {
    let spread = state.spread_ticks();
    let unit = u64::from(params.unit);
    let levels = state.levels();

    // Quote move (ticks) caused by removing one order from the front.
    let front_move = |side: Side| (inverse_depth(state, params, side, unit) - spread) as f64;

    let mut mid_half_per_time = 0.0;
    let mut spread_per_time = 0.0;
    let mut add = |rate: f64, quote_move: f64, side: Side| {
        let mid_sign = match side {
            Side::Ask => 1.0,
            Side::Bid => -1.0,
        };
        mid_half_per_time += rate * mid_sign * quote_move;
        spread_per_time += rate * quote_move;
    };

    if state.side_nonempty(Side::Ask) && params.rate_market_buy > 0.0 {
        add(params.rate_market_buy, front_move(Side::Ask), Side::Ask);
    }
    if state.side_nonempty(Side::Bid) && params.rate_market_sell > 0.0 {
        add(params.rate_market_sell, front_move(Side::Bid), Side::Bid);
    }
    for level in 1..spread.min(levels + 1) {
        let pull = -((spread - level) as f64);
        add(params.rate_limit_ask[level - 1], pull, Side::Ask);
        add(params.rate_limit_bid[level - 1], pull, Side::Bid);
    }
    if spread <= levels {
        // Cancellation at the best level; its rate depends on the mode.
        let best_rate = |side: Side, per_level: &[f64]| {
            let count = state.count_at(side, spread);
            match params.cancel_mode {
                CancelMode::Proportional => per_level[spread - 1] * f64::from(count),
                CancelMode::Constant => per_level[spread - 1],
            }
        };
        add(
            best_rate(Side::Ask, &params.rate_cancel_ask),
            front_move(Side::Ask),
            Side::Ask,
        );
        add(
            best_rate(Side::Bid, &params.rate_cancel_bid),
            front_move(Side::Bid),
            Side::Bid,
        );
    }

    Drifts {
        mid: 0.5 * params.tick * mid_half_per_time,
        spread: params.tick * spread_per_time,
    }
}

/// Reference drifts summed event-by-event over the transition table.
pub fn enumerated_drifts(state: &BookState, params: &ModelParams) -> Drifts {
    let mut mid_half = 0.0;
    let mut spread = 0.0;
    for tr in enumerate_transitions(state, params) {
        mid_half += tr.rate * f64::from(tr.impact.mid_half_ticks);
        spread += tr.rate * f64::from(tr.impact.spread_ticks);
    }
    Drifts {
        mid: 0.5 * params.tick * mid_half,
        spread: params.tick * spread,
    }
}

/// Relative agreement scale for drift comparisons: the total absolute
/// rate-weighted impact, floored to keep the ratio meaningful near zero.
pub fn drift_scale(state: &BookState, params: &ModelParams) -> f64 {
    let mut scale = 0.0;
    for tr in enumerate_transitions(state, params) {
        scale += tr.rate
            * (0.5 * f64::from(tr.impact.mid_half_ticks.abs())
                + f64::from(tr.impact.spread_ticks.abs()));
    }
    (params.tick * scale).max(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::book::{BookState, CancelMode, EventKind, ModelParams};

    fn fig2_state() -> BookState {
        BookState::new(
            vec![0, 0, 0, 0, 1, 3, 5, 4, 2],
            vec![0, 0, 0, 0, 1, 0, 4, 5, 3],
            100,
        )
        .unwrap()
    }

    fn fig2_params() -> ModelParams {
        ModelParams::flat(9, 1, 1.0, 1.0, 1.0, 1.0, 4, CancelMode::Proportional)
    }

    #[test]
    fn constants_are_in_the_kernel() {
        let value = apply_generator(|_| 1.0, &fig2_state(), &fig2_params());
        assert_eq!(value, 0.0);
    }

    #[test]
    fn generator_is_linear() {
        let state = fig2_state();
        let params = fig2_params();
        let f = |s: &BookState| s.total_shares(&params) as f64;
        let g = |s: &BookState| s.spread_ticks() as f64;
        let alpha = 2.5;
        let lhs = apply_generator(|s| alpha * f(s) + g(s), &state, &params);
        let rhs = alpha * apply_generator(f, &state, &params)
            + apply_generator(g, &state, &params);
        assert!((lhs - rhs).abs() < 1e-12 * lhs.abs().max(1.0));
    }

    #[test]
    fn generator_of_total_volume_matches_hand_enumeration() {
        // Hand count on the worked example, all rates one, unit size one.
        // Volume changes: market orders and occupied-level cancels remove
        // one share before shifts; shifts drop or refill levels.
        let state = fig2_state();
        let params = fig2_params();
        let f = |s: &BookState| s.total_shares(&params) as f64;
        let mut expected = 0.0;
        for tr in crate::book::enumerate_transitions(&state, &params) {
            expected += tr.rate * (f(&tr.state) - f(&state));
        }
        let got = apply_generator(f, &state, &params);
        assert_eq!(got, expected);
        // Independent spot checks of individual volume changes.
        let after_sell =
            crate::book::apply_event(&state, &params, EventKind::MarketSell).unwrap();
        // Consumes one bid share, and the renumbering drops ask levels 8
        // and 9 (4 + 2 shares) off the far edge.
        assert_eq!(f(&after_sell), f(&state) - 1.0 - 6.0);
        let after_limit =
            crate::book::apply_event(&state, &params, EventKind::LimitBid(1)).unwrap();
        // Adds one bid share; the ask frame slides four levels and picks up
        // four boundary volumes of four shares each.
        assert_eq!(f(&after_limit), f(&state) + 1.0 + 16.0);
    }

    #[test]
    fn closed_form_drift_equals_enumeration_on_worked_example() {
        let state = fig2_state();
        let params = fig2_params();
        let closed = conditional_drifts(&state, &params);
        let oracle = enumerated_drifts(&state, &params);
        let scale = drift_scale(&state, &params);
        assert!((closed.mid - oracle.mid).abs() <= 1e-12 * scale);
        assert!((closed.spread - oracle.spread).abs() <= 1e-12 * scale);
    }

    #[test]
    fn symmetric_state_has_zero_mid_drift() {
        let params = fig2_params();
        let state = BookState::new(
            vec![0, 2, 1, 0, 3, 0, 0, 1, 2],
            vec![0, 2, 1, 0, 3, 0, 0, 1, 2],
            0,
        )
        .unwrap();
        let drifts = conditional_drifts(&state, &params);
        assert!(drifts.mid.abs() < 1e-12);
    }

    #[test]
    fn max_spread_without_limit_flow_has_zero_spread_drift() {
        // Both quotes sit on the boundary; nothing can widen the spread
        // further and with no limit flow nothing narrows it.
        let mut params = fig2_params();
        params.rate_limit_ask = vec![0.0; 9];
        params.rate_limit_bid = vec![0.0; 9];
        params.cancel_mode = CancelMode::Constant;
        let state = BookState::new(vec![0; 9], vec![0; 9], 0).unwrap();
        let drifts = conditional_drifts(&state, &params);
        assert_eq!(drifts.spread, 0.0);
        assert_eq!(drifts.mid, 0.0);
        let oracle = enumerated_drifts(&state, &params);
        assert_eq!(oracle.spread, 0.0);
    }
}
