use thiserror::Error;

use super::state::inverse_depth;
use super::{BookState, CancelMode, EventKind, Impact, ModelParams, Side};

#[derive(Debug, Error, PartialEq)]
pub enum ApplyEventError {
    /// Market orders are gated by the in-frame indicator: they never consume
    /// boundary volume, so they cannot fire against an empty side.
    #[error("market order against empty in-frame {0:?} side")]
    MarketOnEmptySide(Side),
    /// In proportional mode a cancellation at an empty level has rate zero,
    /// so asking to apply one is a caller bug. In constant mode it is a
    /// legitimate no-op event and does not reach this error.
    #[error("cancellation at empty {side:?} level {level} has zero rate")]
    CancelAtEmptyLevel { side: Side, level: usize },
    #[error("level {level} outside frame 1..={levels}")]
    LevelOutOfRange { level: usize, levels: usize },
}

/// One row of the jump-chain transition table.
#[derive(Debug, Clone)]
pub struct Transition {
    pub event: EventKind,
    pub rate: f64,
    pub state: BookState,
    pub impact: Impact,
}

fn check_level(level: usize, levels: usize) -> Result<(), ApplyEventError> {
    if level == 0 || level > levels {
        Err(ApplyEventError::LevelOutOfRange { level, levels })
    } else {
        Ok(())
    }
}

/// Remove one order's worth of shares from the front of `side`, sweeping
/// levels from the best quote outward. With every queue a multiple of the
/// unit size this consumes exactly one count, but the sweep implements the
/// general partial-fill pattern.
fn consume_from_front(state: &mut BookState, side: Side) {
    let counts = state.counts_mut(side);
    let mut remaining = 1u32;
    for c in counts.iter_mut() {
        let take = remaining.min(*c);
        *c -= take;
        remaining -= take;
        if remaining == 0 {
            break;
        }
    }
    debug_assert_eq!(remaining, 0, "gated market order found an empty side");
}

/// Renumber `side` after the opposite best quote moved by `quote_move`
/// ticks. Moving away (positive) slides the vector toward higher indices:
/// the entering near levels sat inside the old spread and are empty, the
/// far levels drop out of the frame. Moving closer (negative) slides toward
/// lower indices: the entering far levels re-enter the frame holding the
/// boundary volume.
fn shift_side(state: &mut BookState, params: &ModelParams, side: Side, quote_move: isize) {
    let n = state.levels();
    let boundary = params.boundary_count(side);
    let counts = state.counts_mut(side);
    if quote_move > 0 {
        let k = (quote_move as usize).min(n);
        counts.copy_within(0..n - k, k);
        counts[..k].fill(0);
    } else if quote_move < 0 {
        let m = ((-quote_move) as usize).min(n);
        counts.copy_within(m..n, 0);
        counts[n - m..].fill(boundary);
    }
}

/// Apply `event` to `state` in place.
///
/// Order of operations: update the event's own side, measure how far that
/// side's best quote moved (through the boundary extension, so a side that
/// empties reads `N + 1`), renumber the opposite side by that move, and
/// advance the absolute anchor when the ask quote moved. The opposite side's
/// quote never moves in absolute price, which is what keeps the first
/// occupied indices of the two sides equal.
pub fn apply_event_in_place(
    state: &mut BookState,
    params: &ModelParams,
    event: EventKind,
) -> Result<(), ApplyEventError> {
    let side = event.side();
    let before = state.first_occupied(side);
    match event {
        EventKind::MarketBuy | EventKind::MarketSell => {
            if !state.side_nonempty(side) {
                return Err(ApplyEventError::MarketOnEmptySide(side));
            }
            consume_from_front(state, side);
        }
        EventKind::LimitAsk(i) | EventKind::LimitBid(i) => {
            check_level(i, state.levels())?;
            let counts = state.counts_mut(side);
            counts[i - 1] += 1;
        }
        EventKind::CancelAsk(i) | EventKind::CancelBid(i) => {
            check_level(i, state.levels())?;
            if state.count_at(side, i) == 0 {
                return match params.cancel_mode {
                    // No-op event: the state is unchanged but the event is
                    // still a legitimate draw of the jump chain.
                    CancelMode::Constant => Ok(()),
                    CancelMode::Proportional => {
                        Err(ApplyEventError::CancelAtEmptyLevel { side, level: i })
                    }
                };
            }
            let counts = state.counts_mut(side);
            counts[i - 1] -= 1;
        }
    }
    let after = state.first_occupied(side);
    let quote_move = after as isize - before as isize;
    shift_side(state, params, side.opposite(), quote_move);
    if side == Side::Ask {
        state.shift_ask_price(quote_move as i64);
    }
    debug_assert_eq!(
        state.first_occupied(Side::Ask),
        state.first_occupied(Side::Bid),
        "spread identity broken by {event:?}"
    );
    Ok(())
}

/// Pure version of [`apply_event_in_place`].
pub fn apply_event(
    state: &BookState,
    params: &ModelParams,
    event: EventKind,
) -> Result<BookState, ApplyEventError> {
    let mut next = state.clone();
    apply_event_in_place(&mut next, params, event)?;
    Ok(next)
}

/// Mid-price and spread change of `event`, from the closed form on the
/// pre-event depth profile: a market order (or a cancellation emptying the
/// best level) moves the quote to the generalized inverse depth at one order
/// size, and a limit order inside the spread pulls it to its own level.
///
/// Independent of [`apply_event`]; the two must agree, which is enforced by
/// tests rather than by sharing code.
pub fn price_impact(
    state: &BookState,
    params: &ModelParams,
    event: EventKind,
) -> Result<Impact, ApplyEventError> {
    let side = event.side();
    let spread = state.spread_ticks();
    let unit = u64::from(params.unit);
    // Quote move of `side` in ticks, positive = away from the opposite side.
    let quote_move: i32 = match event {
        EventKind::MarketBuy | EventKind::MarketSell => {
            if !state.side_nonempty(side) {
                return Err(ApplyEventError::MarketOnEmptySide(side));
            }
            (inverse_depth(state, params, side, unit) - spread) as i32
        }
        EventKind::LimitAsk(i) | EventKind::LimitBid(i) => {
            check_level(i, state.levels())?;
            -(spread.saturating_sub(i) as i32)
        }
        EventKind::CancelAsk(i) | EventKind::CancelBid(i) => {
            check_level(i, state.levels())?;
            if state.count_at(side, i) == 0 {
                return match params.cancel_mode {
                    CancelMode::Constant => Ok(Impact::default()),
                    CancelMode::Proportional => {
                        Err(ApplyEventError::CancelAtEmptyLevel { side, level: i })
                    }
                };
            }
            if i == spread {
                (inverse_depth(state, params, side, unit) - spread) as i32
            } else {
                0
            }
        }
    };
    let impact = match side {
        Side::Ask => Impact {
            mid_half_ticks: quote_move,
            spread_ticks: quote_move,
        },
        Side::Bid => Impact {
            mid_half_ticks: -quote_move,
            spread_ticks: quote_move,
        },
    };
    Ok(impact)
}

/// Intensity of every active event in stable code order. Zero-rate entries
/// are skipped; in constant mode cancellations at empty levels keep their
/// (positive) rate and later apply as no-ops.
pub fn event_rates(state: &BookState, params: &ModelParams, out: &mut Vec<(EventKind, f64)>) {
    out.clear();
    if state.side_nonempty(Side::Ask) && params.rate_market_buy > 0.0 {
        out.push((EventKind::MarketBuy, params.rate_market_buy));
    }
    if state.side_nonempty(Side::Bid) && params.rate_market_sell > 0.0 {
        out.push((EventKind::MarketSell, params.rate_market_sell));
    }
    for (idx, &rate) in params.rate_limit_ask.iter().enumerate() {
        if rate > 0.0 {
            out.push((EventKind::LimitAsk(idx + 1), rate));
        }
    }
    for (idx, &rate) in params.rate_limit_bid.iter().enumerate() {
        if rate > 0.0 {
            out.push((EventKind::LimitBid(idx + 1), rate));
        }
    }
    let cancel_rate = |rate: f64, count: u32| match params.cancel_mode {
        CancelMode::Proportional => rate * f64::from(count),
        CancelMode::Constant => rate,
    };
    for (idx, &rate) in params.rate_cancel_ask.iter().enumerate() {
        let r = cancel_rate(rate, state.count_at(Side::Ask, idx + 1));
        if r > 0.0 {
            out.push((EventKind::CancelAsk(idx + 1), r));
        }
    }
    for (idx, &rate) in params.rate_cancel_bid.iter().enumerate() {
        let r = cancel_rate(rate, state.count_at(Side::Bid, idx + 1));
        if r > 0.0 {
            out.push((EventKind::CancelBid(idx + 1), r));
        }
    }
}

/// Full transition table from `state`: one entry per active event, with its
/// rate, successor state and price impact. At most `2(2N+1)` entries.
pub fn enumerate_transitions(state: &BookState, params: &ModelParams) -> Vec<Transition> {
    let mut rates = Vec::new();
    event_rates(state, params, &mut rates);
    rates
        .into_iter()
        .map(|(event, rate)| Transition {
            event,
            rate,
            state: apply_event(state, params, event).expect("active event must apply"),
            impact: price_impact(state, params, event).expect("active event has an impact"),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

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
    fn market_sell_renumbers_ask_side() {
        let next = apply_event(&fig2_state(), &fig2_params(), EventKind::MarketSell).unwrap();
        assert_eq!(next.counts(Side::Ask), &[0, 0, 0, 0, 0, 0, 1, 3, 5]);
        assert_eq!(next.counts(Side::Bid), &[0, 0, 0, 0, 0, 0, 4, 5, 3]);
        assert_eq!(next.spread_ticks(), 7);
        // The ask quote did not move in absolute price.
        assert_eq!(next.ask_price_ticks(), 100);
    }

    #[test]
    fn limit_bid_inside_spread_pulls_frame_and_refills() {
        let next = apply_event(&fig2_state(), &fig2_params(), EventKind::LimitBid(1)).unwrap();
        assert_eq!(next.counts(Side::Ask), &[1, 3, 5, 4, 2, 4, 4, 4, 4]);
        assert_eq!(next.counts(Side::Bid), &[1, 0, 0, 0, 1, 0, 4, 5, 3]);
        assert_eq!(next.spread_ticks(), 1);
        assert_eq!(next.ask_price_ticks(), 100);
    }

    #[test]
    fn cancel_emptying_best_ask_widens_spread() {
        let next = apply_event(&fig2_state(), &fig2_params(), EventKind::CancelAsk(5)).unwrap();
        assert_eq!(next.counts(Side::Ask), &[0, 0, 0, 0, 0, 3, 5, 4, 2]);
        assert_eq!(next.counts(Side::Bid), &[0, 0, 0, 0, 0, 1, 0, 4, 5]);
        assert_eq!(next.spread_ticks(), 6);
        assert_eq!(next.ask_price_ticks(), 101);
    }

    #[test]
    fn worked_example_impacts() {
        let state = fig2_state();
        let params = fig2_params();
        // Spread 5 -> 7 with the ask unchanged: mid falls one tick.
        assert_eq!(
            price_impact(&state, &params, EventKind::MarketSell).unwrap(),
            Impact {
                mid_half_ticks: -2,
                spread_ticks: 2
            }
        );
        // Spread 5 -> 1 with the ask unchanged: mid rises two ticks.
        assert_eq!(
            price_impact(&state, &params, EventKind::LimitBid(1)).unwrap(),
            Impact {
                mid_half_ticks: 4,
                spread_ticks: -4
            }
        );
        assert_eq!(
            price_impact(&state, &params, EventKind::CancelAsk(5)).unwrap(),
            Impact {
                mid_half_ticks: 1,
                spread_ticks: 1
            }
        );
    }

    #[test]
    fn cancel_off_best_has_no_impact() {
        let state = fig2_state();
        let params = fig2_params();
        // Level 8 is occupied but not the best bid; removing one order
        // moves no quote.
        assert_eq!(
            price_impact(&state, &params, EventKind::CancelBid(8)).unwrap(),
            Impact::default()
        );
        // Best bid holds a single order: cancelling it moves the quote.
        assert_eq!(
            price_impact(&state, &params, EventKind::CancelBid(5)).unwrap(),
            Impact {
                mid_half_ticks: -2,
                spread_ticks: 2
            }
        );
    }

    #[test]
    fn impact_equals_apply_difference_on_all_transitions() {
        let state = fig2_state();
        let params = fig2_params();
        for tr in enumerate_transitions(&state, &params) {
            let expected = Impact {
                mid_half_ticks: (tr.state.mid_half_ticks() - state.mid_half_ticks()) as i32,
                spread_ticks: tr.state.spread_ticks() as i32 - state.spread_ticks() as i32,
            };
            assert_eq!(tr.impact, expected, "event {:?}", tr.event);
        }
    }

    #[test]
    fn enumeration_counts_active_events() {
        // Two market orders, 2N = 18 limit orders, and one proportional
        // cancellation per occupied level: five ask levels, four bid levels.
        let transitions = enumerate_transitions(&fig2_state(), &fig2_params());
        assert_eq!(transitions.len(), 2 + 18 + 9);
        let cancels = transitions
            .iter()
            .filter(|t| matches!(t.event, EventKind::CancelAsk(_) | EventKind::CancelBid(_)))
            .count();
        assert_eq!(cancels, 9);
    }

    #[test]
    fn proportional_cancel_rate_scales_with_volume() {
        let transitions = enumerate_transitions(&fig2_state(), &fig2_params());
        let rate = transitions
            .iter()
            .find(|t| t.event == EventKind::CancelAsk(7))
            .map(|t| t.rate)
            .unwrap();
        assert_eq!(rate, 5.0);
    }

    #[test]
    fn market_buy_absent_when_ask_frame_empty() {
        let params = fig2_params();
        let state = BookState::new(vec![0; 9], vec![0; 9], 0).unwrap();
        let transitions = enumerate_transitions(&state, &params);
        assert!(transitions
            .iter()
            .all(|t| t.event != EventKind::MarketBuy && t.event != EventKind::MarketSell));
        assert_eq!(
            apply_event(&state, &params, EventKind::MarketBuy).unwrap_err(),
            ApplyEventError::MarketOnEmptySide(Side::Ask)
        );
    }

    #[test]
    fn constant_mode_cancel_at_empty_level_is_noop() {
        let mut params = fig2_params();
        params.cancel_mode = CancelMode::Constant;
        let state = fig2_state();
        let next = apply_event(&state, &params, EventKind::CancelAsk(1)).unwrap();
        assert_eq!(next, state);
        assert_eq!(
            price_impact(&state, &params, EventKind::CancelAsk(1)).unwrap(),
            Impact::default()
        );
        // The no-op still carries its constant rate in the enumeration.
        let transitions = enumerate_transitions(&state, &params);
        assert_eq!(transitions.len(), 2 * (2 * 9 + 1));
    }

    #[test]
    fn proportional_cancel_at_empty_level_rejected() {
        let err = apply_event(&fig2_state(), &fig2_params(), EventKind::CancelAsk(1)).unwrap_err();
        assert_eq!(
            err,
            ApplyEventError::CancelAtEmptyLevel {
                side: Side::Ask,
                level: 1
            }
        );
    }

    #[test]
    fn limit_level_out_of_range_rejected() {
        let err = apply_event(&fig2_state(), &fig2_params(), EventKind::LimitAsk(10)).unwrap_err();
        assert_eq!(
            err,
            ApplyEventError::LevelOutOfRange {
                level: 10,
                levels: 9
            }
        );
    }

    #[test]
    fn apply_is_deterministic() {
        let state = fig2_state();
        let params = fig2_params();
        let a = apply_event(&state, &params, EventKind::MarketBuy).unwrap();
        let b = apply_event(&state, &params, EventKind::MarketBuy).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn widen_then_refill_restores_spread() {
        // A market sell widens the spread by moving the bid quote away; a
        // limit bid at the old quote level narrows it back.
        let state = fig2_state();
        let params = fig2_params();
        let widened = apply_event(&state, &params, EventKind::MarketSell).unwrap();
        let widened_by = widened.spread_ticks() - state.spread_ticks();
        assert!(widened_by > 0);
        let refill = EventKind::LimitBid(state.spread_ticks());
        let restored = apply_event(&widened, &params, refill).unwrap();
        assert_eq!(restored.spread_ticks(), state.spread_ticks());
    }

    #[test]
    fn emptying_both_sides_caps_spread() {
        let params = ModelParams::flat(2, 1, 1.0, 1.0, 1.0, 1.0, 1, CancelMode::Proportional);
        let state = BookState::new(vec![1, 0], vec![1, 0], 10).unwrap();
        // Consuming the only bid order drops the in-frame bid to empty; the
        // renumbered ask side loses its orders off the far edge and both
        // sides read the boundary spread N + 1.
        let next = apply_event(&state, &params, EventKind::MarketSell).unwrap();
        assert_eq!(next.counts(Side::Ask), &[0, 0]);
        assert_eq!(next.counts(Side::Bid), &[0, 0]);
        assert_eq!(next.spread_ticks(), 3);
        assert_eq!(next.ask_price_ticks(), 10);
    }

    #[test]
    fn limit_into_empty_book_restores_both_quotes() {
        let params = ModelParams::flat(2, 1, 1.0, 1.0, 1.0, 1.0, 1, CancelMode::Proportional);
        let empty = BookState::new(vec![0, 0], vec![0, 0], 10).unwrap();
        let next = apply_event(&empty, &params, EventKind::LimitAsk(1)).unwrap();
        assert_eq!(next.counts(Side::Ask), &[1, 0]);
        // The ask quote moved two ticks closer; the bid frame slid with it
        // and picked up boundary volume on its far level.
        assert_eq!(next.counts(Side::Bid), &[1, 1]);
        assert_eq!(next.spread_ticks(), 1);
        assert_eq!(next.ask_price_ticks(), 8);
    }
}
