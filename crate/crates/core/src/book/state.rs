use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{ModelParams, Side};

/// Book state in the moving frame.
///
/// Queue volumes are stored as counts in units of the order size `q`:
/// `ask_counts[i-1] * q` is the volume resting `i` ticks above the best bid,
/// `bid_counts[i-1] * q` the volume `i` ticks below the best ask (bid volumes
/// are stored as magnitudes; the sign convention that bid quantities are
/// non-positive is applied only when presenting).
///
/// The frame is anchored in absolute price by `ask_price_ticks`, the tick
/// index of the best ask. Both sides extend virtually beyond the frame:
/// every level `> N` holds the boundary volume, so the first occupied index
/// of a side — the spread in ticks — is always defined and at most `N + 1`.
/// A valid state has the same first occupied index on both sides.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BookState {
    ask_counts: Vec<u32>,
    bid_counts: Vec<u32>,
    ask_price_ticks: i64,
}

#[derive(Debug, Error, PartialEq)]
pub enum StateError {
    #[error("queue vectors must be nonempty and of equal length, got {ask} and {bid}")]
    BadShape { ask: usize, bid: usize },
    #[error("first occupied index differs between sides: ask {ask}, bid {bid}")]
    SpreadMismatch { ask: usize, bid: usize },
}

fn first_occupied(counts: &[u32]) -> usize {
    counts
        .iter()
        .position(|&c| c > 0)
        .map_or(counts.len() + 1, |p| p + 1)
}

impl BookState {
    /// Build a state from per-level counts (units of `q`), checking the
    /// first-occupied-index invariant.
    pub fn new(
        ask_counts: Vec<u32>,
        bid_counts: Vec<u32>,
        ask_price_ticks: i64,
    ) -> Result<Self, StateError> {
        if ask_counts.is_empty() || ask_counts.len() != bid_counts.len() {
            return Err(StateError::BadShape {
                ask: ask_counts.len(),
                bid: bid_counts.len(),
            });
        }
        let ia = first_occupied(&ask_counts);
        let ib = first_occupied(&bid_counts);
        if ia != ib {
            return Err(StateError::SpreadMismatch { ask: ia, bid: ib });
        }
        Ok(BookState {
            ask_counts,
            bid_counts,
            ask_price_ticks,
        })
    }

    /// Both sides filled with the boundary volume at every level, spread one
    /// tick. This is the conventional initial condition.
    pub fn full(params: &ModelParams, ask_price_ticks: i64) -> Self {
        BookState {
            ask_counts: vec![params.boundary_count(Side::Ask); params.levels],
            bid_counts: vec![params.boundary_count(Side::Bid); params.levels],
            ask_price_ticks,
        }
    }

    pub fn levels(&self) -> usize {
        self.ask_counts.len()
    }

    pub fn counts(&self, side: Side) -> &[u32] {
        match side {
            Side::Ask => &self.ask_counts,
            Side::Bid => &self.bid_counts,
        }
    }

    pub(super) fn counts_mut(&mut self, side: Side) -> &mut Vec<u32> {
        match side {
            Side::Ask => &mut self.ask_counts,
            Side::Bid => &mut self.bid_counts,
        }
    }

    /// Count (units of `q`) at 1-based level `i` of `side`; zero outside
    /// `1..=N` (the boundary extension is handled by [`depth`]).
    pub fn count_at(&self, side: Side, level: usize) -> u32 {
        if level == 0 || level > self.levels() {
            0
        } else {
            self.counts(side)[level - 1]
        }
    }

    /// First occupied 1-based index of `side`, counting the virtual boundary
    /// level: `N + 1` when the in-frame side is empty.
    pub fn first_occupied(&self, side: Side) -> usize {
        first_occupied(self.counts(side))
    }

    /// True if the in-frame part of `side` holds at least one order.
    pub fn side_nonempty(&self, side: Side) -> bool {
        self.first_occupied(side) <= self.levels()
    }

    /// Spread in ticks, `1..=N+1`. Equals the first occupied index of either
    /// side.
    pub fn spread_ticks(&self) -> usize {
        self.first_occupied(Side::Ask)
    }

    pub fn ask_price_ticks(&self) -> i64 {
        self.ask_price_ticks
    }

    pub(super) fn shift_ask_price(&mut self, delta: i64) {
        self.ask_price_ticks += delta;
    }

    pub fn bid_price_ticks(&self) -> i64 {
        self.ask_price_ticks - self.spread_ticks() as i64
    }

    /// Mid-price in half-ticks (integral because the spread is integral).
    pub fn mid_half_ticks(&self) -> i64 {
        2 * self.ask_price_ticks - self.spread_ticks() as i64
    }

    /// Total in-frame volume of both sides, in shares.
    pub fn total_shares(&self, params: &ModelParams) -> u64 {
        let counts: u64 = self
            .ask_counts
            .iter()
            .chain(&self.bid_counts)
            .map(|&c| u64::from(c))
            .sum();
        counts * u64::from(params.unit)
    }

    /// Mirror image: ask and bid sides swapped. The anchor is kept, which is
    /// irrelevant for queue-only quantities.
    pub fn mirrored(&self) -> Self {
        BookState {
            ask_counts: self.bid_counts.clone(),
            bid_counts: self.ask_counts.clone(),
            ask_price_ticks: self.ask_price_ticks,
        }
    }

    /// Compact textual form, e.g. `a=[0,2,1];b=[1,0,3]`, used as a state
    /// digest in CSV reports.
    pub fn digest(&self) -> String {
        let join = |side: &[u32]| {
            side.iter()
                .map(|c| c.to_string())
                .collect::<Vec<_>>()
                .join(",")
        };
        format!(
            "a=[{}];b=[{}]",
            join(&self.ask_counts),
            join(&self.bid_counts)
        )
    }
}

/// Cumulative depth of `side` up to level `i`, in shares. Levels beyond the
/// frame each hold the boundary volume, so the function keeps growing: for
/// `i > N` it returns the in-frame total plus `(i - N)` boundary volumes.
pub fn depth(state: &BookState, params: &ModelParams, side: Side, level: usize) -> u64 {
    let n = state.levels();
    let in_frame: u64 = state.counts(side)[..level.min(n)]
        .iter()
        .map(|&c| u64::from(c))
        .sum();
    let boundary = match side {
        Side::Ask => params.boundary_ask,
        Side::Bid => params.boundary_bid,
    };
    in_frame * u64::from(params.unit) + (level.saturating_sub(n) as u64) * boundary
}

/// Generalized inverse of [`depth`]: the smallest level whose cumulative
/// depth strictly exceeds `shares`. Always finite thanks to the boundary
/// extension. `inverse_depth(.., 0)` is the first occupied index, i.e. the
/// spread in ticks when at most `N + 1`.
pub fn inverse_depth(state: &BookState, params: &ModelParams, side: Side, shares: u64) -> usize {
    let n = state.levels();
    let unit = u64::from(params.unit);
    let mut cumulative = 0u64;
    for (idx, &c) in state.counts(side).iter().enumerate() {
        cumulative += u64::from(c) * unit;
        if cumulative > shares {
            return idx + 1;
        }
    }
    let boundary = match side {
        Side::Ask => params.boundary_ask,
        Side::Bid => params.boundary_bid,
    };
    // Remaining shares are covered by boundary levels, `boundary` each.
    let deficit = shares - cumulative;
    n + 1 + (deficit / boundary) as usize
}
