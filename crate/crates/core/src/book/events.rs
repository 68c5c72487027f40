use serde::{Deserialize, Serialize};

/// Side of the book an order rests on (or, for market orders, hits).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Side {
    Ask,
    Bid,
}

impl Side {
    pub fn opposite(self) -> Side {
        match self {
            Side::Ask => Side::Bid,
            Side::Bid => Side::Ask,
        }
    }
}

/// One of the `2(2N+1)` elementary order flow events. Levels are 1-based:
/// `LimitAsk(1)` rests one tick above the best bid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EventKind {
    MarketBuy,
    MarketSell,
    LimitAsk(usize),
    LimitBid(usize),
    CancelAsk(usize),
    CancelBid(usize),
}

impl EventKind {
    /// Side of the book whose queues the event updates directly. Market buys
    /// consume the ask side, market sells the bid side.
    pub fn side(self) -> Side {
        match self {
            EventKind::MarketBuy | EventKind::LimitAsk(_) | EventKind::CancelAsk(_) => Side::Ask,
            EventKind::MarketSell | EventKind::LimitBid(_) | EventKind::CancelBid(_) => Side::Bid,
        }
    }

    /// Stable integer code used in trace CSV files. The alphabet for a book
    /// with `levels` ticks per side is laid out densely:
    ///
    /// ```text
    /// 0                market buy
    /// 1                market sell
    /// 2 + (i-1)        limit ask at level i
    /// 2 + N + (i-1)    limit bid at level i
    /// 2 + 2N + (i-1)   cancel ask at level i
    /// 2 + 3N + (i-1)   cancel bid at level i
    /// ```
    pub fn code(self, levels: usize) -> u32 {
        let n = levels as u32;
        match self {
            EventKind::MarketBuy => 0,
            EventKind::MarketSell => 1,
            EventKind::LimitAsk(i) => 2 + (i as u32 - 1),
            EventKind::LimitBid(i) => 2 + n + (i as u32 - 1),
            EventKind::CancelAsk(i) => 2 + 2 * n + (i as u32 - 1),
            EventKind::CancelBid(i) => 2 + 3 * n + (i as u32 - 1),
        }
    }

    /// Inverse of [`EventKind::code`]; `None` if the code is outside the
    /// alphabet for this frame size.
    pub fn from_code(code: u32, levels: usize) -> Option<EventKind> {
        let n = levels as u32;
        match code {
            0 => Some(EventKind::MarketBuy),
            1 => Some(EventKind::MarketSell),
            c if c < 2 + n => Some(EventKind::LimitAsk((c - 1) as usize)),
            c if c < 2 + 2 * n => Some(EventKind::LimitBid((c - 2 - n + 1) as usize)),
            c if c < 2 + 3 * n => Some(EventKind::CancelAsk((c - 2 - 2 * n + 1) as usize)),
            c if c < 2 + 4 * n => Some(EventKind::CancelBid((c - 2 - 3 * n + 1) as usize)),
            _ => None,
        }
    }

    /// All events of the alphabet in code order.
    pub fn alphabet(levels: usize) -> impl Iterator<Item = EventKind> {
        (0..2 + 4 * levels as u32).map(move |c| EventKind::from_code(c, levels).unwrap())
    }
}

/// Price and spread change caused by one event. The mid-price moves in units
/// of half a tick so it stays integral; the spread in whole ticks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Impact {
    pub mid_half_ticks: i32,
    pub spread_ticks: i32,
}
