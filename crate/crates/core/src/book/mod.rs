//! Order book state machine.
//!
//! The book is a pair of length-`N` queue vectors in a *moving frame*: ask
//! volumes are indexed by distance (in ticks) above the best bid, bid volumes
//! by distance below the best ask. Every event (market order, limit order,
//! cancellation) updates one side directly and may move that side's best
//! quote; when it does, the opposite side is renumbered to keep its indexing
//! relative to the quote that moved. Levels entering the frame from beyond
//! the far edge are refilled with the constant boundary volume; levels
//! entering from inside the old spread are necessarily empty.
//!
//! Everything in this module is pure: applying an event to a state yields a
//! new state, and the per-event price/spread impact is available both from
//! the state difference and from a closed form on the pre-event depth
//! profile. The two routes are independent implementations and are tested
//! against each other.

mod apply;
mod events;
mod params;
mod state;

pub use apply::{
    apply_event, apply_event_in_place, enumerate_transitions, event_rates, price_impact,
    ApplyEventError, Transition,
};
pub use events::{EventKind, Impact, Side};
pub use params::{CancelMode, ModelParams, ParamsError};
pub use state::{depth, inverse_depth, BookState, StateError};
