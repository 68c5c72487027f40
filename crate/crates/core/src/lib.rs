//! Event-driven laboratory for a Markovian limit order book.
//!
//! The model: a finite moving frame of `N` price levels per side, fed by
//! independent Poisson flows of market orders, limit orders and
//! cancellations, with constant boundary volumes outside the frame. The
//! crate simulates the resulting continuous-time Markov chain exactly,
//! verifies its stability through Foster-Lyapunov drift inequalities, solves
//! small truncated instances for their stationary distribution, and measures
//! the diffusive scaling of the price.
//!
//! Modules:
//!
//! - [`book`]: the pure state machine (depth profiles, event application in
//!   the moving frame, per-event price impact, transition enumeration);
//! - [`flow`]: exact jump-chain simulation with seeded, replicable
//!   randomness and CSV trace export;
//! - [`generator`]: numeric application of the infinitesimal generator and
//!   closed-form conditional drifts of mid-price and spread;
//! - [`stability`]: Lyapunov test functions and drift-condition
//!   verification, plus the explicit stability inequality for
//!   state-independent cancellation;
//! - [`stationary`]: exact stationary distribution of small truncated
//!   instances, used as an oracle;
//! - [`stats`]: stationary and scaling statistics of simulated traces
//!   (autocovariances, asymptotic variance, variance-vs-time regression,
//!   moment diagnostics);
//! - [`toy`]: the constant-spread market-making model with its closed-form
//!   diffusion constants.

pub mod book;
pub mod flow;
pub mod generator;
pub mod stability;
pub mod stationary;

pub use book::{
    apply_event, apply_event_in_place, depth, enumerate_transitions, event_rates, inverse_depth,
    price_impact, ApplyEventError, BookState, CancelMode, EventKind, Impact, ModelParams,
    ParamsError, Side, StateError, Transition,
};
pub use flow::{
    embedded_probabilities, simulate, simulate_replicas, step, total_rate, FlowError,
    InitialState, SimConfig, Snapshot, Trace, TraceEvent,
};
