//! Exact event-driven simulation of the book.
//!
//! The book is a continuous-time Markov chain: competing exponential clocks,
//! one per active event. A step draws the holding time from the total rate
//! and the event from the embedded (jump-chain) distribution, then applies
//! it. No time discretization is involved.
//!
//! Randomness comes from ChaCha12 seeded with a 64-bit seed; replicas run on
//! independent ChaCha streams (or independent seeds), so a `(seed, stream)`
//! pair fully determines a trace.

mod sim;
mod trace;

pub use sim::{
    derive_replica_rng, embedded_probabilities, simulate, simulate_replicas, step, total_rate,
    FlowError, InitialState, SimConfig,
};
pub use trace::{
    attach_holding_times, read_events_csv, read_snapshots_csv, write_events_csv,
    write_snapshots_csv, Snapshot, Trace, TraceEvent, TraceReadError,
};
