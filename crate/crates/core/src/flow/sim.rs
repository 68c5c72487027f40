use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Exp1};
use rayon::prelude::*;
use thiserror::Error;

use super::{Snapshot, Trace, TraceEvent};
use crate::book::{
    apply_event_in_place, event_rates, BookState, EventKind, ModelParams, ParamsError,
};

#[derive(Debug, Error, PartialEq)]
pub enum FlowError {
    #[error(transparent)]
    Params(#[from] ParamsError),
    #[error("total event rate is zero; the chain cannot move")]
    ZeroTotalRate,
    #[error("replica seeds must be distinct")]
    DuplicateSeeds,
}

/// Total event rate `Lambda(x)`: market rates gated by the in-frame
/// indicators, all limit rates, and cancellation rates (volume-proportional
/// or constant per mode; constant-mode no-op cancellations count). Zero only
/// when every rate vanishes.
pub fn total_rate(state: &BookState, params: &ModelParams) -> f64 {
    let mut rates = Vec::new();
    event_rates(state, params, &mut rates);
    rates.iter().map(|&(_, r)| r).sum()
}

/// Jump-chain distribution at `state`: each active event with probability
/// `rate / Lambda(x)`.
pub fn embedded_probabilities(
    state: &BookState,
    params: &ModelParams,
) -> Result<Vec<(EventKind, f64)>, FlowError> {
    let mut rates = Vec::new();
    event_rates(state, params, &mut rates);
    let total: f64 = rates.iter().map(|&(_, r)| r).sum();
    if total <= 0.0 {
        return Err(FlowError::ZeroTotalRate);
    }
    Ok(rates.into_iter().map(|(e, r)| (e, r / total)).collect())
}

/// Draw `(dt, event)` from the competing clocks at `state`. `None` when the
/// total rate is zero. Exactly two RNG consumptions per call: the holding
/// time and the event selector.
fn draw_next<R: Rng>(
    state: &BookState,
    params: &ModelParams,
    rates: &mut Vec<(EventKind, f64)>,
    rng: &mut R,
) -> Option<(f64, EventKind)> {
    event_rates(state, params, rates);
    let total: f64 = rates.iter().map(|&(_, r)| r).sum();
    if total <= 0.0 {
        return None;
    }
    let dt: f64 = Exp1.sample(rng);
    let dt = dt / total;
    let target = rng.random::<f64>() * total;
    let mut cumulative = 0.0;
    let mut chosen = rates[rates.len() - 1].0;
    for &(event, rate) in rates.iter() {
        cumulative += rate;
        if target < cumulative {
            chosen = event;
            break;
        }
    }
    Some((dt, chosen))
}

/// Advance the chain by one jump: draws the exponential holding time and the
/// event, applies the event in place, and returns `(dt, event)`.
pub fn step<R: Rng>(
    state: &mut BookState,
    params: &ModelParams,
    rng: &mut R,
) -> Result<(f64, EventKind), FlowError> {
    let mut rates = Vec::new();
    let (dt, event) = draw_next(state, params, &mut rates, rng).ok_or(FlowError::ZeroTotalRate)?;
    apply_event_in_place(state, params, event).expect("drawn event must be applicable");
    Ok((dt, event))
}

/// Starting state of a run.
#[derive(Debug, Clone, Default)]
pub enum InitialState {
    /// Both sides filled with the boundary volume, spread one tick.
    #[default]
    Full,
    Custom(BookState),
}

/// Run controls. `n_events` are recorded after `burn_in` events are
/// discarded; a snapshot of the full state is kept every `snapshot_stride`
/// recorded events when set.
#[derive(Debug, Clone)]
pub struct SimConfig {
    pub seed: u64,
    /// ChaCha stream index; replicas of one seed run on distinct streams.
    pub stream: u64,
    pub n_events: u64,
    pub burn_in: u64,
    pub snapshot_stride: Option<u64>,
    pub initial: InitialState,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            seed: 0,
            stream: 0,
            n_events: 0,
            burn_in: 0,
            snapshot_stride: None,
            initial: InitialState::Full,
        }
    }
}

impl SimConfig {
    pub fn new(seed: u64, n_events: u64, burn_in: u64) -> Self {
        SimConfig {
            seed,
            n_events,
            burn_in,
            ..SimConfig::default()
        }
    }
}

/// RNG for replica `stream` of `seed`: ChaCha12 with the stream index set,
/// giving mutually independent draws for every `(seed, stream)` pair.
pub fn derive_replica_rng(seed: u64, stream: u64) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Simulate the chain and record a [`Trace`]. Deterministic in
/// `(params, config)`; a zero total rate truncates the run and sets the
/// halt marker instead of failing.
pub fn simulate(params: &ModelParams, config: &SimConfig) -> Result<Trace, FlowError> {
    params.validate()?;
    let mut rng = derive_replica_rng(config.seed, config.stream);
    let mut state = match &config.initial {
        InitialState::Full => BookState::full(params, 0),
        InitialState::Custom(s) => s.clone(),
    };
    let mut rates: Vec<(EventKind, f64)> = Vec::with_capacity(2 * (2 * params.levels + 1));
    let mut t = 0.0f64;
    let mut halted = false;

    let mut burned = 0u64;
    while burned < config.burn_in {
        match draw_next(&state, params, &mut rates, &mut rng) {
            Some((dt, event)) => {
                apply_event_in_place(&mut state, params, event)
                    .expect("drawn event must be applicable");
                t += dt;
                burned += 1;
            }
            None => {
                halted = true;
                break;
            }
        }
    }

    let t_start = t;
    let initial_mid_half_ticks = state.mid_half_ticks();
    let initial_spread_ticks = state.spread_ticks() as u32;
    let mut events = Vec::with_capacity(config.n_events as usize);
    let mut snapshots = Vec::new();
    let mut pending: Option<(f64, BookState)> = None;

    if !halted {
        for recorded in 0..config.n_events {
            let Some((dt, event)) = draw_next(&state, params, &mut rates, &mut rng) else {
                halted = true;
                break;
            };
            apply_event_in_place(&mut state, params, event)
                .expect("drawn event must be applicable");
            t += dt;
            if let Some((snap_t, snap_state)) = pending.take() {
                snapshots.push(Snapshot {
                    t: snap_t,
                    state: snap_state,
                    holding_dt: t - snap_t,
                });
            }
            events.push(TraceEvent {
                t,
                event,
                mid_half_ticks: state.mid_half_ticks(),
                spread_ticks: state.spread_ticks() as u32,
            });
            if let Some(stride) = config.snapshot_stride {
                if stride > 0 && recorded % stride == 0 {
                    pending = Some((t, state.clone()));
                }
            }
        }
    }
    // A trailing pending snapshot has no successor event to define its
    // holding time; it is dropped.

    Ok(Trace {
        seed: config.seed,
        stream: config.stream,
        params_digest: params.digest(),
        t_start,
        initial_mid_half_ticks,
        initial_spread_ticks,
        events,
        snapshots,
        halted,
    })
}

/// Run one replica per seed (stream 0), in parallel. Traces come back in
/// seed order and are identical to running the same seeds sequentially.
pub fn simulate_replicas(
    params: &ModelParams,
    seeds: &[u64],
    n_events: u64,
    burn_in: u64,
) -> Result<Vec<Trace>, FlowError> {
    let mut sorted = seeds.to_vec();
    sorted.sort_unstable();
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return Err(FlowError::DuplicateSeeds);
    }
    seeds
        .par_iter()
        .map(|&seed| simulate(params, &SimConfig::new(seed, n_events, burn_in)))
        .collect()
}
