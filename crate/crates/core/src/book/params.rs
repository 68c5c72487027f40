use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

/// How cancellation intensities depend on the state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CancelMode {
    /// Per-order cancellation: the intensity at level `i` is
    /// `rate_cancel[i] * volume_i / unit` (each resting order carries its own
    /// exponential clock).
    Proportional,
    /// State-independent cancellation: the intensity at level `i` is
    /// `rate_cancel[i]` regardless of the volume there. A cancellation drawn
    /// at an empty level is a no-op event, which keeps the total event rate
    /// independent of the state.
    Constant,
}

/// Arrival-rate and geometry parameters of the order flow model.
///
/// All volumes (`boundary_ask`, `boundary_bid`) are in shares and must be
/// positive multiples of `unit`. Rate vectors are indexed by level, entry `0`
/// holding the rate one tick away from the best opposite quote.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// Levels per side of the moving frame (`N`).
    pub levels: usize,
    /// Order size `q` in shares; every queue volume is a multiple of it.
    pub unit: u32,
    /// Tick size in price units.
    pub tick: f64,
    /// Buy market order intensity (active only while the in-frame ask side
    /// is nonempty).
    pub rate_market_buy: f64,
    /// Sell market order intensity (active only while the in-frame bid side
    /// is nonempty).
    pub rate_market_sell: f64,
    /// Sell limit order intensity per level, length `levels`.
    pub rate_limit_ask: Vec<f64>,
    /// Buy limit order intensity per level, length `levels`.
    pub rate_limit_bid: Vec<f64>,
    /// Ask cancellation rate per level; per order in proportional mode,
    /// absolute in constant mode.
    pub rate_cancel_ask: Vec<f64>,
    /// Bid cancellation rate per level.
    pub rate_cancel_bid: Vec<f64>,
    /// Volume (shares) at every ask level beyond the frame.
    pub boundary_ask: u64,
    /// Volume (shares) at every bid level beyond the frame.
    pub boundary_bid: u64,
    pub cancel_mode: CancelMode,
}

#[derive(Debug, Error, PartialEq)]
pub enum ParamsError {
    #[error("levels must be >= 1")]
    NoLevels,
    #[error("unit order size must be positive")]
    ZeroUnit,
    #[error("tick must be positive and finite, got {0}")]
    BadTick(f64),
    #[error("{name} must be non-negative and finite, got {value}")]
    BadRate { name: &'static str, value: f64 },
    #[error("{name} must have one entry per level ({expected}), got {got}")]
    BadRateLength {
        name: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("{name} must be a positive multiple of the unit order size")]
    BadBoundary { name: &'static str },
    #[error("proportional cancellation requires every cancel rate positive")]
    ZeroCancelRate,
}

impl ModelParams {
    /// Flat-rate parameter set: one market rate per side, one limit and one
    /// cancel rate applied to every level. Convenient for tests and baseline
    /// configurations.
    pub fn flat(
        levels: usize,
        unit: u32,
        tick: f64,
        rate_market: f64,
        rate_limit: f64,
        rate_cancel: f64,
        boundary: u64,
        cancel_mode: CancelMode,
    ) -> Self {
        ModelParams {
            levels,
            unit,
            tick,
            rate_market_buy: rate_market,
            rate_market_sell: rate_market,
            rate_limit_ask: vec![rate_limit; levels],
            rate_limit_bid: vec![rate_limit; levels],
            rate_cancel_ask: vec![rate_cancel; levels],
            rate_cancel_bid: vec![rate_cancel; levels],
            boundary_ask: boundary,
            boundary_bid: boundary,
            cancel_mode,
        }
    }

    pub fn validate(&self) -> Result<(), ParamsError> {
        if self.levels == 0 {
            return Err(ParamsError::NoLevels);
        }
        if self.unit == 0 {
            return Err(ParamsError::ZeroUnit);
        }
        if !(self.tick.is_finite() && self.tick > 0.0) {
            return Err(ParamsError::BadTick(self.tick));
        }
        let scalar_rates = [
            ("rate_market_buy", self.rate_market_buy),
            ("rate_market_sell", self.rate_market_sell),
        ];
        for (name, value) in scalar_rates {
            if !(value.is_finite() && value >= 0.0) {
                return Err(ParamsError::BadRate { name, value });
            }
        }
        let vectors = [
            ("rate_limit_ask", &self.rate_limit_ask),
            ("rate_limit_bid", &self.rate_limit_bid),
            ("rate_cancel_ask", &self.rate_cancel_ask),
            ("rate_cancel_bid", &self.rate_cancel_bid),
        ];
        for (name, rates) in vectors {
            if rates.len() != self.levels {
                return Err(ParamsError::BadRateLength {
                    name,
                    expected: self.levels,
                    got: rates.len(),
                });
            }
            for &value in rates {
                if !(value.is_finite() && value >= 0.0) {
                    return Err(ParamsError::BadRate { name, value });
                }
            }
        }
        let unit = u64::from(self.unit);
        for (name, vol) in [
            ("boundary_ask", self.boundary_ask),
            ("boundary_bid", self.boundary_bid),
        ] {
            if vol == 0 || vol % unit != 0 {
                return Err(ParamsError::BadBoundary { name });
            }
        }
        if self.cancel_mode == CancelMode::Proportional && self.min_cancel_rate() <= 0.0 {
            return Err(ParamsError::ZeroCancelRate);
        }
        Ok(())
    }

    /// Smallest per-level cancel rate over both sides.
    pub fn min_cancel_rate(&self) -> f64 {
        self.rate_cancel_ask
            .iter()
            .chain(&self.rate_cancel_bid)
            .fold(f64::INFINITY, |m, &r| m.min(r))
    }

    /// Largest per-level cancel rate over both sides.
    pub fn max_cancel_rate(&self) -> f64 {
        self.rate_cancel_ask
            .iter()
            .chain(&self.rate_cancel_bid)
            .fold(0.0f64, |m, &r| m.max(r))
    }

    /// Boundary volume of `side` in units of `unit`.
    pub fn boundary_count(&self, side: super::Side) -> u32 {
        let shares = match side {
            super::Side::Ask => self.boundary_ask,
            super::Side::Bid => self.boundary_bid,
        };
        (shares / u64::from(self.unit)) as u32
    }

    /// Largest boundary volume in shares (`max(a_inf, |b_inf|)`).
    pub fn boundary_max(&self) -> u64 {
        self.boundary_ask.max(self.boundary_bid)
    }

    /// Hex SHA-256 of the canonical JSON encoding; identifies a parameter
    /// set in trace manifests and reports.
    pub fn digest(&self) -> String {
        let json = serde_json::to_string(self).expect("params serialize");
        let hash = Sha256::digest(json.as_bytes());
        let mut out = String::with_capacity(64);
        for byte in hash {
            use std::fmt::Write;
            write!(out, "{byte:02x}").unwrap();
        }
        out
    }
}
