//! Online input data-rate estimate kept in an 8-entry x 16-bit shift register.

use serde::{Deserialize, Serialize};

pub const RATE_ENTRIES: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateConfig {
    /// Length of one register window in ns.
    pub window_ns: f64,
    /// Bits represented by one count in a register entry.
    pub scale_bits: f64,
}

impl Default for RateConfig {
    fn default() -> Self {
        RateConfig {
            window_ns: 4000.0,
            scale_bits: 1.0,
        }
    }
}

impl RateConfig {
    /// Time spanned by the whole register.
    pub fn span_ns(&self) -> f64 {
        self.window_ns * RATE_ENTRIES as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateTracker {
    config: RateConfig,
    entries: [u16; RATE_ENTRIES],
    cursor: usize,
    window_start: f64,
}

impl RateTracker {
    pub fn new(config: RateConfig) -> Self {
        RateTracker {
            config,
            entries: [0; RATE_ENTRIES],
            cursor: 0,
            window_start: 0.0,
        }
    }

    pub fn entries(&self) -> [u16; RATE_ENTRIES] {
        self.entries
    }

    /// Shifts the register forward so that `now` falls in the current window.
    pub fn advance(&mut self, now: f64) {
        let w = self.config.window_ns;
        if now < self.window_start + w {
            return;
        }
        let elapsed = ((now - self.window_start) / w).floor();
        let shifts = if elapsed >= RATE_ENTRIES as f64 {
            RATE_ENTRIES
        } else {
            elapsed as usize
        };
        for _ in 0..shifts {
            self.cursor = (self.cursor + 1) % RATE_ENTRIES;
            self.entries[self.cursor] = 0;
        }
        self.window_start += elapsed * w;
    }

    /// Accumulates `bits` injected at `now` into the current window.
    pub fn update(&mut self, bits: f64, now: f64) {
        self.advance(now);
        let counts = (bits / self.config.scale_bits).round();
        let cur = f64::from(self.entries[self.cursor]);
        self.entries[self.cursor] = (cur + counts).min(f64::from(u16::MAX)) as u16;
    }

    /// Estimated rate in Mbps over the whole register.
    pub fn estimate_mbps(&self) -> f64 {
        let total: u64 = self.entries.iter().map(|&e| u64::from(e)).sum();
        let bits_per_ns = total as f64 * self.config.scale_bits / self.config.span_ns();
        bits_per_ns * 1e3
    }
}
