//! Codec configuration and its validation.

use crate::error::{CodecError, Result};
use std::ops::Range;
use std::path::Path;

pub const NUM_SUBBANDS: usize = 8;

/// All tunable codec parameters. Defaults implement the 12.8 kHz / 1024-tap
/// sine-window operating point; `num_bins` and `window_len` derive from
/// `hop_n` and are not stored.
#[derive(Debug, Clone, PartialEq)]
pub struct CodecConfig {
    pub sample_rate_hz: u32,
    pub hop_n: usize,
    pub lpc_order_fdns: usize,
    pub lpc_order_ctns: usize,
    pub weight_fdns: f64,
    pub weight_ctns: f64,
    /// Activation threshold on the CTNS residual-level change in dB; the tool
    /// engages when filtering drops the band level below this (negative) value.
    pub ctns_gain_threshold_db: f64,
    /// First bin the CTNS filter touches (312 Hz at 12.5 Hz/bin).
    pub ctns_start_bin: usize,
    /// Exclusive upper bin of each sub-band; last edge equals `num_bins`.
    pub subband_edges: [usize; NUM_SUBBANDS],
    /// Magnitude quantizer power factor p(b) per sub-band.
    pub power_factors: [f64; NUM_SUBBANDS],
    /// Fixed target bits per sub-band.
    pub fixed_bits: [u32; NUM_SUBBANDS],
    /// Additional bits granted when the FER clears its threshold.
    pub add_bits: [u32; NUM_SUBBANDS],
    /// FER thresholds per sub-band.
    pub fer_thresholds: [f64; NUM_SUBBANDS],
    /// Frame-gain gate (dB) above which the FER thresholds relax.
    pub gain_gate: f64,
    pub gate_relax: f64,
    pub phase_bits: u32,
    /// Multiplies every target-bit figure before rounding.
    pub bit_budget_scale: f64,
    /// Calibration constant of the scale-factor bit estimator. The estimator's
    /// 0.5*log2(energy) term counts one magnitude per quadruple, so matching
    /// actual coded bits needs roughly one such term per coefficient.
    pub bit_estimate_fit: f64,
}

impl Default for CodecConfig {
    fn default() -> Self {
        CodecConfig {
            sample_rate_hz: 12800,
            hop_n: 512,
            lpc_order_fdns: 16,
            lpc_order_ctns: 10,
            weight_fdns: 0.93,
            weight_ctns: 0.94,
            ctns_gain_threshold_db: -3.0,
            ctns_start_bin: 25,
            subband_edges: [40, 90, 140, 200, 260, 330, 410, 512],
            power_factors: [4.0 / 3.0, 4.0 / 3.0, 4.0 / 3.0, 1.0, 1.0, 0.75, 0.75, 0.75],
            fixed_bits: [338, 237, 152, 135, 68, 10, 7, 3],
            add_bits: [7, 7, 5, 5, 3, 3, 3, 3],
            fer_thresholds: [0.125, 0.125, 0.125, 0.125, 0.07, 0.07, 0.07, 0.07],
            gain_gate: 9.5,
            gate_relax: 0.025,
            phase_bits: 6,
            bit_budget_scale: 1.0,
            bit_estimate_fit: 4.5,
        }
    }
}

impl CodecConfig {
    pub fn window_len(&self) -> usize {
        2 * self.hop_n
    }

    pub fn num_bins(&self) -> usize {
        self.hop_n
    }

    pub fn validate(&self) -> Result<()> {
        if self.hop_n == 0 {
            return Err(CodecError::InvalidConfig("hop_n must be positive".into()));
        }
        if self.sample_rate_hz == 0 {
            return Err(CodecError::InvalidConfig(
                "sample_rate_hz must be positive".into(),
            ));
        }
        let mut prev = 0usize;
        for (i, &e) in self.subband_edges.iter().enumerate() {
            if e <= prev {
                return Err(CodecError::InvalidConfig(format!(
                    "subband_edges must be strictly ascending (edge {} = {})",
                    i, e
                )));
            }
            prev = e;
        }
        if *self.subband_edges.last().unwrap() != self.num_bins() {
            return Err(CodecError::InvalidConfig(format!(
                "last subband edge must equal num_bins ({})",
                self.num_bins()
            )));
        }
        if self.ctns_start_bin >= self.num_bins() {
            return Err(CodecError::InvalidConfig(
                "ctns_start_bin must lie below num_bins".into(),
            ));
        }
        if !self.power_factors.iter().all(|&p| p > 0.0 && p.is_finite()) {
            return Err(CodecError::InvalidConfig(
                "power_factors must be positive".into(),
            ));
        }
        if !(self.weight_fdns > 0.0 && self.weight_fdns <= 1.0)
            || !(self.weight_ctns > 0.0 && self.weight_ctns <= 1.0)
        {
            return Err(CodecError::InvalidConfig(
                "LP weights must be in (0, 1]".into(),
            ));
        }
        if self.lpc_order_fdns == 0 || self.lpc_order_ctns == 0 {
            return Err(CodecError::InvalidConfig(
                "LPC orders must be positive".into(),
            ));
        }
        let positive = |v: f64| v > 0.0 && v.is_finite();
        if !positive(self.bit_budget_scale) || !positive(self.bit_estimate_fit) {
            return Err(CodecError::InvalidConfig(
                "bit_budget_scale and bit_estimate_fit must be positive".into(),
            ));
        }
        if self.phase_bits != 6 {
            // the phase quantizer grid is fixed at 64 levels
            return Err(CodecError::InvalidConfig("phase_bits must be 6".into()));
        }
        Ok(())
    }

    /// Sub-band index owning bin `f`: `edges[b-1] <= f < edges[b]`.
    pub fn band_of_bin(&self, f: usize) -> usize {
        debug_assert!(f < self.num_bins());
        self.subband_edges.iter().position(|&e| f < e).unwrap()
    }

    /// Bin range of sub-band `b`.
    pub fn band_range(&self, b: usize) -> Range<usize> {
        let lo = if b == 0 { 0 } else { self.subband_edges[b - 1] };
        lo..self.subband_edges[b]
    }

    /// Parse a flat `key = value` text file; keys not present keep defaults.
    pub fn from_key_value_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_key_value_str(&text)
    }

    pub fn from_key_value_str(text: &str) -> Result<Self> {
        let mut cfg = CodecConfig::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                CodecError::InvalidConfig(format!("line {}: expected key = value", lineno + 1))
            })?;
            let key = key.trim();
            let value = value.trim();
            let bad = |what: &str| {
                CodecError::InvalidConfig(format!(
                    "line {}: bad {} value '{}'",
                    lineno + 1,
                    what,
                    value
                ))
            };
            match key {
                "sample_rate_hz" => cfg.sample_rate_hz = value.parse().map_err(|_| bad(key))?,
                "hop_n" => cfg.hop_n = value.parse().map_err(|_| bad(key))?,
                "lpc_order_fdns" => cfg.lpc_order_fdns = value.parse().map_err(|_| bad(key))?,
                "lpc_order_ctns" => cfg.lpc_order_ctns = value.parse().map_err(|_| bad(key))?,
                "weight_fdns" => cfg.weight_fdns = value.parse().map_err(|_| bad(key))?,
                "weight_ctns" => cfg.weight_ctns = value.parse().map_err(|_| bad(key))?,
                "ctns_gain_threshold_db" => {
                    cfg.ctns_gain_threshold_db = value.parse().map_err(|_| bad(key))?
                }
                "ctns_start_bin" => cfg.ctns_start_bin = value.parse().map_err(|_| bad(key))?,
                "subband_edges" => cfg.subband_edges = parse_list(value).map_err(|_| bad(key))?,
                "power_factors" => cfg.power_factors = parse_list(value).map_err(|_| bad(key))?,
                "fixed_bits" => cfg.fixed_bits = parse_list(value).map_err(|_| bad(key))?,
                "add_bits" => cfg.add_bits = parse_list(value).map_err(|_| bad(key))?,
                "fer_thresholds" => cfg.fer_thresholds = parse_list(value).map_err(|_| bad(key))?,
                "gain_gate" => cfg.gain_gate = value.parse().map_err(|_| bad(key))?,
                "gate_relax" => cfg.gate_relax = value.parse().map_err(|_| bad(key))?,
                "phase_bits" => cfg.phase_bits = value.parse().map_err(|_| bad(key))?,
                "bit_budget_scale" => cfg.bit_budget_scale = value.parse().map_err(|_| bad(key))?,
                "bit_estimate_fit" => cfg.bit_estimate_fit = value.parse().map_err(|_| bad(key))?,
                other => {
                    return Err(CodecError::InvalidConfig(format!(
                        "line {}: unknown key '{}'",
                        lineno + 1,
                        other
                    )))
                }
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn parse_list<T: std::str::FromStr + Copy + Default>(
    value: &str,
) -> std::result::Result<[T; NUM_SUBBANDS], ()> {
    let parts: Vec<&str> = value.split(',').map(str::trim).collect();
    if parts.len() != NUM_SUBBANDS {
        return Err(());
    }
    let mut out = [T::default(); NUM_SUBBANDS];
    for (slot, p) in out.iter_mut().zip(parts) {
        *slot = p.parse().map_err(|_| ())?;
    }
    Ok(out)
}
