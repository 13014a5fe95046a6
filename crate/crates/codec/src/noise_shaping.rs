//! Frequency-domain noise shaping (spectral flattening by the LPC envelope)
//! and complex-LPC temporal noise shaping across frequency.

use crate::config::CodecConfig;
use crate::lpc::{self, ComplexLpModel, FreqEnvelope};
use crate::vq::RootQuantizer;
use num_complex::Complex64;

/// Cap on reported prediction gain (dB).
pub const GAIN_CAP_DB: f64 = 99.0;

/// Outcome of the CTNS analysis for one frame.
#[derive(Debug, Clone)]
pub struct CtnsDecision {
    pub active: bool,
    /// Pre/post energy ratio in dB of the quantized prediction-error filter;
    /// -inf for a degenerate (near-silent) band.
    pub prediction_gain_db: f64,
    /// Decoded (quantized) model; present only when a model was estimated.
    pub model: Option<ComplexLpModel>,
    /// Root VQ stage indices matching `model`.
    pub indices: Option<Vec<u16>>,
}

/// Divide each coefficient by the (positive, real) envelope value: dB-domain
/// subtraction of the envelope, phase preserved.
pub fn fdns_apply(x: &[Complex64], h: &FreqEnvelope) -> Vec<Complex64> {
    debug_assert_eq!(x.len(), h.linear.len());
    x.iter().zip(&h.linear).map(|(c, &g)| c / g).collect()
}

pub fn fdns_invert(r: &[Complex64], h: &FreqEnvelope) -> Vec<Complex64> {
    debug_assert_eq!(r.len(), h.linear.len());
    r.iter().zip(&h.linear).map(|(c, &g)| c * g).collect()
}

/// Real-path variants used by the MDCT (CTNS-off) route.
pub fn fdns_apply_real(x: &[f64], h: &FreqEnvelope) -> Vec<f64> {
    x.iter().zip(&h.linear).map(|(c, &g)| c / g).collect()
}

pub fn fdns_invert_real(r: &[f64], h: &FreqEnvelope) -> Vec<f64> {
    r.iter().zip(&h.linear).map(|(c, &g)| c * g).collect()
}

/// Prediction gain of the filter `a` over the band, in dB (pre/post energy
/// ratio). The first `order` outputs are excluded from both sums so the
/// zero-state transient does not bias the ratio.
pub fn prediction_gain(band: &[Complex64], a: &[Complex64]) -> f64 {
    let order = a.len() - 1;
    if band.len() <= order {
        return f64::NEG_INFINITY;
    }
    let e = fir_across(band, a);
    let num: f64 = band[order..].iter().map(|c| c.norm_sqr()).sum();
    let den: f64 = e[order..].iter().map(|c| c.norm_sqr()).sum();
    if den <= 0.0 {
        return GAIN_CAP_DB;
    }
    (10.0 * (num.max(1e-300) / den).log10()).min(GAIN_CAP_DB)
}

fn fir_across(band: &[Complex64], a: &[Complex64]) -> Vec<Complex64> {
    (0..band.len())
        .map(|i| {
            let mut acc = Complex64::new(0.0, 0.0);
            for (k, &c) in a.iter().enumerate().take(i + 1) {
                acc += c * band[i - k];
            }
            acc
        })
        .collect()
}

/// Run the complex LP analysis over the residual band and decide whether the
/// CTNS engages: estimate, weight, quantize the roots, then measure the
/// quantized filter's gain. Activation demands the residual level drop more
/// than |threshold| dB below the band level.
pub fn ctns_analyze(
    residual: &[Complex64],
    cfg: &CodecConfig,
    rootq: &RootQuantizer,
) -> CtnsDecision {
    let start = cfg.ctns_start_bin;
    let order = cfg.lpc_order_ctns;
    let band = &residual[start..];
    let inactive = |gain: f64| CtnsDecision {
        active: false,
        prediction_gain_db: gain,
        model: None,
        indices: None,
    };
    if band.len() <= order {
        return inactive(f64::NEG_INFINITY);
    }
    let mean_power = band.iter().map(|c| c.norm_sqr()).sum::<f64>() / band.len() as f64;
    if mean_power < 1e-20 {
        return inactive(f64::NEG_INFINITY);
    }
    let roots = match analysis_roots(band, order, cfg.weight_ctns) {
        Some(r) => r,
        None => return inactive(f64::NEG_INFINITY),
    };
    let indices = rootq.quantize(&roots);
    let model = match rootq.dequantize(&indices) {
        Ok(m) => m,
        Err(_) => return inactive(f64::NEG_INFINITY),
    };
    let gain = prediction_gain(band, &model.coeffs);
    // post/pre level change must clear the (negative) threshold
    let active = -gain < cfg.ctns_gain_threshold_db;
    CtnsDecision {
        active,
        prediction_gain_db: gain,
        model: Some(model),
        indices: Some(indices),
    }
}

/// Estimate, weight, and stabilize the across-frequency LP roots of a band;
/// the common front half of `ctns_analyze`, also used to harvest codebook
/// training vectors.
pub fn analysis_roots(band: &[Complex64], order: usize, gamma: f64) -> Option<Vec<Complex64>> {
    let (r, degenerate) = lpc::autocorr_complex(band, order);
    if degenerate {
        return None;
    }
    let sol = lpc::levinson_complex(&r);
    let weighted = lpc::weight_lpc_complex(&sol.coeffs, gamma);
    let mut roots = lpc::poly_roots(&weighted);
    lpc::stabilize_roots(&mut roots, crate::vq::ROOT_MAX_MAG);
    Some(roots)
}

/// Encoder-side CTNS: prediction-error (all-zero) filtering across ascending
/// frequency with zero initial state at `start_bin`; bins below pass through.
pub fn ctns_filter(r: &[Complex64], a: &[Complex64], start_bin: usize) -> Vec<Complex64> {
    let mut out = r.to_vec();
    let filtered = fir_across(&r[start_bin..], a);
    out[start_bin..].copy_from_slice(&filtered);
    out
}

/// Decoder-side CTNS: the exact inverse all-pole recursion.
pub fn ctns_inverse(rf: &[Complex64], a: &[Complex64], start_bin: usize) -> Vec<Complex64> {
    let mut out = rf.to_vec();
    let order = a.len() - 1;
    for i in start_bin..rf.len() {
        let mut acc = rf[i];
        for k in 1..=order {
            if i >= start_bin + k {
                acc -= a[k] * out[i - k];
            }
        }
        out[i] = acc;
    }
    out
}
