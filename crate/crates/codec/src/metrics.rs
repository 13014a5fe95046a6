//! Objective quality measures: segmental SNR and a pre-echo index.

use crate::error::{CodecError, Result};

pub const SEGSNR_MIN_DB: f64 = -10.0;
pub const SEGSNR_MAX_DB: f64 = 65.0;
/// Sentinel floor for the pre-echo index when there is no error energy.
pub const PREECHO_FLOOR_DB: f64 = -99.0;

#[derive(Debug, Clone)]
pub struct SegSnrReport {
    pub per_segment: Vec<f64>,
    pub mean: f64,
    pub seg_len: usize,
}

/// Mean of per-segment SNRs, each clamped to [-10, 65] dB. Zero-energy
/// reference segments are skipped; the trailing partial segment is ignored.
pub fn segsnr(reference: &[f64], test: &[f64], seg_len: usize) -> Result<SegSnrReport> {
    if reference.len() != test.len() {
        return Err(CodecError::LengthMismatch {
            expected: reference.len(),
            got: test.len(),
        });
    }
    assert!(seg_len > 0);
    let mut per_segment = Vec::new();
    for (r, t) in reference
        .chunks_exact(seg_len)
        .zip(test.chunks_exact(seg_len))
    {
        let sig: f64 = r.iter().map(|x| x * x).sum();
        if sig <= 0.0 {
            continue;
        }
        let err: f64 = r.iter().zip(t).map(|(x, y)| (x - y) * (x - y)).sum();
        let snr = if err <= 0.0 {
            SEGSNR_MAX_DB
        } else {
            (10.0 * (sig / err).log10()).clamp(SEGSNR_MIN_DB, SEGSNR_MAX_DB)
        };
        per_segment.push(snr);
    }
    let mean = if per_segment.is_empty() {
        0.0
    } else {
        per_segment.iter().sum::<f64>() / per_segment.len() as f64
    };
    Ok(SegSnrReport {
        per_segment,
        mean,
        seg_len,
    })
}

/// Pre-echo index: mean error energy in the `window` samples before each
/// onset, relative to the mean error energy overall, in dB. Lower means less
/// pre-echo; invariant to a common gain on both inputs.
pub fn preecho_index(
    reference: &[f64],
    test: &[f64],
    onsets: &[usize],
    window: usize,
) -> Result<f64> {
    if reference.len() != test.len() {
        return Err(CodecError::LengthMismatch {
            expected: reference.len(),
            got: test.len(),
        });
    }
    let err: Vec<f64> = reference
        .iter()
        .zip(test)
        .map(|(r, t)| (r - t) * (r - t))
        .collect();
    let total: f64 = err.iter().sum();
    if total <= 0.0 || reference.is_empty() {
        return Ok(PREECHO_FLOOR_DB);
    }
    let overall_rate = total / err.len() as f64;
    let mut pre = 0.0;
    let mut pre_n = 0usize;
    for &o in onsets {
        let lo = o.saturating_sub(window);
        pre += err[lo..o.min(err.len())].iter().sum::<f64>();
        pre_n += o.min(err.len()) - lo;
    }
    if pre_n == 0 {
        return Ok(PREECHO_FLOOR_DB);
    }
    let pre_rate = pre / pre_n as f64;
    if pre_rate <= 0.0 {
        return Ok(PREECHO_FLOOR_DB);
    }
    Ok((10.0 * (pre_rate / overall_rate).log10()).max(PREECHO_FLOOR_DB))
}
