//! Sine window, MDCT/MCLT transform kernels, overlap-add, and time-domain
//! aliasing augmentation.
//!
//! Conventions, pinned by the round-trip and projection tests:
//! the cosine basis `C[k][n] = cos(pi*(2n+1+N)(2k+1)/(4N)) / sqrt(N)` has
//! orthonormal rows (C*C^T = I), which makes C^T*C an exact projection and
//! keeps the TDA augmentation idempotent. The MCLT pairs C with the matching
//! sine basis; its inverse C^T*Re + S^T*Im recovers the windowed buffer at
//! unit gain. The critically sampled cosine path reconstructs at half
//! amplitude under this scaling, so synthesis weights aliased halves by 2.

use crate::error::{CodecError, Result};
use num_complex::Complex64;
use rustfft::{Fft, FftDirection, FftPlanner};
use std::f64::consts::PI;
use std::sync::Arc;

/// Synthesis gain of aliased (cosine-path) halves under the orthonormal basis.
pub const ALIASED_SYNTH_GAIN: f64 = 2.0;

/// Analysis/synthesis sine window of length `window_len`.
pub fn sine_window(window_len: usize) -> Vec<f64> {
    (0..window_len)
        .map(|n| (PI * (n as f64 + 0.5) / window_len as f64).sin())
        .collect()
}

/// Sine window split into its left/right halves.
#[derive(Debug, Clone)]
pub struct WindowPair {
    w: Vec<f64>,
    hop: usize,
}

impl WindowPair {
    pub fn new(hop_n: usize) -> Self {
        WindowPair {
            w: sine_window(2 * hop_n),
            hop: hop_n,
        }
    }

    pub fn full(&self) -> &[f64] {
        &self.w
    }

    /// Left half W1.
    pub fn w1(&self) -> &[f64] {
        &self.w[..self.hop]
    }

    /// Right half W2.
    pub fn w2(&self) -> &[f64] {
        &self.w[self.hop..]
    }

    pub fn apply(&self, buffer: &[f64]) -> Vec<f64> {
        debug_assert_eq!(buffer.len(), self.w.len());
        buffer.iter().zip(&self.w).map(|(x, w)| x * w).collect()
    }
}

/// Which coding path produced a frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FrameMode {
    Mdct,
    Mclt,
}

/// Whether a pair of synthesis halves carries TDA terms.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HalvesKind {
    /// Output of `imdct` or `tdaa_augment`: contains TDA terms.
    Aliased,
    /// Output of `imclt`: alias-free windowed signal.
    Clean,
}

/// Per-frame synthesis halves plus their aliasing state.
#[derive(Debug, Clone)]
pub struct FrameHalves {
    pub kind: HalvesKind,
    pub left: Vec<f64>,
    pub right: Vec<f64>,
}

/// MDCT/MCLT kernels for one transform size, FFT-backed.
pub struct Mclt {
    hop: usize,
    fft_2n: Arc<dyn Fft<f64>>,
    fft_4n: Arc<dyn Fft<f64>>,
    /// e^{i*pi*n/(2N)} for n < 2N.
    pre_fwd: Vec<Complex64>,
    /// e^{i*pi*(N+1)(2k+1)/(4N)} / sqrt(N) for k < N.
    post_fwd: Vec<Complex64>,
    /// e^{i*pi*(2n+1+N)/(4N)} / sqrt(N) for n < 2N.
    post_inv: Vec<Complex64>,
}

impl Mclt {
    pub fn new(hop_n: usize) -> Self {
        assert!(hop_n > 0);
        let n = hop_n as f64;
        let mut planner = FftPlanner::new();
        let fft_2n = planner.plan_fft(2 * hop_n, FftDirection::Inverse);
        let fft_4n = planner.plan_fft(4 * hop_n, FftDirection::Inverse);
        let scale = 1.0 / n.sqrt();
        let pre_fwd = (0..2 * hop_n)
            .map(|i| Complex64::from_polar(1.0, PI * i as f64 / (2.0 * n)))
            .collect();
        let post_fwd = (0..hop_n)
            .map(|k| Complex64::from_polar(scale, PI * (n + 1.0) * (2 * k + 1) as f64 / (4.0 * n)))
            .collect();
        let post_inv = (0..2 * hop_n)
            .map(|i| Complex64::from_polar(scale, PI * ((2 * i) as f64 + 1.0 + n) / (4.0 * n)))
            .collect();
        Mclt {
            hop: hop_n,
            fft_2n,
            fft_4n,
            pre_fwd,
            post_fwd,
            post_inv,
        }
    }

    pub fn hop(&self) -> usize {
        self.hop
    }

    fn check_len(&self, len: usize, expected: usize) -> Result<()> {
        if len != expected {
            return Err(CodecError::LengthMismatch { expected, got: len });
        }
        Ok(())
    }

    /// MCLT of a pre-windowed 2N buffer: real part MDCT, imaginary part MDST.
    pub fn mclt_forward(&self, buffer: &[f64]) -> Result<Vec<Complex64>> {
        self.check_len(buffer.len(), 2 * self.hop)?;
        let mut work: Vec<Complex64> = buffer
            .iter()
            .zip(&self.pre_fwd)
            .map(|(&x, t)| t * x)
            .collect();
        self.fft_2n.process(&mut work);
        Ok(self
            .post_fwd
            .iter()
            .zip(&work)
            .map(|(t, u)| t * u)
            .collect())
    }

    /// MDCT of a pre-windowed 2N buffer.
    pub fn mdct_forward(&self, buffer: &[f64]) -> Result<Vec<f64>> {
        Ok(self.mclt_forward(buffer)?.iter().map(|c| c.re).collect())
    }

    /// Shared inverse kernel: y[n] = Re{ post_inv[n] * sum_k g[k] e^{i*pi*(2n+1+N)k/(2N)} }.
    fn inverse_kernel(&self, g: &[Complex64]) -> Vec<f64> {
        let mut work = vec![Complex64::new(0.0, 0.0); 4 * self.hop];
        work[..g.len()].copy_from_slice(g);
        self.fft_4n.process(&mut work);
        (0..2 * self.hop)
            .map(|i| {
                let m = (2 * i + 1 + self.hop) % (4 * self.hop);
                (self.post_inv[i] * work[m]).re
            })
            .collect()
    }

    /// Inverse MDCT, C^T * coeffs, split into aliased halves.
    pub fn imdct(&self, coeffs: &[f64]) -> Result<FrameHalves> {
        self.check_len(coeffs.len(), self.hop)?;
        let g: Vec<Complex64> = coeffs.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        let y = self.inverse_kernel(&g);
        Ok(FrameHalves {
            kind: HalvesKind::Aliased,
            left: y[..self.hop].to_vec(),
            right: y[self.hop..].to_vec(),
        })
    }

    /// Inverse MCLT, C^T*Re + S^T*Im: recovers the windowed buffer without
    /// aliasing.
    pub fn imclt(&self, coeffs: &[Complex64]) -> Result<FrameHalves> {
        self.check_len(coeffs.len(), self.hop)?;
        let g: Vec<Complex64> = coeffs.iter().map(|c| c.conj()).collect();
        let y = self.inverse_kernel(&g);
        Ok(FrameHalves {
            kind: HalvesKind::Clean,
            left: y[..self.hop].to_vec(),
            right: y[self.hop..].to_vec(),
        })
    }

    /// Inject artificial TDA terms into clean halves: [y1; y2] -> C^T*C*[y1; y2].
    pub fn tdaa_augment(&self, left: &[f64], right: &[f64]) -> Result<FrameHalves> {
        self.check_len(left.len(), self.hop)?;
        self.check_len(right.len(), self.hop)?;
        let mut buf = Vec::with_capacity(2 * self.hop);
        buf.extend_from_slice(left);
        buf.extend_from_slice(right);
        let coeffs = self.mdct_forward(&buf)?;
        self.imdct(&coeffs)
    }
}

/// Plain overlap-add of one hop: W2*right + W1*left.
pub fn ola(right: &[f64], left: &[f64], window: &WindowPair) -> Vec<f64> {
    debug_assert_eq!(right.len(), left.len());
    window
        .w2()
        .iter()
        .zip(right)
        .zip(window.w1().iter().zip(left))
        .map(|((w2, r), (w1, l))| w2 * r + w1 * l)
        .collect()
}

/// One overlap-add boundary between consecutive decoded frames, applying the
/// modified OLA at mode switches: an MDCT neighbor forces the MCLT frame's
/// facing half through `tdaa_augment` so the TDA terms cancel.
pub fn ola_boundary(
    prev: &FrameHalves,
    cur: &FrameHalves,
    mclt: &Mclt,
    window: &WindowPair,
) -> Result<Vec<f64>> {
    let (right, rgain) = match (prev.kind, cur.kind) {
        (HalvesKind::Aliased, _) => (prev.right.clone(), ALIASED_SYNTH_GAIN),
        (HalvesKind::Clean, HalvesKind::Clean) => (prev.right.clone(), 1.0),
        (HalvesKind::Clean, HalvesKind::Aliased) => {
            // case 2: MCLT frame followed by MDCT frame
            let aug = mclt.tdaa_augment(&prev.left, &prev.right)?;
            (aug.right, ALIASED_SYNTH_GAIN)
        }
    };
    let (left, lgain) = match (prev.kind, cur.kind) {
        (_, HalvesKind::Aliased) => (cur.left.clone(), ALIASED_SYNTH_GAIN),
        (HalvesKind::Clean, HalvesKind::Clean) => (cur.left.clone(), 1.0),
        (HalvesKind::Aliased, HalvesKind::Clean) => {
            // case 1: MDCT frame followed by MCLT frame
            let aug = mclt.tdaa_augment(&cur.left, &cur.right)?;
            (aug.left, ALIASED_SYNTH_GAIN)
        }
    };
    Ok(window
        .w2()
        .iter()
        .zip(&right)
        .zip(window.w1().iter().zip(&left))
        .map(|((w2, r), (w1, l))| w2 * r * rgain + w1 * l * lgain)
        .collect())
}

/// Reconstruct a stream of decoded frame halves, applying TDAA at mode
/// switches. Frames must pair MDCT mode with aliased halves and MCLT mode
/// with clean halves; output length is (frames - 1) hops.
pub fn reconstruct_stream(
    frames: &[FrameHalves],
    modes: &[FrameMode],
    mclt: &Mclt,
    window: &WindowPair,
) -> Result<Vec<f64>> {
    if frames.len() != modes.len() {
        return Err(CodecError::LengthMismatch {
            expected: frames.len(),
            got: modes.len(),
        });
    }
    for (i, (f, m)) in frames.iter().zip(modes).enumerate() {
        let ok = matches!(
            (m, f.kind),
            (FrameMode::Mdct, HalvesKind::Aliased) | (FrameMode::Mclt, HalvesKind::Clean)
        );
        if !ok {
            return Err(CodecError::CorruptStream {
                frame: Some(i),
                detail: format!("mode {:?} does not match halves kind {:?}", m, f.kind),
            });
        }
    }
    let mut out = Vec::with_capacity(frames.len().saturating_sub(1) * mclt.hop());
    for pair in frames.windows(2) {
        out.extend(ola_boundary(&pair[0], &pair[1], mclt, window)?);
    }
    Ok(out)
}

/// Analyze hops into per-frame windowed 2N buffers (prepending one hop of
/// zero history and appending nothing; callers append a flush hop when they
/// need the final hop drained).
pub fn analysis_buffers(hops: &[Vec<f64>], window: &WindowPair, hop_n: usize) -> Vec<Vec<f64>> {
    let mut prev = vec![0.0; hop_n];
    let mut out = Vec::with_capacity(hops.len());
    for h in hops {
        let mut buf = Vec::with_capacity(2 * hop_n);
        buf.extend_from_slice(&prev);
        buf.extend_from_slice(h);
        out.push(window.apply(&buf));
        prev = h.clone();
    }
    out
}

/// Dense reference bases; the independent oracle for the FFT fast path.
pub mod dense {
    use super::*;

    /// Row-major N x 2N cosine basis, orthonormal rows.
    pub fn cos_basis(hop_n: usize) -> Vec<Vec<f64>> {
        basis(hop_n, f64::cos)
    }

    /// Row-major N x 2N sine basis, orthonormal rows.
    pub fn sin_basis(hop_n: usize) -> Vec<Vec<f64>> {
        basis(hop_n, f64::sin)
    }

    fn basis(hop_n: usize, f: fn(f64) -> f64) -> Vec<Vec<f64>> {
        let n = hop_n as f64;
        let scale = 1.0 / n.sqrt();
        (0..hop_n)
            .map(|k| {
                (0..2 * hop_n)
                    .map(|i| {
                        scale * f(PI * (2 * i + 1 + hop_n) as f64 * (2 * k + 1) as f64 / (4.0 * n))
                    })
                    .collect()
            })
            .collect()
    }

    pub fn mat_vec(m: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
        m.iter()
            .map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn mat_t_vec(m: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
        let cols = m[0].len();
        let mut out = vec![0.0; cols];
        for (row, &xi) in m.iter().zip(x) {
            for (o, &r) in out.iter_mut().zip(row) {
                *o += r * xi;
            }
        }
        out
    }
}
