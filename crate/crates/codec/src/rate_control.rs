//! Frame gain, frequency-envelope ratios, adaptive target bits, and the
//! per-subband scale-factor search.

use crate::config::{CodecConfig, NUM_SUBBANDS};
use crate::lpc::FreqEnvelope;
use num_complex::Complex64;

/// Scale-factor grid: 7-bit index on a 0.75 dB step.
pub const SF_STEP_DB: f64 = 0.75;
pub const SF_MIN_DB: f64 = -48.0;
pub const SF_LEVELS: usize = 128;

/// Adaptive bit-allocation result for one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct BitPlan {
    pub target_bits: [u32; NUM_SUBBANDS],
    pub fer: [f64; NUM_SUBBANDS],
    pub frame_gain_db: f64,
}

/// Quantized per-subband gains as grid indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ScaleFactors {
    pub indices: [u8; NUM_SUBBANDS],
}

impl ScaleFactors {
    pub fn db(&self, band: usize) -> f64 {
        SF_MIN_DB + SF_STEP_DB * self.indices[band] as f64
    }

    pub fn linear(&self, band: usize) -> f64 {
        10f64.powf(self.db(band) / 20.0)
    }
}

pub fn grid_db(index: usize) -> f64 {
    SF_MIN_DB + SF_STEP_DB * index as f64
}

/// Frame gain: 20*log10(mean envelope level).
pub fn frame_gain(h: &FreqEnvelope) -> f64 {
    let sum: f64 = h.linear.iter().sum();
    20.0 * (sum / h.linear.len() as f64).log10()
}

/// Per-subband envelope maxima normalized across subbands; sums to one.
pub fn fer(h: &FreqEnvelope, cfg: &CodecConfig) -> [f64; NUM_SUBBANDS] {
    let mut maxima = [0.0f64; NUM_SUBBANDS];
    for (b, m) in maxima.iter_mut().enumerate() {
        *m = cfg.band_range(b).map(|f| h.linear[f]).fold(0.0, f64::max);
    }
    let total: f64 = maxima.iter().sum();
    let mut out = [0.0; NUM_SUBBANDS];
    for (o, m) in out.iter_mut().zip(&maxima) {
        *o = m / total;
    }
    out
}

/// Adaptive target bits: grant the additional bits when the band's FER
/// clears its threshold; a loud frame (gain above the gate) relaxes every
/// threshold by `gate_relax`. The result scales by `bit_budget_scale`.
pub fn target_bits(gain_db: f64, fer: &[f64; NUM_SUBBANDS], cfg: &CodecConfig) -> BitPlan {
    let relax = if gain_db > cfg.gain_gate {
        cfg.gate_relax
    } else {
        0.0
    };
    let mut target = [0u32; NUM_SUBBANDS];
    for b in 0..NUM_SUBBANDS {
        let threshold = cfg.fer_thresholds[b] - relax;
        let add = if fer[b] >= threshold {
            cfg.add_bits[b]
        } else {
            0
        };
        let raw = (cfg.fixed_bits[b] + add) as f64 * cfg.bit_budget_scale;
        target[b] = raw.round() as u32;
    }
    BitPlan {
        target_bits: target,
        fer: *fer,
        frame_gain_db: gain_db,
    }
}

/// Group per-bin energies into quadruples within each band; a ragged tail
/// group keeps whatever bins remain.
pub fn quadruple_energies(bin_energy: &[f64], cfg: &CodecConfig) -> Vec<Vec<f64>> {
    (0..NUM_SUBBANDS)
        .map(|b| {
            let range = cfg.band_range(b);
            bin_energy[range]
                .chunks(4)
                .map(|c| c.iter().sum())
                .collect()
        })
        .collect()
}

pub fn bin_energies_complex(coeffs: &[Complex64]) -> Vec<f64> {
    coeffs.iter().map(|c| c.norm_sqr()).collect()
}

pub fn bin_energies_real(coeffs: &[f64]) -> Vec<f64> {
    coeffs.iter().map(|&x| x * x).collect()
}

/// Bit estimate for one band at linear gain `g`: each quadruple costs
/// max(1, 0.5*log2(E/g^2)) * k_fit.
pub fn estimate_bits(quad_energies: &[f64], gain_linear: f64, k_fit: f64) -> f64 {
    let g2 = gain_linear * gain_linear;
    quad_energies
        .iter()
        .map(|&e| (0.5 * (e / g2).max(1e-300).log2()).max(1.0) * k_fit)
        .sum::<f64>()
}

/// Dichotomic search (32 iterations) for the grid gain whose bit estimate is
/// closest to the band's target; independent per band, deterministic.
pub fn scale_factor_search(
    band_quads: &[Vec<f64>],
    plan: &BitPlan,
    cfg: &CodecConfig,
) -> ScaleFactors {
    let mut indices = [0u8; NUM_SUBBANDS];
    for b in 0..NUM_SUBBANDS {
        indices[b] = search_band(
            &band_quads[b],
            plan.target_bits[b] as f64,
            cfg.bit_estimate_fit,
        );
    }
    ScaleFactors { indices }
}

fn search_band(quads: &[f64], target: f64, k_fit: f64) -> u8 {
    if quads.iter().all(|&e| e == 0.0) {
        return 0;
    }
    let est = |db: f64| estimate_bits(quads, 10f64.powf(db / 20.0), k_fit);
    let lo_db = grid_db(0);
    let hi_db = grid_db(SF_LEVELS - 1);
    if est(lo_db) < target {
        // even the finest gain cannot spend the target
        return 0;
    }
    if est(hi_db) >= target {
        return (SF_LEVELS - 1) as u8;
    }
    let (mut lo, mut hi) = (lo_db, hi_db);
    for _ in 0..32 {
        let mid = 0.5 * (lo + hi);
        if est(mid) >= target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let crossing = 0.5 * (lo + hi);
    let c = (((crossing - SF_MIN_DB) / SF_STEP_DB).floor() as i64).clamp(0, SF_LEVELS as i64 - 2)
        as usize;
    // pick the closer neighbour; ties go to the larger index
    let d_lo = (est(grid_db(c)) - target).abs();
    let d_hi = (est(grid_db(c + 1)) - target).abs();
    if d_hi <= d_lo {
        (c + 1) as u8
    } else {
        c as u8
    }
}

/// Divide each coefficient by its band's linear gain.
pub fn apply_scaling_complex(coeffs: &mut [Complex64], sf: &ScaleFactors, cfg: &CodecConfig) {
    for b in 0..NUM_SUBBANDS {
        let g = sf.linear(b);
        for c in &mut coeffs[cfg.band_range(b)] {
            *c /= g;
        }
    }
}

pub fn remove_scaling_complex(coeffs: &mut [Complex64], sf: &ScaleFactors, cfg: &CodecConfig) {
    for b in 0..NUM_SUBBANDS {
        let g = sf.linear(b);
        for c in &mut coeffs[cfg.band_range(b)] {
            *c *= g;
        }
    }
}

pub fn apply_scaling_real(coeffs: &mut [f64], sf: &ScaleFactors, cfg: &CodecConfig) {
    for b in 0..NUM_SUBBANDS {
        let g = sf.linear(b);
        for c in &mut coeffs[cfg.band_range(b)] {
            *c /= g;
        }
    }
}

pub fn remove_scaling_real(coeffs: &mut [f64], sf: &ScaleFactors, cfg: &CodecConfig) {
    for b in 0..NUM_SUBBANDS {
        let g = sf.linear(b);
        for c in &mut coeffs[cfg.band_range(b)] {
            *c *= g;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn envelope(values: Vec<f64>) -> FreqEnvelope {
        let db = values.iter().map(|h| 20.0 * h.log10()).collect();
        FreqEnvelope { linear: values, db }
    }

    #[test]
    fn frame_gain_examples() {
        assert!(frame_gain(&envelope(vec![1.0; 512])).abs() < 1e-12);
        assert!((frame_gain(&envelope(vec![10.0; 512])) - 20.0).abs() < 1e-12);
    }

    #[test]
    fn frame_gain_matches_direct_formula() {
        let mut rng = StdRng::seed_from_u64(1);
        let h: Vec<f64> = (0..512).map(|_| rng.gen_range(0.01..100.0)).collect();
        let want = 20.0 * (h.iter().sum::<f64>() / 512.0).log10();
        assert!((frame_gain(&envelope(h)) - want).abs() < 1e-12);
    }

    #[test]
    fn flat_envelope_gives_uniform_fer() {
        let cfg = CodecConfig::default();
        let f = fer(&envelope(vec![3.0; 512]), &cfg);
        for v in f {
            assert!((v - 0.125).abs() < 1e-12);
        }
    }

    #[test]
    fn dominant_peak_dominates_fer() {
        let cfg = CodecConfig::default();
        let mut h = vec![1.0; 512];
        h[150] = 1000.0; // inside band 3 (140..200)
        let f = fer(&envelope(h), &cfg);
        assert!(f[3] > 0.99);
    }

    #[test]
    fn fer_sums_to_one() {
        let cfg = CodecConfig::default();
        let mut rng = StdRng::seed_from_u64(2);
        for _ in 0..10 {
            let h: Vec<f64> = (0..512).map(|_| rng.gen_range(0.001..50.0)).collect();
            let f = fer(&envelope(h), &cfg);
            assert!((f.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn target_bits_paper_examples() {
        let cfg = CodecConfig::default();
        let mut f = [0.0; NUM_SUBBANDS];

        f[0] = 0.2; // above 0.125 threshold at low gain
        assert_eq!(target_bits(5.0, &f, &cfg).target_bits[0], 345);

        f[0] = 0.11; // below 0.125, but the G > 9.5 relaxation drops it to 0.1
        assert_eq!(target_bits(10.0, &f, &cfg).target_bits[0], 345);
        assert_eq!(target_bits(5.0, &f, &cfg).target_bits[0], 338);

        let mut f7 = [0.0; NUM_SUBBANDS];
        f7[7] = 0.05; // below 0.07 at low gain
        assert_eq!(target_bits(0.0, &f7, &cfg).target_bits[7], 3);
    }

    #[test]
    fn target_bits_full_truth_table() {
        let cfg = CodecConfig::default();
        for b in 0..NUM_SUBBANDS {
            for &(gain, relax) in &[(0.0, 0.0), (9.5, 0.0), (9.6, cfg.gate_relax)] {
                let threshold = cfg.fer_thresholds[b] - relax;
                for &(fer_v, expect_add) in &[
                    (threshold - 1e-6, false),
                    (threshold, true),
                    (threshold + 1e-6, true),
                ] {
                    let mut f = [0.0; NUM_SUBBANDS];
                    f[b] = fer_v;
                    let plan = target_bits(gain, &f, &cfg);
                    let want = cfg.fixed_bits[b] + if expect_add { cfg.add_bits[b] } else { 0 };
                    assert_eq!(
                        plan.target_bits[b], want,
                        "band {} gain {} fer {}",
                        b, gain, fer_v
                    );
                }
            }
        }
    }

    #[test]
    fn budget_scale_rounds_targets() {
        let mut cfg = CodecConfig::default();
        cfg.bit_budget_scale = 0.5;
        let f = [0.2; NUM_SUBBANDS];
        let plan = target_bits(0.0, &f, &cfg);
        assert_eq!(plan.target_bits[0], 173); // round(345 * 0.5)
        assert_eq!(plan.target_bits[7], 3); // round(6 * 0.5)
    }

    #[test]
    fn zero_energy_band_gets_grid_minimum() {
        let cfg = CodecConfig::default();
        let quads = vec![vec![0.0; 10]; NUM_SUBBANDS];
        let plan = target_bits(0.0, &[0.2; NUM_SUBBANDS], &cfg);
        let sf = scale_factor_search(&quads, &plan, &cfg);
        assert!(sf.indices.iter().all(|&i| i == 0));
        // floor contract: every quadruple costs k_fit
        assert_eq!(
            estimate_bits(&quads[0], 1.0, cfg.bit_estimate_fit),
            10.0 * cfg.bit_estimate_fit
        );
    }

    #[test]
    fn estimator_is_scale_invariant() {
        let mut rng = StdRng::seed_from_u64(3);
        let quads: Vec<f64> = (0..20).map(|_| rng.gen_range(0.0..100.0)).collect();
        for _ in 0..20 {
            let g = rng.gen_range(0.01..10.0);
            let a = estimate_bits(&quads, g, 4.0);
            let doubled: Vec<f64> = quads.iter().map(|e| 2.0 * e).collect();
            let b = estimate_bits(&doubled, g * std::f64::consts::SQRT_2, 4.0);
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn doubled_energy_shifts_gain_about_3db() {
        let cfg = CodecConfig::default();
        let mut rng = StdRng::seed_from_u64(4);
        let quads: Vec<f64> = (0..13).map(|_| rng.gen_range(1.0..1000.0)).collect();
        let target = 200.0;
        let a = search_band(&quads, target, cfg.bit_estimate_fit) as f64;
        let doubled: Vec<f64> = quads.iter().map(|e| 2.0 * e).collect();
        let b = search_band(&doubled, target, cfg.bit_estimate_fit) as f64;
        let shift_db = (b - a) * SF_STEP_DB;
        assert!(
            (shift_db - 3.01).abs() <= SF_STEP_DB + 1e-9,
            "shift {}",
            shift_db
        );
    }

    #[test]
    fn larger_target_never_raises_gain() {
        let cfg = CodecConfig::default();
        let mut rng = StdRng::seed_from_u64(5);
        for _ in 0..20 {
            let quads: Vec<f64> = (0..15).map(|_| rng.gen_range(0.0..500.0)).collect();
            let mut prev = u8::MAX;
            for target in (5..400).step_by(7) {
                let idx = search_band(&quads, target as f64, cfg.bit_estimate_fit);
                assert!(idx <= prev, "target {} idx {} prev {}", target, idx, prev);
                prev = idx;
            }
        }
    }

    #[test]
    fn scaling_round_trip_and_band_edges() {
        let cfg = CodecConfig::default();
        let mut rng = StdRng::seed_from_u64(6);
        let orig: Vec<Complex64> = (0..512)
            .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let sf = ScaleFactors {
            indices: [64, 70, 10, 127, 0, 90, 33, 100],
        };
        let mut work = orig.clone();
        apply_scaling_complex(&mut work, &sf, &cfg);
        // bin 40 belongs to band 1, bin 39 to band 0
        assert!((work[39] * sf.linear(0) - orig[39]).norm() < 1e-12);
        assert!((work[40] * sf.linear(1) - orig[40]).norm() < 1e-12);
        remove_scaling_complex(&mut work, &sf, &cfg);
        for (a, b) in work.iter().zip(&orig) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn unit_gain_is_identity() {
        let cfg = CodecConfig::default();
        let sf = ScaleFactors { indices: [64; 8] }; // -48 + 64*0.75 = 0 dB
        assert!(sf.linear(0) == 1.0);
        let mut v = vec![1.25f64; 512];
        apply_scaling_real(&mut v, &sf, &cfg);
        assert!(v.iter().all(|&x| x == 1.25));
    }
}
