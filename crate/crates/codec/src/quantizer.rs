//! Unified non-uniform magnitude quantizer with per-subband power factors,
//! plus 6-bit phase and 1-bit sign quantization.

use std::f64::consts::PI;

pub const PHASE_LEVELS: u32 = 64;
const MAG_SATURATE: u32 = 1 << 30;

/// I_m = floor(A^p + 0.48), identical for real and complex inputs of equal
/// magnitude.
pub fn quantize_mag(a: f64, p: f64) -> u32 {
    debug_assert!(a >= 0.0);
    let v = a.powf(p) + 0.48;
    if v >= MAG_SATURATE as f64 {
        MAG_SATURATE
    } else {
        v.floor() as u32
    }
}

/// Reconstruction: I^{1/p}, with zero mapping to zero.
pub fn dequantize_mag(i: u32, p: f64) -> f64 {
    if i == 0 {
        0.0
    } else {
        (i as f64).powf(1.0 / p)
    }
}

/// Uniform 6-bit phase grid anchored at zero with wrap-around indexing.
pub fn quantize_phase(theta: f64) -> u8 {
    let step = 2.0 * PI / PHASE_LEVELS as f64;
    let k = (theta / step).round() as i64;
    (k.rem_euclid(PHASE_LEVELS as i64)) as u8
}

/// Grid centres mapped back into (-pi, pi].
pub fn dequantize_phase(index: u8) -> f64 {
    debug_assert!((index as u32) < PHASE_LEVELS);
    let step = 2.0 * PI / PHASE_LEVELS as f64;
    let theta = index as f64 * step;
    if theta > PI {
        theta - 2.0 * PI
    } else {
        theta
    }
}

/// Sign bit: set for negative values.
pub fn quantize_sign(x: f64) -> bool {
    x < 0.0
}

pub fn apply_sign(mag: f64, negative: bool) -> f64 {
    if negative {
        -mag
    } else {
        mag
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn magnitude_formula_examples() {
        assert_eq!(quantize_mag(0.0, 4.0 / 3.0), 0);
        assert_eq!(quantize_mag(1.0, 4.0 / 3.0), 1); // floor(1.48)
        assert_eq!(quantize_mag(2.5, 4.0 / 3.0), 3); // floor(2.5^{4/3}+0.48) = floor(3.873)
    }

    #[test]
    fn dequantize_basics() {
        assert_eq!(dequantize_mag(0, 4.0 / 3.0), 0.0);
        assert_eq!(dequantize_mag(1, 4.0 / 3.0), 1.0);
    }

    #[test]
    fn requantize_is_fixpoint_over_index_sweep() {
        for &p in &[4.0 / 3.0, 1.0, 0.75] {
            for i in 0..=10_000u32 {
                let a = dequantize_mag(i, p);
                assert_eq!(quantize_mag(a, p), i, "p={} i={}", p, i);
            }
        }
    }

    #[test]
    fn phase_grid_examples() {
        assert_eq!(quantize_phase(0.0), 0);
        assert_eq!(dequantize_phase(0), 0.0);
        assert_eq!(quantize_phase(PI), 32);
        assert!((dequantize_phase(32) - PI).abs() < 1e-15);
    }

    #[test]
    fn sign_examples() {
        assert!(quantize_sign(-2.0));
        assert!(!quantize_sign(0.0));
        assert_eq!(apply_sign(3.0, true), -3.0);
        assert_eq!(apply_sign(3.0, false), 3.0);
    }

    proptest! {
        #[test]
        fn quantization_is_monotone(a1 in 0.0..1000.0f64, a2 in 0.0..1000.0f64) {
            for &p in &[4.0/3.0, 1.0, 0.75] {
                let (lo, hi) = if a1 <= a2 { (a1, a2) } else { (a2, a1) };
                prop_assert!(quantize_mag(lo, p) <= quantize_mag(hi, p));
            }
        }

        #[test]
        fn phase_error_bounded(theta in -PI..PI) {
            let idx = quantize_phase(theta);
            let back = dequantize_phase(idx);
            let mut err = (theta - back).abs();
            if err > PI {
                err = 2.0 * PI - err;
            }
            prop_assert!(err <= PI / PHASE_LEVELS as f64 + 1e-12);
        }

        #[test]
        fn reconstruction_stays_in_cell(a in 0.0..500.0f64) {
            for &p in &[4.0/3.0, 1.0, 0.75] {
                let i = quantize_mag(a, p);
                let back = dequantize_mag(i, p);
                // cell bound: A^p lands in [I-0.48, I+0.52)
                let lo = if i == 0 { 0.0 } else { ((i as f64) - 0.48).powf(1.0/p) };
                let hi = ((i as f64) + 0.52).powf(1.0/p);
                prop_assert!(a >= lo - 1e-9 && a <= hi + 1e-9);
                let bound = (a - lo).max(hi - a);
                prop_assert!((back - a).abs() <= bound + 1e-9);
            }
        }
    }
}
