//! Real and complex linear-prediction analysis: autocorrelation,
//! Levinson-Durbin, bandwidth expansion, LSF conversion, polynomial roots,
//! and frequency-envelope evaluation.

use num_complex::Complex64;
use std::f64::consts::PI;

/// Window applied to the analysis block before autocorrelation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Taper {
    None,
    Hamming,
}

/// Floor used for all-zero analysis blocks.
const DEGENERATE_FLOOR: f64 = 1e-30;
/// Minimum LSF gap enforced after quantization (radians).
pub const LSF_MIN_GAP: f64 = 1e-3;

/// Real LP model: coefficients with a0 = 1 plus the LSF parameterization.
#[derive(Debug, Clone)]
pub struct LpModel {
    pub coeffs: Vec<f64>,
    pub lsf: Vec<f64>,
    pub prediction_error: f64,
}

/// Complex LP model for the across-frequency CTNS path.
#[derive(Debug, Clone)]
pub struct ComplexLpModel {
    pub coeffs: Vec<Complex64>,
    pub roots: Vec<Complex64>,
    pub prediction_error: f64,
}

/// LPC-derived spectral envelope sampled at MDCT bin centers.
#[derive(Debug, Clone)]
pub struct FreqEnvelope {
    pub linear: Vec<f64>,
    pub db: Vec<f64>,
}

pub fn hamming(len: usize) -> Vec<f64> {
    (0..len)
        .map(|n| 0.54 - 0.46 * (2.0 * PI * n as f64 / (len - 1) as f64).cos())
        .collect()
}

fn lag_window(k: usize) -> f64 {
    1.0 / (1.0 + 1e-5 * (k * k) as f64)
}

/// Real autocorrelation with lag windowing and a white-noise floor.
/// Returns (r, degenerate): `degenerate` marks an (effectively) all-zero block.
pub fn autocorr(x: &[f64], order: usize, taper: Taper) -> (Vec<f64>, bool) {
    assert!(x.len() > order);
    let buf: Vec<f64> = match taper {
        Taper::None => x.to_vec(),
        Taper::Hamming => x.iter().zip(hamming(x.len())).map(|(a, w)| a * w).collect(),
    };
    let mut r = vec![0.0; order + 1];
    for (k, rk) in r.iter_mut().enumerate() {
        *rk = buf[k..].iter().zip(&buf).map(|(a, b)| a * b).sum();
    }
    let degenerate = r[0] <= 0.0 || !r[0].is_finite();
    if degenerate {
        r = vec![0.0; order + 1];
        r[0] = DEGENERATE_FLOOR;
        return (r, true);
    }
    for k in 1..=order {
        r[k] *= lag_window(k);
    }
    r[0] *= 1.0001;
    (r, false)
}

/// Complex autocorrelation `r[k] = sum_n x[n] * conj(x[n-k])`; Hermitian by
/// construction. Same lag window and floor handling as the real path.
pub fn autocorr_complex(x: &[Complex64], order: usize) -> (Vec<Complex64>, bool) {
    assert!(x.len() > order);
    let mut r = vec![Complex64::new(0.0, 0.0); order + 1];
    for (k, rk) in r.iter_mut().enumerate() {
        *rk = x[k..].iter().zip(x).map(|(a, b)| a * b.conj()).sum();
    }
    let degenerate = r[0].re <= 0.0 || !r[0].re.is_finite();
    if degenerate {
        r = vec![Complex64::new(0.0, 0.0); order + 1];
        r[0] = Complex64::new(DEGENERATE_FLOOR, 0.0);
        return (r, true);
    }
    for k in 1..=order {
        r[k] *= lag_window(k);
    }
    r[0] *= 1.0001;
    (r, false)
}

/// Output of a Levinson-Durbin recursion.
#[derive(Debug, Clone)]
pub struct Levinson<T> {
    pub coeffs: Vec<T>,
    pub prediction_error: f64,
    pub reflection: Vec<T>,
    pub unstable: bool,
}

/// Solve the real Toeplitz normal equations.
pub fn levinson(r: &[f64]) -> Levinson<f64> {
    assert!(r[0] > 0.0);
    let order = r.len() - 1;
    let mut a = vec![0.0; order + 1];
    a[0] = 1.0;
    let mut e = r[0];
    let mut reflection = Vec::with_capacity(order);
    let mut unstable = false;
    for m in 1..=order {
        let mut acc = 0.0;
        for i in 0..m {
            acc += a[i] * r[m - i];
        }
        let mut k = -acc / e;
        if !k.is_finite() {
            k = 0.0;
            unstable = true;
        } else if k.abs() >= 1.0 {
            k = 0.999 * k.signum();
            unstable = true;
        }
        let prev = a.clone();
        for i in 1..m {
            a[i] = prev[i] + k * prev[m - i];
        }
        a[m] = k;
        e *= 1.0 - k * k;
        reflection.push(k);
    }
    Levinson {
        coeffs: a,
        prediction_error: e,
        reflection,
        unstable,
    }
}

/// Solve the Hermitian Toeplitz normal equations (conjugation in the update).
pub fn levinson_complex(r: &[Complex64]) -> Levinson<Complex64> {
    assert!(r[0].re > 0.0);
    let order = r.len() - 1;
    let mut a = vec![Complex64::new(0.0, 0.0); order + 1];
    a[0] = Complex64::new(1.0, 0.0);
    let mut e = r[0].re;
    let mut reflection = Vec::with_capacity(order);
    let mut unstable = false;
    for m in 1..=order {
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..m {
            acc += a[i] * r[m - i];
        }
        let mut k = -acc / e;
        if !k.re.is_finite() || !k.im.is_finite() {
            k = Complex64::new(0.0, 0.0);
            unstable = true;
        } else if k.norm() >= 1.0 {
            k *= 0.999 / k.norm();
            unstable = true;
        }
        let prev = a.clone();
        for i in 1..m {
            a[i] = prev[i] + k * prev[m - i].conj();
        }
        a[m] = k;
        e *= 1.0 - k.norm_sqr();
        reflection.push(k);
    }
    Levinson {
        coeffs: a,
        prediction_error: e,
        reflection,
        unstable,
    }
}

/// Bandwidth expansion: a'_k = a_k * gamma^k.
pub fn weight_lpc(a: &[f64], gamma: f64) -> Vec<f64> {
    let mut g = 1.0;
    a.iter()
        .map(|&c| {
            let out = c * g;
            g *= gamma;
            out
        })
        .collect()
}

pub fn weight_lpc_complex(a: &[Complex64], gamma: f64) -> Vec<Complex64> {
    let mut g = 1.0;
    a.iter()
        .map(|&c| {
            let out = c * g;
            g *= gamma;
            out
        })
        .collect()
}

/// Evaluate the symmetric LSF polynomial P on the unit circle as a real
/// function of omega (the common phase factor removed).
fn sym_poly_eval(p: &[f64], order: usize, omega: f64) -> f64 {
    // p has length order+2, p[j] = p[order+1-j]
    let half = (order + 2) / 2;
    let centre = (order + 1) as f64 / 2.0;
    (0..half)
        .map(|j| 2.0 * p[j] * ((centre - j as f64) * omega).cos())
        .sum()
}

fn antisym_poly_eval(q: &[f64], order: usize, omega: f64) -> f64 {
    let half = (order + 2) / 2;
    let centre = (order + 1) as f64 / 2.0;
    (0..half)
        .map(|j| 2.0 * q[j] * ((centre - j as f64) * omega).sin())
        .sum()
}

fn find_zeros(f: &dyn Fn(f64) -> f64, expected: usize, grid: usize) -> Option<Vec<f64>> {
    let mut zeros = Vec::with_capacity(expected);
    let step = PI / grid as f64;
    let mut prev_w = step * 0.5;
    let mut prev_v = f(prev_w);
    for i in 1..grid {
        let w = step * (0.5 + i as f64);
        if w >= PI {
            break;
        }
        let v = f(w);
        if prev_v == 0.0 {
            zeros.push(prev_w);
        } else if prev_v * v < 0.0 {
            // bisection refine
            let (mut lo, mut hi, mut flo) = (prev_w, w, prev_v);
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                let fm = f(mid);
                if flo * fm <= 0.0 {
                    hi = mid;
                } else {
                    lo = mid;
                    flo = fm;
                }
            }
            zeros.push(0.5 * (lo + hi));
        }
        prev_w = w;
        prev_v = v;
    }
    if zeros.len() == expected {
        Some(zeros)
    } else {
        None
    }
}

/// Convert minimum-phase LPC coefficients (a0 = 1, even order) to strictly
/// ascending line spectral frequencies in (0, pi).
pub fn lpc_to_lsf(a: &[f64]) -> Option<Vec<f64>> {
    let order = a.len() - 1;
    assert!(order % 2 == 0 && order >= 2);
    let mut p = vec![0.0; order + 2];
    let mut q = vec![0.0; order + 2];
    for j in 0..=order + 1 {
        let aj = if j <= order { a[j] } else { 0.0 };
        let arev = if order + 1 - j <= order {
            a[order + 1 - j]
        } else {
            0.0
        };
        p[j] = aj + arev;
        q[j] = aj - arev;
    }
    let half = order / 2;
    for grid in [2048usize, 8192, 32768] {
        let zp = find_zeros(&|w| sym_poly_eval(&p, order, w), half, grid);
        let zq = find_zeros(&|w| antisym_poly_eval(&q, order, w), half, grid);
        if let (Some(zp), Some(zq)) = (zp, zq) {
            let mut lsf = Vec::with_capacity(order);
            for i in 0..half {
                lsf.push(zp[i]);
                lsf.push(zq[i]);
            }
            if lsf.windows(2).all(|w| w[0] < w[1]) {
                return Some(lsf);
            }
        }
    }
    None
}

/// Rebuild LPC coefficients from LSFs (inverse of `lpc_to_lsf`).
pub fn lsf_to_lpc(lsf: &[f64]) -> Vec<f64> {
    let order = lsf.len();
    assert!(order % 2 == 0 && order >= 2);
    // even positions (0-based) are P roots, odd positions Q roots
    let mut p = vec![1.0];
    let mut q = vec![1.0];
    for (i, &w) in lsf.iter().enumerate() {
        let quad = [1.0, -2.0 * w.cos(), 1.0];
        if i % 2 == 0 {
            p = conv(&p, &quad);
        } else {
            q = conv(&q, &quad);
        }
    }
    p = conv(&p, &[1.0, 1.0]); // root at z = -1
    q = conv(&q, &[1.0, -1.0]); // root at z = +1
    (0..=order).map(|j| 0.5 * (p[j] + q[j])).collect()
}

fn conv(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// Clamp LSFs into (0.01, pi - 0.01) and enforce ascending order with the
/// minimum gap; used on quantizer inputs and outputs.
pub fn clamp_and_repair_lsf(lsf: &mut [f64]) {
    for v in lsf.iter_mut() {
        *v = v.clamp(0.01, PI - 0.01);
    }
    for i in 1..lsf.len() {
        if lsf[i] < lsf[i - 1] + LSF_MIN_GAP {
            lsf[i] = lsf[i - 1] + LSF_MIN_GAP;
        }
    }
    // push back down if the tail overran pi
    let top = PI - 0.01;
    for i in (0..lsf.len()).rev() {
        let limit = top - LSF_MIN_GAP * (lsf.len() - 1 - i) as f64;
        if lsf[i] > limit {
            lsf[i] = limit;
        }
    }
}

/// Roots of the monic polynomial z^p + a1 z^{p-1} + ... + ap encoded as
/// a = [1, a1, ..., ap], by Durand-Kerner iteration.
pub fn poly_roots(a: &[Complex64]) -> Vec<Complex64> {
    let p = a.len() - 1;
    if p == 0 {
        return Vec::new();
    }
    let eval = |z: Complex64| -> Complex64 {
        let mut acc = Complex64::new(1.0, 0.0);
        for &c in &a[1..] {
            acc = acc * z + c;
        }
        acc
    };
    let seed = Complex64::new(0.4, 0.9);
    let mut roots: Vec<Complex64> = (0..p).map(|k| seed.powu(k as u32 + 1)).collect();
    for _ in 0..500 {
        let mut max_step = 0.0f64;
        for i in 0..p {
            let mut denom = Complex64::new(1.0, 0.0);
            for j in 0..p {
                if j != i {
                    denom *= roots[i] - roots[j];
                }
            }
            if denom.norm() < 1e-300 {
                denom = Complex64::new(1e-300, 0.0);
            }
            let step = eval(roots[i]) / denom;
            roots[i] -= step;
            max_step = max_step.max(step.norm());
        }
        if max_step < 1e-13 {
            break;
        }
    }
    roots
}

/// Clamp root magnitudes to at most `max_mag`, preserving phase.
pub fn stabilize_roots(roots: &mut [Complex64], max_mag: f64) {
    for r in roots.iter_mut() {
        let m = r.norm();
        if m > max_mag {
            *r *= max_mag / m;
        }
    }
}

/// Expand prod_i (1 - r_i z^{-1}) back into coefficients [1, a1, ..., ap].
pub fn poly_from_roots(roots: &[Complex64]) -> Vec<Complex64> {
    let mut a = vec![Complex64::new(1.0, 0.0)];
    for &r in roots {
        let mut next = vec![Complex64::new(0.0, 0.0); a.len() + 1];
        for (i, &c) in a.iter().enumerate() {
            next[i] += c;
            next[i + 1] -= c * r;
        }
        a = next;
    }
    a
}

/// `H[f] = 1 / |A_gamma(e^{i w_f})|` at bin centres `w_f = pi (f + 0.5) / num_bins`.
pub fn freq_envelope(a_quantized: &[f64], gamma: f64, num_bins: usize) -> FreqEnvelope {
    let aw = weight_lpc(a_quantized, gamma);
    let mut linear = Vec::with_capacity(num_bins);
    for f in 0..num_bins {
        let w = PI * (f as f64 + 0.5) / num_bins as f64;
        let z = Complex64::from_polar(1.0, -w);
        let mut acc = Complex64::new(0.0, 0.0);
        for &c in aw.iter().rev() {
            acc = acc * z + c;
        }
        let mag = acc.norm();
        // 240 dB ceiling when A vanishes
        linear.push(if mag < 1e-12 { 1e12 } else { 1.0 / mag });
    }
    let db = linear.iter().map(|h| 20.0 * h.log10()).collect();
    FreqEnvelope { linear, db }
}

impl LpModel {
    /// Order-`order` analysis of a block (Hamming taper for the FDNS path).
    pub fn analyze(x: &[f64], order: usize, taper: Taper) -> LpModel {
        let (r, _degenerate) = autocorr(x, order, taper);
        let sol = levinson(&r);
        let lsf = lpc_to_lsf(&sol.coeffs).unwrap_or_else(|| {
            // non-minimum-phase fallback: re-derive from clamped reflections
            let clamped: Vec<f64> = sol
                .reflection
                .iter()
                .map(|k| k.clamp(-0.999, 0.999))
                .collect();
            let a = coeffs_from_reflections(&clamped);
            lpc_to_lsf(&a).expect("clamped reflection coefficients are minimum phase")
        });
        LpModel {
            coeffs: sol.coeffs,
            lsf,
            prediction_error: sol.prediction_error,
        }
    }
}

/// Rebuild LPC coefficients from reflection coefficients (all |k| < 1 gives a
/// minimum-phase result).
pub fn coeffs_from_reflections(ks: &[f64]) -> Vec<f64> {
    let mut a = vec![1.0];
    for (m, &k) in ks.iter().enumerate() {
        let prev = a.clone();
        a.push(0.0);
        for i in 1..=m {
            a[i] = prev[i] + k * prev[m + 1 - i];
        }
        a[m + 1] = k;
    }
    a
}
