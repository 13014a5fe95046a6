//! Seeded synthetic test signals standing in for licensed test items:
//! castanet-like transients, stationary tones, speech-like excitation, and
//! mixtures.

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use std::f64::consts::PI;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorpusKind {
    Castanet,
    Tone,
    SpeechLike,
    Mix,
}

impl FromStr for CorpusKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "castanet" => Ok(CorpusKind::Castanet),
            "tone" => Ok(CorpusKind::Tone),
            "speechlike" => Ok(CorpusKind::SpeechLike),
            "mix" => Ok(CorpusKind::Mix),
            other => Err(format!("unknown corpus kind '{}'", other)),
        }
    }
}

/// Generated clip plus the onset positions of its transients (empty for
/// kinds without deliberate attacks).
#[derive(Debug, Clone)]
pub struct Clip {
    pub samples: Vec<f64>,
    pub onsets: Vec<usize>,
}

pub fn generate(kind: CorpusKind, seed: u64, num_samples: usize, sample_rate: u32) -> Clip {
    let mut rng = StdRng::seed_from_u64(seed ^ 0x6d636c74);
    match kind {
        CorpusKind::Castanet => castanet(&mut rng, num_samples, sample_rate),
        CorpusKind::Tone => tone(&mut rng, num_samples, sample_rate),
        CorpusKind::SpeechLike => speechlike(&mut rng, num_samples, sample_rate),
        CorpusKind::Mix => mix(&mut rng, num_samples, sample_rate),
    }
}

/// Quiet tonal bed with sharp wide-band attacks every 80..200 ms.
fn castanet(rng: &mut StdRng, len: usize, fs: u32) -> Clip {
    let fs_f = fs as f64;
    let mut x = vec![0.0; len];
    for (n, v) in x.iter_mut().enumerate() {
        let t = n as f64 / fs_f;
        *v = 0.03 * (2.0 * PI * 330.0 * t).sin() + 0.02 * rng.gen_range(-1.0..1.0);
    }
    let mut onsets = Vec::new();
    let mut pos = (0.08 * fs_f) as usize;
    while pos + 2000 < len {
        onsets.push(pos);
        let dur = rng.gen_range(300..900);
        let decay = rng.gen_range(30.0..120.0);
        let f0 = rng.gen_range(800.0..3200.0);
        let phase = rng.gen_range(0.0..2.0 * PI);
        let amp = rng.gen_range(0.4..0.85);
        let mut burst: Vec<f64> = (0..dur)
            .map(|i| {
                let env = (-(i as f64) / decay).exp();
                env * (rng.gen_range(-1.0..1.0)
                    + 0.8 * (2.0 * PI * f0 * i as f64 / fs_f + phase).sin())
            })
            .collect();
        let peak = burst.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for b in burst.iter_mut() {
            *b *= amp / peak;
        }
        for (i, b) in burst.iter().enumerate() {
            if pos + i < len {
                x[pos + i] += b;
            }
        }
        pos += (rng.gen_range(0.08..0.2) * fs_f) as usize;
    }
    clamp(&mut x);
    Clip { samples: x, onsets }
}

/// A steady periodic tone: a fundamental with up to three harmonics, so the
/// waveform has no slow beating and a stationary envelope.
fn tone(rng: &mut StdRng, len: usize, fs: u32) -> Clip {
    let fs_f = fs as f64;
    let f0 = rng.gen_range(200.0..1500.0);
    let count = rng.gen_range(1..4);
    let parts: Vec<(f64, f64, f64)> = (0..count)
        .map(|k| {
            (
                f0 * (k + 1) as f64,
                rng.gen_range(0.15..0.4) / (k + 1) as f64,
                rng.gen_range(0.0..2.0 * PI),
            )
        })
        .collect();
    let mut x: Vec<f64> = (0..len)
        .map(|n| {
            let t = n as f64 / fs_f;
            parts
                .iter()
                .map(|&(f, a, p)| a * (2.0 * PI * f * t + p).sin())
                .sum()
        })
        .collect();
    clamp(&mut x);
    Clip {
        samples: x,
        onsets: Vec::new(),
    }
}

/// Voiced (pulse-train through a 10-pole filter) and unvoiced (filtered
/// noise) segments of 80..200 ms.
fn speechlike(rng: &mut StdRng, len: usize, fs: u32) -> Clip {
    let fs_f = fs as f64;
    let mut x = vec![0.0; len];
    let mut pos = 0usize;
    while pos < len {
        let seg = ((rng.gen_range(0.08..0.2) * fs_f) as usize).min(len - pos);
        let voiced = rng.gen_bool(0.6);
        let mut exc = vec![0.0; seg];
        if voiced {
            let period = (fs_f / rng.gen_range(80.0..220.0)) as usize;
            let mut i = 0;
            while i < seg {
                exc[i] = 1.0;
                i += period.max(1);
            }
        } else {
            for e in exc.iter_mut() {
                *e = 0.3 * rng.gen_range(-1.0..1.0);
            }
        }
        // random stable resonator bank
        let mut a = vec![1.0f64];
        for _ in 0..5 {
            let f = rng.gen_range(200.0..5000.0);
            let r = rng.gen_range(0.9..0.98);
            let quad = [1.0, -2.0 * r * (2.0 * PI * f / fs_f).cos(), r * r];
            let mut next = vec![0.0; a.len() + 2];
            for (i, &c) in a.iter().enumerate() {
                for (j, &q) in quad.iter().enumerate() {
                    next[i + j] += c * q;
                }
            }
            a = next;
        }
        let mut y = vec![0.0; seg];
        for i in 0..seg {
            let mut v = exc[i];
            for k in 1..a.len() {
                if i >= k {
                    v -= a[k] * y[i - k];
                }
            }
            y[i] = v;
        }
        let peak = y.iter().fold(1e-12f64, |m, v| m.max(v.abs()));
        let amp = rng.gen_range(0.2..0.6);
        for (o, v) in x[pos..pos + seg].iter_mut().zip(&y) {
            *o = v * amp / peak;
        }
        pos += seg;
    }
    clamp(&mut x);
    Clip {
        samples: x,
        onsets: Vec::new(),
    }
}

/// Thirds of castanet, tone, and speech-like content.
fn mix(rng: &mut StdRng, len: usize, fs: u32) -> Clip {
    let third = len / 3;
    let a = castanet(rng, third, fs);
    let b = tone(rng, third, fs);
    let c = speechlike(rng, len - 2 * third, fs);
    let mut samples = a.samples;
    let offset_b = samples.len();
    samples.extend(b.samples);
    let offset_c = samples.len();
    samples.extend(c.samples);
    let mut onsets = a.onsets;
    onsets.extend(b.onsets.iter().map(|o| o + offset_b));
    onsets.extend(c.onsets.iter().map(|o| o + offset_c));
    Clip { samples, onsets }
}

fn clamp(x: &mut [f64]) {
    for v in x.iter_mut() {
        *v = v.clamp(-1.0, 1.0);
    }
}
