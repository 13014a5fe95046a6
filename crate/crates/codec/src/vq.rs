//! Multi-stage vector quantization: an LBG trainer, codebook file format,
//! and the LSF / complex-root quantizers built on it.

use crate::error::{CodecError, Result};
use crate::lpc::{self, ComplexLpModel};
use num_complex::Complex64;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use std::io::{Read, Write};
use std::path::Path;

const MAGIC: &[u8; 5] = b"MCVQ1";
const LBG_MAX_ITERS: usize = 50;
const LBG_STOP: f64 = 1e-6;
/// Magnitude ceiling for decoded complex roots.
pub const ROOT_MAX_MAG: f64 = 0.99;

/// One stage of a multi-stage codebook: 2^bits centroids of dimension `dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct Stage {
    pub bits: u32,
    pub centroids: Vec<f64>, // row-major, 2^bits rows
}

impl Stage {
    pub fn codewords(&self) -> usize {
        1usize << self.bits
    }

    pub fn centroid(&self, i: usize) -> &[f64] {
        let dim = self.centroids.len() / self.codewords();
        &self.centroids[i * dim..(i + 1) * dim]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Codebook {
    pub dim: usize,
    pub stages: Vec<Stage>,
}

fn weighted_dist(a: &[f64], b: &[f64], weights: Option<&[f64]>) -> f64 {
    match weights {
        Some(w) => a
            .iter()
            .zip(b)
            .zip(w)
            .map(|((x, y), wi)| wi * (x - y) * (x - y))
            .sum(),
        None => a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum(),
    }
}

impl Codebook {
    /// Greedy per-stage nearest-centroid encoding of `v`.
    pub fn encode(&self, v: &[f64], weights: Option<&[f64]>) -> Vec<u16> {
        debug_assert_eq!(v.len(), self.dim);
        let mut residual = v.to_vec();
        let mut indices = Vec::with_capacity(self.stages.len());
        for stage in &self.stages {
            let mut best = 0usize;
            let mut best_d = f64::INFINITY;
            for i in 0..stage.codewords() {
                let d = weighted_dist(&residual, stage.centroid(i), weights);
                if d < best_d {
                    best_d = d;
                    best = i;
                }
            }
            for (r, c) in residual.iter_mut().zip(stage.centroid(best)) {
                *r -= c;
            }
            indices.push(best as u16);
        }
        indices
    }

    /// Sum the selected stage centroids.
    pub fn decode(&self, indices: &[u16]) -> Result<Vec<f64>> {
        if indices.len() != self.stages.len() {
            return Err(CodecError::LengthMismatch {
                expected: self.stages.len(),
                got: indices.len(),
            });
        }
        let mut out = vec![0.0; self.dim];
        for (stage, &i) in self.stages.iter().zip(indices) {
            if (i as usize) >= stage.codewords() {
                return Err(CodecError::CorruptStream {
                    frame: None,
                    detail: format!(
                        "codebook index {} out of range (< {})",
                        i,
                        stage.codewords()
                    ),
                });
            }
            for (o, c) in out.iter_mut().zip(stage.centroid(i as usize)) {
                *o += c;
            }
        }
        Ok(out)
    }

    /// Serialize: magic, dim, stage count, bits per stage, then little-endian
    /// f32 centroids stage by stage.
    pub fn write_to<W: Write>(&self, w: &mut W) -> Result<()> {
        w.write_all(MAGIC)?;
        w.write_all(&(self.dim as u32).to_le_bytes())?;
        w.write_all(&(self.stages.len() as u32).to_le_bytes())?;
        for s in &self.stages {
            w.write_all(&s.bits.to_le_bytes())?;
        }
        for s in &self.stages {
            for &c in &s.centroids {
                w.write_all(&(c as f32).to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn read_from<R: Read>(r: &mut R) -> Result<Self> {
        let mut magic = [0u8; 5];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(CodecError::UnsupportedFormat("bad codebook magic".into()));
        }
        let mut u32buf = [0u8; 4];
        r.read_exact(&mut u32buf)?;
        let dim = u32::from_le_bytes(u32buf) as usize;
        r.read_exact(&mut u32buf)?;
        let nstages = u32::from_le_bytes(u32buf) as usize;
        if dim == 0 || nstages == 0 || dim > 4096 || nstages > 16 {
            return Err(CodecError::UnsupportedFormat(
                "implausible codebook header".into(),
            ));
        }
        let mut bits = Vec::with_capacity(nstages);
        for _ in 0..nstages {
            r.read_exact(&mut u32buf)?;
            let b = u32::from_le_bytes(u32buf);
            if b == 0 || b > 20 {
                return Err(CodecError::UnsupportedFormat(
                    "implausible stage bits".into(),
                ));
            }
            bits.push(b);
        }
        let mut stages = Vec::with_capacity(nstages);
        for b in bits {
            let count = (1usize << b) * dim;
            let mut centroids = Vec::with_capacity(count);
            for _ in 0..count {
                r.read_exact(&mut u32buf)?;
                let v = f32::from_le_bytes(u32buf) as f64;
                if !v.is_finite() {
                    return Err(CodecError::UnsupportedFormat(
                        "non-finite codebook entry".into(),
                    ));
                }
                centroids.push(v);
            }
            stages.push(Stage { bits: b, centroids });
        }
        Ok(Codebook { dim, stages })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.write_to(&mut f)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let mut f = std::io::BufReader::new(std::fs::File::open(path)?);
        Self::read_from(&mut f)
    }
}

/// Binary-split LBG training of one stage.
fn lbg_stage(vectors: &[Vec<f64>], bits: u32, rng: &mut StdRng) -> Stage {
    let dim = vectors[0].len();
    let target = 1usize << bits;
    let mut mean = vec![0.0; dim];
    for v in vectors {
        for (m, x) in mean.iter_mut().zip(v) {
            *m += x;
        }
    }
    for m in mean.iter_mut() {
        *m /= vectors.len() as f64;
    }
    let mut centroids = vec![mean];
    let mut assign = vec![0usize; vectors.len()];

    while centroids.len() < target {
        // split every centroid with a small deterministic perturbation
        let mut next = Vec::with_capacity(centroids.len() * 2);
        for c in &centroids {
            let eps: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1e-3..1e-3)).collect();
            next.push(c.iter().zip(&eps).map(|(x, e)| x + e).collect());
            next.push(c.iter().zip(&eps).map(|(x, e)| x - e).collect());
        }
        centroids = next;
        let k = centroids.len();

        let mut prev_dist = f64::INFINITY;
        for _ in 0..LBG_MAX_ITERS {
            // assignment
            let mut dist_total = 0.0;
            for (vi, v) in vectors.iter().enumerate() {
                let mut best = 0usize;
                let mut best_d = f64::INFINITY;
                for (ci, c) in centroids.iter().enumerate() {
                    let d = weighted_dist(v, c, None);
                    if d < best_d {
                        best_d = d;
                        best = ci;
                    }
                }
                assign[vi] = best;
                dist_total += best_d;
            }
            // update
            let mut sums = vec![vec![0.0; dim]; k];
            let mut counts = vec![0usize; k];
            for (v, &a) in vectors.iter().zip(&assign) {
                counts[a] += 1;
                for (s, x) in sums[a].iter_mut().zip(v) {
                    *s += x;
                }
            }
            for (ci, c) in centroids.iter_mut().enumerate() {
                if counts[ci] > 0 {
                    for (cc, s) in c.iter_mut().zip(&sums[ci]) {
                        *cc = s / counts[ci] as f64;
                    }
                } else {
                    // re-seed an empty cell at a random training vector
                    let v = &vectors[rng.gen_range(0..vectors.len())];
                    c.copy_from_slice(v);
                }
            }
            if prev_dist.is_finite() && prev_dist > 0.0 {
                let rel = (prev_dist - dist_total).abs() / prev_dist;
                if rel < LBG_STOP {
                    break;
                }
            }
            prev_dist = dist_total;
        }
    }

    Stage {
        bits,
        centroids: centroids.into_iter().flatten().collect(),
    }
}

/// Train a multi-stage codebook with binary-split LBG; each stage trains on
/// the residuals of the previous stages. Deterministic for a given seed.
pub fn lbg_train(
    training_vectors: &[Vec<f64>],
    bits: u32,
    stages: usize,
    seed: u64,
) -> Result<Codebook> {
    let required = 8usize << bits;
    if training_vectors.len() < required {
        return Err(CodecError::InsufficientTrainingData {
            required,
            got: training_vectors.len(),
        });
    }
    let dim = training_vectors[0].len();
    assert!(training_vectors.iter().all(|v| v.len() == dim));
    let mut rng = StdRng::seed_from_u64(seed);
    let mut residuals: Vec<Vec<f64>> = training_vectors.to_vec();
    let mut out = Vec::with_capacity(stages);
    for stage_idx in 0..stages {
        let mut stage = lbg_stage(&residuals, bits, &mut rng);
        if stage_idx > 0 {
            // refinement stages carry an exact zero codeword so adding a
            // stage can never increase distortion
            zero_smallest_centroid(&mut stage, dim);
        }
        // subtract the winning centroid to form the next stage's residuals
        for v in residuals.iter_mut() {
            let mut best = 0usize;
            let mut best_d = f64::INFINITY;
            let count = 1usize << bits;
            let per = stage.centroids.len() / count;
            for i in 0..count {
                let c = &stage.centroids[i * per..(i + 1) * per];
                let d = weighted_dist(v, c, None);
                if d < best_d {
                    best_d = d;
                    best = i;
                }
            }
            let c = &stage.centroids[best * per..(best + 1) * per];
            for (x, y) in v.iter_mut().zip(c) {
                *x -= y;
            }
        }
        out.push(stage);
    }
    Ok(Codebook { dim, stages: out })
}

fn zero_smallest_centroid(stage: &mut Stage, dim: usize) {
    let count = 1usize << stage.bits;
    let mut best = 0usize;
    let mut best_norm = f64::INFINITY;
    for i in 0..count {
        let norm: f64 = stage.centroids[i * dim..(i + 1) * dim]
            .iter()
            .map(|x| x * x)
            .sum();
        if norm < best_norm {
            best_norm = norm;
            best = i;
        }
    }
    for v in stage.centroids[best * dim..(best + 1) * dim].iter_mut() {
        *v = 0.0;
    }
}

/// LSF quantizer: 2-stage, 10 bits per stage, dimension 16, with inverse
/// adjacent-gap weighting.
pub struct LsfQuantizer {
    pub codebook: Codebook,
}

impl LsfQuantizer {
    pub fn new(codebook: Codebook) -> Self {
        LsfQuantizer { codebook }
    }

    fn weights(lsf: &[f64]) -> Vec<f64> {
        let n = lsf.len();
        (0..n)
            .map(|i| {
                let lo = if i == 0 { lsf[0] } else { lsf[i] - lsf[i - 1] };
                let hi = if i == n - 1 {
                    std::f64::consts::PI - lsf[i]
                } else {
                    lsf[i + 1] - lsf[i]
                };
                1.0 / lo.max(1e-4) + 1.0 / hi.max(1e-4)
            })
            .collect()
    }

    pub fn quantize(&self, lsf: &[f64]) -> Vec<u16> {
        let mut v = lsf.to_vec();
        lpc::clamp_and_repair_lsf(&mut v);
        let w = Self::weights(&v);
        self.codebook.encode(&v, Some(&w))
    }

    /// Decode indices and repair the result to an ascending LSF vector.
    pub fn dequantize(&self, indices: &[u16]) -> Result<Vec<f64>> {
        let mut lsf = self.codebook.decode(indices)?;
        lpc::clamp_and_repair_lsf(&mut lsf);
        Ok(lsf)
    }
}

/// Complex-root quantizer: 3-stage, 11 bits per stage, over 10 phase-sorted
/// (magnitude, phase) pairs flattened to 20 reals.
pub struct RootQuantizer {
    pub codebook: Codebook,
}

/// Canonical root vector: sort by ascending phase, then interleave
/// (magnitude, phase).
pub fn roots_to_vector(roots: &[Complex64]) -> Vec<f64> {
    let mut pairs: Vec<(f64, f64)> = roots
        .iter()
        .map(|r| (r.norm().min(ROOT_MAX_MAG), r.arg()))
        .collect();
    pairs.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap());
    pairs.into_iter().flat_map(|(m, p)| [m, p]).collect()
}

pub fn vector_to_roots(v: &[f64]) -> Vec<Complex64> {
    v.chunks_exact(2)
        .map(|mp| Complex64::from_polar(mp[0].clamp(0.0, ROOT_MAX_MAG), mp[1]))
        .collect()
}

impl RootQuantizer {
    pub fn new(codebook: Codebook) -> Self {
        RootQuantizer { codebook }
    }

    pub fn order(&self) -> usize {
        self.codebook.dim / 2
    }

    pub fn quantize(&self, roots: &[Complex64]) -> Vec<u16> {
        self.codebook.encode(&roots_to_vector(roots), None)
    }

    /// Decode indices into a stable complex LP model (magnitudes clamped,
    /// polynomial rebuilt from the decoded roots).
    pub fn dequantize(&self, indices: &[u16]) -> Result<ComplexLpModel> {
        let v = self.codebook.decode(indices)?;
        let roots = vector_to_roots(&v);
        let coeffs = lpc::poly_from_roots(&roots);
        Ok(ComplexLpModel {
            coeffs,
            roots,
            prediction_error: 0.0,
        })
    }
}

/// Locate the codebooks: from `MCLT_CODEBOOK_DIR` when set, else the files
/// shipped with the crate.
pub fn load_default_codebooks() -> Result<(LsfQuantizer, RootQuantizer)> {
    if let Ok(dir) = std::env::var("MCLT_CODEBOOK_DIR") {
        let dir = std::path::PathBuf::from(dir);
        let lsf = Codebook::load(&dir.join("lsf_cb.bin"))?;
        let roots = Codebook::load(&dir.join("root_cb.bin"))?;
        return Ok((LsfQuantizer::new(lsf), RootQuantizer::new(roots)));
    }
    let lsf_bytes: &[u8] = include_bytes!(concat!(env!("CARGO_MANIFEST_DIR"), "/data/lsf_cb.bin"));
    let root_bytes: &[u8] =
        include_bytes!(concat!(env!("CARGO_MANIFEST_DIR"), "/data/root_cb.bin"));
    let lsf = Codebook::read_from(&mut std::io::Cursor::new(lsf_bytes))?;
    let roots = Codebook::read_from(&mut std::io::Cursor::new(root_bytes))?;
    Ok((LsfQuantizer::new(lsf), RootQuantizer::new(roots)))
}
