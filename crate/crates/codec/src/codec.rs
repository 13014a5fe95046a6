//! Encoder and decoder pipelines: LP analysis and envelope quantization,
//! MCLT, FDNS, gated CTNS, adaptive sub-band scaling, unified quantization,
//! frame packing, and the mode-switching synthesis with TDAA.

use crate::bitstream::{
    self, AuxData, BitAccounting, CoeffData, FrameParameters, Spectrum, StreamHeader,
};
use crate::config::CodecConfig;
use crate::error::{CodecError, Result};
use crate::framing::{frame_stream, AudioFrame};
use crate::lpc::{self, Taper};
use crate::noise_shaping::{self, CtnsDecision};
use crate::quantizer;
use crate::rate_control;
use crate::transforms::{self, FrameHalves, HalvesKind, Mclt, WindowPair};
use crate::vq::{self, LsfQuantizer, RootQuantizer};
use num_complex::Complex64;

/// Encoder-side CTNS gating policy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CtnsMode {
    #[default]
    Auto,
    ForcedOn,
    ForcedOff,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct EncoderOptions {
    pub ctns: CtnsMode,
    /// Diagnostic: transport exact scaled coefficients instead of quantizing.
    pub bypass_quantization: bool,
}

/// Per-frame encoder diagnostics.
#[derive(Debug, Clone)]
pub struct FrameInfo {
    pub index: usize,
    pub ctns_active: bool,
    pub prediction_gain_db: f64,
    pub frame_gain_db: f64,
    pub target_bits_total: u32,
    pub acct: BitAccounting,
}

#[derive(Debug, Clone)]
pub struct CodedFrame {
    pub payload: Vec<u8>,
    pub info: FrameInfo,
}

pub struct Encoder {
    cfg: CodecConfig,
    mclt: Mclt,
    window: WindowPair,
    lsfq: LsfQuantizer,
    rootq: RootQuantizer,
    opts: EncoderOptions,
    prev_hop: Vec<f64>,
    frame_index: usize,
}

impl Encoder {
    /// Encoder with the shipped codebooks (or `MCLT_CODEBOOK_DIR`).
    pub fn new(cfg: CodecConfig, opts: EncoderOptions) -> Result<Self> {
        let (lsfq, rootq) = vq::load_default_codebooks()?;
        Self::with_quantizers(cfg, opts, lsfq, rootq)
    }

    pub fn with_quantizers(
        cfg: CodecConfig,
        opts: EncoderOptions,
        lsfq: LsfQuantizer,
        rootq: RootQuantizer,
    ) -> Result<Self> {
        cfg.validate()?;
        if lsfq.codebook.dim != cfg.lpc_order_fdns {
            return Err(CodecError::InvalidConfig(format!(
                "LSF codebook dimension {} does not match LPC order {}",
                lsfq.codebook.dim, cfg.lpc_order_fdns
            )));
        }
        if rootq.order() != cfg.lpc_order_ctns {
            return Err(CodecError::InvalidConfig(format!(
                "root codebook order {} does not match CTNS order {}",
                rootq.order(),
                cfg.lpc_order_ctns
            )));
        }
        let hop = cfg.hop_n;
        Ok(Encoder {
            mclt: Mclt::new(hop),
            window: WindowPair::new(hop),
            lsfq,
            rootq,
            opts,
            prev_hop: vec![0.0; hop],
            frame_index: 0,
            cfg,
        })
    }

    pub fn reset(&mut self) {
        self.prev_hop = vec![0.0; self.cfg.hop_n];
        self.frame_index = 0;
    }

    pub fn config(&self) -> &CodecConfig {
        &self.cfg
    }

    /// Change the CTNS gating policy mid-stream (state carries over).
    pub fn set_ctns_mode(&mut self, mode: CtnsMode) {
        self.opts.ctns = mode;
    }

    pub fn encode_frame(&mut self, frame: &AudioFrame) -> Result<CodedFrame> {
        if frame.samples.len() != self.cfg.hop_n {
            return Err(CodecError::LengthMismatch {
                expected: self.cfg.hop_n,
                got: frame.samples.len(),
            });
        }
        let cfg = &self.cfg;
        let mut buffer = Vec::with_capacity(cfg.window_len());
        buffer.extend_from_slice(&self.prev_hop);
        buffer.extend_from_slice(&frame.samples);

        // envelope side info from the quantized LSFs
        let lp = lpc::LpModel::analyze(&buffer, cfg.lpc_order_fdns, Taper::Hamming);
        let lsf_idx = self.lsfq.quantize(&lp.lsf);
        let lsf_hat = self.lsfq.dequantize(&lsf_idx)?;
        let a_hat = lpc::lsf_to_lpc(&lsf_hat);
        let env = lpc::freq_envelope(&a_hat, cfg.weight_fdns, cfg.num_bins());

        // transform and flatten
        let windowed = self.window.apply(&buffer);
        let x = self.mclt.mclt_forward(&windowed)?;
        let residual = noise_shaping::fdns_apply(&x, &env);

        // gated temporal shaping across frequency
        let decision = match self.opts.ctns {
            CtnsMode::ForcedOff => CtnsDecision {
                active: false,
                prediction_gain_db: f64::NEG_INFINITY,
                model: None,
                indices: None,
            },
            _ => {
                let mut d = noise_shaping::ctns_analyze(&residual, cfg, &self.rootq);
                if self.opts.ctns == CtnsMode::ForcedOn {
                    d.active = d.model.is_some();
                }
                d
            }
        };

        let (spectrum, root_indices) = if decision.active {
            let model = decision.model.as_ref().unwrap();
            let filtered = noise_shaping::ctns_filter(&residual, &model.coeffs, cfg.ctns_start_bin);
            let idx = decision.indices.as_ref().unwrap();
            (Spectrum::Complex(filtered), Some([idx[0], idx[1], idx[2]]))
        } else {
            (
                Spectrum::Real(residual.iter().map(|c| c.re).collect()),
                None,
            )
        };

        // adaptive bit targets and sub-band gains
        let gain_db = rate_control::frame_gain(&env);
        let fer = rate_control::fer(&env, cfg);
        let plan = rate_control::target_bits(gain_db, &fer, cfg);
        let energies = match &spectrum {
            Spectrum::Real(v) => rate_control::bin_energies_real(v),
            Spectrum::Complex(v) => rate_control::bin_energies_complex(v),
        };
        let quads = rate_control::quadruple_energies(&energies, cfg);
        let scale = rate_control::scale_factor_search(&quads, &plan, cfg);

        let scaled = match spectrum {
            Spectrum::Real(mut v) => {
                rate_control::apply_scaling_real(&mut v, &scale, cfg);
                Spectrum::Real(v)
            }
            Spectrum::Complex(mut v) => {
                rate_control::apply_scaling_complex(&mut v, &scale, cfg);
                Spectrum::Complex(v)
            }
        };

        let coeffs = if self.opts.bypass_quantization {
            CoeffData::Bypass(scaled)
        } else {
            quantize_spectrum(&scaled, cfg)
        };

        let params = FrameParameters {
            ctns_active: decision.active,
            lsf_indices: [lsf_idx[0], lsf_idx[1]],
            root_indices,
            scale,
            coeffs,
        };
        let (payload, acct) = bitstream::pack_frame(&params, cfg);

        let info = FrameInfo {
            index: self.frame_index,
            ctns_active: decision.active,
            prediction_gain_db: decision.prediction_gain_db,
            frame_gain_db: gain_db,
            target_bits_total: plan.target_bits.iter().sum(),
            acct,
        };
        self.prev_hop = frame.samples.clone();
        self.frame_index += 1;
        Ok(CodedFrame { payload, info })
    }
}

/// Quantize a scaled spectrum with the unified magnitude quantizer plus
/// phases or signs.
fn quantize_spectrum(spec: &Spectrum, cfg: &CodecConfig) -> CoeffData {
    match spec {
        Spectrum::Real(v) => {
            let mut mags = Vec::with_capacity(v.len());
            let mut signs = Vec::new();
            for (f, &x) in v.iter().enumerate() {
                let p = cfg.power_factors[cfg.band_of_bin(f)];
                let m = quantizer::quantize_mag(x.abs(), p);
                if m > 0 {
                    signs.push(quantizer::quantize_sign(x));
                }
                mags.push(m);
            }
            CoeffData::Quantized {
                mags,
                aux: AuxData::Signs(signs),
            }
        }
        Spectrum::Complex(v) => {
            let mut mags = Vec::with_capacity(v.len());
            let mut phases = Vec::new();
            for (f, c) in v.iter().enumerate() {
                let p = cfg.power_factors[cfg.band_of_bin(f)];
                let m = quantizer::quantize_mag(c.norm(), p);
                if m > 0 {
                    phases.push(quantizer::quantize_phase(c.arg()));
                }
                mags.push(m);
            }
            CoeffData::Quantized {
                mags,
                aux: AuxData::Phases(phases),
            }
        }
    }
}

/// Reconstruct the scaled spectrum from quantized indices.
fn dequantize_spectrum(mags: &[u32], aux: &AuxData, cfg: &CodecConfig) -> Result<Spectrum> {
    match aux {
        AuxData::Signs(signs) => {
            let mut out = Vec::with_capacity(mags.len());
            let mut s = signs.iter();
            for (f, &m) in mags.iter().enumerate() {
                let p = cfg.power_factors[cfg.band_of_bin(f)];
                let a = quantizer::dequantize_mag(m, p);
                if m > 0 {
                    let neg = *s.next().ok_or_else(|| CodecError::CorruptStream {
                        frame: None,
                        detail: "missing sign bits".into(),
                    })?;
                    out.push(quantizer::apply_sign(a, neg));
                } else {
                    out.push(0.0);
                }
            }
            Ok(Spectrum::Real(out))
        }
        AuxData::Phases(phases) => {
            let mut out = Vec::with_capacity(mags.len());
            let mut ph = phases.iter();
            for (f, &m) in mags.iter().enumerate() {
                let p = cfg.power_factors[cfg.band_of_bin(f)];
                let a = quantizer::dequantize_mag(m, p);
                if m > 0 {
                    let idx = *ph.next().ok_or_else(|| CodecError::CorruptStream {
                        frame: None,
                        detail: "missing phase indices".into(),
                    })?;
                    out.push(Complex64::from_polar(a, quantizer::dequantize_phase(idx)));
                } else {
                    out.push(Complex64::new(0.0, 0.0));
                }
            }
            Ok(Spectrum::Complex(out))
        }
    }
}

pub struct Decoder {
    cfg: CodecConfig,
    mclt: Mclt,
    window: WindowPair,
    lsfq: LsfQuantizer,
    rootq: RootQuantizer,
    bypass: bool,
    tdaa_enabled: bool,
    prev: Option<FrameHalves>,
    frame_index: usize,
}

impl Decoder {
    pub fn new(cfg: CodecConfig) -> Result<Self> {
        let (lsfq, rootq) = vq::load_default_codebooks()?;
        Self::with_quantizers(cfg, lsfq, rootq)
    }

    pub fn with_quantizers(
        cfg: CodecConfig,
        lsfq: LsfQuantizer,
        rootq: RootQuantizer,
    ) -> Result<Self> {
        cfg.validate()?;
        let hop = cfg.hop_n;
        Ok(Decoder {
            mclt: Mclt::new(hop),
            window: WindowPair::new(hop),
            lsfq,
            rootq,
            bypass: false,
            tdaa_enabled: true,
            prev: None,
            frame_index: 0,
            cfg,
        })
    }

    /// Expect bypass-mode frames (from the stream header flag).
    pub fn set_bypass(&mut self, bypass: bool) {
        self.bypass = bypass;
    }

    /// Ablation switch: plain overlap-add at mode switches when disabled.
    pub fn set_tdaa(&mut self, enabled: bool) {
        self.tdaa_enabled = enabled;
    }

    pub fn reset(&mut self) {
        self.prev = None;
        self.frame_index = 0;
    }

    /// Decode one frame; returns one hop of samples once a previous frame
    /// exists (the codec's one-frame latency), else an empty vector.
    pub fn decode_frame(&mut self, payload: &[u8]) -> Result<Vec<f64>> {
        let frame_no = self.frame_index;
        let halves = self
            .synthesize_frame(payload)
            .map_err(|e| tag_frame(e, frame_no))?;
        let out = match &self.prev {
            Some(prev) => {
                if self.tdaa_enabled {
                    transforms::ola_boundary(prev, &halves, &self.mclt, &self.window)
                        .map_err(|e| tag_frame(e, frame_no))?
                } else {
                    plain_boundary(prev, &halves, &self.window)
                }
            }
            None => Vec::new(),
        };
        self.prev = Some(halves);
        self.frame_index += 1;
        Ok(out)
    }

    fn synthesize_frame(&mut self, payload: &[u8]) -> Result<FrameHalves> {
        let cfg = &self.cfg;
        let params = bitstream::unpack_frame(payload, cfg, self.bypass)?;
        let lsf_hat = self.lsfq.dequantize(&params.lsf_indices)?;
        let a_hat = lpc::lsf_to_lpc(&lsf_hat);
        let env = lpc::freq_envelope(&a_hat, cfg.weight_fdns, cfg.num_bins());

        let scaled = match &params.coeffs {
            CoeffData::Quantized { mags, aux } => dequantize_spectrum(mags, aux, cfg)?,
            CoeffData::Bypass(spec) => spec.clone(),
        };

        match (params.ctns_active, scaled) {
            (true, Spectrum::Complex(mut v)) => {
                rate_control::remove_scaling_complex(&mut v, &params.scale, cfg);
                let roots = params.root_indices.unwrap();
                let model = self.rootq.dequantize(&roots)?;
                let residual = noise_shaping::ctns_inverse(&v, &model.coeffs, cfg.ctns_start_bin);
                let x = noise_shaping::fdns_invert(&residual, &env);
                self.mclt.imclt(&x)
            }
            (false, Spectrum::Real(mut v)) => {
                rate_control::remove_scaling_real(&mut v, &params.scale, cfg);
                let x = noise_shaping::fdns_invert_real(&v, &env);
                self.mclt.imdct(&x)
            }
            _ => Err(CodecError::CorruptStream {
                frame: None,
                detail: "coefficient kind does not match the CTNS flag".into(),
            }),
        }
    }
}

fn tag_frame(e: CodecError, frame: usize) -> CodecError {
    match e {
        CodecError::CorruptStream {
            frame: None,
            detail,
        } => CodecError::CorruptStream {
            frame: Some(frame),
            detail,
        },
        other => other,
    }
}

/// Plain overlap-add (no TDA augmentation) with the per-kind synthesis
/// gains; the TDAA-off ablation path.
fn plain_boundary(prev: &FrameHalves, cur: &FrameHalves, window: &WindowPair) -> Vec<f64> {
    let gain = |k: HalvesKind| match k {
        HalvesKind::Aliased => transforms::ALIASED_SYNTH_GAIN,
        HalvesKind::Clean => 1.0,
    };
    let (gr, gl) = (gain(prev.kind), gain(cur.kind));
    window
        .w2()
        .iter()
        .zip(&prev.right)
        .zip(window.w1().iter().zip(&cur.left))
        .map(|((w2, r), (w1, l))| w2 * r * gr + w1 * l * gl)
        .collect()
}

// ---------------------------------------------------------------------------
// stream-level helpers

#[derive(Debug, Clone)]
pub struct EncodedStream {
    pub header: StreamHeader,
    pub frames: Vec<CodedFrame>,
}

impl EncodedStream {
    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let payloads: Vec<Vec<u8>> = self.frames.iter().map(|f| f.payload.clone()).collect();
        let mut out = Vec::new();
        bitstream::write_stream(&mut out, &self.header, &payloads)?;
        Ok(out)
    }

    pub fn mean_frame_bits(&self) -> f64 {
        if self.frames.is_empty() {
            return 0.0;
        }
        self.frames
            .iter()
            .map(|f| f.info.acct.total_bits as f64)
            .sum::<f64>()
            / self.frames.len() as f64
    }
}

/// Encode a whole signal: frame it (zero-padded tail plus one flush frame)
/// and code every frame. Empty input produces a header-only stream.
pub fn encode_stream(
    samples: &[f64],
    cfg: &CodecConfig,
    opts: &EncoderOptions,
) -> Result<EncodedStream> {
    let mut encoder = Encoder::new(cfg.clone(), *opts)?;
    encode_stream_with(&mut encoder, samples)
}

pub fn encode_stream_with(encoder: &mut Encoder, samples: &[f64]) -> Result<EncodedStream> {
    encoder.reset();
    let cfg = encoder.config().clone();
    let frames = if samples.is_empty() {
        Vec::new()
    } else {
        frame_stream(samples, cfg.hop_n)
    };
    let mut coded = Vec::with_capacity(frames.len());
    for frame in &frames {
        coded.push(encoder.encode_frame(frame)?);
    }
    let header = StreamHeader {
        version: bitstream::STREAM_VERSION,
        flags: if encoder.opts.bypass_quantization {
            bitstream::FLAG_BYPASS
        } else {
            0
        },
        sample_rate: cfg.sample_rate_hz,
        hop: cfg.hop_n as u32,
        frame_count: coded.len() as u32,
        sample_count: samples.len() as u64,
    };
    Ok(EncodedStream {
        header,
        frames: coded,
    })
}

#[derive(Debug, Clone)]
pub struct DecodedAudio {
    pub sample_rate: u32,
    pub samples: Vec<f64>,
}

/// Decode a container produced by `encode_stream`; output is trimmed to the
/// original sample count.
pub fn decode_bytes(bytes: &[u8], cfg: &CodecConfig, tdaa: bool) -> Result<DecodedAudio> {
    let (header, payloads) = bitstream::read_stream(&mut std::io::Cursor::new(bytes))?;
    decode_frames(&header, &payloads, cfg, tdaa)
}

pub fn decode_frames(
    header: &StreamHeader,
    payloads: &[Vec<u8>],
    cfg: &CodecConfig,
    tdaa: bool,
) -> Result<DecodedAudio> {
    if header.hop as usize != cfg.hop_n {
        return Err(CodecError::InvalidConfig(format!(
            "stream hop {} does not match config hop {}",
            header.hop, cfg.hop_n
        )));
    }
    let mut decoder = Decoder::new(cfg.clone())?;
    decoder.set_bypass(header.bypass());
    decoder.set_tdaa(tdaa);
    let mut samples = Vec::new();
    for payload in payloads {
        samples.extend(decoder.decode_frame(payload)?);
    }
    samples.truncate(header.sample_count as usize);
    Ok(DecodedAudio {
        sample_rate: header.sample_rate,
        samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{self, CorpusKind};
    use crate::rate_control::ScaleFactors;
    use crate::vq::{lbg_train, roots_to_vector, Codebook};
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};
    use std::f64::consts::PI;

    /// Small codebooks trained on the actual analysis paths; stand-ins for
    /// the shipped ones in unit tests.
    fn toy_quantizers() -> (LsfQuantizer, RootQuantizer) {
        let cfg = CodecConfig::default();
        let mut rng = StdRng::seed_from_u64(99);
        let mut lsf_corpus = Vec::new();
        let mut root_corpus = Vec::new();
        let clips = [
            corpus::generate(CorpusKind::Castanet, 1, 12800 * 2, 12800),
            corpus::generate(CorpusKind::Tone, 2, 12800, 12800),
            corpus::generate(CorpusKind::SpeechLike, 3, 12800 * 2, 12800),
        ];
        let mclt = Mclt::new(cfg.hop_n);
        let window = WindowPair::new(cfg.hop_n);
        for clip in &clips {
            let frames = frame_stream(&clip.samples, cfg.hop_n);
            let mut prev = vec![0.0; cfg.hop_n];
            for f in &frames {
                let mut buf = prev.clone();
                buf.extend_from_slice(&f.samples);
                prev = f.samples.clone();
                let lp = lpc::LpModel::analyze(&buf, cfg.lpc_order_fdns, Taper::Hamming);
                lsf_corpus.push(lp.lsf.clone());
                let a = lpc::lsf_to_lpc(&lp.lsf);
                let env = lpc::freq_envelope(&a, cfg.weight_fdns, cfg.num_bins());
                let x = mclt.mclt_forward(&window.apply(&buf)).unwrap();
                let r = noise_shaping::fdns_apply(&x, &env);
                if let Some(roots) = noise_shaping::analysis_roots(
                    &r[cfg.ctns_start_bin..],
                    cfg.lpc_order_ctns,
                    cfg.weight_ctns,
                ) {
                    root_corpus.push(roots_to_vector(&roots));
                }
            }
        }
        // pad with mild perturbations to reach LBG's data requirement
        let mut i = 0;
        while lsf_corpus.len() < 520 {
            let mut v = lsf_corpus[i % lsf_corpus.len()].clone();
            for x in v.iter_mut() {
                *x = (*x + rng.gen_range(-0.01..0.01)).clamp(0.02, PI - 0.02);
            }
            v.sort_by(|a, b| a.partial_cmp(b).unwrap());
            lsf_corpus.push(v);
            i += 1;
        }
        while root_corpus.len() < 520 {
            let mut v = root_corpus[i % root_corpus.len()].clone();
            for x in v.iter_mut() {
                *x += rng.gen_range(-0.01..0.01);
            }
            root_corpus.push(v);
            i += 1;
        }
        let lsf_cb = lbg_train(&lsf_corpus, 6, 2, 5).unwrap();
        let root_cb = lbg_train(&root_corpus, 6, 3, 6).unwrap();
        (LsfQuantizer::new(lsf_cb), RootQuantizer::new(root_cb))
    }

    fn toy_encoder(opts: EncoderOptions) -> Encoder {
        let (l, r) = toy_quantizers();
        Encoder::with_quantizers(CodecConfig::default(), opts, l, r).unwrap()
    }

    fn toy_decoder() -> Decoder {
        let (l, r) = toy_quantizers();
        Decoder::with_quantizers(CodecConfig::default(), l, r).unwrap()
    }

    #[test]
    fn encoder_and_decoder_are_send_and_sync() {
        fn check<T: Send + Sync>() {}
        check::<Encoder>();
        check::<Decoder>();
    }

    #[test]
    fn codebook_dimension_mismatch_is_rejected() {
        let (l, _) = toy_quantizers();
        let bad_root = RootQuantizer::new(Codebook {
            dim: 6,
            stages: vec![crate::vq::Stage {
                bits: 1,
                centroids: vec![0.0; 12],
            }],
        });
        assert!(Encoder::with_quantizers(
            CodecConfig::default(),
            EncoderOptions::default(),
            l,
            bad_root
        )
        .is_err());
    }

    #[test]
    fn silent_frame_codes_to_side_info_only() {
        let mut enc = toy_encoder(EncoderOptions::default());
        let frame = AudioFrame {
            index: 0,
            samples: vec![0.0; 512],
        };
        let coded = enc.encode_frame(&frame).unwrap();
        assert!(!coded.info.ctns_active);
        // side info + scale factors + all-zero magnitudes compress hard
        assert!(
            coded.payload.len() < 60,
            "payload {} bytes",
            coded.payload.len()
        );
        let params = bitstream::unpack_frame(&coded.payload, enc.config(), false).unwrap();
        match params.coeffs {
            CoeffData::Quantized { mags, .. } => assert!(mags.iter().all(|&m| m == 0)),
            _ => panic!("expected quantized coefficients"),
        }
    }

    #[test]
    fn all_zero_stream_decodes_to_silence() {
        let cfg = CodecConfig::default();
        let (l, r) = toy_quantizers();
        let mut enc =
            Encoder::with_quantizers(cfg.clone(), EncoderOptions::default(), l, r).unwrap();
        let stream = encode_stream_with(&mut enc, &vec![0.0; 2048]).unwrap();
        let (l2, r2) = toy_quantizers();
        let mut dec = Decoder::with_quantizers(cfg, l2, r2).unwrap();
        let mut out = Vec::new();
        for f in &stream.frames {
            out.extend(dec.decode_frame(&f.payload).unwrap());
        }
        out.truncate(2048);
        assert_eq!(out.len(), 2048);
        assert!(out.iter().all(|&x| x.abs() < 1e-9));
    }

    #[test]
    fn bypass_round_trip_is_transparent_across_mode_switches() {
        // quantization bypassed, forced alternating modes: the chain must be
        // lossless, proving FDNS/CTNS/scaling inversion and TDAA end to end
        let cfg = CodecConfig::default();
        let clip = corpus::generate(CorpusKind::Mix, 11, 512 * 12, 12800);
        for mode in [CtnsMode::Auto, CtnsMode::ForcedOn, CtnsMode::ForcedOff] {
            let (l, r) = toy_quantizers();
            let mut enc = Encoder::with_quantizers(
                cfg.clone(),
                EncoderOptions {
                    ctns: mode,
                    bypass_quantization: true,
                },
                l,
                r,
            )
            .unwrap();
            let stream = encode_stream_with(&mut enc, &clip.samples).unwrap();
            let modes: Vec<bool> = stream.frames.iter().map(|f| f.info.ctns_active).collect();
            if mode == CtnsMode::Auto {
                assert!(modes.iter().any(|&m| m) || modes.iter().any(|&m| !m));
            }
            let (l2, r2) = toy_quantizers();
            let mut dec = Decoder::with_quantizers(cfg.clone(), l2, r2).unwrap();
            dec.set_bypass(true);
            let mut out = Vec::new();
            for f in &stream.frames {
                out.extend(dec.decode_frame(&f.payload).unwrap());
            }
            out.truncate(clip.samples.len());
            let err: f64 = clip
                .samples
                .iter()
                .zip(&out)
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            let sig: f64 = clip.samples.iter().map(|x| x * x).sum();
            let rel = (err / sig).sqrt();
            assert!(rel < 1e-9, "mode {:?} rel rms {}", mode, rel);
        }
    }

    #[test]
    fn quantized_round_trip_reconstructs_reasonably() {
        let cfg = CodecConfig::default();
        let clip = corpus::generate(CorpusKind::SpeechLike, 21, 512 * 10, 12800);
        let (l, r) = toy_quantizers();
        let mut enc =
            Encoder::with_quantizers(cfg.clone(), EncoderOptions::default(), l, r).unwrap();
        let stream = encode_stream_with(&mut enc, &clip.samples).unwrap();
        let bytes = stream.to_bytes().unwrap();

        // decoding serialized bytes equals decoding in-memory payloads
        let (l2, r2) = toy_quantizers();
        let mut dec = Decoder::with_quantizers(cfg.clone(), l2, r2).unwrap();
        let mut in_memory = Vec::new();
        for f in &stream.frames {
            in_memory.extend(dec.decode_frame(&f.payload).unwrap());
        }
        in_memory.truncate(clip.samples.len());

        let (header, payloads) = bitstream::read_stream(&mut std::io::Cursor::new(&bytes)).unwrap();
        let (l3, r3) = toy_quantizers();
        let mut dec2 = Decoder::with_quantizers(cfg.clone(), l3, r3).unwrap();
        dec2.set_bypass(header.bypass());
        let mut from_bytes = Vec::new();
        for p in &payloads {
            from_bytes.extend(dec2.decode_frame(p).unwrap());
        }
        from_bytes.truncate(header.sample_count as usize);
        assert_eq!(in_memory, from_bytes);

        // sanity: reconstruction correlates with the input
        let snr = crate::metrics::segsnr(&clip.samples, &in_memory, 512).unwrap();
        assert!(snr.mean > 3.0, "segSNR {}", snr.mean);
    }

    #[test]
    fn sample_count_restored_exactly() {
        let cfg = CodecConfig::default();
        let clip = corpus::generate(CorpusKind::Tone, 31, 512 * 5 + 137, 12800);
        let (l, r) = toy_quantizers();
        let mut enc =
            Encoder::with_quantizers(cfg.clone(), EncoderOptions::default(), l, r).unwrap();
        let stream = encode_stream_with(&mut enc, &clip.samples).unwrap();
        let bytes = stream.to_bytes().unwrap();
        let (header, payloads) = bitstream::read_stream(&mut std::io::Cursor::new(&bytes)).unwrap();
        let (l2, r2) = toy_quantizers();
        let mut dec = Decoder::with_quantizers(cfg.clone(), l2, r2).unwrap();
        dec.set_bypass(header.bypass());
        let mut out = Vec::new();
        for p in &payloads {
            out.extend(dec.decode_frame(p).unwrap());
        }
        assert!(out.len() >= clip.samples.len());
        out.truncate(header.sample_count as usize);
        assert_eq!(out.len(), clip.samples.len());
    }

    #[test]
    fn empty_input_gives_header_only_stream() {
        let (l, r) = toy_quantizers();
        let mut enc =
            Encoder::with_quantizers(CodecConfig::default(), EncoderOptions::default(), l, r)
                .unwrap();
        let stream = encode_stream_with(&mut enc, &[]).unwrap();
        assert_eq!(stream.frames.len(), 0);
        assert_eq!(stream.header.sample_count, 0);
    }

    #[test]
    fn corrupt_frame_reports_frame_index() {
        let (l, r) = toy_quantizers();
        let mut dec = Decoder::with_quantizers(CodecConfig::default(), l, r).unwrap();
        let _ = dec.decode_frame(&make_valid_payload()).unwrap();
        let err = dec.decode_frame(&[0x80]).unwrap_err();
        match err {
            CodecError::CorruptStream { frame, .. } => assert_eq!(frame, Some(1)),
            other => panic!("unexpected error {:?}", other),
        }
    }

    fn make_valid_payload() -> Vec<u8> {
        let cfg = CodecConfig::default();
        let params = FrameParameters {
            ctns_active: false,
            lsf_indices: [0, 0],
            root_indices: None,
            scale: ScaleFactors { indices: [64; 8] },
            coeffs: CoeffData::Quantized {
                mags: vec![0; cfg.num_bins()],
                aux: AuxData::Signs(vec![]),
            },
        };
        bitstream::pack_frame(&params, &cfg).0
    }

    #[test]
    fn reported_bits_equal_payload_bits() {
        let cfg = CodecConfig::default();
        let clip = corpus::generate(CorpusKind::Mix, 41, 512 * 8, 12800);
        let (l, r) = toy_quantizers();
        let mut enc = Encoder::with_quantizers(cfg, EncoderOptions::default(), l, r).unwrap();
        let stream = encode_stream_with(&mut enc, &clip.samples).unwrap();
        for f in &stream.frames {
            assert_eq!(f.info.acct.total_bits, f.payload.len() as u64 * 8);
            let side = if f.info.ctns_active { 54 } else { 21 };
            assert_eq!(f.info.acct.side_bits, side);
        }
    }
}
