//! Command line front end: encode, decode, quality measurement, codebook
//! training, synthetic corpus generation, and stream inspection.

use clap::{Parser, Subcommand, ValueEnum};
use mclt_codec::bitstream;
use mclt_codec::codec::{self, CtnsMode, EncoderOptions};
use mclt_codec::config::CodecConfig;
use mclt_codec::corpus::{self, CorpusKind};
use mclt_codec::error::CodecError;
use mclt_codec::framing::frame_stream;
use mclt_codec::lpc::{self, Taper};
use mclt_codec::metrics;
use mclt_codec::noise_shaping;
use mclt_codec::transforms::{Mclt, WindowPair};
use mclt_codec::vq;
use mclt_codec::wav;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "mclt", version, about = "MCLT transform audio codec tools")]
struct Cli {
    /// Optional key=value config file overriding the defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum CtnsArg {
    On,
    Off,
    Auto,
}

#[derive(Clone, Copy, ValueEnum)]
enum VqKind {
    Lsf,
    Roots,
}

#[derive(Subcommand)]
enum Command {
    /// Encode a 16-bit mono WAV into a coded stream.
    Encode {
        #[arg(short = 'i', long)]
        input: PathBuf,
        #[arg(short = 'o', long)]
        output: PathBuf,
        /// Multiply every target-bit figure (rate control knob).
        #[arg(long)]
        bitrate_scale: Option<f64>,
        /// CTNS gating: on, off, or auto (gain-threshold driven).
        #[arg(long, value_enum, default_value = "auto")]
        force_ctns: CtnsArg,
        /// Diagnostic: skip coefficient quantization (lossless transport).
        #[arg(long)]
        bypass_quant: bool,
    },
    /// Decode a coded stream back to WAV.
    Decode {
        #[arg(short = 'i', long)]
        input: PathBuf,
        #[arg(short = 'o', long)]
        output: PathBuf,
        /// Disable time-domain aliasing augmentation (ablation).
        #[arg(long)]
        no_tdaa: bool,
    },
    /// Segmental SNR between a reference and a test WAV.
    Segsnr {
        #[arg(short = 'r', long)]
        reference: PathBuf,
        #[arg(short = 't', long)]
        test: PathBuf,
        #[arg(long, default_value_t = 512)]
        seg: usize,
    },
    /// Train a codebook on the synthetic corpus and write it to a file.
    TrainVq {
        #[arg(long, value_enum)]
        kind: VqKind,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(short = 'o', long)]
        output: PathBuf,
        /// Analysis frames to harvest per corpus clip set.
        #[arg(long, default_value_t = 20000)]
        frames: usize,
    },
    /// Generate a synthetic test clip as WAV.
    GenCorpus {
        #[arg(long)]
        kind: CorpusKindArg,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(short = 'o', long)]
        output: PathBuf,
        /// Clip length in seconds.
        #[arg(long, default_value_t = 4.0)]
        seconds: f64,
        /// Also write onset positions (one per line) next to the WAV.
        #[arg(long)]
        onsets: Option<PathBuf>,
    },
    /// Print per-frame flags and bit counts of a coded stream.
    Inspect {
        #[arg(short = 'i', long)]
        input: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum CorpusKindArg {
    Castanet,
    Tone,
    Speechlike,
    Mix,
}

impl From<CorpusKindArg> for CorpusKind {
    fn from(k: CorpusKindArg) -> Self {
        match k {
            CorpusKindArg::Castanet => CorpusKind::Castanet,
            CorpusKindArg::Tone => CorpusKind::Tone,
            CorpusKindArg::Speechlike => CorpusKind::SpeechLike,
            CorpusKindArg::Mix => CorpusKind::Mix,
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            // clap prints its own message; distinguish help/version from misuse
            use clap::error::ErrorKind;
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    let cfg = match &cli.config {
        Some(path) => match CodecConfig::from_key_value_file(path) {
            Ok(c) => c,
            Err(e) => {
                eprintln!("mclt: {}", e);
                return ExitCode::from(2);
            }
        },
        None => CodecConfig::default(),
    };
    match run(cli.command, cfg) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("mclt: {}", e);
            ExitCode::from(2)
        }
    }
}

fn run(command: Command, mut cfg: CodecConfig) -> Result<(), CodecError> {
    match command {
        Command::Encode {
            input,
            output,
            bitrate_scale,
            force_ctns,
            bypass_quant,
        } => {
            if let Some(s) = bitrate_scale {
                cfg.bit_budget_scale = s;
                cfg.validate()?;
            }
            let (rate, samples) = wav::read_wav(&input)?;
            if rate != cfg.sample_rate_hz {
                return Err(CodecError::UnsupportedFormat(format!(
                    "input is {} Hz; the codec runs at {} Hz (resample externally)",
                    rate, cfg.sample_rate_hz
                )));
            }
            let opts = EncoderOptions {
                ctns: match force_ctns {
                    CtnsArg::On => CtnsMode::ForcedOn,
                    CtnsArg::Off => CtnsMode::ForcedOff,
                    CtnsArg::Auto => CtnsMode::Auto,
                },
                bypass_quantization: bypass_quant,
            };
            let stream = codec::encode_stream(&samples, &cfg, &opts)?;
            std::fs::write(&output, stream.to_bytes()?)?;
            let ctns_frames = stream.frames.iter().filter(|f| f.info.ctns_active).count();
            println!(
                "frames={} ctns_frames={} mean_bits_per_frame={:.1} kbps={:.2}",
                stream.frames.len(),
                ctns_frames,
                stream.mean_frame_bits(),
                stream.mean_frame_bits() * cfg.sample_rate_hz as f64 / cfg.hop_n as f64 / 1000.0
            );
            Ok(())
        }
        Command::Decode {
            input,
            output,
            no_tdaa,
        } => {
            let bytes = std::fs::read(&input)?;
            let decoded = codec::decode_bytes(&bytes, &cfg, !no_tdaa)?;
            wav::write_wav(&output, &decoded.samples, decoded.sample_rate)?;
            println!(
                "samples={} rate={}",
                decoded.samples.len(),
                decoded.sample_rate
            );
            Ok(())
        }
        Command::Segsnr {
            reference,
            test,
            seg,
        } => {
            let (_, r) = wav::read_wav(&reference)?;
            let (_, t) = wav::read_wav(&test)?;
            let rep = metrics::segsnr(&r, &t, seg)?;
            println!("{:.2}", rep.mean);
            Ok(())
        }
        Command::TrainVq {
            kind,
            seed,
            output,
            frames,
        } => {
            let book = match kind {
                VqKind::Lsf => train_lsf(&cfg, seed, frames)?,
                VqKind::Roots => train_roots(&cfg, seed, frames)?,
            };
            book.save(&output)?;
            println!(
                "wrote {} ({} stages, dim {})",
                output.display(),
                book.stages.len(),
                book.dim
            );
            Ok(())
        }
        Command::GenCorpus {
            kind,
            seed,
            output,
            seconds,
            onsets,
        } => {
            let len = (seconds * cfg.sample_rate_hz as f64) as usize;
            let clip = corpus::generate(kind.into(), seed, len, cfg.sample_rate_hz);
            wav::write_wav(&output, &clip.samples, cfg.sample_rate_hz)?;
            if let Some(path) = onsets {
                let text: String = clip.onsets.iter().map(|o| format!("{}\n", o)).collect();
                std::fs::write(path, text)?;
            }
            println!(
                "samples={} onsets={}",
                clip.samples.len(),
                clip.onsets.len()
            );
            Ok(())
        }
        Command::Inspect { input } => {
            let bytes = std::fs::read(&input)?;
            let (header, payloads) = bitstream::read_stream(&mut std::io::Cursor::new(&bytes))?;
            println!(
                "header version={} flags={} rate={} hop={} frames={} samples={}",
                header.version,
                header.flags,
                header.sample_rate,
                header.hop,
                header.frame_count,
                header.sample_count
            );
            // pooled index sequences for the ideal-entropy rate report
            let mut sf_low = Vec::new();
            let mut sf_high = Vec::new();
            let mut band_mags: Vec<Vec<u32>> = vec![Vec::new(); 8];
            let mut aux_bits = 0u64;
            let mut total_bits = 0u64;
            for (i, p) in payloads.iter().enumerate() {
                let params = bitstream::unpack_frame(p, &cfg, header.bypass())?;
                let (nonzero, kind) = match &params.coeffs {
                    bitstream::CoeffData::Quantized { mags, .. } => {
                        for (f, &m) in mags.iter().enumerate() {
                            band_mags[cfg.band_of_bin(f)].push(m);
                        }
                        (mags.iter().filter(|&&m| m > 0).count(), "quant")
                    }
                    bitstream::CoeffData::Bypass(_) => (0, "bypass"),
                };
                for b in 0..4 {
                    sf_low.push(params.scale.indices[b] as u32);
                    sf_high.push(params.scale.indices[b + 4] as u32);
                }
                aux_bits +=
                    nonzero as u64 * if params.ctns_active { cfg.phase_bits as u64 } else { 1 };
                total_bits += p.len() as u64 * 8;
                println!(
                    "frame={} ctns={} bits={} kind={} nonzero={} sf={:?}",
                    i,
                    params.ctns_active as u8,
                    p.len() * 8,
                    kind,
                    nonzero,
                    params.scale.indices
                );
            }
            if !payloads.is_empty() && !header.bypass() {
                // sample entropies of the quadruple-grouped index sequences
                let sf_ideal = bitstream::entropy_estimate(&sf_low, 4)
                    + bitstream::entropy_estimate(&sf_high, 4);
                let mag_ideal: f64 = band_mags
                    .iter()
                    .map(|seq| bitstream::entropy_estimate(seq, 4))
                    .sum();
                println!(
                    "ideal_bits sf={:.0} mags={:.0} aux={} total={:.0} actual_total={}",
                    sf_ideal,
                    mag_ideal,
                    aux_bits,
                    sf_ideal + mag_ideal + aux_bits as f64,
                    total_bits
                );
            }
            Ok(())
        }
    }
}

/// Harvest analysis vectors from the seeded synthetic corpus: all four kinds,
/// several seeds each, until `frames` vectors exist.
fn harvest<F: FnMut(&[f64], &CodecConfig)>(
    cfg: &CodecConfig,
    seed: u64,
    frames: usize,
    mut sink: F,
) -> usize {
    let kinds = [
        CorpusKind::Castanet,
        CorpusKind::Tone,
        CorpusKind::SpeechLike,
        CorpusKind::Mix,
    ];
    let clip_len = cfg.sample_rate_hz as usize * 4;
    let mut produced = 0;
    let mut round = 0u64;
    while produced < frames {
        for (ki, kind) in kinds.iter().enumerate() {
            let clip = corpus::generate(
                *kind,
                seed ^ (round * 4 + ki as u64),
                clip_len,
                cfg.sample_rate_hz,
            );
            let hops = frame_stream(&clip.samples, cfg.hop_n);
            let mut prev = vec![0.0; cfg.hop_n];
            for h in &hops {
                let mut buf = prev.clone();
                buf.extend_from_slice(&h.samples);
                prev = h.samples.clone();
                sink(&buf, cfg);
                produced += 1;
            }
        }
        round += 1;
    }
    produced
}

fn train_lsf(cfg: &CodecConfig, seed: u64, frames: usize) -> Result<vq::Codebook, CodecError> {
    let mut vectors = Vec::new();
    harvest(cfg, seed, frames, |buf, cfg| {
        let lp = lpc::LpModel::analyze(buf, cfg.lpc_order_fdns, Taper::Hamming);
        vectors.push(lp.lsf);
    });
    vq::lbg_train(&vectors, 10, 2, seed)
}

fn train_roots(cfg: &CodecConfig, seed: u64, frames: usize) -> Result<vq::Codebook, CodecError> {
    let mclt = Mclt::new(cfg.hop_n);
    let window = WindowPair::new(cfg.hop_n);
    let mut vectors = Vec::new();
    harvest(cfg, seed, frames, |buf, cfg| {
        let lp = lpc::LpModel::analyze(buf, cfg.lpc_order_fdns, Taper::Hamming);
        let a = lpc::lsf_to_lpc(&lp.lsf);
        let env = lpc::freq_envelope(&a, cfg.weight_fdns, cfg.num_bins());
        let x = mclt
            .mclt_forward(&window.apply(buf))
            .expect("buffer length");
        let r = noise_shaping::fdns_apply(&x, &env);
        if let Some(roots) = noise_shaping::analysis_roots(
            &r[cfg.ctns_start_bin..],
            cfg.lpc_order_ctns,
            cfg.weight_ctns,
        ) {
            vectors.push(vq::roots_to_vector(&roots));
        }
    });
    vq::lbg_train(&vectors, 11, 3, seed)
}
