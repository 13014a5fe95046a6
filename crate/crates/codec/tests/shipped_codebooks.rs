//! Quality checks against the codebooks shipped in `data/`.

use mclt_codec::config::CodecConfig;
use mclt_codec::corpus::{self, CorpusKind};
use mclt_codec::framing::frame_stream;
use mclt_codec::lpc::{self, Taper};
use mclt_codec::vq;

/// Log-spectral distortion between the envelopes of two LPC models, in dB.
fn spectral_distortion(a: &[f64], b: &[f64], bins: usize) -> f64 {
    let e1 = lpc::freq_envelope(a, 1.0, bins);
    let e2 = lpc::freq_envelope(b, 1.0, bins);
    let acc: f64 = e1
        .db
        .iter()
        .zip(&e2.db)
        .map(|(x, y)| (x - y) * (x - y))
        .sum();
    (acc / bins as f64).sqrt()
}

#[test]
fn lsf_round_trip_spectral_distortion_under_4_db() {
    let cfg = CodecConfig::default();
    let (lsfq, _) = vq::load_default_codebooks().unwrap();
    let mut total = 0.0;
    let mut frames = 0usize;
    for seed in 0..4u64 {
        let clip = corpus::generate(CorpusKind::SpeechLike, 50 + seed, 12800 * 2, 12800);
        let hops = frame_stream(&clip.samples, cfg.hop_n);
        let mut prev = vec![0.0; cfg.hop_n];
        for h in &hops {
            let mut buf = prev.clone();
            buf.extend_from_slice(&h.samples);
            prev = h.samples.clone();
            let lp = lpc::LpModel::analyze(&buf, cfg.lpc_order_fdns, Taper::Hamming);
            let idx = lsfq.quantize(&lp.lsf);
            let back = lsfq.dequantize(&idx).unwrap();
            let a = lpc::lsf_to_lpc(&lp.lsf);
            let ahat = lpc::lsf_to_lpc(&back);
            total += spectral_distortion(&a, &ahat, 256);
            frames += 1;
        }
    }
    let mean_sd = total / frames as f64;
    assert!(mean_sd < 4.0, "mean spectral distortion {:.2} dB", mean_sd);
    println!(
        "shipped LSF codebook: mean SD {:.2} dB over {} frames",
        mean_sd, frames
    );
}

#[test]
fn every_decoded_root_model_is_stable() {
    let (_, rootq) = vq::load_default_codebooks().unwrap();
    // exhaustive over stage 1, sampled over stages 2 and 3
    let samples: [(u16, u16); 5] = [(0, 0), (511, 1033), (2047, 2047), (77, 900), (1500, 3)];
    for i in 0..2048u16 {
        for &(j, k) in &samples {
            let model = rootq.dequantize(&[i, j, k]).unwrap();
            assert_eq!(model.roots.len(), 10);
            assert!(
                model
                    .roots
                    .iter()
                    .all(|r| r.norm() <= vq::ROOT_MAX_MAG + 1e-12),
                "indices ({}, {}, {})",
                i,
                j,
                k
            );
        }
    }
}

#[test]
fn stage_one_codewords_re_encode_to_themselves() {
    // refinement stages carry an exact zero codeword; decoding any stage-1
    // index with it and re-encoding must reproduce the indices
    let (lsfq, _) = vq::load_default_codebooks().unwrap();
    let cb = &lsfq.codebook;
    let zero = (0..cb.stages[1].codewords())
        .find(|&i| cb.stages[1].centroid(i).iter().all(|&x| x == 0.0))
        .expect("stage 2 has a zero codeword");
    for i in 0..cb.stages[0].codewords() {
        let rec = cb.decode(&[i as u16, zero as u16]).unwrap();
        let idx = cb.encode(&rec, None);
        assert_eq!(idx, vec![i as u16, zero as u16], "stage-1 index {}", i);
    }
}

#[test]
fn sine_stays_real_and_impulse_train_goes_complex() {
    use mclt_codec::codec::{self, EncoderOptions};
    let cfg = CodecConfig::default();
    let fs = cfg.sample_rate_hz as f64;

    // pure 1 kHz sine: the CTNS flag stays off once the tone is running
    let sine: Vec<f64> = (0..12800 * 2)
        .map(|n| 0.4 * (2.0 * std::f64::consts::PI * 1000.0 * n as f64 / fs).sin())
        .collect();
    let stream = codec::encode_stream(&sine, &cfg, &EncoderOptions::default()).unwrap();
    let on = stream.frames[1..stream.frames.len() - 1]
        .iter()
        .filter(|f| f.info.ctns_active)
        .count();
    assert_eq!(on, 0, "CTNS fired on {} sine frames", on);

    // periodic clicks: strong temporal structure, the flag engages
    let mut clicks = vec![0.0; 12800 * 2];
    let mut i = 100;
    while i < clicks.len() {
        clicks[i] = 0.8;
        i += 913; // a couple of clicks per frame, incommensurate with the hop
    }
    let stream = codec::encode_stream(&clicks, &cfg, &EncoderOptions::default()).unwrap();
    let frames = &stream.frames[1..stream.frames.len() - 1];
    let on = frames.iter().filter(|f| f.info.ctns_active).count();
    assert!(
        on * 10 >= frames.len() * 8,
        "CTNS fired on only {}/{} impulse-train frames",
        on,
        frames.len()
    );
}

#[test]
fn decoder_never_panics_on_garbage() {
    use mclt_codec::codec::Decoder;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};
    let cfg = CodecConfig::default();
    let mut rng = StdRng::seed_from_u64(4242);
    let mut dec = Decoder::new(cfg).unwrap();
    let mut ok = 0;
    let mut err = 0;
    for _ in 0..300 {
        let len = rng.gen_range(0..400);
        let payload: Vec<u8> = (0..len).map(|_| rng.gen()).collect();
        match dec.decode_frame(&payload) {
            Ok(_) => ok += 1,
            Err(_) => {
                err += 1;
                dec.reset();
            }
        }
    }
    // some random payloads happen to parse (the entropy section reads
    // phantom zeros past the end); the point is that none of them panic
    println!("garbage payloads: {} decoded, {} rejected", ok, err);
}

#[test]
fn codebook_headers_match_the_operating_point() {
    let (lsfq, rootq) = vq::load_default_codebooks().unwrap();
    assert_eq!(lsfq.codebook.dim, 16);
    assert_eq!(lsfq.codebook.stages.len(), 2);
    assert!(lsfq.codebook.stages.iter().all(|s| s.bits == 10));
    assert_eq!(rootq.codebook.dim, 20);
    assert_eq!(rootq.codebook.stages.len(), 3);
    assert!(rootq.codebook.stages.iter().all(|s| s.bits == 11));
}
