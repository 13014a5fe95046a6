//! Frame serialization: fixed side-info fields, an adaptive byte-oriented
//! range coder for scale factors and coefficient indices, ideal-entropy
//! accounting, and the stream container.
//!
//! Layout of one coded frame:
//!   - side info, MSB-first bits: ctns flag (1), LSF indices (2 x 10),
//!     root indices (3 x 11, present iff the flag is set), zero padding to a
//!     byte boundary (padding bits are reserved and must be zero)
//!   - range-coded section: 8 scale-factor indices (128-symbol adaptive
//!     model), magnitude indices per bin (17-symbol adaptive model per
//!     sub-band, symbol 16 escapes to an Exp-Golomb tail), then one aux field
//!     per nonzero magnitude (6 raw phase bits in complex mode, 1 raw sign
//!     bit in real mode)
//!
//! Adaptive models reset at every frame, so frames decode independently.
//!
//! Container: magic "MCLT", version (u16), flags (u16, bit 0 = quantization
//! bypassed), sample rate (u32), hop (u32), frame count (u32), sample count
//! (u64), then length-prefixed (u32) frame payloads. All integers little
//! endian.

use crate::config::{CodecConfig, NUM_SUBBANDS};
use crate::error::{CodecError, Result};
use crate::rate_control::ScaleFactors;
use num_complex::Complex64;
use std::collections::HashMap;
use std::io::{Read, Write};

pub const STREAM_MAGIC: &[u8; 4] = b"MCLT";
pub const STREAM_VERSION: u16 = 1;
pub const FLAG_BYPASS: u16 = 1;
/// Hard cap on a single frame's serialized size.
pub const MAX_FRAME_BYTES: usize = 1 << 24;

const RC_TOP: u32 = 1 << 24;
const MODEL_MAX_TOTAL: u32 = 1 << 16;
const MODEL_INCREMENT: u32 = 32;
/// Magnitude symbols 0..=15 code directly; 16 escapes.
const MAG_ESCAPE: u32 = 16;

// ---------------------------------------------------------------------------
// bit-level I/O for the fixed side-info section

#[derive(Default)]
pub struct BitWriter {
    bytes: Vec<u8>,
    used: usize, // bits used in the last byte (0..8, 0 = none pending)
}

impl BitWriter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push_bit(&mut self, bit: bool) {
        if self.used == 0 {
            self.bytes.push(0);
        }
        if bit {
            let last = self.bytes.last_mut().unwrap();
            *last |= 1 << (7 - self.used);
        }
        self.used = (self.used + 1) % 8;
    }

    /// MSB-first write of the low `n` bits of `value`.
    pub fn push_bits(&mut self, value: u64, n: u32) {
        for i in (0..n).rev() {
            self.push_bit((value >> i) & 1 == 1);
        }
    }

    pub fn bits_written(&self) -> usize {
        if self.used == 0 {
            self.bytes.len() * 8
        } else {
            (self.bytes.len() - 1) * 8 + self.used
        }
    }

    /// Zero-pad to a byte boundary and return the buffer.
    pub fn finish(mut self) -> Vec<u8> {
        while self.used != 0 {
            self.push_bit(false);
        }
        self.bytes
    }
}

pub struct BitReader<'a> {
    bytes: &'a [u8],
    pos: usize, // bit position
}

impl<'a> BitReader<'a> {
    pub fn new(bytes: &'a [u8]) -> Self {
        BitReader { bytes, pos: 0 }
    }

    pub fn read_bit(&mut self) -> Result<bool> {
        let byte = self.pos / 8;
        if byte >= self.bytes.len() {
            return Err(CodecError::CorruptStream {
                frame: None,
                detail: "truncated side info".into(),
            });
        }
        let bit = (self.bytes[byte] >> (7 - self.pos % 8)) & 1 == 1;
        self.pos += 1;
        Ok(bit)
    }

    pub fn read_bits(&mut self, n: u32) -> Result<u64> {
        let mut v = 0u64;
        for _ in 0..n {
            v = (v << 1) | self.read_bit()? as u64;
        }
        Ok(v)
    }

    pub fn bit_pos(&self) -> usize {
        self.pos
    }

    /// Consume padding up to the next byte boundary, requiring zeros.
    pub fn align_checked(&mut self) -> Result<()> {
        while self.pos % 8 != 0 {
            if self.read_bit()? {
                return Err(CodecError::CorruptStream {
                    frame: None,
                    detail: "reserved padding bits are nonzero".into(),
                });
            }
        }
        Ok(())
    }

    pub fn byte_pos(&self) -> usize {
        self.pos / 8
    }
}

// ---------------------------------------------------------------------------
// range coder

/// Adaptive frequency table over a small alphabet.
#[derive(Debug, Clone)]
pub struct AdaptiveModel {
    freq: Vec<u32>,
    total: u32,
}

impl AdaptiveModel {
    pub fn new(symbols: usize) -> Self {
        AdaptiveModel {
            freq: vec![1; symbols],
            total: symbols as u32,
        }
    }

    fn lookup(&self, sym: usize) -> (u32, u32) {
        let cum = self.freq[..sym].iter().sum();
        (cum, self.freq[sym])
    }

    fn find(&self, dv: u32) -> (usize, u32, u32) {
        let mut cum = 0;
        for (sym, &f) in self.freq.iter().enumerate() {
            if dv < cum + f {
                return (sym, cum, f);
            }
            cum += f;
        }
        let last = self.freq.len() - 1;
        (last, cum - self.freq[last], self.freq[last])
    }

    pub fn update(&mut self, sym: usize) {
        self.freq[sym] += MODEL_INCREMENT;
        self.total += MODEL_INCREMENT;
        if self.total >= MODEL_MAX_TOTAL {
            self.total = 0;
            for f in self.freq.iter_mut() {
                *f = (*f >> 1).max(1);
                self.total += *f;
            }
        }
    }
}

pub struct RangeEncoder {
    low: u64,
    range: u32,
    cache: u8,
    cache_size: u64,
    out: Vec<u8>,
    started: bool,
    /// Information content pushed so far (ideal bits).
    cost_bits: f64,
}

impl Default for RangeEncoder {
    fn default() -> Self {
        Self::new()
    }
}

impl RangeEncoder {
    pub fn new() -> Self {
        RangeEncoder {
            low: 0,
            range: u32::MAX,
            cache: 0,
            cache_size: 1,
            out: Vec::new(),
            started: false,
            cost_bits: 0.0,
        }
    }

    fn shift_low(&mut self) {
        if (self.low as u32) < 0xFF00_0000 || (self.low >> 32) != 0 {
            let carry = (self.low >> 32) as u8;
            let mut temp = self.cache;
            loop {
                self.out.push(temp.wrapping_add(carry));
                temp = 0xFF;
                self.cache_size -= 1;
                if self.cache_size == 0 {
                    break;
                }
            }
            self.cache = (self.low >> 24) as u8;
        }
        self.cache_size += 1;
        self.low = (self.low & 0x00FF_FFFF) << 8;
    }

    fn encode(&mut self, cum: u32, freq: u32, total: u32) {
        debug_assert!(freq > 0 && cum + freq <= total && total <= MODEL_MAX_TOTAL);
        let r = self.range / total;
        self.low += r as u64 * cum as u64;
        self.range = r * freq;
        self.cost_bits -= (freq as f64 / total as f64).log2();
        self.started = true;
        while self.range < RC_TOP {
            self.range <<= 8;
            self.shift_low();
        }
    }

    pub fn encode_symbol(&mut self, sym: usize, model: &mut AdaptiveModel) {
        let (cum, freq) = model.lookup(sym);
        self.encode(cum, freq, model.total);
        model.update(sym);
    }

    /// Uniform raw bits (MSB first).
    pub fn encode_raw(&mut self, value: u32, bits: u32) {
        for i in (0..bits).rev() {
            let b = (value >> i) & 1;
            self.encode(b, 1, 2);
        }
    }

    /// Order-0 Exp-Golomb for arbitrary magnitudes below u32::MAX.
    pub fn encode_exp_golomb(&mut self, v: u32) {
        debug_assert!(v < u32::MAX);
        let n = 31 - (v + 1).leading_zeros();
        self.encode_raw(0, n);
        self.encode_raw(v + 1, n + 1);
    }

    pub fn cost_bits(&self) -> f64 {
        self.cost_bits
    }

    pub fn finish(mut self) -> Vec<u8> {
        if !self.started {
            return Vec::new();
        }
        for _ in 0..5 {
            self.shift_low();
        }
        self.out
    }
}

pub struct RangeDecoder<'a> {
    code: u32,
    range: u32,
    r: u32,
    input: &'a [u8],
    pos: usize,
}

impl<'a> RangeDecoder<'a> {
    pub fn new(input: &'a [u8]) -> Self {
        let mut d = RangeDecoder {
            code: 0,
            range: u32::MAX,
            r: 0,
            input,
            pos: 0,
        };
        for _ in 0..5 {
            d.code = (d.code << 8) | d.next_byte() as u32;
        }
        d
    }

    fn next_byte(&mut self) -> u8 {
        let b = self.input.get(self.pos).copied().unwrap_or(0);
        self.pos += 1;
        b
    }

    fn decode_freq(&mut self, total: u32) -> u32 {
        self.r = self.range / total;
        (self.code / self.r).min(total - 1)
    }

    fn decode_update(&mut self, cum: u32, freq: u32) {
        self.code -= self.r * cum;
        self.range = self.r * freq;
        while self.range < RC_TOP {
            self.code = (self.code << 8) | self.next_byte() as u32;
            self.range <<= 8;
        }
    }

    pub fn decode_symbol(&mut self, model: &mut AdaptiveModel) -> usize {
        let dv = self.decode_freq(model.total);
        let (sym, cum, freq) = model.find(dv);
        self.decode_update(cum, freq);
        model.update(sym);
        sym
    }

    pub fn decode_raw(&mut self, bits: u32) -> u32 {
        let mut v = 0;
        for _ in 0..bits {
            let b = self.decode_freq(2);
            self.decode_update(b, 1);
            v = (v << 1) | b;
        }
        v
    }

    pub fn decode_exp_golomb(&mut self) -> u32 {
        let mut n = 0;
        while self.decode_raw(1) == 0 {
            n += 1;
            if n > 31 {
                return u32::MAX; // corrupt; caller rejects
            }
        }
        let mut v = 1u64;
        for _ in 0..n {
            v = (v << 1) | self.decode_raw(1) as u64;
        }
        (v - 1) as u32
    }
}

// ---------------------------------------------------------------------------
// entropy accounting

/// Sample entropy of the sequence grouped into `group`-tuples: the ideal bit
/// count of a static coder matched to the tuple histogram.
pub fn entropy_estimate(indices: &[u32], group: usize) -> f64 {
    assert!(group > 0);
    let mut hist: HashMap<&[u32], u64> = HashMap::new();
    let mut tuples = 0u64;
    for chunk in indices.chunks(group) {
        *hist.entry(chunk).or_insert(0) += 1;
        tuples += 1;
    }
    if tuples == 0 {
        return 0.0;
    }
    let t = tuples as f64;
    hist.values()
        .map(|&c| {
            let cf = c as f64;
            -cf * (cf / t).log2()
        })
        .sum()
}

// ---------------------------------------------------------------------------
// frame parameters and packing

/// Coefficient vector in either coding mode.
#[derive(Debug, Clone, PartialEq)]
pub enum Spectrum {
    Real(Vec<f64>),
    Complex(Vec<Complex64>),
}

impl Spectrum {
    pub fn len(&self) -> usize {
        match self {
            Spectrum::Real(v) => v.len(),
            Spectrum::Complex(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Phase indices (complex frames) or sign bits (real frames), one entry per
/// nonzero magnitude in bin order.
#[derive(Debug, Clone, PartialEq)]
pub enum AuxData {
    Phases(Vec<u8>),
    Signs(Vec<bool>),
}

#[derive(Debug, Clone, PartialEq)]
pub enum CoeffData {
    Quantized {
        mags: Vec<u32>,
        aux: AuxData,
    },
    /// Diagnostic mode: exact scaled coefficients, no quantization.
    Bypass(Spectrum),
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrameParameters {
    pub ctns_active: bool,
    pub lsf_indices: [u16; 2],
    pub root_indices: Option<[u16; 3]>,
    pub scale: ScaleFactors,
    pub coeffs: CoeffData,
}

/// Bit accounting produced while packing.
#[derive(Debug, Clone, Copy, Default)]
pub struct BitAccounting {
    pub total_bits: u64,
    pub side_bits: u64,
    pub pad_bits: u64,
    /// Ideal bits spent on the scale-factor section.
    pub sf_cost_bits: f64,
    /// Ideal bits spent on magnitudes plus aux fields.
    pub coeff_cost_bits: f64,
}

fn side_info_bits(params: &FrameParameters) -> BitWriter {
    let mut bw = BitWriter::new();
    bw.push_bit(params.ctns_active);
    bw.push_bits(params.lsf_indices[0] as u64, 10);
    bw.push_bits(params.lsf_indices[1] as u64, 10);
    if let Some(roots) = params.root_indices {
        for r in roots {
            bw.push_bits(r as u64, 11);
        }
    }
    bw
}

/// Serialize one frame. Consistency between `ctns_active`, `root_indices`
/// and the coefficient kind is the caller's contract and asserted here.
pub fn pack_frame(params: &FrameParameters, cfg: &CodecConfig) -> (Vec<u8>, BitAccounting) {
    assert_eq!(params.ctns_active, params.root_indices.is_some());
    let bw = side_info_bits(params);
    let side_bits = bw.bits_written() as u64;
    let mut payload = bw.finish();
    let pad_bits = payload.len() as u64 * 8 - side_bits;
    let mut acct = BitAccounting {
        side_bits,
        pad_bits,
        ..Default::default()
    };

    match &params.coeffs {
        CoeffData::Quantized { mags, aux } => {
            assert_eq!(mags.len(), cfg.num_bins());
            let mut rc = RangeEncoder::new();
            let mut sf_model = AdaptiveModel::new(crate::rate_control::SF_LEVELS);
            for b in 0..NUM_SUBBANDS {
                rc.encode_symbol(params.scale.indices[b] as usize, &mut sf_model);
            }
            acct.sf_cost_bits = rc.cost_bits();

            let mut mag_models: Vec<AdaptiveModel> =
                (0..NUM_SUBBANDS).map(|_| AdaptiveModel::new(17)).collect();
            for (f, &m) in mags.iter().enumerate() {
                let band = cfg.band_of_bin(f);
                if m >= MAG_ESCAPE {
                    rc.encode_symbol(MAG_ESCAPE as usize, &mut mag_models[band]);
                    rc.encode_exp_golomb(m - MAG_ESCAPE);
                } else {
                    rc.encode_symbol(m as usize, &mut mag_models[band]);
                }
            }
            let nonzero = mags.iter().filter(|&&m| m > 0).count();
            match aux {
                AuxData::Phases(ph) => {
                    assert_eq!(ph.len(), nonzero);
                    for &p in ph {
                        rc.encode_raw(p as u32, cfg.phase_bits);
                    }
                }
                AuxData::Signs(sg) => {
                    assert_eq!(sg.len(), nonzero);
                    for &s in sg {
                        rc.encode_raw(s as u32, 1);
                    }
                }
            }
            acct.coeff_cost_bits = rc.cost_bits() - acct.sf_cost_bits;
            payload.extend(rc.finish());
        }
        CoeffData::Bypass(spec) => {
            let mut bw = BitWriter::new();
            for b in 0..NUM_SUBBANDS {
                bw.push_bits(params.scale.indices[b] as u64, 7);
            }
            payload.extend(bw.finish());
            match spec {
                Spectrum::Real(v) => {
                    assert_eq!(v.len(), cfg.num_bins());
                    for x in v {
                        payload.extend_from_slice(&x.to_le_bytes());
                    }
                }
                Spectrum::Complex(v) => {
                    assert_eq!(v.len(), cfg.num_bins());
                    for c in v {
                        payload.extend_from_slice(&c.re.to_le_bytes());
                        payload.extend_from_slice(&c.im.to_le_bytes());
                    }
                }
            }
        }
    }

    acct.total_bits = payload.len() as u64 * 8;
    (payload, acct)
}

/// Deserialize one frame; `bypass` comes from the stream header flags.
pub fn unpack_frame(payload: &[u8], cfg: &CodecConfig, bypass: bool) -> Result<FrameParameters> {
    let mut br = BitReader::new(payload);
    let ctns_active = br.read_bit()?;
    let lsf_indices = [br.read_bits(10)? as u16, br.read_bits(10)? as u16];
    let root_indices = if ctns_active {
        Some([
            br.read_bits(11)? as u16,
            br.read_bits(11)? as u16,
            br.read_bits(11)? as u16,
        ])
    } else {
        None
    };
    br.align_checked()?;
    let offset = br.byte_pos();

    if bypass {
        let mut br = BitReader::new(&payload[offset..]);
        let mut indices = [0u8; NUM_SUBBANDS];
        for i in indices.iter_mut() {
            *i = br.read_bits(7)? as u8;
        }
        while br.bit_pos() % 8 != 0 {
            br.read_bit()?;
        }
        let data = &payload[offset + br.byte_pos()..];
        let n = cfg.num_bins();
        let per = if ctns_active { 16 } else { 8 };
        if data.len() != n * per {
            return Err(CodecError::CorruptStream {
                frame: None,
                detail: format!("bypass payload is {} bytes, want {}", data.len(), n * per),
            });
        }
        let f64_at = |i: usize| {
            let mut b = [0u8; 8];
            b.copy_from_slice(&data[i * 8..(i + 1) * 8]);
            f64::from_le_bytes(b)
        };
        let spec = if ctns_active {
            Spectrum::Complex(
                (0..n)
                    .map(|i| Complex64::new(f64_at(2 * i), f64_at(2 * i + 1)))
                    .collect(),
            )
        } else {
            Spectrum::Real((0..n).map(f64_at).collect())
        };
        return Ok(FrameParameters {
            ctns_active,
            lsf_indices,
            root_indices,
            scale: ScaleFactors { indices },
            coeffs: CoeffData::Bypass(spec),
        });
    }

    let mut rc = RangeDecoder::new(&payload[offset..]);
    let mut sf_model = AdaptiveModel::new(crate::rate_control::SF_LEVELS);
    let mut indices = [0u8; NUM_SUBBANDS];
    for i in indices.iter_mut() {
        *i = rc.decode_symbol(&mut sf_model) as u8;
    }
    let mut mag_models: Vec<AdaptiveModel> =
        (0..NUM_SUBBANDS).map(|_| AdaptiveModel::new(17)).collect();
    let mut mags = Vec::with_capacity(cfg.num_bins());
    for f in 0..cfg.num_bins() {
        let band = cfg.band_of_bin(f);
        let sym = rc.decode_symbol(&mut mag_models[band]) as u32;
        let m = if sym == MAG_ESCAPE {
            let tail = rc.decode_exp_golomb();
            if tail == u32::MAX {
                return Err(CodecError::CorruptStream {
                    frame: None,
                    detail: "implausible escape magnitude".into(),
                });
            }
            MAG_ESCAPE + tail
        } else {
            sym
        };
        mags.push(m);
    }
    let nonzero = mags.iter().filter(|&&m| m > 0).count();
    let aux = if ctns_active {
        AuxData::Phases(
            (0..nonzero)
                .map(|_| rc.decode_raw(cfg.phase_bits) as u8)
                .collect(),
        )
    } else {
        AuxData::Signs((0..nonzero).map(|_| rc.decode_raw(1) == 1).collect())
    };

    Ok(FrameParameters {
        ctns_active,
        lsf_indices,
        root_indices,
        scale: ScaleFactors { indices },
        coeffs: CoeffData::Quantized { mags, aux },
    })
}

// ---------------------------------------------------------------------------
// stream container

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StreamHeader {
    pub version: u16,
    pub flags: u16,
    pub sample_rate: u32,
    pub hop: u32,
    pub frame_count: u32,
    pub sample_count: u64,
}

impl StreamHeader {
    pub fn bypass(&self) -> bool {
        self.flags & FLAG_BYPASS != 0
    }
}

pub fn write_stream<W: Write>(w: &mut W, header: &StreamHeader, frames: &[Vec<u8>]) -> Result<()> {
    debug_assert_eq!(header.frame_count as usize, frames.len());
    w.write_all(STREAM_MAGIC)?;
    w.write_all(&header.version.to_le_bytes())?;
    w.write_all(&header.flags.to_le_bytes())?;
    w.write_all(&header.sample_rate.to_le_bytes())?;
    w.write_all(&header.hop.to_le_bytes())?;
    w.write_all(&header.frame_count.to_le_bytes())?;
    w.write_all(&header.sample_count.to_le_bytes())?;
    for f in frames {
        w.write_all(&(f.len() as u32).to_le_bytes())?;
        w.write_all(f)?;
    }
    Ok(())
}

pub fn read_stream<R: Read>(r: &mut R) -> Result<(StreamHeader, Vec<Vec<u8>>)> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != STREAM_MAGIC {
        return Err(CodecError::UnsupportedFormat("bad stream magic".into()));
    }
    let mut b2 = [0u8; 2];
    let mut b4 = [0u8; 4];
    let mut b8 = [0u8; 8];
    r.read_exact(&mut b2)?;
    let version = u16::from_le_bytes(b2);
    if version != STREAM_VERSION {
        return Err(CodecError::UnsupportedFormat(format!(
            "unsupported stream version {}",
            version
        )));
    }
    r.read_exact(&mut b2)?;
    let flags = u16::from_le_bytes(b2);
    r.read_exact(&mut b4)?;
    let sample_rate = u32::from_le_bytes(b4);
    r.read_exact(&mut b4)?;
    let hop = u32::from_le_bytes(b4);
    r.read_exact(&mut b4)?;
    let frame_count = u32::from_le_bytes(b4);
    r.read_exact(&mut b8)?;
    let sample_count = u64::from_le_bytes(b8);
    let header = StreamHeader {
        version,
        flags,
        sample_rate,
        hop,
        frame_count,
        sample_count,
    };
    let mut frames = Vec::with_capacity((frame_count as usize).min(4096));
    for i in 0..frame_count {
        r.read_exact(&mut b4)
            .map_err(|_| CodecError::CorruptStream {
                frame: Some(i as usize),
                detail: "missing frame length".into(),
            })?;
        let len = u32::from_le_bytes(b4) as usize;
        if len > MAX_FRAME_BYTES {
            return Err(CodecError::CorruptStream {
                frame: Some(i as usize),
                detail: format!(
                    "frame length {} exceeds the {} byte cap",
                    len, MAX_FRAME_BYTES
                ),
            });
        }
        let mut body = vec![0u8; len];
        r.read_exact(&mut body)
            .map_err(|_| CodecError::CorruptStream {
                frame: Some(i as usize),
                detail: "truncated frame body".into(),
            })?;
        frames.push(body);
    }
    Ok((header, frames))
}
