//! Minimal RIFF/WAVE reader and writer for 16-bit mono PCM.

use crate::error::{CodecError, Result};
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

/// Read a 16-bit mono PCM WAV file, returning the sample rate and samples
/// normalized to [-1, 1] (full-scale division by 32768).
pub fn read_wav(path: &Path) -> Result<(u32, Vec<f64>)> {
    let mut r = BufReader::new(File::open(path)?);
    let mut riff = [0u8; 12];
    r.read_exact(&mut riff)?;
    if &riff[0..4] != b"RIFF" || &riff[8..12] != b"WAVE" {
        return Err(CodecError::UnsupportedFormat("not a RIFF/WAVE file".into()));
    }

    let mut fmt: Option<(u16, u16, u32, u16)> = None; // (format, channels, rate, bits)
    let mut data: Option<Vec<u8>> = None;
    loop {
        let mut head = [0u8; 8];
        match r.read_exact(&mut head) {
            Ok(()) => {}
            Err(e) if e.kind() == std::io::ErrorKind::UnexpectedEof => break,
            Err(e) => return Err(e.into()),
        }
        let id = [head[0], head[1], head[2], head[3]];
        let size = u32::from_le_bytes([head[4], head[5], head[6], head[7]]) as usize;
        let mut body = vec![0u8; size];
        r.read_exact(&mut body)?;
        if size % 2 == 1 {
            let mut pad = [0u8; 1];
            // tolerate a missing final pad byte
            let _ = r.read_exact(&mut pad);
        }
        match &id {
            b"fmt " => {
                if size < 16 {
                    return Err(CodecError::UnsupportedFormat("fmt chunk too short".into()));
                }
                fmt = Some((
                    u16::from_le_bytes([body[0], body[1]]),
                    u16::from_le_bytes([body[2], body[3]]),
                    u32::from_le_bytes([body[4], body[5], body[6], body[7]]),
                    u16::from_le_bytes([body[14], body[15]]),
                ));
            }
            b"data" => data = Some(body),
            _ => {}
        }
    }

    let (format, channels, rate, bits) =
        fmt.ok_or_else(|| CodecError::UnsupportedFormat("missing fmt chunk".into()))?;
    if format != 1 {
        return Err(CodecError::UnsupportedFormat(format!(
            "PCM required, format tag {}",
            format
        )));
    }
    if channels != 1 {
        return Err(CodecError::ChannelCount(channels));
    }
    if bits != 16 {
        return Err(CodecError::UnsupportedFormat(format!(
            "16-bit required, got {}-bit",
            bits
        )));
    }
    let data = data.ok_or_else(|| CodecError::UnsupportedFormat("missing data chunk".into()))?;
    let samples = data
        .chunks_exact(2)
        .map(|b| i16::from_le_bytes([b[0], b[1]]) as f64 / 32768.0)
        .collect();
    Ok((rate, samples))
}

/// Quantize one normalized sample to i16: clip to [-1, 1 - 2^-15], scale by
/// 32768, round half away from zero.
pub fn quantize16(x: f64) -> i16 {
    let clipped = x.clamp(-1.0, 1.0 - 1.0 / 32768.0);
    (clipped * 32768.0).round() as i16
}

/// Write samples as a 16-bit mono PCM WAV file.
pub fn write_wav(path: &Path, samples: &[f64], sample_rate: u32) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    let data_len = (samples.len() * 2) as u32;
    w.write_all(b"RIFF")?;
    w.write_all(&(36 + data_len).to_le_bytes())?;
    w.write_all(b"WAVE")?;
    w.write_all(b"fmt ")?;
    w.write_all(&16u32.to_le_bytes())?;
    w.write_all(&1u16.to_le_bytes())?; // PCM
    w.write_all(&1u16.to_le_bytes())?; // mono
    w.write_all(&sample_rate.to_le_bytes())?;
    w.write_all(&(sample_rate * 2).to_le_bytes())?; // byte rate
    w.write_all(&2u16.to_le_bytes())?; // block align
    w.write_all(&16u16.to_le_bytes())?;
    w.write_all(b"data")?;
    w.write_all(&data_len.to_le_bytes())?;
    for &s in samples {
        w.write_all(&quantize16(s).to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}
