//! Strict reader and writer for 16-bit PCM mono RIFF/WAVE files.

use std::fs;
use std::path::Path;

use aec_core::frontend::{AudioSegment, SAMPLE_RATE};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum WavError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("not a RIFF/WAVE file")]
    NotWave,
    #[error("truncated file: {0}")]
    Truncated(&'static str),
    #[error("missing {0} chunk")]
    MissingChunk(&'static str),
    #[error("unsupported format tag {0} (need 1, integer PCM)")]
    BadFormat(u16),
    #[error("unsupported channel count {0} (need mono)")]
    BadChannels(u16),
    #[error("unsupported sample rate {0} Hz (need 16000)")]
    BadSampleRate(u32),
    #[error("unsupported bit depth {0} (need 16)")]
    BadBitsPerSample(u16),
    #[error("data chunk length {0} is not a whole number of samples")]
    OddDataLength(u32),
    #[error("sample {index} outside [-1, 1] or not finite")]
    BadSample { index: usize },
}

fn u16_at(b: &[u8], at: usize) -> u16 {
    u16::from_le_bytes([b[at], b[at + 1]])
}

fn u32_at(b: &[u8], at: usize) -> u32 {
    u32::from_le_bytes([b[at], b[at + 1], b[at + 2], b[at + 3]])
}

/// Parses a complete WAV image. Unknown chunks are skipped.
pub fn parse_wav(bytes: &[u8]) -> Result<AudioSegment, WavError> {
    if bytes.len() < 12 || &bytes[0..4] != b"RIFF" || &bytes[8..12] != b"WAVE" {
        return Err(WavError::NotWave);
    }
    let mut fmt: Option<(u16, u16, u32, u16)> = None;
    let mut pos = 12;
    while pos + 8 <= bytes.len() {
        let id = &bytes[pos..pos + 4];
        let len = u32_at(bytes, pos + 4) as usize;
        let body = pos + 8;
        if body + len > bytes.len() {
            return Err(WavError::Truncated(if id == b"data" { "data" } else { "chunk" }));
        }
        match id {
            b"fmt " => {
                if len < 16 {
                    return Err(WavError::Truncated("fmt"));
                }
                fmt = Some((u16_at(bytes, body), u16_at(bytes, body + 2), u32_at(bytes, body + 4), u16_at(bytes, body + 14)));
            }
            b"data" => {
                let (tag, channels, rate, bits) = fmt.ok_or(WavError::MissingChunk("fmt"))?;
                if tag != 1 {
                    return Err(WavError::BadFormat(tag));
                }
                if channels != 1 {
                    return Err(WavError::BadChannels(channels));
                }
                if rate != SAMPLE_RATE {
                    return Err(WavError::BadSampleRate(rate));
                }
                if bits != 16 {
                    return Err(WavError::BadBitsPerSample(bits));
                }
                if len % 2 != 0 {
                    return Err(WavError::OddDataLength(len as u32));
                }
                let samples = bytes[body..body + len]
                    .chunks_exact(2)
                    .map(|c| f64::from(i16::from_le_bytes([c[0], c[1]])) / 32768.0)
                    .collect();
                return AudioSegment::new(samples, rate).map_err(|_| WavError::BadSampleRate(rate));
            }
            _ => {}
        }
        // chunks are word aligned
        pos = body + len + (len & 1);
    }
    Err(WavError::MissingChunk(if fmt.is_some() { "data" } else { "fmt" }))
}

pub fn read_wav(path: &Path) -> Result<AudioSegment, WavError> {
    let seg = parse_wav(&fs::read(path)?)?;
    Ok(seg.with_source_path(path.display().to_string()))
}

/// Quantizes to 16 bits. Samples already on the 1/32768 grid survive a
/// write/read round trip unchanged.
pub fn encode_wav(samples: &[f64], sample_rate: u32) -> Result<Vec<u8>, WavError> {
    let data_len = samples.len() * 2;
    let mut out = Vec::with_capacity(44 + data_len);
    out.extend_from_slice(b"RIFF");
    out.extend_from_slice(&((36 + data_len) as u32).to_le_bytes());
    out.extend_from_slice(b"WAVEfmt ");
    out.extend_from_slice(&16u32.to_le_bytes());
    out.extend_from_slice(&1u16.to_le_bytes());
    out.extend_from_slice(&1u16.to_le_bytes());
    out.extend_from_slice(&sample_rate.to_le_bytes());
    out.extend_from_slice(&(sample_rate * 2).to_le_bytes());
    out.extend_from_slice(&2u16.to_le_bytes());
    out.extend_from_slice(&16u16.to_le_bytes());
    out.extend_from_slice(b"data");
    out.extend_from_slice(&(data_len as u32).to_le_bytes());
    for (index, &s) in samples.iter().enumerate() {
        if !s.is_finite() || s.abs() > 1.0 {
            return Err(WavError::BadSample { index });
        }
        let q = (s * 32768.0).round().clamp(-32768.0, 32767.0) as i16;
        out.extend_from_slice(&q.to_le_bytes());
    }
    Ok(out)
}

pub fn write_wav(path: &Path, segment: &AudioSegment) -> Result<(), WavError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, encode_wav(segment.samples(), segment.sample_rate())?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_on_grid() {
        let x: Vec<f64> = (-5..5).map(|k| k as f64 * 1000.0 / 32768.0).collect();
        let seg = parse_wav(&encode_wav(&x, 16_000).unwrap()).unwrap();
        assert_eq!(seg.samples(), &x[..]);
    }

    #[test]
    fn rejects_other_rates() {
        let mut b = encode_wav(&[0.0; 10], 16_000).unwrap();
        b[24..28].copy_from_slice(&8000u32.to_le_bytes());
        assert!(matches!(parse_wav(&b), Err(WavError::BadSampleRate(8000))));
    }

    #[test]
    fn rejects_stereo_and_truncation() {
        let mut b = encode_wav(&[0.0; 10], 16_000).unwrap();
        b[22] = 2;
        assert!(matches!(parse_wav(&b), Err(WavError::BadChannels(2))));
        let b = encode_wav(&[0.0; 10], 16_000).unwrap();
        assert!(matches!(parse_wav(&b[..b.len() - 3]), Err(WavError::Truncated("data"))));
        assert!(matches!(parse_wav(b"RIFX"), Err(WavError::NotWave)));
    }
}
