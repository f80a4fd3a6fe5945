//! RIFF/WAVE decoding and encoding.
//!
//! Decoding accepts PCM integer samples of 8, 16, 24 or 32 bits and IEEE
//! float samples of 32 bits, mono or stereo, including the
//! `WAVE_FORMAT_EXTENSIBLE` wrapper. Channels are averaged into one.

use super::{AudioSignal, SignalError};

const FORMAT_PCM: u16 = 0x0001;
const FORMAT_FLOAT: u16 = 0x0003;
const FORMAT_EXTENSIBLE: u16 = 0xFFFE;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum SampleKind {
    Int,
    Float,
}

#[derive(Debug, Clone, Copy)]
struct Format {
    kind: SampleKind,
    channels: u16,
    sample_rate: u32,
    bits: u16,
    block_align: u16,
}

/// Output encoding for [`encode_wav`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum WavEncoding {
    Pcm16,
    #[default]
    Float32,
}

fn u16_at(b: &[u8], at: usize) -> u16 {
    u16::from_le_bytes([b[at], b[at + 1]])
}

fn u32_at(b: &[u8], at: usize) -> u32 {
    u32::from_le_bytes([b[at], b[at + 1], b[at + 2], b[at + 3]])
}

fn malformed(msg: impl Into<String>) -> SignalError {
    SignalError::MalformedWav(msg.into())
}

fn parse_fmt(body: &[u8]) -> Result<Format, SignalError> {
    if body.len() < 16 {
        return Err(malformed("fmt chunk shorter than 16 bytes"));
    }
    let mut tag = u16_at(body, 0);
    let channels = u16_at(body, 2);
    let sample_rate = u32_at(body, 4);
    let block_align = u16_at(body, 12);
    let bits = u16_at(body, 14);
    if tag == FORMAT_EXTENSIBLE {
        if body.len() < 40 {
            return Err(malformed("extensible fmt chunk shorter than 40 bytes"));
        }
        // first two bytes of the sub-format GUID carry the format code
        tag = u16_at(body, 24);
    }
    let kind = match (tag, bits) {
        (FORMAT_PCM, 8 | 16 | 24 | 32) => SampleKind::Int,
        (FORMAT_FLOAT, 32) => SampleKind::Float,
        _ => {
            return Err(SignalError::UnsupportedEncoding(format!(
                "format tag {tag:#06x} with {bits} bits per sample"
            )))
        }
    };
    if !(1..=2).contains(&channels) {
        return Err(SignalError::UnsupportedEncoding(format!(
            "{channels} channels (only mono and stereo are supported)"
        )));
    }
    if sample_rate == 0 {
        return Err(malformed("sample rate is zero"));
    }
    if block_align as u32 != channels as u32 * bits as u32 / 8 {
        return Err(malformed(format!(
            "block align {block_align} inconsistent with {channels} x {bits} bits"
        )));
    }
    Ok(Format {
        kind,
        channels,
        sample_rate,
        bits,
        block_align,
    })
}

fn decode_sample(fmt: &Format, b: &[u8]) -> f64 {
    match (fmt.kind, fmt.bits) {
        (SampleKind::Int, 8) => (b[0] as f64 - 128.0) / 128.0,
        (SampleKind::Int, 16) => i16::from_le_bytes([b[0], b[1]]) as f64 / 32768.0,
        (SampleKind::Int, 24) => {
            let v = i32::from_le_bytes([0, b[0], b[1], b[2]]) >> 8;
            v as f64 / 8_388_608.0
        }
        (SampleKind::Int, 32) => i32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64 / 2_147_483_648.0,
        (SampleKind::Float, 32) => f32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64,
        _ => unreachable!("format validated in parse_fmt"),
    }
}

/// Decode a complete WAV file image.
pub fn decode_wav(bytes: &[u8]) -> Result<AudioSignal, SignalError> {
    if bytes.len() < 12 || &bytes[0..4] != b"RIFF" || &bytes[8..12] != b"WAVE" {
        return Err(malformed("missing RIFF/WAVE header"));
    }
    let mut fmt: Option<Format> = None;
    let mut data: Option<&[u8]> = None;
    let mut at = 12usize;
    while at + 8 <= bytes.len() {
        let id = &bytes[at..at + 4];
        let size = u32_at(bytes, at + 4) as usize;
        let body_start = at + 8;
        let body_end = body_start
            .checked_add(size)
            .filter(|&e| e <= bytes.len())
            .ok_or_else(|| malformed(format!("chunk {:?} overruns file", String::from_utf8_lossy(id))))?;
        let body = &bytes[body_start..body_end];
        match id {
            b"fmt " => fmt = Some(parse_fmt(body)?),
            b"data" => {
                data = Some(body);
                if fmt.is_some() {
                    break;
                }
            }
            _ => {}
        }
        // chunks are word aligned
        at = body_end + (size & 1);
    }
    let fmt = fmt.ok_or_else(|| malformed("no fmt chunk"))?;
    let data = data.ok_or_else(|| malformed("no data chunk"))?;
    let frame = fmt.block_align as usize;
    let width = frame / fmt.channels as usize;
    let frames = data.len() / frame;
    if frames == 0 {
        return Err(SignalError::EmptyAudio);
    }
    let mut samples = Vec::with_capacity(frames);
    for f in data.chunks_exact(frame) {
        let mut acc = 0.0;
        for ch in f.chunks_exact(width) {
            acc += decode_sample(&fmt, ch);
        }
        let v = acc / fmt.channels as f64;
        if !v.is_finite() {
            return Err(malformed("non-finite float sample"));
        }
        samples.push(v);
    }
    AudioSignal::new(samples, fmt.sample_rate)
}

/// Encode a mono signal as a WAV image. Samples are clamped to `[-1, 1]`
/// for integer output.
pub fn encode_wav(signal: &AudioSignal, encoding: WavEncoding) -> Vec<u8> {
    let (tag, bits) = match encoding {
        WavEncoding::Pcm16 => (FORMAT_PCM, 16u16),
        WavEncoding::Float32 => (FORMAT_FLOAT, 32u16),
    };
    let bytes_per = (bits / 8) as u32;
    let data_len = signal.samples().len() as u32 * bytes_per;
    let mut out = Vec::with_capacity(44 + data_len as usize);
    out.extend_from_slice(b"RIFF");
    out.extend_from_slice(&(36 + data_len).to_le_bytes());
    out.extend_from_slice(b"WAVE");
    out.extend_from_slice(b"fmt ");
    out.extend_from_slice(&16u32.to_le_bytes());
    out.extend_from_slice(&tag.to_le_bytes());
    out.extend_from_slice(&1u16.to_le_bytes());
    out.extend_from_slice(&signal.sample_rate().to_le_bytes());
    out.extend_from_slice(&(signal.sample_rate() * bytes_per).to_le_bytes());
    out.extend_from_slice(&(bytes_per as u16).to_le_bytes());
    out.extend_from_slice(&bits.to_le_bytes());
    out.extend_from_slice(b"data");
    out.extend_from_slice(&data_len.to_le_bytes());
    for &s in signal.samples() {
        match encoding {
            WavEncoding::Pcm16 => {
                let v = (s.clamp(-1.0, 1.0) * 32768.0).round().clamp(-32768.0, 32767.0) as i16;
                out.extend_from_slice(&v.to_le_bytes());
            }
            WavEncoding::Float32 => out.extend_from_slice(&(s as f32).to_le_bytes()),
        }
    }
    out
}
