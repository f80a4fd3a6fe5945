use std::collections::HashMap;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{load_audio, AudioSignal, SignalError};

/// One clip of a composite: `duration_s` seconds of `path` from `start_s`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub path: PathBuf,
    pub label: String,
    pub start_s: f64,
    pub duration_s: f64,
}

/// Ground-truth label over `start_sample..end_sample` of the composite.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelSpan {
    pub label: usize,
    pub start_sample: usize,
    pub end_sample: usize,
}

#[derive(Debug, Clone)]
pub struct Composite {
    pub signal: AudioSignal,
    pub spans: Vec<LabelSpan>,
    /// Names of the dense labels, in order of first appearance.
    pub label_names: Vec<String>,
}

const HEADER: [&str; 4] = ["path", "label", "start_s", "duration_s"];

/// Parse manifest CSV text. Relative paths are joined onto `base` when given.
pub fn parse_manifest<R: Read>(reader: R, base: Option<&Path>) -> Result<Vec<ManifestEntry>, SignalError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers().map_err(|e| SignalError::Manifest(e.to_string()))?.clone();
    if headers.iter().ne(HEADER.iter().copied()) {
        return Err(SignalError::Manifest(format!(
            "expected header `{}`, found `{}`",
            HEADER.join(","),
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut out = Vec::new();
    for (line, rec) in rdr.deserialize::<ManifestEntry>().enumerate() {
        let mut e = rec.map_err(|e| SignalError::Manifest(e.to_string()))?;
        if !e.start_s.is_finite() || e.start_s < 0.0 {
            return Err(SignalError::Manifest(format!(
                "row {}: bad start_s {}",
                line + 1,
                e.start_s
            )));
        }
        if !e.duration_s.is_finite() || e.duration_s <= 0.0 {
            return Err(SignalError::Manifest(format!(
                "row {}: bad duration_s {}",
                line + 1,
                e.duration_s
            )));
        }
        if let Some(base) = base {
            if e.path.is_relative() {
                e.path = base.join(&e.path);
            }
        }
        out.push(e);
    }
    if out.is_empty() {
        return Err(SignalError::EmptyManifest);
    }
    Ok(out)
}

/// Read a manifest file; relative clip paths resolve against its directory.
pub fn read_manifest(path: &Path) -> Result<Vec<ManifestEntry>, SignalError> {
    let file = std::fs::File::open(path).map_err(|source| SignalError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_manifest(file, path.parent())
}

pub fn write_manifest<W: Write>(entries: &[ManifestEntry], writer: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for e in entries {
        w.serialize(e)?;
    }
    w.flush()?;
    Ok(())
}

/// Concatenate the manifest clips read from disk.
pub fn assemble_composite(entries: &[ManifestEntry]) -> Result<Composite, SignalError> {
    assemble_composite_with(entries, load_audio)
}

/// Concatenate the manifest clips, loading each distinct path once through `load`.
pub fn assemble_composite_with<F>(entries: &[ManifestEntry], mut load: F) -> Result<Composite, SignalError>
where
    F: FnMut(&Path) -> Result<AudioSignal, SignalError>,
{
    if entries.is_empty() {
        return Err(SignalError::EmptyManifest);
    }
    let mut cache: HashMap<&Path, AudioSignal> = HashMap::new();
    let mut label_names: Vec<String> = Vec::new();
    let mut samples = Vec::new();
    let mut spans = Vec::with_capacity(entries.len());
    let mut rate: Option<u32> = None;

    for e in entries {
        if !cache.contains_key(e.path.as_path()) {
            let sig = load(&e.path)?;
            cache.insert(e.path.as_path(), sig);
        }
        let sig = &cache[e.path.as_path()];
        let expected = *rate.get_or_insert(sig.sample_rate());
        if sig.sample_rate() != expected {
            return Err(SignalError::SampleRateMismatch {
                path: e.path.clone(),
                expected,
                found: sig.sample_rate(),
            });
        }
        let sr = expected as f64;
        let start = (e.start_s * sr).round() as usize;
        let len = (e.duration_s * sr).round() as usize;
        if len == 0 || start.checked_add(len).is_none_or(|end| end > sig.len()) {
            return Err(SignalError::CropOutOfRange {
                path: e.path.clone(),
                start_s: e.start_s,
                duration_s: e.duration_s,
                available_s: sig.duration_s(),
            });
        }
        let label = match label_names.iter().position(|n| n == &e.label) {
            Some(i) => i,
            None => {
                label_names.push(e.label.clone());
                label_names.len() - 1
            }
        };
        let offset = samples.len();
        samples.extend_from_slice(&sig.samples()[start..start + len]);
        spans.push(LabelSpan {
            label,
            start_sample: offset,
            end_sample: offset + len,
        });
    }

    Ok(Composite {
        signal: AudioSignal::new(samples, rate.expect("non-empty manifest"))?,
        spans,
        label_names,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn entry(path: &str, label: &str, start_s: f64, duration_s: f64) -> ManifestEntry {
        ManifestEntry {
            path: path.into(),
            label: label.into(),
            start_s,
            duration_s,
        }
    }

    fn tone(rate: u32, secs: f64) -> AudioSignal {
        let n = (rate as f64 * secs) as usize;
        AudioSignal::new((0..n).map(|i| i as f64 / n as f64).collect(), rate).unwrap()
    }

    #[test]
    fn nine_clips_make_eighteen_seconds() {
        let labels = ["a", "b", "c"];
        let entries: Vec<_> = (0..9)
            .map(|i| entry(&format!("clip{}.wav", i % 3), labels[i % 3], 1.0, 2.0))
            .collect();
        let c = assemble_composite_with(&entries, |_| Ok(tone(48_000, 4.0))).unwrap();
        assert_eq!(c.signal.len(), 864_000);
        assert_eq!(c.spans.len(), 9);
        assert_eq!(c.label_names, vec!["a", "b", "c"]);
        assert_eq!(c.spans[4].label, 1);
        assert_eq!(c.spans[4].start_sample, 4 * 96_000);
    }

    #[test]
    fn empty_manifest_rejected() {
        let err = assemble_composite_with(&[], |_| unreachable!()).unwrap_err();
        assert_eq!(err.to_string(), "empty manifest");
    }

    #[test]
    fn sample_rate_mismatch_rejected() {
        let entries = [entry("a.wav", "x", 0.0, 1.0), entry("b.wav", "y", 0.0, 1.0)];
        let err = assemble_composite_with(&entries, |p| {
            Ok(tone(if p == Path::new("a.wav") { 48_000 } else { 44_100 }, 2.0))
        })
        .unwrap_err();
        assert!(matches!(err, SignalError::SampleRateMismatch { found: 44_100, .. }));
    }

    #[test]
    fn crop_beyond_end_rejected() {
        let entries = [entry("a.wav", "x", 1.5, 1.0)];
        let err = assemble_composite_with(&entries, |_| Ok(tone(8000, 2.0))).unwrap_err();
        assert!(matches!(err, SignalError::CropOutOfRange { .. }));
    }

    #[test]
    fn manifest_header_enforced() {
        let err = parse_manifest("file,label,start_s,duration_s\na,b,0,1\n".as_bytes(), None).unwrap_err();
        assert!(matches!(err, SignalError::Manifest(_)));
        let err = parse_manifest("path,label,start_s,duration_s\n".as_bytes(), None).unwrap_err();
        assert!(matches!(err, SignalError::EmptyManifest));
    }

    #[test]
    fn manifest_relative_paths_join_base() {
        let text = "path,label,start_s,duration_s\nclip.wav,jeep,0.5,2\n/abs.wav,truck,0,2\n";
        let m = parse_manifest(text.as_bytes(), Some(Path::new("/data"))).unwrap();
        assert_eq!(m[0].path, PathBuf::from("/data/clip.wav"));
        assert_eq!(m[1].path, PathBuf::from("/abs.wav"));
        assert_eq!(m[0].start_s, 0.5);
    }

    #[test]
    fn manifest_rejects_negative_duration() {
        let text = "path,label,start_s,duration_s\nclip.wav,jeep,0,-2\n";
        assert!(parse_manifest(text.as_bytes(), None).is_err());
    }

    #[test]
    fn manifest_write_then_parse() {
        let entries = vec![entry("x.wav", "jeep", 0.0, 2.0), entry("x.wav", "truck", 2.0, 2.0)];
        let mut buf = Vec::new();
        write_manifest(&entries, &mut buf).unwrap();
        assert_eq!(parse_manifest(buf.as_slice(), None).unwrap(), entries);
    }
}
