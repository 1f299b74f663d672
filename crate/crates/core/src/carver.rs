//! Carving ov2 simple POI records and settings-store fragments out of raw
//! images.
//!
//! The image is streamed in chunks. Every chunk is scanned with `overlap`
//! bytes of look-ahead, which is at least the longest record the validators
//! accept, so each offset sees the same bytes no matter where chunk
//! boundaries fall. Candidates are merged and deduplicated globally, making
//! the result a pure function of the image bytes.

use std::collections::BTreeMap;
use std::io::{self, Read, Seek, SeekFrom};
use std::sync::OnceLock;

use memchr::memmem;
use regex::bytes::Regex;
use serde::Serialize;
use thiserror::Error;

use crate::ov2::{poi_from_window, validate_simple_poi_with, Ov2Record, DEFAULT_MAX_POI_LEN, TYPE_SIMPLE_POI};
use crate::settings_xml::{parse_store, MalformedEntry, SettingsEntry};
use crate::ov2::Strictness;

/// Longest settings element captured as one fragment.
pub const MAX_FRAGMENT_LEN: usize = 1024;
/// Minimum look-ahead: longest POI record plus header margin.
pub const MIN_OVERLAP: usize = DEFAULT_MAX_POI_LEN as usize + 14;
pub const DEFAULT_CHUNK_SIZE: usize = 4 << 20;

const FRAGMENT_MARKERS: [&[u8]; 2] = [b"<string name=\"MapSettings", b"<string name=\"NavkitSettings"];
const CLOSE_TAG: &[u8] = b"</string>";

/// Published favourite-file seek pattern, kept verbatim. Its character
/// classes mix braces and brackets, so it does not compile as written.
pub const PUBLISHED_SEEK_PATTERN: &str =
    r"\x64\x15\x00{3}{\x01-\xFE}{4}\x00{5}\x80\x00[\x01-\xFE]{1}\x00{4}";
/// Best-effort corrected form of [`PUBLISHED_SEEK_PATTERN`].
pub const CORRECTED_SEEK_PATTERN: &str =
    r"(?s-u)\x64\x15\x00{3}[\x01-\xFE]{4}\x00{5}\x80\x00[\x01-\xFE]\x00{4}";
const SEEK_MATCH_LEN: usize = 21;

#[derive(Debug, Error)]
pub enum ScanError {
    #[error("chunk size {chunk_size} must exceed overlap {overlap}, and overlap must be at least {min}")]
    InvalidConfig {
        chunk_size: usize,
        overlap: usize,
        min: usize,
    },
    #[error("seek failed: {0}")]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ScanConfig {
    pub chunk_size: usize,
    pub overlap: usize,
    pub max_poi_len: u32,
    /// Chunks scanned concurrently; output does not depend on it.
    pub jobs: usize,
}

impl Default for ScanConfig {
    fn default() -> Self {
        ScanConfig {
            chunk_size: DEFAULT_CHUNK_SIZE,
            overlap: MIN_OVERLAP,
            max_poi_len: DEFAULT_MAX_POI_LEN,
            jobs: 1,
        }
    }
}

impl ScanConfig {
    pub fn with_chunk_size(chunk_size: usize) -> Self {
        ScanConfig {
            chunk_size,
            ..ScanConfig::default()
        }
    }

    fn required_overlap(&self) -> usize {
        MIN_OVERLAP.max(self.max_poi_len as usize).max(MAX_FRAGMENT_LEN)
    }

    pub fn validate(&self) -> Result<(), ScanError> {
        let min = self.required_overlap();
        if self.overlap < min || self.chunk_size <= self.overlap {
            return Err(ScanError::InvalidConfig {
                chunk_size: self.chunk_size,
                overlap: self.overlap,
                min,
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum HitKind {
    Ov2SimplePoi,
    SettingsFragment,
}

/// Ordered so that structural sorts first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Confidence {
    Structural,
    Weak,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum HitPayload {
    Ov2 {
        record: Ov2Record,
    },
    Fragment {
        text: String,
        entry: Option<SettingsEntry>,
        malformed: Option<MalformedEntry>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CarveHit {
    pub offset: u64,
    pub len: usize,
    pub kind: HitKind,
    pub confidence: Confidence,
    pub payload: HitPayload,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ScanGap {
    pub offset: u64,
    pub len: u64,
    #[serde(skip)]
    pub error_kind: Option<io::ErrorKind>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ChunkProgress {
    pub chunk: u64,
    pub offset: u64,
    pub len: usize,
    pub candidates: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ScanOutcome {
    pub hits: Vec<CarveHit>,
    pub gaps: Vec<ScanGap>,
    pub bytes_read: u64,
}

/// Buffered window over the image: `bytes[..scan_end]` are offsets owned by
/// this segment, the rest is look-ahead.
struct Segment<'a> {
    base: u64,
    bytes: &'a [u8],
    scan_end: usize,
}

/// Streams the image, calling `visit` once per buffered segment. Read
/// failures close the current segment, are recorded as gaps of one chunk,
/// and reading resumes after them.
fn drive<R, F>(reader: &mut R, cfg: &ScanConfig, mut visit: F) -> Result<(Vec<ScanGap>, u64), ScanError>
where
    R: Read + Seek,
    F: FnMut(&Segment<'_>),
{
    cfg.validate()?;
    let batch = cfg.chunk_size * cfg.jobs.max(1);
    let target = batch + cfg.overlap;
    let mut buf: Vec<u8> = Vec::with_capacity(target);
    let mut base = 0u64;
    let mut gaps = Vec::new();
    let mut bytes_read = 0u64;
    let mut tmp = vec![0u8; 64 * 1024];
    loop {
        let mut terminated = false;
        let mut resume_at = None;
        while buf.len() < target {
            let want = (target - buf.len()).min(tmp.len());
            match reader.read(&mut tmp[..want]) {
                Ok(0) => {
                    terminated = true;
                    break;
                }
                Ok(n) => {
                    buf.extend_from_slice(&tmp[..n]);
                    bytes_read += n as u64;
                }
                Err(e) if e.kind() == io::ErrorKind::Interrupted => {}
                Err(e) => {
                    let at = base + buf.len() as u64;
                    gaps.push(ScanGap {
                        offset: at,
                        len: cfg.chunk_size as u64,
                        error_kind: Some(e.kind()),
                    });
                    terminated = true;
                    resume_at = Some(at + cfg.chunk_size as u64);
                    break;
                }
            }
        }
        let scan_end = if terminated { buf.len() } else { batch };
        visit(&Segment {
            base,
            bytes: &buf,
            scan_end,
        });
        if let Some(next) = resume_at {
            reader.seek(SeekFrom::Start(next))?;
            buf.clear();
            base = next;
            continue;
        }
        if terminated {
            break;
        }
        buf.drain(..scan_end);
        base += scan_end as u64;
    }
    Ok((gaps, bytes_read))
}

fn fragment_hit(bytes: &[u8], at: usize, base: u64) -> CarveHit {
    let limit = (at + MAX_FRAGMENT_LEN).min(bytes.len());
    let window = &bytes[at..limit];
    let end = match memmem::find(window, CLOSE_TAG) {
        Some(i) => i + CLOSE_TAG.len(),
        None => window
            .iter()
            .position(|&b| b == b'\n' || b == 0)
            .unwrap_or(window.len()),
    };
    let text = String::from_utf8_lossy(&window[..end]).into_owned();
    let parsed = parse_store(&text, Strictness::Tolerant).unwrap_or_default();
    let entry = parsed.entries.into_iter().next();
    let malformed = parsed.malformed.into_iter().next();
    CarveHit {
        offset: base + at as u64,
        len: end,
        kind: HitKind::SettingsFragment,
        confidence: if entry.is_some() {
            Confidence::Structural
        } else {
            Confidence::Weak
        },
        payload: HitPayload::Fragment {
            text,
            entry,
            malformed,
        },
    }
}

/// Candidates whose start offset lies in `bytes[lo..hi]`.
fn scan_range(bytes: &[u8], lo: usize, hi: usize, base: u64, max_poi_len: u32) -> Vec<CarveHit> {
    let mut hits = Vec::new();
    let window_cap = max_poi_len as usize;
    for at in memchr::memchr_iter(TYPE_SIMPLE_POI, &bytes[lo..hi]).map(|i| lo + i) {
        let window = &bytes[at..(at + window_cap).min(bytes.len())];
        if let Ok(len) = validate_simple_poi_with(window, max_poi_len) {
            hits.push(CarveHit {
                offset: base + at as u64,
                len,
                kind: HitKind::Ov2SimplePoi,
                confidence: Confidence::Structural,
                payload: HitPayload::Ov2 {
                    record: poi_from_window(&window[..len]),
                },
            });
        }
    }
    let search_end = (hi + FRAGMENT_MARKERS[1].len()).min(bytes.len());
    for marker in FRAGMENT_MARKERS {
        for at in memmem::find_iter(&bytes[lo..search_end], marker).map(|i| lo + i) {
            if at < hi {
                hits.push(fragment_hit(bytes, at, base));
            }
        }
    }
    hits
}

fn scan_segment(seg: &Segment<'_>, cfg: &ScanConfig) -> Vec<(ChunkProgress, Vec<CarveHit>)> {
    let pieces: Vec<(usize, usize)> = (0..seg.scan_end)
        .step_by(cfg.chunk_size)
        .map(|lo| (lo, (lo + cfg.chunk_size).min(seg.scan_end)))
        .collect();
    let run = |(lo, hi): (usize, usize)| {
        let hits = scan_range(seg.bytes, lo, hi, seg.base, cfg.max_poi_len);
        let progress = ChunkProgress {
            chunk: (seg.base + lo as u64) / cfg.chunk_size as u64,
            offset: seg.base + lo as u64,
            len: hi - lo,
            candidates: hits.len(),
        };
        (progress, hits)
    };
    if cfg.jobs <= 1 || pieces.len() <= 1 {
        return pieces.into_iter().map(run).collect();
    }
    std::thread::scope(|scope| {
        let handles: Vec<_> = pieces
            .into_iter()
            .map(|piece| scope.spawn(move || run(piece)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("scan worker panicked"))
            .collect()
    })
}

/// Keeps, per kind, the longest hit among overlapping candidates.
pub fn dedupe_overlapping(hits: Vec<CarveHit>) -> Vec<CarveHit> {
    let mut by_kind: BTreeMap<HitKind, Vec<CarveHit>> = BTreeMap::new();
    for h in hits {
        by_kind.entry(h.kind).or_default().push(h);
    }
    let mut out = Vec::new();
    for (_, mut group) in by_kind {
        group.sort_by(|a, b| b.len.cmp(&a.len).then(a.offset.cmp(&b.offset)));
        let mut taken: BTreeMap<u64, u64> = BTreeMap::new();
        for h in group {
            let (start, end) = (h.offset, h.offset + h.len.max(1) as u64);
            let before = taken.range(..end).next_back();
            if before.is_some_and(|(_, &e)| e > start) {
                continue;
            }
            taken.insert(start, end);
            out.push(h);
        }
    }
    out.sort_by(|a, b| a.offset.cmp(&b.offset).then(a.kind.cmp(&b.kind)));
    out
}

/// Structural hits first, then ascending offset, then kind.
pub fn rank_hits(mut hits: Vec<CarveHit>) -> Vec<CarveHit> {
    hits.sort_by(|a, b| {
        a.confidence
            .cmp(&b.confidence)
            .then(a.offset.cmp(&b.offset))
            .then(a.kind.cmp(&b.kind))
    });
    hits
}

pub fn scan_image<R: Read + Seek>(
    reader: &mut R,
    cfg: &ScanConfig,
    mut progress: impl FnMut(&ChunkProgress),
) -> Result<ScanOutcome, ScanError> {
    let mut candidates = Vec::new();
    let (gaps, bytes_read) = drive(reader, cfg, |seg| {
        for (p, hits) in scan_segment(seg, cfg) {
            progress(&p);
            candidates.extend(hits);
        }
    })?;
    Ok(ScanOutcome {
        hits: rank_hits(dedupe_overlapping(candidates)),
        gaps,
        bytes_read,
    })
}

/// Convenience wrapper over an in-memory image.
pub fn scan_bytes(image: &[u8], cfg: &ScanConfig) -> Result<ScanOutcome, ScanError> {
    scan_image(&mut io::Cursor::new(image), cfg, |_| {})
}

pub fn corrected_seek_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(CORRECTED_SEEK_PATTERN).expect("static regex"))
}

/// Offsets matched by the corrected published seek pattern.
pub fn scan_seek_pattern<R: Read + Seek>(reader: &mut R, cfg: &ScanConfig) -> Result<Vec<u64>, ScanError> {
    let re = corrected_seek_regex();
    let mut offsets = Vec::new();
    drive(reader, cfg, |seg| {
        let end = (seg.scan_end + SEEK_MATCH_LEN).min(seg.bytes.len());
        let mut from = 0;
        while let Some(m) = re.find_at(&seg.bytes[..end], from) {
            if m.start() >= seg.scan_end {
                break;
            }
            offsets.push(seg.base + m.start() as u64);
            from = m.start() + 1;
        }
    })?;
    Ok(offsets)
}
