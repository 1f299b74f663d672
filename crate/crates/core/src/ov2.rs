//! Reader and writer for ov2 POI / favourites files.
//!
//! An ov2 file is a flat sequence of records, each introduced by a type byte
//! and a little-endian 32-bit length:
//!
//! | type | layout                                                        |
//! |------|---------------------------------------------------------------|
//! | 0    | deleted: type, len, `len - 5` opaque bytes                    |
//! | 1    | skipper: type, len, west, south, east, north (21 bytes)       |
//! | 2    | simple POI: type, len, lon, lat, NUL-terminated name          |
//! | 3    | extended POI: type, len, `len - 5` opaque bytes               |
//!
//! A skipper's length covers itself plus the records it spans, so only its
//! fixed 21 bytes are consumed when reading sequentially.
//!
//! Some handsets prepend a model-specific header; parsing is attempted at
//! offset 0 first and falls back to a configured header length.

use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::geo_time::{GeoPoint, LAT_LIMIT, LON_LIMIT};

pub const RECORD_HEADER_LEN: usize = 5;
pub const SIMPLE_POI_FIXED_LEN: usize = 13;
pub const MIN_SIMPLE_POI_LEN: u32 = 14;
pub const SKIPPER_LEN: u32 = 21;
/// Upper bound on a plausible simple POI record when carving.
pub const DEFAULT_MAX_POI_LEN: u32 = 1024;

pub const TYPE_DELETED: u8 = 0;
pub const TYPE_SKIPPER: u8 = 1;
pub const TYPE_SIMPLE_POI: u8 = 2;
pub const TYPE_EXTENDED_POI: u8 = 3;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Ov2Error {
    #[error("empty input")]
    EmptyInput,
    #[error(transparent)]
    Parse(#[from] ParseError),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("offset {offset}: expected {expected}, found {actual}")]
pub struct ParseError {
    pub offset: u64,
    pub expected: String,
    pub actual: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("record {index}: invalid {field}: {reason}")]
pub struct ValidationError {
    pub index: usize,
    pub field: &'static str,
    pub reason: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct BoundingBox {
    pub south_west: GeoPoint,
    pub north_east: GeoPoint,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Ov2Record {
    Deleted {
        total_len: u32,
        payload: Vec<u8>,
    },
    Skipper {
        total_len: u32,
        bbox: BoundingBox,
    },
    SimplePoi {
        total_len: u32,
        pos: GeoPoint,
        name: Vec<u8>,
    },
    ExtendedPoi {
        total_len: u32,
        payload: Vec<u8>,
    },
}

impl Ov2Record {
    /// Builds a simple POI with its length computed from the name.
    pub fn simple_poi(pos: GeoPoint, name: impl Into<Vec<u8>>) -> Self {
        let name = name.into();
        Ov2Record::SimplePoi {
            total_len: (SIMPLE_POI_FIXED_LEN + name.len() + 1) as u32,
            pos,
            name,
        }
    }

    pub fn type_byte(&self) -> u8 {
        match self {
            Ov2Record::Deleted { .. } => TYPE_DELETED,
            Ov2Record::Skipper { .. } => TYPE_SKIPPER,
            Ov2Record::SimplePoi { .. } => TYPE_SIMPLE_POI,
            Ov2Record::ExtendedPoi { .. } => TYPE_EXTENDED_POI,
        }
    }

    pub fn total_len(&self) -> u32 {
        match self {
            Ov2Record::Deleted { total_len, .. }
            | Ov2Record::Skipper { total_len, .. }
            | Ov2Record::SimplePoi { total_len, .. }
            | Ov2Record::ExtendedPoi { total_len, .. } => *total_len,
        }
    }

    /// Bytes this record occupies in a sequential file.
    pub fn encoded_len(&self) -> usize {
        match self {
            Ov2Record::Deleted { payload, .. } | Ov2Record::ExtendedPoi { payload, .. } => {
                RECORD_HEADER_LEN + payload.len()
            }
            Ov2Record::Skipper { .. } => SKIPPER_LEN as usize,
            Ov2Record::SimplePoi { name, .. } => SIMPLE_POI_FIXED_LEN + name.len() + 1,
        }
    }

    pub fn name_text(&self) -> Option<String> {
        match self {
            Ov2Record::SimplePoi { name, .. } => Some(render_name(name)),
            _ => None,
        }
    }

    fn validate(&self, index: usize) -> Result<(), ValidationError> {
        let err = |field, reason: String| ValidationError {
            index,
            field,
            reason,
        };
        let total = self.total_len() as usize;
        match self {
            Ov2Record::Skipper { .. } => {
                if total < SKIPPER_LEN as usize {
                    return Err(err("total_len", format!("{total} < {SKIPPER_LEN}")));
                }
            }
            Ov2Record::SimplePoi { name, .. } => {
                if name.contains(&0) {
                    return Err(err("name", "interior NUL byte".into()));
                }
                if total != self.encoded_len() {
                    return Err(err(
                        "total_len",
                        format!("{total} != 13 + {} + 1", name.len()),
                    ));
                }
            }
            Ov2Record::Deleted { .. } | Ov2Record::ExtendedPoi { .. } => {
                if total != self.encoded_len() {
                    return Err(err(
                        "total_len",
                        format!("{total} != payload length {}", self.encoded_len()),
                    ));
                }
            }
        }
        Ok(())
    }

    fn write_to(&self, out: &mut Vec<u8>) {
        out.push(self.type_byte());
        out.extend_from_slice(&self.total_len().to_le_bytes());
        match self {
            Ov2Record::Deleted { payload, .. } | Ov2Record::ExtendedPoi { payload, .. } => {
                out.extend_from_slice(payload)
            }
            Ov2Record::Skipper { bbox, .. } => {
                for v in [
                    bbox.south_west.lon,
                    bbox.south_west.lat,
                    bbox.north_east.lon,
                    bbox.north_east.lat,
                ] {
                    out.extend_from_slice(&v.raw().to_le_bytes());
                }
            }
            Ov2Record::SimplePoi { pos, name, .. } => {
                out.extend_from_slice(&pos.lon.raw().to_le_bytes());
                out.extend_from_slice(&pos.lat.raw().to_le_bytes());
                out.extend_from_slice(name);
                out.push(0);
            }
        }
    }
}

/// Best-effort text for name bytes: UTF-8 when valid, otherwise Latin-1.
pub fn render_name(bytes: &[u8]) -> String {
    match std::str::from_utf8(bytes) {
        Ok(s) => s.to_owned(),
        Err(_) => bytes.iter().map(|&b| char::from(b)).collect(),
    }
}

/// Undecodable run captured by tolerant parsing.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Gap {
    pub offset: u64,
    pub bytes: Vec<u8>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct Ov2File {
    pub header: Option<Vec<u8>>,
    pub records: Vec<Ov2Record>,
    pub source_offsets: Vec<u64>,
    pub gaps: Vec<Gap>,
}

impl Ov2File {
    pub fn from_records(records: Vec<Ov2Record>) -> Self {
        let mut offset = 0u64;
        let source_offsets = records
            .iter()
            .map(|r| {
                let at = offset;
                offset += r.encoded_len() as u64;
                at
            })
            .collect();
        Ov2File {
            header: None,
            records,
            source_offsets,
            gaps: Vec::new(),
        }
    }

    /// Simple POI records with their byte offsets.
    pub fn simple_pois(&self) -> impl Iterator<Item = (u64, &Ov2Record)> {
        self.source_offsets
            .iter()
            .copied()
            .zip(&self.records)
            .filter(|(_, r)| matches!(r, Ov2Record::SimplePoi { .. }))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Strictness {
    Strict,
    #[default]
    Tolerant,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ParseOptions {
    pub strictness: Strictness,
    /// Header length from a device profile, tried when parsing at offset 0 fails.
    pub header_len: Option<usize>,
}

impl ParseOptions {
    pub fn strict() -> Self {
        ParseOptions {
            strictness: Strictness::Strict,
            header_len: None,
        }
    }

    pub fn tolerant() -> Self {
        ParseOptions::default()
    }
}

fn read_u32(bytes: &[u8], at: usize) -> u32 {
    u32::from_le_bytes(bytes[at..at + 4].try_into().expect("4 bytes"))
}

fn read_i32(bytes: &[u8], at: usize) -> i32 {
    i32::from_le_bytes(bytes[at..at + 4].try_into().expect("4 bytes"))
}

/// Decodes one record at `offset`, returning it and the bytes it consumes.
pub fn parse_record(bytes: &[u8], offset: usize) -> Result<(Ov2Record, usize), ParseError> {
    let err = |at: usize, expected: &str, actual: String| ParseError {
        offset: at as u64,
        expected: expected.to_owned(),
        actual,
    };
    let rest = &bytes[offset..];
    if rest.len() < RECORD_HEADER_LEN {
        return Err(err(
            offset,
            "5-byte record header",
            format!("{} bytes", rest.len()),
        ));
    }
    let kind = rest[0];
    let total_len = read_u32(rest, 1);
    let total = total_len as usize;
    let min = match kind {
        TYPE_DELETED | TYPE_EXTENDED_POI => RECORD_HEADER_LEN,
        TYPE_SKIPPER => SKIPPER_LEN as usize,
        TYPE_SIMPLE_POI => MIN_SIMPLE_POI_LEN as usize,
        other => return Err(err(offset, "record type 0-3", format!("0x{other:02X}"))),
    };
    if total < min {
        return Err(err(
            offset + 1,
            &format!("length >= {min}"),
            total.to_string(),
        ));
    }
    let consumed = if kind == TYPE_SKIPPER { min } else { total };
    if rest.len() < consumed {
        return Err(err(
            offset + 1,
            &format!("{consumed} bytes of record"),
            format!("{} bytes remaining", rest.len()),
        ));
    }
    let point = |at: usize| -> Result<GeoPoint, ParseError> {
        let lon = read_i32(rest, at);
        let lat = read_i32(rest, at + 4);
        if !(-LON_LIMIT..=LON_LIMIT).contains(&lon) {
            return Err(err(offset + at, "longitude in range", lon.to_string()));
        }
        if !(-LAT_LIMIT..=LAT_LIMIT).contains(&lat) {
            return Err(err(offset + at + 4, "latitude in range", lat.to_string()));
        }
        Ok(GeoPoint::new(lon, lat).expect("range checked"))
    };
    let record = match kind {
        TYPE_DELETED => Ov2Record::Deleted {
            total_len,
            payload: rest[RECORD_HEADER_LEN..total].to_vec(),
        },
        TYPE_EXTENDED_POI => Ov2Record::ExtendedPoi {
            total_len,
            payload: rest[RECORD_HEADER_LEN..total].to_vec(),
        },
        TYPE_SKIPPER => Ov2Record::Skipper {
            total_len,
            bbox: BoundingBox {
                south_west: point(5)?,
                north_east: point(13)?,
            },
        },
        _ => {
            let pos = point(5)?;
            let name = &rest[SIMPLE_POI_FIXED_LEN..total - 1];
            if let Some(nul) = name.iter().position(|&b| b == 0) {
                return Err(err(
                    offset + SIMPLE_POI_FIXED_LEN + nul,
                    "non-NUL name byte",
                    "0x00".into(),
                ));
            }
            if rest[total - 1] != 0 {
                return Err(err(
                    offset + total - 1,
                    "NUL terminator",
                    format!("0x{:02X}", rest[total - 1]),
                ));
            }
            Ov2Record::SimplePoi {
                total_len,
                pos,
                name: name.to_vec(),
            }
        }
    };
    Ok((record, consumed))
}

type Parsed = (Vec<Ov2Record>, Vec<u64>);

fn parse_strict_from(bytes: &[u8], start: usize) -> Result<Parsed, ParseError> {
    let mut records = Vec::new();
    let mut offsets = Vec::new();
    let mut pos = start;
    while pos < bytes.len() {
        let (record, consumed) = parse_record(bytes, pos)?;
        if let Ov2Record::Skipper { total_len, .. } = &record {
            if pos + *total_len as usize > bytes.len() {
                return Err(ParseError {
                    offset: pos as u64 + 1,
                    expected: "skipper span within file".into(),
                    actual: format!("{total_len} bytes from offset {pos}"),
                });
            }
        }
        records.push(record);
        offsets.push(pos as u64);
        pos += consumed;
    }
    Ok((records, offsets))
}

fn is_resync_point(bytes: &[u8], at: usize) -> bool {
    match parse_record(bytes, at) {
        Ok((_, consumed)) => {
            let end = at + consumed;
            end == bytes.len() || parse_record(bytes, end).is_ok()
        }
        Err(_) => false,
    }
}

fn parse_tolerant_from(bytes: &[u8], start: usize) -> (Vec<Ov2Record>, Vec<u64>, Vec<Gap>) {
    let mut records = Vec::new();
    let mut offsets = Vec::new();
    let mut gaps = Vec::new();
    let mut pos = start;
    while pos < bytes.len() {
        match parse_record(bytes, pos) {
            Ok((record, consumed)) => {
                records.push(record);
                offsets.push(pos as u64);
                pos += consumed;
            }
            Err(_) => {
                let next = (pos + 1..bytes.len())
                    .find(|&at| is_resync_point(bytes, at))
                    .unwrap_or(bytes.len());
                gaps.push(Gap {
                    offset: pos as u64,
                    bytes: bytes[pos..next].to_vec(),
                });
                pos = next;
            }
        }
    }
    (records, offsets, gaps)
}

pub fn parse_ov2(bytes: &[u8], options: ParseOptions) -> Result<Ov2File, Ov2Error> {
    if bytes.is_empty() {
        return Err(Ov2Error::EmptyInput);
    }
    let first_error = match parse_strict_from(bytes, 0) {
        Ok((records, source_offsets)) => {
            return Ok(Ov2File {
                header: None,
                records,
                source_offsets,
                gaps: Vec::new(),
            })
        }
        Err(e) => e,
    };
    let header_len = options.header_len.filter(|&h| h > 0 && h <= bytes.len());
    if let Some(h) = header_len {
        if let Ok((records, source_offsets)) = parse_strict_from(bytes, h) {
            return Ok(Ov2File {
                header: Some(bytes[..h].to_vec()),
                records,
                source_offsets,
                gaps: Vec::new(),
            });
        }
    }
    if options.strictness == Strictness::Strict {
        return Err(first_error.into());
    }
    let start = header_len.unwrap_or(0);
    let (records, source_offsets, gaps) = parse_tolerant_from(bytes, start);
    Ok(Ov2File {
        header: (start > 0).then(|| bytes[..start].to_vec()),
        records,
        source_offsets,
        gaps,
    })
}

pub fn serialize_ov2(file: &Ov2File) -> Result<Vec<u8>, ValidationError> {
    for (index, record) in file.records.iter().enumerate() {
        record.validate(index)?;
    }
    let mut out = Vec::new();
    if let Some(header) = &file.header {
        out.extend_from_slice(header);
    }
    if file.gaps.is_empty() || file.source_offsets.len() != file.records.len() {
        for record in &file.records {
            record.write_to(&mut out);
        }
        for gap in &file.gaps {
            out.extend_from_slice(&gap.bytes);
        }
        return Ok(out);
    }
    let mut gaps = file.gaps.iter().peekable();
    for (record, &offset) in file.records.iter().zip(&file.source_offsets) {
        while let Some(gap) = gaps.next_if(|g| g.offset < offset) {
            out.extend_from_slice(&gap.bytes);
        }
        record.write_to(&mut out);
    }
    for gap in gaps {
        out.extend_from_slice(&gap.bytes);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RejectReason {
    WindowTooShort,
    TypeByte,
    Length,
    LongitudeRange,
    LatitudeRange,
    NameBytes,
    Terminator,
}

impl fmt::Display for RejectReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RejectReason::WindowTooShort => "window too short",
            RejectReason::TypeByte => "type byte",
            RejectReason::Length => "length",
            RejectReason::LongitudeRange => "longitude range",
            RejectReason::LatitudeRange => "latitude range",
            RejectReason::NameBytes => "name bytes",
            RejectReason::Terminator => "terminator",
        })
    }
}

fn is_name_byte(b: u8) -> bool {
    (0x20..=0x7E).contains(&b) || b >= 0x80
}

/// Structural check for a simple POI starting at `window[0]`, using the
/// default length bound. Returns the record length when valid.
pub fn validate_simple_poi(window: &[u8]) -> Result<usize, RejectReason> {
    validate_simple_poi_with(window, DEFAULT_MAX_POI_LEN)
}

pub fn validate_simple_poi_with(window: &[u8], max_len: u32) -> Result<usize, RejectReason> {
    if window.len() < MIN_SIMPLE_POI_LEN as usize {
        return Err(RejectReason::WindowTooShort);
    }
    if window[0] != TYPE_SIMPLE_POI {
        return Err(RejectReason::TypeByte);
    }
    let total_len = read_u32(window, 1);
    if !(MIN_SIMPLE_POI_LEN..=max_len).contains(&total_len) {
        return Err(RejectReason::Length);
    }
    let total = total_len as usize;
    if window.len() < total {
        return Err(RejectReason::WindowTooShort);
    }
    if !(-LON_LIMIT..=LON_LIMIT).contains(&read_i32(window, 5)) {
        return Err(RejectReason::LongitudeRange);
    }
    if !(-LAT_LIMIT..=LAT_LIMIT).contains(&read_i32(window, 9)) {
        return Err(RejectReason::LatitudeRange);
    }
    if !window[SIMPLE_POI_FIXED_LEN..total - 1]
        .iter()
        .all(|&b| is_name_byte(b))
    {
        return Err(RejectReason::NameBytes);
    }
    if window[total - 1] != 0 {
        return Err(RejectReason::Terminator);
    }
    Ok(total)
}

/// Builds the record for a window already accepted by the validator.
pub(crate) fn poi_from_window(window: &[u8]) -> Ov2Record {
    let total = read_u32(window, 1);
    Ov2Record::SimplePoi {
        total_len: total,
        pos: GeoPoint::new(read_i32(window, 5), read_i32(window, 9))
            .expect("validated coordinates"),
        name: window[SIMPLE_POI_FIXED_LEN..total as usize - 1].to_vec(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const NAME: &str = "Ridder Dirkstraat - Sophiastraat, Gouda";

    fn gouda_record() -> Vec<u8> {
        let mut bytes = vec![
            0x02, 0x35, 0x00, 0x00, 0x00, 0xC2, 0x33, 0x07, 0x00, 0x4F, 0x60, 0x4F, 0x00,
        ];
        bytes.extend_from_slice(NAME.as_bytes());
        bytes.push(0);
        bytes
    }

    #[test]
    fn gouda_parses() {
        let bytes = gouda_record();
        assert_eq!(bytes.len(), 53);
        let file = parse_ov2(&bytes, ParseOptions::strict()).unwrap();
        assert_eq!(file.header, None);
        assert_eq!(file.source_offsets, vec![0]);
        assert_eq!(
            file.records,
            vec![Ov2Record::SimplePoi {
                total_len: 53,
                pos: GeoPoint::new(472002, 5201999).unwrap(),
                name: NAME.as_bytes().to_vec(),
            }]
        );
        assert_eq!(serialize_ov2(&file).unwrap(), bytes);
    }

    #[test]
    fn constructor_computes_length() {
        let r = Ov2Record::simple_poi(GeoPoint::new(472002, 5201999).unwrap(), NAME);
        assert_eq!(r.total_len(), 53);
        assert_eq!(serialize_ov2(&Ov2File::from_records(vec![r])).unwrap(), gouda_record());
    }

    #[test]
    fn empty_input_and_empty_file() {
        assert_eq!(parse_ov2(&[], ParseOptions::strict()), Err(Ov2Error::EmptyInput));
        assert!(serialize_ov2(&Ov2File::default()).unwrap().is_empty());
    }

    #[test]
    fn strict_reports_offset() {
        let mut bytes = gouda_record();
        bytes.push(0x09);
        let err = parse_ov2(&bytes, ParseOptions::strict()).unwrap_err();
        match err {
            Ov2Error::Parse(e) => {
                assert_eq!(e.offset, 53);
                assert_eq!(e.expected, "5-byte record header");
            }
            other => panic!("{other:?}"),
        }
        let mut bad_type = gouda_record();
        bad_type[0] = 7;
        let Err(Ov2Error::Parse(e)) = parse_ov2(&bad_type, ParseOptions::strict()) else {
            panic!()
        };
        assert_eq!((e.offset, e.actual.as_str()), (0, "0x07"));
    }

    #[test]
    fn tolerant_captures_gap_and_resyncs() {
        let mut bytes = gouda_record();
        let junk = [0xFFu8, 0xEE, 0xDD];
        bytes.extend_from_slice(&junk);
        bytes.extend_from_slice(&gouda_record());
        let file = parse_ov2(&bytes, ParseOptions::tolerant()).unwrap();
        assert_eq!(file.records.len(), 2);
        assert_eq!(file.source_offsets, vec![0, 56]);
        assert_eq!(file.gaps, vec![Gap { offset: 53, bytes: junk.to_vec() }]);
        assert_eq!(serialize_ov2(&file).unwrap(), bytes);
        assert!(parse_ov2(&bytes, ParseOptions::strict()).is_err());
    }

    #[test]
    fn header_fallback() {
        let mut bytes = vec![0xAA, 0xBB, 0xCC, 0xDD, 0xEE, 0xFF, 0x11];
        bytes.extend_from_slice(&gouda_record());
        let opts = ParseOptions { strictness: Strictness::Strict, header_len: Some(7) };
        let file = parse_ov2(&bytes, opts).unwrap();
        assert_eq!(file.header.as_deref(), Some(&bytes[..7]));
        assert_eq!(file.source_offsets, vec![7]);
        assert_eq!(serialize_ov2(&file).unwrap(), bytes);
    }

    #[test]
    fn other_record_kinds() {
        let sw = GeoPoint::new(400000, 5100000).unwrap();
        let ne = GeoPoint::new(500000, 5300000).unwrap();
        let poi = Ov2Record::simple_poi(GeoPoint::new(472002, 5201999).unwrap(), "x");
        let records = vec![
            Ov2Record::Skipper { total_len: 21 + poi.encoded_len() as u32, bbox: BoundingBox { south_west: sw, north_east: ne } },
            poi,
            Ov2Record::Deleted { total_len: 8, payload: vec![1, 2, 3] },
            Ov2Record::ExtendedPoi { total_len: 6, payload: vec![9] },
        ];
        let file = Ov2File::from_records(records);
        let bytes = serialize_ov2(&file).unwrap();
        assert_eq!(parse_ov2(&bytes, ParseOptions::strict()).unwrap(), file);
    }

    #[test]
    fn serialize_rejects_invalid() {
        let bad = Ov2Record::SimplePoi { total_len: 99, pos: GeoPoint::new(0, 0).unwrap(), name: b"ab".to_vec() };
        let err = serialize_ov2(&Ov2File::from_records(vec![bad])).unwrap_err();
        assert_eq!((err.index, err.field), (0, "total_len"));
        let nul = Ov2Record::simple_poi(GeoPoint::new(0, 0).unwrap(), b"a\0b".to_vec());
        assert_eq!(serialize_ov2(&Ov2File::from_records(vec![nul])).unwrap_err().field, "name");
    }

    #[test]
    fn validator_verdicts() {
        assert_eq!(validate_simple_poi(&gouda_record()), Ok(53));
        assert_eq!(validate_simple_poi(&[0u8; 64]), Err(RejectReason::TypeByte));
        assert_eq!(RejectReason::TypeByte.to_string(), "type byte");
        let mut bad_lat = gouda_record();
        bad_lat[9..13].copy_from_slice(&0x7FFF_FFFFi32.to_le_bytes());
        assert_eq!(validate_simple_poi(&bad_lat), Err(RejectReason::LatitudeRange));
        assert_eq!(RejectReason::LatitudeRange.to_string(), "latitude range");
        let mut no_term = gouda_record();
        no_term[52] = b'x';
        assert_eq!(validate_simple_poi(&no_term), Err(RejectReason::Terminator));
        let mut ctl = gouda_record();
        ctl[20] = 0x07;
        assert_eq!(validate_simple_poi(&ctl), Err(RejectReason::NameBytes));
        assert_eq!(validate_simple_poi(&gouda_record()[..30]), Err(RejectReason::WindowTooShort));
        let mut long = gouda_record();
        long[1..5].copy_from_slice(&2000u32.to_le_bytes());
        assert_eq!(validate_simple_poi(&long), Err(RejectReason::Length));
    }

    fn arb_name() -> impl Strategy<Value = Vec<u8>> {
        proptest::collection::vec(prop_oneof![0x20u8..=0x7E, 0x80u8..=0xFF], 0..60)
    }

    fn arb_record() -> impl Strategy<Value = Ov2Record> {
        let point = (-LON_LIMIT..=LON_LIMIT, -LAT_LIMIT..=LAT_LIMIT)
            .prop_map(|(lon, lat)| GeoPoint::new(lon, lat).unwrap());
        prop_oneof![
            4 => (point.clone(), arb_name()).prop_map(|(p, n)| Ov2Record::simple_poi(p, n)),
            1 => proptest::collection::vec(any::<u8>(), 0..20)
                .prop_map(|p| Ov2Record::Deleted { total_len: 5 + p.len() as u32, payload: p }),
            1 => proptest::collection::vec(any::<u8>(), 0..20)
                .prop_map(|p| Ov2Record::ExtendedPoi { total_len: 5 + p.len() as u32, payload: p }),
            1 => (point.clone(), point).prop_map(|(a, b)| Ov2Record::Skipper {
                total_len: SKIPPER_LEN,
                bbox: BoundingBox { south_west: a, north_east: b },
            }),
        ]
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn round_trip(records in proptest::collection::vec(arb_record(), 1..8)) {
            let file = Ov2File::from_records(records);
            let bytes = serialize_ov2(&file).unwrap();
            let parsed = parse_ov2(&bytes, ParseOptions::strict()).unwrap();
            prop_assert_eq!(&parsed, &file);
            for w in parsed.source_offsets.windows(2) {
                prop_assert!(w[0] < w[1]);
            }
            for r in &parsed.records {
                if let Ov2Record::SimplePoi { total_len, name, .. } = r {
                    prop_assert_eq!(*total_len as usize, 13 + name.len() + 1);
                }
            }
        }

        #[test]
        fn tolerant_is_lossless(bytes in proptest::collection::vec(any::<u8>(), 1..200)) {
            let file = parse_ov2(&bytes, ParseOptions::tolerant()).unwrap();
            prop_assert_eq!(serialize_ov2(&file).unwrap(), bytes);
        }
    }
}
