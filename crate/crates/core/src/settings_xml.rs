//! Base64-valued XML string stores (`<Region>_<model>.xml`, `NavkitSettings.xml`).
//!
//! Every datum is one `<string name="KEYPATH">BASE64</string>` element. Key
//! paths are slash-separated segments of the form `Name*NNNNN*`, where the
//! five-digit number is a record index. Lines belonging to one record are
//! scattered through the file, so grouping is done by (collection, index).
//!
//! The scanner does not require a well-formed document: carved fragments are
//! a first-class input.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::OnceLock;

use base64::alphabet;
use base64::engine::general_purpose::GeneralPurposeConfig;
use base64::engine::{DecodePaddingMode, GeneralPurpose};
use base64::Engine;
use regex::Regex;
use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::caveat::{Caveat, Caveats};
use crate::geo_time::{GeoError, GeoPoint};
use crate::ov2::Strictness;

/// Stores in the wild carry non-zero trailing bits (e.g. `...Nk==`), so the
/// decoder is lenient about them and about padding.
pub const LENIENT_BASE64: GeneralPurpose = GeneralPurpose::new(
    &alphabet::STANDARD,
    GeneralPurposeConfig::new()
        .with_decode_allow_trailing_bits(true)
        .with_decode_padding_mode(DecodePaddingMode::Indifferent),
);

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SettingsError {
    #[error("line {}: {}", .0.source_line, .0.reason)]
    Malformed(MalformedEntry),
    #[error("unrecognized position text {0:?}")]
    Format(String),
    #[error(transparent)]
    Range(#[from] GeoError),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid key path segment {segment:?}")]
pub struct PathError {
    pub segment: String,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct Segment {
    pub name: String,
    pub index: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct KeyPath {
    pub segments: Vec<Segment>,
}

fn segment_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"^([^*/]+)\*([0-9]{5})\*$").expect("static regex"))
}

impl KeyPath {
    pub fn parse(text: &str) -> Result<Self, PathError> {
        let segments = text
            .split('/')
            .map(|raw| {
                let caps = segment_regex().captures(raw).ok_or_else(|| PathError {
                    segment: raw.to_owned(),
                })?;
                Ok(Segment {
                    name: caps[1].to_owned(),
                    index: caps[2].parse().expect("five digits"),
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(KeyPath { segments })
    }

    pub fn family(&self) -> StoreFamily {
        StoreFamily::from_root(&self.segments[0].name)
    }
}

impl fmt::Display for KeyPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, s) in self.segments.iter().enumerate() {
            if i > 0 {
                f.write_str("/")?;
            }
            write!(f, "{}*{:05}*", s.name, s.index)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StoreFamily {
    MapSettings,
    NavkitSettings,
    Other(String),
}

impl StoreFamily {
    pub fn from_root(root: &str) -> Self {
        match root {
            "MapSettings" => StoreFamily::MapSettings,
            "NavkitSettings" => StoreFamily::NavkitSettings,
            other => StoreFamily::Other(other.to_owned()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SettingsEntry {
    pub path: KeyPath,
    pub raw_b64: String,
    #[serde(serialize_with = "serialize_lossy")]
    pub decoded: Vec<u8>,
    pub source_line: usize,
}

impl SettingsEntry {
    pub fn decoded_text(&self) -> String {
        String::from_utf8_lossy(&self.decoded).into_owned()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MalformedEntry {
    pub source_line: usize,
    pub name: String,
    pub raw_value: String,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ParsedStore {
    pub entries: Vec<SettingsEntry>,
    pub malformed: Vec<MalformedEntry>,
}

fn serialize_lossy<S: Serializer>(bytes: &[u8], s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&String::from_utf8_lossy(bytes))
}

fn name_attr_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(r#"\bname\s*=\s*(?:"([^"]*)"|'([^']*)')"#).expect("static regex")
    })
}

fn unescape(text: &str) -> String {
    if !text.contains('&') {
        return text.to_owned();
    }
    text.replace("&lt;", "<")
        .replace("&gt;", ">")
        .replace("&quot;", "\"")
        .replace("&apos;", "'")
        .replace("&amp;", "&")
}

const OPEN_TAG: &str = "<string";
const CLOSE_TAG: &str = "</string>";

/// Raw `<string>` element as located by the scanner.
struct RawElement<'a> {
    line: usize,
    name: Option<String>,
    value: Result<&'a str, &'static str>,
}

fn scan_elements(text: &str) -> Vec<RawElement<'_>> {
    let line_starts: Vec<usize> = std::iter::once(0)
        .chain(text.match_indices('\n').map(|(i, _)| i + 1))
        .collect();
    let line_of = |pos: usize| line_starts.partition_point(|&s| s <= pos);

    let mut out = Vec::new();
    let mut cursor = 0;
    while let Some(found) = text[cursor..].find(OPEN_TAG) {
        let start = cursor + found;
        let after = start + OPEN_TAG.len();
        cursor = after;
        match text[after..].chars().next() {
            Some(c) if c.is_whitespace() || c == '>' || c == '/' => {}
            None => {}
            _ => continue, // e.g. <string-array
        }
        let line = line_of(start);
        let Some(tag_end) = text[after..].find('>').map(|i| after + i) else {
            out.push(RawElement {
                line,
                name: None,
                value: Err("unterminated start tag"),
            });
            break;
        };
        let tag = &text[after..tag_end];
        let name = name_attr_regex()
            .captures(tag)
            .and_then(|c| c.get(1).or_else(|| c.get(2)))
            .map(|m| unescape(m.as_str()));
        if tag.ends_with('/') {
            out.push(RawElement {
                line,
                name,
                value: Ok(""),
            });
            cursor = tag_end + 1;
            continue;
        }
        let body_start = tag_end + 1;
        // A following open tag before our close tag means this element was cut.
        let close = text[body_start..].find(CLOSE_TAG).map(|i| body_start + i);
        let next_open = text[body_start..].find(OPEN_TAG).map(|i| body_start + i);
        match close {
            Some(end) if next_open.is_none_or(|n| n > end) => {
                out.push(RawElement {
                    line,
                    name,
                    value: Ok(&text[body_start..end]),
                });
                cursor = end + CLOSE_TAG.len();
            }
            _ => {
                out.push(RawElement {
                    line,
                    name,
                    value: Err("unterminated element"),
                });
                cursor = body_start;
            }
        }
    }
    out
}

/// Number of `<string>` elements the scanner recognizes in `text`.
pub fn count_string_elements(text: &str) -> usize {
    scan_elements(text).len()
}

pub fn decode_base64(value: &str) -> Result<Vec<u8>, base64::DecodeError> {
    let compact: String = value.chars().filter(|c| !c.is_whitespace()).collect();
    LENIENT_BASE64.decode(compact)
}

/// Extracts every string element. Elements whose key path or base64 value
/// cannot be decoded are returned as malformed entries; in strict mode the
/// first one is an error instead.
pub fn parse_store(text: &str, strictness: Strictness) -> Result<ParsedStore, SettingsError> {
    let mut store = ParsedStore::default();
    for element in scan_elements(text) {
        let name = element.name.clone().unwrap_or_default();
        let raw_value = element.value.unwrap_or_default().trim().to_owned();
        let malformed = |reason: String| MalformedEntry {
            source_line: element.line,
            name: name.clone(),
            raw_value: raw_value.clone(),
            reason,
        };
        let result = match (&element.name, element.value) {
            (_, Err(reason)) => Err(malformed(reason.to_owned())),
            (None, _) => Err(malformed("missing name attribute".into())),
            (Some(name), Ok(value)) => match KeyPath::parse(name) {
                Err(e) => Err(malformed(e.to_string())),
                Ok(path) => match decode_base64(&unescape(value)) {
                    Err(e) => Err(malformed(format!("base64: {e}"))),
                    Ok(decoded) => Ok(SettingsEntry {
                        path,
                        raw_b64: raw_value.clone(),
                        decoded,
                        source_line: element.line,
                    }),
                },
            },
        };
        match result {
            Ok(entry) => store.entries.push(entry),
            Err(m) if strictness == Strictness::Strict => return Err(SettingsError::Malformed(m)),
            Err(m) => store.malformed.push(m),
        }
    }
    Ok(store)
}

/// One or more decoded values stored under the same leaf of a record.
/// Values are kept sorted so grouping is independent of line order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FieldValue {
    values: Vec<Vec<u8>>,
}

impl FieldValue {
    pub fn single(value: impl Into<Vec<u8>>) -> Self {
        FieldValue {
            values: vec![value.into()],
        }
    }

    fn push(&mut self, value: Vec<u8>) {
        let at = self.values.partition_point(|v| v <= &value);
        self.values.insert(at, value);
    }

    pub fn first(&self) -> &[u8] {
        &self.values[0]
    }

    pub fn text(&self) -> String {
        String::from_utf8_lossy(self.first()).into_owned()
    }

    pub fn values(&self) -> &[Vec<u8>] {
        &self.values
    }

    pub fn is_multi(&self) -> bool {
        self.values.len() > 1
    }
}

impl Serialize for FieldValue {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        if self.is_multi() {
            let texts: Vec<_> = self
                .values
                .iter()
                .map(|v| String::from_utf8_lossy(v))
                .collect();
            texts.serialize(s)
        } else {
            s.serialize_str(&self.text())
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RecordGroup {
    pub family: StoreFamily,
    pub collection: String,
    pub record_index: u32,
    /// Set for keys directly under a container with no record structure.
    pub scalar: bool,
    pub fields: BTreeMap<String, FieldValue>,
    pub source_lines: Vec<usize>,
    pub caveats: Caveats,
}

impl RecordGroup {
    pub fn text(&self, leaf: &str) -> Option<String> {
        self.fields.get(leaf).map(FieldValue::text)
    }

    /// Value of a scalar group (a group whose only leaf is its own name).
    pub fn scalar_text(&self) -> Option<String> {
        self.text(&self.collection)
    }

    pub fn last_line(&self) -> usize {
        self.source_lines.last().copied().unwrap_or(0)
    }
}

/// Locates the record-bearing segment of a path and the leaf below it.
///
/// A `Container*0/Container_Item*N` pair marks `Container_Item` as the
/// collection. Otherwise the first segment under the root is the collection.
/// A leaf is the remaining segment names joined by `/`, or the collection
/// name itself when nothing follows it.
fn split_path(path: &KeyPath) -> (usize, String) {
    let segs = &path.segments;
    let mut collection = 1.min(segs.len() - 1);
    for k in 1..segs.len().saturating_sub(1) {
        let prefix = format!("{}_", segs[k].name);
        if segs[k + 1].name.starts_with(&prefix) {
            collection = k + 1;
            break;
        }
    }
    let leaf = if collection + 1 < segs.len() {
        segs[collection + 1..]
            .iter()
            .map(|s| s.name.as_str())
            .collect::<Vec<_>>()
            .join("/")
    } else {
        segs[collection].name.clone()
    };
    (collection, leaf)
}

pub fn group_records(entries: &[SettingsEntry]) -> Vec<RecordGroup> {
    let mut groups: BTreeMap<(u32, String, StoreFamily), RecordGroup> = BTreeMap::new();
    for entry in entries {
        let (c, leaf) = split_path(&entry.path);
        let segs = &entry.path.segments;
        let collection = &segs[c];
        let key = (
            collection.index,
            collection.name.clone(),
            entry.path.family(),
        );
        let group = groups.entry(key).or_insert_with(|| RecordGroup {
            family: entry.path.family(),
            collection: collection.name.clone(),
            record_index: collection.index,
            scalar: c + 1 == segs.len() && c == 1,
            fields: BTreeMap::new(),
            source_lines: Vec::new(),
            caveats: Caveats::new(),
        });
        if segs[c + 1..].iter().any(|s| s.index != collection.index) {
            group.caveats.insert(Caveat::SegmentIndexMismatch);
        }
        let at = group.source_lines.partition_point(|&l| l <= entry.source_line);
        group.source_lines.insert(at, entry.source_line);
        match group.fields.get_mut(&leaf) {
            Some(existing) => {
                existing.push(entry.decoded.clone());
                group.caveats.insert(Caveat::DuplicateLeaf);
            }
            None => {
                group
                    .fields
                    .insert(leaf, FieldValue::single(entry.decoded.clone()));
            }
        }
    }
    groups.into_values().collect()
}

fn position_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(r"^\(\s*(-?[0-9]+)\s*;\s*(-?[0-9]+)\s*\)?$").expect("static regex")
    })
}

/// Parses `(X; Y` (closing parenthesis optional) without range checks.
pub fn parse_position_raw(decoded: &str) -> Result<(i64, i64), SettingsError> {
    let trimmed = decoded.trim();
    let caps = position_regex()
        .captures(trimmed)
        .ok_or_else(|| SettingsError::Format(decoded.to_owned()))?;
    let parse = |i: usize| {
        caps[i]
            .parse::<i64>()
            .map_err(|_| SettingsError::Format(decoded.to_owned()))
    };
    Ok((parse(1)?, parse(2)?))
}

pub fn parse_position_string(decoded: &str) -> Result<GeoPoint, SettingsError> {
    let (x, y) = parse_position_raw(decoded)?;
    Ok(GeoPoint::from_i64(x, y)?)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MapStoreName {
    pub region: String,
    pub model_id: String,
}

fn store_name_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(r"^([A-Za-z]+)_([0-9A-F]{8})\.(?i:xml)$").expect("static regex")
    })
}

/// Recognizes `<Region>_<8 hex digits>.xml` and extracts the model id.
pub fn parse_map_store_name(file_name: &str) -> Option<MapStoreName> {
    let caps = store_name_regex().captures(file_name)?;
    Some(MapStoreName {
        region: caps[1].to_owned(),
        model_id: caps[2].to_owned(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    pub(crate) const SAMPLE_STORE: &str = r#"<string name="MapSettings*00000*/AddressRecents*00000*/AddressRecents_Address*00023*/Location_Line*00023*/LineRec_MaxSpeed*00023*">MA==</string>
<string name="MapSettings*00000*/AddressRecents*00000*/AddressRecents_Address*00021*/Location_NodeFrom*00021*/NodeRec_Delta*00021*">NTEy</string>
<string name="MapSettings*00000*/EngineRecents*00000*/EngineRecents_Recent*00003*/Location_NodeUpto*00003*/NodeRec_Pos*00003*">KDQ3MTMwODsgNTIwMTgxNk==</string>
<string name="MapSettings*00000*/AddressRecents*00000*/AddressRecents_Address*00025*/Location_Line*00025*/LineRec_Type*00025*">Mzk=</string>
<string name="MapSettings*00000*/EngineRecents*00000*/EngineRecents_Recent*00000*/Location_Line*00000*/LineRec_NamePos*00000*">MjYxMTU3</string>
<string name="MapSettings*00000*/NeverAskedDefaultCountry*00000*">ZmFsc2U=</string>
<string name="MapSettings*00000*/AddressRecents*00000*/AddressRecents_Address*00002*/Location_Line*00002*/LineRec_MaxSpeed*00002*">MzA=</string>
<string name="MapSettings*00000*/SafetyCameraWarnings*00000*/SafetyCameraWarnings_Warning*00007*/SafetyCameraWarnings_Warning_WarningDistance*00007*">NTAwMA==</string>
<string name="MapSettings*00000*/AddressRecents*00000*/AddressRecents_Address*00013*/Location_PoiType*00013*">LTE=</string>
"#;

    // Independent decoder: 6-bit groups, ignores padding and trailing bits.
    fn oracle_b64(s: &str) -> Vec<u8> {
        const A: &[u8] = b"ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
        let mut bits = 0u32;
        let mut n = 0;
        let mut out = Vec::new();
        for c in s.bytes().filter(|&c| c != b'=') {
            bits = (bits << 6) | A.iter().position(|&a| a == c).unwrap() as u32;
            n += 6;
            if n >= 8 {
                n -= 8;
                out.push((bits >> n) as u8);
                bits &= (1 << n) - 1;
            }
        }
        out
    }

    #[test]
    fn sample_store_values() {
        let store = parse_store(SAMPLE_STORE, Strictness::Strict).unwrap();
        let got: Vec<String> = store.entries.iter().map(|e| e.decoded_text()).collect();
        let expected = ["0", "512", "(471308; 5201816", "39", "261157", "false", "30", "5000", "-1"];
        assert_eq!(got, expected);
        for e in &store.entries {
            assert_eq!(oracle_b64(&e.raw_b64), e.decoded);
        }
        assert_eq!(store.entries[2].source_line, 3);
        assert_eq!(store.entries[2].path.segments[2], Segment { name: "EngineRecents_Recent".into(), index: 3 });
        assert_eq!(store.entries[0].path.family(), StoreFamily::MapSettings);
        assert_eq!(store.entries[0].path.to_string(), "MapSettings*00000*/AddressRecents*00000*/AddressRecents_Address*00023*/Location_Line*00023*/LineRec_MaxSpeed*00023*");
    }

    #[test]
    fn empty_document() {
        assert_eq!(parse_store("", Strictness::Strict).unwrap(), ParsedStore::default());
        assert!(group_records(&[]).is_empty());
    }

    #[test]
    fn malformed_entries_are_kept() {
        let text = concat!(
            "<?xml version='1.0' encoding='utf-8' standalone='yes' ?>\n<map>\n",
            "<string name=\"MapSettings*00000*/A*00000*\">!!!</string>\n",
            "<string name=\"MapSettings*0*/A*00000*\">MA==</string>\n",
            "<string name=\"MapSettings*00000*/B*00000*\" />\n",
            "<string name=\"MapSettings*00000*/C*00000*\">MA",
        );
        let store = parse_store(text, Strictness::Tolerant).unwrap();
        assert_eq!(store.entries.len(), 1);
        assert_eq!(store.entries[0].decoded, b"");
        let lines: Vec<_> = store.malformed.iter().map(|m| m.source_line).collect();
        assert_eq!(lines, vec![3, 4, 6]);
        assert!(store.malformed[0].reason.starts_with("base64"));
        assert!(store.malformed[1].reason.contains("segment"));
        assert_eq!(store.malformed[2].reason, "unterminated element");
        assert_eq!(count_string_elements(text), 4);
        let err = parse_store(text, Strictness::Strict).unwrap_err();
        assert!(matches!(err, SettingsError::Malformed(m) if m.source_line == 3));
    }

    #[test]
    fn truncated_element_followed_by_complete_one() {
        let text = "<string name=\"MapSettings*00000*/A*00000*\">MA\n<string name=\"MapSettings*00000*/B*00000*\">MA==</string>";
        let store = parse_store(text, Strictness::Tolerant).unwrap();
        assert_eq!(store.entries.len(), 1);
        assert_eq!(store.entries[0].path.segments[1].name, "B");
        assert_eq!(store.malformed.len(), 1);
    }

    #[test]
    fn sample_store_grouping() {
        let store = parse_store(SAMPLE_STORE, Strictness::Strict).unwrap();
        let groups = group_records(&store.entries);
        let addr: Vec<u32> = groups
            .iter()
            .filter(|g| g.collection == "AddressRecents_Address")
            .map(|g| g.record_index)
            .collect();
        assert_eq!(addr, vec![2, 13, 21, 23, 25]);
        let never = groups.iter().find(|g| g.collection == "NeverAskedDefaultCountry").unwrap();
        assert!(never.scalar);
        assert_eq!(never.scalar_text().as_deref(), Some("false"));
        let recent = groups.iter().find(|g| g.collection == "EngineRecents_Recent" && g.record_index == 3).unwrap();
        assert_eq!(recent.text("Location_NodeUpto/NodeRec_Pos").as_deref(), Some("(471308; 5201816"));
        let warn = groups.iter().find(|g| g.collection == "SafetyCameraWarnings_Warning").unwrap();
        assert_eq!(warn.text("SafetyCameraWarnings_Warning_WarningDistance").as_deref(), Some("5000"));
        let total: usize = groups.iter().map(|g| g.source_lines.len()).sum();
        assert_eq!(total, store.entries.len());
        let idx: Vec<u32> = groups.iter().map(|g| g.record_index).collect();
        assert!(idx.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn duplicate_leaf_and_index_mismatch() {
        let text = concat!(
            "<string name=\"MapSettings*00000*/X*00000*/X_Item*00004*/L*00004*\">MQ==</string>\n",
            "<string name=\"MapSettings*00000*/X*00000*/X_Item*00004*/L*00004*\">Mg==</string>\n",
            "<string name=\"MapSettings*00000*/X*00000*/X_Item*00004*/M*00009*\">Mw==</string>\n",
        );
        let store = parse_store(text, Strictness::Strict).unwrap();
        let groups = group_records(&store.entries);
        assert_eq!(groups.len(), 1);
        let g = &groups[0];
        assert_eq!(g.record_index, 4);
        assert!(g.fields["L"].is_multi());
        assert_eq!(g.fields["L"].values(), &[b"1".to_vec(), b"2".to_vec()]);
        assert!(g.caveats.contains(&Caveat::DuplicateLeaf));
        assert!(g.caveats.contains(&Caveat::SegmentIndexMismatch));
    }

    #[test]
    fn position_strings() {
        assert_eq!(parse_position_string("(471308; 5201816").unwrap(), GeoPoint::new(471308, 5201816).unwrap());
        assert_eq!(parse_position_string("(0; 0)").unwrap(), GeoPoint::new(0, 0).unwrap());
        assert_eq!(
            parse_position_string("471308 5201816"),
            Err(SettingsError::Format("471308 5201816".into()))
        );
        assert!(matches!(parse_position_string("(0; 99999999)"), Err(SettingsError::Range(_))));
        assert_eq!(parse_position_raw("(944004; 10403998").unwrap(), (944004, 10403998));
    }

    #[test]
    fn store_names() {
        assert_eq!(
            parse_map_store_name("Benelux_AF7DE92B.xml"),
            Some(MapStoreName { region: "Benelux".into(), model_id: "AF7DE92B".into() })
        );
        assert!(parse_map_store_name("Benelux_AF7DE92.xml").is_none());
        assert!(parse_map_store_name("NavkitSettings.xml").is_none());
    }

    fn synthetic_store(fields: usize) -> Vec<String> {
        (0..fields)
            .map(|i| {
                let path = format!("MapSettings*00000*/EngineRecents*00000*/EngineRecents_Recent*00007*/Field{i}*00007*");
                let value = LENIENT_BASE64.encode(format!("value {i}"));
                format!("<string name=\"{path}\">{value}</string>")
            })
            .collect()
    }

    proptest! {
        #[test]
        fn shuffled_record_regroups(seed: u64) {
            use rand::seq::SliceRandom;
            use rand::SeedableRng;
            let mut lines = synthetic_store(40);
            lines.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            let store = parse_store(&lines.join("\n"), Strictness::Strict).unwrap();
            let groups = group_records(&store.entries);
            prop_assert_eq!(groups.len(), 1);
            prop_assert_eq!(groups[0].fields.len(), 40);
            prop_assert_eq!(groups[0].record_index, 7);
        }

        #[test]
        fn grouping_is_order_insensitive(seed: u64) {
            use rand::seq::SliceRandom;
            use rand::SeedableRng;
            let store = parse_store(SAMPLE_STORE, Strictness::Strict).unwrap();
            let mut entries = store.entries.clone();
            entries.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            prop_assert_eq!(group_records(&entries), group_records(&store.entries));
        }

        #[test]
        fn entry_conservation(lines in proptest::collection::vec(
            prop_oneof![
                Just("<string name=\"MapSettings*00000*/A*00001*\">MA==</string>".to_owned()),
                Just("<string name=\"MapSettings*00000*/A*00001*\">M</string>".to_owned()),
                Just("<string name=\"bogus\">MA==</string>".to_owned()),
                Just("<int name=\"x\" value=\"1\" />".to_owned()),
                "[a-z <>/]{0,12}",
            ], 0..30)) {
            let text = lines.join("\n");
            let store = parse_store(&text, Strictness::Tolerant).unwrap();
            prop_assert_eq!(store.entries.len() + store.malformed.len(), count_string_elements(&text));
        }

        #[test]
        fn base64_round_trip(bytes in proptest::collection::vec(any::<u8>(), 0..64)) {
            let encoded = LENIENT_BASE64.encode(&bytes);
            prop_assert_eq!(decode_base64(&encoded).unwrap(), bytes.clone());
            prop_assert_eq!(oracle_b64(&encoded), bytes);
        }
    }
}
