//! Analyst-facing outputs: the JSON evidence report, GPX waypoints and a CSV
//! timeline. Every datum carries the file (and lines or byte offset) it came
//! from together with its caveats.

use std::fmt::Write as _;

use serde::Serialize;

use crate::carver::{CarveHit, ScanGap, ScanOutcome};
use crate::caveat::{self, Caveat, Caveats};
use crate::detect::{ChecklistRow, SourceClass};
use crate::geo_time::{
    normalize_timestamp, ArrivalDecoding, GeoPoint, TimeBasis, TimestampSpec,
};
use crate::ov2::{Gap, Ov2File, Ov2Record};
use crate::records::{
    DockEvent, HomeSelection, LastKnownGps, LocType, LocationRecord,
    MapSettingsData, NavkitData, Origin, RouteStreamRecord, ScalarValue, SearchHistory,
    SubscriptionRecord, UserTimeOffset,
};
use crate::settings_xml::{MalformedEntry, RecordGroup};

pub const REDACTED: &str = "[redacted]";

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct SourceRef {
    pub file: String,
    pub lines: Vec<usize>,
    pub offset: Option<u64>,
}

impl SourceRef {
    pub fn lines(file: &str, lines: &[usize]) -> Self {
        SourceRef {
            file: file.to_owned(),
            lines: lines.to_vec(),
            offset: None,
        }
    }

    pub fn offset(file: &str, offset: u64) -> Self {
        SourceRef {
            file: file.to_owned(),
            lines: Vec::new(),
            offset: Some(offset),
        }
    }

    /// `file:3,5` for line references, `file@0x1f` for byte offsets.
    pub fn render(&self) -> String {
        let mut out = self.file.clone();
        if let Some(off) = self.offset {
            let _ = write!(out, "@{off:#x}");
        } else if !self.lines.is_empty() {
            let lines: Vec<String> = self.lines.iter().map(ToString::to_string).collect();
            let _ = write!(out, ":{}", lines.join(","));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Sourced<T> {
    pub source: SourceRef,
    pub record: T,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Favourite {
    pub location: LocationRecord,
    pub type_byte: u8,
    pub total_len: u32,
    pub name_hex: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LastGpsEntry {
    pub gps: LastKnownGps,
    pub point: Option<GeoPoint>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct NavkitScalars {
    pub user_time_offset: Option<UserTimeOffset>,
    pub arrival_time: Option<ArrivalDecoding>,
    pub reminder_dates: std::collections::BTreeMap<String, ScalarValue>,
    pub caveats: Caveats,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct InputDigest {
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ToolMetadata {
    pub name: String,
    pub version: String,
    pub inputs: Vec<InputDigest>,
    /// Absent unless explicitly requested, so reports stay reproducible.
    pub run_time: Option<String>,
    pub credentials_redacted: bool,
}

impl Default for ToolMetadata {
    fn default() -> Self {
        ToolMetadata {
            name: "tomtom-artifacts".to_owned(),
            version: env!("CARGO_PKG_VERSION").to_owned(),
            inputs: Vec::new(),
            run_time: None,
            credentials_redacted: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EvidenceReport {
    pub tool: ToolMetadata,
    pub source: SourceClass,
    pub checklist: Option<Vec<ChecklistRow>>,
    pub favourites: Vec<Sourced<Favourite>>,
    pub recents: Vec<Sourced<LocationRecord>>,
    pub addresses: Vec<Sourced<LocationRecord>>,
    pub selections: Vec<Sourced<LocationRecord>>,
    pub routes: Vec<Sourced<RouteStreamRecord>>,
    pub homes: Vec<Sourced<HomeSelection>>,
    pub subscriptions: Vec<Sourced<SubscriptionRecord>>,
    pub dock: Vec<Sourced<DockEvent>>,
    pub last_gps: Vec<Sourced<LastGpsEntry>>,
    pub searches: Vec<Sourced<SearchHistory>>,
    pub navkit_scalars: Vec<Sourced<NavkitScalars>>,
    pub unmapped: Vec<Sourced<RecordGroup>>,
    pub ov2_gaps: Vec<Sourced<Gap>>,
    pub carve_hits: Vec<Sourced<CarveHit>>,
    pub carve_gaps: Vec<Sourced<ScanGap>>,
    pub malformed: Vec<Sourced<MalformedEntry>>,
}

fn sourced<T>(file: &str, lines: &[usize], record: T) -> Sourced<T> {
    Sourced {
        source: SourceRef::lines(file, lines),
        record,
    }
}

pub fn favourite_from_ov2(record: &Ov2Record, index: u32) -> Option<Favourite> {
    let Ov2Record::SimplePoi {
        total_len,
        pos,
        name,
    } = record
    else {
        return None;
    };
    let mut location = LocationRecord::empty(Origin::Ov2Favourite, index);
    location.pos = Some(*pos);
    location.user_name = record.name_text();
    location.loc_type = LocType::Favourite;
    location.caveats.insert(Caveat::DatumWgs84Assumed);
    if std::str::from_utf8(name).is_err() {
        location.caveats.insert(Caveat::NameEncodingAssumed);
    }
    Some(Favourite {
        location,
        type_byte: record.type_byte(),
        total_len: *total_len,
        name_hex: name.iter().fold(String::new(), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        }),
    })
}

impl EvidenceReport {
    pub fn new(source: SourceClass, checklist: Option<Vec<ChecklistRow>>) -> Self {
        EvidenceReport {
            tool: ToolMetadata::default(),
            source,
            checklist,
            favourites: Vec::new(),
            recents: Vec::new(),
            addresses: Vec::new(),
            selections: Vec::new(),
            routes: Vec::new(),
            homes: Vec::new(),
            subscriptions: Vec::new(),
            dock: Vec::new(),
            last_gps: Vec::new(),
            searches: Vec::new(),
            navkit_scalars: Vec::new(),
            unmapped: Vec::new(),
            ov2_gaps: Vec::new(),
            carve_hits: Vec::new(),
            carve_gaps: Vec::new(),
            malformed: Vec::new(),
        }
    }

    pub fn add_ov2(&mut self, file: &str, ov2: &Ov2File) {
        let mut index = 0u32;
        for (record, &offset) in ov2.records.iter().zip(&ov2.source_offsets) {
            if let Some(fav) = favourite_from_ov2(record, index) {
                self.favourites.push(Sourced {
                    source: SourceRef::offset(file, offset),
                    record: fav,
                });
                index += 1;
            }
        }
        for gap in &ov2.gaps {
            self.ov2_gaps.push(Sourced {
                source: SourceRef::offset(file, gap.offset),
                record: gap.clone(),
            });
        }
    }

    pub fn add_map_settings(&mut self, file: &str, data: MapSettingsData) {
        let MapSettingsData {
            engine_recents,
            address_recents,
            last_selected_poi,
            last_selected_poi_data,
            last_selected_search_item,
            regular_route_home,
            regular_route_work,
            route,
            last_known_gps,
            unmapped,
        } = data;
        let wrap = |r: LocationRecord| sourced(file, &r.source_lines.clone(), r);
        self.recents.extend(engine_recents.into_iter().map(wrap));
        self.addresses.extend(address_recents.into_iter().map(wrap));
        self.selections.extend(
            [
                last_selected_poi,
                last_selected_poi_data,
                last_selected_search_item,
                regular_route_home,
                regular_route_work,
            ]
            .into_iter()
            .flatten()
            .map(wrap),
        );
        if let Some(r) = route {
            self.routes.push(sourced(file, &r.source_lines.clone(), r));
        }
        if let Some(gps) = last_known_gps {
            let entry = LastGpsEntry {
                point: gps.point(),
                gps,
            };
            self.last_gps
                .push(sourced(file, &entry.gps.source_lines.clone(), entry));
        }
        self.add_unmapped(file, unmapped);
    }

    pub fn add_navkit(&mut self, file: &str, data: NavkitData) {
        let NavkitData {
            homes,
            subscriptions,
            dock,
            user_time_offset,
            arrival_time,
            search_history,
            reminder_dates,
            unmapped,
            caveats,
        } = data;
        if let Some(h) = homes {
            let mut lines: Vec<usize> = std::iter::once(&h.current)
                .chain(&h.history)
                .flat_map(|(_, r)| r.source_lines.iter().copied())
                .collect();
            lines.sort_unstable();
            self.homes.push(sourced(file, &lines, h));
        }
        for s in subscriptions {
            self.subscriptions.push(sourced(file, &s.source_lines.clone(), s));
        }
        if let Some(d) = dock {
            self.dock.push(sourced(file, &d.source_lines.clone(), d));
        }
        if !search_history.terms().is_empty() {
            self.searches.push(sourced(file, &[], search_history));
        }
        if user_time_offset.is_some() || arrival_time.is_some() || !reminder_dates.is_empty() {
            let mut lines: Vec<usize> = reminder_dates
                .values()
                .flat_map(|v| v.source_lines.iter().copied())
                .collect();
            lines.sort_unstable();
            self.navkit_scalars.push(sourced(
                file,
                &lines,
                NavkitScalars {
                    user_time_offset,
                    arrival_time,
                    reminder_dates,
                    caveats,
                },
            ));
        }
        self.add_unmapped(file, unmapped);
    }

    fn add_unmapped(&mut self, file: &str, groups: Vec<RecordGroup>) {
        for g in groups {
            self.unmapped.push(sourced(file, &g.source_lines.clone(), g));
        }
    }

    pub fn add_malformed(&mut self, file: &str, entries: &[MalformedEntry]) {
        for m in entries {
            self.malformed
                .push(sourced(file, &[m.source_line], m.clone()));
        }
    }

    pub fn add_carve(&mut self, file: &str, outcome: ScanOutcome) {
        for hit in outcome.hits {
            self.carve_hits.push(Sourced {
                source: SourceRef::offset(file, hit.offset),
                record: hit,
            });
        }
        for gap in outcome.gaps {
            self.carve_gaps.push(Sourced {
                source: SourceRef::offset(file, gap.offset),
                record: gap,
            });
        }
    }

    /// Replaces recovered passwords with a marker.
    pub fn redact_credentials(&mut self) {
        for s in &mut self.subscriptions {
            if s.record.password.is_some() {
                s.record.password = Some(REDACTED.to_owned());
            }
        }
        self.tool.credentials_redacted = true;
    }

    pub fn has_malformed(&self) -> bool {
        !self.malformed.is_empty()
    }
}

/// Pretty-printed JSON with declaration-ordered keys and a trailing newline.
pub fn emit_json(report: &EvidenceReport) -> String {
    let mut out = serde_json::to_string_pretty(report).expect("report serializes");
    out.push('\n');
    out
}

struct Waypoint {
    point: GeoPoint,
    time: Option<String>,
    name: String,
    desc: String,
    src: String,
    kind: &'static str,
}

fn xml_escape(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for c in text.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            '\t' | '\n' | '\r' => out.push(c),
            c if (c as u32) < 0x20 || c == '\u{FFFE}' || c == '\u{FFFF}' => out.push('\u{FFFD}'),
            c => out.push(c),
        }
    }
    out
}

fn describe(kind: &str, caveats: &Caveats) -> String {
    if caveats.is_empty() {
        kind.to_owned()
    } else {
        format!("{kind}; caveats: {}", caveat::join(caveats))
    }
}

fn location_waypoint(
    rec: &LocationRecord,
    source: &SourceRef,
    time: Option<&TimestampSpec>,
) -> Option<Waypoint> {
    let point = rec.pos?;
    let mut caveats = rec.caveats.clone();
    let time = time.and_then(|t| normalize_timestamp(t).ok()).and_then(|n| {
        caveats.extend(n.caveats.iter().copied());
        n.utc()
    });
    Some(Waypoint {
        point,
        time,
        name: rec.display_name(),
        desc: describe(rec.origin.label(), &caveats),
        src: source.render(),
        kind: rec.origin.label(),
    })
}

fn waypoints(report: &EvidenceReport) -> Vec<Waypoint> {
    let mut out = Vec::new();
    let locs = |list: &[Sourced<LocationRecord>], out: &mut Vec<Waypoint>| {
        out.extend(
            list.iter()
                .filter_map(|s| location_waypoint(&s.record, &s.source, None)),
        )
    };
    for f in &report.favourites {
        out.extend(location_waypoint(&f.record.location, &f.source, None));
    }
    locs(&report.recents, &mut out);
    locs(&report.addresses, &mut out);
    locs(&report.selections, &mut out);
    for r in &report.routes {
        if let Some(dep) = &r.record.departure {
            out.extend(location_waypoint(dep, &r.source, r.record.departure_time.as_ref()));
        }
        if let Some(dst) = &r.record.destination {
            out.extend(location_waypoint(dst, &r.source, None));
        }
    }
    for h in &report.homes {
        for (_, rec) in std::iter::once(&h.record.current).chain(&h.record.history) {
            out.extend(location_waypoint(rec, &h.source, None));
        }
    }
    for d in &report.dock {
        let Some(point) = d.record.pos else { continue };
        let mut caveats = d.record.caveats.clone();
        let time = d
            .record
            .time
            .and_then(|t| normalize_timestamp(&t).ok())
            .and_then(|n| {
                caveats.extend(n.caveats.iter().copied());
                n.utc()
            });
        out.push(Waypoint {
            point,
            time,
            name: "Last docked position".to_owned(),
            desc: describe("Last docked position", &caveats),
            src: d.source.render(),
            kind: "Last docked position",
        });
    }
    for g in &report.last_gps {
        let Some(point) = g.record.point else { continue };
        out.push(Waypoint {
            point,
            time: None,
            name: "Last known GPS position".to_owned(),
            desc: describe("Last known GPS position", &g.record.gps.caveats),
            src: g.source.render(),
            kind: "Last known GPS position",
        });
    }
    out
}

/// GPX 1.1 with one waypoint per record carrying a full position.
pub fn emit_gpx(report: &EvidenceReport) -> String {
    let mut out = String::from(concat!(
        "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n",
        "<gpx version=\"1.1\" creator=\"tomtom-artifacts\" ",
        "xmlns=\"http://www.topografix.com/GPX/1/1\" ",
        "xmlns:xsi=\"http://www.w3.org/2001/XMLSchema-instance\" ",
        "xsi:schemaLocation=\"http://www.topografix.com/GPX/1/1 ",
        "http://www.topografix.com/GPX/1/1/gpx.xsd\">\n"
    ));
    for w in waypoints(report) {
        let _ = writeln!(
            out,
            "  <wpt lat=\"{}\" lon=\"{}\">",
            w.point.lat.degrees(),
            w.point.lon.degrees()
        );
        if let Some(t) = &w.time {
            let _ = writeln!(out, "    <time>{t}</time>");
        }
        let _ = writeln!(out, "    <name>{}</name>", xml_escape(&w.name));
        let _ = writeln!(out, "    <desc>{}</desc>", xml_escape(&w.desc));
        let _ = writeln!(out, "    <src>{}</src>", xml_escape(&w.src));
        let _ = writeln!(out, "    <type>{}</type>", xml_escape(w.kind));
        out.push_str("  </wpt>\n");
    }
    out.push_str("</gpx>\n");
    out
}

pub const TIMELINE_COLUMNS: [&str; 10] = [
    "timestamp_utc",
    "timestamp_raw",
    "time_basis",
    "anomaly_alternative",
    "event_type",
    "lat",
    "lon",
    "name",
    "source",
    "caveats",
];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TimelineRow {
    pub seconds: Option<i64>,
    pub timestamp_utc: String,
    pub timestamp_raw: i64,
    pub time_basis: &'static str,
    pub anomaly_alternative: String,
    pub event_type: &'static str,
    pub lat: String,
    pub lon: String,
    pub name: String,
    pub source: String,
    pub caveats: String,
}

fn basis_label(basis: TimeBasis) -> &'static str {
    match basis {
        TimeBasis::DeviceClock => "device_clock",
        TimeBasis::ServerClock => "server_clock",
        TimeBasis::Unknown => "unknown",
    }
}

fn timeline_row(
    spec: &TimestampSpec,
    event_type: &'static str,
    point: Option<GeoPoint>,
    name: String,
    source: &SourceRef,
    record_caveats: &Caveats,
) -> TimelineRow {
    let norm = normalize_timestamp(spec).ok();
    let mut caveats = record_caveats.clone();
    if let Some(n) = &norm {
        caveats.extend(n.caveats.iter().copied());
    }
    TimelineRow {
        seconds: norm.as_ref().map(|n| n.seconds),
        timestamp_utc: norm.as_ref().and_then(|n| n.utc()).unwrap_or_default(),
        timestamp_raw: spec.raw,
        time_basis: basis_label(spec.basis),
        anomaly_alternative: norm
            .as_ref()
            .and_then(|n| n.alternative_utc())
            .unwrap_or_default(),
        event_type,
        lat: point.map(|p| p.lat.degrees().to_string()).unwrap_or_default(),
        lon: point.map(|p| p.lon.degrees().to_string()).unwrap_or_default(),
        name,
        source: source.render(),
        caveats: caveat::join(&caveats),
    }
}

/// Timestamped events ordered by normalized time, then event type, then
/// source. Rows whose time cannot be normalized sort last.
pub fn timeline_rows(report: &EvidenceReport) -> Vec<TimelineRow> {
    let mut rows = Vec::new();
    for r in &report.routes {
        if let Some(t) = &r.record.departure_time {
            let dep = r.record.departure.as_ref();
            rows.push(timeline_row(
                t,
                "route_departure",
                dep.and_then(|d| d.pos),
                dep.map(LocationRecord::display_name).unwrap_or_default(),
                &r.source,
                &r.record.caveats,
            ));
        }
    }
    for d in &report.dock {
        if let Some(t) = &d.record.time {
            rows.push(timeline_row(
                t,
                "dock",
                d.record.pos,
                "Last docked position".to_owned(),
                &d.source,
                &d.record.caveats,
            ));
        }
    }
    for s in &report.subscriptions {
        let rec = &s.record;
        let name = rec.service.clone().unwrap_or_default();
        let times = [
            (&rec.start, "subscription_start"),
            (&rec.end, "subscription_end"),
            (&rec.last_valid, "account_last_valid"),
            (&rec.last_connection, "account_last_connection"),
            (&rec.account_date_last_update, "account_date_last_update"),
        ];
        for (t, kind) in times {
            if let Some(t) = t {
                rows.push(timeline_row(t, kind, None, name.clone(), &s.source, &rec.caveats));
            }
        }
    }
    rows.sort_by(|a, b| {
        (a.seconds.is_none(), a.seconds, a.event_type, &a.source)
            .cmp(&(b.seconds.is_none(), b.seconds, b.event_type, &b.source))
    });
    rows
}

pub fn emit_timeline_csv(report: &EvidenceReport) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(TIMELINE_COLUMNS).expect("in-memory write");
    for r in timeline_rows(report) {
        let raw = r.timestamp_raw.to_string();
        w.write_record([
            r.timestamp_utc.as_str(),
            raw.as_str(),
            r.time_basis,
            r.anomaly_alternative.as_str(),
            r.event_type,
            r.lat.as_str(),
            r.lon.as_str(),
            r.name.as_str(),
            r.source.as_str(),
            r.caveats.as_str(),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 fields")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detect::classify_tree;
    use crate::ov2::parse_ov2;

    const GOUDA_RECORD: [u8; 53] = *b"\x02\x35\x00\x00\x00\xC2\x33\x07\x00\x4F\x60\x4F\x00Ridder Dirkstraat - Sophiastraat, Gouda\x00";

    fn empty_report() -> EvidenceReport {
        let none: [&str; 0] = [];
        EvidenceReport::new(classify_tree(&none), None)
    }

    fn gouda_report() -> EvidenceReport {
        let mut r = empty_report();
        let ov2 = parse_ov2(&GOUDA_RECORD, Default::default()).unwrap();
        r.add_ov2("Favorites.ov2", &ov2);
        r
    }

    /// Structural GPX 1.1 checks: namespace, version, wpt attributes within
    /// range, child element order per the schema's wptType sequence.
    pub(crate) fn check_gpx(text: &str) -> Result<usize, String> {
        const NS: &str = "http://www.topografix.com/GPX/1/1";
        const WPT_ORDER: [&str; 19] = [
            "ele", "time", "magvar", "geoidheight", "name", "cmt", "desc", "src", "link", "sym",
            "type", "fix", "sat", "hdop", "vdop", "pdop", "ageofdgpsdata", "dgpsid", "extensions",
        ];
        let doc = roxmltree::Document::parse(text).map_err(|e| e.to_string())?;
        let root = doc.root_element();
        if root.tag_name().name() != "gpx" || root.tag_name().namespace() != Some(NS) {
            return Err("root".into());
        }
        if root.attribute("version") != Some("1.1") || root.attribute("creator").is_none() {
            return Err("gpx attributes".into());
        }
        let mut count = 0;
        for wpt in root.children().filter(|n| n.is_element()) {
            if wpt.tag_name().name() != "wpt" || wpt.tag_name().namespace() != Some(NS) {
                return Err(format!("unexpected {}", wpt.tag_name().name()));
            }
            let lat: f64 = wpt.attribute("lat").ok_or("lat")?.parse().map_err(|_| "lat")?;
            let lon: f64 = wpt.attribute("lon").ok_or("lon")?.parse().map_err(|_| "lon")?;
            if !(-90.0..=90.0).contains(&lat) || !(-180.0..180.0).contains(&lon) {
                return Err("range".into());
            }
            let mut last = 0;
            for child in wpt.children().filter(|n| n.is_element()) {
                let pos = WPT_ORDER
                    .iter()
                    .position(|n| *n == child.tag_name().name())
                    .ok_or("unknown child")?;
                if pos < last {
                    return Err("child order".into());
                }
                last = pos;
                if child.tag_name().name() == "time" {
                    chrono::DateTime::parse_from_rfc3339(child.text().unwrap_or(""))
                        .map_err(|e| e.to_string())?;
                }
            }
            count += 1;
        }
        Ok(count)
    }

    #[test]
    fn gouda_json() {
        let json = emit_json(&gouda_report());
        let v: serde_json::Value = serde_json::from_str(&json).unwrap();
        let fav = &v["favourites"][0];
        assert_eq!(fav["record"]["location"]["user_name"], "Ridder Dirkstraat - Sophiastraat, Gouda");
        assert_eq!(fav["record"]["location"]["pos"]["lon"].as_f64(), Some(4.72002));
        assert_eq!(fav["record"]["location"]["pos"]["lat"].as_f64(), Some(52.01999));
        assert_eq!(fav["record"]["location"]["pos"]["lat_e5"], 5201999);
        assert_eq!(fav["source"]["offset"], 0);
        assert_eq!(json, emit_json(&gouda_report()));
    }

    #[test]
    fn gouda_gpx() {
        let gpx = emit_gpx(&gouda_report());
        assert!(gpx.contains("<wpt lat=\"52.01999\" lon=\"4.72002\">"));
        assert_eq!(check_gpx(&gpx), Ok(1));
        assert_eq!(check_gpx(&emit_gpx(&empty_report())), Ok(0));
    }

    #[test]
    fn empty_outputs() {
        let r = empty_report();
        assert_eq!(emit_timeline_csv(&r), TIMELINE_COLUMNS.join(",") + "\n");
        let v: serde_json::Value = serde_json::from_str(&emit_json(&r)).unwrap();
        assert_eq!(v["favourites"].as_array().map(Vec::len), Some(0));
        assert_eq!(v["tool"]["run_time"], serde_json::Value::Null);
    }

    fn dock_and_route() -> EvidenceReport {
        let mut r = empty_report();
        let mut dock = DockEvent {
            pos: Some(GeoPoint::new(472002, 5201999).unwrap()),
            raw_x: Some("472002".into()),
            raw_y: Some("5201999".into()),
            time: Some(TimestampSpec::device_minutes(21_000_000)),
            raw_time: Some("21000000".into()),
            source_lines: vec![7],
            caveats: Caveats::new(),
        };
        dock.caveats.insert(Caveat::DeviceClock);
        r.dock.push(sourced("NavkitSettings.xml", &[7], dock));
        let mut dep = LocationRecord::empty(Origin::RouteStreamEndpoint, 0);
        dep.pos = Some(GeoPoint::new(471308, 5201816).unwrap());
        dep.loc_name = Some("Gouda".into());
        let route = RouteStreamRecord {
            record_index: 0,
            departure: Some(dep),
            destination: None,
            departure_time: Some(TimestampSpec::device_seconds(1_300_000_000)),
            raw_departure_time: Some("1300000000".into()),
            extra: Default::default(),
            source_lines: vec![3],
            caveats: Caveats::new(),
        };
        r.routes.push(sourced("Benelux_AF7DE92B.xml", &[3], route));
        r
    }

    #[test]
    fn timeline_sorted() {
        let r = dock_and_route();
        let rows = timeline_rows(&r);
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].event_type, "dock");
        assert_eq!(rows[0].timestamp_utc, "2009-12-05T08:00:00Z");
        assert_eq!(rows[1].event_type, "route_departure");
        let csv = emit_timeline_csv(&r);
        assert_eq!(csv.lines().count(), 3);
        let gpx = emit_gpx(&r);
        assert!(gpx.contains("<time>2009-12-05T08:00:00Z</time>"));
        assert_eq!(check_gpx(&gpx), Ok(2));
    }

    #[test]
    fn anomaly_and_redaction() {
        let mut r = empty_report();
        let sub = SubscriptionRecord {
            record_index: 0,
            service: Some("Traffic".into()),
            start: None,
            end: None,
            username: Some("user".into()),
            password: Some("hunter2".into()),
            last_valid: Some(TimestampSpec::skewed_server_seconds(1_370_000_000)),
            last_connection: None,
            account_date_last_update: None,
            extra: Default::default(),
            source_lines: vec![1, 2],
            caveats: Caveats::new(),
        };
        r.subscriptions.push(sourced("NavkitSettings.xml", &[1, 2], sub));
        let rows = timeline_rows(&r);
        assert_eq!(rows[0].anomaly_alternative, "2013-04-29T11:33:20Z");
        assert!(rows[0].caveats.contains(Caveat::ServerTimeAnomaly.code()));
        assert!(emit_json(&r).contains("hunter2"));
        r.redact_credentials();
        let json = emit_json(&r);
        assert!(!json.contains("hunter2"));
        assert!(json.contains(REDACTED));
    }

    #[test]
    fn hostile_names_escape() {
        let mut r = empty_report();
        let rec = Ov2Record::simple_poi(GeoPoint::new(1, 1).unwrap(), b"<&\x01\"'>".to_vec());
        let ov2 = Ov2File::from_records(vec![rec]);
        r.add_ov2("f.ov2", &ov2);
        assert_eq!(check_gpx(&emit_gpx(&r)), Ok(1));
    }
}
