//! Seeded synthetic evidence trees with a ground-truth manifest.
//!
//! Every expected value in the manifest is computed here from the intended
//! record, never by running the decoders.

use std::collections::BTreeMap;
use std::io;
use std::path::Path;

use base64::engine::general_purpose::STANDARD;
use base64::Engine as _;
use chrono::{DateTime, SecondsFormat};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use tomtom_artifacts::geo_time::normalize_timestamp;
use tomtom_artifacts::records::{LocationRecord, Origin};
use tomtom_artifacts::report::EvidenceReport;

pub const DEFAULT_RECORDS: usize = 10;
pub const MANIFEST_FILE: &str = "manifest.json";
pub const NOISE_FILE: &str = "noise.img";
pub const APP_DIR: &str = "com.tomtom.navapp";

const WORDS: [&str; 16] = [
    "Ridder", "Dirkstraat", "Sophiastraat", "Markt", "Kerkweg", "Stationsplein", "Hoofdstraat",
    "Café", "Groenendaal", "Zuid", "Noord", "Lange", "Brückenweg", "Veerstal", "Molenwerf",
    "Ééndracht",
];
const CITIES: [&str; 8] = [
    "Gouda", "Utrecht", "Leiden", "Delft", "Breda", "Liège", "Antwerpen", "Luxembourg",
];
const LOC_TYPES: [&str; 5] = [
    "LOCTYP_ADDRESS", "LOCTYP_POI", "LOCTYP_MAPTICK", "LOCTYP_GPS", "LOCTYP_FAVOURITE",
];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExpectedPlace {
    pub name: String,
    pub lon_e5: i32,
    pub lat_e5: i32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExpectedLocation {
    pub index: u32,
    pub name: Option<String>,
    pub loc_type: String,
    pub city: Option<String>,
    pub lon_e5: Option<i32>,
    pub lat_e5: Option<i32>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExpectedRoute {
    pub departure: Option<ExpectedLocation>,
    pub destination: Option<ExpectedLocation>,
    pub departure_raw: Option<i64>,
    pub departure_utc: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExpectedHomes {
    pub current_index: u32,
    pub current_name: Option<String>,
    pub history_indices: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExpectedDock {
    pub lon_e5: i32,
    pub lat_e5: i32,
    pub minutes: i64,
    pub utc: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExpectedPoint {
    pub lon_e5: i32,
    pub lat_e5: i32,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExpectedRecords {
    pub class: String,
    pub model_id: Option<String>,
    pub favourites: Vec<ExpectedPlace>,
    pub recents: Vec<ExpectedLocation>,
    pub addresses: Vec<ExpectedLocation>,
    pub last_selected_poi_data: Option<ExpectedPoint>,
    pub routes: Vec<ExpectedRoute>,
    pub homes: Option<ExpectedHomes>,
    pub dock: Option<ExpectedDock>,
    pub last_gps: Option<ExpectedPoint>,
    pub searches: Vec<String>,
    pub user_time_offset: Option<String>,
}

fn expected_location(rec: &LocationRecord) -> ExpectedLocation {
    ExpectedLocation {
        index: rec.record_index,
        name: rec.user_name.clone(),
        loc_type: rec.loc_type.label().to_owned(),
        city: rec.city.clone(),
        lon_e5: rec.pos.map(|p| p.lon.raw()),
        lat_e5: rec.pos.map(|p| p.lat.raw()),
    }
}

impl ExpectedRecords {
    /// Projects a decoded report onto the fields the manifest pins down.
    pub fn from_report(report: &EvidenceReport) -> Self {
        let class = serde_json::to_value(report.source.class)
            .ok()
            .and_then(|v| v.as_str().map(str::to_owned))
            .unwrap_or_default();
        let mut recents: Vec<_> = report.recents.iter().map(|s| expected_location(&s.record)).collect();
        recents.sort_by_key(|l| l.index);
        let mut addresses: Vec<_> = report.addresses.iter().map(|s| expected_location(&s.record)).collect();
        addresses.sort_by_key(|l| l.index);
        let homes = report.homes.first().map(|h| {
            let mut history_indices: Vec<u32> = h.record.history.iter().map(|(i, _)| *i).collect();
            history_indices.sort_unstable();
            ExpectedHomes {
                current_index: h.record.current.0,
                current_name: h.record.current.1.user_name.clone(),
                history_indices,
            }
        });
        ExpectedRecords {
            class,
            model_id: report.source.model_id.clone(),
            favourites: report
                .favourites
                .iter()
                .filter_map(|f| {
                    let loc = &f.record.location;
                    Some(ExpectedPlace {
                        name: loc.user_name.clone()?,
                        lon_e5: loc.pos?.lon.raw(),
                        lat_e5: loc.pos?.lat.raw(),
                    })
                })
                .collect(),
            recents,
            addresses,
            last_selected_poi_data: report
                .selections
                .iter()
                .find(|s| s.record.origin == Origin::LastSelectedPoiData)
                .and_then(|s| s.record.pos)
                .map(|p| ExpectedPoint { lon_e5: p.lon.raw(), lat_e5: p.lat.raw() }),
            routes: report
                .routes
                .iter()
                .map(|r| ExpectedRoute {
                    departure: r.record.departure.as_ref().map(expected_location),
                    destination: r.record.destination.as_ref().map(expected_location),
                    departure_raw: r.record.departure_time.map(|t| t.raw),
                    departure_utc: r
                        .record
                        .departure_time
                        .and_then(|t| normalize_timestamp(&t).ok())
                        .and_then(|n| n.utc()),
                })
                .collect(),
            homes,
            dock: report.dock.first().and_then(|d| {
                let pos = d.record.pos?;
                let t = d.record.time?;
                Some(ExpectedDock {
                    lon_e5: pos.lon.raw(),
                    lat_e5: pos.lat.raw(),
                    minutes: t.raw,
                    utc: normalize_timestamp(&t).ok()?.utc()?,
                })
            }),
            last_gps: report
                .last_gps
                .first()
                .and_then(|g| g.record.point)
                .map(|p| ExpectedPoint { lon_e5: p.lon.raw(), lat_e5: p.lat.raw() }),
            searches: report
                .searches
                .iter()
                .flat_map(|s| s.record.terms().iter().cloned())
                .collect(),
            user_time_offset: report
                .navkit_scalars
                .iter()
                .find_map(|s| s.record.user_time_offset.as_ref()?.rendered.clone()),
        }
    }

    /// Names of top-level fields that differ.
    pub fn diff(&self, other: &Self) -> Vec<String> {
        let a = serde_json::to_value(self).expect("serializable");
        let b = serde_json::to_value(other).expect("serializable");
        let (Some(a), Some(b)) = (a.as_object(), b.as_object()) else {
            return vec!["<root>".into()];
        };
        a.iter()
            .filter(|(k, v)| b.get(*k) != Some(v))
            .map(|(k, _)| k.clone())
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlantedRecord {
    pub offset: u64,
    pub len: usize,
    pub name: String,
    pub lon_e5: i32,
    pub lat_e5: i32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NoiseManifest {
    pub path: String,
    pub size: u64,
    pub planted: Vec<PlantedRecord>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FixtureManifest {
    pub seed: u64,
    pub records: usize,
    pub files: Vec<String>,
    pub expected: ExpectedRecords,
    pub noise_image: Option<NoiseManifest>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FixtureSpec {
    pub seed: u64,
    pub records: usize,
    pub noise_size: Option<u64>,
    /// Records planted in the noise image; defaults to `records`.
    pub planted: Option<usize>,
}

impl FixtureSpec {
    pub fn new(seed: u64) -> Self {
        FixtureSpec {
            seed,
            records: DEFAULT_RECORDS,
            noise_size: None,
            planted: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fixture {
    pub files: BTreeMap<String, Vec<u8>>,
    pub manifest: FixtureManifest,
}

/// Little-endian simple POI record, written without the library encoder.
pub fn encode_simple_poi(lon: i32, lat: i32, name: &str) -> Vec<u8> {
    let len = (13 + name.len() + 1) as u32;
    let mut out = vec![2u8];
    out.extend_from_slice(&len.to_le_bytes());
    out.extend_from_slice(&lon.to_le_bytes());
    out.extend_from_slice(&lat.to_le_bytes());
    out.extend_from_slice(name.as_bytes());
    out.push(0);
    out
}

fn utc(seconds: i64) -> String {
    DateTime::from_timestamp(seconds, 0)
        .expect("fixture times are in range")
        .to_rfc3339_opts(SecondsFormat::Secs, true)
}

fn render_offset(seconds: i64) -> String {
    let sign = if seconds < 0 { '-' } else { '+' };
    let s = seconds.abs();
    format!("{sign}{:02}:{:02}:{:02}", s / 3600, s / 60 % 60, s % 60)
}

struct Store {
    root: &'static str,
    lines: Vec<String>,
}

impl Store {
    fn new(root: &'static str) -> Self {
        Store { root, lines: Vec::new() }
    }

    fn put(&mut self, segments: &[(&str, u32)], value: &str) {
        let mut key = format!("{}*00000*", self.root);
        for (name, index) in segments {
            key.push_str(&format!("/{name}*{index:05}*"));
        }
        self.lines.push(format!(
            "    <string name=\"{key}\">{}</string>",
            STANDARD.encode(value.as_bytes())
        ));
    }

    fn put_location(&mut self, prefix: &[(&str, u32)], index: u32, loc: &GenLocation) {
        let leaf = |name: &'static str| {
            let mut segs = prefix.to_vec();
            segs.push((name, index));
            segs
        };
        if let Some(n) = &loc.name {
            self.put(&leaf("Location_UserName"), n);
        }
        self.put(&leaf("Location_LocType"), &loc.loc_type);
        if let Some(c) = &loc.city {
            self.put(&leaf("Location_CityName"), c);
        }
        if loc.split {
            self.put(&leaf("Location_UserPosX"), &loc.lon.to_string());
            self.put(&leaf("Location_UserPosY"), &loc.lat.to_string());
        } else {
            self.put(&leaf("Location_UserPos"), &format!("({}; {})", loc.lon, loc.lat));
        }
        let mut extra = prefix.to_vec();
        extra.push(("Location_Line", index));
        extra.push(("LineRec_MaxSpeed", index));
        self.put(&extra, &loc.max_speed.to_string());
    }

    fn render(mut self, rng: &mut ChaCha8Rng) -> Vec<u8> {
        self.lines.shuffle(rng);
        let mut out = String::from("<?xml version='1.0' encoding='utf-8' standalone='yes' ?>\n<map>\n");
        for l in &self.lines {
            out.push_str(l);
            out.push('\n');
        }
        out.push_str("</map>\n");
        out.into_bytes()
    }
}

struct GenLocation {
    name: Option<String>,
    loc_type: String,
    city: Option<String>,
    lon: i32,
    lat: i32,
    split: bool,
    max_speed: u32,
}

impl GenLocation {
    fn random(rng: &mut ChaCha8Rng) -> Self {
        let (lon, lat) = random_point(rng);
        GenLocation {
            name: rng.gen_bool(0.9).then(|| random_name(rng)),
            loc_type: LOC_TYPES.choose(rng).expect("non-empty").to_string(),
            city: rng.gen_bool(0.8).then(|| CITIES.choose(rng).expect("non-empty").to_string()),
            lon,
            lat,
            split: rng.gen_bool(0.2),
            max_speed: rng.gen_range(1..=13) * 10,
        }
    }

    fn expected(&self, index: u32) -> ExpectedLocation {
        ExpectedLocation {
            index,
            name: self.name.clone(),
            loc_type: self.loc_type.clone(),
            city: self.city.clone(),
            lon_e5: Some(self.lon),
            lat_e5: Some(self.lat),
        }
    }
}

fn random_point(rng: &mut ChaCha8Rng) -> (i32, i32) {
    (rng.gen_range(250_000..=650_000), rng.gen_range(4_950_000..=5_350_000))
}

fn random_name(rng: &mut ChaCha8Rng) -> String {
    let words = rng.gen_range(1..=3);
    let mut parts: Vec<&str> = (0..words).map(|_| *WORDS.choose(rng).expect("non-empty")).collect();
    parts.dedup();
    let mut name = parts.join(" ");
    if rng.gen_bool(0.4) {
        name.push_str(&format!(" {}", rng.gen_range(1..200)));
    }
    name
}

/// `k` distinct ascending indices drawn from `0..3k`, so gaps appear.
fn sparse_indices(rng: &mut ChaCha8Rng, k: usize) -> Vec<u32> {
    let mut pool: Vec<u32> = (0..(3 * k as u32).max(1)).collect();
    pool.shuffle(rng);
    let mut picked = pool[..k].to_vec();
    picked.sort_unstable();
    picked
}

fn map_store_path(model: &str) -> String {
    format!("{APP_DIR}/shared_prefs/Benelux_{model}.xml")
}

pub fn generate(spec: FixtureSpec) -> Fixture {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let n = spec.records;
    let model = format!("{:08X}", rng.gen::<u32>());
    let mut expected = ExpectedRecords {
        class: "android_application".into(),
        model_id: Some(model.clone()),
        ..ExpectedRecords::default()
    };

    let mut ov2 = Vec::new();
    for _ in 0..n {
        let (lon, lat) = random_point(&mut rng);
        let name = random_name(&mut rng);
        ov2.extend(encode_simple_poi(lon, lat, &name));
        expected.favourites.push(ExpectedPlace { name, lon_e5: lon, lat_e5: lat });
    }

    let mut map = Store::new("MapSettings");
    for index in sparse_indices(&mut rng, n) {
        let loc = GenLocation::random(&mut rng);
        map.put_location(&[("EngineRecents", 0), ("EngineRecents_Recent", index)], index, &loc);
        expected.recents.push(loc.expected(index));
    }
    for index in sparse_indices(&mut rng, n) {
        let loc = GenLocation::random(&mut rng);
        map.put_location(&[("AddressRecents", 0), ("AddressRecents_Address", index)], index, &loc);
        expected.addresses.push(loc.expected(index));
    }

    let mut navkit = Store::new("NavkitSettings");
    if n > 0 {
        let (lon, lat) = random_point(&mut rng);
        map.put(
            &[("LastSelectedPoiData", 0), ("Location_UserPos", 0)],
            &format!("({}; {})", lon * 2, lat * 2),
        );
        expected.last_selected_poi_data = Some(ExpectedPoint { lon_e5: lon, lat_e5: lat });

        let mut dep = GenLocation::random(&mut rng);
        let mut dst = GenLocation::random(&mut rng);
        dep.split = false;
        dst.split = false;
        let departure: i64 = rng.gen_range(1_200_000_000..1_700_000_000);
        map.put_location(&[("RouteStream", 0), ("Departure", 0)], 0, &dep);
        map.put_location(&[("RouteStream", 0), ("Destination", 0)], 0, &dst);
        map.put(&[("RouteStream", 0), ("DepartureTime", 0)], &departure.to_string());
        expected.routes.push(ExpectedRoute {
            departure: Some(dep.expected(0)),
            destination: Some(dst.expected(0)),
            departure_raw: Some(departure),
            departure_utc: Some(utc(departure)),
        });

        let (gx, gy) = random_point(&mut rng);
        map.put(&[("LastKnownTrueGpsPosX", 0)], &gx.to_string());
        map.put(&[("LastKnownTrueGpsPosY", 0)], &gy.to_string());
        expected.last_gps = Some(ExpectedPoint { lon_e5: gx, lat_e5: gy });

        let homes = sparse_indices(&mut rng, n.min(3));
        let mut names = Vec::new();
        for &index in &homes {
            let mut loc = GenLocation::random(&mut rng);
            loc.name = Some(random_name(&mut rng));
            navkit.put_location(&[("UP_HomeLocations", 0), ("UP_HomeLocations_Location", index)], index, &loc);
            names.push(loc.name);
        }
        let last = homes.len() - 1;
        expected.homes = Some(ExpectedHomes {
            current_index: homes[last],
            current_name: names[last].clone(),
            history_indices: homes[..last].to_vec(),
        });

        let (dx, dy) = random_point(&mut rng);
        let minutes: i64 = rng.gen_range(20_000_000..28_000_000);
        navkit.put(&[("LastDockedPositionX", 0)], &dx.to_string());
        navkit.put(&[("LastDockedPositionY", 0)], &dy.to_string());
        navkit.put(&[("LastDockedTime", 0)], &minutes.to_string());
        expected.dock = Some(ExpectedDock {
            lon_e5: dx,
            lat_e5: dy,
            minutes,
            utc: utc(minutes * 60),
        });

        let offset: i64 = rng.gen_range(-50_400..=50_400);
        navkit.put(&[("UserTimeOffset", 0)], &offset.to_string());
        expected.user_time_offset = Some(render_offset(offset));

        let mut terms: Vec<String> = Vec::new();
        for index in sparse_indices(&mut rng, n) {
            let term = format!("{} {}", WORDS.choose(&mut rng).expect("non-empty"), index);
            navkit.put(&[("LocalSearchService", 0), ("LocalSearchService_Term", index)], &term);
            terms.push(term);
        }
        expected.searches = terms;
    }

    let mut files = BTreeMap::new();
    files.insert(format!("{APP_DIR}/files/Favorites.ov2"), ov2);
    files.insert(map_store_path(&model), map.render(&mut rng));
    files.insert(format!("{APP_DIR}/shared_prefs/NavkitSettings.xml"), navkit.render(&mut rng));

    let noise_image = spec.noise_size.map(|size| {
        let planted = spec.planted.unwrap_or(n);
        let (bytes, records) = noise_image(&mut rng, size, planted);
        files.insert(NOISE_FILE.to_owned(), bytes);
        NoiseManifest {
            path: NOISE_FILE.to_owned(),
            size,
            planted: records,
        }
    });

    let manifest = FixtureManifest {
        seed: spec.seed,
        records: n,
        files: files.keys().cloned().collect(),
        expected,
        noise_image,
    };
    Fixture { files, manifest }
}

/// Random bytes with `count` simple POI records at random offsets, one per
/// equal-width slot so they never overlap.
fn noise_image(rng: &mut ChaCha8Rng, size: u64, count: usize) -> (Vec<u8>, Vec<PlantedRecord>) {
    let mut bytes = vec![0u8; size as usize];
    rng.fill(bytes.as_mut_slice());
    let mut planted = Vec::new();
    if count == 0 {
        return (bytes, planted);
    }
    let slot = bytes.len() / count;
    for i in 0..count {
        let (lon, lat) = random_point(rng);
        let name = random_name(rng);
        let rec = encode_simple_poi(lon, lat, &name);
        if rec.len() > slot {
            break;
        }
        let offset = i * slot + rng.gen_range(0..=slot - rec.len());
        bytes[offset..offset + rec.len()].copy_from_slice(&rec);
        planted.push(PlantedRecord {
            offset: offset as u64,
            len: rec.len(),
            name,
            lon_e5: lon,
            lat_e5: lat,
        });
    }
    (bytes, planted)
}

pub fn write_fixture(fixture: &Fixture, out: &Path) -> io::Result<()> {
    for (rel, bytes) in &fixture.files {
        let path = out.join(rel);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        std::fs::write(path, bytes)?;
    }
    std::fs::create_dir_all(out)?;
    let mut json = serde_json::to_string_pretty(&fixture.manifest).map_err(io::Error::other)?;
    json.push('\n');
    std::fs::write(out.join(MANIFEST_FILE), json)
}

pub fn read_manifest(dir: &Path) -> anyhow::Result<FixtureManifest> {
    let text = std::fs::read_to_string(dir.join(MANIFEST_FILE))?;
    Ok(serde_json::from_str(&text)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic() {
        let mut spec = FixtureSpec::new(42);
        spec.noise_size = Some(64 * 1024);
        assert_eq!(generate(spec), generate(spec));
        assert_ne!(generate(spec).files, generate(FixtureSpec { seed: 43, ..spec }).files);
    }

    #[test]
    fn offsets_render() {
        assert_eq!(render_offset(7259), "+02:00:59");
        assert_eq!(render_offset(-3600), "-01:00:00");
    }

    #[test]
    fn poi_bytes() {
        let rec = encode_simple_poi(472002, 5201999, "Ridder Dirkstraat - Sophiastraat, Gouda");
        assert_eq!(rec.len(), 53);
        assert_eq!(&rec[..13], b"\x02\x35\x00\x00\x00\xC2\x33\x07\x00\x4F\x60\x4F\x00");
    }

    #[test]
    fn empty_fixture() {
        let f = generate(FixtureSpec { records: 0, ..FixtureSpec::new(1) });
        assert!(f.files.values().next().unwrap().is_empty());
        assert!(f.manifest.expected.favourites.is_empty());
        let planted = generate(FixtureSpec { noise_size: Some(1 << 20), planted: Some(50), ..FixtureSpec::new(1) });
        assert_eq!(planted.manifest.noise_image.unwrap().planted.len(), 50);
    }
}
