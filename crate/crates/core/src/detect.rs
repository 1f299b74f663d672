//! Classifies an evidence tree by TomTom generation and builds the analyst
//! checklist of where each artifact class is expected to live.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::OnceLock;

use regex::Regex;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Generation {
    PndFirstSeries,
    PndSecondSeries,
    AndroidApplication,
    Unknown,
}

impl fmt::Display for Generation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Generation::PndFirstSeries => "TomTom PND first series",
            Generation::PndSecondSeries => "TomTom PND second series",
            Generation::AndroidApplication => "TomTom Android Application",
            Generation::Unknown => "Unknown",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FileKind {
    StatdataFolder,
    MapsettingsCfg,
    MapsettingsTlv,
    UserpatchDat,
    SettingsTlv,
    MobilitySim,
    FavoritesOv2,
    NavkitSettingsXml,
    MapStoreXml,
}

impl FileKind {
    fn generations(self) -> &'static [Generation] {
        use Generation::*;
        match self {
            FileKind::StatdataFolder => &[PndFirstSeries, PndSecondSeries],
            FileKind::MapsettingsCfg => &[PndFirstSeries],
            FileKind::MapsettingsTlv
            | FileKind::UserpatchDat
            | FileKind::SettingsTlv
            | FileKind::MobilitySim => &[PndSecondSeries],
            FileKind::FavoritesOv2 => &[PndSecondSeries, AndroidApplication],
            FileKind::NavkitSettingsXml | FileKind::MapStoreXml => &[AndroidApplication],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct Evidence {
    pub kind: FileKind,
    pub path: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SourceClass {
    pub class: Generation,
    pub evidence: Vec<Evidence>,
    pub model_id: Option<String>,
    /// Tied generations when the class is Unknown because of ambiguity.
    pub candidates: Vec<Generation>,
    pub notes: Vec<String>,
}

fn store_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(?i)^([a-z]+)_([0-9a-f]{8})\.xml$").expect("static regex"))
}

fn components(path: &str) -> Vec<&str> {
    path.split(['/', '\\']).filter(|c| !c.is_empty() && *c != ".").collect()
}

fn parent(path: &str) -> String {
    let parts = components(path);
    parts[..parts.len().saturating_sub(1)].join("/")
}

fn under_tomtom(path: &str) -> bool {
    let parts = components(path);
    parts[..parts.len().saturating_sub(1)]
        .iter()
        .any(|c| c.to_ascii_lowercase().contains("tomtom"))
}

/// Returns the statdata folder path when one of the path's directories is it.
fn statdata_dir(path: &str) -> Option<String> {
    let parts = components(path);
    let dirs = &parts[..parts.len().saturating_sub(1)];
    dirs.iter()
        .position(|c| c.eq_ignore_ascii_case("statdata"))
        .map(|i| parts[..=i].join("/"))
        .or_else(|| {
            parts
                .last()
                .filter(|c| c.eq_ignore_ascii_case("statdata"))
                .map(|_| parts.join("/"))
        })
}

fn file_kind(path: &str, navkit_dirs: &BTreeSet<String>) -> Option<(FileKind, Option<String>)> {
    let name = components(path).last()?.to_ascii_lowercase();
    let kind = match name.as_str() {
        "mapsettings.cfg" => FileKind::MapsettingsCfg,
        "mapsettings.tlv" => FileKind::MapsettingsTlv,
        "userpatch.dat" => FileKind::UserpatchDat,
        "settings.tlv" => FileKind::SettingsTlv,
        "mobility.sim" => FileKind::MobilitySim,
        "favorites.ov2" => FileKind::FavoritesOv2,
        "navkitsettings.xml" => FileKind::NavkitSettingsXml,
        _ => {
            let caps = store_regex().captures(&name)?;
            let accepted = &caps[1] == "benelux" || navkit_dirs.contains(&parent(path));
            if !accepted {
                return None;
            }
            return Some((FileKind::MapStoreXml, Some(caps[2].to_ascii_uppercase())));
        }
    };
    Some((kind, None))
}

pub fn classify_tree<S: AsRef<str>>(paths: &[S]) -> SourceClass {
    let mut sorted: Vec<&str> = paths.iter().map(AsRef::as_ref).collect();
    sorted.sort_unstable();
    sorted.dedup();

    let navkit_dirs: BTreeSet<String> = sorted
        .iter()
        .filter(|p| {
            components(p)
                .last()
                .is_some_and(|n| n.eq_ignore_ascii_case("navkitsettings.xml"))
        })
        .map(|p| parent(p))
        .collect();

    let mut evidence = BTreeSet::new();
    let mut model_ids: Vec<(bool, String, String)> = Vec::new();
    for path in &sorted {
        if let Some(dir) = statdata_dir(path) {
            evidence.insert(Evidence {
                kind: FileKind::StatdataFolder,
                path: dir,
            });
        }
        if let Some((kind, model)) = file_kind(path, &navkit_dirs) {
            evidence.insert(Evidence {
                kind,
                path: path.to_string(),
            });
            if let Some(id) = model {
                model_ids.push((!under_tomtom(path), path.to_string(), id));
            }
        }
    }

    let kinds: BTreeSet<FileKind> = evidence.iter().map(|e| e.kind).collect();
    let mut scores: BTreeMap<Generation, usize> = BTreeMap::new();
    for kind in &kinds {
        for g in kind.generations() {
            *scores.entry(*g).or_default() += 1;
        }
    }
    let best = scores.values().copied().max().unwrap_or(0);
    let leaders: Vec<Generation> = scores
        .iter()
        .filter(|(_, &s)| s == best && best > 0)
        .map(|(g, _)| *g)
        .collect();
    let (class, candidates) = match leaders.as_slice() {
        [one] => (*one, Vec::new()),
        [] => (Generation::Unknown, Vec::new()),
        many => (Generation::Unknown, many.to_vec()),
    };

    // Prefer a store under a TomTom folder, then lexical path order.
    model_ids.sort();
    let model_id = model_ids.into_iter().next().map(|(_, _, id)| id);

    let mut notes = Vec::new();
    if kinds.contains(&FileKind::StatdataFolder) {
        notes.push("statdata folder present: triplogs possibly present".to_owned());
    }
    match class {
        Generation::AndroidApplication => notes.push(
            "triplogs are not expected for the Android application (breadcrumb file absent)"
                .to_owned(),
        ),
        Generation::Unknown if !candidates.is_empty() => notes.push(format!(
            "ambiguous evidence: {}",
            candidates
                .iter()
                .map(ToString::to_string)
                .collect::<Vec<_>>()
                .join(" / ")
        )),
        _ => {}
    }

    let mut evidence: Vec<Evidence> = evidence.into_iter().collect();
    evidence.sort_by(|a, b| {
        a.kind
            .cmp(&b.kind)
            .then(under_tomtom(&b.path).cmp(&under_tomtom(&a.path)))
            .then(a.path.cmp(&b.path))
    });
    SourceClass {
        class,
        evidence,
        model_id,
        candidates,
        notes,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ArtifactClass {
    Triplogs,
    HomeLocation,
    Favourites,
    RecentDestinations,
    EnteredLocations,
    Journeys,
    LastDocked,
    BluetoothCoupledDevices,
    SimcardData,
}

impl ArtifactClass {
    pub const ALL: [ArtifactClass; 9] = [
        ArtifactClass::Triplogs,
        ArtifactClass::HomeLocation,
        ArtifactClass::Favourites,
        ArtifactClass::RecentDestinations,
        ArtifactClass::EnteredLocations,
        ArtifactClass::Journeys,
        ArtifactClass::LastDocked,
        ArtifactClass::BluetoothCoupledDevices,
        ArtifactClass::SimcardData,
    ];

    pub fn label(self) -> &'static str {
        match self {
            ArtifactClass::Triplogs => "Triplogs",
            ArtifactClass::HomeLocation => "Home Location",
            ArtifactClass::Favourites => "Favourites",
            ArtifactClass::RecentDestinations => "Recent Destinations",
            ArtifactClass::EnteredLocations => "Entered locations",
            ArtifactClass::Journeys => "Journeys",
            ArtifactClass::LastDocked => "Last docked",
            ArtifactClass::BluetoothCoupledDevices => "Bluetooth coupled devices",
            ArtifactClass::SimcardData => "Simcard data",
        }
    }
}

const HANDLED_BY_OS: &str = "Handled by the Android OS, not by the TomTom Android Application";

/// Table cell for (generation, artifact) and the file kind that satisfies it;
/// `None` means nothing is expected on the device for that row.
fn cell(generation: Generation, artifact: ArtifactClass) -> (&'static str, Option<FileKind>) {
    use ArtifactClass as A;
    use FileKind as F;
    match generation {
        Generation::PndFirstSeries => match artifact {
            A::Triplogs => ("Statdata folder", Some(F::StatdataFolder)),
            A::SimcardData => ("Not applicable for first generation PND", None),
            _ => ("mapsettings.cfg", Some(F::MapsettingsCfg)),
        },
        Generation::PndSecondSeries => match artifact {
            A::Triplogs => ("Statdata folder", Some(F::StatdataFolder)),
            A::HomeLocation => ("userpatch.dat", Some(F::UserpatchDat)),
            A::Favourites => ("Favorites.ov2", Some(F::FavoritesOv2)),
            A::RecentDestinations | A::EnteredLocations | A::Journeys => {
                ("mapsettings.tlv", Some(F::MapsettingsTlv))
            }
            A::LastDocked => ("Userpatch.dat", Some(F::UserpatchDat)),
            A::BluetoothCoupledDevices => ("Settings.tlv", Some(F::SettingsTlv)),
            A::SimcardData => ("mobility.sim", Some(F::MobilitySim)),
        },
        Generation::AndroidApplication | Generation::Unknown => match artifact {
            A::Triplogs => ("Not Found", None),
            A::HomeLocation => ("NavkitSettings.xml", Some(F::NavkitSettingsXml)),
            A::Favourites => ("Favorites.ov2", Some(F::FavoritesOv2)),
            A::RecentDestinations | A::EnteredLocations => {
                ("Benelux_XXXXXXXXX.xml", Some(F::MapStoreXml))
            }
            A::Journeys => (
                "Benelux_XXXXXXXXX.xml with departure time",
                Some(F::MapStoreXml),
            ),
            A::LastDocked => (
                "NavkitSettings.xml, with a time stamp",
                Some(F::NavkitSettingsXml),
            ),
            A::BluetoothCoupledDevices | A::SimcardData => (HANDLED_BY_OS, None),
        },
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RowStatus {
    Found,
    Missing,
    NotExpected,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ChecklistRow {
    pub artifact: ArtifactClass,
    pub expected: &'static str,
    pub status: RowStatus,
    pub found: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DetectError {
    #[error("source could not be classified ({0}); manual review required")]
    ManualReview(String),
}

pub fn expected_artifacts(source: &SourceClass) -> Result<Vec<ChecklistRow>, DetectError> {
    if source.class == Generation::Unknown {
        let detail = if source.candidates.is_empty() {
            "no evidence".to_owned()
        } else {
            format!("{} candidates", source.candidates.len())
        };
        return Err(DetectError::ManualReview(detail));
    }
    Ok(ArtifactClass::ALL
        .iter()
        .map(|&artifact| {
            let (expected, kind) = cell(source.class, artifact);
            let found: Vec<String> = kind
                .map(|k| {
                    source
                        .evidence
                        .iter()
                        .filter(|e| e.kind == k)
                        .map(|e| e.path.clone())
                        .collect()
                })
                .unwrap_or_default();
            let status = match (kind, found.is_empty()) {
                (None, _) => RowStatus::NotExpected,
                (Some(_), false) => RowStatus::Found,
                (Some(_), true) => RowStatus::Missing,
            };
            ChecklistRow {
                artifact,
                expected,
                status,
                found,
            }
        })
        .collect())
}

/// Plain-text table of a checklist.
pub fn render_checklist(source: &SourceClass, rows: &[ChecklistRow]) -> String {
    let mut out = format!("Source: {}\n", source.class);
    if let Some(id) = &source.model_id {
        out.push_str(&format!("Model id: {id}\n"));
    }
    for note in &source.notes {
        out.push_str(&format!("Note: {note}\n"));
    }
    for row in rows {
        let status = match row.status {
            RowStatus::Found => "FOUND",
            RowStatus::Missing => "MISSING",
            RowStatus::NotExpected => "n/a",
        };
        out.push_str(&format!(
            "{:<27} {:<8} {}",
            row.artifact.label(),
            status,
            row.expected
        ));
        if !row.found.is_empty() {
            out.push_str(&format!(" [{}]", row.found.join(", ")));
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn android_example() {
        let s = classify_tree(&["tomtom/Favorites.ov2", "tomtom/NavkitSettings.xml", "tomtom/Benelux_AF7DE92B.xml"]);
        assert_eq!(s.class, Generation::AndroidApplication);
        assert_eq!(s.model_id.as_deref(), Some("AF7DE92B"));
        assert_eq!(s.evidence.len(), 3);
    }

    #[test]
    fn pnd_examples() {
        assert_eq!(classify_tree(&["mapsettings.cfg"]).class, Generation::PndFirstSeries);
        let second = classify_tree(&["Favorites.ov2", "mapsettings.tlv", "userpatch.dat"]);
        assert_eq!(second.class, Generation::PndSecondSeries);
        let empty: [&str; 0] = [];
        let none = classify_tree(&empty);
        assert_eq!(none.class, Generation::Unknown);
        assert!(none.candidates.is_empty());
    }

    #[test]
    fn favourites_alone_is_ambiguous() {
        let s = classify_tree(&["sdcard/Favorites.ov2"]);
        assert_eq!(s.class, Generation::Unknown);
        assert_eq!(s.candidates, vec![Generation::PndSecondSeries, Generation::AndroidApplication]);
        assert!(expected_artifacts(&s).is_err());
    }

    #[test]
    fn regional_store_needs_navkit_sibling() {
        let s = classify_tree(&["a/France_12345678.xml"]);
        assert!(s.evidence.is_empty());
        let s = classify_tree(&["a/France_12345678.xml", "a/NavkitSettings.xml"]);
        assert_eq!(s.model_id.as_deref(), Some("12345678"));
        assert_eq!(s.class, Generation::AndroidApplication);
    }

    #[test]
    fn statdata_note() {
        let s = classify_tree(&["root/statdata/trip1.log", "root/mapsettings.cfg"]);
        assert_eq!(s.class, Generation::PndFirstSeries);
        assert!(s.evidence.contains(&Evidence { kind: FileKind::StatdataFolder, path: "root/statdata".into() }));
        assert!(s.notes[0].contains("triplogs possibly present"));
        let rows = expected_artifacts(&s).unwrap();
        assert_eq!(rows[0].status, RowStatus::Found);
    }

    #[test]
    fn checklists() {
        let android = classify_tree(&["tomtom/Favorites.ov2", "tomtom/NavkitSettings.xml", "tomtom/Benelux_AF7DE92B.xml"]);
        let rows = expected_artifacts(&android).unwrap();
        assert_eq!(rows.len(), 9);
        assert_eq!(rows[0].expected, "Not Found");
        assert_eq!(rows[7].expected, HANDLED_BY_OS);
        assert_eq!(rows[8].expected, HANDLED_BY_OS);
        assert_eq!(rows[7].status, RowStatus::NotExpected);
        assert!(rows[1..7].iter().all(|r| r.status == RowStatus::Found));

        let second = classify_tree(&["Favorites.ov2", "mapsettings.tlv"]);
        let rows = expected_artifacts(&second).unwrap();
        assert_eq!(rows[2].expected, "Favorites.ov2");
        assert_eq!(rows[2].status, RowStatus::Found);
        assert_eq!(rows[1].status, RowStatus::Missing);

        let first = classify_tree(&["mapsettings.cfg"]);
        let rows = expected_artifacts(&first).unwrap();
        assert_eq!(rows[8].expected, "Not applicable for first generation PND");
        let text = render_checklist(&first, &rows);
        assert!(text.contains("Simcard data"));
    }

    proptest! {
        #[test]
        fn permutation_invariant(seed: u64, picks in proptest::collection::vec(0usize..9, 0..9)) {
            use rand::seq::SliceRandom;
            use rand::SeedableRng;
            let pool = ["tomtom/Favorites.ov2", "tomtom/NavkitSettings.xml", "tomtom/Benelux_AF7DE92B.xml",
                "mapsettings.cfg", "x/mapsettings.tlv", "statdata/a", "mobility.sim", "Settings.tlv", "other/Benelux_00000001.xml"];
            let paths: Vec<&str> = picks.iter().map(|&i| pool[i]).collect();
            let mut shuffled = paths.clone();
            shuffled.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            let a = classify_tree(&paths);
            prop_assert_eq!(&a, &classify_tree(&shuffled));
            if a.class != Generation::Unknown {
                prop_assert_eq!(expected_artifacts(&a).unwrap().len(), 9);
            }
        }
    }
}
