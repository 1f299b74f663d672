use base64::Engine as _;
use tomtom_artifacts::carver::{scan_bytes, HitKind, ScanConfig};
use tomtom_artifacts::detect::{classify_tree, expected_artifacts};
use tomtom_artifacts::geo_time::GeoPoint;
use tomtom_artifacts::ov2::{parse_ov2, serialize_ov2, Ov2File, Ov2Record, ParseOptions, Strictness};
use tomtom_artifacts::records::{assemble_map_settings, Origin};
use tomtom_artifacts::report::{emit_gpx, emit_json, emit_timeline_csv, EvidenceReport};
use tomtom_artifacts::settings_xml::{group_records, parse_store};

fn entry(key: &str, value: &str) -> String {
    let b64 = base64::engine::general_purpose::STANDARD.encode(value);
    format!("    <string name=\"{key}\">{b64}</string>\n")
}

fn address(index: u32, leaf: &str, value: &str) -> String {
    entry(
        &format!("MapSettings*00000*/AddressRecents*00000*/AddressRecents_Address*{index:05}*/{leaf}*{index:05}*"),
        value,
    )
}

fn favourites() -> Ov2File {
    Ov2File::from_records(vec![
        Ov2Record::simple_poi(GeoPoint::new(472_002, 5_201_999).unwrap(), "Gouda station"),
        Ov2Record::simple_poi(GeoPoint::new(-12_345, 5_148_000).unwrap(), "Greenwich"),
    ])
}

#[test]
fn carved_favourites_match_the_parsed_file() {
    let bytes = serialize_ov2(&favourites()).unwrap();
    let mut image = vec![0xA5u8; 300_000];
    let offsets = [4_096usize, 150_001];
    for &o in &offsets {
        image[o..o + bytes.len()].copy_from_slice(&bytes);
    }
    let outcome = scan_bytes(&image, &ScanConfig::with_chunk_size(64 << 10)).unwrap();
    let pois: Vec<u64> = outcome
        .hits
        .iter()
        .filter(|h| h.kind == HitKind::Ov2SimplePoi)
        .map(|h| h.offset)
        .collect();
    let first_len = favourites().records[0].encoded_len() as u64;
    let want: Vec<u64> = offsets
        .iter()
        .flat_map(|&o| [o as u64, o as u64 + first_len])
        .collect();
    assert_eq!(pois, want);

    let parsed = parse_ov2(&bytes, ParseOptions::strict()).unwrap();
    assert_eq!(parsed, favourites());
}

#[test]
fn store_to_report() {
    let mut xml = String::from("<?xml version='1.0' encoding='utf-8' standalone='yes' ?>\n<map>\n");
    xml += &address(4, "Location_UserName", "Markt 1");
    xml += &address(4, "Location_UserPos", "(471050; 5201150)");
    xml += &address(4, "Location_LocType", "LOCTYP_MAPTICK");
    xml += &address(9, "Location_CityName", "Gouda");
    xml += "</map>\n";

    let store = parse_store(&xml, Strictness::Strict).unwrap();
    assert!(store.malformed.is_empty());
    let data = assemble_map_settings(&group_records(&store.entries));
    assert_eq!(data.address_recents.len(), 2);
    let first = &data.address_recents[0];
    assert_eq!(first.origin, Origin::AddressRecents);
    assert_eq!(first.user_name.as_deref(), Some("Markt 1"));
    assert_eq!(first.pos.map(|p| (p.lon.raw(), p.lat.raw())), Some((471_050, 5_201_150)));
    assert!(data.address_recents[1].pos.is_none());

    let paths = ["tomtom/NavkitSettings.xml", "tomtom/Benelux_0A1B2C3D.xml", "tomtom/Favorites.ov2"];
    let source = classify_tree(&paths);
    let checklist = expected_artifacts(&source).ok();
    assert!(checklist.is_some());
    let mut report = EvidenceReport::new(source, checklist);
    report.add_ov2("tomtom/Favorites.ov2", &favourites());
    report.add_map_settings("tomtom/Benelux_0A1B2C3D.xml", data);

    let json = emit_json(&report);
    let v: serde_json::Value = serde_json::from_str(&json).unwrap();
    assert_eq!(v["favourites"].as_array().unwrap().len(), 2);
    assert_eq!(v["source"]["model_id"], "0A1B2C3D");

    let gpx = emit_gpx(&report);
    assert_eq!(gpx.matches("<wpt ").count(), 3);
    assert!(gpx.contains("lat=\"52.01150\" lon=\"4.71050\""));
    assert!(gpx.contains("lon=\"-0.12345\""));
    assert!(emit_timeline_csv(&report).starts_with("timestamp_utc,"));
}
