//! Typed forensic records assembled from grouped store entries.
//!
//! Key layout understood here (indices shown as `N`, root omitted):
//!
//! ```text
//! MapSettings
//!   EngineRecents/EngineRecents_Recent*N/<location leaves>
//!   AddressRecents/AddressRecents_Address*N/<location leaves>
//!   LastSelectedPoi, LastSelectedPoiData, LastSelectedSearchItem,
//!   RegularRouteLocHome, RegularRouteLocWork      /<location leaves>
//!   RouteStream/{Departure,Destination}/<location leaves>, RouteStream/DepartureTime
//!   LastKnownTrueGpsPosX, LastKnownTrueGpsPosY
//! NavkitSettings
//!   UP_HomeLocations/UP_HomeLocations_Location*N/<location leaves>
//!   TTPlusManager/TTPlusManager_Subscription*N/{Subscription_Service,..StartTime,..EndTime}
//!   TTPlusManager/{Account_Username, Account_Password, ConnectionData_LastValidTime,
//!                  ConnectionData_LastConnectionTime, AccountInfo_DatelastUpdate}
//!   LastDockedPositionX, LastDockedPositionY, LastDockedTime (minutes)
//!   UserTimeOffset, ArrivalTime, LocalSearchService/LocalSearchService_Term*N
//! ```
//!
//! Location leaves are `Location_UserName`, `Location_UserPos` (or split
//! `Location_UserPosX` / `Location_UserPosY`), `Location_LocName`,
//! `Location_LocType`, `Location_CityName` and `HouseNumber_Number`. Any other
//! leaf is preserved verbatim in `extra`.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::caveat::{Caveat, Caveats};
use crate::geo_time::{
    decode_arrival_time, decode_user_time_offset, halve_poi_coordinate, ArrivalDecoding, Axis,
    ClockOffset, CoordinateE5, GeoPoint, TimestampSpec,
};
use crate::settings_xml::{parse_position_raw, FieldValue, RecordGroup};

pub const LEAF_USER_NAME: &str = "Location_UserName";
pub const LEAF_USER_POS: &str = "Location_UserPos";
pub const LEAF_USER_POS_X: &str = "Location_UserPosX";
pub const LEAF_USER_POS_Y: &str = "Location_UserPosY";
pub const LEAF_LOC_NAME: &str = "Location_LocName";
pub const LEAF_LOC_TYPE: &str = "Location_LocType";
pub const LEAF_CITY: &str = "Location_CityName";
pub const LEAF_HOUSE_NUMBER: &str = "HouseNumber_Number";

const LOCATION_LEAVES: [&str; 8] = [
    LEAF_USER_NAME,
    LEAF_USER_POS,
    LEAF_USER_POS_X,
    LEAF_USER_POS_Y,
    LEAF_LOC_NAME,
    LEAF_LOC_TYPE,
    LEAF_CITY,
    LEAF_HOUSE_NUMBER,
];

pub const ROUTE_DEPARTURE: &str = "Departure";
pub const ROUTE_DESTINATION: &str = "Destination";
pub const ROUTE_DEPARTURE_TIME: &str = "DepartureTime";

/// Date-valued Navkit keys that the application never changes.
pub const REMINDER_KEYS: [&str; 5] = [
    "MapUpdateLastReminderDate",
    "LastMapShareConnectionReminder",
    "LMGDisplayDate",
    "LastMapShareSubscriptionReminder",
    "LastTimeTempBTEnabled",
];

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum LocType {
    Maptick,
    Address,
    Home,
    Poi,
    Undefined,
    Favourite,
    Gps,
    Unknown(String),
}

impl LocType {
    pub fn parse(text: &str) -> Self {
        let known = [
            ("LOCTYP_MAPTICK", LocType::Maptick),
            ("LOCTYP_ADDRESS", LocType::Address),
            ("LOCTYP_HOME", LocType::Home),
            ("LOCTYP_POI", LocType::Poi),
            ("LOCTYP_UNDEFINED", LocType::Undefined),
            ("LOCTYP_FAVOURITE", LocType::Favourite),
            ("LOCTYP_GPS", LocType::Gps),
        ];
        let trimmed = text.trim();
        known
            .into_iter()
            .find(|(k, _)| k.eq_ignore_ascii_case(trimmed))
            .map(|(_, v)| v)
            .unwrap_or_else(|| LocType::Unknown(text.to_owned()))
    }

    pub fn label(&self) -> &str {
        match self {
            LocType::Maptick => "LOCTYP_MAPTICK",
            LocType::Address => "LOCTYP_ADDRESS",
            LocType::Home => "LOCTYP_HOME",
            LocType::Poi => "LOCTYP_POI",
            LocType::Undefined => "LOCTYP_undefined",
            LocType::Favourite => "LOCTYP_FAVOURITE",
            LocType::Gps => "LOCTYP_GPS",
            LocType::Unknown(s) => s,
        }
    }
}

impl fmt::Display for LocType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl Serialize for LocType {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.label())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Origin {
    EngineRecents,
    AddressRecents,
    LastSelectedPoi,
    LastSelectedPoiData,
    LastSelectedSearchItem,
    RegularRouteLocHome,
    RegularRouteLocWork,
    HomeLocation,
    RouteStreamEndpoint,
    Ov2Favourite,
}

impl Origin {
    pub fn label(self) -> &'static str {
        match self {
            Origin::EngineRecents => "Recent destination",
            Origin::AddressRecents => "Recent address",
            Origin::LastSelectedPoi => "Last selected POI",
            Origin::LastSelectedPoiData => "Last selected POI data",
            Origin::LastSelectedSearchItem => "Last selected search item",
            Origin::RegularRouteLocHome => "Regular route home",
            Origin::RegularRouteLocWork => "Regular route work",
            Origin::HomeLocation => "Home location",
            Origin::RouteStreamEndpoint => "Route endpoint",
            Origin::Ov2Favourite => "Favourite",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PositionShape {
    Combined,
    SplitXy,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LocationRecord {
    pub origin: Origin,
    pub record_index: u32,
    pub user_name: Option<String>,
    pub pos: Option<GeoPoint>,
    pub position_shape: Option<PositionShape>,
    /// Position text exactly as decoded from the store.
    pub raw_position: Option<String>,
    pub loc_name: Option<String>,
    pub loc_type: LocType,
    pub city: Option<String>,
    pub house_number: Option<String>,
    pub extra: BTreeMap<String, FieldValue>,
    pub source_lines: Vec<usize>,
    pub caveats: Caveats,
}

impl LocationRecord {
    pub fn empty(origin: Origin, record_index: u32) -> Self {
        LocationRecord {
            origin,
            record_index,
            user_name: None,
            pos: None,
            position_shape: None,
            raw_position: None,
            loc_name: None,
            loc_type: LocType::Undefined,
            city: None,
            house_number: None,
            extra: BTreeMap::new(),
            source_lines: Vec::new(),
            caveats: Caveats::new(),
        }
    }

    /// Name used when rendering: user name, then location name, then origin.
    pub fn display_name(&self) -> String {
        self.user_name
            .clone()
            .or_else(|| self.loc_name.clone())
            .unwrap_or_else(|| self.origin.label().to_owned())
    }

    /// Leaf names mapped into typed fields.
    pub fn typed_leaves(&self, available: &BTreeMap<String, FieldValue>) -> Vec<String> {
        LOCATION_LEAVES
            .iter()
            .filter(|l| available.contains_key(**l))
            .map(|l| l.to_string())
            .collect()
    }
}

fn parse_int(text: &str) -> Option<i64> {
    text.trim().parse().ok()
}

fn location_from_fields(
    fields: &BTreeMap<String, FieldValue>,
    origin: Origin,
    record_index: u32,
    halve: bool,
) -> LocationRecord {
    let mut rec = LocationRecord::empty(origin, record_index);
    let text = |leaf: &str| fields.get(leaf).map(FieldValue::text);
    rec.user_name = text(LEAF_USER_NAME);
    rec.loc_name = text(LEAF_LOC_NAME);
    rec.city = text(LEAF_CITY);
    rec.house_number = text(LEAF_HOUSE_NUMBER);
    if let Some(t) = text(LEAF_LOC_TYPE) {
        rec.loc_type = LocType::parse(&t);
    }

    let apply = |x: i64, y: i64, rec: &mut LocationRecord| {
        let (x, y) = if halve {
            match (i32::try_from(x), i32::try_from(y)) {
                (Ok(x), Ok(y)) => {
                    let (hx, hy) = (halve_poi_coordinate(x), halve_poi_coordinate(y));
                    rec.caveats.extend(hx.caveat());
                    rec.caveats.extend(hy.caveat());
                    (i64::from(hx.value), i64::from(hy.value))
                }
                _ => (i64::MAX, i64::MAX),
            }
        } else {
            (x, y)
        };
        match GeoPoint::from_i64(x, y) {
            Ok(p) => rec.pos = Some(p),
            Err(_) => {
                rec.caveats.insert(Caveat::PositionUnparseable);
            }
        }
    };

    if let Some(raw) = text(LEAF_USER_POS) {
        rec.position_shape = Some(PositionShape::Combined);
        match parse_position_raw(&raw) {
            Ok((x, y)) => apply(x, y, &mut rec),
            Err(_) => {
                rec.caveats.insert(Caveat::PositionUnparseable);
            }
        }
        rec.raw_position = Some(raw);
    } else {
        let x = text(LEAF_USER_POS_X);
        let y = text(LEAF_USER_POS_Y);
        if x.is_some() || y.is_some() {
            rec.position_shape = Some(PositionShape::SplitXy);
            rec.raw_position = Some(format!(
                "({}; {})",
                x.as_deref().unwrap_or(""),
                y.as_deref().unwrap_or("")
            ));
            match (x.as_deref().map(parse_int), y.as_deref().map(parse_int)) {
                (Some(Some(x)), Some(Some(y))) => apply(x, y, &mut rec),
                (Some(_), None) | (None, Some(_)) => {
                    rec.caveats.insert(Caveat::PartialPosition);
                }
                _ => {
                    rec.caveats.insert(Caveat::PositionUnparseable);
                }
            }
        }
    }

    if rec.loc_type == LocType::Gps {
        rec.caveats.insert(Caveat::VisitedAtSomePoint);
    }
    if matches!(
        origin,
        Origin::RegularRouteLocHome | Origin::RegularRouteLocWork
    ) {
        rec.caveats.insert(Caveat::Experimental);
    }
    rec.extra = fields
        .iter()
        .filter(|(k, _)| !LOCATION_LEAVES.contains(&k.as_str()))
        .map(|(k, v)| (k.clone(), v.clone()))
        .collect();
    if fields.values().any(FieldValue::is_multi) {
        rec.caveats.insert(Caveat::DuplicateLeaf);
    }
    rec
}

pub fn assemble_location(group: &RecordGroup, origin: Origin) -> LocationRecord {
    let halve = origin == Origin::LastSelectedPoiData;
    let mut rec = location_from_fields(&group.fields, origin, group.record_index, halve);
    rec.source_lines = group.source_lines.clone();
    rec.caveats.extend(group.caveats.iter().copied());
    rec
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("no home location stored")]
pub struct NoHome;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct HomeSelection {
    pub current: (u32, LocationRecord),
    pub history: Vec<(u32, LocationRecord)>,
}

/// The home with the highest index is current. Equal indices are broken by
/// later file position and flagged.
pub fn select_home_location(
    mut homes: Vec<(u32, LocationRecord)>,
) -> Result<HomeSelection, NoHome> {
    homes.sort_by(|(ia, a), (ib, b)| {
        ia.cmp(ib)
            .then_with(|| a.source_lines.last().cmp(&b.source_lines.last()))
    });
    let (index, mut current) = homes.pop().ok_or(NoHome)?;
    if homes.last().is_some_and(|(i, _)| *i == index) {
        current.caveats.insert(Caveat::DuplicateHomeIndex);
    }
    Ok(HomeSelection {
        current: (index, current),
        history: homes,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RouteStreamRecord {
    pub record_index: u32,
    pub departure: Option<LocationRecord>,
    pub destination: Option<LocationRecord>,
    /// Always device clock based.
    pub departure_time: Option<TimestampSpec>,
    pub raw_departure_time: Option<String>,
    pub extra: BTreeMap<String, FieldValue>,
    pub source_lines: Vec<usize>,
    pub caveats: Caveats,
}

fn sub_fields(group: &RecordGroup, prefix: &str) -> BTreeMap<String, FieldValue> {
    let prefix = format!("{prefix}/");
    group
        .fields
        .iter()
        .filter_map(|(k, v)| k.strip_prefix(&prefix).map(|leaf| (leaf.to_owned(), v.clone())))
        .collect()
}

pub fn assemble_route_stream(group: &RecordGroup) -> RouteStreamRecord {
    let endpoint = |prefix: &str| {
        let fields = sub_fields(group, prefix);
        (!fields.is_empty()).then(|| {
            let mut rec = location_from_fields(
                &fields,
                Origin::RouteStreamEndpoint,
                group.record_index,
                false,
            );
            rec.source_lines = group.source_lines.clone();
            rec
        })
    };
    let departure = endpoint(ROUTE_DEPARTURE);
    let destination = endpoint(ROUTE_DESTINATION);
    let mut caveats = group.caveats.clone();
    caveats.insert(Caveat::DeviceClock);

    let raw_departure_time = group.text(ROUTE_DEPARTURE_TIME);
    let departure_time = match raw_departure_time.as_deref().map(parse_int) {
        Some(Some(v)) => Some(TimestampSpec::device_seconds(v)),
        Some(None) => {
            caveats.insert(Caveat::ValueUnparseable);
            None
        }
        None => None,
    };
    if departure_time.is_none() {
        caveats.insert(Caveat::NoDepartureTime);
    }
    match &departure {
        Some(d) if d.loc_type == LocType::Gps => {
            caveats.insert(Caveat::MayBeLastKnownPosition);
        }
        Some(_) => {}
        None => {
            caveats.insert(Caveat::MissingDeparture);
        }
    }
    if destination.is_none() {
        caveats.insert(Caveat::MissingDestination);
    }
    let extra = group
        .fields
        .iter()
        .filter(|(k, _)| {
            *k != ROUTE_DEPARTURE_TIME
                && !k.starts_with(&format!("{ROUTE_DEPARTURE}/"))
                && !k.starts_with(&format!("{ROUTE_DESTINATION}/"))
        })
        .map(|(k, v)| (k.clone(), v.clone()))
        .collect();
    RouteStreamRecord {
        record_index: group.record_index,
        departure,
        destination,
        departure_time,
        raw_departure_time,
        extra,
        source_lines: group.source_lines.clone(),
        caveats,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("no last known GPS position stored")]
pub struct NotPresent;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LastKnownGps {
    pub lon: Option<CoordinateE5>,
    pub lat: Option<CoordinateE5>,
    pub raw_x: Option<String>,
    pub raw_y: Option<String>,
    pub source_lines: Vec<usize>,
    pub caveats: Caveats,
}

impl LastKnownGps {
    pub fn point(&self) -> Option<GeoPoint> {
        Some(GeoPoint {
            lon: self.lon?,
            lat: self.lat?,
        })
    }
}

fn axis_value(group: Option<&RecordGroup>, axis: Axis, caveats: &mut Caveats) -> (Option<CoordinateE5>, Option<String>) {
    let Some(raw) = group.and_then(RecordGroup::scalar_text) else {
        return (None, None);
    };
    let value = parse_int(&raw).and_then(|v| CoordinateE5::from_i64(v, axis).ok());
    if value.is_none() {
        caveats.insert(Caveat::ValueUnparseable);
    }
    (value, Some(raw))
}

pub fn assemble_last_known_gps(
    x_group: Option<&RecordGroup>,
    y_group: Option<&RecordGroup>,
) -> Result<LastKnownGps, NotPresent> {
    if x_group.is_none() && y_group.is_none() {
        return Err(NotPresent);
    }
    let mut caveats = Caveats::from([Caveat::NoGpsTimeStored]);
    let (lon, raw_x) = axis_value(x_group, Axis::Lon, &mut caveats);
    let (lat, raw_y) = axis_value(y_group, Axis::Lat, &mut caveats);
    if x_group.is_none() || y_group.is_none() {
        caveats.insert(Caveat::PartialPosition);
    }
    let mut source_lines: Vec<usize> = x_group
        .into_iter()
        .chain(y_group)
        .flat_map(|g| g.source_lines.iter().copied())
        .collect();
    source_lines.sort_unstable();
    Ok(LastKnownGps {
        lon,
        lat,
        raw_x,
        raw_y,
        source_lines,
        caveats,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SubscriptionRecord {
    pub record_index: u32,
    pub service: Option<String>,
    pub start: Option<TimestampSpec>,
    pub end: Option<TimestampSpec>,
    pub username: Option<String>,
    pub password: Option<String>,
    pub last_valid: Option<TimestampSpec>,
    pub last_connection: Option<TimestampSpec>,
    pub account_date_last_update: Option<TimestampSpec>,
    pub extra: BTreeMap<String, FieldValue>,
    pub source_lines: Vec<usize>,
    pub caveats: Caveats,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DockEvent {
    pub pos: Option<GeoPoint>,
    pub raw_x: Option<String>,
    pub raw_y: Option<String>,
    /// Stored in minutes.
    pub time: Option<TimestampSpec>,
    pub raw_time: Option<String>,
    pub source_lines: Vec<usize>,
    pub caveats: Caveats,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct SearchHistory {
    terms: Vec<String>,
}

impl SearchHistory {
    /// Keeps the first occurrence of each term.
    pub fn from_terms<I: IntoIterator<Item = String>>(terms: I) -> Self {
        let mut out = SearchHistory::default();
        for t in terms {
            if !out.terms.contains(&t) {
                out.terms.push(t);
            }
        }
        out
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ScalarValue {
    pub raw: String,
    pub source_lines: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct UserTimeOffset {
    pub raw: String,
    pub offset: Option<ClockOffset>,
    pub rendered: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct NavkitData {
    pub homes: Option<HomeSelection>,
    pub subscriptions: Vec<SubscriptionRecord>,
    pub dock: Option<DockEvent>,
    pub user_time_offset: Option<UserTimeOffset>,
    pub arrival_time: Option<ArrivalDecoding>,
    pub search_history: SearchHistory,
    pub reminder_dates: BTreeMap<String, ScalarValue>,
    pub unmapped: Vec<RecordGroup>,
    pub caveats: Caveats,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct MapSettingsData {
    pub engine_recents: Vec<LocationRecord>,
    pub address_recents: Vec<LocationRecord>,
    pub last_selected_poi: Option<LocationRecord>,
    pub last_selected_poi_data: Option<LocationRecord>,
    pub last_selected_search_item: Option<LocationRecord>,
    pub regular_route_home: Option<LocationRecord>,
    pub regular_route_work: Option<LocationRecord>,
    pub route: Option<RouteStreamRecord>,
    pub last_known_gps: Option<LastKnownGps>,
    pub unmapped: Vec<RecordGroup>,
}

impl MapSettingsData {
    /// Every location record, in a fixed order.
    pub fn locations(&self) -> impl Iterator<Item = &LocationRecord> {
        self.engine_recents
            .iter()
            .chain(&self.address_recents)
            .chain(&self.last_selected_poi)
            .chain(&self.last_selected_poi_data)
            .chain(&self.last_selected_search_item)
            .chain(&self.regular_route_home)
            .chain(&self.regular_route_work)
    }
}

pub fn assemble_map_settings(groups: &[RecordGroup]) -> MapSettingsData {
    let mut data = MapSettingsData::default();
    let mut gps_x = None;
    let mut gps_y = None;
    for group in groups {
        match group.collection.as_str() {
            "EngineRecents_Recent" => data
                .engine_recents
                .push(assemble_location(group, Origin::EngineRecents)),
            "AddressRecents_Address" => data
                .address_recents
                .push(assemble_location(group, Origin::AddressRecents)),
            "LastSelectedPoi" => {
                data.last_selected_poi = Some(assemble_location(group, Origin::LastSelectedPoi))
            }
            "LastSelectedPoiData" => {
                data.last_selected_poi_data =
                    Some(assemble_location(group, Origin::LastSelectedPoiData))
            }
            "LastSelectedSearchItem" => {
                data.last_selected_search_item =
                    Some(assemble_location(group, Origin::LastSelectedSearchItem))
            }
            "RegularRouteLocHome" => {
                data.regular_route_home =
                    Some(assemble_location(group, Origin::RegularRouteLocHome))
            }
            "RegularRouteLocWork" => {
                data.regular_route_work =
                    Some(assemble_location(group, Origin::RegularRouteLocWork))
            }
            "RouteStream" => data.route = Some(assemble_route_stream(group)),
            "LastKnownTrueGpsPosX" => gps_x = Some(group),
            "LastKnownTrueGpsPosY" => gps_y = Some(group),
            _ => data.unmapped.push(group.clone()),
        }
    }
    data.last_known_gps = assemble_last_known_gps(gps_x, gps_y).ok();
    data
}

fn account_slot(leaf: &str) -> Option<&'static str> {
    let l = leaf.to_ascii_lowercase();
    if l.contains("password") {
        Some("password")
    } else if l.contains("user") {
        Some("username")
    } else if l.contains("lastvalidtime") {
        Some("last_valid")
    } else if l.contains("lastconnectiontime") {
        Some("last_connection")
    } else if l.contains("datelastupdate") {
        Some("account_date_last_update")
    } else {
        None
    }
}

fn subscription_slot(leaf: &str) -> Option<&'static str> {
    let l = leaf.to_ascii_lowercase();
    if l.contains("start") {
        Some("start")
    } else if l.contains("end") || l.contains("expir") {
        Some("end")
    } else if l.contains("service") || l.contains("name") {
        Some("service")
    } else {
        None
    }
}

#[derive(Default)]
struct Account {
    username: Option<String>,
    password: Option<String>,
    last_valid: Option<TimestampSpec>,
    last_connection: Option<TimestampSpec>,
    account_date_last_update: Option<TimestampSpec>,
    extra: BTreeMap<String, FieldValue>,
    source_lines: Vec<usize>,
    caveats: Caveats,
}

fn time_field(
    value: &FieldValue,
    make: fn(i64) -> TimestampSpec,
    caveats: &mut Caveats,
) -> Option<TimestampSpec> {
    let parsed = parse_int(&value.text()).map(make);
    if parsed.is_none() {
        caveats.insert(Caveat::ValueUnparseable);
    }
    parsed
}

fn assemble_account(group: &RecordGroup) -> Account {
    let mut acc = Account {
        source_lines: group.source_lines.clone(),
        caveats: group.caveats.clone(),
        ..Account::default()
    };
    for (leaf, value) in &group.fields {
        let skewed = TimestampSpec::skewed_server_seconds;
        match account_slot(leaf) {
            Some("username") => acc.username = Some(value.text()),
            Some("password") => acc.password = Some(value.text()),
            Some("last_valid") => acc.last_valid = time_field(value, skewed, &mut acc.caveats),
            Some("last_connection") => {
                acc.last_connection = time_field(value, skewed, &mut acc.caveats)
            }
            Some(_) => {
                acc.account_date_last_update = time_field(value, skewed, &mut acc.caveats)
            }
            None => {
                acc.extra.insert(leaf.clone(), value.clone());
            }
        }
    }
    if [&acc.last_valid, &acc.last_connection, &acc.account_date_last_update]
        .iter()
        .any(|t| t.is_some())
    {
        acc.caveats.insert(Caveat::ServerTimeAnomaly);
    }
    acc
}

fn assemble_subscription(group: Option<&RecordGroup>, account: &Account) -> SubscriptionRecord {
    let mut rec = SubscriptionRecord {
        record_index: group.map_or(0, |g| g.record_index),
        service: None,
        start: None,
        end: None,
        username: account.username.clone(),
        password: account.password.clone(),
        last_valid: account.last_valid,
        last_connection: account.last_connection,
        account_date_last_update: account.account_date_last_update,
        extra: BTreeMap::new(),
        source_lines: account.source_lines.clone(),
        caveats: account.caveats.clone(),
    };
    if let Some(group) = group {
        rec.caveats.extend(group.caveats.iter().copied());
        rec.source_lines.extend(group.source_lines.iter().copied());
        rec.source_lines.sort_unstable();
        for (leaf, value) in &group.fields {
            let unknown = TimestampSpec::unknown_seconds;
            match subscription_slot(leaf) {
                Some("start") => rec.start = time_field(value, unknown, &mut rec.caveats),
                Some("end") => rec.end = time_field(value, unknown, &mut rec.caveats),
                Some(_) => rec.service = Some(value.text()),
                None => {
                    rec.extra.insert(leaf.clone(), value.clone());
                }
            }
        }
    }
    rec.extra
        .extend(account.extra.iter().map(|(k, v)| (k.clone(), v.clone())));
    rec
}

pub fn assemble_navkit(groups: &[RecordGroup]) -> NavkitData {
    let mut data = NavkitData::default();
    let mut homes = Vec::new();
    let mut subscription_groups = Vec::new();
    let mut account_group = None;
    let mut dock_x = None;
    let mut dock_y = None;
    let mut dock_time = None;
    let mut search: Vec<&RecordGroup> = Vec::new();

    for group in groups {
        let name = group.collection.as_str();
        match name {
            "UP_HomeLocations_Location" => homes.push((
                group.record_index,
                assemble_location(group, Origin::HomeLocation),
            )),
            "TTPlusManager_Subscription" => subscription_groups.push(group),
            "TTPlusManager" => account_group = Some(group),
            "LastDockedPositionX" => dock_x = Some(group),
            "LastDockedPositionY" => dock_y = Some(group),
            "LastDockedTime" => dock_time = Some(group),
            "UserTimeOffset" => {
                let raw = group.scalar_text().unwrap_or_default();
                let offset = parse_int(&raw).and_then(|v| decode_user_time_offset(v).ok());
                if offset.is_none() {
                    data.caveats.insert(Caveat::ValueUnparseable);
                }
                data.user_time_offset = Some(UserTimeOffset {
                    rendered: offset.map(ClockOffset::render),
                    offset,
                    raw,
                });
            }
            "ArrivalTime" => match group.scalar_text().as_deref().and_then(parse_int) {
                Some(v) => data.arrival_time = Some(decode_arrival_time(v)),
                None => {
                    data.caveats.insert(Caveat::ValueUnparseable);
                    data.unmapped.push(group.clone());
                }
            },
            n if n.starts_with("LocalSearchService_") => search.push(group),
            n if REMINDER_KEYS.contains(&n) => {
                data.reminder_dates.insert(
                    n.to_owned(),
                    ScalarValue {
                        raw: group.scalar_text().unwrap_or_default(),
                        source_lines: group.source_lines.clone(),
                    },
                );
            }
            _ => data.unmapped.push(group.clone()),
        }
    }

    data.homes = select_home_location(homes).ok();

    let account = account_group.map(assemble_account).unwrap_or_default();
    if subscription_groups.is_empty() {
        if account_group.is_some() {
            data.subscriptions.push(assemble_subscription(None, &account));
        }
    } else {
        subscription_groups.sort_by_key(|g| g.record_index);
        data.subscriptions = subscription_groups
            .into_iter()
            .map(|g| assemble_subscription(Some(g), &account))
            .collect();
    }

    if dock_x.is_some() || dock_y.is_some() || dock_time.is_some() {
        let mut caveats = Caveats::new();
        let (lon, raw_x) = axis_value(dock_x, Axis::Lon, &mut caveats);
        let (lat, raw_y) = axis_value(dock_y, Axis::Lat, &mut caveats);
        if lon.is_some() != lat.is_some() {
            caveats.insert(Caveat::PartialPosition);
        }
        let raw_time = dock_time.and_then(RecordGroup::scalar_text);
        let time = raw_time.as_deref().and_then(|t| {
            let v = parse_int(t).map(TimestampSpec::device_minutes);
            if v.is_none() {
                caveats.insert(Caveat::ValueUnparseable);
            }
            v
        });
        if time.is_some() {
            caveats.insert(Caveat::DeviceClock);
        }
        let mut source_lines: Vec<usize> = [dock_x, dock_y, dock_time]
            .into_iter()
            .flatten()
            .flat_map(|g| g.source_lines.iter().copied())
            .collect();
        source_lines.sort_unstable();
        data.dock = Some(DockEvent {
            pos: lon.zip(lat).map(|(lon, lat)| GeoPoint { lon, lat }),
            raw_x,
            raw_y,
            time,
            raw_time,
            source_lines,
            caveats,
        });
    }

    search.sort_by_key(|g| (g.record_index, g.last_line()));
    data.search_history = SearchHistory::from_terms(
        search
            .into_iter()
            .flat_map(|g| g.fields.values().next().map(FieldValue::text)),
    );
    data
}
