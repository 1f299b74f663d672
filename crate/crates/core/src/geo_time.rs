//! Coordinate and timestamp primitives.
//!
//! Coordinates are stored on disk as signed 32-bit integers in degrees × 10^5.
//! Times come in several flavours: seconds since the Unix epoch (assumed, never
//! stated by the format), minutes for the docking time, and a server-side
//! family that is consistently skewed by one month and one day.

use std::fmt;

use chrono::{DateTime, Days, Months, SecondsFormat, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::caveat::{Caveat, Caveats};

pub const E5_SCALE: i32 = 100_000;
pub const LON_LIMIT: i32 = 18_000_000;
pub const LAT_LIMIT: i32 = 9_000_000;
/// ±14 h, the widest civil UTC offset.
pub const MAX_CLOCK_OFFSET: i64 = 50_400;
/// Stored arrival time when none was ever set: 24 h + 1 s.
pub const ARRIVAL_UNSET_SENTINEL: i64 = 86_401;
pub const SECONDS_PER_DAY: i64 = 86_400;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GeoError {
    #[error("{axis} value {value} outside [-{limit}, {limit}]")]
    CoordinateRange { axis: Axis, value: i64, limit: i32 },
    #[error("clock offset {0} s exceeds ±{MAX_CLOCK_OFFSET} s")]
    ClockOffsetRange(i64),
    #[error("timestamp {raw} ({unit:?}) overflows normalization")]
    TimestampOverflow { raw: i64, unit: TimeUnit },
    #[error("anomaly flag requires server clock basis, got {0:?}")]
    AnomalyWithoutServerClock(TimeBasis),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    Lon,
    Lat,
}

impl Axis {
    pub fn limit(self) -> i32 {
        match self {
            Axis::Lon => LON_LIMIT,
            Axis::Lat => LAT_LIMIT,
        }
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Axis::Lon => "longitude",
            Axis::Lat => "latitude",
        })
    }
}

/// Fixed-point coordinate in degrees × 10^5.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CoordinateE5(i32);

impl CoordinateE5 {
    pub fn new(value: i32, axis: Axis) -> Result<Self, GeoError> {
        check_range(i64::from(value), axis)?;
        Ok(CoordinateE5(value))
    }

    /// Accepts a wide value (e.g. parsed text) and range-checks it.
    pub fn from_i64(value: i64, axis: Axis) -> Result<Self, GeoError> {
        check_range(value, axis)?;
        Ok(CoordinateE5(value as i32))
    }

    pub fn raw(self) -> i32 {
        self.0
    }

    pub fn degrees(self) -> DecimalDegrees {
        DecimalDegrees(self.0)
    }
}

fn check_range(value: i64, axis: Axis) -> Result<(), GeoError> {
    let limit = axis.limit();
    if value < -i64::from(limit) || value > i64::from(limit) {
        return Err(GeoError::CoordinateRange { axis, value, limit });
    }
    Ok(())
}

/// Decimal degrees held exactly as the underlying × 10^5 integer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct DecimalDegrees(i32);

impl DecimalDegrees {
    pub fn e5(self) -> i32 {
        self.0
    }

    pub fn as_f64(self) -> f64 {
        f64::from(self.0) / f64::from(E5_SCALE)
    }
}

impl fmt::Display for DecimalDegrees {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let v = i64::from(self.0);
        let sign = if v < 0 { "-" } else { "" };
        let abs = v.abs();
        let scale = i64::from(E5_SCALE);
        write!(f, "{sign}{}.{:05}", abs / scale, abs % scale)
    }
}

impl Serialize for DecimalDegrees {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(self.as_f64())
    }
}

pub fn decode_coordinate(value: i32, axis: Axis) -> Result<DecimalDegrees, GeoError> {
    CoordinateE5::new(value, axis).map(CoordinateE5::degrees)
}

/// Parses a rendered `[-]D.DDDDD` string back to the × 10^5 integer.
pub fn parse_degrees(text: &str) -> Option<i32> {
    let (negative, body) = match text.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, text),
    };
    let (int, frac) = body.split_once('.')?;
    if int.is_empty() || frac.len() != 5 {
        return None;
    }
    if !int.bytes().chain(frac.bytes()).all(|b| b.is_ascii_digit()) {
        return None;
    }
    let magnitude = int.parse::<i64>().ok()? * i64::from(E5_SCALE) + frac.parse::<i64>().ok()?;
    let value = if negative { -magnitude } else { magnitude };
    i32::try_from(value).ok()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct GeoPoint {
    pub lon: CoordinateE5,
    pub lat: CoordinateE5,
}

impl GeoPoint {
    pub fn new(lon: i32, lat: i32) -> Result<Self, GeoError> {
        Ok(GeoPoint {
            lon: CoordinateE5::new(lon, Axis::Lon)?,
            lat: CoordinateE5::new(lat, Axis::Lat)?,
        })
    }

    pub fn from_i64(lon: i64, lat: i64) -> Result<Self, GeoError> {
        Ok(GeoPoint {
            lon: CoordinateE5::from_i64(lon, Axis::Lon)?,
            lat: CoordinateE5::from_i64(lat, Axis::Lat)?,
        })
    }
}

/// Serialized as decimal degrees next to the stored integers.
impl Serialize for GeoPoint {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = s.serialize_struct("GeoPoint", 4)?;
        st.serialize_field("lat", &self.lat.degrees())?;
        st.serialize_field("lon", &self.lon.degrees())?;
        st.serialize_field("lat_e5", &self.lat.raw())?;
        st.serialize_field("lon_e5", &self.lon.raw())?;
        st.end()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Halved {
    pub value: i32,
    pub precision_loss: bool,
}

impl Halved {
    pub fn caveat(self) -> Option<Caveat> {
        self.precision_loss.then_some(Caveat::HalvingPrecisionLoss)
    }
}

/// Coordinates under the last-selected-POI data key are stored doubled.
/// Odd inputs are floor-divided and flagged.
pub fn halve_poi_coordinate(raw: i32) -> Halved {
    Halved {
        value: raw.div_euclid(2),
        precision_loss: raw.rem_euclid(2) != 0,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimeUnit {
    Seconds,
    Minutes,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimeBasis {
    DeviceClock,
    ServerClock,
    Unknown,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TimestampSpec {
    pub raw: i64,
    pub unit: TimeUnit,
    pub basis: TimeBasis,
    pub anomaly_flag: bool,
}

impl TimestampSpec {
    pub fn new(
        raw: i64,
        unit: TimeUnit,
        basis: TimeBasis,
        anomaly_flag: bool,
    ) -> Result<Self, GeoError> {
        if anomaly_flag && basis != TimeBasis::ServerClock {
            return Err(GeoError::AnomalyWithoutServerClock(basis));
        }
        Ok(TimestampSpec {
            raw,
            unit,
            basis,
            anomaly_flag,
        })
    }

    pub fn device_seconds(raw: i64) -> Self {
        TimestampSpec {
            raw,
            unit: TimeUnit::Seconds,
            basis: TimeBasis::DeviceClock,
            anomaly_flag: false,
        }
    }

    pub fn device_minutes(raw: i64) -> Self {
        TimestampSpec {
            raw,
            unit: TimeUnit::Minutes,
            basis: TimeBasis::DeviceClock,
            anomaly_flag: false,
        }
    }

    /// A server-family time carrying the month-and-a-day skew.
    pub fn skewed_server_seconds(raw: i64) -> Self {
        TimestampSpec {
            raw,
            unit: TimeUnit::Seconds,
            basis: TimeBasis::ServerClock,
            anomaly_flag: true,
        }
    }

    pub fn unknown_seconds(raw: i64) -> Self {
        TimestampSpec {
            raw,
            unit: TimeUnit::Seconds,
            basis: TimeBasis::Unknown,
            anomaly_flag: false,
        }
    }
}

/// Provenance tag carried by every absolute time: the epoch is never stated
/// by the stores, Unix epoch UTC is assumed.
pub const EPOCH_TAG: &str = "unix-assumed";

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct NormalizedTime {
    pub seconds: i64,
    /// Anomaly-adjusted candidate (one month then one day earlier).
    pub alternative: Option<i64>,
    pub epoch: &'static str,
    pub caveats: Caveats,
}

impl NormalizedTime {
    pub fn utc(&self) -> Option<String> {
        render_utc(self.seconds)
    }

    pub fn alternative_utc(&self) -> Option<String> {
        self.alternative.and_then(render_utc)
    }
}

#[derive(Serialize)]
struct NormalizedView<'a> {
    seconds: i64,
    utc: Option<String>,
    alternative_seconds: Option<i64>,
    alternative_utc: Option<String>,
    epoch: &'static str,
    caveats: &'a Caveats,
}

/// Serialized with the stored fields plus the normalized interpretation
/// (null when normalization overflows).
impl Serialize for TimestampSpec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let norm = normalize_timestamp(self).ok();
        let view = norm.as_ref().map(|n| NormalizedView {
            seconds: n.seconds,
            utc: n.utc(),
            alternative_seconds: n.alternative,
            alternative_utc: n.alternative_utc(),
            epoch: n.epoch,
            caveats: &n.caveats,
        });
        let mut st = s.serialize_struct("TimestampSpec", 5)?;
        st.serialize_field("raw", &self.raw)?;
        st.serialize_field("unit", &self.unit)?;
        st.serialize_field("basis", &self.basis)?;
        st.serialize_field("anomaly_flag", &self.anomaly_flag)?;
        st.serialize_field("normalized", &view)?;
        st.end()
    }
}

pub fn render_utc(seconds: i64) -> Option<String> {
    DateTime::<Utc>::from_timestamp(seconds, 0)
        .map(|t| t.to_rfc3339_opts(SecondsFormat::Secs, true))
}

/// Calendar subtraction of one month followed by one day. Day-of-month is
/// clamped to the end of the shorter month.
pub fn subtract_month_and_day(seconds: i64) -> Option<i64> {
    DateTime::<Utc>::from_timestamp(seconds, 0)?
        .checked_sub_months(Months::new(1))?
        .checked_sub_days(Days::new(1))
        .map(|t| t.timestamp())
}

pub fn normalize_timestamp(spec: &TimestampSpec) -> Result<NormalizedTime, GeoError> {
    if spec.anomaly_flag && spec.basis != TimeBasis::ServerClock {
        return Err(GeoError::AnomalyWithoutServerClock(spec.basis));
    }
    let overflow = || GeoError::TimestampOverflow {
        raw: spec.raw,
        unit: spec.unit,
    };
    let seconds = match spec.unit {
        TimeUnit::Seconds => spec.raw,
        TimeUnit::Minutes => spec.raw.checked_mul(60).ok_or_else(overflow)?,
    };
    let mut caveats = Caveats::new();
    match spec.basis {
        TimeBasis::DeviceClock => {
            caveats.insert(Caveat::DeviceClock);
        }
        TimeBasis::Unknown => {
            caveats.insert(Caveat::UnknownTimeBasis);
        }
        TimeBasis::ServerClock => {}
    }
    let alternative = if spec.anomaly_flag {
        caveats.insert(Caveat::ServerTimeAnomaly);
        Some(subtract_month_and_day(seconds).ok_or_else(overflow)?)
    } else {
        None
    };
    Ok(NormalizedTime {
        seconds,
        alternative,
        epoch: EPOCH_TAG,
        caveats,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ClockOffset {
    seconds: i32,
}

impl ClockOffset {
    pub fn seconds(self) -> i32 {
        self.seconds
    }

    /// `±HH:MM:SS`
    pub fn render(self) -> String {
        let sign = if self.seconds < 0 { '-' } else { '+' };
        let abs = self.seconds.unsigned_abs();
        format!(
            "{sign}{:02}:{:02}:{:02}",
            abs / 3600,
            (abs % 3600) / 60,
            abs % 60
        )
    }
}

impl fmt::Display for ClockOffset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

pub fn decode_user_time_offset(value: i64) -> Result<ClockOffset, GeoError> {
    if value.abs() > MAX_CLOCK_OFFSET {
        return Err(GeoError::ClockOffsetRange(value));
    }
    Ok(ClockOffset {
        seconds: value as i32,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case", tag = "state", content = "seconds")]
pub enum ArrivalTime {
    Unset,
    SecondsOfDay(u32),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ArrivalDecoding {
    pub raw: i64,
    pub time: ArrivalTime,
    pub caveat: Option<Caveat>,
}

pub fn decode_arrival_time(value: i64) -> ArrivalDecoding {
    let (time, caveat) = match value {
        ARRIVAL_UNSET_SENTINEL => (ArrivalTime::Unset, None),
        0..=SECONDS_PER_DAY => (ArrivalTime::SecondsOfDay(value as u32), None),
        _ => (ArrivalTime::Unset, Some(Caveat::ArrivalTimeOutOfRange)),
    };
    ArrivalDecoding {
        raw: value,
        time,
        caveat,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    // Independent calendar oracle (proleptic Gregorian, days since 1970-01-01).
    fn days_from_civil(y: i64, m: i64, d: i64) -> i64 {
        let y = if m <= 2 { y - 1 } else { y };
        let era = y.div_euclid(400);
        let yoe = y - era * 400;
        let mp = (m + 9) % 12;
        let doy = (153 * mp + 2) / 5 + d - 1;
        let doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
        era * 146_097 + doe - 719_468
    }

    fn civil_from_days(z: i64) -> (i64, i64, i64) {
        let z = z + 719_468;
        let era = z.div_euclid(146_097);
        let doe = z - era * 146_097;
        let yoe = (doe - doe / 1460 + doe / 36_524 - doe / 146_096) / 365;
        let doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
        let mp = (5 * doy + 2) / 153;
        let d = doy - (153 * mp + 2) / 5 + 1;
        let m = if mp < 10 { mp + 3 } else { mp - 9 };
        (if m <= 2 { yoe + era * 400 + 1 } else { yoe + era * 400 }, m, d)
    }

    fn days_in_month(y: i64, m: i64) -> i64 {
        days_from_civil(if m == 12 { y + 1 } else { y }, if m == 12 { 1 } else { m + 1 }, 1)
            - days_from_civil(y, m, 1)
    }

    fn oracle_month_and_day(seconds: i64) -> i64 {
        let days = seconds.div_euclid(86_400);
        let tod = seconds.rem_euclid(86_400);
        let (y, m, d) = civil_from_days(days);
        let (py, pm) = if m == 1 { (y - 1, 12) } else { (y, m - 1) };
        let pd = d.min(days_in_month(py, pm));
        (days_from_civil(py, pm, pd) - 1) * 86_400 + tod
    }

    #[test]
    fn gouda_coordinates() {
        assert_eq!(decode_coordinate(472002, Axis::Lon).unwrap().to_string(), "4.72002");
        assert_eq!(decode_coordinate(5201999, Axis::Lat).unwrap().to_string(), "52.01999");
        assert_eq!(decode_coordinate(0, Axis::Lon).unwrap().to_string(), "0.00000");
        assert_eq!(decode_coordinate(-5, Axis::Lat).unwrap().to_string(), "-0.00005");
    }

    // Gouda lies roughly within 4.66..4.77 E, 51.99..52.05 N.
    #[test]
    fn gouda_scale_lands_in_gouda() {
        let lon = decode_coordinate(0x0007_33C2, Axis::Lon).unwrap().as_f64();
        let lat = decode_coordinate(0x004F_604F, Axis::Lat).unwrap().as_f64();
        assert!((4.66..4.77).contains(&lon), "{lon}");
        assert!((51.99..52.05).contains(&lat), "{lat}");
    }

    #[test]
    fn coordinate_range_errors_name_axis() {
        let err = decode_coordinate(-18_000_001, Axis::Lon).unwrap_err();
        assert_eq!(
            err,
            GeoError::CoordinateRange { axis: Axis::Lon, value: -18_000_001, limit: LON_LIMIT }
        );
        assert!(err.to_string().contains("longitude"));
        assert!(decode_coordinate(9_000_001, Axis::Lat).is_err());
        assert!(decode_coordinate(18_000_000, Axis::Lon).is_ok());
    }

    #[test]
    fn halving() {
        assert_eq!(halve_poi_coordinate(944004), Halved { value: 472002, precision_loss: false });
        assert_eq!(halve_poi_coordinate(0).value, 0);
        let odd = halve_poi_coordinate(944005);
        assert_eq!(odd.value, 472002);
        assert_eq!(odd.caveat(), Some(Caveat::HalvingPrecisionLoss));
        assert_eq!(halve_poi_coordinate(-3).value, -2);
    }

    #[test]
    fn minutes_normalization_with_device_caveat() {
        let t = normalize_timestamp(&TimestampSpec::device_minutes(22_000_000)).unwrap();
        assert_eq!(t.seconds, 1_320_000_000);
        assert!(t.caveats.contains(&Caveat::DeviceClock));
        assert_eq!(t.epoch, "unix-assumed");
        assert_eq!(t.alternative, None);
    }

    #[test]
    fn anomaly_emits_two_candidates() {
        let t = normalize_timestamp(&TimestampSpec::skewed_server_seconds(1_370_000_000)).unwrap();
        assert_eq!(t.seconds, 1_370_000_000);
        // 2013-05-31T11:33:20Z -> 2013-04-30 (clamped) -> 2013-04-29T11:33:20Z
        let expected = oracle_month_and_day(1_370_000_000);
        assert_eq!(expected, 1_367_235_200);
        assert_eq!(t.alternative, Some(expected));
        assert_eq!(t.alternative_utc().unwrap(), "2013-04-29T11:33:20Z");
        assert!(t.caveats.contains(&Caveat::ServerTimeAnomaly));
    }

    #[test]
    fn unknown_basis_identity() {
        let t = normalize_timestamp(&TimestampSpec::unknown_seconds(0)).unwrap();
        assert_eq!(t.seconds, 0);
        assert!(t.caveats.contains(&Caveat::UnknownTimeBasis));
    }

    #[test]
    fn overflow_and_flag_misuse() {
        assert!(matches!(
            normalize_timestamp(&TimestampSpec::device_minutes(i64::MAX / 2)),
            Err(GeoError::TimestampOverflow { .. })
        ));
        assert!(TimestampSpec::new(0, TimeUnit::Seconds, TimeBasis::DeviceClock, true).is_err());
    }

    #[test]
    fn user_time_offset() {
        assert_eq!(decode_user_time_offset(7259).unwrap().render(), "+02:00:59");
        assert_eq!(decode_user_time_offset(0).unwrap().render(), "+00:00:00");
        assert_eq!(decode_user_time_offset(-3600).unwrap().render(), "-01:00:00");
        assert!(decode_user_time_offset(50_401).is_err());
        assert!(decode_user_time_offset(-50_400).is_ok());
    }

    #[test]
    fn arrival_time() {
        assert_eq!(decode_arrival_time(86_401).time, ArrivalTime::Unset);
        assert_eq!(decode_arrival_time(86_401).caveat, None);
        assert_eq!(decode_arrival_time(0).time, ArrivalTime::SecondsOfDay(0));
        assert_eq!(decode_arrival_time(86_400).time, ArrivalTime::SecondsOfDay(86_400));
        let odd = decode_arrival_time(-1);
        assert_eq!(odd.time, ArrivalTime::Unset);
        assert_eq!(odd.caveat, Some(Caveat::ArrivalTimeOutOfRange));
    }

    proptest! {
        #[test]
        fn render_parse_round_trip(v in -LON_LIMIT..=LON_LIMIT) {
            let text = decode_coordinate(v, Axis::Lon).unwrap().to_string();
            prop_assert_eq!(parse_degrees(&text), Some(v));
        }

        #[test]
        fn halving_even_is_exact(k in (i32::MIN / 2)..=(i32::MAX / 2)) {
            prop_assert_eq!(halve_poi_coordinate(2 * k), Halved { value: k, precision_loss: false });
        }

        #[test]
        fn normalization_is_monotone(a in -1_000_000_000i64..1_000_000_000, b in -1_000_000_000i64..1_000_000_000, minutes: bool) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            let mk = |raw| if minutes { TimestampSpec::device_minutes(raw) } else { TimestampSpec::skewed_server_seconds(raw) };
            let l = normalize_timestamp(&mk(lo)).unwrap();
            let h = normalize_timestamp(&mk(hi)).unwrap();
            prop_assert!(l.seconds <= h.seconds);
            prop_assert!(l.alternative <= h.alternative);
        }

        #[test]
        fn anomaly_matches_calendar_oracle(s in -2_000_000_000i64..4_000_000_000) {
            prop_assert_eq!(subtract_month_and_day(s), Some(oracle_month_and_day(s)));
        }

        #[test]
        fn arrival_decoding_is_total(v: i64) {
            let _ = decode_arrival_time(v);
        }
    }
}
