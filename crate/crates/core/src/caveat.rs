//! Caveat flags attached to decoded values.
//!
//! A caveat never changes a decoded value; it tells the analyst how far the
//! value can be trusted. Sets are ordered so every rendering is stable.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Caveat {
    /// Time comes from the handset clock, which the user can set freely.
    DeviceClock,
    UnknownTimeBasis,
    /// Server-side time family observed skewed by one month and one day.
    ServerTimeAnomaly,
    /// An odd raw coordinate was halved; the low bit was lost.
    HalvingPrecisionLoss,
    ArrivalTimeOutOfRange,
    /// Location typed as GPS: the device was there at some point in time.
    VisitedAtSomePoint,
    PositionUnparseable,
    /// GPS departure may be a last known position when there was no lock.
    MayBeLastKnownPosition,
    NoDepartureTime,
    MissingDeparture,
    MissingDestination,
    NoGpsTimeStored,
    PartialPosition,
    DuplicateLeaf,
    SegmentIndexMismatch,
    DuplicateHomeIndex,
    /// Decoded with the standard location decoder but never observed populated.
    Experimental,
    ValueUnparseable,
    /// Name bytes rendered assuming a single-byte / UTF-8 compatible encoding.
    NameEncodingAssumed,
    DatumWgs84Assumed,
}

impl Caveat {
    pub fn code(self) -> &'static str {
        match self {
            Caveat::DeviceClock => "device_clock",
            Caveat::UnknownTimeBasis => "unknown_time_basis",
            Caveat::ServerTimeAnomaly => "server_time_anomaly",
            Caveat::HalvingPrecisionLoss => "halving_precision_loss",
            Caveat::ArrivalTimeOutOfRange => "arrival_time_out_of_range",
            Caveat::VisitedAtSomePoint => "visited_at_some_point",
            Caveat::PositionUnparseable => "position_unparseable",
            Caveat::MayBeLastKnownPosition => "may_be_last_known_position",
            Caveat::NoDepartureTime => "no_departure_time",
            Caveat::MissingDeparture => "missing_departure",
            Caveat::MissingDestination => "missing_destination",
            Caveat::NoGpsTimeStored => "no_gps_time_stored",
            Caveat::PartialPosition => "partial_position",
            Caveat::DuplicateLeaf => "duplicate_leaf",
            Caveat::SegmentIndexMismatch => "segment_index_mismatch",
            Caveat::DuplicateHomeIndex => "duplicate_home_index",
            Caveat::Experimental => "experimental",
            Caveat::ValueUnparseable => "value_unparseable",
            Caveat::NameEncodingAssumed => "name_encoding_assumed",
            Caveat::DatumWgs84Assumed => "datum_wgs84_assumed",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            Caveat::DeviceClock => "device clock, may be wrong",
            Caveat::UnknownTimeBasis => "time basis unknown",
            Caveat::ServerTimeAnomaly => {
                "server time family observed off by one month and one day; both candidates given"
            }
            Caveat::HalvingPrecisionLoss => "odd raw coordinate halved, precision lost",
            Caveat::ArrivalTimeOutOfRange => "arrival time outside a day, treated as unset",
            Caveat::VisitedAtSomePoint => "visited at some point",
            Caveat::PositionUnparseable => "position unparseable",
            Caveat::MayBeLastKnownPosition => "may be last known position if no GPS lock",
            Caveat::NoDepartureTime => "no departure time",
            Caveat::MissingDeparture => "no departure location",
            Caveat::MissingDestination => "no destination location",
            Caveat::NoGpsTimeStored => "no GPS time stored",
            Caveat::PartialPosition => "only one coordinate axis present",
            Caveat::DuplicateLeaf => "duplicate field values in one record",
            Caveat::SegmentIndexMismatch => "key path indices disagree",
            Caveat::DuplicateHomeIndex => "home location index repeated",
            Caveat::Experimental => "never observed populated, decoding experimental",
            Caveat::ValueUnparseable => "value could not be parsed",
            Caveat::NameEncodingAssumed => "name encoding assumed",
            Caveat::DatumWgs84Assumed => "WGS84 datum assumed",
        }
    }
}

impl fmt::Display for Caveat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

pub type Caveats = BTreeSet<Caveat>;

/// Renders a caveat set as `a;b;c`.
pub fn join(caveats: &Caveats) -> String {
    caveats
        .iter()
        .map(|c| c.code())
        .collect::<Vec<_>>()
        .join(";")
}
