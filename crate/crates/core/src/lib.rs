pub mod caveat;
pub mod geo_time;
pub mod ov2;
pub mod settings_xml;
pub mod records;
pub mod carver;
pub mod detect;
pub mod report;
