//! AIS position-report ingestion.
//!
//! The interchange format is a CSV file whose first line is exactly
//! `mmsi,timestamp,lat,lon,sog,cog`, with ISO-8601 UTC timestamps:
//!
//! ```text
//! mmsi,timestamp,lat,lon,sog,cog
//! 239923000,2014-11-01T00:00:07Z,37.94321,23.61002,11.3,187.0
//! ```
//!
//! Parsing only checks types. Range checks, AIS "not available" sentinels,
//! regional boxes and duplicates are handled by [`filter_records`].

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use chrono::{DateTime, SecondsFormat, Timelike, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exec::Execution;
use crate::geo::GeoPoint;

pub const CSV_HEADER: [&str; 6] = ["mmsi", "timestamp", "lat", "lon", "sog", "cog"];

/// Highest speed AIS can encode; 102.3 means "not available".
pub const MAX_ENCODABLE_SOG: f64 = 102.2;

const LAT_UNAVAILABLE: f64 = 91.0;
const LON_UNAVAILABLE: f64 = 181.0;
const SOG_UNAVAILABLE: f64 = 102.3;
const COG_UNAVAILABLE: f64 = 360.0;

/// Maritime Mobile Service Identity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Mmsi(pub u32);

impl Mmsi {
    pub fn is_valid(self) -> bool {
        (100_000_000..=999_999_999).contains(&self.0)
    }
}

impl fmt::Display for Mmsi {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// One timestamped vessel position report.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AisRecord {
    pub mmsi: Mmsi,
    pub timestamp: DateTime<Utc>,
    pub position: GeoPoint,
    pub sog_knots: f64,
    pub cog_deg: f64,
}

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("schema error: expected header `{}`, found `{found}`", CSV_HEADER.join(","))]
    Schema { found: String },
    #[error("failed to read {path}: {source}")]
    File { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// A line that could not be turned into a record.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ParseError {
    pub line: u64,
    pub reason: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}", self.line, self.reason)
    }
}

#[derive(Debug, Default, Clone)]
pub struct ParsedReports {
    pub records: Vec<AisRecord>,
    pub errors: Vec<ParseError>,
}

/// Parses an AIS CSV stream. Bad lines are collected, never fatal; only a
/// missing or wrong header aborts.
pub fn parse_ais_csv<R: Read>(input: R) -> Result<ParsedReports, IngestError> {
    let mut reader = csv::ReaderBuilder::new().has_headers(false).flexible(true).from_reader(input);
    let mut rows = reader.byte_records();

    let header = match rows.next() {
        Some(row) => row?,
        None => return Err(IngestError::Schema { found: String::new() }),
    };
    if header.len() != CSV_HEADER.len() || header.iter().zip(CSV_HEADER).any(|(got, want)| got != want.as_bytes())
    {
        return Err(IngestError::Schema { found: String::from_utf8_lossy(header.as_slice()).into_owned() });
    }

    let mut out = ParsedReports::default();
    for row in rows {
        let row = match row {
            Ok(row) => row,
            Err(err) => {
                let line = err.position().map_or(0, |p| p.line());
                // An I/O failure means the stream itself is gone.
                if let csv::ErrorKind::Io(_) = err.kind() {
                    return Err(err.into());
                }
                out.errors.push(ParseError { line, reason: err.to_string() });
                continue;
            }
        };
        let line = row.position().map_or(0, |p| p.line());
        match parse_row(&row) {
            Ok(record) => out.records.push(record),
            Err(reason) => out.errors.push(ParseError { line, reason }),
        }
    }
    Ok(out)
}

fn parse_row(row: &csv::ByteRecord) -> Result<AisRecord, String> {
    if row.len() != CSV_HEADER.len() {
        return Err(format!("expected {} fields, found {}", CSV_HEADER.len(), row.len()));
    }
    let field = |i: usize| -> Result<&str, String> {
        std::str::from_utf8(&row[i])
            .map(str::trim)
            .map_err(|_| format!("{} is not valid UTF-8", CSV_HEADER[i]))
    };
    let number = |i: usize| -> Result<f64, String> {
        let text = field(i)?;
        text.parse::<f64>().map_err(|_| format!("{} is not a number: {text:?}", CSV_HEADER[i]))
    };

    let mmsi_text = field(0)?;
    let mmsi = mmsi_text.parse::<u32>().map_err(|_| format!("mmsi is not an integer: {mmsi_text:?}"))?;
    let ts_text = field(1)?;
    let timestamp = DateTime::parse_from_rfc3339(ts_text)
        .map_err(|e| format!("timestamp {ts_text:?}: {e}"))?
        .with_timezone(&Utc)
        .with_nanosecond(0)
        .expect("zero nanoseconds is always valid");
    Ok(AisRecord {
        mmsi: Mmsi(mmsi),
        timestamp,
        position: GeoPoint { lat_deg: number(2)?, lon_deg: number(3)? },
        sog_knots: number(4)?,
        cog_deg: number(5)?,
    })
}

/// Writes records in the ingest CSV schema. Floats use shortest round-trip
/// formatting, so parsing the output reproduces the records exactly.
pub fn write_ais_csv<W: Write>(out: W, records: &[AisRecord]) -> Result<(), IngestError> {
    let mut writer = csv::Writer::from_writer(out);
    writer.write_record(CSV_HEADER)?;
    for r in records {
        writer.write_record(&[
            r.mmsi.to_string(),
            r.timestamp.to_rfc3339_opts(SecondsFormat::Secs, true),
            r.position.lat_deg.to_string(),
            r.position.lon_deg.to_string(),
            r.sog_knots.to_string(),
            r.cog_deg.to_string(),
        ])?;
    }
    writer.flush()?;
    Ok(())
}

/// Latitude/longitude rectangle, bounds inclusive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub min_lat: f64,
    pub max_lat: f64,
    pub min_lon: f64,
    pub max_lon: f64,
}

impl BoundingBox {
    pub fn new(min_lat: f64, max_lat: f64, min_lon: f64, max_lon: f64) -> Option<Self> {
        let b = BoundingBox { min_lat, max_lat, min_lon, max_lon };
        b.is_valid().then_some(b)
    }

    /// The central Aegean study region.
    pub fn aegean() -> Self {
        BoundingBox { min_lat: 36.08462, max_lat: 39.48708, min_lon: 24.45557, max_lon: 26.58691 }
    }

    pub fn is_valid(&self) -> bool {
        [self.min_lat, self.max_lat, self.min_lon, self.max_lon].iter().all(|v| v.is_finite())
            && self.min_lat < self.max_lat
            && self.min_lon < self.max_lon
    }

    pub fn contains(&self, p: GeoPoint) -> bool {
        (self.min_lat..=self.max_lat).contains(&p.lat_deg) && (self.min_lon..=self.max_lon).contains(&p.lon_deg)
    }

    pub fn center(&self) -> GeoPoint {
        GeoPoint { lat_deg: 0.5 * (self.min_lat + self.max_lat), lon_deg: 0.5 * (self.min_lon + self.max_lon) }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FilterRules {
    pub bounding_box: Option<BoundingBox>,
    pub max_sog: f64,
    pub drop_unavailable_markers: bool,
}

impl Default for FilterRules {
    fn default() -> Self {
        FilterRules { bounding_box: None, max_sog: MAX_ENCODABLE_SOG, drop_unavailable_markers: true }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DropReason {
    InvalidMmsi,
    PositionUnavailable,
    SpeedUnavailable,
    CourseUnavailable,
    PositionOutOfRange,
    SpeedOutOfRange,
    CourseOutOfRange,
    OutsideBoundingBox,
    Duplicate,
}

impl fmt::Display for DropReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DropReason::InvalidMmsi => "invalid mmsi",
            DropReason::PositionUnavailable => "position unavailable",
            DropReason::SpeedUnavailable => "speed unavailable",
            DropReason::CourseUnavailable => "course unavailable",
            DropReason::PositionOutOfRange => "position out of range",
            DropReason::SpeedOutOfRange => "speed out of range",
            DropReason::CourseOutOfRange => "course out of range",
            DropReason::OutsideBoundingBox => "outside bounding box",
            DropReason::Duplicate => "duplicate",
        })
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct FilterOutcome {
    pub kept: Vec<AisRecord>,
    pub dropped: BTreeMap<DropReason, usize>,
}

impl FilterOutcome {
    pub fn dropped_total(&self) -> usize {
        self.dropped.values().sum()
    }
}

fn rejection(r: &AisRecord, rules: &FilterRules) -> Option<DropReason> {
    if !r.mmsi.is_valid() {
        return Some(DropReason::InvalidMmsi);
    }
    if rules.drop_unavailable_markers {
        if r.position.lat_deg == LAT_UNAVAILABLE || r.position.lon_deg == LON_UNAVAILABLE {
            return Some(DropReason::PositionUnavailable);
        }
        if r.sog_knots == SOG_UNAVAILABLE {
            return Some(DropReason::SpeedUnavailable);
        }
        if r.cog_deg == COG_UNAVAILABLE {
            return Some(DropReason::CourseUnavailable);
        }
    }
    if r.position.validate().is_err() {
        return Some(DropReason::PositionOutOfRange);
    }
    if !r.sog_knots.is_finite() || r.sog_knots < 0.0 || r.sog_knots > rules.max_sog.min(MAX_ENCODABLE_SOG) {
        return Some(DropReason::SpeedOutOfRange);
    }
    if !r.cog_deg.is_finite() || !(0.0..360.0).contains(&r.cog_deg) {
        return Some(DropReason::CourseOutOfRange);
    }
    if let Some(bbox) = rules.bounding_box {
        if !bbox.contains(r.position) {
            return Some(DropReason::OutsideBoundingBox);
        }
    }
    None
}

/// Drops faulty records. The first occurrence of an (mmsi, timestamp) pair
/// wins; later ones are counted as duplicates.
pub fn filter_records(records: &[AisRecord], rules: &FilterRules) -> FilterOutcome {
    let mut out = FilterOutcome::default();
    let mut seen = HashSet::with_capacity(records.len());
    for r in records {
        let reason = rejection(r, rules)
            .or_else(|| (!seen.insert((r.mmsi, r.timestamp))).then_some(DropReason::Duplicate));
        match reason {
            Some(reason) => *out.dropped.entry(reason).or_default() += 1,
            None => out.kept.push(*r),
        }
    }
    out
}

/// Per-vessel, time-ascending report streams.
pub type VesselStreams = BTreeMap<Mmsi, Vec<AisRecord>>;

pub fn group_sort(records: &[AisRecord]) -> VesselStreams {
    let mut streams = VesselStreams::new();
    for r in records {
        streams.entry(r.mmsi).or_default().push(*r);
    }
    for stream in streams.values_mut() {
        stream.sort_by_key(|r| r.timestamp);
    }
    streams
}

/// Everything produced by ingesting a set of files.
#[derive(Debug, Clone, Default)]
pub struct IngestOutcome {
    pub records: Vec<AisRecord>,
    pub parse_errors: Vec<(PathBuf, ParseError)>,
    pub dropped: BTreeMap<DropReason, usize>,
}

/// Parses several files (concurrently when `exec` allows), filters the union
/// and returns it ordered by (mmsi, timestamp).
pub fn ingest_files(paths: &[PathBuf], rules: &FilterRules, exec: Execution) -> Result<IngestOutcome, IngestError> {
    let parsed = exec.map(paths, |path| {
        let file = std::fs::File::open(path).map_err(|source| IngestError::File { path: path.clone(), source })?;
        parse_ais_csv(std::io::BufReader::new(file))
    });
    let mut all = Vec::new();
    let mut parse_errors = Vec::new();
    for (path, batch) in paths.iter().zip(parsed) {
        let batch = batch?;
        all.extend(batch.records);
        parse_errors.extend(batch.errors.into_iter().map(|e| (path.clone(), e)));
    }
    let filtered = filter_records(&all, rules);
    let mut records = filtered.kept;
    records.sort_by_key(|r| (r.mmsi, r.timestamp));
    Ok(IngestOutcome { records, parse_errors, dropped: filtered.dropped })
}

pub fn read_ais_file(path: &Path) -> Result<ParsedReports, IngestError> {
    let file = std::fs::File::open(path).map_err(|source| IngestError::File { path: path.to_owned(), source })?;
    parse_ais_csv(std::io::BufReader::new(file))
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::TimeZone;
    use proptest::prelude::*;

    const HEADER: &str = "mmsi,timestamp,lat,lon,sog,cog\n";

    fn record(mmsi: u32, secs: i64, lat: f64, lon: f64) -> AisRecord {
        AisRecord {
            mmsi: Mmsi(mmsi),
            timestamp: Utc.timestamp_opt(1_414_800_000 + secs, 0).unwrap(),
            position: GeoPoint { lat_deg: lat, lon_deg: lon },
            sog_knots: 11.3,
            cog_deg: 187.0,
        }
    }

    #[test]
    fn parses_the_documented_example_row() {
        let text = format!("{HEADER}239923000,2014-11-01T00:00:07Z,37.94321,23.61002,11.3,187.0\n");
        let parsed = parse_ais_csv(text.as_bytes()).unwrap();
        assert_eq!(parsed.errors, vec![]);
        assert_eq!(parsed.records.len(), 1);
        let r = parsed.records[0];
        assert_eq!(r.mmsi, Mmsi(239923000));
        assert_eq!(r.timestamp, Utc.with_ymd_and_hms(2014, 11, 1, 0, 0, 7).unwrap());
        assert_eq!(r.position, GeoPoint { lat_deg: 37.94321, lon_deg: 23.61002 });
        assert_eq!((r.sog_knots, r.cog_deg), (11.3, 187.0));
    }

    #[test]
    fn header_only_yields_nothing() {
        let parsed = parse_ais_csv(HEADER.as_bytes()).unwrap();
        assert!(parsed.records.is_empty() && parsed.errors.is_empty());
    }

    #[test]
    fn bad_middle_line_is_reported_with_its_line_number() {
        let text = format!(
            "{HEADER}239923000,2014-11-01T00:00:07Z,37.9,23.6,11.3,187.0\n\
             239923000,2014-11-01T00:00:17Z,abc,23.6,11.3,187.0\n\
             239923000,2014-11-01T00:00:27Z,37.9,23.6,11.3,187.0\n"
        );
        let parsed = parse_ais_csv(text.as_bytes()).unwrap();
        assert_eq!(parsed.records.len(), 2);
        assert_eq!(parsed.errors.len(), 1);
        assert_eq!(parsed.errors[0].line, 3);
        assert!(parsed.errors[0].reason.contains("lat"), "{}", parsed.errors[0]);
    }

    #[test]
    fn wrong_field_count_and_bad_timestamp_are_line_errors() {
        let text = format!("{HEADER}1,2,3\n239923000,yesterday,37.9,23.6,11.3,187.0\n");
        let parsed = parse_ais_csv(text.as_bytes()).unwrap();
        assert_eq!(parsed.errors.iter().map(|e| e.line).collect::<Vec<_>>(), vec![2, 3]);
    }

    #[test]
    fn missing_or_unknown_header_is_fatal() {
        assert!(matches!(parse_ais_csv("".as_bytes()), Err(IngestError::Schema { .. })));
        let text = "mmsi,time,lat,lon,sog,cog\n";
        assert!(matches!(parse_ais_csv(text.as_bytes()), Err(IngestError::Schema { .. })));
        let text = "239923000,2014-11-01T00:00:07Z,37.9,23.6,11.3,187.0\n";
        assert!(matches!(parse_ais_csv(text.as_bytes()), Err(IngestError::Schema { .. })));
    }

    #[test]
    fn write_then_parse_is_exact() {
        let records = vec![record(239923000, 7, 37.94321, 23.61002), record(237000001, 9, 36.1 + 1e-13, 25.0)];
        let mut buf = Vec::new();
        write_ais_csv(&mut buf, &records).unwrap();
        let parsed = parse_ais_csv(buf.as_slice()).unwrap();
        assert_eq!(parsed.records, records);
    }

    #[test]
    fn sentinels_and_ranges_are_dropped_by_reason() {
        let mut lat91 = record(239923000, 0, 91.0, 25.0);
        lat91.sog_knots = 5.0;
        let mut sog = record(239923000, 1, 37.0, 25.0);
        sog.sog_knots = 102.3;
        let mut cog = record(239923000, 2, 37.0, 25.0);
        cog.cog_deg = 360.0;
        let lon181 = record(239923000, 3, 37.0, 181.0);
        let short_mmsi = record(12345, 4, 37.0, 25.0);
        let out = filter_records(&[lat91, sog, cog, lon181, short_mmsi], &FilterRules::default());
        assert!(out.kept.is_empty());
        assert_eq!(out.dropped[&DropReason::PositionUnavailable], 2);
        assert_eq!(out.dropped[&DropReason::SpeedUnavailable], 1);
        assert_eq!(out.dropped[&DropReason::CourseUnavailable], 1);
        assert_eq!(out.dropped[&DropReason::InvalidMmsi], 1);
        assert_eq!(DropReason::PositionUnavailable.to_string(), "position unavailable");
    }

    #[test]
    fn sentinels_fall_through_to_range_checks_when_markers_are_kept() {
        let rules = FilterRules { drop_unavailable_markers: false, ..FilterRules::default() };
        let out = filter_records(&[record(239923000, 0, 91.0, 25.0)], &rules);
        assert_eq!(out.dropped[&DropReason::PositionOutOfRange], 1);
    }

    #[test]
    fn first_duplicate_wins() {
        let a = record(239923000, 0, 37.0, 25.0);
        let mut b = a;
        b.sog_knots = 3.0;
        let out = filter_records(&[a, b], &FilterRules::default());
        assert_eq!(out.kept, vec![a]);
        assert_eq!(out.dropped[&DropReason::Duplicate], 1);
    }

    #[test]
    fn aegean_box_keeps_inside_and_drops_outside() {
        let rules = FilterRules { bounding_box: Some(BoundingBox::aegean()), ..FilterRules::default() };
        let inside = record(239923000, 0, 37.5, 25.5);
        let outside = record(239923000, 1, 37.94321, 23.61002);
        let out = filter_records(&[inside, outside], &rules);
        assert_eq!(out.kept, vec![inside]);
        assert_eq!(out.dropped[&DropReason::OutsideBoundingBox], 1);
        assert!(BoundingBox::new(1.0, 0.0, 0.0, 1.0).is_none());
    }

    #[test]
    fn group_sort_fixtures() {
        assert!(group_sort(&[]).is_empty());
        let rev = vec![record(239923000, 30, 37.0, 25.0), record(239923000, 20, 37.0, 25.0), record(239923000, 10, 37.0, 25.0)];
        let g = group_sort(&rev);
        let times: Vec<_> = g[&Mmsi(239923000)].iter().map(|r| r.timestamp.timestamp()).collect();
        assert!(times.windows(2).all(|w| w[0] < w[1]));

        let mixed = vec![
            record(239923000, 5, 37.0, 25.0),
            record(237000001, 1, 37.0, 25.0),
            record(239923000, 2, 37.0, 25.0),
            record(237000001, 0, 37.0, 25.0),
        ];
        let g = group_sort(&mixed);
        assert_eq!(g.len(), 2);
        for s in g.values() {
            assert_eq!(s.len(), 2);
            assert!(s[0].timestamp < s[1].timestamp);
        }
    }

    fn arb_record() -> impl Strategy<Value = AisRecord> {
        (
            prop_oneof![Just(12345u32), 237000000u32..237000004],
            0i64..20,
            prop_oneof![Just(91.0), 35.0..40.0f64, Just(95.0)],
            prop_oneof![Just(181.0), 23.0..27.0f64],
            prop_oneof![Just(102.3), 0.0..30.0f64, Just(-1.0)],
            prop_oneof![Just(360.0), 0.0..360.0f64],
        )
            .prop_map(|(mmsi, t, lat, lon, sog, cog)| {
                let mut r = record(mmsi, t, lat, lon);
                r.sog_knots = sog;
                r.cog_deg = cog;
                r
            })
    }

    proptest! {
        #[test]
        fn filtering_is_idempotent_and_conserves_counts(records in prop::collection::vec(arb_record(), 0..60), boxed in any::<bool>()) {
            let rules = FilterRules { bounding_box: boxed.then(BoundingBox::aegean), ..FilterRules::default() };
            let once = filter_records(&records, &rules);
            prop_assert_eq!(once.kept.len() + once.dropped_total(), records.len());
            let twice = filter_records(&once.kept, &rules);
            prop_assert_eq!(&twice.kept, &once.kept);
            prop_assert_eq!(twice.dropped_total(), 0);
        }

        #[test]
        fn group_sort_is_a_permutation(records in prop::collection::vec(arb_record(), 0..60)) {
            let clean = filter_records(&records, &FilterRules::default()).kept;
            let grouped = group_sort(&clean);
            let mut flat: Vec<_> = grouped.values().flatten().copied().collect();
            let mut input = clean.clone();
            let key = |r: &AisRecord| (r.mmsi, r.timestamp);
            flat.sort_by_key(key);
            input.sort_by_key(key);
            prop_assert_eq!(flat, input);
            for s in grouped.values() {
                prop_assert!(s.windows(2).all(|w| w[0].timestamp < w[1].timestamp));
            }
        }
    }
}
