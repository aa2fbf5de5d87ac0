//! Ingestion of wide-format cumulative-recovery CSVs (JHU CSSE layout):
//! `Province/State, Country/Region, Lat, Long` followed by one cumulative
//! count column per day, dates written `M/D/YY` without zero padding.
//!
//! Parsing either yields a table satisfying every type invariant or one of
//! the declared errors; a partially filled table is never returned.

use std::io::Read;

use chrono::NaiveDate;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("malformed header: {0}")]
    MalformedHeader(String),
    #[error("ragged row {row}: expected {expected} cells, found {found}")]
    RaggedRow {
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error("non-numeric count at row {row}, column {col}: {value:?}")]
    NonNumericCount {
        row: usize,
        col: usize,
        value: String,
    },
    #[error("table has no regions")]
    EmptyTable,
    #[error("series too short: need at least 2 values, got {len}")]
    SeriesTooShort { len: usize },
    #[error("csv read error: {0}")]
    Csv(#[from] csv::Error),
}

/// One row of the source file: region metadata plus its cumulative counts.
///
/// Counts are kept exactly as reported; upstream corrections occasionally
/// make the sequence non-monotone. Latitude and longitude are retained in
/// the data model but never fed to the forecaster.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionRecord {
    pub province: Option<String>,
    pub country: String,
    pub latitude: Option<f64>,
    pub longitude: Option<f64>,
    pub counts: Vec<i64>,
}

/// Parsed file: every region shares the same daily-contiguous date axis.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionSeriesTable {
    pub regions: Vec<RegionRecord>,
    pub dates: Vec<NaiveDate>,
}

/// Globally aggregated cumulative series (real-valued after aggregation).
#[derive(Debug, Clone, PartialEq)]
pub struct CumulativeSeries {
    pub dates: Vec<NaiveDate>,
    pub values: Vec<f64>,
}

/// Day-over-day changes of a cumulative series. One entry fewer than the
/// source; negative values (upstream corrections) are retained unmodified.
#[derive(Debug, Clone, PartialEq)]
pub struct DeltaSeries {
    pub dates: Vec<NaiveDate>,
    pub values: Vec<f64>,
}

const META_COLUMNS: [&str; 4] = ["Province/State", "Country/Region", "Lat", "Long"];

/// Parses `M/D/YY` (no zero padding); two-digit years map to 2000+.
fn parse_mdy(cell: &str) -> Option<NaiveDate> {
    let mut parts = cell.trim().split('/');
    let month: u32 = parts.next()?.trim().parse().ok()?;
    let day: u32 = parts.next()?.trim().parse().ok()?;
    let year_raw: i32 = parts.next()?.trim().parse().ok()?;
    if parts.next().is_some() || year_raw < 0 {
        return None;
    }
    let year = if year_raw < 100 { 2000 + year_raw } else { year_raw };
    NaiveDate::from_ymd_opt(year, month, day)
}

fn parse_optional_f64(cell: &str) -> Option<f64> {
    let cell = cell.trim();
    if cell.is_empty() {
        return None;
    }
    cell.parse().ok()
}

/// Parses the wide-format CSV into a [`RegionSeriesTable`].
///
/// The header must carry the four metadata columns followed by at least one
/// date column, and the date columns must advance by exactly one day.
/// Missing Lat/Long cells parse to `None`, not zero.
pub fn parse_jhu_csv<R: Read>(input: R) -> Result<RegionSeriesTable, IngestError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(input);
    let mut records = reader.records();

    let header = match records.next() {
        Some(record) => record?,
        None => return Err(IngestError::MalformedHeader("empty input".into())),
    };

    if header.len() < META_COLUMNS.len() + 1 {
        return Err(IngestError::MalformedHeader(format!(
            "expected {} metadata columns plus date columns, found {} columns",
            META_COLUMNS.len(),
            header.len()
        )));
    }
    for (idx, expected) in META_COLUMNS.iter().enumerate() {
        // The first cell may carry a UTF-8 byte-order mark.
        let found = header[idx].trim_start_matches('\u{feff}').trim();
        if !found.eq_ignore_ascii_case(expected) {
            return Err(IngestError::MalformedHeader(format!(
                "column {idx} should be {expected:?}, found {found:?}"
            )));
        }
    }

    let mut dates = Vec::with_capacity(header.len() - META_COLUMNS.len());
    for (idx, cell) in header.iter().enumerate().skip(META_COLUMNS.len()) {
        let date = parse_mdy(cell).ok_or_else(|| {
            IngestError::MalformedHeader(format!("unparsable date column {idx}: {cell:?}"))
        })?;
        if let Some(&prev) = dates.last() {
            if date != prev + chrono::Days::new(1) {
                return Err(IngestError::MalformedHeader(format!(
                    "date columns must advance by one day: {prev} is followed by {date}"
                )));
            }
        }
        dates.push(date);
    }

    let mut regions = Vec::new();
    for (row_idx, record) in records.enumerate() {
        let record = record?;
        let row = row_idx + 1; // 0 is the header
        if record.len() != header.len() {
            return Err(IngestError::RaggedRow {
                row,
                expected: header.len(),
                found: record.len(),
            });
        }

        let province = match record[0].trim() {
            "" => None,
            p => Some(p.to_string()),
        };
        let country = record[1].trim().to_string();
        let latitude = parse_optional_f64(&record[2]);
        let longitude = parse_optional_f64(&record[3]);

        let mut counts = Vec::with_capacity(dates.len());
        for (col, cell) in record.iter().enumerate().skip(META_COLUMNS.len()) {
            let count: i64 = cell.trim().parse().map_err(|_| IngestError::NonNumericCount {
                row,
                col,
                value: cell.to_string(),
            })?;
            counts.push(count);
        }

        regions.push(RegionRecord {
            province,
            country,
            latitude,
            longitude,
            counts,
        });
    }

    Ok(RegionSeriesTable { regions, dates })
}

/// Sums counts across all regions per day.
pub fn aggregate_global(table: &RegionSeriesTable) -> Result<CumulativeSeries, IngestError> {
    if table.regions.is_empty() {
        return Err(IngestError::EmptyTable);
    }
    let mut values = vec![0.0; table.dates.len()];
    for region in &table.regions {
        for (total, &count) in values.iter_mut().zip(&region.counts) {
            *total += count as f64;
        }
    }
    Ok(CumulativeSeries {
        dates: table.dates.clone(),
        values,
    })
}

/// Day-over-day differences; `values[i] = source[i+1] - source[i]` exactly.
pub fn to_daily_deltas(series: &CumulativeSeries) -> Result<DeltaSeries, IngestError> {
    if series.values.len() < 2 {
        return Err(IngestError::SeriesTooShort {
            len: series.values.len(),
        });
    }
    let values = series.values.windows(2).map(|w| w[1] - w[0]).collect();
    Ok(DeltaSeries {
        dates: series.dates[1..].to_vec(),
        values,
    })
}

/// Prefix-sums deltas back onto the cumulative axis starting from `base`.
///
/// Inverse of [`to_daily_deltas`]: for any series `s`,
/// `reconstruct_cumulative(s.values[0], to_daily_deltas(s))` reproduces
/// `s.values[1..]` bit-exactly on integer-valued input.
pub fn reconstruct_cumulative(base: f64, deltas: &DeltaSeries) -> CumulativeSeries {
    let mut running = base;
    let values = deltas
        .values
        .iter()
        .map(|d| {
            running += d;
            running
        })
        .collect();
    CumulativeSeries {
        dates: deltas.dates.clone(),
        values,
    }
}

/// Final cumulative count per country (rows sharing a country are summed),
/// ranked descending; ties break alphabetically.
pub fn country_totals(table: &RegionSeriesTable) -> Vec<(String, i64)> {
    let mut totals: std::collections::BTreeMap<&str, i64> = std::collections::BTreeMap::new();
    for region in &table.regions {
        let last = region.counts.last().copied().unwrap_or(0);
        *totals.entry(region.country.as_str()).or_insert(0) += last;
    }
    let mut ranked: Vec<(String, i64)> = totals
        .into_iter()
        .map(|(country, total)| (country.to_string(), total))
        .collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    ranked
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn date(y: i32, m: u32, d: u32) -> NaiveDate {
        NaiveDate::from_ymd_opt(y, m, d).unwrap()
    }

    #[test]
    fn parses_single_region() {
        let csv = "Province/State,Country/Region,Lat,Long,1/22/20,1/23/20\n\
                   ,Albania,41.15,20.17,0,0\n";
        let table = parse_jhu_csv(csv.as_bytes()).unwrap();
        assert_eq!(table.regions.len(), 1);
        assert_eq!(table.dates, vec![date(2020, 1, 22), date(2020, 1, 23)]);
        let region = &table.regions[0];
        assert_eq!(region.province, None);
        assert_eq!(region.country, "Albania");
        assert_eq!(region.latitude, Some(41.15));
        assert_eq!(region.longitude, Some(20.17));
        assert_eq!(region.counts, vec![0, 0]);
    }

    #[test]
    fn missing_lat_long_is_absent_not_zero() {
        let csv = "Province/State,Country/Region,Lat,Long,1/22/20\n\
                   ,Somewhere,,,3\n";
        let table = parse_jhu_csv(csv.as_bytes()).unwrap();
        assert_eq!(table.regions[0].latitude, None);
        assert_eq!(table.regions[0].longitude, None);
    }

    #[test]
    fn quoted_country_with_comma() {
        let csv = "Province/State,Country/Region,Lat,Long,1/22/20\n\
                   ,\"Korea, South\",35.9,127.7,1\n";
        let table = parse_jhu_csv(csv.as_bytes()).unwrap();
        assert_eq!(table.regions[0].country, "Korea, South");
    }

    #[test]
    fn ragged_row_is_rejected() {
        let csv = "Province/State,Country/Region,Lat,Long,1/22/20,1/23/20\n\
                   ,X,0,0,1,2,3\n";
        match parse_jhu_csv(csv.as_bytes()) {
            Err(IngestError::RaggedRow {
                row: 1,
                expected: 6,
                found: 7,
            }) => {}
            other => panic!("expected RaggedRow, got {other:?}"),
        }
    }

    #[test]
    fn non_numeric_count_is_rejected() {
        let csv = "Province/State,Country/Region,Lat,Long,1/22/20\n\
                   ,X,0,0,seven\n";
        match parse_jhu_csv(csv.as_bytes()) {
            Err(IngestError::NonNumericCount { row: 1, col: 4, value }) => {
                assert_eq!(value, "seven");
            }
            other => panic!("expected NonNumericCount, got {other:?}"),
        }
    }

    #[test]
    fn empty_input_is_malformed_header() {
        assert!(matches!(
            parse_jhu_csv("".as_bytes()),
            Err(IngestError::MalformedHeader(_))
        ));
    }

    #[test]
    fn missing_meta_columns_is_malformed_header() {
        let csv = "Country,1/22/20\nX,5\n";
        assert!(matches!(
            parse_jhu_csv(csv.as_bytes()),
            Err(IngestError::MalformedHeader(_))
        ));
    }

    #[test]
    fn unparsable_date_column_is_malformed_header() {
        let csv = "Province/State,Country/Region,Lat,Long,notadate\n,X,0,0,5\n";
        assert!(matches!(
            parse_jhu_csv(csv.as_bytes()),
            Err(IngestError::MalformedHeader(_))
        ));
    }

    #[test]
    fn non_contiguous_dates_are_rejected() {
        let csv = "Province/State,Country/Region,Lat,Long,1/22/20,1/24/20\n,X,0,0,1,2\n";
        assert!(matches!(
            parse_jhu_csv(csv.as_bytes()),
            Err(IngestError::MalformedHeader(_))
        ));
    }

    #[test]
    fn bom_on_first_header_cell_is_tolerated() {
        let csv = "\u{feff}Province/State,Country/Region,Lat,Long,1/22/20\n,X,0,0,1\n";
        assert!(parse_jhu_csv(csv.as_bytes()).is_ok());
    }

    fn two_region_table() -> RegionSeriesTable {
        parse_jhu_csv(
            "Province/State,Country/Region,Lat,Long,1/22/20,1/23/20\n\
             ,A,0,0,1,2\n\
             ,B,0,0,3,4\n"
                .as_bytes(),
        )
        .unwrap()
    }

    #[test]
    fn aggregate_sums_regions() {
        let series = aggregate_global(&two_region_table()).unwrap();
        assert_eq!(series.values, vec![4.0, 6.0]);
    }

    #[test]
    fn aggregate_single_region_is_identity() {
        let mut table = two_region_table();
        table.regions.truncate(1);
        let series = aggregate_global(&table).unwrap();
        assert_eq!(series.values, vec![1.0, 2.0]);
    }

    #[test]
    fn aggregate_rejects_empty_table() {
        let table = RegionSeriesTable {
            regions: vec![],
            dates: vec![date(2020, 1, 22)],
        };
        assert!(matches!(
            aggregate_global(&table),
            Err(IngestError::EmptyTable)
        ));
    }

    fn cumulative(values: &[f64]) -> CumulativeSeries {
        let dates = (0..values.len())
            .map(|i| date(2020, 1, 22) + chrono::Days::new(i as u64))
            .collect();
        CumulativeSeries {
            dates,
            values: values.to_vec(),
        }
    }

    #[test]
    fn deltas_are_differences() {
        let deltas = to_daily_deltas(&cumulative(&[0.0, 3.0, 5.0, 5.0])).unwrap();
        assert_eq!(deltas.values, vec![3.0, 2.0, 0.0]);
        assert_eq!(deltas.dates.len(), 3);
    }

    #[test]
    fn negative_deltas_are_retained() {
        let deltas = to_daily_deltas(&cumulative(&[10.0, 8.0])).unwrap();
        assert_eq!(deltas.values, vec![-2.0]);
    }

    #[test]
    fn length_one_series_is_too_short() {
        assert!(matches!(
            to_daily_deltas(&cumulative(&[1.0])),
            Err(IngestError::SeriesTooShort { len: 1 })
        ));
    }

    #[test]
    fn reconstruct_prefix_sums() {
        let deltas = to_daily_deltas(&cumulative(&[0.0, 3.0, 5.0, 5.0])).unwrap();
        let rebuilt = reconstruct_cumulative(0.0, &deltas);
        assert_eq!(rebuilt.values, vec![3.0, 5.0, 5.0]);
    }

    #[test]
    fn reconstruct_empty_deltas() {
        let deltas = DeltaSeries {
            dates: vec![],
            values: vec![],
        };
        assert_eq!(reconstruct_cumulative(7.0, &deltas).values, Vec::<f64>::new());
    }

    #[test]
    fn country_totals_rank_descending() {
        let table = parse_jhu_csv(
            "Province/State,Country/Region,Lat,Long,1/22/20,1/23/20\n\
             North,A,0,0,1,5\n\
             South,A,0,0,1,6\n\
             ,B,0,0,9,20\n"
                .as_bytes(),
        )
        .unwrap();
        assert_eq!(
            country_totals(&table),
            vec![("B".to_string(), 20), ("A".to_string(), 11)]
        );
    }

    proptest! {
        // Round trip: reconstruct ∘ to_daily_deltas reproduces the tail of
        // any integer-valued cumulative series bit-exactly.
        #[test]
        fn delta_round_trip(raw in proptest::collection::vec(0i64..2_000_000_000, 2..60)) {
            let series = cumulative(&raw.iter().map(|&v| v as f64).collect::<Vec<_>>());
            let deltas = to_daily_deltas(&series).unwrap();
            let rebuilt = reconstruct_cumulative(series.values[0], &deltas);
            prop_assert_eq!(&rebuilt.values[..], &series.values[1..]);
            prop_assert_eq!(&rebuilt.dates[..], &series.dates[1..]);
        }

        // Aggregation linearity: summing over a partition of the regions
        // equals aggregating the whole table.
        #[test]
        fn aggregation_linearity(
            counts in proptest::collection::vec(
                proptest::collection::vec(0i64..1_000_000, 5),
                2..8,
            ),
            split in 1usize..7,
        ) {
            let dates: Vec<NaiveDate> = (0..5)
                .map(|i| date(2020, 1, 22) + chrono::Days::new(i))
                .collect();
            let regions: Vec<RegionRecord> = counts
                .iter()
                .enumerate()
                .map(|(i, c)| RegionRecord {
                    province: None,
                    country: format!("R{i}"),
                    latitude: None,
                    longitude: None,
                    counts: c.clone(),
                })
                .collect();
            let split = split.min(regions.len() - 1).max(1);
            let table = RegionSeriesTable { regions: regions.clone(), dates: dates.clone() };
            let left = RegionSeriesTable { regions: regions[..split].to_vec(), dates: dates.clone() };
            let right = RegionSeriesTable { regions: regions[split..].to_vec(), dates };
            let whole = aggregate_global(&table).unwrap();
            let l = aggregate_global(&left).unwrap();
            let r = aggregate_global(&right).unwrap();
            let summed: Vec<f64> = l.values.iter().zip(&r.values).map(|(a, b)| a + b).collect();
            prop_assert_eq!(whole.values, summed);
        }
    }
}
