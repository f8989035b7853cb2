//! CSV datasets with columns `subject_id,test,day,value`.

use std::io::{Read, Write};
use std::path::Path;

use stereo_core::stats::{MeasurementRecord, TestKind};
use stereo_core::Acuity;

use crate::{HarnessError, Result};

pub const HEADER: [&str; 4] = ["subject_id", "test", "day", "value"];

pub fn read_csv(reader: impl Read) -> Result<Vec<MeasurementRecord>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).flexible(true).from_reader(reader);
    let mut records = Vec::new();
    let mut saw_header = false;
    for row in rdr.records() {
        let row = row.map_err(|e| HarnessError::Dataset {
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        let line = row.position().map_or(0, |p| p.line());
        if row.iter().all(str::is_empty) {
            continue;
        }
        let bad = |message: String| HarnessError::Dataset { line, message };
        if !saw_header {
            if row.iter().ne(HEADER) {
                return Err(bad(format!("expected header {}", HEADER.join(","))));
            }
            saw_header = true;
            continue;
        }
        if row.len() != HEADER.len() {
            return Err(bad(format!("expected {} fields, found {}", HEADER.len(), row.len())));
        }
        let subject_id = row[0].to_string();
        if subject_id.is_empty() {
            return Err(bad("empty subject_id".into()));
        }
        let test: TestKind = row[1].parse().map_err(|e: stereo_core::Error| bad(e.to_string()))?;
        let day: u8 = row[2].parse().map_err(|_| bad(format!("day {:?} is not 1 or 2", &row[2])))?;
        if !(1..=2).contains(&day) {
            return Err(bad(format!("day {day} is not 1 or 2")));
        }
        let value: Acuity = row[3].parse().map_err(|e: stereo_core::Error| bad(e.to_string()))?;
        records.push(MeasurementRecord { subject_id, test, day, value });
    }
    if !saw_header {
        return Err(HarnessError::Dataset { line: 1, message: "missing header".into() });
    }
    Ok(records)
}

pub fn write_csv(writer: impl Write, records: &[MeasurementRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let csv_err = |e: csv::Error| HarnessError::Dataset { line: 0, message: e.to_string() };
    w.write_record(HEADER).map_err(csv_err)?;
    for r in records {
        w.write_record([r.subject_id.clone(), r.test.to_string(), r.day.to_string(), r.value.to_string()])
            .map_err(csv_err)?;
    }
    w.flush().map_err(|e| HarnessError::io("<csv>", e))
}

pub fn read_path(path: &Path) -> Result<Vec<MeasurementRecord>> {
    let file = std::fs::File::open(path).map_err(|e| HarnessError::io(path, e))?;
    read_csv(file)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_values_and_ol() {
        let text = "subject_id,test,day,value\n17,HD,1,7\n17,ST_far,1,OL\n\n17,TNO,2,120.5\n";
        let records = read_csv(text.as_bytes()).unwrap();
        assert_eq!(records.len(), 3);
        assert_eq!(records[1].value, Acuity::OutsideLimits);
        assert_eq!(records[2].value, Acuity::Arcsec(120.5));
        assert_eq!(records[2].day, 2);
    }

    #[test]
    fn reports_line_numbers() {
        let cases = [
            ("subject_id,test,day,value\n1,HD,1,7\n1,XX,1,7\n", 3),
            ("subject_id,test,day,value\n1,HD,3,7\n", 2),
            ("subject_id,test,day,value\n1,HD,1,seven\n", 2),
            ("subject_id,test,day,value\n1,HD,1\n", 2),
            ("subject_id,test,day,value\n1,HD,1,-4\n", 2),
            ("id,test,day,value\n", 1),
        ];
        for (text, line) in cases {
            match read_csv(text.as_bytes()) {
                Err(HarnessError::Dataset { line: got, .. }) => assert_eq!(got, line, "{text:?}"),
                other => panic!("{text:?}: {other:?}"),
            }
        }
        assert!(read_csv("".as_bytes()).is_err());
    }

    #[test]
    fn round_trip() {
        let text = "subject_id,test,day,value\na,HD,1,7.25\na,TNO,2,OL\nb,ST_near,1,40\n";
        let records = read_csv(text.as_bytes()).unwrap();
        let mut out = Vec::new();
        write_csv(&mut out, &records).unwrap();
        assert_eq!(read_csv(out.as_slice()).unwrap(), records);
    }
}
