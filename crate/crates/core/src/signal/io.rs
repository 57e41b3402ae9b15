use std::fs;
use std::io::Write;
use std::path::Path;

use super::{Dataset, RawSignal, SpectrumSample, FEATURE_LEN};
use crate::error::{Error, Result};

fn parse_err(path: &Path, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        message: message.into(),
    }
}

/// One value per line; a non-numeric first line is treated as a header.
pub fn read_raw_csv(path: &Path, sample_rate_hz: f64, label: usize, condition_id: i64) -> Result<RawSignal> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut samples = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let field = line.split(',').next().unwrap_or("").trim();
        if field.is_empty() {
            continue;
        }
        match field.parse::<f64>() {
            Ok(v) => samples.push(v),
            Err(_) if lineno == 0 => continue,
            Err(_) => return Err(parse_err(path, format!("line {}: `{field}` is not a number", lineno + 1))),
        }
    }
    RawSignal::new(samples, sample_rate_hz, label, condition_id).map_err(|e| parse_err(path, e.to_string()))
}

/// Raw little-endian `f32` samples.
pub fn read_raw_binary(path: &Path, sample_rate_hz: f64, label: usize, condition_id: i64) -> Result<RawSignal> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.len() % 4 != 0 {
        return Err(parse_err(path, format!("{} bytes is not a whole number of f32 values", bytes.len())));
    }
    let samples = bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
        .collect();
    RawSignal::new(samples, sample_rate_hz, label, condition_id).map_err(|e| parse_err(path, e.to_string()))
}

/// CSV with columns `f0..f511,label`.
pub fn write_dataset_csv(ds: &Dataset, out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<String> = (0..FEATURE_LEN).map(|j| format!("f{j}")).collect();
    header.push("label".into());
    w.write_record(&header)?;
    for s in ds.samples() {
        let mut rec: Vec<String> = s.features().iter().map(|v| v.to_string()).collect();
        rec.push(s.label.to_string());
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::io("<csv writer>", e))?;
    Ok(())
}

pub fn read_dataset_csv(path: &Path) -> Result<Dataset> {
    let mut r = csv::Reader::from_path(path)?;
    let headers = r.headers()?.clone();
    let label_col = headers
        .iter()
        .position(|h| h == "label")
        .ok_or_else(|| parse_err(path, "missing `label` column"))?;
    if headers.len() != FEATURE_LEN + 1 {
        return Err(parse_err(path, format!("expected {} columns, found {}", FEATURE_LEN + 1, headers.len())));
    }
    let mut ds = Dataset::default();
    for (row, rec) in r.records().enumerate() {
        let rec = rec?;
        let mut feats = Vec::with_capacity(FEATURE_LEN);
        let mut label = 0;
        for (j, field) in rec.iter().enumerate() {
            if j == label_col {
                label = field
                    .trim()
                    .parse()
                    .map_err(|_| parse_err(path, format!("row {}: bad label `{field}`", row + 1)))?;
            } else {
                feats.push(
                    field
                        .trim()
                        .parse::<f64>()
                        .map_err(|_| parse_err(path, format!("row {}: bad value `{field}`", row + 1)))?,
                );
            }
        }
        ds.push(SpectrumSample::new(feats, label).map_err(|e| parse_err(path, format!("row {}: {e}", row + 1)))?);
    }
    Ok(ds)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn raw_csv_with_and_without_header() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.csv");
        fs::write(&p, "accel\n1.5\n-2\n\n3e-1\n").unwrap();
        let s = read_raw_csv(&p, 100.0, 1, 2).unwrap();
        assert_eq!(s.samples, vec![1.5, -2.0, 0.3]);
        fs::write(&p, "1\nx\n").unwrap();
        assert!(read_raw_csv(&p, 100.0, 1, 2).is_err());
    }

    #[test]
    fn raw_binary_f32() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.bin");
        let bytes: Vec<u8> = [1.0f32, -0.5].iter().flat_map(|v| v.to_le_bytes()).collect();
        fs::write(&p, &bytes).unwrap();
        assert_eq!(read_raw_binary(&p, 1.0, 0, 0).unwrap().samples, vec![1.0, -0.5]);
        fs::write(&p, &bytes[..5]).unwrap();
        assert!(read_raw_binary(&p, 1.0, 0, 0).is_err());
    }

    #[test]
    fn dataset_csv_round_trip() {
        let ds: Dataset = (0..3)
            .map(|i| SpectrumSample::new((0..FEATURE_LEN).map(|j| (i * j) as f64 / 7.0).collect(), i).unwrap())
            .collect();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("d.csv");
        write_dataset_csv(&ds, fs::File::create(&p).unwrap()).unwrap();
        assert_eq!(read_dataset_csv(&p).unwrap(), ds);
    }
}
