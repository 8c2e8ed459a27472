//! MSP spectral-library text format.
//!
//! A record is a block of `Key: Value` header lines, a `Num Peaks: N` line and
//! N `mz intensity` pairs (whitespace separated, optionally several per line
//! separated by `;`). Records are separated by blank lines.

use std::fmt::Write as _;
use std::io::BufRead;

use super::spectrum::{Peak, PeakList};

#[derive(Debug, thiserror::Error)]
pub enum MspError {
    #[error("line {line}: {message}")]
    Format { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn format_err<T>(line: usize, message: impl Into<String>) -> Result<T, MspError> {
    Err(MspError::Format {
        line,
        message: message.into(),
    })
}

#[derive(Default)]
struct Pending {
    start_line: usize,
    list: PeakList,
    declared: Option<usize>,
    peaks: Vec<Peak>,
}

impl Pending {
    fn finish(self, line: usize) -> Result<PeakList, MspError> {
        let Some(declared) = self.declared else {
            return format_err(self.start_line, "record has no `Num Peaks` line");
        };
        if self.peaks.len() != declared {
            return format_err(
                line,
                format!("declared {declared} peaks but found {}", self.peaks.len()),
            );
        }
        let mut list = PeakList::new(self.peaks).map_err(|e| MspError::Format {
            line,
            message: e.to_string(),
        })?;
        list.name = self.list.name;
        list.compound_id = self.list.compound_id;
        list.precursor_mz = self.list.precursor_mz;
        list.metadata = self.list.metadata;
        Ok(list)
    }
}

fn normalized_key(key: &str) -> String {
    key.trim()
        .chars()
        .filter(|c| !matches!(c, ' ' | '_'))
        .collect::<String>()
        .to_ascii_lowercase()
}

pub fn parse_msp(reader: impl BufRead) -> Result<Vec<PeakList>, MspError> {
    let mut out = Vec::new();
    let mut current: Option<Pending> = None;
    let mut last_line = 0;
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        last_line = line_no;
        let line = line?;
        let text = line.trim();
        if text.is_empty() {
            if let Some(p) = current.take() {
                out.push(p.finish(line_no)?);
            }
            continue;
        }
        let rec = current.get_or_insert_with(|| Pending {
            start_line: line_no,
            ..Pending::default()
        });
        if let Some(declared) = rec.declared {
            if rec.peaks.len() >= declared {
                return format_err(line_no, format!("more peaks than the declared {declared}"));
            }
            for chunk in text.split(';').map(str::trim).filter(|c| !c.is_empty()) {
                let mut fields = chunk.split_whitespace();
                let (Some(mz), Some(intensity)) = (fields.next(), fields.next()) else {
                    return format_err(line_no, format!("expected `mz intensity`, got {chunk:?}"));
                };
                let (Ok(mz), Ok(intensity)) = (mz.parse::<f64>(), intensity.parse::<f64>()) else {
                    if rec.peaks.len() < declared && chunk.contains(':') {
                        return format_err(
                            line_no,
                            format!("declared {declared} peaks but found {}", rec.peaks.len()),
                        );
                    }
                    return format_err(line_no, format!("unreadable peak {chunk:?}"));
                };
                if intensity < 0.0 {
                    return format_err(line_no, format!("negative intensity {intensity}"));
                }
                if mz.is_nan() || mz <= 0.0 {
                    return format_err(line_no, format!("non-positive m/z {mz}"));
                }
                rec.peaks.push(Peak { mz, intensity });
            }
            continue;
        }
        let Some((key, value)) = text.split_once(':') else {
            return format_err(line_no, format!("expected `Key: Value`, got {text:?}"));
        };
        let value = value.trim().to_string();
        match normalized_key(key).as_str() {
            "numpeaks" => {
                let Ok(n) = value.parse::<usize>() else {
                    return format_err(line_no, format!("bad peak count {value:?}"));
                };
                rec.declared = Some(n);
            }
            "name" => rec.list.name = Some(value),
            "id" | "db#" => rec.list.compound_id = Some(value),
            "precursormz" => {
                let Ok(mz) = value.parse::<f64>() else {
                    return format_err(line_no, format!("bad precursor m/z {value:?}"));
                };
                rec.list.precursor_mz = Some(mz);
            }
            _ => rec.list.metadata.push((key.trim().to_string(), value)),
        }
    }
    if let Some(p) = current.take() {
        out.push(p.finish(last_line)?);
    }
    Ok(out)
}

/// Serializes records; m/z with 4 decimals, intensities with 2.
pub fn write_msp(records: &[PeakList]) -> String {
    let mut out = String::new();
    for (i, rec) in records.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        if let Some(name) = &rec.name {
            writeln!(out, "Name: {name}").unwrap();
        }
        if let Some(id) = &rec.compound_id {
            writeln!(out, "ID: {id}").unwrap();
        }
        if let Some(mz) = rec.precursor_mz {
            writeln!(out, "PrecursorMZ: {mz:.4}").unwrap();
        }
        for (k, v) in &rec.metadata {
            writeln!(out, "{k}: {v}").unwrap();
        }
        writeln!(out, "Num Peaks: {}", rec.len()).unwrap();
        for p in rec.peaks() {
            writeln!(out, "{:.4}\t{:.2}", p.mz, p.intensity).unwrap();
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reads_semicolon_pairs() {
        let text = "Name: benzene\nNum Peaks: 2\n77 100; 78 6\n";
        let recs = parse_msp(text.as_bytes()).unwrap();
        assert_eq!(recs.len(), 1);
        assert_eq!(recs[0].len(), 2);
        assert_eq!(recs[0].name.as_deref(), Some("benzene"));
        assert_eq!(recs[0].peaks()[1].intensity, 6.0);
    }

    #[test]
    fn count_mismatch_reports_line() {
        let text = "Name: x\nNum Peaks: 3\n77 100\n78 6\n\nName: y\nNum Peaks: 0\n";
        match parse_msp(text.as_bytes()) {
            Err(MspError::Format { line, message }) => {
                assert_eq!(line, 5);
                assert!(message.contains("declared 3"));
            }
            other => panic!("{other:?}"),
        }
        let text = "Name: x\nNum Peaks: 1\n77 100\n78 6\n";
        assert!(matches!(
            parse_msp(text.as_bytes()),
            Err(MspError::Format { line: 4, .. })
        ));
    }

    #[test]
    fn missing_count_and_negative_intensity() {
        let text = "Name: x\nFormula: C6H6\n\n";
        assert!(matches!(
            parse_msp(text.as_bytes()),
            Err(MspError::Format { line: 1, .. })
        ));
        let text = "Name: x\nNum Peaks: 1\n77 -1\n";
        assert!(matches!(
            parse_msp(text.as_bytes()),
            Err(MspError::Format { line: 3, .. })
        ));
    }

    #[test]
    fn unknown_headers_survive() {
        let text = "Name: x\nID: m7\nPrecursorMZ: 78.05\nFormula: C6H6\nComment: a: b\nNum Peaks: 1\n78 999\n";
        let recs = parse_msp(text.as_bytes()).unwrap();
        let r = &recs[0];
        assert_eq!(r.compound_id.as_deref(), Some("m7"));
        assert_eq!(r.precursor_mz, Some(78.05));
        assert_eq!(
            r.metadata,
            vec![("Formula".into(), "C6H6".into()), ("Comment".into(), "a: b".into())]
        );
        let again = parse_msp(write_msp(&recs).as_bytes()).unwrap();
        assert_eq!(again, recs);
    }

    #[test]
    fn two_record_round_trip() {
        let mut a = PeakList::from_pairs(&[(77.0391, 100.0), (78.047, 6.5)]).unwrap();
        a.name = Some("a".into());
        let mut b = PeakList::from_pairs(&[(31.0184, 999.0), (45.0335, 12.25), (46.0413, 0.5)]).unwrap();
        b.name = Some("b".into());
        b.compound_id = Some("id-b".into());
        let recs = vec![a, b];
        let text = write_msp(&recs);
        assert_eq!(parse_msp(text.as_bytes()).unwrap(), recs);
        assert!(text.contains("77.0391\t100.00\n"));
    }
}
