//! Reading and writing counts files:
//! `{"num_qubits": N, "shots": s, "counts": {"<bitstring>": int, ...}}`.

use std::collections::BTreeMap;
use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::bitstring::{BitString, CountsDistribution};
use crate::error::{Error, Result};

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CountsDoc {
    num_qubits: usize,
    shots: u64,
    counts: BTreeMap<String, u64>,
}

fn parse_doc(doc: CountsDoc) -> Result<CountsDistribution> {
    if doc.num_qubits == 0 {
        return Err(Error::Counts("num_qubits must be at least 1".into()));
    }
    let mut entries = Vec::with_capacity(doc.counts.len());
    for (key, count) in doc.counts {
        if key.len() != doc.num_qubits {
            return Err(Error::Counts(format!(
                "key {key:?} has length {}, expected {}",
                key.len(),
                doc.num_qubits
            )));
        }
        if count == 0 {
            return Err(Error::Counts(format!("count for {key} must be positive")));
        }
        entries.push((key.parse::<BitString>()?, count));
    }
    let counts = CountsDistribution::new(doc.num_qubits, entries)?;
    if counts.shots() != doc.shots {
        return Err(Error::Counts(format!(
            "counts sum to {}, but shots is {}",
            counts.shots(),
            doc.shots
        )));
    }
    Ok(counts)
}

pub fn read_counts(reader: impl Read) -> Result<CountsDistribution> {
    let doc: CountsDoc = serde_json::from_reader(reader).map_err(|e| Error::Counts(e.to_string()))?;
    parse_doc(doc)
}

pub fn read_counts_file(path: impl AsRef<Path>) -> Result<CountsDistribution> {
    read_counts(fs::File::open(path)?)
}

/// Pretty JSON with keys in lexicographic order, followed by a newline.
pub fn counts_to_json(counts: &CountsDistribution) -> String {
    let doc = CountsDoc {
        num_qubits: counts.width(),
        shots: counts.shots(),
        counts: counts.iter().map(|(k, v)| (k.to_string(), v)).collect(),
    };
    let mut s = serde_json::to_string_pretty(&doc).expect("counts serialize");
    s.push('\n');
    s
}

pub fn write_counts(counts: &CountsDistribution, mut writer: impl Write) -> Result<()> {
    writer.write_all(counts_to_json(counts).as_bytes())?;
    Ok(())
}

pub fn write_counts_file(counts: &CountsDistribution, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, counts_to_json(counts))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let c = CountsDistribution::from_text([("01", 3u64), ("00", 5), ("11", 2)]).unwrap();
        let json = counts_to_json(&c);
        assert!(json.find("\"00\"").unwrap() < json.find("\"01\"").unwrap());
        let back = read_counts(json.as_bytes()).unwrap();
        assert_eq!(back, c);
        assert_eq!(counts_to_json(&back), json);
    }

    #[test]
    fn rejects_bad_documents() {
        let cases = [
            r#"{"num_qubits": 2, "shots": 3, "counts": {"0": 3}}"#,
            r#"{"num_qubits": 2, "shots": 3, "counts": {"00": 0, "01": 3}}"#,
            r#"{"num_qubits": 2, "shots": 4, "counts": {"00": 3}}"#,
            r#"{"num_qubits": 2, "shots": 3, "counts": {"0x": 3}}"#,
            r#"{"num_qubits": 2, "shots": 0, "counts": {}}"#,
            r#"{"num_qubits": 0, "shots": 0, "counts": {}}"#,
            r#"{"num_qubits": 1, "shots": 1, "counts": {"0": 1}, "extra": 1}"#,
            r#"{"num_qubits": 1, "shots": 1, "counts": {"0": -1}}"#,
            r#"not json"#,
        ];
        for case in cases {
            let err = read_counts(case.as_bytes()).unwrap_err();
            assert!(err.is_validation(), "{case}: {err}");
        }
    }
}
