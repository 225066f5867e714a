//! Artifact files. CSV columns are fixed and numbers use Rust's shortest
//! round-trip formatting; JSON objects have sorted keys.

use std::fs;
use std::path::{Path, PathBuf};

use serde_json::Value;
use wallperc::estimators::{TwoPointRow, TwoPointTable};

use crate::experiment::ClusterRow;
use crate::CliError;

pub const TWO_POINT_FILE: &str = "two_point.csv";
pub const SUMMARY_FILE: &str = "summary.json";
pub const CLUSTERS_FILE: &str = "clusters.csv";

pub const TWO_POINT_COLUMNS: [&str; 6] = ["target_id", "word_length", "successes", "trials", "tau_hat", "stderr"];
pub const CLUSTER_COLUMNS: [&str; 3] = ["sample", "boundary_components", "sizes"];

pub fn two_point_csv(t: &TwoPointTable) -> Result<String, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let err = |e: csv::Error| CliError::Data(e.to_string());
    w.write_record(TWO_POINT_COLUMNS).map_err(err)?;
    for r in &t.rows {
        w.write_record([
            r.target_id.clone(),
            r.word_length.to_string(),
            r.successes.to_string(),
            r.trials.to_string(),
            r.tau_hat.to_string(),
            r.stderr.to_string(),
        ])
        .map_err(err)?;
    }
    finish(w)
}

pub fn clusters_csv(rows: &[ClusterRow]) -> Result<String, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let err = |e: csv::Error| CliError::Data(e.to_string());
    w.write_record(CLUSTER_COLUMNS).map_err(err)?;
    for r in rows {
        let sizes: Vec<String> = r.sizes.iter().map(u32::to_string).collect();
        w.write_record([r.sample.to_string(), r.boundary_components.to_string(), sizes.join(";")])
            .map_err(err)?;
    }
    finish(w)
}

fn finish(w: csv::Writer<Vec<u8>>) -> Result<String, CliError> {
    let bytes = w.into_inner().map_err(|e| CliError::Data(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| CliError::Data(e.to_string()))
}

/// Reads a table written by [`two_point_csv`].
pub fn read_two_point_csv(text: &str) -> Result<TwoPointTable, CliError> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let header = r.headers().map_err(|e| CliError::Data(e.to_string()))?.clone();
    if header.iter().ne(TWO_POINT_COLUMNS) {
        return Err(CliError::Data(format!("expected columns {}", TWO_POINT_COLUMNS.join(","))));
    }
    let mut rows = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| CliError::Data(e.to_string()))?;
        let field = |k: usize| rec.get(k).unwrap_or_default();
        let bad = |k: usize| CliError::Data(format!("row {}: bad `{}` value `{}`", i + 1, TWO_POINT_COLUMNS[k], field(k)));
        rows.push(TwoPointRow {
            target_id: field(0).to_string(),
            vertex: None,
            word_length: field(1).parse().map_err(|_| bad(1))?,
            successes: field(2).parse().map_err(|_| bad(2))?,
            trials: field(3).parse().map_err(|_| bad(3))?,
            tau_hat: field(4).parse().map_err(|_| bad(4))?,
            stderr: field(5).parse().map_err(|_| bad(5))?,
        });
    }
    let samples = rows.iter().map(|r| r.trials).max().unwrap_or(0);
    Ok(TwoPointTable {
        rows,
        sampler: "file".into(),
        seed: 0,
        samples,
    })
}

pub fn json_text(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("JSON values always serialize");
    s.push('\n');
    s
}

/// Collects artifacts in memory and writes them in one go.
#[derive(Debug, Default)]
pub struct Artifacts {
    pub files: Vec<(String, String)>,
}

impl Artifacts {
    pub fn add(&mut self, name: &str, contents: String) {
        self.files.push((name.to_string(), contents));
    }

    pub fn get(&self, name: &str) -> Option<&str> {
        self.files.iter().find(|(n, _)| n == name).map(|(_, c)| c.as_str())
    }

    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>, CliError> {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        self.files
            .iter()
            .map(|(name, contents)| {
                let path = dir.join(name);
                fs::write(&path, contents).map_err(|e| CliError::io(&path, e))?;
                Ok(path)
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_point_round_trip() {
        let t = TwoPointTable {
            rows: vec![
                TwoPointRow::from_counts("e", Some(0), 0, 10, 10),
                TwoPointRow::from_counts("[e:1 a:1]@a", Some(3), 3, 3, 10),
            ],
            sampler: "x".into(),
            seed: 1,
            samples: 10,
        };
        let text = two_point_csv(&t).unwrap();
        assert!(text.starts_with("target_id,word_length,successes,trials,tau_hat,stderr\n"));
        assert!(text.contains("[e:1 a:1]@a,3,3,10,0.3,"));
        let back = read_two_point_csv(&text).unwrap();
        for (a, b) in back.rows.iter().zip(&t.rows) {
            assert_eq!((a.word_length, a.tau_hat, a.stderr), (b.word_length, b.tau_hat, b.stderr));
        }
        assert!(read_two_point_csv("a,b\n1,2\n").is_err());
    }

    #[test]
    fn json_keys_are_sorted() {
        let v = serde_json::json!({"zeta": 1, "alpha": {"b": 2, "a": 1}});
        let s = json_text(&v);
        assert!(s.find("alpha").unwrap() < s.find("zeta").unwrap());
        assert!(s.find("\"a\"").unwrap() < s.find("\"b\"").unwrap());
    }

    #[test]
    fn cluster_rows() {
        let rows = [ClusterRow {
            sample: 0,
            boundary_components: 2,
            sizes: vec![30, 21],
        }];
        assert_eq!(clusters_csv(&rows).unwrap(), "sample,boundary_components,sizes\n0,2,30;21\n");
    }
}
