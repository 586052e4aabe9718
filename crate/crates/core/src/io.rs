//! Matrix files, record files and atomic writes.
//!
//! Matrix files hold one or more blocks, each a `dim <r> <c>` header followed
//! by `r` lines of `c` whitespace-separated complex entries written `a+bi`
//! with `e`-notation reals. Blank lines and `#` comments are ignored.
//!
//! Record files are CSV (a `# config: <json>` line, then a header row) or
//! JSON (`{"config": ..., "records": [...]}`).

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::error::{Error, Result};
use crate::qlinalg::ComplexMatrix;
use crate::rbsim::FidelityRecord;

const CONFIG_PREFIX: &str = "# config: ";

/// `a+bi` with shortest round-trip `e`-notation parts.
pub fn format_complex(z: Complex64) -> String {
    format!("{:e}{:+e}i", z.re, z.im)
}

/// Accepts `a`, `bi`, `a+bi`, `a-bi`, `i`, `-i`, with optional whitespace.
pub fn parse_complex(text: &str) -> Result<Complex64> {
    let s: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    let bad = || Error::Parse(format!("bad complex number `{text}`"));
    if s.is_empty() {
        return Err(bad());
    }
    let Some(body) = s.strip_suffix('i') else {
        return s.parse::<f64>().map(|re| Complex64::new(re, 0.0)).map_err(|_| bad());
    };
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&i| matches!(bytes[i], b'+' | b'-') && !matches!(bytes[i - 1], b'e' | b'E'));
    let (re_text, im_text) = match split {
        Some(i) => (&body[..i], &body[i..]),
        None => ("", body),
    };
    let re = if re_text.is_empty() {
        0.0
    } else {
        re_text.parse::<f64>().map_err(|_| bad())?
    };
    let im = match im_text {
        "" | "+" => 1.0,
        "-" => -1.0,
        t => t.parse::<f64>().map_err(|_| bad())?,
    };
    Ok(Complex64::new(re, im))
}

pub fn format_matrices(mats: &[ComplexMatrix]) -> String {
    let mut out = String::new();
    for m in mats {
        let _ = writeln!(out, "dim {} {}", m.rows(), m.cols());
        for r in 0..m.rows() {
            let row: Vec<String> = m.row(r).iter().map(|&z| format_complex(z)).collect();
            let _ = writeln!(out, "{}", row.join(" "));
        }
    }
    out
}

pub fn parse_matrices(text: &str) -> Result<Vec<ComplexMatrix>> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());
    let mut out = Vec::new();
    while let Some((lineno, header)) = lines.next() {
        let parts: Vec<&str> = header.split_whitespace().collect();
        let (rows, cols) = match parts.as_slice() {
            ["dim", r, c] => (
                r.parse::<usize>().map_err(|_| Error::Parse(format!("line {lineno}: bad row count")))?,
                c.parse::<usize>().map_err(|_| Error::Parse(format!("line {lineno}: bad column count")))?,
            ),
            _ => return Err(Error::Parse(format!("line {lineno}: expected `dim <r> <c>`, got `{header}`"))),
        };
        if rows == 0 || cols == 0 {
            return Err(Error::Parse(format!("line {lineno}: empty matrix")));
        }
        let mut data = Vec::with_capacity(rows * cols);
        for _ in 0..rows {
            let (ln, line) = lines
                .next()
                .ok_or_else(|| Error::Parse(format!("matrix at line {lineno}: expected {rows} rows")))?;
            let entries: Vec<Complex64> = line.split_whitespace().map(parse_complex).collect::<Result<_>>()?;
            if entries.len() != cols {
                return Err(Error::Parse(format!("line {ln}: expected {cols} entries, found {}", entries.len())));
            }
            data.extend(entries);
        }
        out.push(ComplexMatrix::from_vec(rows, cols, data)?);
    }
    if out.is_empty() {
        return Err(Error::Parse("no matrices found".into()));
    }
    Ok(out)
}

pub fn read_matrices(path: &Path) -> Result<Vec<ComplexMatrix>> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Parse(format!("cannot read matrix file {}: {e}", path.display())))?;
    parse_matrices(&text)
}

pub fn write_matrices(path: &Path, mats: &[ComplexMatrix]) -> Result<()> {
    write_atomic(path, format_matrices(mats).as_bytes())
}

/// Writes through a temporary file in the target directory, then renames.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

impl std::str::FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            other => Err(Error::Parse(format!("unknown output format `{other}`"))),
        }
    }
}

/// Records together with the configuration that produced them.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecordFile {
    pub config: Option<ExperimentConfig>,
    pub records: Vec<FidelityRecord>,
}

pub fn records_to_csv(config: Option<&ExperimentConfig>, records: &[FidelityRecord]) -> Result<String> {
    let mut out = String::new();
    if let Some(cfg) = config {
        out.push_str(CONFIG_PREFIX);
        out.push_str(&serde_json::to_string(cfg)?);
        out.push('\n');
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in records {
        w.serialize(r).map_err(csv_err)?;
    }
    if records.is_empty() {
        w.write_record(["mode", "m", "repetition", "fidelity", "k", "seed_stream"])
            .map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    out.push_str(std::str::from_utf8(&bytes).expect("csv output is utf-8"));
    Ok(out)
}

pub fn records_to_json(config: Option<&ExperimentConfig>, records: &[FidelityRecord]) -> Result<String> {
    let file = RecordFile {
        config: config.cloned(),
        records: records.to_vec(),
    };
    Ok(serde_json::to_string_pretty(&file)? + "\n")
}

pub fn parse_records(text: &str) -> Result<RecordFile> {
    if text.trim_start().starts_with('{') {
        return serde_json::from_str(text).map_err(|e| Error::Parse(format!("record JSON: {e}")));
    }
    let mut config = None;
    for line in text.lines() {
        if let Some(json) = line.strip_prefix(CONFIG_PREFIX) {
            config = Some(serde_json::from_str(json).map_err(|e| Error::Parse(format!("config header: {e}")))?);
        }
    }
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let records = reader
        .deserialize()
        .collect::<std::result::Result<Vec<FidelityRecord>, _>>()
        .map_err(|e| Error::Parse(format!("record CSV: {e}")))?;
    Ok(RecordFile { config, records })
}

pub fn read_records(path: &Path) -> Result<RecordFile> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Parse(format!("cannot read record file {}: {e}", path.display())))?;
    parse_records(&text)
}

pub fn write_records(
    path: &Path,
    format: OutputFormat,
    config: Option<&ExperimentConfig>,
    records: &[FidelityRecord],
) -> Result<()> {
    let text = match format {
        OutputFormat::Csv => records_to_csv(config, records)?,
        OutputFormat::Json => records_to_json(config, records)?,
    };
    write_atomic(path, text.as_bytes())
}

fn csv_err(e: csv::Error) -> Error {
    Error::Parse(format!("csv: {e}"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rbsim::Mode;
    use proptest::prelude::*;

    #[test]
    fn complex_forms() {
        let cases = [
            ("1", (1.0, 0.0)),
            ("-2.5e-3", (-2.5e-3, 0.0)),
            ("0.5i", (0.0, 0.5)),
            ("i", (0.0, 1.0)),
            ("-i", (0.0, -1.0)),
            ("1e-3-2e-4i", (1e-3, -2e-4)),
            (" 1.5 + 2i ", (1.5, 2.0)),
            ("7.071067811865476e-1+0e0i", (FRAC, 0.0)),
            ("1E+2-1E-2i", (100.0, -0.01)),
            ("3-i", (3.0, -1.0)),
        ];
        const FRAC: f64 = std::f64::consts::FRAC_1_SQRT_2;
        for (text, (re, im)) in cases {
            assert_eq!(parse_complex(text).unwrap(), Complex64::new(re, im), "{text}");
        }
        for bad in ["", "x", "1+", "1+2j", "1..2i", "--1"] {
            assert!(parse_complex(bad).is_err(), "{bad}");
        }
    }

    proptest! {
        #[test]
        fn complex_round_trip(re in proptest::num::f64::NORMAL | proptest::num::f64::ZERO,
                              im in proptest::num::f64::NORMAL | proptest::num::f64::ZERO) {
            let z = Complex64::new(re, im);
            prop_assert_eq!(parse_complex(&format_complex(z)).unwrap(), z);
        }

        #[test]
        fn record_fidelities_round_trip(fids in proptest::collection::vec(0.0f64..1.0, 1..20)) {
            let recs: Vec<FidelityRecord> = fids
                .iter()
                .enumerate()
                .map(|(i, &f)| FidelityRecord { mode: Mode::Standard, m: i + 1, repetition: 0, fidelity: f, k: 3, seed_stream: i as u64 })
                .collect();
            prop_assert_eq!(&parse_records(&records_to_json(None, &recs).unwrap()).unwrap().records, &recs);
            prop_assert_eq!(&parse_records(&records_to_csv(None, &recs).unwrap()).unwrap().records, &recs);
        }
    }

    #[test]
    fn matrix_round_trip_and_errors() {
        let a = ComplexMatrix::from_fn(2, 3, |r, c| Complex64::new(r as f64 - 0.25, c as f64 * 1e-17));
        let b = ComplexMatrix::identity(2);
        let text = format_matrices(&[a.clone(), b.clone()]);
        assert_eq!(parse_matrices(&text).unwrap(), vec![a, b]);
        let commented = "# identity\ndim 1 1\n  1+0i  # one\n";
        assert_eq!(parse_matrices(commented).unwrap()[0], ComplexMatrix::identity(1));
        for bad in ["", "dim 2 2\n1 0\n", "dim 1 2\n1\n", "size 1 1\n1\n", "dim 0 1\n", "dim 1 1\nq\n"] {
            assert!(matches!(parse_matrices(bad), Err(Error::Parse(_))), "{bad:?}");
        }
    }

    fn sample() -> Vec<FidelityRecord> {
        (0..3)
            .map(|i| FidelityRecord {
                mode: Mode::Coherent,
                m: 2 * i + 1,
                repetition: i,
                fidelity: 0.1 + i as f64 / 3.0,
                k: 20,
                seed_stream: 1 << 56 | i as u64,
            })
            .collect()
    }

    #[test]
    fn record_round_trips() {
        let cfg = ExperimentConfig::default();
        let recs = sample();
        let csv = records_to_csv(Some(&cfg), &recs).unwrap();
        assert!(csv.lines().nth(1).unwrap().starts_with("mode,m,repetition,fidelity,k,seed_stream"));
        let back = parse_records(&csv).unwrap();
        assert_eq!(back.records, recs);
        assert_eq!(back.config.as_ref(), Some(&cfg));
        let json = records_to_json(Some(&cfg), &recs).unwrap();
        assert_eq!(parse_records(&json).unwrap(), back);
        let empty = records_to_csv(None, &[]).unwrap();
        assert!(parse_records(&empty).unwrap().records.is_empty());
        assert!(parse_records("mode,m\nfoo,1\n").is_err());
    }

    #[test]
    fn atomic_write_replaces() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("out.csv");
        write_atomic(&p, b"one").unwrap();
        write_atomic(&p, b"two").unwrap();
        assert_eq!(fs::read_to_string(&p).unwrap(), "two");
        assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 1);
    }
}
