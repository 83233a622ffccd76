//! Diagnostics CSV, JSON reports and binary field snapshots.

use std::fmt::Write as _;
use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use serde::Serialize;

use crate::diagnostics::{DiagnosticsRow, CSV_COLUMNS};
use crate::error::{AdmError, Result};
use crate::field::SpectralScalar;
use crate::grid::TorusGrid;
use crate::model::State;

/// Crate name and version, recorded in every output.
pub const VERSION: &str = concat!(env!("CARGO_PKG_NAME"), " ", env!("CARGO_PKG_VERSION"));

pub const SNAPSHOT_MAGIC: &[u8; 4] = b"ADM2";
pub const SNAPSHOT_VERSION: u32 = 1;

/// Ordered `(key, value)` lines echoed at the top of every artifact.
pub type Metadata = Vec<(String, String)>;

/// 17 significant digits; round-trips every `f64`.
pub fn format_real(x: f64) -> String {
    format!("{x:.16e}")
}

/// `# key = value` lines.
pub fn metadata_header(meta: &Metadata) -> String {
    let mut out = String::new();
    for (k, v) in meta {
        let _ = writeln!(out, "# {k} = {v}");
    }
    out
}

/// Diagnostics CSV text: metadata header, column line, one line per row.
pub fn diagnostics_csv(meta: &Metadata, rows: &[DiagnosticsRow]) -> String {
    let mut out = metadata_header(meta);
    out.push_str(&CSV_COLUMNS.join(","));
    out.push('\n');
    for row in rows {
        let cells: Vec<String> = row.values().iter().map(|v| v.map(format_real).unwrap_or_default()).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

/// Generic CSV with the metadata header.
pub fn table_csv(meta: &Metadata, columns: &[&str], rows: &[Vec<String>]) -> String {
    let mut out = metadata_header(meta);
    out.push_str(&columns.join(","));
    out.push('\n');
    for row in rows {
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

#[derive(Serialize)]
struct Report<'a, T: Serialize> {
    metadata: serde_json::Map<String, serde_json::Value>,
    #[serde(flatten)]
    body: &'a T,
}

/// Pretty JSON with a leading `metadata` object; keys follow declaration order.
pub fn json_report<T: Serialize>(meta: &Metadata, body: &T) -> Result<String> {
    let mut metadata = serde_json::Map::new();
    for (k, v) in meta {
        metadata.insert(k.clone(), serde_json::Value::String(v.clone()));
    }
    let text = serde_json::to_string_pretty(&Report { metadata, body })
        .map_err(|e| AdmError::InvalidArgument(format!("serialization failed: {e}")))?;
    Ok(text + "\n")
}

/// Binary snapshot: magic, version (u32 LE), `L` (f64 LE), `M` (u32 LE),
/// then `v₁`, `v₂`, `ϑ` as row-major `M × M` f64 LE arrays.
pub fn snapshot_bytes(state: &State) -> Vec<u8> {
    let grid = state.grid();
    let m = grid.modes();
    let mut out = Vec::with_capacity(20 + 3 * 8 * m * m);
    out.extend_from_slice(SNAPSHOT_MAGIC);
    out.extend_from_slice(&SNAPSHOT_VERSION.to_le_bytes());
    out.extend_from_slice(&grid.side_length().to_le_bytes());
    out.extend_from_slice(&(m as u32).to_le_bytes());
    for field in [state.v.component(0), state.v.component(1), &state.theta] {
        for x in field.to_samples() {
            out.extend_from_slice(&x.to_le_bytes());
        }
    }
    out
}

/// Decoded snapshot contents.
#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    pub side_length: f64,
    pub modes: usize,
    pub v1: Vec<f64>,
    pub v2: Vec<f64>,
    pub theta: Vec<f64>,
}

impl Snapshot {
    /// Rebuilds the state; the velocity is re-projected.
    pub fn to_state(&self) -> Result<State> {
        let grid = TorusGrid::new(self.side_length, self.modes)?;
        let v = crate::field::SpectralVector::from_samples(&grid, &self.v1, &self.v2)?.leray_project();
        State::new(v, SpectralScalar::from_samples(&grid, &self.theta)?)
    }
}

pub fn parse_snapshot(bytes: &[u8]) -> Result<Snapshot> {
    let bad = |msg: &str| AdmError::InvalidArgument(format!("malformed snapshot: {msg}"));
    if bytes.len() < 20 || &bytes[..4] != SNAPSHOT_MAGIC {
        return Err(bad("missing ADM2 header"));
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().expect("4 bytes"));
    if version != SNAPSHOT_VERSION {
        return Err(bad(&format!("unsupported version {version}")));
    }
    let side_length = f64::from_le_bytes(bytes[8..16].try_into().expect("8 bytes"));
    let modes = u32::from_le_bytes(bytes[16..20].try_into().expect("4 bytes")) as usize;
    let n = modes * modes;
    if bytes.len() != 20 + 24 * n {
        return Err(bad("length does not match M"));
    }
    let array = |i: usize| -> Vec<f64> {
        bytes[20 + 8 * n * i..20 + 8 * n * (i + 1)]
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect()
    };
    Ok(Snapshot {
        side_length,
        modes,
        v1: array(0),
        v2: array(1),
        theta: array(2),
    })
}

pub fn write_file(path: &Path, contents: &[u8]) -> Result<()> {
    let mut f = fs::File::create(path)?;
    f.write_all(contents)?;
    Ok(())
}

pub fn read_snapshot(path: &Path) -> Result<Snapshot> {
    let mut bytes = Vec::new();
    fs::File::open(path)?.read_to_end(&mut bytes)?;
    parse_snapshot(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::init::{initial_state, FieldSpec};
    use std::f64::consts::PI;

    #[test]
    fn reals_round_trip() {
        for x in [0.1, 1.0 / 3.0, -2.5e-300, 6.02e23] {
            assert_eq!(format_real(x).parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn empty_fields_stay_empty() {
        let row = DiagnosticsRow {
            t: 1.0,
            ..Default::default()
        };
        let csv = diagnostics_csv(&vec![("a".into(), "b".into())], &[row]);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "# a = b");
        assert_eq!(lines[1], CSV_COLUMNS.join(","));
        assert!(lines[2].ends_with(",,,"));
        assert_eq!(lines[2].split(',').count(), 12);
    }

    #[test]
    fn snapshot_round_trip() {
        let grid = TorusGrid::new(2.0 * PI, 8).unwrap();
        let spec = FieldSpec::RandomBand {
            seed: 4,
            spectrum_slope: 1.0,
            max_ksq: 10.0,
            amplitude: 1.0,
        };
        let s = initial_state(&grid, &spec).unwrap();
        let bytes = snapshot_bytes(&s);
        assert_eq!(&bytes[..4], b"ADM2");
        assert_eq!(bytes.len(), 20 + 3 * 8 * 64);
        let back = parse_snapshot(&bytes).unwrap().to_state().unwrap();
        assert!(back.max_abs_difference(&s) < 1e-15);
        assert!(parse_snapshot(&bytes[..30]).is_err());
    }
}
