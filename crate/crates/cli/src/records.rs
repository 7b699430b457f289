//! Flat result records, one type per command, and their file formats.
//!
//! Every record is a flat struct so the same value can be written as a
//! JSON array or as CSV rows and read back unchanged. Floats that may be
//! infinite go through [`gwht_core::serde_ext::float`].

use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::RunError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExponentRecord {
    /// Blocklength of the corrections; empty for the asymptotic form.
    pub n: Option<u64>,
    pub r0: f64,
    pub r1: f64,
    pub r2: f64,
    pub rt0: f64,
    pub rt1: f64,
    pub rt2: f64,
    pub detector: u8,
    #[serde(with = "gwht_core::serde_ext::float")]
    pub e0: f64,
    #[serde(with = "gwht_core::serde_ext::float")]
    pub e1: f64,
    #[serde(with = "gwht_core::serde_ext::float")]
    pub e2: f64,
    #[serde(with = "gwht_core::serde_ext::float")]
    pub theta_star: f64,
    pub attained_by: String,
    #[serde(with = "gwht_core::serde_ext::float")]
    pub e1_divergence: f64,
    #[serde(with = "gwht_core::serde_ext::float")]
    pub e2_divergence: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegionRecord {
    pub r0: f64,
    pub r1: f64,
    pub r2: f64,
    pub rt0: f64,
    pub rt1: f64,
    pub rt2: f64,
    /// `rate`, `tilde`, `binning1` or `binning2`.
    pub block: String,
    pub label: String,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
    pub satisfied: bool,
    pub interpreted: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OsrbRecord {
    pub n: u64,
    /// Per-source rates, `;`-separated.
    pub rates: String,
    pub bins: String,
    pub trials: u64,
    pub mean_tv: f64,
    pub stderr: f64,
    #[serde(with = "gwht_core::serde_ext::float")]
    pub measured_exponent: f64,
    #[serde(with = "gwht_core::serde_ext::float")]
    pub measured_exponent_stderr: f64,
    pub zeta: f64,
    pub zeta_negative: bool,
    /// Conditional exponent, when side information is configured.
    pub aleph: Option<f64>,
    /// Mean TV over every binning, when requested.
    pub exhaustive_tv: Option<f64>,
    /// `measured_exponent >= zeta - 3 * measured_exponent_stderr`.
    pub bound_holds: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimulationRecord {
    pub n: u64,
    pub r0: f64,
    pub r1: f64,
    pub r2: f64,
    pub rt0: f64,
    pub rt1: f64,
    pub rt2: f64,
    pub delta_prime: f64,
    pub hypothesis: u8,
    pub detector: u8,
    pub trials: u64,
    pub rate: f64,
    pub stderr: f64,
    pub aborts: u64,
    pub exhausted: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EquivocationRecord {
    pub n: u64,
    pub r0: f64,
    pub r1: f64,
    pub r2: f64,
    pub rt0: f64,
    pub rt1: f64,
    pub rt2: f64,
    pub source: u8,
    pub mode: String,
    pub value: f64,
    pub h_s: f64,
    pub privacy_bound: f64,
    pub trials: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DualityRecord {
    pub n: u64,
    pub r0: f64,
    pub r1: f64,
    pub r2: f64,
    pub rt0: f64,
    pub rt1: f64,
    pub rt2: f64,
    /// Exact TV between the transcript laws of modes A and B.
    pub tv: f64,
}

/// Output of one command.
#[derive(Clone, Debug, PartialEq)]
pub enum Records {
    Exponents(Vec<ExponentRecord>),
    Region(Vec<RegionRecord>),
    Osrb(Vec<OsrbRecord>),
    Simulate(Vec<SimulationRecord>),
    Equivocation(Vec<EquivocationRecord>),
    Duality(Vec<DualityRecord>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
}

impl Format {
    pub fn from_path(path: &Path) -> Result<Self, RunError> {
        match path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref() {
            Some("json") => Ok(Format::Json),
            Some("csv") => Ok(Format::Csv),
            _ => Err(RunError::Format(format!(
                "cannot tell the format of {}; use a .json or .csv extension",
                path.display()
            ))),
        }
    }
}

pub fn to_string<T: Serialize>(rows: &[T], format: Format) -> Result<String, RunError> {
    match format {
        Format::Json => Ok(serde_json::to_string_pretty(rows)? + "\n"),
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            for r in rows {
                w.serialize(r)?;
            }
            let bytes = w.into_inner().map_err(|e| RunError::Format(e.to_string()))?;
            Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
        }
    }
}

pub fn from_str<T: DeserializeOwned>(text: &str, format: Format) -> Result<Vec<T>, RunError> {
    match format {
        Format::Json => Ok(serde_json::from_str(text)?),
        Format::Csv => {
            let mut r = csv::Reader::from_reader(text.as_bytes());
            Ok(r.deserialize().collect::<Result<Vec<T>, _>>()?)
        }
    }
}

pub fn read_file<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, RunError> {
    from_str(&fs::read_to_string(path)?, Format::from_path(path)?)
}

impl Records {
    pub fn render(&self, format: Format) -> Result<String, RunError> {
        match self {
            Records::Exponents(r) => to_string(r, format),
            Records::Region(r) => to_string(r, format),
            Records::Osrb(r) => to_string(r, format),
            Records::Simulate(r) => to_string(r, format),
            Records::Equivocation(r) => to_string(r, format),
            Records::Duality(r) => to_string(r, format),
        }
    }

    pub fn write(&self, path: &Path) -> Result<(), RunError> {
        fs::write(path, self.render(Format::from_path(path)?)?)?;
        Ok(())
    }

    /// Column-aligned table of the records, for the terminal.
    pub fn summary(&self) -> Result<String, RunError> {
        let text = self.render(Format::Csv)?;
        let mut r = csv::ReaderBuilder::new().has_headers(false).from_reader(text.as_bytes());
        let rows: Vec<Vec<String>> = r
            .records()
            .map(|rec| rec.map(|rec| rec.iter().map(short).collect()))
            .collect::<Result<_, _>>()?;
        let cols = rows.first().map_or(0, Vec::len);
        let widths: Vec<usize> = (0..cols)
            .map(|c| rows.iter().map(|r| r[c].len()).max().unwrap_or(0))
            .collect();
        let mut out = String::new();
        for row in &rows {
            let cells: Vec<String> = row.iter().zip(&widths).map(|(v, w)| format!("{v:>w$}")).collect();
            out.push_str(cells.join("  ").trim_end());
            out.push('\n');
        }
        Ok(out)
    }
}

/// Floats rounded to 6 decimals for display.
fn short(cell: &str) -> String {
    match cell.parse::<f64>() {
        Ok(v) if v.is_finite() && (cell.contains('.') || cell.contains('e')) => {
            format!("{v:.6}").trim_end_matches('0').trim_end_matches('.').to_string()
        }
        _ => cell.to_string(),
    }
}
