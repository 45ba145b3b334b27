//! Field files, sweep records, curve files and metadata sidecars.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::relax::TraceEntry;
use crate::spectral::{Grid, SpectralField};

const MAGIC: &[u8; 4] = b"PFCF";
const VERSION: u16 = 1;

/// Raw contents of a PFCF file. The format carries no axis kinds.
#[derive(Clone, Debug, PartialEq)]
pub struct FieldFile {
    pub counts: Vec<usize>,
    pub samples: Vec<f64>,
}

impl FieldFile {
    pub fn from_field(field: &SpectralField) -> Self {
        Self {
            counts: field.grid().counts().to_vec(),
            samples: field.values().to_vec(),
        }
    }

    /// Attach the samples to `grid`, which must have the stored counts.
    pub fn into_field_on(self, grid: Grid) -> Result<SpectralField> {
        if grid.counts() != self.counts.as_slice() {
            return Err(Error::Format(format!(
                "stored counts {:?} do not match grid {:?}",
                self.counts,
                grid.counts()
            )));
        }
        SpectralField::new(grid, self.samples)
    }

    /// Interpret the samples on the periodic torus.
    pub fn into_periodic_field(self) -> Result<SpectralField> {
        let grid = Grid::periodic(&self.counts)?;
        self.into_field_on(grid)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(8 + 4 * self.counts.len() + 8 * self.samples.len());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.push(self.counts.len() as u8);
        out.push(0);
        for &c in &self.counts {
            out.extend_from_slice(&(c as u32).to_le_bytes());
        }
        for &s in &self.samples {
            out.extend_from_slice(&s.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 8 || &bytes[..4] != MAGIC {
            return Err(Error::Format("missing PFCF magic".into()));
        }
        let version = u16::from_le_bytes([bytes[4], bytes[5]]);
        if version != VERSION {
            return Err(Error::Format(format!("unsupported version {version}")));
        }
        let rank = bytes[6] as usize;
        if !(1..=3).contains(&rank) {
            return Err(Error::Format(format!("rank {rank} outside 1..=3")));
        }
        if bytes[7] != 0 {
            return Err(Error::Format("reserved byte is not zero".into()));
        }
        let header = 8 + 4 * rank;
        if bytes.len() < header {
            return Err(Error::Format("truncated header".into()));
        }
        let counts: Vec<usize> = bytes[8..header]
            .chunks_exact(4)
            .map(|c| u32::from_le_bytes(c.try_into().unwrap()) as usize)
            .collect();
        let len: usize = counts.iter().product();
        let body = &bytes[header..];
        if body.len() != 8 * len {
            return Err(Error::Format(format!(
                "expected {} sample bytes, found {}",
                8 * len,
                body.len()
            )));
        }
        let samples = body
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Ok(Self { counts, samples })
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut bytes = Vec::new();
        File::open(path)
            .and_then(|mut f| f.read_to_end(&mut bytes))
            .map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }
}

pub fn write_field(path: impl AsRef<Path>, field: &SpectralField) -> Result<()> {
    FieldFile::from_field(field).write(path)
}

/// Read a field onto the periodic torus with the stored counts.
pub fn read_field(path: impl AsRef<Path>) -> Result<SpectralField> {
    FieldFile::read(path)?.into_periodic_field()
}

/// One evaluated parameter point of a sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub model: String,
    pub m: f64,
    pub a: Option<f64>,
    pub potential: Option<String>,
    pub alpha: Option<f64>,
    pub gamma: Option<f64>,
    #[serde(rename = "N")]
    pub dim: usize,
    pub verdict: String,
    pub margin: f64,
    pub pn_lower: Option<f64>,
    pub pn_upper: Option<f64>,
    pub threshold: Option<f64>,
    pub witness_path: Option<String>,
    pub seed: u64,
    /// Seconds; the only field allowed to differ between identical runs.
    pub wallclock: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CurveKind {
    Stability,
    Global,
    /// Parameters where neither certificate applies.
    Undetermined,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub m: f64,
    pub a_lo: f64,
    pub a_hi: f64,
    pub kind: CurveKind,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Ndjson,
    Csv,
}

impl Format {
    pub fn extension(&self) -> &'static str {
        match self {
            Format::Ndjson => "ndjson",
            Format::Csv => "csv",
        }
    }
}

/// Write one JSON object per line.
pub fn write_ndjson<T: Serialize, W: Write>(mut out: W, records: &[T]) -> Result<()> {
    for r in records {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n").map_err(|e| Error::io("<ndjson>", e))?;
    }
    Ok(())
}

pub fn read_ndjson<T: DeserializeOwned, R: BufRead>(input: R) -> Result<Vec<T>> {
    let mut out = Vec::new();
    for line in input.lines() {
        let line = line.map_err(|e| Error::io("<ndjson>", e))?;
        if !line.trim().is_empty() {
            out.push(serde_json::from_str(&line)?);
        }
    }
    Ok(out)
}

/// CSV with a header row taken from the field names of `T`.
pub fn write_csv<T: Serialize, W: Write>(out: W, records: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in records {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}

pub fn read_csv<T: DeserializeOwned, R: Read>(input: R) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_reader(input);
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}

/// Header-only CSV for an empty record set.
fn csv_header_only<W: Write>(mut out: W, header: &str) -> Result<()> {
    writeln!(out, "{header}").map_err(|e| Error::io("<csv>", e))
}

pub fn write_records<T: Serialize>(
    path: impl AsRef<Path>,
    records: &[T],
    format: Format,
) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    match format {
        Format::Ndjson => write_ndjson(&mut out, records)?,
        Format::Csv => write_csv(&mut out, records)?,
    }
    out.flush().map_err(|e| Error::io(path, e))
}

/// Curve file; always carries the header `m,a_lo,a_hi,kind`.
pub fn write_curve_csv<W: Write>(out: W, points: &[CurvePoint]) -> Result<()> {
    if points.is_empty() {
        return csv_header_only(out, "m,a_lo,a_hi,kind");
    }
    write_csv(out, points)
}

/// Energy trace with header `step,energy,dt`.
pub fn write_trace_csv<W: Write>(out: W, trace: &[TraceEntry]) -> Result<()> {
    if trace.is_empty() {
        return csv_header_only(out, "step,energy,dt");
    }
    write_csv(out, trace)
}

/// Provenance stored next to every output file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub command_line: Vec<String>,
    pub seed: u64,
    pub grid: Vec<usize>,
    pub band: Option<usize>,
    pub version: String,
}

impl Metadata {
    pub fn new(command_line: Vec<String>, seed: u64, grid: Vec<usize>, band: Option<usize>) -> Self {
        Self {
            command_line,
            seed,
            grid,
            band,
            version: env!("CARGO_PKG_VERSION").to_string(),
        }
    }
}

/// `out.csv` → `out.csv.meta.json`.
pub fn sidecar_path(path: impl AsRef<Path>) -> PathBuf {
    let mut s = path.as_ref().as_os_str().to_owned();
    s.push(".meta.json");
    PathBuf::from(s)
}

pub fn write_sidecar(path: impl AsRef<Path>, meta: &Metadata) -> Result<PathBuf> {
    let side = sidecar_path(path);
    let mut text = serde_json::to_string_pretty(meta)?;
    text.push('\n');
    std::fs::write(&side, text).map_err(|e| Error::io(&side, e))?;
    Ok(side)
}

pub fn read_sidecar(path: impl AsRef<Path>) -> Result<Metadata> {
    let side = sidecar_path(path);
    let file = File::open(&side).map_err(|e| Error::io(&side, e))?;
    Ok(serde_json::from_reader(BufReader::new(file))?)
}
