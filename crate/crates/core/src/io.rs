//! The `CDFT-FLD v1` field format and the density-pair manifest.
//!
//! A field file starts with one line of JSON describing the grid, followed by
//! the samples in row-major cell order with the components of a cell adjacent.
//! The body is CSV text (one row per cell) or raw little-endian `f64`s.

use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::density::{DensityPair, Provenance, Tolerances};
use crate::error::{Error, Result};
use crate::grid::{ComplexField, GridSpec, ScalarField, VectorField};

pub const FIELD_FORMAT: &str = "CDFT-FLD v1";
pub const PAIR_FORMAT: &str = "CDFT-PAIR v1";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Encoding {
    Csv,
    Binary,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldHeader {
    pub format: String,
    pub dim: usize,
    pub shape: Vec<usize>,
    pub spacing: Vec<f64>,
    pub origin: Vec<f64>,
    pub components: usize,
    pub encoding: Encoding,
}

impl FieldHeader {
    fn new(grid: &GridSpec, components: usize, encoding: Encoding) -> Self {
        FieldHeader {
            format: FIELD_FORMAT.to_string(),
            dim: grid.dim(),
            shape: grid.shape().to_vec(),
            spacing: grid.spacing().to_vec(),
            origin: grid.origin().to_vec(),
            components,
            encoding,
        }
    }

    pub fn grid(&self) -> Result<GridSpec> {
        if self.shape.len() != self.dim {
            return Err(Error::Format(format!(
                "header dim {} does not match {} shape entries",
                self.dim,
                self.shape.len()
            )));
        }
        GridSpec::new(&self.shape, &self.spacing, &self.origin)
            .map_err(|e| Error::Format(e.to_string()))
    }
}

/// A decoded field file: header plus flat interleaved samples.
#[derive(Clone, Debug, PartialEq)]
pub struct RawField {
    pub grid: GridSpec,
    pub components: usize,
    pub values: Vec<f64>,
}

pub fn write_raw<W: Write>(
    mut w: W,
    grid: &GridSpec,
    components: usize,
    values: &[f64],
    encoding: Encoding,
) -> Result<()> {
    if components == 0 || values.len() != grid.len() * components {
        return Err(Error::LengthMismatch {
            expected: grid.len() * components,
            found: values.len(),
        });
    }
    let header = FieldHeader::new(grid, components, encoding);
    serde_json::to_writer(&mut w, &header)?;
    w.write_all(b"\n")?;
    match encoding {
        Encoding::Csv => {
            let mut cw = csv::WriterBuilder::new()
                .has_headers(false)
                .from_writer(&mut w);
            for row in values.chunks(components) {
                cw.write_record(row.iter().map(|v| v.to_string()))?;
            }
            cw.flush()?;
        }
        Encoding::Binary => {
            let mut buf = Vec::with_capacity(values.len() * 8);
            for v in values {
                buf.extend_from_slice(&v.to_le_bytes());
            }
            w.write_all(&buf)?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_raw<R: Read>(r: R) -> Result<RawField> {
    let mut r = BufReader::new(r);
    let mut line = String::new();
    r.read_line(&mut line)?;
    let header: FieldHeader = serde_json::from_str(line.trim_end())
        .map_err(|e| Error::Format(format!("bad field header: {e}")))?;
    if header.format != FIELD_FORMAT {
        return Err(Error::Format(format!("unknown format {:?}", header.format)));
    }
    let grid = header.grid()?;
    let c = header.components;
    if c == 0 {
        return Err(Error::Format("zero components".into()));
    }
    let expected = grid.len() * c;
    let values = match header.encoding {
        Encoding::Csv => {
            let mut cr = csv::ReaderBuilder::new()
                .has_headers(false)
                .trim(csv::Trim::All)
                .from_reader(r);
            let mut values = Vec::with_capacity(expected);
            for rec in cr.records() {
                let rec = rec?;
                if rec.len() != c {
                    return Err(Error::Format(format!(
                        "row has {} columns, expected {c}",
                        rec.len()
                    )));
                }
                for s in rec.iter() {
                    values.push(
                        s.parse::<f64>()
                            .map_err(|e| Error::Format(format!("bad number {s:?}: {e}")))?,
                    );
                }
            }
            values
        }
        Encoding::Binary => {
            let mut bytes = Vec::new();
            r.read_to_end(&mut bytes)?;
            if bytes.len() != expected * 8 {
                return Err(Error::Format(format!(
                    "binary body has {} bytes, expected {}",
                    bytes.len(),
                    expected * 8
                )));
            }
            bytes
                .chunks_exact(8)
                .map(|b| f64::from_le_bytes(b.try_into().expect("chunk of 8")))
                .collect()
        }
    };
    if values.len() != expected {
        return Err(Error::Format(format!(
            "body has {} values, expected {expected}",
            values.len()
        )));
    }
    Ok(RawField {
        grid,
        components: c,
        values,
    })
}

fn require_components(raw: &RawField, c: usize) -> Result<()> {
    if raw.components != c {
        return Err(Error::Format(format!(
            "expected {c} components, file has {}",
            raw.components
        )));
    }
    Ok(())
}

pub fn write_scalar<W: Write>(w: W, f: &ScalarField, enc: Encoding) -> Result<()> {
    write_raw(w, f.grid(), 1, f.values(), enc)
}

pub fn write_vector<W: Write>(w: W, f: &VectorField, enc: Encoding) -> Result<()> {
    write_raw(w, f.grid(), f.dim(), f.values(), enc)
}

/// Complex samples as two components, real then imaginary.
pub fn write_complex<W: Write>(w: W, f: &ComplexField, enc: Encoding) -> Result<()> {
    let flat: Vec<f64> = f.values().iter().flat_map(|z| [z.re, z.im]).collect();
    write_raw(w, f.grid(), 2, &flat, enc)
}

pub fn read_scalar<R: Read>(r: R) -> Result<ScalarField> {
    let raw = read_raw(r)?;
    require_components(&raw, 1)?;
    ScalarField::new(raw.grid, raw.values)
}

pub fn read_vector<R: Read>(r: R) -> Result<VectorField> {
    let raw = read_raw(r)?;
    require_components(&raw, raw.grid.dim())?;
    VectorField::new(raw.grid, raw.values)
}

pub fn read_complex<R: Read>(r: R) -> Result<ComplexField> {
    let raw = read_raw(r)?;
    require_components(&raw, 2)?;
    let values = raw
        .values
        .chunks_exact(2)
        .map(|c| Complex64::new(c[0], c[1]))
        .collect();
    ComplexField::new(raw.grid, values)
}

/// Writes `bytes` to a sibling temporary file and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    let name = path
        .file_name()
        .ok_or_else(|| Error::Config(format!("not a file path: {}", path.display())))?;
    let tmp_name = format!(".{}.tmp{}", name.to_string_lossy(), std::process::id());
    let tmp = match dir {
        Some(d) => d.join(tmp_name),
        None => PathBuf::from(tmp_name),
    };
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

pub fn save_scalar(path: &Path, f: &ScalarField, enc: Encoding) -> Result<()> {
    let mut buf = Vec::new();
    write_scalar(&mut buf, f, enc)?;
    write_atomic(path, &buf)
}

pub fn save_vector(path: &Path, f: &VectorField, enc: Encoding) -> Result<()> {
    let mut buf = Vec::new();
    write_vector(&mut buf, f, enc)?;
    write_atomic(path, &buf)
}

pub fn save_complex(path: &Path, f: &ComplexField, enc: Encoding) -> Result<()> {
    let mut buf = Vec::new();
    write_complex(&mut buf, f, enc)?;
    write_atomic(path, &buf)
}

pub fn load_scalar(path: &Path) -> Result<ScalarField> {
    read_scalar(fs::File::open(path)?)
}

pub fn load_vector(path: &Path) -> Result<VectorField> {
    read_vector(fs::File::open(path)?)
}

pub fn load_complex(path: &Path) -> Result<ComplexField> {
    read_complex(fs::File::open(path)?)
}

/// JSON manifest tying a density file and a current file together.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairManifest {
    pub format: String,
    pub n: usize,
    pub provenance: Provenance,
    pub rho: PathBuf,
    pub jp: PathBuf,
    #[serde(default)]
    pub tolerances: Tolerances,
}

/// Writes `<stem>.rho.fld`, `<stem>.jp.fld` and the manifest `<stem>.json`
/// next to each other; returns the manifest path.
pub fn save_pair(dir: &Path, stem: &str, p: &DensityPair, n: usize, tol: &Tolerances, enc: Encoding) -> Result<PathBuf> {
    let rho_name = format!("{stem}.rho.fld");
    let jp_name = format!("{stem}.jp.fld");
    save_scalar(&dir.join(&rho_name), &p.rho, enc)?;
    save_vector(&dir.join(&jp_name), &p.jp, enc)?;
    let manifest = PairManifest {
        format: PAIR_FORMAT.to_string(),
        n,
        provenance: p.provenance,
        rho: PathBuf::from(rho_name),
        jp: PathBuf::from(jp_name),
        tolerances: *tol,
    };
    let path = dir.join(format!("{stem}.json"));
    let mut text = serde_json::to_vec_pretty(&manifest)?;
    text.push(b'\n');
    write_atomic(&path, &text)?;
    Ok(path)
}

/// Loads a pair from its manifest; relative field paths resolve against the
/// manifest's directory. The stored provenance is not trusted: pairs come back
/// raw unless they were written by the solver, and must be re-validated.
pub fn load_pair(manifest_path: &Path) -> Result<(DensityPair, PairManifest)> {
    let text = fs::read_to_string(manifest_path)?;
    let m: PairManifest = serde_json::from_str(&text)
        .map_err(|e| Error::Format(format!("bad pair manifest: {e}")))?;
    if m.format != PAIR_FORMAT {
        return Err(Error::Format(format!("unknown manifest format {:?}", m.format)));
    }
    let base = manifest_path.parent().unwrap_or(Path::new("."));
    let rho = load_scalar(&base.join(&m.rho))?;
    let jp = load_vector(&base.join(&m.jp))?;
    let mut p = DensityPair::new(rho, jp)?;
    if m.provenance == Provenance::SolverAN {
        p.provenance = Provenance::SolverAN;
    }
    Ok((p, m))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_is_first_line() {
        let g = GridSpec::line(3, 0.0, 3.0).unwrap();
        let f = ScalarField::new(g, vec![1.0, 0.1, -2.5e-300]).unwrap();
        let mut buf = Vec::new();
        write_scalar(&mut buf, &f, Encoding::Csv).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            r#"{"format":"CDFT-FLD v1","dim":1,"shape":[3],"spacing":[1.0],"origin":[0.0],"components":1,"encoding":"csv"}"#
        );
        assert_eq!(lines.next().unwrap(), "1");
        assert_eq!(lines.next().unwrap(), "0.1");
        assert_eq!(read_scalar(&buf[..]).unwrap(), f);
    }

    #[test]
    fn binary_round_trip_and_length_check() {
        let g = GridSpec::cube(3, -1.0, 1.0).unwrap();
        let u = VectorField::from_fn(g, |x| [x[0], x[1] * 1e-7, std::f64::consts::PI]);
        let mut buf = Vec::new();
        write_vector(&mut buf, &u, Encoding::Binary).unwrap();
        assert_eq!(read_vector(&buf[..]).unwrap(), u);
        buf.pop();
        assert!(matches!(read_vector(&buf[..]), Err(Error::Format(_))));
    }

    #[test]
    fn component_mismatch_is_format_error() {
        let g = GridSpec::cube(3, -1.0, 1.0).unwrap();
        let mut buf = Vec::new();
        write_scalar(&mut buf, &ScalarField::zeros(g), Encoding::Csv).unwrap();
        assert!(matches!(read_vector(&buf[..]), Err(Error::Format(_))));
    }
}
