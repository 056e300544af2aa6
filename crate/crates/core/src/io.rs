//! Field files and trajectory export.
//!
//! A `.psf` file is one line of JSON header followed by little-endian `f64`
//! samples, row-major, with `(re, im)` interleaved when the field is complex.

use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dynamics::Trajectory;
use crate::error::{Error, Result};
use crate::grid::{Domain, Field, GridSpec, PhaseGrid};

pub const PSF_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Psf,
    Csv,
    Json,
}

impl Format {
    pub fn extension(&self) -> &'static str {
        match self {
            Format::Psf => "psf",
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

impl std::str::FromStr for Format {
    type Err = Error;
    fn from_str(s: &str) -> Result<Format> {
        match s {
            "psf" => Ok(Format::Psf),
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(Error::Config(format!("unknown format '{other}' (psf, csv, json)"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PsfHeader {
    pub format: String,
    pub version: u32,
    pub grid: GridSpec,
    pub domain: Domain,
    pub complex: bool,
}

fn is_complex(field: &Field) -> bool {
    field.domain() == Domain::Characteristic || field.values().iter().any(|v| v.im != 0.0)
}

pub fn write_psf_to<W: Write>(field: &Field, mut w: W) -> Result<()> {
    let header = PsfHeader {
        format: "psf".into(),
        version: PSF_VERSION,
        grid: *field.grid().spec(),
        domain: field.domain(),
        complex: is_complex(field),
    };
    serde_json::to_writer(&mut w, &header)?;
    w.write_all(b"\n")?;
    for v in field.values() {
        w.write_all(&v.re.to_le_bytes())?;
        if header.complex {
            w.write_all(&v.im.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_psf(field: &Field, path: &Path) -> Result<()> {
    write_psf_to(field, BufWriter::new(fs::File::create(path)?))
}

pub fn read_psf_from<R: Read>(r: R) -> Result<Field> {
    let mut r = BufReader::new(r);
    let mut line = String::new();
    r.read_line(&mut line)?;
    let header: PsfHeader = serde_json::from_str(line.trim_end())?;
    if header.format != "psf" || header.version != PSF_VERSION {
        return Err(Error::Config(format!(
            "unsupported field file {} v{}",
            header.format, header.version
        )));
    }
    let grid = PhaseGrid::new(header.grid)?;
    let per = if header.complex { 2 } else { 1 };
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    if bytes.len() != grid.len() * per * 8 {
        return Err(Error::Io(std::io::Error::new(
            std::io::ErrorKind::UnexpectedEof,
            format!("expected {} samples, found {} bytes", grid.len() * per, bytes.len()),
        )));
    }
    let floats: Vec<f64> = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect();
    let values = if header.complex {
        floats.chunks_exact(2).map(|c| Complex64::new(c[0], c[1])).collect()
    } else {
        floats.into_iter().map(|v| Complex64::new(v, 0.0)).collect()
    };
    Field::new(&grid, header.domain, values)
}

pub fn read_psf(path: &Path) -> Result<Field> {
    read_psf_from(fs::File::open(path)?)
}

/// `q,p,value` rows (or `k,y,re,im` for complex fields) at 17 significant digits.
pub fn write_csv_to<W: Write>(field: &Field, mut w: W) -> Result<()> {
    let g = field.grid();
    let complex = is_complex(field);
    let (a, b) = match field.domain() {
        Domain::PositionMomentum => ("q", "p"),
        Domain::Characteristic => ("k", "y"),
    };
    if complex {
        writeln!(w, "{a},{b},re,im")?;
    } else {
        writeln!(w, "{a},{b},value")?;
    }
    for i in 0..g.n_q() {
        for j in 0..g.n_p() {
            let (x, y) = match field.domain() {
                Domain::PositionMomentum => (g.q(i), g.p(j)),
                Domain::Characteristic => (g.k(i), g.y(j)),
            };
            let v = field.at(i, j);
            if complex {
                writeln!(w, "{x:.16e},{y:.16e},{:.16e},{:.16e}", v.re, v.im)?;
            } else {
                writeln!(w, "{x:.16e},{y:.16e},{:.16e}", v.re)?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_csv(field: &Field, path: &Path) -> Result<()> {
    write_csv_to(field, BufWriter::new(fs::File::create(path)?))
}

#[derive(Serialize)]
struct FieldJson<'a> {
    grid: &'a GridSpec,
    domain: Domain,
    re: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    im: Option<Vec<f64>>,
}

pub fn write_json(field: &Field, path: &Path) -> Result<()> {
    let doc = FieldJson {
        grid: field.grid().spec(),
        domain: field.domain(),
        re: field.real_parts(),
        im: is_complex(field).then(|| field.values().iter().map(|v| v.im).collect()),
    };
    let mut w = BufWriter::new(fs::File::create(path)?);
    serde_json::to_writer(&mut w, &doc)?;
    w.flush()?;
    Ok(())
}

/// Writes `field` as `<stem>.<ext>` in `dir` and returns the path.
pub fn write_field(field: &Field, dir: &Path, stem: &str, format: Format) -> Result<PathBuf> {
    let path = dir.join(format!("{stem}.{}", format.extension()));
    match format {
        Format::Psf => write_psf(field, &path)?,
        Format::Csv => write_csv(field, &path)?,
        Format::Json => write_json(field, &path)?,
    }
    Ok(path)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TrajectoryManifest {
    pub dt: f64,
    pub times: Vec<f64>,
    pub frames: Vec<String>,
    /// Monitor values at every step, not only at stored frames.
    pub monitors: std::collections::BTreeMap<String, Vec<f64>>,
}

/// Writes one file per frame plus `manifest.json` into `dir`.
pub fn export_trajectory(traj: &Trajectory, dir: &Path, format: Format) -> Result<TrajectoryManifest> {
    fs::create_dir_all(dir)?;
    let mut frames = Vec::with_capacity(traj.frames.len());
    for (n, f) in traj.frames.iter().enumerate() {
        let path = write_field(f, dir, &format!("frame_{n:05}"), format)?;
        frames.push(path.file_name().expect("file name").to_string_lossy().into_owned());
    }
    let manifest = TrajectoryManifest {
        dt: traj.dt,
        times: traj.times.clone(),
        frames,
        monitors: traj.monitor_series.clone(),
    };
    fs::write(dir.join("manifest.json"), serde_json::to_string_pretty(&manifest)?)?;
    Ok(manifest)
}
