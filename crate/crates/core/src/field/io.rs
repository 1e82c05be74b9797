//! The `.pucp` binary field format.
//!
//! Layout: magic `PUCP1`, version byte, `u32` side length, four `f64`
//! (domain radius, embedding side, center re/im), dtype byte (0 real, 1
//! complex), then row-major little-endian samples. Samples outside the
//! support are written as NaN and read back as masked out.

use std::fs;
use std::io::Write;
use std::path::Path;

use num_complex::Complex64;

use super::grid::DiskGrid;
use super::sampled::{ComplexField, RealField};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 5] = b"PUCP1";
pub const VERSION: u8 = 0x01;
pub const EXTENSION: &str = "pucp";
const HEADER_LEN: usize = 5 + 1 + 4 + 4 * 8 + 1;

#[derive(Debug, Clone, PartialEq)]
pub enum AnyField {
    Real(RealField),
    Complex(ComplexField),
}

impl AnyField {
    pub fn grid(&self) -> &DiskGrid {
        match self {
            AnyField::Real(f) => f.grid(),
            AnyField::Complex(f) => f.grid(),
        }
    }
}

fn header(grid: &DiskGrid, dtype: u8) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN);
    out.extend_from_slice(MAGIC);
    out.push(VERSION);
    out.extend_from_slice(&(grid.n_per_side() as u32).to_le_bytes());
    for v in [
        grid.domain_radius(),
        grid.embed_side(),
        grid.center().re,
        grid.center().im,
    ] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out.push(dtype);
    out
}

pub fn encode(field: &AnyField) -> Vec<u8> {
    match field {
        AnyField::Real(f) => {
            let mut out = header(f.grid(), 0);
            for (k, &v) in f.samples().iter().enumerate() {
                let v = if f.mask()[k] { v } else { f64::NAN };
                out.extend_from_slice(&v.to_le_bytes());
            }
            out
        }
        AnyField::Complex(f) => {
            let mut out = header(f.grid(), 1);
            for (k, &v) in f.samples().iter().enumerate() {
                let (re, im) = if f.mask()[k] {
                    (v.re, v.im)
                } else {
                    (f64::NAN, f64::NAN)
                };
                out.extend_from_slice(&re.to_le_bytes());
                out.extend_from_slice(&im.to_le_bytes());
            }
            out
        }
    }
}

fn f64_at(bytes: &[u8], offset: usize) -> f64 {
    f64::from_le_bytes(bytes[offset..offset + 8].try_into().expect("8 bytes"))
}

pub fn decode(bytes: &[u8]) -> Result<AnyField> {
    if bytes.len() < 6 || &bytes[..5] != MAGIC {
        return Err(Error::Format("bad magic bytes".into()));
    }
    if bytes[5] != VERSION {
        return Err(Error::UnsupportedVersion(bytes[5]));
    }
    if bytes.len() < HEADER_LEN {
        return Err(Error::Format("truncated header".into()));
    }
    let n = u32::from_le_bytes(bytes[6..10].try_into().expect("4 bytes")) as usize;
    let grid = DiskGrid::with_center(
        n,
        f64_at(bytes, 10),
        f64_at(bytes, 18),
        Complex64::new(f64_at(bytes, 26), f64_at(bytes, 34)),
    )?;
    let dtype = bytes[42];
    let width = match dtype {
        0 => 8,
        1 => 16,
        other => return Err(Error::Format(format!("unknown dtype {other}"))),
    };
    let body = &bytes[HEADER_LEN..];
    if body.len() != grid.len() * width {
        return Err(Error::Format(format!(
            "expected {} sample bytes, found {}",
            grid.len() * width,
            body.len()
        )));
    }
    if dtype == 0 {
        let samples: Vec<f64> = (0..grid.len()).map(|k| f64_at(body, 8 * k)).collect();
        let mask = samples.iter().map(|v| v.is_finite()).collect();
        Ok(AnyField::Real(RealField::new(grid, samples, mask)?))
    } else {
        let samples: Vec<Complex64> = (0..grid.len())
            .map(|k| Complex64::new(f64_at(body, 16 * k), f64_at(body, 16 * k + 8)))
            .collect();
        let mask = samples
            .iter()
            .map(|v| v.re.is_finite() && v.im.is_finite())
            .collect();
        Ok(AnyField::Complex(ComplexField::new(grid, samples, mask)?))
    }
}

pub fn write_field(path: impl AsRef<Path>, field: &AnyField) -> Result<()> {
    let mut file = fs::File::create(path)?;
    file.write_all(&encode(field))?;
    Ok(())
}

pub fn read_field(path: impl AsRef<Path>) -> Result<AnyField> {
    decode(&fs::read(path)?)
}

pub fn read_real(path: impl AsRef<Path>) -> Result<RealField> {
    match read_field(path)? {
        AnyField::Real(f) => Ok(f),
        AnyField::Complex(_) => Err(Error::DtypeMismatch {
            expected: 0,
            found: 1,
        }),
    }
}

pub fn read_complex(path: impl AsRef<Path>) -> Result<ComplexField> {
    match read_field(path)? {
        AnyField::Complex(f) => Ok(f),
        AnyField::Real(_) => Err(Error::DtypeMismatch {
            expected: 1,
            found: 0,
        }),
    }
}
