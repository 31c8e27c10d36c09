//! Binary contribution dump.
//!
//! Little-endian. Header: magic `SBRC`, `u32` version (1), `u32` channel
//! count (4), `u64` record count, `f64` wavelength m, `f64` launch-plane
//! distance m. Each record: `f32` re/im for `HH, HV, VH, VV`, `f32` path
//! length, range and cross-range, then `i32` bounce count, first facet id
//! and last facet id (56 bytes). Only the first and last facet of each
//! chain survive a round trip.

use std::io::{Read, Write};

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use num_complex::Complex64;
use smallvec::smallvec;

use super::RayContribution;
use crate::{Error, Result};

const MAGIC: &[u8; 4] = b"SBRC";
const VERSION: u32 = 1;
const CHANNELS: u32 = 4;

#[derive(Debug, Clone, PartialEq)]
pub struct ContributionDump {
    pub wavelength: f64,
    pub plane_distance: f64,
    pub contributions: Vec<RayContribution>,
}

fn io(e: std::io::Error) -> Error {
    Error::Format {
        kind: "contribution dump",
        reason: e.to_string(),
    }
}

pub fn write_contributions<W: Write>(
    mut out: W,
    wavelength: f64,
    plane_distance: f64,
    contributions: &[RayContribution],
) -> Result<()> {
    out.write_all(MAGIC).map_err(io)?;
    out.write_u32::<LittleEndian>(VERSION).map_err(io)?;
    out.write_u32::<LittleEndian>(CHANNELS).map_err(io)?;
    out.write_u64::<LittleEndian>(contributions.len() as u64)
        .map_err(io)?;
    out.write_f64::<LittleEndian>(wavelength).map_err(io)?;
    out.write_f64::<LittleEndian>(plane_distance).map_err(io)?;
    for c in contributions {
        for a in &c.amplitudes {
            out.write_f32::<LittleEndian>(a.re as f32).map_err(io)?;
            out.write_f32::<LittleEndian>(a.im as f32).map_err(io)?;
        }
        for v in [c.path_length, c.range, c.cross_range] {
            out.write_f32::<LittleEndian>(v as f32).map_err(io)?;
        }
        out.write_i32::<LittleEndian>(c.bounces as i32)
            .map_err(io)?;
        out.write_i32::<LittleEndian>(c.first_facet() as i32)
            .map_err(io)?;
        out.write_i32::<LittleEndian>(c.last_facet() as i32)
            .map_err(io)?;
    }
    Ok(())
}

pub fn read_contributions<R: Read>(mut input: R) -> Result<ContributionDump> {
    let mut magic = [0u8; 4];
    input.read_exact(&mut magic).map_err(io)?;
    if &magic != MAGIC {
        return Err(Error::Format {
            kind: "contribution dump",
            reason: "bad magic".into(),
        });
    }
    let version = input.read_u32::<LittleEndian>().map_err(io)?;
    if version != VERSION {
        return Err(Error::Format {
            kind: "contribution dump",
            reason: format!("unsupported version {version}"),
        });
    }
    let channels = input.read_u32::<LittleEndian>().map_err(io)?;
    if channels != CHANNELS {
        return Err(Error::Format {
            kind: "contribution dump",
            reason: format!("expected 4 channels, found {channels}"),
        });
    }
    let count = input.read_u64::<LittleEndian>().map_err(io)?;
    let wavelength = input.read_f64::<LittleEndian>().map_err(io)?;
    let plane_distance = input.read_f64::<LittleEndian>().map_err(io)?;
    let mut contributions = Vec::with_capacity(count.min(1 << 24) as usize);
    for _ in 0..count {
        let mut amplitudes = [Complex64::new(0.0, 0.0); 4];
        for a in &mut amplitudes {
            let re = input.read_f32::<LittleEndian>().map_err(io)?;
            let im = input.read_f32::<LittleEndian>().map_err(io)?;
            *a = Complex64::new(re as f64, im as f64);
        }
        let path_length = input.read_f32::<LittleEndian>().map_err(io)? as f64;
        let range = input.read_f32::<LittleEndian>().map_err(io)? as f64;
        let cross_range = input.read_f32::<LittleEndian>().map_err(io)? as f64;
        let bounces = input.read_i32::<LittleEndian>().map_err(io)?;
        let first = input.read_i32::<LittleEndian>().map_err(io)?;
        let last = input.read_i32::<LittleEndian>().map_err(io)?;
        if bounces < 1 || first < 0 || last < 0 {
            return Err(Error::Format {
                kind: "contribution dump",
                reason: "negative bounce count or facet id".into(),
            });
        }
        contributions.push(RayContribution {
            amplitudes,
            path_length,
            range,
            cross_range,
            bounces: bounces as u32,
            facets: if bounces == 1 {
                smallvec![first as u32]
            } else {
                smallvec![first as u32, last as u32]
            },
        });
    }
    Ok(ContributionDump {
        wavelength,
        plane_distance,
        contributions,
    })
}
