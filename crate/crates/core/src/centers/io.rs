//! M3D files.
//!
//! Little-endian binary. Header: magic `M3D\0`, `u32` version (1), geometry
//! (`f64` azimuth, depression, frequency, `u8` polarization index), the
//! detection configuration, `u64` scatterer count. Each record: `u8` kind,
//! `u8` coherent flag, `u8` directivity tag, `f64` position ×3, amplitude
//! re/im, extents ×2, directivity axes ×6 and exponent. All values are
//! stored at full precision, so a round trip is exact.

use std::fmt::Write as _;
use std::io::{Read, Write};

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use num_complex::Complex64;

use super::{DetectionConfig, Directivity, EffectKind, M3dModel, Scatterer, VisibilityMode};
use crate::scene::{AcquisitionGeometry, Polarization, Vec3};
use crate::{Error, Result};

const MAGIC: &[u8; 4] = b"M3D\0";
const VERSION: u32 = 1;

fn io(e: std::io::Error) -> Error {
    Error::Format {
        kind: "m3d",
        reason: e.to_string(),
    }
}

fn bad(reason: impl Into<String>) -> Error {
    Error::Format {
        kind: "m3d",
        reason: reason.into(),
    }
}

fn put(out: &mut impl Write, v: f64) -> Result<()> {
    out.write_f64::<LittleEndian>(v).map_err(io)
}

fn get(input: &mut impl Read) -> Result<f64> {
    input.read_f64::<LittleEndian>().map_err(io)
}

fn put_vec(out: &mut impl Write, v: &Vec3) -> Result<()> {
    put(out, v.x)?;
    put(out, v.y)?;
    put(out, v.z)
}

fn get_vec(input: &mut impl Read) -> Result<Vec3> {
    Ok(Vec3::new(get(input)?, get(input)?, get(input)?))
}

pub fn write_m3d<W: Write>(mut out: W, model: &M3dModel) -> Result<()> {
    let w = &mut out;
    w.write_all(MAGIC).map_err(io)?;
    w.write_u32::<LittleEndian>(VERSION).map_err(io)?;
    let g = &model.geometry;
    put(w, g.azimuth_deg)?;
    put(w, g.depression_deg)?;
    put(w, g.frequency_hz)?;
    w.write_u8(g.polarization.index() as u8).map_err(io)?;

    let c = &model.config;
    for v in [
        c.specular_tolerance_deg,
        c.orthogonality_tolerance_deg,
        c.min_effective_area_m2,
        c.coplanar_tolerance_deg,
        c.min_visible_fraction,
        c.trihedral_cone_deg,
        c.trihedral_exponent,
        c.diffuse_cell_m,
        c.incidence_exponent,
    ] {
        put(w, v)?;
    }
    w.write_u32::<LittleEndian>(c.buffer_resolution)
        .map_err(io)?;
    w.write_u8(match c.visibility {
        VisibilityMode::DepthBuffer => 0,
        VisibilityMode::ExactClipping => 1,
    })
    .map_err(io)?;

    w.write_u64::<LittleEndian>(model.scatterers.len() as u64)
        .map_err(io)?;
    for s in &model.scatterers {
        let kind = EffectKind::ALL.iter().position(|k| *k == s.kind).unwrap() as u8;
        let (tag, a0, a1, exponent) = match s.directivity {
            Directivity::Isotropic => (0u8, Vec3::zeros(), Vec3::zeros(), 0.0),
            Directivity::Sinc { axes } => (1, axes[0], axes[1], 0.0),
            Directivity::Dihedral { fold, bisector } => (2, fold, bisector, 0.0),
            Directivity::Cone { axis, exponent } => (3, axis, Vec3::zeros(), exponent),
        };
        w.write_u8(kind).map_err(io)?;
        w.write_u8(s.coherent as u8).map_err(io)?;
        w.write_u8(tag).map_err(io)?;
        put_vec(w, &s.position)?;
        put(w, s.amplitude.re)?;
        put(w, s.amplitude.im)?;
        put(w, s.extent.0)?;
        put(w, s.extent.1)?;
        put_vec(w, &a0)?;
        put_vec(w, &a1)?;
        put(w, exponent)?;
    }
    Ok(())
}

pub fn read_m3d<R: Read>(mut input: R) -> Result<M3dModel> {
    let r = &mut input;
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic).map_err(io)?;
    if &magic != MAGIC {
        return Err(bad("bad magic"));
    }
    let version = r.read_u32::<LittleEndian>().map_err(io)?;
    if version != VERSION {
        return Err(bad(format!("unsupported version {version}")));
    }
    let (az, dep, freq) = (get(r)?, get(r)?, get(r)?);
    let pol = *Polarization::ALL
        .get(r.read_u8().map_err(io)? as usize)
        .ok_or_else(|| bad("bad polarization"))?;
    let geometry = AcquisitionGeometry::new(az, dep, freq, pol)?;

    let mut f = [0.0; 9];
    for v in &mut f {
        *v = get(r)?;
    }
    let buffer_resolution = r.read_u32::<LittleEndian>().map_err(io)?;
    let visibility = match r.read_u8().map_err(io)? {
        0 => VisibilityMode::DepthBuffer,
        1 => VisibilityMode::ExactClipping,
        other => return Err(bad(format!("bad visibility mode {other}"))),
    };
    let config = DetectionConfig {
        specular_tolerance_deg: f[0],
        orthogonality_tolerance_deg: f[1],
        min_effective_area_m2: f[2],
        coplanar_tolerance_deg: f[3],
        min_visible_fraction: f[4],
        trihedral_cone_deg: f[5],
        trihedral_exponent: f[6],
        diffuse_cell_m: f[7],
        incidence_exponent: f[8],
        buffer_resolution,
        visibility,
    };

    let count = r.read_u64::<LittleEndian>().map_err(io)?;
    let mut scatterers = Vec::with_capacity(count.min(1 << 20) as usize);
    for _ in 0..count {
        let kind = *EffectKind::ALL
            .get(r.read_u8().map_err(io)? as usize)
            .ok_or_else(|| bad("bad effect kind"))?;
        let coherent = r.read_u8().map_err(io)? != 0;
        let tag = r.read_u8().map_err(io)?;
        let position = get_vec(r)?;
        let amplitude = Complex64::new(get(r)?, get(r)?);
        let extent = (get(r)?, get(r)?);
        let a0 = get_vec(r)?;
        let a1 = get_vec(r)?;
        let exponent = get(r)?;
        let directivity = match tag {
            0 => Directivity::Isotropic,
            1 => Directivity::Sinc { axes: [a0, a1] },
            2 => Directivity::Dihedral {
                fold: a0,
                bisector: a1,
            },
            3 => Directivity::Cone { axis: a0, exponent },
            other => return Err(bad(format!("bad directivity tag {other}"))),
        };
        scatterers.push(Scatterer {
            kind,
            position,
            amplitude,
            extent,
            directivity,
            coherent,
        });
    }
    Ok(M3dModel {
        scatterers,
        geometry,
        config,
    })
}

/// Human-readable summary: geometry, counts per kind and the ten strongest
/// scatterers.
pub fn summary(model: &M3dModel) -> String {
    let g = &model.geometry;
    let mut s = String::new();
    let _ = writeln!(s, "azimuth_deg: {}", g.azimuth_deg);
    let _ = writeln!(s, "depression_deg: {}", g.depression_deg);
    let _ = writeln!(s, "frequency_hz: {}", g.frequency_hz);
    let _ = writeln!(s, "polarization: {}", g.polarization);
    let _ = writeln!(s, "scatterers: {}", model.scatterers.len());
    let _ = writeln!(s, "counts:");
    for kind in EffectKind::ALL {
        let _ = writeln!(s, "  {}: {}", kind.name(), model.count(kind));
    }
    let mut order: Vec<usize> = (0..model.scatterers.len()).collect();
    order.sort_by(|&a, &b| {
        let (x, y) = (&model.scatterers[a], &model.scatterers[b]);
        y.amplitude
            .norm()
            .total_cmp(&x.amplitude.norm())
            .then(a.cmp(&b))
    });
    let _ = writeln!(s, "strongest:");
    for &i in order.iter().take(10) {
        let sc = &model.scatterers[i];
        let p = sc.position;
        let _ = writeln!(
            s,
            "  - {{index: {i}, kind: {}, rcs_dbsm: {:.2}, position: [{:.3}, {:.3}, {:.3}]}}",
            sc.kind.name(),
            crate::to_db(sc.amplitude.norm_sqr()),
            p.x,
            p.y,
            p.z
        );
    }
    s
}
