//! Similarity between two magnitude chips.

use std::path::Path;

use sarsim_core::imaging::read_chip;
use serde::Serialize;

use crate::{ProdError, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Similarity {
    /// Pearson correlation after aligning the brightest pixels; pixels
    /// shifted in from outside the chip count as zero.
    pub ncc: f64,
    /// One chip is constant, so the correlation is undefined and reported
    /// as 0.
    pub degenerate: bool,
    /// `(rows, cols)` shift applied to the second chip.
    pub shift: (i64, i64),
    /// Mean power of the first chip over the second per quadrant (top-left,
    /// top-right, bottom-left, bottom-right) in dB; `None` where either
    /// side is empty.
    pub quadrant_delta_db: [Option<f64>; 4],
}

fn peak(m: &[f32]) -> usize {
    // First maximum, so ties resolve the same way on both sides.
    m.iter()
        .enumerate()
        .fold((0, f32::NEG_INFINITY), |best, (i, &v)| {
            if v > best.1 {
                (i, v)
            } else {
                best
            }
        })
        .0
}

fn quadrant_energy(m: &[f32], rows: usize, cols: usize) -> [f64; 4] {
    let mut e = [0.0; 4];
    for r in 0..rows {
        for c in 0..cols {
            let q = 2 * usize::from(r >= rows / 2) + usize::from(c >= cols / 2);
            e[q] += f64::from(m[r * cols + c]).powi(2);
        }
    }
    e
}

pub fn compare_chips(
    a: &[f32],
    a_rows: usize,
    a_cols: usize,
    b: &[f32],
    b_rows: usize,
    b_cols: usize,
) -> Result<Similarity> {
    if (a_rows, a_cols) != (b_rows, b_cols)
        || a.len() != a_rows * a_cols
        || b.len() != b_rows * b_cols
    {
        return Err(ProdError::DimensionMismatch(a_rows, a_cols, b_rows, b_cols));
    }
    let (rows, cols) = (a_rows, a_cols);
    let qa = quadrant_energy(a, rows, cols);
    let qb = quadrant_energy(b, rows, cols);
    let mut quadrant_delta_db = [None; 4];
    for q in 0..4 {
        if qa[q] > 0.0 && qb[q] > 0.0 {
            quadrant_delta_db[q] = Some(10.0 * (qa[q] / qb[q]).log10());
        }
    }
    if a.is_empty() {
        return Ok(Similarity {
            ncc: 0.0,
            degenerate: true,
            shift: (0, 0),
            quadrant_delta_db,
        });
    }

    let (pa, pb) = (peak(a), peak(b));
    let dr = (pa / cols) as i64 - (pb / cols) as i64;
    let dc = (pa % cols) as i64 - (pb % cols) as i64;
    let shifted: Vec<f64> = (0..rows as i64)
        .flat_map(|r| (0..cols as i64).map(move |c| (r - dr, c - dc)))
        .map(|(r, c)| {
            if (0..rows as i64).contains(&r) && (0..cols as i64).contains(&c) {
                f64::from(b[r as usize * cols + c as usize])
            } else {
                0.0
            }
        })
        .collect();
    let a: Vec<f64> = a.iter().map(|&v| f64::from(v)).collect();

    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = shifted.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(&shifted) {
        let (x, y) = (x - ma, y - mb);
        sab += x * y;
        saa += x * x;
        sbb += y * y;
    }
    let degenerate = saa == 0.0 || sbb == 0.0;
    let ncc = if degenerate {
        0.0
    } else if a == shifted {
        1.0
    } else {
        (sab / (saa.sqrt() * sbb.sqrt())).clamp(-1.0, 1.0)
    };
    Ok(Similarity {
        ncc,
        degenerate,
        shift: (dr, dc),
        quadrant_delta_db,
    })
}

/// Compares two chips stored as `<stem>.f32` + `<stem>.json`.
pub fn compare_files(stem_a: impl AsRef<Path>, stem_b: impl AsRef<Path>) -> Result<Similarity> {
    let (ha, a) = read_chip(stem_a)?;
    let (hb, b) = read_chip(stem_b)?;
    compare_chips(&a, ha.rows, ha.cols, &b, hb.rows, hb.cols)
}
