//! Distances between rasterized sets, in plane units.
//!
//! The distance transform is exact: a squared-distance pass along rows,
//! then the lower envelope of parabolas along columns. Rows use integer
//! pixel offsets; columns weigh them by the squared pitch ratio, so results
//! are bit-exact whenever that ratio is a power of two (in particular for
//! square pixels).

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::raster::{Raster, Window};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricsError {
    #[error("rasters have different windows")]
    WindowMismatch,
    #[error("cannot compare a slice in c_{0} with a slice in c_{1}")]
    CoordinateMismatch(usize, usize),
    #[error("point {0} lies outside the raster window")]
    OutsideWindow(Complex64),
}

/// Distance from every pixel center to the nearest Inside pixel center of a
/// source raster. `+inf` everywhere when the source has no Inside pixels.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceField {
    window: Window,
    values: Vec<f64>,
}

impl DistanceField {
    pub fn window(&self) -> &Window {
        &self.window
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[j * self.window.width + i]
    }
}

/// Nearest Inside column offset in each row, squared; `None` if the row is empty.
fn row_pass(row: &[bool], out: &mut [Option<u64>]) {
    let n = row.len();
    let mut last: Option<usize> = None;
    for i in 0..n {
        if row[i] {
            last = Some(i);
        }
        out[i] = last.map(|k| ((i - k) as u64).pow(2));
    }
    let mut next: Option<usize> = None;
    for i in (0..n).rev() {
        if row[i] {
            next = Some(i);
        }
        if let Some(k) = next {
            let d = ((k - i) as u64).pow(2);
            out[i] = Some(out[i].map_or(d, |v| v.min(d)));
        }
    }
}

/// Lower envelope of `f(q) + (x - q)^2` over finite `f(q)`.
fn envelope(f: &[f64], out: &mut [f64]) {
    let n = f.len();
    let mut v: Vec<usize> = Vec::with_capacity(n);
    let mut z: Vec<f64> = Vec::with_capacity(n + 1);
    for q in (0..n).filter(|&q| f[q].is_finite()) {
        let qf = q as f64;
        loop {
            let Some(&p) = v.last() else {
                z.push(f64::NEG_INFINITY);
                break;
            };
            let pf = p as f64;
            let s = ((f[q] + qf * qf) - (f[p] + pf * pf)) / (2.0 * (qf - pf));
            if s <= *z.last().unwrap() {
                v.pop();
                z.pop();
            } else {
                z.push(s);
                break;
            }
        }
        v.push(q);
    }
    if v.is_empty() {
        out.fill(f64::INFINITY);
        return;
    }
    z.push(f64::INFINITY);
    let mut k = 0;
    for (x, slot) in out.iter_mut().enumerate() {
        let xf = x as f64;
        while z[k + 1] < xf {
            k += 1;
        }
        let d = xf - v[k] as f64;
        *slot = f[v[k]] + d * d;
    }
}

pub fn distance_transform(raster: &Raster) -> DistanceField {
    let window = *raster.window();
    let (w, h) = (window.width, window.height);
    let (px, py) = window.pitch();
    // Squared distances are accumulated in units of py^2.
    let ratio = (px * px) / (py * py);
    let scale = py * py;

    let mask = raster.inside_mask();
    let mut rows = vec![None; w * h];
    rows.par_chunks_mut(w).zip(mask.par_chunks(w)).for_each(|(out, row)| row_pass(row, out));

    let columns: Vec<Vec<f64>> = (0..w)
        .into_par_iter()
        .map(|i| {
            let f: Vec<f64> = (0..h).map(|j| rows[j * w + i].map_or(f64::INFINITY, |d| d as f64 * ratio)).collect();
            let mut out = vec![0.0; h];
            envelope(&f, &mut out);
            out
        })
        .collect();

    let mut values = vec![0.0; w * h];
    for (i, column) in columns.iter().enumerate() {
        for (j, &d) in column.iter().enumerate() {
            values[j * w + i] = (d * scale).sqrt();
        }
    }
    DistanceField { window, values }
}

/// A raster distance together with the pixel quantization bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Measured {
    pub value: f64,
    pub quantization_bound: f64,
}

fn check_comparable(a: &Raster, b: &Raster) -> Result<(), MetricsError> {
    if a.window() != b.window() {
        return Err(MetricsError::WindowMismatch);
    }
    if let (Some(x), Some(y)) = (a.meta().slice_coordinate(), b.meta().slice_coordinate()) {
        if x != y {
            return Err(MetricsError::CoordinateMismatch(x, y));
        }
    }
    Ok(())
}

fn directed_with(a: &Raster, field_b: &DistanceField) -> f64 {
    a.cells()
        .iter()
        .zip(field_b.values())
        .filter(|(&cell, _)| cell == crate::raster::INSIDE)
        .map(|(_, &d)| d)
        .fold(0.0, f64::max)
}

/// `d(A, B)`: the largest distance from an Inside pixel of `a` to the Inside
/// set of `b`. Zero if `a` is empty.
pub fn directed_distance(a: &Raster, b: &Raster) -> Result<Measured, MetricsError> {
    check_comparable(a, b)?;
    Ok(Measured { value: directed_with(a, &distance_transform(b)), quantization_bound: a.window().pixel_diagonal() })
}

pub fn hausdorff_distance(a: &Raster, b: &Raster) -> Result<Measured, MetricsError> {
    Ok(compare(a, b)?.hausdorff())
}

/// Both directed distances and their maximum, for one pair of rasters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Comparison {
    pub d_ab: f64,
    pub d_ba: f64,
    pub d_h: f64,
    pub quantization_bound: f64,
}

impl Comparison {
    pub fn hausdorff(&self) -> Measured {
        Measured { value: self.d_h, quantization_bound: self.quantization_bound }
    }

    pub fn csv_header() -> &'static str {
        "labelA,labelB,d_AB,d_BA,d_H,quantization_bound"
    }

    pub fn csv_row(&self, label_a: &str, label_b: &str) -> String {
        format!("{label_a},{label_b},{},{},{},{}", self.d_ab, self.d_ba, self.d_h, self.quantization_bound)
    }
}

pub fn compare(a: &Raster, b: &Raster) -> Result<Comparison, MetricsError> {
    check_comparable(a, b)?;
    let d_ab = directed_with(a, &distance_transform(b));
    let d_ba = directed_with(b, &distance_transform(a));
    Ok(Comparison { d_ab, d_ba, d_h: d_ab.max(d_ba), quantization_bound: a.window().pixel_diagonal() })
}

/// Distance from `x` to the nearest Inside pixel center of `b`, by direct scan.
pub fn point_to_set_distance(x: Complex64, b: &Raster) -> Result<f64, MetricsError> {
    if !b.window().contains(x) {
        return Err(MetricsError::OutsideWindow(x));
    }
    Ok(b.inside_points().map(|p| (p - x).norm()).fold(f64::INFINITY, f64::min))
}
