//! Rasters of iterated filled Julia sets and Mandelbrot slices.
//!
//! Pixel `(i, j)` samples the complex number at the center of its cell, with
//! row 0 at the top of the window. Cells store `0` for Inside and the escape
//! step `k >= 1` otherwise.
//!
//! Fills are split into 64x64 tiles evaluated on the current rayon pool.
//! Each pixel depends only on its own coordinates, and tiles are stitched in
//! a fixed order, so the output does not depend on tile size or thread count.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dynamics::{DynamicsError, Generators, MembershipConfig, ParameterPoint};
use crate::number::parse_real;
use crate::templates::Template;

pub const DEFAULT_TILE: usize = 64;

/// Cell value for pixels classified Inside.
pub const INSIDE: u32 = 0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RasterError {
    #[error("degenerate window: {0}")]
    Window(String),
    #[error("window literal: {0}")]
    WindowLiteral(String),
    #[error("slice coordinate {coordinate} is out of range for {dimension} generators")]
    Coordinate { coordinate: usize, dimension: usize },
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error("cell buffer has {got} cells, window needs {expected}")]
    CellCount { expected: usize, got: usize },
}

/// A rectangle `[re_min, re_max] x [im_min, im_max]` sampled on a
/// `width x height` pixel grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
    pub width: usize,
    pub height: usize,
}

impl Window {
    pub fn new(
        re_min: f64,
        re_max: f64,
        im_min: f64,
        im_max: f64,
        width: usize,
        height: usize,
    ) -> Result<Self, RasterError> {
        let finite = [re_min, re_max, im_min, im_max].iter().all(|v| v.is_finite());
        if !finite || re_min >= re_max || im_min >= im_max {
            return Err(RasterError::Window(format!("[{re_min}, {re_max}] x [{im_min}, {im_max}]")));
        }
        if width == 0 || height == 0 {
            return Err(RasterError::Window(format!("{width}x{height} pixels")));
        }
        Ok(Self { re_min, re_max, im_min, im_max, width, height })
    }

    /// Square window of half-width `radius` around `center`.
    pub fn centered(
        center: Complex64,
        half_re: f64,
        half_im: f64,
        width: usize,
        height: usize,
    ) -> Result<Self, RasterError> {
        Self::new(center.re - half_re, center.re + half_re, center.im - half_im, center.im + half_im, width, height)
    }

    /// Parses `re_min,re_max,im_min,im_max` (each an exact real literal).
    pub fn parse_bounds(literal: &str, width: usize, height: usize) -> Result<Self, RasterError> {
        let parts: Vec<&str> = literal.split(',').collect();
        if parts.len() != 4 {
            return Err(RasterError::WindowLiteral(format!("expected 4 comma-separated bounds, got `{literal}`")));
        }
        let mut bounds = [0.0; 4];
        for (slot, part) in bounds.iter_mut().zip(&parts) {
            *slot =
                parse_real(part.trim()).map_err(|e| RasterError::WindowLiteral(format!("`{part}`: {}", e.message)))?;
        }
        Self::new(bounds[0], bounds[1], bounds[2], bounds[3], width, height)
    }

    pub fn len(&self) -> usize {
        self.width * self.height
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Plane distance between horizontally and vertically adjacent pixel centers.
    pub fn pitch(&self) -> (f64, f64) {
        ((self.re_max - self.re_min) / self.width as f64, (self.im_max - self.im_min) / self.height as f64)
    }

    /// Length of one pixel diagonal in plane units.
    pub fn pixel_diagonal(&self) -> f64 {
        let (px, py) = self.pitch();
        px.hypot(py)
    }

    #[inline]
    pub fn pixel_center(&self, i: usize, j: usize) -> Complex64 {
        let re = self.re_min + (i as f64 + 0.5) * (self.re_max - self.re_min) / self.width as f64;
        let im = self.im_max - (j as f64 + 0.5) * (self.im_max - self.im_min) / self.height as f64;
        Complex64::new(re, im)
    }

    /// Pixel whose cell contains `z`, if `z` lies in the window.
    pub fn pixel_of(&self, z: Complex64) -> Option<(usize, usize)> {
        if !self.contains(z) {
            return None;
        }
        let (px, py) = self.pitch();
        let i = (((z.re - self.re_min) / px) as usize).min(self.width - 1);
        let j = (((self.im_max - z.im) / py) as usize).min(self.height - 1);
        Some((i, j))
    }

    pub fn contains(&self, z: Complex64) -> bool {
        (self.re_min..=self.re_max).contains(&z.re) && (self.im_min..=self.im_max).contains(&z.im)
    }
}

/// What a raster depicts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RasterKind {
    FilledJulia { time: usize },
    MandelbrotSlice { coordinate: usize, critical_times: String },
    Boundary,
    Decoded,
}

/// Everything needed to regenerate a raster.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RasterMeta {
    #[serde(flatten)]
    pub kind: RasterKind,
    pub template: String,
    pub parameter: String,
    pub horizon: u32,
}

impl RasterMeta {
    pub fn decoded() -> Self {
        Self { kind: RasterKind::Decoded, template: String::new(), parameter: String::new(), horizon: 0 }
    }

    /// Varying coordinate of a Mandelbrot slice.
    pub fn slice_coordinate(&self) -> Option<usize> {
        match self.kind {
            RasterKind::MandelbrotSlice { coordinate, .. } => Some(coordinate),
            _ => None,
        }
    }
}

/// One cell's classification.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cell {
    Inside,
    Escaped(u32),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Raster {
    window: Window,
    cells: Vec<u32>,
    meta: RasterMeta,
}

impl Raster {
    pub fn from_cells(window: Window, cells: Vec<u32>, meta: RasterMeta) -> Result<Self, RasterError> {
        if cells.len() != window.len() {
            return Err(RasterError::CellCount { expected: window.len(), got: cells.len() });
        }
        Ok(Self { window, cells, meta })
    }

    /// Raster whose Inside cells are exactly those where `mask` is true.
    /// Other cells get escape step 1.
    pub fn from_mask(window: Window, mask: &[bool]) -> Result<Self, RasterError> {
        let cells = mask.iter().map(|&inside| if inside { INSIDE } else { 1 }).collect();
        Self::from_cells(window, cells, RasterMeta::decoded())
    }

    pub fn window(&self) -> &Window {
        &self.window
    }

    pub fn meta(&self) -> &RasterMeta {
        &self.meta
    }

    pub fn with_meta(mut self, meta: RasterMeta) -> Self {
        self.meta = meta;
        self
    }

    pub fn width(&self) -> usize {
        self.window.width
    }

    pub fn height(&self) -> usize {
        self.window.height
    }

    /// Raw row-major cell values: 0 Inside, escape step otherwise.
    pub fn cells(&self) -> &[u32] {
        &self.cells
    }

    pub fn cell(&self, i: usize, j: usize) -> Cell {
        match self.cells[j * self.window.width + i] {
            INSIDE => Cell::Inside,
            step => Cell::Escaped(step),
        }
    }

    #[inline]
    pub fn is_inside(&self, i: usize, j: usize) -> bool {
        self.cells[j * self.window.width + i] == INSIDE
    }

    pub fn inside_mask(&self) -> Vec<bool> {
        self.cells.iter().map(|&v| v == INSIDE).collect()
    }

    pub fn inside_count(&self) -> usize {
        self.cells.iter().filter(|&&v| v == INSIDE).count()
    }

    /// Plane coordinates of every Inside pixel center, row-major.
    pub fn inside_points(&self) -> impl Iterator<Item = Complex64> + '_ {
        let w = self.window.width;
        self.cells
            .iter()
            .enumerate()
            .filter(|(_, &v)| v == INSIDE)
            .map(move |(idx, _)| self.window.pixel_center(idx % w, idx / w))
    }
}

/// A one-complex-dimensional slice of parameter space: `base` with
/// `c_coordinate` replaced by each pixel's value.
#[derive(Debug, Clone, PartialEq)]
pub struct SliceSpec {
    base: ParameterPoint,
    coordinate: usize,
    window: Window,
}

impl SliceSpec {
    pub fn new(base: ParameterPoint, coordinate: usize, window: Window) -> Result<Self, RasterError> {
        if coordinate >= base.dimension() {
            return Err(RasterError::Coordinate { coordinate, dimension: base.dimension() });
        }
        Ok(Self { base, coordinate, window })
    }

    pub fn base(&self) -> &ParameterPoint {
        &self.base
    }

    pub fn coordinate(&self) -> usize {
        self.coordinate
    }

    pub fn window(&self) -> &Window {
        &self.window
    }
}

/// Evaluates every pixel center on the current rayon pool, tile by tile.
pub(crate) fn fill<F>(window: &Window, tile: usize, eval: F) -> Vec<u32>
where
    F: Fn(Complex64) -> u32 + Sync,
{
    let (w, h) = (window.width, window.height);
    let tiles_x = w.div_ceil(tile);
    let tiles_y = h.div_ceil(tile);
    let tiles: Vec<Vec<u32>> = (0..tiles_x * tiles_y)
        .into_par_iter()
        .map(|t| {
            let (x0, y0) = ((t % tiles_x) * tile, (t / tiles_x) * tile);
            let (x1, y1) = ((x0 + tile).min(w), (y0 + tile).min(h));
            let mut out = Vec::with_capacity((x1 - x0) * (y1 - y0));
            for j in y0..y1 {
                for i in x0..x1 {
                    out.push(eval(window.pixel_center(i, j)));
                }
            }
            out
        })
        .collect();

    let mut cells = vec![INSIDE; w * h];
    for (t, values) in tiles.iter().enumerate() {
        let (x0, y0) = ((t % tiles_x) * tile, (t / tiles_x) * tile);
        let tw = (x0 + tile).min(w) - x0;
        for (row, chunk) in values.chunks(tw).enumerate() {
            let start = (y0 + row) * w + x0;
            cells[start..start + tw].copy_from_slice(chunk);
        }
    }
    cells
}

/// Runs `f` on a dedicated pool of `workers` threads, or on the global pool
/// when `workers` is `None`.
pub fn with_workers<R, F>(workers: Option<usize>, f: F) -> R
where
    R: Send,
    F: FnOnce() -> R + Send,
{
    match workers {
        Some(n) => rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build().expect("thread pool").install(f),
        None => f(),
    }
}

fn check_alphabet(point: &ParameterPoint, template: &Template) -> Result<(), RasterError> {
    if template.alphabet_size() != point.dimension() {
        return Err(DynamicsError::AlphabetMismatch {
            template: template.alphabet_size(),
            dimension: point.dimension(),
        }
        .into());
    }
    Ok(())
}

/// Filled Julia set at time `m`: Inside iff the orbit of the pixel started at
/// time `m` stays within the escape radius for `horizon` steps.
pub fn raster_filled_julia(
    point: &ParameterPoint,
    template: &Template,
    m: usize,
    window: &Window,
    horizon: u32,
    guard: f64,
) -> Result<Raster, RasterError> {
    raster_filled_julia_tiled(point, template, m, window, horizon, guard, DEFAULT_TILE)
}

pub(crate) fn raster_filled_julia_tiled(
    point: &ParameterPoint,
    template: &Template,
    m: usize,
    window: &Window,
    horizon: u32,
    guard: f64,
    tile: usize,
) -> Result<Raster, RasterError> {
    check_alphabet(point, template)?;
    let generators = Generators::new(point, guard);
    let cells = fill(window, tile, |z| generators.orbit(template, m, z, horizon).escape_step().unwrap_or(INSIDE));
    let meta = RasterMeta {
        kind: RasterKind::FilledJulia { time: m },
        template: template.to_string(),
        parameter: point.to_string(),
        horizon,
    };
    Raster::from_cells(*window, cells, meta)
}

/// Mandelbrot slice: Inside iff the pixel's parameter passes [`in_mandelbrot`].
/// Escaped cells carry the witness escape step.
///
/// [`in_mandelbrot`]: crate::dynamics::in_mandelbrot
pub fn raster_mandelbrot_slice(
    spec: &SliceSpec,
    template: &Template,
    cfg: &MembershipConfig,
) -> Result<Raster, RasterError> {
    raster_mandelbrot_slice_tiled(spec, template, cfg, DEFAULT_TILE)
}

pub(crate) fn raster_mandelbrot_slice_tiled(
    spec: &SliceSpec,
    template: &Template,
    cfg: &MembershipConfig,
    tile: usize,
) -> Result<Raster, RasterError> {
    check_alphabet(&spec.base, template)?;
    let coordinate = spec.coordinate;
    let cells = fill(&spec.window, tile, |c| {
        let point = spec.base.with_constant(coordinate, c).expect("finite pixel center");
        let membership = Generators::new(&point, cfg.overflow_guard).membership(template, cfg);
        membership.witness.map_or(INSIDE, |w| w.escape_step)
    });
    let meta = RasterMeta {
        kind: RasterKind::MandelbrotSlice { coordinate, critical_times: cfg.critical_times.to_string() },
        template: template.to_string(),
        parameter: spec.base.to_string(),
        horizon: cfg.max_iterations,
    };
    Raster::from_cells(spec.window, cells, meta)
}

/// Inside cells with a non-Inside 4-neighbor, or on the window edge.
/// Cleared interior cells are marked escaped at the raster horizon.
pub fn boundary_of(raster: &Raster) -> Raster {
    let (w, h) = (raster.width(), raster.height());
    let cleared = raster.meta.horizon.max(1);
    let mut cells = raster.cells.clone();
    for j in 0..h {
        for i in 0..w {
            if !raster.is_inside(i, j) {
                continue;
            }
            let on_edge = i == 0 || j == 0 || i + 1 == w || j + 1 == h;
            let exposed = on_edge
                || !raster.is_inside(i - 1, j)
                || !raster.is_inside(i + 1, j)
                || !raster.is_inside(i, j - 1)
                || !raster.is_inside(i, j + 1);
            if !exposed {
                cells[j * w + i] = cleared;
            }
        }
    }
    let meta = RasterMeta { kind: RasterKind::Boundary, ..raster.meta.clone() };
    Raster { window: raster.window, cells, meta }
}
