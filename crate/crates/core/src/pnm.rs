//! Binary PBM (P4), 16-bit PGM (P5) and PPM (P6) codecs.
//!
//! PBM stores the Inside mask (Inside = 1 = black). PGM stores
//! `min(escape_step, 65535)` with 0 for Inside. Both carry the window and
//! raster metadata as a JSON header comment so the file can be decoded back
//! into a [`Raster`] without side information.

use std::io::{self, BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::raster::{Raster, RasterMeta, Window, INSIDE};

const COMMENT_TAG: &str = "tmandel ";

#[derive(Debug, Error)]
pub enum PnmError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("malformed header: {0}")]
    Header(String),
    #[error("unsupported format `{0}`")]
    Format(String),
    #[error("file has no window comment; pass the window explicitly")]
    MissingWindow,
}

#[derive(Serialize, Deserialize)]
struct Header {
    window: Window,
    meta: RasterMeta,
}

fn write_header(out: &mut impl Write, magic: &str, raster: &Raster) -> io::Result<()> {
    let header = Header { window: *raster.window(), meta: raster.meta().clone() };
    let json = serde_json::to_string(&header).expect("header serializes");
    write!(out, "{magic}\n# {COMMENT_TAG}{json}\n{} {}\n", raster.width(), raster.height())
}

/// Writes the Inside mask as P4, rows padded to whole bytes, MSB first.
pub fn write_pbm(raster: &Raster, mut out: impl Write) -> io::Result<()> {
    write_header(&mut out, "P4", raster)?;
    let w = raster.width();
    let mut row = vec![0u8; w.div_ceil(8)];
    for j in 0..raster.height() {
        row.fill(0);
        for i in 0..w {
            if raster.is_inside(i, j) {
                row[i / 8] |= 0x80 >> (i % 8);
            }
        }
        out.write_all(&row)?;
    }
    Ok(())
}

/// Writes escape steps as big-endian 16-bit P5, clamped at 65535.
pub fn write_pgm(raster: &Raster, mut out: impl Write) -> io::Result<()> {
    write_header(&mut out, "P5", raster)?;
    writeln!(out, "65535")?;
    let mut bytes = Vec::with_capacity(raster.cells().len() * 2);
    for &v in raster.cells() {
        bytes.extend_from_slice(&(v.min(65535) as u16).to_be_bytes());
    }
    out.write_all(&bytes)
}

/// Writes 8-bit RGB pixels as P6.
pub fn write_ppm(width: usize, height: usize, rgb: &[u8], mut out: impl Write) -> io::Result<()> {
    assert_eq!(rgb.len(), width * height * 3, "rgb buffer size");
    write!(out, "P6\n{width} {height}\n255\n")?;
    out.write_all(rgb)
}

/// An RGB image decoded from P6.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rgb {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<u8>,
}

struct Tokens<R> {
    inner: R,
    comments: Vec<String>,
}

impl<R: BufRead> Tokens<R> {
    fn byte(&mut self) -> Result<Option<u8>, PnmError> {
        let mut b = [0u8];
        Ok(match self.inner.read(&mut b)? {
            0 => None,
            _ => Some(b[0]),
        })
    }

    /// Next whitespace-delimited header token, collecting `#` comments.
    fn next(&mut self) -> Result<String, PnmError> {
        let mut token = String::new();
        loop {
            match self.byte()? {
                None if token.is_empty() => return Err(PnmError::Header("unexpected end of file".into())),
                None => return Ok(token),
                Some(b'#') if token.is_empty() => {
                    let mut line = String::new();
                    self.inner.read_line(&mut line)?;
                    self.comments.push(line.trim().to_string());
                }
                Some(b) if b.is_ascii_whitespace() => {
                    if !token.is_empty() {
                        return Ok(token);
                    }
                }
                Some(b) => token.push(b as char),
            }
        }
    }

    fn number(&mut self, what: &str) -> Result<usize, PnmError> {
        let token = self.next()?;
        token.parse().map_err(|_| PnmError::Header(format!("{what}: `{token}`")))
    }

    fn header(&self) -> Option<Header> {
        self.comments.iter().find_map(|c| c.strip_prefix(COMMENT_TAG)).and_then(|json| serde_json::from_str(json).ok())
    }
}

/// Decodes a P4 or P5 file written by [`write_pbm`] / [`write_pgm`].
///
/// `bounds` (`[re_min, re_max, im_min, im_max]`) override or supply the
/// window; otherwise the header comment must carry one. PBM cells that are
/// not Inside decode with escape step 1, since the format does not store
/// steps.
pub fn read_raster(input: impl BufRead, bounds: Option<[f64; 4]>) -> Result<Raster, PnmError> {
    let mut tokens = Tokens { inner: input, comments: Vec::new() };
    let magic = tokens.next()?;
    if magic != "P4" && magic != "P5" {
        return Err(PnmError::Format(magic));
    }
    let width = tokens.number("width")?;
    let height = tokens.number("height")?;
    let maxval = if magic == "P5" { Some(tokens.number("maxval")?) } else { None };
    let header = tokens.header();
    let explicit = match bounds {
        Some([a, b, c, d]) => {
            Some(Window::new(a, b, c, d, width, height).map_err(|e| PnmError::Header(e.to_string()))?)
        }
        None => None,
    };
    let (window, meta) = match (explicit, header) {
        (Some(w), h) => (w, h.map_or_else(RasterMeta::decoded, |h| h.meta)),
        (None, Some(h)) => (h.window, h.meta),
        (None, None) => return Err(PnmError::MissingWindow),
    };
    if window.width != width || window.height != height {
        return Err(PnmError::Header(format!(
            "image is {width}x{height} but window is {}x{}",
            window.width, window.height
        )));
    }

    let mut cells = Vec::with_capacity(width * height);
    let mut data = Vec::new();
    tokens.inner.read_to_end(&mut data)?;
    match maxval {
        None => {
            let stride = width.div_ceil(8);
            if data.len() < stride * height {
                return Err(PnmError::Header("truncated PBM data".into()));
            }
            for j in 0..height {
                let row = &data[j * stride..(j + 1) * stride];
                cells.extend((0..width).map(|i| if row[i / 8] & (0x80 >> (i % 8)) != 0 { INSIDE } else { 1 }));
            }
        }
        Some(maxval) => {
            let wide = maxval > 255;
            let bytes = if wide { 2 } else { 1 };
            if data.len() < width * height * bytes {
                return Err(PnmError::Header("truncated PGM data".into()));
            }
            if wide {
                cells
                    .extend(data.chunks_exact(2).take(width * height).map(|b| u16::from_be_bytes([b[0], b[1]]) as u32));
            } else {
                cells.extend(data.iter().take(width * height).map(|&b| b as u32));
            }
        }
    }
    Raster::from_cells(window, cells, meta).map_err(|e| PnmError::Header(e.to_string()))
}

/// Decodes a P6 file.
pub fn read_ppm(input: impl BufRead) -> Result<Rgb, PnmError> {
    let mut tokens = Tokens { inner: input, comments: Vec::new() };
    let magic = tokens.next()?;
    if magic != "P6" {
        return Err(PnmError::Format(magic));
    }
    let width = tokens.number("width")?;
    let height = tokens.number("height")?;
    let maxval = tokens.number("maxval")?;
    if maxval != 255 {
        return Err(PnmError::Format(format!("P6 with maxval {maxval}")));
    }
    let mut pixels = vec![0u8; width * height * 3];
    tokens.inner.read_exact(&mut pixels)?;
    Ok(Rgb { width, height, pixels })
}
