//! Template-driven iteration of unicritical polynomials `z^d + c`.
//!
//! A [`ParameterPoint`] holds `D` generator maps `f_i(z) = z^{d_i} + c_i`.
//! Together with a [`Template`] it defines the non-autonomous system whose
//! `k`-th step applies `f_{s_k}`. The composition from time `m` to time `n`
//! applies steps `m+1 ..= n` in order.
//!
//! Membership in the fixed-template Mandelbrot set is decided by following
//! the critical orbit of `0` started at every time `m`. For an eventually
//! periodic template only the times `0 .. prefix + period` give distinct
//! systems, so those are the only ones examined.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::number::parse_real;
use crate::templates::Template;

/// Default orbit horizon per critical time.
pub const DEFAULT_MAX_ITERATIONS: u32 = 400;
/// Default hard cap on orbit modulus.
pub const DEFAULT_OVERFLOW_GUARD: f64 = 1e150;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DynamicsError {
    #[error("a parameter point needs at least one generator")]
    Empty,
    #[error("{constants} constants but {degrees} degrees")]
    DimensionMismatch { constants: usize, degrees: usize },
    #[error("degree {degree} at index {index} is outside 2..={max_degree}")]
    DegreeOutOfRange { index: usize, degree: u32, max_degree: u32 },
    #[error("degree bound {0} is below 2")]
    MaxDegree(u32),
    #[error("constant at index {0} is not finite")]
    NonFinite(usize),
    #[error("template alphabet {template} does not match {dimension} generators")]
    AlphabetMismatch { template: usize, dimension: usize },
    #[error("composition needs m < n, got m = {m}, n = {n}")]
    EmptyComposition { m: usize, n: usize },
    #[error("composition overflowed at step {step}")]
    Overflow { step: usize },
    #[error("coordinate {index} is out of range for {dimension} generators")]
    CoordinateOutOfRange { index: usize, dimension: usize },
    #[error("parameter literal, column {column}: {message}")]
    Parse { column: usize, message: String },
}

/// Constant and degree vectors `(c, d)` of a template system, with the
/// degree bound `d_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterPoint {
    constants: Vec<Complex64>,
    degrees: Vec<u32>,
    max_degree: u32,
}

impl ParameterPoint {
    pub fn new(constants: Vec<Complex64>, degrees: Vec<u32>, max_degree: u32) -> Result<Self, DynamicsError> {
        if constants.is_empty() {
            return Err(DynamicsError::Empty);
        }
        if constants.len() != degrees.len() {
            return Err(DynamicsError::DimensionMismatch { constants: constants.len(), degrees: degrees.len() });
        }
        if max_degree < 2 {
            return Err(DynamicsError::MaxDegree(max_degree));
        }
        for (index, &degree) in degrees.iter().enumerate() {
            if !(2..=max_degree).contains(&degree) {
                return Err(DynamicsError::DegreeOutOfRange { index, degree, max_degree });
            }
        }
        if let Some(index) = constants.iter().position(|c| !c.is_finite()) {
            return Err(DynamicsError::NonFinite(index));
        }
        Ok(Self { constants, degrees, max_degree })
    }

    /// All degrees 2, `d_max = 2`.
    pub fn quadratic(constants: Vec<Complex64>) -> Result<Self, DynamicsError> {
        let degrees = vec![2; constants.len()];
        Self::new(constants, degrees, 2)
    }

    pub fn dimension(&self) -> usize {
        self.constants.len()
    }

    pub fn constants(&self) -> &[Complex64] {
        &self.constants
    }

    pub fn degrees(&self) -> &[u32] {
        &self.degrees
    }

    pub fn max_degree(&self) -> u32 {
        self.max_degree
    }

    /// Copy of this point with `c_index` replaced.
    pub fn with_constant(&self, index: usize, value: Complex64) -> Result<Self, DynamicsError> {
        if index >= self.dimension() {
            return Err(DynamicsError::CoordinateOutOfRange { index, dimension: self.dimension() });
        }
        if !value.is_finite() {
            return Err(DynamicsError::NonFinite(index));
        }
        let mut point = self.clone();
        point.constants[index] = value;
        Ok(point)
    }

    /// `max(2, |c_0|, ..., |c_{D-1}|)`.
    ///
    /// For `|z| > R` and any generator, `|z^d + c| >= |z|^2 - |c| > |z| (R - 1) >= |z|`,
    /// so an orbit that leaves the disk of radius `R` never returns.
    pub fn escape_radius(&self) -> f64 {
        self.constants.iter().map(|c| c.norm()).fold(2.0, f64::max)
    }

    fn check_alphabet(&self, template: &Template) -> Result<(), DynamicsError> {
        if template.alphabet_size() != self.dimension() {
            return Err(DynamicsError::AlphabetMismatch {
                template: template.alphabet_size(),
                dimension: self.dimension(),
            });
        }
        Ok(())
    }
}

/// `z^d + c`, with `z^d` by repeated squaring.
#[inline]
pub fn step(z: Complex64, c: Complex64, d: u32) -> Complex64 {
    let power = if d == 2 { z * z } else { z.powu(d) };
    power + c
}

/// `Q_{m,n}(z)`: applies the generators selected by `s_{m+1}, ..., s_n` in order.
pub fn compose(
    point: &ParameterPoint,
    template: &Template,
    m: usize,
    n: usize,
    z: Complex64,
) -> Result<Complex64, DynamicsError> {
    point.check_alphabet(template)?;
    if m >= n {
        return Err(DynamicsError::EmptyComposition { m, n });
    }
    let mut z = z;
    for (offset, symbol) in template.symbols_after(m).take(n - m).enumerate() {
        let i = symbol as usize;
        z = step(z, point.constants[i], point.degrees[i]);
        if !z.is_finite() {
            return Err(DynamicsError::Overflow { step: m + offset + 1 });
        }
    }
    Ok(z)
}

/// How an orbit ended within its horizon.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    /// Modulus first strictly exceeded the escape radius after `step`
    /// polynomial applications.
    Escaped { step: u32 },
    /// Modulus never exceeded the escape radius within `horizon` applications.
    Bounded { horizon: u32 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OrbitVerdict {
    pub outcome: Outcome,
    pub final_modulus: f64,
}

impl OrbitVerdict {
    pub fn is_bounded(&self) -> bool {
        matches!(self.outcome, Outcome::Bounded { .. })
    }

    pub fn escape_step(&self) -> Option<u32> {
        match self.outcome {
            Outcome::Escaped { step } => Some(step),
            Outcome::Bounded { .. } => None,
        }
    }
}

/// Generator table and escape threshold for one parameter point, so hot loops
/// don't re-derive them per orbit.
#[derive(Debug, Clone)]
pub(crate) struct Generators {
    maps: Vec<(Complex64, u32)>,
    limit_sq: f64,
}

impl Generators {
    pub(crate) fn new(point: &ParameterPoint, guard: f64) -> Self {
        let maps = point.constants.iter().copied().zip(point.degrees.iter().copied()).collect();
        // Squared moduli avoid rounding |c| up and back: z = c must not count as escaped.
        let radius_sq = point.constants.iter().map(|c| c.norm_sqr()).fold(4.0, f64::max);
        Self { maps, limit_sq: radius_sq.min(guard * guard) }
    }

    /// Follows `z0` from time `m` for at most `horizon` steps. Non-finite
    /// values count as escaped.
    #[inline]
    pub(crate) fn orbit(&self, template: &Template, m: usize, z0: Complex64, horizon: u32) -> OrbitVerdict {
        let mut z = z0;
        let mut symbols = template.symbols_after(m);
        for k in 1..=horizon {
            let (c, d) = self.maps[symbols.next().expect("infinite") as usize];
            z = step(z, c, d);
            if !(z.norm_sqr() <= self.limit_sq) {
                return OrbitVerdict { outcome: Outcome::Escaped { step: k }, final_modulus: z.norm() };
            }
        }
        OrbitVerdict { outcome: Outcome::Bounded { horizon }, final_modulus: z.norm() }
    }
}

/// Follows `z0` under the system started at time `m`.
///
/// Returns `Escaped(k)` at the first `k` with `|z| > escape_radius` (or
/// `|z| > guard`, which the radius check subsumes when `guard >= R`).
pub fn classify_orbit(
    point: &ParameterPoint,
    template: &Template,
    m: usize,
    z0: Complex64,
    horizon: u32,
    guard: f64,
) -> Result<OrbitVerdict, DynamicsError> {
    point.check_alphabet(template)?;
    Ok(Generators::new(point, guard).orbit(template, m, z0, horizon))
}

/// Which critical orbits a membership test follows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CriticalTimes {
    /// Every time `m` in `0 .. prefix + period`.
    #[default]
    All,
    /// Only the orbit started at time 0. Faster; over-approximates the set.
    TimeZeroOnly,
}

impl FromStr for CriticalTimes {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "all" => Ok(Self::All),
            "zero" | "time-zero" => Ok(Self::TimeZeroOnly),
            other => Err(format!("unknown critical-times mode `{other}` (expected `all` or `zero`)")),
        }
    }
}

impl fmt::Display for CriticalTimes {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::All => "all",
            Self::TimeZeroOnly => "zero",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MembershipConfig {
    pub max_iterations: u32,
    pub critical_times: CriticalTimes,
    pub overflow_guard: f64,
}

impl Default for MembershipConfig {
    fn default() -> Self {
        Self {
            max_iterations: DEFAULT_MAX_ITERATIONS,
            critical_times: CriticalTimes::All,
            overflow_guard: DEFAULT_OVERFLOW_GUARD,
        }
    }
}

impl MembershipConfig {
    pub fn with_iterations(max_iterations: u32) -> Self {
        Self { max_iterations, ..Self::default() }
    }
}

/// A critical orbit that escaped: started at `critical_time`, left the
/// escape disk after `escape_step` applications.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Witness {
    pub critical_time: usize,
    pub escape_step: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Membership {
    pub member: bool,
    pub witness: Option<Witness>,
}

impl Generators {
    /// The witness is the earliest escape over all examined critical times,
    /// ties going to the smallest time. Later orbits only need to run until
    /// they could beat the current witness.
    pub(crate) fn membership(&self, template: &Template, cfg: &MembershipConfig) -> Membership {
        let times = match cfg.critical_times {
            CriticalTimes::All => template.cycle_len(),
            CriticalTimes::TimeZeroOnly => 1,
        };
        let zero = Complex64::new(0.0, 0.0);
        let mut best: Option<Witness> = None;
        for m in 0..times {
            let horizon = match best {
                Some(w) if w.escape_step <= 1 => break,
                Some(w) => w.escape_step - 1,
                None => cfg.max_iterations,
            };
            if let Some(step) = self.orbit(template, m, zero, horizon).escape_step() {
                best = Some(Witness { critical_time: m, escape_step: step });
            }
        }
        Membership { member: best.is_none(), witness: best }
    }
}

/// Finite-horizon test of `(c, d)` in the fixed-template Mandelbrot set.
///
/// Errors are one-sided: a slow-escaping non-member can be reported as a
/// member at a small horizon, never the reverse. A non-member verdict and
/// its witness stay the same at every larger horizon.
pub fn in_mandelbrot(
    point: &ParameterPoint,
    template: &Template,
    cfg: &MembershipConfig,
) -> Result<Membership, DynamicsError> {
    point.check_alphabet(template)?;
    Ok(Generators::new(point, cfg.overflow_guard).membership(template, cfg))
}

// --- parameter literal -------------------------------------------------------

struct ComplexDisplay(Complex64);

impl fmt::Display for ComplexDisplay {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{}", self.0.re, self.0.im)
    }
}

/// `c=(re,im;re,im;...) d=(2;2;...) dmax=2`.
impl fmt::Display for ParameterPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("c=(")?;
        for (i, c) in self.constants.iter().enumerate() {
            if i > 0 {
                f.write_str(";")?;
            }
            write!(f, "{}", ComplexDisplay(*c))?;
        }
        f.write_str(") d=(")?;
        for (i, d) in self.degrees.iter().enumerate() {
            if i > 0 {
                f.write_str(";")?;
            }
            write!(f, "{d}")?;
        }
        write!(f, ") dmax={}", self.max_degree)
    }
}

impl Serialize for ParameterPoint {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

/// Parses the parameter literal.
///
/// Constants are `;`-separated, each `re,im` or a bare real. When `c=(...)`
/// contains no `;` but `d` lists more than one degree, the commas separate
/// real constants instead, so `c=(0,0) d=(2;2)` means `c = (0, 0)`.
/// `d` defaults to all 2 and `dmax` to the largest degree.
impl FromStr for ParameterPoint {
    type Err = DynamicsError;

    fn from_str(literal: &str) -> Result<Self, Self::Err> {
        let err = |column: usize, message: String| DynamicsError::Parse { column, message };
        let mut c_field: Option<(usize, &str)> = None;
        let mut d_field: Option<(usize, &str)> = None;
        let mut dmax_field: Option<(usize, &str)> = None;

        for (start, token) in split_tokens(literal) {
            let column = start + 1;
            let eq = token.find('=').ok_or_else(|| err(column, format!("expected `key=value`, got `{token}`")))?;
            let (key, value) = (&token[..eq], &token[eq + 1..]);
            let value_start = start + eq + 1;
            let slot = match key {
                "c" => &mut c_field,
                "d" => &mut d_field,
                "dmax" => &mut dmax_field,
                _ => return Err(err(column, format!("unknown key `{key}` (expected c, d or dmax)"))),
            };
            if slot.is_some() {
                return Err(err(column, format!("duplicate key `{key}`")));
            }
            *slot = Some((value_start, value));
        }

        let (c_start, c_text) = c_field.ok_or_else(|| err(1, "missing `c=(...)`".into()))?;
        let c_inner = parenthesized(c_text, c_start, &err)?;

        let degrees = match d_field {
            Some((start, text)) => {
                let inner = parenthesized(text, start, &err)?;
                split_list(inner.1, inner.0, ';')
                    .map(|(offset, item)| {
                        item.trim()
                            .parse::<u32>()
                            .map_err(|_| err(offset + 1, format!("degree `{item}` is not a positive integer")))
                    })
                    .collect::<Result<Vec<_>, _>>()?
            }
            None => Vec::new(),
        };

        let real =
            |offset: usize, text: &str| parse_real(text.trim()).map_err(|e| err(offset + e.offset + 1, e.message));
        let reals_only = !c_inner.1.contains(';') && degrees.len() > 1;
        let constants = if reals_only {
            split_list(c_inner.1, c_inner.0, ',')
                .map(|(offset, item)| real(offset, item).map(|re| Complex64::new(re, 0.0)))
                .collect::<Result<Vec<_>, _>>()?
        } else {
            split_list(c_inner.1, c_inner.0, ';')
                .map(|(offset, item)| match item.find(',') {
                    Some(comma) => {
                        Ok(Complex64::new(real(offset, &item[..comma])?, real(offset + comma + 1, &item[comma + 1..])?))
                    }
                    None => real(offset, item).map(|re| Complex64::new(re, 0.0)),
                })
                .collect::<Result<Vec<_>, _>>()?
        };
        let degrees = if d_field.is_none() { vec![2; constants.len()] } else { degrees };
        let max_degree = match dmax_field {
            Some((start, text)) => {
                text.parse::<u32>().map_err(|_| err(start + 1, format!("dmax `{text}` is not a positive integer")))?
            }
            None => degrees.iter().copied().max().unwrap_or(2).max(2),
        };
        ParameterPoint::new(constants, degrees, max_degree)
    }
}

/// Whitespace-separated tokens with their byte offsets.
fn split_tokens(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.split_whitespace().map(move |tok| (tok.as_ptr() as usize - text.as_ptr() as usize, tok))
}

/// Items of `text` split on `sep`, each with its absolute byte offset.
fn split_list(text: &str, base: usize, sep: char) -> impl Iterator<Item = (usize, &str)> {
    let mut offset = base;
    text.split(sep).map(move |item| {
        let here = offset;
        offset += item.len() + 1;
        (here, item)
    })
}

fn parenthesized<'a>(
    text: &'a str,
    start: usize,
    err: &impl Fn(usize, String) -> DynamicsError,
) -> Result<(usize, &'a str), DynamicsError> {
    let inner = text
        .strip_prefix('(')
        .and_then(|t| t.strip_suffix(')'))
        .ok_or_else(|| err(start + 1, format!("expected `(...)`, got `{text}`")))?;
    Ok((start + 1, inner))
}
