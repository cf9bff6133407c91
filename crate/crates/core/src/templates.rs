//! Eventually periodic template sequences over a finite alphabet.
//!
//! A template `s = s_1 s_2 s_3 ...` selects which generator polynomial is
//! applied at each time step. Only eventually periodic sequences are
//! representable: a finite prefix followed by a period repeated forever.
//! Indexing is 1-based, so `symbol_at(1)` is the symbol used for the very
//! first step.
//!
//! The textual form is `D=<alphabet>:<prefix>|<period>`, with each symbol a
//! single base-36 digit, e.g. `D=2:0|1` for `0111...` or `D=2:|01` for
//! `0101...`.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use serde::{Serialize, Serializer};
use thiserror::Error;

/// Largest supported alphabet (one base-36 digit per symbol).
pub const MAX_ALPHABET: usize = 36;

/// Default number of symbols summed by [`ultrametric_distance`].
pub const DEFAULT_METRIC_HORIZON: usize = 64;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TemplateError {
    #[error("template positions start at 1, got 0")]
    ZeroPosition,
    #[error("alphabet size {0} is outside 1..={MAX_ALPHABET}")]
    AlphabetSize(usize),
    #[error("symbol {symbol} is not below the alphabet size {alphabet_size}")]
    SymbolOutOfRange { symbol: u8, alphabet_size: usize },
    #[error("template period must be nonempty")]
    EmptyPeriod,
    #[error("templates over alphabets of size {0} and {1} cannot be compared")]
    AlphabetMismatch(usize, usize),
    #[error("approximation length must be at least 1")]
    ZeroLength,
    #[error("template literal, column {column}: {message}")]
    Parse { column: usize, message: String },
}

/// An eventually periodic symbol sequence `prefix period period period ...`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Template {
    alphabet_size: usize,
    prefix: Vec<u8>,
    period: Vec<u8>,
}

impl Template {
    pub fn new(alphabet_size: usize, prefix: Vec<u8>, period: Vec<u8>) -> Result<Self, TemplateError> {
        if alphabet_size == 0 || alphabet_size > MAX_ALPHABET {
            return Err(TemplateError::AlphabetSize(alphabet_size));
        }
        if period.is_empty() {
            return Err(TemplateError::EmptyPeriod);
        }
        if let Some(&symbol) = prefix.iter().chain(&period).find(|&&s| s as usize >= alphabet_size) {
            return Err(TemplateError::SymbolOutOfRange { symbol, alphabet_size });
        }
        Ok(Self { alphabet_size, prefix, period })
    }

    /// The purely periodic template `period period ...`.
    pub fn periodic(alphabet_size: usize, period: Vec<u8>) -> Result<Self, TemplateError> {
        Self::new(alphabet_size, Vec::new(), period)
    }

    /// The constant template `i i i ...`.
    pub fn constant(alphabet_size: usize, symbol: u8) -> Result<Self, TemplateError> {
        Self::periodic(alphabet_size, vec![symbol])
    }

    pub fn alphabet_size(&self) -> usize {
        self.alphabet_size
    }

    pub fn prefix(&self) -> &[u8] {
        &self.prefix
    }

    pub fn period(&self) -> &[u8] {
        &self.period
    }

    /// Prefix length plus period length. Every tail `shift(m)` is pointwise
    /// equal to one of `shift(0) .. shift(cycle_len() - 1)`.
    pub fn cycle_len(&self) -> usize {
        self.prefix.len() + self.period.len()
    }

    /// Symbol `s_m`, with `m >= 1`.
    pub fn symbol_at(&self, m: usize) -> Result<u8, TemplateError> {
        if m == 0 {
            return Err(TemplateError::ZeroPosition);
        }
        Ok(self.symbol_unchecked(m))
    }

    #[inline]
    fn symbol_unchecked(&self, m: usize) -> u8 {
        let q = self.prefix.len();
        if m <= q {
            self.prefix[m - 1]
        } else {
            self.period[(m - q - 1) % self.period.len()]
        }
    }

    /// Infinite iterator over `s_{m+1}, s_{m+2}, ...`: the symbols driving
    /// the system started at time `m`.
    pub fn symbols_after(&self, m: usize) -> SymbolsAfter<'_> {
        let q = self.prefix.len();
        if m < q {
            SymbolsAfter { template: self, in_prefix: true, index: m }
        } else {
            SymbolsAfter { template: self, in_prefix: false, index: (m - q) % self.period.len() }
        }
    }

    /// The shifted template `sigma^m(s)`, with `shift(s, m)_k = s_{k+m}`.
    pub fn shift(&self, m: usize) -> Template {
        let q = self.prefix.len();
        if m <= q {
            Template {
                alphabet_size: self.alphabet_size,
                prefix: self.prefix[m..].to_vec(),
                period: self.period.clone(),
            }
        } else {
            let mut period = self.period.clone();
            period.rotate_left((m - q) % self.period.len());
            Template { alphabet_size: self.alphabet_size, prefix: Vec::new(), period }
        }
    }

    /// True iff every symbol of the alphabet occurs somewhere in the sequence.
    pub fn is_full(&self) -> bool {
        let mut seen = [false; MAX_ALPHABET];
        for &s in self.prefix.iter().chain(&self.period) {
            seen[s as usize] = true;
        }
        seen[..self.alphabet_size].iter().all(|&b| b)
    }

    /// Number of leading positions that decide pointwise equality with
    /// `other`: past both prefixes, agreement over one common period implies
    /// agreement forever.
    fn decisive_len(&self, other: &Template) -> usize {
        self.prefix.len().max(other.prefix.len()) + self.period.len().lcm(&other.period.len())
    }

    /// Pointwise equality of the infinite sequences, regardless of how they
    /// are represented.
    pub fn pointwise_eq(&self, other: &Template) -> bool {
        self.alphabet_size == other.alphabet_size
            && self.symbols_after(0).zip(other.symbols_after(0)).take(self.decisive_len(other)).all(|(a, b)| a == b)
    }

    /// The purely periodic template repeating the first `n` symbols.
    pub fn periodic_approximation(&self, n: usize) -> Result<Template, TemplateError> {
        if n == 0 {
            return Err(TemplateError::ZeroLength);
        }
        let period: Vec<u8> = self.symbols_after(0).take(n).collect();
        Ok(Template { alphabet_size: self.alphabet_size, prefix: Vec::new(), period })
    }
}

/// Iterator returned by [`Template::symbols_after`]. Never ends.
#[derive(Debug, Clone)]
pub struct SymbolsAfter<'a> {
    template: &'a Template,
    in_prefix: bool,
    index: usize,
}

impl Iterator for SymbolsAfter<'_> {
    type Item = u8;

    #[inline]
    fn next(&mut self) -> Option<u8> {
        if self.in_prefix {
            let s = self.template.prefix[self.index];
            self.index += 1;
            if self.index == self.template.prefix.len() {
                self.in_prefix = false;
                self.index = 0;
            }
            Some(s)
        } else {
            let s = self.template.period[self.index];
            self.index += 1;
            if self.index == self.template.period.len() {
                self.index = 0;
            }
            Some(s)
        }
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        (usize::MAX, None)
    }
}

/// Truncated value of the template ultrametric with its truncation bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct UltrametricDistance {
    pub value: f64,
    /// Upper bound on `true distance - value`. Zero when the sequences agree
    /// past the horizon.
    pub error_bound: f64,
}

/// `sum_{k=1}^{horizon} |s_k - t_k| / D^k`, using integer label differences.
///
/// The truncated sum is accumulated exactly and rounded to the nearest double
/// once.
pub fn ultrametric_distance(s: &Template, t: &Template, horizon: usize) -> Result<UltrametricDistance, TemplateError> {
    if s.alphabet_size != t.alphabet_size {
        return Err(TemplateError::AlphabetMismatch(s.alphabet_size, t.alphabet_size));
    }
    let base = BigInt::from(s.alphabet_size);
    let mut numerator = BigInt::zero();
    for (a, b) in s.symbols_after(0).zip(t.symbols_after(0)).take(horizon) {
        numerator = numerator * &base + BigInt::from(a.abs_diff(b));
    }
    let value = BigRational::new(numerator, num_traits::pow(base, horizon)).to_f64().expect("finite ratio");
    let tails_agree = s.shift(horizon).pointwise_eq(&t.shift(horizon));
    let d = s.alphabet_size as f64;
    let error_bound = if tails_agree || s.alphabet_size == 1 { 0.0 } else { d.powi(-(horizon as i32)) };
    Ok(UltrametricDistance { value, error_bound })
}

impl fmt::Display for Template {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let digit = |s: &u8| char::from_digit(u32::from(*s), 36).expect("symbol below 36");
        write!(f, "D={}:", self.alphabet_size)?;
        self.prefix.iter().map(digit).try_for_each(|c| write!(f, "{c}"))?;
        f.write_str("|")?;
        self.period.iter().map(digit).try_for_each(|c| write!(f, "{c}"))
    }
}

impl Serialize for Template {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl FromStr for Template {
    type Err = TemplateError;

    fn from_str(literal: &str) -> Result<Self, Self::Err> {
        let err = |column: usize, message: &str| TemplateError::Parse { column, message: message.to_string() };
        let rest = literal.strip_prefix("D=").ok_or_else(|| err(1, "expected `D=`"))?;
        let colon = rest.find(':').ok_or_else(|| err(3, "expected `:` after the alphabet size"))?;
        let alphabet_size: usize =
            rest[..colon].parse().map_err(|_| err(3, "alphabet size must be a positive integer"))?;
        if alphabet_size == 0 || alphabet_size > MAX_ALPHABET {
            return Err(err(3, &format!("alphabet size must be in 1..={MAX_ALPHABET}")));
        }
        let body_start = 2 + colon + 1;
        let mut prefix = Vec::new();
        let mut period = Vec::new();
        let mut seen_bar = false;
        for (offset, ch) in literal[body_start..].char_indices() {
            let column = body_start + offset + 1;
            if ch == '|' {
                if seen_bar {
                    return Err(err(column, "more than one `|`"));
                }
                seen_bar = true;
                continue;
            }
            let symbol = ch
                .to_digit(36)
                .filter(|&d| (d as usize) < alphabet_size)
                .ok_or_else(|| err(column, &format!("`{ch}` is not a symbol below {alphabet_size}")))?;
            if seen_bar { &mut period } else { &mut prefix }.push(symbol as u8);
        }
        if !seen_bar {
            return Err(err(literal.len() + 1, "expected `|` separating prefix from period"));
        }
        if period.is_empty() {
            return Err(err(literal.len() + 1, "period must be nonempty"));
        }
        Template::new(alphabet_size, prefix, period)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(literal: &str) -> Template {
        literal.parse().unwrap()
    }

    #[test]
    fn symbol_at_examples() {
        assert_eq!(t("D=2:0|1").symbol_at(1), Ok(0));
        assert_eq!(t("D=2:0|1").symbol_at(5), Ok(1));
        assert_eq!(t("D=2:|01").symbol_at(4), Ok(1));
        assert_eq!(t("D=2:0|1").symbol_at(0), Err(TemplateError::ZeroPosition));
    }

    #[test]
    fn shift_examples() {
        let s = t("D=2:0|1");
        assert_eq!(s.shift(1), t("D=2:|1"));
        assert_eq!(s.shift(0), s);
        // 0101... shifted by 3 is 1010...
        let shifted = t("D=2:|01").shift(3);
        let expected = [1, 0, 1, 0, 1, 0, 1, 0];
        for (k, &e) in expected.iter().enumerate() {
            assert_eq!(shifted.symbol_at(k + 1).unwrap(), e);
        }
        assert!(shifted.pointwise_eq(&t("D=2:|10")));
    }

    #[test]
    fn fullness() {
        assert!(t("D=2:0|1").is_full());
        assert!(!t("D=2:|1").is_full());
        assert!(!t("D=3:01|1").is_full());
        assert!(t("D=1:|0").is_full());
    }

    #[test]
    fn ultrametric_examples() {
        let s = t("D=2:0|1");
        assert_eq!(ultrametric_distance(&s, &s, 64).unwrap(), UltrametricDistance { value: 0.0, error_bound: 0.0 });

        let d = ultrametric_distance(&s, &t("D=2:|1"), 1).unwrap();
        assert_eq!(d, UltrametricDistance { value: 0.5, error_bound: 0.0 });

        let d = ultrametric_distance(&t("D=2:|01"), &s, 64).unwrap();
        assert_eq!(d.error_bound, 2f64.powi(-64));
        assert!((d.value - 1.0 / 6.0).abs() <= d.error_bound);

        assert_eq!(ultrametric_distance(&s, &t("D=3:0|1"), 8), Err(TemplateError::AlphabetMismatch(2, 3)));
    }

    #[test]
    fn weighted_sum_is_not_an_ultrametric() {
        // 0111..., 1000... and 1111...: the far pair is the sum of the near ones.
        let (s, t_, u) = (t("D=2:0|1"), t("D=2:1|0"), t("D=2:|1"));
        let st = ultrametric_distance(&s, &t_, 64).unwrap();
        let su = ultrametric_distance(&s, &u, 64).unwrap();
        let tu = ultrametric_distance(&t_, &u, 64).unwrap();
        assert_eq!(su.value, 0.5);
        assert!((tu.value - 0.5).abs() <= tu.error_bound);
        assert!(st.value > su.value.max(tu.value) + st.error_bound + su.error_bound + tu.error_bound);
        assert!(st.value <= su.value + tu.value + st.error_bound + tu.error_bound);
    }

    #[test]
    fn periodic_approximation_examples() {
        let s = t("D=2:0|1");
        assert_eq!(s.periodic_approximation(3).unwrap(), t("D=2:|011"));
        let ones = t("D=2:|1");
        let approx = ones.periodic_approximation(2).unwrap();
        assert_eq!(approx, t("D=2:|11"));
        assert!(approx.pointwise_eq(&ones));
        assert_eq!(s.periodic_approximation(0), Err(TemplateError::ZeroLength));
    }

    #[test]
    fn periodic_approximation_distance_by_enumeration() {
        // Direct definitions of both sequences, independent of Template.
        let limit = |k: usize| u8::from(k != 1);
        let approx = |k: usize| u8::from((k - 1) % 20 != 0);
        let mut expected = 0.0;
        let mut first_difference = None;
        for k in 1..=64 {
            if limit(k) != approx(k) {
                first_difference.get_or_insert(k);
                expected += 2f64.powi(-(k as i32));
            }
        }
        assert_eq!(first_difference, Some(21));

        let s = t("D=2:0|1");
        let u = s.periodic_approximation(20).unwrap();
        let d = ultrametric_distance(&s, &u, 64).unwrap();
        assert_eq!(d.value, expected);
        assert_eq!(expected, 2f64.powi(-21) + 2f64.powi(-41) + 2f64.powi(-61));
        assert!(!u.pointwise_eq(&s));
    }

    #[test]
    fn pointwise_equality_ignores_representation() {
        assert!(t("D=2:0|10").pointwise_eq(&t("D=2:|01")));
        assert!(t("D=3:|012012").pointwise_eq(&t("D=3:0|120")));
        assert!(!t("D=2:|01").pointwise_eq(&t("D=2:|0101011")));
    }

    #[test]
    fn literal_round_trip_and_errors() {
        for literal in ["D=2:0|1", "D=2:|01", "D=36:az|z0"] {
            assert_eq!(t(literal).to_string(), literal);
        }
        let column = |literal: &str| match literal.parse::<Template>() {
            Err(TemplateError::Parse { column, .. }) => column,
            other => panic!("expected parse error, got {other:?}"),
        };
        assert_eq!(column("2:0|1"), 1);
        assert_eq!(column("D=2:02|1"), 6);
        assert_eq!(column("D=2:01"), 7);
        assert_eq!(column("D=2:0|"), 7);
        assert_eq!(column("D=2:0|1|1"), 8);
        assert_eq!(column("D=0:|0"), 3);
    }

    #[test]
    fn symbols_after_matches_symbol_at() {
        let s = t("D=3:012|21");
        for m in 0..10 {
            let from_iter: Vec<u8> = s.symbols_after(m).take(12).collect();
            let direct: Vec<u8> = (1..=12).map(|k| s.symbol_at(m + k).unwrap()).collect();
            assert_eq!(from_iter, direct, "start {m}");
        }
    }
}
