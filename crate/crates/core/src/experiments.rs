//! Experiment harnesses: the upper-semicontinuity trend, the
//! lower-semicontinuity counterexample, boundedness and invariance checks.
//!
//! Counterexample symbols. With `0 < eps0, eps1 <= 1/8`:
//!
//! - `c0 = 1/2 - eps0`, `c1 = 1/4 - eps1`, generators `f_c0`, `f_c1`;
//! - `alpha = 1/2 - sqrt(eps1)` attracting and `beta = 1/2 + sqrt(eps1)`
//!   repelling fixed points of `f_c1`, with multiplier `1 - 2 sqrt(eps1)` at alpha;
//! - inequality (9): `3 sqrt(eps1) - eps1 + eps0 < 1/4`, which forces
//!   inequality (10): `f_c0(alpha) > beta + sqrt(eps1)`.
//!
//! The excluded ball radius `eta'` and the auxiliary bounds `eta`, `delta`,
//! `tau_0`, `N_0`, `N_1` exist but have no closed form. They are not computed
//! here; [`run_lsc_counterexample`] reports an empirical radius `eta_emp`
//! instead.
//!
//! Random draws use ChaCha8 keyed by `(seed, sample index)`, so results do not
//! depend on how samples are spread over threads.

use std::f64::consts::TAU;
use std::time::{Duration, Instant};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};
use thiserror::Error;

use crate::dynamics::{
    classify_orbit, compose, in_mandelbrot, DynamicsError, MembershipConfig, Outcome, ParameterPoint,
};
use crate::metrics::{compare, MetricsError};
use crate::raster::{raster_mandelbrot_slice, Raster, RasterError, SliceSpec};
use crate::templates::{Template, TemplateError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExperimentError {
    #[error("eps must lie in (0, 1/8], got {0}")]
    EpsOutOfRange(f64),
    #[error("inequality (9) fails for these constants")]
    Check9Failed,
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Template(#[from] TemplateError),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    Raster(#[from] RasterError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
}

type Result<T> = std::result::Result<T, ExperimentError>;

fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

// --- reports -----------------------------------------------------------------

/// One pass/fail verdict with the numbers it was decided from.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub observed: f64,
    pub bound: f64,
    pub tolerance: f64,
    pub detail: String,
}

impl Check {
    /// `observed <= bound + tolerance`.
    pub fn at_most(name: impl Into<String>, observed: f64, bound: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            passed: observed <= bound + tolerance,
            observed,
            bound,
            tolerance,
            detail: format!("{observed} <= {bound} + {tolerance}"),
        }
    }

    /// `observed >= bound`.
    pub fn at_least(name: impl Into<String>, observed: f64, bound: f64) -> Self {
        Self {
            name: name.into(),
            passed: observed >= bound,
            observed,
            bound,
            tolerance: 0.0,
            detail: format!("{observed} >= {bound}"),
        }
    }

    pub fn holds(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        let value = if passed { 1.0 } else { 0.0 };
        Self { name: name.into(), passed, observed: value, bound: 1.0, tolerance: 0.0, detail: detail.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub experiment: String,
    pub config: Value,
    pub results: Value,
    pub checks: Vec<Check>,
    pub warnings: Vec<String>,
    pub passed: bool,
    /// Kept out of the JSON so reports are reproducible byte for byte.
    #[serde(skip)]
    pub wall_time: Duration,
}

impl ExperimentReport {
    fn new(
        experiment: &str,
        config: Value,
        results: Value,
        checks: Vec<Check>,
        warnings: Vec<String>,
        started: Instant,
    ) -> Self {
        let passed = checks.iter().all(|c| c.passed);
        Self {
            experiment: experiment.to_string(),
            config,
            results,
            checks,
            warnings,
            passed,
            wall_time: started.elapsed(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

// --- counterexample constants ------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CounterexampleConstants {
    pub eps0: f64,
    pub eps1: f64,
    pub c0: f64,
    pub c1: f64,
    pub alpha: f64,
    pub beta: f64,
    pub multiplier: f64,
    /// `3 sqrt(eps1) - eps1 + eps0`.
    pub check_9_lhs: f64,
    pub check_9: bool,
    /// `alpha^2 + 1/2 - eps0`, that is `f_c0(alpha)`.
    pub f_c0_alpha: f64,
    /// `beta + sqrt(eps1)`.
    pub check_10_rhs: f64,
    pub check_10: bool,
    pub alpha_residual: f64,
    pub beta_residual: f64,
}

pub fn counterexample_constants(eps0: f64, eps1: f64) -> Result<CounterexampleConstants> {
    for eps in [eps0, eps1] {
        if !(eps > 0.0 && eps <= 0.125) {
            return Err(ExperimentError::EpsOutOfRange(eps));
        }
    }
    let root = eps1.sqrt();
    let c0 = 0.5 - eps0;
    let c1 = 0.25 - eps1;
    let alpha = 0.5 - root;
    let beta = 0.5 + root;
    let check_9_lhs = 3.0 * root - eps1 + eps0;
    let f_c0_alpha = alpha * alpha + 0.5 - eps0;
    let check_10_rhs = beta + root;
    Ok(CounterexampleConstants {
        eps0,
        eps1,
        c0,
        c1,
        alpha,
        beta,
        multiplier: 1.0 - 2.0 * root,
        check_9_lhs,
        check_9: check_9_lhs < 0.25,
        f_c0_alpha,
        check_10_rhs,
        check_10: f_c0_alpha > check_10_rhs,
        alpha_residual: (alpha * alpha + c1 - alpha).abs(),
        beta_residual: (beta * beta + c1 - beta).abs(),
    })
}

/// Sign in front of `eps1` when building the counterexample's `c1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum C1Sign {
    /// `c1 = 1/4 - eps1`, for which `alpha`, `beta` are real.
    #[default]
    Minus,
    /// `c1 = 1/4 + eps1`, as printed in the figure captions.
    Plus,
}

impl std::str::FromStr for C1Sign {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "minus" | "-" => Ok(Self::Minus),
            "plus" | "+" => Ok(Self::Plus),
            other => Err(format!("unknown c1 sign `{other}` (expected `minus` or `plus`)")),
        }
    }
}

impl std::fmt::Display for C1Sign {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Minus => "minus",
            Self::Plus => "plus",
        })
    }
}

impl CounterexampleConstants {
    pub fn c1_with(&self, sign: C1Sign) -> f64 {
        match sign {
            C1Sign::Minus => self.c1,
            C1Sign::Plus => 0.25 + self.eps1,
        }
    }

    /// `((c0, c1), (2, 2))`.
    pub fn parameter(&self, sign: C1Sign) -> ParameterPoint {
        ParameterPoint::quadratic(vec![Complex64::new(self.c0, 0.0), Complex64::new(self.c1_with(sign), 0.0)])
            .expect("finite constants")
    }
}

/// The limit template `0111...`.
pub fn counterexample_template() -> Template {
    Template::new(2, vec![0], vec![1]).expect("valid template")
}

/// Report warnings for a choice of sign; empty for the default.
pub fn sign_warning(sign: C1Sign) -> Vec<String> {
    match sign {
        C1Sign::Minus => Vec::new(),
        C1Sign::Plus => vec!["c1 = 1/4 + eps1 lies outside the classical Mandelbrot set, so the limit set is empty; \
             the counterexample argument needs c1 = 1/4 - eps1"
            .to_string()],
    }
}

// --- upper semicontinuity ----------------------------------------------------

/// Distances for one slice and one approximation period.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UscRow {
    pub slice: usize,
    pub coordinate: usize,
    pub n: usize,
    /// `d(M^{s^N} slice, M^s slice)`.
    pub d_approx_limit: f64,
    pub d_limit_approx: f64,
    pub d_h: f64,
    pub quantization_bound: f64,
    pub inside_approx: usize,
    pub inside_limit: usize,
}

/// Rasters produced by [`run_usc_experiment`], kept for rendering.
#[derive(Debug, Clone)]
pub struct UscRun {
    pub report: ExperimentReport,
    pub rows: Vec<UscRow>,
    /// Per slice: the limit raster followed by one raster per `N`.
    pub rasters: Vec<Vec<Raster>>,
}

impl UscRun {
    pub fn csv(&self) -> String {
        let mut out = String::from("slice,coordinate,N,d_approx_limit,d_limit_approx,d_H,quantization_bound\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                r.slice, r.coordinate, r.n, r.d_approx_limit, r.d_limit_approx, r.d_h, r.quantization_bound
            ));
        }
        out
    }
}

/// Rasterizes every slice for `s` and for each `periodic_approximation(s, N)`
/// and records the directed distance from approximation to limit.
///
/// Per slice the verdict needs the directed distances to be non-increasing
/// in `N` up to the two adjacent quantization bounds, and the last distance
/// to be within two quantization bounds or below the first.
pub fn run_usc_experiment(
    s: &Template,
    slices: &[SliceSpec],
    n_list: &[usize],
    cfg: &MembershipConfig,
) -> Result<UscRun> {
    let started = Instant::now();
    if n_list.is_empty() {
        return Err(ExperimentError::Invalid("N list is empty".into()));
    }
    let mut warnings = Vec::new();
    if !s.is_full() {
        warnings.push(format!("template {s} is not full; the convergence theorem assumes every symbol occurs"));
    }
    let mut rows = Vec::new();
    let mut rasters = Vec::new();
    let mut checks = Vec::new();
    for (index, spec) in slices.iter().enumerate() {
        let limit = raster_mandelbrot_slice(spec, s, cfg)?;
        let mut slice_rasters = vec![limit.clone()];
        let mut slice_rows: Vec<UscRow> = Vec::new();
        for &n in n_list {
            let approx = raster_mandelbrot_slice(spec, &s.periodic_approximation(n)?, cfg)?;
            let cmp = compare(&approx, &limit)?;
            slice_rows.push(UscRow {
                slice: index,
                coordinate: spec.coordinate(),
                n,
                d_approx_limit: cmp.d_ab,
                d_limit_approx: cmp.d_ba,
                d_h: cmp.d_h,
                quantization_bound: cmp.quantization_bound,
                inside_approx: approx.inside_count(),
                inside_limit: limit.inside_count(),
            });
            slice_rasters.push(approx);
        }
        for pair in slice_rows.windows(2) {
            let slack = pair[0].quantization_bound + pair[1].quantization_bound;
            checks.push(Check::at_most(
                format!("slice {index} (c_{}): d(N={}) <= d(N={})", spec.coordinate(), pair[1].n, pair[0].n),
                pair[1].d_approx_limit,
                pair[0].d_approx_limit,
                slack,
            ));
        }
        let (first, last) = (&slice_rows[0], &slice_rows[slice_rows.len() - 1]);
        let near_zero = last.d_approx_limit <= 2.0 * last.quantization_bound;
        let shrank = last.d_approx_limit < first.d_approx_limit;
        checks.push(Check::holds(
            format!("slice {index} (c_{}): final distance small or below first", spec.coordinate()),
            near_zero || shrank,
            format!(
                "d(N={}) = {}, 2*bound = {}, d(N={}) = {}",
                last.n,
                last.d_approx_limit,
                2.0 * last.quantization_bound,
                first.n,
                first.d_approx_limit
            ),
        ));
        rows.extend(slice_rows);
        rasters.push(slice_rasters);
    }
    let config = json!({
        "template": s,
        "slices": slices.iter().map(|spec| json!({
            "base": spec.base(),
            "coordinate": spec.coordinate(),
            "window": spec.window(),
        })).collect::<Vec<_>>(),
        "n_list": n_list,
        "membership": cfg,
    });
    let report = ExperimentReport::new("usc", config, json!({ "rows": rows }), checks, warnings, started);
    Ok(UscRun { report, rows, rasters })
}

// --- lower semicontinuity counterexample ------------------------------------

/// How parameter points around the center are sampled.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeSpec {
    /// Sphere radii in the product metric, tested in increasing order.
    pub radii: Vec<f64>,
    pub samples_per_radius: usize,
    pub seed: u64,
}

impl Default for ProbeSpec {
    fn default() -> Self {
        Self { radii: vec![0.002, 0.005, 0.01, 0.02], samples_per_radius: 256, seed: 42 }
    }
}

/// Offset `(dc0, dc1)` with `max(|dc0|, |dc1|) = r`.
///
/// Sample `k` cycles through three patterns: both moduli equal to `r`, only
/// the first, only the second. The free modulus is uniform in `[0, r]`. The
/// first angle is stratified over the `n` samples, the second is uniform.
pub fn sphere_sample(r: f64, k: usize, n: usize, rng: &mut impl Rng) -> (Complex64, Complex64) {
    let u: f64 = rng.random();
    let jitter: f64 = rng.random();
    let theta1 = TAU * rng.random::<f64>();
    let theta0 = TAU * (k as f64 + jitter) / n as f64;
    let (m0, m1) = match k % 3 {
        0 => (r, r),
        1 => (r, u * r),
        _ => (u * r, r),
    };
    (Complex64::from_polar(m0, theta0), Complex64::from_polar(m1, theta1))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LscRow {
    pub n: usize,
    pub center_member: bool,
    /// Members found per radius, in probe order.
    pub members_per_radius: Vec<usize>,
    pub eta_emp: f64,
}

/// Checks that `(c0, c1)` is a member for `0111...` and measures, per `N`,
/// the largest probe radius up to which every sampled point (and the center)
/// is a non-member for the `N`-periodic approximation.
pub fn run_lsc_counterexample(
    consts: &CounterexampleConstants,
    sign: C1Sign,
    n_list: &[usize],
    probe: &ProbeSpec,
    cfg: &MembershipConfig,
) -> Result<ExperimentReport> {
    let started = Instant::now();
    if !consts.check_9 {
        return Err(ExperimentError::Check9Failed);
    }
    if n_list.is_empty() || probe.radii.is_empty() || probe.samples_per_radius == 0 {
        return Err(ExperimentError::Invalid("N list, radii and sample count must be nonempty".into()));
    }
    let mut radii = probe.radii.clone();
    radii.sort_by(f64::total_cmp);

    let s = counterexample_template();
    let center = consts.parameter(sign);
    let limit_membership = in_mandelbrot(&center, &s, cfg)?;
    let mut checks = vec![Check::holds(
        "center is a member for the limit template",
        limit_membership.member,
        format!("{limit_membership:?}"),
    )];

    let n_samples = probe.samples_per_radius;
    let mut rows = Vec::new();
    for &n in n_list {
        let approx = s.periodic_approximation(n)?;
        let center_member = in_mandelbrot(&center, &approx, cfg)?.member;
        let mut members_per_radius = Vec::with_capacity(radii.len());
        for (ri, &r) in radii.iter().enumerate() {
            let members = (0..n_samples)
                .into_par_iter()
                .map(|k| {
                    let mut rng = rng_for(probe.seed, ((ri as u64) << 32) | k as u64);
                    let (d0, d1) = sphere_sample(r, k, n_samples, &mut rng);
                    let point = ParameterPoint::quadratic(vec![center.constants()[0] + d0, center.constants()[1] + d1])
                        .expect("finite sample");
                    in_mandelbrot(&point, &approx, cfg).expect("alphabet checked").member
                })
                .filter(|&member| member)
                .count();
            members_per_radius.push(members);
        }
        let eta_emp = if center_member {
            0.0
        } else {
            radii.iter().zip(&members_per_radius).take_while(|(_, &m)| m == 0).last().map_or(0.0, |(&r, _)| r)
        };
        checks.push(Check::holds(format!("N={n}: eta_emp > 0"), eta_emp > 0.0, format!("eta_emp = {eta_emp}")));
        rows.push(LscRow { n, center_member, members_per_radius, eta_emp });
    }
    let (first, last) = (rows[0].eta_emp, rows[rows.len() - 1].eta_emp);
    checks.push(Check::at_least(
        format!("eta_emp(N={}) >= 0.5 * eta_emp(N={})", n_list[n_list.len() - 1], n_list[0]),
        last,
        0.5 * first,
    ));

    let config = json!({
        "constants": consts,
        "c1_sign": sign,
        "parameter": center,
        "template": s,
        "n_list": n_list,
        "probe": { "radii": radii, "samples_per_radius": n_samples, "seed": probe.seed },
        "membership": cfg,
    });
    let results = json!({ "limit_membership": limit_membership, "rows": rows });
    Ok(ExperimentReport::new("lsc", config, results, checks, sign_warning(sign), started))
}

// --- boundedness -------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundednessSpec {
    pub trials: usize,
    /// Alphabet sizes, used round-robin over trials.
    pub dimensions: Vec<usize>,
    pub max_degree: u32,
    pub members: usize,
    pub probes_per_member: usize,
    pub seed: u64,
}

impl Default for BoundednessSpec {
    fn default() -> Self {
        Self { trials: 1000, dimensions: vec![1, 2, 3], max_degree: 4, members: 100, probes_per_member: 16, seed: 42 }
    }
}

fn random_disk(rng: &mut impl Rng, radius: f64) -> Complex64 {
    Complex64::from_polar(radius * rng.random::<f64>().sqrt(), TAU * rng.random::<f64>())
}

fn random_annulus(rng: &mut impl Rng, inner: f64, outer: f64) -> Complex64 {
    let r = loop {
        let r = rng.random_range(inner..outer);
        if r > inner {
            break r;
        }
    };
    Complex64::from_polar(r, TAU * rng.random::<f64>())
}

/// Eventually periodic template with prefix and period of length at most 8
/// in which every symbol occurs.
pub fn random_full_template(rng: &mut impl Rng, alphabet: usize) -> Template {
    loop {
        let prefix_len = rng.random_range(0..=8);
        let period_len = rng.random_range(1..=8);
        let mut draw = |len: usize| -> Vec<u8> { (0..len).map(|_| rng.random_range(0..alphabet) as u8).collect() };
        let prefix = draw(prefix_len);
        let period = draw(period_len);
        let t = Template::new(alphabet, prefix, period).expect("symbols in range");
        if t.is_full() {
            return t;
        }
    }
}

fn random_parameter(rng: &mut impl Rng, dimension: usize, max_degree: u32, radius: f64) -> ParameterPoint {
    let constants = (0..dimension).map(|_| random_disk(rng, radius)).collect();
    let degrees = (0..dimension).map(|_| rng.random_range(2..=max_degree)).collect();
    ParameterPoint::new(constants, degrees, max_degree).expect("valid parameter")
}

/// Random full templates with one constant forced into `2.05 < |c| < 5` must
/// all be non-members. Random members found by rejection inside the closed
/// 2-disk must send every probe `2.05 < |z| < 3` to infinity from every
/// critical time.
pub fn verify_boundedness(spec: &BoundednessSpec, cfg: &MembershipConfig) -> Result<ExperimentReport> {
    let started = Instant::now();
    if spec.trials == 0 || spec.dimensions.is_empty() || spec.max_degree < 2 {
        return Err(ExperimentError::Invalid("need trials >= 1, some dimensions and max degree >= 2".into()));
    }
    let outside: Vec<(String, String, bool)> = (0..spec.trials)
        .into_par_iter()
        .map(|k| {
            let mut rng = rng_for(spec.seed, k as u64);
            let dimension = spec.dimensions[k % spec.dimensions.len()];
            let template = random_full_template(&mut rng, dimension);
            let base = random_parameter(&mut rng, dimension, spec.max_degree, 2.0);
            let forced = rng.random_range(0..dimension);
            let point = base.with_constant(forced, random_annulus(&mut rng, 2.05, 5.0)).expect("finite");
            let member = in_mandelbrot(&point, &template, cfg).expect("alphabet matches").member;
            (template.to_string(), point.to_string(), member)
        })
        .collect();
    let false_members: Vec<_> = outside.iter().filter(|(_, _, m)| *m).map(|(t, p, _)| json!([t, p])).collect();

    // Rejection sampling is sequential in the stream index so the accepted
    // members do not depend on scheduling.
    const MEMBER_STREAM: u64 = 1 << 40;
    const MAX_ATTEMPTS: u64 = 5_000_000;
    let mut members = Vec::new();
    let mut attempts = 0u64;
    let batch = 4096u64;
    while members.len() < spec.members && attempts < MAX_ATTEMPTS {
        let found: Vec<(Template, ParameterPoint)> = (attempts..attempts + batch)
            .into_par_iter()
            .filter_map(|a| {
                let mut rng = rng_for(spec.seed, MEMBER_STREAM + a);
                let dimension = spec.dimensions[(a as usize) % spec.dimensions.len()];
                let template = random_full_template(&mut rng, dimension);
                let point = random_parameter(&mut rng, dimension, spec.max_degree, 2.0);
                in_mandelbrot(&point, &template, cfg).expect("alphabet matches").member.then_some((template, point))
            })
            .collect();
        attempts += batch;
        members.extend(found);
    }
    members.truncate(spec.members);

    let probe_failures: Vec<Value> = members
        .par_iter()
        .enumerate()
        .flat_map_iter(|(index, (template, point))| {
            let mut rng = rng_for(spec.seed, (2 << 40) + index as u64);
            let probes: Vec<Complex64> =
                (0..spec.probes_per_member).map(|_| random_annulus(&mut rng, 2.05, 3.0)).collect();
            let mut failures = Vec::new();
            for m in 0..template.cycle_len() {
                for &z in &probes {
                    let verdict = classify_orbit(point, template, m, z, cfg.max_iterations, cfg.overflow_guard)
                        .expect("alphabet matches");
                    if verdict.is_bounded() {
                        failures.push(json!({ "template": template, "parameter": point, "m": m, "z": [z.re, z.im] }));
                    }
                }
            }
            failures
        })
        .collect();

    let checks = vec![
        Check::at_most("forced |c| > 2.05 is never a member", false_members.len() as f64, 0.0, 0.0),
        Check::at_least("members found by rejection sampling", members.len() as f64, spec.members as f64),
        Check::at_most("probes with |z| > 2.05 all escape", probe_failures.len() as f64, 0.0, 0.0),
    ];
    let config = json!({ "spec": spec, "membership": cfg });
    let results = json!({
        "non_member_trials": spec.trials,
        "false_members": false_members,
        "members_found": members.len(),
        "rejection_attempts": attempts,
        "probes": members.len() * spec.probes_per_member,
        "probe_failures": probe_failures,
    });
    Ok(ExperimentReport::new("bounds", config, results, checks, Vec::new(), started))
}

// --- complete invariance -----------------------------------------------------

/// Tally of invariance samples.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct InvarianceTally {
    pub samples: usize,
    pub escaped_checked: usize,
    pub bounded_checked: usize,
    /// Escaped before reaching time `n`; the restatement says nothing.
    pub vacuous: usize,
    pub violations: Vec<Value>,
}

/// One invariance sample: `z` from time `m` versus its image at time `n`.
///
/// Escaped(k) with `k > n - m` must become Escaped(k - (n - m)); Bounded(H)
/// must stay bounded for `H - (n - m)` steps. Returns `None` when vacuous.
pub fn invariance_sample(
    point: &ParameterPoint,
    template: &Template,
    z: Complex64,
    m: usize,
    n: usize,
    horizon: u32,
    guard: f64,
) -> Result<Option<(bool, bool)>> {
    let lag = (n - m) as u32;
    let before = classify_orbit(point, template, m, z, horizon, guard)?;
    let escaped = match before.outcome {
        Outcome::Escaped { step } if step <= lag => return Ok(None),
        Outcome::Escaped { .. } => true,
        Outcome::Bounded { .. } => false,
    };
    let image = compose(point, template, m, n, z)?;
    let after = classify_orbit(point, template, n, image, horizon - lag, guard)?;
    let holds = match (before.outcome, after.outcome) {
        (Outcome::Escaped { step }, Outcome::Escaped { step: later }) => later == step - lag,
        (Outcome::Bounded { .. }, Outcome::Bounded { .. }) => true,
        _ => false,
    };
    Ok(Some((escaped, holds)))
}

/// Random `z` in the disk of radius `R + 1` and random `0 <= m < n <= horizon / 2`,
/// mixed with short lags from the unit disk.
pub fn verify_invariance(
    samples: usize,
    point: &ParameterPoint,
    template: &Template,
    horizon: u32,
    seed: u64,
) -> Result<ExperimentReport> {
    let started = Instant::now();
    let tally = invariance_tally(samples, point, template, horizon, seed, 0)?;
    let checks = vec![Check::at_most("invariance violations", tally.violations.len() as f64, 0.0, 0.0)];
    let config =
        json!({ "samples": samples, "parameter": point, "template": template, "horizon": horizon, "seed": seed });
    Ok(ExperimentReport::new("invariance", config, json!(tally), checks, Vec::new(), started))
}

fn invariance_tally(
    samples: usize,
    point: &ParameterPoint,
    template: &Template,
    horizon: u32,
    seed: u64,
    stream_base: u64,
) -> Result<InvarianceTally> {
    if horizon < 2 {
        return Err(ExperimentError::Invalid("horizon must be at least 2".into()));
    }
    if template.alphabet_size() != point.dimension() {
        return Err(DynamicsError::AlphabetMismatch {
            template: template.alphabet_size(),
            dimension: point.dimension(),
        }
        .into());
    }
    let radius = point.escape_radius() + 1.0;
    let half = (horizon / 2) as usize;
    let outcomes: Vec<(Complex64, usize, usize, Option<(bool, bool)>)> = (0..samples)
        .into_par_iter()
        .map(|k| {
            let mut rng = rng_for(seed, stream_base + k as u64);
            // Half the draws use short lags and points near the origin; with
            // uniform draws almost every orbit escapes before time n.
            let near = rng.random_bool(0.5);
            let z = random_disk(&mut rng, if near { 1.0 } else { radius });
            let m = rng.random_range(0..half);
            let n = if near { m + rng.random_range(1..=8usize.min(half)) } else { rng.random_range(m + 1..=half) };
            let result = invariance_sample(point, template, z, m, n, horizon, crate::dynamics::DEFAULT_OVERFLOW_GUARD)
                .expect("checked inputs");
            (z, m, n, result)
        })
        .collect();
    let mut tally = InvarianceTally { samples, ..Default::default() };
    for (z, m, n, result) in outcomes {
        match result {
            None => tally.vacuous += 1,
            Some((escaped, holds)) => {
                if escaped {
                    tally.escaped_checked += 1;
                } else {
                    tally.bounded_checked += 1;
                }
                if !holds {
                    tally.violations.push(json!({ "z": [z.re, z.im], "m": m, "n": n }));
                }
            }
        }
    }
    Ok(tally)
}

/// [`verify_invariance`] over `pairs` random parameter/template pairs,
/// `samples` draws in total.
pub fn verify_invariance_random(samples: usize, pairs: usize, horizon: u32, seed: u64) -> Result<ExperimentReport> {
    let started = Instant::now();
    if pairs == 0 {
        return Err(ExperimentError::Invalid("need at least one pair".into()));
    }
    let mut rows = Vec::new();
    let mut violations = 0;
    for pair in 0..pairs {
        let mut rng = rng_for(seed, (3 << 40) + pair as u64);
        let dimension = rng.random_range(1..=3);
        let template = random_full_template(&mut rng, dimension);
        let point = random_parameter(&mut rng, dimension, 4, 1.0);
        let share = samples / pairs + usize::from(pair < samples % pairs);
        let tally = invariance_tally(share, &point, &template, horizon, seed, (pair as u64) << 32)?;
        violations += tally.violations.len();
        rows.push(json!({ "parameter": point, "template": template, "tally": tally }));
    }
    let checks = vec![Check::at_most("invariance violations", violations as f64, 0.0, 0.0)];
    let config = json!({ "samples": samples, "pairs": pairs, "horizon": horizon, "seed": seed });
    Ok(ExperimentReport::new("invariance", config, json!({ "pairs": rows }), checks, Vec::new(), started))
}
