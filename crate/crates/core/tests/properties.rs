use proptest::prelude::*;
use tmandel::experiments::invariance_sample;
use tmandel::raster::{boundary_of, Window};
use tmandel::{
    classify_orbit, in_mandelbrot, raster_filled_julia, step, ultrametric_distance, Complex64, MembershipConfig,
    Outcome, ParameterPoint, Template,
};

const GUARD: f64 = 1e150;

fn template(alphabet: usize) -> impl Strategy<Value = Template> {
    let symbol = 0..alphabet as u8;
    (proptest::collection::vec(symbol.clone(), 0..=8), proptest::collection::vec(symbol, 1..=8))
        .prop_map(move |(prefix, period)| Template::new(alphabet, prefix, period).unwrap())
}

fn constant(radius: f64) -> impl Strategy<Value = Complex64> {
    (-radius..radius, -radius..radius).prop_map(|(re, im)| Complex64::new(re, im))
}

fn system(max_dimension: usize) -> impl Strategy<Value = (ParameterPoint, Template)> {
    (1..=max_dimension).prop_flat_map(|dim| {
        (proptest::collection::vec(constant(2.0), dim), proptest::collection::vec(2u32..=4, dim), template(dim))
            .prop_map(|(c, d, t)| (ParameterPoint::new(c, d, 4).unwrap(), t))
    })
}

proptest! {
    #[test]
    fn template_distance_is_a_symmetric_metric(
        (s, t, u) in (1usize..=3).prop_flat_map(|d| (template(d), template(d), template(d)))
    ) {
        let st = ultrametric_distance(&s, &t, 64).unwrap();
        let ts = ultrametric_distance(&t, &s, 64).unwrap();
        let su = ultrametric_distance(&s, &u, 64).unwrap();
        let tu = ultrametric_distance(&t, &u, 64).unwrap();
        prop_assert_eq!(st, ts);
        // Each value is rounded once; allow for that and for the sum itself.
        let rounding = 4.0 * f64::EPSILON * (st.value + tu.value);
        prop_assert!(su.value <= st.value + tu.value + su.error_bound + st.error_bound + tu.error_bound + rounding);
        if s.pointwise_eq(&t) {
            prop_assert_eq!((st.value, st.error_bound), (0.0, 0.0));
        }
        if st.value == 0.0 && st.error_bound == 0.0 {
            prop_assert!(s.pointwise_eq(&t));
        }
    }

    #[test]
    fn shifts_compose(s in template(3), a in 0usize..20, b in 0usize..20) {
        prop_assert!(s.shift(a).shift(b).pointwise_eq(&s.shift(a + b)));
        let k = s.shift(a);
        prop_assert!((0..s.cycle_len()).any(|m| s.shift(m).pointwise_eq(&k)));
    }

    #[test]
    fn periodic_approximation_is_close(s in template(2), n in 1usize..40) {
        let u = s.periodic_approximation(n).unwrap();
        let d = ultrametric_distance(&s, &u, 64).unwrap();
        prop_assert!(d.value <= 2f64.powi(-(n as i32)) + d.error_bound);
        for k in 1..=n {
            prop_assert_eq!(u.symbol_at(k).unwrap(), s.symbol_at(k).unwrap());
        }
    }

    #[test]
    fn non_membership_is_stable_in_the_horizon((p, t) in system(3), h in 1u32..120, extra in 0u32..200) {
        let low = in_mandelbrot(&p, &t, &MembershipConfig::with_iterations(h)).unwrap();
        let high = in_mandelbrot(&p, &t, &MembershipConfig::with_iterations(h + extra)).unwrap();
        if !low.member {
            prop_assert_eq!(low, high);
        }
        if high.member {
            prop_assert!(low.member);
        }
    }

    #[test]
    fn even_degrees_forget_the_sign(
        (c, t) in (1usize..=3).prop_flat_map(|d| (proptest::collection::vec(constant(2.0), d), template(d))),
        degrees in proptest::collection::vec(prop_oneof![Just(2u32), Just(4u32)], 3),
        z in constant(3.0),
        m in 0usize..12,
    ) {
        let dim = c.len();
        let p = ParameterPoint::new(c, degrees[..dim].to_vec(), 4).unwrap();
        let plus = classify_orbit(&p, &t, m, z, 200, GUARD).unwrap();
        let minus = classify_orbit(&p, &t, m, -z, 200, GUARD).unwrap();
        prop_assert_eq!(plus, minus);
    }

    #[test]
    fn escape_is_permanent((p, t) in system(3), z in constant(3.0), m in 0usize..10) {
        let radius = p.escape_radius();
        let mut z = z;
        let mut escaped_at: Option<f64> = None;
        for symbol in t.symbols_after(m).take(60) {
            let i = symbol as usize;
            z = step(z, p.constants()[i], p.degrees()[i]);
            let modulus = z.norm();
            if modulus > 1e100 {
                break;
            }
            if let Some(previous) = escaped_at {
                prop_assert!(modulus > previous, "{} then {}", previous, modulus);
            }
            if modulus > radius {
                escaped_at = Some(modulus);
            }
        }
    }

    #[test]
    fn single_generator_matches_classical_escape_time(c in constant(2.2), d in 2u32..=5, h in 1u32..300) {
        let p = ParameterPoint::new(vec![c], vec![d], 5).unwrap();
        let t = Template::constant(1, 0).unwrap();
        let ours = in_mandelbrot(&p, &t, &MembershipConfig::with_iterations(h)).unwrap();

        // Independent loop: repeated multiplication, radius max(2, |c|).
        let radius_sq = 4f64.max(c.norm_sqr());
        let (mut x, mut y) = (0.0f64, 0.0f64);
        let mut escape = None;
        for k in 1..=h {
            let (mut px, mut py) = (x, y);
            for _ in 1..d {
                (px, py) = (px * x - py * y, px * y + py * x);
            }
            x = px + c.re;
            y = py + c.im;
            if !(x * x + y * y <= radius_sq) {
                escape = Some(k);
                break;
            }
        }
        // Powers agree exactly for d = 2; higher powers may round differently,
        // so only verdicts far from the horizon are compared there.
        match (ours.witness, escape) {
            (None, None) => {}
            (Some(w), Some(k)) if d == 2 => prop_assert_eq!(w.escape_step, k),
            (Some(w), Some(k)) => prop_assert!(w.escape_step.abs_diff(k) <= 1 || w.escape_step.min(k) + 3 >= h),
            (w, k) => prop_assert!(d > 2, "witness {:?} vs oracle {:?}", w, k),
        }
    }

    #[test]
    fn complete_invariance((p, t) in system(3), z in constant(3.0), m in 0usize..100, lag in 1usize..100) {
        if let Some((_, holds)) = invariance_sample(&p, &t, z, m, m + lag, 400, GUARD).unwrap() {
            prop_assert!(holds);
        }
    }
}

#[test]
fn even_degree_julia_rasters_are_point_symmetric() {
    // Dyadic window and size keep mirrored pixel centers exactly negated.
    let window = Window::new(-2.0, 2.0, -2.0, 2.0, 128, 128).unwrap();
    let t = Template::constant(1, 0).unwrap();
    for (c, d) in [(Complex64::new(-0.12, 0.75), 2), (Complex64::new(0.3, 0.4), 4), (Complex64::new(-1.0, 0.0), 2)] {
        let p = ParameterPoint::new(vec![c], vec![d], 4).unwrap();
        let r = raster_filled_julia(&p, &t, 0, &window, 300, GUARD).unwrap();
        for j in 0..128 {
            for i in 0..128 {
                assert_eq!(r.cell(i, j), r.cell(127 - i, 127 - j), "c = {c}, pixel ({i}, {j})");
            }
        }
    }
}

#[test]
fn doubling_resolution_keeps_interior_cells() {
    let t: Template = "D=2:0|1".parse().unwrap();
    let p = ParameterPoint::quadratic(vec![Complex64::new(-0.12, 0.75), Complex64::new(-1.0, 0.05)]).unwrap();
    let coarse_window = Window::new(-1.6, 1.6, -1.6, 1.6, 120, 120).unwrap();
    let fine_window = Window { width: 240, height: 240, ..coarse_window };
    let coarse = raster_filled_julia(&p, &t, 0, &coarse_window, 300, GUARD).unwrap();
    let fine = raster_filled_julia(&p, &t, 0, &fine_window, 300, GUARD).unwrap();
    let edge = boundary_of(&coarse);

    let (mut interior, mut kept) = (0usize, 0usize);
    for j in 0..120 {
        for i in 0..120 {
            if !coarse.is_inside(i, j) || edge.is_inside(i, j) {
                continue;
            }
            interior += 1;
            let pooled = (0..2).any(|a| (0..2).any(|b| fine.is_inside(2 * i + a, 2 * j + b)));
            kept += usize::from(pooled);
        }
    }
    assert!(interior > 500, "too few interior cells to be meaningful: {interior}");
    assert!(kept as f64 >= 0.99 * interior as f64, "{kept} of {interior}");
}

#[test]
fn witness_escape_matches_its_orbit() {
    let t: Template = "D=2:01|1".parse().unwrap();
    let p = ParameterPoint::quadratic(vec![Complex64::new(0.3, 0.0), Complex64::new(0.26, 0.0)]).unwrap();
    let result = in_mandelbrot(&p, &t, &MembershipConfig::default()).unwrap();
    let witness = result.witness.expect("c_1 = 0.26 is outside the classical set");
    let orbit = classify_orbit(&p, &t, witness.critical_time, Complex64::new(0.0, 0.0), 400, GUARD).unwrap();
    assert_eq!(orbit.outcome, Outcome::Escaped { step: witness.escape_step });
}
