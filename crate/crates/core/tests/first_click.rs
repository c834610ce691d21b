mod common;

use common::bottom;
use tunneltime::firstclick::{
    first_click_density, first_click_quantile, first_click_root, first_click_time,
    first_click_width, gaussian_source, mean_first_click_time, monte_carlo_first_click,
    photon_electron_gap, total_click_probability, FirstClickSpec,
};
use tunneltime::propagator::time_axis;
use tunneltime::saddle::sda_distribution;

const TWO_SQRT_PI: f64 = 3.544_907_701_811_032;

/// Interquartile range of a first-click time whose density has log-curvature
/// width δt_1st: ln(ln 4 / ln(4/3)) times √e·δt_1st.
const IQR_PER_WIDTH: f64 = 2.593;

#[test]
fn no_click_rate_is_poisson_at_unit_mean() {
    let times = time_axis(-8.0, 8.0, 0.01);
    for (n, c) in [(1e6, 1e-6), (10.0, 0.1)] {
        let src = gaussian_source(0.0, 1.0, c, &times);
        let mc =
            monte_carlo_first_click(&FirstClickSpec::new(n, &src).unwrap(), 200_000, 7).unwrap();
        let q = (1.0 - c).powf(n);
        let sigma = (q * (1.0 - q) / mc.n_trials as f64).sqrt();
        assert!((mc.no_click_fraction() - q).abs() < 3.0 * sigma, "N = {n}");
        if n > 1e5 {
            assert!((q - (-1.0f64).exp()).abs() < 1e-6);
        }
    }
}

#[test]
fn single_certain_particle_samples_the_source() {
    let times = time_axis(-8.0, 8.0, 0.01);
    let src = gaussian_source(0.0, 1.0, 1.0, &times);
    let mc = monte_carlo_first_click(&FirstClickSpec::new(1.0, &src).unwrap(), 100_000, 3).unwrap();
    assert_eq!(mc.no_click, 0);
    assert!(mc.chi_square(&src, 40).unwrap().p_value > 0.01);
}

#[test]
fn seeded_runs_repeat() {
    let times = time_axis(-8.0, 8.0, 0.01);
    let src = gaussian_source(0.0, 1.0, 0.05, &times);
    let spec = FirstClickSpec::new(200.0, &src).unwrap();
    let a = monte_carlo_first_click(&spec, 10_000, 11).unwrap();
    let b = monte_carlo_first_click(&spec, 10_000, 11).unwrap();
    let c = monte_carlo_first_click(&spec, 10_000, 12).unwrap();
    assert_eq!(a, b);
    assert_ne!(a.clicks, c.clicks);
}

#[test]
fn peak_where_cumulative_reaches_one_over_n() {
    // bottom-preset scale: width ≈ δt, sampled at the preset step
    let step = 0.5;
    let times = time_axis(0.0, 250.0, step);
    let src = gaussian_source(122.6, 6.95, 1e-5, &times);
    let mut last = f64::INFINITY;
    for a in [1e2, 1e3, 1e6, 1e12] {
        let n = a / 1e-5;
        let r = first_click_density(&FirstClickSpec::new(n, &src).unwrap()).unwrap();
        let t = first_click_time(&src, n).unwrap().unwrap();
        assert!(
            (r.peak_time - t).abs() <= step,
            "a = {a}: {} vs {t}",
            r.peak_time
        );
    }
    let fine = time_axis(-12.0, 12.0, 0.001);
    let unit = gaussian_source(0.0, 1.0, 0.05, &fine);
    for a in [10.0, 1e2, 1e3, 1e6, 1e9] {
        let n = a / 0.05;
        let r = first_click_density(&FirstClickSpec::new(n, &unit).unwrap()).unwrap();
        let off = (r.peak_time - first_click_time(&unit, n).unwrap().unwrap()).abs();
        assert!(off < last, "a = {a}");
        last = off;
    }
}

#[test]
fn larger_cumulative_peaks_first() {
    let times = time_axis(-10.0, 10.0, 0.01);
    let early = gaussian_source(-0.3, 1.2, 0.05, &times);
    let late = gaussian_source(0.0, 1.0, 0.05, &times);
    assert!(early
        .cumulative
        .iter()
        .zip(&late.cumulative)
        .filter(|(_, &b)| b < 0.049)
        .all(|(a, b)| a >= b));
    for n in [30.0, 1e3, 1e5, 1e8] {
        let a = first_click_density(&FirstClickSpec::new(n, &early).unwrap()).unwrap();
        let b = first_click_density(&FirstClickSpec::new(n, &late).unwrap()).unwrap();
        assert!(a.peak_time <= b.peak_time, "N = {n}");
    }
}

#[test]
fn factorised_density_holds_pointwise() {
    let times = time_axis(-10.0, 10.0, 0.01);
    let src = gaussian_source(0.0, 1.0, 0.2, &times);
    let n = 1e4;
    let r = first_click_density(&FirstClickSpec::new(n, &src).unwrap()).unwrap();
    for (i, &t) in times.iter().enumerate() {
        if src.density[i] > 1e-300 && r.density[i] > 0.0 {
            let lhs = r.density[i] / (n * src.density[i]);
            let rhs = (1.0 - src.cumulative[i]).powf(n - 1.0);
            assert!((lhs - rhs).abs() <= 1e-10 * rhs, "t = {t}");
        }
    }
}

#[test]
fn closed_total_limits() {
    assert_eq!(total_click_probability(10.0, 0.0), 0.0);
    assert!((1.0 - total_click_probability(1.0, 50.0)).abs() < 1e-20);
    assert!((total_click_probability(1.0, std::f64::consts::LN_2) - 0.5).abs() < 1e-15);
}

#[test]
fn bottom_sda_first_click_mass_at_paper_n() {
    let p = bottom();
    let times = time_axis(60.0, 140.0, 0.001);
    let sda = sda_distribution(&p.model, &p.frozen, &times).unwrap();
    let n = 1e12;
    let r = first_click_density(&FirstClickSpec::new(n, &sda.distribution).unwrap()).unwrap();
    let closed = total_click_probability(n, sda.distribution.total);
    assert!(
        (r.total - closed).abs() <= 1e-6 * closed,
        "{} vs {closed}",
        r.total
    );
}

#[test]
fn iterated_root_solves_its_equation() {
    let a = TWO_SQRT_PI * std::f64::consts::E;
    let r = first_click_root(a).unwrap();
    assert!((r.log_term - 1.0).abs() < 1e-14);
    assert!((r.x_leading - 1.0).abs() < 1e-14);
    assert!((r.x - (1.0 - r.x.ln()).sqrt()).abs() < 1e-12);
    // independent bisection on the exact Gaussian condition erfc(x) = 2/a
    let (mut lo, mut hi) = (-5.0f64, 10.0f64);
    while hi - lo > 1e-15 {
        let m = 0.5 * (lo + hi);
        if libm::erfc(m) > 2.0 / a {
            lo = m;
        } else {
            hi = m;
        }
    }
    assert!((r.x_exact.unwrap() - lo).abs() < 1e-10);
    assert!(first_click_root(0.5).is_err());
}

#[test]
fn iterated_root_converges_to_exact_condition() {
    let mut last = f64::INFINITY;
    for a in [1e2, 1e4, 1e8, 1e16, 1e32] {
        let r = first_click_root(a).unwrap();
        let gap = (r.x - r.x_exact.unwrap()).abs() / r.x_exact.unwrap();
        assert!(gap < last);
        last = gap;
    }
    assert!(last < 1e-3);
}

#[test]
fn exact_frozen_time_matches_implicit_integral() {
    let fz = &bottom().frozen;
    let n = 1e12;
    let m = mean_first_click_time(fz, n).unwrap();
    let t = m.t_1st_exact.unwrap();
    assert!((fz.cumulative(t) - 1.0 / n).abs() < 1e-10 / n);
    assert!(m.t_1st < fz.t_mp && m.t_1st_leading < fz.t_mp);
}

#[test]
fn advance_grows_ever_more_slowly() {
    let fz = &bottom().frozen;
    let mut last = f64::INFINITY;
    for k in 0..6 {
        let n = 1e6 * 100f64.powi(k);
        let step = mean_first_click_time(fz, 100.0 * n).unwrap().t_1st
            - mean_first_click_time(fz, n).unwrap().t_1st;
        assert!(step < 0.0);
        assert!(step.abs() < last);
        last = step.abs();
    }
}

#[test]
fn electron_first_click_after_photon_at_paper_n() {
    let p = bottom();
    let te = first_click_time(&p.exact, 1e12).unwrap().unwrap();
    let tg = first_click_time(&p.photon, 1e12).unwrap().unwrap();
    assert!(te > tg, "{te} vs {tg}");
}

/// N e^{1/2} P(t_1st) at the iterated root equals 2x/δt, so the general
/// width differs from the closed form by sqrt(ln(a/2√π))/x, which tends to 1
/// only logarithmically.
#[test]
fn width_forms_related_by_root_ratio() {
    let fz = &bottom().frozen;
    let mut last = f64::INFINITY;
    for a in [1e3, 1e6, 1e12, 1e24, 1e48] {
        let n = a / fz.c_sd0;
        let w = first_click_width(fz, n).unwrap();
        let r = first_click_root(a).unwrap();
        let ratio = r.log_term.sqrt() / r.x;
        assert!((w.general / w.closed - ratio).abs() < 1e-9, "a = {a}");
        assert!((ratio - 1.0).abs() < last);
        last = (ratio - 1.0).abs();
        assert!(first_click_width(fz, 10.0 * n).unwrap().closed < w.closed);
    }
    assert!(last < 0.02);
}

#[test]
fn monte_carlo_quartiles_match_analytic_width() {
    let fz = &bottom().frozen;
    let n = 1e3 / fz.c_sd0;
    let times = time_axis(
        fz.t_mp - 8.0 * fz.delta_t,
        fz.t_mp + 8.0 * fz.delta_t,
        fz.delta_t / 400.0,
    );
    let src = fz.distribution(&times);
    let mc = monte_carlo_first_click(&FirstClickSpec::new(n, &src).unwrap(), 100_000, 5).unwrap();
    let iqr = mc.interquartile_range();
    let exact =
        first_click_quantile(&src, n, 0.75).unwrap() - first_click_quantile(&src, n, 0.25).unwrap();
    assert!((iqr - exact).abs() <= 0.03 * exact, "{iqr} vs {exact}");
    let w = first_click_width(fz, n).unwrap().closed;
    assert!(
        (iqr / IQR_PER_WIDTH - w).abs() <= 0.25 * w,
        "{} vs {w}",
        iqr / IQR_PER_WIDTH
    );
}

#[test]
fn gap_reduces_to_most_probable_offset_for_certain_transmission() {
    let fz = &bottom().frozen;
    let g = photon_electron_gap(fz, 1e12, 1.0, 128.0).unwrap();
    assert!((g.gap - (128.0 - fz.t_mp)).abs() < 1e-12);
    assert!(g.gap > 0.0 && g.equal_width_assumed);
}

#[test]
fn frozen_gap_rises_through_zero() {
    let fz = &bottom().frozen;
    let mut last = f64::NEG_INFINITY;
    let mut signs = Vec::new();
    for k in 0..40 {
        let n = 1e6 * 10f64.powi(k);
        let g = photon_electron_gap(fz, n, fz.c_sd0, 128.0).unwrap().gap;
        assert!(g > last);
        last = g;
        signs.push(g > 0.0);
    }
    assert!(!signs[0] && *signs.last().unwrap());
}
