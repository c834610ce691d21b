mod common;

use num_complex::Complex64;
use proptest::prelude::*;
use tunneltime::barrier::{log_t_derivative, transmission_amplitude, ScatteringPoint};
use tunneltime::config::RunConfig;
use tunneltime::firstclick::{
    first_click_density, gaussian_source, total_click_probability, CumulativeTable, FirstClickSpec,
};
use tunneltime::grid::{build_grid, GridConfig};
use tunneltime::propagator::{photon_distribution, time_axis};
use tunneltime::units::{
    energy_of_momentum, free_spinor, momentum_of_energy, velocity_of_momentum, BarrierSpec,
    PacketSpec, WidthConvention,
};

fn complex_momentum() -> impl Strategy<Value = Complex64> {
    (0.05f64..12.0, -2.0f64..2.0).prop_map(|(re, im)| Complex64::new(re, im))
}

fn barrier() -> impl Strategy<Value = BarrierSpec> {
    (0.0f64..10.0, 0.0f64..20.0).prop_map(|(v, l)| BarrierSpec::new(v, 0.0, l).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn dispersion_holds_off_axis(p in complex_momentum()) {
        let e = energy_of_momentum(p);
        let lhs = e * e - p * p;
        prop_assert!((lhs - 1.0).norm() <= 1e-12 * (p * p).norm().max(1.0));
    }

    #[test]
    fn real_momentum_round_trips_and_stays_subluminal(p in 1e-3f64..50.0) {
        let pc = Complex64::new(p, 0.0);
        let v = velocity_of_momentum(pc);
        prop_assert!(v.re.abs() < 1.0 && v.im == 0.0);
        let back = momentum_of_energy(energy_of_momentum(pc));
        prop_assert!((back.re - p).abs() <= 1e-12 * p.max(1.0));
        let s = free_spinor(pc);
        prop_assert!(s.lower.re > 0.0 && s.lower.re < 1.0);
    }

    #[test]
    fn transmission_never_exceeds_unity(b in barrier(), p in 0.01f64..12.0) {
        let t = transmission_amplitude(Complex64::new(p, 0.0), &b);
        prop_assert!(t.norm() <= 1.0 + 1e-12, "|T| = {}", t.norm());
    }

    #[test]
    fn transmission_matches_transfer_matrix(v in 2.0f64..9.0, l in 1.0f64..14.0, e in 1.01f64..12.0) {
        prop_assume!(((e - v).abs() - 1.0).abs() > 1e-4 && (e - v).abs() > 1e-4);
        let b = BarrierSpec::new(v, 0.0, l).unwrap();
        let p = (e * e - 1.0).sqrt();
        let t = transmission_amplitude(Complex64::new(p, 0.0), &b).norm_sqr();
        let oracle = common::transfer_matrix_t(e, v, 0.0, l).norm_sqr();
        prop_assume!(oracle > 1e-200);
        prop_assert!((t - oracle).abs() <= 1e-9 * oracle, "{t:e} vs {oracle:e}");
    }

    #[test]
    fn evanescent_momentum_on_shell(b in barrier(), p in complex_momentum()) {
        let s = ScatteringPoint::at(p, &b);
        let lhs = s.q * s.q + (s.e - b.v_top) * (s.e - b.v_top);
        prop_assert!((lhs - 1.0).norm() <= 1e-12 * (s.e - b.v_top).norm_sqr().max(1.0));
    }

    #[test]
    fn log_derivative_matches_central_difference(
        b in (2.0f64..10.0, 1.0f64..12.0).prop_map(|(v, l)| BarrierSpec::new(v, 0.0, l).unwrap()),
        re in 0.5f64..12.0,
        im in -0.5f64..0.5,
    ) {
        let p = Complex64::new(re, im);
        let t = |x: Complex64| transmission_amplitude(x, &b);
        prop_assume!(t(p).norm() > 1e-12);
        let d = log_t_derivative(p, &b);
        // five-point stencil scaled to the distance of the nearest pole;
        // ratio form stays clear of the ln branch cut
        let h = 1e-3 / d.norm().max(10.0);
        let fd = (8.0 * (t(p + h) / t(p - h)).ln() - (t(p + 2.0 * h) / t(p - 2.0 * h)).ln()) / (12.0 * h);
        prop_assert!((fd - d).norm() <= 1e-8 * d.norm().max(1.0), "{d} vs {fd}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn first_click_mass_identity(log_n in 0.0f64..8.0, c in 1e-4f64..1.0) {
        let times = time_axis(-12.0, 12.0, 0.002);
        let src = gaussian_source(0.0, 1.0, c, &times);
        let n = 10f64.powf(log_n).round().max(1.0);
        let r = first_click_density(&FirstClickSpec::new(n, &src).unwrap()).unwrap();
        // exact binomial mass; the Poisson form is its large-N limit
        let exact = -(n * (-c).ln_1p()).exp_m1();
        prop_assert!((r.total - exact).abs() <= 1e-8 * exact, "{} vs {exact}", r.total);
        prop_assert!(total_click_probability(n, c) <= exact);
        prop_assert!(r.density.iter().all(|&d| d >= 0.0));
        prop_assert!(r.cumulative.windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn earlier_source_never_clicks_later(shift in 0.0f64..2.0, log_n in 1.0f64..10.0) {
        let times = time_axis(-12.0, 12.0, 0.01);
        let a = gaussian_source(-shift, 1.0, 0.1, &times);
        let b = gaussian_source(0.0, 1.0, 0.1, &times);
        let n = 10f64.powf(log_n);
        let pa = first_click_density(&FirstClickSpec::new(n, &a).unwrap()).unwrap().peak_time;
        let pb = first_click_density(&FirstClickSpec::new(n, &b).unwrap()).unwrap().peak_time;
        prop_assert!(pa <= pb);
    }

    #[test]
    fn cumulative_table_inverts(u in 1e-12f64..0.3) {
        let times = time_axis(-12.0, 12.0, 0.01);
        let src = gaussian_source(0.0, 1.0, 0.3, &times);
        let table = CumulativeTable::new(&src.times, &src.cumulative).unwrap();
        let t = table.inverse(u).unwrap();
        prop_assert!((table.at(t) - u).abs() <= 1e-9 * u);
    }

    #[test]
    fn grid_is_a_valid_quadrature(v in 0.9f64..0.995, width in 4.0f64..12.0, height in 3.0f64..9.0, l in 2.0f64..14.0) {
        let pk = PacketSpec::from_velocity(v, width, -120.0, WidthConvention::DensityStd).unwrap();
        let b = BarrierSpec::new(height, 0.0, l).unwrap();
        let cfg = GridConfig { n_points: 20_000, ..GridConfig::default() };
        let g = build_grid(&pk, &b, &cfg).unwrap();
        prop_assert!(g.nodes.windows(2).all(|w| w[1] > w[0]));
        prop_assert!(g.weights.iter().all(|&w| w > 0.0));
        let span = g.hi() - g.lo();
        let sum: f64 = g.weights.iter().sum();
        prop_assert!((sum - span).abs() <= 1e-12 * span, "{sum} vs {span}");
        prop_assert!(g.offsets.iter().all(|d| d.abs() <= 1e-13 * g.hi()));
    }

    #[test]
    fn photon_distribution_normalised(width in 3.0f64..12.0, distance in 60.0f64..200.0) {
        let pk = PacketSpec::from_velocity(0.99, width, -distance, WidthConvention::DensityStd).unwrap();
        let times = time_axis(distance - 12.0 * width, distance + 12.0 * width, 0.01);
        let d = photon_distribution(&pk, distance, &times).unwrap();
        prop_assert!((d.total - 1.0).abs() <= 1e-10, "{}", d.total);
        prop_assert!((d.peak_time() - distance).abs() <= 0.005 + 1e-9);
    }

    #[test]
    fn config_round_trips_bit_exactly(
        v in 0.5f64..0.999,
        width in 1.0f64..20.0,
        height in 0.0f64..10.0,
        l in 0.0f64..30.0,
        n in 1.0f64..1e15,
        seed in 0..=i64::MAX as u64,
    ) {
        let mut c = RunConfig::fig1_bottom();
        c.velocity = v;
        c.packet_width = width;
        c.barrier_height = height;
        c.barrier_width = l;
        c.n_particles = n;
        c.seed = seed;
        prop_assert!(c.validate().is_ok());
        let back = RunConfig::from_toml_str(&c.to_toml_string()).unwrap();
        prop_assert_eq!(&back, &c);
        prop_assert_eq!(back.hash(), c.hash());
    }
}
