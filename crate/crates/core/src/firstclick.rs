//! Earliest detection among N independent particles.
//!
//! With C(t) the cumulative arrival probability of one particle, the first
//! of N clicks has density N P(t) (1 − C(t))^{N−1} and total mass
//! 1 − (1 − C_trans)^N. The never-transmitted mass 1 − C_trans is kept as a
//! scalar rather than a δ spike at t → ∞.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};
use crate::propagator::{trapezoid_cumulative, TimeDistribution};
use crate::saddle::FrozenModel;

const TWO_SQRT_PI: f64 = 3.544_907_701_811_032;

/// Smallest a = N C_trans for which the large-N iteration is defined.
pub const MIN_A: f64 = 0.519;

/// f(x) = x e^{−x}, the large-N first-click profile in x = N C(t).
pub fn profile(x: f64) -> f64 {
    x * (-x).exp()
}

pub fn profile_d1(x: f64) -> f64 {
    (1.0 - x) * (-x).exp()
}

pub fn profile_d2(x: f64) -> f64 {
    (x - 2.0) * (-x).exp()
}

/// Width (−f''(x_max))^{−1/2} of the profile about its maximum x = 1.
pub fn profile_width() -> f64 {
    (-profile_d2(1.0)).sqrt().recip()
}

#[derive(Debug, Clone, Copy)]
pub struct FirstClickSpec<'a> {
    /// Particle count. A float so that 10¹² and beyond stay exact.
    pub n: f64,
    pub source: &'a TimeDistribution,
    pub c_trans: f64,
    /// 1 − C_trans.
    pub tail_mass: f64,
    /// (t_mp, δt) of a frozen model, used for the normalised offset.
    pub reference: Option<(f64, f64)>,
}

impl<'a> FirstClickSpec<'a> {
    pub fn new(n: f64, source: &'a TimeDistribution) -> Result<Self> {
        if !(n >= 1.0) || !n.is_finite() {
            return Err(Error::config("n_particles", "must be a finite number ≥ 1"));
        }
        if source.is_empty() {
            return Err(Error::config("times", "source distribution is empty"));
        }
        let c_trans = source.total;
        if !(c_trans > 0.0 && c_trans <= 1.0) {
            return Err(Error::Domain(format!(
                "source transmission {c_trans:e} outside (0, 1]"
            )));
        }
        Ok(Self {
            n,
            source,
            c_trans,
            tail_mass: 1.0 - c_trans,
            reference: None,
        })
    }

    pub fn with_reference(mut self, frozen: &FrozenModel) -> Self {
        self.reference = Some((frozen.t_mp, frozen.delta_t));
        self
    }

    pub fn a(&self) -> f64 {
        self.n * self.c_trans
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FirstClickResult {
    pub times: Vec<f64>,
    pub density: Vec<f64>,
    /// 1 − (1 − C(t))^N.
    pub cumulative: Vec<f64>,
    /// Trapezoid quadrature of `density`.
    pub total: f64,
    /// 1 − exp(−N C_trans).
    pub total_closed: f64,
    pub peak_time: f64,
    /// Time at which C(t) = 1/N, if reached.
    pub t_1st: Option<f64>,
    /// 1/(N e^{1/2} P(t_1st)).
    pub delta_t_1st: Option<f64>,
    /// (t_1st − t_mp)/δt against the reference model.
    pub t_1dif: Option<f64>,
}

/// N P(t) exp((N − 1) ln(1 − C(t))).
pub fn first_click_density(spec: &FirstClickSpec) -> Result<FirstClickResult> {
    let src = spec.source;
    let n = spec.n;
    let density: Vec<f64> = src
        .density
        .par_iter()
        .zip(src.cumulative.par_iter())
        .map(|(&p, &c)| n * p * ((n - 1.0) * (-c.clamp(0.0, 1.0)).ln_1p()).exp())
        .collect();
    if density.iter().any(|d| !d.is_finite()) {
        return Err(Error::Domain("first-click density overflowed".into()));
    }
    let cumulative: Vec<f64> = src
        .cumulative
        .iter()
        .map(|&c| -(n * (-c.clamp(0.0, 1.0)).ln_1p()).exp_m1())
        .collect();
    let total = trapezoid_cumulative(&src.times, &density)
        .last()
        .copied()
        .unwrap_or(0.0);
    let peak = density
        .iter()
        .enumerate()
        .fold(
            (0, f64::NEG_INFINITY),
            |b, (i, &v)| if v > b.1 { (i, v) } else { b },
        )
        .0;
    let table = CumulativeTable::new(&src.times, &src.cumulative)?;
    let t_1st = table.inverse(1.0 / n);
    let delta_t_1st = t_1st.map(|t| 1.0 / (n * 0.5f64.exp() * table.density_at(t, &src.density)));
    let t_1dif = match (t_1st, spec.reference) {
        (Some(t), Some((t_mp, dt))) => Some((t - t_mp) / dt),
        _ => None,
    };
    Ok(FirstClickResult {
        times: src.times.clone(),
        density,
        cumulative,
        total,
        total_closed: total_click_probability(n, spec.c_trans),
        peak_time: src.times[peak],
        t_1st,
        delta_t_1st,
        t_1dif,
    })
}

/// 1 − exp(−N C_trans).
pub fn total_click_probability(n: f64, c_trans: f64) -> f64 {
    -(-n * c_trans).exp_m1()
}

/// Roots of the first-click location equation for a = N C_trans.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FirstClickRoot {
    pub a: f64,
    /// ln(a/2√π).
    pub log_term: f64,
    /// Solution of x² + ln x = ln(a/2√π).
    pub x: f64,
    /// Leading order x = sqrt(ln(a/2√π)).
    pub x_leading: f64,
    /// Solution of erfc(x) = 2/a, the exact frozen-Gaussian condition.
    pub x_exact: Option<f64>,
}

pub fn first_click_root(a: f64) -> Result<FirstClickRoot> {
    if !(a > MIN_A) || !a.is_finite() {
        return Err(Error::Domain(format!(
            "a = N·C_trans = {a} must exceed {MIN_A}"
        )));
    }
    let l = (a / TWO_SQRT_PI).ln();
    // x² + ln x is increasing on x > 0; Newton from the right converges
    // monotonically since the function is concave in ln x.
    let mut x = l.max(0.0).sqrt().max(1.0);
    for _ in 0..100 {
        let h = x * x + x.ln() - l;
        let step = h / (2.0 * x + 1.0 / x);
        let next = (x - step).max(0.5 * x);
        if (next - x).abs() <= 1e-15 * x {
            x = next;
            break;
        }
        x = next;
    }
    let x_exact = if a > 2.0 {
        let target = 2.0 / a;
        // erfc decreasing; bracket on [−6, 40]
        let (mut lo, mut hi) = (-6.0f64, 40.0f64);
        for _ in 0..200 {
            let m = 0.5 * (lo + hi);
            if libm::erfc(m) > target {
                lo = m;
            } else {
                hi = m;
            }
        }
        Some(0.5 * (lo + hi))
    } else {
        None
    };
    Ok(FirstClickRoot {
        a,
        log_term: l,
        x,
        x_leading: if l > 0.0 { l.sqrt() } else { f64::NAN },
        x_exact,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanFirstClick {
    pub root: FirstClickRoot,
    /// t_mp − δt x.
    pub t_1st: f64,
    /// t_mp − δt sqrt(ln(a/2√π)).
    pub t_1st_leading: f64,
    /// Frozen-Gaussian time at which ∫P = 1/N.
    pub t_1st_exact: Option<f64>,
}

/// Large-N first-click time under the frozen Gaussian, a = N C_trans,sd0.
pub fn mean_first_click_time(model: &FrozenModel, n: f64) -> Result<MeanFirstClick> {
    let root = first_click_root(n * model.c_sd0)?;
    Ok(MeanFirstClick {
        root,
        t_1st: model.t_mp - model.delta_t * root.x,
        t_1st_leading: model.t_mp - model.delta_t * root.x_leading,
        t_1st_exact: root.x_exact.map(|x| model.t_mp - model.delta_t * x),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FirstClickWidth {
    /// δt / (2 sqrt(e ln(a/2√π))).
    pub closed: f64,
    /// 1/(N e^{1/2} P_sd0(t_1st)) at the iterated t_1st.
    pub general: f64,
}

pub fn first_click_width(model: &FrozenModel, n: f64) -> Result<FirstClickWidth> {
    let mean = mean_first_click_time(model, n)?;
    let l = mean.root.log_term;
    if l <= 0.0 {
        return Err(Error::Domain(format!(
            "ln(a/2√π) = {l} ≤ 0; closed-form width undefined"
        )));
    }
    Ok(FirstClickWidth {
        closed: model.delta_t / (2.0 * (std::f64::consts::E * l).sqrt()),
        general: 1.0 / (n * 0.5f64.exp() * model.density(mean.t_1st)),
    })
}

/// Photon-minus-electron first-click time under equal widths.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhotonElectronGap {
    pub gap: f64,
    /// The photon width is taken equal to the electron δt.
    pub equal_width_assumed: bool,
}

/// t_1st,γ − t_1st = t_mp,γ − t_mp − δt (sqrt(ln(N/2√π)) − sqrt(ln(N C/2√π))).
pub fn photon_electron_gap(
    model: &FrozenModel,
    n: f64,
    c_trans: f64,
    photon_t_mp: f64,
) -> Result<PhotonElectronGap> {
    let a = n * c_trans;
    if !(a > MIN_A) {
        return Err(Error::Domain(format!("a = {a} must exceed {MIN_A}")));
    }
    let lg = (n / TWO_SQRT_PI).ln();
    let le = (a / TWO_SQRT_PI).ln();
    if le < 0.0 {
        return Err(Error::Domain(format!("ln(a/2√π) = {le} < 0")));
    }
    Ok(PhotonElectronGap {
        gap: photon_t_mp - model.t_mp - model.delta_t * (lg.sqrt() - le.sqrt()),
        equal_width_assumed: true,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrozenCrossover {
    /// N* from bisection in ln N.
    pub n_star: f64,
    /// N* from the closed-form solution of the gap equation.
    pub n_star_closed: f64,
}

/// N* at which the frozen-model gap changes sign. Searched without an upper
/// cap; fails if the two arrival peaks never reorder.
pub fn frozen_crossover(
    model: &FrozenModel,
    c_trans: f64,
    photon_t_mp: f64,
) -> Result<FrozenCrossover> {
    let r = photon_t_mp - model.t_mp;
    if !(r > 0.0) {
        return Err(Error::RootFind(
            "electron most probable time is not advanced over the photon".into(),
        ));
    }
    if !(c_trans > 0.0 && c_trans < 1.0) {
        return Err(Error::Domain(format!("C_trans = {c_trans} outside (0, 1)")));
    }
    let c = -c_trans.ln();
    let r = r / model.delta_t;
    let sqrt_u = (r * r + c) / (2.0 * r);
    let ln_closed = sqrt_u * sqrt_u + TWO_SQRT_PI.ln();

    let gap =
        |ln_n: f64| photon_electron_gap(model, ln_n.exp(), c_trans, photon_t_mp).map(|g| g.gap);
    // smallest ln N with ln(N C/2√π) ≥ 0
    let mut lo = TWO_SQRT_PI.ln() + c + 1e-12;
    if gap(lo)? >= 0.0 {
        return Ok(FrozenCrossover {
            n_star: lo.exp(),
            n_star_closed: ln_closed.exp(),
        });
    }
    let mut hi = lo + 1.0;
    while gap(hi)? < 0.0 {
        hi = lo + 2.0 * (hi - lo);
        if hi > 700.0 {
            return Err(Error::RootFind(
                "no frozen crossover below N = e^700".into(),
            ));
        }
    }
    for _ in 0..200 {
        let m = 0.5 * (lo + hi);
        if gap(m)? < 0.0 {
            lo = m;
        } else {
            hi = m;
        }
    }
    Ok(FrozenCrossover {
        n_star: (0.5 * (lo + hi)).exp(),
        n_star_closed: ln_closed.exp(),
    })
}

/// First N ≤ `n_max` at which source `a` reaches C = 1/N no later than
/// source `b`, with the time at which it does.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Crossover {
    pub n: f64,
    pub t: f64,
}

pub fn first_click_crossover(
    a: &TimeDistribution,
    b: &TimeDistribution,
    n_max: f64,
) -> Result<Option<Crossover>> {
    let ta = CumulativeTable::new(&a.times, &a.cumulative)?;
    let tb = CumulativeTable::new(&b.times, &b.cumulative)?;
    // scan N finely in ln N; each N gives one pair of first-click times
    let n_min = (MIN_A / a.total).max(1.0);
    if n_min > n_max {
        return Ok(None);
    }
    let (l0, l1) = (n_min.ln(), n_max.ln());
    let steps = ((l1 - l0) * 200.0).ceil().max(1.0) as usize;
    for k in 0..=steps {
        let n = (l0 + (l1 - l0) * k as f64 / steps as f64).exp();
        let (Some(t_a), Some(t_b)) = (ta.inverse(1.0 / n), tb.inverse(1.0 / n)) else {
            continue;
        };
        if t_a <= t_b {
            return Ok(Some(Crossover { n, t: t_a }));
        }
    }
    Ok(None)
}

/// Time at which a source first reaches cumulative 1/N.
pub fn first_click_time(source: &TimeDistribution, n: f64) -> Result<Option<f64>> {
    Ok(CumulativeTable::new(&source.times, &source.cumulative)?.inverse(1.0 / n))
}

/// Latest time at which silence still reads as a binary 0.
pub fn quiet_window(t_1st: f64, delta_t_1st: f64, fraction: f64) -> f64 {
    t_1st + fraction * delta_t_1st
}

/// Piecewise interpolant of a tabulated cumulative: geometric between
/// positive samples, linear where a sample is zero.
#[derive(Debug, Clone, Copy)]
pub struct CumulativeTable<'a> {
    times: &'a [f64],
    cum: &'a [f64],
}

impl<'a> CumulativeTable<'a> {
    pub fn new(times: &'a [f64], cum: &'a [f64]) -> Result<Self> {
        if times.len() != cum.len() || times.len() < 2 {
            return Err(Error::Sampling(
                "cumulative table needs ≥ 2 matched samples".into(),
            ));
        }
        if let Some(i) = cum.windows(2).position(|w| !(w[1] >= w[0])) {
            return Err(Error::Sampling(format!(
                "cumulative decreases at t = {}",
                times[i + 1]
            )));
        }
        Ok(Self { times, cum })
    }

    pub fn total(&self) -> f64 {
        self.cum[self.cum.len() - 1]
    }

    pub fn at(&self, t: f64) -> f64 {
        let n = self.times.len();
        if t <= self.times[0] {
            return self.cum[0];
        }
        if t >= self.times[n - 1] {
            return self.cum[n - 1];
        }
        let i = self.times.partition_point(|&x| x <= t) - 1;
        let (ta, tb) = (self.times[i], self.times[i + 1]);
        let (ca, cb) = (self.cum[i], self.cum[i + 1]);
        let w = (t - ta) / (tb - ta);
        if ca > 0.0 && cb > ca {
            ca * (cb / ca).powf(w)
        } else {
            ca + (cb - ca) * w
        }
    }

    /// Earliest t with C(t) = u, None if u exceeds the table.
    pub fn inverse(&self, u: f64) -> Option<f64> {
        let n = self.cum.len();
        if u > self.cum[n - 1] {
            return None;
        }
        if u <= self.cum[0] {
            return Some(self.times[0]);
        }
        let i = self.cum.partition_point(|&c| c < u) - 1;
        let (ta, tb) = (self.times[i], self.times[i + 1]);
        let (ca, cb) = (self.cum[i], self.cum[i + 1]);
        let w = if ca > 0.0 {
            (u / ca).ln() / (cb / ca).ln()
        } else {
            (u - ca) / (cb - ca)
        };
        Some(ta + (tb - ta) * w.clamp(0.0, 1.0))
    }

    /// Density linearly interpolated from the samples.
    pub fn density_at(&self, t: f64, density: &[f64]) -> f64 {
        let n = self.times.len();
        let i = self.times.partition_point(|&x| x <= t).clamp(1, n - 1) - 1;
        let w = ((t - self.times[i]) / (self.times[i + 1] - self.times[i])).clamp(0.0, 1.0);
        density[i] + (density[i + 1] - density[i]) * w
    }
}

/// Monte Carlo first-click samples.
#[derive(Debug, Clone, PartialEq)]
pub struct MonteCarloSamples {
    pub n: f64,
    pub n_trials: usize,
    /// One entry per trial with a click.
    pub clicks: Vec<f64>,
    pub no_click: usize,
    pub seed: u64,
}

/// N at or below which every particle is drawn individually; above it the
/// minimum of N uniforms is drawn from its own distribution.
pub const DIRECT_DRAW_LIMIT: f64 = 1e5;

/// Draws `n_trials` first-click events. Each trial uses its own ChaCha8
/// stream so results do not depend on thread scheduling.
pub fn monte_carlo_first_click(
    spec: &FirstClickSpec,
    n_trials: usize,
    seed: u64,
) -> Result<MonteCarloSamples> {
    if n_trials < 10_000 {
        return Err(Error::config("n_trials", "must be at least 10000"));
    }
    let table = CumulativeTable::new(&spec.source.times, &spec.source.cumulative)?;
    let c_trans = table.total();
    let n = spec.n;
    let direct = n <= DIRECT_DRAW_LIMIT;
    let n_int = n as u64;
    let draws: Vec<Option<f64>> = (0..n_trials as u64)
        .into_par_iter()
        .map(|trial| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(trial);
            let u_min = if direct {
                let mut m = f64::INFINITY;
                for _ in 0..n_int {
                    m = m.min(rng.random::<f64>());
                }
                m
            } else {
                let u: f64 = rng.random();
                -((-u).ln_1p() / n).exp_m1()
            };
            // u < C_trans means a transmitted particle arriving at C⁻¹(u)
            if u_min < c_trans {
                table.inverse(u_min)
            } else {
                None
            }
        })
        .collect();
    let clicks: Vec<f64> = draws.iter().flatten().copied().collect();
    Ok(MonteCarloSamples {
        n,
        n_trials,
        no_click: n_trials - clicks.len(),
        clicks,
        seed,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChiSquareTest {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
}

impl MonteCarloSamples {
    pub fn no_click_fraction(&self) -> f64 {
        self.no_click as f64 / self.n_trials as f64
    }

    pub fn quantile(&self, q: f64) -> f64 {
        let mut s = self.clicks.clone();
        s.sort_by(f64::total_cmp);
        let pos = q * (s.len() - 1) as f64;
        let i = pos.floor() as usize;
        let j = (i + 1).min(s.len() - 1);
        s[i] + (s[j] - s[i]) * (pos - i as f64)
    }

    pub fn interquartile_range(&self) -> f64 {
        self.quantile(0.75) - self.quantile(0.25)
    }

    /// χ² of the click times in `bins` cells equiprobable under
    /// 1 − (1 − C(t))^N, plus one no-click cell.
    pub fn chi_square(&self, source: &TimeDistribution, bins: usize) -> Result<ChiSquareTest> {
        if bins < 2 {
            return Err(Error::config("bins", "need at least 2"));
        }
        let table = CumulativeTable::new(&source.times, &source.cumulative)?;
        let g_total = -(self.n * (-table.total()).ln_1p()).exp_m1();
        let mut edges = Vec::with_capacity(bins + 1);
        for k in 1..bins {
            let g = g_total * k as f64 / bins as f64;
            let c = -((-g).ln_1p() / self.n).exp_m1();
            edges.push(table.inverse(c).unwrap_or(f64::INFINITY));
        }
        let mut counts = vec![0usize; bins];
        for &t in &self.clicks {
            counts[edges.partition_point(|&e| e < t)] += 1;
        }
        let trials = self.n_trials as f64;
        let expected_bin = trials * g_total / bins as f64;
        let mut stat: f64 = counts
            .iter()
            .map(|&o| (o as f64 - expected_bin).powi(2) / expected_bin)
            .sum();
        let expected_none = trials * (1.0 - g_total);
        let mut dof = bins - 1;
        if expected_none >= 5.0 {
            stat += (self.no_click as f64 - expected_none).powi(2) / expected_none;
            dof += 1;
        }
        let chi = ChiSquared::new(dof as f64).map_err(|e| Error::Sampling(e.to_string()))?;
        Ok(ChiSquareTest {
            statistic: stat,
            dof,
            p_value: chi.sf(stat),
        })
    }
}

/// Quantile q of the first-click time conditional on a click.
pub fn first_click_quantile(source: &TimeDistribution, n: f64, q: f64) -> Result<f64> {
    let table = CumulativeTable::new(&source.times, &source.cumulative)?;
    let g_total = -(n * (-table.total()).ln_1p()).exp_m1();
    let c = -((-(q * g_total)).ln_1p() / n).exp_m1();
    table
        .inverse(c)
        .ok_or_else(|| Error::Sampling(format!("quantile {q} beyond the table")))
}

/// Gaussian arrival density of total mass `c_trans`, with closed-form
/// cumulative.
pub fn gaussian_source(center: f64, width: f64, c_trans: f64, times: &[f64]) -> TimeDistribution {
    let norm = c_trans / (std::f64::consts::PI.sqrt() * width);
    let density = times
        .iter()
        .map(|&t| norm * (-((t - center) / width).powi(2)).exp())
        .collect();
    let cumulative = times
        .iter()
        .map(|&t| 0.5 * c_trans * libm::erfc((center - t) / width))
        .collect();
    TimeDistribution::from_parts(times.to_vec(), density, cumulative, 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::propagator::time_axis;

    #[test]
    fn profile_shape() {
        assert_eq!(profile_d1(1.0), 0.0);
        assert!(profile(1.0) > profile(1.0 - 1e-6) && profile(1.0) > profile(1.0 + 1e-6));
        assert!((profile_width() - 0.5f64.exp()).abs() < 1e-15);
    }

    #[test]
    fn single_particle_reproduces_source() {
        let times = time_axis(-10.0, 10.0, 0.01);
        let src = gaussian_source(0.0, 1.0, 0.3, &times);
        let r = first_click_density(&FirstClickSpec::new(1.0, &src).unwrap()).unwrap();
        assert_eq!(r.density, src.density);
    }

    #[test]
    fn half_mass_at_ln2() {
        assert!((total_click_probability(1.0, std::f64::consts::LN_2) - 0.5).abs() < 1e-16);
        assert_eq!(total_click_probability(1e6, 0.0), 0.0);
        assert!((1.0 - total_click_probability(50.0, 1.0)).abs() < 1e-20);
    }

    #[test]
    fn log_form_matches_direct_power() {
        let times = time_axis(-8.0, 8.0, 0.05);
        let src = gaussian_source(0.0, 1.0, 0.2, &times);
        let spec = FirstClickSpec::new(30.0, &src).unwrap();
        let r = first_click_density(&spec).unwrap();
        for i in 0..times.len() {
            let c = src.cumulative[i];
            if c < 0.1 && src.density[i] > 0.0 {
                let direct = 30.0 * src.density[i] * (1.0 - c).powi(29);
                assert!((r.density[i] - direct).abs() <= 1e-10 * direct);
            }
        }
    }

    #[test]
    fn rejects_bad_spec() {
        let times = time_axis(0.0, 1.0, 0.1);
        let src = gaussian_source(0.5, 0.1, 0.1, &times);
        assert!(FirstClickSpec::new(0.5, &src).is_err());
        assert!(first_click_root(0.5).is_err());
    }

    #[test]
    fn root_at_unit_log_term() {
        let a = TWO_SQRT_PI * std::f64::consts::E;
        let r = first_click_root(a).unwrap();
        assert!((r.log_term - 1.0).abs() < 1e-15);
        assert!((r.x_leading - 1.0).abs() < 1e-15);
        // x = 1 solves x² + ln x = 1 exactly
        assert!((r.x - 1.0).abs() < 1e-12);
    }

    #[test]
    fn root_approaches_erfc_condition() {
        let mut prev = f64::INFINITY;
        for a in [1e2, 1e4, 1e8, 1e16] {
            let r = first_click_root(a).unwrap();
            let rel = (r.x - r.x_exact.unwrap()).abs() / r.x_exact.unwrap();
            assert!(rel < prev);
            prev = rel;
        }
        assert!(prev < 0.01);
    }

    #[test]
    fn cumulative_table_round_trip() {
        let times = time_axis(-6.0, 6.0, 0.5);
        let src = gaussian_source(0.0, 1.0, 0.4, &times);
        let tab = CumulativeTable::new(&src.times, &src.cumulative).unwrap();
        for u in [1e-12, 1e-3, 0.1, 0.3] {
            let t = tab.inverse(u).unwrap();
            assert!((tab.at(t) - u).abs() < 1e-12 * u.max(1e-3));
        }
        assert!(tab.inverse(0.5).is_none());
        let bad = vec![0.0, 0.2, 0.1];
        assert!(CumulativeTable::new(&times[..3], &bad).is_err());
    }

    #[test]
    fn quiet_window_scales() {
        assert_eq!(quiet_window(10.0, 2.0, 0.25), 10.5);
    }
}
