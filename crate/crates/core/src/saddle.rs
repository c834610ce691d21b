//! Time-dependent steepest-descent approximation of the transmitted flux.
//!
//! The detector amplitude is K ∫ dp exp(iF(p, t)) u(p) with
//!
//! ```text
//! F(p, t) = −i(−(p − p₀)²/2Γ + ln T(p)) − E(p) t,
//! ln T(p) = ip(z₁ − z₀) − ln D(p),
//! ```
//!
//! where T carries the free flight from z₀ to the barrier entrance. For each
//! time the saddle p♯(t) solving ∂F/∂p = 0 is tracked by continuation in the
//! complex momentum plane. The frozen model expands around the time t_mp at
//! which p♯ is real.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::barrier::{denominator, Jet};
use crate::error::{Error, Result};
use crate::propagator::TimeDistribution;
use crate::units::{energy_of_momentum, BarrierSpec, PacketSpec};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

pub const SADDLE_TOL: f64 = 1e-12;
const ACCEPT_TOL: f64 = 1e-10;
const MAX_NEWTON: usize = 100;

/// Packet, barrier and the free path between them.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathModel {
    pub packet: PacketSpec,
    pub barrier: BarrierSpec,
    /// z₁ − z₀.
    pub free_path: f64,
}

/// F and its first two momentum derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Action {
    pub value: Complex64,
    pub dp: Complex64,
    pub dpp: Complex64,
}

impl PathModel {
    pub fn new(packet: &PacketSpec, barrier: &BarrierSpec) -> Self {
        Self {
            packet: *packet,
            barrier: *barrier,
            free_path: barrier.z1 - packet.z0,
        }
    }

    /// The barrier alone, with no free flight folded into T.
    pub fn barrier_only(packet: &PacketSpec, barrier: &BarrierSpec) -> Self {
        Self {
            free_path: 0.0,
            ..Self::new(packet, barrier)
        }
    }

    /// Distance from the packet centre to the detector.
    pub fn detector_distance(&self) -> f64 {
        self.free_path + self.barrier.width()
    }

    /// ln T along the path and its first two p-derivatives.
    pub fn log_amplitude(&self, p: Complex64) -> Jet {
        let d = denominator(p, &self.barrier);
        let r1 = d.d1 / d.value;
        Jet {
            value: I * p * self.free_path - d.value.ln(),
            d1: I * self.free_path - r1,
            d2: -(d.d2 / d.value - r1 * r1),
        }
    }

    pub fn action(&self, p: Complex64, t: f64) -> Action {
        let g = self.packet.gamma;
        let dp0 = p - self.packet.p0;
        let lt = self.log_amplitude(p);
        let e = energy_of_momentum(p);
        let v = p / e;
        Action {
            value: -I * (-dp0 * dp0 / (2.0 * g) + lt.value) - e * t,
            dp: -I * (-dp0 / g + lt.d1) - v * t,
            dpp: -I * (-1.0 / g + lt.d2) - t / (e * e * e),
        }
    }

    /// Complex phase time τ(p) = −i (d ln T/dp)/v, free flight included.
    pub fn phase_time(&self, p: Complex64) -> Complex64 {
        let v = p / energy_of_momentum(p);
        -I * self.log_amplitude(p).d1 / v
    }

    /// |(p − p₀)/Γ − i(τ(p) − t)v(p)|, which equals |∂F/∂p|.
    pub fn saddle_residual(&self, p: Complex64, t: f64) -> f64 {
        let v = p / energy_of_momentum(p);
        ((p - self.packet.p0) / self.packet.gamma - I * (self.phase_time(p) - t) * v).norm()
    }

    /// Im F at a real momentum, (p − p₀)²/2Γ + ln|D(p)|. Independent of t.
    pub fn im_action_real(&self, p: f64) -> f64 {
        let dp0 = p - self.packet.p0;
        let d = denominator(Complex64::new(p, 0.0), &self.barrier).value;
        dp0 * dp0 / (2.0 * self.packet.gamma) + d.norm().ln()
    }
}

/// Saddle point at one time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SaddleTrace {
    pub t: f64,
    pub p_sharp: Complex64,
    pub f_sharp: Complex64,
    pub f_pp: Complex64,
    pub tau_sharp: Complex64,
    pub v_sharp: Complex64,
    /// sqrt(2π/(−i F_pp)), branch kept continuous along a sweep.
    pub prefactor: Complex64,
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl SaddleTrace {
    fn at(model: &PathModel, t: f64, p: Complex64, iterations: usize) -> Self {
        let a = model.action(p, t);
        let e = energy_of_momentum(p);
        Self {
            t,
            p_sharp: p,
            f_sharp: a.value,
            f_pp: a.dpp,
            tau_sharp: model.phase_time(p),
            v_sharp: p / e,
            prefactor: (2.0 * std::f64::consts::PI / (-I * a.dpp)).sqrt(),
            residual: a.dp.norm(),
            iterations,
            converged: a.dp.norm() < ACCEPT_TOL,
        }
    }

    /// Steepest-descent flux 2K²(2π/|F_pp|) e^{−2 Im F} Re(p♯/(E♯ + 1)).
    pub fn flux(&self, packet: &PacketSpec) -> f64 {
        let e = energy_of_momentum(self.p_sharp);
        let k2 = packet.k_norm * packet.k_norm;
        let lower = (self.p_sharp / (e + 1.0)).re;
        2.0 * k2
            * (2.0 * std::f64::consts::PI / self.f_pp.norm())
            * (-2.0 * self.f_sharp.im).exp()
            * lower
    }

    /// ψ_sd = K sqrt(2π/(−iF_pp)) exp(iF♯) u(p♯).
    pub fn wavefunction(&self, packet: &PacketSpec) -> crate::units::Spinor {
        let amp = self.prefactor * (I * self.f_sharp).exp() * packet.k_norm;
        crate::units::free_spinor(self.p_sharp).scale(amp)
    }
}

/// Damped Newton iteration on ∂F/∂p = 0 from `guess`.
pub fn solve_saddle(model: &PathModel, t: f64, guess: Complex64) -> Result<SaddleTrace> {
    let mut p = guess;
    let mut a = model.action(p, t);
    let mut r = a.dp.norm();
    for it in 0..MAX_NEWTON {
        if !r.is_finite() {
            break;
        }
        if r < SADDLE_TOL {
            return Ok(SaddleTrace::at(model, t, p, it));
        }
        let step = -a.dp / a.dpp;
        let mut lambda = 1.0;
        let mut accepted = false;
        while lambda > 1e-6 {
            let trial = p + step * lambda;
            let at = model.action(trial, t);
            let rt = at.dp.norm();
            if rt.is_finite() && rt < r {
                p = trial;
                a = at;
                r = rt;
                accepted = true;
                break;
            }
            lambda *= 0.5;
        }
        if !accepted || step.norm() * lambda <= 4.0 * f64::EPSILON * p.norm() {
            // no further decrease available in floating point
            if r < ACCEPT_TOL {
                return Ok(SaddleTrace::at(model, t, p, it + 1));
            }
            break;
        }
    }
    Err(Error::NonConvergence {
        iterations: MAX_NEWTON,
        residual: r,
    })
}

/// Follows the saddle from `start` through `targets` (monotone, all on one
/// side of `start.t`). Returns the points reached; stops at the first time
/// the step size collapses.
pub fn continue_saddle(
    model: &PathModel,
    start: &SaddleTrace,
    targets: &[f64],
    initial_step: f64,
) -> Vec<SaddleTrace> {
    let mut out = Vec::with_capacity(targets.len());
    let mut cur = *start;
    let mut h = initial_step.abs();
    let min_step = 1e-9 * initial_step.abs().max(1.0);
    for &target in targets {
        while cur.t != target {
            let remaining = target - cur.t;
            let dt = remaining.signum() * h.min(remaining.abs());
            let slope = cur.v_sharp / cur.f_pp;
            let guess = cur.p_sharp + slope * dt;
            let t_next = if dt.abs() == remaining.abs() {
                target
            } else {
                cur.t + dt
            };
            match solve_saddle(model, t_next, guess) {
                Ok(mut s) if (s.p_sharp - guess).norm() <= 0.25 * (slope * dt).norm().max(1e-6) => {
                    // keep the square-root branch of the prefactor continuous
                    if (s.prefactor + cur.prefactor).norm() < (s.prefactor - cur.prefactor).norm() {
                        s.prefactor = -s.prefactor;
                    }
                    if s.iterations <= 3 {
                        h *= 1.5;
                    }
                    cur = s;
                }
                _ => {
                    h *= 0.5;
                    if h < min_step {
                        log::warn!(
                            "saddle continuation stalled at t = {:.4} (p = {:.6})",
                            cur.t,
                            cur.p_sharp
                        );
                        return out;
                    }
                }
            }
        }
        out.push(cur);
    }
    out
}

/// Steepest-descent distribution and the saddle path behind it.
#[derive(Debug, Clone)]
pub struct SdaResult {
    pub distribution: TimeDistribution,
    /// One entry per requested time; unreached times hold a copy of the
    /// nearest reached point with `converged = false`.
    pub trace: Vec<SaddleTrace>,
    /// Range of times the continuation reached.
    pub valid: (f64, f64),
}

/// Sweeps outward from t_mp in both directions and evaluates P_sd at every
/// requested time.
pub fn sda_distribution(
    model: &PathModel,
    frozen: &FrozenModel,
    times: &[f64],
) -> Result<SdaResult> {
    if times.is_empty() {
        return Err(Error::config("times", "no sample times requested"));
    }
    let seed = solve_saddle(model, frozen.t_mp, Complex64::new(frozen.p_mp, 0.0))?;
    let step = (frozen.delta_t / 20.0).max(1e-3);
    let split = times.partition_point(|&t| t < frozen.t_mp);
    let backward: Vec<f64> = times[..split].iter().rev().copied().collect();
    let forward: Vec<f64> = times[split..].to_vec();
    let (back, fwd) = rayon::join(
        || continue_saddle(model, &seed, &backward, step),
        || continue_saddle(model, &seed, &forward, step),
    );
    if back.len() < backward.len() || fwd.len() < forward.len() {
        log::warn!(
            "steepest-descent range truncated to [{:.3}, {:.3}]",
            back.last().map_or(frozen.t_mp, |s| s.t),
            fwd.last().map_or(frozen.t_mp, |s| s.t)
        );
    }
    let valid = (
        back.last()
            .map_or(seed.t, |s| s.t)
            .min(fwd.first().map_or(seed.t, |s| s.t)),
        fwd.last()
            .map_or(seed.t, |s| s.t)
            .max(back.first().map_or(seed.t, |s| s.t)),
    );

    let mut trace = Vec::with_capacity(times.len());
    for (k, &t) in backward.iter().enumerate().rev() {
        trace.push(match back.get(k) {
            Some(s) => *s,
            None => unreached(back.last().unwrap_or(&seed), t),
        });
    }
    for (k, &t) in forward.iter().enumerate() {
        trace.push(match fwd.get(k) {
            Some(s) => *s,
            None => unreached(fwd.last().unwrap_or(&seed), t),
        });
    }
    let density: Vec<f64> = trace
        .iter()
        .map(|s| {
            if s.converged {
                s.flux(&model.packet)
            } else {
                0.0
            }
        })
        .collect();
    let mut distribution = TimeDistribution::from_density(times.to_vec(), density, 0.0);
    distribution.reference_total = Some(frozen.c_sd0);
    Ok(SdaResult {
        distribution,
        trace,
        valid,
    })
}

fn unreached(nearest: &SaddleTrace, t: f64) -> SaddleTrace {
    SaddleTrace {
        t,
        converged: false,
        ..*nearest
    }
}

/// Gaussian model of the distribution around the most probable time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrozenModel {
    pub t_mp: f64,
    pub p_mp: f64,
    /// δt = sqrt(Γ)|Δ|/v♯_mp.
    pub delta_t: f64,
    /// δt with the t/γ² variant of the last term of Δ, for comparison.
    pub delta_t_alt: f64,
    pub c_sd0: f64,
    pub delta_mp: Complex64,
    /// Delay accrued under the barrier, t_mp − (z₁ − z₀)/v♯_mp.
    pub sigma_mp: f64,
    pub v_mp: f64,
    pub gamma_mp: f64,
    pub gamma_0: f64,
    pub e_0: f64,
    pub e_mp: f64,
    pub free_path: f64,
}

impl FrozenModel {
    pub fn density(&self, t: f64) -> f64 {
        let d = (t - self.t_mp) / self.delta_t;
        self.c_sd0 / (std::f64::consts::PI.sqrt() * self.delta_t) * (-d * d).exp()
    }

    pub fn cumulative(&self, t: f64) -> f64 {
        0.5 * self.c_sd0 * libm::erfc((self.t_mp - t) / self.delta_t)
    }

    pub fn distribution(&self, times: &[f64]) -> TimeDistribution {
        let density = times.iter().map(|&t| self.density(t)).collect();
        let cumulative = times.iter().map(|&t| self.cumulative(t)).collect();
        let mut d = TimeDistribution::from_parts(times.to_vec(), density, cumulative, 0.0);
        d.reference_total = Some(self.c_sd0);
        d
    }
}

/// Real root of (p − p₀)/Γ + Re(D'/D) = 0 nearest p₀: the momentum at which
/// the saddle crosses the real axis.
pub fn real_axis_saddle(model: &PathModel) -> Result<f64> {
    let g = model.packet.gamma;
    let p0 = model.packet.p0;
    let resid = |p: f64| {
        let d = denominator(Complex64::new(p, 0.0), &model.barrier);
        (p - p0) / g + (d.d1 / d.value).re
    };
    let step = 0.02 * g.sqrt();
    let span = 8.0 * g.sqrt();
    let r0 = resid(p0);
    if r0 == 0.0 {
        return Ok(p0);
    }
    let mut k = 1.0;
    while k * step <= span {
        for dir in [1.0, -1.0] {
            let a = p0 + dir * (k - 1.0) * step;
            let b = p0 + dir * k * step;
            if b <= 0.0 {
                continue;
            }
            let (ra, rb) = (resid(a), resid(b));
            if ra.signum() != rb.signum() {
                return bisect(resid, a.min(b), a.max(b));
            }
        }
        k += 1.0;
    }
    Err(Error::RootFind(format!(
        "no real-axis saddle within {span:.4} of p0"
    )))
}

fn bisect(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> Result<f64> {
    let fa = f(a);
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            return Ok(m);
        }
        let fm = f(m);
        if fm == 0.0 {
            return Ok(m);
        }
        if fm.signum() == fa.signum() {
            a = m;
        } else {
            b = m;
        }
    }
    Ok(0.5 * (a + b))
}

/// Locates t_mp by bracketing the sign change of Im p♯(t) along the saddle
/// path, bisecting in t, and polishing (Re p, t) with a real 2×2 Newton step.
pub fn most_probable_time(model: &PathModel) -> Result<(f64, f64)> {
    let v0 = model.packet.mean_velocity();
    let t0 = model.detector_distance() / v0;
    let start = solve_saddle(model, t0, Complex64::new(model.packet.p0, 0.0))?;
    let dir = if start.p_sharp.im > 0.0 { 1.0 } else { -1.0 };
    let scan = 1.0;
    let mut prev = start;
    let mut bracket = None;
    for k in 1..=400 {
        let t = t0 + dir * scan * k as f64;
        let pts = continue_saddle(model, &prev, &[t], scan / 8.0);
        let Some(&next) = pts.first() else {
            break;
        };
        if next.p_sharp.im.signum() != prev.p_sharp.im.signum() || next.p_sharp.im == 0.0 {
            bracket = Some((prev, next));
            break;
        }
        prev = next;
    }
    let Some((mut lo, mut hi)) = bracket else {
        return real_axis_fallback(model);
    };
    if lo.t > hi.t {
        std::mem::swap(&mut lo, &mut hi);
    }
    for _ in 0..80 {
        if hi.t - lo.t <= 1e-13 * hi.t.abs() {
            break;
        }
        let tm = 0.5 * (lo.t + hi.t);
        let w = (tm - lo.t) / (hi.t - lo.t);
        let guess = lo.p_sharp * (1.0 - w) + hi.p_sharp * w;
        let mid = match solve_saddle(model, tm, guess) {
            Ok(s) => s,
            Err(_) => continue_saddle(model, &lo, &[tm], (tm - lo.t) / 4.0)
                .first()
                .copied()
                .ok_or_else(|| Error::RootFind("saddle lost during bisection".into()))?,
        };
        if mid.p_sharp.im.signum() == lo.p_sharp.im.signum() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    // real Newton on Re and Im of ∂F/∂p with p real and t free
    let mut p = 0.5 * (lo.p_sharp.re + hi.p_sharp.re);
    let mut t = 0.5 * (lo.t + hi.t);
    for _ in 0..8 {
        let a = model.action(Complex64::new(p, 0.0), t);
        let v = p / (p * p + 1.0).sqrt();
        if a.dpp.im == 0.0 {
            break;
        }
        let dp = -a.dp.im / a.dpp.im;
        let dt = (a.dp.re + a.dpp.re * dp) / v;
        p += dp;
        t += dt;
        if dp.abs() < 1e-16 * p && dt.abs() < 1e-16 * t.abs() {
            break;
        }
    }
    Ok((p, t))
}

/// The continued saddle never crossed the real axis: it sits on a
/// different branch from the one through the real-axis stationary point.
/// Start instead from that point, at t = Re τ(p), and confirm it is a saddle.
fn real_axis_fallback(model: &PathModel) -> Result<(f64, f64)> {
    let p = real_axis_saddle(model).map_err(|_| {
        Error::RootFind("Im p♯(t) does not change sign on the scanned window".into())
    })?;
    let pc = Complex64::new(p, 0.0);
    let t = model.phase_time(pc).re;
    let s = solve_saddle(model, t, pc)?;
    if s.p_sharp.im.abs() > 1e-8 {
        return Err(Error::RootFind(format!(
            "real-axis stationary point {p} is not a saddle at t = {t}"
        )));
    }
    log::warn!("most probable time taken from the real-axis stationary point p = {p:.6}");
    Ok((s.p_sharp.re, t))
}

pub fn frozen_model(model: &PathModel) -> Result<FrozenModel> {
    let (p_mp, t_mp) = most_probable_time(model)?;
    let pc = Complex64::new(p_mp, 0.0);
    let e_mp = (p_mp * p_mp + 1.0).sqrt();
    let v_mp = p_mp / e_mp;
    let lt = model.log_amplitude(pc);
    let g = model.packet.gamma;
    let base = I / g - I * lt.d2;
    let delta_mp = base - t_mp / (e_mp * e_mp * e_mp);
    let delta_alt = base - t_mp / (e_mp * e_mp);
    let e_0 = model.packet.mean_energy();
    let c_sd0 =
        (e_0 + 1.0) * e_mp / ((e_mp + 1.0) * e_0) * (-2.0 * model.im_action_real(p_mp)).exp();
    Ok(FrozenModel {
        t_mp,
        p_mp,
        delta_t: g.sqrt() * delta_mp.norm() / v_mp,
        delta_t_alt: g.sqrt() * delta_alt.norm() / v_mp,
        c_sd0,
        delta_mp,
        sigma_mp: t_mp - model.free_path / v_mp,
        v_mp,
        gamma_mp: e_mp,
        gamma_0: e_0,
        e_0,
        e_mp,
        free_path: model.free_path,
    })
}

/// (t, τ♯) along the saddle path.
pub fn tau_sharp_trace(
    model: &PathModel,
    frozen: &FrozenModel,
    times: &[f64],
) -> Result<Vec<(f64, Complex64)>> {
    let sda = sda_distribution(model, frozen, times)?;
    Ok(sda
        .trace
        .iter()
        .filter(|s| s.converged)
        .map(|s| (s.t, s.tau_sharp))
        .collect())
}

/// Re τ(p) on a rectangle of the complex momentum plane, with the saddle
/// path sampled at fixed time intervals.
#[derive(Debug, Clone, PartialEq)]
pub struct ContourMap {
    pub re_axis: Vec<f64>,
    pub im_axis: Vec<f64>,
    /// values[j][i] = Re τ(re_axis[i] + i im_axis[j]).
    pub values: Vec<Vec<f64>>,
    pub path: Vec<(f64, Complex64)>,
}

pub fn tau_contour_map(
    model: &PathModel,
    re_range: (f64, f64),
    im_range: (f64, f64),
    resolution: (usize, usize),
) -> Result<ContourMap> {
    let (nx, ny) = resolution;
    if nx < 2 || ny < 2 {
        return Err(Error::config("resolution", "need at least 2×2 samples"));
    }
    let axis = |lo: f64, hi: f64, n: usize| -> Vec<f64> {
        (0..n)
            .map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64)
            .collect()
    };
    let re_axis = axis(re_range.0, re_range.1, nx);
    let im_axis = axis(im_range.0, im_range.1, ny);
    if re_axis.iter().any(|&x| x <= 0.0) {
        return Err(Error::Domain("contour window must stay at Re p > 0".into()));
    }
    let values = im_axis
        .par_iter()
        .map(|&y| {
            re_axis
                .iter()
                .map(|&x| model.phase_time(Complex64::new(x, y)).re)
                .collect()
        })
        .collect();
    Ok(ContourMap {
        re_axis,
        im_axis,
        values,
        path: Vec::new(),
    })
}

/// Saddle positions every `spacing` from t = 0 to `t_end`.
pub fn saddle_path_samples(
    model: &PathModel,
    frozen: &FrozenModel,
    spacing: f64,
    t_end: f64,
) -> Result<Vec<(f64, Complex64)>> {
    let n = (t_end / spacing).floor() as usize;
    let times: Vec<f64> = (0..=n).map(|k| spacing * k as f64).collect();
    let sda = sda_distribution(model, frozen, &times)?;
    Ok(sda
        .trace
        .iter()
        .filter(|s| s.converged)
        .map(|s| (s.t, s.p_sharp))
        .collect())
}
