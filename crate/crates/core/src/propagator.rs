//! Exact transmitted wavepacket by momentum quadrature and the detector flux.
//!
//! Past the barrier the packet is
//!
//! ```text
//! ψ(z, t) = K ∫ dp exp(−(p − p₀)²/2Γ) T(p) u(p) exp(i(p(z − z₀) − E(p)t))
//! ```
//!
//! and the arrival-time density at the detector z₂ is the probability
//! current P(t) = 2 Re(ψ₀* ψ₁). Early-time values come from massive
//! cancellation between nodes, so the phase and the running sums can be
//! carried in double-double arithmetic.

use std::fmt;
use std::str::FromStr;

use libm::erfc;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::barrier::denominator;
use crate::dd::{ComplexDD, DoubleDouble};
use crate::error::{Error, Result};
use crate::grid::MomentumGrid;
use crate::units::{BarrierSpec, PacketSpec, Spinor};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum Precision {
    /// f64 phases and plain summation.
    #[serde(rename = "std")]
    Standard,
    /// Double-double phases and compensated summation.
    #[default]
    #[serde(rename = "ext")]
    Extended,
}

impl fmt::Display for Precision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Precision::Standard => "std",
            Precision::Extended => "ext",
        })
    }
}

impl FromStr for Precision {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "std" | "standard" => Ok(Precision::Standard),
            "ext" | "extended" => Ok(Precision::Extended),
            _ => Err(Error::config("precision", format!("unknown mode `{s}`"))),
        }
    }
}

/// Sampled arrival-time density with its cumulative companions.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeDistribution {
    pub times: Vec<f64>,
    pub density: Vec<f64>,
    /// C(t), probability of arrival before t.
    pub cumulative: Vec<f64>,
    /// C̃(t) = 1 − C(t), including the never-transmitted mass.
    pub tail: Vec<f64>,
    /// Transmission probability C_trans = C(t_max).
    pub total: f64,
    /// Independent estimate of C_trans when one exists (momentum space for
    /// the exact flux).
    pub reference_total: Option<f64>,
    pub floor: f64,
}

impl TimeDistribution {
    /// Builds cumulatives by trapezoid integration of `density`.
    pub fn from_density(times: Vec<f64>, density: Vec<f64>, floor: f64) -> Self {
        let cumulative = trapezoid_cumulative(&times, &density);
        Self::from_parts(times, density, cumulative, floor)
    }

    /// Uses a cumulative known in closed form.
    pub fn from_parts(
        times: Vec<f64>,
        density: Vec<f64>,
        cumulative: Vec<f64>,
        floor: f64,
    ) -> Self {
        let total = cumulative.last().copied().unwrap_or(0.0);
        let tail = cumulative.iter().map(|c| 1.0 - c).collect();
        Self {
            times,
            density,
            cumulative,
            tail,
            total,
            reference_total: None,
            floor,
        }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn peak_index(&self) -> usize {
        self.density
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |(bi, bv), (i, &v)| {
                if v > bv {
                    (i, v)
                } else {
                    (bi, bv)
                }
            })
            .0
    }

    pub fn peak_time(&self) -> f64 {
        self.times[self.peak_index()]
    }

    /// Mass missing between the recorded total and the reference total,
    /// relative to the reference.
    pub fn truncated_fraction(&self) -> Option<f64> {
        self.reference_total.map(|r| ((r - self.total) / r).abs())
    }
}

pub fn trapezoid_cumulative(times: &[f64], density: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(times.len());
    let mut acc = 0.0;
    for i in 0..times.len() {
        if i > 0 {
            acc += 0.5 * (times[i] - times[i - 1]) * (density[i] + density[i - 1]);
        }
        out.push(acc);
    }
    out
}

/// Median |P| over samples earlier than half the light travel time, where
/// no physical signal can be resolved.
pub fn estimate_floor(times: &[f64], density: &[f64], distance: f64) -> f64 {
    let mut quiet: Vec<f64> = times
        .iter()
        .zip(density)
        .filter(|(t, _)| **t < 0.5 * distance)
        .map(|(_, p)| p.abs())
        .collect();
    if quiet.is_empty() {
        return 0.0;
    }
    quiet.sort_by(|a, b| a.total_cmp(b));
    let m = quiet.len();
    if m % 2 == 1 {
        quiet[m / 2]
    } else {
        0.5 * (quiet[m / 2 - 1] + quiet[m / 2])
    }
}

struct Node {
    p: f64,
    /// Sub-ulp offset to the ideal node p̃ = p + offset. Amplitudes and
    /// energies below are taken at p̃.
    offset: f64,
    e: f64,
    e_dd: DoubleDouble,
    /// K g(p) w / D(p), the quadrature weight folded in.
    amp: Complex64,
    /// Lower spinor component p/(E + 1).
    lower: f64,
    /// |T(p)|².
    t2: f64,
}

/// Precomputed quadrature for one packet, barrier and grid.
pub struct Propagator {
    packet: PacketSpec,
    barrier: BarrierSpec,
    precision: Precision,
    /// Phase shift in p from the exp(−ipl) factor of T (zero when free).
    shift: f64,
    nodes: Vec<Node>,
    momentum_total: f64,
}

impl Propagator {
    pub fn new(
        packet: &PacketSpec,
        barrier: &BarrierSpec,
        grid: &MomentumGrid,
        precision: Precision,
    ) -> Self {
        Self::build(packet, barrier, grid, precision, true)
    }

    /// Same packet with T ≡ 1: free propagation from z₀.
    pub fn free(
        packet: &PacketSpec,
        barrier: &BarrierSpec,
        grid: &MomentumGrid,
        precision: Precision,
    ) -> Self {
        Self::build(packet, barrier, grid, precision, false)
    }

    fn build(
        packet: &PacketSpec,
        barrier: &BarrierSpec,
        grid: &MomentumGrid,
        precision: Precision,
        with_barrier: bool,
    ) -> Self {
        let nodes: Vec<Node> = grid
            .nodes
            .par_iter()
            .zip(grid.offsets.par_iter())
            .zip(grid.weights.par_iter())
            .map(|((&p, &dp), &w)| {
                let e0 = DoubleDouble::from_product(p, p).add_f64(1.0).sqrt();
                let v = p / e0.to_f64();
                let e_dd = e0.add_f64(v * dp);
                let e = e_dd.to_f64();
                let (inv_d, dlog_d) = if with_barrier {
                    let jet = denominator(Complex64::new(p, 0.0), barrier);
                    (1.0 / jet.value, jet.d1 / jet.value)
                } else {
                    (Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0))
                };
                let dlog = -(p - packet.p0) / packet.gamma;
                let lower = p / (e + 1.0);
                let dlower = (e + 1.0 - p * v) / ((e + 1.0) * (e + 1.0));
                let inv_d = inv_d * (1.0 - dlog_d * dp);
                Node {
                    p,
                    offset: dp,
                    e,
                    e_dd,
                    amp: inv_d * (packet.k_norm * packet.envelope(p) * w) * (1.0 + dlog * dp),
                    lower: lower + dlower * dp,
                    t2: inv_d.norm_sqr(),
                }
            })
            .collect();
        let weighted: f64 = nodes
            .iter()
            .zip(&grid.weights)
            .map(|(n, &w)| {
                let g = packet.envelope(n.p);
                w * g * g * n.t2 * 2.0 * n.e / (n.e + 1.0)
            })
            .sum();
        let momentum_total = 2.0 * std::f64::consts::PI * packet.k_norm * packet.k_norm * weighted;
        Self {
            packet: *packet,
            barrier: *barrier,
            precision,
            shift: if with_barrier { barrier.width() } else { 0.0 },
            nodes,
            momentum_total,
        }
    }

    pub fn precision(&self) -> Precision {
        self.precision
    }

    /// C_trans = 2πK² ∫ dp g(p)² |T(p)|² |u(p)|².
    pub fn momentum_transmission(&self) -> f64 {
        self.momentum_total
    }

    /// Distance from the packet centre to the detector at z₂.
    pub fn detector_distance(&self) -> f64 {
        self.barrier.z2 - self.packet.z0
    }

    /// ψ(z, t) for z at or beyond the detector.
    pub fn wavefunction(&self, z: f64, t: f64) -> Result<Spinor> {
        if z < self.barrier.z2 {
            return Err(Error::Domain(format!(
                "z = {z} lies before the detector at {}",
                self.barrier.z2
            )));
        }
        let (a, b) = self.sum(z, t);
        Ok(Spinor::new(a, b))
    }

    fn sum(&self, z: f64, t: f64) -> (Complex64, Complex64) {
        let d = z - self.packet.z0 - self.shift;
        match self.precision {
            Precision::Standard => {
                let mut a = Complex64::new(0.0, 0.0);
                let mut b = Complex64::new(0.0, 0.0);
                for n in &self.nodes {
                    let (s, c) = (n.p * d + n.offset * d - n.e * t).sin_cos();
                    let term = n.amp * Complex64::new(c, s);
                    a += term;
                    b += term * n.lower;
                }
                (a, b)
            }
            Precision::Extended => {
                let mut a = ComplexDD::ZERO;
                let mut b = ComplexDD::ZERO;
                for n in &self.nodes {
                    let phase = (DoubleDouble::from_product(n.p, d).add_f64(n.offset * d)
                        - n.e_dd.mul_f64(t))
                    .rem_two_pi();
                    let (s, c) = phase.sin_cos();
                    let term = n.amp * Complex64::new(c, s);
                    a.add_c64(term);
                    b.add_c64(term * n.lower);
                }
                (a.to_c64(), b.to_c64())
            }
        }
    }

    /// P(t) = 2 Re(ψ₀* ψ₁) at the detector.
    pub fn flux(&self, t: f64) -> f64 {
        let (a, b) = self.sum(self.barrier.z2, t);
        Spinor::new(a, b).flux()
    }

    /// Flux at every requested time. Times are evaluated in parallel; each
    /// sum runs over the nodes in ascending momentum order.
    pub fn flux_distribution(&self, times: &[f64]) -> TimeDistribution {
        let density: Vec<f64> = times.par_iter().map(|&t| self.flux(t)).collect();
        let floor = estimate_floor(times, &density, self.detector_distance());
        let mut dist = TimeDistribution::from_density(times.to_vec(), density, floor);
        dist.reference_total = Some(self.momentum_total);
        if let Some(f) = dist.truncated_fraction() {
            if f > 1e-6 {
                log::warn!(
                    "time window [{}, {}] misses {:.3e} of the transmitted mass",
                    times.first().unwrap_or(&0.0),
                    times.last().unwrap_or(&0.0),
                    f
                );
            }
        }
        dist
    }
}

pub fn transmitted_wavefunction(
    z: f64,
    t: f64,
    grid: &MomentumGrid,
    packet: &PacketSpec,
    barrier: &BarrierSpec,
    precision: Precision,
) -> Result<Spinor> {
    Propagator::new(packet, barrier, grid, precision).wavefunction(z, t)
}

pub fn flux_distribution(
    grid: &MomentumGrid,
    packet: &PacketSpec,
    barrier: &BarrierSpec,
    times: &[f64],
    precision: Precision,
) -> TimeDistribution {
    Propagator::new(packet, barrier, grid, precision).flux_distribution(times)
}

/// Luminal, dispersionless transport of the initial envelope over `distance`:
/// P_γ(t) = sqrt(Γ/π) exp(−Γ(d − t)²).
pub fn photon_distribution(
    packet: &PacketSpec,
    distance: f64,
    times: &[f64],
) -> Result<TimeDistribution> {
    if !(distance > 0.0) {
        return Err(Error::config("distance", "must be positive"));
    }
    let g = packet.gamma;
    let norm = (g / std::f64::consts::PI).sqrt();
    let density = times
        .iter()
        .map(|&t| norm * (-g * (distance - t).powi(2)).exp())
        .collect();
    let cumulative = times
        .iter()
        .map(|&t| 0.5 * erfc(g.sqrt() * (distance - t)))
        .collect();
    let mut dist = TimeDistribution::from_parts(times.to_vec(), density, cumulative, 0.0);
    dist.reference_total = Some(1.0);
    Ok(dist)
}

/// Uniform time samples from `start` to `end` inclusive.
pub fn time_axis(start: f64, end: f64, step: f64) -> Vec<f64> {
    let n = ((end - start) / step).round() as usize;
    (0..=n).map(|i| start + step * i as f64).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{build_grid, GridConfig};
    use crate::units::WidthConvention;

    fn setup(n: usize) -> (PacketSpec, BarrierSpec, MomentumGrid) {
        let pk = PacketSpec::from_velocity(0.99, 6.0, -120.0, WidthConvention::DensityStd).unwrap();
        let b = BarrierSpec::new(6.52, 0.0, 8.0).unwrap();
        let g = build_grid(
            &pk,
            &b,
            &GridConfig {
                n_points: n,
                ..GridConfig::default()
            },
        )
        .unwrap();
        (pk, b, g)
    }

    #[test]
    fn precision_parse() {
        assert_eq!("std".parse::<Precision>().unwrap(), Precision::Standard);
        assert_eq!("ext".parse::<Precision>().unwrap(), Precision::Extended);
        assert!("quad".parse::<Precision>().is_err());
    }

    #[test]
    fn linear_in_normalisation() {
        let (pk, b, g) = setup(4000);
        let mut pk2 = pk;
        pk2.k_norm *= 2.0;
        for prec in [Precision::Standard, Precision::Extended] {
            let a = Propagator::new(&pk, &b, &g, prec)
                .wavefunction(8.0, 120.0)
                .unwrap();
            let c = Propagator::new(&pk2, &b, &g, prec)
                .wavefunction(8.0, 120.0)
                .unwrap();
            assert_eq!(c.upper, a.upper * 2.0);
            assert_eq!(c.lower, a.lower * 2.0);
        }
    }

    #[test]
    fn rejects_points_before_detector() {
        let (pk, b, g) = setup(2000);
        let prop = Propagator::new(&pk, &b, &g, Precision::Standard);
        assert!(matches!(prop.wavefunction(4.0, 0.0), Err(Error::Domain(_))));
    }

    #[test]
    fn negligible_at_detector_initially() {
        let (pk, b, g) = setup(100_000);
        let free = Propagator::free(&pk, &b, &g, Precision::Extended);
        let peak = free
            .wavefunction(-120.0 + 8.0 + 120.0, 128.0 / 0.99)
            .unwrap()
            .density();
        let at0 = free.wavefunction(8.0, 0.0).unwrap().density();
        assert!(at0 <= 1e-30 * peak, "{at0} vs {peak}");
    }

    #[test]
    fn photon_peak_mass_and_width() {
        let pk = PacketSpec::from_velocity(0.99, 6.0, -120.0, WidthConvention::DensityStd).unwrap();
        let times = time_axis(0.0, 400.0, 0.5);
        let d = photon_distribution(&pk, 128.0, &times).unwrap();
        assert_eq!(d.peak_time(), 128.0);
        assert!((d.total - 1.0).abs() < 1e-12);
        let mean: f64 = d
            .times
            .iter()
            .zip(&d.density)
            .map(|(t, p)| t * p * 0.5)
            .sum();
        let var: f64 = d
            .times
            .iter()
            .zip(&d.density)
            .map(|(t, p)| (t - mean).powi(2) * p * 0.5)
            .sum();
        assert!((var.sqrt() - 6.0).abs() < 1e-9);
        assert!(photon_distribution(&pk, 0.0, &times).is_err());
    }

    #[test]
    fn floor_is_median_of_quiet_window() {
        let t = vec![0.0, 1.0, 2.0, 3.0, 10.0];
        let p = vec![1e-30, -3e-30, 2e-30, 5.0, 7.0];
        assert!((estimate_floor(&t, &p, 8.0) - 2.5e-30).abs() < 1e-45);
    }

    #[test]
    fn cumulative_and_tail() {
        let d = TimeDistribution::from_density(vec![0.0, 1.0, 2.0], vec![0.0, 0.5, 0.0], 0.0);
        assert_eq!(d.cumulative, vec![0.0, 0.25, 0.5]);
        assert_eq!(d.tail, vec![1.0, 0.75, 0.5]);
        assert_eq!(d.total, 0.5);
    }
}
