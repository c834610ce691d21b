//! Natural units, relativistic kinematics and the packet/barrier primitives.
//!
//! Everything inside the crate runs with ħ = c = m = 1: momenta are in units
//! of mc, energies in mc², lengths in the reduced Compton wavelength ƛ and
//! times in ƛ/c. [`UnitSystem`] only exists to label output.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const HBAR: f64 = 1.0;
pub const C_LIGHT: f64 = 1.0;
pub const MASS: f64 = 1.0;

/// Display conversion factors for the electron's natural units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitSystem {
    pub hbar: f64,
    pub c: f64,
    pub m: f64,
    /// ƛ in femtometres.
    pub length_fm: f64,
    /// ƛ/c in zeptoseconds.
    pub time_zs: f64,
}

/// Reduced Compton wavelength of the electron in fm (CODATA 2018).
const ELECTRON_LAMBDA_BAR_FM: f64 = 386.159_267_96;
/// Speed of light in fm per zeptosecond.
const C_FM_PER_ZS: f64 = 299_792_458.0e15 * 1.0e-21;

impl Default for UnitSystem {
    fn default() -> Self {
        Self {
            hbar: HBAR,
            c: C_LIGHT,
            m: MASS,
            length_fm: ELECTRON_LAMBDA_BAR_FM,
            time_zs: ELECTRON_LAMBDA_BAR_FM / C_FM_PER_ZS,
        }
    }
}

/// E(p) = sqrt(p²c² + m²c⁴).
///
/// Principal branch of the square root. The cut sits on the imaginary axis
/// beyond ±i mc, so any path that keeps Re p > 0 never crosses it.
pub fn energy_of_momentum(p: Complex64) -> Complex64 {
    (p * p + 1.0).sqrt()
}

/// p(E) = sqrt(E²/c² − m²c²), principal branch (Re p ≥ 0).
pub fn momentum_of_energy(e: Complex64) -> Complex64 {
    ((e - 1.0) * (e + 1.0)).sqrt()
}

/// Group velocity dE/dp = pc²/E.
pub fn velocity_of_momentum(p: Complex64) -> Complex64 {
    p / energy_of_momentum(p)
}

/// dv/dp = m²c⁴ / E³.
pub fn velocity_derivative(p: Complex64) -> Complex64 {
    let e = energy_of_momentum(p);
    1.0 / (e * e * e)
}

pub fn lorentz_factor(velocity: f64) -> f64 {
    1.0 / (1.0 - velocity * velocity).sqrt()
}

/// Momentum of a particle moving at `velocity` (fraction of c).
pub fn momentum_for_velocity(velocity: f64) -> f64 {
    velocity * lorentz_factor(velocity)
}

/// Two-component Dirac spinor (ψ₀, ψ₁).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Spinor {
    pub upper: Complex64,
    pub lower: Complex64,
}

impl Spinor {
    pub fn new(upper: Complex64, lower: Complex64) -> Self {
        Self { upper, lower }
    }

    /// Probability current through a point, 2c Re(ψ₀* ψ₁).
    pub fn flux(&self) -> f64 {
        2.0 * C_LIGHT * (self.upper.conj() * self.lower).re
    }

    pub fn density(&self) -> f64 {
        self.upper.norm_sqr() + self.lower.norm_sqr()
    }

    pub fn scale(&self, factor: Complex64) -> Self {
        Self::new(self.upper * factor, self.lower * factor)
    }
}

/// Positive-energy free spinor u(p) = (1, cp/(E + mc²)).
pub fn free_spinor(p: Complex64) -> Spinor {
    let e = energy_of_momentum(p);
    Spinor::new(Complex64::new(1.0, 0.0), p / (e + 1.0))
}

/// How a position-space packet width maps onto the momentum parameter Γ.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum WidthConvention {
    /// Width is the standard deviation of |ψ(z)|²: Γ = ħ²/(2Δz²).
    #[default]
    DensityStd,
    /// Width is the 1/e half-width of the amplitude envelope: Γ = ħ²/Δz².
    AmplitudeWidth,
}

impl WidthConvention {
    pub fn gamma_for_width(self, width: f64) -> f64 {
        match self {
            WidthConvention::DensityStd => HBAR * HBAR / (2.0 * width * width),
            WidthConvention::AmplitudeWidth => HBAR * HBAR / (width * width),
        }
    }
}

/// Initial Gaussian packet: amplitude exp(−(p − p₀)²/2Γ) in momentum space,
/// centred at z₀.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PacketSpec {
    pub p0: f64,
    pub gamma: f64,
    pub z0: f64,
    /// Normalisation K making the free packet carry unit probability.
    pub k_norm: f64,
}

impl PacketSpec {
    pub fn new(p0: f64, gamma: f64, z0: f64) -> Result<Self> {
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(Error::config("gamma", "must be positive and finite"));
        }
        if !(p0 > 0.0 && p0.is_finite()) {
            return Err(Error::config("p0", "must be positive and finite"));
        }
        let k_norm = packet_normalization(p0, gamma);
        Ok(Self {
            p0,
            gamma,
            z0,
            k_norm,
        })
    }

    pub fn from_velocity(
        velocity: f64,
        width: f64,
        z0: f64,
        convention: WidthConvention,
    ) -> Result<Self> {
        if !(velocity > 0.0 && velocity < 1.0) {
            return Err(Error::config("velocity", "must lie in (0, 1)"));
        }
        if !(width > 0.0 && width.is_finite()) {
            return Err(Error::config("packet_width", "must be positive"));
        }
        Self::new(
            momentum_for_velocity(velocity),
            convention.gamma_for_width(width),
            z0,
        )
    }

    /// Standard deviation of the momentum probability density, sqrt(Γ/2).
    pub fn momentum_spread(&self) -> f64 {
        (0.5 * self.gamma).sqrt()
    }

    /// Standard deviation of the position probability density, ħ/sqrt(2Γ).
    pub fn position_spread(&self) -> f64 {
        HBAR / (2.0 * self.gamma).sqrt()
    }

    pub fn envelope(&self, p: f64) -> f64 {
        let d = p - self.p0;
        (-d * d / (2.0 * self.gamma)).exp()
    }

    pub fn envelope_complex(&self, p: Complex64) -> Complex64 {
        let d = p - self.p0;
        (-d * d / (2.0 * self.gamma)).exp()
    }

    /// |ψ(z, 0)|² relative to its peak for the Gaussian envelope.
    pub fn envelope_density_ratio(&self, z: f64) -> f64 {
        let d = z - self.z0;
        (-self.gamma * d * d / (HBAR * HBAR)).exp()
    }

    pub fn mean_energy(&self) -> f64 {
        (self.p0 * self.p0 + 1.0).sqrt()
    }

    pub fn mean_velocity(&self) -> f64 {
        self.p0 / self.mean_energy()
    }
}

/// K = [2π ∫ dp exp(−(p−p₀)²/Γ) |u(p)|²]^(−1/2), with |u(p)|² = 2E/(E + mc²).
///
/// Uniform trapezoid over ±14 momentum standard deviations; the integrand is
/// a smooth Gaussian so the rule is spectrally accurate.
fn packet_normalization(p0: f64, gamma: f64) -> f64 {
    const NODES: usize = 4001;
    let half = 14.0 * (0.5 * gamma).sqrt();
    let lo = (p0 - half).max(0.0);
    let hi = p0 + half;
    let h = (hi - lo) / (NODES - 1) as f64;
    let mut sum = 0.0;
    for i in 0..NODES {
        let p = lo + h * i as f64;
        let e = (p * p + 1.0).sqrt();
        let d = p - p0;
        let w = if i == 0 || i == NODES - 1 { 0.5 } else { 1.0 };
        sum += w * (-d * d / gamma).exp() * 2.0 * e / (e + 1.0);
    }
    (2.0 * std::f64::consts::PI * sum * h).powf(-0.5)
}

/// Single rectangular barrier of height `v_top` on (z1, z2). The detector sits
/// at z2.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BarrierSpec {
    pub v_top: f64,
    pub z1: f64,
    pub z2: f64,
}

impl BarrierSpec {
    pub fn new(v_top: f64, z1: f64, width: f64) -> Result<Self> {
        if !v_top.is_finite() {
            return Err(Error::config("barrier_height", "must be finite"));
        }
        if !(width >= 0.0 && width.is_finite()) {
            return Err(Error::config("barrier_width", "must be non-negative"));
        }
        Ok(Self {
            v_top,
            z1,
            z2: z1 + width,
        })
    }

    pub fn width(&self) -> f64 {
        self.z2 - self.z1
    }

    pub fn potential(&self, z: f64) -> f64 {
        if z > self.z1 && z < self.z2 {
            self.v_top
        } else {
            0.0
        }
    }

    /// Real momenta where the evanescent momentum vanishes, E = V_top ± mc².
    pub fn critical_momenta(&self) -> Vec<f64> {
        [self.v_top - 1.0, self.v_top + 1.0]
            .into_iter()
            .filter(|e| *e > 1.0)
            .map(|e| (e * e - 1.0).sqrt())
            .collect()
    }

    /// Momentum of the barrier top, p(V_top + mc²), when it exists.
    pub fn top_momentum(&self) -> Option<f64> {
        let e = self.v_top + 1.0;
        (e > 1.0).then(|| (e * e - 1.0).sqrt())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn rest_energy() {
        assert_eq!(energy_of_momentum(c(0.0, 0.0)), c(1.0, 0.0));
    }

    #[test]
    fn lorentz_factor_at_099c() {
        let p = momentum_for_velocity(0.99);
        let e = energy_of_momentum(c(p, 0.0));
        // 1/sqrt(1 - 0.9801) = 1/sqrt(0.0199)
        assert!((e.re - 7.088_812_050_083_354).abs() < 1e-12);
        assert!(e.im.abs() < 1e-15);
        let v = velocity_of_momentum(c(p, 0.0));
        assert!((v.re - 0.99).abs() < 1e-14);
    }

    #[test]
    fn inverse_round_trip() {
        for &p in &[0.1, 0.5, 1.0, 7.0, 123.0] {
            let back = momentum_of_energy(energy_of_momentum(c(p, 0.0)));
            assert!((back.re - p).abs() <= 1e-14 * p.max(1.0), "{p} -> {back}");
        }
    }

    #[test]
    fn threshold_and_unit_momentum() {
        assert_eq!(momentum_of_energy(c(1.0, 0.0)), c(0.0, 0.0));
        let p = momentum_of_energy(c(2f64.sqrt(), 0.0));
        assert!((p.re - 1.0).abs() < 1e-15 && p.im.abs() < 1e-15);
    }

    #[test]
    fn momentum_continuous_around_complex_circle() {
        let radius = 1e-2;
        let n = 2000;
        let mut prev = momentum_of_energy(c(2.0 + radius, 0.0));
        for k in 1..=n {
            let th = 2.0 * std::f64::consts::PI * k as f64 / n as f64;
            let e = c(2.0 + radius * th.cos(), radius * th.sin());
            let p = momentum_of_energy(e);
            assert!((p - prev).norm() < 10.0 * radius);
            prev = p;
        }
    }

    #[test]
    fn velocity_limits() {
        assert_eq!(velocity_of_momentum(c(0.0, 0.0)), c(0.0, 0.0));
        let v5 = velocity_of_momentum(c(5.0, 0.0)).re;
        let v10 = velocity_of_momentum(c(10.0, 0.0)).re;
        assert!(v10 > v5 && v10 < 1.0);
    }

    #[test]
    fn free_spinor_components() {
        let u0 = free_spinor(c(0.0, 0.0));
        assert_eq!(u0, Spinor::new(c(1.0, 0.0), c(0.0, 0.0)));
        for &p in &[0.1, 1.0, 7.0, 50.0] {
            let lo = free_spinor(c(p, 0.0)).lower;
            let lo_neg = free_spinor(c(-p, 0.0)).lower;
            assert!(lo.im == 0.0 && lo.re > 0.0 && lo.re < 1.0);
            assert!((lo.re * lo_neg.re + lo.re * lo.re).abs() < 1e-15);
        }
    }

    #[test]
    fn dispersion_identity_random_complex() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..1000 {
            let p = c(rng.random_range(-20.0..20.0), rng.random_range(-0.9..0.9));
            let e = energy_of_momentum(p);
            let r = e * e - p * p;
            assert!((r - 1.0).norm() < 1e-12 * (1.0 + p.norm_sqr()));
        }
    }

    #[test]
    fn unit_display_factors() {
        let u = UnitSystem::default();
        assert!((u.length_fm - 386.0).abs() < 0.5);
        assert!((u.time_zs - 1.29).abs() < 0.005);
        assert_eq!((u.hbar, u.c, u.m), (1.0, 1.0, 1.0));
    }

    #[test]
    fn packet_normalisation_and_barrier_clearance() {
        let pk = PacketSpec::from_velocity(0.99, 6.0, -120.0, WidthConvention::DensityStd).unwrap();
        assert!((pk.position_spread() - 6.0).abs() < 1e-12);
        // initial density at the barrier entrance, 120 ƛ away
        assert!(pk.envelope_density_ratio(0.0) < 1e-30);
        let amp =
            PacketSpec::from_velocity(0.99, 6.0, -120.0, WidthConvention::AmplitudeWidth).unwrap();
        assert!((amp.gamma - 1.0 / 36.0).abs() < 1e-15);
    }

    #[test]
    fn packet_rejects_bad_width() {
        let err = PacketSpec::from_velocity(0.99, 0.0, 0.0, WidthConvention::DensityStd);
        assert!(matches!(err, Err(Error::Config { ref field, .. }) if field == "packet_width"));
    }

    #[test]
    fn barrier_geometry() {
        let b = BarrierSpec::new(6.52, 0.0, 8.0).unwrap();
        assert_eq!(b.width(), 8.0);
        assert_eq!(b.potential(4.0), 6.52);
        assert_eq!(b.potential(-1.0), 0.0);
        assert_eq!(b.potential(9.0), 0.0);
        let crit = b.critical_momenta();
        assert_eq!(crit.len(), 2);
        assert!((crit[1] - (7.52f64 * 7.52 - 1.0).sqrt()).abs() < 1e-14);
    }
}
