//! Closed-form scattering off a single rectangular barrier.
//!
//! The transmission amplitude is written as T(p) = exp(−ipl) / D(p) with
//!
//! ```text
//! D = cosh(ql) + ((1 + α²)/2α) sinh(ql)
//!   = C(Q) + S(Q)·B(p),   Q = q² = 1 − (E − V)²,
//! C = cosh(l√Q),  S = sinh(l√Q)/√Q,
//! B = −(i/2)[p(ε + 1)/(E + 1) − (E + 1)(1 − ε)/p],   ε = E − V.
//! ```
//!
//! C and S are entire functions of Q, so D has no branch ambiguity in q and
//! stays finite at the critical points q = 0. Derivatives are carried
//! analytically through a second-order jet.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::units::{energy_of_momentum, velocity_of_momentum, BarrierSpec};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Below this |l²Q| the cosh/sinh pair is summed as a power series.
const SERIES_LIMIT: f64 = 4.0;
const SERIES_TERMS: usize = 40;

/// q = sqrt(m²c² − (E − V_top)²/c²), principal branch.
pub fn evanescent_momentum(e: Complex64, barrier: &BarrierSpec) -> Complex64 {
    let eps = e - barrier.v_top;
    (1.0 - eps * eps).sqrt()
}

/// α = i (q/p) (E + mc²)/(E − V_top + mc²).
pub fn alpha_ratio(
    e: Complex64,
    p: Complex64,
    q: Complex64,
    barrier: &BarrierSpec,
) -> Result<Complex64> {
    let den = e - barrier.v_top + 1.0;
    if p.norm() == 0.0 {
        return Err(Error::Degenerate("alpha ratio at p = 0".into()));
    }
    if den.norm() == 0.0 {
        return Err(Error::Degenerate("alpha ratio at E = V_top − mc²".into()));
    }
    Ok(I * (q / p) * (e + 1.0) / den)
}

/// Value and first two derivatives of a function along some variable.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet {
    pub value: Complex64,
    pub d1: Complex64,
    pub d2: Complex64,
}

/// C(Q), S(Q) and their first two Q-derivatives.
struct HyperPair {
    c: [Complex64; 3],
    s: [Complex64; 3],
}

fn hyper_pair(big_q: Complex64, l: f64) -> HyperPair {
    if (big_q * (l * l)).norm() < SERIES_LIMIT {
        hyper_series(big_q, l)
    } else {
        hyper_closed(big_q, l)
    }
}

fn hyper_series(big_q: Complex64, l: f64) -> HyperPair {
    let x = big_q * (l * l);
    {
        // C = Σ xᵏ/(2k)!, S = l Σ xᵏ/(2k+1)!, differentiated termwise
        let mut pows = [Complex64::new(1.0, 0.0); SERIES_TERMS];
        for k in 1..SERIES_TERMS {
            pows[k] = pows[k - 1] * x;
        }
        let mut c = [Complex64::new(0.0, 0.0); 3];
        let mut s = [Complex64::new(0.0, 0.0); 3];
        let mut fact_even = 1.0;
        for k in 0..SERIES_TERMS {
            if k > 0 {
                fact_even *= ((2 * k - 1) * (2 * k)) as f64;
            }
            let fact_odd = fact_even * (2 * k + 1) as f64;
            let kf = k as f64;
            c[0] += pows[k] / fact_even;
            s[0] += pows[k] / fact_odd;
            if k >= 1 {
                c[1] += pows[k - 1] * kf / fact_even;
                s[1] += pows[k - 1] * kf / fact_odd;
            }
            if k >= 2 {
                let kk = kf * (kf - 1.0);
                c[2] += pows[k - 2] * kk / fact_even;
                s[2] += pows[k - 2] * kk / fact_odd;
            }
        }
        let l2 = l * l;
        HyperPair {
            c: [c[0], c[1] * l2, c[2] * l2 * l2],
            s: [s[0] * l, s[1] * l2 * l, s[2] * l2 * l2 * l],
        }
    }
}

fn hyper_closed(big_q: Complex64, l: f64) -> HyperPair {
    {
        let q = big_q.sqrt();
        let ql = q * l;
        let c0 = ql.cosh();
        let s0 = ql.sinh() / q;
        let c1 = s0 * (0.5 * l);
        let s1 = (c0 * l - s0) / (big_q * 2.0);
        let c2 = s1 * (0.5 * l);
        let s2 = (s0 * (0.5 * l * l) - s1 * 3.0) / (big_q * 2.0);
        HyperPair {
            c: [c0, c1, c2],
            s: [s0, s1, s2],
        }
    }
}

/// Derivatives of (p, E) with respect to the differentiation variable.
#[derive(Clone, Copy)]
struct Kinematics {
    p: [Complex64; 3],
    e: [Complex64; 3],
}

fn denominator_along(kin: Kinematics, barrier: &BarrierSpec) -> Jet {
    let v = barrier.v_top;
    let l = barrier.width();
    let [p, p1, p2] = kin.p;
    let [e, e1, e2] = kin.e;

    let eps = e - v;
    let big_q = [
        1.0 - eps * eps,
        -2.0 * eps * e1,
        -2.0 * (e1 * e1 + eps * e2),
    ];

    // b1 = p (1 − V/(E+1))
    let ep1 = e + 1.0;
    let r0 = 1.0 - v / ep1;
    let r1 = v * e1 / (ep1 * ep1);
    let r2 = v * (e2 / (ep1 * ep1) - 2.0 * e1 * e1 / (ep1 * ep1 * ep1));
    let b1 = [p * r0, p1 * r0 + p * r1, p2 * r0 + 2.0 * p1 * r1 + p * r2];

    // b2 = N/p, N = (E+1)(1+V−E)
    let n0 = ep1 * (1.0 + v - e);
    let n1 = e1 * (v - 2.0 * e);
    let n2 = e2 * (v - 2.0 * e) - 2.0 * e1 * e1;
    let pinv = 1.0 / p;
    let b2 = [
        n0 * pinv,
        (n1 - n0 * p1 * pinv) * pinv,
        n2 * pinv - 2.0 * n1 * p1 * pinv * pinv - n0 * p2 * pinv * pinv
            + 2.0 * n0 * p1 * p1 * pinv * pinv * pinv,
    ];

    let half_i = Complex64::new(0.0, -0.5);
    let b = [
        half_i * (b1[0] - b2[0]),
        half_i * (b1[1] - b2[1]),
        half_i * (b1[2] - b2[2]),
    ];

    let hp = hyper_pair(big_q[0], l);
    let cj = [
        hp.c[0],
        hp.c[1] * big_q[1],
        hp.c[2] * big_q[1] * big_q[1] + hp.c[1] * big_q[2],
    ];
    let sj = [
        hp.s[0],
        hp.s[1] * big_q[1],
        hp.s[2] * big_q[1] * big_q[1] + hp.s[1] * big_q[2],
    ];

    Jet {
        value: cj[0] + sj[0] * b[0],
        d1: cj[1] + sj[1] * b[0] + sj[0] * b[1],
        d2: cj[2] + sj[2] * b[0] + 2.0 * sj[1] * b[1] + sj[0] * b[2],
    }
}

/// D(p) and its first two p-derivatives.
pub fn denominator(p: Complex64, barrier: &BarrierSpec) -> Jet {
    let e = energy_of_momentum(p);
    let v = p / e;
    let kin = Kinematics {
        p: [p, Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)],
        e: [e, v, 1.0 / (e * e * e)],
    };
    denominator_along(kin, barrier)
}

/// D and its first two derivatives with respect to the energy E.
pub fn denominator_in_energy(e: Complex64, barrier: &BarrierSpec) -> Jet {
    let p = (e * e - 1.0).sqrt();
    let kin = Kinematics {
        p: [p, e / p, -1.0 / (p * p * p)],
        e: [e, Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)],
    };
    denominator_along(kin, barrier)
}

/// T(p) = exp(−ipl/ħ) / (cosh(ql/ħ) + ((1+α²)/2α) sinh(ql/ħ)).
pub fn transmission_amplitude(p: Complex64, barrier: &BarrierSpec) -> Complex64 {
    let d = denominator(p, barrier).value;
    (-I * p * barrier.width()).exp() / d
}

/// ln T(p) and its first two p-derivatives.
///
/// The logarithm is the principal log of 1/D plus the explicit free phase;
/// only its derivatives are branch independent.
pub fn log_transmission(p: Complex64, barrier: &BarrierSpec) -> Jet {
    let d = denominator(p, barrier);
    let l = barrier.width();
    let r1 = d.d1 / d.value;
    Jet {
        value: -I * p * l - d.value.ln(),
        d1: -I * l - r1,
        d2: -(d.d2 / d.value - r1 * r1),
    }
}

/// d ln T / dp.
pub fn log_t_derivative(p: Complex64, barrier: &BarrierSpec) -> Complex64 {
    log_transmission(p, barrier).d1
}

/// τ(p) = −iħ d ln T/dE = −i (d ln T/dp) / v(p).
///
/// Real part is the Wigner phase time of the barrier segment, imaginary part
/// the Pollak-Miller time.
pub fn phase_time(p: Complex64, barrier: &BarrierSpec) -> Result<Complex64> {
    if p.norm() == 0.0 {
        return Err(Error::Degenerate("phase time at p = 0".into()));
    }
    Ok(-I * log_t_derivative(p, barrier) / velocity_of_momentum(p))
}

/// τ evaluated with energy as the independent variable.
pub fn phase_time_in_energy(e: Complex64, barrier: &BarrierSpec) -> Result<Complex64> {
    let p = (e * e - 1.0).sqrt();
    if p.norm() == 0.0 {
        return Err(Error::Degenerate("phase time at p = 0".into()));
    }
    let d = denominator_in_energy(e, barrier);
    // d(−ipl)/dE = −il/v
    let dlnt = -I * barrier.width() * e / p - d.d1 / d.value;
    Ok(-I * dlnt)
}

/// Time spent under the barrier relative to free flight over its width,
/// i(D'/D)/v.
pub fn under_barrier_time(p: Complex64, barrier: &BarrierSpec) -> Complex64 {
    let d = denominator(p, barrier);
    I * (d.d1 / d.value) / velocity_of_momentum(p)
}

/// Bundle of scattering quantities at one momentum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScatteringPoint {
    pub p: Complex64,
    pub e: Complex64,
    pub q: Complex64,
    pub alpha: Option<Complex64>,
    pub t: Complex64,
    pub dlnt_dp: Complex64,
}

impl ScatteringPoint {
    pub fn at(p: Complex64, barrier: &BarrierSpec) -> Self {
        let e = energy_of_momentum(p);
        let q = evanescent_momentum(e, barrier);
        Self {
            p,
            e,
            q,
            alpha: alpha_ratio(e, p, q, barrier).ok(),
            t: transmission_amplitude(p, barrier),
            dlnt_dp: log_t_derivative(p, barrier),
        }
    }
}
