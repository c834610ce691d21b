//! Nonuniform momentum quadrature grid.
//!
//! Nodes are equally spaced in the mapped coordinate
//!
//! ```text
//! F(p) = ∫ ρ(p') dp',   ρ(p) = 1 + (R − 1) Σ_c exp(−((p − p_c)/w_c)²)
//! ```
//!
//! so the node density rises smoothly by a factor R around each critical
//! momentum p_c where the evanescent momentum vanishes. The bump width w_c
//! covers |q| < q_max: near q = 0, q² ≈ 2|E − E_c| and so w_c = q_max²/(2v_c).
//!
//! Weights come from the trapezoid rule in the mapped coordinate s = F(p),
//! w = Δs/ρ(p). For integrands that are smooth in s and negligible at the
//! window edges this rule converges spectrally, which keeps oscillatory
//! sums free of the O(h²) weight ripple a plain nonuniform trapezoid leaves.

use libm::erf;

use crate::dd::DoubleDouble;
use crate::error::{Error, Result};
use crate::units::{BarrierSpec, PacketSpec};

const SQRT_PI: f64 = 1.772_453_850_905_516;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridConfig {
    pub n_points: usize,
    /// Half-width of the window in units of sqrt(Γ).
    pub window_sigmas: f64,
    /// Peak node-density ratio R at a critical momentum.
    pub refine_ratio: f64,
    /// Evanescent momentum covered by each refinement bump.
    pub refine_q: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            n_points: 100_000,
            window_sigmas: 10.0,
            refine_ratio: 30.0,
            refine_q: 0.2,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DensityBump {
    pub center: f64,
    pub width: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MomentumGrid {
    pub nodes: Vec<f64>,
    /// Ideal node minus stored node. The ideal nodes are equally spaced in
    /// the mapped coordinate and generally not representable as f64.
    pub offsets: Vec<f64>,
    /// Trapezoid weights at the ideal nodes.
    pub weights: Vec<f64>,
    pub bumps: Vec<DensityBump>,
    pub refine_ratio: f64,
}

impl MomentumGrid {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn lo(&self) -> f64 {
        self.nodes[0]
    }

    pub fn hi(&self) -> f64 {
        self.nodes[self.nodes.len() - 1]
    }

    /// Trapezoid rule on the grid nodes.
    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&p, &w)| w * f(p))
            .sum()
    }

    pub fn describe(&self) -> String {
        let bumps: Vec<String> = self
            .bumps
            .iter()
            .map(|b| format!("{:.6}±{:.4}", b.center, b.width))
            .collect();
        format!(
            "n={} window=[{:.6}, {:.6}] ratio={} bumps=[{}]",
            self.len(),
            self.lo(),
            self.hi(),
            self.refine_ratio,
            bumps.join(", ")
        )
    }
}

struct Mapping<'a> {
    lo: f64,
    ratio: f64,
    bumps: &'a [DensityBump],
}

impl Mapping<'_> {
    fn density(&self, p: f64) -> f64 {
        1.0 + (self.ratio - 1.0)
            * self
                .bumps
                .iter()
                .map(|b| (-((p - b.center) / b.width).powi(2)).exp())
                .sum::<f64>()
    }

    fn density_d1(&self, p: f64) -> f64 {
        (self.ratio - 1.0)
            * self
                .bumps
                .iter()
                .map(|b| {
                    let x = (p - b.center) / b.width;
                    -2.0 * x / b.width * (-x * x).exp()
                })
                .sum::<f64>()
    }

    /// F(b) − F(a) for adjacent nodes, accurate to a few ulps of the
    /// increment rather than of F.
    fn increment(&self, a: f64, b: f64) -> f64 {
        const X: [f64; 2] = [0.339_981_043_584_856_3, 0.861_136_311_594_052_6];
        const W: [f64; 2] = [0.652_145_154_862_546_1, 0.347_854_845_137_453_9];
        let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
        let mut bump = 0.0;
        for k in 0..2 {
            for s in [-1.0, 1.0] {
                bump += W[k] * (self.density(mid + s * half * X[k]) - 1.0);
            }
        }
        (b - a) + half * bump
    }

    fn cdf(&self, p: f64) -> f64 {
        let extra: f64 = self
            .bumps
            .iter()
            .map(|b| {
                0.5 * SQRT_PI
                    * b.width
                    * (erf((p - b.center) / b.width) - erf((self.lo - b.center) / b.width))
            })
            .sum();
        (p - self.lo) + (self.ratio - 1.0) * extra
    }
}

pub fn build_grid(
    packet: &PacketSpec,
    barrier: &BarrierSpec,
    config: &GridConfig,
) -> Result<MomentumGrid> {
    if config.n_points < 1000 {
        return Err(Error::config("n_points", "must be at least 1000"));
    }
    if !(config.refine_ratio >= 1.0) {
        return Err(Error::config("refine_ratio", "must be at least 1"));
    }
    if !(config.window_sigmas > 0.0) {
        return Err(Error::config("window_sigmas", "must be positive"));
    }
    if !(config.refine_q > 0.0 && config.refine_q < 1.0) {
        return Err(Error::config("refine_q", "must lie in (0, 1)"));
    }
    let half = config.window_sigmas * packet.gamma.sqrt();
    let lo = packet.p0 - half;
    let hi = packet.p0 + half;
    if lo <= 0.0 {
        return Err(Error::config(
            "packet_width",
            format!("momentum window reaches p = {lo:.4} ≤ 0; packet too narrow in position"),
        ));
    }

    let bumps: Vec<DensityBump> = barrier
        .critical_momenta()
        .into_iter()
        .filter(|&pc| pc > lo && pc < hi)
        .map(|pc| {
            let vc = pc / (pc * pc + 1.0).sqrt();
            DensityBump {
                center: pc,
                width: config.refine_q * config.refine_q / (2.0 * vc),
            }
        })
        .collect();

    let map = Mapping {
        lo,
        ratio: config.refine_ratio,
        bumps: &bumps,
    };
    let n = config.n_points;
    let total = map.cdf(hi);
    let mut nodes = Vec::with_capacity(n);
    nodes.push(lo);
    let mut prev = lo;
    for i in 1..n - 1 {
        let target = total * i as f64 / (n - 1) as f64;
        let p = invert(&map, target, prev, hi)?;
        nodes.push(p);
        prev = p;
    }
    nodes.push(hi);

    // Sub-ulp offsets to the ideal nodes. F is accumulated in double-double
    // from per-interval increments so the residual F(p_j) − j Δs resolves
    // well below ulp(p).
    let mut f = vec![DoubleDouble::ZERO; n];
    for j in 1..n {
        f[j] = f[j - 1].add_f64(map.increment(nodes[j - 1], nodes[j]));
    }
    let total = f[n - 1];
    let offsets: Vec<f64> = (0..n)
        .map(|j| {
            let target = total.mul_f64(j as f64).div_f64((n - 1) as f64);
            (target - f[j]).to_f64() / map.density(nodes[j])
        })
        .collect();
    if let Some(worst) = offsets.iter().map(|d| d.abs()).reduce(f64::max) {
        if worst > 1e-12 {
            log::warn!("grid node offsets reach {worst:.3e}");
        }
    }

    // trapezoid in the mapped coordinate: w = Δs · dp/ds = Δs / ρ(p̃)
    let ds = total.to_f64() / (n - 1) as f64;
    let mut weights: Vec<f64> = nodes
        .iter()
        .zip(&offsets)
        .map(|(&p, &d)| {
            let rho = map.density(p);
            ds / rho * (1.0 - d * map.density_d1(p) / rho)
        })
        .collect();
    // fourth-order end weights; the interior stays plain trapezoid
    for (k, c) in [17.0, 59.0, 43.0, 49.0].into_iter().enumerate() {
        weights[k] *= c / 48.0;
        weights[n - 1 - k] *= c / 48.0;
    }

    Ok(MomentumGrid {
        nodes,
        offsets,
        weights,
        bumps,
        refine_ratio: config.refine_ratio,
    })
}

/// Safeguarded Newton solve of F(p) = target on [a, b], polished to the
/// last ulp. Node jitter of a few ulps already shows up in the early-time
/// flux through the large phase derivative.
fn invert(map: &Mapping, target: f64, mut a: f64, mut b: f64) -> Result<f64> {
    let mut p = a + (target - map.cdf(a)) / map.density(a);
    if !(p > a && p < b) {
        p = 0.5 * (a + b);
    }
    let mut last = f64::INFINITY;
    for _ in 0..100 {
        let r = map.cdf(p) - target;
        if r == 0.0 {
            return Ok(p);
        }
        if r > 0.0 {
            b = b.min(p);
        } else {
            a = a.max(p);
        }
        let mut next = p - r / map.density(p);
        if !(next >= a && next <= b) {
            next = 0.5 * (a + b);
        }
        let step = (next - p).abs();
        if step <= f64::EPSILON * p.abs() {
            // settle on whichever neighbour has the smaller residual
            let rn = (map.cdf(next) - target).abs();
            return Ok(if rn < r.abs() { next } else { p });
        }
        if step >= last && step < 1e-10 * p.abs() {
            // cycling between two adjacent floats
            return Ok(p);
        }
        last = step;
        p = next;
    }
    Err(Error::NonConvergence {
        iterations: 100,
        residual: (map.cdf(p) - target).abs(),
    })
}
