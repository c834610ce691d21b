#![allow(dead_code)]

use std::sync::OnceLock;

use num_complex::Complex64;
use tunneltime::config::RunConfig;
use tunneltime::grid::build_grid;
use tunneltime::propagator::{photon_distribution, Propagator, TimeDistribution};
use tunneltime::saddle::{frozen_model, sda_distribution, FrozenModel, PathModel, SdaResult};

/// A paper preset evaluated at desk scale: 10⁵ grid points, extended
/// precision.
pub struct Preset {
    pub cfg: RunConfig,
    pub model: PathModel,
    pub exact: TimeDistribution,
    pub photon: TimeDistribution,
    pub frozen: FrozenModel,
    pub sda: SdaResult,
}

fn build(mut cfg: RunConfig) -> Preset {
    cfg.n_points = 100_000;
    let packet = cfg.packet().unwrap();
    let barrier = cfg.barrier().unwrap();
    let model = PathModel::new(&packet, &barrier);
    let times = cfg.times();
    let grid = build_grid(&packet, &barrier, &cfg.grid()).unwrap();
    let exact = Propagator::new(&packet, &barrier, &grid, cfg.precision).flux_distribution(&times);
    let photon = photon_distribution(&packet, model.detector_distance(), &times).unwrap();
    let frozen = frozen_model(&model).unwrap();
    let sda = sda_distribution(&model, &frozen, &times).unwrap();
    Preset {
        cfg,
        model,
        exact,
        photon,
        frozen,
        sda,
    }
}

pub fn bottom() -> &'static Preset {
    static P: OnceLock<Preset> = OnceLock::new();
    P.get_or_init(|| build(RunConfig::fig1_bottom()))
}

pub fn top() -> &'static Preset {
    static P: OnceLock<Preset> = OnceLock::new();
    P.get_or_init(|| build(RunConfig::fig1_top()))
}

pub type M2 = [[Complex64; 2]; 2];

fn mul(a: &M2, b: &M2) -> M2 {
    let mut out = [[Complex64::new(0.0, 0.0); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

fn inv(a: &M2) -> M2 {
    let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    [
        [a[1][1] / det, -a[0][1] / det],
        [-a[1][0] / det, a[0][0] / det],
    ]
}

/// Columns are the right- and left-moving plane-wave spinors at z in a
/// region of constant potential.
fn wave_matrix(e: f64, v: f64, z: f64) -> M2 {
    let eps = Complex64::new(e - v, 0.0);
    let k = (eps * eps - 1.0).sqrt();
    let s = k / (eps + 1.0);
    let i = Complex64::new(0.0, 1.0);
    let fwd = (i * k * z).exp();
    let bwd = (-i * k * z).exp();
    [[fwd, bwd], [s * fwd, -s * bwd]]
}

/// Transmission coefficient t for a unit right-moving wave on a barrier of
/// height `v` on (z1, z2), matching both spinor components at each edge.
pub fn transfer_matrix_t(e: f64, v: f64, z1: f64, z2: f64) -> Complex64 {
    let x = mul(
        &mul(&inv(&wave_matrix(e, 0.0, z1)), &wave_matrix(e, v, z1)),
        &mul(&inv(&wave_matrix(e, v, z2)), &wave_matrix(e, 0.0, z2)),
    );
    1.0 / x[0][0]
}

/// Free Dirac packet amplitude at (z, t) by brute-force uniform quadrature,
/// independent of the library grid.
pub fn free_packet_spinor(p0: f64, gamma: f64, z0: f64, k: f64, z: f64, t: f64) -> [Complex64; 2] {
    let n = 200_001;
    let half = 12.0 * (0.5 * gamma).sqrt();
    let lo = p0 - half;
    let h = 2.0 * half / (n - 1) as f64;
    let mut a = Complex64::new(0.0, 0.0);
    let mut b = Complex64::new(0.0, 0.0);
    for j in 0..n {
        let p = lo + h * j as f64;
        let e = (p * p + 1.0).sqrt();
        let w = if j == 0 || j == n - 1 { 0.5 } else { 1.0 };
        let g = (-(p - p0) * (p - p0) / (2.0 * gamma)).exp();
        let ph = Complex64::from_polar(1.0, p * (z - z0) - e * t);
        let term = ph * (w * g * h * k);
        a += term;
        b += term * (p / (e + 1.0));
    }
    [a, b]
}
