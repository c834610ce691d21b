//! Run orchestration behind the CLI subcommands.

use std::path::{Path, PathBuf};

use crate::config::{RunConfig, Source};
use crate::error::{Error, Result};
use crate::firstclick::{
    first_click_crossover, first_click_density, first_click_time, first_click_width,
    frozen_crossover, mean_first_click_time, monte_carlo_first_click, photon_electron_gap,
    quiet_window, FirstClickSpec,
};
use crate::grid::build_grid;
use crate::io::{
    write_csv, write_summary, write_text, ContourPlot, Header, LinePlot, Marker, Series,
};
use crate::propagator::{photon_distribution, Propagator, TimeDistribution};
use crate::saddle::{
    frozen_model, saddle_path_samples, sda_distribution, tau_contour_map, FrozenModel, PathModel,
    SdaResult,
};
use crate::units::{BarrierSpec, PacketSpec};

/// Files written by a run and its summary entries.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunOutput {
    pub files: Vec<PathBuf>,
    pub summary: Vec<(String, String)>,
}

impl RunOutput {
    fn note(&mut self, key: &str, value: impl ToString) {
        self.summary.push((key.to_string(), value.to_string()));
    }
}

/// Largest N searched for a first-click crossover under P_sd.
pub const CROSSOVER_CAP: f64 = 1e24;

struct Setup {
    cfg: RunConfig,
    packet: PacketSpec,
    barrier: BarrierSpec,
    model: PathModel,
    times: Vec<f64>,
    hash: String,
}

impl Setup {
    fn new(cfg: &RunConfig) -> Result<Self> {
        cfg.validate()?;
        let packet = cfg.packet()?;
        let barrier = cfg.barrier()?;
        Ok(Self {
            cfg: cfg.clone(),
            packet,
            barrier,
            model: PathModel::new(&packet, &barrier),
            times: cfg.times(),
            hash: cfg.hash(),
        })
    }

    fn distance(&self) -> f64 {
        self.model.detector_distance()
    }

    fn header(&self, kind: &str, floor: f64) -> Header {
        Header::new(kind, &self.hash, &self.cfg.precision.to_string(), floor)
    }

    fn exact(&self) -> Result<(TimeDistribution, Propagator)> {
        let grid = build_grid(&self.packet, &self.barrier, &self.cfg.grid())
            .map_err(|e| stage("grid", e))?;
        log::info!("grid {}", grid.describe());
        let prop = Propagator::new(&self.packet, &self.barrier, &grid, self.cfg.precision);
        Ok((prop.flux_distribution(&self.times), prop))
    }

    fn photon(&self) -> Result<TimeDistribution> {
        photon_distribution(&self.packet, self.distance(), &self.times)
    }

    fn frozen(&self) -> Result<FrozenModel> {
        frozen_model(&self.model).map_err(|e| stage("frozen model", e))
    }

    fn sda(&self, frozen: &FrozenModel) -> Result<SdaResult> {
        sda_distribution(&self.model, frozen, &self.times)
            .map_err(|e| stage("saddle continuation", e))
    }
}

fn stage(name: &str, e: Error) -> Error {
    match e {
        Error::Io(_) | Error::Config { .. } => e,
        other => Error::Domain(format!("{name}: {other}")),
    }
}

/// Floor used to clip log plots of analytic curves with no quadrature floor.
fn plot_floor(floor: f64, curves: &[&[f64]]) -> f64 {
    if floor > 0.0 {
        return floor;
    }
    let peak = curves
        .iter()
        .flat_map(|c| c.iter().copied())
        .fold(0.0f64, f64::max);
    if peak > 0.0 {
        peak * 1e-40
    } else {
        1e-300
    }
}

fn save_svg(out: &mut RunOutput, cfg: &RunConfig, path: PathBuf, svg: String) -> Result<()> {
    if cfg.wants("svg") {
        write_text(&path, &svg)?;
        out.files.push(path);
    }
    Ok(())
}

fn save_csv(
    out: &mut RunOutput,
    cfg: &RunConfig,
    path: PathBuf,
    header: &Header,
    columns: &[(&str, &[f64])],
) -> Result<()> {
    if cfg.wants("csv") {
        write_csv(&path, header, columns)?;
        out.files.push(path);
    }
    Ok(())
}

fn save_summary(out: &mut RunOutput, path: PathBuf, header: &Header) -> Result<()> {
    write_summary(&path, header, &out.summary)?;
    out.files.push(path);
    Ok(())
}

pub fn run_exact(cfg: &RunConfig, dir: &Path) -> Result<RunOutput> {
    let s = Setup::new(cfg)?;
    let (exact, prop) = s.exact()?;
    let photon = s.photon()?;
    let mut out = RunOutput::default();
    let mut h = s.header("exact", exact.floor);
    h.push("floor_column", "P")
        .push("floor_distance", s.distance())
        .push("total_column", "C")
        .push("total", exact.total);
    save_csv(
        &mut out,
        cfg,
        dir.join("exact.csv"),
        &h,
        &[
            ("t", &exact.times),
            ("P", &exact.density),
            ("C", &exact.cumulative),
            ("C_tail", &exact.tail),
            ("P_photon", &photon.density),
            ("C_photon", &photon.cumulative),
        ],
    )?;
    let plot = LinePlot {
        title: "Transmitted flux at the detector".into(),
        x_label: "t [ƛ/c]".into(),
        y_label: "P(t)".into(),
        log_floor: Some(exact.floor),
        series: vec![
            Series::new("P exact", &exact.times, &exact.density),
            Series::new("P photon", &photon.times, &photon.density).dashed(),
        ],
        markers: vec![],
    };
    save_svg(&mut out, cfg, dir.join("exact.svg"), plot.to_svg())?;
    out.note("c_trans", exact.total);
    out.note("c_trans_momentum", prop.momentum_transmission());
    out.note(
        "truncated_fraction",
        exact.truncated_fraction().unwrap_or(f64::NAN),
    );
    out.note("floor", exact.floor);
    out.note("peak_time", exact.peak_time());
    out.note("photon_peak_time", photon.peak_time());
    save_summary(
        &mut out,
        dir.join("exact.txt"),
        &s.header("exact", exact.floor),
    )?;
    Ok(out)
}

pub fn run_sda(cfg: &RunConfig, dir: &Path) -> Result<RunOutput> {
    let s = Setup::new(cfg)?;
    let frozen = s.frozen()?;
    let sda = s.sda(&frozen)?;
    let mut out = RunOutput::default();
    let d = &sda.distribution;
    let col =
        |f: fn(&crate::saddle::SaddleTrace) -> f64| sda.trace.iter().map(f).collect::<Vec<f64>>();
    let (re_p, im_p) = (col(|t| t.p_sharp.re), col(|t| t.p_sharp.im));
    let (re_tau, im_tau) = (col(|t| t.tau_sharp.re), col(|t| t.tau_sharp.im));
    let residual = col(|t| t.residual);
    let converged = col(|t| if t.converged { 1.0 } else { 0.0 });
    let mut h = s.header("sda", 0.0);
    h.push("floor_note", "analytic curve, no quadrature floor")
        .push("valid_from", sda.valid.0)
        .push("valid_to", sda.valid.1)
        .push("t_mp", frozen.t_mp)
        .push("total_column", "C_sd")
        .push("total", d.total);
    save_csv(
        &mut out,
        cfg,
        dir.join("sda.csv"),
        &h,
        &[
            ("t", &d.times),
            ("P_sd", &d.density),
            ("C_sd", &d.cumulative),
            ("re_p", &re_p),
            ("im_p", &im_p),
            ("re_tau", &re_tau),
            ("im_tau", &im_tau),
            ("residual", &residual),
            ("converged", &converged),
        ],
    )?;
    let floor = plot_floor(0.0, &[&d.density]);
    let plot = LinePlot {
        title: "Steepest-descent flux".into(),
        x_label: "t [ƛ/c]".into(),
        y_label: "P_sd(t)".into(),
        log_floor: Some(floor),
        series: vec![Series::new("P_sd", &d.times, &d.density)],
        markers: vec![],
    };
    save_svg(&mut out, cfg, dir.join("sda.svg"), plot.to_svg())?;

    let tau_mp = crate::saddle::solve_saddle(
        &s.model,
        frozen.t_mp,
        num_complex::Complex64::new(frozen.p_mp, 0.0),
    )?
    .tau_sharp;
    let ok: Vec<usize> = (0..sda.trace.len())
        .filter(|&i| sda.trace[i].converged)
        .collect();
    let pick = |v: &[f64]| ok.iter().map(|&i| v[i]).collect::<Vec<f64>>();
    let t_ok = pick(&d.times);
    for (name, ys, mark, label) in [
        ("tau_sharp_re.svg", pick(&re_tau), tau_mp.re, "Re τ♯ [ƛ/c]"),
        ("tau_sharp_im.svg", pick(&im_tau), tau_mp.im, "Im τ♯ [ƛ/c]"),
    ] {
        let plot = LinePlot {
            title: "Complex phase time along the saddle path".into(),
            x_label: "t [ƛ/c]".into(),
            y_label: label.into(),
            log_floor: None,
            series: vec![Series::new(label, &t_ok, &ys)],
            markers: vec![Marker {
                x: frozen.t_mp,
                y: mark,
                label: "t_mp".into(),
            }],
        };
        save_svg(&mut out, cfg, dir.join(name), plot.to_svg())?;
    }
    out.note("t_mp", frozen.t_mp);
    out.note("re_tau_at_t_mp", tau_mp.re);
    out.note("im_tau_at_t_mp", tau_mp.im);
    out.note(
        "re_tau_at_t_start",
        sda.trace.first().map_or(f64::NAN, |t| t.tau_sharp.re),
    );
    out.note("c_trans_sd", d.total);
    out.note("valid_range", format!("{} {}", sda.valid.0, sda.valid.1));
    save_summary(&mut out, dir.join("sda.txt"), &s.header("sda", 0.0))?;
    Ok(out)
}

fn frozen_notes(out: &mut RunOutput, s: &Setup, frozen: &FrozenModel) {
    let n = s.cfg.n_particles;
    out.note("t_mp", frozen.t_mp);
    out.note("p_mp", frozen.p_mp);
    out.note("delta_t", frozen.delta_t);
    out.note("delta_t_alt", frozen.delta_t_alt);
    out.note("sigma_mp", frozen.sigma_mp);
    out.note("c_trans_sd0", frozen.c_sd0);
    out.note(
        "delta_mp",
        format!("{} {}", frozen.delta_mp.re, frozen.delta_mp.im),
    );
    out.note("n_particles", n);
    out.note("a", n * frozen.c_sd0);
    match mean_first_click_time(frozen, n) {
        Ok(m) => {
            out.note("t_1st", m.t_1st);
            out.note("t_1st_leading", m.t_1st_leading);
            out.note("t_1st_exact_gaussian", m.t_1st_exact.unwrap_or(f64::NAN));
            out.note("t_1dif", (m.t_1st - frozen.t_mp) / frozen.delta_t);
            if let Ok(w) = first_click_width(frozen, n) {
                out.note("delta_t_1st", w.closed);
                out.note("delta_t_1st_general", w.general);
                out.note(
                    "quiet_until",
                    quiet_window(m.t_1st, w.closed, s.cfg.quiet_fraction),
                );
            }
        }
        Err(e) => out.note("t_1st", format!("unavailable: {e}")),
    }
    let photon_t = s.distance();
    match photon_electron_gap(frozen, n, frozen.c_sd0, photon_t) {
        Ok(g) => {
            out.note("gap_photon_minus_electron", g.gap);
            out.note("gap_equal_width_assumed", g.equal_width_assumed);
        }
        Err(e) => out.note("gap_photon_minus_electron", format!("unavailable: {e}")),
    }
    match frozen_crossover(frozen, frozen.c_sd0, photon_t) {
        Ok(c) => {
            out.note("frozen_crossover_n", c.n_star);
            out.note("frozen_crossover_n_closed", c.n_star_closed);
        }
        Err(e) => out.note("frozen_crossover_n", format!("none: {e}")),
    }
}

pub fn run_frozen(cfg: &RunConfig, dir: &Path) -> Result<RunOutput> {
    let s = Setup::new(cfg)?;
    let frozen = s.frozen()?;
    let d = frozen.distribution(&s.times);
    let mut out = RunOutput::default();
    let mut h = s.header("frozen", 0.0);
    h.push("floor_note", "analytic curve, no quadrature floor")
        .push("total_column", "C_sd0")
        .push("total", d.total);
    save_csv(
        &mut out,
        cfg,
        dir.join("frozen.csv"),
        &h,
        &[
            ("t", &d.times),
            ("P_sd0", &d.density),
            ("C_sd0", &d.cumulative),
        ],
    )?;
    let plot = LinePlot {
        title: "Frozen Gaussian model".into(),
        x_label: "t [ƛ/c]".into(),
        y_label: "P_sd0(t)".into(),
        log_floor: Some(plot_floor(0.0, &[&d.density])),
        series: vec![Series::new("P_sd0", &d.times, &d.density)],
        markers: vec![],
    };
    save_svg(&mut out, cfg, dir.join("frozen.svg"), plot.to_svg())?;
    frozen_notes(&mut out, &s, &frozen);
    save_summary(&mut out, dir.join("frozen.txt"), &s.header("frozen", 0.0))?;
    Ok(out)
}

pub fn run_firstclick(cfg: &RunConfig, dir: &Path) -> Result<RunOutput> {
    let s = Setup::new(cfg)?;
    let n = cfg.n_particles;
    let frozen = s.frozen()?;
    let sda = s.sda(&frozen)?;
    let photon = s.photon()?;
    let (source, floor) = match cfg.source {
        Source::Exact => {
            let (d, _) = s.exact()?;
            let f = d.floor;
            (d, f)
        }
        Source::Sda => (sda.distribution.clone(), 0.0),
        Source::Frozen => (frozen.distribution(&s.times), 0.0),
        Source::Photon => (photon.clone(), 0.0),
    };
    let spec = FirstClickSpec::new(n, &source)?.with_reference(&frozen);
    let fc = first_click_density(&spec)?;
    let fc_photon = first_click_density(&FirstClickSpec::new(n, &photon)?)?;

    let mut out = RunOutput::default();
    let mut h = s.header("firstclick", floor);
    h.push("source", cfg.source).push("n_particles", n);
    if floor > 0.0 {
        h.push("floor_column", format!("P_{}", cfg.source))
            .push("floor_distance", s.distance());
    }
    let src_name = format!("P_{}", cfg.source);
    let mut columns: Vec<(&str, &[f64])> =
        vec![("t", &source.times), (src_name.as_str(), &source.density)];
    if cfg.source != Source::Sda {
        columns.push(("P_sd", &sda.distribution.density));
    }
    if cfg.source != Source::Photon {
        columns.push(("P_photon", &photon.density));
    }
    columns.push(("P_1st", &fc.density));
    columns.push(("P_1st_photon", &fc_photon.density));
    save_csv(&mut out, cfg, dir.join("firstclick.csv"), &h, &columns)?;

    let pf = plot_floor(floor, &[&source.density]);
    let plot = LinePlot {
        title: format!("Flux and first-click densities, N = {n:e}"),
        x_label: "t [ƛ/c]".into(),
        y_label: "density [c/ƛ]".into(),
        log_floor: Some(pf),
        series: columns[1..]
            .iter()
            .map(|(name, ys)| {
                let s = Series::new(name, &source.times, ys);
                if name.starts_with("P_1st") {
                    s.dashed()
                } else {
                    s
                }
            })
            .collect(),
        markers: vec![],
    };
    save_svg(&mut out, cfg, dir.join("firstclick.svg"), plot.to_svg())?;

    out.note("source", cfg.source);
    out.note("n_particles", n);
    out.note("c_trans", spec.c_trans);
    out.note("a", spec.a());
    out.note("total_quadrature", fc.total);
    out.note("total_closed", fc.total_closed);
    out.note("peak_time", fc.peak_time);
    out.note("photon_peak_time", fc_photon.peak_time);
    out.note("t_1st", fc.t_1st.unwrap_or(f64::NAN));
    out.note("delta_t_1st", fc.delta_t_1st.unwrap_or(f64::NAN));
    out.note("t_1dif", fc.t_1dif.unwrap_or(f64::NAN));
    out.note("photon_t_1st", fc_photon.t_1st.unwrap_or(f64::NAN));
    if let (Some(t), Some(w)) = (fc.t_1st, fc.delta_t_1st) {
        out.note("quiet_until", quiet_window(t, w, cfg.quiet_fraction));
    }
    match first_click_crossover(&source, &photon, CROSSOVER_CAP)? {
        Some(c) => out.note(
            "crossover_vs_photon",
            format!("N = {:e} at t = {}", c.n, c.t),
        ),
        None => out.note(
            "crossover_vs_photon",
            format!("none up to N = {CROSSOVER_CAP:e}"),
        ),
    }
    if let Ok(Some(t)) = first_click_time(&sda.distribution, n) {
        out.note("sda_t_1st", t);
    }
    if cfg.mc_trials > 0 {
        let mc = monte_carlo_first_click(&spec, cfg.mc_trials, cfg.seed)?;
        let chi = mc.chi_square(&source, 50)?;
        out.note("mc_trials", cfg.mc_trials);
        out.note("mc_seed", cfg.seed);
        out.note("mc_no_click_fraction", mc.no_click_fraction());
        out.note("mc_chi_square", chi.statistic);
        out.note("mc_chi_square_dof", chi.dof);
        out.note("mc_p_value", chi.p_value);
        if !mc.clicks.is_empty() {
            out.note("mc_interquartile_range", mc.interquartile_range());
            let mut h = s.header("firstclick_samples", floor);
            h.push("seed", cfg.seed).push("no_click", mc.no_click);
            save_csv(
                &mut out,
                cfg,
                dir.join("firstclick_samples.csv"),
                &h,
                &[("t", &mc.clicks)],
            )?;
        }
    }
    save_summary(
        &mut out,
        dir.join("firstclick.txt"),
        &s.header("firstclick", floor),
    )?;
    Ok(out)
}

pub fn run_taumap(cfg: &RunConfig, dir: &Path) -> Result<RunOutput> {
    let s = Setup::new(cfg)?;
    let frozen = s.frozen()?;
    let map = tau_contour_map(
        &s.model,
        (cfg.taumap_re[0], cfg.taumap_re[1]),
        (cfg.taumap_im[0], cfg.taumap_im[1]),
        (cfg.taumap_resolution[0], cfg.taumap_resolution[1]),
    )?;
    let path = saddle_path_samples(&s.model, &frozen, 10.0, cfg.t_end)?;
    let mut out = RunOutput::default();
    let (mut re, mut im, mut val) = (Vec::new(), Vec::new(), Vec::new());
    for (j, &y) in map.im_axis.iter().enumerate() {
        for (i, &x) in map.re_axis.iter().enumerate() {
            re.push(x);
            im.push(y);
            val.push(map.values[j][i]);
        }
    }
    let h = s.header("taumap", 0.0);
    save_csv(
        &mut out,
        cfg,
        dir.join("taumap.csv"),
        &h,
        &[("re_p", &re), ("im_p", &im), ("re_tau", &val)],
    )?;
    let pt: Vec<f64> = path.iter().map(|p| p.0).collect();
    let pr: Vec<f64> = path.iter().map(|p| p.1.re).collect();
    let pi: Vec<f64> = path.iter().map(|p| p.1.im).collect();
    let mut hp = s.header("saddle_path", 0.0);
    hp.push("spacing", 10.0);
    save_csv(
        &mut out,
        cfg,
        dir.join("saddle_path.csv"),
        &hp,
        &[("t", &pt), ("re_p", &pr), ("im_p", &pi)],
    )?;
    let photon_time = s.distance().round();
    let levels: Vec<f64> = (-4..=4).map(|k| photon_time + 2.0 * k as f64).collect();
    let plot = ContourPlot {
        title: "Re τ(p) in the complex momentum plane".into(),
        x_label: "Re p [mc]".into(),
        y_label: "Im p [mc]".into(),
        x: map.re_axis.clone(),
        y: map.im_axis.clone(),
        values: map.values.clone(),
        levels,
        highlight: Some(photon_time),
        path: path.iter().map(|p| (p.1.re, p.1.im)).collect(),
    };
    save_svg(&mut out, cfg, dir.join("taumap.svg"), plot.to_svg())?;
    out.note("t_mp", frozen.t_mp);
    out.note("p_mp", frozen.p_mp);
    out.note("path_points", path.len());
    save_summary(&mut out, dir.join("taumap.txt"), &s.header("taumap", 0.0))?;
    Ok(out)
}

/// Checks every CSV in `dir` against its header. With a config, also
/// requires the recorded hash to match it.
pub fn verify(dir: &Path, cfg: Option<&RunConfig>) -> Result<Vec<crate::io::Verification>> {
    let hash = cfg.map(RunConfig::hash);
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .collect();
    files.sort();
    files
        .iter()
        .map(|p| crate::io::verify_csv(p, hash.as_deref()))
        .collect()
}
