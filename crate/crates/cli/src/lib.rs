//! Declarative experiment runner behind the `bhet` binary.
//!
//! An [`ExperimentConfig`] is read from TOML, completed with defaults,
//! hashed, and dispatched to the core routines. Every artifact embeds the
//! config hash and tool version and is written atomically.

use std::f64::consts::TAU;
use std::fs;
use std::path::{Path, PathBuf};

use bhet_core::correlation::{lambda_prime, lambda_prime_quadrature_form};
use bhet_core::field::{opo_spectra, GaussianFieldState, HeterodyneConfig, OpoParams};
use bhet_core::lock::{error_slope, pi_gains, simulate, Disturbance, LockConfig, LockTrajectory};
use bhet_core::report::{self, Metadata, Panel, Series};
use bhet_core::spectral::{
    homodyne_spectrum, opo_heterodyne_closed_form, opo_heterodyne_spectrum, symmetric_grid, DetectorModel, SpectralDensity,
};
use bhet_core::stochastic::{monte_carlo_ensemble, MonteCarloRun, WelchConfig};
use bhet_core::{Complex64, Error as CoreError};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Spectrum,
    Montecarlo,
    Correlation,
    Lock,
    Figure3,
}

impl Mode {
    pub fn as_str(&self) -> &'static str {
        match self {
            Mode::Spectrum => "spectrum",
            Mode::Montecarlo => "montecarlo",
            Mode::Correlation => "correlation",
            Mode::Lock => "lock",
            Mode::Figure3 => "figure3",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldSection {
    /// Mean amplitude `[re, im]` of the signal field.
    #[serde(default)]
    pub mean: [f64; 2],
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub omega_max: f64,
    pub points_per_side: usize,
    #[serde(default)]
    pub db: bool,
}

impl Default for GridSection {
    fn default() -> Self {
        GridSection {
            omega_max: 10.0,
            points_per_side: 500,
            db: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MonteCarloSection {
    /// Angular bin spacing of the estimate.
    pub resolution: f64,
    /// Independent runs averaged, seeded `seed, seed + 1, ...`.
    #[serde(default = "one_run")]
    pub runs: usize,
}

fn one_run() -> usize {
    1
}

impl Default for MonteCarloSection {
    fn default() -> Self {
        MonteCarloSection {
            resolution: 0.05,
            runs: 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorrelationSection {
    pub tau_max: f64,
    pub points: usize,
}

impl Default for CorrelationSection {
    fn default() -> Self {
        CorrelationSection {
            tau_max: 10.0,
            points: 201,
        }
    }
}

/// Overrides on top of the tuned loop defaults. Gains left out are derived
/// from the error-signal slope of the configured field.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LockSection {
    pub omega_prime: Option<f64>,
    pub theta: Option<f64>,
    pub demod_phase: Option<f64>,
    pub lowpass_cutoff: Option<f64>,
    pub dc_block_cutoff: Option<f64>,
    pub kp: Option<f64>,
    pub ki: Option<f64>,
    pub disturbance: Option<Disturbance>,
    pub dt: Option<f64>,
    pub duration: Option<f64>,
    pub eta: Option<f64>,
    pub tolerance: Option<f64>,
    pub tail_fraction: Option<f64>,
    pub shot_noise: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Figure3Section {
    /// Heterodyne offsets of the heterodyne panels, in units of `gamma`.
    pub shifts: Vec<f64>,
    /// Overlay Monte-Carlo estimates on every panel.
    #[serde(default)]
    pub montecarlo: bool,
}

impl Default for Figure3Section {
    fn default() -> Self {
        Figure3Section {
            shifts: vec![0.05, 0.5, 5.0],
            montecarlo: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub mode: Option<Mode>,
    #[serde(default)]
    pub seed: u64,
    pub output: Option<PathBuf>,
    pub source: Option<OpoParams>,
    pub field: Option<FieldSection>,
    pub heterodyne: Option<HeterodyneConfig>,
    pub grid: Option<GridSection>,
    pub welch: Option<WelchConfig>,
    pub montecarlo: Option<MonteCarloSection>,
    pub correlation: Option<CorrelationSection>,
    pub lock: Option<LockSection>,
    pub figure3: Option<Figure3Section>,
}

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("invalid config: {0}")]
    ConfigInvalid(String),
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl RunError {
    /// Process exit code: 2 configuration, 3 numerical or physical, 4 I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::ConfigInvalid(_) => 2,
            RunError::Io { .. } => 4,
            RunError::Core(e) => match e {
                CoreError::InvalidParameter { .. }
                | CoreError::NonCausalPulse { .. }
                | CoreError::InsufficientAveraging { .. }
                | CoreError::AliasRisk { .. }
                | CoreError::InsufficientData { .. }
                | CoreError::DemodClash { .. } => 2,
                CoreError::ThresholdDivergence { .. }
                | CoreError::NonPhysicalSpectrum { .. }
                | CoreError::LockFailure { .. } => 3,
            },
        }
    }
}

pub type Result<T> = std::result::Result<T, RunError>;

fn missing(section: &str, mode: Mode) -> RunError {
    RunError::ConfigInvalid(format!("[{section}] section is required for mode `{}`", mode.as_str()))
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| RunError::ConfigInvalid(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|source| RunError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml(&text).map_err(|e| match e {
            RunError::ConfigInvalid(m) => RunError::ConfigInvalid(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    /// Built-in configuration used when no file is given.
    pub fn default_for(mode: Mode) -> Self {
        let threshold = OpoParams {
            gamma: 1.0,
            epsilon: 0.5,
            eta: 1.0,
        };
        let mut cfg = ExperimentConfig {
            mode: Some(mode),
            seed: 1,
            output: None,
            source: Some(threshold),
            field: None,
            heterodyne: Some(HeterodyneConfig {
                omega0: 0.0,
                omega: 5.0,
                phi1: 0.0,
                phi2: 0.0,
                beta: 0.0,
                amplitude: 1.0,
            }),
            grid: None,
            welch: None,
            montecarlo: None,
            correlation: None,
            lock: None,
            figure3: None,
        };
        if mode == Mode::Correlation {
            // the anti-squeezed kernel does not decay at threshold
            cfg.source = Some(OpoParams {
                epsilon: 0.25,
                ..threshold
            });
        }
        if mode == Mode::Lock {
            cfg.source = Some(OpoParams {
                gamma: TAU * 5e6,
                epsilon: TAU * 1.25e6,
                eta: 1.0,
            });
            cfg.field = Some(FieldSection { mean: [1.0, 0.0] });
            cfg.heterodyne = Some(HeterodyneConfig {
                omega0: 0.0,
                omega: TAU * 1e6,
                phi1: 0.3,
                phi2: 0.3,
                beta: 0.0,
                amplitude: 10.0,
            });
        }
        cfg
    }

    /// Fills optional sections with defaults and checks that everything
    /// the mode needs is present and valid.
    pub fn resolve(mut self, mode: Mode) -> Result<Self> {
        self.mode = Some(mode);
        let source = self.source.ok_or_else(|| missing("source", mode))?;
        source.validate()?;
        if mode != Mode::Figure3 {
            let h = self.heterodyne.ok_or_else(|| missing("heterodyne", mode))?;
            h.validate()?;
        }
        self.field.get_or_insert(FieldSection { mean: [0.0, 0.0] });
        match mode {
            Mode::Spectrum => {
                self.grid.get_or_insert_with(GridSection::default);
            }
            Mode::Montecarlo => {
                self.grid.get_or_insert_with(GridSection::default);
                self.welch.get_or_insert_with(WelchConfig::default).validate()?;
                let mc = *self.montecarlo.get_or_insert_with(MonteCarloSection::default);
                if !(mc.resolution > 0.0) || mc.runs == 0 {
                    return Err(RunError::ConfigInvalid("montecarlo: resolution > 0 and runs >= 1 required".into()));
                }
            }
            Mode::Correlation => {
                let c = *self.correlation.get_or_insert_with(CorrelationSection::default);
                if !(c.tau_max > 0.0) || c.points < 2 {
                    return Err(RunError::ConfigInvalid("correlation: tau_max > 0 and points >= 2 required".into()));
                }
            }
            Mode::Lock => {
                self.lock.get_or_insert_with(LockSection::default);
                self.lock_config()?.validate(&self.heterodyne.unwrap())?;
            }
            Mode::Figure3 => {
                self.grid.get_or_insert_with(GridSection::default);
                let f = self.figure3.get_or_insert_with(Figure3Section::default);
                if f.shifts.iter().any(|s| !(*s > 0.0)) {
                    return Err(RunError::ConfigInvalid("figure3.shifts must be positive".into()));
                }
                if f.montecarlo {
                    self.welch.get_or_insert_with(WelchConfig::default).validate()?;
                }
            }
        }
        if let Some(g) = self.grid {
            if !(g.omega_max > 0.0) || g.points_per_side == 0 {
                return Err(RunError::ConfigInvalid("grid: omega_max > 0 and points_per_side >= 1 required".into()));
            }
        }
        Ok(self)
    }

    /// SHA-256 of the resolved configuration, excluding the output path.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.output = None;
        let json = serde_json::to_string(&c).expect("config serialises");
        hex::encode(Sha256::digest(json.as_bytes()))
    }

    fn state(&self) -> Result<GaussianFieldState> {
        let source = self.source.expect("resolved");
        let beta = self.heterodyne.map_or(0.0, |h| h.beta);
        let [re, im] = self.field.map_or([0.0, 0.0], |f| f.mean);
        Ok(GaussianFieldState::squeezed_vacuum(&source, beta)?.with_mean(Complex64::new(re, im)))
    }

    /// Loop settings: tuned defaults with the `[lock]` overrides applied.
    pub fn lock_config(&self) -> Result<LockConfig> {
        let h = self.heterodyne.ok_or_else(|| missing("heterodyne", Mode::Lock))?;
        let s = self.lock.unwrap_or_default();
        let mut lc = LockConfig::tuned(h.omega, 1.0);
        macro_rules! apply {
            ($($f:ident),*) => { $( if let Some(v) = s.$f { lc.$f = v; } )* };
        }
        apply!(omega_prime, theta, demod_phase, lowpass_cutoff, dc_block_cutoff, dt, duration, eta, tolerance, tail_fraction, shot_noise);
        if let Some(d) = s.disturbance {
            lc.disturbance = d;
        }
        let slope = error_slope(&self.state()?, &h, &lc, &DetectorModel::default());
        let (kp, ki) = if slope > 0.0 { pi_gains(slope, lc.lowpass_cutoff) } else { (0.0, 0.0) };
        lc.kp = s.kp.unwrap_or(kp);
        lc.ki = s.ki.unwrap_or(ki);
        lc.seed = self.seed;
        Ok(lc)
    }
}

/// Files produced by a run.
#[derive(Debug, Clone, Default)]
pub struct Artifacts {
    pub files: Vec<PathBuf>,
}

struct Writer<'a> {
    dir: &'a Path,
    meta: Metadata,
    out: Artifacts,
}

impl<'a> Writer<'a> {
    fn new(dir: &'a Path, cfg: &ExperimentConfig) -> Result<Self> {
        fs::create_dir_all(dir).map_err(|source| RunError::Io {
            path: dir.to_path_buf(),
            source,
        })?;
        let meta = Metadata::new(cfg.hash(), TOOL_VERSION)
            .with("mode", cfg.mode.map_or("", |m| m.as_str()))
            .with("seed", cfg.seed);
        Ok(Writer {
            dir,
            meta,
            out: Artifacts::default(),
        })
    }

    fn write(&mut self, name: &str, contents: &str) -> Result<()> {
        let path = self.dir.join(name);
        report::write_atomic(&path, contents.as_bytes()).map_err(|source| RunError::Io {
            path: path.clone(),
            source,
        })?;
        self.out.files.push(path);
        Ok(())
    }
}

fn spectrum_panel(title: &str, db: bool, series: Vec<Series>) -> Panel {
    Panel {
        title: title.into(),
        x_label: "omega".into(),
        y_label: "normalized noise".into(),
        series,
        db,
    }
}

fn mc_run(resolution: f64, welch: WelchConfig) -> MonteCarloRun {
    MonteCarloRun::with_resolution(resolution, welch)
}

fn seeds(cfg: &ExperimentConfig, runs: usize) -> Vec<u64> {
    (0..runs as u64).map(|k| cfg.seed.wrapping_add(k)).collect()
}

/// Runs the configured mode, writing into `out`.
pub fn run_mode(cfg: &ExperimentConfig, mode: Mode, out: &Path, svg: bool) -> Result<Artifacts> {
    let cfg = cfg.clone().resolve(mode)?;
    let mut w = Writer::new(out, &cfg)?;
    match mode {
        Mode::Spectrum => run_spectrum(&cfg, &mut w, svg)?,
        Mode::Montecarlo => run_montecarlo(&cfg, &mut w, svg)?,
        Mode::Correlation => run_correlation(&cfg, &mut w, svg)?,
        Mode::Lock => run_lock(&cfg, &mut w, svg)?,
        Mode::Figure3 => run_figure3_into(&cfg, &mut w)?,
    }
    Ok(w.out)
}

/// Four panel tables and one overlay plot.
pub fn run_figure3(cfg: &ExperimentConfig, out: &Path) -> Result<Artifacts> {
    run_mode(cfg, Mode::Figure3, out, true)
}

fn run_spectrum(cfg: &ExperimentConfig, w: &mut Writer, svg: bool) -> Result<()> {
    let (p, h, g) = (cfg.source.unwrap(), cfg.heterodyne.unwrap(), cfg.grid.unwrap());
    let grid = symmetric_grid(g.omega_max, g.points_per_side, &[h.omega]);
    let sd = opo_heterodyne_spectrum(&p, &h, &grid)?;
    let meta = w.meta.clone().with("omega_shift", h.omega).with("phibar", h.phibar());
    w.write("spectrum.csv", &report::spectrum_csv(&sd, &meta))?;
    if svg {
        let panel = spectrum_panel("heterodyne spectrum", g.db, vec![Series::line("analytic", &sd.omega, &sd.chi)]);
        w.write("spectrum.svg", &report::svg_plot(&[panel], 1))?;
    }
    Ok(())
}

fn run_montecarlo(cfg: &ExperimentConfig, w: &mut Writer, svg: bool) -> Result<()> {
    let (p, h) = (cfg.source.unwrap(), cfg.heterodyne.unwrap());
    let mc = cfg.montecarlo.unwrap();
    let run = mc_run(mc.resolution, cfg.welch.unwrap());
    let sd = monte_carlo_ensemble(&p, &h, &run, &seeds(cfg, mc.runs))?;
    let meta = w
        .meta
        .clone()
        .with("omega_shift", h.omega)
        .with("phibar", h.phibar())
        .with("sample_rate", run.sample_rate)
        .with("runs", mc.runs);
    w.write("montecarlo.csv", &report::spectrum_csv(&sd, &meta))?;
    if svg {
        let analytic = opo_heterodyne_spectrum(&p, &h, &sd.omega)?;
        let panel = spectrum_panel(
            "Monte-Carlo vs analytic",
            cfg.grid.unwrap().db,
            vec![
                Series::line("analytic", &analytic.omega, &analytic.chi),
                Series::points("Monte-Carlo", &sd.omega, &sd.chi),
            ],
        );
        w.write("montecarlo.svg", &report::svg_plot(&[panel], 1))?;
    }
    Ok(())
}

fn run_correlation(cfg: &ExperimentConfig, w: &mut Writer, svg: bool) -> Result<()> {
    let h = cfg.heterodyne.unwrap();
    let c = cfg.correlation.unwrap();
    let state = cfg.state()?;
    let tau: Vec<f64> = (0..c.points)
        .map(|k| -c.tau_max + 2.0 * c.tau_max * k as f64 / (c.points - 1) as f64)
        .collect();
    let direct: Vec<f64> = tau.iter().map(|&t| lambda_prime(&state, &h, t)).collect();
    let quad: Vec<f64> = tau.iter().map(|&t| lambda_prime_quadrature_form(&state, &h, t)).collect();
    let meta = w.meta.clone().with("omega_shift", h.omega).with("phibar", h.phibar());
    w.write("correlation.csv", &report::correlation_csv(&tau, &direct, &quad, &meta))?;
    if svg {
        let panel = Panel {
            title: "time-averaged intensity correlation".into(),
            x_label: "tau".into(),
            y_label: "lambda'".into(),
            series: vec![Series::line("lambda'", &tau, &direct)],
            db: false,
        };
        w.write("correlation.svg", &report::svg_plot(&[panel], 1))?;
    }
    Ok(())
}

#[derive(Debug, Serialize)]
struct LockSummary<'a> {
    schema: &'a str,
    tool_version: &'a str,
    config_hash: &'a str,
    locked: bool,
    lock_time: Option<f64>,
    lock_point: Option<f64>,
    final_phibar: f64,
    residual_rms: Option<f64>,
    residual_max: Option<f64>,
    tolerance: f64,
    duration: f64,
    kp: f64,
    ki: f64,
}

fn run_lock(cfg: &ExperimentConfig, w: &mut Writer, svg: bool) -> Result<()> {
    let h = cfg.heterodyne.unwrap();
    let lc = cfg.lock_config()?;
    let state = cfg.state()?;
    let traj: LockTrajectory = simulate(&state, &h, &lc, &DetectorModel::default())?;
    w.write("lock.csv", &report::lock_csv(&traj, &w.meta))?;
    let summary = LockSummary {
        schema: "bhet-lock-summary/1",
        tool_version: TOOL_VERSION,
        config_hash: &w.meta.config_hash,
        locked: traj.locked,
        lock_time: traj.lock_time,
        lock_point: traj.lock_point,
        final_phibar: traj.final_phibar(),
        residual_rms: traj.residual_rms,
        residual_max: traj.residual_max,
        tolerance: traj.tolerance,
        duration: lc.duration,
        kp: lc.kp,
        ki: lc.ki,
    };
    let json = serde_json::to_string_pretty(&summary).expect("summary serialises") + "\n";
    w.write("lock_summary.json", &json)?;
    if svg {
        let t_ms: Vec<f64> = traj.t.iter().map(|t| t * 1e3).collect();
        let panel = Panel {
            title: "phase lock".into(),
            x_label: "t (ms)".into(),
            y_label: "phibar (rad)".into(),
            series: vec![Series::line("phibar", &t_ms, &traj.phibar)],
            db: false,
        };
        w.write("lock.svg", &report::svg_plot(&[panel], 1))?;
    }
    if !traj.locked {
        let end = traj.final_phibar();
        return Err(CoreError::LockFailure {
            duration: lc.duration,
            offset: traj.lock_point.map_or(end, |lp| end - lp),
        }
        .into());
    }
    Ok(())
}

fn run_figure3_into(cfg: &ExperimentConfig, w: &mut Writer) -> Result<()> {
    let p = cfg.source.unwrap();
    let g = cfg.grid.unwrap();
    let f = cfg.figure3.clone().unwrap();
    let mut panels = Vec::new();
    let labels = ["a", "b", "c", "d", "e", "f", "g", "h"];
    if f.shifts.len() + 1 > labels.len() {
        return Err(RunError::ConfigInvalid(format!("figure3: at most {} shifts", labels.len() - 1)));
    }

    let mut tables: Vec<(String, SpectralDensity, Option<f64>)> = Vec::new();
    for (k, &shift) in f.shifts.iter().enumerate() {
        let omega = shift * p.gamma;
        let grid = symmetric_grid(g.omega_max * p.gamma, g.points_per_side, &[omega]);
        let sd = opo_heterodyne_closed_form(&p, omega, &grid)?;
        tables.push((labels[k].to_string(), sd, Some(omega)));
    }
    let grid = symmetric_grid(g.omega_max * p.gamma, g.points_per_side, &[]);
    let hom = homodyne_spectrum(&opo_spectra(&p)?, 0.0, p.eta, &grid)?;
    tables.push((labels[f.shifts.len()].to_string(), hom, None));

    for (label, sd, shift) in &tables {
        let meta = match shift {
            Some(s) => w.meta.clone().with("panel", label).with("omega_shift", s),
            None => w.meta.clone().with("panel", label).with("detection", "homodyne"),
        };
        w.write(&format!("figure3_{label}.csv"), &report::spectrum_csv(sd, &meta))?;
        let title = match shift {
            Some(s) => format!("({label}) heterodyne, Omega/gamma = {}", s / p.gamma),
            None => format!("({label}) homodyne"),
        };
        let mut series = vec![Series::line("analytic", &sd.omega, &sd.chi)];
        if f.montecarlo {
            let welch = cfg.welch.unwrap();
            let (h, resolution) = match shift {
                Some(s) => {
                    let h = HeterodyneConfig::locked_at(*s, 0.0, 1.0)?;
                    (h, (s / 16.0).min(0.05 * p.gamma))
                }
                None => {
                    let mut h = HeterodyneConfig::locked_at(1.0, 0.0, 1.0)?;
                    h.omega = 0.0;
                    (h, 0.05 * p.gamma)
                }
            };
            let mc = monte_carlo_ensemble(&p, &h, &mc_run(resolution, welch), &[cfg.seed])?;
            let keep: Vec<usize> = (0..mc.len())
                .filter(|&j| mc.omega[j].abs() <= g.omega_max * p.gamma)
                .collect();
            let x: Vec<f64> = keep.iter().map(|&j| mc.omega[j]).collect();
            let y: Vec<f64> = keep.iter().map(|&j| mc.chi[j]).collect();
            series.push(Series::points("Monte-Carlo", &x, &y));
            let meta = w.meta.clone().with("panel", label).with("sample_rate", mc_run(resolution, welch).sample_rate);
            w.write(&format!("figure3_{label}_montecarlo.csv"), &report::spectrum_csv(&mc, &meta))?;
        }
        panels.push(spectrum_panel(&title, g.db, series));
    }
    w.write("figure3.svg", &report::svg_plot(&panels, 2))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_resolve_for_every_mode() {
        for mode in [Mode::Spectrum, Mode::Montecarlo, Mode::Correlation, Mode::Lock, Mode::Figure3] {
            ExperimentConfig::default_for(mode).resolve(mode).unwrap();
        }
    }

    #[test]
    fn hash_ignores_output_and_tracks_seed() {
        let a = ExperimentConfig::default_for(Mode::Spectrum).resolve(Mode::Spectrum).unwrap();
        let mut b = a.clone();
        b.output = Some("elsewhere".into());
        assert_eq!(a.hash(), b.hash());
        b.seed += 1;
        assert_ne!(a.hash(), b.hash());
    }

    #[test]
    fn missing_section_is_config_error() {
        let cfg = ExperimentConfig::from_toml("[source]\ngamma = 1.0\nepsilon = 0.2\neta = 1.0\n").unwrap();
        let err = cfg.resolve(Mode::Spectrum).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().contains("[heterodyne]"));
    }

    #[test]
    fn unknown_key_is_rejected() {
        let err = ExperimentConfig::from_toml("sed = 3\n").unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().contains("sed"));
    }

    #[test]
    fn lock_gains_follow_field() {
        let cfg = ExperimentConfig::default_for(Mode::Lock);
        let lc = cfg.lock_config().unwrap();
        assert!(lc.ki > 0.0 && lc.kp > 0.0);
        let mut dark = cfg.clone();
        dark.field = Some(FieldSection { mean: [0.0, 0.0] });
        assert_eq!(dark.lock_config().unwrap().ki, 0.0);
    }
}
