//! Coherent-modulation phase lock of the measured quadrature.
//!
//! Both LOs carry a common phase modulation `theta sin(Omega' t)`. The beat
//! of the mean signal field against the modulation sidebands produces a
//! photocurrent component at `Omega - Omega'` whose amplitude is
//! proportional to `d<X(phibar)>/d(phibar)`. Mixing it down and low-pass
//! filtering gives an error signal that a PI controller feeds back onto the
//! common LO phase.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::field::{quadrature_mean_slope, GaussianFieldState, HeterodyneConfig};
use crate::spectral::DetectorModel;

/// `(J0, J1, residual)`. The residual is the mean square over one
/// modulation period of `e^{i theta sin x} - (J0 + 2 i J1 sin x)`.
pub fn bessel_truncation(theta: f64) -> (f64, f64, f64) {
    let j0 = bessel_j(0, theta);
    let j1 = bessel_j(1, theta);
    let n = 256;
    let mut acc = 0.0;
    for k in 0..n {
        let x = TAU * k as f64 / n as f64;
        let exact = Complex64::from_polar(1.0, theta * x.sin());
        let approx = Complex64::new(j0, 2.0 * j1 * x.sin());
        acc += (exact - approx).norm_sqr();
    }
    (j0, j1, acc / n as f64)
}

/// Bessel function of the first kind by its power series.
pub fn bessel_j(n: u32, x: f64) -> f64 {
    let half = 0.5 * x;
    let mut term = 1.0;
    for k in 1..=n {
        term *= half / k as f64;
    }
    let mut sum = term;
    let h2 = half * half;
    for k in 1..200 {
        term *= -h2 / (k as f64 * (k + n) as f64);
        sum += term;
        if term.abs() <= 1e-17 * sum.abs() {
            break;
        }
    }
    sum
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Disturbance {
    #[default]
    None,
    /// `amplitude sin(frequency t + phase)`, rad and rad/s.
    Sinusoid {
        amplitude: f64,
        frequency: f64,
        #[serde(default)]
        phase: f64,
    },
    /// Brownian phase with the given diffusion constant, rad^2/s.
    RandomWalk { diffusion: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LockConfig {
    /// Modulation frequency, rad/s.
    pub omega_prime: f64,
    /// Modulation depth, rad.
    pub theta: f64,
    pub demod_phase: f64,
    /// Single-pole demodulation low-pass, rad/s.
    pub lowpass_cutoff: f64,
    /// AC-coupling high-pass ahead of the mixer, rad/s.
    pub dc_block_cutoff: f64,
    pub kp: f64,
    /// 1/s.
    pub ki: f64,
    #[serde(default)]
    pub disturbance: Disturbance,
    /// s.
    pub dt: f64,
    /// s.
    pub duration: f64,
    /// Detector quantum efficiency of the lock photodiode.
    #[serde(default = "one")]
    pub eta: f64,
    /// Lock declared when `|phibar - lock point|` stays below this.
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    /// Trailing fraction of the run over which lock is judged.
    #[serde(default = "default_tail")]
    pub tail_fraction: f64,
    /// Adds shot noise of the mean photocurrent to every sample.
    #[serde(default)]
    pub shot_noise: bool,
    #[serde(default)]
    pub seed: u64,
}

fn one() -> f64 {
    1.0
}

fn default_tolerance() -> f64 {
    1e-3
}

fn default_tail() -> f64 {
    0.25
}

impl LockConfig {
    /// Reference settings for a 1 MHz heterodyne offset with a 0.8 MHz
    /// modulation. `slope` is the magnitude of the error-signal slope at
    /// the lock point, see [`error_slope`].
    pub fn tuned(omega: f64, slope: f64) -> Self {
        let omega_prime = 0.8 * omega;
        let delta = omega - omega_prime;
        let cutoff = delta / 10.0;
        let (kp, ki) = pi_gains(slope, cutoff);
        LockConfig {
            omega_prime,
            theta: 0.2,
            demod_phase: 0.0,
            lowpass_cutoff: cutoff,
            dc_block_cutoff: delta / 100.0,
            kp,
            ki,
            disturbance: Disturbance::None,
            dt: TAU / omega / 25.0,
            duration: 20e-3,
            eta: 1.0,
            tolerance: default_tolerance(),
            tail_fraction: default_tail(),
            shot_noise: false,
            seed: 0,
        }
    }

    pub fn delta(&self, cfg: &HeterodyneConfig) -> f64 {
        cfg.omega - self.omega_prime
    }

    pub fn validate(&self, cfg: &HeterodyneConfig) -> Result<()> {
        cfg.validate()?;
        if !(self.omega_prime > 0.0 && self.omega_prime < cfg.omega) {
            return Err(invalid("lock.omega_prime", "need 0 < omega_prime < omega"));
        }
        let ratio = 2.0 * cfg.omega / self.omega_prime;
        if (ratio - ratio.round()).abs() < 1e-9 {
            return Err(invalid(
                "lock.omega_prime",
                "2 omega / omega_prime is an integer; a higher modulation sideband lands on the demodulation frequency",
            ));
        }
        if !(self.theta >= 0.0) {
            return Err(invalid("lock.theta", "must be non-negative"));
        }
        let (_, _, residual) = bessel_truncation(self.theta);
        if residual >= 0.05 {
            return Err(invalid(
                "lock.theta",
                format!("two-sideband truncation residual {residual:.3} >= 0.05"),
            ));
        }
        if !(self.lowpass_cutoff > 0.0) {
            return Err(invalid("lock.lowpass_cutoff", "must be positive"));
        }
        if !(self.dc_block_cutoff >= 0.0) {
            return Err(invalid("lock.dc_block_cutoff", "must be non-negative"));
        }
        if !(self.dt > 0.0 && self.dt < TAU / (20.0 * cfg.omega)) {
            return Err(invalid("lock.dt", format!("need 0 < dt < {:e}", TAU / (20.0 * cfg.omega))));
        }
        if !(self.duration > self.dt) {
            return Err(invalid("lock.duration", "must exceed dt"));
        }
        if !(self.eta > 0.0 && self.eta <= 1.0) {
            return Err(invalid("lock.eta", "must lie in (0, 1]"));
        }
        if !(self.tolerance > 0.0) {
            return Err(invalid("lock.tolerance", "must be positive"));
        }
        if !(self.tail_fraction > 0.0 && self.tail_fraction < 1.0) {
            return Err(invalid("lock.tail_fraction", "must lie in (0, 1)"));
        }
        for (name, v) in [("lock.kp", self.kp), ("lock.ki", self.ki)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(invalid(name, "must be non-negative"));
            }
        }
        let delta = self.delta(cfg);
        if delta <= self.lowpass_cutoff {
            return Err(Error::DemodClash {
                difference: delta,
                cutoff: self.lowpass_cutoff,
            });
        }
        Ok(())
    }
}

/// PI gains for a loop slope `slope` behind a single-pole low-pass at
/// `cutoff`: integrator crossover two decades below the low-pass, PI zero
/// two decades above it. The proportional term is kept small because it
/// passes the residual RF ripple straight to the actuator.
pub fn pi_gains(slope: f64, cutoff: f64) -> (f64, f64) {
    let crossover = cutoff / 100.0;
    let ki = crossover / slope;
    (ki / (100.0 * cutoff), ki)
}

/// Open-loop transfer of the linearised loop at angular frequency `w`.
pub fn loop_gain(lock: &LockConfig, slope: f64, w: f64) -> Complex64 {
    let s = Complex64::new(0.0, w);
    slope * (lock.kp + lock.ki / s) / (1.0 + s / lock.lowpass_cutoff)
}

/// `|1 / (1 + L(iw))|`, the disturbance suppression at `w`.
pub fn sensitivity(lock: &LockConfig, slope: f64, w: f64) -> f64 {
    1.0 / (1.0 + loop_gain(lock, slope, w)).norm()
}

/// Phase margin in degrees of the linearised loop.
pub fn phase_margin(lock: &LockConfig, slope: f64) -> f64 {
    let mag = |w: f64| loop_gain(lock, slope, w).norm();
    let (mut lo, mut hi) = (1e-9f64, 1e15f64);
    for _ in 0..200 {
        let mid = (lo * hi).sqrt();
        if mag(mid) > 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    180.0 + loop_gain(lock, slope, lo).arg().to_degrees()
}

/// Magnitude of `d(error)/d(phibar)` at the lock point.
pub fn error_slope(state: &GaussianFieldState, cfg: &HeterodyneConfig, lock: &LockConfig, det: &DetectorModel) -> f64 {
    let (_, j1, _) = bessel_truncation(lock.theta);
    // curvature of <X> at its maximum equals the peak value 2|alpha|
    2.0 * lock.eta * det.charge() * cfg.amplitude * j1 * 2.0 * state.mean_amplitude.norm()
}

fn intensity(state: &GaussianFieldState, cfg: &HeterodyneConfig, lock: &LockConfig, t: f64, common: f64) -> f64 {
    let phase = lock.theta * (lock.omega_prime * t).sin() + common;
    let l = cfg.lo_field_modulated(t, phase);
    let a = state.mean_amplitude;
    l.norm_sqr() + 2.0 * (l.conj() * a).re + a.norm_sqr() + state.fluctuation_flux()
}

/// `eta q <I(t)>` with phase-modulated LOs, evaluated without any sideband
/// truncation.
pub fn mean_photocurrent(
    state: &GaussianFieldState,
    cfg: &HeterodyneConfig,
    lock: &LockConfig,
    det: &DetectorModel,
    t: f64,
) -> f64 {
    lock.eta * det.charge() * intensity(state, cfg, lock, t, 0.0)
}

/// Smallest exact common period of every tone in the mean photocurrent
/// and the demodulation reference.
fn common_period(cfg: &HeterodyneConfig, lock: &LockConfig) -> Result<f64> {
    let x = lock.omega_prime / cfg.omega;
    // continued-fraction convergents
    let (mut h0, mut h1, mut k0, mut k1) = (0u64, 1u64, 1u64, 0u64);
    let mut r = x;
    for _ in 0..40 {
        let a = r.floor();
        let (h2, k2) = (a as u64 * h1 + h0, a as u64 * k1 + k0);
        (h0, h1, k0, k1) = (h1, h2, k1, k2);
        if (h1 as f64 / k1 as f64 - x).abs() <= 1e-12 * x {
            return Ok(TAU * k1 as f64 / cfg.omega);
        }
        if k1 > 100_000 {
            break;
        }
        let frac = r - a;
        if frac == 0.0 {
            break;
        }
        r = 1.0 / frac;
    }
    Err(invalid("lock.omega_prime", "omega_prime / omega is not a ratio of small integers"))
}

fn projection_samples(period: f64, cfg: &HeterodyneConfig) -> usize {
    // at least 2048 points and 32 per cycle of the fastest tone
    let cycles = period * 3.0 * cfg.omega / TAU;
    2048.max((32.0 * cycles).ceil() as usize)
}

/// Complex Fourier coefficient `c` of the photocurrent at `Omega - Omega'`,
/// normalised so the component reads `Re(c e^{i (Omega - Omega') t})`.
pub fn delta_component(state: &GaussianFieldState, cfg: &HeterodyneConfig, lock: &LockConfig, det: &DetectorModel) -> Result<Complex64> {
    let period = common_period(cfg, lock)?;
    let n = projection_samples(period, cfg);
    let delta = lock.delta(cfg);
    let mut acc = Complex64::new(0.0, 0.0);
    for k in 0..n {
        let t = period * k as f64 / n as f64;
        acc += mean_photocurrent(state, cfg, lock, det, t) * Complex64::from_polar(1.0, -delta * t);
    }
    Ok(acc * 2.0 / n as f64)
}

/// Predicted component at `Omega - Omega'` from the two-sideband picture:
/// `-2 eta q E J1 (d<X>/dphibar) sin((Omega - Omega') t + dphi)`, returned as a
/// complex coefficient in the convention of [`delta_component`].
pub fn predicted_delta_component(state: &GaussianFieldState, cfg: &HeterodyneConfig, lock: &LockConfig, det: &DetectorModel) -> Complex64 {
    let (_, j1, _) = bessel_truncation(lock.theta);
    let amp = 2.0 * lock.eta * det.charge() * cfg.amplitude * j1 * quadrature_mean_slope(state, cfg.phibar());
    // -A sin(x + d) = Re(i A e^{i d} e^{i x})
    Complex64::new(0.0, amp) * Complex64::from_polar(1.0, cfg.dphi())
}

/// Demodulated DC error: `-2 <J(t) sin((Omega - Omega') t + demod_phase)>`,
/// the time average taken over an exact common period of all tones. Equals
/// `2 eta q E J1 (d<X>/dphibar) cos(demod_phase - dphi)`.
pub fn error_signal(state: &GaussianFieldState, cfg: &HeterodyneConfig, lock: &LockConfig, det: &DetectorModel) -> Result<f64> {
    let delta = lock.delta(cfg);
    if delta <= lock.lowpass_cutoff {
        return Err(Error::DemodClash {
            difference: delta,
            cutoff: lock.lowpass_cutoff,
        });
    }
    let period = common_period(cfg, lock)?;
    let n = projection_samples(period, cfg);
    let mut acc = 0.0;
    for k in 0..n {
        let t = period * k as f64 / n as f64;
        acc += mean_photocurrent(state, cfg, lock, det, t) * (delta * t + lock.demod_phase).sin();
    }
    Ok(-2.0 * acc / n as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LockTrajectory {
    pub t: Vec<f64>,
    pub phibar: Vec<f64>,
    pub error: Vec<f64>,
    pub locked: bool,
    pub lock_time: Option<f64>,
    pub lock_point: Option<f64>,
    pub tolerance: f64,
    /// RMS deviation from the lock point over the judged tail.
    pub residual_rms: Option<f64>,
    /// Largest deviation over the judged tail.
    pub residual_max: Option<f64>,
}

impl LockTrajectory {
    pub fn final_phibar(&self) -> f64 {
        *self.phibar.last().unwrap_or(&f64::NAN)
    }
}

/// Trajectories keep about this many samples.
pub const TRAJECTORY_POINTS: usize = 10_000;

fn nearest_lock_point(state: &GaussianFieldState, phibar: f64) -> Option<f64> {
    if state.mean_amplitude.norm() == 0.0 {
        return None;
    }
    let base = state.bright_quadrature();
    Some(base + TAU * ((phibar - base) / TAU).round())
}

struct DisturbanceSource {
    kind: Disturbance,
    rng: ChaCha8Rng,
    walk: f64,
}

impl DisturbanceSource {
    fn new(kind: Disturbance, seed: u64) -> Self {
        DisturbanceSource {
            kind,
            rng: ChaCha8Rng::seed_from_u64(seed ^ 0x6469_7374),
            walk: 0.0,
        }
    }

    fn step(&mut self, t: f64, dt: f64) -> f64 {
        match self.kind {
            Disturbance::None => 0.0,
            Disturbance::Sinusoid {
                amplitude,
                frequency,
                phase,
            } => amplitude * (frequency * t + phase).sin(),
            Disturbance::RandomWalk { diffusion } => {
                let z: f64 = StandardNormal.sample(&mut self.rng);
                let v = self.walk;
                self.walk += (2.0 * diffusion * dt).sqrt() * z;
                v
            }
        }
    }
}

/// Time-stepped loop. Always returns the trajectory; `locked` reports
/// whether it settled.
pub fn simulate(
    state: &GaussianFieldState,
    cfg: &HeterodyneConfig,
    lock: &LockConfig,
    det: &DetectorModel,
) -> Result<LockTrajectory> {
    lock.validate(cfg)?;
    let dt = lock.dt;
    let steps = (lock.duration / dt).round() as usize;
    let delta = lock.delta(cfg);
    let q = lock.eta * det.charge();
    let lp = 1.0 - (-lock.lowpass_cutoff * dt).exp();
    let hp = 1.0 / (1.0 + lock.dc_block_cutoff * dt);
    let phibar0 = cfg.phibar();
    let mut dist = DisturbanceSource::new(lock.disturbance, lock.seed);
    let mut noise_rng = ChaCha8Rng::seed_from_u64(lock.seed);

    let decimate = (steps / TRAJECTORY_POINTS).max(1);
    let mut out_t = Vec::with_capacity(steps / decimate + 1);
    let mut out_p = Vec::with_capacity(steps / decimate + 1);
    let mut out_e = Vec::with_capacity(steps / decimate + 1);
    let mut full = Vec::with_capacity(steps + 1);

    let (mut u, mut integral, mut err) = (0.0, 0.0, 0.0);
    let (mut prev_in, mut ac) = (f64::NAN, 0.0);
    for n in 0..=steps {
        let t = n as f64 * dt;
        let d = dist.step(t, dt);
        let common = u + d;
        let phibar = phibar0 + common;
        full.push(phibar);
        if n % decimate == 0 || n == steps {
            out_t.push(t);
            out_p.push(phibar);
            out_e.push(err);
        }

        let mean = q * intensity(state, cfg, lock, t, common);
        let mut j = mean;
        if lock.shot_noise {
            // two-sided shot-noise density q <J>, sampled at 1/dt
            let z: f64 = StandardNormal.sample(&mut noise_rng);
            j += (det.charge() * mean.max(0.0) / dt).sqrt() * z;
        }
        if prev_in.is_nan() {
            prev_in = j;
        }
        ac = hp * (ac + j - prev_in);
        prev_in = j;
        let mixed = -2.0 * ac * (delta * t + lock.demod_phase).sin();
        err += lp * (mixed - err);
        integral += err * dt;
        u = lock.kp * err + lock.ki * integral;
    }

    let tail_start = ((1.0 - lock.tail_fraction) * full.len() as f64) as usize;
    let lock_point = nearest_lock_point(state, *full.last().unwrap());
    let (mut locked, mut lock_time, mut residual_rms, mut residual_max) = (false, None, None, None);
    if let Some(lp) = lock_point {
        let tail = &full[tail_start..];
        let max = tail.iter().map(|p| (p - lp).abs()).fold(0.0, f64::max);
        let rms = (tail.iter().map(|p| (p - lp).powi(2)).sum::<f64>() / tail.len() as f64).sqrt();
        residual_max = Some(max);
        residual_rms = Some(rms);
        locked = max < lock.tolerance;
        if locked {
            let last_out = full.iter().rposition(|p| (p - lp).abs() >= lock.tolerance);
            lock_time = Some(last_out.map_or(0.0, |k| (k + 1) as f64 * dt));
        }
    }

    Ok(LockTrajectory {
        t: out_t,
        phibar: out_p,
        error: out_e,
        locked,
        lock_time,
        lock_point,
        tolerance: lock.tolerance,
        residual_rms,
        residual_max,
    })
}

/// As [`simulate`], failing with [`Error::LockFailure`] when the loop does
/// not settle within the run.
pub fn closed_loop_simulate(
    state: &GaussianFieldState,
    cfg: &HeterodyneConfig,
    lock: &LockConfig,
    det: &DetectorModel,
) -> Result<LockTrajectory> {
    let traj = simulate(state, cfg, lock, det)?;
    if traj.locked {
        Ok(traj)
    } else {
        let end = traj.final_phibar();
        let offset = traj.lock_point.map_or(end, |lp| end - lp);
        Err(Error::LockFailure {
            duration: lock.duration,
            offset,
        })
    }
}

/// Wraps an angle into `(-pi, pi]`.
pub fn wrap_angle(x: f64) -> f64 {
    let y = x.rem_euclid(TAU);
    if y > PI {
        y - TAU
    } else {
        y
    }
}
