//! wasm-bindgen entry points for the browser demo in `www/`. Everything
//! crosses the boundary as `f64` slices; curves are interleaved
//! `[x0, y0, x1, y1, ...]`.

use std::f64::consts::PI;

use bhet_core::field::{opo_spectra, GaussianFieldState, HeterodyneConfig, OpoParams};
use bhet_core::lock::{error_slope, pi_gains, simulate, LockConfig};
use bhet_core::spectral::{heterodyne_spectrum_with_shift, DetectorModel};
use bhet_core::stochastic::{monte_carlo_heterodyne, MonteCarloRun, WelchConfig, Window};
use bhet_core::Complex64;
use wasm_bindgen::prelude::*;

/// Offset of the lock demo, rad/s.
pub const LOCK_OMEGA: f64 = 2.0 * PI * 1e6;
const MAX_POINTS: usize = 2000;

fn interleave(x: &[f64], y: &[f64]) -> Vec<f64> {
    x.iter().zip(y).flat_map(|(a, b)| [*a, *b]).collect()
}

/// Analytic normalised spectrum of a parametric oscillator with `gamma = 1`
/// on `points` frequencies spanning `-omega_max..omega_max`. `shift = 0`
/// gives the homodyne spectrum.
#[wasm_bindgen]
pub fn heterodyne_curve(
    epsilon: f64,
    eta: f64,
    shift: f64,
    phibar: f64,
    omega_max: f64,
    points: usize,
) -> Result<Vec<f64>, String> {
    if points < 2 {
        return Err("points must be at least 2".into());
    }
    let p = OpoParams::new(1.0, epsilon, eta).map_err(|e| e.to_string())?;
    let spectra = opo_spectra(&p).map_err(|e| e.to_string())?;
    let grid: Vec<f64> = (0..points)
        .map(|k| -omega_max + 2.0 * omega_max * k as f64 / (points - 1) as f64)
        .collect();
    let sd = heterodyne_spectrum_with_shift(&spectra, shift, phibar, eta, &grid).map_err(|e| e.to_string())?;
    Ok(interleave(&sd.omega, &sd.chi))
}

/// Monte-Carlo estimate of the same spectrum from `segments` averaged
/// 512-point periodograms.
#[wasm_bindgen]
pub fn montecarlo_overlay(
    epsilon: f64,
    eta: f64,
    shift: f64,
    phibar: f64,
    segments: usize,
    seed: u64,
) -> Result<Vec<f64>, String> {
    let p = OpoParams::new(1.0, epsilon, eta).map_err(|e| e.to_string())?;
    let mut cfg = HeterodyneConfig::locked_at(1.0, phibar, 1.0).map_err(|e| e.to_string())?;
    cfg.omega = shift;
    let welch = WelchConfig {
        segment_length: 512,
        overlap: 0.5,
        window: Window::Hann,
        n_segments_min: segments.max(1),
    };
    let resolution = if shift > 0.0 { (shift / 16.0).min(0.05) } else { 0.05 };
    let run = MonteCarloRun::with_resolution(resolution, welch);
    let sd = monte_carlo_heterodyne(&p, &cfg, &run, seed).map_err(|e| e.to_string())?;
    Ok(interleave(&sd.omega, &sd.chi))
}

/// Closed-loop transient for a unit coherent amplitude and a 1 MHz offset.
/// Returns `[t_us, phibar]` pairs, at most 2000 of them.
#[wasm_bindgen]
pub fn lock_transient(
    phibar0: f64,
    theta: f64,
    duration_ms: f64,
    shot_noise: bool,
    seed: u64,
) -> Result<Vec<f64>, String> {
    let state = GaussianFieldState::coherent(Complex64::new(1.0, 0.0), 0.0);
    let cfg = HeterodyneConfig::locked_at(LOCK_OMEGA, phibar0, 10.0).map_err(|e| e.to_string())?;
    let det = DetectorModel::default();
    let mut lock = LockConfig::tuned(LOCK_OMEGA, 1.0);
    lock.theta = theta;
    lock.duration = duration_ms * 1e-3;
    lock.shot_noise = shot_noise;
    lock.seed = seed;
    (lock.kp, lock.ki) = pi_gains(error_slope(&state, &cfg, &lock, &det), lock.lowpass_cutoff);
    let traj = simulate(&state, &cfg, &lock, &det).map_err(|e| e.to_string())?;
    let stride = traj.t.len().div_ceil(MAX_POINTS).max(1);
    Ok(traj
        .t
        .iter()
        .zip(&traj.phibar)
        .step_by(stride)
        .flat_map(|(t, p)| [t * 1e6, *p])
        .collect())
}
