//! Correlation of light-intensity fluctuations at the detector.
//!
//! [`intensity_correlation`] evaluates the strong-LO (order `E^2`) form of
//! `lambda(t, iota)`, which still carries terms oscillating at `2 Omega` in
//! the absolute time `t`. Averaging over `t` removes them and leaves the
//! stationary `lambda'(tau)`, available in two algebraically independent
//! representations. The all-orders Gaussian expansion lives in
//! [`expansion`].

pub mod expansion;

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::{gammas_to_quadrature_correlations, GaussianFieldState, HeterodyneConfig, QuadratureCorrelations};

pub use expansion::{wick_oracle, IntensityExpansion, ExpansionTerm};

/// Maximum quadrature step for time averaging, as a fraction of the
/// heterodyne period `2 pi / Omega`.
pub const AVERAGING_STEPS_PER_PERIOD: f64 = 50.0;

/// Minimum averaging time in heterodyne periods.
pub const MIN_AVERAGING_PERIODS: f64 = 10.0;

/// Order-`E^2` intensity correlation before the imaginary part is
/// discarded. The explicit complex-conjugate half is evaluated from
/// conjugated kernels and exponentials rather than by conjugating the first
/// half, so the imaginary part is a genuine check.
pub fn intensity_correlation_complex(state: &GaussianFieldState, cfg: &HeterodyneConfig, t: f64, iota: f64) -> Complex64 {
    let w = cfg.omega;
    let (phi1, phi2) = (cfg.phi1, cfg.phi2);
    let dphi = cfg.dphi();
    let e2 = cfg.amplitude * cfg.amplitude;
    let g11 = state.gamma11.eval(iota);
    let g20 = state.gamma20.eval(iota);
    let g11c = state.gamma11.eval(-iota);
    let g20c = state.gamma20.eval(iota).conj();
    let x = |phase: f64| Complex64::from_polar(1.0, phase);
    let slow = w * iota;
    let fast = w * (2.0 * t + iota);
    let sum_phase = phi1 + phi2;

    let direct = g11 * (x(slow) + x(-slow) + x(-fast - 2.0 * dphi) + x(fast + 2.0 * dphi))
        + g20 * (x(slow + sum_phase) + x(-slow + sum_phase) + x(-fast + 2.0 * phi1) + x(fast + 2.0 * phi2));
    // <dE-(t+iota) dE+(t)> = Gamma11(-iota)
    let conjugate = g11c * (x(-slow) + x(slow) + x(fast + 2.0 * dphi) + x(-fast - 2.0 * dphi))
        + g20c * (x(-slow - sum_phase) + x(slow - sum_phase) + x(fast - 2.0 * phi1) + x(-fast - 2.0 * phi2));
    (direct + conjugate) * e2
}

/// Strong-LO intensity-fluctuation correlation `lambda(t, iota)`.
pub fn intensity_correlation(state: &GaussianFieldState, cfg: &HeterodyneConfig, t: f64, iota: f64) -> f64 {
    intensity_correlation_complex(state, cfg, t, iota).re
}

/// `lambda(t, iota)` on a rectangular grid.
#[derive(Debug, Clone)]
pub struct IntensityCorrelation {
    pub t_grid: Vec<f64>,
    pub iota_grid: Vec<f64>,
    /// Row-major, `values[i][j]` at `(t_grid[i], iota_grid[j])`.
    pub values: Vec<Vec<f64>>,
    pub lo_config: HeterodyneConfig,
}

impl IntensityCorrelation {
    pub fn evaluate(state: &GaussianFieldState, cfg: &HeterodyneConfig, t_grid: &[f64], iota_grid: &[f64]) -> Self {
        let row = |&t: &f64| -> Vec<f64> {
            iota_grid
                .iter()
                .map(|&iota| intensity_correlation(state, cfg, t, iota))
                .collect()
        };
        #[cfg(feature = "parallel")]
        let values = {
            use rayon::prelude::*;
            t_grid.par_iter().map(row).collect()
        };
        #[cfg(not(feature = "parallel"))]
        let values = t_grid.iter().map(row).collect();
        IntensityCorrelation {
            t_grid: t_grid.to_vec(),
            iota_grid: iota_grid.to_vec(),
            values,
            lo_config: *cfg,
        }
    }

    /// Mean over the `t` grid for each `iota`.
    pub fn t_average(&self) -> Vec<f64> {
        let n = self.t_grid.len().max(1) as f64;
        (0..self.iota_grid.len())
            .map(|j| self.values.iter().map(|r| r[j]).sum::<f64>() / n)
            .collect()
    }
}

/// Time-averaged correlation
/// `lambda'(tau) = 2 E^2 cos(Omega tau) {Gamma11 + Gamma20 e^{i(phi1+phi2)} + c.c.}`.
pub fn lambda_prime(state: &GaussianFieldState, cfg: &HeterodyneConfig, tau: f64) -> f64 {
    let e2 = cfg.amplitude * cfg.amplitude;
    let z = state.gamma11.eval(tau) + state.gamma20.eval(tau) * Complex64::from_polar(1.0, cfg.phi1 + cfg.phi2);
    2.0 * e2 * (cfg.omega * tau).cos() * 2.0 * z.re
}

/// `lambda'(tau)` written with the quadrature correlations:
/// `E^2 cos(Omega tau) {G11 (1 + cos 2p) + G22 (1 - cos 2p) + (G12 + G21) sin 2p}`.
pub fn lambda_prime_from_quadrature(q: &QuadratureCorrelations, cfg: &HeterodyneConfig, tau: f64) -> f64 {
    let e2 = cfg.amplitude * cfg.amplitude;
    let (s2, c2) = (2.0 * cfg.phibar()).sin_cos();
    e2 * (cfg.omega * tau).cos()
        * (q.g11.eval(tau) * (1.0 + c2) + q.g22.eval(tau) * (1.0 - c2) + (q.g12.eval(tau) + q.g21.eval(tau)) * s2)
}

/// Quadrature-representation `lambda'` evaluated from the field kernels.
pub fn lambda_prime_quadrature_form(state: &GaussianFieldState, cfg: &HeterodyneConfig, tau: f64) -> f64 {
    lambda_prime_from_quadrature(&gammas_to_quadrature_correlations(state), cfg, tau)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeAverage {
    /// `(1/T) int_0^T lambda(t, iota) dt` by composite Simpson quadrature.
    pub quadrature: f64,
    /// Closed-form `lambda'(iota)`.
    pub closed_form: f64,
    /// Number of quadrature intervals used.
    pub intervals: usize,
}

impl TimeAverage {
    pub fn mismatch(&self) -> f64 {
        (self.quadrature - self.closed_form).abs()
    }
}

/// Averages `lambda(t, iota)` over `t in [0, T]` and compares with
/// `lambda'(iota)`.
pub fn time_average_reduce(state: &GaussianFieldState, cfg: &HeterodyneConfig, iota: f64, duration: f64) -> Result<TimeAverage> {
    let period = 2.0 * PI / cfg.omega;
    let required = MIN_AVERAGING_PERIODS * period;
    if !(duration >= required) {
        return Err(Error::InsufficientAveraging {
            t: duration,
            required,
        });
    }
    let max_step = period / AVERAGING_STEPS_PER_PERIOD;
    let mut n = (duration / max_step).ceil() as usize;
    if n % 2 == 1 {
        n += 1;
    }
    let h = duration / n as f64;
    let f = |k: usize| intensity_correlation(state, cfg, k as f64 * h, iota);
    let mut acc = f(0) + f(n);
    for k in 1..n {
        acc += if k % 2 == 1 { 4.0 } else { 2.0 } * f(k);
    }
    let integral = acc * h / 3.0;
    Ok(TimeAverage {
        quadrature: integral / duration,
        closed_form: lambda_prime(state, cfg, iota),
        intervals: n,
    })
}

/// Floor-normalised heterodyne spectrum obtained by numerically Fourier
/// transforming `lambda'` (flat detector):
/// `chi_norm(w) = 1 + eta / (2 E^2) int lambda'(tau) e^{i w tau} dtau`.
///
/// The integral is truncated at `|tau| <= tau_max` and evaluated with
/// composite Simpson on each half-axis so kernel cusps at `tau = 0` sit on
/// an endpoint.
pub fn spectrum_from_correlation(
    state: &GaussianFieldState,
    cfg: &HeterodyneConfig,
    eta: f64,
    omega: f64,
    tau_max: f64,
    intervals: usize,
) -> f64 {
    let n = intervals + intervals % 2;
    let h = tau_max / n as f64;
    let f = |k: usize| {
        let tau = k as f64 * h;
        let pos = lambda_prime(state, cfg, tau) * Complex64::from_polar(1.0, omega * tau);
        let neg = lambda_prime(state, cfg, -tau) * Complex64::from_polar(1.0, -omega * tau);
        pos + neg
    };
    let mut acc = f(0) + f(n);
    for k in 1..n {
        acc += f(k) * if k % 2 == 1 { 4.0 } else { 2.0 };
    }
    let ft = acc * h / 3.0;
    1.0 + eta * ft.re / (2.0 * cfg.amplitude * cfg.amplitude)
}
