//! Analytic photocurrent noise spectra for balanced heterodyne and
//! homodyne detection.
//!
//! Every result is floor-normalised: heterodyne spectra are divided by
//! `2 eta E^2 |K(w)|^2`, homodyne spectra by `eta E^2 |K(w)|^2`, so the
//! shot-noise level is exactly 1. Frequencies are two-sided, in rad/s.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::field::{opo_spectra, HeterodyneConfig, OpoParams, QuadratureSpectra};

/// Tolerance below zero before a normalised spectrum is declared
/// non-physical.
pub const PHYSICALITY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    HeterodyneFloor,
    HomodyneFloor,
}

impl Normalization {
    pub fn as_str(&self) -> &'static str {
        match self {
            Normalization::HeterodyneFloor => "heterodyne_floor",
            Normalization::HomodyneFloor => "homodyne_floor",
        }
    }
}

/// Parameters that produced a spectrum, carried along for provenance.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub opo: Option<OpoParams>,
    pub heterodyne: Option<HeterodyneConfig>,
    pub omega: Option<f64>,
    pub phibar: Option<f64>,
    pub eta: Option<f64>,
    /// Number of averaged segments for estimated spectra.
    pub segments: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralDensity {
    pub omega: Vec<f64>,
    pub chi: Vec<f64>,
    /// Per-bin standard error, present for estimated spectra.
    pub sigma: Option<Vec<f64>>,
    pub normalization: Normalization,
    pub snapshot: Snapshot,
}

impl SpectralDensity {
    pub fn len(&self) -> usize {
        self.omega.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omega.is_empty()
    }

    /// Minimum value and the frequency where it occurs.
    pub fn min(&self) -> (f64, f64) {
        self.omega
            .iter()
            .zip(&self.chi)
            .fold((f64::NAN, f64::INFINITY), |acc, (&w, &v)| {
                if v < acc.1 {
                    (w, v)
                } else {
                    acc
                }
            })
    }

    /// Index of the grid point closest to `omega`.
    pub fn nearest_index(&self, omega: f64) -> usize {
        let mut best = 0;
        for (i, &w) in self.omega.iter().enumerate() {
            if (w - omega).abs() < (self.omega[best] - omega).abs() {
                best = i;
            }
        }
        best
    }

    pub fn value_at(&self, omega: f64) -> f64 {
        self.chi[self.nearest_index(omega)]
    }

    /// Spectrum in dB relative to the shot-noise floor.
    pub fn to_db(&self) -> Vec<f64> {
        self.chi.iter().map(|&v| 10.0 * v.log10()).collect()
    }
}

/// Two-sided grid `-max..=max` with `points_per_side` steps on each side,
/// augmented with `anchors` and their negatives so those frequencies are
/// hit exactly.
pub fn symmetric_grid(max: f64, points_per_side: usize, anchors: &[f64]) -> Vec<f64> {
    let n = points_per_side.max(1);
    let step = max / n as f64;
    let mut grid: Vec<f64> = (0..=2 * n).map(|k| (k as f64 - n as f64) * step).collect();
    for &a in anchors {
        if a.abs() <= max {
            grid.push(a);
            grid.push(-a);
        }
    }
    grid.sort_by(|a, b| a.total_cmp(b));
    grid.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * max.max(1.0));
    // dedup may keep the non-exact neighbour; snap anchors back
    for &a in anchors {
        for g in grid.iter_mut() {
            if (*g - a).abs() <= 1e-12 * max.max(1.0) {
                *g = a;
            } else if (*g + a).abs() <= 1e-12 * max.max(1.0) {
                *g = -a;
            }
        }
    }
    grid
}

fn check_physical(omega: &[f64], chi: &[f64]) -> Result<()> {
    for (&w, &v) in omega.iter().zip(chi) {
        if !v.is_finite() || v < -PHYSICALITY_TOL {
            return Err(Error::NonPhysicalSpectrum { omega: w, value: v });
        }
    }
    Ok(())
}

fn check_eta(eta: f64) -> Result<()> {
    if eta > 0.0 && eta <= 1.0 {
        Ok(())
    } else {
        Err(invalid("eta", "must lie in (0, 1]"))
    }
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.iter().all(|w| w.is_finite()) {
        Ok(())
    } else {
        Err(invalid("omega_grid", "frequencies must be finite"))
    }
}

/// Normalised heterodyne spectrum at a single frequency for a general
/// quadrature angle.
pub fn heterodyne_point(spectra: &QuadratureSpectra, omega: f64, shift: f64, phibar: f64, eta: f64) -> Result<f64> {
    let (s2, c2) = (2.0 * phibar).sin_cos();
    let (w11, w22, wx) = (1.0 + c2, 1.0 - c2, s2);
    let upper = spectra.weighted(omega + shift, w11, w22, wx)?;
    let lower = spectra.weighted(omega - shift, w11, w22, wx)?;
    Ok(1.0 + eta / 4.0 * (upper + lower))
}

/// Floor-normalised photocurrent spectrum of balanced heterodyne detection.
pub fn heterodyne_spectrum(
    spectra: &QuadratureSpectra,
    cfg: &HeterodyneConfig,
    eta: f64,
    omega_grid: &[f64],
) -> Result<SpectralDensity> {
    check_eta(eta)?;
    check_grid(omega_grid)?;
    heterodyne_unchecked(spectra, cfg.omega, cfg.phibar(), eta, omega_grid).map(|mut sd| {
        sd.snapshot.heterodyne = Some(*cfg);
        sd
    })
}

/// As [`heterodyne_spectrum`] but with the offset given directly, which
/// also admits `shift = 0` (the homodyne limit).
pub fn heterodyne_spectrum_with_shift(
    spectra: &QuadratureSpectra,
    shift: f64,
    phibar: f64,
    eta: f64,
    omega_grid: &[f64],
) -> Result<SpectralDensity> {
    check_eta(eta)?;
    check_grid(omega_grid)?;
    heterodyne_unchecked(spectra, shift, phibar, eta, omega_grid)
}

fn heterodyne_unchecked(
    spectra: &QuadratureSpectra,
    shift: f64,
    phibar: f64,
    eta: f64,
    omega_grid: &[f64],
) -> Result<SpectralDensity> {
    let chi = omega_grid
        .iter()
        .map(|&w| heterodyne_point(spectra, w, shift, phibar, eta))
        .collect::<Result<Vec<_>>>()?;
    check_physical(omega_grid, &chi)?;
    Ok(SpectralDensity {
        omega: omega_grid.to_vec(),
        chi,
        sigma: None,
        normalization: Normalization::HeterodyneFloor,
        snapshot: Snapshot {
            omega: Some(shift),
            phibar: Some(phibar),
            eta: Some(eta),
            ..Snapshot::default()
        },
    })
}

/// Floor-normalised homodyne spectrum of the quadrature at `phibar`.
pub fn homodyne_spectrum(
    spectra: &QuadratureSpectra,
    phibar: f64,
    eta: f64,
    omega_grid: &[f64],
) -> Result<SpectralDensity> {
    check_eta(eta)?;
    check_grid(omega_grid)?;
    let chi = omega_grid
        .iter()
        .map(|&w| spectra.quadrature(w, phibar).map(|p| 1.0 + eta * p))
        .collect::<Result<Vec<_>>>()?;
    check_physical(omega_grid, &chi)?;
    Ok(SpectralDensity {
        omega: omega_grid.to_vec(),
        chi,
        sigma: None,
        normalization: Normalization::HomodyneFloor,
        snapshot: Snapshot {
            phibar: Some(phibar),
            eta: Some(eta),
            ..Snapshot::default()
        },
    })
}

/// Closed-form heterodyne spectrum of the parametric-oscillator squeezed
/// vacuum measured in its squeezed quadrature:
/// `1 - eps*g/(k^2 + (w+W)^2) - eps*g/(k^2 + (w-W)^2)`, `k = g/2 + eps`.
pub fn opo_heterodyne_closed_form(params: &OpoParams, shift: f64, omega_grid: &[f64]) -> Result<SpectralDensity> {
    params.validate()?;
    check_grid(omega_grid)?;
    let k2 = params.squeezed_rate().powi(2);
    let eg = params.epsilon * params.gamma;
    let chi = omega_grid
        .iter()
        .map(|&w| 1.0 - eg / (k2 + (w + shift).powi(2)) - eg / (k2 + (w - shift).powi(2)))
        .collect();
    Ok(SpectralDensity {
        omega: omega_grid.to_vec(),
        chi,
        sigma: None,
        normalization: Normalization::HeterodyneFloor,
        snapshot: Snapshot {
            opo: Some(*params),
            omega: Some(shift),
            phibar: Some(0.0),
            eta: Some(params.eta),
            ..Snapshot::default()
        },
    })
}

/// Heterodyne spectrum of the parametric oscillator evaluated through the
/// general quadrature formula.
pub fn opo_heterodyne_spectrum(params: &OpoParams, cfg: &HeterodyneConfig, omega_grid: &[f64]) -> Result<SpectralDensity> {
    let spectra = opo_spectra(params)?;
    let mut sd = heterodyne_spectrum(&spectra, cfg, params.eta, omega_grid)?;
    sd.snapshot.opo = Some(*params);
    Ok(sd)
}

/// Shape of the single-photoelectron current pulse.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Pulse {
    /// Instantaneous pulse; flat frequency response.
    Delta,
    /// `j(t) = (q/tau) exp(-t/tau)` for `t >= 0`.
    SinglePole { tau: f64 },
    /// Uniformly sampled pulse starting at `t0`.
    Sampled { t0: f64, dt: f64, values: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectorModel {
    pulse: Pulse,
    charge: f64,
}

impl DetectorModel {
    pub fn flat(charge: f64) -> Result<Self> {
        Self::check_charge(charge)?;
        Ok(DetectorModel {
            pulse: Pulse::Delta,
            charge,
        })
    }

    pub fn single_pole(charge: f64, tau: f64) -> Result<Self> {
        Self::check_charge(charge)?;
        if !(tau > 0.0) {
            return Err(invalid("tau", "pulse decay time must be positive"));
        }
        Ok(DetectorModel {
            pulse: Pulse::SinglePole { tau },
            charge,
        })
    }

    /// Pulse given as samples `values[k] = j(t0 + k dt)`. The charge is the
    /// trapezoid integral of the samples.
    pub fn sampled(t0: f64, dt: f64, values: Vec<f64>) -> Result<Self> {
        if !(dt > 0.0) || values.len() < 2 {
            return Err(invalid("pulse", "need dt > 0 and at least two samples"));
        }
        for (k, &v) in values.iter().enumerate() {
            let t = t0 + k as f64 * dt;
            if t < 0.0 && v != 0.0 {
                return Err(Error::NonCausalPulse { t });
            }
        }
        let charge = trapezoid(&values, dt);
        Self::check_charge(charge)?;
        Ok(DetectorModel {
            pulse: Pulse::Sampled { t0, dt, values },
            charge,
        })
    }

    fn check_charge(q: f64) -> Result<()> {
        if q > 0.0 && q.is_finite() {
            Ok(())
        } else {
            Err(invalid("charge", "must be positive"))
        }
    }

    pub fn charge(&self) -> f64 {
        self.charge
    }

    pub fn pulse(&self) -> &Pulse {
        &self.pulse
    }
}

impl Default for DetectorModel {
    fn default() -> Self {
        DetectorModel {
            pulse: Pulse::Delta,
            charge: 1.0,
        }
    }
}

fn trapezoid(values: &[f64], dt: f64) -> f64 {
    let n = values.len();
    dt * (values.iter().sum::<f64>() - 0.5 * (values[0] + values[n - 1]))
}

/// Detector frequency response `K(w) = int_0^inf j(t) e^{i w t} dt`.
pub fn detector_response(det: &DetectorModel, omega: f64) -> Complex64 {
    let q = det.charge;
    match &det.pulse {
        Pulse::Delta => Complex64::new(q, 0.0),
        Pulse::SinglePole { tau } => Complex64::new(q, 0.0) / Complex64::new(1.0, -omega * tau),
        Pulse::Sampled { t0, dt, values } => {
            let n = values.len();
            let mut acc = Complex64::new(0.0, 0.0);
            for (k, &v) in values.iter().enumerate() {
                let w = if k == 0 || k == n - 1 { 0.5 } else { 1.0 };
                let t = t0 + k as f64 * dt;
                acc += Complex64::from_polar(w * v, omega * t);
            }
            acc * *dt
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    fn opo() -> OpoParams {
        OpoParams::new(1.0, 0.5, 1.0).unwrap()
    }

    #[test]
    fn vacuum_gives_floor() {
        let cfg = HeterodyneConfig::locked_at(2.0, 0.7, 10.0).unwrap();
        let grid = symmetric_grid(10.0, 50, &[2.0]);
        let sd = heterodyne_spectrum(&QuadratureSpectra::vacuum(), &cfg, 0.8, &grid).unwrap();
        assert!(sd.chi.iter().all(|&v| v == 1.0));
        let hd = homodyne_spectrum(&QuadratureSpectra::vacuum(), 0.3, 0.8, &grid).unwrap();
        assert!(hd.chi.iter().all(|&v| v == 1.0));
    }

    #[test]
    fn heterodyne_values_from_closed_form() {
        let s = opo_spectra(&opo()).unwrap();
        let small = HeterodyneConfig::locked_at(0.05, 0.0, 1.0).unwrap();
        let v = heterodyne_spectrum(&s, &small, 1.0, &[0.0]).unwrap().chi[0];
        assert!((v - (1.0 - 1.0 / 1.0025)).abs() < 1e-15);
        assert!((v - 0.002494).abs() < 1e-6);

        let big = HeterodyneConfig::locked_at(5.0, 0.0, 1.0).unwrap();
        let grid = [5.0];
        let v = heterodyne_spectrum(&s, &big, 1.0, &grid).unwrap().chi[0];
        assert!((v - (0.5 - 0.5 / 101.0)).abs() < 1e-15);
        assert!((v - 0.49505).abs() < 1e-5);
    }

    #[test]
    fn antisqueezed_branch_at_quarter_turn() {
        let p = OpoParams::new(1.0, 0.25, 1.0).unwrap();
        let s = opo_spectra(&p).unwrap();
        let cfg = HeterodyneConfig::locked_at(0.5, FRAC_PI_2, 1.0).unwrap();
        let w = 0.3;
        let v = heterodyne_spectrum(&s, &cfg, 1.0, &[w]).unwrap().chi[0];
        let expect = 1.0 + 0.5 * (s.phi22(w + 0.5) + s.phi22(w - 0.5));
        assert!((v - expect).abs() < 1e-12);
        assert!(v > 1.0);
    }

    #[test]
    fn homodyne_perfect_squeezing_at_threshold() {
        let s = opo_spectra(&opo()).unwrap();
        let v = homodyne_spectrum(&s, 0.0, 1.0, &[0.0]).unwrap();
        assert!(v.chi[0].abs() < 1e-15);
    }

    #[test]
    fn homodyne_equals_zero_shift_heterodyne() {
        let p = OpoParams::new(1.0, 0.3, 0.9).unwrap();
        let s = opo_spectra(&p).unwrap();
        let grid = symmetric_grid(10.0, 500, &[]);
        for phibar in [0.0, 0.3, 1.2, FRAC_PI_2, 2.9] {
            let a = heterodyne_spectrum_with_shift(&s, 0.0, phibar, p.eta, &grid).unwrap();
            let b = homodyne_spectrum(&s, phibar, p.eta, &grid).unwrap();
            for (x, y) in a.chi.iter().zip(&b.chi) {
                assert!((x - y).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn closed_form_matches_general_formula() {
        for (eps, shift) in [(0.5, 0.05), (0.5, 0.5), (0.5, 5.0), (0.2, 1.3)] {
            let p = OpoParams::new(1.0, eps, 1.0).unwrap();
            let cfg = HeterodyneConfig::locked_at(shift, 0.0, 1.0).unwrap();
            let grid = symmetric_grid(8.0, 400, &[]);
                        let a = opo_heterodyne_closed_form(&p, shift, &grid).unwrap();
            let b = opo_heterodyne_spectrum(&p, &cfg, &grid).unwrap();
            for (x, y) in a.chi.iter().zip(&b.chi) {
                assert!((x - y).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn far_offset_returns_to_floor() {
        let v = opo_heterodyne_closed_form(&opo(), 1e6, &[0.0, 1.0]).unwrap();
        assert!(v.chi.iter().all(|&x| (x - 1.0).abs() < 1e-11));
    }

    #[test]
    fn rejects_inconsistent_spectra() {
        let bad = QuadratureSpectra::new(|_| -3.0, |_| 0.0, |_| 0.0);
        let cfg = HeterodyneConfig::locked_at(1.0, 0.0, 1.0).unwrap();
        assert!(matches!(
            heterodyne_spectrum(&bad, &cfg, 1.0, &[0.0]),
            Err(Error::NonPhysicalSpectrum { .. })
        ));
        assert!(matches!(
            homodyne_spectrum(&bad, 0.0, 1.0, &[0.0]),
            Err(Error::NonPhysicalSpectrum { .. })
        ));
    }

    #[test]
    fn grid_contains_anchors_exactly() {
        let g = symmetric_grid(10.0, 37, &[5.0, 0.05]);
        for a in [5.0, -5.0, 0.05, -0.05, 0.0] {
            assert!(g.contains(&a), "{a}");
        }
        for (x, y) in g.iter().zip(g.iter().rev()) {
            assert!((x + y).abs() < 1e-12);
        }
    }

    #[test]
    fn flat_detector_response() {
        let d = DetectorModel::flat(1.6e-19).unwrap();
        for w in [0.0, 1.0, 1e9] {
            assert_eq!(detector_response(&d, w), Complex64::new(1.6e-19, 0.0));
        }
    }

    #[test]
    fn single_pole_response_matches_quadrature() {
        let (q, tau) = (2.0, 0.3);
        let analytic = DetectorModel::single_pole(q, tau).unwrap();
        let dt = tau / 2000.0;
        let values: Vec<f64> = (0..(60.0 * tau / dt) as usize)
            .map(|k| q / tau * (-(k as f64) * dt / tau).exp())
            .collect();
        let numeric = DetectorModel::sampled(0.0, dt, values).unwrap();
        assert_eq!(detector_response(&analytic, 0.0).re, q);
        assert_eq!(detector_response(&numeric, 0.0).re, numeric.charge());
        for w in [0.0, 0.5, 2.0, 10.0, 40.0] {
            let a = detector_response(&analytic, w);
            let n = detector_response(&numeric, w);
            assert!((a - n).norm() < 1e-5 * q, "w {w}: {a} vs {n}");
        }
        let mut last = f64::INFINITY;
        for k in 0..200 {
            let m = detector_response(&analytic, k as f64 * 0.5).norm();
            assert!(m <= last);
            last = m;
        }
    }

    #[test]
    fn non_causal_pulse_rejected() {
        let err = DetectorModel::sampled(-0.2, 0.1, vec![0.0, 1.0, 1.0, 0.5]).unwrap_err();
        assert!(matches!(err, Error::NonCausalPulse { .. }));
        assert!(DetectorModel::sampled(-0.2, 0.1, vec![0.0, 0.0, 1.0, 0.5]).is_ok());
    }

    #[test]
    fn symmetric_in_omega() {
        let s = opo_spectra(&OpoParams::new(1.0, 0.3, 1.0).unwrap()).unwrap();
        let cfg = HeterodyneConfig::locked_at(0.7, 0.4, 1.0).unwrap();
        for w in [0.1, 0.9, 3.3] {
            let a = heterodyne_spectrum(&s, &cfg, 1.0, &[w, -w]).unwrap();
            assert!((a.chi[0] - a.chi[1]).abs() < 1e-14);
        }
    }
}
