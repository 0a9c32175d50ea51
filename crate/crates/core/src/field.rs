//! Physical parameters and quadrature algebra of the detected field.
//!
//! All quantities live in the frame rotating at the carrier frequency
//! `omega0`, which therefore never appears in the formulas below. Field
//! amplitudes are in sqrt(photons/s) and correlation kernels in photons/s.

use std::f64::consts::FRAC_PI_2;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Below-threshold degenerate parametric oscillator used as the squeezing
/// source.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OpoParams {
    /// Cavity damping rate, rad/s.
    pub gamma: f64,
    /// Effective pump rate, rad/s.
    pub epsilon: f64,
    /// Detector quantum-efficiency parameter.
    pub eta: f64,
}

impl OpoParams {
    pub fn new(gamma: f64, epsilon: f64, eta: f64) -> Result<Self> {
        let p = OpoParams {
            gamma,
            epsilon,
            eta,
        };
        p.validate()?;
        Ok(p)
    }

    /// Damping rate from mirror reflectivity and cavity length:
    /// `gamma = (1 - R) c / l`.
    pub fn from_cavity(reflectivity: f64, length_m: f64, epsilon: f64, eta: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&reflectivity) {
            return Err(invalid("reflectivity", "must lie in [0, 1)"));
        }
        if !(length_m > 0.0) {
            return Err(invalid("length", "must be positive"));
        }
        Self::new((1.0 - reflectivity) * SPEED_OF_LIGHT / length_m, epsilon, eta)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(invalid("gamma", "must be positive and finite"));
        }
        if !(self.epsilon >= 0.0 && self.epsilon <= self.gamma / 2.0) {
            return Err(invalid("epsilon", "must satisfy 0 <= epsilon <= gamma/2"));
        }
        if !(self.eta > 0.0 && self.eta <= 1.0) {
            return Err(invalid("eta", "must lie in (0, 1]"));
        }
        Ok(())
    }

    /// Decay rate of the squeezed quadrature, `gamma/2 + epsilon`.
    pub fn squeezed_rate(&self) -> f64 {
        self.gamma / 2.0 + self.epsilon
    }

    /// Decay rate of the anti-squeezed quadrature, `gamma/2 - epsilon`.
    pub fn antisqueezed_rate(&self) -> f64 {
        self.gamma / 2.0 - self.epsilon
    }

    pub fn at_threshold(&self) -> bool {
        self.antisqueezed_rate() <= 0.0
    }

    /// Time-domain quadrature correlation kernels whose Fourier transforms
    /// are the Lorentzians returned by [`opo_spectra`].
    pub fn quadrature_kernels(&self) -> Result<QuadratureCorrelations> {
        if self.at_threshold() && self.epsilon > 0.0 {
            return Err(Error::ThresholdDivergence { omega: 0.0 });
        }
        let coupling = self.epsilon * self.gamma / self.eta;
        let a = self.squeezed_rate();
        let b = self.antisqueezed_rate();
        let g11 = move |tau: f64| -coupling / a * (-a * tau.abs()).exp();
        let g22 = move |tau: f64| {
            if coupling == 0.0 {
                0.0
            } else {
                coupling / b * (-b * tau.abs()).exp()
            }
        };
        Ok(QuadratureCorrelations {
            g11: RealKernel::new(g11),
            g22: RealKernel::new(g22),
            g12: RealKernel::zero(),
            g21: RealKernel::zero(),
        })
    }
}

/// Dual local-oscillator geometry.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeterodyneConfig {
    /// Carrier optical frequency, rad/s. Bookkeeping only.
    #[serde(default)]
    pub omega0: f64,
    /// Heterodyne offset, rad/s.
    pub omega: f64,
    pub phi1: f64,
    pub phi2: f64,
    /// Quadrature reference phase, rad.
    #[serde(default)]
    pub beta: f64,
    /// LO amplitude, sqrt(photons/s).
    pub amplitude: f64,
}

impl HeterodyneConfig {
    pub fn new(omega: f64, phi1: f64, phi2: f64, beta: f64, amplitude: f64) -> Result<Self> {
        let cfg = HeterodyneConfig {
            omega0: 0.0,
            omega,
            phi1,
            phi2,
            beta,
            amplitude,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Configuration measuring quadrature `phibar` with zero LO phase
    /// difference.
    pub fn locked_at(omega: f64, phibar: f64, amplitude: f64) -> Result<Self> {
        Self::new(omega, phibar, phibar, 0.0, amplitude)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.omega > 0.0 && self.omega.is_finite()) {
            return Err(invalid("omega", "heterodyne offset must be positive"));
        }
        if !(self.amplitude > 0.0 && self.amplitude.is_finite()) {
            return Err(invalid("amplitude", "LO amplitude must be positive"));
        }
        for (name, v) in [("phi1", self.phi1), ("phi2", self.phi2), ("beta", self.beta)] {
            if !v.is_finite() {
                return Err(invalid(name, "must be finite"));
            }
        }
        Ok(())
    }

    /// Measured quadrature angle `(phi1 + phi2)/2 - beta`.
    pub fn phibar(&self) -> f64 {
        0.5 * (self.phi1 + self.phi2) - self.beta
    }

    /// LO phase difference `(phi2 - phi1)/2`.
    pub fn dphi(&self) -> f64 {
        0.5 * (self.phi2 - self.phi1)
    }

    /// Positive-frequency LO superposition at time `t`, rotating frame.
    pub fn lo_field(&self, t: f64) -> Complex64 {
        self.lo_field_modulated(t, 0.0)
    }

    /// LO superposition with a common extra phase (phase modulation or
    /// actuator offset) applied to both oscillators.
    pub fn lo_field_modulated(&self, t: f64, common_phase: f64) -> Complex64 {
        let e = self.amplitude;
        Complex64::from_polar(e, -self.omega * t + self.phi1 + common_phase)
            + Complex64::from_polar(e, self.omega * t + self.phi2 + common_phase)
    }

    /// Copy with both LO phases shifted by `delta` (changes `phibar`, keeps
    /// `dphi`).
    pub fn shifted_common(&self, delta: f64) -> Self {
        HeterodyneConfig {
            phi1: self.phi1 + delta,
            phi2: self.phi2 + delta,
            ..*self
        }
    }
}

/// Evaluable complex correlation kernel of the lag `tau`.
#[derive(Clone)]
pub struct Kernel(Arc<dyn Fn(f64) -> Complex64 + Send + Sync>);

impl Kernel {
    pub fn new(f: impl Fn(f64) -> Complex64 + Send + Sync + 'static) -> Self {
        Kernel(Arc::new(f))
    }

    pub fn zero() -> Self {
        Kernel::new(|_| Complex64::new(0.0, 0.0))
    }

    pub fn eval(&self, tau: f64) -> Complex64 {
        (self.0)(tau)
    }

    pub fn sample(&self, grid: &[f64]) -> Vec<Complex64> {
        grid.iter().map(|&t| self.eval(t)).collect()
    }
}

impl fmt::Debug for Kernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Kernel(<fn>, k(0) = {})", self.eval(0.0))
    }
}

/// Evaluable real kernel, used for the quadrature correlations.
#[derive(Clone)]
pub struct RealKernel(Arc<dyn Fn(f64) -> f64 + Send + Sync>);

impl RealKernel {
    pub fn new(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        RealKernel(Arc::new(f))
    }

    pub fn zero() -> Self {
        RealKernel::new(|_| 0.0)
    }

    pub fn eval(&self, tau: f64) -> f64 {
        (self.0)(tau)
    }

    pub fn sample(&self, grid: &[f64]) -> Vec<f64> {
        grid.iter().map(|&t| self.eval(t)).collect()
    }
}

impl fmt::Debug for RealKernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "RealKernel(<fn>, k(0) = {})", self.eval(0.0))
    }
}

/// Time-ordered, normally ordered quadrature correlations `Gamma_mn(tau)`,
/// m, n in {1, 2}.
#[derive(Debug, Clone)]
pub struct QuadratureCorrelations {
    pub g11: RealKernel,
    pub g22: RealKernel,
    pub g12: RealKernel,
    pub g21: RealKernel,
}

/// Mean field plus stationary Gaussian fluctuation kernels.
///
/// `gamma11(tau) = <dE-(t) dE+(t+tau)>` and `gamma20(tau) = <dE-(t) dE-(t+tau)>`,
/// both with the carrier phase removed.
#[derive(Debug, Clone)]
pub struct GaussianFieldState {
    pub mean_amplitude: Complex64,
    pub gamma11: Kernel,
    pub gamma20: Kernel,
    pub beta: f64,
}

impl GaussianFieldState {
    /// Coherent state: a mean field without normally ordered fluctuations.
    pub fn coherent(mean_amplitude: Complex64, beta: f64) -> Self {
        GaussianFieldState {
            mean_amplitude,
            gamma11: Kernel::zero(),
            gamma20: Kernel::zero(),
            beta,
        }
    }

    /// Squeezed vacuum emitted by the parametric oscillator, with the
    /// squeezed quadrature along the `beta` axis.
    pub fn squeezed_vacuum(params: &OpoParams, beta: f64) -> Result<Self> {
        params.validate()?;
        let q = params.quadrature_kernels()?;
        Ok(Self::from_quadrature(&q, beta, Complex64::new(0.0, 0.0)))
    }

    /// Builds the field kernels from quadrature correlations.
    pub fn from_quadrature(q: &QuadratureCorrelations, beta: f64, mean: Complex64) -> Self {
        let (q11, q22, q12, q21) = (q.g11.clone(), q.g22.clone(), q.g12.clone(), q.g21.clone());
        let gamma11 = {
            let (q11, q22, q12, q21) = (q11.clone(), q22.clone(), q12.clone(), q21.clone());
            Kernel::new(move |tau| {
                Complex64::new(
                    (q11.eval(tau) + q22.eval(tau)) / 4.0,
                    (q12.eval(tau) - q21.eval(tau)) / 4.0,
                )
            })
        };
        let rot = Complex64::from_polar(1.0, -2.0 * beta);
        let gamma20 = Kernel::new(move |tau| {
            rot * Complex64::new(
                (q11.eval(tau) - q22.eval(tau)) / 4.0,
                -(q12.eval(tau) + q21.eval(tau)) / 4.0,
            )
        });
        GaussianFieldState {
            mean_amplitude: mean,
            gamma11,
            gamma20,
            beta,
        }
    }

    pub fn with_mean(mut self, mean: Complex64) -> Self {
        self.mean_amplitude = mean;
        self
    }

    /// Normally ordered fluctuation photon flux `<dE- dE+>` at equal times.
    pub fn fluctuation_flux(&self) -> f64 {
        self.gamma11.eval(0.0).re
    }

    /// `<X>` and `<P>` for the quadratures referenced to `beta`.
    pub fn quadrature_means(&self) -> (f64, f64) {
        let z = self.mean_amplitude * Complex64::from_polar(1.0, -self.beta);
        (2.0 * z.re, 2.0 * z.im)
    }

    /// Angle maximising `<X(phibar)>`.
    pub fn bright_quadrature(&self) -> f64 {
        self.mean_amplitude.arg() - self.beta
    }
}

/// `<X(phibar)> = <X> cos(phibar) + <P> sin(phibar)`.
pub fn quadrature_mean(state: &GaussianFieldState, phibar: f64) -> f64 {
    let (x, p) = state.quadrature_means();
    x * phibar.cos() + p * phibar.sin()
}

/// `d<X(phibar)>/d(phibar)`.
pub fn quadrature_mean_slope(state: &GaussianFieldState, phibar: f64) -> f64 {
    quadrature_mean(state, phibar + FRAC_PI_2)
}

/// Inverts the linear relations between `(Gamma^(1,1), Gamma^(2,0))` and the
/// four quadrature correlations.
pub fn gammas_to_quadrature_correlations(state: &GaussianFieldState) -> QuadratureCorrelations {
    let g11 = state.gamma11.clone();
    let g20 = state.gamma20.clone();
    let rot = Complex64::from_polar(1.0, 2.0 * state.beta);
    // s = Gamma^(2,0) e^{2i beta}
    let parts = move |tau: f64| -> (Complex64, Complex64) { (g11.eval(tau), g20.eval(tau) * rot) };
    let p1 = parts.clone();
    let p2 = parts.clone();
    let p3 = parts.clone();
    let p4 = parts;
    QuadratureCorrelations {
        g11: RealKernel::new(move |tau| {
            let (a, s) = p1(tau);
            2.0 * (a.re + s.re)
        }),
        g22: RealKernel::new(move |tau| {
            let (a, s) = p2(tau);
            2.0 * (a.re - s.re)
        }),
        g12: RealKernel::new(move |tau| {
            let (a, s) = p3(tau);
            2.0 * (a.im - s.im)
        }),
        g21: RealKernel::new(move |tau| {
            let (a, s) = p4(tau);
            -2.0 * (a.im + s.im)
        }),
    }
}

pub type SpectrumFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Fourier transforms of the quadrature correlations (squeezing spectra).
#[derive(Clone)]
pub struct QuadratureSpectra {
    phi11: SpectrumFn,
    phi22: SpectrumFn,
    phi_cross: SpectrumFn,
}

impl QuadratureSpectra {
    pub fn new(
        phi11: impl Fn(f64) -> f64 + Send + Sync + 'static,
        phi22: impl Fn(f64) -> f64 + Send + Sync + 'static,
        phi12_plus_phi21: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        QuadratureSpectra {
            phi11: Arc::new(phi11),
            phi22: Arc::new(phi22),
            phi_cross: Arc::new(phi12_plus_phi21),
        }
    }

    /// Shot-noise-limited input: all spectra vanish.
    pub fn vacuum() -> Self {
        Self::new(|_| 0.0, |_| 0.0, |_| 0.0)
    }

    pub fn phi11(&self, omega: f64) -> f64 {
        (self.phi11)(omega)
    }

    pub fn phi22(&self, omega: f64) -> f64 {
        (self.phi22)(omega)
    }

    pub fn phi12_plus_phi21(&self, omega: f64) -> f64 {
        (self.phi_cross)(omega)
    }

    /// All three spectra at `omega`; a non-finite value means the source
    /// sits at threshold.
    pub fn evaluate(&self, omega: f64) -> Result<[f64; 3]> {
        let v = [self.phi11(omega), self.phi22(omega), self.phi12_plus_phi21(omega)];
        if v.iter().all(|x| x.is_finite()) {
            Ok(v)
        } else {
            Err(Error::ThresholdDivergence { omega })
        }
    }

    /// `w11 Phi11 + w22 Phi22 + wx (Phi12 + Phi21)` at `omega`. Branches
    /// with zero weight are not evaluated, so a divergent anti-squeezed
    /// spectrum at threshold only matters when it is actually observed.
    pub fn weighted(&self, omega: f64, w11: f64, w22: f64, wx: f64) -> Result<f64> {
        let mut acc = 0.0;
        for (w, f) in [(w11, &self.phi11), (w22, &self.phi22), (wx, &self.phi_cross)] {
            if w != 0.0 {
                let v = f(omega);
                if !v.is_finite() {
                    return Err(Error::ThresholdDivergence { omega });
                }
                acc += w * v;
            }
        }
        Ok(acc)
    }

    /// Spectrum of the single quadrature at angle `phibar`, in units where
    /// the shot-noise floor is subtracted:
    /// `Phi11 cos^2 + Phi22 sin^2 + (Phi12 + Phi21) sin cos`.
    pub fn quadrature(&self, omega: f64, phibar: f64) -> Result<f64> {
        let (s, c) = phibar.sin_cos();
        self.weighted(omega, c * c, s * s, s * c)
    }
}

impl fmt::Debug for QuadratureSpectra {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("QuadratureSpectra").finish_non_exhaustive()
    }
}

/// Squeezing spectra of the below-threshold parametric oscillator.
pub fn opo_spectra(params: &OpoParams) -> Result<QuadratureSpectra> {
    params.validate()?;
    let scale = 2.0 / params.eta * params.epsilon * params.gamma;
    let a = params.squeezed_rate();
    let b = params.antisqueezed_rate();
    Ok(QuadratureSpectra::new(
        move |w| -scale / (a * a + w * w),
        move |w| {
            if scale == 0.0 {
                0.0
            } else {
                scale / (b * b + w * w)
            }
        },
        |_| 0.0,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn quadrature_mean_examples() {
        let vac = GaussianFieldState::coherent(c(0.0, 0.0), 0.3);
        assert_eq!(quadrature_mean(&vac, 1.1), 0.0);

        let coh = GaussianFieldState::coherent(c(1.0, 0.0), 0.0);
        assert!((quadrature_mean(&coh, 0.0) - 2.0).abs() < 1e-15);
        assert!(quadrature_mean(&coh, PI / 2.0).abs() < 1e-15);
        assert!((quadrature_mean_slope(&coh, 0.3) + 2.0 * 0.3f64.sin()).abs() < 1e-15);
    }

    #[test]
    fn opo_spectra_examples() {
        let s = opo_spectra(&OpoParams::new(1.0, 0.5, 1.0).unwrap()).unwrap();
        assert!((s.phi11(0.0) + 1.0).abs() < 1e-15);
        assert!((s.phi11(1.0) + 0.5).abs() < 1e-15);
        let off = opo_spectra(&OpoParams::new(1.0, 0.0, 1.0).unwrap()).unwrap();
        for w in [-3.0, 0.0, 0.4, 10.0] {
            assert_eq!(off.phi11(w), 0.0);
            assert_eq!(off.phi22(w), 0.0);
        }
    }

    #[test]
    fn threshold_divergence_at_dc() {
        let s = opo_spectra(&OpoParams::new(1.0, 0.5, 1.0).unwrap()).unwrap();
        assert_eq!(
            s.evaluate(0.0).unwrap_err(),
            Error::ThresholdDivergence { omega: 0.0 }
        );
        assert!(s.evaluate(0.1).is_ok());
        // the squeezed quadrature alone stays finite
        assert_eq!(s.quadrature(0.0, 0.0).unwrap(), -1.0);
        assert!(s.quadrature(0.0, 0.3).is_err());
    }

    #[test]
    fn rejects_invalid_params() {
        assert!(OpoParams::new(0.0, 0.0, 1.0).is_err());
        assert!(OpoParams::new(1.0, 0.6, 1.0).is_err());
        assert!(OpoParams::new(1.0, 0.2, 0.0).is_err());
        assert!(OpoParams::new(1.0, 0.2, 1.2).is_err());
        assert!(HeterodyneConfig::new(0.0, 0.0, 0.0, 0.0, 1.0).is_err());
        assert!(HeterodyneConfig::new(1.0, 0.0, 0.0, 0.0, -1.0).is_err());
    }

    #[test]
    fn cavity_damping_rate() {
        let p = OpoParams::from_cavity(0.99, 0.5, 1e6, 0.9).unwrap();
        assert!((p.gamma - 0.01 * SPEED_OF_LIGHT / 0.5).abs() < 1e-6);
    }

    #[test]
    fn derived_phases() {
        let cfg = HeterodyneConfig::new(1.0, 0.2, 0.8, 0.1, 3.0).unwrap();
        assert!((cfg.phibar() - 0.4).abs() < 1e-15);
        assert!((cfg.dphi() - 0.3).abs() < 1e-15);
        let shifted = cfg.shifted_common(0.5);
        assert!((shifted.phibar() - 0.9).abs() < 1e-15);
        assert!((shifted.dphi() - 0.3).abs() < 1e-15);
    }

    #[test]
    fn inverse_without_phase_sensitive_part() {
        let state = GaussianFieldState {
            mean_amplitude: c(0.0, 0.0),
            gamma11: Kernel::new(|t| c((-t.abs()).exp(), 0.3 * t)),
            gamma20: Kernel::zero(),
            beta: 0.7,
        };
        let q = gammas_to_quadrature_correlations(&state);
        for t in [-1.0, 0.0, 0.5, 2.0] {
            let g = state.gamma11.eval(t);
            assert!((q.g11.eval(t) - 2.0 * g.re).abs() < 1e-15);
            assert!((q.g22.eval(t) - 2.0 * g.re).abs() < 1e-15);
            assert!((q.g12.eval(t) - 2.0 * g.im).abs() < 1e-15);
            assert!((q.g21.eval(t) + 2.0 * g.im).abs() < 1e-15);
        }
    }

    #[test]
    fn inverse_pure_antisqueezed_example() {
        let beta = 0.4;
        let state = GaussianFieldState {
            mean_amplitude: c(0.0, 0.0),
            gamma11: Kernel::new(|t| c((-t.abs()).exp(), 0.0)),
            gamma20: Kernel::new(move |t| {
                c(-(-t.abs()).exp(), 0.0) * Complex64::from_polar(1.0, -2.0 * beta)
            }),
            beta,
        };
        let q = gammas_to_quadrature_correlations(&state);
        for t in [-0.7, 0.0, 1.3] {
            assert!(q.g11.eval(t).abs() < 1e-15);
            assert!((q.g22.eval(t) - 4.0 * (-t.abs()).exp()).abs() < 1e-15);
            assert!(q.g12.eval(t).abs() < 1e-15);
            assert!(q.g21.eval(t).abs() < 1e-15);
        }
    }

    #[test]
    fn forward_inverse_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let coeffs: Vec<f64> = (0..8).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let beta = rng.gen_range(-PI..PI);
            let cf = coeffs.clone();
            let state = GaussianFieldState {
                mean_amplitude: c(0.0, 0.0),
                gamma11: Kernel::new(move |t| c(cf[0] * (-t * t).exp(), cf[1] * (cf[2] * t).sin())),
                gamma20: Kernel::new(move |t| c(coeffs[3] + coeffs[4] * t, coeffs[5] * (coeffs[6] * t).cos())),
                beta,
            };
            let q = gammas_to_quadrature_correlations(&state);
            let back = GaussianFieldState::from_quadrature(&q, beta, c(0.0, 0.0));
            for t in [-1.5, -0.1, 0.0, 0.3, 2.2] {
                let d11 = back.gamma11.eval(t) - state.gamma11.eval(t);
                let d20 = back.gamma20.eval(t) - state.gamma20.eval(t);
                let scale = 1.0 + state.gamma11.eval(t).norm() + state.gamma20.eval(t).norm();
                assert!(d11.norm() / scale < 1e-12);
                assert!(d20.norm() / scale < 1e-12);
            }
        }
    }

    #[test]
    fn opo_kernels_hermitian_and_even() {
        let p = OpoParams::new(1.0, 0.3, 0.8).unwrap();
        let state = GaussianFieldState::squeezed_vacuum(&p, 0.6).unwrap();
        for t in [0.1, 0.7, 3.0] {
            let d = state.gamma11.eval(-t) - state.gamma11.eval(t).conj();
            assert!(d.norm() < 1e-15);
            assert!((state.gamma20.eval(-t) - state.gamma20.eval(t)).norm() < 1e-15);
        }
        assert!(state.fluctuation_flux() > 0.0);
    }

    #[test]
    fn opo_kernels_at_threshold_rejected() {
        let p = OpoParams::new(1.0, 0.5, 1.0).unwrap();
        assert!(matches!(
            GaussianFieldState::squeezed_vacuum(&p, 0.0),
            Err(Error::ThresholdDivergence { .. })
        ));
    }

    #[test]
    fn uncertainty_product_on_grid() {
        for eps in [0.05, 0.2, 0.45, 0.499] {
            let p = OpoParams::new(1.0, eps, 0.7).unwrap();
            let s = opo_spectra(&p).unwrap();
            for k in 0..=400 {
                let w = -20.0 + 0.1 * k as f64;
                let prod = (1.0 + p.eta * s.phi11(w)) * (1.0 + p.eta * s.phi22(w));
                assert!(prod >= 1.0 - 1e-12, "eps {eps} w {w} prod {prod}");
            }
        }
    }

    #[test]
    fn spectra_even() {
        let s = opo_spectra(&OpoParams::new(2.0, 0.7, 0.9).unwrap()).unwrap();
        for w in [0.01, 0.5, 3.0, 100.0] {
            assert_eq!(s.phi11(w), s.phi11(-w));
            assert_eq!(s.phi22(w), s.phi22(-w));
        }
    }
}
