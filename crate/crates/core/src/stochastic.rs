//! Monte-Carlo path: Gaussian quadrature noise with a prescribed spectrum,
//! the heterodyne photocurrent it produces, and averaged-periodogram
//! estimates of that photocurrent's spectrum.
//!
//! Spectra are floor-normalised and two-sided in angular frequency. A
//! unit-variance white series has PSD 1 everywhere.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::field::{opo_spectra, HeterodyneConfig, OpoParams};
use crate::spectral::{Normalization, Snapshot, SpectralDensity, PHYSICALITY_TOL};

/// Fraction of the sampling rate (in cycles) above which the heterodyne
/// offset is considered too close to Nyquist.
pub const ALIAS_LIMIT: f64 = 0.4;

#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    /// Hz.
    pub sample_rate: f64,
    pub samples: Vec<f64>,
    pub seed: u64,
}

impl TimeSeries {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate
    }

    pub fn time(&self, n: usize) -> f64 {
        n as f64 / self.sample_rate
    }

    pub fn mean_square(&self) -> f64 {
        self.samples.iter().map(|x| x * x).sum::<f64>() / self.samples.len() as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Window {
    Hann,
    Rectangular,
}

impl Window {
    pub fn coefficients(&self, n: usize) -> Vec<f64> {
        match self {
            // periodic Hann
            Window::Hann => (0..n)
                .map(|k| 0.5 - 0.5 * (2.0 * PI * k as f64 / n as f64).cos())
                .collect(),
            Window::Rectangular => vec![1.0; n],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WelchConfig {
    pub segment_length: usize,
    pub overlap: f64,
    pub window: Window,
    pub n_segments_min: usize,
}

impl Default for WelchConfig {
    fn default() -> Self {
        WelchConfig {
            segment_length: 1024,
            overlap: 0.5,
            window: Window::Hann,
            n_segments_min: 400,
        }
    }
}

impl WelchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.segment_length < 8 {
            return Err(invalid("welch.segment_length", format!("{} < 8", self.segment_length)));
        }
        if !(0.0..1.0).contains(&self.overlap) {
            return Err(invalid("welch.overlap", format!("{} not in [0, 1)", self.overlap)));
        }
        if self.n_segments_min == 0 {
            return Err(invalid("welch.n_segments_min", "must be at least 1"));
        }
        Ok(())
    }

    pub fn step(&self) -> usize {
        ((self.segment_length as f64 * (1.0 - self.overlap)).round() as usize).max(1)
    }

    pub fn segments_in(&self, n: usize) -> usize {
        if n < self.segment_length {
            0
        } else {
            (n - self.segment_length) / self.step() + 1
        }
    }

    /// Samples needed for exactly `n_segments_min` segments.
    pub fn required_samples(&self) -> usize {
        self.segment_length + (self.n_segments_min - 1) * self.step()
    }

    /// Variance of the averaged estimate relative to a single periodogram
    /// for white input, divided into `n` segments. Accounts for the
    /// correlation between overlapping windowed segments.
    pub fn variance_factor(&self, n: usize) -> f64 {
        let w = self.window.coefficients(self.segment_length);
        let norm: f64 = w.iter().map(|x| x * x).sum();
        let step = self.step();
        let mut acc = 1.0;
        let mut lag = 1;
        while lag * step < self.segment_length && lag < n {
            let s = lag * step;
            let c: f64 = (0..self.segment_length - s).map(|k| w[k] * w[k + s]).sum::<f64>() / norm;
            acc += 2.0 * (1.0 - lag as f64 / n as f64) * c * c;
            lag += 1;
        }
        acc / n as f64
    }
}

/// Run parameters of one Monte-Carlo spectrum estimate.
///
/// The modulated photocurrent is cyclostationary. Its segment-averaged
/// periodogram is only free of a beat term between the `+Omega` and
/// `-Omega` images when `Omega` spans many bins, so keep the bin spacing
/// well below `Omega / 10`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MonteCarloRun {
    /// Hz.
    pub sample_rate: f64,
    pub welch: WelchConfig,
}

impl MonteCarloRun {
    /// Sample rate giving an angular bin spacing `resolution` for the
    /// configured segment length.
    pub fn with_resolution(resolution: f64, welch: WelchConfig) -> Self {
        MonteCarloRun {
            sample_rate: resolution * welch.segment_length as f64 / (2.0 * PI),
            welch,
        }
    }

    pub fn resolution(&self) -> f64 {
        2.0 * PI * self.sample_rate / self.welch.segment_length as f64
    }
}

/// Angular frequency of FFT bin `k` of an `n`-point transform, folded into
/// `[-pi fs, pi fs)`.
fn bin_omega(k: usize, n: usize, fs: f64) -> f64 {
    let signed = if 2 * k >= n { k as f64 - n as f64 } else { k as f64 };
    2.0 * PI * fs * signed / n as f64
}

/// Stationary real Gaussian series whose two-sided PSD is `spectrum`.
pub fn synthesize_quadrature(
    spectrum: impl Fn(f64) -> f64,
    n: usize,
    sample_rate: f64,
    seed: u64,
) -> Result<TimeSeries> {
    if n < 2 {
        return Err(invalid("n", format!("{n} < 2")));
    }
    if !(sample_rate > 0.0 && sample_rate.is_finite()) {
        return Err(invalid("sample_rate", format!("{sample_rate}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut normal = || -> f64 { StandardNormal.sample(&mut rng) };
    let nf = n as f64;
    let amp = |k: usize| -> Result<f64> {
        let omega = bin_omega(k, n, sample_rate);
        let s = spectrum(omega);
        if !(s >= -PHYSICALITY_TOL) {
            return Err(Error::NonPhysicalSpectrum { omega, value: s });
        }
        Ok((nf * s.max(0.0)).sqrt())
    };

    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    buf[0] = Complex64::new(amp(0)? * normal(), 0.0);
    let half = n / 2;
    for k in 1..=half {
        if 2 * k == n {
            buf[k] = Complex64::new(amp(k)? * normal(), 0.0);
        } else {
            let a = amp(k)? / 2f64.sqrt();
            let z = Complex64::new(a * normal(), a * normal());
            buf[k] = z;
            buf[n - k] = z.conj();
        }
    }
    FftPlanner::new().plan_fft_inverse(n).process(&mut buf);
    Ok(TimeSeries {
        sample_rate,
        samples: buf.iter().map(|z| z.re / nf).collect(),
        seed,
    })
}

/// `y(t) = sqrt(2) cos(Omega t + dphi) x(t)`.
pub fn synthesize_photocurrent(x: &TimeSeries, omega: f64, dphi: f64) -> Result<TimeSeries> {
    if !(omega >= 0.0 && omega.is_finite()) {
        return Err(invalid("omega", format!("{omega}")));
    }
    if omega >= ALIAS_LIMIT * 2.0 * PI * x.sample_rate {
        return Err(Error::AliasRisk {
            omega,
            sample_rate: x.sample_rate,
        });
    }
    let samples = x
        .samples
        .iter()
        .enumerate()
        .map(|(n, &v)| 2f64.sqrt() * (omega * x.time(n) + dphi).cos() * v)
        .collect();
    Ok(TimeSeries {
        sample_rate: x.sample_rate,
        samples,
        seed: x.seed,
    })
}

/// Averaged-periodogram PSD estimate. The returned grid runs over
/// `[-pi fs, pi fs)` in steps of `2 pi fs / segment_length`.
pub fn welch_psd(y: &TimeSeries, cfg: &WelchConfig) -> Result<SpectralDensity> {
    cfg.validate()?;
    let l = cfg.segment_length;
    let segments = cfg.segments_in(y.len());
    if segments < cfg.n_segments_min {
        return Err(Error::InsufficientData {
            needed: cfg.required_samples(),
            available: y.len(),
        });
    }
    let w = cfg.window.coefficients(l);
    let norm: f64 = w.iter().map(|x| x * x).sum();
    let fft = FftPlanner::new().plan_fft_forward(l);
    let mut acc = vec![0.0; l];
    let mut buf = vec![Complex64::new(0.0, 0.0); l];
    let step = cfg.step();
    for s in 0..segments {
        let seg = &y.samples[s * step..s * step + l];
        for (b, (&v, &wk)) in buf.iter_mut().zip(seg.iter().zip(&w)) {
            *b = Complex64::new(v * wk, 0.0);
        }
        fft.process(&mut buf);
        for (a, z) in acc.iter_mut().zip(&buf) {
            *a += z.norm_sqr();
        }
    }
    let scale = 1.0 / (norm * segments as f64);
    // reorder so the grid is increasing
    let order: Vec<usize> = (l - l / 2..l).chain(0..l - l / 2).collect();
    let omega: Vec<f64> = order.iter().map(|&k| bin_omega(k, l, y.sample_rate)).collect();
    let chi: Vec<f64> = order.iter().map(|&k| acc[k] * scale).collect();
    let rel = cfg.variance_factor(segments).sqrt();
    let sigma = chi.iter().map(|c| c * rel).collect();
    Ok(SpectralDensity {
        omega,
        chi,
        sigma: Some(sigma),
        normalization: Normalization::HomodyneFloor,
        snapshot: Snapshot {
            segments: Some(segments),
            ..Snapshot::default()
        },
    })
}

/// Power in the bins with `lo <= omega <= hi`, in units of mean-square
/// amplitude. Summing every bin returns the mean square of the series.
pub fn band_power(sd: &SpectralDensity, lo: f64, hi: f64) -> f64 {
    let n = sd.len() as f64;
    sd.omega
        .iter()
        .zip(&sd.chi)
        .filter(|(w, _)| (lo..=hi).contains(*w))
        .map(|(_, c)| c / n)
        .sum()
}

/// Bins that take part in oracle comparisons: those further than one bin
/// spacing from `+-shift`. With `shift = 0` every bin is kept.
pub fn comparison_mask(sd: &SpectralDensity, shift: f64) -> Vec<bool> {
    let spacing = if sd.len() > 1 { sd.omega[1] - sd.omega[0] } else { 0.0 };
    sd.omega
        .iter()
        .map(|&w| shift == 0.0 || ((w.abs() - shift).abs() > spacing * (1.0 + 1e-9)))
        .collect()
}

/// Homodyne-normalised spectrum `1 + eta Phi_phibar(omega)` of the measured
/// quadrature, the input of the synthesis stage.
pub fn measured_quadrature_spectrum(params: &OpoParams, phibar: f64) -> Result<impl Fn(f64) -> f64> {
    let spectra = opo_spectra(params)?;
    let eta = params.eta;
    // probe the grid-independent failure modes once
    spectra.quadrature(1.0, phibar)?;
    Ok(move |w: f64| match spectra.quadrature(w, phibar) {
        Ok(p) => 1.0 + eta * p,
        Err(_) => f64::NAN,
    })
}

/// Full Monte-Carlo heterodyne pipeline. With `cfg.omega == 0` the
/// modulation stage is skipped and the homodyne spectrum is estimated.
pub fn monte_carlo_heterodyne(params: &OpoParams, cfg: &HeterodyneConfig, run: &MonteCarloRun, seed: u64) -> Result<SpectralDensity> {
    params.validate()?;
    run.welch.validate()?;
    let s = measured_quadrature_spectrum(params, cfg.phibar())?;
    let x = synthesize_quadrature(&s, run.welch.required_samples(), run.sample_rate, seed)?;
    let (y, normalization) = if cfg.omega == 0.0 {
        (x, Normalization::HomodyneFloor)
    } else {
        cfg.validate()?;
        (synthesize_photocurrent(&x, cfg.omega, cfg.dphi())?, Normalization::HeterodyneFloor)
    };
    let mut sd = welch_psd(&y, &run.welch)?;
    sd.normalization = normalization;
    sd.snapshot.opo = Some(*params);
    sd.snapshot.heterodyne = Some(*cfg);
    sd.snapshot.omega = Some(cfg.omega);
    sd.snapshot.phibar = Some(cfg.phibar());
    sd.snapshot.eta = Some(params.eta);
    Ok(sd)
}

/// Mean of independent estimates over `seeds`. The result does not depend
/// on the order in which runs finish.
pub fn monte_carlo_ensemble(params: &OpoParams, cfg: &HeterodyneConfig, run: &MonteCarloRun, seeds: &[u64]) -> Result<SpectralDensity> {
    if seeds.is_empty() {
        return Err(invalid("seeds", "empty"));
    }
    let one = |&s: &u64| monte_carlo_heterodyne(params, cfg, run, s);
    #[cfg(feature = "parallel")]
    let runs: Vec<SpectralDensity> = {
        use rayon::prelude::*;
        seeds.par_iter().map(one).collect::<Result<_>>()?
    };
    #[cfg(not(feature = "parallel"))]
    let runs: Vec<SpectralDensity> = seeds.iter().map(one).collect::<Result<_>>()?;

    let k = runs.len() as f64;
    let mut out = runs[0].clone();
    for (j, c) in out.chi.iter_mut().enumerate() {
        *c = runs.iter().map(|r| r.chi[j]).sum::<f64>() / k;
    }
    let rel = run.welch.variance_factor(out.snapshot.segments.unwrap_or(1)).sqrt() / k.sqrt();
    out.sigma = Some(out.chi.iter().map(|c| c * rel).collect());
    out.snapshot.segments = out.snapshot.segments.map(|s| s * runs.len());
    Ok(out)
}
