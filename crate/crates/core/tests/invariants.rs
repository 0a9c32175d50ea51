use std::f64::consts::PI;

use bhet_core::field::{opo_spectra, HeterodyneConfig, OpoParams};
use bhet_core::lock::{bessel_truncation, wrap_angle};
use bhet_core::report::{parse_spectrum_csv, spectrum_csv, Metadata};
use bhet_core::spectral::{heterodyne_spectrum, homodyne_spectrum, opo_heterodyne_closed_form};
use bhet_core::stochastic::{band_power, synthesize_quadrature, welch_psd, WelchConfig, Window};
use proptest::prelude::*;

fn params() -> impl Strategy<Value = OpoParams> {
    (0.01f64..0.5, 0.2f64..1.0).prop_map(|(eps, eta)| OpoParams::new(1.0, eps, eta).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn heterodyne_spectrum_is_physical_and_even(p in params(), shift in 0.01f64..10.0, phibar in -PI..PI, w in -20.0f64..20.0) {
        let spectra = opo_spectra(&p).unwrap();
        let cfg = HeterodyneConfig::locked_at(shift, phibar, 1.0).unwrap();
        let sd = heterodyne_spectrum(&spectra, &cfg, p.eta, &[w, -w]).unwrap();
        prop_assert!(sd.chi[0] >= 0.0);
        prop_assert!((sd.chi[0] - sd.chi[1]).abs() <= 1e-12);
    }

    #[test]
    fn quadrature_angle_has_period_pi(p in params(), shift in 0.01f64..10.0, phibar in -PI..PI, w in -20.0f64..20.0) {
        let spectra = opo_spectra(&p).unwrap();
        let a = HeterodyneConfig::locked_at(shift, phibar, 1.0).unwrap();
        let b = HeterodyneConfig::locked_at(shift, phibar + PI, 1.0).unwrap();
        let x = heterodyne_spectrum(&spectra, &a, p.eta, &[w]).unwrap().chi[0];
        let y = heterodyne_spectrum(&spectra, &b, p.eta, &[w]).unwrap().chi[0];
        prop_assert!((x - y).abs() <= 1e-12);
    }

    #[test]
    fn heterodyne_centre_lies_between_homodyne_and_floor(p in params(), shift in 0.01f64..10.0) {
        // the heterodyne value averages the homodyne spectrum over +-shift,
        // so it cannot beat the homodyne minimum at zero
        let spectra = opo_spectra(&p).unwrap();
        let hom = homodyne_spectrum(&spectra, 0.0, p.eta, &[0.0]).unwrap().chi[0];
        let het = opo_heterodyne_closed_form(&p, shift, &[0.0]).unwrap().chi[0];
        prop_assert!(het >= hom - 1e-12);
        prop_assert!(het <= 1.0);
    }

    #[test]
    fn closed_form_matches_general_path(p in params(), shift in 0.01f64..10.0, w in -20.0f64..20.0) {
        let p = OpoParams::new(1.0, p.epsilon, 1.0).unwrap();
        let spectra = opo_spectra(&p).unwrap();
        let cfg = HeterodyneConfig::locked_at(shift, 0.0, 1.0).unwrap();
        let general = heterodyne_spectrum(&spectra, &cfg, 1.0, &[w]).unwrap().chi[0];
        let closed = opo_heterodyne_closed_form(&p, shift, &[w]).unwrap().chi[0];
        prop_assert!((general - closed).abs() <= 1e-12);
    }

    #[test]
    fn wrapped_angles_stay_in_range(x in -1e3f64..1e3) {
        let y = wrap_angle(x);
        prop_assert!(y > -PI - 1e-12 && y <= PI);
        prop_assert!(((x - y) / (2.0 * PI) - ((x - y) / (2.0 * PI)).round()).abs() < 1e-9);
    }

    #[test]
    fn bessel_residual_is_nonnegative(theta in 0.0f64..1.0) {
        let (j0, j1, r) = bessel_truncation(theta);
        prop_assert!(r >= -1e-15);
        prop_assert!((j0 * j0 + 2.0 * j1 * j1 + r - 1.0).abs() < 1e-14);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn periodogram_conserves_power(seed in any::<u64>(), level in 0.1f64..5.0) {
        let cfg = WelchConfig { segment_length: 128, overlap: 0.0, window: Window::Rectangular, n_segments_min: 8 };
        let x = synthesize_quadrature(|w| level / (1.0 + w * w), cfg.required_samples(), 4.0, seed).unwrap();
        let sd = welch_psd(&x, &cfg).unwrap();
        let total = band_power(&sd, f64::NEG_INFINITY, f64::INFINITY);
        prop_assert!((total - x.mean_square()).abs() <= 1e-12 * x.mean_square());
    }

    #[test]
    fn spectrum_csv_round_trips(p in params(), shift in 0.01f64..10.0) {
        let grid: Vec<f64> = (0..50).map(|k| -5.0 + 0.2 * k as f64).collect();
        let sd = opo_heterodyne_closed_form(&p, shift, &grid).unwrap();
        let text = spectrum_csv(&sd, &Metadata::new("h", "v"));
        let (w, c, s) = parse_spectrum_csv(&text).unwrap();
        prop_assert_eq!(w, sd.omega);
        prop_assert_eq!(c, sd.chi);
        prop_assert!(s.is_none());
    }
}
