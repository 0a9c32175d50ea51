//! Term-by-term expansion of the intensity correlation for Gaussian
//! fields, retaining every order in the LO amplitude.
//!
//! The normally ordered product `<E-(t) E-(t') E+(t') E+(t)>` of the total
//! field (signal plus LOs) expands into 16 terms, one per choice of which
//! of the four slots carry the signal field. The product of mean
//! intensities `<I(t)><I(t')>` expands into the same 16 LO prefactors. The
//! seven terms whose signal operators all sit at one time are identical in
//! both expansions; the remaining nine differ and sum to the full
//! correlation. Signal moments are computed by expanding each operator into
//! its mean plus a zero-mean Gaussian fluctuation and pairing the
//! fluctuations (Wick factorisation).

use num_complex::Complex64;

use crate::field::{GaussianFieldState, HeterodyneConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Part {
    /// Negative-frequency (creation) part.
    Minus,
    /// Positive-frequency (annihilation) part.
    Plus,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Slot {
    pub part: Part,
    pub time: f64,
}

impl Slot {
    fn minus(time: f64) -> Self {
        Slot {
            part: Part::Minus,
            time,
        }
    }

    fn plus(time: f64) -> Self {
        Slot {
            part: Part::Plus,
            time,
        }
    }
}

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Two-point function of the zero-mean fluctuations for a pair of slots
/// inside a normally ordered product.
fn pair(state: &GaussianFieldState, a: Slot, b: Slot) -> Complex64 {
    match (a.part, b.part) {
        (Part::Minus, Part::Minus) => state.gamma20.eval(b.time - a.time),
        (Part::Plus, Part::Plus) => state.gamma20.eval(a.time - b.time).conj(),
        (Part::Minus, Part::Plus) => state.gamma11.eval(b.time - a.time),
        (Part::Plus, Part::Minus) => state.gamma11.eval(a.time - b.time),
    }
}

/// Sum over all perfect matchings of the fluctuation slots.
fn wick(state: &GaussianFieldState, slots: &[Slot]) -> Complex64 {
    match slots.len() {
        0 => ONE,
        n if n % 2 == 1 => ZERO,
        _ => {
            let first = slots[0];
            let mut acc = ZERO;
            for j in 1..slots.len() {
                let rest: Vec<Slot> = slots[1..]
                    .iter()
                    .enumerate()
                    .filter(|(k, _)| k + 1 != j)
                    .map(|(_, s)| *s)
                    .collect();
                acc += pair(state, first, slots[j]) * wick(state, &rest);
            }
            acc
        }
    }
}

fn mean_of(state: &GaussianFieldState, slot: Slot) -> Complex64 {
    match slot.part {
        Part::Minus => state.mean_amplitude.conj(),
        Part::Plus => state.mean_amplitude,
    }
}

/// Normally ordered moment of the signal field `E = <E> + dE` over the
/// given slots.
pub fn normal_moment(state: &GaussianFieldState, slots: &[Slot]) -> Complex64 {
    let n = slots.len();
    let mut acc = ZERO;
    for mask in 0u32..(1 << n) {
        let mut mean = ONE;
        let mut fluct = Vec::with_capacity(n);
        for (i, &s) in slots.iter().enumerate() {
            if mask & (1 << i) != 0 {
                fluct.push(s);
            } else {
                mean *= mean_of(state, s);
            }
        }
        if fluct.len() % 2 == 0 {
            acc += mean * wick(state, &fluct);
        }
    }
    acc
}

fn lo(cfg: &HeterodyneConfig, slot: Slot) -> Complex64 {
    let l = cfg.lo_field(slot.time);
    match slot.part {
        Part::Plus => l,
        Part::Minus => l.conj(),
    }
}

/// One of the 16 terms. `mask` bit `i` set means slot `i` of
/// `[E-(t), E-(t'), E+(t'), E+(t)]` carries the signal field.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpansionTerm {
    pub mask: u8,
    /// Term of the normally ordered intensity product.
    pub normal_ordered: Complex64,
    /// Matching term of the product of mean intensities.
    pub factorized: Complex64,
}

impl ExpansionTerm {
    /// All signal operators of this term act at a single time.
    pub fn is_leading(&self) -> bool {
        let t_slots = 0b1001;
        let tp_slots = 0b0110;
        self.mask & t_slots == self.mask || self.mask & tp_slots == self.mask
    }

    pub fn difference(&self) -> Complex64 {
        self.normal_ordered - self.factorized
    }
}

#[derive(Debug, Clone)]
pub struct IntensityExpansion {
    pub terms: Vec<ExpansionTerm>,
}

impl IntensityExpansion {
    pub fn new(state: &GaussianFieldState, cfg: &HeterodyneConfig, t: f64, iota: f64) -> Self {
        let tp = t + iota;
        let slots = [Slot::minus(t), Slot::minus(tp), Slot::plus(tp), Slot::plus(t)];

        // single-time expansion of <I(s)> = sum over subsets of {E-(s), E+(s)}
        let single = |minus: Slot, plus: Slot, sub: u8| -> Complex64 {
            match sub {
                0b00 => lo(cfg, minus) * lo(cfg, plus),
                0b01 => normal_moment(state, &[minus]) * lo(cfg, plus),
                0b10 => lo(cfg, minus) * normal_moment(state, &[plus]),
                _ => normal_moment(state, &[minus, plus]),
            }
        };

        let mut terms = Vec::with_capacity(16);
        for mask in 0u8..16 {
            let mut lo_prod = ONE;
            let mut field = Vec::with_capacity(4);
            for (i, &s) in slots.iter().enumerate() {
                if mask & (1 << i) != 0 {
                    field.push(s);
                } else {
                    lo_prod *= lo(cfg, s);
                }
            }
            let normal_ordered = lo_prod * normal_moment(state, &field);

            let sub_t = (mask & 0b0001) | ((mask >> 2) & 0b0010);
            let sub_tp = ((mask >> 1) & 0b0001) | ((mask >> 1) & 0b0010);
            let factorized = single(slots[0], slots[3], sub_t) * single(slots[1], slots[2], sub_tp);

            terms.push(ExpansionTerm {
                mask,
                normal_ordered,
                factorized,
            });
        }
        IntensityExpansion { terms }
    }

    pub fn leading(&self) -> impl Iterator<Item = &ExpansionTerm> {
        self.terms.iter().filter(|t| t.is_leading())
    }

    pub fn subleading(&self) -> impl Iterator<Item = &ExpansionTerm> {
        self.terms.iter().filter(|t| !t.is_leading())
    }

    /// `<T:I(t) I(t'):> - <I(t)><I(t')>` as a complex number; the
    /// imaginary part vanishes up to rounding.
    pub fn correlation(&self) -> Complex64 {
        self.terms.iter().map(ExpansionTerm::difference).sum()
    }
}

/// All-orders intensity-fluctuation correlation from the Gaussian
/// expansion.
pub fn wick_oracle(state: &GaussianFieldState, cfg: &HeterodyneConfig, t: f64, iota: f64) -> f64 {
    IntensityExpansion::new(state, cfg, t, iota).correlation().re
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{Kernel, OpoParams};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn seven_leading_terms() {
        let state = GaussianFieldState::coherent(c(0.3, 0.1), 0.0);
        let cfg = HeterodyneConfig::new(2.0, 0.1, 0.4, 0.0, 5.0).unwrap();
        let e = IntensityExpansion::new(&state, &cfg, 0.3, 0.7);
        assert_eq!(e.leading().count(), 7);
        let masks: Vec<u8> = e.leading().map(|t| t.mask).collect();
        assert_eq!(masks, vec![0, 1, 2, 4, 6, 8, 9]);
    }

    #[test]
    fn zero_state_gives_zero() {
        let state = GaussianFieldState::coherent(c(0.0, 0.0), 0.0);
        let cfg = HeterodyneConfig::new(1.0, 0.0, 0.0, 0.0, 10.0).unwrap();
        // LO-only terms cancel up to rounding of E^4
        assert!(wick_oracle(&state, &cfg, 0.2, 0.5).abs() < 1e-10);
    }

    #[test]
    fn coherent_state_has_no_intensity_correlation() {
        let state = GaussianFieldState::coherent(c(1.5, -0.4), 0.2);
        let cfg = HeterodyneConfig::new(1.3, 0.3, -0.2, 0.2, 7.0).unwrap();
        let v = wick_oracle(&state, &cfg, 0.4, 1.1);
        assert!(v.abs() < 1e-9, "{v}");
    }

    #[test]
    fn fourth_moment_factorizes_for_zero_mean() {
        let state = GaussianFieldState {
            mean_amplitude: c(0.0, 0.0),
            gamma11: Kernel::new(|t| c((-t.abs()).exp(), 0.2 * t)),
            gamma20: Kernel::new(|t| c(0.5 * (-t * t).exp(), 0.1)),
            beta: 0.0,
        };
        let (t, tp) = (0.0, 0.4);
        let m = normal_moment(
            &state,
            &[Slot::minus(t), Slot::minus(tp), Slot::plus(tp), Slot::plus(t)],
        );
        let g11 = |x: f64| state.gamma11.eval(x);
        let g20 = state.gamma20.eval(tp - t);
        let expect = g20 * g20.conj() + g11(tp - t) * g11(t - tp) + g11(0.0) * g11(0.0);
        assert!((m - expect).norm() < 1e-14);
    }

    #[test]
    fn real_for_opo_state() {
        let p = OpoParams::new(1.0, 0.3, 1.0).unwrap();
        let state = GaussianFieldState::squeezed_vacuum(&p, 0.2).unwrap().with_mean(c(0.4, 0.9));
        let cfg = HeterodyneConfig::new(3.0, 0.5, 1.1, 0.2, 20.0).unwrap();
        let e = IntensityExpansion::new(&state, &cfg, 0.13, 0.37);
        let z = e.correlation();
        assert!(z.im.abs() < 1e-9 * z.re.abs().max(1.0));
    }
}
