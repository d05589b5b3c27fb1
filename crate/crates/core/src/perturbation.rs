//! Time kernels and the first two weak-nonlinearity iterates.
//!
//! `Δ_T(x) = ∫₀ᵀ e^{ixt} dt`, `E(x, y) = ∫₀ᵀ Δ_t(x - y) e^{iyt} dt`.
//!
//! Iterates are built from *term lists*: mode `l` of `a^(1)(t)` is `Σ c·Δ_t(x)` over
//! its terms. The second iterate integrates the linearised right-hand side against
//! these lists, so every product of two kernels becomes one `E` evaluation.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::dynamics::{FourWaveModel, FrequencyShift, ThreeWaveModel, WaveField};
use crate::error::{invalid, Result, WtError};
use crate::lattice::{Quartet, Triad};
use crate::systems::WaveSystem;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// `|xT|` below which `D_p` is summed as a power series.
const SERIES_SWITCH: f64 = 1.0;
/// `|x - y|·T` below which `E` is expanded about the midpoint.
const E_SWITCH: f64 = 0.05;

/// `D_p(x) = ∫₀ᵀ t^p e^{ixt} dt`.
pub fn delta_moment(p: u32, x: f64, t: f64) -> Complex64 {
    let theta = x * t;
    if theta.abs() < SERIES_SWITCH {
        let mut sum = Complex64::new(0.0, 0.0);
        let mut pow = Complex64::new(1.0, 0.0);
        let mut fact = 1.0;
        for k in 0..40u32 {
            if k > 0 {
                pow *= I * theta;
                fact *= k as f64;
            }
            let add = pow / (fact * (k + p + 1) as f64);
            sum += add;
            if add.norm() < 1e-18 {
                break;
            }
        }
        return sum * t.powi(p as i32 + 1);
    }
    let ix = I * x;
    let (s, c) = theta.sin_cos();
    let half = (0.5 * theta).sin();
    let mut d = Complex64::new(-2.0 * half * half, s) / ix;
    let e = Complex64::new(c, s);
    for q in 1..=p {
        d = (e * t.powi(q as i32) - d * q as f64) / ix;
    }
    d
}

/// `Δ_T(x)`; equals `T` at `x = 0`.
pub fn delta_kernel(x: f64, t: f64) -> Complex64 {
    delta_moment(0, x, t)
}

/// `E(x, y)`, with removable singularities handled by expansion.
pub fn e_kernel(x: f64, y: f64, t: f64) -> Complex64 {
    let h = x - y;
    if (h * t).abs() < E_SWITCH {
        let m = 0.5 * (x + y);
        let h2 = h * h;
        delta_moment(1, m, t) - delta_moment(3, m, t) * (h2 / 24.0)
            + delta_moment(5, m, t) * (h2 * h2 / 1920.0)
    } else {
        (delta_kernel(x, t) - delta_kernel(y, t)) / (I * h)
    }
}

/// Time horizon of the expansion, with the separation check against linear periods.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Kernels {
    pub t: f64,
}

impl Kernels {
    pub fn new(t: f64, omega_max: f64) -> Result<Self> {
        if !(t > 0.0) || !t.is_finite() {
            return Err(invalid("T", format!("must be positive, got {t}")));
        }
        if omega_max > 0.0 && t < 10.0 * 2.0 * PI / omega_max {
            log::warn!(
                "T = {t} is not well separated from the fastest linear period {}",
                2.0 * PI / omega_max
            );
        }
        Ok(Self { t })
    }

    pub fn delta(&self, x: f64) -> Complex64 {
        delta_kernel(x, self.t)
    }

    pub fn e(&self, x: f64, y: f64) -> Complex64 {
        e_kernel(x, y, self.t)
    }
}

/// One contribution `c·Δ_t(x)` to a time-dependent first iterate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Term {
    pub c: Complex64,
    pub x: f64,
}

impl Term {
    /// `conj(c·Δ_t(x)) = conj(c)·Δ_t(-x)`.
    pub fn conj(self) -> Self {
        Self {
            c: self.c.conj(),
            x: -self.x,
        }
    }
}

/// `∫₀ᵀ (Σ c_k Δ_t(x_k)) e^{iyt} dt`.
fn integrate_terms(terms: &[Term], y: f64, t: f64) -> Complex64 {
    terms.iter().map(|k| k.c * e_kernel(k.x + y, y, t)).sum()
}

/// As [`integrate_terms`] for the conjugated list.
fn integrate_conj_terms(terms: &[Term], y: f64, t: f64) -> Complex64 {
    terms
        .iter()
        .map(|k| {
            let k = k.conj();
            k.c * e_kernel(k.x + y, y, t)
        })
        .sum()
}

fn evaluate(terms: &[Vec<Term>], t: f64) -> Vec<Complex64> {
    terms
        .iter()
        .map(|list| list.iter().map(|k| k.c * delta_kernel(k.x, t)).sum())
        .collect()
}

fn check_len(a: &[Complex64], n: usize) -> Result<()> {
    if a.len() != n {
        return Err(WtError::LengthMismatch {
            what: "amplitudes",
            expected: n,
            found: a.len(),
        });
    }
    Ok(())
}

/// Term lists of the three-wave first iterate.
pub fn first_terms_3w(model: &ThreeWaveModel, a: &[Complex64]) -> Result<Vec<Vec<Term>>> {
    let omega = model.omega();
    check_len(a, omega.len())?;
    let mut terms = vec![Vec::new(); omega.len()];
    for (j, m, n, v) in model.couplings() {
        let y = omega[j] - omega[m] - omega[n];
        terms[j].push(Term {
            c: -I * v * a[m] * a[n],
            x: y,
        });
        terms[m].push(Term {
            c: -I * 2.0 * v.conj() * a[n].conj() * a[j],
            x: -y,
        });
    }
    Ok(terms)
}

/// `a^(1)(T)` for a three-wave model at initial amplitudes `a`.
pub fn first_iterate_3w_model(model: &ThreeWaveModel, a: &[Complex64], t: f64) -> Result<Vec<Complex64>> {
    Ok(evaluate(&first_terms_3w(model, a)?, t))
}

/// `a^(2)(T)` for a three-wave model at initial amplitudes `a`.
pub fn second_iterate_3w_model(model: &ThreeWaveModel, a: &[Complex64], t: f64) -> Result<Vec<Complex64>> {
    let omega = model.omega();
    let first = first_terms_3w(model, a)?;
    let mut out = vec![Complex64::new(0.0, 0.0); omega.len()];
    for (j, m, n, v) in model.couplings() {
        let y = omega[j] - omega[m] - omega[n];
        out[j] += -I
            * v
            * (a[n] * integrate_terms(&first[m], y, t) + a[m] * integrate_terms(&first[n], y, t));
        out[m] += -I
            * 2.0
            * v.conj()
            * (a[j] * integrate_conj_terms(&first[n], -y, t)
                + a[n].conj() * integrate_terms(&first[j], -y, t));
    }
    Ok(out)
}

pub fn first_iterate_3w(field0: &WaveField, system: &WaveSystem, triads: &[Triad], t: f64) -> Result<Vec<Complex64>> {
    let model = ThreeWaveModel::new(&field0.lattice, system, triads)?;
    first_iterate_3w_model(&model, &field0.amplitudes, t)
}

pub fn second_iterate_3w(field0: &WaveField, system: &WaveSystem, triads: &[Triad], t: f64) -> Result<Vec<Complex64>> {
    let model = ThreeWaveModel::new(&field0.lattice, system, triads)?;
    second_iterate_3w_model(&model, &field0.amplitudes, t)
}

fn scaled_shift(model: &FourWaveModel, shift: &FrequencyShift) -> Result<Vec<f64>> {
    if shift.0.len() != model.omega().len() {
        return Err(WtError::LengthMismatch {
            what: "frequency shift",
            expected: model.omega().len(),
            found: shift.0.len(),
        });
    }
    let eps = model.epsilon();
    Ok(shift
        .0
        .iter()
        .map(|o| if eps == 0.0 { 0.0 } else { o / eps })
        .collect())
}

/// Term lists of the four-wave first iterate, including the `iΩ_l a_l T` counter-term.
pub fn first_terms_4w(model: &FourWaveModel, a: &[Complex64], shift: &FrequencyShift) -> Result<Vec<Vec<Term>>> {
    let omega = model.omega();
    check_len(a, omega.len())?;
    let om = scaled_shift(model, shift)?;
    let mut terms = vec![Vec::new(); omega.len()];
    for (j, l, m, n, w) in model.couplings() {
        terms[j].push(Term {
            c: -I * w * a[l].conj() * a[m] * a[n],
            x: omega[j] + omega[l] - omega[m] - omega[n],
        });
    }
    for (l, list) in terms.iter_mut().enumerate() {
        if om[l] != 0.0 && a[l].norm_sqr() > 0.0 {
            list.push(Term {
                c: I * om[l] * a[l],
                x: 0.0,
            });
        }
    }
    Ok(terms)
}

pub fn first_iterate_4w_model(
    model: &FourWaveModel,
    a: &[Complex64],
    shift: &FrequencyShift,
    t: f64,
) -> Result<Vec<Complex64>> {
    Ok(evaluate(&first_terms_4w(model, a, shift)?, t))
}

/// `a^(2)(T)` for a four-wave model whose shift is refreshed from instantaneous intensities.
///
/// Besides the chained-coupling terms this carries the `Ω` counter-term integrated against
/// `a^(1)`, the first-order phase drift `∫τ e^{iyτ}dτ` of the shifted exponentials, and the
/// `O(ε²)` change of `Ω` itself.
pub fn second_iterate_4w_model(
    model: &FourWaveModel,
    a: &[Complex64],
    shift: &FrequencyShift,
    t: f64,
) -> Result<Vec<Complex64>> {
    let omega = model.omega();
    let om = scaled_shift(model, shift)?;
    let first = first_terms_4w(model, a, shift)?;
    let n_modes = omega.len();
    let mut out = vec![Complex64::new(0.0, 0.0); n_modes];
    for (j, l, m, n, w) in model.couplings() {
        let y = omega[j] + omega[l] - omega[m] - omega[n];
        let chained = a[m] * a[n] * integrate_conj_terms(&first[l], y, t)
            + a[l].conj() * a[n] * integrate_terms(&first[m], y, t)
            + a[l].conj() * a[m] * integrate_terms(&first[n], y, t);
        out[j] += -I * w * chained;
        let drift = om[j] + om[l] - om[m] - om[n];
        if drift != 0.0 {
            out[j] += w * a[l].conj() * a[m] * a[n] * drift * delta_moment(1, y, t);
        }
    }
    let integrated: Vec<Complex64> = first.iter().map(|list| integrate_terms(list, 0.0, t)).collect();
    let change: Vec<f64> = (0..n_modes)
        .map(|mu| (a[mu].conj() * integrated[mu]).re)
        .collect();
    for l in 0..n_modes {
        out[l] += I * om[l] * integrated[l];
        if a[l].norm_sqr() > 0.0 {
            let dshift: f64 = (0..n_modes).map(|mu| model.diagonal(l, mu) * change[mu]).sum();
            out[l] += I * 4.0 * dshift * a[l];
        }
    }
    Ok(out)
}

pub fn first_iterate_4w(
    field0: &WaveField,
    system: &WaveSystem,
    quartets: &[Quartet],
    shift: &FrequencyShift,
    t: f64,
) -> Result<Vec<Complex64>> {
    let model = FourWaveModel::new(&field0.lattice, system, quartets)?;
    first_iterate_4w_model(&model, &field0.amplitudes, shift, t)
}

pub fn second_iterate_4w(
    field0: &WaveField,
    system: &WaveSystem,
    quartets: &[Quartet],
    shift: &FrequencyShift,
    t: f64,
) -> Result<Vec<Complex64>> {
    let model = FourWaveModel::new(&field0.lattice, system, quartets)?;
    second_iterate_4w_model(&model, &field0.amplitudes, shift, t)
}

/// Truncation residuals `‖a(T) - Σ_{p≤P} ε^p a^(p)‖₂` for `P = 0, 1, 2` at one ε.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct ResidualRow {
    pub epsilon: f64,
    pub r0: f64,
    pub r1: f64,
    pub r2: f64,
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn log_log_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

fn norm_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>().sqrt()
}

/// Compares direct integration against the truncated expansion for each ε.
pub fn residual_scaling(
    field0: &WaveField,
    system: &WaveSystem,
    epsilons: &[f64],
    t: f64,
    dt: f64,
) -> Result<Vec<ResidualRow>> {
    use crate::dynamics::{integrate, IntegrateOptions, InteractionModel};
    let mut rows = Vec::with_capacity(epsilons.len());
    let a0 = &field0.amplitudes;
    for &eps in epsilons {
        let sys = system.with_epsilon(eps)?;
        let model = InteractionModel::full(&field0.lattice, &sys)?;
        let (a1, a2) = match &model {
            InteractionModel::Three(m) => (
                first_iterate_3w_model(m, a0, t)?,
                second_iterate_3w_model(m, a0, t)?,
            ),
            InteractionModel::Four(m) => {
                let shift = m.shift(a0);
                (
                    first_iterate_4w_model(m, a0, &shift, t)?,
                    second_iterate_4w_model(m, a0, &shift, t)?,
                )
            }
        };
        let direct = integrate(field0, &model, t, &IntegrateOptions::with_dt(dt))?.field.amplitudes;
        let s1: Vec<Complex64> = a0.iter().zip(&a1).map(|(x, y)| x + y * eps).collect();
        let s2: Vec<Complex64> = s1.iter().zip(&a2).map(|(x, y)| x + y * eps * eps).collect();
        rows.push(ResidualRow {
            epsilon: eps,
            r0: norm_diff(&direct, a0),
            r1: norm_diff(&direct, &s1),
            r2: norm_diff(&direct, &s2),
        });
    }
    Ok(rows)
}
