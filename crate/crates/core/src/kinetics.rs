//! Collision rates `η`, `γ` and explicit stepping of `ṅ = η - (γ - γ̃) n`.
//!
//! Rates are direct sums over resonance lists. Each summed free wavevector carries the
//! lattice measure `(2π/L)^d`, so sums approach their continuum integrals as `L` grows.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{invalid, Result, WtError};
use crate::lattice::{self, FourierLattice};
use crate::systems::{Order, WaveSystem};

/// Normalised frequency delta used in place of `δ(ω)` on a discrete lattice.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, serde::Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Broadening {
    /// `(1/Δ)(1 - |x|/Δ)₊`.
    Triangular { width: f64 },
    /// `(Δ/π) / (x² + Δ²)`.
    Lorentzian { width: f64 },
    /// `(1 - cos xT) / (π T x²) = |Δ_T(x)|² / (2πT)`, the finite-time kernel.
    Fejer { time: f64 },
    /// Weight 1 for `|x| <= tol`, 0 otherwise.
    Exact { tol: f64 },
}

impl Broadening {
    pub fn triangular(width: f64) -> Result<Self> {
        Self::Triangular { width }.validated()
    }

    fn validated(self) -> Result<Self> {
        let (name, v) = match self {
            Self::Triangular { width } | Self::Lorentzian { width } => ("width", width),
            Self::Fejer { time } => ("time", time),
            Self::Exact { tol } => {
                if !(tol >= 0.0) {
                    return Err(invalid("tol", format!("must be non-negative, got {tol}")));
                }
                return Ok(self);
            }
        };
        if !(v > 0.0) || !v.is_finite() {
            return Err(invalid(name, format!("must be positive and finite, got {v}")));
        }
        Ok(self)
    }

    pub fn weight(&self, x: f64) -> f64 {
        match *self {
            Self::Triangular { width } => (1.0 - x.abs() / width).max(0.0) / width,
            Self::Lorentzian { width } => width / PI / (x * x + width * width),
            Self::Fejer { time } => {
                let th = x * time;
                if th.abs() < 1e-4 {
                    time / (2.0 * PI) * (1.0 - th * th / 12.0)
                } else {
                    let s = (0.5 * th).sin();
                    2.0 * s * s / (PI * time * x * x)
                }
            }
            Self::Exact { tol } => {
                if x.abs() <= tol {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    /// Largest detuning with nonzero weight.
    pub fn support(&self) -> f64 {
        match *self {
            Self::Triangular { width } => width,
            Self::Exact { tol } => tol,
            Self::Lorentzian { .. } | Self::Fejer { .. } => f64::INFINITY,
        }
    }

    /// Frequency resolution the kernel represents (`2π/T` for the Fejér kernel).
    pub fn resolution(&self) -> f64 {
        match *self {
            Self::Triangular { width } | Self::Lorentzian { width } => width,
            Self::Fejer { time } => 2.0 * PI / time,
            Self::Exact { tol } => tol,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct RateTerm {
    idx: [usize; 4],
    w: f64,
}

/// Weighted resonance list, ready to produce rates for any spectrum.
#[derive(Debug, Clone)]
pub struct KineticModel {
    order: Order,
    n_modes: usize,
    omega: Vec<f64>,
    terms: Vec<RateTerm>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Rates {
    pub eta: Vec<f64>,
    pub gamma: Vec<f64>,
}

impl KineticModel {
    /// Ordered triads `(j; m, n)` with `|V^j_mn|²` and detuning; weights are
    /// `4π ε² |V|² δ(detuning) · measure`.
    pub fn from_triads(
        omega: Vec<f64>,
        epsilon: f64,
        measure: f64,
        broadening: &Broadening,
        triads: impl IntoIterator<Item = (usize, usize, usize, f64, f64)>,
    ) -> Result<Self> {
        let pref = 4.0 * PI * epsilon * epsilon * measure;
        Self::from_weighted_triads(
            omega,
            triads
                .into_iter()
                .map(|(j, m, n, detuning, v2)| (j, m, n, pref * v2 * broadening.weight(detuning))),
        )
    }

    /// Ordered quartets `(j, l; m, n)` with `|W|²` and detuning.
    pub fn from_quartets(
        omega: Vec<f64>,
        epsilon: f64,
        measure: f64,
        broadening: &Broadening,
        quartets: impl IntoIterator<Item = (usize, usize, usize, usize, f64, f64)>,
    ) -> Result<Self> {
        let pref = 4.0 * PI * epsilon * epsilon * measure;
        Self::from_weighted_quartets(
            omega,
            quartets
                .into_iter()
                .map(|(j, l, m, n, detuning, w2)| (j, l, m, n, pref * w2 * broadening.weight(detuning))),
        )
    }

    /// Ordered triads `(j; m, n)` with precomputed weights.
    pub fn from_weighted_triads(omega: Vec<f64>, triads: impl IntoIterator<Item = (usize, usize, usize, f64)>) -> Result<Self> {
        let n_modes = omega.len();
        let mut terms = Vec::new();
        for (j, m, n, w) in triads {
            for i in [j, m, n] {
                if i >= n_modes {
                    return Err(WtError::ModeOutOfSet { mode: i, count: n_modes });
                }
            }
            if w != 0.0 {
                terms.push(RateTerm { idx: [j, m, n, 0], w });
            }
        }
        Ok(Self {
            order: Order::ThreeWave,
            n_modes,
            omega,
            terms,
        })
    }

    /// Ordered quartets `(j, l; m, n)` with precomputed weights.
    pub fn from_weighted_quartets(
        omega: Vec<f64>,
        quartets: impl IntoIterator<Item = (usize, usize, usize, usize, f64)>,
    ) -> Result<Self> {
        let n_modes = omega.len();
        let mut terms = Vec::new();
        for (j, l, m, n, w) in quartets {
            for i in [j, l, m, n] {
                if i >= n_modes {
                    return Err(WtError::ModeOutOfSet { mode: i, count: n_modes });
                }
            }
            if w != 0.0 {
                terms.push(RateTerm { idx: [j, l, m, n], w });
            }
        }
        Ok(Self {
            order: Order::FourWave,
            n_modes,
            omega,
            terms,
        })
    }

    /// Ordered triads as `(j, m, n, weight)`; empty for a four-wave model.
    pub fn weighted_triads(&self) -> Vec<(usize, usize, usize, f64)> {
        match self.order {
            Order::ThreeWave => self.terms.iter().map(|t| (t.idx[0], t.idx[1], t.idx[2], t.w)).collect(),
            Order::FourWave => Vec::new(),
        }
    }

    /// Ordered quartets as `(j, l, m, n, weight)`; empty for a three-wave model.
    pub fn weighted_quartets(&self) -> Vec<(usize, usize, usize, usize, f64)> {
        match self.order {
            Order::FourWave => self.terms.iter().map(|t| (t.idx[0], t.idx[1], t.idx[2], t.idx[3], t.w)).collect(),
            Order::ThreeWave => Vec::new(),
        }
    }

    /// Resonance search plus coupling evaluation on a lattice.
    pub fn new(lattice: &FourierLattice, system: &WaveSystem, broadening: &Broadening) -> Result<Self> {
        let broadening = broadening.validated()?;
        let omega = lattice::frequencies(lattice, system)?;
        let cell = 2.0 * PI / lattice.box_length();
        let per_vector = cell.powi(lattice.dim() as i32);
        let radius = broadening.support();
        let k = |i: usize| lattice.wavevector(i);
        let model = match system.order() {
            Order::ThreeWave => {
                let triads = lattice::find_triads_with(lattice, &omega, radius)?;
                let mut list = Vec::with_capacity(triads.len());
                for t in &triads {
                    let v = system.coupling3(k(t.j), k(t.m), k(t.n))?;
                    list.push((t.j, t.m, t.n, t.detuning, v.norm_sqr()));
                }
                Self::from_triads(omega, system.epsilon, per_vector, &broadening, list)?
            }
            Order::FourWave => {
                let quartets = lattice::find_quartets_with(lattice, &omega, radius)?;
                let mut list = Vec::with_capacity(quartets.len());
                for q in &quartets {
                    let w = system.coupling4(k(q.j), k(q.l), k(q.m), k(q.n))?;
                    list.push((q.j, q.l, q.m, q.n, q.detuning, w.norm_sqr()));
                }
                Self::from_quartets(omega, system.epsilon, per_vector * per_vector, &broadening, list)?
            }
        };
        if model.terms.is_empty() {
            log::warn!(
                "no resonant {} terms within {:?}; all collision rates vanish",
                system.order().name(),
                broadening
            );
        }
        Ok(model)
    }

    pub fn order(&self) -> Order {
        self.order
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn omega(&self) -> &[f64] {
        &self.omega
    }

    pub fn n_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn rates(&self, n: &[f64]) -> Result<Rates> {
        if n.len() != self.n_modes {
            return Err(WtError::LengthMismatch {
                what: "spectrum",
                expected: self.n_modes,
                found: n.len(),
            });
        }
        let mut eta = vec![0.0; self.n_modes];
        let mut gamma = vec![0.0; self.n_modes];
        match self.order {
            Order::ThreeWave => {
                for t in &self.terms {
                    let [j, m, nn, _] = t.idx;
                    eta[j] += t.w * n[m] * n[nn];
                    gamma[j] += t.w * (n[m] + n[nn]);
                    eta[m] += 2.0 * t.w * n[nn] * n[j];
                    gamma[m] += 2.0 * t.w * (n[nn] - n[j]);
                }
            }
            Order::FourWave => {
                for t in &self.terms {
                    let [j, l, m, nn] = t.idx;
                    eta[j] += t.w * n[l] * n[m] * n[nn];
                    gamma[j] += t.w * (n[l] * (n[m] + n[nn]) - n[m] * n[nn]);
                }
            }
        }
        Ok(Rates { eta, gamma })
    }
}

/// `E[Π_i n_i]` over independent modes with `E[n_i^c] = n_i^c factors[c]`.
fn product_moment(idx: &mut [usize], n: &[f64], factors: &[f64; 4]) -> f64 {
    idx.sort_unstable();
    let mut out = 1.0;
    let mut i = 0;
    while i < idx.len() {
        let mut c = 1;
        while i + c < idx.len() && idx[i + c] == idx[i] {
            c += 1;
        }
        out *= n[idx[i]].powi(c as i32) * factors[c];
        i += c;
    }
    out
}

impl KineticModel {
    /// Expected tendency `E[η(n') - γ(n') n']` when each `n'_i` is drawn independently
    /// with `E[n'_i^p] = n_i^p factors[p]`.
    ///
    /// Differs from the tendency at `n` only through coincident indices.
    pub fn expected_tendency(&self, n: &[f64], factors: &[f64; 4]) -> Result<Vec<f64>> {
        if n.len() != self.n_modes {
            return Err(WtError::LengthMismatch {
                what: "spectrum",
                expected: self.n_modes,
                found: n.len(),
            });
        }
        let mut out = vec![0.0; self.n_modes];
        let e = |idx: &[usize]| product_moment(&mut idx.to_vec(), n, factors);
        for t in &self.terms {
            match self.order {
                Order::ThreeWave => {
                    let [j, m, nn, _] = t.idx;
                    out[j] += t.w * (e(&[m, nn]) - e(&[m, j]) - e(&[nn, j]));
                    out[m] += 2.0 * t.w * (e(&[nn, j]) - e(&[nn, m]) + e(&[j, m]));
                }
                Order::FourWave => {
                    let [j, l, m, nn] = t.idx;
                    out[j] += t.w * (e(&[l, m, nn]) - e(&[l, m, j]) - e(&[l, nn, j]) + e(&[m, nn, j]));
                }
            }
        }
        Ok(out)
    }
}

pub fn collision_rates_3w(
    n: &[f64],
    lattice: &FourierLattice,
    system: &WaveSystem,
    broadening: &Broadening,
) -> Result<Rates> {
    if system.order() != Order::ThreeWave {
        return Err(WtError::OrderMismatch {
            expected: "three-wave",
            found: system.order().name(),
        });
    }
    KineticModel::new(lattice, system, broadening)?.rates(n)
}

pub fn collision_rates_4w(
    n: &[f64],
    lattice: &FourierLattice,
    system: &WaveSystem,
    broadening: &Broadening,
) -> Result<Rates> {
    if system.order() != Order::FourWave {
        return Err(WtError::OrderMismatch {
            expected: "four-wave",
            found: system.order().name(),
        });
    }
    KineticModel::new(lattice, system, broadening)?.rates(n)
}

/// `Ω_l = 2ε Σ_μ W^{lμ}_{lμ} n_μ`.
pub fn frequency_shift_spectrum(n: &[f64], lattice: &FourierLattice, system: &WaveSystem) -> Result<Vec<f64>> {
    if system.order() != Order::FourWave {
        return Err(WtError::OrderMismatch {
            expected: "four-wave",
            found: system.order().name(),
        });
    }
    let modes = lattice.n_modes();
    if n.len() != modes {
        return Err(WtError::LengthMismatch {
            what: "spectrum",
            expected: modes,
            found: n.len(),
        });
    }
    (0..modes)
        .map(|l| {
            let kl = lattice.wavevector(l);
            let mut s = 0.0;
            for (mu, nm) in n.iter().enumerate() {
                if *nm != 0.0 {
                    let kmu = lattice.wavevector(mu);
                    s += system.coupling4(kl, kmu, kl, kmu)?.re * nm;
                }
            }
            Ok(2.0 * system.epsilon * s)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KineticState {
    pub n: Vec<f64>,
    pub eta: Vec<f64>,
    pub gamma: Vec<f64>,
    pub gamma_tilde: Vec<f64>,
    pub time: f64,
}

impl KineticState {
    pub fn new(n: Vec<f64>) -> Self {
        let z = vec![0.0; n.len()];
        Self {
            eta: z.clone(),
            gamma: z.clone(),
            gamma_tilde: z,
            n,
            time: 0.0,
        }
    }

    pub fn with_forcing(mut self, gamma_tilde: Vec<f64>) -> Self {
        self.gamma_tilde = gamma_tilde;
        self
    }

    /// `η - (γ - γ̃) n`.
    pub fn tendency(&self) -> Vec<f64> {
        (0..self.n.len())
            .map(|k| self.eta[k] - (self.gamma[k] - self.gamma_tilde[k]) * self.n[k])
            .collect()
    }
}

/// One explicit Euler step `n + dt (η - (γ - γ̃) n)`.
pub fn step_with_rates(n: &[f64], eta: &[f64], gamma: &[f64], gamma_tilde: &[f64], dt: f64) -> Vec<f64> {
    (0..n.len())
        .map(|k| {
            let damping = gamma[k] - gamma_tilde[k];
            n[k] + dt * (eta[k] - damping * n[k])
        })
        .collect()
}

/// Relative size below which a negative spectrum value is rounding noise.
pub const NEGATIVITY_TOLERANCE: f64 = 1e-12;

/// Advances with the rates stored in `state`; errors on an unstable step or real negativity.
pub fn advance(state: &KineticState, dt: f64) -> Result<KineticState> {
    let len = state.n.len();
    for (what, v) in [("eta", &state.eta), ("gamma", &state.gamma), ("gamma_tilde", &state.gamma_tilde)] {
        if v.len() != len {
            return Err(WtError::LengthMismatch {
                what,
                expected: len,
                found: v.len(),
            });
        }
    }
    if !(dt > 0.0) {
        return Err(invalid("dt", format!("must be positive, got {dt}")));
    }
    let max_damping = (0..len)
        .map(|k| state.gamma[k] - state.gamma_tilde[k])
        .fold(0.0f64, f64::max);
    if max_damping > 0.0 {
        let bound = 0.1 / max_damping;
        if dt > bound {
            return Err(WtError::StepTooLarge { dt, bound });
        }
    }
    let mut n = step_with_rates(&state.n, &state.eta, &state.gamma, &state.gamma_tilde, dt);
    let scale = state.n.iter().fold(0.0f64, |a, b| a.max(b.abs()));
    let tolerance = NEGATIVITY_TOLERANCE * scale.max(f64::MIN_POSITIVE);
    for (index, v) in n.iter_mut().enumerate() {
        if *v < 0.0 {
            if -*v <= tolerance {
                *v = 0.0;
            } else {
                return Err(WtError::Negativity {
                    index,
                    value: *v,
                    tolerance,
                });
            }
        }
    }
    Ok(KineticState {
        n,
        eta: state.eta.clone(),
        gamma: state.gamma.clone(),
        gamma_tilde: state.gamma_tilde.clone(),
        time: state.time + dt,
    })
}

/// Refreshes `η, γ` from `state.n`, then takes one step. The returned state carries
/// the rates used for the step.
pub fn step_kinetic(state: &KineticState, model: &KineticModel, dt: f64) -> Result<KineticState> {
    let rates = model.rates(&state.n)?;
    let refreshed = KineticState {
        n: state.n.clone(),
        eta: rates.eta,
        gamma: rates.gamma,
        gamma_tilde: state.gamma_tilde.clone(),
        time: state.time,
    };
    advance(&refreshed, dt)
}

/// `γ̃ = γ - η/n`, the source/sink that makes `n` stationary.
pub fn balancing_forcing(n: &[f64], rates: &Rates) -> Vec<f64> {
    n.iter()
        .zip(rates.eta.iter().zip(&rates.gamma))
        .map(|(nk, (e, g))| if *nk > 0.0 { g - e / nk } else { 0.0 })
        .collect()
}

/// `Σ_k w_k ṅ_k` for a weight such as `ω_k` (energy) or 1 (waveaction).
pub fn weighted_tendency(weights: &[f64], rates: &Rates, n: &[f64]) -> f64 {
    (0..n.len())
        .map(|k| weights[k] * (rates.eta[k] - rates.gamma[k] * n[k]))
        .sum()
}

/// Energy flux through shells of `|k|`: `Π(K) = -Σ_{|k| ≤ K} ω_k ṅ_k`.
///
/// Returns `(K, Π(K))` at each distinct `|k|`.
pub fn energy_flux_profile(lattice: &FourierLattice, omega: &[f64], rates: &Rates, n: &[f64]) -> Vec<(f64, f64)> {
    let mut shells: Vec<(f64, f64)> = (0..n.len())
        .map(|k| {
            let kv = lattice.wavevector(k);
            let mag = (kv[0] * kv[0] + kv[1] * kv[1] + kv[2] * kv[2]).sqrt();
            (mag, omega[k] * (rates.eta[k] - rates.gamma[k] * n[k]))
        })
        .collect();
    shells.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut out: Vec<(f64, f64)> = Vec::new();
    let mut acc = 0.0;
    for (mag, t) in shells {
        acc -= t;
        match out.last_mut() {
            Some(last) if (last.0 - mag).abs() <= 1e-12 * mag.max(1.0) => last.1 = acc,
            _ => out.push((mag, acc)),
        }
    }
    out
}
