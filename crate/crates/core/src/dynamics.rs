//! Interaction-representation equations of motion and their fixed-step RK4 integration.
//!
//! Three-wave:
//! `i ȧ_l = ε Σ (V^l_mn a_m a_n e^{iω^l_mn t} + 2 conj(V^m_ln) conj(a_n) a_m e^{-iω^m_ln t})`.
//!
//! Four-wave, with the self-interaction shift `Ω_l = 2ε Σ_μ W^{lμ}_{lμ} |a_μ|²`:
//! `i ȧ_l = ε Σ W^{lα}_{μν} conj(a_α) a_μ a_ν e^{iω̃ t} - Ω_l a_l`,
//! `ω̃ = ω^{lα}_{μν} + Ω_l + Ω_α - Ω_μ - Ω_ν`.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{invalid, Result, WtError};
use crate::lattice::{self, FourierLattice, Quartet, Triad};
use crate::systems::{Order, WaveSystem};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

#[derive(Debug, Clone, PartialEq)]
pub struct WaveField {
    pub lattice: Arc<FourierLattice>,
    pub amplitudes: Vec<Complex64>,
    pub time: f64,
}

impl WaveField {
    pub fn new(lattice: Arc<FourierLattice>, amplitudes: Vec<Complex64>, time: f64) -> Result<Self> {
        if amplitudes.len() != lattice.n_modes() {
            return Err(WtError::LengthMismatch {
                what: "amplitudes",
                expected: lattice.n_modes(),
                found: amplitudes.len(),
            });
        }
        if let Some(mode) = amplitudes.iter().position(|a| !a.is_finite()) {
            return Err(WtError::BlowUp { time, mode });
        }
        Ok(Self {
            lattice,
            amplitudes,
            time,
        })
    }

    pub fn zeros(lattice: Arc<FourierLattice>) -> Self {
        let n = lattice.n_modes();
        Self {
            lattice,
            amplitudes: vec![Complex64::new(0.0, 0.0); n],
            time: 0.0,
        }
    }

    pub fn intensities(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }

    pub fn waveaction(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }
}

/// Per-mode nonlinear frequency shift `Ω_l` (includes the factor ε).
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyShift(pub Vec<f64>);

impl FrequencyShift {
    pub fn zeros(n: usize) -> Self {
        Self(vec![0.0; n])
    }
}

#[derive(Debug, Clone, Copy)]
struct TriadTerm {
    j: usize,
    m: usize,
    n: usize,
    v: Complex64,
}

#[derive(Debug, Clone, Copy)]
struct QuartetTerm {
    j: usize,
    l: usize,
    m: usize,
    n: usize,
    w: Complex64,
}

/// Three-wave interaction terms with couplings evaluated once.
#[derive(Debug, Clone)]
pub struct ThreeWaveModel {
    omega: Vec<f64>,
    epsilon: f64,
    terms: Vec<TriadTerm>,
}

impl ThreeWaveModel {
    pub fn new(lattice: &FourierLattice, system: &WaveSystem, triads: &[Triad]) -> Result<Self> {
        if system.order() != Order::ThreeWave {
            return Err(WtError::OrderMismatch {
                expected: "three-wave",
                found: system.order().name(),
            });
        }
        let omega = lattice::frequencies(lattice, system)?;
        let mut terms = Vec::with_capacity(triads.len());
        for t in triads {
            let v = system.coupling3(
                lattice.wavevector(t.j),
                lattice.wavevector(t.m),
                lattice.wavevector(t.n),
            )?;
            if v.norm_sqr() > 0.0 {
                terms.push(TriadTerm {
                    j: t.j,
                    m: t.m,
                    n: t.n,
                    v,
                });
            }
        }
        Ok(Self {
            omega,
            epsilon: system.epsilon,
            terms,
        })
    }

    /// Model over every momentum-conserving triad of the lattice.
    pub fn full(lattice: &FourierLattice, system: &WaveSystem) -> Result<Self> {
        let triads = lattice::find_triads(lattice, system, f64::INFINITY)?;
        Self::new(lattice, system, &triads)
    }

    pub fn omega(&self) -> &[f64] {
        &self.omega
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn n_terms(&self) -> usize {
        self.terms.len()
    }

    /// Iterates `(j, m, n, V^j_mn)` over the stored terms.
    pub fn couplings(&self) -> impl Iterator<Item = (usize, usize, usize, Complex64)> + '_ {
        self.terms.iter().map(|t| (t.j, t.m, t.n, t.v))
    }

    fn phases(&self, t: f64) -> Vec<Complex64> {
        self.omega.iter().map(|w| Complex64::cis(w * t)).collect()
    }

    pub fn rhs_into(&self, a: &[Complex64], t: f64, out: &mut [Complex64]) {
        out.iter_mut().for_each(|o| *o = Complex64::new(0.0, 0.0));
        let z = self.phases(t);
        let scale = -I * self.epsilon;
        for term in &self.terms {
            // e^{iω^j_mn t}
            let e = z[term.j] * (z[term.m] * z[term.n]).conj();
            out[term.j] += scale * term.v * a[term.m] * a[term.n] * e;
            out[term.m] += scale * 2.0 * term.v.conj() * a[term.n].conj() * a[term.j] * e.conj();
        }
    }

    pub fn hamiltonian(&self, a: &[Complex64], t: f64) -> f64 {
        let h2: f64 = self
            .omega
            .iter()
            .zip(a)
            .map(|(w, x)| w * x.norm_sqr())
            .sum();
        let z = self.phases(t);
        let mut h3 = 0.0;
        for term in &self.terms {
            let e = z[term.j] * (z[term.m] * z[term.n]).conj();
            h3 += (term.v * a[term.j].conj() * a[term.m] * a[term.n] * e).re;
        }
        h2 + 2.0 * self.epsilon * h3
    }
}

/// How `Ω` is maintained during integration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ShiftPolicy {
    /// Recompute from the instantaneous intensities at the start of every step.
    #[default]
    Refresh,
    /// Keep the value computed from the initial field.
    Frozen,
}

/// Four-wave interaction terms plus the diagonal couplings `W^{lμ}_{lμ}` used for `Ω`.
#[derive(Debug, Clone)]
pub struct FourWaveModel {
    omega: Vec<f64>,
    epsilon: f64,
    terms: Vec<QuartetTerm>,
    diag: Vec<f64>,
}

impl FourWaveModel {
    pub fn new(lattice: &FourierLattice, system: &WaveSystem, quartets: &[Quartet]) -> Result<Self> {
        if system.order() != Order::FourWave {
            return Err(WtError::OrderMismatch {
                expected: "four-wave",
                found: system.order().name(),
            });
        }
        let omega = lattice::frequencies(lattice, system)?;
        let mut terms = Vec::with_capacity(quartets.len());
        for q in quartets {
            let w = system.coupling4(
                lattice.wavevector(q.j),
                lattice.wavevector(q.l),
                lattice.wavevector(q.m),
                lattice.wavevector(q.n),
            )?;
            if w.norm_sqr() > 0.0 {
                terms.push(QuartetTerm {
                    j: q.j,
                    l: q.l,
                    m: q.m,
                    n: q.n,
                    w,
                });
            }
        }
        let n = lattice.n_modes();
        let mut diag = vec![0.0; n * n];
        for l in 0..n {
            let kl = lattice.wavevector(l);
            for mu in 0..n {
                let kmu = lattice.wavevector(mu);
                diag[l * n + mu] = system.coupling4(kl, kmu, kl, kmu)?.re;
            }
        }
        Ok(Self {
            omega,
            epsilon: system.epsilon,
            terms,
            diag,
        })
    }

    pub fn full(lattice: &FourierLattice, system: &WaveSystem) -> Result<Self> {
        let quartets = lattice::find_quartets(lattice, system, f64::INFINITY)?;
        Self::new(lattice, system, &quartets)
    }

    pub fn omega(&self) -> &[f64] {
        &self.omega
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn n_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn couplings(&self) -> impl Iterator<Item = (usize, usize, usize, usize, Complex64)> + '_ {
        self.terms.iter().map(|t| (t.j, t.l, t.m, t.n, t.w))
    }

    /// `W^{lμ}_{lμ}`.
    pub fn diagonal(&self, l: usize, mu: usize) -> f64 {
        self.diag[l * self.omega.len() + mu]
    }

    /// `Ω_l = 2ε Σ_μ W^{lμ}_{lμ} |a_μ|²`.
    pub fn shift(&self, a: &[Complex64]) -> FrequencyShift {
        let n = self.omega.len();
        let s: Vec<f64> = a.iter().map(|x| x.norm_sqr()).collect();
        FrequencyShift(
            (0..n)
                .map(|l| {
                    let row = &self.diag[l * n..(l + 1) * n];
                    2.0 * self.epsilon * row.iter().zip(&s).map(|(w, x)| w * x).sum::<f64>()
                })
                .collect(),
        )
    }

    fn phases(&self, shift: &FrequencyShift, t: f64) -> Vec<Complex64> {
        self.omega
            .iter()
            .zip(&shift.0)
            .map(|(w, o)| Complex64::cis((w + o) * t))
            .collect()
    }

    pub fn rhs_into(&self, a: &[Complex64], shift: &FrequencyShift, t: f64, out: &mut [Complex64]) {
        let z = self.phases(shift, t);
        let scale = -I * self.epsilon;
        for (o, (x, om)) in out.iter_mut().zip(a.iter().zip(&shift.0)) {
            *o = I * om * x;
        }
        for q in &self.terms {
            let e = z[q.j] * z[q.l] * (z[q.m] * z[q.n]).conj();
            out[q.j] += scale * q.w * a[q.l].conj() * a[q.m] * a[q.n] * e;
        }
    }

    /// `Σ ω|a|² + (ε/2) Σ W conj(a_j a_l) a_m a_n e^{iω̃t}`.
    pub fn hamiltonian(&self, a: &[Complex64], shift: &FrequencyShift, t: f64) -> f64 {
        let h2: f64 = self
            .omega
            .iter()
            .zip(a)
            .map(|(w, x)| w * x.norm_sqr())
            .sum();
        let z = self.phases(shift, t);
        let mut h4 = 0.0;
        for q in &self.terms {
            let e = z[q.j] * z[q.l] * (z[q.m] * z[q.n]).conj();
            h4 += (q.w * (a[q.j] * a[q.l]).conj() * a[q.m] * a[q.n] * e).re;
        }
        h2 + 0.5 * self.epsilon * h4
    }
}

/// Either interaction order, ready for integration.
#[derive(Debug, Clone)]
pub enum InteractionModel {
    Three(ThreeWaveModel),
    Four(FourWaveModel),
}

impl InteractionModel {
    /// Builds the model over all momentum-conserving tuples of the lattice.
    pub fn full(lattice: &FourierLattice, system: &WaveSystem) -> Result<Self> {
        Ok(match system.order() {
            Order::ThreeWave => Self::Three(ThreeWaveModel::full(lattice, system)?),
            Order::FourWave => Self::Four(FourWaveModel::full(lattice, system)?),
        })
    }

    pub fn omega(&self) -> &[f64] {
        match self {
            Self::Three(m) => m.omega(),
            Self::Four(m) => m.omega(),
        }
    }

    /// Largest step resolving the fastest linear oscillation with 20 points per period.
    pub fn max_step(&self) -> f64 {
        let wmax = self.omega().iter().fold(0.0f64, |acc, w| acc.max(w.abs()));
        if wmax == 0.0 {
            f64::INFINITY
        } else {
            2.0 * PI / wmax / 20.0
        }
    }

    pub fn hamiltonian(&self, field: &WaveField) -> f64 {
        match self {
            Self::Three(m) => m.hamiltonian(&field.amplitudes, field.time),
            Self::Four(m) => {
                let shift = m.shift(&field.amplitudes);
                m.hamiltonian(&field.amplitudes, &shift, field.time)
            }
        }
    }
}

pub fn rhs_three_wave(
    field: &WaveField,
    system: &WaveSystem,
    triads: &[Triad],
) -> Result<Vec<Complex64>> {
    let model = ThreeWaveModel::new(&field.lattice, system, triads)?;
    let mut out = vec![Complex64::new(0.0, 0.0); field.amplitudes.len()];
    model.rhs_into(&field.amplitudes, field.time, &mut out);
    Ok(out)
}

pub fn rhs_four_wave(
    field: &WaveField,
    system: &WaveSystem,
    quartets: &[Quartet],
    shift: &FrequencyShift,
) -> Result<Vec<Complex64>> {
    let model = FourWaveModel::new(&field.lattice, system, quartets)?;
    if shift.0.len() != field.amplitudes.len() {
        return Err(WtError::LengthMismatch {
            what: "frequency shift",
            expected: field.amplitudes.len(),
            found: shift.0.len(),
        });
    }
    let mut out = vec![Complex64::new(0.0, 0.0); field.amplitudes.len()];
    model.rhs_into(&field.amplitudes, shift, field.time, &mut out);
    Ok(out)
}

pub fn hamiltonian(field: &WaveField, system: &WaveSystem) -> Result<f64> {
    let model = InteractionModel::full(&field.lattice, system)?;
    Ok(model.hamiltonian(field))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegrateOptions {
    pub dt: f64,
    /// Record the state every this many steps (plus the final state).
    pub sample_every: Option<usize>,
    pub shift_policy: ShiftPolicy,
}

impl IntegrateOptions {
    pub fn with_dt(dt: f64) -> Self {
        Self {
            dt,
            sample_every: None,
            shift_policy: ShiftPolicy::Refresh,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub field: WaveField,
    pub samples: Vec<(f64, Vec<Complex64>)>,
}

/// Advances `field` by `duration` with classical RK4.
///
/// The step is `duration / ceil(duration / dt)`, so it never exceeds `dt`.
pub fn integrate(
    field: &WaveField,
    model: &InteractionModel,
    duration: f64,
    opts: &IntegrateOptions,
) -> Result<Trajectory> {
    if !(duration >= 0.0) || !duration.is_finite() {
        return Err(invalid("duration", format!("must be non-negative, got {duration}")));
    }
    if !(opts.dt > 0.0) {
        return Err(invalid("dt", format!("must be positive, got {}", opts.dt)));
    }
    let bound = model.max_step();
    if opts.dt > bound * (1.0 + 1e-12) {
        return Err(WtError::StepTooLarge {
            dt: opts.dt,
            bound,
        });
    }
    let n = field.amplitudes.len();
    if n != model.omega().len() {
        return Err(WtError::LengthMismatch {
            what: "amplitudes",
            expected: model.omega().len(),
            found: n,
        });
    }
    let steps = (duration / opts.dt - 1e-9).ceil().max(0.0) as usize;
    let h = if steps == 0 { 0.0 } else { duration / steps as f64 };

    let mut a = field.amplitudes.clone();
    let t0 = field.time;
    let mut samples = Vec::new();
    if opts.sample_every.is_some() {
        samples.push((t0, a.clone()));
    }
    let frozen = match model {
        InteractionModel::Four(m) => Some(m.shift(&a)),
        InteractionModel::Three(_) => None,
    };

    let zero = Complex64::new(0.0, 0.0);
    let (mut k1, mut k2, mut k3, mut k4) = (vec![zero; n], vec![zero; n], vec![zero; n], vec![zero; n]);
    let mut tmp = vec![zero; n];

    for step in 0..steps {
        let t = t0 + step as f64 * h;
        let shift = match (model, opts.shift_policy) {
            (InteractionModel::Four(m), ShiftPolicy::Refresh) => Some(m.shift(&a)),
            _ => frozen.clone(),
        };
        let eval = |x: &[Complex64], tt: f64, out: &mut [Complex64]| match model {
            InteractionModel::Three(m) => m.rhs_into(x, tt, out),
            InteractionModel::Four(m) => m.rhs_into(x, shift.as_ref().unwrap(), tt, out),
        };
        eval(&a, t, &mut k1);
        for i in 0..n {
            tmp[i] = a[i] + k1[i] * (0.5 * h);
        }
        eval(&tmp, t + 0.5 * h, &mut k2);
        for i in 0..n {
            tmp[i] = a[i] + k2[i] * (0.5 * h);
        }
        eval(&tmp, t + 0.5 * h, &mut k3);
        for i in 0..n {
            tmp[i] = a[i] + k3[i] * h;
        }
        eval(&tmp, t + h, &mut k4);
        for i in 0..n {
            a[i] += (k1[i] + (k2[i] + k3[i]) * 2.0 + k4[i]) * (h / 6.0);
        }
        if let Some(mode) = a.iter().position(|x| !x.is_finite()) {
            return Err(WtError::BlowUp {
                time: t + h,
                mode,
            });
        }
        if let Some(every) = opts.sample_every {
            if every > 0 && (step + 1) % every == 0 && step + 1 != steps {
                samples.push((t + h, a.clone()));
            }
        }
    }
    let t_end = t0 + duration;
    if opts.sample_every.is_some() && steps > 0 {
        samples.push((t_end, a.clone()));
    }
    Ok(Trajectory {
        field: WaveField {
            lattice: field.lattice.clone(),
            amplitudes: a,
            time: t_end,
        },
        samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::find_triads;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn capillary_setup(n_side: usize) -> (Arc<FourierLattice>, WaveSystem) {
        (
            Arc::new(FourierLattice::new(1, n_side, 2.0 * PI).unwrap()),
            WaveSystem::capillary(1.0, 0.1).unwrap(),
        )
    }

    #[test]
    fn zero_field_has_zero_derivative() {
        let (lat, sys) = capillary_setup(8);
        let triads = find_triads(&lat, &sys, f64::INFINITY).unwrap();
        let f = WaveField::zeros(lat.clone());
        let d = rhs_three_wave(&f, &sys, &triads).unwrap();
        assert!(d.iter().all(|x| x.norm() == 0.0));

        let nls = WaveSystem::nls(0.1).unwrap();
        let q = lattice::find_quartets(&lat, &nls, f64::INFINITY).unwrap();
        let d = rhs_four_wave(&f, &nls, &q, &FrequencyShift::zeros(8)).unwrap();
        assert!(d.iter().all(|x| x.norm() == 0.0));
    }

    #[test]
    fn lone_mode_has_no_three_wave_partners() {
        let (lat, sys) = capillary_setup(8);
        let triads = find_triads(&lat, &sys, f64::INFINITY).unwrap();
        let mut f = WaveField::zeros(lat.clone());
        let m = lat.mode_of_wavevector([3.0, 0.0, 0.0]).unwrap();
        f.amplitudes[m] = c(0.3, -0.2);
        let d = rhs_three_wave(&f, &sys, &triads).unwrap();
        // 3 + 3 = 6 is outside the 8-mode box and -3 is not excited.
        assert!(d.iter().all(|x| x.norm() == 0.0));
    }

    #[test]
    fn single_nls_mode_rotates_at_minus_eps_intensity() {
        let lat = Arc::new(FourierLattice::new(1, 8, 2.0 * PI).unwrap());
        let sys = WaveSystem::nls(0.05).unwrap();
        let model = FourWaveModel::full(&lat, &sys).unwrap();
        let mut a = vec![c(0.0, 0.0); 8];
        let l = lat.mode_of_wavevector([2.0, 0.0, 0.0]).unwrap();
        a[l] = c(1.2, 0.5);
        let shift = model.shift(&a);
        let mut out = vec![c(0.0, 0.0); 8];
        model.rhs_into(&a, &shift, 0.37, &mut out);
        // i ȧ = ε|a|²a - 2ε|a|²a = -ε|a|²a
        let expected = I * 0.05 * a[l].norm_sqr() * a[l];
        assert!((out[l] - expected).norm() < 1e-15);
    }

    #[test]
    fn epsilon_zero_freezes_the_field() {
        let (lat, _) = capillary_setup(8);
        let sys = WaveSystem::capillary(1.0, 0.0).unwrap();
        let model = InteractionModel::full(&lat, &sys).unwrap();
        let amps: Vec<Complex64> = (0..8).map(|i| c(i as f64 * 0.1, 0.05)).collect();
        let f = WaveField::new(lat.clone(), amps.clone(), 0.0).unwrap();
        let out = integrate(&f, &model, 3.0, &IntegrateOptions::with_dt(model.max_step())).unwrap();
        assert_eq!(out.field.amplitudes, amps);
        assert!((out.field.time - 3.0).abs() < 1e-15);
    }

    #[test]
    fn step_above_bound_is_rejected() {
        let (lat, sys) = capillary_setup(8);
        let model = InteractionModel::full(&lat, &sys).unwrap();
        let f = WaveField::zeros(lat);
        let err = integrate(&f, &model, 1.0, &IntegrateOptions::with_dt(1.0)).unwrap_err();
        assert!(matches!(err, WtError::StepTooLarge { .. }));
    }

    #[test]
    fn blow_up_is_reported() {
        let (lat, _) = capillary_setup(8);
        let sys = WaveSystem::capillary(1.0, 0.1).unwrap();
        let model = InteractionModel::full(&lat, &sys).unwrap();
        let amps: Vec<Complex64> = (0..8).map(|_| c(1e150, 1e150)).collect();
        let f = WaveField::new(lat, amps, 0.0).unwrap();
        let err = integrate(&f, &model, 1.0, &IntegrateOptions::with_dt(1e-3)).unwrap_err();
        assert!(matches!(err, WtError::BlowUp { .. }));
    }

    #[test]
    fn sampling_records_start_and_end() {
        let (lat, sys) = capillary_setup(8);
        let model = InteractionModel::full(&lat, &sys).unwrap();
        let f = WaveField::zeros(lat);
        let opts = IntegrateOptions {
            dt: 0.01,
            sample_every: Some(10),
            shift_policy: ShiftPolicy::Refresh,
        };
        let out = integrate(&f, &model, 0.5, &opts).unwrap();
        let times: Vec<f64> = out.samples.iter().map(|s| s.0).collect();
        assert_eq!(times.len(), 6);
        assert_eq!(times[0], 0.0);
        assert!((times[5] - 0.5).abs() < 1e-12);
        assert!(times.windows(2).all(|w| w[1] > w[0]));
    }
}
