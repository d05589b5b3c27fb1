//! Random-phase ensembles and the statistics measured on them.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::WaveField;
use crate::error::{invalid, Result, WtError};
use crate::lattice::FourierLattice;
use crate::rng;

/// Shape of the one-mode intensity law `s = |a|²`, scaled per mode by `n_l`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum LawShape {
    /// `s = n` exactly.
    DeterministicLevel,
    /// `s = -n ln U`, the intensity law of a Gaussian field.
    Rayleigh,
    /// `s = n·v_i` with probability `w_i`.
    Tabulated { values: Vec<f64>, weights: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AmplitudeLaw {
    pub shape: LawShape,
    pub scale: Vec<f64>,
}

impl AmplitudeLaw {
    pub fn new(shape: LawShape, scale: Vec<f64>) -> Result<Self> {
        if let Some(i) = scale.iter().position(|n| !(*n >= 0.0) || !n.is_finite()) {
            return Err(invalid("scale", format!("entry {i} is {} (must be finite and >= 0)", scale[i])));
        }
        if let LawShape::Tabulated { values, weights } = &shape {
            if values.is_empty() || values.len() != weights.len() {
                return Err(invalid("tabulated law", "values and weights must be non-empty and of equal length"));
            }
            if values.iter().chain(weights).any(|v| !(*v >= 0.0) || !v.is_finite()) {
                return Err(invalid("tabulated law", "values and weights must be finite and >= 0"));
            }
            if !(weights.iter().sum::<f64>() > 0.0) {
                return Err(invalid("tabulated law", "weights must not all vanish"));
            }
        }
        Ok(Self { shape, scale })
    }

    pub fn deterministic(scale: Vec<f64>) -> Result<Self> {
        Self::new(LawShape::DeterministicLevel, scale)
    }

    pub fn rayleigh(scale: Vec<f64>) -> Result<Self> {
        Self::new(LawShape::Rayleigh, scale)
    }

    /// `E[(s/n)^p]` for `p = 0..=3`.
    pub fn intensity_factors(&self) -> [f64; 4] {
        match &self.shape {
            LawShape::DeterministicLevel => [1.0; 4],
            LawShape::Rayleigh => [1.0, 1.0, 2.0, 6.0],
            LawShape::Tabulated { values, weights } => {
                let total: f64 = weights.iter().sum();
                let mut f = [0.0; 4];
                for (p, slot) in f.iter_mut().enumerate() {
                    *slot = values.iter().zip(weights).map(|(v, w)| w * v.powi(p as i32)).sum::<f64>() / total;
                }
                f
            }
        }
    }

    fn draw_intensity(&self, mode: usize, u: f64) -> f64 {
        let n = self.scale[mode];
        match &self.shape {
            LawShape::DeterministicLevel => n,
            LawShape::Rayleigh => -n * u.ln(),
            LawShape::Tabulated { values, weights } => {
                let total: f64 = weights.iter().sum();
                let mut acc = 0.0;
                for (v, w) in values.iter().zip(weights) {
                    acc += w / total;
                    if u <= acc {
                        return n * v;
                    }
                }
                n * values[values.len() - 1]
            }
        }
    }
}

/// One RPA realization: i.i.d. uniform phases, amplitudes drawn per mode from `law`.
///
/// The zero mode is left at zero. The draw for `(seed, realization, mode)` is fixed.
pub fn generate_rpa_field(
    lattice: Arc<FourierLattice>,
    law: &AmplitudeLaw,
    seed: u64,
    realization: u64,
) -> Result<WaveField> {
    let n = lattice.n_modes();
    if law.scale.len() != n {
        return Err(WtError::LengthMismatch {
            what: "law scale",
            expected: n,
            found: law.scale.len(),
        });
    }
    let zero = lattice.zero_mode();
    let amps = (0..n)
        .map(|mode| {
            if mode == zero {
                return Complex64::new(0.0, 0.0);
            }
            let mut r = rng::stream(seed, realization, mode as u64);
            let phase = 2.0 * PI * r.random::<f64>();
            let u = rng::open_unit(&mut r);
            Complex64::from_polar(law.draw_intensity(mode, u).sqrt(), phase)
        })
        .collect();
    WaveField::new(lattice, amps, 0.0)
}

/// Realizations `0..count`, generated in parallel; order is by realization index.
pub fn generate_ensemble(
    lattice: Arc<FourierLattice>,
    law: &AmplitudeLaw,
    seed: u64,
    count: usize,
) -> Result<Vec<WaveField>> {
    (0..count as u64)
        .into_par_iter()
        .map(|r| generate_rpa_field(lattice.clone(), law, seed, r))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnsembleStats {
    pub realizations: usize,
    /// `n_k = ⟨A_k²⟩`.
    pub spectrum: Vec<f64>,
    /// `moments[p-1][k] = ⟨A_k^{2p}⟩`, `p = 1..=p_max`.
    pub moments: Vec<Vec<f64>>,
    /// Standard error of each entry of `moments`.
    pub moment_stderr: Vec<Vec<f64>>,
    /// `σ_k = sqrt(M^(2) - n_k²)`, clamped at zero.
    pub sigma: Vec<f64>,
    pub psi_mean: Vec<Complex64>,
    /// `Q_k = ⟨A⁴⟩ - 2⟨A²⟩²`; present when `p_max ≥ 2`.
    pub singular_cumulant: Option<Vec<f64>>,
}

fn check_ensemble(ensemble: &[WaveField], min: usize) -> Result<usize> {
    if ensemble.is_empty() {
        return Err(WtError::EmptyEnsemble);
    }
    if ensemble.len() < min {
        return Err(invalid("ensemble", format!("needs at least {min} realizations, got {}", ensemble.len())));
    }
    let n = ensemble[0].amplitudes.len();
    if let Some(f) = ensemble.iter().find(|f| f.amplitudes.len() != n) {
        return Err(WtError::LengthMismatch {
            what: "realization",
            expected: n,
            found: f.amplitudes.len(),
        });
    }
    Ok(n)
}

fn unit_phase(a: Complex64) -> Complex64 {
    let r = a.norm();
    if r > 0.0 {
        a / r
    } else {
        Complex64::new(0.0, 0.0)
    }
}

/// Sample means of `A^{2p}` with standard errors of the mean.
pub fn estimate_moments(ensemble: &[WaveField], p_max: usize) -> Result<EnsembleStats> {
    let n = check_ensemble(ensemble, 2)?;
    if p_max == 0 {
        return Err(invalid("p_max", "must be at least 1"));
    }
    let r = ensemble.len() as f64;
    let mut moments = vec![vec![0.0; n]; p_max];
    let mut stderr = vec![vec![0.0; n]; p_max];
    let mut psi_mean = vec![Complex64::new(0.0, 0.0); n];
    for k in 0..n {
        for p in 1..=p_max {
            let vals: Vec<f64> = ensemble
                .iter()
                .map(|f| f.amplitudes[k].norm_sqr().powi(p as i32))
                .collect();
            let mean = vals.iter().sum::<f64>() / r;
            let var = vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (r - 1.0);
            moments[p - 1][k] = mean;
            stderr[p - 1][k] = (var / r).sqrt();
        }
        psi_mean[k] = ensemble.iter().map(|f| unit_phase(f.amplitudes[k])).sum::<Complex64>() / r;
    }
    let spectrum = moments[0].clone();
    let (sigma, q) = if p_max >= 2 {
        let sigma = (0..n)
            .map(|k| (moments[1][k] - spectrum[k] * spectrum[k]).max(0.0).sqrt())
            .collect();
        let q = (0..n)
            .map(|k| moments[1][k] - 2.0 * spectrum[k] * spectrum[k])
            .collect();
        (sigma, Some(q))
    } else {
        (vec![f64::NAN; n], None)
    };
    Ok(EnsembleStats {
        realizations: ensemble.len(),
        spectrum,
        moments,
        moment_stderr: stderr,
        sigma,
        psi_mean,
        singular_cumulant: q,
    })
}

/// `Q_k = ⟨A_k⁴⟩ - 2⟨A_k²⟩²` per mode.
pub fn singular_cumulant(ensemble: &[WaveField]) -> Result<Vec<f64>> {
    let n = check_ensemble(ensemble, 1)?;
    let r = ensemble.len() as f64;
    Ok((0..n)
        .map(|k| {
            let m1 = ensemble.iter().map(|f| f.amplitudes[k].norm_sqr()).sum::<f64>() / r;
            let m2 = ensemble.iter().map(|f| f.amplitudes[k].norm_sqr().powi(2)).sum::<f64>() / r;
            m2 - 2.0 * m1 * m1
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub density: Vec<f64>,
    pub stderr: Vec<f64>,
    /// Samples that fell outside `[edges[0], edges[last]]`.
    pub outside: usize,
    /// Fewer than ten samples per bin on average.
    pub undersampled: bool,
}

impl Histogram {
    pub fn centers(&self) -> Vec<f64> {
        self.edges.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect()
    }
}

/// Binned `P(s) = ⟨δ(|a_j|² - s)⟩`, normalised over the samples inside the grid.
pub fn estimate_one_mode_pdf(ensemble: &[WaveField], mode: usize, edges: &[f64]) -> Result<Histogram> {
    let n = check_ensemble(ensemble, 1)?;
    if mode >= n {
        return Err(WtError::ModeOutOfSet { mode, count: n });
    }
    let samples: Vec<f64> = ensemble.iter().map(|f| f.amplitudes[mode].norm_sqr()).collect();
    histogram(&samples, edges)
}

pub fn histogram(samples: &[f64], edges: &[f64]) -> Result<Histogram> {
    if edges.len() < 2 || edges.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(invalid("s-grid", "edges must be strictly increasing with at least two entries"));
    }
    let bins = edges.len() - 1;
    let mut counts = vec![0usize; bins];
    let mut outside = 0;
    let last = edges[bins];
    for &s in samples {
        if s < edges[0] || s > last {
            outside += 1;
            continue;
        }
        let i = edges.partition_point(|e| *e <= s).saturating_sub(1).min(bins - 1);
        counts[i] += 1;
    }
    let inside = (samples.len() - outside) as f64;
    let undersampled = inside < 10.0 * bins as f64;
    if undersampled {
        log::warn!("histogram has {inside} samples for {bins} bins");
    }
    let mut density = vec![0.0; bins];
    let mut stderr = vec![0.0; bins];
    if inside > 0.0 {
        for i in 0..bins {
            let w = edges[i + 1] - edges[i];
            let p = counts[i] as f64 / inside;
            density[i] = p / w;
            stderr[i] = (p * (1.0 - p) / inside).sqrt() / w;
        }
    }
    Ok(Histogram {
        edges: edges.to_vec(),
        density,
        stderr,
        outside,
        undersampled,
    })
}

/// Kolmogorov-Smirnov distance between the empirical law of `samples` and `cdf`.
pub fn ks_distance(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut s = samples.to_vec();
    s.sort_by(|a, b| a.total_cmp(b));
    let m = s.len() as f64;
    s.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / m).abs().max(((i + 1) as f64 / m - f).abs())
        })
        .fold(0.0, f64::max)
}

/// Rayleigh test of circular uniformity; returns the approximate p-value.
pub fn rayleigh_test(phases: &[Complex64]) -> f64 {
    let r = phases.len() as f64;
    let resultant = phases.iter().sum::<Complex64>().norm();
    let z = resultant * resultant / r;
    let p = (((1.0 + 4.0 * r + 4.0 * (r * r - resultant * resultant)).sqrt()) - (1.0 + 2.0 * r)).exp();
    if p.is_finite() {
        p.clamp(0.0, 1.0)
    } else {
        (-z).exp()
    }
}

/// Bias-corrected squared distance correlation of paired samples in `R^dx × R^dy`.
///
/// Zero in expectation for independent variables.
pub fn distance_correlation(x: &[Vec<f64>], y: &[Vec<f64>]) -> Result<f64> {
    let m = x.len();
    if m != y.len() {
        return Err(WtError::LengthMismatch {
            what: "paired samples",
            expected: m,
            found: y.len(),
        });
    }
    if m < 4 {
        return Err(invalid("samples", "distance correlation needs at least 4 pairs"));
    }
    let dist = |p: &[f64], q: &[f64]| p.iter().zip(q).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
    let ucenter = |pts: &[Vec<f64>]| {
        let mut d = vec![0.0; m * m];
        for i in 0..m {
            for j in 0..m {
                d[i * m + j] = dist(&pts[i], &pts[j]);
            }
        }
        let row: Vec<f64> = (0..m).map(|i| d[i * m..(i + 1) * m].iter().sum()).collect();
        let total: f64 = row.iter().sum();
        let mf = m as f64;
        for i in 0..m {
            for j in 0..m {
                d[i * m + j] = if i == j {
                    0.0
                } else {
                    d[i * m + j] - row[i] / (mf - 2.0) - row[j] / (mf - 2.0) + total / ((mf - 1.0) * (mf - 2.0))
                };
            }
        }
        d
    };
    let a = ucenter(x);
    let b = ucenter(y);
    let dot = |u: &[f64], v: &[f64]| u.iter().zip(v).map(|(p, q)| p * q).sum::<f64>();
    let vxy = dot(&a, &b);
    let vxx = dot(&a, &a);
    let vyy = dot(&b, &b);
    if vxx <= 0.0 || vyy <= 0.0 {
        return Ok(0.0);
    }
    Ok(vxy / (vxx * vyy).sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairStat {
    pub l: usize,
    pub m: usize,
    /// `⟨ψ_l ψ_m⟩`.
    pub psi_psi: Complex64,
    /// `⟨ψ_l conj(ψ_m)⟩`.
    pub psi_psibar: Complex64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhaseDiagnostics {
    pub realizations: usize,
    pub threshold: f64,
    /// Modes with nonzero amplitude in every realization.
    pub modes: Vec<usize>,
    pub psi_mean: Vec<Complex64>,
    pub pairs: Vec<PairStat>,
    /// Rayleigh-test p-value per entry of `modes`.
    pub uniformity_p: Vec<f64>,
    /// Entries of `modes` whose p-value falls below 0.01.
    pub nonuniform_modes: Vec<usize>,
    pub max_mean: f64,
    pub max_pair: f64,
}

impl PhaseDiagnostics {
    /// Every `⟨ψ⟩`, `⟨ψψ⟩` and off-diagonal `⟨ψψ̄⟩` lies below `3/√R`.
    pub fn passes(&self) -> bool {
        self.max_mean < self.threshold && self.max_pair < self.threshold
    }
}

/// Pairs over `modes`: all of them up to 128 modes, otherwise `max_pairs` sampled distinct pairs.
pub fn sample_pairs(count: usize, max_pairs: usize, seed: u64) -> Vec<(usize, usize)> {
    if count <= 128 {
        let mut v = Vec::with_capacity(count * count.saturating_sub(1) / 2);
        for i in 0..count {
            for j in i + 1..count {
                v.push((i, j));
            }
        }
        return v;
    }
    let total = count * (count - 1) / 2;
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    let mut picks: Vec<usize> = sample(&mut r, total, max_pairs.min(total)).into_vec();
    picks.sort_unstable();
    picks
        .into_iter()
        .map(|mut idx| {
            let mut i = 0;
            while idx >= count - 1 - i {
                idx -= count - 1 - i;
                i += 1;
            }
            (i, i + 1 + idx)
        })
        .collect()
}

pub fn phase_diagnostics(ensemble: &[WaveField], max_pairs: usize, seed: u64) -> Result<PhaseDiagnostics> {
    let n = check_ensemble(ensemble, 2)?;
    let r = ensemble.len();
    if r < 100 {
        log::warn!("phase diagnostics on {r} realizations; verdicts need at least 100");
    }
    let modes: Vec<usize> = (0..n)
        .filter(|&k| ensemble.iter().all(|f| f.amplitudes[k].norm_sqr() > 0.0))
        .collect();
    let psi: Vec<Vec<Complex64>> = modes
        .iter()
        .map(|&k| ensemble.iter().map(|f| unit_phase(f.amplitudes[k])).collect())
        .collect();
    let rf = r as f64;
    let psi_mean: Vec<Complex64> = psi.iter().map(|v| v.iter().sum::<Complex64>() / rf).collect();
    let uniformity_p: Vec<f64> = psi.iter().map(|v| rayleigh_test(v)).collect();
    let nonuniform_modes = modes
        .iter()
        .zip(&uniformity_p)
        .filter(|(_, p)| **p < 0.01)
        .map(|(k, _)| *k)
        .collect();
    let pairs: Vec<PairStat> = sample_pairs(modes.len(), max_pairs, seed)
        .into_par_iter()
        .map(|(i, j)| {
            let (a, b) = (&psi[i], &psi[j]);
            PairStat {
                l: modes[i],
                m: modes[j],
                psi_psi: a.iter().zip(b).map(|(x, y)| x * y).sum::<Complex64>() / rf,
                psi_psibar: a.iter().zip(b).map(|(x, y)| x * y.conj()).sum::<Complex64>() / rf,
            }
        })
        .collect();
    let max_mean = psi_mean.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let max_pair = pairs
        .iter()
        .map(|p| p.psi_psi.norm().max(p.psi_psibar.norm()))
        .fold(0.0, f64::max);
    Ok(PhaseDiagnostics {
        realizations: r,
        threshold: 3.0 / rf.sqrt(),
        modes,
        psi_mean,
        pairs,
        uniformity_p,
        nonuniform_modes,
        max_mean,
        max_pair,
    })
}

/// Distance correlation between `|a_k|` and `ψ_k` (embedded on the unit circle) for one mode.
pub fn amplitude_phase_dependence(ensemble: &[WaveField], mode: usize) -> Result<f64> {
    let n = check_ensemble(ensemble, 4)?;
    if mode >= n {
        return Err(WtError::ModeOutOfSet { mode, count: n });
    }
    let x: Vec<Vec<f64>> = ensemble.iter().map(|f| vec![f.amplitudes[mode].norm()]).collect();
    let y: Vec<Vec<f64>> = ensemble
        .iter()
        .map(|f| {
            let p = unit_phase(f.amplitudes[mode]);
            vec![p.re, p.im]
        })
        .collect();
    distance_correlation(&x, &y)
}

/// Two phases `φ_i = 2πN + r_i` sharing a random integer `N`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhiPsiExample {
    pub realizations: usize,
    /// Sample covariance `⟨φ₁φ₂⟩ - ⟨φ₁⟩⟨φ₂⟩`.
    pub phi_covariance: f64,
    pub phi_covariance_stderr: f64,
    /// `4π² Var(N)` for `N` uniform on `{0, …, levels-1}`.
    pub expected_covariance: f64,
    pub psi_mean: [Complex64; 2],
    pub psi_psi: Complex64,
    pub psi_psibar: Complex64,
    pub threshold: f64,
}

impl PhiPsiExample {
    pub fn phi_within(&self, sigmas: f64) -> bool {
        (self.phi_covariance - self.expected_covariance).abs() <= sigmas * self.phi_covariance_stderr
    }

    pub fn psi_vanishes(&self) -> bool {
        self.psi_mean.iter().all(|z| z.norm() < self.threshold)
            && self.psi_psi.norm() < self.threshold
            && self.psi_psibar.norm() < self.threshold
    }
}

pub fn phi_psi_example(realizations: usize, levels: u32, seed: u64) -> Result<PhiPsiExample> {
    if realizations < 2 {
        return Err(invalid("realizations", "need at least 2"));
    }
    if levels < 1 {
        return Err(invalid("levels", "need at least 1"));
    }
    let draws: Vec<(f64, f64)> = (0..realizations as u64)
        .map(|i| {
            let mut g = rng::stream(seed, i, 0);
            let shared = g.random_range(0..levels) as f64;
            let r1 = 2.0 * PI * g.random::<f64>();
            let r2 = 2.0 * PI * g.random::<f64>();
            (2.0 * PI * shared + r1, 2.0 * PI * shared + r2)
        })
        .collect();
    let rf = realizations as f64;
    let m1 = draws.iter().map(|d| d.0).sum::<f64>() / rf;
    let m2 = draws.iter().map(|d| d.1).sum::<f64>() / rf;
    let prods: Vec<f64> = draws.iter().map(|d| (d.0 - m1) * (d.1 - m2)).collect();
    let cov = prods.iter().sum::<f64>() / (rf - 1.0);
    let var_p = prods.iter().map(|p| (p - cov) * (p - cov)).sum::<f64>() / (rf - 1.0);
    let l = levels as f64;
    let psi: Vec<(Complex64, Complex64)> = draws
        .iter()
        .map(|d| (Complex64::cis(d.0), Complex64::cis(d.1)))
        .collect();
    Ok(PhiPsiExample {
        realizations,
        phi_covariance: cov,
        phi_covariance_stderr: (var_p / rf).sqrt(),
        expected_covariance: 4.0 * PI * PI * (l * l - 1.0) / 12.0,
        psi_mean: [
            psi.iter().map(|p| p.0).sum::<Complex64>() / rf,
            psi.iter().map(|p| p.1).sum::<Complex64>() / rf,
        ],
        psi_psi: psi.iter().map(|p| p.0 * p.1).sum::<Complex64>() / rf,
        psi_psibar: psi.iter().map(|p| p.0 * p.1.conj()).sum::<Complex64>() / rf,
        threshold: 3.0 / rf.sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lattice() -> Arc<FourierLattice> {
        Arc::new(FourierLattice::new(1, 16, 2.0 * PI).unwrap())
    }

    #[test]
    fn deterministic_level_fixes_intensity() {
        let lat = lattice();
        let scale: Vec<f64> = (0..16).map(|i| 0.1 + i as f64 * 0.01).collect();
        let law = AmplitudeLaw::deterministic(scale.clone()).unwrap();
        let f = generate_rpa_field(lat.clone(), &law, 3, 0).unwrap();
        for (k, a) in f.amplitudes.iter().enumerate() {
            let expect = if k == lat.zero_mode() { 0.0 } else { scale[k] };
            assert!((a.norm_sqr() - expect).abs() < 1e-15);
        }
        let g = generate_rpa_field(lat, &law, 3, 0).unwrap();
        assert_eq!(f.amplitudes, g.amplitudes);
    }

    #[test]
    fn two_realization_means_by_hand() {
        let lat = Arc::new(FourierLattice::new(1, 2, 2.0 * PI).unwrap());
        let f1 = WaveField::new(lat.clone(), vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 2.0)], 0.0).unwrap();
        let f2 = WaveField::new(lat, vec![Complex64::new(0.0, 3.0), Complex64::new(1.0, 0.0)], 0.0).unwrap();
        let st = estimate_moments(&[f1, f2], 2).unwrap();
        assert_eq!(st.spectrum, vec![5.0, 2.5]);
        assert_eq!(st.moments[1], vec![41.0, 8.5]);
        assert_eq!(st.singular_cumulant.unwrap(), vec![41.0 - 50.0, 8.5 - 12.5]);
    }

    #[test]
    fn intensity_factors_match_sampling() {
        let law = AmplitudeLaw::new(
            LawShape::Tabulated {
                values: vec![0.5, 2.0],
                weights: vec![3.0, 1.0],
            },
            vec![1.0],
        )
        .unwrap();
        assert_eq!(law.intensity_factors(), [1.0, 0.875, 1.1875, 2.09375]);
        let ray = AmplitudeLaw::rayleigh(vec![1.0]).unwrap();
        let m2: f64 = (0..20_000).map(|i| ray.draw_intensity(0, (i as f64 + 0.5) / 20_000.0).powi(2)).sum::<f64>() / 20_000.0;
        assert!((m2 - ray.intensity_factors()[2]).abs() < 1e-2);
    }

    #[test]
    fn empty_ensemble_is_an_error() {
        assert!(matches!(estimate_moments(&[], 2), Err(WtError::EmptyEnsemble)));
    }

    #[test]
    fn histogram_normalises() {
        let samples: Vec<f64> = (0..1000).map(|i| (i as f64 + 0.5) / 1000.0).collect();
        let edges = [0.0, 0.1, 0.35, 0.5, 1.0];
        let h = histogram(&samples, &edges).unwrap();
        let total: f64 = h.density.iter().zip(edges.windows(2)).map(|(p, w)| p * (w[1] - w[0])).sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn pair_sampling_decodes_distinct_pairs() {
        let pairs = sample_pairs(300, 1000, 9);
        assert_eq!(pairs.len(), 1000);
        assert!(pairs.iter().all(|(i, j)| i < j && *j < 300));
        let mut dedup = pairs.clone();
        dedup.dedup();
        assert_eq!(dedup.len(), 1000);
        assert_eq!(sample_pairs(4, 10, 0).len(), 6);
    }

    #[test]
    fn rayleigh_test_detects_concentration() {
        let uniform: Vec<Complex64> = (0..500).map(|i| Complex64::cis(2.0 * PI * i as f64 / 500.0)).collect();
        assert!(rayleigh_test(&uniform) > 0.5);
        let bunched: Vec<Complex64> = (0..500).map(|i| Complex64::cis(0.3 * (i as f64 / 500.0))).collect();
        assert!(rayleigh_test(&bunched) < 1e-6);
    }

    #[test]
    fn distance_correlation_separates_dependence() {
        let x: Vec<Vec<f64>> = (0..200).map(|i| vec![i as f64 / 200.0]).collect();
        let y: Vec<Vec<f64>> = x.iter().map(|v| vec![(6.0 * v[0]).sin()]).collect();
        assert!(distance_correlation(&x, &y).unwrap() > 0.3);
    }
}
