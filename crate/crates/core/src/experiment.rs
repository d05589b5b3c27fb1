//! Experiment pipelines and result emission.
//!
//! Each study is a pure function of its config (seed included) and returns plain data;
//! [`run_experiment`] writes the data as CSV tables plus a JSON summary and attaches the
//! verdicts from [`crate::verify`] that apply to the experiment kind.
//!
//! Parallel work is an ordered `collect` over realization or cell indices followed by
//! a sequential reduction, so outputs do not depend on the worker count.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{ExperimentConfig, ExperimentKind};
use crate::dynamics::{integrate, IntegrateOptions, InteractionModel, WaveField};
use crate::error::{Result, WtError};
use crate::kinetics::{self, KineticModel, KineticState};
use crate::lattice::FourierLattice;
use crate::onemode::{self, Grid, SteadyPdf};
use crate::output::{self, Cell, Manifest, Table};
use crate::pbp::{self, MultiModePdf, PbpModel, TensorGrid};
use crate::perturbation::{self, ResidualRow};
use crate::statistics::{self, generate_rpa_field, AmplitudeLaw, PhaseDiagnostics};
use crate::verify::{self, Verdict};

fn norm3(k: [f64; 3]) -> f64 {
    (k[0] * k[0] + k[1] * k[1] + k[2] * k[2]).sqrt()
}

// ---------------------------------------------------------------------------
// Perturbation scaling

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingStudy {
    pub rows: Vec<ResidualRow>,
    /// Log-log slopes of `r0`, `r1`, `r2` against ε.
    pub slopes: [f64; 3],
    pub horizon: f64,
    pub dt: f64,
}

/// One Rayleigh RPA field with scale `perturbation.amplitude` on every mode, integrated
/// directly and compared with the truncated expansion at each ε.
pub fn perturbation_scaling(cfg: &ExperimentConfig) -> Result<ScalingStudy> {
    let lattice = Arc::new(cfg.lattice()?);
    let system = cfg.system()?;
    let law = AmplitudeLaw::rayleigh(vec![cfg.perturbation.amplitude; lattice.n_modes()])?;
    let field = generate_rpa_field(lattice.clone(), &law, cfg.seed, 0)?;
    let model = InteractionModel::full(&lattice, &system)?;
    let dt = cfg.time.dt_factor * model.max_step();
    let eps = &cfg.perturbation.epsilons;
    let rows = perturbation::residual_scaling(&field, &system, eps, cfg.time.horizon, dt)?;
    let col = |f: fn(&ResidualRow) -> f64| rows.iter().map(f).collect::<Vec<f64>>();
    let slopes = [
        perturbation::log_log_slope(eps, &col(|r| r.r0)),
        perturbation::log_log_slope(eps, &col(|r| r.r1)),
        perturbation::log_log_slope(eps, &col(|r| r.r2)),
    ];
    Ok(ScalingStudy {
        rows,
        slopes,
        horizon: cfg.time.horizon,
        dt,
    })
}

// ---------------------------------------------------------------------------
// Monte-Carlo kinetic comparison

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McRow {
    pub mode: usize,
    pub k: [f64; 3],
    pub omega: f64,
    pub n: f64,
    /// Ensemble estimate of `dn/dt` over `[0, T]`.
    pub measured: f64,
    pub stderr: f64,
    /// `η - γn` at the ensemble spectrum.
    pub predicted: f64,
    pub selected: bool,
}

impl McRow {
    pub fn ratio(&self) -> f64 {
        self.measured / self.predicted
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McStudy {
    pub rows: Vec<McRow>,
    /// `|η - γn|` at or above which a mode is compared (top quartile).
    pub threshold: f64,
    pub delta_omega: f64,
    /// Fewest modes within `Δω` in frequency of any compared mode.
    pub coverage: usize,
    pub realizations: usize,
    pub rotations: usize,
    pub horizon: f64,
    pub dt: f64,
    pub resonances: usize,
    /// Phase statistics of the unrotated initial fields.
    pub phases: PhaseDiagnostics,
}

/// Threshold selecting the top quartile of `values` by magnitude (nonzero entries only).
pub fn top_quartile_threshold(values: &[f64]) -> f64 {
    let mut mags: Vec<f64> = values.iter().map(|v| v.abs()).filter(|v| *v > 0.0).collect();
    if mags.is_empty() {
        return f64::INFINITY;
    }
    mags.sort_by(|a, b| b.total_cmp(a));
    mags[mags.len().div_ceil(4) - 1]
}

/// Measures `dn/dt` over one window `[0, T]` from an RPA ensemble and compares it with
/// the kinetic tendency built with the Fejér (or configured) kernel.
///
/// Each base field is used with `Q` global phase rotations `e^{2πiq/Q}`, each itself an
/// RPA realization; averaging over them cancels every term of the expansion that is not
/// invariant under a global phase shift. Per base field the estimator is
///
/// `Y_k = (1/QT) Σ_q (|a_k(T)|² - |a_k(0)|²) - β_k (C_k - E C_k)`,
///
/// where `C_k` is the kinetic tendency evaluated at the realization's own initial
/// intensities and `E C_k` is its exact mean under the amplitude law. `β_k` is the
/// least-squares coefficient, so `Y_k` stays an unbiased estimate of `E dn_k/dt`.
///
/// Four-wave dynamics is invariant under a global phase, so the rotations cancel nothing
/// there. Instead the first-order part `2ε Re(ā_k a_k^(1)(T)) / T` is subtracted from each
/// realization: its phase average is exactly zero once `Ω` removes the quasi-diagonal terms,
/// and without it the `O(ε)` scatter swamps the `O(ε²)` mean.
pub fn mc_kinetic(cfg: &ExperimentConfig) -> Result<McStudy> {
    let lattice = Arc::new(cfg.lattice()?);
    let system = cfg.system()?;
    let broadening = cfg.broadening()?;
    let n0 = cfg.spectrum(&lattice);
    let law = cfg.law(n0.clone())?;
    let model = InteractionModel::full(&lattice, &system)?;
    let kinetic = KineticModel::new(&lattice, &system, &broadening)?;
    let modes = lattice.n_modes();
    let factors = law.intensity_factors();
    let expected = kinetic.expected_tendency(&n0, &factors)?;
    let horizon = cfg.time.horizon;
    let dt = cfg.time.dt_factor * model.max_step();
    let opts = IntegrateOptions::with_dt(dt);
    let q = cfg.ensemble.rotations;
    let base = cfg.ensemble.realizations / q;
    if base < 2 {
        return Err(WtError::Config {
            field: "ensemble.realizations".into(),
            reason: "needs at least two base fields (realizations / rotations >= 2)".into(),
        });
    }
    let samples: Vec<(Vec<f64>, Vec<f64>)> = (0..base as u64)
        .into_par_iter()
        .map(|b| {
            let field = generate_rpa_field(lattice.clone(), &law, cfg.seed, b)?;
            let s0 = field.intensities();
            let mut y = vec![0.0; modes];
            // Rotated four-wave fields evolve with identical intensities.
            let distinct = if matches!(model, InteractionModel::Four(_)) { 1 } else { q };
            for r in 0..distinct {
                let rot = Complex64::cis(2.0 * PI * r as f64 / q as f64);
                let amps: Vec<Complex64> = field.amplitudes.iter().map(|a| a * rot).collect();
                let start = WaveField::new(lattice.clone(), amps, 0.0)?;
                let end = integrate(&start, &model, horizon, &opts)?.field;
                for k in 0..modes {
                    y[k] += (end.amplitudes[k].norm_sqr() - s0[k]) / (distinct as f64 * horizon);
                }
            }
            if let InteractionModel::Four(m) = &model {
                let first = perturbation::first_iterate_4w_model(m, &field.amplitudes, &m.shift(&field.amplitudes), horizon)?;
                for k in 0..modes {
                    y[k] -= 2.0 * m.epsilon() * (field.amplitudes[k].conj() * first[k]).re / horizon;
                }
            }
            let rates = kinetic.rates(&s0)?;
            let c: Vec<f64> = (0..modes)
                .map(|k| rates.eta[k] - rates.gamma[k] * s0[k] - expected[k])
                .collect();
            Ok((y, c))
        })
        .collect::<Result<Vec<_>>>()?;

    let bf = base as f64;
    let mut measured = vec![0.0; modes];
    let mut stderr = vec![0.0; modes];
    for k in 0..modes {
        let my = samples.iter().map(|s| s.0[k]).sum::<f64>() / bf;
        let mc = samples.iter().map(|s| s.1[k]).sum::<f64>() / bf;
        let cyy: f64 = samples.iter().map(|s| (s.1[k] - mc).powi(2)).sum();
        let cxy: f64 = samples.iter().map(|s| (s.0[k] - my) * (s.1[k] - mc)).sum();
        let beta = if cyy > 0.0 { cxy / cyy } else { 0.0 };
        let z: Vec<f64> = samples.iter().map(|s| s.0[k] - beta * s.1[k]).collect();
        let mz = z.iter().sum::<f64>() / bf;
        measured[k] = mz;
        stderr[k] = (z.iter().map(|v| (v - mz).powi(2)).sum::<f64>() / (bf - 1.0) / bf).sqrt();
    }

    let mean_n: Vec<f64> = n0.iter().map(|v| v * factors[1]).collect();
    let rates = kinetic.rates(&mean_n)?;
    let predicted: Vec<f64> = (0..modes).map(|k| rates.eta[k] - rates.gamma[k] * mean_n[k]).collect();
    let threshold = top_quartile_threshold(&predicted);
    let omega = kinetic.omega();
    let zero = lattice.zero_mode();
    let delta_omega = broadening.resolution();
    let rows: Vec<McRow> = (0..modes)
        .map(|k| McRow {
            mode: k,
            k: lattice.wavevector(k),
            omega: omega[k],
            n: mean_n[k],
            measured: measured[k],
            stderr: stderr[k],
            predicted: predicted[k],
            selected: predicted[k].abs() >= threshold,
        })
        .collect();
    let coverage = rows
        .iter()
        .filter(|r| r.selected)
        .map(|r| {
            (0..modes)
                .filter(|&m| m != zero && (omega[m] - r.omega).abs() <= delta_omega)
                .count()
        })
        .min()
        .unwrap_or(0);

    let initial: Vec<WaveField> = (0..base as u64)
        .into_par_iter()
        .map(|b| generate_rpa_field(lattice.clone(), &law, cfg.seed, b))
        .collect::<Result<_>>()?;
    let phases = statistics::phase_diagnostics(&initial, 200, cfg.seed)?;

    Ok(McStudy {
        rows,
        threshold,
        delta_omega,
        coverage,
        realizations: cfg.ensemble.realizations,
        rotations: q,
        horizon,
        dt,
        resonances: kinetic.n_terms(),
        phases,
    })
}

// ---------------------------------------------------------------------------
// One-mode PDF

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OneModeRow {
    pub s: f64,
    pub p: f64,
    pub rayleigh: f64,
    pub homogeneous: f64,
    /// `-(F/η) Ei(s/n) e^{-s/n}`.
    pub particular: f64,
    /// Two-term large-`s` series of the particular part.
    pub tail: f64,
    /// `-s(γP + η ∂_s P)` with `∂_s P` from a five-point difference.
    pub plug_back_flux: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OneModeStudy {
    pub n: f64,
    pub flux: f64,
    pub eta: f64,
    pub gamma: f64,
    pub s_cut: f64,
    pub rows: Vec<OneModeRow>,
    /// Largest `|plug_back_flux - F| / |F|` over interior centres below the cutoff.
    pub plug_back_error: f64,
    /// Largest `|tail - particular| / |particular| · (s/n)²` for `s/n ≥ 10`.
    pub tail_constant: f64,
    /// Whether every tail centre (`s/n ≥ 10`) lies on the side of Rayleigh set by `-F`.
    pub tail_side_ok: bool,
    pub tail_points: usize,
    pub mass: f64,
}

/// Five-point derivative with step `h`.
fn five_point(f: impl Fn(f64) -> f64, s: f64, h: f64) -> f64 {
    (f(s - 2.0 * h) - 8.0 * f(s - h) + 8.0 * f(s + h) - f(s + 2.0 * h)) / (12.0 * h)
}

pub fn onemode_study(n: f64, flux: f64, eta: f64, cells: usize, s_max: f64, s_cut: Option<f64>) -> Result<OneModeStudy> {
    let grid = Grid::geometric(1e-4 * n, s_max, cells)?;
    let (pdf, sol): (_, SteadyPdf) = onemode::steady_pdf(&grid, n, flux, eta, s_cut)?;
    let gamma = sol.gamma();
    let centers = grid.centers();
    let mut rows = Vec::with_capacity(centers.len());
    let mut plug_back_error: f64 = 0.0;
    let mut tail_constant: f64 = 0.0;
    let mut tail_side_ok = true;
    let mut tail_points = 0;
    for (i, &s) in centers.iter().enumerate() {
        let (homogeneous, particular) = sol.parts(s);
        let h = 1e-3 * s;
        let inside = i >= 2 && i + 2 < centers.len() && s + 2.0 * h < sol.s_cut;
        let plug = if inside {
            let dp = five_point(|x| sol.density(x), s, h);
            -s * (gamma * sol.density(s) + eta * dp)
        } else {
            f64::NAN
        };
        if inside && flux != 0.0 {
            plug_back_error = plug_back_error.max((plug - flux).abs() / flux.abs());
        }
        let tail = onemode::tail_series(s, flux, gamma, eta, 2)?;
        let x = s / n;
        if x >= 10.0 && s < sol.s_cut {
            tail_points += 1;
            if particular != 0.0 {
                tail_constant = tail_constant.max((tail - particular).abs() / particular.abs() * x * x);
            }
            let p = sol.density(s);
            let r = onemode::rayleigh_density(s, n);
            let above = p > r;
            if (flux < 0.0 && !above) || (flux > 0.0 && above) {
                tail_side_ok = false;
            }
        }
        rows.push(OneModeRow {
            s,
            p: pdf.p[i],
            rayleigh: onemode::rayleigh_density(s, n),
            homogeneous,
            particular,
            tail,
            plug_back_flux: plug,
        });
    }
    Ok(OneModeStudy {
        n,
        flux,
        eta,
        gamma,
        s_cut: sol.s_cut,
        rows,
        plug_back_error,
        tail_constant,
        tail_side_ok: tail_side_ok && tail_points > 0,
        tail_points,
        mass: pdf.mass(),
    })
}

fn onemode_from_config(cfg: &ExperimentConfig) -> Result<OneModeStudy> {
    let o = &cfg.onemode;
    onemode_study(o.n, o.flux, o.eta, o.cells, o.s_max.unwrap_or(40.0 * o.n), o.s_cut)
}

// ---------------------------------------------------------------------------
// PBP on one triad

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PbpStudy {
    pub cells: usize,
    pub omega: Vec<f64>,
    /// L1 divergence residual of the thermodynamic product at `cells` and `2·cells`.
    pub thermo_residual: [f64; 2],
    pub refinement_ratio: f64,
    pub spectrum: Vec<f64>,
    pub gamma_tilde: Vec<f64>,
    /// Residual of the through-flux product (forced to be kinetically stationary).
    pub flux_residual: f64,
    pub flux_to_thermo: f64,
    /// Relative L2 mismatch per mode between the marginal PBP flux and the one-mode
    /// flux, at `cells` and `2·cells`.
    pub marginal_mismatch: [Vec<f64>; 2],
    pub projection: pbp::Projection,
    pub circulation: f64,
}

/// Exactly resonant triad `(0; 1, 2)` in both orders with unit weight.
pub fn triad_model() -> Result<PbpModel> {
    PbpModel::from_triads(3, vec![(0, 1, 2, 1.0), (0, 2, 1, 1.0)])
}

fn thermo_residual(omega: &[f64], cells: usize, extent: f64, model: &PbpModel) -> Result<f64> {
    let n: Vec<f64> = omega.iter().map(|w| 1.0 / w).collect();
    let grid = TensorGrid::new(vec![cells; 3], n.iter().map(|v| extent * v).collect())?;
    let pdf = MultiModePdf::exponential_product(vec![0, 1, 2], grid, &n)?;
    pbp::stationarity_residual(&pdf, model)
}

/// Marginal flux of a Gamma(2) product with means `n` against the one-mode flux built from
/// the induced rates; returns the relative L2 mismatch per mode on interior faces.
pub fn marginal_mismatch(n: &[f64], cells: usize, extent: f64, model: &PbpModel) -> Result<Vec<f64>> {
    let grid = TensorGrid::new(vec![cells; 3], n.iter().map(|v| extent * v).collect())?;
    let pdf = MultiModePdf::product(vec![0, 1, 2], grid, |j, s| {
        let th = 0.5 * n[j];
        s / (th * th) * (-s / th).exp()
    })?;
    let flux = pbp::pbp_flux(&pdf, model)?;
    let means: Vec<f64> = (0..3).map(|j| pdf.mean(j)).collect();
    let rates = model.induced_rates(&means)?;
    (0..3)
        .map(|j| {
            let marginal = pbp::marginal_flux(&flux, &pdf, j);
            let grid = Grid::uniform(pdf.grid.extent(j), cells)?;
            let one = onemode::OneModePdf::new(grid, pdf.marginal(j), rates.eta[j], rates.gamma[j])?;
            let reference = one.face_flux();
            let (mut num, mut den) = (0.0, 0.0);
            for i in 1..cells {
                num += (marginal[i] - reference[i]).powi(2);
                den += reference[i].powi(2);
            }
            Ok((num / den).sqrt())
        })
        .collect()
}

pub fn pbp_triad(cfg: &ExperimentConfig) -> Result<PbpStudy> {
    let p = &cfg.pbp;
    let model = triad_model()?;
    let m = p.cells;
    let coarse = thermo_residual(&p.omega, m, p.extent, &model)?;
    let fine = thermo_residual(&p.omega, 2 * m, p.extent, &model)?;

    let n = &p.spectrum;
    let rates = model.induced_rates(n)?;
    let gamma_tilde = kinetics::balancing_forcing(n, &rates);
    let forced = model.clone().with_forcing(gamma_tilde.clone())?;
    let grid = TensorGrid::new(vec![m; 3], n.iter().map(|v| p.extent * v).collect())?;
    let product = MultiModePdf::exponential_product(vec![0, 1, 2], grid, n)?;
    let flux = pbp::pbp_flux(&product, &forced)?;
    let flux_residual = pbp::residual_l1(&pbp::pbp_divergence(&flux, &product)?, &product);

    let projection = pbp::vortex_projection(&flux, &product, 1, 2)?;
    let (lo, hi) = (m / 8, m / 2);
    let circulation = projection.circulation(lo, hi, lo, hi)?;

    let marginal = [
        marginal_mismatch(n, m, MARGINAL_EXTENT, &model)?,
        marginal_mismatch(n, 2 * m, MARGINAL_EXTENT, &model)?,
    ];
    Ok(PbpStudy {
        cells: m,
        omega: p.omega.clone(),
        thermo_residual: [coarse, fine],
        refinement_ratio: coarse / fine,
        spectrum: n.clone(),
        gamma_tilde,
        flux_residual,
        flux_to_thermo: flux_residual / coarse,
        marginal_mismatch: marginal,
        projection,
        circulation,
    })
}

/// Grid extent, in units of the mean, for the Gamma(2) consistency product.
pub const MARGINAL_EXTENT: f64 = 10.0;

// ---------------------------------------------------------------------------
// Forced-damped kinetic run and its energy flux

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KzSnapshot {
    pub time: f64,
    pub n: Vec<f64>,
    pub eta: Vec<f64>,
    pub gamma: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KzStudy {
    pub gamma_tilde: Vec<f64>,
    pub snapshots: Vec<KzSnapshot>,
    /// `(K, Π(K))` at the final state.
    pub flux_profile: Vec<(f64, f64)>,
    /// `max|ṅ| / max|γ̃ n|` at the final state; small once steady.
    pub steadiness: f64,
    /// Relative spread `(max - min)/|mean|` of `Π` over shells strictly between the
    /// forcing band and the damping range.
    pub flux_spread: f64,
    pub mean_flux: f64,
    /// First step with `γ̃` against the same step with `γ → γ - γ̃`, compared bitwise.
    pub renormalization_identical: bool,
    pub steps: usize,
}

pub fn kz_flux_scan(cfg: &ExperimentConfig) -> Result<KzStudy> {
    let lattice = cfg.lattice()?;
    let system = cfg.system()?;
    let model = KineticModel::new(&lattice, &system, &cfg.broadening()?)?;
    let kz = &cfg.kz;
    let mags: Vec<f64> = (0..lattice.n_modes()).map(|i| norm3(lattice.wavevector(i))).collect();
    let gamma_tilde: Vec<f64> = mags
        .iter()
        .map(|&k| {
            if k == 0.0 {
                0.0
            } else if k >= kz.force_k[0] && k <= kz.force_k[1] {
                kz.force_rate
            } else if k >= kz.damp_k {
                -kz.damp_rate
            } else {
                0.0
            }
        })
        .collect();
    let mut state = KineticState::new(cfg.spectrum(&lattice)).with_forcing(gamma_tilde.clone());
    let stride = (kz.steps / 10).max(1);
    let mut snapshots = Vec::new();
    let mut renormalization_identical = false;
    for step in 0..kz.steps {
        let rates = model.rates(&state.n)?;
        let max_damping = (0..state.n.len())
            .map(|k| rates.gamma[k] - gamma_tilde[k])
            .fold(0.0f64, f64::max);
        let dt = if max_damping > 0.0 { kz.dt_factor * 0.1 / max_damping } else { kz.dt_factor };
        if step % stride == 0 {
            snapshots.push(KzSnapshot {
                time: state.time,
                n: state.n.clone(),
                eta: rates.eta.clone(),
                gamma: rates.gamma.clone(),
            });
        }
        let next = kinetics::step_kinetic(&state, &model, dt)?;
        if step == 0 {
            let shifted = KineticState {
                n: state.n.clone(),
                eta: rates.eta.clone(),
                gamma: (0..state.n.len()).map(|k| rates.gamma[k] - gamma_tilde[k]).collect(),
                gamma_tilde: vec![0.0; state.n.len()],
                time: state.time,
            };
            let other = kinetics::advance(&shifted, dt)?;
            renormalization_identical = next.n.iter().zip(&other.n).all(|(a, b)| a.to_bits() == b.to_bits());
        }
        state = next;
    }
    let rates = model.rates(&state.n)?;
    snapshots.push(KzSnapshot {
        time: state.time,
        n: state.n.clone(),
        eta: rates.eta.clone(),
        gamma: rates.gamma.clone(),
    });
    let tendency: Vec<f64> = (0..state.n.len())
        .map(|k| rates.eta[k] - (rates.gamma[k] - gamma_tilde[k]) * state.n[k])
        .collect();
    let drive = (0..state.n.len())
        .map(|k| (gamma_tilde[k] * state.n[k]).abs())
        .fold(0.0f64, f64::max);
    let steadiness = tendency.iter().fold(0.0f64, |a, b| a.max(b.abs())) / drive.max(f64::MIN_POSITIVE);
    let flux_profile = kinetics::energy_flux_profile(&lattice, model.omega(), &rates, &state.n);
    let inner: Vec<f64> = flux_profile
        .iter()
        .filter(|(k, _)| *k > kz.force_k[1] && *k < kz.damp_k)
        .map(|(_, p)| *p)
        .collect();
    let (flux_spread, mean_flux) = if inner.is_empty() {
        (f64::NAN, f64::NAN)
    } else {
        let mean = inner.iter().sum::<f64>() / inner.len() as f64;
        let lo = inner.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = inner.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        ((hi - lo) / mean.abs(), mean)
    };
    Ok(KzStudy {
        gamma_tilde,
        snapshots,
        flux_profile,
        steadiness,
        flux_spread,
        mean_flux,
        renormalization_identical,
        steps: kz.steps,
    })
}

// ---------------------------------------------------------------------------
// Emission

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Omit wall time from the summary so every emitted file is reproducible.
    pub reproducible: bool,
    /// Overrides `output.dir`.
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub kind: &'static str,
    pub version: &'static str,
    pub seed: u64,
    pub config_hash: String,
    pub config: ExperimentConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_time_seconds: Option<f64>,
    pub metrics: serde_json::Value,
    pub verdicts: Vec<Verdict>,
    pub passed: bool,
    /// Data files with their SHA-256 digests (the summary itself excluded).
    pub files: Manifest,
}

#[derive(Debug, Clone)]
pub struct Report {
    pub out_dir: PathBuf,
    pub summary: Summary,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.summary.passed
    }
}

fn mode_columns(lattice: &FourierLattice, mode: usize) -> Vec<Cell> {
    let c = lattice.coords(mode);
    vec![mode.into(), c[0].into(), c[1].into(), c[2].into()]
}

fn write_scaling(dir: &Path, s: &ScalingStudy, files: &mut Manifest) -> Result<()> {
    let mut t = Table::new(&[
        ("epsilon", "nonlinearity parameter"),
        ("r0", "norm of a(T) - a0"),
        ("r1", "norm of a(T) - a0 - eps a1"),
        ("r2", "norm of a(T) - a0 - eps a1 - eps^2 a2"),
    ]);
    for r in &s.rows {
        t.push(vec![r.epsilon.into(), r.r0.into(), r.r1.into(), r.r2.into()]);
    }
    output::write_table(dir, "residuals.csv", &t, files)?;
    Ok(())
}

fn write_mc(dir: &Path, lattice: &FourierLattice, s: &McStudy, files: &mut Manifest) -> Result<()> {
    let mut t = Table::new(&[
        ("mode", "lattice mode index"),
        ("ix", "integer wavevector component x"),
        ("iy", "integer wavevector component y"),
        ("iz", "integer wavevector component z"),
        ("omega", "linear frequency"),
        ("n", "ensemble spectrum"),
        ("measured", "ensemble dn/dt over the window"),
        ("stderr", "standard error of measured"),
        ("predicted", "kinetic eta - gamma n"),
        ("selected", "1 if in the top quartile by |predicted|"),
    ]);
    for r in &s.rows {
        let mut row = mode_columns(lattice, r.mode);
        row.extend([
            r.omega.into(),
            r.n.into(),
            r.measured.into(),
            r.stderr.into(),
            r.predicted.into(),
            Cell::Int(r.selected as i64),
        ]);
        t.push(row);
    }
    output::write_table(dir, "rates.csv", &t, files)?;
    Ok(())
}

fn write_onemode(dir: &Path, s: &OneModeStudy, files: &mut Manifest) -> Result<()> {
    let mut t = Table::new(&[
        ("s", "intensity at cell centre"),
        ("p", "steady density"),
        ("rayleigh", "Rayleigh density with the same n"),
        ("homogeneous", "C exp(-s/n)"),
        ("particular", "-(F/eta) Ei(s/n) exp(-s/n)"),
        ("tail", "two-term large-s series of the particular part"),
        ("plug_back_flux", "-s(gamma P + eta dP/ds) from a five-point derivative; NaN at the edges"),
    ]);
    for r in &s.rows {
        t.push(vec![
            r.s.into(),
            r.p.into(),
            r.rayleigh.into(),
            r.homogeneous.into(),
            r.particular.into(),
            r.tail.into(),
            r.plug_back_flux.into(),
        ]);
    }
    output::write_table(dir, "pdf.csv", &t, files)?;
    Ok(())
}

fn write_pbp(dir: &Path, s: &PbpStudy, files: &mut Manifest) -> Result<()> {
    let mut t = Table::new(&[
        ("s1", "intensity of mode 1"),
        ("s2", "intensity of mode 2"),
        ("f1", "marginal flux component along s1"),
        ("f2", "marginal flux component along s2"),
    ]);
    let p = &s.projection;
    for (i, s1) in p.s1.iter().enumerate() {
        for (k, s2) in p.s2.iter().enumerate() {
            let at = i * p.s2.len() + k;
            t.push(vec![(*s1).into(), (*s2).into(), p.f1[at].into(), p.f2[at].into()]);
        }
    }
    output::write_table(dir, "projection.csv", &t, files)?;
    let mut r = Table::new(&[
        ("cells", "cells per dimension"),
        ("thermo_residual", "L1 divergence of the thermodynamic product"),
    ]);
    r.push(vec![s.cells.into(), s.thermo_residual[0].into()]);
    r.push(vec![(2 * s.cells).into(), s.thermo_residual[1].into()]);
    output::write_table(dir, "refinement.csv", &r, files)?;
    Ok(())
}

fn write_kz(dir: &Path, lattice: &FourierLattice, s: &KzStudy, files: &mut Manifest) -> Result<()> {
    let mut t = Table::new(&[
        ("time", "kinetic time"),
        ("mode", "lattice mode index"),
        ("ix", "integer wavevector component x"),
        ("iy", "integer wavevector component y"),
        ("iz", "integer wavevector component z"),
        ("n", "spectrum"),
        ("eta", "gain rate"),
        ("gamma", "loss rate"),
    ]);
    for snap in &s.snapshots {
        for k in 0..snap.n.len() {
            let mut row = vec![snap.time.into()];
            row.extend(mode_columns(lattice, k));
            row.extend::<[Cell; 3]>([snap.n[k].into(), snap.eta[k].into(), snap.gamma[k].into()]);
            t.push(row);
        }
    }
    output::write_table(dir, "spectrum.csv", &t, files)?;
    let mut f = Table::new(&[("k", "shell radius"), ("energy_flux", "-sum of omega dn/dt over |k| <= K")]);
    for (k, p) in &s.flux_profile {
        f.push(vec![(*k).into(), (*p).into()]);
    }
    output::write_table(dir, "energy_flux.csv", &f, files)?;
    Ok(())
}

/// Runs one experiment and writes its data, schemas and `summary.json` to the output
/// directory.
pub fn run_experiment(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<Report> {
    let start = Instant::now();
    let dir = opts.out_dir.clone().unwrap_or_else(|| cfg.output.dir.clone());
    std::fs::create_dir_all(&dir)?;
    let mut files = Manifest::default();
    let (metrics, verdicts) = match cfg.kind {
        ExperimentKind::PerturbationScaling => {
            let s = perturbation_scaling(cfg)?;
            write_scaling(&dir, &s, &mut files)?;
            let v = vec![verify::judge_scaling(&s, cfg.system()?.kind.name())];
            (serde_json::to_value(&s)?, v)
        }
        ExperimentKind::McKinetic3w | ExperimentKind::McKinetic4w => {
            let s = mc_kinetic(cfg)?;
            write_mc(&dir, &cfg.lattice()?, &s, &mut files)?;
            let v = vec![verify::judge_mc(&s), verify::judge_phases(&s.phases)];
            (serde_json::to_value(&s)?, v)
        }
        ExperimentKind::OnemodePdf => {
            let s = onemode_from_config(cfg)?;
            write_onemode(&dir, &s, &mut files)?;
            let mut metrics = serde_json::to_value(&s)?;
            metrics.as_object_mut().expect("struct").remove("rows");
            (metrics, verify::judge_onemode(&s))
        }
        ExperimentKind::PbpTriad => {
            let s = pbp_triad(cfg)?;
            write_pbp(&dir, &s, &mut files)?;
            let mut metrics = serde_json::to_value(&s)?;
            metrics.as_object_mut().expect("struct").remove("projection");
            (metrics, verify::judge_pbp(&s))
        }
        ExperimentKind::KzFluxScan => {
            let s = kz_flux_scan(cfg)?;
            write_kz(&dir, &cfg.lattice()?, &s, &mut files)?;
            let mut metrics = serde_json::to_value(&s)?;
            metrics.as_object_mut().expect("struct").remove("snapshots");
            (metrics, verify::judge_kz(&s))
        }
    };
    let passed = verdicts.iter().all(|v| v.passed);
    let summary = Summary {
        kind: cfg.kind.name(),
        version: env!("CARGO_PKG_VERSION"),
        seed: cfg.seed,
        config_hash: cfg.hash(),
        config: cfg.clone(),
        wall_time_seconds: (!opts.reproducible).then(|| start.elapsed().as_secs_f64()),
        metrics,
        verdicts,
        passed,
        files: files.clone(),
    };
    output::write_json(&dir, "summary.json", &summary, &mut files)?;
    Ok(Report { out_dir: dir, summary })
}
