//! Acceptance checks. Each criterion returns a [`Verdict`]; the `judge_*` functions turn
//! an experiment's study into the verdicts that apply to it, so a configured run and the
//! acceptance suite apply identical rules.

use std::f64::consts::PI;
use std::sync::Arc;

use serde::Serialize;

use crate::config::{ExperimentConfig, ExperimentKind};
use crate::error::Result;
use crate::experiment::{self, McStudy, OneModeStudy, PbpStudy, ScalingStudy};
use crate::kinetics::{self, Broadening, KineticModel, KineticState};
use crate::lattice::FourierLattice;
use crate::onemode;
use crate::perturbation::delta_kernel;
use crate::statistics::{self, AmplitudeLaw, PhaseDiagnostics};
use crate::systems::{CustomSystem, Order, SystemKind, WaveSystem};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verdict {
    pub id: String,
    pub title: String,
    pub passed: bool,
    pub detail: String,
}

impl Verdict {
    fn new(id: impl Into<String>, title: &str, passed: bool, detail: String) -> Self {
        Self {
            id: id.into(),
            title: title.to_string(),
            passed,
            detail,
        }
    }

    fn failed(id: impl Into<String>, title: &str, err: impl std::fmt::Display) -> Self {
        Self::new(id, title, false, format!("error: {err}"))
    }

    /// One line: `PASS [3] title: detail`.
    pub fn line(&self) -> String {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        format!("{tag} [{}] {}: {}", self.id, self.title, self.detail)
    }
}

fn all_pass(id: &str, title: &str, parts: Vec<Verdict>) -> Verdict {
    let passed = parts.iter().all(|v| v.passed);
    let detail = parts
        .iter()
        .map(|v| format!("{} {}", if v.passed { "ok" } else { "FAILED" }, v.detail))
        .collect::<Vec<_>>()
        .join("; ");
    Verdict::new(id, title, passed, detail)
}

fn run(id: &str, title: &str, f: impl FnOnce() -> Result<Verdict>) -> Verdict {
    f().unwrap_or_else(|e| Verdict::failed(id, title, e))
}

// ---------------------------------------------------------------------------
// Judges shared with experiments

pub const SLOPE_TARGET: f64 = 3.0;
pub const SLOPE_TOLERANCE: f64 = 0.45;

pub fn judge_scaling(s: &ScalingStudy, system: &str) -> Verdict {
    let slope = s.slopes[2];
    Verdict::new(
        "2",
        "perturbation order",
        (slope - SLOPE_TARGET).abs() <= SLOPE_TOLERANCE,
        format!(
            "{system}: second-order residual slope {slope:.3} (target 3 ± 0.45); zeroth/first-order slopes {:.3}/{:.3}",
            s.slopes[0], s.slopes[1]
        ),
    )
}

pub const MC_TOLERANCE: f64 = 0.2;
pub const MC_MIN_COVERAGE: usize = 5;

pub fn judge_mc(s: &McStudy) -> Verdict {
    let selected: Vec<_> = s.rows.iter().filter(|r| r.selected).collect();
    let worst = selected
        .iter()
        .map(|r| (r.ratio() - 1.0).abs())
        .fold(0.0f64, f64::max);
    let ratios: Vec<String> = selected.iter().map(|r| format!("{:.3}", r.ratio())).collect();
    let passed = !selected.is_empty() && worst <= MC_TOLERANCE && s.coverage >= MC_MIN_COVERAGE;
    Verdict::new(
        "3",
        "Monte-Carlo kinetic agreement",
        passed,
        format!(
            "R = {} ({} rotations), {} compared modes, measured/predicted = [{}], worst deviation {:.3} (limit {MC_TOLERANCE}); Δω = {:.3} covers >= {} modes",
            s.realizations,
            s.rotations,
            selected.len(),
            ratios.join(", "),
            worst,
            s.delta_omega,
            s.coverage
        ),
    )
}

pub fn judge_phases(d: &PhaseDiagnostics) -> Verdict {
    Verdict::new(
        "10a",
        "phase statistics of the initial ensemble",
        d.passes(),
        format!(
            "R = {}, max |<psi>| = {:.4}, max pair statistic = {:.4}, threshold 3/sqrt(R) = {:.4}",
            d.realizations, d.max_mean, d.max_pair, d.threshold
        ),
    )
}

pub const PLUG_BACK_TOLERANCE: f64 = 1e-6;
/// Constant `C` in the tail bound `|series - Ei form| <= C (n/s)² |Ei form|`.
pub const TAIL_CONSTANT: f64 = 3.0;

pub fn judge_onemode(s: &OneModeStudy) -> Vec<Verdict> {
    let side = if s.flux < 0.0 { "above" } else { "below" };
    vec![
        Verdict::new(
            "6a",
            "steady PDF plug-back",
            s.plug_back_error < PLUG_BACK_TOLERANCE,
            format!("F = {}: max relative residual {:.3e} (limit {PLUG_BACK_TOLERANCE:e})", s.flux, s.plug_back_error),
        ),
        Verdict::new(
            "6b",
            "tail series",
            s.tail_points > 0 && s.tail_constant <= TAIL_CONSTANT,
            format!(
                "F = {}: max |series - Ei| / |Ei| · (s/n)² = {:.3} over {} points with s/n >= 10 (limit {TAIL_CONSTANT})",
                s.flux, s.tail_constant, s.tail_points
            ),
        ),
        Verdict::new(
            "6c",
            "tail relative to Rayleigh",
            s.tail_side_ok && s.flux != 0.0,
            format!("F = {}: tail expected {side} Rayleigh over {} points", s.flux, s.tail_points),
        ),
    ]
}

pub const REFINEMENT_RATIO: f64 = 3.5;
pub const MARGINAL_TOLERANCE: f64 = 0.05;
pub const NON_STATIONARITY_FACTOR: f64 = 10.0;

pub fn judge_pbp(s: &PbpStudy) -> Vec<Verdict> {
    let fine = s.marginal_mismatch[1].iter().cloned().fold(0.0f64, f64::max);
    let coarse = s.marginal_mismatch[0].iter().cloned().fold(0.0f64, f64::max);
    vec![
        Verdict::new(
            "7",
            "PBP thermodynamic convergence",
            s.refinement_ratio >= REFINEMENT_RATIO,
            format!(
                "residual {:.4e} at {}³, {:.4e} at {}³, ratio {:.3} (limit {REFINEMENT_RATIO})",
                s.thermo_residual[0],
                s.cells,
                s.thermo_residual[1],
                2 * s.cells,
                s.refinement_ratio
            ),
        ),
        Verdict::new(
            "8",
            "PBP marginal vs one-mode flux",
            fine < MARGINAL_TOLERANCE,
            format!(
                "worst relative L2 mismatch {:.4} at {}³, {:.4} at {}³ (limit {MARGINAL_TOLERANCE})",
                coarse,
                s.cells,
                fine,
                2 * s.cells
            ),
        ),
        Verdict::new(
            "9",
            "through-flux product is not stationary",
            s.flux_to_thermo >= NON_STATIONARITY_FACTOR,
            format!(
                "residual {:.4e} vs thermodynamic {:.4e} on {}³, factor {:.1} (limit {NON_STATIONARITY_FACTOR})",
                s.flux_residual, s.thermo_residual[0], s.cells, s.flux_to_thermo
            ),
        ),
    ]
}

pub fn judge_kz(s: &experiment::KzStudy) -> Vec<Verdict> {
    vec![
        Verdict::new(
            "11",
            "renormalization is bit-identical",
            s.renormalization_identical,
            "first forced step vs step with gamma - gamma_tilde".to_string(),
        ),
        detailed_balance(),
    ]
}

// ---------------------------------------------------------------------------
// Criteria

pub const KERNEL_TOLERANCE: f64 = 0.01;

/// Composite Simpson over `[-X, X]` of `|Δ(x, T)|²` against `2πT`.
pub fn kernel_asymptotics() -> Verdict {
    let mut parts = Vec::new();
    for t in [10.0, 100.0] {
        // Tail beyond X contributes about 4/X; X = 400 keeps it below 2e-4 relative.
        let x_max: f64 = 400.0;
        let per_period = 64.0;
        let steps = (2.0 * x_max * t / (2.0 * PI) * per_period) as usize / 2 * 2;
        let h = 2.0 * x_max / steps as f64;
        let f = |x: f64| delta_kernel(x, t).norm_sqr();
        let mut sum = f(-x_max) + f(x_max);
        for i in 1..steps {
            sum += f(-x_max + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        let integral = sum * h / 3.0;
        let rel = (integral / (2.0 * PI * t) - 1.0).abs();
        parts.push(Verdict::new(
            "1",
            "",
            rel < KERNEL_TOLERANCE,
            format!("T = {t}: integral / 2πT - 1 = {rel:.2e}"),
        ));
    }
    all_pass("1", "kernel asymptotics", parts)
}

pub fn perturbation_order(seed: u64) -> Verdict {
    run("2", "perturbation order", || {
        let mut parts = Vec::new();
        for system in ["capillary", "nls"] {
            let mut cfg = ExperimentConfig::defaults(ExperimentKind::PerturbationScaling);
            cfg.seed = seed;
            cfg.system.kind = Some(system.into());
            let study = experiment::perturbation_scaling(&cfg)?;
            parts.push(judge_scaling(&study, system));
        }
        Ok(all_pass("2", "perturbation order", parts))
    })
}

pub fn monte_carlo_kinetic(seed: u64) -> Verdict {
    run("3", "Monte-Carlo kinetic agreement", || {
        let mut cfg = ExperimentConfig::defaults(ExperimentKind::McKinetic3w);
        cfg.seed = seed;
        Ok(judge_mc(&experiment::mc_kinetic(&cfg)?))
    })
}

/// Three- and four-wave detailed balance on `ω = |k|`, whose collinear tuples are exactly
/// resonant, with `n = T/ω`.
pub fn detailed_balance() -> Verdict {
    run("4", "detailed balance", || {
        let lattice = FourierLattice::new(1, 32, 2.0 * PI)?;
        let capillary = WaveSystem::capillary(1.0, 0.05)?;
        let nls = WaveSystem::nls(0.05)?;
        let linear = |order: Order| {
            let cap = capillary.clone();
            let nls = nls.clone();
            WaveSystem::new(
                SystemKind::Custom(CustomSystem {
                    name: "linear".into(),
                    order,
                    dispersion: Arc::new(|k| k[0].abs()),
                    coupling3: Some(Arc::new(move |a, b, c| cap.coupling3(a, b, c).expect("capillary coupling"))),
                    coupling4: Some(Arc::new(move |a, b, c, d| nls.coupling4(a, b, c, d).expect("nls coupling"))),
                }),
                0.05,
            )
        };
        let mut parts = Vec::new();
        for order in [Order::ThreeWave, Order::FourWave] {
            let system = linear(order)?;
            let model = KineticModel::new(&lattice, &system, &Broadening::Exact { tol: 1e-12 })?;
            let temperature = 0.7;
            let n: Vec<f64> = model
                .omega()
                .iter()
                .map(|w| if *w > 0.0 { temperature / w } else { 0.0 })
                .collect();
            let r = model.rates(&n)?;
            let mut worst: f64 = 0.0;
            let mut checked = 0;
            for ((g, nk), eta) in r.gamma.iter().zip(&n).zip(&r.eta) {
                let loss = g * nk;
                if loss != 0.0 {
                    worst = worst.max((loss - eta).abs() / loss.abs());
                    checked += 1;
                }
            }
            parts.push(Verdict::new(
                "4",
                "",
                checked > 0 && worst < 1e-10,
                format!("{}: max |γn - η|/|γn| = {worst:.2e} over {checked} modes ({} resonances)", order.name(), model.n_terms()),
            ));
        }
        Ok(all_pass("4", "detailed balance", parts))
    })
}

pub fn gaussian_moments(seed: u64) -> Verdict {
    run("5", "Gaussian moment hierarchy", || {
        let (n, gamma) = (0.8, 1.3);
        let m = onemode::steady_moments(5, gamma * n, gamma)?;
        let mut factorial = 1.0;
        let mut recursion: f64 = 0.0;
        let mut rhs: f64 = 0.0;
        for p in 1..=5 {
            factorial *= p as f64;
            let exact = factorial * n.powi(p as i32);
            recursion = recursion.max((m[p] - exact).abs() / exact);
            rhs = rhs.max(onemode::moment_rhs(p, &m, gamma * n, gamma)?.abs() / exact);
        }
        let lattice = Arc::new(FourierLattice::new(1, 32, 2.0 * PI)?);
        let scale: Vec<f64> = (0..lattice.n_modes()).map(|k| 0.5 + 0.05 * k as f64).collect();
        let law = AmplitudeLaw::rayleigh(scale.clone())?;
        let ensemble = statistics::generate_ensemble(lattice.clone(), &law, seed, 1000)?;
        let zero = lattice.zero_mode();
        let pooled: Vec<f64> = ensemble
            .iter()
            .flat_map(|f| {
                let scale = &scale;
                f.amplitudes
                    .iter()
                    .enumerate()
                    .filter(move |(k, _)| *k != zero)
                    .map(move |(k, a)| a.norm_sqr() / scale[k])
            })
            .collect();
        let count = pooled.len() as f64;
        let mut mc = Vec::new();
        let mut ok = recursion < 1e-12 && rhs < 1e-12;
        let mut factorial = 1.0;
        for p in 1..=4 {
            factorial *= p as f64;
            let vals: Vec<f64> = pooled.iter().map(|x| x.powi(p)).collect();
            let mean = vals.iter().sum::<f64>() / count;
            let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (count - 1.0);
            let z = (mean - factorial) / (var / count).sqrt();
            ok &= z.abs() <= 3.0;
            mc.push(format!("p={p}: {mean:.4} vs {factorial} ({z:+.2} se)"));
        }
        Ok(Verdict::new(
            "5",
            "Gaussian moment hierarchy",
            ok,
            format!(
                "recursion max rel error {recursion:.1e}, steady rhs {rhs:.1e}; pooled Rayleigh MC of s/n over {} samples: {}",
                pooled.len(),
                mc.join(", ")
            ),
        ))
    })
}

/// Negative-flux study on the default grid and a positive-flux study with a cutoff at
/// `14n`. Positivity bounds both: the `ln s` singularity of `Ei` caps `|F|` for `F < 0`,
/// and the `e^{-s/n}` homogeneous part must outweigh `F·Ei` up to the cutoff for `F > 0`.
pub fn finite_flux_pdf() -> Verdict {
    run("6", "finite-flux steady PDF", || {
        let mut parts = judge_onemode(&experiment::onemode_study(1.0, -0.05, 1.0, 400, 40.0, None)?);
        parts.extend(judge_onemode(&experiment::onemode_study(1.0, 5e-6, 1.0, 400, 14.0, None)?));
        Ok(all_pass("6", "finite-flux steady PDF", parts))
    })
}

pub fn pbp_criteria() -> Vec<Verdict> {
    let cfg = ExperimentConfig::defaults(ExperimentKind::PbpTriad);
    match experiment::pbp_triad(&cfg) {
        Ok(s) => judge_pbp(&s),
        Err(e) => vec![
            Verdict::failed("7", "PBP thermodynamic convergence", &e),
            Verdict::failed("8", "PBP marginal vs one-mode flux", &e),
            Verdict::failed("9", "through-flux product is not stationary", &e),
        ],
    }
}

pub fn phase_statistics(seed: u64) -> Verdict {
    run("10", "phase statistics", || {
        let lattice = Arc::new(FourierLattice::new(1, 32, 2.0 * PI)?);
        let law = AmplitudeLaw::rayleigh(vec![1.0; lattice.n_modes()])?;
        let ensemble = statistics::generate_ensemble(lattice, &law, seed, 1000)?;
        let d = statistics::phase_diagnostics(&ensemble, 200, seed)?;
        let e = statistics::phi_psi_example(1000, 4, seed)?;
        let phi = e.phi_within(3.0);
        let psi = e.psi_vanishes();
        let mut v = judge_phases(&d);
        v.id = "10".into();
        v.title = "phase statistics".into();
        v.passed &= phi && psi;
        v.detail = format!(
            "{}; phi covariance {:.3} vs 4π²Var(N) = {:.3} (se {:.3}, {}), psi cross-statistics {}",
            v.detail,
            e.phi_covariance,
            e.expected_covariance,
            e.phi_covariance_stderr,
            if phi { "within 3 se" } else { "outside 3 se" },
            if psi { "vanish" } else { "do not vanish" }
        );
        Ok(v)
    })
}

/// `step_kinetic` with `γ̃` against the same step with damping `γ - γ̃` and no forcing.
pub fn renormalization(seed: u64) -> Verdict {
    run("11", "renormalization is bit-identical", || {
        let cfg = ExperimentConfig::defaults(ExperimentKind::KzFluxScan);
        let lattice = cfg.lattice()?;
        let model = KineticModel::new(&lattice, &cfg.system()?, &cfg.broadening()?)?;
        let n = cfg.spectrum(&lattice);
        let gt: Vec<f64> = (0..n.len())
            .map(|k| {
                let mut r = crate::rng::stream(seed, 0, k as u64);
                0.01 * (2.0 * crate::rng::open_unit(&mut r) - 1.0)
            })
            .collect();
        let dt = 1e-3;
        let forced = kinetics::step_kinetic(&KineticState::new(n.clone()).with_forcing(gt.clone()), &model, dt)?;
        let r = model.rates(&n)?;
        let shifted = KineticState {
            n,
            eta: r.eta,
            gamma: r.gamma.iter().zip(&gt).map(|(g, t)| g - t).collect(),
            gamma_tilde: vec![0.0; gt.len()],
            time: 0.0,
        };
        let plain = kinetics::advance(&shifted, dt)?;
        let same = forced.n.iter().zip(&plain.n).all(|(a, b)| a.to_bits() == b.to_bits());
        Ok(Verdict::new(
            "11",
            "renormalization is bit-identical",
            same,
            format!("{} modes compared bitwise after one step", forced.n.len()),
        ))
    })
}

/// Criterion ids, in order.
pub const CRITERIA: [&str; 11] = ["1", "2", "3", "4", "5", "6", "7", "8", "9", "10", "11"];

/// All criteria in order. `seed` drives the randomized ones.
pub fn run_acceptance(seed: u64) -> Vec<Verdict> {
    run_criteria(&CRITERIA, seed)
}

/// The criteria whose ids appear in `ids`, in criterion order. Unknown ids are ignored.
pub fn run_criteria(ids: &[&str], seed: u64) -> Vec<Verdict> {
    let want = |id: &str| ids.contains(&id);
    let mut out = Vec::new();
    if want("1") {
        out.push(kernel_asymptotics());
    }
    if want("2") {
        out.push(perturbation_order(seed));
    }
    if want("3") {
        out.push(monte_carlo_kinetic(seed));
    }
    if want("4") {
        out.push(detailed_balance());
    }
    if want("5") {
        out.push(gaussian_moments(seed));
    }
    if want("6") {
        out.push(finite_flux_pdf());
    }
    if want("7") || want("8") || want("9") {
        out.extend(pbp_criteria().into_iter().filter(|v| want(&v.id)));
    }
    if want("10") {
        out.push(phase_statistics(seed));
    }
    if want("11") {
        out.push(renormalization(seed));
    }
    out
}

pub const DEFAULT_SEED: u64 = 1;
