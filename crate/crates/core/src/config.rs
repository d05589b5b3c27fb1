//! Declarative experiment configuration (TOML).
//!
//! Every section is optional and every key has a default, listed in the table below.
//! Unknown keys are rejected by name; range violations name the offending field.
//!
//! | key | default |
//! |-----|---------|
//! | `kind` | required |
//! | `seed` | `1` |
//! | `lattice.dim`, `lattice.n_side`, `lattice.box_length` | `1`, `32`, `2π` (`2`, `6` for `mc-kinetic-4w`) |
//! | `system.kind` | `"nls"` for `mc-kinetic-4w`, else `"capillary"` |
//! | `system.epsilon` | `0.05` |
//! | `system.sigma`, `system.beta`, `system.rho`, `system.g` | `1`, `1`, `1`, `9.81` |
//! | `ensemble.realizations`, `ensemble.rotations`, `ensemble.law` | `1000` (`2000` for `mc-kinetic-4w`), `4` (`1` for `mc-kinetic-4w`), `"rayleigh"` |
//! | `spectrum.shape` | `"band"` |
//! | `spectrum.level`, `spectrum.background` | `0.1`, `1e-3` |
//! | `spectrum.k_low`, `spectrum.k_high`, `spectrum.k0`, `spectrum.exponent` | `4`, `5` (`1.5`, `2.5` for `mc-kinetic-4w`), `6`, `-2` |
//! | `time.horizon`, `time.dt_factor` | `1`, `0.5` |
//! | `kinetic.broadening`, `kinetic.delta_omega` | `"fejer"`, `2π / time.horizon` |
//! | `perturbation.epsilons`, `perturbation.amplitude` | `[0.02, 0.04, 0.08]`, `1` |
//! | `onemode.n`, `onemode.flux`, `onemode.eta`, `onemode.cells` | `1`, `-0.05`, `1`, `400` |
//! | `onemode.s_max`, `onemode.s_cut` | `40 n`, none |
//! | `pbp.cells`, `pbp.omega`, `pbp.spectrum`, `pbp.extent` | `48`, `[3, 1, 2]`, `[0.2, 1, 0.8]`, `12` |
//! | `kz.force_k`, `kz.damp_k`, `kz.force_rate`, `kz.damp_rate` | `[1, 2]`, `10`, `0.05`, `1` |
//! | `kz.steps`, `kz.dt_factor` | `20000`, `0.5` |
//! | `output.dir` | `"out"` |

use std::f64::consts::PI;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::{Result, WtError};
use crate::kinetics::Broadening;
use crate::lattice::FourierLattice;
use crate::output::sha256_hex;
use crate::statistics::{AmplitudeLaw, LawShape};
use crate::systems::WaveSystem;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ExperimentKind {
    #[serde(rename = "mc-kinetic-3w")]
    McKinetic3w,
    #[serde(rename = "mc-kinetic-4w")]
    McKinetic4w,
    #[serde(rename = "perturbation-scaling")]
    PerturbationScaling,
    #[serde(rename = "onemode-pdf")]
    OnemodePdf,
    #[serde(rename = "pbp-triad")]
    PbpTriad,
    #[serde(rename = "kz-flux-scan")]
    KzFluxScan,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 6] = [
        Self::McKinetic3w,
        Self::McKinetic4w,
        Self::PerturbationScaling,
        Self::OnemodePdf,
        Self::PbpTriad,
        Self::KzFluxScan,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::McKinetic3w => "mc-kinetic-3w",
            Self::McKinetic4w => "mc-kinetic-4w",
            Self::PerturbationScaling => "perturbation-scaling",
            Self::OnemodePdf => "onemode-pdf",
            Self::PbpTriad => "pbp-triad",
            Self::KzFluxScan => "kz-flux-scan",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LatticeSpec {
    pub dim: usize,
    pub n_side: usize,
    pub box_length: f64,
}

impl Default for LatticeSpec {
    fn default() -> Self {
        Self {
            dim: 1,
            n_side: 32,
            box_length: 2.0 * PI,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SystemSpec {
    pub kind: Option<String>,
    pub epsilon: f64,
    pub sigma: f64,
    pub beta: f64,
    pub rho: f64,
    pub g: f64,
}

impl Default for SystemSpec {
    fn default() -> Self {
        Self {
            kind: None,
            epsilon: 0.05,
            sigma: 1.0,
            beta: 1.0,
            rho: 1.0,
            g: 9.81,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EnsembleSpec {
    /// Total realizations `R`, counting every phase-rotated copy.
    pub realizations: usize,
    /// Global phase rotations `e^{2πiq/Q}` applied to each base field; must divide `R`.
    pub rotations: usize,
    pub law: String,
}

impl Default for EnsembleSpec {
    fn default() -> Self {
        Self {
            realizations: 1000,
            rotations: 4,
            law: "rayleigh".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpectrumSpec {
    /// `band`: `level` for `k_low ≤ |k| ≤ k_high`, else `background`.
    /// `gaussian`: `level e^{-(|k|/k0)²}`. `power`: `level |k|^exponent`. `constant`: `level`.
    pub shape: String,
    pub level: f64,
    pub background: f64,
    pub k_low: f64,
    pub k_high: f64,
    pub k0: f64,
    pub exponent: f64,
}

impl Default for SpectrumSpec {
    fn default() -> Self {
        Self {
            shape: "band".into(),
            level: 0.1,
            background: 1e-3,
            k_low: 4.0,
            k_high: 5.0,
            k0: 6.0,
            exponent: -2.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TimeSpec {
    pub horizon: f64,
    /// Integration step as a fraction of the stability cap.
    pub dt_factor: f64,
}

impl Default for TimeSpec {
    fn default() -> Self {
        Self {
            horizon: 1.0,
            dt_factor: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct KineticSpec {
    pub broadening: String,
    pub delta_omega: Option<f64>,
}

impl Default for KineticSpec {
    fn default() -> Self {
        Self {
            broadening: "fejer".into(),
            delta_omega: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PerturbationSpec {
    pub epsilons: Vec<f64>,
    /// Rayleigh scale `n` of every mode.
    pub amplitude: f64,
}

impl Default for PerturbationSpec {
    fn default() -> Self {
        Self {
            epsilons: vec![0.02, 0.04, 0.08],
            amplitude: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OneModeSpec {
    pub n: f64,
    pub flux: f64,
    pub eta: f64,
    pub cells: usize,
    pub s_max: Option<f64>,
    pub s_cut: Option<f64>,
}

impl Default for OneModeSpec {
    fn default() -> Self {
        Self {
            n: 1.0,
            flux: -0.05,
            eta: 1.0,
            cells: 400,
            s_max: None,
            s_cut: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PbpSpec {
    pub cells: usize,
    /// Frequencies of an exactly resonant triad `ω₀ = ω₁ + ω₂`.
    pub omega: Vec<f64>,
    /// Non-thermal spectrum for the through-flux product.
    pub spectrum: Vec<f64>,
    /// Grid extent per mode in units of its `n`.
    pub extent: f64,
}

impl Default for PbpSpec {
    fn default() -> Self {
        Self {
            cells: 48,
            omega: vec![3.0, 1.0, 2.0],
            spectrum: vec![0.2, 1.0, 0.8],
            extent: 12.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct KzSpec {
    /// `|k|` range receiving `γ̃ = +force_rate`.
    pub force_k: Vec<f64>,
    /// `|k|` from which `γ̃ = -damp_rate`.
    pub damp_k: f64,
    pub force_rate: f64,
    pub damp_rate: f64,
    pub steps: usize,
    /// Step as a fraction of the explicit stability bound.
    pub dt_factor: f64,
}

impl Default for KzSpec {
    fn default() -> Self {
        Self {
            force_k: vec![1.0, 2.0],
            damp_k: 10.0,
            force_rate: 0.05,
            damp_rate: 1.0,
            steps: 20_000,
            dt_factor: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSpec {
    pub dir: PathBuf,
}

impl Default for OutputSpec {
    fn default() -> Self {
        Self { dir: "out".into() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub lattice: LatticeSpec,
    #[serde(default)]
    pub system: SystemSpec,
    #[serde(default)]
    pub ensemble: EnsembleSpec,
    #[serde(default)]
    pub spectrum: SpectrumSpec,
    #[serde(default)]
    pub time: TimeSpec,
    #[serde(default)]
    pub kinetic: KineticSpec,
    #[serde(default)]
    pub perturbation: PerturbationSpec,
    #[serde(default)]
    pub onemode: OneModeSpec,
    #[serde(default)]
    pub pbp: PbpSpec,
    #[serde(default)]
    pub kz: KzSpec,
    #[serde(default)]
    pub output: OutputSpec,
}

fn default_seed() -> u64 {
    1
}

fn field_error(field: &str, reason: impl Into<String>) -> WtError {
    WtError::Config {
        field: field.to_string(),
        reason: reason.into(),
    }
}

fn line_column(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.rfind('\n').map_or(before.len(), |i| before.len() - i - 1) + 1;
    (line, column)
}

/// Parses, defaults and range-checks a config document.
pub fn validate_config(text: &str) -> Result<ExperimentConfig> {
    let mut cfg: ExperimentConfig = toml::from_str(text).map_err(|e| {
        let (line, column) = e.span().map_or((0, 0), |s| line_column(text, s.start));
        let message = e.message().to_string();
        match message.strip_prefix("unknown field `") {
            Some(rest) => {
                let name = rest.split('`').next().unwrap_or(rest);
                field_error(name, format!("unknown key (line {line}, column {column})"))
            }
            None => WtError::ConfigParse { line, column, message },
        }
    })?;
    if cfg.system.kind.is_none() {
        cfg.system.kind = Some(match cfg.kind {
            ExperimentKind::McKinetic4w => "nls".into(),
            _ => "capillary".into(),
        });
    }
    if cfg.kind == ExperimentKind::McKinetic4w {
        let given: toml::Table = toml::from_str(text).expect("already parsed");
        let set = |section: &str, key: &str| given.get(section).and_then(|t| t.get(key)).is_some();
        if !set("lattice", "dim") {
            cfg.lattice.dim = 2;
        }
        if !set("lattice", "n_side") {
            cfg.lattice.n_side = 6;
        }
        if !set("ensemble", "realizations") {
            cfg.ensemble.realizations = 2000;
        }
        if !set("ensemble", "rotations") {
            cfg.ensemble.rotations = 1;
        }
        if !set("spectrum", "k_low") {
            cfg.spectrum.k_low = 1.5;
        }
        if !set("spectrum", "k_high") {
            cfg.spectrum.k_high = 2.5;
        }
    }
    cfg.check()?;
    Ok(cfg)
}

fn positive(field: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(field_error(field, format!("must be positive and finite, got {v}")))
    }
}

impl ExperimentConfig {
    /// Defaults for `kind`, as a minimal config `kind = "..."` would produce.
    pub fn defaults(kind: ExperimentKind) -> Self {
        validate_config(&format!("kind = \"{}\"", kind.name())).expect("defaults are valid")
    }

    fn check(&self) -> Result<()> {
        let l = &self.lattice;
        if !(1..=3).contains(&l.dim) {
            return Err(field_error("lattice.dim", format!("must be 1, 2 or 3, got {}", l.dim)));
        }
        if l.n_side < 2 {
            return Err(field_error("lattice.n_side", format!("must be at least 2, got {}", l.n_side)));
        }
        positive("lattice.box_length", l.box_length)?;
        let s = &self.system;
        if !(s.epsilon >= 0.0 && s.epsilon.is_finite()) {
            return Err(field_error("system.epsilon", format!("must be >= 0, got {}", s.epsilon)));
        }
        self.system()?;
        let e = &self.ensemble;
        if e.realizations == 0 {
            return Err(field_error("ensemble.realizations", "must be at least 1, got 0"));
        }
        if e.rotations == 0 || !e.realizations.is_multiple_of(e.rotations) {
            return Err(field_error(
                "ensemble.rotations",
                format!("must be >= 1 and divide realizations = {}, got {}", e.realizations, e.rotations),
            ));
        }
        if !matches!(e.law.as_str(), "rayleigh" | "deterministic") {
            return Err(field_error("ensemble.law", format!("expected rayleigh or deterministic, got {:?}", e.law)));
        }
        let sp = &self.spectrum;
        if !matches!(sp.shape.as_str(), "band" | "gaussian" | "power" | "constant") {
            return Err(field_error(
                "spectrum.shape",
                format!("expected band, gaussian, power or constant, got {:?}", sp.shape),
            ));
        }
        positive("spectrum.level", sp.level)?;
        if !(sp.background >= 0.0) {
            return Err(field_error("spectrum.background", format!("must be >= 0, got {}", sp.background)));
        }
        positive("spectrum.k0", sp.k0)?;
        if !(sp.k_low <= sp.k_high) {
            return Err(field_error("spectrum.k_high", "must be >= spectrum.k_low"));
        }
        positive("time.horizon", self.time.horizon)?;
        if !(self.time.dt_factor > 0.0 && self.time.dt_factor <= 1.0) {
            return Err(field_error("time.dt_factor", format!("must lie in (0, 1], got {}", self.time.dt_factor)));
        }
        self.broadening()?;
        let p = &self.perturbation;
        if p.epsilons.len() < 2 {
            return Err(field_error("perturbation.epsilons", "needs at least two values"));
        }
        for &v in &p.epsilons {
            positive("perturbation.epsilons", v)?;
        }
        positive("perturbation.amplitude", p.amplitude)?;
        let o = &self.onemode;
        positive("onemode.n", o.n)?;
        positive("onemode.eta", o.eta)?;
        if !o.flux.is_finite() {
            return Err(field_error("onemode.flux", "must be finite"));
        }
        if o.cells < 3 {
            return Err(field_error("onemode.cells", format!("must be at least 3, got {}", o.cells)));
        }
        if let Some(v) = o.s_max {
            positive("onemode.s_max", v)?;
        }
        if let Some(v) = o.s_cut {
            positive("onemode.s_cut", v)?;
        }
        let b = &self.pbp;
        if b.cells < 3 {
            return Err(field_error("pbp.cells", format!("must be at least 3, got {}", b.cells)));
        }
        if b.omega.len() != 3 || b.omega.iter().any(|w| !(*w > 0.0)) {
            return Err(field_error("pbp.omega", "needs three positive frequencies"));
        }
        if (b.omega[0] - b.omega[1] - b.omega[2]).abs() > 1e-12 * b.omega[0] {
            return Err(field_error("pbp.omega", "must satisfy omega[0] = omega[1] + omega[2]"));
        }
        if b.spectrum.len() != 3 || b.spectrum.iter().any(|n| !(*n > 0.0)) {
            return Err(field_error("pbp.spectrum", "needs three positive values"));
        }
        positive("pbp.extent", b.extent)?;
        let k = &self.kz;
        if k.force_k.len() != 2 || !(k.force_k[0] <= k.force_k[1]) {
            return Err(field_error("kz.force_k", "needs [low, high] with low <= high"));
        }
        if !(k.damp_k > k.force_k[1]) {
            return Err(field_error("kz.damp_k", "must exceed the forcing band"));
        }
        positive("kz.force_rate", k.force_rate)?;
        positive("kz.damp_rate", k.damp_rate)?;
        if k.steps == 0 {
            return Err(field_error("kz.steps", "must be at least 1"));
        }
        if !(k.dt_factor > 0.0 && k.dt_factor <= 1.0) {
            return Err(field_error("kz.dt_factor", format!("must lie in (0, 1], got {}", k.dt_factor)));
        }
        Ok(())
    }

    pub fn lattice(&self) -> Result<FourierLattice> {
        FourierLattice::new(self.lattice.dim, self.lattice.n_side, self.lattice.box_length)
    }

    pub fn system(&self) -> Result<WaveSystem> {
        let s = &self.system;
        let kind = s.kind.as_deref().unwrap_or("capillary");
        let built = match kind {
            "capillary" => WaveSystem::capillary(s.sigma, s.epsilon),
            "rossby" => WaveSystem::rossby(s.beta, s.rho, s.epsilon),
            "nls" => WaveSystem::nls(s.epsilon),
            "gravity" => WaveSystem::gravity(s.g, s.epsilon),
            other => {
                return Err(field_error(
                    "system.kind",
                    format!("expected capillary, rossby, nls or gravity, got {other:?}"),
                ))
            }
        };
        built.map_err(|e| field_error("system", e.to_string()))
    }

    pub fn broadening(&self) -> Result<Broadening> {
        let k = &self.kinetic;
        let width = k.delta_omega.unwrap_or(2.0 * PI / self.time.horizon);
        positive("kinetic.delta_omega", width)?;
        Ok(match k.broadening.as_str() {
            "fejer" => Broadening::Fejer {
                time: 2.0 * PI / width,
            },
            "triangular" => Broadening::Triangular { width },
            "lorentzian" => Broadening::Lorentzian { width },
            other => {
                return Err(field_error(
                    "kinetic.broadening",
                    format!("expected fejer, triangular or lorentzian, got {other:?}"),
                ))
            }
        })
    }

    /// Initial spectrum `n_k` on `lattice`; the zero mode gets 0.
    pub fn spectrum(&self, lattice: &FourierLattice) -> Vec<f64> {
        let sp = &self.spectrum;
        (0..lattice.n_modes())
            .map(|i| {
                let k = lattice.wavevector(i);
                let mag = (k[0] * k[0] + k[1] * k[1] + k[2] * k[2]).sqrt();
                if mag == 0.0 {
                    return 0.0;
                }
                match sp.shape.as_str() {
                    "band" if (sp.k_low..=sp.k_high).contains(&mag) => sp.level,
                    "band" => sp.background,
                    "gaussian" => sp.level * (-(mag / sp.k0).powi(2)).exp(),
                    "power" => sp.level * mag.powf(sp.exponent),
                    _ => sp.level,
                }
            })
            .collect()
    }

    pub fn law(&self, scale: Vec<f64>) -> Result<AmplitudeLaw> {
        let shape = match self.ensemble.law.as_str() {
            "deterministic" => LawShape::DeterministicLevel,
            _ => LawShape::Rayleigh,
        };
        AmplitudeLaw::new(shape, scale)
    }

    /// SHA-256 of the canonical JSON form, so equivalent documents hash alike.
    pub fn hash(&self) -> String {
        sha256_hex(serde_json::to_string(self).expect("config serialises").as_bytes())
    }
}
