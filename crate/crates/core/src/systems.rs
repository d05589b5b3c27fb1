//! Dispersion laws and interaction coefficients.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{invalid, Result, WtError};
use crate::lattice::Wavevector;

/// Above this nonlinearity the weak-turbulence ordering is doubtful.
pub const EPSILON_WARN: f64 = 0.3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Order {
    ThreeWave,
    FourWave,
}

impl Order {
    pub fn name(self) -> &'static str {
        match self {
            Order::ThreeWave => "three-wave",
            Order::FourWave => "four-wave",
        }
    }
}

pub type DispersionFn = Arc<dyn Fn(Wavevector) -> f64 + Send + Sync>;
pub type Coupling3Fn = Arc<dyn Fn(Wavevector, Wavevector, Wavevector) -> Complex64 + Send + Sync>;
pub type Coupling4Fn =
    Arc<dyn Fn(Wavevector, Wavevector, Wavevector, Wavevector) -> Complex64 + Send + Sync>;

/// User-supplied wave system.
#[derive(Clone)]
pub struct CustomSystem {
    pub name: String,
    pub order: Order,
    pub dispersion: DispersionFn,
    pub coupling3: Option<Coupling3Fn>,
    pub coupling4: Option<Coupling4Fn>,
}

impl fmt::Debug for CustomSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomSystem")
            .field("name", &self.name)
            .field("order", &self.order)
            .finish_non_exhaustive()
    }
}

#[derive(Debug, Clone)]
pub enum SystemKind {
    /// Surface capillary waves, `ω = sqrt(σ k³)`.
    Capillary { sigma: f64 },
    /// Rossby waves, `ω = β k_x / (1 + ρ² k²)`.
    Rossby { beta: f64, rho: f64 },
    /// Nonlinear Schrödinger waves, `ω = k²`, `W = 1`.
    Nls,
    /// Surface gravity waves, `ω = sqrt(g k)`; dispersion only.
    Gravity { g: f64 },
    Custom(CustomSystem),
}

impl SystemKind {
    pub fn name(&self) -> &str {
        match self {
            SystemKind::Capillary { .. } => "capillary",
            SystemKind::Rossby { .. } => "rossby",
            SystemKind::Nls => "nls",
            SystemKind::Gravity { .. } => "gravity",
            SystemKind::Custom(c) => &c.name,
        }
    }
}

#[derive(Debug, Clone)]
pub struct WaveSystem {
    pub kind: SystemKind,
    pub epsilon: f64,
}

fn norm(k: Wavevector) -> f64 {
    (k[0] * k[0] + k[1] * k[1] + k[2] * k[2]).sqrt()
}

fn dot(a: Wavevector, b: Wavevector) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn neg(a: Wavevector) -> Wavevector {
    [-a[0], -a[1], -a[2]]
}

fn is_zero(k: Wavevector) -> bool {
    k.iter().all(|&c| c == 0.0)
}

fn positive(name: &'static str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(invalid(name, format!("must be positive, got {v}")))
    }
}

impl WaveSystem {
    pub fn new(kind: SystemKind, epsilon: f64) -> Result<Self> {
        if !(epsilon >= 0.0) || !epsilon.is_finite() {
            return Err(invalid("epsilon", format!("must be non-negative, got {epsilon}")));
        }
        match &kind {
            SystemKind::Capillary { sigma } => positive("sigma", *sigma)?,
            SystemKind::Rossby { beta, rho } => {
                positive("beta", *beta)?;
                if !(*rho >= 0.0) {
                    return Err(invalid("rho", format!("must be non-negative, got {rho}")));
                }
            }
            SystemKind::Gravity { g } => positive("g", *g)?,
            SystemKind::Nls | SystemKind::Custom(_) => {}
        }
        if epsilon > EPSILON_WARN {
            log::warn!("epsilon = {epsilon} is outside the weakly nonlinear regime");
        }
        Ok(Self { kind, epsilon })
    }

    pub fn capillary(sigma: f64, epsilon: f64) -> Result<Self> {
        Self::new(SystemKind::Capillary { sigma }, epsilon)
    }

    pub fn rossby(beta: f64, rho: f64, epsilon: f64) -> Result<Self> {
        Self::new(SystemKind::Rossby { beta, rho }, epsilon)
    }

    pub fn nls(epsilon: f64) -> Result<Self> {
        Self::new(SystemKind::Nls, epsilon)
    }

    pub fn gravity(g: f64, epsilon: f64) -> Result<Self> {
        Self::new(SystemKind::Gravity { g }, epsilon)
    }

    pub fn with_epsilon(&self, epsilon: f64) -> Result<Self> {
        Self::new(self.kind.clone(), epsilon)
    }

    pub fn order(&self) -> Order {
        match &self.kind {
            SystemKind::Capillary { .. } | SystemKind::Rossby { .. } => Order::ThreeWave,
            SystemKind::Nls | SystemKind::Gravity { .. } => Order::FourWave,
            SystemKind::Custom(c) => c.order,
        }
    }

    pub(crate) fn dispersion_key(&self) -> String {
        match &self.kind {
            SystemKind::Capillary { sigma } => format!("capillary:{:x}", sigma.to_bits()),
            SystemKind::Rossby { beta, rho } => {
                format!("rossby:{:x}:{:x}", beta.to_bits(), rho.to_bits())
            }
            SystemKind::Nls => "nls".into(),
            SystemKind::Gravity { g } => format!("gravity:{:x}", g.to_bits()),
            SystemKind::Custom(c) => format!("custom:{}", c.name),
        }
    }

    pub fn dispersion(&self, k: Wavevector) -> Result<f64> {
        let kk = norm(k);
        let w = match &self.kind {
            SystemKind::Capillary { sigma } => (sigma * kk * kk * kk).sqrt(),
            SystemKind::Rossby { beta, rho } => beta * k[0] / (1.0 + rho * rho * kk * kk),
            SystemKind::Nls => kk * kk,
            SystemKind::Gravity { g } => (g * kk).sqrt(),
            SystemKind::Custom(c) => (c.dispersion)(k),
        };
        if !w.is_finite() {
            return Err(invalid("k", format!("dispersion is not finite at {k:?}")));
        }
        Ok(w)
    }

    fn require(&self, order: Order) -> Result<()> {
        if self.order() != order {
            return Err(WtError::OrderMismatch {
                expected: order.name(),
                found: self.order().name(),
            });
        }
        Ok(())
    }

    /// Three-wave coefficient `V^l_{mn}`; zero whenever an argument is the zero wavevector.
    pub fn coupling3(&self, kl: Wavevector, km: Wavevector, kn: Wavevector) -> Result<Complex64> {
        self.require(Order::ThreeWave)?;
        if is_zero(kl) || is_zero(km) || is_zero(kn) {
            return Ok(Complex64::new(0.0, 0.0));
        }
        match &self.kind {
            SystemKind::Capillary { sigma } => {
                let (l, m, n) = (norm(kl), norm(km), norm(kn));
                let w = |k: f64| (sigma * k * k * k).sqrt();
                let lfun = |a: Wavevector, b: Wavevector| dot(a, b) + norm(a) * norm(b);
                let bracket = lfun(km, kn) / ((m * n).sqrt() * l)
                    - lfun(kl, neg(km)) / ((l * m).sqrt() * n)
                    - lfun(kl, neg(kn)) / ((l * n).sqrt() * m);
                let pref = 1.0 / (8.0 * PI * (2.0 * sigma).sqrt());
                Ok(Complex64::new(pref * (w(l) * w(m) * w(n)).sqrt() * bracket, 0.0))
            }
            SystemKind::Rossby { beta, rho } => {
                let g = |k: Wavevector| k[1] / (1.0 + rho * rho * dot(k, k));
                let amp = (kl[0] * km[0] * kn[0]).abs().sqrt();
                let val = -beta / (4.0 * PI) * amp * (g(kl) - g(km) - g(kn));
                Ok(Complex64::new(0.0, val))
            }
            SystemKind::Custom(c) => match &c.coupling3 {
                Some(f) => Ok(f(kl, km, kn)),
                None => Err(WtError::Unsupported {
                    system: c.name.clone(),
                    what: "a three-wave coupling",
                }),
            },
            SystemKind::Nls | SystemKind::Gravity { .. } => unreachable!("order checked"),
        }
    }

    /// Four-wave coefficient `W^{lm}_{μν}`, symmetric under `l↔m` and `μ↔ν`.
    pub fn coupling4(
        &self,
        kl: Wavevector,
        km: Wavevector,
        kmu: Wavevector,
        knu: Wavevector,
    ) -> Result<Complex64> {
        self.require(Order::FourWave)?;
        if is_zero(kl) || is_zero(km) || is_zero(kmu) || is_zero(knu) {
            return Ok(Complex64::new(0.0, 0.0));
        }
        match &self.kind {
            SystemKind::Nls => Ok(Complex64::new(1.0, 0.0)),
            SystemKind::Gravity { .. } => Err(WtError::Unsupported {
                system: "gravity".into(),
                what: "a four-wave coupling",
            }),
            SystemKind::Custom(c) => match &c.coupling4 {
                Some(f) => Ok((f(kl, km, kmu, knu)
                    + f(km, kl, kmu, knu)
                    + f(kl, km, knu, kmu)
                    + f(km, kl, knu, kmu))
                    * 0.25),
                None => Err(WtError::Unsupported {
                    system: c.name.clone(),
                    what: "a four-wave coupling",
                }),
            },
            SystemKind::Capillary { .. } | SystemKind::Rossby { .. } => {
                unreachable!("order checked")
            }
        }
    }
}
