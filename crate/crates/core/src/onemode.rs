//! One-mode statistics: the moment hierarchy and the probability-flux equation
//! `∂_t P + ∂_s F = 0`, `F = -s(γP + η ∂_s P)`.
//!
//! Densities live at cell centres of a face grid starting at `s = 0`; the mass is the
//! midpoint sum `Σ w_i P_i`, which the finite-volume update conserves exactly.

use serde::Serialize;

use crate::error::{invalid, Result, WtError};
use crate::expint::{ei, ei_scaled, EULER_GAMMA};

/// `dM^(p)/dt = p²η M^(p-1) - pγ M^(p)` with `moments[0] = M^(0) = 1`.
pub fn moment_rhs(p: usize, moments: &[f64], eta: f64, gamma: f64) -> Result<f64> {
    if p == 0 || p >= moments.len() {
        return Err(invalid("p", format!("must lie in 1..{}, got {p}", moments.len())));
    }
    let pf = p as f64;
    Ok(pf * pf * eta * moments[p - 1] - pf * gamma * moments[p])
}

/// Fixed point of the hierarchy: `M^(p) = p (η/γ) M^(p-1)`, `M^(0) = 1`.
pub fn steady_moments(p_max: usize, eta: f64, gamma: f64) -> Result<Vec<f64>> {
    if !(gamma > 0.0) || !(eta >= 0.0) {
        return Err(invalid("rates", format!("need gamma > 0 and eta >= 0, got {gamma}, {eta}")));
    }
    let mut m = vec![1.0];
    for p in 1..=p_max {
        m.push(p as f64 * (eta / gamma) * m[p - 1]);
    }
    Ok(m)
}

/// `s_nl = ω / (ε W k²)`.
pub fn breaking_amplitude(omega: f64, epsilon: f64, w: f64, k: f64) -> Result<f64> {
    for (name, v) in [("omega", omega), ("epsilon", epsilon), ("W", w), ("k", k)] {
        if !(v > 0.0) || !v.is_finite() {
            return Err(invalid(name, format!("must be positive, got {v}")));
        }
    }
    Ok(omega / (epsilon * w * k * k))
}

/// Warns when the cutoff sits close to the PDF core.
pub fn check_breaking_regime(n: f64, s_nl: f64) -> bool {
    let ok = s_nl >= 10.0 * n;
    if !ok {
        log::warn!("wavebreaking cutoff {s_nl} is within a decade of the spectrum value {n}");
    }
    ok
}

/// Leading terms of the large-`s` tail of the particular solution:
/// `-F/(sγ) - ηF/(sγ)²`.
pub fn tail_series(s: f64, flux: f64, gamma: f64, eta: f64, terms: usize) -> Result<f64> {
    match terms {
        1 => Ok(-flux / (s * gamma)),
        2 => Ok(-flux / (s * gamma) - eta * flux / ((s * gamma) * (s * gamma))),
        _ => Err(invalid("terms", format!("must be 1 or 2, got {terms}"))),
    }
}

/// Face grid on `[0, s_max]`; cell `i` spans `[faces[i], faces[i+1]]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Grid {
    faces: Vec<f64>,
}

impl Grid {
    pub fn from_faces(faces: Vec<f64>) -> Result<Self> {
        if faces.len() < 3 {
            return Err(invalid("s-grid", "needs at least two cells"));
        }
        if faces[0] != 0.0 {
            return Err(invalid("s-grid", "first face must be s = 0"));
        }
        if faces.windows(2).any(|w| !(w[1] > w[0])) || !faces[faces.len() - 1].is_finite() {
            return Err(invalid("s-grid", "faces must be finite and strictly increasing"));
        }
        Ok(Self { faces })
    }

    /// First cell `[0, s_min]`, then `cells - 1` geometrically growing cells up to `s_max`.
    pub fn geometric(s_min: f64, s_max: f64, cells: usize) -> Result<Self> {
        if !(s_min > 0.0) || !(s_max > s_min) || cells < 2 {
            return Err(invalid("s-grid", format!("need 0 < s_min < s_max and >= 2 cells, got {s_min}, {s_max}, {cells}")));
        }
        let ratio = (s_max / s_min).powf(1.0 / (cells - 1) as f64);
        let mut faces = vec![0.0, s_min];
        for i in 1..cells {
            faces.push(if i == cells - 1 { s_max } else { s_min * ratio.powi(i as i32) });
        }
        Self::from_faces(faces)
    }

    /// Default grid: 400 cells over `[0, max(20n, 2 s_nl)]`, first cell `n·10⁻⁴`.
    pub fn default_for(n: f64, s_nl: Option<f64>) -> Result<Self> {
        let top = s_nl.map_or(20.0 * n, |c| (20.0 * n).max(2.0 * c));
        Self::geometric(1e-4 * n, top, 400)
    }

    pub fn uniform(s_max: f64, cells: usize) -> Result<Self> {
        Self::from_faces((0..=cells).map(|i| s_max * i as f64 / cells as f64).collect())
    }

    pub fn faces(&self) -> &[f64] {
        &self.faces
    }

    pub fn cells(&self) -> usize {
        self.faces.len() - 1
    }

    pub fn centers(&self) -> Vec<f64> {
        self.faces.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect()
    }

    pub fn widths(&self) -> Vec<f64> {
        self.faces.windows(2).map(|w| w[1] - w[0]).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OneModePdf {
    pub grid: Grid,
    /// Density at cell centres.
    pub p: Vec<f64>,
    /// Probability flux on faces.
    pub flux: Vec<f64>,
    pub eta: f64,
    pub gamma: f64,
    pub time: f64,
}

/// `B(x) = x / (e^x - 1)`, `B(0) = 1`.
fn bernoulli(x: f64) -> f64 {
    if x.abs() < 1e-6 {
        1.0 - 0.5 * x + x * x / 12.0
    } else {
        x / x.exp_m1()
    }
}

impl OneModePdf {
    pub fn new(grid: Grid, p: Vec<f64>, eta: f64, gamma: f64) -> Result<Self> {
        if p.len() != grid.cells() {
            return Err(WtError::LengthMismatch {
                what: "density",
                expected: grid.cells(),
                found: p.len(),
            });
        }
        if !(eta > 0.0) || !gamma.is_finite() {
            return Err(invalid("rates", format!("need eta > 0 and finite gamma, got {eta}, {gamma}")));
        }
        if let Some(i) = p.iter().position(|v| !(*v >= 0.0)) {
            return Err(WtError::Negativity {
                index: i,
                value: p[i],
                tolerance: 0.0,
            });
        }
        let mut pdf = Self {
            flux: vec![0.0; grid.cells() + 1],
            grid,
            p,
            eta,
            gamma,
            time: 0.0,
        };
        pdf.flux = pdf.face_flux();
        Ok(pdf)
    }

    /// Rayleigh intensity law `(1/n) e^{-s/n}` sampled at centres and renormalised.
    pub fn rayleigh(grid: Grid, n: f64, eta: f64, gamma: f64) -> Result<Self> {
        let p: Vec<f64> = grid.centers().iter().map(|s| (-s / n).exp() / n).collect();
        let mut pdf = Self::new(grid, p, eta, gamma)?;
        pdf.normalize();
        Ok(pdf)
    }

    pub fn mass(&self) -> f64 {
        self.grid.widths().iter().zip(&self.p).map(|(w, p)| w * p).sum()
    }

    pub fn normalize(&mut self) {
        let m = self.mass();
        if m > 0.0 {
            self.p.iter_mut().for_each(|v| *v /= m);
        }
        self.flux = self.face_flux();
    }

    /// Midpoint-rule `∫ s^p P ds`.
    pub fn moment(&self, p: i32) -> f64 {
        let c = self.grid.centers();
        let w = self.grid.widths();
        (0..self.p.len()).map(|i| w[i] * c[i].powi(p) * self.p[i]).sum()
    }

    /// Spectrum value `n = ∫ s P ds`.
    pub fn n(&self) -> f64 {
        self.moment(1)
    }

    /// Exponentially fitted flux; exact for `F = const` between neighbouring centres.
    /// The outer faces carry zero flux.
    pub fn face_flux(&self) -> Vec<f64> {
        let c = self.grid.centers();
        let faces = self.grid.faces();
        let cells = self.p.len();
        let a = self.gamma / self.eta;
        let mut f = vec![0.0; cells + 1];
        for i in 0..cells - 1 {
            let h = c[i + 1] - c[i];
            let d = self.eta * faces[i + 1];
            let z = a * h;
            f[i + 1] = d / h * (bernoulli(z) * self.p[i] - bernoulli(-z) * self.p[i + 1]);
        }
        f
    }

    /// Largest explicit step that keeps every updated density non-negative.
    pub fn max_step(&self) -> f64 {
        let c = self.grid.centers();
        let faces = self.grid.faces();
        let w = self.grid.widths();
        let cells = self.p.len();
        let a = self.gamma / self.eta;
        let mut out_rate = vec![0.0; cells];
        for i in 0..cells - 1 {
            let h = c[i + 1] - c[i];
            let d = self.eta * faces[i + 1] / h;
            out_rate[i] += d * bernoulli(a * h);
            out_rate[i + 1] += d * bernoulli(-a * h);
        }
        (0..cells)
            .filter(|&i| out_rate[i] > 0.0)
            .map(|i| w[i] / out_rate[i])
            .fold(f64::INFINITY, f64::min)
    }
}

/// One explicit conservative step with zero-flux outer boundaries.
pub fn evolve_pdf(pdf: &OneModePdf, dt: f64) -> Result<OneModePdf> {
    if !(dt > 0.0) {
        return Err(invalid("dt", format!("must be positive, got {dt}")));
    }
    let bound = pdf.max_step();
    if dt > bound * (1.0 + 1e-12) {
        return Err(WtError::StepTooLarge { dt, bound });
    }
    let f = pdf.face_flux();
    let w = pdf.grid.widths();
    let p: Vec<f64> = (0..pdf.p.len())
        .map(|i| (pdf.p[i] - dt / w[i] * (f[i + 1] - f[i])).max(0.0))
        .collect();
    let mut next = OneModePdf {
        grid: pdf.grid.clone(),
        p,
        flux: Vec::new(),
        eta: pdf.eta,
        gamma: pdf.gamma,
        time: pdf.time + dt,
    };
    next.flux = next.face_flux();
    Ok(next)
}

/// Advances by `duration` in equal steps no larger than `dt`.
pub fn evolve_pdf_for(pdf: &OneModePdf, duration: f64, dt: f64) -> Result<OneModePdf> {
    let steps = (duration / dt).ceil().max(1.0) as usize;
    let h = duration / steps as f64;
    let mut cur = pdf.clone();
    for _ in 0..steps {
        cur = evolve_pdf(&cur, h)?;
    }
    Ok(cur)
}

/// Closed-form steady solution `P = (C - (F/η) Ei(s/n)) e^{-s/n}` on `[0, s_cut]`, zero above.
///
/// `C` normalises `∫₀^{s_cut} P ds = 1` exactly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SteadyPdf {
    pub n: f64,
    pub flux: f64,
    pub eta: f64,
    pub s_cut: f64,
    pub c: f64,
}

/// `∫₀^X Ei(x) e^{-x} dx = ln X + γ_E - Ei(X) e^{-X}`.
fn ei_weighted_integral(x: f64) -> f64 {
    x.ln() + EULER_GAMMA - ei_scaled(x)
}

impl SteadyPdf {
    pub fn new(n: f64, flux: f64, eta: f64, s_cut: f64) -> Result<Self> {
        if !(n > 0.0) || !(eta > 0.0) || !(s_cut > 0.0) || !flux.is_finite() {
            return Err(invalid("steady pdf", format!("need n, eta, s_cut > 0 and finite F, got {n}, {eta}, {s_cut}, {flux}")));
        }
        let x = s_cut / n;
        let hom = n * (-(-x).exp_m1());
        let c = (1.0 + flux / eta * n * ei_weighted_integral(x)) / hom;
        Ok(Self {
            n,
            flux,
            eta,
            s_cut,
            c,
        })
    }

    pub fn gamma(&self) -> f64 {
        self.eta / self.n
    }

    pub fn density(&self, s: f64) -> f64 {
        if s > self.s_cut || s < 0.0 {
            return 0.0;
        }
        if s == 0.0 {
            return if self.flux == 0.0 { self.c } else { f64::INFINITY * -self.flux.signum() };
        }
        let x = s / self.n;
        self.c * (-x).exp() - self.flux / self.eta * ei_scaled(x)
    }

    /// Homogeneous and particular parts separately.
    pub fn parts(&self, s: f64) -> (f64, f64) {
        let x = s / self.n;
        (self.c * (-x).exp(), -self.flux / self.eta * ei_scaled(x))
    }

    /// `-s(γP + η ∂_s P)` with the derivative taken analytically.
    pub fn flux_at(&self, s: f64) -> f64 {
        // ∂_s P = -P/n - (F/η) / s
        let p = self.density(s);
        let dp = -p / self.n - self.flux / (self.eta * s);
        -s * (self.gamma() * p + self.eta * dp)
    }
}

/// Steady finite-flux PDF sampled at the grid centres.
///
/// Errors when the requested flux makes the density negative at some centre below the
/// cutoff; the error carries the admissible flux interval for this grid.
pub fn steady_pdf(grid: &Grid, n: f64, flux: f64, eta: f64, s_cut: Option<f64>) -> Result<(OneModePdf, SteadyPdf)> {
    let top = grid.faces()[grid.cells()];
    let s_cut = s_cut.unwrap_or(top);
    let sol = SteadyPdf::new(n, flux, eta, s_cut)?;
    let centers = grid.centers();
    // P = A(s) + F·B(s), both parts from the unit-flux solution.
    let base = SteadyPdf::new(n, 0.0, eta, s_cut)?;
    let unit = SteadyPdf::new(n, 1.0, eta, s_cut)?;
    let (mut lower, mut upper) = (f64::NEG_INFINITY, f64::INFINITY);
    for &s in centers.iter().filter(|s| **s <= s_cut) {
        let a = base.density(s);
        let b = unit.density(s) - a;
        if b > 0.0 {
            lower = lower.max(-a / b);
        } else if b < 0.0 {
            upper = upper.min(a / -b);
        }
    }
    if flux < lower || flux > upper {
        return Err(WtError::Positivity {
            flux,
            lower,
            upper,
        });
    }
    let p: Vec<f64> = centers.iter().map(|&s| sol.density(s).max(0.0)).collect();
    let gamma = eta / n;
    let mut pdf = OneModePdf::new(grid.clone(), p, eta, gamma)?;
    for (k, f) in pdf.flux.iter_mut().enumerate() {
        let s = grid.faces()[k];
        *f = if k == 0 || s > s_cut { 0.0 } else { flux };
    }
    Ok((pdf, sol))
}

/// Same-`n` Rayleigh density `(1/n) e^{-s/n}`.
pub fn rayleigh_density(s: f64, n: f64) -> f64 {
    (-s / n).exp() / n
}

/// `Ei(s/n)`, exposed for callers that tabulate the particular solution.
pub fn particular_profile(s: f64, n: f64) -> f64 {
    ei(s / n)
}
