//! Joint PDF of a handful of modes: probability fluxes, their divergence and explicit
//! time stepping on a cell-centred tensor grid.
//!
//! Fluxes are built per ordered resonance with its kinetic weight `w`:
//!
//! - triad `(a; b, c)`: `F_a += -w S [∂]₃P`, `F_b += 2w S [∂]₃P`, with
//!   `S = s_a s_b s_c` and `[∂]₃ = ∂_a - ∂_b - ∂_c`;
//! - quartet `(j, l; m, n)`: `F_j += -w S [∂]₄P`, with `[∂]₄ = ∂_j + ∂_l - ∂_m - ∂_n`;
//! - source/sink: `F_j += γ̃_j s_j P`.
//!
//! With these constants the one-mode marginal of `F_j` over a product PDF is
//! `-s_j(γ_j P_j + η_j ∂P_j)` with exactly the kinetic `η_j`, `γ_j`.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid, Result, WtError};
use crate::kinetics::{Broadening, KineticModel, Rates};
use crate::lattice::FourierLattice;
use crate::systems::{Order, WaveSystem};

pub const MAX_MODES: usize = 6;
/// Default ceiling on tensor cells (each stored as one `f64` per field).
pub const DEFAULT_CELL_BUDGET: usize = 1 << 24;

/// Uniform cell-centred grid on `Π_j [0, S_j]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TensorGrid {
    cells: Vec<usize>,
    extent: Vec<f64>,
}

impl TensorGrid {
    pub fn new(cells: Vec<usize>, extent: Vec<f64>) -> Result<Self> {
        Self::with_budget(cells, extent, DEFAULT_CELL_BUDGET)
    }

    pub fn with_budget(cells: Vec<usize>, extent: Vec<f64>, budget: usize) -> Result<Self> {
        if cells.is_empty() || cells.len() > MAX_MODES {
            return Err(invalid("grid", format!("needs 1..={MAX_MODES} dimensions, got {}", cells.len())));
        }
        if cells.len() != extent.len() {
            return Err(WtError::LengthMismatch {
                what: "grid extent",
                expected: cells.len(),
                found: extent.len(),
            });
        }
        if cells.iter().any(|m| *m < 3) {
            return Err(invalid("grid", "every dimension needs at least 3 cells"));
        }
        if extent.iter().any(|s| !(*s > 0.0) || !s.is_finite()) {
            return Err(invalid("grid", "extents must be positive and finite"));
        }
        let total = cells.iter().try_fold(1usize, |acc, m| acc.checked_mul(*m));
        match total {
            Some(t) if t <= budget => {}
            _ => {
                return Err(WtError::MemoryBudget {
                    cells: total.unwrap_or(usize::MAX),
                    budget,
                })
            }
        }
        Ok(Self { cells, extent })
    }

    pub fn dims(&self) -> usize {
        self.cells.len()
    }

    pub fn cells(&self, j: usize) -> usize {
        self.cells[j]
    }

    pub fn extent(&self, j: usize) -> f64 {
        self.extent[j]
    }

    pub fn h(&self, j: usize) -> f64 {
        self.extent[j] / self.cells[j] as f64
    }

    pub fn center(&self, j: usize, i: usize) -> f64 {
        (i as f64 + 0.5) * self.h(j)
    }

    pub fn face(&self, j: usize, i: usize) -> f64 {
        i as f64 * self.h(j)
    }

    pub fn len(&self) -> usize {
        self.cells.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn cell_volume(&self) -> f64 {
        (0..self.dims()).map(|j| self.h(j)).product()
    }

    /// Row-major strides of a tensor whose dimension `j` has `shape[j]` entries.
    fn strides(shape: &[usize]) -> Vec<usize> {
        let mut s = vec![1; shape.len()];
        for j in (0..shape.len().saturating_sub(1)).rev() {
            s[j] = s[j + 1] * shape[j + 1];
        }
        s
    }

    fn face_shape(&self, j: usize) -> Vec<usize> {
        let mut s = self.cells.clone();
        s[j] += 1;
        s
    }

    fn decode(flat: usize, shape: &[usize], out: &mut [usize]) {
        let mut r = flat;
        for j in (0..shape.len()).rev() {
            out[j] = r % shape[j];
            r /= shape[j];
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MultiModePdf {
    /// Lattice indices (or labels) of the participating modes, in grid order.
    pub modes: Vec<usize>,
    pub grid: TensorGrid,
    /// Density at cell centres, row-major with the last mode fastest.
    pub p: Vec<f64>,
    pub time: f64,
}

impl MultiModePdf {
    pub fn new(modes: Vec<usize>, grid: TensorGrid, p: Vec<f64>) -> Result<Self> {
        if modes.len() != grid.dims() {
            return Err(WtError::LengthMismatch {
                what: "mode list",
                expected: grid.dims(),
                found: modes.len(),
            });
        }
        if p.len() != grid.len() {
            return Err(WtError::LengthMismatch {
                what: "joint density",
                expected: grid.len(),
                found: p.len(),
            });
        }
        Ok(Self {
            modes,
            grid,
            p,
            time: 0.0,
        })
    }

    /// `P = Π_j f(j, s_j)`, normalised on the grid.
    pub fn product(modes: Vec<usize>, grid: TensorGrid, f: impl Fn(usize, f64) -> f64 + Sync) -> Result<Self> {
        let d = grid.dims();
        let tables: Vec<Vec<f64>> = (0..d)
            .map(|j| (0..grid.cells(j)).map(|i| f(j, grid.center(j, i))).collect())
            .collect();
        let shape = grid.cells.clone();
        let p: Vec<f64> = (0..grid.len())
            .into_par_iter()
            .map(|flat| {
                let mut idx = [0usize; MAX_MODES];
                TensorGrid::decode(flat, &shape, &mut idx[..d]);
                (0..d).map(|j| tables[j][idx[j]]).product()
            })
            .collect();
        let mut pdf = Self::new(modes, grid, p)?;
        pdf.normalize();
        Ok(pdf)
    }

    /// `Π_j (1/n_j) e^{-s_j/n_j}`.
    pub fn exponential_product(modes: Vec<usize>, grid: TensorGrid, n: &[f64]) -> Result<Self> {
        if n.len() != grid.dims() {
            return Err(WtError::LengthMismatch {
                what: "spectrum",
                expected: grid.dims(),
                found: n.len(),
            });
        }
        Self::product(modes, grid, |j, s| (-s / n[j]).exp() / n[j])
    }

    pub fn mass(&self) -> f64 {
        self.p.iter().sum::<f64>() * self.grid.cell_volume()
    }

    pub fn normalize(&mut self) {
        let m = self.mass();
        if m > 0.0 {
            self.p.iter_mut().for_each(|v| *v /= m);
        }
    }

    pub fn min(&self) -> f64 {
        self.p.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// One-mode marginal density of grid dimension `j` at its cell centres.
    pub fn marginal(&self, j: usize) -> Vec<f64> {
        let d = self.grid.dims();
        let mut out = vec![0.0; self.grid.cells(j)];
        let mut idx = [0usize; MAX_MODES];
        for (flat, v) in self.p.iter().enumerate() {
            TensorGrid::decode(flat, &self.grid.cells, &mut idx[..d]);
            out[idx[j]] += v;
        }
        let other: f64 = (0..d).filter(|k| *k != j).map(|k| self.grid.h(k)).product();
        out.iter_mut().for_each(|v| *v *= other);
        out
    }

    /// `⟨s_j⟩` from the marginal.
    pub fn mean(&self, j: usize) -> f64 {
        let m = self.marginal(j);
        (0..m.len()).map(|i| m[i] * self.grid.center(j, i)).sum::<f64>() * self.grid.h(j)
    }
}

#[derive(Debug, Clone, PartialEq)]
struct FluxTerm {
    target: usize,
    coeff: f64,
    s: Vec<usize>,
    bracket: Vec<(usize, f64)>,
}

/// Resonances among the participating modes, in local (grid) indices.
#[derive(Debug, Clone, PartialEq)]
pub struct PbpModel {
    order: Order,
    dims: usize,
    triads: Vec<(usize, usize, usize, f64)>,
    quartets: Vec<(usize, usize, usize, usize, f64)>,
    pub gamma_tilde: Vec<f64>,
    terms: Vec<FluxTerm>,
}

impl PbpModel {
    /// Ordered triads `(a; b, c)` with kinetic weights, all indices below `dims`.
    pub fn from_triads(dims: usize, triads: Vec<(usize, usize, usize, f64)>) -> Result<Self> {
        let mut terms = Vec::new();
        for &(a, b, c, w) in &triads {
            check_local(&[a, b, c], dims)?;
            if a == b || a == c || b == c {
                return Err(invalid("triad", format!("({a}; {b}, {c}) repeats a mode")));
            }
            let s = vec![a, b, c];
            let bracket = vec![(a, 1.0), (b, -1.0), (c, -1.0)];
            terms.push(FluxTerm {
                target: a,
                coeff: -w,
                s: s.clone(),
                bracket: bracket.clone(),
            });
            terms.push(FluxTerm {
                target: b,
                coeff: 2.0 * w,
                s,
                bracket,
            });
        }
        Ok(Self {
            order: Order::ThreeWave,
            dims,
            triads,
            quartets: Vec::new(),
            gamma_tilde: vec![0.0; dims],
            terms,
        })
    }

    /// Ordered quartets `(j, l; m, n)` with kinetic weights.
    pub fn from_quartets(dims: usize, quartets: Vec<(usize, usize, usize, usize, f64)>) -> Result<Self> {
        let mut terms = Vec::new();
        for &(j, l, m, n, w) in &quartets {
            check_local(&[j, l, m, n], dims)?;
            if j == l || m == n {
                return Err(invalid("quartet", format!("({j}, {l}; {m}, {n}) repeats a mode")));
            }
            if (j == m && l == n) || (j == n && l == m) {
                continue;
            }
            if j == m || j == n || l == m || l == n {
                return Err(invalid("quartet", format!("({j}, {l}; {m}, {n}) shares a mode across sides")));
            }
            terms.push(FluxTerm {
                target: j,
                coeff: -w,
                s: vec![j, l, m, n],
                bracket: vec![(j, 1.0), (l, 1.0), (m, -1.0), (n, -1.0)],
            });
        }
        Ok(Self {
            order: Order::FourWave,
            dims,
            triads: Vec::new(),
            quartets,
            gamma_tilde: vec![0.0; dims],
            terms,
        })
    }

    /// Resonances of `system` internal to `modes`, weighted as in the kinetic equation.
    ///
    /// Tuples that repeat a mode are skipped with a warning.
    pub fn from_lattice(
        lattice: &FourierLattice,
        system: &WaveSystem,
        modes: &[usize],
        broadening: &Broadening,
    ) -> Result<Self> {
        for &m in modes {
            if m >= lattice.n_modes() {
                return Err(WtError::ModeOutOfSet {
                    mode: m,
                    count: lattice.n_modes(),
                });
            }
        }
        let kinetic = KineticModel::new(lattice, system, broadening)?;
        let local = |g: usize| modes.iter().position(|m| *m == g);
        let mut skipped = 0;
        let model = match system.order() {
            Order::ThreeWave => {
                let mut list = Vec::new();
                for (j, m, n, w) in kinetic.weighted_triads() {
                    if let (Some(a), Some(b), Some(c)) = (local(j), local(m), local(n)) {
                        if a == b || a == c || b == c {
                            skipped += 1;
                        } else {
                            list.push((a, b, c, w));
                        }
                    }
                }
                Self::from_triads(modes.len(), list)?
            }
            Order::FourWave => {
                let mut list = Vec::new();
                for (j, l, m, n, w) in kinetic.weighted_quartets() {
                    if let (Some(a), Some(b), Some(c), Some(d)) = (local(j), local(l), local(m), local(n)) {
                        if a == b || c == d {
                            skipped += 1;
                        } else {
                            list.push((a, b, c, d, w));
                        }
                    }
                }
                Self::from_quartets(modes.len(), list)?
            }
        };
        if skipped > 0 {
            log::warn!("skipped {skipped} resonances that repeat a mode");
        }
        Ok(model)
    }

    /// Restricts an explicit resonance list given in lattice indices to `modes`.
    ///
    /// Errors if a triad references a mode outside the list.
    pub fn from_lattice_triads(modes: &[usize], triads: &[(usize, usize, usize, f64)]) -> Result<Self> {
        let local = |g: usize| {
            modes.iter().position(|m| *m == g).ok_or(WtError::ModeOutOfSet {
                mode: g,
                count: modes.len(),
            })
        };
        let list = triads
            .iter()
            .map(|&(j, m, n, w)| Ok((local(j)?, local(m)?, local(n)?, w)))
            .collect::<Result<Vec<_>>>()?;
        Self::from_triads(modes.len(), list)
    }

    pub fn with_forcing(mut self, gamma_tilde: Vec<f64>) -> Result<Self> {
        if gamma_tilde.len() != self.dims {
            return Err(WtError::LengthMismatch {
                what: "gamma_tilde",
                expected: self.dims,
                found: gamma_tilde.len(),
            });
        }
        self.gamma_tilde = gamma_tilde;
        Ok(self)
    }

    pub fn order(&self) -> Order {
        self.order
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    /// Kinetic rates these resonances induce for local spectrum `n`.
    pub fn induced_rates(&self, n: &[f64]) -> Result<Rates> {
        let omega = vec![0.0; self.dims];
        let k = match self.order {
            Order::ThreeWave => KineticModel::from_weighted_triads(omega, self.triads.iter().copied())?,
            Order::FourWave => KineticModel::from_weighted_quartets(omega, self.quartets.iter().copied())?,
        };
        k.rates(n)
    }
}

fn check_local(idx: &[usize], dims: usize) -> Result<()> {
    match idx.iter().find(|i| **i >= dims) {
        Some(&mode) => Err(WtError::ModeOutOfSet { mode, count: dims }),
        None => Ok(()),
    }
}

/// Face-centred flux components; component `j` has `cells(j) + 1` entries along `j`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FluxField {
    pub components: Vec<Vec<f64>>,
}

/// `∂_k P` at cell centres: centred inside, one-sided second order at the edges.
fn cell_derivative(pdf: &MultiModePdf, k: usize) -> Vec<f64> {
    let g = &pdf.grid;
    let d = g.dims();
    let m = g.cells(k);
    let stride = TensorGrid::strides(&g.cells)[k];
    let inv = 1.0 / (2.0 * g.h(k));
    let p = &pdf.p;
    (0..p.len())
        .into_par_iter()
        .map(|flat| {
            let mut idx = [0usize; MAX_MODES];
            TensorGrid::decode(flat, &g.cells, &mut idx[..d]);
            let i = idx[k];
            if i == 0 {
                (-3.0 * p[flat] + 4.0 * p[flat + stride] - p[flat + 2 * stride]) * inv
            } else if i == m - 1 {
                (3.0 * p[flat] - 4.0 * p[flat - stride] + p[flat - 2 * stride]) * inv
            } else {
                (p[flat + stride] - p[flat - stride]) * inv
            }
        })
        .collect()
}

fn check_model(pdf: &MultiModePdf, model: &PbpModel) -> Result<()> {
    if model.dims != pdf.grid.dims() {
        return Err(WtError::LengthMismatch {
            what: "model dimensions",
            expected: pdf.grid.dims(),
            found: model.dims,
        });
    }
    Ok(())
}

/// Probability flux of the joint PDF; outer faces carry zero flux.
pub fn pbp_flux(pdf: &MultiModePdf, model: &PbpModel) -> Result<FluxField> {
    check_model(pdf, model)?;
    let g = &pdf.grid;
    let d = g.dims();
    let derivs: Vec<Vec<f64>> = (0..d).map(|k| cell_derivative(pdf, k)).collect();
    let cell_strides = TensorGrid::strides(&g.cells);
    let components = (0..d)
        .map(|j| {
            let shape = g.face_shape(j);
            let total: usize = shape.iter().product();
            let terms: Vec<&FluxTerm> = model.terms.iter().filter(|t| t.target == j).collect();
            let forcing = model.gamma_tilde[j];
            let hj = g.h(j);
            (0..total)
                .into_par_iter()
                .map(|flat| {
                    let mut idx = [0usize; MAX_MODES];
                    TensorGrid::decode(flat, &shape, &mut idx[..d]);
                    let i = idx[j];
                    if i == 0 || i == g.cells(j) {
                        return 0.0;
                    }
                    let mut right = 0;
                    for k in 0..d {
                        right += idx[k] * cell_strides[k];
                    }
                    let left = right - cell_strides[j];
                    let p_face = 0.5 * (pdf.p[left] + pdf.p[right]);
                    let coord = |k: usize| if k == j { g.face(j, i) } else { g.center(k, idx[k]) };
                    let mut f = forcing * coord(j) * p_face;
                    for t in &terms {
                        let s: f64 = t.s.iter().map(|&k| coord(k)).product();
                        let br: f64 = t
                            .bracket
                            .iter()
                            .map(|&(k, sign)| {
                                let dk = if k == j {
                                    (pdf.p[right] - pdf.p[left]) / hj
                                } else {
                                    0.5 * (derivs[k][left] + derivs[k][right])
                                };
                                sign * dk
                            })
                            .sum();
                        f += t.coeff * s * br;
                    }
                    f
                })
                .collect()
        })
        .collect();
    Ok(FluxField { components })
}

/// Three-wave flux; errors for a four-wave model.
pub fn pbp_flux_3w(pdf: &MultiModePdf, model: &PbpModel) -> Result<FluxField> {
    if model.order != Order::ThreeWave {
        return Err(WtError::OrderMismatch {
            expected: "three-wave",
            found: model.order.name(),
        });
    }
    pbp_flux(pdf, model)
}

/// Four-wave flux; errors for a three-wave model.
pub fn pbp_flux_4w(pdf: &MultiModePdf, model: &PbpModel) -> Result<FluxField> {
    if model.order != Order::FourWave {
        return Err(WtError::OrderMismatch {
            expected: "four-wave",
            found: model.order.name(),
        });
    }
    pbp_flux(pdf, model)
}

/// `dP/dt = -Σ_j ∂_j F_j` by conservative differencing.
pub fn pbp_divergence(flux: &FluxField, pdf: &MultiModePdf) -> Result<Vec<f64>> {
    let g = &pdf.grid;
    let d = g.dims();
    if flux.components.len() != d {
        return Err(WtError::LengthMismatch {
            what: "flux components",
            expected: d,
            found: flux.components.len(),
        });
    }
    let face_strides: Vec<Vec<usize>> = (0..d).map(|j| TensorGrid::strides(&g.face_shape(j))).collect();
    for j in 0..d {
        let expect: usize = g.face_shape(j).iter().product();
        if flux.components[j].len() != expect {
            return Err(WtError::LengthMismatch {
                what: "flux component",
                expected: expect,
                found: flux.components[j].len(),
            });
        }
    }
    Ok((0..g.len())
        .into_par_iter()
        .map(|flat| {
            let mut idx = [0usize; MAX_MODES];
            TensorGrid::decode(flat, &g.cells, &mut idx[..d]);
            let mut div = 0.0;
            for j in 0..d {
                let fs = &face_strides[j];
                let lo: usize = (0..d).map(|k| idx[k] * fs[k]).sum();
                let hi = lo + fs[j];
                div += (flux.components[j][hi] - flux.components[j][lo]) / g.h(j);
            }
            -div
        })
        .collect())
}

/// `∫ |dP/dt| ds`, the L1 size of a divergence field.
pub fn residual_l1(div: &[f64], pdf: &MultiModePdf) -> f64 {
    div.iter().map(|v| v.abs()).sum::<f64>() * pdf.grid.cell_volume()
}

/// L1 divergence residual of `pdf` under `model`.
pub fn stationarity_residual(pdf: &MultiModePdf, model: &PbpModel) -> Result<f64> {
    let flux = pbp_flux(pdf, model)?;
    Ok(residual_l1(&pbp_divergence(&flux, pdf)?, pdf))
}

/// Conservative explicit step bound from the largest flux coefficients on the grid.
pub fn max_step(pdf: &MultiModePdf, model: &PbpModel) -> f64 {
    let g = &pdf.grid;
    let mut rate = 0.0;
    for t in &model.terms {
        let s: f64 = t.s.iter().map(|&k| g.extent(k)).product();
        let hj = g.h(t.target);
        for &(k, sign) in &t.bracket {
            rate += (t.coeff * sign).abs() * s / (hj * g.h(k));
        }
    }
    for j in 0..g.dims() {
        rate += model.gamma_tilde[j].abs() * g.extent(j) / g.h(j);
    }
    if rate == 0.0 {
        f64::INFINITY
    } else {
        0.5 / rate
    }
}

/// `steps` explicit Euler steps of `∂_t P = -Σ ∂_j F_j`.
pub fn evolve_pbp(pdf: &MultiModePdf, model: &PbpModel, dt: f64, steps: usize) -> Result<MultiModePdf> {
    check_model(pdf, model)?;
    if !(dt > 0.0) {
        return Err(invalid("dt", format!("must be positive, got {dt}")));
    }
    let bound = max_step(pdf, model);
    if dt > bound {
        return Err(WtError::StepTooLarge { dt, bound });
    }
    let mut cur = pdf.clone();
    for _ in 0..steps {
        let div = pbp_divergence(&pbp_flux(&cur, model)?, &cur)?;
        cur.p.par_iter_mut().zip(div.par_iter()).for_each(|(p, d)| *p += dt * d);
        cur.time += dt;
        if let Some(mode) = cur.p.iter().position(|v| !v.is_finite()) {
            return Err(WtError::BlowUp { time: cur.time, mode });
        }
    }
    Ok(cur)
}

/// Marginal flux of component `j` on its faces: `F_j` integrated over the other coordinates.
pub fn marginal_flux(flux: &FluxField, pdf: &MultiModePdf, j: usize) -> Vec<f64> {
    let g = &pdf.grid;
    let d = g.dims();
    let shape = g.face_shape(j);
    let mut out = vec![0.0; g.cells(j) + 1];
    let mut idx = [0usize; MAX_MODES];
    for (flat, v) in flux.components[j].iter().enumerate() {
        TensorGrid::decode(flat, &shape, &mut idx[..d]);
        out[idx[j]] += v;
    }
    let other: f64 = (0..d).filter(|k| *k != j).map(|k| g.h(k)).product();
    out.iter_mut().for_each(|v| *v *= other);
    out
}

/// Marginal flux field on the `(s_{j1}, s_{j2})` plane at cell centres.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Projection {
    pub j1: usize,
    pub j2: usize,
    pub s1: Vec<f64>,
    pub s2: Vec<f64>,
    /// Row-major `[i1 * s2.len() + i2]`.
    pub f1: Vec<f64>,
    pub f2: Vec<f64>,
}

impl Projection {
    pub fn max_norm(&self) -> f64 {
        self.f1
            .iter()
            .zip(&self.f2)
            .map(|(a, b)| a.hypot(*b))
            .fold(0.0, f64::max)
    }

    /// Counter-clockwise trapezoid line integral of `(f1, f2)` around the rectangle of
    /// centre indices `[a1, b1] × [a2, b2]`.
    pub fn circulation(&self, a1: usize, b1: usize, a2: usize, b2: usize) -> Result<f64> {
        let (m1, m2) = (self.s1.len(), self.s2.len());
        if !(a1 < b1 && b1 < m1 && a2 < b2 && b2 < m2) {
            return Err(invalid("loop", "need a1 < b1 and a2 < b2 inside the projection"));
        }
        let at = |i: usize, k: usize| (self.f1[i * m2 + k], self.f2[i * m2 + k]);
        let mut c = 0.0;
        for i in a1..b1 {
            let ds = self.s1[i + 1] - self.s1[i];
            c += 0.5 * (at(i, a2).0 + at(i + 1, a2).0) * ds;
            c -= 0.5 * (at(i, b2).0 + at(i + 1, b2).0) * ds;
        }
        for k in a2..b2 {
            let ds = self.s2[k + 1] - self.s2[k];
            c += 0.5 * (at(b1, k).1 + at(b1, k + 1).1) * ds;
            c -= 0.5 * (at(a1, k).1 + at(a1, k + 1).1) * ds;
        }
        Ok(c)
    }
}

/// Integrates `F_{j1}`, `F_{j2}` over all other coordinates; face values are averaged to
/// cell centres along their own direction.
pub fn vortex_projection(flux: &FluxField, pdf: &MultiModePdf, j1: usize, j2: usize) -> Result<Projection> {
    let g = &pdf.grid;
    let d = g.dims();
    if j1 == j2 {
        return Err(invalid("projection", "j1 and j2 must differ"));
    }
    if j1 >= d || j2 >= d {
        return Err(WtError::ModeOutOfSet {
            mode: j1.max(j2),
            count: d,
        });
    }
    let (m1, m2) = (g.cells(j1), g.cells(j2));
    let other: f64 = (0..d).filter(|k| *k != j1 && *k != j2).map(|k| g.h(k)).product();
    let project = |j: usize| {
        let fs = TensorGrid::strides(&g.face_shape(j));
        let mut out = vec![0.0; m1 * m2];
        let mut idx = [0usize; MAX_MODES];
        for flat in 0..g.len() {
            TensorGrid::decode(flat, &g.cells, &mut idx[..d]);
            let lo: usize = (0..d).map(|k| idx[k] * fs[k]).sum();
            let v = 0.5 * (flux.components[j][lo] + flux.components[j][lo + fs[j]]);
            out[idx[j1] * m2 + idx[j2]] += v * other;
        }
        out
    };
    Ok(Projection {
        j1,
        j2,
        s1: (0..m1).map(|i| g.center(j1, i)).collect(),
        s2: (0..m2).map(|i| g.center(j2, i)).collect(),
        f1: project(j1),
        f2: project(j2),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn triad_model(w: f64) -> PbpModel {
        PbpModel::from_triads(3, vec![(0, 1, 2, w), (0, 2, 1, w)]).unwrap()
    }

    #[test]
    fn zero_coupling_gives_zero_flux() {
        let grid = TensorGrid::new(vec![6, 5, 4], vec![3.0, 2.0, 1.0]).unwrap();
        let pdf = MultiModePdf::exponential_product(vec![0, 1, 2], grid, &[0.5, 0.4, 0.3]).unwrap();
        let f = pbp_flux(&pdf, &triad_model(0.0)).unwrap();
        assert!(f.components.iter().flatten().all(|v| *v == 0.0));
    }

    #[test]
    fn uniform_density_flux_by_hand() {
        // Constant P: every derivative vanishes, only the forcing term survives.
        let grid = TensorGrid::new(vec![3, 3, 3], vec![3.0, 3.0, 3.0]).unwrap();
        let pdf = MultiModePdf::product(vec![0, 1, 2], grid, |_, _| 1.0).unwrap();
        let model = triad_model(1.0).with_forcing(vec![0.5, 0.0, 0.0]).unwrap();
        let f = pbp_flux(&pdf, &model).unwrap();
        let p = 1.0 / 27.0;
        // Face i = 1 along mode 0 sits at s = 1.
        assert!((f.components[0][9] - 0.5 * 1.0 * p).abs() < 1e-15);
        assert!(f.components[1].iter().all(|v| v.abs() < 1e-15));
    }

    #[test]
    fn budget_and_projection_preconditions() {
        assert!(matches!(
            TensorGrid::with_budget(vec![10, 10, 10], vec![1.0; 3], 999),
            Err(WtError::MemoryBudget { .. })
        ));
        let grid = TensorGrid::new(vec![4, 4, 4], vec![1.0; 3]).unwrap();
        let pdf = MultiModePdf::exponential_product(vec![0, 1, 2], grid, &[0.3; 3]).unwrap();
        let f = pbp_flux(&pdf, &triad_model(1.0)).unwrap();
        assert!(vortex_projection(&f, &pdf, 1, 1).is_err());
    }

    #[test]
    fn out_of_set_triad_is_rejected() {
        let err = PbpModel::from_lattice_triads(&[4, 5, 9], &[(9, 4, 7, 1.0)]).unwrap_err();
        assert!(matches!(err, WtError::ModeOutOfSet { mode: 7, .. }));
    }
}
