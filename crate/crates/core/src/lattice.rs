//! Finite Fourier lattices and resonance search.
//!
//! Mode indices are flattened row-major over a centered integer box: for
//! `n_side` modes per dimension the integer coordinate runs from
//! `-(n_side / 2)` to `-(n_side / 2) + n_side - 1`. Wavevectors are
//! `2π·l/L` componentwise.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::systems::WaveSystem;

/// Wavevector with unused trailing components set to zero.
pub type Wavevector = [f64; 3];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FourierLattice {
    dim: usize,
    n_side: usize,
    box_length: f64,
}

impl FourierLattice {
    pub fn new(dim: usize, n_side: usize, box_length: f64) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(invalid("dim", format!("must be 1, 2 or 3, got {dim}")));
        }
        if n_side < 2 {
            return Err(invalid("n_side", format!("must be at least 2, got {n_side}")));
        }
        if !(box_length > 0.0) || !box_length.is_finite() {
            return Err(invalid(
                "box_length",
                format!("must be positive and finite, got {box_length}"),
            ));
        }
        n_side
            .checked_pow(dim as u32)
            .ok_or_else(|| invalid("n_side", "mode count overflows"))?;
        Ok(Self {
            dim,
            n_side,
            box_length,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_side(&self) -> usize {
        self.n_side
    }

    pub fn box_length(&self) -> f64 {
        self.box_length
    }

    pub fn n_modes(&self) -> usize {
        self.n_side.pow(self.dim as u32)
    }

    /// Wavenumber spacing `2π/L`.
    pub fn spacing(&self) -> f64 {
        2.0 * PI / self.box_length
    }

    pub fn k_max(&self) -> f64 {
        PI * self.n_side as f64 / self.box_length
    }

    fn lo(&self) -> i64 {
        -((self.n_side / 2) as i64)
    }

    fn hi(&self) -> i64 {
        self.lo() + self.n_side as i64 - 1
    }

    /// Integer coordinates of a flat mode index.
    pub fn coords(&self, mode: usize) -> [i64; 3] {
        let mut c = [0i64; 3];
        let mut rest = mode;
        for d in (0..self.dim).rev() {
            c[d] = (rest % self.n_side) as i64 + self.lo();
            rest /= self.n_side;
        }
        c
    }

    /// Flat index of integer coordinates, or `None` when outside the box.
    pub fn index_of(&self, coords: [i64; 3]) -> Option<usize> {
        let (lo, hi) = (self.lo(), self.hi());
        let mut idx = 0usize;
        for (d, &c) in coords.iter().enumerate() {
            if d >= self.dim {
                if c != 0 {
                    return None;
                }
                continue;
            }
            if c < lo || c > hi {
                return None;
            }
            idx = idx * self.n_side + (c - lo) as usize;
        }
        Some(idx)
    }

    pub fn zero_mode(&self) -> usize {
        self.index_of([0, 0, 0]).expect("zero mode lies in the centered box")
    }

    pub fn wavevector(&self, mode: usize) -> Wavevector {
        let c = self.coords(mode);
        let dk = self.spacing();
        [c[0] as f64 * dk, c[1] as f64 * dk, c[2] as f64 * dk]
    }

    /// Flat index of the mode with wavevector `k`, if it lies on the lattice.
    pub fn mode_of_wavevector(&self, k: Wavevector) -> Option<usize> {
        let dk = self.spacing();
        let mut c = [0i64; 3];
        for d in 0..3 {
            let x = k[d] / dk;
            let r = x.round();
            if (x - r).abs() > 1e-9 {
                return None;
            }
            c[d] = r as i64;
        }
        self.index_of(c)
    }

    pub fn wavevectors(&self) -> Vec<Wavevector> {
        (0..self.n_modes()).map(|m| self.wavevector(m)).collect()
    }

    fn add(&self, a: [i64; 3], b: [i64; 3]) -> [i64; 3] {
        [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
    }
}

/// Momentum-conserving triple `k_j = k_m + k_n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Triad {
    pub j: usize,
    pub m: usize,
    pub n: usize,
    /// `ω_j - ω_m - ω_n`.
    pub detuning: f64,
}

/// Momentum-conserving quadruple `k_j + k_l = k_m + k_n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quartet {
    pub j: usize,
    pub l: usize,
    pub m: usize,
    pub n: usize,
    /// `ω_j + ω_l - ω_m - ω_n`.
    pub detuning: f64,
}

fn check_broadening(broadening: f64) -> Result<()> {
    if broadening.is_nan() || broadening < 0.0 {
        return Err(invalid(
            "broadening",
            format!("must be non-negative, got {broadening}"),
        ));
    }
    Ok(())
}

fn check_frequencies(lattice: &FourierLattice, omega: &[f64]) -> Result<()> {
    if omega.len() != lattice.n_modes() {
        return Err(crate::WtError::LengthMismatch {
            what: "frequency table",
            expected: lattice.n_modes(),
            found: omega.len(),
        });
    }
    Ok(())
}

/// All ordered triads with `|ω_j - ω_m - ω_n| <= broadening`, none touching the zero mode.
///
/// Both `(j; m, n)` and `(j; n, m)` are returned.
pub fn find_triads_with(
    lattice: &FourierLattice,
    omega: &[f64],
    broadening: f64,
) -> Result<Vec<Triad>> {
    check_broadening(broadening)?;
    check_frequencies(lattice, omega)?;
    let n = lattice.n_modes();
    let zero = lattice.zero_mode();
    let coords: Vec<[i64; 3]> = (0..n).map(|m| lattice.coords(m)).collect();
    let mut out = Vec::new();
    for m in 0..n {
        if m == zero {
            continue;
        }
        for nn in 0..n {
            if nn == zero {
                continue;
            }
            let Some(j) = lattice.index_of(lattice.add(coords[m], coords[nn])) else {
                continue;
            };
            if j == zero {
                continue;
            }
            let detuning = omega[j] - omega[m] - omega[nn];
            if detuning.abs() <= broadening {
                out.push(Triad {
                    j,
                    m,
                    n: nn,
                    detuning,
                });
            }
        }
    }
    Ok(out)
}

/// All ordered quartets with `|ω_j + ω_l - ω_m - ω_n| <= broadening`, none touching the zero mode.
pub fn find_quartets_with(
    lattice: &FourierLattice,
    omega: &[f64],
    broadening: f64,
) -> Result<Vec<Quartet>> {
    check_broadening(broadening)?;
    check_frequencies(lattice, omega)?;
    let n = lattice.n_modes();
    let zero = lattice.zero_mode();
    let coords: Vec<[i64; 3]> = (0..n).map(|m| lattice.coords(m)).collect();
    let mut out = Vec::new();
    for j in 0..n {
        if j == zero {
            continue;
        }
        for l in 0..n {
            if l == zero {
                continue;
            }
            let total = lattice.add(coords[j], coords[l]);
            for m in 0..n {
                if m == zero {
                    continue;
                }
                let rest = [
                    total[0] - coords[m][0],
                    total[1] - coords[m][1],
                    total[2] - coords[m][2],
                ];
                let Some(nn) = lattice.index_of(rest) else {
                    continue;
                };
                if nn == zero {
                    continue;
                }
                let detuning = omega[j] + omega[l] - omega[m] - omega[nn];
                if detuning.abs() <= broadening {
                    out.push(Quartet {
                        j,
                        l,
                        m,
                        n: nn,
                        detuning,
                    });
                }
            }
        }
    }
    Ok(out)
}

pub fn frequencies(lattice: &FourierLattice, system: &WaveSystem) -> Result<Vec<f64>> {
    (0..lattice.n_modes())
        .map(|m| system.dispersion(lattice.wavevector(m)))
        .collect()
}

pub fn find_triads(
    lattice: &FourierLattice,
    system: &WaveSystem,
    broadening: f64,
) -> Result<Vec<Triad>> {
    find_triads_with(lattice, &frequencies(lattice, system)?, broadening)
}

pub fn find_quartets(
    lattice: &FourierLattice,
    system: &WaveSystem,
    broadening: f64,
) -> Result<Vec<Quartet>> {
    find_quartets_with(lattice, &frequencies(lattice, system)?, broadening)
}

type CacheKey = (usize, usize, u64, String, u64);

/// Memoizes resonance lists per `(lattice, dispersion, broadening)`.
#[derive(Default)]
pub struct ResonanceCache {
    triads: Mutex<HashMap<CacheKey, Arc<Vec<Triad>>>>,
    quartets: Mutex<HashMap<CacheKey, Arc<Vec<Quartet>>>>,
}

impl ResonanceCache {
    pub fn new() -> Self {
        Self::default()
    }

    fn key(lattice: &FourierLattice, system: &WaveSystem, broadening: f64) -> CacheKey {
        (
            lattice.dim,
            lattice.n_side,
            lattice.box_length.to_bits(),
            system.dispersion_key(),
            broadening.to_bits(),
        )
    }

    pub fn triads(
        &self,
        lattice: &FourierLattice,
        system: &WaveSystem,
        broadening: f64,
    ) -> Result<Arc<Vec<Triad>>> {
        let key = Self::key(lattice, system, broadening);
        if let Some(hit) = self.triads.lock().unwrap().get(&key) {
            return Ok(hit.clone());
        }
        let list = Arc::new(find_triads(lattice, system, broadening)?);
        self.triads.lock().unwrap().insert(key, list.clone());
        Ok(list)
    }

    pub fn quartets(
        &self,
        lattice: &FourierLattice,
        system: &WaveSystem,
        broadening: f64,
    ) -> Result<Arc<Vec<Quartet>>> {
        let key = Self::key(lattice, system, broadening);
        if let Some(hit) = self.quartets.lock().unwrap().get(&key) {
            return Ok(hit.clone());
        }
        let list = Arc::new(find_quartets(lattice, system, broadening)?);
        self.quartets.lock().unwrap().insert(key, list.clone());
        Ok(list)
    }

    pub fn len(&self) -> usize {
        self.triads.lock().unwrap().len() + self.quartets.lock().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}
