//! Property tests for the stated invariants of each module.

use std::collections::HashSet;
use std::f64::consts::PI;

use proptest::prelude::*;
use wavestat::kinetics::{self, Broadening, KineticModel, KineticState};
use wavestat::lattice::{find_quartets, find_triads};
use wavestat::onemode::{self, Grid, OneModePdf};
use wavestat::pbp::{self, MultiModePdf, PbpModel, TensorGrid};
use wavestat::perturbation::delta_kernel;
use wavestat::statistics::histogram;
use wavestat::{FourierLattice, WaveSystem};

fn config() -> ProptestConfig {
    ProptestConfig::with_cases(32)
}

fn spectrum(len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.05f64..2.0, len)
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn triad_lists_are_symmetric_nested_and_avoid_zero(n_side in 4usize..14, w1 in 0.0f64..3.0, extra in 0.0f64..3.0) {
        let lattice = FourierLattice::new(1, n_side, 2.0 * PI).unwrap();
        let system = WaveSystem::capillary(1.0, 0.1).unwrap();
        let small = find_triads(&lattice, &system, w1).unwrap();
        let large = find_triads(&lattice, &system, w1 + extra).unwrap();
        let zero = lattice.zero_mode();
        let set: HashSet<_> = small.iter().map(|t| (t.j, t.m, t.n)).collect();
        let big: HashSet<_> = large.iter().map(|t| (t.j, t.m, t.n)).collect();
        for t in &small {
            prop_assert!(set.contains(&(t.j, t.n, t.m)));
            prop_assert!(![t.j, t.m, t.n].contains(&zero));
            prop_assert!(t.detuning.abs() <= w1);
        }
        prop_assert!(set.is_subset(&big));
    }

    #[test]
    fn quartet_lists_are_symmetric(n_side in 4usize..10, w in 0.0f64..6.0) {
        let lattice = FourierLattice::new(1, n_side, 2.0 * PI).unwrap();
        let quartets = find_quartets(&lattice, &WaveSystem::nls(0.1).unwrap(), w).unwrap();
        let zero = lattice.zero_mode();
        let set: HashSet<_> = quartets.iter().map(|q| (q.j, q.l, q.m, q.n)).collect();
        for q in &quartets {
            prop_assert!(set.contains(&(q.l, q.j, q.m, q.n)));
            prop_assert!(set.contains(&(q.j, q.l, q.n, q.m)));
            prop_assert!(![q.j, q.l, q.m, q.n].contains(&zero));
        }
    }

    #[test]
    fn dispersion_parity(kx in -20.0f64..20.0, ky in -20.0f64..20.0) {
        let k = [kx, ky, 0.0];
        let minus = [-kx, -ky, 0.0];
        for system in [WaveSystem::capillary(0.7, 0.1).unwrap(), WaveSystem::nls(0.1).unwrap()] {
            let (a, b) = (system.dispersion(k).unwrap(), system.dispersion(minus).unwrap());
            prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
        }
        let rossby = WaveSystem::rossby(1.3, 0.5, 0.1).unwrap();
        let (a, b) = (rossby.dispersion(k).unwrap(), rossby.dispersion(minus).unwrap());
        prop_assert!((a + b).abs() <= 1e-12 * a.abs().max(1.0));
    }

    #[test]
    fn capillary_coupling_symmetric_and_zero_safe(m in -8i32..8, n in -8i32..8) {
        let system = WaveSystem::capillary(1.0, 0.1).unwrap();
        let (km, kn) = ([m as f64, 0.0, 0.0], [n as f64, 0.0, 0.0]);
        let kl = [(m + n) as f64, 0.0, 0.0];
        let a = system.coupling3(kl, km, kn).unwrap();
        let b = system.coupling3(kl, kn, km).unwrap();
        prop_assert!((a - b).norm() <= 1e-12 * a.norm().max(1.0));
        if m == 0 || n == 0 || m + n == 0 {
            prop_assert_eq!(a.norm(), 0.0);
        }
    }

    #[test]
    fn delta_kernel_bounded_and_hermitian(x in -50.0f64..50.0, t in 0.1f64..100.0) {
        let d = delta_kernel(x, t);
        prop_assert!(d.norm() <= t * (1.0 + 1e-12));
        if x != 0.0 {
            prop_assert!(d.norm() < t);
        }
        let back = delta_kernel(-x, t);
        prop_assert!((back - d.conj()).norm() <= 1e-12 * t);
    }

    #[test]
    fn histogram_normalises(samples in prop::collection::vec(0.0f64..5.0, 10..300), bins in 1usize..30) {
        let edges: Vec<f64> = (0..=bins).map(|i| 5.0 * i as f64 / bins as f64).collect();
        let h = histogram(&samples, &edges).unwrap();
        let total: f64 = h.density.iter().zip(edges.windows(2)).map(|(d, w)| d * (w[1] - w[0])).sum();
        prop_assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rates_are_invariant_under_relabeling(n in spectrum(14), rotate in 0usize..1000) {
        let lattice = FourierLattice::new(1, 14, 2.0 * PI).unwrap();
        let system = WaveSystem::capillary(1.0, 0.05).unwrap();
        let model = KineticModel::new(&lattice, &system, &Broadening::Fejer { time: 4.0 }).unwrap();
        let mut list = model.weighted_triads();
        let shift = rotate % list.len().max(1);
        list.rotate_left(shift);
        list.reverse();
        let shuffled = KineticModel::from_weighted_triads(model.omega().to_vec(), list).unwrap();
        let (a, b) = (model.rates(&n).unwrap(), shuffled.rates(&n).unwrap());
        for k in 0..n.len() {
            prop_assert!((a.eta[k] - b.eta[k]).abs() <= 1e-12 * a.eta[k].abs().max(1e-300));
            prop_assert!((a.gamma[k] - b.gamma[k]).abs() <= 1e-12 * a.gamma.iter().fold(0.0f64, |m, g| m.max(g.abs())));
        }
    }

    /// On exact resonances the three-wave collision term conserves `Σ ω n` and the
    /// four-wave term conserves `Σ n` and `Σ ω n`.
    #[test]
    fn kinetic_terms_conserve_invariants(n3 in spectrum(24), n4 in spectrum(36)) {
        let lattice = FourierLattice::new(1, 24, 2.0 * PI).unwrap();
        // ω = |k| makes collinear triads exact
        let linear = WaveSystem::new(
            wavestat::SystemKind::Custom(wavestat::systems::CustomSystem {
                name: "linear".into(),
                order: wavestat::Order::ThreeWave,
                dispersion: std::sync::Arc::new(|k| k[0].abs()),
                coupling3: Some(std::sync::Arc::new(|a, b, c| num_complex::Complex64::new((a[0] * b[0] * c[0]).abs().sqrt(), 0.0))),
                coupling4: None,
            }),
            0.1,
        ).unwrap();
        let model = KineticModel::new(&lattice, &linear, &Broadening::Exact { tol: 1e-12 }).unwrap();
        let r = model.rates(&n3).unwrap();
        let tend: Vec<f64> = (0..n3.len()).map(|k| r.eta[k] - r.gamma[k] * n3[k]).collect();
        let energy: f64 = tend.iter().zip(model.omega()).map(|(t, w)| t * w).sum();
        let scale: f64 = (0..n3.len()).map(|k| (r.eta[k].abs() + (r.gamma[k] * n3[k]).abs()) * model.omega()[k]).sum();
        prop_assert!(tend.iter().any(|t| t.abs() > 1e-6 * scale));
        prop_assert!(energy.abs() <= 1e-12 * scale);

        // 2-D, where NLS has non-trivial exact quartets
        let lattice = FourierLattice::new(2, 6, 2.0 * PI).unwrap();
        let model = KineticModel::new(&lattice, &WaveSystem::nls(0.1).unwrap(), &Broadening::Exact { tol: 1e-12 }).unwrap();
        let r = model.rates(&n4).unwrap();
        let tend: Vec<f64> = (0..n4.len()).map(|k| r.eta[k] - r.gamma[k] * n4[k]).collect();
        let scale: f64 = (0..n4.len()).map(|k| (r.eta[k].abs() + (r.gamma[k] * n4[k]).abs()) * (1.0 + model.omega()[k])).sum();
        prop_assert!(tend.iter().any(|t| t.abs() > 1e-6 * scale));
        let action: f64 = tend.iter().sum();
        let energy: f64 = tend.iter().zip(model.omega()).map(|(t, w)| t * w).sum();
        prop_assert!(action.abs() <= 1e-12 * scale);
        prop_assert!(energy.abs() <= 1e-12 * scale);
    }

    #[test]
    fn renormalized_step_is_bit_identical(n in spectrum(16), gt in prop::collection::vec(-0.05f64..0.05, 16), dt in 1e-4f64..1e-2) {
        let lattice = FourierLattice::new(1, 16, 2.0 * PI).unwrap();
        let model = KineticModel::new(&lattice, &WaveSystem::capillary(1.0, 0.05).unwrap(), &Broadening::Fejer { time: 4.0 }).unwrap();
        let forced = KineticState::new(n.clone()).with_forcing(gt.clone());
        let a = kinetics::step_kinetic(&forced, &model, dt);
        let r = model.rates(&n).unwrap();
        let shifted = KineticState {
            n: n.clone(),
            eta: r.eta,
            gamma: r.gamma.iter().zip(&gt).map(|(g, t)| g - t).collect(),
            gamma_tilde: vec![0.0; n.len()],
            time: 0.0,
        };
        let b = kinetics::advance(&shifted, dt);
        match (a, b) {
            (Ok(a), Ok(b)) => {
                for (x, y) in a.n.iter().zip(&b.n) {
                    prop_assert_eq!(x.to_bits(), y.to_bits());
                }
            }
            (Err(_), Err(_)) => {}
            (a, b) => prop_assert!(false, "one path failed: {:?} vs {:?}", a.is_ok(), b.is_ok()),
        }
    }

    #[test]
    fn moment_rhs_first_moment_is_kinetic_tendency(n in 0.01f64..5.0, eta in 0.0f64..3.0, gamma in 0.01f64..3.0) {
        let rhs = onemode::moment_rhs(1, &[1.0, n], eta, gamma).unwrap();
        let state = KineticState { n: vec![n], eta: vec![eta], gamma: vec![gamma], gamma_tilde: vec![0.0], time: 0.0 };
        prop_assert_eq!(rhs.to_bits(), state.tendency()[0].to_bits());
    }

    #[test]
    fn steady_moments_are_gaussian(n in 0.01f64..5.0, gamma in 0.01f64..3.0) {
        let m = onemode::steady_moments(6, gamma * n, gamma).unwrap();
        let mut factorial = 1.0;
        for p in 1..=6 {
            factorial *= p as f64;
            prop_assert!((m[p] - factorial * n.powi(p as i32)).abs() <= 1e-12 * m[p]);
            prop_assert!(onemode::moment_rhs(p, &m, gamma * n, gamma).unwrap().abs() <= 1e-12 * p as f64 * p as f64 * gamma * n * m[p - 1]);
        }
    }

    #[test]
    fn evolve_pdf_conserves_mass(n in 0.3f64..2.0, eta in 0.2f64..2.0, ratio in 0.3f64..3.0) {
        let grid = Grid::uniform(20.0 * n, 200).unwrap();
        let pdf = OneModePdf::rayleigh(grid, n, eta, ratio * eta / n).unwrap();
        let m0 = pdf.mass();
        let dt = pdf.max_step();
        let out = onemode::evolve_pdf_for(&pdf, 50.0 * dt, dt).unwrap();
        let per_unit_time = (out.mass() - m0).abs() / m0 / out.time;
        prop_assert!(per_unit_time < 1e-8, "mass drift {per_unit_time:e} per unit time");
    }

    #[test]
    fn steady_pdf_flux_is_constant(flux in -0.03f64..-0.0005, n in 0.5f64..2.0) {
        // admissible on this grid: |F| below about 0.07 / n
        let grid = Grid::geometric(1e-4 * n, 40.0 * n, 200).unwrap();
        let (_, sol) = onemode::steady_pdf(&grid, n, flux, 1.0, None).unwrap();
        for s in grid.centers().into_iter().filter(|s| *s < 39.0 * n) {
            prop_assert!((sol.flux_at(s) - flux).abs() <= 1e-6 * flux.abs());
        }
    }

    /// Zero-flux boundaries: probability is conserved step by step, with or without forcing.
    #[test]
    fn pbp_conserves_probability(n in prop::collection::vec(0.3f64..1.5, 3), gt in prop::collection::vec(-0.2f64..0.2, 3)) {
        let model = PbpModel::from_triads(3, vec![(0, 1, 2, 1.0), (0, 2, 1, 1.0)]).unwrap().with_forcing(gt).unwrap();
        let grid = TensorGrid::new(vec![12, 12, 12], n.iter().map(|v| 8.0 * v).collect()).unwrap();
        let mut pdf = MultiModePdf::exponential_product(vec![0, 1, 2], grid, &n).unwrap();
        pdf.normalize();
        let m0 = pdf.mass();
        let dt = pbp::max_step(&pdf, &model);
        let mut cur = pdf;
        for _ in 0..5 {
            let next = pbp::evolve_pbp(&cur, &model, dt, 1).unwrap();
            prop_assert!((next.mass() - cur.mass()).abs() <= 1e-10 * m0);
            cur = next;
        }
    }
}
