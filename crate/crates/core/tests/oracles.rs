//! Independent oracles: lab-frame equations integrated by a separate RK4, and direct
//! loops over wavevector tuples for the kinetic rates. Neither uses the resonance search
//! or the interaction representation.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wavestat::dynamics::{integrate, FourWaveModel, IntegrateOptions, InteractionModel, ShiftPolicy};
use wavestat::kinetics::{frequency_shift_spectrum, Broadening, KineticModel};
use wavestat::systems::{CustomSystem, Order, SystemKind};
use wavestat::{FourierLattice, WaveField, WaveSystem, Wavevector};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

fn add(a: Wavevector, b: Wavevector) -> Wavevector {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

fn sub(a: Wavevector, b: Wavevector) -> Wavevector {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn random_field(lattice: &Arc<FourierLattice>, scale: f64, seed: u64) -> WaveField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let zero = lattice.zero_mode();
    let a = (0..lattice.n_modes())
        .map(|k| {
            if k == zero {
                Complex64::new(0.0, 0.0)
            } else {
                Complex64::from_polar(scale * rng.random::<f64>(), 2.0 * PI * rng.random::<f64>())
            }
        })
        .collect();
    WaveField::new(lattice.clone(), a, 0.0).unwrap()
}

fn rk4(mut b: Vec<Complex64>, t_end: f64, steps: usize, f: impl Fn(&[Complex64]) -> Vec<Complex64>) -> Vec<Complex64> {
    let h = t_end / steps as f64;
    let axpy = |x: &[Complex64], y: &[Complex64], c: f64| -> Vec<Complex64> { x.iter().zip(y).map(|(a, b)| a + b * c).collect() };
    for _ in 0..steps {
        let k1 = f(&b);
        let k2 = f(&axpy(&b, &k1, h / 2.0));
        let k3 = f(&axpy(&b, &k2, h / 2.0));
        let k4 = f(&axpy(&b, &k3, h));
        for i in 0..b.len() {
            b[i] += (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]) * (h / 6.0);
        }
    }
    b
}

fn max_rel_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
    let scale = b.iter().map(|x| x.norm()).fold(0.0f64, f64::max);
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0f64, f64::max) / scale
}

/// `i ḃ_l = ω_l b_l + ε Σ V^l_mn b_m b_n + 2ε Σ conj(V^m_ln) conj(b_n) b_m`, sums over all
/// wavevector pairs on the lattice.
#[test]
fn three_wave_matches_lab_frame_oracle() {
    let lattice = Arc::new(FourierLattice::new(1, 8, 2.0 * PI).unwrap());
    let system = WaveSystem::capillary(1.0, 0.1).unwrap();
    let field = random_field(&lattice, 1.0, 7);
    let modes = lattice.n_modes();
    let omega: Vec<f64> = (0..modes).map(|k| system.dispersion(lattice.wavevector(k)).unwrap()).collect();
    let eps = system.epsilon;

    let rhs = |b: &[Complex64]| -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); modes];
        for l in 0..modes {
            let kl = lattice.wavevector(l);
            let mut acc = omega[l] * b[l];
            for m in 0..modes {
                let km = lattice.wavevector(m);
                if let Some(n) = lattice.mode_of_wavevector(sub(kl, km)) {
                    let v = system.coupling3(kl, km, lattice.wavevector(n)).unwrap();
                    acc += eps * v * b[m] * b[n];
                }
                if let Some(n) = lattice.mode_of_wavevector(sub(km, kl)) {
                    let v = system.coupling3(km, kl, lattice.wavevector(n)).unwrap();
                    acc += 2.0 * eps * v.conj() * b[n].conj() * b[m];
                }
            }
            out[l] = -I * acc;
        }
        out
    };
    let t = 0.5;
    let lab = rk4(field.amplitudes.clone(), t, 4000, rhs);
    let expected: Vec<Complex64> = lab.iter().zip(&omega).map(|(b, w)| b * Complex64::cis(w * t)).collect();

    let model = InteractionModel::full(&lattice, &system).unwrap();
    let out = integrate(&field, &model, t, &IntegrateOptions::with_dt(1e-3)).unwrap();
    let err = max_rel_diff(&out.field.amplitudes, &expected);
    assert!(err < 1e-9, "interaction-frame integration differs from lab frame by {err:e}");
}

/// Non-constant symmetric quartic coupling so the shift is mode dependent.
fn quartic_system(eps: f64) -> WaveSystem {
    let w = |a: Wavevector, b: Wavevector, c: Wavevector, d: Wavevector| {
        Complex64::new(1.0 + 0.05 * (a[0] * b[0] + c[0] * d[0]).abs(), 0.0)
    };
    WaveSystem::new(
        SystemKind::Custom(CustomSystem {
            name: "quartic".into(),
            order: Order::FourWave,
            dispersion: Arc::new(|k| k[0] * k[0]),
            coupling3: None,
            coupling4: Some(Arc::new(w)),
        }),
        eps,
    )
    .unwrap()
}

/// `i ḃ_j = ω_j b_j + ε Σ W^{jl}_mn conj(b_l) b_m b_n`; with a frozen shift `Ω`, the
/// interaction frame is exactly `a = b e^{i(ω+Ω)t}`.
#[test]
fn four_wave_matches_lab_frame_oracle() {
    let lattice = Arc::new(FourierLattice::new(1, 8, 2.0 * PI).unwrap());
    for system in [WaveSystem::nls(0.1).unwrap(), quartic_system(0.1)] {
        let field = random_field(&lattice, 1.0, 11);
        let modes = lattice.n_modes();
        let omega: Vec<f64> = (0..modes).map(|k| system.dispersion(lattice.wavevector(k)).unwrap()).collect();
        let eps = system.epsilon;
        let shift: Vec<f64> = (0..modes)
            .map(|l| {
                let kl = lattice.wavevector(l);
                2.0 * eps
                    * (0..modes)
                        .map(|mu| {
                            let kmu = lattice.wavevector(mu);
                            system.coupling4(kl, kmu, kl, kmu).unwrap().re * field.amplitudes[mu].norm_sqr()
                        })
                        .sum::<f64>()
            })
            .collect();

        let rhs = |b: &[Complex64]| -> Vec<Complex64> {
            let mut out = vec![Complex64::new(0.0, 0.0); modes];
            for j in 0..modes {
                let kj = lattice.wavevector(j);
                let mut acc = omega[j] * b[j];
                for l in 0..modes {
                    let kl = lattice.wavevector(l);
                    for m in 0..modes {
                        let km = lattice.wavevector(m);
                        if let Some(n) = lattice.mode_of_wavevector(sub(add(kj, kl), km)) {
                            let w = system.coupling4(kj, kl, km, lattice.wavevector(n)).unwrap();
                            acc += eps * w * b[l].conj() * b[m] * b[n];
                        }
                    }
                }
                out[j] = -I * acc;
            }
            out
        };
        let t = 0.3;
        let lab = rk4(field.amplitudes.clone(), t, 6000, rhs);
        let expected: Vec<Complex64> = (0..modes).map(|j| lab[j] * Complex64::cis((omega[j] + shift[j]) * t)).collect();

        let model = FourWaveModel::full(&lattice, &system).unwrap();
        let computed_shift = model.shift(&field.amplitudes);
        for (a, b) in computed_shift.0.iter().zip(&shift) {
            assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0));
        }
        let opts = IntegrateOptions {
            dt: 5e-4,
            sample_every: None,
            shift_policy: ShiftPolicy::Frozen,
        };
        let out = integrate(&field, &InteractionModel::Four(model), t, &opts).unwrap();
        let err = max_rel_diff(&out.field.amplitudes, &expected);
        assert!(err < 1e-9, "{}: interaction-frame integration differs from lab frame by {err:e}", system.kind.name());
    }
}

#[test]
fn frequency_shift_spectrum_matches_direct_sum() {
    let lattice = FourierLattice::new(1, 12, 2.0 * PI).unwrap();
    let system = quartic_system(0.07);
    let n: Vec<f64> = (0..lattice.n_modes()).map(|k| 0.1 + 0.03 * k as f64).collect();
    let got = frequency_shift_spectrum(&n, &lattice, &system).unwrap();
    let zero = lattice.zero_mode();
    for (l, g) in got.iter().enumerate() {
        let kl = lattice.wavevector(l);
        let mut s = 0.0;
        for (mu, nm) in n.iter().enumerate() {
            // couplings vanish on the zero mode
            if l == zero || mu == zero {
                continue;
            }
            let kmu = lattice.wavevector(mu);
            // a·b + c·d = 2 k_l k_μ on the diagonal
            s += (1.0 + 0.1 * (kl[0] * kmu[0]).abs()) * nm;
        }
        let want = 2.0 * 0.07 * s;
        assert!((g - want).abs() <= 1e-13 * want.max(1.0), "mode {l}: {g} vs {want}");
    }
    // NLS: the same shift for every nonzero mode.
    let nls = frequency_shift_spectrum(&n, &lattice, &WaveSystem::nls(0.07).unwrap()).unwrap();
    let total: f64 = n.iter().sum::<f64>() - n[zero];
    for (l, v) in nls.iter().enumerate() {
        if l != zero {
            assert!((v - 2.0 * 0.07 * total).abs() < 1e-13);
        }
    }
}

fn assert_rates_close(got: &[f64], want: &[f64], what: &str) {
    let scale = want.iter().fold(0.0f64, |a, b| a.max(b.abs()));
    assert!(scale > 0.0, "{what}: oracle is identically zero");
    for (k, (g, w)) in got.iter().zip(want).enumerate() {
        assert!((g - w).abs() <= 1e-12 * scale, "{what}[{k}]: {g} vs {w}");
    }
}

#[test]
fn three_wave_rates_match_triple_loop() {
    let lattice = FourierLattice::new(1, 12, 2.0 * PI).unwrap();
    let system = WaveSystem::capillary(1.0, 0.05).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let n: Vec<f64> = (0..lattice.n_modes()).map(|_| rng.random::<f64>()).collect();
    let modes = lattice.n_modes();
    let omega: Vec<f64> = (0..modes).map(|k| system.dispersion(lattice.wavevector(k)).unwrap()).collect();
    let measure = 2.0 * PI / lattice.box_length();
    for broadening in [Broadening::Fejer { time: 3.0 }, Broadening::Lorentzian { width: 0.7 }] {
        let model = KineticModel::new(&lattice, &system, &broadening).unwrap();
        let rates = model.rates(&n).unwrap();
        let pref = 4.0 * PI * 0.05 * 0.05 * measure;
        let (mut eta, mut gamma) = (vec![0.0; modes], vec![0.0; modes]);
        let zero = lattice.zero_mode();
        for j in 0..modes {
            let kj = lattice.wavevector(j);
            for l in 0..modes {
                for m in 0..modes {
                    if [j, l, m].contains(&zero) {
                        continue;
                    }
                    let (kl, km) = (lattice.wavevector(l), lattice.wavevector(m));
                    // k_j = k_l + k_m
                    if lattice.mode_of_wavevector(add(kl, km)) == Some(j) {
                        let w = pref * system.coupling3(kj, kl, km).unwrap().norm_sqr() * broadening.weight(omega[j] - omega[l] - omega[m]);
                        eta[j] += w * n[l] * n[m];
                        gamma[j] += w * (n[l] + n[m]);
                    }
                    // k_m = k_j + k_l
                    if lattice.mode_of_wavevector(add(kj, kl)) == Some(m) {
                        let w = pref * system.coupling3(km, kj, kl).unwrap().norm_sqr() * broadening.weight(omega[m] - omega[j] - omega[l]);
                        eta[j] += 2.0 * w * n[l] * n[m];
                        gamma[j] += 2.0 * w * (n[l] - n[m]);
                    }
                }
            }
        }
        assert_rates_close(&rates.eta, &eta, "eta");
        assert_rates_close(&rates.gamma, &gamma, "gamma");
    }
}

#[test]
fn four_wave_rates_match_quadruple_loop() {
    let lattice = FourierLattice::new(1, 10, 2.0 * PI).unwrap();
    let system = quartic_system(0.05);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let n: Vec<f64> = (0..lattice.n_modes()).map(|_| rng.random::<f64>()).collect();
    let modes = lattice.n_modes();
    let omega: Vec<f64> = (0..modes).map(|k| system.dispersion(lattice.wavevector(k)).unwrap()).collect();
    let measure = (2.0 * PI / lattice.box_length()).powi(2);
    let broadening = Broadening::Fejer { time: 2.0 };
    let model = KineticModel::new(&lattice, &system, &broadening).unwrap();
    let rates = model.rates(&n).unwrap();
    let pref = 4.0 * PI * 0.05 * 0.05 * measure;
    let zero = lattice.zero_mode();
    let (mut eta, mut gamma) = (vec![0.0; modes], vec![0.0; modes]);
    for j in 0..modes {
        for l in 0..modes {
            for m in 0..modes {
                let k = sub(add(lattice.wavevector(j), lattice.wavevector(l)), lattice.wavevector(m));
                let Some(nn) = lattice.mode_of_wavevector(k) else { continue };
                if [j, l, m, nn].contains(&zero) {
                    continue;
                }
                let w2 = system
                    .coupling4(lattice.wavevector(j), lattice.wavevector(l), lattice.wavevector(m), lattice.wavevector(nn))
                    .unwrap()
                    .norm_sqr();
                let w = pref * w2 * broadening.weight(omega[j] + omega[l] - omega[m] - omega[nn]);
                eta[j] += w * n[l] * n[m] * n[nn];
                gamma[j] += w * (n[l] * (n[m] + n[nn]) - n[m] * n[nn]);
            }
        }
    }
    assert_rates_close(&rates.eta, &eta, "eta");
    assert_rates_close(&rates.gamma, &gamma, "gamma");
}

/// Hamiltonian drift over ten nonlinear times `1/(ε|V||a|)`, and waveaction for four-wave.
#[test]
fn conserved_quantities_drift_little() {
    let lattice = Arc::new(FourierLattice::new(1, 16, 2.0 * PI).unwrap());
    let system = WaveSystem::capillary(1.0, 0.05).unwrap();
    let field = random_field(&lattice, 0.5, 13);
    let model = InteractionModel::full(&lattice, &system).unwrap();
    let h0 = model.hamiltonian(&field);
    let nonlinear_time = 1.0 / (0.05 * 8f64.powf(0.75) * 0.5);
    let out = integrate(&field, &model, 10.0 * nonlinear_time, &IntegrateOptions::with_dt(model.max_step())).unwrap();
    let drift = (model.hamiltonian(&out.field) - h0).abs() / h0.abs();
    assert!(drift < 1e-5, "three-wave Hamiltonian drift {drift:e}");

    let nls = WaveSystem::nls(0.05).unwrap();
    let model = InteractionModel::full(&lattice, &nls).unwrap();
    let (n0, h0) = (field.waveaction(), model.hamiltonian(&field));
    let horizon = 10.0 / (0.05 * n0);
    let drift = |dt: f64| {
        let out = integrate(&field, &model, horizon, &IntegrateOptions::with_dt(dt)).unwrap();
        let n_drift = (out.field.waveaction() - n0).abs() / n0;
        let h_drift = (model.hamiltonian(&out.field) - h0).abs() / h0.abs();
        (n_drift, h_drift)
    };
    let (coarse, h_drift) = drift(model.max_step());
    let (fine, _) = drift(model.max_step() / 2.0);
    assert!(h_drift < 1e-5, "four-wave Hamiltonian drift {h_drift:e}");
    assert!(coarse < 1e-6, "four-wave waveaction drift {coarse:e}");
    // Fourth-order integrator: halving the step cuts the drift by about 16.
    assert!(fine < coarse / 8.0, "waveaction drift {coarse:e} -> {fine:e} under step halving");
}

/// `Σ Re(conj(a_l) ȧ_l) = 0` for the four-wave right-hand side, so waveaction is conserved
/// before any time discretization.
#[test]
fn four_wave_rhs_conserves_waveaction() {
    let lattice = Arc::new(FourierLattice::new(1, 16, 2.0 * PI).unwrap());
    for system in [WaveSystem::nls(0.3).unwrap(), quartic_system(0.3)] {
        let model = FourWaveModel::full(&lattice, &system).unwrap();
        for seed in 0..5 {
            let field = random_field(&lattice, 1.0, 100 + seed);
            let shift = model.shift(&field.amplitudes);
            let mut out = vec![Complex64::new(0.0, 0.0); lattice.n_modes()];
            model.rhs_into(&field.amplitudes, &shift, 0.37, &mut out);
            let rate: f64 = field.amplitudes.iter().zip(&out).map(|(a, d)| (a.conj() * d).re).sum();
            let scale: f64 = field.amplitudes.iter().zip(&out).map(|(a, d)| (a.conj() * d).norm()).sum();
            assert!(rate.abs() <= 1e-13 * scale, "dN/dt = {rate:e} against term scale {scale:e}");
        }
    }
}
