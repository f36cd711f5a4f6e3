//! Acceptance suite: one test per criterion, each printing a single
//! `[PASS]` / `[FAIL]` line with the numbers behind the verdict.

use std::f64::consts::PI;
use std::io::Write;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use nucspin::design::{echo_curve, per_block_gate, rabi_curve, ramsey_curve, scan_init_tau};
use nucspin::engine::{
    conditional_unitaries, dd_signal, effective_gate, electron_rotation, evolve_density, initial_state, photon_readout_mc, toggle_block,
    xy8_pair,
};
use nucspin::optim::{fit_sinusoid, fit_sinusoid_at};
use nucspin::program::{build_xy8_block, PulseElement, PulseProgram, Timings};
use nucspin::spectroscopy::{find_dips, fit_hyperfine, simulate_spectrum, FitBounds, SpectrumPoint};
use nucspin::system::{larmor_from_resonance, resonance_tau, REFERENCE_F_LARMOR_MHZ, TARGET_COUPLING, PARASITIC_PLACEHOLDER};
use nucspin::{Branch, HyperfineCoupling, NuclearSpin, SystemModel};

const A_PAR: f64 = 0.11;
const A_PERP: f64 = 0.33;
const TAU_PRIME: f64 = 1.578;
const TAU_INIT: f64 = 1.569;

/// Bypasses the harness capture so every verdict lands in the test log.
fn report(criterion: u32, pass: bool, detail: &str) {
    let tag = if pass { "PASS" } else { "FAIL" };
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "[{tag}] criterion {criterion}: {detail}");
    let _ = out.flush();
}

/// f_L implied by the k = 4 resonance at τ′ = 1.578 µs, as quoted to four
/// decimals. The exact inversion (1.41618 MHz) lies inside the band that
/// rounds back to 1.578 µs; it is reported by criterion 1 as a diagnostic.
fn pinned_larmor() -> f64 {
    REFERENCE_F_LARMOR_MHZ
}

fn target() -> HyperfineCoupling {
    HyperfineCoupling::new(A_PAR, A_PERP).unwrap()
}

fn reference_system() -> SystemModel {
    SystemModel::new(pinned_larmor(), vec![NuclearSpin::new("target", target())]).unwrap()
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect()
}

fn within_abs(got: &[f64; 3], want: [f64; 3], tol: f64) -> bool {
    got.iter().zip(want).all(|(g, w)| (g - w).abs() <= tol)
}

#[test]
fn criterion_01_conditional_gate_golden_numbers() {
    let start = Instant::now();
    let sys = reference_system();
    let block = build_xy8_block(16, TAU_INIT).unwrap();
    let gate = effective_gate(&conditional_unitaries(&block, &sys, "target").unwrap()).unwrap();
    let elapsed = start.elapsed();

    let phi = gate.phi / PI;
    let want_up = [0.77, 0.0, 0.64];
    let want_dn = [-0.69, 0.0, 0.72];
    let phi_ok = (phi - 0.62).abs() <= 0.03;
    let up_ok = within_abs(&gate.n_up, want_up, 0.05);
    let dn_ok = within_abs(&gate.n_dn, want_dn, 0.05);
    let fast = elapsed < Duration::from_secs(1);
    let pass = phi_ok && up_ok && dn_ok && fast;
    // Diagnostic only: the published axes compared with the branch labels exchanged.
    let swapped = within_abs(&gate.n_dn, want_up, 0.05) && within_abs(&gate.n_up, want_dn, 0.05);
    // Diagnostic only: the alternative reading where the quoted angle belongs to one 8-pulse unit.
    let unit = per_block_gate(TAU_INIT, &sys).unwrap();
    // Diagnostic only: the gate at the exact (unrounded) resonance inversion.
    let exact_f = larmor_from_resonance(TAU_PRIME, 4, A_PERP).unwrap();
    let exact_sys = SystemModel::new(exact_f, vec![NuclearSpin::new("target", target())]).unwrap();
    let exact = effective_gate(&conditional_unitaries(&block, &exact_sys, "target").unwrap()).unwrap();
    report(
        1,
        pass,
        &format!(
            "f_L={:.5} MHz phi/pi={phi:.4} (want 0.62±0.03) n_up=({:.3}, {:.3}, {:.3}) n_dn=({:.3}, {:.3}, {:.3}); \
             axes match with labels swapped: {swapped}; 8-pulse unit phi/pi={:.4}; exact inversion f_L={exact_f:.5} gives phi/pi={:.4}; runtime {:?}",
            sys.f_larmor,
            gate.n_up[0],
            gate.n_up[1],
            gate.n_up[2],
            gate.n_dn[0],
            gate.n_dn[1],
            gate.n_dn[2],
            unit.phi / PI,
            exact.phi / PI,
            elapsed
        ),
    );
    assert!(pass, "gate does not reproduce the published numbers: phi/pi={phi}, {gate:?}");
}

#[test]
fn criterion_02_resonance_placement() {
    let start = Instant::now();
    let sys = reference_system();
    let f_l = sys.f_larmor;
    let spectrum = simulate_spectrum(&linspace(1.50, 1.66, 1601), &sys, 16).unwrap();
    let dips = find_dips(&spectrum, 0.05).unwrap();
    let tau4 = resonance_tau(4, f_l, A_PERP).unwrap();
    let center = dips
        .iter()
        .map(|d| d.tau_center_us)
        .min_by(|a, b| (a - 1.58).abs().total_cmp(&(b - 1.58).abs()))
        .unwrap_or(f64::NAN);
    let rel4 = (center - tau4).abs() / tau4;
    let tau0 = resonance_tau(0, f_l, A_PERP).unwrap();
    let rel0 = (tau0 - 0.169).abs() / 0.169;
    let elapsed = start.elapsed();
    let pass = rel4 < 0.01 && rel0 < 0.10 && elapsed < Duration::from_secs(10);
    report(
        2,
        pass,
        &format!(
            "dip at {center:.5} us vs tau(k=4)={tau4:.5} us (rel {rel4:.2e}); tau(k=0)={tau0:.5} us vs 0.169 (rel {rel0:.3}); runtime {elapsed:?}"
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_03_rabi_calibration() {
    let start = Instant::now();
    let sys = reference_system();
    let timings = Timings::default();
    let n_primes: Vec<usize> = (0..=20).map(|k| 8 * k).collect();
    let curve = rabi_curve(&n_primes, &timings, &sys).unwrap();
    let x: Vec<f64> = curve.iter().map(|p| p.n_prime as f64).collect();
    let y: Vec<f64> = curve.iter().map(|p| p.p_down).collect();
    let fit = fit_sinusoid(&x, &y).unwrap();
    let period = 1.0 / fit.frequency;

    let phi8 = per_block_gate(TAU_PRIME, &sys).unwrap().phi;
    let expected_period = 8.0 * 2.0 * PI / phi8;
    let period_rel = (period - expected_period).abs() / expected_period;

    // N′ = 8 should sit on the half-contrast line of the fitted oscillation.
    let half_offset = (y[1] - fit.offset).abs() / (2.0 * fit.amplitude);
    let elapsed = start.elapsed();
    let pass = half_offset < 0.05 && period_rel < 0.01 && elapsed < Duration::from_secs(30);
    report(
        3,
        pass,
        &format!(
            "P(N'=8)={:.4}, half-contrast={:.4} (offset {:.2}% of contrast); period {period:.3} vs 8*2pi/phi8={expected_period:.3} \
             (rel {period_rel:.2e}, phi8/pi={:.4}); runtime {elapsed:?}",
            y[1],
            fit.offset,
            100.0 * half_offset,
            phi8 / PI
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_04_ramsey_frequencies() {
    let start = Instant::now();
    let sys = reference_system();
    let f_l = sys.f_larmor;
    let timings = Timings::default();
    let grid = linspace(0.0, 20.0, 801);
    let predicted = |sign: f64| ((f_l + sign * A_PAR / 2.0).powi(2) + (A_PERP / 2.0).powi(2)).sqrt();
    let mut fitted = [0.0; 2];
    for (slot, branch) in [Branch::Up, Branch::Down].into_iter().enumerate() {
        let c = ramsey_curve(&grid, branch, &sys, &timings).unwrap();
        let y: Vec<f64> = c.iter().map(|p| p.p_down).collect();
        fitted[slot] = fit_sinusoid(&grid, &y).unwrap().frequency;
    }
    let (f_up, f_dn) = (predicted(1.0), predicted(-1.0));
    let rel_up = (fitted[0] - f_up).abs() / f_up;
    let rel_dn = (fitted[1] - f_dn).abs() / f_dn;
    let split_rel = ((fitted[0] - fitted[1]) - A_PAR).abs() / A_PAR;
    let elapsed = start.elapsed();
    let pass = rel_up < 0.005 && rel_dn < 0.005 && split_rel < 0.05 && elapsed < Duration::from_secs(30);
    report(
        4,
        pass,
        &format!(
            "f_up fit {:.6} vs {f_up:.6} (rel {rel_up:.1e}); f_dn fit {:.6} vs {f_dn:.6} (rel {rel_dn:.1e}); \
             split {:.5} vs A_par {A_PAR} (rel {split_rel:.3}); runtime {elapsed:?}",
            fitted[0],
            fitted[1],
            fitted[0] - fitted[1]
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_05_fast_path_matches_density_oracle() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let trials = 150;
    let mut worst = 0.0f64;
    for _ in 0..trials {
        let n_spins = rng.random_range(1..=2);
        let spins: Vec<NuclearSpin> = (0..n_spins)
            .map(|i| {
                let hf = HyperfineCoupling::new(rng.random_range(-0.3..0.3), rng.random_range(0.0..0.5)).unwrap();
                NuclearSpin::new(format!("n{i}"), hf)
            })
            .collect();
        let sys = SystemModel::new(rng.random_range(0.5..2.0), spins).unwrap();

        let n_pulses = rng.random_range(0..=32);
        let mut block = Vec::new();
        block.push(PulseElement::delay(rng.random_range(0.0..2.0)));
        for _ in 0..n_pulses {
            block.push(PulseElement::pi(rng.random_range(0.0..2.0 * PI)));
            block.push(PulseElement::delay(rng.random_range(0.0..2.0)));
        }
        let (phase_a, angle_a) = (rng.random_range(0.0..2.0 * PI), rng.random_range(0.0..PI));
        let (phase_b, angle_b) = (rng.random_range(0.0..2.0 * PI), rng.random_range(0.0..PI));

        let fast = toggle_block(&block, &sys)
            .unwrap()
            .p_down(&electron_rotation(phase_a, angle_a), &electron_rotation(phase_b, angle_b));

        let mut program = PulseProgram::new("random");
        program.push(PulseElement::ElectronReset { target: Branch::Up });
        program.push(PulseElement::ElectronRotation {
            phase: phase_a,
            angle: angle_a,
        });
        for e in &block {
            program.push(*e);
        }
        program.push(PulseElement::ElectronRotation {
            phase: phase_b,
            angle: angle_b,
        });
        program.push(PulseElement::ReadoutMarker);
        let oracle = evolve_density(&program, &initial_state(&sys, Branch::Up), &sys).unwrap().readouts[0];
        worst = worst.max((fast - oracle).abs());
    }
    let elapsed = start.elapsed();
    let pass = worst < 1e-10 && elapsed < Duration::from_secs(120);
    report(
        5,
        pass,
        &format!("{trials} random programs, max |fast - density| = {worst:.2e}; runtime {elapsed:?}"),
    );
    assert!(pass);
}

#[test]
fn criterion_06_closed_form_signal_identity() {
    let f_l = pinned_larmor();
    let hf = target();
    let mut worst = 0.0f64;
    for tau in linspace(0.1, 3.0, 500) {
        let pair = xy8_pair(f_l, &hf, 16, tau);
        let gate = effective_gate(&pair).unwrap();
        let dot: f64 = gate.n_up.iter().zip(&gate.n_dn).map(|(a, b)| a * b).sum();
        let closed = 1.0 - (1.0 - dot) * (gate.phi / 2.0).sin().powi(2);
        worst = worst.max((dd_signal(&pair) - closed).abs());
    }
    let pass = worst < 1e-10;
    report(6, pass, &format!("500 tau points, max deviation {worst:.2e}"));
    assert!(pass);
}

#[test]
fn criterion_07_initialization_design() {
    let start = Instant::now();
    let f_l = pinned_larmor();
    let clean = SystemModel::new(f_l, vec![NuclearSpin::new("target", TARGET_COUPLING)]).unwrap();
    let report_clean = scan_init_tau((1.55, 1.60), 51, 16, &clean).unwrap();
    let best = report_clean.fidelity_down.min(report_clean.fidelity_up);

    let dirty = clean.clone().with_spin(NuclearSpin::new("parasitic", PARASITIC_PLACEHOLDER)).unwrap();
    let score = |tau: f64| {
        let r = scan_init_tau((tau, tau), 3, 16, &dirty).unwrap();
        r.fidelity_down.min(r.fidelity_up)
    };
    let (at_1569, at_1586) = (score(1.569), score(1.586));
    let elapsed = start.elapsed();
    let pass = best >= 0.98 && at_1569 > at_1586 && elapsed < Duration::from_secs(60);
    report(
        7,
        pass,
        &format!(
            "clean optimum tau={:.5} us ({}) fidelity {best:.4}; with parasitic spin F(1.569)={at_1569:.4} > F(1.586)={at_1586:.4}; runtime {elapsed:?}",
            report_clean.tau_opt_us,
            report_clean.handedness.as_str()
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_08_closed_system_no_decay() {
    let sys = reference_system();
    let timings = Timings::default();
    let f_l = sys.f_larmor;
    let f_up = ((f_l + A_PAR / 2.0).powi(2) + (A_PERP / 2.0).powi(2)).sqrt();

    // Ramsey: amplitude of the f_up component in a short window at each offset.
    let window = linspace(0.0, 3.0, 61);
    let amplitudes: Vec<f64> = linspace(0.0, 2000.0, 5)
        .into_iter()
        .map(|t0| {
            let t: Vec<f64> = window.iter().map(|w| t0 + w).collect();
            let y: Vec<f64> = ramsey_curve(&t, Branch::Up, &sys, &timings)
                .unwrap()
                .iter()
                .map(|p| p.p_down)
                .collect();
            fit_sinusoid_at(&t, &y, f_up).amplitude
        })
        .collect();
    let spread = |v: &[f64]| {
        v.iter().copied().fold(f64::NEG_INFINITY, f64::max) - v.iter().copied().fold(f64::INFINITY, f64::min)
    };
    let ramsey_spread = spread(&amplitudes);

    // Echo: sampled at total times synchronized with the up-branch precession.
    let echo_times: Vec<f64> = [0u32, 1, 10, 100, 1000, 3000, 5000, 7300].iter().map(|&m| 2.0 * m as f64 / f_up).collect();
    let echo: Vec<f64> = echo_curve(&echo_times, &sys, &timings).unwrap().iter().map(|p| p.p_down).collect();
    let echo_spread = spread(&echo);

    let pass = ramsey_spread < 1e-9 && echo_spread < 1e-9 && *echo_times.last().unwrap() <= 10_000.0;
    report(
        8,
        pass,
        &format!(
            "Ramsey amplitude {:.6} spread {ramsey_spread:.2e} over 0-2 ms; echo {:.6} spread {echo_spread:.2e} up to {:.0} us",
            amplitudes[0],
            echo[0],
            echo_times.last().unwrap()
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_09_fit_recovery() {
    let start = Instant::now();
    let sys = reference_system();
    let truth = [A_PAR, A_PERP, sys.f_larmor];
    let clean = simulate_spectrum(&linspace(0.1, 3.0, 1501), &sys, 16).unwrap();
    let bounds = FitBounds::default();
    let rel = |fit: &nucspin::spectroscopy::FitResult| {
        [fit.a_par, fit.a_perp, fit.f_larmor]
            .iter()
            .zip(truth)
            .map(|(g, t)| (g - t).abs() / t)
            .fold(0.0f64, f64::max)
    };
    let noiseless = fit_hyperfine(&clean, &bounds, 16).unwrap();

    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let noise = Normal::new(0.0, 0.02).unwrap();
    let noisy: Vec<SpectrumPoint> = clean
        .iter()
        .map(|p| SpectrumPoint {
            tau_us: p.tau_us,
            p_down: p.p_down + noise.sample(&mut rng),
            sigma: Some(0.02),
        })
        .collect();
    let noisy_fit = fit_hyperfine(&noisy, &bounds, 16).unwrap();
    let (e0, e1) = (rel(&noiseless), rel(&noisy_fit));
    let elapsed = start.elapsed();
    let pass = e0 < 0.01 && e1 < 0.05 && elapsed < Duration::from_secs(120);
    report(
        9,
        pass,
        &format!(
            "noiseless ({:.5}, {:.5}, {:.5}) max rel {e0:.1e}; sigma=0.02 seed 7 ({:.5}, {:.5}, {:.5}) max rel {e1:.1e}; runtime {elapsed:?}",
            noiseless.a_par, noiseless.a_perp, noiseless.f_larmor, noisy_fit.a_par, noisy_fit.a_perp, noisy_fit.f_larmor
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_10_readout_statistics() {
    let p_true = 0.3;
    let mean_bright = 20.0;
    let trials = 1000u64;
    let shots = [100usize, 400, 1600];
    let mut unbiased = true;
    let mut stds = Vec::new();
    let mut details = Vec::new();
    for (k, &n) in shots.iter().enumerate() {
        let est: Vec<f64> = (0..trials)
            .map(|t| photon_readout_mc(p_true, mean_bright, n, 1_000_000 * k as u64 + t).unwrap().ratio)
            .collect();
        let mean = est.iter().sum::<f64>() / trials as f64;
        let var = est.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (trials - 1) as f64;
        let sem = (var / trials as f64).sqrt();
        unbiased &= (mean - p_true).abs() <= 2.0 * sem;
        stds.push(var.sqrt());
        details.push(format!("N={n}: mean {mean:.5} (bias {:.1} sem) std {:.5}", (mean - p_true) / sem, var.sqrt()));
    }
    // least-squares slope of log std against log shots
    let xs: Vec<f64> = shots.iter().map(|&n| (n as f64).ln()).collect();
    let ys: Vec<f64> = stds.iter().map(|s| s.ln()).collect();
    let (mx, my) = (xs.iter().sum::<f64>() / 3.0, ys.iter().sum::<f64>() / 3.0);
    let slope = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>()
        / xs.iter().map(|x| (x - mx).powi(2)).sum::<f64>();
    let pass = unbiased && (slope + 0.5).abs() <= 0.05;
    report(
        10,
        pass,
        &format!("{}; log-log slope {slope:.4} (want -0.5±10%)", details.join("; ")),
    );
    assert!(pass);
}
