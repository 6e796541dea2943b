//! Acceptance gate: one line per criterion, nonzero exit if any fails.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::Instant;

use ftc_sensor::floquet::{diagonalize, FloquetSpectrum, LmgParams};
use ftc_sensor::hso::{hso_block_diagonal, hso_full, overlap_matrix, OverlapMatrix};
use ftc_sensor::oracle::{qfi_finite_difference, PropagationConfig};
use ftc_sensor::precision::{
    expm_action, tridiag_eigensolve, BigFloat, ExpmRoute, Matrix, Precision, Real, SymTridiagonal,
};
use ftc_sensor::qfi::{
    critical_scan, fit_power_law, log_grid, make_initial_state, nlr_crossover, observe_steps,
    qfi_closed_single_pair, qfi_from_hso, qfi_peak_single_pair, qfi_series, HsoKind, StateFamily,
};
use ftc_sensor::semiclassical::{overlap_exact_diag, overlap_series};
use ftc_sensor::signal::{Shape, SignalSpec};
use ftc_sensor::spin::build_collective_operators;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn setup(n: usize, b: f64, bits: u32) -> (FloquetSpectrum, OverlapMatrix) {
    let p = LmgParams::new(1.0, b, n, 1.0).unwrap();
    let s = diagonalize(&p, Precision::Extended(bits)).unwrap();
    let o = overlap_matrix(&s, &build_collective_operators(n).unwrap().sz).unwrap();
    (s, o)
}

fn four_families(s: &FloquetSpectrum) -> Vec<StateFamily> {
    vec![
        StateFamily::PolarizedUp,
        StateFamily::Ghz,
        StateFamily::FloquetEigenstate { index: s.pairs()[0].upper },
        StateFamily::PairSuperposition { pair: 0, theta: PI / 2.0, phi: 0.0 },
    ]
}

fn oracle_equivalence() -> Outcome {
    let sig = SignalSpec::sinusoidal_pdr(1.0, 0.0);
    let grid: Vec<usize> = (0..=1000).collect();
    let mut worst = (0.0f64, String::new());
    for n_spins in [6usize, 8, 10] {
        let (s, o) = setup(n_spins, 0.4, 128);
        for family in four_families(&s) {
            let tag = family.tag();
            let psi = make_initial_state(&s, family).unwrap();
            let fd = qfi_finite_difference(&psi.vector, s.params(), &sig, 0.0, &grid, &PropagationConfig::default())
                .map_err(|e| e.to_string())?;
            for (&n, &f) in grid.iter().zip(&fd.series.values).skip(1) {
                let a = qfi_from_hso(&psi, &hso_full(&s, &o, &sig, n).unwrap()).unwrap();
                let r = (a - f).abs() / f;
                if !(r <= worst.0) {
                    worst = (r, format!("N={n_spins} {tag} n={n}"));
                }
            }
        }
    }
    check(worst.0 <= 1e-3, format!("max |ΔF|/F = {:.2e} at {}", worst.0, worst.1))
}

fn closed_form_peak() -> Outcome {
    let (tau, f) = qfi_peak_single_pair(0.0).map_err(|e| e.to_string())?;
    check(
        (tau - 2.331).abs() <= 1e-3 && (f - 0.525).abs() <= 1e-3,
        format!("τ_max = {tau:.6}, f_max = {f:.6}"),
    )
}

fn prefactor() -> Outcome {
    let c = 16.0 / (PI * PI);
    let (o, delta, t) = (1.0, 1e-9, 1.0);
    let closed = qfi_closed_single_pair(o, delta, t, 0.0, 0.0, 0.0, &Shape::Sinusoidal).unwrap() / (o * o * t * t);
    let closed_err = (closed / c - 1.0).abs();

    let (s, ov) = setup(40, 0.4, 192);
    let pair = &s.pairs()[0];
    let o1 = ov.restricted(&[pair.upper, pair.lower]);
    let z = ov.get(pair.upper, pair.lower).norm();
    let psi = make_initial_state(&s, StateFamily::FloquetEigenstate { index: pair.upper }).unwrap();
    let sig = SignalSpec::sinusoidal_pdr(1.0, 0.0);
    let mut hso_err = 0.0f64;
    for n in [10usize, 1_000, 100_000] {
        let f = qfi_from_hso(&psi, &hso_full(&s, &o1, &sig, n).unwrap()).unwrap();
        hso_err = hso_err.max((f / (z * z * (n * n) as f64) / c - 1.0).abs());
    }
    check(
        closed_err <= 1e-6 && hso_err <= 1e-3,
        format!("closed form rel. err {closed_err:.1e}, projected HSO rel. err {hso_err:.1e}"),
    )
}

fn heisenberg_scaling() -> Outcome {
    let sig = SignalSpec::sinusoidal_pdr(1.0, 0.0);
    let ns = [10usize, 16, 24, 32, 40];
    let f: Vec<f64> = ns
        .iter()
        .map(|&n| {
            let (s, o) = setup(n, 0.4, 192);
            let psi = make_initial_state(&s, StateFamily::Ghz).unwrap();
            qfi_from_hso(&psi, &hso_full(&s, &o, &sig, 1).unwrap()).unwrap()
        })
        .collect();
    let x: Vec<f64> = ns.iter().map(|&n| n as f64).collect();
    let fit = fit_power_law(&x, &f).map_err(|e| e.to_string())?;
    check(
        (fit.exponent - 2.0).abs() <= 0.05,
        format!("z = {:.4} ± {:.4} (n = 1)", fit.exponent, fit.stderr),
    )
}

fn step_structure() -> Outcome {
    let (s, o) = setup(40, 0.4, 192);
    let sig = SignalSpec::sinusoidal_pdr(1.0, 0.0);
    let grid = log_grid(3_000_000_000_000, 40);
    let mut notes = Vec::new();
    let mut ok = true;

    let series = |family| {
        let psi = make_initial_state(&s, family).unwrap();
        qfi_series(&s, &o, &sig, &psi, &grid, HsoKind::Full).unwrap()
    };
    let ghz = observe_steps(&series(StateFamily::Ghz), &s);
    let up = observe_steps(&series(StateFamily::PolarizedUp), &s);

    let ghz_levels: Vec<f64> = ghz.0.iter().map(|p| p.level).collect();
    let monotone = ghz_levels.windows(2).all(|w| w[1] <= w[0] * 1.01);
    ok &= monotone && ghz_levels.len() >= 4;
    notes.push(format!("ghz plateaus non-increasing: {monotone} ({} plateaus)", ghz_levels.len()));

    let up_levels: Vec<f64> = up.0.iter().map(|p| p.level).collect();
    let top = up_levels
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .map(|(i, _)| i)
        .unwrap_or(0);
    let rises = top > 0 && up_levels[..=top].windows(2).all(|w| w[1] >= w[0] * 0.99);
    let falls = top + 1 < up_levels.len() && up_levels[top..].windows(2).all(|w| w[1] <= w[0] * 1.01);
    ok &= rises && falls;
    notes.push(format!("polarized-up rises then falls: {} (peak at plateau {top})", rises && falls));

    let mut worst = 1.0f64;
    for (name, (plateaus, steps)) in [("ghz", &ghz), ("polarized-up", &up)] {
        let scale = plateaus.iter().map(|p| p.level.abs()).fold(0.0, f64::max);
        for st in steps.iter().filter(|st| (st.after - st.before).abs() > 1e-2 * scale) {
            let ratio = st.t_transition / st.t_star;
            let factor = ratio.max(1.0 / ratio);
            if !(factor <= 3.0) {
                ok = false;
                notes.push(format!("{name} k={} off by {factor:.2}", st.k));
            }
            worst = worst.max(factor);
        }
    }
    notes.push(format!("worst transition/t* factor {worst:.2}"));
    check(ok, notes.join("; "))
}

fn semiclassical_overlap() -> Outcome {
    let p = Precision::Extended(192);
    let ed = overlap_exact_diag(0, 40, 0.4, p).map_err(|e| e.to_string())?;
    let series = overlap_series(0, 40, 0.4);
    let dev = (ed / series - 1.0).abs();
    let grid: Vec<f64> = (1..=7).map(|i| 0.1 * i as f64).collect();
    let z40 = critical_scan(1.0, 1.0, 40, &grid, 0, p).map_err(|e| e.to_string())?.fit;
    let z80 = critical_scan(1.0, 1.0, 80, &grid, 0, Precision::Extended(256)).map_err(|e| e.to_string())?.fit;
    check(
        dev <= 1e-2 && (z40.exponent - 0.5).abs() <= 0.05,
        format!(
            "|O_00̄|/N = {ed:.6} vs {series:.5} (dev {:.2}%); z(N=40) = {:.4} ± {:.4}; [info] z(N=80) = {:.4}",
            100.0 * dev,
            z40.exponent,
            z40.stderr,
            z80.exponent
        ),
    )
}

fn pi_pairing() -> Outcome {
    let (s, _) = setup(40, 0.4, 192);
    let bits = s.bits();
    let pi = BigFloat::pi(bits);
    let two_pi = pi.mul_pow2(1);
    let mut worst = 0.0f64;
    for p in s.pairs() {
        let lhs = s.quasienergy(p.lower) - &s.quasienergy(p.upper);
        let rhs = pi.clone() - p.gap.clone() * BigFloat::from_f64(s.params().t, bits);
        let mut r = (lhs - &rhs).rem_euclid(&two_pi);
        if r > pi {
            r = two_pi.clone() - &r;
        }
        worst = worst.max(r.to_f64());
    }
    check(
        worst <= 1e-30 && !s.pairs().is_empty(),
        format!("{} doublets, max residual {worst:.1e}", s.pairs().len()),
    )
}

fn nlr_crossover_time() -> Outcome {
    let (s, o) = setup(10, 0.4, 192);
    let pair = &s.pairs()[0];
    let z = o.get(pair.upper, pair.lower).norm();
    let mut notes = Vec::new();
    let mut ok = true;
    for ratio in [0.1, 10.0] {
        let h = ratio * pair.gap_f64() / z;
        let c = nlr_crossover(&s, &o, h, 0, (10.0, 400.0), 400).map_err(|e| e.to_string())?;
        let r = c.t_c / c.t_nlr;
        ok &= (0.5..=2.0).contains(&r);
        notes.push(format!("h|O|/Δ₀ = {ratio}: t_c/t_NLR = {r:.3}"));
    }
    check(ok, notes.join("; "))
}

fn random_tridiagonal(rng: &mut ChaCha8Rng, n: usize) -> (Vec<f64>, Vec<f64>) {
    let d = (0..n).map(|_| rng.gen_range(-3.0..3.0)).collect();
    let e = (1..n)
        .map(|_| {
            let x: f64 = rng.gen_range(0.05..2.0);
            if rng.gen() {
                x
            } else {
                -x
            }
        })
        .collect();
    (d, e)
}

fn backward_error<R: Real>(d: &[f64], e: &[f64], bits: u32) -> bool {
    let m = SymTridiagonal::new(
        d.iter().map(|&x| R::from_f64(x, bits)).collect(),
        e.iter().map(|&x| R::from_f64(x, bits)).collect(),
    )
    .unwrap();
    let eig = tridiag_eigensolve(&m).unwrap();
    let n = d.len();
    let bound = R::from_f64(n as f64, bits) * R::one(bits).mul_pow2(-(bits as i32) + 10) * m.norm();
    for i in 0..n {
        for j in 0..n {
            let mut s = R::zero(bits);
            for k in 0..n {
                s = s + eig.vectors[k][i].clone() * &eig.values[k] * &eig.vectors[k][j];
            }
            let want = if i == j {
                R::from_f64(d[i], bits)
            } else if i.abs_diff(j) == 1 {
                R::from_f64(e[i.min(j)], bits)
            } else {
                R::zero(bits)
            };
            if (s - &want).abs() > bound {
                return false;
            }
        }
    }
    true
}

fn property_suites() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut failures = Vec::new();

    let mut unitary = true;
    for _ in 0..100 {
        let n = rng.gen_range(1..=8);
        let a = DMatrix::from_fn(n, n, |_, _| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
        let h = Matrix::hermitian_part(&a);
        let v = DVector::from_fn(n, |_, _| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
        let t = rng.gen_range(-5.0..5.0);
        for route in [ExpmRoute::Eigen, ExpmRoute::Taylor] {
            let w = expm_action(&h, t, &v, route).unwrap();
            unitary &= (w.norm() / v.norm() - 1.0).abs() < 1e-12;
        }
    }
    if !unitary {
        failures.push("unitarity");
    }

    let mut stable = true;
    for _ in 0..40 {
        let n = rng.gen_range(2..=12);
        let (d, e) = random_tridiagonal(&mut rng, n);
        stable &= backward_error::<f64>(&d, &e, 53);
        stable &= backward_error::<BigFloat>(&d, &e, 192);
    }
    if !stable {
        failures.push("backward stability");
    }

    let mut parity = true;
    for n in 1..=60 {
        let ops = build_collective_operators(n).unwrap();
        let (x, sz) = (ops.x.data(), ops.sz.data());
        parity &= x * sz + sz * x == DMatrix::zeros(n + 1, n + 1);
    }
    if !parity {
        failures.push("parity anticommutation");
    }

    let (mut hermitian, mut additive) = (true, true);
    let sig = SignalSpec::sinusoidal_pdr(1.0, 0.0);
    for _ in 0..20 {
        let n_spins = rng.gen_range(4..=14);
        let b = rng.gen_range(0.05..0.6);
        let periods = rng.gen_range(1..2000);
        let p = LmgParams::new(1.0, b, n_spins, 1.0).unwrap();
        let sz = build_collective_operators(n_spins).unwrap().sz;
        for precision in [Precision::Double, Precision::Extended(192)] {
            let s = diagonalize(&p, precision).unwrap();
            let o = overlap_matrix(&s, &sz).unwrap();
            let full = hso_full(&s, &o, &sig, periods).unwrap();
            let block = hso_block_diagonal(&s, &o, &sig, periods).unwrap();
            hermitian &= full.hermiticity_defect() <= 1e-10 && block.hermiticity_defect() <= 1e-10;
            let total = block.frobenius().powi(2);
            let parts: f64 = s
                .pairs()
                .iter()
                .map(|pr| hso_full(&s, &o.restricted(&[pr.upper, pr.lower]), &sig, periods).unwrap().frobenius().powi(2))
                .sum();
            additive &= (total - parts).abs() <= 1e-12 * total.max(1e-300);
        }
    }
    if !hermitian {
        failures.push("HSO hermiticity");
    }
    if !additive {
        failures.push("block-norm additivity");
    }

    if failures.is_empty() {
        Ok("unitarity, backward stability, parity, hermiticity, additivity (double and 192-bit)".into())
    } else {
        Err(format!("failed: {}", failures.join(", ")))
    }
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("oracle equivalence", oracle_equivalence),
        ("closed-form peak", closed_form_peak),
        ("16/π² prefactor", prefactor),
        ("Heisenberg scaling", heisenberg_scaling),
        ("step structure", step_structure),
        ("semiclassical overlap", semiclassical_overlap),
        ("π-pairing identity", pi_pairing),
        ("NLR crossover", nlr_crossover_time),
        ("property suites", property_suites),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        let start = Instant::now();
        let outcome = run();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS  {name}: {detail} [{secs:.1}s]"),
            Err(detail) => {
                failed += 1;
                println!("FAIL  {name}: {detail} [{secs:.1}s]");
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
