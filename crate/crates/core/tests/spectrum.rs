use ftc_sensor::floquet::{
    count_cat_pairs, diagonalize, stroboscopic_magnetization, LmgParams,
};
use ftc_sensor::oracle::{propagate, PropagationConfig};
use ftc_sensor::precision::{BigFloat, Precision, Real};
use ftc_sensor::signal::SignalSpec;
use ftc_sensor::spin::build_collective_operators;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

const GOLDEN_N10: &str = include_str!("data/spectrum_n10_b0.4_192bits.json");
const GOLDEN_GAP_N40: &str = "4.2273780181445636687517357186215557548224517432048363431978e-11";

fn params(n: usize, b: f64) -> LmgParams {
    LmgParams::new(1.0, b, n, 1.0).unwrap()
}

#[test]
fn golden_spectrum_is_bit_identical() {
    let s = diagonalize(&params(10, 0.4), Precision::Extended(192)).unwrap();
    assert_eq!(s.to_json(), GOLDEN_N10);
}

#[test]
fn golden_ground_gap_at_forty_spins() {
    let p = params(40, 0.4);
    let s192 = diagonalize(&p, Precision::Extended(192)).unwrap();
    let gap = &s192.pairs()[0].gap;
    assert_eq!(gap.to_decimal(), GOLDEN_GAP_N40);
    let g = gap.to_f64();
    assert!(g > 0.0 && g < 1e-6);

    let s256 = diagonalize(&p, Precision::Extended(256)).unwrap();
    for (a, b) in s192.pairs().iter().zip(s256.pairs()) {
        let fine = b.gap.clone();
        let diff = (a.gap.with_bits(256) - &fine).abs() / fine;
        assert!(diff.to_f64() < 1e-40, "pair {} differs by {:e}", a.k, diff.to_f64());
    }
}

#[test]
fn two_spin_roots_match_characteristic_polynomial() {
    // (λ + 1)(λ² + λ − 4B²) for N = 2, J = 1.
    let bits = 128;
    let s = diagonalize(&params(2, 0.3), Precision::Extended(bits)).unwrap();
    let one = BigFloat::one(bits);
    let b = BigFloat::from_f64(0.3, bits);
    let disc = (one.clone() + BigFloat::from_f64(16.0, bits) * b.clone() * &b).sqrt();
    let mut want = vec![
        (-(one.clone()) - &disc).mul_pow2(-1),
        -(one.clone()),
        (disc - &one).mul_pow2(-1),
    ];
    want.sort_by(|x, y| x.partial_cmp(y).unwrap());
    for (e, w) in s.energies().iter().zip(&want) {
        let err = (e.clone() - w).abs().to_f64();
        assert!(err < 1e-30, "root error {err:e}");
    }
}

#[test]
fn pi_pairing_identity_at_forty_spins() {
    let s = diagonalize(&params(40, 0.4), Precision::Extended(192)).unwrap();
    let bits = s.bits();
    let pi = BigFloat::pi(bits);
    let two_pi = pi.mul_pow2(1);
    assert!(!s.pairs().is_empty());
    for p in s.pairs() {
        let lhs = s.quasienergy(p.lower) - &s.quasienergy(p.upper);
        let rhs = pi.clone() - p.gap.clone() * BigFloat::from_f64(s.params().t, bits);
        let mut r = (lhs - &rhs).rem_euclid(&two_pi);
        if r > pi {
            r = two_pi.clone() - &r;
        }
        assert!(r.to_f64() <= 1e-30, "pair {}: {:e}", p.k, r.to_f64());
    }
}

#[test]
fn pair_count_matches_independent_scan() {
    let p = params(40, 0.4);
    let s = diagonalize(&p, Precision::Extended(192)).unwrap();
    let e = s.energies_f64();
    let par = s.parities();
    let mut even: Vec<f64> = (0..e.len()).filter(|&i| par[i] > 0).map(|i| e[i]).collect();
    let mut odd: Vec<f64> = (0..e.len()).filter(|&i| par[i] < 0).map(|i| e[i]).collect();
    even.sort_by(f64::total_cmp);
    odd.sort_by(f64::total_cmp);
    let scan = even
        .iter()
        .zip(&odd)
        .take_while(|(a, b)| 0.5 * (*a + *b) < p.edge())
        .count();
    assert_eq!(count_cat_pairs(&s), scan);
    assert!(scan > 5);
}

#[test]
fn paramagnet_has_at_most_one_doublet() {
    for b in [1.0, 1.2, 2.0] {
        let s = diagonalize(&params(20, b), Precision::Extended(128)).unwrap();
        assert!(count_cat_pairs(&s) <= 1, "B = {b}: {}", count_cat_pairs(&s));
    }
    let s = diagonalize(&params(20, 2.0), Precision::Extended(128)).unwrap();
    assert_eq!(count_cat_pairs(&s), 0);
}

#[test]
fn gaps_grow_with_pair_index() {
    for n in [10, 20, 40] {
        let s = diagonalize(&params(n, 0.4), Precision::Extended(192)).unwrap();
        for w in s.pairs().windows(2) {
            assert!(w[0].gap <= w[1].gap);
            assert!(w[0].gap_f64() > 0.0);
        }
    }
}

#[test]
fn ground_gap_closes_exponentially() {
    let ns = [10usize, 16, 22, 28, 34, 40];
    let logs: Vec<f64> = ns
        .iter()
        .map(|&n| {
            let s = diagonalize(&params(n, 0.4), Precision::Extended(192)).unwrap();
            s.pairs()[0].gap_f64().ln()
        })
        .collect();
    let x: Vec<f64> = ns.iter().map(|&n| n as f64).collect();
    let mx = x.iter().sum::<f64>() / x.len() as f64;
    let my = logs.iter().sum::<f64>() / x.len() as f64;
    let sxy: f64 = x.iter().zip(&logs).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let syy: f64 = logs.iter().map(|b| (b - my).powi(2)).sum();
    let slope = sxy / sxx;
    let r2 = sxy * sxy / (sxx * syy);
    assert!(slope < -0.3, "slope {slope}");
    assert!(r2 > 0.999, "r² {r2}");
}

#[test]
fn block_eigenvalues_match_full_matrix() {
    for n in [3usize, 8, 12] {
        for b in [0.1, 0.4, 0.9] {
            let p = params(n, b);
            let ops = build_collective_operators(n).unwrap();
            let h = ops.sz.real() * ops.sz.real() * (-2.0 / n as f64) - ops.sx.real() * (2.0 * b);
            let mut full: Vec<f64> = h.symmetric_eigen().eigenvalues.iter().copied().collect();
            full.sort_by(f64::total_cmp);
            let s = diagonalize(&p, Precision::Extended(128)).unwrap();
            for (a, b) in s.energies_f64().iter().zip(&full) {
                assert!((a - b).abs() < 1e-8);
            }
        }
    }
}

#[test]
fn magnetization_matches_propagation() {
    let p = params(20, 0.4);
    let s = diagonalize(&p, Precision::Extended(128)).unwrap();
    let d = p.n + 1;
    let mut psi = DVector::from_element(d, Complex64::new(0.0, 0.0));
    psi[d - 1] = Complex64::new(1.0, 0.0);
    let trace = stroboscopic_magnetization(&s, &psi, 200).unwrap();
    let sig = SignalSpec::sinusoidal_pdr(p.t, 0.0);
    let traj = propagate(&psi, &p, &sig, 0.0, 200, &PropagationConfig::default()).unwrap();
    let sz = DMatrix::from_fn(d, d, |i, j| {
        if i == j {
            Complex64::new(i as f64 - 10.0, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    for (n, st) in traj.states.iter().enumerate() {
        let m = st.dotc(&(&sz * st)).re;
        assert!((m - trace.values[n]).abs() < 1e-8, "n = {n}: {m} vs {}", trace.values[n]);
    }
}
