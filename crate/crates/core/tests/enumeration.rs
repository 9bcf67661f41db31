//! Exact-enumeration oracles over outcome strings.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::function::factorial::ln_binomial;

use wva_core::detection::{expected_d, expected_d_total};
use wva_core::estimators::{exact_norm_variance, norm_squared_mean, paper_norm_variance, total_variance_prediction};
use wva_core::noise::NoiseCovariance;
use wva_core::quantum::{expected_o_squared, Observable, OrthonormalBasis, OutcomeTable, PureState};
use wva_core::random::{random_real_basis, random_real_observable, random_real_state};

/// Calls `visit(prob, outcomes)` for every string in `{0..d}^n`.
fn for_each_string(probs: &[f64], n: usize, mut visit: impl FnMut(f64, &[usize])) {
    let d = probs.len();
    let mut s = vec![0usize; n];
    loop {
        let p: f64 = s.iter().map(|&k| probs[k]).product();
        visit(p, &s);
        let mut pos = 0;
        loop {
            if pos == n {
                return;
            }
            s[pos] += 1;
            if s[pos] < d {
                break;
            }
            s[pos] = 0;
            pos += 1;
        }
    }
}

fn weak_values(table: &OutcomeTable) -> Vec<f64> {
    table.weak_values.iter().map(|w| w.unwrap()).collect()
}

/// `E[g]` and `Var[g]` of `g = ‖O_w(f)‖²` over all strings of length `n`.
fn norm_moments(probs: &[f64], ws: &[f64], n: usize) -> (f64, f64) {
    let (mut m1, mut m2, mut total) = (0.0, 0.0, 0.0);
    for_each_string(probs, n, |p, s| {
        let g: f64 = s.iter().map(|&k| ws[k] * ws[k]).sum();
        m1 += p * g;
        m2 += p * g * g;
        total += p;
    });
    assert!((total - 1.0).abs() < 1e-12);
    (m1, m2 - m1 * m1)
}

fn random_real_config(rng: &mut ChaCha8Rng) -> (Observable, PureState, OrthonormalBasis) {
    loop {
        let d = rng.random_range(2..=3);
        let o = random_real_observable(d, rng);
        let i = random_real_state(d, rng);
        let b = random_real_basis(d, rng);
        let t = OutcomeTable::new(&o, &i, &b).unwrap();
        if t.weak_values.iter().all(Option::is_some) {
            return (o, i, b);
        }
    }
}

fn qubit_pi_8() -> (Observable, PureState, OrthonormalBasis) {
    (
        Observable::pauli_z(),
        PureState::rotated(2, std::f64::consts::FRAC_PI_8),
        OrthonormalBasis::qubit_minus_plus(),
    )
}

#[test]
fn norm_squared_mean_matches_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..50 {
        let (o, i, b) = random_real_config(&mut rng);
        let t = OutcomeTable::new(&o, &i, &b).unwrap();
        let ws = weak_values(&t);
        for n in [1, 2, 5] {
            let (brute, _) = norm_moments(&t.probs, &ws, n);
            let formula = norm_squared_mean(n, &i, &o).unwrap();
            assert!(
                (brute - formula).abs() <= 1e-12 * formula.abs().max(1.0),
                "n = {n}: {brute} vs {formula}"
            );
        }
    }
}

#[test]
fn exact_norm_variance_matches_enumeration_and_is_linear() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..20 {
        let (o, i, b) = random_real_config(&mut rng);
        let t = OutcomeTable::new(&o, &i, &b).unwrap();
        let ws = weak_values(&t);
        let max_n = if t.probs.len() == 2 { 12 } else { 7 };
        let (_, var1) = norm_moments(&t.probs, &ws, 1);
        for n in 1..=max_n {
            let (_, brute) = norm_moments(&t.probs, &ws, n);
            let exact = exact_norm_variance(n, &t.probs, &ws);
            let scale = exact.abs().max(1.0);
            assert!((brute - exact).abs() <= 1e-9 * scale, "n = {n}: {brute} vs {exact}");
            assert!((brute - n as f64 * var1).abs() <= 1e-9 * scale);
        }
    }
}

#[test]
fn published_norm_variance_omits_cross_terms() {
    let (o, i, b) = qubit_pi_8();
    let t = OutcomeTable::new(&o, &i, &b).unwrap();
    let ws = weak_values(&t);
    let (_, brute) = norm_moments(&t.probs, &ws, 1);
    assert!((brute - 4.0).abs() < 1e-12);
    assert!((exact_norm_variance(1, &t.probs, &ws) - 4.0).abs() < 1e-12);
    assert!((paper_norm_variance(1, &t.probs, &ws) - 4.25).abs() < 1e-12);

    // Difference is exactly the dropped covariance 2 p₁p₂ w₁² w₂².
    let gap = paper_norm_variance(1, &t.probs, &ws) - exact_norm_variance(1, &t.probs, &ws);
    let cross = 2.0 * t.probs[0] * t.probs[1] * ws[0].powi(2) * ws[1].powi(2);
    assert!((gap - cross).abs() < 1e-12);
}

/// `E_f[σ²/‖O_w(f)‖²]` for a two-outcome system, grouped by the count of outcome 0.
fn grouped_total_variance(p0: f64, w: [f64; 2], n: usize, sigma: f64) -> f64 {
    (0..=n)
        .map(|k| {
            let log_pmf = ln_binomial(n as u64, k as u64) + k as f64 * p0.ln() + (n - k) as f64 * (1.0 - p0).ln();
            let norm = k as f64 * w[0] * w[0] + (n - k) as f64 * w[1] * w[1];
            log_pmf.exp() * sigma * sigma / norm
        })
        .sum()
}

fn enumerated_total_variance(probs: &[f64], ws: &[f64], n: usize, sigma: f64) -> f64 {
    let mut acc = 0.0;
    for_each_string(probs, n, |p, s| {
        let norm: f64 = s.iter().map(|&k| ws[k] * ws[k]).sum();
        acc += p * sigma * sigma / norm;
    });
    acc
}

#[test]
fn total_variance_prediction_against_exact_evaluation() {
    let (o, i, b) = qubit_pi_8();
    let t = OutcomeTable::new(&o, &i, &b).unwrap();
    let ws = weak_values(&t);
    let sigma = 10.0;

    for n in 1..=12 {
        let brute = enumerated_total_variance(&t.probs, &ws, n, sigma);
        let grouped = grouped_total_variance(t.probs[0], [ws[0], ws[1]], n, sigma);
        assert!((brute - grouped).abs() <= 1e-12 * brute, "n = {n}");
    }

    // The prediction is a large-N expansion; compare where it applies.
    for n in [100, 200] {
        let exact = grouped_total_variance(t.probs[0], [ws[0], ws[1]], n, sigma);
        let predicted = total_variance_prediction(n, &i, &o, &b, sigma).unwrap();
        let rel = (predicted - exact).abs() / exact;
        assert!(rel < 0.10, "n = {n}: predicted {predicted}, exact {exact}");
    }
}

#[test]
fn total_variance_single_outcome_basis() {
    let o = Observable::from_real_diagonal(&[2.0, -1.0]).unwrap();
    let i = PureState::basis_vector(2, 0);
    let b = OrthonormalBasis::computational(2);
    let v = total_variance_prediction(10, &i, &o, &b, 3.0).unwrap();
    assert_eq!(v, 9.0 / (10.0 * 4.0));
    let o2 = expected_o_squared(&i, &o).unwrap();
    assert_eq!(o2, 4.0);
}

#[test]
fn expected_d_total_matches_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for _ in 0..10 {
        let (o, i, b) = random_real_config(&mut rng);
        let t = OutcomeTable::new(&o, &i, &b).unwrap();
        let ws = weak_values(&t);
        let x = rng.random_range(-1.0..1.0);
        let sigma = rng.random_range(0.5..3.0);
        let max_n = if t.probs.len() == 2 { 10 } else { 6 };
        for n in 1..=max_n {
            let zeros = NoiseCovariance::zeros(n);
            let mut acc = 0.0;
            for_each_string(&t.probs, n, |p, s| {
                let ow = DVector::from_iterator(n, s.iter().map(|&k| ws[k]));
                acc += p * expected_d(x, &ow, &zeros, sigma).unwrap().noncentrality;
            });
            let formula = expected_d_total(x, n, &i, &o, sigma).unwrap().noncentrality;
            assert!(
                (acc - formula).abs() <= 1e-10 * formula.abs().max(1.0),
                "n = {n}: {acc} vs {formula}"
            );
        }
    }
}
