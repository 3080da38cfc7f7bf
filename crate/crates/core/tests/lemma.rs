//! The truncated check profile dominates the scaled untruncated one below
//! `1 - 1/N`, and the rate bookkeeping of the capacity ensemble.

use swcodes::degree::{
    build_capacity_ensemble, design_rate, g_n, rho_analytic, rho_series_coefficients, rho_truncated, theorem_rate,
};

const GRID: usize = 1000;
const EXTRA_TERMS: usize = 5000;

fn grid(n: usize) -> impl Iterator<Item = f64> {
    let top = 1.0 - 1.0 / n as f64;
    (0..GRID).map(move |j| (j as f64 + 0.5) / GRID as f64 * top)
}

/// `1 - sum_{j>=1} c_{N+j} x^j`: the bound's margin divided by `x^N`.
fn factored_margin(tail: &[f64], x: f64) -> f64 {
    let mut acc = 0.0;
    let mut pow = x;
    for c in tail {
        acc += c * pow;
        pow *= x;
        if pow < 1e-300 {
            break;
        }
    }
    1.0 - acc
}

#[test]
fn truncated_profile_dominates_on_grid() {
    for p in [0.1, 0.5, 0.9] {
        let c = rho_series_coefficients(p, 200 + EXTRA_TERMS);
        for n in [20usize, 100] {
            let tail = &c[n..];
            for mu in [0.05, 0.5] {
                let rho_n = rho_truncated(p, n, mu);
                let norm = mu + g_n(p, n) + 1.0;
                let at_zero = (mu + rho_analytic(p, 0.0, 1.0).unwrap()) / norm;
                assert!(rho_n.eval(0.0) >= at_zero - 1e-15);
                let mut violations = 0;
                for x in grid(n) {
                    if factored_margin(tail, x) <= 0.0 {
                        violations += 1;
                    }
                    // direct comparison where x^N is visible next to O(1) terms
                    if x.powi(n as i32) > 1e-10 {
                        let lhs = rho_n.eval(x);
                        let rhs = (mu + rho_analytic(p, x, 1.0).unwrap()) / norm;
                        if lhs <= rhs {
                            violations += 1;
                        }
                    }
                }
                assert_eq!(violations, 0, "p={p} N={n} mu={mu}");
            }
        }
    }
}

#[test]
fn margin_shrinks_toward_the_edge() {
    // past 1 - 1/N the bound is no longer guaranteed; the margin must at
    // least be smaller there than well inside the range
    let c = rho_series_coefficients(0.5, 20 + EXTRA_TERMS);
    let tail = &c[20..];
    assert!(factored_margin(tail, 0.99) < factored_margin(tail, 0.5));
}

#[test]
fn design_rate_approaches_theorem_rate() {
    for p in [0.0, 0.5, 1.0] {
        let ens = build_capacity_ensemble(p, 0.4, 0.1, 500).unwrap();
        let m = ens.m.unwrap();
        let gap = (design_rate(&ens) - theorem_rate(p, 0.4, 0.1, m)).abs();
        assert!(gap <= 0.01, "p={p}: gap {gap}");
    }
}

#[test]
fn series_integral_tends_to_one_minus_half_p() {
    for p in [0.0, 0.3, 0.5, 1.0] {
        let c = rho_series_coefficients(p, 5000);
        let s: f64 = c.iter().enumerate().map(|(j, ci)| ci / (j + 2) as f64).sum();
        assert!((s - (1.0 - p / 2.0)).abs() <= 0.01, "p={p}: {s}");
    }
}
