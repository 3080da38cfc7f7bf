//! Scalar density evolution for joint iterative decoding over erasure
//! channels.
//!
//! State is the pair of variable-to-check erasure probabilities `(x, y)` for
//! the two codes. Both recursions here are monotone in the state and in the
//! channel erasure rates, which is what makes bisection for thresholds valid.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::degree::{DegreeDistribution, EnsembleSpec};
use crate::numeric::bisect_last_true;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeState {
    pub x: f64,
    pub y: f64,
}

impl DeState {
    pub const ERASED: DeState = DeState { x: 1.0, y: 1.0 };

    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn residual(&self) -> f64 {
        self.x.max(self.y)
    }

    fn clamped(x: f64, y: f64) -> Self {
        Self { x: x.clamp(0.0, 1.0), y: y.clamp(0.0, 1.0) }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeOptions {
    pub max_iter: usize,
    pub target_residual: f64,
    pub stall_tol: f64,
}

impl Default for DeOptions {
    fn default() -> Self {
        Self { max_iter: 10_000, target_residual: 1e-6, stall_tol: 1e-12 }
    }
}

impl DeOptions {
    /// Defaults with the ensemble's own target residual (`1/N` for truncated
    /// capacity ensembles).
    pub fn for_ensemble(ens: &EnsembleSpec) -> Self {
        Self { target_residual: ens.default_target_residual(), ..Self::default() }
    }
}

/// Default bisection tolerance for thresholds, in erasure probability.
pub const DEFAULT_BISECT_TOL: f64 = 1e-4;

/// Check-to-variable erasure probability `1 - (1 - eps) rho(1 - x)` of an
/// LDGM code whose generator nodes see erasure rate `eps`.
pub fn varrho(eps: f64, rho: &DegreeDistribution, x: f64) -> f64 {
    1.0 - (1.0 - eps) * rho.eval(1.0 - x)
}

/// Erasure probability of the correlation message, `(1-p) + p q`, given the
/// erasure probability `q` of the partner bit's estimate.
fn correlation_prior(p: f64, q: f64) -> f64 {
    (1.0 - p) + p * q
}

/// One iteration of a two-user density evolution recursion with the
/// degree profiles bound in.
pub trait JointDe: Sync {
    fn step(&self, s: DeState, eps1: f64, eps2: f64) -> DeState;

    /// Erasure probability of each user's source-bit estimate in state `s`.
    fn bit_erasure(&self, s: DeState, eps1: f64, eps2: f64) -> (f64, f64);
}

/// Two LDGM (LT) codes joined by erasure-correlation nodes on their source
/// bits.
#[derive(Debug, Clone)]
pub struct LdgmSystem {
    lambda: DegreeDistribution,
    l_node: DegreeDistribution,
    rho: DegreeDistribution,
    p: f64,
}

impl LdgmSystem {
    pub fn new(ens: &EnsembleSpec, p: f64) -> Self {
        Self { lambda: ens.lambda.clone(), l_node: ens.variable_node(), rho: ens.rho.clone(), p }
    }

    pub fn from_parts(lambda: DegreeDistribution, l_node: DegreeDistribution, rho: DegreeDistribution, p: f64) -> Self {
        Self { lambda, l_node, rho, p }
    }
}

impl JointDe for LdgmSystem {
    fn step(&self, s: DeState, eps1: f64, eps2: f64) -> DeState {
        let v1 = varrho(eps1, &self.rho, s.x);
        let v2 = varrho(eps2, &self.rho, s.y);
        let x = correlation_prior(self.p, self.l_node.eval(v2)) * self.lambda.eval(v1);
        let y = correlation_prior(self.p, self.l_node.eval(v1)) * self.lambda.eval(v2);
        DeState::clamped(x, y)
    }

    fn bit_erasure(&self, s: DeState, eps1: f64, eps2: f64) -> (f64, f64) {
        let n1 = self.l_node.eval(varrho(eps1, &self.rho, s.x));
        let n2 = self.l_node.eval(varrho(eps2, &self.rho, s.y));
        (correlation_prior(self.p, n2) * n1, correlation_prior(self.p, n1) * n2)
    }
}

/// Two punctured systematic LDPC codes. A fraction `sys_frac` of variable
/// nodes are the (unsent) source bits, whose only prior is the correlation
/// message; the rest are parity bits seen through the channel.
#[derive(Debug, Clone)]
pub struct LdpcSystem {
    lambda: DegreeDistribution,
    l_node: DegreeDistribution,
    rho: DegreeDistribution,
    sys_frac: f64,
    p: f64,
}

impl LdpcSystem {
    pub fn new(lambda: DegreeDistribution, rho: DegreeDistribution, sys_frac: f64, p: f64) -> Self {
        let l_node = lambda.to_node();
        Self { lambda, l_node, rho, sys_frac, p }
    }

    /// Erasure probability of a variable's estimate from its check edges
    /// alone, `L(1 - rho(1 - x))`.
    pub fn node_estimate(&self, x: f64) -> f64 {
        self.l_node.eval(1.0 - self.rho.eval(1.0 - x))
    }

    pub fn edge_extrinsic(&self, x: f64) -> f64 {
        self.lambda.eval(1.0 - self.rho.eval(1.0 - x))
    }

    pub fn sys_frac(&self) -> f64 {
        self.sys_frac
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub(crate) fn prior(&self, correlation: f64, eps: f64) -> f64 {
        self.sys_frac * correlation + (1.0 - self.sys_frac) * eps
    }

    pub(crate) fn correlation(&self, partner_estimate: f64) -> f64 {
        correlation_prior(self.p, partner_estimate)
    }
}

impl JointDe for LdpcSystem {
    fn step(&self, s: DeState, eps1: f64, eps2: f64) -> DeState {
        let f1 = self.correlation(self.node_estimate(s.y));
        let f2 = self.correlation(self.node_estimate(s.x));
        let x = self.prior(f1, eps1) * self.edge_extrinsic(s.x);
        let y = self.prior(f2, eps2) * self.edge_extrinsic(s.y);
        DeState::clamped(x, y)
    }

    fn bit_erasure(&self, s: DeState, _eps1: f64, _eps2: f64) -> (f64, f64) {
        let n1 = self.node_estimate(s.x);
        let n2 = self.node_estimate(s.y);
        (self.correlation(n2) * n1, self.correlation(n1) * n2)
    }
}

/// One joint LDGM step for the ensemble's profiles with correlation `p`.
pub fn ldgm_joint_step(s: DeState, ens: &EnsembleSpec, p: f64, eps1: f64, eps2: f64) -> DeState {
    LdgmSystem::new(ens, p).step(s, eps1, eps2)
}

/// Single-coordinate recursion for `eps1 = eps2` and `x = y`, using
/// `lambda = L`. Requires a Poisson variable profile.
pub fn ldgm_symmetric_step(x: f64, ens: &EnsembleSpec, p: f64, eps: f64) -> Result<f64> {
    if !ens.is_poisson() {
        return Err(Error::Contract("symmetric LDGM recursion needs Poisson variable degrees".into()));
    }
    let v = varrho(eps, &ens.rho, x);
    let l = ens.lambda.eval(v);
    Ok((correlation_prior(p, l) * l).clamp(0.0, 1.0))
}

/// One joint step for punctured systematic LDPC codes.
pub fn ldpc_joint_step(
    s: DeState,
    lambda: &DegreeDistribution,
    rho: &DegreeDistribution,
    sys_frac: f64,
    p: f64,
    eps1: f64,
    eps2: f64,
) -> DeState {
    LdpcSystem::new(lambda.clone(), rho.clone(), sys_frac, p).step(s, eps1, eps2)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceReport {
    pub residual: f64,
    pub iters: usize,
    pub converged: bool,
    pub state: DeState,
}

/// Iterates `stepper` from `init` until the residual reaches the target
/// (converged), successive states differ by less than `stall_tol` in both
/// coordinates, or `max_iter` steps have run.
pub fn run_to_convergence(mut stepper: impl FnMut(DeState) -> DeState, init: DeState, opts: &DeOptions) -> ConvergenceReport {
    let mut state = init;
    let report = |state: DeState, iters, converged| ConvergenceReport { residual: state.residual(), iters, converged, state };
    if state.residual() <= opts.target_residual {
        return report(state, 0, true);
    }
    for iter in 1..=opts.max_iter {
        let next = stepper(state);
        if next.residual() <= opts.target_residual {
            return report(next, iter, true);
        }
        let stalled = (next.x - state.x).abs() < opts.stall_tol && (next.y - state.y).abs() < opts.stall_tol;
        state = next;
        if stalled {
            return report(state, iter, false);
        }
    }
    report(state, opts.max_iter, false)
}

/// Whether DE started from all-erased converges at `(eps1, eps2)`.
pub fn converges(system: &impl JointDe, eps1: f64, eps2: f64, opts: &DeOptions) -> bool {
    run_to_convergence(|s| system.step(s, eps1, eps2), DeState::ERASED, opts).converged
}

/// Largest `t` in `[0, 1]` for which DE converges at `point(t)`, to within
/// `bisect_tol`. Returns 0 when even `t = 0` fails.
fn threshold_along(
    system: &impl JointDe,
    point: impl Fn(f64) -> (f64, f64),
    opts: &DeOptions,
    bisect_tol: f64,
) -> Result<Option<f64>> {
    let ok = |t: f64| {
        let (e1, e2) = point(t);
        converges(system, e1, e2, opts)
    };
    if !ok(0.0) {
        return Ok(None);
    }
    if ok(1.0) {
        return Ok(Some(1.0));
    }
    let t = bisect_last_true(0.0, 1.0, bisect_tol, ok);
    // Spot-check below the threshold; bisection alone cannot see a hole.
    for probe in [0.5 * t, 0.9 * t] {
        if !ok(probe) {
            return Err(Error::NonMonotone { converged: t, failed: probe });
        }
    }
    Ok(Some(t))
}

/// Largest `eps` on the diagonal `eps1 = eps2 = eps` at which DE converges.
pub fn symmetric_threshold(system: &impl JointDe, opts: &DeOptions, bisect_tol: f64) -> Result<f64> {
    Ok(threshold_along(system, |t| (t, t), opts, bisect_tol)?.unwrap_or(0.0))
}

/// Largest convergent `eps2` for a fixed `eps1`, or `None` if DE fails even
/// at `eps2 = 0`.
pub fn max_convergent_eps2(system: &impl JointDe, eps1: f64, opts: &DeOptions, bisect_tol: f64) -> Result<Option<f64>> {
    threshold_along(system, |t| (eps1, t), opts, bisect_tol)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AcprPoint {
    pub eps1: f64,
    /// `None` where no `eps2` is achievable.
    pub eps2_max: Option<f64>,
}

/// Density-evolution boundary of the achievable channel parameter region.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AcprCurve {
    pub points: Vec<AcprPoint>,
    pub options: DeOptions,
    pub bisect_tol: f64,
}

impl AcprCurve {
    /// Trapezoidal area under the curve over the sampled `eps1` range;
    /// unachievable points count as zero height.
    pub fn area(&self) -> f64 {
        self.points
            .windows(2)
            .map(|w| {
                let h0 = w[0].eps2_max.unwrap_or(0.0);
                let h1 = w[1].eps2_max.unwrap_or(0.0);
                0.5 * (h0 + h1) * (w[1].eps1 - w[0].eps1)
            })
            .sum()
    }

    /// Where the curve meets the diagonal `eps2 = eps1`, by linear
    /// interpolation between grid points.
    pub fn diagonal_crossing(&self) -> Option<f64> {
        self.points.windows(2).find_map(|w| {
            let (a, b) = (w[0], w[1]);
            let da = a.eps2_max? - a.eps1;
            let db = b.eps2_max.unwrap_or(0.0) - b.eps1;
            if da >= 0.0 && db < 0.0 {
                let t = da / (da - db);
                Some(a.eps1 + t * (b.eps1 - a.eps1))
            } else {
                None
            }
        })
    }
}

/// `n` uniformly spaced points covering `[0, 1]`.
pub fn uniform_grid(n: usize) -> Vec<f64> {
    assert!(n >= 2);
    (0..n).map(|i| i as f64 / (n - 1) as f64).collect()
}

/// For each `eps1` in the grid, bisect the largest convergent `eps2`. Grid
/// points are evaluated in parallel; output order follows the grid.
pub fn acpr_sweep(system: &impl JointDe, eps1_grid: &[f64], opts: &DeOptions, bisect_tol: f64) -> Result<AcprCurve> {
    if eps1_grid.iter().any(|e| !(0.0..=1.0).contains(e)) {
        return Err(Error::Domain("ACPR grid must lie in [0,1]".into()));
    }
    if eps1_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Domain("ACPR grid must be strictly increasing".into()));
    }
    let points = eps1_grid
        .par_iter()
        .map(|&eps1| {
            let eps2_max = max_convergent_eps2(system, eps1, opts, bisect_tol)?.map(|e| e.clamp(0.0, 1.0));
            Ok(AcprPoint { eps1, eps2_max })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(AcprCurve { points, options: *opts, bisect_tol })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::degree::{build_capacity_ensemble, design_rate, poisson_lambda, Perspective, POISSON_TAIL_TOL};
    use crate::region::{corner_points, sw_contains, symmetric_extremal, CorrelationModel};
    use proptest::prelude::*;

    fn dist(c: &[f64]) -> DegreeDistribution {
        DegreeDistribution::new(c.to_vec(), Perspective::Edge).unwrap()
    }

    fn lt_ensemble(m: f64, rho: &[f64], p: f64) -> EnsembleSpec {
        EnsembleSpec {
            lambda: poisson_lambda(m, POISSON_TAIL_TOL).unwrap(),
            rho: dist(rho),
            p,
            eps_design: 0.0,
            mu: None,
            n_trunc: None,
            m: Some(m),
        }
    }

    /// Largest root of `g(x) = x` in `[0, 1]` by scanning down from 1 and
    /// bisecting the first sign change.
    fn largest_fixed_point(g: impl Fn(f64) -> f64) -> f64 {
        let h = |x: f64| g(x) - x;
        if h(1.0) >= 0.0 {
            return 1.0;
        }
        let steps = 4000;
        let mut hi = 1.0;
        for i in (0..steps).rev() {
            let lo = i as f64 / steps as f64;
            if h(lo) >= 0.0 {
                let (mut a, mut b) = (lo, hi);
                for _ in 0..80 {
                    let mid = 0.5 * (a + b);
                    if h(mid) >= 0.0 {
                        a = mid;
                    } else {
                        b = mid;
                    }
                }
                return a;
            }
            hi = lo;
        }
        0.0
    }

    #[test]
    fn varrho_examples() {
        let rho = dist(&[0.2, 0.3, 0.5]);
        for x in [0.0, 0.4, 1.0] {
            assert_eq!(varrho(1.0, &rho, x), 1.0);
        }
        let deg2 = dist(&[0.0, 1.0]);
        for x in [0.0, 0.25, 0.9] {
            assert!((varrho(0.0, &deg2, x) - x).abs() < 1e-15);
        }
        let deg1 = dist(&[1.0]);
        for x in [0.0, 0.5, 1.0] {
            assert!((varrho(0.3, &deg1, x) - 0.3).abs() < 1e-15);
        }
    }

    #[test]
    fn ldgm_step_hand_value() {
        let ens = lt_ensemble(2.0, &[0.0, 1.0], 0.5);
        let s = ldgm_joint_step(DeState::new(0.5, 0.5), &ens, 0.5, 0.5, 0.5);
        let l = (-0.5f64).exp();
        let want = (0.5 + 0.5 * l) * l;
        assert!((s.x - want).abs() < 1e-11);
        assert!((s.y - want).abs() < 1e-11);
        assert!((s.x - 0.48720).abs() < 1e-5);
        let sym = ldgm_symmetric_step(0.5, &ens, 0.5, 0.5).unwrap();
        assert!((sym - 0.48720).abs() < 1e-5);
    }

    #[test]
    fn ldgm_without_correlation_decouples() {
        let ens = lt_ensemble(3.0, &[0.1, 0.5, 0.4], 0.0);
        for (x, y, e1, e2) in [(0.3, 0.9, 0.2, 0.6), (1.0, 0.1, 0.0, 0.5)] {
            let s = ldgm_joint_step(DeState::new(x, y), &ens, 0.0, e1, e2);
            assert_eq!(s.x, ens.lambda.eval(varrho(e1, &ens.rho, x)).clamp(0.0, 1.0));
            assert_eq!(s.y, ens.lambda.eval(varrho(e2, &ens.rho, y)).clamp(0.0, 1.0));
        }
    }

    #[test]
    fn all_erased_is_fixed_without_degree_one_checks() {
        let ens = lt_ensemble(3.0, &[0.0, 0.5, 0.5], 0.7);
        for eps in [0.0, 0.3, 0.9] {
            let s = ldgm_joint_step(DeState::ERASED, &ens, 0.7, eps, eps);
            assert!((s.x - 1.0).abs() < 1e-12 && (s.y - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn symmetric_step_properties() {
        let ens = lt_ensemble(4.0, &[0.1, 0.4, 0.5], 0.6);
        for (x, eps) in [(0.2, 0.3), (0.8, 0.1), (1.0, 0.5)] {
            let joint = ldgm_joint_step(DeState::new(x, x), &ens, 0.6, eps, eps);
            let sym = ldgm_symmetric_step(x, &ens, 0.6, eps).unwrap();
            assert!((joint.x - sym).abs() < 1e-12);
            let l = ens.lambda.eval(varrho(eps, &ens.rho, x));
            assert!((ldgm_symmetric_step(x, &ens, 1.0, eps).unwrap() - l * l).abs() < 1e-12);
        }
        let mut ldpc = ens.clone();
        ldpc.m = None;
        assert!(matches!(ldgm_symmetric_step(0.5, &ldpc, 0.6, 0.3), Err(Error::Contract(_))));
    }

    #[test]
    fn ldpc_step_reductions() {
        let lambda = dist(&[0.0, 0.0, 1.0]);
        let rho = dist(&[0.0, 0.0, 0.0, 0.0, 0.0, 1.0]);
        let ext = |x: f64| lambda.eval(1.0 - rho.eval(1.0 - x));
        for x in [0.1, 0.4, 0.9] {
            let s = ldpc_joint_step(DeState::new(x, x), &lambda, &rho, 0.0, 0.0, 0.42, 0.3);
            assert!((s.x - 0.42 * ext(x)).abs() < 1e-15);
            assert!((s.y - 0.3 * ext(x)).abs() < 1e-15);
            let s = ldpc_joint_step(DeState::new(x, 0.2), &lambda, &rho, 1.0, 0.0, 0.1, 0.1);
            assert!((s.x - ext(x)).abs() < 1e-15);
        }
    }

    #[test]
    fn stalls_at_largest_fixed_point() {
        // checks all of degree 2: the all-erased state is a fixed point
        let ens = lt_ensemble(3.0, &[0.0, 1.0], 0.0);
        let sys = LdgmSystem::new(&ens, 0.0);
        let rep = run_to_convergence(|s| sys.step(s, 0.0, 0.0), DeState::ERASED, &DeOptions::default());
        assert!(!rep.converged);
        assert_eq!(rep.residual, 1.0);

        // with degree-one checks there is a strictly positive floor
        let ens = lt_ensemble(3.0, &[0.5, 0.5], 0.0);
        let sys = LdgmSystem::new(&ens, 0.0);
        let rep = run_to_convergence(|s| sys.step(s, 0.0, 0.0), DeState::ERASED, &DeOptions::default());
        let oracle = largest_fixed_point(|x| (-3.0 * (0.5 + 0.5 * (1.0 - x))).exp());
        assert!(!rep.converged);
        assert!(rep.residual > 0.05);
        assert!((rep.residual - oracle).abs() < 1e-9, "{} vs {}", rep.residual, oracle);

        let rep = run_to_convergence(|s| sys.step(s, 1.0, 1.0), DeState::ERASED, &DeOptions::default());
        assert!(!rep.converged);
        assert_eq!(rep.state, DeState::ERASED);
    }

    #[test]
    fn capacity_ensemble_reaches_one_over_n() {
        let ens = build_capacity_ensemble(0.5, 0.4, 0.1, 100).unwrap();
        let sys = LdgmSystem::new(&ens, 0.5);
        let opts = DeOptions::for_ensemble(&ens);
        let rep = run_to_convergence(|s| sys.step(s, 0.4, 0.4), DeState::ERASED, &opts);
        assert!(rep.converged);
        assert!(rep.residual <= 0.01);
        let t = symmetric_threshold(&sys, &opts, DEFAULT_BISECT_TOL).unwrap();
        assert!(t >= 0.4 - DEFAULT_BISECT_TOL);
    }

    #[test]
    fn convergence_criterion_holds_above_one_over_n() {
        for (p, mu, n) in [(0.5, 0.1, 100), (0.2, 0.05, 50), (0.9, 0.5, 200)] {
            let ens = build_capacity_ensemble(p, 0.4, mu, n).unwrap();
            let lo = 1.0 / n as f64;
            for i in 0..=2000 {
                let x = lo + (1.0 - lo) * i as f64 / 2000.0;
                let next = ldgm_symmetric_step(x, &ens, p, 0.4).unwrap();
                assert!(next < x, "p={p} mu={mu} N={n} x={x}");
            }
        }
    }

    #[test]
    fn single_user_threshold_matches_fixed_point_oracle() {
        let ens = lt_ensemble(6.0, &[0.1, 0.6, 0.3], 0.0);
        let sys = LdgmSystem::new(&ens, 0.0);
        let opts = DeOptions { target_residual: 1e-2, ..DeOptions::default() };
        let t = symmetric_threshold(&sys, &opts, 1e-5).unwrap();

        // The iteration from 1 descends to the largest fixed point, so DE
        // converges exactly when that fixed point sits below the target.
        let below_target = |eps: f64| {
            largest_fixed_point(|x| ens.lambda.eval(varrho(eps, &ens.rho, x))) < opts.target_residual
        };
        let mut oracle = 0.0;
        for i in 0..=2000 {
            let eps = i as f64 / 2000.0;
            if below_target(eps) {
                oracle = eps;
            } else {
                break;
            }
        }
        assert!(oracle > 0.0);
        assert!((t - oracle).abs() <= 1.0 / 2000.0 + 1e-5, "{t} vs {oracle}");
    }

    #[test]
    fn threshold_endpoints() {
        let ens = lt_ensemble(3.0, &[0.0, 1.0], 0.0);
        let sys = LdgmSystem::new(&ens, 0.0);
        assert_eq!(symmetric_threshold(&sys, &DeOptions::default(), 1e-4).unwrap(), 0.0);
    }

    #[test]
    fn acpr_of_capacity_ensemble() {
        let ens = build_capacity_ensemble(0.5, 0.4, 0.1, 100).unwrap();
        let sys = LdgmSystem::new(&ens, 0.5);
        let opts = DeOptions::for_ensemble(&ens);
        let curve = acpr_sweep(&sys, &uniform_grid(41), &opts, DEFAULT_BISECT_TOL).unwrap();
        let rate = design_rate(&ens);
        let model = CorrelationModel::erasure(0.5);
        for pt in &curve.points {
            if let Some(e2) = pt.eps2_max {
                assert!(sw_contains(model, rate, crate::region::ChannelPoint::new(pt.eps1, e2)));
            }
        }
        // the diagonal crossing agrees with the symmetric threshold
        let fine: Vec<f64> = (0..=200).map(|i| 0.40 + 0.05 * i as f64 / 200.0).collect();
        let local = acpr_sweep(&sys, &fine, &opts, 1e-5).unwrap();
        let t = symmetric_threshold(&sys, &opts, 1e-5).unwrap();
        let cross = local.diagonal_crossing().unwrap();
        assert!((cross - t).abs() < 1e-3, "{cross} vs {t}");

        // symmetric extremal point for the limiting rate is inside, corners are not
        let limit_rate = (1.0 - 0.4) / (1.0 - 0.25);
        let ext = symmetric_extremal(0.5, limit_rate);
        assert!(converges(&sys, ext.eps1 - 1e-3, ext.eps2 - 1e-3, &opts));
        let (a, b) = corner_points(0.5, limit_rate);
        assert!(!converges(&sys, a.eps1 - 0.01, a.eps2 - 0.01, &opts));
        assert!(!converges(&sys, b.eps1 - 0.01, b.eps2 - 0.01, &opts));
    }

    #[test]
    fn acpr_rejects_bad_grids() {
        let ens = lt_ensemble(3.0, &[0.5, 0.5], 0.0);
        let sys = LdgmSystem::new(&ens, 0.0);
        assert!(acpr_sweep(&sys, &[0.0, 0.5, 0.5], &DeOptions::default(), 1e-3).is_err());
        assert!(acpr_sweep(&sys, &[0.0, 1.5], &DeOptions::default(), 1e-3).is_err());
    }

    fn ldgm_from(p: f64, w: &[f64], m: f64) -> LdgmSystem {
        let ens = lt_ensemble(m, DegreeDistribution::from_weights(w.to_vec(), Perspective::Edge).unwrap().coefficients(), p);
        LdgmSystem::new(&ens, p)
    }

    fn ldpc_from(p: f64, sys_frac: f64) -> LdpcSystem {
        LdpcSystem::new(dist(&[0.0, 0.3, 0.7]), dist(&[0.0, 0.0, 0.0, 0.0, 0.5, 0.5]), sys_frac, p)
    }

    proptest! {
        #[test]
        fn steps_are_monotone_and_stay_in_unit_square(
            p in 0.0f64..=1.0, m in 0.5f64..12.0,
            w in proptest::collection::vec(0.0f64..1.0, 3),
            sys_frac in 0.0f64..=1.0,
            x in 0.0f64..=1.0, y in 0.0f64..=1.0, e1 in 0.0f64..=1.0, e2 in 0.0f64..=1.0,
            d in 1e-6f64..0.1,
        ) {
            prop_assume!(w.iter().sum::<f64>() > 1e-3);
            let (lg, lp) = (ldgm_from(p, &w, m), ldpc_from(p, sys_frac));
            let systems: [&dyn JointDe; 2] = [&lg, &lp];
            for sys in systems {
                let step = |s, a, b| sys.step(s, a, b);
                let base = step(DeState::new(x, y), e1, e2);
                prop_assert!((0.0..=1.0).contains(&base.x) && (0.0..=1.0).contains(&base.y));
                let tol = 1e-12;
                let bx = step(DeState::new((x + d).min(1.0), y), e1, e2);
                let by = step(DeState::new(x, (y + d).min(1.0)), e1, e2);
                let b1 = step(DeState::new(x, y), (e1 + d).min(1.0), e2);
                let b2 = step(DeState::new(x, y), e1, (e2 + d).min(1.0));
                for bumped in [bx, by, b1, b2] {
                    prop_assert!(bumped.x >= base.x - tol && bumped.y >= base.y - tol);
                }
            }
        }

        #[test]
        fn iterates_from_erased_are_nonincreasing(
            p in 0.0f64..=1.0, m in 0.5f64..12.0, w in proptest::collection::vec(0.0f64..1.0, 3),
            e1 in 0.0f64..=1.0, e2 in 0.0f64..=1.0,
        ) {
            prop_assume!(w.iter().sum::<f64>() > 1e-3);
            let sys = ldgm_from(p, &w, m);
            let mut s = DeState::ERASED;
            for _ in 0..200 {
                let next = sys.step(s, e1, e2);
                prop_assert!(next.x <= s.x + 1e-12 && next.y <= s.y + 1e-12);
                s = next;
            }
        }

        #[test]
        fn decoupling_and_symmetry(m in 0.5f64..12.0, w in proptest::collection::vec(0.0f64..1.0, 3), e1 in 0.0f64..=1.0, e2 in 0.0f64..=1.0) {
            prop_assume!(w.iter().sum::<f64>() > 1e-3);
            let joint = ldgm_from(0.0, &w, m);
            let mut s = DeState::ERASED;
            let mut single = 1.0;
            for _ in 0..50 {
                s = joint.step(s, e1, e2);
                single = joint.lambda.eval(varrho(e1, &joint.rho, single)).clamp(0.0, 1.0);
                prop_assert_eq!(s.x, single);
            }
            let full = ldgm_from(1.0, &w, m);
            let mut s = DeState::ERASED;
            for _ in 0..50 {
                s = full.step(s, e1, e1);
                prop_assert_eq!(s.x, s.y);
            }
        }
    }
}
