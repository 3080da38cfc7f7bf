//! Staggered block codes over two erasure channels.
//!
//! Each source is cut into `L` blocks of `k` bits. Source 1 is shifted by
//! `beta k` zeros at the front and source 2 by `beta k` zeros at the back, so
//! block `i` of source 1 overlaps the tail (fraction `beta`) of block `i-1`
//! and the head (fraction `1-beta`) of block `i` of source 2. Every block is
//! encoded by the same punctured systematic code of design rate
//! `R = k/(n-k)`, i.e. unpunctured rate `R' = R/(1+R)`.

use serde::{Deserialize, Serialize};

use crate::de::{ConvergenceReport, DeOptions, DeState, LdpcSystem};
use crate::degree::DegreeDistribution;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StaggerConfig {
    pub beta: f64,
    pub blocks: usize,
    pub rate: f64,
    pub p: f64,
}

impl StaggerConfig {
    pub fn r_prime(&self) -> f64 {
        self.rate / (1.0 + self.rate)
    }

    /// Fraction of transmitted block capacity spent on the known padding,
    /// `beta / L`. Vanishes as the number of blocks grows.
    pub fn padding_rate_loss(&self) -> f64 {
        self.beta / self.blocks as f64
    }
}

/// Largest erasure rates for which the staggered chain decodes:
/// `eps1 <= min{1 - R(1-beta), 1 - R(1-p beta)}` and
/// `eps2 <= 1 - R(1 - p(1-beta))`, clamped to `[0, 1]`.
pub fn stagger_region_bounds(rate: f64, p: f64, beta: f64) -> (f64, f64) {
    let e1 = (1.0 - rate * (1.0 - beta)).min(1.0 - rate * (1.0 - p * beta));
    let e2 = 1.0 - rate * (1.0 - p * (1.0 - beta));
    (e1.clamp(0.0, 1.0), e2.clamp(0.0, 1.0))
}

/// Erasure rate seen by a block's unpunctured codeword when its source bits
/// are erased with probability `source_prior` and its parity bits with `eps`.
pub fn effective_erasure(r_prime: f64, source_prior: f64, eps: f64) -> f64 {
    r_prime * source_prior + (1.0 - r_prime) * eps
}

/// A capacity-achieving block decodes iff its effective erasure rate leaves
/// room for the code rate. Written as `eps <= 1 - R prior` to avoid the
/// rounding of the equivalent `R' prior + (1-R') eps <= 1 - R'`.
fn block_decodes(rate: f64, prior: f64, eps: f64) -> bool {
    eps <= 1.0 - rate * prior
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockStatus {
    pub source1: Vec<bool>,
    pub source2: Vec<bool>,
}

impl BlockStatus {
    fn new(blocks: usize) -> Self {
        Self { source1: vec![false; blocks], source2: vec![false; blocks] }
    }

    pub fn all_decoded(&self) -> bool {
        self.source1.iter().chain(&self.source2).all(|&d| d)
    }

    pub fn decoded_count(&self) -> usize {
        self.source1.iter().chain(&self.source2).filter(|&&d| d).count()
    }
}

/// Decodes the chain with the transitions of the sufficiency argument: the
/// first source-1 block uses only its leading padding (prior `1-beta`), a
/// source-2 block uses the source-1 block it overlaps first (prior
/// `1 - p(1-beta)`), and each later source-1 block uses the source-2 block
/// before it (prior `1 - p beta`). Propagation runs to a fixed point.
pub fn block_chain_decode(cfg: &StaggerConfig, eps1: f64, eps2: f64) -> BlockStatus {
    let (rate, p, beta, l) = (cfg.rate, cfg.p, cfg.beta, cfg.blocks);
    let mut st = BlockStatus::new(l);
    loop {
        let mut changed = false;
        for i in 0..l {
            if !st.source1[i] {
                let ready = i == 0 || st.source2[i - 1];
                let prior = if i == 0 { 1.0 - beta } else { 1.0 - p * beta };
                if ready && block_decodes(rate, prior, eps1) {
                    st.source1[i] = true;
                    changed = true;
                }
            }
            if !st.source2[i] && st.source1[i] && block_decodes(rate, 1.0 - p * (1.0 - beta), eps2) {
                st.source2[i] = true;
                changed = true;
            }
        }
        if !changed {
            return st;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JointDecodeOptions {
    /// Let source 2's last block use its trailing padding.
    pub trailing_padding: bool,
    /// Largest effective erasure a block tolerates; defaults to `1 - R'`.
    pub block_threshold: Option<f64>,
}

impl Default for JointDecodeOptions {
    fn default() -> Self {
        Self { trailing_padding: true, block_threshold: None }
    }
}

/// Schedule-free fixed point of the block abstraction with every source of
/// side information: any block may decode on its own, both paddings are
/// known, and each overlap segment with a decoded partner block is revealed
/// with probability `p`.
pub fn joint_block_decode(cfg: &StaggerConfig, eps1: f64, eps2: f64, opts: &JointDecodeOptions) -> BlockStatus {
    let (p, beta, l) = (cfg.p, cfg.beta, cfg.blocks);
    let rp = cfg.r_prime();
    let threshold = opts.block_threshold.unwrap_or(1.0 - rp);
    let partner = |decoded: Option<bool>| match decoded {
        None => 0.0,
        Some(true) => 1.0 - p,
        Some(false) => 1.0,
    };
    let ok = |prior: f64, eps: f64| match opts.block_threshold {
        None => block_decodes(cfg.rate, prior, eps),
        Some(_) => effective_erasure(rp, prior, eps) <= threshold,
    };
    let mut st = BlockStatus::new(l);
    loop {
        let mut changed = false;
        for i in 0..l {
            if !st.source1[i] {
                let head = if i == 0 { None } else { Some(st.source2[i - 1]) };
                let prior = beta * partner(head) + (1.0 - beta) * partner(Some(st.source2[i]));
                if ok(prior, eps1) {
                    st.source1[i] = true;
                    changed = true;
                }
            }
            if !st.source2[i] {
                let tail = if i + 1 < l {
                    Some(st.source1[i + 1])
                } else if opts.trailing_padding {
                    None
                } else {
                    Some(false)
                };
                let prior = (1.0 - beta) * partner(Some(st.source1[i])) + beta * partner(tail);
                if ok(prior, eps2) {
                    st.source2[i] = true;
                    changed = true;
                }
            }
        }
        if !changed {
            return st;
        }
    }
}

/// Per-block erasure probabilities of the staggered density evolution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StaggerDeState {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
}

impl StaggerDeState {
    pub fn erased(blocks: usize) -> Self {
        Self { a: vec![1.0; blocks], b: vec![1.0; blocks] }
    }

    pub fn residual(&self) -> f64 {
        self.a.iter().chain(&self.b).fold(0.0, |m, &v| m.max(v))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StaggerDeReport {
    pub state: StaggerDeState,
    pub iters: usize,
    pub converged: bool,
}

/// Scalar density evolution of `blocks` coupled punctured LDPC blocks per
/// source. Blocks outside `1..=L` are known, which by default makes their
/// correlation message erased with probability `1 - p`. With
/// [`StaggeredDe::with_known_padding`] the padded positions are instead
/// known outright, as they are in a physical decoder.
#[derive(Debug, Clone)]
pub struct StaggeredDe {
    code: LdpcSystem,
    beta: f64,
    blocks: usize,
    known_padding: bool,
}

impl StaggeredDe {
    pub fn new(lambda: DegreeDistribution, rho: DegreeDistribution, sys_frac: f64, p: f64, beta: f64, blocks: usize) -> Self {
        Self { code: LdpcSystem::new(lambda, rho, sys_frac, p), beta, blocks, known_padding: false }
    }

    pub fn with_known_padding(mut self, known: bool) -> Self {
        self.known_padding = known;
        self
    }

    pub fn blocks(&self) -> usize {
        self.blocks
    }

    pub fn code(&self) -> &LdpcSystem {
        &self.code
    }

    /// Correlation-message erasure from a partner block, `None` meaning
    /// outside the chain.
    fn f_nu(&self, v: Option<f64>) -> f64 {
        match v {
            Some(b) => self.code.correlation(self.code.node_estimate(b)),
            None if self.known_padding => 0.0,
            None => self.code.correlation(0.0),
        }
    }

    pub fn step(&self, s: &StaggerDeState, eps1: f64, eps2: f64) -> StaggerDeState {
        let l = self.blocks;
        let beta = self.beta;
        let mut next = StaggerDeState { a: vec![0.0; l], b: vec![0.0; l] };
        for i in 0..l {
            let b_prev = if i == 0 { None } else { Some(s.b[i - 1]) };
            let a_next = if i + 1 < l { Some(s.a[i + 1]) } else { None };
            let corr_a = beta * self.f_nu(b_prev) + (1.0 - beta) * self.f_nu(Some(s.b[i]));
            let corr_b = (1.0 - beta) * self.f_nu(Some(s.a[i])) + beta * self.f_nu(a_next);
            next.a[i] = (self.code.prior(corr_a, eps1) * self.code.edge_extrinsic(s.a[i])).clamp(0.0, 1.0);
            next.b[i] = (self.code.prior(corr_b, eps2) * self.code.edge_extrinsic(s.b[i])).clamp(0.0, 1.0);
        }
        next
    }

    /// Iterates from all-erased until every block is below the target,
    /// the state stalls, or `max_iter` runs out.
    pub fn run(&self, eps1: f64, eps2: f64, opts: &DeOptions) -> StaggerDeReport {
        let mut state = StaggerDeState::erased(self.blocks);
        for iter in 1..=opts.max_iter {
            let next = self.step(&state, eps1, eps2);
            let moved = state.a.iter().chain(&state.b).zip(next.a.iter().chain(&next.b)).fold(0.0f64, |m, (u, v)| m.max((u - v).abs()));
            state = next;
            if state.residual() <= opts.target_residual {
                return StaggerDeReport { state, iters: iter, converged: true };
            }
            if moved < opts.stall_tol {
                return StaggerDeReport { state, iters: iter, converged: false };
            }
        }
        StaggerDeReport { state, iters: opts.max_iter, converged: false }
    }

    /// State after exactly `iters` steps from all-erased.
    pub fn iterate(&self, eps1: f64, eps2: f64, iters: usize) -> StaggerDeState {
        let mut state = StaggerDeState::erased(self.blocks);
        for _ in 0..iters {
            state = self.step(&state, eps1, eps2);
        }
        state
    }

    /// Per-block source-bit erasure probabilities for the given state.
    pub fn bit_erasure(&self, s: &StaggerDeState) -> (Vec<f64>, Vec<f64>) {
        let l = self.blocks;
        let beta = self.beta;
        let mut u1 = vec![0.0; l];
        let mut u2 = vec![0.0; l];
        for i in 0..l {
            let b_prev = if i == 0 { None } else { Some(s.b[i - 1]) };
            let a_next = if i + 1 < l { Some(s.a[i + 1]) } else { None };
            u1[i] = (beta * self.f_nu(b_prev) + (1.0 - beta) * self.f_nu(Some(s.b[i]))) * self.code.node_estimate(s.a[i]);
            u2[i] = ((1.0 - beta) * self.f_nu(Some(s.a[i])) + beta * self.f_nu(a_next)) * self.code.node_estimate(s.b[i]);
        }
        (u1, u2)
    }
}

impl StaggeredDe {
    /// Source-bit erasure averaged over each source's information bits.
    /// With known padding the padded positions are excluded; otherwise every
    /// block counts fully.
    pub fn mean_bit_erasure(&self, s: &StaggerDeState) -> (f64, f64) {
        let (u1, u2) = self.bit_erasure(s);
        let bits = if self.known_padding { self.blocks as f64 - self.beta } else { self.blocks as f64 };
        (u1.iter().sum::<f64>() / bits, u2.iter().sum::<f64>() / bits)
    }
}

/// Convenience wrapper: run the staggered chain and return per-block
/// residuals `(a, b)` with the convergence flag.
#[allow(clippy::too_many_arguments)]
pub fn staggered_de_chain(
    lambda: &DegreeDistribution,
    rho: &DegreeDistribution,
    sys_frac: f64,
    p: f64,
    beta: f64,
    blocks: usize,
    eps1: f64,
    eps2: f64,
    opts: &DeOptions,
) -> StaggerDeReport {
    StaggeredDe::new(lambda.clone(), rho.clone(), sys_frac, p, beta, blocks).run(eps1, eps2, opts)
}

/// One-block view, for comparing against the unstaggered recursion.
pub fn single_block_report(r: &StaggerDeReport) -> Option<ConvergenceReport> {
    (r.state.a.len() == 1).then(|| {
        let state = DeState::new(r.state.a[0], r.state.b[0]);
        ConvergenceReport { residual: state.residual(), iters: r.iters, converged: r.converged, state }
    })
}
