//! Monte Carlo trials: sample codes, sources and channel erasures, peel,
//! and count unresolved source bits.
//!
//! Every trial draws from independent ChaCha8 streams of the run seed:
//! stream `8t` for the sources, `8t+1`/`8t+2` for the two users' graphs and
//! `8t+3`/`8t+4` for their channels. A user's graph and erasures therefore
//! do not depend on the other user or on the correlation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::graph::{peel, CodeGraph, ConstraintGraph, Observation};
use super::sample::{sample_ldgm_graph, sample_ldpc_graph, sample_sources};
use crate::de::{run_to_convergence, DeOptions, DeState, JointDe, LdgmSystem, LdpcSystem};
use crate::degree::EnsembleSpec;
use crate::stagger::StaggeredDe;
use crate::{Error, Result};

pub const RNG_NAME: &str = "ChaCha8Rng";

const SOURCE_STREAM: u64 = 0;
const GRAPH_STREAM: [u64; 2] = [1, 2];
const CHANNEL_STREAM: [u64; 2] = [3, 4];

/// z-score of a two-sided 95% normal interval.
const Z95: f64 = 1.959_963_984_540_054;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum CodeFamily {
    /// LT codes: generator outputs are transmitted.
    Ldgm,
    /// Systematic LDPC codes with the systematic bits punctured.
    Ldpc,
    /// `blocks` punctured LDPC blocks per source, staggered by `beta`.
    Staggered { beta: f64, blocks: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialConfig {
    pub ensemble: EnsembleSpec,
    pub family: CodeFamily,
    /// Source bits per code block.
    pub k: usize,
    pub p: f64,
    pub eps1: f64,
    pub eps2: f64,
    pub trials: usize,
    pub seed: u64,
}

impl TrialConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 || self.trials == 0 {
            return Err(Error::Domain("k and trials must be at least 1".into()));
        }
        for (name, v) in [("p", self.p), ("eps1", self.eps1), ("eps2", self.eps2)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Domain(format!("{name} must lie in [0,1], got {v}")));
            }
        }
        match self.family {
            CodeFamily::Ldgm if self.ensemble.m.is_none() => {
                Err(Error::Contract("LDGM simulation needs the Poisson mean m".into()))
            }
            CodeFamily::Staggered { beta, blocks } if !(0.0..=1.0).contains(&beta) || blocks == 0 => {
                Err(Error::Domain("staggering needs beta in [0,1] and at least one block".into()))
            }
            CodeFamily::Ldpc | CodeFamily::Staggered { .. } if self.ldpc_length().is_none() => {
                Err(Error::Domain("LDPC profile must have unpunctured rate in (0,1)".into()))
            }
            _ => Ok(()),
        }
    }

    /// Number of generator outputs per LDGM codeword, `k m int(rho)`. Every
    /// generator node counts as one transmitted symbol.
    pub fn ldgm_outputs(&self) -> usize {
        let m = self.ensemble.m.unwrap_or(0.0);
        (self.k as f64 * m * self.ensemble.rho.integral()).round() as usize
    }

    /// Length `n` of the unpunctured LDPC code, `k / R'`.
    pub fn ldpc_length(&self) -> Option<usize> {
        let r_prime = 1.0 - self.ensemble.rho.integral() / self.ensemble.lambda.integral();
        if !(r_prime > 0.0 && r_prime < 1.0) {
            return None;
        }
        Some(((self.k as f64 / r_prime).round() as usize).max(self.k + 1))
    }

    fn stagger(&self) -> (f64, usize) {
        match self.family {
            CodeFamily::Staggered { beta, blocks } => (beta, blocks),
            _ => (0.0, 1),
        }
    }

    fn padding(&self) -> usize {
        (self.stagger().0 * self.k as f64).round() as usize
    }

    /// Information bits carried by each source per trial.
    pub fn info_bits(&self) -> usize {
        match self.family {
            CodeFamily::Ldgm => self.k,
            _ => self.stagger().1 * self.k - self.padding(),
        }
    }
}

fn stream(seed: u64, trial: usize, purpose: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial as u64 * 8 + purpose);
    rng
}

/// One user's share of the joint graph.
struct UserPart {
    num_variables: usize,
    codes: Vec<(CodeGraph, Vec<usize>)>,
    active: Vec<bool>,
    known: Vec<bool>,
    /// Variable holding each information bit.
    info_slot: Vec<usize>,
    /// Values of variables that are not information bits (parity, padding).
    filler: Vec<u8>,
}

fn build_user(cfg: &TrialConfig, user: usize, trial: usize) -> Result<UserPart> {
    let mut g_rng = stream(cfg.seed, trial, GRAPH_STREAM[user]);
    let mut c_rng = stream(cfg.seed, trial, CHANNEL_STREAM[user]);
    let eps = if user == 0 { cfg.eps1 } else { cfg.eps2 };
    let k = cfg.k;
    match cfg.family {
        CodeFamily::Ldgm => {
            let code = sample_ldgm_graph(k, cfg.ldgm_outputs(), &cfg.ensemble.rho.to_node(), &mut g_rng)?;
            let active = (0..code.num_constraints()).map(|_| !c_rng.random_bool(eps)).collect();
            Ok(UserPart {
                num_variables: k,
                codes: vec![(code, (0..k).collect())],
                active,
                known: vec![false; k],
                info_slot: (0..k).collect(),
                filler: vec![0; k],
            })
        }
        CodeFamily::Ldpc | CodeFamily::Staggered { .. } => {
            let (_, blocks) = cfg.stagger();
            let n = cfg.ldpc_length().expect("validated");
            let parity = n - k;
            let sys = blocks * k;
            let total = blocks * n;
            let mut codes = Vec::with_capacity(blocks);
            let mut active = Vec::new();
            for b in 0..blocks {
                let code = sample_ldpc_graph(n, &cfg.ensemble.lambda, &cfg.ensemble.rho, &mut g_rng)?;
                let map = (0..n).map(|j| if j < k { b * k + j } else { sys + b * parity + (j - k) }).collect();
                active.extend(std::iter::repeat_n(true, code.num_constraints()));
                codes.push((code, map));
            }
            let pad = cfg.padding();
            let info = sys - pad;
            let info_slot: Vec<usize> = if user == 0 { (pad..sys).collect() } else { (0..info).collect() };
            let mut known = vec![false; total];
            let mut filler = vec![0u8; total];
            let padding = if user == 0 { 0..pad } else { info..sys };
            for s in padding {
                known[s] = true;
            }
            for s in sys..total {
                filler[s] = g_rng.random_range(0..2);
                known[s] = !c_rng.random_bool(eps);
            }
            Ok(UserPart { num_variables: total, codes, active, known, info_slot, filler })
        }
    }
}

fn assemble(parts: &[&UserPart], correlation: Option<(&[bool], usize)>, values: &[&[u8]]) -> (ConstraintGraph, Observation, Vec<u8>) {
    let n2 = parts.get(1).map_or(0, |p| p.num_variables);
    let mut b = ConstraintGraph::builder(parts[0].num_variables, n2);
    let mut active = Vec::new();
    let mut known = Vec::new();
    let mut truth = Vec::new();
    for (source, part) in parts.iter().enumerate() {
        for (code, map) in &part.codes {
            b.add_code(source, code, |v| map[v as usize]);
        }
        active.extend_from_slice(&part.active);
        known.extend_from_slice(&part.known);
        let mut t = part.filler.clone();
        for (q, &slot) in part.info_slot.iter().enumerate() {
            t[slot] = values[source][q];
        }
        truth.extend(t);
    }
    if let Some((z, info)) = correlation {
        for q in 0..info {
            b.add_correlation(parts[0].info_slot[q], parts[1].info_slot[q]);
            active.push(z[q]);
        }
    }
    let g = b.finish();
    let obs = Observation::from_truth(&g, &truth, active, &known);
    (g, obs, truth)
}

fn decode(g: &ConstraintGraph, obs: &Observation, truth: &[u8]) -> Result<Vec<bool>> {
    let out = peel(g, obs)?;
    if out.resolved.iter().zip(&out.values).zip(truth).any(|((&r, &v), &t)| r && v != t) {
        return Err(Error::Contract("peeling resolved a bit to the wrong value".into()));
    }
    Ok(out.resolved)
}

/// Which information bits of each source the joint decoder recovers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrialOutcome {
    pub resolved1: Vec<bool>,
    pub resolved2: Vec<bool>,
}

pub fn simulate_trial(cfg: &TrialConfig, trial: usize) -> Result<TrialOutcome> {
    cfg.validate()?;
    let info = cfg.info_bits();
    let src = sample_sources(info, cfg.p, &mut stream(cfg.seed, trial, SOURCE_STREAM));
    let u1 = build_user(cfg, 0, trial)?;
    let u2 = build_user(cfg, 1, trial)?;
    let (g, obs, truth) = assemble(&[&u1, &u2], Some((&src.z, info)), &[&src.bits1, &src.bits2]);
    let resolved = decode(&g, &obs, &truth)?;
    let pick = |source: usize, part: &UserPart| part.info_slot.iter().map(|&s| resolved[g.var_id(source, s)]).collect();
    Ok(TrialOutcome { resolved1: pick(0, &u1), resolved2: pick(1, &u2) })
}

/// The same trial decoded for one user alone, without correlation nodes.
pub fn simulate_single_user_trial(cfg: &TrialConfig, user: usize, trial: usize) -> Result<Vec<bool>> {
    cfg.validate()?;
    assert!(user < 2);
    let info = cfg.info_bits();
    let src = sample_sources(info, cfg.p, &mut stream(cfg.seed, trial, SOURCE_STREAM));
    let part = build_user(cfg, user, trial)?;
    let bits = if user == 0 { &src.bits1 } else { &src.bits2 };
    let (g, obs, truth) = assemble(&[&part], None, &[bits]);
    let resolved = decode(&g, &obs, &truth)?;
    Ok(part.info_slot.iter().map(|&s| resolved[s]).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub info_bits: usize,
    pub unresolved1: usize,
    pub unresolved2: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub ber1: f64,
    pub ber2: f64,
    /// 95% normal-approximation half-widths for `ber1` and `ber2`.
    pub ci: [f64; 2],
    pub per_trial: Vec<TrialRecord>,
}

fn mean_and_half_width(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, Z95 * (var / n).sqrt())
}

/// Runs `cfg.trials` independent trials in parallel and aggregates them in
/// trial order.
pub fn run_trials(cfg: &TrialConfig) -> Result<TrialResult> {
    cfg.validate()?;
    let per_trial = (0..cfg.trials)
        .into_par_iter()
        .map(|t| {
            let out = simulate_trial(cfg, t)?;
            let unresolved = |r: &[bool]| r.iter().filter(|&&x| !x).count();
            Ok(TrialRecord { trial: t, info_bits: out.resolved1.len(), unresolved1: unresolved(&out.resolved1), unresolved2: unresolved(&out.resolved2) })
        })
        .collect::<Result<Vec<_>>>()?;
    let rate = |f: fn(&TrialRecord) -> usize| per_trial.iter().map(|r| f(r) as f64 / r.info_bits as f64).collect::<Vec<_>>();
    let (ber1, ci1) = mean_and_half_width(&rate(|r| r.unresolved1));
    let (ber2, ci2) = mean_and_half_width(&rate(|r| r.unresolved2));
    Ok(TrialResult { ber1, ber2, ci: [ci1, ci2], per_trial })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeComparison {
    /// Asymptotic source-bit erasure probability at the DE fixed point.
    pub de_ber: [f64; 2],
    pub sim_ber: [f64; 2],
    pub gap: [f64; 2],
    pub ci: [f64; 2],
    /// Finite-length allowance `1/sqrt(k)` added to the tolerance.
    pub allowance: f64,
    pub flagged: bool,
}

/// Options for the asymptotic side of a comparison: iterate to the fixed
/// point rather than stopping at a design target.
fn fixed_point_options() -> DeOptions {
    DeOptions { max_iter: 20_000, target_residual: 1e-12, stall_tol: 1e-13 }
}

/// Asymptotic source-bit erasure probabilities for the configuration.
pub fn de_prediction(cfg: &TrialConfig) -> Result<[f64; 2]> {
    cfg.validate()?;
    let opts = fixed_point_options();
    let (e1, e2) = (cfg.eps1, cfg.eps2);
    let joint = |sys: &dyn JointDe| {
        let rep = run_to_convergence(|s| sys.step(s, e1, e2), DeState::ERASED, &opts);
        let (a, b) = sys.bit_erasure(rep.state, e1, e2);
        [a, b]
    };
    Ok(match cfg.family {
        CodeFamily::Ldgm => joint(&LdgmSystem::new(&cfg.ensemble, cfg.p)),
        CodeFamily::Ldpc => {
            let sys_frac = cfg.k as f64 / cfg.ldpc_length().expect("validated") as f64;
            joint(&LdpcSystem::new(cfg.ensemble.lambda.clone(), cfg.ensemble.rho.clone(), sys_frac, cfg.p))
        }
        CodeFamily::Staggered { beta, blocks } => {
            let sys_frac = cfg.k as f64 / cfg.ldpc_length().expect("validated") as f64;
            // the simulator knows padded positions outright
            let chain = StaggeredDe::new(cfg.ensemble.lambda.clone(), cfg.ensemble.rho.clone(), sys_frac, cfg.p, beta, blocks)
                .with_known_padding(true);
            let rep = chain.run(e1, e2, &opts);
            let (a, b) = chain.mean_bit_erasure(&rep.state);
            [a, b]
        }
    })
}

/// Runs both engines and flags a gap larger than five confidence
/// half-widths plus `1/sqrt(k)`.
pub fn compare_to_de(cfg: &TrialConfig) -> Result<DeComparison> {
    let de_ber = de_prediction(cfg)?;
    let sim = run_trials(cfg)?;
    let sim_ber = [sim.ber1, sim.ber2];
    let gap = [sim_ber[0] - de_ber[0], sim_ber[1] - de_ber[1]];
    let allowance = 1.0 / (cfg.k as f64).sqrt();
    let flagged = (0..2).any(|u| gap[u].abs() > 5.0 * sim.ci[u] + allowance);
    Ok(DeComparison { de_ber, sim_ber, gap, ci: sim.ci, allowance, flagged })
}
