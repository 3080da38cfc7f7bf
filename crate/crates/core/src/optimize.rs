//! Differential-evolution search over check-degree profiles.
//!
//! The search variable is the edge-perspective check profile
//! `rho_1, ..., rho_D`. The variable profile is derived from it by a
//! [`LambdaPolicy`], and the candidate is scored by density evolution.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::de::{acpr_sweep, symmetric_threshold, uniform_grid, DeOptions, LdgmSystem, LdpcSystem};
use crate::degree::{poisson_lambda, DegreeDistribution, EnsembleSpec, Perspective, POISSON_TAIL_TOL};
use crate::numeric::bisect_last_true;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Objective {
    SymThreshold,
    /// Area under the ACPR curve sampled at `grid` points of `[0, 1]`.
    AcprArea { grid: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LambdaPolicy {
    /// LDGM: Poisson variable degrees with the mean chosen so the design
    /// rate equals `rate`.
    PoissonRate { rate: f64 },
    /// Punctured LDPC with a fixed variable profile. With `r_prime` set,
    /// candidates are moved onto the unpunctured-rate constraint.
    Fixed { lambda: DegreeDistribution, r_prime: Option<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptProblem {
    pub objective: Objective,
    pub p: f64,
    pub policy: LambdaPolicy,
    pub max_degree: usize,
    pub de_options: DeOptions,
    pub bisect_tol: f64,
}

impl OptProblem {
    pub fn validate(&self) -> Result<()> {
        if self.max_degree < 2 {
            return Err(Error::Domain("maximum check degree must be at least 2".into()));
        }
        if !(0.0..=1.0).contains(&self.p) {
            return Err(Error::Domain(format!("p must lie in [0,1], got {}", self.p)));
        }
        if let Objective::AcprArea { grid } = self.objective {
            if grid < 2 {
                return Err(Error::Domain("ACPR grid needs at least two points".into()));
            }
        }
        match &self.policy {
            LambdaPolicy::PoissonRate { rate } if !(*rate > 0.0) => Err(Error::Domain("rate must be positive".into())),
            LambdaPolicy::Fixed { lambda, .. } if lambda.perspective() != Perspective::Edge => {
                Err(Error::Domain("fixed lambda must be edge perspective".into()))
            }
            LambdaPolicy::Fixed { r_prime: Some(r), .. } if !(*r > 0.0 && *r < 1.0) => {
                Err(Error::Domain("unpunctured rate must lie in (0,1)".into()))
            }
            _ => Ok(()),
        }
    }
}

/// A check profile with the variable profile it implies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    /// `rho_1, ..., rho_D`, on the simplex.
    pub coefficients: Vec<f64>,
    pub ensemble: EnsembleSpec,
    /// Systematic fraction for LDPC candidates; `None` for LDGM.
    pub sys_frac: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub score: f64,
    /// Why a candidate scored 0 without a DE verdict, if it did.
    pub flag: Option<String>,
}

/// Clip negatives to zero and rescale to sum 1; an all-zero vector becomes
/// uniform.
pub fn repair_simplex(raw: &[f64]) -> Vec<f64> {
    let clipped: Vec<f64> = raw.iter().map(|&v| if v > 0.0 { v } else { 0.0 }).collect();
    let total: f64 = clipped.iter().sum();
    if !(total > 0.0) || !total.is_finite() {
        return vec![1.0 / raw.len() as f64; raw.len()];
    }
    clipped.iter().map(|v| v / total).collect()
}

/// `int rho` of an edge profile given as `rho_1..rho_D`.
fn rho_integral(c: &[f64]) -> f64 {
    c.iter().enumerate().map(|(j, a)| a / (j + 1) as f64).sum()
}

/// Mixes `c` with the degree-1 or degree-`D` vertex so that `int rho`
/// equals `target`. Returns `None` when no mixture can.
fn project_rate(c: &[f64], target: f64) -> Option<Vec<f64>> {
    let d = c.len();
    let lo = 1.0 / d as f64;
    if !(lo - 1e-12..=1.0 + 1e-12).contains(&target) {
        return None;
    }
    let cur = rho_integral(c);
    let (vertex, vint) = if cur > target { (d - 1, lo) } else { (0, 1.0) };
    if (cur - vint).abs() < 1e-15 {
        return Some(c.to_vec());
    }
    let t = ((cur - target) / (cur - vint)).clamp(0.0, 1.0);
    let mut out: Vec<f64> = c.iter().map(|a| (1.0 - t) * a).collect();
    out[vertex] += t;
    Some(out)
}

/// Poisson mean `m` with `(1 - e^{-m}) / m = target`, for `0 < target < 1`.
pub fn poisson_mean_for(target: f64) -> Option<f64> {
    if !(target > 0.0 && target < 1.0) {
        return None;
    }
    let g = |m: f64| (1.0 - (-m).exp()) / m;
    let mut hi = 1.0;
    while g(hi) > target {
        hi *= 2.0;
    }
    Some(bisect_last_true(0.0, hi, 1e-13, |m| m == 0.0 || g(m) >= target))
}

/// Builds the candidate for a raw search vector, or explains why the
/// profile is infeasible under the policy.
pub fn make_candidate(prob: &OptProblem, raw: &[f64]) -> std::result::Result<Candidate, String> {
    let mut coefficients = repair_simplex(raw);
    let p = prob.p;
    match &prob.policy {
        LambdaPolicy::PoissonRate { rate } => {
            let target = rate * rho_integral(&coefficients);
            let m = poisson_mean_for(target).ok_or_else(|| format!("no Poisson mean gives rate {rate} (R int rho = {target})"))?;
            let lambda = poisson_lambda(m, POISSON_TAIL_TOL).map_err(|e| e.to_string())?;
            let rho = DegreeDistribution::new(coefficients.clone(), Perspective::Edge).map_err(|e| e.to_string())?;
            let ensemble = EnsembleSpec { lambda, rho, p, eps_design: 0.0, mu: None, n_trunc: None, m: Some(m) };
            Ok(Candidate { coefficients, ensemble, sys_frac: None })
        }
        LambdaPolicy::Fixed { lambda, r_prime } => {
            if let Some(r) = r_prime {
                coefficients = project_rate(&coefficients, (1.0 - r) * lambda.integral())
                    .ok_or_else(|| format!("no degree-{} check profile reaches R' = {r}", coefficients.len()))?;
            }
            let rho = DegreeDistribution::new(coefficients.clone(), Perspective::Edge).map_err(|e| e.to_string())?;
            let rp = 1.0 - rho.integral() / lambda.integral();
            if !(rp > 0.0 && rp < 1.0) {
                return Err(format!("unpunctured rate {rp} outside (0,1)"));
            }
            let ensemble = EnsembleSpec { lambda: lambda.clone(), rho, p, eps_design: 0.0, mu: None, n_trunc: None, m: None };
            Ok(Candidate { coefficients, ensemble, sys_frac: Some(rp) })
        }
    }
}

fn score_with(prob: &OptProblem, system: &impl crate::de::JointDe) -> Result<f64> {
    match prob.objective {
        Objective::SymThreshold => symmetric_threshold(system, &prob.de_options, prob.bisect_tol),
        Objective::AcprArea { grid } => Ok(acpr_sweep(system, &uniform_grid(grid), &prob.de_options, prob.bisect_tol)?.area()),
    }
}

/// Scores a candidate. Non-monotone DE behaviour scores 0 with a flag.
pub fn evaluate(cand: &Candidate, prob: &OptProblem) -> Evaluation {
    let res = match cand.sys_frac {
        None => score_with(prob, &LdgmSystem::new(&cand.ensemble, prob.p)),
        Some(sf) => score_with(prob, &LdpcSystem::new(cand.ensemble.lambda.clone(), cand.ensemble.rho.clone(), sf, prob.p)),
    };
    match res {
        Ok(score) => Evaluation { score, flag: None },
        Err(e) => Evaluation { score: 0.0, flag: Some(e.to_string()) },
    }
}

fn evaluate_raw(prob: &OptProblem, raw: &[f64]) -> Evaluation {
    match make_candidate(prob, raw) {
        Ok(c) => evaluate(&c, prob),
        Err(why) => Evaluation { score: 0.0, flag: Some(why) },
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeParams {
    pub pop: usize,
    pub f: f64,
    pub cr: f64,
    pub generations: usize,
    pub seed: u64,
}

impl DeParams {
    /// Population `10 D`, `F = 0.5`, `CR = 0.9`, 200 generations.
    pub fn defaults_for(dim: usize, seed: u64) -> Self {
        Self { pop: 10 * dim, f: 0.5, cr: 0.9, generations: 200, seed }
    }

    pub fn validate(&self) -> Result<()> {
        if self.pop < 4 {
            return Err(Error::Domain("population must be at least 4".into()));
        }
        if !(self.f > 0.0 && self.f <= 1.0) {
            return Err(Error::Domain("F must lie in (0,1]".into()));
        }
        if !(0.0..=1.0).contains(&self.cr) {
            return Err(Error::Domain("CR must lie in [0,1]".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchResult {
    pub best: Vec<f64>,
    pub best_score: f64,
    /// Best population score after initialisation and after each generation.
    pub history: Vec<f64>,
}

fn cache_key(v: &[f64]) -> Vec<i64> {
    v.iter().map(|x| (x * 1e9).round() as i64).collect()
}

/// Scores every vector, reusing cached results for vectors that agree on a
/// 1e-9 grid. Uncached vectors are scored in parallel.
fn score_all<F>(cache: &mut HashMap<Vec<i64>, f64>, vs: &[Vec<f64>], objective: &F) -> Vec<f64>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let keys: Vec<Vec<i64>> = vs.iter().map(|v| cache_key(v)).collect();
    let mut todo: Vec<usize> = Vec::new();
    for (i, k) in keys.iter().enumerate() {
        if !cache.contains_key(k) && !todo.iter().any(|&j| keys[j] == *k) {
            todo.push(i);
        }
    }
    let fresh: Vec<f64> = todo.par_iter().map(|&i| objective(&vs[i])).collect();
    for (&i, s) in todo.iter().zip(fresh) {
        cache.insert(keys[i].clone(), s);
    }
    keys.iter().map(|k| cache[k]).collect()
}

/// rand/1/bin differential evolution, maximising `objective` over vectors
/// of length `dim` kept feasible by `repair`. Trial vectors are generated
/// serially from one seeded stream, scored in parallel, and selected
/// greedily (ties go to the trial), so results depend only on the seed.
pub fn differential_evolution<F>(dim: usize, params: &DeParams, repair: impl Fn(&[f64]) -> Vec<f64>, objective: F) -> Result<SearchResult>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    params.validate()?;
    if dim == 0 {
        return Err(Error::Domain("search dimension must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut cache = HashMap::new();
    let mut pop: Vec<Vec<f64>> = (0..params.pop).map(|_| repair(&(0..dim).map(|_| rng.random::<f64>()).collect::<Vec<_>>())).collect();
    let mut scores = score_all(&mut cache, &pop, &objective);
    let best_of = |scores: &[f64]| {
        scores.iter().enumerate().fold(0, |b, (i, &s)| if s > scores[b] { i } else { b })
    };
    let mut history = vec![scores[best_of(&scores)]];
    for _ in 0..params.generations {
        let trials: Vec<Vec<f64>> = (0..params.pop)
            .map(|i| {
                let pick = |rng: &mut ChaCha8Rng, taken: &[usize]| loop {
                    let r = rng.random_range(0..params.pop);
                    if r != i && !taken.contains(&r) {
                        return r;
                    }
                };
                let a = pick(&mut rng, &[]);
                let b = pick(&mut rng, &[a]);
                let c = pick(&mut rng, &[a, b]);
                let forced = rng.random_range(0..dim);
                let trial: Vec<f64> = (0..dim)
                    .map(|j| {
                        if j == forced || rng.random::<f64>() < params.cr {
                            pop[a][j] + params.f * (pop[b][j] - pop[c][j])
                        } else {
                            pop[i][j]
                        }
                    })
                    .collect();
                repair(&trial)
            })
            .collect();
        let trial_scores = score_all(&mut cache, &trials, &objective);
        for (i, (t, s)) in trials.into_iter().zip(trial_scores).enumerate() {
            if s >= scores[i] {
                pop[i] = t;
                scores[i] = s;
            }
        }
        history.push(scores[best_of(&scores)]);
    }
    let b = best_of(&scores);
    Ok(SearchResult { best: pop[b].clone(), best_score: scores[b], history })
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptResult {
    pub best: Candidate,
    pub best_score: f64,
    pub history: Vec<f64>,
}

/// Searches the check profile of `prob` with differential evolution.
pub fn diff_evolution(prob: &OptProblem, params: &DeParams) -> Result<OptResult> {
    prob.validate()?;
    let repair = |raw: &[f64]| match make_candidate(prob, raw) {
        Ok(c) => c.coefficients,
        Err(_) => repair_simplex(raw),
    };
    let res = differential_evolution(prob.max_degree, params, repair, |v| evaluate_raw(prob, v).score)?;
    let best = make_candidate(prob, &res.best).map_err(Error::Contract)?;
    Ok(OptResult { best, best_score: res.best_score, history: res.history })
}

/// Every point of the simplex in dimension `dim` whose coordinates are
/// multiples of `1/steps`.
pub fn simplex_grid(dim: usize, steps: usize) -> Vec<Vec<f64>> {
    fn rec(dim: usize, left: usize, steps: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<f64>>) {
        if cur.len() + 1 == dim {
            cur.push(left);
            out.push(cur.iter().map(|&c| c as f64 / steps as f64).collect());
            cur.pop();
            return;
        }
        for c in 0..=left {
            cur.push(c);
            rec(dim, left - c, steps, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(dim, steps, steps, &mut Vec::new(), &mut out);
    out
}
