//! Random graph ensembles and correlated sources.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::{index, SliceRandom};
use rand::Rng;

use super::graph::{CodeGraph, ConstraintRole};
use crate::degree::{DegreeDistribution, Perspective};
use crate::{Error, Result};

/// Source realisation: `u2 = u1` where `z = 1`, independent fair bits where
/// `z = 0`. `z` is side information for the decoder.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sources {
    pub bits1: Vec<u8>,
    pub bits2: Vec<u8>,
    pub z: Vec<bool>,
}

pub fn sample_sources<R: Rng + ?Sized>(k: usize, p: f64, rng: &mut R) -> Sources {
    let mut s = Sources { bits1: Vec::with_capacity(k), bits2: Vec::with_capacity(k), z: Vec::with_capacity(k) };
    for _ in 0..k {
        let z = rng.random_bool(p);
        let x: u8 = rng.random_range(0..2);
        let y = if z { x } else { rng.random_range(0..2) };
        s.bits1.push(x);
        s.bits2.push(y);
        s.z.push(z);
    }
    s
}

fn node_sampler(dist: &DegreeDistribution) -> Result<WeightedIndex<f64>> {
    if dist.perspective() != Perspective::Node {
        return Err(Error::Contract("degree sampling needs a node-perspective distribution".into()));
    }
    WeightedIndex::new(dist.coefficients()).map_err(|e| Error::Domain(format!("degree distribution: {e}")))
}

/// LT/LDGM graph: each of `num_checks` generator nodes draws a degree from
/// `rho_node` (capped at `k`) and attaches to that many distinct source bits
/// chosen uniformly.
pub fn sample_ldgm_graph<R: Rng + ?Sized>(k: usize, num_checks: usize, rho_node: &DegreeDistribution, rng: &mut R) -> Result<CodeGraph> {
    let mut g = CodeGraph::new(k, ConstraintRole::Generator);
    if num_checks == 0 {
        return Ok(g);
    }
    let degrees = node_sampler(rho_node)?;
    let mut nbrs = Vec::new();
    for _ in 0..num_checks {
        let d = degrees.sample(rng).min(k);
        nbrs.clear();
        nbrs.extend(index::sample(rng, k, d).into_iter().map(|v| v as u32));
        g.push(&nbrs);
    }
    Ok(g)
}

/// Splits `total` items over the node fractions `frac` by largest remainder
/// and returns one degree per node, in index order.
fn apportion(frac: &[f64], total: usize) -> Vec<usize> {
    let raw: Vec<f64> = frac.iter().map(|f| f * total as f64).collect();
    let mut counts: Vec<usize> = raw.iter().map(|r| r.floor() as usize).collect();
    let mut short = total.saturating_sub(counts.iter().sum::<usize>());
    let mut order: Vec<usize> = (0..frac.len()).collect();
    order.sort_by(|&a, &b| (raw[b] - raw[b].floor()).total_cmp(&(raw[a] - raw[a].floor())).then(a.cmp(&b)));
    for &j in order.iter().cycle() {
        if short == 0 {
            break;
        }
        if frac[j] > 0.0 {
            counts[j] += 1;
            short -= 1;
        }
    }
    counts.iter().enumerate().flat_map(|(deg, &c)| std::iter::repeat_n(deg, c)).collect()
}

/// Number of checks that matches `n` variables with edge profiles
/// `(lambda, rho)`: `n * int(rho) / int(lambda)`.
pub fn ldpc_num_checks(n: usize, lambda: &DegreeDistribution, rho: &DegreeDistribution) -> usize {
    (n as f64 * rho.integral() / lambda.integral()).round() as usize
}

/// Configuration-model LDPC graph on `n` variables. Node degree counts
/// follow the edge profiles; check degrees are nudged so the stub counts
/// agree. Repeated edges cancel in pairs and empty checks are dropped.
pub fn sample_ldpc_graph<R: Rng + ?Sized>(n: usize, lambda: &DegreeDistribution, rho: &DegreeDistribution, rng: &mut R) -> Result<CodeGraph> {
    if lambda.perspective() != Perspective::Edge || rho.perspective() != Perspective::Edge {
        return Err(Error::Contract("LDPC sampling takes edge-perspective profiles".into()));
    }
    let var_deg = apportion(lambda.to_node().coefficients(), n);
    let edges: usize = var_deg.iter().sum();
    let m = ldpc_num_checks(n, lambda, rho).max(1);
    let mut check_deg = apportion(rho.to_node().coefficients(), m);
    let mut check_edges: usize = check_deg.iter().sum();
    let mut j = 0;
    while check_edges != edges {
        let c = j % m;
        if check_edges < edges {
            check_deg[c] += 1;
            check_edges += 1;
        } else if check_deg[c] > 1 {
            check_deg[c] -= 1;
            check_edges -= 1;
        }
        j += 1;
    }
    check_deg.shuffle(rng);
    let mut stubs: Vec<u32> = Vec::with_capacity(edges);
    let mut order: Vec<u32> = (0..n as u32).collect();
    order.shuffle(rng);
    for (&v, &d) in order.iter().zip(&var_deg) {
        stubs.extend(std::iter::repeat_n(v, d));
    }
    stubs.shuffle(rng);
    let mut g = CodeGraph::new(n, ConstraintRole::Parity);
    let mut start = 0;
    let mut row = Vec::new();
    for &d in &check_deg {
        row.clear();
        row.extend_from_slice(&stubs[start..start + d]);
        start += d;
        row.sort_unstable();
        let mut kept = Vec::with_capacity(row.len());
        let mut i = 0;
        while i < row.len() {
            let mut j = i;
            while j < row.len() && row[j] == row[i] {
                j += 1;
            }
            if (j - i) % 2 == 1 {
                kept.push(row[i]);
            }
            i = j;
        }
        if !kept.is_empty() {
            g.push(&kept);
        }
    }
    Ok(g)
}
