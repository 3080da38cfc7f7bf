//! Joint Tanner graph of two codes plus correlation equality nodes, and the
//! GF(2) peeling decoder that runs on it.

use std::collections::VecDeque;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConstraintRole {
    /// Transmitted LDGM output: XOR of its neighbors, seen through the channel.
    Generator,
    /// LDPC parity check: neighbors XOR to the right-hand side.
    Parity,
    /// Equality between a bit of each source, present where `z = 1`.
    Correlation,
}

/// Constraints over one code's variables, in compressed row form with local
/// variable indices.
#[derive(Debug, Clone, PartialEq)]
pub struct CodeGraph {
    pub num_variables: usize,
    pub role: ConstraintRole,
    offsets: Vec<usize>,
    nbrs: Vec<u32>,
}

impl CodeGraph {
    pub fn new(num_variables: usize, role: ConstraintRole) -> Self {
        Self { num_variables, role, offsets: vec![0], nbrs: Vec::new() }
    }

    pub fn push(&mut self, neighbors: &[u32]) {
        debug_assert!(neighbors.iter().all(|&v| (v as usize) < self.num_variables));
        self.nbrs.extend_from_slice(neighbors);
        self.offsets.push(self.nbrs.len());
    }

    pub fn num_constraints(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn neighbors(&self, c: usize) -> &[u32] {
        &self.nbrs[self.offsets[c]..self.offsets[c + 1]]
    }

    pub fn num_edges(&self) -> usize {
        self.nbrs.len()
    }

    /// Number of constraints touching each variable.
    pub fn variable_degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.num_variables];
        for &v in &self.nbrs {
            deg[v as usize] += 1;
        }
        deg
    }
}

/// Bipartite graph over the variables of both sources. Variable `i` of
/// source `s` has global id `s * n1 + i`.
#[derive(Debug, Clone)]
pub struct ConstraintGraph {
    num_variables: [usize; 2],
    roles: Vec<ConstraintRole>,
    offsets: Vec<usize>,
    nbrs: Vec<u32>,
    var_offsets: Vec<usize>,
    var_cons: Vec<u32>,
}

pub struct GraphBuilder {
    num_variables: [usize; 2],
    roles: Vec<ConstraintRole>,
    offsets: Vec<usize>,
    nbrs: Vec<u32>,
}

impl GraphBuilder {
    fn global(&self, source: usize, index: usize) -> u32 {
        assert!(index < self.num_variables[source], "variable {index} out of range for source {source}");
        (source * self.num_variables[0] + index) as u32
    }

    pub fn add(&mut self, role: ConstraintRole, neighbors: &[(usize, usize)]) -> usize {
        for &(s, i) in neighbors {
            let g = self.global(s, i);
            self.nbrs.push(g);
        }
        self.offsets.push(self.nbrs.len());
        self.roles.push(role);
        self.roles.len() - 1
    }

    /// Adds every constraint of `code` for `source`, with local variables
    /// relabelled by `map`. Returns the id of the first added constraint.
    pub fn add_code(&mut self, source: usize, code: &CodeGraph, map: impl Fn(u32) -> usize) -> usize {
        let first = self.roles.len();
        for c in 0..code.num_constraints() {
            for &v in code.neighbors(c) {
                let g = self.global(source, map(v));
                self.nbrs.push(g);
            }
            self.offsets.push(self.nbrs.len());
            self.roles.push(code.role);
        }
        first
    }

    pub fn add_correlation(&mut self, index1: usize, index2: usize) -> usize {
        self.add(ConstraintRole::Correlation, &[(0, index1), (1, index2)])
    }

    pub fn finish(self) -> ConstraintGraph {
        let n = self.num_variables[0] + self.num_variables[1];
        let mut counts = vec![0usize; n + 1];
        for &v in &self.nbrs {
            counts[v as usize + 1] += 1;
        }
        for i in 0..n {
            counts[i + 1] += counts[i];
        }
        let var_offsets = counts.clone();
        let mut fill = counts;
        let mut var_cons = vec![0u32; self.nbrs.len()];
        for c in 0..self.roles.len() {
            for &v in &self.nbrs[self.offsets[c]..self.offsets[c + 1]] {
                var_cons[fill[v as usize]] = c as u32;
                fill[v as usize] += 1;
            }
        }
        ConstraintGraph {
            num_variables: self.num_variables,
            roles: self.roles,
            offsets: self.offsets,
            nbrs: self.nbrs,
            var_offsets,
            var_cons,
        }
    }
}

impl ConstraintGraph {
    pub fn builder(n1: usize, n2: usize) -> GraphBuilder {
        assert!(n1 + n2 < u32::MAX as usize);
        GraphBuilder { num_variables: [n1, n2], roles: Vec::new(), offsets: vec![0], nbrs: Vec::new() }
    }

    pub fn num_variables(&self, source: usize) -> usize {
        self.num_variables[source]
    }

    pub fn total_variables(&self) -> usize {
        self.num_variables[0] + self.num_variables[1]
    }

    pub fn num_constraints(&self) -> usize {
        self.roles.len()
    }

    pub fn role(&self, c: usize) -> ConstraintRole {
        self.roles[c]
    }

    pub fn neighbors(&self, c: usize) -> &[u32] {
        &self.nbrs[self.offsets[c]..self.offsets[c + 1]]
    }

    pub fn var_id(&self, source: usize, index: usize) -> usize {
        source * self.num_variables[0] + index
    }

    fn constraints_of(&self, v: usize) -> &[u32] {
        &self.var_cons[self.var_offsets[v]..self.var_offsets[v + 1]]
    }

    /// Right-hand side of every constraint for the given variable values.
    pub fn syndrome(&self, values: &[u8]) -> Vec<u8> {
        (0..self.num_constraints()).map(|c| self.neighbors(c).iter().fold(0u8, |a, &v| a ^ values[v as usize])).collect()
    }
}

/// What the decoder sees: constraint right-hand sides, which constraints are
/// available (received outputs, present correlation nodes), and variables
/// whose values are known up front.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub rhs: Vec<u8>,
    pub active: Vec<bool>,
    pub known: Vec<Option<u8>>,
}

impl Observation {
    /// Observation consistent with `truth`: right-hand sides are its
    /// syndrome and known variables take their true values.
    pub fn from_truth(graph: &ConstraintGraph, truth: &[u8], active: Vec<bool>, known_mask: &[bool]) -> Self {
        let known = truth.iter().zip(known_mask).map(|(&t, &k)| k.then_some(t)).collect();
        Self { rhs: graph.syndrome(truth), active, known }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PeelOutcome {
    pub resolved: Vec<bool>,
    pub values: Vec<u8>,
}

impl PeelOutcome {
    pub fn unresolved_in(&self, graph: &ConstraintGraph, source: usize, range: std::ops::Range<usize>) -> usize {
        range.filter(|&i| !self.resolved[graph.var_id(source, i)]).count()
    }
}

struct Peeler<'a> {
    graph: &'a ConstraintGraph,
    active: &'a [bool],
    remaining: Vec<u32>,
    acc: Vec<u8>,
    out: PeelOutcome,
}

impl<'a> Peeler<'a> {
    fn new(graph: &'a ConstraintGraph, obs: &'a Observation) -> Result<Self> {
        let nc = graph.num_constraints();
        let nv = graph.total_variables();
        if obs.rhs.len() != nc || obs.active.len() != nc || obs.known.len() != nv {
            return Err(Error::Contract("observation does not match the graph".into()));
        }
        let remaining = (0..nc).map(|c| graph.neighbors(c).len() as u32).collect();
        let mut p = Self {
            graph,
            active: &obs.active,
            remaining,
            acc: obs.rhs.clone(),
            out: PeelOutcome { resolved: vec![false; nv], values: vec![0; nv] },
        };
        for (v, k) in obs.known.iter().enumerate() {
            if let Some(bit) = *k {
                p.resolve(v, bit, &mut |_| {})?;
            }
        }
        Ok(p)
    }

    fn ready(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.graph.num_constraints()).filter(|&c| self.active[c] && self.remaining[c] == 1)
    }

    fn resolve(&mut self, v: usize, bit: u8, on_ready: &mut impl FnMut(usize)) -> Result<()> {
        self.out.resolved[v] = true;
        self.out.values[v] = bit;
        for &c in self.graph.constraints_of(v) {
            let c = c as usize;
            self.remaining[c] -= 1;
            self.acc[c] ^= bit;
            if !self.active[c] {
                continue;
            }
            match self.remaining[c] {
                1 => on_ready(c),
                0 if self.acc[c] != 0 => return Err(Error::InconsistentPeel { constraint: c }),
                _ => {}
            }
        }
        Ok(())
    }

    /// Resolves the last unknown neighbor of `c`, if it still has exactly one.
    fn fire(&mut self, c: usize, on_ready: &mut impl FnMut(usize)) -> Result<()> {
        if self.remaining[c] != 1 {
            return Ok(());
        }
        let v = self.graph.neighbors(c).iter().map(|&v| v as usize).find(|&v| !self.out.resolved[v]).expect("one unresolved neighbor");
        let bit = self.acc[c];
        self.resolve(v, bit, on_ready)
    }
}

/// Peeling decoder: any available constraint with exactly one unresolved
/// neighbor determines it, until nothing changes. A correlation node is an
/// ordinary two-variable constraint with right-hand side 0.
pub fn peel(graph: &ConstraintGraph, obs: &Observation) -> Result<PeelOutcome> {
    let mut p = Peeler::new(graph, obs)?;
    let mut queue: VecDeque<usize> = p.ready().collect();
    while let Some(c) = queue.pop_front() {
        p.fire(c, &mut |r| queue.push_back(r))?;
    }
    Ok(p.out)
}

/// Same decoder with the worklist drained in random order.
pub fn peel_with_schedule<R: Rng + ?Sized>(graph: &ConstraintGraph, obs: &Observation, rng: &mut R) -> Result<PeelOutcome> {
    let mut p = Peeler::new(graph, obs)?;
    let mut pending: Vec<usize> = p.ready().collect();
    while !pending.is_empty() {
        let i = rng.random_range(0..pending.len());
        let c = pending.swap_remove(i);
        p.fire(c, &mut |r| pending.push(r))?;
    }
    Ok(p.out)
}
