//! Degree distributions and the capacity-achieving LDGM ensemble.
//!
//! A [`DegreeDistribution`] stores polynomial coefficients: index `j` holds
//! the coefficient of `x^j`. In the node perspective that is the fraction of
//! nodes of degree `j`. In the edge perspective it is the fraction of edges
//! attached to nodes of degree `j + 1`, so `lambda(x) = sum_i lambda_i x^(i-1)`
//! is stored exactly as written.

use serde::{Deserialize, Serialize};

use crate::numeric::{compensated_sum, log_sum_exp, CompensatedSum};
use crate::{Error, Result};

/// Tolerance on the total mass of a distribution.
pub const MASS_TOL: f64 = 1e-12;

/// Tail mass discarded when a Poisson profile is truncated.
pub const POISSON_TAIL_TOL: f64 = 1e-12;

/// Series coefficients up to this index are summed directly; above it the
/// binomial terms are accumulated in log space.
const LINEAR_SERIES_LIMIT: usize = 30;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Perspective {
    Edge,
    Node,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawDistribution")]
pub struct DegreeDistribution {
    coefficients: Vec<f64>,
    perspective: Perspective,
}

#[derive(Deserialize)]
struct RawDistribution {
    coefficients: Vec<f64>,
    perspective: Perspective,
}

impl TryFrom<RawDistribution> for DegreeDistribution {
    type Error = Error;

    fn try_from(raw: RawDistribution) -> Result<Self> {
        Self::new(raw.coefficients, raw.perspective)
    }
}

impl DegreeDistribution {
    /// Validates nonnegativity and unit mass. Trailing zero coefficients are
    /// dropped.
    pub fn new(coefficients: Vec<f64>, perspective: Perspective) -> Result<Self> {
        if coefficients.is_empty() {
            return Err(Error::Domain("empty degree distribution".into()));
        }
        if let Some(bad) = coefficients.iter().find(|c| !c.is_finite() || **c < 0.0) {
            return Err(Error::Domain(format!("invalid coefficient {bad}")));
        }
        let mass = compensated_sum(coefficients.iter().copied());
        if (mass - 1.0).abs() > MASS_TOL {
            return Err(Error::Domain(format!("coefficients sum to {mass}, not 1")));
        }
        Ok(Self::trimmed(coefficients, perspective))
    }

    /// Scales nonnegative weights to unit mass.
    pub fn from_weights(weights: Vec<f64>, perspective: Perspective) -> Result<Self> {
        if let Some(bad) = weights.iter().find(|c| !c.is_finite() || **c < 0.0) {
            return Err(Error::Domain(format!("invalid weight {bad}")));
        }
        let total = compensated_sum(weights.iter().copied());
        if total <= 0.0 {
            return Err(Error::Domain("weights have no mass".into()));
        }
        let coefficients = weights.into_iter().map(|w| w / total).collect();
        Ok(Self::trimmed(coefficients, perspective))
    }

    fn trimmed(mut coefficients: Vec<f64>, perspective: Perspective) -> Self {
        while coefficients.len() > 1 && coefficients.last() == Some(&0.0) {
            coefficients.pop();
        }
        Self { coefficients, perspective }
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn perspective(&self) -> Perspective {
        self.perspective
    }

    /// Highest power of `x` with a stored coefficient.
    pub fn max_power(&self) -> usize {
        self.coefficients.len() - 1
    }

    /// Node degree represented by the coefficient at `index`.
    pub fn degree_at(&self, index: usize) -> usize {
        match self.perspective {
            Perspective::Edge => index + 1,
            Perspective::Node => index,
        }
    }

    /// Horner evaluation.
    pub fn eval(&self, x: f64) -> f64 {
        self.coefficients.iter().rev().fold(0.0, |acc, c| acc * x + c)
    }

    /// `integral_0^1 f(x) dx = sum_j a_j / (j + 1)`.
    pub fn integral(&self) -> f64 {
        compensated_sum(self.coefficients.iter().enumerate().map(|(j, a)| a / (j + 1) as f64))
    }

    /// `f'(1) = sum_j j a_j`.
    pub fn derivative_at_one(&self) -> f64 {
        compensated_sum(self.coefficients.iter().enumerate().map(|(j, a)| j as f64 * a))
    }

    /// Average node degree.
    pub fn mean_degree(&self) -> f64 {
        match self.perspective {
            Perspective::Node => self.derivative_at_one(),
            Perspective::Edge => 1.0 / self.integral(),
        }
    }

    /// Edge to node: `L_i = (lambda_i / i) / sum_j (lambda_j / j)`. A node
    /// distribution is returned unchanged. Degree-0 nodes carry no edges, so
    /// the result never has mass at degree 0.
    pub fn to_node(&self) -> DegreeDistribution {
        match self.perspective {
            Perspective::Node => self.clone(),
            Perspective::Edge => {
                let mut weights = vec![0.0; self.coefficients.len() + 1];
                for (j, a) in self.coefficients.iter().enumerate() {
                    weights[j + 1] = a / (j + 1) as f64;
                }
                Self::from_weights(weights, Perspective::Node).expect("edge distribution has mass")
            }
        }
    }

    /// Node to edge: `lambda_i = i L_i / L'(1)`. Fails when every node has
    /// degree 0.
    pub fn to_edge(&self) -> Result<DegreeDistribution> {
        match self.perspective {
            Perspective::Edge => Ok(self.clone()),
            Perspective::Node => {
                if self.coefficients.len() < 2 {
                    return Err(Error::Domain("all nodes have degree 0".into()));
                }
                let weights = self.coefficients[1..]
                    .iter()
                    .enumerate()
                    .map(|(j, a)| (j + 1) as f64 * a)
                    .collect();
                Self::from_weights(weights, Perspective::Edge)
            }
        }
    }
}

/// Truncated Poisson profile `e^{m(x-1)}`, cut at the first degree where
/// the remaining tail mass drops below `tail_tol`, then renormalised.
///
/// For Poisson variable degrees the edge and node perspectives coincide, so
/// the returned distribution (tagged as edge perspective) is also `L(x)`.
pub fn poisson_lambda(m: f64, tail_tol: f64) -> Result<DegreeDistribution> {
    if !(m > 0.0 && m.is_finite()) {
        return Err(Error::Domain(format!("Poisson mean must be positive, got {m}")));
    }
    if !(tail_tol > 0.0 && tail_tol < 1.0) {
        return Err(Error::Domain(format!("tail tolerance must lie in (0,1), got {tail_tol}")));
    }
    let mut pmf = Vec::new();
    let mut cumulative = CompensatedSum::new();
    let mut log_term = -m;
    for j in 0.. {
        let term = log_term.exp();
        pmf.push(term);
        cumulative.add(term);
        // The tail is only small once we are past the mode.
        if j as f64 >= m.floor() && 1.0 - cumulative.value() < tail_tol {
            break;
        }
        log_term += (m / (j + 1) as f64).ln();
    }
    DegreeDistribution::from_weights(pmf, Perspective::Edge)
}

/// `c_i = [sum_{k<i} C(2i-1,k) p^k] / [i (1+p)^{2i-1}]` for `i = 1..=n`,
/// returned with `c_1` at index 0.
///
/// The inner ratio is `P(Bin(2i-1, p/(1+p)) <= i-1)`, which stays in `[0,1]`
/// for any `i`.
pub fn rho_series_coefficients(p: f64, n: usize) -> Vec<f64> {
    debug_assert!((0.0..=1.0).contains(&p));
    (1..=n).map(|i| series_coefficient(p, i)).collect()
}

fn series_coefficient(p: f64, i: usize) -> f64 {
    if p == 0.0 {
        return 1.0 / i as f64;
    }
    let trials = 2 * i - 1;
    let cdf = if i <= LINEAR_SERIES_LIMIT {
        let mut term = (1.0 + p).powi(-(trials as i32));
        let mut acc = CompensatedSum::new();
        for k in 0..i {
            acc.add(term);
            term *= (trials - k) as f64 / (k + 1) as f64 * p;
        }
        acc.value()
    } else {
        let ln_p = p.ln();
        let mut log_term = CompensatedSum::new();
        log_term.add(-(trials as f64) * p.ln_1p());
        let mut logs = Vec::with_capacity(i);
        for k in 0..i {
            logs.push(log_term.value());
            log_term.add(((trials - k) as f64).ln());
            log_term.add(-((k + 1) as f64).ln());
            log_term.add(ln_p);
        }
        log_sum_exp(&logs).exp()
    };
    cdf.min(1.0) / i as f64
}

/// `G_N(p) = sum_{i=1}^{N} c_i`.
pub fn g_n(p: f64, n_trunc: usize) -> f64 {
    compensated_sum(rho_series_coefficients(p, n_trunc))
}

/// Closed form of the untruncated check profile,
/// `-(1/scale) log[(sqrt((1-p)^2 + 4p(1-x)) - (1-p)) / (2p)]`, with
/// `scale = m (1 - eps)`.
///
/// The logarithm's argument is evaluated in rationalised form
/// `2(1-x) / (sqrt((1-p)^2 + 4p(1-x)) + (1-p))`, which reduces to `1 - x` at
/// `p = 0` and avoids cancellation for small `p`.
pub fn rho_analytic(p: f64, x: f64, scale: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Domain(format!("p must lie in [0,1], got {p}")));
    }
    if !(0.0..1.0).contains(&x) {
        return Err(Error::Domain(format!(
            "x must lie in [0,1); the untruncated profile has infinite mean, got {x}"
        )));
    }
    if !(scale > 0.0) {
        return Err(Error::Domain(format!("scale must be positive, got {scale}")));
    }
    let u = 1.0 - x;
    let root = ((1.0 - p) * (1.0 - p) + 4.0 * p * u).sqrt();
    let y = 2.0 * u / (root + (1.0 - p));
    Ok(-y.ln() / scale)
}

/// Truncated check profile
/// `rho^N(x) = [mu + sum_{i=1}^N c_i x^i + x^N] / [mu + G_N(p) + 1]`.
///
/// The constant term is the edge fraction on degree-one generator nodes.
pub fn rho_truncated(p: f64, n_trunc: usize, mu: f64) -> DegreeDistribution {
    assert!(n_trunc >= 1, "truncation order must be at least 1");
    assert!(mu >= 0.0, "mu must be nonnegative");
    let series = rho_series_coefficients(p, n_trunc);
    let mut numerator = Vec::with_capacity(n_trunc + 1);
    numerator.push(mu);
    numerator.extend_from_slice(&series);
    numerator[n_trunc] += 1.0;
    let normaliser = mu + compensated_sum(series.iter().copied()) + 1.0;
    let coefficients = numerator.into_iter().map(|a| a / normaliser).collect();
    DegreeDistribution::trimmed(coefficients, Perspective::Edge)
}

/// A degree-distribution pair together with the metadata that identifies
/// how it was built.
///
/// `mu`, `n_trunc` and `m` are set for ensembles from
/// [`build_capacity_ensemble`]. `m` is the Poisson mean of the variable
/// degrees and is present for every LDGM ensemble; LDPC ensembles leave it
/// unset.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleSpec {
    pub lambda: DegreeDistribution,
    pub rho: DegreeDistribution,
    pub p: f64,
    pub eps_design: f64,
    pub mu: Option<f64>,
    pub n_trunc: Option<usize>,
    pub m: Option<f64>,
}

#[derive(Serialize, Deserialize)]
struct EnsembleFile {
    lambda: Vec<f64>,
    rho: Vec<f64>,
    p: f64,
    eps: f64,
    mu: Option<f64>,
    #[serde(rename = "N")]
    n_trunc: Option<usize>,
    m: Option<f64>,
}

impl EnsembleSpec {
    /// Variable-node profile `L(x)`: identical to `lambda` for Poisson
    /// (LDGM) ensembles, otherwise converted from the edge perspective.
    pub fn variable_node(&self) -> DegreeDistribution {
        if self.m.is_some() {
            DegreeDistribution { coefficients: self.lambda.coefficients.clone(), perspective: Perspective::Node }
        } else {
            self.lambda.to_node()
        }
    }

    /// True when `lambda` matches a Poisson(`m`) profile up to truncation.
    pub fn is_poisson(&self) -> bool {
        let Some(m) = self.m else { return false };
        let Ok(reference) = poisson_lambda(m, POISSON_TAIL_TOL) else { return false };
        let a = self.lambda.coefficients();
        let b = reference.coefficients();
        (0..a.len().max(b.len())).all(|j| {
            let x = a.get(j).copied().unwrap_or(0.0);
            let y = b.get(j).copied().unwrap_or(0.0);
            (x - y).abs() <= 1e-9
        })
    }

    /// Residual at which density evolution is declared converged: `1/N` for
    /// truncated ensembles, `1e-6` otherwise.
    pub fn default_target_residual(&self) -> f64 {
        match self.n_trunc {
            Some(n) => 1.0 / n as f64,
            None => 1e-6,
        }
    }

    fn to_file(&self) -> EnsembleFile {
        EnsembleFile {
            lambda: self.lambda.coefficients.clone(),
            rho: self.rho.coefficients.clone(),
            p: self.p,
            eps: self.eps_design,
            mu: self.mu,
            n_trunc: self.n_trunc,
            m: self.m,
        }
    }

    fn from_file(file: EnsembleFile) -> Result<Self> {
        if !(0.0..=1.0).contains(&file.p) || !(0.0..=1.0).contains(&file.eps) {
            return Err(Error::Domain("p and eps must lie in [0,1]".into()));
        }
        Ok(Self {
            lambda: DegreeDistribution::new(file.lambda, Perspective::Edge)?,
            rho: DegreeDistribution::new(file.rho, Perspective::Edge)?,
            p: file.p,
            eps_design: file.eps,
            mu: file.mu,
            n_trunc: file.n_trunc,
            m: file.m,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_file()).expect("ensemble serialises")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Self::from_file(serde_json::from_str(text)?)
    }
}

impl Serialize for EnsembleSpec {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_file().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for EnsembleSpec {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        Self::from_file(EnsembleFile::deserialize(deserializer)?).map_err(serde::de::Error::custom)
    }
}

/// The LDGM ensemble with Poisson variable degrees of mean
/// `m = (mu + G_N(p) + 1) / (1 - eps)` and check profile `rho^N`.
pub fn build_capacity_ensemble(p: f64, eps: f64, mu: f64, n_trunc: usize) -> Result<EnsembleSpec> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Domain(format!("p must lie in [0,1], got {p}")));
    }
    if !(0.0..1.0).contains(&eps) {
        return Err(Error::Domain(format!("design erasure rate must lie in [0,1), got {eps}")));
    }
    if !(mu > 0.0) {
        return Err(Error::Domain(format!("mu must be positive, got {mu}")));
    }
    if n_trunc == 0 {
        return Err(Error::Domain("truncation order N must be at least 1".into()));
    }
    let m = (mu + g_n(p, n_trunc) + 1.0) / (1.0 - eps);
    Ok(EnsembleSpec {
        lambda: poisson_lambda(m, POISSON_TAIL_TOL)?,
        rho: rho_truncated(p, n_trunc, mu),
        p,
        eps_design: eps,
        mu: Some(mu),
        n_trunc: Some(n_trunc),
        m: Some(m),
    })
}

/// `int lambda / int rho` for an edge-perspective pair.
pub fn design_rate_of(lambda: &DegreeDistribution, rho: &DegreeDistribution) -> f64 {
    lambda.integral() / rho.integral()
}

pub fn design_rate(ens: &EnsembleSpec) -> f64 {
    design_rate_of(&ens.lambda, &ens.rho)
}

/// `(1 - eps)(1 - e^{-m}) / (mu + 1 - p/2)`.
pub fn theorem_rate(p: f64, eps: f64, mu: f64, m: f64) -> f64 {
    (1.0 - eps) * (1.0 - (-m).exp()) / (mu + 1.0 - p / 2.0)
}

/// Rate `R'/(1 - R')` of an `(n, k)` code of rate `R' = k/n` once its `k`
/// systematic bits are punctured.
pub fn puncture_rate(r_prime: f64) -> Result<f64> {
    if !(r_prime > 0.0 && r_prime < 1.0) {
        return Err(Error::Domain(format!("unpunctured rate must lie in (0,1), got {r_prime}")));
    }
    Ok(r_prime / (1.0 - r_prime))
}
