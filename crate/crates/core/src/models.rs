//! Generative RCE models and ground-truth oracles.
//!
//! Models are described by a graphon w(ξ,η) on `[0,1]²` plus an emission law
//! (Bernoulli for binary networks, Poisson for counts). Supported graphon
//! families are the product form λ·f(ξ)·g(η) with step-function or power-law
//! marginals, and the piecewise-constant block form. Both admit closed-form
//! integrals, so each model carries a table of analytic truths (expected
//! kernel values, F₂/G₂, the product distance d) used by the simulation
//! harness; anything not in the table falls back to plain Monte Carlo.

use std::collections::BTreeMap;
use std::sync::Arc;

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;
use serde::Deserialize;

use crate::error::Error;
use crate::kernels::Kernel;
use crate::matrix::BipartiteMatrix;
use crate::rng::{substream, tag};
use crate::ustat::Axis;
use crate::Result;

/// Normalized marginal density on `[0,1]`.
#[derive(Debug, Clone)]
pub enum Marginal {
    /// f(ξ) = (α+1)·ξ^α, α ≥ 0. Integrates to 1 by construction.
    Power { alpha: f64 },
    /// Càdlàg step function: `values[i]` on `[cuts[i-1], cuts[i])`.
    Step { cuts: Vec<f64>, values: Vec<f64> },
}

impl Marginal {
    pub fn uniform() -> Marginal {
        Marginal::Power { alpha: 0.0 }
    }

    /// Power-law marginal with a prescribed second moment `target` ≥ 1:
    /// the positive root of (α+1)²/(2α+1) = target.
    pub fn power_from_second_moment(target: f64) -> Result<Marginal> {
        if !(target >= 1.0) {
            return Err(Error::Validation(format!(
                "second moment must be ≥ 1, got {target}"
            )));
        }
        let alpha = (target - 1.0) + (target * (target - 1.0)).sqrt();
        Ok(Marginal::Power { alpha })
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Marginal::Power { alpha } => {
                if !alpha.is_finite() || *alpha < 0.0 {
                    return Err(Error::Validation(format!(
                        "power-law exponent must be ≥ 0, got {alpha}"
                    )));
                }
            }
            Marginal::Step { cuts, values } => {
                if values.is_empty() || values.len() != cuts.len() + 1 {
                    return Err(Error::Validation(format!(
                        "step marginal needs len(values) = len(cuts)+1, got {} and {}",
                        values.len(),
                        cuts.len()
                    )));
                }
                if cuts.windows(2).any(|w| w[0] >= w[1])
                    || cuts.iter().any(|&c| c <= 0.0 || c >= 1.0)
                {
                    return Err(Error::Validation(
                        "step cuts must be strictly increasing inside (0,1)".into(),
                    ));
                }
                if values.iter().any(|&v| !v.is_finite() || v < 0.0) {
                    return Err(Error::Validation("step values must be ≥ 0".into()));
                }
                let integral = self.moment(1);
                if (integral - 1.0).abs() > 1e-9 {
                    return Err(Error::Validation(format!(
                        "marginal must integrate to 1, computed integral = {integral}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// ∫ f(ξ)^k dξ in closed form.
    pub fn moment(&self, k: u32) -> f64 {
        match self {
            Marginal::Power { alpha } => (alpha + 1.0).powi(k as i32) / (k as f64 * alpha + 1.0),
            Marginal::Step { cuts, values } => {
                let mut acc = 0.0;
                let mut lo = 0.0;
                for (idx, &v) in values.iter().enumerate() {
                    let hi = if idx < cuts.len() { cuts[idx] } else { 1.0 };
                    acc += v.powi(k as i32) * (hi - lo);
                    lo = hi;
                }
                acc
            }
        }
    }

    pub fn sup(&self) -> f64 {
        match self {
            Marginal::Power { alpha } => alpha + 1.0,
            Marginal::Step { values, .. } => values.iter().cloned().fold(0.0, f64::max),
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Marginal::Power { alpha } => (alpha + 1.0) * x.powf(*alpha),
            Marginal::Step { cuts, values } => {
                let idx = cuts.iter().take_while(|&&c| x >= c).count();
                values[idx]
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Emission {
    Bernoulli,
    Poisson,
}

impl Emission {
    pub fn as_str(self) -> &'static str {
        match self {
            Emission::Bernoulli => "bernoulli",
            Emission::Poisson => "poisson",
        }
    }
}

#[derive(Clone)]
pub enum Graphon {
    /// w(ξ,η) = λ·f(ξ)·g(η).
    Product {
        lambda: f64,
        f: Marginal,
        g: Marginal,
    },
    /// Piecewise-constant block graphon with group proportions alpha/beta.
    Blocks {
        alpha: Vec<f64>,
        beta: Vec<f64>,
        pi: Vec<Vec<f64>>,
    },
    /// Arbitrary function; accepted unvalidated beyond the Bernoulli grid check.
    Custom(Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>),
}

impl std::fmt::Debug for Graphon {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Graphon::Product { lambda, .. } => write!(f, "Product(lambda={lambda})"),
            Graphon::Blocks { alpha, beta, .. } => {
                write!(f, "Blocks({}×{})", alpha.len(), beta.len())
            }
            Graphon::Custom(_) => write!(f, "Custom"),
        }
    }
}

impl Graphon {
    pub fn eval(&self, xi: f64, eta: f64) -> f64 {
        match self {
            Graphon::Product { lambda, f, g } => lambda * f.eval(xi) * g.eval(eta),
            Graphon::Blocks { alpha, beta, pi } => {
                let k = group_of(alpha, xi);
                let l = group_of(beta, eta);
                pi[k][l]
            }
            Graphon::Custom(w) => w(xi, eta),
        }
    }

    pub fn sup_on_grid(&self, grid: usize) -> f64 {
        match self {
            Graphon::Product { lambda, f, g } => lambda * f.sup() * g.sup(),
            Graphon::Blocks { pi, .. } => pi
                .iter()
                .flat_map(|row| row.iter().cloned())
                .fold(0.0, f64::max),
            Graphon::Custom(w) => {
                let mut sup = 0.0f64;
                for a in 0..grid {
                    for b in 0..grid {
                        let x = (a as f64 + 0.5) / grid as f64;
                        let y = (b as f64 + 0.5) / grid as f64;
                        sup = sup.max(w(x, y));
                    }
                }
                sup
            }
        }
    }
}

/// Group index for a latent value given cumulative proportions.
fn group_of(props: &[f64], x: f64) -> usize {
    let mut cum = 0.0;
    for (k, &p) in props.iter().enumerate() {
        cum += p;
        if x <= cum {
            return k;
        }
    }
    props.len() - 1
}

/// Known truths attached to a model, keyed by kernel id and statistic id.
#[derive(Debug, Clone, Default)]
pub struct AnalyticTable {
    pub kernels: BTreeMap<String, f64>,
    pub stats: BTreeMap<String, f64>,
}

/// A generative RCE model.
#[derive(Debug, Clone)]
pub struct ModelSpec {
    pub graphon: Graphon,
    pub emission: Emission,
    pub description: String,
    pub analytic: AnalyticTable,
}

/// A sampled network together with its latent row/column positions.
#[derive(Debug, Clone)]
pub struct SampleWithLatents {
    pub matrix: BipartiteMatrix,
    pub xi: Vec<f64>,
    pub eta: Vec<f64>,
}

/// Monte Carlo (or analytic) value with its standard error.
#[derive(Debug, Clone, Copy)]
pub struct OracleEstimate {
    pub value: f64,
    pub std_error: f64,
}

fn check_bernoulli_bound(graphon: &Graphon, emission: Emission) -> Result<()> {
    if emission == Emission::Bernoulli {
        let sup = graphon.sup_on_grid(256);
        if sup > 1.0 + 1e-9 {
            return Err(Error::Validation(format!(
                "Bernoulli emission requires w ≤ 1, but sup w = {sup:.6}"
            )));
        }
    }
    Ok(())
}

/// Product-form (expected degree distribution) model λ·f(ξ)·g(η).
pub fn bedd(lambda: f64, f: Marginal, g: Marginal, emission: Emission) -> Result<ModelSpec> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::Validation(format!(
            "lambda must be positive, got {lambda}"
        )));
    }
    f.validate()?;
    g.validate()?;
    let graphon = Graphon::Product {
        lambda,
        f: f.clone(),
        g: g.clone(),
    };
    check_bernoulli_bound(&graphon, emission)?;
    let f2 = f.moment(2);
    let g2 = g.moment(2);
    let mut analytic = AnalyticTable::default();
    analytic.stats.insert("lambda".into(), lambda);
    analytic.stats.insert("F2".into(), f2);
    analytic.stats.insert("G2".into(), g2);
    analytic.stats.insert("d".into(), 0.0);
    analytic.kernels.insert("hD".into(), lambda);
    analytic.kernels.insert("hB".into(), lambda * lambda * f2);
    analytic.kernels.insert("hC".into(), lambda * lambda * g2);
    analytic.kernels.insert("h1".into(), lambda * lambda * f2);
    analytic.kernels.insert("h2".into(), lambda * lambda);
    if emission == Emission::Poisson {
        // w̄ = f·g: ∬w̄² = F₂G₂ and ∬w̄fg = F₂G₂.
        analytic
            .kernels
            .insert("hA".into(), -lambda.powi(3) * f2 * g2);
        analytic
            .kernels
            .insert("hA1".into(), lambda.powi(3) * f2 * g2);
        analytic
            .kernels
            .insert("hA2".into(), lambda.powi(3) * f2 * g2);
    }
    Ok(ModelSpec {
        graphon,
        emission,
        description: format!(
            "bedd(lambda={lambda}, F2={f2:.6}, G2={g2:.6}, {})",
            emission.as_str()
        ),
        analytic,
    })
}

fn check_probability_vector(v: &[f64], name: &str) -> Result<()> {
    if v.is_empty() {
        return Err(Error::Validation(format!("{name} is empty")));
    }
    if v.iter().any(|&x| !(x > 0.0) || !x.is_finite()) {
        return Err(Error::Validation(format!(
            "{name} must have positive entries"
        )));
    }
    let total: f64 = v.iter().sum();
    if (total - 1.0).abs() > 1e-12 {
        return Err(Error::Validation(format!(
            "{name} must sum to 1, got {total}"
        )));
    }
    Ok(())
}

/// Latent block model with the block graphon w(ξ,η) = `π[s(ξ)][t(η)]`.
pub fn lbm(
    alpha: Vec<f64>,
    beta: Vec<f64>,
    pi: Vec<Vec<f64>>,
    emission: Emission,
) -> Result<ModelSpec> {
    check_probability_vector(&alpha, "alpha")?;
    check_probability_vector(&beta, "beta")?;
    if pi.len() != alpha.len() || pi.iter().any(|row| row.len() != beta.len()) {
        return Err(Error::Validation(format!(
            "pi must be {}×{}",
            alpha.len(),
            beta.len()
        )));
    }
    if pi.iter().flatten().any(|&v| !v.is_finite() || v < 0.0) {
        return Err(Error::Validation("pi entries must be ≥ 0".into()));
    }
    let graphon = Graphon::Blocks {
        alpha: alpha.clone(),
        beta: beta.clone(),
        pi: pi.clone(),
    };
    check_bernoulli_bound(&graphon, emission)?;

    // Closed-form block integrals for the analytic table.
    let (nk, nl) = (alpha.len(), beta.len());
    let lambda: f64 = (0..nk)
        .map(|k| (0..nl).map(|l| alpha[k] * beta[l] * pi[k][l]).sum::<f64>())
        .sum();
    let mut analytic = AnalyticTable::default();
    analytic.stats.insert("lambda".into(), lambda);
    if lambda > 0.0 {
        let f_blocks: Vec<f64> = (0..nk)
            .map(|k| (0..nl).map(|l| beta[l] * pi[k][l]).sum::<f64>() / lambda)
            .collect();
        let g_blocks: Vec<f64> = (0..nl)
            .map(|l| (0..nk).map(|k| alpha[k] * pi[k][l]).sum::<f64>() / lambda)
            .collect();
        let f2: f64 = (0..nk).map(|k| alpha[k] * f_blocks[k] * f_blocks[k]).sum();
        let g2: f64 = (0..nl).map(|l| beta[l] * g_blocks[l] * g_blocks[l]).sum();
        let mut d = 0.0;
        let mut wbar_sq = 0.0;
        let mut w_fg = 0.0;
        for k in 0..nk {
            for l in 0..nl {
                let wbar = pi[k][l] / lambda;
                let prod = f_blocks[k] * g_blocks[l];
                d += alpha[k] * beta[l] * (wbar - prod) * (wbar - prod);
                wbar_sq += alpha[k] * beta[l] * wbar * wbar;
                w_fg += alpha[k] * beta[l] * wbar * prod;
            }
        }
        analytic.stats.insert("F2".into(), f2);
        analytic.stats.insert("G2".into(), g2);
        analytic.stats.insert("d".into(), d);
        analytic.kernels.insert("hD".into(), lambda);
        analytic.kernels.insert("hB".into(), lambda * lambda * f2);
        analytic.kernels.insert("hC".into(), lambda * lambda * g2);
        analytic.kernels.insert("h1".into(), lambda * lambda * f2);
        analytic.kernels.insert("h2".into(), lambda * lambda);
        if emission == Emission::Poisson {
            analytic
                .kernels
                .insert("hA".into(), lambda.powi(3) * (wbar_sq - 2.0 * w_fg));
            analytic
                .kernels
                .insert("hA1".into(), lambda.powi(3) * wbar_sq);
            analytic.kernels.insert("hA2".into(), lambda.powi(3) * w_fg);
        }
    }
    Ok(ModelSpec {
        graphon,
        emission,
        description: format!("lbm({nk}×{nl}, {})", emission.as_str()),
        analytic,
    })
}

/// d(w̄_ε) for the perturbed block model family: 64ε²(5+2ε)²/(9+4ε)⁴.
pub fn d_true(epsilon: f64) -> f64 {
    let num = 64.0 * epsilon * epsilon * (5.0 + 2.0 * epsilon).powi(2);
    num / (9.0 + 4.0 * epsilon).powi(4)
}

/// The three benchmark models used throughout the simulation studies.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StudyModel {
    /// Bernoulli 2×2 block model, π = 0.5 everywhere except π₁₁ = 0.95.
    I,
    /// Poisson block model π^ε = λ/(λ+ε)·(π⁰ + ε·τ), density-preserving.
    II { epsilon: f64 },
    /// Poisson product model with power-law marginals hitting (F₂, G₂, λ).
    III { f2: f64, g2: f64, lambda: f64 },
}

pub fn study_model(which: StudyModel) -> Result<ModelSpec> {
    match which {
        StudyModel::I => {
            let mut spec = lbm(
                vec![0.5, 0.5],
                vec![0.5, 0.5],
                vec![vec![0.95, 0.5], vec![0.5, 0.5]],
                Emission::Bernoulli,
            )?;
            spec.description = "model I".into();
            Ok(spec)
        }
        StudyModel::II { epsilon } => {
            if !(epsilon >= 0.0) {
                return Err(Error::Validation(format!(
                    "epsilon must be ≥ 0, got {epsilon}"
                )));
            }
            let lambda = 9.0 / 4.0;
            let pi0 = [[4.0, 2.0], [2.0, 1.0]];
            let tau = [[2.0, 0.0], [0.0, 2.0]];
            let scale = lambda / (lambda + epsilon);
            let pi: Vec<Vec<f64>> = (0..2)
                .map(|k| {
                    (0..2)
                        .map(|l| scale * (pi0[k][l] + epsilon * tau[k][l]))
                        .collect()
                })
                .collect();
            let mut spec = lbm(vec![0.5, 0.5], vec![0.5, 0.5], pi, Emission::Poisson)?;
            spec.analytic.stats.insert("d".into(), d_true(epsilon));
            spec.description = format!("model II({epsilon})");
            Ok(spec)
        }
        StudyModel::III { f2, g2, lambda } => {
            if !(lambda > 0.0) {
                return Err(Error::Validation(format!(
                    "lambda must be positive, got {lambda}"
                )));
            }
            let f = Marginal::power_from_second_moment(f2)?;
            let g = Marginal::power_from_second_moment(g2)?;
            let mut spec = bedd(lambda, f, g, Emission::Poisson)?;
            spec.description = format!("model III(F2={f2}, G2={g2}, lambda={lambda})");
            Ok(spec)
        }
    }
}

fn draw_entry<R: Rng>(rng: &mut R, w: f64, emission: Emission) -> Result<f64> {
    match emission {
        Emission::Bernoulli => {
            if w > 1.0 + 1e-9 {
                return Err(Error::Numeric(format!(
                    "Bernoulli intensity {w} exceeds 1 at a sampled point"
                )));
            }
            Ok(if rng.random::<f64>() < w { 1.0 } else { 0.0 })
        }
        Emission::Poisson => {
            if w == 0.0 {
                return Ok(0.0);
            }
            let dist = Poisson::new(w)
                .map_err(|e| Error::Numeric(format!("invalid Poisson mean {w}: {e}")))?;
            Ok(dist.sample(rng))
        }
    }
}

/// Sample an m×n network. Entry (i,j) uses a substream keyed by
/// (seed, i, j), so output is identical for any thread schedule.
pub fn sample(model: &ModelSpec, m: usize, n: usize, seed: u64) -> Result<SampleWithLatents> {
    if m == 0 || n == 0 {
        return Err(Error::Validation(format!(
            "sample dimensions must be positive, got {m}×{n}"
        )));
    }
    let xi: Vec<f64> = (0..m)
        .map(|i| substream(seed, &[tag::ROW_LATENT, i as u64]).random::<f64>())
        .collect();
    let eta: Vec<f64> = (0..n)
        .map(|j| substream(seed, &[tag::COL_LATENT, j as u64]).random::<f64>())
        .collect();
    let rows: Result<Vec<Vec<f64>>> = (0..m)
        .into_par_iter()
        .map(|i| -> Result<Vec<f64>> {
            let mut row = Vec::with_capacity(n);
            for j in 0..n {
                let w = model.graphon.eval(xi[i], eta[j]);
                if !w.is_finite() || w < 0.0 {
                    return Err(Error::Numeric(format!(
                        "graphon produced {w} at ({}, {})",
                        xi[i], eta[j]
                    )));
                }
                let mut rng = substream(seed, &[tag::ENTRY, i as u64, j as u64]);
                row.push(draw_entry(&mut rng, w, model.emission)?);
            }
            Ok(row)
        })
        .collect();
    let values: Vec<f64> = rows?.into_iter().flatten().collect();
    Ok(SampleWithLatents {
        matrix: BipartiteMatrix::new(m, n, values)?,
        xi,
        eta,
    })
}

/// Draw one p×q block with fresh latents, optionally pinning the first
/// row latent (or first column latent) to a given value.
fn sample_block<R: Rng>(
    model: &ModelSpec,
    p: usize,
    q: usize,
    pinned: Option<(Axis, f64)>,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let mut xi = Vec::with_capacity(p);
    let mut eta = Vec::with_capacity(q);
    for a in 0..p {
        match pinned {
            Some((Axis::Row, v)) if a == 0 => xi.push(v),
            _ => xi.push(rng.random::<f64>()),
        }
    }
    for b in 0..q {
        match pinned {
            Some((Axis::Col, v)) if b == 0 => eta.push(v),
            _ => eta.push(rng.random::<f64>()),
        }
    }
    let mut block = Vec::with_capacity(p * q);
    for a in 0..p {
        for b in 0..q {
            let w = model.graphon.eval(xi[a], eta[b]);
            block.push(draw_entry(rng, w, model.emission)?);
        }
    }
    Ok(block)
}

/// Expected kernel value under the model: the analytic table when it covers
/// this kernel (zero standard error), otherwise Monte Carlo over
/// `mc_budget` independent blocks.
pub fn true_expectation(
    model: &ModelSpec,
    kernel: &Kernel,
    mc_budget: usize,
    seed: u64,
) -> Result<OracleEstimate> {
    if let Some(&v) = model.analytic.kernels.get(kernel.id()) {
        return Ok(OracleEstimate {
            value: v,
            std_error: 0.0,
        });
    }
    let (p, q) = (kernel.p(), kernel.q());
    let budget = mc_budget.max(2);
    let chunk = 4096usize;
    let n_chunks = budget.div_ceil(chunk);
    let sums: Result<Vec<(f64, f64, usize)>> = (0..n_chunks)
        .into_par_iter()
        .map(|c| -> Result<(f64, f64, usize)> {
            let lo = c * chunk;
            let hi = budget.min(lo + chunk);
            let mut s = 0.0;
            let mut s2 = 0.0;
            for t in lo..hi {
                let mut rng = substream(seed, &[tag::MC_EXPECTATION, t as u64]);
                let block = sample_block(model, p, q, None, &mut rng)?;
                let v = kernel.eval(&block);
                s += v;
                s2 += v * v;
            }
            Ok((s, s2, hi - lo))
        })
        .collect();
    let (mut s, mut s2, mut count) = (0.0, 0.0, 0usize);
    for (a, b, c) in sums? {
        s += a;
        s2 += b;
        count += c;
    }
    let mean = s / count as f64;
    let var = ((s2 - s * s / count as f64) / (count as f64 - 1.0)).max(0.0);
    Ok(OracleEstimate {
        value: mean,
        std_error: (var / count as f64).sqrt(),
    })
}

/// Conditional-variance oracle for v^{1,0} (axis = rows) or v^{0,1}.
///
/// Draws `n_outer` latent values; for each, averages the kernel over
/// `n_inner` independent blocks sharing that latent, then reports the
/// sample variance of the inner means minus the inner-noise correction
/// mean(inner variance)/n_inner, which removes the finite-budget bias.
/// The standard error is a jackknife over outer draws.
pub fn oracle_conditional_variance(
    model: &ModelSpec,
    kernel: &Kernel,
    axis: Axis,
    n_outer: usize,
    n_inner: usize,
    seed: u64,
) -> Result<OracleEstimate> {
    if n_outer < 2 || n_inner < 2 {
        return Err(Error::Validation(
            "n_outer and n_inner must both be at least 2".into(),
        ));
    }
    let (p, q) = (kernel.p(), kernel.q());
    let axis_tag = match axis {
        Axis::Row => 0u64,
        Axis::Col => 1u64,
    };
    let draws: Result<Vec<(f64, f64)>> = (0..n_outer)
        .into_par_iter()
        .map(|t| -> Result<(f64, f64)> {
            let latent = substream(seed, &[tag::ORACLE_OUTER, axis_tag, t as u64]).random::<f64>();
            let mut s = 0.0;
            let mut s2 = 0.0;
            for inner in 0..n_inner {
                let mut rng =
                    substream(seed, &[tag::ORACLE_INNER, axis_tag, t as u64, inner as u64]);
                let block = sample_block(model, p, q, Some((axis, latent)), &mut rng)?;
                let v = kernel.eval(&block);
                s += v;
                s2 += v * v;
            }
            let mean = s / n_inner as f64;
            let var = ((s2 - s * s / n_inner as f64) / (n_inner as f64 - 1.0)).max(0.0);
            Ok((mean, var))
        })
        .collect();
    let draws = draws?;
    let k = n_outer as f64;
    let sum_a: f64 = draws.iter().map(|d| d.0).sum();
    let sum_a2: f64 = draws.iter().map(|d| d.0 * d.0).sum();
    let sum_b: f64 = draws.iter().map(|d| d.1).sum();
    let estimate = |sa: f64, sa2: f64, sb: f64, count: f64| -> f64 {
        let var_means = (sa2 - sa * sa / count) / (count - 1.0);
        var_means - sb / count / n_inner as f64
    };
    let value = estimate(sum_a, sum_a2, sum_b, k);
    // Jackknife over outer draws.
    let mut jack = Vec::with_capacity(n_outer);
    for d in &draws {
        jack.push(estimate(
            sum_a - d.0,
            sum_a2 - d.0 * d.0,
            sum_b - d.1,
            k - 1.0,
        ));
    }
    let jack_mean = jack.iter().sum::<f64>() / k;
    let jack_var: f64 = jack
        .iter()
        .map(|v| (v - jack_mean) * (v - jack_mean))
        .sum::<f64>()
        * (k - 1.0)
        / k;
    Ok(OracleEstimate {
        value,
        std_error: jack_var.sqrt(),
    })
}

/// JSON description of a model, the CLI/config surface.
#[derive(Debug, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum ModelJson {
    Bedd {
        emission: String,
        lambda: f64,
        f: MarginalJson,
        g: MarginalJson,
    },
    Lbm {
        emission: String,
        alpha: Vec<f64>,
        beta: Vec<f64>,
        pi: Vec<Vec<f64>>,
    },
    Paper {
        which: String,
        #[serde(default)]
        epsilon: Option<f64>,
        #[serde(default)]
        f2: Option<f64>,
        #[serde(default)]
        g2: Option<f64>,
        #[serde(default)]
        lambda: Option<f64>,
    },
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum MarginalJson {
    Uniform,
    Power { alpha: f64 },
    Step { cuts: Vec<f64>, values: Vec<f64> },
}

impl From<MarginalJson> for Marginal {
    fn from(j: MarginalJson) -> Marginal {
        match j {
            MarginalJson::Uniform => Marginal::uniform(),
            MarginalJson::Power { alpha } => Marginal::Power { alpha },
            MarginalJson::Step { cuts, values } => Marginal::Step { cuts, values },
        }
    }
}

fn parse_emission(s: &str) -> Result<Emission> {
    match s {
        "bernoulli" => Ok(Emission::Bernoulli),
        "poisson" => Ok(Emission::Poisson),
        other => Err(Error::Config(format!(
            "unknown emission {other:?}; expected bernoulli or poisson"
        ))),
    }
}

impl ModelJson {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text)
            .map_err(|e| Error::Config(format!("invalid model document: {e}")))
    }

    pub fn build(self) -> Result<ModelSpec> {
        match self {
            ModelJson::Bedd {
                emission,
                lambda,
                f,
                g,
            } => bedd(lambda, f.into(), g.into(), parse_emission(&emission)?),
            ModelJson::Lbm {
                emission,
                alpha,
                beta,
                pi,
            } => lbm(alpha, beta, pi, parse_emission(&emission)?),
            ModelJson::Paper {
                which,
                epsilon,
                f2,
                g2,
                lambda,
            } => match which.as_str() {
                "I" | "i" | "1" => study_model(StudyModel::I),
                "II" | "ii" | "2" => study_model(StudyModel::II {
                    epsilon: epsilon.ok_or_else(|| {
                        Error::Config("model II requires an epsilon field".into())
                    })?,
                }),
                "III" | "iii" | "3" => study_model(StudyModel::III {
                    f2: f2.unwrap_or(3.0),
                    g2: g2.unwrap_or(2.0),
                    lambda: lambda.unwrap_or(1.0),
                }),
                other => Err(Error::Config(format!(
                    "unknown study model {other:?}; expected I, II or III"
                ))),
            },
        }
    }
}
