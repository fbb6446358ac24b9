//! Asymptotic variance and covariance estimation for U-statistics.
//!
//! The estimators are built from per-row and per-column conditional means:
//! μ̂_i averages the kernel over all submatrices containing row i, ν̂_j over
//! all submatrices containing column j. Their sample variances v̂^{1,0} and
//! v̂^{0,1} combine into V̂ = (p²/ρ)v̂^{1,0} + (q²/(1−ρ))v̂^{0,1}. Three
//! computation routes are provided: direct enumeration, the leave-one-out
//! form (which only needs U-statistics on reduced matrices, so it rides the
//! fast paths), and the classical empirical-covariance estimator over
//! submatrix pairs (algorithm A), kept as a baseline.

use crate::combinatorics::binom_f64;
use crate::error::Error;
use crate::fast::FastStats;
use crate::kernels::Kernel;
use crate::matrix::BipartiteMatrix;
use crate::rng::{substream, tag};
use crate::ustat::{u_leave_one_out, u_naive, Axis, UStatResult};
use crate::Result;
use rand::Rng;

/// V̂ is flagged degenerate when it falls below this multiple of the squared
/// kernel-value scale.
pub const DEGENERACY_RELATIVE: f64 = 1e-12;

/// How ρ = lim m/(m+n) is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RhoPolicy {
    /// ρ̂ = m/(m+n); makes V̂/N equal p²v̂^{1,0}/m + q²v̂^{0,1}/n.
    Empirical,
    Fixed(f64),
}

impl RhoPolicy {
    pub fn resolve(self, m: usize, n: usize) -> Result<f64> {
        let rho = match self {
            RhoPolicy::Empirical => m as f64 / (m + n) as f64,
            RhoPolicy::Fixed(r) => r,
        };
        if !(rho > 0.0 && rho < 1.0) {
            return Err(Error::Validation(format!("rho must lie in (0,1), got {rho}")));
        }
        Ok(rho)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarMethod {
    Direct,
    LeaveOneOut,
    AlgorithmA,
}

impl VarMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            VarMethod::Direct => "direct",
            VarMethod::LeaveOneOut => "leave_one_out",
            VarMethod::AlgorithmA => "algorithm_A",
        }
    }
}

#[derive(Debug, Clone)]
pub struct VarianceEstimate {
    pub v10: f64,
    pub v01: f64,
    pub v: f64,
    pub rho: f64,
    pub method: VarMethod,
    pub degenerate: bool,
    /// Sample standard deviation of kernel values, the degeneracy scale.
    pub kernel_scale: f64,
}

#[derive(Debug, Clone)]
pub struct CovarianceEstimate {
    pub kernel_ids: Vec<String>,
    /// Σ̂, row-major D×D.
    pub sigma: Vec<Vec<f64>>,
    pub rho: f64,
    pub u_values: Vec<f64>,
    pub kernel_scales: Vec<f64>,
}

impl CovarianceEstimate {
    pub fn dim(&self) -> usize {
        self.kernel_ids.len()
    }

    /// ∇ᵀ Σ̂ ∇ for a gradient vector.
    pub fn quadratic_form(&self, grad: &[f64]) -> f64 {
        let mut acc = 0.0;
        for (k, gk) in grad.iter().enumerate() {
            for (l, gl) in grad.iter().enumerate() {
                acc += gk * gl * self.sigma[k][l];
            }
        }
        acc
    }
}

/// Unbiased sample variance, the O(m) equivalent of the pairwise form
/// binom(m,2)⁻¹ Σ_{i<j} (x_i − x_j)²/2.
pub fn sample_variance(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0)
}

/// Unbiased sample covariance of two equally long vectors.
pub fn sample_covariance(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    xs.iter()
        .zip(ys)
        .map(|(x, y)| (x - mx) * (y - my))
        .sum::<f64>()
        / (n - 1.0)
}

/// Conditional-mean estimators μ̂ and ν̂ from an enumeration result.
pub fn conditional_means(
    base: &UStatResult,
    p: usize,
    q: usize,
    m: usize,
    n: usize,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let mu_denom = binom_f64((m - 1) as u64, (p - 1) as u64)? * binom_f64(n as u64, q as u64)?;
    let nu_denom = binom_f64(m as u64, p as u64)? * binom_f64((n - 1) as u64, (q - 1) as u64)?;
    let mu = base.row_sums.iter().map(|s| s / mu_denom).collect();
    let nu = base.col_sums.iter().map(|s| s / nu_denom).collect();
    Ok((mu, nu))
}

/// v̂^{1,0} and v̂^{0,1} as unbiased sample variances of μ̂ and ν̂.
pub fn v_hats(mu: &[f64], nu: &[f64]) -> Result<(f64, f64)> {
    if mu.len() < 2 || nu.len() < 2 {
        return Err(Error::Size(
            "need at least two rows and two columns to estimate variances".into(),
        ));
    }
    Ok((sample_variance(mu), sample_variance(nu)))
}

/// Per-kernel summary the estimators are assembled from.
#[derive(Debug, Clone)]
pub(crate) struct KernelStats {
    pub u: f64,
    pub mu: Vec<f64>,
    pub nu: Vec<f64>,
    pub scale: f64,
}

/// Number of random blocks used to estimate the kernel-value scale when no
/// enumeration pass is available.
const SCALE_SAMPLE: usize = 2048;

fn sampled_kernel_scale(y: &BipartiteMatrix, h: &Kernel) -> f64 {
    let (m, n) = (y.m(), y.n());
    let (p, q) = (h.p(), h.q());
    let mut s = 0.0;
    let mut s2 = 0.0;
    let mut block = vec![0.0; p * q];
    let mut rows = vec![0usize; p];
    let mut cols = vec![0usize; q];
    // One sequential stream: this sampler is never parallelized.
    let mut rng = substream(0, &[tag::KERNEL_SCALE, m as u64, n as u64]);
    for _ in 0..SCALE_SAMPLE {
        sample_distinct_sorted(&mut rng, m, p, &mut rows);
        sample_distinct_sorted(&mut rng, n, q, &mut cols);
        let mut idx = 0;
        for &r in &rows {
            for &c in &cols {
                block[idx] = y.get(r, c);
                idx += 1;
            }
        }
        let v = h.eval(&block);
        s += v;
        s2 += v * v;
    }
    let count = SCALE_SAMPLE as f64;
    (((s2 - s * s / count) / (count - 1.0)).max(0.0)).sqrt()
}

fn sample_distinct_sorted<R: Rng>(rng: &mut R, dim: usize, k: usize, out: &mut [usize]) {
    debug_assert!(k <= dim);
    let mut filled = 0;
    while filled < k {
        let cand = rng.random_range(0..dim);
        if !out[..filled].contains(&cand) {
            out[filled] = cand;
            filled += 1;
        }
    }
    out[..k].sort_unstable();
}

impl KernelStats {
    /// Fast route when the kernel has one, enumeration otherwise.
    pub(crate) fn compute(y: &BipartiteMatrix, h: &Kernel) -> Result<KernelStats> {
        match h.fast_path() {
            Some(id) => Self::from_fast(y, h, id),
            None => Self::from_enumeration(y, h),
        }
    }

    pub(crate) fn from_enumeration(y: &BipartiteMatrix, h: &Kernel) -> Result<KernelStats> {
        let base = u_naive(y, h)?;
        let (mu, nu) = conditional_means(&base, h.p(), h.q(), y.m(), y.n())?;
        Ok(KernelStats {
            u: base.value,
            mu,
            nu,
            scale: base.kernel_scale,
        })
    }

    pub(crate) fn from_fast(
        y: &BipartiteMatrix,
        h: &Kernel,
        id: crate::fast::FastPathId,
    ) -> Result<KernelStats> {
        let (m, n) = (y.m(), y.n());
        let (p, q) = (h.p(), h.q());
        if m <= p || n <= q {
            return Err(Error::Size(format!(
                "need m > p and n > q for leave-one-out recovery, got {m}×{n} for {p}×{q}"
            )));
        }
        let stats = FastStats::new(y, id)?;
        let u = stats.u_full();
        // μ̂_i follows from U and the row-deleted U-statistic.
        let bm = binom_f64(m as u64, p as u64)?;
        let bm1p = binom_f64((m - 1) as u64, p as u64)?;
        let bm1p1 = binom_f64((m - 1) as u64, (p - 1) as u64)?;
        let mu: Vec<f64> = (0..m)
            .map(|i| (bm * u - bm1p * stats.u_skip_row(i)) / bm1p1)
            .collect();
        let bn = binom_f64(n as u64, q as u64)?;
        let bn1q = binom_f64((n - 1) as u64, q as u64)?;
        let bn1q1 = binom_f64((n - 1) as u64, (q - 1) as u64)?;
        let nu: Vec<f64> = (0..n)
            .map(|j| (bn * u - bn1q * stats.u_skip_col(j)) / bn1q1)
            .collect();
        Ok(KernelStats {
            u,
            mu,
            nu,
            scale: sampled_kernel_scale(y, h),
        })
    }
}

fn assemble(
    v10: f64,
    v01: f64,
    p: usize,
    q: usize,
    rho: f64,
    method: VarMethod,
    scale: f64,
) -> VarianceEstimate {
    let v = (p * p) as f64 / rho * v10 + (q * q) as f64 / (1.0 - rho) * v01;
    VarianceEstimate {
        v10,
        v01,
        v,
        rho,
        method,
        degenerate: v <= DEGENERACY_RELATIVE * scale * scale,
        kernel_scale: scale,
    }
}

/// Estimate V̂ for one kernel.
pub fn variance_estimate(
    y: &BipartiteMatrix,
    h: &Kernel,
    rho_policy: RhoPolicy,
    method: VarMethod,
) -> Result<VarianceEstimate> {
    let (m, n) = (y.m(), y.n());
    let (p, q) = (h.p(), h.q());
    if m <= p || n <= q {
        return Err(Error::Size(format!(
            "variance estimation needs m > p and n > q, got {m}×{n} for a {p}×{q} kernel"
        )));
    }
    let rho = rho_policy.resolve(m, n)?;
    match method {
        VarMethod::Direct => {
            let stats = KernelStats::from_enumeration(y, h)?;
            let (v10, v01) = v_hats(&stats.mu, &stats.nu)?;
            Ok(assemble(v10, v01, p, q, rho, method, stats.scale))
        }
        VarMethod::LeaveOneOut => {
            let (u, loo_rows, loo_cols, scale) = match h.fast_path() {
                Some(id) => {
                    let stats = FastStats::new(y, id)?;
                    let u = stats.u_full();
                    let rows: Vec<f64> = (0..m).map(|i| stats.u_skip_row(i)).collect();
                    let cols: Vec<f64> = (0..n).map(|j| stats.u_skip_col(j)).collect();
                    (u, rows, cols, sampled_kernel_scale(y, h))
                }
                None => {
                    let base = u_naive(y, h)?;
                    let rows: Vec<f64> = (0..m)
                        .map(|i| u_leave_one_out(&base, y, h, Axis::Row, i))
                        .collect::<Result<_>>()?;
                    let cols: Vec<f64> = (0..n)
                        .map(|j| u_leave_one_out(&base, y, h, Axis::Col, j))
                        .collect::<Result<_>>()?;
                    (base.value, rows, cols, base.kernel_scale)
                }
            };
            let (mf, nf, pf, qf) = (m as f64, n as f64, p as f64, q as f64);
            let v10 = (mf - pf).powi(2) / (pf * pf * (mf - 1.0))
                * loo_rows.iter().map(|ui| (u - ui) * (u - ui)).sum::<f64>();
            let v01 = (nf - qf).powi(2) / (qf * qf * (nf - 1.0))
                * loo_cols.iter().map(|uj| (u - uj) * (u - uj)).sum::<f64>();
            Ok(assemble(v10, v01, p, q, rho, method, scale))
        }
        VarMethod::AlgorithmA => algorithm_a_variance(y, h, rho_policy, AlgorithmAOptions::default()),
    }
}

/// Joint Σ̂ for a vector of kernels.
///
/// Entry (k,ℓ) is (p_k·p_ℓ/ρ)·ĉ^{1,0} + (q_k·q_ℓ/(1−ρ))·ĉ^{0,1} with the
/// ĉ's the sample covariances of the conditional-mean vectors; the per-kernel
/// sizes appear as the product p_k·p_ℓ, which keeps the matrix positive
/// semidefinite by construction and makes the diagonal coincide exactly with
/// the per-kernel V̂.
pub fn covariance_estimate(
    y: &BipartiteMatrix,
    kernels: &[Kernel],
    rho_policy: RhoPolicy,
) -> Result<CovarianceEstimate> {
    if kernels.is_empty() {
        return Err(Error::Validation("need at least one kernel".into()));
    }
    let (m, n) = (y.m(), y.n());
    for h in kernels {
        if m <= h.p() || n <= h.q() {
            return Err(Error::Size(format!(
                "kernel {} of size {}×{} does not fit a {m}×{n} matrix with room to spare",
                h.id(),
                h.p(),
                h.q()
            )));
        }
    }
    let rho = rho_policy.resolve(m, n)?;
    let stats: Vec<KernelStats> = kernels
        .iter()
        .map(|h| KernelStats::compute(y, h))
        .collect::<Result<_>>()?;
    let d = kernels.len();
    let mut sigma = vec![vec![0.0; d]; d];
    for k in 0..d {
        for l in k..d {
            let c10 = sample_covariance(&stats[k].mu, &stats[l].mu);
            let c01 = sample_covariance(&stats[k].nu, &stats[l].nu);
            let weight_rows = (kernels[k].p() * kernels[l].p()) as f64 / rho;
            let weight_cols = (kernels[k].q() * kernels[l].q()) as f64 / (1.0 - rho);
            let v = weight_rows * c10 + weight_cols * c01;
            sigma[k][l] = v;
            sigma[l][k] = v;
        }
    }
    Ok(CovarianceEstimate {
        kernel_ids: kernels.iter().map(|h| h.id().to_string()).collect(),
        sigma,
        rho,
        u_values: stats.iter().map(|s| s.u).collect(),
        kernel_scales: stats.iter().map(|s| s.scale).collect(),
    })
}

#[derive(Debug, Clone, Copy)]
pub struct AlgorithmAOptions {
    /// Switch from exhaustive pairing to random pairs above this count.
    pub budget: usize,
    pub seed: u64,
}

impl Default for AlgorithmAOptions {
    fn default() -> Self {
        AlgorithmAOptions {
            budget: 1_000_000,
            seed: 0,
        }
    }
}

/// Empirical-covariance estimator of V (the classical baseline).
///
/// γ̂^{1,0} = mean(X·X′ over pairs with one shared row, no shared column)
/// minus mean(X·X″ over fully disjoint pairs), and symmetrically for
/// γ̂^{0,1}. Disjoint blocks of a dissociated RCE matrix are independent,
/// so the disjoint mean estimates (E h)² without bias and the difference
/// is an unbiased covariance estimate. Unlike the conditional-mean
/// estimators, it can come out negative.
pub fn algorithm_a_variance(
    y: &BipartiteMatrix,
    h: &Kernel,
    rho_policy: RhoPolicy,
    opts: AlgorithmAOptions,
) -> Result<VarianceEstimate> {
    let (m, n) = (y.m(), y.n());
    let (p, q) = (h.p(), h.q());
    if m < 2 * p || n < 2 * q {
        return Err(Error::Size(format!(
            "empirical covariance pairing needs m ≥ 2p and n ≥ 2q, got {m}×{n} for {p}×{q}"
        )));
    }
    let rho = rho_policy.resolve(m, n)?;
    let scale = sampled_kernel_scale(y, h);
    let disjoint = pair_product_mean(y, h, PairOverlap::Disjoint, opts)?;
    let g10 = pair_product_mean(y, h, PairOverlap::ShareOne(Axis::Row), opts)? - disjoint;
    let g01 = pair_product_mean(y, h, PairOverlap::ShareOne(Axis::Col), opts)? - disjoint;
    let v = (p * p) as f64 / rho * g10 + (q * q) as f64 / (1.0 - rho) * g01;
    Ok(VarianceEstimate {
        v10: g10,
        v01: g01,
        v,
        rho,
        method: VarMethod::AlgorithmA,
        degenerate: v.abs() <= DEGENERACY_RELATIVE * scale * scale,
        kernel_scale: scale,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum PairOverlap {
    /// Exactly one shared index on the given axis, none on the other.
    ShareOne(Axis),
    /// No shared rows and no shared columns.
    Disjoint,
}

/// Mean of h(block₁)·h(block₂) over submatrix pairs with the prescribed
/// overlap pattern: exhaustive when the pair count fits the budget, random
/// counter-seeded pairs otherwise.
fn pair_product_mean(
    y: &BipartiteMatrix,
    h: &Kernel,
    overlap: PairOverlap,
    opts: AlgorithmAOptions,
) -> Result<f64> {
    let (m, n) = (y.m(), y.n());
    let (p, q) = (h.p(), h.q());
    let shared_rows = matches!(overlap, PairOverlap::ShareOne(Axis::Row));
    let shared_cols = matches!(overlap, PairOverlap::ShareOne(Axis::Col));

    let axis_pair_count = |dim: usize, k: usize, share: bool| -> Result<f64> {
        if share {
            Ok(dim as f64
                * binom_f64((dim - 1) as u64, (k - 1) as u64)?
                * binom_f64((dim - k) as u64, (k - 1) as u64)?)
        } else {
            Ok(binom_f64(dim as u64, k as u64)? * binom_f64((dim - k) as u64, k as u64)?)
        }
    };
    let count_exhaustive =
        axis_pair_count(m, p, shared_rows)? * axis_pair_count(n, q, shared_cols)?;

    let mut block = vec![0.0; p * q];
    let mut eval_pair = |rows1: &[usize], cols1: &[usize], rows2: &[usize], cols2: &[usize]| {
        let fill = |rows: &[usize], cols: &[usize], block: &mut [f64]| {
            let mut idx = 0;
            for &r in rows {
                for &c in cols {
                    block[idx] = y.get(r, c);
                    idx += 1;
                }
            }
        };
        fill(rows1, cols1, &mut block);
        let x1 = h.eval(&block);
        fill(rows2, cols2, &mut block);
        let x2 = h.eval(&block);
        x1 * x2
    };

    let mut acc = 0.0;
    let mut pairs = 0u64;
    if count_exhaustive <= opts.budget as f64 {
        // All ordered pairs of index sets per axis with the requested overlap.
        let axis_pairs = |dim: usize, k: usize, share: bool| -> Vec<(Vec<usize>, Vec<usize>)> {
            let mut out = Vec::new();
            if share {
                for s in 0..dim {
                    let rest: Vec<usize> = (0..dim).filter(|&v| v != s).collect();
                    for pick1 in crate::combinatorics::SubsetIter::new(rest.len(), k - 1) {
                        let mut set1: Vec<usize> = pick1.iter().map(|&ix| rest[ix]).collect();
                        let rest2: Vec<usize> = rest
                            .iter()
                            .copied()
                            .filter(|v| !set1.contains(v))
                            .collect();
                        set1.push(s);
                        set1.sort_unstable();
                        for pick2 in crate::combinatorics::SubsetIter::new(rest2.len(), k - 1) {
                            let mut set2: Vec<usize> =
                                pick2.iter().map(|&ix| rest2[ix]).collect();
                            set2.push(s);
                            set2.sort_unstable();
                            out.push((set1.clone(), set2));
                        }
                    }
                }
            } else {
                for set1 in crate::combinatorics::SubsetIter::new(dim, k) {
                    let rest: Vec<usize> = (0..dim).filter(|v| !set1.contains(v)).collect();
                    for pick2 in crate::combinatorics::SubsetIter::new(rest.len(), k) {
                        let set2: Vec<usize> = pick2.iter().map(|&ix| rest[ix]).collect();
                        out.push((set1.clone(), set2));
                    }
                }
            }
            out
        };
        let row_pairs = axis_pairs(m, p, shared_rows);
        let col_pairs = axis_pairs(n, q, shared_cols);
        for (r1, r2) in &row_pairs {
            for (c1, c2) in &col_pairs {
                acc += eval_pair(r1, c1, r2, c2);
                pairs += 1;
            }
        }
    } else {
        let overlap_tag = match overlap {
            PairOverlap::ShareOne(Axis::Row) => 0u64,
            PairOverlap::ShareOne(Axis::Col) => 1u64,
            PairOverlap::Disjoint => 2u64,
        };
        let mut rows1 = vec![0usize; p];
        let mut rows2 = vec![0usize; p];
        let mut cols1 = vec![0usize; q];
        let mut cols2 = vec![0usize; q];
        for t in 0..opts.budget {
            let mut rng = substream(opts.seed, &[tag::PAIR_SAMPLER, overlap_tag, t as u64]);
            sample_axis_pair(&mut rng, m, p, shared_rows, &mut rows1, &mut rows2);
            sample_axis_pair(&mut rng, n, q, shared_cols, &mut cols1, &mut cols2);
            acc += eval_pair(&rows1, &cols1, &rows2, &cols2);
            pairs += 1;
        }
    }
    Ok(acc / pairs as f64)
}

/// Draw a pair of k-subsets of 0..dim sharing exactly one element (when
/// `share`) or nothing, both sorted.
fn sample_axis_pair<R: Rng>(
    rng: &mut R,
    dim: usize,
    k: usize,
    share: bool,
    out1: &mut [usize],
    out2: &mut [usize],
) {
    if share {
        let s = rng.random_range(0..dim);
        sample_distinct_excluding(rng, dim, k - 1, &[s], &mut out1[..k - 1]);
        out1[k - 1] = s;
        let exclude: Vec<usize> = out1.to_vec();
        sample_distinct_excluding(rng, dim, k - 1, &exclude, &mut out2[..k - 1]);
        out2[k - 1] = s;
    } else {
        sample_distinct_excluding(rng, dim, k, &[], out1);
        let exclude: Vec<usize> = out1.to_vec();
        sample_distinct_excluding(rng, dim, k, &exclude, out2);
    }
    out1.sort_unstable();
    out2.sort_unstable();
}

fn sample_distinct_excluding<R: Rng>(
    rng: &mut R,
    dim: usize,
    k: usize,
    exclude: &[usize],
    out: &mut [usize],
) {
    let mut filled = 0;
    while filled < k {
        let cand = rng.random_range(0..dim);
        if !exclude.contains(&cand) && !out[..filled].contains(&cand) {
            out[filled] = cand;
            filled += 1;
        }
    }
}

/// Convenience: U value plus its conditional-mean vectors for one kernel,
/// taking the fast route when available.
pub(crate) fn kernel_stats(y: &BipartiteMatrix, h: &Kernel) -> Result<KernelStats> {
    KernelStats::compute(y, h)
}
