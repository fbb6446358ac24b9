//! Kernel functions on p×q submatrices.
//!
//! A kernel maps a p×q real block to a real number and must be symmetric:
//! invariant under every row permutation and every column permutation of its
//! argument. Non-symmetric kernels are turned symmetric by averaging over all
//! p!·q! permutation pairs, which leaves the associated U-statistic unchanged.
//! The built-in library covers the motif indicators (`h6`, `h14`), the
//! graphon-product-distance kernels (`hA`, `hA1`, `hA2`, `hB`, `hC`, `hD`)
//! and the row-heterogeneity kernels (`h1`, `h2`); built-ins are returned in
//! already-symmetrized form.

use std::fmt;
use std::sync::Arc;

use serde::Deserialize;

use crate::combinatorics::SubsetIter;
use crate::error::Error;
use crate::fast::FastPathId;
use crate::Result;

/// Largest p or q accepted for kernels built through data-driven entry
/// points (built-ins are smaller, the library API is unrestricted).
pub const DEFAULT_MAX_KERNEL_DIM: usize = 4;

/// Guard for the p!·q! permutation expansion in [`symmetrize`].
const MAX_PERMUTATION_TERMS: u128 = 1_000_000;

type EvalFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// A symmetric (or to-be-symmetrized) kernel on p×q blocks.
#[derive(Clone)]
pub struct Kernel {
    p: usize,
    q: usize,
    id: String,
    is_symmetric: bool,
    fast_path: Option<FastPathId>,
    eval: EvalFn,
}

impl fmt::Debug for Kernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Kernel")
            .field("id", &self.id)
            .field("p", &self.p)
            .field("q", &self.q)
            .field("is_symmetric", &self.is_symmetric)
            .field("fast_path", &self.fast_path)
            .finish()
    }
}

impl Kernel {
    /// Wrap an arbitrary evaluation function. The caller asserts whether it
    /// is symmetric; when in doubt pass `false` and use [`symmetrize`].
    pub fn from_fn<F>(p: usize, q: usize, id: impl Into<String>, is_symmetric: bool, f: F) -> Self
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        Kernel {
            p,
            q,
            id: id.into(),
            is_symmetric,
            fast_path: None,
            eval: Arc::new(f),
        }
    }

    fn with_fast_path(mut self, fast: FastPathId) -> Self {
        self.fast_path = Some(fast);
        self
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn is_symmetric(&self) -> bool {
        self.is_symmetric
    }

    pub fn fast_path(&self) -> Option<FastPathId> {
        self.fast_path
    }

    /// Raw evaluation; `block` must hold exactly p·q row-major entries.
    #[inline]
    pub fn eval(&self, block: &[f64]) -> f64 {
        debug_assert_eq!(block.len(), self.p * self.q);
        (self.eval)(block)
    }

    /// a·self + b·other, for same-size kernels.
    pub fn linear_combination(a: f64, k1: &Kernel, b: f64, k2: &Kernel) -> Result<Kernel> {
        if (k1.p, k1.q) != (k2.p, k2.q) {
            return Err(Error::Contract(format!(
                "cannot combine kernels of sizes {}×{} and {}×{}",
                k1.p, k1.q, k2.p, k2.q
            )));
        }
        let (e1, e2) = (k1.eval.clone(), k2.eval.clone());
        Ok(Kernel {
            p: k1.p,
            q: k1.q,
            id: format!("{a}*{}+{b}*{}", k1.id, k2.id),
            is_symmetric: k1.is_symmetric && k2.is_symmetric,
            fast_path: None,
            eval: Arc::new(move |b_| a * e1(b_) + b * e2(b_)),
        })
    }
}

/// Validated evaluation: checks dimensions and a finite result.
pub fn evaluate(kernel: &Kernel, block: &[f64], p: usize, q: usize) -> Result<f64> {
    if (p, q) != (kernel.p, kernel.q) {
        return Err(Error::Contract(format!(
            "kernel {} expects a {}×{} block, got {p}×{q}",
            kernel.id, kernel.p, kernel.q
        )));
    }
    if block.len() != p * q {
        return Err(Error::Contract(format!(
            "block holds {} entries, expected {}",
            block.len(),
            p * q
        )));
    }
    let v = kernel.eval(block);
    if !v.is_finite() {
        return Err(Error::Numeric(format!(
            "kernel {} produced a non-finite value",
            kernel.id
        )));
    }
    Ok(v)
}

/// All permutations of `0..k` in a deterministic order.
fn permutations(k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut items: Vec<usize> = (0..k).collect();
    heap_permute(&mut items, k, &mut out);
    out
}

fn heap_permute(items: &mut Vec<usize>, k: usize, out: &mut Vec<Vec<usize>>) {
    if k <= 1 {
        out.push(items.clone());
        return;
    }
    for i in 0..k {
        heap_permute(items, k - 1, out);
        if k % 2 == 0 {
            items.swap(i, k - 1);
        } else {
            items.swap(0, k - 1);
        }
    }
}

/// Average `raw` over all row/column permutation pairs.
///
/// Already-symmetric kernels are returned unchanged. Refuses pathological
/// sizes where p!·q! exceeds 10^6 terms.
pub fn symmetrize(raw: &Kernel) -> Result<Kernel> {
    if raw.is_symmetric {
        return Ok(raw.clone());
    }
    let (p, q) = (raw.p, raw.q);
    let terms = (1..=p as u128).product::<u128>() * (1..=q as u128).product::<u128>();
    if terms > MAX_PERMUTATION_TERMS {
        return Err(Error::Refused {
            what: format!("symmetrization of kernel {}", raw.id),
            reason: format!("p!·q! = {terms} permutation terms exceeds {MAX_PERMUTATION_TERMS}"),
        });
    }
    // Precompute the entry remapping of every permutation pair.
    let row_perms = permutations(p);
    let col_perms = permutations(q);
    let mut maps: Vec<Vec<usize>> = Vec::with_capacity(row_perms.len() * col_perms.len());
    for rp in &row_perms {
        for cp in &col_perms {
            let mut map = Vec::with_capacity(p * q);
            for a in 0..p {
                for b in 0..q {
                    map.push(rp[a] * q + cp[b]);
                }
            }
            maps.push(map);
        }
    }
    let inner = raw.eval.clone();
    let count = maps.len() as f64;
    let eval = move |block: &[f64]| -> f64 {
        let mut scratch = vec![0.0; block.len()];
        let mut acc = 0.0;
        for map in &maps {
            for (dst, &src) in scratch.iter_mut().zip(map.iter()) {
                *dst = block[src];
            }
            acc += inner(&scratch);
        }
        acc / count
    };
    Ok(Kernel {
        p,
        q,
        id: format!("sym({})", raw.id),
        is_symmetric: true,
        fast_path: None,
        eval: Arc::new(eval),
    })
}

/// Extend a kernel to a larger block size by averaging over all sub-blocks
/// of the original size. The extension has the same U-statistic as `h`.
pub fn extend(h: &Kernel, p2: usize, q2: usize) -> Result<Kernel> {
    if p2 < h.p || q2 < h.q {
        return Err(Error::Contract(format!(
            "cannot extend a {}×{} kernel to {p2}×{q2}",
            h.p, h.q
        )));
    }
    if (p2, q2) == (h.p, h.q) {
        return Ok(h.clone());
    }
    let row_subsets: Vec<Vec<usize>> = SubsetIter::new(p2, h.p).collect();
    let col_subsets: Vec<Vec<usize>> = SubsetIter::new(q2, h.q).collect();
    let count = (row_subsets.len() * col_subsets.len()) as f64;
    let inner = h.eval.clone();
    let (p, q) = (h.p, h.q);
    let eval = move |block: &[f64]| -> f64 {
        let mut scratch = vec![0.0; p * q];
        let mut acc = 0.0;
        for rows in &row_subsets {
            for cols in &col_subsets {
                let mut t = 0;
                for &r in rows {
                    for &c in cols {
                        scratch[t] = block[r * q2 + c];
                        t += 1;
                    }
                }
                acc += inner(&scratch);
            }
        }
        acc / count
    };
    Ok(Kernel {
        p: p2,
        q: q2,
        id: format!("extend({},{p2},{q2})", h.id),
        is_symmetric: h.is_symmetric,
        fast_path: None,
        eval: Arc::new(eval),
    })
}

pub const BUILTIN_NAMES: [&str; 10] = [
    "h6", "h14", "hA", "hA1", "hA2", "hB", "hC", "hD", "h1", "h2",
];

/// Look up a built-in kernel by name. All built-ins are pre-symmetrized;
/// the 2×2 and 2×3 forms below are the permutation averages written out.
pub fn builtin(name: &str) -> Result<Kernel> {
    let k = match name {
        // 2×2 clique indicator; already symmetric.
        "h6" => Kernel::from_fn(2, 2, "h6", true, |b| b[0] * b[1] * b[2] * b[3])
            .with_fast_path(FastPathId::H6),
        // 2×3 path indicator, automorphism-reduced 6-term average.
        "h14" => Kernel::from_fn(2, 3, "h14", true, |b| {
            let (y11, y12, y13, y21, y22, y23) = (b[0], b[1], b[2], b[3], b[4], b[5]);
            (y11 * y12 * y22 * y23 * (1.0 - y21) * (1.0 - y13)
                + y12 * y13 * y23 * y21 * (1.0 - y11) * (1.0 - y22)
                + y13 * y11 * y21 * y22 * (1.0 - y12) * (1.0 - y23)
                + y21 * y22 * y12 * y13 * (1.0 - y11) * (1.0 - y23)
                + y22 * y23 * y13 * y11 * (1.0 - y21) * (1.0 - y12)
                + y23 * y21 * y11 * y12 * (1.0 - y22) * (1.0 - y13))
                / 6.0
        }),
        "hA" => Kernel::from_fn(2, 2, "hA", true, |b| {
            sym_ha1(b) - 2.0 * sym_ha2(b)
        })
        .with_fast_path(FastPathId::HA),
        "hA1" => Kernel::from_fn(2, 2, "hA1", true, sym_ha1).with_fast_path(FastPathId::HA1),
        "hA2" => Kernel::from_fn(2, 2, "hA2", true, sym_ha2).with_fast_path(FastPathId::HA2),
        // Y11·Y12 is invariant under swapping the two columns.
        "hB" => Kernel::from_fn(1, 2, "hB", true, |b| b[0] * b[1]).with_fast_path(FastPathId::HB),
        "hC" => Kernel::from_fn(2, 1, "hC", true, |b| b[0] * b[1]).with_fast_path(FastPathId::HC),
        "hD" => Kernel::from_fn(1, 1, "hD", true, |b| b[0]).with_fast_path(FastPathId::HD),
        "h1" => Kernel::from_fn(1, 2, "h1", true, |b| b[0] * b[1]).with_fast_path(FastPathId::H1),
        "h2" => Kernel::from_fn(2, 2, "h2", true, |b| 0.5 * (b[0] * b[3] + b[1] * b[2]))
            .with_fast_path(FastPathId::H2),
        other => {
            return Err(Error::UnknownKernel {
                name: other.to_string(),
                valid: BUILTIN_NAMES.join(", "),
            })
        }
    };
    Ok(k)
}

/// Symmetrized Y11(Y11−1)Y22 over the four 2×2 permutation pairs.
fn sym_ha1(b: &[f64]) -> f64 {
    let (y11, y12, y21, y22) = (b[0], b[1], b[2], b[3]);
    (y11 * (y11 - 1.0) * y22
        + y12 * (y12 - 1.0) * y21
        + y21 * (y21 - 1.0) * y12
        + y22 * (y22 - 1.0) * y11)
        / 4.0
}

/// Symmetrized Y11·Y12·Y22 over the four 2×2 permutation pairs.
fn sym_ha2(b: &[f64]) -> f64 {
    let (y11, y12, y21, y22) = (b[0], b[1], b[2], b[3]);
    (y11 * y12 * y22 + y21 * y22 * y12 + y12 * y11 * y21 + y22 * y21 * y11) / 4.0
}

/// Unsymmetrized source kernels, used by tests to exercise [`symmetrize`].
pub fn builtin_raw(name: &str) -> Result<Kernel> {
    let k = match name {
        "h6" => Kernel::from_fn(2, 2, "h6.raw", false, |b| b[0] * b[1] * b[2] * b[3]),
        "h14" => Kernel::from_fn(2, 3, "h14.raw", false, |b| {
            b[0] * b[1] * b[4] * b[5] * (1.0 - b[3]) * (1.0 - b[2])
        }),
        "hA1" => Kernel::from_fn(2, 2, "hA1.raw", false, |b| b[0] * (b[0] - 1.0) * b[3]),
        "hA2" => Kernel::from_fn(2, 2, "hA2.raw", false, |b| b[0] * b[1] * b[3]),
        "hB" => Kernel::from_fn(1, 2, "hB.raw", false, |b| b[0] * b[1]),
        "hC" => Kernel::from_fn(2, 1, "hC.raw", false, |b| b[0] * b[1]),
        "hD" => Kernel::from_fn(1, 1, "hD.raw", false, |b| b[0]),
        "h1" => Kernel::from_fn(1, 2, "h1.raw", false, |b| b[0] * b[1]),
        "h2" => Kernel::from_fn(2, 2, "h2.raw", false, |b| b[0] * b[3]),
        other => {
            return Err(Error::UnknownKernel {
                name: other.to_string(),
                valid: "h6, h14, hA1, hA2, hB, hC, hD, h1, h2".into(),
            })
        }
    };
    Ok(k)
}

/// User-defined polynomial kernel: Σ coef·Π `Y[i,j]^power`, symmetrized.
#[derive(Debug, Deserialize)]
pub struct ExprKernelSpec {
    pub p: usize,
    pub q: usize,
    pub terms: Vec<ExprTerm>,
    #[serde(default)]
    pub id: Option<String>,
}

#[derive(Debug, Deserialize)]
pub struct ExprTerm {
    pub coef: f64,
    /// Factors as `[row, col, power]` triples, 0-based.
    pub factors: Vec<[u32; 3]>,
}

impl ExprKernelSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text)
            .map_err(|e| Error::Config(format!("invalid kernel document: {e}")))
    }

    pub fn build(self) -> Result<Kernel> {
        if self.p == 0 || self.q == 0 {
            return Err(Error::Validation("kernel dimensions must be positive".into()));
        }
        if self.p > DEFAULT_MAX_KERNEL_DIM || self.q > DEFAULT_MAX_KERNEL_DIM {
            return Err(Error::Validation(format!(
                "kernel size {}×{} exceeds the default limit of {DEFAULT_MAX_KERNEL_DIM}",
                self.p, self.q
            )));
        }
        if self.terms.is_empty() {
            return Err(Error::Validation("kernel has no terms".into()));
        }
        for term in &self.terms {
            for f in &term.factors {
                if f[0] as usize >= self.p || f[1] as usize >= self.q {
                    return Err(Error::Validation(format!(
                        "factor index ({}, {}) outside a {}×{} block",
                        f[0], f[1], self.p, self.q
                    )));
                }
            }
        }
        let id = self
            .id
            .clone()
            .unwrap_or_else(|| format!("expr{}x{}", self.p, self.q));
        let terms = self.terms;
        let q = self.q;
        let raw = Kernel::from_fn(self.p, q, id, false, move |block| {
            terms
                .iter()
                .map(|t| {
                    t.coef
                        * t.factors
                            .iter()
                            .map(|f| block[f[0] as usize * q + f[1] as usize].powi(f[2] as i32))
                            .product::<f64>()
                })
                .sum()
        });
        symmetrize(&raw)
    }
}

/// Resolve a CLI kernel selector: a built-in name or a path to a JSON
/// kernel document.
pub fn resolve_kernel(selector: &str) -> Result<Kernel> {
    if let Ok(k) = builtin(selector) {
        return Ok(k);
    }
    let path = std::path::Path::new(selector);
    if selector.ends_with(".json") && path.exists() {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: selector.to_string(),
            source,
        })?;
        return ExprKernelSpec::from_json(&text)?.build();
    }
    Err(Error::UnknownKernel {
        name: selector.to_string(),
        valid: format!("{} or a .json kernel file", BUILTIN_NAMES.join(", ")),
    })
}
