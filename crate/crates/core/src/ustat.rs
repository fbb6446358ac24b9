//! U-statistic evaluation by submatrix enumeration.
//!
//! `u_naive` walks every (row-subset, column-subset) pair once, in
//! lexicographic order, and accumulates the kernel sum together with
//! per-row and per-column contribution sums (the raw material of the
//! variance estimators). Work is split over contiguous blocks of the
//! row-subset stream; blocks are merged in a fixed order so results are
//! bitwise identical for any thread count.

use rayon::prelude::*;

use crate::combinatorics::{binom_exact, binom_f64, SubsetIter};
use crate::error::Error;
use crate::kernels::Kernel;
use crate::matrix::BipartiteMatrix;
use crate::Result;

/// Refuse enumerations above this many kernel evaluations unless forced.
pub const DEFAULT_TERM_GUARD: u128 = 10_000_000_000;

/// Axis selector for leave-one-out operations.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    Row,
    Col,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct UStatOptions {
    /// Bypass the complexity guard.
    pub force: bool,
}

/// Output of one enumeration pass.
#[derive(Debug, Clone)]
pub struct UStatResult {
    /// The U-statistic U^h_{m,n}.
    pub value: f64,
    /// `row_sums[i]` = Σ h over submatrices whose row set contains i.
    pub row_sums: Vec<f64>,
    /// `col_sums[j]` = Σ h over submatrices whose column set contains j.
    pub col_sums: Vec<f64>,
    /// binom(m,p)·binom(n,q), exact.
    pub total_terms: u128,
    /// Sample standard deviation of the kernel values (scale for the
    /// degeneracy threshold downstream).
    pub kernel_scale: f64,
}

/// Neumaier compensated accumulator.
#[derive(Debug, Clone, Copy, Default)]
struct Compensated {
    sum: f64,
    comp: f64,
}

impl Compensated {
    #[inline]
    fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    fn value(self) -> f64 {
        self.sum + self.comp
    }
}

struct BlockAccum {
    sum: Compensated,
    sum_sq: Compensated,
    row_sums: Vec<f64>,
    col_sums: Vec<f64>,
}

/// U-statistic by full enumeration with default options.
pub fn u_naive(y: &BipartiteMatrix, h: &Kernel) -> Result<UStatResult> {
    u_naive_opts(y, h, UStatOptions::default())
}

pub fn u_naive_opts(y: &BipartiteMatrix, h: &Kernel, opts: UStatOptions) -> Result<UStatResult> {
    let (m, n) = (y.m(), y.n());
    let (p, q) = (h.p(), h.q());
    if m < p || n < q {
        return Err(Error::Size(format!(
            "matrix {m}×{n} too small for a {p}×{q} kernel"
        )));
    }
    if !h.is_symmetric() {
        return Err(Error::Contract(format!(
            "kernel {} is not symmetric; wrap it with symmetrize() first",
            h.id()
        )));
    }
    let row_count = binom_exact(m as u64, p as u64)?;
    let col_count = binom_exact(n as u64, q as u64)?;
    let total_terms = row_count
        .checked_mul(col_count)
        .ok_or_else(|| Error::Overflow(format!("binom({m},{p})·binom({n},{q})")))?;
    if total_terms > DEFAULT_TERM_GUARD && !opts.force {
        return Err(Error::Refused {
            what: format!("naive enumeration of {total_terms} terms"),
            reason: format!("exceeds the guard of {DEFAULT_TERM_GUARD}"),
        });
    }

    // Fixed block partition of the row-subset stream: the block layout
    // depends only on the problem size, so merges are deterministic
    // regardless of how many threads execute them.
    let n_blocks = row_count.min(256) as usize;
    let blocks: Vec<(u128, u128)> = (0..n_blocks)
        .map(|b| {
            let lo = row_count * b as u128 / n_blocks as u128;
            let hi = row_count * (b as u128 + 1) / n_blocks as u128;
            (lo, hi)
        })
        .collect();

    let partials: Result<Vec<BlockAccum>> = blocks
        .into_par_iter()
        .map(|(lo, hi)| -> Result<BlockAccum> {
            let mut acc = BlockAccum {
                sum: Compensated::default(),
                sum_sq: Compensated::default(),
                row_sums: vec![0.0; m],
                col_sums: vec![0.0; n],
            };
            let mut block_buf = vec![0.0; p * q];
            let row_iter = SubsetIter::from_rank(m, p, lo)?.take((hi - lo) as usize);
            for rows in row_iter {
                for cols in SubsetIter::new(n, q) {
                    let mut t = 0;
                    for &r in &rows {
                        for &c in &cols {
                            block_buf[t] = y.get(r, c);
                            t += 1;
                        }
                    }
                    let v = h.eval(&block_buf);
                    acc.sum.add(v);
                    acc.sum_sq.add(v * v);
                    for &r in &rows {
                        acc.row_sums[r] += v;
                    }
                    for &c in &cols {
                        acc.col_sums[c] += v;
                    }
                }
            }
            Ok(acc)
        })
        .collect();
    let partials = partials?;

    let mut sum = Compensated::default();
    let mut sum_sq = Compensated::default();
    let mut row_sums = vec![0.0; m];
    let mut col_sums = vec![0.0; n];
    for part in partials {
        sum.add(part.sum.value());
        sum_sq.add(part.sum_sq.value());
        for (dst, src) in row_sums.iter_mut().zip(&part.row_sums) {
            *dst += src;
        }
        for (dst, src) in col_sums.iter_mut().zip(&part.col_sums) {
            *dst += src;
        }
    }

    let count = total_terms as f64;
    let total = sum.value();
    let value = total / count;
    if !value.is_finite() {
        return Err(Error::Numeric(format!(
            "U-statistic for kernel {} is not finite",
            h.id()
        )));
    }
    let kernel_scale = if total_terms > 1 {
        let var = (sum_sq.value() - total * total / count) / (count - 1.0);
        var.max(0.0).sqrt()
    } else {
        0.0
    };
    Ok(UStatResult {
        value,
        row_sums,
        col_sums,
        total_terms,
        kernel_scale,
    })
}

/// Leave-one-out U-statistic from an already-computed enumeration.
///
/// U^{h,(−i,∅)} (or U^{h,(∅,−j)}) follows algebraically from the full sum
/// and the per-row (per-column) contribution sums; no re-enumeration.
pub fn u_leave_one_out(
    base: &UStatResult,
    y: &BipartiteMatrix,
    h: &Kernel,
    axis: Axis,
    index: usize,
) -> Result<f64> {
    let (m, n) = (y.m(), y.n());
    let (p, q) = (h.p(), h.q());
    let grand = base.value * base.total_terms as f64;
    match axis {
        Axis::Row => {
            if index >= m {
                return Err(Error::Bounds(format!("row {index} of {m}")));
            }
            if m - 1 < p {
                return Err(Error::Size(format!(
                    "cannot drop a row: {} rows left for a {p}-row kernel",
                    m - 1
                )));
            }
            let denom = binom_f64((m - 1) as u64, p as u64)? * binom_f64(n as u64, q as u64)?;
            Ok((grand - base.row_sums[index]) / denom)
        }
        Axis::Col => {
            if index >= n {
                return Err(Error::Bounds(format!("column {index} of {n}")));
            }
            if n - 1 < q {
                return Err(Error::Size(format!(
                    "cannot drop a column: {} columns left for a {q}-column kernel",
                    n - 1
                )));
            }
            let denom = binom_f64(m as u64, p as u64)? * binom_f64((n - 1) as u64, q as u64)?;
            Ok((grand - base.col_sums[index]) / denom)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::builtin;

    fn mat(m: usize, n: usize, v: Vec<f64>) -> BipartiteMatrix {
        BipartiteMatrix::new(m, n, v).unwrap()
    }

    #[test]
    fn hd_on_identity() {
        let y = mat(2, 2, vec![1.0, 0.0, 0.0, 1.0]);
        let r = u_naive(&y, &builtin("hD").unwrap()).unwrap();
        assert_eq!(r.value, 0.5);
        assert_eq!(r.total_terms, 4);
    }

    #[test]
    fn h1_direct_enumeration() {
        // Rows contribute 1 and 0; binom(2,1)·binom(2,2) = 2 terms.
        let y = mat(2, 2, vec![1.0, 1.0, 0.0, 0.0]);
        let r = u_naive(&y, &builtin("h1").unwrap()).unwrap();
        assert_eq!(r.value, 0.5);
    }

    #[test]
    fn h6_all_ones() {
        let y = mat(3, 3, vec![1.0; 9]);
        let r = u_naive(&y, &builtin("h6").unwrap()).unwrap();
        assert!((r.value - 1.0).abs() < 1e-12);
        assert_eq!(r.total_terms, 9);
    }

    #[test]
    fn row_and_col_sums_balance() {
        let y = mat(
            4,
            5,
            (0..20).map(|v| ((v * 7) % 5) as f64).collect::<Vec<_>>(),
        );
        for name in ["hD", "h1", "h2", "h6", "hC"] {
            let h = builtin(name).unwrap();
            let r = u_naive(&y, &h).unwrap();
            let grand = r.value * r.total_terms as f64;
            let row_total: f64 = r.row_sums.iter().sum();
            let col_total: f64 = r.col_sums.iter().sum();
            let rel = |a: f64, b: f64| (a - b).abs() / b.abs().max(1e-12);
            assert!(rel(row_total, h.p() as f64 * grand) < 1e-9, "{name} rows");
            assert!(rel(col_total, h.q() as f64 * grand) < 1e-9, "{name} cols");
        }
    }

    #[test]
    fn asymmetric_kernel_rejected() {
        let raw = crate::kernels::builtin_raw("h14").unwrap();
        let y = mat(3, 4, vec![1.0; 12]);
        assert!(matches!(u_naive(&y, &raw), Err(Error::Contract(_))));
    }

    #[test]
    fn too_small_matrix_rejected() {
        let y = mat(1, 3, vec![1.0, 0.0, 1.0]);
        assert!(matches!(
            u_naive(&y, &builtin("h2").unwrap()),
            Err(Error::Size(_))
        ));
    }

    #[test]
    fn leave_one_out_on_constant_matrix() {
        let y = mat(4, 4, vec![3.0; 16]);
        for name in ["hD", "h1", "h2"] {
            let h = builtin(name).unwrap();
            let base = u_naive(&y, &h).unwrap();
            for i in 0..4 {
                let v = u_leave_one_out(&base, &y, &h, Axis::Row, i).unwrap();
                assert!((v - base.value).abs() < 1e-10 * base.value.abs().max(1.0));
            }
        }
    }

    #[test]
    fn leave_one_out_drop_row_example() {
        let y = mat(2, 2, vec![1.0, 0.0, 0.0, 1.0]);
        let h = builtin("hD").unwrap();
        let base = u_naive(&y, &h).unwrap();
        let v = u_leave_one_out(&base, &y, &h, Axis::Row, 0).unwrap();
        assert_eq!(v, 0.5);
    }

    #[test]
    fn leave_one_out_matches_recomputation() {
        let vals: Vec<f64> = (0..36).map(|v| ((v * 13 + 5) % 7) as f64).collect();
        let y = mat(6, 6, vals);
        let h = builtin("h1").unwrap();
        let base = u_naive(&y, &h).unwrap();
        let algebraic = u_leave_one_out(&base, &y, &h, Axis::Row, 3).unwrap();
        let recomputed = u_naive(&y.drop_row(3).unwrap(), &h).unwrap().value;
        assert!((algebraic - recomputed).abs() < 1e-10 * recomputed.abs().max(1.0));
    }

    #[test]
    fn guard_refuses_huge_instances() {
        let y = mat(500, 500, vec![0.0; 250_000]);
        let h = builtin("h6").unwrap();
        assert!(matches!(u_naive(&y, &h), Err(Error::Refused { .. })));
    }
}
