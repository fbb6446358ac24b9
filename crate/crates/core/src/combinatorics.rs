//! Exact binomial coefficients and lexicographic subset enumeration.

use crate::error::Error;
use crate::matrix::IndexSet;
use crate::Result;

/// Exact binomial coefficient in 128-bit arithmetic.
///
/// Uses the multiplicative form with exact intermediate division, so every
/// intermediate value is itself a binomial coefficient times a small factor.
/// Returns 0 when `k > n` and an explicit overflow error instead of wrapping
/// when the result (or an intermediate product) exceeds `u128`.
pub fn binom_exact(n: u64, k: u64) -> Result<u128> {
    if k > n {
        return Ok(0);
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 1..=k {
        // acc = acc * (n - k + i) / i, exact at every step
        let factor = (n - k + i) as u128;
        acc = acc
            .checked_mul(factor)
            .ok_or_else(|| Error::Overflow(format!("binomial({n}, {k}) exceeds 128 bits")))?;
        acc /= i as u128;
    }
    Ok(acc)
}

/// `binom_exact` as `f64`, for normalizing U-statistics.
pub fn binom_f64(n: u64, k: u64) -> Result<f64> {
    Ok(binom_exact(n, k)? as f64)
}

/// Iterator over all k-subsets of `{0, .., dim-1}` in lexicographic order.
///
/// Restartable from any rank, which lets callers split the stream into
/// contiguous blocks for parallel work. `k > dim` yields an empty stream;
/// `k = 0` yields the single empty set.
#[derive(Debug, Clone)]
pub struct SubsetIter {
    dim: usize,
    k: usize,
    current: Option<Vec<usize>>,
}

impl SubsetIter {
    pub fn new(dim: usize, k: usize) -> Self {
        let current = if k <= dim {
            Some((0..k).collect())
        } else {
            None
        };
        SubsetIter { dim, k, current }
    }

    /// Start at the subset of lexicographic rank `rank` (0-based).
    pub fn from_rank(dim: usize, k: usize, rank: u128) -> Result<Self> {
        let total = binom_exact(dim as u64, k as u64)?;
        if rank >= total {
            return Ok(SubsetIter {
                dim,
                k,
                current: None,
            });
        }
        Ok(SubsetIter {
            dim,
            k,
            current: Some(unrank(dim, k, rank)?),
        })
    }

    fn advance(&mut self) {
        let indices = match &mut self.current {
            Some(v) => v,
            None => return,
        };
        if self.k == 0 {
            self.current = None;
            return;
        }
        // Rightmost element that can still move right.
        let mut pos = self.k;
        while pos > 0 {
            pos -= 1;
            if indices[pos] < self.dim - (self.k - pos) {
                indices[pos] += 1;
                for later in pos + 1..self.k {
                    indices[later] = indices[later - 1] + 1;
                }
                return;
            }
        }
        self.current = None;
    }
}

impl Iterator for SubsetIter {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        let out = self.current.clone();
        if out.is_some() {
            self.advance();
        }
        out
    }
}

/// Subset of lexicographic rank `rank` among k-subsets of `{0, .., dim-1}`.
fn unrank(dim: usize, k: usize, mut rank: u128) -> Result<Vec<usize>> {
    let mut out = Vec::with_capacity(k);
    let mut next_candidate = 0usize;
    for slot in 0..k {
        let remaining = k - slot - 1;
        let mut value = next_candidate;
        loop {
            // Number of subsets starting with `value` in this slot.
            let block = binom_exact((dim - value - 1) as u64, remaining as u64)?;
            if rank < block {
                break;
            }
            rank -= block;
            value += 1;
        }
        out.push(value);
        next_candidate = value + 1;
    }
    Ok(out)
}

/// All k-subsets of `{0, .., dim-1}` as [`IndexSet`]s, lexicographic order.
pub fn enumerate_subsets(dim: usize, k: usize) -> impl Iterator<Item = IndexSet> {
    SubsetIter::new(dim, k).map(|v| IndexSet::new_unchecked(v))
}
