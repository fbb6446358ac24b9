//! Whole-matrix fast paths for U-statistics.
//!
//! For product-form kernels the sum over all p×q submatrices collapses to a
//! handful of matrix aggregates (row/column sums, Gram matrices), turning an
//! O(N^{p+q}) enumeration into O(mn) work. Each fast path also supports
//! evaluation with one row or one column removed, via exact downdates of the
//! aggregates, which is what makes leave-one-out variance estimation cheap.

use crate::error::Error;
use crate::matrix::BipartiteMatrix;
use crate::Result;

/// Kernels with a whole-matrix evaluation shortcut.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FastPathId {
    HD,
    H1,
    HB,
    HC,
    H2,
    HA1,
    HA2,
    HA,
    H6,
}

impl FastPathId {
    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "hD" => Some(FastPathId::HD),
            "h1" => Some(FastPathId::H1),
            "hB" => Some(FastPathId::HB),
            "hC" => Some(FastPathId::HC),
            "h2" => Some(FastPathId::H2),
            "hA1" => Some(FastPathId::HA1),
            "hA2" => Some(FastPathId::HA2),
            "hA" => Some(FastPathId::HA),
            "h6" => Some(FastPathId::H6),
            _ => None,
        }
    }

    pub fn kernel_size(self) -> (usize, usize) {
        match self {
            FastPathId::HD => (1, 1),
            FastPathId::H1 | FastPathId::HB => (1, 2),
            FastPathId::HC => (2, 1),
            FastPathId::H2
            | FastPathId::HA1
            | FastPathId::HA2
            | FastPathId::HA
            | FastPathId::H6 => (2, 2),
        }
    }
}

/// Shared matrix aggregates.
struct Base {
    m: usize,
    n: usize,
    r: Vec<f64>,   // row sums
    c: Vec<f64>,   // column sums
    s2r: Vec<f64>, // row sums of y²
    s2c: Vec<f64>, // column sums of y²
    total: f64,
    total_sq: f64,
    sum_r_sq: f64,
    sum_c_sq: f64,
    yr_col: Vec<f64>, // (Yᵀr)_j
    yc_row: Vec<f64>, // (Y c)_i
}

impl Base {
    fn new(y: &BipartiteMatrix) -> Base {
        let (m, n) = (y.m(), y.n());
        let mut r = vec![0.0; m];
        let mut c = vec![0.0; n];
        let mut s2r = vec![0.0; m];
        let mut s2c = vec![0.0; n];
        for i in 0..m {
            for (j, &v) in y.row(i).iter().enumerate() {
                r[i] += v;
                c[j] += v;
                s2r[i] += v * v;
                s2c[j] += v * v;
            }
        }
        let total = r.iter().sum();
        let total_sq = s2r.iter().sum();
        let sum_r_sq = r.iter().map(|v| v * v).sum();
        let sum_c_sq = c.iter().map(|v| v * v).sum();
        let mut yr_col = vec![0.0; n];
        let mut yc_row = vec![0.0; m];
        for i in 0..m {
            for (j, &v) in y.row(i).iter().enumerate() {
                yr_col[j] += v * r[i];
                yc_row[i] += v * c[j];
            }
        }
        Base {
            m,
            n,
            r,
            c,
            s2r,
            s2c,
            total,
            total_sq,
            sum_r_sq,
            sum_c_sq,
            yr_col,
            yc_row,
        }
    }
}

/// Aggregates for hA1: kernel Y₁₁(Y₁₁−1)Y₂₂ symmetrized. With T = Y⊙(Y−1),
/// the unnormalized sum is Σ T_ij (S − r_i − c_j + y_ij).
struct A1Agg {
    x: f64,
    t_total: f64,
    tr: Vec<f64>,     // row sums of T
    tc: Vec<f64>,     // column sums of T
    tc_dot: Vec<f64>, // Σ_j T_kj c_j per row k
    tr_dot: Vec<f64>, // Σ_i T_ik r_i per column k
    ty_row: Vec<f64>, // Σ_j T_kj y_kj per row k
    ty_col: Vec<f64>, // Σ_i T_ik y_ik per column k
    ytc: Vec<f64>,    // Σ_j y_kj Tc_j per row k
    ytr: Vec<f64>,    // Σ_i y_ik Tr_i per column k
}

impl A1Agg {
    fn new(y: &BipartiteMatrix, base: &Base) -> A1Agg {
        let (m, n) = (base.m, base.n);
        let mut tr = vec![0.0; m];
        let mut tc = vec![0.0; n];
        let mut ty_row = vec![0.0; m];
        let mut ty_col = vec![0.0; n];
        let mut tc_dot = vec![0.0; m];
        let mut tr_dot = vec![0.0; n];
        for i in 0..m {
            for (j, &v) in y.row(i).iter().enumerate() {
                let t = v * (v - 1.0);
                tr[i] += t;
                tc[j] += t;
                ty_row[i] += t * v;
                ty_col[j] += t * v;
                tc_dot[i] += t * base.c[j];
                tr_dot[j] += t * base.r[i];
            }
        }
        let t_total: f64 = tr.iter().sum();
        let mut ytc = vec![0.0; m];
        let mut ytr = vec![0.0; n];
        let mut x = 0.0;
        for i in 0..m {
            for (j, &v) in y.row(i).iter().enumerate() {
                let t = v * (v - 1.0);
                ytc[i] += v * tc[j];
                ytr[j] += v * tr[i];
                x += t * (base.total - base.r[i] - base.c[j] + v);
            }
        }
        A1Agg {
            x,
            t_total,
            tr,
            tc,
            tc_dot,
            tr_dot,
            ty_row,
            ty_col,
            ytc,
            ytr,
        }
    }

    fn x_skip_row(&self, base: &Base, k: usize) -> f64 {
        self.x - self.tr[k] * (base.total - base.r[k]) + self.tc_dot[k] - 2.0 * self.ty_row[k]
            + self.ytc[k]
            - base.r[k] * (self.t_total - self.tr[k])
    }

    fn x_skip_col(&self, base: &Base, k: usize) -> f64 {
        self.x - self.tc[k] * (base.total - base.c[k]) + self.tr_dot[k] - 2.0 * self.ty_col[k]
            + self.ytr[k]
            - base.c[k] * (self.t_total - self.tc[k])
    }
}

/// Aggregates for hA2: kernel Y₁₁Y₁₂Y₂₂ symmetrized. The unnormalized sum is
/// Σ_i (r_i w_i − u_i − r_i s_i + t_i) with w_i = Σ_j y_ij c_j,
/// u_i = Σ_j y²_ij c_j, s_i = Σ_j y²_ij, t_i = Σ_j y³_ij.
struct A2Agg {
    x: f64,
    w: Vec<f64>,
    u: Vec<f64>,
    t3r: Vec<f64>,     // Σ_j y³ per row
    col3: Vec<f64>,    // Σ_i y³ per column
    pr: Vec<f64>,      // (Y Yᵀ r)_k
    ys2c: Vec<f64>,    // (Y s2c)_k per row
    yw_col: Vec<f64>,  // (Yᵀ w)_k per column
    zr_col: Vec<f64>,  // Σ_i y²_ik r_i per column
    ys_col: Vec<f64>,  // Σ_i y_ik s_i per column
}

impl A2Agg {
    fn new(y: &BipartiteMatrix, base: &Base) -> A2Agg {
        let (m, n) = (base.m, base.n);
        let mut w = vec![0.0; m];
        let mut u = vec![0.0; m];
        let mut t3r = vec![0.0; m];
        let mut col3 = vec![0.0; n];
        for i in 0..m {
            for (j, &v) in y.row(i).iter().enumerate() {
                w[i] += v * base.c[j];
                u[i] += v * v * base.c[j];
                t3r[i] += v * v * v;
                col3[j] += v * v * v;
            }
        }
        let mut x = 0.0;
        for i in 0..m {
            x += base.r[i] * w[i] - u[i] - base.r[i] * base.s2r[i] + t3r[i];
        }
        // (Y Yᵀ r)_k via two matrix-vector products.
        let mut ytr = vec![0.0; n];
        for i in 0..m {
            for (j, &v) in y.row(i).iter().enumerate() {
                ytr[j] += v * base.r[i];
            }
        }
        let mut pr = vec![0.0; m];
        let mut ys2c = vec![0.0; m];
        let mut yw_col = vec![0.0; n];
        let mut zr_col = vec![0.0; n];
        let mut ys_col = vec![0.0; n];
        for i in 0..m {
            for (j, &v) in y.row(i).iter().enumerate() {
                pr[i] += v * ytr[j];
                ys2c[i] += v * base.s2c[j];
                yw_col[j] += v * w[i];
                zr_col[j] += v * v * base.r[i];
                ys_col[j] += v * base.s2r[i];
            }
        }
        A2Agg {
            x,
            w,
            u,
            t3r,
            col3,
            pr,
            ys2c,
            yw_col,
            zr_col,
            ys_col,
        }
    }

    fn x_skip_row(&self, base: &Base, k: usize) -> f64 {
        let own = base.r[k] * self.w[k] - self.u[k] - base.r[k] * base.s2r[k] + self.t3r[k];
        self.x - own - (self.pr[k] - base.r[k] * base.s2r[k]) + (self.ys2c[k] - self.t3r[k])
    }

    fn x_skip_col(&self, base: &Base, k: usize) -> f64 {
        self.x - base.c[k] * base.yr_col[k] - self.yw_col[k]
            + 2.0 * base.c[k] * base.s2c[k]
            + self.zr_col[k]
            + self.ys_col[k]
            - 2.0 * self.col3[k]
    }
}

/// Aggregates for h6 (2×2 clique count). With P = YYᵀ, G = YᵀY and
/// Z = Y⊙², the unnormalized sum is Σ_{i1≠i2} (P² − (ZZᵀ))_{i1 i2}.
struct H6Agg {
    x: f64,
    frob_p: f64,
    diag_p_sq: f64, // Σ_i P_ii²
    q_total: f64,   // |ZZᵀ|₁ = Σ_j s2c_j²
    q_trace: f64,   // Σ y⁴
    colsq_p: Vec<f64>,
    colsq_g: Vec<f64>,
    colsum_q: Vec<f64>, // Σ_i (ZZᵀ)_ik = (Z s2c)_k
    row4: Vec<f64>,     // Σ_j y⁴ per row
    col4: Vec<f64>,     // Σ_i y⁴ per column
    zs2r_col: Vec<f64>, // Σ_i y²_ik s2r_i per column
}

impl H6Agg {
    fn new(y: &BipartiteMatrix, base: &Base) -> H6Agg {
        let (m, n) = (base.m, base.n);
        // P = YYᵀ (m×m).
        let mut p = vec![0.0; m * m];
        for i1 in 0..m {
            let row1 = y.row(i1);
            for i2 in i1..m {
                let row2 = y.row(i2);
                let dot: f64 = row1.iter().zip(row2).map(|(a, b)| a * b).sum();
                p[i1 * m + i2] = dot;
                p[i2 * m + i1] = dot;
            }
        }
        // G = YᵀY (n×n).
        let mut g = vec![0.0; n * n];
        for i in 0..m {
            let row = y.row(i);
            for j1 in 0..n {
                let v1 = row[j1];
                if v1 == 0.0 {
                    continue;
                }
                for j2 in 0..n {
                    g[j1 * n + j2] += v1 * row[j2];
                }
            }
        }
        let frob_p: f64 = p.iter().map(|v| v * v).sum();
        let diag_p_sq: f64 = (0..m).map(|i| p[i * m + i] * p[i * m + i]).sum();
        let mut colsq_p = vec![0.0; m];
        for i1 in 0..m {
            for i2 in 0..m {
                colsq_p[i2] += p[i1 * m + i2] * p[i1 * m + i2];
            }
        }
        let mut colsq_g = vec![0.0; n];
        for j1 in 0..n {
            for j2 in 0..n {
                colsq_g[j2] += g[j1 * n + j2] * g[j1 * n + j2];
            }
        }
        let q_total: f64 = base.s2c.iter().map(|v| v * v).sum();
        let mut row4 = vec![0.0; m];
        let mut col4 = vec![0.0; n];
        let mut colsum_q = vec![0.0; m];
        let mut zs2r_col = vec![0.0; n];
        for i in 0..m {
            for (j, &v) in y.row(i).iter().enumerate() {
                let v2 = v * v;
                row4[i] += v2 * v2;
                col4[j] += v2 * v2;
                colsum_q[i] += v2 * base.s2c[j];
                zs2r_col[j] += v2 * base.s2r[i];
            }
        }
        let q_trace: f64 = row4.iter().sum();
        let x = (frob_p - diag_p_sq) - (q_total - q_trace);
        H6Agg {
            x,
            frob_p,
            diag_p_sq,
            q_total,
            q_trace,
            colsq_p,
            colsq_g,
            colsum_q,
            row4,
            col4,
            zs2r_col,
        }
    }

    fn x_skip_row(&self, base: &Base, k: usize) -> f64 {
        let pkk = base.s2r[k];
        let frob = self.frob_p - 2.0 * self.colsq_p[k] + pkk * pkk;
        let diag = self.diag_p_sq - pkk * pkk;
        let q_tot = self.q_total - 2.0 * self.colsum_q[k] + self.row4[k];
        let q_tr = self.q_trace - self.row4[k];
        (frob - diag) - (q_tot - q_tr)
    }

    fn x_skip_col(&self, base: &Base, k: usize) -> f64 {
        let s = base.s2c[k];
        let frob = self.frob_p - 2.0 * self.colsq_g[k] + s * s;
        let diag = self.diag_p_sq - 2.0 * self.zs2r_col[k] + self.col4[k];
        let q_tot = self.q_total - s * s;
        let q_tr = self.q_trace - self.col4[k];
        (frob - diag) - (q_tot - q_tr)
    }
}

enum Inner {
    Plain,
    A1(A1Agg),
    A2(A2Agg),
    A(A1Agg, A2Agg),
    Clique(H6Agg),
}

/// Precomputed fast-path state for one kernel on one matrix.
pub struct FastStats {
    id: FastPathId,
    base: Base,
    inner: Inner,
}

impl FastStats {
    pub fn new(y: &BipartiteMatrix, id: FastPathId) -> Result<FastStats> {
        let (p, q) = id.kernel_size();
        if y.m() < p || y.n() < q {
            return Err(Error::Size(format!(
                "matrix {}×{} too small for a {p}×{q} kernel",
                y.m(),
                y.n()
            )));
        }
        let base = Base::new(y);
        let inner = match id {
            FastPathId::HD
            | FastPathId::H1
            | FastPathId::HB
            | FastPathId::HC
            | FastPathId::H2 => Inner::Plain,
            FastPathId::HA1 => Inner::A1(A1Agg::new(y, &base)),
            FastPathId::HA2 => Inner::A2(A2Agg::new(y, &base)),
            FastPathId::HA => Inner::A(A1Agg::new(y, &base), A2Agg::new(y, &base)),
            FastPathId::H6 => Inner::Clique(H6Agg::new(y, &base)),
        };
        Ok(FastStats { id, base, inner })
    }

    pub fn id(&self) -> FastPathId {
        self.id
    }

    fn normalize(&self, x: f64, m: usize, n: usize) -> f64 {
        let (mf, nf) = (m as f64, n as f64);
        match self.id {
            FastPathId::HD => x / (mf * nf),
            FastPathId::H1 | FastPathId::HB => x / (mf * nf * (nf - 1.0)),
            FastPathId::HC => x / (nf * mf * (mf - 1.0)),
            FastPathId::H2
            | FastPathId::HA1
            | FastPathId::HA2
            | FastPathId::HA
            | FastPathId::H6 => x / (mf * (mf - 1.0) * nf * (nf - 1.0)),
        }
    }

    fn x_full(&self) -> f64 {
        let b = &self.base;
        match (&self.inner, self.id) {
            (Inner::Plain, FastPathId::HD) => b.total,
            (Inner::Plain, FastPathId::H1) | (Inner::Plain, FastPathId::HB) => {
                b.sum_r_sq - b.total_sq
            }
            (Inner::Plain, FastPathId::HC) => b.sum_c_sq - b.total_sq,
            (Inner::Plain, FastPathId::H2) => {
                b.total * b.total - b.sum_r_sq - b.sum_c_sq + b.total_sq
            }
            (Inner::A1(a), _) => a.x,
            (Inner::A2(a), _) => a.x,
            (Inner::A(a1, a2), _) => a1.x - 2.0 * a2.x,
            (Inner::Clique(a), _) => a.x,
            _ => unreachable!(),
        }
    }

    /// U-statistic on the full matrix.
    pub fn u_full(&self) -> f64 {
        self.normalize(self.x_full(), self.base.m, self.base.n)
    }

    /// U-statistic with row `k` removed.
    pub fn u_skip_row(&self, k: usize) -> f64 {
        let b = &self.base;
        let x = match (&self.inner, self.id) {
            (Inner::Plain, FastPathId::HD) => b.total - b.r[k],
            (Inner::Plain, FastPathId::H1) | (Inner::Plain, FastPathId::HB) => {
                b.sum_r_sq - b.total_sq - (b.r[k] * b.r[k] - b.s2r[k])
            }
            (Inner::Plain, FastPathId::HC) => {
                // Column sums lose y_kj: Σc'² = Σc² − 2(Yc)_k + s2r_k.
                let sum_c_sq = b.sum_c_sq - 2.0 * b.yc_row[k] + b.s2r[k];
                let total_sq = b.total_sq - b.s2r[k];
                sum_c_sq - total_sq
            }
            (Inner::Plain, FastPathId::H2) => {
                let total = b.total - b.r[k];
                let sum_r_sq = b.sum_r_sq - b.r[k] * b.r[k];
                let sum_c_sq = b.sum_c_sq - 2.0 * b.yc_row[k] + b.s2r[k];
                let total_sq = b.total_sq - b.s2r[k];
                total * total - sum_r_sq - sum_c_sq + total_sq
            }
            (Inner::A1(a), _) => a.x_skip_row(b, k),
            (Inner::A2(a), _) => a.x_skip_row(b, k),
            (Inner::A(a1, a2), _) => a1.x_skip_row(b, k) - 2.0 * a2.x_skip_row(b, k),
            (Inner::Clique(a), _) => a.x_skip_row(b, k),
            _ => unreachable!(),
        };
        self.normalize(x, self.base.m - 1, self.base.n)
    }

    /// U-statistic with column `k` removed.
    pub fn u_skip_col(&self, k: usize) -> f64 {
        let b = &self.base;
        let x = match (&self.inner, self.id) {
            (Inner::Plain, FastPathId::HD) => b.total - b.c[k],
            (Inner::Plain, FastPathId::H1) | (Inner::Plain, FastPathId::HB) => {
                b.sum_r_sq - b.total_sq - 2.0 * b.yr_col[k] + 2.0 * b.s2c[k]
            }
            (Inner::Plain, FastPathId::HC) => {
                b.sum_c_sq - b.total_sq - (b.c[k] * b.c[k] - b.s2c[k])
            }
            (Inner::Plain, FastPathId::H2) => {
                let total = b.total - b.c[k];
                let sum_r_sq = b.sum_r_sq - 2.0 * b.yr_col[k] + b.s2c[k];
                let sum_c_sq = b.sum_c_sq - b.c[k] * b.c[k];
                let total_sq = b.total_sq - b.s2c[k];
                total * total - sum_r_sq - sum_c_sq + total_sq
            }
            (Inner::A1(a), _) => a.x_skip_col(b, k),
            (Inner::A2(a), _) => a.x_skip_col(b, k),
            (Inner::A(a1, a2), _) => a1.x_skip_col(b, k) - 2.0 * a2.x_skip_col(b, k),
            (Inner::Clique(a), _) => a.x_skip_col(b, k),
            _ => unreachable!(),
        };
        self.normalize(x, self.base.m, self.base.n - 1)
    }
}

/// Whole-matrix U-statistic for a supported kernel id.
///
/// `h1`, `h2`, `hB`, `hC`, `hD` are the documented matrix-operation paths;
/// `hA`, `hA1`, `hA2` and `h6` use the same machinery. Other kernels (h14 in
/// particular) have no known shortcut and must go through naive enumeration.
pub fn u_fast(y: &BipartiteMatrix, kernel_id: &str) -> Result<f64> {
    let id = FastPathId::from_name(kernel_id).ok_or_else(|| {
        Error::Contract(format!(
            "kernel {kernel_id:?} has no fast path; use the naive enumeration"
        ))
    })?;
    let stats = FastStats::new(y, id)?;
    let v = stats.u_full();
    if !v.is_finite() {
        return Err(Error::Numeric(format!(
            "fast path for {kernel_id} produced a non-finite value"
        )));
    }
    Ok(v)
}
