//! Studentized estimation, confidence intervals and network comparison.
//!
//! Every statistic here is a U-statistic or a smooth function of a vector
//! of U-statistics; variances come from the conditional-mean machinery in
//! [`crate::varest`], and studentized values are referred to the standard
//! normal limit.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::Serialize;
use serde_json::json;

use crate::error::Error;
use crate::kernels::{builtin, Kernel};
use crate::matrix::BipartiteMatrix;
use crate::ustat::Axis;
use crate::varest::{
    covariance_estimate, kernel_stats, v_hats, CovarianceEstimate, RhoPolicy,
    DEGENERACY_RELATIVE,
};
use crate::Result;

/// Standard normal quantile, Wichura's AS 241 rational approximation
/// (absolute error well below 1e-10 over (0,1)).
pub fn normal_quantile(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::Validation(format!(
            "quantile argument must lie in (0,1), got {p}"
        )));
    }
    let q = p - 0.5;
    if q.abs() <= 0.425 {
        let r = 0.180625 - q * q;
        let num = q
            * (((((((2.509_080_928_730_122_7e3 * r + 3.343_057_558_358_812_8e4) * r
                + 6.726_577_092_700_870_1e4)
                * r
                + 4.592_195_393_154_987e4)
                * r
                + 1.373_169_376_550_946_1e4)
                * r
                + 1.971_590_950_306_551_3e3)
                * r
                + 1.331_416_678_917_843_8e2)
                * r
                + 3.387_132_872_796_366_5);
        let den = ((((((5.226_495_278_852_545_5e3 * r + 2.872_908_573_572_194_3e4) * r
            + 3.930_789_580_009_271e4)
            * r
            + 2.121_379_430_158_659_7e4)
            * r
            + 5.394_196_021_424_751e3)
            * r
            + 6.871_870_074_920_579e2)
            * r
            + 4.231_333_070_160_091e1)
            * r
            + 1.0;
        return Ok(num / den);
    }
    let r = if q < 0.0 { p } else { 1.0 - p };
    let mut r = (-r.ln()).sqrt();
    let value = if r <= 5.0 {
        r -= 1.6;
        let num = ((((((7.745_450_142_783_414e-4 * r + 2.272_384_498_926_918_4e-2) * r
            + 2.417_807_251_774_506e-1)
            * r
            + 1.270_458_252_452_368_4)
            * r
            + 3.647_848_324_763_204_5)
            * r
            + 5.769_497_221_460_691)
            * r
            + 4.630_337_846_156_545)
            * r
            + 1.423_437_110_749_683_5;
        let den = ((((((1.050_750_071_644_416_9e-9 * r + 5.475_938_084_995_345e-4) * r
            + 1.519_866_656_361_645_7e-2)
            * r
            + 1.481_039_764_274_800_8e-1)
            * r
            + 6.897_673_349_851e-1)
            * r
            + 1.676_384_830_183_803_8)
            * r
            + 2.053_191_626_637_758_8)
            * r
            + 1.0;
        num / den
    } else {
        r -= 5.0;
        let num = ((((((2.010_334_399_292_288_1e-7 * r + 2.711_555_568_743_487_6e-5) * r
            + 1.242_660_947_388_078_4e-3)
            * r
            + 2.653_218_952_657_612_4e-2)
            * r
            + 2.965_605_718_285_048_7e-1)
            * r
            + 1.784_826_539_917_291_3)
            * r
            + 5.463_784_911_164_114)
            * r
            + 6.657_904_643_501_103;
        let den = ((((((2.044_263_103_389_939_7e-15 * r + 1.421_511_758_316_446e-7) * r
            + 1.846_318_317_510_054_8e-5)
            * r
            + 7.868_691_311_456_133e-4)
            * r
            + 1.487_536_129_085_061_5e-2)
            * r
            + 1.369_298_809_227_358e-1)
            * r
            + 5.998_322_065_558_88e-1)
            * r
            + 1.0;
        num / den
    };
    Ok(if q < 0.0 { -value } else { value })
}

/// Standard normal CDF via the complementary error function.
pub fn normal_cdf(z: f64) -> f64 {
    0.5 * statrs::function::erf::erfc(-z / std::f64::consts::SQRT_2)
}

/// Two-sided tail probability of |Z| ≥ |z| under the standard normal.
pub fn two_sided_p(z: f64) -> f64 {
    statrs::function::erf::erfc(z.abs() / std::f64::consts::SQRT_2)
}

/// One-sided upper tail P(Z ≥ z).
pub fn one_sided_p(z: f64) -> f64 {
    0.5 * statrs::function::erf::erfc(z / std::f64::consts::SQRT_2)
}

/// estimate ± z_{1−α/2}·sqrt(V/N).
pub fn confidence_interval(estimate: f64, v: f64, n_total: usize, alpha: f64) -> Result<(f64, f64)> {
    if v < 0.0 {
        return Err(Error::Numeric(format!(
            "variance must be nonnegative, got {v}"
        )));
    }
    if n_total == 0 {
        return Err(Error::Validation("N must be at least 1".into()));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Validation(format!(
            "alpha must lie in (0,1), got {alpha}"
        )));
    }
    if v == 0.0 {
        return Ok((estimate, estimate));
    }
    let half = normal_quantile(1.0 - alpha / 2.0)? * (v / n_total as f64).sqrt();
    Ok((estimate - half, estimate + half))
}

/// One estimation/testing result, CLI- and JSON-friendly.
#[derive(Debug, Clone, Serialize)]
pub struct EstimateReport {
    pub statistic_id: String,
    pub estimate: f64,
    pub variance: f64,
    pub n_total: usize,
    pub alpha: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub z: Option<f64>,
    pub p_value: Option<f64>,
    pub degenerate: bool,
    pub metadata: BTreeMap<String, serde_json::Value>,
}

impl EstimateReport {
    fn new(
        statistic_id: impl Into<String>,
        estimate: f64,
        variance: f64,
        n_total: usize,
        alpha: f64,
        degenerate: bool,
    ) -> Result<EstimateReport> {
        let (ci_lo, ci_hi) = if degenerate {
            (estimate, estimate)
        } else {
            confidence_interval(estimate, variance, n_total, alpha)?
        };
        Ok(EstimateReport {
            statistic_id: statistic_id.into(),
            estimate,
            variance,
            n_total,
            alpha,
            ci_lo,
            ci_hi,
            z: None,
            p_value: None,
            degenerate,
            metadata: BTreeMap::new(),
        })
    }

    fn with_null(mut self, null_value: f64, one_sided: bool) -> Result<EstimateReport> {
        if self.degenerate || self.variance <= 0.0 {
            return Err(Error::Degenerate(format!(
                "statistic {} has a degenerate variance estimate; \
                 a studentized test against {null_value} is not defined",
                self.statistic_id
            )));
        }
        let z = (self.n_total as f64 / self.variance).sqrt() * (self.estimate - null_value);
        self.z = Some(z);
        self.p_value = Some(if one_sided {
            one_sided_p(z)
        } else {
            two_sided_p(z)
        });
        self.metadata.insert("null_value".into(), json!(null_value));
        Ok(self)
    }

    fn note(&mut self, key: &str, value: serde_json::Value) {
        self.metadata.insert(key.into(), value);
    }
}

fn base_metadata(y: &BipartiteMatrix, rho: f64, kernels: &[&str]) -> BTreeMap<String, serde_json::Value> {
    let mut meta = BTreeMap::new();
    meta.insert("m".into(), json!(y.m()));
    meta.insert("n".into(), json!(y.n()));
    meta.insert("rho".into(), json!(rho));
    meta.insert("kernels".into(), json!(kernels));
    meta.insert("covariance_weighting".into(), json!("per_kernel_pq"));
    meta
}

/// Studentized U-statistic against a null value.
pub fn studentized(
    y: &BipartiteMatrix,
    h: &Kernel,
    null_value: f64,
    rho_policy: RhoPolicy,
    alpha: f64,
) -> Result<EstimateReport> {
    let stats = kernel_stats(y, h)?;
    let rho = rho_policy.resolve(y.m(), y.n())?;
    let (v10, v01) = v_hats(&stats.mu, &stats.nu)?;
    let (p, q) = (h.p() as f64, h.q() as f64);
    let v = p * p / rho * v10 + q * q / (1.0 - rho) * v01;
    let degenerate = v <= DEGENERACY_RELATIVE * stats.scale * stats.scale;
    let n_total = y.m() + y.n();
    let mut report = EstimateReport::new(h.id(), stats.u, v, n_total, alpha, degenerate)?;
    report.metadata = base_metadata(y, rho, &[h.id()]);
    report.with_null(null_value, false)
}

/// A smooth function of several U-statistics with its analytic gradient.
#[derive(Clone)]
pub struct DeltaSpec {
    pub kernels: Vec<Kernel>,
    pub id: String,
    pub g: Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>,
    pub grad: Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>,
}

impl DeltaSpec {
    pub fn new<G, D>(id: impl Into<String>, kernels: Vec<Kernel>, g: G, grad: D) -> DeltaSpec
    where
        G: Fn(&[f64]) -> f64 + Send + Sync + 'static,
        D: Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    {
        DeltaSpec {
            kernels,
            id: id.into(),
            g: Arc::new(g),
            grad: Arc::new(grad),
        }
    }

    /// κ(u₁,u₂) = u₁/u₂, the ratio used by the heterogeneity statistics.
    pub fn ratio(kernels: Vec<Kernel>, id: impl Into<String>) -> DeltaSpec {
        DeltaSpec::new(
            id,
            kernels,
            |u| u[0] / u[1],
            |u| vec![1.0 / u[1], -u[0] / (u[1] * u[1])],
        )
    }

    /// t(a,b,c,d) = a/d³ + b·c/d⁴, the graphon product-distance statistic.
    pub fn product_distance() -> Result<DeltaSpec> {
        Ok(DeltaSpec::new(
            "d",
            vec![builtin("hA")?, builtin("hB")?, builtin("hC")?, builtin("hD")?],
            |u| u[0] / u[3].powi(3) + u[1] * u[2] / u[3].powi(4),
            |u| {
                let (a, b, c, d) = (u[0], u[1], u[2], u[3]);
                vec![
                    1.0 / d.powi(3),
                    c / d.powi(4),
                    b / d.powi(4),
                    -3.0 * a / d.powi(4) - 4.0 * b * c / d.powi(5),
                ]
            },
        ))
    }
}

/// Verify an analytic gradient against central finite differences.
pub fn check_gradient(spec: &DeltaSpec, point: &[f64], rel_tol: f64) -> Result<()> {
    let grad = (spec.grad)(point);
    for k in 0..point.len() {
        let step = 1e-5 * point[k].abs().max(1.0);
        let mut hi = point.to_vec();
        let mut lo = point.to_vec();
        hi[k] += step;
        lo[k] -= step;
        let fd = ((spec.g)(&hi) - (spec.g)(&lo)) / (2.0 * step);
        let denom = grad[k].abs().max(fd.abs()).max(1e-12);
        if ((grad[k] - fd) / denom).abs() > rel_tol {
            return Err(Error::Numeric(format!(
                "gradient component {k} of {} disagrees with finite differences: {} vs {fd}",
                spec.id, grad[k]
            )));
        }
    }
    Ok(())
}

fn delta_variance(cov: &CovarianceEstimate, grad: &[f64]) -> (f64, f64) {
    let v = cov.quadratic_form(grad);
    let scale: f64 = grad
        .iter()
        .zip(&cov.kernel_scales)
        .map(|(g, s)| g.abs() * s)
        .sum();
    (v, scale)
}

/// Delta-method estimate for a function of U-statistics.
pub fn delta_estimate(
    y: &BipartiteMatrix,
    spec: &DeltaSpec,
    rho_policy: RhoPolicy,
    alpha: f64,
) -> Result<EstimateReport> {
    let cov = covariance_estimate(y, &spec.kernels, rho_policy)?;
    let estimate = (spec.g)(&cov.u_values);
    if !estimate.is_finite() {
        return Err(Error::Numeric(format!(
            "statistic {} is not finite at the observed U-statistics",
            spec.id
        )));
    }
    let grad = (spec.grad)(&cov.u_values);
    let (v, scale) = delta_variance(&cov, &grad);
    if v <= DEGENERACY_RELATIVE * scale * scale {
        return Err(Error::Degenerate(format!(
            "the variance of {} along its gradient direction is zero",
            spec.id
        )));
    }
    let n_total = y.m() + y.n();
    let mut report = EstimateReport::new(&spec.id, estimate, v, n_total, alpha, false)?;
    let ids: Vec<&str> = cov.kernel_ids.iter().map(|s| s.as_str()).collect();
    report.metadata = base_metadata(y, cov.rho, &ids);
    report.note("u_values", json!(cov.u_values));
    Ok(report)
}

/// Row (F̂₂) or column (Ĝ₂) heterogeneity report.
///
/// F̂₂ = U^{h1}/U^{h2}; its variance uses the expanded gradient formula
/// (V̂₁ − 2F̂₂Ĉ₁₂ + F̂₂²V̂₂)/U₂². Degenerate variance is reported, not an
/// error: a perfectly homogeneous network legitimately has F̂₂ = 1 with no
/// sampling noise in the ratio direction.
pub fn f2_report(
    y: &BipartiteMatrix,
    axis: Axis,
    rho_policy: RhoPolicy,
    alpha: f64,
    null_value: Option<f64>,
) -> Result<EstimateReport> {
    let (num_kernel, id) = match axis {
        Axis::Row => (builtin("h1")?, "f2"),
        Axis::Col => (builtin("hC")?, "g2"),
    };
    let kernels = vec![num_kernel, builtin("h2")?];
    let cov = covariance_estimate(y, &kernels, rho_policy)?;
    let (u1, u2) = (cov.u_values[0], cov.u_values[1]);
    if u2 <= 0.0 {
        return Err(Error::Numeric(format!(
            "U^h2 = {u2}; the heterogeneity ratio is undefined on an empty network"
        )));
    }
    let ratio = u1 / u2;
    let v = (cov.sigma[0][0] - 2.0 * ratio * cov.sigma[0][1] + ratio * ratio * cov.sigma[1][1])
        / (u2 * u2);
    let grad_scale =
        cov.kernel_scales[0] / u2 + (u1 / (u2 * u2)).abs() * cov.kernel_scales[1];
    let degenerate = v <= DEGENERACY_RELATIVE * grad_scale * grad_scale;
    let n_total = y.m() + y.n();
    let mut report = EstimateReport::new(id, ratio, v.max(0.0), n_total, alpha, degenerate)?;
    let ids: Vec<&str> = cov.kernel_ids.iter().map(|s| s.as_str()).collect();
    report.metadata = base_metadata(y, cov.rho, &ids);
    report.note("u_values", json!(cov.u_values));
    match null_value {
        Some(t) => report.with_null(t, false),
        None => Ok(report),
    }
}

/// Graphon product-distance report d̂ = U^{hA}/U^{hD}³ + U^{hB}U^{hC}/U^{hD}⁴.
pub fn d_report(
    y: &BipartiteMatrix,
    rho_policy: RhoPolicy,
    alpha: f64,
    null_value: Option<f64>,
) -> Result<EstimateReport> {
    let spec = DeltaSpec::product_distance()?;
    let cov = covariance_estimate(y, &spec.kernels, rho_policy)?;
    let u = &cov.u_values;
    if u[3] <= 0.0 {
        return Err(Error::Numeric(format!(
            "U^hD = {}; the product distance is undefined on an empty network",
            u[3]
        )));
    }
    let estimate = (spec.g)(u);
    let grad = (spec.grad)(u);
    let (v, scale) = delta_variance(&cov, &grad);
    let degenerate = v <= DEGENERACY_RELATIVE * scale * scale;
    let n_total = y.m() + y.n();
    let mut report = EstimateReport::new("d", estimate, v.max(0.0), n_total, alpha, degenerate)?;
    let ids: Vec<&str> = cov.kernel_ids.iter().map(|s| s.as_str()).collect();
    report.metadata = base_metadata(y, cov.rho, &ids);
    report.note("u_values", json!(cov.u_values));
    if y.is_binary() {
        report.note(
            "warning",
            json!(
                "matrix is binary: the hA factorial moment Y(Y−1) targets count \
                 (Poisson-type) data, interpret d with care"
            ),
        );
    }
    match null_value {
        Some(t) => report.with_null(t, false),
        None => Ok(report),
    }
}

/// Motif frequency report (motif 6 = 2×2 clique, motif 14 = 2×3 path).
pub fn motif_report(
    y: &BipartiteMatrix,
    motif: u32,
    rho_policy: RhoPolicy,
    alpha: f64,
    null_value: Option<f64>,
) -> Result<EstimateReport> {
    if !y.is_binary() {
        return Err(Error::Validation(
            "motif frequencies are defined for binary matrices only".into(),
        ));
    }
    let h = match motif {
        6 => builtin("h6")?,
        14 => builtin("h14")?,
        other => {
            return Err(Error::Validation(format!(
                "unsupported motif {other}; available motifs: 6, 14"
            )))
        }
    };
    let stats = kernel_stats(y, &h)?;
    let rho = rho_policy.resolve(y.m(), y.n())?;
    let (v10, v01) = v_hats(&stats.mu, &stats.nu)?;
    let (p, q) = (h.p() as f64, h.q() as f64);
    let v = p * p / rho * v10 + q * q / (1.0 - rho) * v01;
    let degenerate = v <= DEGENERACY_RELATIVE * stats.scale * stats.scale;
    let n_total = y.m() + y.n();
    let mut report = EstimateReport::new(
        format!("motif{motif}"),
        stats.u,
        v,
        n_total,
        alpha,
        degenerate,
    )?;
    report.metadata = base_metadata(y, rho, &[h.id()]);
    match null_value {
        Some(t) => report.with_null(t, false),
        None => Ok(report),
    }
}

/// Which statistic a comparison refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StatisticId {
    Motif6,
    Motif14,
    F2,
    G2,
    D,
}

impl StatisticId {
    pub fn parse(s: &str) -> Result<StatisticId> {
        match s {
            "motif6" => Ok(StatisticId::Motif6),
            "motif14" => Ok(StatisticId::Motif14),
            "f2" => Ok(StatisticId::F2),
            "g2" => Ok(StatisticId::G2),
            "d" => Ok(StatisticId::D),
            other => Err(Error::Config(format!(
                "unknown statistic {other:?}; expected f2, g2, d, motif6 or motif14"
            ))),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            StatisticId::Motif6 => "motif6",
            StatisticId::Motif14 => "motif14",
            StatisticId::F2 => "f2",
            StatisticId::G2 => "g2",
            StatisticId::D => "d",
        }
    }
}

/// Estimate one named statistic on one network.
pub fn statistic_report(
    y: &BipartiteMatrix,
    stat: StatisticId,
    rho_policy: RhoPolicy,
    alpha: f64,
    null_value: Option<f64>,
) -> Result<EstimateReport> {
    match stat {
        StatisticId::Motif6 => motif_report(y, 6, rho_policy, alpha, null_value),
        StatisticId::Motif14 => motif_report(y, 14, rho_policy, alpha, null_value),
        StatisticId::F2 => f2_report(y, Axis::Row, rho_policy, alpha, null_value),
        StatisticId::G2 => f2_report(y, Axis::Col, rho_policy, alpha, null_value),
        StatisticId::D => d_report(y, rho_policy, alpha, null_value),
    }
}

/// Two-network comparison test for a shared statistic.
///
/// The squared standard error scales each variance by its own network's
/// N (V̂ᴬ/Nᴬ + V̂ᴮ/Nᴮ), which reduces to the single-N form when the sizes
/// match. The reported Z is antisymmetric in (A, B) by construction.
pub fn compare_networks(
    ya: &BipartiteMatrix,
    yb: &BipartiteMatrix,
    stat: StatisticId,
    rho_policy: RhoPolicy,
    alpha: f64,
) -> Result<EstimateReport> {
    let ra = statistic_report(ya, stat, rho_policy, alpha, None)?;
    let rb = statistic_report(yb, stat, rho_policy, alpha, None)?;
    if ra.degenerate || rb.degenerate {
        return Err(Error::Degenerate(format!(
            "cannot compare networks on {}: a degenerate variance on one side",
            stat.as_str()
        )));
    }
    let delta = ra.estimate - rb.estimate;
    let se_sq = ra.variance / ra.n_total as f64 + rb.variance / rb.n_total as f64;
    if se_sq <= 0.0 {
        return Err(Error::Degenerate(
            "zero squared standard error in the comparison".into(),
        ));
    }
    let z = delta / se_sq.sqrt();
    let n_min = ra.n_total.min(rb.n_total);
    let mut report = EstimateReport {
        statistic_id: format!("compare_{}", stat.as_str()),
        estimate: delta,
        variance: se_sq * n_min as f64,
        n_total: n_min,
        alpha,
        ci_lo: delta - normal_quantile(1.0 - alpha / 2.0)? * se_sq.sqrt(),
        ci_hi: delta + normal_quantile(1.0 - alpha / 2.0)? * se_sq.sqrt(),
        z: Some(z),
        p_value: Some(two_sided_p(z)),
        degenerate: false,
        metadata: BTreeMap::new(),
    };
    report.note("estimate_a", json!(ra.estimate));
    report.note("estimate_b", json!(rb.estimate));
    report.note("variance_a", json!(ra.variance));
    report.note("variance_b", json!(rb.variance));
    report.note("n_a", json!(ra.n_total));
    report.note("n_b", json!(rb.n_total));
    report.note(
        "scaling",
        json!("per-network: se² = V_A/N_A + V_B/N_B (single-N form when sizes match)"),
    );
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{sample, study_model, StudyModel};
    use crate::rng::substream;
    use rand::Rng;

    #[test]
    fn quantile_reference_values() {
        // High-precision reference values for Φ⁻¹.
        let cases = [
            (0.975, 1.959963984540054),
            (0.84, 0.994457883209753),
            (0.5, 0.0),
            (0.025, -1.959963984540054),
            (0.999999, 4.753424308822899),
        ];
        for (p, expect) in cases {
            let got = normal_quantile(p).unwrap();
            assert!(
                (got - expect).abs() < 1e-10,
                "quantile({p}) = {got}, expected {expect}"
            );
        }
        assert!(normal_quantile(0.0).is_err());
        assert!(normal_quantile(1.0).is_err());
    }

    #[test]
    fn cdf_quantile_round_trip() {
        for &p in &[1e-8, 0.01, 0.3, 0.5, 0.77, 0.999, 1.0 - 1e-9] {
            let z = normal_quantile(p).unwrap();
            assert!((normal_cdf(z) - p).abs() < 1e-10, "round trip at {p}");
        }
    }

    #[test]
    fn confidence_interval_reference() {
        let (lo, hi) = confidence_interval(0.0, 1.0, 100, 0.05).unwrap();
        assert!((lo + 0.19600).abs() < 1e-4);
        assert!((hi - 0.19600).abs() < 1e-4);
        // Zero variance collapses to a point.
        assert_eq!(confidence_interval(2.5, 0.0, 10, 0.05).unwrap(), (2.5, 2.5));
        // alpha = 0.32 gives half-width ≈ 0.9945·sqrt(V/N).
        let (lo, hi) = confidence_interval(0.0, 4.0, 400, 0.32).unwrap();
        assert!((hi - 0.1 * 0.994457883209753).abs() < 1e-6);
        assert_eq!(lo, -hi);
    }

    #[test]
    fn studentized_at_null_is_zero() {
        let spec = study_model(StudyModel::III {
            f2: 3.0,
            g2: 2.0,
            lambda: 1.0,
        })
        .unwrap();
        let y = sample(&spec, 20, 25, 7).unwrap().matrix;
        let h = builtin("hD").unwrap();
        let u = crate::fast::u_fast(&y, "hD").unwrap();
        let report = studentized(&y, &h, u, RhoPolicy::Empirical, 0.05).unwrap();
        assert_eq!(report.z, Some(0.0));
        assert!((report.p_value.unwrap() - 1.0).abs() < 1e-12);
        assert!(report.ci_lo <= report.estimate && report.estimate <= report.ci_hi);
    }

    #[test]
    fn studentized_constant_matrix_errors() {
        let y = BipartiteMatrix::new(5, 5, vec![1.0; 25]).unwrap();
        let h = builtin("hD").unwrap();
        assert!(matches!(
            studentized(&y, &h, 0.5, RhoPolicy::Empirical, 0.05),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn gradient_checks_for_builtin_functions() {
        let ratio = DeltaSpec::ratio(vec![builtin("h1").unwrap(), builtin("h2").unwrap()], "f2");
        let dist = DeltaSpec::product_distance().unwrap();
        let mut rng = substream(4, &[17]);
        for _ in 0..100 {
            let point: Vec<f64> = (0..2).map(|_| rng.random_range(0.2..5.0)).collect();
            check_gradient(&ratio, &point, 1e-6).unwrap();
            let point: Vec<f64> = (0..4).map(|_| rng.random_range(0.2..5.0)).collect();
            check_gradient(&dist, &point, 1e-6).unwrap();
        }
    }

    #[test]
    fn product_distance_gradient_example() {
        let dist = DeltaSpec::product_distance().unwrap();
        let grad = (dist.grad)(&[0.0, 1.0, 1.0, 1.0]);
        assert_eq!(grad, vec![1.0, 1.0, 1.0, -4.0]);
    }

    #[test]
    fn delta_projection_reproduces_studentized_variance() {
        let spec = study_model(StudyModel::II { epsilon: 1.0 }).unwrap();
        let y = sample(&spec, 14, 13, 3).unwrap().matrix;
        let h = builtin("h1").unwrap();
        let proj = DeltaSpec::new(
            "proj",
            vec![h.clone(), builtin("h2").unwrap()],
            |u| u[0],
            |_| vec![1.0, 0.0],
        );
        let d = delta_estimate(&y, &proj, RhoPolicy::Empirical, 0.05).unwrap();
        let direct = crate::varest::variance_estimate(
            &y,
            &h,
            RhoPolicy::Empirical,
            crate::varest::VarMethod::Direct,
        )
        .unwrap();
        assert!((d.variance - direct.v).abs() < 1e-10 * direct.v.max(1e-12));
    }

    #[test]
    fn delta_sum_of_duplicates_quadruples_variance() {
        let spec = study_model(StudyModel::II { epsilon: 1.0 }).unwrap();
        let y = sample(&spec, 12, 12, 5).unwrap().matrix;
        let h = builtin("hD").unwrap();
        let sum = DeltaSpec::new(
            "sum",
            vec![h.clone(), h.clone()],
            |u| u[0] + u[1],
            |_| vec![1.0, 1.0],
        );
        let d = delta_estimate(&y, &sum, RhoPolicy::Empirical, 0.05).unwrap();
        let single = crate::varest::variance_estimate(
            &y,
            &h,
            RhoPolicy::Empirical,
            crate::varest::VarMethod::Direct,
        )
        .unwrap();
        assert!((d.variance - 4.0 * single.v).abs() < 1e-9 * single.v.max(1e-12));
    }

    #[test]
    fn f2_matches_generic_delta_route() {
        let spec = study_model(StudyModel::III {
            f2: 3.0,
            g2: 2.0,
            lambda: 1.0,
        })
        .unwrap();
        let y = sample(&spec, 18, 21, 11).unwrap().matrix;
        let expanded = f2_report(&y, Axis::Row, RhoPolicy::Empirical, 0.05, None).unwrap();
        let generic = delta_estimate(
            &y,
            &DeltaSpec::ratio(vec![builtin("h1").unwrap(), builtin("h2").unwrap()], "f2"),
            RhoPolicy::Empirical,
            0.05,
        )
        .unwrap();
        assert!((expanded.estimate - generic.estimate).abs() < 1e-12);
        assert!(
            (expanded.variance - generic.variance).abs() < 1e-10 * generic.variance.max(1e-12)
        );
    }

    #[test]
    fn f2_on_all_ones_is_one_and_degenerate() {
        let y = BipartiteMatrix::new(5, 6, vec![1.0; 30]).unwrap();
        let report = f2_report(&y, Axis::Row, RhoPolicy::Empirical, 0.05, None).unwrap();
        assert_eq!(report.estimate, 1.0);
        assert!(report.degenerate);
        assert_eq!((report.ci_lo, report.ci_hi), (1.0, 1.0));
    }

    #[test]
    fn f2_identical_rows_give_exactly_one() {
        // Duplicated rows make U^{h1} = U^{h2} identically.
        let row = [1.0, 3.0, 0.0, 2.0, 1.0];
        let mut vals = Vec::new();
        for _ in 0..6 {
            vals.extend_from_slice(&row);
        }
        let y = BipartiteMatrix::new(6, 5, vals).unwrap();
        let report = f2_report(&y, Axis::Row, RhoPolicy::Empirical, 0.05, None).unwrap();
        assert!((report.estimate - 1.0).abs() < 1e-12);
    }

    #[test]
    fn f2_empty_network_errors() {
        let y = BipartiteMatrix::new(4, 4, vec![0.0; 16]).unwrap();
        assert!(matches!(
            f2_report(&y, Axis::Row, RhoPolicy::Empirical, 0.05, None),
            Err(Error::Numeric(_))
        ));
    }

    #[test]
    fn f2_hand_enumeration_two_by_two() {
        // Y = [[1,1],[0,0]]: U^{h1} = 1/2, U^{h2} = 1/4, F̂₂ = 2.
        let y = BipartiteMatrix::new(3, 3, vec![1.0, 1.0, 1.0, 0.0, 0.0, 0.0, 1.0, 1.0, 1.0])
            .unwrap();
        let u1 = crate::fast::u_fast(&y, "h1").unwrap();
        let u2 = crate::fast::u_fast(&y, "h2").unwrap();
        let report = f2_report(&y, Axis::Row, RhoPolicy::Empirical, 0.05, None).unwrap();
        assert!((report.estimate - u1 / u2).abs() < 1e-12);
    }

    #[test]
    fn motif_report_on_zero_and_complete_graphs() {
        let zeros = BipartiteMatrix::new(5, 5, vec![0.0; 25]).unwrap();
        let r6 = motif_report(&zeros, 6, RhoPolicy::Empirical, 0.05, None).unwrap();
        assert_eq!(r6.estimate, 0.0);
        assert!(r6.degenerate);
        let r14 = motif_report(&zeros, 14, RhoPolicy::Empirical, 0.05, None).unwrap();
        assert_eq!(r14.estimate, 0.0);

        let ones = BipartiteMatrix::new(4, 4, vec![1.0; 16]).unwrap();
        let r6 = motif_report(&ones, 6, RhoPolicy::Empirical, 0.05, None).unwrap();
        assert_eq!(r6.estimate, 1.0);
        let r14 = motif_report(&ones, 14, RhoPolicy::Empirical, 0.05, None).unwrap();
        assert_eq!(r14.estimate, 0.0);
    }

    #[test]
    fn motif_report_rejects_weighted_input() {
        let y = BipartiteMatrix::new(3, 3, vec![2.0; 9]).unwrap();
        assert!(matches!(
            motif_report(&y, 6, RhoPolicy::Empirical, 0.05, None),
            Err(Error::Validation(_))
        ));
    }

    #[test]
    fn compare_same_matrix_is_zero() {
        let spec = study_model(StudyModel::I).unwrap();
        let y = sample(&spec, 30, 30, 8).unwrap().matrix;
        let report =
            compare_networks(&y, &y, StatisticId::Motif6, RhoPolicy::Empirical, 0.05).unwrap();
        assert_eq!(report.estimate, 0.0);
        assert_eq!(report.z, Some(0.0));
    }

    #[test]
    fn compare_is_antisymmetric() {
        let spec = study_model(StudyModel::III {
            f2: 3.0,
            g2: 2.0,
            lambda: 1.0,
        })
        .unwrap();
        let a = sample(&spec, 25, 30, 1).unwrap().matrix;
        let b = sample(&spec, 28, 22, 2).unwrap().matrix;
        let ab = compare_networks(&a, &b, StatisticId::F2, RhoPolicy::Empirical, 0.05).unwrap();
        let ba = compare_networks(&b, &a, StatisticId::F2, RhoPolicy::Empirical, 0.05).unwrap();
        assert_eq!(ab.z.unwrap(), -ba.z.unwrap());
        assert_eq!(ab.p_value, ba.p_value);
    }

    #[test]
    fn compare_degenerate_side_errors() {
        let ones = BipartiteMatrix::new(6, 6, vec![1.0; 36]).unwrap();
        let spec = study_model(StudyModel::I).unwrap();
        let y = sample(&spec, 20, 20, 3).unwrap().matrix;
        assert!(matches!(
            compare_networks(&ones, &y, StatisticId::Motif6, RhoPolicy::Empirical, 0.05),
            Err(Error::Degenerate(_))
        ));
    }
}
