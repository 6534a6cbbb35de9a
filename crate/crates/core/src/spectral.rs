//! Eigenfunctions of the operators and of the attached differential
//! operators.
//!
//! For every shift `j` and real parameter `p` the series
//!
//! ```text
//! g_{j,p}(x) = Σ_{m = max(0, -j)}^{∞}  p^m x^{m+j} / (m! (m+j)!)
//! ```
//!
//! is an eigenfunction of every `S_{n,j}` with eigenvalue `e^{p/n}`, and of
//! the differential operator `(1-j)D + x D²` with eigenvalue `p`. For
//! `p·x > 0` it collapses to the modified Bessel closed form
//! `(x/p)^{j/2} I_j(2√(px))`.

use crate::error::{Error, Result};
use crate::kernel::{bessel_i, GrowthClass, OperatorParams};
use crate::operator::{apply, EvalSettings, Evaluation, FunctionSpec};

/// The pair `(j, p)` selecting one eigenfunction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenParams {
    j: i64,
    p: f64,
}

impl EigenParams {
    pub fn new(j: i64, p: f64) -> Result<Self> {
        if !p.is_finite() {
            return Err(Error::Domain(format!("eigen parameter must be finite, got {p}")));
        }
        if p == 0.0 && j < 0 {
            return Err(Error::Domain(
                "p = 0 is only meaningful for nonnegative shifts".into(),
            ));
        }
        Ok(Self { j, p })
    }

    pub fn shift(&self) -> i64 {
        self.j
    }

    pub fn parameter(&self) -> f64 {
        self.p
    }
}

/// Value and first two derivatives of the series, summed together until
/// the second-derivative tail (the worst of the three) drops below `eps`.
fn series_with_derivatives(ep: &EigenParams, x: f64, eps: f64) -> Result<(f64, f64, f64)> {
    let j = ep.j;
    let p = ep.p;
    let m0 = 0i64.max(-j);

    // leading term p^{m0} x^{m0+j} / (m0! (m0+j)!)
    let mut term = 1.0f64;
    for i in 1..=m0 {
        term *= p / i as f64;
    }
    let a0 = m0 + j; // ≥ 0
    for i in 1..=a0 {
        term *= x / i as f64;
    }

    let mut value = 0.0f64;
    let mut d1 = 0.0f64;
    let mut d2 = 0.0f64;
    let mut m = m0;
    for _ in 0..100_000 {
        let a = (m + j) as f64; // power of x in this term
        value += term;
        if x > 0.0 {
            d1 += term * a / x;
            d2 += term * a * (a - 1.0) / (x * x);
        }
        let ratio = (p * x).abs() / ((m + 1) as f64 * (m + j + 1) as f64);
        if ratio < 0.5 {
            // remaining mass ≤ |next term| / (1 - ratio), inflated by two
            // extra index powers to also cover the differentiated tails
            let next = term.abs() * ratio;
            let weight = if x > 0.0 {
                ((a + 2.0) * (a + 1.0) / (x * x)).max(1.0)
            } else {
                1.0
            };
            if next / (1.0 - ratio) * weight < eps {
                return Ok((value, d1, d2));
            }
        }
        term *= p * x / ((m + 1) as f64 * (m + j + 1) as f64);
        m += 1;
    }
    Err(Error::Domain(format!(
        "eigenfunction series did not settle for j={j}, p={p}, x={x}"
    )))
}

/// The eigenfunction series, summed until the absolute tail bound drops
/// below `eps`. For `p = 0` and `j ≥ 0` this is `x^j / j!`.
pub fn eigenfunction(ep: &EigenParams, x: f64, eps: f64) -> Result<f64> {
    if !(x >= 0.0) {
        return Err(Error::Domain(format!("eigenfunction argument must be ≥ 0, got {x}")));
    }
    if !(eps > 0.0) {
        return Err(Error::Domain("tail budget must be positive".into()));
    }
    Ok(series_with_derivatives(ep, x, eps)?.0)
}

/// The modified Bessel closed form `(x/p)^{j/2} I_j(2√(px))`, normalized
/// so it equals the series (the raw Bessel expression carries an extra
/// `p^j`). Needs `p·x > 0`; other signs go through the series.
pub fn eigenfunction_bessel(ep: &EigenParams, x: f64) -> Result<f64> {
    let p = ep.p;
    if p == 0.0 || !(p * x > 0.0) {
        return Err(Error::Domain(format!(
            "closed form needs p·x > 0, got p={p}, x={x}"
        )));
    }
    let z = 2.0 * (p * x).sqrt();
    Ok((x / p).powf(ep.j as f64 / 2.0) * bessel_i(ep.j, z)?)
}

/// A `FunctionSpec` view of the eigenfunction, admissible for every scale
/// `n > 1`.
///
/// The series grows like `e^{2√(|p|x)}`, which is sub-exponential, so any
/// positive rate works; rate 1 is declared and the amplitude is taken from
/// a scan of `|g| e^{-t}` over the range where that ratio peaks.
pub fn eigenfunction_spec(ep: &EigenParams) -> Result<FunctionSpec> {
    let ep = *ep;
    let abs_ep = EigenParams::new(ep.j, ep.p.abs())?;
    let mut sup = 0.0f64;
    let t_max = 4.0 * ep.p.abs() + 50.0;
    let mut t = 0.0;
    while t <= t_max {
        let bound = eigenfunction(&abs_ep, t, 1e-14)? * (-t).exp();
        sup = sup.max(bound);
        t += 0.25;
    }
    let growth = GrowthClass::new(1.0, 2.0 * sup + 1.0)?;
    let label = format!("gjp:{}:{}", ep.j, ep.p);
    let eval_ep = ep;
    FunctionSpec::new(label, growth, move |t| {
        series_with_derivatives(&eval_ep, t, 1e-15).map(|v| v.0).unwrap_or(f64::NAN)
    })
}

/// Residual of the operator eigen-relation,
/// `|S_{n,j} g_{j,p}(x) - e^{p/n} g_{j,p}(x)|`, with the engine's error
/// estimate attached.
pub fn operator_eigen_residual(
    params: &OperatorParams,
    ep: &EigenParams,
    x: f64,
    settings: &EvalSettings,
) -> Result<Evaluation> {
    if ep.j != params.shift() {
        return Err(Error::Domain(format!(
            "eigenfunction shift {} does not match operator shift {}",
            ep.j,
            params.shift()
        )));
    }
    let spec = eigenfunction_spec(ep)?;
    let lhs = apply(params, &spec, x, settings)?;
    let g = eigenfunction(ep, x, 1e-15)?;
    let eigenvalue = (ep.p / params.scale_f64()).exp();
    Ok(Evaluation {
        value: (lhs.value - eigenvalue * g).abs(),
        error_estimate: lhs.error_estimate,
    })
}

/// Residual of the differential-operator eigen-relation,
/// `|(1-j) g' + x g'' - p g|`, from exact term-wise differentiation of the
/// truncated series.
pub fn diffop_eigen_residual(ep: &EigenParams, x: f64) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::Domain(format!(
            "differential residual needs x > 0, got {x}"
        )));
    }
    let (g, g1, g2) = series_with_derivatives(ep, x, 1e-16)?;
    Ok(((1 - ep.j) as f64 * g1 + x * g2 - ep.p * g).abs())
}
