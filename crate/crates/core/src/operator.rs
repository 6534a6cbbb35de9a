//! Floating-point evaluation of the operators for black-box functions with
//! a declared growth bound.
//!
//! The outer series is truncated with a certified weighted-Poisson tail
//! bound and the inner integrals are computed by Gauss-Laguerre rules whose
//! weight matches the kernel exactly; inputs carrying an exact exp-poly
//! representation bypass quadrature entirely through the closed-form
//! moments. Every value is returned together with an error estimate built
//! from the tail budget and the per-integral quadrature budget, so identity
//! tests can compare `value ± estimate` instead of bare floats.

use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};

use rand::Rng;
use rand::SeedableRng;

use crate::algebra::ExpPoly;
use crate::error::{Error, Result};
use crate::kernel::{
    basis, basis_derivative_order, weighted_tail_index, GrowthClass, OperatorParams,
};
use crate::quadrature::{laguerre_rule, order_for};
use crate::rational;

/// Budgets for one operator evaluation: the outer-series tail, the
/// per-integral quadrature error, and a hard cap on outer terms.
#[derive(Debug, Clone)]
pub struct EvalSettings {
    pub eps_tail: f64,
    pub eps_quad: f64,
    pub max_terms: usize,
}

impl Default for EvalSettings {
    fn default() -> Self {
        Self {
            eps_tail: 1e-12,
            eps_quad: 1e-12,
            max_terms: 100_000,
        }
    }
}

impl EvalSettings {
    fn validate(&self) -> Result<()> {
        if !(self.eps_tail > 0.0) || !(self.eps_quad > 0.0) {
            return Err(Error::Domain("evaluation budgets must be positive".into()));
        }
        if self.max_terms == 0 {
            return Err(Error::Domain("max_terms must be at least 1".into()));
        }
        Ok(())
    }

    /// Budgets tightened by a factor, for nested evaluations.
    pub fn tightened(&self, factor: f64) -> Self {
        Self {
            eps_tail: self.eps_tail / factor,
            eps_quad: self.eps_quad / factor,
            max_terms: self.max_terms,
        }
    }
}

/// A value together with its accumulated error estimate.
#[derive(Debug, Clone, Copy)]
pub struct Evaluation {
    pub value: f64,
    pub error_estimate: f64,
}

type EvalFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
type DerivFn = Arc<dyn Fn(u32, f64) -> f64 + Send + Sync>;

/// A real function on `[0, ∞)` with a declared growth bound, an optional
/// derivative oracle, and (when available) its exact exp-poly form.
///
/// Callables must be safe for concurrent invocation; grid evaluations may
/// run in parallel.
/// Memo for quadrature inner integrals, keyed by scale bits, inner index
/// and rule order. The integrals do not depend on the outer point, so one
/// function evaluated under one scale reuses them across the whole grid
/// and across every level of a nested composition.
type InnerCache = Arc<Mutex<HashMap<(u64, u64, u32), f64>>>;

#[derive(Clone)]
pub struct FunctionSpec {
    label: String,
    eval: EvalFn,
    derivs: Option<(u32, DerivFn)>,
    growth: GrowthClass,
    exp_poly: Option<ExpPoly>,
    inner_cache: InnerCache,
}

impl std::fmt::Debug for FunctionSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FunctionSpec")
            .field("label", &self.label)
            .field("growth_rate", &self.growth.rate())
            .field("has_derivatives", &self.derivs.is_some())
            .field("exact", &self.exp_poly.is_some())
            .finish()
    }
}

impl FunctionSpec {
    /// A black-box function. The growth declaration is spot-checked on a
    /// fixed sample of the range (checked, not proved).
    pub fn new(
        label: impl Into<String>,
        growth: GrowthClass,
        eval: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Result<Self> {
        let spec = Self {
            label: label.into(),
            eval: Arc::new(eval),
            derivs: None,
            growth,
            exp_poly: None,
            inner_cache: Arc::new(Mutex::new(HashMap::new())),
        };
        spec.spot_check_growth()?;
        Ok(spec)
    }

    /// Attaches a derivative oracle `(order, x) ↦ f^{(order)}(x)` valid up
    /// to `max_order`. The first derivative is validated against central
    /// differences of `eval` at ten seeded-random points.
    pub fn with_derivatives(
        mut self,
        max_order: u32,
        derivs: impl Fn(u32, f64) -> f64 + Send + Sync + 'static,
    ) -> Result<Self> {
        if max_order == 0 {
            return Err(Error::Capability(
                "derivative oracle must cover at least order 1".into(),
            ));
        }
        let derivs: DerivFn = Arc::new(derivs);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0x5EED_CAFE);
        let h = 1e-5;
        for _ in 0..10 {
            let t: f64 = rng.gen_range(0.2..4.0);
            let fd = ((self.eval)(t + h) - (self.eval)(t - h)) / (2.0 * h);
            let an = derivs(1, t);
            if (fd - an).abs() > 1e-5 * (1.0 + an.abs()) {
                return Err(Error::Capability(format!(
                    "derivative oracle for {:?} disagrees with finite differences at t={t}: {an} vs {fd}",
                    self.label
                )));
            }
        }
        self.derivs = Some((max_order, derivs));
        Ok(self)
    }

    /// The exact-engine view of an exp-poly, with evaluation, derivatives
    /// of any order, and closed-form inner integrals.
    pub fn from_exp_poly(label: impl Into<String>, f: &ExpPoly) -> Result<Self> {
        let rate = f.max_rate().max(rational::rat_zero());
        let amplitude = f
            .terms()
            .iter()
            .map(|t| rational::rat_to_f64(&t.coeff).abs())
            .sum::<f64>()
            .max(1.0);
        let growth = GrowthClass::with_exact_rate(rate, amplitude)?;
        let poly = f.clone();
        let eval_poly = f.clone();
        let deriv_cache: Arc<Mutex<Vec<ExpPoly>>> = Arc::new(Mutex::new(vec![f.clone()]));
        let derivs: DerivFn = Arc::new(move |order, x| {
            let mut cache = deriv_cache.lock().unwrap();
            while cache.len() <= order as usize {
                let next = cache.last().unwrap().differentiate();
                cache.push(next);
            }
            cache[order as usize].evaluate(x)
        });
        Ok(Self {
            label: label.into(),
            eval: Arc::new(move |x| eval_poly.evaluate(x)),
            derivs: Some((u32::MAX, derivs)),
            growth,
            exp_poly: Some(poly),
            inner_cache: Arc::new(Mutex::new(HashMap::new())),
        })
    }

    /// Internal constructor for derived functions (intermediate values of
    /// compositions, derivative views); skips the spot checks.
    fn derived(
        label: String,
        growth: GrowthClass,
        eval: EvalFn,
        derivs: Option<(u32, DerivFn)>,
        exp_poly: Option<ExpPoly>,
    ) -> Self {
        Self {
            label,
            eval,
            derivs,
            growth,
            exp_poly,
            inner_cache: Arc::new(Mutex::new(HashMap::new())),
        }
    }

    fn spot_check_growth(&self) -> Result<()> {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0x6E0A_71E5);
        let mut points: Vec<f64> = (0..10).map(|_| rng.gen_range(0.0..8.0)).collect();
        points.push(0.0);
        for &t in &points {
            let v = (self.eval)(t).abs();
            let bound = self.growth.amplitude() * (self.growth.rate() * t).exp();
            if !v.is_finite() || v > bound * (1.0 + 1e-9) {
                return Err(Error::Domain(format!(
                    "growth declaration violated for {:?} at t={t}: |f| = {v} > {bound}",
                    self.label
                )));
            }
        }
        Ok(())
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn growth(&self) -> &GrowthClass {
        &self.growth
    }

    pub fn exp_poly(&self) -> Option<&ExpPoly> {
        self.exp_poly.as_ref()
    }

    pub fn eval(&self, t: f64) -> f64 {
        (self.eval)(t)
    }

    pub fn max_derivative_order(&self) -> u32 {
        self.derivs.as_ref().map(|(o, _)| *o).unwrap_or(0)
    }

    pub fn derivative(&self, order: u32, t: f64) -> Result<f64> {
        if order == 0 {
            return Ok(self.eval(t));
        }
        match &self.derivs {
            Some((max, f)) if *max >= order => Ok(f(order, t)),
            Some((max, _)) => Err(Error::Capability(format!(
                "derivative oracle for {:?} covers order ≤ {max}, requested {order}",
                self.label
            ))),
            None => Err(Error::Capability(format!(
                "no derivative oracle attached to {:?}",
                self.label
            ))),
        }
    }

    /// The function `t ↦ f^{(l)}(t)`, with the oracle shifted accordingly.
    fn derivative_view(&self, l: u32) -> Result<FunctionSpec> {
        if l == 0 {
            return Ok(self.clone());
        }
        if let Some(poly) = &self.exp_poly {
            return FunctionSpec::from_exp_poly(
                format!("D^{l}[{}]", self.label),
                &poly.differentiate_times(l),
            );
        }
        let (max, derivs) = self
            .derivs
            .clone()
            .ok_or_else(|| Error::Capability(format!("no derivative oracle on {:?}", self.label)))?;
        if max < l {
            return Err(Error::Capability(format!(
                "derivative oracle covers order ≤ {max}, requested {l}"
            )));
        }
        let d_eval = derivs.clone();
        let shifted = derivs;
        Ok(FunctionSpec::derived(
            format!("D^{l}[{}]", self.label),
            self.growth.clone(),
            Arc::new(move |t| d_eval(l, t)),
            Some((max - l, Arc::new(move |order, t| shifted(order + l, t)))),
            None,
        ))
    }
}

/// Admissibility `n > A`, exact when an exact rate is attached.
fn check_admissible(params: &OperatorParams, f: &FunctionSpec) -> Result<()> {
    let ok = match f.exp_poly() {
        Some(poly) => &poly.max_rate() < params.scale(),
        None => f.growth().admits_scale(params.scale()),
    };
    if ok {
        Ok(())
    } else {
        Err(Error::DivergentIntegral {
            scale: params.scale_f64(),
            rate: f.growth().rate(),
        })
    }
}

/// `n ∫ s_{n,ℓ}(t) f(t) dt` for one inner index.
fn inner_integral(n: f64, ell: u64, f: &FunctionSpec, settings: &EvalSettings) -> Result<f64> {
    if let Some(poly) = f.exp_poly() {
        // closed form: Σ_terms c (ℓ+a)!/ℓ! ρ^{ℓ+1} (n-b)^{-a},  ρ = n/(n-b)
        let mut acc = 0.0;
        for t in poly.terms() {
            let b = rational::rat_to_f64(&t.rate);
            let c = rational::rat_to_f64(&t.coeff);
            let a = t.power;
            let rho = n / (n - b);
            let mut ln_mag = (ell as f64 + 1.0) * rho.ln() - a as f64 * (n - b).ln();
            for i in 1..=a as u64 {
                ln_mag += ((ell + i) as f64).ln();
            }
            acc += c.signum() * (ln_mag + c.abs().ln()).exp();
        }
        Ok(acc)
    } else {
        let ratio = f.growth().rate() / n;
        let order = order_for(ell, ratio, settings.eps_quad);
        let key = (n.to_bits(), ell, order);
        if let Some(&v) = f.inner_cache.lock().unwrap().get(&key) {
            return Ok(v);
        }
        let rule = laguerre_rule(ell, order)?;
        let v = rule.mean(|u| f.eval(u / n));
        f.inner_cache.lock().unwrap().insert(key, v);
        Ok(v)
    }
}

/// Truncation index for the outer series of an operator with shift `j`,
/// guaranteeing the discarded absolute tail stays below `eps_tail`.
fn choose_truncation(n: f64, j: i64, f: &FunctionSpec, x: f64, settings: &EvalSettings) -> u64 {
    let lambda = n * x;
    if lambda == 0.0 {
        return j.max(0) as u64;
    }
    match f.exp_poly() {
        Some(poly) => {
            // per term |inner(k)| ≤ |c| ρ (n-b)^{-a} (2k)^a ρ^{k-j} once
            // k ≥ 2(a + |j|), so each tail folds into a weighted Poisson
            // tail of mean λρ with weight degree a
            let mut k_req = 0u64;
            let nterms = poly.terms().len().max(1) as f64;
            for t in poly.terms() {
                let b = rational::rat_to_f64(&t.rate);
                let c = rational::rat_to_f64(&t.coeff).abs().max(1e-300);
                let a = t.power;
                let rho = n / (n - b);
                let ln_amp = c.ln()
                    + (1.0 - j as f64) * rho.ln()
                    + a as f64 * (2f64.ln() - (n - b).ln())
                    + (lambda * (rho - 1.0)).max(0.0);
                let ln_eps = settings.eps_tail.ln() - nterms.ln() - ln_amp;
                let k_term = weighted_tail_index(lambda * rho, ln_eps, a);
                k_req = k_req
                    .max(k_term)
                    .max(2 * (a as u64 + j.unsigned_abs()) + 4);
            }
            k_req
        }
        None => {
            let a_rate = f.growth().rate();
            let gamma = n / (n - a_rate);
            let ln_amp = f.growth().amplitude().max(1.0).ln()
                + lambda * (gamma - 1.0)
                + (1.0 - j as f64) * gamma.ln();
            let ln_eps = settings.eps_tail.ln() - ln_amp;
            weighted_tail_index(lambda * gamma, ln_eps, 0)
        }
    }
}

/// Boundary part `f(0) Σ_{k=0}^{j-1} s_{n,k}(x)` (empty for `j ≤ 0`).
fn boundary_part(n: f64, j: i64, f: &FunctionSpec, x: f64) -> Result<f64> {
    if j <= 0 {
        return Ok(0.0);
    }
    let f0 = match f.exp_poly() {
        Some(poly) => rational::rat_to_f64(&poly.value_at_zero()),
        None => f.eval(0.0),
    };
    if f0 == 0.0 {
        return Ok(0.0);
    }
    let mut sum = 0.0;
    for k in 0..j {
        sum += basis(n, k, x)?;
    }
    Ok(f0 * sum)
}

/// Series part `Σ_{k=max(j,0)}^{K} s_{n,k}(x) · n ∫ s_{n,k-j} f` together
/// with the absolute mass seen by the quadrature budget.
fn series_part(
    n: f64,
    j: i64,
    f: &FunctionSpec,
    x: f64,
    settings: &EvalSettings,
) -> Result<(f64, f64)> {
    let start = j.max(0) as u64;
    let k_max = choose_truncation(n, j, f, x, settings).max(start);
    let truncated = k_max - start + 1 > settings.max_terms as u64;
    let k_stop = if truncated {
        start + settings.max_terms as u64 - 1
    } else {
        k_max
    };
    let mut sum = 0.0;
    let mut abs_mass = 0.0;
    for k in start..=k_stop {
        let s = basis(n, k as i64, x)?;
        if s == 0.0 {
            continue;
        }
        let ell = k - start + (start as i64 - j) as u64; // = k - j, always ≥ 0 here
        let inner = inner_integral(n, ell, f, settings)?;
        sum += s * inner;
        abs_mass += s * inner.abs();
    }
    if truncated {
        return Err(Error::TruncationFailure {
            terms: settings.max_terms,
            partial: sum,
        });
    }
    Ok((sum, abs_mass))
}

/// Evaluates `(S_{n,j} f)(x)` with certified truncation, reporting the
/// value together with `eps_tail + eps_quad · (absolute quadrature mass)`.
pub fn apply(
    params: &OperatorParams,
    f: &FunctionSpec,
    x: f64,
    settings: &EvalSettings,
) -> Result<Evaluation> {
    settings.validate()?;
    if !(x >= 0.0) {
        return Err(Error::Domain(format!(
            "operator argument must be ≥ 0, got {x}"
        )));
    }
    check_admissible(params, f)?;
    let n = params.scale_f64();
    let j = params.shift();
    let boundary = boundary_part(n, j, f, x)?;
    let (sum, abs_mass) = series_part(n, j, f, x, settings)?;
    Ok(Evaluation {
        value: boundary + sum,
        error_estimate: settings.eps_tail + settings.eps_quad * abs_mass,
    })
}

/// The derivative representation: computes `(S_{n,j} f)^{(l)}(x)` from the
/// derivative oracle of `f` as
///
/// ```text
/// n Σ_{ν=1}^{min(j-1, l-1)} s^{(l-1-ν)}_{n, j-1-ν}(x) f^{(ν)}(0)
///   + Σ_{k=max(0, j-l)}^{∞} s_{n,k}(x) · n ∫ s_{n,k+l-j}(t) f^{(l)}(t) dt,
/// ```
///
/// with higher basis derivatives expanded through the first-derivative
/// recurrence.
pub fn apply_derivative_representation(
    params: &OperatorParams,
    f: &FunctionSpec,
    x: f64,
    l: u32,
    settings: &EvalSettings,
) -> Result<Evaluation> {
    settings.validate()?;
    if l == 0 {
        return apply(params, f, x, settings);
    }
    if !(x >= 0.0) {
        return Err(Error::Domain(format!(
            "operator argument must be ≥ 0, got {x}"
        )));
    }
    check_admissible(params, f)?;
    let n = params.scale_f64();
    let j = params.shift();
    let f_l = f.derivative_view(l)?;

    let mut boundary = 0.0;
    let top = (j - 1).min(l as i64 - 1);
    for nu in 1..=top.max(0) {
        let deriv_order = (l as i64 - 1 - nu) as u32;
        boundary += n
            * basis_derivative_order(n, j - 1 - nu, x, deriv_order)?
            * f.derivative(nu as u32, 0.0)?;
    }

    let (sum, abs_mass) = series_part(n, j - l as i64, &f_l, x, settings)?;
    Ok(Evaluation {
        value: boundary + sum,
        error_estimate: settings.eps_tail + settings.eps_quad * abs_mass,
    })
}

/// Exact-when-possible check of the composition hypothesis
/// `m > An/(n-A)` (equivalently `mn/(m+n) > A`).
fn check_composition_hypothesis(
    outer: &OperatorParams,
    inner: &OperatorParams,
    growth: &GrowthClass,
) -> Result<()> {
    if !growth.admits_scale(inner.scale()) {
        return Err(Error::HypothesisViolated(format!(
            "inner scale {} does not dominate growth rate {}",
            rational::format_rat(inner.scale()),
            growth.rate()
        )));
    }
    let composed = outer.composed_scale(inner);
    let ok = match growth.exact_rate() {
        Some(a) => &composed > a,
        None => rational::rat_to_f64(&composed) > growth.rate(),
    };
    if ok {
        Ok(())
    } else {
        Err(Error::HypothesisViolated(format!(
            "outer scale {} too small: composed scale {} must exceed growth rate {}",
            rational::format_rat(outer.scale()),
            rational::format_rat(&composed),
            growth.rate()
        )))
    }
}

/// Growth class of a single application: rate `An/(n-A)`, amplitude
/// `K (1 + γ^{1-j})` with `γ = n/(n-A)`.
fn inflate_growth(growth: &GrowthClass, params: &OperatorParams, j: i64) -> Result<GrowthClass> {
    let n = params.scale_f64();
    let a = growth.rate();
    let gamma = n / (n - a);
    let amplitude = growth.amplitude() * (1.0 + gamma.powi((1 - j).clamp(-200, 200) as i32));
    match growth.exact_rate() {
        Some(ar) => {
            let inflated = ar * params.scale() / (params.scale() - ar);
            GrowthClass::with_exact_rate(inflated, amplitude)
        }
        None => GrowthClass::new(a * n / (n - a), amplitude),
    }
}

/// Evaluates the composition `S_{m,j}(S_{n,j} f)(x)` by applying the outer
/// operator to `y ↦ (S_{n,j} f)(y)`.
///
/// The intermediate function is declared with the inflated growth rate
/// `An/(n-A)`, which is exactly the rate bound a single application
/// satisfies and makes the composition hypothesis coincide with the outer
/// admissibility check. Inner evaluations run on budgets tightened by 8×;
/// the reported estimate adds the largest inner estimate observed.
pub fn compose_numeric(
    outer: &OperatorParams,
    inner: &OperatorParams,
    f: &FunctionSpec,
    x: f64,
    settings: &EvalSettings,
) -> Result<Evaluation> {
    settings.validate()?;
    if outer.shift() != inner.shift() {
        return Err(Error::Domain(format!(
            "composition needs matching shifts, got {} and {}",
            outer.shift(),
            inner.shift()
        )));
    }
    check_composition_hypothesis(outer, inner, f.growth())?;

    let j = inner.shift();
    let inflated = inflate_growth(f.growth(), inner, j)?;
    let inner_params = inner.clone();
    let inner_spec = f.clone();
    let inner_settings = settings.tightened(8.0);
    let first_error: Arc<Mutex<Option<Error>>> = Arc::new(Mutex::new(None));
    let max_inner_estimate = Arc::new(AtomicU64::new(0f64.to_bits()));

    let err_slot = first_error.clone();
    let est_slot = max_inner_estimate.clone();
    let intermediate = FunctionSpec::derived(
        format!("{}[{}]", inner_params, f.label()),
        inflated,
        Arc::new(
            move |y| match apply(&inner_params, &inner_spec, y, &inner_settings) {
                Ok(ev) => {
                    est_slot
                        .fetch_update(Ordering::Relaxed, Ordering::Relaxed, |bits| {
                            Some(f64::from_bits(bits).max(ev.error_estimate).to_bits())
                        })
                        .ok();
                    ev.value
                }
                Err(e) => {
                    err_slot.lock().unwrap().get_or_insert(e);
                    f64::NAN
                }
            },
        ),
        None,
        None,
    );

    let outer_eval = apply(outer, &intermediate, x, settings)?;
    if let Some(e) = first_error.lock().unwrap().take() {
        return Err(e);
    }
    Ok(Evaluation {
        value: outer_eval.value,
        error_estimate: outer_eval.error_estimate
            + f64::from_bits(max_inner_estimate.load(Ordering::Relaxed)),
    })
}

/// Evaluates a chain of operators applied from the innermost outwards:
/// `chain = [p_0, p_1, ..., p_k]` computes `(S_{p_k} ∘ ... ∘ S_{p_0} f)(x)`.
///
/// Each level wraps the previous one as a derived function with an
/// inflated growth class, checking admissibility step by step; the memoized
/// inner integrals keep the cost linear in the chain depth. Budgets are
/// tightened by 8× per nesting level.
pub fn chain_numeric(
    chain: &[OperatorParams],
    f: &FunctionSpec,
    x: f64,
    settings: &EvalSettings,
) -> Result<Evaluation> {
    settings.validate()?;
    let (last, inner_chain) = chain
        .split_last()
        .ok_or_else(|| Error::Domain("operator chain must not be empty".into()))?;
    let first_error: Arc<Mutex<Option<Error>>> = Arc::new(Mutex::new(None));
    let max_inner_estimate = Arc::new(AtomicU64::new(0f64.to_bits()));

    let mut spec = f.clone();
    for (i, params) in inner_chain.iter().enumerate() {
        check_admissible(params, &spec)?;
        let depth_from_outer = (inner_chain.len() - i) as f64;
        let level_settings = settings.tightened(8f64.powf(depth_from_outer));
        let inflated = inflate_growth(spec.growth(), params, params.shift())?;
        let level_params = params.clone();
        let level_spec = spec;
        let inner_settings = level_settings;
        let err_slot = first_error.clone();
        let est_slot = max_inner_estimate.clone();
        spec = FunctionSpec::derived(
            format!("{}[{}]", level_params, level_spec.label()),
            inflated,
            Arc::new(
                move |y| match apply(&level_params, &level_spec, y, &inner_settings) {
                    Ok(ev) => {
                        est_slot
                            .fetch_update(Ordering::Relaxed, Ordering::Relaxed, |bits| {
                                Some(f64::from_bits(bits).max(ev.error_estimate).to_bits())
                            })
                            .ok();
                        ev.value
                    }
                    Err(e) => {
                        err_slot.lock().unwrap().get_or_insert(e);
                        f64::NAN
                    }
                },
            ),
            None,
            None,
        );
    }

    let outer_eval = apply(last, &spec, x, settings)?;
    if let Some(e) = first_error.lock().unwrap().take() {
        return Err(e);
    }
    Ok(Evaluation {
        value: outer_eval.value,
        error_estimate: outer_eval.error_estimate
            + f64::from_bits(max_inner_estimate.load(Ordering::Relaxed)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::apply_operator_exact;
    use crate::builtins;
    use crate::rational::{rat_frac, Rat};

    fn params(n: i64, j: i64) -> OperatorParams {
        OperatorParams::from_ints(n, j).unwrap()
    }

    fn settings() -> EvalSettings {
        EvalSettings::default()
    }

    #[test]
    fn preserves_constants() {
        let one = builtins::monomial_spec(0).unwrap();
        for (n, j) in [(2i64, 0i64), (5, 3), (3, -2)] {
            for x in [0.0, 0.7, 2.5] {
                let ev = apply(&params(n, j), &one, x, &settings()).unwrap();
                assert!(
                    (ev.value - 1.0).abs() <= 1e-10,
                    "constant not preserved at n={n}, j={j}, x={x}: {}",
                    ev.value
                );
            }
        }
    }

    #[test]
    fn exponential_closed_form() {
        // j = 0, f = e^{At}: value is (n/(n-A)) exp(Anx/(n-A))
        let a = 0.25f64;
        let f = FunctionSpec::new(
            "exp_quarter",
            GrowthClass::with_exact_rate(rat_frac(1, 4), 1.0).unwrap(),
            move |t| (a * t).exp(),
        )
        .unwrap();
        for n in [2.0f64, 4.0] {
            for x in [0.5, 1.0, 3.0] {
                let p = OperatorParams::new(Rat::from_float(n).unwrap(), 0).unwrap();
                let ev = apply(&p, &f, x, &settings()).unwrap();
                let gamma = n / (n - a);
                let want = gamma * (a * gamma * x).exp();
                assert!(
                    (ev.value - want).abs() <= 1e-8 * want,
                    "closed form mismatch at n={n}, x={x}: {} vs {want}",
                    ev.value
                );
            }
        }
    }

    #[test]
    fn matches_exact_engine_on_monomials() {
        for j in [-2i64, 0, 2] {
            for r in 0..=4u32 {
                let f = builtins::monomial_spec(r).unwrap();
                let image = apply_operator_exact(&params(4, j), &ExpPoly::monomial(r)).unwrap();
                for x in [0.0, 0.1, 1.0, 2.0, 5.0] {
                    let ev = apply(&params(4, j), &f, x, &settings()).unwrap();
                    let want = image.evaluate(x);
                    assert!(
                        (ev.value - want).abs() <= 1e-9 * (1.0 + want.abs()),
                        "j={j}, r={r}, x={x}: {} vs {want}",
                        ev.value
                    );
                }
            }
        }
    }

    #[test]
    fn rejects_subcritical_scale() {
        let f = builtins::expq().unwrap(); // rate 1/4
        let p = OperatorParams::new(rat_frac(1, 4), 0).unwrap();
        assert!(matches!(
            apply(&p, &f, 1.0, &settings()),
            Err(Error::DivergentIntegral { .. })
        ));
    }

    #[test]
    fn truncation_failure_carries_partial_value() {
        let f = builtins::monomial_spec(2).unwrap();
        let tight = EvalSettings {
            max_terms: 3,
            ..settings()
        };
        match apply(&params(4, 0), &f, 5.0, &tight) {
            Err(Error::TruncationFailure { terms, partial }) => {
                assert_eq!(terms, 3);
                assert!(partial.is_finite());
            }
            other => panic!("expected truncation failure, got {other:?}"),
        }
    }

    #[test]
    fn endpoint_interpolation_for_positive_shift() {
        let f = builtins::expq().unwrap();
        for j in 1i64..=3 {
            let ev = apply(&params(3, j), &f, 0.0, &settings()).unwrap();
            assert!(
                (ev.value - 1.0).abs() <= 1e-12,
                "endpoint at j={j}: {}",
                ev.value
            );
        }
    }

    #[test]
    fn positivity_on_nonnegative_inputs() {
        let f = builtins::texp().unwrap();
        for j in [-2i64, 0, 1, 3] {
            for x in [0.0, 0.5, 2.0, 4.0] {
                let ev = apply(&params(2, j), &f, x, &settings()).unwrap();
                assert!(ev.value >= 0.0, "negative image at j={j}, x={x}");
            }
        }
    }

    #[test]
    fn error_estimate_is_monotone_in_budgets() {
        let f = builtins::expq().unwrap();
        let mut s = settings();
        let mut last = f64::INFINITY;
        for _ in 0..4 {
            let ev = apply(&params(3, 1), &f, 2.0, &s).unwrap();
            assert!(
                ev.error_estimate <= last * (1.0 + 1e-12),
                "estimate grew: {} after {last}",
                ev.error_estimate
            );
            last = ev.error_estimate;
            s = s.tightened(2.0);
        }
    }

    #[test]
    fn derivative_representation_of_classical_square() {
        // differentiate the exact image S_{n,0} e_2 = x² + 4x/n + 2/n²
        let f = builtins::monomial_spec(2).unwrap();
        for n in [2i64, 4] {
            let image = apply_operator_exact(&params(n, 0), &ExpPoly::monomial(2)).unwrap();
            let image_deriv = image.differentiate();
            for x in [0.3, 1.0, 2.5] {
                let ev =
                    apply_derivative_representation(&params(n, 0), &f, x, 1, &settings()).unwrap();
                let want = image_deriv.evaluate(x);
                assert!((want - (2.0 * x + 4.0 / n as f64)).abs() < 1e-15);
                assert!(
                    (ev.value - want).abs() <= 1e-8 * (1.0 + want.abs()),
                    "n={n}, x={x}: {} vs {want}",
                    ev.value
                );
            }
        }
    }

    #[test]
    fn derivative_representation_collapses_for_small_shift() {
        // for j ≤ 1: (S_{n,j} f)^{(l)} = S_{n,j-l} f^{(l)}; at j=1, l=1,
        // f=e_1 the right side is S_{n,0} e_0 = 1
        let f = builtins::monomial_spec(1).unwrap();
        let ev = apply_derivative_representation(&params(3, 1), &f, 1.2, 1, &settings()).unwrap();
        assert!((ev.value - 1.0).abs() <= 1e-9, "got {}", ev.value);
    }

    #[test]
    fn derivative_representation_at_origin_with_large_shift() {
        // second derivative of S_{n,3} e_3 = x^3 vanishes at 0; compare to a
        // one-sided second difference of the operator itself
        let f = builtins::monomial_spec(3).unwrap();
        let p = params(2, 3);
        let ev = apply_derivative_representation(&p, &f, 0.0, 2, &settings()).unwrap();
        let h = 1e-2;
        let g = |x: f64| apply(&p, &f, x, &settings()).unwrap().value;
        let fd = (2.0 * g(0.0) - 5.0 * g(h) + 4.0 * g(2.0 * h) - g(3.0 * h)) / (h * h);
        assert!(ev.value.is_finite());
        assert!(
            (ev.value - fd).abs() <= 1e-5,
            "representation {} vs difference {fd}",
            ev.value
        );
    }

    #[test]
    fn derivative_representation_needs_an_oracle() {
        let f = FunctionSpec::new("opaque", GrowthClass::new(0.0, 2.0).unwrap(), |t: f64| {
            (t.sin() + 1.0) * 0.5
        })
        .unwrap();
        assert!(matches!(
            apply_derivative_representation(&params(2, 0), &f, 1.0, 1, &settings()),
            Err(Error::Capability(_))
        ));
    }

    #[test]
    fn composition_collapses_scales() {
        // S_{4,0} ∘ S_{4,0} = S_{2,0}; on e_1 the value at 1 is 1 + 1/2
        let f = builtins::monomial_spec(1).unwrap();
        let ev = compose_numeric(&params(4, 0), &params(4, 0), &f, 1.0, &settings()).unwrap();
        assert!((ev.value - 1.5).abs() <= 2e-8, "composed value {}", ev.value);
    }

    #[test]
    fn composition_matches_exact_engine_with_shift() {
        // S_{6,1}(S_{3,1} e_2) = S_{2,1} e_2 = e_2 + e_1
        let f = builtins::monomial_spec(2).unwrap();
        for x in [0.5, 1.0, 2.0] {
            let ev = compose_numeric(&params(6, 1), &params(3, 1), &f, x, &settings()).unwrap();
            let want = x * x + x;
            assert!(
                (ev.value - want).abs() <= 2e-8 * (1.0 + want),
                "x={x}: {} vs {want}",
                ev.value
            );
        }
    }

    #[test]
    fn chained_applications_collapse_like_resistors() {
        // S_6 applied three times equals S_2; on e_1 the value is x + 1/2
        let f = builtins::monomial_spec(1).unwrap();
        let p = params(6, 0);
        let chain = [p.clone(), p.clone(), p];
        let ev = chain_numeric(&chain, &f, 1.0, &settings()).unwrap();
        assert!((ev.value - 1.5).abs() <= 1e-7, "chained value {}", ev.value);

        // mixed scales: 1/(1/4 + 1/6 + 1/12) = 2
        let g = builtins::expq().unwrap();
        let chain = [params(12, 0), params(6, 0), params(4, 0)];
        let nested = chain_numeric(&chain, &g, 1.0, &settings()).unwrap();
        let direct = apply(&params(2, 0), &g, 1.0, &settings()).unwrap();
        assert!(
            (nested.value - direct.value).abs() <= 1e-7,
            "{} vs {}",
            nested.value,
            direct.value
        );
    }

    #[test]
    fn composition_preserves_constants() {
        let f = builtins::monomial_spec(0).unwrap();
        let ev = compose_numeric(&params(3, -1), &params(5, -1), &f, 1.7, &settings()).unwrap();
        assert!((ev.value - 1.0).abs() <= 1e-9);
    }

    #[test]
    fn composition_rejects_mismatched_shifts_and_bad_scales() {
        let f = builtins::expq().unwrap();
        assert!(matches!(
            compose_numeric(&params(4, 0), &params(4, 1), &f, 1.0, &settings()),
            Err(Error::Domain(_))
        ));
        // inner scale below the growth rate
        let p_bad = OperatorParams::new(rat_frac(1, 5), 0).unwrap();
        assert!(matches!(
            compose_numeric(&params(4, 0), &p_bad, &f, 1.0, &settings()),
            Err(Error::HypothesisViolated(_))
        ));
    }

    #[test]
    fn growth_spot_check_rejects_liars() {
        let r = FunctionSpec::new("too_big", GrowthClass::new(0.0, 1.0).unwrap(), |t: f64| {
            t * t + 1.0
        });
        assert!(matches!(r, Err(Error::Domain(_))));
    }

    #[test]
    fn derivative_oracle_validation_rejects_liars() {
        let r = FunctionSpec::new("lin", GrowthClass::new(0.0, 10.0).unwrap(), |t: f64| {
            2.0 * t.min(2.0)
        })
        .unwrap()
        .with_derivatives(1, |_, _| 7.5);
        assert!(matches!(r, Err(Error::Capability(_))));
    }
}
