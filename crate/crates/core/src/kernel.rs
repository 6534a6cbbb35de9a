//! Basis functions `s_{n,k}(x) = (nx)^k e^{-nx} / k!`, their derivatives,
//! the exact moment and cross integrals, modified Bessel values and the
//! series-truncation bounds used by every other module.

use num::traits::Signed;

use crate::error::{Error, Result};
use crate::rational::{self, Rat};

/// The pair `(n, j)` identifying one operator of the family: a positive
/// rational scale and an integer shift.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OperatorParams {
    n: Rat,
    j: i64,
}

impl OperatorParams {
    pub fn new(n: Rat, j: i64) -> Result<Self> {
        if !n.is_positive() {
            return Err(Error::Domain(format!(
                "operator scale must be positive, got {}",
                rational::format_rat(&n)
            )));
        }
        Ok(Self { n, j })
    }

    /// Convenience constructor for integer scales.
    pub fn from_ints(n: i64, j: i64) -> Result<Self> {
        Self::new(rational::rat_int(n), j)
    }

    pub fn scale(&self) -> &Rat {
        &self.n
    }

    pub fn scale_f64(&self) -> f64 {
        rational::rat_to_f64(&self.n)
    }

    pub fn shift(&self) -> i64 {
        self.j
    }

    /// Scale of the operator equivalent to applying `self` after `inner`:
    /// the scales compose like parallel resistors, `mn/(m+n)`.
    pub fn composed_scale(&self, inner: &OperatorParams) -> Rat {
        let m = &self.n;
        let n = &inner.n;
        m * n / (m + n)
    }
}

impl std::fmt::Display for OperatorParams {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "S[n={}, j={}]", rational::format_rat(&self.n), self.j)
    }
}

/// Declared growth bound `|f(t)| ≤ K e^{A t}` on `[0, ∞)`.
///
/// The rate `A` steers admissibility (`n > A`) and truncation inflation;
/// the amplitude `K` only scales tail budgets and reported bounds. An exact
/// rational rate can be attached so admissibility checks stay exact when
/// both sides are rational.
#[derive(Debug, Clone)]
pub struct GrowthClass {
    rate: f64,
    amplitude: f64,
    exact_rate: Option<Rat>,
}

impl GrowthClass {
    pub fn new(rate: f64, amplitude: f64) -> Result<Self> {
        if !(rate >= 0.0) || !rate.is_finite() {
            return Err(Error::Domain(format!("growth rate must be ≥ 0, got {rate}")));
        }
        if !(amplitude > 0.0) || !amplitude.is_finite() {
            return Err(Error::Domain(format!(
                "growth amplitude must be > 0, got {amplitude}"
            )));
        }
        Ok(Self {
            rate,
            amplitude,
            exact_rate: None,
        })
    }

    /// Growth class with an exact rational rate.
    pub fn with_exact_rate(rate: Rat, amplitude: f64) -> Result<Self> {
        if rate.is_negative() {
            return Err(Error::Domain("growth rate must be ≥ 0".into()));
        }
        let mut g = Self::new(rational::rat_to_f64(&rate), amplitude)?;
        g.exact_rate = Some(rate);
        Ok(g)
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }

    pub fn exact_rate(&self) -> Option<&Rat> {
        self.exact_rate.as_ref()
    }

    /// True when a scale `n` strictly dominates the rate; exact when both
    /// sides are rational.
    pub fn admits_scale(&self, n: &Rat) -> bool {
        match &self.exact_rate {
            Some(a) => n > a,
            None => rational::rat_to_f64(n) > self.rate,
        }
    }
}

fn check_basis_domain(n: f64, x: f64) -> Result<()> {
    if !(n > 0.0) {
        return Err(Error::Domain(format!("basis scale must be positive, got {n}")));
    }
    if !(x >= 0.0) {
        return Err(Error::Domain(format!("basis argument must be ≥ 0, got {x}")));
    }
    Ok(())
}

/// `ln k!`, accurate to ~1e-13 absolute over the whole range.
pub fn ln_factorial(k: u64) -> f64 {
    // exact in f64 for small k, Stirling with three corrections beyond
    const TABLE_LEN: u64 = 26;
    if k < TABLE_LEN {
        let mut acc = 1.0f64;
        for i in 2..=k {
            acc *= i as f64;
        }
        acc.ln()
    } else {
        let kf = k as f64;
        (kf + 0.5) * kf.ln() - kf + 0.5 * (2.0 * std::f64::consts::PI).ln() + 1.0 / (12.0 * kf)
            - 1.0 / (360.0 * kf.powi(3))
            + 1.0 / (1260.0 * kf.powi(5))
    }
}

/// `ln s_{n,k}(x)` for `k ≥ 0` and `nx > 0`.
fn ln_basis(lambda: f64, k: u64) -> f64 {
    k as f64 * lambda.ln() - lambda - ln_factorial(k)
}

/// The basis value `s_{n,k}(x) = (nx)^k e^{-nx} / k!`.
///
/// Returns exactly 0 for `k < 0`. Evaluation goes through log space so
/// large `k` and `nx` neither overflow nor underflow prematurely.
pub fn basis(n: f64, k: i64, x: f64) -> Result<f64> {
    check_basis_domain(n, x)?;
    if k < 0 {
        return Ok(0.0);
    }
    let lambda = n * x;
    if lambda == 0.0 {
        return Ok(if k == 0 { 1.0 } else { 0.0 });
    }
    if k == 0 {
        return Ok((-lambda).exp());
    }
    Ok(ln_basis(lambda, k as u64).exp().min(1.0))
}

/// `s'_{n,k}(x) = n (s_{n,k-1}(x) - s_{n,k}(x))`.
pub fn basis_derivative(n: f64, k: i64, x: f64) -> Result<f64> {
    Ok(n * (basis(n, k - 1, x)? - basis(n, k, x)?))
}

/// `q`-th derivative of the basis, by repeated application of the
/// first-derivative recurrence: `s^{(q)}_{n,k} = n^q Σ_i (-1)^{q-i} C(q,i) s_{n,k-i}`.
pub fn basis_derivative_order(n: f64, k: i64, x: f64, q: u32) -> Result<f64> {
    let mut acc = 0.0;
    // C(q, i) built incrementally
    let mut coeff = 1.0f64;
    for i in 0..=q {
        let sign = if (q - i) % 2 == 0 { 1.0 } else { -1.0 };
        acc += sign * coeff * basis(n, k - i as i64, x)?;
        coeff = coeff * (q - i) as f64 / (i + 1) as f64;
    }
    Ok(acc * n.powi(q as i32))
}

/// Exact moment integral `∫_0^∞ s_{n,l}(t) t^r dt = (l+r)!/l! · n^{-r-1}`.
pub fn moment_integral(n: &Rat, l: u32, r: u32) -> Result<Rat> {
    if !n.is_positive() {
        return Err(Error::Domain("moment integral needs n > 0".into()));
    }
    let rising = rational::falling_factorial_int((l + r) as i64, r as u64)?;
    let n_pow = rational::rat_pow(n, -(r as i64 + 1))?;
    Ok(Rat::from_integer(rising) * n_pow)
}

/// Exact cross integral
/// `∫_0^∞ s_{m,r}(t) s_{n,l}(t) dt = m^r n^l (r+l)! / ((m+n)^{r+l+1} r! l!)`.
pub fn cross_integral(m: &Rat, r: u32, n: &Rat, l: u32) -> Result<Rat> {
    if !m.is_positive() || !n.is_positive() {
        return Err(Error::Domain("cross integral needs m, n > 0".into()));
    }
    let num = rational::rat_pow(m, r as i64)?
        * rational::rat_pow(n, l as i64)?
        * Rat::from_integer(rational::factorial((r + l) as u64)?);
    let den = rational::rat_pow(&(m + n), (r + l) as i64 + 1)?
        * Rat::from_integer(rational::factorial(r as u64)?)
        * Rat::from_integer(rational::factorial(l as u64)?);
    Ok(num / den)
}

/// Modified Bessel function of the first kind at integer order, by the
/// ascending series `Σ_k (z/2)^{2k+|j|} / (k! (k+|j|)!)`; `I_{-j} = I_j`.
///
/// The series is summed until it stagnates at machine precision, which for
/// the moderate arguments used here (`z ≤ 30`-ish) is well below any
/// tolerance the callers care about.
pub fn bessel_i(j: i64, z: f64) -> Result<f64> {
    if !(z >= 0.0) {
        return Err(Error::Domain(format!("bessel_i needs z ≥ 0, got {z}")));
    }
    let nu = j.unsigned_abs();
    if z == 0.0 {
        return Ok(if nu == 0 { 1.0 } else { 0.0 });
    }
    let half = 0.5 * z;
    // leading term (z/2)^ν / ν!, in log space for large ν
    let mut term = (nu as f64 * half.ln() - ln_factorial(nu)).exp();
    let mut sum = term;
    let ratio_num = half * half;
    for k in 0..500u64 {
        term *= ratio_num / ((k + 1) as f64 * (k + 1 + nu) as f64);
        sum += term;
        if term.abs() <= f64::EPSILON * sum.abs() {
            break;
        }
    }
    Ok(sum)
}

/// Safe overestimate of the weighted Poisson tail
/// `Σ_{k>K} e^{-λ} λ^k / k! · k^d`, in log space.
///
/// Uses the geometric bound `term(K+1) / (1 - ρ)` where
/// `ρ = (λ/(K+2)) ((K+2)/(K+1))^d` dominates every later term ratio;
/// only valid when `ρ < 1`, else `+∞` is returned.
fn ln_weighted_tail_bound(lambda: f64, k_last: u64, degree: u32) -> f64 {
    let k1 = (k_last + 1) as f64;
    let rho = (lambda / (k1 + 1.0)) * ((k1 + 1.0) / k1).powi(degree as i32);
    if rho >= 1.0 {
        return f64::INFINITY;
    }
    ln_basis(lambda, k_last + 1) + degree as f64 * k1.ln() - (1.0 - rho).ln()
}

/// Smallest `K` (along a fixed scan path) with
/// `Σ_{k>K} e^{-λ} λ^k / k! · k^d < e^{ln_eps}`.
pub(crate) fn weighted_tail_index(lambda: f64, ln_eps: f64, degree: u32) -> u64 {
    if lambda <= 0.0 {
        return 0;
    }
    let mut k = lambda.ceil() as u64;
    loop {
        let ln_bound = ln_weighted_tail_bound(lambda, k, degree);
        if ln_bound < ln_eps {
            return k;
        }
        k += 1;
    }
}

/// Truncation index for the outer series: the returned `K` satisfies
/// `Σ_{k>K} s_{n,k}(x) k^d < eps`. Monotone nonincreasing in `eps`.
pub fn truncation_index(n: f64, x: f64, eps: f64, weight_degree: u32) -> Result<u64> {
    check_basis_domain(n, x)?;
    if !(eps > 0.0) {
        return Err(Error::Domain(format!("truncation budget must be > 0, got {eps}")));
    }
    Ok(weighted_tail_index(n * x, eps.ln(), weight_degree))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{rat_frac, rat_int};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn basis_examples() {
        assert_eq!(basis(1.0, 0, 0.0).unwrap(), 1.0);
        assert_eq!(basis(3.0, -2, 1.7).unwrap(), 0.0);
        assert_abs_diff_eq!(basis(1.0, 1, 1.0).unwrap(), (-1.0f64).exp(), epsilon = 1e-15);
        assert!(basis(0.0, 1, 1.0).is_err());
        assert!(basis(1.0, 1, -0.5).is_err());
    }

    #[test]
    fn basis_stays_in_unit_interval_for_large_indices() {
        for k in [0i64, 1, 10, 100, 400] {
            let v = basis(8.0, k, 6.25).unwrap();
            assert!((0.0..=1.0).contains(&v), "s_(8,{k})(6.25) = {v}");
        }
    }

    #[test]
    fn partition_of_unity() {
        for (n, x) in [(1.0, 0.5), (2.0, 1.0), (5.0, 3.0), (8.0, 5.0)] {
            let k_max = truncation_index(n, x, 1e-14, 0).unwrap();
            let sum: f64 = (0..=k_max as i64).map(|k| basis(n, k, x).unwrap()).sum();
            assert_abs_diff_eq!(sum, 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn basis_derivative_examples() {
        assert_abs_diff_eq!(basis_derivative(1.0, 0, 0.0).unwrap(), -1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(basis_derivative(2.0, 1, 0.0).unwrap(), 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(basis_derivative(1.0, 5, 0.0).unwrap(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn basis_derivative_matches_central_difference() {
        let h = 1e-6;
        for k in 0..=20i64 {
            for x in [0.25, 1.0, 2.5, 5.0] {
                for n in [1.0, 3.0] {
                    let fd =
                        (basis(n, k, x + h).unwrap() - basis(n, k, x - h).unwrap()) / (2.0 * h);
                    let an = basis_derivative(n, k, x).unwrap();
                    assert_abs_diff_eq!(an, fd, epsilon = 1e-6);
                }
            }
        }
    }

    #[test]
    fn higher_basis_derivative_matches_repeated_differences() {
        // compare order-2 derivative against a second central difference
        let h = 1e-4;
        for k in [0i64, 1, 3, 7] {
            let x = 1.3;
            let n = 2.0;
            let fd = (basis(n, k, x + h).unwrap() - 2.0 * basis(n, k, x).unwrap()
                + basis(n, k, x - h).unwrap())
                / (h * h);
            let an = basis_derivative_order(n, k, x, 2).unwrap();
            assert_abs_diff_eq!(an, fd, epsilon = 1e-5);
        }
    }

    #[test]
    fn moment_integral_examples() {
        assert_eq!(moment_integral(&rat_int(1), 0, 0).unwrap(), rat_int(1));
        assert_eq!(moment_integral(&rat_int(2), 1, 2).unwrap(), rat_frac(3, 4));
        assert_eq!(moment_integral(&rat_int(1), 3, 1).unwrap(), rat_int(4));
    }

    #[test]
    fn cross_integral_examples() {
        assert_eq!(
            cross_integral(&rat_int(1), 0, &rat_int(1), 0).unwrap(),
            rat_frac(1, 2)
        );
        assert_eq!(
            cross_integral(&rat_int(2), 1, &rat_int(3), 0).unwrap(),
            rat_frac(2, 25)
        );
    }

    proptest! {
        #[test]
        fn cross_integral_symmetry(m in 1i64..6, r in 0u32..6, n in 1i64..6, l in 0u32..6) {
            let a = cross_integral(&rat_int(m), r, &rat_int(n), l).unwrap();
            let b = cross_integral(&rat_int(n), l, &rat_int(m), r).unwrap();
            prop_assert_eq!(a, b);
        }

        #[test]
        fn truncation_monotone_in_eps(lam in 0.01f64..40.0, d in 0u32..4) {
            let k1 = weighted_tail_index(lam, (1e-6f64).ln(), d);
            let k2 = weighted_tail_index(lam, (1e-12f64).ln(), d);
            prop_assert!(k1 <= k2);
        }
    }

    #[test]
    fn bessel_examples() {
        assert_eq!(bessel_i(0, 0.0).unwrap(), 1.0);
        assert_eq!(bessel_i(1, 0.0).unwrap(), 0.0);
        assert_abs_diff_eq!(bessel_i(0, 2.0).unwrap(), 2.2795853, epsilon = 1e-7);
    }

    #[test]
    fn bessel_recurrence() {
        // I_{j-1}(z) - I_{j+1}(z) = (2j/z) I_j(z)
        for j in -5i64..=5 {
            for &z in &[0.5, 1.0, 2.5, 5.0, 10.0] {
                let lhs = bessel_i(j - 1, z).unwrap() - bessel_i(j + 1, z).unwrap();
                let rhs = 2.0 * j as f64 / z * bessel_i(j, z).unwrap();
                let scale = bessel_i(j, z).unwrap().abs().max(1.0);
                assert!(
                    (lhs - rhs).abs() <= 1e-10 * scale,
                    "recurrence failed at j={j}, z={z}: {lhs} vs {rhs}"
                );
            }
        }
    }

    #[test]
    fn truncation_examples() {
        assert_eq!(truncation_index(1.0, 0.0, 1e-12, 0).unwrap(), 0);
        let k = truncation_index(4.0, 2.0, 1e-12, 0).unwrap();
        assert!(k >= 8, "expected K ≥ 8 for a mean-8 tail, got {k}");
        // verify by direct summation
        let tail: f64 = ((k + 1)..(k + 400))
            .map(|i| basis(4.0, i as i64, 2.0).unwrap())
            .sum();
        assert!(tail < 1e-12, "direct tail {tail} exceeds budget");
    }

    #[test]
    fn weighted_truncation_covers_polynomial_weights() {
        let lam = 10.0f64;
        for d in [0u32, 1, 2, 4] {
            let k = weighted_tail_index(lam, (1e-10f64).ln(), d);
            let tail: f64 = ((k + 1)..(k + 500))
                .map(|i| ln_basis(lam, i).exp() * (i as f64).powi(d as i32))
                .sum();
            assert!(tail < 1e-10, "weighted tail {tail} at d={d}, K={k}");
        }
    }

    #[test]
    fn growth_class_admissibility_is_exact_for_rationals() {
        let g = GrowthClass::with_exact_rate(rat_frac(1, 4), 1.0).unwrap();
        assert!(g.admits_scale(&rat_frac(26, 100)));
        assert!(!g.admits_scale(&rat_frac(1, 4)));
        assert!(!g.admits_scale(&rat_frac(24, 100)));
    }

    #[test]
    fn operator_params_reject_bad_scale() {
        assert!(OperatorParams::from_ints(0, 1).is_err());
        assert!(OperatorParams::from_ints(-2, 0).is_err());
        let p = OperatorParams::from_ints(4, -3).unwrap();
        assert_eq!(p.shift(), -3);
        assert_eq!(p.to_string(), "S[n=4, j=-3]");
    }

    #[test]
    fn composed_scale_is_parallel_resistance() {
        let a = OperatorParams::from_ints(4, 1).unwrap();
        let b = OperatorParams::from_ints(4, 1).unwrap();
        assert_eq!(a.composed_scale(&b), rat_int(2));
        let c = OperatorParams::from_ints(6, 0).unwrap();
        assert_eq!(a.composed_scale(&c), rat_frac(12, 5));
    }
}
