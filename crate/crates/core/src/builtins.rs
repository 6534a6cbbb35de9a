//! The named test functions shared by the verification suites and the CLI:
//! monomials `e0, e1, ...`, the exponential-growth samples `expq` and
//! `texp`, and the eigenfunctions `gjp:<j>:<p>`.

use crate::algebra::ExpPoly;
use crate::error::{Error, Result};
use crate::kernel::GrowthClass;
use crate::operator::FunctionSpec;
use crate::rational::rat_frac;
use crate::spectral::{eigenfunction_spec, EigenParams};

/// The monomial `e_r(t) = t^r`, backed by its exact form.
pub fn monomial_spec(r: u32) -> Result<FunctionSpec> {
    FunctionSpec::from_exp_poly(format!("e{r}"), &ExpPoly::monomial(r))
}

/// `expq(t) = e^{t/4}`, the growth-class sample with rate 1/4.
pub fn expq() -> Result<FunctionSpec> {
    let growth = GrowthClass::with_exact_rate(rat_frac(1, 4), 1.0)?;
    FunctionSpec::new("expq", growth, |t| (0.25 * t).exp())?
        .with_derivatives(u32::MAX, |order, t| 0.25f64.powi(order as i32) * (0.25 * t).exp())
}

/// `texp(t) = t e^{t/8}`; the product sits in the rate-1/4 class with
/// amplitude 3 since `t ≤ 3 e^{t/8}`.
pub fn texp() -> Result<FunctionSpec> {
    let growth = GrowthClass::with_exact_rate(rat_frac(1, 4), 3.0)?;
    FunctionSpec::new("texp", growth, |t| t * (0.125 * t).exp())?.with_derivatives(
        u32::MAX,
        |order, t| {
            let c = 0.125f64;
            (c * t).exp() * (c.powi(order as i32) * t + order as f64 * c.powi(order as i32 - 1))
        },
    )
}

/// Looks up a function by its CLI name: `e<r>`, `expq`, `texp` or
/// `gjp:<j>:<p>`.
pub fn by_name(name: &str) -> Result<FunctionSpec> {
    if let Some(digits) = name.strip_prefix('e') {
        if let Ok(r) = digits.parse::<u32>() {
            return monomial_spec(r);
        }
    }
    match name {
        "expq" => return expq(),
        "texp" => return texp(),
        _ => {}
    }
    if let Some(rest) = name.strip_prefix("gjp:") {
        let parts: Vec<&str> = rest.split(':').collect();
        if parts.len() == 2 {
            let j = parts[0]
                .parse::<i64>()
                .map_err(|e| Error::Domain(format!("bad shift in {name:?}: {e}")))?;
            let p = parts[1]
                .parse::<f64>()
                .map_err(|e| Error::Domain(format!("bad parameter in {name:?}: {e}")))?;
            return eigenfunction_spec(&EigenParams::new(j, p)?);
        }
    }
    Err(Error::Domain(format!(
        "unknown function {name:?}; expected e<r>, expq, texp or gjp:<j>:<p>"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn monomials_carry_their_exact_form() {
        let f = monomial_spec(3).unwrap();
        assert!(f.exp_poly().is_some());
        assert_eq!(f.eval(2.0), 8.0);
        assert_eq!(f.derivative(1, 2.0).unwrap(), 12.0);
    }

    #[test]
    fn growth_samples_validate() {
        let f = expq().unwrap();
        assert!((f.eval(4.0) - 1.0f64.exp()).abs() < 1e-12);
        assert!((f.derivative(2, 0.0).unwrap() - 0.0625).abs() < 1e-15);
        let g = texp().unwrap();
        assert!((g.derivative(1, 0.0).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn lookup_by_name() {
        assert_eq!(by_name("e5").unwrap().label(), "e5");
        assert_eq!(by_name("expq").unwrap().label(), "expq");
        assert_eq!(by_name("gjp:-2:1.5").unwrap().label(), "gjp:-2:1.5");
        assert!(by_name("sin").is_err());
        assert!(by_name("gjp:x:1").is_err());
    }
}
