//! Exact calculus on the function class `span{ x^a e^{bx} }` with rational
//! coefficients.
//!
//! The class is closed under addition, multiplication, differentiation and,
//! for rates `b < n`, under the operators themselves, so every identity of
//! the family can be verified as exact term-wise equality of canonical
//! forms. This module is the zero-error oracle that the floating-point
//! engine is checked against.

use std::collections::BTreeMap;

use num::bigint::BigInt;
use num::traits::{One, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::kernel::OperatorParams;
use crate::rational::{self, Rat, EXACT_FACTORIAL_LIMIT};

/// One term `c · x^a · e^{b x}` with rational `c`, `b` and `a ≥ 0`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExpPolyTerm {
    pub coeff: Rat,
    pub power: u32,
    pub rate: Rat,
}

/// A finite linear combination of terms `x^a e^{bx}`, kept canonical:
/// unique `(rate, power)` pairs sorted by rate then power, no zero
/// coefficients. Equality is structural, so "identity holds exactly"
/// reduces to comparing canonical forms.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ExpPoly {
    terms: Vec<ExpPolyTerm>,
}

#[derive(Serialize)]
struct TermJson {
    c: String,
    a: u32,
    b: String,
}

impl ExpPoly {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: Rat) -> Self {
        Self::single(c, 0, rational::rat_zero())
    }

    /// The monomial `x^r`.
    pub fn monomial(r: u32) -> Self {
        Self::single(rational::rat_one(), r, rational::rat_zero())
    }

    /// A single term `c x^a e^{bx}`.
    pub fn single(coeff: Rat, power: u32, rate: Rat) -> Self {
        Self::from_terms(vec![ExpPolyTerm { coeff, power, rate }])
    }

    pub fn from_terms(terms: Vec<ExpPolyTerm>) -> Self {
        let mut map: BTreeMap<(Rat, u32), Rat> = BTreeMap::new();
        for t in terms {
            let entry = map
                .entry((t.rate, t.power))
                .or_insert_with(rational::rat_zero);
            *entry += t.coeff;
        }
        Self::from_map(map)
    }

    fn from_map(map: BTreeMap<(Rat, u32), Rat>) -> Self {
        let terms = map
            .into_iter()
            .filter(|(_, c)| !c.is_zero())
            .map(|((rate, power), coeff)| ExpPolyTerm { coeff, power, rate })
            .collect();
        Self { terms }
    }

    pub fn terms(&self) -> &[ExpPolyTerm] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// True when every term has rate zero.
    pub fn is_polynomial(&self) -> bool {
        self.terms.iter().all(|t| t.rate.is_zero())
    }

    /// Degree of the polynomial part, if any polynomial term is present.
    pub fn polynomial_degree(&self) -> Option<u32> {
        self.terms
            .iter()
            .filter(|t| t.rate.is_zero())
            .map(|t| t.power)
            .max()
    }

    /// Largest exponential rate among the terms (0 for the empty sum).
    pub fn max_rate(&self) -> Rat {
        self.terms
            .iter()
            .map(|t| t.rate.clone())
            .max()
            .unwrap_or_else(rational::rat_zero)
    }

    /// The terms with rate zero.
    pub fn polynomial_part(&self) -> ExpPoly {
        ExpPoly {
            terms: self
                .terms
                .iter()
                .filter(|t| t.rate.is_zero())
                .cloned()
                .collect(),
        }
    }

    /// The terms with nonzero rate.
    pub fn exponential_part(&self) -> ExpPoly {
        ExpPoly {
            terms: self
                .terms
                .iter()
                .filter(|t| !t.rate.is_zero())
                .cloned()
                .collect(),
        }
    }

    pub fn scale(&self, c: &Rat) -> ExpPoly {
        if c.is_zero() {
            return ExpPoly::zero();
        }
        ExpPoly {
            terms: self
                .terms
                .iter()
                .map(|t| ExpPolyTerm {
                    coeff: &t.coeff * c,
                    power: t.power,
                    rate: t.rate.clone(),
                })
                .collect(),
        }
    }

    /// Multiplication by `x^s`.
    pub fn shift_power(&self, s: u32) -> ExpPoly {
        ExpPoly {
            terms: self
                .terms
                .iter()
                .map(|t| ExpPolyTerm {
                    coeff: t.coeff.clone(),
                    power: t.power + s,
                    rate: t.rate.clone(),
                })
                .collect(),
        }
    }

    /// Exact term-wise derivative:
    /// `d/dx [c x^a e^{bx}] = c a x^{a-1} e^{bx} + c b x^a e^{bx}`.
    pub fn differentiate(&self) -> ExpPoly {
        let mut map: BTreeMap<(Rat, u32), Rat> = BTreeMap::new();
        for t in &self.terms {
            if t.power > 0 {
                let c = &t.coeff * rational::rat_int(t.power as i64);
                *map.entry((t.rate.clone(), t.power - 1))
                    .or_insert_with(rational::rat_zero) += c;
            }
            if !t.rate.is_zero() {
                let c = &t.coeff * &t.rate;
                *map.entry((t.rate.clone(), t.power))
                    .or_insert_with(rational::rat_zero) += c;
            }
        }
        Self::from_map(map)
    }

    pub fn differentiate_times(&self, times: u32) -> ExpPoly {
        let mut acc = self.clone();
        for _ in 0..times {
            acc = acc.differentiate();
        }
        acc
    }

    /// Floating-point evaluation `Σ c x^a e^{bx}`.
    pub fn evaluate(&self, x: f64) -> f64 {
        self.terms
            .iter()
            .map(|t| {
                rational::rat_to_f64(&t.coeff)
                    * x.powi(t.power as i32)
                    * (rational::rat_to_f64(&t.rate) * x).exp()
            })
            .sum()
    }

    /// Exact structured evaluation at rational `x`: a sorted list of
    /// `(coefficient, exponent)` pairs meaning `Σ cᵢ e^{eᵢ}`, with all
    /// terms of equal exponent `b·x` folded together.
    pub fn evaluate_exact(&self, x: &Rat) -> Vec<(Rat, Rat)> {
        let mut map: BTreeMap<Rat, Rat> = BTreeMap::new();
        for t in &self.terms {
            let c = &t.coeff * num::pow::pow(x.clone(), t.power as usize);
            let exponent = &t.rate * x;
            *map.entry(exponent).or_insert_with(rational::rat_zero) += c;
        }
        map.into_iter()
            .filter(|(_, c)| !c.is_zero())
            .map(|(e, c)| (c, e))
            .collect()
    }

    /// Evaluation at `x = 0`, exact.
    pub fn value_at_zero(&self) -> Rat {
        self.terms
            .iter()
            .filter(|t| t.power == 0)
            .map(|t| t.coeff.clone())
            .fold(rational::rat_zero(), |acc, c| acc + c)
    }

    /// Canonical JSON form: a list of `{"c": "p/q", "a": int, "b": "p/q"}`
    /// in canonical term order.
    pub fn to_canonical_json(&self) -> String {
        let view: Vec<TermJson> = self
            .terms
            .iter()
            .map(|t| TermJson {
                c: rational::format_rat(&t.coeff),
                a: t.power,
                b: rational::format_rat(&t.rate),
            })
            .collect();
        serde_json::to_string(&view).expect("serializing exp-poly terms cannot fail")
    }
}

impl std::ops::Add<&ExpPoly> for &ExpPoly {
    type Output = ExpPoly;
    fn add(self, rhs: &ExpPoly) -> ExpPoly {
        let mut terms = self.terms.clone();
        terms.extend(rhs.terms.iter().cloned());
        ExpPoly::from_terms(terms)
    }
}

impl std::ops::Sub<&ExpPoly> for &ExpPoly {
    type Output = ExpPoly;
    fn sub(self, rhs: &ExpPoly) -> ExpPoly {
        self + &(-rhs)
    }
}

impl std::ops::Neg for &ExpPoly {
    type Output = ExpPoly;
    fn neg(self) -> ExpPoly {
        ExpPoly {
            terms: self
                .terms
                .iter()
                .map(|t| ExpPolyTerm {
                    coeff: -t.coeff.clone(),
                    power: t.power,
                    rate: t.rate.clone(),
                })
                .collect(),
        }
    }
}

impl std::ops::Mul<&ExpPoly> for &ExpPoly {
    type Output = ExpPoly;
    fn mul(self, rhs: &ExpPoly) -> ExpPoly {
        let mut map: BTreeMap<(Rat, u32), Rat> = BTreeMap::new();
        for s in &self.terms {
            for t in &rhs.terms {
                let c = &s.coeff * &t.coeff;
                *map.entry((&s.rate + &t.rate, s.power + t.power))
                    .or_insert_with(rational::rat_zero) += c;
            }
        }
        ExpPoly::from_map(map)
    }
}

/// Coefficients `α_q` of `Π_{i=1}^{a} (k - j + i) = Σ_q α_q · k(k-1)···(k-q+1)`,
/// via the Newton forward-difference table (exact; the coefficients are
/// integers because the product is integer-valued on the integers).
fn falling_factorial_coefficients(power: u32, shift: i64) -> Result<Vec<Rat>> {
    if power as u64 > EXACT_FACTORIAL_LIMIT {
        return Err(Error::Exactness {
            index: power as u64,
            limit: EXACT_FACTORIAL_LIMIT,
        });
    }
    let mut row: Vec<Rat> = (0..=power as i64)
        .map(|t| {
            let mut prod = BigInt::one();
            for i in 1..=power as i64 {
                prod *= BigInt::from(t - shift + i);
            }
            Rat::from_integer(prod)
        })
        .collect();
    let mut alphas = Vec::with_capacity(power as usize + 1);
    alphas.push(row[0].clone());
    let mut q_factorial = BigInt::one();
    for q in 1..=power as usize {
        for t in 0..(row.len() - 1) {
            row[t] = &row[t + 1] - &row[t];
        }
        row.pop();
        q_factorial *= BigInt::from(q);
        alphas.push(&row[0] / Rat::from_integer(q_factorial.clone()));
    }
    Ok(alphas)
}

/// Exact image of `f` under the operator with parameters `(n, j)`.
///
/// For a term `c x^a e^{bx}` with `b < n` the inner integrals collapse to
/// `(k-j+a)!/(k-j)! · ρ^{k-j+1} (n-b)^{-a}` with `ρ = n/(n-b)`, and the
/// outer series is reduced through the falling-factorial sums
/// `Σ_{k≥0} s_{n,k}(x) ρ^k k(k-1)···(k-q+1) = (nρx)^q e^{nx(ρ-1)}`.
/// For `j ≥ 1` the sums start at `k = j`, which leaves finitely many
/// `x^i e^{-nx}` corrections, and the `f(0)`-boundary term contributes
/// `f(0) Σ_{k<j} s_{n,k}(x)`. The result therefore stays inside the class,
/// with new rate `nb/(n-b)` (zero for polynomial input).
pub fn apply_operator_exact(params: &OperatorParams, f: &ExpPoly) -> Result<ExpPoly> {
    let n = params.scale();
    let j = params.shift();
    if j >= 1 && j as u64 > EXACT_FACTORIAL_LIMIT {
        return Err(Error::Exactness {
            index: j as u64,
            limit: EXACT_FACTORIAL_LIMIT,
        });
    }
    let mut acc: BTreeMap<(Rat, u32), Rat> = BTreeMap::new();
    let add = |acc: &mut BTreeMap<(Rat, u32), Rat>, coeff: Rat, power: u32, rate: Rat| {
        if !coeff.is_zero() {
            *acc.entry((rate, power)).or_insert_with(rational::rat_zero) += coeff;
        }
    };
    let neg_n = -n.clone();

    for term in &f.terms {
        let b = &term.rate;
        if b >= n {
            return Err(Error::DivergentIntegral {
                scale: rational::rat_to_f64(n),
                rate: rational::rat_to_f64(b),
            });
        }
        let a = term.power;
        let denom = n - b;
        let rho = n / &denom;
        let new_rate = n * b / &denom;
        let prefactor =
            &term.coeff * rational::rat_pow(&denom, -(a as i64))? * rational::rat_pow(&rho, 1 - j)?;
        let n_rho = n * &rho;
        let alphas = falling_factorial_coefficients(a, j)?;

        for (q, alpha) in alphas.iter().enumerate() {
            if alpha.is_zero() {
                continue;
            }
            let lead = &prefactor * alpha * rational::rat_pow(&n_rho, q as i64)?;
            add(&mut acc, lead.clone(), q as u32, new_rate.clone());
            if j >= 1 && (q as i64) < j {
                // Σ_{k=q}^{j-1} s_{n,k}(x) ρ^k k(k-1)···(k-q+1)
                //   = (nρx)^q e^{-nx} Σ_{i=0}^{j-1-q} (nρx)^i / i!
                let mut coeff = lead;
                for i in 0..=(j - 1 - q as i64) {
                    if i > 0 {
                        coeff = coeff * &n_rho / rational::rat_int(i);
                    }
                    add(&mut acc, -coeff.clone(), q as u32 + i as u32, neg_n.clone());
                }
            }
        }

        // boundary term: only power-zero terms contribute to f(0)
        if j >= 1 && a == 0 {
            let mut coeff = term.coeff.clone();
            for k in 0..j {
                if k > 0 {
                    coeff = coeff * n / rational::rat_int(k);
                }
                add(&mut acc, coeff.clone(), k as u32, neg_n.clone());
            }
        }
    }
    Ok(ExpPoly::from_map(acc))
}

/// The second-order differential operator attached to shift `j`,
/// `(1-j) f' + x f''`, exactly.
pub fn apply_d2_exact(j: i64, f: &ExpPoly) -> ExpPoly {
    let f1 = f.differentiate();
    let f2 = f1.differentiate();
    &f1.scale(&rational::rat_int(1 - j)) + &f2.shift_power(1)
}
