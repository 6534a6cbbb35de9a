//! Generalized Gauss-Laguerre rules for the weight `u^α e^{-u}`.
//!
//! The inner integrals of the operator have exactly this weight after the
//! substitution `u = n t`, so an `m`-point rule integrates the kernel times
//! any polynomial of degree `< 2m` exactly and converges geometrically for
//! entire integrands. Weights are normalized to sum to one, i.e. the rule
//! computes means under the Gamma(α+1) probability measure; the Γ(α+1)
//! mass factor never needs to be materialized, which keeps large `α` free
//! of overflow.
//!
//! Nodes and weights come from the Golub-Welsch eigenproblem of the Jacobi
//! matrix, solved by an implicit-QL iteration that accumulates only the
//! first row of the eigenvector matrix (the squared entries are the
//! normalized weights).

use std::collections::HashMap;
use std::sync::{Arc, RwLock};

use once_cell::sync::Lazy;

use crate::error::{Error, Result};

/// A quadrature rule for the normalized weight `u^α e^{-u} / Γ(α+1)`.
#[derive(Debug, Clone)]
pub struct LaguerreRule {
    alpha: u64,
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl LaguerreRule {
    pub fn alpha(&self) -> u64 {
        self.alpha
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Normalized weights; they sum to 1.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `Σ w_i f(u_i) ≈ ∫_0^∞ u^α e^{-u} f(u) du / Γ(α+1)`.
    pub fn mean(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .filter(|(_, &w)| w > 0.0)
            .map(|(&u, &w)| w * f(u))
            .sum()
    }
}

/// Implicit-QL eigenvalue iteration for a symmetric tridiagonal matrix,
/// accumulating the first row of the orthogonal transform in `z`.
///
/// `d` holds the diagonal and is overwritten with the eigenvalues; `e`
/// holds the subdiagonal in `e[0..n-1]` and is used as workspace.
fn tridiagonal_ql(d: &mut [f64], e: &mut [f64], z: &mut [f64]) -> Result<()> {
    let n = d.len();
    if n == 0 {
        return Ok(());
    }
    e[n - 1] = 0.0;
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 60 {
                return Err(Error::Domain(
                    "quadrature eigenvalue iteration failed to converge".into(),
                ));
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let mut s = 1.0f64;
            let mut c = 1.0f64;
            let mut p = 0.0f64;
            let mut underflow_restart = false;
            for i in (l..m).rev() {
                let mut f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow_restart = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                f = z[i + 1];
                z[i + 1] = s * z[i] + c * f;
                z[i] = c * z[i] - s * f;
            }
            if underflow_restart {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(())
}

fn build_rule(alpha: u64, order: usize) -> Result<LaguerreRule> {
    if order == 0 {
        return Err(Error::Domain("quadrature order must be ≥ 1".into()));
    }
    let af = alpha as f64;
    let mut d: Vec<f64> = (0..order).map(|i| 2.0 * i as f64 + af + 1.0).collect();
    let mut e: Vec<f64> = (0..order)
        .map(|i| {
            let k = (i + 1) as f64;
            (k * (k + af)).sqrt()
        })
        .collect();
    let mut z = vec![0.0; order];
    z[0] = 1.0;
    tridiagonal_ql(&mut d, &mut e, &mut z)?;

    let mut pairs: Vec<(f64, f64)> = d.iter().zip(&z).map(|(&x, &v)| (x, v * v)).collect();
    pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let total: f64 = pairs.iter().map(|p| p.1).sum();
    let nodes = pairs.iter().map(|p| p.0).collect();
    let weights = pairs.iter().map(|p| p.1 / total).collect();
    Ok(LaguerreRule {
        alpha,
        nodes,
        weights,
    })
}

static RULE_CACHE: Lazy<RwLock<HashMap<(u64, u32), Arc<LaguerreRule>>>> =
    Lazy::new(|| RwLock::new(HashMap::new()));

/// Cached rule lookup; rules are immutable and shared process-wide.
pub fn laguerre_rule(alpha: u64, order: u32) -> Result<Arc<LaguerreRule>> {
    if let Some(rule) = RULE_CACHE.read().unwrap().get(&(alpha, order)) {
        return Ok(rule.clone());
    }
    let rule = Arc::new(build_rule(alpha, order as usize)?);
    RULE_CACHE
        .write()
        .unwrap()
        .entry((alpha, order))
        .or_insert_with(|| rule.clone());
    Ok(rule)
}

/// Rule order for weight exponent `alpha` and an integrand growing like
/// `e^{c u}` with `c = rate/scale < 1`.
///
/// The weight already matches the kernel, so the order only has to track
/// the integrand's deviation from a low-degree polynomial: a fixed base
/// plus a term proportional to `c·α` (the error of an `m`-point rule on
/// `e^{cu}` behaves like `(c²·e·(α+m)/(4m))^m`, so `m ∝ c·α` keeps the
/// geometric factor bounded away from 1). Budgets tighter than 1e-12 add
/// a few points per decade.
pub fn order_for(alpha: u64, rate_ratio: f64, eps_quad: f64) -> u32 {
    let c = rate_ratio.clamp(0.0, 0.95);
    let mut order = 24.0 + (1.5 * c * alpha as f64).ceil();
    if eps_quad < 1e-12 {
        order += 8.0 * (1e-12 / eps_quad).log10().ceil().max(0.0);
    }
    order as u32
}
