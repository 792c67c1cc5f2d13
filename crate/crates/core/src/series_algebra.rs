//! Finite coefficient vectors in an orthonormal polynomial basis, with
//! projection, norms, evaluation, and the ⋆-product.
//!
//! A series is a finite vector with an implicit zero tail; its ℓ² norm
//! equals the L₂ norm of the represented function (Parseval). The
//! ⋆-product of two series is the coefficient vector of the pointwise
//! product of the represented polynomials, computed by projecting the
//! product with a quadrature rule large enough to make the projection
//! exact.

use crate::error::{Error, Result};
use crate::legendre_basis::{
    check_unit_interval, gauss_legendre_01, shifted_legendre_value, QuadratureRule,
};
use serde::{Deserialize, Serialize};

/// Identifies which orthonormal basis a series lives in. General bases
/// are distinguished by a hash of their defining marginal moments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BasisTag {
    Lebesgue,
    General(u64),
}

/// Entrywise tolerance for series equality; trailing zeros are canonical.
pub const SERIES_EQ_TOL: f64 = 1e-9;

/// A function represented by its coefficients in an orthonormal basis.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LegendreSeries {
    pub coeffs: Vec<f64>,
    pub tag: BasisTag,
}

impl LegendreSeries {
    pub fn new(coeffs: Vec<f64>, tag: BasisTag) -> Result<Self> {
        if let Some(c) = coeffs.iter().find(|c| !c.is_finite()) {
            return Err(Error::NonFinite(format!("series coefficient {c}")));
        }
        Ok(LegendreSeries { coeffs, tag })
    }

    pub fn lebesgue(coeffs: Vec<f64>) -> Result<Self> {
        Self::new(coeffs, BasisTag::Lebesgue)
    }

    /// Degree of the representation, ignoring exact trailing zeros.
    pub fn degree(&self) -> usize {
        self.coeffs
            .iter()
            .rposition(|&c| c != 0.0)
            .unwrap_or(0)
    }

    /// ℓ² norm of the coefficient vector (= L₂ norm of the function).
    pub fn norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c * c).sum::<f64>().sqrt()
    }

    /// Equality up to zero-padding, within `tol` entrywise.
    pub fn approx_eq(&self, other: &LegendreSeries, tol: f64) -> bool {
        if self.tag != other.tag {
            return false;
        }
        let n = self.coeffs.len().max(other.coeffs.len());
        (0..n).all(|j| {
            let a = self.coeffs.get(j).copied().unwrap_or(0.0);
            let b = other.coeffs.get(j).copied().unwrap_or(0.0);
            (a - b).abs() <= tol
        })
    }
}

/// An orthonormal polynomial basis on [0,1] w.r.t. some marginal
/// measure, as consumed by the series operations.
pub trait SeriesBasis {
    fn tag(&self) -> BasisTag;

    /// Highest series degree the basis supports.
    fn degree_cap(&self) -> usize;

    /// Value of the j-th basis polynomial at t.
    fn eval(&self, j: usize, t: f64) -> Result<f64>;

    /// Values of basis polynomials 0..=up_to at t, in one recurrence pass.
    fn eval_all(&self, up_to: usize, t: f64) -> Result<Vec<f64>>;

    /// Gauss rule of the given order for the basis marginal measure.
    fn measure_quadrature(&self, order: usize) -> Result<QuadratureRule>;

    /// Backward-recurrence (Clenshaw) evaluation of Σ coeffs[j]·φ_j(t).
    fn clenshaw(&self, coeffs: &[f64], t: f64) -> Result<f64>;
}

/// The Lebesgue-marginal basis: shifted Legendre polynomials ℒ_j.
/// Evaluation runs the three-term recurrence, so no coefficient matrix
/// is needed; the cap only bounds ⋆-product output degrees.
#[derive(Debug, Clone)]
pub struct LebesgueBasis {
    pub degree_cap: usize,
}

impl Default for LebesgueBasis {
    fn default() -> Self {
        LebesgueBasis { degree_cap: 200 }
    }
}

impl SeriesBasis for LebesgueBasis {
    fn tag(&self) -> BasisTag {
        BasisTag::Lebesgue
    }

    fn degree_cap(&self) -> usize {
        self.degree_cap
    }

    fn eval(&self, j: usize, t: f64) -> Result<f64> {
        check_unit_interval(t)?;
        Ok(shifted_legendre_value(j, t))
    }

    fn eval_all(&self, up_to: usize, t: f64) -> Result<Vec<f64>> {
        check_unit_interval(t)?;
        let u = 2.0 * t - 1.0;
        let mut vals = Vec::with_capacity(up_to + 1);
        let mut prev = 1.0;
        let mut cur = u;
        vals.push(1.0);
        if up_to >= 1 {
            vals.push(3f64.sqrt() * u);
        }
        for k in 1..up_to {
            let next = ((2 * k + 1) as f64 * u * cur - k as f64 * prev) / (k + 1) as f64;
            prev = cur;
            cur = next;
            vals.push(((2 * (k + 1) + 1) as f64).sqrt() * cur);
        }
        Ok(vals)
    }

    fn measure_quadrature(&self, order: usize) -> Result<QuadratureRule> {
        gauss_legendre_01(order)
    }

    fn clenshaw(&self, coeffs: &[f64], t: f64) -> Result<f64> {
        check_unit_interval(t)?;
        // Run Clenshaw on P_j(2t−1) with coefficients scaled by the
        // orthonormal factor sqrt(2j+1).
        let n = coeffs.len();
        if n == 0 {
            return Ok(0.0);
        }
        let u = 2.0 * t - 1.0;
        let scaled = |j: usize| coeffs[j] * ((2 * j + 1) as f64).sqrt();
        let a = |k: usize| (2 * k + 1) as f64 * u / (k + 1) as f64;
        let b = |k: usize| -(k as f64) / (k + 1) as f64;
        let mut d1 = 0.0; // d_{k+1}
        let mut d2 = 0.0; // d_{k+2}
        for k in (0..n).rev() {
            let d = scaled(k) + a(k) * d1 + b(k + 1) * d2;
            d2 = d1;
            d1 = d;
        }
        // P_0 = 1 and P_1 = A_0 P_0, so the sum collapses to d_0.
        Ok(d1)
    }
}

fn check_tags(a: &LegendreSeries, b: &LegendreSeries) -> Result<()> {
    if a.tag != b.tag {
        return Err(Error::BasisMismatch(format!(
            "{:?} vs {:?}",
            a.tag, b.tag
        )));
    }
    Ok(())
}

fn check_basis_tag(basis: &impl SeriesBasis, s: &LegendreSeries) -> Result<()> {
    if basis.tag() != s.tag {
        return Err(Error::BasisMismatch(format!(
            "series tagged {:?}, basis is {:?}",
            s.tag,
            basis.tag()
        )));
    }
    Ok(())
}

/// Default quadrature order for projecting a smooth non-polynomial
/// function onto degrees 0..=degree.
pub fn default_projection_order(degree: usize) -> usize {
    (degree + 1).max(64)
}

/// Legendre-Fourier projection: coeffs[j] = ∫ φ_j(t) f(t) dν(t),
/// approximated with the given rule. Exact when f is a polynomial and
/// the rule covers deg(f) + degree.
pub fn project<B: SeriesBasis>(
    basis: &B,
    f: impl Fn(f64) -> f64,
    degree: usize,
    rule: &QuadratureRule,
) -> Result<LegendreSeries> {
    let mut coeffs = vec![0.0; degree + 1];
    for (&t, &w) in rule.nodes.iter().zip(&rule.weights) {
        let ft = f(t);
        if !ft.is_finite() {
            return Err(Error::NonFinite(format!("f({t}) = {ft}")));
        }
        let basis_vals = basis.eval_all(degree, t)?;
        for (c, phi) in coeffs.iter_mut().zip(&basis_vals) {
            *c += w * ft * phi;
        }
    }
    LegendreSeries::new(coeffs, basis.tag())
}

/// Projection with the default smooth-function quadrature order.
pub fn project_smooth<B: SeriesBasis>(
    basis: &B,
    f: impl Fn(f64) -> f64,
    degree: usize,
) -> Result<LegendreSeries> {
    let rule = basis.measure_quadrature(default_projection_order(degree))?;
    project(basis, f, degree, &rule)
}

/// Exact coefficient vector of the pointwise product of the two
/// represented polynomials, length deg(a)+deg(b)+1.
pub fn star_product<B: SeriesBasis>(
    basis: &B,
    a: &LegendreSeries,
    b: &LegendreSeries,
) -> Result<LegendreSeries> {
    check_tags(a, b)?;
    check_basis_tag(basis, a)?;
    let da = a.degree();
    let db = b.degree();
    let out = da + db;
    if out > basis.degree_cap() {
        return Err(Error::DegreeCap {
            requested: out,
            cap: basis.degree_cap(),
        });
    }
    // integrand degree ≤ da + db + out, so order out+1 is exact
    let rule = basis.measure_quadrature(out + 1)?;
    let mut coeffs = vec![0.0; out + 1];
    for (&t, &w) in rule.nodes.iter().zip(&rule.weights) {
        let basis_vals = basis.eval_all(out, t)?;
        let va: f64 = a.coeffs[..=da]
            .iter()
            .zip(&basis_vals)
            .map(|(c, phi)| c * phi)
            .sum();
        let vb: f64 = b.coeffs[..=db]
            .iter()
            .zip(&basis_vals)
            .map(|(c, phi)| c * phi)
            .sum();
        let prod = w * va * vb;
        for (c, phi) in coeffs.iter_mut().zip(&basis_vals) {
            *c += prod * phi;
        }
    }
    LegendreSeries::new(coeffs, basis.tag())
}

/// k-fold ⋆-power: coefficients of (Σ_j a(j) φ_j)^k, length k·deg(a)+1.
pub fn star_power<B: SeriesBasis>(
    basis: &B,
    a: &LegendreSeries,
    k: usize,
) -> Result<LegendreSeries> {
    if k == 0 {
        return Err(Error::InvalidParameter("star power requires k >= 1".into()));
    }
    let mut acc = a.clone();
    for _ in 1..k {
        acc = star_product(basis, &acc, a)?;
    }
    Ok(acc)
}

/// ℓ² distance of two series, zero-padding the shorter one.
pub fn l2_distance(a: &LegendreSeries, b: &LegendreSeries) -> Result<f64> {
    check_tags(a, b)?;
    let n = a.coeffs.len().max(b.coeffs.len());
    let mut acc = 0.0;
    for j in 0..n {
        let d = a.coeffs.get(j).copied().unwrap_or(0.0)
            - b.coeffs.get(j).copied().unwrap_or(0.0);
        acc += d * d;
    }
    Ok(acc.sqrt())
}

/// ℓ∞ distance, for the diagnostic norm flag.
pub fn linf_distance(a: &LegendreSeries, b: &LegendreSeries) -> Result<f64> {
    check_tags(a, b)?;
    let n = a.coeffs.len().max(b.coeffs.len());
    Ok((0..n)
        .map(|j| {
            (a.coeffs.get(j).copied().unwrap_or(0.0)
                - b.coeffs.get(j).copied().unwrap_or(0.0))
            .abs()
        })
        .fold(0.0, f64::max))
}

/// Partial-sum value Σ_j a(j) φ_j(t), by Clenshaw recurrence.
pub fn evaluate<B: SeriesBasis>(basis: &B, a: &LegendreSeries, t: f64) -> Result<f64> {
    check_basis_tag(basis, a)?;
    basis.clenshaw(&a.coeffs, t)
}
