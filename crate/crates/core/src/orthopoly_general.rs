//! Orthonormal polynomials for a general marginal dν = h(t)dt, built
//! from its moments alone, so the detection pipeline runs unchanged
//! when the t-marginal is not Lebesgue.
//!
//! The construction factors the Hankel moment matrix H[j][k] = m_{j+k}
//! as H = L·Lᵀ; the rows of L⁻¹ are the monomial coefficients of the
//! orthonormal polynomials H_j, and the three-term recurrence and a
//! Gauss rule for ν follow from the factor.

use std::hash::{Hash, Hasher};

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::legendre_basis::{check_unit_interval, QuadratureRule};
use crate::moment_model::MomentTable;
use crate::series_algebra::{BasisTag, LegendreSeries, SeriesBasis};

/// Default degree cap: Hankel conditioning exhausts double precision
/// quickly; past this the factorization rarely retains 4 digits.
pub const DEFAULT_GENERAL_DEGREE_CAP: usize = 12;

/// Condition-estimate ceiling corresponding to ~4 reliable digits.
const CONDITION_LIMIT: f64 = 1e12;

#[derive(Debug, Clone)]
pub struct OrthonormalBasis {
    degree: usize,
    /// Row j: monomial coefficients of H_j (lower triangular).
    entries: Vec<Vec<f64>>,
    marginal_moments: Vec<f64>,
    /// Recurrence t·H_k = b_{k+1} H_{k+1} + a_k H_k + b_k H_{k-1}:
    /// rec_a[k] = a_k, rec_b[k] = b_{k+1}.
    rec_a: Vec<f64>,
    rec_b: Vec<f64>,
    tag: BasisTag,
}

/// Build the degree-n orthonormal basis from marginal moments m_0..m_2n.
pub fn build_from_moments(marginal_moments: &[f64]) -> Result<OrthonormalBasis> {
    build_from_moments_capped(marginal_moments, DEFAULT_GENERAL_DEGREE_CAP)
}

/// Same with an explicit degree cap override.
pub fn build_from_moments_capped(
    marginal_moments: &[f64],
    cap: usize,
) -> Result<OrthonormalBasis> {
    if marginal_moments.len() < 3 || marginal_moments.len() % 2 == 0 {
        return Err(Error::InvalidParameter(format!(
            "need an odd number (2n+1, n >= 1) of marginal moments, got {}",
            marginal_moments.len()
        )));
    }
    let n = (marginal_moments.len() - 1) / 2;
    if n > cap {
        return Err(Error::DegreeCap { requested: n, cap });
    }
    if marginal_moments.iter().any(|m| !m.is_finite()) {
        return Err(Error::NonFinite("marginal moment".into()));
    }

    // Cholesky of the Hankel matrix, reporting the failing leading minor.
    let size = n + 1;
    let mut l = vec![vec![0.0; size]; size];
    for j in 0..size {
        for k in 0..=j {
            let mut acc = marginal_moments[j + k];
            for p in 0..k {
                acc -= l[j][p] * l[k][p];
            }
            if k == j {
                if acc <= 0.0 || !acc.is_finite() {
                    return Err(Error::SingularHankel(j));
                }
                l[j][j] = acc.sqrt();
            } else {
                l[j][k] = acc / l[k][k];
            }
        }
    }

    let diag_max = (0..size).map(|j| l[j][j]).fold(f64::MIN, f64::max);
    let diag_min = (0..size).map(|j| l[j][j]).fold(f64::MAX, f64::min);
    let cond_estimate = (diag_max / diag_min).powi(2);
    if cond_estimate > CONDITION_LIMIT {
        return Err(Error::IllConditioned(format!(
            "Hankel condition estimate {cond_estimate:.3e} at degree {n}; \
             fewer than 4 reliable digits remain"
        )));
    }

    // entries = L⁻¹, triangular forward substitution row by row
    let mut entries = vec![vec![0.0; size]; size];
    for j in 0..size {
        entries[j][j] = 1.0 / l[j][j];
        for k in (0..j).rev() {
            let mut acc = 0.0;
            for p in (k + 1)..=j {
                acc += entries[j][p] * l[p][k];
            }
            entries[j][k] = -acc / l[k][k];
        }
    }
    let entries: Vec<Vec<f64>> = entries
        .into_iter()
        .enumerate()
        .map(|(j, row)| row[..=j].to_vec())
        .collect();

    // recurrence coefficients from the upper factor R = Lᵀ (Gautschi):
    // a_k = r_{k,k+1}/r_{k,k} − r_{k−1,k}/r_{k−1,k−1}, b_k = r_{k,k}/r_{k−1,k−1}
    let r = |row: usize, col: usize| l[col][row];
    let mut rec_a = Vec::with_capacity(n);
    let mut rec_b = Vec::with_capacity(n);
    for k in 0..n {
        let correction = if k == 0 {
            0.0
        } else {
            r(k - 1, k) / r(k - 1, k - 1)
        };
        rec_a.push(r(k, k + 1) / r(k, k) - correction);
        rec_b.push(r(k + 1, k + 1) / r(k, k));
    }

    let mut hasher = std::collections::hash_map::DefaultHasher::new();
    for m in marginal_moments {
        m.to_bits().hash(&mut hasher);
    }
    let tag = BasisTag::General(hasher.finish());

    Ok(OrthonormalBasis {
        degree: n,
        entries,
        marginal_moments: marginal_moments.to_vec(),
        rec_a,
        rec_b,
        tag,
    })
}

impl OrthonormalBasis {
    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn row(&self, j: usize) -> &[f64] {
        &self.entries[j]
    }

    pub fn marginal_moments(&self) -> &[f64] {
        &self.marginal_moments
    }

    /// Δ_h applied to a moment vector.
    pub fn apply(&self, moments: &[f64], degree: usize) -> Result<Vec<f64>> {
        if degree > self.degree {
            return Err(Error::InvalidParameter(format!(
                "requested degree {degree} exceeds basis degree {}",
                self.degree
            )));
        }
        if moments.len() <= degree {
            return Err(Error::InsufficientMoments(format!(
                "need {} moments, got {}",
                degree + 1,
                moments.len()
            )));
        }
        Ok((0..=degree)
            .map(|j| {
                self.entries[j]
                    .iter()
                    .zip(&moments[..=j])
                    .map(|(d, g)| d * g)
                    .sum()
            })
            .collect())
    }
}

impl SeriesBasis for OrthonormalBasis {
    fn tag(&self) -> BasisTag {
        self.tag
    }

    fn degree_cap(&self) -> usize {
        self.degree
    }

    fn eval(&self, j: usize, t: f64) -> Result<f64> {
        Ok(*self.eval_all(j, t)?.last().unwrap())
    }

    fn eval_all(&self, up_to: usize, t: f64) -> Result<Vec<f64>> {
        if up_to > self.degree {
            return Err(Error::InvalidParameter(format!(
                "basis index {up_to} exceeds basis degree {}",
                self.degree
            )));
        }
        check_unit_interval(t)?;
        let mut vals = Vec::with_capacity(up_to + 1);
        let h0 = 1.0 / self.marginal_moments[0].sqrt();
        vals.push(h0);
        if up_to >= 1 {
            vals.push((t - self.rec_a[0]) * h0 / self.rec_b[0]);
        }
        for k in 1..up_to {
            let next = ((t - self.rec_a[k]) * vals[k] - self.rec_b[k - 1] * vals[k - 1])
                / self.rec_b[k];
            vals.push(next);
        }
        Ok(vals)
    }

    fn measure_quadrature(&self, order: usize) -> Result<QuadratureRule> {
        if order == 0 {
            return Err(Error::InvalidParameter("quadrature order must be >= 1".into()));
        }
        if order > self.degree {
            return Err(Error::InsufficientMoments(format!(
                "Gauss rule of order {order} for the marginal needs basis degree >= {order}, \
                 have {}",
                self.degree
            )));
        }
        // Golub–Welsch: eigen decomposition of the Jacobi matrix
        let jacobi = DMatrix::from_fn(order, order, |r, c| {
            if r == c {
                self.rec_a[r]
            } else if r + 1 == c || c + 1 == r {
                self.rec_b[r.min(c)]
            } else {
                0.0
            }
        });
        let eigen = SymmetricEigen::new(jacobi);
        let mut pairs: Vec<(f64, f64)> = (0..order)
            .map(|i| {
                let node = eigen.eigenvalues[i];
                let w = self.marginal_moments[0] * eigen.eigenvectors[(0, i)].powi(2);
                (node, w)
            })
            .collect();
        pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        let (nodes, weights) = pairs.into_iter().unzip();
        Ok(QuadratureRule::from_nodes(nodes, weights))
    }

    fn clenshaw(&self, coeffs: &[f64], t: f64) -> Result<f64> {
        check_unit_interval(t)?;
        let n = coeffs.len();
        if n == 0 {
            return Ok(0.0);
        }
        if n - 1 > self.degree {
            return Err(Error::InvalidParameter(format!(
                "series degree {} exceeds basis degree {}",
                n - 1,
                self.degree
            )));
        }
        if n == 1 {
            return Ok(coeffs[0] / self.marginal_moments[0].sqrt());
        }
        let mut d1 = coeffs[n - 1];
        let mut d2 = 0.0;
        for k in (0..n - 1).rev() {
            let alpha = (t - self.rec_a[k]) / self.rec_b[k];
            let beta_term = if d2 != 0.0 {
                -(self.rec_b[k] / self.rec_b[k + 1]) * d2
            } else {
                0.0
            };
            let d = coeffs[k] + alpha * d1 + beta_term;
            d2 = d1;
            d1 = d;
        }
        Ok(d1 / self.marginal_moments[0].sqrt())
    }
}

/// Δ_h γ_i truncated at `degree`: the ν-basis coefficients of the
/// disintegration density f_i. Requires the table's marginal to match
/// the basis moments.
pub fn general_coefficient_row(
    table: &MomentTable,
    basis: &OrthonormalBasis,
    i: usize,
    degree: usize,
) -> Result<LegendreSeries> {
    if i > table.max_i() {
        return Err(Error::InvalidParameter(format!(
            "row index i = {i} exceeds max_i = {}",
            table.max_i()
        )));
    }
    if degree > table.max_j() {
        return Err(Error::InsufficientMoments(format!(
            "need max_j >= {degree}, table has max_j = {}",
            table.max_j()
        )));
    }
    let check_len = (degree + 1).min(table.max_j() + 1);
    for j in 0..check_len {
        let table_m = table.marginal().moment(j).ok_or_else(|| {
            Error::MissingMoments(format!("table marginal has no moment m_{j}"))
        })?;
        let basis_m = basis.marginal_moments[j];
        if (table_m - basis_m).abs() > 1e-9 {
            return Err(Error::BasisMismatch(format!(
                "table marginal moment m_{j} = {table_m}, basis was built from {basis_m}"
            )));
        }
    }
    let coeffs = basis.apply(table.row(i), degree)?;
    LegendreSeries::new(coeffs, basis.tag())
}
