//! Shifted Legendre polynomials on [0,1] and Gauss-Legendre quadrature.
//!
//! The shifted, L2([0,1])-orthonormal Legendre polynomials are
//! ℒ_j(t) = sqrt(2j+1) · P_j(2t−1), with P_j the classical Legendre
//! polynomial on [−1,1]. Their monomial coefficients form a lower
//! triangular matrix with positive diagonal, which maps a moment vector
//! (∫ tʲ f dt)_j to the basis-coefficient vector (∫ ℒ_j f dt)_j.

use crate::error::{Error, Result};

/// Highest degree for which the monomial coefficient representation of
/// ℒ_j stays within double-precision dynamic range.
pub const DEFAULT_DEGREE_CAP: usize = 60;

/// Lower-triangular monomial coefficient matrix of the orthonormal
/// shifted Legendre polynomials: `row(j)[k]` is the coefficient of t^k
/// in ℒ_j(t).
#[derive(Debug, Clone)]
pub struct BasisTransform {
    degree: usize,
    /// Row j holds j+1 entries (coefficients of t^0..t^j).
    entries: Vec<Vec<f64>>,
}

impl BasisTransform {
    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn row(&self, j: usize) -> &[f64] {
        &self.entries[j]
    }

    /// Monomial coefficient of t^k in ℒ_j; zero for k > j.
    pub fn entry(&self, j: usize, k: usize) -> f64 {
        if k > j {
            0.0
        } else {
            self.entries[j][k]
        }
    }

    /// Evaluate ℒ_j(t) via the three-term recurrence on P_j(2t−1).
    pub fn eval(&self, j: usize, t: f64) -> Result<f64> {
        if j > self.degree {
            return Err(Error::InvalidParameter(format!(
                "basis index {j} exceeds transform degree {}",
                self.degree
            )));
        }
        check_unit_interval(t)?;
        Ok(shifted_legendre_value(j, t))
    }

    /// Evaluate ℒ_j(t) by Horner on the monomial row. Ill-conditioned
    /// past degree ~25; kept for low-degree cross-checks only.
    pub fn eval_monomial(&self, j: usize, t: f64) -> Result<f64> {
        if j > self.degree {
            return Err(Error::InvalidParameter(format!(
                "basis index {j} exceeds transform degree {}",
                self.degree
            )));
        }
        let row = &self.entries[j];
        let mut acc = 0.0;
        for &c in row.iter().rev() {
            acc = acc * t + c;
        }
        Ok(acc)
    }

    /// Apply Δ to a monomial moment vector: returns the first
    /// `degree+1` basis coefficients (Δγ)(j) = Σ_k Δ_jk γ(k).
    ///
    /// Computed by the three-term recurrence on the shifted moments
    /// g_j(m) = ∫ f(t) tᵐ ℒ_j(t) dt, which stay O(‖f‖) throughout. The
    /// naive dot product with the monomial rows cancels catastrophically
    /// past degree ~20 (the rows grow like 4^j) and is not used here.
    pub fn apply(&self, moments: &[f64], degree: usize) -> Result<Vec<f64>> {
        if degree > self.degree {
            return Err(Error::InvalidParameter(format!(
                "requested degree {degree} exceeds transform degree {}",
                self.degree
            )));
        }
        legendre_coefficients(moments, degree)
    }

    /// Same map as [`BasisTransform::apply`], but by direct dot products
    /// with the monomial rows. Ill-conditioned past degree ~20; kept as a
    /// low-degree cross-check.
    pub fn apply_monomial(&self, moments: &[f64], degree: usize) -> Result<Vec<f64>> {
        if degree > self.degree {
            return Err(Error::InvalidParameter(format!(
                "requested degree {degree} exceeds transform degree {}",
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

/// Basis coefficients (∫ f ℒ_j dt)_{j≤degree} from the power moments
/// (∫ f tᵐ dt)_{m≤degree}, by the recurrence
/// (j+1) g_{j+1}(m) = √((2j+3)(2j+1)) (2 g_j(m+1) − g_j(m))
///                    − j √((2j+3)/(2j−1)) g_{j−1}(m),
/// seeded with g_0(m) = γ(m); the coefficient is c_j = g_j(0). All
/// intermediates are integrals of f·tᵐ·ℒ_j and stay O(‖f‖), so the
/// scheme is stable where the monomial-coefficient form is not.
pub fn legendre_coefficients(moments: &[f64], degree: usize) -> Result<Vec<f64>> {
    if moments.len() <= degree {
        return Err(Error::InsufficientMoments(format!(
            "need {} moments, got {}",
            degree + 1,
            moments.len()
        )));
    }
    let mut coeffs = Vec::with_capacity(degree + 1);
    let mut g_prev: Vec<f64> = moments[..=degree].to_vec();
    coeffs.push(g_prev[0]);
    if degree == 0 {
        return Ok(coeffs);
    }
    let mut g_cur: Vec<f64> = (0..degree)
        .map(|m| 3f64.sqrt() * (2.0 * moments[m + 1] - moments[m]))
        .collect();
    coeffs.push(g_cur[0]);
    for j in 1..degree {
        let a = ((2 * j + 3) as f64 * (2 * j + 1) as f64).sqrt();
        let b = j as f64 * ((2 * j + 3) as f64 / (2 * j - 1) as f64).sqrt();
        let inv = 1.0 / (j + 1) as f64;
        let next: Vec<f64> = (0..degree - j)
            .map(|m| (a * (2.0 * g_cur[m + 1] - g_cur[m]) - b * g_prev[m]) * inv)
            .collect();
        coeffs.push(next[0]);
        g_prev = g_cur;
        g_cur = next;
    }
    Ok(coeffs)
}

/// Build the triangular transform Δ up to `degree`, from the closed-form
/// coefficients of ℒ_j(t) = sqrt(2j+1) Σ_k (−1)^{j+k} C(j,k) C(j+k,k) t^k.
pub fn build_shifted_legendre(degree: usize) -> Result<BasisTransform> {
    build_shifted_legendre_capped(degree, DEFAULT_DEGREE_CAP)
}

/// Same as [`build_shifted_legendre`] with an explicit degree cap.
pub fn build_shifted_legendre_capped(degree: usize, cap: usize) -> Result<BasisTransform> {
    if degree > cap {
        return Err(Error::DegreeCap {
            requested: degree,
            cap,
        });
    }
    let mut entries = Vec::with_capacity(degree + 1);
    for j in 0..=degree {
        let norm = ((2 * j + 1) as f64).sqrt();
        let mut row = Vec::with_capacity(j + 1);
        for k in 0..=j {
            let sign = if (j + k) % 2 == 0 { 1.0 } else { -1.0 };
            row.push(norm * sign * binomial(j, k) * binomial(j + k, k));
        }
        entries.push(row);
    }
    Ok(BasisTransform { degree, entries })
}

fn binomial(n: usize, k: usize) -> f64 {
    let k = k.min(n - k);
    let mut acc = 1.0;
    for i in 0..k {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc
}

/// ℒ_j(t) by the stable three-term recurrence, independent of any
/// stored coefficient matrix.
pub fn shifted_legendre_value(j: usize, t: f64) -> f64 {
    let u = 2.0 * t - 1.0;
    ((2 * j + 1) as f64).sqrt() * legendre_value(j, u)
}

/// Classical Legendre polynomial P_j(u) on [−1,1].
pub fn legendre_value(j: usize, u: f64) -> f64 {
    if j == 0 {
        return 1.0;
    }
    let mut prev = 1.0;
    let mut cur = u;
    for k in 1..j {
        let next = ((2 * k + 1) as f64 * u * cur - k as f64 * prev) / (k + 1) as f64;
        prev = cur;
        cur = next;
    }
    cur
}

/// P_j'(u), used by the quadrature Newton iteration.
fn legendre_derivative(j: usize, u: f64) -> f64 {
    if j == 0 {
        return 0.0;
    }
    // P'_j(u) = j (u P_j(u) − P_{j−1}(u)) / (u² − 1) away from ±1.
    let pj = legendre_value(j, u);
    let pjm1 = legendre_value(j - 1, u);
    j as f64 * (u * pj - pjm1) / (u * u - 1.0)
}

pub(crate) fn check_unit_interval(t: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::InvalidParameter(format!(
            "t = {t} outside [0,1]"
        )));
    }
    Ok(())
}

/// Gauss-Legendre rule on [0,1]: exact for polynomials of degree ≤ 2m−1.
#[derive(Debug, Clone)]
pub struct QuadratureRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub order: usize,
}

impl QuadratureRule {
    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&t, &w)| w * f(t))
            .sum()
    }

    pub fn from_nodes(nodes: Vec<f64>, weights: Vec<f64>) -> Self {
        let order = nodes.len();
        QuadratureRule {
            nodes,
            weights,
            order,
        }
    }
}

/// m-point Gauss-Legendre rule mapped to [0,1]. Nodes found by Newton
/// iteration on P_m from the standard asymptotic initial guess.
pub fn gauss_legendre_01(order: usize) -> Result<QuadratureRule> {
    if order == 0 {
        return Err(Error::InvalidParameter("quadrature order must be >= 1".into()));
    }
    let m = order;
    let mut nodes = vec![0.0; m];
    let mut weights = vec![0.0; m];
    for i in 0..m {
        let mut u = (std::f64::consts::PI * (i as f64 + 0.75) / (m as f64 + 0.5)).cos();
        let mut converged = false;
        for _ in 0..100 {
            let step = legendre_value(m, u) / legendre_derivative(m, u);
            u -= step;
            if step.abs() < 1e-15 {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::NonFinite(format!(
                "Gauss-Legendre Newton iteration stalled at node {i} of {m}"
            )));
        }
        let dp = legendre_derivative(m, u);
        let w = 2.0 / ((1.0 - u * u) * dp * dp);
        // map [−1,1] -> [0,1]; the cosine guess enumerates nodes descending
        nodes[m - 1 - i] = 0.5 * (u + 1.0);
        weights[m - 1 - i] = 0.5 * w;
    }
    Ok(QuadratureRule {
        nodes,
        weights,
        order: m,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn low_degree_rows() {
        let dl = build_shifted_legendre(2).unwrap();
        assert_eq!(dl.row(0), &[1.0]);
        let s3 = 3f64.sqrt();
        assert_abs_diff_eq!(dl.row(1)[0], -s3, epsilon = 1e-14);
        assert_abs_diff_eq!(dl.row(1)[1], 2.0 * s3, epsilon = 1e-14);
        let s5 = 5f64.sqrt();
        assert_abs_diff_eq!(dl.row(2)[0], s5, epsilon = 1e-13);
        assert_abs_diff_eq!(dl.row(2)[1], -6.0 * s5, epsilon = 1e-13);
        assert_abs_diff_eq!(dl.row(2)[2], 6.0 * s5, epsilon = 1e-13);
    }

    #[test]
    fn degree_cap_rejected() {
        assert!(matches!(
            build_shifted_legendre(61),
            Err(Error::DegreeCap { .. })
        ));
        assert!(build_shifted_legendre_capped(61, 80).is_ok());
    }

    #[test]
    fn eval_examples() {
        let dl = build_shifted_legendre(4).unwrap();
        assert_abs_diff_eq!(dl.eval(0, 0.37).unwrap(), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(dl.eval(1, 0.5).unwrap(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(dl.eval(2, 0.0).unwrap(), 5f64.sqrt(), epsilon = 1e-12);
        assert!(dl.eval(5, 0.5).is_err());
        assert!(dl.eval(1, 1.5).is_err());
        assert!(dl.eval(1, -0.1).is_err());
    }

    #[test]
    fn quadrature_examples() {
        let q1 = gauss_legendre_01(1).unwrap();
        assert_abs_diff_eq!(q1.nodes[0], 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(q1.weights[0], 1.0, epsilon = 1e-15);

        let q2 = gauss_legendre_01(2).unwrap();
        let lo = 0.5 * (1.0 - 1.0 / 3f64.sqrt());
        let hi = 0.5 * (1.0 + 1.0 / 3f64.sqrt());
        assert_abs_diff_eq!(q2.nodes[0], lo, epsilon = 1e-14);
        assert_abs_diff_eq!(q2.nodes[1], hi, epsilon = 1e-14);
        assert_abs_diff_eq!(q2.weights[0], 0.5, epsilon = 1e-14);
        assert_abs_diff_eq!(q2.weights[1], 0.5, epsilon = 1e-14);

        let q5 = gauss_legendre_01(5).unwrap();
        assert_abs_diff_eq!(q5.integrate(|t| t.powi(9)), 0.1, epsilon = 1e-14);
    }

    #[test]
    fn quadrature_invariants() {
        for m in 1..=40 {
            let q = gauss_legendre_01(m).unwrap();
            let mass: f64 = q.weights.iter().sum();
            assert_abs_diff_eq!(mass, 1.0, epsilon = 1e-14);
            assert!(q.nodes.iter().all(|&t| t > 0.0 && t < 1.0));
            assert!(q.weights.iter().all(|&w| w > 0.0));
            for k in 0..=(2 * m - 1) {
                let exact = 1.0 / (k as f64 + 1.0);
                assert_abs_diff_eq!(q.integrate(|t| t.powi(k as i32)), exact, epsilon = 1e-13);
            }
        }
    }

    #[test]
    fn orthonormality_up_to_25() {
        let n = 25;
        let dl = build_shifted_legendre(n).unwrap();
        let q = gauss_legendre_01(n + 1).unwrap();
        for j in 0..=n {
            for k in 0..=n {
                let val = q.integrate(|t| dl.eval(j, t).unwrap() * dl.eval(k, t).unwrap());
                let expect = if j == k { 1.0 } else { 0.0 };
                assert!(
                    (val - expect).abs() <= 1e-10,
                    "orthonormality failed at ({j},{k}): {val}"
                );
            }
        }
    }

    #[test]
    fn monomial_vs_recurrence_agreement() {
        let dl = build_shifted_legendre(20).unwrap();
        // fixed pseudo-random sample, no RNG needed
        for i in 0..100 {
            let t = ((i as f64 * 0.6180339887498949) + 0.05).fract();
            for j in 0..=20 {
                let a = dl.eval(j, t).unwrap();
                let b = dl.eval_monomial(j, t).unwrap();
                // Horner on the monomial form cancels catastrophically,
                // so scale the tolerance by the row's coefficient size
                let scale: f64 = dl.row(j).iter().map(|c| c.abs()).sum();
                assert!(
                    (a - b).abs() <= 1e-14 * scale + 1e-12,
                    "j={j} t={t}: {a} vs {b}"
                );
            }
        }
    }

    #[test]
    fn lebesgue_moments_map_to_unit_vector() {
        let n = 20;
        let dl = build_shifted_legendre(n).unwrap();
        let moments: Vec<f64> = (0..=n).map(|j| 1.0 / (j as f64 + 1.0)).collect();
        let coeffs = dl.apply(&moments, n).unwrap();
        assert_abs_diff_eq!(coeffs[0], 1.0, epsilon = 1e-12);
        for (j, &c) in coeffs.iter().enumerate().skip(1) {
            // rounding of the input moments is amplified ~4.5^j by the
            // moment-to-coefficient map; that floor is inherent, not
            // an artifact of the recurrence
            let floor = 1e-15 * 5f64.powi(j as i32) + 1e-13;
            assert!(
                c.abs() <= floor,
                "tail coefficient {c} at row {j} above conditioning floor {floor}"
            );
        }
    }

    #[test]
    fn recurrence_transform_matches_monomial_rows_at_low_degree() {
        // past degree ~12 both routes are limited by the conditioning of
        // the moments themselves, so compare only where they are reliable
        let n = 12;
        let dl = build_shifted_legendre(n).unwrap();
        // moments of f(t) = exp(-t)
        let q = gauss_legendre_01(40).unwrap();
        let moments: Vec<f64> = (0..=n)
            .map(|j| q.integrate(|t| t.powi(j as i32) * (-t).exp()))
            .collect();
        let stable = dl.apply(&moments, n).unwrap();
        let naive = dl.apply_monomial(&moments, n).unwrap();
        for (a, b) in stable.iter().zip(&naive) {
            assert!((a - b).abs() <= 1e-8, "{a} vs {b}");
        }
    }

    /// Hankel-determinant construction of ℒ_j, as an independent oracle
    /// for low degrees: the unnormalized polynomial is the determinant of
    /// the Hankel moment matrix bordered by the power row (1, t, ..., t^j).
    fn hankel_determinant_row(j: usize) -> Vec<f64> {
        use nalgebra::DMatrix;
        let moment = |k: usize| 1.0 / (k as f64 + 1.0);
        // coefficient of t^k is the signed cofactor of the last row
        let mut coeffs = vec![0.0; j + 1];
        for k in 0..=j {
            if j == 0 {
                coeffs[0] = 1.0;
                continue;
            }
            let minor = DMatrix::from_fn(j, j, |r, c| {
                let col = if c < k { c } else { c + 1 };
                moment(r + col)
            });
            let sign = if (j + k) % 2 == 0 { 1.0 } else { -1.0 };
            coeffs[k] = sign * minor.determinant();
        }
        // normalize to unit L2 norm with positive leading coefficient
        let mut norm2 = 0.0;
        for a in 0..=j {
            for b in 0..=j {
                norm2 += coeffs[a] * coeffs[b] / (a + b + 1) as f64;
            }
        }
        let scale = norm2.sqrt() * coeffs[j].signum();
        coeffs.iter().map(|c| c / scale).collect()
    }

    #[test]
    fn matches_hankel_determinant_oracle() {
        let dl = build_shifted_legendre(5).unwrap();
        for j in 0..=5 {
            let oracle = hankel_determinant_row(j);
            for k in 0..=j {
                assert!(
                    (dl.row(j)[k] - oracle[k]).abs() <= 1e-8 * dl.row(j)[k].abs().max(1.0),
                    "row {j} coeff {k}: {} vs oracle {}",
                    dl.row(j)[k],
                    oracle[k]
                );
            }
        }
    }
}
