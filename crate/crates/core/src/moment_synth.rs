//! Synthetic measures (trajectory, product, mixture) and their exact
//! moment tables, as test and demo inputs for the detection pipeline.

use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::legendre_basis::gauss_legendre_01;
use crate::moment_model::{LoadOptions, Marginal, MomentTable};

pub const DEFAULT_SYNTH_ORDER: usize = 64;

const RANGE_GRID: usize = 1024;

/// Closed catalogue of trajectory functions; provenance of every test
/// value stays auditable.
#[derive(Debug, Clone, PartialEq)]
pub enum TrajectoryFn {
    /// Polynomial with ascending-degree coefficients.
    Poly(Vec<f64>),
    /// t ↦ exp(−t)
    ExpNeg,
    /// t ↦ 0.9·(1 + sin(2πt))/2 + 0.05
    SinScaled,
    Constant(f64),
}

impl TrajectoryFn {
    pub fn eval(&self, t: f64) -> f64 {
        match self {
            TrajectoryFn::Poly(c) => c.iter().rev().fold(0.0, |acc, &v| acc * t + v),
            TrajectoryFn::ExpNeg => (-t).exp(),
            TrajectoryFn::SinScaled => {
                0.9 * (1.0 + (2.0 * std::f64::consts::PI * t).sin()) / 2.0 + 0.05
            }
            TrajectoryFn::Constant(c) => *c,
        }
    }

    /// Degree when polynomial, for quadrature sizing.
    pub fn poly_degree(&self) -> Option<usize> {
        match self {
            TrajectoryFn::Poly(c) => Some(c.iter().rposition(|&v| v != 0.0).unwrap_or(0)),
            TrajectoryFn::Constant(_) => Some(0),
            _ => None,
        }
    }
}

impl FromStr for TrajectoryFn {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "exp_neg" {
            Ok(TrajectoryFn::ExpNeg)
        } else if s == "sin_scaled" {
            Ok(TrajectoryFn::SinScaled)
        } else if let Some(rest) = s.strip_prefix("const:") {
            let c = rest
                .parse()
                .map_err(|e| Error::Parse(format!("const trajectory: {e}")))?;
            Ok(TrajectoryFn::Constant(c))
        } else if let Some(rest) = s.strip_prefix("poly:") {
            let coeffs = rest
                .split(',')
                .map(|v| {
                    v.trim()
                        .parse()
                        .map_err(|e| Error::Parse(format!("poly coefficient: {e}")))
                })
                .collect::<Result<Vec<f64>>>()?;
            if coeffs.is_empty() {
                return Err(Error::Parse("poly trajectory needs coefficients".into()));
            }
            Ok(TrajectoryFn::Poly(coeffs))
        } else {
            Err(Error::Parse(format!(
                "unknown trajectory function \"{s}\" \
                 (expected exp_neg, sin_scaled, const:C, or poly:c0,c1,...)"
            )))
        }
    }
}

/// Marginal density catalogue.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MarginalDensity {
    Lebesgue,
    /// h(t) = 2t
    LinearT,
}

impl MarginalDensity {
    pub fn density(&self, t: f64) -> f64 {
        match self {
            MarginalDensity::Lebesgue => 1.0,
            MarginalDensity::LinearT => 2.0 * t,
        }
    }
}

impl FromStr for MarginalDensity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lebesgue" => Ok(MarginalDensity::Lebesgue),
            "linear" => Ok(MarginalDensity::LinearT),
            other => Err(Error::Parse(format!(
                "unknown marginal \"{other}\" (expected lebesgue or linear)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeasureKind {
    Trajectory,
    Product,
    Mixture,
}

/// Description of a synthetic measure: the conditional kernel is a
/// Dirac on one trajectory, the uniform kernel (product), or a weighted
/// mixture of Dirac trajectories.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasureSpec {
    pub kind: MeasureKind,
    pub trajectories: Vec<TrajectoryFn>,
    pub weights: Vec<f64>,
    pub marginal: MarginalDensity,
}

impl MeasureSpec {
    pub fn trajectory(f: TrajectoryFn) -> Self {
        MeasureSpec {
            kind: MeasureKind::Trajectory,
            trajectories: vec![f],
            weights: vec![1.0],
            marginal: MarginalDensity::Lebesgue,
        }
    }

    pub fn product() -> Self {
        MeasureSpec {
            kind: MeasureKind::Product,
            trajectories: Vec::new(),
            weights: Vec::new(),
            marginal: MarginalDensity::Lebesgue,
        }
    }

    pub fn mixture(fns: Vec<TrajectoryFn>, weights: Vec<f64>) -> Self {
        MeasureSpec {
            kind: MeasureKind::Mixture,
            trajectories: fns,
            weights,
            marginal: MarginalDensity::Lebesgue,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self.kind {
            MeasureKind::Trajectory => {
                if self.trajectories.len() != 1 {
                    return Err(Error::InvalidParameter(
                        "trajectory measure needs exactly one function".into(),
                    ));
                }
            }
            MeasureKind::Product => {
                if !self.trajectories.is_empty() {
                    return Err(Error::InvalidParameter(
                        "product measure takes no trajectory functions".into(),
                    ));
                }
            }
            MeasureKind::Mixture => {
                if self.trajectories.is_empty() {
                    return Err(Error::InvalidParameter(
                        "mixture needs at least one trajectory function".into(),
                    ));
                }
                if self.weights.len() != self.trajectories.len() {
                    return Err(Error::InvalidParameter(format!(
                        "{} weights for {} trajectories",
                        self.weights.len(),
                        self.trajectories.len()
                    )));
                }
            }
        }
        if !self.trajectories.is_empty() {
            if self.weights.iter().any(|&w| w < 0.0) {
                return Err(Error::InvalidParameter("negative mixture weight".into()));
            }
            let total: f64 = self.weights.iter().sum();
            if (total - 1.0).abs() > 1e-12 {
                return Err(Error::InvalidParameter(format!(
                    "mixture weights sum to {total}, expected 1"
                )));
            }
        }
        for (r, f) in self.trajectories.iter().enumerate() {
            for g in 0..RANGE_GRID {
                let t = g as f64 / (RANGE_GRID - 1) as f64;
                let x = f.eval(t);
                if !(0.0..=1.0).contains(&x) {
                    return Err(Error::InvalidParameter(format!(
                        "trajectory {r} leaves [0,1]: x({t}) = {x}"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// gamma[i][j] = Σ_r w_r ∫ tʲ x_r(t)ⁱ h(t) dt by Gauss quadrature
/// (exact for polynomial specs when 2·order−1 covers the integrand).
pub fn synthesize(
    spec: &MeasureSpec,
    max_i: usize,
    max_j: usize,
    order: usize,
) -> Result<MomentTable> {
    spec.validate()?;
    let rule = gauss_legendre_01(order)?;
    let h = |t: f64| spec.marginal.density(t);
    let marginal_moment = |j: usize| rule.integrate(|t| t.powi(j as i32) * h(t));

    let mut gamma = vec![vec![0.0; max_j + 1]; max_i + 1];
    match spec.kind {
        MeasureKind::Product => {
            for i in 0..=max_i {
                for j in 0..=max_j {
                    gamma[i][j] = marginal_moment(j) / (i as f64 + 1.0);
                }
            }
        }
        MeasureKind::Trajectory | MeasureKind::Mixture => {
            for i in 0..=max_i {
                for j in 0..=max_j {
                    gamma[i][j] = spec
                        .trajectories
                        .iter()
                        .zip(&spec.weights)
                        .map(|(f, w)| {
                            w * rule.integrate(|t| {
                                t.powi(j as i32) * f.eval(t).powi(i as i32) * h(t)
                            })
                        })
                        .sum();
                }
            }
        }
    }

    let marginal = match spec.marginal {
        MarginalDensity::Lebesgue => Marginal::lebesgue(),
        MarginalDensity::LinearT => Marginal::Explicit(gamma[0].clone()),
    };
    MomentTable::new(gamma, marginal, LoadOptions::default())
}

/// Additive uniform noise in [−eps, eps] on every cell except (0,0),
/// seeded for reproducibility. The returned table is revalidated with a
/// tolerance widened by eps.
pub fn apply_noise(table: &MomentTable, eps: f64, seed: u64) -> Result<MomentTable> {
    if eps < 0.0 {
        return Err(Error::InvalidParameter("noise amplitude must be >= 0".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut gamma: Vec<Vec<f64>> = (0..=table.max_i())
        .map(|i| table.row(i).to_vec())
        .collect();
    for (i, row) in gamma.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            if i == 0 && j == 0 {
                continue;
            }
            *v += rng.gen_range(-eps..=eps);
        }
    }
    let marginal = match table.marginal() {
        Marginal::Explicit(_) => Marginal::Explicit(gamma[0].clone()),
        named => named.clone(),
    };
    MomentTable::new(
        gamma,
        marginal,
        LoadOptions {
            marginal_tol: 1e-9 + eps,
            normalize: false,
        },
    )
}

/// Independent brute-force oracle for the detector: ‖f_i − f₁ⁱ‖ in
/// L₂(ν), with f_i computed pointwise from the spec's known
/// disintegration kernel.
pub fn oracle_residual(spec: &MeasureSpec, i: usize, order: usize) -> Result<f64> {
    spec.validate()?;
    if i < 2 {
        return Err(Error::InvalidParameter("oracle residual needs i >= 2".into()));
    }
    let rule = gauss_legendre_01(order)?;
    let f = |power: usize, t: f64| -> f64 {
        match spec.kind {
            MeasureKind::Product => 1.0 / (power as f64 + 1.0),
            _ => spec
                .trajectories
                .iter()
                .zip(&spec.weights)
                .map(|(f, w)| w * f.eval(t).powi(power as i32))
                .sum(),
        }
    };
    Ok(rule
        .integrate(|t| {
            let d = f(i, t) - f(1, t).powi(i as i32);
            d * d * spec.marginal.density(t)
        })
        .sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn parse_catalogue() {
        assert_eq!("exp_neg".parse::<TrajectoryFn>().unwrap(), TrajectoryFn::ExpNeg);
        assert_eq!(
            "poly:0,1".parse::<TrajectoryFn>().unwrap(),
            TrajectoryFn::Poly(vec![0.0, 1.0])
        );
        assert_eq!(
            "const:0.7".parse::<TrajectoryFn>().unwrap(),
            TrajectoryFn::Constant(0.7)
        );
        assert!("bogus".parse::<TrajectoryFn>().is_err());
        assert!("poly:".parse::<TrajectoryFn>().is_err());
    }

    #[test]
    fn identity_trajectory_moments() {
        let spec = MeasureSpec::trajectory(TrajectoryFn::Poly(vec![0.0, 1.0]));
        let t = synthesize(&spec, 2, 2, 16).unwrap();
        for i in 0..=2 {
            for j in 0..=2 {
                assert_abs_diff_eq!(t.gamma(i, j), 1.0 / (i + j + 1) as f64, epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn exp_neg_first_moment_is_one_minus_inv_e() {
        let spec = MeasureSpec::trajectory(TrajectoryFn::ExpNeg);
        let t = synthesize(&spec, 1, 0, DEFAULT_SYNTH_ORDER).unwrap();
        assert_abs_diff_eq!(t.gamma(1, 0), 1.0 - (-1.0f64).exp(), epsilon = 1e-14);
        assert_abs_diff_eq!(t.gamma(1, 0), 0.6321206, epsilon = 1e-7);
    }

    #[test]
    fn product_moments_are_separable() {
        let t = synthesize(&MeasureSpec::product(), 3, 4, 32).unwrap();
        for i in 0..=3 {
            for j in 0..=4 {
                assert_abs_diff_eq!(
                    t.gamma(i, j),
                    1.0 / ((i + 1) * (j + 1)) as f64,
                    epsilon = 1e-14
                );
            }
        }
    }

    #[test]
    fn spec_invariants_enforced() {
        let escape = MeasureSpec::trajectory(TrajectoryFn::Poly(vec![0.5, 1.0]));
        assert!(matches!(escape.validate(), Err(Error::InvalidParameter(_))));

        let bad_weights = MeasureSpec::mixture(
            vec![TrajectoryFn::Constant(0.2), TrajectoryFn::Constant(0.8)],
            vec![0.7, 0.7],
        );
        assert!(bad_weights.validate().is_err());
    }

    #[test]
    fn oracle_residual_examples() {
        let traj = MeasureSpec::trajectory(TrajectoryFn::SinScaled);
        assert!(oracle_residual(&traj, 2, 64).unwrap() <= 1e-13);

        assert_abs_diff_eq!(
            oracle_residual(&MeasureSpec::product(), 2, 32).unwrap(),
            1.0 / 12.0,
            epsilon = 1e-14
        );

        let mixture = MeasureSpec::mixture(
            vec![
                TrajectoryFn::Poly(vec![0.0, 1.0]),
                TrajectoryFn::Poly(vec![1.0, -1.0]),
            ],
            vec![0.5, 0.5],
        );
        assert_abs_diff_eq!(
            oracle_residual(&mixture, 2, 32).unwrap(),
            1.0 / 80f64.sqrt(),
            epsilon = 1e-14
        );
    }

    #[test]
    fn synthesis_is_deterministic() {
        let spec = MeasureSpec::trajectory(TrajectoryFn::ExpNeg);
        let a = synthesize(&spec, 3, 8, DEFAULT_SYNTH_ORDER).unwrap();
        let b = synthesize(&spec, 3, 8, DEFAULT_SYNTH_ORDER).unwrap();
        for i in 0..=3 {
            for j in 0..=8 {
                assert_eq!(a.gamma(i, j).to_bits(), b.gamma(i, j).to_bits());
            }
        }
    }

    #[test]
    fn seeded_noise_is_reproducible_and_bounded() {
        let spec = MeasureSpec::trajectory(TrajectoryFn::ExpNeg);
        let clean = synthesize(&spec, 2, 6, DEFAULT_SYNTH_ORDER).unwrap();
        let a = apply_noise(&clean, 1e-6, 42).unwrap();
        let b = apply_noise(&clean, 1e-6, 42).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.gamma(0, 0), clean.gamma(0, 0));
        let mut touched = false;
        for i in 0..=2 {
            for j in 0..=6 {
                let d = (a.gamma(i, j) - clean.gamma(i, j)).abs();
                assert!(d <= 1e-6);
                touched |= d > 0.0;
            }
        }
        assert!(touched);
    }

    #[test]
    fn linear_marginal_trajectory_moments() {
        let mut spec = MeasureSpec::trajectory(TrajectoryFn::Poly(vec![0.0, 1.0]));
        spec.marginal = MarginalDensity::LinearT;
        let t = synthesize(&spec, 2, 6, 32).unwrap();
        for i in 0..=2 {
            for j in 0..=6 {
                assert_abs_diff_eq!(t.gamma(i, j), 2.0 / (i + j + 2) as f64, epsilon = 1e-14);
            }
        }
        assert!(matches!(t.marginal(), Marginal::Explicit(_)));
    }
}
