//! The trajectory test: compare Δγ_i against the i-th ⋆-power of Δγ_1
//! at finite truncation, render a three-way verdict, reconstruct the
//! candidate x(t), and run the algebraic-support pre-check on the
//! bivariate moment matrix.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::moment_model::{Marginal, MomentTable};
use crate::orthopoly_general::{
    build_from_moments_capped, general_coefficient_row, DEFAULT_GENERAL_DEGREE_CAP,
};
use crate::series_algebra::{
    l2_distance, linf_distance, star_power, LebesgueBasis, LegendreSeries, SeriesBasis,
};

pub const DEFAULT_ESCALATION_FACTOR: f64 = 10.0;

/// Grid size for the sup-norm estimate of the reconstruction partial sum.
const SUP_NORM_GRID: usize = 1024;

/// Partial sums above this on the grid trigger a boundedness warning;
/// a trajectory into [0,1] cannot have a much larger stable sup norm.
const SUP_NORM_WARN: f64 = 1.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    TrajectoryConsistent,
    Inconsistent,
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResidualNorm {
    L2,
    Linf,
}

#[derive(Debug, Clone, Copy)]
pub struct CheckConfig {
    pub truncation_n: usize,
    pub max_power_k: usize,
    pub tolerance: f64,
    pub escalation_factor: f64,
    pub norm: ResidualNorm,
    /// Degree cap for the general-marginal basis construction.
    pub general_degree_cap: usize,
}

impl CheckConfig {
    pub fn new(truncation_n: usize, max_power_k: usize, tolerance: f64) -> Self {
        CheckConfig {
            truncation_n,
            max_power_k,
            tolerance,
            escalation_factor: DEFAULT_ESCALATION_FACTOR,
            norm: ResidualNorm::L2,
            general_degree_cap: DEFAULT_GENERAL_DEGREE_CAP,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ResidualEntry {
    pub i: usize,
    pub residual: f64,
    pub compared_length: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DetectionReport {
    pub truncation_n: usize,
    pub max_power_k: usize,
    pub tolerance: f64,
    pub escalation_factor: f64,
    pub norm: ResidualNorm,
    pub residuals: Vec<ResidualEntry>,
    pub verdict: Verdict,
    /// Candidate x̂ = Δγ_1 truncated at n.
    pub reconstruction: LegendreSeries,
    /// Marginal moments the detection basis was built from; None for
    /// the Lebesgue marginal. Enough to rebuild the basis for
    /// reconstruction sampling.
    pub marginal_moments: Option<Vec<f64>>,
    pub sup_norm_estimate: f64,
    pub sup_norm_warning: bool,
}

impl DetectionReport {
    pub fn max_residual(&self) -> f64 {
        self.residuals
            .iter()
            .map(|r| r.residual)
            .fold(0.0, f64::max)
    }
}

/// Test whether the table is consistent with support on a trajectory:
/// for i = 2..K, r_i = ‖Δγ_i − (Δγ_1)^(⋆i)‖ over indices 0..n·i.
pub fn check_trajectory(table: &MomentTable, config: &CheckConfig) -> Result<DetectionReport> {
    let n = config.truncation_n;
    let k_max = config.max_power_k;
    if k_max < 2 {
        return Err(Error::InvalidParameter(format!(
            "max power K = {k_max} must be >= 2"
        )));
    }
    if table.max_i() < k_max {
        return Err(Error::InsufficientMoments(format!(
            "need max_i >= {k_max}, table has max_i = {}",
            table.max_i()
        )));
    }
    if table.max_j() < n * k_max {
        return Err(Error::InsufficientMoments(format!(
            "need max_j >= {}, table has max_j = {}",
            n * k_max,
            table.max_j()
        )));
    }
    if !(config.tolerance > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "tolerance {} must be positive",
            config.tolerance
        )));
    }

    match table.marginal() {
        Marginal::Named(_) => {
            let basis = LebesgueBasis::default();
            let rows = |i: usize, degree: usize| table.coefficient_row(i, degree);
            run_check(table, config, &basis, rows, None)
        }
        Marginal::Explicit(_) => {
            // basis degree n·K + 1 so the ⋆-power projections are exact
            // under the Gauss rule for dν
            let basis_degree = n * k_max + 1;
            let needed = 2 * basis_degree;
            if table.max_j() < needed {
                return Err(Error::InsufficientMoments(format!(
                    "general marginal: need marginal moments up to {needed} \
                     (max_j >= {needed}), table has max_j = {}",
                    table.max_j()
                )));
            }
            let moments: Vec<f64> = (0..=needed)
                .map(|j| table.marginal().moment(j).unwrap())
                .collect();
            let basis = build_from_moments_capped(&moments, config.general_degree_cap)?;
            let rows =
                |i: usize, degree: usize| general_coefficient_row(table, &basis, i, degree);
            run_check(table, config, &basis, rows, Some(moments.clone()))
        }
    }
}

fn run_check<B, F>(
    _table: &MomentTable,
    config: &CheckConfig,
    basis: &B,
    rows: F,
    marginal_moments: Option<Vec<f64>>,
) -> Result<DetectionReport>
where
    B: SeriesBasis + Sync,
    F: Fn(usize, usize) -> Result<LegendreSeries> + Sync,
{
    let n = config.truncation_n;
    let reconstruction = rows(1, n)?;

    let residuals: Vec<ResidualEntry> = (2..=config.max_power_k)
        .into_par_iter()
        .map(|i| -> Result<ResidualEntry> {
            let observed = rows(i, n * i)?;
            let predicted = star_power(basis, &reconstruction, i)?;
            let residual = match config.norm {
                ResidualNorm::L2 => l2_distance(&observed, &predicted)?,
                ResidualNorm::Linf => linf_distance(&observed, &predicted)?,
            };
            Ok(ResidualEntry {
                i,
                residual,
                compared_length: n * i + 1,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let max_r = residuals.iter().map(|r| r.residual).fold(0.0, f64::max);
    let verdict = if max_r <= config.tolerance {
        Verdict::TrajectoryConsistent
    } else if max_r > config.escalation_factor * config.tolerance {
        Verdict::Inconsistent
    } else {
        Verdict::Inconclusive
    };

    let mut sup = 0.0f64;
    for g in 0..SUP_NORM_GRID {
        let t = g as f64 / (SUP_NORM_GRID - 1) as f64;
        sup = sup.max(basis.clenshaw(&reconstruction.coeffs, t)?.abs());
    }

    Ok(DetectionReport {
        truncation_n: n,
        max_power_k: config.max_power_k,
        tolerance: config.tolerance,
        escalation_factor: config.escalation_factor,
        norm: config.norm,
        residuals,
        verdict,
        reconstruction,
        marginal_moments,
        sup_norm_estimate: sup,
        sup_norm_warning: sup > SUP_NORM_WARN,
    })
}

/// Sample the reconstructed trajectory on a uniform grid including the
/// endpoints. Values are clamped to [0,1] only when `clamp` is set.
pub fn reconstruct_trajectory(
    report: &DetectionReport,
    samples: usize,
    clamp: bool,
) -> Result<Vec<(f64, f64)>> {
    if report.verdict == Verdict::Inconsistent {
        return Err(Error::InvalidParameter(
            "report verdict is inconsistent; there is no trajectory to reconstruct".into(),
        ));
    }
    if samples < 2 {
        return Err(Error::InvalidParameter("samples must be >= 2".into()));
    }
    let eval: Box<dyn Fn(f64) -> Result<f64>> = match &report.marginal_moments {
        None => {
            let basis = LebesgueBasis::default();
            let coeffs = report.reconstruction.coeffs.clone();
            Box::new(move |t| basis.clenshaw(&coeffs, t))
        }
        Some(moments) => {
            let basis = build_from_moments_capped(moments, usize::MAX)?;
            let coeffs = report.reconstruction.coeffs.clone();
            Box::new(move |t| basis.clenshaw(&coeffs, t))
        }
    };
    (0..samples)
        .map(|k| {
            let t = k as f64 / (samples - 1) as f64;
            let mut x = eval(t)?;
            if clamp {
                x = x.clamp(0.0, 1.0);
            }
            Ok((t, x))
        })
        .collect()
}

/// One term of a bivariate kernel polynomial: coeff · x^a t^b.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KernelTerm {
    pub x_power: usize,
    pub t_power: usize,
    pub coeff: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AlgebraicSupport {
    pub degree_s: usize,
    pub smallest_singular_value: f64,
    pub largest_singular_value: f64,
    /// Unit-norm polynomial in the numerical kernel of M_s, when the
    /// smallest singular value falls below the relative threshold.
    pub kernel_polynomial: Option<Vec<KernelTerm>>,
}

/// Relative numerical-rank threshold for kernel extraction.
pub const KERNEL_THRESHOLD: f64 = 1e-8;

/// Monomials x^a t^b with a+b <= s in graded order.
fn monomials(s: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for d in 0..=s {
        for a in (0..=d).rev() {
            out.push((a, d - a));
        }
    }
    out
}

/// Build the bivariate moment matrix M_s and report its smallest
/// singular value; a near-kernel vector is a polynomial vanishing on
/// the support of the measure.
pub fn algebraic_support_check(table: &MomentTable, degree_s: usize) -> Result<AlgebraicSupport> {
    let needed = 2 * degree_s;
    if table.max_i() < needed || table.max_j() < needed {
        return Err(Error::InsufficientMoments(format!(
            "moment matrix M_{degree_s} needs max_i >= {needed} and max_j >= {needed}, \
             table has ({}, {})",
            table.max_i(),
            table.max_j()
        )));
    }
    let basis = monomials(degree_s);
    let dim = basis.len();
    let m = DMatrix::from_fn(dim, dim, |r, c| {
        let (a, b) = basis[r];
        let (c_, d_) = basis[c];
        table.gamma(a + c_, b + d_)
    });
    let svd = m.svd(false, true);
    let smax = svd.singular_values[0];
    let smin = svd.singular_values[dim - 1];
    let kernel_polynomial = if smin <= KERNEL_THRESHOLD * smax {
        let v_t = svd.v_t.as_ref().expect("SVD requested V^T");
        let row = v_t.row(dim - 1);
        // fix the overall sign: largest-magnitude coefficient positive
        let lead = row
            .iter()
            .cloned()
            .max_by(|a, b| a.abs().partial_cmp(&b.abs()).unwrap())
            .unwrap_or(1.0);
        let sign = if lead < 0.0 { -1.0 } else { 1.0 };
        Some(
            basis
                .iter()
                .zip(row.iter())
                .map(|(&(a, b), &c)| KernelTerm {
                    x_power: a,
                    t_power: b,
                    coeff: sign * c,
                })
                .collect(),
        )
    } else {
        None
    };
    Ok(AlgebraicSupport {
        degree_s,
        smallest_singular_value: smin,
        largest_singular_value: smax,
        kernel_polynomial,
    })
}
