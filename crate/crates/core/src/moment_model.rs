//! Ingestion and validation of the doubly-indexed moment table γ_i(j),
//! plus the Δ transform of its rows into basis-coefficient vectors.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series_algebra::LegendreSeries;

/// Marginal of the measure with respect to t.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Marginal {
    /// Named marginal; only "lebesgue" is recognized.
    Named(String),
    /// Explicit moment vector (m_0..m_J) of the t-marginal.
    Explicit(Vec<f64>),
}

impl Marginal {
    pub fn lebesgue() -> Self {
        Marginal::Named("lebesgue".into())
    }

    pub fn is_lebesgue(&self) -> bool {
        matches!(self, Marginal::Named(n) if n == "lebesgue")
    }

    /// Expected value of γ_0(j) under this marginal.
    pub fn moment(&self, j: usize) -> Option<f64> {
        match self {
            Marginal::Named(_) => Some(1.0 / (j as f64 + 1.0)),
            Marginal::Explicit(m) => m.get(j).copied(),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct LoadOptions {
    /// Tolerance for the marginal and mass invariants; upstream SDP
    /// solvers deliver noisy moments.
    pub marginal_tol: f64,
    /// Divide the whole table by gamma[0][0] when it is not 1.
    pub normalize: bool,
}

impl Default for LoadOptions {
    fn default() -> Self {
        LoadOptions {
            marginal_tol: 1e-9,
            normalize: false,
        }
    }
}

/// The moments γ_i(j) = ∫ tʲ xⁱ dμ(x,t) of a probability measure on
/// [0,1]², dense up to (max_i, max_j), with a declared t-marginal.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentTable {
    max_i: usize,
    max_j: usize,
    gamma: Vec<Vec<f64>>,
    marginal: Marginal,
}

impl MomentTable {
    /// Validate and wrap a dense moment matrix.
    pub fn new(gamma: Vec<Vec<f64>>, marginal: Marginal, options: LoadOptions) -> Result<Self> {
        if gamma.is_empty() || gamma[0].is_empty() {
            return Err(Error::MissingMoments("empty gamma matrix".into()));
        }
        let max_i = gamma.len() - 1;
        let max_j = gamma[0].len() - 1;
        let mut gamma = gamma;
        for (i, row) in gamma.iter().enumerate() {
            if row.len() != max_j + 1 {
                return Err(Error::MissingMoments(format!(
                    "row i={i} has {} entries, expected {}",
                    row.len(),
                    max_j + 1
                )));
            }
            if let Some(j) = row.iter().position(|v| !v.is_finite()) {
                return Err(Error::NonFinite(format!("gamma[{i}][{j}]")));
            }
        }
        if let Marginal::Named(name) = &marginal {
            if name != "lebesgue" {
                return Err(Error::Parse(format!("unknown marginal \"{name}\"")));
            }
        }

        let tol = options.marginal_tol;
        let mass = gamma[0][0];
        if (mass - 1.0).abs() > tol {
            if options.normalize && mass.is_finite() && mass > 0.0 {
                for row in &mut gamma {
                    for v in row.iter_mut() {
                        *v /= mass;
                    }
                }
            } else {
                return Err(Error::NotProbability(mass));
            }
        }

        let marginal = match marginal {
            // an explicit marginal was declared at the unnormalized scale
            Marginal::Explicit(m) if options.normalize && (mass - 1.0).abs() > tol => {
                Marginal::Explicit(m.into_iter().map(|v| v / mass).collect())
            }
            other => other,
        };

        for j in 0..=max_j {
            let expected = marginal.moment(j).ok_or_else(|| {
                Error::MissingMoments(format!("explicit marginal has no moment m_{j}"))
            })?;
            let actual = gamma[0][j];
            if (actual - expected).abs() > tol {
                return Err(Error::MarginalViolation {
                    j,
                    expected,
                    actual,
                });
            }
        }

        // box-support necessary bound: 0 ≤ xⁱ ≤ 1 on [0,1]²
        for i in 0..=max_i {
            for j in 0..=max_j {
                let v = gamma[i][j];
                if v < -tol || v > gamma[0][j] + tol {
                    return Err(Error::InvalidParameter(format!(
                        "gamma[{i}][{j}] = {v} violates 0 <= gamma_i(j) <= gamma_0(j) = {}",
                        gamma[0][j]
                    )));
                }
            }
        }

        Ok(MomentTable {
            max_i,
            max_j,
            gamma,
            marginal,
        })
    }

    pub fn max_i(&self) -> usize {
        self.max_i
    }

    pub fn max_j(&self) -> usize {
        self.max_j
    }

    pub fn gamma(&self, i: usize, j: usize) -> f64 {
        self.gamma[i][j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.gamma[i]
    }

    pub fn marginal(&self) -> &Marginal {
        &self.marginal
    }

    /// Parse the CSV format: header `i,j,value`, one dense entry per row,
    /// arbitrary row order. The marginal is taken to be Lebesgue.
    pub fn from_csv(text: &str, options: LoadOptions) -> Result<Self> {
        let mut cells: BTreeMap<(usize, usize), f64> = BTreeMap::new();
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, header)) if header.trim().eq_ignore_ascii_case("i,j,value") => {}
            _ => return Err(Error::Parse("expected header \"i,j,value\"".into())),
        }
        for (lineno, line) in lines {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let mut parts = line.split(',');
            let parse = |s: Option<&str>, what: &str| -> Result<String> {
                s.map(|v| v.trim().to_string()).ok_or_else(|| {
                    Error::Parse(format!("line {}: missing {what}", lineno + 1))
                })
            };
            let i: usize = parse(parts.next(), "i")?
                .parse()
                .map_err(|e| Error::Parse(format!("line {}: bad i ({e})", lineno + 1)))?;
            let j: usize = parse(parts.next(), "j")?
                .parse()
                .map_err(|e| Error::Parse(format!("line {}: bad j ({e})", lineno + 1)))?;
            let value: f64 = parse(parts.next(), "value")?
                .parse()
                .map_err(|e| Error::Parse(format!("line {}: bad value ({e})", lineno + 1)))?;
            if cells.insert((i, j), value).is_some() {
                return Err(Error::Parse(format!(
                    "duplicate entry for (i,j) = ({i},{j})"
                )));
            }
        }
        let max_i = cells.keys().map(|&(i, _)| i).max().unwrap_or(0);
        let max_j = cells.keys().map(|&(_, j)| j).max().unwrap_or(0);
        let mut missing = Vec::new();
        let mut gamma = vec![vec![0.0; max_j + 1]; max_i + 1];
        for i in 0..=max_i {
            for j in 0..=max_j {
                match cells.get(&(i, j)) {
                    Some(&v) => gamma[i][j] = v,
                    None => missing.push(format!("({i},{j})")),
                }
            }
        }
        if !missing.is_empty() {
            return Err(Error::MissingMoments(missing.join(", ")));
        }
        MomentTable::new(gamma, Marginal::lebesgue(), options)
    }

    /// Parse the structured (JSON) format, rescaling from a declared box
    /// [a,b]×[c,d] (x in [a,b], t in [c,d]) to [0,1]² when present.
    pub fn from_structured(text: &str, options: LoadOptions) -> Result<Self> {
        let file: StructuredTable =
            serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        if file.gamma.len() != file.max_i + 1 {
            return Err(Error::MissingMoments(format!(
                "gamma has {} rows, max_i = {}",
                file.gamma.len(),
                file.max_i
            )));
        }
        for (i, row) in file.gamma.iter().enumerate() {
            if row.len() != file.max_j + 1 {
                return Err(Error::MissingMoments(format!(
                    "gamma row {i} has {} entries, max_j = {}",
                    row.len(),
                    file.max_j
                )));
            }
        }
        let gamma = match file.rescale_box {
            Some(bx) => rescale_moments(&file.gamma, bx)?,
            None => file.gamma,
        };
        MomentTable::new(gamma, file.marginal, options)
    }

    /// Serialize as the CSV wire format.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("i,j,value\n");
        for i in 0..=self.max_i {
            for j in 0..=self.max_j {
                writeln!(out, "{i},{j},{:.17e}", self.gamma[i][j]).unwrap();
            }
        }
        out
    }

    /// Serialize as the structured (JSON) wire format.
    pub fn to_structured(&self) -> String {
        let file = StructuredTable {
            rescale_box: None,
            marginal: self.marginal.clone(),
            max_i: self.max_i,
            max_j: self.max_j,
            gamma: self.gamma.clone(),
        };
        serde_json::to_string_pretty(&file).unwrap()
    }

    /// Δγ_i truncated at `degree`: the Legendre-Fourier coefficients of
    /// the disintegration density f_i(t) = ∫ xⁱ ψ(dx|t). Requires a
    /// Lebesgue marginal; for explicit marginals the analogous transform
    /// lives in `orthopoly_general::general_coefficient_row`.
    pub fn coefficient_row(&self, i: usize, degree: usize) -> Result<LegendreSeries> {
        if i > self.max_i {
            return Err(Error::InvalidParameter(format!(
                "row index i = {i} exceeds max_i = {}",
                self.max_i
            )));
        }
        if degree > self.max_j {
            return Err(Error::InsufficientMoments(format!(
                "need max_j >= {degree}, table has max_j = {}",
                self.max_j
            )));
        }
        if !self.marginal.is_lebesgue() {
            return Err(Error::BasisMismatch(
                "table has an explicit marginal; use the general-marginal transform".into(),
            ));
        }
        if degree > crate::legendre_basis::DEFAULT_DEGREE_CAP {
            return Err(Error::DegreeCap {
                requested: degree,
                cap: crate::legendre_basis::DEFAULT_DEGREE_CAP,
            });
        }
        let coeffs = crate::legendre_basis::legendre_coefficients(&self.gamma[i], degree)?;
        LegendreSeries::lebesgue(coeffs)
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct StructuredTable {
    #[serde(rename = "box", default, skip_serializing_if = "Option::is_none")]
    rescale_box: Option<[f64; 4]>,
    marginal: Marginal,
    max_i: usize,
    max_j: usize,
    gamma: Vec<Vec<f64>>,
}

/// Affine change of variables x' = (x−a)/(b−a), t' = (t−c)/(d−c):
/// γ'_i(j) is a binomial mixture of the original moments.
fn rescale_moments(gamma: &[Vec<f64>], bx: [f64; 4]) -> Result<Vec<Vec<f64>>> {
    let [a, b, c, d] = bx;
    if !(b > a && d > c) {
        return Err(Error::InvalidParameter(format!(
            "degenerate box [{a},{b}]x[{c},{d}]"
        )));
    }
    let max_i = gamma.len() - 1;
    let max_j = gamma[0].len() - 1;
    let binom = |n: usize, k: usize| -> f64 {
        let k = k.min(n - k);
        let mut acc = 1.0;
        for v in 0..k {
            acc = acc * (n - v) as f64 / (v + 1) as f64;
        }
        acc
    };
    let mut out = vec![vec![0.0; max_j + 1]; max_i + 1];
    for i in 0..=max_i {
        for j in 0..=max_j {
            let mut acc = 0.0;
            for p in 0..=i {
                for q in 0..=j {
                    acc += binom(i, p)
                        * binom(j, q)
                        * (-a).powi((i - p) as i32)
                        * (-c).powi((j - q) as i32)
                        * gamma[p][q];
                }
            }
            out[i][j] = acc / ((b - a).powi(i as i32) * (d - c).powi(j as i32));
        }
    }
    Ok(out)
}

/// Multi-coordinate moment store: moments γ(j, α) of a measure over
/// (t, x_1..x_n), indexed by the t-power j and the multi-index α.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MomentStore {
    pub num_coordinates: usize,
    pub max_power: usize,
    pub max_j: usize,
    #[serde(default = "default_store_marginal")]
    pub marginal: Marginal,
    pub entries: Vec<StoreEntry>,
}

fn default_store_marginal() -> Marginal {
    Marginal::lebesgue()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StoreEntry {
    pub j: usize,
    pub alpha: Vec<usize>,
    pub value: f64,
}

impl MomentStore {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    /// Extract the (t, x_c) marginal moment table: gamma[k][j] = γ(j, k·e_c).
    /// `coordinate` is 1-based.
    pub fn slice_coordinate(&self, coordinate: usize, options: LoadOptions) -> Result<MomentTable> {
        if coordinate == 0 || coordinate > self.num_coordinates {
            return Err(Error::InvalidParameter(format!(
                "coordinate {coordinate} out of range 1..={}",
                self.num_coordinates
            )));
        }
        let mut lookup: BTreeMap<(usize, &[usize]), f64> = BTreeMap::new();
        for e in &self.entries {
            if e.alpha.len() != self.num_coordinates {
                return Err(Error::Parse(format!(
                    "entry with alpha of length {}, expected {}",
                    e.alpha.len(),
                    self.num_coordinates
                )));
            }
            lookup.insert((e.j, e.alpha.as_slice()), e.value);
        }
        let mut gamma = vec![vec![0.0; self.max_j + 1]; self.max_power + 1];
        let mut missing = Vec::new();
        for k in 0..=self.max_power {
            let mut alpha = vec![0usize; self.num_coordinates];
            alpha[coordinate - 1] = k;
            for j in 0..=self.max_j {
                match lookup.get(&(j, alpha.as_slice())) {
                    Some(&v) => gamma[k][j] = v,
                    None => missing.push(format!("({k},{j})")),
                }
            }
        }
        if !missing.is_empty() {
            return Err(Error::MissingMoments(missing.join(", ")));
        }
        MomentTable::new(gamma, self.marginal.clone(), options)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn trajectory_t_gamma(max_i: usize, max_j: usize) -> Vec<Vec<f64>> {
        (0..=max_i)
            .map(|i| {
                (0..=max_j)
                    .map(|j| 1.0 / (i + j + 1) as f64)
                    .collect()
            })
            .collect()
    }

    fn product_gamma(max_i: usize, max_j: usize) -> Vec<Vec<f64>> {
        (0..=max_i)
            .map(|i| {
                (0..=max_j)
                    .map(|j| 1.0 / ((i + 1) * (j + 1)) as f64)
                    .collect()
            })
            .collect()
    }

    #[test]
    fn loads_trajectory_table_from_csv() {
        let mut csv = String::from("i,j,value\n");
        for i in 0..=3 {
            for j in 0..=6 {
                csv.push_str(&format!("{i},{j},{}\n", 1.0 / (i + j + 1) as f64));
            }
        }
        let t = MomentTable::from_csv(&csv, LoadOptions::default()).unwrap();
        assert_eq!(t.max_i(), 3);
        assert_eq!(t.max_j(), 6);
        assert_abs_diff_eq!(t.gamma(1, 0), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(t.gamma(2, 0), 1.0 / 3.0, epsilon = 1e-15);
    }

    #[test]
    fn marginal_violation_reported() {
        let mut gamma = product_gamma(2, 3);
        gamma[0][1] = 0.4;
        let err = MomentTable::new(gamma, Marginal::lebesgue(), LoadOptions::default())
            .unwrap_err();
        match err {
            Error::MarginalViolation { j, expected, .. } => {
                assert_eq!(j, 1);
                assert_abs_diff_eq!(expected, 0.5, epsilon = 1e-15);
            }
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn product_measure_loads_cleanly() {
        let t = MomentTable::new(
            product_gamma(4, 6),
            Marginal::lebesgue(),
            LoadOptions::default(),
        )
        .unwrap();
        assert_abs_diff_eq!(t.gamma(2, 2), 1.0 / 9.0, epsilon = 1e-15);
    }

    #[test]
    fn missing_csv_entries_rejected() {
        let csv = "i,j,value\n0,0,1.0\n0,1,0.5\n1,1,0.3333333333\n";
        let err = MomentTable::from_csv(csv, LoadOptions::default()).unwrap_err();
        assert!(matches!(err, Error::MissingMoments(_)));
    }

    #[test]
    fn mass_normalization_is_opt_in() {
        let gamma: Vec<Vec<f64>> = trajectory_t_gamma(2, 4)
            .into_iter()
            .map(|row| row.into_iter().map(|v| 2.0 * v).collect())
            .collect();
        let err = MomentTable::new(
            gamma.clone(),
            Marginal::lebesgue(),
            LoadOptions::default(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::NotProbability(_)));

        let t = MomentTable::new(
            gamma,
            Marginal::lebesgue(),
            LoadOptions {
                normalize: true,
                ..LoadOptions::default()
            },
        )
        .unwrap();
        assert_abs_diff_eq!(t.gamma(1, 1), 1.0 / 3.0, epsilon = 1e-15);
    }

    #[test]
    fn coefficient_row_examples() {
        let t = MomentTable::new(
            trajectory_t_gamma(3, 6),
            Marginal::lebesgue(),
            LoadOptions::default(),
        )
        .unwrap();
        let r1 = t.coefficient_row(1, 2).unwrap();
        let expect1 = [0.5, 0.5 / 3f64.sqrt(), 0.0];
        for (c, e) in r1.coeffs.iter().zip(&expect1) {
            assert_abs_diff_eq!(c, e, epsilon = 1e-13);
        }
        let r2 = t.coefficient_row(2, 2).unwrap();
        let expect2 = [1.0 / 3.0, 3f64.sqrt() / 6.0, 5f64.sqrt() / 30.0];
        for (c, e) in r2.coeffs.iter().zip(&expect2) {
            assert_abs_diff_eq!(c, e, epsilon = 1e-13);
        }

        let p = MomentTable::new(
            product_gamma(3, 6),
            Marginal::lebesgue(),
            LoadOptions::default(),
        )
        .unwrap();
        let pr2 = p.coefficient_row(2, 2).unwrap();
        assert_abs_diff_eq!(pr2.coeffs[0], 1.0 / 3.0, epsilon = 1e-13);
        assert!(pr2.coeffs[1].abs() <= 1e-13);
        assert!(pr2.coeffs[2].abs() <= 1e-13);
    }

    #[test]
    fn coefficient_row_zero_is_unit_vector() {
        let t = MomentTable::new(
            trajectory_t_gamma(2, 8),
            Marginal::lebesgue(),
            LoadOptions::default(),
        )
        .unwrap();
        let r0 = t.coefficient_row(0, 8).unwrap();
        assert_abs_diff_eq!(r0.coeffs[0], 1.0, epsilon = 1e-9);
        for &c in &r0.coeffs[1..] {
            assert!(c.abs() <= 1e-9);
        }
    }

    #[test]
    fn coefficient_row_is_linear_in_the_row() {
        // table rows for x(t)=t and the product measure; a convex blend of
        // the gamma rows must map to the same blend of coefficient rows
        let ta = MomentTable::new(
            trajectory_t_gamma(2, 6),
            Marginal::lebesgue(),
            LoadOptions::default(),
        )
        .unwrap();
        let tb = MomentTable::new(
            product_gamma(2, 6),
            Marginal::lebesgue(),
            LoadOptions::default(),
        )
        .unwrap();
        let blend_gamma: Vec<Vec<f64>> = (0..=2)
            .map(|i| {
                (0..=6)
                    .map(|j| 0.25 * ta.gamma(i, j) + 0.75 * tb.gamma(i, j))
                    .collect()
            })
            .collect();
        let tc = MomentTable::new(blend_gamma, Marginal::lebesgue(), LoadOptions::default())
            .unwrap();
        let ra = ta.coefficient_row(2, 6).unwrap();
        let rb = tb.coefficient_row(2, 6).unwrap();
        let rc = tc.coefficient_row(2, 6).unwrap();
        for j in 0..=6 {
            assert_abs_diff_eq!(
                rc.coeffs[j],
                0.25 * ra.coeffs[j] + 0.75 * rb.coeffs[j],
                epsilon = 1e-11
            );
        }
    }

    #[test]
    fn structured_roundtrip_and_box_rescale() {
        // x(t)=t on [0,2]² with uniform t-marginal: γ_i(j) = 2^{i+j}/(i+j+1);
        // rescaling by box [0,2,0,2] must recover 1/(i+j+1)
        let gamma: Vec<Vec<f64>> = (0..=2usize)
            .map(|i| {
                (0..=4usize)
                    .map(|j| 2f64.powi((i + j) as i32) / (i + j + 1) as f64)
                    .collect()
            })
            .collect();
        let text = serde_json::json!({
            "box": [0.0, 2.0, 0.0, 2.0],
            "marginal": "lebesgue",
            "max_i": 2,
            "max_j": 4,
            "gamma": gamma,
        })
        .to_string();
        let t = MomentTable::from_structured(&text, LoadOptions::default()).unwrap();
        for i in 0..=2 {
            for j in 0..=4 {
                assert_abs_diff_eq!(t.gamma(i, j), 1.0 / (i + j + 1) as f64, epsilon = 1e-12);
            }
        }

        let round = MomentTable::from_structured(&t.to_structured(), LoadOptions::default())
            .unwrap();
        assert_eq!(round, t);
        let csv_round = MomentTable::from_csv(&t.to_csv(), LoadOptions::default()).unwrap();
        assert_eq!(csv_round, t);
    }

    fn demo_store() -> MomentStore {
        // (x₁,x₂) = (t, t²) with Lebesgue t-marginal
        let mut entries = Vec::new();
        for j in 0..=6usize {
            for k in 0..=2usize {
                entries.push(StoreEntry {
                    j,
                    alpha: vec![k, 0],
                    value: 1.0 / (j + k + 1) as f64,
                });
                if k > 0 {
                    entries.push(StoreEntry {
                        j,
                        alpha: vec![0, k],
                        value: 1.0 / (j + 2 * k + 1) as f64,
                    });
                }
            }
        }
        MomentStore {
            num_coordinates: 2,
            max_power: 2,
            max_j: 6,
            marginal: Marginal::lebesgue(),
            entries,
        }
    }

    #[test]
    fn slice_extracts_coordinate_tables() {
        let store = demo_store();
        let t2 = store.slice_coordinate(2, LoadOptions::default()).unwrap();
        for j in 0..=6 {
            assert_abs_diff_eq!(t2.gamma(1, j), 1.0 / (j + 3) as f64, epsilon = 1e-15);
        }
        let t1 = store.slice_coordinate(1, LoadOptions::default()).unwrap();
        assert_abs_diff_eq!(t1.gamma(2, 0), 1.0 / 3.0, epsilon = 1e-15);
        assert!(store.slice_coordinate(3, LoadOptions::default()).is_err());
    }

    #[test]
    fn slice_reports_missing_entries() {
        let mut store = demo_store();
        store.entries.retain(|e| e.alpha != vec![0, 2]);
        let err = store.slice_coordinate(2, LoadOptions::default()).unwrap_err();
        match err {
            Error::MissingMoments(msg) => assert!(msg.contains("(2,0)")),
            other => panic!("unexpected error {other}"),
        }
    }
}
