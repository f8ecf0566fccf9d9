//! Sequential barycenter arrays: construction from analytic measures,
//! structural validation, CDF inversion, and the level-n discrete
//! approximation.
//!
//! An array of depth `n` stores rows `j = 1..=n+1`; row `j` holds the
//! entries `μ[j][1..=2^j - 1]` with the conventions `μ[j][0] = inf Θ` and
//! `μ[j][2^j] = sup Θ`. Even entries are inherited from the previous row
//! and odd entries are conditional barycenters of the parent intervals.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::measure::{AnalyticMeasure, Domain};

/// Hard cap on array depth: the bottom row holds `2^(n+1) - 1` entries.
pub const MAX_DEPTH: usize = 20;

/// Structural conditions a triangular array must satisfy to be the
/// barycenter array of some probability measure.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Violation {
    /// Even entry `μ[j][2l]` differs from its parent `μ[j-1][l]`.
    Inheritance { j: usize, l: usize },
    /// `μ[j][l-1] > μ[j][l]`.
    Ordering { j: usize, l: usize },
    /// A degenerate left child without a degenerate right child (or the
    /// reverse) at the quadruple starting at `μ[j][4l-3]`.
    DegeneracyLink { j: usize, l: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Violation::Inheritance { j, l } => write!(f, "inheritance broken at ({j}, {l})"),
            Violation::Ordering { j, l } => write!(f, "ordering broken at ({j}, {l})"),
            Violation::DegeneracyLink { j, l } => {
                write!(f, "one-sided degenerate split at ({j}, quadruple {l})")
            }
        }
    }
}

/// Triangular array of conditional barycenters. Immutable through the
/// public API; the Gibbs sampler mutates it through crate-internal hooks
/// that keep inherited copies synchronized.
#[derive(Clone, Debug, PartialEq)]
pub struct BarycenterArray {
    domain: Domain,
    rows: Vec<Vec<f64>>,
}

impl BarycenterArray {
    /// Builds an array from raw rows; only shapes are checked here, use
    /// [`validate_sba`] for the structural conditions.
    pub fn from_rows(domain: Domain, rows: Vec<Vec<f64>>) -> Result<Self> {
        if rows.is_empty() || rows.len() > MAX_DEPTH + 1 {
            return Err(Error::InvalidMeasure(format!(
                "array must have between 1 and {} rows, got {}",
                MAX_DEPTH + 1,
                rows.len()
            )));
        }
        for (i, row) in rows.iter().enumerate() {
            let expect = (1usize << (i + 1)) - 1;
            if row.len() != expect {
                return Err(Error::InvalidMeasure(format!(
                    "row {} must have {} entries, got {}",
                    i + 1,
                    expect,
                    row.len()
                )));
            }
        }
        Ok(Self { domain, rows })
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    /// Depth `n`; the array stores rows `1..=n+1`.
    pub fn depth(&self) -> usize {
        self.rows.len() - 1
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    /// Entry `μ[j][l]` for `j` in `1..=depth+1` and `l` in `0..=2^j`,
    /// honoring the boundary conventions.
    pub fn entry(&self, j: usize, l: usize) -> f64 {
        debug_assert!(j >= 1 && j <= self.rows.len());
        if l == 0 {
            self.domain.lower()
        } else if l == 1 << j {
            self.domain.upper()
        } else {
            self.rows[j - 1][l - 1]
        }
    }

    /// Atoms of the level-`depth` approximation: the odd entries of the
    /// bottom row.
    pub fn bottom_odd_entries(&self) -> Vec<f64> {
        self.rows[self.rows.len() - 1]
            .iter()
            .copied()
            .step_by(2)
            .collect()
    }

    /// Sets the stochastic node `μ[j][l]` (`l` odd) and synchronizes its
    /// inherited copies on all deeper rows.
    pub(crate) fn set_node_synced(&mut self, j: usize, l: usize, value: f64) {
        debug_assert!(l % 2 == 1);
        self.rows[j - 1][l - 1] = value;
        let mut pos = l;
        for row in j + 1..=self.rows.len() {
            pos *= 2;
            self.rows[row - 1][pos - 1] = value;
        }
    }
}

/// Builds the depth-`n` barycenter array of an analytic measure.
pub fn build_sba(measure: &AnalyticMeasure, n: usize) -> Result<BarycenterArray> {
    if n == 0 || n > MAX_DEPTH {
        return Err(Error::InvalidMeasure(format!(
            "depth must be in 1..={MAX_DEPTH}, got {n}"
        )));
    }
    let domain = measure.domain();
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    rows.push(vec![measure.mean()]);
    for j in 2..=n + 1 {
        let prev = &rows[j - 2];
        let grid = |l: usize| -> f64 {
            if l == 0 {
                domain.lower()
            } else if l == 1 << (j - 1) {
                domain.upper()
            } else {
                prev[l - 1]
            }
        };
        let mut row = Vec::with_capacity((1 << j) - 1);
        for l in 1..=1usize << (j - 1) {
            row.push(measure.barycenter(grid(l - 1), grid(l))?);
            if l < 1 << (j - 1) {
                row.push(prev[l - 1]);
            }
        }
        rows.push(row);
    }
    Ok(BarycenterArray { domain, rows })
}

/// Checks the structural conditions with exact comparisons, returning every
/// violation found. Arrays produced by closed-form arithmetic or by the
/// prior samplers respect ordering exactly; use [`validate_sba_tol`] for
/// arrays round-tripped through text files.
pub fn validate_sba(array: &BarycenterArray) -> Vec<Violation> {
    validate_sba_tol(array, 0.0)
}

/// Tolerant variant of [`validate_sba`]: ordering and inheritance are
/// allowed to miss by `tol`.
pub fn validate_sba_tol(array: &BarycenterArray, tol: f64) -> Vec<Violation> {
    let mut out = Vec::new();
    let rows = array.rows();
    for j in 2..=rows.len() {
        // (i) even entries inherited from the previous row
        for l in 1..1usize << (j - 1) {
            if (array.entry(j, 2 * l) - array.entry(j - 1, l)).abs() > tol {
                out.push(Violation::Inheritance { j, l: 2 * l });
            }
        }
        // (ii) within-row ordering, including the domain endpoints
        for l in 1..=1usize << j {
            if array.entry(j, l - 1) - array.entry(j, l) > tol {
                out.push(Violation::Ordering { j, l });
            }
        }
        // (iii) degenerate splits must collapse both children
        for l in 1..=1usize << (j - 2) {
            let left = array.entry(j, 4 * l - 3);
            let mid = array.entry(j, 4 * l - 2);
            let right = array.entry(j, 4 * l - 1);
            if ((left - mid).abs() <= tol) != ((right - mid).abs() <= tol) {
                out.push(Violation::DegeneracyLink { j, l });
            }
        }
    }
    // row 1 ordering against the domain
    if array.entry(1, 0) - array.entry(1, 1) > tol || array.entry(1, 1) - array.entry(1, 2) > tol {
        out.push(Violation::Ordering { j: 1, l: 1 });
    }
    out
}

/// True iff every entry of row `level` is pairwise distinct (exact
/// comparison); rows are sorted, so adjacent equality is the only case.
pub fn is_regular(array: &BarycenterArray, level: usize) -> bool {
    assert!(
        level >= 1 && level <= array.depth() + 1,
        "level {level} out of range"
    );
    array.rows()[level - 1].windows(2).all(|w| w[0] != w[1])
}

/// CDF values of the encoded measure at every node of levels `1..=depth`,
/// reconstructed by the inversion recursion.
#[derive(Clone, Debug)]
pub struct NodeCdf {
    levels: Vec<Vec<f64>>,
}

impl NodeCdf {
    /// `G(μ[j][l])` for `j` in `1..=depth` and `l` in `0..=2^j`.
    pub fn value(&self, j: usize, l: usize) -> f64 {
        self.levels[j - 1][l]
    }

    pub fn levels(&self) -> &[Vec<f64>] {
        &self.levels
    }
}

fn conditional_left_mass(left: f64, mid: f64, right: f64) -> f64 {
    let num = right - mid;
    let den = right - left;
    if den == 0.0 {
        // 0/0 = 1: full conditional mass on a degenerate subinterval.
        1.0
    } else {
        num / den
    }
}

/// Reconstructs the CDF at the array's nodes via the inversion recursion.
///
/// Level-`j` odd nodes read the barycenters of their two children on row
/// `j+1`, so values are available for levels `1..=depth` exactly.
pub fn invert_cdf(array: &BarycenterArray) -> Result<NodeCdf> {
    let violations = validate_sba(array);
    if !violations.is_empty() {
        return Err(Error::InvalidArray(violations));
    }
    Ok(invert_cdf_trusted(array))
}

/// Inversion without re-validating; for arrays whose validity is
/// maintained structurally (sampler states, fresh constructions).
pub(crate) fn invert_cdf_trusted(array: &BarycenterArray) -> NodeCdf {
    let depth = array.depth();
    let mut levels: Vec<Vec<f64>> = Vec::with_capacity(depth);
    for j in 1..=depth {
        let mut grid = vec![0.0; (1 << j) + 1];
        grid[1 << j] = 1.0;
        for l in 1..=1usize << (j - 1) {
            // parent barycenter and its two children on the next row
            let left = array.entry(j + 1, 4 * l - 3);
            let mid = array.entry(j + 1, 4 * l - 2);
            let right = array.entry(j + 1, 4 * l - 1);
            let p = conditional_left_mass(left, mid, right);
            let (g_lo, g_hi) = if j == 1 {
                (0.0, 1.0)
            } else {
                (levels[j - 2][l - 1], levels[j - 2][l])
            };
            grid[2 * l - 1] = g_lo + (g_hi - g_lo) * p;
            if l < 1 << (j - 1) {
                grid[2 * l] = if j == 1 { 1.0 } else { levels[j - 2][l] };
            }
        }
        levels.push(grid);
    }
    NodeCdf { levels }
}

/// Cell masses `w[l] = G(μ[n][l]) - G(μ[n][l-1])` for `l = 1..=2^n` at the
/// array's depth `n`.
pub fn weights_level_n(array: &BarycenterArray) -> Result<Vec<f64>> {
    let violations = validate_sba(array);
    if !violations.is_empty() {
        return Err(Error::InvalidArray(violations));
    }
    Ok(weights_level_n_trusted(array))
}

pub(crate) fn weights_level_n_trusted(array: &BarycenterArray) -> Vec<f64> {
    let cdf = invert_cdf_trusted(array);
    cell_weights(&cdf, array.depth())
}

pub(crate) fn cell_weights(cdf: &NodeCdf, n: usize) -> Vec<f64> {
    let grid = &cdf.levels()[n - 1];
    grid.windows(2).map(|w| (w[1] - w[0]).max(0.0)).collect()
}

/// Sorted atoms with strictly positive weights summing to one.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteMeasure {
    atoms: Vec<f64>,
    weights: Vec<f64>,
}

impl DiscreteMeasure {
    /// Sorts by atom, merges exactly-equal atoms (summing their weights),
    /// drops zero-weight atoms, and checks the weights sum to one.
    pub fn new(atoms: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if atoms.len() != weights.len() {
            return Err(Error::InvalidMeasure(
                "atom/weight length mismatch".into(),
            ));
        }
        if atoms.iter().any(|a| !a.is_finite()) || weights.iter().any(|w| !w.is_finite() || *w < 0.0)
        {
            return Err(Error::InvalidMeasure(
                "atoms must be finite and weights nonnegative".into(),
            ));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > crate::measure::WEIGHT_SUM_TOL {
            return Err(Error::InvalidMeasure(format!(
                "weights sum to {total}, not 1"
            )));
        }
        let mut pairs: Vec<(f64, f64)> = atoms.into_iter().zip(weights).collect();
        pairs.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap());
        let mut out_atoms: Vec<f64> = Vec::with_capacity(pairs.len());
        let mut out_weights: Vec<f64> = Vec::with_capacity(pairs.len());
        for (a, w) in pairs {
            if w == 0.0 {
                continue;
            }
            if out_atoms.last() == Some(&a) {
                *out_weights.last_mut().unwrap() += w;
            } else {
                out_atoms.push(a);
                out_weights.push(w);
            }
        }
        if out_atoms.is_empty() {
            return Err(Error::InvalidMeasure("all atoms had zero weight".into()));
        }
        Ok(Self {
            atoms: out_atoms,
            weights: out_weights,
        })
    }

    pub fn atoms(&self) -> &[f64] {
        &self.atoms
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// First moment `Σ w_l θ_l`.
    pub fn mean(&self) -> f64 {
        self.atoms
            .iter()
            .zip(&self.weights)
            .map(|(a, w)| a * w)
            .sum()
    }

    /// CSV with header `atom,weight`, full double precision.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("atom,weight\n");
        for (a, w) in self.atoms.iter().zip(&self.weights) {
            s.push_str(&format!("{a:.16e},{w:.16e}\n"));
        }
        s
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut atoms = Vec::new();
        let mut weights = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || (i == 0 && line.eq_ignore_ascii_case("atom,weight")) {
                continue;
            }
            let (a, w) = line
                .split_once(',')
                .ok_or_else(|| Error::Parse(format!("line {}: expected 'atom,weight'", i + 1)))?;
            atoms.push(parse_f64(a, i + 1)?);
            weights.push(parse_f64(w, i + 1)?);
        }
        Self::new(atoms, weights)
    }
}

/// Level-`n` discrete approximation: cell masses placed at the bottom-row
/// odd barycenters. Exactly-colliding atoms merge and zero-weight atoms
/// drop, which is what makes finite-support targets recover exactly.
pub fn approximate(measure: &AnalyticMeasure, n: usize) -> Result<DiscreteMeasure> {
    let array = build_sba(measure, n)?;
    let weights = weights_level_n_trusted(&array);
    DiscreteMeasure::new(array.bottom_odd_entries(), weights)
}

/// Mean of a discrete measure; equals the root entry of the array it came
/// from.
pub fn discrete_mean(measure: &DiscreteMeasure) -> f64 {
    measure.mean()
}

fn parse_f64(s: &str, line: usize) -> Result<f64> {
    f64::from_str(s.trim()).map_err(|e| Error::Parse(format!("line {line}: {e}: {s:?}")))
}

impl BarycenterArray {
    /// Text format: `domain <lower> <upper>` then one line per row, entries
    /// at 17 significant digits.
    pub fn to_text(&self) -> String {
        let mut s = format!("domain {:.16e} {:.16e}\n", self.domain.lower(), self.domain.upper());
        for row in &self.rows {
            let line: Vec<String> = row.iter().map(|x| format!("{x:.16e}")).collect();
            s.push_str(&line.join(" "));
            s.push('\n');
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (ln, header) = lines
            .next()
            .ok_or_else(|| Error::Parse("empty array file".into()))?;
        let mut parts = header.split_whitespace();
        if parts.next() != Some("domain") {
            return Err(Error::Parse(format!(
                "line {}: expected 'domain <lower> <upper>'",
                ln + 1
            )));
        }
        let lower = parse_f64(
            parts
                .next()
                .ok_or_else(|| Error::Parse("missing domain lower bound".into()))?,
            ln + 1,
        )?;
        let upper = parse_f64(
            parts
                .next()
                .ok_or_else(|| Error::Parse("missing domain upper bound".into()))?,
            ln + 1,
        )?;
        let domain = Domain::new(lower, upper)
            .map_err(|e| Error::Parse(format!("line {}: {e}", ln + 1)))?;
        let mut rows = Vec::new();
        for (ln, line) in lines {
            let row: Result<Vec<f64>> = line
                .split_whitespace()
                .map(|tok| parse_f64(tok, ln + 1))
                .collect();
            rows.push(row?);
        }
        Self::from_rows(domain, rows)
    }
}
