//! Random barycenter arrays and the location–scale priors built on them.
//!
//! A draw proceeds root-down: the root comes from its own law, every other
//! odd node from its law restricted to the parent interval, and the
//! weights are reconstructed through the inversion recursion. Because the
//! reconstruction preserves the barycentric identity at every node, the
//! mean of each realized measure equals the sampled root exactly; fixing
//! the root law to a point mass therefore pins the mean.

use std::collections::HashMap;

use rand::Rng;
use rand_distr::Distribution;
use statrs::distribution::ContinuousCDF;

use crate::error::{Error, Result};
use crate::measure::Domain;
use crate::sba::{self, BarycenterArray, DiscreteMeasure, MAX_DEPTH};

const LN_2PI: f64 = 1.8378770664093453;

/// Base law for one node of the array.
///
/// A degenerate law is permitted only at the root: below the root the
/// restricted-sampling step needs an absolutely continuous law.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum NodeLaw {
    Normal { mean: f64, sd: f64 },
    Degenerate { value: f64 },
    Uniform { a: f64, b: f64 },
}

impl NodeLaw {
    fn validate(&self) -> Result<()> {
        match *self {
            NodeLaw::Normal { mean, sd } => {
                if !mean.is_finite() || !(sd > 0.0) || !sd.is_finite() {
                    return Err(Error::InvalidPrior(format!(
                        "normal law needs finite mean and sd > 0, got ({mean}, {sd})"
                    )));
                }
            }
            NodeLaw::Degenerate { value } => {
                if !value.is_finite() {
                    return Err(Error::InvalidPrior("degenerate law at non-finite value".into()));
                }
            }
            NodeLaw::Uniform { a, b } => {
                if !(a < b) || !a.is_finite() || !b.is_finite() {
                    return Err(Error::InvalidPrior(format!(
                        "uniform law needs finite a < b, got ({a}, {b})"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn is_degenerate(&self) -> bool {
        matches!(self, NodeLaw::Degenerate { .. })
    }

    /// CDF; extended-real arguments clamp to 0/1.
    pub fn cdf(&self, x: f64) -> f64 {
        if x == f64::NEG_INFINITY {
            return 0.0;
        }
        if x == f64::INFINITY {
            return 1.0;
        }
        match *self {
            NodeLaw::Normal { mean, sd } => statrs::distribution::Normal::new(mean, sd)
                .expect("validated")
                .cdf(x),
            NodeLaw::Degenerate { value } => {
                if x >= value {
                    1.0
                } else {
                    0.0
                }
            }
            NodeLaw::Uniform { a, b } => ((x - a) / (b - a)).clamp(0.0, 1.0),
        }
    }

    /// Inverse CDF for `u` in `(0, 1)`.
    pub fn quantile(&self, u: f64) -> f64 {
        match *self {
            NodeLaw::Normal { mean, sd } => statrs::distribution::Normal::new(mean, sd)
                .expect("validated")
                .inverse_cdf(u),
            NodeLaw::Degenerate { value } => value,
            NodeLaw::Uniform { a, b } => a + u * (b - a),
        }
    }

    /// Log density with respect to Lebesgue measure. Degenerate laws have
    /// none; they are never slice-updated, so this returns `-inf` off the
    /// atom as a safe sentinel.
    pub fn log_pdf(&self, x: f64) -> f64 {
        match *self {
            NodeLaw::Normal { mean, sd } => {
                let z = (x - mean) / sd;
                -sd.ln() - 0.5 * LN_2PI - 0.5 * z * z
            }
            NodeLaw::Degenerate { value } => {
                if x == value {
                    0.0
                } else {
                    f64::NEG_INFINITY
                }
            }
            NodeLaw::Uniform { a, b } => {
                if x >= a && x <= b {
                    -(b - a).ln()
                } else {
                    f64::NEG_INFINITY
                }
            }
        }
    }
}

/// The collection of base laws indexed by node, with a shared default and
/// per-node overrides.
#[derive(Clone, Debug)]
pub struct NodeLawFamily {
    domain: Domain,
    depth: usize,
    default: NodeLaw,
    overrides: HashMap<(usize, usize), NodeLaw>,
}

impl NodeLawFamily {
    pub fn new(
        domain: Domain,
        depth: usize,
        default: NodeLaw,
        overrides: HashMap<(usize, usize), NodeLaw>,
    ) -> Result<Self> {
        if depth == 0 || depth > MAX_DEPTH {
            return Err(Error::InvalidPrior(format!(
                "depth must be in 1..={MAX_DEPTH}, got {depth}"
            )));
        }
        default.validate()?;
        if default.is_degenerate() {
            return Err(Error::InvalidPrior(
                "the default law applies below the root and may not be degenerate".into(),
            ));
        }
        for (&(j, l), law) in &overrides {
            law.validate()?;
            if j < 1 || j > depth + 1 || l % 2 == 0 || l > (1 << j) - 1 {
                return Err(Error::InvalidPrior(format!(
                    "override index ({j}, {l}) is not an odd node of a depth-{depth} array"
                )));
            }
            if law.is_degenerate() && (j, l) != (1, 1) {
                return Err(Error::InvalidPrior(format!(
                    "degenerate law only permitted at the root, found at ({j}, {l})"
                )));
            }
        }
        if let Some(NodeLaw::Degenerate { value }) = overrides.get(&(1, 1)) {
            if !domain.contains(*value) {
                return Err(Error::InvalidPrior(format!(
                    "degenerate root at {value} lies outside the domain"
                )));
            }
        }
        Ok(Self {
            domain,
            depth,
            default,
            overrides,
        })
    }

    /// One shared law at every node.
    pub fn homogeneous(domain: Domain, depth: usize, default: NodeLaw) -> Result<Self> {
        Self::new(domain, depth, default, HashMap::new())
    }

    /// Shared law everywhere except the root.
    pub fn with_root(domain: Domain, depth: usize, default: NodeLaw, root: NodeLaw) -> Result<Self> {
        let mut overrides = HashMap::new();
        overrides.insert((1, 1), root);
        Self::new(domain, depth, default, overrides)
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn law_at(&self, j: usize, l: usize) -> &NodeLaw {
        self.overrides.get(&(j, l)).unwrap_or(&self.default)
    }

    pub fn root_is_degenerate(&self) -> bool {
        self.law_at(1, 1).is_degenerate()
    }
}

/// Prior on the dispersion atoms.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ScaleLaw {
    /// Density `∝ φ^{-shape-1} exp(-rate/φ)`.
    InverseGamma { shape: f64, rate: f64 },
    /// Density `∝ φ^{shape-1} exp(-rate·φ)`.
    Gamma { shape: f64, rate: f64 },
    LogNormal { mu: f64, sigma: f64 },
}

impl ScaleLaw {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            ScaleLaw::InverseGamma { shape, rate } | ScaleLaw::Gamma { shape, rate } => {
                shape > 0.0 && rate > 0.0 && shape.is_finite() && rate.is_finite()
            }
            ScaleLaw::LogNormal { mu, sigma } => mu.is_finite() && sigma > 0.0 && sigma.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidPrior(format!("scale law parameters invalid: {self:?}")))
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            ScaleLaw::InverseGamma { shape, rate } => sample_inverse_gamma(shape, rate, rng),
            ScaleLaw::Gamma { shape, rate } => rand_distr::Gamma::new(shape, 1.0 / rate)
                .expect("validated")
                .sample(rng),
            ScaleLaw::LogNormal { mu, sigma } => rand_distr::LogNormal::new(mu, sigma)
                .expect("validated")
                .sample(rng),
        }
    }

    pub fn log_pdf(&self, phi: f64) -> f64 {
        if phi <= 0.0 {
            return f64::NEG_INFINITY;
        }
        match *self {
            ScaleLaw::InverseGamma { shape, rate } => {
                shape * rate.ln() - statrs::function::gamma::ln_gamma(shape)
                    - (shape + 1.0) * phi.ln()
                    - rate / phi
            }
            ScaleLaw::Gamma { shape, rate } => {
                shape * rate.ln() - statrs::function::gamma::ln_gamma(shape)
                    + (shape - 1.0) * phi.ln()
                    - rate * phi
            }
            ScaleLaw::LogNormal { mu, sigma } => {
                let z = (phi.ln() - mu) / sigma;
                -phi.ln() - sigma.ln() - 0.5 * LN_2PI - 0.5 * z * z
            }
        }
    }

    pub fn cdf(&self, phi: f64) -> f64 {
        if phi <= 0.0 {
            return 0.0;
        }
        match *self {
            ScaleLaw::InverseGamma { shape, rate } => {
                statrs::distribution::InverseGamma::new(shape, rate)
                    .expect("validated")
                    .cdf(phi)
            }
            ScaleLaw::Gamma { shape, rate } => statrs::distribution::Gamma::new(shape, rate)
                .expect("validated")
                .cdf(phi),
            ScaleLaw::LogNormal { mu, sigma } => statrs::distribution::LogNormal::new(mu, sigma)
                .expect("validated")
                .cdf(phi),
        }
    }
}

/// Draws `1/X` with `X ~ Gamma(shape, rate)`.
pub(crate) fn sample_inverse_gamma<R: Rng + ?Sized>(shape: f64, rate: f64, rng: &mut R) -> f64 {
    let g = rand_distr::Gamma::new(shape, 1.0 / rate).expect("positive parameters");
    loop {
        let x: f64 = g.sample(rng);
        if x > 0.0 && x.is_finite() {
            return 1.0 / x;
        }
    }
}

/// Dirichlet draw by normalized Gamma variates.
pub(crate) fn sample_dirichlet<R: Rng + ?Sized>(alpha: &[f64], rng: &mut R) -> Vec<f64> {
    if alpha.len() == 1 {
        return vec![1.0];
    }
    loop {
        let draws: Vec<f64> = alpha
            .iter()
            .map(|&a| {
                rand_distr::Gamma::new(a, 1.0)
                    .expect("positive concentration")
                    .sample(rng)
            })
            .collect();
        let total: f64 = draws.iter().sum();
        if total > 0.0 && total.is_finite() {
            return draws.iter().map(|d| d / total).collect();
        }
    }
}

/// Inverse-CDF draw from `law` restricted to `(a, b]`: `u` is uniform on
/// `(F(a), F(b)]` and the result is `F⁻¹(u)`, nudged back inside the
/// interval if final rounding pushed it out.
pub fn sample_restricted<R: Rng + ?Sized>(
    law: &NodeLaw,
    a: f64,
    b: f64,
    rng: &mut R,
) -> Result<f64> {
    if let NodeLaw::Degenerate { value } = *law {
        return if a < value && value <= b {
            Ok(value)
        } else {
            Err(Error::DegenerateOutsideInterval { value, lo: a, hi: b })
        };
    }
    let fa = law.cdf(a);
    let fb = law.cdf(b);
    let mass = fb - fa;
    if !(mass > 0.0) {
        return Err(Error::EmptyRestriction { lo: a, hi: b });
    }
    for _ in 0..64 {
        let t: f64 = rng.random();
        // t in [0, 1) puts u in (fa, fb]
        let u = fb - t * mass;
        let x = law.quantile(u);
        if x.is_finite() && x > a && x <= b {
            return Ok(x);
        }
        if x.is_finite() {
            // Rounding at a tight interval; clamp into (a, b].
            return Ok(clamp_open_closed(x, a, b));
        }
    }
    // Unbounded endpoint kept producing infinities: take a midpoint-ish
    // fallback deep inside the interval.
    Ok(clamp_open_closed(law.quantile(fa + 0.5 * mass), a, b))
}

fn clamp_open_closed(x: f64, a: f64, b: f64) -> f64 {
    if x > a && x <= b {
        return x;
    }
    if a.is_finite() && b.is_finite() {
        let inset = a + (b - a) * 1e-12;
        if x <= a {
            if inset > a {
                inset
            } else {
                b
            }
        } else {
            b
        }
    } else if x <= a {
        // a finite here, otherwise anything is > a
        a + 1e-12 * (1.0 + a.abs())
    } else {
        b
    }
}

/// Joint location–dispersion atoms with weights: the mixing measures the
/// kernels integrate against.
#[derive(Clone, Debug, PartialEq)]
pub struct JointDiscreteMeasure {
    atoms: Vec<(f64, f64)>,
    weights: Vec<f64>,
}

impl JointDiscreteMeasure {
    pub fn new(atoms: Vec<(f64, f64)>, weights: Vec<f64>) -> Result<Self> {
        if atoms.len() != weights.len() || atoms.is_empty() {
            return Err(Error::InvalidMeasure(
                "atom/weight lengths must match and be nonempty".into(),
            ));
        }
        if atoms.iter().any(|&(t, p)| !t.is_finite() || !(p > 0.0)) {
            return Err(Error::InvalidMeasure(
                "locations must be finite and dispersions positive".into(),
            ));
        }
        let total: f64 = weights.iter().sum();
        if weights.iter().any(|w| *w < 0.0) || (total - 1.0).abs() > crate::measure::WEIGHT_SUM_TOL
        {
            return Err(Error::InvalidMeasure(format!(
                "weights must be nonnegative and sum to 1, got {total}"
            )));
        }
        Ok(Self { atoms, weights })
    }

    pub fn atoms(&self) -> &[(f64, f64)] {
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

    /// Mean of the location marginal, `Σ w_l θ_l`.
    pub fn theta_mean(&self) -> f64 {
        self.atoms
            .iter()
            .zip(&self.weights)
            .map(|(&(t, _), w)| t * w)
            .sum()
    }

    /// Location marginal as a discrete measure (atoms merged).
    pub fn theta_marginal(&self) -> DiscreteMeasure {
        DiscreteMeasure::new(
            self.atoms.iter().map(|&(t, _)| t).collect(),
            self.weights.clone(),
        )
        .expect("valid by construction")
    }
}

/// A sampled array together with its raw level-n cells. Unlike
/// [`DiscreteMeasure`], zero-weight cells are kept so that positions stay
/// aligned with the array; the Gibbs sampler needs that alignment.
pub(crate) struct SampledCells {
    pub array: BarycenterArray,
    pub atoms: Vec<f64>,
    pub weights: Vec<f64>,
}

pub(crate) fn draw_sba_cells<R: Rng + ?Sized>(
    family: &NodeLawFamily,
    rng: &mut R,
) -> Result<SampledCells> {
    let n = family.depth();
    let domain = family.domain();
    let root_law = family.law_at(1, 1);
    let root = if let NodeLaw::Degenerate { value } = *root_law {
        value
    } else {
        sample_restricted(root_law, domain.lower(), domain.upper(), rng)?
    };
    let mut rows: Vec<Vec<f64>> = vec![vec![root]];
    for j in 2..=n + 1 {
        let prev = rows[j - 2].clone();
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
            let (lo, hi) = (grid(l - 1), grid(l));
            let value = if lo == hi {
                lo
            } else {
                sample_restricted(family.law_at(j, 2 * l - 1), lo, hi, rng)?
            };
            row.push(value);
            if l < 1 << (j - 1) {
                row.push(prev[l - 1]);
            }
        }
        rows.push(row);
    }
    let array = BarycenterArray::from_rows(domain, rows)?;
    debug_assert!(sba::validate_sba(&array).is_empty());
    let weights = sba::weights_level_n_trusted(&array);
    let atoms = array.bottom_odd_entries();
    Ok(SampledCells {
        array,
        atoms,
        weights,
    })
}

/// Draws one random barycenter array and the discrete measure it encodes.
pub fn draw_random_sba<R: Rng + ?Sized>(
    family: &NodeLawFamily,
    rng: &mut R,
) -> Result<(BarycenterArray, DiscreteMeasure)> {
    let cells = draw_sba_cells(family, rng)?;
    let measure = DiscreteMeasure::new(cells.atoms, cells.weights)?;
    Ok((cells.array, measure))
}

/// Parsimonious location–scale draw: one independent dispersion atom per
/// location atom.
pub fn draw_parsimonious<R: Rng + ?Sized>(
    family: &NodeLawFamily,
    scale: &ScaleLaw,
    rng: &mut R,
) -> Result<JointDiscreteMeasure> {
    let cells = draw_sba_cells(family, rng)?;
    let atoms = cells
        .atoms
        .iter()
        .map(|&theta| (theta, scale.sample(rng)))
        .collect();
    JointDiscreteMeasure::new(atoms, cells.weights)
}

/// General location–scale draw: `m2` global dispersion atoms shared across
/// locations, with an independent Dirichlet row of scale weights per
/// location; the result is the product measure over the `m1 × m2` pairs.
pub fn draw_general<R: Rng + ?Sized>(
    family: &NodeLawFamily,
    scale: &ScaleLaw,
    m2: usize,
    alpha: &[f64],
    rng: &mut R,
) -> Result<JointDiscreteMeasure> {
    if m2 == 0 || alpha.len() != m2 {
        return Err(Error::InvalidPrior(format!(
            "need m2 >= 1 Dirichlet parameters, got m2 = {m2} and {} entries",
            alpha.len()
        )));
    }
    if alpha.iter().any(|a| !(*a > 0.0)) {
        return Err(Error::InvalidPrior("Dirichlet parameters must be positive".into()));
    }
    let cells = draw_sba_cells(family, rng)?;
    let phis: Vec<f64> = (0..m2).map(|_| scale.sample(rng)).collect();
    let mut atoms = Vec::with_capacity(cells.atoms.len() * m2);
    let mut weights = Vec::with_capacity(cells.atoms.len() * m2);
    for (&theta, &w_theta) in cells.atoms.iter().zip(&cells.weights) {
        let scale_weights = sample_dirichlet(alpha, rng);
        for (&phi, &w_phi) in phis.iter().zip(&scale_weights) {
            atoms.push((theta, phi));
            weights.push(w_theta * w_phi);
        }
    }
    JointDiscreteMeasure::new(atoms, weights)
}
