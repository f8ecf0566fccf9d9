//! Posterior samplers for the parsimonious and general mixture models at
//! fixed array depth.
//!
//! A sweep updates, in order: the latent allocations, the dispersion
//! parameters (and, for the general variant, the per-location scale
//! weights and the global scale atoms), then every stochastic odd node of
//! the array bottom-up with the root last. Node updates use shrinkage
//! slice sampling whose initial bracket is the node's feasibility
//! interval, so ordering constraints can never be violated; the node's
//! full conditional is the prior density times the allocation-marginalized
//! likelihood, with weights and atoms recomputed through the inversion
//! recursion at every proposal.
//!
//! A degenerate root is never updated, which keeps the location-marginal
//! mean of every visited state pinned to the root value exactly.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::kernels::{log_kernel_unchecked, KernelKind, MixtureEval};
use crate::metrics::LogLikMatrix;
use crate::prior::{
    draw_sba_cells, sample_dirichlet, sample_inverse_gamma, JointDiscreteMeasure, NodeLawFamily,
    ScaleLaw,
};
use crate::sba::{self, BarycenterArray};
use crate::slice::{slice_sample_bounded, slice_sample_stepout};

/// Feasibility intervals narrower than this are treated as degenerate and
/// the node is frozen for the sweep.
pub const DEGENERATE_WIDTH: f64 = 1e-13;

/// Positivity floor applied to dispersions and to Beta location parameters
/// at sampler boundaries (log-Gamma poles).
pub const PHI_FLOOR: f64 = 1e-12;

/// Initial bracket width, in log units, for dispersion slice updates.
const PHI_SLICE_WIDTH: f64 = 2.0;
const PHI_MAX_STEP: u32 = 64;

#[derive(Clone, Copy, Debug)]
pub struct SliceParams {
    /// Fraction of the feasibility interval used as the initial bracket;
    /// at 1.0 the bracket is the whole interval.
    pub width_fraction: f64,
    /// Shrinkage steps before giving up and keeping the current value.
    pub max_shrink: u32,
}

impl Default for SliceParams {
    fn default() -> Self {
        Self {
            width_fraction: 1.0,
            max_shrink: 100,
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct GridSpec {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

impl GridSpec {
    pub fn points(&self) -> Vec<f64> {
        let step = (self.hi - self.lo) / (self.count - 1) as f64;
        (0..self.count).map(|k| self.lo + k as f64 * step).collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Variant {
    /// One dispersion atom per location atom.
    Parsimonious,
    /// `m2` global dispersion atoms with a Dirichlet row of scale weights
    /// per location.
    General { m2: usize, alpha: Vec<f64> },
}

#[derive(Clone, Debug)]
pub struct FitConfig {
    pub kernel: KernelKind,
    pub variant: Variant,
    pub n: usize,
    pub family: NodeLawFamily,
    pub scale_prior: ScaleLaw,
    pub iterations: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub seed: u64,
    pub slice: SliceParams,
    pub grid: GridSpec,
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        if self.family.depth() != self.n {
            return Err(Error::InvalidConfig(format!(
                "family depth {} does not match n = {}",
                self.family.depth(),
                self.n
            )));
        }
        if self.burn_in >= self.iterations {
            return Err(Error::InvalidConfig(format!(
                "burn-in {} must be below iterations {}",
                self.burn_in, self.iterations
            )));
        }
        if self.thin == 0 {
            return Err(Error::InvalidConfig("thin must be >= 1".into()));
        }
        if self.grid.count < 2 || !(self.grid.lo < self.grid.hi) {
            return Err(Error::InvalidConfig(
                "grid needs lo < hi and at least 2 points".into(),
            ));
        }
        if !(self.slice.width_fraction > 0.0 && self.slice.width_fraction <= 1.0) {
            return Err(Error::InvalidConfig(
                "slice width fraction must lie in (0, 1]".into(),
            ));
        }
        if self.slice.max_shrink == 0 {
            return Err(Error::InvalidConfig("max_shrink must be >= 1".into()));
        }
        let pd = self.kernel.parameter_domain();
        let fd = self.family.domain();
        if fd.lower() < pd.lower() || fd.upper() > pd.upper() {
            return Err(Error::InvalidConfig(format!(
                "family domain [{}, {}] escapes the {} kernel's parameter space",
                fd.lower(),
                fd.upper(),
                self.kernel.name()
            )));
        }
        self.scale_prior.validate()?;
        if let Variant::General { m2, alpha } = &self.variant {
            if *m2 == 0 || alpha.len() != *m2 {
                return Err(Error::InvalidConfig(format!(
                    "general variant needs m2 >= 1 and {m2} Dirichlet parameters, got {}",
                    alpha.len()
                )));
            }
            if alpha.iter().any(|a| !(*a > 0.0)) {
                return Err(Error::InvalidConfig(
                    "Dirichlet parameters must be positive".into(),
                ));
            }
        }
        Ok(())
    }

    fn m1(&self) -> usize {
        1 << self.n
    }
}

/// Mutable state of one chain.
#[derive(Clone, Debug)]
pub struct ChainState {
    pub(crate) array: BarycenterArray,
    pub(crate) weights: Vec<f64>,
    pub(crate) atoms: Vec<f64>,
    /// Parsimonious: one per location atom. General: the `m2` global atoms.
    pub(crate) phis: Vec<f64>,
    /// General only: `m1` rows of `m2` scale weights, each summing to one.
    pub(crate) scale_weights: Vec<Vec<f64>>,
    pub(crate) alloc_theta: Vec<usize>,
    pub(crate) alloc_phi: Vec<usize>,
}

impl ChainState {
    pub fn array(&self) -> &BarycenterArray {
        &self.array
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn atoms(&self) -> &[f64] {
        &self.atoms
    }

    pub fn phis(&self) -> &[f64] {
        &self.phis
    }

    pub fn scale_weights(&self) -> &[Vec<f64>] {
        &self.scale_weights
    }

    pub fn alloc_theta(&self) -> &[usize] {
        &self.alloc_theta
    }

    pub fn alloc_phi(&self) -> &[usize] {
        &self.alloc_phi
    }

    fn refresh_cells(&mut self) {
        self.weights = sba::weights_level_n_trusted(&self.array);
        self.atoms = self.array.bottom_odd_entries();
    }

    /// Replaces the array wholesale and recomputes the derived cells;
    /// the array must be structurally valid.
    pub fn set_array(&mut self, array: BarycenterArray) -> Result<()> {
        let violations = sba::validate_sba(&array);
        if !violations.is_empty() {
            return Err(Error::InvalidArray(violations));
        }
        self.array = array;
        self.refresh_cells();
        Ok(())
    }

    /// Mixture components `(θ, φ, w)` for the current state.
    fn components(&self, variant: &Variant) -> Vec<(f64, f64, f64)> {
        match variant {
            Variant::Parsimonious => self
                .atoms
                .iter()
                .zip(&self.phis)
                .zip(&self.weights)
                .map(|((&t, &p), &w)| (t, p, w))
                .collect(),
            Variant::General { m2, .. } => {
                let mut out = Vec::with_capacity(self.atoms.len() * m2);
                for (j1, (&t, &wt)) in self.atoms.iter().zip(&self.weights).enumerate() {
                    for (j2, &p) in self.phis.iter().enumerate() {
                        out.push((t, p, wt * self.scale_weights[j1][j2]));
                    }
                }
                out
            }
        }
    }

    /// Snapshot of the mixing measure.
    pub fn mixing(&self, variant: &Variant) -> Result<JointDiscreteMeasure> {
        let comps = self.components(variant);
        JointDiscreteMeasure::new(
            comps.iter().map(|&(t, p, _)| (t, p)).collect(),
            comps.iter().map(|&(_, _, w)| w).collect(),
        )
    }
}

/// Feasibility interval `(lo, hi]` for the odd node at row `j`, position
/// `p`: the values the node may take without breaking the array ordering
/// against any other entry.
///
/// Every row's entries reappear on the bottom row as inherited copies, so
/// the binding constraints are the bottom-row neighbors of the node's
/// deepest copy. For bottom-row nodes this is the parent interval, and for
/// nodes whose children sit on the bottom row it is the child-induced
/// interval; for higher nodes the children's own descendants tighten it
/// further.
pub fn feasible_interval(array: &BarycenterArray, j: usize, p: usize) -> (f64, f64) {
    assert!(p % 2 == 1, "only odd nodes are stochastic");
    let bottom = array.depth() + 1;
    let pos = p << (bottom - j);
    (array.entry(bottom, pos - 1), array.entry(bottom, pos + 1))
}

/// Conjugate Inverse-Gamma update for a Gaussian-kernel cluster: returns
/// the posterior `(shape, rate)` given the prior, the cluster size, and
/// the residual sum of squares around the cluster's location.
pub fn conjugate_ig_params(shape: f64, rate: f64, count: usize, residual_sq: f64) -> (f64, f64) {
    (shape + count as f64 / 2.0, rate + 0.5 * residual_sq)
}

/// Per-cluster sufficient statistics for dispersion updates.
#[derive(Clone, Copy, Debug, Default)]
pub struct ClusterStats {
    pub count: f64,
    pub theta: f64,
    /// Σ (y - θ)²
    pub residual_sq: f64,
    /// Σ ln y
    pub sum_ln: f64,
    /// Σ ln (1 - y)
    pub sum_ln1m: f64,
    /// Σ y
    pub sum_y: f64,
}

/// Log likelihood contribution of a dispersion value against one cluster's
/// sufficient statistics.
pub fn phi_log_likelihood(kind: KernelKind, stats: &ClusterStats, phi: f64) -> f64 {
    use statrs::function::gamma::ln_gamma;
    if stats.count == 0.0 {
        return 0.0;
    }
    let theta = match kind {
        KernelKind::Beta => stats.theta.clamp(PHI_FLOOR, 1.0 - PHI_FLOOR),
        KernelKind::Gamma => stats.theta.max(PHI_FLOOR),
        KernelKind::Gaussian => stats.theta,
    };
    match kind {
        KernelKind::Gaussian => {
            -0.5 * stats.count * phi.ln() - stats.residual_sq / (2.0 * phi)
        }
        KernelKind::Beta => {
            let a = theta * phi;
            let b = (1.0 - theta) * phi;
            stats.count * (ln_gamma(phi) - ln_gamma(a) - ln_gamma(b))
                + (a - 1.0) * stats.sum_ln
                + (b - 1.0) * stats.sum_ln1m
        }
        KernelKind::Gamma => {
            stats.count * (phi * (phi / theta).ln() - ln_gamma(phi))
                + (phi - 1.0) * stats.sum_ln
                - phi / theta * stats.sum_y
        }
    }
}

/// One slice transition of a dispersion parameter on the log scale,
/// targeting `Σ_groups ℓ(φ) + log p(φ)`; the `+v` Jacobian keeps the
/// φ-scale full conditional invariant.
pub fn slice_phi_update<R: Rng + ?Sized>(
    kind: KernelKind,
    groups: &[ClusterStats],
    prior: &ScaleLaw,
    phi: f64,
    max_shrink: u32,
    rng: &mut R,
) -> Result<(f64, bool)> {
    let target = |v: f64| -> f64 {
        let p = v.exp();
        if !(p > 0.0) || !p.is_finite() {
            return f64::NEG_INFINITY;
        }
        let mut acc = prior.log_pdf(p) + v;
        for g in groups {
            acc += phi_log_likelihood(kind, g, p);
        }
        acc
    };
    let out = slice_sample_stepout(
        target,
        phi.max(PHI_FLOOR).ln(),
        PHI_SLICE_WIDTH,
        PHI_MAX_STEP,
        max_shrink,
        rng,
    )?;
    Ok((out.value.exp().max(PHI_FLOOR), out.exhausted))
}

/// Driver for the Gibbs updates; owns the per-dataset caches.
pub struct Sampler<'a> {
    cfg: &'a FitConfig,
    data: &'a [f64],
    ln_y: Vec<f64>,
    ln_1my: Vec<f64>,
    pub shrink_exhausted: u64,
}

impl<'a> Sampler<'a> {
    pub fn new(cfg: &'a FitConfig, data: &'a [f64]) -> Result<Self> {
        cfg.validate()?;
        for &y in data {
            if !cfg.kernel.contains_observation(y) {
                return Err(Error::KernelDomain {
                    kernel: cfg.kernel.name(),
                    what: "observation",
                    value: y,
                    space: "sample space",
                });
            }
        }
        let ln_y = data.iter().map(|&y| y.ln()).collect();
        let ln_1my = data.iter().map(|&y| (1.0 - y).ln()).collect();
        Ok(Self {
            cfg,
            data,
            ln_y,
            ln_1my,
            shrink_exhausted: 0,
        })
    }

    /// Initial state: one prior draw.
    pub fn init_state<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<ChainState> {
        let cells = draw_sba_cells(&self.cfg.family, rng)?;
        let d = self.data.len();
        let state = match &self.cfg.variant {
            Variant::Parsimonious => ChainState {
                array: cells.array,
                atoms: cells.atoms,
                weights: cells.weights,
                phis: (0..self.cfg.m1())
                    .map(|_| self.cfg.scale_prior.sample(rng))
                    .collect(),
                scale_weights: Vec::new(),
                alloc_theta: vec![0; d],
                alloc_phi: Vec::new(),
            },
            Variant::General { m2, alpha } => ChainState {
                array: cells.array,
                atoms: cells.atoms,
                weights: cells.weights,
                phis: (0..*m2).map(|_| self.cfg.scale_prior.sample(rng)).collect(),
                scale_weights: (0..self.cfg.m1())
                    .map(|_| sample_dirichlet(alpha, rng))
                    .collect(),
                alloc_theta: vec![0; d],
                alloc_phi: vec![0; d],
            },
        };
        Ok(state)
    }

    fn data_loglik(&self, eval: &MixtureEval) -> f64 {
        let d = self.data.len();
        crate::par::sum_indexed(d, |i| {
            eval.logpdf_cached(self.data[i], self.ln_y[i], self.ln_1my[i])
        })
    }

    /// Allocation-marginalized data log likelihood for arbitrary cells.
    fn loglik_for(&self, atoms: &[f64], weights: &[f64], state: &ChainState) -> f64 {
        let comps: Vec<(f64, f64, f64)> = match &self.cfg.variant {
            Variant::Parsimonious => atoms
                .iter()
                .zip(&state.phis)
                .zip(weights)
                .map(|((&t, &p), &w)| (t, p, w))
                .collect(),
            Variant::General { m2, .. } => {
                let mut out = Vec::with_capacity(atoms.len() * m2);
                for (j1, (&t, &wt)) in atoms.iter().zip(weights).enumerate() {
                    for (j2, &p) in state.phis.iter().enumerate() {
                        out.push((t, p, wt * state.scale_weights[j1][j2]));
                    }
                }
                out
            }
        };
        self.data_loglik(&MixtureEval::new(self.cfg.kernel, &comps))
    }

    /// Draws `z_i` with probability proportional to `w_j k(y_i | θ_j, φ_j)`.
    pub fn update_allocations_parsimonious<R: Rng + ?Sized>(
        &self,
        state: &mut ChainState,
        rng: &mut R,
    ) -> Result<()> {
        let m = state.atoms.len();
        let mut logp = vec![0.0f64; m];
        let ln_w: Vec<f64> = state.weights.iter().map(|w| log_weight(*w)).collect();
        for i in 0..self.data.len() {
            for h in 0..m {
                logp[h] = if ln_w[h] == f64::NEG_INFINITY {
                    f64::NEG_INFINITY
                } else {
                    ln_w[h]
                        + log_kernel_unchecked(
                            self.cfg.kernel,
                            self.data[i],
                            state.atoms[h],
                            state.phis[h],
                        )
                };
            }
            state.alloc_theta[i] = sample_categorical_log(&logp, rng).ok_or(
                Error::AllMinusInfinity {
                    index: i,
                    value: self.data[i],
                },
            )?;
        }
        Ok(())
    }

    /// Joint draw of `(z^θ_i, z^φ_i)` over the `m1 × m2` pairs.
    pub fn update_allocations_general<R: Rng + ?Sized>(
        &self,
        state: &mut ChainState,
        rng: &mut R,
    ) -> Result<()> {
        let Variant::General { m2, .. } = &self.cfg.variant else {
            return Err(Error::InvalidConfig("not a general-variant sampler".into()));
        };
        let m1 = state.atoms.len();
        let mut logp = vec![0.0f64; m1 * m2];
        for i in 0..self.data.len() {
            for j1 in 0..m1 {
                let lw_theta = log_weight(state.weights[j1]);
                for j2 in 0..*m2 {
                    let lw = lw_theta + log_weight(state.scale_weights[j1][j2]);
                    logp[j1 * m2 + j2] = if lw == f64::NEG_INFINITY {
                        f64::NEG_INFINITY
                    } else {
                        lw + log_kernel_unchecked(
                            self.cfg.kernel,
                            self.data[i],
                            state.atoms[j1],
                            state.phis[j2],
                        )
                    };
                }
            }
            let pick = sample_categorical_log(&logp, rng).ok_or(Error::AllMinusInfinity {
                index: i,
                value: self.data[i],
            })?;
            state.alloc_theta[i] = pick / m2;
            state.alloc_phi[i] = pick % m2;
        }
        Ok(())
    }

    fn cluster_stats_parsimonious(&self, state: &ChainState) -> Vec<ClusterStats> {
        let mut stats: Vec<ClusterStats> = state
            .atoms
            .iter()
            .map(|&t| ClusterStats {
                theta: t,
                ..ClusterStats::default()
            })
            .collect();
        for (i, &h) in state.alloc_theta.iter().enumerate() {
            let y = self.data[i];
            let s = &mut stats[h];
            s.count += 1.0;
            let r = y - s.theta;
            s.residual_sq += r * r;
            s.sum_ln += self.ln_y[i];
            s.sum_ln1m += self.ln_1my[i];
            s.sum_y += y;
        }
        stats
    }

    /// Dispersion updates for the parsimonious variant: a direct conjugate
    /// draw for the Gaussian kernel with an Inverse-Gamma prior, slice
    /// sampling on the log scale otherwise; empty clusters redraw from the
    /// prior.
    pub fn update_phis_parsimonious<R: Rng + ?Sized>(
        &mut self,
        state: &mut ChainState,
        rng: &mut R,
    ) -> Result<()> {
        let stats = self.cluster_stats_parsimonious(state);
        for (h, s) in stats.iter().enumerate() {
            if s.count == 0.0 {
                state.phis[h] = self.cfg.scale_prior.sample(rng);
                continue;
            }
            if let (KernelKind::Gaussian, ScaleLaw::InverseGamma { shape, rate }) =
                (self.cfg.kernel, self.cfg.scale_prior)
            {
                let (a, b) = conjugate_ig_params(shape, rate, s.count as usize, s.residual_sq);
                state.phis[h] = sample_inverse_gamma(a, b, rng);
            } else {
                let (phi, exhausted) = slice_phi_update(
                    self.cfg.kernel,
                    std::slice::from_ref(s),
                    &self.cfg.scale_prior,
                    state.phis[h],
                    self.cfg.slice.max_shrink,
                    rng,
                )?;
                state.phis[h] = phi;
                self.shrink_exhausted += exhausted as u64;
            }
        }
        Ok(())
    }

    /// Per-location Dirichlet update of the scale-weight rows.
    pub fn update_scale_weights<R: Rng + ?Sized>(
        &self,
        state: &mut ChainState,
        rng: &mut R,
    ) -> Result<()> {
        let Variant::General { m2, alpha } = &self.cfg.variant else {
            return Err(Error::InvalidConfig("not a general-variant sampler".into()));
        };
        let m1 = state.atoms.len();
        let mut counts = vec![vec![0usize; *m2]; m1];
        for (&j1, &j2) in state.alloc_theta.iter().zip(&state.alloc_phi) {
            counts[j1][j2] += 1;
        }
        let mut posterior = vec![0.0f64; *m2];
        for j1 in 0..m1 {
            for j2 in 0..*m2 {
                posterior[j2] = alpha[j2] + counts[j1][j2] as f64;
            }
            state.scale_weights[j1] = sample_dirichlet(&posterior, rng);
        }
        Ok(())
    }

    /// Global scale-atom updates: each `φ_{j2}` pools every observation
    /// allocated to it, across locations.
    pub fn update_scale_atoms_general<R: Rng + ?Sized>(
        &mut self,
        state: &mut ChainState,
        rng: &mut R,
    ) -> Result<()> {
        let Variant::General { m2, .. } = &self.cfg.variant else {
            return Err(Error::InvalidConfig("not a general-variant sampler".into()));
        };
        let m1 = state.atoms.len();
        // group stats by (j2, j1) so the Beta/Gamma conditionals can keep
        // their per-location θ factors
        let mut groups: Vec<Vec<ClusterStats>> = (0..*m2)
            .map(|_| {
                (0..m1)
                    .map(|j1| ClusterStats {
                        theta: state.atoms[j1],
                        ..ClusterStats::default()
                    })
                    .collect()
            })
            .collect();
        for (i, (&j1, &j2)) in state.alloc_theta.iter().zip(&state.alloc_phi).enumerate() {
            let y = self.data[i];
            let s = &mut groups[j2][j1];
            s.count += 1.0;
            let r = y - s.theta;
            s.residual_sq += r * r;
            s.sum_ln += self.ln_y[i];
            s.sum_ln1m += self.ln_1my[i];
            s.sum_y += y;
        }
        for j2 in 0..*m2 {
            let total: f64 = groups[j2].iter().map(|s| s.count).sum();
            if total == 0.0 {
                state.phis[j2] = self.cfg.scale_prior.sample(rng);
                continue;
            }
            if let (KernelKind::Gaussian, ScaleLaw::InverseGamma { shape, rate }) =
                (self.cfg.kernel, self.cfg.scale_prior)
            {
                let residual: f64 = groups[j2].iter().map(|s| s.residual_sq).sum();
                let (a, b) = conjugate_ig_params(shape, rate, total as usize, residual);
                state.phis[j2] = sample_inverse_gamma(a, b, rng);
            } else {
                let (phi, exhausted) = slice_phi_update(
                    self.cfg.kernel,
                    &groups[j2],
                    &self.cfg.scale_prior,
                    state.phis[j2],
                    self.cfg.slice.max_shrink,
                    rng,
                )?;
                state.phis[j2] = phi;
                self.shrink_exhausted += exhausted as u64;
            }
        }
        Ok(())
    }

    /// One slice update of the odd node at `(j, p)` inside its feasibility
    /// interval. Degenerate intervals freeze the node for the sweep.
    pub fn update_node<R: Rng + ?Sized>(
        &mut self,
        state: &mut ChainState,
        j: usize,
        p: usize,
        rng: &mut R,
    ) -> Result<()> {
        let (lo, hi) = feasible_interval(&state.array, j, p);
        if !(hi - lo > DEGENERATE_WIDTH) {
            return Ok(());
        }
        let cur = state.array.entry(j, p);
        if !(cur > lo && cur < hi) {
            // only reachable from measure-zero corners; freeze rather than
            // invent a move
            return Ok(());
        }
        let law = *self.cfg.family.law_at(j, p);
        let mut scratch = state.array.clone();
        let wf = self.cfg.slice.width_fraction;
        let (b_lo, b_hi) = if wf >= 1.0 {
            (lo, hi)
        } else {
            let w = wf * (hi - lo);
            let u: f64 = rng.random();
            let l0 = cur - u * w;
            (l0, l0 + w)
        };
        let outcome = {
            let mut target = |x: f64| -> f64 {
                // exact endpoint hits would tie the node with a neighbor
                // (a measure-zero event): reject to keep the degeneracy
                // linkage intact
                if !(x > lo && x < hi) {
                    return f64::NEG_INFINITY;
                }
                let lp = law.log_pdf(x);
                if lp == f64::NEG_INFINITY {
                    return f64::NEG_INFINITY;
                }
                scratch.set_node_synced(j, p, x);
                let weights = sba::weights_level_n_trusted(&scratch);
                let atoms = scratch.bottom_odd_entries();
                lp + self.loglik_for(&atoms, &weights, state)
            };
            slice_sample_bounded(&mut target, b_lo, b_hi, cur, self.cfg.slice.max_shrink, rng)?
        };
        self.shrink_exhausted += outcome.exhausted as u64;
        if outcome.value != cur {
            state.array.set_node_synced(j, p, outcome.value);
            state.refresh_cells();
        }
        Ok(())
    }

    /// One full sweep in the documented order.
    pub fn sweep<R: Rng + ?Sized>(&mut self, state: &mut ChainState, rng: &mut R) -> Result<()> {
        match &self.cfg.variant {
            Variant::Parsimonious => {
                if !self.data.is_empty() {
                    self.update_allocations_parsimonious(state, rng)?;
                }
                self.update_phis_parsimonious(state, rng)?;
            }
            Variant::General { .. } => {
                if !self.data.is_empty() {
                    self.update_allocations_general(state, rng)?;
                }
                self.update_scale_weights(state, rng)?;
                self.update_scale_atoms_general(state, rng)?;
            }
        }
        let n = self.cfg.n;
        for j in (2..=n + 1).rev() {
            let mut p = 1;
            while p <= (1 << j) - 1 {
                self.update_node(state, j, p, rng)?;
                p += 2;
            }
        }
        if !self.cfg.family.root_is_degenerate() {
            self.update_node(state, 1, 1, rng)?;
        }
        Ok(())
    }
}

fn log_weight(w: f64) -> f64 {
    if w > 0.0 {
        let lw = w.ln();
        if lw < -745.0 {
            f64::NEG_INFINITY
        } else {
            lw
        }
    } else {
        f64::NEG_INFINITY
    }
}

/// Draws an index proportionally to `exp(logp)`; `None` when every entry
/// is minus infinity.
fn sample_categorical_log<R: Rng + ?Sized>(logp: &[f64], rng: &mut R) -> Option<usize> {
    let max = logp.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return None;
    }
    let total: f64 = logp.iter().map(|&v| (v - max).exp()).sum();
    let mut u = rng.random::<f64>() * total;
    for (h, &v) in logp.iter().enumerate() {
        u -= (v - max).exp();
        if u <= 0.0 {
            return Some(h);
        }
    }
    Some(logp.len() - 1)
}

/// Retained posterior draws.
#[derive(Clone, Debug)]
pub struct Trace {
    pub grid: Vec<f64>,
    /// draws × observations
    pub loglik: Vec<Vec<f64>>,
    /// draws × grid points
    pub density: Vec<Vec<f64>>,
    pub mixing: Vec<JointDiscreteMeasure>,
    /// Location-marginal mean per draw.
    pub means: Vec<f64>,
    pub shrink_exhausted: u64,
}

impl Trace {
    pub fn retained(&self) -> usize {
        self.means.len()
    }

    pub fn loglik_matrix(&self) -> Result<LogLikMatrix> {
        LogLikMatrix::new(self.loglik.clone())
    }

    pub fn density_band(&self, prob: f64) -> Result<Vec<(f64, f64, f64)>> {
        crate::metrics::density_band(&self.density, prob)
    }

    /// Concatenates traces drawn on a shared grid.
    pub fn merge(traces: Vec<Trace>) -> Result<Trace> {
        let mut iter = traces.into_iter();
        let mut merged = iter
            .next()
            .ok_or_else(|| Error::InvalidConfig("no traces to merge".into()))?;
        for t in iter {
            if t.grid != merged.grid {
                return Err(Error::InvalidConfig("traces use different grids".into()));
            }
            merged.loglik.extend(t.loglik);
            merged.density.extend(t.density);
            merged.mixing.extend(t.mixing);
            merged.means.extend(t.means);
            merged.shrink_exhausted += t.shrink_exhausted;
        }
        Ok(merged)
    }

    pub fn loglik_csv(&self) -> String {
        rows_csv(&self.loglik)
    }

    pub fn density_csv(&self) -> String {
        rows_csv(&self.density)
    }

    /// Line-delimited mixing snapshots: one draw per line, whitespace-
    /// separated `theta:phi:weight` triples.
    pub fn mixing_lines(&self) -> String {
        let mut s = String::new();
        for m in &self.mixing {
            let parts: Vec<String> = m
                .atoms()
                .iter()
                .zip(m.weights())
                .map(|(&(t, p), &w)| format!("{t:.16e}:{p:.16e}:{w:.16e}"))
                .collect();
            s.push_str(&parts.join(" "));
            s.push('\n');
        }
        s
    }
}

fn rows_csv(rows: &[Vec<f64>]) -> String {
    let mut s = String::new();
    for row in rows {
        let line: Vec<String> = row.iter().map(|v| format!("{v:.16e}")).collect();
        s.push_str(&line.join(","));
        s.push('\n');
    }
    s
}

/// Runs one chain to completion.
pub fn run_chain(cfg: &FitConfig, data: &[f64]) -> Result<Trace> {
    run_chain_seeded(cfg, data, cfg.seed)
}

fn run_chain_seeded(cfg: &FitConfig, data: &[f64], seed: u64) -> Result<Trace> {
    if data.is_empty() {
        return Err(Error::InvalidConfig("data must be nonempty".into()));
    }
    let grid = cfg.grid.points();
    for &g in &grid {
        if !cfg.kernel.contains_observation(g) {
            return Err(Error::KernelDomain {
                kernel: cfg.kernel.name(),
                what: "grid point",
                value: g,
                space: "sample space",
            });
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sampler = Sampler::new(cfg, data)?;
    let mut state = sampler.init_state(&mut rng)?;
    let retained_target = (cfg.iterations - cfg.burn_in) / cfg.thin;
    let mut trace = Trace {
        grid: grid.clone(),
        loglik: Vec::with_capacity(retained_target),
        density: Vec::with_capacity(retained_target),
        mixing: Vec::with_capacity(retained_target),
        means: Vec::with_capacity(retained_target),
        shrink_exhausted: 0,
    };
    let mut ln_g = vec![0.0; grid.len()];
    let mut ln_1mg = vec![0.0; grid.len()];
    for (k, &g) in grid.iter().enumerate() {
        ln_g[k] = g.ln();
        ln_1mg[k] = (1.0 - g).ln();
    }
    for t in 1..=cfg.iterations {
        sampler.sweep(&mut state, &mut rng)?;
        if t > cfg.burn_in && (t - cfg.burn_in) % cfg.thin == 0 {
            let comps = state.components(&cfg.variant);
            let eval = MixtureEval::new(cfg.kernel, &comps);
            let ll: Vec<f64> = (0..data.len())
                .map(|i| eval.logpdf_cached(data[i], sampler.ln_y[i], sampler.ln_1my[i]))
                .collect();
            if ll.iter().any(|v| !v.is_finite()) {
                return Err(Error::NumericalAbort(format!(
                    "non-finite log likelihood at iteration {t}"
                )));
            }
            let dens: Vec<f64> = (0..grid.len())
                .map(|k| eval.logpdf_cached(grid[k], ln_g[k], ln_1mg[k]).exp())
                .collect();
            let mean: f64 = state
                .atoms
                .iter()
                .zip(&state.weights)
                .map(|(&a, &w)| a * w)
                .sum();
            if !mean.is_finite() {
                return Err(Error::NumericalAbort(format!(
                    "non-finite mixing mean at iteration {t}"
                )));
            }
            trace.loglik.push(ll);
            trace.density.push(dens);
            trace.mixing.push(state.mixing(&cfg.variant)?);
            trace.means.push(mean);
        }
    }
    trace.shrink_exhausted = sampler.shrink_exhausted;
    Ok(trace)
}

/// Runs `chains` chains seeded `seed + index` and merges their traces in
/// chain order. Chains execute concurrently when the `parallel` feature is
/// enabled; the merged result does not depend on scheduling.
pub fn run_chains(cfg: &FitConfig, data: &[f64], chains: usize) -> Result<Trace> {
    if chains == 0 {
        return Err(Error::InvalidConfig("need at least one chain".into()));
    }
    let seeds: Vec<u64> = (0..chains as u64).map(|i| cfg.seed.wrapping_add(i)).collect();
    #[cfg(feature = "parallel")]
    let traces: Result<Vec<Trace>> = {
        use rayon::prelude::*;
        seeds
            .par_iter()
            .map(|&s| run_chain_seeded(cfg, data, s))
            .collect()
    };
    #[cfg(not(feature = "parallel"))]
    let traces: Result<Vec<Trace>> = seeds
        .iter()
        .map(|&s| run_chain_seeded(cfg, data, s))
        .collect();
    Trace::merge(traces?)
}
