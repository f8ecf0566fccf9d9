//! Mean-parameterized kernels and mixture density evaluation.
//!
//! Each kernel is a density `k(y | θ, φ)` whose mean is exactly `θ`, so a
//! mixture against a mixing measure inherits the mixing measure's mean:
//!
//! * `Gaussian` on ℝ — `N(θ, φ)` where `φ` is the **variance**, not the
//!   standard deviation (the conjugate dispersion update fixes this
//!   scale, and priors are stated on it);
//! * `Beta` on (0, 1) — shapes `(θφ, (1-θ)φ)` with mean `θ` and
//!   dispersion `φ`;
//! * `Gamma` on ℝ₊ — shape `φ` and rate `φ/θ`, mean `θ`.

use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::measure::Domain;
use crate::par;
use crate::prior::JointDiscreteMeasure;

const LN_2PI: f64 = 1.8378770664093453;

/// Log weights below this are treated as minus infinity.
const LOG_WEIGHT_FLOOR: f64 = -745.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KernelKind {
    Gaussian,
    Beta,
    Gamma,
}

impl KernelKind {
    pub fn name(&self) -> &'static str {
        match self {
            KernelKind::Gaussian => "gaussian",
            KernelKind::Beta => "beta",
            KernelKind::Gamma => "gamma",
        }
    }

    /// True iff `y` lies in the interior of the sample space.
    pub fn contains_observation(&self, y: f64) -> bool {
        match self {
            KernelKind::Gaussian => y.is_finite(),
            KernelKind::Beta => y > 0.0 && y < 1.0,
            KernelKind::Gamma => y > 0.0 && y.is_finite(),
        }
    }

    /// True iff `θ` lies in the kernel's parameter space.
    pub fn contains_theta(&self, theta: f64) -> bool {
        match self {
            KernelKind::Gaussian => theta.is_finite(),
            KernelKind::Beta => theta > 0.0 && theta < 1.0,
            KernelKind::Gamma => theta > 0.0 && theta.is_finite(),
        }
    }

    /// Natural domain for node-law families paired with this kernel.
    pub fn parameter_domain(&self) -> Domain {
        match self {
            KernelKind::Gaussian => Domain::real_line(),
            KernelKind::Beta => Domain::unit_interval(),
            KernelKind::Gamma => Domain::positive_half_line(),
        }
    }
}

/// Log density of one kernel component.
pub fn log_kernel(kind: KernelKind, y: f64, theta: f64, phi: f64) -> Result<f64> {
    if !kind.contains_observation(y) {
        return Err(Error::KernelDomain {
            kernel: kind.name(),
            what: "observation",
            value: y,
            space: "sample space",
        });
    }
    if !kind.contains_theta(theta) {
        return Err(Error::KernelDomain {
            kernel: kind.name(),
            what: "theta",
            value: theta,
            space: "parameter space",
        });
    }
    if !(phi > 0.0) || !phi.is_finite() {
        return Err(Error::KernelDomain {
            kernel: kind.name(),
            what: "phi",
            value: phi,
            space: "positive reals",
        });
    }
    Ok(log_kernel_unchecked(kind, y, theta, phi))
}

pub(crate) fn log_kernel_unchecked(kind: KernelKind, y: f64, theta: f64, phi: f64) -> f64 {
    match kind {
        KernelKind::Gaussian => {
            let d = y - theta;
            -0.5 * (LN_2PI + phi.ln()) - d * d / (2.0 * phi)
        }
        KernelKind::Beta => {
            let a = theta * phi;
            let b = (1.0 - theta) * phi;
            ln_gamma(phi) - ln_gamma(a) - ln_gamma(b)
                + (a - 1.0) * y.ln()
                + (b - 1.0) * (1.0 - y).ln()
        }
        KernelKind::Gamma => {
            let rate = phi / theta;
            phi * rate.ln() - ln_gamma(phi) + (phi - 1.0) * y.ln() - rate * y
        }
    }
}

/// Per-component precomputed terms for mixture evaluation. Only the
/// observation-dependent factors are left to evaluation time, which is
/// what makes the samplers' inner loops affordable.
#[derive(Clone, Debug)]
pub(crate) struct MixtureEval {
    kind: KernelKind,
    /// gaussian: (c, 1/(2φ), θ) giving `c - (y-θ)²/(2φ)`
    /// beta:     (c, θφ-1, (1-θ)φ-1) giving `c + p1·ln y + p2·ln(1-y)`
    /// gamma:    (c, φ-1, φ/θ) giving `c + p1·ln y - p2·y`
    terms: Vec<(f64, f64, f64)>,
}

impl MixtureEval {
    pub fn new(kind: KernelKind, components: &[(f64, f64, f64)]) -> Self {
        let mut terms = Vec::with_capacity(components.len());
        for &(theta, phi, w) in components {
            if !(w > 0.0) {
                continue;
            }
            let lw = w.ln();
            if lw < LOG_WEIGHT_FLOOR {
                continue;
            }
            terms.push(match kind {
                KernelKind::Gaussian => (
                    lw - 0.5 * (LN_2PI + phi.ln()),
                    1.0 / (2.0 * phi),
                    theta,
                ),
                KernelKind::Beta => {
                    let a = theta * phi;
                    let b = (1.0 - theta) * phi;
                    (
                        lw + ln_gamma(phi) - ln_gamma(a) - ln_gamma(b),
                        a - 1.0,
                        b - 1.0,
                    )
                }
                KernelKind::Gamma => {
                    let rate = phi / theta;
                    (
                        lw + phi * rate.ln() - ln_gamma(phi),
                        phi - 1.0,
                        rate,
                    )
                }
            });
        }
        Self { kind, terms }
    }

    /// log Σ w_l k(y | θ_l, φ_l) with precomputed `ln y` / `ln(1-y)`.
    ///
    /// Online log-sum-exp: a running maximum with a rescaled partial sum,
    /// so no per-call buffer is needed.
    pub fn logpdf_cached(&self, y: f64, ln_y: f64, ln_1my: f64) -> f64 {
        let mut max = f64::NEG_INFINITY;
        let mut sum = 0.0f64;
        for &(c, p1, p2) in &self.terms {
            let v = match self.kind {
                KernelKind::Gaussian => {
                    let d = y - p2;
                    c - d * d * p1
                }
                KernelKind::Beta => c + p1 * ln_y + p2 * ln_1my,
                KernelKind::Gamma => c + p1 * ln_y - p2 * y,
            };
            if v == f64::NEG_INFINITY {
                continue;
            }
            if v <= max {
                sum += (v - max).exp();
            } else {
                sum = sum * (max - v).exp() + 1.0;
                max = v;
            }
        }
        if max == f64::NEG_INFINITY {
            return f64::NEG_INFINITY;
        }
        max + sum.ln()
    }

    pub fn logpdf(&self, y: f64) -> f64 {
        let (ln_y, ln_1my) = match self.kind {
            KernelKind::Gaussian => (0.0, 0.0),
            KernelKind::Beta => (y.ln(), (1.0 - y).ln()),
            KernelKind::Gamma => (y.ln(), 0.0),
        };
        self.logpdf_cached(y, ln_y, ln_1my)
    }
}

fn mixing_components(mixing: &JointDiscreteMeasure) -> Vec<(f64, f64, f64)> {
    mixing
        .atoms()
        .iter()
        .zip(mixing.weights())
        .map(|(&(t, p), &w)| (t, p, w))
        .collect()
}

fn check_mixing(kind: KernelKind, mixing: &JointDiscreteMeasure) -> Result<()> {
    for &(theta, phi) in mixing.atoms() {
        log_kernel(kind, interior_probe(kind), theta, phi)?;
    }
    Ok(())
}

fn interior_probe(kind: KernelKind) -> f64 {
    match kind {
        KernelKind::Gaussian => 0.0,
        KernelKind::Beta => 0.5,
        KernelKind::Gamma => 1.0,
    }
}

/// Log mixture density `log ∫ k(y | θ, φ) dG(θ, φ)`, computed by
/// log-sum-exp so that it stays finite whenever any component density is
/// positive.
pub fn mixture_logpdf(kind: KernelKind, mixing: &JointDiscreteMeasure, y: f64) -> Result<f64> {
    if !kind.contains_observation(y) {
        return Err(Error::KernelDomain {
            kernel: kind.name(),
            what: "observation",
            value: y,
            space: "sample space",
        });
    }
    check_mixing(kind, mixing)?;
    Ok(MixtureEval::new(kind, &mixing_components(mixing)).logpdf(y))
}

/// Pointwise mixture density on a grid.
pub fn density_grid(kind: KernelKind, mixing: &JointDiscreteMeasure, grid: &[f64]) -> Result<Vec<f64>> {
    for &y in grid {
        if !kind.contains_observation(y) {
            return Err(Error::KernelDomain {
                kernel: kind.name(),
                what: "grid point",
                value: y,
                space: "sample space",
            });
        }
    }
    check_mixing(kind, mixing)?;
    let eval = MixtureEval::new(kind, &mixing_components(mixing));
    Ok(par::map_collect(grid, |&y| eval.logpdf(y).exp()))
}

/// Total data log likelihood `Σ_i log f(y_i | G)`.
pub fn marginal_loglik(kind: KernelKind, mixing: &JointDiscreteMeasure, data: &[f64]) -> Result<f64> {
    for &y in data {
        if !kind.contains_observation(y) {
            return Err(Error::KernelDomain {
                kernel: kind.name(),
                what: "observation",
                value: y,
                space: "sample space",
            });
        }
    }
    check_mixing(kind, mixing)?;
    let eval = MixtureEval::new(kind, &mixing_components(mixing));
    Ok(par::sum_mapped(data, |&y| eval.logpdf(y)))
}

/// Sequential reference path for [`marginal_loglik`]; used by the
/// benchmark suite to quantify the parallel speedup.
pub fn marginal_loglik_seq(kind: KernelKind, mixing: &JointDiscreteMeasure, data: &[f64]) -> Result<f64> {
    check_mixing(kind, mixing)?;
    let eval = MixtureEval::new(kind, &mixing_components(mixing));
    Ok(data.iter().map(|&y| eval.logpdf(y)).sum())
}

/// Unconditionally parallel path for [`marginal_loglik`].
#[cfg(feature = "parallel")]
pub fn marginal_loglik_par(kind: KernelKind, mixing: &JointDiscreteMeasure, data: &[f64]) -> Result<f64> {
    use rayon::prelude::*;
    check_mixing(kind, mixing)?;
    let eval = MixtureEval::new(kind, &mixing_components(mixing));
    Ok(data.par_iter().map(|&y| eval.logpdf(y)).sum())
}
