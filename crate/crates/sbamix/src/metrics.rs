//! Posterior summaries and model-comparison criteria.

use crate::error::{Error, Result};
use crate::sba::DiscreteMeasure;

/// Order-`p` Wasserstein distance between discrete measures, computed
/// exactly by the quantile coupling: both inverse CDFs are step functions,
/// so the integral is a finite sum over the merged cumulative-weight
/// breakpoints.
pub fn wasserstein_p(m1: &DiscreteMeasure, m2: &DiscreteMeasure, p: f64) -> f64 {
    assert!(p >= 1.0, "Wasserstein order must be >= 1");
    let (a1, w1) = (m1.atoms(), m1.weights());
    let (a2, w2) = (m2.atoms(), m2.weights());
    let (mut i, mut j) = (0usize, 0usize);
    let (mut c1, mut c2) = (w1[0], w2[0]);
    let mut level = 0.0f64;
    let mut total = 0.0f64;
    loop {
        let next = c1.min(c2).min(1.0);
        let du = next - level;
        if du > 0.0 {
            total += du * (a1[i] - a2[j]).abs().powf(p);
        }
        level = next;
        if level >= 1.0 - 1e-15 {
            break;
        }
        if c1 <= c2 {
            i += 1;
            if i >= a1.len() {
                break;
            }
            c1 += w1[i];
        } else {
            j += 1;
            if j >= a2.len() {
                break;
            }
            c2 += w2[j];
        }
    }
    total.powf(1.0 / p)
}

/// Hellinger distance between two densities tabulated on a common
/// increasing grid: the trapezoid approximation of
/// `sqrt(½ ∫ (√f - √g)²)`, clipped to `[0, 1]`.
pub fn hellinger_grid(f: &[f64], g: &[f64], grid: &[f64]) -> f64 {
    assert!(
        f.len() == g.len() && f.len() == grid.len() && f.len() >= 2,
        "inputs must share a grid of at least two points"
    );
    let integrand: Vec<f64> = f
        .iter()
        .zip(g)
        .map(|(&fi, &gi)| {
            let d = fi.max(0.0).sqrt() - gi.max(0.0).sqrt();
            d * d
        })
        .collect();
    let mut acc = 0.0;
    for k in 1..grid.len() {
        acc += 0.5 * (integrand[k - 1] + integrand[k]) * (grid[k] - grid[k - 1]);
    }
    (0.5 * acc).sqrt().clamp(0.0, 1.0)
}

/// Matrix of per-draw, per-observation log likelihoods.
#[derive(Clone, Debug, PartialEq)]
pub struct LogLikMatrix {
    rows: Vec<Vec<f64>>,
}

impl LogLikMatrix {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        if rows.is_empty() || rows[0].is_empty() {
            return Err(Error::InvalidMeasure(
                "log-likelihood matrix must be non-empty".into(),
            ));
        }
        let width = rows[0].len();
        for (i, row) in rows.iter().enumerate() {
            if row.len() != width {
                return Err(Error::Parse(format!(
                    "row {} has {} entries, expected {width}",
                    i + 1,
                    row.len()
                )));
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidMeasure(format!(
                    "non-finite log likelihood in draw {}",
                    i + 1
                )));
            }
        }
        Ok(Self { rows })
    }

    pub fn draws(&self) -> usize {
        self.rows.len()
    }

    pub fn observations(&self) -> usize {
        self.rows[0].len()
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    fn column(&self, i: usize) -> impl Iterator<Item = f64> + '_ {
        self.rows.iter().map(move |r| r[i])
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        for row in &self.rows {
            let line: Vec<String> = row.iter().map(|v| format!("{v:.16e}")).collect();
            s.push_str(&line.join(","));
            s.push('\n');
        }
        s
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut rows = Vec::new();
        for (ln, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let row: Result<Vec<f64>> = line
                .split(',')
                .map(|tok| {
                    tok.trim()
                        .parse::<f64>()
                        .map_err(|e| Error::Parse(format!("line {}: {e}", ln + 1)))
                })
                .collect();
            rows.push(row?);
        }
        Self::new(rows)
    }
}

#[derive(Clone, Copy, Debug)]
pub struct WaicSummary {
    pub waic: f64,
    pub lppd: f64,
    pub p_waic: f64,
}

/// Widely applicable information criterion with the variance-based
/// effective-parameter penalty, all in log space.
pub fn waic(ll: &LogLikMatrix) -> Result<WaicSummary> {
    if ll.draws() < 2 {
        return Err(Error::TooFewSamples {
            need: 2,
            got: ll.draws(),
        });
    }
    let s = ll.draws() as f64;
    let mut lppd = 0.0;
    let mut p_waic = 0.0;
    for i in 0..ll.observations() {
        lppd += log_mean_exp(ll.column(i)) ;
        let mean: f64 = ll.column(i).sum::<f64>() / s;
        let var: f64 = ll.column(i).map(|v| (v - mean) * (v - mean)).sum::<f64>() / (s - 1.0);
        p_waic += var;
    }
    Ok(WaicSummary {
        waic: -2.0 * (lppd - p_waic),
        lppd,
        p_waic,
    })
}

/// Log pseudo-marginal likelihood and per-observation conditional
/// predictive ordinates. Each CPO is the harmonic mean of the per-draw
/// likelihoods, computed entirely in log space.
pub fn lpml_cpo(ll: &LogLikMatrix) -> Result<(f64, Vec<f64>)> {
    if ll.draws() < 2 {
        return Err(Error::TooFewSamples {
            need: 2,
            got: ll.draws(),
        });
    }
    let mut lpml = 0.0;
    let mut cpo = Vec::with_capacity(ll.observations());
    for i in 0..ll.observations() {
        let log_cpo = -log_mean_exp(ll.column(i).map(|v| -v));
        lpml += log_cpo;
        cpo.push(log_cpo.exp());
    }
    Ok((lpml, cpo))
}

fn log_mean_exp(values: impl Iterator<Item = f64>) -> f64 {
    let vals: Vec<f64> = values.collect();
    let max = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    let sum: f64 = vals.iter().map(|v| (v - max).exp()).sum();
    max + (sum / vals.len() as f64).ln()
}

/// Shortest interval `[s_i, s_{i+k}]` with `k = ceil(prob·M)` over the
/// sorted sample, leftmost on ties.
pub fn hpd_interval(samples: &[f64], prob: f64) -> Result<(f64, f64)> {
    assert!(prob > 0.0 && prob < 1.0, "probability must be in (0, 1)");
    let m = samples.len();
    if m < 20 {
        return Err(Error::TooFewSamples { need: 20, got: m });
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let k = ((prob * m as f64).ceil() as usize).min(m - 1);
    let mut best = (sorted[k] - sorted[0], 0usize);
    for i in 1..m - k {
        let width = sorted[i + k] - sorted[i];
        if width < best.0 {
            best = (width, i);
        }
    }
    Ok((sorted[best.1], sorted[best.1 + k]))
}

/// Pointwise posterior mean and HPD band for density draws tabulated on a
/// grid: one `(mean, lo, hi)` triple per grid point.
pub fn density_band(density_draws: &[Vec<f64>], prob: f64) -> Result<Vec<(f64, f64, f64)>> {
    if density_draws.is_empty() {
        return Err(Error::TooFewSamples { need: 1, got: 0 });
    }
    let width = density_draws[0].len();
    let draws = density_draws.len() as f64;
    let mut out = Vec::with_capacity(width);
    let mut column = vec![0.0; density_draws.len()];
    for g in 0..width {
        for (s, row) in density_draws.iter().enumerate() {
            column[s] = row[g];
        }
        let mean = column.iter().sum::<f64>() / draws;
        let (lo, hi) = if column.len() >= 20 {
            hpd_interval(&column, prob)?
        } else {
            // degenerate bands for tiny traces collapse onto the extremes
            let lo = column.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = column.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            (lo, hi)
        };
        out.push((mean, lo, hi));
    }
    Ok(out)
}
