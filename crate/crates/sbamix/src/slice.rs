//! Shrinkage slice sampling.
//!
//! Two entry points: a bounded transition whose initial bracket is the
//! whole support interval (no stepping out needed when the support is
//! known exactly), and a stepping-out transition on the real line for
//! log-scale dispersion updates.

use rand::Rng;

use crate::error::{Error, Result};

/// Result of one slice transition.
#[derive(Clone, Copy, Debug)]
pub struct SliceOutcome {
    pub value: f64,
    /// True when the shrinkage budget ran out and the current value was
    /// kept (still a valid transition; counted as a diagnostic).
    pub exhausted: bool,
}

/// One shrinkage-slice transition for a target supported on `(lo, hi]`.
///
/// The initial bracket is the full interval, so no proposal outside it is
/// ever evaluated. Proposals are drawn as `hi - t·(hi - lo)` with `t` in
/// `[0, 1)`, matching the half-open interval convention.
pub fn slice_sample_bounded<R: Rng + ?Sized, F: FnMut(f64) -> f64>(
    mut logtarget: F,
    lo: f64,
    hi: f64,
    init: f64,
    max_shrink: u32,
    rng: &mut R,
) -> Result<SliceOutcome> {
    debug_assert!(lo < init && init <= hi);
    let f0 = logtarget(init);
    if !f0.is_finite() {
        return Err(Error::NonFiniteTarget);
    }
    let height = f0 + ln_open_unit(rng);
    let (mut l, mut r) = (lo, hi);
    for _ in 0..max_shrink {
        let t: f64 = rng.random();
        let x = r - t * (r - l);
        if logtarget(x) >= height {
            return Ok(SliceOutcome {
                value: x,
                exhausted: false,
            });
        }
        if x < init {
            l = x;
        } else {
            r = x;
        }
    }
    Ok(SliceOutcome {
        value: init,
        exhausted: true,
    })
}

/// One slice transition on the real line: a width-`width` bracket is
/// positioned randomly around the current point, stepped out while the
/// log target at its ends stays above the slice height, then shrunk.
pub fn slice_sample_stepout<R: Rng + ?Sized, F: FnMut(f64) -> f64>(
    mut logtarget: F,
    init: f64,
    width: f64,
    max_step: u32,
    max_shrink: u32,
    rng: &mut R,
) -> Result<SliceOutcome> {
    let f0 = logtarget(init);
    if !f0.is_finite() {
        return Err(Error::NonFiniteTarget);
    }
    let height = f0 + ln_open_unit(rng);
    let u: f64 = rng.random();
    let mut l = init - u * width;
    let mut r = l + width;
    let mut steps = max_step;
    while steps > 0 && logtarget(l) > height {
        l -= width;
        steps -= 1;
    }
    let mut steps = max_step;
    while steps > 0 && logtarget(r) > height {
        r += width;
        steps -= 1;
    }
    for _ in 0..max_shrink {
        let t: f64 = rng.random();
        let x = l + t * (r - l);
        if logtarget(x) >= height {
            return Ok(SliceOutcome {
                value: x,
                exhausted: false,
            });
        }
        if x < init {
            l = x;
        } else {
            r = x;
        }
    }
    Ok(SliceOutcome {
        value: init,
        exhausted: true,
    })
}

/// `ln u` for `u` uniform on `(0, 1]`.
fn ln_open_unit<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    let t: f64 = rng.random(); // [0, 1)
    (1.0 - t).ln()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ks::ks_statistic;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn flat_target_is_uniform_on_bracket() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let mut x = 0.5;
        let mut samples = Vec::with_capacity(10_000);
        for _ in 0..10_000 {
            x = slice_sample_bounded(|_| 0.0, 0.0, 1.0, x, 100, &mut rng)
                .unwrap()
                .value;
            samples.push(x);
        }
        let d = ks_statistic(&mut samples, |v| v.clamp(0.0, 1.0));
        assert!(d < 0.02, "KS = {d}");
    }

    #[test]
    fn proposals_stay_in_bracket() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut x = 0.5;
        for _ in 0..2000 {
            // target concentrated near 0.9
            x = slice_sample_bounded(
                |v| -200.0 * (v - 0.9) * (v - 0.9),
                0.0,
                1.0,
                x,
                100,
                &mut rng,
            )
            .unwrap()
            .value;
            assert!(x > 0.0 && x <= 1.0);
        }
    }

    #[test]
    fn seeded_determinism() {
        let run = || {
            let mut rng = ChaCha8Rng::seed_from_u64(9);
            let mut x = 0.3;
            let mut out = Vec::new();
            for _ in 0..50 {
                x = slice_sample_bounded(|v: f64| -v * v, -3.0, 3.0, x, 100, &mut rng)
                    .unwrap()
                    .value;
                out.push(x);
            }
            out
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn non_finite_start_is_an_error() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let r = slice_sample_bounded(|_| f64::NEG_INFINITY, 0.0, 1.0, 0.5, 10, &mut rng);
        assert!(matches!(r, Err(Error::NonFiniteTarget)));
    }

    #[test]
    fn exhausted_budget_keeps_current_value() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        // target that accepts nothing except an impossibly thin spike
        let out = slice_sample_bounded(
            |v| {
                if (v - 0.123456789).abs() < 1e-300 {
                    0.0
                } else {
                    -1e9
                }
            },
            0.0,
            1.0,
            0.123456789,
            8,
            &mut rng,
        )
        .unwrap();
        assert!(out.exhausted);
        assert_eq!(out.value, 0.123456789);
    }

    #[test]
    fn stepout_normal_target_ks() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let mut x = 0.0;
        let mut samples = Vec::with_capacity(20_000);
        for _ in 0..20_000 {
            x = slice_sample_stepout(|v: f64| -0.5 * v * v, x, 2.0, 32, 100, &mut rng)
                .unwrap()
                .value;
            samples.push(x);
        }
        let normal = statrs::distribution::Normal::new(0.0, 1.0).unwrap();
        use statrs::distribution::ContinuousCDF;
        let d = ks_statistic(&mut samples, |v| normal.cdf(v));
        assert!(d < 0.02, "KS = {d}");
    }
}
