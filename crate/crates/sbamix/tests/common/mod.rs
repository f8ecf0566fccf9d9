//! Shared generators for randomized property tests.

use rand::Rng;
use sbamix::measure::{AnalyticMeasure, Domain, MeasureComponent};

/// Random mixture of 1..=4 point masses and uniform segments on [-5, 5].
pub fn random_measure<R: Rng>(rng: &mut R) -> AnalyticMeasure {
    let count = rng.random_range(1..=4usize);
    let mut raw: Vec<(f64, MeasureComponent)> = (0..count)
        .map(|_| {
            let w: f64 = rng.random_range(0.05..1.0);
            let comp = if rng.random_bool(0.5) {
                MeasureComponent::PointMass {
                    location: rng.random_range(-5.0..5.0),
                }
            } else {
                let a: f64 = rng.random_range(-5.0..4.0);
                let b: f64 = a + rng.random_range(0.1..2.0);
                MeasureComponent::UniformSegment { a, b }
            };
            (w, comp)
        })
        .collect();
    let total: f64 = raw.iter().map(|(w, _)| *w).sum();
    for (w, _) in raw.iter_mut() {
        *w /= total;
    }
    AnalyticMeasure::new(Domain::real_line(), raw).expect("generator produces valid measures")
}

/// Random discrete measure with `k` atoms separated by at least `gap`.
pub fn random_atomic<R: Rng>(rng: &mut R, k: usize, gap: f64) -> AnalyticMeasure {
    let mut atoms: Vec<f64> = Vec::with_capacity(k);
    while atoms.len() < k {
        let x: f64 = rng.random_range(-10.0..10.0);
        if atoms.iter().all(|a| (a - x).abs() > gap) {
            atoms.push(x);
        }
    }
    atoms.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut weights: Vec<f64> = (0..k).map(|_| rng.random_range(0.05..1.0)).collect();
    let total: f64 = weights.iter().sum();
    for w in weights.iter_mut() {
        *w /= total;
    }
    AnalyticMeasure::from_atoms(Domain::real_line(), &atoms, &weights)
        .expect("generator produces valid measures")
}
