//! Distributional properties of the random-measure priors.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sbamix::measure::{AnalyticMeasure, Domain};
use sbamix::metrics::wasserstein_p;
use sbamix::prior::{draw_random_sba, NodeLaw, NodeLawFamily};
use sbamix::sba::{is_regular, validate_sba, DiscreteMeasure};

fn normal_family(depth: usize) -> NodeLawFamily {
    NodeLawFamily::homogeneous(
        Domain::real_line(),
        depth,
        NodeLaw::Normal { mean: 0.0, sd: 1.0 },
    )
    .unwrap()
}

#[test]
fn sampled_arrays_validate_across_depths() {
    for n in 1..=4usize {
        let family = normal_family(n);
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + n as u64);
        for _ in 0..1000 {
            let (array, measure) = draw_random_sba(&family, &mut rng).unwrap();
            assert!(validate_sba(&array).is_empty());
            assert!((measure.weights().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }
}

#[test]
fn absolutely_continuous_laws_give_regular_arrays() {
    let n = 3;
    let family = normal_family(n);
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for _ in 0..1000 {
        let (array, _) = draw_random_sba(&family, &mut rng).unwrap();
        for level in 1..=n + 1 {
            assert!(is_regular(&array, level));
        }
    }
}

#[test]
fn degenerate_root_pins_the_mean_exactly() {
    for n in 1..=4usize {
        let family = NodeLawFamily::with_root(
            Domain::real_line(),
            n,
            NodeLaw::Normal { mean: 0.0, sd: 1.0 },
            NodeLaw::Degenerate { value: 0.25 },
        )
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(31 + n as u64);
        for _ in 0..1000 {
            let (_, measure) = draw_random_sba(&family, &mut rng).unwrap();
            assert!(
                (measure.mean() - 0.25).abs() < 1e-10,
                "n = {n}: mean {}",
                measure.mean()
            );
        }
    }
}

#[test]
fn root_law_is_the_law_of_the_mean() {
    // root ~ N(m, s): the average of the measure means over many draws
    // lands within a CLT band of m
    let (m, s) = (1.5f64, 0.8f64);
    let family = NodeLawFamily::with_root(
        Domain::real_line(),
        2,
        NodeLaw::Normal { mean: 0.0, sd: 1.0 },
        NodeLaw::Normal { mean: m, sd: s },
    )
    .unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(91);
    let draws = 10_000;
    let mut acc = 0.0;
    for _ in 0..draws {
        let (_, measure) = draw_random_sba(&family, &mut rng).unwrap();
        acc += measure.mean();
    }
    let avg = acc / draws as f64;
    assert!(
        (avg - m).abs() < 4.0 * s / 100.0,
        "empirical mean {avg} outside the CLT band around {m}"
    );
}

#[test]
fn prior_draws_reach_a_two_atom_target() {
    // weak-support probe: some draws land close to ½δ(0.25) + ½δ(0.75)
    let target = DiscreteMeasure::new(vec![0.25, 0.75], vec![0.5, 0.5]).unwrap();
    let family = NodeLawFamily::homogeneous(
        Domain::unit_interval(),
        3,
        NodeLaw::Uniform { a: 0.0, b: 1.0 },
    )
    .unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(424242);
    let draws = 100_000;
    let mut hits = 0usize;
    for _ in 0..draws {
        let (_, measure) = draw_random_sba(&family, &mut rng).unwrap();
        if wasserstein_p(&measure, &target, 1.0) < 0.05 {
            hits += 1;
        }
    }
    let fraction = hits as f64 / draws as f64;
    println!("support probe: {hits}/{draws} draws within W1 = 0.05 (fraction {fraction:.5})");
    assert!(hits > 0, "no draw reached the target neighborhood");
}

#[test]
fn restricted_normal_matches_truncated_quantiles() {
    // draws from N(0,1) restricted to (0, 2] follow the truncated CDF
    use sbamix::ks::ks_statistic;
    use sbamix::prior::sample_restricted;
    let law = NodeLaw::Normal { mean: 0.0, sd: 1.0 };
    let mut rng = ChaCha8Rng::seed_from_u64(5150);
    let mut draws: Vec<f64> = (0..20_000)
        .map(|_| sample_restricted(&law, 0.0, 2.0, &mut rng).unwrap())
        .collect();
    let (fa, fb) = (law.cdf(0.0), law.cdf(2.0));
    let d = ks_statistic(&mut draws, |x| {
        ((law.cdf(x) - fa) / (fb - fa)).clamp(0.0, 1.0)
    });
    assert!(d < 0.02, "KS = {d}");
}

#[test]
fn four_atom_discrete_target_recovered_from_own_sba() {
    // sampling machinery aside, the deterministic pipeline on a measure
    // with finitely many atoms reproduces it exactly a.s.
    let target = AnalyticMeasure::from_atoms(
        Domain::real_line(),
        &[-2.0, -0.5, 0.5, 2.0],
        &[0.1, 0.4, 0.3, 0.2],
    )
    .unwrap();
    let approx = sbamix::sba::approximate(&target, 4).unwrap();
    assert_eq!(approx.atoms().len(), 4);
    assert!(wasserstein_p(
        &approx,
        &DiscreteMeasure::new(vec![-2.0, -0.5, 0.5, 2.0], vec![0.1, 0.4, 0.3, 0.2]).unwrap(),
        1.0
    ) < 1e-10);
}
