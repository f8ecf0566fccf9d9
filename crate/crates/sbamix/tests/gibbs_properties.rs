//! Distributional correctness of the individual Gibbs updates: with no
//! data each update's stationary law is its (restricted) prior, and the
//! conjugate path matches its closed form.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::Distribution;
use statrs::distribution::ContinuousCDF;

use sbamix::gibbs::{
    feasible_interval, run_chain, slice_phi_update, FitConfig, GridSpec, Sampler, SliceParams,
    Variant,
};
use sbamix::kernels::KernelKind;
use sbamix::ks::ks_statistic;
use sbamix::measure::Domain;
use sbamix::prior::{NodeLaw, NodeLawFamily, ScaleLaw};

fn base_cfg(n: usize) -> FitConfig {
    FitConfig {
        kernel: KernelKind::Gaussian,
        variant: Variant::Parsimonious,
        n,
        family: NodeLawFamily::homogeneous(
            Domain::real_line(),
            n,
            NodeLaw::Normal { mean: 0.0, sd: 1.0 },
        )
        .unwrap(),
        scale_prior: ScaleLaw::InverseGamma {
            shape: 0.5,
            rate: 1.5,
        },
        iterations: 10,
        burn_in: 5,
        thin: 1,
        seed: 99,
        slice: SliceParams::default(),
        grid: GridSpec {
            lo: -3.0,
            hi: 3.0,
            count: 11,
        },
    }
}

/// With everything else frozen and no observations, repeated slice updates
/// of one node must sample its prior restricted to the feasibility
/// interval.
fn node_prior_recovery(n: usize, j: usize, p: usize, seed: u64) -> f64 {
    let cfg = base_cfg(n);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sampler = Sampler::new(&cfg, &[]).unwrap();
    let mut state = sampler.init_state(&mut rng).unwrap();
    let (lo, hi) = feasible_interval(state.array(), j, p);
    assert!(hi - lo > 1e-6, "degenerate interval in test setup");
    let law = NodeLaw::Normal { mean: 0.0, sd: 1.0 };
    let (fa, fb) = (law.cdf(lo), law.cdf(hi));
    let mut draws = Vec::with_capacity(10_000);
    for _ in 0..10_000 {
        sampler.update_node(&mut state, j, p, &mut rng).unwrap();
        draws.push(state.array().entry(j, p));
    }
    assert!(draws.iter().all(|&x| x > lo && x <= hi));
    ks_statistic(&mut draws, |x| ((law.cdf(x) - fa) / (fb - fa)).clamp(0.0, 1.0))
}

#[test]
fn bottom_node_recovers_truncated_prior() {
    let d = node_prior_recovery(2, 3, 3, 11);
    assert!(d < 0.02, "KS = {d}");
}

#[test]
fn interior_node_recovers_truncated_prior() {
    let d = node_prior_recovery(2, 2, 1, 12);
    assert!(d < 0.02, "KS = {d}");
}

#[test]
fn root_node_recovers_truncated_prior() {
    let d = node_prior_recovery(1, 1, 1, 13);
    assert!(d < 0.02, "KS = {d}");
}

#[test]
fn phi_slice_recovers_each_prior_family() {
    let priors = [
        ScaleLaw::InverseGamma {
            shape: 2.0,
            rate: 1.5,
        },
        ScaleLaw::Gamma {
            shape: 2.0,
            rate: 0.7,
        },
        ScaleLaw::LogNormal {
            mu: -0.3,
            sigma: 0.9,
        },
    ];
    for (k, prior) in priors.iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(500 + k as u64);
        let mut phi = 1.0;
        let mut draws = Vec::with_capacity(10_000);
        for _ in 0..10_000 {
            // no data: the full conditional is the prior itself
            let (next, _) =
                slice_phi_update(KernelKind::Gaussian, &[], prior, phi, 100, &mut rng).unwrap();
            phi = next;
            draws.push(phi);
        }
        let d = ks_statistic(&mut draws, |x| prior.cdf(x));
        assert!(d < 0.02, "prior {k}: KS = {d}");
    }
}

#[test]
fn heavy_tailed_ig_prior_recovery() {
    // shape 0.5 has no mean; the log-scale slice must still traverse it
    let prior = ScaleLaw::InverseGamma {
        shape: 0.5,
        rate: 1.5,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(321);
    let mut phi = 1.0;
    let mut draws = Vec::with_capacity(20_000);
    for _ in 0..20_000 {
        let (next, _) =
            slice_phi_update(KernelKind::Gaussian, &[], &prior, phi, 100, &mut rng).unwrap();
        phi = next;
        draws.push(phi);
    }
    let d = ks_statistic(&mut draws, |x| prior.cdf(x));
    assert!(d < 0.02, "KS = {d}");
}

#[test]
fn gaussian_phi_matches_conjugate_closed_form() {
    // single effective component (weights (1, 0)), frozen locations: the
    // phi chain must match Inverse-Gamma(a + d/2, b + ½Σ(y-θ)²)
    let cfg = base_cfg(1);
    let data = [1.0, 3.0];
    let mut rng = ChaCha8Rng::seed_from_u64(2718);
    let mut sampler = Sampler::new(&cfg, &data).unwrap();
    let mut state = sampler.init_state(&mut rng).unwrap();
    force_single_component(&mut state, 2.0);
    let mut draws = Vec::with_capacity(10_000);
    for _ in 0..10_000 {
        sampler
            .update_allocations_parsimonious(&mut state, &mut rng)
            .unwrap();
        sampler
            .update_phis_parsimonious(&mut state, &mut rng)
            .unwrap();
        draws.push(state.phis()[0]);
    }
    // residuals: (1-2)² + (3-2)² = 2
    let reference = statrs::distribution::InverseGamma::new(0.5 + 1.0, 1.5 + 1.0).unwrap();
    let d = ks_statistic(&mut draws, |x| reference.cdf(x));
    assert!(d < 0.02, "KS = {d}");
}

/// Collapses a depth-1 state onto a single point mass at `theta` so the
/// first component carries all weight.
fn force_single_component(state: &mut sbamix::gibbs::ChainState, theta: f64) {
    let point = sbamix::measure::AnalyticMeasure::point_mass(theta).unwrap();
    let arr = sbamix::sba::build_sba(&point, 1).unwrap();
    state.set_array(arr).unwrap();
    assert_eq!(state.weights(), &[1.0, 0.0]);
}

#[test]
fn dirichlet_row_prior_recovery() {
    // empty allocations: rows are straight Dirichlet(α) draws whose first
    // component is Beta(α₁, α₂ + α₃)
    let alpha = vec![1.5, 1.0, 0.5];
    let cfg = FitConfig {
        variant: Variant::General {
            m2: 3,
            alpha: alpha.clone(),
        },
        ..base_cfg(1)
    };
    let mut rng = ChaCha8Rng::seed_from_u64(606);
    let sampler = Sampler::new(&cfg, &[]).unwrap();
    let mut state = sampler.init_state(&mut rng).unwrap();
    let mut draws = Vec::with_capacity(10_000);
    for _ in 0..10_000 {
        sampler.update_scale_weights(&mut state, &mut rng).unwrap();
        draws.push(state.scale_weights()[0][0]);
    }
    let reference = statrs::distribution::Beta::new(alpha[0], alpha[1] + alpha[2]).unwrap();
    let d = ks_statistic(&mut draws, |x| reference.cdf(x));
    assert!(d < 0.02, "KS = {d}");
}

#[test]
fn data_order_does_not_move_the_posterior_density() {
    // distinct seeds, shuffled data: averaged density grids agree within
    // Monte Carlo bands
    let mut cfg = base_cfg(2);
    cfg.iterations = 20_500;
    cfg.burn_in = 500;
    cfg.thin = 2;
    cfg.grid = GridSpec {
        lo: -4.0,
        hi: 4.0,
        count: 41,
    };
    cfg.scale_prior = ScaleLaw::InverseGamma {
        shape: 2.0,
        rate: 2.0,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(8080);
    let normal = rand_distr::Normal::new(0.0, 1.0).unwrap();
    let data: Vec<f64> = (0..60)
        .map(|i| normal.sample(&mut rng) + if i % 2 == 0 { -1.0 } else { 1.0 })
        .collect();
    let mut shuffled = data.clone();
    shuffled.reverse();
    shuffled.swap(3, 47);
    shuffled.swap(11, 29);

    let trace_a = run_chain(&cfg, &data).unwrap();
    cfg.seed = cfg.seed.wrapping_add(1);
    let trace_b = run_chain(&cfg, &shuffled).unwrap();

    let avg = |t: &sbamix::gibbs::Trace| -> Vec<f64> {
        let mut acc = vec![0.0; t.grid.len()];
        for row in &t.density {
            for (a, v) in acc.iter_mut().zip(row) {
                *a += v;
            }
        }
        acc.iter().map(|v| v / t.density.len() as f64).collect()
    };
    let (da, db) = (avg(&trace_a), avg(&trace_b));
    let sup = da
        .iter()
        .zip(&db)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0f64, f64::max);
    assert!(sup < 0.01, "sup-norm difference {sup}");
}
