//! Cross-module invariants run at full size.

use extlab_core::copulas::{psi_archimedean, ArchimedeanGenerator};
use extlab_core::estimator::{default_grid, estimate_psi, simulate_replicates};
use extlab_core::numeric::log_base;
use extlab_core::sampling::{validate_sampler, DistributionSpec, RandomStream};
use extlab_core::systems::{build_system, EpsilonSchedule, SystemSpec, Transform};

fn clayton() -> SystemSpec {
    SystemSpec::ExchangeableCopula {
        generator: ArchimedeanGenerator::Clayton { alpha: 1.0 },
        tilt: None,
    }
}

#[test]
fn every_sampler_passes_validation_at_a_million_draws() {
    let dists = [
        DistributionSpec::Uniform01,
        DistributionSpec::Exponential { rate: 2.0 },
        DistributionSpec::Gamma { shape: 0.3, scale: 1.0 },
        DistributionSpec::Gamma { shape: 4.0, scale: 0.5 },
        DistributionSpec::PositiveStable { beta: 0.3 },
        DistributionSpec::PositiveStable { beta: 0.7 },
        DistributionSpec::SymmetricStable { gamma: 0.8 },
        DistributionSpec::SymmetricStable { gamma: 1.0 },
        DistributionSpec::SymmetricStable { gamma: 1.8 },
        DistributionSpec::Logarithmic { p: 0.8 },
        DistributionSpec::Zipf { beta: 4.5 },
        DistributionSpec::Pareto { a: 3.5, x_min: 1.0 },
        DistributionSpec::Geometric1 { eps: 0.1 },
        DistributionSpec::TwoPoint { x1: 0.5, x2: 1.5, p: 0.3 },
        DistributionSpec::Degenerate { c: 2.0 },
    ];
    for (k, dist) in dists.iter().enumerate() {
        let mut stream = RandomStream::new(2024, k as u64);
        let report = validate_sampler(dist, &[0.1, 0.5, 1.0, 3.0], 1_000_000, &mut stream).unwrap();
        assert!(report.max_abs_z() < 4.0, "{dist:?}: {:?}", report.checks);
    }
}

#[test]
fn streams_are_reproducible_and_uncorrelated() {
    let draw = |id| {
        let mut s = RandomStream::new(99, id);
        (0..100_000).map(|_| s.uniform()).collect::<Vec<_>>()
    };
    assert_eq!(draw(5), draw(5));
    for (a, b) in [(0, 1), (1, 2), (7, 1 << 40)] {
        let (x, y) = (draw(a), draw(b));
        let n = x.len() as f64;
        let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
        let cov: f64 = x.iter().zip(&y).map(|(p, q)| (p - mx) * (q - my)).sum::<f64>() / n;
        let r = cov * 12.0;
        assert!((r * n.sqrt()).abs() < 4.0, "streams {a},{b}: r = {r}");
    }
}

#[test]
fn exact_max_laws_match_simulation() {
    let specs = [
        clayton(),
        SystemSpec::MixtureSpike { gamma: 1.0 },
        SystemSpec::DuplicatedIid { m: 3 },
        SystemSpec::GeometricThreshold {
            epsilon: EpsilonSchedule::Fixed(0.01),
        },
    ];
    let r = 100_000;
    for (k, spec) in specs.iter().enumerate() {
        let sys = build_system(spec).unwrap();
        if !sys.capabilities().has_exact_max_cdf {
            continue;
        }
        let mut maxima: Vec<f64> = simulate_replicates(&sys, 50, r, k as u64).unwrap().iter().map(|x| x.max).collect();
        maxima.sort_by(f64::total_cmp);
        for q in [0.1, 0.3, 0.5, 0.7, 0.9] {
            let x = maxima[(q * r as f64) as usize];
            let p = sys.exact_max_cdf(50, x).unwrap();
            let emp = maxima.partition_point(|m| *m <= x) as f64 / r as f64;
            let se = (p * (1.0 - p) / r as f64).sqrt();
            assert!((emp - p).abs() <= 3.0 * se + 1.0 / r as f64, "{spec:?} at {x}: {emp} vs {p}");
        }
    }
}

#[test]
fn cube_transform_keeps_every_count() {
    let base = build_system(&clayton()).unwrap();
    let cubed = build_system(&SystemSpec::MonotoneTransform {
        base: Box::new(clayton()),
        transform: Transform::Cube,
    })
    .unwrap();
    let a = simulate_replicates(&base, 500, 20_000, 3).unwrap();
    let b = simulate_replicates(&cubed, 500, 20_000, 3).unwrap();
    for u in [0.99, 0.995, 0.999] {
        let below_a: Vec<bool> = a.iter().map(|r| r.max <= u).collect();
        let below_b: Vec<bool> = b.iter().map(|r| r.max <= u * u * u).collect();
        assert_eq!(below_a, below_b);
    }
    let ea = estimate_psi(&base, 500, &default_grid(), 20_000, 3).unwrap();
    let eb = estimate_psi(&cubed, 500, &default_grid(), 20_000, 3).unwrap();
    for (x, y) in ea.psi_hat.iter().zip(&eb.psi_hat) {
        assert!((x - y).abs() <= 1.0 / 20_000.0, "{x} vs {y}");
    }
}

fn log_limits(gen: ArchimedeanGenerator) -> (f64, f64, f64) {
    let low = 1e-6;
    let high = 1.0 - 1e-6;
    let at_low = log_base(low, psi_archimedean(&gen, low).unwrap());
    let at_high = log_base(high, psi_archimedean(&gen, high).unwrap());
    (at_low, at_high, gen.x0() / gen.mu())
}

#[test]
fn log_limits_independence() {
    let (lo, hi, target) = log_limits(ArchimedeanGenerator::Independence);
    assert!((lo - target).abs() <= 0.01, "{lo} vs {target}");
    assert!((hi - 1.0).abs() <= 0.01, "{hi}");
}

#[test]
fn log_limits_clayton() {
    let (lo, hi, target) = log_limits(ArchimedeanGenerator::Clayton { alpha: 1.0 });
    assert!((hi - 1.0).abs() <= 0.01, "{hi}");
    assert!((lo - target).abs() <= 0.01, "log_s psi at 1e-6 is {lo}, lower index {target}");
}

#[test]
fn log_limits_frank() {
    let (lo, hi, target) = log_limits(ArchimedeanGenerator::Frank { alpha: 2.0 });
    assert!((hi - 1.0).abs() <= 0.01, "{hi}");
    assert!((lo - target).abs() <= 0.01, "log_s psi at 1e-6 is {lo}, lower index {target}");
}

#[test]
fn distinct_seeds_agree_within_four_sigma() {
    let sys = build_system(&SystemSpec::MixtureSpike { gamma: 1.0 }).unwrap();
    let a = estimate_psi(&sys, 1000, &default_grid(), 50_000, 1).unwrap();
    let b = estimate_psi(&sys, 1000, &default_grid(), 50_000, 2).unwrap();
    for k in 0..a.s_grid.len() {
        let se = a.stderr[k].hypot(b.stderr[k]);
        assert!((a.psi_hat[k] - b.psi_hat[k]).abs() <= 4.0 * se);
    }
}

/// `E(1 − f⁻¹(s)/ζ)₊` for ζ uniform on {0.5, 1.5}: the law of the first
/// exceedance of a random threshold, conditioned on the threshold.
const TWO_POINT_FIRST_EXCEEDANCE: [f64; 19] = [
    0.0,
    0.0,
    0.0,
    0.0,
    0.0,
    0.0,
    0.0,
    0.0534250880382772,
    0.141678674575973,
    0.211324865405187,
    0.267434067077311,
    0.313394503136629,
    0.406236111218105,
    0.534457674541372,
    0.643210827674669,
    0.736237384174027,
    0.816410129714925,
    0.885970961913374,
    0.94669398961603,
];

#[test]
fn random_threshold_follows_first_exceedance_law() {
    let sys = build_system(&SystemSpec::RandomThreshold {
        zeta: DistributionSpec::TwoPoint { x1: 0.5, x2: 1.5, p: 0.5 },
    })
    .unwrap();
    let est = estimate_psi(&sys, 10_000, &default_grid(), 100_000, 8).unwrap();
    for k in 0..19 {
        let d = (est.psi_hat[k] - TWO_POINT_FIRST_EXCEEDANCE[k]).abs();
        assert!(d <= 4.0 * est.stderr[k] + 1e-3, "s = {}: {}", est.s_grid[k], est.psi_hat[k]);
    }
}
