use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};
use wallperc::estimators::SE_SLACK;
use wallperc::hyperbolic::{
    crofton_constant, crossing_mass, geodesic_separates, hyp_dist, restricted_mass, sample_geodesics, tiling_graph,
    DiskPoint, Geodesic, HyperplaneSampler,
};
use wallperc::percolation::{BondSampler, SeedRecord};

#[test]
fn geodesic_count_has_the_poisson_mean() {
    let (r, rate) = (2.0, 0.3);
    let n = 10_000;
    let counts: Vec<f64> = (0..n)
        .map(|i| sample_geodesics(r, rate, SeedRecord::new(31, i)).unwrap().len() as f64)
        .collect();
    let mean = counts.iter().sum::<f64>() / n as f64;
    let want = rate * crofton_constant() * restricted_mass(r);
    let se = (want / n as f64).sqrt();
    assert!((mean - want).abs() <= SE_SLACK * se, "{mean} vs {want}");
}

#[test]
fn directions_are_uniform() {
    let bins = 16;
    let mut hist = vec![0u64; bins];
    for i in 0..2000 {
        for g in sample_geodesics(3.0, 1.0, SeedRecord::new(32, i)).unwrap() {
            hist[((g.theta / TAU) * bins as f64) as usize % bins] += 1;
        }
    }
    let total: u64 = hist.iter().sum();
    let expect = total as f64 / bins as f64;
    let chi2: f64 = hist.iter().map(|&c| (c as f64 - expect).powi(2) / expect).sum();
    let pval = 1.0 - ChiSquared::new((bins - 1) as f64).unwrap().cdf(chi2);
    assert!(pval > 0.001, "chi2 {chi2} p {pval}");
}

#[test]
fn crossing_mass_is_isometry_invariant() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let base = crossing_mass(DiskPoint::ORIGIN, DiskPoint::polar(1.5, 0.0).unwrap());
    for _ in 0..3 {
        let z = DiskPoint::polar(rng.random::<f64>() * 2.0, rng.random::<f64>() * TAU).unwrap();
        // a point at distance 1.5 from z, found by walking along a random direction
        let dir = rng.random::<f64>() * TAU;
        let w0 = num_complex::Complex64::from_polar((0.75f64).tanh(), dir);
        let w = wallperc::hyperbolic::Mobius::translation_to(z.to_complex()).apply(w0);
        let w = DiskPoint::from_complex(w).unwrap();
        assert!((hyp_dist(z, w) - 1.5).abs() < 1e-10);
        let m = crossing_mass(z, w);
        assert!((m / base - 1.0).abs() < 0.005, "{m} vs {base}");
    }
}

#[test]
fn adding_a_geodesic_never_opens_an_edge() {
    let t = tiling_graph(4, 5, 4).unwrap();
    let s = HyperplaneSampler::new(&t, 0.9).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut before = vec![false; s.edge_count()];
    let mut after = vec![false; s.edge_count()];
    for i in 0..300 {
        let mut gs = s.geodesics(SeedRecord::new(40, i));
        s.apply(&gs, &mut before);
        gs.push(Geodesic::new(rng.random::<f64>() * 4.0, rng.random::<f64>() * TAU).unwrap());
        s.apply(&gs, &mut after);
        assert!(before.iter().zip(&after).all(|(&b, &a)| b || !a));
    }
}

#[test]
fn pruned_sampler_agrees_with_direct_separation() {
    let t = tiling_graph(4, 5, 4).unwrap();
    let s = HyperplaneSampler::new(&t, 0.5).unwrap();
    let mut open = vec![false; s.edge_count()];
    for i in 0..50 {
        let gs = s.geodesics(SeedRecord::new(41, i));
        s.apply(&gs, &mut open);
        for (k, e) in t.window.edges().iter().enumerate() {
            let (z, w) = (t.points[e.a as usize], t.points[e.b as usize]);
            let cut = gs.iter().any(|g| geodesic_separates(g, z, w));
            assert_eq!(open[k], !cut);
        }
    }
}

#[test]
fn near_one_everything_is_open() {
    let t = tiling_graph(4, 5, 3).unwrap();
    let s = HyperplaneSampler::new(&t, 1.0 - 1e-12).unwrap();
    let mut open = vec![false; s.edge_count()];
    s.sample_into(SeedRecord::new(1, 1), &mut open);
    assert!(open.iter().all(|&o| o));
    assert!(HyperplaneSampler::new(&t, 1.0).is_err());
}
