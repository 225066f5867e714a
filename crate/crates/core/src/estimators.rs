//! Monte Carlo two-point functions, expected degree, decay fits, sandwich
//! checks and threshold arithmetic.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::clusters::{ClusterProbe, UnionFind};
use crate::error::{descriptor_error, Error, Result};
use crate::groups::CayleyWindow;
use crate::percolation::{BondSampler, SeedRecord};

/// Default slack, in standard errors, for every MC-vs-analytic comparison.
pub const SE_SLACK: f64 = 3.0;

/// Runs `n` samples in parallel, folding each configuration into a
/// per-thread accumulator. `merge` must be order-insensitive.
pub fn fold_samples<A, I, F, M>(sampler: &dyn BondSampler, n: u64, master: u64, init: I, step: F, merge: M) -> A
where
    A: Send,
    I: Fn() -> A + Sync + Send,
    F: Fn(&mut A, &[bool], SeedRecord) + Sync + Send,
    M: Fn(A, A) -> A + Sync + Send,
{
    let edges = sampler.edge_count();
    (0..n)
        .into_par_iter()
        .fold(
            || (init(), vec![false; edges]),
            |(mut acc, mut open), i| {
                let seed = SeedRecord::new(master, i);
                sampler.sample_into(seed, &mut open);
                step(&mut acc, &open, seed);
                (acc, open)
            },
        )
        .map(|(acc, _)| acc)
        .reduce(&init, &merge)
}

/// Per-sample statistics in sample order.
pub fn map_samples<T, F>(sampler: &dyn BondSampler, n: usize, master: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(&[bool], SeedRecord) -> T + Sync + Send,
{
    let edges = sampler.edge_count();
    (0..n)
        .into_par_iter()
        .map_init(
            || vec![false; edges],
            |open, i| {
                let seed = SeedRecord::new(master, i as u64);
                sampler.sample_into(seed, open);
                f(open, seed)
            },
        )
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoPointRow {
    pub target_id: String,
    /// Window vertex index; `None` for synthetic rows.
    pub vertex: Option<usize>,
    pub word_length: u32,
    pub successes: u64,
    /// Zero marks an exact (analytic) row.
    pub trials: u64,
    pub tau_hat: f64,
    pub stderr: f64,
}

impl TwoPointRow {
    pub fn from_counts(target_id: impl Into<String>, vertex: Option<usize>, word_length: u32, successes: u64, trials: u64) -> Self {
        let tau = successes as f64 / trials as f64;
        Self {
            target_id: target_id.into(),
            vertex,
            word_length,
            successes,
            trials,
            tau_hat: tau,
            stderr: (tau * (1.0 - tau) / trials as f64).sqrt(),
        }
    }

    pub fn exact(target_id: impl Into<String>, word_length: u32, tau: f64) -> Self {
        Self {
            target_id: target_id.into(),
            vertex: None,
            word_length,
            successes: 0,
            trials: 0,
            tau_hat: tau,
            stderr: 0.0,
        }
    }

    pub fn is_exact(&self) -> bool {
        self.trials == 0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoPointTable {
    pub rows: Vec<TwoPointRow>,
    pub sampler: String,
    pub seed: u64,
    pub samples: u64,
}

impl TwoPointTable {
    pub fn exact(rows: Vec<TwoPointRow>, label: impl Into<String>) -> Self {
        Self {
            rows,
            sampler: label.into(),
            seed: 0,
            samples: 0,
        }
    }

    pub fn row_for_vertex(&self, v: usize) -> Option<&TwoPointRow> {
        self.rows.iter().find(|r| r.vertex == Some(v))
    }
}

/// `τ̂(o, g)` for every target, from `n` independent configurations.
pub fn estimate_two_point(
    window: &CayleyWindow,
    sampler: &dyn BondSampler,
    targets: &[usize],
    n: u64,
    seed: u64,
) -> Result<TwoPointTable> {
    if n == 0 {
        return Err(Error::InvalidParameter("zero samples".into()));
    }
    if let Some(&t) = targets.iter().find(|&&t| t >= window.vertex_count()) {
        return Err(Error::OutOfWindow(format!("target vertex {t}")));
    }
    check_sampler(window, sampler)?;
    let base = window.base();
    let counts = fold_samples(
        sampler,
        n,
        seed,
        || (vec![0u64; targets.len()], ClusterProbe::new(window.vertex_count())),
        |(counts, probe), open, _| {
            probe.explore(window, open, base);
            for (c, &t) in counts.iter_mut().zip(targets) {
                *c += probe.contains(t) as u64;
            }
        },
        |(mut a, probe), (b, _)| {
            a.iter_mut().zip(&b).for_each(|(x, y)| *x += y);
            (a, probe)
        },
    )
    .0;
    let rows = targets
        .iter()
        .zip(counts)
        .map(|(&t, s)| TwoPointRow::from_counts(window.vertex(t).to_string(), Some(t), window.level(t), s, n))
        .collect();
    Ok(TwoPointTable {
        rows,
        sampler: sampler.describe(),
        seed,
        samples: n,
    })
}

fn check_sampler(window: &CayleyWindow, sampler: &dyn BondSampler) -> Result<()> {
    if sampler.edge_count() != window.edge_count() {
        return Err(Error::InvalidParameter("sampler was built for a different window".into()));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DegreeEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub samples: u64,
}

/// Mean number of open edges at the base vertex.
pub fn estimate_expected_degree(window: &CayleyWindow, sampler: &dyn BondSampler, n: u64, seed: u64) -> Result<DegreeEstimate> {
    if n == 0 {
        return Err(Error::InvalidParameter("zero samples".into()));
    }
    check_sampler(window, sampler)?;
    let incident: Vec<usize> = window.base_edges();
    let (sum, sum_sq) = fold_samples(
        sampler,
        n,
        seed,
        || (0u64, 0u64),
        |(s, q), open, _| {
            let d = incident.iter().filter(|&&e| open[e]).count() as u64;
            *s += d;
            *q += d * d;
        },
        |a, b| (a.0 + b.0, a.1 + b.1),
    );
    let nf = n as f64;
    let mean = sum as f64 / nf;
    let var = if n > 1 {
        ((sum_sq as f64 - nf * mean * mean) / (nf - 1.0)).max(0.0)
    } else {
        0.0
    };
    Ok(DegreeEstimate {
        mean,
        stderr: (var / nf).sqrt(),
        samples: n,
    })
}

/// Empirical `τ̂(g, h)` for every pair of a vertex set.
#[derive(Debug, Clone, PartialEq)]
pub struct PairwiseTable {
    pub vertices: Vec<usize>,
    pub labels: Vec<String>,
    /// Row-major `n × n` connection counts; the diagonal equals `trials`.
    pub successes: Vec<u64>,
    pub trials: u64,
}

impl PairwiseTable {
    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn tau(&self, i: usize, j: usize) -> f64 {
        self.successes[i * self.len() + j] as f64 / self.trials as f64
    }

    pub fn stderr(&self, i: usize, j: usize) -> f64 {
        let t = self.tau(i, j);
        (t * (1.0 - t) / self.trials as f64).sqrt()
    }

    pub fn max_stderr(&self) -> f64 {
        let n = self.len();
        (0..n * n).map(|k| self.stderr(k / n, k % n)).fold(0.0, f64::max)
    }
}

/// Direct pairwise estimation on `vertices`; no invariance is assumed.
pub fn estimate_pairwise(
    window: &CayleyWindow,
    sampler: &dyn BondSampler,
    vertices: &[usize],
    n: u64,
    seed: u64,
) -> Result<PairwiseTable> {
    if n == 0 {
        return Err(Error::InvalidParameter("zero samples".into()));
    }
    check_sampler(window, sampler)?;
    let k = vertices.len();
    let successes = fold_samples(
        sampler,
        n,
        seed,
        || (vec![0u64; k * k], UnionFind::new(window.vertex_count()), vec![0u32; k]),
        |(counts, uf, roots), open, _| {
            uf.reset();
            uf.absorb(window, open);
            for (r, &v) in roots.iter_mut().zip(vertices) {
                *r = uf.find(v as u32);
            }
            for i in 0..k {
                for j in 0..k {
                    counts[i * k + j] += (roots[i] == roots[j]) as u64;
                }
            }
        },
        |(mut a, uf, r), (b, _, _)| {
            a.iter_mut().zip(&b).for_each(|(x, y)| *x += y);
            (a, uf, r)
        },
    )
    .0;
    Ok(PairwiseTable {
        vertices: vertices.to_vec(),
        labels: vertices.iter().map(|&v| window.vertex(v).to_string()).collect(),
        successes,
        trials: n,
    })
}

pub const DEFAULT_MIN_TRIALS: u64 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub rate: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// Larger of the residual standard error and the propagated sampling
    /// error of the slope.
    pub rate_stderr: f64,
    pub included: Vec<bool>,
}

impl DecayFit {
    /// Half-width of the fit confidence interval.
    pub fn ci_half_width(&self) -> f64 {
        SE_SLACK * self.rate_stderr
    }

    pub fn covers(&self, rate: f64) -> bool {
        (self.rate - rate).abs() <= self.ci_half_width() + 1e-12
    }
}

pub fn fit_exponential_decay(t: &TwoPointTable) -> Result<DecayFit> {
    fit_exponential_decay_with(t, DEFAULT_MIN_TRIALS)
}

/// Least squares of `log τ̂` on `|g|`. Rows with no successes, or with fewer
/// than `min_trials` trials, are left out.
pub fn fit_exponential_decay_with(t: &TwoPointTable, min_trials: u64) -> Result<DecayFit> {
    let included: Vec<bool> = t
        .rows
        .iter()
        .map(|r| r.tau_hat > 0.0 && (r.is_exact() || (r.successes >= 1 && r.trials >= min_trials)))
        .collect();
    let pts: Vec<(f64, f64, f64)> = t
        .rows
        .iter()
        .zip(&included)
        .filter(|(_, &inc)| inc)
        .map(|(r, _)| {
            let var_log = if r.is_exact() {
                0.0
            } else {
                (1.0 - r.tau_hat) / (r.trials as f64 * r.tau_hat)
            };
            (r.word_length as f64, r.tau_hat.ln(), var_log)
        })
        .collect();
    let m = pts.len();
    if m < 3 {
        return Err(Error::InsufficientTargets { found: m, needed: 3 });
    }
    let mf = m as f64;
    let xbar = pts.iter().map(|p| p.0).sum::<f64>() / mf;
    let ybar = pts.iter().map(|p| p.1).sum::<f64>() / mf;
    let sxx: f64 = pts.iter().map(|p| (p.0 - xbar).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InsufficientTargets { found: 1, needed: 3 });
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - xbar) * (p.1 - ybar)).sum();
    let slope = sxy / sxx;
    let intercept = ybar - slope * xbar;
    let sse: f64 = pts.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
    let sst: f64 = pts.iter().map(|p| (p.1 - ybar).powi(2)).sum();
    let r_squared = if sst > 0.0 { 1.0 - sse / sst } else { 1.0 };
    let resid_se = if m > 2 { (sse / (mf - 2.0) / sxx).sqrt() } else { 0.0 };
    let mc_se = pts
        .iter()
        .map(|p| ((p.0 - xbar) / sxx).powi(2) * p.2)
        .sum::<f64>()
        .sqrt();
    let rate = -slope;
    Ok(DecayFit {
        rate: if rate > 0.0 { rate } else { 0.0 },
        intercept,
        r_squared,
        rate_stderr: resid_se.max(mc_se),
        included,
    })
}

/// `ρ(t) = max(a·t + b, 0)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RhoDescriptor {
    pub slope: f64,
    pub offset: f64,
}

impl RhoDescriptor {
    pub const IDENTITY: RhoDescriptor = RhoDescriptor { slope: 1.0, offset: 0.0 };

    pub fn eval(&self, t: f64) -> f64 {
        (self.slope * t + self.offset).max(0.0)
    }
}

impl fmt::Display for RhoDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "linear:{},{}", self.slope, self.offset)
    }
}

impl FromStr for RhoDescriptor {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        if t == "id" || t == "identity" {
            return Ok(Self::IDENTITY);
        }
        let body = t
            .strip_prefix("linear:")
            .ok_or_else(|| descriptor_error(s, "expected `linear:a,b`"))?;
        let (a, b) = body
            .split_once(',')
            .ok_or_else(|| descriptor_error(s, "expected two coefficients"))?;
        let parse = |v: &str| {
            v.trim()
                .parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| descriptor_error(s, format!("bad coefficient `{}`", v.trim())))
        };
        Ok(Self {
            slope: parse(a)?,
            offset: parse(b)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SandwichRow {
    pub target_id: String,
    pub word_length: u32,
    pub tau_hat: f64,
    pub stderr: f64,
    pub lower: f64,
    pub upper: f64,
    pub lower_ok: bool,
    pub upper_ok: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SandwichReport {
    pub beta: f64,
    pub gamma: f64,
    pub rho: RhoDescriptor,
    pub rows: Vec<SandwichRow>,
    pub pass: bool,
}

/// Checks `e^{−β|g|} ≤ τ̂ ≤ e^{−γρ(|g|)}` per target with `3·SE` slack.
pub fn check_sandwich(t: &TwoPointTable, beta: f64, gamma: f64, rho: RhoDescriptor) -> Result<SandwichReport> {
    if !(beta > 0.0 && gamma > 0.0) {
        return Err(Error::InvalidParameter(format!("bounds need β, γ > 0 (got {beta}, {gamma})")));
    }
    const FLOAT_TOL: f64 = 1e-12;
    let rows: Vec<SandwichRow> = t
        .rows
        .iter()
        .map(|r| {
            let len = r.word_length as f64;
            let lower = (-beta * len).exp();
            let upper = (-gamma * rho.eval(len)).exp();
            let slack = SE_SLACK * r.stderr + FLOAT_TOL;
            SandwichRow {
                target_id: r.target_id.clone(),
                word_length: r.word_length,
                tau_hat: r.tau_hat,
                stderr: r.stderr,
                lower,
                upper,
                lower_ok: r.tau_hat + slack >= lower,
                upper_ok: r.tau_hat - slack <= upper,
            }
        })
        .collect();
    let pass = rows.iter().all(|r| r.lower_ok && r.upper_ok);
    Ok(SandwichReport {
        beta,
        gamma,
        rho,
        rows,
        pass,
    })
}

fn check_threshold_args(eps: f64, d_k: f64, degree: usize) -> Result<()> {
    if eps > 0.0 && d_k >= 1.0 && degree >= 1 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "need ε > 0, d_K ≥ 1, degree ≥ 1 (got {eps}, {d_k}, {degree})"
        )))
    }
}

/// `1 − ε/(deg·d_K)`.
pub fn weak_kazhdan_threshold(eps: f64, d_k: f64, degree: usize) -> Result<f64> {
    check_threshold_args(eps, d_k, degree)?;
    Ok(1.0 - eps / (degree as f64 * d_k))
}

/// `1 − ε²/(4·deg·d_K)`.
pub fn kazhdan_threshold(eps: f64, d_k: f64, degree: usize) -> Result<f64> {
    check_threshold_args(eps, d_k, degree)?;
    Ok(1.0 - eps * eps / (4.0 * degree as f64 * d_k))
}

/// Lower bound on every edge marginal: `exp(−(1−p)·max w)` for the Poisson
/// rule, `p^{max w}` for the Bernoulli rule.
pub fn alpha_p(p: f64, max_edge_measure: f64, rule: crate::percolation::WallRule) -> f64 {
    match rule {
        crate::percolation::WallRule::Poisson => (-(1.0 - p) * max_edge_measure).exp(),
        crate::percolation::WallRule::Bernoulli => p.powf(max_edge_measure),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::groups::{ball, Family, DEFAULT_BUDGET};
    use crate::percolation::{BernoulliBond, WallSampler};
    use crate::walls::WallStructure;

    fn synthetic(f: impl Fn(u32) -> f64) -> TwoPointTable {
        TwoPointTable::exact((0..8).map(|l| TwoPointRow::exact(format!("g{l}"), l, f(l))).collect(), "synthetic")
    }

    #[test]
    fn exact_exponential_fit() {
        let fit = fit_exponential_decay(&synthetic(|l| (-0.5 * l as f64).exp())).unwrap();
        assert!((fit.rate - 0.5).abs() < 1e-12);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
    }

    #[test]
    fn constant_fit() {
        let fit = fit_exponential_decay(&synthetic(|_| 1.0)).unwrap();
        assert_eq!(fit.rate, 0.0);
    }

    #[test]
    fn too_few_targets() {
        let t = TwoPointTable::exact(vec![TwoPointRow::exact("o", 0, 1.0), TwoPointRow::exact("a", 1, 0.5)], "x");
        assert!(matches!(fit_exponential_decay(&t), Err(Error::InsufficientTargets { .. })));
    }

    #[test]
    fn zero_success_rows_are_excluded() {
        let mut rows: Vec<TwoPointRow> = (0..4u64)
            .map(|l| TwoPointRow::from_counts(format!("g{l}"), None, l as u32, 1000 >> l, 1000))
            .collect();
        rows.push(TwoPointRow::from_counts("far", None, 9, 0, 1000));
        let fit = fit_exponential_decay(&TwoPointTable::exact(rows, "x")).unwrap();
        assert_eq!(fit.included, vec![true, true, true, true, false]);
        assert!((fit.rate - std::f64::consts::LN_2).abs() < 0.01);
    }

    #[test]
    fn sandwich_fixtures() {
        let t = synthetic(|l| (-(l as f64)).exp());
        assert!(check_sandwich(&t, 2.0, 0.5, RhoDescriptor::IDENTITY).unwrap().pass);
        let flat = synthetic(|_| 1.0);
        let rep = check_sandwich(&flat, 2.0, 0.1, RhoDescriptor::IDENTITY).unwrap();
        assert!(!rep.pass);
        assert!(rep.rows.iter().all(|r| r.upper_ok == (r.word_length == 0)));
        assert!(check_sandwich(&t, 0.0, 0.1, RhoDescriptor::IDENTITY).is_err());
    }

    #[test]
    fn rho_grammar() {
        let r: RhoDescriptor = "linear:1,-1".parse().unwrap();
        assert_eq!(r.eval(0.0), 0.0);
        assert_eq!(r.eval(3.0), 2.0);
        assert_eq!("id".parse::<RhoDescriptor>().unwrap(), RhoDescriptor::IDENTITY);
        assert_eq!("linear:0.25,-0.25".parse::<RhoDescriptor>().unwrap().to_string(), "linear:0.25,-0.25");
        assert!("quadratic:1".parse::<RhoDescriptor>().is_err());
        assert!("linear:1".parse::<RhoDescriptor>().is_err());
    }

    #[test]
    fn thresholds() {
        assert_eq!(weak_kazhdan_threshold(1.0, 1.0, 4).unwrap(), 0.75);
        assert_eq!(weak_kazhdan_threshold(0.5, 2.0, 4).unwrap(), 0.9375);
        assert_eq!(kazhdan_threshold(1.0, 1.0, 4).unwrap(), 15.0 / 16.0);
        assert_eq!(kazhdan_threshold(2.0, 1.0, 4).unwrap(), 0.75);
        assert!((1.0 - weak_kazhdan_threshold(1e-12, 1.0, 4).unwrap()) < 1e-12);
        assert!(kazhdan_threshold(0.0, 1.0, 4).is_err());
        assert!(weak_kazhdan_threshold(1.0, 0.5, 4).is_err());
    }

    #[test]
    fn identity_target_is_certain() {
        let w = ball(Family::Free { rank: 2 }, 3, DEFAULT_BUDGET).unwrap();
        let atoms = WallStructure::Tree.enumerate_window_walls(&w).unwrap();
        let s = WallSampler::poisson(&w, &atoms, 0.3).unwrap();
        let t = estimate_two_point(&w, &s, &[0, 1], 500, 7).unwrap();
        assert_eq!(t.rows[0].tau_hat, 1.0);
        assert_eq!(t.rows[0].stderr, 0.0);
        assert!(estimate_two_point(&w, &s, &[0], 0, 7).is_err());
    }

    #[test]
    fn full_sampler_degree() {
        let w = ball(Family::Lattice { dim: 2 }, 3, DEFAULT_BUDGET).unwrap();
        let s = BernoulliBond::new(&w, 1.0).unwrap();
        let d = estimate_expected_degree(&w, &s, 100, 1).unwrap();
        assert_eq!(d.mean, 4.0);
        assert_eq!(d.stderr, 0.0);
    }

    #[test]
    fn estimates_do_not_depend_on_thread_count() {
        let w = ball(Family::Free { rank: 2 }, 4, DEFAULT_BUDGET).unwrap();
        let s = BernoulliBond::new(&w, 0.6).unwrap();
        let targets = w.sphere_representatives();
        let a = estimate_two_point(&w, &s, &targets, 2000, 99).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
        let b = pool.install(|| estimate_two_point(&w, &s, &targets, 2000, 99).unwrap());
        assert_eq!(a, b);
    }

    #[test]
    fn pairwise_diagonal_and_symmetry() {
        let w = ball(Family::Free { rank: 2 }, 2, DEFAULT_BUDGET).unwrap();
        let s = BernoulliBond::new(&w, 0.5).unwrap();
        let f = w.ball_indices(1);
        let t = estimate_pairwise(&w, &s, &f, 300, 4).unwrap();
        for i in 0..t.len() {
            assert_eq!(t.tau(i, i), 1.0);
            for j in 0..t.len() {
                assert_eq!(t.tau(i, j), t.tau(j, i));
            }
        }
    }
}
