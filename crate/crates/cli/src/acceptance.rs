//! Acceptance criteria and the `verify` suites built from them. Every
//! tolerance, sample size and seed is pinned here.

use std::fmt;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use statrs::distribution::{ContinuousCDF, Normal};
use wallperc::clusters::ClusterProbe;
use wallperc::estimators::{
    alpha_p, estimate_expected_degree, estimate_pairwise, kazhdan_threshold, weak_kazhdan_threshold, SE_SLACK,
};
use wallperc::groups::{ball, Family, DEFAULT_BUDGET};
use wallperc::hyperbolic::{crofton_report, geodesic_separates, radius, sample_geodesics, LINEARITY_TOL, PLACEMENTS};
use wallperc::kernels::{
    gram_from_fn, gram_from_pairwise, mc_psd_tolerance, measure_definite_decomposition, min_eigenvalue, psd_check,
    schoenberg_check, triangle_audit_pairwise, DETERMINISTIC_TOL,
};
use wallperc::percolation::{SeedRecord, WallRule, WallSampler};
use wallperc::walls::WallStructure;

use crate::commands::{self, lamplighter_bound_check, PsiKind, DEFAULT_T_GRID};
use crate::config::{ConfigArgs, ExperimentConfig};
use crate::experiment::{Experiment, Report};
use crate::output::json_text;
use crate::stats::{clopper_pearson_lower, mean_se, percentile};
use crate::CliError;

pub const TREE_SAMPLES: u64 = 100_000;
pub const TREE_RADIUS: u32 = 8;
pub const TREE_PS: [f64; 2] = [0.5, 0.9];
pub const TREE_RUNTIME: Duration = Duration::from_secs(60);
pub const BERNOULLI_TREE_P: f64 = 0.7;
pub const LATTICE_RADIUS: u32 = 6;
pub const LATTICE_P: f64 = 0.5;
pub const LAMP_RADIUS: u32 = 6;
pub const LAMP_RUNTIME: Duration = Duration::from_secs(300);
pub const LAMP_SANDWICH_P: f64 = 0.8;
pub const DEGREE_PS: [f64; 3] = [0.5, 0.9, 0.99];
pub const DEGREE_SAMPLES: u64 = 100_000;
pub const KERNEL_SAMPLES: u64 = 10_000;
pub const KERNEL_P: f64 = 0.7;
pub const KERNEL_RADIUS: u32 = 2;
pub const MD_IDENTITY_TOL: f64 = 1e-12;
pub const SCHOENBERG_RADIUS: u32 = 3;
pub const CROSSING_LENGTH: f64 = 2.0;
pub const CROSSING_P: f64 = 0.5;
pub const CROSSING_DRAWS: u64 = 10_000;
pub const CROSSING_DISK_MARGIN: f64 = 0.5;
pub const TILING_FAMILY: &str = "tiling:p=4,q=5,depth=6";
pub const TILING_P: f64 = 0.97;
pub const TILING_SAMPLES: u64 = 1_000;
pub const TILING_MIN_SIZE: u32 = 20;
pub const TILING_CONFIDENCE: f64 = 0.99;
pub const TILING_MIN_R_SQUARED: f64 = 0.9;
pub const FOLNER_RADIUS: u32 = 32;
pub const FOLNER_P: f64 = 0.9;
pub const FOLNER_NMAX: [u32; 3] = [4, 8, 12];
pub const FOLNER_SAMPLES: usize = 10_000;
pub const FOLNER_QUANTILE: f64 = 0.99;
pub const DETERMINISM_SAMPLES: u64 = 2_000;

/// Master seeds, one per criterion.
pub const SEEDS: [u64; 14] = [0, 1001, 1002, 1003, 1004, 1005, 1006, 1007, 1008, 1009, 1010, 1011, 1012, 1013];

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: impl Into<String>, pass: bool, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            pass,
            detail: detail.into(),
        }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let v = if self.pass { "PASS" } else { "FAIL" };
        write!(f, "  {v} {}: {}", self.name, self.detail)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CriterionReport {
    pub id: u32,
    pub title: &'static str,
    pub checks: Vec<Check>,
}

impl CriterionReport {
    fn new(id: u32, title: &'static str) -> Self {
        Self {
            id,
            title,
            checks: Vec::new(),
        }
    }

    fn push(&mut self, name: impl Into<String>, pass: bool, detail: impl Into<String>) {
        self.checks.push(Check::new(name, pass, detail));
    }

    pub fn pass(&self) -> bool {
        !self.checks.is_empty() && self.checks.iter().all(|c| c.pass)
    }

    /// One verdict line for the criterion.
    pub fn headline(&self) -> String {
        let v = if self.pass() { "PASS" } else { "FAIL" };
        let failed = self.checks.iter().filter(|c| !c.pass).count();
        format!(
            "{v} criterion {:>2} {} ({} checks, {failed} failed)",
            self.id,
            self.title,
            self.checks.len()
        )
    }
}

impl fmt::Display for CriterionReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{}", self.headline())?;
        for c in &self.checks {
            writeln!(f, "{c}")?;
        }
        Ok(())
    }
}

pub const SUITES: [&str; 7] = ["tree", "lattice", "lamplighter", "folner", "hyperbolic", "kernels", "thresholds"];

/// Criteria run by a `verify` suite.
pub fn suite_criteria(name: &str) -> Result<&'static [u32], CliError> {
    Ok(match name {
        "tree" => &[1, 2],
        "lattice" => &[3],
        "lamplighter" => &[4, 5],
        "folner" => &[11],
        "hyperbolic" => &[9, 10],
        "kernels" => &[7, 8],
        "thresholds" => &[6, 12],
        other => {
            return Err(CliError::config(format!(
                "unknown suite `{other}` (expected one of {})",
                SUITES.join(", ")
            )))
        }
    })
}

pub fn run_criterion(id: u32) -> Result<CriterionReport, CliError> {
    match id {
        1 => tree_exactness(),
        2 => bernoulli_tree_law(),
        3 => lattice_exactness(),
        4 => lamplighter_walls(),
        5 => lamplighter_sandwich(),
        6 => expected_degree_bound(),
        7 => kernel_suite(),
        8 => schoenberg_fixture(),
        9 => crofton_calibration(),
        10 => tiling_percolation(),
        11 => folner_demo(),
        12 => threshold_arithmetic(),
        13 => determinism(),
        other => Err(CliError::config(format!("no criterion {other}"))),
    }
}

pub fn verify(suite: &str) -> Result<Vec<CriterionReport>, CliError> {
    suite_criteria(suite)?.iter().map(|&id| run_criterion(id)).collect()
}

fn config(toml: &str) -> Result<ExperimentConfig, CliError> {
    ExperimentConfig::resolve(&ConfigArgs::from_toml(toml)?)
}

fn run(toml: &str) -> Result<(Experiment, Report), CliError> {
    let exp = Experiment::build(config(toml)?)?;
    let report = exp.run()?;
    Ok((exp, report))
}

/// Compares every target row with `exact(|g|)` at `3·SE`.
fn compare_rows(c: &mut CriterionReport, label: &str, report: &Report, exact: impl Fn(u32) -> f64) {
    let mut worst = 0.0f64;
    let mut failed = Vec::new();
    for r in &report.table.rows {
        let want = exact(r.word_length);
        let dev = (r.tau_hat - want).abs();
        if r.stderr > 0.0 {
            worst = worst.max(dev / r.stderr);
        }
        if dev > SE_SLACK * r.stderr + 1e-12 {
            failed.push(format!("|g|={} τ̂={:.5} want {:.5} se {:.2e}", r.word_length, r.tau_hat, want, r.stderr));
        }
    }
    let detail = if failed.is_empty() {
        format!("{} targets, max |z| = {worst:.2}", report.table.rows.len())
    } else {
        failed.join("; ")
    };
    c.push(format!("{label} two-point within 3 SE"), failed.is_empty(), detail);
}

pub fn tree_exactness() -> Result<CriterionReport, CliError> {
    let mut c = CriterionReport::new(1, "tree exactness");
    let start = Instant::now();
    for (k, p) in TREE_PS.into_iter().enumerate() {
        let (_, report) = run(&format!(
            "family = \"free:r=2\"\nwalls = \"tree\"\nrule = \"poisson\"\np = {p}\nradius = {TREE_RADIUS}\nsamples = {TREE_SAMPLES}\nseed = {}",
            SEEDS[1] + 100 * k as u64
        ))?;
        compare_rows(&mut c, &format!("p={p}"), &report, |l| (-(1.0 - p) * l as f64).exp());
        match &report.fit {
            Ok(fit) => c.push(
                format!("p={p} decay fit covers 1-p"),
                fit.covers(1.0 - p),
                format!("γ̂ = {:.5} ± {:.5}, R² = {:.4}", fit.rate, fit.ci_half_width(), fit.r_squared),
            ),
            Err(e) => c.push(format!("p={p} decay fit covers 1-p"), false, e.clone()),
        }
    }
    let elapsed = start.elapsed();
    c.push(
        "runtime",
        elapsed <= TREE_RUNTIME,
        format!("{:.1} s for both p (limit {} s)", elapsed.as_secs_f64(), TREE_RUNTIME.as_secs()),
    );
    Ok(c)
}

pub fn bernoulli_tree_law() -> Result<CriterionReport, CliError> {
    let mut c = CriterionReport::new(2, "Bernoulli tree law");
    let p = BERNOULLI_TREE_P;
    for (k, sampler) in ["walls = \"bond\"", "walls = \"tree\"\nrule = \"bernoulli\""].into_iter().enumerate() {
        let (exp, report) = run(&format!(
            "family = \"free:r=2\"\n{sampler}\np = {p}\nradius = {TREE_RADIUS}\nsamples = {TREE_SAMPLES}\nseed = {}",
            SEEDS[2] + 100 * k as u64
        ))?;
        compare_rows(&mut c, &exp.config.sampler.to_string(), &report, |l| p.powi(l as i32));
    }
    Ok(c)
}

pub fn lattice_exactness() -> Result<CriterionReport, CliError> {
    let mut c = CriterionReport::new(3, "Z² exactness");
    let p = LATTICE_P;
    let (_, report) = run(&format!(
        "family = \"lattice:d=2\"\nwalls = \"cubical\"\nrule = \"poisson\"\np = {p}\nradius = {LATTICE_RADIUS}\nsamples = {TREE_SAMPLES}\nseed = {}",
        SEEDS[3]
    ))?;
    compare_rows(&mut c, "sphere targets", &report, |l| (-(1.0 - p) * l as f64).exp());
    let want = (-(1.0 - p)).exp();
    let n = report.table.samples;
    let wrong_law = report.edges.iter().filter(|e| (e.expected - want).abs() > 1e-15).count();
    let outside = report.edges_outside(SE_SLACK);
    let worst = report
        .edges
        .iter()
        .map(|e| (e.estimate(n) - want).abs() / e.stderr)
        .fold(0.0, f64::max);
    c.push(
        "edge marginals within 3 SE of e^-0.5",
        outside == 0 && wrong_law == 0,
        format!("{} edges, {outside} outside, max |z| = {worst:.2}", report.edges.len()),
    );
    Ok(c)
}

pub fn lamplighter_walls() -> Result<CriterionReport, CliError> {
    let mut c = CriterionReport::new(4, "lamplighter walls");
    let start = Instant::now();
    let check = lamplighter_bound_check(Family::Lamplighter { modulus: 2, rank: 2 }, LAMP_RADIUS)?;
    let elapsed = start.elapsed();
    c.push(
        "wall count ≥ |g|/4 - 1/4",
        check.bound_violations == 0 && check.count_mismatches == 0,
        format!(
            "{} elements, {} violations, {} enumeration mismatches, min slack {}",
            check.checked, check.bound_violations, check.count_mismatches, check.min_slack
        ),
    );
    c.push(
        "Steiner length equals BFS distance",
        check.steiner_mismatches == 0,
        format!("{} mismatches", check.steiner_mismatches),
    );
    c.push(
        "runtime",
        elapsed <= LAMP_RUNTIME,
        format!("{:.1} s (limit {} s)", elapsed.as_secs_f64(), LAMP_RUNTIME.as_secs()),
    );
    Ok(c)
}

pub fn lamplighter_sandwich() -> Result<CriterionReport, CliError> {
    let mut c = CriterionReport::new(5, "lamplighter sandwich");
    let p = LAMP_SANDWICH_P;
    let family = Family::Lamplighter { modulus: 2, rank: 2 };
    let beta = (1.0 - p) * WallStructure::Lamplighter.max_edge_measure(&family)?;
    let gamma = (1.0 - p) / 4.0;
    let (_, report) = run(&format!(
        "family = \"{family}\"\nwalls = \"lamplighter\"\nrule = \"poisson\"\np = {p}\nradius = {LAMP_RADIUS}\nsamples = {TREE_SAMPLES}\nseed = {}\nrho = \"linear:1,-1\"\nbeta = {beta}\ngamma = {gamma}",
        SEEDS[5]
    ))?;
    let s = report.sandwich.as_ref().expect("sandwich requested");
    let rows: Vec<String> = s
        .rows
        .iter()
        .map(|r| format!("|g|={}: {:.4} ≤ {:.4} ≤ {:.4}", r.word_length, r.lower, r.tau_hat, r.upper))
        .collect();
    c.push(format!("check_sandwich β={beta:.3} γ={gamma:.3}"), s.pass, rows.join("; "));
    Ok(c)
}

/// `(label, family, sampler, rule)` of every structure and rule in the
/// criteria.
const DEGREE_CASES: [(&str, &str, &str); 9] = [
    ("free:r=2", "tree", "poisson"),
    ("free:r=2", "tree", "bernoulli"),
    ("free:r=2", "bond", "poisson"),
    ("lattice:d=2", "cubical", "poisson"),
    ("lattice:d=2", "cubical", "bernoulli"),
    ("lamplighter:m=2,r=2", "lamplighter", "poisson"),
    ("lamplighter:m=2,r=2", "lamplighter", "bernoulli"),
    ("lattice:d=1", "folner:nmax=8", "poisson"),
    ("tiling:p=4,q=5,depth=1", "hyperplane", "poisson"),
];

pub fn expected_degree_bound() -> Result<CriterionReport, CliError> {
    let mut c = CriterionReport::new(6, "expected-degree bound");
    for (k, (family, walls, rule)) in DEGREE_CASES.into_iter().enumerate() {
        let label = if walls == "bond" || walls == "hyperplane" {
            format!("{family} {walls}")
        } else {
            format!("{family} {walls} {rule}")
        };
        let mut means = Vec::new();
        for (j, p) in DEGREE_PS.into_iter().enumerate() {
            let exp = Experiment::build(config(&format!(
                "family = \"{family}\"\nwalls = \"{walls}\"\nrule = \"{rule}\"\np = {p}\nradius = 1\nsamples = {DEGREE_SAMPLES}"
            ))?)?;
            let seed = SEEDS[6] + 100 * k as u64 + j as u64;
            let est = exp.with_sampler(|s| estimate_expected_degree(exp.window(), s, DEGREE_SAMPLES, seed))??;
            let deg = exp.window().degree() as f64;
            let alpha = exp.alpha()?;
            c.push(
                format!("{label} p={p}: E deg ≥ α_p·deg - 3 SE"),
                est.mean >= alpha * deg - SE_SLACK * est.stderr,
                format!("{:.4} vs {:.4} (α_p = {alpha:.4}, deg {deg})", est.mean, alpha * deg),
            );
            means.push((est.mean, est.stderr, deg));
        }
        let monotone = means
            .windows(2)
            .all(|w| w[1].0 >= w[0].0 - SE_SLACK * (w[0].1.powi(2) + w[1].1.powi(2)).sqrt());
        let (last, _, deg) = means[means.len() - 1];
        let shown: Vec<String> = means.iter().map(|m| format!("{:.4}", m.0)).collect();
        c.push(
            format!("{label}: monotone toward deg(o)"),
            monotone,
            format!("{} → deg {deg} (gap {:.4})", shown.join(", "), deg - last),
        );
    }
    Ok(c)
}

/// Samplers for the kernel suite on `ball(2)`.
const KERNEL_CASES: [(&str, &str, &str); 9] = DEGREE_CASES;

pub fn kernel_suite() -> Result<CriterionReport, CliError> {
    let mut c = CriterionReport::new(7, "kernel suite");
    for (k, (family, walls, rule)) in KERNEL_CASES.into_iter().enumerate() {
        let family = family.replace("depth=1", &format!("depth={KERNEL_RADIUS}"));
        let exp = Experiment::build(config(&format!(
            "family = \"{family}\"\nwalls = \"{walls}\"\nrule = \"{rule}\"\np = {KERNEL_P}\nradius = {KERNEL_RADIUS}"
        ))?)?;
        let w = exp.window();
        let f = w.ball_indices(KERNEL_RADIUS);
        let seed = SEEDS[7] + k as u64;
        let pairs = exp.with_sampler(|s| estimate_pairwise(w, s, &f, KERNEL_SAMPLES, seed))??;
        let gram = gram_from_pairwise(&pairs);
        let tol = mc_psd_tolerance(&pairs);
        let label = format!("{family} {}", exp.with_sampler(|s| s.describe())?);
        c.push(
            format!("{label}: Gram PSD"),
            psd_check(&gram, tol)?,
            format!("|F| = {}, λ_min = {:.3e}, tol {:.3e}", f.len(), min_eigenvalue(&gram)?, tol),
        );
        let audit = triangle_audit_pairwise(&pairs);
        c.push(
            format!("{label}: triangle audit of 1-τ̂"),
            audit.violations == 0,
            format!("{} triples, {} violations, max excess {:.3e}", audit.triples, audit.violations, audit.max_excess),
        );
    }
    let w = ball(Family::Free { rank: 2 }, 1, DEFAULT_BUDGET)?;
    let atoms = WallStructure::Tree.enumerate_window_walls(&w)?;
    let sampler = WallSampler::poisson(&w, &atoms, KERNEL_P)?;
    let rep = measure_definite_decomposition(&w, &sampler, &w.ball_indices(1), KERNEL_SAMPLES, SEEDS[7] + 100)?;
    c.push(
        "cluster decomposition on F₂ ball(1)",
        rep.per_sample_violations == 0 && rep.max_identity_gap < MD_IDENTITY_TOL,
        format!(
            "{} samples, {} violations, max gap {:.2e}",
            rep.samples, rep.per_sample_violations, rep.max_identity_gap
        ),
    );
    Ok(c)
}

pub fn schoenberg_fixture() -> Result<CriterionReport, CliError> {
    let mut c = CriterionReport::new(8, "Schoenberg fixture");
    let fam = Family::Free { rank: 2 };
    let w = ball(fam, SCHOENBERG_RADIUS, DEFAULT_BUDGET)?;
    let f: Vec<usize> = (0..w.vertex_count()).collect();
    let mut dist = vec![0.0; f.len() * f.len()];
    for i in 0..f.len() {
        for j in 0..f.len() {
            dist[i * f.len() + j] = fam.distance(w.vertex(i), w.vertex(j))? as f64;
        }
    }
    let psi = gram_from_fn(&w, &f, |a, b| dist[a * f.len() + b])?;
    let rep = schoenberg_check(&psi, &DEFAULT_T_GRID, DETERMINISTIC_TOL)?;
    for (t, m) in rep.levels {
        c.push(
            format!("t={t}: λ_min ≥ -1e-10"),
            m >= -DETERMINISTIC_TOL,
            format!("λ_min = {m:.3e} on {} points", f.len()),
        );
    }
    Ok(c)
}

pub fn crofton_calibration() -> Result<CriterionReport, CliError> {
    let mut c = CriterionReport::new(9, "Crofton calibration");
    let rep = crofton_report()?;
    c.push(
        "mass/length constant within 0.5%",
        rep.max_relative_deviation <= LINEARITY_TOL,
        format!(
            "c = {:.6}, max deviation {:.2e} over {} (L, placement) pairs",
            rep.constant,
            rep.max_relative_deviation,
            rep.entries.len()
        ),
    );
    let rate = 1.0 - CROSSING_P;
    let want = rate * CROSSING_LENGTH;
    for (k, placement) in PLACEMENTS.iter().enumerate() {
        let (z, w) = placement.segment(CROSSING_LENGTH)?;
        let r = radius(z).max(radius(w)) + CROSSING_DISK_MARGIN;
        let seed = SEEDS[9] + k as u64;
        let counts: Vec<f64> = (0..CROSSING_DRAWS)
            .into_par_iter()
            .map(|i| {
                let gs = sample_geodesics(r, rate, SeedRecord::new(seed, i)).expect("valid disk");
                gs.iter().filter(|g| geodesic_separates(g, z, w)).count() as f64
            })
            .collect();
        let (mean, se) = mean_se(counts);
        c.push(
            format!("placement {k}: mean crossings = (1-p)·2"),
            (mean - want).abs() <= SE_SLACK * se,
            format!("{mean:.4} ± {se:.4} vs {want}"),
        );
    }
    Ok(c)
}

pub fn tiling_percolation() -> Result<CriterionReport, CliError> {
    let mut c = CriterionReport::new(10, "hyperbolic tiling percolation");
    let (_, report) = run(&format!(
        "family = \"{TILING_FAMILY}\"\nwalls = \"hyperplane\"\np = {TILING_P}\nsamples = {TILING_SAMPLES}\nseed = {}\nclusters = true\nmin_size = {TILING_MIN_SIZE}",
        SEEDS[10]
    ))?;
    let n = report.table.samples;
    let outside = report.edges_outside(SE_SLACK);
    let worst = report
        .edges
        .iter()
        .map(|e| (e.estimate(n) - e.expected).abs() / e.stderr)
        .fold(0.0, f64::max);
    let m = report.edges.len();
    let normal = Normal::standard();
    let bonferroni = normal.inverse_cdf(1.0 - 0.01 / (2.0 * m as f64));
    let null_outside = m as f64 * 2.0 * (1.0 - normal.cdf(SE_SLACK));
    let mean_z = report
        .edges
        .iter()
        .map(|e| (e.estimate(n) - e.expected) / e.stderr)
        .sum::<f64>()
        / m as f64;
    c.push(
        "(a) every edge marginal within 3 SE",
        outside == 0,
        format!(
            "{m} edges, {outside} outside ({null_outside:.1} expected by chance), mean z = {mean_z:+.3}, max |z| = {worst:.2} (familywise 1% Bonferroni bound {bonferroni:.2})"
        ),
    );
    let k = report.multi_component_samples();
    let lower = clopper_pearson_lower(k, n, TILING_CONFIDENCE);
    c.push(
        "(b') ≥ 2 boundary components of size ≥ 20 with positive frequency",
        lower > 0.0,
        format!("{k}/{n} samples, 99% lower bound {lower:.4}"),
    );
    match &report.fit {
        Ok(fit) => c.push(
            "(c) decay fit γ̂ > 0, R² ≥ 0.9",
            fit.rate > 0.0 && fit.r_squared >= TILING_MIN_R_SQUARED,
            format!("γ̂ = {:.5}, R² = {:.4}", fit.rate, fit.r_squared),
        ),
        Err(e) => c.push("(c) decay fit γ̂ > 0, R² ≥ 0.9", false, e.clone()),
    }
    Ok(c)
}

/// Per-sample o-cluster size and confinement for each `N_max`, with all
/// scales drawn once and truncated by measure.
pub fn folner_samples(seed: u64) -> Result<Vec<[(u64, bool); 3]>, CliError> {
    let fam = Family::Lattice { dim: 1 };
    let w = ball(fam, FOLNER_RADIUS, DEFAULT_BUDGET)?;
    let top = *FOLNER_NMAX.last().expect("non-empty");
    let atoms = WallStructure::Folner { nmax: top }.enumerate_window_walls(&w)?;
    let sampler = WallSampler::new(&w, &atoms, FOLNER_P, WallRule::Poisson)?;
    // scale-n walls have measure n/4ⁿ, which decreases strictly in n
    let cutoffs: Vec<f64> = FOLNER_NMAX
        .iter()
        .map(|&n| n as f64 / 4f64.powi(n as i32) * (1.0 - 1e-9))
        .collect();
    let base = w.base();
    Ok((0..FOLNER_SAMPLES as u64)
        .into_par_iter()
        .map_init(
            || (Vec::new(), Vec::new(), vec![false; w.edge_count()], ClusterProbe::new(w.vertex_count())),
            |(active, kept, open, probe), i| {
                sampler.activations(SeedRecord::new(seed, i), active);
                let mut out = [(0, false); 3];
                for (slot, &cut) in out.iter_mut().zip(&cutoffs) {
                    kept.clear();
                    kept.extend(active.iter().zip(&atoms).map(|(&a, atom)| a && atom.measure >= cut));
                    sampler.apply(kept, open);
                    let size = probe.explore(&w, open, base) as u64;
                    *slot = (size, probe.max_level() < FOLNER_RADIUS);
                }
                out
            },
        )
        .collect())
}

pub fn folner_demo() -> Result<CriterionReport, CliError> {
    let mut c = CriterionReport::new(11, "Følner demo");
    let samples = folner_samples(SEEDS[11])?;
    let p99: Vec<u64> = (0..3)
        .map(|k| percentile(&samples.iter().map(|s| s[k].0).collect::<Vec<_>>(), FOLNER_QUANTILE))
        .collect();
    c.push(
        "99th percentile of o-cluster size non-increasing",
        p99.windows(2).all(|w| w[1] <= w[0]),
        format!("N_max {:?} → {:?}", FOLNER_NMAX, p99),
    );
    let conf: Vec<f64> = (0..3)
        .map(|k| samples.iter().filter(|s| s[k].1).count() as f64 / samples.len() as f64)
        .collect();
    let paired = |a: usize, b: usize| mean_se(samples.iter().map(|s| s[b].1 as u8 as f64 - s[a].1 as u8 as f64));
    let steps: Vec<(f64, f64)> = vec![paired(0, 1), paired(1, 2)];
    let (gain, gain_se) = paired(0, 2);
    let step_text: Vec<String> = steps.iter().map(|(d, se)| format!("{d:+.5} ± {se:.5}")).collect();
    c.push(
        "confinement probability increases with N_max",
        steps.iter().all(|&(d, _)| d >= 0.0) && gain > SE_SLACK * gain_se,
        format!(
            "P(confined) {:?}; steps {}; {}→{} gain {gain:.5} vs 3 SE {:.5}",
            conf.iter().map(|x| format!("{x:.4}")).collect::<Vec<_>>(),
            step_text.join(", "),
            FOLNER_NMAX[0],
            FOLNER_NMAX[2],
            SE_SLACK * gain_se
        ),
    );
    Ok(c)
}

pub fn threshold_arithmetic() -> Result<CriterionReport, CliError> {
    let mut c = CriterionReport::new(12, "threshold arithmetic");
    let weak = weak_kazhdan_threshold(1.0, 1.0, 4)?;
    let strong = kazhdan_threshold(1.0, 1.0, 4)?;
    c.push("1 - ε/(deg·d_K) = 3/4", weak == 0.75, format!("{weak}"));
    c.push("1 - ε²/(4·deg·d_K) = 15/16", strong == 15.0 / 16.0, format!("{strong}"));
    let a = alpha_p(0.5, 2.0, WallRule::Bernoulli);
    c.push("α_p Bernoulli p=1/2, w=2 is 1/4", a == 0.25, format!("{a}"));
    Ok(c)
}

/// Every subcommand body run twice with the same seed.
pub fn determinism() -> Result<CriterionReport, CliError> {
    let mut c = CriterionReport::new(13, "determinism");
    let n = DETERMINISM_SAMPLES;
    let seed = SEEDS[13];
    let sims = [
        format!("family = \"free:r=2\"\nradius = 5\nsamples = {n}\nseed = {seed}\nclusters = true"),
        format!("family = \"lamplighter:m=2,r=2\"\nradius = 3\nsamples = {n}\nseed = {seed}\nbeta = 0.4\ngamma = 0.05\nrho = \"linear:1,-1\"\nepsilon = 1"),
        format!("family = \"lattice:d=1\"\nwalls = \"folner:nmax=6\"\nradius = 10\nsamples = {n}\nseed = {seed}"),
        format!("family = \"tiling:p=4,q=5,depth=3\"\np = 0.9\nsamples = {n}\nseed = {seed}\nclusters = true"),
    ];
    for toml in &sims {
        let a = commands::simulate(config(toml)?)?;
        let b = commands::simulate(config(toml)?)?;
        let first = toml.lines().next().unwrap_or_default();
        c.push(
            format!("simulate {first}"),
            a.files == b.files,
            format!("{} files", a.files.len()),
        );
    }
    let kc = || -> Result<String, CliError> {
        Ok(json_text(&commands::kernel_check(
            config(&format!("radius = 2\nsamples = {n}\nseed = {seed}"))?,
            PsiKind::Tau,
            None,
            &DEFAULT_T_GRID,
        )?))
    };
    c.push("kernel-check tau", kc()? == kc()?, "summary JSON compared");
    let md = || -> Result<String, CliError> {
        Ok(json_text(&commands::md_decompose(
            config(&format!("radius = 2\nsamples = {n}\nseed = {seed}"))?,
            1,
        )?))
    };
    c.push("md-decompose", md()? == md()?, "report JSON compared");
    Ok(c)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suites_cover_criteria_once() {
        let mut ids: Vec<u32> = SUITES.iter().flat_map(|s| suite_criteria(s).unwrap().iter().copied()).collect();
        ids.sort_unstable();
        assert_eq!(ids, (1..=12).collect::<Vec<_>>());
        assert!(suite_criteria("nope").is_err());
    }

    #[test]
    fn thresholds_pass() {
        assert!(threshold_arithmetic().unwrap().pass());
    }

    #[test]
    fn headline_format() {
        let mut c = CriterionReport::new(3, "demo");
        c.push("x", true, "");
        assert_eq!(c.headline(), "PASS criterion  3 demo (1 checks, 0 failed)");
        c.push("y", false, "");
        assert!(!c.pass());
    }
}
