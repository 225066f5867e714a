//! Subcommand bodies. Each returns its artifacts or JSON report; the binary
//! only parses arguments and writes.

use serde_json::{json, Value};
use wallperc::estimators::{estimate_pairwise, fit_exponential_decay_with};
use wallperc::groups::{ball, Family, GroupElement, DEFAULT_BUDGET};
use wallperc::hyperbolic::crofton_report;
use wallperc::kernels::{
    cnd_check, gram_from_fn, gram_from_pairwise, mc_psd_tolerance, measure_definite_decomposition, min_eigenvalue,
    psd_check, schoenberg_check, triangle_audit_pairwise, DETERMINISTIC_TOL,
};
use wallperc::walls::{enumerate_separating_walls_lamplighter, WallStructure};

use crate::config::{ExperimentConfig, SamplerKind};
use crate::experiment::{parse_element, Experiment};
use crate::output::{clusters_csv, json_text, read_two_point_csv, two_point_csv, Artifacts, CLUSTERS_FILE, SUMMARY_FILE, TWO_POINT_FILE};
use crate::CliError;

pub const DEFAULT_T_GRID: [f64; 4] = [0.05, 0.2, 1.0, 5.0];
pub const CND_PROBES: usize = 200;

/// `simulate` and `tiling-percolate`: two_point.csv, summary.json and,
/// on request, clusters.csv.
pub fn simulate(config: ExperimentConfig) -> Result<Artifacts, CliError> {
    let exp = Experiment::build(config)?;
    let report = exp.run()?;
    let mut out = Artifacts::default();
    out.add(TWO_POINT_FILE, two_point_csv(&report.table)?);
    out.add(SUMMARY_FILE, json_text(&exp.summary(&report)?));
    if exp.config.clusters {
        out.add(CLUSTERS_FILE, clusters_csv(&report.clusters)?);
    }
    Ok(out)
}

pub fn decay_fit(csv_text: &str, min_trials: u64) -> Result<Value, CliError> {
    let table = read_two_point_csv(csv_text)?;
    let fit = fit_exponential_decay_with(&table, min_trials)?;
    Ok(json!({
        "rate": fit.rate,
        "intercept": fit.intercept,
        "r_squared": fit.r_squared,
        "rate_stderr": fit.rate_stderr,
        "ci_half_width": fit.ci_half_width(),
        "rows": table.rows.len(),
        "included": fit.included.iter().filter(|&&b| b).count(),
    }))
}

/// Kernel to check: a deterministic `ψ` (word length or wall measure), or
/// the Monte Carlo two-point function of the configured sampler.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PsiKind {
    WordLength,
    Walls,
    Tau,
}

impl std::str::FromStr for PsiKind {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        match s {
            "wordlength" => Ok(PsiKind::WordLength),
            "walls" => Ok(PsiKind::Walls),
            "tau" => Ok(PsiKind::Tau),
            other => Err(CliError::config(format!("unknown psi `{other}` (wordlength, walls, tau)"))),
        }
    }
}

pub fn kernel_check(config: ExperimentConfig, psi: PsiKind, f_radius: Option<u32>, ts: &[f64]) -> Result<Value, CliError> {
    match psi {
        PsiKind::Tau => {
            let f_radius = f_radius.unwrap_or(config.radius);
            let samples = config.samples;
            let seed = config.seed;
            let exp = Experiment::build(config)?;
            let w = exp.window();
            let f = w.ball_indices(f_radius);
            let pairs = exp.with_sampler(|s| estimate_pairwise(w, s, &f, samples, seed))??;
            let gram = gram_from_pairwise(&pairs);
            let tol = mc_psd_tolerance(&pairs);
            let min_eig = min_eigenvalue(&gram)?;
            let psd = psd_check(&gram, tol)?;
            let triangle = triangle_audit_pairwise(&pairs);
            let pass = psd && triangle.violations == 0;
            Ok(json!({
                "psi": "tau",
                "points": f.len(),
                "samples": samples,
                "min_eigenvalue": min_eig,
                "tolerance": tol,
                "psd": psd,
                "triangle": triangle,
                "pass": pass,
            }))
        }
        PsiKind::WordLength | PsiKind::Walls => {
            let family = config.family;
            let w = ball(family, f_radius.unwrap_or(config.radius), DEFAULT_BUDGET)?;
            let f: Vec<usize> = (0..w.vertex_count()).collect();
            let dist = |a: &GroupElement, b: &GroupElement| -> Result<f64, CliError> {
                Ok(match (psi, config.sampler) {
                    (PsiKind::Walls, SamplerKind::Walls(ws)) => ws.wall_measure(a, b)?,
                    (PsiKind::Walls, _) => return Err(CliError::config("psi = walls needs a wall structure")),
                    _ => family.distance(a, b)? as f64,
                })
            };
            let mut values = vec![0.0; f.len() * f.len()];
            for i in 0..f.len() {
                for j in 0..f.len() {
                    values[i * f.len() + j] = dist(w.vertex(i), w.vertex(j))?;
                }
            }
            let psi_k = gram_from_fn(&w, &f, |a, b| values[a * f.len() + b])?;
            let cnd = cnd_check(&psi_k, CND_PROBES, 1e-9, config.seed)?;
            let schoenberg = schoenberg_check(&psi_k, ts, DETERMINISTIC_TOL)?;
            let pass = cnd.pass && schoenberg.pass;
            Ok(json!({
                "psi": if psi == PsiKind::Walls { "walls" } else { "wordlength" },
                "family": family.to_string(),
                "points": f.len(),
                "cnd": cnd,
                "schoenberg": schoenberg.levels.iter().map(|&(t, m)| json!({"t": t, "min_eigenvalue": m})).collect::<Vec<_>>(),
                "schoenberg_pass": schoenberg.pass,
                "tolerance": DETERMINISTIC_TOL,
                "pass": pass,
            }))
        }
    }
}

pub fn md_decompose(config: ExperimentConfig, f_radius: u32) -> Result<Value, CliError> {
    let (samples, seed) = (config.samples, config.seed);
    let exp = Experiment::build(config)?;
    let w = exp.window();
    let f = w.ball_indices(f_radius);
    let rep = exp.with_sampler(|s| measure_definite_decomposition(w, s, &f, samples, seed))??;
    let pass = rep.per_sample_violations == 0 && rep.max_identity_gap < 1e-12 && rep.triangle.violations == 0;
    Ok(json!({
        "points": f.len(),
        "report": rep,
        "pass": pass,
    }))
}

#[derive(Debug, Clone, PartialEq)]
pub struct LampBoundCheck {
    pub checked: usize,
    pub bound_violations: usize,
    /// Vertices whose explicit wall enumeration disagrees with the closed
    /// form.
    pub count_mismatches: usize,
    pub steiner_mismatches: usize,
    pub min_slack: f64,
}

impl LampBoundCheck {
    pub fn pass(&self) -> bool {
        self.bound_violations == 0 && self.count_mismatches == 0 && self.steiner_mismatches == 0
    }
}

/// For every `g` with `|g| ≤ max_len`: the separating wall count against
/// `|g|/4 − 1/4`, and the Steiner word length against BFS distance.
pub fn lamplighter_bound_check(family: Family, max_len: u32) -> Result<LampBoundCheck, CliError> {
    let Family::Lamplighter { .. } = family else {
        return Err(CliError::config(format!("{family} is not a lamplighter family")));
    };
    let w = ball(family, max_len, DEFAULT_BUDGET)?;
    let o = family.identity();
    let GroupElement::Lamp(o_state) = &o else { unreachable!() };
    let mut check = LampBoundCheck {
        checked: 0,
        bound_violations: 0,
        count_mismatches: 0,
        steiner_mismatches: 0,
        min_slack: f64::INFINITY,
    };
    for (i, g) in w.vertices().iter().enumerate() {
        let GroupElement::Lamp(state) = g else { unreachable!() };
        let walls = enumerate_separating_walls_lamplighter(o_state, state).len() as f64;
        let len = family.word_length(g)?;
        let slack = walls - (len as f64 / 4.0 - 0.25);
        check.checked += 1;
        check.min_slack = check.min_slack.min(slack);
        check.bound_violations += (slack < 0.0) as usize;
        check.count_mismatches += (WallStructure::Lamplighter.wall_measure(&o, g)? != walls) as usize;
        check.steiner_mismatches += (len != w.level(i)) as usize;
    }
    Ok(check)
}

pub fn lamplighter_walls(family: Family, max_len: u32, pair: Option<(&str, &str)>) -> Result<Value, CliError> {
    let check = lamplighter_bound_check(family, max_len)?;
    let listing = match pair {
        Some((g, h)) => {
            let (ge, he) = (parse_element(family, g)?, parse_element(family, h)?);
            let (GroupElement::Lamp(gs), GroupElement::Lamp(hs)) = (&ge, &he) else { unreachable!() };
            let walls = enumerate_separating_walls_lamplighter(gs, hs);
            json!({
                "g": ge.to_string(),
                "h": he.to_string(),
                "distance": family.distance(&ge, &he)?,
                "count": walls.len(),
                "walls": walls.iter().map(ToString::to_string).collect::<Vec<_>>(),
            })
        }
        None => Value::Null,
    };
    Ok(json!({
        "family": family.to_string(),
        "max_length": max_len,
        "checked": check.checked,
        "bound_violations": check.bound_violations,
        "count_mismatches": check.count_mismatches,
        "steiner_mismatches": check.steiner_mismatches,
        "min_slack": check.min_slack,
        "pair": listing,
        "pass": check.pass(),
    }))
}

pub fn crofton_calibrate() -> Result<Value, CliError> {
    let rep = crofton_report()?;
    Ok(serde_json::to_value(&rep).expect("report serializes"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::ConfigArgs;

    fn config(toml: &str) -> ExperimentConfig {
        ExperimentConfig::resolve(&ConfigArgs::from_toml(toml).unwrap()).unwrap()
    }

    #[test]
    fn simulate_produces_artifacts() {
        let a = simulate(config("radius = 2\nsamples = 500\nclusters = true")).unwrap();
        assert!(a.get(TWO_POINT_FILE).unwrap().lines().count() == 4);
        assert!(a.get(CLUSTERS_FILE).is_some());
        let s: Value = serde_json::from_str(a.get(SUMMARY_FILE).unwrap()).unwrap();
        assert_eq!(s["seed"], 1);
        assert_eq!(s["config_hash"].as_str().unwrap().len(), 64);
    }

    #[test]
    fn decay_fit_from_csv() {
        let mut csv = String::from("target_id,word_length,successes,trials,tau_hat,stderr\n");
        for l in 0..6 {
            let tau = (-0.5 * l as f64).exp();
            csv.push_str(&format!("g{l},{l},0,0,{tau},0\n"));
        }
        let v = decay_fit(&csv, 0).unwrap();
        assert!((v["rate"].as_f64().unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn word_length_kernel_check() {
        let v = kernel_check(config("radius = 2"), PsiKind::WordLength, None, &DEFAULT_T_GRID).unwrap();
        assert_eq!(v["pass"], true);
        let v = kernel_check(config("family = \"lattice:d=2\"\nradius = 2"), PsiKind::Walls, None, &DEFAULT_T_GRID).unwrap();
        assert_eq!(v["pass"], true);
    }

    #[test]
    fn small_lamplighter_check() {
        let c = lamplighter_bound_check(Family::Lamplighter { modulus: 2, rank: 2 }, 3).unwrap();
        assert!(c.pass(), "{c:?}");
        assert!(lamplighter_bound_check(Family::Free { rank: 2 }, 3).is_err());
        let v = lamplighter_walls(Family::Lamplighter { modulus: 2, rank: 2 }, 2, Some(("e", "tat"))).unwrap();
        assert!(v["pair"]["count"].as_u64().unwrap() >= 1);
    }
}
