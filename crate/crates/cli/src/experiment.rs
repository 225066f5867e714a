//! Builds the window and sampler of a config and runs the Monte Carlo pass
//! behind `simulate` and `tiling-percolate`.

use serde::Serialize;
use serde_json::{json, Value};
use wallperc::clusters::{ClusterProbe, ComponentLabeling, UnionFind};
use wallperc::estimators::{
    alpha_p, check_sandwich, fit_exponential_decay, fold_samples, kazhdan_threshold, weak_kazhdan_threshold,
    DecayFit, DegreeEstimate, SandwichReport, TwoPointRow, TwoPointTable, SE_SLACK,
};
use wallperc::groups::{ball, CayleyWindow, Family, FreeWord, GroupElement, LampState, DEFAULT_BUDGET};
use wallperc::hyperbolic::{tiling_graph, HyperplaneSampler, TilingWindow};
use wallperc::percolation::{analytic_marginal, BernoulliBond, BondSampler, WallSampler};
use wallperc::walls::WallAtom;

use crate::config::{ExperimentConfig, SamplerKind, Targets};
use crate::stats::clopper_pearson_lower;
use crate::{CliError, ARTIFACT_VERSION};

/// Confidence level of the reported lower bound on the multi-component
/// frequency.
pub const MULTI_CONFIDENCE: f64 = 0.99;

enum World {
    Cayley { window: CayleyWindow, atoms: Vec<WallAtom> },
    Tiling(TilingWindow),
}

pub struct Experiment {
    pub config: ExperimentConfig,
    world: World,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EdgeMarginal {
    pub edge: usize,
    pub open: u64,
    pub expected: f64,
    /// Binomial standard error under the expected marginal.
    pub stderr: f64,
}

impl EdgeMarginal {
    pub fn estimate(&self, n: u64) -> f64 {
        self.open as f64 / n as f64
    }

    pub fn within(&self, n: u64, slack: f64) -> bool {
        (self.estimate(n) - self.expected).abs() <= slack * self.stderr + 1e-12
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClusterRow {
    pub sample: u64,
    pub boundary_components: usize,
    pub sizes: Vec<u32>,
}

pub struct Report {
    pub table: TwoPointTable,
    pub degree: DegreeEstimate,
    pub edges: Vec<EdgeMarginal>,
    pub fit: Result<DecayFit, String>,
    pub sandwich: Option<SandwichReport>,
    /// Per-sample boundary statistics; empty unless clusters were requested.
    pub clusters: Vec<ClusterRow>,
}

impl Report {
    /// Samples with at least two boundary components of the minimum size.
    pub fn multi_component_samples(&self) -> u64 {
        self.clusters.iter().filter(|r| r.boundary_components >= 2).count() as u64
    }

    pub fn edges_outside(&self, slack: f64) -> usize {
        let n = self.table.samples;
        self.edges.iter().filter(|e| !e.within(n, slack)).count()
    }
}

struct Tally {
    targets: Vec<u64>,
    edges: Vec<u64>,
    deg_sum: u64,
    deg_sq: u64,
    clusters: Vec<ClusterRow>,
    probe: ClusterProbe,
    uf: Option<UnionFind>,
}

impl Experiment {
    pub fn build(config: ExperimentConfig) -> Result<Self, CliError> {
        let world = match (config.sampler, config.tiling) {
            (SamplerKind::Hyperplane, Some(spec)) => World::Tiling(tiling_graph(spec.p, spec.q, spec.depth)?),
            (SamplerKind::Walls(ws), None) => {
                let window = ball(config.family, config.radius, DEFAULT_BUDGET)?;
                let atoms = ws.enumerate_window_walls(&window)?;
                World::Cayley { window, atoms }
            }
            (SamplerKind::Bond, None) => World::Cayley {
                window: ball(config.family, config.radius, DEFAULT_BUDGET)?,
                atoms: Vec::new(),
            },
            _ => return Err(CliError::config("sampler does not match the family")),
        };
        Ok(Self { config, world })
    }

    pub fn window(&self) -> &CayleyWindow {
        match &self.world {
            World::Cayley { window, .. } => window,
            World::Tiling(t) => &t.window,
        }
    }

    pub fn tiling(&self) -> Option<&TilingWindow> {
        match &self.world {
            World::Tiling(t) => Some(t),
            World::Cayley { .. } => None,
        }
    }

    pub fn with_sampler<R>(&self, f: impl FnOnce(&dyn BondSampler) -> R) -> Result<R, CliError> {
        let c = &self.config;
        Ok(match (&self.world, c.sampler) {
            (World::Tiling(t), _) => f(&HyperplaneSampler::new(t, c.p)?),
            (World::Cayley { window, .. }, SamplerKind::Bond) => f(&BernoulliBond::new(window, c.p)?),
            (World::Cayley { window, atoms }, _) => f(&WallSampler::new(window, atoms, c.p, c.rule)?),
        })
    }

    pub fn targets(&self) -> Result<Vec<usize>, CliError> {
        let w = self.window();
        match &self.config.targets {
            Targets::Spheres => Ok(w.sphere_representatives()),
            Targets::List(items) => items
                .iter()
                .map(|s| Ok(w.require_index(&parse_element(w.family(), s)?)?))
                .collect(),
        }
    }

    /// Exact marginal of every window edge.
    pub fn expected_marginals(&self) -> Result<Vec<f64>, CliError> {
        let c = &self.config;
        let w = self.window();
        match (&self.world, c.sampler) {
            (World::Tiling(t), _) => Ok(t.edge_lengths().iter().map(|l| (-(1.0 - c.p) * l).exp()).collect()),
            (_, SamplerKind::Bond) => Ok(vec![c.p; w.edge_count()]),
            (_, SamplerKind::Walls(ws)) => w
                .edges()
                .iter()
                .map(|e| Ok(analytic_marginal(&ws, w.vertex(e.a as usize), w.vertex(e.b as usize), c.p, c.rule)?))
                .collect(),
            (_, SamplerKind::Hyperplane) => unreachable!("hyperplane samplers live on tilings"),
        }
    }

    /// Lower bound on every edge marginal.
    pub fn alpha(&self) -> Result<f64, CliError> {
        let c = &self.config;
        Ok(match (&self.world, c.sampler) {
            (World::Tiling(t), _) => (-(1.0 - c.p) * t.edge_lengths().into_iter().fold(0.0, f64::max)).exp(),
            (_, SamplerKind::Bond) => c.p,
            (_, SamplerKind::Walls(ws)) => alpha_p(c.p, ws.max_edge_measure(&c.family)?, c.rule),
            (_, SamplerKind::Hyperplane) => unreachable!("hyperplane samplers live on tilings"),
        })
    }

    pub fn run(&self) -> Result<Report, CliError> {
        let c = &self.config;
        let w = self.window();
        let targets = self.targets()?;
        let expected = self.expected_marginals()?;
        let base_edges = w.base_edges();
        let base = w.base();
        let (n_v, n_e) = (w.vertex_count(), w.edge_count());
        let tally = self.with_sampler(|sampler| {
            fold_samples(
                sampler,
                c.samples,
                c.seed,
                || Tally {
                    targets: vec![0; targets.len()],
                    edges: vec![0; n_e],
                    deg_sum: 0,
                    deg_sq: 0,
                    clusters: Vec::new(),
                    probe: ClusterProbe::new(n_v),
                    uf: c.clusters.then(|| UnionFind::new(n_v)),
                },
                |t, open, seed| {
                    t.probe.explore(w, open, base);
                    for (count, &v) in t.targets.iter_mut().zip(&targets) {
                        *count += t.probe.contains(v) as u64;
                    }
                    for (count, &o) in t.edges.iter_mut().zip(open) {
                        *count += o as u64;
                    }
                    let d = base_edges.iter().filter(|&&e| open[e]).count() as u64;
                    t.deg_sum += d;
                    t.deg_sq += d * d;
                    if let Some(uf) = t.uf.as_mut() {
                        uf.reset();
                        uf.absorb(w, open);
                        let labels = ComponentLabeling::from_union_find(w, uf);
                        let (count, sizes) = labels.boundary_component_stats(c.min_size);
                        t.clusters.push(ClusterRow {
                            sample: seed.index,
                            boundary_components: count,
                            sizes,
                        });
                    }
                },
                |mut a, b| {
                    a.targets.iter_mut().zip(&b.targets).for_each(|(x, y)| *x += y);
                    a.edges.iter_mut().zip(&b.edges).for_each(|(x, y)| *x += y);
                    a.deg_sum += b.deg_sum;
                    a.deg_sq += b.deg_sq;
                    a.clusters.extend(b.clusters);
                    a
                },
            )
        })?;
        let n = c.samples;
        let nf = n as f64;
        let rows = targets
            .iter()
            .zip(&tally.targets)
            .map(|(&v, &s)| TwoPointRow::from_counts(w.vertex(v).to_string(), Some(v), w.level(v), s, n))
            .collect();
        let table = TwoPointTable {
            rows,
            sampler: self.with_sampler(|s| s.describe())?,
            seed: c.seed,
            samples: n,
        };
        let mean = tally.deg_sum as f64 / nf;
        let var = if n > 1 {
            ((tally.deg_sq as f64 - nf * mean * mean) / (nf - 1.0)).max(0.0)
        } else {
            0.0
        };
        let degree = DegreeEstimate {
            mean,
            stderr: (var / nf).sqrt(),
            samples: n,
        };
        let edges = tally
            .edges
            .iter()
            .zip(&expected)
            .enumerate()
            .map(|(edge, (&open, &m))| EdgeMarginal {
                edge,
                open,
                expected: m,
                stderr: (m * (1.0 - m) / nf).sqrt(),
            })
            .collect();
        let fit = fit_exponential_decay(&table).map_err(|e| e.to_string());
        let sandwich = match c.sandwich {
            Some(s) => Some(check_sandwich(&table, s.beta, s.gamma, s.rho)?),
            None => None,
        };
        let mut clusters = tally.clusters;
        clusters.sort_by_key(|r| r.sample);
        Ok(Report {
            table,
            degree,
            edges,
            fit,
            sandwich,
            clusters,
        })
    }

    pub fn summary(&self, report: &Report) -> Result<Value, CliError> {
        let c = &self.config;
        let w = self.window();
        let n = report.table.samples;
        let alpha = self.alpha()?;
        let degree = w.degree();
        let max_z = report
            .edges
            .iter()
            .filter(|e| e.stderr > 0.0)
            .map(|e| (e.estimate(n) - e.expected).abs() / e.stderr)
            .fold(0.0, f64::max);
        let outside = report.edges_outside(SE_SLACK);
        let thresholds = match c.thresholds {
            Some(t) => json!({
                "epsilon": t.epsilon,
                "d_k": t.d_k,
                "degree": degree,
                "weak_kazhdan": weak_kazhdan_threshold(t.epsilon, t.d_k, degree)?,
                "kazhdan": kazhdan_threshold(t.epsilon, t.d_k, degree)?,
            }),
            None => Value::Null,
        };
        let clusters = if c.clusters {
            let k = report.multi_component_samples();
            json!({
                "min_size": c.min_size,
                "multi_component_samples": k,
                "frequency": k as f64 / n as f64,
                "lower_bound": clopper_pearson_lower(k, n, MULTI_CONFIDENCE),
                "confidence": MULTI_CONFIDENCE,
            })
        } else {
            Value::Null
        };
        Ok(json!({
            "version": ARTIFACT_VERSION,
            "config": c.echo(),
            "config_hash": c.hash(),
            "seed": c.seed,
            "conventions": {
                "lambda": 1.0,
                "nmax": c.nmax(),
            },
            "sampler": report.table.sampler,
            "samples": n,
            "window": {
                "radius": w.radius(),
                "vertices": w.vertex_count(),
                "edges": w.edge_count(),
                "degree": degree,
            },
            "expected_degree": {
                "mean": report.degree.mean,
                "stderr": report.degree.stderr,
                "alpha_p": alpha,
                "lower_bound": alpha * degree as f64,
                "bound_holds": report.degree.mean >= alpha * degree as f64 - SE_SLACK * report.degree.stderr,
            },
            "edge_marginals": {
                "edges": report.edges.len(),
                "outside_3se": outside,
                "max_abs_z": max_z,
            },
            "decay_fit": match &report.fit {
                Ok(fit) => json!({
                    "rate": fit.rate,
                    "intercept": fit.intercept,
                    "r_squared": fit.r_squared,
                    "rate_stderr": fit.rate_stderr,
                    "ci_half_width": fit.ci_half_width(),
                }),
                Err(msg) => json!({"error": msg}),
            },
            "sandwich": match &report.sandwich {
                Some(s) => json!({
                    "beta": s.beta,
                    "gamma": s.gamma,
                    "rho": s.rho.to_string(),
                    "pass": s.pass,
                    "failed_targets": s.rows.iter().filter(|r| !(r.lower_ok && r.upper_ok)).map(|r| r.target_id.clone()).collect::<Vec<_>>(),
                }),
                None => Value::Null,
            },
            "thresholds": thresholds,
            "clusters": clusters,
        }))
    }
}

/// Parses a group element. Free words use `a`/`A` letters; lattice points
/// are comma- or space-separated coordinates; lamplighter elements are
/// generator words where `t`/`T` switch the lamp at the marker and other
/// letters move it; tiling vertices are `#id`.
pub fn parse_element(family: Family, s: &str) -> Result<GroupElement, CliError> {
    let s = s.trim();
    match family {
        Family::Free { .. } => {
            let g = GroupElement::Free(s.parse()?);
            family
                .contains(&g)
                .then_some(g)
                .ok_or_else(|| CliError::config(format!("`{s}` is not in {family}")))
        }
        Family::Lattice { dim } => {
            let coords: Vec<i64> = s
                .trim_matches(|c| c == '(' || c == ')')
                .split(|c: char| c == ',' || c.is_whitespace())
                .filter(|p| !p.is_empty())
                .map(|p| p.parse().map_err(|_| CliError::config(format!("bad lattice coordinate `{p}`"))))
                .collect::<Result<_, _>>()?;
            if coords.len() != dim as usize {
                return Err(CliError::config(format!("`{s}` needs {dim} coordinates")));
            }
            Ok(GroupElement::Lattice(coords))
        }
        Family::Lamplighter { modulus, .. } => {
            let mut g = family.identity();
            if s == "e" {
                return Ok(g);
            }
            for ch in s.chars() {
                let step = match ch {
                    't' => LampState::new([(FreeWord::identity(), 1)], FreeWord::identity(), modulus),
                    'T' => LampState::new([(FreeWord::identity(), modulus - 1)], FreeWord::identity(), modulus),
                    _ => LampState::new([], ch.to_string().parse()?, modulus),
                };
                g = family.mul(&g, &GroupElement::Lamp(step))?;
            }
            Ok(g)
        }
        Family::Tiling { .. } => {
            let id = s
                .trim_start_matches('#')
                .parse()
                .map_err(|_| CliError::config(format!("tiling vertices are written `#id`, got `{s}`")))?;
            Ok(GroupElement::Tiling(id))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::ConfigArgs;

    fn experiment(toml: &str) -> Experiment {
        let args = ConfigArgs::from_toml(toml).unwrap();
        Experiment::build(ExperimentConfig::resolve(&args).unwrap()).unwrap()
    }

    #[test]
    fn parses_elements() {
        let lamp = Family::Lamplighter { modulus: 2, rank: 2 };
        let g = parse_element(lamp, "tat").unwrap();
        assert_eq!(g.to_string(), "[e:1 a:1]@a");
        assert_eq!(lamp.word_length(&g).unwrap(), 3);
        assert_eq!(parse_element(lamp, "e").unwrap(), lamp.identity());
        assert_eq!(
            parse_element(Family::Lattice { dim: 2 }, "(1 -2)").unwrap(),
            GroupElement::Lattice(vec![1, -2])
        );
        assert!(parse_element(Family::Lattice { dim: 2 }, "1").is_err());
        assert!(parse_element(Family::Free { rank: 2 }, "ac").is_err());
        assert_eq!(parse_element(Family::Tiling { p: 4, q: 5 }, "#3").unwrap(), GroupElement::Tiling(3));
    }

    #[test]
    fn explicit_targets_resolve_in_the_window() {
        let e = experiment("radius = 2\ntargets = [\"aB\", \"e\"]");
        let t = e.targets().unwrap();
        assert_eq!(e.window().level(t[0]), 2);
        assert_eq!(t[1], e.window().base());
        let far = experiment("radius = 1\ntargets = [\"aaa\"]");
        assert!(far.targets().is_err());
    }

    #[test]
    fn small_run_is_consistent() {
        let e = experiment("radius = 3\nsamples = 2000\np = 0.6\nclusters = true\nmin_size = 1");
        let r = e.run().unwrap();
        assert_eq!(r.table.rows.len(), 4);
        assert_eq!(r.table.rows[0].tau_hat, 1.0);
        assert_eq!(r.clusters.len(), 2000);
        assert!(r.clusters.windows(2).all(|w| w[0].sample < w[1].sample));
        let s = e.summary(&r).unwrap();
        assert_eq!(s["conventions"]["lambda"], 1.0);
        assert_eq!(s["window"]["degree"], 4);
        assert!(s["expected_degree"]["bound_holds"].as_bool().unwrap());
    }
}
