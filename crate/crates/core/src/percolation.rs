//! Bond percolation samplers: wall rules (Poisson and Bernoulli), iid
//! Bernoulli bonds, and the bond-to-site transform.

use std::fmt;
use std::str::FromStr;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::clusters::components;
use crate::error::{Error, Result};
use crate::groups::{CayleyWindow, GroupElement};
use crate::walls::{WallAtom, WallStructure};

/// Provenance of one sample: the run's master seed and the sample index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SeedRecord {
    pub master: u64,
    pub index: u64,
}

impl SeedRecord {
    pub fn new(master: u64, index: u64) -> Self {
        Self { master, index }
    }

    /// Independent stream per `(master, index)`; samples can be drawn in any
    /// order.
    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master);
        rng.set_stream(self.index);
        rng
    }
}

/// Anything that fills an open-flag vector for a window, given a seed.
pub trait BondSampler: Sync {
    fn edge_count(&self) -> usize;

    fn sample_into(&self, seed: SeedRecord, open: &mut [bool]);

    fn describe(&self) -> String;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WallRule {
    Poisson,
    Bernoulli,
}

impl fmt::Display for WallRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            WallRule::Poisson => "poisson",
            WallRule::Bernoulli => "bernoulli",
        })
    }
}

impl FromStr for WallRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "poisson" => Ok(WallRule::Poisson),
            "bernoulli" => Ok(WallRule::Bernoulli),
            other => Err(Error::InvalidParameter(format!("unknown rule `{other}`"))),
        }
    }
}

/// `u64` threshold for an event of probability `prob`; `u64::MAX` means
/// "always".
pub(crate) fn threshold(prob: f64) -> u64 {
    if prob >= 1.0 {
        u64::MAX
    } else if prob <= 0.0 {
        0
    } else {
        (prob * 18_446_744_073_709_551_616.0) as u64
    }
}

#[inline]
pub(crate) fn hit(u: u64, t: u64) -> bool {
    t == u64::MAX || u < t
}

/// Probability that a wall atom of the given measure is active (closes its
/// edges).
pub fn activation_probability(rule: WallRule, p: f64, measure: f64) -> f64 {
    match rule {
        WallRule::Poisson => -(-(1.0 - p) * measure).exp_m1(),
        WallRule::Bernoulli => 1.0 - p,
    }
}

fn check_p(rule: WallRule, p: f64) -> Result<()> {
    let ok = match rule {
        WallRule::Poisson => p > 0.0 && p < 1.0,
        WallRule::Bernoulli => p > 0.0 && p <= 1.0,
    };
    if ok {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("p = {p} out of range for the {rule} rule")))
    }
}

/// Wall-rule sampler.
///
/// Each atom is independently active: with probability `1 − exp(−(1−p)·μ)`
/// for the Poisson rule (the Poisson count is positive), with probability
/// `1 − p` for the Bernoulli rule (`Z_W = 0`). An edge is open iff no active
/// atom cuts it.
#[derive(Debug, Clone)]
pub struct WallSampler {
    rule: WallRule,
    p: f64,
    thresholds: Vec<u64>,
    cut_offsets: Vec<u32>,
    cut_edges: Vec<u32>,
    edge_count: usize,
}

impl WallSampler {
    pub fn new(window: &CayleyWindow, atoms: &[WallAtom], p: f64, rule: WallRule) -> Result<Self> {
        check_p(rule, p)?;
        if rule == WallRule::Bernoulli {
            if let Some(a) = atoms.iter().find(|a| a.measure != 1.0) {
                return Err(Error::InvalidParameter(format!(
                    "Bernoulli wall rule needs unit atom measures, atom {} has {}",
                    a.id, a.measure
                )));
            }
        }
        let mut cut_offsets = Vec::with_capacity(atoms.len() + 1);
        let mut cut_edges = Vec::new();
        cut_offsets.push(0);
        for a in atoms {
            if let Some(&e) = a.cut_edges.iter().find(|&&e| e as usize >= window.edge_count()) {
                return Err(Error::OutOfWindow(format!("atom {} cuts edge {e}", a.id)));
            }
            cut_edges.extend_from_slice(&a.cut_edges);
            cut_offsets.push(cut_edges.len() as u32);
        }
        Ok(Self {
            rule,
            p,
            thresholds: atoms
                .iter()
                .map(|a| threshold(activation_probability(rule, p, a.measure)))
                .collect(),
            cut_offsets,
            cut_edges,
            edge_count: window.edge_count(),
        })
    }

    pub fn poisson(window: &CayleyWindow, atoms: &[WallAtom], p: f64) -> Result<Self> {
        Self::new(window, atoms, p, WallRule::Poisson)
    }

    pub fn bernoulli(window: &CayleyWindow, atoms: &[WallAtom], p: f64) -> Result<Self> {
        Self::new(window, atoms, p, WallRule::Bernoulli)
    }

    pub fn rule(&self) -> WallRule {
        self.rule
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn atom_count(&self) -> usize {
        self.thresholds.len()
    }

    /// Fills `active` with the per-atom activation flags for `seed`.
    pub fn activations(&self, seed: SeedRecord, active: &mut Vec<bool>) {
        let mut rng = seed.rng();
        active.clear();
        active.extend(self.thresholds.iter().map(|&t| hit(rng.next_u64(), t)));
    }

    /// Open flags given atom activations.
    pub fn apply(&self, active: &[bool], open: &mut [bool]) {
        open.fill(true);
        for (i, _) in active.iter().enumerate().filter(|(_, &a)| a) {
            let (lo, hi) = (self.cut_offsets[i] as usize, self.cut_offsets[i + 1] as usize);
            for &e in &self.cut_edges[lo..hi] {
                open[e as usize] = false;
            }
        }
    }
}

impl BondSampler for WallSampler {
    fn edge_count(&self) -> usize {
        self.edge_count
    }

    fn sample_into(&self, seed: SeedRecord, open: &mut [bool]) {
        let mut rng = seed.rng();
        open.fill(true);
        for (i, &t) in self.thresholds.iter().enumerate() {
            if hit(rng.next_u64(), t) {
                let (lo, hi) = (self.cut_offsets[i] as usize, self.cut_offsets[i + 1] as usize);
                for &e in &self.cut_edges[lo..hi] {
                    open[e as usize] = false;
                }
            }
        }
    }

    fn describe(&self) -> String {
        format!("{}-wall p={}", self.rule, self.p)
    }
}

/// Independent Bernoulli(p) bonds. Edge `e` is open iff its uniform draw
/// falls below `p`, with draws taken in edge order, so runs with the same
/// seed are monotonically coupled in `p`.
#[derive(Debug, Clone)]
pub struct BernoulliBond {
    p: f64,
    threshold: u64,
    edge_count: usize,
}

impl BernoulliBond {
    pub fn new(window: &CayleyWindow, p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidParameter(format!("bond probability {p} outside [0, 1]")));
        }
        Ok(Self {
            p,
            threshold: threshold(p),
            edge_count: window.edge_count(),
        })
    }
}

impl BondSampler for BernoulliBond {
    fn edge_count(&self) -> usize {
        self.edge_count
    }

    fn sample_into(&self, seed: SeedRecord, open: &mut [bool]) {
        let mut rng = seed.rng();
        for flag in open.iter_mut() {
            *flag = hit(rng.next_u64(), self.threshold);
        }
    }

    fn describe(&self) -> String {
        format!("bernoulli-bond p={}", self.p)
    }
}

/// A bond configuration on a window with its seed provenance.
#[derive(Debug, Clone)]
pub struct Configuration<'w> {
    pub window: &'w CayleyWindow,
    pub open: Vec<bool>,
    pub seed: Option<SeedRecord>,
}

impl<'w> Configuration<'w> {
    pub fn new(window: &'w CayleyWindow, open: Vec<bool>) -> Result<Self> {
        if open.len() != window.edge_count() {
            return Err(Error::InvalidParameter(format!(
                "{} flags for {} edges",
                open.len(),
                window.edge_count()
            )));
        }
        Ok(Self { window, open, seed: None })
    }

    pub fn full(window: &'w CayleyWindow) -> Self {
        Self {
            window,
            open: vec![true; window.edge_count()],
            seed: None,
        }
    }

    pub fn empty(window: &'w CayleyWindow) -> Self {
        Self {
            window,
            open: vec![false; window.edge_count()],
            seed: None,
        }
    }

    pub fn sample(window: &'w CayleyWindow, sampler: &dyn BondSampler, seed: SeedRecord) -> Result<Self> {
        if sampler.edge_count() != window.edge_count() {
            return Err(Error::InvalidParameter("sampler was built for a different window".into()));
        }
        let mut open = vec![false; window.edge_count()];
        sampler.sample_into(seed, &mut open);
        Ok(Self {
            window,
            open,
            seed: Some(seed),
        })
    }

    pub fn open_count(&self) -> usize {
        self.open.iter().filter(|&&o| o).count()
    }

    /// Open edges at the base vertex.
    pub fn base_degree(&self) -> usize {
        self.window
            .neighbors(self.window.base())
            .iter()
            .filter(|&&(_, e)| self.open[e as usize])
            .count()
    }
}

pub fn sample_poisson_wall<'w>(
    window: &'w CayleyWindow,
    atoms: &[WallAtom],
    p: f64,
    seed: SeedRecord,
) -> Result<Configuration<'w>> {
    Configuration::sample(window, &WallSampler::poisson(window, atoms, p)?, seed)
}

pub fn sample_bernoulli_wall<'w>(
    window: &'w CayleyWindow,
    atoms: &[WallAtom],
    p: f64,
    seed: SeedRecord,
) -> Result<Configuration<'w>> {
    Configuration::sample(window, &WallSampler::bernoulli(window, atoms, p)?, seed)
}

pub fn sample_bernoulli_bond(window: &CayleyWindow, p: f64, seed: SeedRecord) -> Result<Configuration<'_>> {
    Configuration::sample(window, &BernoulliBond::new(window, p)?, seed)
}

/// Site configuration obtained by deleting every vertex on the outer vertex
/// boundary of some cluster.
#[derive(Debug, Clone, PartialEq)]
pub struct SiteConfiguration {
    pub kept: Vec<bool>,
    /// Edges of the original configuration with both endpoints kept.
    pub open_edges: Vec<bool>,
}

/// A vertex survives iff every window neighbour lies in its own cluster.
/// Boundaries are taken inside the window.
pub fn site_transform(c: &Configuration<'_>) -> SiteConfiguration {
    let w = c.window;
    let labels = components(w, &c.open);
    let kept: Vec<bool> = (0..w.vertex_count())
        .map(|v| {
            let l = labels.label(v);
            w.neighbors(v).iter().all(|&(u, _)| labels.label(u as usize) == l)
        })
        .collect();
    let open_edges = w
        .edges()
        .iter()
        .zip(&c.open)
        .map(|(e, &o)| o && kept[e.a as usize] && kept[e.b as usize])
        .collect();
    SiteConfiguration { kept, open_edges }
}

/// Exact open probability of the edge `[g, h]` under a wall rule:
/// `exp(−(1−p)·w(g,h))` (Poisson) or `p^{w(g,h)}` (Bernoulli).
pub fn analytic_marginal(s: &WallStructure, g: &GroupElement, h: &GroupElement, p: f64, rule: WallRule) -> Result<f64> {
    let w = s.wall_measure(g, h)?;
    Ok(match rule {
        WallRule::Poisson => (-(1.0 - p) * w).exp(),
        WallRule::Bernoulli => p.powf(w),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clusters::components;
    use crate::groups::{ball, Family, DEFAULT_BUDGET};

    fn tree_window(r: u32) -> (CayleyWindow, Vec<WallAtom>) {
        let w = ball(Family::Free { rank: 2 }, r, DEFAULT_BUDGET).unwrap();
        let atoms = WallStructure::Tree.enumerate_window_walls(&w).unwrap();
        (w, atoms)
    }

    #[test]
    fn bond_extremes() {
        let (w, _) = tree_window(2);
        let empty = sample_bernoulli_bond(&w, 0.0, SeedRecord::new(1, 0)).unwrap();
        assert_eq!(empty.open_count(), 0);
        let full = sample_bernoulli_bond(&w, 1.0, SeedRecord::new(1, 0)).unwrap();
        assert_eq!(full.open_count(), w.edge_count());
    }

    #[test]
    fn bernoulli_wall_p_one_is_full() {
        let (w, atoms) = tree_window(2);
        let c = sample_bernoulli_wall(&w, &atoms, 1.0, SeedRecord::new(3, 9)).unwrap();
        assert_eq!(c.open_count(), w.edge_count());
    }

    #[test]
    fn poisson_near_one_is_full() {
        let (w, atoms) = tree_window(3);
        let c = sample_poisson_wall(&w, &atoms, 1.0 - 1e-12, SeedRecord::new(3, 9)).unwrap();
        assert_eq!(c.open_count(), w.edge_count());
    }

    #[test]
    fn p_out_of_range() {
        let (w, atoms) = tree_window(1);
        assert!(sample_poisson_wall(&w, &atoms, 1.0, SeedRecord::new(0, 0)).is_err());
        assert!(sample_poisson_wall(&w, &atoms, 0.0, SeedRecord::new(0, 0)).is_err());
        assert!(sample_bernoulli_wall(&w, &atoms, 1.5, SeedRecord::new(0, 0)).is_err());
        assert!(sample_bernoulli_bond(&w, -0.1, SeedRecord::new(0, 0)).is_err());
    }

    #[test]
    fn bernoulli_rule_rejects_weighted_atoms() {
        let w = ball(Family::Lattice { dim: 1 }, 3, DEFAULT_BUDGET).unwrap();
        let atoms = WallStructure::Folner { nmax: 3 }.enumerate_window_walls(&w).unwrap();
        assert!(WallSampler::bernoulli(&w, &atoms, 0.5).is_err());
        assert!(WallSampler::poisson(&w, &atoms, 0.5).is_ok());
    }

    #[test]
    fn same_seed_same_flags() {
        let (w, atoms) = tree_window(4);
        let s = WallSampler::poisson(&w, &atoms, 0.5).unwrap();
        let a = Configuration::sample(&w, &s, SeedRecord::new(11, 5)).unwrap();
        let b = Configuration::sample(&w, &s, SeedRecord::new(11, 5)).unwrap();
        let c = Configuration::sample(&w, &s, SeedRecord::new(11, 6)).unwrap();
        assert_eq!(a.open, b.open);
        assert_ne!(a.open, c.open);
    }

    #[test]
    fn analytic_marginals() {
        let o = GroupElement::Free(Default::default());
        let a = GroupElement::Free("a".parse().unwrap());
        let m = analytic_marginal(&WallStructure::Tree, &o, &a, 0.9, WallRule::Poisson).unwrap();
        assert!((m - (-0.1f64).exp()).abs() < 1e-15);
        let z0 = GroupElement::Lattice(vec![0, 0]);
        let z1 = GroupElement::Lattice(vec![1, 0]);
        let m = analytic_marginal(&WallStructure::Cubical, &z0, &z1, 0.6, WallRule::Bernoulli).unwrap();
        assert_eq!(m, 0.6);
        let lo = GroupElement::Lamp(Default::default());
        let la = GroupElement::Lamp(crate::groups::LampState::new([], "a".parse().unwrap(), 2));
        let m = analytic_marginal(&WallStructure::Lamplighter, &lo, &la, 0.5, WallRule::Poisson).unwrap();
        assert!((m - (-1.0f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn site_transform_full_keeps_everything() {
        let (w, _) = tree_window(2);
        let s = site_transform(&Configuration::full(&w));
        assert!(s.kept.iter().all(|&k| k));
        assert!(s.open_edges.iter().all(|&k| k));
    }

    #[test]
    fn site_transform_empty_removes_every_non_isolated_vertex() {
        // every singleton cluster puts all of its neighbours on its boundary
        let (w, _) = tree_window(2);
        let s = site_transform(&Configuration::empty(&w));
        assert!(s.kept.iter().all(|&k| !k));
        let single = CayleyWindow::from_graph(Family::Free { rank: 2 }, 0, vec![w.vertex(0).clone()], vec![], 4);
        assert_eq!(site_transform(&Configuration::empty(&single)).kept, vec![true]);
    }

    #[test]
    fn site_connectivity_implies_bond_connectivity() {
        let (w, atoms) = tree_window(4);
        let sampler = WallSampler::poisson(&w, &atoms, 0.8).unwrap();
        for i in 0..50 {
            let c = Configuration::sample(&w, &sampler, SeedRecord::new(2, i)).unwrap();
            let bond = components(&w, &c.open);
            let site = site_transform(&c);
            let site_labels = components(&w, &site.open_edges);
            let all_open_at_o = w.neighbors(0).iter().all(|&(_, e)| c.open[e as usize]);
            if all_open_at_o {
                assert!(site.kept[0]);
            }
            for g in 0..w.vertex_count() {
                if site.kept[0] && site.kept[g] && site_labels.connected(0, g).unwrap() {
                    assert!(bond.connected(0, g).unwrap());
                }
            }
        }
    }
}
