//! Discrete wall structures and window-restricted wall enumeration.
//!
//! A wall is a two-class partition of the group; `wall_measure(g, h)` is the
//! mass of walls separating `g` from `h`. Four concrete structures are
//! implemented:
//!
//! * `tree`: edges of the free-group Cayley tree, counting measure.
//! * `cubical`: coordinate hyperplanes `x_i = c + ½` in `Z^d`, counting measure.
//! * `lamplighter`: the sets `E(e, ψ) = {(φ, x) : x ∈ A_e, φ|A_e^c = ψ}` over
//!   oriented tree edges `e` (with `A_e` the component `e` points away from)
//!   and finitely supported `ψ`, counting measure.
//! * `folner`: for `Z`, translates of the intervals `A_n = [0, 4ⁿ)` at scales
//!   `n = 1..=N_max`, each weighted `n / 4ⁿ`.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use crate::descriptor::Descriptor;
use crate::error::{descriptor_error, Error, Result};
use crate::groups::{CayleyWindow, Family, FreeWord, GroupElement, LampState};

pub const DEFAULT_FOLNER_NMAX: u32 = 8;
const MAX_FOLNER_NMAX: u32 = 30;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum WallStructure {
    Tree,
    Cubical,
    Lamplighter,
    Folner { nmax: u32 },
}

impl fmt::Display for WallStructure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WallStructure::Tree => write!(f, "tree"),
            WallStructure::Cubical => write!(f, "cubical"),
            WallStructure::Lamplighter => write!(f, "lamplighter"),
            WallStructure::Folner { nmax } => write!(f, "folner:nmax={nmax}"),
        }
    }
}

impl FromStr for WallStructure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let d = Descriptor::parse(s)?;
        let ws = match d.kind.as_str() {
            "tree" => WallStructure::Tree,
            "cubical" => WallStructure::Cubical,
            "lamplighter" => WallStructure::Lamplighter,
            "folner" => {
                d.only(&["nmax"])?;
                let nmax = d.get("nmax")?.unwrap_or(DEFAULT_FOLNER_NMAX);
                if nmax == 0 || nmax > MAX_FOLNER_NMAX {
                    return Err(descriptor_error(s, format!("nmax must be in 1..={MAX_FOLNER_NMAX}")));
                }
                WallStructure::Folner { nmax }
            }
            other => return Err(descriptor_error(s, format!("unknown wall structure `{other}`"))),
        };
        if !matches!(ws, WallStructure::Folner { .. }) {
            d.only(&[])?;
        }
        Ok(ws)
    }
}

/// One wall restricted to a window: its measure and the window edges whose
/// endpoints it separates.
#[derive(Debug, Clone, PartialEq)]
pub struct WallAtom {
    pub id: u64,
    pub measure: f64,
    pub cut_edges: Vec<u32>,
}

/// An oriented edge of the free-group tree, stored by its endpoint farther
/// from the identity.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct OrientedTreeEdge {
    pub child: FreeWord,
    /// `true` when the edge points from the parent to `child`.
    pub toward_child: bool,
}

impl OrientedTreeEdge {
    pub fn tail(&self) -> FreeWord {
        if self.toward_child {
            self.child.parent().expect("child is never the identity")
        } else {
            self.child.clone()
        }
    }

    pub fn head(&self) -> FreeWord {
        if self.toward_child {
            self.child.clone()
        } else {
            self.child.parent().expect("child is never the identity")
        }
    }

    /// Membership in `A_e`, the component containing the tail.
    pub fn in_a(&self, x: &FreeWord) -> bool {
        x.has_prefix(&self.child) != self.toward_child
    }

    /// `φ` restricted to `A_e^c`, as a sorted support list.
    pub fn restriction(&self, phi: &LampState) -> Vec<(FreeWord, u8)> {
        phi.lamps
            .iter()
            .filter(|(pos, _)| !self.in_a(pos))
            .map(|(pos, &v)| (pos.clone(), v))
            .collect()
    }
}

/// A lamplighter wall `E(e, ψ)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LampWall {
    pub edge: OrientedTreeEdge,
    pub restriction: Vec<(FreeWord, u8)>,
}

impl LampWall {
    pub fn contains(&self, g: &LampState) -> bool {
        self.edge.in_a(&g.marker) && self.edge.restriction(g) == self.restriction
    }
}

impl fmt::Display for LampWall {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}->{} ψ=[", self.edge.tail(), self.edge.head())?;
        for (i, (pos, v)) in self.restriction.iter().enumerate() {
            if i > 0 {
                write!(f, " ")?;
            }
            write!(f, "{pos}:{v}")?;
        }
        write!(f, "]")
    }
}

/// Every wall `E(e, ψ)` containing exactly one of `g`, `h`, without
/// duplicates, sorted.
///
/// Only edges of the Steiner hull of both markers and both supports can
/// separate. For an edge outside the hull all of these points lie on one
/// side. If they all lie in `A_e`, both restrictions to `A_e^c` are zero and
/// both markers are in `A_e`, so membership agrees for every `ψ`. If they
/// all lie in `A_e^c`, neither marker is in `A_e` and neither element
/// belongs to any `E(e, ψ)`. For a hull edge only `ψ ∈ {φ₁|A_e^c, φ₂|A_e^c}`
/// can contain either element.
pub fn enumerate_separating_walls_lamplighter(g: &LampState, h: &LampState) -> Vec<LampWall> {
    let terminals: Vec<&FreeWord> = [&g.marker, &h.marker]
        .into_iter()
        .chain(g.lamps.keys())
        .chain(h.lamps.keys())
        .collect();
    let mut hull: BTreeSet<FreeWord> = BTreeSet::new();
    for t in &terminals {
        let letters = t.letters();
        for k in 1..=letters.len() {
            let v = FreeWord::from_letters(letters[..k].iter().copied());
            if hull.contains(&v) {
                continue;
            }
            if !terminals.iter().all(|s| s.has_prefix(&v)) {
                hull.insert(v);
            }
        }
    }
    let mut out = BTreeSet::new();
    for child in hull {
        for toward_child in [true, false] {
            let edge = OrientedTreeEdge {
                child: child.clone(),
                toward_child,
            };
            let rg = edge.restriction(g);
            let rh = edge.restriction(h);
            let in_g = edge.in_a(&g.marker);
            let in_h = edge.in_a(&h.marker);
            let mut candidates = vec![rg.clone()];
            if rh != rg {
                candidates.push(rh.clone());
            }
            for psi in candidates {
                let mg = in_g && rg == psi;
                let mh = in_h && rh == psi;
                if mg != mh {
                    out.insert(LampWall {
                        edge: edge.clone(),
                        restriction: psi,
                    });
                }
            }
        }
    }
    out.into_iter().collect()
}

fn folner_scale_len(n: u32) -> i64 {
    4i64.pow(n)
}

fn folner_measure(nmax: u32, d: u64) -> f64 {
    (1..=nmax)
        .map(|n| {
            let len = folner_scale_len(n);
            (n as f64 / len as f64) * 2.0 * (d.min(len as u64) as f64)
        })
        .sum()
}

impl WallStructure {
    pub fn compatible(&self, family: &Family) -> bool {
        matches!(
            (self, family),
            (WallStructure::Tree, Family::Free { .. })
                | (WallStructure::Cubical, Family::Lattice { .. })
                | (WallStructure::Lamplighter, Family::Lamplighter { .. })
                | (WallStructure::Folner { .. }, Family::Lattice { dim: 1 })
        )
    }

    fn require(&self, family: &Family) -> Result<()> {
        if self.compatible(family) {
            Ok(())
        } else {
            Err(Error::FamilyMismatch(format!("wall structure {self} does not act on {family}")))
        }
    }

    /// Whether every wall carries unit mass (a space with walls rather than
    /// measured walls).
    pub fn has_unit_measure(&self) -> bool {
        !matches!(self, WallStructure::Folner { .. })
    }

    /// Mass of the walls separating `g` and `h`.
    pub fn wall_measure(&self, g: &GroupElement, h: &GroupElement) -> Result<f64> {
        match (self, g, h) {
            (WallStructure::Tree, GroupElement::Free(a), GroupElement::Free(b)) => Ok(a.distance(b) as f64),
            (WallStructure::Cubical, GroupElement::Lattice(a), GroupElement::Lattice(b)) if a.len() == b.len() => {
                Ok(a.iter().zip(b).map(|(x, y)| x.abs_diff(*y)).sum::<u64>() as f64)
            }
            (WallStructure::Lamplighter, GroupElement::Lamp(a), GroupElement::Lamp(b)) => {
                Ok(enumerate_separating_walls_lamplighter(a, b).len() as f64)
            }
            (WallStructure::Folner { nmax }, GroupElement::Lattice(a), GroupElement::Lattice(b))
                if a.len() == 1 && b.len() == 1 =>
            {
                Ok(folner_measure(*nmax, a[0].abs_diff(b[0])))
            }
            _ => Err(Error::FamilyMismatch(format!(
                "wall structure {self} cannot compare {g} and {h}"
            ))),
        }
    }

    /// `max_{s ~ o} w(o, s)` over the canonical generators.
    pub fn max_edge_measure(&self, family: &Family) -> Result<f64> {
        self.require(family)?;
        let o = family.identity();
        let mut best: f64 = 0.0;
        for s in family.generators()? {
            best = best.max(self.wall_measure(&o, &s)?);
        }
        Ok(best)
    }

    /// All walls cutting at least one window edge, each exactly once, with
    /// its full set of cut window edges. Atom ids follow first discovery in
    /// edge order.
    pub fn enumerate_window_walls(&self, w: &CayleyWindow) -> Result<Vec<WallAtom>> {
        self.require(&w.family())?;
        let mut atoms = AtomTable::default();
        match self {
            WallStructure::Tree => {
                for id in 0..w.edge_count() {
                    atoms.cut(id, 1.0, id as u32);
                }
            }
            WallStructure::Cubical => {
                for (id, e) in w.edges().iter().enumerate() {
                    let (GroupElement::Lattice(a), GroupElement::Lattice(b)) =
                        (w.vertex(e.a as usize), w.vertex(e.b as usize))
                    else {
                        unreachable!("family checked")
                    };
                    let axis = a.iter().zip(b).position(|(x, y)| x != y).expect("edge endpoints differ");
                    atoms.cut((axis, a[axis].min(b[axis])), 1.0, id as u32);
                }
            }
            WallStructure::Lamplighter => {
                for (id, e) in w.edges().iter().enumerate() {
                    let (GroupElement::Lamp(a), GroupElement::Lamp(b)) =
                        (w.vertex(e.a as usize), w.vertex(e.b as usize))
                    else {
                        unreachable!("family checked")
                    };
                    // lamp switches: the two endpoints agree off the marker
                    // and membership needs the marker in A_e, so no wall cuts
                    if a.marker == b.marker {
                        continue;
                    }
                    let child = if a.marker.len() > b.marker.len() { &a.marker } else { &b.marker };
                    for toward_child in [true, false] {
                        let edge = OrientedTreeEdge {
                            child: child.clone(),
                            toward_child,
                        };
                        let psi = edge.restriction(a);
                        atoms.cut((edge, psi), 1.0, id as u32);
                    }
                }
            }
            WallStructure::Folner { nmax } => {
                let coord = |i: u32| match w.vertex(i as usize) {
                    GroupElement::Lattice(v) => v[0],
                    _ => unreachable!("family checked"),
                };
                for (id, e) in w.edges().iter().enumerate() {
                    let k = coord(e.a).min(coord(e.b));
                    // edge {k, k+1} is cut by [a, a+L) iff a = k+1 or a+L = k+1
                    for n in 1..=*nmax {
                        let len = folner_scale_len(n);
                        let measure = n as f64 / len as f64;
                        atoms.cut((n, k + 1), measure, id as u32);
                        atoms.cut((n, k + 1 - len), measure, id as u32);
                    }
                }
            }
        }
        Ok(atoms.finish())
    }
}

/// Deduplicates walls by canonical key while preserving discovery order.
#[derive(Default)]
struct AtomTable {
    keys: HashMap<AtomKey, usize>,
    atoms: Vec<WallAtom>,
}

#[derive(Hash, PartialEq, Eq)]
enum AtomKey {
    Edge(usize),
    Hyperplane(usize, i64),
    Lamp(OrientedTreeEdge, Vec<(FreeWord, u8)>),
    Interval(u32, i64),
}

impl From<usize> for AtomKey {
    fn from(e: usize) -> Self {
        AtomKey::Edge(e)
    }
}
impl From<(usize, i64)> for AtomKey {
    fn from((axis, offset): (usize, i64)) -> Self {
        AtomKey::Hyperplane(axis, offset)
    }
}
impl From<(OrientedTreeEdge, Vec<(FreeWord, u8)>)> for AtomKey {
    fn from((e, psi): (OrientedTreeEdge, Vec<(FreeWord, u8)>)) -> Self {
        AtomKey::Lamp(e, psi)
    }
}
impl From<(u32, i64)> for AtomKey {
    fn from((scale, start): (u32, i64)) -> Self {
        AtomKey::Interval(scale, start)
    }
}

impl AtomTable {
    fn cut(&mut self, key: impl Into<AtomKey>, measure: f64, edge: u32) {
        let next = self.atoms.len();
        let slot = *self.keys.entry(key.into()).or_insert(next);
        if slot == next {
            self.atoms.push(WallAtom {
                id: next as u64,
                measure,
                cut_edges: Vec::new(),
            });
        }
        let cuts = &mut self.atoms[slot].cut_edges;
        if cuts.last() != Some(&edge) {
            cuts.push(edge);
        }
    }

    fn finish(self) -> Vec<WallAtom> {
        self.atoms
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::groups::{ball, DEFAULT_BUDGET};

    fn word(s: &str) -> FreeWord {
        s.parse().unwrap()
    }
    fn lamp(lit: &[&str], marker: &str) -> LampState {
        LampState::new(lit.iter().map(|s| (word(s), 1)), word(marker), 2)
    }

    #[test]
    fn cubical_is_l1() {
        let w = WallStructure::Cubical
            .wall_measure(&GroupElement::Lattice(vec![0, 0]), &GroupElement::Lattice(vec![2, 3]))
            .unwrap();
        assert_eq!(w, 5.0);
    }

    #[test]
    fn lamplighter_marker_step_has_two_walls() {
        let walls = enumerate_separating_walls_lamplighter(&lamp(&[], "e"), &lamp(&[], "a"));
        assert_eq!(walls.len(), 2);
        for wall in &walls {
            assert_eq!(wall.edge.child, word("a"));
            assert!(wall.restriction.is_empty());
        }
        assert_ne!(walls[0].edge.toward_child, walls[1].edge.toward_child);
    }

    #[test]
    fn lamp_switch_at_marker_is_not_separated() {
        assert!(enumerate_separating_walls_lamplighter(&lamp(&[], "e"), &lamp(&["e"], "e")).is_empty());
    }

    #[test]
    fn remote_lamp_walls_sit_on_marker_side() {
        let g = lamp(&[], "e");
        let h = lamp(&["a"], "e");
        let walls = enumerate_separating_walls_lamplighter(&g, &h);
        // frozen: one wall per candidate restriction on the orientation e→a
        assert_eq!(walls.len(), 2);
        for wall in &walls {
            assert_eq!(wall.edge.tail(), word("e"));
            assert_eq!(wall.edge.head(), word("a"));
            assert!(wall.edge.in_a(&g.marker));
            assert_ne!(wall.contains(&g), wall.contains(&h));
        }
    }

    #[test]
    fn folner_edge_mass_per_scale() {
        let ws = WallStructure::Folner { nmax: 6 };
        let window = ball(Family::Lattice { dim: 1 }, 3, DEFAULT_BUDGET).unwrap();
        let atoms = ws.enumerate_window_walls(&window).unwrap();
        let edge = window
            .edge_between(
                window.require_index(&GroupElement::Lattice(vec![0])).unwrap(),
                window.require_index(&GroupElement::Lattice(vec![1])).unwrap(),
            )
            .unwrap() as u32;
        let mut per_scale = [0.0f64; 7];
        for a in atoms.iter().filter(|a| a.cut_edges.contains(&edge)) {
            let n = (1..=6).find(|&n| (a.measure - n as f64 / 4f64.powi(n as i32)).abs() < 1e-15).unwrap();
            per_scale[n] += a.measure;
        }
        for n in 1..=6 {
            // |kA_n Δ (k+1)A_n| = 2
            let expected = n as f64 / 4f64.powi(n as i32) * 2.0;
            assert!((per_scale[n] - expected).abs() < 1e-15, "scale {n}");
        }
    }

    #[test]
    fn cubical_radius_one_window() {
        let window = ball(Family::Lattice { dim: 2 }, 1, DEFAULT_BUDGET).unwrap();
        let atoms = WallStructure::Cubical.enumerate_window_walls(&window).unwrap();
        assert_eq!(atoms.len(), 4);
        assert!(atoms.iter().all(|a| a.cut_edges.len() == 1 && a.measure == 1.0));
    }

    #[test]
    fn tree_atoms_are_edges() {
        let window = ball(Family::Free { rank: 2 }, 2, DEFAULT_BUDGET).unwrap();
        let atoms = WallStructure::Tree.enumerate_window_walls(&window).unwrap();
        assert_eq!(atoms.len(), window.edge_count());
        assert!(atoms.iter().enumerate().all(|(i, a)| a.cut_edges == vec![i as u32]));
    }

    #[test]
    fn structure_family_mismatch() {
        let window = ball(Family::Free { rank: 2 }, 1, DEFAULT_BUDGET).unwrap();
        assert!(WallStructure::Cubical.enumerate_window_walls(&window).is_err());
        let z2 = ball(Family::Lattice { dim: 2 }, 1, DEFAULT_BUDGET).unwrap();
        assert!(WallStructure::Folner { nmax: 4 }.enumerate_window_walls(&z2).is_err());
    }

    #[test]
    fn parses_wall_descriptors() {
        assert_eq!("tree".parse::<WallStructure>().unwrap(), WallStructure::Tree);
        assert_eq!("folner:nmax=8".parse::<WallStructure>().unwrap(), WallStructure::Folner { nmax: 8 });
        assert_eq!("folner".parse::<WallStructure>().unwrap(), WallStructure::Folner { nmax: 8 });
        assert!("folner:nmax=0".parse::<WallStructure>().is_err());
        assert!("tree:x=1".parse::<WallStructure>().is_err());
        assert!("hyperplane".parse::<WallStructure>().is_err());
    }

    #[test]
    fn lamplighter_max_edge_measure_is_two() {
        let fam = Family::Lamplighter { modulus: 2, rank: 2 };
        assert_eq!(WallStructure::Lamplighter.max_edge_measure(&fam).unwrap(), 2.0);
    }
}
