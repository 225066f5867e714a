//! Group elements, word metrics and finite Cayley-graph windows.
//!
//! Four families are supported: free groups `F_r`, lattices `Z^d`,
//! lamplighters `Z_m ≀ F_r` with their canonical generating set, and vertex
//! sets of hyperbolic tilings. Tiling vertices are plain ids into a window
//! produced by [`crate::hyperbolic::tiling_graph`]; the group law for them is
//! not exposed here.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::descriptor::Descriptor;
use crate::error::{descriptor_error, Error, Result};

/// Default vertex budget for [`ball`].
pub const DEFAULT_BUDGET: usize = 2_000_000;

/// A reduced word in a free group.
///
/// Letter `2i` is the generator `a_i`, letter `2i + 1` its inverse.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct FreeWord(Vec<u8>);

#[inline]
pub fn inverse_letter(l: u8) -> u8 {
    l ^ 1
}

impl FreeWord {
    pub fn identity() -> Self {
        Self(Vec::new())
    }

    /// Builds a word from letters, freely reducing as it goes.
    pub fn from_letters(letters: impl IntoIterator<Item = u8>) -> Self {
        let mut w = Self::identity();
        for l in letters {
            w.push(l);
        }
        w
    }

    pub fn letters(&self) -> &[u8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_identity(&self) -> bool {
        self.0.is_empty()
    }

    /// Right-multiplies by a single letter.
    pub fn push(&mut self, l: u8) {
        if self.0.last() == Some(&inverse_letter(l)) {
            self.0.pop();
        } else {
            self.0.push(l);
        }
    }

    pub fn mul(&self, other: &FreeWord) -> FreeWord {
        let mut out = self.clone();
        for &l in &other.0 {
            out.push(l);
        }
        out
    }

    pub fn inverse(&self) -> FreeWord {
        FreeWord(self.0.iter().rev().map(|&l| inverse_letter(l)).collect())
    }

    pub fn has_prefix(&self, prefix: &FreeWord) -> bool {
        self.0.starts_with(&prefix.0)
    }

    /// The neighbour one step closer to the identity.
    pub fn parent(&self) -> Option<FreeWord> {
        if self.0.is_empty() {
            None
        } else {
            Some(FreeWord(self.0[..self.0.len() - 1].to_vec()))
        }
    }

    /// Tree distance in the standard Cayley tree.
    pub fn distance(&self, other: &FreeWord) -> usize {
        let common = self
            .0
            .iter()
            .zip(&other.0)
            .take_while(|(a, b)| a == b)
            .count();
        self.0.len() + other.0.len() - 2 * common
    }

    pub fn max_letter(&self) -> Option<u8> {
        self.0.iter().copied().max()
    }
}

impl fmt::Display for FreeWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "e");
        }
        for &l in &self.0 {
            let base = (b'a' + l / 2) as char;
            let c = if l % 2 == 0 { base } else { base.to_ascii_uppercase() };
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

impl FromStr for FreeWord {
    type Err = Error;

    /// `e` is the identity; lowercase letters are generators, uppercase their
    /// inverses (`aB` = a b⁻¹).
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "e" || s.is_empty() {
            return Ok(Self::identity());
        }
        let mut letters = Vec::with_capacity(s.len());
        for c in s.chars() {
            if !c.is_ascii_alphabetic() || c.to_ascii_lowercase() > 'z' {
                return Err(descriptor_error(s, "free words use letters a-z / A-Z"));
            }
            let idx = (c.to_ascii_lowercase() as u8 - b'a') * 2;
            letters.push(if c.is_ascii_uppercase() { idx + 1 } else { idx });
        }
        Ok(Self::from_letters(letters))
    }
}

/// Lamplighter element `(φ, x)`: lamp map φ (support only) and marker x.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct LampState {
    pub lamps: BTreeMap<FreeWord, u8>,
    pub marker: FreeWord,
}

impl LampState {
    pub fn new(lamps: impl IntoIterator<Item = (FreeWord, u8)>, marker: FreeWord, modulus: u8) -> Self {
        let mut map = BTreeMap::new();
        for (pos, v) in lamps {
            let v = v % modulus;
            if v != 0 {
                map.insert(pos, v);
            }
        }
        Self { lamps: map, marker }
    }

    pub fn support(&self) -> impl Iterator<Item = &FreeWord> {
        self.lamps.keys()
    }
}

impl fmt::Display for LampState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (i, (pos, v)) in self.lamps.iter().enumerate() {
            if i > 0 {
                write!(f, " ")?;
            }
            write!(f, "{pos}:{v}")?;
        }
        write!(f, "]@{}", self.marker)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum GroupElement {
    Free(FreeWord),
    Lattice(Vec<i64>),
    Lamp(LampState),
    Tiling(u32),
}

impl fmt::Display for GroupElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GroupElement::Free(w) => write!(f, "{w}"),
            GroupElement::Lattice(v) => {
                let parts: Vec<String> = v.iter().map(i64::to_string).collect();
                write!(f, "({})", parts.join(" "))
            }
            GroupElement::Lamp(s) => write!(f, "{s}"),
            GroupElement::Tiling(id) => write!(f, "#{id}"),
        }
    }
}

/// A group family with its canonical generating set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Family {
    Free { rank: u8 },
    Lattice { dim: u8 },
    Lamplighter { modulus: u8, rank: u8 },
    Tiling { p: u32, q: u32 },
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Family::Free { rank } => write!(f, "free:r={rank}"),
            Family::Lattice { dim } => write!(f, "lattice:d={dim}"),
            Family::Lamplighter { modulus, rank } => write!(f, "lamplighter:m={modulus},r={rank}"),
            Family::Tiling { p, q } => write!(f, "tiling:p={p},q={q}"),
        }
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let d = Descriptor::parse(s)?;
        let fam = match d.kind.as_str() {
            "free" => {
                d.only(&["r"])?;
                Family::Free { rank: d.require("r")? }
            }
            "lattice" => {
                d.only(&["d"])?;
                Family::Lattice { dim: d.require("d")? }
            }
            "lamplighter" => {
                d.only(&["m", "r"])?;
                Family::Lamplighter {
                    modulus: d.require("m")?,
                    rank: d.require("r")?,
                }
            }
            // depth belongs to the tiling window, not the group
            "tiling" => {
                d.only(&["p", "q", "depth"])?;
                Family::Tiling {
                    p: d.require("p")?,
                    q: d.require("q")?,
                }
            }
            other => return Err(descriptor_error(s, format!("unknown family `{other}`"))),
        };
        fam.validate()?;
        Ok(fam)
    }
}

fn mismatch(family: &Family, g: &GroupElement) -> Error {
    Error::FamilyMismatch(format!("element {g} does not belong to {family}"))
}

impl Family {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Family::Free { rank } if rank == 0 || rank > 13 => {
                Err(Error::InvalidParameter(format!("free rank must be in 1..=13, got {rank}")))
            }
            Family::Lattice { dim } if dim == 0 => Err(Error::InvalidParameter("lattice dimension must be >= 1".into())),
            Family::Lamplighter { modulus, rank } if modulus < 2 || rank == 0 || rank > 13 => Err(
                Error::InvalidParameter(format!("lamplighter needs m >= 2 and r in 1..=13, got m={modulus}, r={rank}")),
            ),
            Family::Tiling { p, q } if (p as i64 - 2) * (q as i64 - 2) <= 4 => Err(Error::InvalidParameter(format!(
                "{{{p},{q}}} is not a hyperbolic tiling"
            ))),
            _ => Ok(()),
        }
    }

    pub fn identity(&self) -> GroupElement {
        match *self {
            Family::Free { .. } => GroupElement::Free(FreeWord::identity()),
            Family::Lattice { dim } => GroupElement::Lattice(vec![0; dim as usize]),
            Family::Lamplighter { .. } => GroupElement::Lamp(LampState::default()),
            Family::Tiling { .. } => GroupElement::Tiling(0),
        }
    }

    /// Number of canonical generators (the Cayley graph degree).
    pub fn degree(&self) -> usize {
        match *self {
            Family::Free { rank } => 2 * rank as usize,
            Family::Lattice { dim } => 2 * dim as usize,
            Family::Lamplighter { modulus, rank } => 2 * rank as usize + if modulus == 2 { 1 } else { 2 },
            Family::Tiling { p, .. } => p as usize,
        }
    }

    /// Canonical symmetric generating set, in tie-break order.
    ///
    /// Lamplighter: marker moves `(0, s)` first, then lamp switches
    /// `(t·δ_e, e)` for `t = +1` (and `t = -1` when `m > 2`).
    pub fn generators(&self) -> Result<Vec<GroupElement>> {
        Ok(match *self {
            Family::Free { rank } => (0..2 * rank)
                .map(|l| GroupElement::Free(FreeWord::from_letters([l])))
                .collect(),
            Family::Lattice { dim } => {
                let mut gens = Vec::new();
                for axis in 0..dim as usize {
                    for sign in [1, -1] {
                        let mut v = vec![0; dim as usize];
                        v[axis] = sign;
                        gens.push(GroupElement::Lattice(v));
                    }
                }
                gens
            }
            Family::Lamplighter { modulus, rank } => {
                let mut gens: Vec<GroupElement> = (0..2 * rank)
                    .map(|l| {
                        GroupElement::Lamp(LampState {
                            lamps: BTreeMap::new(),
                            marker: FreeWord::from_letters([l]),
                        })
                    })
                    .collect();
                let mut switches = vec![1u8];
                if modulus > 2 {
                    switches.push(modulus - 1);
                }
                for t in switches {
                    gens.push(GroupElement::Lamp(LampState::new(
                        [(FreeWord::identity(), t)],
                        FreeWord::identity(),
                        modulus,
                    )));
                }
                gens
            }
            Family::Tiling { .. } => {
                return Err(Error::Unsupported(
                    "tiling generators are side-pairing isometries; use hyperbolic::tiling_graph".into(),
                ))
            }
        })
    }

    pub fn contains(&self, g: &GroupElement) -> bool {
        match (self, g) {
            (Family::Free { rank }, GroupElement::Free(w)) => w.max_letter().map_or(true, |l| l < 2 * rank),
            (Family::Lattice { dim }, GroupElement::Lattice(v)) => v.len() == *dim as usize,
            (Family::Lamplighter { modulus, rank }, GroupElement::Lamp(s)) => {
                let ok_word = |w: &FreeWord| w.max_letter().map_or(true, |l| l < 2 * rank);
                ok_word(&s.marker) && s.lamps.iter().all(|(pos, &v)| ok_word(pos) && v != 0 && v < *modulus)
            }
            (Family::Tiling { .. }, GroupElement::Tiling(_)) => true,
            _ => false,
        }
    }

    fn check(&self, g: &GroupElement) -> Result<()> {
        if self.contains(g) {
            Ok(())
        } else {
            Err(mismatch(self, g))
        }
    }

    /// Group law. The lamplighter uses `(φ₁,x₁)(φ₂,x₂) = (φ₁ + x₁·φ₂, x₁x₂)`
    /// where `(x·φ)(y) = φ(x⁻¹y)`.
    pub fn mul(&self, g: &GroupElement, h: &GroupElement) -> Result<GroupElement> {
        self.check(g)?;
        self.check(h)?;
        Ok(match (self, g, h) {
            (Family::Free { .. }, GroupElement::Free(a), GroupElement::Free(b)) => GroupElement::Free(a.mul(b)),
            (Family::Lattice { .. }, GroupElement::Lattice(a), GroupElement::Lattice(b)) => {
                GroupElement::Lattice(a.iter().zip(b).map(|(x, y)| x + y).collect())
            }
            (Family::Lamplighter { modulus, .. }, GroupElement::Lamp(a), GroupElement::Lamp(b)) => {
                GroupElement::Lamp(lamp_mul(a, b, *modulus))
            }
            (Family::Tiling { .. }, _, _) => {
                return Err(Error::Unsupported("group law on tiling vertex ids".into()))
            }
            _ => unreachable!("checked above"),
        })
    }

    pub fn inverse(&self, g: &GroupElement) -> Result<GroupElement> {
        self.check(g)?;
        Ok(match (self, g) {
            (Family::Free { .. }, GroupElement::Free(w)) => GroupElement::Free(w.inverse()),
            (Family::Lattice { .. }, GroupElement::Lattice(v)) => GroupElement::Lattice(v.iter().map(|x| -x).collect()),
            (Family::Lamplighter { modulus, .. }, GroupElement::Lamp(s)) => {
                // (φ,x)⁻¹ = (-(x⁻¹·φ), x⁻¹)
                let inv = s.marker.inverse();
                GroupElement::Lamp(LampState::new(
                    s.lamps.iter().map(|(pos, &v)| (inv.mul(pos), modulus - v)),
                    inv.clone(),
                    *modulus,
                ))
            }
            (Family::Tiling { .. }, _) => return Err(Error::Unsupported("inverse on tiling vertex ids".into())),
            _ => unreachable!("checked above"),
        })
    }

    /// Exact word length for the canonical generating set.
    ///
    /// For lamplighters this is the lamp cost plus the shortest tree walk
    /// from `e` that visits every lit lamp and ends at the marker:
    /// `2·|E(Steiner({e} ∪ supp ∪ {x}))| − |x|`.
    pub fn word_length(&self, g: &GroupElement) -> Result<u32> {
        self.check(g)?;
        Ok(match (self, g) {
            (Family::Free { .. }, GroupElement::Free(w)) => w.len() as u32,
            (Family::Lattice { .. }, GroupElement::Lattice(v)) => v.iter().map(|x| x.unsigned_abs()).sum::<u64>() as u32,
            (Family::Lamplighter { modulus, .. }, GroupElement::Lamp(s)) => {
                let switches: u32 = s.lamps.values().map(|&v| lamp_cost(v, *modulus)).sum();
                let walk = steiner_edge_count(s.support().chain(std::iter::once(&s.marker)));
                switches + 2 * walk as u32 - s.marker.len() as u32
            }
            (Family::Tiling { .. }, _) => {
                return Err(Error::Unsupported("word length of a tiling vertex needs its window".into()))
            }
            _ => unreachable!("checked above"),
        })
    }

    /// Word-metric distance `|g⁻¹h|`.
    pub fn distance(&self, g: &GroupElement, h: &GroupElement) -> Result<u32> {
        let gi = self.inverse(g)?;
        self.word_length(&self.mul(&gi, h)?)
    }
}

/// Cheapest number of ±1 switches reaching lamp value `v` in `Z_m`.
pub fn lamp_cost(v: u8, modulus: u8) -> u32 {
    if modulus == 2 {
        (v % 2) as u32
    } else {
        let v = (v % modulus) as u32;
        v.min(modulus as u32 - v)
    }
}

fn lamp_mul(a: &LampState, b: &LampState, modulus: u8) -> LampState {
    let mut lamps = a.lamps.clone();
    for (pos, &v) in &b.lamps {
        let shifted = a.marker.mul(pos);
        let entry = lamps.entry(shifted).or_insert(0);
        *entry = ((*entry as u16 + v as u16) % modulus as u16) as u8;
    }
    lamps.retain(|_, v| *v != 0);
    LampState {
        lamps,
        marker: a.marker.mul(&b.marker),
    }
}

/// Edge count of the subtree spanned by the identity and `terminals`.
///
/// With the root among the terminals the Steiner tree is the union of the
/// root paths, i.e. the set of distinct non-empty prefixes.
pub fn steiner_edge_count<'a>(terminals: impl IntoIterator<Item = &'a FreeWord>) -> usize {
    let mut prefixes: BTreeSet<&[u8]> = BTreeSet::new();
    for t in terminals {
        let l = t.letters();
        for k in 1..=l.len() {
            prefixes.insert(&l[..k]);
        }
    }
    prefixes.len()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Edge {
    pub a: u32,
    pub b: u32,
    /// Generator taking `a` to `b` (side index for tilings).
    pub generator: u8,
}

/// A finite connected piece of a Cayley graph around the identity.
///
/// Vertex 0 is the base vertex `o`. Each undirected edge is stored once with
/// `a < b`.
#[derive(Debug, Clone)]
pub struct CayleyWindow {
    family: Family,
    radius: u32,
    vertices: Vec<GroupElement>,
    levels: Vec<u32>,
    edges: Vec<Edge>,
    index: HashMap<GroupElement, u32>,
    adj_offsets: Vec<u32>,
    adj: Vec<(u32, u32)>,
    degree: usize,
}

impl CayleyWindow {
    /// Assembles a window from an explicit graph. Levels are BFS distances
    /// from vertex 0 inside the given graph.
    pub fn from_graph(family: Family, radius: u32, vertices: Vec<GroupElement>, edges: Vec<Edge>, degree: usize) -> Self {
        let n = vertices.len();
        let mut counts = vec![0u32; n + 1];
        for e in &edges {
            counts[e.a as usize + 1] += 1;
            counts[e.b as usize + 1] += 1;
        }
        for i in 0..n {
            counts[i + 1] += counts[i];
        }
        let adj_offsets = counts.clone();
        let mut fill = counts;
        let mut adj = vec![(0u32, 0u32); edges.len() * 2];
        for (id, e) in edges.iter().enumerate() {
            adj[fill[e.a as usize] as usize] = (e.b, id as u32);
            fill[e.a as usize] += 1;
            adj[fill[e.b as usize] as usize] = (e.a, id as u32);
            fill[e.b as usize] += 1;
        }
        let mut levels = vec![u32::MAX; n];
        if n > 0 {
            levels[0] = 0;
            let mut queue = VecDeque::from([0u32]);
            while let Some(v) = queue.pop_front() {
                let (lo, hi) = (adj_offsets[v as usize] as usize, adj_offsets[v as usize + 1] as usize);
                for &(w, _) in &adj[lo..hi] {
                    if levels[w as usize] == u32::MAX {
                        levels[w as usize] = levels[v as usize] + 1;
                        queue.push_back(w);
                    }
                }
            }
        }
        let index = vertices.iter().enumerate().map(|(i, v)| (v.clone(), i as u32)).collect();
        Self {
            family,
            radius,
            vertices,
            levels,
            edges,
            index,
            adj_offsets,
            adj,
            degree,
        }
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn radius(&self) -> u32 {
        self.radius
    }

    pub fn base(&self) -> usize {
        0
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn vertices(&self) -> &[GroupElement] {
        &self.vertices
    }

    pub fn vertex(&self, i: usize) -> &GroupElement {
        &self.vertices[i]
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, i: usize) -> Edge {
        self.edges[i]
    }

    /// BFS distance of vertex `i` from the base vertex inside the window.
    pub fn level(&self, i: usize) -> u32 {
        self.levels[i]
    }

    pub fn levels(&self) -> &[u32] {
        &self.levels
    }

    pub fn index_of(&self, g: &GroupElement) -> Option<usize> {
        self.index.get(g).map(|&i| i as usize)
    }

    pub fn require_index(&self, g: &GroupElement) -> Result<usize> {
        self.index_of(g).ok_or_else(|| Error::OutOfWindow(g.to_string()))
    }

    /// `(neighbour, edge id)` pairs at vertex `i`.
    pub fn neighbors(&self, i: usize) -> &[(u32, u32)] {
        &self.adj[self.adj_offsets[i] as usize..self.adj_offsets[i + 1] as usize]
    }

    /// Edge ids incident to the base vertex.
    pub fn base_edges(&self) -> Vec<usize> {
        self.neighbors(0).iter().map(|&(_, e)| e as usize).collect()
    }

    pub fn edge_between(&self, i: usize, j: usize) -> Option<usize> {
        self.neighbors(i).iter().find(|&&(w, _)| w as usize == j).map(|&(_, e)| e as usize)
    }

    /// First vertex (in BFS order) on each sphere `0..=radius`.
    pub fn sphere_representatives(&self) -> Vec<usize> {
        let mut reps: Vec<Option<usize>> = vec![None; self.radius as usize + 1];
        for (i, &l) in self.levels.iter().enumerate() {
            if let Some(slot) = reps.get_mut(l as usize) {
                slot.get_or_insert(i);
            }
        }
        reps.into_iter().flatten().collect()
    }

    /// All vertices with level `<= r`.
    pub fn ball_indices(&self, r: u32) -> Vec<usize> {
        (0..self.vertex_count()).filter(|&i| self.levels[i] <= r).collect()
    }
}

/// The ball of radius `R` around the identity, built breadth-first with
/// generator-order tie-break.
pub fn ball(family: Family, radius: u32, budget: usize) -> Result<CayleyWindow> {
    family.validate()?;
    let gens = family.generators()?;
    let mut vertices = vec![family.identity()];
    let mut index: HashMap<GroupElement, u32> = HashMap::from([(family.identity(), 0)]);
    let mut levels = vec![0u32];
    let mut head = 0;
    while head < vertices.len() {
        if levels[head] < radius {
            for s in &gens {
                let w = family.mul(&vertices[head], s)?;
                if !index.contains_key(&w) {
                    if vertices.len() >= budget {
                        return Err(Error::BudgetExceeded { budget });
                    }
                    index.insert(w.clone(), vertices.len() as u32);
                    vertices.push(w);
                    levels.push(levels[head] + 1);
                }
            }
        }
        head += 1;
    }
    let mut edges = Vec::new();
    for i in 0..vertices.len() {
        for (k, s) in gens.iter().enumerate() {
            let w = family.mul(&vertices[i], s)?;
            if let Some(&j) = index.get(&w) {
                if (i as u32) < j {
                    edges.push(Edge {
                        a: i as u32,
                        b: j,
                        generator: k as u8,
                    });
                }
            }
        }
    }
    let window = CayleyWindow::from_graph(family, radius, vertices, edges, family.degree());
    debug_assert!(window.levels.iter().zip(&levels).all(|(a, b)| a == b));
    Ok(window)
}
