use std::collections::BTreeSet;

use proptest::prelude::*;
use wallperc::groups::{ball, CayleyWindow, Family, FreeWord, GroupElement, LampState, DEFAULT_BUDGET};
use wallperc::walls::{OrientedTreeEdge, WallStructure};

const LAMP22: Family = Family::Lamplighter { modulus: 2, rank: 2 };

fn element(family: Family, word: &[usize]) -> GroupElement {
    let gens = family.generators().unwrap();
    word.iter()
        .fold(family.identity(), |acc, &i| family.mul(&acc, &gens[i % gens.len()]).unwrap())
}

fn words() -> impl Strategy<Value = Vec<usize>> {
    prop::collection::vec(0usize..16, 0..10)
}

fn all_words(rank: u8, max_len: usize) -> Vec<FreeWord> {
    let mut out = vec![FreeWord::identity()];
    let mut frontier = out.clone();
    for _ in 0..max_len {
        let mut next = Vec::new();
        for w in &frontier {
            for l in 0..2 * rank {
                let mut v = w.clone();
                let before = v.len();
                v.push(l);
                if v.len() > before {
                    next.push(v);
                }
            }
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    out
}

/// Walls containing `g`, by definition, among walls on tree edges up to
/// depth `k`.
fn walls_containing(g: &LampState, k: usize) -> BTreeSet<(OrientedTreeEdge, Vec<(FreeWord, u8)>)> {
    let mut out = BTreeSet::new();
    for child in all_words(2, k).into_iter().filter(|w| !w.is_identity()) {
        for toward_child in [true, false] {
            let e = OrientedTreeEdge {
                child: child.clone(),
                toward_child,
            };
            if e.in_a(&g.marker) {
                let psi = e.restriction(g);
                out.insert((e, psi));
            }
        }
    }
    out
}

fn brute_force_wall_count(g: &LampState, h: &LampState) -> usize {
    let reach = g
        .support()
        .chain(h.support())
        .chain([&g.marker, &h.marker])
        .map(FreeWord::len)
        .max()
        .unwrap_or(0);
    let a = walls_containing(g, reach + 1);
    let b = walls_containing(h, reach + 1);
    a.symmetric_difference(&b).count()
}

fn lamp(g: &GroupElement) -> &LampState {
    match g {
        GroupElement::Lamp(s) => s,
        _ => unreachable!(),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn word_metric_is_a_left_invariant_metric(a in words(), b in words(), c in words(), fam in 0usize..4) {
        let family = [
            Family::Free { rank: 2 },
            Family::Lattice { dim: 3 },
            LAMP22,
            Family::Lamplighter { modulus: 3, rank: 2 },
        ][fam];
        let (g, h, k) = (element(family, &a), element(family, &b), element(family, &c));
        let d = |x: &GroupElement, y: &GroupElement| family.distance(x, y).unwrap();
        prop_assert_eq!(d(&g, &g), 0);
        prop_assert_eq!(d(&g, &h), d(&h, &g));
        prop_assert!(d(&g, &h) <= d(&g, &k) + d(&k, &h));
        let kg = family.mul(&k, &g).unwrap();
        let kh = family.mul(&k, &h).unwrap();
        prop_assert_eq!(d(&kg, &kh), d(&g, &h));
        prop_assert!(family.word_length(&g).unwrap() as usize <= a.len());
    }

    #[test]
    fn wall_distance_is_an_invariant_pseudometric(a in words(), b in words(), c in words(), s in 0usize..4) {
        let (family, walls) = [
            (Family::Free { rank: 2 }, WallStructure::Tree),
            (Family::Lattice { dim: 2 }, WallStructure::Cubical),
            (LAMP22, WallStructure::Lamplighter),
            (Family::Lattice { dim: 1 }, WallStructure::Folner { nmax: 6 }),
        ][s];
        let (g, h, k) = (element(family, &a), element(family, &b), element(family, &c));
        let w = |x: &GroupElement, y: &GroupElement| walls.wall_measure(x, y).unwrap();
        prop_assert_eq!(w(&g, &g), 0.0);
        prop_assert_eq!(w(&g, &h), w(&h, &g));
        prop_assert!(w(&g, &h) <= w(&g, &k) + w(&k, &h) + 1e-9);
        let kg = family.mul(&k, &g).unwrap();
        let kh = family.mul(&k, &h).unwrap();
        prop_assert!((w(&kg, &kh) - w(&g, &h)).abs() < 1e-9);
    }

    #[test]
    fn lamplighter_walls_match_the_definition(a in words(), b in words()) {
        let (g, h) = (element(LAMP22, &a), element(LAMP22, &b));
        let fast = WallStructure::Lamplighter.wall_measure(&g, &h).unwrap() as usize;
        prop_assert_eq!(fast, brute_force_wall_count(lamp(&g), lamp(&h)));
    }

    #[test]
    fn lamplighter_wall_bound(a in prop::collection::vec(0usize..16, 0..14)) {
        let g = element(LAMP22, &a);
        let len = LAMP22.word_length(&g).unwrap() as f64;
        let w = WallStructure::Lamplighter.wall_measure(&LAMP22.identity(), &g).unwrap();
        prop_assert!(w >= len / 4.0 - 0.25);
    }
}

#[test]
fn steiner_word_length_equals_bfs_distance() {
    for (family, r) in [(LAMP22, 5), (Family::Lamplighter { modulus: 3, rank: 2 }, 4), (Family::Lamplighter { modulus: 2, rank: 1 }, 7)] {
        let w = ball(family, r, DEFAULT_BUDGET).unwrap();
        for (i, g) in w.vertices().iter().enumerate() {
            assert_eq!(family.word_length(g).unwrap(), w.level(i), "{family} {g}");
        }
    }
}

fn check_atoms(w: &CayleyWindow, s: WallStructure) {
    let atoms = s.enumerate_window_walls(w).unwrap();
    let mut per_edge = vec![0.0; w.edge_count()];
    let mut ids = BTreeSet::new();
    for a in &atoms {
        assert!(ids.insert(a.id));
        let mut cuts = a.cut_edges.clone();
        cuts.sort_unstable();
        cuts.dedup();
        assert_eq!(cuts.len(), a.cut_edges.len(), "atom lists an edge twice");
        for &e in &a.cut_edges {
            per_edge[e as usize] += a.measure;
        }
    }
    for (i, e) in w.edges().iter().enumerate() {
        let want = s.wall_measure(w.vertex(e.a as usize), w.vertex(e.b as usize)).unwrap();
        assert!((per_edge[i] - want).abs() < 1e-12, "{s}: edge {i} has {} vs {want}", per_edge[i]);
    }
}

#[test]
fn atom_measures_add_up_to_wall_measure_on_every_edge() {
    check_atoms(&ball(Family::Free { rank: 2 }, 4, DEFAULT_BUDGET).unwrap(), WallStructure::Tree);
    check_atoms(&ball(Family::Lattice { dim: 2 }, 4, DEFAULT_BUDGET).unwrap(), WallStructure::Cubical);
    check_atoms(&ball(LAMP22, 4, DEFAULT_BUDGET).unwrap(), WallStructure::Lamplighter);
    check_atoms(&ball(Family::Lamplighter { modulus: 3, rank: 2 }, 3, DEFAULT_BUDGET).unwrap(), WallStructure::Lamplighter);
    check_atoms(&ball(Family::Lattice { dim: 1 }, 40, DEFAULT_BUDGET).unwrap(), WallStructure::Folner { nmax: 5 });
}

#[test]
fn max_edge_measures() {
    assert_eq!(WallStructure::Tree.max_edge_measure(&Family::Free { rank: 2 }).unwrap(), 1.0);
    assert_eq!(WallStructure::Cubical.max_edge_measure(&Family::Lattice { dim: 3 }).unwrap(), 1.0);
    assert_eq!(WallStructure::Lamplighter.max_edge_measure(&LAMP22).unwrap(), 2.0);
}

#[test]
fn incompatible_structures_are_rejected() {
    let w = ball(Family::Free { rank: 2 }, 1, DEFAULT_BUDGET).unwrap();
    assert!(WallStructure::Cubical.enumerate_window_walls(&w).is_err());
    assert!(WallStructure::Folner { nmax: 3 }.enumerate_window_walls(&w).is_err());
}
