//! Orientation phase: v-structures from sepsets, then Meek rules 1-4.

use super::graph::{pair, Cpdag};
use super::pc::Skeleton;

/// Orients the skeleton into a CPDAG. Conflicting collider proposals leave
/// the edge undirected and are recorded in [`Cpdag::conflicts`].
pub fn orient_cpdag(skeleton: &Skeleton) -> Cpdag {
    let mut g = Cpdag::from_skeleton(
        skeleton.nodes.clone(),
        &skeleton.adjacency,
        skeleton.sepsets.clone(),
    );
    let d = g.len();

    let mut proposals: Vec<(usize, usize)> = Vec::new();
    for a in 0..d {
        for b in a + 1..d {
            if g.adjacent(a, b) {
                continue;
            }
            let sep = skeleton.sepsets.get(&pair(a, b));
            for c in 0..d {
                if g.adjacent(a, c) && g.adjacent(b, c) && !sep.is_some_and(|s| s.contains(&c)) {
                    proposals.push((a, c));
                    proposals.push((b, c));
                }
            }
        }
    }
    proposals.sort_unstable();
    proposals.dedup();
    for &(a, c) in &proposals {
        if proposals.contains(&(c, a)) {
            if a < c {
                g.push_conflict(a, c, "opposing collider orientations");
            }
            continue;
        }
        if g.has_directed_path(c, a) {
            g.push_conflict(a, c, "collider orientation would close a directed cycle");
            continue;
        }
        g.orient(a, c);
    }
    apply_meek_rules(&mut g);
    g
}

/// Applies Meek rules 1-4 until no rule fires. Orientations that would
/// create a directed cycle are skipped and recorded as conflicts.
pub fn apply_meek_rules(g: &mut Cpdag) {
    let d = g.len();
    loop {
        let mut changed = false;
        for a in 0..d {
            for b in 0..d {
                if a == b || !g.is_undirected(a, b) || !meek_fires(g, a, b) {
                    continue;
                }
                if g.has_directed_path(b, a) {
                    if !g.conflicts().iter().any(|c| c.edge == pair(a, b)) {
                        g.push_conflict(a, b, "orientation rule would close a directed cycle");
                    }
                    continue;
                }
                g.orient(a, b);
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
}

/// Whether some rule orients the undirected edge `a - b` as `a -> b`.
fn meek_fires(g: &Cpdag, a: usize, b: usize) -> bool {
    let d = g.len();
    // R1: c -> a - b, c and b nonadjacent.
    let r1 = (0..d).any(|c| g.is_directed(c, a) && !g.adjacent(c, b) && c != b);
    // R2: a -> c -> b.
    let r2 = || (0..d).any(|c| g.is_directed(a, c) && g.is_directed(c, b));
    // R3: a - c -> b, a - e -> b, c and e nonadjacent.
    let r3 = || {
        (0..d).any(|c| {
            g.is_undirected(a, c)
                && g.is_directed(c, b)
                && (c + 1..d).any(|e| g.is_undirected(a, e) && g.is_directed(e, b) && !g.adjacent(c, e))
        })
    };
    // R4: a - c, c -> e -> b, a adjacent to e, c and b nonadjacent.
    let r4 = || {
        (0..d).any(|c| {
            c != b
                && g.is_undirected(a, c)
                && !g.adjacent(c, b)
                && (0..d).any(|e| g.is_directed(c, e) && g.is_directed(e, b) && g.adjacent(a, e))
        })
    };
    r1 || r2() || r3() || r4()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::causal::graph::{default_names, Dag, Edge, EdgeMark, Sepsets};

    fn skeleton(d: usize, edges: &[(usize, usize)], seps: &[((usize, usize), Vec<usize>)]) -> Skeleton {
        let mut adjacency = vec![vec![false; d]; d];
        for &(a, b) in edges {
            adjacency[a][b] = true;
            adjacency[b][a] = true;
        }
        Skeleton {
            nodes: default_names(d),
            adjacency,
            sepsets: seps.iter().cloned().collect::<Sepsets>(),
        }
    }

    #[test]
    fn chain_stays_undirected() {
        let g = orient_cpdag(&skeleton(3, &[(0, 1), (1, 2)], &[((0, 2), vec![1])]));
        assert!(g.is_undirected(0, 1) && g.is_undirected(1, 2));
        assert!(g.conflicts().is_empty());
    }

    #[test]
    fn empty_sepset_makes_collider() {
        let g = orient_cpdag(&skeleton(3, &[(0, 1), (1, 2)], &[((0, 2), vec![])]));
        assert!(g.is_directed(0, 1) && g.is_directed(2, 1));
    }

    #[test]
    fn collider_propagates_by_rule_one() {
        // 0 -> 2 <- 1 plus 2 - 3: rule 1 gives 2 -> 3.
        let g = orient_cpdag(&skeleton(
            4,
            &[(0, 2), (1, 2), (2, 3)],
            &[((0, 1), vec![]), ((0, 3), vec![2]), ((1, 3), vec![2])],
        ));
        let truth = Dag::new(4, &[(0, 2), (1, 2), (2, 3)])
            .unwrap()
            .to_cpdag(default_names(4))
            .unwrap();
        assert_eq!(g.edges(), truth.edges());
        assert!(g.is_directed(2, 3));
    }

    #[test]
    fn rule_one_closure_matches_brute_force() {
        // Skeleton 0-2, 1-2, 2-3, 3-4 as seen by every DAG in the class of
        // 0 -> 2 <- 1, 2 -> 3 -> 4. A directed edge in the closure must be
        // shared by every DAG with the same skeleton and v-structures.
        let truth = Dag::new(5, &[(0, 2), (1, 2), (2, 3), (3, 4)]).unwrap();
        let seps = [
            ((0, 1), vec![]),
            ((0, 3), vec![2]),
            ((0, 4), vec![2]),
            ((1, 3), vec![2]),
            ((1, 4), vec![2]),
            ((2, 4), vec![3]),
        ];
        let g = orient_cpdag(&skeleton(5, &truth.edges(), &seps));
        let tg = truth.to_cpdag(default_names(5)).unwrap();
        let members: Vec<Dag> = Dag::enumerate(5)
            .into_iter()
            .filter(|m| {
                let c = m.to_cpdag(default_names(5)).unwrap();
                c.skeleton() == tg.skeleton() && c.v_structures() == tg.v_structures()
            })
            .collect();
        for e in g.edges() {
            let all_same = members.iter().all(|m| m.parents(e.to).contains(&e.from));
            assert_eq!(e.mark == EdgeMark::Directed, all_same, "{e:?}");
        }
    }

    #[test]
    fn rule_two_and_three_shapes() {
        // R2: 0 -> 1 -> 2 with 0 - 2 undirected.
        let mut g = Cpdag::from_edges(
            default_names(3),
            &[
                Edge { from: 0, to: 1, mark: EdgeMark::Directed },
                Edge { from: 1, to: 2, mark: EdgeMark::Directed },
                Edge { from: 0, to: 2, mark: EdgeMark::Undirected },
            ],
        )
        .unwrap();
        apply_meek_rules(&mut g);
        assert!(g.is_directed(0, 2));

        // R3: 0 - 1, 0 - 2, 0 - 3, 1 -> 3 <- 2, 1 and 2 nonadjacent.
        let u = |a, b| Edge { from: a, to: b, mark: EdgeMark::Undirected };
        let dr = |a, b| Edge { from: a, to: b, mark: EdgeMark::Directed };
        let mut g = Cpdag::from_edges(
            default_names(4),
            &[u(0, 1), u(0, 2), u(0, 3), dr(1, 3), dr(2, 3)],
        )
        .unwrap();
        apply_meek_rules(&mut g);
        assert!(g.is_directed(0, 3));
        assert!(g.is_undirected(0, 1) && g.is_undirected(0, 2));
    }

    #[test]
    fn rule_four_shape() {
        // 0 - 1, 0 - 2, 0 - 3, 2 -> 3 -> 1, 1 and 2 nonadjacent: 0 -> 1.
        let u = |a, b| Edge { from: a, to: b, mark: EdgeMark::Undirected };
        let dr = |a, b| Edge { from: a, to: b, mark: EdgeMark::Directed };
        let mut g = Cpdag::from_edges(
            default_names(4),
            &[u(0, 1), u(0, 2), u(0, 3), dr(2, 3), dr(3, 1)],
        )
        .unwrap();
        apply_meek_rules(&mut g);
        assert!(g.is_directed(0, 1));
    }

    #[test]
    fn conflicting_colliders_stay_undirected() {
        // Square 0-1-2-3-0 with all diagonal sepsets empty: 0->1<-2 and
        // 1->2<-3 disagree on 1-2.
        let g = orient_cpdag(&skeleton(
            4,
            &[(0, 1), (1, 2), (2, 3), (0, 3)],
            &[((0, 2), vec![]), ((1, 3), vec![])],
        ));
        assert!(!g.conflicts().is_empty());
        assert!(!g.has_directed_cycle());
        for e in g.conflicts() {
            assert!(g.is_undirected(e.edge.0, e.edge.1));
        }
    }

    #[test]
    fn never_creates_cycles_on_arbitrary_sepsets() {
        // Every skeleton on 4 nodes with every choice of empty/{all} sepsets.
        let pairs: Vec<(usize, usize)> = (0..4).flat_map(|a| (a + 1..4).map(move |b| (a, b))).collect();
        for emask in 0..(1u32 << 6) {
            let edges: Vec<_> = (0..6).filter(|i| emask & (1 << i) != 0).map(|i| pairs[i]).collect();
            let missing: Vec<_> = (0..6).filter(|i| emask & (1 << i) == 0).map(|i| pairs[i]).collect();
            for smask in 0..(1u32 << missing.len()) {
                let seps: Vec<_> = missing
                    .iter()
                    .enumerate()
                    .map(|(k, &(a, b))| {
                        let s = if smask & (1 << k) != 0 {
                            (0..4).filter(|&v| v != a && v != b).collect()
                        } else {
                            vec![]
                        };
                        ((a, b), s)
                    })
                    .collect();
                let g = orient_cpdag(&skeleton(4, &edges, &seps));
                assert!(!g.has_directed_cycle());
                assert_eq!(g.skeleton().len(), edges.len());
            }
        }
    }
}
