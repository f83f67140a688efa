//! Partially directed graphs and DAGs over a fixed, named node set.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Sepsets keyed by the ordered pair `(min, max)`.
pub type Sepsets = BTreeMap<(usize, usize), Vec<usize>>;

pub(crate) fn pair(a: usize, b: usize) -> (usize, usize) {
    (a.min(b), a.max(b))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeMark {
    Undirected,
    /// `from -> to`.
    Directed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Edge {
    pub from: usize,
    pub to: usize,
    pub mark: EdgeMark,
}

/// An orientation that could not be applied.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Conflict {
    /// The edge, as `(min, max)`.
    pub edge: (usize, usize),
    pub reason: String,
}

/// Completed partially directed acyclic graph.
///
/// Stored as a mark matrix: `marks[i][j] && marks[j][i]` is `i - j`,
/// `marks[i][j] && !marks[j][i]` is `i -> j`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "CpdagJson", try_from = "CpdagJson")]
pub struct Cpdag {
    nodes: Vec<String>,
    marks: Vec<Vec<bool>>,
    sepsets: Sepsets,
    conflicts: Vec<Conflict>,
}

impl Cpdag {
    /// Graph with no edges.
    pub fn empty(nodes: Vec<String>) -> Self {
        let d = nodes.len();
        Cpdag {
            nodes,
            marks: vec![vec![false; d]; d],
            sepsets: Sepsets::new(),
            conflicts: Vec::new(),
        }
    }

    /// Builds a graph from edges, checking node bounds, self-loops,
    /// duplicate pairs and acyclicity of the directed part.
    pub fn from_edges(nodes: Vec<String>, edges: &[Edge]) -> Result<Self> {
        let mut g = Cpdag::empty(nodes);
        let d = g.len();
        for e in edges {
            if e.from >= d || e.to >= d {
                return Err(Error::InvalidArgument(format!(
                    "edge ({}, {}) outside {d} nodes",
                    e.from, e.to
                )));
            }
            if e.from == e.to {
                return Err(Error::InvalidArgument(format!("self-loop on node {}", e.from)));
            }
            if g.adjacent(e.from, e.to) {
                return Err(Error::InvalidArgument(format!(
                    "duplicate edge between {} and {}",
                    e.from, e.to
                )));
            }
            g.marks[e.from][e.to] = true;
            g.marks[e.to][e.from] = e.mark == EdgeMark::Undirected;
        }
        if g.has_directed_cycle() {
            return Err(Error::InvalidArgument("directed edges form a cycle".into()));
        }
        Ok(g)
    }

    pub(crate) fn from_skeleton(nodes: Vec<String>, adj: &[Vec<bool>], sepsets: Sepsets) -> Self {
        Cpdag {
            nodes,
            marks: adj.to_vec(),
            sepsets,
            conflicts: Vec::new(),
        }
    }

    pub fn nodes(&self) -> &[String] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn sepsets(&self) -> &Sepsets {
        &self.sepsets
    }

    pub fn sepset(&self, a: usize, b: usize) -> Option<&[usize]> {
        self.sepsets.get(&pair(a, b)).map(Vec::as_slice)
    }

    pub fn conflicts(&self) -> &[Conflict] {
        &self.conflicts
    }

    pub(crate) fn push_conflict(&mut self, a: usize, b: usize, reason: impl Into<String>) {
        self.conflicts.push(Conflict {
            edge: pair(a, b),
            reason: reason.into(),
        });
    }

    pub fn adjacent(&self, a: usize, b: usize) -> bool {
        self.marks[a][b] || self.marks[b][a]
    }

    pub fn is_directed(&self, a: usize, b: usize) -> bool {
        self.marks[a][b] && !self.marks[b][a]
    }

    pub fn is_undirected(&self, a: usize, b: usize) -> bool {
        self.marks[a][b] && self.marks[b][a]
    }

    pub(crate) fn orient(&mut self, a: usize, b: usize) {
        self.marks[a][b] = true;
        self.marks[b][a] = false;
    }

    pub fn neighbors(&self, a: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(move |&b| self.adjacent(a, b))
    }

    /// Edges in `(min, max)` order; directed edges carry their true direction.
    pub fn edges(&self) -> Vec<Edge> {
        let mut out = Vec::new();
        for a in 0..self.len() {
            for b in a + 1..self.len() {
                if self.is_undirected(a, b) {
                    out.push(Edge { from: a, to: b, mark: EdgeMark::Undirected });
                } else if self.is_directed(a, b) {
                    out.push(Edge { from: a, to: b, mark: EdgeMark::Directed });
                } else if self.is_directed(b, a) {
                    out.push(Edge { from: b, to: a, mark: EdgeMark::Directed });
                }
            }
        }
        out
    }

    pub fn skeleton(&self) -> BTreeSet<(usize, usize)> {
        self.edges().iter().map(|e| pair(e.from, e.to)).collect()
    }

    /// Triples `(a, c, b)` with `a -> c <- b`, `a < b` and `a, b` nonadjacent.
    pub fn v_structures(&self) -> BTreeSet<(usize, usize, usize)> {
        let d = self.len();
        let mut out = BTreeSet::new();
        for c in 0..d {
            for a in 0..d {
                for b in a + 1..d {
                    if self.is_directed(a, c) && self.is_directed(b, c) && !self.adjacent(a, b) {
                        out.insert((a, c, b));
                    }
                }
            }
        }
        out
    }

    /// True when a directed path leads from `from` to `to`.
    pub fn has_directed_path(&self, from: usize, to: usize) -> bool {
        let mut seen = vec![false; self.len()];
        let mut stack = vec![from];
        while let Some(v) = stack.pop() {
            if v == to {
                return true;
            }
            if std::mem::replace(&mut seen[v], true) {
                continue;
            }
            stack.extend((0..self.len()).filter(|&w| self.is_directed(v, w)));
        }
        false
    }

    pub fn has_directed_cycle(&self) -> bool {
        (0..self.len()).any(|a| {
            (0..self.len()).any(|b| self.is_directed(a, b) && self.has_directed_path(b, a))
        })
    }

    /// Graphviz text; undirected edges carry `dir=none`.
    pub fn to_dot(&self) -> String {
        let mut s = String::from("digraph cpdag {\n");
        for name in &self.nodes {
            let _ = writeln!(s, "  \"{}\";", escape(name));
        }
        for e in self.edges() {
            let attr = match e.mark {
                EdgeMark::Directed => "",
                EdgeMark::Undirected => " [dir=none]",
            };
            let _ = writeln!(
                s,
                "  \"{}\" -> \"{}\"{attr};",
                escape(&self.nodes[e.from]),
                escape(&self.nodes[e.to])
            );
        }
        s.push_str("}\n");
        s
    }
}

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

/// True iff both graphs share the skeleton and the v-structures.
pub fn markov_equivalent(g1: &Cpdag, g2: &Cpdag) -> Result<bool> {
    if g1.nodes != g2.nodes {
        return Err(Error::DimensionMismatch(format!(
            "node sets differ: {:?} vs {:?}",
            g1.nodes, g2.nodes
        )));
    }
    Ok(g1.skeleton() == g2.skeleton() && g1.v_structures() == g2.v_structures())
}

#[derive(Serialize, Deserialize)]
struct SepsetJson {
    pair: (String, String),
    set: Vec<String>,
}

#[derive(Serialize, Deserialize)]
struct CpdagJson {
    nodes: Vec<String>,
    directed: Vec<(String, String)>,
    undirected: Vec<(String, String)>,
    sepsets: Vec<SepsetJson>,
    #[serde(default)]
    conflicts: Vec<Conflict>,
}

impl From<Cpdag> for CpdagJson {
    fn from(g: Cpdag) -> Self {
        let name = |i: usize| g.nodes[i].clone();
        let mut directed = Vec::new();
        let mut undirected = Vec::new();
        for e in g.edges() {
            let p = (name(e.from), name(e.to));
            match e.mark {
                EdgeMark::Directed => directed.push(p),
                EdgeMark::Undirected => undirected.push(p),
            }
        }
        let sepsets = g
            .sepsets
            .iter()
            .map(|(&(a, b), set)| SepsetJson {
                pair: (name(a), name(b)),
                set: set.iter().map(|&i| name(i)).collect(),
            })
            .collect();
        CpdagJson {
            nodes: g.nodes.clone(),
            directed,
            undirected,
            sepsets,
            conflicts: g.conflicts.clone(),
        }
    }
}

impl TryFrom<CpdagJson> for Cpdag {
    type Error = Error;

    fn try_from(j: CpdagJson) -> Result<Self> {
        let index = |s: &str| {
            j.nodes
                .iter()
                .position(|n| n == s)
                .ok_or_else(|| Error::MissingColumn(s.to_string()))
        };
        let mut edges = Vec::new();
        for (list, mark) in [(&j.directed, EdgeMark::Directed), (&j.undirected, EdgeMark::Undirected)] {
            for (a, b) in list {
                edges.push(Edge { from: index(a)?, to: index(b)?, mark });
            }
        }
        let mut g = Cpdag::from_edges(j.nodes.clone(), &edges)?;
        for s in &j.sepsets {
            let set = s.set.iter().map(|v| index(v)).collect::<Result<Vec<_>>>()?;
            g.sepsets.insert(pair(index(&s.pair.0)?, index(&s.pair.1)?), set);
        }
        g.conflicts = j.conflicts;
        Ok(g)
    }
}

/// Directed acyclic graph stored as parent lists.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dag {
    parents: Vec<Vec<usize>>,
}

impl Dag {
    /// Validates bounds, self-loops and acyclicity. `edges` are `(from, to)`.
    pub fn new(num_nodes: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut parents = vec![Vec::new(); num_nodes];
        for &(a, b) in edges {
            if a >= num_nodes || b >= num_nodes || a == b {
                return Err(Error::InvalidArgument(format!("bad edge ({a}, {b})")));
            }
            if parents[b].contains(&a) || parents[a].contains(&b) {
                return Err(Error::InvalidArgument(format!("duplicate edge ({a}, {b})")));
            }
            parents[b].push(a);
        }
        for p in &mut parents {
            p.sort_unstable();
        }
        let dag = Dag { parents };
        if dag.topological_order().is_none() {
            return Err(Error::InvalidArgument("edges form a cycle".into()));
        }
        Ok(dag)
    }

    pub fn len(&self) -> usize {
        self.parents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parents.is_empty()
    }

    pub fn parents(&self, v: usize) -> &[usize] {
        &self.parents[v]
    }

    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out: Vec<_> = self
            .parents
            .iter()
            .enumerate()
            .flat_map(|(b, ps)| ps.iter().map(move |&a| (a, b)))
            .collect();
        out.sort_unstable();
        out
    }

    pub fn topological_order(&self) -> Option<Vec<usize>> {
        let d = self.len();
        let mut indegree: Vec<usize> = self.parents.iter().map(Vec::len).collect();
        let mut ready: Vec<usize> = (0..d).filter(|&v| indegree[v] == 0).rev().collect();
        let mut order = Vec::with_capacity(d);
        while let Some(v) = ready.pop() {
            order.push(v);
            for w in (0..d).rev() {
                if self.parents[w].contains(&v) {
                    indegree[w] -= 1;
                    if indegree[w] == 0 {
                        ready.push(w);
                    }
                }
            }
        }
        (order.len() == d).then_some(order)
    }

    /// `x` and `y` d-separated by `z`, via the moral graph of the ancestral set.
    pub fn d_separated(&self, x: usize, y: usize, z: &[usize]) -> bool {
        let d = self.len();
        let mut anc = vec![false; d];
        let mut stack: Vec<usize> = [x, y].iter().chain(z).copied().collect();
        while let Some(v) = stack.pop() {
            if !std::mem::replace(&mut anc[v], true) {
                stack.extend(&self.parents[v]);
            }
        }
        let mut moral = vec![vec![false; d]; d];
        for v in (0..d).filter(|&v| anc[v]) {
            let ps = &self.parents[v];
            for (i, &a) in ps.iter().enumerate() {
                moral[a][v] = true;
                moral[v][a] = true;
                for &b in &ps[i + 1..] {
                    moral[a][b] = true;
                    moral[b][a] = true;
                }
            }
        }
        let mut seen = vec![false; d];
        for &v in z {
            seen[v] = true;
        }
        let mut stack = vec![x];
        while let Some(v) = stack.pop() {
            if v == y {
                return false;
            }
            if std::mem::replace(&mut seen[v], true) {
                continue;
            }
            stack.extend((0..d).filter(|&w| anc[w] && moral[v][w] && !seen[w]));
        }
        true
    }

    /// The Markov equivalence class: skeleton, v-structures, then the
    /// orientation closure.
    pub fn to_cpdag(&self, nodes: Vec<String>) -> Result<Cpdag> {
        if nodes.len() != self.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} names for {} nodes",
                nodes.len(),
                self.len()
            )));
        }
        let d = self.len();
        let mut adj = vec![vec![false; d]; d];
        for (a, b) in self.edges() {
            adj[a][b] = true;
            adj[b][a] = true;
        }
        let mut g = Cpdag::from_skeleton(nodes, &adj, Sepsets::new());
        for c in 0..d {
            let ps = &self.parents[c];
            for (i, &a) in ps.iter().enumerate() {
                for &b in &ps[i + 1..] {
                    if !adj[a][b] {
                        g.orient(a, c);
                        g.orient(b, c);
                    }
                }
            }
        }
        super::orient::apply_meek_rules(&mut g);
        Ok(g)
    }

    /// Every DAG on `num_nodes` labelled nodes. Exponential; meant for `<= 5`.
    pub fn enumerate(num_nodes: usize) -> Vec<Dag> {
        let pairs: Vec<(usize, usize)> = (0..num_nodes)
            .flat_map(|a| (a + 1..num_nodes).map(move |b| (a, b)))
            .collect();
        let mut out = Vec::new();
        let total = 3usize.pow(pairs.len() as u32);
        for code in 0..total {
            let mut c = code;
            let mut edges = Vec::new();
            for &(a, b) in &pairs {
                match c % 3 {
                    1 => edges.push((a, b)),
                    2 => edges.push((b, a)),
                    _ => {}
                }
                c /= 3;
            }
            if let Ok(dag) = Dag::new(num_nodes, &edges) {
                out.push(dag);
            }
        }
        out
    }
}

pub(crate) fn default_names(d: usize) -> Vec<String> {
    (0..d).map(|i| format!("X{i}")).collect()
}
