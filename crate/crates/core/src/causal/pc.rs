//! PC-stable skeleton search.

use rayon::prelude::*;

use super::graph::{default_names, pair, Cpdag, Dag, Sepsets};
use super::orient::orient_cpdag;
use crate::error::{Error, Result};

/// A conditional independence oracle over variables `0..num_vars()`.
pub trait IndependenceTest: Sync {
    fn num_vars(&self) -> usize;

    /// p-value for `x _||_ y | z`; larger means more evidence of independence.
    fn p_value(&self, x: usize, y: usize, z: &[usize]) -> Result<f64>;

    fn names(&self) -> Vec<String> {
        default_names(self.num_vars())
    }
}

/// Answers from d-separation in a known DAG: p = 1 if separated, 0 otherwise.
#[derive(Debug, Clone)]
pub struct DsepOracle {
    pub dag: Dag,
}

impl IndependenceTest for DsepOracle {
    fn num_vars(&self) -> usize {
        self.dag.len()
    }

    fn p_value(&self, x: usize, y: usize, z: &[usize]) -> Result<f64> {
        Ok(if self.dag.d_separated(x, y, z) { 1.0 } else { 0.0 })
    }
}

/// Undirected skeleton with the sepset recorded for each removed edge.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Skeleton {
    pub nodes: Vec<String>,
    pub adjacency: Vec<Vec<bool>>,
    pub sepsets: Sepsets,
}

impl Skeleton {
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let d = self.nodes.len();
        (0..d)
            .flat_map(|a| (a + 1..d).map(move |b| (a, b)))
            .filter(|&(a, b)| self.adjacency[a][b])
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PcOptions {
    pub alpha: f64,
    /// Largest conditioning set size; `None` means `d - 2`.
    pub max_cond: Option<usize>,
    /// Evaluate each level's queries on the rayon pool. Results are identical
    /// to the sequential run.
    pub parallel: bool,
}

impl PcOptions {
    pub fn new(alpha: f64) -> Self {
        PcOptions {
            alpha,
            max_cond: None,
            parallel: false,
        }
    }
}

/// PC-stable: each level tests against adjacency sets frozen at the start
/// of the level; subsets are visited in lexicographic order and the first
/// separating set is kept.
pub fn pc_skeleton<T: IndependenceTest + ?Sized>(test: &T, options: &PcOptions) -> Result<Skeleton> {
    let d = test.num_vars();
    if d < 2 {
        return Err(Error::InvalidArgument("PC needs at least two variables".into()));
    }
    if !(options.alpha > 0.0 && options.alpha < 1.0) {
        return Err(Error::InvalidArgument(format!("alpha {} not in (0, 1)", options.alpha)));
    }
    let max_cond = options.max_cond.unwrap_or(d - 2);
    let mut adj = vec![vec![true; d]; d];
    for (i, row) in adj.iter_mut().enumerate() {
        row[i] = false;
    }
    let mut sepsets = Sepsets::new();

    for level in 0..=max_cond {
        let frozen: Vec<Vec<usize>> = (0..d)
            .map(|i| (0..d).filter(|&j| adj[i][j]).collect())
            .collect();
        if !(0..d).any(|i| frozen[i].len() > level) {
            break;
        }
        let pairs: Vec<(usize, usize)> = (0..d)
            .flat_map(|a| (a + 1..d).map(move |b| (a, b)))
            .filter(|&(a, b)| adj[a][b])
            .collect();
        let search = |&(a, b): &(usize, usize)| separate(test, &frozen, a, b, level, options.alpha);
        let found: Vec<Option<Vec<usize>>> = if options.parallel {
            pairs.par_iter().map(search).collect::<Result<_>>()?
        } else {
            pairs.iter().map(search).collect::<Result<_>>()?
        };
        for (&(a, b), sep) in pairs.iter().zip(found) {
            if let Some(s) = sep {
                adj[a][b] = false;
                adj[b][a] = false;
                sepsets.insert(pair(a, b), s);
            }
        }
    }
    Ok(Skeleton {
        nodes: test.names(),
        adjacency: adj,
        sepsets,
    })
}

/// First separating set for the pair, trying subsets of `adj(a) \ b` and
/// then of `adj(b) \ a`.
fn separate<T: IndependenceTest + ?Sized>(
    test: &T,
    frozen: &[Vec<usize>],
    a: usize,
    b: usize,
    level: usize,
    alpha: f64,
) -> Result<Option<Vec<usize>>> {
    for (x, y) in [(a, b), (b, a)] {
        let pool: Vec<usize> = frozen[x].iter().copied().filter(|&v| v != y).collect();
        if pool.len() < level {
            continue;
        }
        for s in Subsets::new(pool.len(), level) {
            let z: Vec<usize> = s.iter().map(|&i| pool[i]).collect();
            let p = test.p_value(x, y, &z).map_err(|e| Error::OracleFailure {
                x,
                y,
                z: z.clone(),
                source: Box::new(e),
            })?;
            if p > alpha {
                return Ok(Some(z));
            }
        }
    }
    Ok(None)
}

/// Size-`k` index subsets of `0..n` in lexicographic order.
struct Subsets {
    n: usize,
    current: Option<Vec<usize>>,
}

impl Subsets {
    fn new(n: usize, k: usize) -> Self {
        Subsets {
            n,
            current: (k <= n).then(|| (0..k).collect()),
        }
    }
}

impl Iterator for Subsets {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        let out = self.current.clone()?;
        let k = out.len();
        let mut next = out.clone();
        let mut i = k;
        loop {
            if i == 0 {
                self.current = None;
                break;
            }
            i -= 1;
            if next[i] < self.n - k + i {
                next[i] += 1;
                for j in i + 1..k {
                    next[j] = next[j - 1] + 1;
                }
                self.current = Some(next);
                break;
            }
        }
        Some(out)
    }
}

/// Skeleton search followed by orientation.
pub fn pc<T: IndependenceTest + ?Sized>(test: &T, options: &PcOptions) -> Result<Cpdag> {
    Ok(orient_cpdag(&pc_skeleton(test, options)?))
}
