//! Ground-truth machinery: DAGs with optional latent-variable marking,
//! d-separation, Markov blankets, and a random-graph generator for the
//! recovery studies.
//!
//! Separation over the marginal observed distribution is answered by
//! d-separation on the parent DAG with conditioning sets restricted to
//! observed nodes; no separate ancestral-graph structure is built.

use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::criteria::{Criterion, OracleCriterion};
use crate::error::{Error, Result};

/// Directed acyclic graph over nodes `0..n_nodes`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Dag {
    n_nodes: usize,
    edges: Vec<(usize, usize)>,
    parents: Vec<Vec<usize>>,
    children: Vec<Vec<usize>>,
    latent: Vec<bool>,
}

impl Dag {
    /// Validates and builds a DAG from an edge list (`parent -> child` pairs)
    /// and a set of latent node indices.
    pub fn new(n_nodes: usize, edges: &[(usize, usize)], latent: &[usize]) -> Result<Self> {
        let mut parents = vec![Vec::new(); n_nodes];
        let mut children = vec![Vec::new(); n_nodes];
        let mut sorted_edges: Vec<(usize, usize)> = edges.to_vec();
        sorted_edges.sort_unstable();

        for (i, &(a, b)) in sorted_edges.iter().enumerate() {
            if a >= n_nodes || b >= n_nodes {
                return Err(Error::InvalidNode(a.max(b)));
            }
            if a == b {
                return Err(Error::InvalidEdge(a, b));
            }
            if i > 0 && sorted_edges[i - 1] == (a, b) {
                return Err(Error::InvalidEdge(a, b));
            }
            if sorted_edges.binary_search(&(b, a)).is_ok() {
                return Err(Error::InvalidEdge(a, b));
            }
            parents[b].push(a);
            children[a].push(b);
        }
        parents.iter_mut().for_each(|v| v.sort_unstable());
        children.iter_mut().for_each(|v| v.sort_unstable());

        let mut latent_mask = vec![false; n_nodes];
        for &v in latent {
            if v >= n_nodes {
                return Err(Error::InvalidNode(v));
            }
            latent_mask[v] = true;
        }

        let dag = Dag {
            n_nodes,
            edges: sorted_edges,
            parents,
            children,
            latent: latent_mask,
        };
        if dag.has_cycle() {
            return Err(Error::CyclicGraph);
        }
        Ok(dag)
    }

    fn has_cycle(&self) -> bool {
        // Kahn's algorithm; any node left over sits on a cycle.
        let mut indegree: Vec<usize> = self.parents.iter().map(Vec::len).collect();
        let mut queue: Vec<usize> = (0..self.n_nodes).filter(|&v| indegree[v] == 0).collect();
        let mut seen = 0;
        while let Some(v) = queue.pop() {
            seen += 1;
            for &c in &self.children[v] {
                indegree[c] -= 1;
                if indegree[c] == 0 {
                    queue.push(c);
                }
            }
        }
        seen != self.n_nodes
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn parents_of(&self, v: usize) -> &[usize] {
        &self.parents[v]
    }

    pub fn children_of(&self, v: usize) -> &[usize] {
        &self.children[v]
    }

    pub fn is_latent(&self, v: usize) -> bool {
        self.latent[v]
    }

    pub fn has_latent(&self) -> bool {
        self.latent.iter().any(|&l| l)
    }

    pub fn latent_nodes(&self) -> Vec<usize> {
        (0..self.n_nodes).filter(|&v| self.latent[v]).collect()
    }

    /// Observed nodes other than `target`, ascending. This is the
    /// variable-index order used by the oracle criterion.
    pub fn observed_non_target(&self, target: usize) -> Vec<usize> {
        (0..self.n_nodes)
            .filter(|&v| v != target && !self.latent[v])
            .collect()
    }

    fn check_node(&self, v: usize) -> Result<()> {
        if v >= self.n_nodes {
            return Err(Error::InvalidNode(v));
        }
        Ok(())
    }

    /// Nodes d-connected to `x` given `z`, as a mask over all nodes.
    ///
    /// Standard two-phase reachability: mark ancestors of `z`, then walk
    /// trails keeping track of the direction each node was entered from. A
    /// collider passes the trail on to its parents exactly when it is in `z`
    /// or has a descendant there.
    pub(crate) fn reachable_from(&self, x: usize, z: &[usize]) -> Vec<bool> {
        let mut in_z = vec![false; self.n_nodes];
        for &v in z {
            in_z[v] = true;
        }
        // Phase 1: z plus all ancestors of z.
        let mut anc_z = in_z.clone();
        let mut stack: Vec<usize> = z.to_vec();
        while let Some(v) = stack.pop() {
            for &p in &self.parents[v] {
                if !anc_z[p] {
                    anc_z[p] = true;
                    stack.push(p);
                }
            }
        }
        // Phase 2: trail walk. Entry direction: FROM_CHILD means the trail
        // arrived moving child -> parent.
        const FROM_CHILD: usize = 0;
        const FROM_PARENT: usize = 1;
        let mut visited = vec![[false; 2]; self.n_nodes];
        let mut reachable = vec![false; self.n_nodes];
        let mut work: Vec<(usize, usize)> = vec![(x, FROM_CHILD)];
        while let Some((v, dir)) = work.pop() {
            if visited[v][dir] {
                continue;
            }
            visited[v][dir] = true;
            if !in_z[v] {
                reachable[v] = true;
            }
            if dir == FROM_CHILD {
                if !in_z[v] {
                    for &p in &self.parents[v] {
                        work.push((p, FROM_CHILD));
                    }
                    for &c in &self.children[v] {
                        work.push((c, FROM_PARENT));
                    }
                }
            } else {
                if !in_z[v] {
                    for &c in &self.children[v] {
                        work.push((c, FROM_PARENT));
                    }
                }
                if anc_z[v] {
                    for &p in &self.parents[v] {
                        work.push((p, FROM_CHILD));
                    }
                }
            }
        }
        reachable
    }

    /// True iff every path between `x` and `y` is blocked by `z`.
    pub fn d_separated(&self, x: usize, y: usize, z: &[usize]) -> Result<bool> {
        self.check_node(x)?;
        self.check_node(y)?;
        for &v in z {
            self.check_node(v)?;
        }
        if x == y {
            return Err(Error::InvalidQuery("x and y must differ".into()));
        }
        if z.contains(&x) || z.contains(&y) {
            return Err(Error::InvalidQuery(
                "endpoints may not be in the conditioning set".into(),
            ));
        }
        Ok(!self.reachable_from(x, z)[y])
    }

    /// Set-level separation: every cross pair (x, y) must be d-separated.
    /// Empty `xs` or `ys` is vacuously separated.
    pub fn set_d_separated(&self, xs: &[usize], ys: &[usize], z: &[usize]) -> Result<bool> {
        for &x in xs {
            if ys.contains(&x) || z.contains(&x) {
                return Err(Error::InvalidQuery("sets must be disjoint".into()));
            }
        }
        for &y in ys {
            if z.contains(&y) {
                return Err(Error::InvalidQuery("sets must be disjoint".into()));
            }
        }
        for &x in xs {
            self.check_node(x)?;
            let reach = self.reachable_from(x, z);
            for &y in ys {
                self.check_node(y)?;
                if reach[y] {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }

    /// Markov blanket of `t` in a fully observed DAG: parents, children and
    /// spouses. Errors when the graph has latent nodes; use
    /// [`Dag::brute_force_mb`] for the marginal blanket in that case.
    pub fn markov_blanket(&self, t: usize) -> Result<Vec<usize>> {
        self.check_node(t)?;
        if self.has_latent() {
            return Err(Error::LatentNodesPresent);
        }
        let mut mb: Vec<usize> = Vec::new();
        mb.extend_from_slice(&self.parents[t]);
        mb.extend_from_slice(&self.children[t]);
        for &c in &self.children[t] {
            mb.extend_from_slice(&self.parents[c]);
        }
        mb.sort_unstable();
        mb.dedup();
        mb.retain(|&v| v != t);
        Ok(mb)
    }

    /// Exhaustive search for the minimum-size observed set that renders `t`
    /// independent of every other observed node. Ground truth for the
    /// latent-variable case; errors when two distinct sets of the minimal
    /// size qualify, which signals a graph
    /// whose marginal blanket is not well defined for recovery checks.
    pub fn brute_force_mb(&self, t: usize) -> Result<Vec<usize>> {
        self.check_node(t)?;
        if self.latent[t] {
            return Err(Error::LatentTarget(t));
        }
        let observed = self.observed_non_target(t);
        if observed.len() > 14 {
            return Err(Error::SubsetSearchTooLarge(observed.len()));
        }
        for size in 0..=observed.len() {
            let mut found: Option<Vec<usize>> = None;
            let mut combo = Combinations::new(observed.len(), size);
            while let Some(indices) = combo.next() {
                let subset: Vec<usize> = indices.iter().map(|&i| observed[i]).collect();
                let reach = self.reachable_from(t, &subset);
                let separates = observed
                    .iter()
                    .filter(|v| !subset.contains(v))
                    .all(|&v| !reach[v]);
                if separates {
                    match &found {
                        None => found = Some(subset),
                        Some(first) => {
                            return Err(Error::NonUniqueMarkovBlanket(first.clone(), subset))
                        }
                    }
                }
            }
            if let Some(mb) = found {
                return Ok(mb);
            }
        }
        unreachable!("the full observed set always separates");
    }

    /// Edge-list text form: `n_nodes n_edges`, one `parent child` line per
    /// edge, then a `latent:` line.
    pub fn to_text(&self) -> String {
        let mut out = format!("{} {}\n", self.n_nodes, self.edges.len());
        for &(a, b) in &self.edges {
            out.push_str(&format!("{a} {b}\n"));
        }
        out.push_str("latent:");
        for v in self.latent_nodes() {
            out.push_str(&format!(" {v}"));
        }
        out.push('\n');
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        let (line_no, header) = lines
            .next()
            .ok_or_else(|| Error::GraphParse { line: 1, msg: "empty input".into() })?;
        let mut it = header.split_whitespace();
        let parse_usize = |s: Option<&str>, line: usize, what: &str| -> Result<usize> {
            s.and_then(|v| v.parse().ok())
                .ok_or_else(|| Error::GraphParse { line, msg: format!("expected {what}") })
        };
        let n_nodes = parse_usize(it.next(), line_no + 1, "node count")?;
        let n_edges = parse_usize(it.next(), line_no + 1, "edge count")?;

        let mut edges = Vec::with_capacity(n_edges);
        for _ in 0..n_edges {
            let (line_no, line) = lines.next().ok_or_else(|| Error::GraphParse {
                line: edges.len() + 2,
                msg: "missing edge line".into(),
            })?;
            let mut it = line.split_whitespace();
            let a = parse_usize(it.next(), line_no + 1, "parent index")?;
            let b = parse_usize(it.next(), line_no + 1, "child index")?;
            edges.push((a, b));
        }
        let (line_no, latent_line) = lines.next().ok_or_else(|| Error::GraphParse {
            line: n_edges + 2,
            msg: "missing latent line".into(),
        })?;
        let rest = latent_line
            .strip_prefix("latent:")
            .ok_or_else(|| Error::GraphParse {
                line: line_no + 1,
                msg: "expected 'latent:' line".into(),
            })?;
        let latent: Vec<usize> = rest
            .split_whitespace()
            .map(|s| {
                s.parse().map_err(|_| Error::GraphParse {
                    line: line_no + 1,
                    msg: format!("bad latent index '{s}'"),
                })
            })
            .collect::<Result<_>>()?;
        Dag::new(n_nodes, &edges, &latent)
    }
}

/// Generates a random DAG: fix a random topological order, include each
/// forward pair independently with `edge_prob`, then mark `n_latent` random
/// nodes latent. Node 0 is reserved as the experiment target and is never
/// marked latent. Deterministic given `seed`.
pub fn random_dag(n_nodes: usize, edge_prob: f64, n_latent: usize, seed: u64) -> Result<Dag> {
    if n_latent >= n_nodes {
        return Err(Error::InvalidArgument(format!(
            "n_latent ({n_latent}) must be smaller than n_nodes ({n_nodes})"
        )));
    }
    if !(0.0..=1.0).contains(&edge_prob) {
        return Err(Error::InvalidArgument(format!(
            "edge_prob must lie in [0, 1], got {edge_prob}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..n_nodes).collect();
    order.shuffle(&mut rng);
    let mut edges = Vec::new();
    for i in 0..n_nodes {
        for j in (i + 1)..n_nodes {
            if rng.random::<f64>() < edge_prob {
                edges.push((order[i], order[j]));
            }
        }
    }
    let mut candidates: Vec<usize> = (1..n_nodes).collect();
    candidates.shuffle(&mut rng);
    candidates.truncate(n_latent);
    Dag::new(n_nodes, &edges, &candidates)
}

/// Wraps a DAG as a perfect independence test over its observed non-target
/// nodes: forward and backward decisions answer d-separation queries, so
/// under faithfulness the criterion is an exact oracle.
pub fn oracle_criterion(dag: Arc<Dag>, target: usize) -> Result<Criterion> {
    if target >= dag.n_nodes() {
        return Err(Error::InvalidNode(target));
    }
    if dag.is_latent(target) {
        return Err(Error::LatentTarget(target));
    }
    let vars = dag.observed_non_target(target);
    Ok(Criterion::Oracle(OracleCriterion::new(dag, target, vars)))
}

/// Lexicographic k-subset enumerator over `0..n`.
struct Combinations {
    n: usize,
    indices: Vec<usize>,
    started: bool,
    done: bool,
}

impl Combinations {
    fn new(n: usize, k: usize) -> Self {
        Combinations {
            n,
            indices: (0..k).collect(),
            started: false,
            done: k > n,
        }
    }

    fn next(&mut self) -> Option<&[usize]> {
        if self.done {
            return None;
        }
        if !self.started {
            self.started = true;
            return Some(&self.indices);
        }
        let k = self.indices.len();
        if k == 0 {
            self.done = true;
            return None;
        }
        let mut i = k;
        loop {
            if i == 0 {
                self.done = true;
                return None;
            }
            i -= 1;
            if self.indices[i] != i + self.n - k {
                break;
            }
        }
        self.indices[i] += 1;
        for j in (i + 1)..k {
            self.indices[j] = self.indices[j - 1] + 1;
        }
        Some(&self.indices)
    }
}
