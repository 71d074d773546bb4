//! Undirected simple networks and the structural queries the simulator and
//! the centralized scheme need.

use std::collections::{BTreeSet, VecDeque};
use std::io::BufRead;

use rand::seq::SliceRandom;
use rand::SeedableRng;

use crate::dist::Stream;
use crate::error::{Error, Result};

/// Attempts the configuration model gets before giving up.
pub const REGULAR_RETRY_BUDGET: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Network {
    adjacency: Vec<Vec<usize>>,
}

impl Network {
    /// Builds a network from an edge iterator; duplicate and reversed pairs
    /// merge, self-loops are rejected.
    pub fn from_edges<I>(nodes: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut sets = vec![BTreeSet::new(); nodes];
        for (u, v) in edges {
            if u >= nodes || v >= nodes {
                return Err(Error::OutOfRange {
                    what: "node",
                    index: u.max(v),
                    limit: nodes,
                });
            }
            if u == v {
                return Err(Error::Parameter(format!("self-loop at node {u}")));
            }
            sets[u].insert(v);
            sets[v].insert(u);
        }
        Ok(Self {
            adjacency: sets.into_iter().map(|s| s.into_iter().collect()).collect(),
        })
    }

    /// A lone node with no neighbors.
    pub fn single() -> Self {
        Self {
            adjacency: vec![Vec::new()],
        }
    }

    pub fn complete(n: usize) -> Result<Self> {
        check_size(n)?;
        let edges = (0..n).flat_map(|u| ((u + 1)..n).map(move |v| (u, v)));
        Self::from_edges(n, edges)
    }

    pub fn cycle(n: usize) -> Result<Self> {
        check_size(n)?;
        Self::from_edges(n, (0..n).map(|u| (u, (u + 1) % n)))
    }

    /// Node 0 is the center.
    pub fn star(n: usize) -> Result<Self> {
        check_size(n)?;
        Self::from_edges(n, (1..n).map(|v| (0, v)))
    }

    /// Random simple `d`-regular graph by configuration-model pairing,
    /// restarting from scratch whenever a loop or multi-edge appears.
    pub fn regular_random(n: usize, d: usize, seed: u64) -> Result<Self> {
        if d >= n || (n * d) % 2 == 1 {
            return Err(Error::Parameter(format!(
                "no simple {d}-regular graph on {n} nodes (need d < N and N*d even)"
            )));
        }
        if d == n - 1 {
            return Self::complete(n);
        }
        let mut rng = Stream::seed_from_u64(seed);
        let mut stubs: Vec<usize> = (0..n).flat_map(|u| std::iter::repeat(u).take(d)).collect();
        'attempt: for _ in 0..REGULAR_RETRY_BUDGET {
            stubs.shuffle(&mut rng);
            let mut sets = vec![BTreeSet::new(); n];
            for pair in stubs.chunks_exact(2) {
                let (u, v) = (pair[0], pair[1]);
                if u == v || !sets[u].insert(v) {
                    continue 'attempt;
                }
                sets[v].insert(u);
            }
            return Ok(Self {
                adjacency: sets.into_iter().map(|s| s.into_iter().collect()).collect(),
            });
        }
        Err(Error::Generation(format!(
            "no simple {d}-regular pairing on {n} nodes after {REGULAR_RETRY_BUDGET} attempts"
        )))
    }

    /// Reads `u v` pairs (0-indexed), one per line. Blank lines and lines
    /// starting with `#` are skipped.
    pub fn from_edge_list<R: BufRead>(input: R) -> Result<Self> {
        let mut edges = Vec::new();
        let mut nodes = 0;
        for (i, line) in input.lines().enumerate() {
            let line = line?;
            let body = line.trim();
            if body.is_empty() || body.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = body.split_whitespace().collect();
            if fields.len() != 2 {
                return Err(Error::Parse {
                    line: i + 1,
                    msg: format!("expected \"u v\", got {body:?}"),
                });
            }
            let parse = |s: &str| {
                s.parse::<usize>().map_err(|e| Error::Parse {
                    line: i + 1,
                    msg: format!("bad node index {s:?}: {e}"),
                })
            };
            let (u, v) = (parse(fields[0])?, parse(fields[1])?);
            if u == v {
                return Err(Error::Parse {
                    line: i + 1,
                    msg: format!("self-loop at node {u}"),
                });
            }
            nodes = nodes.max(u + 1).max(v + 1);
            edges.push((u, v));
        }
        Self::from_edges(nodes, edges)
    }

    pub fn nodes(&self) -> usize {
        self.adjacency.len()
    }

    pub fn neighbors(&self, node: usize) -> &[usize] {
        &self.adjacency[node]
    }

    pub fn degree(&self, node: usize) -> usize {
        self.adjacency[node].len()
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.adjacency
            .iter()
            .enumerate()
            .flat_map(|(u, adj)| adj.iter().filter(move |&&v| v > u).map(move |&v| (u, v)))
    }

    pub fn max_degree(&self) -> usize {
        self.adjacency.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn is_complete(&self) -> bool {
        let n = self.nodes();
        self.adjacency.iter().all(|a| a.len() + 1 == n)
    }

    /// BFS hop distances from `root`; `None` for unreachable nodes.
    pub fn distances_from(&self, root: usize) -> Vec<Option<usize>> {
        let mut dist = vec![None; self.nodes()];
        dist[root] = Some(0);
        let mut queue = VecDeque::from([root]);
        while let Some(u) = queue.pop_front() {
            let du = dist[u].unwrap_or(0);
            for &v in &self.adjacency[u] {
                if dist[v].is_none() {
                    dist[v] = Some(du + 1);
                    queue.push_back(v);
                }
            }
        }
        dist
    }

    pub fn is_connected(&self) -> bool {
        self.nodes() > 0 && self.distances_from(0).iter().all(Option::is_some)
    }

    pub fn diameter(&self) -> Result<usize> {
        let mut best = 0;
        for root in 0..self.nodes() {
            for d in self.distances_from(root) {
                best = best.max(d.ok_or(Error::Disconnected)?);
            }
        }
        Ok(best)
    }

    /// Highest-degree node, lowest index on ties.
    pub fn max_degree_node(&self) -> Result<usize> {
        if !self.is_connected() {
            return Err(Error::Disconnected);
        }
        let mut best = 0;
        for u in 1..self.nodes() {
            if self.degree(u) > self.degree(best) {
                best = u;
            }
        }
        Ok(best)
    }

    /// `parent[u]` is the lowest-index neighbor of `u` one hop closer to
    /// `root`; `parent[root]` is `None`.
    pub fn bfs_parent_tree(&self, root: usize) -> Result<Vec<Option<usize>>> {
        if root >= self.nodes() {
            return Err(Error::OutOfRange {
                what: "root",
                index: root,
                limit: self.nodes(),
            });
        }
        let dist: Vec<usize> = self
            .distances_from(root)
            .into_iter()
            .map(|d| d.ok_or(Error::Disconnected))
            .collect::<Result<_>>()?;
        Ok((0..self.nodes())
            .map(|u| {
                if u == root {
                    None
                } else {
                    self.adjacency[u].iter().copied().find(|&v| dist[v] + 1 == dist[u])
                }
            })
            .collect())
    }
}

fn check_size(n: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::Parameter(format!("network needs at least 2 nodes, got {n}")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn floyd_warshall_diameter(net: &Network) -> usize {
        let n = net.nodes();
        let inf = usize::MAX / 4;
        let mut d = vec![vec![inf; n]; n];
        for u in 0..n {
            d[u][u] = 0;
            for &v in net.neighbors(u) {
                d[u][v] = 1;
            }
        }
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    if d[i][k] + d[k][j] < d[i][j] {
                        d[i][j] = d[i][k] + d[k][j];
                    }
                }
            }
        }
        d.iter().flatten().copied().max().unwrap()
    }

    fn assert_simple_symmetric(net: &Network) {
        for u in 0..net.nodes() {
            let adj = net.neighbors(u);
            assert!(adj.windows(2).all(|w| w[0] < w[1]), "sorted, no duplicates");
            for &v in adj {
                assert_ne!(u, v);
                assert!(net.neighbors(v).contains(&u));
            }
        }
    }

    #[test]
    fn standard_constructions() {
        let k5 = Network::complete(5).unwrap();
        assert_eq!(k5.edge_count(), 10);
        assert!((0..5).all(|u| k5.degree(u) == 4));

        let star = Network::star(10).unwrap();
        assert_eq!(star.diameter().unwrap(), 2);
        assert_eq!(star.max_degree(), 9);
        assert!((1..10).all(|u| star.degree(u) == 1));

        let c10 = Network::cycle(10).unwrap();
        assert_eq!(c10.diameter().unwrap(), 5);
        assert!((0..10).all(|u| c10.degree(u) == 2));
        assert_eq!(Network::cycle(6).unwrap().diameter().unwrap(), 3);

        assert!(Network::complete(1).is_err());
        assert!(Network::star(0).is_err());
    }

    #[test]
    fn regular_random_is_simple_regular_and_deterministic() {
        let g = Network::regular_random(10, 5, 3).unwrap();
        let degree_counts: Vec<usize> = (0..10).map(|u| g.edges().filter(|&(a, b)| a == u || b == u).count()).collect();
        assert_eq!(g.edge_count(), 25);
        assert!(degree_counts.iter().all(|&d| d == 5));
        assert_simple_symmetric(&g);

        let a = Network::regular_random(50, 5, 17).unwrap();
        let b = Network::regular_random(50, 5, 17).unwrap();
        assert_eq!(a.edges().collect::<Vec<_>>(), b.edges().collect::<Vec<_>>());
        assert!((0..50).all(|u| a.degree(u) == 5));

        assert_eq!(Network::regular_random(6, 5, 1).unwrap(), Network::complete(6).unwrap());
        assert!(matches!(Network::regular_random(5, 3, 1), Err(Error::Parameter(_))));
        assert!(Network::regular_random(4, 4, 1).is_err());
    }

    #[test]
    fn diameter_matches_floyd_warshall() {
        for seed in 0..20 {
            let g = Network::regular_random(10, 3, seed).unwrap();
            match g.diameter() {
                Ok(d) => assert_eq!(d, floyd_warshall_diameter(&g)),
                Err(Error::Disconnected) => assert!(!g.is_connected()),
                Err(e) => panic!("{e}"),
            }
        }
    }

    #[test]
    fn parent_tree_on_star_and_cycle() {
        let star = Network::star(10).unwrap();
        let parents = star.bfs_parent_tree(0).unwrap();
        assert_eq!(parents[0], None);
        assert!((1..10).all(|u| parents[u] == Some(0)));

        let c6 = Network::cycle(6).unwrap();
        let parents = c6.bfs_parent_tree(0).unwrap();
        assert_eq!(
            parents,
            vec![None, Some(0), Some(1), Some(2), Some(5), Some(0)]
        );
    }

    #[test]
    fn parents_reach_root_in_distance_steps() {
        let g = Network::regular_random(30, 3, 12).unwrap();
        if !g.is_connected() {
            return;
        }
        let root = g.max_degree_node().unwrap();
        let parents = g.bfs_parent_tree(root).unwrap();
        let dist = g.distances_from(root);
        for u in 0..g.nodes() {
            let mut steps = 0;
            let mut at = u;
            while let Some(p) = parents[at] {
                assert!(g.neighbors(at).contains(&p));
                at = p;
                steps += 1;
            }
            assert_eq!(at, root);
            assert_eq!(Some(steps), dist[u]);
        }
    }

    #[test]
    fn disconnected_queries_fail() {
        let g = Network::from_edges(4, [(0, 1), (2, 3)]).unwrap();
        assert!(matches!(g.diameter(), Err(Error::Disconnected)));
        assert!(matches!(g.max_degree_node(), Err(Error::Disconnected)));
        assert!(matches!(g.bfs_parent_tree(0), Err(Error::Disconnected)));
    }

    #[test]
    fn max_degree_ties_go_low() {
        assert_eq!(Network::complete(5).unwrap().max_degree_node().unwrap(), 0);
        let g = Network::from_edges(4, [(0, 1), (1, 2), (2, 3)]).unwrap();
        assert_eq!(g.max_degree_node().unwrap(), 1);
    }

    #[test]
    fn edge_list_parsing() {
        let path = Network::from_edge_list(&b"0 1\n1 2\n"[..]).unwrap();
        assert_eq!(path, Network::from_edges(3, [(0, 1), (1, 2)]).unwrap());

        let merged = Network::from_edge_list(&b"0 1\n1 0\n"[..]).unwrap();
        assert_eq!(merged.edge_count(), 1);

        let k4 = Network::from_edge_list(&b"# k4\n2 3\n0 3\n1 0\n\n3 1\n2 0\n1 2\n"[..]).unwrap();
        assert_eq!(k4, Network::complete(4).unwrap());

        assert!(matches!(
            Network::from_edge_list(&b"0 1\n2 2\n"[..]),
            Err(Error::Parse { line: 2, .. })
        ));
        assert!(matches!(
            Network::from_edge_list(&b"0 1\n1 two\n"[..]),
            Err(Error::Parse { line: 2, .. })
        ));
        assert!(matches!(
            Network::from_edge_list(&b"0 1 2\n"[..]),
            Err(Error::Parse { line: 1, .. })
        ));
    }
}
