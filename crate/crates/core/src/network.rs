//! Directed follow graph and friendship-paradox statistics.
//!
//! An edge `u -> v` means `u` follows `v`: `v` is a friend (followee) of `u`
//! and `u` is a follower of `v`. Both adjacency directions are materialized
//! in compressed sparse rows so neighbor lookups are slices.

use std::collections::HashMap;
use std::io::{BufRead, Write};

use crate::error::{Error, Result};

/// Dense node index into a [`SocialGraph`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(pub u32);

impl NodeId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DegreeKind {
    /// Friends (followees).
    Out,
    /// Followers.
    In,
}

#[derive(Debug, Clone)]
pub struct SocialGraph {
    names: Vec<String>,
    index: HashMap<String, NodeId>,
    out_offsets: Vec<usize>,
    out_targets: Vec<NodeId>,
    in_offsets: Vec<usize>,
    in_targets: Vec<NodeId>,
}

/// Counts of edges discarded while building a graph.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct EdgeLoadReport {
    pub lines: usize,
    pub edges: usize,
    pub self_loops: usize,
    pub duplicates: usize,
    pub malformed: usize,
}

impl SocialGraph {
    /// Build from node names and index pairs. Self-loops and duplicate edges
    /// are dropped.
    pub fn from_indexed(names: Vec<String>, edges: &[(u32, u32)]) -> Self {
        Self::from_indexed_with_report(names, edges).0
    }

    fn from_indexed_with_report(names: Vec<String>, edges: &[(u32, u32)]) -> (Self, EdgeLoadReport) {
        let n = names.len();
        let mut report = EdgeLoadReport::default();
        let mut pairs: Vec<(u32, u32)> = Vec::with_capacity(edges.len());
        for &(u, v) in edges {
            assert!((u as usize) < n && (v as usize) < n, "edge endpoint out of range");
            if u == v {
                report.self_loops += 1;
            } else {
                pairs.push((u, v));
            }
        }
        pairs.sort_unstable();
        let before = pairs.len();
        pairs.dedup();
        report.duplicates = before - pairs.len();
        report.edges = pairs.len();

        let (out_offsets, out_targets) = csr(n, pairs.iter().map(|&(u, v)| (u, v)));
        let mut reversed: Vec<(u32, u32)> = pairs.iter().map(|&(u, v)| (v, u)).collect();
        reversed.sort_unstable();
        let (in_offsets, in_targets) = csr(n, reversed.into_iter());

        let index = names
            .iter()
            .enumerate()
            .map(|(i, s)| (s.clone(), NodeId(i as u32)))
            .collect();
        (
            SocialGraph {
                names,
                index,
                out_offsets,
                out_targets,
                in_offsets,
                in_targets,
            },
            report,
        )
    }

    /// Build from named edges `(follower, followee)`; nodes are created in
    /// first-appearance order.
    pub fn from_named_edges<'a, I>(edges: I) -> Self
    where
        I: IntoIterator<Item = (&'a str, &'a str)>,
    {
        let mut builder = GraphBuilder::default();
        for (u, v) in edges {
            builder.add_edge(u, v);
        }
        builder.build().0
    }

    /// Read a whitespace-delimited "follower followee" edge list. Lines
    /// starting with '#' are comments.
    pub fn read_edges<R: BufRead>(reader: R) -> Result<(Self, EdgeLoadReport)> {
        let mut builder = GraphBuilder::default();
        let mut malformed = 0;
        let mut lines = 0;
        for line in reader.lines() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            lines += 1;
            let mut parts = line.split_whitespace();
            match (parts.next(), parts.next(), parts.next()) {
                (Some(u), Some(v), None) => builder.add_edge(u, v),
                _ => malformed += 1,
            }
        }
        let (graph, mut report) = builder.build();
        report.lines = lines;
        report.malformed = malformed;
        Ok((graph, report))
    }

    pub fn write_edges<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for u in self.nodes() {
            for &v in self.friends(u) {
                writeln!(w, "{} {}", self.name(u), self.name(v))?;
            }
        }
        Ok(())
    }

    pub fn node_count(&self) -> usize {
        self.names.len()
    }

    pub fn edge_count(&self) -> usize {
        self.out_targets.len()
    }

    pub fn nodes(&self) -> impl Iterator<Item = NodeId> + '_ {
        (0..self.names.len() as u32).map(NodeId)
    }

    pub fn id(&self, user: &str) -> Option<NodeId> {
        self.index.get(user).copied()
    }

    pub fn name(&self, node: NodeId) -> &str {
        &self.names[node.index()]
    }

    /// Out-neighbors (followees) of `node`, sorted by index.
    #[inline]
    pub fn friends(&self, node: NodeId) -> &[NodeId] {
        let i = node.index();
        &self.out_targets[self.out_offsets[i]..self.out_offsets[i + 1]]
    }

    /// In-neighbors (followers) of `node`, sorted by index.
    #[inline]
    pub fn followers(&self, node: NodeId) -> &[NodeId] {
        let i = node.index();
        &self.in_targets[self.in_offsets[i]..self.in_offsets[i + 1]]
    }

    #[inline]
    pub fn out_degree(&self, node: NodeId) -> usize {
        let i = node.index();
        self.out_offsets[i + 1] - self.out_offsets[i]
    }

    #[inline]
    pub fn in_degree(&self, node: NodeId) -> usize {
        let i = node.index();
        self.in_offsets[i + 1] - self.in_offsets[i]
    }

    pub fn degree(&self, node: NodeId, kind: DegreeKind) -> usize {
        match kind {
            DegreeKind::Out => self.out_degree(node),
            DegreeKind::In => self.in_degree(node),
        }
    }

    pub fn has_edge(&self, u: NodeId, v: NodeId) -> bool {
        self.friends(u).binary_search(&v).is_ok()
    }

    /// The followees of `user`, by name.
    pub fn friends_of(&self, user: &str) -> Result<Vec<&str>> {
        let id = self.id(user).ok_or_else(|| Error::UnknownUser(user.to_string()))?;
        Ok(self.friends(id).iter().map(|&v| self.name(v)).collect())
    }

    /// Graph with every edge mirrored.
    pub fn bidirected(&self) -> SocialGraph {
        let mut edges = Vec::with_capacity(2 * self.edge_count());
        for u in self.nodes() {
            for &v in self.friends(u) {
                edges.push((u.0, v.0));
                edges.push((v.0, u.0));
            }
        }
        SocialGraph::from_indexed(self.names.clone(), &edges)
    }

    pub fn edges(&self) -> impl Iterator<Item = (NodeId, NodeId)> + '_ {
        self.nodes()
            .flat_map(move |u| self.friends(u).iter().map(move |&v| (u, v)))
    }
}

fn csr(n: usize, sorted: impl Iterator<Item = (u32, u32)>) -> (Vec<usize>, Vec<NodeId>) {
    let mut offsets = vec![0usize; n + 1];
    let mut targets = Vec::new();
    for (u, v) in sorted {
        offsets[u as usize + 1] += 1;
        targets.push(NodeId(v));
    }
    for i in 0..n {
        offsets[i + 1] += offsets[i];
    }
    (offsets, targets)
}

/// Incremental builder keyed by user name.
#[derive(Debug, Default)]
pub struct GraphBuilder {
    names: Vec<String>,
    index: HashMap<String, u32>,
    edges: Vec<(u32, u32)>,
}

impl GraphBuilder {
    pub fn add_node(&mut self, name: &str) -> u32 {
        if let Some(&i) = self.index.get(name) {
            return i;
        }
        let i = self.names.len() as u32;
        self.names.push(name.to_string());
        self.index.insert(name.to_string(), i);
        i
    }

    pub fn add_edge(&mut self, follower: &str, followee: &str) {
        let u = self.add_node(follower);
        let v = self.add_node(followee);
        self.edges.push((u, v));
    }

    pub fn build(self) -> (SocialGraph, EdgeLoadReport) {
        SocialGraph::from_indexed_with_report(self.names, &self.edges)
    }
}

/// Friendship-paradox summary for one degree direction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParadoxStats {
    /// Average degree over nodes.
    pub mean_degree: f64,
    /// Average over edges `u -> v` of the degree of `v`.
    pub mean_friend_degree: f64,
    pub ratio: f64,
}

pub fn paradox_stats(g: &SocialGraph, kind: DegreeKind) -> Result<ParadoxStats> {
    if g.edge_count() == 0 {
        return Err(Error::Undefined("paradox statistics need at least one edge".into()));
    }
    let n = g.node_count() as f64;
    let total: f64 = g.nodes().map(|u| g.degree(u, kind) as f64).sum();
    let mean_degree = total / n;
    let friend_total: f64 = g.edges().map(|(_, v)| g.degree(v, kind) as f64).sum();
    let mean_friend_degree = friend_total / g.edge_count() as f64;
    Ok(ParadoxStats {
        mean_degree,
        mean_friend_degree,
        ratio: mean_friend_degree / mean_degree,
    })
}
