//! Circuit-topology graphs of the reconfigurable impedance network.
//!
//! Every BD-RIS architecture is an undirected simple graph on the `N_I`
//! ports: an edge `(n, m)` means a tunable admittance connects ports `n`
//! and `m`. Vertex indices are 0-based in this API and 1-based in every
//! serialized form.
//!
//! The optimal-architecture condition checked by [`satisfies_optimality`]
//! asks for a vertex ordering in which the `n`-th vertex has exactly
//! `min(2L - 1, N_I - n)` neighbors among the vertices after it.

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest `N_I` for which [`satisfies_optimality`] runs the exact
/// ordering search.
pub const EXACT_SEARCH_LIMIT: usize = 12;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ArchKind {
    Single,
    Fully,
    /// `groups` equal-size fully-connected blocks.
    Group {
        groups: usize,
    },
    Tridiagonal,
    Arrowhead,
    /// `q`-step path graph: `n ~ m` iff `0 < |n - m| <= q`.
    Band {
        q: usize,
    },
    /// `q`-center graph; `centers` are 0-based and sorted.
    Stem {
        q: usize,
        centers: Vec<usize>,
    },
    Custom,
}

impl ArchKind {
    pub fn name(&self) -> &'static str {
        match self {
            ArchKind::Single => "single",
            ArchKind::Fully => "fully",
            ArchKind::Group { .. } => "group",
            ArchKind::Tridiagonal => "tridiagonal",
            ArchKind::Arrowhead => "arrowhead",
            ArchKind::Band { .. } => "band",
            ArchKind::Stem { .. } => "stem",
            ArchKind::Custom => "custom",
        }
    }
}

impl fmt::Display for ArchKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ArchKind::Group { groups } => write!(f, "group(G={groups})"),
            ArchKind::Band { q } => write!(f, "band(q={q})"),
            ArchKind::Stem { q, .. } => write!(f, "stem(q={q})"),
            other => f.write_str(other.name()),
        }
    }
}

/// An architecture graph: symmetric boolean adjacency with an empty
/// diagonal, tagged with the family it was built from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "ArchitectureDoc", try_from = "ArchitectureDoc")]
pub struct Architecture {
    n: usize,
    adj: Vec<bool>,
    kind: ArchKind,
}

impl Architecture {
    /// Builds an architecture of the given family on `n` ports.
    pub fn new(kind: ArchKind, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("architecture needs at least one element"));
        }
        let adj: Box<dyn Fn(usize, usize) -> bool> = match &kind {
            ArchKind::Single => Box::new(|_, _| false),
            ArchKind::Fully => Box::new(|_, _| true),
            ArchKind::Group { groups } => {
                let groups = *groups;
                if groups == 0 || !n.is_multiple_of(groups) {
                    return Err(Error::invalid(format!("group count {groups} must divide N_I = {n}")));
                }
                let size = n / groups;
                Box::new(move |i, j| i / size == j / size)
            }
            ArchKind::Tridiagonal => Box::new(|i, j| i.abs_diff(j) <= 1),
            ArchKind::Arrowhead => Box::new(|i, j| i == 0 || j == 0),
            ArchKind::Band { q } => {
                let q = *q;
                if q >= n {
                    return Err(Error::invalid(format!("band width {q} must be < N_I = {n}")));
                }
                Box::new(move |i, j| i.abs_diff(j) <= q)
            }
            ArchKind::Stem { q, centers } => {
                let q = *q;
                if q >= n {
                    return Err(Error::invalid(format!("stem width {q} must be < N_I = {n}")));
                }
                if centers.len() != q {
                    return Err(Error::invalid(format!(
                        "stem width {q} needs exactly {q} centers, got {}",
                        centers.len()
                    )));
                }
                let mut is_center = vec![false; n];
                for &c in centers {
                    if c >= n {
                        return Err(Error::invalid(format!("center {} out of range", c + 1)));
                    }
                    if is_center[c] {
                        return Err(Error::invalid(format!("duplicate center {}", c + 1)));
                    }
                    is_center[c] = true;
                }
                Box::new(move |i, j| is_center[i] || is_center[j])
            }
            ArchKind::Custom => return Err(Error::invalid("custom architectures are built from an adjacency matrix")),
        };
        let mut flat = vec![false; n * n];
        for i in 0..n {
            for j in 0..n {
                flat[i * n + j] = i != j && adj(i, j);
            }
        }
        let kind = match kind {
            ArchKind::Stem { q, mut centers } => {
                centers.sort_unstable();
                ArchKind::Stem { q, centers }
            }
            k => k,
        };
        Ok(Self { n, adj: flat, kind })
    }

    pub fn single(n: usize) -> Result<Self> {
        Self::new(ArchKind::Single, n)
    }

    pub fn fully(n: usize) -> Result<Self> {
        Self::new(ArchKind::Fully, n)
    }

    pub fn group(n: usize, groups: usize) -> Result<Self> {
        Self::new(ArchKind::Group { groups }, n)
    }

    pub fn tridiagonal(n: usize) -> Result<Self> {
        Self::new(ArchKind::Tridiagonal, n)
    }

    pub fn arrowhead(n: usize) -> Result<Self> {
        Self::new(ArchKind::Arrowhead, n)
    }

    pub fn band(n: usize, q: usize) -> Result<Self> {
        Self::new(ArchKind::Band { q }, n)
    }

    /// Stem with the first `q` ports as centers.
    pub fn stem(n: usize, q: usize) -> Result<Self> {
        Self::new(ArchKind::Stem { q, centers: (0..q).collect() }, n)
    }

    pub fn stem_with_centers(n: usize, centers: Vec<usize>) -> Result<Self> {
        Self::new(ArchKind::Stem { q: centers.len(), centers }, n)
    }

    /// Custom architecture from a full `n x n` adjacency (row-major).
    pub fn from_adjacency(n: usize, adj: Vec<bool>) -> Result<Self> {
        if n == 0 || adj.len() != n * n {
            return Err(Error::invalid(format!("adjacency of length {} is not square for N_I = {n}", adj.len())));
        }
        for i in 0..n {
            if adj[i * n + i] {
                return Err(Error::invalid(format!("self loop at port {}", i + 1)));
            }
            for j in 0..i {
                if adj[i * n + j] != adj[j * n + i] {
                    return Err(Error::invalid(format!("adjacency not symmetric at ({}, {})", i + 1, j + 1)));
                }
            }
        }
        Ok(Self { n, adj, kind: ArchKind::Custom })
    }

    /// Custom architecture from an edge list (0-based pairs).
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut adj = vec![false; n * n];
        for &(i, j) in edges {
            if i >= n || j >= n || i == j {
                return Err(Error::invalid(format!("bad edge ({}, {})", i + 1, j + 1)));
            }
            adj[i * n + j] = true;
            adj[j * n + i] = true;
        }
        Self::from_adjacency(n, adj)
    }

    pub fn n_elements(&self) -> usize {
        self.n
    }

    pub fn kind(&self) -> &ArchKind {
        &self.kind
    }

    pub fn is_connected(&self, i: usize, j: usize) -> bool {
        self.adj[i * self.n + j]
    }

    pub fn adjacency(&self) -> &[bool] {
        &self.adj
    }

    pub fn degree(&self, i: usize) -> usize {
        self.adj[i * self.n..(i + 1) * self.n].iter().filter(|&&b| b).count()
    }

    pub fn neighbors(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.n).filter(move |&j| self.is_connected(i, j))
    }

    /// Edges `(i, j)` with `i < j`, row-major.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.n).flat_map(move |i| ((i + 1)..self.n).filter(move |&j| self.is_connected(i, j)).map(move |j| (i, j)))
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().filter(|&&b| b).count() / 2
    }

    /// Number of tunable admittances: one per port plus one per edge.
    pub fn complexity_count(&self) -> usize {
        self.n + self.edge_count()
    }

    /// Connected with exactly `N_I - 1` edges.
    pub fn is_tree(&self) -> bool {
        self.edge_count() + 1 == self.n && self.is_graph_connected()
    }

    fn is_graph_connected(&self) -> bool {
        let mut seen = vec![false; self.n];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(v) = stack.pop() {
            for w in self.neighbors(v) {
                if !seen[w] {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }

    /// Whether every edge of `self` is also an edge of `other`.
    pub fn is_subgraph_of(&self, other: &Architecture) -> bool {
        self.n == other.n && self.adj.iter().zip(&other.adj).all(|(&a, &b)| !a || b)
    }

    /// Relabels ports: the result has an edge `(perm[i], perm[j])` for every
    /// edge `(i, j)` of `self`. In matrix form this is `P A P^T` with
    /// `P = [e_perm[0], e_perm[1], ...]`.
    pub fn relabeled(&self, perm: &Permutation) -> Result<Architecture> {
        if perm.len() != self.n {
            return Err(Error::dims(format!("permutation of length {} for N_I = {}", perm.len(), self.n)));
        }
        let n = self.n;
        let mut adj = vec![false; n * n];
        for (i, j) in self.edges() {
            let (a, b) = (perm[i], perm[j]);
            adj[a * n + b] = true;
            adj[b * n + a] = true;
        }
        Architecture::from_adjacency(n, adj)
    }

    /// Upper-triangle bits, row-major (`(0,1), (0,2), ..., (n-2,n-1)`).
    pub fn upper_triangle_bits(&self) -> Vec<bool> {
        (0..self.n).flat_map(|i| ((i + 1)..self.n).map(move |j| (i, j))).map(|(i, j)| self.is_connected(i, j)).collect()
    }

    pub fn label(&self) -> String {
        self.kind.to_string()
    }
}

/// Vertex ordering: `perm[position] = vertex`. Stored 0-based.
pub type Permutation = Vec<usize>;

/// Outcome of the optimal-architecture check.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OptimalityVerdict {
    /// Exact search found an ordering.
    Satisfied(Permutation),
    /// Exact search proved no ordering exists.
    NotSatisfied,
    /// `N_I` above [`EXACT_SEARCH_LIMIT`]: only a few fixed orderings were
    /// tried (identity, reversal, greedy peel). `false` is inconclusive.
    CanonicalOnly { holds: bool, witness: Option<Permutation> },
}

impl OptimalityVerdict {
    pub fn holds(&self) -> bool {
        matches!(self, OptimalityVerdict::Satisfied(_) | OptimalityVerdict::CanonicalOnly { holds: true, .. })
    }

    pub fn witness(&self) -> Option<&Permutation> {
        match self {
            OptimalityVerdict::Satisfied(p) => Some(p),
            OptimalityVerdict::CanonicalOnly { witness, .. } => witness.as_ref(),
            OptimalityVerdict::NotSatisfied => None,
        }
    }
}

/// Number of later neighbors required at `position` (0-based).
fn required_forward_degree(n: usize, l: usize, position: usize) -> usize {
    (2 * l).saturating_sub(1).min(n - 1 - position)
}

/// Checks the row-count condition for the ordering `perm`.
pub fn ordering_satisfies(arch: &Architecture, l: usize, perm: &[usize]) -> bool {
    let n = arch.n;
    if perm.len() != n {
        return false;
    }
    let mut placed = vec![false; n];
    for (pos, &v) in perm.iter().enumerate() {
        if v >= n || placed[v] {
            return false;
        }
        placed[v] = true;
        let forward = perm[pos + 1..].iter().filter(|&&w| arch.is_connected(v, w)).count();
        if forward != required_forward_degree(n, l, pos) {
            return false;
        }
    }
    true
}

/// Decides whether `arch` is a relabeling of a graph whose adjacency meets
/// the optimal-architecture row condition for width parameter `l`.
///
/// Values of `l` with `2l - 1 >= N_I - 1` all demand the complete graph.
pub fn satisfies_optimality(arch: &Architecture, l: usize) -> OptimalityVerdict {
    let n = arch.n;
    let l = l.max(1);
    let identity: Permutation = (0..n).collect();
    let reversal: Permutation = (0..n).rev().collect();

    let expected_edges: usize = (0..n).map(|p| required_forward_degree(n, l, p)).sum();
    let edge_count_ok = arch.edge_count() == expected_edges;

    if n > EXACT_SEARCH_LIMIT {
        if edge_count_ok {
            for candidate in [Some(identity), Some(reversal), greedy_peel(arch, l)].into_iter().flatten() {
                if ordering_satisfies(arch, l, &candidate) {
                    return OptimalityVerdict::CanonicalOnly { holds: true, witness: Some(candidate) };
                }
            }
        }
        return OptimalityVerdict::CanonicalOnly { holds: false, witness: None };
    }

    if !edge_count_ok {
        return OptimalityVerdict::NotSatisfied;
    }
    for candidate in [identity, reversal] {
        if ordering_satisfies(arch, l, &candidate) {
            return OptimalityVerdict::Satisfied(candidate);
        }
    }
    match exact_search(arch, l) {
        Some(p) => OptimalityVerdict::Satisfied(p),
        None => OptimalityVerdict::NotSatisfied,
    }
}

/// Repeatedly removes the lowest-index vertex whose degree in the
/// remaining graph equals the required forward degree.
fn greedy_peel(arch: &Architecture, l: usize) -> Option<Permutation> {
    let n = arch.n;
    let mut alive = vec![true; n];
    let mut deg: Vec<usize> = (0..n).map(|v| arch.degree(v)).collect();
    let mut order = Vec::with_capacity(n);
    for pos in 0..n {
        let need = required_forward_degree(n, l, pos);
        let v = (0..n).find(|&v| alive[v] && deg[v] == need)?;
        alive[v] = false;
        for w in arch.neighbors(v) {
            if alive[w] {
                deg[w] -= 1;
            }
        }
        order.push(v);
    }
    Some(order)
}

/// Exact elimination-order search over vertex subsets with memoized
/// dead ends. A vertex can take the next position iff its degree inside
/// the remaining set equals the required forward degree.
fn exact_search(arch: &Architecture, l: usize) -> Option<Permutation> {
    let n = arch.n;
    debug_assert!(n <= 32);
    let masks: Vec<u32> = (0..n).map(|v| arch.neighbors(v).fold(0u32, |acc, w| acc | (1 << w))).collect();
    let full: u32 = if n == 32 { u32::MAX } else { (1u32 << n) - 1 };
    let mut dead: HashSet<u32> = HashSet::new();
    let mut order = Vec::with_capacity(n);

    fn recurse(
        remaining: u32,
        n: usize,
        l: usize,
        masks: &[u32],
        dead: &mut HashSet<u32>,
        order: &mut Vec<usize>,
    ) -> bool {
        if remaining == 0 {
            return true;
        }
        if dead.contains(&remaining) {
            return false;
        }
        let pos = n - remaining.count_ones() as usize;
        let need = required_forward_degree(n, l, pos);
        for v in 0..n {
            if remaining & (1 << v) == 0 {
                continue;
            }
            if (masks[v] & remaining).count_ones() as usize != need {
                continue;
            }
            order.push(v);
            if recurse(remaining & !(1 << v), n, l, masks, dead, order) {
                return true;
            }
            order.pop();
        }
        dead.insert(remaining);
        false
    }

    recurse(full, n, l, &masks, &mut dead, &mut order).then_some(order)
}

/// Random member of the optimal class: in a random vertex order, each
/// vertex gets exactly `min(2l - 1, N - n)` neighbors chosen uniformly among
/// the later vertices.
pub fn random_optimal_architecture<R: rand::Rng + ?Sized>(n: usize, l: usize, rng: &mut R) -> Result<Architecture> {
    use rand::seq::SliceRandom;
    if n == 0 || l == 0 {
        return Err(Error::invalid("need N_I >= 1 and L >= 1"));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut edges = Vec::new();
    for pos in 0..n {
        let mut later: Vec<usize> = order[pos + 1..].to_vec();
        later.shuffle(rng);
        for &w in &later[..required_forward_degree(n, l, pos)] {
            edges.push((order[pos], w));
        }
    }
    Architecture::from_edges(n, &edges)
}

/// Result of comparing tree-ness with the `L = 1` optimality condition
/// over every labeled simple graph on `n` vertices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TreeCensus {
    pub n: usize,
    pub graphs: u64,
    pub trees: u64,
    pub satisfied: u64,
    /// Upper-triangle edge masks of graphs where the two tests disagree.
    pub mismatches: Vec<u64>,
}

/// Exhaustive census for `2 <= n <= 6`.
pub fn tree_equivalence_census(n: usize) -> Result<TreeCensus> {
    if !(1..=6).contains(&n) {
        return Err(Error::invalid(format!("census supports 1 <= n <= 6, got {n}")));
    }
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| ((i + 1)..n).map(move |j| (i, j))).collect();
    let total = 1u64 << pairs.len();
    let mut census = TreeCensus { n, graphs: total, trees: 0, satisfied: 0, mismatches: Vec::new() };
    for mask in 0..total {
        let edges: Vec<(usize, usize)> =
            pairs.iter().enumerate().filter(|(k, _)| mask >> k & 1 == 1).map(|(_, &p)| p).collect();
        let arch = Architecture::from_edges(n, &edges)?;
        let tree = arch.is_tree();
        let sat = satisfies_optimality(&arch, 1).holds();
        census.trees += tree as u64;
        census.satisfied += sat as u64;
        if tree != sat {
            census.mismatches.push(mask);
        }
    }
    Ok(census)
}

/// Antenna and stream layout of one multiuser MIMO system.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SystemDims {
    pub n_tx: usize,
    pub n_ris: usize,
    /// Receive antennas per user.
    pub users: Vec<usize>,
    /// Streams per user; defaults to one stream per receive antenna.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub streams: Option<Vec<usize>>,
}

impl SystemDims {
    pub fn new(n_tx: usize, n_ris: usize, users: Vec<usize>) -> Self {
        Self { n_tx, n_ris, users, streams: None }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_tx == 0 || self.n_ris == 0 {
            return Err(Error::invalid("N_T and N_I must be positive"));
        }
        if self.users.is_empty() || self.users.contains(&0) {
            return Err(Error::invalid("every user needs at least one antenna"));
        }
        if let Some(streams) = &self.streams {
            if streams.len() != self.users.len() {
                return Err(Error::invalid("streams and users differ in length"));
            }
            if streams.iter().zip(&self.users).any(|(&d, &nk)| d == 0 || d > nk) {
                return Err(Error::invalid("stream counts must satisfy 1 <= d_k <= N_k"));
            }
        }
        Ok(())
    }

    pub fn total_rx(&self) -> usize {
        self.users.iter().sum()
    }

    pub fn stream_counts(&self) -> Vec<usize> {
        self.streams.clone().unwrap_or_else(|| self.users.clone())
    }

    /// Degrees of freedom `min(sum N_k, N_T)`.
    pub fn dof(&self) -> usize {
        self.total_rx().min(self.n_tx)
    }

    /// `min(D, N_I / 2)`; see [`effective_l`].
    pub fn effective_l(&self) -> usize {
        effective_l(self, false)
    }
}

/// Width parameter `L = min(D, N_I / 2)` with `D = min(sum N_k, N_T)`, or
/// `D = sum d_k` when `use_streams` is set.
///
/// For odd `N_I` with `D > N_I / 2` the exact value is the half-integer
/// `N_I / 2`; this returns `(N_I + 1) / 2` instead. Both demand the
/// complete graph and give the same complexity `N_I (N_I + 1) / 2`.
pub fn effective_l(dims: &SystemDims, use_streams: bool) -> usize {
    let d = if use_streams { dims.stream_counts().iter().sum() } else { dims.dof() };
    // 2 * d >= n_ris  <=>  d >= n_ris / 2 exactly
    if 2 * d >= dims.n_ris {
        dims.n_ris.div_ceil(2)
    } else {
        d
    }
}

/// Serialized form: 1-based parameters and a run-length-encoded upper
/// triangle. The run list alternates 0-runs and 1-runs starting with a
/// (possibly empty) 0-run, e.g. `"0,3"` for the complete graph on 3 ports.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ArchitectureDoc {
    pub n_elements: usize,
    pub kind: String,
    #[serde(default)]
    pub params: serde_json::Map<String, serde_json::Value>,
    pub adjacency_rle: String,
}

pub fn encode_rle(bits: &[bool]) -> String {
    let mut runs = Vec::new();
    let mut current = false;
    let mut count = 0usize;
    for &b in bits {
        if b == current {
            count += 1;
        } else {
            runs.push(count);
            current = b;
            count = 1;
        }
    }
    runs.push(count);
    runs.iter().map(|r| r.to_string()).collect::<Vec<_>>().join(",")
}

pub fn decode_rle(rle: &str, len: usize) -> Result<Vec<bool>> {
    let mut bits = Vec::with_capacity(len);
    let mut value = false;
    for tok in rle.split(',').map(str::trim).filter(|t| !t.is_empty()) {
        let run: usize = tok.parse().map_err(|_| Error::invalid(format!("bad run length {tok:?}")))?;
        bits.extend(std::iter::repeat_n(value, run));
        value = !value;
    }
    if bits.len() != len {
        return Err(Error::invalid(format!("run lengths cover {} bits, expected {len}", bits.len())));
    }
    Ok(bits)
}

impl From<Architecture> for ArchitectureDoc {
    fn from(arch: Architecture) -> Self {
        use serde_json::json;
        let mut params = serde_json::Map::new();
        match &arch.kind {
            ArchKind::Group { groups } => {
                params.insert("groups".into(), json!(groups));
            }
            ArchKind::Band { q } => {
                params.insert("q".into(), json!(q));
            }
            ArchKind::Stem { q, centers } => {
                params.insert("q".into(), json!(q));
                params.insert("centers".into(), json!(centers.iter().map(|c| c + 1).collect::<Vec<_>>()));
            }
            _ => {}
        }
        ArchitectureDoc {
            n_elements: arch.n,
            kind: arch.kind.name().to_string(),
            params,
            adjacency_rle: encode_rle(&arch.upper_triangle_bits()),
        }
    }
}

impl TryFrom<ArchitectureDoc> for Architecture {
    type Error = Error;

    fn try_from(doc: ArchitectureDoc) -> Result<Self> {
        let n = doc.n_elements;
        if n == 0 {
            return Err(Error::invalid("n_elements must be positive"));
        }
        let bits = decode_rle(&doc.adjacency_rle, n * (n - 1) / 2)?;
        let mut adj = vec![false; n * n];
        let mut k = 0;
        for i in 0..n {
            for j in (i + 1)..n {
                adj[i * n + j] = bits[k];
                adj[j * n + i] = bits[k];
                k += 1;
            }
        }
        let from_bits = Architecture::from_adjacency(n, adj)?;
        if doc.kind == "custom" {
            return Ok(from_bits);
        }
        let kind = kind_from_params(&doc.kind, &doc.params)?;
        let built = Architecture::new(kind, n)?;
        if built.adj != from_bits.adj {
            return Err(Error::invalid(format!("adjacency_rle does not match kind {:?}", doc.kind)));
        }
        Ok(built)
    }
}

fn param_usize(params: &serde_json::Map<String, serde_json::Value>, key: &str) -> Result<usize> {
    params
        .get(key)
        .and_then(|v| v.as_u64())
        .map(|v| v as usize)
        .ok_or_else(|| Error::invalid(format!("missing integer parameter {key:?}")))
}

/// Parses a kind name plus 1-based JSON parameters.
pub fn kind_from_params(kind: &str, params: &serde_json::Map<String, serde_json::Value>) -> Result<ArchKind> {
    Ok(match kind {
        "single" => ArchKind::Single,
        "fully" => ArchKind::Fully,
        "tridiagonal" => ArchKind::Tridiagonal,
        "arrowhead" => ArchKind::Arrowhead,
        "group" => ArchKind::Group { groups: param_usize(params, "groups")? },
        "band" => ArchKind::Band { q: param_usize(params, "q")? },
        "stem" => {
            let q = param_usize(params, "q")?;
            let centers = match params.get("centers") {
                None => (0..q).collect(),
                Some(v) => v
                    .as_array()
                    .ok_or_else(|| Error::invalid("centers must be an array"))?
                    .iter()
                    .map(|c| match c.as_u64() {
                        Some(c) if c >= 1 => Ok(c as usize - 1),
                        _ => Err(Error::invalid("centers are 1-based positive integers")),
                    })
                    .collect::<Result<Vec<_>>>()?,
            };
            ArchKind::Stem { q, centers }
        }
        other => return Err(Error::invalid(format!("unknown architecture kind {other:?}"))),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn neighbors_1based(arch: &Architecture, v: usize) -> Vec<usize> {
        arch.neighbors(v - 1).map(|w| w + 1).collect()
    }

    #[test]
    fn band_neighbors() {
        let a = Architecture::band(6, 3).unwrap();
        assert_eq!(neighbors_1based(&a, 1), vec![2, 3, 4]);
        assert_eq!(neighbors_1based(&a, 4), vec![1, 2, 3, 5, 6]);
    }

    #[test]
    fn stem_edges() {
        let a = Architecture::stem_with_centers(6, vec![0, 1, 2]).unwrap();
        assert_eq!(a.edge_count(), 12);
        for (i, j) in a.edges() {
            assert!(i < 3 || j < 3);
        }
    }

    #[test]
    fn group_blocks() {
        let a = Architecture::group(8, 2).unwrap();
        assert_eq!(a.edge_count(), 12);
        assert!(a.is_connected(0, 3));
        assert!(!a.is_connected(3, 4));
        assert!(a.is_connected(4, 7));
    }

    #[test]
    fn degenerate_widths() {
        let n = 7;
        let single = Architecture::single(n).unwrap();
        assert_eq!(Architecture::band(n, 0).unwrap().adjacency(), single.adjacency());
        assert_eq!(Architecture::stem(n, 0).unwrap().adjacency(), single.adjacency());
        assert_eq!(Architecture::band(n, 1).unwrap().adjacency(), Architecture::tridiagonal(n).unwrap().adjacency());
        assert_eq!(
            Architecture::stem_with_centers(n, vec![0]).unwrap().adjacency(),
            Architecture::arrowhead(n).unwrap().adjacency()
        );
        let fully = Architecture::fully(n).unwrap();
        assert_eq!(Architecture::band(n, n - 1).unwrap().adjacency(), fully.adjacency());
        assert_eq!(Architecture::stem(n, n - 1).unwrap().adjacency(), fully.adjacency());
    }

    #[test]
    fn invalid_parameters() {
        assert!(matches!(Architecture::band(4, 4), Err(Error::InvalidParam(_))));
        assert!(matches!(Architecture::stem(4, 5), Err(Error::InvalidParam(_))));
        assert!(matches!(Architecture::group(6, 4), Err(Error::InvalidParam(_))));
        assert!(matches!(Architecture::group(6, 0), Err(Error::InvalidParam(_))));
        assert!(matches!(Architecture::stem_with_centers(6, vec![1, 1]), Err(Error::InvalidParam(_))));
        assert!(matches!(Architecture::stem_with_centers(6, vec![6]), Err(Error::InvalidParam(_))));
    }

    #[test]
    fn complexity_examples() {
        assert_eq!(Architecture::fully(64).unwrap().complexity_count(), 2080);
        assert_eq!(Architecture::band(6, 3).unwrap().complexity_count(), 18);
        assert_eq!(Architecture::single(7).unwrap().complexity_count(), 7);
    }

    #[test]
    fn tree_examples() {
        assert!(Architecture::tridiagonal(5).unwrap().is_tree());
        assert!(Architecture::arrowhead(5).unwrap().is_tree());
        assert!(!Architecture::fully(3).unwrap().is_tree());
        assert!(!Architecture::single(2).unwrap().is_tree());
        assert!(Architecture::single(1).unwrap().is_tree());
    }

    #[test]
    fn band_is_optimal_with_identity() {
        let a = Architecture::band(6, 3).unwrap();
        assert_eq!(satisfies_optimality(&a, 2), OptimalityVerdict::Satisfied((0..6).collect()));
    }

    #[test]
    fn stem_is_optimal_with_reversal() {
        let a = Architecture::stem(6, 3).unwrap();
        assert_eq!(satisfies_optimality(&a, 2), OptimalityVerdict::Satisfied((0..6).rev().collect()));
    }

    #[test]
    fn single_and_tridiagonal_rejected() {
        assert_eq!(satisfies_optimality(&Architecture::single(4).unwrap(), 1), OptimalityVerdict::NotSatisfied);
        assert_eq!(satisfies_optimality(&Architecture::band(6, 1).unwrap(), 2), OptimalityVerdict::NotSatisfied);
    }

    #[test]
    fn search_finds_nontrivial_ordering() {
        // Path 2-0-3-1 (a tree) labeled so neither identity nor reversal works.
        let a = Architecture::from_edges(4, &[(2, 0), (0, 3), (3, 1)]).unwrap();
        assert!(!ordering_satisfies(&a, 1, &[0, 1, 2, 3]));
        assert!(!ordering_satisfies(&a, 1, &[3, 2, 1, 0]));
        let verdict = satisfies_optimality(&a, 1);
        let witness = verdict.witness().expect("tree must satisfy L = 1").clone();
        assert!(ordering_satisfies(&a, 1, &witness));
    }

    #[test]
    fn large_n_reports_canonical_only() {
        let band = Architecture::band(16, 7).unwrap();
        assert!(matches!(satisfies_optimality(&band, 4), OptimalityVerdict::CanonicalOnly { holds: true, .. }));
        let stem = Architecture::stem(16, 7).unwrap();
        let v = satisfies_optimality(&stem, 4);
        assert_eq!(v.witness(), Some(&(0..16).rev().collect::<Vec<_>>()));
        let tri = Architecture::tridiagonal(16).unwrap();
        assert_eq!(satisfies_optimality(&tri, 4), OptimalityVerdict::CanonicalOnly { holds: false, witness: None });
    }

    #[test]
    fn random_optimal_graphs_satisfy_condition() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for n in [5, 8, 11] {
            for l in 1..=n / 2 {
                let arch = random_optimal_architecture(n, l, &mut rng).unwrap();
                assert_eq!(arch.complexity_count(), l * (2 * n - 2 * l + 1));
                assert!(satisfies_optimality(&arch, l).holds());
            }
        }
    }

    #[test]
    fn census_small_cases() {
        let c2 = tree_equivalence_census(2).unwrap();
        assert_eq!((c2.trees, c2.satisfied), (1, 1));
        let c4 = tree_equivalence_census(4).unwrap();
        assert_eq!(c4.graphs, 64);
        assert_eq!(c4.trees, 16);
        assert_eq!(c4.satisfied, 16);
        assert!(c4.mismatches.is_empty());
    }

    #[test]
    fn effective_l_examples() {
        assert_eq!(SystemDims::new(4, 64, vec![1, 1, 1, 1]).effective_l(), 4);
        assert_eq!(SystemDims::new(6, 64, vec![1]).effective_l(), 1);
        let mut dims = SystemDims::new(8, 64, vec![2, 2]);
        dims.streams = Some(vec![1, 1]);
        assert_eq!(effective_l(&dims, true), 2);
        assert_eq!(effective_l(&dims, false), 4);
        // capped at N_I / 2
        assert_eq!(SystemDims::new(8, 6, vec![4, 4]).effective_l(), 3);
        assert_eq!(SystemDims::new(8, 7, vec![4, 4]).effective_l(), 4);
        assert_eq!(SystemDims::new(8, 7, vec![1, 1, 1]).effective_l(), 3);
    }

    #[test]
    fn streams_validation() {
        let mut dims = SystemDims::new(4, 8, vec![1, 2]);
        dims.streams = Some(vec![1, 3]);
        assert!(dims.validate().is_err());
        dims.streams = Some(vec![1, 2]);
        assert!(dims.validate().is_ok());
    }

    #[test]
    fn rle_roundtrip_and_format() {
        assert_eq!(encode_rle(&[true, true, true]), "0,3");
        assert_eq!(encode_rle(&[false, true, false, false]), "1,1,2");
        assert_eq!(encode_rle(&[]), "0");
        assert_eq!(decode_rle("1,1,2", 4).unwrap(), vec![false, true, false, false]);
        assert!(decode_rle("1,1", 4).is_err());
    }

    #[test]
    fn json_roundtrip() {
        for arch in [
            Architecture::stem_with_centers(6, vec![1, 4]).unwrap(),
            Architecture::group(8, 2).unwrap(),
            Architecture::from_edges(4, &[(0, 2), (1, 3)]).unwrap(),
        ] {
            let s = serde_json::to_string(&arch).unwrap();
            let back: Architecture = serde_json::from_str(&s).unwrap();
            assert_eq!(back, arch);
        }
        let doc = serde_json::to_value(Architecture::stem_with_centers(6, vec![1, 4]).unwrap()).unwrap();
        assert_eq!(doc["params"]["centers"], serde_json::json!([2, 5]));
        assert_eq!(doc["kind"], "stem");
    }

    #[test]
    fn json_rejects_mismatched_adjacency() {
        let json = r#"{"n_elements": 3, "kind": "fully", "params": {}, "adjacency_rle": "1,2"}"#;
        assert!(serde_json::from_str::<Architecture>(json).is_err());
    }
}
