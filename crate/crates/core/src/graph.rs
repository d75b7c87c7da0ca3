//! Finite undirected weighted graphs, their simple-walk transition kernels,
//! and the preset families (cycles, paths, complete and complete bipartite
//! graphs, hypercubes, tori and permutation-group Cayley graphs).
//!
//! Nodes are dense indices `0..node_count`. Group elements, bit-vectors and
//! torus coordinates live on as display labels only.

use std::collections::{BTreeMap, HashMap, VecDeque};
use std::fmt;
use std::sync::Arc;

use crate::abelian::{FiniteAbelianGroup, StepLaw};
use crate::error::{invalid, HitError, Result};
use crate::numeric::DenseMatrix;

/// Row sums of a kernel must be within this of 1.
pub const ROW_SUM_TOLERANCE: f64 = 1e-12;

/// Default bound on the closure size of a permutation group.
pub const DEFAULT_GROUP_BOUND: usize = 10_080;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub u: usize,
    pub v: usize,
    pub weight: f64,
}

/// Which constructor produced the graph. Used by engine dispatch and the
/// closed-form checks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GraphFamily {
    Custom,
    Cycle(usize),
    Path(usize),
    Complete(usize),
    CompleteBipartite(usize, usize),
    Hypercube(usize),
    TorusStandard(usize),
    TorusDiagonal(usize),
    AbelianCayley,
    PermutationCayley(String),
}

/// An abelian group plus step law whose Cayley graph this is, with node `i`
/// identified with `group.element(i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct AbelianStructure {
    pub group: FiniteAbelianGroup,
    pub step_law: StepLaw,
}

#[derive(Debug, Clone)]
pub struct Graph {
    node_count: usize,
    edges: Vec<Edge>,
    adjacency: Vec<Vec<(usize, f64)>>,
    labels: Option<Vec<String>>,
    connected: bool,
    family: GraphFamily,
    abelian: Option<AbelianStructure>,
    vertex_transitive: bool,
}

impl Graph {
    /// Validates and builds a graph from `(u, v, weight)` triples.
    pub fn new(node_count: usize, edges: &[(usize, usize, f64)]) -> Result<Self> {
        if node_count == 0 {
            return Err(invalid("graph needs at least one node"));
        }
        let mut seen = HashMap::with_capacity(edges.len());
        let mut adjacency = vec![Vec::new(); node_count];
        let mut out = Vec::with_capacity(edges.len());
        for &(u, v, w) in edges {
            if u >= node_count || v >= node_count {
                return Err(invalid(format!(
                    "edge ({u}, {v}) has an endpoint outside 0..{node_count}"
                )));
            }
            if u == v {
                return Err(invalid(format!("self-loop at node {u}")));
            }
            if !(w > 0.0 && w.is_finite()) {
                return Err(invalid(format!(
                    "edge ({u}, {v}) has non-positive weight {w}"
                )));
            }
            let key = (u.min(v), u.max(v));
            if seen.insert(key, w).is_some() {
                return Err(invalid(format!("duplicate edge ({}, {})", key.0, key.1)));
            }
            adjacency[u].push((v, w));
            adjacency[v].push((u, w));
            out.push(Edge { u, v, weight: w });
        }
        for row in &mut adjacency {
            row.sort_by_key(|x| x.0);
        }
        let connected = is_connected(node_count, &out);
        Ok(Graph {
            node_count,
            edges: out,
            adjacency,
            labels: None,
            connected,
            family: GraphFamily::Custom,
            abelian: None,
            vertex_transitive: false,
        })
    }

    pub fn unweighted(node_count: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let e: Vec<_> = edges.iter().map(|&(u, v)| (u, v, 1.0)).collect();
        Self::new(node_count, &e)
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.node_count {
            return Err(HitError::DimensionMismatch {
                expected: self.node_count,
                got: labels.len(),
            });
        }
        self.labels = Some(labels);
        Ok(self)
    }

    fn tagged(mut self, family: GraphFamily, vertex_transitive: bool) -> Self {
        self.family = family;
        self.vertex_transitive = vertex_transitive;
        self
    }

    fn with_abelian(mut self, structure: AbelianStructure) -> Self {
        self.abelian = Some(structure);
        self
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn neighbors(&self, i: usize) -> &[(usize, f64)] {
        &self.adjacency[i]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.adjacency[i].len()
    }

    /// Sum of incident edge weights.
    pub fn strength(&self, i: usize) -> f64 {
        self.adjacency[i].iter().map(|x| x.1).sum()
    }

    pub fn is_connected(&self) -> bool {
        self.connected
    }

    pub fn require_connected(&self) -> Result<()> {
        if self.connected {
            Ok(())
        } else {
            Err(HitError::NotConnected(
                "hitting times between components are infinite".into(),
            ))
        }
    }

    /// Common degree when every node has the same number of neighbors.
    pub fn regular_degree(&self) -> Option<usize> {
        let d = self.degree(0);
        (0..self.node_count)
            .all(|i| self.degree(i) == d)
            .then_some(d)
    }

    pub fn has_uniform_weights(&self) -> bool {
        self.edges
            .first()
            .is_none_or(|e0| self.edges.iter().all(|e| e.weight == e0.weight))
    }

    pub fn is_bipartite(&self) -> bool {
        let mut color = vec![None; self.node_count];
        for s in 0..self.node_count {
            if color[s].is_some() {
                continue;
            }
            color[s] = Some(false);
            let mut queue = VecDeque::from([s]);
            while let Some(u) = queue.pop_front() {
                let cu = color[u].unwrap();
                for &(v, _) in &self.adjacency[u] {
                    match color[v] {
                        None => {
                            color[v] = Some(!cu);
                            queue.push_back(v);
                        }
                        Some(cv) if cv == cu => return false,
                        _ => {}
                    }
                }
            }
        }
        true
    }

    /// 0/1 adjacency matrix.
    pub fn adjacency_matrix(&self) -> DenseMatrix {
        let mut a = DenseMatrix::zeros(self.node_count, self.node_count);
        for e in &self.edges {
            a[(e.u, e.v)] = 1.0;
            a[(e.v, e.u)] = 1.0;
        }
        a
    }

    pub fn label(&self, i: usize) -> String {
        self.labels
            .as_ref()
            .map_or_else(|| i.to_string(), |l| l[i].clone())
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    /// Looks up a node by index or by label.
    pub fn resolve_node(&self, name: &str) -> Result<usize> {
        if let Some(labels) = &self.labels {
            if let Some(i) = labels.iter().position(|l| l == name) {
                return Ok(i);
            }
        }
        match name.parse::<usize>() {
            Ok(i) if i < self.node_count => Ok(i),
            _ => Err(invalid(format!("unknown node '{name}'"))),
        }
    }

    pub fn check_node(&self, i: usize) -> Result<()> {
        if i < self.node_count {
            Ok(())
        } else {
            Err(invalid(format!("node {i} outside 0..{}", self.node_count)))
        }
    }

    pub fn family(&self) -> &GraphFamily {
        &self.family
    }

    pub fn abelian_structure(&self) -> Option<&AbelianStructure> {
        self.abelian.as_ref()
    }

    /// True when the constructor guarantees vertex-transitivity (Cayley
    /// presets and the symmetric families). Not verified algorithmically.
    pub fn is_vertex_transitive(&self) -> bool {
        self.vertex_transitive
    }

    /// Marks a custom graph as vertex-transitive on the caller's word.
    pub fn assume_vertex_transitive(mut self) -> Self {
        self.vertex_transitive = true;
        self
    }
}

impl fmt::Display for Graph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{:?} graph with {} nodes and {} edges",
            self.family,
            self.node_count,
            self.edges.len()
        )
    }
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

fn is_connected(n: usize, edges: &[Edge]) -> bool {
    let mut parent: Vec<usize> = (0..n).collect();
    let mut components = n;
    for e in edges {
        let (a, b) = (find(&mut parent, e.u), find(&mut parent, e.v));
        if a != b {
            parent[a] = b;
            components -= 1;
        }
    }
    components == 1
}

/// Row-stochastic one-step law of a walk on a graph.
#[derive(Debug, Clone)]
pub struct TransitionKernel {
    matrix: DenseMatrix,
    origin: Arc<Graph>,
}

impl TransitionKernel {
    pub fn matrix(&self) -> &DenseMatrix {
        &self.matrix
    }

    pub fn graph(&self) -> &Graph {
        &self.origin
    }

    pub fn graph_arc(&self) -> &Arc<Graph> {
        &self.origin
    }

    pub fn node_count(&self) -> usize {
        self.matrix.rows()
    }

    pub fn prob(&self, i: usize, k: usize) -> f64 {
        self.matrix[(i, k)]
    }
}

/// Walk that moves to neighbor `k` of `i` with probability `weight(i,k) / strength(i)`.
pub fn simple_walk_kernel(g: &Graph) -> Result<TransitionKernel> {
    simple_walk_kernel_arc(Arc::new(g.clone()))
}

pub fn simple_walk_kernel_arc(g: Arc<Graph>) -> Result<TransitionKernel> {
    g.require_connected()?;
    let n = g.node_count();
    if n < 2 {
        return Err(invalid("a walk needs at least two nodes"));
    }
    let mut m = DenseMatrix::zeros(n, n);
    for i in 0..n {
        let s = g.strength(i);
        for &(k, w) in g.neighbors(i) {
            m[(i, k)] = w / s;
        }
    }
    for i in 0..n {
        let sum: f64 = m.row(i).iter().sum();
        debug_assert!((sum - 1.0).abs() <= ROW_SUM_TOLERANCE);
    }
    Ok(TransitionKernel {
        matrix: m,
        origin: g,
    })
}

// ---------------------------------------------------------------------------
// Presets

pub fn build_cycle(k: usize) -> Result<Graph> {
    if k < 3 {
        return Err(invalid(format!("cycle needs k >= 3, got {k}")));
    }
    let edges: Vec<_> = (0..k).map(|i| (i, (i + 1) % k)).collect();
    let group = FiniteAbelianGroup::new(vec![k])?;
    let law = StepLaw::uniform(&group, &[vec![1], vec![k - 1]])?;
    Ok(Graph::unweighted(k, &edges)?
        .tagged(GraphFamily::Cycle(k), true)
        .with_abelian(AbelianStructure {
            group,
            step_law: law,
        }))
}

pub fn build_path(k: usize) -> Result<Graph> {
    if k < 2 {
        return Err(invalid(format!("path needs k >= 2, got {k}")));
    }
    let edges: Vec<_> = (0..k - 1).map(|i| (i, i + 1)).collect();
    Ok(Graph::unweighted(k, &edges)?.tagged(GraphFamily::Path(k), k == 2))
}

pub fn build_complete(k: usize) -> Result<Graph> {
    if k < 2 {
        return Err(invalid(format!("complete graph needs k >= 2, got {k}")));
    }
    let mut edges = Vec::new();
    for i in 0..k {
        for j in (i + 1)..k {
            edges.push((i, j));
        }
    }
    let group = FiniteAbelianGroup::new(vec![k])?;
    let steps: Vec<Vec<usize>> = (1..k).map(|s| vec![s]).collect();
    let law = StepLaw::uniform(&group, &steps)?;
    Ok(Graph::unweighted(k, &edges)?
        .tagged(GraphFamily::Complete(k), true)
        .with_abelian(AbelianStructure {
            group,
            step_law: law,
        }))
}

/// Nodes `0..k1` form one part, `k1..k1+k2` the other.
pub fn build_complete_bipartite(k1: usize, k2: usize) -> Result<Graph> {
    if k1 < 1 || k2 < 1 {
        return Err(invalid(format!(
            "bipartite parts must be nonempty, got ({k1}, {k2})"
        )));
    }
    let mut edges = Vec::new();
    for i in 0..k1 {
        for j in 0..k2 {
            edges.push((i, k1 + j));
        }
    }
    Ok(
        Graph::unweighted(k1 + k2, &edges)?
            .tagged(GraphFamily::CompleteBipartite(k1, k2), k1 == k2),
    )
}

/// Node `i` is the bit-vector of `i`, most significant bit first.
pub fn build_hypercube(dim: usize) -> Result<Graph> {
    if dim < 1 {
        return Err(invalid("hypercube needs dim >= 1"));
    }
    if dim > 20 {
        return Err(invalid(format!("hypercube dim {dim} is too large")));
    }
    let n = 1usize << dim;
    let mut edges = Vec::new();
    for i in 0..n {
        for b in 0..dim {
            let j = i ^ (1 << b);
            if i < j {
                edges.push((i, j));
            }
        }
    }
    let labels = (0..n)
        .map(|i| format!("{:0width$b}", i, width = dim))
        .collect();
    let group = FiniteAbelianGroup::new(vec![2; dim])?;
    let steps: Vec<Vec<usize>> = (0..dim)
        .map(|b| (0..dim).map(|l| usize::from(l == b)).collect())
        .collect();
    let law = StepLaw::uniform(&group, &steps)?;
    Ok(Graph::unweighted(n, &edges)?
        .with_labels(labels)?
        .tagged(GraphFamily::Hypercube(dim), true)
        .with_abelian(AbelianStructure {
            group,
            step_law: law,
        }))
}

fn torus(p: usize, steps: &[(i64, i64)], family: GraphFamily) -> Result<Graph> {
    let group = FiniteAbelianGroup::new(vec![p, p])?;
    let step_elems: Vec<Vec<usize>> = steps
        .iter()
        .map(|&(a, b)| {
            vec![
                a.rem_euclid(p as i64) as usize,
                b.rem_euclid(p as i64) as usize,
            ]
        })
        .collect();
    let law = StepLaw::uniform(&group, &step_elems)?;
    let mut g = abelian_cayley_graph(&group, &law)?;
    g.family = family;
    let labels = (0..p * p)
        .map(|i| format!("({},{})", i / p, i % p))
        .collect();
    g.with_labels(labels)
}

/// 2D torus on Z_p x Z_p with steps (+-1, 0), (0, +-1). Node (a, b) has index a*p + b.
pub fn build_torus_standard(p: usize) -> Result<Graph> {
    if p < 3 {
        return Err(invalid(format!("torus needs p >= 3, got {p}")));
    }
    torus(
        p,
        &[(1, 0), (-1, 0), (0, 1), (0, -1)],
        GraphFamily::TorusStandard(p),
    )
}

/// Diagonal torus on Z_p x Z_p with steps (+-1, +-1). Requires p odd.
pub fn build_torus_diagonal(p: usize) -> Result<Graph> {
    if p < 3 || p.is_multiple_of(2) {
        return Err(invalid(format!("diagonal torus needs odd p >= 3, got {p}")));
    }
    torus(
        p,
        &[(1, 1), (1, -1), (-1, 1), (-1, -1)],
        GraphFamily::TorusDiagonal(p),
    )
}

/// Cayley graph of an abelian group: node `g` joined to `g + s` for every `s`
/// in the support of the step law, weighted by `p(s)`.
pub fn abelian_cayley_graph(group: &FiniteAbelianGroup, law: &StepLaw) -> Result<Graph> {
    let n = group.order();
    let mut edges = BTreeMap::new();
    for g in 0..n {
        for (s, &w) in law.table().iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            let h = group.add_index(g, s);
            edges.entry((g.min(h), g.max(h))).or_insert(w);
        }
    }
    let list: Vec<_> = edges.into_iter().map(|((u, v), w)| (u, v, w)).collect();
    let labels = (0..n).map(|i| group.label(i)).collect();
    Ok(Graph::new(n, &list)?
        .with_labels(labels)?
        .tagged(GraphFamily::AbelianCayley, true)
        .with_abelian(AbelianStructure {
            group: group.clone(),
            step_law: law.clone(),
        }))
}

/// The four-node example graph used throughout the docs: edges 0-1, 0-2,
/// 1-2, 1-3, 2-3.
pub fn build_diamond() -> Result<Graph> {
    Graph::unweighted(4, &[(0, 1), (0, 2), (1, 2), (1, 3), (2, 3)])
}

// ---------------------------------------------------------------------------
// Permutation groups

/// Permutation of `{0..n}` stored as its image table.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Permutation(Vec<usize>);

impl Permutation {
    pub fn identity(n: usize) -> Self {
        Permutation((0..n).collect())
    }

    pub fn from_images(images: Vec<usize>) -> Result<Self> {
        let mut seen = vec![false; images.len()];
        for &x in &images {
            if x >= images.len() || std::mem::replace(&mut seen[x], true) {
                return Err(invalid(format!("{images:?} is not a permutation")));
            }
        }
        Ok(Permutation(images))
    }

    /// Parses cycle notation on points `1..=degree`, e.g. `(14)(23)`,
    /// `(1 2)(3 4)` or `(1,2,3)`. Multi-digit points need a separator.
    pub fn parse_cycles(s: &str, degree: usize) -> Result<Self> {
        let mut images: Vec<usize> = (0..degree).collect();
        let mut rest = s.trim();
        if rest.is_empty() || rest == "()" || rest == "e" {
            return Ok(Permutation(images));
        }
        let mut used = vec![false; degree];
        while !rest.is_empty() {
            let open = rest
                .strip_prefix('(')
                .ok_or_else(|| HitError::Parse(format!("expected '(' in '{s}'")))?;
            let close = open
                .find(')')
                .ok_or_else(|| HitError::Parse(format!("unclosed cycle in '{s}'")))?;
            let body = &open[..close];
            let points: Vec<usize> = if body.contains([' ', ',']) {
                body.split([' ', ','])
                    .filter(|t| !t.is_empty())
                    .map(|t| {
                        t.parse::<usize>()
                            .map_err(|e| HitError::Parse(format!("{t}: {e}")))
                    })
                    .collect::<Result<_>>()?
            } else {
                body.chars()
                    .map(|c| {
                        c.to_digit(10)
                            .map(|d| d as usize)
                            .ok_or_else(|| HitError::Parse(format!("bad point '{c}' in '{s}'")))
                    })
                    .collect::<Result<_>>()?
            };
            for &p in &points {
                if p == 0 || p > degree {
                    return Err(invalid(format!("point {p} outside 1..={degree}")));
                }
                if std::mem::replace(&mut used[p - 1], true) {
                    return Err(invalid(format!("point {p} repeated in '{s}'")));
                }
            }
            for (a, b) in points.iter().zip(points.iter().cycle().skip(1)) {
                images[a - 1] = b - 1;
            }
            rest = open[close + 1..].trim_start();
        }
        Ok(Permutation(images))
    }

    pub fn degree(&self) -> usize {
        self.0.len()
    }

    pub fn images(&self) -> &[usize] {
        &self.0
    }

    /// Product "apply `self`, then `other`".
    pub fn then(&self, other: &Permutation) -> Permutation {
        Permutation(self.0.iter().map(|&x| other.0[x]).collect())
    }

    pub fn inverse(&self) -> Permutation {
        let mut inv = vec![0; self.0.len()];
        for (i, &x) in self.0.iter().enumerate() {
            inv[x] = i;
        }
        Permutation(inv)
    }

    pub fn is_identity(&self) -> bool {
        self.0.iter().enumerate().all(|(i, &x)| i == x)
    }

    /// Cycle notation on 1-based points; `e` for the identity.
    pub fn cycle_notation(&self) -> String {
        let n = self.0.len();
        let mut seen = vec![false; n];
        let mut out = String::new();
        let sep = if n > 9 { " " } else { "" };
        for start in 0..n {
            if seen[start] || self.0[start] == start {
                continue;
            }
            let mut cyc = Vec::new();
            let mut x = start;
            while !seen[x] {
                seen[x] = true;
                cyc.push((x + 1).to_string());
                x = self.0[x];
            }
            out.push('(');
            out.push_str(&cyc.join(sep));
            out.push(')');
        }
        if out.is_empty() {
            "e".into()
        } else {
            out
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PermutationGroupSpec {
    pub degree: usize,
    pub generators: Vec<Permutation>,
    pub generator_weights: Option<Vec<f64>>,
    pub size_bound: usize,
}

impl PermutationGroupSpec {
    pub fn new(degree: usize, generators: Vec<Permutation>) -> Self {
        PermutationGroupSpec {
            degree,
            generators,
            generator_weights: None,
            size_bound: DEFAULT_GROUP_BOUND,
        }
    }

    pub fn from_cycles(degree: usize, cycles: &[&str]) -> Result<Self> {
        let gens = cycles
            .iter()
            .map(|c| Permutation::parse_cycles(c, degree))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::new(degree, gens))
    }

    pub fn with_weights(mut self, weights: Vec<f64>) -> Self {
        self.generator_weights = Some(weights);
        self
    }

    fn validate(&self) -> Result<()> {
        if self.generators.is_empty() {
            return Err(invalid("connection set is empty"));
        }
        for g in &self.generators {
            if g.degree() != self.degree {
                return Err(invalid(format!(
                    "generator {} acts on {} points, expected {}",
                    g.cycle_notation(),
                    g.degree(),
                    self.degree
                )));
            }
            if g.is_identity() {
                return Err(invalid(
                    "identity in the connection set would add self-loops",
                ));
            }
        }
        for (i, g) in self.generators.iter().enumerate() {
            for h in &self.generators[..i] {
                if g == h {
                    return Err(invalid(format!(
                        "generator {} listed twice",
                        g.cycle_notation()
                    )));
                }
            }
        }
        for g in &self.generators {
            if !self.generators.contains(&g.inverse()) {
                return Err(invalid(format!(
                    "connection set is not symmetric: inverse of {} missing",
                    g.cycle_notation()
                )));
            }
        }
        if let Some(w) = &self.generator_weights {
            if w.len() != self.generators.len() {
                return Err(HitError::DimensionMismatch {
                    expected: self.generators.len(),
                    got: w.len(),
                });
            }
            if w.iter().any(|x| !(*x > 0.0 && x.is_finite())) {
                return Err(invalid("generator weights must be positive"));
            }
            let total: f64 = w.iter().sum();
            if (total - 1.0).abs() > ROW_SUM_TOLERANCE * w.len() as f64 {
                return Err(invalid(format!("generator weights sum to {total}, not 1")));
            }
            for (i, g) in self.generators.iter().enumerate() {
                let j = self
                    .generators
                    .iter()
                    .position(|h| *h == g.inverse())
                    .unwrap();
                if (w[i] - w[j]).abs() > ROW_SUM_TOLERANCE {
                    return Err(invalid("weights of a generator and its inverse differ"));
                }
            }
        }
        Ok(())
    }

    /// Breadth-first closure from the identity, generators in listed order.
    pub fn enumerate(&self) -> Result<Vec<Permutation>> {
        self.validate()?;
        let id = Permutation::identity(self.degree);
        let mut index = HashMap::from([(id.clone(), 0usize)]);
        let mut elements = vec![id];
        let mut head = 0;
        while head < elements.len() {
            let g = elements[head].clone();
            head += 1;
            for c in &self.generators {
                let h = g.then(c);
                if !index.contains_key(&h) {
                    if elements.len() == self.size_bound {
                        return Err(HitError::GroupTooLarge {
                            bound: self.size_bound,
                        });
                    }
                    index.insert(h.clone(), elements.len());
                    elements.push(h);
                }
            }
        }
        Ok(elements)
    }
}

/// Cayley graph with one node per group element and edges `{g, g c}`.
pub fn build_cayley(spec: &PermutationGroupSpec) -> Result<Graph> {
    build_cayley_named(spec, "custom")
}

fn build_cayley_named(spec: &PermutationGroupSpec, name: &str) -> Result<Graph> {
    let elements = spec.enumerate()?;
    let index: HashMap<&Permutation, usize> =
        elements.iter().enumerate().map(|(i, g)| (g, i)).collect();
    let mut edges = BTreeMap::new();
    for (i, g) in elements.iter().enumerate() {
        for (ci, c) in spec.generators.iter().enumerate() {
            let j = index[&g.then(c)];
            let w = spec.generator_weights.as_ref().map_or(1.0, |w| w[ci]);
            edges.entry((i.min(j), i.max(j))).or_insert(w);
        }
    }
    let list: Vec<_> = edges.into_iter().map(|((u, v), w)| (u, v, w)).collect();
    let labels = elements.iter().map(Permutation::cycle_notation).collect();
    Ok(Graph::new(elements.len(), &list)?
        .with_labels(labels)?
        .tagged(GraphFamily::PermutationCayley(name.into()), true))
}

/// Connection set of the S_3 preset: both 3-cycles and the transposition (13).
pub const S3_CONNECTION_SET: [&str; 3] = ["(123)", "(132)", "(13)"];
/// S_3 generated by all three transpositions (the graph K_{3,3}).
pub const S3_TRANSPOSITIONS: [&str; 3] = ["(12)", "(23)", "(13)"];
/// Connection set of the D_8 preset: three reflections of the square 1-2-3-4.
pub const D8_CONNECTION_SET: [&str; 3] = ["(14)(23)", "(13)", "(12)(34)"];

pub fn build_cayley_s3() -> Result<Graph> {
    build_cayley_named(
        &PermutationGroupSpec::from_cycles(3, &S3_CONNECTION_SET)?,
        "s3",
    )
}

pub fn build_cayley_s3_transpositions() -> Result<Graph> {
    build_cayley_named(
        &PermutationGroupSpec::from_cycles(3, &S3_TRANSPOSITIONS)?,
        "s3_transpositions",
    )
}

pub fn build_cayley_d8() -> Result<Graph> {
    build_cayley_named(
        &PermutationGroupSpec::from_cycles(4, &D8_CONNECTION_SET)?,
        "d8",
    )
}
