//! Random graph families and exact MaxCut by exhaustive enumeration.
//!
//! Six families are supported: unweighted and Gaussian-weighted variants of
//! 3-regular, Barabási–Albert, and Erdős–Rényi graphs. Generation is pure
//! given a seed; graphs are immutable after construction.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use thiserror::Error;

use crate::seeds::{self, domain};

/// Largest vertex count accepted by [`exact_maxcut`].
pub const MAX_EXACT_N: usize = 30;

/// Default Erdős–Rényi edge probability.
pub const DEFAULT_ER_EDGE_PROB: f64 = 0.5;
/// Default Barabási–Albert attachment count.
pub const DEFAULT_BA_ATTACH: usize = 6;
/// Default Gaussian edge-weight mean.
pub const DEFAULT_WEIGHT_MEAN: f64 = 1.0;
/// Default Gaussian edge-weight standard deviation.
pub const DEFAULT_WEIGHT_STD: f64 = 0.5;

const REGULAR_PAIRING_RETRIES: usize = 10_000;
const CONNECTIVITY_RETRIES: u64 = 100;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("vertex count must be at least 2, got {0}")]
    TooFewVertices(usize),
    #[error("3-regular graphs need even n >= 4, got n = {0}")]
    InvalidRegularOrder(usize),
    #[error("Barabási–Albert needs n > m, got n = {n}, m = {m}")]
    InvalidAttachment { n: usize, m: usize },
    #[error("edge probability must lie in (0, 1), got {0}")]
    InvalidEdgeProbability(f64),
    #[error("weight std deviation must be >= 0, got {0}")]
    InvalidWeightStd(f64),
    #[error("graph already carries non-unit weights")]
    AlreadyWeighted,
    #[error("{what} retries exhausted after {attempts} attempts")]
    RetriesExhausted { what: &'static str, attempts: usize },
    #[error("exact enumeration refused for n = {n} (limit {limit})")]
    EnumerationTooLarge { n: usize, limit: usize },
    #[error("assignment length {got} does not match vertex count {expected}")]
    AssignmentLength { expected: usize, got: usize },
    #[error("invalid edge ({u}, {v}) for n = {n}")]
    InvalidEdge { u: usize, v: usize, n: usize },
    #[error("duplicate edge ({u}, {v})")]
    DuplicateEdge { u: usize, v: usize },
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

/// Tag identifying one of the six graph families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FamilyTag {
    U3r,
    Uba,
    Uer,
    W3r,
    Wba,
    Wer,
}

impl FamilyTag {
    pub const ALL: [FamilyTag; 6] = [
        FamilyTag::U3r,
        FamilyTag::Uba,
        FamilyTag::Uer,
        FamilyTag::W3r,
        FamilyTag::Wba,
        FamilyTag::Wer,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            FamilyTag::U3r => "u3r",
            FamilyTag::Uba => "uba",
            FamilyTag::Uer => "uer",
            FamilyTag::W3r => "w3r",
            FamilyTag::Wba => "wba",
            FamilyTag::Wer => "wer",
        }
    }

    pub fn is_weighted(&self) -> bool {
        matches!(self, FamilyTag::W3r | FamilyTag::Wba | FamilyTag::Wer)
    }
}

impl fmt::Display for FamilyTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FamilyTag {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "u3r" => Ok(FamilyTag::U3r),
            "uba" => Ok(FamilyTag::Uba),
            "uer" => Ok(FamilyTag::Uer),
            "w3r" => Ok(FamilyTag::W3r),
            "wba" => Ok(FamilyTag::Wba),
            "wer" => Ok(FamilyTag::Wer),
            other => Err(format!("unknown graph family '{other}'")),
        }
    }
}

/// A graph family together with its generation parameters.
///
/// Weighted variants carry the Gaussian weight distribution `(mu, sigma)`;
/// unweighted variants carry none and produce unit weights exactly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GraphFamily {
    U3r,
    Uba { m: usize },
    Uer { p_edge: f64 },
    W3r { mu: f64, sigma: f64 },
    Wba { m: usize, mu: f64, sigma: f64 },
    Wer { p_edge: f64, mu: f64, sigma: f64 },
}

impl GraphFamily {
    /// Family with the default parameters for `tag` (m = 6, p = 0.5,
    /// weights Normal(1.0, 0.5)).
    pub fn with_defaults(tag: FamilyTag) -> Self {
        match tag {
            FamilyTag::U3r => GraphFamily::U3r,
            FamilyTag::Uba => GraphFamily::Uba {
                m: DEFAULT_BA_ATTACH,
            },
            FamilyTag::Uer => GraphFamily::Uer {
                p_edge: DEFAULT_ER_EDGE_PROB,
            },
            FamilyTag::W3r => GraphFamily::W3r {
                mu: DEFAULT_WEIGHT_MEAN,
                sigma: DEFAULT_WEIGHT_STD,
            },
            FamilyTag::Wba => GraphFamily::Wba {
                m: DEFAULT_BA_ATTACH,
                mu: DEFAULT_WEIGHT_MEAN,
                sigma: DEFAULT_WEIGHT_STD,
            },
            FamilyTag::Wer => GraphFamily::Wer {
                p_edge: DEFAULT_ER_EDGE_PROB,
                mu: DEFAULT_WEIGHT_MEAN,
                sigma: DEFAULT_WEIGHT_STD,
            },
        }
    }

    pub fn tag(&self) -> FamilyTag {
        match self {
            GraphFamily::U3r => FamilyTag::U3r,
            GraphFamily::Uba { .. } => FamilyTag::Uba,
            GraphFamily::Uer { .. } => FamilyTag::Uer,
            GraphFamily::W3r { .. } => FamilyTag::W3r,
            GraphFamily::Wba { .. } => FamilyTag::Wba,
            GraphFamily::Wer { .. } => FamilyTag::Wer,
        }
    }

    pub fn is_weighted(&self) -> bool {
        self.tag().is_weighted()
    }

    /// Gaussian weight parameters, present only for weighted families.
    pub fn weight_params(&self) -> Option<(f64, f64)> {
        match *self {
            GraphFamily::W3r { mu, sigma }
            | GraphFamily::Wba { mu, sigma, .. }
            | GraphFamily::Wer { mu, sigma, .. } => Some((mu, sigma)),
            _ => None,
        }
    }
}

/// Undirected edge in canonical order (`u < v`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub u: usize,
    pub v: usize,
    pub w: f64,
}

/// An undirected weighted graph with generation provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    n: usize,
    edges: Vec<Edge>,
    family: FamilyTag,
    seed: u64,
}

impl Graph {
    /// Builds a graph, validating canonical edge order and uniqueness.
    pub fn new(
        n: usize,
        edges: Vec<Edge>,
        family: FamilyTag,
        seed: u64,
    ) -> Result<Self, GraphError> {
        if n < 2 {
            return Err(GraphError::TooFewVertices(n));
        }
        let mut seen = HashSet::with_capacity(edges.len());
        for e in &edges {
            if e.u >= e.v || e.v >= n {
                return Err(GraphError::InvalidEdge { u: e.u, v: e.v, n });
            }
            if !seen.insert((e.u, e.v)) {
                return Err(GraphError::DuplicateEdge { u: e.u, v: e.v });
            }
        }
        Ok(Self {
            n,
            edges,
            family,
            seed,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn family(&self) -> FamilyTag {
        self.family
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn total_weight(&self) -> f64 {
        self.edges.iter().map(|e| e.w).sum()
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0usize; self.n];
        for e in &self.edges {
            deg[e.u] += 1;
            deg[e.v] += 1;
        }
        deg
    }

    /// Adjacency lists with weights, both directions.
    pub fn adjacency(&self) -> Vec<Vec<(usize, f64)>> {
        let mut adj = vec![Vec::new(); self.n];
        for e in &self.edges {
            adj[e.u].push((e.v, e.w));
            adj[e.v].push((e.u, e.w));
        }
        adj
    }

    pub fn is_connected(&self) -> bool {
        if self.n == 0 {
            return true;
        }
        let adj = self.adjacency();
        let mut seen = vec![false; self.n];
        let mut stack = vec![0usize];
        seen[0] = true;
        let mut count = 1;
        while let Some(v) = stack.pop() {
            for &(u, _) in &adj[v] {
                if !seen[u] {
                    seen[u] = true;
                    count += 1;
                    stack.push(u);
                }
            }
        }
        count == self.n
    }
}

/// Exact MaxCut value with a witnessing bipartition.
#[derive(Debug, Clone, PartialEq)]
pub struct CutResult {
    pub c_max: f64,
    pub witness: Vec<bool>,
}

/// Generates one graph of `family` with `n` vertices, deterministically for
/// a fixed seed. Weighted families sample Gaussian edge weights from a
/// sub-seeded stream. Disconnected ER/BA draws are regenerated with an
/// incremented sub-seed, up to a bounded number of retries.
pub fn generate_graph(family: &GraphFamily, n: usize, seed: u64) -> Result<Graph, GraphError> {
    if n < 2 {
        return Err(GraphError::TooFewVertices(n));
    }
    let edges = match *family {
        GraphFamily::U3r | GraphFamily::W3r { .. } => three_regular_edges(n, seed)?,
        GraphFamily::Uba { m } | GraphFamily::Wba { m, .. } => connected_retry(n, seed, "BA", |s| {
            barabasi_albert_edges(n, m, s)
        })?,
        GraphFamily::Uer { p_edge } | GraphFamily::Wer { p_edge, .. } => {
            connected_retry(n, seed, "ER", |s| erdos_renyi_edges(n, p_edge, s))?
        }
    };
    let g = Graph::new(n, edges, family.tag(), seed)?;
    match family.weight_params() {
        Some((mu, sigma)) => {
            assign_gaussian_weights(&g, mu, sigma, seeds::derive(seed, domain::GRAPH_WEIGHTS, 0, 0))
        }
        None => Ok(g),
    }
}

fn connected_retry(
    n: usize,
    seed: u64,
    what: &'static str,
    mut gen: impl FnMut(u64) -> Result<Vec<Edge>, GraphError>,
) -> Result<Vec<Edge>, GraphError> {
    for attempt in 0..CONNECTIVITY_RETRIES {
        let sub = seeds::derive(seed, domain::GRAPH_RETRY, attempt, 0);
        let edges = gen(sub)?;
        let g = Graph::new(n, edges, FamilyTag::Uer, seed)?;
        if g.is_connected() {
            return Ok(g.edges.clone());
        }
    }
    Err(GraphError::RetriesExhausted {
        what,
        attempts: CONNECTIVITY_RETRIES as usize,
    })
}

/// Configuration-model 3-regular simple graph; rejects pairings containing
/// self-loops or multi-edges.
fn three_regular_edges(n: usize, seed: u64) -> Result<Vec<Edge>, GraphError> {
    if n < 4 || !n.is_multiple_of(2) {
        return Err(GraphError::InvalidRegularOrder(n));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seeds::derive(seed, domain::GRAPH_TOPOLOGY, 0, 0));
    let mut stubs: Vec<usize> = (0..n).flat_map(|v| [v, v, v]).collect();
    'attempt: for _ in 0..REGULAR_PAIRING_RETRIES {
        stubs.shuffle(&mut rng);
        let mut seen = HashSet::with_capacity(3 * n / 2);
        let mut edges = Vec::with_capacity(3 * n / 2);
        for pair in stubs.chunks_exact(2) {
            let (a, b) = (pair[0].min(pair[1]), pair[0].max(pair[1]));
            if a == b || !seen.insert((a, b)) {
                continue 'attempt;
            }
            edges.push(Edge { u: a, v: b, w: 1.0 });
        }
        edges.sort_by_key(|e| (e.u, e.v));
        return Ok(edges);
    }
    Err(GraphError::RetriesExhausted {
        what: "3-regular pairing",
        attempts: REGULAR_PAIRING_RETRIES,
    })
}

/// Each vertex pair is included independently with probability `p_edge`.
fn erdos_renyi_edges(n: usize, p_edge: f64, seed: u64) -> Result<Vec<Edge>, GraphError> {
    if !(p_edge > 0.0 && p_edge < 1.0) {
        return Err(GraphError::InvalidEdgeProbability(p_edge));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = Vec::new();
    for u in 0..n {
        for v in (u + 1)..n {
            if rng.random_bool(p_edge) {
                edges.push(Edge { u, v, w: 1.0 });
            }
        }
    }
    Ok(edges)
}

/// Preferential attachment starting from `m` isolated seed vertices: the
/// first incoming vertex links to all seeds, later vertices to `m` distinct
/// existing vertices drawn proportionally to degree. Yields exactly
/// `(n - m) * m` edges.
fn barabasi_albert_edges(n: usize, m: usize, seed: u64) -> Result<Vec<Edge>, GraphError> {
    if m == 0 || n <= m {
        return Err(GraphError::InvalidAttachment { n, m });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = Vec::with_capacity((n - m) * m);
    // One entry per edge endpoint, so uniform draws are degree-proportional.
    let mut repeated: Vec<usize> = Vec::with_capacity(2 * (n - m) * m);
    let mut targets: Vec<usize> = (0..m).collect();
    for source in m..n {
        for &t in &targets {
            let (a, b) = (t.min(source), t.max(source));
            edges.push(Edge { u: a, v: b, w: 1.0 });
        }
        repeated.extend_from_slice(&targets);
        repeated.extend(std::iter::repeat_n(source, m));
        if source + 1 < n {
            let mut chosen = HashSet::with_capacity(m);
            while chosen.len() < m {
                chosen.insert(repeated[rng.random_range(0..repeated.len())]);
            }
            targets = chosen.into_iter().collect();
            targets.sort_unstable();
        }
    }
    edges.sort_by_key(|e| (e.u, e.v));
    Ok(edges)
}

/// Replaces unit weights with independent Normal(mu, sigma) draws in edge
/// order; topology, family tag, and seed provenance are unchanged.
pub fn assign_gaussian_weights(
    g: &Graph,
    mu: f64,
    sigma: f64,
    seed: u64,
) -> Result<Graph, GraphError> {
    if sigma < 0.0 || !sigma.is_finite() || !mu.is_finite() {
        return Err(GraphError::InvalidWeightStd(sigma));
    }
    if g.edges.iter().any(|e| e.w != 1.0) {
        return Err(GraphError::AlreadyWeighted);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(mu, sigma).map_err(|_| GraphError::InvalidWeightStd(sigma))?;
    let edges = g
        .edges
        .iter()
        .map(|e| Edge {
            u: e.u,
            v: e.v,
            w: normal.sample(&mut rng),
        })
        .collect();
    Ok(Graph {
        n: g.n,
        edges,
        family: g.family,
        seed: g.seed,
    })
}

/// Total weight of edges whose endpoints fall on different sides.
pub fn cut_value(g: &Graph, assignment: &[bool]) -> Result<f64, GraphError> {
    if assignment.len() != g.n {
        return Err(GraphError::AssignmentLength {
            expected: g.n,
            got: assignment.len(),
        });
    }
    Ok(cut_sum(&g.edges, assignment))
}

#[inline]
fn cut_sum(edges: &[Edge], assignment: &[bool]) -> f64 {
    let mut total = 0.0;
    for e in edges {
        if assignment[e.u] != assignment[e.v] {
            total += e.w;
        }
    }
    total
}

/// Exhaustive MaxCut over all 2^(n-1) bipartitions (vertex 0 pinned to one
/// side), walking assignments in Gray-code order so each step touches only
/// the flipped vertex's incident edges. Candidate improvements are re-summed
/// in edge order, so the returned value is free of incremental drift and
/// ties resolve to the first witness encountered.
pub fn exact_maxcut(g: &Graph) -> Result<CutResult, GraphError> {
    if g.n > MAX_EXACT_N {
        return Err(GraphError::EnumerationTooLarge {
            n: g.n,
            limit: MAX_EXACT_N,
        });
    }
    let adj = g.adjacency();
    let mut side = vec![false; g.n];
    let mut best = cut_sum(&g.edges, &side);
    let mut witness = side.clone();
    let mut running = best;
    let steps = 1u64 << (g.n - 1);
    for step in 1..steps {
        let v = step.trailing_zeros() as usize + 1;
        let mut delta = 0.0;
        for &(u, w) in &adj[v] {
            delta += if side[u] != side[v] { -w } else { w };
        }
        side[v] = !side[v];
        running += delta;
        if running > best - 1e-9 {
            let exact = cut_sum(&g.edges, &side);
            if exact > best {
                best = exact;
                witness.copy_from_slice(&side);
            }
        }
    }
    Ok(CutResult {
        c_max: best,
        witness,
    })
}

/// Writes a graph in the line-oriented text format:
/// `n <n> family <tag> seed <seed>` followed by one `u v w` line per edge,
/// weights at 17 significant digits.
pub fn serialize_graph(g: &Graph) -> String {
    let mut out = format!("n {} family {} seed {}\n", g.n, g.family, g.seed);
    for e in &g.edges {
        out.push_str(&format!("{} {} {:.16e}\n", e.u, e.v, e.w));
    }
    out
}

/// Parses the text format produced by [`serialize_graph`].
pub fn deserialize_graph(text: &str) -> Result<Graph, GraphError> {
    let parse_err = |line: usize, msg: &str| GraphError::Parse {
        line,
        msg: msg.to_string(),
    };
    let mut lines = text.lines().enumerate();
    let (hline, header) = lines
        .next()
        .ok_or_else(|| parse_err(1, "empty input, expected header"))?;
    let tokens: Vec<&str> = header.split_whitespace().collect();
    if tokens.len() != 6 || tokens[0] != "n" || tokens[2] != "family" || tokens[4] != "seed" {
        return Err(parse_err(
            hline + 1,
            "expected header 'n <n> family <tag> seed <seed>'",
        ));
    }
    let n: usize = tokens[1]
        .parse()
        .map_err(|_| parse_err(hline + 1, "invalid vertex count"))?;
    let family =
        FamilyTag::from_str(tokens[3]).map_err(|e| parse_err(hline + 1, &e))?;
    let seed: u64 = tokens[5]
        .parse()
        .map_err(|_| parse_err(hline + 1, "invalid seed"))?;
    if n < 2 {
        return Err(parse_err(hline + 1, "vertex count must be at least 2"));
    }

    let mut edges = Vec::new();
    let mut seen = HashSet::new();
    for (idx, line) in lines {
        let lineno = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split_whitespace().collect();
        if parts.len() != 3 {
            return Err(parse_err(lineno, "expected 'u v w'"));
        }
        let u: usize = parts[0]
            .parse()
            .map_err(|_| parse_err(lineno, "invalid vertex index"))?;
        let v: usize = parts[1]
            .parse()
            .map_err(|_| parse_err(lineno, "invalid vertex index"))?;
        let w: f64 = parts[2]
            .parse()
            .map_err(|_| parse_err(lineno, "invalid weight"))?;
        if u == v {
            return Err(parse_err(lineno, "self-loop"));
        }
        if u > v {
            return Err(parse_err(lineno, "edge not in canonical order u < v"));
        }
        if v >= n {
            return Err(parse_err(lineno, "vertex index out of range"));
        }
        if !w.is_finite() {
            return Err(parse_err(lineno, "non-finite weight"));
        }
        if !seen.insert((u, v)) {
            return Err(parse_err(lineno, "duplicate edge"));
        }
        edges.push(Edge { u, v, w });
    }
    Graph::new(n, edges, family, seed)
}
