//! Power-network graphs: vertices carry an electricity surplus, edges are
//! transmission lines with an optional transfer weight.
//!
//! Instances come from SciGRID-style CSV tables ([`load_network`]) or from
//! the synthetic generators in this module.

use std::collections::{HashMap, HashSet, VecDeque};
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Vertex {
    pub id: String,
    pub surplus: f64,
    /// Longitude/latitude of the area centre, when known.
    pub position: Option<(f64, f64)>,
}

/// An undirected transmission line between vertex indices `u < v`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub u: usize,
    pub v: usize,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PowerGraph {
    vertices: Vec<Vertex>,
    edges: Vec<Edge>,
    index: HashMap<String, usize>,
}

impl PowerGraph {
    /// Builds a graph from vertices and index-based edges `(n, m, w_nm)`.
    ///
    /// Edge endpoints are normalized so that `u < v`; self-loops, duplicate
    /// edges, duplicate ids, non-finite surpluses and negative transfer
    /// weights are rejected.
    pub fn new(vertices: Vec<Vertex>, edges: Vec<(usize, usize, f64)>) -> Result<Self> {
        let mut index = HashMap::with_capacity(vertices.len());
        for (i, vertex) in vertices.iter().enumerate() {
            if !vertex.surplus.is_finite() {
                return Err(Error::InvalidGraph(format!(
                    "vertex {:?} has non-finite surplus",
                    vertex.id
                )));
            }
            if index.insert(vertex.id.clone(), i).is_some() {
                return Err(Error::Schema(format!("duplicate vertex id {:?}", vertex.id)));
            }
        }

        let mut seen = HashSet::with_capacity(edges.len());
        let mut normalized = Vec::with_capacity(edges.len());
        for (a, b, weight) in edges {
            if a >= vertices.len() || b >= vertices.len() {
                return Err(Error::InvalidGraph(format!(
                    "edge ({a}, {b}) references a vertex outside 0..{}",
                    vertices.len()
                )));
            }
            if a == b {
                return Err(Error::InvalidGraph(format!("self-loop on vertex {a}")));
            }
            if !(weight.is_finite() && weight >= 0.0) {
                return Err(Error::InvalidGraph(format!(
                    "edge ({a}, {b}) has invalid transfer weight {weight}"
                )));
            }
            let (u, v) = if a < b { (a, b) } else { (b, a) };
            if !seen.insert((u, v)) {
                return Err(Error::InvalidGraph(format!("duplicate edge ({u}, {v})")));
            }
            normalized.push(Edge { u, v, weight });
        }

        Ok(Self {
            vertices,
            edges: normalized,
            index,
        })
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn vertices(&self) -> &[Vertex] {
        &self.vertices
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn surplus(&self, n: usize) -> f64 {
        self.vertices[n].surplus
    }

    pub fn surpluses(&self) -> Vec<f64> {
        self.vertices.iter().map(|v| v.surplus).collect()
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.vertices.len()];
        for e in &self.edges {
            adj[e.u].push(e.v);
            adj[e.v].push(e.u);
        }
        adj
    }

    pub fn is_connected(&self) -> bool {
        if self.vertices.is_empty() {
            return true;
        }
        let adj = self.adjacency();
        let mut seen = vec![false; self.vertices.len()];
        let mut queue = VecDeque::from([0]);
        seen[0] = true;
        let mut count = 1;
        while let Some(n) = queue.pop_front() {
            for &m in &adj[n] {
                if !seen[m] {
                    seen[m] = true;
                    count += 1;
                    queue.push_back(m);
                }
            }
        }
        count == self.vertices.len()
    }

    /// Returns a copy with every surplus replaced.
    pub fn with_surpluses(&self, surpluses: &[f64]) -> Result<Self> {
        if surpluses.len() != self.vertices.len() {
            return Err(Error::Dimension {
                expected: self.vertices.len(),
                actual: surpluses.len(),
            });
        }
        let vertices = self
            .vertices
            .iter()
            .zip(surpluses)
            .map(|(v, &w)| Vertex {
                surplus: w,
                ..v.clone()
            })
            .collect();
        let edges = self.edges.iter().map(|e| (e.u, e.v, e.weight)).collect();
        Self::new(vertices, edges)
    }
}

/// Where vertex surpluses come from when ingesting tables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightPolicy {
    /// Read the named column of the vertices table.
    Column(String),
    /// Draw each surplus from U[0, 1) in vertex-row order.
    Uniform { seed: u64 },
}

impl Default for WeightPolicy {
    fn default() -> Self {
        WeightPolicy::Column("surplus".to_string())
    }
}

const DEFAULT_TRANSFER_WEIGHT: f64 = 1.0;

fn column(headers: &csv::StringRecord, name: &str) -> Option<usize> {
    headers.iter().position(|h| h.trim() == name)
}

fn required_column(headers: &csv::StringRecord, name: &str, source: &str) -> Result<usize> {
    column(headers, name).ok_or_else(|| Error::Parse {
        source_name: source.to_string(),
        row: 1,
        message: format!("missing required column {name:?}"),
    })
}

fn parse_field(
    record: &csv::StringRecord,
    idx: usize,
    source: &str,
    name: &str,
) -> Result<Option<f64>> {
    let row = record.position().map_or(0, |p| p.line() as usize);
    let raw = record.get(idx).ok_or_else(|| Error::Parse {
        source_name: source.to_string(),
        row,
        message: format!("missing field {name:?}"),
    })?;
    let raw = raw.trim();
    if raw.is_empty() {
        return Ok(None);
    }
    raw.parse::<f64>().map(Some).map_err(|_| Error::Parse {
        source_name: source.to_string(),
        row,
        message: format!("field {name:?} is not a number: {raw:?}"),
    })
}

fn string_field(record: &csv::StringRecord, idx: usize, source: &str, name: &str) -> Result<String> {
    let row = record.position().map_or(0, |p| p.line() as usize);
    match record.get(idx).map(str::trim) {
        Some(s) if !s.is_empty() => Ok(s.to_string()),
        _ => Err(Error::Parse {
            source_name: source.to_string(),
            row,
            message: format!("missing field {name:?}"),
        }),
    }
}

/// Reads a vertices table (`id,lon,lat[,surplus]`) and a links table
/// (`id,v1,v2[,capacity]`) into a [`PowerGraph`].
///
/// Duplicate links are collapsed (first occurrence wins) and self-loop rows
/// are dropped. A disconnected result is accepted with a warning.
pub fn load_network<V: Read, L: Read>(
    vertices_table: V,
    links_table: L,
    policy: &WeightPolicy,
) -> Result<PowerGraph> {
    let mut reader = csv::ReaderBuilder::new()
        .flexible(true)
        .from_reader(vertices_table);
    let headers = reader.headers()?.clone();
    let id_col = required_column(&headers, "id", "vertices")?;
    let lon_col = required_column(&headers, "lon", "vertices")?;
    let lat_col = required_column(&headers, "lat", "vertices")?;
    let weight_col = match policy {
        WeightPolicy::Column(name) => Some(required_column(&headers, name, "vertices")?),
        WeightPolicy::Uniform { .. } => None,
    };

    let mut vertices = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    for record in reader.records() {
        let record = record?;
        let row = record.position().map_or(0, |p| p.line() as usize);
        let id = string_field(&record, id_col, "vertices", "id")?;
        let lon = parse_field(&record, lon_col, "vertices", "lon")?;
        let lat = parse_field(&record, lat_col, "vertices", "lat")?;
        let surplus = match weight_col {
            Some(col) => parse_field(&record, col, "vertices", &headers[col])?.ok_or_else(|| {
                Error::Parse {
                    source_name: "vertices".to_string(),
                    row,
                    message: format!("empty surplus column {:?}", &headers[col]),
                }
            })?,
            None => 0.0,
        };
        if index.insert(id.clone(), vertices.len()).is_some() {
            return Err(Error::Schema(format!(
                "duplicate vertex id {id:?} at vertices row {row}"
            )));
        }
        vertices.push(Vertex {
            id,
            surplus,
            position: lon.zip(lat),
        });
    }

    if let WeightPolicy::Uniform { seed } = policy {
        let mut rng = ChaCha8Rng::seed_from_u64(*seed);
        for v in &mut vertices {
            v.surplus = rng.gen::<f64>();
        }
    }

    let mut reader = csv::ReaderBuilder::new()
        .flexible(true)
        .from_reader(links_table);
    let headers = reader.headers()?.clone();
    let link_id_col = required_column(&headers, "id", "links")?;
    let v1_col = required_column(&headers, "v1", "links")?;
    let v2_col = required_column(&headers, "v2", "links")?;
    let capacity_col = column(&headers, "capacity");

    let mut seen = HashSet::new();
    let mut edges = Vec::new();
    for record in reader.records() {
        let record = record?;
        let link = string_field(&record, link_id_col, "links", "id")?;
        let resolve = |col: usize, name: &str| -> Result<usize> {
            let id = string_field(&record, col, "links", name)?;
            index.get(&id).copied().ok_or(Error::DanglingEndpoint {
                link: link.clone(),
                vertex: id,
            })
        };
        let a = resolve(v1_col, "v1")?;
        let b = resolve(v2_col, "v2")?;
        let weight = match capacity_col {
            Some(col) => parse_field(&record, col, "links", "capacity")?
                .unwrap_or(DEFAULT_TRANSFER_WEIGHT),
            None => DEFAULT_TRANSFER_WEIGHT,
        };
        if a == b {
            log::warn!("dropping self-loop link {link}");
            continue;
        }
        let key = (a.min(b), a.max(b));
        if seen.insert(key) {
            edges.push((a, b, weight));
        } else {
            log::debug!("collapsing duplicate link {link}");
        }
    }

    let graph = PowerGraph::new(vertices, edges)?;
    if !graph.is_connected() {
        log::warn!(
            "network with {} vertices is not connected; partitioning proceeds regardless",
            graph.vertex_count()
        );
    }
    Ok(graph)
}

pub fn load_network_files(
    vertices_path: impl AsRef<Path>,
    links_path: impl AsRef<Path>,
    policy: &WeightPolicy,
) -> Result<PowerGraph> {
    let vp = vertices_path.as_ref();
    let lp = links_path.as_ref();
    let vf = File::open(vp).map_err(|e| Error::io(vp, e))?;
    let lf = File::open(lp).map_err(|e| Error::io(lp, e))?;
    load_network(vf, lf, policy)
}

/// Writes the graph in the same CSV schema [`load_network`] reads, with the
/// surplus in a `surplus` column and transfer weights in `capacity`.
pub fn write_network<V: Write, L: Write>(
    graph: &PowerGraph,
    vertices_out: V,
    links_out: L,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(vertices_out);
    w.write_record(["id", "lon", "lat", "surplus"])?;
    for v in &graph.vertices {
        let (lon, lat) = match v.position {
            Some((lon, lat)) => (lon.to_string(), lat.to_string()),
            None => (String::new(), String::new()),
        };
        w.write_record([v.id.clone(), lon, lat, v.surplus.to_string()])?;
    }
    w.flush().map_err(|e| Error::io("vertices", e))?;

    let mut w = csv::Writer::from_writer(links_out);
    w.write_record(["id", "v1", "v2", "capacity"])?;
    for (i, e) in graph.edges.iter().enumerate() {
        w.write_record([
            format!("l{i}"),
            graph.vertices[e.u].id.clone(),
            graph.vertices[e.v].id.clone(),
            e.weight.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io("links", e))?;
    Ok(())
}

pub fn write_network_files(
    graph: &PowerGraph,
    vertices_path: impl AsRef<Path>,
    links_path: impl AsRef<Path>,
) -> Result<()> {
    let vp = vertices_path.as_ref();
    let lp = links_path.as_ref();
    let vf = File::create(vp).map_err(|e| Error::io(vp, e))?;
    let lf = File::create(lp).map_err(|e| Error::io(lp, e))?;
    write_network(graph, vf, lf)
}

/// Two cliques of equal size joined by a single bridge edge.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CliquePairSpec {
    pub clique_size: usize,
    #[serde(default = "default_clique_mean")]
    pub target_mean: f64,
    #[serde(default = "default_clique_threshold")]
    pub threshold: f64,
    #[serde(default)]
    pub seed: u64,
}

fn default_clique_mean() -> f64 {
    0.45
}

fn default_clique_threshold() -> f64 {
    0.5
}

impl CliquePairSpec {
    pub fn new(clique_size: usize, seed: u64) -> Self {
        Self {
            clique_size,
            target_mean: default_clique_mean(),
            threshold: default_clique_threshold(),
            seed,
        }
    }
}

const CLIQUE_SPREAD: f64 = 0.3;

/// Generates the two-clique benchmark graph.
///
/// Vertices `a0..a{n-1}` form the first clique and `b0..b{n-1}` the second;
/// `a0`–`b0` is the bridge. Within each clique the surpluses are
/// `mean ± spread` in equal numbers (one vertex at exactly `mean` when `n` is
/// odd), so each clique averages to `mean`. The seed only decides which
/// vertices get the upper value.
pub fn generate_clique_pair(spec: &CliquePairSpec) -> Result<PowerGraph> {
    let n = spec.clique_size;
    if n < 2 {
        return Err(Error::InvalidSpec(format!("clique size {n} is below 2")));
    }
    if !(0.0..1.0).contains(&spec.target_mean) {
        return Err(Error::InvalidSpec(format!(
            "target mean surplus {} is outside [0, 1)",
            spec.target_mean
        )));
    }
    let mean = spec.target_mean;
    // Keep mean ± spread inside [0, 1).
    let spread = CLIQUE_SPREAD.min(mean).min((1.0 - mean) * 0.999_999);

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut vertices = Vec::with_capacity(2 * n);
    for prefix in ["a", "b"] {
        let mut signs: Vec<f64> = (0..n)
            .map(|i| {
                if n % 2 == 1 && i == n - 1 {
                    0.0
                } else if i % 2 == 0 {
                    1.0
                } else {
                    -1.0
                }
            })
            .collect();
        signs.shuffle(&mut rng);
        for (i, s) in signs.into_iter().enumerate() {
            vertices.push(Vertex {
                id: format!("{prefix}{i}"),
                surplus: mean + spread * s,
                position: None,
            });
        }
    }

    let mut edges = Vec::with_capacity(n * (n - 1) + 1);
    for offset in [0, n] {
        for i in 0..n {
            for j in (i + 1)..n {
                edges.push((offset + i, offset + j, DEFAULT_TRANSFER_WEIGHT));
            }
        }
    }
    edges.push((0, n, DEFAULT_TRANSFER_WEIGHT));
    PowerGraph::new(vertices, edges)
}

pub const RANDOM_GRAPH_SIZES: std::ops::RangeInclusive<usize> = 2..=8;

/// Random connected graph on `n` vertices with U[0, 1) surpluses.
///
/// Each vertex pair is an edge with probability `edge_probability`; the edge
/// set is redrawn until the graph is connected.
pub fn generate_random_graph(n: usize, edge_probability: f64, seed: u64) -> Result<PowerGraph> {
    if !RANDOM_GRAPH_SIZES.contains(&n) {
        return Err(Error::InvalidSpec(format!(
            "random graph size {n} outside {RANDOM_GRAPH_SIZES:?}"
        )));
    }
    if !(edge_probability > 0.0 && edge_probability <= 1.0) {
        return Err(Error::InvalidSpec(format!(
            "edge probability {edge_probability} outside (0, 1]"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let vertices: Vec<Vertex> = (0..n)
        .map(|i| Vertex {
            id: format!("n{i}"),
            surplus: rng.gen::<f64>(),
            position: None,
        })
        .collect();
    loop {
        let mut edges = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                if rng.gen::<f64>() < edge_probability {
                    edges.push((i, j, DEFAULT_TRANSFER_WEIGHT));
                }
            }
        }
        let graph = PowerGraph::new(vertices.clone(), edges)?;
        if graph.is_connected() {
            return Ok(graph);
        }
    }
}

/// Synthetic transmission network: `n` substations scattered over a
/// Germany-sized bounding box, each linked to its `neighbors` nearest
/// substations, with extra links joining any remaining components.
/// Surpluses are U[0, 1).
pub fn generate_geometric_network(n: usize, neighbors: usize, seed: u64) -> Result<PowerGraph> {
    if n < 2 || neighbors == 0 {
        return Err(Error::InvalidSpec(format!(
            "geometric network needs n >= 2 and neighbors >= 1 (got {n}, {neighbors})"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let vertices: Vec<Vertex> = (0..n)
        .map(|i| {
            let lon = rng.gen_range(6.0..15.0);
            let lat = rng.gen_range(47.5..55.0);
            Vertex {
                id: format!("s{i}"),
                surplus: rng.gen::<f64>(),
                position: Some((lon, lat)),
            }
        })
        .collect();
    let pos: Vec<(f64, f64)> = vertices.iter().map(|v| v.position.unwrap()).collect();
    let dist = |a: usize, b: usize| {
        let (x1, y1) = pos[a];
        let (x2, y2) = pos[b];
        ((x1 - x2) * (53.5f64.to_radians().cos())).hypot(y1 - y2)
    };

    let mut edge_set = HashSet::new();
    for a in 0..n {
        let mut others: Vec<usize> = (0..n).filter(|&b| b != a).collect();
        others.sort_by(|&x, &y| dist(a, x).total_cmp(&dist(a, y)));
        for &b in others.iter().take(neighbors) {
            edge_set.insert((a.min(b), a.max(b)));
        }
    }

    // Join components through their closest vertex pair.
    loop {
        let mut comp = vec![usize::MAX; n];
        let mut adj = vec![Vec::new(); n];
        for &(a, b) in &edge_set {
            adj[a].push(b);
            adj[b].push(a);
        }
        let mut count = 0;
        for s in 0..n {
            if comp[s] != usize::MAX {
                continue;
            }
            comp[s] = count;
            let mut stack = vec![s];
            while let Some(x) = stack.pop() {
                for &y in &adj[x] {
                    if comp[y] == usize::MAX {
                        comp[y] = count;
                        stack.push(y);
                    }
                }
            }
            count += 1;
        }
        if count == 1 {
            break;
        }
        let mut best = (f64::INFINITY, 0, 0);
        for a in 0..n {
            for b in 0..n {
                if comp[a] == 0 && comp[b] != 0 && dist(a, b) < best.0 {
                    best = (dist(a, b), a, b);
                }
            }
        }
        edge_set.insert((best.1.min(best.2), best.1.max(best.2)));
    }

    let mut edges: Vec<(usize, usize, f64)> = edge_set
        .into_iter()
        .map(|(a, b)| (a, b, DEFAULT_TRANSFER_WEIGHT))
        .collect();
    edges.sort_by(|x, y| (x.0, x.1).cmp(&(y.0, y.1)));
    PowerGraph::new(vertices, edges)
}
