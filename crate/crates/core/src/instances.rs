//! Instance generators: seeded random point sets and the grid-graph sphere embedding.
//!
//! The embedding is the only floating-point code in the crate. It places a grid
//! graph on the unit sphere so that adjacent vertices end up almost antipodal,
//! which ties long Euclidean tours to Hamiltonian cycles of the grid.

use std::collections::{HashMap, HashSet, VecDeque};
use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::norms::Point;

/// `n` points with integer coordinates drawn uniformly from `[-bound, bound]`.
pub fn random_points(n: usize, dimension: usize, bound: i64, seed: u64) -> Vec<Point> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bound = bound.abs();
    (0..n)
        .map(|_| {
            let coords: Vec<i64> = (0..dimension).map(|_| rng.gen_range(-bound..=bound)).collect();
            Point::from_ints(&coords)
        })
        .collect()
}

/// A connected set of lattice points; two vertices are adjacent at unit distance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GridGraph {
    vertices: Vec<(i64, i64)>,
}

impl GridGraph {
    pub fn new(vertices: Vec<(i64, i64)>) -> Result<Self> {
        if vertices.is_empty() {
            return Err(invalid("grid graph needs at least one vertex"));
        }
        let set: HashSet<_> = vertices.iter().copied().collect();
        if set.len() != vertices.len() {
            return Err(invalid("grid graph has repeated vertices"));
        }
        let mut seen = HashSet::from([vertices[0]]);
        let mut queue = VecDeque::from([vertices[0]]);
        while let Some((x, y)) = queue.pop_front() {
            for nb in [(x + 1, y), (x - 1, y), (x, y + 1), (x, y - 1)] {
                if set.contains(&nb) && seen.insert(nb) {
                    queue.push_back(nb);
                }
            }
        }
        if seen.len() != vertices.len() {
            return Err(invalid("grid graph is not connected"));
        }
        Ok(GridGraph { vertices })
    }

    /// Straight path of `len` vertices along the x axis.
    pub fn path(len: usize) -> Result<Self> {
        Self::new((0..len as i64).map(|x| (x, 0)).collect())
    }

    /// Full `width × height` rectangle.
    pub fn rectangle(width: usize, height: usize) -> Result<Self> {
        Self::new((0..height as i64).flat_map(|y| (0..width as i64).map(move |x| (x, y))).collect())
    }

    /// Boundary ring of a `width × height` rectangle (both sides at least 2).
    pub fn ring(width: usize, height: usize) -> Result<Self> {
        if width < 2 || height < 2 {
            return Err(invalid("ring needs both sides at least 2"));
        }
        let (w, h) = (width as i64, height as i64);
        let vertices = (0..h)
            .flat_map(|y| (0..w).map(move |x| (x, y)))
            .filter(|&(x, y)| x == 0 || y == 0 || x == w - 1 || y == h - 1)
            .collect();
        Self::new(vertices)
    }

    /// Connected random subset grown from the origin one neighbour at a time.
    pub fn random_connected(n: usize, seed: u64) -> Result<Self> {
        if n == 0 {
            return Err(invalid("grid graph needs at least one vertex"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut vertices = vec![(0i64, 0i64)];
        let mut set = HashSet::from([(0i64, 0i64)]);
        while vertices.len() < n {
            let (x, y) = vertices[rng.gen_range(0..vertices.len())];
            let nb = [(x + 1, y), (x - 1, y), (x, y + 1), (x, y - 1)][rng.gen_range(0..4)];
            if set.insert(nb) {
                vertices.push(nb);
            }
        }
        Self::new(vertices)
    }

    pub fn n(&self) -> usize {
        self.vertices.len()
    }

    pub fn vertices(&self) -> &[(i64, i64)] {
        &self.vertices
    }

    pub fn adjacent(&self, i: usize, j: usize) -> bool {
        let (a, b) = (self.vertices[i], self.vertices[j]);
        (a.0 - b.0).abs() + (a.1 - b.1).abs() == 1
    }

    pub fn is_even(&self, i: usize) -> bool {
        (self.vertices[i].0 + self.vertices[i].1).rem_euclid(2) == 0
    }

    /// Exhaustive Hamiltonian-cycle search; fine for a few dozen vertices at most.
    pub fn is_hamiltonian(&self) -> bool {
        let n = self.n();
        if n < 3 {
            return false;
        }
        let index: HashMap<_, _> = self.vertices.iter().enumerate().map(|(i, &v)| (v, i)).collect();
        let nbrs: Vec<Vec<usize>> = self
            .vertices
            .iter()
            .map(|&(x, y)| {
                [(x + 1, y), (x - 1, y), (x, y + 1), (x, y - 1)].iter().filter_map(|v| index.get(v).copied()).collect()
            })
            .collect();
        fn rec(nbrs: &[Vec<usize>], used: &mut [bool], last: usize, depth: usize) -> bool {
            if depth == used.len() {
                return nbrs[last].contains(&0);
            }
            for &c in &nbrs[last] {
                if !used[c] {
                    used[c] = true;
                    if rec(nbrs, used, c, depth + 1) {
                        return true;
                    }
                    used[c] = false;
                }
            }
            false
        }
        let mut used = vec![false; n];
        used[0] = true;
        rec(&nbrs, &mut used, 0, 1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Parity {
    Even,
    Odd,
}

/// A grid graph placed on the unit sphere.
#[derive(Debug, Clone, PartialEq)]
pub struct SphereEmbedding {
    pub psi: f64,
    pub points: Vec<[f64; 3]>,
    pub parity: Vec<Parity>,
    pub eps_bound: f64,
}

impl SphereEmbedding {
    pub fn n(&self) -> usize {
        self.points.len()
    }

    pub fn distance(&self, i: usize, j: usize) -> f64 {
        euclid(&self.points[i], &self.points[j])
    }

    /// Tours at least this long exist exactly when the grid graph is Hamiltonian.
    pub fn hamiltonian_threshold(&self) -> f64 {
        let n = self.n() as f64;
        2.0 * n - n * self.psi * self.psi / 4.0 - n * self.eps_bound
    }
}

fn euclid(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

fn spherical(lon: f64, lat: f64) -> [f64; 3] {
    [lon.cos() * lat.cos(), lon.sin() * lat.cos(), lat.sin()]
}

fn squared_gap(g: &GridGraph, i: usize, j: usize) -> f64 {
    let (a, b) = (g.vertices[i], g.vertices[j]);
    ((a.0 - b.0).pow(2) + (a.1 - b.1).pow(2)) as f64
}

/// Embeds with `psi = 2π/n³`; even vertices at `(xψ, yψ)`, odd ones at `(π + xψ, −yψ)`.
///
/// `eps_bound` is ten times the largest deviation of a cross-parity distance from
/// its leading-order value `2 − Δ²ψ²/4`, where `Δ²` is the squared lattice gap.
pub fn embed_grid_graph(g: &GridGraph) -> Result<SphereEmbedding> {
    let n = g.n();
    if n < 4 {
        return Err(invalid(format!("embedding needs at least 4 vertices, got {n}")));
    }
    let psi = 2.0 * PI / (n as f64).powi(3);
    let parity: Vec<Parity> = (0..n).map(|i| if g.is_even(i) { Parity::Even } else { Parity::Odd }).collect();
    let points: Vec<[f64; 3]> = g
        .vertices
        .iter()
        .zip(&parity)
        .map(|(&(x, y), p)| {
            let (x, y) = (x as f64 * psi, y as f64 * psi);
            match p {
                Parity::Even => spherical(x, y),
                Parity::Odd => spherical(PI + x, -y),
            }
        })
        .collect();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i + 1..n {
            if parity[i] != parity[j] {
                let lead = 2.0 - squared_gap(g, i, j) * psi * psi / 4.0;
                worst = worst.max((euclid(&points[i], &points[j]) - lead).abs());
            }
        }
    }
    Ok(SphereEmbedding { psi, points, parity, eps_bound: 10.0 * worst })
}

/// Checks the three distance bands and that the adjacent band is separated from the rest.
pub fn separation_certificate(emb: &SphereEmbedding, g: &GridGraph) -> Result<bool> {
    let n = g.n();
    if emb.n() != n || emb.parity.len() != n {
        return Err(invalid("embedding and grid graph differ in size"));
    }
    if (0..n).any(|i| (emb.parity[i] == Parity::Even) != g.is_even(i)) {
        return Err(invalid("embedding parity tags do not match the grid graph"));
    }
    let (psi, eps) = (emb.psi, emb.eps_bound);
    let adjacent_mid = 2.0 - psi * psi / 4.0;
    let (adj_lo, adj_hi) = (adjacent_mid - eps, adjacent_mid + eps);
    let cross_hi = 2.0 - 5f64.sqrt() * psi * psi / 4.0 + eps;
    let same_hi = n as f64 * psi;
    if !(adj_lo > cross_hi && adj_lo > same_hi) {
        return Ok(false);
    }
    if emb.points.iter().any(|p| (p.iter().map(|c| c * c).sum::<f64>().sqrt() - 1.0).abs() > 1e-12) {
        return Ok(false);
    }
    for i in 0..n {
        for j in i + 1..n {
            let d = emb.distance(i, j);
            let ok = if emb.parity[i] == emb.parity[j] {
                d <= same_hi
            } else if g.adjacent(i, j) {
                (adj_lo..=adj_hi).contains(&d)
            } else {
                d <= cross_hi
            };
            if !ok {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Sizes used to calibrate the `eps_bound <= C / n^8` check.
pub const CALIBRATION_SIZES: [usize; 3] = [10, 20, 40];

/// Largest `eps_bound · n^8` over straight paths of the calibration sizes.
///
/// Paths stretch coordinates the furthest for a given `n`, so they give the
/// loosest deviation among connected grid graphs anchored at the origin.
pub fn calibrate_eps_constant() -> f64 {
    CALIBRATION_SIZES
        .iter()
        .map(|&n| {
            let emb = embed_grid_graph(&GridGraph::path(n).expect("paths are connected")).expect("n >= 4");
            emb.eps_bound * (n as f64).powi(8)
        })
        .fold(0.0, f64::max)
}

/// Paths, rings, rectangles and random connected subsets with 4 to 40 vertices.
pub fn grid_corpus() -> Vec<GridGraph> {
    let mut corpus = Vec::new();
    for len in [4, 5, 7, 8, 12, 20, 33, 40] {
        corpus.push(GridGraph::path(len).expect("path"));
    }
    for (w, h) in [(2, 2), (2, 3), (3, 3), (4, 4), (5, 6), (10, 10), (11, 11)] {
        corpus.push(GridGraph::ring(w, h).expect("ring"));
    }
    for (w, h) in [(2, 2), (2, 3), (2, 4), (3, 3), (4, 5), (5, 8), (6, 6)] {
        corpus.push(GridGraph::rectangle(w, h).expect("rectangle"));
    }
    for (k, n) in [4, 5, 6, 7, 8, 8, 10, 15, 23, 31, 40].into_iter().enumerate() {
        corpus.push(GridGraph::random_connected(n, 1000 + k as u64).expect("random subset"));
    }
    corpus
}
