//! Points, polyhedral norms and quasi-norms, and their reduction to tunnel
//! systems.
//!
//! A polyhedral norm is described by its half-facet vectors `h_1..h_{f/2}`:
//! `d(x, y) = max_i |(x - y) . h_i|`. A quasi-norm lists one vector per facet
//! and drops the absolute value, so it is generally asymmetric.

use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{contract, invalid, Error, Result};
use crate::numeric::{int, Scalar};

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Point {
    pub coords: Vec<Scalar>,
}

impl Point {
    pub fn new(coords: Vec<Scalar>) -> Self {
        Point { coords }
    }

    pub fn from_ints(coords: &[i64]) -> Self {
        Point::new(coords.iter().map(|&c| int(c)).collect())
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn dot(&self, v: &[Scalar]) -> Scalar {
        self.coords.iter().zip(v).map(|(a, b)| a * b).sum()
    }

    fn diff_dot(&self, other: &Point, v: &[Scalar]) -> Scalar {
        self.coords
            .iter()
            .zip(&other.coords)
            .zip(v)
            .map(|((a, b), h)| (a - b) * h)
            .sum()
    }
}

fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}

fn check_vectors(dimension: usize, vectors: &[Vec<Scalar>], what: &str) -> Result<()> {
    if dimension == 0 {
        return Err(invalid("dimension must be positive"));
    }
    if vectors.is_empty() {
        return Err(invalid(format!("{what} must be nonempty")));
    }
    for v in vectors {
        check_dim(dimension, v.len())?;
        if v.iter().all(Zero::is_zero) {
            return Err(invalid(format!("{what} contain the zero vector")));
        }
    }
    Ok(())
}

/// Centrally symmetric polyhedral norm given by its half-facet vectors.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PolyhedralNorm {
    dimension: usize,
    half_facets: Vec<Vec<Scalar>>,
}

impl PolyhedralNorm {
    pub fn new(dimension: usize, half_facets: Vec<Vec<Scalar>>) -> Result<Self> {
        check_vectors(dimension, &half_facets, "half-facet vectors")?;
        Ok(PolyhedralNorm {
            dimension,
            half_facets,
        })
    }

    pub fn from_ints(dimension: usize, half_facets: &[&[i64]]) -> Result<Self> {
        Self::new(
            dimension,
            half_facets
                .iter()
                .map(|h| h.iter().map(|&c| int(c)).collect())
                .collect(),
        )
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn half_facets(&self) -> &[Vec<Scalar>] {
        &self.half_facets
    }

    /// Number of facets of the unit ball, twice the number of half-facets.
    pub fn n_facets(&self) -> usize {
        2 * self.half_facets.len()
    }

    pub fn distance(&self, x: &Point, y: &Point) -> Result<Scalar> {
        distance_polyhedral(self, x, y)
    }
}

/// Asymmetric polyhedral distance, one vector per facet.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuasiNorm {
    dimension: usize,
    facets: Vec<Vec<Scalar>>,
}

impl QuasiNorm {
    pub fn new(dimension: usize, facets: Vec<Vec<Scalar>>) -> Result<Self> {
        check_vectors(dimension, &facets, "facet vectors")?;
        Ok(QuasiNorm { dimension, facets })
    }

    pub fn from_ints(dimension: usize, facets: &[&[i64]]) -> Result<Self> {
        Self::new(
            dimension,
            facets
                .iter()
                .map(|h| h.iter().map(|&c| int(c)).collect())
                .collect(),
        )
    }

    /// The planar quasi-norm whose unit ball is the triangle bounded by
    /// `x <= 1`, `y <= 1` and `x + y >= -1`.
    pub fn triangle() -> Self {
        Self::from_ints(2, &[&[1, 0], &[0, 1], &[-1, -1]]).expect("valid facets")
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn facets(&self) -> &[Vec<Scalar>] {
        &self.facets
    }

    pub fn distance(&self, x: &Point, y: &Point) -> Result<Scalar> {
        distance_quasi(self, x, y)
    }
}

pub fn distance_polyhedral(norm: &PolyhedralNorm, x: &Point, y: &Point) -> Result<Scalar> {
    check_dim(norm.dimension, x.dim())?;
    check_dim(norm.dimension, y.dim())?;
    Ok(norm
        .half_facets
        .iter()
        .map(|h| x.diff_dot(y, h).abs())
        .max()
        .expect("nonempty half-facets"))
}

pub fn distance_quasi(qnorm: &QuasiNorm, x: &Point, y: &Point) -> Result<Scalar> {
    check_dim(qnorm.dimension, x.dim())?;
    check_dim(qnorm.dimension, y.dim())?;
    if x == y {
        return Ok(Scalar::zero());
    }
    let d = qnorm
        .facets
        .iter()
        .map(|h| x.diff_dot(y, h))
        .max()
        .expect("nonempty facets");
    if d.is_positive() {
        Ok(d)
    } else {
        Err(Error::InvalidQuasiNorm)
    }
}

/// Rectilinear norm: the `2^(d-1)` sign vectors with leading `+1`.
///
/// The facet count is exponential in `d`; intended for small fixed dimension.
pub fn make_l1(d: usize) -> Result<PolyhedralNorm> {
    if d == 0 {
        return Err(invalid("dimension must be positive"));
    }
    let facets = (0..1usize << (d - 1))
        .map(|mask| {
            (0..d)
                .map(|i| {
                    if i == 0 || mask & (1 << (d - 1 - i)) == 0 {
                        int(1)
                    } else {
                        int(-1)
                    }
                })
                .collect()
        })
        .collect::<Vec<Vec<Scalar>>>();
    // The planar set is conventionally written {(1,1),(-1,1)}.
    let facets = if d == 2 {
        vec![vec![int(1), int(1)], vec![int(-1), int(1)]]
    } else {
        facets
    };
    PolyhedralNorm::new(d, facets)
}

/// Sup norm: the `d` unit vectors.
pub fn make_linf(d: usize) -> Result<PolyhedralNorm> {
    if d == 0 {
        return Err(invalid("dimension must be positive"));
    }
    let facets = (0..d)
        .map(|i| (0..d).map(|j| int(i64::from(i == j))).collect())
        .collect();
    PolyhedralNorm::new(d, facets)
}

/// Access-distance tables of a tunnel system.
///
/// Every connection between cities passes through one tunnel, entering one
/// end and leaving the other. With `symmetric` set, an edge may use a tunnel
/// in either direction; otherwise only front-to-back.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TunnelSystem {
    n_cities: usize,
    n_tunnels: usize,
    front: Vec<Vec<Scalar>>,
    back: Vec<Vec<Scalar>>,
    symmetric: bool,
}

impl TunnelSystem {
    pub fn new(front: Vec<Vec<Scalar>>, back: Vec<Vec<Scalar>>, symmetric: bool) -> Result<Self> {
        let n_cities = front.len();
        if back.len() != n_cities {
            return Err(invalid(
                "front and back tables disagree on the number of cities",
            ));
        }
        let n_tunnels = front.first().map_or(0, Vec::len);
        if n_cities > 0 && n_tunnels == 0 {
            return Err(invalid("a tunnel system needs at least one tunnel"));
        }
        if front.iter().chain(&back).any(|row| row.len() != n_tunnels) {
            return Err(invalid("ragged access-distance table"));
        }
        Ok(TunnelSystem {
            n_cities,
            n_tunnels,
            front,
            back,
            symmetric,
        })
    }

    pub fn n_cities(&self) -> usize {
        self.n_cities
    }

    pub fn n_tunnels(&self) -> usize {
        self.n_tunnels
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    pub fn front(&self, city: usize, tunnel: usize) -> &Scalar {
        &self.front[city][tunnel]
    }

    pub fn back(&self, city: usize, tunnel: usize) -> &Scalar {
        &self.back[city][tunnel]
    }

    /// Tunnel distance from `a` to `b`; directed when the system is asymmetric.
    pub fn distance(&self, a: usize, b: usize) -> Scalar {
        (0..self.n_tunnels)
            .map(|t| {
                let fwd = &self.front[a][t] + &self.back[b][t];
                if self.symmetric {
                    fwd.max(&self.back[a][t] + &self.front[b][t])
                } else {
                    fwd
                }
            })
            .max()
            .unwrap_or_else(Scalar::zero)
    }

    /// Directed view of a symmetric system: each tunnel is split into two
    /// one-way tunnels, one per direction of travel.
    pub fn to_directed(&self) -> TunnelSystem {
        if !self.symmetric {
            return self.clone();
        }
        let widen = |a: &Vec<Vec<Scalar>>, b: &Vec<Vec<Scalar>>| {
            a.iter()
                .zip(b)
                .map(|(ra, rb)| ra.iter().chain(rb).cloned().collect())
                .collect::<Vec<Vec<Scalar>>>()
        };
        TunnelSystem {
            n_cities: self.n_cities,
            n_tunnels: 2 * self.n_tunnels,
            front: widen(&self.front, &self.back),
            back: widen(&self.back, &self.front),
            symmetric: false,
        }
    }
}

fn dot_tables(
    cities: &[Point],
    vectors: &[Vec<Scalar>],
    dimension: usize,
) -> Result<(Vec<Vec<Scalar>>, Vec<Vec<Scalar>>)> {
    let mut front = Vec::with_capacity(cities.len());
    let mut back = Vec::with_capacity(cities.len());
    for c in cities {
        check_dim(dimension, c.dim())?;
        let row: Vec<Scalar> = vectors.iter().map(|h| c.dot(h)).collect();
        back.push(row.iter().map(|v| -v).collect());
        front.push(row);
    }
    Ok((front, back))
}

/// One tunnel per half-facet, `F(c, h) = c . h` and `B(c, h) = -c . h`.
pub fn build_tunnel_system(norm: &PolyhedralNorm, cities: &[Point]) -> Result<TunnelSystem> {
    let (front, back) = dot_tables(cities, &norm.half_facets, norm.dimension)?;
    Ok(TunnelSystem {
        n_cities: cities.len(),
        n_tunnels: norm.half_facets.len(),
        front,
        back,
        symmetric: true,
    })
}

/// One tunnel per facet; the directed tunnel distance reproduces the quasi-norm.
pub fn build_tunnel_system_quasi(qnorm: &QuasiNorm, cities: &[Point]) -> Result<TunnelSystem> {
    let (front, back) = dot_tables(cities, &qnorm.facets, qnorm.dimension)?;
    Ok(TunnelSystem {
        n_cities: cities.len(),
        n_tunnels: qnorm.facets.len(),
        front,
        back,
        symmetric: false,
    })
}

/// Invertible linear map of the plane.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AffineMap2D {
    pub linear: [[Scalar; 2]; 2],
}

impl AffineMap2D {
    pub fn apply(&self, p: &Point) -> Result<Point> {
        check_dim(2, p.dim())?;
        let [r0, r1] = &self.linear;
        Ok(Point::new(vec![p.dot(r0), p.dot(r1)]))
    }

    pub fn determinant(&self) -> Scalar {
        let [[a, b], [c, d]] = &self.linear;
        a * d - b * c
    }
}

/// Linear map taking a planar 4-facet norm to the rectilinear norm.
///
/// Rows are `(h1 + h2) / 2` and `(h1 - h2) / 2`, which realizes the identity
/// `max(|a|, |b|) = |a + b| / 2 + |a - b| / 2` for `a = v . h1`, `b = v . h2`.
pub fn four_facet_to_l1_transform(norm: &PolyhedralNorm) -> Result<AffineMap2D> {
    if norm.dimension != 2 || norm.half_facets.len() != 2 {
        return Err(contract(format!(
            "expected a planar norm with 4 facets, got dimension {} with {} facets",
            norm.dimension,
            norm.n_facets()
        )));
    }
    let (h1, h2) = (&norm.half_facets[0], &norm.half_facets[1]);
    let two = int(2);
    let row = |sign: i64| -> [Scalar; 2] {
        [
            (&h1[0] + &h2[0] * int(sign)) / &two,
            (&h1[1] + &h2[1] * int(sign)) / &two,
        ]
    };
    let map = AffineMap2D {
        linear: [row(1), row(-1)],
    };
    if map.determinant().is_zero() {
        return Err(Error::DegenerateNorm(
            "half-facet vectors are linearly dependent".into(),
        ));
    }
    Ok(map)
}

/// Rectilinear distance between two points of equal dimension.
pub fn l1_distance(x: &Point, y: &Point) -> Scalar {
    x.coords
        .iter()
        .zip(&y.coords)
        .map(|(a, b)| (a - b).abs())
        .sum()
}
