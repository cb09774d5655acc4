//! Exact Maximum TSP over a tunnel system.
//!
//! A tour maps to a multiset of typed edges between cities and tunnel ends in
//! which every city has degree two, every tunnel is entered as often at its
//! front as at its back, and the cities and used tunnels form one connected
//! piece. Conversely every such multiset can be rewired into a tour that is at
//! least as long.
//!
//! The search splits a selection into a spanning structure over the used
//! tunnels, which is enumerated (the identifier), and the remaining cities,
//! which are assigned to tunnel ends by a transportation problem. The degree
//! of the last used tunnel is left free and found by concave search.
//!
//! With a directed system every city instead needs exactly one front edge
//! (leaving) and one back edge (arriving).

use num_bigint::BigInt;
use num_traits::One;
use rayon::prelude::*;

use crate::error::{contract, invalid, Result};
use crate::norms::TunnelSystem;
use crate::numeric::{scale_to_i128, Exact, Scalar};
use crate::tour::Tour;
use crate::transportation::{max_transport, parametric_concave_argmax, ParametricProfile};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum End {
    Front,
    Back,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TypedEdge {
    pub city: usize,
    pub tunnel: usize,
    pub end: End,
}

/// Multiset of typed edges, repeated entries meaning multiplicity.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EdgeSelection {
    pub typed_edges: Vec<TypedEdge>,
    pub weight: Scalar,
}

/// Signature of a subproblem.
///
/// `tree` lists spanning-tree edges over `used_tunnels` by tunnel index.
/// Connector `i` joins the two tunnels of `tree[i]`, its edge to the first
/// typed `edge_typing[i].0` and to the second `edge_typing[i].1`.
/// `degree_prefix` fixes the half-degrees of all but the last two used tunnels.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Identifier {
    pub used_tunnels: Vec<usize>,
    pub tree: Vec<(usize, usize)>,
    pub connector_cities: Vec<usize>,
    pub edge_typing: Vec<(End, End)>,
    pub degree_prefix: Vec<u64>,
}

/// Solver output with the certificate it was built from.
#[derive(Debug, Clone)]
pub struct TunnelSolution {
    pub tour: Tour,
    pub selection: Option<EdgeSelection>,
    pub identifier: Option<Identifier>,
    /// Position of `identifier` in the enumeration order.
    pub identifier_rank: Option<u128>,
}

const BOTH_TYPINGS: [(End, End); 4] = [
    (End::Front, End::Front),
    (End::Front, End::Back),
    (End::Back, End::Front),
    (End::Back, End::Back),
];
const DIRECTED_TYPINGS: [(End, End); 2] = [(End::Front, End::Back), (End::Back, End::Front)];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Mode {
    Symmetric,
    Directed,
}

impl Mode {
    fn of(ts: &TunnelSystem) -> Self {
        if ts.is_symmetric() {
            Mode::Symmetric
        } else {
            Mode::Directed
        }
    }

    fn typings(self) -> &'static [(End, End)] {
        match self {
            Mode::Symmetric => &BOTH_TYPINGS,
            Mode::Directed => &DIRECTED_TYPINGS,
        }
    }
}

pub fn solve_max_tsp_tunnels(ts: &TunnelSystem) -> Result<Tour> {
    solve_tunnels_detailed(ts).map(|s| s.tour)
}

pub fn solve_tunnels_detailed(ts: &TunnelSystem) -> Result<TunnelSolution> {
    check_size(ts)?;
    if !ts.is_symmetric() {
        return Err(invalid("directed tunnel system: use the quasi-norm solver"));
    }
    if ts.n_cities() == 3 {
        let tour = Tour::from_order(vec![0, 1, 2], |a, b| ts.distance(a, b));
        return Ok(TunnelSolution {
            tour,
            selection: None,
            identifier: None,
            identifier_rank: None,
        });
    }
    solve_with_identifiers(ts)
}

pub fn solve_max_tsp_quasi(ts: &TunnelSystem) -> Result<Tour> {
    solve_quasi_detailed(ts).map(|s| s.tour)
}

/// Directed solver; a symmetric system is first split into one-way tunnels.
pub fn solve_quasi_detailed(ts: &TunnelSystem) -> Result<TunnelSolution> {
    check_size(ts)?;
    solve_with_identifiers(&ts.to_directed())
}

fn check_size(ts: &TunnelSystem) -> Result<()> {
    match ts.n_cities() {
        0 => Err(invalid("no cities")),
        1 | 2 => Err(invalid("a tour needs at least 3 cities")),
        _ => Ok(()),
    }
}

fn solve_with_identifiers(ts: &TunnelSystem) -> Result<TunnelSolution> {
    let mode = Mode::of(ts);
    let (rank, id) = match AnyTables::build(ts) {
        AnyTables::Fast(t) => best_identifier(&t, mode),
        AnyTables::Exact(t) => best_identifier(&t, mode),
    }
    .ok_or_else(|| contract("no feasible identifier"))?;
    let (_, selection) =
        evaluate_identifier(ts, &id).ok_or_else(|| contract("best identifier is infeasible"))?;
    let tour = reconstruct_tour(ts, &selection)?;
    if tour.length < selection.weight {
        return Err(contract("reconstructed tour is shorter than its selection"));
    }
    Ok(TunnelSolution {
        tour,
        selection: Some(selection),
        identifier: Some(id),
        identifier_rank: Some(rank),
    })
}

/// Access distances, rescaled to `i128` when the values allow it.
struct Tables<T> {
    n: usize,
    k: usize,
    front: Vec<T>,
    back: Vec<T>,
    scale: BigInt,
}

impl<T: Exact> Tables<T> {
    fn access(&self, city: usize, tunnel: usize, end: End) -> &T {
        match end {
            End::Front => &self.front[city * self.k + tunnel],
            End::Back => &self.back[city * self.k + tunnel],
        }
    }

    fn lift(&self, v: &T) -> Scalar {
        v.to_scalar() / Scalar::from_integer(self.scale.clone())
    }
}

enum AnyTables {
    Fast(Tables<i128>),
    Exact(Tables<Scalar>),
}

impl AnyTables {
    fn build(ts: &TunnelSystem) -> Self {
        let (n, k) = (ts.n_cities(), ts.n_tunnels());
        let cells = || (0..n).flat_map(move |c| (0..k).map(move |t| (c, t)));
        let front: Vec<Scalar> = cells().map(|(c, t)| ts.front(c, t).clone()).collect();
        let back: Vec<Scalar> = cells().map(|(c, t)| ts.back(c, t).clone()).collect();
        match scale_to_i128(front.iter().chain(&back)) {
            Some((scale, ints)) => {
                let (f, b) = ints.split_at(n * k);
                AnyTables::Fast(Tables {
                    n,
                    k,
                    front: f.to_vec(),
                    back: b.to_vec(),
                    scale,
                })
            }
            None => AnyTables::Exact(Tables {
                n,
                k,
                front,
                back,
                scale: BigInt::one(),
            }),
        }
    }
}

/// E'' and the transportation data for one (tunnels, tree, connectors, typing).
struct Prepared<'a, T> {
    mode: Mode,
    used: &'a [usize],
    base: T,
    front_count: Vec<u64>,
    back_count: Vec<u64>,
    sources: Vec<usize>,
    /// Symmetric: `sources x 2p`, entrance `2i` is the front of `used[i]`,
    /// `2i + 1` its back. Directed: `sources x p` front gains.
    gains: Vec<T>,
    /// Directed only: `sources x p` back gains.
    back_gains: Vec<T>,
    supplies: Vec<u64>,
}

impl<'a, T: Exact> Prepared<'a, T> {
    fn new(
        tables: &Tables<T>,
        mode: Mode,
        used: &'a [usize],
        tree: &[(usize, usize)],
        connectors: &[usize],
        typing: &[(End, End)],
    ) -> Self {
        let p = used.len();
        let pos = |t: usize| {
            used.iter()
                .position(|&u| u == t)
                .expect("tree edge outside the used tunnels")
        };
        let mut front_count = vec![0u64; p];
        let mut back_count = vec![0u64; p];
        let mut base = T::zero();
        let mut is_connector = vec![false; tables.n];
        for ((&(u, v), &c), &(x, y)) in tree.iter().zip(connectors).zip(typing) {
            is_connector[c] = true;
            for (t, end) in [(u, x), (v, y)] {
                base = base + tables.access(c, t, end).clone();
                match end {
                    End::Front => front_count[pos(t)] += 1,
                    End::Back => back_count[pos(t)] += 1,
                }
            }
        }
        let sources: Vec<usize> = (0..tables.n).filter(|&c| !is_connector[c]).collect();
        let mut gains = Vec::new();
        let mut back_gains = Vec::new();
        for &c in &sources {
            for &t in used {
                match mode {
                    Mode::Symmetric => {
                        gains.push(tables.access(c, t, End::Front).clone());
                        gains.push(tables.access(c, t, End::Back).clone());
                    }
                    Mode::Directed => {
                        gains.push(tables.access(c, t, End::Front).clone());
                        back_gains.push(tables.access(c, t, End::Back).clone());
                    }
                }
            }
        }
        let supply = if mode == Mode::Symmetric { 2 } else { 1 };
        let supplies = vec![supply; sources.len()];
        Prepared {
            mode,
            used,
            base,
            front_count,
            back_count,
            sources,
            gains,
            back_gains,
            supplies,
        }
    }

    fn p(&self) -> usize {
        self.used.len()
    }

    fn floor(&self, i: usize) -> u64 {
        self.front_count[i].max(self.back_count[i]).max(1)
    }

    /// Feasible range of the free degree, or `None` if the prefix is infeasible.
    fn free_range(&self, n: u64, prefix: &[u64]) -> Option<(u64, u64)> {
        let p = self.p();
        if p == 1 {
            return Some((n, n));
        }
        if prefix.iter().enumerate().any(|(i, &d)| d < self.floor(i)) {
            return None;
        }
        let fixed: u64 = prefix.iter().sum();
        let lo = self.floor(p - 1);
        let hi = n.checked_sub(fixed + self.floor(p - 2))?;
        (lo <= hi).then_some((lo, hi))
    }

    fn degrees(&self, n: u64, prefix: &[u64], free: u64) -> Vec<u64> {
        let mut d = prefix.to_vec();
        if self.p() >= 2 {
            d.push(n - prefix.iter().sum::<u64>() - free);
        }
        d.push(free);
        d
    }

    /// Optimal assignment of the non-connector cities for fixed degrees.
    fn transport(&self, degrees: &[u64]) -> (T, Vec<u64>, Vec<u64>) {
        let residual = |counts: &[u64]| {
            degrees
                .iter()
                .zip(counts)
                .map(|(d, f)| d - f)
                .collect::<Vec<u64>>()
        };
        match self.mode {
            Mode::Symmetric => {
                let demands: Vec<u64> = residual(&self.front_count)
                    .into_iter()
                    .zip(residual(&self.back_count))
                    .flat_map(|(f, b)| [f, b])
                    .collect();
                let (flows, value) = max_transport(&self.supplies, &demands, &self.gains);
                (value, flows, Vec::new())
            }
            Mode::Directed => {
                let (ff, vf) =
                    max_transport(&self.supplies, &residual(&self.front_count), &self.gains);
                let (fb, vb) = max_transport(
                    &self.supplies,
                    &residual(&self.back_count),
                    &self.back_gains,
                );
                (vf + vb, ff, fb)
            }
        }
    }

    fn value(&self, n: u64, prefix: &[u64], free: u64) -> T {
        self.base.clone() + self.transport(&self.degrees(n, prefix, free)).0
    }

    /// Best free degree and total weight for one prefix.
    fn best_free(&self, n: u64, prefix: &[u64]) -> Option<(u64, T)> {
        let (lo, hi) = self.free_range(n, prefix)?;
        let profile = ParametricProfile::new(lo as i64, hi as i64, |x: i64| {
            Some(self.value(n, prefix, x as u64))
        });
        parametric_concave_argmax(&profile)
            .ok()
            .map(|(x, v)| (x as u64, v))
    }

    fn typed_edges(
        &self,
        tree: &[(usize, usize)],
        connectors: &[usize],
        typing: &[(End, End)],
        degrees: &[u64],
    ) -> Vec<TypedEdge> {
        let mut edges = Vec::new();
        for ((&(u, v), &c), &(x, y)) in tree.iter().zip(connectors).zip(typing) {
            edges.push(TypedEdge {
                city: c,
                tunnel: u,
                end: x,
            });
            edges.push(TypedEdge {
                city: c,
                tunnel: v,
                end: y,
            });
        }
        let (_, flows, back_flows) = self.transport(degrees);
        let p = self.p();
        let mut emit = |flows: &[u64], width: usize, end_of: &dyn Fn(usize) -> (usize, End)| {
            for (si, &c) in self.sources.iter().enumerate() {
                for j in 0..width {
                    let (i, end) = end_of(j);
                    for _ in 0..flows[si * width + j] {
                        edges.push(TypedEdge {
                            city: c,
                            tunnel: self.used[i],
                            end,
                        });
                    }
                }
            }
        };
        match self.mode {
            Mode::Symmetric => {
                emit(&flows, 2 * p, &|j| {
                    (j / 2, if j % 2 == 0 { End::Front } else { End::Back })
                });
            }
            Mode::Directed => {
                emit(&flows, p, &|j| (j, End::Front));
                emit(&back_flows, p, &|j| (j, End::Back));
            }
        }
        edges.sort_unstable();
        edges
    }
}

/// One (tunnel subset, spanning tree) block of the enumeration.
struct Group {
    used: Vec<usize>,
    tree: Vec<(usize, usize)>,
    first_rank: u128,
}

fn binomial(n: u64, r: u64) -> u128 {
    if r > n {
        return 0;
    }
    (0..r).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

fn groups(n: usize, k: usize, mode: Mode) -> Vec<Group> {
    let mut out = Vec::new();
    let mut rank = 0u128;
    for p in 1..=k.min(n) {
        let per_group = (0..p - 1).map(|i| (n - i) as u128).product::<u128>()
            * (mode.typings().len() as u128).pow(p as u32 - 1)
            * if p >= 2 {
                binomial(n as u64 - 2, p as u64 - 2)
            } else {
                1
            };
        for used in combinations(k, p) {
            for tree in labeled_trees(p) {
                let tree = tree
                    .iter()
                    .map(|&(a, b)| (used[a - 1], used[b - 1]))
                    .collect();
                out.push(Group {
                    used: used.clone(),
                    tree,
                    first_rank: rank,
                });
                rank += per_group;
            }
        }
    }
    out
}

/// All `r`-subsets of `0..k` in lexicographic order.
fn combinations(k: usize, r: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(r);
    fn rec(start: usize, k: usize, r: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == r {
            out.push(cur.clone());
            return;
        }
        for x in start..k {
            cur.push(x);
            rec(x + 1, k, r, cur, out);
            cur.pop();
        }
    }
    rec(0, k, r, &mut cur, &mut out);
    out
}

/// Every sequence of length `len` over `0..base`, lexicographically.
fn sequences(len: usize, base: usize) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    for _ in 0..len {
        out = out
            .into_iter()
            .flat_map(|s| (0..base).map(move |x| [s.clone(), vec![x]].concat()))
            .collect();
    }
    out
}

/// Labeled trees on `1..=p`, in the order of their Prüfer sequences.
fn labeled_trees(p: usize) -> Vec<Vec<(usize, usize)>> {
    if p <= 1 {
        return vec![vec![]];
    }
    sequences(p - 2, p)
        .into_iter()
        .map(|s| {
            let seq: Vec<usize> = s.into_iter().map(|x| x + 1).collect();
            prufer_decode(&seq, p).expect("generated sequences are valid")
        })
        .collect()
}

/// Entries `>= 1` of length `len` with sum `<= max_sum`, lexicographically.
fn degree_prefixes(len: usize, max_sum: u64) -> Vec<Vec<u64>> {
    let mut out = Vec::new();
    fn rec(len: usize, room: u64, cur: &mut Vec<u64>, out: &mut Vec<Vec<u64>>) {
        if cur.len() == len {
            out.push(cur.clone());
            return;
        }
        for d in 1..=room {
            cur.push(d);
            rec(len, room - d, cur, out);
            cur.pop();
        }
    }
    rec(len, max_sum, &mut Vec::new(), &mut out);
    out
}

/// Calls `f` on every sequence of `r` distinct values in `0..n`, lexicographically.
fn for_each_arrangement(n: usize, r: usize, f: &mut impl FnMut(&[usize])) {
    fn rec(
        n: usize,
        r: usize,
        used: &mut [bool],
        cur: &mut Vec<usize>,
        f: &mut impl FnMut(&[usize]),
    ) {
        if cur.len() == r {
            f(cur);
            return;
        }
        for x in 0..n {
            if !used[x] {
                used[x] = true;
                cur.push(x);
                rec(n, r, used, cur, f);
                cur.pop();
                used[x] = false;
            }
        }
    }
    rec(n, r, &mut vec![false; n], &mut Vec::with_capacity(r), f);
}

/// Decodes a Prüfer sequence over labels `1..=p` into tree edges `(a, b)`, `a < b`.
pub fn prufer_decode(seq: &[usize], p: usize) -> Result<Vec<(usize, usize)>> {
    if p < 2 || seq.len() != p - 2 {
        return Err(invalid(format!(
            "a Prüfer sequence for {p} nodes has length {}",
            p.saturating_sub(2)
        )));
    }
    if let Some(&bad) = seq.iter().find(|&&x| x == 0 || x > p) {
        return Err(invalid(format!("label {bad} outside 1..={p}")));
    }
    let mut degree = vec![1usize; p + 1];
    for &x in seq {
        degree[x] += 1;
    }
    let mut edges = Vec::with_capacity(p - 1);
    for &x in seq {
        let leaf = (1..=p)
            .find(|&v| degree[v] == 1)
            .expect("a tree always has a leaf");
        edges.push((leaf.min(x), leaf.max(x)));
        degree[leaf] -= 1;
        degree[x] -= 1;
    }
    let rest: Vec<usize> = (1..=p).filter(|&v| degree[v] == 1).collect();
    edges.push((rest[0], rest[1]));
    Ok(edges)
}

/// All identifiers of a tunnel system, in rank order.
pub fn enumerate_identifiers(ts: &TunnelSystem) -> impl Iterator<Item = Identifier> {
    let (n, mode) = (ts.n_cities(), Mode::of(ts));
    groups(n, ts.n_tunnels(), mode)
        .into_iter()
        .flat_map(move |g| {
            let p = g.used.len();
            let prefixes = degree_prefixes(p.saturating_sub(2), (n as u64).saturating_sub(2));
            let typings = sequences(p - 1, mode.typings().len());
            let mut out = Vec::new();
            for_each_arrangement(n, p - 1, &mut |conn| {
                for typing in &typings {
                    for prefix in &prefixes {
                        out.push(Identifier {
                            used_tunnels: g.used.clone(),
                            tree: g.tree.clone(),
                            connector_cities: conn.to_vec(),
                            edge_typing: typing.iter().map(|&i| mode.typings()[i]).collect(),
                            degree_prefix: prefix.clone(),
                        });
                    }
                }
            });
            out
        })
}

fn best_identifier<T: Exact>(tables: &Tables<T>, mode: Mode) -> Option<(u128, Identifier)> {
    groups(tables.n, tables.k, mode)
        .par_iter()
        .filter_map(|g| search_group(tables, mode, g))
        .reduce_with(|a, b| match a.0.cmp(&b.0) {
            std::cmp::Ordering::Greater => a,
            std::cmp::Ordering::Less => b,
            std::cmp::Ordering::Equal => {
                if a.1 <= b.1 {
                    a
                } else {
                    b
                }
            }
        })
        .map(|(_, rank, id)| (rank, id))
}

/// Best identifier of one block, earliest rank on ties.
fn search_group<T: Exact>(
    tables: &Tables<T>,
    mode: Mode,
    g: &Group,
) -> Option<(T, u128, Identifier)> {
    let n = tables.n;
    let p = g.used.len();
    let typings = sequences(p - 1, mode.typings().len());
    let prefixes = degree_prefixes(p.saturating_sub(2), n as u64 - 2);

    // Per-city gain with the degree constraints dropped; bounds a whole block.
    let row_best: Vec<T> = (0..n)
        .map(|c| {
            let best = |end| {
                g.used
                    .iter()
                    .map(|&t| tables.access(c, t, end).clone())
                    .max()
                    .expect("p >= 1")
            };
            match mode {
                Mode::Symmetric => {
                    let b = best(End::Front).max(best(End::Back));
                    b.clone() + b
                }
                Mode::Directed => best(End::Front) + best(End::Back),
            }
        })
        .collect();
    let all_best = row_best.iter().cloned().fold(T::zero(), |a, b| a + b);

    let mut best: Option<(T, u128, Identifier)> = None;
    let mut rank = g.first_rank;
    let block = prefixes.len() as u128;
    for_each_arrangement(n, p - 1, &mut |conn| {
        for typing_idx in &typings {
            let typing: Vec<(End, End)> = typing_idx.iter().map(|&i| mode.typings()[i]).collect();
            let prepared = Prepared::new(tables, mode, &g.used, &g.tree, conn, &typing);
            let bound = conn
                .iter()
                .fold(prepared.base.clone() + all_best.clone(), |acc, &c| {
                    acc - row_best[c].clone()
                });
            if best.as_ref().is_some_and(|b| bound <= b.0) {
                rank += block;
                continue;
            }
            for prefix in &prefixes {
                if let Some((_, value)) = prepared.best_free(n as u64, prefix) {
                    if best.as_ref().is_none_or(|b| value > b.0) {
                        let id = Identifier {
                            used_tunnels: g.used.clone(),
                            tree: g.tree.clone(),
                            connector_cities: conn.to_vec(),
                            edge_typing: typing.clone(),
                            degree_prefix: prefix.clone(),
                        };
                        best = Some((value, rank, id));
                    }
                }
                rank += 1;
            }
        }
    });
    best
}

fn consistent(ts: &TunnelSystem, id: &Identifier) -> bool {
    let (n, k, mode) = (ts.n_cities(), ts.n_tunnels(), Mode::of(ts));
    let p = id.used_tunnels.len();
    let mut seen = vec![false; n];
    p >= 1
        && p <= n
        && id.used_tunnels.windows(2).all(|w| w[0] < w[1])
        && id.used_tunnels.iter().all(|&t| t < k)
        && id.tree.len() == p - 1
        && id
            .tree
            .iter()
            .all(|(u, v)| u != v && id.used_tunnels.contains(u) && id.used_tunnels.contains(v))
        && spans(&id.used_tunnels, &id.tree)
        && id.connector_cities.len() == p - 1
        && id
            .connector_cities
            .iter()
            .all(|&c| c < n && !std::mem::replace(&mut seen[c], true))
        && id.edge_typing.len() == p - 1
        && id.edge_typing.iter().all(|e| mode.typings().contains(e))
        && id.degree_prefix.len() == p.saturating_sub(2)
}

fn spans(used: &[usize], tree: &[(usize, usize)]) -> bool {
    let mut uf = UnionFind::new(used.len());
    let pos = |t: &usize| used.iter().position(|u| u == t).unwrap_or(0);
    tree.iter().all(|(u, v)| uf.union(pos(u), pos(v)))
}

/// Weight and selection of the best completion of an identifier, or `None`
/// when no degree assignment is feasible (or the identifier does not fit `ts`).
pub fn evaluate_identifier(ts: &TunnelSystem, id: &Identifier) -> Option<(Scalar, EdgeSelection)> {
    match AnyTables::build(ts) {
        AnyTables::Fast(t) => evaluate_with(ts, &t, id),
        AnyTables::Exact(t) => evaluate_with(ts, &t, id),
    }
}

fn evaluate_with<T: Exact>(
    ts: &TunnelSystem,
    tables: &Tables<T>,
    id: &Identifier,
) -> Option<(Scalar, EdgeSelection)> {
    if !consistent(ts, id) {
        return None;
    }
    let n = tables.n as u64;
    let prepared = Prepared::new(
        tables,
        Mode::of(ts),
        &id.used_tunnels,
        &id.tree,
        &id.connector_cities,
        &id.edge_typing,
    );
    let (free, value) = prepared.best_free(n, &id.degree_prefix)?;
    let degrees = prepared.degrees(n, &id.degree_prefix, free);
    let typed_edges =
        prepared.typed_edges(&id.tree, &id.connector_cities, &id.edge_typing, &degrees);
    let weight = tables.lift(&value);
    Some((
        weight.clone(),
        EdgeSelection {
            typed_edges,
            weight,
        },
    ))
}

/// Chosen free degree and weight, as found by the concave search.
pub fn free_degree_argmax(ts: &TunnelSystem, id: &Identifier) -> Option<(u64, Scalar)> {
    let tables = exact_tables(ts);
    let prepared = prepare_exact(ts, &tables, id)?;
    prepared.best_free(ts.n_cities() as u64, &id.degree_prefix)
}

/// Weight for every feasible free degree, starting at the smallest.
pub fn free_degree_profile(ts: &TunnelSystem, id: &Identifier) -> Option<(u64, Vec<Scalar>)> {
    let tables = exact_tables(ts);
    let prepared = prepare_exact(ts, &tables, id)?;
    let n = ts.n_cities() as u64;
    let (lo, hi) = prepared.free_range(n, &id.degree_prefix)?;
    Some((
        lo,
        (lo..=hi)
            .map(|x| prepared.value(n, &id.degree_prefix, x))
            .collect(),
    ))
}

// Inspection paths stay in exact rationals; they are not hot.
fn exact_tables(ts: &TunnelSystem) -> Tables<Scalar> {
    let (n, k) = (ts.n_cities(), ts.n_tunnels());
    let table = |get: &dyn Fn(usize, usize) -> Scalar| {
        (0..n)
            .flat_map(|c| (0..k).map(move |t| (c, t)))
            .map(|(c, t)| get(c, t))
            .collect()
    };
    Tables {
        n,
        k,
        front: table(&|c, t| ts.front(c, t).clone()),
        back: table(&|c, t| ts.back(c, t).clone()),
        scale: BigInt::one(),
    }
}

fn prepare_exact<'a>(
    ts: &TunnelSystem,
    tables: &Tables<Scalar>,
    id: &'a Identifier,
) -> Option<Prepared<'a, Scalar>> {
    consistent(ts, id).then(|| {
        Prepared::new(
            tables,
            Mode::of(ts),
            &id.used_tunnels,
            &id.tree,
            &id.connector_cities,
            &id.edge_typing,
        )
    })
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    /// Joins two classes; false if they were already one.
    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        self.parent[ra] = rb;
        ra != rb
    }
}

/// Checks degree, front/back balance and connectivity.
pub fn validate_selection(ts: &TunnelSystem, sel: &EdgeSelection) -> bool {
    let (n, k) = (ts.n_cities(), ts.n_tunnels());
    if n == 0 || sel.typed_edges.iter().any(|e| e.city >= n || e.tunnel >= k) {
        return false;
    }
    let mut fronts = vec![0usize; n];
    let mut backs = vec![0usize; n];
    let mut balance = vec![0i64; k];
    let mut uf = UnionFind::new(n + k);
    for e in &sel.typed_edges {
        match e.end {
            End::Front => {
                fronts[e.city] += 1;
                balance[e.tunnel] += 1;
            }
            End::Back => {
                backs[e.city] += 1;
                balance[e.tunnel] -= 1;
            }
        }
        uf.union(e.city, n + e.tunnel);
    }
    let degrees_ok = if ts.is_symmetric() {
        (0..n).all(|c| fronts[c] + backs[c] == 2)
    } else {
        (0..n).all(|c| fronts[c] == 1 && backs[c] == 1)
    };
    let root = uf.find(0);
    degrees_ok && balance.iter().all(|&b| b == 0) && (1..n).all(|c| uf.find(c) == root)
}

/// Turns a valid selection into a tour at least as long as its weight.
///
/// At each tunnel front endpoints are paired with back endpoints. Pairs that
/// lie on different cycles are then swapped crosswise, which joins the two
/// cycles; connectivity of the selection guarantees one cycle remains.
pub fn reconstruct_tour(ts: &TunnelSystem, sel: &EdgeSelection) -> Result<Tour> {
    if !validate_selection(ts, sel) {
        return Err(contract(
            "selection violates the degree, balance or connectivity condition",
        ));
    }
    let (n, k) = (ts.n_cities(), ts.n_tunnels());
    let mut fronts: Vec<Vec<usize>> = vec![Vec::new(); k];
    let mut backs: Vec<Vec<usize>> = vec![Vec::new(); k];
    for e in &sel.typed_edges {
        match e.end {
            End::Front => fronts[e.tunnel].push(e.city),
            End::Back => backs[e.tunnel].push(e.city),
        }
    }
    let mut uf = UnionFind::new(n);
    for t in 0..k {
        for (&a, &b) in fronts[t].iter().zip(&backs[t]) {
            uf.union(a, b);
        }
    }
    for t in 0..k {
        for i in 1..fronts[t].len() {
            if uf.find(fronts[t][0]) != uf.find(fronts[t][i]) {
                backs[t].swap(0, i);
                uf.union(fronts[t][0], fronts[t][i]);
            }
        }
    }
    let pairs: Vec<(usize, usize)> = (0..k)
        .flat_map(|t| {
            fronts[t]
                .iter()
                .copied()
                .zip(backs[t].iter().copied())
                .collect::<Vec<_>>()
        })
        .collect();

    let order = if ts.is_symmetric() {
        walk_undirected(n, &pairs)
    } else {
        walk_directed(n, &pairs)
    };
    if order.len() != n {
        return Err(contract("pairing did not close into a single tour"));
    }
    Ok(Tour::from_order(order, |a, b| ts.distance(a, b)))
}

fn walk_undirected(n: usize, edges: &[(usize, usize)]) -> Vec<usize> {
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (i, &(a, b)) in edges.iter().enumerate() {
        adj[a].push(i);
        adj[b].push(i);
    }
    let mut order = vec![0];
    let (mut cur, mut came_by) = (0, usize::MAX);
    loop {
        let Some(&e) = adj[cur].iter().find(|&&e| e != came_by) else {
            break;
        };
        let (a, b) = edges[e];
        let next = if a == cur { b } else { a };
        if next == 0 || order.len() > n {
            break;
        }
        order.push(next);
        came_by = e;
        cur = next;
    }
    order
}

fn walk_directed(n: usize, arcs: &[(usize, usize)]) -> Vec<usize> {
    let mut succ = vec![usize::MAX; n];
    for &(a, b) in arcs {
        succ[a] = b;
    }
    let mut order = vec![0];
    let mut cur = succ[0];
    while cur != 0 && cur != usize::MAX && order.len() <= n {
        order.push(cur);
        cur = succ[cur];
    }
    order
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::norms::{
        build_tunnel_system, build_tunnel_system_quasi, make_l1, make_linf, Point, QuasiNorm,
    };
    use crate::numeric::int;
    use proptest::prelude::*;
    use std::collections::HashSet;

    fn points(coords: &[(i64, i64)]) -> Vec<Point> {
        coords
            .iter()
            .map(|&(x, y)| Point::from_ints(&[x, y]))
            .collect()
    }

    fn l1_system(coords: &[(i64, i64)]) -> TunnelSystem {
        build_tunnel_system(&make_l1(2).unwrap(), &points(coords)).unwrap()
    }

    /// Exhaustive tour search, the independent oracle for this module.
    fn brute_force(ts: &TunnelSystem) -> Scalar {
        let n = ts.n_cities();
        let mut rest: Vec<usize> = (1..n).collect();
        let mut best: Option<Scalar> = None;
        fn rec(k: usize, rest: &mut Vec<usize>, ts: &TunnelSystem, best: &mut Option<Scalar>) {
            if k == rest.len() {
                let order: Vec<usize> = std::iter::once(0).chain(rest.iter().copied()).collect();
                let len = Tour::from_order(order, |a, b| ts.distance(a, b)).length;
                if best.as_ref().is_none_or(|b| len > *b) {
                    *best = Some(len);
                }
                return;
            }
            for i in k..rest.len() {
                rest.swap(k, i);
                rec(k + 1, rest, ts, best);
                rest.swap(k, i);
            }
        }
        rec(0, &mut rest, ts, &mut best);
        best.unwrap()
    }

    #[test]
    fn unit_square() {
        let ts = l1_system(&[(0, 0), (1, 0), (0, 1), (1, 1)]);
        assert_eq!(solve_max_tsp_tunnels(&ts).unwrap().length, int(6));
    }

    #[test]
    fn collinear_points() {
        let ts = l1_system(&[(0, 0), (1, 0), (2, 0), (3, 0)]);
        assert_eq!(solve_max_tsp_tunnels(&ts).unwrap().length, int(8));
    }

    #[test]
    fn coincident_cities() {
        let ts = l1_system(&[(2, 2); 5]);
        let tour = solve_max_tsp_tunnels(&ts).unwrap();
        assert_eq!(tour.length, int(0));
        crate::tour::check_permutation(&tour.order, 5).unwrap();
    }

    #[test]
    fn small_inputs() {
        assert!(solve_max_tsp_tunnels(&l1_system(&[])).is_err());
        assert!(solve_max_tsp_tunnels(&l1_system(&[(0, 0), (1, 1)])).is_err());
        let tri = solve_max_tsp_tunnels(&l1_system(&[(0, 0), (1, 0), (0, 2)])).unwrap();
        assert_eq!(tri.length, int(6));
    }

    #[test]
    fn identifier_counts() {
        let ts = l1_system(&[(0, 0), (1, 0), (0, 1), (1, 1)]);
        let ids: Vec<Identifier> = enumerate_identifiers(&ts).collect();
        let singles = ids.iter().filter(|id| id.used_tunnels.len() == 1).count();
        assert_eq!(singles, 2);
        assert!(ids
            .iter()
            .filter(|id| id.used_tunnels.len() == 1)
            .all(|id| id.tree.is_empty()
                && id.connector_cities.is_empty()
                && id.degree_prefix.is_empty()));
        // One tree, 4 connectors, 4 typings, one empty prefix.
        assert_eq!(ids.len() - singles, 16);
        assert_eq!(ids.iter().collect::<HashSet<_>>().len(), ids.len());
        assert_eq!(
            groups(4, 2, Mode::Symmetric).last().unwrap().first_rank + 16,
            ids.len() as u128
        );
    }

    #[test]
    fn identifier_ranks_match_stream_positions() {
        let ts = l1_system(&[(0, 0), (3, 1), (1, 4), (5, 2), (2, 2)]);
        let ts = ts.to_directed();
        let ids: Vec<Identifier> = enumerate_identifiers(&ts).collect();
        for g in groups(5, 4, Mode::Directed) {
            let first = &ids[g.first_rank as usize];
            assert_eq!(first.used_tunnels, g.used);
            assert_eq!(first.tree, g.tree);
        }
    }

    #[test]
    fn prufer_examples() {
        assert_eq!(prufer_decode(&[], 2).unwrap(), vec![(1, 2)]);
        assert_eq!(prufer_decode(&[2], 3).unwrap(), vec![(1, 2), (2, 3)]);
        let trees: HashSet<Vec<(usize, usize)>> = labeled_trees(4)
            .into_iter()
            .map(|mut t| {
                t.sort();
                t
            })
            .collect();
        assert_eq!(trees.len(), 16);
        assert!(prufer_decode(&[1, 2], 3).is_err());
        assert!(prufer_decode(&[5], 3).is_err());
    }

    #[test]
    fn single_tunnel_three_cities() {
        let pts = points(&[(0, 0), (1, 0), (2, 0)]);
        let norm = crate::norms::PolyhedralNorm::from_ints(2, &[&[1, 1]]).unwrap();
        let ts = build_tunnel_system(&norm, &pts).unwrap();
        let id = Identifier {
            used_tunnels: vec![0],
            tree: vec![],
            connector_cities: vec![],
            edge_typing: vec![],
            degree_prefix: vec![],
        };
        let (value, sel) = evaluate_identifier(&ts, &id).unwrap();
        // Projections 0, 1, 2 on the single tunnel: the 3-cycle has length 4.
        assert_eq!(value, int(4));
        assert!(validate_selection(&ts, &sel));
        let directed = ts.to_directed();
        let best_directed = (0..2)
            .map(|rev| {
                let order = if rev == 0 {
                    vec![0, 1, 2]
                } else {
                    vec![0, 2, 1]
                };
                Tour::from_order(order, |a, b| directed.distance(a, b)).length
            })
            .max()
            .unwrap();
        assert_eq!(value, best_directed);
    }

    #[test]
    fn infeasible_prefix_is_absent() {
        let ts = l1_system(&[(0, 0), (1, 0), (0, 1), (1, 1), (2, 2)]).to_directed();
        let id = Identifier {
            used_tunnels: vec![0, 1, 2],
            tree: vec![(0, 1), (1, 2)],
            connector_cities: vec![0, 1],
            edge_typing: vec![(End::Front, End::Back); 2],
            degree_prefix: vec![4],
        };
        assert!(evaluate_identifier(&ts, &id).is_none());
    }

    #[test]
    fn square_selection_checks() {
        let ts = l1_system(&[(0, 0), (1, 0), (0, 1), (1, 1)]);
        let sol = solve_tunnels_detailed(&ts).unwrap();
        let sel = sol.selection.unwrap();
        assert!(validate_selection(&ts, &sel));
        assert_eq!(sel.weight, int(6));
        let (value, _) = evaluate_identifier(&ts, sol.identifier.as_ref().unwrap()).unwrap();
        assert_eq!(value, int(6));
        let tour = reconstruct_tour(&ts, &sel).unwrap();
        assert_eq!(tour.length, int(6));

        let mut broken = sel.clone();
        broken.typed_edges.pop();
        assert!(!validate_selection(&ts, &broken));
        assert!(reconstruct_tour(&ts, &broken).is_err());
    }

    #[test]
    fn disconnected_selection_rejected() {
        let ts = l1_system(&[(0, 0), (1, 0), (0, 1), (1, 1)]);
        let e = |city, tunnel, end| TypedEdge { city, tunnel, end };
        let sel = EdgeSelection {
            typed_edges: vec![
                e(0, 0, End::Front),
                e(0, 0, End::Back),
                e(1, 0, End::Front),
                e(1, 0, End::Back),
                e(2, 1, End::Front),
                e(2, 1, End::Back),
                e(3, 1, End::Front),
                e(3, 1, End::Back),
            ],
            weight: int(0),
        };
        assert!(!validate_selection(&ts, &sel));
    }

    #[test]
    fn two_cities_one_tunnel() {
        let ts = build_tunnel_system(
            &crate::norms::PolyhedralNorm::from_ints(1, &[&[1]]).unwrap(),
            &[Point::from_ints(&[0]), Point::from_ints(&[3])],
        )
        .unwrap();
        let e = |city, end| TypedEdge {
            city,
            tunnel: 0,
            end,
        };
        let sel = EdgeSelection {
            typed_edges: vec![
                e(0, End::Front),
                e(0, End::Back),
                e(1, End::Front),
                e(1, End::Back),
            ],
            weight: int(0),
        };
        let tour = reconstruct_tour(&ts, &sel).unwrap();
        assert_eq!(tour.order, vec![0, 1]);
        assert_eq!(tour.length, int(6));
    }

    #[test]
    fn merge_step_joins_cycles() {
        // Six collinear cities; naive pairing at tunnel 0 gives three 2-cycles.
        let coords: Vec<(i64, i64)> = (0..6).map(|i| (i, 0)).collect();
        let ts = build_tunnel_system(
            &crate::norms::PolyhedralNorm::from_ints(2, &[&[1, 0]]).unwrap(),
            &points(&coords),
        )
        .unwrap();
        let e = |city, end| TypedEdge {
            city,
            tunnel: 0,
            end,
        };
        let mut typed_edges = Vec::new();
        for c in 0..6 {
            typed_edges.push(e(c, End::Front));
            typed_edges.push(e(c, End::Back));
        }
        let sel = EdgeSelection {
            typed_edges,
            weight: int(0),
        };
        assert!(validate_selection(&ts, &sel));
        let tour = reconstruct_tour(&ts, &sel).unwrap();
        crate::tour::check_permutation(&tour.order, 6).unwrap();
        assert!(tour.length >= sel.weight);
    }

    #[test]
    fn quasi_triangle() {
        let q = QuasiNorm::triangle();
        let ts = build_tunnel_system_quasi(&q, &points(&[(0, 0), (1, 0), (0, 1)])).unwrap();
        let tour = solve_max_tsp_quasi(&ts).unwrap();
        let best = [vec![0, 1, 2], vec![0, 2, 1]]
            .into_iter()
            .map(|o| Tour::from_order(o, |a, b| ts.distance(a, b)).length)
            .max()
            .unwrap();
        assert_eq!(tour.length, best);
        let flat = build_tunnel_system_quasi(&q, &points(&[(4, 4); 4])).unwrap();
        assert_eq!(solve_max_tsp_quasi(&flat).unwrap().length, int(0));
    }

    #[test]
    fn quasi_solver_on_symmetric_input() {
        let ts = l1_system(&[(0, 0), (5, 1), (2, 7), (-3, 4), (1, -2)]);
        assert_eq!(
            solve_max_tsp_quasi(&ts).unwrap().length,
            solve_max_tsp_tunnels(&ts).unwrap().length
        );
    }

    fn instance(max_n: usize) -> impl Strategy<Value = Vec<(i64, i64)>> {
        prop::collection::vec((-20i64..=20, -20i64..=20), 4..=max_n)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(40))]

        #[test]
        fn l1_matches_brute_force(coords in instance(8)) {
            let ts = l1_system(&coords);
            let sol = solve_tunnels_detailed(&ts).unwrap();
            crate::tour::check_permutation(&sol.tour.order, coords.len()).unwrap();
            prop_assert_eq!(&sol.tour.length, &brute_force(&ts));
            prop_assert!(validate_selection(&ts, sol.selection.as_ref().unwrap()));
        }

        #[test]
        fn linf_matches_brute_force(coords in instance(8)) {
            let ts = build_tunnel_system(&make_linf(2).unwrap(), &points(&coords)).unwrap();
            prop_assert_eq!(solve_max_tsp_tunnels(&ts).unwrap().length, brute_force(&ts));
        }

        #[test]
        fn hexagonal_norm_matches_brute_force(coords in instance(7)) {
            let norm = crate::norms::PolyhedralNorm::from_ints(2, &[&[2, 0], &[1, 2], &[-1, 2]]).unwrap();
            let ts = build_tunnel_system(&norm, &points(&coords)).unwrap();
            prop_assert_eq!(solve_max_tsp_tunnels(&ts).unwrap().length, brute_force(&ts));
        }

        #[test]
        fn quasi_matches_directed_brute_force(coords in instance(7)) {
            let ts = build_tunnel_system_quasi(&QuasiNorm::triangle(), &points(&coords)).unwrap();
            let tour = solve_max_tsp_quasi(&ts).unwrap();
            prop_assert_eq!(&tour.length, &brute_force(&ts));
            prop_assert_eq!(Tour::from_order(tour.order.clone(), |a, b| ts.distance(a, b)).length, tour.length);
        }

        #[test]
        fn every_identifier_assembles_a_valid_selection(coords in instance(5)) {
            let ts = l1_system(&coords);
            let mut best: Option<Scalar> = None;
            for id in enumerate_identifiers(&ts) {
                if let Some((value, sel)) = evaluate_identifier(&ts, &id) {
                    prop_assert!(validate_selection(&ts, &sel));
                    prop_assert_eq!(&value, &sel.weight);
                    let tour = reconstruct_tour(&ts, &sel).unwrap();
                    prop_assert!(tour.length >= sel.weight);
                    best = best.max(Some(value));
                }
            }
            prop_assert_eq!(best.unwrap(), brute_force(&ts));
        }
    }
}
