//! Linear-time Maximum TSP for planar norms with four facets.
//!
//! After a linear change of coordinates the norm is L1. Every tour is then at
//! most twice the length of the best star (all points joined to the
//! coordinate-wise median), with equality exactly when every edge crosses
//! both median lines. The points split into four quadrant sets around the
//! median. Edges between opposite quadrants cross both lines, so the answer
//! is twice the star length unless the two "diagonals" cannot be joined
//! into one tour. In that case the cheapest pair of joining edges is paid
//! for (the merge gap).

use num_bigint::BigInt;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{contract, invalid, Error, Result};
use crate::norms::{build_tunnel_system, four_facet_to_l1_transform, make_l1, AffineMap2D, Point, PolyhedralNorm};
use crate::numeric::{scale_to_i128, unscale, Exact, Scalar, FAST_PATH_LIMIT};
use crate::tour::Tour;
use crate::tunneling::solve_max_tsp_tunnels;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StarCenter {
    pub x_c: Scalar,
    pub y_c: Scalar,
    pub min_star_length: Scalar,
}

/// Quadrant sets around the star center; `mp` is left of center and above.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuadrantPartition {
    pub center: StarCenter,
    pub q_mm: Vec<usize>,
    pub q_mp: Vec<usize>,
    pub q_pm: Vec<usize>,
    pub q_pp: Vec<usize>,
    /// The center itself, when it is the only point on either median line.
    pub star_point: Option<usize>,
    /// Points on the vertical median line.
    pub median_line_x: Vec<usize>,
    /// Points on the horizontal median line.
    pub median_line_y: Vec<usize>,
}

/// Cost of joining the two diagonal subtours.
///
/// Even `n`: `z1`/`z2` are the smallest vertical offsets in the lower/upper
/// half, `z3`/`z4` the smallest horizontal offsets in the left/right half.
/// Odd `n`: `z1`/`z2` are the smallest vertical/horizontal offsets over all
/// points but the center.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MergeGap {
    pub z1: Scalar,
    pub z2: Scalar,
    pub z3: Option<Scalar>,
    pub z4: Option<Scalar>,
    pub z_star: Scalar,
    /// Points attaining `z_star`.
    pub witness: Vec<usize>,
    /// The joining edges, each a witness and its partner.
    pub joins: Vec<(usize, usize)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlanarCase {
    /// Fewer than four points.
    Small,
    /// Two opposite quadrant sets are empty.
    Trivial,
    /// Odd `n` with a tour as long as twice the star.
    OddFull,
    EvenMerge,
    OddMerge,
    /// Configuration outside the case analysis; solved by the tunnel solver.
    Fallback,
}

impl PlanarCase {
    pub fn label(self) -> &'static str {
        match self {
            PlanarCase::Small => "small",
            PlanarCase::Trivial => "trivial",
            PlanarCase::OddFull => "odd-full",
            PlanarCase::EvenMerge => "even-merge",
            PlanarCase::OddMerge => "odd-merge",
            PlanarCase::Fallback => "fallback",
        }
    }
}

#[derive(Debug, Clone)]
pub struct PlanarSolution {
    pub tour: Tour,
    pub case: PlanarCase,
    /// Points whose tour position the construction fixes; every other point
    /// can trade places with any point of its quadrant set.
    pub pinned: Vec<usize>,
    /// Quadrant of every point: 0 = mm, 1 = mp, 2 = pm, 3 = pp.
    pub quadrant: Vec<u8>,
}

const MM: usize = 0;
const MP: usize = 1;
const PM: usize = 2;
const PP: usize = 3;

fn check_planar(points: &[Point]) -> Result<()> {
    match points.iter().find(|p| p.dim() != 2) {
        Some(p) => Err(Error::DimensionMismatch { expected: 2, found: p.dim() }),
        None => Ok(()),
    }
}

fn lower_median<T: Ord + Clone>(values: &[T]) -> T {
    let mut v = values.to_vec();
    let k = (v.len() - 1) / 2;
    v.select_nth_unstable(k);
    v.swap_remove(k)
}

/// Points in L1 coordinates together with their star center.
struct Plane<T> {
    xs: Vec<T>,
    ys: Vec<T>,
    xc: T,
    yc: T,
}

impl<T: Exact> Plane<T> {
    fn new(xs: Vec<T>, ys: Vec<T>) -> Self {
        let xc = lower_median(&xs);
        let yc = lower_median(&ys);
        Plane { xs, ys, xc, yc }
    }

    fn n(&self) -> usize {
        self.xs.len()
    }

    fn dx(&self, i: usize) -> T {
        (self.xs[i].clone() - self.xc.clone()).abs()
    }

    fn dy(&self, i: usize) -> T {
        (self.ys[i].clone() - self.yc.clone()).abs()
    }

    fn star_length(&self) -> T {
        (0..self.n()).fold(T::zero(), |acc, i| acc + self.dx(i) + self.dy(i))
    }

    fn dist(&self, a: usize, b: usize) -> T {
        (self.xs[a].clone() - self.xs[b].clone()).abs() + (self.ys[a].clone() - self.ys[b].clone()).abs()
    }

    /// An edge loses nothing against the star bound iff its endpoints are
    /// weakly on opposite sides of both median lines.
    fn tight(&self, a: usize, b: usize) -> bool {
        let side = |v: &T, c: &T| v.cmp(c) as i8;
        side(&self.xs[a], &self.xc) * side(&self.xs[b], &self.xc) <= 0
            && side(&self.ys[a], &self.yc) * side(&self.ys[b], &self.yc) <= 0
    }

    fn length(&self, order: &[usize]) -> T {
        crate::tour::cycle_length(order, |a, b| self.dist(a, b))
    }
}

/// Quadrant sets plus the points lying on the median lines.
struct Split {
    quadrant: Vec<u8>,
    lists: [Vec<usize>; 4],
    free_x: Vec<usize>,
    free_y: Vec<usize>,
    star_point: Option<usize>,
    /// Number of distinct points on either median line.
    free_union: usize,
}

impl Split {
    fn new<T: Exact>(plane: &Plane<T>) -> Self {
        let n = plane.n();
        let quota = n.div_ceil(2);
        let halves = |vals: &[T], c: &T| -> (Vec<bool>, Vec<usize>) {
            let mut low: Vec<bool> = vals.iter().map(|v| v < c).collect();
            let mut filled = low.iter().filter(|&&l| l).count();
            let mut on_line = Vec::new();
            for (i, v) in vals.iter().enumerate() {
                if v == c {
                    on_line.push(i);
                    if filled < quota {
                        low[i] = true;
                        filled += 1;
                    }
                }
            }
            (low, on_line)
        };
        let (left, free_x) = halves(&plane.xs, &plane.xc);
        let (low, free_y) = halves(&plane.ys, &plane.yc);
        let quadrant: Vec<u8> = (0..n).map(|i| 2 * (!left[i]) as u8 + (!low[i]) as u8).collect();
        let mut lists: [Vec<usize>; 4] = Default::default();
        for (i, &q) in quadrant.iter().enumerate() {
            lists[q as usize].push(i);
        }
        let mut on_x = vec![false; n];
        for &i in &free_x {
            on_x[i] = true;
        }
        let on_both: Vec<usize> = free_y.iter().copied().filter(|&i| on_x[i]).collect();
        let free_union = free_x.len() + free_y.len() - on_both.len();
        let star_point = (n % 2 == 1 && free_union == 1).then(|| on_both.first().copied()).flatten();
        Split { quadrant, lists, free_x, free_y, star_point, free_union }
    }

    fn empty(&self, q: usize) -> bool {
        self.lists[q].is_empty()
    }
}

/// Interleaves two lists starting with `first`; their sizes differ by at most one.
fn alternate(first: &[usize], second: &[usize]) -> Vec<usize> {
    debug_assert!(first.len() == second.len() || first.len() == second.len() + 1);
    let mut out = Vec::with_capacity(first.len() + second.len());
    for i in 0..first.len() {
        out.push(first[i]);
        if let Some(&s) = second.get(i) {
            out.push(s);
        }
    }
    out
}

fn with_first(list: &[usize], x: usize) -> Vec<usize> {
    std::iter::once(x).chain(list.iter().copied().filter(|&y| y != x)).collect()
}

fn with_last(list: &[usize], x: usize) -> Vec<usize> {
    list.iter().copied().filter(|&y| y != x).chain(std::iter::once(x)).collect()
}

fn without(list: &[usize], skip: &[usize]) -> Vec<usize> {
    list.iter().copied().filter(|x| !skip.contains(x)).collect()
}

/// Gap data in the working number type.
struct Gap<T> {
    z: [Option<T>; 4],
    z_star: T,
    witness: Vec<usize>,
    joins: Vec<(usize, usize)>,
}

fn argmin_by<T: Ord>(ids: impl Iterator<Item = usize>, key: impl Fn(usize) -> T) -> Option<(usize, T)> {
    ids.map(|i| (i, key(i))).min_by(|a, b| a.1.cmp(&b.1).then(a.0.cmp(&b.0)))
}

fn merge_gap<T: Exact>(plane: &Plane<T>, split: &Split) -> Result<Gap<T>> {
    if (0..4).any(|q| split.empty(q)) {
        return Err(contract("merge gap needs four nonempty quadrant sets"));
    }
    let l = &split.lists;
    let partner = |w: usize, pair: [usize; 2], skip: Option<usize>| -> Result<usize> {
        let q = split.quadrant[w] as usize;
        let other = if q == pair[0] { pair[1] } else { pair[0] };
        l[other]
            .iter()
            .copied()
            .find(|&x| Some(x) != skip)
            .ok_or_else(|| contract("no partner for the merge witness"))
    };
    if plane.n().is_multiple_of(2) {
        let (w1, z1) = argmin_by(l[MM].iter().chain(&l[PM]).copied(), |i| plane.dy(i)).expect("nonempty");
        let (w2, z2) = argmin_by(l[MP].iter().chain(&l[PP]).copied(), |i| plane.dy(i)).expect("nonempty");
        let (w3, z3) = argmin_by(l[MM].iter().chain(&l[MP]).copied(), |i| plane.dx(i)).expect("nonempty");
        let (w4, z4) = argmin_by(l[PM].iter().chain(&l[PP]).copied(), |i| plane.dx(i)).expect("nonempty");
        let vertical = z1.clone() + z2.clone();
        let horizontal = z3.clone() + z4.clone();
        let (z_star, witness, joins) = if vertical <= horizontal {
            (vertical, vec![w1, w2], vec![(w1, partner(w1, [MM, PM], None)?), (w2, partner(w2, [MP, PP], None)?)])
        } else {
            (horizontal, vec![w3, w4], vec![(w3, partner(w3, [MM, MP], None)?), (w4, partner(w4, [PM, PP], None)?)])
        };
        Ok(Gap { z: [Some(z1), Some(z2), Some(z3), Some(z4)], z_star, witness, joins })
    } else {
        let star = split.star_point.ok_or_else(|| contract("odd merge needs the center as the only median-line point"))?;
        let rest = || (0..plane.n()).filter(move |&i| i != star);
        let (w1, z1) = argmin_by(rest(), |i| plane.dy(i)).expect("n >= 4");
        let (w2, z2) = argmin_by(rest(), |i| plane.dx(i)).expect("n >= 4");
        let (z_star, w, pairs) = if z1 <= z2 { (z1.clone(), w1, [[MM, PM], [MP, PP]]) } else { (z2.clone(), w2, [[MM, MP], [PM, PP]]) };
        let q = split.quadrant[w] as usize;
        let pair = if pairs[0].contains(&q) { pairs[0] } else { pairs[1] };
        let join = (w, partner(w, pair, Some(star))?);
        Ok(Gap { z: [Some(z1), Some(z2), None, None], z_star, witness: vec![w], joins: vec![join] })
    }
}

/// A constructed tour before length evaluation.
struct Built {
    order: Vec<usize>,
    case: PlanarCase,
    pinned: Vec<usize>,
}

fn classify(n: usize, split: &Split) -> PlanarCase {
    let e = |q| split.empty(q);
    if n < 4 {
        PlanarCase::Small
    } else if (e(MP) && e(PM)) || (e(MM) && e(PP)) {
        PlanarCase::Trivial
    } else if (0..4).any(e) {
        PlanarCase::Fallback
    } else if n % 2 == 1 && split.free_union > 1 {
        PlanarCase::OddFull
    } else if n.is_multiple_of(2) {
        PlanarCase::EvenMerge
    } else {
        PlanarCase::OddMerge
    }
}

fn build<T: Exact>(plane: &Plane<T>, split: &Split, gap: Option<&Gap<T>>) -> Result<Option<Built>> {
    let n = plane.n();
    let l = &split.lists;
    let case = classify(n, split);
    let built = match case {
        PlanarCase::Small => Built { order: (0..n).collect(), case, pinned: (0..n).collect() },
        PlanarCase::Fallback => match tight_template(plane, split) {
            // Reaching twice the star length is optimal whatever the case.
            Some((order, pinned)) => Built { order, case: PlanarCase::OddFull, pinned },
            None => return Ok(None),
        },
        PlanarCase::Trivial if n.is_multiple_of(2) => {
            let (a, b) = if split.empty(MP) { (MM, PP) } else { (MP, PM) };
            Built { order: alternate(&l[a], &l[b]), case, pinned: vec![] }
        }
        PlanarCase::Trivial | PlanarCase::OddFull => match tight_template(plane, split) {
            Some((order, pinned)) => Built { order, case, pinned },
            None => return Ok(None),
        },
        PlanarCase::EvenMerge => {
            let gap = gap.ok_or_else(|| contract("merge case needs a gap"))?;
            let [(w1, p1), (w2, p2)] = gap.joins[..] else { return Err(contract("even merge needs two joins")) };
            let split_pair = |a: usize, b: usize| {
                if matches!(split.quadrant[a] as usize, MM | PP) { (a, b) } else { (b, a) }
            };
            // e1 joins an mm point to the other diagonal, e2 a pp point.
            let (e1, e2) = {
                let (x, y) = (split_pair(w1, p1), split_pair(w2, p2));
                if split.quadrant[x.0] as usize == MM { (x, y) } else { (y, x) }
            };
            let path_a = alternate(&with_first(&l[MM], e1.0), &with_last(&l[PP], e2.0));
            let (b_first, b_last) = (e2.1, e1.1);
            let bq = split.quadrant[b_first] as usize;
            let other = if bq == MP { PM } else { MP };
            let path_b = alternate(&with_first(&l[bq], b_first), &with_last(&l[other], b_last));
            let pinned = vec![e1.0, e1.1, e2.0, e2.1];
            Built { order: [path_a, path_b].concat(), case, pinned }
        }
        PlanarCase::OddMerge => {
            let gap = gap.ok_or_else(|| contract("merge case needs a gap"))?;
            let star = split.star_point.ok_or_else(|| contract("odd merge needs the center point"))?;
            let (w, p) = gap.joins[0];
            let (a, b) = if matches!(split.quadrant[w] as usize, MM | PP) { (w, p) } else { (p, w) };
            let mm = without(&l[MM], &[star]);
            let path_a = if split.quadrant[a] as usize == PP {
                alternate(&mm, &with_last(&l[PP], a))
            } else {
                alternate(&l[PP], &with_last(&mm, a))
            };
            let bq = split.quadrant[b] as usize;
            let other = if bq == MP { PM } else { MP };
            let path_b = alternate(&with_first(&l[bq], b), &l[other]);
            let pinned = vec![star, a, b, path_a[0], *path_b.last().expect("nonempty")];
            Built { order: [vec![star], path_a, path_b].concat(), case, pinned }
        }
    };
    Ok(Some(built))
}

/// A quadrant list with up to two special points left out, without copying.
#[derive(Clone, Copy)]
struct View<'a> {
    list: &'a [usize],
    skip: [usize; 2],
    skipped: usize,
}

impl<'a> View<'a> {
    fn new(split: &'a Split, q: usize, skip: [usize; 2]) -> Self {
        let skipped = skip.iter().filter(|&&s| split.quadrant[s] as usize == q).count();
        View { list: &split.lists[q], skip, skipped }
    }

    fn len(&self) -> usize {
        self.list.len() - self.skipped
    }

    fn kept(&self) -> impl DoubleEndedIterator<Item = usize> + 'a {
        let skip = self.skip;
        self.list.iter().copied().filter(move |x| !skip.contains(x))
    }

    fn first(&self) -> Option<usize> {
        self.kept().next()
    }

    fn last(&self) -> Option<usize> {
        self.kept().next_back()
    }

    fn to_vec(&self) -> Vec<usize> {
        self.kept().collect()
    }
}

/// Ways to lay out two opposite quadrant sets as one alternating path:
/// (leading set, trailing set).
fn path_options<'a>(a: View<'a>, b: View<'a>) -> Vec<(View<'a>, View<'a>)> {
    use std::cmp::Ordering::*;
    match a.len().cmp(&b.len()) {
        Equal if a.len() == 0 => vec![(a, b)],
        Equal => vec![(a, b), (b, a)],
        Greater if a.len() == b.len() + 1 => vec![(a, b)],
        Less if b.len() == a.len() + 1 => vec![(b, a)],
        _ => vec![],
    }
}

fn path_ends((first, second): &(View, View)) -> Option<(usize, usize)> {
    let start = first.first()?;
    let end = if first.len() > second.len() { first.last()? } else { second.last()? };
    Some((start, end))
}

/// Searches tours `u, P1, v, P2` where `P1`, `P2` alternate between opposite
/// quadrant sets and every junction edge is tight. Returns the order and the
/// points adjacent to a junction.
fn tight_template<T: Exact>(plane: &Plane<T>, split: &Split) -> Option<(Vec<usize>, Vec<usize>)> {
    // A couple of points per (quadrant, which median lines) class plus a
    // couple of plain points per quadrant: junction tightness depends only on
    // these classes.
    let mut cands: Vec<usize> = Vec::new();
    let mut taken = [[0usize; 3]; 4];
    for &i in split.free_x.iter().chain(&split.free_y) {
        let kind = match (plane.xs[i] == plane.xc, plane.ys[i] == plane.yc) {
            (true, true) => 2,
            (true, false) => 0,
            _ => 1,
        };
        let slot = &mut taken[split.quadrant[i] as usize][kind];
        if *slot < 2 && !cands.contains(&i) {
            *slot += 1;
            cands.push(i);
        }
    }
    for list in &split.lists {
        for &i in list.iter().take(2) {
            if !cands.contains(&i) {
                cands.push(i);
            }
        }
    }
    for &u in &cands {
        for &v in &cands {
            if u == v {
                continue;
            }
            let view = |q| View::new(split, q, [u, v]);
            for pa in path_options(view(MM), view(PP)) {
                for pb in path_options(view(MP), view(PM)) {
                    for (p1, p2) in [(&pa, &pb), (&pb, &pa)] {
                        let ends1 = path_ends(p1);
                        let ends2 = path_ends(p2);
                        let ok = match (ends1, ends2) {
                            (Some((s1, t1)), Some((s2, t2))) => {
                                plane.tight(u, s1) && plane.tight(t1, v) && plane.tight(v, s2) && plane.tight(t2, u)
                            }
                            (Some((s1, t1)), None) => plane.tight(u, s1) && plane.tight(t1, v) && plane.tight(v, u),
                            (None, Some((s2, t2))) => plane.tight(u, v) && plane.tight(v, s2) && plane.tight(t2, u),
                            (None, None) => plane.tight(u, v),
                        };
                        if ok {
                            let lay = |p: &(View, View)| alternate(&p.0.to_vec(), &p.1.to_vec());
                            let order = [vec![u], lay(p1), vec![v], lay(p2)].concat();
                            let pinned = [Some(u), Some(v)]
                                .into_iter()
                                .chain([ends1, ends2].into_iter().flat_map(|e| [e.map(|x| x.0), e.map(|x| x.1)]))
                                .flatten()
                                .collect();
                            return Some((order, pinned));
                        }
                    }
                }
            }
        }
    }
    None
}

/// Length the construction must reach: twice the star, minus twice the gap.
fn target<T: Exact>(plane: &Plane<T>, case: PlanarCase, gap: Option<&Gap<T>>) -> Option<T> {
    let two_star = plane.star_length() + plane.star_length();
    match case {
        PlanarCase::Trivial | PlanarCase::OddFull => Some(two_star),
        PlanarCase::EvenMerge | PlanarCase::OddMerge => {
            let z = gap?.z_star.clone();
            Some(two_star - z.clone() - z)
        }
        PlanarCase::Small | PlanarCase::Fallback => None,
    }
}

/// Solves in L1 coordinates given as exact rationals.
fn solve_l1(xs: Vec<Scalar>, ys: Vec<Scalar>) -> Result<PlanarSolution> {
    let n = xs.len();
    if n == 0 {
        return Err(invalid("no points"));
    }
    match scale_to_i128(xs.iter().chain(&ys)) {
        Some((scale, ints)) => {
            let (x, y) = ints.split_at(n);
            solve_scaled(x.to_vec(), y.to_vec(), scale)
        }
        None => {
            let points = || xs.iter().zip(&ys).map(|(x, y)| Point::new(vec![x.clone(), y.clone()])).collect();
            solve_generic(Plane::new(xs.clone(), ys.clone()), points, |v: &Scalar| v.clone())
        }
    }
}

/// Integer coordinates that stand for `x / scale`, `y / scale`.
fn solve_scaled(x: Vec<i128>, y: Vec<i128>, scale: BigInt) -> Result<PlanarSolution> {
    let points = || {
        x.iter().zip(&y).map(|(a, b)| Point::new(vec![unscale(a, &scale), unscale(b, &scale)])).collect()
    };
    let plane = Plane::new(x.clone(), y.clone());
    solve_generic(plane, points, |v: &i128| unscale(v, &scale))
}

/// Applies the L1 transform in integers when points and map both fit the fast path.
fn transform_scaled(points: &[Point], map: &AffineMap2D) -> Option<(Vec<i128>, Vec<i128>, BigInt)> {
    let (point_scale, coords) = scale_to_i128(points.iter().flat_map(|p| p.coords.iter()))?;
    let (map_scale, m) = scale_to_i128(map.linear.iter().flatten())?;
    let row = |r: usize, a: i128, b: i128| -> Option<i128> {
        let v = m[2 * r].checked_mul(a)?.checked_add(m[2 * r + 1].checked_mul(b)?)?;
        (v.abs() <= FAST_PATH_LIMIT).then_some(v)
    };
    let (mut xs, mut ys) = (Vec::with_capacity(points.len()), Vec::with_capacity(points.len()));
    for c in coords.chunks_exact(2) {
        xs.push(row(0, c[0], c[1])?);
        ys.push(row(1, c[0], c[1])?);
    }
    Some((xs, ys, point_scale * map_scale))
}

/// `l1_points` rebuilds the exact input for the fallback solver.
fn solve_generic<T: Exact>(
    plane: Plane<T>,
    l1_points: impl FnOnce() -> Vec<Point>,
    lift: impl Fn(&T) -> Scalar,
) -> Result<PlanarSolution> {
    let n = plane.n();
    let split = Split::new(&plane);
    let case = classify(n, &split);
    let gap = match case {
        PlanarCase::EvenMerge | PlanarCase::OddMerge => Some(merge_gap(&plane, &split)?),
        _ => None,
    };
    let quadrant = split.quadrant.clone();
    let Some(built) = build(&plane, &split, gap.as_ref())? else {
        return fallback(&l1_points(), quadrant);
    };
    crate::tour::check_permutation(&built.order, n)?;
    let length = plane.length(&built.order);
    if let Some(expected) = target(&plane, built.case, gap.as_ref()) {
        if length != expected {
            return Err(contract(format!("{} tour misses its target length", built.case.label())));
        }
    }
    let tour = Tour { order: built.order, length: lift(&length) };
    Ok(PlanarSolution { tour, case: built.case, pinned: built.pinned, quadrant })
}

fn fallback(points: &[Point], quadrant: Vec<u8>) -> Result<PlanarSolution> {
    let ts = build_tunnel_system(&make_l1(2)?, points)?;
    let tour = solve_max_tsp_tunnels(&ts)?;
    let pinned = (0..points.len()).collect();
    Ok(PlanarSolution { tour, case: PlanarCase::Fallback, pinned, quadrant })
}

/// Lower-median center and the minimum star length, in the given coordinates.
pub fn median_star_center(points: &[Point]) -> Result<StarCenter> {
    if points.is_empty() {
        return Err(invalid("no points"));
    }
    check_planar(points)?;
    let plane = scalar_plane(points);
    Ok(StarCenter { min_star_length: plane.star_length(), x_c: plane.xc, y_c: plane.yc })
}

fn scalar_plane(points: &[Point]) -> Plane<Scalar> {
    Plane::new(points.iter().map(|p| p.coords[0].clone()).collect(), points.iter().map(|p| p.coords[1].clone()).collect())
}

pub fn quadrant_partition(points: &[Point], center: &StarCenter) -> Result<QuadrantPartition> {
    check_planar(points)?;
    let mut plane = scalar_plane(points);
    plane.xc = center.x_c.clone();
    plane.yc = center.y_c.clone();
    let split = Split::new(&plane);
    let [q_mm, q_mp, q_pm, q_pp] = split.lists;
    Ok(QuadrantPartition {
        center: center.clone(),
        q_mm,
        q_mp,
        q_pm,
        q_pp,
        star_point: split.star_point,
        median_line_x: split.free_x,
        median_line_y: split.free_y,
    })
}

/// Merge gap of an L1 instance in a merge case.
pub fn compute_merge_gap(points: &[Point]) -> Result<MergeGap> {
    check_planar(points)?;
    let plane = scalar_plane(points);
    let split = Split::new(&plane);
    if !matches!(classify(points.len(), &split), PlanarCase::EvenMerge | PlanarCase::OddMerge) {
        return Err(contract("instance is not in a merge case"));
    }
    let gap = merge_gap(&plane, &split)?;
    let [z1, z2, z3, z4] = gap.z;
    Ok(MergeGap {
        z1: z1.expect("always set"),
        z2: z2.expect("always set"),
        z3,
        z4,
        z_star: gap.z_star,
        witness: gap.witness,
        joins: gap.joins,
    })
}

/// Maximum tour for points under a planar norm with four facets.
pub fn solve_planar_4facet(points: &[Point], norm: &PolyhedralNorm) -> Result<Tour> {
    solve_planar_detailed(points, norm).map(|s| s.tour)
}

pub fn solve_planar_detailed(points: &[Point], norm: &PolyhedralNorm) -> Result<PlanarSolution> {
    if points.is_empty() {
        return Err(invalid("no points"));
    }
    check_planar(points)?;
    let map = four_facet_to_l1_transform(norm)?;
    if let Some((xs, ys, scale)) = transform_scaled(points, &map) {
        return solve_scaled(xs, ys, scale);
    }
    let mapped = points.iter().map(|p| map.apply(p)).collect::<Result<Vec<Point>>>()?;
    solve_planar_l1(&mapped)
}

/// Maximum tour for points already in L1 coordinates.
pub fn solve_planar_l1(points: &[Point]) -> Result<PlanarSolution> {
    check_planar(points)?;
    let xs = points.iter().map(|p| p.coords[0].clone()).collect();
    let ys = points.iter().map(|p| p.coords[1].clone()).collect();
    solve_l1(xs, ys)
}

/// Shuffles the free points of an optimal tour within their quadrant sets
/// and checks that every shuffled tour keeps the optimal length.
pub fn count_optimal_structure_check(points: &[Point], samples: usize, seed: u64) -> Result<bool> {
    let sol = solve_planar_l1(points)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pinned = vec![false; points.len()];
    for &p in &sol.pinned {
        pinned[p] = true;
    }
    let dist = |a: usize, b: usize| crate::norms::l1_distance(&points[a], &points[b]);
    for _ in 0..samples {
        let mut order = sol.tour.order.clone();
        for q in 0..4u8 {
            let slots: Vec<usize> =
                (0..order.len()).filter(|&i| !pinned[order[i]] && sol.quadrant[order[i]] == q).collect();
            let mut members: Vec<usize> = slots.iter().map(|&i| order[i]).collect();
            members.shuffle(&mut rng);
            for (&slot, &m) in slots.iter().zip(&members) {
                order[slot] = m;
            }
        }
        if crate::tour::cycle_length(&order, dist) != sol.tour.length {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Minimum star length in L1, the value of a maximum matching for even `n`.
pub fn min_star_length(points: &[Point]) -> Result<Scalar> {
    median_star_center(points).map(|c| c.min_star_length)
}
