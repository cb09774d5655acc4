//! Exhaustive ground truth for small instances.

use std::ops::Add;

use num_traits::Zero;

use crate::error::{invalid, Result};
use crate::norms::TunnelSystem;
use crate::numeric::Scalar;
use crate::tour::Tour;

pub const MAX_UNDIRECTED: usize = 10;
pub const MAX_DIRECTED: usize = 9;
pub const MAX_MATCHING: usize = 12;

/// Square table of pairwise distances.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceTable<T = Scalar> {
    n: usize,
    entries: Vec<Vec<T>>,
    symmetric: bool,
}

impl<T: Clone + PartialEq + Zero> DistanceTable<T> {
    pub fn new(entries: Vec<Vec<T>>, symmetric: bool) -> Result<Self> {
        let n = entries.len();
        if entries.iter().any(|row| row.len() != n) {
            return Err(invalid("distance table must be square"));
        }
        if (0..n).any(|i| !entries[i][i].is_zero()) {
            return Err(invalid("distance table needs a zero diagonal"));
        }
        if symmetric && (0..n).any(|i| (0..i).any(|j| entries[i][j] != entries[j][i])) {
            return Err(invalid("table flagged symmetric but is not"));
        }
        Ok(DistanceTable { n, entries, symmetric })
    }

    pub fn from_fn(n: usize, symmetric: bool, dist: impl Fn(usize, usize) -> T) -> Result<Self> {
        let entries = (0..n).map(|i| (0..n).map(|j| if i == j { T::zero() } else { dist(i, j) }).collect()).collect();
        Self::new(entries, symmetric)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    pub fn get(&self, i: usize, j: usize) -> &T {
        &self.entries[i][j]
    }
}

impl DistanceTable<Scalar> {
    pub fn from_tunnels(ts: &TunnelSystem) -> Result<Self> {
        Self::from_fn(ts.n_cities(), ts.is_symmetric(), |a, b| ts.distance(a, b))
    }
}

/// Best undirected tour; ties go to the lexicographically smallest order.
pub fn brute_force_max_tour<T>(table: &DistanceTable<T>) -> Result<Tour<T>>
where
    T: Clone + PartialOrd + Add<Output = T> + Zero,
{
    brute_force_max_tour_up_to(table, MAX_UNDIRECTED)
}

/// As [`brute_force_max_tour`] with an explicit size guard.
pub fn brute_force_max_tour_up_to<T>(table: &DistanceTable<T>, max_n: usize) -> Result<Tour<T>>
where
    T: Clone + PartialOrd + Add<Output = T> + Zero,
{
    guard(table.n, 3, max_n)?;
    Ok(search(table, !table.symmetric))
}

/// Best directed tour, `d(a, b)` read as the cost of going from `a` to `b`.
pub fn brute_force_max_tour_directed<T>(table: &DistanceTable<T>) -> Result<Tour<T>>
where
    T: Clone + PartialOrd + Add<Output = T> + Zero,
{
    brute_force_max_tour_directed_up_to(table, MAX_DIRECTED)
}

pub fn brute_force_max_tour_directed_up_to<T>(table: &DistanceTable<T>, max_n: usize) -> Result<Tour<T>>
where
    T: Clone + PartialOrd + Add<Output = T> + Zero,
{
    guard(table.n, 3, max_n)?;
    Ok(search(table, true))
}

fn guard(n: usize, min: usize, max: usize) -> Result<()> {
    if n < min || n > max {
        return Err(invalid(format!("brute force needs {min} <= n <= {max}, got {n}")));
    }
    Ok(())
}

fn search<T>(table: &DistanceTable<T>, directed: bool) -> Tour<T>
where
    T: Clone + PartialOrd + Add<Output = T> + Zero,
{
    struct State<'a, T> {
        table: &'a DistanceTable<T>,
        directed: bool,
        order: Vec<usize>,
        used: Vec<bool>,
        best: Option<Tour<T>>,
    }

    fn rec<T: Clone + PartialOrd + Add<Output = T> + Zero>(st: &mut State<T>, acc: T) {
        let n = st.table.n;
        if st.order.len() == n {
            // Each undirected cycle appears twice; keep the copy with order[1] < order[n-1].
            if !st.directed && st.order[1] > st.order[n - 1] {
                return;
            }
            let total = acc + st.table.entries[st.order[n - 1]][0].clone();
            if st.best.as_ref().is_none_or(|b| total > b.length) {
                st.best = Some(Tour { order: st.order.clone(), length: total });
            }
            return;
        }
        let last = *st.order.last().expect("starts at city 0");
        for c in 1..n {
            if !st.used[c] {
                st.used[c] = true;
                st.order.push(c);
                let step = st.table.entries[last][c].clone();
                rec(st, acc.clone() + step);
                st.order.pop();
                st.used[c] = false;
            }
        }
    }

    let n = table.n;
    let mut used = vec![false; n];
    used[0] = true;
    let mut st = State { table, directed, order: vec![0], used, best: None };
    rec(&mut st, T::zero());
    st.best.expect("n >= 3 has a tour")
}

/// Maximum-weight perfect matching by enumeration.
pub fn brute_force_max_matching<T>(table: &DistanceTable<T>) -> Result<T>
where
    T: Clone + PartialOrd + Add<Output = T> + Zero,
{
    let n = table.n;
    if n % 2 == 1 {
        return Err(invalid("perfect matching needs an even number of points"));
    }
    guard(n, 0, MAX_MATCHING)?;
    fn rec<T: Clone + PartialOrd + Add<Output = T> + Zero>(table: &DistanceTable<T>, used: &mut [bool]) -> T {
        let Some(i) = used.iter().position(|&u| !u) else { return T::zero() };
        used[i] = true;
        let mut best: Option<T> = None;
        for j in i + 1..used.len() {
            if !used[j] {
                used[j] = true;
                let v = table.entries[i][j].clone() + rec(table, used);
                used[j] = false;
                if best.as_ref().is_none_or(|b| v > *b) {
                    best = Some(v);
                }
            }
        }
        used[i] = false;
        best.expect("an even remainder has a partner")
    }
    Ok(rec(table, &mut vec![false; n]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::norms::{build_tunnel_system, build_tunnel_system_quasi, make_l1, Point, QuasiNorm};
    use crate::numeric::int;
    use proptest::prelude::*;

    fn l1_table(coords: &[(i64, i64)]) -> DistanceTable {
        let pts: Vec<Point> = coords.iter().map(|&(x, y)| Point::from_ints(&[x, y])).collect();
        DistanceTable::from_tunnels(&build_tunnel_system(&make_l1(2).unwrap(), &pts).unwrap()).unwrap()
    }

    #[test]
    fn worked_values() {
        let square = l1_table(&[(0, 0), (1, 0), (0, 1), (1, 1)]);
        assert_eq!(brute_force_max_tour(&square).unwrap().length, int(6));
        assert_eq!(brute_force_max_matching(&square).unwrap(), int(4));
        let line = l1_table(&[(0, 0), (1, 0), (2, 0), (3, 0)]);
        assert_eq!(brute_force_max_tour(&line).unwrap().length, int(8));
        let tri = l1_table(&[(0, 0), (4, 0), (0, 3)]);
        let t = brute_force_max_tour(&tri).unwrap();
        assert_eq!((t.order, t.length), (vec![0, 1, 2], int(14)));
        let pair = l1_table(&[(0, 0), (2, 5)]);
        assert_eq!(brute_force_max_matching(&pair).unwrap(), int(7));
    }

    #[test]
    fn guards() {
        let big = DistanceTable::from_fn(11, true, |_, _| 1i64).unwrap();
        assert!(brute_force_max_tour(&big).is_err());
        assert!(brute_force_max_tour_up_to(&big, 11).is_ok());
        assert!(brute_force_max_tour_directed(&DistanceTable::from_fn(10, false, |_, _| 1i64).unwrap()).is_err());
        assert!(brute_force_max_matching(&DistanceTable::from_fn(3, true, |_, _| 1i64).unwrap()).is_err());
        assert!(brute_force_max_tour(&DistanceTable::from_fn(2, true, |_, _| 1i64).unwrap()).is_err());
    }

    #[test]
    fn table_validation() {
        assert!(DistanceTable::new(vec![vec![0, 1], vec![2, 0]], true).is_err());
        assert!(DistanceTable::new(vec![vec![1]], true).is_err());
        assert!(DistanceTable::new(vec![vec![0, 1]], false).is_err());
    }

    #[test]
    fn dominant_directed_edge_wins() {
        let mut d = vec![vec![1i64; 4]; 4];
        for (i, row) in d.iter_mut().enumerate() {
            row[i] = 0;
        }
        d[2][1] = 100;
        let t = brute_force_max_tour_directed(&DistanceTable::new(d, false).unwrap()).unwrap();
        assert_eq!(t.length, 103);
        let pos = |c| t.order.iter().position(|&x| x == c).unwrap();
        assert_eq!((pos(2) + 1) % 4, pos(1));
    }

    #[test]
    fn quasi_triangle_orientations() {
        let pts = [Point::from_ints(&[0, 0]), Point::from_ints(&[1, 0]), Point::from_ints(&[0, 1])];
        let ts = build_tunnel_system_quasi(&QuasiNorm::triangle(), &pts).unwrap();
        let table = DistanceTable::from_tunnels(&ts).unwrap();
        let fwd = table.get(0, 1) + table.get(1, 2) + table.get(2, 0);
        let back = table.get(0, 2) + table.get(2, 1) + table.get(1, 0);
        assert_eq!(brute_force_max_tour_directed(&table).unwrap().length, fwd.max(back));
    }

    proptest! {
        #[test]
        fn directed_equals_undirected_on_symmetric(coords in prop::collection::vec((-9i64..9, -9i64..9), 3..8)) {
            let t = l1_table(&coords);
            prop_assert_eq!(brute_force_max_tour(&t).unwrap().length, brute_force_max_tour_directed(&t).unwrap().length);
        }

        #[test]
        fn relabeling_invariance(coords in prop::collection::vec((-9i64..9, -9i64..9), 4..8), rot in 0usize..8) {
            let t = l1_table(&coords);
            let mut shifted = coords.clone();
            shifted.rotate_left(rot % coords.len());
            let s = l1_table(&shifted);
            prop_assert_eq!(brute_force_max_tour(&t).unwrap().length, brute_force_max_tour(&s).unwrap().length);
            if coords.len() % 2 == 0 {
                prop_assert_eq!(brute_force_max_matching(&t).unwrap(), brute_force_max_matching(&s).unwrap());
            }
        }
    }
}
