//! Exact maximization transportation problems and concave parametric search.
//!
//! The solver targets the shape that arises inside the tunnel solver: many
//! sources, a handful of destinations, no arc capacities. Every source first
//! ships its whole supply to its most profitable destination. The resulting
//! pseudo-flow is optimal for the relaxed problem without demand constraints,
//! so its residual graph has no negative cycle. Excess is then pushed to
//! deficit destinations along shortest residual paths (successive shortest
//! paths), which keeps optimality and ends with an integral optimum.
//!
//! Residual paths only ever alternate destination -> source -> destination, so
//! shortest paths are computed on the destinations alone. For each ordered
//! destination pair a lazy heap holds the sources currently shipping to the
//! first one, keyed by the profit lost when one unit is redirected.

use std::cell::RefCell;
use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap};

use num_traits::Zero;

use crate::error::{invalid, Error, Result};
use crate::numeric::{scale_to_i128, unscale, Exact, Scalar};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransportationInstance {
    pub supplies: Vec<u64>,
    pub demands: Vec<u64>,
    /// `gains[source][destination]`, maximized.
    pub gains: Vec<Vec<Scalar>>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FlowSolution {
    pub flows: Vec<Vec<u64>>,
    pub value: Scalar,
}

pub fn solve_transportation(inst: &TransportationInstance) -> Result<FlowSolution> {
    let (n, m) = (inst.supplies.len(), inst.demands.len());
    if inst.gains.len() != n || inst.gains.iter().any(|row| row.len() != m) {
        return Err(invalid(format!("gain matrix must be {n} x {m}")));
    }
    let supply: u64 = inst.supplies.iter().sum();
    let demand: u64 = inst.demands.iter().sum();
    if supply != demand {
        return Err(Error::Unbalanced { supply, demand });
    }
    if supply == 0 {
        return Ok(FlowSolution {
            flows: vec![vec![0; m]; n],
            value: Scalar::zero(),
        });
    }

    let flat = || inst.gains.iter().flatten();
    let (flows, value) = match scale_to_i128(flat()) {
        Some((scale, gains)) => {
            let (flows, value) = max_transport(&inst.supplies, &inst.demands, &gains);
            (flows, unscale(&value, &scale))
        }
        None => {
            let gains: Vec<Scalar> = flat().cloned().collect();
            max_transport(&inst.supplies, &inst.demands, &gains)
        }
    };
    Ok(FlowSolution {
        flows: flows.chunks(m.max(1)).map(<[u64]>::to_vec).collect(),
        value,
    })
}

/// Core solver over a row-major `supplies.len() x demands.len()` gain matrix.
///
/// The instance must be balanced. Returns row-major flows and the total gain.
pub(crate) fn max_transport<T: Exact>(
    supplies: &[u64],
    demands: &[u64],
    gains: &[T],
) -> (Vec<u64>, T) {
    let m = demands.len();
    let n = supplies.len();
    debug_assert_eq!(gains.len(), n * m);
    debug_assert_eq!(supplies.iter().sum::<u64>(), demands.iter().sum::<u64>());

    let mut flow = vec![0u64; n * m];
    let mut excess: Vec<i64> = demands.iter().map(|&d| -(d as i64)).collect();
    for s in 0..n {
        if supplies[s] == 0 {
            continue;
        }
        let row = &gains[s * m..(s + 1) * m];
        let best = (1..m).fold(0, |b, j| if row[j] > row[b] { j } else { b });
        flow[s * m + best] = supplies[s];
        excess[best] += supplies[s] as i64;
    }

    if m > 1 && excess.iter().any(|&e| e != 0) {
        Rebalancer::new(m, gains, &mut flow).run(&mut excess);
    }

    let value = flow
        .iter()
        .zip(gains)
        .filter(|(f, _)| **f > 0)
        .fold(T::zero(), |acc, (f, g)| {
            acc + g.clone() * mul_count::<T>(*f)
        });
    (flow, value)
}

fn mul_count<T: Exact>(count: u64) -> T {
    // Flows are bounded by total supply, so repeated doubling stays small.
    let mut acc = T::zero();
    let mut base = T::one();
    let mut k = count;
    while k > 0 {
        if k & 1 == 1 {
            acc = acc + base.clone();
        }
        base = base.clone() + base;
        k >>= 1;
    }
    acc
}

struct Rebalancer<'a, T> {
    m: usize,
    gains: &'a [T],
    flow: &'a mut [u64],
    /// `heaps[a * m + b]`: sources shipping to `a`, keyed by `gain(a) - gain(b)`.
    heaps: Vec<BinaryHeap<Reverse<(T, usize)>>>,
    /// Whether source `s` has a live entry in the heaps of destination `a`.
    listed: Vec<bool>,
}

impl<'a, T: Exact> Rebalancer<'a, T> {
    fn new(m: usize, gains: &'a [T], flow: &'a mut [u64]) -> Self {
        let n = flow.len() / m;
        let mut this = Rebalancer {
            m,
            gains,
            flow,
            heaps: (0..m * m).map(|_| BinaryHeap::new()).collect(),
            listed: vec![false; n * m],
        };
        for s in 0..n {
            for a in 0..m {
                if this.flow[s * m + a] > 0 {
                    this.list(s, a);
                }
            }
        }
        this
    }

    fn list(&mut self, s: usize, a: usize) {
        let m = self.m;
        self.listed[s * m + a] = true;
        for b in 0..m {
            if b != a {
                let key = self.gains[s * m + a].clone() - self.gains[s * m + b].clone();
                self.heaps[a * m + b].push(Reverse((key, s)));
            }
        }
    }

    /// Cheapest source for redirecting a unit from `a` to `b`.
    fn cheapest(&mut self, a: usize, b: usize) -> Option<(T, usize)> {
        let m = self.m;
        loop {
            let Reverse((key, s)) = self.heaps[a * m + b].peek()?.clone();
            if self.flow[s * m + a] > 0 {
                return Some((key, s));
            }
            self.heaps[a * m + b].pop();
            self.listed[s * m + a] = false;
        }
    }

    fn run(&mut self, excess: &mut [i64]) {
        let m = self.m;
        loop {
            if excess.iter().all(|&e| e == 0) {
                return;
            }
            let mut arcs: Vec<Option<(T, usize)>> = vec![None; m * m];
            for a in 0..m {
                for b in 0..m {
                    if a != b {
                        arcs[a * m + b] = self.cheapest(a, b);
                    }
                }
            }

            // Bellman-Ford from every destination holding excess.
            let mut dist: Vec<Option<T>> = excess.iter().map(|&e| (e > 0).then(T::zero)).collect();
            let mut pred: Vec<Option<(usize, usize)>> = vec![None; m];
            for _ in 0..m {
                let mut changed = false;
                for a in 0..m {
                    let Some(da) = dist[a].clone() else { continue };
                    for b in 0..m {
                        let Some((cost, s)) = &arcs[a * m + b] else {
                            continue;
                        };
                        let cand = da.clone() + cost.clone();
                        if dist[b].as_ref().is_none_or(|db| cand < *db) {
                            dist[b] = Some(cand);
                            pred[b] = Some((a, *s));
                            changed = true;
                        }
                    }
                }
                if !changed {
                    break;
                }
            }

            let target = (0..m)
                .filter(|&j| excess[j] < 0 && dist[j].is_some())
                .min_by(|&x, &y| dist[x].cmp(&dist[y]).then(x.cmp(&y)))
                .expect("a deficit destination is always reachable");

            let mut path = Vec::new();
            let mut node = target;
            while let Some((prev, s)) = pred[node] {
                path.push((prev, node, s));
                node = prev;
            }
            let start = node;
            let mut amount = excess[start].min(-excess[target]) as u64;
            for &(a, _, s) in &path {
                amount = amount.min(self.flow[s * m + a]);
            }
            debug_assert!(amount > 0);
            for &(a, b, s) in path.iter().rev() {
                self.flow[s * m + a] -= amount;
                let was_empty = self.flow[s * m + b] == 0;
                self.flow[s * m + b] += amount;
                if was_empty && !self.listed[s * m + b] {
                    self.list(s, b);
                }
            }
            excess[start] -= amount as i64;
            excess[target] += amount as i64;
        }
    }
}

/// Integer-parameter family whose feasible values form `domain_lo..=domain_hi`.
pub struct ParametricProfile<F> {
    pub domain_lo: i64,
    pub domain_hi: i64,
    pub evaluator: F,
}

impl<F> ParametricProfile<F> {
    pub fn new(domain_lo: i64, domain_hi: i64, evaluator: F) -> Self {
        ParametricProfile {
            domain_lo,
            domain_hi,
            evaluator,
        }
    }
}

/// Smallest maximizer of a concave function over an integer interval.
///
/// Fibonacci search over an open bracket `(a, a + F_k)` that always contains
/// the smallest maximizer. With probes `x1 < x2`, `g(x1) < g(x2)` rules out
/// everything up to `x1`; otherwise everything from `x2` on. Values outside
/// the domain, and absent values, rank below every present value. The
/// winner's neighbours are re-checked afterwards and a strictly better
/// neighbour is reported as [`Error::NotConcave`].
pub fn parametric_concave_argmax<T, F>(profile: &ParametricProfile<F>) -> Result<(i64, T)>
where
    T: Ord + Clone,
    F: Fn(i64) -> Option<T>,
{
    let (lo, hi) = (profile.domain_lo, profile.domain_hi);
    if lo > hi {
        return Err(Error::Infeasible);
    }
    let cache: RefCell<HashMap<i64, Option<T>>> = RefCell::new(HashMap::new());
    let eval = |x: i64| -> Option<T> {
        if x < lo || x > hi {
            return None;
        }
        if let Some(v) = cache.borrow().get(&x) {
            return v.clone();
        }
        let v = (profile.evaluator)(x);
        cache.borrow_mut().insert(x, v.clone());
        v
    };

    // fib[k] = F_k with F_0 = 0, F_1 = 1.
    let mut fib = vec![0i64, 1];
    while fib[fib.len() - 1] < hi - lo + 2 {
        let k = fib.len();
        fib.push(fib[k - 1] + fib[k - 2]);
    }
    let mut k = fib.len() - 1;
    let mut a = lo - 1;
    while k > 4 {
        let x1 = a + fib[k - 2];
        let x2 = a + fib[k - 1];
        if eval(x1) < eval(x2) {
            a = x1;
        }
        k -= 1;
    }

    let mut best: Option<(i64, T)> = None;
    for x in (a + 1)..(a + fib[k]) {
        if let Some(v) = eval(x) {
            if best.as_ref().is_none_or(|(_, b)| v > *b) {
                best = Some((x, v));
            }
        }
    }
    let (x, v) = best.ok_or(Error::Infeasible)?;
    for nb in [x - 1, x + 1] {
        if eval(nb).is_some_and(|w| w > v) {
            return Err(Error::NotConcave(x));
        }
    }
    Ok((x, v))
}

#[cfg(test)]
mod tests {
    use std::cell::Cell;

    use super::*;
    use crate::numeric::int;
    use proptest::prelude::*;

    fn inst(supplies: &[u64], demands: &[u64], gains: &[&[i64]]) -> TransportationInstance {
        TransportationInstance {
            supplies: supplies.to_vec(),
            demands: demands.to_vec(),
            gains: gains
                .iter()
                .map(|r| r.iter().map(|&g| int(g)).collect())
                .collect(),
        }
    }

    /// Exhaustive search over all integral flows.
    fn brute_force(inst: &TransportationInstance) -> Option<Scalar> {
        fn rec(
            s: usize,
            inst: &TransportationInstance,
            left: &mut Vec<u64>,
            acc: Scalar,
            best: &mut Option<Scalar>,
        ) {
            if s == inst.supplies.len() {
                if left.iter().all(|&d| d == 0) && best.as_ref().is_none_or(|b| acc > *b) {
                    *best = Some(acc);
                }
                return;
            }
            split(s, 0, inst.supplies[s], inst, left, acc, best);
        }
        fn split(
            s: usize,
            j: usize,
            rest: u64,
            inst: &TransportationInstance,
            left: &mut Vec<u64>,
            acc: Scalar,
            best: &mut Option<Scalar>,
        ) {
            if j == left.len() {
                if rest == 0 {
                    rec(s + 1, inst, left, acc, best);
                }
                return;
            }
            for q in 0..=rest.min(left[j]) {
                left[j] -= q;
                let gain = &inst.gains[s][j] * int(q as i64);
                split(s, j + 1, rest - q, inst, left, acc.clone() + gain, best);
                left[j] += q;
            }
        }
        let mut best = None;
        rec(
            0,
            inst,
            &mut inst.demands.clone(),
            Scalar::zero(),
            &mut best,
        );
        best
    }

    fn check_feasible(inst: &TransportationInstance, sol: &FlowSolution) {
        for (s, row) in sol.flows.iter().enumerate() {
            assert_eq!(row.iter().sum::<u64>(), inst.supplies[s]);
        }
        for j in 0..inst.demands.len() {
            assert_eq!(sol.flows.iter().map(|r| r[j]).sum::<u64>(), inst.demands[j]);
        }
        let value: Scalar = sol
            .flows
            .iter()
            .zip(&inst.gains)
            .flat_map(|(f, g)| f.iter().zip(g).map(|(&q, g)| g * int(q as i64)))
            .sum();
        assert_eq!(value, sol.value);
    }

    #[test]
    fn single_source_two_sinks() {
        let i = inst(&[2], &[1, 1], &[&[3, 5]]);
        let sol = solve_transportation(&i).unwrap();
        assert_eq!(sol.value, int(8));
        assert_eq!(sol.flows, vec![vec![1, 1]]);
    }

    #[test]
    fn two_by_two() {
        let i = inst(&[2, 2], &[3, 1], &[&[1, 0], &[0, 1]]);
        let sol = solve_transportation(&i).unwrap();
        assert_eq!(sol.value, int(3));
        assert_eq!(sol.flows, vec![vec![2, 0], vec![1, 1]]);
    }

    #[test]
    fn empty_and_zero_instances() {
        let empty = TransportationInstance {
            supplies: vec![],
            demands: vec![],
            gains: vec![],
        };
        assert_eq!(solve_transportation(&empty).unwrap().value, int(0));
        let zeros = inst(&[0, 0], &[0], &[&[4], &[9]]);
        let sol = solve_transportation(&zeros).unwrap();
        assert_eq!(sol.value, int(0));
        assert_eq!(sol.flows, vec![vec![0], vec![0]]);
    }

    #[test]
    fn unbalanced_rejected() {
        let i = inst(&[2], &[1], &[&[1]]);
        assert_eq!(
            solve_transportation(&i).unwrap_err(),
            Error::Unbalanced {
                supply: 2,
                demand: 1
            }
        );
        let ragged = inst(&[1], &[1], &[&[1, 2]]);
        assert!(solve_transportation(&ragged).is_err());
    }

    #[test]
    fn rational_gains_take_scaled_path() {
        let i = TransportationInstance {
            supplies: vec![1, 1],
            demands: vec![1, 1],
            gains: vec![
                vec![crate::numeric::ratio(1, 3), int(0)],
                vec![crate::numeric::ratio(1, 2), int(0)],
            ],
        };
        let sol = solve_transportation(&i).unwrap();
        assert_eq!(sol.value, crate::numeric::ratio(1, 2));
    }

    #[test]
    fn bigrational_path_agrees_with_scaled_path() {
        let gains: Vec<i128> = vec![5, -2, 7, 1, 0, 3, -4, 9, 2];
        let rat: Vec<Scalar> = gains.iter().map(|&g| int(g as i64)).collect();
        let (f1, v1) = max_transport(&[2, 2, 2], &[1, 3, 2], &gains);
        let (f2, v2) = max_transport(&[2, 2, 2], &[1, 3, 2], &rat);
        assert_eq!(v1.to_scalar(), v2);
        assert_eq!(f1, f2);
    }

    fn small_instance() -> impl Strategy<Value = TransportationInstance> {
        (1usize..=4, 1usize..=4)
            .prop_flat_map(|(n, m)| {
                (
                    prop::collection::vec(0u64..=2, n),
                    prop::collection::vec(prop::collection::vec(-9i64..=9, m), n),
                    prop::collection::vec(0usize..m, 6),
                )
            })
            .prop_filter_map("total supply above 6", |(supplies, gains, picks)| {
                let total: u64 = supplies.iter().sum();
                if total > 6 {
                    return None;
                }
                let m = gains[0].len();
                let mut demands = vec![0u64; m];
                for &j in picks.iter().take(total as usize) {
                    demands[j] += 1;
                }
                Some(TransportationInstance {
                    supplies,
                    demands,
                    gains: gains
                        .iter()
                        .map(|r| r.iter().map(|&g| int(g)).collect())
                        .collect(),
                })
            })
    }

    proptest! {
        #[test]
        fn matches_brute_force(i in small_instance()) {
            let sol = solve_transportation(&i).unwrap();
            check_feasible(&i, &sol);
            prop_assert_eq!(Some(sol.value), brute_force(&i));
        }

        #[test]
        fn large_instances_stay_feasible(
            gains in prop::collection::vec(prop::collection::vec(-50i64..=50, 4), 30..60),
            split in prop::collection::vec(0u64..=40, 3),
        ) {
            let n = gains.len() as u64;
            let total = 2 * n;
            let mut demands: Vec<u64> = split.iter().map(|&s| s.min(total) / 2).collect();
            let used: u64 = demands.iter().sum();
            prop_assume!(used <= total);
            demands.push(total - used);
            let i = TransportationInstance {
                supplies: vec![2; n as usize],
                demands,
                gains: gains.iter().map(|r| r.iter().map(|&g| int(g)).collect()).collect(),
            };
            let sol = solve_transportation(&i).unwrap();
            check_feasible(&i, &sol);
        }
    }

    fn scan_argmax(values: &[i64], lo: i64) -> (i64, i64) {
        let mut best = (lo, values[0]);
        for (i, &v) in values.iter().enumerate() {
            if v > best.1 {
                best = (lo + i as i64, v);
            }
        }
        best
    }

    fn profile_of(values: Vec<i64>, lo: i64) -> ParametricProfile<impl Fn(i64) -> Option<i64>> {
        let hi = lo + values.len() as i64 - 1;
        ParametricProfile::new(lo, hi, move |x| values.get((x - lo) as usize).copied())
    }

    #[test]
    fn argmax_examples() {
        assert_eq!(
            parametric_concave_argmax(&profile_of(vec![1, 4, 5, 3, 0], 1)).unwrap(),
            (3, 5)
        );
        assert_eq!(
            parametric_concave_argmax(&profile_of(vec![2, 2, 2, 2], 1)).unwrap(),
            (1, 2)
        );
        assert_eq!(
            parametric_concave_argmax(&profile_of(vec![11], 7)).unwrap(),
            (7, 11)
        );
    }

    #[test]
    fn argmax_errors() {
        let empty = ParametricProfile::new(3, 2, |_| Some(0));
        assert_eq!(
            parametric_concave_argmax(&empty).unwrap_err(),
            Error::Infeasible
        );
        let none = ParametricProfile::new(0, 5, |_| None::<i64>);
        assert_eq!(
            parametric_concave_argmax(&none).unwrap_err(),
            Error::Infeasible
        );
    }

    #[test]
    fn argmax_uses_logarithmic_evaluations() {
        let calls = Cell::new(0usize);
        let profile = ParametricProfile::new(1, 100_000, |x: i64| {
            calls.set(calls.get() + 1);
            Some(-(x - 31_337) * (x - 31_337))
        });
        assert_eq!(parametric_concave_argmax(&profile).unwrap().0, 31_337);
        assert!(calls.get() < 40, "{} evaluations", calls.get());
    }

    /// Random concave sequences: nonincreasing slopes, summed from a base.
    fn concave_sequence() -> impl Strategy<Value = Vec<i64>> {
        (prop::collection::vec(-20i64..=20, 0..40), -100i64..100).prop_map(|(mut slopes, base)| {
            slopes.sort_unstable_by(|a, b| b.cmp(a));
            let mut out = vec![base];
            for s in slopes {
                let last = *out.last().unwrap();
                out.push(last + s);
            }
            out
        })
    }

    proptest! {
        #[test]
        fn argmax_matches_exhaustive_scan(values in concave_sequence(), lo in -50i64..50) {
            let expect = scan_argmax(&values, lo);
            prop_assert_eq!(parametric_concave_argmax(&profile_of(values, lo)).unwrap(), expect);
        }

        /// On arbitrary input the bracket endpoints have lost to an interior
        /// probe, so the answer is at least a local maximum.
        #[test]
        fn argmax_is_local_max_on_any_sequence(values in prop::collection::vec(-5i64..5, 1..30)) {
            let (x, v) = parametric_concave_argmax(&profile_of(values.clone(), 0)).unwrap();
            prop_assert_eq!(values[x as usize], v);
            if x > 0 { prop_assert!(values[x as usize - 1] <= v); }
            if let Some(&w) = values.get(x as usize + 1) { prop_assert!(w <= v); }
        }
    }
}
