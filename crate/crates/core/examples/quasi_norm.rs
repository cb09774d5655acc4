//! Directed maximum tour under an asymmetric (quasi-) norm.

use maxtsp::norms::{build_tunnel_system_quasi, Point, QuasiNorm};
use maxtsp::numeric::format_scalar;
use maxtsp::oracle::{brute_force_max_tour_directed, DistanceTable};
use maxtsp::tour::cycle_length;
use maxtsp::tunneling::solve_max_tsp_quasi;

fn main() -> Result<(), maxtsp::error::Error> {
    let q = QuasiNorm::triangle();
    let points: Vec<Point> = [(0, 0), (4, 1), (-2, 3), (1, -5), (3, 3), (-1, -1)]
        .iter()
        .map(|&(x, y)| Point::from_ints(&[x, y]))
        .collect();
    println!("d(p0, p1) = {}, d(p1, p0) = {}", format_scalar(&q.distance(&points[0], &points[1])?), format_scalar(&q.distance(&points[1], &points[0])?));

    let ts = build_tunnel_system_quasi(&q, &points)?;
    let tour = solve_max_tsp_quasi(&ts)?;
    let mut reversed = tour.order.clone();
    reversed.reverse();
    let back = cycle_length(&reversed, |a, b| ts.distance(a, b));
    println!("tour {:?}: {} forward, {} reversed", tour.order, format_scalar(&tour.length), format_scalar(&back));

    let oracle = brute_force_max_tour_directed(&DistanceTable::from_tunnels(&ts)?)?;
    println!("directed brute force agrees: {}", oracle.length == tour.length);
    Ok(())
}
