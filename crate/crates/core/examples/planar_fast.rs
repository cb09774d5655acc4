//! Linear-time solver for planar norms with four facets.

use std::time::Instant;

use maxtsp::instances::random_points;
use maxtsp::norms::{make_l1, make_linf, Point, PolyhedralNorm};
use maxtsp::numeric::format_scalar;
use maxtsp::planar::{compute_merge_gap, median_star_center, quadrant_partition, solve_planar_detailed};

fn main() -> Result<(), maxtsp::error::Error> {
    let points: Vec<Point> = [(0, 0), (1, 1), (-1, 1), (1, -1), (-1, -1), (3, 0), (0, -2), (-2, 2)]
        .iter()
        .map(|&(x, y)| Point::from_ints(&[x, y]))
        .collect();
    let center = median_star_center(&points)?;
    let part = quadrant_partition(&points, &center)?;
    println!("center ({}, {}), min star {}", format_scalar(&center.x_c), format_scalar(&center.y_c), format_scalar(&center.min_star_length));
    println!("quadrants mm {:?} mp {:?} pm {:?} pp {:?}", part.q_mm, part.q_mp, part.q_pm, part.q_pp);
    if let Ok(gap) = compute_merge_gap(&points) {
        println!("merge gap Z* = {} (witness {:?})", format_scalar(&gap.z_star), gap.witness);
    }

    let skew = PolyhedralNorm::from_ints(2, &[&[2, 1], &[-1, 3]])?;
    for (name, norm) in [("L1", make_l1(2)?), ("Linf", make_linf(2)?), ("skewed", skew)] {
        let sol = solve_planar_detailed(&points, &norm)?;
        println!("{name:>6}: length {} via the {} case", format_scalar(&sol.tour.length), sol.case.label());
    }

    let l1 = make_l1(2)?;
    for n in [100_000, 200_000, 400_000] {
        let pts = random_points(n, 2, 1_000_000, n as u64);
        let start = Instant::now();
        let sol = solve_planar_detailed(&pts, &l1)?;
        println!("n = {n:>6}: {:>8.1?} ({})", start.elapsed(), sol.case.label());
    }
    Ok(())
}
