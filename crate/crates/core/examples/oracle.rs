//! Brute-force ground truth, and the matching/star duality it confirms.

use maxtsp::instances::random_points;
use maxtsp::norms::make_l1;
use maxtsp::numeric::format_scalar;
use maxtsp::oracle::{brute_force_max_matching, brute_force_max_tour, DistanceTable};
use maxtsp::planar::{min_star_length, solve_planar_4facet};

fn main() -> Result<(), maxtsp::error::Error> {
    let l1 = make_l1(2)?;
    for seed in 0..5 {
        let points = random_points(8, 2, 20, seed);
        let table = DistanceTable::from_fn(points.len(), true, |a, b| l1.distance(&points[a], &points[b]).unwrap())?;
        let tour = brute_force_max_tour(&table)?;
        let fast = solve_planar_4facet(&points, &l1)?;
        let matching = brute_force_max_matching(&table)?;
        println!(
            "seed {seed}: tour {} (planar {}), matching {} (min star {})",
            format_scalar(&tour.length),
            format_scalar(&fast.length),
            format_scalar(&matching),
            format_scalar(&min_star_length(&points)?)
        );
    }
    Ok(())
}
