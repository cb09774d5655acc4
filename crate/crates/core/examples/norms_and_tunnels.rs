//! Polyhedral distances and the tunnel system they reduce to.

use maxtsp::norms::{build_tunnel_system, make_l1, make_linf, Point, PolyhedralNorm};
use maxtsp::numeric::format_scalar;

fn main() -> Result<(), maxtsp::error::Error> {
    let a = Point::from_ints(&[0, 0]);
    let b = Point::from_ints(&[3, -1]);
    let hexagon = PolyhedralNorm::from_ints(2, &[&[1, 0], &[0, 1], &[1, 1]])?;
    for (name, norm) in [("L1", make_l1(2)?), ("Linf", make_linf(2)?), ("hexagonal", hexagon)] {
        println!("{name:>9}: d(a, b) = {} with {} facets", format_scalar(&norm.distance(&a, &b)?), norm.n_facets());
    }

    // Each half-facet becomes a tunnel; a city's front and back distances add up
    // to the norm distance along the best tunnel.
    let cities = [a, b, Point::from_ints(&[1, 4])];
    let ts = build_tunnel_system(&make_l1(2)?, &cities)?;
    println!("\n{} cities, {} tunnels", ts.n_cities(), ts.n_tunnels());
    for c in 0..ts.n_cities() {
        let ends: Vec<String> = (0..ts.n_tunnels())
            .map(|t| format!("F{t}={} B{t}={}", format_scalar(ts.front(c, t)), format_scalar(ts.back(c, t))))
            .collect();
        println!("city {c}: {}", ends.join("  "));
    }
    println!("d(city 0, city 2) via tunnels = {}", format_scalar(&ts.distance(0, 2)));
    Ok(())
}
