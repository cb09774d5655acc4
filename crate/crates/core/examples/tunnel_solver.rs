//! Exact maximum tour for any polyhedral norm, with its certificate.

use maxtsp::norms::{build_tunnel_system, Point, PolyhedralNorm};
use maxtsp::numeric::format_scalar;
use maxtsp::oracle::{brute_force_max_tour, DistanceTable};
use maxtsp::tunneling::{enumerate_identifiers, solve_tunnels_detailed, validate_selection};

fn main() -> Result<(), maxtsp::error::Error> {
    let hexagon = PolyhedralNorm::from_ints(2, &[&[2, 0], &[1, 2], &[-1, 2]])?;
    let coords = [(0, 0), (5, 1), (-3, 4), (2, -6), (7, 7), (-4, -2), (1, 3)];
    let points: Vec<Point> = coords.iter().map(|&(x, y)| Point::from_ints(&[x, y])).collect();
    let ts = build_tunnel_system(&hexagon, &points)?;

    let sol = solve_tunnels_detailed(&ts)?;
    println!("tour {:?}, length {}", sol.tour.order, format_scalar(&sol.tour.length));
    println!("{} identifiers enumerated, winner at rank {:?}", enumerate_identifiers(&ts).count(), sol.identifier_rank);
    if let (Some(id), Some(sel)) = (&sol.identifier, &sol.selection) {
        println!("used tunnels {:?}, connectors {:?}, degree prefix {:?}", id.used_tunnels, id.connector_cities, id.degree_prefix);
        println!("selection of {} typed edges is valid: {}", sel.typed_edges.len(), validate_selection(&ts, sel));
    }

    let oracle = brute_force_max_tour(&DistanceTable::from_tunnels(&ts)?)?;
    println!("brute force agrees: {}", oracle.length == sol.tour.length);
    Ok(())
}
