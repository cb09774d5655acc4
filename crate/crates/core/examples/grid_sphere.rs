//! Grid graphs on the sphere: long Euclidean tours exist iff the grid is Hamiltonian.

use maxtsp::instances::{calibrate_eps_constant, embed_grid_graph, separation_certificate, GridGraph};
use maxtsp::oracle::{brute_force_max_tour_up_to, DistanceTable};

fn main() -> Result<(), maxtsp::error::Error> {
    let c = calibrate_eps_constant();
    println!("calibrated constant: eps_n <= {c:.3e} / n^8");
    let graphs = [
        ("2x3 rectangle", GridGraph::rectangle(2, 3)?),
        ("3x3 rectangle", GridGraph::rectangle(3, 3)?),
        ("3x3 ring", GridGraph::ring(3, 3)?),
        ("path of 6", GridGraph::path(6)?),
        ("random 7", GridGraph::random_connected(7, 5)?),
    ];
    for (name, g) in graphs {
        let emb = embed_grid_graph(&g)?;
        let table = DistanceTable::from_fn(g.n(), true, |i, j| emb.distance(i, j))?;
        let best = brute_force_max_tour_up_to(&table, 9)?.length;
        println!(
            "{name:>13}: psi {:.2e}, eps {:.1e}, certificate {}, best tour {:.12} vs threshold {:.12}, Hamiltonian {}",
            emb.psi,
            emb.eps_bound,
            separation_certificate(&emb, &g)?,
            best,
            emb.hamiltonian_threshold(),
            g.is_hamiltonian()
        );
    }
    Ok(())
}
