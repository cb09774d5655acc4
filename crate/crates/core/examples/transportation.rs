//! Exact integral transportation and the concave parameter search.

use maxtsp::numeric::{format_scalar, int};
use maxtsp::transportation::{parametric_concave_argmax, solve_transportation, ParametricProfile, TransportationInstance};

fn main() -> Result<(), maxtsp::error::Error> {
    let inst = TransportationInstance {
        supplies: vec![3, 2],
        demands: vec![1, 4],
        gains: vec![vec![int(5), int(1)], vec![int(2), int(4)]],
    };
    let sol = solve_transportation(&inst)?;
    println!("flows {:?}, value {}", sol.flows, format_scalar(&sol.value));

    // g(d) = -(d - 37)^2 on 0..=1000; the search touches only a few dozen points.
    let calls = std::cell::Cell::new(0);
    let profile = ParametricProfile::new(0, 1000, |d: i64| {
        calls.set(calls.get() + 1);
        Some(-(d - 37) * (d - 37))
    });
    let (arg, best) = parametric_concave_argmax(&profile)?;
    println!("argmax {arg}, value {best}, {} evaluations", calls.get());
    Ok(())
}
