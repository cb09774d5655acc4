//! The JSON instance and solution formats, solved and verified in memory.

use maxtsp::cli::{parse_instance, solve_instance, to_json, verify_solution, Algorithm};

const INSTANCE: &str = r#"{
  "version": 1,
  "dimension": 2,
  "points": [[0, 0], ["1/2", 3], [-2, "7/3"], [4, -1], [1, 1]],
  "metric": {"polyhedral": [[2, 1], [-1, 3]]}
}"#;

fn main() {
    let inst = parse_instance(INSTANCE).expect("valid instance");
    for alg in [Algorithm::Auto, Algorithm::Tunnel, Algorithm::Oracle] {
        let sol = solve_instance(&inst, alg).expect("solvable");
        let report = verify_solution(&inst, &sol).expect("checkable");
        println!("{:>6}: length {} verified {}", sol.algorithm, sol.length, report.ok);
        if alg == Algorithm::Auto {
            print!("{}", to_json(&sol));
        }
    }
}
