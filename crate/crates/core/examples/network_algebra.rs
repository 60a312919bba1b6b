//! Matrices derived from a delayed spanning tree: Laplacian, row-stochastic
//! form, the contraction seen by the protocol and cumulative delays.

use delaysync::numerics::{spectral_radius, RealMatrix};
use delaysync::presets::{case_topology, Case};
use delaysync::topology::{derive, validate_and_reorder};

fn show(name: &str, m: &RealMatrix) {
    println!("{}:", name);
    for row in m.to_rows() {
        let cells: Vec<String> = row.iter().map(|v| format!("{:6.3}", v)).collect();
        println!("  [{}]", cells.join(" "));
    }
}

fn main() -> delaysync::Result<()> {
    let case = std::env::args()
        .nth(1)
        .and_then(|a| a.parse::<usize>().ok())
        .unwrap_or(5);
    let case = match case {
        3 => Case::Three,
        10 => Case::Ten,
        _ => Case::Five,
    };
    let tree = validate_and_reorder(&case_topology(case))?;
    let d = derive(&tree)?;
    println!("{} agents, canonical order {:?}", d.agents(), tree.order.iter().map(|i| i + 1).collect::<Vec<_>>());
    show("laplacian", &d.laplacian);
    show("row-stochastic", &d.row_stochastic);
    show("contraction", &d.contraction);
    println!("contraction spectral radius: {:.4}", spectral_radius(&d.contraction)?);
    for (i, k) in d.cumulative_delays.iter().enumerate() {
        println!("agent {} lags the exosystem by {} steps", tree.order[i] + 1, k);
    }
    Ok(())
}
