//! Simulate one dataset, reconstruct it and print the edge diff.
//!
//! cargo run -p pathinf-core --example reconstruct -- [edges] [p_miss] [seed]

use pathinf::evaluate::diff;
use pathinf::pipeline::{run, PipelineConfig};
use pathinf::simulate::{generate, SimulationConfig};
use pathinf::summarize::MissingnessPrior;

fn main() -> pathinf::Result<()> {
    let mut args = std::env::args().skip(1);
    let n_edges = args.next().map_or(15, |s| s.parse().expect("edges"));
    let p = args.next().map_or(0.1, |s| s.parse().expect("p_miss"));
    let seed = args.next().map_or(0, |s| s.parse().expect("seed"));

    let cfg = SimulationConfig {
        n_edges,
        p_miss_pos: p,
        seed,
        ..Default::default()
    };
    let data = generate(&cfg)?;
    let prior = MissingnessPrior::new(if p > 0.0 { p } else { 0.1 })?;
    let out = run(&data.observations, &PipelineConfig::new(prior))?;
    println!(
        "{} candidates, {} retained states, {} solver iterations",
        out.summary.candidates.len(),
        out.states.len(),
        out.summary.iterations
    );
    let d = diff(&out.graph, &data.truth)?;
    println!(
        "true {} inferred {} recovered {} fp {:.3} fn {:.3}",
        d.true_edges, d.inferred_edges, d.recovered, d.fp_rate, d.fn_rate
    );
    Ok(())
}
