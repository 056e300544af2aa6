//! Driving the batch front end from code: the same JSON document and dotted
//! overrides the `moyal` binary accepts, here solving an anharmonic well.
//!
//! `cargo run --release --example run_config`

use serde_json::json;

use moyal::cli::{run, RunConfig};

fn main() -> moyal::Result<()> {
    let doc = json!({
        "grid": {"n_q": 64, "n_p": 64, "q_min": -6.0, "q_max": 6.0, "p_min": -6.0, "p_max": 6.0},
        "observable": {"kind": "polynomial", "terms": [
            {"p": 2, "c": 0.5},
            {"q": 2, "c": 0.5},
            {"q": 4, "c": 0.1}
        ]},
        "output": {"directory": "target/run_config"}
    });
    let overrides = ["command.solve.n_states=3".to_string()];
    let cfg = RunConfig::resolve(Some(doc), &overrides, "solve")?;
    let manifest = run(&cfg, 1)?;
    println!("{}", serde_json::to_string_pretty(&manifest["summary"])?);
    Ok(())
}
