//! Drives the command layer from an in-memory configuration, as the binary
//! does from a file.
//!
//! cargo run --release --example run_config

use fermion_dynamics::cli::{parse_config, run, Command, Overrides};

const CONFIG: &str = r#"{
    "space": {"n": 6, "interval": [0, 3], "weights": "midpoint"},
    "kernel": {"type": "shrunk_sine", "params": {"alpha": 0.6, "density": 1.0}},
    "family": {"kind": "glauber", "s": 0.5},
    "run": {"T": 500, "replicas": 2, "seed": 1, "draws": 2000}
}"#;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let loaded = parse_config(CONFIG)?;
    println!("config digest {}", loaded.digest);
    let out = std::env::temp_dir().join("fermion-dynamics-example");
    for command in Command::ALL {
        let manifest = run(command, &loaded, &Overrides::default(), &out)?;
        let names: Vec<&str> = manifest.outputs.iter().map(|o| o.name.as_str()).collect();
        println!("{command}: {}", names.join(", "));
    }
    println!("{}", std::fs::read_to_string(out.join("verify.json"))?);
    Ok(())
}
