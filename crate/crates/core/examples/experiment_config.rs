//! Declarative experiments: parse a TOML config, override a key, run it and
//! look at the files it writes.

use herdlab::config::ExperimentConfig;
use herdlab::runner::run;

const CONFIG: &str = r#"
seed = 3

[distribution]
alpha = 1.0

[disclosure]
kind = "binary_split"
lo = 0.3
hi = 0.7

[engine]
kind = "exact"
horizon = 500
"#;

fn main() -> herdlab::Result<()> {
    let cfg = ExperimentConfig::from_toml_str(CONFIG)?.with_override("engine.horizon", "300")?;
    println!("{}", cfg.to_toml_string()?);

    let dir = std::env::temp_dir().join("herdlab-config-example");
    let summary = run(&cfg, &dir)?;
    println!("{summary:#?}");
    for name in ["metrics.csv", "config.json", "summary.json"] {
        println!("wrote {}", dir.join(name).display());
    }

    match ExperimentConfig::from_toml_str(&CONFIG.replace("lo = 0.3", "lo = 0.8")) {
        Err(e) => println!("rejected: {e}"),
        Ok(_) => unreachable!("lo above hi must not validate"),
    }
    Ok(())
}
