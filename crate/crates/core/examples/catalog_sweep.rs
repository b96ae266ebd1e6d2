//! Win rate of every scripted policy on every catalog task.
//!
//! `cargo run --release -p ctc-core --example catalog_sweep [episodes]`

use std::sync::Arc;
use std::time::Instant;

use ctc_core::eval::run_test_batch;
use ctc_core::{classify_variant, Catalog, EngineConfig, PolicyKind};

fn main() -> ctc_core::Result<()> {
    let episodes = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(100);
    let config = Arc::new(EngineConfig::default());
    println!(
        "{:<12} {:>4} {:>8} {:>8} {:>8}",
        "task", "var", "oracle", "no_dol", "random"
    );
    for spec in Catalog::builtin().iter() {
        let spec = Arc::new(spec.clone());
        let start = Instant::now();
        let rates: Vec<f64> = PolicyKind::ALL
            .iter()
            .map(|&p| run_test_batch(&spec, &config, p, 0, episodes))
            .collect::<Result<_, _>>()?;
        println!(
            "{:<12} {:>4} {:>8.2} {:>8.2} {:>8.2}   ({:.2?})",
            spec.name,
            classify_variant(&spec).to_string(),
            rates[0],
            rates[1],
            rates[2],
            start.elapsed()
        );
    }
    Ok(())
}
