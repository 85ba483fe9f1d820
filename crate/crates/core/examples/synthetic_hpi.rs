//! Writes `data/synthetic_hpi.csv`: a synthetic stand-in for a two-regime
//! house-price / GDP-growth dataset (156 monthly observations). Not real data.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = std::env::args().nth(1).unwrap_or_else(|| "data/synthetic_hpi.csv".into());
    let mut rng = ChaCha8Rng::seed_from_u64(1990);
    let mut w = csv::Writer::from_path(&path)?;
    w.write_record(["x", "y"])?;
    for _ in 0..156 {
        let x: f64 = rng.gen_range(-0.2..1.6);
        let z: f64 = rng.sample(StandardNormal);
        let y = if rng.gen::<f64>() < 0.5469 {
            0.55 + 0.2 * x + 0.0066f64.sqrt() * z
        } else {
            0.15 + 0.25 * (2.0 * x).sin() + 0.046f64.sqrt() * z
        };
        w.write_record([format!("{x:.4}"), format!("{y:.4}")])?;
    }
    w.flush()?;
    Ok(())
}
