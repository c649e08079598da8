//! Tour of the quantization operators: log-scale relative precision,
//! the tight sector bound, idempotence, and the uniform dead band.
//!
//! ```bash
//! cargo run --example quantizer_tour
//! ```

use qgradtrack::QuantizerSpec;

fn main() -> qgradtrack::Result<()> {
    let rho = 0.25;
    let log = QuantizerSpec::log_scale(rho)?;
    let uniform = QuantizerSpec::uniform(rho)?;

    println!("quantization level rho = {rho}\n");
    println!("{:>12} {:>14} {:>14} {:>10}", "z", "log_scale", "uniform", "q(z)/z");
    for z in [1e-6, 0.01, 0.3, 1.0, 1.349, 2.0, 100.0, 1e6] {
        let ql = log.quantize(z)?;
        let qu = uniform.quantize(z)?;
        println!("{z:>12.4e} {ql:>14.6e} {qu:>14.6e} {:>10.6}", ql / z);
    }

    let (lo, hi) = log.sector_ratio_bounds()?;
    println!("\ntight sector bound: {lo:.6} <= q(z)/z <= {hi:.6}");

    // Idempotence: re-quantizing is a no-op.
    let z = 0.7318;
    let once = log.quantize(z)?;
    let twice = log.quantize(once)?;
    println!("idempotence: q({z}) = {once:.12}, q(q({z})) = {twice:.12}");

    // The uniform dead band swallows anything below rho/2; log-scale
    // keeps relative resolution all the way down.
    println!("\nnear zero (dead band comparison):");
    for z in [0.2, 0.1, 0.05, 1e-3, 1e-9] {
        println!(
            "  z = {z:>8.1e}: uniform -> {:>8.1e}, log-scale -> {:>12.6e}",
            uniform.quantize(z)?,
            log.quantize(z)?
        );
    }
    Ok(())
}
