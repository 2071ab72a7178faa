//! Shows the slack penalty for `a·x ≤ b`: the closed-form best slack value,
//! the ¼ feasibility test and the product gadget.

use gridpart::penalty::{lower_bound, min_slack_value, product_penalty_value, SlackEncoding};

fn main() -> gridpart::Result<()> {
    let a = [0.7, -0.4, 0.9];
    let b = 0.8;
    for bits in [2, 4, 8] {
        let enc = SlackEncoding::new(bits, lower_bound(&a), b)?;
        println!("K = {bits}, scale = {:.4}", enc.scale());
        for mask in 0..8u32 {
            let lhs: f64 = (0..3).filter(|i| mask >> i & 1 == 1).map(|i| a[i]).sum();
            let (z, p) = min_slack_value(&enc, lhs);
            let verdict = if p <= 0.25 { "feasible" } else { "violated" };
            println!("  a.x = {lhs:>5.2}  slack {z:>3}  min P = {p:>9.4}  {verdict}");
        }
    }
    println!("product gadget M(xi, xj, z):");
    for (xi, xj, z) in [(false, false, false), (true, true, true), (true, true, false), (false, true, true)] {
        println!("  {} {} {} -> {}", xi as u8, xj as u8, z as u8, product_penalty_value(xi, xj, z));
    }
    Ok(())
}
