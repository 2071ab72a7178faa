//! Builds a small QUBO by hand, prints it in text form and evaluates every
//! assignment.

use gridpart::qubo::{LinearExpr, QuboBuilder, Var};

fn main() -> gridpart::Result<()> {
    let mut b = QuboBuilder::new();
    let x: Vec<usize> = (0..3).map(|i| b.add_variable(Var::Bit(i))).collect();
    b.add_term(&[Var::Bit(0), Var::Bit(1)], -2.0)?;
    b.add_term(&[Var::Bit(2)], 1.5)?;

    // (x0 + x1 + x2 − 1)² pushes towards exactly one set bit.
    let mut one = LinearExpr::constant(-1.0);
    for &i in &x {
        one.push(i, 1.0);
    }
    b.add_squared(&one, 3.0);

    let (q, registry) = b.finish();
    q.write_text(std::io::stdout()).expect("stdout");
    println!();
    for mask in 0..8u32 {
        let bits: Vec<bool> = (0..3).map(|i| mask >> i & 1 == 1).collect();
        let named: Vec<String> = registry.iter().map(|(i, v)| format!("{v}={}", bits[i] as u8)).collect();
        println!("{:<24} energy {:>5}", named.join(" "), q.energy(&bits));
    }
    Ok(())
}
