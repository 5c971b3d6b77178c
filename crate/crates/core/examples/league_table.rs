//! Integer and fractional ranks under different tie rules.
//!
//! ```text
//! cargo run --example league_table
//! ```

use rankinfer::ranking::{frank, irank, irank_against, TieRule};
use rankinfer::table::TableData;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let theta = [1.0, 2.0, 3.0, 3.0, 4.0, 5.0, 6.0, 6.0, 6.0, 6.0];
    println!("theta          {theta:?}");
    for omega in [0.0, 0.5, 1.0] {
        let ranks = irank(&theta, TieRule::increasing(omega)?)?;
        println!("irank w={omega:<4}  {:?}", ranks.values);
    }
    let fr = frank(&theta, TieRule::increasing(0.5)?)?;
    println!("frank w=0.5    {:?}", fr.values);

    let pisa = TableData::from_csv_str(include_str!("../tests/fixtures/pisa_head.csv"))?;
    let names = pisa.labels("jurisdiction")?;
    let math = pisa.numeric("math_score")?;
    let ranks = irank(&math, TieRule::league_table())?;
    let mut order: Vec<usize> = (0..math.len()).collect();
    order.sort_by(|&a, &b| ranks.values[a].total_cmp(&ranks.values[b]));
    println!("\nPISA 2018 mathematics, rank 1 = highest mean score");
    for j in order {
        println!("{:>3}  {:<10} {:>9.3}", ranks.values[j], names[j], math[j]);
    }

    // where would a hypothetical 500-point jurisdiction fall?
    let probe = irank_against(&[500.0], &math, TieRule::league_table())?;
    println!("\na score of 500 would rank {} of {}", probe.values[0], math.len() + 1);
    Ok(())
}
