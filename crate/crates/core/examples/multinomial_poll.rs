//! Exact confidence sets for the ranks of category probabilities from counts.
//!
//! ```text
//! cargo run --example multinomial_poll
//! ```

use rankinfer::multinomcs::{cs_ranks_multinomial, Correction, MultinomialCounts, PairwisePValueTable};
use rankinfer::rankcs::CsMode;
use rankinfer::table::TableData;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let poll = TableData::from_csv_str(include_str!("../tests/fixtures/poll.csv"))?;
    let names = poll.labels("party")?;
    let data = MultinomialCounts::new(poll.counts("votes")?)?;
    println!("{} respondents", data.total());

    let pv = PairwisePValueTable::from_counts(&data);
    println!("\npairwise p-values, H0: p_row <= p_col");
    for k in 0..data.len() {
        let row: Vec<String> = (0..data.len())
            .map(|l| pv.get(k, l).map_or("     -".into(), |p| format!("{p:6.3}")))
            .collect();
        println!("  {:<2} {}", names[k], row.join(" "));
    }

    for (mode, method) in [
        (CsMode::Marginal, Correction::Holm),
        (CsMode::Simultaneous, Correction::Holm),
        (CsMode::Simultaneous, Correction::Bonferroni),
    ] {
        let cs = cs_ranks_multinomial(&data, 0.95, mode, method, None)?;
        println!("\n{mode:?}, {method:?}");
        for iv in &cs.intervals {
            println!(
                "  {:<2} {:>4} votes  rank {:>3}  [{}, {}]",
                names[iv.index],
                data.counts()[iv.index],
                iv.rank,
                iv.lower,
                iv.upper
            );
        }
    }
    Ok(())
}
