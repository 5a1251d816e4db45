//! Exact same-color probabilities over the 72-point sample space.
//!
//! cargo run --example exact_oracle

use eprlab::tables::{exact_statistics, SettingPairDistribution, SourceDistribution};

fn main() {
    let pairs = SettingPairDistribution::uniform();
    for (name, source) in [
        ("uniform over all eight sets", SourceDistribution::uniform()),
        ("uniform over the six mixed sets", SourceDistribution::uniform_mixed()),
    ] {
        let stats = exact_statistics(&source, &pairs);
        println!("{name}: P(same color) = {}", stats.same_color_prob);
    }

    // The bound is attained only when the source avoids RRR and GGG.
    let lopsided = SourceDistribution::from_weights([1, 2, 3, 4, 5, 6, 7, 8]).unwrap();
    let stats = exact_statistics(&lopsided, &pairs);
    println!("weights 1..8: P(same color) = {}", stats.same_color_prob);
    for (i, row) in stats.pair_expectations.iter().enumerate() {
        let cells: Vec<String> = row.iter().map(ToString::to_string).collect();
        println!("  E[A_{} B_j] = {}", ["a", "b", "c"][i], cells.join(", "));
    }
}
