//! Prints the instruction-set product table with its row sums.
//!
//! cargo run --example product_table

use eprlab::tables::{product_table, row_average, row_sum, InstructionSet};

fn main() {
    let table = product_table();
    print!("{}", table.to_csv());
    println!();
    for set in InstructionSet::ALL {
        println!("{set}: row sum {:>2}, row average {}", row_sum(set), row_average(set));
    }
}
