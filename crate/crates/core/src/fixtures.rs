//! Built-in datasets.

use alloc::string::String;
use alloc::vec::Vec;

use crate::model::{CovariatePattern, Dataset, ExposurePattern, StratumRecord};

/// Name under which [`nguyen2008`] is exposed to the CLI.
pub const NGUYEN2008: &str = "nguyen2008";

/// `(x1, x2, x3, z1, z2, successes, totals)` for every populated cell.
///
/// H. pylori eradication among 109 children on one triple-therapy arm:
/// x1 = younger than 9, x2 = female, x3 = not metronidazole resistant,
/// z1 = high dose, z2 = rural. Empty cells are not listed.
const NGUYEN2008_CELLS: [[u8; 7]; 30] = [
    [0, 0, 0, 0, 0, 3, 4],
    [0, 0, 0, 0, 1, 6, 7],
    [0, 0, 0, 1, 0, 0, 3],
    [0, 0, 0, 1, 1, 8, 8],
    [0, 0, 1, 0, 0, 3, 4],
    [0, 0, 1, 1, 0, 1, 1],
    [0, 0, 1, 1, 1, 1, 1],
    [0, 1, 0, 0, 0, 1, 5],
    [0, 1, 0, 0, 1, 3, 4],
    [0, 1, 0, 1, 0, 2, 3],
    [0, 1, 0, 1, 1, 3, 3],
    [0, 1, 1, 0, 0, 2, 4],
    [0, 1, 1, 1, 0, 1, 2],
    [0, 1, 1, 1, 1, 1, 1],
    [1, 0, 0, 0, 0, 1, 2],
    [1, 0, 0, 0, 1, 1, 1],
    [1, 0, 0, 1, 0, 3, 8],
    [1, 0, 0, 1, 1, 6, 6],
    [1, 0, 1, 0, 0, 3, 3],
    [1, 0, 1, 0, 1, 0, 1],
    [1, 0, 1, 1, 0, 1, 1],
    [1, 0, 1, 1, 1, 3, 3],
    [1, 1, 0, 0, 0, 2, 7],
    [1, 1, 0, 0, 1, 0, 2],
    [1, 1, 0, 1, 0, 5, 8],
    [1, 1, 0, 1, 1, 0, 2],
    [1, 1, 1, 0, 0, 1, 2],
    [1, 1, 1, 0, 1, 0, 3],
    [1, 1, 1, 1, 0, 6, 9],
    [1, 1, 1, 1, 1, 1, 1],
];

/// The paediatric H. pylori eradication counts (30 cells, 109 subjects).
pub fn nguyen2008() -> Dataset {
    let records: Vec<StratumRecord> = NGUYEN2008_CELLS
        .iter()
        .map(|c| {
            StratumRecord::new(
                CovariatePattern::from_bits(&c[..3]).expect("fixture bits are binary"),
                ExposurePattern::new(c[3] == 1, c[4] == 1),
                u64::from(c[5]),
                u64::from(c[6]),
            )
            .expect("fixture counts are valid")
        })
        .collect();
    let names = ["x1", "x2", "x3"].map(String::from).to_vec();
    Dataset::new(names, records).expect("fixture keys are unique")
}
