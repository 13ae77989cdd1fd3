//! Fixtures shared by the benchmarks.

use prhl_core::dist::{ratio, SubDist};

/// A pair over `0..n` where the first puts more weight on high values, so
/// that a `>=` lifting exists and the flow has to route across the range.
pub fn skewed_pair(n: i64) -> (SubDist<i64>, SubDist<i64>) {
    let total = n * (n + 1) / 2;
    let up = SubDist::from_weights((0..n).map(|i| (i, ratio(i + 1, total))))
        .expect("weights sum to one");
    let down = SubDist::from_weights((0..n).map(|i| (i, ratio(n - i, total))))
        .expect("weights sum to one");
    (up, down)
}

#[cfg(test)]
mod tests {
    use super::*;
    use prhl_core::dist::stochastically_dominates;

    #[test]
    fn skewed_pair_dominates() {
        let (up, down) = skewed_pair(6);
        assert!(up.is_lossless() && down.is_lossless());
        assert!(stochastically_dominates(&up, &down).unwrap());
    }
}
