//! Fixtures shared by the benchmarks.

use atp_core::{Instance, RequestClass, SizeDistribution};

/// Three classes over `m` resources with mixed size laws and distinct
/// reward orders, horizon `horizon`, capacity 1 per resource per 100 periods.
pub fn mixed_instance(m: usize, horizon: usize) -> Instance {
    let laws = [
        SizeDistribution::uniform(0.0, 1.0).unwrap(),
        SizeDistribution::exponential(2.0).unwrap(),
        SizeDistribution::truncated_normal(0.4, 0.3, 1.5).unwrap(),
    ];
    let classes = laws
        .into_iter()
        .enumerate()
        .map(|(i, d)| {
            let rewards = (0..m).map(|j| 1.0 + ((i + j) % m) as f64).collect();
            RequestClass::new(0.3, rewards, vec![1.0; m], d).unwrap()
        })
        .collect();
    let cap = horizon as f64 / 100.0;
    Instance::new(vec![cap; m], classes, horizon).unwrap()
}
