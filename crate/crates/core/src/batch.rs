//! Independent runs in bulk.
//!
//! With the `parallel` feature (on by default) work is spread over the rayon
//! thread pool; without it everything runs on the calling thread. Results
//! come back in input order either way, and each run owns its seeded RNG, so
//! output does not depend on the mode.

use crate::harness::{run_scenario, RunOutput, ScenarioConfig, ScenarioError};

/// Which implementation [`map_indexed`] uses.
pub const PARALLEL: bool = cfg!(feature = "parallel");

/// Applies `f` to `0..n`, preserving order.
pub fn map_indexed<R, F>(n: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..n).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).collect()
    }
}

/// Sequential reference for [`map_indexed`], available in every build.
pub fn map_indexed_sequential<R, F>(n: usize, f: F) -> Vec<R>
where
    F: Fn(usize) -> R,
{
    (0..n).map(f).collect()
}

pub fn run_batch(configs: &[ScenarioConfig]) -> Vec<Result<RunOutput, ScenarioError>> {
    map_indexed(configs.len(), |i| run_scenario(&configs[i]))
}

pub fn run_batch_sequential(configs: &[ScenarioConfig]) -> Vec<Result<RunOutput, ScenarioError>> {
    map_indexed_sequential(configs.len(), |i| run_scenario(&configs[i]))
}

/// One config per seed in `seeds`, otherwise identical to `base`.
pub fn seed_sweep(base: &ScenarioConfig, seeds: impl IntoIterator<Item = u64>) -> Vec<ScenarioConfig> {
    seeds
        .into_iter()
        .map(|seed| ScenarioConfig { seed, ..base.clone() })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::{trace_to_string, ClusterConfig, TrafficItem};

    #[test]
    fn modes_agree() {
        let mut base = ScenarioConfig::new(0, 60, vec![ClusterConfig::new(1, 3)]);
        base.traffic = vec![TrafficItem { time: 10, src: 1000, dst: 1002, payload_len: Some(16), payload_hex: None }];
        let configs = seed_sweep(&base, 0..8);
        let traces = |rs: Vec<Result<RunOutput, ScenarioError>>| {
            rs.into_iter().map(|r| trace_to_string(&r.unwrap().trace)).collect::<Vec<_>>()
        };
        assert_eq!(traces(run_batch(&configs)), traces(run_batch_sequential(&configs)));
    }

    #[test]
    fn order_preserved() {
        assert_eq!(map_indexed(100, |i| i * 2), (0..100).map(|i| i * 2).collect::<Vec<_>>());
    }
}
