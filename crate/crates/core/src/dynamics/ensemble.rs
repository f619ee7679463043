//! Monte Carlo ensembles over noise realizations.

use rayon::prelude::*;

use super::noise::NoiseStream;
use super::protocol::{run_protocol_seeded, ProtocolResult, ProtocolSpec};
use crate::envelope::{Envelope, Grid};
use crate::{DeviceParams, Result};

/// Released envelopes of `n_runs` independent realizations, in run order.
/// Run `k` uses noise stream `k`, so results do not depend on the thread count.
pub fn monte_carlo(spec: &ProtocolSpec, params: &DeviceParams, n_runs: usize) -> Result<Vec<Envelope>> {
    monte_carlo_map(spec, params, n_runs, |_, r| r.converted())
}

/// Runs the protocol `n_runs` times in parallel and maps each result.
pub fn monte_carlo_map<T, F>(spec: &ProtocolSpec, params: &DeviceParams, n_runs: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64, ProtocolResult) -> T + Sync,
{
    (0..n_runs as u64)
        .into_par_iter()
        .map(|run| run_protocol_seeded(spec, params, run).map(|r| f(run, r)))
        .collect()
}

const VACUUM_STREAM_SALT: u64 = 0x5eed_0f_7ac0;

/// Vacuum-only traces (half a quantum of white noise) on `grid`.
pub fn vacuum_ensemble(grid: Grid, n_runs: usize, seed: u64) -> Vec<Envelope> {
    (0..n_runs as u64)
        .into_par_iter()
        .map(|run| {
            let mut s = NoiseStream::new(seed ^ VACUUM_STREAM_SALT, run);
            Envelope::new(grid.t0, grid.dt, s.white(grid.n, grid.dt, 0.5))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::NoiseSpec;

    #[test]
    fn ensemble_is_order_stable() {
        let p = DeviceParams::paper_table();
        let design = super::super::protocol::ConversionDesign {
            capture_duration: 5e-6,
            store_duration: 1e-6,
            release_duration: 5e-6,
            release_center: 2.5e-6,
            ..Default::default()
        };
        let spec = design.build(NoiseSpec::thermal(&p, 11), super::super::ModelKind::Reduced).unwrap();
        let a = monte_carlo(&spec, &p, 6).unwrap();
        let b = monte_carlo(&spec, &p, 6).unwrap();
        assert_eq!(a, b);
        assert_ne!(a[0], a[1]);
    }

    #[test]
    fn vacuum_level() {
        let grid = Grid::new(0.0, 1e-8, 2000).unwrap();
        let runs = vacuum_ensemble(grid, 20, 3);
        let mean: f64 = runs.iter().flat_map(|e| e.values.iter()).map(|v| v.norm_sqr()).sum::<f64>()
            / (20.0 * 2000.0);
        // E|v|² = ½/dt
        assert!((mean * grid.dt - 0.5).abs() < 0.02);
    }
}
