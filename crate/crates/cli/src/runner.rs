//! Per-flux-point fan-out with a bounded worker pool.
//!
//! Each point is computed independently (minimum tracking re-anchors from
//! zero flux internally), so results are identical for any worker count;
//! rows come back ordered by input position regardless of completion
//! order.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

type PointResult<T> = (f64, Result<T, String>);

/// Default worker count: `SNAILAMP_JOBS` or 1.
pub fn default_jobs() -> usize {
    std::env::var("SNAILAMP_JOBS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&n| n >= 1)
        .unwrap_or(1)
}

/// Apply `work` to every flux point using up to `jobs` workers.
pub fn run_points<T, F>(fluxes: &[f64], jobs: usize, work: F) -> Vec<PointResult<T>>
where
    T: Send,
    F: Fn(f64) -> Result<T, String> + Sync,
{
    let jobs = jobs.max(1).min(fluxes.len().max(1));
    let results: Vec<Mutex<Option<PointResult<T>>>> =
        fluxes.iter().map(|_| Mutex::new(None)).collect();
    let cursor = AtomicUsize::new(0);

    std::thread::scope(|scope| {
        for _ in 0..jobs {
            scope.spawn(|| loop {
                let idx = cursor.fetch_add(1, Ordering::Relaxed);
                if idx >= fluxes.len() {
                    break;
                }
                let flux = fluxes[idx];
                let outcome = work(flux);
                *results[idx].lock().expect("result slot") = Some((flux, outcome));
            });
        }
    });

    results
        .into_iter()
        .map(|slot| {
            slot.into_inner()
                .expect("slot lock")
                .expect("every slot filled")
        })
        .collect()
}
