//! Independent sampler workers racing for the first accepted term.
//!
//! Worker `i` runs an ordinary [`Sampler`] seeded with
//! [`worker_seed`]`(base, i)` and its own `max_steps` budget. The first
//! worker to produce a term claims the result slot and raises a shared stop
//! flag; the others notice it before their next attempt.

use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::OnceLock;
use std::thread;
use std::time::{Duration, Instant};

use crate::sampler::{SampleError, SampleResult, Sampler, SamplerConfig};

const WORKER_STACK: usize = 32 << 20;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParallelResult {
    /// `seed` is the winning worker's own seed
    pub result: SampleResult,
    pub winner: usize,
    pub workers: usize,
    pub elapsed: Duration,
    /// attempts summed over all workers
    pub attempts_total: u64,
}

/// SplitMix64 finaliser over `base` and the worker index.
pub fn worker_seed(base: u64, index: usize) -> u64 {
    let mut z = base.wrapping_add((index as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// `0` means one worker per available hardware thread.
pub fn resolve_workers(requested: usize) -> usize {
    if requested > 0 {
        requested
    } else {
        thread::available_parallelism().map_or(1, |n| n.get())
    }
}

/// Race `workers` samplers (see [`resolve_workers`]). Fails with
/// [`SampleError::Exhausted`] only once every worker has spent its budget.
pub fn sample_parallel(
    config: &SamplerConfig,
    workers: usize,
) -> Result<ParallelResult, SampleError> {
    config.validate()?;
    let workers = resolve_workers(workers);
    let start = Instant::now();
    let stop = AtomicBool::new(false);
    let slot: OnceLock<(usize, SampleResult)> = OnceLock::new();

    let attempts_total: u64 = thread::scope(|s| {
        let handles: Vec<_> = (0..workers)
            .map(|i| {
                let mut cfg = config.clone();
                cfg.seed = worker_seed(config.seed, i);
                let (stop, slot) = (&stop, &slot);
                thread::Builder::new()
                    .name(format!("sampler-{i}"))
                    .stack_size(WORKER_STACK)
                    .spawn_scoped(s, move || {
                        let mut sampler = Sampler::new(cfg).expect("config validated");
                        match sampler.sample_while(|| !stop.load(Ordering::Relaxed)) {
                            Ok(r) => {
                                let steps = r.steps;
                                if slot.set((i, r)).is_ok() {
                                    stop.store(true, Ordering::Relaxed);
                                }
                                steps
                            }
                            Err(SampleError::Exhausted { attempts }) => attempts,
                            Err(e) => unreachable!("{e}"),
                        }
                    })
                    .expect("spawn sampler worker")
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("sampler worker panicked"))
            .sum()
    });

    let elapsed = start.elapsed();
    match slot.into_inner() {
        Some((winner, result)) => Ok(ParallelResult {
            result,
            winner,
            workers,
            elapsed,
            attempts_total,
        }),
        None => Err(SampleError::Exhausted {
            attempts: attempts_total,
        }),
    }
}
