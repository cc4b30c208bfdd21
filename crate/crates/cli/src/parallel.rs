//! Bounded worker pool for corpus-level commands. Results keep item order,
//! so output files do not depend on the worker count.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use crate::CliError;

/// Apply `f` to every item on up to `jobs` threads. The result vector is in
/// item order; on failure the error of the earliest-index item wins, which
/// keeps error reporting independent of scheduling.
pub fn parallel_map<T, R, F>(items: &[T], jobs: usize, f: F) -> Result<Vec<R>, CliError>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> Result<R, CliError> + Sync,
{
    let call = |item: &T| -> Result<R, CliError> {
        catch_unwind(AssertUnwindSafe(|| f(item))).unwrap_or_else(|payload| {
            let message = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "worker panicked".into());
            Err(CliError::Internal(message))
        })
    };

    let workers = jobs.max(1).min(items.len());
    if workers <= 1 {
        return items.iter().map(call).collect();
    }

    let cursor = AtomicUsize::new(0);
    let slots: Vec<Mutex<Option<Result<R, CliError>>>> =
        items.iter().map(|_| Mutex::new(None)).collect();
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = cursor.fetch_add(1, Ordering::Relaxed);
                if i >= items.len() {
                    break;
                }
                let result = call(&items[i]);
                *slots[i].lock().unwrap() = Some(result);
            });
        }
    });

    let mut out = Vec::with_capacity(items.len());
    for slot in slots {
        let result = slot
            .into_inner()
            .map_err(|_| CliError::Internal("worker state poisoned".into()))?
            .ok_or_else(|| CliError::Internal("worker skipped an item".into()))?;
        out.push(result?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn results_keep_item_order_at_any_worker_count() {
        let items: Vec<usize> = (0..57).collect();
        for jobs in [1, 2, 8] {
            let out = parallel_map(&items, jobs, |&i| Ok(i * i)).unwrap();
            let expected: Vec<usize> = items.iter().map(|i| i * i).collect();
            assert_eq!(out, expected, "jobs={jobs}");
        }
    }

    #[test]
    fn earliest_item_error_wins() {
        let items: Vec<usize> = (0..40).collect();
        let run = |jobs| {
            parallel_map(&items, jobs, |&i| {
                if i % 7 == 3 {
                    Err(CliError::usage(format!("item {i}")))
                } else {
                    Ok(i)
                }
            })
            .unwrap_err()
        };
        for jobs in [1, 4] {
            match run(jobs) {
                CliError::Usage(m) => assert_eq!(m, "item 3", "jobs={jobs}"),
                other => panic!("unexpected error {other:?}"),
            }
        }
    }

    #[test]
    fn worker_panic_becomes_internal_error() {
        let items = vec![1, 2, 3];
        let err = parallel_map(&items, 2, |&i| {
            if i == 2 {
                panic!("boom {i}");
            }
            Ok(i)
        })
        .unwrap_err();
        assert_eq!(err.exit_code(), 5);
        match err {
            CliError::Internal(m) => assert!(m.contains("boom"), "{m}"),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn empty_input_yields_empty_output() {
        let items: Vec<u32> = Vec::new();
        let out = parallel_map(&items, 4, |&i| Ok(i)).unwrap();
        assert!(out.is_empty());
    }
}
