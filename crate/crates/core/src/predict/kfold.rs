use std::ops::Range;

use chrono::NaiveDateTime;

use crate::error::{Error, Result};

pub const DEFAULT_FOLDS: usize = 5;

/// Splits `0..n` into `k` contiguous blocks; the first `n % k` blocks hold one
/// extra row.
pub fn temporal_kfold(n: usize, k: usize) -> Result<Vec<Range<usize>>> {
    if k == 0 || n < k {
        return Err(Error::InvalidParameter(format!("cannot split {n} rows into {k} folds")));
    }
    let (base, extra) = (n / k, n % k);
    let mut start = 0;
    Ok((0..k)
        .map(|i| {
            let len = base + usize::from(i < extra);
            let r = start..start + len;
            start += len;
            r
        })
        .collect())
}

/// Sorts row indices by timestamp (stable) and splits them into `k` blocks.
pub fn temporal_kfold_by_time(times: &[NaiveDateTime], k: usize) -> Result<Vec<Vec<usize>>> {
    let mut order: Vec<usize> = (0..times.len()).collect();
    order.sort_by_key(|&i| times[i]);
    Ok(temporal_kfold(times.len(), k)?
        .into_iter()
        .map(|r| order[r].to_vec())
        .collect())
}
