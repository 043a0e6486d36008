//! Work-efficient inclusive scan over a closed associative operator.
//!
//! The scan is the classic two-phase tree: an up-sweep that builds partial
//! products over aligned blocks of size 2, 4, 8, ..., followed by a
//! down-sweep that fills in the remaining prefixes. Each level touches
//! disjoint positions, so the combines of a level can run concurrently.
//!
//! Elements compose in "left action" order: `combine(earlier, later)` is the
//! element that applies `earlier` first and `later` second. For matrices
//! acting on column vectors this is `later * earlier`, and output `k` is
//! `e_k * ... * e_1 * e_0`.

use rayon::prelude::*;

use crate::error::{Error, Result};

/// A closed binary associative operator.
pub trait ScanOperator<E>: Sync {
    /// The element equivalent to applying `earlier`, then `later`.
    fn combine(&self, earlier: &E, later: &E) -> E;

    /// Neutral element, if the operator has one that can be built without
    /// looking at the data.
    fn identity(&self) -> Option<E> {
        None
    }
}

impl<E, F> ScanOperator<E> for F
where
    F: Fn(&E, &E) -> E + Sync,
{
    fn combine(&self, earlier: &E, later: &E) -> E {
        self(earlier, later)
    }
}

/// Shape of the sweep tree for a given length.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ScanPlan {
    pub length: usize,
    pub levels: u32,
    pub inclusive: bool,
}

impl ScanPlan {
    pub fn new(length: usize) -> Result<Self> {
        if length == 0 {
            return Err(Error::EmptyScan);
        }
        Ok(Self {
            length,
            levels: length.next_power_of_two().trailing_zeros(),
            inclusive: true,
        })
    }

    /// Length after padding to the next power of two.
    pub fn padded_length(&self) -> usize {
        self.length.next_power_of_two()
    }

    /// Upper bound on combine calls for an unpadded sweep.
    pub fn max_combines(&self) -> usize {
        2 * self.length
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Execution {
    /// Combines of one level are dispatched to the rayon pool.
    Parallel,
    /// Same tree, same combine order, single thread.
    Serial,
}

#[derive(Debug, Clone, Copy)]
pub struct ScanOptions {
    pub execution: Execution,
    /// Pad to a power of two with the operator identity (when it has one).
    pub pad: bool,
    /// Levels with fewer combines than this run serially.
    pub min_parallel: usize,
}

impl Default for ScanOptions {
    fn default() -> Self {
        Self {
            execution: Execution::Parallel,
            pad: true,
            min_parallel: 16,
        }
    }
}

/// Inclusive scan with default options (parallel levels, identity padding).
pub fn inclusive_scan<E, O>(elements: &[E], op: &O) -> Result<Vec<E>>
where
    E: Clone + Send + Sync,
    O: ScanOperator<E> + ?Sized,
{
    scan_with(elements, op, ScanOptions::default())
}

pub fn scan_with<E, O>(elements: &[E], op: &O, options: ScanOptions) -> Result<Vec<E>>
where
    E: Clone + Send + Sync,
    O: ScanOperator<E> + ?Sized,
{
    let plan = ScanPlan::new(elements.len())?;
    let mut buf = elements.to_vec();
    let padded = plan.padded_length();
    if options.pad && padded != plan.length {
        if let Some(id) = op.identity() {
            buf.resize(padded, id);
        }
    }
    sweep(&mut buf, op, options);
    buf.truncate(plan.length);
    Ok(buf)
}

/// Left-to-right reference scan.
pub fn sequential_scan<E, O>(elements: &[E], op: &O) -> Result<Vec<E>>
where
    E: Clone,
    O: ScanOperator<E> + ?Sized,
{
    let (first, rest) = elements.split_first().ok_or(Error::EmptyScan)?;
    let mut out = Vec::with_capacity(elements.len());
    out.push(first.clone());
    for e in rest {
        let next = op.combine(out.last().unwrap(), e);
        out.push(next);
    }
    Ok(out)
}

/// In-place up-sweep/down-sweep on any length; positions past the last full
/// block are simply skipped.
fn sweep<E, O>(a: &mut [E], op: &O, options: ScanOptions)
where
    E: Send + Sync,
    O: ScanOperator<E> + ?Sized,
{
    let n = a.len();
    if n < 2 {
        return;
    }

    let mut d = 1;
    let mut top = 1;
    while 2 * d <= n {
        let width = 2 * d;
        let count = n / width;
        level(a, width, count, options, |chunk| {
            let (lo, hi) = chunk.split_at_mut(d);
            hi[d - 1] = op.combine(&lo[d - 1], &hi[d - 1]);
        });
        top = d;
        d *= 2;
    }

    let mut d = top;
    while d >= 1 {
        let width = 2 * d;
        if n > d {
            let tail = &mut a[d..];
            let count = tail.len() / width;
            level(tail, width, count, options, |chunk| {
                let (lo, hi) = chunk.split_at_mut(d);
                hi[d - 1] = op.combine(&lo[d - 1], &hi[d - 1]);
            });
        }
        d /= 2;
    }
}

fn level<E, F>(a: &mut [E], width: usize, count: usize, options: ScanOptions, f: F)
where
    E: Send + Sync,
    F: Fn(&mut [E]) + Sync + Send,
{
    if count == 0 {
        return;
    }
    let full = &mut a[..count * width];
    match options.execution {
        Execution::Parallel if count >= options.min_parallel.max(2) => {
            full.par_chunks_mut(width).for_each(f)
        }
        _ => full.chunks_mut(width).for_each(f),
    }
}
