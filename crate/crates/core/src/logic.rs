//! AND, OR and NOT over mask columns.
//!
//! Each pair of encodings has its own kernel, and the output encoding is a
//! fixed function of the input encodings:
//!
//! | AND / OR  | Rle          | Plain         | Index           |
//! |-----------|--------------|---------------|-----------------|
//! | **Rle**   | Rle / Rle    | Plain or Index / Plain | Index / Composite |
//! | **Plain** |              | Plain / Plain | Index / Plain   |
//! | **Index** |              |               | Index / Index   |
//!
//! A composite operand makes the result composite. NOT yields Plain for Plain
//! input and runs for everything else.

use crate::column::{CompositeMask, IndexMask, MaskColumn, PlainMask, RleMask, Runs};
use crate::error::{Error, Result};
use crate::primitives::{
    complement_index, complement_rle, concat_sort_idx, idx_in_idx, merge_sorted_idx, plain_mask_to_rle,
    positions_in_runs, range_intersect, range_union, rle_mask_to_index, rle_mask_to_plain,
};

/// Below this covered fraction, a run mask meeting a Plain mask is expanded
/// to positions instead of bits.
pub const SPARSE_FRACTION: f64 = 0.05;

/// Index masks shorter than this are OR-ed by concatenating and sorting.
pub const CONCAT_SORT_LIMIT: usize = 4096;

fn check_sizes(a: &MaskColumn, b: &MaskColumn) -> Result<usize> {
    let (l, r) = (a.total_size(), b.total_size());
    if l != r {
        return Err(Error::SizeMismatch { left: l, right: r });
    }
    Ok(l)
}

fn is_sparse(m: &RleMask) -> bool {
    m.total_size > 0 && (m.runs.covered() as f64) < SPARSE_FRACTION * m.total_size as f64
}

pub fn and_mask(m1: &MaskColumn, m2: &MaskColumn) -> Result<MaskColumn> {
    use MaskColumn::*;
    let n = check_sizes(m1, m2)?;
    Ok(match (m1, m2) {
        (Composite(_), _) | (_, Composite(_)) => {
            Composite(composite_and(&as_composite(m1)?, &as_composite(m2)?))
        }
        (Plain(a), Plain(b)) => {
            MaskColumn::plain(a.bits.iter().zip(&b.bits).map(|(&x, &y)| x && y).collect())
        }
        (Rle(a), Rle(b)) => Rle(rle_and_rle(a, b)),
        (Rle(r), Plain(p)) | (Plain(p), Rle(r)) => {
            if is_sparse(r) {
                Index(plain_and_index(p, &rle_mask_to_index(r)?))
            } else {
                let bits = rle_mask_to_plain(r)?.bits;
                MaskColumn::plain(bits.iter().zip(&p.bits).map(|(&x, &y)| x && y).collect())
            }
        }
        (Rle(r), Index(i)) | (Index(i), Rle(r)) => Index(rle_and_index(r, i)),
        (Plain(p), Index(i)) | (Index(i), Plain(p)) => Index(plain_and_index(p, i)),
        (Index(a), Index(b)) => MaskColumn::index(idx_in_idx(&a.positions, &b.positions).positions, n),
    })
}

pub fn or_mask(m1: &MaskColumn, m2: &MaskColumn) -> Result<MaskColumn> {
    use MaskColumn::*;
    let n = check_sizes(m1, m2)?;
    Ok(match (m1, m2) {
        (Composite(_), _) | (_, Composite(_)) => {
            Composite(composite_or(&as_composite(m1)?, &as_composite(m2)?))
        }
        (Plain(a), Plain(b)) => {
            MaskColumn::plain(a.bits.iter().zip(&b.bits).map(|(&x, &y)| x || y).collect())
        }
        (Rle(a), Rle(b)) => MaskColumn::Rle(RleMask { runs: range_union(&a.runs, &b.runs), total_size: n }),
        (Rle(r), Plain(p)) | (Plain(p), Rle(r)) => {
            let mut bits = p.bits.clone();
            if is_sparse(r) {
                set_bits(&mut bits, &rle_mask_to_index(r)?.positions);
            } else {
                let other = rle_mask_to_plain(r)?.bits;
                bits.iter_mut().zip(other).for_each(|(b, o)| *b |= o);
            }
            MaskColumn::plain(bits)
        }
        (Rle(r), Index(i)) | (Index(i), Rle(r)) => Composite(rle_or_index(r, i)),
        (Plain(p), Index(i)) | (Index(i), Plain(p)) => {
            let mut bits = p.bits.clone();
            set_bits(&mut bits, &i.positions);
            MaskColumn::plain(bits)
        }
        (Index(a), Index(b)) => MaskColumn::index(index_or_index(&a.positions, &b.positions), n),
    })
}

pub fn not_mask(m: &MaskColumn) -> MaskColumn {
    match m {
        MaskColumn::Plain(p) => MaskColumn::plain(p.bits.iter().map(|&b| !b).collect()),
        MaskColumn::Rle(r) => MaskColumn::Rle(RleMask { runs: complement_rle(&r.runs, r.total_size), total_size: r.total_size }),
        MaskColumn::Index(i) => MaskColumn::Rle(RleMask {
            runs: complement_index(&i.positions, i.total_size),
            total_size: i.total_size,
        }),
        MaskColumn::Composite(c) => MaskColumn::Rle(composite_not(c)),
    }
}

fn set_bits(bits: &mut [bool], positions: &[usize]) {
    for &p in positions {
        bits[p] = true;
    }
}

/// Pieces are kept as produced, so touching inputs give touching outputs.
fn rle_and_rle(a: &RleMask, b: &RleMask) -> RleMask {
    RleMask { runs: range_intersect(&a.runs, &b.runs).runs, total_size: a.total_size }
}

fn rle_and_index(r: &RleMask, i: &IndexMask) -> IndexMask {
    IndexMask::new(positions_in_runs(&i.positions, &r.runs).positions, i.total_size)
}

fn plain_and_index(p: &PlainMask, i: &IndexMask) -> IndexMask {
    IndexMask::new(i.positions.iter().copied().filter(|&x| p.bits[x]).collect(), i.total_size)
}

/// Points of `i` outside `r`.
fn index_minus_rle(i: &IndexMask, r: &RleMask) -> IndexMask {
    let hits = positions_in_runs(&i.positions, &r.runs);
    let mut inside = vec![false; i.positions.len()];
    for e in hits.entry {
        inside[e] = true;
    }
    let positions = i.positions.iter().zip(&inside).filter(|(_, &x)| !x).map(|(&p, _)| p).collect();
    IndexMask::new(positions, i.total_size)
}

fn rle_or_index(r: &RleMask, i: &IndexMask) -> CompositeMask {
    CompositeMask { runs: r.clone(), points: index_minus_rle(i, r) }
}

fn index_or_index(a: &[usize], b: &[usize]) -> Vec<usize> {
    if a.len() < CONCAT_SORT_LIMIT && b.len() < CONCAT_SORT_LIMIT {
        concat_sort_idx(a, b)
    } else {
        merge_sorted_idx(a, b)
    }
}

/// Views any mask as runs plus points. Plain bits become maximal runs.
pub fn as_composite(m: &MaskColumn) -> Result<CompositeMask> {
    let n = m.total_size();
    Ok(match m {
        MaskColumn::Composite(c) => c.clone(),
        MaskColumn::Rle(r) => CompositeMask { runs: r.clone(), points: IndexMask::new(Vec::new(), n) },
        MaskColumn::Index(i) => CompositeMask { runs: RleMask::empty(n), points: i.clone() },
        MaskColumn::Plain(p) => CompositeMask { runs: plain_mask_to_rle(p), points: IndexMask::new(Vec::new(), n) },
    })
}

/// `(R1 ∧ R2) ∨ (R1 ∧ I2) ∨ (I1 ∧ R2) ∨ (I1 ∧ I2)`.
///
/// The four terms are pairwise disjoint because each operand's runs and
/// points are, so the three point terms concatenate without deduplication.
pub fn composite_and(a: &CompositeMask, b: &CompositeMask) -> CompositeMask {
    let n = a.runs.total_size;
    let runs = rle_and_rle(&a.runs, &b.runs);
    let ri = rle_and_index(&a.runs, &b.points);
    let ir = rle_and_index(&b.runs, &a.points);
    let ii = idx_in_idx(&a.points.positions, &b.points.positions).positions;
    let mut points = Vec::with_capacity(ri.positions.len() + ir.positions.len() + ii.len());
    points.extend_from_slice(&ri.positions);
    points.extend_from_slice(&ir.positions);
    points.extend_from_slice(&ii);
    points.sort_unstable();
    CompositeMask { runs, points: IndexMask::new(points, n) }
}

/// `(R1 ∨ R2) ∨ (I1 ∨ I2)`, with points already inside the runs dropped.
pub fn composite_or(a: &CompositeMask, b: &CompositeMask) -> CompositeMask {
    let n = a.runs.total_size;
    let runs = RleMask { runs: range_union(&a.runs.runs, &b.runs.runs), total_size: n };
    let points = IndexMask::new(index_or_index(&a.points.positions, &b.points.positions), n);
    CompositeMask { points: index_minus_rle(&points, &runs), runs }
}

/// `¬R ∧ ¬I`, both sides already runs.
pub fn composite_not(c: &CompositeMask) -> RleMask {
    let n = c.runs.total_size;
    let not_r = complement_rle(&c.runs.runs, n);
    let not_i = complement_index(&c.points.positions, n);
    RleMask { runs: range_intersect(&not_r, &not_i).runs.merge_adjacent(), total_size: n }
}

/// Merges touching runs.
pub fn canonical_mask(m: &MaskColumn) -> MaskColumn {
    match m {
        MaskColumn::Rle(r) => MaskColumn::Rle(RleMask { runs: r.runs.merge_adjacent(), total_size: r.total_size }),
        MaskColumn::Composite(c) => MaskColumn::Composite(CompositeMask {
            runs: RleMask { runs: c.runs.runs.merge_adjacent(), total_size: c.runs.total_size },
            points: c.points.clone(),
        }),
        other => other.clone(),
    }
}

/// The mask's true rows as canonical runs.
pub fn mask_runs(m: &MaskColumn) -> Runs {
    match m {
        MaskColumn::Rle(r) => r.runs.merge_adjacent(),
        MaskColumn::Plain(p) => plain_mask_to_rle(p).runs,
        MaskColumn::Index(i) => Runs::new(i.positions.clone(), i.positions.clone()).merge_adjacent(),
        MaskColumn::Composite(c) => {
            let pts = Runs::new(c.points.positions.clone(), c.points.positions.clone());
            range_union(&c.runs.runs, &pts)
        }
    }
}
