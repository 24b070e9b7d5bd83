#![allow(dead_code)]

use ldp_core::{CadlagPath, PathBuilder};
use proptest::prelude::*;

/// One segment: width, linear?, endpoint displacement, jump at its end?, jump.
type Seg = (f64, bool, Vec<f64>, bool, Vec<f64>);

fn build(dim: usize, start: Vec<f64>, segs: Vec<Seg>) -> CadlagPath {
    let total: f64 = segs.iter().map(|s| s.0).sum();
    let n = segs.len();
    let mut b = PathBuilder::new(&start);
    let mut t = 0.0;
    for (k, (w, linear, disp, jumps, jump)) in segs.into_iter().enumerate() {
        t = if k + 1 == n { total } else { t + w };
        if linear {
            b.linear_by(t, &disp);
        } else {
            b.hold_to(t);
        }
        if jumps && k + 1 < n {
            b.jump(&jump[..dim]);
        }
    }
    b.build().unwrap()
}

/// Random paths with up to `max_segments` segments, mixed modes and jumps.
pub fn path(dim: usize, max_segments: usize) -> impl Strategy<Value = CadlagPath> {
    let seg = (
        0.05f64..1.0,
        any::<bool>(),
        prop::collection::vec(-2.0f64..2.0, dim),
        any::<bool>(),
        prop::collection::vec(-1.5f64..1.5, dim),
    );
    (
        prop::collection::vec(-1.0f64..1.0, dim),
        prop::collection::vec(seg, 1..=max_segments),
    )
        .prop_map(move |(start, segs)| build(dim, start, segs))
}

/// Continuous piecewise-linear paths from zero on `[0, 1]`.
pub fn continuous_from_zero(dim: usize, max_segments: usize) -> impl Strategy<Value = CadlagPath> {
    prop::collection::vec((1usize..5, prop::collection::vec(-2.0f64..2.0, dim)), 1..=max_segments).prop_map(
        move |segs| {
            let total: usize = segs.iter().map(|s| s.0).sum();
            let n = segs.len();
            let mut b = PathBuilder::new(&vec![0.0; dim]);
            let mut acc = 0;
            for (k, (w, disp)) in segs.into_iter().enumerate() {
                acc += w;
                let t = if k + 1 == n { 1.0 } else { acc as f64 / total as f64 };
                b.linear_by(t, &disp);
            }
            b.build().unwrap()
        },
    )
}

/// Pure-jump 1D path on `[0, 1]` with jumps at the given grid indices (of 100).
pub fn pure_jump(jumps: &[(usize, f64)]) -> CadlagPath {
    let mut b = PathBuilder::new(&[0.0]);
    for (i, j) in jumps {
        b.hold_to(*i as f64 / 100.0).jump(&[*j]);
    }
    b.hold_to(1.0).build().unwrap()
}

pub fn pure_jump_strategy() -> impl Strategy<Value = CadlagPath> {
    prop::collection::btree_map(1usize..100, -0.9f64..0.9, 0..8)
        .prop_map(|m| pure_jump(&m.into_iter().collect::<Vec<_>>()))
}

/// 1D path on `[0, 1]` whose breakpoints sit on the grid `k / g`.
pub fn grid_path(g: usize, max_breaks: usize) -> impl Strategy<Value = CadlagPath> {
    (
        prop::collection::btree_set(1..g, 0..=max_breaks),
        prop::collection::vec((any::<bool>(), -1.0f64..1.0, any::<bool>(), -1.0f64..1.0), max_breaks + 1),
    )
        .prop_map(move |(cuts, segs)| {
            let mut times: Vec<usize> = cuts.into_iter().collect();
            times.push(g);
            let mut b = PathBuilder::new(&[0.0]);
            for (k, t) in times.iter().enumerate() {
                let (linear, disp, jumps, jump) = segs[k];
                let t = *t as f64 / g as f64;
                if linear {
                    b.linear_by(t, &[disp]);
                } else {
                    b.hold_to(t);
                }
                if jumps && k + 1 < times.len() {
                    b.jump(&[jump]);
                }
            }
            b.build().unwrap()
        })
}
