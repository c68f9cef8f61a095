//! Boundary extraction for sets given only by a membership predicate:
//! marching squares on a grid, crossing points refined by bisection.

use std::collections::HashMap;

use super::region::Curve;
use crate::C64;

/// Edge identifier: `(i, j, vertical)` names the grid edge leaving node `(i, j)`.
type EdgeId = (usize, usize, bool);

struct Grid<'a> {
    pred: &'a (dyn Fn(C64) -> bool + Sync),
    lo: C64,
    dx: f64,
    dy: f64,
    n: usize,
    vals: Vec<bool>,
}

impl Grid<'_> {
    fn node(&self, i: usize, j: usize) -> C64 {
        C64::new(self.lo.re + i as f64 * self.dx, self.lo.im + j as f64 * self.dy)
    }

    fn val(&self, i: usize, j: usize) -> bool {
        self.vals[j * (self.n + 1) + i]
    }

    /// Boundary point on an edge, on the inside of the crossing.
    fn crossing(&self, e: EdgeId) -> C64 {
        let (i, j, vertical) = e;
        let a = self.node(i, j);
        let b = if vertical { self.node(i, j + 1) } else { self.node(i + 1, j) };
        let (mut pin, mut pout) = if self.val(i, j) { (a, b) } else { (b, a) };
        for _ in 0..40 {
            let m = (pin + pout) * 0.5;
            if (self.pred)(m) {
                pin = m;
            } else {
                pout = m;
            }
        }
        pin
    }
}

/// Traces the boundary of `{z : pred(z)}` inside the box `[lo, hi]` on an
/// `n x n` cell grid. Boundaries leaving the box become open polylines.
pub(crate) fn contour(pred: &(dyn Fn(C64) -> bool + Sync), lo: C64, hi: C64, n: usize) -> Vec<Curve> {
    let n = n.max(4);
    let dx = (hi.re - lo.re) / n as f64;
    let dy = (hi.im - lo.im) / n as f64;
    if !(dx > 0.0 && dy > 0.0) {
        return Vec::new();
    }
    let mut vals = Vec::with_capacity((n + 1) * (n + 1));
    for j in 0..=n {
        for i in 0..=n {
            vals.push(pred(C64::new(lo.re + i as f64 * dx, lo.im + j as f64 * dy)));
        }
    }
    let g = Grid { pred, lo, dx, dy, n, vals };
    let mut segs: Vec<(EdgeId, EdgeId)> = Vec::new();
    for j in 0..n {
        for i in 0..n {
            let (a, b, c, d) = (g.val(i, j), g.val(i + 1, j), g.val(i + 1, j + 1), g.val(i, j + 1));
            let bottom = (i, j, false);
            let right = (i + 1, j, true);
            let top = (i, j + 1, false);
            let left = (i, j, true);
            let mut crossings = Vec::with_capacity(4);
            if a != b {
                crossings.push(bottom);
            }
            if b != c {
                crossings.push(right);
            }
            if c != d {
                crossings.push(top);
            }
            if d != a {
                crossings.push(left);
            }
            match crossings.len() {
                2 => segs.push((crossings[0], crossings[1])),
                4 => {
                    // Saddle: resolve with the cell center.
                    let center = pred(C64::new(lo.re + (i as f64 + 0.5) * dx, lo.im + (j as f64 + 0.5) * dy));
                    if center == a {
                        segs.push((bottom, right));
                        segs.push((top, left));
                    } else {
                        segs.push((bottom, left));
                        segs.push((right, top));
                    }
                }
                _ => {}
            }
        }
    }
    link(&g, segs)
}

fn link(g: &Grid<'_>, segs: Vec<(EdgeId, EdgeId)>) -> Vec<Curve> {
    let mut adj: HashMap<EdgeId, Vec<usize>> = HashMap::new();
    for (k, &(a, b)) in segs.iter().enumerate() {
        adj.entry(a).or_default().push(k);
        adj.entry(b).or_default().push(k);
    }
    let mut used = vec![false; segs.len()];
    let mut points: HashMap<EdgeId, C64> = HashMap::new();
    let mut pt = |e: EdgeId| *points.entry(e).or_insert_with(|| g.crossing(e));
    let mut curves = Vec::new();
    // Open chains start at edges with a single incident segment.
    let mut starts: Vec<EdgeId> = adj.iter().filter(|(_, v)| v.len() == 1).map(|(e, _)| *e).collect();
    starts.sort_unstable();
    let all: Vec<usize> = (0..segs.len()).collect();
    let walk = |start: EdgeId, first: usize, used: &mut Vec<bool>| -> (Vec<EdgeId>, bool) {
        let mut chain = vec![start];
        let mut cur = start;
        let mut k = first;
        loop {
            used[k] = true;
            let (a, b) = segs[k];
            let next = if a == cur { b } else { a };
            if next == start {
                return (chain, true);
            }
            chain.push(next);
            cur = next;
            match adj[&cur].iter().find(|&&s| !used[s]) {
                Some(&s) => k = s,
                None => return (chain, false),
            }
        }
    };
    for s in starts {
        let Some(&k) = adj[&s].iter().find(|&&k| !used[k]) else { continue };
        let (chain, closed) = walk(s, k, &mut used);
        curves.push(Curve { points: chain.into_iter().map(&mut pt).collect(), closed });
    }
    for k in all {
        if used[k] {
            continue;
        }
        let start = segs[k].0;
        let (chain, closed) = walk(start, k, &mut used);
        curves.push(Curve { points: chain.into_iter().map(&mut pt).collect(), closed });
    }
    curves
}
