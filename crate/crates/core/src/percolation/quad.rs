use super::{Color, Coloring};
use crate::lattice::{LatticeDomain, Quad};

/// Whether red vertices connect side ∂₁ to side ∂₃ of the quad, that is,
/// whether the union of red hexagons crosses the quad.
pub fn quad_crossing(domain: &LatticeDomain, coloring: &Coloring, quad: &Quad) -> bool {
    let n = domain.num_vertices();
    let mut target = vec![false; n];
    for p in quad.side(domain, 2) {
        target[p] = true;
    }
    let mut seen = vec![false; n];
    let mut stack = Vec::new();
    for p in quad.side(domain, 0) {
        if coloring.color(p as u32) == Color::Red && !seen[p] {
            seen[p] = true;
            stack.push(p as u32);
        }
    }
    while let Some(u) = stack.pop() {
        if target[u as usize] {
            return true;
        }
        for &w in domain.neighbor_ids(u) {
            if w != u32::MAX && !seen[w as usize] && coloring.color(w) == Color::Red {
                seen[w as usize] = true;
                stack.push(w);
            }
        }
    }
    false
}
