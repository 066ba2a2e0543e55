use super::{Triangulation, NONE};

/// One root-triangle decision: glue the root edge of the current hole to a
/// degenerate 2-gon, to a triangle with a fresh inner apex, or to a triangle
/// whose apex is hole vertex `k`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Step {
    Degenerate,
    Inner,
    Split { k: u32 },
}

struct Hole {
    /// Outer half-edge of each hole edge, hole edge `i` running `verts[i] → verts[i+1]`.
    outer: Vec<u32>,
    verts: Vec<u32>,
}

/// Incremental map construction by filling holes depth-first. Holes resulting
/// from a split are processed left part first.
pub(crate) struct Builder {
    origin: Vec<u32>,
    twin: Vec<u32>,
    next: Vec<u32>,
    nv: u32,
    ell: u32,
    holes: Vec<Hole>,
}

impl Builder {
    pub fn new(ell: usize) -> Self {
        let mut b = Builder { origin: Vec::new(), twin: Vec::new(), next: Vec::new(), nv: ell as u32, ell: ell as u32, holes: Vec::new() };
        for i in 0..ell {
            b.origin.push(((i + 1) % ell) as u32);
            b.next.push(((i + ell - 1) % ell) as u32);
            b.twin.push(NONE);
        }
        b.holes.push(Hole { outer: (0..ell as u32).collect(), verts: (0..ell as u32).collect() });
        b
    }

    pub fn top_len(&self) -> Option<usize> {
        self.holes.last().map(|h| h.verts.len())
    }

    pub fn inner_vertices(&self) -> usize {
        (self.nv - self.ell) as usize
    }

    fn push_he(&mut self, origin: u32) -> u32 {
        self.origin.push(origin);
        self.twin.push(NONE);
        self.next.push(NONE);
        (self.origin.len() - 1) as u32
    }

    fn link(&mut self, a: u32, b: u32) {
        self.twin[a as usize] = b;
        self.twin[b as usize] = a;
    }

    pub fn apply(&mut self, step: Step) {
        let hole = self.holes.pop().expect("no open hole");
        let ell = hole.verts.len();
        match step {
            Step::Degenerate => {
                assert_eq!(ell, 2, "degenerate step needs a 2-gon");
                self.link(hole.outer[0], hole.outer[1]);
            }
            Step::Inner => {
                let w = self.nv;
                self.nv += 1;
                let (_, t1, t2) = self.triangle(hole.verts[0], hole.verts[1], w, hole.outer[0]);
                let mut outer = Vec::with_capacity(ell + 1);
                outer.push(t2);
                outer.push(t1);
                outer.extend_from_slice(&hole.outer[1..]);
                let mut verts = Vec::with_capacity(ell + 1);
                verts.push(hole.verts[0]);
                verts.push(w);
                verts.extend_from_slice(&hole.verts[1..]);
                self.holes.push(Hole { outer, verts });
            }
            Step::Split { k } => {
                let k = k as usize;
                assert!(k >= 2 && k < ell, "split apex out of range");
                let (_, t1, t2) = self.triangle(hole.verts[0], hole.verts[1], hole.verts[k], hole.outer[0]);
                let mut outer_b: Vec<u32> = hole.outer[k..].to_vec();
                outer_b.push(t2);
                let mut verts_b: Vec<u32> = hole.verts[k..].to_vec();
                verts_b.push(hole.verts[0]);
                let mut outer_a: Vec<u32> = hole.outer[1..k].to_vec();
                outer_a.push(t1);
                let verts_a: Vec<u32> = hole.verts[1..=k].to_vec();
                self.holes.push(Hole { outer: outer_b, verts: verts_b });
                self.holes.push(Hole { outer: outer_a, verts: verts_a });
            }
        }
    }

    fn triangle(&mut self, x: u32, y: u32, w: u32, outer: u32) -> (u32, u32, u32) {
        let t0 = self.push_he(x);
        let t1 = self.push_he(y);
        let t2 = self.push_he(w);
        self.next[t0 as usize] = t1;
        self.next[t1 as usize] = t2;
        self.next[t2 as usize] = t0;
        self.link(t0, outer);
        (t0, t1, t2)
    }

    #[cfg(test)]
    pub fn is_done(&self) -> bool {
        self.holes.is_empty()
    }

    pub fn finish(self) -> Triangulation {
        assert!(self.holes.is_empty(), "unfilled holes remain");
        let root = self.twin[0];
        Triangulation::from_half_edges(self.origin, self.twin, self.next, root).expect("builder produced an invalid map")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cone_from_steps() {
        let mut b = Builder::new(3);
        b.apply(Step::Inner);
        assert_eq!(b.top_len(), Some(4));
        b.apply(Step::Split { k: 3 });
        assert_eq!(b.top_len(), Some(3));
        b.apply(Step::Split { k: 2 });
        while !b.is_done() {
            assert_eq!(b.top_len(), Some(2));
            b.apply(Step::Degenerate);
        }
        assert_eq!(b.inner_vertices(), 1);
        let m = b.finish();
        assert_eq!(m.num_inner(), 1);
        assert_eq!(m.canonical_form(), Triangulation::cone().canonical_form());
    }

    #[test]
    fn bare_triangle() {
        let mut b = Builder::new(3);
        b.apply(Step::Split { k: 2 });
        b.apply(Step::Degenerate);
        b.apply(Step::Degenerate);
        let m = b.finish();
        assert_eq!(m.num_inner(), 0);
        assert_eq!(m.canonical_form(), Triangulation::triangle().canonical_form());
    }
}
