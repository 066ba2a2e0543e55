use serde::{Deserialize, Serialize};

use super::loops::next_crossing;
use super::{in_arc, Color, Coloring};
use crate::error::{Error, Result};
use crate::map::{MarkedTriangulation, Triangulation};

/// Interface from boundary edge `e` to `e'`: the crossed half-edges, each
/// running from its blue (right) endpoint to its red (left) endpoint.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct InterfacePath {
    pub half_edges: Vec<u32>,
    pub left: Vec<u32>,
    pub right: Vec<u32>,
}

/// Percolation interface under the `(e, e')` boundary condition, which
/// overrides the coloring's own boundary colors.
pub fn interface(map: &Triangulation, e: usize, e_prime: usize, coloring: &Coloring) -> Result<InterfacePath> {
    let ell = map.boundary_len();
    if e >= ell || e_prime >= ell || e == e_prime {
        return Err(Error::Invalid("interface needs two distinct boundary edges".into()));
    }
    let colors = coloring.colors();
    let blue = |v: u32| if (v as usize) < ell { in_arc(v as usize, e, e_prime, ell) } else { colors[v as usize] == Color::Blue };
    let mut half_edges = Vec::new();
    trace_interface(map, e, e_prime, blue, &mut half_edges);
    Ok(InterfacePath {
        left: half_edges.iter().map(|&h| map.dest(h)).collect(),
        right: half_edges.iter().map(|&h| map.origin(h)).collect(),
        half_edges,
    })
}

fn trace_interface(map: &Triangulation, e: usize, e_prime: usize, blue: impl Fn(u32) -> bool, out: &mut Vec<u32>) {
    out.clear();
    let end = map.boundary_edge(e_prime);
    let mut h = map.twin(map.boundary_edge(e));
    loop {
        out.push(h);
        if h == end {
            break;
        }
        h = next_crossing(map, h, &blue);
    }
}

/// Per-vertex indicators of the three crossing events.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CrossingFlags {
    pub ea: Vec<bool>,
    pub eb: Vec<bool>,
    pub ec: Vec<bool>,
}

/// Reusable buffers for evaluating crossing events on one map.
pub struct EventSolver<'a> {
    map: &'a Triangulation,
    crossings: Vec<u32>,
    path: Vec<u32>,
    pos: Vec<u32>,
    wall: Vec<u32>,
    seen: Vec<u32>,
    stack: Vec<u32>,
    epoch: u32,
}

impl<'a> EventSolver<'a> {
    pub fn new(map: &'a Triangulation) -> Self {
        let n = map.num_vertices();
        EventSolver {
            map,
            crossings: Vec::new(),
            path: Vec::new(),
            pos: vec![0; n],
            wall: vec![0; n],
            seen: vec![0; n],
            stack: Vec::new(),
            epoch: 0,
        }
    }

    fn bump(&mut self) {
        if self.epoch == u32::MAX {
            self.wall.iter_mut().for_each(|x| *x = 0);
            self.seen.iter_mut().for_each(|x| *x = 0);
            self.epoch = 0;
        }
        self.epoch += 1;
    }

    /// Writes the indicator of the event for edge `a` into `out`. The blue
    /// side of the middle segment of the interface from `c` to `b` (from its
    /// last visit to `(c,a)` to its first visit to `(a,b)`), loop-erased, is
    /// the outermost witness path; flagged vertices are that path and
    /// everything it separates from `(b,c)`.
    pub fn region_into(&mut self, colors: &[Color], a: usize, b: usize, c: usize, out: &mut [bool]) {
        let map = self.map;
        let ell = map.boundary_len();
        let blue = |v: u32| if (v as usize) < ell { in_arc(v as usize, c, b, ell) } else { colors[v as usize] == Color::Blue };
        trace_interface(map, c, b, blue, &mut self.crossings);
        let on = |h: u32, e: usize, f: usize| (map.origin(h) as usize) < ell && in_arc(map.origin(h) as usize, e, f, ell);
        let i0 = self.crossings.iter().rposition(|&h| on(h, c, a)).expect("interface starts on (c,a)");
        let i1 = i0 + self.crossings[i0..].iter().position(|&h| on(h, a, b)).expect("interface ends on (a,b)");
        self.bump();
        let middle = &self.crossings[i0..=i1];
        let ep = self.epoch;
        self.path.clear();
        for &h in middle {
            let v = map.origin(h);
            if self.wall[v as usize] == ep {
                let k = self.pos[v as usize] as usize;
                for &w in &self.path[k + 1..] {
                    self.wall[w as usize] = 0;
                }
                self.path.truncate(k + 1);
            } else {
                self.wall[v as usize] = ep;
                self.pos[v as usize] = self.path.len() as u32;
                self.path.push(v);
            }
        }

        let u0 = map.origin(middle[0]) as usize;
        let span = (map.origin(middle[i1 - i0]) as usize + ell - u0) % ell;
        self.stack.clear();
        for x in (0..ell).filter(|&x| (x + ell - u0) % ell > span) {
            self.stack.push(x as u32);
        }
        for &h in middle {
            self.stack.push(map.dest(h));
        }
        for i in 0..self.stack.len() {
            let s = self.stack[i];
            self.seen[s as usize] = ep;
        }
        while let Some(u) = self.stack.pop() {
            let start = map.out_edge(u);
            let mut g = start;
            loop {
                let w = map.dest(g) as usize;
                if self.seen[w] != ep && self.wall[w] != ep {
                    self.seen[w] = ep;
                    self.stack.push(w as u32);
                }
                g = map.rot_ccw(g);
                if g == start {
                    break;
                }
            }
        }
        for (v, o) in out.iter_mut().enumerate() {
            *o = self.wall[v] == ep || self.seen[v] != ep;
        }
    }

    pub fn flags_into(&mut self, colors: &[Color], a: usize, b: usize, c: usize, flags: &mut CrossingFlags) {
        self.region_into(colors, a, b, c, &mut flags.ea);
        self.region_into(colors, b, c, a, &mut flags.eb);
        self.region_into(colors, c, a, b, &mut flags.ec);
    }

    pub fn flags(&mut self, marked: &MarkedTriangulation, coloring: &Coloring) -> CrossingFlags {
        let n = self.map.num_vertices();
        let mut f = CrossingFlags { ea: vec![false; n], eb: vec![false; n], ec: vec![false; n] };
        self.flags_into(coloring.colors(), marked.a, marked.b, marked.c, &mut f);
        f
    }
}

/// Indicator of the event for edge `a` with marks `(a, b, c)`.
pub fn event_region(map: &Triangulation, coloring: &Coloring, a: usize, b: usize, c: usize) -> Vec<bool> {
    let mut out = vec![false; map.num_vertices()];
    EventSolver::new(map).region_into(coloring.colors(), a, b, c, &mut out);
    out
}

pub fn crossing_flags(marked: &MarkedTriangulation, coloring: &Coloring) -> CrossingFlags {
    EventSolver::new(&marked.map).flags(marked, coloring)
}

/// Exhaustive version over explicit blue paths: a vertex is flagged if it
/// lies on, or strictly on the `a`-side of, some simple path from `(c,a)` to
/// `(a,b)` whose interior vertices are inner and blue. The path along edge
/// `a` itself only contributes its endpoints. Exponential; small maps only.
pub fn crossing_flags_by_paths(marked: &MarkedTriangulation, coloring: &Coloring) -> CrossingFlags {
    let (m, a, b, c) = (&marked.map, marked.a, marked.b, marked.c);
    CrossingFlags {
        ea: paths_region(m, coloring.colors(), a, b, c),
        eb: paths_region(m, coloring.colors(), b, c, a),
        ec: paths_region(m, coloring.colors(), c, a, b),
    }
}

fn paths_region(map: &Triangulation, colors: &[Color], a: usize, b: usize, c: usize) -> Vec<bool> {
    let ell = map.boundary_len();
    let n = map.num_vertices();
    let mut out = vec![false; n];
    let mut on_path = vec![false; n];
    let mut verts = Vec::new();
    let mut edges = Vec::new();
    for x in 0..ell {
        if !in_arc(x, c, a, ell) {
            continue;
        }
        verts.push(x as u32);
        on_path[x] = true;
        extend(map, colors, a, b, &mut verts, &mut edges, &mut on_path, &mut out);
        on_path[x] = false;
        verts.pop();
    }
    out
}

#[allow(clippy::too_many_arguments)]
fn extend(
    map: &Triangulation,
    colors: &[Color],
    a: usize,
    b: usize,
    verts: &mut Vec<u32>,
    edges: &mut Vec<u32>,
    on_path: &mut Vec<bool>,
    out: &mut [bool],
) {
    let ell = map.boundary_len();
    let u = *verts.last().unwrap();
    for g in map.out_edges(u) {
        let w = map.dest(g);
        if on_path[w as usize] {
            continue;
        }
        if (w as usize) < ell {
            if in_arc(w as usize, a, b, ell) {
                verts.push(w);
                edges.push(g);
                mark_side(map, verts, edges, on_path, a, out);
                edges.pop();
                verts.pop();
            }
        } else if colors[w as usize] == Color::Blue {
            verts.push(w);
            edges.push(g);
            on_path[w as usize] = true;
            extend(map, colors, a, b, verts, edges, on_path, out);
            on_path[w as usize] = false;
            edges.pop();
            verts.pop();
        }
    }
}

fn mark_side(map: &Triangulation, verts: &[u32], edges: &[u32], on_path: &[bool], a: usize, out: &mut [bool]) {
    let last = *verts.last().unwrap();
    for &v in verts {
        out[v as usize] = true;
    }
    if edges.len() == 1 && edges[0] == map.boundary_edge(a) {
        return;
    }
    let in_p = |v: u32| on_path[v as usize] || v == last;
    let mut seeds = Vec::new();
    let x = verts[0];
    let bx = map.boundary_edge(x as usize);
    let mut g = edges[0];
    while g != bx {
        g = map.rot_cw(g);
        seeds.push(map.dest(g));
    }
    for i in 1..edges.len() {
        let back = map.twin(edges[i - 1]);
        let mut g = map.rot_cw(edges[i]);
        while g != back {
            seeds.push(map.dest(g));
            g = map.rot_cw(g);
        }
    }
    let ell = map.boundary_len();
    let ry = map.twin(map.boundary_edge((last as usize + ell - 1) % ell));
    let back = map.twin(*edges.last().unwrap());
    let mut g = ry;
    while g != back {
        seeds.push(map.dest(g));
        g = map.rot_cw(g);
    }
    let mut seen = vec![false; map.num_vertices()];
    let mut stack: Vec<u32> = seeds.into_iter().filter(|&s| !in_p(s)).collect();
    for &s in &stack {
        seen[s as usize] = true;
    }
    while let Some(u) = stack.pop() {
        out[u as usize] = true;
        for w in map.neighbors(u) {
            if !seen[w as usize] && !in_p(w) {
                seen[w as usize] = true;
                stack.push(w);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::map::{enumerate_triangulations, sample_boltzmann, BoltzmannOptions};
    use crate::percolation::{sample_percolation, BoundaryCondition};
    use crate::rng::stream;

    const BLUE: BoundaryCondition = BoundaryCondition::MonochromaticBlue;

    fn marks(ell: usize) -> Vec<(usize, usize, usize)> {
        let mut v = Vec::new();
        for a in 0..ell {
            for b in 0..ell {
                for c in 0..ell {
                    if crate::map::ccw_distinct(a, b, c, ell) {
                        v.push((a, b, c));
                    }
                }
            }
        }
        v
    }

    #[test]
    fn cone_events() {
        let m = Triangulation::cone();
        let mk = MarkedTriangulation::new(m.clone(), 0, 1, 2).unwrap();
        for key in 0..2 {
            let c = Coloring::from_key(&m, key, BLUE);
            let f = crossing_flags(&mk, &c);
            let blue = key == 1;
            assert_eq!(f.ea, vec![true, true, false, blue]);
            assert_eq!(f.eb, vec![false, true, true, blue]);
            assert_eq!(f.ec, vec![true, false, true, blue]);
            assert_eq!(f, crossing_flags_by_paths(&mk, &c));
        }
    }

    #[test]
    fn cone_interfaces() {
        let m = Triangulation::cone();
        let red = interface(&m, 0, 1, &Coloring::from_key(&m, 0, BLUE)).unwrap();
        let blue = interface(&m, 0, 1, &Coloring::from_key(&m, 1, BLUE)).unwrap();
        // (0,1) condition: vertex 1 blue, vertices 2 and 0 red
        assert_eq!(red.right, vec![1, 1, 1]);
        assert_eq!(red.left, vec![0, 3, 2]);
        assert_eq!(blue.right, vec![1, 3, 3, 1]);
        assert_eq!(blue.left, vec![0, 0, 2, 2]);
    }

    #[test]
    fn monochromatic_interfaces_hug_arcs() {
        let mut rng = stream(8, "hug");
        for _ in 0..50 {
            let m = sample_boltzmann(7, BoltzmannOptions { vertex_budget: 200 }, &mut rng).unwrap_or_else(|_| Triangulation::cone());
            let ell = m.boundary_len();
            let (e, f) = (0, ell / 2);
            let all_blue = interface(&m, e, f, &Coloring::uniform(&m, Color::Blue, BLUE)).unwrap();
            for &v in &all_blue.left {
                assert!((v as usize) < ell && !super::in_arc(v as usize, e, f, ell));
            }
            let all_red = interface(&m, e, f, &Coloring::uniform(&m, Color::Red, BLUE)).unwrap();
            for &v in &all_red.right {
                assert!((v as usize) < ell && super::in_arc(v as usize, e, f, ell));
            }
        }
    }

    #[test]
    fn reversal_symmetry() {
        let mut rng = stream(9, "rev");
        for _ in 0..100 {
            let Ok(m) = sample_boltzmann(6, BoltzmannOptions { vertex_budget: 300 }, &mut rng) else { continue };
            let c = sample_percolation(&m, BLUE, &mut rng);
            let fwd = interface(&m, 1, 4, &c).unwrap();
            let bwd = interface(&m, 4, 1, &c.swapped()).unwrap();
            let rev: Vec<u32> = fwd.half_edges.iter().rev().map(|&h| m.twin(h)).collect();
            assert_eq!(rev, bwd.half_edges);
        }
    }

    #[test]
    fn all_blue_flags() {
        let d = crate::lattice::LatticeDomain::build(&crate::lattice::Shape::unit_disk(), 0.2, Default::default()).unwrap();
        let m = d.to_triangulation();
        let ell = m.boundary_len();
        for (a, b, c) in [(0, ell / 3, 2 * ell / 3), (1, 2, ell - 1), (ell - 1, ell / 2, ell / 2 + 1)] {
            let mk = MarkedTriangulation::new(m.clone(), a, b, c).unwrap();
            let f = crossing_flags(&mk, &Coloring::uniform(&m, Color::Blue, BLUE));
            for v in 0..m.num_vertices() {
                assert_eq!(f.ea[v], v >= ell || !super::in_arc(v, b, c, ell), "v={v}");
            }
        }
    }

    #[test]
    fn matches_path_search() {
        let mut total = 0u64;
        for ell in 3..=5 {
            let nmax = if ell == 5 { 2 } else { 3 };
            for n in 0..=nmax {
                for m in enumerate_triangulations(ell, n, 8).unwrap() {
                    for (a, b, c) in marks(ell) {
                        if a != 0 && ell > 4 {
                            continue;
                        }
                        let mk = MarkedTriangulation { map: m.clone(), a, b, c };
                        for key in 0..1u64 << n {
                            let col = Coloring::from_key(&m, key, BLUE);
                            assert_eq!(crossing_flags(&mk, &col), crossing_flags_by_paths(&mk, &col), "ell={ell} n={n} key={key}");
                            total += 1;
                        }
                    }
                }
            }
        }
        assert!(total > 1000);
    }

    #[test]
    fn matches_path_search_on_sampled_maps() {
        let mut rng = stream(12, "paths");
        let mut done = 0;
        while done < 300 {
            let Ok(m) = sample_boltzmann(6, BoltzmannOptions { vertex_budget: 12 }, &mut rng) else { continue };
            let mk = MarkedTriangulation::spread(m.clone());
            let col = sample_percolation(&m, BLUE, &mut rng);
            assert_eq!(crossing_flags(&mk, &col), crossing_flags_by_paths(&mk, &col));
            done += 1;
        }
    }

    #[test]
    fn monotone_in_blue() {
        let mut rng = stream(11, "mono");
        for _ in 0..200 {
            let Ok(m) = sample_boltzmann(5, BoltzmannOptions { vertex_budget: 300 }, &mut rng) else { continue };
            if m.num_inner() == 0 {
                continue;
            }
            let mk = MarkedTriangulation::spread(m.clone());
            let mut c = sample_percolation(&m, BLUE, &mut rng);
            let before = crossing_flags(&mk, &c);
            let v = (m.boundary_len() + rand::Rng::random_range(&mut rng, 0..m.num_inner())) as u32;
            if c.is_blue(v) {
                continue;
            }
            c.flip_in_place(v);
            let after = crossing_flags(&mk, &c);
            for (x, y) in [(&before.ea, &after.ea), (&before.eb, &after.eb), (&before.ec, &after.ec)] {
                assert!(x.iter().zip(y).all(|(&x, &y)| !x || y));
            }
        }
    }

    #[test]
    fn interface_is_a_dual_path() {
        let mut rng = stream(12, "path");
        for _ in 0..50 {
            let Ok(m) = sample_boltzmann(8, BoltzmannOptions { vertex_budget: 500 }, &mut rng) else { continue };
            let c = sample_percolation(&m, BLUE, &mut rng);
            let p = interface(&m, 2, 6, &c).unwrap();
            let bc = c.with_boundary(BoundaryCondition::ArcPair { e: 2, e_prime: 6 });
            for (&h, (&l, &r)) in p.half_edges.iter().zip(p.left.iter().zip(&p.right)) {
                assert_eq!((m.dest(h), m.origin(h)), (l, r));
                assert!(bc.is_blue(r) && !bc.is_blue(l));
            }
            let mut faces: Vec<u32> = p.half_edges[1..].iter().map(|&h| m.face(h)).collect();
            faces.sort();
            let k = faces.len();
            faces.dedup();
            assert_eq!(faces.len(), k);
        }
    }
}
