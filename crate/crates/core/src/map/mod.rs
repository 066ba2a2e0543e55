//! Rooted triangulations of polygons stored as half-edge structures.
//!
//! Faces lie to the left of their half-edges. The root half-edge runs from
//! boundary vertex 0 to boundary vertex 1 with an inner triangle on its left
//! and the root face (the ℓ-gon) on its right. Boundary vertices carry ids
//! `0..ℓ` in counterclockwise order and boundary edge `i` runs `i → i+1`.

mod build;
mod count;
mod enumerate;
mod metric;
mod sample;

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub(crate) use build::{Builder, Step};
pub use count::{closed_form_count, count_triangulations, log_partition, partition_function, CountTable, CRITICAL_WEIGHT};
pub use enumerate::{enumerate_triangulations, for_each_triangulation, DEFAULT_CAP};
pub use metric::{metric_measure_data, raw_distances, MetricMeasureData};
pub use sample::{
    boltzmann_tail, sample_boltzmann, sample_boltzmann_table, sample_marked_edges, sample_uniform,
    BoltzmannOptions,
};

pub const NONE: u32 = u32::MAX;

#[derive(Clone, Debug)]
pub struct Triangulation {
    origin: Vec<u32>,
    twin: Vec<u32>,
    next: Vec<u32>,
    prev: Vec<u32>,
    face: Vec<u32>,
    root: u32,
    root_face: u32,
    num_faces: usize,
    num_vertices: usize,
    boundary_edges: Vec<u32>,
    vertex_out: Vec<u32>,
}

impl PartialEq for Triangulation {
    fn eq(&self, other: &Self) -> bool {
        self.canonical_form() == other.canonical_form()
    }
}

impl Eq for Triangulation {}

#[derive(Serialize, Deserialize)]
struct MapJson {
    boundary_length: usize,
    vertices: usize,
    root: u32,
    origin: Vec<u32>,
    twin: Vec<u32>,
    next: Vec<u32>,
}

impl Serialize for Triangulation {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        MapJson {
            boundary_length: self.boundary_len(),
            vertices: self.num_vertices,
            root: self.root,
            origin: self.origin.clone(),
            twin: self.twin.clone(),
            next: self.next.clone(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Triangulation {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let j = MapJson::deserialize(d)?;
        let map = Triangulation::from_half_edges(j.origin, j.twin, j.next, j.root)
            .map_err(serde::de::Error::custom)?;
        if map.boundary_len() != j.boundary_length {
            return Err(serde::de::Error::custom("boundary length mismatch"));
        }
        Ok(map)
    }
}

impl Triangulation {
    /// Validates raw half-edge arrays and relabels vertices so that the
    /// boundary reads `0..ℓ` counterclockwise from the root's origin.
    pub fn from_half_edges(origin: Vec<u32>, twin: Vec<u32>, next: Vec<u32>, root: u32) -> Result<Self> {
        let m = origin.len();
        let bad = |s: &str| Err(Error::Invalid(s.to_string()));
        if twin.len() != m || next.len() != m || m == 0 || root as usize >= m {
            return bad("half-edge arrays have inconsistent lengths");
        }
        let mut prev = vec![NONE; m];
        for h in 0..m {
            let t = twin[h] as usize;
            if t >= m || t == h || twin[t] as usize != h {
                return bad("twin is not a fixed-point-free involution");
            }
            let nx = next[h] as usize;
            if nx >= m || prev[nx] != NONE {
                return bad("next is not a permutation");
            }
            prev[nx] = h as u32;
        }
        for h in 0..m {
            if origin[twin[h] as usize] != origin[next[h] as usize] {
                return bad("origin of twin differs from origin of next");
            }
            if origin[h] == origin[twin[h] as usize] {
                return bad("self-loop");
            }
        }
        let mut face = vec![NONE; m];
        let mut degrees = Vec::new();
        for h in 0..m {
            if face[h] != NONE {
                continue;
            }
            let f = degrees.len() as u32;
            let mut g = h;
            let mut deg = 0;
            while face[g] == NONE {
                face[g] = f;
                deg += 1;
                g = next[g] as usize;
            }
            degrees.push(deg);
        }
        let root_face = face[twin[root as usize] as usize];
        if root_face == face[root as usize] {
            return bad("root half-edge borders the root face on both sides");
        }
        for (f, &d) in degrees.iter().enumerate() {
            if f as u32 != root_face && d != 3 {
                return bad("inner face of degree other than 3");
            }
        }
        let ell = degrees[root_face as usize];
        if ell < 3 {
            return bad("boundary length below 3");
        }

        // Vertex orbits under rotation must match origin labels one-to-one.
        let max_label = origin.iter().copied().max().unwrap() as usize + 1;
        let mut orbit_of_label = vec![NONE; max_label];
        let mut seen = vec![false; m];
        let mut orbits = 0u32;
        for h in 0..m {
            if seen[h] {
                continue;
            }
            let label = origin[h] as usize;
            if orbit_of_label[label] != NONE {
                return bad("vertex label shared by two rotation orbits");
            }
            orbit_of_label[label] = orbits;
            let mut g = h;
            while !seen[g] {
                seen[g] = true;
                if origin[g] as usize != label {
                    return bad("rotation orbit mixes vertex labels");
                }
                g = twin[prev[g] as usize] as usize;
            }
            orbits += 1;
        }
        let nv = orbits as usize;

        let mut boundary_edges = Vec::with_capacity(ell);
        let mut b = root as usize;
        for _ in 0..ell {
            boundary_edges.push(b as u32);
            b = twin[prev[twin[b] as usize] as usize] as usize;
        }
        if b != root as usize {
            return bad("boundary walk did not close");
        }
        let mut relabel = vec![NONE; max_label];
        for (i, &h) in boundary_edges.iter().enumerate() {
            let v = origin[h as usize] as usize;
            if relabel[v] != NONE {
                return bad("boundary is not simple");
            }
            relabel[v] = i as u32;
        }
        let mut nextid = ell as u32;
        for v in 0..max_label {
            if orbit_of_label[v] != NONE && relabel[v] == NONE {
                relabel[v] = nextid;
                nextid += 1;
            }
        }
        let origin: Vec<u32> = origin.iter().map(|&v| relabel[v as usize]).collect();
        let edges = m / 2;
        let faces = degrees.len();
        if nv as i64 - edges as i64 + faces as i64 != 2 {
            return bad("Euler characteristic is not 2");
        }
        let mut vertex_out = vec![NONE; nv];
        for h in 0..m {
            let v = origin[h] as usize;
            if vertex_out[v] == NONE {
                vertex_out[v] = h as u32;
            }
        }
        Ok(Triangulation {
            origin,
            twin,
            next,
            prev,
            face,
            root,
            root_face,
            num_faces: faces,
            num_vertices: nv,
            boundary_edges,
            vertex_out,
        })
    }

    /// Builds a map from counterclockwise triangles and the counterclockwise
    /// boundary cycle. Edges are identified by their endpoints, so the input
    /// must not contain parallel edges.
    pub fn from_triangles(num_vertices: usize, triangles: &[[u32; 3]], boundary: &[u32]) -> Result<Self> {
        use std::collections::HashMap;
        let mut origin = Vec::with_capacity(triangles.len() * 3 + boundary.len());
        let mut next = Vec::with_capacity(origin.capacity());
        let mut by_ends: HashMap<(u32, u32), u32> = HashMap::with_capacity(origin.capacity());
        for (t, tri) in triangles.iter().enumerate() {
            for k in 0..3 {
                let h = (3 * t + k) as u32;
                origin.push(tri[k]);
                next.push((3 * t + (k + 1) % 3) as u32);
                if by_ends.insert((tri[k], tri[(k + 1) % 3]), h).is_some() {
                    return Err(Error::Invalid("repeated directed edge".into()));
                }
            }
        }
        let ell = boundary.len();
        let base = origin.len() as u32;
        for i in 0..ell {
            origin.push(boundary[(i + 1) % ell]);
            next.push(base + ((i + ell - 1) % ell) as u32);
        }
        let mut twin = vec![NONE; origin.len()];
        for i in 0..ell {
            let inner = *by_ends
                .get(&(boundary[i], boundary[(i + 1) % ell]))
                .ok_or_else(|| Error::Invalid("boundary edge missing from triangles".into()))?;
            twin[inner as usize] = base + i as u32;
            twin[(base + i as u32) as usize] = inner;
        }
        for h in 0..base as usize {
            if twin[h] != NONE {
                continue;
            }
            let u = origin[h];
            let w = origin[next[h] as usize];
            match by_ends.get(&(w, u)) {
                Some(&g) => twin[h] = g,
                None => return Err(Error::Invalid("unpaired inner edge".into())),
            }
        }
        let root = twin[base as usize];
        if num_vertices != 0 && origin.iter().any(|&v| v as usize >= num_vertices) {
            return Err(Error::Invalid("vertex id out of range".into()));
        }
        Self::from_half_edges(origin, twin, next, root)
    }

    pub fn num_half_edges(&self) -> usize {
        self.origin.len()
    }
    pub fn num_edges(&self) -> usize {
        self.origin.len() / 2
    }
    /// Number of faces including the root face.
    pub fn num_faces(&self) -> usize {
        self.num_faces
    }
    pub fn num_vertices(&self) -> usize {
        self.num_vertices
    }
    pub fn boundary_len(&self) -> usize {
        self.boundary_edges.len()
    }
    pub fn num_inner(&self) -> usize {
        self.num_vertices - self.boundary_len()
    }
    pub fn root(&self) -> u32 {
        self.root
    }
    #[inline]
    pub fn origin(&self, h: u32) -> u32 {
        self.origin[h as usize]
    }
    #[inline]
    pub fn dest(&self, h: u32) -> u32 {
        self.origin[self.twin[h as usize] as usize]
    }
    #[inline]
    pub fn twin(&self, h: u32) -> u32 {
        self.twin[h as usize]
    }
    #[inline]
    pub fn next(&self, h: u32) -> u32 {
        self.next[h as usize]
    }
    #[inline]
    pub fn prev(&self, h: u32) -> u32 {
        self.prev[h as usize]
    }
    #[inline]
    pub fn face(&self, h: u32) -> u32 {
        self.face[h as usize]
    }
    #[inline]
    pub fn in_root_face(&self, h: u32) -> bool {
        self.face[h as usize] == self.root_face
    }
    #[inline]
    pub fn is_boundary_vertex(&self, v: u32) -> bool {
        (v as usize) < self.boundary_len()
    }
    /// Inner-side half-edge of boundary edge `i` (from vertex `i` to `i+1`).
    #[inline]
    pub fn boundary_edge(&self, i: usize) -> u32 {
        self.boundary_edges[i]
    }
    /// Index of `h` among boundary edges when `h` is an inner-side boundary half-edge.
    pub fn boundary_edge_index(&self, h: u32) -> Option<usize> {
        if self.in_root_face(self.twin(h)) {
            Some(self.origin(h) as usize)
        } else {
            None
        }
    }
    /// Next outgoing half-edge counterclockwise around `origin(h)`.
    #[inline]
    pub fn rot_ccw(&self, h: u32) -> u32 {
        self.twin[self.prev[h as usize] as usize]
    }
    #[inline]
    pub fn rot_cw(&self, h: u32) -> u32 {
        self.next[self.twin[h as usize] as usize]
    }
    /// Undirected edge id shared by `h` and its twin.
    #[inline]
    pub fn edge_id(&self, h: u32) -> u32 {
        h.min(self.twin[h as usize])
    }
    /// Some outgoing half-edge of `v`.
    #[inline]
    pub fn out_edge(&self, v: u32) -> u32 {
        self.vertex_out[v as usize]
    }
    /// Outgoing half-edges of `v` in counterclockwise order.
    pub fn out_edges(&self, v: u32) -> Vec<u32> {
        let start = self.vertex_out[v as usize];
        let mut out = Vec::with_capacity(6);
        let mut h = start;
        loop {
            out.push(h);
            h = self.twin[self.prev[h as usize] as usize];
            if h == start {
                break;
            }
        }
        out
    }
    /// Outgoing half-edges of a boundary vertex, counterclockwise, starting with
    /// the outgoing boundary edge and ending with the reverse of the incoming one.
    pub fn out_edges_from_boundary(&self, v: u32) -> Vec<u32> {
        let start = self.boundary_edges[v as usize];
        let mut out = Vec::with_capacity(6);
        let mut h = start;
        loop {
            out.push(h);
            if self.in_root_face(h) {
                break;
            }
            h = self.twin[self.prev[h as usize] as usize];
        }
        out
    }
    pub fn neighbors(&self, v: u32) -> Vec<u32> {
        self.out_edges(v).into_iter().map(|h| self.dest(h)).collect()
    }
    /// Adjacency lists with multiplicity, counterclockwise.
    pub fn adjacency(&self) -> Vec<Vec<u32>> {
        (0..self.num_vertices as u32).map(|v| self.neighbors(v)).collect()
    }
    pub fn origins(&self) -> &[u32] {
        &self.origin
    }

    /// Root-first breadth-first relabelling of half-edges, encoded as the
    /// relabelled `(next, twin)` pairs. Two rooted maps are isomorphic iff
    /// their canonical forms agree.
    pub fn canonical_form(&self) -> Vec<u32> {
        let m = self.num_half_edges();
        let mut label = vec![NONE; m];
        let mut order = Vec::with_capacity(m);
        let mut queue = VecDeque::with_capacity(m);
        label[self.root as usize] = 0;
        order.push(self.root);
        queue.push_back(self.root);
        while let Some(h) = queue.pop_front() {
            for g in [self.next(h), self.twin(h)] {
                if label[g as usize] == NONE {
                    label[g as usize] = order.len() as u32;
                    order.push(g);
                    queue.push_back(g);
                }
            }
        }
        let mut code = Vec::with_capacity(2 * m);
        for &h in &order {
            code.push(label[self.next(h) as usize]);
            code.push(label[self.twin(h) as usize]);
        }
        code
    }

    /// The triangle with one inner vertex joined to the three boundary vertices.
    pub fn cone() -> Self {
        Self::from_triangles(4, &[[0, 1, 3], [1, 2, 3], [2, 0, 3]], &[0, 1, 2]).expect("cone map")
    }

    pub fn triangle() -> Self {
        Self::from_triangles(3, &[[0, 1, 2]], &[0, 1, 2]).expect("bare triangle")
    }
}

/// Triangulation with three marked boundary edges `a`, `b`, `c` (indices into
/// the boundary edge list) in counterclockwise order, `a` being the root edge.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MarkedTriangulation {
    pub map: Triangulation,
    pub a: usize,
    pub b: usize,
    pub c: usize,
}

impl MarkedTriangulation {
    pub fn new(map: Triangulation, a: usize, b: usize, c: usize) -> Result<Self> {
        let ell = map.boundary_len();
        let ok = a < ell && b < ell && c < ell && ccw_distinct(a, b, c, ell);
        if !ok {
            return Err(Error::Invalid("marked edges must be distinct and counterclockwise".into()));
        }
        Ok(MarkedTriangulation { map, a, b, c })
    }

    /// Marks the root edge and two further edges spaced roughly evenly.
    pub fn spread(map: Triangulation) -> Self {
        let ell = map.boundary_len();
        let b = (ell / 3).max(1);
        let c = (2 * ell / 3).max(b + 1);
        MarkedTriangulation { map, a: 0, b, c }
    }

    pub fn rotated(&self) -> Self {
        MarkedTriangulation { map: self.map.clone(), a: self.b, b: self.c, c: self.a }
    }
}

/// True iff `a`, `b`, `c` are distinct and appear in this cyclic order.
pub fn ccw_distinct(a: usize, b: usize, c: usize, ell: usize) -> bool {
    if a == b || b == c || a == c {
        return false;
    }
    let db = (b + ell - a) % ell;
    let dc = (c + ell - a) % ell;
    db < dc
}
