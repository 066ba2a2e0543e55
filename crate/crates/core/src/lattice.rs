//! Triangular lattice δT, δ-polygon approximations of planar domains,
//! hexagonal dual cells and quads.

use std::collections::{HashMap, HashSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::map::Triangulation;

pub const SQRT3: f64 = 1.732_050_807_568_877_2;
pub const SQRT3_2: f64 = SQRT3 / 2.0;

/// Axial neighbor offsets in counterclockwise order starting east.
pub const DIRECTIONS: [(i64, i64); 6] = [(1, 0), (0, 1), (-1, 1), (-1, 0), (0, -1), (1, -1)];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct LatticePoint {
    pub i: i64,
    pub j: i64,
}

impl LatticePoint {
    pub const fn new(i: i64, j: i64) -> Self {
        LatticePoint { i, j }
    }

    /// Plane position δ·(i + j/2, j·√3/2).
    pub fn position(self, delta: f64) -> [f64; 2] {
        [delta * (self.i as f64 + 0.5 * self.j as f64), delta * SQRT3_2 * self.j as f64]
    }

    pub fn offset(self, d: (i64, i64)) -> Self {
        LatticePoint::new(self.i + d.0, self.j + d.1)
    }

    pub fn neighbors(self) -> [LatticePoint; 6] {
        DIRECTIONS.map(|d| self.offset(d))
    }
}

/// A Jordan domain given either exactly (disk) or as a simple polygon.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub enum Shape {
    Disk { center: [f64; 2], radius: f64 },
    Polygon(Vec<[f64; 2]>),
}

impl Shape {
    pub fn unit_disk() -> Self {
        Shape::Disk { center: [0.0, 0.0], radius: 1.0 }
    }

    /// Equilateral triangle with corners (0,0), (s,0), (s/2, s√3/2).
    pub fn equilateral_triangle(side: f64) -> Self {
        Shape::Polygon(vec![[0.0, 0.0], [side, 0.0], [0.5 * side, SQRT3_2 * side]])
    }

    /// 60° rhombus with corners 0, s, s(3/2, √3/2), s(1/2, √3/2).
    pub fn rhombus(side: f64) -> Self {
        Shape::Polygon(vec![[0.0, 0.0], [side, 0.0], [1.5 * side, SQRT3_2 * side], [0.5 * side, SQRT3_2 * side]])
    }

    pub fn rectangle(w: f64, h: f64) -> Self {
        Shape::Polygon(vec![[0.0, 0.0], [w, 0.0], [w, h], [0.0, h]])
    }

    /// Polygon through `samples` points of a closed parametric curve on [0,1).
    pub fn parametric<F: Fn(f64) -> [f64; 2]>(curve: F, samples: usize) -> Self {
        Shape::Polygon((0..samples).map(|k| curve(k as f64 / samples as f64)).collect())
    }

    /// Point strictly inside with clearance `tol` from the boundary.
    pub fn contains(&self, p: [f64; 2], tol: f64) -> bool {
        match self {
            Shape::Disk { center, radius } => {
                let dx = p[0] - center[0];
                let dy = p[1] - center[1];
                (dx * dx + dy * dy).sqrt() < radius - tol
            }
            Shape::Polygon(vs) => point_in_polygon(vs, p) && distance_to_polyline(vs, p) > tol,
        }
    }

    /// Point in the closure, up to `tol`.
    pub fn contains_closed(&self, p: [f64; 2], tol: f64) -> bool {
        match self {
            Shape::Disk { center, radius } => {
                let dx = p[0] - center[0];
                let dy = p[1] - center[1];
                (dx * dx + dy * dy).sqrt() <= radius + tol
            }
            Shape::Polygon(vs) => point_in_polygon(vs, p) || distance_to_polyline(vs, p) <= tol,
        }
    }

    fn bbox(&self) -> [f64; 4] {
        match self {
            Shape::Disk { center, radius } => {
                [center[0] - radius, center[1] - radius, center[0] + radius, center[1] + radius]
            }
            Shape::Polygon(vs) => {
                let mut b = [f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY];
                for v in vs {
                    b[0] = b[0].min(v[0]);
                    b[1] = b[1].min(v[1]);
                    b[2] = b[2].max(v[0]);
                    b[3] = b[3].max(v[1]);
                }
                b
            }
        }
    }
}

/// Even-odd point-in-polygon test.
pub fn point_in_polygon(vs: &[[f64; 2]], p: [f64; 2]) -> bool {
    let mut inside = false;
    let n = vs.len();
    let mut j = n - 1;
    for i in 0..n {
        let (a, b) = (vs[i], vs[j]);
        if (a[1] > p[1]) != (b[1] > p[1]) {
            let x = a[0] + (p[1] - a[1]) / (b[1] - a[1]) * (b[0] - a[0]);
            if p[0] < x {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

pub fn distance_to_segment(a: [f64; 2], b: [f64; 2], p: [f64; 2]) -> f64 {
    let d = [b[0] - a[0], b[1] - a[1]];
    let len2 = d[0] * d[0] + d[1] * d[1];
    let t = if len2 == 0.0 { 0.0 } else { (((p[0] - a[0]) * d[0] + (p[1] - a[1]) * d[1]) / len2).clamp(0.0, 1.0) };
    let q = [a[0] + t * d[0], a[1] + t * d[1]];
    ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt()
}

fn distance_to_polyline(vs: &[[f64; 2]], p: [f64; 2]) -> f64 {
    let n = vs.len();
    (0..n).map(|i| distance_to_segment(vs[i], vs[(i + 1) % n], p)).fold(f64::INFINITY, f64::min)
}

pub fn polygon_area(vs: &[[f64; 2]]) -> f64 {
    let n = vs.len();
    0.5 * (0..n).map(|i| vs[i][0] * vs[(i + 1) % n][1] - vs[(i + 1) % n][0] * vs[i][1]).sum::<f64>()
}

#[derive(Clone, Copy, Debug)]
pub struct DomainOptions {
    /// Lattice points closer than this to ∂D count as outside.
    pub eps_geom: f64,
}

impl Default for DomainOptions {
    fn default() -> Self {
        DomainOptions { eps_geom: 1e-9 }
    }
}

/// A δ-polygon: connected inner vertex set and the simple lattice cycle
/// enclosing it. Vertex ids list the boundary counterclockwise first,
/// followed by inner vertices in lexicographic order.
#[derive(Clone, Debug)]
pub struct LatticeDomain {
    delta: f64,
    points: Vec<LatticePoint>,
    num_boundary: usize,
    index: HashMap<LatticePoint, u32>,
    adjacency: Vec<[u32; 6]>,
    triangles: Vec<[u32; 3]>,
}

impl PartialEq for LatticeDomain {
    fn eq(&self, other: &Self) -> bool {
        self.delta == other.delta && self.points == other.points && self.num_boundary == other.num_boundary
    }
}

#[derive(Serialize, Deserialize)]
struct DomainJson {
    delta: f64,
    inner: Vec<[i64; 2]>,
    boundary: Vec<[i64; 2]>,
}

impl Serialize for LatticeDomain {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        DomainJson {
            delta: self.delta,
            inner: self.inner().iter().map(|p| [p.i, p.j]).collect(),
            boundary: self.boundary().iter().map(|p| [p.i, p.j]).collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for LatticeDomain {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let j = DomainJson::deserialize(d)?;
        let inner: Vec<LatticePoint> = j.inner.iter().map(|p| LatticePoint::new(p[0], p[1])).collect();
        let boundary: Vec<LatticePoint> = j.boundary.iter().map(|p| LatticePoint::new(p[0], p[1])).collect();
        LatticeDomain::from_parts(j.delta, inner, boundary).map_err(serde::de::Error::custom)
    }
}

fn tri_key(a: LatticePoint, up: bool) -> (i64, i64, bool) {
    (a.i, a.j, up)
}

/// Vertices of the up triangle at p (p, p+e₁, p+e₂) and the down triangle (p+e₁, p+e₁+e₂, p+e₂).
fn triangle_points(i: i64, j: i64, up: bool) -> [LatticePoint; 3] {
    if up {
        [LatticePoint::new(i, j), LatticePoint::new(i + 1, j), LatticePoint::new(i, j + 1)]
    } else {
        [LatticePoint::new(i + 1, j), LatticePoint::new(i + 1, j + 1), LatticePoint::new(i, j + 1)]
    }
}

/// The six triangles around p, as keys.
fn triangles_around(p: LatticePoint) -> [(i64, i64, bool); 6] {
    let (i, j) = (p.i, p.j);
    [
        tri_key(p, true),
        (i - 1, j, false),
        (i - 1, j, true),
        (i - 1, j - 1, false),
        (i, j - 1, true),
        (i, j - 1, false),
    ]
}

impl LatticeDomain {
    /// δ-approximation of `shape`: the inner vertex set is the largest connected
    /// component of lattice points inside the shape (ties broken by the
    /// component containing the lexicographically smallest point), trimmed until
    /// its enclosing lattice cycle is simple.
    pub fn build(shape: &Shape, delta: f64, opts: DomainOptions) -> Result<Self> {
        if !(delta > 0.0) {
            return Err(Error::Invalid("mesh size must be positive".into()));
        }
        let bb = shape.bbox();
        let jmin = (bb[1] / (delta * SQRT3_2)).floor() as i64 - 1;
        let jmax = (bb[3] / (delta * SQRT3_2)).ceil() as i64 + 1;
        let mut inside = HashSet::new();
        for j in jmin..=jmax {
            let imin = (bb[0] / delta - 0.5 * j as f64).floor() as i64 - 1;
            let imax = (bb[2] / delta - 0.5 * j as f64).ceil() as i64 + 1;
            for i in imin..=imax {
                let p = LatticePoint::new(i, j);
                if shape.contains(p.position(delta), opts.eps_geom) {
                    inside.insert(p);
                }
            }
        }
        let mut inner = largest_component(&inside).ok_or(Error::EmptyApproximation)?;
        loop {
            match enclosing_cycle(&inner) {
                Ok(boundary) => {
                    let boundary = grow_ears(boundary, &inner, |p| shape.contains_closed(p.position(delta), opts.eps_geom));
                    return Self::assemble(delta, inner, boundary);
                }
                Err(defects) => {
                    for d in defects {
                        for q in d.neighbors() {
                            inner.remove(&q);
                        }
                    }
                    inner = largest_component(&inner).ok_or(Error::EmptyApproximation)?;
                }
            }
        }
    }

    /// Rebuilds a domain from its inner set and boundary cycle, checking the invariants.
    pub fn from_parts(delta: f64, inner: Vec<LatticePoint>, boundary: Vec<LatticePoint>) -> Result<Self> {
        let set: HashSet<LatticePoint> = inner.iter().copied().collect();
        let tight = enclosing_cycle(&set).map_err(|_| Error::Invalid("inner set has no simple enclosing cycle".into()))?;
        let on_cycle: HashSet<LatticePoint> = boundary.iter().copied().collect();
        if on_cycle.len() != boundary.len() || tight.iter().any(|p| !on_cycle.contains(p)) || boundary.iter().any(|p| set.contains(p)) {
            return Err(Error::Invalid("boundary cycle does not enclose the inner set".into()));
        }
        let n = boundary.len();
        for k in 0..n {
            let (a, b) = (boundary[k], boundary[(k + 1) % n]);
            if !DIRECTIONS.contains(&(b.i - a.i, b.j - a.j)) {
                return Err(Error::Invalid("boundary cycle is not a lattice path".into()));
            }
        }
        Self::assemble(delta, set, boundary)
    }

    fn assemble(delta: f64, inner: HashSet<LatticePoint>, boundary: Vec<LatticePoint>) -> Result<Self> {
        let mut inner: Vec<LatticePoint> = inner.into_iter().collect();
        inner.sort();
        let num_boundary = boundary.len();
        let mut points = boundary;
        points.extend(inner);
        let index: HashMap<LatticePoint, u32> = points.iter().enumerate().map(|(k, &p)| (p, k as u32)).collect();
        let adjacency = points
            .iter()
            .map(|p| p.neighbors().map(|q| index.get(&q).copied().unwrap_or(u32::MAX)))
            .collect();
        let mut seen = HashSet::new();
        let mut triangles = Vec::new();
        for p in &points[num_boundary..] {
            for key in triangles_around(*p) {
                if seen.insert(key) {
                    let t = triangle_points(key.0, key.1, key.2);
                    triangles.push(t.map(|q| index[&q]));
                }
            }
        }
        // triangles spanned by three boundary vertices inside the cycle
        let poly: Vec<[f64; 2]> = points[..num_boundary].iter().map(|p| p.position(1.0)).collect();
        for p in &points[..num_boundary] {
            for key in triangles_around(*p) {
                if !seen.insert(key) {
                    continue;
                }
                let t = triangle_points(key.0, key.1, key.2);
                let ids: Vec<u32> = t.iter().filter_map(|q| index.get(q).copied()).collect();
                if ids.len() < 3 || ids.iter().any(|&x| x as usize >= num_boundary) {
                    continue;
                }
                let pos = t.map(|q| q.position(1.0));
                let c = [(pos[0][0] + pos[1][0] + pos[2][0]) / 3.0, (pos[0][1] + pos[1][1] + pos[2][1]) / 3.0];
                if point_in_polygon(&poly, c) {
                    triangles.push([ids[0], ids[1], ids[2]]);
                }
            }
        }
        triangles.sort();
        Ok(LatticeDomain { delta, points, num_boundary, index, adjacency, triangles })
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }
    pub fn hexagon_area(&self) -> f64 {
        self.delta * self.delta * SQRT3_2
    }
    pub fn num_vertices(&self) -> usize {
        self.points.len()
    }
    pub fn num_boundary(&self) -> usize {
        self.num_boundary
    }
    pub fn num_inner(&self) -> usize {
        self.points.len() - self.num_boundary
    }
    pub fn boundary(&self) -> &[LatticePoint] {
        &self.points[..self.num_boundary]
    }
    pub fn inner(&self) -> &[LatticePoint] {
        &self.points[self.num_boundary..]
    }
    pub fn point(&self, id: u32) -> LatticePoint {
        self.points[id as usize]
    }
    pub fn points(&self) -> &[LatticePoint] {
        &self.points
    }
    pub fn id(&self, p: LatticePoint) -> Option<u32> {
        self.index.get(&p).copied()
    }
    pub fn is_boundary(&self, id: u32) -> bool {
        (id as usize) < self.num_boundary
    }
    pub fn position(&self, id: u32) -> [f64; 2] {
        self.points[id as usize].position(self.delta)
    }
    /// Neighbor ids by direction; `u32::MAX` where the lattice neighbor is not in the domain.
    pub fn neighbor_ids(&self, id: u32) -> &[u32; 6] {
        &self.adjacency[id as usize]
    }
    pub fn triangles(&self) -> &[[u32; 3]] {
        &self.triangles
    }
    pub fn boundary_polygon(&self) -> Vec<[f64; 2]> {
        self.boundary().iter().map(|p| p.position(self.delta)).collect()
    }
    pub fn area(&self) -> f64 {
        polygon_area(&self.boundary_polygon())
    }

    /// Voronoi hexagon of `p` (corners at the centers of the six surrounding triangles).
    pub fn hexagon_cell(&self, p: LatticePoint) -> Result<[[f64; 2]; 6]> {
        if !self.index.contains_key(&p) {
            return Err(Error::UnknownVertex);
        }
        Ok(hexagon(p, self.delta))
    }

    /// Counterclockwise boundary arc from position `p` to `q`, endpoints included.
    pub fn boundary_arc(&self, p: usize, q: usize) -> Result<Vec<LatticePoint>> {
        let l = self.num_boundary;
        if p >= l || q >= l {
            return Err(Error::Invalid("boundary position out of range".into()));
        }
        if p == q {
            return Err(Error::SamePosition);
        }
        let len = (q + l - p) % l + 1;
        Ok((0..len).map(|k| self.points[(p + k) % l]).collect())
    }

    /// The δ-polygon as a half-edge triangulation sharing this domain's vertex ids.
    pub fn to_triangulation(&self) -> Triangulation {
        let boundary: Vec<u32> = (0..self.num_boundary as u32).collect();
        Triangulation::from_triangles(self.points.len(), &self.triangles, &boundary).expect("lattice domain triangulation")
    }

    /// Boundary position of the lattice point nearest to `x`.
    pub fn nearest_boundary_position(&self, x: [f64; 2]) -> usize {
        let mut best = (f64::INFINITY, 0);
        for k in 0..self.num_boundary {
            let p = self.position(k as u32);
            let d = (p[0] - x[0]).powi(2) + (p[1] - x[1]).powi(2);
            if d < best.0 {
                best = (d, k);
            }
        }
        best.1
    }
}

pub fn hexagon(p: LatticePoint, delta: f64) -> [[f64; 2]; 6] {
    let c = p.position(delta);
    let r = delta / SQRT3;
    std::array::from_fn(|k| {
        let a = std::f64::consts::PI / 6.0 + k as f64 * std::f64::consts::PI / 3.0;
        [c[0] + r * a.cos(), c[1] + r * a.sin()]
    })
}

fn largest_component(set: &HashSet<LatticePoint>) -> Option<HashSet<LatticePoint>> {
    let mut sorted: Vec<LatticePoint> = set.iter().copied().collect();
    sorted.sort();
    let mut seen: HashSet<LatticePoint> = HashSet::with_capacity(set.len());
    let mut best: Option<Vec<LatticePoint>> = None;
    for &s in &sorted {
        if seen.contains(&s) {
            continue;
        }
        let mut comp = vec![s];
        seen.insert(s);
        let mut q = VecDeque::from([s]);
        while let Some(p) = q.pop_front() {
            for n in p.neighbors() {
                if set.contains(&n) && seen.insert(n) {
                    comp.push(n);
                    q.push_back(n);
                }
            }
        }
        // components are discovered in order of their smallest point, so strict > keeps the tie-break
        if best.as_ref().map_or(true, |b| comp.len() > b.len()) {
            best = Some(comp);
        }
    }
    best.map(|b| b.into_iter().collect())
}

/// Boundary cycle of the union of lattice triangles touching `inner`. On
/// failure returns the offending non-inner vertices: pinch points, enclosed
/// vertices and vertices of hole cycles.
fn enclosing_cycle(inner: &HashSet<LatticePoint>) -> std::result::Result<Vec<LatticePoint>, Vec<LatticePoint>> {
    let mut edges: HashSet<(LatticePoint, LatticePoint)> = HashSet::new();
    for &p in inner {
        for (i, j, up) in triangles_around(p) {
            let t = triangle_points(i, j, up);
            for k in 0..3 {
                edges.insert((t[k], t[(k + 1) % 3]));
            }
        }
    }
    let mut succ: HashMap<LatticePoint, Vec<LatticePoint>> = HashMap::new();
    for &(a, b) in &edges {
        if !edges.contains(&(b, a)) {
            succ.entry(a).or_default().push(b);
        }
    }
    let mut defects: Vec<LatticePoint> = succ.iter().filter(|(_, v)| v.len() > 1).map(|(k, _)| *k).collect();
    for &p in inner {
        for q in p.neighbors() {
            if !inner.contains(&q) && !succ.contains_key(&q) {
                defects.push(q);
            }
        }
    }
    if !defects.is_empty() {
        defects.sort();
        defects.dedup();
        return Err(defects);
    }
    let mut starts: Vec<LatticePoint> = succ.keys().copied().collect();
    starts.sort();
    let mut visited: HashSet<LatticePoint> = HashSet::new();
    let mut cycles = Vec::new();
    for s in starts {
        if visited.contains(&s) {
            continue;
        }
        let mut cyc = vec![s];
        visited.insert(s);
        let mut cur = succ[&s][0];
        while cur != s {
            visited.insert(cur);
            cyc.push(cur);
            cur = succ[&cur][0];
        }
        cycles.push(cyc);
    }
    if cycles.len() == 1 {
        return Ok(cycles.pop().unwrap());
    }
    let area = |c: &Vec<LatticePoint>| polygon_area(&c.iter().map(|p| p.position(1.0)).collect::<Vec<_>>());
    let outer = (0..cycles.len()).max_by(|&a, &b| area(&cycles[a]).total_cmp(&area(&cycles[b]))).unwrap();
    Err(cycles.into_iter().enumerate().filter(|(k, _)| *k != outer).flat_map(|(_, c)| c).collect())
}

/// Attaches ear triangles outside boundary edges whose apex is a new lattice
/// point accepted by `admissible`. The inner vertex set is unchanged.
fn grow_ears<F: Fn(LatticePoint) -> bool>(mut cycle: Vec<LatticePoint>, inner: &HashSet<LatticePoint>, admissible: F) -> Vec<LatticePoint> {
    let mut present: HashSet<LatticePoint> = cycle.iter().chain(inner.iter()).copied().collect();
    loop {
        let mut grown = false;
        let mut k = 0;
        while k < cycle.len() {
            let (u, w) = (cycle[k], cycle[(k + 1) % cycle.len()]);
            let dir = DIRECTIONS.iter().position(|&d| d == (w.i - u.i, w.j - u.j)).expect("lattice step");
            let x = u.offset(DIRECTIONS[(dir + 5) % 6]);
            if !present.contains(&x) && admissible(x) {
                present.insert(x);
                cycle.insert(k + 1, x);
                grown = true;
            }
            k += 1;
        }
        if !grown {
            break;
        }
    }
    let start = (0..cycle.len()).min_by_key(|&k| cycle[k]).unwrap();
    cycle.rotate_left(start);
    cycle
}

/// Four counterclockwise boundary positions of a domain; side k runs from
/// position k to position k+1.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Quad {
    pub p: [usize; 4],
}

impl Quad {
    pub fn new(domain: &LatticeDomain, p: [usize; 4]) -> Result<Self> {
        let l = domain.num_boundary();
        if p.iter().any(|&x| x >= l) {
            return Err(Error::Invalid("quad position out of range".into()));
        }
        let d: Vec<usize> = (0..4).map(|k| (p[k] + l - p[0]) % l).collect();
        if !(d[0] < d[1] && d[1] < d[2] && d[2] < d[3]) {
            return Err(Error::Invalid("quad positions must be distinct and counterclockwise".into()));
        }
        Ok(Quad { p })
    }

    /// Boundary positions of side `k` (0-based), endpoints included.
    pub fn side(&self, domain: &LatticeDomain, k: usize) -> Vec<usize> {
        let l = domain.num_boundary();
        let (a, b) = (self.p[k % 4], self.p[(k + 1) % 4]);
        let len = (b + l - a) % l + 1;
        (0..len).map(|t| (a + t) % l).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flood_fill_oracle(shape: &Shape, delta: f64) -> usize {
        // independent scan: BFS from the lattice point nearest the center
        let mut seen = HashSet::new();
        let mut q = VecDeque::new();
        let mut best = 0;
        for j in -40i64..=40 {
            for i in -40i64..=40 {
                let p = LatticePoint::new(i, j);
                if seen.contains(&p) || !shape.contains(p.position(delta), 1e-9) {
                    continue;
                }
                let mut size = 0;
                seen.insert(p);
                q.push_back(p);
                while let Some(x) = q.pop_front() {
                    size += 1;
                    for (di, dj) in DIRECTIONS {
                        let y = LatticePoint::new(x.i + di, x.j + dj);
                        if !seen.contains(&y) && shape.contains(y.position(delta), 1e-9) {
                            seen.insert(y);
                            q.push_back(y);
                        }
                    }
                }
                best = best.max(size);
            }
        }
        best
    }

    #[test]
    fn disk_matches_flood_fill() {
        let d = LatticeDomain::build(&Shape::unit_disk(), 0.1, DomainOptions::default()).unwrap();
        assert_eq!(d.num_inner(), flood_fill_oracle(&Shape::unit_disk(), 0.1));
        for p in d.inner() {
            for q in p.neighbors() {
                assert!(d.id(q).is_some());
            }
        }
    }

    #[test]
    fn coarse_disk_is_deterministic() {
        let a = LatticeDomain::build(&Shape::unit_disk(), 0.9, DomainOptions::default()).unwrap();
        let b = LatticeDomain::build(&Shape::unit_disk(), 0.9, DomainOptions::default()).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.num_inner(), 7);
        let single = LatticeDomain::build(&Shape::unit_disk(), 1.5, DomainOptions::default()).unwrap();
        assert_eq!(single.num_inner(), 1);
        assert_eq!(single.num_boundary(), 6);
        assert!(matches!(
            LatticeDomain::build(&Shape::Disk { center: [0.3, 0.3], radius: 0.2 }, 1.0, DomainOptions::default()),
            Err(Error::EmptyApproximation)
        ));
    }

    #[test]
    fn polygon_is_fixed_point() {
        let d = LatticeDomain::build(&Shape::unit_disk(), 0.2, DomainOptions::default()).unwrap();
        let again = LatticeDomain::build(&Shape::Polygon(d.boundary_polygon()), 0.2, DomainOptions::default()).unwrap();
        assert_eq!(d.inner(), again.inner());
    }

    #[test]
    fn euler_characteristic() {
        for delta in [0.3, 0.1, 0.05] {
            let d = LatticeDomain::build(&Shape::unit_disk(), delta, DomainOptions::default()).unwrap();
            let m = d.to_triangulation();
            let v = m.num_vertices() as i64;
            let e = m.num_edges() as i64;
            let f = m.num_faces() as i64;
            assert_eq!(v - e + f, 2);
            assert_eq!(m.boundary_len(), d.num_boundary());
        }
    }

    #[test]
    fn finer_mesh_has_more_inner_vertices() {
        for shape in [Shape::unit_disk(), Shape::equilateral_triangle(1.0), Shape::rectangle(2.0, 1.0)] {
            let mut last = 0;
            for delta in [0.2, 0.1, 0.05, 0.025] {
                let d = LatticeDomain::build(&shape, delta, DomainOptions::default()).unwrap();
                assert!(d.num_inner() >= last);
                last = d.num_inner();
            }
        }
    }

    #[test]
    fn lattice_triangle_domain() {
        let l = 10;
        let d = LatticeDomain::build(&Shape::equilateral_triangle(1.0), 1.0 / l as f64, DomainOptions::default()).unwrap();
        assert_eq!(d.num_boundary(), 3 * l);
        assert_eq!(d.num_inner(), (l - 1) * (l - 2) / 2);
        assert_eq!(d.boundary()[0], LatticePoint::new(0, 0));
        assert_eq!(d.boundary()[1], LatticePoint::new(1, 0));
    }

    #[test]
    fn hexagon_area_and_sharing() {
        let d = LatticeDomain::build(&Shape::unit_disk(), 0.25, DomainOptions::default()).unwrap();
        let p = LatticePoint::new(0, 0);
        let h = d.hexagon_cell(p).unwrap();
        let a = polygon_area(&h);
        assert!((a - d.hexagon_area()).abs() < 1e-12 * a);
        let q = LatticePoint::new(1, 0);
        let hq = d.hexagon_cell(q).unwrap();
        let shared = h
            .iter()
            .filter(|x| hq.iter().any(|y| (x[0] - y[0]).abs() < 1e-12 && (x[1] - y[1]).abs() < 1e-12))
            .count();
        assert_eq!(shared, 2);
        assert!(matches!(d.hexagon_cell(LatticePoint::new(100, 0)), Err(Error::UnknownVertex)));
    }

    #[test]
    fn hexagons_tile_the_polygon() {
        let d = LatticeDomain::build(&Shape::unit_disk(), 0.2, DomainOptions::default()).unwrap();
        let poly = d.boundary_polygon();
        let cells: Vec<[[f64; 2]; 6]> = d.points().iter().map(|p| hexagon(*p, d.delta())).collect();
        let mut k = 0u64;
        for a in 0..60 {
            for b in 0..60 {
                let x = [-1.0 + (a as f64 + 0.37) / 30.0, -1.0 + (b as f64 + 0.61) / 30.0];
                let hits = cells.iter().filter(|c| point_in_polygon(&c[..], x)).count();
                assert!(hits <= 1);
                if point_in_polygon(&poly, x) {
                    assert_eq!(hits, 1);
                    k += 1;
                }
            }
        }
        assert!(k > 0);
    }

    #[test]
    fn arcs() {
        let d = LatticeDomain::build(&Shape::unit_disk(), 1.5, DomainOptions::default()).unwrap();
        assert_eq!(d.boundary_arc(0, 3).unwrap().len(), 4);
        assert_eq!(d.boundary_arc(2, 3).unwrap().len(), 2);
        assert!(matches!(d.boundary_arc(1, 1), Err(Error::SamePosition)));
        let a = d.boundary_arc(1, 4).unwrap();
        let b = d.boundary_arc(4, 1).unwrap();
        let mut all: Vec<LatticePoint> = a.iter().chain(b.iter()).copied().collect();
        all.sort();
        all.dedup();
        assert_eq!(all.len(), 6);
        assert_eq!(a.len() + b.len(), 8);
    }

    #[test]
    fn json_round_trip() {
        let d = LatticeDomain::build(&Shape::unit_disk(), 0.3, DomainOptions::default()).unwrap();
        let s = serde_json::to_string(&d).unwrap();
        let back: LatticeDomain = serde_json::from_str(&s).unwrap();
        assert_eq!(back, d);
    }
}
