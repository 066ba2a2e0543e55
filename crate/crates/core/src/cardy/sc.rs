//! Schwarz–Christoffel maps from the upper half-plane onto convex polygons.
//!
//! Prevertices live on the real line with one vertex sent to infinity.
//! Integrals start at the nearest prevertex and use compound Gauss–Jacobi
//! rules: the first panel absorbs the endpoint singularity, later panels are
//! Gauss–Legendre, and every panel is at most half as long as its distance to
//! the nearest other singularity.

use nalgebra::{Complex, DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use super::BaryCoords;
use crate::error::{Error, Result};

type C64 = Complex<f64>;

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct ScOptions {
    /// Quadrature nodes per panel.
    pub nodes: usize,
    /// Queries closer than this to a polygon corner are rejected. A query
    /// exactly at a corner is answered from its prevertex.
    pub corner_radius: f64,
    /// Residual tolerance for the parameter problem and the inversion.
    pub tol: f64,
}

impl Default for ScOptions {
    fn default() -> Self {
        ScOptions { nodes: 24, corner_radius: 1e-3, tol: 1e-13 }
    }
}

/// Gauss–Jacobi nodes and weights for the weight (1−x)^α (1+x)^β on [−1,1].
pub fn gauss_jacobi(n: usize, alpha: f64, beta: f64) -> (Vec<f64>, Vec<f64>) {
    let s = alpha + beta;
    let mut t = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        let k = i as f64;
        t[(i, i)] = if i == 0 {
            (beta - alpha) / (s + 2.0)
        } else {
            (beta * beta - alpha * alpha) / ((2.0 * k + s) * (2.0 * k + s + 2.0))
        };
    }
    for i in 1..n {
        let k = i as f64;
        let b = if i == 1 {
            4.0 * (1.0 + alpha) * (1.0 + beta) / ((2.0 + s).powi(2) * (3.0 + s))
        } else {
            4.0 * k * (k + alpha) * (k + beta) * (k + s) / ((2.0 * k + s).powi(2) * (2.0 * k + s + 1.0) * (2.0 * k + s - 1.0))
        };
        t[(i, i - 1)] = b.sqrt();
        t[(i - 1, i)] = b.sqrt();
    }
    let mu0 = 2f64.powf(s + 1.0) * gamma(alpha + 1.0) * gamma(beta + 1.0) / gamma(s + 2.0);
    let eig = SymmetricEigen::new(t);
    let mut pairs: Vec<(f64, f64)> = (0..n).map(|i| (eig.eigenvalues[i], mu0 * eig.eigenvectors[(0, i)].powi(2))).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs.into_iter().unzip()
}

/// z^b on the closed upper half-plane, argument taken in [0, π].
fn pow_h(z: C64, b: f64) -> C64 {
    if b == 0.0 {
        return C64::new(1.0, 0.0);
    }
    let arg = z.im.abs().atan2(z.re);
    C64::from_polar(z.norm().powf(b), b * arg)
}

struct Rule {
    x: Vec<f64>,
    w: Vec<f64>,
}

/// Half-plane Schwarz–Christoffel map onto a convex polygon.
pub struct ScMap {
    vertices: Vec<C64>,
    beta: Vec<f64>,
    /// Prevertices; the vertex at `infinite` holds `f64::INFINITY`.
    pre: Vec<f64>,
    infinite: usize,
    constant: C64,
    jacobi: Vec<Rule>,
    legendre: Rule,
    opts: ScOptions,
}

impl ScMap {
    /// `vertices` counterclockwise; prevertices of `zero`, `one`, `infinite`
    /// are pinned to 0, 1, ∞, which must appear in that counterclockwise order.
    pub fn new(vertices: &[[f64; 2]], zero: usize, one: usize, infinite: usize, opts: ScOptions) -> Result<Self> {
        let n = vertices.len();
        if n < 3 || zero >= n || one >= n || infinite >= n {
            return Err(Error::Invalid("polygon needs three vertices and valid marks".into()));
        }
        let vs: Vec<C64> = vertices.iter().map(|p| C64::new(p[0], p[1])).collect();
        let mut beta = Vec::with_capacity(n);
        let mut turning = 0.0;
        for k in 0..n {
            let din = vs[k] - vs[(k + n - 1) % n];
            let dout = vs[(k + 1) % n] - vs[k];
            if din.norm() == 0.0 || dout.norm() == 0.0 {
                return Err(Error::Invalid("repeated polygon vertex".into()));
            }
            let theta = (dout / din).arg();
            if theta < -1e-12 {
                return Err(Error::Invalid("polygon must be convex and counterclockwise".into()));
            }
            turning += theta;
            beta.push(-theta / std::f64::consts::PI);
        }
        if (turning - 2.0 * std::f64::consts::PI).abs() > 1e-9 {
            return Err(Error::Invalid("polygon must be simple and counterclockwise".into()));
        }
        let dist = |i: usize, j: usize| (j + n - i) % n;
        if !(dist(infinite, zero) < dist(infinite, one) && zero != infinite && one != zero && one != infinite) {
            return Err(Error::Invalid("pinned vertices out of counterclockwise order".into()));
        }
        let jacobi = beta.iter().map(|&b| gauss_jacobi(opts.nodes, 0.0, b)).map(|(x, w)| Rule { x, w }).collect();
        let (x, w) = gauss_jacobi(opts.nodes, 0.0, 0.0);
        let mut map = ScMap {
            vertices: vs,
            beta,
            pre: vec![0.0; n],
            infinite,
            constant: C64::new(1.0, 0.0),
            jacobi,
            legendre: Rule { x, w },
            opts,
        };
        map.solve(zero, one)?;
        Ok(map)
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }
    pub fn prevertex(&self, k: usize) -> f64 {
        self.pre[k]
    }
    pub fn vertex(&self, k: usize) -> [f64; 2] {
        [self.vertices[k].re, self.vertices[k].im]
    }

    /// Finite prevertex indices along the real line, left to right.
    fn order(&self) -> Vec<usize> {
        let n = self.vertices.len();
        (1..n).map(|s| (self.infinite + s) % n).collect()
    }

    fn place(&mut self, zero: usize, one: usize, y: &[f64]) {
        let n = self.vertices.len();
        let ord = self.order();
        let iz = ord.iter().position(|&k| k == zero).unwrap();
        let io = ord.iter().position(|&k| k == one).unwrap();
        let mut it = y.iter();
        let mut acc = 0.0;
        for i in (0..iz).rev() {
            acc -= it.next().unwrap().exp();
            self.pre[ord[i]] = acc;
        }
        let m = io - iz - 1;
        let gaps: Vec<f64> = std::iter::once(1.0).chain((0..m).map(|_| it.next().unwrap().exp())).collect();
        let total: f64 = gaps.iter().sum();
        let mut acc = 0.0;
        self.pre[zero] = 0.0;
        for i in 0..m {
            acc += gaps[i] / total;
            self.pre[ord[iz + 1 + i]] = acc;
        }
        self.pre[one] = 1.0;
        let mut acc = 1.0;
        for &k in &ord[io + 1..] {
            acc += it.next().unwrap().exp();
            self.pre[k] = acc;
        }
        self.pre[self.infinite] = f64::INFINITY;
        debug_assert_eq!(ord.len(), n - 1);
    }

    fn residual(&self) -> DVector<f64> {
        let ord = self.order();
        let sides: Vec<(f64, f64)> = ord
            .windows(2)
            .map(|p| (self.side_integral(p[0], p[1]).norm().ln(), (self.vertices[p[1]] - self.vertices[p[0]]).norm().ln()))
            .collect();
        DVector::from_iterator(sides.len() - 1, sides[1..].iter().map(|&(i, l)| (i - sides[0].0) - (l - sides[0].1)))
    }

    fn solve(&mut self, zero: usize, one: usize) -> Result<()> {
        let n = self.vertices.len();
        let mut y = vec![0.0; n - 3];
        self.place(zero, one, &y);
        if n > 3 {
            let mut r = self.residual();
            let mut iter = 0;
            while r.norm() > self.opts.tol {
                iter += 1;
                if iter > 100 {
                    return Err(Error::NoConvergence(format!("prevertex problem, residual {:.2e}", r.norm())));
                }
                let h = 1e-7;
                let mut jac = DMatrix::<f64>::zeros(n - 3, n - 3);
                for j in 0..n - 3 {
                    let mut yp = y.clone();
                    yp[j] += h;
                    self.place(zero, one, &yp);
                    let rp = self.residual();
                    jac.set_column(j, &((rp - &r) / h));
                }
                let step = jac.lu().solve(&(-&r)).ok_or_else(|| Error::NoConvergence("singular Jacobian".into()))?;
                let mut t = 1.0;
                loop {
                    let yt: Vec<f64> = y.iter().zip(step.iter()).map(|(a, d)| a + t * d).collect();
                    self.place(zero, one, &yt);
                    let rt = self.residual();
                    if rt.norm() < r.norm() || t < 1e-6 {
                        y = yt;
                        r = rt;
                        break;
                    }
                    t *= 0.5;
                }
            }
            self.place(zero, one, &y);
        }
        let ord = self.order();
        self.constant = (self.vertices[ord[1]] - self.vertices[ord[0]]) / self.side_integral(ord[0], ord[1]);
        Ok(())
    }

    fn integrand(&self, t: C64, skip: Option<usize>) -> C64 {
        let mut f = C64::new(1.0, 0.0);
        for k in 0..self.pre.len() {
            if k != self.infinite && Some(k) != skip {
                f *= pow_h(t - self.pre[k], self.beta[k]);
            }
        }
        f
    }

    fn nearest_other(&self, p: C64, skip: Option<usize>) -> f64 {
        let mut d = f64::INFINITY;
        for k in 0..self.pre.len() {
            if k != self.infinite && Some(k) != skip {
                d = d.min((p - self.pre[k]).norm());
            }
        }
        d
    }

    /// ∫ from prevertex k to w of the integrand, without the constant.
    fn integral_from(&self, k: usize, w: C64) -> C64 {
        let mut total = C64::new(0.0, 0.0);
        let mut start = C64::new(self.pre[k], 0.0);
        let mut first = true;
        for _ in 0..10_000 {
            let rem = w - start;
            let len = rem.norm();
            if len == 0.0 {
                break;
            }
            let reach = 0.5 * self.nearest_other(start, if first { Some(k) } else { None });
            let step = len.min(reach);
            let end = if step >= len { w } else { start + rem * (step / len) };
            let h = (end - start) * 0.5;
            if first {
                let rule = &self.jacobi[k];
                let mut s = C64::new(0.0, 0.0);
                for (x, wt) in rule.x.iter().zip(&rule.w) {
                    s += self.integrand(start + h * (1.0 + x), Some(k)) * *wt;
                }
                total += h * pow_h(h, self.beta[k]) * s;
            } else {
                let mut s = C64::new(0.0, 0.0);
                for (x, wt) in self.legendre.x.iter().zip(&self.legendre.w) {
                    s += self.integrand(start + h * (1.0 + x), None) * *wt;
                }
                total += h * s;
            }
            start = end;
            first = false;
            if step >= len {
                break;
            }
        }
        total
    }

    fn side_integral(&self, j: usize, k: usize) -> C64 {
        let mid = C64::new(0.5 * (self.pre[j] + self.pre[k]), 0.0);
        self.integral_from(j, mid) - self.integral_from(k, mid)
    }

    fn nearest_prevertex(&self, w: C64) -> usize {
        let mut best = (f64::INFINITY, 0);
        for k in 0..self.pre.len() {
            if k != self.infinite {
                let d = (w - self.pre[k]).norm();
                if d < best.0 {
                    best = (d, k);
                }
            }
        }
        best.1
    }

    /// Image of a point in the closed upper half-plane.
    pub fn forward(&self, w: [f64; 2]) -> [f64; 2] {
        let z = self.forward_c(C64::new(w[0], w[1]));
        [z.re, z.im]
    }

    fn forward_c(&self, w: C64) -> C64 {
        let k = self.nearest_prevertex(w);
        self.vertices[k] + self.constant * self.integral_from(k, w)
    }

    fn derivative(&self, w: C64) -> C64 {
        self.constant * self.integrand(w, None)
    }

    fn scale(&self) -> f64 {
        let c = self.vertices.iter().sum::<C64>() / self.vertices.len() as f64;
        self.vertices.iter().map(|v| (v - c).norm()).fold(0.0, f64::max)
    }

    /// Preimage of a point of the closed polygon: the prevertex for a corner,
    /// `None` for the corner sent to infinity.
    pub fn inverse(&self, z: [f64; 2]) -> Result<Option<[f64; 2]>> {
        let z = C64::new(z[0], z[1]);
        let scale = self.scale();
        for (k, v) in self.vertices.iter().enumerate() {
            let d = (z - v).norm();
            if d <= 1e-12 * scale {
                return Ok((k != self.infinite).then(|| [self.pre[k], 0.0]));
            }
            if d < self.opts.corner_radius && self.beta[k] != 0.0 {
                return Err(Error::QueryTooCloseToCorner { radius: self.opts.corner_radius });
            }
        }
        // continuation from an interior point, then Newton
        let mut w = C64::new(0.5, 0.5);
        let z0 = self.forward_c(w);
        let dz = z - z0;
        let steps = 32;
        let hs = 1.0 / steps as f64;
        let field = |w: C64| dz / self.derivative(w);
        let up = |w: C64| C64::new(w.re, w.im.max(0.0));
        for _ in 0..steps {
            let k1 = field(w);
            let k2 = field(up(w + k1 * (0.5 * hs)));
            let k3 = field(up(w + k2 * (0.5 * hs)));
            let k4 = field(up(w + k3 * hs));
            w = up(w + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (hs / 6.0));
        }
        for _ in 0..60 {
            let err = self.forward_c(w) - z;
            if err.norm() <= self.opts.tol * scale.max(1.0) * 10.0 {
                return Ok(Some([w.re, w.im]));
            }
            w = up(w - err / self.derivative(w));
        }
        let err = (self.forward_c(w) - z).norm();
        if err <= 1e-9 * scale {
            Ok(Some([w.re, w.im]))
        } else {
            Err(Error::NoConvergence(format!("inverse map, residual {err:.2e}")))
        }
    }
}

const DELTA_CORNERS: [[f64; 2]; 3] = [[0.0, 0.0], [1.0, 0.0], [0.5, 0.866_025_403_784_438_6]];

/// Cartesian point of the reference triangle for barycentric coordinates.
pub fn delta_point(b: BaryCoords) -> [f64; 2] {
    let c = DELTA_CORNERS;
    [b.x * c[0][0] + b.y * c[1][0] + b.z * c[2][0], b.x * c[0][1] + b.y * c[1][1] + b.z * c[2][1]]
}

/// Barycentric coordinates of a point of the reference triangle, clamped to
/// the closed simplex.
pub fn delta_bary(p: [f64; 2]) -> BaryCoords {
    let z = p[1] / DELTA_CORNERS[2][1];
    let y = p[0] - 0.5 * z;
    let x = 1.0 - y - z;
    let (x, y, z) = (x.max(0.0), y.max(0.0), z.max(0.0));
    let s = x + y + z;
    BaryCoords { x: x / s, y: y / s, z: z / s }
}

/// Conformal map from a convex polygon with three marked boundary points onto
/// the reference triangle, sending the marks to its corners (1,0,0), (0,1,0),
/// (0,0,1).
pub struct CardyMap {
    domain: ScMap,
    delta: ScMap,
    marks: [usize; 3],
}

impl CardyMap {
    /// Marks must lie on the boundary in counterclockwise order. Marks on the
    /// interior of a side become vertices with a straight angle.
    pub fn new(polygon: &[[f64; 2]], marks: [[f64; 2]; 3], opts: ScOptions) -> Result<Self> {
        let mut vs: Vec<[f64; 2]> = polygon.to_vec();
        let scale = vs.iter().flat_map(|p| p.iter()).fold(0.0f64, |m, x| m.max(x.abs())).max(1.0);
        for m in &marks {
            if vs.iter().any(|v| (v[0] - m[0]).hypot(v[1] - m[1]) <= 1e-12 * scale) {
                continue;
            }
            let n = vs.len();
            let side = (0..n).find(|&k| crate::lattice::distance_to_segment(vs[k], vs[(k + 1) % n], *m) <= 1e-12 * scale);
            match side {
                Some(k) => vs.insert(k + 1, *m),
                None => return Err(Error::Invalid("marked point is not on the boundary".into())),
            }
        }
        let idx: Vec<usize> = marks
            .iter()
            .map(|m| vs.iter().position(|v| (v[0] - m[0]).hypot(v[1] - m[1]) <= 1e-12 * scale).unwrap())
            .collect();
        let domain = ScMap::new(&vs, idx[0], idx[1], idx[2], opts)?;
        let delta = ScMap::new(&DELTA_CORNERS, 0, 1, 2, opts)?;
        Ok(CardyMap { domain, delta, marks: [idx[0], idx[1], idx[2]] })
    }

    pub fn domain_map(&self) -> &ScMap {
        &self.domain
    }
    pub fn marks(&self) -> [usize; 3] {
        self.marks
    }

    /// Barycentric image of a point of the closed polygon.
    pub fn map(&self, z: [f64; 2]) -> Result<BaryCoords> {
        match self.domain.inverse(z)? {
            None => Ok(BaryCoords { x: 0.0, y: 0.0, z: 1.0 }),
            Some(w) => Ok(delta_bary(self.delta.forward(w))),
        }
    }
}

/// The Cardy embedding of a convex polygon evaluated at each query.
pub fn riemann_to_delta(polygon: &[[f64; 2]], marks: [[f64; 2]; 3], queries: &[[f64; 2]], opts: ScOptions) -> Result<Vec<BaryCoords>> {
    let map = CardyMap::new(polygon, marks, opts)?;
    queries.iter().map(|&q| map.map(q)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tanh_sinh<F: Fn(f64) -> f64>(f: F, a: f64, b: f64) -> f64 {
        let h = 1.0 / 64.0;
        let half = 0.5 * (b - a);
        let mut s = 0.0;
        for k in -400..=400 {
            let t = k as f64 * h;
            let u = 0.5 * std::f64::consts::PI * t.sinh();
            let w = 0.5 * std::f64::consts::PI * t.cosh() / u.cosh().powi(2);
            // distance to the nearer endpoint, computed without cancellation
            let p = if u < 0.0 { a + 2.0 * half / (1.0 + (-2.0 * u).exp()) } else { b - 2.0 * half / (1.0 + (2.0 * u).exp()) };
            if p <= a || p >= b || w == 0.0 {
                continue;
            }
            s += w * f(p);
        }
        s * h * half
    }

    #[test]
    fn jacobi_rule_is_exact_on_monomials() {
        let (x, w) = gauss_jacobi(10, 0.0, -2.0 / 3.0);
        // ∫ (1+x)^β x^0 = 2^{β+1}/(β+1), ∫ (1+x)^{β+1} = 2^{β+2}/(β+2)
        let b = -2.0 / 3.0;
        let m0: f64 = w.iter().sum();
        let m1: f64 = x.iter().zip(&w).map(|(x, w)| (1.0 + x) * w).sum();
        assert!((m0 - 2f64.powf(b + 1.0) / (b + 1.0)).abs() < 1e-13);
        assert!((m1 - 2f64.powf(b + 2.0) / (b + 2.0)).abs() < 1e-13);
    }

    #[test]
    fn triangle_is_identity() {
        let m = CardyMap::new(&DELTA_CORNERS, DELTA_CORNERS, ScOptions::default()).unwrap();
        for q in [[0.5, 0.3], [0.2, 0.1], [0.7, 0.2], [0.5, 0.8], [0.3, 0.0]] {
            let b = m.map(q).unwrap();
            let p = delta_point(b);
            assert!((p[0] - q[0]).abs() < 1e-6 && (p[1] - q[1]).abs() < 1e-6, "{q:?} {p:?}");
        }
    }

    #[test]
    fn scaled_triangle_is_identity() {
        let s = 3.0;
        let poly: Vec<[f64; 2]> = DELTA_CORNERS.iter().map(|p| [s * p[0] + 1.0, s * p[1] - 2.0]).collect();
        let m = CardyMap::new(&poly, [poly[0], poly[1], poly[2]], ScOptions::default()).unwrap();
        let b = m.map([1.0 + s * 0.4, -2.0 + s * 0.25]).unwrap();
        let p = delta_point(b);
        assert!((p[0] - 0.4).abs() < 1e-6 && (p[1] - 0.25).abs() < 1e-6);
    }

    #[test]
    fn square_center_symmetry() {
        let sq = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
        // reflection in the anti-diagonal x + y = 1 swaps (1,0) and (0,1)
        let b = riemann_to_delta(&sq, [[1.0, 0.0], [1.0, 1.0], [0.0, 1.0]], &[[0.5, 0.5]], ScOptions::default()).unwrap()[0];
        assert!((b.x - b.z).abs() < 1e-9);
        assert!((b.x + b.y + b.z - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rectangle_corner_against_quadrature() {
        let rect = [[0.0, 0.0], [2.0, 0.0], [2.0, 1.0], [0.0, 1.0]];
        let b = riemann_to_delta(&rect, [[2.0, 0.0], [2.0, 1.0], [0.0, 1.0]], &[[0.0, 0.0]], ScOptions::default()).unwrap()[0];
        // the 2:1 rectangle has modulus k = 1/√2; its free corner's prevertex
        // after pinning the marks to 0, 1, ∞ is −(16 + 12√2)
        let lam = 16.0 + 12.0 * 2f64.sqrt();
        let beta = gamma(1.0 / 3.0).powi(2) / gamma(2.0 / 3.0);
        let i = tanh_sinh(|s| s.powf(-2.0 / 3.0) * (1.0 + s).powf(-2.0 / 3.0), 0.0, lam);
        let x = 1.0 - i / beta;
        assert!((b.x - x).abs() < 1e-8, "{} vs {}", b.x, x);
        assert!(b.y.abs() < 1e-12);
    }

    #[test]
    fn coordinates_sum_to_one_and_stay_inside() {
        let poly = [[0.0, 0.0], [3.0, 0.0], [4.0, 2.0], [1.0, 3.0], [-1.0, 1.5]];
        let m = CardyMap::new(&poly, [[1.5, 0.0], [4.0, 2.0], [1.0, 3.0]], ScOptions::default()).unwrap();
        for q in [[1.0, 1.0], [2.0, 2.0], [3.5, 1.0], [0.0, 1.0], [2.0, 0.0]] {
            let b = m.map(q).unwrap();
            assert!((b.x + b.y + b.z - 1.0).abs() < 1e-6 && b.x >= 0.0 && b.y >= 0.0 && b.z >= 0.0);
        }
        assert!(matches!(m.map([3.0001, 0.0]), Err(Error::QueryTooCloseToCorner { .. })));
        let mark = m.map([1.5, 0.0]).unwrap();
        assert!((mark.x - 1.0).abs() < 1e-9);
    }

    #[test]
    fn forward_hits_vertices() {
        let poly = [[0.0, 0.0], [3.0, 0.0], [4.0, 2.0], [1.0, 3.0], [-1.0, 1.5]];
        let m = ScMap::new(&poly, 0, 2, 3, ScOptions::default()).unwrap();
        for k in [0, 1, 2, 4] {
            let z = m.forward([m.prevertex(k), 0.0]);
            assert!((z[0] - poly[k][0]).abs() < 1e-10 && (z[1] - poly[k][1]).abs() < 1e-10, "{k} {z:?}");
        }
    }
}
