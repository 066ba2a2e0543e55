//! Zero-boundary lattice GFF, circle averages and GMC measures.

use std::collections::HashSet;
use std::sync::Arc;

use nalgebra::DMatrix;
use nalgebra_sparse::factorization::CscCholesky;
use nalgebra_sparse::ops::serial::spsolve_csc_lower_triangular;
use nalgebra_sparse::ops::Op;
use nalgebra_sparse::{CooMatrix, CscMatrix};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{LatticeDomain, LatticePoint, SQRT3, SQRT3_2};
use crate::measure::{Atom, AtomicMeasure, Location};
use crate::rng::stream;

/// LQG area exponent √(8/3).
pub const GAMMA: f64 = 1.632_993_161_855_452;
/// Pivotal clock exponent 1/√6.
pub const CLOCK_ALPHA: f64 = 0.408_248_290_463_863;

/// c_T with c_T·L⁻¹(x,y) ≈ −log|x−y| for the unit-weight triangular-lattice
/// Laplacian: the lattice Laplacian approximates −(3δ²/2)Δ and each site
/// carries area (√3/2)δ², giving 2π√3.
pub const GREEN_NORMALIZATION: f64 = 2.0 * std::f64::consts::PI * SQRT3;

/// Default regularization radius in units of δ.
pub const DEFAULT_RADIUS_STEPS: f64 = 4.0;

/// A lattice domain with point location for piecewise-linear interpolation.
#[derive(Debug)]
pub struct FieldGrid {
    domain: LatticeDomain,
    faces: HashSet<[u32; 3]>,
}

impl FieldGrid {
    pub fn new(domain: LatticeDomain) -> Self {
        let faces = domain
            .triangles()
            .iter()
            .map(|t| {
                let mut t = *t;
                t.sort_unstable();
                t
            })
            .collect();
        FieldGrid { domain, faces }
    }

    pub fn domain(&self) -> &LatticeDomain {
        &self.domain
    }

    /// Interpolation weights of `p` over the face containing it, if any.
    pub fn locate(&self, p: [f64; 2]) -> Option<[(u32, f64); 3]> {
        let d = self.domain.delta();
        let jf = p[1] / (d * SQRT3_2);
        let if_ = p[0] / d - jf / 2.0;
        let (i0, j0) = (if_.floor() as i64, jf.floor() as i64);
        let (a, b) = (if_ - i0 as f64, jf - j0 as f64);
        let (pts, w) = if a + b <= 1.0 {
            ([(i0, j0), (i0 + 1, j0), (i0, j0 + 1)], [1.0 - a - b, a, b])
        } else {
            ([(i0 + 1, j0 + 1), (i0, j0 + 1), (i0 + 1, j0)], [a + b - 1.0, 1.0 - a, 1.0 - b])
        };
        let mut ids = [0u32; 3];
        for k in 0..3 {
            ids[k] = self.domain.id(LatticePoint::new(pts[k].0, pts[k].1))?;
        }
        let mut key = ids;
        key.sort_unstable();
        if !self.faces.contains(&key) {
            return None;
        }
        Some([(ids[0], w[0]), (ids[1], w[1]), (ids[2], w[2])])
    }

    /// Trapezoidal weights of the circle average about `z`. With `clip`, points
    /// of the circle outside the domain are dropped and the rest reweighted;
    /// without it any such point gives None.
    pub fn circle_weights(&self, z: [f64; 2], r: f64, clip: bool) -> Option<Vec<(u32, f64)>> {
        let m = ((8.0 * std::f64::consts::PI * r / self.domain.delta()).ceil() as usize).max(32);
        let mut acc: Vec<(u32, f64)> = Vec::with_capacity(3 * m);
        let mut hit = 0usize;
        for k in 0..m {
            let t = 2.0 * std::f64::consts::PI * k as f64 / m as f64;
            match self.locate([z[0] + r * t.cos(), z[1] + r * t.sin()]) {
                Some(ws) => {
                    hit += 1;
                    acc.extend(ws);
                }
                None if clip => {}
                None => return None,
            }
        }
        if hit == 0 {
            return None;
        }
        acc.sort_unstable_by_key(|e| e.0);
        let mut out: Vec<(u32, f64)> = Vec::new();
        for (v, w) in acc {
            match out.last_mut() {
                Some(last) if last.0 == v => last.1 += w,
                _ => out.push((v, w)),
            }
        }
        for e in &mut out {
            e.1 /= hit as f64;
        }
        Some(out)
    }
}

/// Field values on every domain vertex; boundary values are 0 for samples.
#[derive(Clone, Debug)]
pub struct FieldSample {
    pub values: Vec<f64>,
    pub c_t: f64,
    grid: Arc<FieldGrid>,
}

impl FieldSample {
    pub fn constant(grid: Arc<FieldGrid>, c: f64) -> Self {
        let n = grid.domain.num_vertices();
        FieldSample { values: vec![c; n], c_t: GREEN_NORMALIZATION, grid }
    }

    pub fn from_values(grid: Arc<FieldGrid>, values: Vec<f64>, c_t: f64) -> Result<Self> {
        if values.len() != grid.domain.num_vertices() {
            return Err(Error::Invalid("field length differs from the vertex count".into()));
        }
        Ok(FieldSample { values, c_t, grid })
    }

    /// h + c on every vertex, boundary included.
    pub fn shifted(&self, c: f64) -> Self {
        FieldSample { values: self.values.iter().map(|x| x + c).collect(), c_t: self.c_t, grid: self.grid.clone() }
    }

    pub fn grid(&self) -> &Arc<FieldGrid> {
        &self.grid
    }
    pub fn domain(&self) -> &LatticeDomain {
        &self.grid.domain
    }

    pub fn apply(&self, weights: &[(u32, f64)]) -> f64 {
        weights.iter().map(|&(v, w)| w * self.values[v as usize]).sum()
    }
}

/// Sparse Cholesky factor of the inner-vertex Laplacian, shared by all samples.
pub struct GffSampler {
    grid: Arc<FieldGrid>,
    factor: CscCholesky<f64>,
    c_t: f64,
}

impl std::fmt::Debug for GffSampler {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("GffSampler").field("inner", &self.grid.domain.num_inner()).field("c_t", &self.c_t).finish()
    }
}

/// Graph Laplacian of the inner vertices (index v − ℓ), with zero boundary values.
pub fn laplacian(domain: &LatticeDomain) -> CscMatrix<f64> {
    let ell = domain.num_boundary();
    let n = domain.num_inner();
    let mut coo = CooMatrix::new(n, n);
    for k in 0..n {
        let v = (ell + k) as u32;
        coo.push(k, k, 6.0);
        for &w in domain.neighbor_ids(v) {
            if w != u32::MAX && w as usize >= ell {
                coo.push(k, w as usize - ell, -1.0);
            }
        }
    }
    CscMatrix::from(&coo)
}

const CHUNK: usize = 64;

impl GffSampler {
    pub fn new(grid: Arc<FieldGrid>) -> Result<Self> {
        Self::with_normalization(grid, GREEN_NORMALIZATION)
    }

    pub fn with_normalization(grid: Arc<FieldGrid>, c_t: f64) -> Result<Self> {
        if grid.domain.num_inner() == 0 {
            return Err(Error::ZeroInnerVertices);
        }
        if !(c_t > 0.0 && c_t.is_finite()) {
            return Err(Error::Invalid("normalization must be positive".into()));
        }
        let factor = CscCholesky::factor(&laplacian(&grid.domain)).map_err(|_| Error::SingularLaplacian)?;
        Ok(GffSampler { grid, factor, c_t })
    }

    pub fn grid(&self) -> &Arc<FieldGrid> {
        &self.grid
    }
    pub fn c_t(&self) -> f64 {
        self.c_t
    }

    /// Columns of `z` become independent fields: x = √c_T·R⁻ᵀz with L = RRᵀ.
    fn fields_from_normals(&self, mut z: DMatrix<f64>) -> Vec<FieldSample> {
        spsolve_csc_lower_triangular(Op::Transpose(self.factor.l()), &mut z).expect("factor is square and nonsingular");
        let ell = self.grid.domain.num_boundary();
        let s = self.c_t.sqrt();
        (0..z.ncols())
            .map(|c| {
                let mut values = vec![0.0; ell + z.nrows()];
                for (k, x) in z.column(c).iter().enumerate() {
                    values[ell + k] = s * x;
                }
                FieldSample { values, c_t: self.c_t, grid: self.grid.clone() }
            })
            .collect()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> FieldSample {
        let n = self.grid.domain.num_inner();
        let z = DMatrix::from_fn(n, 1, |_, _| rng.sample(StandardNormal));
        self.fields_from_normals(z).pop().expect("one column")
    }

    /// `count` fields from `seed`, each passed to `f` as soon as it is drawn.
    /// Chunks of 64 fields run in parallel on split streams; results keep order.
    pub fn sample_map<T, F>(&self, count: usize, seed: u64, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(&FieldSample) -> T + Sync,
    {
        let n = self.grid.domain.num_inner();
        let chunks = count.div_ceil(CHUNK);
        let parts: Vec<Vec<T>> = (0..chunks)
            .into_par_iter()
            .map(|k| {
                let mut rng = stream(seed, &format!("gff/chunk/{k}"));
                let cols = CHUNK.min(count - k * CHUNK);
                let z = DMatrix::from_fn(n, cols, |_, _| rng.sample(StandardNormal));
                self.fields_from_normals(z).iter().map(&f).collect()
            })
            .collect();
        parts.into_iter().flatten().collect()
    }

    /// c_T·aᵀL⁻¹b for weight vectors over domain vertices (boundary entries ignored).
    pub fn covariance(&self, a: &[(u32, f64)], b: &[(u32, f64)]) -> f64 {
        let ell = self.grid.domain.num_boundary();
        let n = self.grid.domain.num_inner();
        let mut rhs = DMatrix::zeros(n, 1);
        for &(v, w) in a {
            if v as usize >= ell {
                rhs[(v as usize - ell, 0)] += w;
            }
        }
        let x = self.factor.solve(&rhs);
        self.c_t * b.iter().filter(|e| e.0 as usize >= ell).map(|&(v, w)| w * x[(v as usize - ell, 0)]).sum::<f64>()
    }

    pub fn green(&self, u: u32, v: u32) -> f64 {
        self.covariance(&[(u, 1.0)], &[(v, 1.0)])
    }
}

pub fn sample_gff<R: Rng + ?Sized>(domain: LatticeDomain, rng: &mut R) -> Result<FieldSample> {
    Ok(GffSampler::new(Arc::new(FieldGrid::new(domain)))?.sample(rng))
}

/// Average of the interpolated field over the circle of radius `r` about `z`;
/// 0 when the circle leaves the domain.
pub fn circle_average(field: &FieldSample, z: [f64; 2], r: f64) -> f64 {
    match field.grid.circle_weights(z, r, false) {
        Some(w) => field.apply(&w),
        None => 0.0,
    }
}

/// Precomputed circle stencils at a fixed radius, clipped to the domain.
#[derive(Clone, Debug)]
pub struct Regularizer {
    pub r: f64,
    pub inner: Vec<Vec<(u32, f64)>>,
    pub boundary: Vec<Vec<(u32, f64)>>,
}

impl Regularizer {
    pub fn new(grid: &FieldGrid, r: f64) -> Result<Self> {
        let d = &grid.domain;
        let min = 2.0 * d.delta();
        if !(r >= min) {
            return Err(Error::RegularizationTooFine { r, min });
        }
        let ell = d.num_boundary() as u32;
        // a clipped circle always keeps some point unless the domain is thinner than r
        let stencil = |v: u32| grid.circle_weights(d.position(v), r, true).unwrap_or_else(|| vec![(v, 1.0)]);
        let inner = (ell..d.num_vertices() as u32).into_par_iter().map(stencil).collect();
        let boundary = (0..ell).into_par_iter().map(stencil).collect();
        Ok(Regularizer { r, inner, boundary })
    }

    pub fn inner_averages(&self, field: &FieldSample) -> Vec<f64> {
        self.inner.iter().map(|w| field.apply(w)).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GmcMeasure {
    pub measure: AtomicMeasure,
    pub exponent: f64,
    pub r: f64,
    pub delta: f64,
}

fn check_exponent(a: f64) -> Result<()> {
    if !(a > 0.0 && a < 2.0) {
        return Err(Error::Invalid(format!("exponent {a} outside (0, 2)")));
    }
    Ok(())
}

/// r^{a²/2}·e^{a·h_r(v)}·(hexagon area) on each inner vertex, with h_r the
/// circle average clipped to the domain.
pub fn gmc_measure(field: &FieldSample, exponent: f64, r: f64) -> Result<GmcMeasure> {
    check_exponent(exponent)?;
    let reg = Regularizer::new(&field.grid, r)?;
    gmc_with(&reg, field, exponent)
}

pub fn gmc_with(reg: &Regularizer, field: &FieldSample, exponent: f64) -> Result<GmcMeasure> {
    check_exponent(exponent)?;
    let d = field.domain();
    let ell = d.num_boundary() as u32;
    let pre = reg.r.powf(exponent * exponent / 2.0) * d.hexagon_area();
    let atoms = reg
        .inner
        .iter()
        .enumerate()
        .map(|(k, w)| Atom { at: Location::Vertex(ell + k as u32), mass: pre * (exponent * field.apply(w)).exp() })
        .collect();
    Ok(GmcMeasure { measure: AtomicMeasure { atoms }, exponent, r: reg.r, delta: d.delta() })
}

/// r^{γ²/8}·e^{γ·h_r(v)/2}·δ on each boundary vertex, averaging over the
/// part of the circle inside the domain.
pub fn boundary_measure(field: &FieldSample, gamma: f64, r: f64) -> Result<GmcMeasure> {
    check_exponent(gamma)?;
    let reg = Regularizer::new(&field.grid, r)?;
    boundary_with(&reg, field, gamma)
}

pub fn boundary_with(reg: &Regularizer, field: &FieldSample, gamma: f64) -> Result<GmcMeasure> {
    check_exponent(gamma)?;
    let d = field.domain();
    let pre = reg.r.powf(gamma * gamma / 8.0) * d.delta();
    let atoms = reg
        .boundary
        .iter()
        .enumerate()
        .map(|(v, w)| Atom { at: Location::Vertex(v as u32), mass: pre * (gamma * field.apply(w) / 2.0).exp() })
        .collect();
    Ok(GmcMeasure { measure: AtomicMeasure { atoms }, exponent: gamma, r: reg.r, delta: d.delta() })
}

/// Flip rates μ'_h(v)/α₄ with μ'_h the GMC at exponent 1/√6.
pub fn clock_rates(field: &FieldSample, alpha4: f64, r: f64) -> Result<AtomicMeasure> {
    if !(alpha4 > 0.0 && alpha4.is_finite()) {
        return Err(Error::Invalid("four-arm estimate must be positive".into()));
    }
    Ok(gmc_measure(field, CLOCK_ALPHA, r)?.measure.scaled(1.0 / alpha4))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VarianceFit {
    pub radii: Vec<f64>,
    pub variances: Vec<f64>,
    pub slope: f64,
    pub intercept: f64,
    pub samples: usize,
    pub seed: u64,
}

/// Least-squares line of Var[h_r(z)] against log(1/r).
pub fn fit_log_variance(radii: &[f64], variances: &[f64]) -> (f64, f64) {
    let xs: Vec<f64> = radii.iter().map(|r| (1.0 / r).ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = variances.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(variances).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// Empirical circle-average variances at `z` over `samples` fields.
pub fn circle_variance_fit(sampler: &GffSampler, z: [f64; 2], radii: &[f64], samples: usize, seed: u64) -> Result<VarianceFit> {
    let stencils: Vec<Vec<(u32, f64)>> = radii
        .iter()
        .map(|&r| sampler.grid.circle_weights(z, r, false).ok_or_else(|| Error::Invalid(format!("circle of radius {r} leaves the domain"))))
        .collect::<Result<_>>()?;
    let avgs = sampler.sample_map(samples, seed, |f| stencils.iter().map(|w| f.apply(w)).collect::<Vec<f64>>());
    let variances: Vec<f64> = (0..radii.len())
        .map(|k| {
            let xs: Vec<f64> = avgs.iter().map(|a| a[k]).collect();
            let m = xs.iter().sum::<f64>() / xs.len() as f64;
            xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() as f64 - 1.0)
        })
        .collect();
    let (slope, intercept) = fit_log_variance(radii, &variances);
    Ok(VarianceFit { radii: radii.to_vec(), variances, slope, intercept, samples, seed })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{DomainOptions, Shape};

    fn disk(delta: f64) -> Arc<FieldGrid> {
        Arc::new(FieldGrid::new(LatticeDomain::build(&Shape::unit_disk(), delta, DomainOptions::default()).unwrap()))
    }

    #[test]
    fn normalization_constant() {
        assert!((GREEN_NORMALIZATION - 2.0 * std::f64::consts::PI * 3f64.sqrt()).abs() < 1e-12);
        assert!((GAMMA - (8.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert!((CLOCK_ALPHA - 1.0 / 6f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn boundary_zero_and_reproducible() {
        let s = GffSampler::new(disk(0.1)).unwrap();
        let a = s.sample(&mut stream(1, "gff"));
        let b = s.sample(&mut stream(1, "gff"));
        assert_eq!(a.values, b.values);
        let ell = a.domain().num_boundary();
        assert!(a.values[..ell].iter().all(|&x| x == 0.0));
        let c = s.sample_map(70, 3, |f| f.values.clone());
        assert_eq!(c, s.sample_map(70, 3, |f| f.values.clone()));
        assert_eq!(c.len(), 70);
    }

    #[test]
    fn empirical_covariance() {
        let grid = disk(0.11);
        let d = grid.domain();
        let n = d.num_inner();
        assert!(n > 250 && n < 350, "{n}");
        let ell = d.num_boundary();
        let s = GffSampler::new(grid.clone()).unwrap();
        // dense oracle
        let mut l = DMatrix::zeros(n, n);
        let lap = laplacian(d);
        for (i, j, v) in lap.triplet_iter() {
            l[(i, j)] = *v;
        }
        let g = l.try_inverse().unwrap() * GREEN_NORMALIZATION;
        let pick = [ell, ell + n / 3, ell + n / 2, ell + n / 2 + 1, ell + n - 1];
        let xs = s.sample_map(10_000, 11, |f| pick.map(|v| f.values[v]));
        let m = xs.len() as f64;
        for a in 0..pick.len() {
            for b in a..pick.len() {
                let c = xs.iter().map(|x| x[a] * x[b]).sum::<f64>() / m;
                let exact = g[(pick[a] - ell, pick[b] - ell)];
                let sd = ((g[(pick[a] - ell, pick[a] - ell)] * g[(pick[b] - ell, pick[b] - ell)] + exact * exact) / m).sqrt();
                assert!((c - exact).abs() < 4.0 * sd, "{a} {b}: {c} vs {exact}");
                assert!((s.green(pick[a] as u32, pick[b] as u32) - exact).abs() < 1e-9 * exact.abs().max(1.0));
            }
        }
    }

    #[test]
    fn circle_average_conventions() {
        let grid = disk(1.0 / 16.0);
        let s = GffSampler::new(grid.clone()).unwrap();
        let f = s.sample(&mut stream(2, "circ"));
        let a = circle_average(&f, [0.1, 0.0], 0.3);
        assert!((circle_average(&f.shifted(1.5), [0.1, 0.0], 0.3) - a - 1.5).abs() < 1e-12);
        assert_eq!(circle_average(&f, [0.5, 0.0], 0.7), 0.0);
        let one = FieldSample::constant(grid.clone(), 1.0);
        assert!((circle_average(&one, [0.0, 0.2], 0.25) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn exact_variance_slope() {
        // lattice averages of the exact Green matrix follow log(1/r)
        let s = GffSampler::new(disk(1.0 / 32.0)).unwrap();
        let radii = [1.0 / 8.0, 1.0 / 4.0, 1.0 / 2.0];
        let vars: Vec<f64> = radii
            .iter()
            .map(|&r| {
                let w = s.grid().circle_weights([0.0, 0.0], r, false).unwrap();
                s.covariance(&w, &w)
            })
            .collect();
        let (slope, intercept) = fit_log_variance(&radii, &vars);
        assert!((slope - 1.0).abs() < 0.03, "{slope}");
        assert!(intercept.abs() < 0.1, "{intercept}");
    }

    #[test]
    fn circle_covariance_is_green() {
        let grid = disk(1.0 / 16.0);
        let s = GffSampler::new(grid.clone()).unwrap();
        let d = grid.domain();
        let (z, w) = ([-0.3125, 0.0], [0.3125, 0.0]);
        let wz = grid.circle_weights(z, 0.15, false).unwrap();
        let ww = grid.circle_weights(w, 0.1, false).unwrap();
        let vz = (0..d.num_vertices() as u32).find(|&v| d.position(v) == [-0.3125, 0.0]).unwrap();
        let vw = (0..d.num_vertices() as u32).find(|&v| d.position(v) == [0.3125, 0.0]).unwrap();
        let exact = s.covariance(&wz, &ww);
        assert!((exact - s.green(vz, vw)).abs() < 0.02, "{exact} {}", s.green(vz, vw));
        let xs = s.sample_map(4000, 8, |f| (f.apply(&wz), f.apply(&ww)));
        let n = xs.len() as f64;
        let c = xs.iter().map(|p| p.0 * p.1).sum::<f64>() / n;
        let sd = ((s.covariance(&wz, &wz) * s.covariance(&ww, &ww) + exact * exact) / n).sqrt();
        assert!((c - exact).abs() < 4.0 * sd);
    }

    #[test]
    fn gmc_identities() {
        let grid = disk(1.0 / 16.0);
        let d = grid.domain();
        let r = 4.0 / 16.0;
        let zero = FieldSample::constant(grid.clone(), 0.0);
        let m0 = gmc_measure(&zero, GAMMA, r).unwrap();
        let expect = r.powf(GAMMA * GAMMA / 2.0) * d.hexagon_area() * d.num_inner() as f64;
        assert!((m0.measure.total() - expect).abs() < 1e-12 * expect);
        let b0 = boundary_measure(&zero, GAMMA, r).unwrap();
        let blen = d.num_boundary() as f64 * d.delta();
        assert!((b0.measure.total() - r.powf(GAMMA * GAMMA / 8.0) * blen).abs() < 1e-12);
        assert!(matches!(gmc_measure(&zero, GAMMA, d.delta()), Err(Error::RegularizationTooFine { .. })));
        assert!(gmc_measure(&zero, 2.5, r).is_err());

        let s = GffSampler::new(grid.clone()).unwrap();
        let f = s.sample(&mut stream(4, "gmc"));
        let reg = Regularizer::new(&grid, r).unwrap();
        let m = gmc_with(&reg, &f, GAMMA).unwrap();
        let b = boundary_with(&reg, &f, GAMMA).unwrap();
        for c in [-1.0, 0.3, 2.0] {
            let g = f.shifted(c);
            let mc = gmc_with(&reg, &g, GAMMA).unwrap();
            for (x, y) in m.measure.atoms.iter().zip(&mc.measure.atoms) {
                assert!(((y.mass - (GAMMA * c).exp() * x.mass) / y.mass).abs() < 1e-12);
            }
            let bc = boundary_with(&reg, &g, GAMMA).unwrap();
            for (x, y) in b.measure.atoms.iter().zip(&bc.measure.atoms) {
                assert!(y.mass > 0.0);
                assert!(((y.mass - (GAMMA * c / 2.0).exp() * x.mass) / y.mass).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn clock_rate_arithmetic() {
        let grid = disk(1.0 / 16.0);
        let d = grid.domain();
        let r = 0.25;
        let zero = FieldSample::constant(grid.clone(), 0.0);
        let rates = clock_rates(&zero, 1.0, r).unwrap();
        for a in &rates.atoms {
            assert!((a.mass - r.powf(1.0 / 12.0) * d.hexagon_area()).abs() < 1e-15);
        }
        let f = GffSampler::new(grid.clone()).unwrap().sample(&mut stream(5, "clock"));
        let base = gmc_measure(&f, CLOCK_ALPHA, r).unwrap().measure;
        let half = clock_rates(&f, 0.5, r).unwrap();
        assert!((half.total() - 2.0 * base.total()).abs() < 1e-12 * base.total());
        assert!(clock_rates(&f, 0.0, r).is_err());
    }

    #[test]
    fn mean_mass_stable_in_r() {
        let grid = disk(1.0 / 32.0);
        let d = grid.domain();
        let s = GffSampler::new(grid.clone()).unwrap();
        let square: Vec<usize> = (0..d.num_inner())
            .filter(|&k| {
                let p = d.position((d.num_boundary() + k) as u32);
                p[0].abs() <= 0.2 && p[1].abs() <= 0.2
            })
            .collect();
        let mut means = Vec::new();
        let mut preds = Vec::new();
        for r in [0.25, 0.125] {
            let reg = Regularizer::new(&grid, r).unwrap();
            let ms = s.sample_map(1000, 6, |f| {
                let m = gmc_with(&reg, f, CLOCK_ALPHA).unwrap();
                square.iter().map(|&k| m.measure.atoms[k].mass).sum::<f64>()
            });
            means.push(ms.iter().sum::<f64>() / ms.len() as f64);
            // E = Σ area·r^{α²/2}·exp(α²Var/2) with Var = log(1/r) + log(1 − |z|²)
            preds.push(
                square
                    .iter()
                    .map(|&k| {
                        let p = d.position((d.num_boundary() + k) as u32);
                        d.hexagon_area() * (1.0 - p[0] * p[0] - p[1] * p[1]).powf(CLOCK_ALPHA * CLOCK_ALPHA / 2.0)
                    })
                    .sum::<f64>(),
            );
        }
        let ratio = means[0] / means[1];
        assert!((ratio / (preds[0] / preds[1]) - 1.0).abs() < 0.1, "{means:?} {preds:?}");
        assert!((means[1] / preds[1] - 1.0).abs() < 0.1, "{means:?} {preds:?}");
    }

    #[test]
    fn rejects_empty_and_bad_inputs() {
        let grid = disk(0.1);
        assert!(GffSampler::with_normalization(grid.clone(), -1.0).is_err());
        assert!(FieldSample::from_values(grid, vec![0.0; 3], 1.0).is_err());
    }
}
