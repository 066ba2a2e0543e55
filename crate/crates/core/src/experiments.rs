//! Reproducible numerical experiments with pass/fail verdicts. Each runner
//! takes its parameters explicitly; `Default` gives the reference settings.

use std::collections::HashMap;
use std::sync::Arc;

use num_traits::ToPrimitive;
use rand::Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};
use serde_json::json;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::cardy::{crossing_counts, embed_with_seed, riemann_to_delta, ScOptions};
use crate::dynamics::{build_exact_ctmc, jump_skeleton};
use crate::error::{Error, Result};
use crate::field::{boundary_with, circle_variance_fit, gmc_with, FieldGrid, GffSampler, Regularizer, CLOCK_ALPHA, GAMMA};
use crate::lattice::{DomainOptions, LatticeDomain, Quad, Shape, SQRT3_2};
use crate::map::{count_triangulations, for_each_triangulation, partition_function, sample_boltzmann, BoltzmannOptions, MarkedTriangulation, Triangulation, CRITICAL_WEIGHT};
use crate::percolation::{coloring_from_loops, loop_ensemble, quad_crossing, sample_percolation, BoundaryCondition, Coloring, CrossingFlags, EventSolver};
use crate::pivotal::{eps_pivotal_set, four_arm_with_seed, lebesgue_weights, loop_symmetric_difference, rho_important_set, Alpha4Estimate};
use crate::rng::stream;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub id: u32,
    pub name: String,
    pub passed: bool,
    pub summary: String,
    pub details: serde_json::Value,
}

fn report(id: u32, name: &str, passed: bool, summary: String, details: serde_json::Value) -> Report {
    Report { id, name: name.into(), passed, summary, details }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OracleConfig {
    pub ells: Vec<usize>,
    pub n_max: usize,
    pub samples: u64,
    pub seed: u64,
    pub sigmas: f64,
    pub pass_fraction: f64,
    /// Maps per (ℓ, n) class that also go through the colour-sampling pipeline.
    pub direct_per_class: usize,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig { ells: vec![3, 4, 5], n_max: 5, samples: 100_000, seed: 1, sigmas: 4.0, pass_fraction: 0.99, direct_per_class: 4 }
    }
}

/// Event flags of every inner coloring, indexed by key.
fn flag_table(marked: &MarkedTriangulation) -> Vec<CrossingFlags> {
    let map = &marked.map;
    let n = map.num_vertices();
    let k = map.num_inner();
    let mut solver = EventSolver::new(map);
    (0..1u64 << k)
        .map(|key| {
            let c = Coloring::from_key(map, key, BoundaryCondition::MonochromaticBlue);
            let mut f = CrossingFlags { ea: vec![false; n], eb: vec![false; n], ec: vec![false; n] };
            solver.flags_into(c.colors(), marked.a, marked.b, marked.c, &mut f);
            f
        })
        .collect()
}

fn tally(table: &[CrossingFlags], weights: &[u64], n: usize) -> Vec<[u64; 3]> {
    let mut out = vec![[0u64; 3]; n];
    for (f, &w) in table.iter().zip(weights) {
        for v in 0..n {
            out[v][0] += w * f.ea[v] as u64;
            out[v][1] += w * f.eb[v] as u64;
            out[v][2] += w * f.ec[v] as u64;
        }
    }
    out
}

/// Multinomial counts of `total` fair draws over `cells` categories.
fn fair_multinomial<R: Rng + ?Sized>(total: u64, cells: usize, rng: &mut R) -> Vec<u64> {
    let mut left = total;
    let mut out = Vec::with_capacity(cells);
    for k in 0..cells {
        let rest = (cells - k) as f64;
        let x = if k + 1 == cells || left == 0 { left } else { Binomial::new(left, 1.0 / rest).expect("valid binomial").sample(rng) };
        out.push(x);
        left -= x;
    }
    out
}

#[derive(Default)]
struct Tally {
    triples: u64,
    passed: u64,
}

impl Tally {
    fn check(&mut self, counts: &[[u64; 3]], exact: &[[u64; 3]], denom: u64, samples: u64, sigmas: f64) {
        let m = samples as f64;
        for (c, e) in counts.iter().zip(exact) {
            for k in 0..3 {
                let p = e[k] as f64 / denom as f64;
                let phat = c[k] as f64 / m;
                let se = (p * (1.0 - p) / m).sqrt();
                self.triples += 1;
                if (phat - p).abs() <= sigmas * se {
                    self.passed += 1;
                }
            }
        }
    }
    fn fraction(&self) -> f64 {
        if self.triples == 0 { 1.0 } else { self.passed as f64 / self.triples as f64 }
    }
}

/// Crossing frequencies against exact rationals on every enumerated map.
/// For the full sweep, N fair colorings of a map with k inner vertices are
/// drawn as multinomial counts over its 2^k colorings, which has the law of
/// N independent samples; a subset of maps also runs the sampling pipeline.
pub fn exact_oracle_embedding(cfg: &OracleConfig) -> Result<Report> {
    let mut sweep = Tally::default();
    let mut direct = Tally::default();
    let mut maps = 0u64;
    let mut classes = Vec::new();
    for &ell in &cfg.ells {
        for n in 0..=cfg.n_max {
            let count = count_triangulations(ell, n).to_u64().unwrap_or(u64::MAX);
            let stride = (count / cfg.direct_per_class.max(1) as u64).max(1);
            let mut idx = 0u64;
            let mut class = Tally::default();
            for_each_triangulation(ell, n, cfg.n_max.max(8), |m| {
                let marked = MarkedTriangulation::spread(m.clone());
                let table = flag_table(&marked);
                let nv = m.num_vertices();
                let exact = tally(&table, &vec![1; table.len()], nv);
                let denom = table.len() as u64;
                let mut rng = stream(cfg.seed, &format!("oracle/{ell}/{n}/{idx}"));
                let draws = fair_multinomial(cfg.samples, table.len(), &mut rng);
                let counts = tally(&table, &draws, nv);
                class.check(&counts, &exact, denom, cfg.samples, cfg.sigmas);
                if cfg.direct_per_class > 0 && idx % stride == 0 {
                    let sampled = crossing_counts(&marked, cfg.samples, crate::rng::seed_split(cfg.seed, &format!("oracle/direct/{ell}/{n}/{idx}")));
                    direct.check(&sampled, &exact, denom, cfg.samples, cfg.sigmas);
                }
                idx += 1;
            })?;
            maps += idx;
            sweep.triples += class.triples;
            sweep.passed += class.passed;
            classes.push(json!({"ell": ell, "n": n, "maps": idx, "triples": class.triples, "passed": class.passed}));
        }
    }
    let passed = sweep.fraction() >= cfg.pass_fraction && direct.fraction() >= cfg.pass_fraction;
    Ok(report(
        1,
        "exact-oracle embedding",
        passed,
        format!(
            "{maps} maps; {:.6} of {} triples within {}σ (sampled pipeline {:.4} of {})",
            sweep.fraction(),
            sweep.triples,
            cfg.sigmas,
            direct.fraction(),
            direct.triples
        ),
        json!({"maps": maps, "triples": sweep.triples, "passed": sweep.passed, "fraction": sweep.fraction(),
               "direct_triples": direct.triples, "direct_passed": direct.passed, "classes": classes}),
    ))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TriangleConfig {
    pub inverse_deltas: Vec<u32>,
    pub samples: u64,
    pub seed: u64,
    pub max_sup: f64,
    pub sigmas: f64,
}

impl Default for TriangleConfig {
    fn default() -> Self {
        TriangleConfig { inverse_deltas: vec![10, 20, 40], samples: 20_000, seed: 7, max_sup: 0.06, sigmas: 3.0 }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TriangleLevel {
    pub inverse_delta: u32,
    pub inner: usize,
    /// sup over inner vertices of the distance to the continuum embedding.
    pub sup_discrepancy: f64,
    /// Largest per-vertex standard error of the embedded point.
    pub mc_error: f64,
    /// max over vertices of |p_a + p_b + p_c − 1|.
    pub sum_defect: f64,
    pub sum_defect_error: f64,
}

/// Discrete Cardy embedding of the corner-marked equilateral triangle against
/// the continuum embedding, which is the identity.
pub fn triangle_levels(cfg: &TriangleConfig) -> Result<Vec<TriangleLevel>> {
    let corners = [[0.0, 0.0], [1.0, 0.0], [0.5, SQRT3_2]];
    let mut out = Vec::new();
    for &inv in &cfg.inverse_deltas {
        let domain = LatticeDomain::build(&Shape::equilateral_triangle(1.0), 1.0 / inv as f64, DomainOptions::default())?;
        let m = corners.map(|c| domain.nearest_boundary_position(c));
        let marked = MarkedTriangulation::new(domain.to_triangulation(), m[0], m[1], m[2])?;
        let emb = embed_with_seed(&marked, cfg.samples, crate::rng::seed_split(cfg.seed, &format!("triangle/{inv}")))?;
        let ell = domain.num_boundary();
        let inner: Vec<[f64; 2]> = (ell..domain.num_vertices()).map(|v| domain.position(v as u32)).collect();
        let reference = riemann_to_delta(&corners, corners, &inner, ScOptions::default())?;
        let mut sup: f64 = 0.0;
        let mut err: f64 = 0.0;
        for (k, r) in reference.iter().enumerate() {
            let v = ell + k;
            sup = sup.max(emb.coords[v].distance(r));
            let se = emb.std_err[v];
            err = err.max((se[0] * se[0] + se[1] * se[1] + se[2] * se[2]).sqrt());
        }
        let mut defect: f64 = 0.0;
        let mut defect_err: f64 = 0.0;
        for v in 0..emb.num_vertices() {
            let f = emb.frequencies(v);
            defect = defect.max((f[0] + f[1] + f[2] - 1.0).abs());
            defect_err = defect_err.max(emb.std_err[v].iter().sum());
        }
        out.push(TriangleLevel { inverse_delta: inv, inner: inner.len(), sup_discrepancy: sup, mc_error: err, sum_defect: defect, sum_defect_error: defect_err });
    }
    Ok(out)
}

pub fn smirnov_triangle(cfg: &TriangleConfig, levels: &[TriangleLevel]) -> Report {
    let decreasing = levels.windows(2).all(|w| w[1].sup_discrepancy < w[0].sup_discrepancy);
    let last = levels.last().map_or(f64::INFINITY, |l| l.sup_discrepancy);
    let passed = decreasing && last <= cfg.max_sup;
    let text: Vec<String> = levels.iter().map(|l| format!("1/{}: {:.4} (MC {:.4})", l.inverse_delta, l.sup_discrepancy, cfg.sigmas * l.mc_error)).collect();
    report(2, "triangle embedding vs identity", passed, format!("sup discrepancy {}", text.join(", ")), json!(levels))
}

pub fn sum_defect(cfg: &TriangleConfig, levels: &[TriangleLevel]) -> Report {
    let passed = levels.windows(2).all(|w| w[0].sum_defect - w[1].sum_defect > cfg.sigmas * w[0].sum_defect_error.hypot(w[1].sum_defect_error));
    let text: Vec<String> = levels.iter().map(|l| format!("1/{}: {:.4} (MC {:.4})", l.inverse_delta, l.sum_defect, cfg.sigmas * l.sum_defect_error)).collect();
    report(4, "sum-to-one defect", passed, format!("max defect {}", text.join(", ")), json!(levels))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RhombusConfig {
    pub inverse_delta: u32,
    pub samples: u64,
    pub seed: u64,
    pub sigmas: f64,
}

impl Default for RhombusConfig {
    fn default() -> Self {
        RhombusConfig { inverse_delta: 64, samples: 100_000, seed: 3, sigmas: 3.0 }
    }
}

/// Left-right red crossing of the 60° rhombus.
pub fn rhombus_crossing(cfg: &RhombusConfig) -> Result<Report> {
    let domain = LatticeDomain::build(&Shape::rhombus(1.0), 1.0 / cfg.inverse_delta as f64, DomainOptions::default())?;
    let c = [[0.0, 0.0], [1.0, 0.0], [1.5, SQRT3_2], [0.5, SQRT3_2]].map(|p| domain.nearest_boundary_position(p));
    let quad = Quad::new(&domain, [c[1], c[2], c[3], c[0]])?;
    let mut rng = stream(cfg.seed, "rhombus");
    let mut hits = 0u64;
    for _ in 0..cfg.samples {
        let col = sample_percolation(&domain, BoundaryCondition::Explicit, &mut rng);
        hits += quad_crossing(&domain, &col, &quad) as u64;
    }
    let n = cfg.samples as f64;
    let p = hits as f64 / n;
    let se = 0.5 / n.sqrt();
    let passed = (p - 0.5).abs() <= cfg.sigmas * se;
    Ok(report(
        3,
        "rhombus crossing",
        passed,
        format!("p̂ = {p:.5} ± {se:.5} at side {}", cfg.inverse_delta),
        json!({"estimate": p, "std_err": se, "hits": hits, "samples": cfg.samples, "inner": domain.num_inner()}),
    ))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FourArmConfig {
    pub inverse_deltas: Vec<u32>,
    pub r: f64,
    pub samples: u64,
    pub seed: u64,
    pub target: f64,
    pub tol: f64,
}

impl Default for FourArmConfig {
    fn default() -> Self {
        FourArmConfig { inverse_deltas: vec![16, 32, 64, 128], r: 1.0, samples: 100_000, seed: 5, target: -1.25, tol: 0.15 }
    }
}

/// Weighted least squares of log α̂ on log(1/δ) with weights (α̂/σ)².
pub fn four_arm_slope(estimates: &[Alpha4Estimate]) -> (f64, f64) {
    let pts: Vec<(f64, f64, f64)> = estimates
        .iter()
        .filter(|e| e.hits > 0)
        .map(|e| (-e.delta.ln(), e.value.ln(), (e.value / e.std_err).powi(2)))
        .collect();
    let sw: f64 = pts.iter().map(|p| p.2).sum();
    let mx = pts.iter().map(|p| p.2 * p.0).sum::<f64>() / sw;
    let my = pts.iter().map(|p| p.2 * p.1).sum::<f64>() / sw;
    let sxx: f64 = pts.iter().map(|p| p.2 * (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| p.2 * (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    (slope, (1.0 / sxx).sqrt())
}

pub fn four_arm_exponent(cfg: &FourArmConfig) -> Result<(Report, Vec<Alpha4Estimate>)> {
    let est: Vec<Alpha4Estimate> = cfg
        .inverse_deltas
        .iter()
        .map(|&inv| four_arm_with_seed(1.0 / inv as f64, cfg.r, cfg.samples, crate::rng::seed_split(cfg.seed, &format!("four-arm/{inv}"))))
        .collect::<Result<_>>()?;
    let (slope, se) = four_arm_slope(&est);
    let passed = (slope - cfg.target).abs() <= cfg.tol;
    let r = report(
        5,
        "four-arm exponent",
        passed,
        format!("slope {slope:.3} ± {se:.3} (target {} ± {})", cfg.target, cfg.tol),
        json!({"slope": slope, "slope_std_err": se, "estimates": est}),
    );
    Ok((r, est))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CtmcConfig {
    pub maps: usize,
    pub max_inner: usize,
    pub seed: u64,
    pub tol: f64,
}

impl Default for CtmcConfig {
    fn default() -> Self {
        CtmcConfig { maps: 20, max_inner: 10, seed: 6, tol: 1e-12 }
    }
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n == 0 {
        0.0
    } else if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    }
}

fn small_map<R: Rng + ?Sized>(max_inner: usize, rng: &mut R) -> Result<Triangulation> {
    loop {
        let ell = rng.random_range(3..=6);
        let m = sample_boltzmann(ell, BoltzmannOptions { vertex_budget: 10_000 }, rng)?;
        if m.num_inner() >= 1 && m.num_inner() <= max_inner {
            return Ok(m);
        }
    }
}

/// Symmetry and stationarity of the exact ε-cutoff generator on small maps.
pub fn ctmc_stationarity(cfg: &CtmcConfig) -> Result<Report> {
    let mut rng = stream(cfg.seed, "ctmc");
    let mut worst: f64 = 0.0;
    let mut rows = Vec::new();
    for _ in 0..cfg.maps {
        let map = small_map(cfg.max_inner, &mut rng)?;
        let nv = map.num_vertices();
        let mu = vec![1.0; nv];
        let rate = (nv as f64).powf(-0.25);
        let rates: Vec<f64> = (0..nv).map(|v| if v < map.boundary_len() { 0.0 } else { rate }).collect();
        let sample = sample_percolation(&map, BoundaryCondition::MonochromaticBlue, &mut rng);
        let med = median(loop_ensemble(&map, &sample)?.areas(&mu));
        for eps in [0.0, med, f64::INFINITY] {
            let q = build_exact_ctmc(&map, BoundaryCondition::MonochromaticBlue, eps, &mu, &rates)?;
            let s = jump_skeleton(&q);
            let (a, u, w) = (q.max_asymmetry(), q.uniform_residual(), s.reweighted_residual());
            worst = worst.max(a).max(u).max(w);
            rows.push(json!({"inner": map.num_inner(), "eps": if eps.is_finite() { json!(eps) } else { json!("inf") },
                             "asymmetry": a, "uQ": u, "reweighted": w, "absorbing": s.absorbing.len()}));
        }
    }
    Ok(report(
        6,
        "exact CTMC stationarity",
        worst <= cfg.tol,
        format!("{} maps × 3 thresholds, worst residual {worst:.2e}", cfg.maps),
        json!({"worst": worst, "cases": rows}),
    ))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GffConfig {
    pub inverse_delta: u32,
    pub radii: Vec<f64>,
    pub samples: usize,
    pub seed: u64,
    pub tol: f64,
}

impl Default for GffConfig {
    fn default() -> Self {
        GffConfig { inverse_delta: 64, radii: vec![1.0 / 16.0, 1.0 / 8.0, 1.0 / 4.0], samples: 10_000, seed: 8, tol: 0.05 }
    }
}

pub fn gff_circle_law(cfg: &GffConfig) -> Result<Report> {
    let domain = LatticeDomain::build(&Shape::unit_disk(), 1.0 / cfg.inverse_delta as f64, DomainOptions::default())?;
    let sampler = GffSampler::new(Arc::new(FieldGrid::new(domain)))?;
    let fit = circle_variance_fit(&sampler, [0.0, 0.0], &cfg.radii, cfg.samples, cfg.seed)?;
    let passed = (fit.slope - 1.0).abs() <= cfg.tol;
    Ok(report(
        7,
        "GFF circle-average law",
        passed,
        format!("slope {:.4}, intercept {:.4}, variances {:?}", fit.slope, fit.intercept, fit.variances.iter().map(|v| (v * 1e4).round() / 1e4).collect::<Vec<_>>()),
        json!({"fit": fit, "c_t": sampler.c_t()}),
    ))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GmcShiftConfig {
    pub inverse_delta: u32,
    pub fields: usize,
    pub shifts: Vec<f64>,
    pub seed: u64,
    pub tol: f64,
}

impl Default for GmcShiftConfig {
    fn default() -> Self {
        GmcShiftConfig { inverse_delta: 32, fields: 100, shifts: vec![-1.0, 0.3, 2.0], seed: 9, tol: 1e-12 }
    }
}

/// μ_{h+c} = e^{γc}μ_h and ξ_{h+c} = e^{γc/2}ξ_h atom by atom.
pub fn gmc_shift(cfg: &GmcShiftConfig) -> Result<Report> {
    let delta = 1.0 / cfg.inverse_delta as f64;
    let grid = Arc::new(FieldGrid::new(LatticeDomain::build(&Shape::unit_disk(), delta, DomainOptions::default())?));
    let sampler = GffSampler::new(grid.clone())?;
    let reg = Regularizer::new(&grid, 4.0 * delta)?;
    let shifts = cfg.shifts.clone();
    let worst = sampler
        .sample_map(cfg.fields, cfg.seed, |f| -> Result<f64> {
            let mut worst: f64 = 0.0;
            for a in [GAMMA, CLOCK_ALPHA] {
                let base = gmc_with(&reg, f, a)?;
                let bb = boundary_with(&reg, f, a)?;
                for &c in &shifts {
                    let g = f.shifted(c);
                    let m = gmc_with(&reg, &g, a)?;
                    let b = boundary_with(&reg, &g, a)?;
                    for (x, y) in base.measure.atoms.iter().zip(&m.measure.atoms) {
                        worst = worst.max((y.mass - (a * c).exp() * x.mass).abs() / y.mass);
                    }
                    for (x, y) in bb.measure.atoms.iter().zip(&b.measure.atoms) {
                        worst = worst.max((y.mass - (a * c / 2.0).exp() * x.mass).abs() / y.mass);
                    }
                }
            }
            Ok(worst)
        })
        .into_iter()
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    Ok(report(
        8,
        "GMC shift identity",
        worst <= cfg.tol,
        format!("{} fields × {} shifts, worst relative error {worst:.2e}", cfg.fields, cfg.shifts.len()),
        json!({"worst_relative_error": worst}),
    ))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RoundTripConfig {
    pub pairs: usize,
    pub seed: u64,
}

impl Default for RoundTripConfig {
    fn default() -> Self {
        RoundTripConfig { pairs: 10_000, seed: 10 }
    }
}

/// ω ↔ Γ(M, ω) round trips and the flip involution.
pub fn roundtrip_involution(cfg: &RoundTripConfig) -> Result<Report> {
    let mut rng = stream(cfg.seed, "roundtrip");
    let mut roundtrip_fail = 0usize;
    let mut involution_fail = 0usize;
    for _ in 0..cfg.pairs {
        let ell = rng.random_range(3..=8);
        let bc = if rng.random::<bool>() { BoundaryCondition::MonochromaticBlue } else { BoundaryCondition::MonochromaticRed };
        let color = bc.monochromatic().expect("monochromatic");
        let map = loop {
            let m = sample_boltzmann(ell, BoltzmannOptions { vertex_budget: 2_000 }, &mut rng);
            match m {
                Ok(m) if m.num_inner() > 0 => break m,
                _ => continue,
            }
        };
        let w = sample_percolation(&map, bc, &mut rng);
        let loops = loop_ensemble(&map, &w)?;
        if coloring_from_loops(&map, &loops, color)? != w {
            roundtrip_fail += 1;
        }
        let v = rng.random_range(map.boundary_len()..map.num_vertices()) as u32;
        let mu = vec![1.0; map.num_vertices()];
        let wv = w.flipped(v)?;
        let d = loop_symmetric_difference(&map, &w, v, &mu)?;
        let back = loop_symmetric_difference(&map, &wv, v, &mu)?;
        let same = |a: &[crate::percolation::Loop], b: &[crate::percolation::Loop]| a.len() == b.len() && a.iter().all(|l| b.contains(l));
        let after = loop_ensemble(&map, &wv)?;
        let full_removed: Vec<_> = loops.loops.iter().filter(|l| !after.loops.contains(l)).cloned().collect();
        let full_added: Vec<_> = after.loops.iter().filter(|l| !loops.loops.contains(l)).cloned().collect();
        let ok = wv.flipped(v)? == w
            && same(&d.loops_removed, &back.loops_added)
            && same(&d.loops_added, &back.loops_removed)
            && same(&d.loops_removed, &full_removed)
            && same(&d.loops_added, &full_added);
        if !ok {
            involution_fail += 1;
        }
    }
    Ok(report(
        9,
        "round trip and involution",
        roundtrip_fail == 0 && involution_fail == 0,
        format!("{} pairs: {roundtrip_fail} round-trip failures, {involution_fail} involution failures", cfg.pairs),
        json!({"pairs": cfg.pairs, "roundtrip_failures": roundtrip_fail, "involution_failures": involution_fail}),
    ))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SamplerConfig {
    pub ell: usize,
    pub n_max: usize,
    pub samples: usize,
    pub seed: u64,
    pub alpha: f64,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig { ell: 4, n_max: 3, samples: 100_000, seed: 11, alpha: 0.01 }
    }
}

/// Chi-square of Boltzmann sample frequencies over the enumerated maps with
/// at most `n_max` inner vertices, plus one tail class.
pub fn sampler_chi_square(cfg: &SamplerConfig) -> Result<Report> {
    let z = partition_function(cfg.ell);
    let mut classes: HashMap<Vec<u32>, usize> = HashMap::new();
    let mut probs = Vec::new();
    for n in 0..=cfg.n_max {
        let w = CRITICAL_WEIGHT.powi(n as i32) / z;
        for_each_triangulation(cfg.ell, n, cfg.n_max.max(8), |m| {
            classes.insert(m.canonical_form(), probs.len());
            probs.push(w);
        })?;
    }
    let tail = 1.0 - probs.iter().sum::<f64>();
    let mut obs = vec![0.0; probs.len() + 1];
    let mut rng = stream(cfg.seed, "sampler");
    for _ in 0..cfg.samples {
        let m = sample_boltzmann(cfg.ell, BoltzmannOptions::default(), &mut rng)?;
        let k = if m.num_inner() <= cfg.n_max {
            *classes.get(&m.canonical_form()).ok_or_else(|| Error::Invalid("sampled map missing from the enumeration".into()))?
        } else {
            probs.len()
        };
        obs[k] += 1.0;
    }
    let n = cfg.samples as f64;
    let expected: Vec<f64> = probs.iter().chain(std::iter::once(&tail)).map(|p| p * n).collect();
    let stat: f64 = obs.iter().zip(&expected).map(|(o, e)| (o - e).powi(2) / e).sum();
    let df = (expected.len() - 1) as f64;
    let p = 1.0 - ChiSquared::new(df).expect("positive df").cdf(stat);
    Ok(report(
        10,
        "Boltzmann sampler chi-square",
        p > cfg.alpha,
        format!("χ² = {stat:.2} on {df} df, p = {p:.4} ({} classes)", expected.len()),
        json!({"chi2": stat, "df": df, "p_value": p, "min_expected": expected.iter().cloned().fold(f64::INFINITY, f64::min)}),
    ))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ContainmentConfig {
    pub inverse_delta: u32,
    pub colorings: usize,
    pub eps: Vec<f64>,
    pub seed: u64,
}

impl Default for ContainmentConfig {
    fn default() -> Self {
        ContainmentConfig { inverse_delta: 32, colorings: 1000, eps: vec![0.01, 0.1], seed: 12 }
    }
}

/// Every ε-pivotal vertex (Lebesgue areas) is ρ-important at ρ = 0.01·√ε,
/// √ε being the largest side with squares of Lebesgue measure below ε.
pub fn pivotal_containment(cfg: &ContainmentConfig) -> Result<Report> {
    let domain = LatticeDomain::build(&Shape::unit_disk(), 1.0 / cfg.inverse_delta as f64, DomainOptions::default())?;
    let map = domain.to_triangulation();
    let mu = lebesgue_weights(&domain);
    let mut rng = stream(cfg.seed, "containment");
    let mut pivotals = 0usize;
    let mut violations = 0usize;
    for _ in 0..cfg.colorings {
        let c = sample_percolation(&domain, BoundaryCondition::MonochromaticBlue, &mut rng);
        for &eps in &cfg.eps {
            let rho = 0.01 * eps.sqrt();
            let piv = eps_pivotal_set(&map, &c, eps, &mu)?;
            if piv.is_empty() {
                continue;
            }
            let imp = rho_important_set(&domain, &c, rho);
            pivotals += piv.len();
            violations += piv.iter().filter(|v| imp.binary_search(v).is_err()).count();
        }
    }
    Ok(report(
        11,
        "pivotal containment",
        violations == 0,
        format!("{pivotals} ε-pivotal vertices over {} colorings, {violations} not ρ-important", cfg.colorings),
        json!({"pivotals": pivotals, "violations": violations, "eps": cfg.eps}),
    ))
}
