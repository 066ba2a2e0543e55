use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::Context as _;
use cardylab::cardy::{crossing_counts, embed_with_seed};
use cardylab::dynamics::{run_dynamics, run_eps_cutoff, uniform_rates, DynTrajectory};
use cardylab::experiments::*;
use cardylab::field::{circle_variance_fit, clock_rates, FieldGrid, FieldSample, GffSampler, DEFAULT_RADIUS_STEPS, GAMMA, GREEN_NORMALIZATION};
use cardylab::lattice::LatticeDomain;
use cardylab::map::{sample_boltzmann, BoltzmannOptions, MarkedTriangulation, Triangulation};
use cardylab::measure::occupation_estimate;
use cardylab::percolation::{interface, loop_ensemble, sample_percolation, BoundaryCondition};
use cardylab::pivotal::{eps_pivotal_set, four_arm_with_seed, lebesgue_weights, pivotal_measure_lattice, pivotal_measure_map, rho_important_set, Alpha4Estimate};
use clap::Args;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::args::{DomainKind, DynModeArg, PivotalMode, Rational, RateSpec};
use crate::run::{Context, Run};
use crate::{svg, usage};

const BLUE: BoundaryCondition = BoundaryCondition::MonochromaticBlue;

fn report_payload(reports: &[Report]) -> Value {
    json!({ "passed": reports.iter().all(|r| r.passed), "reports": reports })
}

fn read_maps(path: &Path) -> anyhow::Result<Vec<Triangulation>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let maps = serde_json::Deserializer::from_str(&text)
        .into_iter::<Triangulation>()
        .collect::<Result<Vec<_>, _>>()
        .with_context(|| format!("parsing maps in {}", path.display()))?;
    if maps.is_empty() {
        return Err(usage(format!("{} contains no maps", path.display())));
    }
    Ok(maps)
}

/// `delta` is the exact mesh when the command line gave one.
fn alpha4_note(a: &Alpha4Estimate, delta: Value) -> Value {
    json!({ "value": a.value, "std_err": a.std_err, "samples": a.samples, "seed": a.seed, "delta": delta, "r": a.r,
            "provenance": "Monte Carlo four-arm probability to the square of half-side r" })
}

fn c_t_note() -> Value {
    json!({ "value": GREEN_NORMALIZATION, "provenance": "2π√3, unit-weight triangular Laplacian" })
}

#[derive(Args, Debug, Serialize)]
pub struct SampleMapArgs {
    /// Boundary length ℓ.
    #[arg(long, default_value_t = 4)]
    pub boundary: usize,
    #[arg(long, default_value_t = 1)]
    pub count: usize,
    /// Abandon a sample beyond this many inner vertices (exit 3).
    #[arg(long, default_value_t = 1_000_000)]
    pub vertex_budget: usize,
    /// Maps as JSON lines.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Chi-square test of sampled map frequencies instead.
    #[arg(long)]
    pub verify: bool,
    #[arg(long, default_value_t = 100_000)]
    pub samples: usize,
    /// Largest inner-vertex count given its own classes in the test.
    #[arg(long, default_value_t = 3)]
    pub n_max: usize,
}

pub fn sample_map(ctx: Context, a: SampleMapArgs) -> anyhow::Result<()> {
    let mut run = Run::new("sample-map", ctx, &a)?;
    if a.verify {
        run.note_stream("sampler");
        let r = sampler_chi_square(&SamplerConfig { ell: a.boundary, n_max: a.n_max, samples: a.samples, seed: run.seed(), alpha: 0.01 })?;
        return run.finish(report_payload(&[r]), None);
    }
    let mut rng = run.stream("sample-map");
    let mut lines = String::new();
    let mut maps = Vec::with_capacity(a.count);
    for i in 0..a.count {
        let m = sample_boltzmann(a.boundary, BoltzmannOptions { vertex_budget: a.vertex_budget }, &mut rng)?;
        maps.push(json!({ "index": i, "inner": m.num_inner(), "vertices": m.num_vertices(), "faces": m.num_faces() }));
        lines += &serde_json::to_string(&m)?;
        lines.push('\n');
    }
    if let Some(p) = &a.out {
        run.file(p, lines);
    }
    run.finish(json!({ "boundary": a.boundary, "maps": maps }), None)
}

#[derive(Args, Debug, Serialize)]
pub struct CrossingArgs {
    /// JSON-lines file of maps; each gets spread marks.
    #[arg(long, conflicts_with = "domain")]
    pub map: Option<PathBuf>,
    /// Quad crossing of a lattice domain (rhombus only).
    #[arg(long, value_enum)]
    pub domain: Option<DomainKind>,
    #[arg(long, default_value = "1/64")]
    pub delta: Rational,
    #[arg(long, default_value_t = 100_000)]
    pub samples: u64,
    /// CSV of per-vertex counts: map,v,count_a,count_b,count_c,p_a,p_b,p_c.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn crossing(ctx: Context, a: CrossingArgs) -> anyhow::Result<()> {
    let mut run = Run::new("crossing", ctx, &a)?;
    if a.samples == 0 {
        return Err(usage("--samples must be positive"));
    }
    match (&a.map, a.domain) {
        (Some(path), _) => {
            let maps = read_maps(path)?;
            let mut csv = String::from("map,v,count_a,count_b,count_c,p_a,p_b,p_c\n");
            let mut out = Vec::new();
            let n = a.samples as f64;
            for (i, m) in maps.into_iter().enumerate() {
                let marked = MarkedTriangulation::spread(m);
                let seed = run.child_seed(&format!("crossing/{i}"));
                let counts = crossing_counts(&marked, a.samples, seed);
                for (v, c) in counts.iter().enumerate() {
                    csv += &format!("{i},{v},{},{},{},{},{},{}\n", c[0], c[1], c[2], c[0] as f64 / n, c[1] as f64 / n, c[2] as f64 / n);
                }
                out.push(json!({ "index": i, "marks": [marked.a, marked.b, marked.c], "seed": seed, "counts": counts }));
            }
            if let Some(p) = &a.out {
                run.file(p, csv);
            }
            run.finish(json!({ "samples": a.samples, "maps": out }), None)
        }
        (None, Some(DomainKind::Rhombus)) => {
            run.note_stream("rhombus");
            let cfg = RhombusConfig { inverse_delta: a.delta.inverse()?, samples: a.samples, seed: run.seed(), sigmas: 3.0 };
            let r = rhombus_crossing(&cfg)?;
            if let Some(p) = &a.out {
                run.file(p, format!("delta,samples,hits,estimate,std_err\n{},{},{},{},{}\n", a.delta, cfg.samples, r.details["hits"], r.details["estimate"], r.details["std_err"]));
            }
            run.finish(report_payload(&[r]), None)
        }
        (None, Some(d)) => Err(usage(format!("quad crossings are implemented for --domain rhombus, not {d:?}"))),
        (None, None) => Err(usage("crossing needs --map FILE or --domain rhombus")),
    }
}

#[derive(Args, Debug, Serialize)]
pub struct EmbedArgs {
    /// Map file (JSON or JSON lines); see --index.
    #[arg(long, conflicts_with = "domain")]
    pub map: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub index: usize,
    /// `auto` (spread around the boundary) or three boundary edges `a,b,c`.
    #[arg(long, default_value = "auto")]
    pub marks: String,
    #[arg(long, value_enum)]
    pub domain: Option<DomainKind>,
    #[arg(long, default_value = "1/20")]
    pub delta: Rational,
    #[arg(long, default_value_t = 100_000)]
    pub samples: u64,
    /// Run the exact-oracle check over all small maps instead.
    #[arg(long)]
    pub oracle: bool,
    /// Largest inner-vertex count in the oracle sweep.
    #[arg(long, default_value_t = 5)]
    pub n_max: usize,
    /// Envelope JSON with per-vertex {v, x, y, z, se_x, se_y, se_z}.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub svg: Option<PathBuf>,
}

fn parse_marks(s: &str, map: &Triangulation) -> anyhow::Result<Option<[usize; 3]>> {
    if s == "auto" {
        return Ok(None);
    }
    let v: Vec<usize> = s.split(',').map(|t| t.trim().parse()).collect::<Result<_, _>>().map_err(|_| usage(format!("bad --marks `{s}`")))?;
    match v[..] {
        [a, b, c] if a < map.boundary_len() && b < map.boundary_len() && c < map.boundary_len() => Ok(Some([a, b, c])),
        _ => Err(usage(format!("--marks needs three boundary edges below {}", map.boundary_len()))),
    }
}

pub fn embed(ctx: Context, a: EmbedArgs) -> anyhow::Result<()> {
    let mut run = Run::new("embed", ctx, &a)?;
    if a.samples == 0 {
        return Err(usage("--samples must be positive"));
    }
    if a.oracle {
        run.note_stream("oracle/{ell}/{n}/{index}");
        run.note_stream("oracle/direct/{ell}/{n}/{index}");
        let cfg = OracleConfig { n_max: a.n_max, samples: a.samples, seed: run.seed(), ..OracleConfig::default() };
        let r = exact_oracle_embedding(&cfg)?;
        return run.finish(report_payload(&[r]), a.out.as_deref());
    }
    let marked = match (&a.map, a.domain) {
        (Some(path), _) => {
            let mut maps = read_maps(path)?;
            if a.index >= maps.len() {
                return Err(usage(format!("--index {} but the file holds {} maps", a.index, maps.len())));
            }
            let m = maps.swap_remove(a.index);
            match parse_marks(&a.marks, &m)? {
                None => MarkedTriangulation::spread(m),
                Some([x, y, z]) => MarkedTriangulation::new(m, x, y, z)?,
            }
        }
        (None, Some(d)) => {
            let dom = d.build(a.delta)?;
            let m = d.mark_points().map(|p| dom.nearest_boundary_position(p));
            MarkedTriangulation::new(dom.to_triangulation(), m[0], m[1], m[2])?
        }
        (None, None) => return Err(usage("embed needs --map FILE, --domain KIND or --oracle")),
    };
    let seed = run.child_seed("embed");
    run.note_stream("embed/batch/{k}");
    let e = embed_with_seed(&marked, a.samples, seed)?;
    let vertices: Vec<Value> = (0..e.num_vertices())
        .map(|v| {
            let (c, s) = (e.coords[v], e.std_err[v]);
            json!({ "v": v, "x": c.x, "y": c.y, "z": c.z, "se_x": s[0], "se_y": s[1], "se_z": s[2] })
        })
        .collect();
    if let Some(p) = &a.svg {
        run.file(p, svg::embedding(&marked.map, &e.coords, [marked.a, marked.b, marked.c]));
    }
    run.finish(json!({ "marks": [marked.a, marked.b, marked.c], "samples": a.samples, "seed": seed, "vertices": vertices }), a.out.as_deref())
}

#[derive(Args, Debug, Serialize)]
pub struct VerifyCardyArgs {
    #[arg(long, value_enum, default_value = "triangle")]
    pub domain: DomainKind,
    /// One or more mesh sizes, coarse to fine.
    #[arg(long, value_delimiter = ',', default_value = "1/10,1/20,1/40")]
    pub delta: Vec<Rational>,
    #[arg(long, default_value_t = 20_000)]
    pub samples: u64,
    /// Largest admissible sup discrepancy at the finest mesh.
    #[arg(long, default_value_t = 0.06)]
    pub max_sup: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn verify_cardy(ctx: Context, a: VerifyCardyArgs) -> anyhow::Result<()> {
    let mut run = Run::new("verify-cardy", ctx, &a)?;
    if a.domain != DomainKind::Triangle {
        return Err(usage("verify-cardy compares against the identity map and needs --domain triangle"));
    }
    if a.samples == 0 {
        return Err(usage("--samples must be positive"));
    }
    let inverse_deltas = a.delta.iter().map(|d| d.inverse()).collect::<anyhow::Result<Vec<_>>>()?;
    for k in &inverse_deltas {
        run.note_stream(format!("triangle/{k}"));
    }
    let cfg = TriangleConfig { inverse_deltas, samples: a.samples, seed: run.seed(), max_sup: a.max_sup, sigmas: 3.0 };
    let levels = triangle_levels(&cfg)?;
    let reports = [smirnov_triangle(&cfg, &levels), sum_defect(&cfg, &levels)];
    let mut payload = report_payload(&reports);
    payload["levels"] = serde_json::to_value(&levels)?;
    run.finish(payload, a.out.as_deref())
}

#[derive(Args, Debug, Serialize)]
pub struct FourArmArgs {
    #[arg(long, value_delimiter = ',', default_value = "1/16,1/32,1/64,1/128")]
    pub delta_list: Vec<Rational>,
    /// Half-side of the outer square.
    #[arg(long, default_value_t = 1.0)]
    pub r: f64,
    #[arg(long, default_value_t = 100_000)]
    pub samples: u64,
    #[arg(long, default_value_t = -1.25, allow_hyphen_values = true)]
    pub target: f64,
    #[arg(long, default_value_t = 0.15)]
    pub tol: f64,
    /// CSV: delta,value,std_err,hits,samples,seed.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn four_arm(ctx: Context, a: FourArmArgs) -> anyhow::Result<()> {
    let mut run = Run::new("four-arm", ctx, &a)?;
    let inverse_deltas = a.delta_list.iter().map(|d| d.inverse()).collect::<anyhow::Result<Vec<_>>>()?;
    for k in &inverse_deltas {
        run.note_stream(format!("four-arm/{k}"));
    }
    run.note_stream("four-arm/batch/{k}");
    let cfg = FourArmConfig { inverse_deltas, r: a.r, samples: a.samples, seed: run.seed(), target: a.target, tol: a.tol };
    let (payload, est) = if cfg.inverse_deltas.len() >= 2 {
        let (r, est) = four_arm_exponent(&cfg)?;
        (report_payload(&[r]), est)
    } else {
        let est: Vec<Alpha4Estimate> = cfg
            .inverse_deltas
            .iter()
            .map(|&k| four_arm_with_seed(1.0 / k as f64, cfg.r, cfg.samples, cardylab::rng::seed_split(cfg.seed, &format!("four-arm/{k}"))))
            .collect::<Result<_, _>>()?;
        (json!({ "estimates": est }), est)
    };
    let mut csv = String::from("delta,value,std_err,hits,samples,seed\n");
    for (d, e) in a.delta_list.iter().zip(&est) {
        csv += &format!("{d},{},{},{},{},{}\n", e.value, e.std_err, e.hits, e.samples, e.seed);
    }
    run.normalization("alpha4", Value::Array(a.delta_list.iter().zip(&est).map(|(d, e)| alpha4_note(e, json!(d))).collect()));
    if let Some(p) = &a.out {
        run.file(p, csv);
    }
    run.finish(payload, None)
}

#[derive(Args, Debug, Serialize)]
pub struct PivotalsArgs {
    #[arg(long, value_enum, default_value = "lattice")]
    pub mode: PivotalMode,
    #[arg(long, value_enum, default_value = "disk")]
    pub domain: DomainKind,
    #[arg(long, default_value = "1/32")]
    pub delta: Rational,
    /// Boundary length of the Boltzmann map in map mode.
    #[arg(long, default_value_t = 6)]
    pub boundary: usize,
    /// Loop-area thresholds (Lebesgue areas on lattices, vertex counts on maps).
    #[arg(long, value_delimiter = ',', default_value = "0.01,0.1")]
    pub eps: Vec<f64>,
    /// Four-arm samples for the pivotal-measure normalization (0 skips it).
    #[arg(long, default_value_t = 0)]
    pub alpha4_samples: u64,
    /// Check that every ε-pivotal vertex is ρ-important over many colorings.
    #[arg(long)]
    pub verify: bool,
    #[arg(long, default_value_t = 1000)]
    pub colorings: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub svg: Option<PathBuf>,
}

pub fn pivotals(ctx: Context, a: PivotalsArgs) -> anyhow::Result<()> {
    let mut run = Run::new("pivotals", ctx, &a)?;
    if a.eps.iter().any(|&e| !(e >= 0.0)) {
        return Err(usage("--eps values must be nonnegative"));
    }
    if a.mode == PivotalMode::Map {
        if a.verify || a.svg.is_some() {
            return Err(usage("--verify and --svg need --mode lattice"));
        }
        let mut rng = run.stream("pivotals/map");
        let map = sample_boltzmann(a.boundary, BoltzmannOptions::default(), &mut rng)?;
        let c = sample_percolation(&map, BLUE, &mut rng);
        let mu = vec![1.0; map.num_vertices()];
        let per = a
            .eps
            .iter()
            .map(|&eps| {
                let pm = pivotal_measure_map(&map, &c, eps, &mu)?;
                let pv: Vec<u32> = pm.measure.atoms.iter().filter_map(|x| if let cardylab::measure::Location::Vertex(v) = x.at { Some(v) } else { None }).collect();
                Ok(json!({ "eps": eps, "count": pm.count, "pivotal": pv, "mass": pm.measure.total() }))
            })
            .collect::<cardylab::Result<Vec<_>>>()?;
        return run.finish(json!({ "mode": "map", "map": map, "inner": map.num_inner(), "coloring": c, "thresholds": per }), a.out.as_deref());
    }
    let k = a.delta.inverse()?;
    if a.verify {
        if a.domain != DomainKind::Disk {
            return Err(usage("--verify runs on --domain disk"));
        }
        run.note_stream("containment");
        let r = pivotal_containment(&ContainmentConfig { inverse_delta: k, colorings: a.colorings, eps: a.eps.clone(), seed: run.seed() })?;
        return run.finish(report_payload(&[r]), a.out.as_deref());
    }
    let dom = a.domain.build(a.delta)?;
    let map = dom.to_triangulation();
    let mut rng = run.stream("pivotals/coloring");
    let c = sample_percolation(&dom, BLUE, &mut rng);
    let mu = lebesgue_weights(&dom);
    let a4 = if a.alpha4_samples > 0 {
        let seed = run.child_seed("pivotals/alpha4");
        let est = four_arm_with_seed(a.delta.value(), 1.0, a.alpha4_samples, seed)?;
        run.normalization("alpha4", alpha4_note(&est, json!(a.delta)));
        Some(est)
    } else {
        None
    };
    let mut per = Vec::new();
    let mut first = Vec::new();
    for &eps in &a.eps {
        let piv = eps_pivotal_set(&map, &c, eps, &mu)?;
        let rho = 0.01 * eps.sqrt();
        let imp = rho_important_set(&dom, &c, rho);
        let contained = piv.iter().all(|v| imp.binary_search(v).is_ok());
        let mass = match &a4 {
            Some(est) => Some(pivotal_measure_lattice(&dom, &c, eps, est)?.measure.total()),
            None => None,
        };
        if first.is_empty() {
            first = piv.clone();
        }
        per.push(json!({ "eps": eps, "rho": rho, "count": piv.len(), "pivotal": piv, "important": imp.len(), "contained": contained, "mass": mass }));
    }
    if let Some(p) = &a.svg {
        let loops = loop_ensemble(&map, &c)?;
        run.file(p, svg::hexagons(&dom, &c, Some(&loops), &first));
    }
    run.finish(json!({ "mode": "lattice", "delta": a.delta, "inner": dom.num_inner(), "coloring": c, "thresholds": per }), a.out.as_deref())
}

/// A field sample together with its domain, as written by `gff --field-out`.
#[derive(Serialize, Deserialize)]
struct FieldFile {
    domain: LatticeDomain,
    values: Vec<f64>,
    c_t: f64,
}

#[derive(Args, Debug, Serialize)]
pub struct GffArgs {
    #[arg(long, value_enum, default_value = "disk")]
    pub domain: DomainKind,
    #[arg(long, default_value = "1/64")]
    pub delta: Rational,
    #[arg(long, value_delimiter = ',', default_value = "1/16,1/8,1/4")]
    pub radii: Vec<Rational>,
    #[arg(long, default_value_t = 10_000)]
    pub samples: usize,
    /// Admissible deviation of the variance slope from 1.
    #[arg(long, default_value_t = 0.05)]
    pub tol: f64,
    /// Also write one field sample (domain, values, c_T) as JSON.
    #[arg(long)]
    pub field_out: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn domain_center(d: DomainKind) -> [f64; 2] {
    match d {
        DomainKind::Disk => [0.0, 0.0],
        DomainKind::Triangle => [0.5, cardylab::lattice::SQRT3 / 6.0],
        DomainKind::Rhombus => [0.75, cardylab::lattice::SQRT3_2 / 2.0],
        DomainKind::Square => [0.5, 0.5],
    }
}

pub fn gff(ctx: Context, a: GffArgs) -> anyhow::Result<()> {
    let mut run = Run::new("gff", ctx, &a)?;
    if a.samples < 2 {
        return Err(usage("--samples must be at least 2"));
    }
    if a.radii.len() < 2 {
        return Err(usage("--radii needs at least two radii for the slope"));
    }
    let grid = Arc::new(FieldGrid::new(a.domain.build(a.delta)?));
    let sampler = GffSampler::new(grid.clone())?;
    run.normalization("c_t", c_t_note());
    run.note_stream("gff/chunk/{k}");
    let radii: Vec<f64> = a.radii.iter().map(|r| r.value()).collect();
    let fit = circle_variance_fit(&sampler, domain_center(a.domain), &radii, a.samples, run.seed())?;
    let passed = (fit.slope - 1.0).abs() <= a.tol;
    if let Some(p) = &a.field_out {
        let mut rng = run.stream("gff/sample");
        let h = sampler.sample(&mut rng);
        let f = FieldFile { domain: grid.domain().clone(), values: h.values, c_t: h.c_t };
        run.file(p, serde_json::to_string(&f)?);
    }
    run.finish(json!({ "passed": passed, "fit": fit, "center": domain_center(a.domain), "inner": grid.domain().num_inner() }), a.out.as_deref())
}

#[derive(Args, Debug, Serialize)]
pub struct GmcArgs {
    #[arg(long, default_value = "1/32")]
    pub delta: Rational,
    #[arg(long, default_value_t = 100)]
    pub fields: usize,
    #[arg(long, value_delimiter = ',', default_value = "-1,0.3,2", allow_hyphen_values = true)]
    pub shifts: Vec<f64>,
    #[arg(long, default_value_t = 1e-12)]
    pub tol: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn gmc(ctx: Context, a: GmcArgs) -> anyhow::Result<()> {
    let mut run = Run::new("gmc", ctx, &a)?;
    run.normalization("c_t", c_t_note());
    run.normalization("gamma", json!(GAMMA));
    run.normalization("regularization_radius", json!(DEFAULT_RADIUS_STEPS * a.delta.value()));
    run.note_stream("gff/chunk/{k}");
    let r = gmc_shift(&GmcShiftConfig { inverse_delta: a.delta.inverse()?, fields: a.fields, shifts: a.shifts.clone(), seed: run.seed(), tol: a.tol })?;
    run.finish(report_payload(&[r]), a.out.as_deref())
}

#[derive(Args, Debug, Serialize)]
pub struct DynamicsArgs {
    #[arg(long, value_enum, default_value = "full")]
    pub mode: DynModeArg,
    /// Loop-area threshold (Lebesgue) for --mode cutoff.
    #[arg(long)]
    pub eps: Option<f64>,
    /// `uniform:R` or `field:PATH` (a file from `gff --field-out`).
    #[arg(long, default_value = "uniform:1")]
    pub rates: RateSpec,
    #[arg(long, value_enum, default_value = "disk")]
    pub domain: DomainKind,
    #[arg(long, default_value = "1/16")]
    pub delta: Rational,
    #[arg(long, default_value_t = 1.0)]
    pub horizon: f64,
    /// Four-arm samples normalizing field-driven rates.
    #[arg(long, default_value_t = 20_000)]
    pub alpha4_samples: u64,
    /// Trajectory as JSON lines, one event {t, v, applied} per line.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Final state with its loops.
    #[arg(long)]
    pub svg: Option<PathBuf>,
    /// Loop round-trip and flip-involution check on random maps instead.
    #[arg(long)]
    pub verify: bool,
    #[arg(long, default_value_t = 10_000)]
    pub pairs: usize,
}

pub fn dynamics(ctx: Context, a: DynamicsArgs) -> anyhow::Result<()> {
    let mut run = Run::new("dynamics", ctx, &a)?;
    if a.verify {
        run.note_stream("roundtrip");
        let r = roundtrip_involution(&RoundTripConfig { pairs: a.pairs, seed: run.seed() })?;
        return run.finish(report_payload(&[r]), None);
    }
    if !(a.horizon >= 0.0 && a.horizon.is_finite()) {
        return Err(usage("--horizon must be finite and nonnegative"));
    }
    let eps = match (a.mode, a.eps) {
        (DynModeArg::Cutoff, Some(e)) if e >= 0.0 => Some(e),
        (DynModeArg::Cutoff, _) => return Err(usage("--mode cutoff needs --eps ≥ 0")),
        (DynModeArg::Full, Some(_)) => return Err(usage("--eps only applies to --mode cutoff")),
        (DynModeArg::Full, None) => None,
    };
    let (dom, rates) = match &a.rates {
        RateSpec::Uniform(r) => {
            let dom = a.domain.build(a.delta)?;
            let rates = uniform_rates(dom.num_vertices(), dom.num_boundary(), *r);
            (dom, rates)
        }
        RateSpec::Field(path) => {
            let text = fs::read_to_string(path).with_context(|| format!("reading {path}"))?;
            let f: FieldFile = serde_json::from_str(&text).with_context(|| format!("parsing field file {path}"))?;
            let dom = f.domain.clone();
            let grid = Arc::new(FieldGrid::new(f.domain));
            let h = FieldSample::from_values(grid, f.values, f.c_t)?;
            let seed = run.child_seed("dynamics/alpha4");
            let est = four_arm_with_seed(dom.delta(), 1.0, a.alpha4_samples, seed)?;
            run.normalization("alpha4", alpha4_note(&est, json!(dom.delta())));
            run.normalization("c_t", json!({ "value": f.c_t, "provenance": "field file" }));
            let rates = clock_rates(&h, est.value, DEFAULT_RADIUS_STEPS * dom.delta())?;
            (dom, rates)
        }
    };
    let map = dom.to_triangulation();
    let initial = sample_percolation(&dom, BLUE, &mut run.stream("dynamics/initial"));
    let mut clock = run.stream("dynamics/clock");
    let res = match eps {
        None => run_dynamics(&initial, &rates, a.horizon, &mut clock),
        Some(e) => run_eps_cutoff(&map, &initial, &rates, e, &lebesgue_weights(&dom), a.horizon, &mut clock),
    };
    let traj: DynTrajectory = match res {
        Ok(t) => t,
        Err(cardylab::Error::ZeroTotalRate(t)) => *t,
        Err(e) => return Err(e.into()),
    };
    let mut lines = String::new();
    for e in &traj.events {
        lines += &serde_json::to_string(e)?;
        lines.push('\n');
    }
    if let Some(p) = &a.out {
        run.file(p, lines);
    }
    let fin = traj.final_coloring();
    if let Some(p) = &a.svg {
        let loops = loop_ensemble(&map, &fin)?;
        run.file(p, svg::hexagons(&dom, &fin, Some(&loops), &[]));
    }
    let payload = json!({
        "domain": dom, "horizon": traj.horizon, "mode": traj.mode, "rate_source": traj.rate_source, "total_rate": traj.total_rate,
        "events": traj.events.len(), "applied": traj.applied_count(), "initial": traj.initial, "final": fin,
    });
    run.finish(payload, None)
}

#[derive(Args, Debug, Serialize)]
pub struct CtmcArgs {
    #[arg(long, default_value_t = 20)]
    pub maps: usize,
    /// Inner-vertex cap for the sampled maps (state space 2^n).
    #[arg(long, default_value_t = 10)]
    pub max_inner: usize,
    #[arg(long, default_value_t = 1e-12)]
    pub tol: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn ctmc(ctx: Context, a: CtmcArgs) -> anyhow::Result<()> {
    let mut run = Run::new("ctmc", ctx, &a)?;
    if a.max_inner == 0 {
        return Err(usage("--max-inner must be positive"));
    }
    if a.max_inner > cardylab::dynamics::MAX_CTMC_INNER {
        return Err(cardylab::Error::TooManyStates { k: a.max_inner, max: cardylab::dynamics::MAX_CTMC_INNER }.into());
    }
    run.note_stream("ctmc");
    let r = ctmc_stationarity(&CtmcConfig { maps: a.maps, max_inner: a.max_inner, seed: run.seed(), tol: a.tol })?;
    run.finish(report_payload(&[r]), a.out.as_deref())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PointSet {
    Interface,
    Pivotals,
}

#[derive(Args, Debug, Serialize)]
pub struct OccupationArgs {
    #[arg(long, value_enum, default_value = "interface")]
    pub set: PointSet,
    #[arg(long, value_enum, default_value = "disk")]
    pub domain: DomainKind,
    #[arg(long, default_value = "1/64")]
    pub delta: Rational,
    /// Dimension d in r^{d−2}; defaults to 7/4 for interfaces and 3/4 for pivotals.
    #[arg(long)]
    pub dim: Option<f64>,
    #[arg(long, default_value_t = 0.05)]
    pub radius: f64,
    #[arg(long, default_value_t = 4)]
    pub cells: usize,
    /// Loop-area threshold for --set pivotals.
    #[arg(long, default_value_t = 0.01)]
    pub eps: f64,
    /// CSV of atoms: x,y,mass.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn occupation(ctx: Context, a: OccupationArgs) -> anyhow::Result<()> {
    let mut run = Run::new("occupation", ctx, &a)?;
    let dom = a.domain.build(a.delta)?;
    let map = dom.to_triangulation();
    let c = sample_percolation(&dom, BLUE, &mut run.stream("occupation/coloring"));
    let (points, dim): (Vec<[f64; 2]>, f64) = match a.set {
        PointSet::Interface => {
            let m = a.domain.mark_points().map(|p| dom.nearest_boundary_position(p));
            let path = interface(&map, m[2], m[1], &c)?;
            let pts = path
                .half_edges
                .iter()
                .map(|&h| {
                    let (p, q) = (dom.position(map.origin(h)), dom.position(map.dest(h)));
                    [(p[0] + q[0]) / 2.0, (p[1] + q[1]) / 2.0]
                })
                .collect();
            (pts, a.dim.unwrap_or(1.75))
        }
        PointSet::Pivotals => {
            let piv = eps_pivotal_set(&map, &c, a.eps, &lebesgue_weights(&dom))?;
            (piv.iter().map(|&v| dom.position(v)).collect(), a.dim.unwrap_or(0.75))
        }
    };
    let m = occupation_estimate(&points, dim, a.radius, a.cells)?;
    if let Some(p) = &a.csv {
        let mut csv = String::from("x,y,mass\n");
        for at in &m.atoms {
            if let cardylab::measure::Location::Point([x, y]) = at.at {
                csv += &format!("{x},{y},{}\n", at.mass);
            }
        }
        run.file(p, csv);
    }
    run.finish(json!({ "set": a.set, "points": points.len(), "dim": dim, "radius": a.radius, "atoms": m.len(), "total": m.total() }), a.out.as_deref())
}
