#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;

use carnot_core::cantor::LadderIndex;
use carnot_core::gradient::{
    horizontal_gradient, polynomial_family, preimage_scan, MinimizerConfig, PreimageConfig, QuadraticInstance,
};
use carnot_core::nondiff::{
    bump_make, ladder_piece_sum, quotient_scan, sampled_lipschitz, FnField, ScalarField,
};
use carnot_core::porosity::{classify, porosity_profile, ScaleLadder, SearchConfig};
use carnot_core::report::{curve_table, json_report, num, profile_table, scan_table, RunManifest, Table};
use carnot_core::sets::{named_set, BBox, SET_NAMES};
use carnot_core::whitney::{cover_verify, whitney_cover, CoverConfig};
use carnot_core::{cc_estimate, CcSettings, Error, GPoint, GroupSpec, Metric};

#[derive(Parser)]
#[command(name = "carnot", version, about = "Porosity scans, Whitney covers and derivative experiments on Carnot groups")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Subcommand)]
enum Command {
    /// Porosity profile of a named set at a point.
    PorosityScan,
    /// Sampled members of a named set.
    SetDemo {
        #[arg(long, default_value_t = 1000)]
        samples: usize,
    },
    /// Whitney cover of the complement of a named set, with verification.
    CoverBuild {
        /// `lo1,…,lon,hi1,…,hin`; defaults to the set's bounding box.
        #[arg(long)]
        domain: Option<String>,
        #[arg(long, default_value_t = 6.0)]
        c: f64,
    },
    /// Builds the ladder sum on the line and dumps it on a grid.
    NondiffBuild {
        #[arg(long, default_value_t = 8)]
        pieces: usize,
        #[arg(long, default_value_t = 2001)]
        grid: usize,
    },
    /// Symmetric quotients of the ladder sum at a point.
    QuotientScan {
        #[arg(long, default_value_t = 8)]
        pieces: usize,
        #[arg(long, default_value_t = 64)]
        directions: usize,
    },
    /// Gradient-lab scenarios: polynomials, minimizer, preimage.
    GradientDemo {
        #[arg(long, default_value = "polynomials")]
        scenario: String,
        #[arg(long, default_value_t = 10)]
        instances: usize,
    },
    /// Carnot-Carathéodory distance from the origin to --point.
    CcBench,
}

#[derive(Args, Default, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct Common {
    #[arg(long, global = true)]
    set: Option<String>,
    #[arg(long, global = true)]
    metric: Option<String>,
    /// Comma-separated coordinates.
    #[arg(long, global = true, allow_hyphen_values = true)]
    point: Option<String>,
    /// Number of scales in the ladder.
    #[arg(long, global = true)]
    scales: Option<usize>,
    /// Largest scale of the ladder.
    #[arg(long, global = true)]
    r0: Option<f64>,
    #[arg(long, global = true)]
    depth: Option<u32>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    cc_segments: Option<usize>,
    #[arg(long, global = true)]
    cc_iters: Option<usize>,
    #[arg(long, global = true)]
    cc_penalty: Option<f64>,
    /// JSON file with any of the flags above; flags on the command line win.
    #[arg(long, global = true)]
    #[serde(skip)]
    config: Option<PathBuf>,
}

macro_rules! merge {
    ($a:ident, $b:ident; $($f:ident),*) => { $( if $a.$f.is_none() { $a.$f = $b.$f; } )* };
}

/// Resolved parameters, recorded verbatim in every manifest.
#[derive(Serialize)]
struct Params {
    set: String,
    metric: String,
    point: Option<Vec<f64>>,
    scales: usize,
    r0: f64,
    depth: u32,
    seed: u64,
    cc_segments: usize,
    cc_iters: usize,
    cc_penalty: f64,
    #[serde(flatten)]
    extra: serde_json::Value,
}

struct Failure(u8, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::ExperimentInvalid(_) | Error::ConstructionFailed(_) => 3,
            Error::Internal(_) | Error::Json(_) => 1,
            _ => 2,
        };
        Failure(code, e.to_string())
    }
}

fn bad(msg: impl Into<String>) -> Failure {
    Failure(2, msg.into())
}

fn io(e: std::io::Error) -> Failure {
    Failure(1, e.to_string())
}

fn parse_list(s: &str) -> Result<Vec<f64>, Failure> {
    s.split(',')
        .map(|v| v.trim().parse::<f64>().map_err(|_| bad(format!("bad number '{v}' in '{s}'"))))
        .collect()
}

fn registry() -> String {
    format!(
        "known sets: {}\nknown metrics: euclidean, koranyi, cc, quasi, snowflake:<eps>:<base>",
        SET_NAMES.join(", ")
    )
}

struct Ctx {
    p: Params,
    out: PathBuf,
}

impl Ctx {
    fn metric(&self) -> Result<Metric, Failure> {
        let mut m = Metric::parse(&self.p.metric).map_err(|e| bad(format!("{e}\n{}", registry())))?;
        if let Metric::Cc(s) = &mut m {
            *s = self.cc();
        }
        Ok(m)
    }

    fn cc(&self) -> CcSettings {
        CcSettings { segments: self.p.cc_segments, iters: self.p.cc_iters, penalty: self.p.cc_penalty }
    }

    fn point(&self, n: usize) -> Result<GPoint, Failure> {
        let v = self.p.point.clone().unwrap_or_else(|| vec![0.0; n]);
        if v.len() != n {
            return Err(bad(format!("--point needs {n} coordinates, got {}", v.len())));
        }
        Ok(GPoint(v))
    }

    fn manifest(&self, sub: &str) -> RunManifest {
        RunManifest::new(sub, serde_json::to_value(&self.p).expect("params serialize"), self.p.seed)
    }

    fn write(&self, name: &str, text: &str) -> Result<(), Failure> {
        fs::create_dir_all(&self.out).map_err(io)?;
        fs::write(self.out.join(name), text).map_err(io)
    }
}

fn resolve(cli: &Cli) -> Result<Common, Failure> {
    let mut c = cli.common.clone();
    if let Some(path) = &c.config {
        let text = fs::read_to_string(path).map_err(|e| bad(format!("{}: {e}", path.display())))?;
        let file: Common = serde_json::from_str(&text).map_err(|e| bad(format!("{}: {e}", path.display())))?;
        merge!(c, file; set, metric, point, scales, r0, depth, seed, threads, out, cc_segments, cc_iters, cc_penalty);
    }
    Ok(c)
}

fn extra(cmd: &Command) -> serde_json::Value {
    match cmd {
        Command::SetDemo { samples } => json!({ "samples": samples }),
        Command::CoverBuild { domain, c } => json!({ "domain": domain, "c": c }),
        Command::NondiffBuild { pieces, grid } => json!({ "pieces": pieces, "grid": grid }),
        Command::QuotientScan { pieces, directions } => json!({ "pieces": pieces, "directions": directions }),
        Command::GradientDemo { scenario, instances } => json!({ "scenario": scenario, "instances": instances }),
        Command::PorosityScan | Command::CcBench => json!({}),
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    let c = resolve(&cli)?;
    if let Some(t) = c.threads {
        if t == 0 {
            return Err(bad("--threads must be positive"));
        }
        rayon::ThreadPoolBuilder::new().num_threads(t).build_global().map_err(|e| Failure(1, e.to_string()))?;
    }
    let cc_default = CcSettings::default();
    let point = c.point.as_deref().map(parse_list).transpose()?;
    let ctx = Ctx {
        p: Params {
            set: c.set.unwrap_or_else(|| "pe".into()),
            metric: c.metric.unwrap_or_else(|| "koranyi".into()),
            point,
            scales: c.scales.unwrap_or(20),
            r0: c.r0.unwrap_or(0.5),
            depth: c.depth.unwrap_or(40),
            seed: c.seed.unwrap_or(1),
            cc_segments: c.cc_segments.unwrap_or(cc_default.segments),
            cc_iters: c.cc_iters.unwrap_or(cc_default.iters),
            cc_penalty: c.cc_penalty.unwrap_or(cc_default.penalty),
            extra: extra(&cli.command),
        },
        out: c.out.unwrap_or_else(|| PathBuf::from(".")),
    };
    match &cli.command {
        Command::PorosityScan => porosity_scan(&ctx),
        Command::SetDemo { samples } => set_demo(&ctx, *samples),
        Command::CoverBuild { domain, c } => cover_build(&ctx, domain.as_deref(), *c),
        Command::NondiffBuild { pieces, grid } => nondiff_build(&ctx, *pieces, *grid),
        Command::QuotientScan { pieces, directions } => quotient(&ctx, *pieces, *directions),
        Command::GradientDemo { scenario, instances } => gradient_demo(&ctx, scenario, *instances),
        Command::CcBench => cc_bench(&ctx),
    }
}

fn set(ctx: &Ctx) -> Result<std::sync::Arc<dyn carnot_core::sets::SetOracle>, Failure> {
    named_set(&ctx.p.set, ctx.p.depth).map_err(|e| bad(format!("{e}\n{}", registry())))
}

fn porosity_scan(ctx: &Ctx) -> Result<(), Failure> {
    let set = set(ctx)?;
    let metric = ctx.metric()?;
    let base = ctx.point(set.spec().n())?;
    let ladder = ScaleLadder { r0: ctx.p.r0, q: 0.5, count: ctx.p.scales };
    let search = SearchConfig { seed: ctx.p.seed, ..Default::default() };
    let profile = porosity_profile(set.as_ref(), &metric, &base, &ladder, &search)?;
    let verdict = classify(&profile, 0.05, 1e-3);
    let m = ctx.manifest("porosity-scan");
    ctx.write("profile.csv", &profile_table(&profile).to_csv(&m))?;
    ctx.write("profile.json", &json_report(&m, &json!({ "profile": profile, "verdict": verdict })))?;
    println!("verdict: {verdict}");
    Ok(())
}

fn set_demo(ctx: &Ctx, samples: usize) -> Result<(), Failure> {
    let set = set(ctx)?;
    let n = set.spec().n();
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.p.seed);
    let pts = set.sample_members(&mut rng, samples);
    let mut t = Table::new((1..=n).map(|i| format!("x{i}")));
    for p in &pts {
        t.push(p.iter().map(|&v| num(v)).collect());
    }
    let m = ctx.manifest("set-demo");
    ctx.write("members.csv", &t.to_csv(&m))?;
    let bbox = set.bbox();
    ctx.write("set.json", &json_report(&m, &json!({ "name": set.name(), "n": n, "bbox": { "lo": bbox.lo, "hi": bbox.hi }, "samples": pts.len() })))?;
    println!("{}: {} sampled members", set.name(), pts.len());
    Ok(())
}

fn cover_build(ctx: &Ctx, domain: Option<&str>, c: f64) -> Result<(), Failure> {
    let set = set(ctx)?;
    let n = set.spec().n();
    let domain = match domain {
        Some(s) => {
            let v = parse_list(s)?;
            if v.len() != 2 * n {
                return Err(bad(format!("--domain needs {} numbers", 2 * n)));
            }
            BBox::new(v[..n].to_vec(), v[n..].to_vec())
        }
        None => set.bbox(),
    };
    if domain.lo.iter().zip(&domain.hi).any(|(a, b)| !(a < b) || !b.is_finite() || !a.is_finite()) {
        return Err(bad("domain must be a bounded box with positive sides; pass --domain"));
    }
    let mut cfg = CoverConfig { c, metric: ctx.metric()?, ..Default::default() };
    cfg.verify.seed = ctx.p.seed;
    let cover = whitney_cover(set.as_ref(), &domain, &cfg)?;
    let rep = cover_verify(&cover, set.as_ref(), &cfg.verify)?;
    let mut t = Table::new((1..=n).map(|i| format!("x{i}")).chain(["radius".to_string()]));
    for b in &cover.balls {
        t.push(b.center.iter().map(|&v| num(v)).chain([num(b.radius)]).collect());
    }
    let m = ctx.manifest("cover-build");
    ctx.write("balls.csv", &t.to_csv(&m))?;
    ctx.write("cover.json", &json_report(&m, &rep))?;
    println!("balls: {}  achieved C: {:.4}  pass: {}", rep.balls, rep.achieved_c, rep.pass);
    if !rep.pass {
        return Err(Failure(3, "cover verification failed".into()));
    }
    Ok(())
}

fn ladder_field(ctx: &Ctx, pieces: usize) -> Result<carnot_core::nondiff::PieceSum, Failure> {
    let bump = bump_make(&GroupSpec::euclidean(1), 0.1)?;
    Ok(ladder_piece_sum(pieces, ctx.p.depth, &bump, &CoverConfig::default())?)
}

fn nondiff_build(ctx: &Ctx, pieces: usize, grid: usize) -> Result<(), Failure> {
    if grid < 2 {
        return Err(bad("--grid must be at least 2"));
    }
    let f = ladder_field(ctx, pieces)?;
    let metric = Metric::Euclidean;
    let lip = sampled_lipschitz(&f, &metric, &BBox::new(vec![0.0], vec![1.0]), 20_000, ctx.p.seed);
    let mut t = Table::new(["x", "f"]);
    for k in 0..grid {
        let x = k as f64 / (grid - 1) as f64;
        t.push(vec![num(x), num(f.eval(&[x]))]);
    }
    let summary: Vec<_> = f
        .pieces()
        .iter()
        .map(|p| json!({ "set": p.set.name(), "c": p.c, "balls": p.field.cover().balls.len() }))
        .collect();
    let m = ctx.manifest("nondiff-build");
    ctx.write("snapshot.csv", &t.to_csv(&m))?;
    ctx.write("nondiff.json", &json_report(&m, &json!({ "beta": f.beta, "lipschitz_sampled": lip, "pieces": summary })))?;
    println!("pieces: {}  beta: {:.4}  sampled Lipschitz: {:.6}", f.pieces().len(), f.beta, lip);
    Ok(())
}

fn quotient(ctx: &Ctx, pieces: usize, directions: usize) -> Result<(), Failure> {
    let f = ladder_field(ctx, pieces)?;
    let x = match &ctx.p.point {
        Some(_) => ctx.point(1)?,
        None => GPoint(vec![LadderIndex::new(1, 0)?.envelope().0]),
    };
    let scales: Vec<f64> = (0..ctx.p.scales).map(|k| ctx.p.r0 * 0.5f64.powi(k as i32)).collect();
    let rows = quotient_scan(&f, &x, &Metric::Euclidean, &scales, directions, ctx.p.seed)?;
    let m = ctx.manifest("quotient-scan");
    ctx.write("quotients.csv", &scan_table(&rows, 1).to_csv(&m))?;
    let worst = rows.iter().map(|r| r.max_quotient).fold(f64::INFINITY, f64::min);
    println!("point: {}  min over scales of max quotient: {:.4}", x[0], worst);
    Ok(())
}

fn gradient_demo(ctx: &Ctx, scenario: &str, instances: usize) -> Result<(), Failure> {
    let m = ctx.manifest("gradient-demo");
    let h1 = GroupSpec::heisenberg();
    match scenario {
        "polynomials" => {
            let x = ctx.point(3)?;
            let mut t = Table::new(["function", "direction", "finite_difference", "analytic", "error"]);
            let mut worst = 0.0f64;
            for poly in polynomial_family() {
                let field = FnField::new(h1.clone(), f64::INFINITY, poly.f);
                let fd = horizontal_gradient(&field, &x, 1e-4)?;
                let exact = (poly.grad)(&x);
                for i in 0..2 {
                    let err = (fd[i] - exact[i]).abs();
                    worst = worst.max(err);
                    t.push(vec![poly.name.into(), format!("X{}", i + 1), num(fd[i]), num(exact[i]), num(err)]);
                }
            }
            ctx.write("polynomials.csv", &t.to_csv(&m))?;
            println!("max |fd - analytic|: {worst:.3e}");
        }
        "minimizer" => {
            let bump = bump_make(&h1, 0.1)?;
            let mut rng = ChaCha8Rng::seed_from_u64(ctx.p.seed);
            let mut rows = Vec::new();
            let mut hits = 0;
            for _ in 0..instances {
                let inst = QuadraticInstance::random(&mut rng, bump.beta);
                let rep = inst.run(&bump, &MinimizerConfig::default())?;
                hits += usize::from(rep.in_set);
                rows.push(json!({ "instance": inst, "report": rep }));
            }
            ctx.write("minimizer.json", &json_report(&m, &rows))?;
            println!("minimizer in E: {hits}/{instances}");
        }
        "preimage" => {
            let f = FnField::new(h1, 1.0, |p: &[f64]| 0.5 * p[0] * p[0]);
            let region = BBox::new(vec![0.0, -0.25, -0.25], vec![0.5, 0.25, 0.25]);
            let mut cfg = PreimageConfig::default();
            cfg.search.seed = ctx.p.seed;
            let rep = preimage_scan(&f, &[0.2, -0.1], &[0.4, 0.1], &region, &ctx.metric()?, &cfg)?;
            let mut t = Table::new(["x1", "x2", "x3", "verdict"]);
            for p in &rep.points {
                t.push(p.base.iter().map(|&v| num(v)).chain([p.verdict.to_string()]).collect());
            }
            ctx.write("preimage.csv", &t.to_csv(&m))?;
            ctx.write("preimage.json", &json_report(&m, &rep))?;
            let nonporous = rep.points.iter().filter(|p| p.verdict.to_string() == "nonporous-evidence").count();
            println!("preimage points: {}  nonporous-evidence: {nonporous}/{}", rep.preimage_points, rep.points.len());
        }
        other => return Err(bad(format!("unknown scenario '{other}' (known: polynomials, minimizer, preimage)"))),
    }
    Ok(())
}

fn cc_bench(ctx: &Ctx) -> Result<(), Failure> {
    let h1 = GroupSpec::heisenberg();
    let target = match &ctx.p.point {
        Some(_) => ctx.point(3)?,
        None => GPoint(vec![2.0, 0.0, 0.0]),
    };
    let origin = GPoint::zeros(3);
    let est = cc_estimate(&h1, &origin, &target, &ctx.cc())?;
    let m = ctx.manifest("cc-bench");
    ctx.write("curve.csv", &curve_table(&est, &h1, &origin).to_csv(&m))?;
    let summary = json!({
        "value": est.value,
        "endpoint_defect": est.endpoint_defect,
        "defect_bound": est.defect_bound,
        "defect": est.defect,
    });
    ctx.write("cc.json", &json_report(&m, &summary))?;
    println!("cc estimate: {:.6}  endpoint defect: {:.2e}", est.value, est.endpoint_defect);
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure(code, msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(code)
        }
    }
}
