//! Acceptance run: one line per criterion, non-zero exit if any fails.

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use carnot_core::cantor::{gap_window, LadderIndex};
use carnot_core::gradient::{
    horizontal_gradient, polynomial_family, preimage_scan, MinimizerConfig, PreimageConfig, QuadraticInstance,
};
use carnot_core::nondiff::{bump_make, ladder_piece_sum, quotient_scan, sampled_lipschitz, FnField};
use carnot_core::porosity::{porosity_profile, witness_violations, ScaleLadder, SearchConfig, Verdict};
use carnot_core::sets::{
    cantor_set, ladder_shell, named_set, origin_set, witness_ps_case1, witness_ps_case2, witness_qs, BBox,
    SetOracle,
};
use carnot_core::whitney::{cover_verify, whitney_cover, CoverConfig, VerifyConfig, WhitneyCover};
use carnot_core::{cc_estimate, koranyi_lower_bound, CcSettings, GroupSpec, Metric};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome, Duration);

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn point<R: Rng>(rng: &mut R, n: usize, half: f64) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-half..half)).collect()
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn group_algebra() -> Outcome {
    let h = GroupSpec::heisenberg();
    let mut r = rng(1);
    let mut worst = 0.0f64;
    for _ in 0..10_000 {
        let (p, q, s) = (point(&mut r, 3, 2.0), point(&mut r, 3, 2.0), point(&mut r, 3, 2.0));
        let lambda = r.gen_range(0.1..5.0);
        let zero = [0.0; 3];
        worst = worst
            .max(max_diff(&h.compose(&h.compose(&p, &q), &s), &h.compose(&p, &h.compose(&q, &s))))
            .max(max_diff(&h.compose(&p, &zero), &p))
            .max(max_diff(&h.compose(&zero, &p), &p))
            .max(max_diff(&h.compose(&p, &h.inverse(&p)), &zero))
            .max(max_diff(&h.compose(&h.inverse(&p), &p), &zero))
            .max(max_diff(
                &h.dilation(lambda, &h.compose(&p, &q)),
                &h.compose(&h.dilation(lambda, &p), &h.dilation(lambda, &q)),
            ));
    }
    if worst <= 1e-10 {
        Ok(format!("max deviation {worst:.1e}"))
    } else {
        Err(format!("max deviation {worst:.1e} > 1e-10"))
    }
}

const H2: &str = r#"{"n":5,"m":4,"weights":[1,1,1,1,2],"law":[{"i":5,"monomials":[
  {"coef":-2,"p":[1],"q":[3]},{"coef":2,"p":[3],"q":[1]},{"coef":-2,"p":[2],"q":[4]},{"coef":2,"p":[4],"q":[2]}]}]}"#;

fn first_coordinate_reduction() -> Outcome {
    let specs = [GroupSpec::heisenberg(), GroupSpec::from_json(H2).map_err(|e| e.to_string())?];
    let mut r = rng(2);
    let mut worst = 0.0f64;
    for g in &specs {
        for _ in 0..1_000 {
            let t = r.gen_range(-2.0..2.0);
            let target = point(&mut r, g.n(), 2.0);
            let tau = g.first_coordinate_tau(t, &target).map_err(|e| e.to_string())?;
            let base: Vec<f64> = std::iter::once(t).chain(tau).collect();
            let red = g.compose(&g.inverse(&base), &target);
            worst = worst.max(max_diff(&red[1..], &vec![0.0; g.n() - 1]));
            worst = worst.max((red[0] - (target[0] - t)).abs());
        }
    }
    if worst <= 1e-12 {
        Ok(format!("H¹ and H², max tail {worst:.1e}"))
    } else {
        Err(format!("max tail {worst:.1e} > 1e-12"))
    }
}

fn metrics() -> Outcome {
    let h = GroupSpec::heisenberg();
    let mut r = rng(3);
    let all = [
        Metric::Euclidean,
        Metric::Koranyi,
        Metric::snowflake(Metric::Koranyi, 0.5).unwrap(),
        Metric::snowflake(Metric::Euclidean, 0.3).unwrap(),
    ];
    let mut axiom = 0.0f64;
    for m in &all {
        for _ in 0..10_000 {
            let (a, b, c) = (point(&mut r, 3, 2.0), point(&mut r, 3, 2.0), point(&mut r, 3, 2.0));
            let d = |x: &[f64], y: &[f64]| m.dist(&h, x, y).unwrap();
            axiom = axiom
                .max(d(&a, &a))
                .max((d(&a, &b) - d(&b, &a)).abs())
                .max(d(&a, &c) - d(&a, &b) - d(&b, &c))
                .max(-d(&a, &b));
        }
    }
    let mut hom = 0.0f64;
    for _ in 0..10_000 {
        let (a, b, g) = (point(&mut r, 3, 2.0), point(&mut r, 3, 2.0), point(&mut r, 3, 2.0));
        let lambda = r.gen_range(0.1..5.0);
        let d = |x: &[f64], y: &[f64]| Metric::Koranyi.dist(&h, x, y).unwrap();
        let base = d(&a, &b);
        hom = hom
            .max((d(&h.dilation(lambda, &a), &h.dilation(lambda, &b)) - lambda * base).abs())
            .max((d(&h.compose(&g, &a), &h.compose(&g, &b)) - base).abs());
    }
    let mut lower_violations = 0;
    for _ in 0..100_000 {
        let p = point(&mut r, 3, 3.0);
        if koranyi_lower_bound(&p) > Metric::Koranyi.norm(&h, &p).unwrap() {
            lower_violations += 1;
        }
    }
    let detail = format!("axioms {axiom:.1e}, homogeneity/invariance {hom:.1e}, lower-bound violations {lower_violations}");
    if axiom <= 1e-9 && hom <= 1e-10 && lower_violations == 0 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn cc_distance() -> Outcome {
    let h = GroupSpec::heisenberg();
    let cfg = CcSettings::default();
    let horizontal = cc_estimate(&h, &[0.0; 3], &[2.0, 0.0, 0.0], &cfg).map_err(|e| e.to_string())?.value;
    let vertical = cc_estimate(&h, &[0.0; 3], &[0.0, 0.0, 1.0], &cfg).map_err(|e| e.to_string())?.value;
    // A closed horizontal loop gains 4·area in t: a circle of area 1/4.
    let dido = (4.0 * PI * 0.25).sqrt();
    let detail = format!("d(0,(2,0,0)) = {horizontal:.5}, d(0,(0,0,1)) = {vertical:.5} vs {dido:.5}");
    if (2.0..=2.04).contains(&horizontal) && (vertical / dido - 1.0).abs() <= 0.05 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

/// Endpoints of the level-`k` Cantor intervals, `k ≤ levels`, sorted.
fn cantor_endpoints(levels: u32) -> Vec<f64> {
    let mut ivs = vec![(0.0f64, 1.0f64)];
    let mut out = vec![0.0, 1.0];
    for _ in 0..levels {
        let mut next = Vec::with_capacity(ivs.len() * 2);
        for (a, b) in ivs {
            let w = (b - a) / 3.0;
            out.push(a + w);
            out.push(b - w);
            next.push((a, a + w));
            next.push((b - w, b));
        }
        ivs = next;
    }
    out.sort_by(f64::total_cmp);
    out
}

fn gap_windows_and_tiling() -> Outcome {
    let ends = cantor_endpoints(14);
    let mut r = rng(5);
    for _ in 0..10_000 {
        let t = r.gen_range(0.001..0.999);
        let idx = gap_window(t, 40).map_err(|e| format!("t = {t}: {e}"))?;
        let (lo, _) = idx.envelope();
        let w = idx.width();
        let (a, b) = ((t - lo) / w, (t + 4.0 * t * t - lo) / w);
        let i = ends.partition_point(|e| *e < a - 1e-12);
        if !(i < ends.len() && ends[i] <= b + 1e-12) {
            return Err(format!("t = {t}: piece ({}, {}) has no point in the window", idx.n, idx.k));
        }
    }
    for n in 1..=10u32 {
        let env: Vec<_> = (0..1u64 << n).map(|k| LadderIndex::new(n, k).unwrap().envelope()).collect();
        let tiles = env.windows(2).all(|w| w[0].1 == w[1].0)
            && env[0].0 == (-(n as f64)).exp2()
            && env.last().unwrap().1 == (1.0 - n as f64).exp2();
        if !tiles {
            return Err(format!("level {n} envelopes do not tile"));
        }
    }
    Ok("10⁴ windows hit their piece; levels 1..10 tile exactly".into())
}

fn witness_identities() -> Outcome {
    let h = GroupSpec::heisenberg();
    let mut r = rng(6);
    let mut worst = 0.0f64;
    for _ in 0..10_000 {
        let rho = r.gen_range(0.01..1.0);
        let phi = r.gen_range(0.0..2.0 * PI);
        let (x, y) = (rho * phi.cos(), rho * phi.sin());
        let sign = if r.gen_bool(0.5) { 1.0 } else { -1.0 };
        let s = r.gen_range(0.01..1.0);

        let steep = [x, y, sign * r.gen_range(rho * 1.001..2.0)];
        let p = witness_ps_case1(&steep, s).map_err(|e| e.to_string())?;
        worst = worst.max((Metric::Koranyi.dist(&h, &steep, &p).unwrap() / s - 2.0).abs());

        let flat = [x, y, sign * r.gen_range(0.0..rho)];
        let p = witness_ps_case2(&flat, s).map_err(|e| e.to_string())?;
        worst = worst.max((Metric::Koranyi.dist(&h, &flat, &p).unwrap() / s - 1.0).abs());

        let s_in = r.gen_range(0.01 * rho..rho);
        let q = witness_qs(&flat, s_in).map_err(|e| e.to_string())?;
        worst = worst.max((Metric::Euclidean.dist(&h, &flat, &q).unwrap() / s_in - 2f64.sqrt()).abs());
    }
    if worst <= 1e-10 {
        Ok(format!("max ratio error {worst:.1e}"))
    } else {
        Err(format!("max ratio error {worst:.1e} > 1e-10"))
    }
}

fn porosity_contrast() -> Outcome {
    let ladder = ScaleLadder::default();
    let search = SearchConfig::default();
    let mut lines = Vec::new();
    let mut ok = true;
    for (name, porous_in, thin_in) in [("pe", Metric::Euclidean, Metric::Koranyi), ("pc", Metric::Koranyi, Metric::Euclidean)] {
        let set = named_set(name, 40).map_err(|e| e.to_string())?;
        let pts = set.sample_members(&mut rng(7), 50);
        let mut worst = f64::INFINITY;
        let mut violations = 0;
        for p in &pts {
            let prof = porosity_profile(set.as_ref(), &porous_in, p, &ladder, &search).map_err(|e| e.to_string())?;
            worst = worst.min(prof.min_below(1e-3).unwrap_or(0.0));
            violations += witness_violations(&prof, set.as_ref(), &porous_in, 10 * 256, 8);
        }
        let origin = porosity_profile(set.as_ref(), &thin_in, &[0.0; 3], &ladder, &search).map_err(|e| e.to_string())?;
        let at_zero = origin.max_below(1e-3).unwrap_or(1.0);
        ok &= pts.len() == 50 && worst >= 0.25 && at_zero <= 0.05 && violations == 0;
        lines.push(format!(
            "{name}: {} min λ̂ {worst:.3} over {} points, {} λ̂(0) ≤ {at_zero:.4}, violations {violations}",
            porous_in.name(),
            pts.len(),
            thin_in.name()
        ));
    }
    let detail = lines.join("; ");
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

/// Whether the open interval `(a, b)` meets the Cantor set.
fn cantor_hits(a: f64, b: f64) -> bool {
    fn go(a: f64, b: f64, lo: f64, hi: f64, depth: u32) -> bool {
        if b <= lo || a >= hi {
            return false;
        }
        if (a < lo && lo < b) || (a < hi && hi < b) || depth == 0 {
            return true;
        }
        let w = (hi - lo) / 3.0;
        go(a, b, lo, lo + w, depth - 1) || go(a, b, hi - w, hi, depth - 1)
    }
    go(a, b, 0.0, 1.0, 45)
}

/// Sweep over Euclidean balls sorted by leftmost extent.
fn euclidean_disjoint(cover: &WhitneyCover) -> bool {
    let mut order: Vec<usize> = (0..cover.balls.len()).collect();
    let left = |i: usize| cover.balls[i].center[0] - cover.balls[i].radius;
    order.sort_by(|&a, &b| left(a).total_cmp(&left(b)));
    for (k, &i) in order.iter().enumerate() {
        let bi = &cover.balls[i];
        for &j in &order[k + 1..] {
            if left(j) >= bi.center[0] + bi.radius {
                break;
            }
            let bj = &cover.balls[j];
            let d = bi.center.iter().zip(bj.center.iter()).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
            if d <= bi.radius + bj.radius {
                return false;
            }
        }
    }
    true
}

fn whitney_covers() -> Outcome {
    let h_origin = origin_set(GroupSpec::heisenberg());
    let cantor = cantor_set(40);
    let shell = ladder_shell(LadderIndex::new(1, 0).unwrap(), 40);
    let (a10_lo, a10_hi) = LadderIndex::new(1, 0).unwrap().envelope();
    let shell_hits = |lo: f64, hi: f64| cantor_hits((lo - a10_lo) / (a10_hi - a10_lo), (hi - a10_lo) / (a10_hi - a10_lo));
    let cases: Vec<(&str, &dyn SetOracle, BBox, CoverConfig)> = vec![
        ("{0} ⊂ H¹", &h_origin, BBox::cube(3, 1.0 / 32.0), CoverConfig::default()),
        ("Cantor", &cantor, BBox::new(vec![0.0], vec![1.0]), CoverConfig::default()),
        (
            "A_{1,0} shell ⊂ H¹",
            &shell,
            BBox::new(vec![0.49, -0.004, -0.004], vec![0.76, 0.004, 0.004]),
            CoverConfig {
                near_set_levels: 1,
                verify: VerifyConfig { samples: 5_000, ..Default::default() },
                ..Default::default()
            },
        ),
    ];
    let mut lines = Vec::new();
    let mut ok = true;
    for (name, set, domain, cfg) in cases {
        let cover = whitney_cover(set, &domain, &cfg).map_err(|e| format!("{name}: {e}"))?;
        let rep = cover_verify(&cover, set, &cfg.verify).map_err(|e| format!("{name}: {e}"))?;
        let disjoint = euclidean_disjoint(&cover);
        let avoids = cover.balls.iter().all(|b| {
            let (c, r) = (&b.center, b.radius);
            match c.len() {
                1 => !cantor_hits(c[0] - r, c[0] + r),
                _ => {
                    let rho = c[0].hypot(c[1]);
                    if name.starts_with("{0}") {
                        c.iter().map(|v| v * v).sum::<f64>().sqrt() > r
                    } else {
                        !shell_hits(rho - r, rho + r)
                    }
                }
            }
        });
        ok &= rep.pass && disjoint && avoids && !cover.truncated;
        lines.push(format!(
            "{name}: {} balls, C reached {:.2} of {}, disjoint {disjoint}, avoids {avoids}, verify {}",
            rep.balls, rep.achieved_c, cover.c, rep.pass
        ));
    }
    let detail = lines.join("; ");
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn nonsubdifferentiability() -> Outcome {
    let bump = bump_make(&GroupSpec::euclidean(1), 0.1).map_err(|e| e.to_string())?;
    let f = ladder_piece_sum(8, 40, &bump, &CoverConfig::default()).map_err(|e| e.to_string())?;
    let lip = sampled_lipschitz(&f, &Metric::Euclidean, &BBox::new(vec![0.0], vec![1.0]), 100_000, 9);
    let scales: Vec<f64> = (0..14).map(|k| 1e-3 * 0.5f64.powi(k)).collect();
    let mut worst_margin = f64::INFINITY;
    let mut points = usize::MAX;
    for (i, piece) in f.pieces().iter().enumerate() {
        let pts = piece.set.sample_members(&mut rng(100 + i as u64), 20);
        points = points.min(pts.len());
        let threshold = 0.5 * bump.beta / piece.c;
        for x in &pts {
            let rows = quotient_scan(&f, x, &Metric::Euclidean, &scales, 2, 1).map_err(|e| e.to_string())?;
            let best = rows.iter().map(|r| r.max_quotient).fold(f64::NEG_INFINITY, f64::max);
            worst_margin = worst_margin.min(best / threshold);
        }
    }
    let detail = format!(
        "{} pieces, ≥{points} points each, worst quotient/threshold {worst_margin:.2}, sampled Lipschitz {lip:.6}",
        f.pieces().len()
    );
    if f.pieces().len() == 8 && points >= 20 && worst_margin >= 1.0 && lip <= 1.0 + 1e-6 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn gradient_lab() -> Outcome {
    let h = GroupSpec::heisenberg();
    let mut r = rng(10);
    let mut fd_err = 0.0f64;
    for poly in polynomial_family() {
        let field = FnField::new(h.clone(), f64::INFINITY, poly.f);
        for _ in 0..1_000 {
            let x = point(&mut r, 3, 2.0);
            let g = horizontal_gradient(&field, &x, 1e-4).map_err(|e| e.to_string())?;
            fd_err = fd_err.max(max_diff(&g, &(poly.grad)(&x)));
        }
    }

    let bump = bump_make(&h, 0.1).map_err(|e| e.to_string())?;
    let mut hits = 0;
    for _ in 0..50 {
        let inst = QuadraticInstance::random(&mut r, bump.beta);
        let rep = inst.run(&bump, &MinimizerConfig::default()).map_err(|e| e.to_string())?;
        hits += usize::from(rep.in_set);
    }

    let slab = FnField::new(h, 1.0, |p: &[f64]| 0.5 * p[0] * p[0]);
    let region = BBox::new(vec![0.0, -0.25, -0.25], vec![0.5, 0.25, 0.25]);
    let rep = preimage_scan(&slab, &[0.2, -0.1], &[0.4, 0.1], &region, &Metric::Koranyi, &PreimageConfig::default())
        .map_err(|e| e.to_string())?;
    let nonporous = rep.points.iter().filter(|p| p.verdict == Verdict::NonporousEvidence).count();

    let detail = format!(
        "fd error {fd_err:.1e}, minimizer in E {hits}/50, slab nonporous {nonporous}/{}",
        rep.points.len()
    );
    if fd_err <= 1e-6 && hits == 50 && !rep.empty && nonporous == rep.points.len() {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("group algebra", group_algebra, Duration::from_secs(1)),
        ("first-coordinate reduction", first_coordinate_reduction, Duration::from_secs(1)),
        ("metric axioms", metrics, Duration::from_secs(5)),
        ("CC estimator", cc_distance, Duration::from_secs(60)),
        ("gap windows and tiling", gap_windows_and_tiling, Duration::from_secs(5)),
        ("witness distances", witness_identities, Duration::from_secs(2)),
        ("porosity contrast", porosity_contrast, Duration::from_secs(600)),
        ("Whitney covers", whitney_covers, Duration::from_secs(300)),
        ("non-subdifferentiable sum", nonsubdifferentiability, Duration::from_secs(600)),
        ("gradient lab", gradient_lab, Duration::from_secs(600)),
    ];
    let mut failed = 0;
    for (k, (name, run, limit)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = run();
        let took = start.elapsed();
        let (pass, detail) = match outcome {
            Ok(d) if took <= *limit => (true, d),
            Ok(d) => (false, format!("{d}; over the time limit")),
            Err(d) => (false, d),
        };
        failed += usize::from(!pass);
        println!(
            "criterion {:>2} {:<28} {}  {:>8.3}s / {:>4}s  {detail}",
            k + 1,
            name,
            if pass { "PASS" } else { "FAIL" },
            took.as_secs_f64(),
            limit.as_secs()
        );
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
