//! Horizontal derivatives, Pansu residuals, Dini derivatives, the
//! minimization experiment behind subdifferentiability on gradient
//! preimages, and porosity scans of those preimages.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::group::{GPoint, GroupLinearMap, GroupSpec};
use crate::metric::Metric;
use crate::nondiff::{BumpSpec, ScalarField};
use crate::porosity::{classify, porosity_profile, ScaleLadder, SearchConfig, Verdict};
use crate::sets::{predicate_set, BBox, SetOracle};
use crate::whitney::ball_bbox;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Derivative {
    pub value: f64,
    /// Disagreement between the Richardson value and the finer central
    /// difference.
    pub noise: f64,
}

fn central(f: &dyn ScalarField, x: &[f64], i: usize, s: f64) -> f64 {
    let spec = f.spec();
    let fwd = spec.compose(x, &spec.horizontal_element(i, s));
    let bwd = spec.compose(x, &spec.horizontal_element(i, -s));
    (f.eval(&fwd) - f.eval(&bwd)) / (2.0 * s)
}

/// `X_i f(x)` for the horizontal direction `i` (zero-based), by central
/// differences along `x·exp(±s X_i)` with one Richardson step.
pub fn directional_derivative(f: &dyn ScalarField, x: &[f64], i: usize, step: f64) -> Result<Derivative> {
    let spec = f.spec();
    spec.check(x)?;
    if i >= spec.m() {
        return invalid(format!("direction {i} is not horizontal (m = {})", spec.m()));
    }
    if !(step > 0.0) {
        return invalid("step must be positive");
    }
    let coarse = central(f, x, i, step);
    let fine = central(f, x, i, step / 2.0);
    let value = (4.0 * fine - coarse) / 3.0;
    Ok(Derivative { value, noise: (value - fine).abs() })
}

pub fn horizontal_gradient(f: &dyn ScalarField, x: &[f64], step: f64) -> Result<Vec<f64>> {
    (0..f.spec().m()).map(|i| directional_derivative(f, x, i, step).map(|d| d.value)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DiffVerdict {
    DifferentiableEvidence,
    NondifferentiableEvidence,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiffReport {
    pub point: GPoint,
    /// `v` in `L(h) = ⟨v, p(h)⟩`.
    pub differential: Vec<f64>,
    pub scales: Vec<f64>,
    /// Sampled sup of `|f(xh) − f(x) − L(h)| / d(h)` over `d(h) = scale`.
    pub residuals: Vec<f64>,
    pub verdict: DiffVerdict,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResidualConfig {
    pub directions: usize,
    pub tolerance: f64,
    pub seed: u64,
}

impl Default for ResidualConfig {
    fn default() -> Self {
        ResidualConfig { directions: 200, tolerance: 1e-3, seed: 1 }
    }
}

fn residual_directions(spec: &GroupSpec, metric: &Metric, count: usize, seed: u64) -> Vec<GPoint> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut dirs = Vec::with_capacity(count.max(2 * spec.n()));
    for i in 0..2 * spec.n() {
        let mut e = GPoint::zeros(spec.n());
        e[i / 2] = if i % 2 == 0 { 1.0 } else { -1.0 };
        dirs.push(e);
    }
    while dirs.len() < count {
        dirs.push(metric.sphere_sample(spec, &mut rng));
    }
    dirs
}

pub fn pansu_residual(
    f: &dyn ScalarField,
    x: &[f64],
    l: &GroupLinearMap,
    metric: &Metric,
    scales: &[f64],
    cfg: &ResidualConfig,
) -> Result<DiffReport> {
    let spec = f.spec();
    spec.check(x)?;
    metric.supports(spec)?;
    if l.v.len() != spec.m() {
        return invalid(format!("differential needs {} components", spec.m()));
    }
    if scales.is_empty() || scales.iter().any(|s| !(*s > 0.0)) || scales.windows(2).any(|w| w[1] >= w[0]) {
        return invalid("scales must be positive and strictly decreasing");
    }
    let dirs = residual_directions(spec, metric, cfg.directions, cfg.seed);
    let zero = GPoint::zeros(spec.n());
    let fx = f.eval(x);
    let residuals: Vec<f64> = scales
        .iter()
        .map(|&s| {
            dirs.par_iter()
                .map(|dir| {
                    let h = metric.ray_point(spec, &zero, dir, s);
                    let d = metric.norm_unchecked(spec, &h);
                    (f.eval(&spec.compose(x, &h)) - fx - l.eval(&h)).abs() / d
                })
                .reduce(|| 0.0, f64::max)
        })
        .collect();
    let first = residuals[0];
    let last = *residuals.last().expect("nonempty");
    let verdict = if last <= cfg.tolerance && last <= first {
        DiffVerdict::DifferentiableEvidence
    } else if last > 10.0 * cfg.tolerance && last >= 0.5 * first {
        DiffVerdict::NondifferentiableEvidence
    } else {
        DiffVerdict::Inconclusive
    };
    Ok(DiffReport {
        point: GPoint(x.to_vec()),
        differential: l.v.clone(),
        scales: scales.to_vec(),
        residuals,
        verdict,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiniPair {
    /// Lower right Dini derivative estimate (ladder minimum).
    pub f_plus: f64,
    /// Upper left Dini derivative estimate (ladder maximum).
    pub f_minus_upper: f64,
    pub subdifferentiable: bool,
}

pub const DINI_STEPS: usize = 40;

/// Dini estimates over `t_j = t0·2^{-j}`, `j < steps`.
pub fn dini_pair(g: &dyn Fn(f64) -> f64, a: f64, t0: f64, steps: usize, tolerance: f64) -> Result<DiniPair> {
    if !(t0 > 0.0) || steps == 0 {
        return invalid("Dini ladder needs t0 > 0 and at least one step");
    }
    let ga = g(a);
    let mut f_plus = f64::INFINITY;
    let mut f_minus_upper = f64::NEG_INFINITY;
    for j in 0..steps {
        let t = t0 * (-(j as f64)).exp2();
        f_plus = f_plus.min((g(a + t) - ga) / t);
        f_minus_upper = f_minus_upper.max((g(a - t) - ga) / -t);
    }
    Ok(DiniPair { f_plus, f_minus_upper, subdifferentiable: f_plus >= f_minus_upper - tolerance })
}

/// Inputs of the minimization experiment: `F`, the set `E`, the ball
/// `B(z, r)`, the constants `ρ` and `θ`, the bump and the Lipschitz
/// function `h`.
pub struct MinimizerSetup<'a> {
    pub f: &'a dyn ScalarField,
    pub set: &'a dyn SetOracle,
    pub center: GPoint,
    pub radius: f64,
    pub rho: f64,
    pub theta: f64,
    pub bump: &'a BumpSpec,
    pub h: &'a dyn ScalarField,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MinimizerConfig {
    /// Grid points per coordinate on the ball's bounding box.
    pub grid: usize,
    /// Grid points at which `|∇_H F| > ρ` is checked outside `E`.
    pub gradient_checks: usize,
    pub step: f64,
    pub refine_iters: usize,
}

impl Default for MinimizerConfig {
    fn default() -> Self {
        MinimizerConfig { grid: 64, gradient_checks: 2_000, step: 1e-6, refine_iters: 400 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinimizerReport {
    pub minimizer: GPoint,
    pub in_set: bool,
    pub eta: f64,
    /// Factor turning `h` into `h̃`.
    pub h_scale: f64,
    pub min_value: f64,
    pub center_value: f64,
    pub grid_points: usize,
}

/// Minimizes `H = F − η·b̃ + c·h` over `B(z, r)` and reports whether the
/// minimizer lies in `E`.
pub fn minimizer_experiment(setup: &MinimizerSetup, cfg: &MinimizerConfig) -> Result<MinimizerReport> {
    let spec = setup.f.spec();
    let metric = &setup.bump.metric;
    let m = spec.m() as f64;
    let (z, r, rho, theta) = (&setup.center, setup.radius, setup.rho, setup.theta);
    spec.check(z)?;
    if setup.h.spec() != spec || setup.bump.spec != *spec || setup.set.spec() != spec {
        return invalid("F, h, E and the bump must share one group");
    }
    if !(r > 0.0 && rho > 0.0 && theta > 0.0) {
        return invalid("r, ρ and θ must be positive");
    }
    let v = setup.bump.beta;
    if !(8.0 * m * theta < rho * r * v) {
        return invalid(format!("need 8mθ < ρrv, got {} vs {}", 8.0 * m * theta, rho * r * v));
    }
    if cfg.grid < 2 {
        return invalid("grid needs at least 2 points per coordinate");
    }

    let (lo, hi) = ball_bbox(metric, spec, z, r)?;
    let n = spec.n();
    let k = cfg.grid;
    let spacing: Vec<f64> = (0..n).map(|d| (hi[d] - lo[d]) / (k - 1) as f64).collect();
    let total = k.pow(n as u32);
    let point = |mut idx: usize| -> GPoint {
        let mut p = vec![0.0; n];
        for d in 0..n {
            p[d] = lo[d] + (idx % k) as f64 * spacing[d];
            idx /= k;
        }
        GPoint(p)
    };
    let mut inside: Vec<GPoint> = (0..total)
        .into_par_iter()
        .map(point)
        .filter(|p| metric.dist_unchecked(spec, z, p) < r)
        .collect();
    inside.push(z.clone());

    if let Some(p) = inside.par_iter().find_first(|p| setup.f.eval(p).abs() > theta) {
        return invalid(format!("|F| exceeds θ at {:?}", p.0));
    }
    let stride = (inside.len() / cfg.gradient_checks.max(1)).max(1);
    let bad = inside.par_iter().step_by(stride).find_first(|p| {
        !setup.set.member(p).maybe_in()
            && horizontal_gradient(setup.f, p, cfg.step)
                .map(|g| g.iter().map(|c| c * c).sum::<f64>().sqrt() <= rho * (1.0 - 1e-6))
                .unwrap_or(true)
    });
    if let Some(p) = bad {
        return invalid(format!("|∇_H F| ≤ ρ outside the set at {:?}", p.0));
    }

    let eta = 0.5 * (4.0 * theta / v + rho * r / (2.0 * m));
    let lip_h = setup.h.lipschitz_bound();
    let diag = metric.norm_unchecked(spec, &spacing);
    let sup_h = inside.par_iter().map(|p| setup.h.eval(p).abs()).reduce(|| 0.0, f64::max) + lip_h * diag;
    let mut c = f64::INFINITY;
    if sup_h > 0.0 {
        c = c.min(theta / (2.0 * sup_h));
    }
    if lip_h > 0.0 {
        c = c.min(rho / (4.0 * m * lip_h));
    }
    if !c.is_finite() {
        c = 0.0;
    }
    let objective = |p: &[f64]| -> f64 {
        let local = spec.dilation(1.0 / r, &spec.between(z, p));
        setup.f.eval(p) - eta * setup.bump.eval(&local) + c * setup.h.eval(p)
    };

    let (best_idx, mut best_val) = inside
        .par_iter()
        .enumerate()
        .map(|(i, p)| (i, objective(p)))
        .reduce(|| (usize::MAX, f64::INFINITY), |a, b| if b.1 < a.1 || (b.1 == a.1 && b.0 < a.0) { b } else { a });
    let mut best = inside[best_idx].clone();

    // Pattern search along the left-invariant frame x·exp(±s e_d).
    let mut steps = spacing.clone();
    for _ in 0..cfg.refine_iters {
        let mut moved = false;
        for d in 0..n {
            for sign in [1.0, -1.0] {
                let mut e = vec![0.0; n];
                e[d] = sign * steps[d];
                let q = spec.compose(&best, &e);
                if metric.dist_unchecked(spec, z, &q) >= r {
                    continue;
                }
                let val = objective(&q);
                if val < best_val {
                    best = q;
                    best_val = val;
                    moved = true;
                }
            }
        }
        if !moved {
            steps.iter_mut().for_each(|s| *s *= 0.5);
            if steps.iter().zip(&spacing).all(|(s, g)| *s < 1e-12 * g.max(1e-300)) {
                break;
            }
        }
    }

    let center_value = objective(z);
    if center_value > -2.5 * theta * (1.0 - 1e-9) {
        return Err(Error::ExperimentInvalid(format!(
            "H(z) = {center_value} is not ≤ −5θ/2 = {}",
            -2.5 * theta
        )));
    }
    if metric.dist_unchecked(spec, z, &best) >= r * (1.0 - 1e-9) || best_val >= -1.5 * theta {
        return Err(Error::ExperimentInvalid(format!(
            "minimizer {:?} with H = {best_val} sits on the boundary (H ≥ −3θ/2 there)",
            best.0
        )));
    }
    Ok(MinimizerReport {
        in_set: setup.set.member(&best).maybe_in(),
        minimizer: best,
        eta,
        h_scale: c,
        min_value: best_val,
        center_value,
        grid_points: inside.len(),
    })
}

/// `F = x²/2` on H¹ with a random ball, random Lipschitz perturbation
/// `h = a₁·d(x, q) + a₂·|⟨w, p(x)⟩ − c₀|` and `E = {|x| ≤ ρ}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadraticInstance {
    pub center: GPoint,
    pub radius: f64,
    pub rho: f64,
    pub theta: f64,
    pub q: GPoint,
    pub a1: f64,
    pub a2: f64,
    pub w: [f64; 2],
    pub c0: f64,
}

impl QuadraticInstance {
    pub fn random<R: rand::Rng + ?Sized>(rng: &mut R, v: f64) -> Self {
        let rho = rng.gen_range(1.0..3.0);
        let radius = rng.gen_range(0.2..0.9) * 0.1125 * rho * v;
        let theta = 0.9 * rho * radius * v / 16.0;
        let room = (2.0 * theta).sqrt() - radius;
        let center = GPoint(vec![rng.gen_range(-room..=room), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)]);
        let q = GPoint(center.iter().map(|c| c + rng.gen_range(-0.1..0.1)).collect());
        QuadraticInstance {
            center,
            radius,
            rho,
            theta,
            q,
            a1: rng.gen_range(0.0..2.0),
            a2: rng.gen_range(0.0..2.0),
            w: [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)],
            c0: rng.gen_range(-1.0..1.0),
        }
    }

    pub fn run(&self, bump: &BumpSpec, cfg: &MinimizerConfig) -> Result<MinimizerReport> {
        let spec = GroupSpec::heisenberg();
        let f = crate::nondiff::FnField::new(spec.clone(), f64::INFINITY, |p: &[f64]| 0.5 * p[0] * p[0]);
        let rho = self.rho;
        let set = predicate_set("slab", spec.clone(), BBox::cube(3, f64::INFINITY), move |p: &[f64]| p[0].abs() <= rho);
        let (q, a1, a2, w, c0) = (self.q.clone(), self.a1, self.a2, self.w, self.c0);
        let lip = a1 + a2 * w[0].hypot(w[1]);
        let hspec = spec.clone();
        let h = crate::nondiff::FnField::new(spec, lip, move |p: &[f64]| {
            a1 * Metric::Koranyi.dist_unchecked(&hspec, p, &q) + a2 * (w[0] * p[0] + w[1] * p[1] - c0).abs()
        });
        let setup = MinimizerSetup {
            f: &f,
            set: &set,
            center: self.center.clone(),
            radius: self.radius,
            rho: self.rho,
            theta: self.theta,
            bump,
            h: &h,
        };
        minimizer_experiment(&setup, cfg)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreimagePoint {
    pub base: GPoint,
    pub verdict: Verdict,
    pub lambda_hat: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreimageReport {
    pub grid_points: usize,
    pub preimage_points: usize,
    pub empty: bool,
    pub scales: Vec<f64>,
    pub points: Vec<PreimagePoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreimageConfig {
    pub grid: usize,
    pub max_points: usize,
    pub step: f64,
    pub ladder: ScaleLadder,
    pub search: SearchConfig,
    pub lambda_min: f64,
}

impl Default for PreimageConfig {
    fn default() -> Self {
        PreimageConfig {
            grid: 17,
            max_points: 20,
            step: 1e-6,
            ladder: ScaleLadder { r0: 0.05, q: 0.5, count: 16 },
            search: SearchConfig { directions: 24, radial_steps: 6, seed: 1, sample_density: Some(48) },
            lambda_min: 0.05,
        }
    }
}

/// Porosity of `{x ∈ region : ∇_H f(x) ∈ (g_lo, g_hi)}` at up to
/// `max_points` grid points of the preimage.
pub fn preimage_scan(
    f: &dyn ScalarField,
    g_lo: &[f64],
    g_hi: &[f64],
    region: &BBox,
    metric: &Metric,
    cfg: &PreimageConfig,
) -> Result<PreimageReport> {
    let spec = f.spec().clone();
    let m = spec.m();
    if g_lo.len() != m || g_hi.len() != m || g_lo.iter().zip(g_hi).any(|(a, b)| !(a < b)) {
        return invalid(format!("gradient box needs {m} nonempty intervals"));
    }
    if region.dim() != spec.n() {
        return invalid("region dimension does not match the group");
    }
    if cfg.grid < 2 {
        return invalid("grid needs at least 2 points per coordinate");
    }
    let step = cfg.step;
    let oracle = predicate_set("preimage", spec.clone(), region.clone(), move |p: &[f64]| {
        horizontal_gradient(f, p, step)
            .map(|g| g.iter().zip(g_lo.iter().zip(g_hi)).all(|(v, (a, b))| v > a && v < b))
            .unwrap_or(false)
    });

    let n = spec.n();
    let k = cfg.grid;
    let total = k.pow(n as u32);
    let pre: Vec<GPoint> = (0..total)
        .into_par_iter()
        .map(|mut idx| {
            let p = region.lo.iter().zip(&region.hi).map(|(lo, hi)| {
                let v = lo + (idx % k) as f64 * (hi - lo) / (k - 1) as f64;
                idx /= k;
                v
            });
            GPoint(p.collect())
        })
        .filter(|p| oracle.member(p).maybe_in())
        .collect();

    let scales = cfg.ladder.scales();
    if pre.is_empty() {
        return Ok(PreimageReport { grid_points: total, preimage_points: 0, empty: true, scales, points: Vec::new() });
    }
    let stride = pre.len().div_ceil(cfg.max_points.max(1));
    let r_cut = scales.last().copied().unwrap_or(0.0);
    let points = pre
        .iter()
        .step_by(stride)
        .take(cfg.max_points)
        .map(|base| {
            let profile = porosity_profile(&oracle, metric, base, &cfg.ladder, &cfg.search)?;
            Ok(PreimagePoint {
                base: base.clone(),
                verdict: classify(&profile, cfg.lambda_min, r_cut),
                lambda_hat: profile.lambda_hat,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PreimageReport { grid_points: total, preimage_points: pre.len(), empty: false, scales, points })
}

/// A polynomial on H¹ with its horizontal gradient in closed form.
pub struct PolyField {
    pub name: &'static str,
    pub f: fn(&[f64]) -> f64,
    pub grad: fn(&[f64]) -> [f64; 2],
}

/// `x², xy, t, xt` with `X₁ = ∂x + 2y∂t`, `X₂ = ∂y − 2x∂t`.
pub fn polynomial_family() -> Vec<PolyField> {
    vec![
        PolyField { name: "x^2", f: |p| p[0] * p[0], grad: |p| [2.0 * p[0], 0.0] },
        PolyField { name: "xy", f: |p| p[0] * p[1], grad: |p| [p[1], p[0]] },
        PolyField { name: "t", f: |p| p[2], grad: |p| [2.0 * p[1], -2.0 * p[0]] },
        PolyField { name: "xt", f: |p| p[0] * p[2], grad: |p| [p[2] + 2.0 * p[0] * p[1], -2.0 * p[0] * p[0]] },
    ]
}
