//! Set oracles: membership predicates with certified distance lower bounds.

use std::f64::consts::{PI, SQRT_2};
use std::sync::Arc;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::cantor::{
    ank_member, cantor_dist_lower, cantor_member, envelopes_containing, ladder_dist_lower,
    LadderIndex, Membership, DEFAULT_DEPTH,
};
use crate::error::{invalid, Result};
use crate::group::{GPoint, GroupSpec};
use crate::metric::Metric;

/// Axis-aligned box in exponential coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct BBox {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl BBox {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Self {
        BBox { lo, hi }
    }

    pub fn cube(n: usize, half: f64) -> Self {
        BBox { lo: vec![-half; n], hi: vec![half; n] }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        p.iter().zip(self.lo.iter().zip(&self.hi)).all(|(v, (l, h))| *v >= *l && *v <= *h)
    }

    pub fn center(&self) -> GPoint {
        GPoint(self.lo.iter().zip(&self.hi).map(|(l, h)| 0.5 * (l + h)).collect())
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> GPoint {
        GPoint(
            self.lo
                .iter()
                .zip(&self.hi)
                .map(|(l, h)| if h > l { rng.gen_range(*l..*h) } else { *l })
                .collect(),
        )
    }
}

/// A subset `E` of a Carnot group.
pub trait SetOracle: Send + Sync {
    fn name(&self) -> String;

    fn spec(&self) -> &GroupSpec;

    fn member(&self, p: &[f64]) -> Membership;

    /// Certified lower bound on the distance from `p` to the set, or `None`
    /// when no bound is available for this metric.
    fn dist_lower(&self, _p: &[f64], _metric: &Metric) -> Option<f64> {
        None
    }

    /// Region of interest; porosity bases and samples live here.
    fn bbox(&self) -> BBox;

    /// Hole centers suggested by the geometry of the set near `base`, at
    /// distances up to about `r`.
    fn hole_centers(&self, _base: &[f64], _r: f64, _metric: &Metric) -> Vec<GPoint> {
        Vec::new()
    }

    /// Points of the set (or points within rounding of it), for sampling checks.
    fn sample_members(&self, _rng: &mut ChaCha8Rng, _count: usize) -> Vec<GPoint> {
        Vec::new()
    }
}

/// Applies a bound for the innermost metric and transports it through
/// snowflaking (`t ↦ t^ε` is increasing).
fn through_snowflake(metric: &Metric, f: impl Fn(&Metric) -> Option<f64>) -> Option<f64> {
    let (inner, eps) = metric.unwrap_snowflake();
    let b = f(inner)?;
    Some(if eps == 1.0 { b } else { b.powf(eps) })
}

fn radius(p: &[f64]) -> f64 {
    p[0].hypot(p[1])
}

/// Lower bound on any of the metrics' distances from a displacement in the
/// first-layer radius: valid for Euclidean, Koranyi, quasi-norm and CC on H¹.
fn radial_bound(metric: &Metric, gap: f64) -> Option<f64> {
    through_snowflake(metric, |inner| match inner {
        Metric::Euclidean | Metric::Koranyi | Metric::QuasiNorm | Metric::Cc(_) => Some(gap),
        Metric::Snowflake { .. } => None,
    })
}

/// Distance lower bound from `(ρ, t)` to the cone `|t| ≤ ρ`.
fn cone_bound(metric: &Metric, rho: f64, t: f64) -> Option<f64> {
    let t = t.abs();
    through_snowflake(metric, |inner| match inner {
        Metric::Euclidean => Some(((t - rho) / SQRT_2).max(0.0)),
        // q = p·h with ‖h‖ = D lands in the cone only if ρ + D + 2ρD + D² ≥ |t|.
        Metric::Koranyi | Metric::QuasiNorm => {
            if t <= rho {
                return Some(0.0);
            }
            let b = 1.0 + 2.0 * rho;
            let c = rho - t;
            let d = (-b + (b * b - 4.0 * c).sqrt()) / 2.0;
            Some((d * (1.0 - 1e-12)).max(0.0))
        }
        _ => None,
    })
}

/// Distance lower bound from `(ρ, t)` to the cusp `|t| ≥ 2ρ²`.
fn cusp_bound(metric: &Metric, rho: f64, t: f64) -> Option<f64> {
    let t = t.abs();
    if t >= 2.0 * rho * rho {
        return Some(0.0);
    }
    through_snowflake(metric, |inner| match inner {
        Metric::Euclidean => Some(parabola_distance(rho, t)),
        // |q_t| ≤ |t| + D² + 2ρD must reach 2|q_xy|² ≥ 2(ρ − D)₊².
        Metric::Koranyi | Metric::QuasiNorm => {
            let ok = |d: f64| t + d * d + 2.0 * rho * d >= 2.0 * (rho - d).max(0.0).powi(2);
            let (mut lo, mut hi) = (0.0, rho);
            for _ in 0..80 {
                let mid = 0.5 * (lo + hi);
                if ok(mid) {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            Some(lo)
        }
        _ => None,
    })
}

/// Euclidean distance in the `(ρ, t)` half-plane from a point below the
/// parabola `t = 2ρ²` to the parabola, rounded down.
fn parabola_distance(rho0: f64, t0: f64) -> f64 {
    let f = |r: f64| ((r - rho0).powi(2) + (2.0 * r * r - t0).powi(2)).sqrt();
    // Critical points solve 8ρ³ + (1 − 4t₀)ρ − ρ₀ = 0 on [0, ρ₀].
    let g = |r: f64| 8.0 * r * r * r + (1.0 - 4.0 * t0) * r - rho0;
    let mut breaks = vec![0.0, rho0];
    if t0 > 0.25 {
        let rc = ((4.0 * t0 - 1.0) / 24.0).sqrt();
        if rc < rho0 {
            breaks.insert(1, rc);
        }
    }
    let mut best = f(0.0).min(f(rho0));
    for w in breaks.windows(2) {
        let (mut a, mut b) = (w[0], w[1]);
        if g(a).signum() == g(b).signum() {
            continue;
        }
        for _ in 0..200 {
            let mid = 0.5 * (a + b);
            if g(mid).signum() == g(a).signum() {
                a = mid;
            } else {
                b = mid;
            }
        }
        best = best.min(f(a)).min(f(b));
    }
    (best * (1.0 - 1e-12) - 1e-300).max(0.0)
}

/// Gaps of the Cantor set (as open intervals of `[0,1]`) meeting `[a, b]`
/// with length at least `min_len`, capped at `limit` entries.
pub fn cantor_gaps(a: f64, b: f64, min_len: f64, limit: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    let mut stack = vec![(0.0f64, 1.0f64)];
    while let Some((lo, hi)) = stack.pop() {
        let len = hi - lo;
        if len / 3.0 < min_len || hi < a || lo > b || out.len() >= limit {
            continue;
        }
        let g = (lo + len / 3.0, lo + 2.0 * len / 3.0);
        if g.1 >= a && g.0 <= b {
            out.push(g);
        }
        stack.push((lo, g.0));
        stack.push((g.1, hi));
    }
    out
}

/// Gap midpoints of the radial ladder `⋃ A_{n,k}` in `[a, b]`.
fn ladder_gap_midpoints(a: f64, b: f64, min_len: f64, limit: usize) -> Vec<f64> {
    let mut out = Vec::new();
    let lo = a.max(1e-12);
    if b <= lo {
        return out;
    }
    let mut idxs: Vec<LadderIndex> = Vec::new();
    let mut x = lo;
    while x < b.min(1.0) && idxs.len() < 64 {
        let Some(idx) = envelopes_containing(x).into_iter().find(|i| i.envelope().1 > x) else { break };
        if idxs.last() != Some(&idx) {
            idxs.push(idx);
        }
        let (_, hi) = idx.envelope();
        if hi <= x {
            break;
        }
        x = hi;
    }
    for idx in idxs {
        let w = idx.width();
        for (g0, g1) in cantor_gaps(idx.rescale(a), idx.rescale(b), min_len / w, limit) {
            out.push(idx.envelope().0 + w * 0.5 * (g0 + g1));
        }
    }
    out
}

fn radial_centers(base: &[f64], r: f64) -> Vec<GPoint> {
    let rho0 = radius(base);
    if rho0 == 0.0 {
        return Vec::new();
    }
    ladder_gap_midpoints(rho0 - r, rho0 + r, r * 1e-3, 256)
        .into_iter()
        .map(|u| GPoint(vec![u * base[0] / rho0, u * base[1] / rho0, base[2]]))
        .collect()
}

/// A random point of the Cantor set, truncated to 34 ternary digits.
fn cantor_point<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    let mut x = 0.0;
    let mut s = 1.0;
    for _ in 0..34 {
        s /= 3.0;
        if rng.gen_bool(0.5) {
            x += 2.0 * s;
        }
    }
    x
}

fn random_ladder_radius<R: Rng + ?Sized>(rng: &mut R, max_n: u32) -> f64 {
    let n = rng.gen_range(1..=max_n);
    let k = rng.gen_range(0..(1u64 << n));
    let idx = LadderIndex { n, k };
    idx.envelope().0 + idx.width() * cantor_point(rng)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum HKind {
    Cone,
    Cusp,
}

/// The cone `Λ` or cusp `Υ` in H¹, optionally intersected with the radial
/// ladder (`P_e`, `P_c`).
pub struct HSet {
    spec: GroupSpec,
    kind: HKind,
    ladder: bool,
    depth: u32,
}

impl HSet {
    fn shape_in(&self, rho: f64, t: f64) -> bool {
        match self.kind {
            HKind::Cone => t.abs() <= rho,
            HKind::Cusp => t.abs() >= 2.0 * rho * rho,
        }
    }
}

pub fn cone_lambda() -> HSet {
    HSet { spec: GroupSpec::heisenberg(), kind: HKind::Cone, ladder: false, depth: DEFAULT_DEPTH }
}

pub fn cusp_upsilon() -> HSet {
    HSet { spec: GroupSpec::heisenberg(), kind: HKind::Cusp, ladder: false, depth: DEFAULT_DEPTH }
}

pub fn pe_set(depth: u32) -> HSet {
    HSet { spec: GroupSpec::heisenberg(), kind: HKind::Cone, ladder: true, depth }
}

pub fn pc_set(depth: u32) -> HSet {
    HSet { spec: GroupSpec::heisenberg(), kind: HKind::Cusp, ladder: true, depth }
}

impl SetOracle for HSet {
    fn name(&self) -> String {
        match (self.kind, self.ladder) {
            (HKind::Cone, false) => "lambda",
            (HKind::Cusp, false) => "upsilon",
            (HKind::Cone, true) => "pe",
            (HKind::Cusp, true) => "pc",
        }
        .into()
    }

    fn spec(&self) -> &GroupSpec {
        &self.spec
    }

    fn member(&self, p: &[f64]) -> Membership {
        let rho = radius(p);
        if self.ladder && p.iter().all(|v| *v == 0.0) {
            return Membership::In;
        }
        if !self.shape_in(rho, p[2]) {
            return Membership::Out;
        }
        if !self.ladder {
            return Membership::In;
        }
        match ank_member(rho, self.depth) {
            Ok(hit) if hit.index.is_some() => Membership::In,
            Ok(hit) if hit.undecided => Membership::Undecided,
            _ => Membership::Out,
        }
    }

    fn dist_lower(&self, p: &[f64], metric: &Metric) -> Option<f64> {
        let rho = radius(p);
        let shape = match self.kind {
            HKind::Cone => cone_bound(metric, rho, p[2]),
            HKind::Cusp => cusp_bound(metric, rho, p[2]),
        };
        let ladder = if self.ladder {
            radial_bound(metric, ladder_dist_lower(rho, self.depth))
        } else {
            None
        };
        match (shape, ladder) {
            (Some(a), Some(b)) => Some(a.max(b)),
            (a, b) => a.or(b),
        }
    }

    fn bbox(&self) -> BBox {
        match self.kind {
            HKind::Cone => BBox::cube(3, 1.0),
            HKind::Cusp => BBox::new(vec![-1.0, -1.0, -2.0], vec![1.0, 1.0, 2.0]),
        }
    }

    fn hole_centers(&self, base: &[f64], r: f64, metric: &Metric) -> Vec<GPoint> {
        let mut out = Vec::new();
        if self.ladder {
            out.extend(radial_centers(base, r));
        }
        let rho = radius(base);
        if self.kind == HKind::Cusp && rho > 0.0 && metric.is_group_metric() {
            // Inward-and-up witnesses: a koranyi hole near the cusp wall.
            for frac in [0.25, 0.5, 1.0] {
                let s = (r * frac).min(0.99 * rho);
                if let Ok(q) = witness_qs(base, s) {
                    out.push(q);
                }
            }
        }
        out
    }

    fn sample_members(&self, rng: &mut ChaCha8Rng, count: usize) -> Vec<GPoint> {
        (0..count)
            .map(|_| {
                let rho = if self.ladder { random_ladder_radius(rng, 8) } else { rng.gen_range(0.0..1.0) };
                let phi = rng.gen_range(0.0..2.0 * PI);
                let t = match self.kind {
                    HKind::Cone => rng.gen_range(-rho..=rho),
                    HKind::Cusp => {
                        let room = (2.0 - 2.0 * rho * rho).min(0.5);
                        let mag = 2.0 * rho * rho + rng.gen_range(0.0..=room);
                        if rng.gen_bool(0.5) {
                            mag
                        } else {
                            -mag
                        }
                    }
                };
                GPoint(vec![rho * phi.cos(), rho * phi.sin(), t])
            })
            .collect()
    }
}

/// The middle-third Cantor set in `ℝ`.
pub struct CantorSet {
    spec: GroupSpec,
    depth: u32,
}

pub fn cantor_set(depth: u32) -> CantorSet {
    CantorSet { spec: GroupSpec::euclidean(1), depth }
}

fn gap_centers_1d(x: f64, r: f64, offset: f64, scale: f64) -> Vec<GPoint> {
    let a = (x - r - offset) / scale;
    let b = (x + r - offset) / scale;
    cantor_gaps(a, b, r * 1e-3 / scale, 256)
        .into_iter()
        .map(|(g0, g1)| GPoint(vec![offset + scale * 0.5 * (g0 + g1)]))
        .collect()
}

impl SetOracle for CantorSet {
    fn name(&self) -> String {
        "cantor".into()
    }

    fn spec(&self) -> &GroupSpec {
        &self.spec
    }

    fn member(&self, p: &[f64]) -> Membership {
        cantor_member(p[0], self.depth).unwrap_or(Membership::Out)
    }

    fn dist_lower(&self, p: &[f64], metric: &Metric) -> Option<f64> {
        let d = cantor_dist_lower(p[0], self.depth);
        through_snowflake(metric, |inner| match inner {
            Metric::Euclidean | Metric::QuasiNorm | Metric::Cc(_) => Some(d),
            _ => None,
        })
    }

    fn bbox(&self) -> BBox {
        BBox::new(vec![0.0], vec![1.0])
    }

    fn hole_centers(&self, base: &[f64], r: f64, _metric: &Metric) -> Vec<GPoint> {
        gap_centers_1d(base[0], r, 0.0, 1.0)
    }

    fn sample_members(&self, rng: &mut ChaCha8Rng, count: usize) -> Vec<GPoint> {
        (0..count).map(|_| GPoint(vec![cantor_point(rng)])).collect()
    }
}

/// A single ladder piece `A_{n,k}`: a subset of `ℝ`, or in H¹ the shell of
/// points whose first-layer radius lies in it.
pub struct LadderPiece {
    spec: GroupSpec,
    idx: LadderIndex,
    depth: u32,
}

pub fn ladder_piece(idx: LadderIndex, depth: u32) -> LadderPiece {
    LadderPiece { spec: GroupSpec::euclidean(1), idx, depth }
}

pub fn ladder_shell(idx: LadderIndex, depth: u32) -> LadderPiece {
    LadderPiece { spec: GroupSpec::heisenberg(), idx, depth }
}

impl LadderPiece {
    pub fn index(&self) -> LadderIndex {
        self.idx
    }

    fn coord(&self, p: &[f64]) -> f64 {
        if self.spec.n() == 1 {
            p[0]
        } else {
            radius(p)
        }
    }

    fn gap(&self, u: f64) -> f64 {
        let (lo, hi) = self.idx.envelope();
        if u < lo {
            lo - u
        } else if u > hi {
            u - hi
        } else {
            self.idx.width() * cantor_dist_lower(self.idx.rescale(u), self.depth)
        }
    }
}

impl SetOracle for LadderPiece {
    fn name(&self) -> String {
        let kind = if self.spec.n() == 1 { "ladder" } else { "shell" };
        format!("{kind}:{}:{}", self.idx.n, self.idx.k)
    }

    fn spec(&self) -> &GroupSpec {
        &self.spec
    }

    fn member(&self, p: &[f64]) -> Membership {
        let u = self.coord(p);
        let (lo, hi) = self.idx.envelope();
        if u < lo || u > hi {
            return Membership::Out;
        }
        cantor_member(self.idx.rescale(u), self.depth).unwrap_or(Membership::Out)
    }

    fn dist_lower(&self, p: &[f64], metric: &Metric) -> Option<f64> {
        let g = self.gap(self.coord(p));
        if self.spec.n() == 1 {
            through_snowflake(metric, |inner| match inner {
                Metric::Euclidean | Metric::QuasiNorm | Metric::Cc(_) => Some(g),
                _ => None,
            })
        } else {
            radial_bound(metric, g)
        }
    }

    fn bbox(&self) -> BBox {
        let (lo, hi) = self.idx.envelope();
        if self.spec.n() == 1 {
            BBox::new(vec![lo], vec![hi])
        } else {
            BBox::new(vec![-hi, -hi, -1.0], vec![hi, hi, 1.0])
        }
    }

    fn hole_centers(&self, base: &[f64], r: f64, _metric: &Metric) -> Vec<GPoint> {
        let (lo, _) = self.idx.envelope();
        let w = self.idx.width();
        if self.spec.n() == 1 {
            gap_centers_1d(base[0], r, lo, w)
        } else {
            let rho0 = radius(base);
            if rho0 == 0.0 {
                return Vec::new();
            }
            gap_centers_1d(rho0, r, lo, w)
                .into_iter()
                .map(|u| GPoint(vec![u[0] * base[0] / rho0, u[0] * base[1] / rho0, base[2]]))
                .collect()
        }
    }

    fn sample_members(&self, rng: &mut ChaCha8Rng, count: usize) -> Vec<GPoint> {
        let (lo, _) = self.idx.envelope();
        let w = self.idx.width();
        (0..count)
            .map(|_| {
                let u = lo + w * cantor_point(rng);
                if self.spec.n() == 1 {
                    GPoint(vec![u])
                } else {
                    let phi = rng.gen_range(0.0..2.0 * PI);
                    GPoint(vec![u * phi.cos(), u * phi.sin(), rng.gen_range(-1.0..1.0)])
                }
            })
            .collect()
    }
}

/// `F × ℝ^{n−1}` for a subset `F` of the line, over a group whose first
/// coordinate is horizontal.
pub struct ProductSet {
    spec: GroupSpec,
    factor: Arc<dyn SetOracle>,
}

pub fn product_oracle(factor: Arc<dyn SetOracle>, spec: GroupSpec) -> Result<ProductSet> {
    if factor.spec().n() != 1 {
        return invalid("product factor must be a subset of the line");
    }
    if spec.m() < 1 {
        return invalid("first coordinate must be horizontal");
    }
    Ok(ProductSet { spec, factor })
}

impl SetOracle for ProductSet {
    fn name(&self) -> String {
        format!("{}-product", self.factor.name())
    }

    fn spec(&self) -> &GroupSpec {
        &self.spec
    }

    fn member(&self, p: &[f64]) -> Membership {
        self.factor.member(&p[..1])
    }

    // The first coordinate is additive under the group law, so every
    // metric here dominates |p₁ − q₁|.
    fn dist_lower(&self, p: &[f64], metric: &Metric) -> Option<f64> {
        let d = self.factor.dist_lower(&p[..1], &Metric::Euclidean)?;
        through_snowflake(metric, |inner| match inner {
            Metric::Euclidean | Metric::Koranyi | Metric::QuasiNorm | Metric::Cc(_) => Some(d),
            _ => None,
        })
    }

    fn bbox(&self) -> BBox {
        let f = self.factor.bbox();
        let mut lo = vec![f.lo[0]];
        let mut hi = vec![f.hi[0]];
        lo.extend(std::iter::repeat_n(-1.0, self.spec.n() - 1));
        hi.extend(std::iter::repeat_n(1.0, self.spec.n() - 1));
        BBox::new(lo, hi)
    }

    fn sample_members(&self, rng: &mut ChaCha8Rng, count: usize) -> Vec<GPoint> {
        self.factor
            .sample_members(rng, count)
            .into_iter()
            .map(|f| {
                let mut p = vec![f[0]];
                p.extend((1..self.spec.n()).map(|_| rng.gen_range(-1.0..1.0)));
                GPoint(p)
            })
            .collect()
    }
}

/// `{0}`, the whole space, or the empty set.
pub struct Trivial {
    spec: GroupSpec,
    kind: TrivialKind,
    half: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum TrivialKind {
    Origin,
    Everything,
    Empty,
}

pub fn origin_set(spec: GroupSpec) -> Trivial {
    Trivial { spec, kind: TrivialKind::Origin, half: 1.0 }
}

pub fn whole_space(spec: GroupSpec) -> Trivial {
    Trivial { spec, kind: TrivialKind::Everything, half: 1.0 }
}

pub fn empty_set(spec: GroupSpec) -> Trivial {
    Trivial { spec, kind: TrivialKind::Empty, half: 1.0 }
}

impl SetOracle for Trivial {
    fn name(&self) -> String {
        match self.kind {
            TrivialKind::Origin => "origin",
            TrivialKind::Everything => "everything",
            TrivialKind::Empty => "empty",
        }
        .into()
    }

    fn spec(&self) -> &GroupSpec {
        &self.spec
    }

    fn member(&self, p: &[f64]) -> Membership {
        match self.kind {
            TrivialKind::Origin if p.iter().all(|v| *v == 0.0) => Membership::In,
            TrivialKind::Everything => Membership::In,
            _ => Membership::Out,
        }
    }

    fn dist_lower(&self, p: &[f64], metric: &Metric) -> Option<f64> {
        match self.kind {
            TrivialKind::Origin => match metric.unwrap_snowflake().0 {
                Metric::Cc(_) => None,
                _ => metric.norm(&self.spec, p).ok(),
            },
            TrivialKind::Everything => Some(0.0),
            TrivialKind::Empty => Some(f64::INFINITY),
        }
    }

    fn bbox(&self) -> BBox {
        BBox::cube(self.spec.n(), self.half)
    }

    fn sample_members(&self, rng: &mut ChaCha8Rng, count: usize) -> Vec<GPoint> {
        match self.kind {
            TrivialKind::Origin => vec![GPoint::zeros(self.spec.n())],
            TrivialKind::Everything => (0..count).map(|_| self.bbox().sample(rng)).collect(),
            TrivialKind::Empty => Vec::new(),
        }
    }
}

/// Base-point hole witnesses from the non-porosity and porosity arguments.
///
/// Moves radially by `s` and drops `|t|` by `√15 s²`; the Koranyi distance
/// to the base is exactly `2s`.
pub fn witness_ps_case1(base: &[f64], s: f64) -> Result<GPoint> {
    let rho = radius(base);
    if rho == 0.0 {
        return invalid("witness needs a point off the vertical axis");
    }
    let sign = if base[2] >= 0.0 { 1.0 } else { -1.0 };
    Ok(GPoint(vec![
        base[0] + s * base[0] / rho,
        base[1] + s * base[1] / rho,
        base[2] - sign * 15f64.sqrt() * s * s,
    ]))
}

/// Radial move outward by `s`; the Koranyi distance to the base is `s`.
pub fn witness_ps_case2(base: &[f64], s: f64) -> Result<GPoint> {
    let rho = radius(base);
    if rho == 0.0 {
        return invalid("witness needs a point off the vertical axis");
    }
    Ok(GPoint(vec![base[0] + s * base[0] / rho, base[1] + s * base[1] / rho, base[2]]))
}

/// Radial move inward by `s` and `|t|` up by `s`; Euclidean distance `s√2`.
pub fn witness_qs(base: &[f64], s: f64) -> Result<GPoint> {
    let rho = radius(base);
    if rho == 0.0 {
        return invalid("witness needs a point off the vertical axis");
    }
    if !(0.0..rho).contains(&s) {
        return invalid(format!("need 0 ≤ s < |(x,y)| = {rho}, got {s}"));
    }
    let sign = if base[2] >= 0.0 { 1.0 } else { -1.0 };
    Ok(GPoint(vec![base[0] - s * base[0] / rho, base[1] - s * base[1] / rho, base[2] + sign * s]))
}

/// `{x ∈ box : pred(x)}` for an arbitrary predicate; no distance bounds.
pub struct PredicateSet<F> {
    name: String,
    spec: GroupSpec,
    bbox: BBox,
    pred: F,
}

pub fn predicate_set<F: Fn(&[f64]) -> bool + Send + Sync>(
    name: &str,
    spec: GroupSpec,
    bbox: BBox,
    pred: F,
) -> PredicateSet<F> {
    PredicateSet { name: name.into(), spec, bbox, pred }
}

impl<F: Fn(&[f64]) -> bool + Send + Sync> SetOracle for PredicateSet<F> {
    fn name(&self) -> String {
        self.name.clone()
    }

    fn spec(&self) -> &GroupSpec {
        &self.spec
    }

    fn member(&self, p: &[f64]) -> Membership {
        if self.bbox.contains(p) && (self.pred)(p) {
            Membership::In
        } else {
            Membership::Out
        }
    }

    fn bbox(&self) -> BBox {
        self.bbox.clone()
    }

    fn sample_members(&self, rng: &mut ChaCha8Rng, count: usize) -> Vec<GPoint> {
        let mut out = Vec::with_capacity(count);
        for _ in 0..100 * count {
            if out.len() == count {
                break;
            }
            let p = self.bbox.sample(rng);
            if (self.pred)(&p) {
                out.push(p);
            }
        }
        out
    }
}

/// Finite union of sets over one group.
pub struct UnionSet {
    parts: Vec<Arc<dyn SetOracle>>,
}

pub fn union_set(parts: Vec<Arc<dyn SetOracle>>) -> Result<UnionSet> {
    let Some(first) = parts.first() else {
        return invalid("union of no sets");
    };
    if parts.iter().any(|p| p.spec() != first.spec()) {
        return invalid("union parts live in different groups");
    }
    Ok(UnionSet { parts })
}

impl SetOracle for UnionSet {
    fn name(&self) -> String {
        self.parts.iter().map(|p| p.name()).collect::<Vec<_>>().join("+")
    }

    fn spec(&self) -> &GroupSpec {
        self.parts[0].spec()
    }

    fn member(&self, p: &[f64]) -> Membership {
        let mut out = Membership::Out;
        for part in &self.parts {
            match part.member(p) {
                Membership::In => return Membership::In,
                Membership::Undecided => out = Membership::Undecided,
                Membership::Out => {}
            }
        }
        out
    }

    fn dist_lower(&self, p: &[f64], metric: &Metric) -> Option<f64> {
        self.parts.iter().try_fold(f64::INFINITY, |acc, part| Some(acc.min(part.dist_lower(p, metric)?)))
    }

    fn bbox(&self) -> BBox {
        let mut b = self.parts[0].bbox();
        for part in &self.parts[1..] {
            let o = part.bbox();
            for d in 0..b.dim() {
                b.lo[d] = b.lo[d].min(o.lo[d]);
                b.hi[d] = b.hi[d].max(o.hi[d]);
            }
        }
        b
    }

    fn hole_centers(&self, base: &[f64], r: f64, metric: &Metric) -> Vec<GPoint> {
        self.parts.iter().flat_map(|p| p.hole_centers(base, r, metric)).collect()
    }

    fn sample_members(&self, rng: &mut ChaCha8Rng, count: usize) -> Vec<GPoint> {
        let k = self.parts.len();
        self.parts
            .iter()
            .enumerate()
            .flat_map(|(i, p)| p.sample_members(rng, count / k + usize::from(i < count % k)))
            .collect()
    }
}

pub const SET_NAMES: &[&str] =
    &["lambda", "upsilon", "pe", "pc", "cantor", "cantor-product", "origin", "empty", "shell"];

/// Looks up a set by its registry name.
pub fn named_set(name: &str, depth: u32) -> Result<Arc<dyn SetOracle>> {
    Ok(match name {
        "lambda" => Arc::new(cone_lambda()),
        "upsilon" => Arc::new(cusp_upsilon()),
        "pe" => Arc::new(pe_set(depth)),
        "pc" => Arc::new(pc_set(depth)),
        "cantor" => Arc::new(cantor_set(depth)),
        "cantor-product" => Arc::new(product_oracle(Arc::new(cantor_set(depth)), GroupSpec::heisenberg())?),
        "origin" => Arc::new(origin_set(GroupSpec::heisenberg())),
        "empty" => Arc::new(empty_set(GroupSpec::heisenberg())),
        "shell" => Arc::new(ladder_shell(LadderIndex { n: 1, k: 0 }, depth)),
        other => return invalid(format!("unknown set '{other}' (known: {})", SET_NAMES.join(", "))),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::koranyi_norm;
    use rand::SeedableRng;

    #[test]
    fn cone_and_cusp_examples() {
        let l = cone_lambda();
        assert_eq!(l.member(&[1.0, 0.0, 0.5]), Membership::In);
        assert_eq!(l.member(&[0.0, 0.0, 1.0]), Membership::Out);
        assert_eq!(l.member(&[1.0, 0.0, 1.0]), Membership::In);
        let u = cusp_upsilon();
        assert_eq!(u.member(&[0.1, 0.0, 0.05]), Membership::In);
        assert_eq!(u.member(&[1.0, 0.0, 1.0]), Membership::Out);
        assert_eq!(u.member(&[0.0, 0.0, -3.0]), Membership::In);
    }

    #[test]
    fn ladder_set_examples() {
        let pe = pe_set(40);
        assert_eq!(pe.member(&[0.5, 0.0, 0.1]), Membership::In);
        assert_eq!(pe.member(&[0.0, 0.0, 0.0]), Membership::In);
        assert_eq!(pe.member(&[0.6, 0.0, 0.0]), Membership::Out);
        assert_eq!(pe.member(&[0.5, 0.0, 0.6]), Membership::Out);
        let pc = pc_set(40);
        assert_eq!(pc.member(&[0.5, 0.0, 0.6]), Membership::In);
        assert_eq!(pc.member(&[0.5, 0.0, 0.1]), Membership::Out);
    }

    #[test]
    fn witness_examples() {
        let p = witness_ps_case1(&[0.01, 0.0, 0.02], 0.005).unwrap();
        assert!((p[0] - 0.015).abs() < 1e-15);
        assert!((p[2] - (0.02 - 15f64.sqrt() * 2.5e-5)).abs() < 1e-15);
        let g = GroupSpec::heisenberg();
        let d = koranyi_norm(&g.between(&[0.01, 0.0, 0.02], &p));
        assert!((d - 0.01).abs() < 1e-12);

        let q = witness_ps_case2(&[0.5, 0.0, 0.1], 0.1).unwrap();
        assert_eq!(q.0, vec![0.6, 0.0, 0.1]);

        let q = witness_qs(&[0.1, 0.0, 0.01], 0.05).unwrap();
        assert!((q[0] - 0.05).abs() < 1e-15 && (q[2] - 0.06).abs() < 1e-15);
        assert_eq!(witness_qs(&[0.1, 0.0, 0.01], 0.0).unwrap().0, vec![0.1, 0.0, 0.01]);
        let c = witness_qs(&[0.1, 0.0, 0.0], 0.05).unwrap();
        assert_eq!(cusp_upsilon().member(&c), Membership::In);
        assert!(witness_qs(&[0.1, 0.0, 0.0], 0.1).is_err());
        assert!(witness_ps_case1(&[0.0, 0.0, 1.0], 0.1).is_err());
    }

    #[test]
    fn product_examples() {
        let c = product_oracle(Arc::new(cantor_set(40)), GroupSpec::heisenberg()).unwrap();
        assert_eq!(c.member(&[0.25, 7.0, -3.0]), Membership::In);
        let e = product_oracle(Arc::new(ladder_piece(LadderIndex { n: 1, k: 0 }, 40)), GroupSpec::heisenberg())
            .unwrap();
        assert_eq!(e.member(&[0.3, 0.0, 0.0]), Membership::Out);
        assert!(product_oracle(Arc::new(pe_set(40)), GroupSpec::heisenberg()).is_err());
    }

    #[test]
    fn parabola_distance_matches_brute_force() {
        for &(r, t) in &[(0.5, 0.0), (1.0, 0.3), (0.2, 0.05), (2.0, 1.0), (1.0, -0.5)] {
            let t_abs: f64 = t;
            let t_abs = t_abs.abs();
            let brute = (0..200_001)
                .map(|i| {
                    let x = r * i as f64 / 200_000.0;
                    ((x - r).powi(2) + (2.0 * x * x - t_abs).powi(2)).sqrt()
                })
                .fold(f64::INFINITY, f64::min);
            let d = parabola_distance(r, t_abs);
            assert!(d <= brute + 1e-12 && d >= brute - 1e-6, "{r} {t}: {d} vs {brute}");
        }
    }

    #[test]
    fn bounds_never_exceed_sampled_distances() {
        let g = GroupSpec::heisenberg();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for set in [pe_set(40), pc_set(40), cone_lambda(), cusp_upsilon()] {
            let members = set.sample_members(&mut rng, 400);
            for _ in 0..400 {
                let p = set.bbox().sample(&mut rng);
                for metric in [Metric::Euclidean, Metric::Koranyi] {
                    let b = set.dist_lower(&p, &metric).unwrap();
                    // Sampled members sit within 3^-34 of the set.
                    for q in &members {
                        let d = metric.dist(&g, &p, q).unwrap();
                        assert!(b <= d + 1e-12, "{} {}: {b} > {d}", set.name(), metric.name());
                    }
                }
            }
        }
    }

    #[test]
    fn registry() {
        for name in SET_NAMES {
            assert_eq!(named_set(name, 40).unwrap().name().split(':').next().unwrap(), *name);
        }
        assert!(named_set("nope", 40).is_err());
    }
}
