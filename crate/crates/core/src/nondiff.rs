//! Bump functions, functions built from Whitney covers, and symmetric
//! difference quotients.
//!
//! On a cover `S`, the piece `f_S(x) = r·b(δ_{1/r}(y⁻¹x))` for `x ∈ B(y, r)`
//! and 0 elsewhere. Summing pieces with weights `2^{-i}` gives a 1-Lipschitz
//! function whose symmetric quotients stay bounded below on every piece's set.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::group::{GPoint, GroupSpec};
use crate::metric::Metric;
use crate::cantor::LadderIndex;
use crate::sets::{ladder_piece, union_set, BBox, SetOracle};
use crate::whitney::{overlapping_pairs, whitney_cover, BallIndex, CoverConfig, WhitneyCover};

/// Maximum slope of the smootherstep `6u⁵ − 15u⁴ + 10u³`.
const STEP_SLOPE: f64 = 1.875;

fn smootherstep(u: f64) -> f64 {
    u * u * u * (10.0 + u * (-15.0 + 6.0 * u))
}

/// `b(x) = α·ψ(N(x))` with a flat-top profile `ψ`: 1 on `[0, plateau]`,
/// smooth descent to 0 at 1.
#[derive(Debug, Clone, PartialEq)]
pub struct BumpSpec {
    pub plateau: f64,
    pub alpha: f64,
    pub beta: f64,
    pub metric: Metric,
    pub spec: GroupSpec,
}

impl BumpSpec {
    pub fn profile(&self, s: f64) -> f64 {
        if s <= self.plateau {
            1.0
        } else if s >= 1.0 {
            0.0
        } else {
            1.0 - smootherstep((s - self.plateau) / (1.0 - self.plateau))
        }
    }

    pub fn eval(&self, p: &[f64]) -> f64 {
        self.alpha * self.profile(self.metric.norm_unchecked(&self.spec, p))
    }
}

/// Metric whose unit ball supports bumps on `spec`.
pub fn bump_metric(spec: &GroupSpec) -> Metric {
    if spec.is_heisenberg() {
        Metric::Koranyi
    } else if spec.is_abelian() {
        Metric::Euclidean
    } else {
        Metric::QuasiNorm
    }
}

const CALIBRATION_PAIRS: usize = 20_000;

pub fn bump_make(spec: &GroupSpec, plateau: f64) -> Result<BumpSpec> {
    if !(0.0..1.0).contains(&plateau) {
        return Err(Error::InvalidShape(format!("plateau must lie in [0, 1), got {plateau}")));
    }
    let metric = bump_metric(spec);
    let mut bump = BumpSpec {
        plateau,
        alpha: (1.0 - plateau) / STEP_SLOPE,
        beta: 0.0,
        metric: metric.clone(),
        spec: spec.clone(),
    };
    // The norm is 1-Lipschitz for the Euclidean and Korányi metrics; for
    // quasi-norms the slope is only sampled, so shrink until it passes.
    for _ in 0..20 {
        let lip = sampled_lipschitz(&BumpField(&bump), &metric, &BBox::cube(spec.n(), 1.2), CALIBRATION_PAIRS, 17);
        if lip <= 1.0 {
            bump.beta = bump.alpha * bump.profile(0.0);
            return Ok(bump);
        }
        bump.alpha *= (1.0 - 1e-9) / lip;
        if bump.alpha < 1e-6 {
            break;
        }
    }
    Err(Error::InvalidShape(format!("Lipschitz calibration failed for {}", metric.name())))
}

struct BumpField<'a>(&'a BumpSpec);

impl ScalarField for BumpField<'_> {
    fn spec(&self) -> &GroupSpec {
        &self.0.spec
    }

    fn eval(&self, p: &[f64]) -> f64 {
        self.0.eval(p)
    }

    fn lipschitz_bound(&self) -> f64 {
        1.0
    }
}

/// A real function on a group.
pub trait ScalarField: Send + Sync {
    fn spec(&self) -> &GroupSpec;

    fn eval(&self, p: &[f64]) -> f64;

    fn lipschitz_bound(&self) -> f64;

    /// Displacements `h` with `d(h) ≤ reach` worth probing in difference
    /// quotients at `x`.
    fn quotient_witnesses(&self, _x: &[f64], _reach: f64) -> Vec<GPoint> {
        Vec::new()
    }
}

/// A closure with a declared Lipschitz bound.
pub struct FnField<F> {
    spec: GroupSpec,
    f: F,
    lip: f64,
}

impl<F: Fn(&[f64]) -> f64 + Send + Sync> FnField<F> {
    pub fn new(spec: GroupSpec, lip: f64, f: F) -> Self {
        FnField { spec, f, lip }
    }
}

impl<F: Fn(&[f64]) -> f64 + Send + Sync> ScalarField for FnField<F> {
    fn spec(&self) -> &GroupSpec {
        &self.spec
    }

    fn eval(&self, p: &[f64]) -> f64 {
        (self.f)(p)
    }

    fn lipschitz_bound(&self) -> f64 {
        self.lip
    }
}

/// `f_S` for one cover.
#[derive(Debug, Clone)]
pub struct PieceField {
    cover: WhitneyCover,
    index: BallIndex,
    bump: BumpSpec,
}

pub fn piece_function(cover: WhitneyCover, bump: &BumpSpec) -> Result<PieceField> {
    if cover.spec != bump.spec || cover.metric != bump.metric {
        return Err(Error::InvalidCover(format!(
            "cover uses {} but the bump is supported on {} balls",
            cover.metric.name(),
            bump.metric.name()
        )));
    }
    if let Some(b) = cover.balls.iter().find(|b| !(b.radius > 0.0 && b.radius < 1.0)) {
        return Err(Error::InvalidCover(format!("radius {} outside (0, 1)", b.radius)));
    }
    let overlaps = overlapping_pairs(&cover)?;
    if let Some(&(i, j)) = overlaps.first() {
        return Err(Error::InvalidCover(format!("{} overlapping pairs, first ({i}, {j})", overlaps.len())));
    }
    let index = BallIndex::build(&cover)?;
    Ok(PieceField { cover, index, bump: bump.clone() })
}

impl PieceField {
    pub fn cover(&self) -> &WhitneyCover {
        &self.cover
    }
}

impl ScalarField for PieceField {
    fn spec(&self) -> &GroupSpec {
        &self.cover.spec
    }

    fn eval(&self, p: &[f64]) -> f64 {
        let Some(i) = self.index.containing(&self.cover, p) else {
            return 0.0;
        };
        let ball = &self.cover.balls[i];
        let spec = &self.cover.spec;
        let local = spec.dilation(1.0 / ball.radius, &spec.between(&ball.center, p));
        ball.radius * self.bump.eval(&local)
    }

    fn lipschitz_bound(&self) -> f64 {
        1.0
    }

    fn quotient_witnesses(&self, x: &[f64], reach: f64) -> Vec<GPoint> {
        self.index
            .centers_within(&self.cover, x, reach)
            .into_iter()
            .map(|j| self.cover.spec.between(x, &self.cover.balls[j].center))
            .collect()
    }
}

/// One term of the sum: the set it targets, its piece, and the cover constant.
#[derive(Clone)]
pub struct Piece {
    pub set: Arc<dyn SetOracle>,
    pub field: Arc<PieceField>,
    pub c: f64,
}

/// `f = Σ_{i≥1} 2^{-i} f_i`.
#[derive(Clone)]
pub struct PieceSum {
    spec: GroupSpec,
    pieces: Vec<Piece>,
    pub beta: f64,
}

pub fn build_piece_sum(
    pieces: Vec<(Arc<dyn SetOracle>, WhitneyCover, f64)>,
    bump: &BumpSpec,
) -> Result<PieceSum> {
    if pieces.is_empty() {
        return invalid("no pieces to sum");
    }
    let spec = bump.spec.clone();
    let pieces = pieces
        .into_iter()
        .map(|(set, cover, c)| {
            if set.spec() != &spec {
                return invalid(format!("set '{}' is not in the bump's group", set.name()));
            }
            if !(c > 1.0) {
                return invalid(format!("cover constant must exceed 1, got {c}"));
            }
            Ok(Piece { set, field: Arc::new(piece_function(cover, bump)?), c })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PieceSum { spec, pieces, beta: bump.beta })
}

impl PieceSum {
    pub fn pieces(&self) -> &[Piece] {
        &self.pieces
    }

    /// The partial sum over the first `count` pieces.
    pub fn truncated(&self, count: usize) -> PieceSum {
        PieceSum { pieces: self.pieces[..count.min(self.pieces.len())].to_vec(), ..self.clone() }
    }
}

impl ScalarField for PieceSum {
    fn spec(&self) -> &GroupSpec {
        &self.spec
    }

    fn eval(&self, p: &[f64]) -> f64 {
        let mut w = 1.0;
        self.pieces
            .iter()
            .map(|piece| {
                w *= 0.5;
                w * piece.field.eval(p)
            })
            .sum()
    }

    fn lipschitz_bound(&self) -> f64 {
        1.0
    }

    fn quotient_witnesses(&self, x: &[f64], reach: f64) -> Vec<GPoint> {
        self.pieces.iter().flat_map(|p| p.field.quotient_witnesses(x, reach)).collect()
    }
}

/// The sum over the first `count` ladder pieces `A_{n,k} ⊂ [0, 1]` in
/// lexicographic order. Cover `i` keeps clear of pieces `i, i+1, …`, so
/// every piece's points lie outside the balls of all earlier covers and the
/// heaviest term contributes its quotient everywhere on the union.
pub fn ladder_piece_sum(count: usize, depth: u32, bump: &BumpSpec, cfg: &CoverConfig) -> Result<PieceSum> {
    if count == 0 {
        return invalid("no pieces to sum");
    }
    if bump.spec != GroupSpec::euclidean(1) {
        return invalid("ladder pieces live on the line");
    }
    let sets: Vec<Arc<dyn SetOracle>> = LadderIndex::all(64)
        .take(count)
        .map(|idx| Arc::new(ladder_piece(idx, depth)) as Arc<dyn SetOracle>)
        .collect();
    let domain = BBox::new(vec![0.0], vec![1.0]);
    let pieces = (0..count)
        .map(|i| {
            let avoid = union_set(sets[i..].to_vec())?;
            let cover = whitney_cover(&avoid, &domain, cfg)?;
            Ok((sets[i].clone(), cover, cfg.c))
        })
        .collect::<Result<Vec<_>>>()?;
    build_piece_sum(pieces, bump)
}

/// `(f(xh) + f(xh⁻¹) − 2f(x)) / d(h, 0)`.
pub fn symmetric_quotient(f: &dyn ScalarField, x: &[f64], h: &[f64], metric: &Metric) -> Result<f64> {
    let spec = f.spec();
    spec.check(x)?;
    let d = metric.norm(spec, h)?;
    if !(d > 0.0) {
        return invalid("symmetric quotient needs h away from the identity");
    }
    let plus = spec.compose(x, h);
    let minus = spec.compose(x, &spec.inverse(h));
    Ok((f.eval(&plus) + f.eval(&minus) - 2.0 * f.eval(x)) / d)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub scale: f64,
    pub max_quotient: f64,
    /// Displacement attaining the maximum.
    pub witness: Option<GPoint>,
}

/// Largest symmetric quotient per scale. Scale `k` collects displacements
/// with `scales[k+1] < d(h) ≤ scales[k]`: `directions` sampled ones at
/// exactly `scales[k]` plus the field's own witnesses.
pub fn quotient_scan(
    f: &dyn ScalarField,
    x: &[f64],
    metric: &Metric,
    scales: &[f64],
    directions: usize,
    seed: u64,
) -> Result<Vec<ScanRow>> {
    let spec = f.spec();
    spec.check(x)?;
    metric.supports(spec)?;
    if scales.iter().any(|s| !(*s > 0.0)) || scales.windows(2).any(|w| w[1] >= w[0]) {
        return invalid("scales must be positive and strictly decreasing");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut dirs: Vec<GPoint> = Vec::with_capacity(directions);
    for i in 0..directions.min(2 * spec.n()) {
        let mut e = GPoint::zeros(spec.n());
        e[i / 2] = if i % 2 == 0 { 1.0 } else { -1.0 };
        dirs.push(e);
    }
    while dirs.len() < directions {
        dirs.push(metric.sphere_sample(spec, &mut rng));
    }
    let zero = GPoint::zeros(spec.n());
    let mut rows: Vec<ScanRow> =
        scales.iter().map(|&scale| ScanRow { scale, max_quotient: f64::NEG_INFINITY, witness: None }).collect();
    let offer = |rows: &mut Vec<ScanRow>, k: usize, h: GPoint| {
        if let Ok(q) = symmetric_quotient(f, x, &h, metric) {
            if q > rows[k].max_quotient {
                rows[k].max_quotient = q;
                rows[k].witness = Some(h);
            }
        }
    };
    for (k, &s) in scales.iter().enumerate() {
        for dir in &dirs {
            offer(&mut rows, k, metric.ray_point(spec, &zero, dir, s));
        }
    }
    for h in f.quotient_witnesses(x, scales[0]) {
        let d = metric.norm_unchecked(spec, &h);
        if !(d > 0.0) || d > scales[0] {
            continue;
        }
        let k = scales.iter().rposition(|&s| d <= s).unwrap_or(0);
        offer(&mut rows, k, h);
    }
    Ok(rows)
}

/// Largest `|f(p) − f(q)| / d(p, q)` over seeded pairs in `domain`: half
/// uniform, half at log-uniform separations down to `1e-6`.
pub fn sampled_lipschitz(f: &dyn ScalarField, metric: &Metric, domain: &BBox, pairs: usize, seed: u64) -> f64 {
    let spec = f.spec();
    (0..pairs)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (i as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15));
            let p = domain.sample(&mut rng);
            let q = if i % 2 == 0 {
                domain.sample(&mut rng)
            } else {
                let dir = metric.sphere_sample(spec, &mut rng);
                let s = 10f64.powf(rng.gen_range(-6.0..-1.0));
                metric.ray_point(spec, &p, &dir, s)
            };
            let d = metric.dist_unchecked(spec, &p, &q);
            if d > 0.0 {
                (f.eval(&p) - f.eval(&q)).abs() / d
            } else {
                0.0
            }
        })
        .reduce(|| 0.0, f64::max)
}
