//! Whitney-type covers by disjoint balls avoiding a set `E`, with
//! C-inflated small balls reaching every remaining point.
//!
//! Construction refines a grid of cubes level by level. Each cube proposes
//! the largest ball at its center that stays clear of `E` (through the
//! certified distance bound) and of balls already placed; proposals are
//! accepted greedily. Cubes keep refining until a fill size is reached, and
//! past it only next to `E`.

use std::collections::{BTreeMap, HashMap};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::group::{GPoint, GroupSpec};
use crate::metric::Metric;
use crate::sets::{BBox, SetOracle};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ball {
    pub center: GPoint,
    pub radius: f64,
}

#[derive(Debug, Clone)]
pub struct WhitneyCover {
    pub balls: Vec<Ball>,
    pub c: f64,
    pub domain: BBox,
    pub metric: Metric,
    pub spec: GroupSpec,
    /// The ball budget ran out before refinement finished.
    pub truncated: bool,
}

/// Euclidean coordinate box containing the metric ball `B(center, r)`.
pub(crate) fn ball_bbox(metric: &Metric, _spec: &GroupSpec, center: &[f64], r: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    let (inner, eps) = metric.unwrap_snowflake();
    let r = if eps == 1.0 { r } else { r.powf(1.0 / eps) };
    match inner {
        Metric::Euclidean => Ok((center.iter().map(|c| c - r).collect(), center.iter().map(|c| c + r).collect())),
        Metric::Koranyi => {
            let dt = r * r + 2.0 * r * (center[0].abs() + center[1].abs());
            let ext = [r, r, dt];
            Ok((
                center.iter().zip(ext).map(|(c, e)| c - e).collect(),
                center.iter().zip(ext).map(|(c, e)| c + e).collect(),
            ))
        }
        _ => Err(Error::UnsupportedMetric(format!(
            "covers need a ball bounding box; not available for {}",
            metric.name()
        ))),
    }
}

/// Balls bucketed by radius level `ℓ` (radius in `[2^{-ℓ-1}, 2^{-ℓ})`),
/// each level a hash grid with cells of side `8·2^{-ℓ}`.
#[derive(Debug, Clone, Default)]
pub struct BallIndex {
    levels: BTreeMap<i32, Level>,
}

#[derive(Debug, Clone)]
struct Level {
    cell: f64,
    members: Vec<usize>,
    map: HashMap<Vec<i64>, Vec<usize>>,
}

impl Level {
    fn collect(&self, lo: &[f64], hi: &[f64], out: &mut Vec<usize>) {
        match cells_between(lo, hi, self.cell, 4 * self.members.len().max(1)) {
            Some(keys) => {
                for k in keys {
                    if let Some(v) = self.map.get(&k) {
                        out.extend_from_slice(v);
                    }
                }
            }
            None => out.extend_from_slice(&self.members),
        }
    }
}

fn radius_level(r: f64) -> i32 {
    (-r.log2()).floor() as i32
}

impl BallIndex {
    pub fn build(cover: &WhitneyCover) -> Result<Self> {
        let mut idx = BallIndex::default();
        for (i, b) in cover.balls.iter().enumerate() {
            idx.insert(i, &cover.metric, &cover.spec, b)?;
        }
        Ok(idx)
    }

    fn insert(&mut self, i: usize, metric: &Metric, spec: &GroupSpec, ball: &Ball) -> Result<()> {
        let lvl = radius_level(ball.radius);
        let level = self.levels.entry(lvl).or_insert_with(|| Level {
            cell: 8.0 * (-(lvl as f64)).exp2(),
            members: Vec::new(),
            map: HashMap::new(),
        });
        level.members.push(i);
        let (lo, hi) = ball_bbox(metric, spec, &ball.center, ball.radius)?;
        for key in cells_between(&lo, &hi, level.cell, usize::MAX).expect("unbounded") {
            level.map.entry(key).or_default().push(i);
        }
        Ok(())
    }

    /// Balls at radius levels `≥ min_level` whose bounding boxes may meet
    /// the query box.
    fn query(&self, lo: &[f64], hi: &[f64], min_level: i32, out: &mut Vec<usize>) {
        out.clear();
        for level in self.levels.range(min_level..).map(|(_, l)| l) {
            level.collect(lo, hi, out);
        }
        out.sort_unstable();
        out.dedup();
    }

    /// Like `query`, restricted to one radius level.
    fn query_level(&self, lo: &[f64], hi: &[f64], lvl: i32, out: &mut Vec<usize>) {
        out.clear();
        if let Some(level) = self.levels.get(&lvl) {
            level.collect(lo, hi, out);
        }
        out.sort_unstable();
        out.dedup();
    }

    /// The ball containing `p`, if any (balls are disjoint).
    pub fn containing(&self, cover: &WhitneyCover, p: &[f64]) -> Option<usize> {
        let (lo, hi) = ball_bbox(&cover.metric, &cover.spec, p, 0.0).ok()?;
        let mut near = Vec::new();
        self.query(&lo, &hi, i32::MIN, &mut near);
        near.into_iter().find(|&j| {
            let b = &cover.balls[j];
            cover.metric.dist_unchecked(&cover.spec, p, &b.center) <= b.radius
        })
    }

    /// Balls whose centers lie within `r` of `p`.
    pub fn centers_within(&self, cover: &WhitneyCover, p: &[f64], r: f64) -> Vec<usize> {
        let Ok((lo, hi)) = ball_bbox(&cover.metric, &cover.spec, p, r) else {
            return Vec::new();
        };
        let mut near = Vec::new();
        self.query(&lo, &hi, i32::MIN, &mut near);
        near.retain(|&j| cover.metric.dist_unchecked(&cover.spec, p, &cover.balls[j].center) <= r);
        near
    }

    fn level_keys(&self) -> Vec<i32> {
        self.levels.keys().copied().collect()
    }
}

/// Grid keys of cells meeting `[lo, hi]`, or `None` when there are more
/// than `cap` of them.
fn cells_between(lo: &[f64], hi: &[f64], cell: f64, cap: usize) -> Option<Vec<Vec<i64>>> {
    let a: Vec<i64> = lo.iter().map(|v| (v / cell).floor() as i64).collect();
    let b: Vec<i64> = hi.iter().map(|v| (v / cell).floor() as i64).collect();
    let mut total: usize = 1;
    for (x, y) in a.iter().zip(&b) {
        total = total.saturating_mul((y - x + 1) as usize);
    }
    if total > cap {
        return None;
    }
    let mut out = Vec::with_capacity(total);
    let mut cur = a.clone();
    loop {
        out.push(cur.clone());
        let mut d = 0;
        loop {
            if d == cur.len() {
                return Some(out);
            }
            if cur[d] < b[d] {
                cur[d] += 1;
                break;
            }
            cur[d] = a[d];
            d += 1;
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyConfig {
    pub deltas: Vec<f64>,
    /// Grid spacing for one-dimensional domains.
    pub resolution: f64,
    /// Uniform samples for higher-dimensional domains.
    pub samples: usize,
    /// Extra samples drawn from the set itself.
    pub set_samples: usize,
    pub seed: u64,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            deltas: (1..=8).map(|k| (-(k as f64)).exp2()).collect(),
            resolution: 1e-4,
            samples: 20_000,
            set_samples: 2_000,
            seed: 7,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoverConfig {
    pub c: f64,
    pub metric: Metric,
    /// Every cube is refined until its side is at most this.
    pub fill_size: f64,
    /// Further levels of refinement next to the set.
    pub near_set_levels: u32,
    /// Further levels for cubes that could not host a ball.
    pub sliver_levels: u32,
    /// Fraction of the certified distance to `E` a ball may use.
    pub sigma: f64,
    /// Minimum accepted radius as a fraction of the cube side.
    pub accept: f64,
    pub budget: usize,
    pub verify: VerifyConfig,
}

impl Default for CoverConfig {
    fn default() -> Self {
        CoverConfig {
            c: 6.0,
            metric: Metric::Euclidean,
            fill_size: (-9f64).exp2(),
            near_set_levels: 8,
            sliver_levels: 2,
            sigma: 0.9,
            accept: 0.15,
            budget: 2_000_000,
            verify: VerifyConfig::default(),
        }
    }
}

#[derive(Debug, Clone)]
struct Cube {
    center: Vec<f64>,
    side: f64,
    level: u32,
}

impl Cube {
    fn children(&self) -> Vec<Cube> {
        let n = self.center.len();
        let q = self.side / 4.0;
        (0..1usize << n)
            .map(|mask| Cube {
                center: (0..n)
                    .map(|d| self.center[d] + if mask >> d & 1 == 1 { q } else { -q })
                    .collect(),
                side: self.side / 2.0,
                level: self.level + 1,
            })
            .collect()
    }

    fn corners(&self) -> Vec<Vec<f64>> {
        let n = self.center.len();
        let h = self.side / 2.0;
        (0..1usize << n)
            .map(|mask| (0..n).map(|d| self.center[d] + if mask >> d & 1 == 1 { h } else { -h }).collect())
            .collect()
    }

    fn meets(&self, b: &BBox) -> bool {
        let h = self.side / 2.0;
        self.center
            .iter()
            .zip(b.lo.iter().zip(&b.hi))
            .all(|(c, (l, u))| c + h >= *l && c - h <= *u)
    }
}

/// Circumradius of a cube of side `h` in `metric`, from its center.
fn circumradius(metric: &Metric, spec: &GroupSpec, cube: &Cube) -> f64 {
    cube.corners()
        .iter()
        .map(|c| metric.dist_unchecked(spec, &cube.center, c))
        .fold(0.0, f64::max)
}

pub fn whitney_cover(set: &dyn SetOracle, domain: &BBox, cfg: &CoverConfig) -> Result<WhitneyCover> {
    let spec = set.spec().clone();
    let metric = cfg.metric.clone();
    metric.supports(&spec)?;
    if !(cfg.c > 1.0) {
        return invalid(format!("inflation constant must exceed 1, got {}", cfg.c));
    }
    if domain.dim() != spec.n() {
        return invalid("domain dimension does not match the set's group");
    }
    if !(cfg.sigma > 0.0 && cfg.sigma < 1.0) || !(cfg.fill_size > 0.0) {
        return invalid("cover needs 0 < sigma < 1 and a positive fill size");
    }
    ball_bbox(&metric, &spec, &domain.center(), 0.5)?;
    if set.dist_lower(&domain.center(), &metric).is_none() {
        return invalid(format!("set '{}' has no certified distance bound for {}", set.name(), metric.name()));
    }

    let n = spec.n();
    let side0 = domain.lo.iter().zip(&domain.hi).map(|(l, h)| h - l).fold(f64::INFINITY, f64::min);
    if !(side0 > 0.0) {
        return invalid("domain must have positive extent in every coordinate");
    }
    let counts: Vec<usize> =
        domain.lo.iter().zip(&domain.hi).map(|(l, h)| (((h - l) / side0) - 1e-9).ceil().max(1.0) as usize).collect();
    let mut frontier = Vec::new();
    let mut idx = vec![0usize; n];
    loop {
        frontier.push(Cube {
            center: (0..n).map(|d| domain.lo[d] + (idx[d] as f64 + 0.5) * side0).collect(),
            side: side0,
            level: 0,
        });
        let mut d = 0;
        while d < n {
            idx[d] += 1;
            if idx[d] < counts[d] {
                break;
            }
            idx[d] = 0;
            d += 1;
        }
        if d == n {
            break;
        }
    }

    let mut cover = WhitneyCover { balls: Vec::new(), c: cfg.c, domain: domain.clone(), metric, spec, truncated: false };
    let mut index = BallIndex::default();
    let mut scratch = Vec::new();

    while !frontier.is_empty() {
        // Proposed radii from the set alone, computed in parallel.
        let props: Vec<(f64, f64)> = frontier
            .par_iter()
            .map(|cube| {
                let de = set.dist_lower(&cube.center, &cover.metric).unwrap_or(0.0);
                let circ = circumradius(&cover.metric, &cover.spec, cube);
                ((cfg.sigma * de).min(circ * (1.0 + 1e-9)).min(1.0 - 1e-9), de)
            })
            .collect();
        let mut order: Vec<usize> = (0..frontier.len()).collect();
        order.sort_by(|&a, &b| props[b].0.total_cmp(&props[a].0).then(a.cmp(&b)));
        let mut hosted = vec![false; frontier.len()];

        for &i in &order {
            let cube = &frontier[i];
            let mut rho = props[i].0;
            if rho < cfg.accept * cube.side {
                continue;
            }
            let (lo, hi) = ball_bbox(&cover.metric, &cover.spec, &cube.center, rho)?;
            index.query(&lo, &hi, i32::MIN, &mut scratch);
            for &j in &scratch {
                let b = &cover.balls[j];
                let gap = cover.metric.dist_unchecked(&cover.spec, &cube.center, &b.center) - b.radius;
                rho = rho.min(gap * (1.0 - 1e-9));
            }
            if rho >= cfg.accept * cube.side && rho > 0.0 {
                let ball = Ball { center: GPoint(cube.center.clone()), radius: rho };
                index.insert(cover.balls.len(), &cover.metric, &cover.spec, &ball)?;
                cover.balls.push(ball);
                hosted[i] = true;
                if cover.balls.len() >= cfg.budget {
                    cover.truncated = true;
                    break;
                }
            }
        }
        if cover.truncated {
            break;
        }

        let mut next = Vec::new();
        for (i, cube) in frontier.iter().enumerate() {
            let child_side = cube.side / 2.0;
            let filling = child_side >= cfg.fill_size * (1.0 - 1e-12);
            let beyond = cube.side <= cfg.fill_size * (1.0 + 1e-12);
            let fine_levels = if beyond {
                (cfg.fill_size / child_side).log2().round() as u32
            } else {
                0
            };
            let near = props[i].1 <= 2.0 * circumradius(&cover.metric, &cover.spec, cube);
            let sliver = !hosted[i] && fine_levels <= cfg.sliver_levels;
            if !(filling || sliver || (near && fine_levels <= cfg.near_set_levels)) {
                continue;
            }
            for child in cube.children() {
                if !child.meets(domain) {
                    continue;
                }
                let corners = child.corners();
                let (lo, hi) = ball_bbox(&cover.metric, &cover.spec, &child.center, 0.0)?;
                index.query(&lo, &hi, i32::MIN, &mut scratch);
                let swallowed = scratch.iter().any(|&j| {
                    let b = &cover.balls[j];
                    corners
                        .iter()
                        .all(|c| cover.metric.dist_unchecked(&cover.spec, c, &b.center) <= b.radius)
                });
                if !swallowed {
                    next.push(child);
                }
            }
        }
        frontier = next;
    }

    let report = cover_verify(&cover, set, &cfg.verify)?;
    if !report.coverage.is_empty() && report.coverage.iter().all(|c| c.uncovered > 0) {
        return Err(Error::ConstructionFailed(format!(
            "coverage failed at every tested δ; {} balls, achieved C = {:.3} (target {}), worst sample {:?}",
            cover.balls.len(),
            report.achieved_c,
            cover.c,
            report.coverage.last().and_then(|c| c.worst.clone()),
        )));
    }
    Ok(cover)
}

/// Pairs of balls that are not strictly separated (`d > r_i + r_j`).
pub fn overlapping_pairs(cover: &WhitneyCover) -> Result<Vec<(usize, usize)>> {
    cover.metric.supports(&cover.spec)?;
    let index = BallIndex::build(cover)?;
    Ok(overlapping_pairs_with(cover, &index))
}

fn overlapping_pairs_with(cover: &WhitneyCover, index: &BallIndex) -> Vec<(usize, usize)> {
    let (metric, spec) = (&cover.metric, &cover.spec);
    let mut pairs: Vec<(usize, usize)> = cover
        .balls
        .par_iter()
        .enumerate()
        .flat_map_iter(|(i, b)| {
            let mut near = Vec::new();
            let (lo, hi) = ball_bbox(metric, spec, &b.center, b.radius).expect("checked metric");
            index.query(&lo, &hi, i32::MIN, &mut near);
            near.into_iter()
                .filter(move |&j| {
                    j > i && {
                        let c = &cover.balls[j];
                        !(metric.dist_unchecked(spec, &b.center, &c.center) > b.radius + c.radius)
                    }
                })
                .map(move |j| (i, j))
        })
        .collect();
    pairs.sort_unstable();
    pairs
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaCoverage {
    pub delta: f64,
    pub uncovered: usize,
    /// Worst sample and its smallest ratio `d(p, y)/r` over balls with `r < δ`.
    pub worst: Option<(GPoint, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverReport {
    pub balls: usize,
    pub overlapping: Vec<(usize, usize)>,
    /// Balls not certified to stay clear of the set.
    pub touching_set: Vec<usize>,
    pub coverage: Vec<DeltaCoverage>,
    /// Smallest inflation constant that would make every tested δ pass.
    pub achieved_c: f64,
    pub samples: usize,
    pub disjoint: bool,
    pub avoids_set: bool,
    pub covered: bool,
    pub pass: bool,
}

fn verify_samples(cover: &WhitneyCover, set: &dyn SetOracle, cfg: &VerifyConfig) -> Vec<GPoint> {
    let dom = &cover.domain;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut pts: Vec<GPoint> = if dom.dim() == 1 {
        let len = dom.hi[0] - dom.lo[0];
        let steps = (len / cfg.resolution).round().max(1.0) as usize;
        (0..=steps).map(|i| GPoint(vec![dom.lo[0] + len * i as f64 / steps as f64])).collect()
    } else {
        (0..cfg.samples).map(|_| dom.sample(&mut rng)).collect()
    };
    pts.extend(set.sample_members(&mut rng, cfg.set_samples).into_iter().filter(|p| dom.contains(p)));
    pts
}

pub fn cover_verify(cover: &WhitneyCover, set: &dyn SetOracle, cfg: &VerifyConfig) -> Result<CoverReport> {
    let metric = &cover.metric;
    let spec = &cover.spec;
    metric.supports(spec)?;
    let index = BallIndex::build(cover)?;

    let overlapping = overlapping_pairs_with(cover, &index);

    let touching_set: Vec<usize> = cover
        .balls
        .par_iter()
        .enumerate()
        .filter_map(|(i, b)| match set.dist_lower(&b.center, metric) {
            Some(d) if d > b.radius => None,
            _ => Some(i),
        })
        .collect();

    let samples = verify_samples(cover, set, cfg);
    let levels = index.level_keys();
    let reach = 2.0 * cover.c.max(2.0);
    // Per sample: inside some ball, and per radius level the smallest ratio
    // d(p, y)/r among nearby balls of that level.
    let per_sample: Vec<(bool, Vec<f64>)> = samples
        .par_iter()
        .map(|p| {
            let mut near = Vec::new();
            let (lo, hi) = ball_bbox(metric, spec, p, 0.0).expect("checked metric");
            index.query(&lo, &hi, i32::MIN, &mut near);
            let inside = near.iter().any(|&j| {
                let b = &cover.balls[j];
                metric.dist_unchecked(spec, p, &b.center) <= b.radius
            });
            let mut ratios = vec![f64::INFINITY; levels.len()];
            if !inside {
                for (li, &lvl) in levels.iter().enumerate() {
                    let r = reach * (-(lvl as f64)).exp2();
                    let Ok((lo, hi)) = ball_bbox(metric, spec, p, r) else { continue };
                    index.query_level(&lo, &hi, lvl, &mut near);
                    for &j in &near {
                        let b = &cover.balls[j];
                        let q = metric.dist_unchecked(spec, p, &b.center) / b.radius;
                        ratios[li] = ratios[li].min(q);
                    }
                }
            }
            (inside, ratios)
        })
        .collect();

    let mut coverage = Vec::new();
    let mut achieved_c: f64 = 1.0;
    for &delta in &cfg.deltas {
        let mut uncovered = 0;
        let mut worst: Option<(GPoint, f64)> = None;
        for (p, (inside, ratios)) in samples.iter().zip(&per_sample) {
            if *inside {
                continue;
            }
            // Levels holding only radii below δ.
            let best = levels
                .iter()
                .zip(ratios)
                .filter(|(l, _)| (-(**l as f64)).exp2() <= delta)
                .map(|(_, r)| *r)
                .fold(f64::INFINITY, f64::min);
            achieved_c = achieved_c.max(best);
            if !(best < cover.c) {
                uncovered += 1;
            }
            if worst.as_ref().is_none_or(|(_, w)| best > *w) {
                worst = Some((p.clone(), best));
            }
        }
        coverage.push(DeltaCoverage { delta, uncovered, worst });
    }

    let disjoint = overlapping.is_empty();
    let avoids_set = touching_set.is_empty();
    let covered = coverage.iter().all(|c| c.uncovered == 0);
    Ok(CoverReport {
        balls: cover.balls.len(),
        overlapping,
        touching_set,
        coverage,
        achieved_c,
        samples: samples.len(),
        disjoint,
        avoids_set,
        covered,
        pass: disjoint && avoids_set && covered,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sets::{cantor_set, empty_set, origin_set};

    #[test]
    fn origin_on_the_line() {
        let e = origin_set(GroupSpec::euclidean(1));
        let dom = BBox::new(vec![-1.0], vec![1.0]);
        let cover = whitney_cover(&e, &dom, &CoverConfig::default()).unwrap();
        let rep = cover_verify(&cover, &e, &CoverConfig::default().verify).unwrap();
        assert!(rep.pass, "{rep:?}");
        // Balls accumulate at 0.
        let smallest_near_zero = cover
            .balls
            .iter()
            .filter(|b| b.center[0].abs() < 1e-3)
            .map(|b| b.radius)
            .fold(f64::INFINITY, f64::min);
        assert!(smallest_near_zero < 1e-4);
    }

    #[test]
    fn empty_set_gets_one_ball() {
        let e = empty_set(GroupSpec::euclidean(1));
        let dom = BBox::new(vec![-0.4], vec![0.4]);
        let cover = whitney_cover(&e, &dom, &CoverConfig::default()).unwrap();
        assert_eq!(cover.balls.len(), 1);
        assert!(cover.balls[0].radius >= 0.4);
    }

    #[test]
    fn injected_overlap_is_reported() {
        let e = origin_set(GroupSpec::euclidean(1));
        let dom = BBox::new(vec![-1.0], vec![1.0]);
        let mut cover = whitney_cover(&e, &dom, &CoverConfig::default()).unwrap();
        cover.balls.push(Ball { center: GPoint(vec![0.5]), radius: 0.1 });
        cover.balls.push(Ball { center: GPoint(vec![0.55]), radius: 0.1 });
        let rep = cover_verify(&cover, &e, &CoverConfig::default().verify).unwrap();
        assert!(!rep.disjoint);
        let last = cover.balls.len() - 1;
        assert!(rep.overlapping.contains(&(last - 1, last)));
    }

    #[test]
    fn tiny_delta_is_covered_inside_balls_only() {
        let e = origin_set(GroupSpec::euclidean(1));
        let dom = BBox::new(vec![-1.0], vec![1.0]);
        let cover = whitney_cover(&e, &dom, &CoverConfig::default()).unwrap();
        let cfg = VerifyConfig { deltas: vec![1e-12], resolution: 1e-3, ..Default::default() };
        let rep = cover_verify(&cover, &e, &cfg).unwrap();
        let inside = rep.samples - rep.coverage[0].uncovered;
        assert!(inside > rep.samples * 9 / 10);
    }

    #[test]
    fn cantor_cover() {
        let e = cantor_set(40);
        let dom = BBox::new(vec![0.0], vec![1.0]);
        let cover = whitney_cover(&e, &dom, &CoverConfig::default()).unwrap();
        let rep = cover_verify(&cover, &e, &CoverConfig::default().verify).unwrap();
        assert!(rep.pass, "C={} {:?}", rep.achieved_c, rep.coverage);
    }

    #[test]
    fn shell_cover_in_a_thin_box() {
        let e = crate::sets::ladder_shell(crate::cantor::LadderIndex::new(1, 0).unwrap(), 40);
        let dom = BBox::new(vec![0.49, -0.004, -0.004], vec![0.76, 0.004, 0.004]);
        let cfg = CoverConfig {
            near_set_levels: 1,
            verify: VerifyConfig { samples: 5_000, ..Default::default() },
            ..Default::default()
        };
        let cover = whitney_cover(&e, &dom, &cfg).unwrap();
        let rep = cover_verify(&cover, &e, &cfg.verify).unwrap();
        assert!(rep.pass, "C={} {:?}", rep.achieved_c, rep.coverage);
    }
}
