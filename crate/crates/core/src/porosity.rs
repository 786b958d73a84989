//! Porosity profiling over a geometric ladder of scales.
//!
//! At scale `r` the profile records the best hole fraction
//! `λ = ρ / d(c, a)` over candidate centers `c` with `d(c, a) ≤ r`, where
//! `B(c, ρ)` misses the set. Hole radii are certified through the oracle's
//! distance lower bound when it has one, and estimated by sampling otherwise.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::group::GPoint;
use crate::metric::Metric;
use crate::sets::SetOracle;

/// Hole fractions are kept strictly below one.
pub const LAMBDA_CAP: f64 = 1.0 - 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaleLadder {
    pub r0: f64,
    pub q: f64,
    pub count: usize,
}

impl Default for ScaleLadder {
    fn default() -> Self {
        ScaleLadder { r0: 0.5, q: 0.5, count: 20 }
    }
}

impl ScaleLadder {
    pub fn scales(&self) -> Vec<f64> {
        (0..self.count).map(|j| self.r0 * self.q.powi(j as i32)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    /// Sphere directions per scale (on top of the coordinate axes).
    pub directions: usize,
    /// Geometric distance steps across each annulus `[r/4, r]`.
    pub radial_steps: usize,
    pub seed: u64,
    /// Samples per candidate ball in sampling mode; also forces sampling
    /// mode when the oracle has a distance bound.
    pub sample_density: Option<usize>,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig { directions: 64, radial_steps: 16, seed: 1, sample_density: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CertMode {
    Certified,
    Sampling,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub center: GPoint,
    pub radius: f64,
    /// `d(center, base)`.
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PorosityProfile {
    pub set: String,
    pub metric: String,
    pub base: GPoint,
    pub scales: Vec<f64>,
    pub lambda_hat: Vec<f64>,
    pub witnesses: Vec<Option<Witness>>,
    pub search_effort: Vec<usize>,
    pub mode: CertMode,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", content = "lambda", rename_all = "kebab-case")]
pub enum Verdict {
    PorousEvidence(f64),
    NonporousEvidence,
    Inconclusive,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Verdict::PorousEvidence(l) => write!(f, "porous-evidence({l:.4})"),
            Verdict::NonporousEvidence => write!(f, "nonporous-evidence"),
            Verdict::Inconclusive => write!(f, "inconclusive"),
        }
    }
}

fn mix(seed: u64, a: u64, b: u64) -> u64 {
    let mut z = seed ^ a.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ b.wrapping_mul(0xD1B5_4A32_D192_ED03);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Search directions: coordinate axes both ways, then seeded sphere samples.
/// A larger `count` extends the same sequence.
pub fn search_directions(set: &dyn SetOracle, metric: &Metric, count: usize, seed: u64) -> Vec<GPoint> {
    let spec = set.spec();
    let n = spec.n();
    let mut out = Vec::with_capacity(2 * n + count);
    for i in 0..n {
        for s in [1.0, -1.0] {
            let mut e = GPoint::zeros(n);
            e[i] = s;
            out.push(e);
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(mix(seed, 0xd1ec, 0));
    let inner = metric.unwrap_snowflake().0;
    for _ in 0..count {
        out.push(inner.sphere_sample(spec, &mut rng));
    }
    out
}

struct Hole {
    lambda: f64,
    witness: Witness,
}

fn better(a: Option<(usize, Hole)>, b: Option<(usize, Hole)>) -> Option<(usize, Hole)> {
    match (a, b) {
        (None, x) | (x, None) => x,
        (Some(x), Some(y)) => {
            if y.1.lambda > x.1.lambda || (y.1.lambda == x.1.lambda && y.0 < x.0) {
                Some(y)
            } else {
                Some(x)
            }
        }
    }
}

/// Largest sampled hole around `c`: half the distance to the nearest sampled
/// point that might belong to the set.
fn sampled_radius(set: &dyn SetOracle, metric: &Metric, c: &[f64], s: f64, samples: usize, rng: &mut ChaCha8Rng) -> f64 {
    if set.member(c).maybe_in() {
        return 0.0;
    }
    let spec = set.spec();
    let inner = metric.unwrap_snowflake().0;
    let dim = spec.n() as f64;
    let mut nearest = s;
    for _ in 0..samples {
        let dir = inner.sphere_sample(spec, rng);
        let dist = s * rng.gen::<f64>().powf(1.0 / dim);
        let p = metric.ray_point(spec, c, &dir, dist);
        if set.member(&p).maybe_in() {
            nearest = nearest.min(metric.dist_unchecked(spec, c, &p));
        }
    }
    0.5 * nearest
}

pub fn porosity_profile(
    set: &dyn SetOracle,
    metric: &Metric,
    base: &[f64],
    ladder: &ScaleLadder,
    search: &SearchConfig,
) -> Result<PorosityProfile> {
    let spec = set.spec();
    spec.check(base)?;
    metric.supports(spec)?;
    if ladder.count == 0 {
        return invalid("scale ladder has no scales");
    }
    if !(ladder.r0 > 0.0 && ladder.q > 0.0 && ladder.q < 1.0) {
        return invalid("scale ladder needs r0 > 0 and 0 < q < 1");
    }
    if search.radial_steps == 0 {
        return invalid("radial_steps must be positive");
    }
    let bbox = set.bbox();
    if !bbox.contains(base) {
        return invalid(format!("base point {:?} lies outside the set's box", base));
    }
    let probe = set.dist_lower(base, metric);
    let mode = if search.sample_density.is_none() && probe.is_some() {
        CertMode::Certified
    } else {
        CertMode::Sampling
    };
    let density = search.sample_density.unwrap_or(256);
    let dirs = search_directions(set, metric, search.directions, search.seed);
    let (inner, eps) = metric.unwrap_snowflake();
    let scales = ladder.scales();

    let per_scale: Vec<(Option<(usize, Hole)>, usize)> = scales
        .par_iter()
        .enumerate()
        .map(|(j, &r)| {
            // Candidates are laid out in the innermost metric so a snowflake
            // run examines exactly the same centers.
            let r_in = if eps == 1.0 { r } else { r.powf(1.0 / eps) };
            let mut cands: Vec<GPoint> = Vec::new();
            let steps = search.radial_steps;
            for dir in &dirs {
                for i in 0..steps {
                    let f = if steps == 1 { 1.0 } else { i as f64 / (steps - 1) as f64 };
                    let s = r_in * 0.25f64.powf(1.0 - f);
                    cands.push(inner.ray_point(spec, base, dir, s));
                }
            }
            cands.extend(set.hole_centers(base, r_in, inner));
            let effort = cands.len();
            let best = cands
                .into_par_iter()
                .enumerate()
                .filter_map(|(idx, c)| {
                    if !bbox.contains(&c) {
                        return None;
                    }
                    let dist = metric.dist_unchecked(spec, base, &c);
                    if !(dist > 0.0 && dist <= r * (1.0 + 1e-12)) {
                        return None;
                    }
                    let rho = match mode {
                        CertMode::Certified => set.dist_lower(&c, metric)?,
                        CertMode::Sampling => {
                            let mut rng = ChaCha8Rng::seed_from_u64(mix(search.seed, j as u64, idx as u64));
                            sampled_radius(set, metric, &c, dist, density, &mut rng)
                        }
                    };
                    let lambda = (rho / dist).min(LAMBDA_CAP);
                    if !(lambda > 0.0) {
                        return None;
                    }
                    Some((idx, Hole { lambda, witness: Witness { center: c, radius: lambda * dist, distance: dist } }))
                })
                .map(Some)
                .reduce(|| None, better);
            (best, effort)
        })
        .collect();

    // λ̂(r) is the best over all centers within r: a running maximum from
    // the finest scale up.
    let count = scales.len();
    let mut lambda_hat = vec![0.0; count];
    let mut witnesses: Vec<Option<Witness>> = vec![None; count];
    let mut running: Option<(f64, Witness)> = None;
    let mut effort = vec![0; count];
    for j in (0..count).rev() {
        let (best, e) = &per_scale[j];
        effort[j] = *e;
        if let Some((_, hole)) = best {
            if running.as_ref().is_none_or(|(l, _)| hole.lambda > *l) {
                running = Some((hole.lambda, hole.witness.clone()));
            }
        }
        if let Some((l, w)) = &running {
            lambda_hat[j] = *l;
            witnesses[j] = Some(w.clone());
        }
    }

    Ok(PorosityProfile {
        set: set.name(),
        metric: metric.name(),
        base: GPoint(base.to_vec()),
        scales,
        lambda_hat,
        witnesses,
        search_effort: effort,
        mode,
    })
}

impl PorosityProfile {
    /// Smallest λ̂ over scales at or below `r_cut`, if any.
    pub fn min_below(&self, r_cut: f64) -> Option<f64> {
        self.scales
            .iter()
            .zip(&self.lambda_hat)
            .filter(|(r, _)| **r <= r_cut)
            .map(|(_, l)| *l)
            .reduce(f64::min)
    }

    /// Largest λ̂ over scales at or below `r_cut`, if any.
    pub fn max_below(&self, r_cut: f64) -> Option<f64> {
        self.scales
            .iter()
            .zip(&self.lambda_hat)
            .filter(|(r, _)| **r <= r_cut)
            .map(|(_, l)| *l)
            .reduce(f64::max)
    }
}

pub fn classify(profile: &PorosityProfile, lambda_min: f64, r_cut: f64) -> Verdict {
    let n = profile.lambda_hat.len();
    if n < 2 {
        return Verdict::Inconclusive;
    }
    if let Some(m) = profile.min_below(r_cut) {
        if m >= lambda_min {
            return Verdict::PorousEvidence(m);
        }
    }
    if n >= 5 {
        let tail = &profile.lambda_hat[n - 5..];
        let decreasing = tail.windows(2).all(|w| w[1] <= w[0]);
        if decreasing && tail[4] < lambda_min {
            return Verdict::NonporousEvidence;
        }
    }
    Verdict::Inconclusive
}

/// Number of sampled points inside recorded witness balls that might belong
/// to the set.
pub fn witness_violations(
    profile: &PorosityProfile,
    set: &dyn SetOracle,
    metric: &Metric,
    samples_per_ball: usize,
    seed: u64,
) -> usize {
    let spec = set.spec();
    let inner = metric.unwrap_snowflake().0;
    let dim = spec.n() as f64;
    profile
        .witnesses
        .par_iter()
        .enumerate()
        .map(|(j, w)| {
            let Some(w) = w else { return 0 };
            let mut rng = ChaCha8Rng::seed_from_u64(mix(seed, 0xbad, j as u64));
            let mut hits = 0;
            for i in 0..samples_per_ball {
                // Include the center and the boundary shell.
                let frac = match i {
                    0 => 0.0,
                    1 => 1.0 - 1e-9,
                    _ => rng.gen::<f64>().powf(1.0 / dim),
                };
                let dir = inner.sphere_sample(spec, &mut rng);
                let p = metric.ray_point(spec, &w.center, &dir, w.radius * frac);
                if set.member(&p).maybe_in() {
                    hits += 1;
                }
            }
            hits
        })
        .sum()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnowflakeRow {
    pub scale: f64,
    pub lambda_base: f64,
    pub lambda_snow: f64,
    pub rel_err: f64,
    pub same_witness: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnowflakeReport {
    pub eps: f64,
    pub rows: Vec<SnowflakeRow>,
    pub pass: bool,
}

/// Compares `λ̂_{d^ε}(r^ε)` with `λ̂_d(r)^ε` on matching ladders.
pub fn snowflake_transfer_check(
    set: &dyn SetOracle,
    metric: &Metric,
    base: &[f64],
    eps: f64,
    ladder: &ScaleLadder,
    search: &SearchConfig,
) -> Result<SnowflakeReport> {
    let snow = Metric::snowflake(metric.clone(), eps)?;
    let p = porosity_profile(set, metric, base, ladder, search)?;
    let snow_ladder = ScaleLadder { r0: ladder.r0.powf(eps), q: ladder.q.powf(eps), count: ladder.count };
    let s = porosity_profile(set, &snow, base, &snow_ladder, search)?;
    let rows: Vec<SnowflakeRow> = p
        .scales
        .iter()
        .enumerate()
        .map(|(j, &r)| {
            let expect = p.lambda_hat[j].powf(eps);
            let got = s.lambda_hat[j];
            let rel_err = if expect == 0.0 && got == 0.0 {
                0.0
            } else {
                (got - expect).abs() / expect.max(got)
            };
            let same_witness = match (&p.witnesses[j], &s.witnesses[j]) {
                (Some(a), Some(b)) => a.center == b.center,
                (None, None) => true,
                _ => false,
            };
            SnowflakeRow { scale: r, lambda_base: p.lambda_hat[j], lambda_snow: got, rel_err, same_witness }
        })
        .collect();
    let pass = rows.iter().all(|r| r.rel_err <= 0.15);
    Ok(SnowflakeReport { eps, rows, pass })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::GroupSpec;
    use crate::sets::{cantor_set, pe_set, whole_space};

    #[test]
    fn cantor_at_zero_is_one_third() {
        let c = cantor_set(40);
        let p = porosity_profile(&c, &Metric::Euclidean, &[0.0], &ScaleLadder::default(), &SearchConfig::default())
            .unwrap();
        for (r, l) in p.scales.iter().zip(&p.lambda_hat) {
            if *r <= 1.0 / 27.0 {
                assert!((l - 1.0 / 3.0).abs() <= 0.05, "r={r} λ={l}");
            }
        }
        assert!(matches!(classify(&p, 0.25, 1e-3), Verdict::PorousEvidence(_)));
        assert_eq!(witness_violations(&p, &c, &Metric::Euclidean, 200, 5), 0);
    }

    #[test]
    fn whole_line_has_no_holes() {
        let e = whole_space(GroupSpec::euclidean(1));
        let p = porosity_profile(&e, &Metric::Euclidean, &[0.3], &ScaleLadder::default(), &SearchConfig::default())
            .unwrap();
        assert!(p.lambda_hat.iter().all(|l| *l == 0.0));
    }

    #[test]
    fn pe_contrast_at_origin() {
        let pe = pe_set(40);
        let o = [0.0; 3];
        let eu = porosity_profile(&pe, &Metric::Euclidean, &o, &ScaleLadder::default(), &SearchConfig::default())
            .unwrap();
        assert!(matches!(classify(&eu, 0.25, 1e-3), Verdict::PorousEvidence(_)));
        let ko = porosity_profile(&pe, &Metric::Koranyi, &o, &ScaleLadder::default(), &SearchConfig::default())
            .unwrap();
        assert!(ko.max_below(1e-3).unwrap() <= 0.05, "{:?}", ko.lambda_hat);
        assert_eq!(classify(&ko, 0.25, 1e-3), Verdict::NonporousEvidence);
    }

    #[test]
    fn classify_edge_cases() {
        let p = PorosityProfile {
            set: "x".into(),
            metric: "euclidean".into(),
            base: GPoint(vec![0.0]),
            scales: vec![0.5],
            lambda_hat: vec![0.3],
            witnesses: vec![None],
            search_effort: vec![0],
            mode: CertMode::Certified,
        };
        assert_eq!(classify(&p, 0.25, 1.0), Verdict::Inconclusive);
        let c = cantor_set(40);
        let ladder = ScaleLadder { count: 0, ..Default::default() };
        assert!(porosity_profile(&c, &Metric::Euclidean, &[0.0], &ladder, &SearchConfig::default()).is_err());
    }

    #[test]
    fn snowflake_transfer_on_cantor() {
        let c = cantor_set(40);
        let ladder = ScaleLadder { count: 12, ..Default::default() };
        let rep = snowflake_transfer_check(&c, &Metric::Euclidean, &[0.0], 0.5, &ladder, &SearchConfig::default())
            .unwrap();
        assert!(rep.pass, "{:?}", rep.rows);
        let last = rep.rows.last().unwrap();
        assert!((last.lambda_snow - (1.0f64 / 3.0).sqrt()).abs() < 0.05);
        assert!(rep.rows.iter().all(|r| r.same_witness));
    }
}
