//! Distances on a Carnot group.

use std::f64::consts::PI;

use rand::Rng;

use crate::cc::{cc_estimate, CcSettings};
use crate::error::{invalid, Error, Result};
use crate::group::{norm2, GPoint, GroupSpec};

/// Distances below this are reported as exactly zero.
pub const ZERO_DIST: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq)]
pub enum Metric {
    Euclidean,
    /// Koranyi gauge distance, defined for the first Heisenberg group only.
    Koranyi,
    /// Optimization-based Carnot–Carathéodory estimate.
    Cc(CcSettings),
    /// `Σ |(a⁻¹b)_i|^{1/w_i}`, a homogeneous proxy for CC on any group.
    QuasiNorm,
    Snowflake { base: Box<Metric>, eps: f64 },
}

impl Metric {
    pub fn snowflake(base: Metric, eps: f64) -> Result<Metric> {
        if !(eps > 0.0 && eps < 1.0) {
            return invalid(format!("snowflake exponent must lie in (0,1), got {eps}"));
        }
        Ok(Metric::Snowflake { base: Box::new(base), eps })
    }

    /// Parses `euclidean`, `koranyi`, `cc`, `quasi`, or `snowflake:<eps>:<base>`.
    pub fn parse(name: &str) -> Result<Metric> {
        match name {
            "euclidean" => Ok(Metric::Euclidean),
            "koranyi" => Ok(Metric::Koranyi),
            "cc" => Ok(Metric::Cc(CcSettings::default())),
            "quasi" | "quasi-norm" => Ok(Metric::QuasiNorm),
            other => {
                if let Some(rest) = other.strip_prefix("snowflake:") {
                    let (eps, base) = rest.split_once(':').unwrap_or((rest, "euclidean"));
                    let eps: f64 = eps
                        .parse()
                        .map_err(|_| Error::InvalidArgument(format!("bad snowflake exponent '{eps}'")))?;
                    return Metric::snowflake(Metric::parse(base)?, eps);
                }
                invalid(format!(
                    "unknown metric '{other}' (known: euclidean, koranyi, cc, quasi, snowflake:<eps>:<base>)"
                ))
            }
        }
    }

    pub fn name(&self) -> String {
        match self {
            Metric::Euclidean => "euclidean".into(),
            Metric::Koranyi => "koranyi".into(),
            Metric::Cc(_) => "cc".into(),
            Metric::QuasiNorm => "quasi".into(),
            Metric::Snowflake { base, eps } => format!("snowflake:{eps}:{}", base.name()),
        }
    }

    /// The innermost non-snowflake metric and the accumulated exponent.
    pub fn unwrap_snowflake(&self) -> (&Metric, f64) {
        match self {
            Metric::Snowflake { base, eps } => {
                let (inner, e) = base.unwrap_snowflake();
                (inner, e * eps)
            }
            other => (other, 1.0),
        }
    }

    /// Left-invariant and homogeneous under dilations.
    pub fn is_group_metric(&self) -> bool {
        matches!(self.unwrap_snowflake().0, Metric::Koranyi | Metric::Cc(_) | Metric::QuasiNorm)
    }

    pub fn supports(&self, spec: &GroupSpec) -> Result<()> {
        match self.unwrap_snowflake().0 {
            Metric::Koranyi if !spec.is_heisenberg() => Err(Error::UnsupportedMetric(
                "the Koranyi distance is only defined on the first Heisenberg group".into(),
            )),
            _ => Ok(()),
        }
    }

    pub fn dist(&self, spec: &GroupSpec, a: &[f64], b: &[f64]) -> Result<f64> {
        spec.check(a)?;
        spec.check(b)?;
        self.supports(spec)?;
        Ok(self.dist_unchecked(spec, a, b))
    }

    pub fn norm(&self, spec: &GroupSpec, p: &[f64]) -> Result<f64> {
        spec.check(p)?;
        self.supports(spec)?;
        Ok(self.norm_unchecked(spec, p))
    }

    /// Distance without validation; callers must have checked `supports`.
    pub fn dist_unchecked(&self, spec: &GroupSpec, a: &[f64], b: &[f64]) -> f64 {
        let d = match self {
            Metric::Euclidean => a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt(),
            Metric::Koranyi => koranyi_norm(&spec.between(a, b)),
            Metric::QuasiNorm => quasi_norm(spec, &spec.between(a, b)),
            Metric::Cc(cfg) => cc_estimate(spec, a, b, cfg).map(|e| e.value).unwrap_or(f64::NAN),
            Metric::Snowflake { base, eps } => base.dist_unchecked(spec, a, b).powf(*eps),
        };
        if d < ZERO_DIST {
            0.0
        } else {
            d
        }
    }

    pub fn norm_unchecked(&self, spec: &GroupSpec, p: &[f64]) -> f64 {
        let zero = vec![0.0; p.len()];
        self.dist_unchecked(spec, &zero, p)
    }

    /// A point at distance `s` from `base`, moving along `dir`.
    ///
    /// Euclidean moves along the straight line; group metrics move to
    /// `base · δ_λ(dir)` with λ chosen from homogeneity.
    pub fn ray_point(&self, spec: &GroupSpec, base: &[f64], dir: &[f64], s: f64) -> GPoint {
        let (inner, eps) = self.unwrap_snowflake();
        let s = if eps == 1.0 { s } else { s.powf(1.0 / eps) };
        match inner {
            Metric::Euclidean => {
                let n = norm2(dir);
                GPoint(base.iter().zip(dir).map(|(b, d)| b + s * d / n).collect())
            }
            _ => {
                let n = inner.norm_unchecked(spec, dir);
                spec.compose(base, &spec.dilation(s / n, dir))
            }
        }
    }

    /// Directions of unit norm for this metric (unit in the innermost
    /// metric, hence also unit for any snowflake of it).
    pub fn sphere_sample<R: Rng + ?Sized>(&self, spec: &GroupSpec, rng: &mut R) -> GPoint {
        let inner = self.unwrap_snowflake().0;
        match inner {
            Metric::Koranyi => {
                let phi = rng.gen_range(0.0..2.0 * PI);
                let psi = rng.gen_range(-PI / 2.0..PI / 2.0);
                koranyi_sphere_point(phi, psi)
            }
            _ => loop {
                let v: Vec<f64> = (0..spec.n()).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let n = match inner {
                    Metric::Euclidean => norm2(&v),
                    _ => inner.norm_unchecked(spec, &v),
                };
                if n > 1e-3 {
                    break match inner {
                        Metric::Euclidean => GPoint(v.iter().map(|x| x / n).collect()),
                        _ => spec.dilation(1.0 / n, &v),
                    };
                }
            },
        }
    }
}

/// `((x²+y²)² + t²)^{1/4}` on H¹.
pub fn koranyi_norm(p: &[f64]) -> f64 {
    let r2 = p[0] * p[0] + p[1] * p[1];
    (r2 * r2 + p[2] * p[2]).sqrt().sqrt()
}

/// `max(|(x,y)|, √|t|)`, never larger than the Koranyi norm.
pub fn koranyi_lower_bound(p: &[f64]) -> f64 {
    (p[0] * p[0] + p[1] * p[1]).sqrt().max(p[2].abs().sqrt())
}

pub fn quasi_norm(spec: &GroupSpec, p: &[f64]) -> f64 {
    p.iter()
        .zip(spec.weights())
        .map(|(v, &w)| if w == 1 { v.abs() } else { v.abs().powf(1.0 / w as f64) })
        .sum()
}

/// Point of the Koranyi unit sphere: `|z|² = cos ψ`, `t = sin ψ`.
pub fn koranyi_sphere_point(phi: f64, psi: f64) -> GPoint {
    let r = psi.cos().max(0.0).sqrt();
    GPoint(vec![r * phi.cos(), r * phi.sin(), psi.sin()])
}
