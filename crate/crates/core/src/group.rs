//! Carnot groups in exponential coordinates of the first kind.
//!
//! A group is `ℝⁿ` with the product `(p·q)_i = p_i + q_i + R_i(p, q)`, where
//! each `R_i` is a polynomial in the coordinates of `p` and `q` with index
//! strictly below `i`. The first `m` coordinates span the horizontal layer.

use std::ops::{Deref, DerefMut};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// A point of the group, stored as its exponential coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct GPoint(pub Vec<f64>);

impl GPoint {
    pub fn new(coords: Vec<f64>) -> Self {
        GPoint(coords)
    }

    pub fn zeros(n: usize) -> Self {
        GPoint(vec![0.0; n])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for GPoint {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl DerefMut for GPoint {
    fn deref_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }
}

impl From<Vec<f64>> for GPoint {
    fn from(v: Vec<f64>) -> Self {
        GPoint(v)
    }
}

impl<const N: usize> From<[f64; N]> for GPoint {
    fn from(v: [f64; N]) -> Self {
        GPoint(v.to_vec())
    }
}

/// `coef · Π p[idx] · Π q[idx]`, indices zero-based (repeats mean powers).
#[derive(Debug, Clone, PartialEq)]
pub struct Monomial {
    pub coef: f64,
    pub p: Vec<usize>,
    pub q: Vec<usize>,
}

impl Monomial {
    fn eval(&self, p: &[f64], q: &[f64]) -> f64 {
        let mut v = self.coef;
        for &i in &self.p {
            v *= p[i];
        }
        for &i in &self.q {
            v *= q[i];
        }
        v
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct MonomialJson {
    coef: f64,
    #[serde(default)]
    p: Vec<usize>,
    #[serde(default)]
    q: Vec<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct LawEntryJson {
    i: usize,
    monomials: Vec<MonomialJson>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct GroupSpecJson {
    n: usize,
    m: usize,
    weights: Vec<u32>,
    #[serde(default)]
    law: Vec<LawEntryJson>,
}

/// A Carnot group given by its dimension data and group-law polynomial table.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupSpec {
    n: usize,
    m: usize,
    weights: Vec<u32>,
    /// `law[i]` holds the monomials of `R_i` (zero-based coordinate index).
    law: Vec<Vec<Monomial>>,
}

impl GroupSpec {
    /// Builds and validates a group. Validation covers the structural rules
    /// on the law table, exact homogeneity of every monomial, and a seeded
    /// random check of associativity and inverses.
    pub fn new(n: usize, m: usize, weights: Vec<u32>, law: Vec<Vec<Monomial>>) -> Result<Self> {
        let spec = GroupSpec { n, m, weights, law };
        spec.validate_structure()?;
        spec.validate_numerically()?;
        Ok(spec)
    }

    /// The first Heisenberg group with `t + t' − 2(xy' − yx')`.
    pub fn heisenberg() -> Self {
        let r3 = vec![
            Monomial { coef: -2.0, p: vec![0], q: vec![1] },
            Monomial { coef: 2.0, p: vec![1], q: vec![0] },
        ];
        GroupSpec {
            n: 3,
            m: 2,
            weights: vec![1, 1, 2],
            law: vec![vec![], vec![], r3],
        }
    }

    /// Abelian `ℝⁿ`, a step-one Carnot group.
    pub fn euclidean(n: usize) -> Self {
        GroupSpec {
            n,
            m: n,
            weights: vec![1; n],
            law: vec![Vec::new(); n],
        }
    }

    /// Parses the JSON table format; indices in the document are one-based.
    pub fn from_json(text: &str) -> Result<Self> {
        let doc: GroupSpecJson = serde_json::from_str(text)?;
        let mut law = vec![Vec::new(); doc.n];
        for entry in doc.law {
            if entry.i == 0 || entry.i > doc.n {
                return Err(Error::InvalidSpec(format!("law index {} out of range", entry.i)));
            }
            for mono in entry.monomials {
                let shift = |v: Vec<usize>| -> Result<Vec<usize>> {
                    v.into_iter()
                        .map(|k| {
                            if k == 0 || k > doc.n {
                                Err(Error::InvalidSpec(format!("monomial index {k} out of range")))
                            } else {
                                Ok(k - 1)
                            }
                        })
                        .collect()
                };
                law[entry.i - 1].push(Monomial {
                    coef: mono.coef,
                    p: shift(mono.p)?,
                    q: shift(mono.q)?,
                });
            }
        }
        GroupSpec::new(doc.n, doc.m, doc.weights, law)
    }

    pub fn to_json(&self) -> String {
        let law = self
            .law
            .iter()
            .enumerate()
            .filter(|(_, monos)| !monos.is_empty())
            .map(|(i, monos)| LawEntryJson {
                i: i + 1,
                monomials: monos
                    .iter()
                    .map(|mo| MonomialJson {
                        coef: mo.coef,
                        p: mo.p.iter().map(|k| k + 1).collect(),
                        q: mo.q.iter().map(|k| k + 1).collect(),
                    })
                    .collect(),
            })
            .collect();
        let doc = GroupSpecJson {
            n: self.n,
            m: self.m,
            weights: self.weights.clone(),
            law,
        };
        serde_json::to_string(&doc).expect("group spec serializes")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn weights(&self) -> &[u32] {
        &self.weights
    }

    pub fn step(&self) -> u32 {
        self.weights.iter().copied().max().unwrap_or(1)
    }

    pub fn law(&self) -> &[Vec<Monomial>] {
        &self.law
    }

    pub fn is_abelian(&self) -> bool {
        self.law.iter().all(|r| r.is_empty())
    }

    pub fn is_heisenberg(&self) -> bool {
        *self == GroupSpec::heisenberg()
    }

    fn validate_structure(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidSpec(msg));
        if self.n == 0 || self.m == 0 || self.m > self.n {
            return bad(format!("need 1 ≤ m ≤ n, got n={} m={}", self.n, self.m));
        }
        if self.weights.len() != self.n || self.law.len() != self.n {
            return bad("weights and law must have n entries".into());
        }
        for (i, &w) in self.weights.iter().enumerate() {
            if (i < self.m) != (w == 1) {
                return bad(format!("weight of coordinate {} must be 1 iff it is horizontal", i + 1));
            }
            if i > 0 && w < self.weights[i - 1] {
                return bad("weights must be nondecreasing".into());
            }
        }
        for (i, monos) in self.law.iter().enumerate() {
            if i < self.m && !monos.is_empty() {
                return bad(format!("R_{} must vanish on the horizontal layer", i + 1));
            }
            for mono in monos {
                if mono.p.iter().chain(&mono.q).any(|&k| k >= i) {
                    return bad(format!("R_{} may only use coordinates below {}", i + 1, i + 1));
                }
                if mono.p.is_empty() || mono.q.is_empty() {
                    return bad(format!("R_{} has a monomial independent of p or q", i + 1));
                }
                let deg: u32 = mono.p.iter().chain(&mono.q).map(|&k| self.weights[k]).sum();
                if deg != self.weights[i] {
                    return bad(format!(
                        "R_{} monomial has weighted degree {deg}, expected {}",
                        i + 1,
                        self.weights[i]
                    ));
                }
                if !mono.coef.is_finite() {
                    return bad("non-finite coefficient".into());
                }
            }
        }
        Ok(())
    }

    fn validate_numerically(&self) -> Result<()> {
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_9a0f);
        for _ in 0..256 {
            let p = self.random_point(&mut rng, 2.0);
            let q = self.random_point(&mut rng, 2.0);
            let r = self.random_point(&mut rng, 2.0);
            let lhs = self.compose(&self.compose(&p, &q), &r);
            let rhs = self.compose(&p, &self.compose(&q, &r));
            let scale = 1.0 + lhs.iter().fold(0.0f64, |a, v| a.max(v.abs()));
            if max_abs_diff(&lhs, &rhs) > 1e-9 * scale {
                return Err(Error::InvalidSpec("group law is not associative".into()));
            }
            let e = self.compose(&p, &self.inverse(&p));
            if e.iter().any(|v| v.abs() > 1e-9 * scale) {
                return Err(Error::InvalidSpec("coordinate negation is not the inverse".into()));
            }
        }
        Ok(())
    }

    pub fn random_point<R: Rng + ?Sized>(&self, rng: &mut R, half_width: f64) -> GPoint {
        GPoint((0..self.n).map(|_| rng.gen_range(-half_width..=half_width)).collect())
    }

    pub(crate) fn check(&self, p: &[f64]) -> Result<()> {
        if p.len() != self.n {
            return invalid(format!("point has dimension {}, group has {}", p.len(), self.n));
        }
        Ok(())
    }

    /// Group product without dimension checks.
    pub fn compose(&self, p: &[f64], q: &[f64]) -> GPoint {
        debug_assert_eq!(p.len(), self.n);
        debug_assert_eq!(q.len(), self.n);
        let mut out = Vec::with_capacity(self.n);
        for i in 0..self.n {
            let r: f64 = self.law[i].iter().map(|mo| mo.eval(p, q)).sum();
            out.push(p[i] + q[i] + r);
        }
        GPoint(out)
    }

    pub fn inverse(&self, p: &[f64]) -> GPoint {
        GPoint(p.iter().map(|v| -v).collect())
    }

    pub fn mul(&self, p: &[f64], q: &[f64]) -> Result<GPoint> {
        self.check(p)?;
        self.check(q)?;
        Ok(self.compose(p, q))
    }

    pub fn inv(&self, p: &[f64]) -> Result<GPoint> {
        self.check(p)?;
        Ok(self.inverse(p))
    }

    /// `a⁻¹b`, the left-invariant displacement from `a` to `b`.
    pub fn between(&self, a: &[f64], b: &[f64]) -> GPoint {
        self.compose(&self.inverse(a), b)
    }

    pub fn dilation(&self, lambda: f64, p: &[f64]) -> GPoint {
        GPoint(
            p.iter()
                .zip(&self.weights)
                .map(|(v, &w)| v * lambda.powi(w as i32))
                .collect(),
        )
    }

    pub fn dilate(&self, lambda: f64, p: &[f64]) -> Result<GPoint> {
        self.check(p)?;
        if !(lambda > 0.0) || !lambda.is_finite() {
            return invalid(format!("dilation factor must be positive, got {lambda}"));
        }
        Ok(self.dilation(lambda, p))
    }

    pub fn project_horizontal(&self, p: &[f64]) -> Vec<f64> {
        p[..self.m].to_vec()
    }

    /// The exponential of `t·X_i` for the horizontal basis vector `X_i`
    /// (index zero-based), as a group element.
    pub fn horizontal_element(&self, i: usize, t: f64) -> GPoint {
        let mut e = GPoint::zeros(self.n);
        e[i] = t;
        e
    }

    /// `x · exp(t X_i)`; `i` is zero-based.
    pub fn exp_horizontal(&self, x: &[f64], i: usize, t: f64) -> Result<GPoint> {
        self.check(x)?;
        if i >= self.m {
            return invalid(format!("horizontal index {i} out of range (m = {})", self.m));
        }
        Ok(self.compose(x, &self.horizontal_element(i, t)))
    }

    /// Solves for `τ ∈ ℝⁿ⁻¹` with `(t, τ)⁻¹ · target = (x₁ − t, 0, …, 0)`.
    ///
    /// `τ_i = y_i + R_i((t, τ)⁻¹, target)`, built coordinate by coordinate;
    /// well defined because `R_i` only reads indices below `i`.
    pub fn first_coordinate_tau(&self, t: f64, target: &[f64]) -> Result<Vec<f64>> {
        self.check(target)?;
        if self.m < 1 || self.weights[0] != 1 {
            return invalid("first coordinate must be horizontal");
        }
        let mut base = GPoint::zeros(self.n);
        base[0] = t;
        for i in 1..self.n {
            let neg = self.inverse(&base);
            let r: f64 = self.law[i].iter().map(|mo| mo.eval(&neg, target)).sum();
            base[i] = target[i] + r;
        }
        // Check the claimed factorization target = (t, τ) · (x₁ − t, 0, …, 0)
        // through the forward product, which does not share the construction.
        let reduced = self.between(&base, target);
        let mut step = GPoint::zeros(self.n);
        step[0] = target[0] - t;
        let rebuilt = self.compose(&base, &step);
        let scale = 1.0 + target.iter().fold(t.abs(), |a, v| a.max(v.abs()));
        let tol = 1e-12 * scale * scale;
        if reduced[1..].iter().any(|v| v.abs() > tol) || max_abs_diff(&rebuilt, target) > tol {
            return Err(Error::Internal(format!(
                "reduced point {:?} does not have a zero tail; the law table is inconsistent",
                reduced.0
            )));
        }
        Ok(base[1..].to_vec())
    }
}

pub(crate) fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0f64, |acc, (x, y)| acc.max((x - y).abs()))
}

pub(crate) fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// `h ↦ ⟨v, p(h)⟩`, the general form of a group-linear map to `ℝ`.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupLinearMap {
    pub v: Vec<f64>,
}

impl GroupLinearMap {
    pub fn new(v: Vec<f64>) -> Self {
        GroupLinearMap { v }
    }

    pub fn eval(&self, h: &[f64]) -> f64 {
        self.v.iter().zip(h).map(|(a, b)| a * b).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn h1() -> GroupSpec {
        GroupSpec::heisenberg()
    }

    #[test]
    fn heisenberg_basics() {
        let g = h1();
        assert_eq!(g.weights(), &[1, 1, 2]);
        assert_eq!(g.mul(&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0]).unwrap().0, vec![1.0, 1.0, -2.0]);
        assert_eq!(g.mul(&[1.0, 2.0, 3.0], &[0.0, 0.0, 0.0]).unwrap().0, vec![1.0, 2.0, 3.0]);
        assert_eq!(g.mul(&[1.0, 2.0, 3.0], &[-1.0, -2.0, -3.0]).unwrap().0, vec![0.0, 0.0, 0.0]);
        assert!(GroupSpec::new(3, 2, vec![1, 1, 2], g.law().to_vec()).is_ok());
    }

    #[test]
    fn associativity_example() {
        let g = h1();
        let a = [1.0, 0.0, 0.0];
        let b = [0.0, 1.0, 0.0];
        let c = [1.0, 1.0, 0.0];
        let lhs = g.compose(&g.compose(&a, &b), &c);
        let rhs = g.compose(&a, &g.compose(&b, &c));
        assert_eq!(lhs.0, vec![2.0, 2.0, -2.0]);
        assert_eq!(rhs.0, lhs.0);
    }

    #[test]
    fn dilation_examples() {
        let g = h1();
        assert_eq!(g.dilate(2.0, &[1.0, 1.0, 1.0]).unwrap().0, vec![2.0, 2.0, 4.0]);
        assert_eq!(g.dilate(1.0, &[0.3, -0.2, 5.0]).unwrap().0, vec![0.3, -0.2, 5.0]);
        let prod = g.compose(&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0]);
        let lhs = g.dilation(2.0, &prod);
        let rhs = g.compose(&[2.0, 0.0, 0.0], &[0.0, 2.0, 0.0]);
        assert_eq!(lhs.0, vec![2.0, 2.0, -8.0]);
        assert_eq!(rhs.0, vec![2.0, 2.0, -8.0]);
        assert!(g.dilate(0.0, &[1.0, 1.0, 1.0]).is_err());
        assert!(g.dilate(-1.0, &[1.0, 1.0, 1.0]).is_err());
    }

    #[test]
    fn inverse_and_projection() {
        let g = h1();
        assert_eq!(g.inv(&[1.0, 2.0, 3.0]).unwrap().0, vec![-1.0, -2.0, -3.0]);
        assert_eq!(g.project_horizontal(&[3.0, 4.0, 5.0]), vec![3.0, 4.0]);
        assert!(g.inv(&[1.0, 2.0]).is_err());
        assert!(g.mul(&[1.0, 2.0], &[1.0, 2.0, 3.0]).is_err());
    }

    #[test]
    fn horizontal_exponential() {
        let g = h1();
        assert_eq!(g.exp_horizontal(&[0.0, 0.0, 0.0], 0, 2.0).unwrap().0, vec![2.0, 0.0, 0.0]);
        // x + s, y, t + 2ys
        let p = g.exp_horizontal(&[0.5, 1.5, -0.25], 0, 0.3).unwrap();
        assert!((p[0] - 0.8).abs() < 1e-15);
        assert_eq!(p[1], 1.5);
        assert!((p[2] - (-0.25 + 2.0 * 1.5 * 0.3)).abs() < 1e-15);
        assert_eq!(g.exp_horizontal(&[0.1, 0.2, 0.3], 1, 0.0).unwrap().0, vec![0.1, 0.2, 0.3]);
        assert!(g.exp_horizontal(&[0.0, 0.0, 0.0], 2, 1.0).is_err());
    }

    #[test]
    fn first_coordinate_tau_examples() {
        let g = h1();
        let tau = g.first_coordinate_tau(0.0, &[1.0, 1.0, 0.0]).unwrap();
        assert_eq!(tau, vec![1.0, -2.0]);
        let reduced = g.between(&[0.0, 1.0, -2.0], &[1.0, 1.0, 0.0]);
        assert_eq!(reduced.0, vec![1.0, 0.0, 0.0]);

        let target = [0.7, -0.3, 1.1];
        assert_eq!(g.first_coordinate_tau(0.7, &target).unwrap(), vec![-0.3, 1.1]);

        let tau = g.first_coordinate_tau(2.0, &[0.0, 0.0, 0.0]).unwrap();
        assert_eq!(tau, vec![0.0, 0.0]);
        assert_eq!(g.between(&[2.0, 0.0, 0.0], &[0.0, 0.0, 0.0]).0, vec![-2.0, 0.0, 0.0]);
    }

    #[test]
    fn broken_law_fails_reduction_check() {
        // Bypasses validation: the mutated law is not a group law.
        let mut g = h1();
        g.law[2][0].coef = -3.0;
        assert!(matches!(g.first_coordinate_tau(0.5, &[1.0, 2.0, 0.0]), Err(Error::Internal(_))));
    }

    #[test]
    fn structural_validation() {
        let law = h1().law().to_vec();
        assert!(GroupSpec::new(3, 2, vec![1, 1, 1], law.clone()).is_err());
        assert!(GroupSpec::new(3, 3, vec![1, 1, 2], law.clone()).is_err());
        let mut bad = law.clone();
        bad[0].push(Monomial { coef: 1.0, p: vec![1], q: vec![1] });
        assert!(GroupSpec::new(3, 2, vec![1, 1, 2], bad).is_err());
        let mut nonassoc = law;
        nonassoc[2].push(Monomial { coef: 1.0, p: vec![0], q: vec![0] });
        assert!(GroupSpec::new(3, 2, vec![1, 1, 2], nonassoc).is_err());
    }

    #[test]
    fn json_round_trip() {
        let text = r#"{"n":3,"m":2,"weights":[1,1,2],"law":[{"i":3,"monomials":[
            {"coef":-2,"p":[1],"q":[2]},{"coef":2,"p":[2],"q":[1]}]}]}"#;
        let g = GroupSpec::from_json(text).unwrap();
        assert!(g.is_heisenberg());
        let again = GroupSpec::from_json(&g.to_json()).unwrap();
        assert_eq!(again, g);
        assert!(GroupSpec::from_json(r#"{"n":2,"m":1,"weights":[1,2],"law":[{"i":2,"monomials":[{"coef":1,"p":[3],"q":[1]}]}]}"#).is_err());
    }

    #[test]
    fn group_linear_map() {
        let l = GroupLinearMap::new(vec![0.5, -2.0]);
        assert_eq!(l.eval(&[2.0, 1.0, 7.0]), -1.0);
    }
}
