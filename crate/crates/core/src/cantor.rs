//! Middle-third Cantor set arithmetic and the ladder of rescaled copies
//! `A_{n,k} = (2^{-n} + k·4^{-n}) + 4^{-n}·C`.
//!
//! Every finite double is a dyadic rational, so its ternary digits can be
//! generated exactly; decisions here are exact except where the digit budget
//! runs out.

use num_bigint::BigUint;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

pub const DEFAULT_DEPTH: u32 = 40;

/// Largest ladder level handled explicitly; below `2^-MAX_LEVEL` the ladder
/// is treated as touching every point.
pub const MAX_LEVEL: u32 = 60;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Membership {
    In,
    Out,
    Undecided,
}

impl Membership {
    /// Conservative reading used by hole searches: only certified exclusion
    /// counts as outside.
    pub fn maybe_in(self) -> bool {
        self != Membership::Out
    }
}

/// Exact remainder state of a number in `[0,1)` as `num / 2^shift`.
#[derive(Clone, PartialEq)]
enum Digits {
    Small { num: u128, shift: u32 },
    Big { num: BigUint, shift: u32 },
}

impl Digits {
    fn new(x: f64) -> Digits {
        debug_assert!(x > 0.0 && x < 1.0);
        let bits = x.to_bits();
        let exp = ((bits >> 52) & 0x7ff) as i64;
        let (mut mant, mut e) = if exp == 0 {
            (bits & ((1u64 << 52) - 1), -1074i64)
        } else {
            ((bits & ((1u64 << 52) - 1)) | (1u64 << 52), exp - 1075)
        };
        while mant & 1 == 0 {
            mant >>= 1;
            e += 1;
        }
        let shift = (-e) as u32;
        if shift <= 124 {
            Digits::Small { num: mant as u128, shift }
        } else {
            Digits::Big { num: BigUint::from(mant), shift }
        }
    }

    /// Emits the next ternary digit.
    fn next(&mut self) -> u8 {
        match self {
            Digits::Small { num, shift } => {
                let t = *num * 3;
                let d = (t >> *shift) as u8;
                *num = t & ((1u128 << *shift) - 1);
                d
            }
            Digits::Big { num, shift } => {
                let t = &*num * 3u32;
                let d = u8::try_from(&t >> *shift as usize).expect("digit below 3");
                *num = t - (BigUint::from(d) << *shift as usize);
                d
            }
        }
    }

    fn is_zero(&self) -> bool {
        match self {
            Digits::Small { num, .. } => *num == 0,
            Digits::Big { num, .. } => num.bits() == 0,
        }
    }

    /// The remainder `r` and `1 - r`, each rounded once.
    fn value_and_complement(&self) -> (f64, f64) {
        match self {
            Digits::Small { num, shift } => {
                let scale = (-(*shift as f64)).exp2();
                let comp = (1u128 << *shift) - *num;
                (*num as f64 * scale, comp as f64 * scale)
            }
            Digits::Big { num, shift } => {
                let comp = (BigUint::from(1u8) << *shift as usize) - num;
                (big_ratio(num, *shift), big_ratio(&comp, *shift))
            }
        }
    }
}

fn big_ratio(num: &BigUint, shift: u32) -> f64 {
    let drop = num.bits().saturating_sub(64);
    let top = u64::try_from(num >> drop as usize).expect("fits after shift");
    top as f64 * (drop as f64 - shift as f64).exp2()
}

/// Outcome of scanning digits for the first removed middle third.
enum Scan {
    /// `x` lies in an open removed interval; `dist` bounds the distance to
    /// its nearer end from below.
    Gap { dist: f64 },
    /// `x` is exactly a point of `C`.
    Member,
    /// No gap within the digit budget.
    Unresolved,
}

fn scan(x: f64, depth: u32) -> Scan {
    if x == 1.0 || x == 0.0 {
        return Scan::Member;
    }
    let mut digits = Digits::new(x);
    // Multiplication by 3 permutes residues mod 2^s, so the expansion is
    // purely periodic: a return to the start closes the cycle.
    let start = digits.clone();
    let mut scale = 1.0f64;
    for _ in 0..depth {
        let d = digits.next();
        scale /= 3.0;
        if d == 1 {
            if digits.is_zero() {
                return Scan::Member;
            }
            let (r, comp) = digits.value_and_complement();
            let dist = scale * r.min(comp);
            return Scan::Gap { dist: dist * (1.0 - 1e-12) };
        }
        if digits.is_zero() || digits == start {
            return Scan::Member;
        }
    }
    Scan::Unresolved
}

/// Three-valued membership in the middle-third Cantor set.
pub fn cantor_member(x: f64, depth: u32) -> Result<Membership> {
    if depth == 0 {
        return invalid("digit depth must be at least 1");
    }
    if !(0.0..=1.0).contains(&x) {
        return Ok(Membership::Out);
    }
    Ok(match scan(x, depth) {
        Scan::Member => Membership::In,
        Scan::Gap { .. } => Membership::Out,
        Scan::Unresolved => Membership::Undecided,
    })
}

/// Certified lower bound on the distance from `x` to the Cantor set.
pub fn cantor_dist_lower(x: f64, depth: u32) -> f64 {
    if x < 0.0 {
        return -x;
    }
    if x > 1.0 {
        return x - 1.0;
    }
    match scan(x, depth) {
        Scan::Gap { dist } => dist,
        _ => 0.0,
    }
}

/// Whether `[a, b]` provably meets the Cantor set, by recursive descent on
/// the self-similar pieces (their endpoints belong to the set).
pub fn interval_hits_cantor(a: f64, b: f64, depth: u32) -> bool {
    fn go(a: f64, b: f64, depth: u32) -> bool {
        if a > b || b < 0.0 || a > 1.0 {
            return false;
        }
        if a <= 0.0 || b >= 1.0 {
            return true;
        }
        if depth == 0 {
            return false;
        }
        if a > 1.0 / 3.0 && b < 2.0 / 3.0 {
            return false;
        }
        go(3.0 * a, 3.0 * b, depth - 1) || go(3.0 * a - 2.0, 3.0 * b - 2.0, depth - 1)
    }
    go(a, b, depth)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct LadderIndex {
    pub n: u32,
    pub k: u64,
}

impl LadderIndex {
    pub fn new(n: u32, k: u64) -> Result<Self> {
        if n == 0 || n > MAX_LEVEL {
            return invalid(format!("ladder level must be in 1..={MAX_LEVEL}, got {n}"));
        }
        if k >= 1u64 << n {
            return invalid(format!("k = {k} out of range for n = {n} (need k < 2^n)"));
        }
        Ok(LadderIndex { n, k })
    }

    pub fn envelope(&self) -> (f64, f64) {
        let w = quarter_pow(self.n);
        let lo = (-(self.n as f64)).exp2() + self.k as f64 * w;
        (lo, lo + w)
    }

    pub fn width(&self) -> f64 {
        quarter_pow(self.n)
    }

    /// Position of `x` inside the envelope, rescaled to `[0,1]`.
    pub fn rescale(&self, x: f64) -> f64 {
        let (lo, _) = self.envelope();
        (x - lo) / self.width()
    }

    pub fn all(max_n: u32) -> impl Iterator<Item = LadderIndex> {
        (1..=max_n).flat_map(|n| (0..(1u64 << n)).map(move |k| LadderIndex { n, k }))
    }
}

fn quarter_pow(n: u32) -> f64 {
    (-2.0 * n as f64).exp2()
}

pub fn ank_envelope(n: u32, k: u64) -> Result<(f64, f64)> {
    Ok(LadderIndex::new(n, k)?.envelope())
}

/// Level `n` with `2^{-n} ≤ x < 2^{-(n-1)}`, for `0 < x < 1`.
fn level_of(x: f64) -> u32 {
    let mut n = (-x.log2()).ceil().max(1.0) as u32;
    while n > 1 && (-((n - 1) as f64)).exp2() <= x {
        n -= 1;
    }
    while (-(n as f64)).exp2() > x {
        n += 1;
    }
    n
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AnkHit {
    pub index: Option<LadderIndex>,
    /// Some candidate envelope could not be decided within the digit budget.
    pub undecided: bool,
}

/// Ladder pieces whose envelope contains `x`, in lexicographic `(n, k)` order.
pub fn envelopes_containing(x: f64) -> Vec<LadderIndex> {
    if !(x > 0.0 && x < 1.0) {
        return Vec::new();
    }
    let n = level_of(x);
    if n > MAX_LEVEL {
        return Vec::new();
    }
    let w = quarter_pow(n);
    let base = (-(n as f64)).exp2();
    let k = ((x - base) / w).floor() as u64;
    let k = k.min((1u64 << n) - 1);
    let mut out = Vec::with_capacity(3);
    let lo = base + k as f64 * w;
    if x == lo && k >= 1 {
        out.push(LadderIndex { n, k: k - 1 });
    }
    out.push(LadderIndex { n, k });
    if x == base && n < MAX_LEVEL {
        out.push(LadderIndex { n: n + 1, k: (1u64 << (n + 1)) - 1 });
    }
    out
}

/// First ladder piece `A_{n,k}` containing `x`.
pub fn ank_member(x: f64, depth: u32) -> Result<AnkHit> {
    if depth == 0 {
        return invalid("digit depth must be at least 1");
    }
    let mut undecided = false;
    for idx in envelopes_containing(x) {
        match cantor_member(idx.rescale(x), depth)? {
            Membership::In => return Ok(AnkHit { index: Some(idx), undecided: false }),
            Membership::Undecided => undecided = true,
            Membership::Out => {}
        }
    }
    Ok(AnkHit { index: None, undecided })
}

/// A ladder piece that provably meets `[t, t + 4t²]`.
pub fn gap_window(t: f64, depth: u32) -> Result<LadderIndex> {
    if !(t > 0.0 && t < 1.0) {
        return invalid(format!("gap_window needs 0 < t < 1, got {t}"));
    }
    if depth == 0 {
        return invalid("digit depth must be at least 1");
    }
    let hi = t + 4.0 * t * t;
    let n = level_of(t);
    if n > MAX_LEVEL {
        return invalid(format!("t = {t} is below the finest ladder level"));
    }
    let w = quarter_pow(n);
    let base = (-(n as f64)).exp2();
    let k = ((t - base) / w).ceil() as u64;
    // The first envelope whose left end is at least t; its left end is in
    // the piece. Past the last envelope, use the right end 2^{-(n-1)}.
    let (idx, point) = if k < 1u64 << n {
        (LadderIndex { n, k }, base + k as f64 * w)
    } else {
        let last = LadderIndex { n, k: (1u64 << n) - 1 };
        (last, last.envelope().1)
    };
    if point >= t && point <= hi {
        return Ok(idx);
    }
    // Not expected to run; kept as an independent search.
    for m in [n, n + 1] {
        for k in 0..(1u64 << m) {
            let cand = LadderIndex { n: m, k };
            let (lo, up) = cand.envelope();
            if up < t || lo > hi {
                continue;
            }
            if interval_hits_cantor(cand.rescale(t), cand.rescale(hi), depth) {
                return Ok(cand);
            }
        }
    }
    Err(Error::Internal(format!("no ladder piece meets [{t}, {hi}]")))
}

/// Certified lower bound on the distance from `u` to `{0} ∪ ⋃ A_{n,k}`.
pub fn ladder_dist_lower(u: f64, depth: u32) -> f64 {
    if u <= 0.0 {
        return -u;
    }
    if u >= 1.0 {
        return u - 1.0;
    }
    // Envelopes tile (0,1) and their endpoints lie in the ladder, so the
    // nearest point is inside the envelope containing u.
    match envelopes_containing(u).first() {
        Some(idx) => idx.width() * cantor_dist_lower(idx.rescale(u), depth),
        None => 0.0,
    }
}
