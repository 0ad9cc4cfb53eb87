//! Problem data: the instance `(m, p, q, n, alpha)`, count vectors and their
//! multinomial masses.

use std::cmp::Ordering;
use std::fmt;

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, InstanceError, Result};
use crate::rational::{self, from_f64, to_f64};

/// Float-mode tolerance on `sum(p) = 1`.
pub const FLOAT_SUM_TOL: f64 = 1e-12;

/// A numeric input as supplied by a caller: an exact rational literal or a
/// plain float.
#[derive(Debug, Clone, PartialEq)]
pub enum Number {
    Exact(BigRational),
    Float(f64),
}

impl Number {
    pub fn parse(text: &str) -> std::result::Result<Self, InstanceError> {
        rational::parse_rational(text).map(Number::Exact)
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Number::Exact(r) => to_f64(r),
            Number::Float(x) => *x,
        }
    }

    fn is_exact(&self) -> bool {
        matches!(self, Number::Exact(_))
    }

    fn to_rational(&self) -> Option<BigRational> {
        match self {
            Number::Exact(r) => Some(r.clone()),
            Number::Float(x) => from_f64(*x),
        }
    }

    fn display(&self) -> String {
        match self {
            Number::Exact(r) => rational::format(r),
            Number::Float(x) => x.to_string(),
        }
    }
}

impl From<f64> for Number {
    fn from(x: f64) -> Self {
        Number::Float(x)
    }
}

impl From<BigRational> for Number {
    fn from(r: BigRational) -> Self {
        Number::Exact(r)
    }
}

/// Unvalidated instance fields.
#[derive(Debug, Clone)]
pub struct RawInstance {
    pub m: usize,
    pub p: Vec<Number>,
    pub q: Vec<Number>,
    pub n: u32,
    pub alpha: Number,
}

/// A probability, exact when the instance is in exact mode.
#[derive(Debug, Clone, PartialEq)]
pub enum Probability {
    Exact(BigRational),
    Approx(f64),
}

impl Probability {
    pub fn value(&self) -> f64 {
        match self {
            Probability::Exact(r) => to_f64(r),
            Probability::Approx(x) => *x,
        }
    }

    pub fn exact(&self) -> Option<&BigRational> {
        match self {
            Probability::Exact(r) => Some(r),
            Probability::Approx(_) => None,
        }
    }

    pub(crate) fn zero_like(exact: bool) -> Self {
        if exact {
            Probability::Exact(BigRational::zero())
        } else {
            Probability::Approx(0.0)
        }
    }

    pub(crate) fn add_assign(&mut self, other: &Probability) {
        match (self, other) {
            (Probability::Exact(a), Probability::Exact(b)) => *a += b,
            (Probability::Approx(a), b) => *a += b.value(),
            (slot @ Probability::Exact(_), Probability::Approx(b)) => {
                *slot = Probability::Approx(slot.value() + b)
            }
        }
    }

    /// `cum >= self` for a float cumulative mass `cum`.
    pub fn reaches_f64(&self, cum: f64) -> bool {
        cum >= self.value() - FLOAT_SUM_TOL
    }

    /// `self >= alpha`, exact when both sides are exact.
    pub fn reaches(&self, alpha: &Probability) -> bool {
        match (self, alpha) {
            (Probability::Exact(a), Probability::Exact(b)) => a >= b,
            _ => self.value() >= alpha.value() - FLOAT_SUM_TOL,
        }
    }
}

impl fmt::Display for Probability {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Probability::Exact(r) => write!(f, "{}", rational::format(r)),
            Probability::Approx(x) => write!(f, "{x}"),
        }
    }
}

/// A multinomial tally `k` with `sum(k) = n`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CountVector(Vec<u32>);

impl CountVector {
    pub fn new(k: Vec<u32>) -> Self {
        CountVector(k)
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn total(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn get(&self, i: usize) -> u32 {
        self.0[i]
    }

    /// Indices with a positive count.
    pub fn support(&self) -> Vec<usize> {
        (0..self.0.len()).filter(|&i| self.0[i] > 0).collect()
    }

    /// True when every positive entry lies in `indices`.
    pub fn supported_in(&self, indices: &[usize]) -> bool {
        self.0
            .iter()
            .enumerate()
            .all(|(i, &k)| k == 0 || indices.contains(&i))
    }
}

impl fmt::Display for CountVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, k) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{k}")?;
        }
        write!(f, ")")
    }
}

/// All count vectors of length `m` summing to `n`, in reverse-lexicographic
/// order: `(n,0,..)` first, `(0,..,n)` last.
pub fn enumerate_counts(m: usize, n: u32) -> Vec<CountVector> {
    fn rec(pos: usize, left: u32, cur: &mut Vec<u32>, out: &mut Vec<CountVector>) {
        let m = cur.len();
        if pos + 1 == m {
            cur[pos] = left;
            out.push(CountVector(cur.clone()));
            return;
        }
        for a in (0..=left).rev() {
            cur[pos] = a;
            rec(pos + 1, left - a, cur, out);
        }
    }
    let mut out = Vec::new();
    if m == 0 {
        return out;
    }
    rec(0, n, &mut vec![0; m], &mut out);
    out
}

#[cfg(test)]
fn binomial(n: u64, k: u64) -> u64 {
    let k = k.min(n - k);
    (0..k).fold(1u64, |acc, i| acc * (n - i) / (i + 1))
}

fn factorial(n: u32) -> BigUint {
    (1..=n).fold(BigUint::one(), |acc, i| acc * BigUint::from(i))
}

/// A validated problem instance with its count table and masses.
#[derive(Debug, Clone)]
pub struct ProblemInstance {
    m: usize,
    n: u32,
    p: Vec<f64>,
    q: Vec<f64>,
    alpha: f64,
    p_exact: Option<Vec<BigRational>>,
    q_exact: Option<Vec<BigRational>>,
    alpha_exact: Option<BigRational>,
    inputs: [Vec<String>; 2],
    alpha_text: String,
    counts: Vec<CountVector>,
    masses: Vec<Probability>,
}

/// Checks the raw fields and builds the instance. Exact mode is on when every
/// `p_i` and `alpha` is an exact rational.
pub fn validate_instance(raw: &RawInstance) -> Result<ProblemInstance> {
    let m = raw.m;
    if m < 2 {
        return Err(InstanceError::TooFewOutcomes(m).into());
    }
    if raw.n < 1 {
        return Err(InstanceError::HorizonTooSmall(raw.n).into());
    }
    for (field, len) in [("p", raw.p.len()), ("q", raw.q.len())] {
        if len != m {
            return Err(InstanceError::LengthMismatch {
                field,
                expected: m,
                got: len,
            }
            .into());
        }
    }
    let exact_mode = raw.p.iter().all(Number::is_exact) && raw.alpha.is_exact();

    for (field, xs) in [("p", &raw.p), ("q", &raw.q)] {
        if xs.iter().any(|x| !x.to_f64().is_finite()) {
            return Err(InstanceError::NonFinite(field).into());
        }
    }
    if !raw.alpha.to_f64().is_finite() {
        return Err(InstanceError::NonFinite("alpha").into());
    }

    for (i, pi) in raw.p.iter().enumerate() {
        let positive = match pi {
            Number::Exact(r) => *r > BigRational::zero(),
            Number::Float(x) => *x > 0.0,
        };
        if !positive {
            return Err(InstanceError::NonPositiveProbability {
                index: i,
                value: pi.display(),
            }
            .into());
        }
    }
    for (i, qi) in raw.q.iter().enumerate() {
        let positive = match qi {
            Number::Exact(r) => *r > BigRational::zero(),
            Number::Float(x) => *x > 0.0,
        };
        if !positive {
            return Err(InstanceError::NonPositivePrice {
                index: i,
                value: qi.display(),
            }
            .into());
        }
    }

    let (p_exact, q_exact, alpha_exact) = if exact_mode {
        let p: Vec<BigRational> = raw.p.iter().map(|x| x.to_rational().unwrap()).collect();
        let sum: BigRational = p.iter().sum();
        if !sum.is_one() {
            return Err(InstanceError::ProbabilitySum {
                sum: rational::format(&sum),
            }
            .into());
        }
        let q: Option<Vec<BigRational>> = raw.q.iter().map(Number::to_rational).collect();
        (Some(p), q, raw.alpha.to_rational())
    } else {
        let sum: f64 = raw.p.iter().map(Number::to_f64).sum();
        if (sum - 1.0).abs() > FLOAT_SUM_TOL {
            return Err(InstanceError::ProbabilitySum {
                sum: sum.to_string(),
            }
            .into());
        }
        (None, None, None)
    };

    let alpha_ok = match (&alpha_exact, &raw.alpha) {
        (Some(a), _) => *a > BigRational::zero() && *a < BigRational::one(),
        (None, a) => a.to_f64() > 0.0 && a.to_f64() < 1.0,
    };
    if !alpha_ok {
        return Err(InstanceError::AlphaOutOfRange(raw.alpha.display()).into());
    }

    let mut inst = ProblemInstance {
        m,
        n: raw.n,
        p: raw.p.iter().map(Number::to_f64).collect(),
        q: raw.q.iter().map(Number::to_f64).collect(),
        alpha: raw.alpha.to_f64(),
        p_exact,
        q_exact,
        alpha_exact,
        inputs: [
            raw.p.iter().map(Number::display).collect(),
            raw.q.iter().map(Number::display).collect(),
        ],
        alpha_text: raw.alpha.display(),
        counts: enumerate_counts(m, raw.n),
        masses: Vec::new(),
    };
    inst.masses = inst.counts.iter().map(|k| inst.compute_mass(k)).collect();
    Ok(inst)
}

impl ProblemInstance {
    /// Float-mode constructor.
    pub fn new(p: &[f64], q: &[f64], n: u32, alpha: f64) -> Result<Self> {
        validate_instance(&RawInstance {
            m: p.len(),
            p: p.iter().map(|&x| Number::Float(x)).collect(),
            q: q.iter().map(|&x| Number::Float(x)).collect(),
            n,
            alpha: Number::Float(alpha),
        })
    }

    /// Exact-mode constructor.
    pub fn exact(p: Vec<BigRational>, q: Vec<BigRational>, n: u32, alpha: BigRational) -> Result<Self> {
        validate_instance(&RawInstance {
            m: p.len(),
            p: p.into_iter().map(Number::Exact).collect(),
            q: q.into_iter().map(Number::Exact).collect(),
            n,
            alpha: Number::Exact(alpha),
        })
    }

    /// Exact-mode constructor from literals such as `"3/5"` or `"0.6"`.
    pub fn parse(p: &[&str], q: &[&str], n: u32, alpha: &str) -> Result<Self> {
        let parse_all = |xs: &[&str]| -> std::result::Result<Vec<Number>, InstanceError> {
            xs.iter().map(|s| Number::parse(s)).collect()
        };
        validate_instance(&RawInstance {
            m: p.len(),
            p: parse_all(p)?,
            q: parse_all(q)?,
            n,
            alpha: Number::parse(alpha)?,
        })
    }

    /// Same `p`, `q`, `alpha` with a different horizon.
    pub fn with_horizon(&self, n: u32) -> Result<Self> {
        if n < 1 {
            return Err(InstanceError::HorizonTooSmall(n).into());
        }
        let mut inst = self.clone();
        inst.n = n;
        inst.counts = enumerate_counts(self.m, n);
        inst.masses = inst.counts.iter().map(|k| inst.compute_mass(k)).collect();
        Ok(inst)
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn p(&self) -> &[f64] {
        &self.p
    }

    pub fn q(&self) -> &[f64] {
        &self.q
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn exact_mode(&self) -> bool {
        self.p_exact.is_some()
    }

    pub fn p_exact(&self) -> Option<&[BigRational]> {
        self.p_exact.as_deref()
    }

    /// Exact prices; available whenever the instance is in exact mode.
    pub fn q_exact(&self) -> Option<&[BigRational]> {
        self.q_exact.as_deref()
    }

    pub fn alpha_exact(&self) -> Option<&BigRational> {
        self.alpha_exact.as_ref()
    }

    pub fn alpha_probability(&self) -> Probability {
        match &self.alpha_exact {
            Some(a) => Probability::Exact(a.clone()),
            None => Probability::Approx(self.alpha),
        }
    }

    /// Inputs as they were supplied, for reports.
    pub fn p_text(&self) -> &[String] {
        &self.inputs[0]
    }

    pub fn q_text(&self) -> &[String] {
        &self.inputs[1]
    }

    pub fn alpha_text(&self) -> &str {
        &self.alpha_text
    }

    /// The count table in reverse-lexicographic order.
    pub fn counts(&self) -> &[CountVector] {
        &self.counts
    }

    /// `pi_k` for each entry of [`counts`](Self::counts).
    pub fn masses(&self) -> &[Probability] {
        &self.masses
    }

    pub fn count_index(&self, k: &CountVector) -> Option<usize> {
        // Reverse-lex order means the table is sorted descending.
        self.counts
            .binary_search_by(|probe| k.cmp(probe))
            .ok()
    }

    fn compute_mass(&self, k: &CountVector) -> Probability {
        let coef = k
            .as_slice()
            .iter()
            .fold(factorial(self.n), |acc, &ki| acc / factorial(ki));
        match &self.p_exact {
            Some(p) => {
                let mut v = BigRational::from_integer(coef.into());
                for (pi, &ki) in p.iter().zip(k.as_slice()) {
                    v *= rational::pow(pi, ki as i64);
                }
                Probability::Exact(v)
            }
            None => {
                let log_coef = rational::log_abs(&BigRational::from_integer(coef.into()));
                let log_p: f64 = self
                    .p
                    .iter()
                    .zip(k.as_slice())
                    .map(|(pi, &ki)| ki as f64 * pi.ln())
                    .sum();
                Probability::Approx((log_coef + log_p).exp())
            }
        }
    }

    fn check_count(&self, k: &CountVector) -> Result<()> {
        if k.len() != self.m {
            return Err(Error::DimensionMismatch {
                expected: self.m,
                got: k.len(),
            });
        }
        if k.total() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n as usize,
                got: k.total() as usize,
            });
        }
        Ok(())
    }
}

/// `pi_k = n!/(k_1!...k_m!) * prod p_i^{k_i}`.
pub fn multinomial_mass(inst: &ProblemInstance, k: &CountVector) -> Result<Probability> {
    inst.check_count(k)?;
    Ok(match inst.count_index(k) {
        Some(i) => inst.masses[i].clone(),
        None => inst.compute_mass(k),
    })
}

/// A nonempty set of outcome indices (0-based). The anchor is the smallest
/// index.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SupportSet(Vec<usize>);

impl SupportSet {
    pub fn new(mut indices: Vec<usize>) -> Result<Self> {
        indices.sort_unstable();
        indices.dedup();
        if indices.is_empty() {
            return Err(Error::EmptySupport);
        }
        Ok(SupportSet(indices))
    }

    pub fn full(m: usize) -> Self {
        SupportSet((0..m).collect())
    }

    pub fn from_mask(mask: u64) -> Self {
        SupportSet((0..64).filter(|i| mask >> i & 1 == 1).collect())
    }

    pub fn mask(&self) -> u64 {
        self.0.iter().fold(0, |acc, &i| acc | 1 << i)
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn anchor(&self) -> usize {
        self.0[0]
    }

    /// Non-anchor indices: the ratio-coordinate axes.
    pub fn free(&self) -> &[usize] {
        &self.0[1..]
    }

    pub fn contains(&self, i: usize) -> bool {
        self.0.binary_search(&i).is_ok()
    }

    pub fn is_subset_of(&self, other: &SupportSet) -> bool {
        self.0.iter().all(|&i| other.contains(i))
    }

    pub(crate) fn check(&self, m: usize) -> Result<()> {
        match self.0.iter().find(|&&i| i >= m) {
            Some(&index) => Err(Error::SupportIndex { index, m }),
            None => Ok(()),
        }
    }
}

impl fmt::Display for SupportSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (j, i) in self.0.iter().enumerate() {
            if j > 0 {
                write!(f, ",")?;
            }
            write!(f, "{}", i + 1)?;
        }
        write!(f, "}}")
    }
}

/// All nonempty support sets of `{0..m}`, largest first, then lexicographic.
pub fn support_sets(m: usize) -> Vec<SupportSet> {
    let mut sets: Vec<SupportSet> = (1u64..(1 << m)).map(SupportSet::from_mask).collect();
    sets.sort_by(|a, b| match b.len().cmp(&a.len()) {
        Ordering::Equal => a.cmp(b),
        o => o,
    });
    sets
}

/// `Pi_S`: total mass of counts supported in `S`, by direct summation.
pub fn support_mass(inst: &ProblemInstance, s: &SupportSet) -> Result<Probability> {
    if s.is_empty() {
        return Err(Error::EmptySupport);
    }
    s.check(inst.m)?;
    let mut total = Probability::zero_like(inst.exact_mode());
    for (k, pi) in inst.counts.iter().zip(&inst.masses) {
        if k.supported_in(s.indices()) {
            total.add_assign(pi);
        }
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;

    fn r(a: i64, b: i64) -> BigRational {
        BigRational::new(BigInt::from(a), BigInt::from(b))
    }

    fn binary() -> ProblemInstance {
        ProblemInstance::parse(&["0.6", "0.4"], &["1", "1"], 3, "1/2").unwrap()
    }

    fn ternary() -> ProblemInstance {
        ProblemInstance::parse(&["0.6", "0.3", "0.1"], &["1/3", "1/3", "1/3"], 2, "1/2").unwrap()
    }

    #[test]
    fn paper_instances_validate() {
        let b = binary();
        assert!(b.exact_mode());
        assert_eq!(b.m(), 2);
        let t = ternary();
        assert_eq!(t.counts().len(), 6);
    }

    #[test]
    fn distinct_diagnostics() {
        let p2 = |a: f64, b: f64| vec![Number::Float(a), Number::Float(b)];
        let base = RawInstance {
            m: 2,
            p: p2(0.6, 0.4),
            q: p2(1.0, 1.0),
            n: 3,
            alpha: Number::Float(0.5),
        };
        let err = |raw: RawInstance| match validate_instance(&raw) {
            Err(Error::Instance(e)) => e,
            other => panic!("expected instance error, got {other:?}"),
        };
        assert!(matches!(
            err(RawInstance { p: p2(0.6, 0.5), ..base.clone() }),
            InstanceError::ProbabilitySum { .. }
        ));
        assert!(matches!(
            err(RawInstance { p: p2(1.0, 0.0), ..base.clone() }),
            InstanceError::NonPositiveProbability { index: 1, .. }
        ));
        assert!(matches!(
            err(RawInstance { q: p2(1.0, -1.0), ..base.clone() }),
            InstanceError::NonPositivePrice { index: 1, .. }
        ));
        assert!(matches!(
            err(RawInstance { alpha: Number::Float(1.0), ..base.clone() }),
            InstanceError::AlphaOutOfRange(_)
        ));
        assert!(matches!(
            err(RawInstance { n: 0, ..base.clone() }),
            InstanceError::HorizonTooSmall(0)
        ));
        assert!(matches!(
            err(RawInstance { m: 1, p: vec![Number::Float(1.0)], q: vec![Number::Float(1.0)], ..base.clone() }),
            InstanceError::TooFewOutcomes(1)
        ));
        assert!(matches!(
            err(RawInstance { m: 3, ..base }),
            InstanceError::LengthMismatch { field: "p", .. }
        ));
    }

    #[test]
    fn exact_sum_must_be_one() {
        let e = ProblemInstance::parse(&["0.6", "0.5"], &["1", "1"], 3, "1/2").unwrap_err();
        assert!(e.to_string().contains("do not sum to 1"), "{e}");
    }

    #[test]
    fn counts_in_reverse_lex_order() {
        let c: Vec<Vec<u32>> = enumerate_counts(2, 3).iter().map(|k| k.as_slice().to_vec()).collect();
        assert_eq!(c, vec![vec![3, 0], vec![2, 1], vec![1, 2], vec![0, 3]]);
        let t = enumerate_counts(3, 2);
        assert_eq!(t.len(), 6);
        assert_eq!(t[0].as_slice(), &[2, 0, 0]);
        assert_eq!(t[1].as_slice(), &[1, 1, 0]);
        assert_eq!(enumerate_counts(5, 0), vec![CountVector::new(vec![0; 5])]);
        for m in 1..6 {
            for n in 0..7 {
                assert_eq!(enumerate_counts(m, n).len() as u64, binomial(n as u64 + m as u64 - 1, m as u64 - 1));
            }
        }
    }

    #[test]
    fn paper_table_masses() {
        let b = binary();
        let expect = [r(216, 1000), r(432, 1000), r(288, 1000), r(64, 1000)];
        for (k, e) in b.counts().iter().zip(expect) {
            assert_eq!(multinomial_mass(&b, k).unwrap(), Probability::Exact(e));
        }
        let t = ternary();
        let k = CountVector::new(vec![0, 0, 2]);
        assert_eq!(multinomial_mass(&t, &k).unwrap(), Probability::Exact(r(1, 100)));
        let k = CountVector::new(vec![2, 0]);
        assert_eq!(multinomial_mass(&b, &k).unwrap_err().to_string(), "dimension mismatch: expected 3, got 2");
    }

    #[test]
    fn support_mass_examples() {
        let t = ternary();
        let s12 = SupportSet::new(vec![0, 1]).unwrap();
        assert_eq!(support_mass(&t, &s12).unwrap(), Probability::Exact(r(81, 100)));
        assert_eq!(support_mass(&t, &SupportSet::full(3)).unwrap(), Probability::Exact(r(1, 1)));
        let b = binary();
        let s1 = SupportSet::new(vec![0]).unwrap();
        assert_eq!(support_mass(&b, &s1).unwrap(), Probability::Exact(r(216, 1000)));
        assert!(matches!(SupportSet::new(vec![]), Err(Error::EmptySupport)));
    }

    #[test]
    fn float_mode_masses_sum_to_one() {
        let inst = ProblemInstance::new(&[0.2, 0.3, 0.5], &[1.0, 2.0, 0.5], 6, 0.4).unwrap();
        assert!(!inst.exact_mode());
        let total: f64 = inst.masses().iter().map(Probability::value).sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn support_sets_order() {
        let s: Vec<String> = support_sets(3).iter().map(|s| s.to_string()).collect();
        assert_eq!(s, ["{1,2,3}", "{1,2}", "{1,3}", "{2,3}", "{1}", "{2}", "{3}"]);
    }
}
