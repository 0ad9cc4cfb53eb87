//! The upper quantile of terminal wealth, pointwise and per stratum.

use std::cmp::Ordering;

use num_rational::BigRational;
use num_traits::Zero;

use crate::arrangement::{projected_difference, Stratum};
use crate::geometry::{log_monomial, monomial_value_exact, WealthProfile};
use crate::problem::{CountVector, Probability, ProblemInstance};
use crate::rational::{self, to_f64};

/// Float tie tolerance on log monomial values (relative on values).
pub const TIE_TOL: f64 = 1e-12;
/// Float cumulative masses this close to alpha are recomputed exactly.
const EXACT_RECHECK: f64 = 1e-9;

/// A quantile value, exact when both the point and the instance are.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantileValue {
    pub value: f64,
    pub exact: Option<BigRational>,
}

impl QuantileValue {
    pub fn zero(exact: bool) -> Self {
        QuantileValue {
            value: 0.0,
            exact: exact.then(BigRational::zero),
        }
    }

    pub fn from_exact(v: BigRational) -> Self {
        QuantileValue {
            value: to_f64(&v),
            exact: Some(v),
        }
    }

    pub fn float(v: f64) -> Self {
        QuantileValue {
            value: v,
            exact: None,
        }
    }

    pub fn display(&self) -> String {
        match &self.exact {
            Some(r) => rational::format(r),
            None => format!("{}", self.value),
        }
    }

    /// `self` versus `other`: exact when both are exact, otherwise equal
    /// within `rel` relative tolerance.
    pub fn compare(&self, other: &QuantileValue, rel: f64) -> Ordering {
        if let (Some(a), Some(b)) = (&self.exact, &other.exact) {
            return a.cmp(b);
        }
        let scale = self.value.abs().max(other.value.abs());
        if (self.value - other.value).abs() <= rel * scale {
            Ordering::Equal
        } else {
            self.value.partial_cmp(&other.value).unwrap_or(Ordering::Equal)
        }
    }
}

/// Pointwise quantile evaluation with float masses cached, for repeated
/// calls on one instance.
pub struct QuantileEvaluator<'a> {
    inst: &'a ProblemInstance,
    masses: Vec<f64>,
}

/// The tier of counts attaining the quantile at a point.
#[derive(Debug, Clone)]
pub struct PointQuantile {
    pub value: QuantileValue,
    /// Counts whose monomial equals the quantile (empty when it is 0 through
    /// insufficient positive mass).
    pub tier: Vec<CountVector>,
    /// Mass of all counts valued at least the quantile.
    pub cum_mass: f64,
}

impl<'a> QuantileEvaluator<'a> {
    pub fn new(inst: &'a ProblemInstance) -> Self {
        QuantileEvaluator {
            inst,
            masses: inst.masses().iter().map(Probability::value).collect(),
        }
    }

    /// Fast float evaluation from raw coordinates.
    pub fn value_f64(&self, w: &[f64]) -> f64 {
        self.float_path(w).0
    }

    pub fn evaluate(&self, w: &WealthProfile) -> PointQuantile {
        match w.exact_values() {
            Some(ex) => self.exact_path(ex),
            None => {
                let (value, tier, cum_mass) = self.float_path(w.values());
                PointQuantile {
                    value: QuantileValue::float(value),
                    tier: tier.into_iter().map(|i| self.inst.counts()[i].clone()).collect(),
                    cum_mass,
                }
            }
        }
    }

    fn reaches_float(&self, cum: f64, included: &[usize]) -> bool {
        if let Some(alpha) = self.inst.alpha_exact() {
            if (cum - self.inst.alpha()).abs() < EXACT_RECHECK {
                let exact: BigRational = included
                    .iter()
                    .map(|&i| self.inst.masses()[i].exact().unwrap().clone())
                    .sum();
                return exact >= *alpha;
            }
        }
        self.inst
            .alpha_probability()
            .reaches_f64(cum)
    }

    fn float_path(&self, w: &[f64]) -> (f64, Vec<usize>, f64) {
        let counts = self.inst.counts();
        let mut lv: Vec<(f64, usize)> = counts
            .iter()
            .enumerate()
            .map(|(i, k)| (log_monomial(w, k), i))
            .collect();
        lv.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap_or(Ordering::Equal).then(a.1.cmp(&b.1)));
        let mut cum = 0.0;
        let mut included: Vec<usize> = Vec::with_capacity(lv.len());
        let mut start = 0;
        while start < lv.len() {
            let lead = lv[start].0;
            if lead == f64::NEG_INFINITY {
                break;
            }
            let mut end = start;
            while end < lv.len() && lv[end].0 != f64::NEG_INFINITY && lead - lv[end].0 <= TIE_TOL * lead.abs().max(1.0) {
                cum += self.masses[lv[end].1];
                included.push(lv[end].1);
                end += 1;
            }
            if self.reaches_float(cum, &included) {
                let tier = lv[start..end].iter().map(|x| x.1).collect();
                return (lead.exp(), tier, cum);
            }
            start = end;
        }
        (0.0, Vec::new(), 1.0)
    }

    fn exact_path(&self, w: &[BigRational]) -> PointQuantile {
        let inst = self.inst;
        let counts = inst.counts();
        let mut vals: Vec<(BigRational, usize)> = counts
            .iter()
            .enumerate()
            .map(|(i, k)| (monomial_value_exact(w, k), i))
            .collect();
        vals.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
        let alpha = inst.alpha_probability();
        let mut cum = Probability::zero_like(inst.exact_mode());
        let mut start = 0;
        while start < vals.len() && !vals[start].0.is_zero() {
            let mut end = start;
            while end < vals.len() && vals[end].0 == vals[start].0 {
                cum.add_assign(&inst.masses()[vals[end].1]);
                end += 1;
            }
            if cum.reaches(&alpha) {
                return PointQuantile {
                    value: QuantileValue::from_exact(vals[start].0.clone()),
                    tier: vals[start..end].iter().map(|x| counts[x.1].clone()).collect(),
                    cum_mass: cum.value(),
                };
            }
            start = end;
        }
        PointQuantile {
            value: QuantileValue::zero(true),
            tier: Vec::new(),
            cum_mass: 1.0,
        }
    }
}

/// `Q+_alpha(W^N)`: the largest atom `v` with `P(W^N >= v) >= alpha`.
pub fn quantile_at(inst: &ProblemInstance, w: &WealthProfile) -> QuantileValue {
    QuantileEvaluator::new(inst).evaluate(w).value
}

/// Counts supported in a stratum's support, in tiers of equal monomial value,
/// strictly decreasing across tiers.
#[derive(Debug, Clone)]
pub struct OrderedCounts {
    pub tiers: Vec<Vec<CountVector>>,
    pub cum_mass: Vec<Probability>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ActiveCount {
    Zero,
    Monomial(CountVector),
}

impl ActiveCount {
    pub fn count(&self) -> Option<&CountVector> {
        match self {
            ActiveCount::Zero => None,
            ActiveCount::Monomial(k) => Some(k),
        }
    }
}

/// Orders the counts of `st`'s support from the stratum's sign vector alone.
pub fn stratum_ordering(inst: &ProblemInstance, st: &Stratum) -> OrderedCounts {
    let s = st.support();
    let mut inside: Vec<(usize, &CountVector)> = inst
        .counts()
        .iter()
        .enumerate()
        .filter(|(_, k)| k.supported_in(s.indices()))
        .collect();
    let cmp = |a: &CountVector, b: &CountVector| -> Ordering {
        if a == b {
            return Ordering::Equal;
        }
        match st.sign_of_difference(&projected_difference(a, b, s)) {
            Some(1) => Ordering::Less,
            Some(-1) => Ordering::Greater,
            _ => Ordering::Equal,
        }
    };
    // Lexicographically largest first inside a tier (the sort is stable).
    inside.sort_by(|a, b| b.1.cmp(a.1));
    inside.sort_by(|a, b| cmp(a.1, b.1));

    let mut tiers: Vec<Vec<CountVector>> = Vec::new();
    let mut cum_mass = Vec::new();
    let mut cum = Probability::zero_like(inst.exact_mode());
    for (i, k) in inside {
        let new_tier = match tiers.last() {
            Some(t) => cmp(&t[0], k) != Ordering::Equal,
            None => true,
        };
        if new_tier {
            if !tiers.is_empty() {
                cum_mass.push(cum.clone());
            }
            tiers.push(Vec::new());
        }
        tiers.last_mut().unwrap().push(k.clone());
        cum.add_assign(&inst.masses()[i]);
    }
    cum_mass.push(cum);
    OrderedCounts { tiers, cum_mass }
}

/// Ordering plus the active tier of a stratum.
#[derive(Debug, Clone)]
pub struct StratumQuantile {
    pub ordering: OrderedCounts,
    pub active: ActiveCount,
    pub active_tier: Option<usize>,
}

impl StratumQuantile {
    /// Counts ranked at or above the active count (their mass reaches alpha).
    pub fn upper_set(&self) -> Vec<CountVector> {
        match self.active_tier {
            Some(t) => self.ordering.tiers[..=t].concat(),
            None => Vec::new(),
        }
    }

    pub fn tier(&self) -> &[CountVector] {
        match self.active_tier {
            Some(t) => &self.ordering.tiers[t],
            None => &[],
        }
    }
}

pub fn analyze_stratum(inst: &ProblemInstance, st: &Stratum) -> StratumQuantile {
    let ordering = stratum_ordering(inst, st);
    let alpha = inst.alpha_probability();
    let active_tier = ordering.cum_mass.iter().position(|c| c.reaches(&alpha));
    let active = match active_tier {
        // Tiers keep the lexicographically largest member first.
        Some(t) => ActiveCount::Monomial(ordering.tiers[t][0].clone()),
        None => ActiveCount::Zero,
    };
    StratumQuantile {
        ordering,
        active,
        active_tier,
    }
}

pub fn active_count(inst: &ProblemInstance, st: &Stratum) -> ActiveCount {
    analyze_stratum(inst, st).active
}
