//! Global maximization of the upper quantile over the wealth simplex.
//!
//! Every stratum is solved on its own; only maxima attained inside a stratum
//! are candidates. A stratum whose supremum is not attained inside has it
//! approached at a point of a lower stratum (a closure face or a smaller
//! support), whose own solve covers it. The escape edges recorded on the
//! way make up the descent trace.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use num_rational::BigRational;
use num_traits::One;
use rayon::prelude::*;

use crate::arrangement::{FaceLattice, IntegerNormal, Stratification, Stratum, StratumKey};
use crate::error::{Error, Result};
use crate::family::{family_nonempty, relaxed_max, Halfspace, RelaxedSolution};
use crate::geometry::{self, monomial_value_exact, WealthProfile};
use crate::problem::{support_mass, CountVector, ProblemInstance, SupportSet};
use crate::quantile::{analyze_stratum, QuantileEvaluator, QuantileValue, StratumQuantile, TIE_TOL};
use crate::rational::{self, int};
use crate::shadow;
use crate::stratum::{
    classify_relaxed, maximize_on_face_with, FacePolyhedron, SolveOptions, SolveOutcome, SolveStatus,
    StratumObjective, FACE_MARGIN,
};

/// Extra linear constraints `a.W <= b` on the wealth profile.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RestrictedFamily {
    pub halfspaces: Vec<Halfspace>,
}

impl RestrictedFamily {
    pub fn new(halfspaces: Vec<Halfspace>) -> Self {
        RestrictedFamily { halfspaces }
    }

    pub fn contains(&self, w: &[f64], tol: f64) -> bool {
        self.halfspaces.iter().all(|h| h.contains(w, tol))
    }

    pub fn is_empty(&self) -> bool {
        self.halfspaces.is_empty()
    }
}

#[derive(Debug, Clone)]
pub struct SolverOptions {
    /// Use the closed-form shadow point when it realizes the stratum.
    pub fast_path: bool,
    pub family: Option<RestrictedFamily>,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            fast_path: true,
            family: None,
        }
    }
}

/// What solving one stratum produced.
#[derive(Debug, Clone, PartialEq)]
pub enum NodeOutcome {
    /// The support carries less than alpha of the mass; the quantile is 0.
    Zero,
    Interior { value: QuantileValue, point: WealthProfile },
    Boundary { value: f64 },
    Collapse { limit_support: SupportSet },
    Relaxed { value: f64 },
    Infeasible,
}

#[derive(Debug, Clone)]
pub struct TraceNode {
    pub key: StratumKey,
    pub label: String,
    pub rank: (usize, usize),
    pub active: Option<CountVector>,
    pub outcome: NodeOutcome,
    /// Stratum holding the limit of this stratum's supremum.
    pub escape: Option<StratumKey>,
    /// Normals (by position) whose sign at the active shadow point differs
    /// from the stratum's; `None` when the shadow point leaves the support.
    pub shadow_violations: Option<Vec<usize>>,
    pub iterations: usize,
}

#[derive(Debug, Clone, Default)]
pub struct DescentTrace {
    pub nodes: Vec<TraceNode>,
    /// Full-support stratum containing the Kelly point.
    pub start: Option<StratumKey>,
    /// Escape edges followed from `start`.
    pub path: Vec<StratumKey>,
}

impl DescentTrace {
    pub fn node(&self, key: &StratumKey) -> Option<&TraceNode> {
        self.nodes.iter().find(|n| &n.key == key)
    }

    /// Strata skipped because their support carries less than alpha.
    pub fn pruned_zero(&self) -> usize {
        self.nodes.iter().filter(|n| n.outcome == NodeOutcome::Zero).count()
    }

    /// Parent to child escape edges.
    pub fn descent_edges(&self) -> Vec<(StratumKey, StratumKey)> {
        self.nodes
            .iter()
            .filter_map(|n| n.escape.clone().map(|e| (n.key.clone(), e)))
            .collect()
    }

    fn follow(&mut self) {
        self.path.clear();
        let index: HashMap<&StratumKey, usize> = self.nodes.iter().enumerate().map(|(i, n)| (&n.key, i)).collect();
        let mut cur = self.start.clone();
        let mut path = Vec::new();
        while let Some(k) = cur {
            if path.contains(&k) {
                break;
            }
            cur = index.get(&k).and_then(|&i| self.nodes[i].escape.clone());
            path.push(k);
        }
        self.path = path;
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        let mut tally: BTreeMap<&str, usize> = BTreeMap::new();
        for n in &self.nodes {
            *tally.entry(outcome_name(&n.outcome)).or_default() += 1;
        }
        let counts: Vec<String> = tally.iter().map(|(k, v)| format!("{k} {v}")).collect();
        let _ = writeln!(out, "strata: {} ({})", self.nodes.len(), counts.join(", "));
        let _ = writeln!(out, "visited:");
        for n in &self.nodes {
            let active = n.active.as_ref().map_or("zero".to_string(), |k| k.to_string());
            let _ = writeln!(out, "  {}  rank {:?}  active {}  {}", n.label, n.rank, active, describe(&n.outcome));
        }
        let _ = writeln!(out, "path:");
        for key in &self.path {
            let Some(n) = self.node(key) else { continue };
            let active = n.active.as_ref().map_or("none".to_string(), |k| k.to_string());
            let viol = match &n.shadow_violations {
                Some(v) if v.is_empty() => "shadow inside".to_string(),
                Some(v) => {
                    let v: Vec<String> = v.iter().map(|j| (j + 1).to_string()).collect();
                    format!("shadow violates {{{}}}", v.join(","))
                }
                None => "shadow off support".to_string(),
            };
            let _ = writeln!(out, "  {}  active {}  {}  {}", n.label, active, viol, describe(&n.outcome));
        }
        out
    }
}

fn outcome_name(o: &NodeOutcome) -> &'static str {
    match o {
        NodeOutcome::Zero => "zero",
        NodeOutcome::Interior { .. } => "interior",
        NodeOutcome::Boundary { .. } => "boundary",
        NodeOutcome::Collapse { .. } => "collapse",
        NodeOutcome::Relaxed { .. } => "relaxed",
        NodeOutcome::Infeasible => "infeasible",
    }
}

fn describe(o: &NodeOutcome) -> String {
    match o {
        NodeOutcome::Zero => "zero, skipped".into(),
        NodeOutcome::Interior { value, point } => format!("interior max {} at {}", value.display(), point),
        NodeOutcome::Boundary { value } => format!("-> closure face (sup {value:.6e})"),
        NodeOutcome::Collapse { limit_support } => format!("-> support {limit_support}"),
        NodeOutcome::Relaxed { value } => format!("relaxed max {value:.6e} outside"),
        NodeOutcome::Infeasible => "no feasible point".into(),
    }
}

#[derive(Debug, Clone)]
pub struct GlobalSolution {
    pub value: QuantileValue,
    pub argmax: WealthProfile,
    /// Member of the active tier at the argmax whose shadow point is nearest
    /// to it (ties: lexicographically largest).
    pub active_count: Option<CountVector>,
    pub attained_stratum: StratumKey,
    pub attained_label: String,
    pub trace: DescentTrace,
}

#[derive(Debug, Clone)]
struct Candidate {
    key: StratumKey,
    label: String,
    rank: (usize, usize),
    order: (usize, usize),
    value: QuantileValue,
    point: WealthProfile,
    tier: Vec<CountVector>,
}

impl Candidate {
    /// Larger value wins; ties go to the smaller rank, then enumeration order.
    fn beats(&self, other: &Candidate) -> bool {
        match self.value.compare(&other.value, TIE_TOL) {
            std::cmp::Ordering::Greater => true,
            std::cmp::Ordering::Less => false,
            std::cmp::Ordering::Equal => (self.rank, self.order) < (other.rank, other.order),
        }
    }
}

fn pick(cands: Vec<Candidate>) -> Option<Candidate> {
    cands.into_iter().reduce(|best, c| if c.beats(&best) { c } else { best })
}

/// The tier member whose shadow point is nearest to `point`.
pub fn representative(tier: &[CountVector], point: &WealthProfile, n: u32, q: &[f64]) -> Option<CountVector> {
    let mut best: Option<(f64, &CountVector)> = None;
    for k in tier {
        let d = shadow::shadow_point(k, n, q).distance_inf(point.values());
        best = match best {
            None => Some((d, k)),
            Some((bd, bk)) => {
                if d < bd - 1e-12 || ((d - bd).abs() <= 1e-12 && k > bk) {
                    Some((d, k))
                } else {
                    Some((bd, bk))
                }
            }
        };
    }
    best.map(|(_, k)| k.clone())
}

/// Sign vector at `z = log rho` without taking logs: `sign(prod rho^g - 1)`.
pub fn sign_vector_ratios(normals: &[IntegerNormal], rho: &[BigRational]) -> Vec<i8> {
    normals
        .iter()
        .map(|g| {
            let mut prod = BigRational::one();
            for (gi, ri) in g.iter().zip(rho) {
                prod *= rational::pow(ri, *gi);
            }
            match prod.cmp(&BigRational::one()) {
                std::cmp::Ordering::Less => -1,
                std::cmp::Ordering::Equal => 0,
                std::cmp::Ordering::Greater => 1,
            }
        })
        .collect()
}

/// Stratum of `lattice` holding the positive profile `w` (restricted to the
/// lattice's support).
fn locate_profile(lattice: &FaceLattice, w: &[f64], w_exact: Option<&[BigRational]>) -> Option<usize> {
    let s = lattice.support();
    let r = s.anchor();
    match w_exact {
        Some(ex) => {
            let rho: Vec<BigRational> = s.free().iter().map(|&i| &ex[i] / &ex[r]).collect();
            lattice.find(&sign_vector_ratios(lattice.normals(), &rho))
        }
        None => {
            let z: Vec<f64> = s.free().iter().map(|&i| (w[i] / w[r]).ln()).collect();
            lattice.locate(&z)
        }
    }
}

fn shadow_violations(inst: &ProblemInstance, st: &Stratum, k: &CountVector) -> Option<Vec<usize>> {
    let s = st.support();
    if k.support() != s.indices() {
        return None;
    }
    let signs = match inst.q_exact() {
        Some(q) => {
            let w = shadow::shadow_point_exact(k, inst.n(), q);
            let ex = w.exact_values().unwrap();
            let rho: Vec<BigRational> = s.free().iter().map(|&i| &ex[s.anchor()].recip() * &ex[i]).collect();
            sign_vector_ratios(st.normals(), &rho)
        }
        None => {
            let w = shadow::shadow_point(k, inst.n(), inst.q());
            let r = s.anchor();
            let z: Vec<f64> = s.free().iter().map(|&i| (w.get(i) / w.get(r)).ln()).collect();
            crate::arrangement::sign_vector_f64(st.normals(), &z)
        }
    };
    Some(
        signs
            .iter()
            .zip(st.signs())
            .enumerate()
            .filter(|(_, (a, b))| a != b)
            .map(|(j, _)| j)
            .collect(),
    )
}

/// Stratum of `t` holding the limit of `st`'s interior point along a
/// collapse direction: the `t`-ratios are kept, the rest go to zero.
fn collapse_target(strat: &Stratification, st: &Stratum, t: &SupportSet) -> Option<StratumKey> {
    let s = st.support();
    let z = st.interior_exact();
    let coord = |i: usize| -> BigRational {
        match s.free().iter().position(|&j| j == i) {
            Some(pos) => z[pos].clone(),
            None => int(0),
        }
    };
    let base = coord(t.anchor());
    let zt: Vec<BigRational> = t.free().iter().map(|&i| coord(i) - &base).collect();
    strat.locate_exact(t, &zt)
}

fn objective(inst: &ProblemInstance, k: &CountVector, s: &SupportSet) -> Result<StratumObjective> {
    let obj = StratumObjective::new(k.clone(), s.clone(), inst.q(), inst.n())?;
    Ok(match inst.q_exact() {
        Some(q) => obj.with_exact_prices(q),
        None => obj,
    })
}

fn order_of(supports: &[SupportSet], key: &StratumKey) -> (usize, usize) {
    let pos = supports.iter().position(|s| s == &key.support).unwrap_or(usize::MAX);
    (pos, key.index)
}

fn candidate_value(inst: &ProblemInstance, k: &CountVector, point: &WealthProfile, value: f64) -> QuantileValue {
    match (point.exact_values(), inst.exact_mode()) {
        (Some(ex), true) => QuantileValue::from_exact(monomial_value_exact(ex, k)),
        _ => QuantileValue::float(value),
    }
}

struct NodeResult {
    node: TraceNode,
    candidate: Option<Candidate>,
}

fn solve_node(
    inst: &ProblemInstance,
    strat: &Stratification,
    st: &Stratum,
    sq: &StratumQuantile,
    opts: &SolverOptions,
) -> Result<NodeResult> {
    let key = st.key();
    let mut node = TraceNode {
        key: key.clone(),
        label: st.label(),
        rank: st.rank(),
        active: sq.active.count().cloned(),
        outcome: NodeOutcome::Zero,
        escape: None,
        shadow_violations: None,
        iterations: 0,
    };
    let Some(k) = sq.active.count() else {
        return Ok(NodeResult { node, candidate: None });
    };
    node.shadow_violations = shadow_violations(inst, st, k);
    let lattice = strat.lattice(st.support());
    let obj = objective(inst, k, st.support())?;
    let poly = FacePolyhedron::from_lattice(lattice, st.index());
    let out = maximize_on_face_with(
        &obj,
        &poly,
        &SolveOptions {
            fast_path: opts.fast_path,
            ..SolveOptions::default()
        },
    )?;
    node.iterations = out.iterations;
    let mut candidate = None;
    match out.status {
        SolveStatus::InteriorMax { value, .. } => {
            let point = out.point.expect("interior maxima carry a point");
            let qv = candidate_value(inst, k, &point, value);
            node.outcome = NodeOutcome::Interior {
                value: qv.clone(),
                point: point.clone(),
            };
            candidate = Some(Candidate {
                key: key.clone(),
                label: st.label(),
                rank: st.rank(),
                order: order_of(strat.supports(), &key),
                value: qv,
                point,
                tier: sq.tier().to_vec(),
            });
        }
        SolveStatus::OnClosureBoundary { value, face, .. } => {
            node.outcome = NodeOutcome::Boundary { value };
            node.escape = Some(StratumKey {
                support: st.support().clone(),
                index: face,
            });
        }
        SolveStatus::SupportCollapse { limit_support, .. } => {
            node.escape = collapse_target(strat, st, &limit_support);
            node.outcome = NodeOutcome::Collapse { limit_support };
        }
        SolveStatus::Relaxed { value } => node.outcome = NodeOutcome::Relaxed { value },
        SolveStatus::Infeasible => node.outcome = NodeOutcome::Infeasible,
    }
    Ok(NodeResult { node, candidate })
}

fn start_key(inst: &ProblemInstance, strat: &Stratification) -> Option<StratumKey> {
    let full = SupportSet::full(inst.m());
    let kelly = match (inst.p_exact(), inst.q_exact()) {
        (Some(p), Some(q)) => shadow::kelly_point_exact(p, q),
        _ => shadow::kelly_point(inst.p(), inst.q()),
    };
    let lattice = strat.lattice(&full);
    locate_profile(lattice, kelly.values(), kelly.exact_values()).map(|index| StratumKey { support: full, index })
}

pub fn solve(inst: &ProblemInstance) -> Result<GlobalSolution> {
    solve_with(inst, &SolverOptions::default())
}

pub fn solve_with(inst: &ProblemInstance, opts: &SolverOptions) -> Result<GlobalSolution> {
    let strat = Stratification::new(inst)?;
    if let Some(fam) = opts.family.as_ref().filter(|f| !f.is_empty()) {
        return solve_family(inst, &strat, fam);
    }
    let mut nodes = Vec::new();
    let mut cands = Vec::new();
    for s in strat.supports() {
        let lattice = strat.lattice(s);
        let results: Vec<Result<NodeResult>> = lattice
            .strata()
            .par_iter()
            .map(|st| {
                let sq = analyze_stratum(inst, st);
                solve_node(inst, &strat, st, &sq, opts)
            })
            .collect();
        for r in results {
            let r = r?;
            if let Some(c) = r.candidate {
                cands.push(c);
            }
            nodes.push(r.node);
        }
    }
    finish(inst, &strat, nodes, cands)
}

fn finish(
    inst: &ProblemInstance,
    strat: &Stratification,
    nodes: Vec<TraceNode>,
    cands: Vec<Candidate>,
) -> Result<GlobalSolution> {
    let win = pick(cands).ok_or_else(|| Error::Internal("no stratum attains a maximum".into()))?;
    let mut trace = DescentTrace {
        nodes,
        start: start_key(inst, strat),
        path: Vec::new(),
    };
    trace.follow();
    Ok(GlobalSolution {
        active_count: representative(&win.tier, &win.point, inst.n(), inst.q()),
        value: win.value,
        argmax: win.point,
        attained_stratum: win.key,
        attained_label: win.label,
        trace,
    })
}

/// Restricted family: each stratum's supremum is bounded by the convex
/// relaxation over its upper set, whose maximizer is itself feasible and at
/// least as good. Relaxations are shared between strata with equal upper
/// sets.
fn solve_family(inst: &ProblemInstance, strat: &Stratification, fam: &RestrictedFamily) -> Result<GlobalSolution> {
    let m = inst.m();
    for h in &fam.halfspaces {
        if h.a.len() != m {
            return Err(Error::FamilyDimension {
                expected: m,
                got: h.a.len(),
            });
        }
    }
    if !family_nonempty(inst.q(), &fam.halfspaces) {
        return Err(Error::EmptyFamily);
    }
    let eval = QuantileEvaluator::new(inst);
    let mut nodes = Vec::new();
    let mut cands = Vec::new();
    for s in strat.supports() {
        let lattice = strat.lattice(s);
        let analyses: Vec<StratumQuantile> = lattice.strata().par_iter().map(|st| analyze_stratum(inst, st)).collect();
        let mut sets: Vec<Vec<CountVector>> = analyses.iter().map(|a| a.upper_set()).filter(|u| !u.is_empty()).collect();
        sets.sort();
        sets.dedup();
        let solved: Vec<Result<Option<RelaxedSolution>>> = sets
            .par_iter()
            .map(|u| relaxed_max(u, s, inst.q(), &fam.halfspaces))
            .collect();
        let mut cache: HashMap<Vec<CountVector>, Option<RelaxedSolution>> = HashMap::new();
        for (u, r) in sets.into_iter().zip(solved) {
            let r = r?;
            if let Some(sol) = &r {
                if let Some(c) = family_candidate(inst, strat, &eval, fam, sol) {
                    cands.push(c);
                }
            }
            cache.insert(u, r);
        }
        for (st, sq) in lattice.strata().iter().zip(&analyses) {
            let mut node = TraceNode {
                key: st.key(),
                label: st.label(),
                rank: st.rank(),
                active: sq.active.count().cloned(),
                outcome: NodeOutcome::Zero,
                escape: None,
                shadow_violations: None,
                iterations: 0,
            };
            if let Some(k) = sq.active.count() {
                node.shadow_violations = shadow_violations(inst, st, k);
                let obj = objective(inst, k, s)?.with_upper_set(sq.upper_set());
                let poly = FacePolyhedron::from_lattice(lattice, st.index());
                let sol = cache.get(&sq.upper_set()).and_then(|o| o.as_ref());
                let out: SolveOutcome = classify_relaxed(&obj, &poly.face, sol);
                node.iterations = out.iterations;
                node.outcome = match out.status {
                    SolveStatus::InteriorMax { value, .. } => NodeOutcome::Interior {
                        value: QuantileValue::float(value),
                        point: out.point.clone().unwrap(),
                    },
                    SolveStatus::Relaxed { value } => NodeOutcome::Relaxed { value },
                    _ => NodeOutcome::Infeasible,
                };
            }
            nodes.push(node);
        }
    }
    finish(inst, strat, nodes, cands)
}

/// Candidate at a relaxation maximizer, or at its snapped version when tiny
/// coordinates set to zero do better.
fn family_candidate(
    inst: &ProblemInstance,
    strat: &Stratification,
    eval: &QuantileEvaluator,
    fam: &RestrictedFamily,
    sol: &RelaxedSolution,
) -> Option<Candidate> {
    let q = inst.q();
    let mut points = vec![sol.w.clone()];
    if sol.w.iter().any(|&v| v > 0.0 && v < 1e-9) {
        let mut w: Vec<f64> = sol.w.iter().map(|&v| if v < 1e-9 { 0.0 } else { v }).collect();
        let b: f64 = w.iter().zip(q).map(|(a, b)| a * b).sum();
        w.iter_mut().for_each(|v| *v /= b);
        if fam.contains(&w, 1e-9) {
            points.push(w);
        }
    }
    let mut best: Option<Candidate> = None;
    for w in points {
        let wp = WealthProfile::new(w);
        let pq = eval.evaluate(&wp);
        let zp = geometry::to_ratio(&wp, q);
        let lattice = strat.lattice(&zp.support);
        let index = lattice.locate(&zp.z).unwrap_or(0);
        let st = lattice.get(index);
        let c = Candidate {
            key: st.key(),
            label: st.label(),
            rank: st.rank(),
            order: order_of(strat.supports(), &st.key()),
            value: pq.value,
            point: wp,
            tier: pq.tier,
        };
        if best.as_ref().is_none_or(|b| c.value.value > b.value.value) {
            best = Some(c);
        }
    }
    best
}

/// Binary instances in closed form: two chambers, the wall and two vertices.
/// Produces the same solution as [`solve`].
pub fn solve_binary_fast(inst: &ProblemInstance) -> Result<GlobalSolution> {
    if inst.m() != 2 {
        return Err(Error::NotBinary(inst.m()));
    }
    let n = inst.n();
    let q = inst.q();
    let alpha = inst.alpha_probability();
    let exact = inst.exact_mode();
    let full = SupportSet::full(2);
    let supports = [full.clone(), SupportSet::new(vec![0]).unwrap(), SupportSet::new(vec![1]).unwrap()];
    let counts = inst.counts();
    let masses = inst.masses();
    let label = |s: &SupportSet, index: usize, signs: &str, dim: usize| format!("S={s} F#{index} [{signs}] dim {dim}");
    let mut nodes = Vec::new();
    let mut cands = Vec::new();

    // Chamber U > D ranks counts by decreasing k_1, U < D by increasing.
    for (index, signs, descending) in [(0usize, "-", true), (1, "+", false)] {
        let key = StratumKey {
            support: full.clone(),
            index,
        };
        let mut order: Vec<usize> = (0..counts.len()).collect();
        if !descending {
            order.reverse();
        }
        let mut cum = crate::problem::Probability::zero_like(exact);
        let mut active = None;
        for &i in &order {
            cum.add_assign(&masses[i]);
            if cum.reaches(&alpha) {
                active = Some(counts[i].clone());
                break;
            }
        }
        let k = active.expect("the full support carries all the mass");
        let (w1, w2) = (k.get(0) as f64 / q[0], k.get(1) as f64 / q[1]);
        let inside = k.get(0) > 0 && k.get(1) > 0 && {
            match inst.q_exact() {
                Some(qe) => {
                    let a = int(k.get(0) as i64) / &qe[0];
                    let b = int(k.get(1) as i64) / &qe[1];
                    if descending { a > b } else { a < b }
                }
                None => {
                    let z = (w2 / w1).ln();
                    (if descending { -z } else { z }) > FACE_MARGIN
                }
            }
        };
        let mut node = TraceNode {
            key: key.clone(),
            label: label(&full, index, signs, 1),
            rank: (2, 1),
            active: Some(k.clone()),
            outcome: NodeOutcome::Boundary { value: f64::NAN },
            escape: None,
            shadow_violations: None,
            iterations: 0,
        };
        if inside {
            let sol = shadow::shadow_solution(&k, n, q, inst.q_exact());
            let qv = candidate_value(inst, &k, &sol.point, sol.value);
            node.shadow_violations = Some(Vec::new());
            node.outcome = NodeOutcome::Interior {
                value: qv.clone(),
                point: sol.point.clone(),
            };
            cands.push(Candidate {
                key: key.clone(),
                label: node.label.clone(),
                rank: (2, 1),
                order: (0, index),
                value: qv,
                point: sol.point,
                tier: vec![k],
            });
        } else {
            let wall = StratumKey {
                support: full.clone(),
                index: 2,
            };
            if k.get(0) > 0 && k.get(1) > 0 {
                node.shadow_violations = Some(vec![0]);
                node.escape = Some(wall);
            } else {
                // The shadow point is a vertex; the chamber's supremum is at
                // the wall or at that vertex, whichever the objective favours.
                node.escape = Some(wall);
            }
        }
        nodes.push(node);
    }

    // Wall W_1 = W_2: every count ties.
    let wall_point = match inst.q_exact() {
        Some(qe) => geometry::from_ratios_exact(&full, &[BigRational::one()], qe),
        None => geometry::from_ratio(
            &geometry::RatioPoint {
                support: full.clone(),
                z: vec![0.0],
            },
            q,
        ),
    };
    let wall_value = (-(n as f64) * (q[0] + q[1]).ln()).exp();
    let wall_k = counts[0].clone();
    let wall_qv = candidate_value(inst, &wall_k, &wall_point, wall_value);
    let wall_key = StratumKey {
        support: full.clone(),
        index: 2,
    };
    nodes.push(TraceNode {
        key: wall_key.clone(),
        label: label(&full, 2, "0", 0),
        rank: (2, 0),
        active: Some(wall_k),
        outcome: NodeOutcome::Interior {
            value: wall_qv.clone(),
            point: wall_point.clone(),
        },
        escape: None,
        shadow_violations: None,
        iterations: 0,
    });
    cands.push(Candidate {
        key: wall_key,
        label: label(&full, 2, "0", 0),
        rank: (2, 0),
        order: (0, 2),
        value: wall_qv,
        point: wall_point,
        tier: counts.to_vec(),
    });

    // Vertices.
    for (pos, s) in supports.iter().enumerate().skip(1) {
        let i = s.anchor();
        let key = StratumKey {
            support: s.clone(),
            index: 0,
        };
        let k = counts.iter().find(|k| k.get(i) == n).unwrap().clone();
        let mass = support_mass(inst, s)?;
        let mut node = TraceNode {
            key: key.clone(),
            label: label(s, 0, "", 0),
            rank: (1, 0),
            active: None,
            outcome: NodeOutcome::Zero,
            escape: None,
            shadow_violations: None,
            iterations: 0,
        };
        if mass.reaches(&alpha) {
            let point = match inst.q_exact() {
                Some(qe) => geometry::from_ratios_exact(s, &[], qe),
                None => geometry::from_ratio(
                    &geometry::RatioPoint {
                        support: s.clone(),
                        z: Vec::new(),
                    },
                    q,
                ),
            };
            let value = (-(n as f64) * q[i].ln()).exp();
            let qv = candidate_value(inst, &k, &point, value);
            node.active = Some(k.clone());
            node.shadow_violations = Some(Vec::new());
            node.outcome = NodeOutcome::Interior {
                value: qv.clone(),
                point: point.clone(),
            };
            cands.push(Candidate {
                key,
                label: node.label.clone(),
                rank: (1, 0),
                order: (pos, 0),
                value: qv,
                point,
                tier: vec![k],
            });
        }
        nodes.push(node);
    }

    let win = pick(cands).ok_or_else(|| Error::Internal("no stratum attains a maximum".into()))?;
    let kelly_low = match (inst.p_exact(), inst.q_exact()) {
        (Some(p), Some(qe)) => {
            let a = &p[0] / &qe[0];
            let b = &p[1] / &qe[1];
            match a.cmp(&b) {
                std::cmp::Ordering::Greater => 0,
                std::cmp::Ordering::Less => 1,
                std::cmp::Ordering::Equal => 2,
            }
        }
        _ => {
            let z = (inst.p()[1] / q[1] / (inst.p()[0] / q[0])).ln();
            if z < 0.0 {
                0
            } else if z > 0.0 {
                1
            } else {
                2
            }
        }
    };
    let mut trace = DescentTrace {
        nodes,
        start: Some(StratumKey {
            support: full,
            index: kelly_low,
        }),
        path: Vec::new(),
    };
    trace.follow();
    Ok(GlobalSolution {
        active_count: representative(&win.tier, &win.point, n, q),
        value: win.value,
        argmax: win.point,
        attained_stratum: win.key,
        attained_label: win.label,
        trace,
    })
}

/// Human-readable descent trace of a solution.
pub fn descent_trace(sol: &GlobalSolution) -> String {
    let mut out = sol.trace.render();
    let _ = writeln!(
        out,
        "attained: {}  value {}  at {}",
        sol.attained_label,
        sol.value.display(),
        sol.argmax
    );
    out
}
