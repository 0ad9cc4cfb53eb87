//! JSON report schema. Key names are part of the command-line interface and
//! are pinned by the golden tests.

use num_rational::BigRational;
use qkelly::geometry::WealthProfile;
use qkelly::problem::ProblemInstance;
use qkelly::quantile::QuantileValue;
use qkelly::rational;
use qkelly::shadow::{kelly_point, kelly_point_exact, kelly_value};
use qkelly::solver::{GlobalSolution, NodeOutcome, RestrictedFamily, TraceNode};
use qkelly::verify::{GridReport, McReport};
use serde::Serialize;

/// A scalar as an exact rational string (when known) and a decimal.
#[derive(Debug, Serialize)]
pub struct Scalar {
    pub exact: Option<String>,
    pub decimal: f64,
}

impl From<&QuantileValue> for Scalar {
    fn from(v: &QuantileValue) -> Self {
        Scalar {
            exact: v.exact.as_ref().map(rational::format),
            decimal: v.value,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct Vector {
    pub exact: Option<Vec<String>>,
    pub decimal: Vec<f64>,
}

impl From<&WealthProfile> for Vector {
    fn from(w: &WealthProfile) -> Self {
        Vector {
            exact: w.is_exact().then(|| w.to_strings()),
            decimal: w.values().to_vec(),
        }
    }
}

impl From<&[BigRational]> for Vector {
    fn from(v: &[BigRational]) -> Self {
        Vector {
            exact: Some(v.iter().map(rational::format).collect()),
            decimal: v.iter().map(rational::to_f64).collect(),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct InstanceEcho {
    pub m: usize,
    pub n: u32,
    pub p: Vec<String>,
    pub q: Vec<String>,
    pub alpha: String,
    pub exact_mode: bool,
    pub family: Vec<String>,
}

impl InstanceEcho {
    pub fn new(inst: &ProblemInstance, family: Option<&RestrictedFamily>) -> Self {
        InstanceEcho {
            m: inst.m(),
            n: inst.n(),
            p: inst.p_text().to_vec(),
            q: inst.q_text().to_vec(),
            alpha: inst.alpha_text().to_string(),
            exact_mode: inst.exact_mode(),
            family: family.map_or_else(Vec::new, |f| f.halfspaces.iter().map(|h| h.to_string()).collect()),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct NodeReport {
    pub stratum: String,
    pub rank: [usize; 2],
    pub active_count: Option<Vec<u32>>,
    pub outcome: String,
    pub value: Option<Scalar>,
    pub point: Option<Vector>,
    pub limit_support: Option<String>,
    pub escape: Option<String>,
    pub shadow_violations: Option<Vec<usize>>,
    pub iterations: usize,
}

#[derive(Debug, Serialize)]
pub struct TraceReport {
    pub strata: usize,
    pub pruned_zero: usize,
    pub start: Option<String>,
    pub path: Vec<String>,
    pub descent_edges: Vec<[String; 2]>,
    pub visited: Vec<NodeReport>,
}

#[derive(Debug, Serialize)]
pub struct SolveReport {
    pub instance: InstanceEcho,
    pub value: Scalar,
    pub argmax: Vector,
    pub active_count: Option<Vec<u32>>,
    pub shadow_law: Option<Vector>,
    pub kelly_point: Vector,
    pub kelly_value: f64,
    pub attained_stratum: String,
    pub trace: TraceReport,
}

fn node_report(sol: &GlobalSolution, node: &TraceNode) -> NodeReport {
    let label = |key| sol.trace.node(key).map_or_else(String::new, |n: &TraceNode| n.label.clone());
    let (outcome, value, point, limit_support) = match &node.outcome {
        NodeOutcome::Zero => ("zero", None, None, None),
        NodeOutcome::Interior { value, point } => ("interior", Some(Scalar::from(value)), Some(Vector::from(point)), None),
        NodeOutcome::Boundary { value } => ("boundary", Some(Scalar { exact: None, decimal: *value }), None, None),
        NodeOutcome::Collapse { limit_support } => ("collapse", None, None, Some(limit_support.to_string())),
        NodeOutcome::Relaxed { value } => ("relaxed", Some(Scalar { exact: None, decimal: *value }), None, None),
        NodeOutcome::Infeasible => ("infeasible", None, None, None),
    };
    NodeReport {
        stratum: node.label.clone(),
        rank: [node.rank.0, node.rank.1],
        active_count: node.active.as_ref().map(|k| k.as_slice().to_vec()),
        outcome: outcome.to_string(),
        value,
        point,
        limit_support,
        escape: node.escape.as_ref().map(label),
        shadow_violations: node.shadow_violations.as_ref().map(|v| v.iter().map(|j| j + 1).collect()),
        iterations: node.iterations,
    }
}

pub fn solve_report(inst: &ProblemInstance, family: Option<&RestrictedFamily>, sol: &GlobalSolution) -> SolveReport {
    let trace = &sol.trace;
    let label = |key| trace.node(key).map_or_else(String::new, |n: &TraceNode| n.label.clone());
    let shadow_law = sol.active_count.as_ref().map(|k| {
        let n = BigRational::from_integer(inst.n().into());
        let law: Vec<BigRational> = k
            .as_slice()
            .iter()
            .map(|&ki| BigRational::from_integer(ki.into()) / &n)
            .collect();
        Vector::from(law.as_slice())
    });
    let kelly = match (inst.p_exact(), inst.q_exact()) {
        (Some(p), Some(q)) => Vector::from(&kelly_point_exact(p, q)),
        _ => Vector::from(&kelly_point(inst.p(), inst.q())),
    };
    SolveReport {
        instance: InstanceEcho::new(inst, family),
        value: Scalar::from(&sol.value),
        argmax: Vector::from(&sol.argmax),
        active_count: sol.active_count.as_ref().map(|k| k.as_slice().to_vec()),
        shadow_law,
        kelly_point: kelly,
        kelly_value: kelly_value(inst.p(), inst.q()),
        attained_stratum: sol.attained_label.clone(),
        trace: TraceReport {
            strata: trace.nodes.len(),
            pruned_zero: trace.pruned_zero(),
            start: trace.start.as_ref().map(label),
            path: trace.path.iter().map(label).collect(),
            descent_edges: trace.descent_edges().iter().map(|(a, b)| [label(a), label(b)]).collect(),
            visited: trace.nodes.iter().map(|n| node_report(sol, n)).collect(),
        },
    }
}

#[derive(Debug, Serialize)]
pub struct GridCheck {
    pub resolution: usize,
    pub best_value: f64,
    pub best_point: Vec<f64>,
    pub relative_gap: f64,
    pub tolerance: f64,
    pub pass: bool,
}

#[derive(Debug, Serialize)]
pub struct McCheck {
    pub samples: usize,
    pub seed: u64,
    pub estimate: f64,
    pub atom_mass: f64,
    /// False when the atom mass is within the margin of alpha and the
    /// comparison is skipped.
    pub checked: bool,
    pub pass: bool,
}

#[derive(Debug, Serialize)]
pub struct VerifyReport {
    pub instance: InstanceEcho,
    pub value: Scalar,
    pub argmax: Vector,
    pub grid: GridCheck,
    pub monte_carlo: McCheck,
    pub pass: bool,
}

pub const GRID_TOLERANCE: f64 = 2e-3;

pub fn verify_report(
    inst: &ProblemInstance,
    family: Option<&RestrictedFamily>,
    sol: &GlobalSolution,
    grid: &GridReport,
    mc: &McReport,
    samples: usize,
    seed: u64,
) -> VerifyReport {
    let v = sol.value.value;
    let gap = grid.relative_gap(v);
    let grid_pass = gap <= GRID_TOLERANCE && grid.best_value <= v + 1e-9;
    let mc_pass = mc.atom_match != Some(false);
    VerifyReport {
        instance: InstanceEcho::new(inst, family),
        value: Scalar::from(&sol.value),
        argmax: Vector::from(&sol.argmax),
        grid: GridCheck {
            resolution: grid.resolution,
            best_value: grid.best_value,
            best_point: grid.best_point.values().to_vec(),
            relative_gap: gap,
            tolerance: GRID_TOLERANCE,
            pass: grid_pass,
        },
        monte_carlo: McCheck {
            samples,
            seed,
            estimate: mc.estimate,
            atom_mass: mc.atom_mass,
            checked: mc.atom_match.is_some(),
            pass: mc_pass,
        },
        pass: grid_pass && mc_pass,
    }
}
