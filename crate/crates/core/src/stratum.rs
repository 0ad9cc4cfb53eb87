//! Maximization of the stratum objective
//! `psi(z) = sum_{i != r} k_i z_i - n log(q_r + sum_{i != r} q_i e^{z_i})`
//! over the closure of one arrangement face.
//!
//! The face closure is a polyhedral cone `{g.z = 0 (eq), g.z >= 0 (ineq)}`.
//! An exact LP first decides whether `psi` has an ascent ray inside the cone
//! (support collapse). Otherwise the maximizer exists; Newton on the linear
//! span decides whether it sits in the open face, and if not the closure
//! faces are searched for the one holding it.

use nalgebra::{DMatrix, DVector};
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::arrangement::{FaceLattice, IntegerNormal, Stratum};
use crate::error::{Error, Result};
use crate::family::{relaxed_max, Halfspace, RelaxedSolution};
use crate::geometry::{self, RatioPoint, WealthProfile};
use crate::linalg::{self, dot_i64_f64};
use crate::lp::{LinearProgram, LpResult, Relation};
use crate::problem::{CountVector, SupportSet};
use crate::rational::{self, int, to_f64};
use crate::shadow;

/// Strictness margin for classifying a point as inside the open face.
pub const FACE_MARGIN: f64 = 1e-8;
/// Ratio coordinates beyond this magnitude count as escape.
pub const DIVERGENCE_BOUND: f64 = 500.0;
pub const MAX_ITERATIONS: usize = 10_000;
const ARMIJO_C: f64 = 1e-4;

/// `psi` for active count `k` on support `S`.
#[derive(Debug, Clone)]
pub struct StratumObjective {
    pub k: CountVector,
    pub support: SupportSet,
    pub q: Vec<f64>,
    pub q_exact: Option<Vec<BigRational>>,
    pub n: u32,
    /// Counts ranked at or above `k` on the stratum; used with restricted
    /// families. Defaults to `[k]`.
    pub upper_set: Vec<CountVector>,
}

impl StratumObjective {
    pub fn new(k: CountVector, support: SupportSet, q: &[f64], n: u32) -> Result<Self> {
        if k.len() != q.len() {
            return Err(Error::DimensionMismatch {
                expected: q.len(),
                got: k.len(),
            });
        }
        if !k.supported_in(support.indices()) {
            return Err(Error::Internal(format!("count {k} is not supported in {support}")));
        }
        Ok(StratumObjective {
            upper_set: vec![k.clone()],
            k,
            support,
            q: q.to_vec(),
            q_exact: None,
            n,
        })
    }

    pub fn with_exact_prices(mut self, q: &[BigRational]) -> Self {
        self.q_exact = Some(q.to_vec());
        self
    }

    pub fn with_upper_set(mut self, upper: Vec<CountVector>) -> Self {
        self.upper_set = upper;
        self
    }

    pub fn dim(&self) -> usize {
        self.support.len() - 1
    }

    /// Log-sum-exp of the chart denominator and the weights
    /// `w_i = q_i e^{z_i} / D` for the free coordinates.
    fn lse(&self, z: &[f64]) -> (f64, Vec<f64>) {
        let s = &self.support;
        let shift = z.iter().fold(0.0f64, |a, &b| a.max(b));
        let terms: Vec<f64> = s
            .free()
            .iter()
            .zip(z)
            .map(|(&i, &zi)| self.q[i] * (zi - shift).exp())
            .collect();
        let total = self.q[s.anchor()] * (-shift).exp() + terms.iter().sum::<f64>();
        (shift + total.ln(), terms.iter().map(|t| t / total).collect())
    }

    pub fn value(&self, z: &[f64]) -> f64 {
        let (lse, _) = self.lse(z);
        let lin: f64 = self
            .support
            .free()
            .iter()
            .zip(z)
            .map(|(&i, &zi)| self.k.get(i) as f64 * zi)
            .sum();
        lin - self.n as f64 * lse
    }

    pub fn gradient(&self, z: &[f64]) -> Vec<f64> {
        let (_, w) = self.lse(z);
        let n = self.n as f64;
        self.support
            .free()
            .iter()
            .zip(&w)
            .map(|(&i, wi)| self.k.get(i) as f64 - n * wi)
            .collect()
    }

    /// `-n (diag(w) - w w^T)`.
    pub fn hessian(&self, z: &[f64]) -> DMatrix<f64> {
        let (_, w) = self.lse(z);
        let d = w.len();
        let n = self.n as f64;
        DMatrix::from_fn(d, d, |a, b| {
            let diag = if a == b { w[a] } else { 0.0 };
            -n * (diag - w[a] * w[b])
        })
    }
}

pub fn psi(obj: &StratumObjective, z: &RatioPoint) -> f64 {
    obj.value(&z.z)
}

pub fn psi_gradient(obj: &StratumObjective, z: &RatioPoint) -> Vec<f64> {
    obj.gradient(&z.z)
}

pub fn psi_hessian(obj: &StratumObjective, z: &RatioPoint) -> DMatrix<f64> {
    obj.hessian(&z.z)
}

/// A face given by its equality and (oriented) inequality normals.
#[derive(Debug, Clone)]
pub struct FaceDescriptor {
    /// Index in the face lattice.
    pub index: usize,
    pub signs: Vec<i8>,
    pub eq_normals: Vec<IntegerNormal>,
    /// Oriented so that `g.z > 0` on the open face.
    pub ineq_normals: Vec<IntegerNormal>,
    pub interior: Vec<f64>,
}

impl FaceDescriptor {
    fn from_stratum(st: &Stratum) -> Self {
        let mut eq = Vec::new();
        let mut ineq = Vec::new();
        for (g, &s) in st.normals().iter().zip(st.signs()) {
            match s {
                0 => eq.push(g.clone()),
                _ => ineq.push(g.iter().map(|v| v * s as i64).collect()),
            }
        }
        FaceDescriptor {
            index: st.index(),
            signs: st.signs().to_vec(),
            eq_normals: eq,
            ineq_normals: ineq,
            interior: st.interior_exact().iter().map(to_f64).collect(),
        }
    }

    pub fn strictly_inside(&self, z: &[f64]) -> bool {
        self.ineq_normals
            .iter()
            .all(|g| dot_i64_f64(g, z) > FACE_MARGIN)
    }
}

/// The closed face polyhedron of a stratum, its proper closure faces, and
/// optional restricted-family halfspaces `a.W <= b` (in wealth space).
#[derive(Debug, Clone)]
pub struct FacePolyhedron {
    pub support: SupportSet,
    pub face: FaceDescriptor,
    pub closure: Vec<FaceDescriptor>,
    /// One inequality normal per facet. The face is a cone, so these alone
    /// cut it out of its span.
    pub facet_normals: Vec<IntegerNormal>,
    pub extra: Vec<Halfspace>,
}

impl FacePolyhedron {
    pub fn from_lattice(lattice: &FaceLattice, index: usize) -> Self {
        let st = lattice.get(index);
        // Within the face's span a facet is cut out by any one normal that
        // vanishes on it, so one per facet suffices.
        let mut facet_normals: Vec<IntegerNormal> = Vec::new();
        for &f in lattice.facets(index) {
            let fs = lattice.get(f).signs();
            let j = (0..fs.len()).find(|&j| st.signs()[j] != 0 && fs[j] == 0).expect("a facet lies on a new hyperplane");
            let g: IntegerNormal = st.normals()[j].iter().map(|v| v * st.signs()[j] as i64).collect();
            if !facet_normals.contains(&g) {
                facet_normals.push(g);
            }
        }
        FacePolyhedron {
            support: lattice.support().clone(),
            face: FaceDescriptor::from_stratum(st),
            facet_normals,
            closure: lattice
                .closure_faces(index)
                .into_iter()
                .map(|i| FaceDescriptor::from_stratum(lattice.get(i)))
                .collect(),
            extra: Vec::new(),
        }
    }

    pub fn with_extra(mut self, extra: Vec<Halfspace>) -> Self {
        self.extra = extra;
        self
    }

    pub fn eq_normals(&self) -> &[IntegerNormal] {
        &self.face.eq_normals
    }

    pub fn ineq_normals(&self) -> &[IntegerNormal] {
        &self.face.ineq_normals
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SolveStatus {
    /// The maximizer over the closure lies in the open face.
    InteriorMax { z: Vec<f64>, value: f64 },
    /// The maximizer over the closure lies on the proper closure face
    /// `face`; `tight` lists the inequality normals (by position among the
    /// face's inequalities) that vanish there.
    OnClosureBoundary {
        z: Vec<f64>,
        value: f64,
        tight: Vec<usize>,
        face: usize,
    },
    /// `psi` increases without bound along `direction` inside the closure;
    /// the coordinates outside `limit_support` tend to zero.
    SupportCollapse {
        direction: Vec<f64>,
        limit_support: SupportSet,
    },
    /// Restricted family only: the relaxation maximizer lies outside this
    /// stratum; `value` bounds the stratum and is attained at `point`.
    Relaxed { value: f64 },
    /// Restricted family only: no strictly feasible point on this support.
    Infeasible,
}

#[derive(Debug, Clone)]
pub struct SolveOutcome {
    pub status: SolveStatus,
    pub iterations: usize,
    pub kkt_residual: f64,
    /// `psi` after each accepted Newton step.
    pub psi_history: Vec<f64>,
    /// Wealth profile at the reported maximizer, exact when in closed form.
    pub point: Option<WealthProfile>,
    /// True when the closed-form shadow point was used.
    pub fast_path: bool,
}

#[derive(Debug, Clone)]
pub struct SolveOptions {
    pub fast_path: bool,
    /// Start in ratio coordinates; must lie in the face's span.
    pub start: Option<Vec<f64>>,
    pub max_iterations: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            fast_path: true,
            start: None,
            max_iterations: MAX_ITERATIONS,
        }
    }
}

pub fn maximize_on_face(obj: &StratumObjective, poly: &FacePolyhedron) -> Result<SolveOutcome> {
    maximize_on_face_with(obj, poly, &SolveOptions::default())
}

pub fn maximize_on_face_with(
    obj: &StratumObjective,
    poly: &FacePolyhedron,
    opts: &SolveOptions,
) -> Result<SolveOutcome> {
    if obj.support != poly.support {
        return Err(Error::Internal(format!(
            "objective on {} but face on {}",
            obj.support, poly.support
        )));
    }
    if !poly.extra.is_empty() {
        return solve_relaxed(obj, poly);
    }
    let full_support = obj.k.support() == obj.support.indices();

    if opts.fast_path && full_support {
        if let Some(out) = shadow_fast_path(obj, &poly.face) {
            return Ok(out);
        }
    }

    if let Some((direction, limit_support)) = ascent_ray(obj, &poly.face.eq_normals, &poly.facet_normals) {
        return Ok(SolveOutcome {
            status: SolveStatus::SupportCollapse {
                direction,
                limit_support,
            },
            iterations: 0,
            kkt_residual: f64::NAN,
            psi_history: Vec::new(),
            point: None,
            fast_path: false,
        });
    }

    let start = opts.start.clone().unwrap_or_else(|| poly.face.interior.clone());
    let mut iterations = 0;
    let mut history = Vec::new();
    if ascent_ray(obj, &poly.face.eq_normals, &[]).is_none() {
        let run = newton_on_span(obj, &poly.face.eq_normals, &start, opts.max_iterations)?;
        iterations += run.iterations;
        history = run.history.clone();
        if !run.diverged && poly.face.strictly_inside(&run.z) {
            let value = obj.value(&run.z).exp();
            let point = face_point(obj, &poly.face, &run.z);
            return Ok(SolveOutcome {
                status: SolveStatus::InteriorMax { z: run.z, value },
                iterations,
                kkt_residual: run.residual,
                psi_history: history,
                point: Some(point),
                fast_path: false,
            });
        }
    }

    // The maximizer exists on the closure but not in the open face.
    let mut best: Option<(f64, &FaceDescriptor, NewtonRun)> = None;
    for g in &poly.closure {
        if ascent_ray(obj, &g.eq_normals, &[]).is_some() {
            continue;
        }
        let run = newton_on_span(obj, &g.eq_normals, &g.interior, opts.max_iterations)?;
        iterations += run.iterations;
        if run.diverged || !g.strictly_inside(&run.z) {
            continue;
        }
        let v = obj.value(&run.z);
        if best.as_ref().is_none_or(|(bv, _, _)| v > *bv) {
            best = Some((v, g, run));
        }
    }
    let Some((v, g, run)) = best else {
        return Err(Error::Internal(format!(
            "no closure face holds the maximizer for count {} on {}",
            obj.k, obj.support
        )));
    };
    let tight = poly
        .face
        .ineq_normals
        .iter()
        .enumerate()
        .filter(|(_, n)| dot_i64_f64(n, &run.z).abs() <= FACE_MARGIN)
        .map(|(j, _)| j)
        .collect();
    let point = face_point(obj, g, &run.z);
    Ok(SolveOutcome {
        status: SolveStatus::OnClosureBoundary {
            z: run.z,
            value: v.exp(),
            tight,
            face: g.index,
        },
        iterations,
        kkt_residual: run.residual,
        psi_history: history,
        point: Some(point),
        fast_path: false,
    })
}

/// Wealth profile at `z` on face `g`; exact when the face is the origin.
fn face_point(obj: &StratumObjective, g: &FaceDescriptor, z: &[f64]) -> WealthProfile {
    if g.eq_normals.len() >= obj.dim() && linalg::rank(&g.eq_normals, obj.dim()) == obj.dim() {
        if let Some(q) = &obj.q_exact {
            let ones = vec![BigRational::one(); obj.dim()];
            return geometry::from_ratios_exact(&obj.support, &ones, q);
        }
    }
    geometry::from_ratio(
        &RatioPoint {
            support: obj.support.clone(),
            z: z.to_vec(),
        },
        &obj.q,
    )
}

/// Shadow point in closed form, if it realizes the face.
fn shadow_fast_path(obj: &StratumObjective, face: &FaceDescriptor) -> Option<SolveOutcome> {
    let s = &obj.support;
    let r = s.anchor();
    let inside = match &obj.q_exact {
        Some(q) => {
            // rho_i = W_i / W_r; sign(g.z) = sign(prod rho^g - 1).
            let rho: Vec<BigRational> = s
                .free()
                .iter()
                .map(|&i| (int(obj.k.get(i) as i64) / &q[i]) / (int(obj.k.get(r) as i64) / &q[r]))
                .collect();
            let cmp = |g: &IntegerNormal| -> std::cmp::Ordering {
                let mut prod = BigRational::one();
                for (gi, ri) in g.iter().zip(&rho) {
                    prod *= rational::pow(ri, *gi);
                }
                prod.cmp(&BigRational::one())
            };
            face.eq_normals.iter().all(|g| cmp(g).is_eq())
                && face.ineq_normals.iter().all(|g| cmp(g).is_gt())
        }
        None => {
            let z = shadow_z(obj);
            face.eq_normals.iter().all(|g| dot_i64_f64(g, &z).abs() <= 1e-12 * (1.0 + z.iter().map(|v| v.abs()).sum::<f64>()))
                && face.strictly_inside(&z)
        }
    };
    if !inside {
        return None;
    }
    let z = shadow_z(obj);
    let sol = shadow::shadow_solution(&obj.k, obj.n, &obj.q, obj.q_exact.as_deref());
    Some(SolveOutcome {
        status: SolveStatus::InteriorMax {
            z,
            value: sol.value,
        },
        iterations: 0,
        kkt_residual: 0.0,
        psi_history: Vec::new(),
        point: Some(sol.point),
        fast_path: true,
    })
}

fn shadow_z(obj: &StratumObjective) -> Vec<f64> {
    let r = obj.support.anchor();
    let wr = obj.k.get(r) as f64 / obj.q[r];
    obj.support
        .free()
        .iter()
        .map(|&i| (obj.k.get(i) as f64 / obj.q[i] / wr).ln())
        .collect()
}

/// Exact search for a nonzero `v` in the cone `{eq.v = 0, ineq.v >= 0}` along
/// which `psi` keeps increasing: with `v~` the lift (`v~_r = 0`), `v~` is
/// constant (= M) on supp(k) and at most M elsewhere. Returns the direction
/// and the limit support `{j : v~_j = M}`.
pub fn ascent_ray(
    obj: &StratumObjective,
    eq: &[IntegerNormal],
    ineq: &[IntegerNormal],
) -> Option<(Vec<f64>, SupportSet)> {
    let s = &obj.support;
    let d = obj.dim();
    if d == 0 {
        return None;
    }
    // An independent subset of the equalities has the same solution set and
    // keeps the exact tableau small on low-dimensional faces.
    let mut basis: Vec<IntegerNormal> = Vec::new();
    for g in eq {
        if basis.len() == d {
            break;
        }
        basis.push(g.clone());
        if linalg::rank(&basis, d) < basis.len() {
            basis.pop();
        }
    }
    let eq = basis.as_slice();
    // Variables: v_0..v_{d-1}, M.
    let nv = d + 1;
    let mut lp = LinearProgram::new(nv);
    lp.set_all_free();
    let lifted = |pos: usize| -> Vec<BigRational> {
        // Coefficients of v~_{S[pos]} - M.
        let mut row = vec![BigRational::zero(); nv];
        if pos > 0 {
            row[pos - 1] = BigRational::one();
        }
        row[d] = -BigRational::one();
        row
    };
    let mut sum = vec![BigRational::zero(); nv];
    for (pos, &i) in s.indices().iter().enumerate() {
        let row = lifted(pos);
        for (a, b) in sum.iter_mut().zip(&row) {
            *a -= b;
        }
        if obj.k.get(i) > 0 {
            lp.add(row, Relation::Eq, BigRational::zero());
        } else {
            lp.add(row, Relation::Le, BigRational::zero());
        }
    }
    lp.add(sum, Relation::Ge, BigRational::one());
    for (g, rel) in eq
        .iter()
        .map(|g| (g, Relation::Eq))
        .chain(ineq.iter().map(|g| (g, Relation::Ge)))
    {
        let mut row: Vec<BigRational> = g.iter().map(|&x| int(x)).collect();
        row.push(BigRational::zero());
        lp.add(row, rel, BigRational::zero());
    }
    let x = match lp.solve() {
        LpResult::Optimal { x, .. } => x,
        _ => return None,
    };
    let m = &x[d];
    let limit: Vec<usize> = s
        .indices()
        .iter()
        .enumerate()
        .filter(|&(pos, _)| {
            let v = if pos == 0 { BigRational::zero() } else { x[pos - 1].clone() };
            (v - m).is_zero()
        })
        .map(|(_, &i)| i)
        .collect();
    let direction = x[..d].iter().map(to_f64).collect();
    Some((direction, SupportSet::new(limit).expect("supp(k) is nonempty")))
}

#[derive(Debug, Clone)]
pub(crate) struct NewtonRun {
    pub z: Vec<f64>,
    pub iterations: usize,
    pub residual: f64,
    pub history: Vec<f64>,
    pub diverged: bool,
}

/// Damped Newton for `psi` restricted to `{eq.z = 0}`, parametrized by the
/// nullspace basis (coordinates are the basis's free columns).
pub(crate) fn newton_on_span(
    obj: &StratumObjective,
    eq: &[IntegerNormal],
    start: &[f64],
    max_iterations: usize,
) -> Result<NewtonRun> {
    let d = obj.dim();
    let ns = linalg::nullspace(eq, d);
    let basis = ns.to_f64();
    let r = basis.len();
    let lift = |y: &[f64]| -> Vec<f64> {
        let mut z = vec![0.0; d];
        for (b, yj) in basis.iter().zip(y) {
            for (zi, bi) in z.iter_mut().zip(b) {
                *zi += bi * yj;
            }
        }
        z
    };
    let mut y: Vec<f64> = ns.free.iter().map(|&c| start[c]).collect();
    let mut z = lift(&y);
    let mut f = obj.value(&z);
    let mut history = vec![f];
    if r == 0 {
        return Ok(NewtonRun {
            z,
            iterations: 0,
            residual: 0.0,
            history,
            diverged: false,
        });
    }
    let tol = 1e-10 * (obj.n as f64).max(1.0);
    let bmat = DMatrix::from_fn(d, r, |i, j| basis[j][i]);
    let mut residual = f64::INFINITY;
    for it in 0..max_iterations {
        let g = bmat.transpose() * DVector::from_vec(obj.gradient(&z));
        residual = g.amax();
        if residual <= tol {
            return Ok(NewtonRun {
                z,
                iterations: it,
                residual,
                history,
                diverged: false,
            });
        }
        if z.iter().any(|v| v.abs() > DIVERGENCE_BOUND) {
            return Ok(NewtonRun {
                z,
                iterations: it,
                residual,
                history,
                diverged: true,
            });
        }
        let neg_h = -(bmat.transpose() * obj.hessian(&z) * &bmat);
        let step = match neg_h.clone().cholesky() {
            Some(ch) => ch.solve(&g),
            None => {
                // Far out the weights saturate; regularize.
                let reg = neg_h + DMatrix::identity(r, r) * (1e-12 + g.amax());
                match reg.cholesky() {
                    Some(ch) => ch.solve(&g),
                    None => g.clone(),
                }
            }
        };
        let slope = g.dot(&step);
        if slope <= 1e-13 * (1.0 + f.abs()) {
            // Quadratic region: the gain is below the resolution of psi, so
            // the line search cannot judge it; take the full step.
            for (yi, si) in y.iter_mut().zip(step.iter()) {
                *yi += si;
            }
            z = lift(&y);
            f = obj.value(&z);
            history.push(f);
            continue;
        }
        let mut t = 1.0;
        loop {
            let y_new: Vec<f64> = y.iter().zip(step.iter()).map(|(a, b)| a + t * b).collect();
            let z_new = lift(&y_new);
            let f_new = obj.value(&z_new);
            if f_new >= f + ARMIJO_C * t * slope {
                y = y_new;
                z = z_new;
                f = f_new;
                break;
            }
            t *= 0.5;
            if t < 1e-16 {
                // No further progress in floating point.
                return Ok(NewtonRun {
                    z,
                    iterations: it,
                    residual,
                    history,
                    diverged: false,
                });
            }
        }
        history.push(f);
    }
    Err(Error::IterationCap {
        iterations: max_iterations,
        residual,
    })
}

fn solve_relaxed(obj: &StratumObjective, poly: &FacePolyhedron) -> Result<SolveOutcome> {
    let sol = relaxed_max(&obj.upper_set, &obj.support, &obj.q, &poly.extra)?;
    Ok(classify_relaxed(obj, &poly.face, sol.as_ref()))
}

/// Status of a stratum given the relaxation maximizer on its support.
pub fn classify_relaxed(obj: &StratumObjective, face: &FaceDescriptor, sol: Option<&RelaxedSolution>) -> SolveOutcome {
    let Some(sol) = sol else {
        return SolveOutcome {
            status: SolveStatus::Infeasible,
            iterations: 0,
            kkt_residual: f64::NAN,
            psi_history: Vec::new(),
            point: None,
            fast_path: false,
        };
    };
    let r = obj.support.anchor();
    let z: Vec<f64> = obj
        .support
        .free()
        .iter()
        .map(|&i| (sol.w[i] / sol.w[r]).ln())
        .collect();
    let status = if face.eq_normals.iter().all(|g| dot_i64_f64(g, &z).abs() <= FACE_MARGIN) && face.strictly_inside(&z) {
        SolveStatus::InteriorMax {
            value: obj.value(&z).exp(),
            z,
        }
    } else {
        SolveStatus::Relaxed {
            value: sol.log_value.exp(),
        }
    };
    SolveOutcome {
        status,
        iterations: sol.iterations,
        kkt_residual: sol.gap,
        psi_history: Vec::new(),
        point: Some(WealthProfile::new(sol.w.clone())),
        fast_path: false,
    }
}

/// Largest `|g.z|` over equality normals; zero on the span.
pub fn span_residual(eq: &[IntegerNormal], z: &[f64]) -> f64 {
    eq.iter().map(|g| dot_i64_f64(g, z).abs()).fold(0.0, f64::max)
}

/// True if the exact point `z` lies in the open face.
pub fn face_contains_exact(face: &FaceDescriptor, z: &[BigRational]) -> bool {
    face.eq_normals.iter().all(|g| linalg::dot_i64_rat(g, z).is_zero())
        && face.ineq_normals.iter().all(|g| linalg::dot_i64_rat(g, z).is_positive())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arrangement::enumerate_strata;
    use crate::problem::ProblemInstance;
    use crate::rational::parse_rational as pr;

    fn k(v: &[u32]) -> CountVector {
        CountVector::new(v.to_vec())
    }

    fn binary_setup() -> (ProblemInstance, FaceLattice) {
        let b = ProblemInstance::parse(&["0.6", "0.4"], &["1", "1"], 3, "1/2").unwrap();
        let lat = enumerate_strata(&b, &SupportSet::full(2)).unwrap();
        (b, lat)
    }

    fn obj(inst: &ProblemInstance, kv: &[u32], s: SupportSet) -> StratumObjective {
        StratumObjective::new(k(kv), s, inst.q(), inst.n())
            .unwrap()
            .with_exact_prices(inst.q_exact().unwrap())
    }

    #[test]
    fn psi_examples() {
        let o = StratumObjective::new(k(&[1, 1, 0]), SupportSet::new(vec![0, 1]).unwrap(), &[1.0 / 3.0; 3], 2).unwrap();
        assert!((o.value(&[0.0]) - 2.25f64.ln()).abs() < 1e-14);
        let o = StratumObjective::new(k(&[2, 1]), SupportSet::full(2), &[1.0, 1.0], 3).unwrap();
        assert!((o.value(&[0.5f64.ln()]) - (4.0f64 / 27.0).ln()).abs() < 1e-14);
        assert!(o.gradient(&[0.5f64.ln()])[0].abs() < 1e-14);
    }

    #[test]
    fn binary_chambers() {
        let (b, lat) = binary_setup();
        let full = SupportSet::full(2);
        // U > D: closed-form interior maximum.
        let out = maximize_on_face(&obj(&b, &[2, 1], full.clone()), &FacePolyhedron::from_lattice(&lat, 0)).unwrap();
        assert!(out.fast_path);
        assert!(matches!(out.status, SolveStatus::InteriorMax { .. }));
        assert_eq!(out.point.unwrap().to_strings(), ["2/3", "1/3"]);
        // U < D: pushed to the wall.
        let out = maximize_on_face(&obj(&b, &[2, 1], full), &FacePolyhedron::from_lattice(&lat, 1)).unwrap();
        match out.status {
            SolveStatus::OnClosureBoundary { face, value, .. } => {
                assert_eq!(face, 2);
                assert!((value - 0.125).abs() < 1e-15);
            }
            other => panic!("{other:?}"),
        }
        assert_eq!(out.point.unwrap().to_strings(), ["1/2", "1/2"]);
    }

    #[test]
    fn ternary_face_escapes_to_tie_wall() {
        let t = ProblemInstance::parse(&["0.6", "0.3", "0.1"], &["1/3", "1/3", "1/3"], 2, "1/2").unwrap();
        let s12 = SupportSet::new(vec![0, 1]).unwrap();
        let lat = enumerate_strata(&t, &s12).unwrap();
        // W_1 > W_2 is z < 0.
        let idx = lat.find(&[-1]).unwrap();
        let out = maximize_on_face(&obj(&t, &[1, 1, 0], s12), &FacePolyhedron::from_lattice(&lat, idx)).unwrap();
        match out.status {
            SolveStatus::OnClosureBoundary { face, .. } => assert_eq!(lat.get(face).signs(), &[0]),
            other => panic!("{other:?}"),
        }
        assert_eq!(out.point.unwrap().to_strings(), ["3/2", "3/2", "0"]);
    }

    #[test]
    fn collapse_certificate() {
        let t = ProblemInstance::parse(&["0.6", "0.3", "0.1"], &["1/3", "1/3", "1/3"], 2, "1/2").unwrap();
        let lat = enumerate_strata(&t, &SupportSet::full(3)).unwrap();
        let z = crate::geometry::to_ratio(&WealthProfile::new(vec![1.8, 0.9, 0.3]), t.q());
        let a = lat.locate(&z.z).unwrap();
        let out = maximize_on_face(&obj(&t, &[1, 1, 0], SupportSet::full(3)), &FacePolyhedron::from_lattice(&lat, a)).unwrap();
        match out.status {
            SolveStatus::SupportCollapse { limit_support, .. } => assert_eq!(limit_support.indices(), &[0, 1]),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn forced_newton_matches_closed_form() {
        let (b, lat) = binary_setup();
        let o = obj(&b, &[2, 1], SupportSet::full(2));
        let opts = SolveOptions {
            fast_path: false,
            ..SolveOptions::default()
        };
        let out = maximize_on_face_with(&o, &FacePolyhedron::from_lattice(&lat, 0), &opts).unwrap();
        match out.status {
            SolveStatus::InteriorMax { value, .. } => assert!((value / (4.0 / 27.0) - 1.0).abs() < 1e-10),
            other => panic!("{other:?}"),
        }
        assert!(out.psi_history.windows(2).all(|w| w[1] >= w[0] - 1e-14 * w[0].abs()));
        assert!(out.kkt_residual <= 3e-10);
        let _ = pr("1");
    }
}
