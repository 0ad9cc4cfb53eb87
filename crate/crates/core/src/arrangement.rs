//! Central arrangements of count-difference hyperplanes in the ratio chart
//! of each support face, and their relatively open faces (strata).
//!
//! Faces are built flat by flat, from the smallest flat upward. Every face
//! of a flat `X` other than the minimal one has a facet on some hyperplane
//! flat `Y` of `X`; conversely each face `G` of `Y` bounds exactly two faces
//! of `X`, reached by stepping off `G` in either direction transverse to
//! `Y`. All witness points are integer vectors, so sign vectors are exact.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rayon::prelude::*;
use serde_json::json;

use crate::error::{Error, Result};
use crate::geometry::RatioPoint;
use crate::linalg::{self, canonicalize, dot_i64_big, dot_i64_rat, primitive, sign_of};
use crate::lp::{LinearProgram, Relation};
use crate::problem::{support_sets, CountVector, ProblemInstance, SupportSet};
use crate::rational::{int, to_f64};

/// Margin required of [`interior_point`] on every nonzero sign.
pub const INTERIOR_MARGIN: f64 = 1e-6;

/// A primitive integer normal over the free coordinates `S \ {anchor}`,
/// first nonzero entry positive.
pub type IntegerNormal = Vec<i64>;

/// Projects `k - l` onto the free coordinates of `s`.
pub fn projected_difference(k: &CountVector, l: &CountVector, s: &SupportSet) -> Vec<i64> {
    s.free()
        .iter()
        .map(|&i| k.get(i) as i64 - l.get(i) as i64)
        .collect()
}

/// Canonical deduplicated normals of all pairwise count differences, sorted.
pub fn difference_normals(counts: &[CountVector], s: &SupportSet) -> Vec<IntegerNormal> {
    let inside: Vec<&CountVector> = counts.iter().filter(|k| k.supported_in(s.indices())).collect();
    let mut out: Vec<IntegerNormal> = Vec::new();
    for (a, k) in inside.iter().enumerate() {
        for l in &inside[a + 1..] {
            if let Some((g, _)) = canonicalize(&projected_difference(k, l, s)) {
                out.push(g);
            }
        }
    }
    out.sort();
    out.dedup();
    out
}

/// A support set plus one relatively open face of its arrangement.
#[derive(Debug, Clone)]
pub struct Stratum {
    support: SupportSet,
    normals: Arc<Vec<IntegerNormal>>,
    signs: Vec<i8>,
    dim: usize,
    index: usize,
    interior: Vec<BigRational>,
    rays: Vec<Vec<f64>>,
}

impl PartialEq for Stratum {
    fn eq(&self, other: &Self) -> bool {
        self.support == other.support && self.signs == other.signs
    }
}

impl Stratum {
    pub fn support(&self) -> &SupportSet {
        &self.support
    }

    pub fn normals(&self) -> &[IntegerNormal] {
        &self.normals
    }

    /// Signs aligned with [`normals`](Self::normals).
    pub fn signs(&self) -> &[i8] {
        &self.signs
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Position in the enumeration order of its support set.
    pub fn index(&self) -> usize {
        self.index
    }

    pub fn rank(&self) -> (usize, usize) {
        (self.support.len(), self.dim)
    }

    pub fn key(&self) -> StratumKey {
        StratumKey {
            support: self.support.clone(),
            index: self.index,
        }
    }

    /// Exact interior point in ratio coordinates.
    pub fn interior_exact(&self) -> &[BigRational] {
        &self.interior
    }

    /// Generators (unit sup-norm) of the extreme rays of the closed face.
    pub fn rays(&self) -> &[Vec<f64>] {
        &self.rays
    }

    /// Sign of `d . z` for normal `j`, extended to non-canonical multiples.
    pub fn sign_of_difference(&self, diff: &[i64]) -> Option<i8> {
        let (g, c) = canonicalize(diff)?;
        let j = self.normals.binary_search(&g).ok()?;
        Some(self.signs[j] * c.signum() as i8)
    }

    /// True when `z` realizes this stratum's sign vector.
    pub fn contains(&self, z: &[f64]) -> bool {
        sign_vector_f64(&self.normals, z) == self.signs
    }

    pub fn label(&self) -> String {
        let signs: String = self
            .signs
            .iter()
            .map(|s| match s {
                -1 => '-',
                0 => '0',
                _ => '+',
            })
            .collect();
        format!("S={} F#{} [{}] dim {}", self.support, self.index, signs, self.dim)
    }
}

/// Identifies a stratum inside a [`Stratification`].
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct StratumKey {
    pub support: SupportSet,
    pub index: usize,
}

pub fn sign_vector_f64(normals: &[IntegerNormal], z: &[f64]) -> Vec<i8> {
    normals
        .iter()
        .map(|g| {
            let v = linalg::dot_i64_f64(g, z);
            if v > 0.0 {
                1
            } else if v < 0.0 {
                -1
            } else {
                0
            }
        })
        .collect()
}

pub fn sign_vector_exact(normals: &[IntegerNormal], z: &[BigRational]) -> Vec<i8> {
    normals
        .iter()
        .map(|g| {
            let v = dot_i64_rat(g, z);
            if v.is_positive() {
                1
            } else if v.is_negative() {
                -1
            } else {
                0
            }
        })
        .collect()
}

/// All strata of one support set.
#[derive(Debug, Clone)]
pub struct FaceLattice {
    support: SupportSet,
    normals: Arc<Vec<IntegerNormal>>,
    strata: Vec<Stratum>,
    facets: Vec<Vec<usize>>,
    index: HashMap<Vec<i8>, usize>,
}

impl FaceLattice {
    pub fn support(&self) -> &SupportSet {
        &self.support
    }

    pub fn normals(&self) -> &[IntegerNormal] {
        &self.normals
    }

    pub fn strata(&self) -> &[Stratum] {
        &self.strata
    }

    pub fn len(&self) -> usize {
        self.strata.len()
    }

    pub fn is_empty(&self) -> bool {
        self.strata.is_empty()
    }

    pub fn get(&self, index: usize) -> &Stratum {
        &self.strata[index]
    }

    /// Faces of codimension one in the closure of stratum `index`.
    pub fn facets(&self, index: usize) -> &[usize] {
        &self.facets[index]
    }

    /// Every face of the closure of `index` other than itself, in
    /// enumeration order.
    pub fn closure_faces(&self, index: usize) -> Vec<usize> {
        reachable(&self.facets[index], |f| &self.facets[f])
    }

    pub fn find(&self, signs: &[i8]) -> Option<usize> {
        self.index.get(signs).copied()
    }

    pub fn locate(&self, z: &[f64]) -> Option<usize> {
        self.find(&sign_vector_f64(&self.normals, z))
    }

    pub fn locate_exact(&self, z: &[BigRational]) -> Option<usize> {
        self.find(&sign_vector_exact(&self.normals, z))
    }

    /// Debug dump: strata with signs, dimensions and facet links.
    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "support": self.support.indices().iter().map(|i| i + 1).collect::<Vec<_>>(),
            "normals": *self.normals,
            "strata": self.strata.iter().map(|s| json!({
                "index": s.index,
                "signs": s.signs,
                "dim": s.dim,
                "interior": s.interior.iter().map(to_f64).collect::<Vec<_>>(),
                "facets": self.facets[s.index],
            })).collect::<Vec<_>>(),
        })
    }
}

struct Flat {
    zero: Vec<bool>,
    basis: Vec<Vec<i64>>,
    covers: Vec<usize>,
}

fn integer_basis(zero_rows: &[Vec<i64>], d: usize) -> Vec<Vec<i64>> {
    linalg::nullspace(zero_rows, d)
        .basis
        .into_iter()
        .map(|v| {
            let lcm = v
                .iter()
                .fold(BigInt::one(), |acc, x| num_integer::lcm(acc, x.denom().clone()));
            let mut ints: Vec<BigInt> = v.iter().map(|x| (x * &lcm).to_integer()).collect();
            primitive(&mut ints);
            ints.iter()
                .map(|x| i64::try_from(x).expect("flat basis entry fits in i64"))
                .collect()
        })
        .collect()
}

fn dot_i64(a: &[i64], b: &[i64]) -> i64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn build_flats(normals: &[IntegerNormal], d: usize) -> Vec<Flat> {
    let n = normals.len();
    let zero_set = |basis: &[Vec<i64>]| -> Vec<bool> {
        normals
            .iter()
            .map(|g| basis.iter().all(|b| dot_i64(g, b) == 0))
            .collect()
    };
    let top_basis: Vec<Vec<i64>> = (0..d)
        .map(|i| (0..d).map(|j| i64::from(i == j)).collect())
        .collect();
    let mut flats = vec![Flat {
        zero: vec![false; n],
        basis: top_basis,
        covers: Vec::new(),
    }];
    let mut ids: HashMap<Vec<bool>, usize> = HashMap::new();
    ids.insert(vec![false; n], 0);
    let mut next = 0;
    while next < flats.len() {
        let x = next;
        next += 1;
        let mut done = flats[x].zero.clone();
        let mut covers = Vec::new();
        for h in 0..n {
            if done[h] {
                continue;
            }
            let rows: Vec<Vec<i64>> = (0..n)
                .filter(|&g| flats[x].zero[g] || g == h)
                .map(|g| normals[g].clone())
                .collect();
            let basis = integer_basis(&rows, d);
            let zero = zero_set(&basis);
            for (g, &z) in zero.iter().enumerate() {
                done[g] |= z;
            }
            let id = match ids.get(&zero) {
                Some(&id) => id,
                None => {
                    let id = flats.len();
                    ids.insert(zero.clone(), id);
                    flats.push(Flat {
                        zero,
                        basis,
                        covers: Vec::new(),
                    });
                    id
                }
            };
            covers.push(id);
        }
        flats[x].covers = covers;
    }
    flats
}

struct RawFace {
    signs: Vec<i8>,
    point: Vec<BigInt>,
    dim: usize,
    facets: Vec<usize>,
}

fn signs_of(normals: &[IntegerNormal], x: &[BigInt]) -> Vec<i8> {
    normals.iter().map(|g| sign_of(&dot_i64_big(g, x))).collect()
}

/// Enumerates every relatively open face of the arrangement of `normals` in
/// `R^d`.
fn enumerate_faces(normals: &[IntegerNormal], d: usize) -> Vec<RawFace> {
    let flats = build_flats(normals, d);
    let mut order: Vec<usize> = (0..flats.len()).collect();
    order.sort_by_key(|&f| flats[f].basis.len());

    let mut faces: Vec<RawFace> = Vec::new();
    let mut by_signs: HashMap<Vec<i8>, usize> = HashMap::new();
    let mut faces_of_flat: Vec<Vec<usize>> = vec![Vec::new(); flats.len()];

    for &x in &order {
        let flat = &flats[x];
        if flat.covers.is_empty() {
            // Minimal flat: a single face on which every normal vanishes.
            let signs = vec![0i8; normals.len()];
            let id = faces.len();
            by_signs.insert(signs.clone(), id);
            faces.push(RawFace {
                signs,
                point: vec![BigInt::zero(); d],
                dim: flat.basis.len(),
                facets: Vec::new(),
            });
            faces_of_flat[x].push(id);
            continue;
        }
        for &y in &flat.covers {
            let sub = &flats[y];
            // A direction inside X but transverse to Y.
            let cut: Vec<usize> = (0..normals.len())
                .filter(|&g| sub.zero[g] && !flat.zero[g])
                .collect();
            let t = flat
                .basis
                .iter()
                .find(|b| cut.iter().any(|&g| dot_i64(&normals[g], b) != 0))
                .expect("cover flat is a proper subspace");
            for &gf in &faces_of_flat[y].clone() {
                let xg = faces[gf].point.clone();
                let bound = normals
                    .iter()
                    .map(|g| dot_i64(g, t).abs())
                    .max()
                    .unwrap_or(0);
                let k = BigInt::from(bound + 1);
                for dir in [1i64, -1] {
                    let mut p: Vec<BigInt> = xg
                        .iter()
                        .zip(t)
                        .map(|(a, &b)| a * &k + BigInt::from(dir * b))
                        .collect();
                    primitive(&mut p);
                    let signs = signs_of(normals, &p);
                    let id = match by_signs.get(&signs) {
                        Some(&id) => id,
                        None => {
                            let id = faces.len();
                            by_signs.insert(signs.clone(), id);
                            faces.push(RawFace {
                                signs,
                                point: p,
                                dim: flat.basis.len(),
                                facets: Vec::new(),
                            });
                            faces_of_flat[x].push(id);
                            id
                        }
                    };
                    if !faces[id].facets.contains(&gf) {
                        faces[id].facets.push(gf);
                    }
                }
            }
        }
    }
    faces
}

/// Faces reachable through facet links from `start`, ascending.
fn reachable<'a>(start: &[usize], facets: impl Fn(usize) -> &'a [usize]) -> Vec<usize> {
    let mut seen = HashSet::new();
    let mut stack = start.to_vec();
    while let Some(g) = stack.pop() {
        if seen.insert(g) {
            stack.extend_from_slice(facets(g));
        }
    }
    let mut out: Vec<usize> = seen.into_iter().collect();
    out.sort_unstable();
    out
}

fn closure_of(faces: &[RawFace], f: usize) -> Vec<usize> {
    reachable(&[f], |g| &faces[g].facets)
}

fn sup_norm(v: &[BigInt]) -> BigInt {
    v.iter().map(|x| x.abs()).max().unwrap_or_else(BigInt::zero)
}

/// Sum of the unit sup-norm ray generators of the closed face, rescaled to
/// sup-norm 1. For a pointed cone this lies in the relative interior.
fn interior_of(faces: &[RawFace], f: usize, normals: &[IntegerNormal]) -> (Vec<BigRational>, Vec<Vec<f64>>) {
    let face = &faces[f];
    let d = face.point.len();
    if face.dim == 0 {
        return (vec![BigRational::zero(); d], Vec::new());
    }
    let rays: Vec<&RawFace> = closure_of(faces, f)
        .into_iter()
        .map(|g| &faces[g])
        .filter(|g| g.dim == 1)
        .collect();
    let norms: Vec<BigInt> = rays.iter().map(|r| sup_norm(&r.point)).collect();
    // The sum scaled by the lcm of the norms, kept in integers.
    let l = norms.iter().fold(BigInt::one(), |acc, s| num_integer::lcm(acc, s.clone()));
    let mut sum = vec![BigInt::zero(); d];
    for (r, s) in rays.iter().zip(&norms) {
        let w = &l / s;
        for (a, b) in sum.iter_mut().zip(&r.point) {
            *a += b * &w;
        }
    }
    if rays.is_empty() || signs_of(normals, &sum) != face.signs {
        // Cone with a lineality space: fall back to the witness point.
        sum = face.point.clone();
    }
    let s = sup_norm(&sum);
    let mut z: Vec<BigRational> = sum.iter().map(|x| BigRational::new(x.clone(), s.clone())).collect();
    // Enforce the float margin by scaling inside the box |z| <= 10.
    let margin = normals
        .iter()
        .zip(&face.signs)
        .filter(|(_, &s)| s != 0)
        .map(|(g, _)| to_f64(&BigRational::new(dot_i64_big(g, &sum), s.clone())).abs())
        .fold(f64::INFINITY, f64::min);
    if margin.is_finite() && margin < INTERIOR_MARGIN {
        let factor = (10.0f64).min(2.0 * INTERIOR_MARGIN / margin).ceil() as i64;
        for a in z.iter_mut() {
            *a *= int(factor);
        }
    }
    let rays = rays
        .iter()
        .zip(&norms)
        .map(|(r, s)| r.point.iter().map(|x| to_f64(&BigRational::new(x.clone(), s.clone()))).collect())
        .collect();
    (z, rays)
}

/// Enumerates the strata of support set `s` for `inst`.
pub fn enumerate_strata(inst: &ProblemInstance, s: &SupportSet) -> Result<FaceLattice> {
    s.check(inst.m())?;
    let normals = difference_normals(inst.counts(), s);
    let d = s.len() - 1;
    let mut raw = enumerate_faces(&normals, d);

    for face in &raw {
        if face.signs != signs_of(&normals, &face.point) {
            return Err(Error::Internal(format!(
                "witness does not realize sign vector {:?}",
                face.signs
            )));
        }
    }

    // Enumeration order: dimension descending, then sign vector.
    let mut order: Vec<usize> = (0..raw.len()).collect();
    order.sort_by(|&a, &b| raw[b].dim.cmp(&raw[a].dim).then_with(|| raw[a].signs.cmp(&raw[b].signs)));
    let mut position = vec![0; raw.len()];
    for (pos, &f) in order.iter().enumerate() {
        position[f] = pos;
    }
    let interiors: Vec<(Vec<BigRational>, Vec<Vec<f64>>)> = order
        .iter()
        .map(|&f| interior_of(&raw, f, &normals))
        .collect();

    let normals = Arc::new(normals);
    let mut strata = Vec::with_capacity(raw.len());
    let mut facets = Vec::with_capacity(raw.len());
    let mut index = HashMap::new();
    for ((pos, &f), (interior, rays)) in order.iter().enumerate().zip(interiors) {
        let face = &mut raw[f];
        let mut fs: Vec<usize> = face.facets.iter().map(|&g| position[g]).collect();
        fs.sort_unstable();
        facets.push(fs);
        index.insert(face.signs.clone(), pos);
        strata.push(Stratum {
            support: s.clone(),
            normals: Arc::clone(&normals),
            signs: std::mem::take(&mut face.signs),
            dim: face.dim,
            index: pos,
            interior,
            rays,
        });
    }
    Ok(FaceLattice {
        support: s.clone(),
        normals,
        strata,
        facets,
        index,
    })
}

pub fn interior_point(st: &Stratum) -> RatioPoint {
    RatioPoint {
        support: st.support.clone(),
        z: st.interior.iter().map(to_f64).collect(),
    }
}

pub fn stratum_rank(st: &Stratum) -> (usize, usize) {
    st.rank()
}

/// Face lattices of every support set, largest supports first.
#[derive(Debug, Clone)]
pub struct Stratification {
    lattices: BTreeMap<SupportSet, FaceLattice>,
    order: Vec<SupportSet>,
}

impl Stratification {
    pub fn new(inst: &ProblemInstance) -> Result<Self> {
        let order = support_sets(inst.m());
        let built: Vec<Result<FaceLattice>> = order.par_iter().map(|s| enumerate_strata(inst, s)).collect();
        let mut lattices = BTreeMap::new();
        for (s, l) in order.iter().zip(built) {
            lattices.insert(s.clone(), l?);
        }
        Ok(Stratification { lattices, order })
    }

    /// Support sets in processing order.
    pub fn supports(&self) -> &[SupportSet] {
        &self.order
    }

    pub fn lattice(&self, s: &SupportSet) -> &FaceLattice {
        &self.lattices[s]
    }

    pub fn get(&self, key: &StratumKey) -> &Stratum {
        self.lattice(&key.support).get(key.index)
    }

    pub fn total(&self) -> usize {
        self.lattices.values().map(FaceLattice::len).sum()
    }

    /// Stratum of support `s` containing the exact ratio point `z`.
    pub fn locate_exact(&self, s: &SupportSet, z: &[BigRational]) -> Option<StratumKey> {
        self.lattice(s).locate_exact(z).map(|index| StratumKey {
            support: s.clone(),
            index,
        })
    }
}

/// Child strata: closure faces on the same support, plus strata of smaller
/// supports meeting the closure of the realization (exact LP test).
pub fn child_strata(st: &Stratum, ctx: &Stratification) -> Vec<StratumKey> {
    let s = st.support();
    let lat = ctx.lattice(s);
    let mut out: Vec<StratumKey> = lat
        .closure_faces(st.index())
        .into_iter()
        .map(|index| StratumKey {
            support: s.clone(),
            index,
        })
        .collect();
    for t in ctx.supports() {
        if t.len() >= s.len() || !t.is_subset_of(s) {
            continue;
        }
        let tl = ctx.lattice(t);
        for tau in tl.strata() {
            if closure_meets(st, tau) {
                out.push(tau.key());
            }
        }
    }
    out
}

/// Lifts a normal over `free(s)` to the full index set of `s` so that
/// `g.z = g_hat.u` for log coordinates `u`.
fn lift(g: &[i64], s: &SupportSet) -> Vec<i64> {
    let mut out = vec![0i64; s.len()];
    out[0] = -g.iter().sum::<i64>();
    out[1..].copy_from_slice(g);
    out
}

/// Whether stratum `tau` (smaller support) meets the closure of `sigma`.
///
/// Variables are a base point `p` and a direction `b` in log coordinates of
/// `S`; `b` vanishes on `T` and is at most -1 off `T`. Then `p + t b` stays in
/// `sigma` for all `t >= 1` and its limit has support `T` and lies in `tau`.
pub fn closure_meets(sigma: &Stratum, tau: &Stratum) -> bool {
    let s = sigma.support();
    let t = tau.support();
    let ns = s.len();
    let nv = 2 * ns;
    let mut lp = LinearProgram::new(nv);
    lp.set_all_free();
    let row = |p: &[i64], b: &[i64]| -> Vec<BigRational> {
        p.iter().chain(b).map(|&v| int(v)).collect()
    };
    let zeros = vec![0i64; ns];
    for (pos, &i) in s.indices().iter().enumerate() {
        let mut e = zeros.clone();
        e[pos] = 1;
        if t.contains(i) {
            lp.add(row(&zeros, &e), Relation::Eq, int(0));
        } else {
            lp.add(row(&zeros, &e), Relation::Le, int(-1));
        }
    }
    for (g, &sg) in sigma.normals().iter().zip(sigma.signs()) {
        let gh = lift(g, s);
        if sg == 0 {
            lp.add(row(&gh, &zeros), Relation::Eq, int(0));
            lp.add(row(&zeros, &gh), Relation::Eq, int(0));
        } else {
            let sgh: Vec<i64> = gh.iter().map(|v| v * sg as i64).collect();
            lp.add(row(&zeros, &sgh), Relation::Ge, int(0));
            lp.add(row(&sgh, &sgh), Relation::Ge, int(1));
        }
    }
    // tau's constraints act on the T-coordinates of p.
    for (h, &sh) in tau.normals().iter().zip(tau.signs()) {
        let hh = lift(h, t);
        let mut p = zeros.clone();
        for (tpos, &i) in t.indices().iter().enumerate() {
            let spos = s.indices().iter().position(|&j| j == i).unwrap();
            p[spos] = hh[tpos] * if sh == 0 { 1 } else { sh as i64 };
        }
        if sh == 0 {
            lp.add(row(&p, &zeros), Relation::Eq, int(0));
        } else {
            lp.add(row(&p, &zeros), Relation::Ge, int(1));
        }
    }
    lp.feasible().is_some()
}
