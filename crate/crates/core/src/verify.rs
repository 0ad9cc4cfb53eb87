//! Independent checks on the exact solver: a dense simplex lattice, Monte
//! Carlo simulation of terminal wealth, and the large-horizon sweep.

use std::io::Write;

use num_bigint::BigInt;
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{log_monomial, WealthProfile};
use crate::problem::{support_sets, CountVector, ProblemInstance, SupportSet};
use crate::quantile::{QuantileEvaluator, QuantileValue, TIE_TOL};
use crate::shadow::{kelly_point, kelly_value};
use crate::solver::{solve, solve_binary_fast, RestrictedFamily};

pub const GRID_MAX_M: usize = 4;
pub const GRID_MIN_RESOLUTION: usize = 10;
const MC_CHUNK: usize = 1 << 16;
/// The Monte Carlo atom check needs this much mass beyond alpha.
pub const MC_MARGIN: f64 = 0.01;

#[derive(Debug, Clone)]
pub struct GridReport {
    pub resolution: usize,
    pub best_value: f64,
    pub best_point: WealthProfile,
    pub evaluations: usize,
}

impl GridReport {
    /// `|best - value| / value`.
    pub fn relative_gap(&self, value: f64) -> f64 {
        (self.best_value - value).abs() / value.abs().max(f64::MIN_POSITIVE)
    }
}

fn grid_guard(m: usize, resolution: usize) -> Result<()> {
    if m > GRID_MAX_M || resolution < GRID_MIN_RESOLUTION {
        return Err(Error::GridGuard { m, resolution });
    }
    Ok(())
}

/// Compositions of `total` into `parts` positive integers, in lexicographic
/// order.
fn compositions(total: usize, parts: usize, f: &mut impl FnMut(&[usize])) {
    fn rec(rest: usize, left: usize, acc: &mut Vec<usize>, f: &mut impl FnMut(&[usize])) {
        if left == 1 {
            acc.push(rest);
            f(acc);
            acc.pop();
            return;
        }
        for j in 1..=rest - (left - 1) {
            acc.push(j);
            rec(rest - j, left - 1, acc, f);
            acc.pop();
        }
    }
    if parts == 0 || total < parts {
        return;
    }
    rec(total, parts, &mut Vec::with_capacity(parts), f);
}

/// Lattice points `W_i = j_i / (R q_i)` with `j_i >= 1` exactly on `s`,
/// grouped by the first coordinate of `s` (for parallel evaluation).
fn face_slices(s: &SupportSet, resolution: usize) -> Vec<usize> {
    if s.len() == 1 {
        vec![resolution]
    } else {
        (1..=resolution - (s.len() - 1)).collect()
    }
}

fn visit_slice(s: &SupportSet, q: &[f64], resolution: usize, j0: usize, f: &mut impl FnMut(&[f64])) {
    let r = resolution as f64;
    let idx = s.indices();
    let mut w = vec![0.0; q.len()];
    w[idx[0]] = j0 as f64 / (r * q[idx[0]]);
    if idx.len() == 1 {
        f(&w);
        return;
    }
    compositions(resolution - j0, idx.len() - 1, &mut |js| {
        for (&i, &j) in idx[1..].iter().zip(js) {
            w[i] = j as f64 / (r * q[i]);
        }
        f(&w);
    });
}

/// Best lattice value on the wealth simplex, boundary faces included.
pub fn grid_oracle(inst: &ProblemInstance, resolution: usize) -> Result<GridReport> {
    grid_oracle_with(inst, resolution, None)
}

/// As [`grid_oracle`], keeping only lattice points inside `family`.
pub fn grid_oracle_with(
    inst: &ProblemInstance,
    resolution: usize,
    family: Option<&RestrictedFamily>,
) -> Result<GridReport> {
    grid_guard(inst.m(), resolution)?;
    let eval = QuantileEvaluator::new(inst);
    let q = inst.q();
    let jobs: Vec<(SupportSet, usize)> = support_sets(inst.m())
        .into_iter()
        .flat_map(|s| face_slices(&s, resolution).into_iter().map(move |j| (s.clone(), j)))
        .collect();
    let parts: Vec<(f64, Option<Vec<f64>>, usize)> = jobs
        .par_iter()
        .map(|(s, j0)| {
            let mut best = (f64::NEG_INFINITY, None, 0usize);
            visit_slice(s, q, resolution, *j0, &mut |w| {
                if family.is_some_and(|f| !f.contains(w, 1e-12)) {
                    return;
                }
                best.2 += 1;
                let v = eval.value_f64(w);
                if v > best.0 {
                    best.0 = v;
                    best.1 = Some(w.to_vec());
                }
            });
            best
        })
        .collect();
    let mut best_value = f64::NEG_INFINITY;
    let mut best_point = None;
    let mut evaluations = 0;
    for (v, w, c) in parts {
        evaluations += c;
        if v > best_value {
            best_value = v;
            best_point = w;
        }
    }
    let best_point = best_point.ok_or(Error::EmptyFamily)?;
    Ok(GridReport {
        resolution,
        best_value,
        best_point: WealthProfile::new(best_point),
        evaluations,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceRow {
    pub support: SupportSet,
    pub w: Vec<f64>,
    pub value: f64,
}

/// Quantile over the open-face lattices of every support set; together they
/// cover the lattice of the closed simplex once.
pub fn surface(inst: &ProblemInstance, resolution: usize) -> Result<Vec<SurfaceRow>> {
    grid_guard(inst.m(), resolution)?;
    let eval = QuantileEvaluator::new(inst);
    let q = inst.q();
    let mut rows = Vec::new();
    for s in support_sets(inst.m()) {
        let slices = face_slices(&s, resolution);
        let chunks: Vec<Vec<SurfaceRow>> = slices
            .par_iter()
            .map(|&j0| {
                let mut out = Vec::new();
                visit_slice(&s, q, resolution, j0, &mut |w| {
                    out.push(SurfaceRow {
                        support: s.clone(),
                        w: w.to_vec(),
                        value: eval.value_f64(w),
                    })
                });
                out
            })
            .collect();
        rows.extend(chunks.into_iter().flatten());
    }
    Ok(rows)
}

pub fn write_surface_csv<W: Write>(rows: &[SurfaceRow], m: usize, out: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(out);
    let mut header: Vec<String> = (1..=m).map(|i| format!("w{i}")).collect();
    header.push("support".into());
    header.push("value".into());
    wtr.write_record(&header).map_err(csv_err)?;
    for r in rows {
        let mut rec: Vec<String> = r.w.iter().map(|v| v.to_string()).collect();
        rec.push(r.support.to_string());
        rec.push(r.value.to_string());
        wtr.write_record(&rec).map_err(csv_err)?;
    }
    wtr.flush().map_err(|e| Error::Internal(e.to_string()))?;
    Ok(())
}

fn csv_err(e: csv::Error) -> Error {
    Error::Internal(format!("csv: {e}"))
}

/// Histogram of `samples` simulated count vectors, indexed like
/// `inst.counts()`. Chunk `c` draws from stream `c` of the seeded generator,
/// so the result does not depend on the thread count.
pub fn mc_histogram(inst: &ProblemInstance, samples: usize, seed: u64) -> Vec<u64> {
    let dist = WeightedIndex::new(inst.p()).expect("probabilities are positive");
    let m = inst.m();
    let n = inst.n();
    let nchunks = samples.div_ceil(MC_CHUNK);
    let partial: Vec<Vec<u64>> = (0..nchunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c as u64);
            let mut hist = vec![0u64; inst.counts().len()];
            let len = MC_CHUNK.min(samples - c * MC_CHUNK);
            let mut k = vec![0u32; m];
            for _ in 0..len {
                k.iter_mut().for_each(|x| *x = 0);
                for _ in 0..n {
                    k[dist.sample(&mut rng)] += 1;
                }
                let i = inst.count_index(&CountVector::new(k.clone())).expect("drawn counts sum to n");
                hist[i] += 1;
            }
            hist
        })
        .collect();
    let mut hist = vec![0u64; inst.counts().len()];
    for h in partial {
        for (a, b) in hist.iter_mut().zip(h) {
            *a += b;
        }
    }
    hist
}

/// Largest observed `W^k` whose empirical upper tail reaches alpha.
pub fn empirical_quantile(inst: &ProblemInstance, w: &WealthProfile, hist: &[u64]) -> f64 {
    let total: u64 = hist.iter().sum();
    let mut seen: Vec<(f64, u64)> = inst
        .counts()
        .iter()
        .zip(hist)
        .filter(|(_, &h)| h > 0)
        .map(|(k, &h)| (log_monomial(w.values(), k), h))
        .collect();
    seen.sort_by(|a, b| b.0.total_cmp(&a.0));
    let reaches = |c: u64| -> bool {
        match inst.alpha_exact() {
            Some(a) => BigInt::from(c) * a.denom() >= a.numer() * BigInt::from(total),
            None => c as f64 >= inst.alpha() * total as f64 - 1e-12,
        }
    };
    let mut cum = 0u64;
    let mut i = 0;
    while i < seen.len() {
        let v = seen[i].0;
        while i < seen.len() && (seen[i].0 == v || (seen[i].0 - v).abs() <= TIE_TOL * v.abs().max(1.0)) {
            cum += seen[i].1;
            i += 1;
        }
        if reaches(cum) {
            return if v == f64::NEG_INFINITY { 0.0 } else { v.exp() };
        }
    }
    0.0
}

/// Empirical upper alpha-quantile of `X_n(W)` from `samples` simulated paths.
pub fn mc_quantile(inst: &ProblemInstance, w: &WealthProfile, samples: usize, seed: u64) -> f64 {
    empirical_quantile(inst, w, &mc_histogram(inst, samples, seed))
}

#[derive(Debug, Clone)]
pub struct McReport {
    pub estimate: f64,
    pub exact: QuantileValue,
    /// Mass of counts valued at least the exact quantile.
    pub atom_mass: f64,
    /// `None` when the atom mass is within the margin of alpha.
    pub atom_match: Option<bool>,
}

pub fn mc_check(inst: &ProblemInstance, w: &WealthProfile, samples: usize, seed: u64) -> McReport {
    let pq = QuantileEvaluator::new(inst).evaluate(w);
    let estimate = mc_quantile(inst, w, samples, seed);
    let exact = pq.value.value;
    let atom_match = (pq.cum_mass >= inst.alpha() + MC_MARGIN)
        .then(|| (estimate - exact).abs() <= 1e-12 * exact.abs().max(f64::MIN_POSITIVE));
    McReport {
        estimate,
        exact: pq.value,
        atom_mass: pq.cum_mass,
        atom_match,
    }
}

#[derive(Debug, Clone)]
pub struct SweepRow {
    pub n: u32,
    pub scaled_log_value: f64,
    pub argmax: WealthProfile,
    pub kelly_distance: f64,
}

pub const SWEEP_MAX_N_BINARY: u32 = 40;
pub const SWEEP_MAX_N_TERNARY: u32 = 12;

/// Solves the base instance at each horizon.
pub fn asymptotic_sweep(base: &ProblemInstance, horizons: &[u32]) -> Result<Vec<SweepRow>> {
    let m = base.m();
    let cap = match m {
        2 => SWEEP_MAX_N_BINARY,
        3 => SWEEP_MAX_N_TERNARY,
        _ => return Err(Error::SweepGuard(format!("m = {m}; sweeps support m = 2 or 3"))),
    };
    if horizons.is_empty() {
        return Err(Error::SweepGuard("no horizons".into()));
    }
    if horizons.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::SweepGuard("horizons must be strictly ascending".into()));
    }
    let last = *horizons.last().unwrap();
    if last > cap {
        return Err(Error::SweepGuard(format!("n = {last} exceeds {cap} for m = {m}")));
    }
    let kelly = kelly_point(base.p(), base.q());
    horizons
        .par_iter()
        .map(|&n| {
            let inst = base.with_horizon(n)?;
            let sol = if m == 2 { solve_binary_fast(&inst)? } else { solve(&inst)? };
            let v = sol.value.value;
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Internal(format!("non-positive optimum at n = {n}")));
            }
            Ok(SweepRow {
                n,
                scaled_log_value: v.ln() / n as f64,
                kelly_distance: sol.argmax.distance_inf(kelly.values()),
                argmax: sol.argmax,
            })
        })
        .collect()
}

/// `|scaled_log_value - L*|` for a row.
pub fn sweep_value_error(base: &ProblemInstance, row: &SweepRow) -> f64 {
    (row.scaled_log_value - kelly_value(base.p(), base.q())).abs()
}

pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], m: usize, out: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(out);
    let mut header = vec!["n".to_string(), "scaled_log_value".into(), "kelly_distance".into()];
    header.extend((1..=m).map(|i| format!("w{i}")));
    wtr.write_record(&header).map_err(csv_err)?;
    for r in rows {
        let mut rec = vec![r.n.to_string(), r.scaled_log_value.to_string(), r.kelly_distance.to_string()];
        rec.extend(r.argmax.values().iter().map(|v| v.to_string()));
        wtr.write_record(&rec).map_err(csv_err)?;
    }
    wtr.flush().map_err(|e| Error::Internal(e.to_string()))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn composition_count() {
        let mut c = 0;
        compositions(10, 3, &mut |_| c += 1);
        assert_eq!(c, 36);
    }

    #[test]
    fn binary_surface_rows() {
        let inst = ProblemInstance::parse(&["0.6", "0.4"], &["1", "1"], 3, "1/2").unwrap();
        let rows = surface(&inst, 200).unwrap();
        assert_eq!(rows.len(), 201);
        assert_eq!(rows.iter().filter(|r| r.support.len() == 1).count(), 2);
        assert!(rows.iter().all(|r| (r.w.iter().sum::<f64>() - 1.0).abs() < 1e-9));
    }

    #[test]
    fn guards() {
        let inst = ProblemInstance::parse(&["0.6", "0.4"], &["1", "1"], 3, "1/2").unwrap();
        assert!(matches!(grid_oracle(&inst, 9), Err(Error::GridGuard { .. })));
        assert!(asymptotic_sweep(&inst, &[3, 1]).is_err());
        assert!(asymptotic_sweep(&inst, &[41]).is_err());
        assert!(asymptotic_sweep(&inst, &[]).is_err());
    }

    #[test]
    fn empirical_quantile_from_histogram() {
        let inst = ProblemInstance::parse(&["0.6", "0.4"], &["1", "1"], 3, "1/2").unwrap();
        let w = WealthProfile::new(vec![2.0 / 3.0, 1.0 / 3.0]);
        // Frequencies 0.2, 0.3, 0.3, 0.2 over (3,0), (2,1), (1,2), (0,3).
        let v = empirical_quantile(&inst, &w, &[2, 3, 3, 2]);
        assert!((v - 4.0 / 27.0).abs() < 1e-15);
        // Exactly alpha counts as reaching it.
        let v = empirical_quantile(&inst, &w, &[5, 0, 3, 2]);
        assert!((v - 8.0 / 27.0).abs() < 1e-15);
    }
}
