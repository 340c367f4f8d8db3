//! Hyperbolicity classification from the minors of `Q`, and grid checks of
//! the check-function hypothesis `|ψ| ≤ C Δ̃` (in the form `Z²|ψ| ≤ C Δ`)
//! and of the Levi conditions `|q_{im} b_j - conj(b_i) q_{jm}| ≤ c Δ`.
//!
//! A uniform bound is declared to hold when its sup over the sampling grid is
//! finite and does not grow by more than [`STABILITY`] when the grid is
//! refined (twice the `t` nodes, half the zero neighbourhood, one more dyadic
//! frequency).

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operator::{build_frame, ModeSymbol, OperatorSpec, SymbolFrame};
use crate::partition::{find_zeros, z_function, DeltaEval, ZERO_TOL};
use crate::symmetriser::{build_symmetriser, trailing_minors, symmetriser_matrix, Symmetriser};

/// Absolute tolerance on normalized minors `Δ_j / R^{j(j-1)}`.
pub const MINOR_TOL: f64 = 1e-10;
/// A root cluster whose mean imaginary part exceeds this is not real.
pub const ROOT_IMAG_TOL: f64 = 1e-8;
/// Numerically computed roots closer than `CLUSTER_TOL · R` are one root.
pub const CLUSTER_TOL: f64 = 1e-4;
/// Allowed relative growth of a sup under one refinement.
pub const STABILITY: f64 = 0.2;
/// Sups below this are treated as zero when judging stability.
pub const NOISE_FLOOR: f64 = 1e-9;
/// Smallest neighbourhood of a zero of `Δ` excluded from quotient sampling.
pub const ETA_MIN: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "class", rename_all = "snake_case")]
pub enum Hyperbolicity {
    Strict,
    /// `r` distinct roots.
    Weak { r: usize },
    NotHyperbolic,
}

impl Hyperbolicity {
    /// Orders classifications from best to worst for grid reductions.
    fn severity(&self) -> (u8, usize) {
        match *self {
            Hyperbolicity::Strict => (0, 0),
            Hyperbolicity::Weak { r } => (1, usize::MAX - r),
            Hyperbolicity::NotHyperbolic => (2, 0),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Classification {
    pub hyperbolicity: Hyperbolicity,
    pub normalized_minors: Vec<f64>,
    /// Eigenvalues of `A` as `[re, im]`.
    pub roots: Vec<[f64; 2]>,
    /// Number of root clusters.
    pub root_clusters: usize,
    pub reason: Option<String>,
}

/// Groups nearly equal roots; returns `(mean, size)` per cluster.
pub fn cluster_roots(roots: &[Complex64], width: f64) -> Vec<(Complex64, usize)> {
    let mut sorted = roots.to_vec();
    sorted.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    let mut groups: Vec<Vec<Complex64>> = Vec::new();
    for r in sorted {
        let joined = groups
            .iter_mut()
            .find(|g| g.iter().any(|x| (x - r).norm() <= width));
        match joined {
            Some(g) => g.push(r),
            None => groups.push(vec![r]),
        }
    }
    groups
        .into_iter()
        .map(|g| {
            let n = g.len();
            (g.iter().sum::<Complex64>() / n as f64, n)
        })
        .collect()
}

/// Minor sign pattern at one frame, cross-checked against the roots of the
/// companion matrix.
pub fn classify_frame(frame: &SymbolFrame) -> Classification {
    let m = frame.m();
    let radius = 1.0 + frame.a.iter().fold(0.0f64, |acc, x| acc.max(x.abs()));
    let q = symmetriser_matrix(&frame.a);
    let normalized: Vec<f64> = trailing_minors(&q)
        .iter()
        .enumerate()
        .map(|(k, d)| d / radius.powi(((k + 1) * k) as i32))
        .collect();
    let roots = frame.rescaled_roots();
    let clusters = cluster_roots(&roots, CLUSTER_TOL * radius);
    let root_list = roots.iter().map(|z| [z.re, z.im]).collect();
    let fail = |reason: String| Classification {
        hyperbolicity: Hyperbolicity::NotHyperbolic,
        normalized_minors: normalized.clone(),
        roots: roots.iter().map(|z| [z.re, z.im]).collect(),
        root_clusters: clusters.len(),
        reason: Some(reason),
    };
    if let Some(k) = normalized.iter().position(|&d| d < -MINOR_TOL) {
        return fail(format!("minor Δ_{} is negative", k + 1));
    }
    let r = normalized.iter().take_while(|&&d| d > MINOR_TOL).count();
    if normalized[r..].iter().any(|d| d.abs() > MINOR_TOL) {
        return fail(format!("inconsistent minor pattern: Δ_{} vanishes but a larger minor does not", r + 1));
    }
    if let Some((c, _)) = clusters.iter().find(|(c, _)| c.im.abs() > ROOT_IMAG_TOL) {
        return fail(format!("non-real characteristic root {} {:+}i", c.re, c.im));
    }
    Classification {
        hyperbolicity: if r == m {
            Hyperbolicity::Strict
        } else {
            Hyperbolicity::Weak { r }
        },
        normalized_minors: normalized,
        roots: root_list,
        root_clusters: clusters.len(),
        reason: None,
    }
}

pub fn classify_hyperbolicity(spec: &OperatorSpec, t: f64, xi: &[f64]) -> Result<Classification> {
    Ok(classify_frame(&build_frame(spec, t, xi)?))
}

// ---- sampling grid ------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridConfig {
    /// Uniform `t` nodes on the base level.
    pub t_nodes: usize,
    /// Frequencies `2^0, ..., 2^K` with `2^K ≥ 10^{xi_decades}`.
    pub xi_decades: f64,
    /// Number of sampled directions (defaults: 2, 64 or 128 for n = 1, 2, 3).
    pub directions: Option<usize>,
    /// Number of refinement levels beyond the base grid.
    pub refinements: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            t_nodes: 513,
            xi_decades: 3.0,
            directions: None,
            refinements: 1,
        }
    }
}

impl GridConfig {
    pub fn validate(&self) -> Result<()> {
        if self.t_nodes < 3 {
            return Err(Error::invalid("grid-t", "need at least 3 nodes"));
        }
        if !(self.xi_decades > 0.0 && self.xi_decades <= 12.0) {
            return Err(Error::invalid("xi-decades", "must lie in (0, 12]"));
        }
        if self.directions == Some(0) {
            return Err(Error::invalid("directions", "must be positive"));
        }
        Ok(())
    }

    fn max_exponent(&self) -> u32 {
        (self.xi_decades * 10f64.log2() - 1e-9).ceil() as u32
    }
}

/// Unit directions: `±1` in one dimension, equally spaced angles in two,
/// a Fibonacci lattice on the sphere otherwise.
pub fn sample_directions(n: usize, count: Option<usize>) -> Vec<Vec<f64>> {
    match n {
        1 => vec![vec![1.0], vec![-1.0]],
        2 => {
            let k = count.unwrap_or(64);
            (0..k)
                .map(|i| {
                    let th = 2.0 * PI * i as f64 / k as f64;
                    vec![th.cos(), th.sin()]
                })
                .collect()
        }
        _ => {
            let k = count.unwrap_or(128);
            let golden = PI * (3.0 - 5f64.sqrt());
            (0..k)
                .map(|i| {
                    let z = 1.0 - 2.0 * (i as f64 + 0.5) / k as f64;
                    let r = (1.0 - z * z).sqrt();
                    let th = golden * i as f64;
                    let mut v = vec![0.0; n];
                    v[0] = r * th.cos();
                    v[1] = r * th.sin();
                    v[2] = z;
                    v
                })
                .collect()
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct DirectionZeros {
    pub dir: Vec<f64>,
    pub sigma: Vec<f64>,
    /// Base radius of the neighbourhoods around `sigma` skipped by quotients.
    pub eta: f64,
}

/// Directions with their zero sets, shared by all grid checks.
#[derive(Debug, Clone, Serialize)]
pub struct SampleGrid {
    pub config: GridConfig,
    pub work: (f64, f64),
    pub dirs: Vec<DirectionZeros>,
    pub degenerate: Vec<Vec<f64>>,
}

/// Radius around `z` beyond which `Δ` exceeds the zero tolerance on both sides.
fn tolerance_radius(ev: &DeltaEval, z: f64, sup: f64, work: (f64, f64)) -> f64 {
    let tol = ZERO_TOL * sup;
    let mut r = 1e-14;
    while r < work.1 - work.0 {
        let below = [z - r, z + r]
            .iter()
            .filter(|&&t| t >= work.0 && t <= work.1)
            .any(|&t| ev.eval(t).0.abs() <= tol);
        if !below {
            return r;
        }
        r *= std::f64::consts::SQRT_2;
    }
    work.1 - work.0
}

impl SampleGrid {
    pub fn new(spec: &OperatorSpec, config: &GridConfig) -> Result<Self> {
        config.validate()?;
        let mut dirs = Vec::new();
        let mut degenerate = Vec::new();
        for dir in sample_directions(spec.n, config.directions) {
            match find_zeros(spec, &dir) {
                Ok(zs) => {
                    let ev = DeltaEval::new(spec, &dir);
                    let r = zs
                        .sigma
                        .iter()
                        .map(|&z| tolerance_radius(&ev, z, zs.delta_sup, spec.work))
                        .fold(0.0, f64::max);
                    dirs.push(DirectionZeros {
                        dir,
                        sigma: zs.sigma,
                        eta: ETA_MIN.max(2.0 * r),
                    });
                }
                Err(Error::DegenerateDirection { dir }) => degenerate.push(dir),
                Err(e) => return Err(e),
            }
        }
        Ok(SampleGrid {
            config: config.clone(),
            work: spec.work,
            dirs,
            degenerate,
        })
    }

    pub fn levels(&self) -> usize {
        self.config.refinements + 1
    }

    pub fn magnitudes(&self, level: usize) -> Vec<f64> {
        (0..=self.config.max_exponent() + level as u32)
            .map(|k| 2f64.powi(k as i32))
            .collect()
    }

    pub fn eta(&self, dir: usize, level: usize) -> f64 {
        self.dirs[dir].eta / 2f64.powi(level as i32)
    }

    /// Uniform nodes plus geometric points `z ± η 2^{k/2}` around each zero.
    pub fn times(&self, dir: usize, level: usize) -> Vec<f64> {
        let (a, b) = self.work;
        let n = (self.config.t_nodes - 1) * (1 << level);
        let mut ts: Vec<f64> = (0..=n).map(|i| if i == n { b } else { a + (b - a) * i as f64 / n as f64 }).collect();
        let eta = self.eta(dir, level);
        for &z in &self.dirs[dir].sigma {
            let mut k = 0;
            loop {
                let off = eta * 2f64.powf(k as f64 / 2.0);
                if off > b - a {
                    break;
                }
                for t in [z - off, z + off] {
                    if t >= a && t <= b {
                        ts.push(t);
                    }
                }
                k += 1;
            }
        }
        ts.sort_by(f64::total_cmp);
        ts.dedup();
        ts
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Witness {
    pub t: f64,
    pub xi: Vec<f64>,
    pub value: f64,
}

/// Everything a quotient may need at one grid point.
pub struct PointData<'a> {
    pub t: f64,
    pub xi: &'a [f64],
    pub sym: &'a ModeSymbol<'a>,
    pub frame: SymbolFrame,
    pub symm: Symmetriser,
    /// `Z(t, ξ)`.
    pub z: f64,
}

fn take_max(slot: &mut Option<Witness>, cand: Witness) {
    let better = match slot {
        None => true,
        Some(w) => cand.value > w.value || (cand.value.is_nan() && !w.value.is_nan()),
    };
    if better {
        *slot = Some(cand);
    }
}

/// Sup over one level of the grid of `nq` quotients. Points inside the zero
/// neighbourhoods or with `Δ` below tolerance are skipped; NaN values are
/// ignored, infinite ones kept.
pub fn sweep<F>(spec: &OperatorSpec, grid: &SampleGrid, level: usize, nq: usize, f: F) -> Vec<Option<Witness>>
where
    F: Fn(&PointData, &mut [f64]) + Sync,
{
    let mags = grid.magnitudes(level);
    let tasks: Vec<(usize, f64)> = (0..grid.dirs.len())
        .flat_map(|d| mags.iter().map(move |&s| (d, s)))
        .collect();
    let partial: Vec<Vec<Option<Witness>>> = tasks
        .par_iter()
        .map(|&(d, s)| {
            let dz = &grid.dirs[d];
            let xi: Vec<f64> = dz.dir.iter().map(|x| x * s).collect();
            let sym = spec.mode_symbol(&xi);
            let eta = grid.eta(d, level) * (1.0 - 1e-9);
            let times = grid.times(d, level);
            let frames: Vec<(f64, SymbolFrame, Symmetriser)> = times
                .iter()
                .map(|&t| {
                    let fr = sym.frame(t);
                    let sm = build_symmetriser(&fr);
                    (t, fr, sm)
                })
                .collect();
            let sup = frames.iter().fold(0.0f64, |acc, (_, _, s)| acc.max(s.delta.abs()));
            let mut best: Vec<Option<Witness>> = vec![None; nq];
            let mut vals = vec![f64::NAN; nq];
            for (t, frame, symm) in frames {
                if dz.sigma.iter().any(|z| (t - z).abs() < eta) || symm.delta <= ZERO_TOL * sup {
                    continue;
                }
                let p = PointData {
                    t,
                    xi: &xi,
                    sym: &sym,
                    frame,
                    symm,
                    z: z_function(&dz.sigma, t),
                };
                vals.iter_mut().for_each(|v| *v = f64::NAN);
                f(&p, &mut vals);
                for (slot, &v) in best.iter_mut().zip(&vals) {
                    if !v.is_nan() {
                        take_max(slot, Witness { t, xi: xi.clone(), value: v });
                    }
                }
            }
            best
        })
        .collect();
    let mut out: Vec<Option<Witness>> = vec![None; nq];
    for part in partial {
        for (slot, w) in out.iter_mut().zip(part) {
            if let Some(w) = w {
                take_max(slot, w);
            }
        }
    }
    out
}

/// Sups per level, the final witness and the stability verdict.
#[derive(Debug, Clone, Serialize)]
pub struct QuotientCheck {
    pub name: String,
    pub level_sups: Vec<f64>,
    pub constant: f64,
    pub witness: Option<Witness>,
    pub holds: bool,
}

/// Finite on every level and growing by at most [`STABILITY`] per refinement.
pub fn stable(level_sups: &[f64]) -> bool {
    level_sups.iter().all(|v| v.is_finite())
        && level_sups
            .windows(2)
            .all(|w| w[1] <= (1.0 + STABILITY) * w[0].max(NOISE_FLOOR))
}

/// Runs `nq` quotients over every level and packages each as a check.
fn run_checks<F>(spec: &OperatorSpec, grid: &SampleGrid, names: &[String], f: F) -> Vec<QuotientCheck>
where
    F: Fn(&PointData, &mut [f64]) + Sync,
{
    let nq = names.len();
    let mut sups = vec![Vec::new(); nq];
    let mut last = vec![None; nq];
    for level in 0..grid.levels() {
        let ws = sweep(spec, grid, level, nq, &f);
        for (k, w) in ws.into_iter().enumerate() {
            sups[k].push(w.as_ref().map(|w| w.value).unwrap_or(0.0));
            last[k] = w;
        }
    }
    names
        .iter()
        .zip(sups)
        .zip(last)
        .map(|((name, level_sups), witness)| QuotientCheck {
            name: name.clone(),
            constant: *level_sups.last().unwrap(),
            holds: stable(&level_sups),
            level_sups,
            witness,
        })
        .collect()
}

fn gr1m_quotients(p: &PointData, out: &mut [f64]) {
    let s = &p.symm;
    out[0] = p.z * p.z * s.psi.abs() / s.delta;
    if let Some(dt) = s.delta_tilde {
        out[1] = s.psi.abs() / dt;
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Gr1mReport {
    /// `sup Z²|ψ|/Δ`.
    pub jt2: QuotientCheck,
    /// `sup |ψ|/Δ̃`.
    pub c1: QuotientCheck,
    pub holds: bool,
}

pub fn check_gr1m(spec: &OperatorSpec, grid: &SampleGrid) -> Gr1mReport {
    let names = ["Z^2 |psi| / Delta".to_string(), "|psi| / Delta_tilde".to_string()];
    let mut checks = run_checks(spec, grid, &names, gr1m_quotients);
    let c1 = checks.pop().unwrap();
    let jt2 = checks.pop().unwrap();
    Gr1mReport {
        holds: jt2.holds && !grid.dirs.is_empty(),
        jt2,
        c1,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum LeviMode {
    /// All pairs `(i, j)`.
    Complex,
    /// Only `i < j`; the matrix `QB - BᵀQ` is skew for real `B`.
    Real,
    /// Only the parts `B_{-l}` of symbol order `-l` with `l ≤ l_max`.
    Graded { l_max: usize },
}

/// `d_{ij} = q_{im} b_j - conj(b_i) q_{jm}` (0-based indices).
pub fn levi_entry(q: &nalgebra::DMatrix<f64>, b: &[Complex64], i: usize, j: usize) -> Complex64 {
    let m = b.len();
    b[j] * q[(i, m - 1)] - b[i].conj() * q[(j, m - 1)]
}

#[derive(Debug, Clone, Serialize)]
pub struct Residual {
    /// Symbol order of the unchecked part of `B`.
    pub order: i64,
    /// `sup <ξ>^{l_max+1} max_j |b_j^{res}|`.
    pub sup: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct LeviReport {
    pub mode: LeviMode,
    /// `sup |d_ij|/Δ`; `None` for pairs the mode does not check.
    pub constants: Vec<Vec<Option<f64>>>,
    pub level_sups: Vec<f64>,
    pub witness: Option<Witness>,
    pub residual: Option<Residual>,
    pub holds: bool,
}

fn levi_pairs(m: usize, mode: LeviMode) -> Vec<(usize, usize)> {
    (0..m)
        .flat_map(|i| (0..m).map(move |j| (i, j)))
        .filter(|&(i, j)| match mode {
            LeviMode::Real => i < j,
            _ => true,
        })
        .collect()
}

fn checked_b(p: &PointData, mode: LeviMode) -> (Vec<Complex64>, Option<f64>) {
    match mode {
        LeviMode::Graded { l_max } => {
            let graded = p.sym.lower_graded(p.t, None);
            let m = graded.len();
            let mut keep = vec![Complex64::new(0.0, 0.0); m];
            let mut res = 0.0f64;
            for (l, row) in graded.iter().enumerate() {
                for (j, &v) in row.iter().enumerate() {
                    if l <= l_max {
                        keep[j] += v;
                    }
                }
                if l > l_max {
                    let mag = row.iter().fold(0.0f64, |acc, z| acc.max(z.norm()));
                    res = res.max(mag * p.sym.bracket().powi(l_max as i32 + 1));
                }
            }
            (keep, Some(res))
        }
        _ => (p.frame.b.clone(), None),
    }
}

pub fn check_levi(spec: &OperatorSpec, grid: &SampleGrid, mode: LeviMode) -> Result<LeviReport> {
    if mode == LeviMode::Real && !spec.lower_is_real() {
        return Err(Error::invalid(
            "levi mode",
            "real mode requires real lower order coefficients",
        ));
    }
    let m = spec.m;
    let pairs = levi_pairs(m, mode);
    let mut names: Vec<String> = pairs.iter().map(|(i, j)| format!("d_{}{}", i + 1, j + 1)).collect();
    names.push("residual".into());
    let np = pairs.len();
    let checks = run_checks(spec, grid, &names, |p, out| {
        let (b, res) = checked_b(p, mode);
        for (k, &(i, j)) in pairs.iter().enumerate() {
            out[k] = levi_entry(&p.symm.q, &b, i, j).norm() / p.symm.delta;
        }
        if let Some(r) = res {
            out[np] = r;
        }
    });
    let mut constants = vec![vec![None; m]; m];
    let mut holds = !grid.dirs.is_empty();
    let mut witness: Option<Witness> = None;
    let levels = grid.levels();
    let mut level_sups = vec![0.0f64; levels];
    for (k, &(i, j)) in pairs.iter().enumerate() {
        let c = &checks[k];
        constants[i][j] = Some(c.constant);
        holds &= c.holds;
        for (l, v) in c.level_sups.iter().enumerate() {
            level_sups[l] = level_sups[l].max(*v);
        }
        if let Some(w) = &c.witness {
            take_max(&mut witness, w.clone());
        }
    }
    let residual = match mode {
        LeviMode::Graded { l_max } => Some(Residual {
            order: -(l_max as i64 + 1),
            sup: checks[np].constant,
        }),
        _ => None,
    };
    Ok(LeviReport {
        mode,
        constants,
        level_sups,
        witness,
        residual,
        holds,
    })
}

// ---- second order equivalences -------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct M2Report {
    /// `Z²|ψ|/Δ`.
    pub gr1m: QuotientCheck,
    /// `Z²(λ_1'² + λ_2'²)/Δ`.
    pub cond_i: QuotientCheck,
    /// `(λ_1² + λ_2²)/Δ`.
    pub cond_ii: QuotientCheck,
    /// `max_j |b_j|²/q_jj`.
    pub lc2: QuotientCheck,
    /// `|q_12 b_2 - b_1 q_22|²/Δ`.
    pub lcb2: QuotientCheck,
    /// The three root conditions give the same verdict.
    pub root_conditions_agree: bool,
    /// When the root condition holds: the two Levi forms give the same verdict.
    pub levi_forms_agree: Option<bool>,
    /// Both roots vanish at every zero of `Δ`.
    pub roots_vanish_at_zeros: bool,
}

fn m2_quotients(p: &PointData, out: &mut [f64]) {
    let s = &p.symm;
    let q = &s.q;
    let b = &p.frame.b;
    let delta = s.delta;
    let da2 = p.frame.da[1];
    let z2 = p.z * p.z;
    out[0] = z2 * s.psi.abs() / delta;
    let lambda_dot_sq = 0.5 * (da2 * da2 + s.d_delta * s.d_delta / (4.0 * delta));
    out[1] = z2 * lambda_dot_sq / delta;
    out[2] = q[(0, 0)] / delta;
    let mut lc2 = 0.0f64;
    for j in 0..2 {
        let num = b[j].norm_sqr();
        let v = if num == 0.0 { 0.0 } else { num / q[(j, j)] };
        lc2 = lc2.max(if v.is_nan() || v < 0.0 { f64::INFINITY } else { v });
    }
    out[3] = lc2;
    out[4] = (b[1] * q[(0, 1)] - b[0] * q[(1, 1)]).norm_sqr() / delta;
}

pub fn m2_equivalences(spec: &OperatorSpec, grid: &SampleGrid) -> Result<M2Report> {
    if spec.m != 2 {
        return Err(Error::invalid("m", "the second order equivalences need m = 2"));
    }
    let names: Vec<String> = ["gr1m", "cond_i", "cond_ii", "lc2", "lcb2"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let mut checks = run_checks(spec, grid, &names, m2_quotients).into_iter();
    let gr1m = checks.next().unwrap();
    let cond_i = checks.next().unwrap();
    let cond_ii = checks.next().unwrap();
    let lc2 = checks.next().unwrap();
    let lcb2 = checks.next().unwrap();
    let mut vanish = true;
    for dz in &grid.dirs {
        let sym = spec.mode_symbol(&dz.dir);
        for &z in &dz.sigma {
            let (a, _) = sym.principal_row(z);
            let q11 = symmetriser_matrix(&a)[(0, 0)];
            vanish &= q11.abs() <= 1e-10 * (1.0 + a[0].abs() + a[1].abs());
        }
    }
    Ok(M2Report {
        root_conditions_agree: gr1m.holds == cond_i.holds && cond_i.holds == cond_ii.holds,
        levi_forms_agree: cond_ii.holds.then_some(lc2.holds == lcb2.holds),
        roots_vanish_at_zeros: vanish,
        gr1m,
        cond_i,
        cond_ii,
        lc2,
        lcb2,
    })
}

// ---- full report --------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct Verdicts {
    pub gr1m_holds: bool,
    pub levi_holds: bool,
    pub degenerate_direction_found: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct Thresholds {
    pub minor_tol: f64,
    pub root_imag_tol: f64,
    pub zero_tol: f64,
    pub stability: f64,
    pub noise_floor: f64,
    pub eta_min: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            minor_tol: MINOR_TOL,
            root_imag_tol: ROOT_IMAG_TOL,
            zero_tol: ZERO_TOL,
            stability: STABILITY,
            noise_floor: NOISE_FLOOR,
            eta_min: ETA_MIN,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ClassWitness {
    pub t: f64,
    pub xi: Vec<f64>,
    pub reason: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct AnalysisReport {
    pub hyperbolicity: Hyperbolicity,
    pub hyperbolicity_witness: Option<ClassWitness>,
    /// `sup |ψ|/Δ̃`.
    pub c1_estimate: Option<f64>,
    /// `sup Z²|ψ|/Δ`.
    pub jt2_constant: Option<f64>,
    pub levi_constants: Option<Vec<Vec<Option<f64>>>>,
    pub verdicts: Verdicts,
    pub gr1m: Option<Gr1mReport>,
    pub levi: Option<LeviReport>,
    pub zeros: Vec<DirectionZeros>,
    pub degenerate_directions: Vec<Vec<f64>>,
    pub thresholds: Thresholds,
}

/// Worst classification over the base `t` nodes, the zeros of `Δ`, and the
/// smallest and largest sampled frequency in every direction.
pub fn classify_grid(spec: &OperatorSpec, grid: &SampleGrid) -> (Hyperbolicity, Option<ClassWitness>) {
    let mags = grid.magnitudes(0);
    let extremes = [mags[0], *mags.last().unwrap()];
    let (a, b) = spec.work;
    let n = grid.config.t_nodes - 1;
    let mut dirs: Vec<(Vec<f64>, Vec<f64>)> = grid
        .dirs
        .iter()
        .map(|d| (d.dir.clone(), d.sigma.clone()))
        .collect();
    dirs.extend(grid.degenerate.iter().map(|d| (d.clone(), Vec::new())));
    let results: Vec<(Hyperbolicity, Option<ClassWitness>)> = dirs
        .par_iter()
        .map(|(dir, sigma)| {
            let mut worst = (Hyperbolicity::Strict, None);
            for &s in &extremes {
                let xi: Vec<f64> = dir.iter().map(|x| x * s).collect();
                let sym = spec.mode_symbol(&xi);
                let ts = (0..=n)
                    .map(|i| if i == n { b } else { a + (b - a) * i as f64 / n as f64 })
                    .chain(sigma.iter().copied());
                for t in ts {
                    let c = classify_frame(&sym.frame(t));
                    if c.hyperbolicity.severity() > worst.0.severity() {
                        worst = (
                            c.hyperbolicity,
                            Some(ClassWitness {
                                t,
                                xi: xi.clone(),
                                reason: c.reason,
                            }),
                        );
                    }
                }
            }
            worst
        })
        .collect();
    results
        .into_iter()
        .fold((Hyperbolicity::Strict, None), |acc, r| {
            if r.0.severity() > acc.0.severity() {
                r
            } else {
                acc
            }
        })
}

pub fn analyze(spec: &OperatorSpec, config: &GridConfig, mode: LeviMode) -> Result<AnalysisReport> {
    let grid = SampleGrid::new(spec, config)?;
    let (hyperbolicity, witness) = classify_grid(spec, &grid);
    let degenerate_found = !grid.degenerate.is_empty();
    if hyperbolicity == Hyperbolicity::NotHyperbolic {
        return Ok(AnalysisReport {
            hyperbolicity,
            hyperbolicity_witness: witness,
            c1_estimate: None,
            jt2_constant: None,
            levi_constants: None,
            verdicts: Verdicts {
                gr1m_holds: false,
                levi_holds: false,
                degenerate_direction_found: degenerate_found,
            },
            gr1m: None,
            levi: None,
            zeros: grid.dirs,
            degenerate_directions: grid.degenerate,
            thresholds: Thresholds::default(),
        });
    }
    let gr1m = check_gr1m(spec, &grid);
    let levi = check_levi(spec, &grid, mode)?;
    Ok(AnalysisReport {
        hyperbolicity,
        hyperbolicity_witness: witness,
        c1_estimate: Some(gr1m.c1.constant),
        jt2_constant: Some(gr1m.jt2.constant),
        levi_constants: Some(levi.constants.clone()),
        verdicts: Verdicts {
            gr1m_holds: gr1m.holds,
            levi_holds: levi.holds,
            degenerate_direction_found: degenerate_found,
        },
        gr1m: Some(gr1m),
        levi: Some(levi),
        zeros: grid.dirs,
        degenerate_directions: grid.degenerate,
        thresholds: Thresholds::default(),
    })
}
