//! Zeros of `Δ(·, ξ)` on the working interval, the excluded set `A_{ξ,ε}`
//! around them and the bounds that make the two-energy argument work:
//! interval count, measure, minimum of `Δ` off the excluded set and the
//! integral of `|∂_t Δ|/Δ` there.
//!
//! The principal symbol is homogeneous, so `Δ(t, sξ) = c(s) Δ(t, ξ)` and the
//! zeros only depend on the direction of `ξ`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::operator::{euclidean_norm, ModeSymbol, OperatorSpec};
use crate::symmetriser::{discriminant, symmetriser_matrix};

/// Number of scan nodes for the sign-change search.
pub const SCAN_NODES: usize = 2048;
/// Bisection stops once the bracket is this narrow.
pub const BISECTION_WIDTH: f64 = 1e-12;
/// `|Δ| ≤ ZERO_TOL · ‖Δ‖_∞` counts as a zero.
pub const ZERO_TOL: f64 = 1e-12;
/// Zeros closer than this are reported as one.
pub const CLUSTER_WIDTH: f64 = 1e-10;
const QUAD_REL_TOL: f64 = 1e-6;
const QUAD_MAX_EVALS: usize = 1_000_000;

#[derive(Debug, Clone, Serialize)]
pub struct ZeroSet {
    pub xi: Vec<f64>,
    pub sigma: Vec<f64>,
    /// `‖Δ(·, ξ)‖_∞` on the scan nodes.
    pub delta_sup: f64,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct PartitionBounds {
    /// Number of excluded intervals.
    pub p_observed: usize,
    pub measure_excluded: f64,
    pub min_delta_kept: f64,
    pub delta_sup: f64,
    /// `min_delta_kept / delta_sup`.
    pub min_delta_ratio: f64,
    /// `∫_kept |∂_t Δ|/Δ dt`.
    pub log_integral: f64,
    pub quadrature_evals: usize,
    pub quadrature_capped: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct Partition {
    pub xi_dir: Vec<f64>,
    pub eps: f64,
    pub sigma: Vec<f64>,
    /// Open intervals.
    pub excluded: Vec<(f64, f64)>,
    /// Closed intervals.
    pub kept: Vec<(f64, f64)>,
    pub bounds: PartitionBounds,
    pub warnings: Vec<String>,
}

/// `Z(t) = Π |t - t_j|`, or 1 without zeros.
pub fn z_function(sigma: &[f64], t: f64) -> f64 {
    sigma.iter().map(|z| (t - z).abs()).product()
}

pub(crate) struct DeltaEval<'a> {
    sym: ModeSymbol<'a>,
}

impl<'a> DeltaEval<'a> {
    pub(crate) fn new(spec: &'a OperatorSpec, xi: &[f64]) -> Self {
        DeltaEval {
            sym: spec.mode_symbol(xi),
        }
    }

    pub(crate) fn eval(&self, t: f64) -> (f64, f64) {
        let (a, da) = self.sym.principal_row(t);
        discriminant(&a, &da)
    }

    /// Upper bound for `|det Q|` from the size of `Q` itself.
    fn det_scale(&self, t: f64) -> f64 {
        let (a, _) = self.sym.principal_row(t);
        symmetriser_matrix(&a).norm().powi(a.len() as i32)
    }
}

fn bisect(mut lo: f64, mut hi: f64, mut negative_at: impl FnMut(f64) -> bool) -> f64 {
    // Invariant: negative_at(lo) and !negative_at(hi).
    for _ in 0..200 {
        if hi - lo <= BISECTION_WIDTH {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if negative_at(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn check_xi(spec: &OperatorSpec, xi: &[f64]) -> Result<()> {
    if xi.len() != spec.n {
        return Err(Error::invalid("xi", format!("length {} != n = {}", xi.len(), spec.n)));
    }
    if !(euclidean_norm(xi) > 0.0) || xi.iter().any(|x| !x.is_finite()) {
        return Err(Error::ZeroFrequency);
    }
    Ok(())
}

fn scan_nodes(a: f64, b: f64) -> Vec<f64> {
    (0..SCAN_NODES)
        .map(|i| {
            if i == SCAN_NODES - 1 {
                b
            } else {
                a + (b - a) * i as f64 / (SCAN_NODES - 1) as f64
            }
        })
        .collect()
}

/// Locates the zeros of `Δ(·, ξ)` in the working interval: sign changes are
/// bisected on `Δ`, local minima of `|Δ|` are bisected on `∂_t Δ` and kept
/// when `Δ` is below tolerance there (even order zeros do not change sign).
pub fn find_zeros(spec: &OperatorSpec, xi: &[f64]) -> Result<ZeroSet> {
    check_xi(spec, xi)?;
    let ev = DeltaEval::new(spec, xi);
    let (a, b) = spec.work;
    let nodes = scan_nodes(a, b);
    let vals: Vec<(f64, f64)> = nodes.iter().map(|&t| ev.eval(t)).collect();
    if vals.iter().any(|(d, dd)| !d.is_finite() || !dd.is_finite()) {
        return Err(Error::NonFinite { t: a, xi: xi.to_vec() });
    }
    let delta_sup = vals.iter().fold(0.0f64, |acc, (d, _)| acc.max(d.abs()));
    let scale = nodes.iter().fold(0.0f64, |acc, &t| acc.max(ev.det_scale(t)));
    if delta_sup <= ZERO_TOL * scale || delta_sup == 0.0 {
        return Err(Error::DegenerateDirection { dir: xi.to_vec() });
    }
    let tol = ZERO_TOL * delta_sup;
    // Slope of |Δ|: negative while |Δ| decreases.
    let g = |d: f64, dd: f64| if d < 0.0 { -dd } else { dd };
    let mut cands = Vec::new();
    for i in 0..nodes.len() - 1 {
        let (d0, dd0) = vals[i];
        let (d1, dd1) = vals[i + 1];
        if d0 == 0.0 {
            cands.push(nodes[i]);
        }
        if d0 * d1 < 0.0 {
            let s = d0 < 0.0;
            cands.push(bisect(nodes[i], nodes[i + 1], |t| (ev.eval(t).0 < 0.0) == s));
        }
        if g(d0, dd0) < 0.0 && g(d1, dd1) >= 0.0 {
            let sign = if d0 < 0.0 { -1.0 } else { 1.0 };
            let t = bisect(nodes[i], nodes[i + 1], |t| sign * ev.eval(t).1 < 0.0);
            if ev.eval(t).0.abs() <= tol {
                cands.push(t);
            }
        }
    }
    let (dn, _) = vals[nodes.len() - 1];
    if dn == 0.0 {
        cands.push(b);
    }
    // Endpoint minima of |Δ| that sit below tolerance.
    if vals[0].0.abs() <= tol && g(vals[0].0, vals[0].1) >= 0.0 {
        cands.push(a);
    }
    if dn.abs() <= tol && g(dn, vals[nodes.len() - 1].1) <= 0.0 {
        cands.push(b);
    }
    cands.sort_by(f64::total_cmp);
    let mut warnings = Vec::new();
    let mut sigma: Vec<f64> = Vec::new();
    for t in cands {
        match sigma.last() {
            Some(&last) if t - last <= CLUSTER_WIDTH => {
                if t - last > 10.0 * BISECTION_WIDTH {
                    warnings.push(format!(
                        "zeros at {last:.15e} and {t:.15e} are closer than {CLUSTER_WIDTH:e}; reported as one"
                    ));
                }
            }
            _ => sigma.push(t),
        }
    }
    Ok(ZeroSet {
        xi: xi.to_vec(),
        sigma,
        delta_sup,
        warnings,
    })
}

/// Merged open intervals of half-width `eps / (2 max(N, 1))` around each zero,
/// clipped to `[a, b]`.
pub fn excluded_set(sigma: &[f64], eps: f64, work: (f64, f64)) -> Vec<(f64, f64)> {
    let hw = eps / (2.0 * sigma.len().max(1) as f64);
    let mut out: Vec<(f64, f64)> = Vec::new();
    for &z in sigma {
        let lo = (z - hw).max(work.0);
        let hi = (z + hw).min(work.1);
        match out.last_mut() {
            Some(last) if lo <= last.1 => last.1 = last.1.max(hi),
            _ => out.push((lo, hi)),
        }
    }
    out
}

/// Complement of `excluded` in `[a, b]` as closed intervals of positive length.
pub fn kept_set(excluded: &[(f64, f64)], work: (f64, f64)) -> Vec<(f64, f64)> {
    let mut kept = Vec::new();
    let mut start = work.0;
    for &(lo, hi) in excluded {
        if lo > start {
            kept.push((start, lo));
        }
        start = start.max(hi);
    }
    if work.1 > start {
        kept.push((start, work.1));
    }
    kept
}

struct Simpson<'a, F: Fn(f64) -> f64> {
    f: &'a F,
    evals: usize,
    capped: bool,
}

impl<F: Fn(f64) -> f64> Simpson<'_, F> {
    fn eval(&mut self, t: f64) -> f64 {
        self.evals += 1;
        (self.f)(t)
    }

    fn integrate(&mut self, a: f64, b: f64) -> f64 {
        let fa = self.eval(a);
        let fb = self.eval(b);
        let m = 0.5 * (a + b);
        let fm = self.eval(m);
        let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
        self.recurse(a, b, fa, fm, fb, whole, QUAD_REL_TOL, 50)
    }

    #[allow(clippy::too_many_arguments)]
    fn recurse(&mut self, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = self.eval(lm);
        let frm = self.eval(rm);
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let sum = left + right;
        let err = sum - whole;
        if self.evals >= QUAD_MAX_EVALS {
            self.capped = true;
            return sum + err / 15.0;
        }
        if depth == 0 || err.abs() <= 15.0 * tol * sum.abs().max(f64::MIN_POSITIVE) || b - a < 1e-15 {
            return sum + err / 15.0;
        }
        self.recurse(a, m, fa, flm, fm, left, tol, depth - 1)
            + self.recurse(m, b, fm, frm, fb, right, tol, depth - 1)
    }
}

/// Critical points of `Δ` strictly inside `(c, d)`, located by sign changes
/// of `∂_t Δ` on a uniform subgrid and bisection.
fn critical_points(ev: &DeltaEval, c: f64, d: f64, nodes: usize) -> Vec<f64> {
    let mut out = Vec::new();
    let mut prev_t = c;
    let mut prev = ev.eval(c).1;
    for i in 1..=nodes {
        let t = c + (d - c) * i as f64 / nodes as f64;
        let cur = ev.eval(t).1;
        if prev * cur < 0.0 {
            let s = prev < 0.0;
            out.push(bisect(prev_t, t, |x| (ev.eval(x).1 < 0.0) == s));
        }
        prev_t = t;
        prev = cur;
    }
    out
}

fn validate_eps(eps: f64) -> Result<()> {
    let max = (-1.0f64).exp();
    if !(eps > 0.0 && eps <= max * (1.0 + 1e-12)) {
        return Err(Error::invalid("eps", format!("{eps} is outside (0, e^-1]")));
    }
    Ok(())
}

pub fn build_partition(spec: &OperatorSpec, xi: &[f64], eps: f64) -> Result<Partition> {
    validate_eps(eps)?;
    let zeros = find_zeros(spec, xi)?;
    partition_from_zeros(spec, &zeros, eps)
}

pub fn partition_from_zeros(spec: &OperatorSpec, zeros: &ZeroSet, eps: f64) -> Result<Partition> {
    validate_eps(eps)?;
    let ev = DeltaEval::new(spec, &zeros.xi);
    let work = spec.work;
    let excluded = excluded_set(&zeros.sigma, eps, work);
    let kept = kept_set(&excluded, work);
    let measure: f64 = excluded.iter().map(|(lo, hi)| hi - lo).sum();

    let mut min_delta = f64::INFINITY;
    let mut log_integral = 0.0;
    let mut evals = 0;
    let mut capped = false;
    let integrand = |t: f64| {
        let (d, dd) = ev.eval(t);
        dd.abs() / d
    };
    for &(c, d) in &kept {
        let sub_nodes = ((SCAN_NODES as f64 * (d - c) / (work.1 - work.0)).ceil() as usize).max(16);
        let crit = critical_points(&ev, c, d, sub_nodes);
        let mut pts = vec![c];
        pts.extend(crit.iter().copied());
        pts.push(d);
        for &t in &pts {
            min_delta = min_delta.min(ev.eval(t).0);
        }
        for i in 0..=sub_nodes {
            let t = c + (d - c) * i as f64 / sub_nodes as f64;
            min_delta = min_delta.min(ev.eval(t).0);
        }
        for w in pts.windows(2) {
            if w[1] > w[0] {
                let mut s = Simpson {
                    f: &integrand,
                    evals: 0,
                    capped: false,
                };
                log_integral += s.integrate(w[0], w[1]);
                evals += s.evals;
                capped |= s.capped;
            }
        }
    }
    if kept.is_empty() {
        min_delta = f64::NAN;
    }
    let mut warnings = zeros.warnings.clone();
    if capped {
        warnings.push("log integral quadrature hit the evaluation cap".into());
    }
    Ok(Partition {
        xi_dir: zeros.xi.clone(),
        eps,
        sigma: zeros.sigma.clone(),
        bounds: PartitionBounds {
            p_observed: excluded.len(),
            measure_excluded: measure,
            min_delta_kept: min_delta,
            delta_sup: zeros.delta_sup,
            min_delta_ratio: min_delta / zeros.delta_sup,
            log_integral,
            quadrature_evals: evals,
            quadrature_capped: capped,
        },
        excluded,
        kept,
        warnings,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct PqRow {
    pub xi_dir: Vec<f64>,
    pub eps: f64,
    pub intervals: usize,
    pub measure: f64,
    pub min_delta_ratio: f64,
    pub log_integral: f64,
    /// `log_integral / log(1/ε)`.
    pub c2_ratio: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct PqEstimate {
    pub p: usize,
    /// Rounded `q`; `None` when the minimum data is not monotone in `ε`.
    pub q: Option<u32>,
    /// Least squares slope of `log(min Δ/‖Δ‖)` against `log ε`, per direction.
    pub slopes: Vec<f64>,
    pub monotone: bool,
    /// `min over ε of (min Δ/‖Δ‖) / ε^{2q}`.
    pub c1: f64,
    /// `max over ε of log_integral / log(1/ε)`.
    pub c2: f64,
    /// `max / min` of the per-`ε` ratios `log_integral / log(1/ε)`.
    pub c2_spread: f64,
    pub rows: Vec<PqRow>,
}

pub fn least_squares_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

pub fn estimate_pq(spec: &OperatorSpec, xi_dirs: &[Vec<f64>], eps_list: &[f64]) -> Result<PqEstimate> {
    if eps_list.len() < 3 {
        return Err(Error::invalid("eps", "at least three values are needed"));
    }
    let lo = eps_list.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = eps_list.iter().copied().fold(0.0, f64::max);
    if hi / lo < 10.0 * (1.0 - 1e-9) {
        return Err(Error::invalid("eps", "values must span at least one decade"));
    }
    let mut eps_sorted = eps_list.to_vec();
    eps_sorted.sort_by(|a, b| b.total_cmp(a));
    let mut rows = Vec::new();
    let mut slopes = Vec::new();
    let mut monotone = true;
    let mut p = 0;
    for dir in xi_dirs {
        let zeros = find_zeros(spec, dir)?;
        let parts: Vec<Partition> = eps_sorted
            .iter()
            .map(|&e| partition_from_zeros(spec, &zeros, e))
            .collect::<Result<_>>()?;
        for w in parts.windows(2) {
            if w[1].bounds.min_delta_ratio > w[0].bounds.min_delta_ratio * (1.0 + 1e-9) {
                monotone = false;
            }
        }
        let x: Vec<f64> = eps_sorted.iter().map(|e| e.ln()).collect();
        let y: Vec<f64> = parts.iter().map(|pt| pt.bounds.min_delta_ratio.ln()).collect();
        slopes.push(if zeros.sigma.is_empty() { 0.0 } else { least_squares_slope(&x, &y) });
        for pt in parts {
            p = p.max(pt.bounds.p_observed);
            rows.push(PqRow {
                xi_dir: dir.clone(),
                eps: pt.eps,
                intervals: pt.bounds.p_observed,
                measure: pt.bounds.measure_excluded,
                min_delta_ratio: pt.bounds.min_delta_ratio,
                log_integral: pt.bounds.log_integral,
                c2_ratio: pt.bounds.log_integral / (1.0 / pt.eps).ln(),
            });
        }
    }
    let max_slope = slopes.iter().copied().fold(0.0, f64::max);
    let q = monotone.then(|| (0.5 * max_slope).round().max(0.0) as u32);
    let q_exp = q.map(|q| 2.0 * q as f64).unwrap_or(max_slope);
    let c1 = rows
        .iter()
        .map(|r| r.min_delta_ratio / r.eps.powf(q_exp))
        .fold(f64::INFINITY, f64::min);
    let c2 = rows.iter().map(|r| r.c2_ratio).fold(0.0, f64::max);
    let c2_min = rows.iter().map(|r| r.c2_ratio).fold(f64::INFINITY, f64::min);
    let c2_spread = if c2 == 0.0 { 1.0 } else { c2 / c2_min };
    Ok(PqEstimate {
        p,
        q,
        slopes,
        monotone,
        c1,
        c2,
        c2_spread,
        rows,
    })
}
