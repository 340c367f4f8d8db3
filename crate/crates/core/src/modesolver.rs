//! Per-frequency integration of `∂_t V = i(<ξ>A + B)V`, the two energies
//! `|V|²` and `<QV, V>` with their Gronwall envelopes, and the dyadic
//! frequency sweep that measures how `sup_t |V(t, ξ)| / |V(t_0, ξ)|` grows.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::operator::{euclidean_norm, japanese_bracket, ModeSymbol, OperatorSpec};
use crate::partition::{least_squares_slope, Partition};
use crate::symmetriser::{build_symmetriser, discriminant};

const MIN_STEP: f64 = 1e-14;
/// `|V|` beyond this multiple of `|V(t_0)|` stops the integration.
pub const OVERFLOW_RATIO: f64 = 1e300;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntegratorOptions {
    /// Local relative error per step.
    pub rel_tol: f64,
    /// Step cap; the effective cap is `min(h_max, 0.1/<ξ>)`.
    pub h_max: f64,
    /// Minimum number of uniformly spaced output nodes.
    pub min_output: usize,
    /// Classical RK4 with (at most) this step instead of the adaptive scheme.
    /// The `0.1/<ξ>` cap does not apply, so convergence studies see the step
    /// they ask for.
    pub fixed_step: Option<f64>,
    /// Additional output times, e.g. partition boundaries.
    pub extra_nodes: Vec<f64>,
}

impl Default for IntegratorOptions {
    fn default() -> Self {
        IntegratorOptions {
            rel_tol: 1e-10,
            h_max: 1e-2,
            min_output: 512,
            fixed_step: None,
            extra_nodes: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ModeTrace {
    pub xi: Vec<f64>,
    pub t_nodes: Vec<f64>,
    pub v: Vec<Vec<Complex64>>,
    /// `|V|²`.
    pub e_kov: Vec<f64>,
    /// `<QV, V>` on kept nodes, once annotated.
    pub e_hyp: Vec<Option<f64>>,
    /// The two-case energy, once annotated.
    pub energy: Vec<Option<f64>>,
    pub envelope: Vec<Option<f64>>,
    pub bound_slack: Vec<Option<f64>>,
    pub constants: Option<EnergyConstants>,
    pub steps: usize,
    pub rejected: usize,
    /// Integration stopped early because `|V|` exceeded [`OVERFLOW_RATIO`].
    pub overflow: bool,
}

impl ModeTrace {
    pub fn final_v(&self) -> &[Complex64] {
        self.v.last().map(|v| v.as_slice()).unwrap_or(&[])
    }

    /// `sup_t |V(t)| / |V(t_0)|`.
    pub fn sup_ratio(&self) -> f64 {
        let v0 = self.e_kov[0].sqrt();
        let sup = self.e_kov.iter().fold(0.0f64, |acc, e| acc.max(e.sqrt()));
        if self.overflow {
            return f64::INFINITY;
        }
        sup / v0
    }
}

fn norm(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

struct Generator<'a> {
    sym: ModeSymbol<'a>,
    bracket: f64,
    row: Vec<Complex64>,
    hint: Option<f64>,
}

impl Generator<'_> {
    /// `out = i(<ξ>A + B) v`.
    fn apply(&mut self, t: f64, v: &[Complex64], out: &mut [Complex64]) {
        let m = v.len();
        self.sym.generator_row(t, self.hint, &mut self.row);
        let i = Complex64::i();
        for k in 0..m - 1 {
            out[k] = i * self.bracket * v[k + 1];
        }
        let mut last = Complex64::new(0.0, 0.0);
        for (r, x) in self.row.iter().zip(v) {
            last += r * x;
        }
        out[m - 1] = i * last;
    }

    fn rk4(&mut self, t: f64, y: &[Complex64], h: f64, scratch: &mut [Vec<Complex64>; 5]) -> Vec<Complex64> {
        let m = y.len();
        let [k1, k2, k3, k4, tmp] = scratch;
        self.apply(t, y, k1);
        for j in 0..m {
            tmp[j] = y[j] + k1[j] * (0.5 * h);
        }
        self.apply(t + 0.5 * h, tmp, k2);
        for j in 0..m {
            tmp[j] = y[j] + k2[j] * (0.5 * h);
        }
        self.apply(t + 0.5 * h, tmp, k3);
        for j in 0..m {
            tmp[j] = y[j] + k3[j] * h;
        }
        self.apply(t + h, tmp, k4);
        (0..m)
            .map(|j| y[j] + (k1[j] + k2[j] * 2.0 + k3[j] * 2.0 + k4[j]) * (h / 6.0))
            .collect()
    }
}

fn output_times(t_span: (f64, f64), opts: &IntegratorOptions, breaks: &[f64]) -> Vec<f64> {
    let (s, e) = t_span;
    let n = opts.min_output.max(1);
    let mut ts: Vec<f64> = (0..=n).map(|i| if i == n { e } else { s + (e - s) * i as f64 / n as f64 }).collect();
    ts.extend(opts.extra_nodes.iter().copied().filter(|&t| t > s && t < e));
    ts.extend(breaks.iter().copied().filter(|&t| t > s && t < e));
    ts.sort_by(f64::total_cmp);
    ts.dedup_by(|a, b| (*a - *b).abs() <= 1e-15 * (1.0 + b.abs()));
    ts
}

/// Integrates one Fourier mode forward over `t_span`. Piecewise lower order
/// coefficients are handled by restarting at each breakpoint, with the piece
/// chosen by the segment being integrated.
pub fn integrate_mode(
    spec: &OperatorSpec,
    xi: &[f64],
    v0: &[Complex64],
    t_span: (f64, f64),
    opts: &IntegratorOptions,
) -> Result<ModeTrace> {
    if xi.len() != spec.n {
        return Err(Error::invalid("xi", format!("length {} != n = {}", xi.len(), spec.n)));
    }
    if v0.len() != spec.m {
        return Err(Error::invalid("V0", format!("length {} != m = {}", v0.len(), spec.m)));
    }
    if v0.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::invalid("V0", "non-finite component"));
    }
    let (a, b) = spec.work;
    let slack = 1e-12 * (1.0 + (b - a).abs());
    if !(t_span.0 < t_span.1 && t_span.0 >= a - slack && t_span.1 <= b + slack) {
        return Err(Error::invalid(
            "t_span",
            format!("[{}, {}] must be a forward subinterval of [{a}, {b}]", t_span.0, t_span.1),
        ));
    }
    if !(opts.rel_tol > 0.0 && opts.h_max > 0.0 && opts.fixed_step.is_none_or(|h| h > 0.0)) {
        return Err(Error::invalid("integrator", "tolerance and step cap must be positive"));
    }
    let bracket = japanese_bracket(xi);
    let h_cap = opts.h_max.min(0.1 / bracket);
    let breaks = spec.breakpoints();
    let outputs = output_times(t_span, opts, &breaks);
    let mut gen = Generator {
        sym: spec.mode_symbol(xi),
        bracket,
        row: vec![Complex64::new(0.0, 0.0); spec.m],
        hint: None,
    };
    let m = spec.m;
    let mut scratch: [Vec<Complex64>; 5] = std::array::from_fn(|_| vec![Complex64::new(0.0, 0.0); m]);
    let mut y = v0.to_vec();
    let v0_norm = norm(v0);
    let mut t = outputs[0];
    let mut nodes = vec![t];
    let mut vs = vec![y.clone()];
    let mut h = h_cap;
    let mut steps = 0;
    let mut rejected = 0;
    let mut overflow = false;

    'outer: for &target in &outputs[1..] {
        // The smooth segment is identified by the interval being integrated.
        gen.hint = Some(0.5 * (t + target));
        if let Some(h_fixed) = opts.fixed_step {
            let n = ((target - t) / h_fixed).ceil().max(1.0) as usize;
            let step = (target - t) / n as f64;
            for k in 0..n {
                y = gen.rk4(t + k as f64 * step, &y, step, &mut scratch);
                steps += 1;
            }
            t = target;
        } else {
            while t < target {
                let remaining = target - t;
                let clipped = h >= remaining;
                let step = if clipped { remaining } else { h };
                let full = gen.rk4(t, &y, step, &mut scratch);
                let half = gen.rk4(t, &y, 0.5 * step, &mut scratch);
                let two = gen.rk4(t + 0.5 * step, &half, 0.5 * step, &mut scratch);
                let diff: Vec<Complex64> = two.iter().zip(&full).map(|(a, b)| a - b).collect();
                let err = norm(&diff) / 15.0;
                let scale = norm(&two).max(f64::MIN_POSITIVE);
                if !err.is_finite() || !scale.is_finite() {
                    return Err(Error::NonFinite { t, xi: xi.to_vec() });
                }
                let ratio = opts.rel_tol * scale / err.max(f64::MIN_POSITIVE);
                if err <= opts.rel_tol * scale {
                    y = two.iter().zip(&diff).map(|(a, d)| a + d / 15.0).collect();
                    t = if clipped { target } else { t + step };
                    steps += 1;
                    let grow = (0.9 * ratio.powf(0.2)).clamp(0.2, 2.0);
                    let proposed = (step * grow).min(h_cap);
                    h = if clipped { h.max(proposed).min(h_cap) } else { proposed };
                    if norm(&y) > OVERFLOW_RATIO * v0_norm.max(f64::MIN_POSITIVE) {
                        overflow = true;
                        nodes.push(t);
                        vs.push(y.clone());
                        break 'outer;
                    }
                } else {
                    rejected += 1;
                    h = step * (0.9 * ratio.powf(0.2)).clamp(0.1, 0.9);
                    if h < MIN_STEP {
                        return Err(Error::StepUnderflow { h, t, xi: xi.to_vec() });
                    }
                }
            }
        }
        if y.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite { t, xi: xi.to_vec() });
        }
        nodes.push(t);
        vs.push(y.clone());
        if norm(&y) > OVERFLOW_RATIO * v0_norm.max(f64::MIN_POSITIVE) {
            overflow = true;
            break;
        }
    }
    let e_kov: Vec<f64> = vs.iter().map(|v| v.iter().map(|z| z.norm_sqr()).sum()).collect();
    let n = nodes.len();
    Ok(ModeTrace {
        xi: xi.to_vec(),
        t_nodes: nodes,
        v: vs,
        e_kov,
        e_hyp: vec![None; n],
        energy: vec![None; n],
        envelope: vec![None; n],
        bound_slack: vec![None; n],
        constants: None,
        steps,
        rejected,
        overflow,
    })
}

// ---- energies -----------------------------------------------------------

/// `Re <Q v, v>` for real symmetric `Q`.
pub fn quadratic_form(q: &DMatrix<f64>, v: &[Complex64]) -> f64 {
    let m = v.len();
    let mut s = 0.0;
    for i in 0..m {
        for j in 0..m {
            s += q[(i, j)] * (v[j] * v[i].conj()).re;
        }
    }
    s
}

#[derive(Debug, Clone, Serialize)]
pub struct CommutatorBound {
    /// Frobenius norm of `QB - B*Q` from the matrix product.
    pub direct: f64,
    /// Frobenius norm assembled from `d_ij = q_{im} b_j - conj(b_i) q_{jm}`.
    pub entrywise: f64,
    /// Largest entrywise difference between the two.
    pub max_entry_diff: f64,
}

pub fn qb_commutator_bound(frame: &crate::operator::SymbolFrame, symm: &crate::symmetriser::Symmetriser) -> CommutatorBound {
    let q = symm.q.map(|x| Complex64::new(x, 0.0));
    let bm = frame.b_matrix();
    let direct = &q * &bm - bm.adjoint() * &q;
    let m = frame.m();
    let entry = DMatrix::from_fn(m, m, |i, j| crate::analysis::levi_entry(&symm.q, &frame.b, i, j));
    let max_entry_diff = (&direct - &entry).iter().fold(0.0f64, |acc, z| acc.max(z.norm()));
    CommutatorBound {
        direct: direct.norm(),
        entrywise: entry.norm(),
        max_entry_diff,
    }
}

/// Hermitian rate matrix `H = ∂_t Q + i(QB - B*Q)`, so that
/// `∂_t <QV, V> = <HV, V>` along solutions.
pub fn energy_rate_matrix(frame: &crate::operator::SymbolFrame, q: &DMatrix<f64>, dq: &DMatrix<f64>) -> DMatrix<Complex64> {
    let qc = q.map(|x| Complex64::new(x, 0.0));
    let bm = frame.b_matrix();
    let comm = &qc * &bm - bm.adjoint() * &qc;
    dq.map(|x| Complex64::new(x, 0.0)) + comm * Complex64::i()
}

#[derive(Debug, Clone, Serialize)]
pub struct EnergyConstants {
    /// `sup μ_max(H, Q) / (1 + |∂_t Δ|/Δ)` over kept nodes.
    pub c: f64,
    /// `sup ‖A‖`.
    pub c_a: f64,
    /// `sup ‖B‖`.
    pub c_b: f64,
}

fn in_kept(kept: &[(f64, f64)], t: f64) -> Option<usize> {
    kept.iter().position(|&(c, d)| t >= c - 1e-14 && t <= d + 1e-14)
}

/// Energy constants sampled on the given nodes and their midpoints.
pub fn energy_constants(spec: &OperatorSpec, xi: &[f64], nodes: &[f64], kept: &[(f64, f64)]) -> EnergyConstants {
    let sym = spec.mode_symbol(xi);
    let mut samples: Vec<f64> = nodes.to_vec();
    samples.extend(nodes.windows(2).map(|w| 0.5 * (w[0] + w[1])));
    let mut c = 0.0f64;
    let mut c_a = 0.0f64;
    let mut c_b = 0.0f64;
    for &t in &samples {
        for hint in [None, Some(t - 1e-12), Some(t + 1e-12)] {
            let frame = sym.frame_with_hint(t, hint);
            c_a = c_a.max(linalg::spectral_norm(&frame.a_matrix()));
            c_b = c_b.max(linalg::spectral_norm_complex(&frame.b_matrix()));
            if in_kept(kept, t).is_none() {
                continue;
            }
            let s = build_symmetriser(&frame);
            if s.delta <= 0.0 {
                continue;
            }
            let h = energy_rate_matrix(&frame, &s.q, &s.dq);
            if let Some(mu) = linalg::pencil_eigenvalues(&s.q, &h) {
                let top = *mu.last().unwrap();
                c = c.max(top / (1.0 + s.d_delta.abs() / s.delta));
            }
        }
    }
    EnergyConstants { c, c_a, c_b }
}

/// Total variation of `log Δ` between `s` and `e`, splitting at a critical
/// point when `∂_t Δ` changes sign.
fn log_variation(sym: &ModeSymbol, s: f64, e: f64, ds: (f64, f64), de: (f64, f64)) -> f64 {
    if ds.1 * de.1 >= 0.0 {
        return (de.0.ln() - ds.0.ln()).abs();
    }
    let eval = |t: f64| {
        let (a, da) = sym.principal_row(t);
        discriminant(&a, &da)
    };
    let neg = ds.1 < 0.0;
    let (mut lo, mut hi) = (s, e);
    for _ in 0..100 {
        if hi - lo <= 1e-14 * (1.0 + hi.abs()) {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if (eval(mid).1 < 0.0) == neg {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let dm = eval(0.5 * (lo + hi));
    (dm.0.ln() - ds.0.ln()).abs() + (de.0.ln() - dm.0.ln()).abs()
}

/// Annotates a trace with the two-case energy (`<QV, V>` on kept intervals,
/// `|V|²` on excluded ones) and its Gronwall envelope, restarted at the left
/// end of every interval. `constants = None` skips the envelopes.
pub fn energy_trace(
    spec: &OperatorSpec,
    mut trace: ModeTrace,
    partition: &Partition,
    constants: Option<EnergyConstants>,
) -> ModeTrace {
    let sym = spec.mode_symbol(&trace.xi);
    let bracket = japanese_bracket(&trace.xi);
    let n = trace.t_nodes.len();
    let mut deltas = Vec::with_capacity(n);
    for k in 0..n {
        let t = trace.t_nodes[k];
        let (a, da) = sym.principal_row(t);
        deltas.push(discriminant(&a, &da));
        if in_kept(&partition.kept, t).is_some() {
            let q = crate::symmetriser::symmetriser_matrix(&a);
            let e = quadratic_form(&q, &trace.v[k]);
            trace.e_hyp[k] = Some(e);
            trace.energy[k] = Some(e);
        } else {
            trace.energy[k] = Some(trace.e_kov[k]);
        }
    }
    let Some(consts) = constants else {
        return trace;
    };
    let kov_rate = 2.0 * (consts.c_a * bracket + consts.c_b);
    // Region id: kept interval index or excluded (usize::MAX - index).
    let mut anchor: Option<(usize, usize, f64)> = None; // (region, node, energy)
    let mut log_var = 0.0;
    for k in 0..n {
        let t = trace.t_nodes[k];
        let region = match in_kept(&partition.kept, t) {
            Some(i) => i,
            None => usize::MAX - partition.excluded.iter().position(|&(lo, hi)| t > lo && t < hi).unwrap_or(0),
        };
        let kept = region < partition.kept.len();
        let new_region = anchor.map(|(r, _, _)| r != region).unwrap_or(true);
        if new_region {
            if kept {
                anchor = Some((region, k, trace.e_hyp[k].unwrap()));
                log_var = 0.0;
            } else {
                // An excluded interval starts at the last node before it.
                let start = if k > 0 { k - 1 } else { 0 };
                anchor = Some((region, start, trace.e_kov[start]));
            }
        } else if kept {
            log_var += log_variation(&sym, trace.t_nodes[k - 1], t, deltas[k - 1], deltas[k]);
        }
        let (_, start, e0) = anchor.unwrap();
        let env = if kept {
            let (c_i, d_i) = partition.kept[region];
            (consts.c * (d_i - c_i)).exp() * (consts.c * log_var).exp() * e0
        } else {
            e0 * (kov_rate * (t - trace.t_nodes[start])).exp()
        };
        let e = if kept { trace.e_hyp[k].unwrap() } else { trace.e_kov[k] };
        trace.envelope[k] = Some(env);
        trace.bound_slack[k] = Some(if env > 0.0 { e / env } else if e <= 0.0 { 0.0 } else { f64::INFINITY });
    }
    trace.constants = Some(consts);
    trace
}

/// Integrates one mode from `t_0` to `b` with the partition boundaries as
/// output nodes and annotates it with energies, constants and envelopes.
pub fn traced_mode(
    spec: &OperatorSpec,
    xi: &[f64],
    v0: &[Complex64],
    eps: f64,
    opts: &IntegratorOptions,
) -> Result<(ModeTrace, Partition)> {
    let partition = crate::partition::build_partition(spec, xi, eps)?;
    let mut o = opts.clone();
    for &(lo, hi) in &partition.excluded {
        o.extra_nodes.push(lo);
        o.extra_nodes.push(hi);
    }
    let trace = integrate_mode(spec, xi, v0, (spec.t0, spec.work.1), &o)?;
    let consts = energy_constants(spec, xi, &trace.t_nodes, &partition.kept);
    let trace = energy_trace(spec, trace, &partition, Some(consts));
    Ok((trace, partition))
}

// ---- frequency sweep ----------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "policy", rename_all = "snake_case")]
pub enum V0Policy {
    Ones,
    /// Seeded random complex unit vectors, one per magnitude.
    Random { seed: u64 },
}

pub fn initial_vector(policy: V0Policy, m: usize, index: usize) -> Vec<Complex64> {
    match policy {
        V0Policy::Ones => vec![Complex64::new(1.0, 0.0); m],
        V0Policy::Random { seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(index as u64));
            let v: Vec<Complex64> = (0..m)
                .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
                .collect();
            let n = norm(&v).max(f64::MIN_POSITIVE);
            v.into_iter().map(|z| z / n).collect()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GrowthVerdict {
    Polynomial,
    Superpolynomial,
    Inconclusive,
}

#[derive(Debug, Clone, Serialize)]
pub struct GrowthFit {
    pub xi_dir: Vec<f64>,
    pub xi_mags: Vec<f64>,
    pub brackets: Vec<f64>,
    /// `sup_t |V(t, ξ)| / |V(t_0, ξ)|` per magnitude.
    pub ratios: Vec<f64>,
    /// `|V(b, ξ)| / |V(t_0, ξ)|` per magnitude.
    pub final_ratios: Vec<f64>,
    pub slope: f64,
    pub slope_lower: f64,
    pub slope_upper: f64,
    /// `slope_upper - slope_lower`.
    pub slope_drift: f64,
    pub slope_thirds: [f64; 3],
    pub verdict: GrowthVerdict,
    /// First magnitude whose ratio overflowed.
    pub overflow_witness: Option<f64>,
    /// Time regularity of solutions: `C^m`, or `C^{m-1}` with `W^{∞,m}` when
    /// lower order terms are only bounded.
    pub regularity: String,
}

/// Dyadic magnitudes `lo, 2lo, ..., ≤ hi`.
pub fn dyadic_magnitudes(lo: f64, hi: f64) -> Vec<f64> {
    let mut out = Vec::new();
    let mut s = lo;
    while s <= hi * (1.0 + 1e-12) {
        out.push(s);
        s *= 2.0;
    }
    out
}

fn thirds(x: &[f64], y: &[f64]) -> [f64; 3] {
    let n = x.len();
    let cut = |k: usize| ((k * (n - 1)) as f64 / 3.0).round() as usize;
    let mut out = [0.0; 3];
    for (k, o) in out.iter_mut().enumerate() {
        let (s, e) = (cut(k), cut(k + 1));
        *o = least_squares_slope(&x[s..=e], &y[s..=e]);
    }
    out
}

pub fn regularity_tag(spec: &OperatorSpec) -> String {
    if spec.has_piecewise_lower() {
        format!("C^{} with W^{{inf,{}}} in t", spec.m - 1, spec.m)
    } else {
        format!("C^{}", spec.m)
    }
}

/// Classifies a sweep from its ratios.
pub fn fit_growth(xi_dir: &[f64], mags: &[f64], ratios: Vec<f64>, final_ratios: Vec<f64>, regularity: String) -> GrowthFit {
    let n = mags.len();
    let brackets: Vec<f64> = mags
        .iter()
        .map(|&s| japanese_bracket(&xi_dir.iter().map(|x| x * s).collect::<Vec<_>>()))
        .collect();
    let overflow_witness = ratios
        .iter()
        .position(|r| !r.is_finite() || *r > OVERFLOW_RATIO)
        .map(|k| mags[k]);
    let x: Vec<f64> = brackets.iter().map(|b| b.ln()).collect();
    let y: Vec<f64> = ratios.iter().map(|r| r.max(1e-16).min(OVERFLOW_RATIO).ln()).collect();
    let half = n.div_ceil(2);
    let slope = least_squares_slope(&x, &y);
    let slope_lower = least_squares_slope(&x[..half], &y[..half]);
    let slope_upper = least_squares_slope(&x[n - half..], &y[n - half..]);
    let slope_drift = slope_upper - slope_lower;
    let slope_thirds = thirds(&x, &y);
    let verdict = if overflow_witness.is_some() {
        GrowthVerdict::Superpolynomial
    } else if slope_drift.abs() < 0.5 {
        GrowthVerdict::Polynomial
    } else if slope_drift >= 1.0 && slope_thirds[0] < slope_thirds[1] && slope_thirds[1] < slope_thirds[2] {
        GrowthVerdict::Superpolynomial
    } else {
        GrowthVerdict::Inconclusive
    };
    GrowthFit {
        xi_dir: xi_dir.to_vec(),
        xi_mags: mags.to_vec(),
        brackets,
        ratios,
        final_ratios,
        slope,
        slope_lower,
        slope_upper,
        slope_drift,
        slope_thirds,
        verdict,
        overflow_witness,
        regularity,
    }
}

pub fn validate_magnitudes(mags: &[f64]) -> Result<()> {
    if mags.len() < 6 {
        return Err(Error::invalid("xi", "need at least 6 magnitudes"));
    }
    if mags[0] < 2.0 {
        return Err(Error::invalid("xi", "smallest magnitude must be at least 2"));
    }
    if mags.windows(2).any(|w| ((w[1] / w[0]) - 2.0).abs() > 1e-9) {
        return Err(Error::invalid("xi", "magnitudes must be dyadic (successive ratio 2)"));
    }
    Ok(())
}

/// One mode per magnitude along `xi_dir`, integrated from `t_0` to `b`.
pub fn growth_scan(
    spec: &OperatorSpec,
    xi_dir: &[f64],
    magnitudes: &[f64],
    policy: V0Policy,
    opts: &IntegratorOptions,
) -> Result<GrowthFit> {
    validate_magnitudes(magnitudes)?;
    let dn = euclidean_norm(xi_dir);
    if xi_dir.len() != spec.n || !(dn > 0.0) {
        return Err(Error::invalid("xi-dir", "must be a nonzero vector of length n"));
    }
    let dir: Vec<f64> = xi_dir.iter().map(|x| x / dn).collect();
    let results: Vec<Result<(f64, f64)>> = magnitudes
        .par_iter()
        .enumerate()
        .map(|(k, &s)| {
            let xi: Vec<f64> = dir.iter().map(|x| x * s).collect();
            let v0 = initial_vector(policy, spec.m, k);
            let tr = integrate_mode(spec, &xi, &v0, (spec.t0, spec.work.1), opts)?;
            let fin = if tr.overflow {
                f64::INFINITY
            } else {
                norm(tr.final_v()) / norm(&v0)
            };
            Ok((tr.sup_ratio(), fin))
        })
        .collect();
    let mut ratios = Vec::new();
    let mut finals = Vec::new();
    for r in results {
        let (a, b) = r?;
        ratios.push(a);
        finals.push(b);
    }
    Ok(fit_growth(&dir, magnitudes, ratios, finals, regularity_tag(spec)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::RealPoly;
    use approx::assert_relative_eq;

    #[test]
    fn scalar_flow_is_unitary() {
        let spec = OperatorSpec::from_roots_1d(&[RealPoly::constant(0.7)], (-1.0, 2.0), (0.0, 1.0)).unwrap();
        let tr = integrate_mode(&spec, &[40.0], &[Complex64::new(0.6, 0.8)], (0.0, 1.0), &IntegratorOptions::default()).unwrap();
        for e in &tr.e_kov {
            assert!((e.sqrt() - 1.0).abs() < 1e-9);
        }
        // ∂_t V = i <ξ> a V with <ξ> a = 0.7 ξ.
        let expected = Complex64::new(0.6, 0.8) * Complex64::from_polar(1.0, 0.7 * 40.0);
        assert!((tr.final_v()[0] - expected).norm() < 1e-8);
    }

    #[test]
    fn dyadic_helper() {
        assert_eq!(dyadic_magnitudes(16.0, 1024.0).len(), 7);
        assert!(validate_magnitudes(&[2.0, 4.0, 8.0]).is_err());
        assert!(validate_magnitudes(&dyadic_magnitudes(2.0, 64.0)).is_ok());
    }

    #[test]
    fn random_initial_vectors_are_unit_and_seeded() {
        let a = initial_vector(V0Policy::Random { seed: 3 }, 3, 1);
        let b = initial_vector(V0Policy::Random { seed: 3 }, 3, 1);
        assert_eq!(a, b);
        assert_relative_eq!(norm(&a), 1.0, epsilon = 1e-14);
    }
}
