//! Full Cauchy problem in one space dimension on a periodic grid. The data
//! `g_j = D_t^j u(t_0, ·)` are transformed, every Fourier mode is advanced by
//! [`integrate_mode`], and `u` with its time derivatives is reassembled from
//! `u_l = D_t^{l-1} <D>^{m-l} u`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;
use std::path::Path;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::linalg;
use crate::modesolver::{integrate_mode, regularity_tag, IntegratorOptions};
use crate::operator::{japanese_bracket, CoeffValue, OperatorSpec};
use crate::partition::least_squares_slope;

/// Spectral amplitudes below this fraction of the largest count as zero.
const SPECTRAL_ZERO: f64 = 1e-14;
/// Smallest `|ξ|` entering the loss fit, the same as the lowest magnitude of
/// a growth scan; below it the ratios are not yet in the asymptotic regime.
pub const LOSS_XI_MIN: f64 = 16.0;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CauchyData {
    /// Left end of the grid; samples sit at `x0 + k L / N`.
    pub x0: f64,
    /// Period `L`.
    pub period: f64,
    /// `g_0, ..., g_{m-1}` sampled on the grid.
    pub g: Vec<Vec<Complex64>>,
    pub t0: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct DataFile {
    #[serde(default)]
    x0: f64,
    #[serde(default = "default_period")]
    period: f64,
    t0: f64,
    g: Vec<Vec<CoeffValue>>,
}

fn default_period() -> f64 {
    TAU
}

impl CauchyData {
    pub fn new(x0: f64, period: f64, g: Vec<Vec<Complex64>>, t0: f64) -> Result<Self> {
        let d = CauchyData { x0, period, g, t0 };
        d.validate()?;
        Ok(d)
    }

    /// Real samples of each `g_j` on the standard grid of `[0, 2π)`.
    pub fn from_functions(m: usize, n_grid: usize, t0: f64, f: impl Fn(usize, f64) -> Complex64) -> Result<Self> {
        let g = (0..m)
            .map(|j| (0..n_grid).map(|k| f(j, TAU * k as f64 / n_grid as f64)).collect())
            .collect();
        CauchyData::new(0.0, TAU, g, t0)
    }

    /// Data with seeded random Fourier coefficients of size `<κ>^{-decay}`
    /// for `|κ| ≤ k_max`. A negative `decay` gives data of negative Sobolev
    /// regularity in the limit `N → ∞`.
    pub fn random_spectral(m: usize, n_grid: usize, t0: f64, seed: u64, decay: f64, k_max: usize) -> Result<Self> {
        check_grid_size(n_grid)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let fft = FftPlanner::new().plan_fft_inverse(n_grid);
        let mut g = Vec::with_capacity(m);
        for _ in 0..m {
            let mut buf = vec![Complex64::new(0.0, 0.0); n_grid];
            for (k, c) in buf.iter_mut().enumerate() {
                let kappa = wavenumber(k, n_grid);
                if kappa.unsigned_abs() as usize > k_max || 2 * kappa.unsigned_abs() as usize >= n_grid {
                    continue;
                }
                let size = (1.0 + (kappa * kappa) as f64).powf(-0.5 * decay);
                *c = Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)) * size;
            }
            fft.process(&mut buf);
            g.push(buf);
        }
        CauchyData::new(0.0, TAU, g, t0)
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let f: DataFile = serde_json::from_str(s)?;
        let g = f
            .g
            .into_iter()
            .map(|row| row.into_iter().map(Complex64::from).collect())
            .collect();
        CauchyData::new(f.x0, f.period, g, f.t0)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        CauchyData::from_json_str(&std::fs::read_to_string(path)?)
    }

    pub fn m(&self) -> usize {
        self.g.len()
    }

    pub fn n_grid(&self) -> usize {
        self.g.first().map_or(0, Vec::len)
    }

    pub fn x_grid(&self) -> Vec<f64> {
        let n = self.n_grid();
        (0..n).map(|k| self.x0 + self.period * k as f64 / n as f64).collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.g.is_empty() {
            return Err(Error::invalid("g", "need at least one data function"));
        }
        let n = self.n_grid();
        check_grid_size(n)?;
        if self.g.iter().any(|gj| gj.len() != n) {
            return Err(Error::invalid("g", "all data functions must share the grid"));
        }
        if self.g.iter().flatten().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::invalid("g", "non-finite sample"));
        }
        if !(self.period > 0.0 && self.period.is_finite() && self.x0.is_finite() && self.t0.is_finite()) {
            return Err(Error::invalid("grid", "period must be positive, x0 and t0 finite"));
        }
        Ok(())
    }
}

fn check_grid_size(n: usize) -> Result<()> {
    if n < 16 || !n.is_power_of_two() {
        return Err(Error::invalid("grid", format!("size {n} must be a power of two, at least 16")));
    }
    Ok(())
}

/// Signed wavenumber of FFT bin `k`; the Nyquist bin maps to `-N/2`.
fn wavenumber(k: usize, n: usize) -> i64 {
    if k < n / 2 {
        k as i64
    } else {
        k as i64 - n as i64
    }
}

/// `V_0(ξ_k)` for every grid frequency.
#[derive(Debug, Clone, Serialize)]
pub struct SpectralState {
    pub n_grid: usize,
    pub period: f64,
    pub kappa: Vec<i64>,
    /// `ξ_k = 2π κ_k / L`.
    pub xi: Vec<f64>,
    pub v0: Vec<Vec<Complex64>>,
}

impl SpectralState {
    pub fn nyquist_index(&self) -> usize {
        self.n_grid / 2
    }
}

fn forward(fft: &Arc<dyn Fft<f64>>, g: &[Complex64]) -> Vec<Complex64> {
    let mut buf = g.to_vec();
    fft.process(&mut buf);
    let scale = 1.0 / g.len() as f64;
    buf.iter_mut().for_each(|z| *z *= scale);
    buf
}

/// Normalised DFT of every `g_{l-1}` times `<ξ_k>^{m-l}`.
pub fn transform_data(data: &CauchyData) -> Result<SpectralState> {
    data.validate()?;
    let (m, n) = (data.m(), data.n_grid());
    let fft = FftPlanner::new().plan_fft_forward(n);
    let hats: Vec<Vec<Complex64>> = data.g.iter().map(|g| forward(&fft, g)).collect();
    let kappa: Vec<i64> = (0..n).map(|k| wavenumber(k, n)).collect();
    let xi: Vec<f64> = kappa.iter().map(|&k| TAU * k as f64 / data.period).collect();
    let v0 = (0..n)
        .map(|k| {
            let br = japanese_bracket(&[xi[k]]);
            (1..=m).map(|l| hats[l - 1][k] * br.powi((m - l) as i32)).collect()
        })
        .collect();
    Ok(SpectralState {
        n_grid: n,
        period: data.period,
        kappa,
        xi,
        v0,
    })
}

/// Undoes [`transform_data`]: grid samples of `g_0, ..., g_{m-1}`.
pub fn inverse_transform(state: &SpectralState) -> Vec<Vec<Complex64>> {
    let n = state.n_grid;
    let m = state.v0.first().map_or(0, Vec::len);
    let fft = FftPlanner::new().plan_fft_inverse(n);
    (1..=m)
        .map(|l| {
            let mut buf: Vec<Complex64> = (0..n)
                .map(|k| state.v0[k][l - 1] / japanese_bracket(&[state.xi[k]]).powi((m - l) as i32))
                .collect();
            fft.process(&mut buf);
            buf
        })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct CauchySolution {
    pub x: Vec<f64>,
    pub t_out: Vec<f64>,
    /// `u(t, ·)` per output time.
    pub u: Vec<Vec<Complex64>>,
    /// `D_t^j u(t, ·)` for `j = 0, ..., m-1`, per output time; `dtu[i][0] = u[i]`.
    pub dtu: Vec<Vec<Vec<Complex64>>>,
    /// `max |Im u| / max |u|` per output time.
    pub imag_ratio: Vec<f64>,
    /// Data had content in the Nyquist bin, which was discarded.
    pub nyquist_dropped: bool,
    pub modes_integrated: usize,
    pub regularity: String,
    pub warnings: Vec<String>,
}

/// Per grid frequency, `V(t, ξ_k)` at each output time; `None` for modes
/// with zero data (below `SPECTRAL_ZERO`), which stay zero.
type ModeValues = Vec<Option<Vec<Vec<Complex64>>>>;

struct Evolved {
    state: SpectralState,
    values: ModeValues,
    nyquist_dropped: bool,
    warnings: Vec<String>,
}

fn check_times(spec: &OperatorSpec, t0: f64, t_out: &[f64]) -> Result<()> {
    let (a, b) = spec.work;
    if !(t0 >= a && t0 <= b) {
        return Err(Error::OutsideWorkInterval { t: t0, a, b });
    }
    if t_out.is_empty() {
        return Err(Error::invalid("t-out", "need at least one output time"));
    }
    for &t in t_out {
        if !(t >= t0 && t <= b) {
            return Err(Error::invalid("t-out", format!("{t} must lie in [t0, b] = [{t0}, {b}]")));
        }
    }
    Ok(())
}

fn evolve(spec: &OperatorSpec, data: &CauchyData, t_out: &[f64], opts: &IntegratorOptions) -> Result<Evolved> {
    if spec.n != 1 {
        return Err(Error::invalid("spec", "full Cauchy solves need n = 1"));
    }
    if data.m() != spec.m {
        return Err(Error::invalid("g", format!("{} data functions for an operator of order {}", data.m(), spec.m)));
    }
    check_times(spec, data.t0, t_out)?;
    let mut warnings = Vec::new();
    if data.t0 != spec.work.0 {
        warnings.push(format!(
            "t0 = {} differs from the left end a = {} of the working interval",
            data.t0, spec.work.0
        ));
    }
    let mut state = transform_data(data)?;
    let amp = |v: &[Complex64]| v.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let largest = state.v0.iter().map(|v| amp(v)).fold(0.0, f64::max);
    let ny = state.nyquist_index();
    let nyquist_dropped = amp(&state.v0[ny]) > SPECTRAL_ZERO * largest;
    if nyquist_dropped {
        warnings.push("data has content in the Nyquist bin; it was discarded".into());
    }
    state.v0[ny].iter_mut().for_each(|z| *z = Complex64::new(0.0, 0.0));

    let t_end = t_out.iter().copied().fold(data.t0, f64::max);
    let mut mode_opts = opts.clone();
    mode_opts.extra_nodes.extend_from_slice(t_out);
    let values: Result<ModeValues> = (0..state.n_grid)
        .into_par_iter()
        .map(|k| {
            let v0 = &state.v0[k];
            if amp(v0) <= SPECTRAL_ZERO * largest {
                return Ok(None);
            }
            if t_end == data.t0 {
                return Ok(Some(vec![v0.clone(); t_out.len()]));
            }
            let xi = [state.xi[k]];
            let tr = integrate_mode(spec, &xi, v0, (data.t0, t_end), &mode_opts)?;
            if tr.overflow {
                return Err(Error::Overflow {
                    t: *tr.t_nodes.last().unwrap_or(&data.t0),
                    xi: xi.to_vec(),
                });
            }
            let out = t_out
                .iter()
                .map(|&t| {
                    let i = tr
                        .t_nodes
                        .iter()
                        .enumerate()
                        .min_by(|a, b| (a.1 - t).abs().total_cmp(&(b.1 - t).abs()))
                        .map_or(0, |(i, _)| i);
                    tr.v[i].clone()
                })
                .collect();
            Ok(Some(out))
        })
        .collect();
    Ok(Evolved {
        state,
        values: values?,
        nyquist_dropped,
        warnings,
    })
}

/// Solves the Cauchy problem with data `D_t^j u(t_0) = g_j` and returns `u`
/// and `D_t^j u` on the grid at every `t_out`.
pub fn solve_cauchy(
    spec: &OperatorSpec,
    data: &CauchyData,
    t_out: &[f64],
    opts: &IntegratorOptions,
) -> Result<CauchySolution> {
    let ev = evolve(spec, data, t_out, opts)?;
    let (m, n) = (spec.m, ev.state.n_grid);
    let fft = FftPlanner::new().plan_fft_inverse(n);
    let brackets: Vec<f64> = ev.state.xi.iter().map(|&x| japanese_bracket(&[x])).collect();
    let zero = Complex64::new(0.0, 0.0);
    let mut dtu = Vec::with_capacity(t_out.len());
    for i in 0..t_out.len() {
        let per_j: Vec<Vec<Complex64>> = (0..m)
            .map(|j| {
                let mut buf: Vec<Complex64> = (0..n)
                    .map(|k| match &ev.values[k] {
                        Some(vals) => vals[i][j] * brackets[k].powi(j as i32 - (m as i32 - 1)),
                        None => zero,
                    })
                    .collect();
                fft.process(&mut buf);
                buf
            })
            .collect();
        dtu.push(per_j);
    }
    let u: Vec<Vec<Complex64>> = dtu.iter().map(|d| d[0].clone()).collect();
    let imag_ratio = u
        .iter()
        .map(|ui| {
            let sup = ui.iter().map(|z| z.norm()).fold(0.0, f64::max);
            let im = ui.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
            if sup > 0.0 {
                im / sup
            } else {
                0.0
            }
        })
        .collect();
    Ok(CauchySolution {
        x: data.x_grid(),
        t_out: t_out.to_vec(),
        u,
        dtu,
        imag_ratio,
        nyquist_dropped: ev.nyquist_dropped,
        modes_integrated: ev.values.iter().filter(|v| v.is_some()).count(),
        regularity: regularity_tag(spec),
        warnings: ev.warnings,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LossVerdict {
    Finite,
    Unbounded,
    Inconclusive,
}

#[derive(Debug, Clone, Serialize)]
pub struct LossBin {
    /// Bin `[2^k, 2^{k+1})` in `|ξ|`.
    pub lower: f64,
    /// Geometric mean of `<ξ>` over the populated modes of the bin.
    pub bracket: f64,
    /// Largest `sup_{s ≤ t} ‖Φ(s, ξ)‖` in the bin.
    pub max_ratio: f64,
    pub modes: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct SobolevLoss {
    pub t: f64,
    /// `max(slope, 0)`, the number of derivatives lost between data and
    /// `u(t)`; infinite when the verdict is `unbounded`.
    pub loss: f64,
    pub slope: f64,
    pub slope_lower: f64,
    pub slope_upper: f64,
    pub verdict: LossVerdict,
    pub bins: Vec<LossBin>,
}

/// Derivative loss up to time `t`. With `Φ(s, ξ)` the propagator of the mode
/// system from `t_0`, a bound `‖Φ(s, ξ)‖ ≤ C <ξ>^σ` for `s ∈ [t_0, t]` gives
/// `‖u(s)‖_{H^r} ≤ C ‖data‖_{H^{r+σ}}` for every `r`, and no smaller `σ` works
/// for all data. The loss is the slope of the largest `sup_s ‖Φ(s, ξ)‖` per
/// dyadic bin of `|ξ|` against `<ξ>` on log axes. The data select the modes:
/// only frequencies where they are nonzero are sampled. Bins start at
/// [`LOSS_XI_MIN`]; fewer than four populated bins give an inconclusive
/// verdict, so grids of at least 512 points are needed on the standard period.
pub fn sobolev_loss(spec: &OperatorSpec, data: &CauchyData, t: f64, opts: &IntegratorOptions) -> Result<SobolevLoss> {
    if spec.n != 1 {
        return Err(Error::invalid("spec", "full Cauchy solves need n = 1"));
    }
    if data.m() != spec.m {
        return Err(Error::invalid("g", format!("{} data functions for an operator of order {}", data.m(), spec.m)));
    }
    check_times(spec, data.t0, &[t])?;
    if t <= data.t0 {
        return Err(Error::invalid("t", "must exceed t0"));
    }
    let state = transform_data(data)?;
    let m = spec.m;
    let ny = state.nyquist_index();
    let amp = |v: &[Complex64]| v.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let largest = state.v0.iter().map(|v| amp(v)).fold(0.0, f64::max);
    let modes: Vec<usize> = (0..state.n_grid)
        .filter(|&k| k != ny && state.xi[k].abs() >= LOSS_XI_MIN && amp(&state.v0[k]) > SPECTRAL_ZERO * largest)
        .collect();
    let norms: Vec<Result<f64>> = modes
        .par_iter()
        .map(|&k| {
            let xi = [state.xi[k]];
            let mut columns = Vec::with_capacity(m);
            for c in 0..m {
                let mut e = vec![Complex64::new(0.0, 0.0); m];
                e[c] = Complex64::new(1.0, 0.0);
                let tr = integrate_mode(spec, &xi, &e, (data.t0, t), opts)?;
                if tr.overflow {
                    return Ok(f64::INFINITY);
                }
                columns.push(tr);
            }
            let nodes = columns[0].v.len();
            let mut sup = 0.0f64;
            for i in 0..nodes {
                let phi = DMatrix::from_fn(m, m, |r, c| columns[c].v[i][r]);
                sup = sup.max(linalg::spectral_norm_complex(&phi));
            }
            Ok(sup)
        })
        .collect();
    let mut bins: Vec<LossBin> = Vec::new();
    let mut unbounded = false;
    for (&k, r) in modes.iter().zip(norms) {
        let ratio = r?;
        unbounded |= !ratio.is_finite();
        let xi = state.xi[k].abs();
        let lower = 2f64.powi(xi.log2().floor() as i32);
        let lb = japanese_bracket(&[xi]).ln();
        match bins.iter_mut().find(|b| b.lower == lower) {
            Some(b) => {
                b.max_ratio = b.max_ratio.max(ratio);
                b.bracket += lb;
                b.modes += 1;
            }
            None => bins.push(LossBin {
                lower,
                bracket: lb,
                max_ratio: ratio,
                modes: 1,
            }),
        }
    }
    if unbounded {
        return Ok(SobolevLoss {
            t,
            loss: f64::INFINITY,
            slope: f64::INFINITY,
            slope_lower: f64::NAN,
            slope_upper: f64::NAN,
            verdict: LossVerdict::Unbounded,
            bins,
        });
    }
    bins.sort_by(|a, b| a.lower.total_cmp(&b.lower));
    for b in &mut bins {
        b.bracket = (b.bracket / b.modes as f64).exp();
    }
    let n = bins.len();
    if n < 4 {
        return Ok(SobolevLoss {
            t,
            loss: f64::NAN,
            slope: f64::NAN,
            slope_lower: f64::NAN,
            slope_upper: f64::NAN,
            verdict: LossVerdict::Inconclusive,
            bins,
        });
    }
    let x: Vec<f64> = bins.iter().map(|b| b.bracket.ln()).collect();
    let y: Vec<f64> = bins.iter().map(|b| b.max_ratio.ln()).collect();
    let half = n.div_ceil(2);
    let slope = least_squares_slope(&x, &y);
    let slope_lower = least_squares_slope(&x[..half], &y[..half]);
    let slope_upper = least_squares_slope(&x[n - half..], &y[n - half..]);
    let drift = slope_upper - slope_lower;
    let verdict = if drift.abs() < 0.5 {
        LossVerdict::Finite
    } else if drift >= 1.0 {
        LossVerdict::Unbounded
    } else {
        LossVerdict::Inconclusive
    };
    Ok(SobolevLoss {
        t,
        loss: if verdict == LossVerdict::Unbounded {
            f64::INFINITY
        } else {
            slope.max(0.0)
        },
        slope,
        slope_lower,
        slope_upper,
        verdict,
        bins,
    })
}
