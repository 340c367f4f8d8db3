//! The operator `D_t^m u - Σ a_{ν,j}(t) D_t^{m-j} D_x^ν u` and the symbol
//! matrices of its reduction to a first order pseudo-differential system.
//!
//! With `u_l = D_t^{l-1} <D_x>^{m-l} u` the Fourier transformed system reads
//! `D_t V = <ξ> A(t,ξ) V + B(t,ξ) V`, where `A` is a companion matrix whose
//! last row is `(a_1, ..., a_m)` and `B` is zero except for its last row
//! `(b_1, ..., b_m)`:
//!
//! ```text
//! a_j = Σ_{|ν| = m-j+1} a_{ν,m-j+1}(t) ξ^ν <ξ>^{j-m-1}
//! b_j = Σ_{|ν| ≤ m-j}   a_{ν,m-j+1}(t) ξ^ν <ξ>^{j-m}
//! ```

use std::fs;
use std::path::Path;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::poly::{ComplexPoly, RealPoly};

/// Slack allowed when checking that a time lies in the working interval.
const T_SLACK: f64 = 1e-12;

pub type MultiIndex = Vec<u32>;

fn order(nu: &[u32]) -> usize {
    nu.iter().map(|&k| k as usize).sum()
}

/// `<ξ> = (1 + |ξ|²)^{1/2}`.
pub fn japanese_bracket(xi: &[f64]) -> f64 {
    (1.0 + xi.iter().map(|x| x * x).sum::<f64>()).sqrt()
}

pub fn euclidean_norm(xi: &[f64]) -> f64 {
    xi.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn monomial(xi: &[f64], nu: &[u32]) -> f64 {
    xi.iter()
        .zip(nu)
        .map(|(&x, &k)| x.powi(k as i32))
        .product()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Piece {
    pub start: f64,
    pub end: f64,
    pub poly: ComplexPoly,
}

/// Time dependence of one coefficient `a_{ν,j}(t)`.
#[derive(Debug, Clone, PartialEq)]
pub enum TimeCoefficient {
    Polynomial(ComplexPoly),
    /// Bounded, possibly discontinuous at the piece boundaries. Only allowed
    /// for lower order terms.
    Piecewise(Vec<Piece>),
}

impl TimeCoefficient {
    /// Evaluates at `t`. For piecewise coefficients the piece is selected by
    /// `hint` when given (so an integrator working on one smooth segment can
    /// evaluate up to the segment's closed end), otherwise by `t` itself with
    /// right-continuity at breakpoints.
    pub fn eval(&self, t: f64, hint: Option<f64>) -> Complex64 {
        match self {
            TimeCoefficient::Polynomial(p) => p.eval(t),
            TimeCoefficient::Piecewise(pieces) => {
                let s = hint.unwrap_or(t);
                let idx = pieces
                    .iter()
                    .rposition(|p| p.start <= s)
                    .unwrap_or(0);
                pieces[idx].poly.eval(t)
            }
        }
    }

    pub fn is_real(&self) -> bool {
        match self {
            TimeCoefficient::Polynomial(p) => p.is_real(),
            TimeCoefficient::Piecewise(pieces) => pieces.iter().all(|p| p.poly.is_real()),
        }
    }

    pub fn is_piecewise(&self) -> bool {
        matches!(self, TimeCoefficient::Piecewise(_))
    }

    fn polys(&self) -> Vec<&ComplexPoly> {
        match self {
            TimeCoefficient::Polynomial(p) => vec![p],
            TimeCoefficient::Piecewise(pieces) => pieces.iter().map(|p| &p.poly).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PrincipalTerm {
    pub nu: MultiIndex,
    pub j: usize,
    pub poly: RealPoly,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LowerTerm {
    pub nu: MultiIndex,
    pub j: usize,
    pub coeff: TimeCoefficient,
}

/// Full description of the operator and its time interval. Immutable once
/// validated.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorSpec {
    pub name: Option<String>,
    pub m: usize,
    pub n: usize,
    /// Open interval `(δ, T+δ)`.
    pub interval: (f64, f64),
    /// Closed working interval `[a, b]`.
    pub work: (f64, f64),
    pub t0: f64,
    pub principal: Vec<PrincipalTerm>,
    pub lower: Vec<LowerTerm>,
}

// ---- file format --------------------------------------------------------

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(untagged)]
pub(crate) enum CoeffValue {
    Real(f64),
    Complex([f64; 2]),
}

impl From<CoeffValue> for Complex64 {
    fn from(v: CoeffValue) -> Self {
        match v {
            CoeffValue::Real(re) => Complex64::new(re, 0.0),
            CoeffValue::Complex([re, im]) => Complex64::new(re, im),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct PrincipalEntry {
    nu: Vec<u32>,
    j: usize,
    poly: Vec<f64>,
    #[serde(default, skip_serializing)]
    pieces: Option<serde_json::Value>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct PieceEntry {
    interval: [f64; 2],
    poly: Vec<CoeffValue>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct LowerEntry {
    nu: Vec<u32>,
    j: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    poly: Option<Vec<CoeffValue>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pieces: Option<Vec<PieceEntry>>,
}

/// Serialized form of [`OperatorSpec`]; field names are part of the file format.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpecFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    name: Option<String>,
    m: usize,
    n: usize,
    interval: [f64; 2],
    work: [f64; 2],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    t0: Option<f64>,
    principal: Vec<PrincipalEntry>,
    #[serde(default)]
    lower: Vec<LowerEntry>,
}

fn complex_poly(values: &[CoeffValue]) -> ComplexPoly {
    ComplexPoly::new(values.iter().map(|&v| v.into()).collect())
}

fn coeff_values(p: &ComplexPoly) -> Vec<CoeffValue> {
    p.coeffs()
        .iter()
        .map(|c| {
            if c.im == 0.0 {
                CoeffValue::Real(c.re)
            } else {
                CoeffValue::Complex([c.re, c.im])
            }
        })
        .collect()
}

impl TryFrom<SpecFile> for OperatorSpec {
    type Error = Error;

    fn try_from(f: SpecFile) -> Result<Self> {
        let mut principal = Vec::with_capacity(f.principal.len());
        for (k, e) in f.principal.into_iter().enumerate() {
            if e.pieces.is_some() {
                return Err(Error::invalid(
                    format!("principal[{k}].pieces"),
                    "principal coefficients must be polynomial (analytic); piecewise coefficients are only allowed in lower order terms",
                ));
            }
            principal.push(PrincipalTerm {
                nu: e.nu,
                j: e.j,
                poly: RealPoly::new(e.poly),
            });
        }
        let mut lower = Vec::with_capacity(f.lower.len());
        for (k, e) in f.lower.into_iter().enumerate() {
            let coeff = match (e.poly, e.pieces) {
                (Some(p), None) => TimeCoefficient::Polynomial(complex_poly(&p)),
                (None, Some(pieces)) => TimeCoefficient::Piecewise(
                    pieces
                        .iter()
                        .map(|p| Piece {
                            start: p.interval[0],
                            end: p.interval[1],
                            poly: complex_poly(&p.poly),
                        })
                        .collect(),
                ),
                _ => {
                    return Err(Error::invalid(
                        format!("lower[{k}]"),
                        "exactly one of \"poly\" or \"pieces\" is required",
                    ))
                }
            };
            lower.push(LowerTerm {
                nu: e.nu,
                j: e.j,
                coeff,
            });
        }
        let spec = OperatorSpec {
            name: f.name,
            m: f.m,
            n: f.n,
            interval: (f.interval[0], f.interval[1]),
            work: (f.work[0], f.work[1]),
            t0: f.t0.unwrap_or(f.work[0]),
            principal,
            lower,
        };
        spec.validate()?;
        Ok(spec)
    }
}

impl From<&OperatorSpec> for SpecFile {
    fn from(s: &OperatorSpec) -> Self {
        SpecFile {
            name: s.name.clone(),
            m: s.m,
            n: s.n,
            interval: [s.interval.0, s.interval.1],
            work: [s.work.0, s.work.1],
            t0: Some(s.t0),
            principal: s
                .principal
                .iter()
                .map(|p| PrincipalEntry {
                    nu: p.nu.clone(),
                    j: p.j,
                    poly: p.poly.coeffs().to_vec(),
                    pieces: None,
                })
                .collect(),
            lower: s
                .lower
                .iter()
                .map(|l| match &l.coeff {
                    TimeCoefficient::Polynomial(p) => LowerEntry {
                        nu: l.nu.clone(),
                        j: l.j,
                        poly: Some(coeff_values(p)),
                        pieces: None,
                    },
                    TimeCoefficient::Piecewise(pieces) => LowerEntry {
                        nu: l.nu.clone(),
                        j: l.j,
                        poly: None,
                        pieces: Some(
                            pieces
                                .iter()
                                .map(|p| PieceEntry {
                                    interval: [p.start, p.end],
                                    poly: coeff_values(&p.poly),
                                })
                                .collect(),
                        ),
                    },
                })
                .collect(),
        }
    }
}

impl OperatorSpec {
    pub fn from_json_str(s: &str) -> Result<Self> {
        let file: SpecFile = serde_json::from_str(s)?;
        file.try_into()
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json_str(&fs::read_to_string(path)?)
    }

    pub fn to_file(&self) -> SpecFile {
        self.into()
    }

    pub fn to_json_string(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.to_file())?)
    }

    /// Builds the principal part of a 1-d operator from prescribed characteristic
    /// roots `τ_k(t, ξ) = r_k(t) ξ`, i.e. `P = Π_k (τ - r_k(t) ξ)`.
    pub fn from_roots_1d(
        roots: &[RealPoly],
        interval: (f64, f64),
        work: (f64, f64),
    ) -> Result<Self> {
        let m = roots.len();
        // Π_k (1 + r_k X) = Σ e_k X^k with polynomial-in-t coefficients.
        let mut elem: Vec<RealPoly> = vec![RealPoly::constant(1.0)];
        for r in roots {
            let mut next = vec![RealPoly::constant(0.0); elem.len() + 1];
            for (k, e) in elem.iter().enumerate() {
                next[k] = next[k].add(e);
                next[k + 1] = next[k + 1].add(&e.mul(r));
            }
            elem = next;
        }
        // P = τ^m + Σ (-1)^k e_k ξ^k τ^{m-k}, so a_{(k),k} = (-1)^{k+1} e_k.
        let principal = (1..=m)
            .map(|k| PrincipalTerm {
                nu: vec![k as u32],
                j: k,
                poly: elem[k].scale(if k % 2 == 1 { 1.0 } else { -1.0 }),
            })
            .collect();
        let spec = OperatorSpec {
            name: None,
            m,
            n: 1,
            interval,
            work,
            t0: work.0,
            principal,
            lower: Vec::new(),
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Adds a lower order term; returns an error if the result is invalid.
    pub fn with_lower(mut self, nu: MultiIndex, j: usize, coeff: TimeCoefficient) -> Result<Self> {
        self.lower.push(LowerTerm { nu, j, coeff });
        self.validate()?;
        Ok(self)
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = Some(name.into());
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.m == 0 {
            return Err(Error::invalid("m", "operator order must be at least 1"));
        }
        if self.n == 0 {
            return Err(Error::invalid("n", "space dimension must be at least 1"));
        }
        let (lo, hi) = self.interval;
        let (a, b) = self.work;
        if !(lo.is_finite() && hi.is_finite() && a.is_finite() && b.is_finite()) {
            return Err(Error::invalid("interval", "endpoints must be finite"));
        }
        if !(lo < a && a < b && b < hi) {
            return Err(Error::invalid(
                "work",
                format!("need interval.0 < a < b < interval.1, got ({lo}, {hi}) and [{a}, {b}]"),
            ));
        }
        if !(self.t0 >= a - T_SLACK && self.t0 <= b + T_SLACK) {
            return Err(Error::invalid("t0", format!("{} is outside [{a}, {b}]", self.t0)));
        }
        let mut keys = Vec::new();
        for (k, p) in self.principal.iter().enumerate() {
            let field = format!("principal[{k}]");
            self.check_index(&field, &p.nu, p.j)?;
            if order(&p.nu) != p.j {
                return Err(Error::invalid(field, format!("|nu| = {} must equal j = {}", order(&p.nu), p.j)));
            }
            if p.poly.coeffs().iter().any(|c| !c.is_finite()) {
                return Err(Error::invalid(field, "non-finite coefficient"));
            }
            keys.push((p.nu.clone(), p.j));
        }
        for (k, l) in self.lower.iter().enumerate() {
            let field = format!("lower[{k}]");
            self.check_index(&field, &l.nu, l.j)?;
            if order(&l.nu) + 1 > l.j {
                return Err(Error::invalid(field, format!("|nu| = {} must be at most j - 1 = {}", order(&l.nu), l.j - 1)));
            }
            for poly in l.coeff.polys() {
                if poly.coeffs().iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
                    return Err(Error::invalid(field, "non-finite coefficient"));
                }
            }
            if let TimeCoefficient::Piecewise(pieces) = &l.coeff {
                check_pieces(&field, pieces, self.work)?;
            }
            keys.push((l.nu.clone(), l.j));
        }
        keys.sort();
        if let Some(w) = keys.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::invalid(
                "principal/lower",
                format!("duplicate coefficient key nu = {:?}, j = {}", w[0].0, w[0].1),
            ));
        }
        Ok(())
    }

    fn check_index(&self, field: &str, nu: &[u32], j: usize) -> Result<()> {
        if nu.len() != self.n {
            return Err(Error::invalid(field, format!("multi-index length {} != n = {}", nu.len(), self.n)));
        }
        if j == 0 || j > self.m {
            return Err(Error::invalid(field, format!("j = {j} must lie in 1..={}", self.m)));
        }
        Ok(())
    }

    pub fn has_piecewise_lower(&self) -> bool {
        self.lower.iter().any(|l| l.coeff.is_piecewise())
    }

    pub fn has_lower_terms(&self) -> bool {
        !self.lower.is_empty()
    }

    /// True when every lower order coefficient is real, i.e. `B` is real.
    pub fn lower_is_real(&self) -> bool {
        self.lower.iter().all(|l| l.coeff.is_real())
    }

    /// True when the operator maps real functions to real functions up to the
    /// overall factor `i^{-m}`: `i^{j-|ν|} a_{ν,j}` is real for every term.
    pub fn is_physically_real(&self) -> bool {
        self.lower.iter().all(|l| {
            let d = l.j - order(&l.nu);
            let rot = Complex64::i().powu(d as u32);
            l.coeff.polys().iter().all(|p| {
                p.coeffs()
                    .iter()
                    .all(|c| (c * rot).im.abs() <= 1e-14 * c.norm().max(1e-300))
            })
        })
    }

    /// True when no principal coefficient depends on `t`.
    pub fn principal_is_constant(&self) -> bool {
        self.principal.iter().all(|p| p.poly.is_constant())
    }

    /// Interior discontinuity points of piecewise lower coefficients, sorted.
    pub fn breakpoints(&self) -> Vec<f64> {
        let (a, b) = self.work;
        let mut pts: Vec<f64> = self
            .lower
            .iter()
            .filter_map(|l| match &l.coeff {
                TimeCoefficient::Piecewise(p) => Some(p),
                _ => None,
            })
            .flat_map(|pieces| pieces.iter().skip(1).map(|p| p.start))
            .filter(|&s| s > a + T_SLACK && s < b - T_SLACK)
            .collect();
        pts.sort_by(f64::total_cmp);
        pts.dedup_by(|x, y| (*x - *y).abs() <= T_SLACK);
        pts
    }

    pub(crate) fn check_point(&self, t: f64, xi: &[f64]) -> Result<()> {
        if xi.len() != self.n {
            return Err(Error::invalid("xi", format!("length {} != n = {}", xi.len(), self.n)));
        }
        if xi.iter().any(|x| !x.is_finite()) {
            return Err(Error::invalid("xi", "non-finite component"));
        }
        if xi.iter().all(|&x| x == 0.0) {
            return Err(Error::ZeroFrequency);
        }
        let (a, b) = self.work;
        if !(t >= a - T_SLACK && t <= b + T_SLACK) {
            return Err(Error::OutsideWorkInterval { t, a, b });
        }
        Ok(())
    }

    /// Symbol evaluator at a fixed frequency (no domain checks; `ξ = 0` is
    /// allowed and gives `a = 0`).
    pub fn mode_symbol(&self, xi: &[f64]) -> ModeSymbol<'_> {
        ModeSymbol::new(self, xi)
    }
}

fn check_pieces(field: &str, pieces: &[Piece], work: (f64, f64)) -> Result<()> {
    if pieces.is_empty() {
        return Err(Error::invalid(field, "piecewise coefficient needs at least one piece"));
    }
    for (k, p) in pieces.iter().enumerate() {
        if !(p.start < p.end) {
            return Err(Error::invalid(field, format!("piece {k} has empty interval")));
        }
        if k > 0 && (pieces[k - 1].end - p.start).abs() > T_SLACK {
            return Err(Error::invalid(field, format!("pieces {} and {k} are not contiguous", k - 1)));
        }
    }
    if pieces[0].start > work.0 + T_SLACK || pieces[pieces.len() - 1].end < work.1 - T_SLACK {
        return Err(Error::invalid(field, "pieces must cover the working interval"));
    }
    Ok(())
}

// ---- evaluation ---------------------------------------------------------

struct PrincipalWeight<'a> {
    row: usize,
    poly: &'a RealPoly,
    weight: f64,
}

struct LowerWeight<'a> {
    row: usize,
    grade: usize,
    coeff: &'a TimeCoefficient,
    weight: f64,
}

/// Symbol rows at one fixed frequency with the `ξ`-dependent factors
/// precomputed; evaluation in `t` only costs the polynomial evaluations.
pub struct ModeSymbol<'a> {
    m: usize,
    xi: Vec<f64>,
    norm: f64,
    bracket: f64,
    principal: Vec<PrincipalWeight<'a>>,
    lower: Vec<LowerWeight<'a>>,
}

impl<'a> ModeSymbol<'a> {
    pub fn new(spec: &'a OperatorSpec, xi: &[f64]) -> Self {
        let m = spec.m;
        let bracket = japanese_bracket(xi);
        // Term of order k contributes to column m-k+1 (0-based m-k).
        let principal = spec
            .principal
            .iter()
            .map(|p| PrincipalWeight {
                row: m - p.j,
                poly: &p.poly,
                weight: monomial(xi, &p.nu) * bracket.powi(-(p.j as i32)),
            })
            .collect();
        let lower = spec
            .lower
            .iter()
            .map(|l| LowerWeight {
                row: m - l.j,
                grade: l.j - 1 - order(&l.nu),
                coeff: &l.coeff,
                weight: monomial(xi, &l.nu) * bracket.powi(1 - l.j as i32),
            })
            .collect();
        ModeSymbol {
            m,
            xi: xi.to_vec(),
            norm: euclidean_norm(xi),
            bracket,
            principal,
            lower,
        }
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn xi(&self) -> &[f64] {
        &self.xi
    }

    pub fn bracket(&self) -> f64 {
        self.bracket
    }

    /// `(a_1, ..., a_m)` and their `t`-derivatives.
    pub fn principal_row(&self, t: f64) -> (Vec<f64>, Vec<f64>) {
        let mut a = vec![0.0; self.m];
        let mut da = vec![0.0; self.m];
        for p in &self.principal {
            let (v, d) = p.poly.eval_with_derivative(t);
            a[p.row] += v * p.weight;
            da[p.row] += d * p.weight;
        }
        (a, da)
    }

    pub fn lower_row(&self, t: f64, hint: Option<f64>) -> Vec<Complex64> {
        let mut b = vec![Complex64::new(0.0, 0.0); self.m];
        for l in &self.lower {
            b[l.row] += l.coeff.eval(t, hint) * l.weight;
        }
        b
    }

    /// `B = Σ_l B_{-l}`: entry `[l][j]` holds the part of `b_j` of symbol order `-l`.
    pub fn lower_graded(&self, t: f64, hint: Option<f64>) -> Vec<Vec<Complex64>> {
        let mut out = vec![vec![Complex64::new(0.0, 0.0); self.m]; self.m];
        for l in &self.lower {
            out[l.grade][l.row] += l.coeff.eval(t, hint) * l.weight;
        }
        out
    }

    /// Last row of `<ξ>A + B`, written into `out`.
    pub fn generator_row(&self, t: f64, hint: Option<f64>, out: &mut [Complex64]) {
        for o in out.iter_mut() {
            *o = Complex64::new(0.0, 0.0);
        }
        for p in &self.principal {
            out[p.row] += p.poly.eval(t) * p.weight * self.bracket;
        }
        for l in &self.lower {
            out[l.row] += l.coeff.eval(t, hint) * l.weight;
        }
    }

    pub fn frame(&self, t: f64) -> SymbolFrame {
        self.frame_with_hint(t, None)
    }

    pub fn frame_with_hint(&self, t: f64, hint: Option<f64>) -> SymbolFrame {
        let (a, da) = self.principal_row(t);
        let b = self.lower_row(t, hint);
        let ratio = if self.norm > 0.0 { self.bracket / self.norm } else { 0.0 };
        // a_j <ξ>^{m-j+1} = h_{m-j+1} |ξ|^{m-j+1}; h[k-1] holds h_k.
        let h = (1..=self.m).map(|k| a[self.m - k] * ratio.powi(k as i32)).collect();
        SymbolFrame {
            t,
            xi: self.xi.clone(),
            bracket: self.bracket,
            a,
            da,
            b,
            h,
        }
    }
}

/// Symbol matrices at one `(t, ξ)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SymbolFrame {
    pub t: f64,
    pub xi: Vec<f64>,
    /// `<ξ>`.
    pub bracket: f64,
    /// Last row of `A`.
    pub a: Vec<f64>,
    /// `∂_t` of the last row of `A`.
    pub da: Vec<f64>,
    /// Last row of `B`.
    pub b: Vec<Complex64>,
    /// Homogeneous principal coefficients `h_1, ..., h_m`.
    pub h: Vec<f64>,
}

impl SymbolFrame {
    /// A frame assembled directly from companion rows (for synthetic tests).
    pub fn from_rows(a: Vec<f64>, da: Vec<f64>, b: Vec<Complex64>) -> Self {
        let m = a.len();
        assert_eq!(da.len(), m);
        assert_eq!(b.len(), m);
        SymbolFrame {
            t: 0.0,
            xi: vec![1.0],
            bracket: std::f64::consts::SQRT_2,
            h: (1..=m).map(|k| a[m - k] * std::f64::consts::SQRT_2.powi(k as i32)).collect(),
            a,
            da,
            b,
        }
    }

    pub fn m(&self) -> usize {
        self.a.len()
    }

    pub fn a_matrix(&self) -> DMatrix<f64> {
        companion(&self.a)
    }

    pub fn da_matrix(&self) -> DMatrix<f64> {
        let m = self.m();
        let mut d = DMatrix::zeros(m, m);
        for j in 0..m {
            d[(m - 1, j)] = self.da[j];
        }
        d
    }

    pub fn b_matrix(&self) -> DMatrix<Complex64> {
        let m = self.m();
        let mut b = DMatrix::from_element(m, m, Complex64::new(0.0, 0.0));
        for j in 0..m {
            b[(m - 1, j)] = self.b[j];
        }
        b
    }

    /// Coefficients of `p(λ) = λ^m - Σ_j a_j λ^{j-1}`, lowest power first.
    pub fn char_poly(&self) -> Vec<f64> {
        let mut c: Vec<f64> = self.a.iter().map(|&x| -x).collect();
        c.push(1.0);
        c
    }

    /// Eigenvalues of `A`, i.e. the rescaled roots `τ_k <ξ>^{-1}`.
    pub fn rescaled_roots(&self) -> Vec<Complex64> {
        let m = self.m();
        if m == 1 {
            return vec![Complex64::new(self.a[0], 0.0)];
        }
        self.a_matrix().complex_eigenvalues().iter().copied().collect()
    }
}

/// Companion matrix with ones on the superdiagonal and `row` as last row.
pub fn companion(row: &[f64]) -> DMatrix<f64> {
    let m = row.len();
    let mut a = DMatrix::zeros(m, m);
    for i in 0..m.saturating_sub(1) {
        a[(i, i + 1)] = 1.0;
    }
    for j in 0..m {
        a[(m - 1, j)] = row[j];
    }
    a
}

pub fn eval_principal_row(spec: &OperatorSpec, t: f64, xi: &[f64]) -> Result<Vec<f64>> {
    spec.check_point(t, xi)?;
    Ok(spec.mode_symbol(xi).principal_row(t).0)
}

pub fn eval_lower_row(spec: &OperatorSpec, t: f64, xi: &[f64]) -> Result<Vec<Complex64>> {
    spec.check_point(t, xi)?;
    Ok(spec.mode_symbol(xi).lower_row(t, None))
}

pub fn build_frame(spec: &OperatorSpec, t: f64, xi: &[f64]) -> Result<SymbolFrame> {
    spec.check_point(t, xi)?;
    Ok(spec.mode_symbol(xi).frame(t))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn t2() -> OperatorSpec {
        OperatorSpec::from_json_str(
            r#"{"m":2,"n":1,"interval":[-1,2],"work":[0,1],
                "principal":[{"nu":[2],"j":2,"poly":[0,0,1]}]}"#,
        )
        .unwrap()
    }

    #[test]
    fn wave_row_at_unit_frequency() {
        let spec = OperatorSpec::from_roots_1d(
            &[RealPoly::constant(1.0), RealPoly::constant(-1.0)],
            (-1.0, 2.0),
            (0.0, 1.0),
        )
        .unwrap();
        let a = eval_principal_row(&spec, 0.3, &[1.0]).unwrap();
        assert_relative_eq!(a[0], 0.5, epsilon = 1e-15);
        assert_eq!(a[1], 0.0);
    }

    #[test]
    fn t_squared_row() {
        let spec = OperatorSpec::from_json_str(
            r#"{"m":2,"n":1,"interval":[-1,4],"work":[0,3],
                "principal":[{"nu":[2],"j":2,"poly":[0,0,1]}]}"#,
        )
        .unwrap();
        let a = eval_principal_row(&spec, 3.0, &[2.0]).unwrap();
        assert_relative_eq!(a[0], 7.2, epsilon = 1e-14);
        assert_eq!(a[1], 0.0);
    }

    #[test]
    fn order_one_collapses() {
        let spec = OperatorSpec::from_json_str(
            r#"{"m":1,"n":1,"interval":[-1,2],"work":[0,1],
                "principal":[{"nu":[1],"j":1,"poly":[0.5, 2]}]}"#,
        )
        .unwrap();
        let a = eval_principal_row(&spec, 0.5, &[3.0]).unwrap();
        assert_relative_eq!(a[0], 1.5 * 3.0 / 10f64.sqrt(), epsilon = 1e-15);
    }

    #[test]
    fn lower_row_first_order_term() {
        let spec = t2().with_lower(vec![1], 2, TimeCoefficient::Polynomial(RealPoly::monomial(1.0, 2).to_complex())).unwrap();
        let b = eval_lower_row(&spec, 1.0, &[1.0]).unwrap();
        assert_relative_eq!(b[0].re, 1.0 / 2f64.sqrt(), epsilon = 1e-15);
        assert_eq!(b[1], Complex64::new(0.0, 0.0));
        assert_eq!(eval_lower_row(&t2(), 0.5, &[4.0]).unwrap(), vec![Complex64::new(0.0, 0.0); 2]);
    }

    #[test]
    fn companion_structure() {
        let f = build_frame(&t2(), 0.5, &[3.0]).unwrap();
        let a = f.a_matrix();
        assert_eq!(a[(0, 1)], 1.0);
        assert_eq!(a[(0, 0)], 0.0);
        let b = f.b_matrix();
        assert!(b.row(0).iter().all(|z| *z == Complex64::new(0.0, 0.0)));
    }

    #[test]
    fn rejects_bad_points() {
        let spec = t2();
        assert!(matches!(eval_principal_row(&spec, 0.5, &[0.0]), Err(Error::ZeroFrequency)));
        assert!(matches!(
            eval_lower_row(&spec, 1.5, &[1.0]),
            Err(Error::OutsideWorkInterval { .. })
        ));
    }

    #[test]
    fn rejects_invalid_specs() {
        let bad_order = r#"{"m":2,"n":1,"interval":[-1,2],"work":[0,1],
            "principal":[{"nu":[1],"j":2,"poly":[1]}]}"#;
        assert!(OperatorSpec::from_json_str(bad_order).is_err());
        let dup = r#"{"m":2,"n":1,"interval":[-1,2],"work":[0,1],
            "principal":[{"nu":[2],"j":2,"poly":[1]},{"nu":[2],"j":2,"poly":[2]}]}"#;
        assert!(OperatorSpec::from_json_str(dup).is_err());
        let piecewise_principal = r#"{"m":2,"n":1,"interval":[-1,2],"work":[0,1],
            "principal":[{"nu":[2],"j":2,"poly":[1],"pieces":[]}]}"#;
        assert!(OperatorSpec::from_json_str(piecewise_principal).is_err());
        let bad_interval = r#"{"m":2,"n":1,"interval":[0,1],"work":[0,1],
            "principal":[{"nu":[2],"j":2,"poly":[1]}]}"#;
        assert!(OperatorSpec::from_json_str(bad_interval).is_err());
        let gap = r#"{"m":2,"n":1,"interval":[-1,2],"work":[0,1],
            "principal":[{"nu":[2],"j":2,"poly":[1]}],
            "lower":[{"nu":[1],"j":2,"pieces":[{"interval":[0,0.4],"poly":[1]},{"interval":[0.5,1],"poly":[2]}]}]}"#;
        assert!(OperatorSpec::from_json_str(gap).is_err());
    }

    #[test]
    fn piecewise_selection_and_breakpoints() {
        let spec = OperatorSpec::from_json_str(
            r#"{"m":2,"n":1,"interval":[-1,2],"work":[0,1],
                "principal":[{"nu":[2],"j":2,"poly":[1]}],
                "lower":[{"nu":[1],"j":2,"pieces":[{"interval":[0,0.5],"poly":[1]},{"interval":[0.5,1],"poly":[[0,2]]}]}]}"#,
        )
        .unwrap();
        assert_eq!(spec.breakpoints(), vec![0.5]);
        let c = &spec.lower[0].coeff;
        assert_eq!(c.eval(0.5, None), Complex64::new(0.0, 2.0));
        assert_eq!(c.eval(0.5, Some(0.25)), Complex64::new(1.0, 0.0));
        assert!(!spec.lower_is_real());
    }

    #[test]
    fn json_round_trip() {
        let spec = t2().with_lower(vec![0], 1, TimeCoefficient::Polynomial(ComplexPoly::new(vec![Complex64::new(0.5, -1.0)]))).unwrap();
        let back = OperatorSpec::from_json_str(&spec.to_json_string().unwrap()).unwrap();
        assert_eq!(spec, back);
    }

    #[test]
    fn physical_reality() {
        // i^{j-|ν|} a real: a u_x-type term (|ν| = j-1) needs an imaginary coefficient.
        let imag = t2().with_lower(vec![1], 2, TimeCoefficient::Polynomial(ComplexPoly::new(vec![Complex64::new(0.0, 1.0)]))).unwrap();
        assert!(imag.is_physically_real());
        let real = t2().with_lower(vec![1], 2, TimeCoefficient::Polynomial(RealPoly::constant(1.0).to_complex())).unwrap();
        assert!(!real.is_physically_real());
        assert!(real.lower_is_real());
    }
}
