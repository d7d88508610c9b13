//! Real 1-periodic potentials: truncated Fourier series, piecewise-constant
//! profiles, or plain constants, each carrying a translation shift.

use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Result, SpectralError};

const TAU: f64 = 2.0 * PI;

/// `cos * cos(2πkx) + sin * sin(2πkx)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FourierTerm {
    pub k: u32,
    pub cos: f64,
    pub sin: f64,
}

/// Constant value on the half-open interval `[from, to)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Piece {
    pub from: f64,
    pub to: f64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
enum Shape {
    Constant,
    Fourier(Vec<FourierTerm>),
    Piecewise(Vec<Piece>),
}

/// A real potential of period one, evaluated as `v((x + shift) mod 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Potential {
    constant_term: f64,
    shape: Shape,
    shift: f64,
}

/// On-disk form of a potential.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialSpec {
    #[serde(default)]
    pub constant: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fourier: Option<Vec<FourierTerm>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub piecewise: Option<Vec<Piece>>,
    #[serde(default)]
    pub shift: f64,
}

fn wrap_unit(t: f64) -> f64 {
    let r = t.rem_euclid(1.0);
    if r >= 1.0 {
        0.0
    } else {
        r
    }
}

fn finite(name: &str, x: f64) -> Result<f64> {
    if x.is_finite() {
        Ok(x)
    } else {
        Err(SpectralError::InvalidSpec(format!("{name} is not finite")))
    }
}

impl Potential {
    pub fn zero() -> Self {
        Self::constant(0.0)
    }

    pub fn constant(c: f64) -> Self {
        Potential { constant_term: c, shape: Shape::Constant, shift: 0.0 }
    }

    /// Fourier potential; terms with equal `k` are rejected, all-zero terms dropped.
    pub fn fourier(constant: f64, terms: &[FourierTerm]) -> Result<Self> {
        finite("constant", constant)?;
        let mut out: Vec<FourierTerm> = Vec::with_capacity(terms.len());
        for (i, t) in terms.iter().enumerate() {
            if t.k == 0 {
                return Err(SpectralError::InvalidSpec(format!("fourier[{i}].k must be positive")));
            }
            finite(&format!("fourier[{i}].cos"), t.cos)?;
            finite(&format!("fourier[{i}].sin"), t.sin)?;
            if terms[..i].iter().any(|o| o.k == t.k) {
                return Err(SpectralError::InvalidSpec(format!("fourier[{i}].k = {} repeats", t.k)));
            }
            if t.cos != 0.0 || t.sin != 0.0 {
                out.push(*t);
            }
        }
        out.sort_by_key(|t| t.k);
        let shape = if out.is_empty() { Shape::Constant } else { Shape::Fourier(out) };
        Ok(Potential { constant_term: constant, shape, shift: 0.0 })
    }

    /// Mean-zero cosine/sine series from coefficient slices indexed by `k - 1`.
    pub fn from_coefficients(cos: &[f64], sin: &[f64]) -> Result<Self> {
        let m = cos.len().max(sin.len());
        let terms: Vec<FourierTerm> = (0..m)
            .map(|i| FourierTerm {
                k: i as u32 + 1,
                cos: cos.get(i).copied().unwrap_or(0.0),
                sin: sin.get(i).copied().unwrap_or(0.0),
            })
            .collect();
        Self::fourier(0.0, &terms)
    }

    /// Piecewise-constant potential; intervals must tile `[0,1)` in order.
    pub fn piecewise(constant: f64, pieces: &[Piece]) -> Result<Self> {
        finite("constant", constant)?;
        if pieces.is_empty() {
            return Err(SpectralError::InvalidSpec("piecewise is empty".into()));
        }
        let mut expect = 0.0;
        for (i, p) in pieces.iter().enumerate() {
            finite(&format!("piecewise[{i}].from"), p.from)?;
            finite(&format!("piecewise[{i}].to"), p.to)?;
            finite(&format!("piecewise[{i}].value"), p.value)?;
            if (p.from - expect).abs() > 1e-12 {
                return Err(SpectralError::InvalidSpec(format!(
                    "piecewise[{i}].from = {} leaves a gap or overlap (expected {expect})",
                    p.from
                )));
            }
            if p.to <= p.from {
                return Err(SpectralError::InvalidSpec(format!("piecewise[{i}].to must exceed from")));
            }
            expect = p.to;
        }
        if (expect - 1.0).abs() > 1e-12 {
            return Err(SpectralError::InvalidSpec(format!(
                "piecewise[{}].to = {expect} must close the period at 1",
                pieces.len() - 1
            )));
        }
        let mut ps = pieces.to_vec();
        ps[0].from = 0.0;
        let last = ps.len() - 1;
        ps[last].to = 1.0;
        for i in 1..ps.len() {
            ps[i].from = ps[i - 1].to;
        }
        Ok(Potential { constant_term: constant, shape: Shape::Piecewise(ps), shift: 0.0 })
    }

    pub fn from_spec(spec: &PotentialSpec) -> Result<Self> {
        let base = match (&spec.fourier, &spec.piecewise) {
            (Some(_), Some(_)) => {
                return Err(SpectralError::InvalidSpec(
                    "fourier and piecewise are mutually exclusive".into(),
                ))
            }
            (Some(f), None) => Self::fourier(spec.constant, f)?,
            (None, Some(p)) => Self::piecewise(spec.constant, p)?,
            (None, None) => Self::constant(finite("constant", spec.constant)?),
        };
        Ok(base.translate(finite("shift", spec.shift)?))
    }

    pub fn to_spec(&self) -> PotentialSpec {
        let (fourier, piecewise) = match &self.shape {
            Shape::Constant => (None, None),
            Shape::Fourier(t) => (Some(t.clone()), None),
            Shape::Piecewise(p) => (None, Some(p.clone())),
        };
        PotentialSpec { constant: self.constant_term, fourier, piecewise, shift: self.shift }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let spec: PotentialSpec =
            serde_json::from_str(text).map_err(|e| SpectralError::InvalidSpec(e.to_string()))?;
        Self::from_spec(&spec)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_spec()).expect("potential spec serializes")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| SpectralError::InvalidSpec(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn constant_term(&self) -> f64 {
        self.constant_term
    }

    pub fn shift(&self) -> f64 {
        self.shift
    }

    pub fn fourier_terms(&self) -> &[FourierTerm] {
        match &self.shape {
            Shape::Fourier(t) => t,
            _ => &[],
        }
    }

    pub fn pieces(&self) -> &[Piece] {
        match &self.shape {
            Shape::Piecewise(p) => p,
            _ => &[],
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self.shape, Shape::Constant)
    }

    pub fn is_piecewise(&self) -> bool {
        matches!(self.shape, Shape::Piecewise(_))
    }

    /// Highest Fourier mode present (0 for non-Fourier shapes).
    pub fn max_mode(&self) -> u32 {
        self.fourier_terms().iter().map(|t| t.k).max().unwrap_or(0)
    }

    pub fn is_finite(&self) -> bool {
        self.constant_term.is_finite()
            && self.shift.is_finite()
            && self.fourier_terms().iter().all(|t| t.cos.is_finite() && t.sin.is_finite())
            && self.pieces().iter().all(|p| p.value.is_finite())
    }

    pub fn evaluate(&self, x: f64) -> f64 {
        let u = wrap_unit(x + self.shift);
        match &self.shape {
            Shape::Constant => self.constant_term,
            Shape::Fourier(terms) => {
                let mut s = self.constant_term;
                for t in terms {
                    let (sn, cs) = (TAU * t.k as f64 * u).sin_cos();
                    s += t.cos * cs + t.sin * sn;
                }
                s
            }
            Shape::Piecewise(pieces) => {
                let i = pieces.partition_point(|p| p.to <= u).min(pieces.len() - 1);
                self.constant_term + pieces[i].value
            }
        }
    }

    pub fn translate(&self, t: f64) -> Self {
        let mut out = self.clone();
        out.shift = wrap_unit(self.shift + t);
        out
    }

    pub fn add_constant(&self, c: f64) -> Self {
        let mut out = self.clone();
        out.constant_term += c;
        out
    }

    /// `self + eps * other` for constant and Fourier shapes.
    pub fn plus_scaled(&self, other: &Potential, eps: f64) -> Result<Self> {
        if self.is_piecewise() || other.is_piecewise() {
            return Err(SpectralError::InvalidArgument("sums of piecewise potentials are not supported".into()));
        }
        let (a, b) = (self.bake_shift(), other.bake_shift());
        let mut terms: Vec<FourierTerm> = a.fourier_terms().to_vec();
        for t in b.fourier_terms() {
            match terms.iter_mut().find(|s| s.k == t.k) {
                Some(s) => {
                    s.cos += eps * t.cos;
                    s.sin += eps * t.sin;
                }
                None => terms.push(FourierTerm { k: t.k, cos: eps * t.cos, sin: eps * t.sin }),
            }
        }
        Self::fourier(a.constant_term + eps * b.constant_term, &terms)
    }

    /// Mean value over one period.
    pub fn mean(&self) -> f64 {
        match &self.shape {
            Shape::Piecewise(p) => {
                self.constant_term + p.iter().map(|q| q.value * (q.to - q.from)).sum::<f64>()
            }
            _ => self.constant_term,
        }
    }

    /// The same potential with its mean removed.
    pub fn mean_zero(&self) -> Self {
        self.add_constant(-self.mean())
    }

    pub fn l2_norm(&self) -> f64 {
        match &self.shape {
            Shape::Constant => self.constant_term.abs(),
            Shape::Fourier(terms) => {
                let osc: f64 = terms.iter().map(|t| t.cos * t.cos + t.sin * t.sin).sum();
                (self.constant_term * self.constant_term + 0.5 * osc).sqrt()
            }
            Shape::Piecewise(p) => p
                .iter()
                .map(|q| {
                    let v = self.constant_term + q.value;
                    v * v * (q.to - q.from)
                })
                .sum::<f64>()
                .sqrt(),
        }
    }

    /// Fourier form with the shift folded into the coefficients.
    pub fn bake_shift(&self) -> Self {
        match &self.shape {
            Shape::Fourier(terms) if self.shift != 0.0 => {
                let rotated: Vec<FourierTerm> = terms
                    .iter()
                    .map(|t| {
                        let (s, c) = (TAU * t.k as f64 * self.shift).sin_cos();
                        FourierTerm { k: t.k, cos: t.cos * c + t.sin * s, sin: t.sin * c - t.cos * s }
                    })
                    .collect();
                Potential { constant_term: self.constant_term, shape: Shape::Fourier(rotated), shift: 0.0 }
            }
            Shape::Constant => {
                Potential { constant_term: self.constant_term, shape: Shape::Constant, shift: 0.0 }
            }
            _ => self.clone(),
        }
    }

    /// Lower and upper bounds for the potential over a period.
    ///
    /// Exact for constant and piecewise shapes; for Fourier series the sampled
    /// extremes are widened by the Lipschitz bound of the grid spacing.
    pub fn bounds(&self) -> (f64, f64) {
        match &self.shape {
            Shape::Constant => (self.constant_term, self.constant_term),
            Shape::Piecewise(p) => {
                let lo = p.iter().map(|q| q.value).fold(f64::INFINITY, f64::min);
                let hi = p.iter().map(|q| q.value).fold(f64::NEG_INFINITY, f64::max);
                (self.constant_term + lo, self.constant_term + hi)
            }
            Shape::Fourier(terms) => {
                let n = 4096;
                let sampler = FourierSampler::new(self);
                let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
                for i in 0..n {
                    let v = sampler.eval(i as f64 / n as f64);
                    lo = lo.min(v);
                    hi = hi.max(v);
                }
                let lip: f64 = terms
                    .iter()
                    .map(|t| TAU * t.k as f64 * t.cos.hypot(t.sin))
                    .sum();
                let slack = lip * 0.5 / n as f64;
                (lo - slack, hi + slack)
            }
        }
    }

    pub fn sup_norm(&self) -> f64 {
        let (lo, hi) = self.bounds();
        lo.abs().max(hi.abs())
    }

    /// Constant segments `(start, length, value)` tiling `[0,1)` in the
    /// shifted frame. Non-piecewise shapes return a single segment holding the mean.
    pub(crate) fn segments(&self) -> Vec<(f64, f64, f64)> {
        let pieces = match &self.shape {
            Shape::Piecewise(p) => p,
            _ => return vec![(0.0, 1.0, self.mean())],
        };
        let mut cuts: Vec<f64> = vec![0.0, 1.0];
        for p in pieces {
            let c = wrap_unit(p.from - self.shift);
            if c > 0.0 {
                cuts.push(c);
            }
        }
        cuts.sort_by(f64::total_cmp);
        cuts.dedup();
        cuts.windows(2)
            .filter(|w| w[1] > w[0])
            .map(|w| (w[0], w[1] - w[0], self.evaluate(0.5 * (w[0] + w[1]))))
            .collect()
    }
}

/// Fast evaluation of a Fourier potential by the angle-addition recurrence.
#[derive(Debug, Clone)]
pub(crate) struct FourierSampler {
    constant: f64,
    shift: f64,
    cos: Vec<f64>,
    sin: Vec<f64>,
}

impl FourierSampler {
    pub(crate) fn new(p: &Potential) -> Self {
        let kmax = p.max_mode() as usize;
        let mut cos = vec![0.0; kmax];
        let mut sin = vec![0.0; kmax];
        for t in p.fourier_terms() {
            cos[t.k as usize - 1] = t.cos;
            sin[t.k as usize - 1] = t.sin;
        }
        FourierSampler { constant: p.constant_term, shift: p.shift, cos, sin }
    }

    #[inline]
    pub(crate) fn eval(&self, x: f64) -> f64 {
        if self.cos.is_empty() {
            return self.constant;
        }
        let (s1, c1) = (TAU * (x + self.shift)).sin_cos();
        let (mut ck, mut sk) = (c1, s1);
        let mut acc = self.constant;
        for (a, b) in self.cos.iter().zip(&self.sin) {
            acc += a * ck + b * sk;
            let next_c = ck * c1 - sk * s1;
            sk = sk * c1 + ck * s1;
            ck = next_c;
        }
        acc
    }
}

impl std::str::FromStr for Potential {
    type Err = SpectralError;

    fn from_str(s: &str) -> Result<Self> {
        Self::from_json(s)
    }
}
