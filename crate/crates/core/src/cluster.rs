//! Separable operators `h_1 + … + h_d`: spectra as Minkowski sums of the
//! one-dimensional data, grouped into clusters by multi-index sums.

use serde::Serialize;

use crate::bands::{BandSolver, BandStructure};
use crate::error::{Result, SpectralError};
use crate::halfsolid::HalfSolidSpectrum;
use crate::potential::Potential;

/// Closed interval; points are degenerate intervals and `hi` may be `+∞`.
pub type Interval = (f64, f64);

/// Sorts and coalesces intervals that overlap or lie within `tol`.
pub fn merge(mut v: Vec<Interval>, tol: f64) -> Vec<Interval> {
    v.retain(|(a, b)| a <= b);
    v.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.total_cmp(&y.1)));
    let mut out: Vec<Interval> = Vec::with_capacity(v.len());
    for (a, b) in v {
        match out.last_mut() {
            Some(last) if a <= last.1 + tol => last.1 = last.1.max(b),
            _ => out.push((a, b)),
        }
    }
    out
}

fn scale_of(v: &[Interval]) -> f64 {
    v.iter().flat_map(|(a, b)| [a.abs(), b.abs()]).filter(|x| x.is_finite()).fold(1.0, f64::max)
}

pub fn minkowski_sum(a: &[Interval], b: &[Interval]) -> Vec<Interval> {
    let mut out = Vec::with_capacity(a.len() * b.len());
    for x in a {
        for y in b {
            out.push((x.0 + y.0, x.1 + y.1));
        }
    }
    let tol = 1e-12 * scale_of(&out);
    merge(out, tol)
}

/// Distance between two closed sets given as interval lists.
pub fn set_distance(a: &[Interval], b: &[Interval]) -> f64 {
    let mut d = f64::INFINITY;
    for x in a {
        for y in b {
            d = d.min((y.0 - x.1).max(x.0 - y.1).max(0.0));
        }
    }
    d
}

fn point_distance(a: &[Interval], p: f64) -> f64 {
    set_distance(a, &[(p, p)])
}

fn diameter(a: &[Interval]) -> f64 {
    match (a.first(), a.last()) {
        (Some(f), Some(l)) => l.1 - f.0,
        _ => 0.0,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Source {
    HalfLine,
    HalfSolid { tau: f64 },
}

/// One-dimensional spectrum divided by `γ`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NormalizedSpectrum1D {
    pub gamma: f64,
    /// `s_0, s_1, …` up to the last resolved band.
    pub bands: Vec<Interval>,
    /// `g_1, g_2, …`.
    pub gaps: Vec<Interval>,
    /// `(n, e_n)` for the bound states.
    pub eigenvalues: Vec<(usize, f64)>,
    /// Everything above is treated as a.c. spectrum.
    pub tail: f64,
    pub source: Source,
}

impl NormalizedSpectrum1D {
    pub fn eigenvalue(&self, n: usize) -> Option<f64> {
        self.eigenvalues.iter().find(|e| e.0 == n).map(|e| e.1)
    }

    /// Bands and tail as one merged list.
    pub fn ac(&self) -> Vec<Interval> {
        let mut v = self.bands.clone();
        v.push((self.tail, f64::INFINITY));
        merge(v, 0.0)
    }

    fn bottom(&self) -> f64 {
        let b = self.bands.first().map_or(self.tail, |s| s.0);
        self.eigenvalues.iter().map(|e| e.1).fold(b, f64::min)
    }
}

fn check_gamma(gamma: f64) -> Result<()> {
    if gamma > 0.0 && gamma.is_finite() {
        Ok(())
    } else {
        Err(SpectralError::InvalidArgument(format!("gamma = {gamma} must be positive")))
    }
}

/// Half-line data of `h`: bands, gaps and the bound states `sign_n = +1`.
pub fn normalize(bs: &BandStructure, gamma: f64) -> Result<NormalizedSpectrum1D> {
    check_gamma(gamma)?;
    let n = bs.n_gaps();
    Ok(NormalizedSpectrum1D {
        gamma,
        bands: (0..=n).map(|j| bs.band(j)).map(|(a, b)| (a / gamma, b / gamma)).collect(),
        gaps: bs.gaps.iter().map(|g| (g.lower / gamma, g.upper / gamma)).collect(),
        eigenvalues: bs.gaps.iter().filter(|g| g.sign == 1).map(|g| (g.n, g.mu / gamma)).collect(),
        tail: bs.top / gamma,
        source: Source::HalfLine,
    })
}

/// Junction data of `T_τ`; the band `[τ_J, ∞)` and anything above the
/// resolved range form the tail.
pub fn normalize_half_solid(hs: &HalfSolidSpectrum, gamma: f64) -> Result<NormalizedSpectrum1D> {
    check_gamma(gamma)?;
    let bounded: Vec<Interval> = hs.ac_bands.iter().filter(|b| b.1.is_finite()).copied().collect();
    let open = hs.ac_bands.iter().find(|b| !b.1.is_finite()).map_or(f64::INFINITY, |b| b.0);
    let tail = open.min(hs.resolved_to);
    Ok(NormalizedSpectrum1D {
        gamma,
        bands: bounded.iter().map(|(a, b)| (a / gamma, b / gamma)).collect(),
        gaps: hs.gaps.iter().filter(|g| g.n > 0).map(|g| (g.lower / gamma, g.upper / gamma)).collect(),
        eigenvalues: hs.eigenvalues.iter().filter(|e| e.0 > 0).map(|&(n, e)| (n, e / gamma)).collect(),
        tail: tail / gamma,
        source: Source::HalfSolid { tau: hs.tau },
    })
}

/// One Minkowski summand: per factor a band index or an eigenvalue index.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClusterPiece {
    pub indices: Vec<usize>,
    /// Factors contributing an eigenvalue rather than a band.
    pub eigen_factors: Vec<usize>,
    pub interval: Interval,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BandCluster {
    /// Number of eigenvalue factors: 0 for `K^0`, 1 for `K^1`, 2 for `K^2`.
    pub kind: usize,
    pub n: usize,
    pub pieces: Vec<ClusterPiece>,
    pub union: Vec<Interval>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EigenCluster {
    pub n: usize,
    pub values: Vec<(Vec<usize>, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub label: String,
    pub value: f64,
    pub bound: f64,
    /// `true` when the bound is an upper limit, `false` for a lower one.
    pub upper: bool,
    pub pass: bool,
}

impl Check {
    fn at_most(label: String, value: f64, bound: f64) -> Self {
        Check { label, value, bound, upper: true, pass: value <= bound }
    }

    fn at_least(label: String, value: f64, bound: f64) -> Self {
        Check { label, value, bound, upper: false, pass: value >= bound }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeparatingInterval {
    pub n: usize,
    pub interval: Interval,
    pub distance_to_ac: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClusterSpectrum {
    pub dim_plus: usize,
    pub dim_full: usize,
    pub kappa: f64,
    pub n: usize,
    pub e1: f64,
    pub band_clusters: Vec<BandCluster>,
    pub eigenvalue_clusters: Vec<EigenCluster>,
    pub separating_intervals: Vec<SeparatingInterval>,
    /// Merged a.c. spectrum, tails included.
    pub ac: Vec<Interval>,
    /// Every sum of factor eigenvalues.
    pub eigenvalues: Vec<(Vec<usize>, f64)>,
    pub checks: Vec<Check>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IntervalCount {
    pub count: usize,
    pub eigenvalues: Vec<(Vec<usize>, f64)>,
    pub distance_to_ac: f64,
    pub disjoint: bool,
}

impl ClusterSpectrum {
    pub fn dim(&self) -> usize {
        self.dim_plus + self.dim_full
    }

    pub fn cluster(&self, kind: usize, n: usize) -> Option<&BandCluster> {
        self.band_clusters.iter().find(|c| c.kind == kind && c.n == n)
    }

    pub fn eigen_cluster(&self, n: usize) -> Option<&EigenCluster> {
        self.eigenvalue_clusters.iter().find(|c| c.n == n)
    }

    pub fn interval(&self, n: usize) -> Option<Interval> {
        self.separating_intervals.iter().find(|s| s.n == n).map(|s| s.interval)
    }

    pub fn all_checks_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    /// `SeparationFail` for the first `I_n` closer than `2ϰ` to the a.c. spectrum.
    pub fn require_separation(&self) -> Result<()> {
        for s in &self.separating_intervals {
            if s.distance_to_ac < 2.0 * self.kappa {
                return Err(SpectralError::SeparationFail { n: s.n, distance: s.distance_to_ac });
            }
        }
        Ok(())
    }

    /// Spectrum-free parts of `[lo, hi]`, each shrunk by `margin` on both sides.
    pub fn windows(&self, lo: f64, hi: f64, margin: f64) -> Vec<Interval> {
        let mut out = Vec::new();
        let mut start = lo;
        for &(a, b) in &self.ac {
            if b < start {
                continue;
            }
            if a > hi {
                break;
            }
            if a > start {
                out.push((start, a));
            }
            start = start.max(b);
        }
        if start < hi {
            out.push((start, hi));
        }
        out.into_iter()
            .map(|(a, b)| {
                let a = if a == lo { a } else { a + margin };
                let b = if b == hi { b } else { b - margin };
                (a, b)
            })
            .filter(|(a, b)| a < b)
            .collect()
    }
}

pub fn count_in_interval(cs: &ClusterSpectrum, interval: Interval) -> IntervalCount {
    let (a, b) = interval;
    let eigenvalues: Vec<(Vec<usize>, f64)> = cs.eigenvalues.iter().filter(|e| e.1 >= a && e.1 <= b).cloned().collect();
    let distance_to_ac = set_distance(&cs.ac, &[interval]);
    IntervalCount { count: eigenvalues.len(), eigenvalues, distance_to_ac, disjoint: distance_to_ac > 0.0 }
}

#[derive(Clone, Copy)]
enum Part {
    Band(usize, Interval),
    Eigen(usize, f64),
}

impl Part {
    fn index(&self) -> usize {
        match *self {
            Part::Band(j, _) | Part::Eigen(j, _) => j,
        }
    }

    fn interval(&self) -> Interval {
        match *self {
            Part::Band(_, s) => s,
            Part::Eigen(_, e) => (e, e),
        }
    }

    /// Position of the part in the ideal limit: bands at `j`, states at `i − 1 + e_1`.
    fn nominal(&self, e1: f64) -> f64 {
        match *self {
            Part::Band(j, _) => j as f64,
            Part::Eigen(i, _) => i as f64 - 1.0 + e1,
        }
    }
}

fn product(factors: &[NormalizedSpectrum1D]) -> Vec<Vec<Part>> {
    let mut combos: Vec<Vec<Part>> = vec![Vec::new()];
    for f in factors {
        let parts: Vec<Part> = f
            .bands
            .iter()
            .enumerate()
            .map(|(j, s)| Part::Band(j, *s))
            .chain(f.eigenvalues.iter().map(|&(i, e)| Part::Eigen(i, e)))
            .collect();
        combos = combos
            .into_iter()
            .flat_map(|c| {
                parts.iter().map(move |p| {
                    let mut d = c.clone();
                    d.push(*p);
                    d
                })
            })
            .collect();
    }
    combos
}

/// `n` of the eigenvalue cluster holding a multi-index with this sum.
fn eigen_cluster_index(dim: usize, sum: usize) -> Option<usize> {
    let offset = if dim == 2 { 1 } else { dim };
    sum.checked_sub(offset)
}

/// Clusters, separating intervals and bound checks for `d = factors.len()`.
pub fn assemble(factors: &[NormalizedSpectrum1D], kappa: f64, n_max: usize) -> Result<ClusterSpectrum> {
    let d = factors.len();
    if !(2..=3).contains(&d) {
        return Err(SpectralError::InvalidArgument(format!("{d} factors; only 2 or 3 are supported")));
    }
    if !(kappa > 0.0 && kappa <= 0.1) {
        return Err(SpectralError::InvalidArgument(format!("kappa = {kappa} outside (0, 0.1]")));
    }
    if n_max == 0 {
        return Err(SpectralError::InvalidArgument("N must be at least 1".into()));
    }
    for (k, f) in factors.iter().enumerate() {
        if f.bands.len() < n_max + 1 {
            return Err(SpectralError::InvalidArgument(format!(
                "factor {k} resolves {} bands, {} needed",
                f.bands.len(),
                n_max + 1
            )));
        }
    }
    let e1 = factors
        .iter()
        .filter_map(|f| f.eigenvalue(1))
        .fold(f64::NAN, |a, b| if a.is_nan() { b } else { a.min(b) });

    let combos = product(factors);
    let mut ac: Vec<Interval> = Vec::new();
    let mut eigenvalues: Vec<(Vec<usize>, f64)> = Vec::new();
    let mut band_clusters: Vec<BandCluster> = Vec::new();
    let mut eigen_clusters: Vec<EigenCluster> = Vec::new();
    let mut checks: Vec<Check> = Vec::new();
    let n_f = n_max as f64;
    for combo in &combos {
        let indices: Vec<usize> = combo.iter().map(Part::index).collect();
        let eigen_factors: Vec<usize> =
            combo.iter().enumerate().filter(|(_, p)| matches!(p, Part::Eigen(..))).map(|(k, _)| k).collect();
        let lo: f64 = combo.iter().map(|p| p.interval().0).sum();
        let hi: f64 = combo.iter().map(|p| p.interval().1).sum();
        let sum: usize = indices.iter().sum();
        let kind = eigen_factors.len();
        if kind == d {
            eigenvalues.push((indices.clone(), lo));
            if let Some(n) = eigen_cluster_index(d, sum).filter(|n| *n <= n_max) {
                match eigen_clusters.iter_mut().find(|c| c.n == n) {
                    Some(c) => c.values.push((indices.clone(), lo)),
                    None => eigen_clusters.push(EigenCluster { n, values: vec![(indices.clone(), lo)] }),
                }
            }
            continue;
        }
        ac.push((lo, hi));
        let Some(n) = sum.checked_sub(kind).filter(|n| *n <= n_max) else { continue };
        let piece = ClusterPiece { indices, eigen_factors, interval: (lo, hi) };
        match band_clusters.iter_mut().find(|c| c.kind == kind && c.n == n) {
            Some(c) => c.pieces.push(piece),
            None => band_clusters.push(BandCluster { kind, n, pieces: vec![piece], union: Vec::new() }),
        }
    }
    // tails: [t_f, ∞) plus the bottom of every other factor
    let bottoms: Vec<f64> = factors.iter().map(NormalizedSpectrum1D::bottom).collect();
    let total: f64 = bottoms.iter().sum();
    for (f, b) in factors.iter().zip(&bottoms) {
        ac.push((f.tail + total - b, f64::INFINITY));
    }
    let tol = 1e-12 * (n_f + 1.0);
    let ac = merge(ac, tol);

    band_clusters.sort_by_key(|c| (c.kind, c.n));
    for c in &mut band_clusters {
        c.union = merge(c.pieces.iter().map(|p| p.interval).collect(), tol);
    }
    eigen_clusters.sort_by_key(|c| c.n);
    eigenvalues.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));

    // bands sit near their index, eigenvalue factors count with their value
    let anchor = |c: &ClusterPiece| -> f64 {
        c.indices
            .iter()
            .enumerate()
            .map(|(k, &j)| {
                if c.eigen_factors.contains(&k) {
                    factors[k].eigenvalue(j).unwrap_or(f64::NAN)
                } else {
                    j as f64
                }
            })
            .sum()
    };
    for c in &band_clusters {
        let nominal = c.n as f64 + c.kind as f64 * e1;
        let name = format!("K_{}^{}", c.n, c.kind);
        if d == 2 {
            let (pos, len_bound) = if c.kind == 0 { (0.5, 1.0 / (n_f + 1.0)) } else { (0.5, 0.5 / (n_f + 1.0)) };
            for p in c.pieces.iter().filter(|p| p.indices.iter().all(|&j| j <= n_max)) {
                let tag = format!("S_{:?}^{}", p.indices, c.kind);
                let target = anchor(p);
                checks.push(Check::at_most(format!("{tag} distance to {target}"), point_distance(&[p.interval], target), pos * kappa));
                checks.push(Check::at_most(format!("{tag} length"), p.interval.1 - p.interval.0, len_bound * kappa));
            }
            let diam = if c.kind == 0 { 1.5 } else { 1.0 };
            checks.push(Check::at_most(format!("{name} distance to {nominal}"), point_distance(&c.union, nominal), 0.5 * kappa));
            checks.push(Check::at_most(format!("{name} diameter"), diameter(&c.union), diam * kappa));
        } else {
            checks.push(Check::at_most(
                format!("{name} distance to {nominal}"),
                point_distance(&c.union, nominal),
                d as f64 * 0.25 * kappa,
            ));
        }
    }
    for c in &eigen_clusters {
        let name = format!("K_{}^e", c.n);
        let nominal = c.n as f64 + d as f64 * e1 - if d == 2 { 1.0 } else { 0.0 };
        let pts: Vec<Interval> = c.values.iter().map(|v| (v.1, v.1)).collect();
        let expected = if d == 2 { c.n } else { (c.n + 2) * (c.n + 1) / 2 };
        checks.push(Check::at_most(format!("{name} size"), c.values.len() as f64, expected as f64));
        checks.push(Check::at_least(format!("{name} size"), c.values.len() as f64, expected as f64));
        let bound = if d == 2 { 0.5 * kappa } else { d as f64 * 0.25 * kappa };
        checks.push(Check::at_most(format!("{name} distance to {nominal}"), point_distance(&merge(pts.clone(), 0.0), nominal), bound));
        if d == 2 {
            checks.push(Check::at_most(format!("{name} diameter"), diameter(&merge(pts, 0.0)), kappa));
            for (idx, e) in &c.values {
                let ideal: f64 = idx.iter().map(|&i| Part::Eigen(i, 0.0).nominal(e1)).sum();
                checks.push(Check::at_most(format!("E_{idx:?} distance to {ideal}"), (e - ideal).abs(), 0.5 * kappa));
            }
        }
    }

    let mut separating = Vec::new();
    for n in 0..=n_max {
        let interval = (e1 + n as f64 + 4.0 * kappa, n as f64 + 1.0 - 4.0 * kappa);
        let distance_to_ac = set_distance(&ac, &[interval]);
        let count = eigenvalues.iter().filter(|e| e.1 >= interval.0 && e.1 <= interval.1).count();
        checks.push(Check::at_least(format!("I_{n} distance to a.c. spectrum"), distance_to_ac, 2.0 * kappa));
        if let Some(c) = eigen_clusters.iter().find(|c| c.n == n) {
            let outside = c.values.iter().filter(|v| v.1 < interval.0 || v.1 > interval.1).count();
            checks.push(Check::at_most(format!("K_{n}^e points outside I_{n}"), outside as f64, 0.0));
        }
        separating.push(SeparatingInterval { n, interval, distance_to_ac, count });
    }

    let dim_full = factors.iter().filter(|f| matches!(f.source, Source::HalfSolid { .. })).count();
    Ok(ClusterSpectrum {
        dim_plus: d - dim_full,
        dim_full,
        kappa,
        n: n_max,
        e1,
        band_clusters,
        eigenvalue_clusters: eigen_clusters,
        separating_intervals: separating,
        ac,
        eigenvalues,
        checks,
    })
}

pub fn assemble_2d(n1: &NormalizedSpectrum1D, n2: &NormalizedSpectrum1D, kappa: f64, n_max: usize) -> Result<ClusterSpectrum> {
    assemble(&[n1.clone(), n2.clone()], kappa, n_max)
}

pub fn assemble_3d(
    n1: &NormalizedSpectrum1D,
    n2: &NormalizedSpectrum1D,
    n3: &NormalizedSpectrum1D,
    kappa: f64,
    n_max: usize,
) -> Result<ClusterSpectrum> {
    assemble(&[n1.clone(), n2.clone(), n3.clone()], kappa, n_max)
}

/// Fixed data of a half-line cluster computation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClusterSetup {
    pub gamma: f64,
    pub kappa: f64,
    pub n: usize,
    /// Gaps resolved per factor; at least `n + 1`.
    pub n_gaps: usize,
}

impl ClusterSetup {
    /// Half-line cluster spectrum of `h_{v_1} + … + h_{v_d}`. Identical
    /// factors are solved once; `hints` seed the root searches.
    pub fn spectrum(&self, potentials: &[Potential], hints: Option<&[BandStructure]>) -> Result<(ClusterSpectrum, Vec<BandStructure>)> {
        let mut structures: Vec<BandStructure> = Vec::with_capacity(potentials.len());
        for (k, p) in potentials.iter().enumerate() {
            if let Some(j) = potentials[..k].iter().position(|q| q == p) {
                structures.push(structures[j].clone());
                continue;
            }
            let prev = hints.and_then(|h| h.get(k));
            structures.push(BandSolver::new(p)?.structure(self.n_gaps, false, prev)?);
        }
        let factors = structures.iter().map(|b| normalize(b, self.gamma)).collect::<Result<Vec<_>>>()?;
        Ok((assemble(&factors, self.kappa, self.n)?, structures))
    }
}

/// Eigenvalue counts in each interval before and after `v_j → v_j + ε w_j`.
pub fn perturb_and_recount(
    potentials: &[Potential],
    perturbations: &[Potential],
    eps: f64,
    setup: &ClusterSetup,
    intervals: &[Interval],
) -> Result<Vec<(usize, usize)>> {
    let k3 = setup.kappa.powi(3);
    if !(eps >= 0.0 && eps <= k3 * (1.0 + 1e-12)) {
        return Err(SpectralError::InvalidArgument(format!("eps = {eps} exceeds kappa^3 = {k3}")));
    }
    if perturbations.len() != potentials.len() {
        return Err(SpectralError::InvalidArgument("one perturbation per factor required".into()));
    }
    for (k, w) in perturbations.iter().enumerate() {
        if w.sup_norm() > 1.0 + 1e-12 {
            return Err(SpectralError::InvalidArgument(format!("perturbation {k} has sup norm {} > 1", w.sup_norm())));
        }
    }
    let (before, base) = setup.spectrum(potentials, None)?;
    let moved = potentials.iter().zip(perturbations).map(|(v, w)| v.plus_scaled(w, eps)).collect::<Result<Vec<_>>>()?;
    let (after, _) = setup.spectrum(&moved, Some(&base))?;
    let mut out = Vec::with_capacity(intervals.len());
    for &i in intervals {
        let (b, a) = (count_in_interval(&before, i).count, count_in_interval(&after, i).count);
        if a != b {
            return Err(SpectralError::CountChanged { before: b, after: a });
        }
        out.push((b, a));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroundProduct {
    pub energies: Vec<f64>,
    pub e_total: f64,
    pub ac_bottom: f64,
    /// Further sums of factor eigenvalues below `ac_bottom`.
    pub extras: Vec<(Vec<usize>, f64)>,
}

impl GroundProduct {
    pub fn margin(&self) -> f64 {
        self.ac_bottom - self.e_total
    }
}

/// Ground state of `T_{τ,1} + … + T_{τ,d}` from the factor ground states.
pub fn ground_state_product(factors: &[HalfSolidSpectrum]) -> Result<GroundProduct> {
    if factors.is_empty() {
        return Err(SpectralError::InvalidArgument("no factors".into()));
    }
    let mut energies = Vec::with_capacity(factors.len());
    for (k, f) in factors.iter().enumerate() {
        let e = f
            .ground_state
            .filter(|g| g.count == 1)
            .and_then(|g| g.energy)
            .filter(|e| *e < f.ac_bottom())
            .ok_or(SpectralError::NoGroundState { factor: k })?;
        energies.push(e);
    }
    let e_total: f64 = energies.iter().sum();
    let ac_bottom = (0..factors.len())
        .map(|j| factors[j].ac_bottom() + e_total - energies[j])
        .fold(f64::INFINITY, f64::min);
    if !(e_total < ac_bottom) {
        return Err(SpectralError::PostconditionFail(format!("E = {e_total} not below the a.c. bottom {ac_bottom}")));
    }
    // index 0 is the ground state, n ≥ 1 the gap eigenvalues
    let levels: Vec<Vec<(usize, f64)>> = factors
        .iter()
        .zip(&energies)
        .map(|(f, e)| std::iter::once((0, *e)).chain(f.eigenvalues.iter().copied()).collect())
        .collect();
    let mut sums: Vec<(Vec<usize>, f64)> = vec![(Vec::new(), 0.0)];
    for l in &levels {
        sums = sums
            .into_iter()
            .flat_map(|(idx, s)| {
                l.iter().map(move |&(i, e)| {
                    let mut v = idx.clone();
                    v.push(i);
                    (v, s + e)
                })
            })
            .collect();
    }
    let extras = sums.into_iter().filter(|(idx, s)| *s < ac_bottom && idx.iter().any(|&i| i > 0)).collect();
    Ok(GroundProduct { energies, e_total, ac_bottom, extras })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sums_of_intervals_and_points() {
        assert_eq!(minkowski_sum(&[(0.0, 1.0)], &[(2.0, 3.0)]), vec![(2.0, 4.0)]);
        let s = minkowski_sum(&[(0.125, 0.125)], &[(1.0, 1.05)]);
        assert!((s[0].0 - 1.125).abs() < 1e-15 && (s[0].1 - 1.175).abs() < 1e-15);
        assert!(minkowski_sum(&[], &[(0.0, 1.0)]).is_empty());
    }

    #[test]
    fn merging_is_idempotent() {
        let v = vec![(3.0, 4.0), (0.0, 1.0), (0.5, 2.0), (2.0, 2.5)];
        let once = merge(v, 0.0);
        assert_eq!(once, vec![(0.0, 2.5), (3.0, 4.0)]);
        assert_eq!(merge(once.clone(), 0.0), once);
    }

    #[test]
    fn windows_skip_the_spectrum() {
        let cs = ClusterSpectrum {
            dim_plus: 2,
            dim_full: 0,
            kappa: 0.05,
            n: 1,
            e1: 0.125,
            band_clusters: vec![],
            eigenvalue_clusters: vec![],
            separating_intervals: vec![],
            ac: vec![(0.0, 0.1), (1.0, 1.2), (3.0, f64::INFINITY)],
            eigenvalues: vec![(vec![1, 1], 0.5)],
            checks: vec![],
        };
        let w = cs.windows(0.0, 4.0, 0.1);
        assert_eq!(w, vec![(0.2, 0.9), (1.3, 2.9)]);
        let c = count_in_interval(&cs, (0.2, 0.9));
        assert_eq!(c.count, 1);
        assert!(c.disjoint);
        assert!(!count_in_interval(&cs, (1.05, 1.1)).disjoint);
    }
}
