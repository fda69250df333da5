//! Exact enumeration of small hexagons, heat-bath dynamics for large ones,
//! barcode extraction and the empirical barcode statistics.
//!
//! Paths are stored as `x[i][t]`, `0 ≤ i < N`, `0 ≤ t ≤ T`, with
//! `x[i][0] = i` and `x[i][T] = S + i`.

use std::fmt::Write as _;
use std::io::{BufRead, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use rug::Float;

use crate::error::{Error, Result};
use crate::hexagon::{HexagonParams, Region};
use crate::kernels2d::{w_lozenge_im, Lozenge};
use crate::num::{BigReal, QRacahParams};

/// Nonintersecting path ensemble.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PathEnsemble {
    hex: HexagonParams,
    x: Vec<Vec<i64>>,
}

impl PathEnsemble {
    /// Validated ensemble from `x[i][t]`.
    pub fn new(hex: HexagonParams, x: Vec<Vec<i64>>) -> Result<Self> {
        let pe = PathEnsemble { hex, x };
        pe.validate()?;
        Ok(pe)
    }

    /// All paths go flat first, then climb.
    pub fn lowest(hex: HexagonParams) -> Self {
        let (tt, s, n) = hex.tsn();
        let x = (0..n).map(|i| (0..=tt).map(|t| i + (t - (tt - s)).max(0)).collect()).collect();
        PathEnsemble { hex, x }
    }

    /// All paths climb first, then go flat.
    pub fn highest(hex: HexagonParams) -> Self {
        let (tt, s, n) = hex.tsn();
        let x = (0..n).map(|i| (0..=tt).map(|t| i + t.min(s)).collect()).collect();
        PathEnsemble { hex, x }
    }

    /// Densely packed block whose bottom follows `⌊tS/T⌋`.
    pub fn packed(hex: HexagonParams) -> Self {
        let (tt, s, n) = hex.tsn();
        let x = (0..n).map(|i| (0..=tt).map(|t| i + t * s / tt).collect()).collect();
        PathEnsemble { hex, x }
    }

    pub fn hex(&self) -> &HexagonParams {
        &self.hex
    }

    pub fn paths(&self) -> &[Vec<i64>] {
        &self.x
    }

    pub fn position(&self, i: usize, t: usize) -> i64 {
        self.x[i][t]
    }

    pub fn validate(&self) -> Result<()> {
        let (tt, s, n) = self.hex.tsn();
        let bad = |m: String| Err(Error::InvalidParameter(format!("invalid path ensemble: {m}")));
        if self.x.len() != n as usize {
            return bad(format!("{} paths, expected {n}", self.x.len()));
        }
        for (i, p) in self.x.iter().enumerate() {
            let i = i as i64;
            if p.len() != (tt + 1) as usize {
                return bad(format!("path {i} has {} points", p.len()));
            }
            if p[0] != i || p[tt as usize] != s + i {
                return bad(format!("path {i} has wrong end points"));
            }
            if p.windows(2).any(|w| !(w[1] == w[0] || w[1] == w[0] + 1)) {
                return bad(format!("path {i} has an illegal step"));
            }
        }
        for t in 0..=tt as usize {
            if self.x.windows(2).any(|w| w[0][t] >= w[1][t]) {
                return bad(format!("paths intersect on slice {t}"));
            }
        }
        Ok(())
    }

    /// Index of the path through `(t, y)`, if any.
    pub fn occupant(&self, t: usize, y: i64) -> Option<usize> {
        let n = self.x.len();
        let (mut lo, mut hi) = (0usize, n);
        while lo < hi {
            let mid = (lo + hi) / 2;
            match self.x[mid][t].cmp(&y) {
                std::cmp::Ordering::Equal => return Some(mid),
                std::cmp::Ordering::Less => lo = mid + 1,
                std::cmp::Ordering::Greater => hi = mid,
            }
        }
        None
    }

    /// Lozenge covering the white triangle `(t, y)`, `0 ≤ t < T`.
    pub fn lozenge_at(&self, t: usize, y: i64) -> Lozenge {
        let ti = t as i64;
        match self.occupant(t, y) {
            None => Lozenge::Horizontal { t: ti, y },
            Some(i) if self.x[i][t + 1] == y => Lozenge::Square { t: ti, y },
            Some(_) => Lozenge::Vertical { t: ti, y },
        }
    }

    /// Holes `(t, y)`: admissible positions not occupied by a path.
    pub fn holes(&self) -> Vec<(i64, i64)> {
        let mut out = Vec::with_capacity(self.hex.total_holes() as usize);
        for t in 0..=self.hex.horizon {
            let (lo, hi) = self.hex.slice_range(t).expect("slice in range");
            let col: Vec<i64> = self.x.iter().map(|p| p[t as usize]).collect();
            let mut k = 0;
            for y in lo..=hi {
                if k < col.len() && col[k] == y {
                    k += 1;
                } else {
                    out.push((t, y));
                }
            }
        }
        out
    }

    /// `Σ_{i,t} x_i(t)`, which changes by one under each elementary flip.
    pub fn position_sum(&self) -> i64 {
        self.x.iter().flatten().sum()
    }

    /// Resample `x_i(t)` from its exact conditional law. Returns whether it changed.
    pub fn heat_bath_at<R: Rng + ?Sized>(&mut self, w: &ChainWeights, i: usize, t: usize, rng: &mut R) -> bool {
        let a = self.x[i][t - 1];
        if self.x[i][t + 1] != a + 1 {
            return false;
        }
        let lo_ok = i == 0 || self.x[i - 1][t] < a;
        let hi_ok = i + 1 == self.x.len() || self.x[i + 1][t] > a + 1;
        let new = match (lo_ok, hi_ok) {
            (true, true) => {
                let d = w.ln_phi(t, a + 1) - w.ln_phi(t, a);
                let p_up = 1.0 / (1.0 + (-d).exp());
                if rng.random::<f64>() < p_up {
                    a + 1
                } else {
                    a
                }
            }
            (true, false) => a,
            (false, true) => a + 1,
            (false, false) => unreachable!("the current value is always admissible"),
        };
        let changed = new != self.x[i][t];
        self.x[i][t] = new;
        changed
    }

    /// One single-site heat-bath update at a uniformly chosen `(i, t)`, `0 < t < T`.
    pub fn heat_bath_step<R: Rng + ?Sized>(&mut self, w: &ChainWeights, rng: &mut R) -> bool {
        let tt = self.hex.horizon as usize;
        if tt < 2 {
            return false;
        }
        let i = rng.random_range(0..self.x.len());
        let t = rng.random_range(1..tt);
        self.heat_bath_at(w, i, t, rng)
    }

    /// Resample the whole slice `t` from its exact conditional law given
    /// slices `t−1` and `t+1`. Returns the number of moved paths.
    pub fn slice_gibbs<R: Rng + ?Sized>(&mut self, w: &ChainWeights, t: usize, rng: &mut R) -> usize {
        let n = self.x.len();
        // candidates lo_j (and lo_j + 1 when free); forward weights per state
        let mut lo = Vec::with_capacity(n);
        let mut fwd: Vec<[f64; 2]> = Vec::with_capacity(n);
        for j in 0..n {
            let (a, b) = (self.x[j][t - 1], self.x[j][t + 1]);
            let l = a.max(b - 1);
            let free = b == a + 1;
            let (pl, ph) = if free {
                let d = w.ln_phi(t, l + 1) - w.ln_phi(t, l);
                if d > 0.0 {
                    ((-d).exp(), 1.0)
                } else {
                    (1.0, d.exp())
                }
            } else {
                (1.0, 0.0)
            };
            let (ml, mh) = if j == 0 {
                (1.0, 1.0)
            } else {
                let (pl0, f0) = (lo[j - 1], fwd[j - 1]);
                let below = |c: i64| {
                    let mut s = 0.0;
                    if pl0 < c {
                        s += f0[0];
                    }
                    if pl0 + 1 < c {
                        s += f0[1];
                    }
                    s
                };
                (below(l), below(l + 1))
            };
            let (al, ah) = (pl * ml, ph * mh);
            let z = al + ah;
            lo.push(l);
            fwd.push([al / z, ah / z]);
        }
        let mut moved = 0;
        let mut cap = i64::MAX;
        for j in (0..n).rev() {
            let l = lo[j];
            let wl = if l < cap { fwd[j][0] } else { 0.0 };
            let wh = if l + 1 < cap { fwd[j][1] } else { 0.0 };
            let v = if wh == 0.0 || rng.random::<f64>() * (wl + wh) < wl { l } else { l + 1 };
            if v != self.x[j][t] {
                moved += 1;
                self.x[j][t] = v;
            }
            cap = v;
        }
        moved
    }

    /// One systematic sweep of [`slice_gibbs`](Self::slice_gibbs) over `0 < t < T`.
    pub fn sweep<R: Rng + ?Sized>(&mut self, w: &ChainWeights, rng: &mut R) -> usize {
        let tt = self.hex.horizon as usize;
        (1..tt).map(|t| self.slice_gibbs(w, t, rng)).sum()
    }
}

/// Per-slice log weights `ln φ_t(v) = v ln q − ln(1 − κ² q^{2v−S−t+1})` in
/// double precision.
#[derive(Clone, Debug)]
pub struct ChainWeights {
    hex: HexagonParams,
    ln_phi: Vec<Vec<f64>>,
}

fn softplus(y: f64) -> f64 {
    if y > 30.0 {
        y + (-y).exp().ln_1p()
    } else {
        y.exp().ln_1p()
    }
}

impl ChainWeights {
    /// `q > 0` and `kappa ≥ 0` the imaginary part of `κ`.
    pub fn new(hex: HexagonParams, q: f64, kappa: f64) -> Result<Self> {
        if !(q > 0.0 && q.is_finite() && kappa >= 0.0 && kappa.is_finite()) {
            return Err(Error::InvalidParameter(format!("need q > 0 and kappa ≥ 0, got q={q}, kappa={kappa}")));
        }
        let (tt, s, n) = hex.tsn();
        let lq = q.ln();
        let lk = 2.0 * kappa.ln();
        let ln_phi = (0..=tt)
            .map(|t| {
                (0..s + n)
                    .map(|v| {
                        let y = lk + (2 * v - s - t + 1) as f64 * lq;
                        v as f64 * lq - if kappa == 0.0 { 0.0 } else { softplus(y) }
                    })
                    .collect()
            })
            .collect();
        Ok(ChainWeights { hex, ln_phi })
    }

    pub fn from_params(hex: HexagonParams, params: &QRacahParams) -> Result<Self> {
        Self::new(hex, params.q().to_f64(), params.kappa_abs().to_f64())
    }

    pub fn hex(&self) -> &HexagonParams {
        &self.hex
    }

    pub fn ln_phi(&self, t: usize, v: i64) -> f64 {
        self.ln_phi[t][v as usize]
    }

    /// `ln` of the unnormalized weight of an ensemble.
    pub fn ln_weight(&self, pe: &PathEnsemble) -> f64 {
        pe.x.iter().map(|p| p.iter().enumerate().map(|(t, &v)| self.ln_phi(t, v)).sum::<f64>()).sum()
    }
}

/// Particle-product weight `Π_t Π_i q^{x_i(t)}/(1−κ²q^{2x_i(t)−S−t+1})`.
pub fn ensemble_weight(params: &QRacahParams, pe: &PathEnsemble) -> Result<BigReal> {
    pe.validate()?;
    let s = pe.hex.shift;
    let mut w = params.one();
    for p in &pe.x {
        for (t, &v) in p.iter().enumerate() {
            let den = params.one() + params.minus_kappa_sq().clone() * params.qpow(2 * v - s - t as i64 + 1);
            w *= params.qpow(v);
            w /= den;
        }
    }
    Ok(w)
}

/// Hole-product weight `Π_holes |𝗐(x − t/2 + 1)|`.
pub fn ensemble_weight_holes(params: &QRacahParams, pe: &PathEnsemble) -> Result<BigReal> {
    pe.validate()?;
    let s = pe.hex.shift;
    let mut w = params.one();
    for (t, y) in pe.holes() {
        w *= w_lozenge_im(params, s, 2 * y - t + 2);
    }
    Ok(w)
}

/// Projected enumeration work `Π_t C(slice size, N)`.
pub fn enumeration_work(hex: &HexagonParams) -> f64 {
    let n = hex.paths as f64;
    (0..=hex.horizon)
        .map(|t| {
            let (lo, hi) = hex.slice_range(t).expect("slice in range");
            let m = (hi - lo + 1) as f64;
            (0..hex.paths).map(|k| (m - k as f64) / (n - k as f64)).product::<f64>()
        })
        .product()
}

/// Work limit accepted by [`enumerate`].
pub const ENUMERATION_LIMIT: f64 = 1e7;

/// All ensembles with their exact probabilities.
pub fn enumerate(hex: HexagonParams, params: &QRacahParams) -> Result<Vec<(PathEnsemble, BigReal)>> {
    let work = enumeration_work(&hex);
    if work > ENUMERATION_LIMIT {
        return Err(Error::SizeGuard(format!("enumeration work {work:.3e} exceeds {ENUMERATION_LIMIT:.0e}")));
    }
    let (tt, s, n) = hex.tsn();
    let mut out = Vec::new();
    let mut cols: Vec<Vec<i64>> = vec![(0..n).collect()];
    fn rec(hex: &HexagonParams, cols: &mut Vec<Vec<i64>>, out: &mut Vec<Vec<Vec<i64>>>) {
        let (tt, s, n) = hex.tsn();
        let t = cols.len() as i64;
        if t > tt {
            out.push(cols.clone());
            return;
        }
        let prev = cols.last().expect("nonempty").clone();
        for mask in 0u64..(1u64 << n) {
            let next: Vec<i64> = prev.iter().enumerate().map(|(i, &v)| v + ((mask >> i) & 1) as i64).collect();
            let ok = next.windows(2).all(|w| w[0] < w[1])
                && next.iter().enumerate().all(|(i, &v)| v <= s + i as i64 && v >= s + i as i64 - (tt - t));
            if ok {
                cols.push(next);
                rec(hex, cols, out);
                cols.pop();
            }
        }
    }
    let mut raw = Vec::new();
    rec(&hex, &mut cols, &mut raw);
    let _ = (tt, s);
    let mut total = params.zero();
    for c in raw {
        let x: Vec<Vec<i64>> = (0..n as usize).map(|i| c.iter().map(|col| col[i]).collect()).collect();
        let pe = PathEnsemble::new(hex, x)?;
        let w = ensemble_weight(params, &pe)?;
        total += &w;
        out.push((pe, w));
    }
    for (_, w) in out.iter_mut() {
        *w /= &total;
    }
    Ok(out)
}

/// Exact sampler drawing from an enumeration via cumulative weights.
#[derive(Clone, Debug)]
pub struct ExactSampler {
    ensembles: Vec<PathEnsemble>,
    cdf: Vec<f64>,
}

impl ExactSampler {
    pub fn new(hex: HexagonParams, params: &QRacahParams) -> Result<Self> {
        Ok(Self::from_enumeration(&enumerate(hex, params)?))
    }

    pub fn from_enumeration(list: &[(PathEnsemble, BigReal)]) -> Self {
        let mut acc = 0.0;
        let mut cdf = Vec::with_capacity(list.len());
        for (_, p) in list {
            acc += p.to_f64();
            cdf.push(acc);
        }
        ExactSampler { ensembles: list.iter().map(|(e, _)| e.clone()).collect(), cdf }
    }

    /// Index of a sampled ensemble.
    pub fn sample_index<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u = rng.random::<f64>() * self.cdf.last().copied().unwrap_or(1.0);
        self.cdf.partition_point(|&c| c <= u).min(self.cdf.len() - 1)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> &PathEnsemble {
        &self.ensembles[self.sample_index(rng)]
    }

    pub fn ensembles(&self) -> &[PathEnsemble] {
        &self.ensembles
    }
}

/// Probability that a random ensemble contains all the given lozenges.
pub fn enumeration_probability(list: &[(PathEnsemble, BigReal)], lozenges: &[Lozenge]) -> BigReal {
    let prec = list.first().map(|(_, p)| p.prec()).unwrap_or(64);
    let mut total = Float::with_val(prec, 0);
    for (pe, p) in list {
        let all = lozenges.iter().all(|l| {
            let (t, y) = l.white();
            t >= 0 && t < pe.hex.horizon && pe.lozenge_at(t as usize, y) == *l
        });
        if all {
            total += p;
        }
    }
    total
}

/// Probability that `(t, x)` is occupied by a path.
pub fn enumeration_one_point(list: &[(PathEnsemble, BigReal)], t: i64, x: i64) -> BigReal {
    let prec = list.first().map(|(_, p)| p.prec()).unwrap_or(64);
    let mut total = Float::with_val(prec, 0);
    for (pe, p) in list {
        if pe.occupant(t as usize, x).is_some() {
            total += p;
        }
    }
    total
}

/// Reproducible random stream: ChaCha8 with a 64-bit seed and a stream id.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RngState {
    pub seed: u64,
    pub stream: u64,
}

impl RngState {
    pub const ALGORITHM: &'static str = "chacha8";

    pub fn new(seed: u64, stream: u64) -> Self {
        RngState { seed, stream }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut r = ChaCha8Rng::seed_from_u64(self.seed);
        r.set_stream(self.stream);
        r
    }
}

/// Kind of elementary update used by [`run_chain`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MoveKind {
    /// Single-site heat bath; one step is one update.
    SingleSite,
    /// Exact slice resampling; one step is a sweep over all interior slices.
    SliceSweep,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ChainConfig {
    pub moves: MoveKind,
    pub burn_in: u64,
    pub steps: u64,
}

impl ChainConfig {
    /// Single-site updates with burn-in `40·T·S·N`.
    pub fn single_site(hex: &HexagonParams, steps: u64) -> Self {
        let (tt, s, n) = hex.tsn();
        ChainConfig { moves: MoveKind::SingleSite, burn_in: (40 * tt * s * n) as u64, steps }
    }

    pub fn sweeps(burn_in: u64, steps: u64) -> Self {
        ChainConfig { moves: MoveKind::SliceSweep, burn_in, steps }
    }
}

/// Counters reported by [`run_chain`].
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ChainReport {
    pub updates: u64,
    pub changes: u64,
}

impl ChainReport {
    pub fn flip_rate(&self) -> f64 {
        if self.updates == 0 {
            0.0
        } else {
            self.changes as f64 / self.updates as f64
        }
    }
}

/// Runs `burn_in + steps` updates in place.
pub fn run_chain<R: Rng + ?Sized>(
    pe: &mut PathEnsemble,
    w: &ChainWeights,
    cfg: &ChainConfig,
    rng: &mut R,
) -> ChainReport {
    let mut rep = ChainReport::default();
    for _ in 0..cfg.burn_in + cfg.steps {
        match cfg.moves {
            MoveKind::SingleSite => {
                rep.updates += 1;
                rep.changes += pe.heat_bath_step(w, rng) as u64;
            }
            MoveKind::SliceSweep => {
                rep.updates += (pe.hex.horizon - 1).max(0) as u64 * pe.x.len() as u64;
                rep.changes += pe.sweep(w, rng) as u64;
            }
        }
    }
    rep
}

/// Independent chains from the packed start, one per stream, in parallel.
pub fn sample_ensembles(
    w: &ChainWeights,
    cfg: &ChainConfig,
    count: usize,
    seed: u64,
) -> Vec<(PathEnsemble, ChainReport)> {
    (0..count as u64)
        .into_par_iter()
        .map(|k| {
            let mut rng = RngState::new(seed, k).rng();
            let mut pe = PathEnsemble::packed(w.hex);
            let rep = run_chain(&mut pe, w, cfg, &mut rng);
            (pe, rep)
        })
        .collect()
}

/// Binary record along the horizontal line `x = X₀`. Bit `j` describes the
/// lozenge with white triangle `(T₀+t−1, X₀)` and black `(T₀+t, X₀)` for
/// `t = first + j`: one for a square lozenge, zero otherwise.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Barcode {
    pub t0: i64,
    pub x0: i64,
    pub first: i64,
    pub bits: Vec<bool>,
    /// Values of `t` where the white triangle is not a path point (a hole,
    /// or a cell outside the hexagon).
    pub defects: Vec<i64>,
    /// Slice where the center line crosses the probe line, `2X₀ − S`.
    pub reference: i64,
}

impl Barcode {
    /// Whether bit `j` sits at an even distance from the center crossing.
    pub fn is_even(&self, j: usize) -> bool {
        (self.t0 + self.first + j as i64 - self.reference).rem_euclid(2) == 0
    }

    pub fn to_bit_string(&self) -> String {
        self.bits.iter().map(|&b| if b { '1' } else { '0' }).collect()
    }
}

/// Barcode for `t ∈ range` around `(T₀, X₀)`.
pub fn extract_barcode(pe: &PathEnsemble, t0: i64, x0: i64, range: std::ops::RangeInclusive<i64>) -> Result<Barcode> {
    let (tt, s, n) = pe.hex.tsn();
    if x0 < 0 || x0 >= s + n {
        return Err(Error::Domain(format!("probe line x = {x0} misses the hexagon")));
    }
    let (a, b) = (t0 + range.start(), t0 + range.end());
    if a < 1 || b > tt || a > b {
        return Err(Error::Domain(format!("probe slices {a}..={b} outside 1..={tt}")));
    }
    let mut bits = Vec::with_capacity((b - a + 1) as usize);
    let mut defects = Vec::new();
    for tau in a..=b {
        match pe.lozenge_at((tau - 1) as usize, x0) {
            Lozenge::Square { .. } => bits.push(true),
            Lozenge::Vertical { .. } => bits.push(false),
            Lozenge::Horizontal { .. } => {
                bits.push(false);
                defects.push(tau - t0);
            }
        }
    }
    Ok(Barcode { t0, x0, first: *range.start(), bits, defects, reference: 2 * x0 - s })
}

/// Barcode across the whole hexagon, `1 ≤ t ≤ T`, on the line `x = X₀`.
pub fn full_line_barcode(pe: &PathEnsemble, x0: i64) -> Result<Barcode> {
    extract_barcode(pe, 0, x0, 1..=pe.hex.horizon)
}

/// Default probe line `⌊(S+N)/2⌋` through the middle of the hexagon.
pub fn default_probe_line(hex: &HexagonParams) -> i64 {
    (hex.shift + hex.paths) / 2
}

/// Empirical barcode statistics.
#[derive(Clone, Debug, PartialEq)]
pub struct BarcodeStats {
    pub samples: usize,
    pub even_ones: u64,
    pub odd_ones: u64,
    pub even_sites: u64,
    pub odd_sites: u64,
    /// Pattern `11` over all offsets.
    pub pair_ones: u64,
    pub pair_sites: u64,
    /// Pattern `1⋆1` by parity of its first site.
    pub gap_even_ones: u64,
    pub gap_even_sites: u64,
    pub gap_odd_ones: u64,
    pub gap_odd_sites: u64,
    pub defects: u64,
}

fn ratio(a: u64, b: u64) -> f64 {
    if b == 0 {
        f64::NAN
    } else {
        a as f64 / b as f64
    }
}

impl BarcodeStats {
    pub fn even_frequency(&self) -> f64 {
        ratio(self.even_ones, self.even_sites)
    }
    pub fn odd_frequency(&self) -> f64 {
        ratio(self.odd_ones, self.odd_sites)
    }
    pub fn pair_frequency(&self) -> f64 {
        ratio(self.pair_ones, self.pair_sites)
    }
    pub fn gap_even_frequency(&self) -> f64 {
        ratio(self.gap_even_ones, self.gap_even_sites)
    }
    pub fn gap_odd_frequency(&self) -> f64 {
        ratio(self.gap_odd_ones, self.gap_odd_sites)
    }
}

/// Counts over all samples after trimming `margin` sites from each end.
pub fn barcode_stats(samples: &[Barcode], margin: usize) -> Result<BarcodeStats> {
    if samples.is_empty() {
        return Err(Error::Domain("no barcode samples".into()));
    }
    let mut st = BarcodeStats {
        samples: samples.len(),
        even_ones: 0,
        odd_ones: 0,
        even_sites: 0,
        odd_sites: 0,
        pair_ones: 0,
        pair_sites: 0,
        gap_even_ones: 0,
        gap_even_sites: 0,
        gap_odd_ones: 0,
        gap_odd_sites: 0,
        defects: 0,
    };
    for bc in samples {
        let len = bc.bits.len();
        if len <= 2 * margin {
            continue;
        }
        let (a, b) = (margin, len - margin);
        let bit = |j: usize| bc.bits[j] as u64;
        for j in a..b {
            if bc.is_even(j) {
                st.even_sites += 1;
                st.even_ones += bit(j);
            } else {
                st.odd_sites += 1;
                st.odd_ones += bit(j);
            }
            if j + 1 < b {
                st.pair_sites += 1;
                st.pair_ones += bit(j) * bit(j + 1);
            }
            if j + 2 < b {
                let v = bit(j) * bit(j + 2);
                if bc.is_even(j) {
                    st.gap_even_sites += 1;
                    st.gap_even_ones += v;
                } else {
                    st.gap_odd_sites += 1;
                    st.gap_odd_ones += v;
                }
            }
        }
        let first = bc.first;
        st.defects += bc.defects.iter().filter(|&&t| t >= first + a as i64 && t < first + b as i64).count() as u64;
    }
    Ok(st)
}

/// Height fluctuations `h(t) − n(t)/2`, where `h(t)` sums bits from index
/// `offset` through `t` and `n(t)` is the number of summed sites.
pub fn height_fluctuations(bc: &Barcode, offset: usize) -> Vec<f64> {
    let mut h = 0.0;
    bc.bits
        .iter()
        .skip(offset)
        .enumerate()
        .map(|(k, &b)| {
            h += b as u8 as f64;
            h - (k + 1) as f64 / 2.0
        })
        .collect()
}

/// Fraction of holes among the points of the shrunk waterfall
/// `{ 𝗍_l+ε < t/L < 𝗍_r−ε, |2x−S−t| ≤ (1−ε)N }`.
pub fn waterfall_hole_frequency(pe: &PathEnsemble, eps: f64) -> f64 {
    let hex = pe.hex;
    let l = hex.scale.unwrap_or(1) as f64;
    let geo = hex.scaled();
    let (mut holes, mut sites) = (0u64, 0u64);
    for t in 0..=hex.horizon {
        let ts = t as f64 / l;
        if !(ts > geo.t_left() + eps && ts < geo.t_right() - eps) {
            continue;
        }
        let (lo, hi) = hex.slice_range(t).expect("slice in range");
        for x in lo..=hi {
            let d = (2 * x - hex.shift - t) as f64;
            if d.abs() <= (1.0 - eps) * hex.paths as f64 && geo.classify(ts, x as f64 / l) == Region::Waterfall {
                sites += 1;
                holes += pe.occupant(t as usize, x).is_none() as u64;
            }
        }
    }
    ratio(holes, sites)
}

/// Header of a barcode record file.
#[derive(Clone, Debug, PartialEq)]
pub struct RecordHeader {
    pub horizon: i64,
    pub shift: i64,
    pub paths: i64,
    pub q: String,
    pub kappa: String,
    pub seed: u64,
}

/// Writes `# T=.. S=.. N=.. q=.. kappa=.. seed=..` followed by one bit string per line.
pub fn write_barcodes<W: Write>(out: &mut W, header: &RecordHeader, samples: &[Barcode]) -> std::io::Result<()> {
    writeln!(
        out,
        "# T={} S={} N={} q={} kappa={} seed={}",
        header.horizon, header.shift, header.paths, header.q, header.kappa, header.seed
    )?;
    for bc in samples {
        writeln!(out, "{}", bc.to_bit_string())?;
    }
    Ok(())
}

/// Reads a record file; the barcodes come back on the full line through
/// `x0` with `first = 1`.
pub fn read_barcodes<R: BufRead>(input: R, x0: i64) -> Result<(RecordHeader, Vec<Barcode>)> {
    let mut lines = input.lines();
    let head = lines
        .next()
        .ok_or_else(|| Error::Parse("empty barcode file".into()))?
        .map_err(|e| Error::Parse(e.to_string()))?;
    let mut h = RecordHeader { horizon: 0, shift: 0, paths: 0, q: String::new(), kappa: String::new(), seed: 0 };
    let body = head.strip_prefix('#').ok_or_else(|| Error::Parse("missing header line".into()))?;
    for kv in body.split_whitespace() {
        let (k, v) = kv.split_once('=').ok_or_else(|| Error::Parse(format!("bad header field {kv}")))?;
        let int = |v: &str| v.parse::<i64>().map_err(|e| Error::Parse(format!("{k}: {e}")));
        match k {
            "T" => h.horizon = int(v)?,
            "S" => h.shift = int(v)?,
            "N" => h.paths = int(v)?,
            "q" => h.q = v.to_string(),
            "kappa" => h.kappa = v.to_string(),
            "seed" => h.seed = v.parse().map_err(|e| Error::Parse(format!("seed: {e}")))?,
            _ => return Err(Error::Parse(format!("unknown header field {k}"))),
        }
    }
    let mut out = Vec::new();
    for line in lines {
        let line = line.map_err(|e| Error::Parse(e.to_string()))?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let bits = line
            .chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                _ => Err(Error::Parse(format!("bad bit {c:?}"))),
            })
            .collect::<Result<Vec<bool>>>()?;
        out.push(Barcode { t0: 0, x0, first: 1, bits, defects: Vec::new(), reference: 2 * x0 - h.shift });
    }
    Ok((h, out))
}

/// Colors and stroke of the SVG renderer.
#[derive(Clone, Debug, PartialEq)]
pub struct SvgStyle {
    pub horizontal: String,
    pub square: String,
    pub vertical: String,
    pub stroke: String,
    pub unit: f64,
    pub draw_paths: bool,
}

impl Default for SvgStyle {
    fn default() -> Self {
        SvgStyle {
            horizontal: "#e8c468".into(),
            square: "#5b8fc7".into(),
            vertical: "#d9534f".into(),
            stroke: "#222".into(),
            unit: 12.0,
            draw_paths: false,
        }
    }
}

/// Renders the tiling as SVG. The lattice point `(t, x)` is drawn at
/// `(t·√3/2, x − t/2)`, so the three lozenge types are unit rhombi.
pub fn render_svg(pe: &PathEnsemble, style: &SvgStyle) -> String {
    let (tt, s, n) = pe.hex.tsn();
    let c = 3f64.sqrt() / 2.0;
    let u = style.unit;
    let ymax = (s + n) as f64;
    let map = |t: f64, x: f64| (u * (t * c + 0.5), u * (ymax + 0.5 - (x - t / 2.0)));
    let width = u * (tt as f64 * c + 1.0);
    let height = u * (ymax + 1.0 + tt as f64 / 2.0);
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.1}" height="{height:.1}" viewBox="0 0 {width:.1} {height:.1}">"#
    );
    let _ = writeln!(out, r#"<g stroke="{}" stroke-width="{:.2}">"#, style.stroke, u / 24.0);
    let mut poly = |pts: [(f64, f64); 4], fill: &str| {
        let p: Vec<String> = pts
            .iter()
            .map(|&(t, x)| {
                let (a, b) = map(t, x);
                format!("{a:.2},{b:.2}")
            })
            .collect();
        let _ = writeln!(out, r#"<polygon points="{}" fill="{fill}"/>"#, p.join(" "));
    };
    for t in 0..tt {
        let (lo, hi) = pe.hex.slice_range(t).expect("slice in range");
        let tf = t as f64;
        for y in lo..=hi {
            let yf = y as f64;
            match pe.lozenge_at(t as usize, y) {
                Lozenge::Square { .. } => {
                    poly([(tf, yf - 0.5), (tf, yf + 0.5), (tf + 1.0, yf + 0.5), (tf + 1.0, yf - 0.5)], &style.square)
                }
                Lozenge::Vertical { .. } => {
                    poly([(tf, yf - 0.5), (tf, yf + 0.5), (tf + 1.0, yf + 1.5), (tf + 1.0, yf + 0.5)], &style.vertical)
                }
                Lozenge::Horizontal { .. } => poly(
                    [(tf - 1.0, yf - 0.5), (tf, yf - 0.5), (tf + 1.0, yf + 0.5), (tf, yf + 0.5)],
                    &style.horizontal,
                ),
            }
        }
    }
    let _ = writeln!(out, "</g>");
    if style.draw_paths {
        for p in &pe.x {
            let pts: Vec<String> = p
                .iter()
                .enumerate()
                .map(|(t, &x)| {
                    let (a, b) = map(t as f64, x as f64);
                    format!("{a:.2},{b:.2}")
                })
                .collect();
            let _ = writeln!(
                out,
                r#"<polyline points="{}" fill="none" stroke="black" stroke-width="{:.2}"/>"#,
                pts.join(" "),
                u / 8.0
            );
        }
    }
    let _ = writeln!(out, "</svg>");
    out
}
