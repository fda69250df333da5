//! The q-Racah orthogonal polynomial ensemble on one slice of the hexagon:
//! weight, polynomials, norms, orthonormal functions, the difference
//! operator they diagonalize, the fixed-slice kernel and its scaled version.
//!
//! Everything is indexed by the zone coordinate `x̃ ∈ {0, …, M}`; the public
//! accessors that take a slice position convert with [`HexagonParams::tilde_x`].

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use rug::Float;

use crate::error::{Error, Result};
use crate::hexagon::{HexagonParams, ZoneParams};
use crate::num::{sqrt_checked, BigReal, QRacahParams};
use crate::qspecial::{phi43_terminating, qpoch_qp, QPower};

/// Orthonormal basis `f_n(x) = R_n(μ(x)) √(w(x)/h_n)` on one slice.
#[derive(Debug)]
pub struct SliceBasis {
    hex: HexagonParams,
    params: QRacahParams,
    t: i64,
    zone: ZoneParams,
    weights: Vec<BigReal>,
    norms: Vec<BigReal>,
    columns: Mutex<HashMap<i64, Arc<Vec<BigReal>>>>,
}

impl SliceBasis {
    pub fn new(hex: HexagonParams, params: &QRacahParams, t: i64) -> Result<Self> {
        let zone = hex.zone_of(t)?;
        let weights = weight_table(params, &zone)?;
        let norms = norm_table(params, &zone)?;
        Ok(SliceBasis { hex, params: params.clone(), t, zone, weights, norms, columns: Mutex::new(HashMap::new()) })
    }

    pub fn hex(&self) -> &HexagonParams {
        &self.hex
    }

    pub fn params(&self) -> &QRacahParams {
        &self.params
    }

    pub fn slice(&self) -> i64 {
        self.t
    }

    pub fn zone(&self) -> &ZoneParams {
        &self.zone
    }

    /// `M`: the zone coordinate runs over `0..=M`.
    pub fn m(&self) -> i64 {
        self.zone.m
    }

    /// Slice position of zone coordinate 0.
    pub fn offset(&self) -> i64 {
        self.hex.untilde_x(self.t, 0).expect("slice validated at construction")
    }

    fn xt(&self, x: i64) -> Result<i64> {
        let xt = x - self.offset();
        if xt < 0 || xt > self.zone.m {
            return Err(Error::Domain(format!("position {x} is not on slice {} (zone coordinate {xt})", self.t)));
        }
        Ok(xt)
    }

    /// `w^{qR}(x̃)` at zone coordinate `xt`.
    pub fn weight(&self, xt: i64) -> Result<&BigReal> {
        self.weights
            .get(usize::try_from(xt).map_err(|_| Error::Domain(format!("x̃ = {xt} < 0")))?)
            .ok_or_else(|| Error::Domain(format!("x̃ = {xt} > M = {}", self.zone.m)))
    }

    pub fn weights(&self) -> &[BigReal] {
        &self.weights
    }

    /// `h_n` by the closed product formula.
    pub fn norm(&self, n: i64) -> Result<&BigReal> {
        self.norms
            .get(usize::try_from(n).map_err(|_| Error::Domain(format!("n = {n} < 0")))?)
            .ok_or_else(|| Error::Domain(format!("n = {n} > M = {}", self.zone.m)))
    }

    /// `μ(x̃) = q^{-x̃} + γδ q^{x̃+1}`.
    pub fn mu(&self, xt: i64) -> BigReal {
        mu(&self.params, &self.zone, xt)
    }

    /// `R_n(μ(x̃))`.
    pub fn racah(&self, n: i64, xt: i64) -> Result<BigReal> {
        racah_r(&self.params, &self.zone, n, xt)
    }

    /// `f_n` at zone coordinate `xt`.
    pub fn f_tilde(&self, n: i64, xt: i64) -> Result<BigReal> {
        let r = self.racah(n, xt)?;
        let ratio = Float::with_val(self.params.bits(), self.weight(xt)? / self.norm(n)?);
        Ok(r * sqrt_checked(ratio, "w/h_n")?)
    }

    /// `f_n(x)` at slice position `x`.
    pub fn f(&self, n: i64, x: i64) -> Result<BigReal> {
        if n < 0 || n > self.zone.m {
            return Err(Error::Domain(format!("degree {n} outside [0, {}]", self.zone.m)));
        }
        let col = self.column(x)?;
        Ok(col[n as usize].clone())
    }

    /// All `f_n(x)`, `0 ≤ n ≤ M`, at slice position `x` (cached).
    pub fn column(&self, x: i64) -> Result<Arc<Vec<BigReal>>> {
        let xt = self.xt(x)?;
        if let Some(c) = self.columns.lock().expect("cache poisoned").get(&xt) {
            return Ok(c.clone());
        }
        let col: Vec<BigReal> = (0..=self.zone.m).map(|n| self.f_tilde(n, xt)).collect::<Result<_>>()?;
        let col = Arc::new(col);
        self.columns.lock().expect("cache poisoned").insert(xt, col.clone());
        Ok(col)
    }

    /// Full table `f[n][x̃]`.
    pub fn table(&self) -> Result<Vec<Vec<BigReal>>> {
        let off = self.offset();
        let cols: Vec<Arc<Vec<BigReal>>> = (0..=self.zone.m).map(|xt| self.column(xt + off)).collect::<Result<_>>()?;
        Ok((0..=self.zone.m as usize).map(|n| cols.iter().map(|c| c[n].clone()).collect()).collect())
    }

    /// Positions on the slice, in order.
    pub fn positions(&self) -> std::ops::RangeInclusive<i64> {
        let off = self.offset();
        off..=off + self.zone.m
    }

    /// `B(x̃)`.
    pub fn coeff_b(&self, xt: i64) -> BigReal {
        coeff_b(&self.params, &self.zone, xt)
    }

    /// `D(x̃)`.
    pub fn coeff_d(&self, xt: i64) -> BigReal {
        coeff_d(&self.params, &self.zone, xt)
    }

    /// Eigenvalue `q^{-n}(1−q^n)(1−αβq^{n+1})` of `f_n`.
    pub fn eigenvalue(&self, n: i64) -> BigReal {
        let p = &self.params;
        let ab = self.zone.alpha * self.zone.beta;
        p.qpow(-n) * p.one_minus(&QPower::q(n)) * p.one_minus(&ab.shift(n + 1))
    }
}

fn weight_table(p: &QRacahParams, z: &ZoneParams) -> Result<Vec<BigReal>> {
    let (a, b, g, d) = (z.alpha, z.beta, z.gamma, z.delta);
    let gd = g * d;
    let abq = (a * b).shift(1);
    let inv_abq = p.eval(&abq.inv());
    let mut out = Vec::with_capacity(z.m as usize + 1);
    let mut w = p.one();
    out.push(w.clone());
    for x in 0..z.m {
        let k = x + 1;
        let numer = p.one_minus(&a.shift(k))
            * p.one_minus(&(b * d).shift(k))
            * p.one_minus(&g.shift(k))
            * p.one_minus(&gd.shift(k))
            * p.one_minus(&gd.shift(2 * x + 3));
        let denom = p.one_minus(&QPower::q(k))
            * p.one_minus(&(gd / a).shift(k))
            * p.one_minus(&(g / b).shift(k))
            * p.one_minus(&d.shift(k))
            * p.one_minus(&gd.shift(2 * x + 1));
        if denom.is_zero() {
            return Err(Error::Domain(format!("weight ratio has a pole at x = {x}")));
        }
        w = w * numer / denom * &inv_abq;
        if w.is_sign_negative() || w.is_zero() {
            return Err(Error::InvalidParameter(format!(
                "weight is not positive at x = {k}; parameters outside the imaginary regime"
            )));
        }
        out.push(w.clone());
    }
    Ok(out)
}

fn norm_table(p: &QRacahParams, z: &ZoneParams) -> Result<Vec<BigReal>> {
    let (a, b, d, m) = (z.alpha, z.beta, z.delta, z.m);
    let mu = m as usize;
    let ab = a * b;
    let c = qpoch_qp(p, ab.shift(2), mu) * qpoch_qp(p, d.inv(), mu)
        / (qpoch_qp(p, (a / d).shift(1), mu) * qpoch_qp(p, b.shift(1), mu));
    let step = p.eval(&d.shift(-m));
    let mut h = c;
    let mut out = Vec::with_capacity(mu + 1);
    out.push(h.clone());
    for n in 1..=m {
        let numer = p.one_minus(&QPower::q(n))
            * p.one_minus(&ab.shift(m + 1 + n))
            * p.one_minus(&(a / d).shift(n))
            * p.one_minus(&b.shift(n))
            * p.one_minus(&ab.shift(2 * n - 1));
        let denom = p.one_minus(&a.shift(n))
            * p.one_minus(&ab.shift(n))
            * p.one_minus(&(b * d).shift(n))
            * p.one_minus(&QPower::q(-m + n - 1))
            * p.one_minus(&ab.shift(2 * n + 1));
        h = h * numer / denom * &step;
        if h.is_sign_negative() || h.is_zero() {
            return Err(Error::InvalidParameter(format!("norm h_{n} is not positive")));
        }
        out.push(h.clone());
    }
    Ok(out)
}

/// `w^{qR}(x)` for a zone, by the running product of term ratios.
pub fn weight_wqr(p: &QRacahParams, z: &ZoneParams, x: i64) -> Result<BigReal> {
    if x < 0 || x > z.m {
        return Err(Error::Domain(format!("x = {x} outside [0, {}]", z.m)));
    }
    Ok(weight_table(p, z)?.swap_remove(x as usize))
}

/// `h_n` for a zone.
pub fn hnorm(p: &QRacahParams, z: &ZoneParams, n: i64) -> Result<BigReal> {
    if n < 0 || n > z.m {
        return Err(Error::Domain(format!("n = {n} outside [0, {}]", z.m)));
    }
    Ok(norm_table(p, z)?.swap_remove(n as usize))
}

/// `μ(x) = q^{-x} + γδ q^{x+1}`.
pub fn mu(p: &QRacahParams, z: &ZoneParams, x: i64) -> BigReal {
    p.qpow(-x) + p.eval(&(z.gamma * z.delta).shift(x + 1))
}

/// `R_n(μ(x))` as a terminating ₄φ₃.
pub fn racah_r(p: &QRacahParams, z: &ZoneParams, n: i64, x: i64) -> Result<BigReal> {
    if n < 0 || n > z.m || x < 0 || x > z.m {
        return Err(Error::Domain(format!("(n, x) = ({n}, {x}) outside [0, {}]²", z.m)));
    }
    let (a, b, g, d) = (z.alpha, z.beta, z.gamma, z.delta);
    let num = [QPower::q(-n), (a * b).shift(n + 1), QPower::q(-x), (g * d).shift(x + 1)];
    let den = [a.shift(1), (b * d).shift(1), g.shift(1)];
    phi43_terminating(p, &num, &den, p.q())
}

/// Up-coefficient `B(x)` of the difference operator.
pub fn coeff_b(p: &QRacahParams, z: &ZoneParams, x: i64) -> BigReal {
    let (a, b, g, d) = (z.alpha, z.beta, z.gamma, z.delta);
    let gd = g * d;
    let k = x + 1;
    let numer = p.one_minus(&a.shift(k))
        * p.one_minus(&(b * d).shift(k))
        * p.one_minus(&g.shift(k))
        * p.one_minus(&gd.shift(k));
    numer / (p.one_minus(&gd.shift(2 * x + 1)) * p.one_minus(&gd.shift(2 * x + 2)))
}

/// Down-coefficient `D(x)` of the difference operator.
pub fn coeff_d(p: &QRacahParams, z: &ZoneParams, x: i64) -> BigReal {
    let (a, b, g, d) = (z.alpha, z.beta, z.gamma, z.delta);
    let gd = g * d;
    // (β − γq^x) = β(1 − γβ⁻¹q^x), (α − γδq^x) = α(1 − γδα⁻¹q^x)
    let numer = p.q().clone()
        * p.one_minus(&QPower::q(x))
        * p.one_minus(&d.shift(x))
        * p.eval(&b)
        * p.one_minus(&(g / b).shift(x))
        * p.eval(&a)
        * p.one_minus(&(gd / a).shift(x));
    numer / (p.one_minus(&gd.shift(2 * x)) * p.one_minus(&gd.shift(2 * x + 1)))
}

/// The shift `c = q^{-N+1}(1−q^{N−1})(q^{−T−N}−1)` that moves the top of the
/// particle spectrum of the difference operator to zero.
pub fn spectral_shift(hex: &HexagonParams, p: &QRacahParams) -> BigReal {
    let (tt, _, n) = hex.tsn();
    p.qpow(1 - n) * p.one_minus(&QPower::q(n - 1)) * (p.qpow(-tt - n) - p.one())
}

/// Symmetric tridiagonal matrix acting on a window of consecutive positions.
#[derive(Clone, Debug)]
pub struct TridiagonalOperator {
    pub diagonal: Vec<BigReal>,
    /// `offdiagonal[i]` couples index `i` and `i+1`.
    pub offdiagonal: Vec<BigReal>,
    /// Position of index 0.
    pub offset: i64,
}

impl TridiagonalOperator {
    pub fn len(&self) -> usize {
        self.diagonal.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diagonal.is_empty()
    }

    /// Apply to a vector indexed like the diagonal.
    pub fn apply(&self, g: &[BigReal]) -> Vec<BigReal> {
        let n = self.len();
        (0..n)
            .map(|i| {
                let mut v = Float::with_val(g[i].prec(), &self.diagonal[i] * &g[i]);
                if i + 1 < n {
                    v += Float::with_val(g[i].prec(), &self.offdiagonal[i] * &g[i + 1]);
                }
                if i > 0 {
                    v += Float::with_val(g[i].prec(), &self.offdiagonal[i - 1] * &g[i - 1]);
                }
                v
            })
            .collect()
    }

    /// Dense `f64` copy, for eigen-solvers in checks.
    pub fn to_dense_f64(&self) -> Vec<Vec<f64>> {
        let n = self.len();
        let mut m = vec![vec![0.0; n]; n];
        for i in 0..n {
            m[i][i] = self.diagonal[i].to_f64();
            if i + 1 < n {
                m[i][i + 1] = self.offdiagonal[i].to_f64();
                m[i + 1][i] = m[i][i + 1];
            }
        }
        m
    }
}

/// The difference operator `𝔇` on a slice, written in slice positions.
pub fn build_difference_operator(basis: &SliceBasis) -> Result<TridiagonalOperator> {
    let m = basis.m();
    let p = basis.params();
    let mut diagonal = Vec::with_capacity(m as usize + 1);
    let mut offdiagonal = Vec::with_capacity(m as usize);
    for xt in 0..=m {
        diagonal.push(-(basis.coeff_b(xt) + basis.coeff_d(xt)));
        if xt < m {
            let r = Float::with_val(p.bits(), basis.weight(xt)? / basis.weight(xt + 1)?);
            offdiagonal.push(sqrt_checked(r, "w(x)/w(x+1)")? * basis.coeff_b(xt));
        }
    }
    Ok(TridiagonalOperator { diagonal, offdiagonal, offset: basis.offset() })
}

/// Exponent of the prefactor `C_𝗑 = q^{N+T+(N−|2⌊L𝗑⌋−S−t|)⁺}`, given `⌊L𝗑⌋`.
pub fn scale_exponent(hex: &HexagonParams, t: i64, x_floor: i64) -> i64 {
    let (tt, s, n) = hex.tsn();
    n + tt + (n - (2 * x_floor - s - t).abs()).max(0)
}

/// `C_𝗑 [𝔇 + c·Id]` where `x_floor = ⌊L𝗑⌋`.
pub fn build_scaled_operator(basis: &SliceBasis, x_floor: i64) -> Result<TridiagonalOperator> {
    let p = basis.params();
    let mut op = build_difference_operator(basis)?;
    let c = spectral_shift(basis.hex(), p);
    let pref = p.qpow(scale_exponent(basis.hex(), basis.slice(), x_floor));
    for d in op.diagonal.iter_mut() {
        *d += &c;
        *d *= &pref;
    }
    for o in op.offdiagonal.iter_mut() {
        *o *= &pref;
    }
    Ok(op)
}

/// Same as [`build_scaled_operator`] with the scaled coordinate `𝗑` and scale `L`.
pub fn build_scaled_operator_at(basis: &SliceBasis, scale: i64, x: f64) -> Result<TridiagonalOperator> {
    build_scaled_operator(basis, (scale as f64 * x).floor() as i64)
}

/// A matrix of kernel values with lattice labels and a note on its origin.
#[derive(Clone, Debug)]
pub struct KernelMatrix<T> {
    /// `(slice, position)` of each row.
    pub row_labels: Vec<(i64, i64)>,
    pub col_labels: Vec<(i64, i64)>,
    pub entries: Vec<Vec<T>>,
    pub source: String,
}

/// Fixed-slice kernel `K_t(x,y) = Σ_{n<N} f_n(x) f_n(y)`.
pub fn slice_kernel(basis: &SliceBasis) -> Result<KernelMatrix<BigReal>> {
    let n_paths = basis.hex().paths;
    if n_paths > basis.m() + 1 {
        return Err(Error::Domain("more particles than sites".into()));
    }
    let positions: Vec<i64> = basis.positions().collect();
    let cols: Vec<Arc<Vec<BigReal>>> = positions.iter().map(|&x| basis.column(x)).collect::<Result<_>>()?;
    let bits = basis.params().bits();
    let entries = cols
        .iter()
        .map(|cx| {
            cols.iter()
                .map(|cy| {
                    let mut s = Float::new(bits);
                    for n in 0..n_paths as usize {
                        s += Float::with_val(bits, &cx[n] * &cy[n]);
                    }
                    s
                })
                .collect()
        })
        .collect();
    let labels: Vec<(i64, i64)> = positions.iter().map(|&x| (basis.slice(), x)).collect();
    Ok(KernelMatrix {
        row_labels: labels.clone(),
        col_labels: labels,
        entries,
        source: format!(
            "slice kernel t={} T={} S={} N={} {}",
            basis.slice(),
            basis.hex().horizon,
            basis.hex().shift,
            basis.hex().paths,
            basis.params().describe()
        ),
    })
}
