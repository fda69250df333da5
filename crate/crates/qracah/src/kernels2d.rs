//! Two-dimensional correlation kernel, inter-slice operators, Kasteleyn
//! matrix and its inverse, and the pre-limit barcode kernel.
//!
//! Only slices of the first parameter zone (`0 ≤ t ≤ min(S−1, T−S−1)`) are
//! supported. Phases are powers of `i` tracked as integers mod 4.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use rayon::prelude::*;
use rug::Float;

use crate::error::{Error, Result};
use crate::hexagon::HexagonParams;
use crate::num::{det_complex, det_real, sqrt_checked, BigComplex, BigReal, QRacahParams};
use crate::ope::{KernelMatrix, SliceBasis};
use crate::qspecial::{qpoch_qp, qpoch_qp_inv, QPower};

/// `𝗐(j) = κq^{j−(S+1)/2} − 1/(κq^{j−(S+1)/2})`, with `j = two_j/2`.
///
/// Purely imaginary; returned as the positive imaginary part.
pub fn w_lozenge_im(p: &QRacahParams, shift: i64, two_j: i64) -> BigReal {
    let v = p.kappa_abs().clone() * p.qpow_half(two_j - shift - 1);
    let inv = Float::with_val(p.bits(), v.recip_ref());
    v + inv
}

/// `𝗐(j)` as a complex number.
pub fn w_lozenge(p: &QRacahParams, shift: i64, two_j: i64) -> BigComplex {
    BigComplex::from_phase(1, w_lozenge_im(p, shift, two_j))
}

/// The three lozenge types, each attached to its white triangle `(t, y)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Lozenge {
    /// Hole at `(t, y)`: white and black triangle on the same slice.
    Horizontal { t: i64, y: i64 },
    /// Flat path step from `(t, y)` to `(t+1, y)`.
    Square { t: i64, y: i64 },
    /// Up step from `(t, y)` to `(t+1, y+1)`.
    Vertical { t: i64, y: i64 },
}

impl Lozenge {
    pub fn white(&self) -> (i64, i64) {
        match *self {
            Lozenge::Horizontal { t, y } | Lozenge::Square { t, y } | Lozenge::Vertical { t, y } => (t, y),
        }
    }

    pub fn black(&self) -> (i64, i64) {
        match *self {
            Lozenge::Horizontal { t, y } => (t, y),
            Lozenge::Square { t, y } => (t + 1, y),
            Lozenge::Vertical { t, y } => (t + 1, y + 1),
        }
    }
}

/// Inter-slice operator `(𝔘_t f)(x) = u₁(x−1) f(x−1) + u₀(x) f(x)` mapping
/// functions on slice `t` to functions on slice `t+1`.
#[derive(Clone, Debug)]
pub struct InterSliceOp {
    pub t: i64,
    /// `u₀(x)` for `x` on slice `t` (indexed from the slice start).
    pub u0: Vec<BigReal>,
    /// `u₁(x)` for `x` on slice `t`.
    pub u1: Vec<BigReal>,
}

impl InterSliceOp {
    /// Apply to values `f(x)`, `x = 0..len`, on slice `t`; the result lives on
    /// slice `t+1`, one site longer.
    pub fn apply(&self, f: &[BigReal]) -> Vec<BigReal> {
        let n = f.len();
        (0..=n)
            .map(|x| {
                let mut v = Float::new(f.first().map_or(64, |a| a.prec()));
                if x < n {
                    v += Float::with_val(v.prec(), &self.u0[x] * &f[x]);
                }
                if x > 0 {
                    v += Float::with_val(v.prec(), &self.u1[x - 1] * &f[x - 1]);
                }
                v
            })
            .collect()
    }
}

/// Two-dimensional kernel and inverse Kasteleyn matrix on a hexagon.
#[derive(Debug)]
pub struct TwoDimKernel {
    hex: HexagonParams,
    params: QRacahParams,
    bases: Mutex<HashMap<i64, Arc<SliceBasis>>>,
    ctilde: Mutex<HashMap<(i64, i64), BigReal>>,
}

impl TwoDimKernel {
    pub fn new(hex: HexagonParams, params: &QRacahParams) -> Self {
        TwoDimKernel {
            hex,
            params: params.clone(),
            bases: Mutex::new(HashMap::new()),
            ctilde: Mutex::new(HashMap::new()),
        }
    }

    pub fn hex(&self) -> &HexagonParams {
        &self.hex
    }

    pub fn params(&self) -> &QRacahParams {
        &self.params
    }

    fn check_zone(&self, t: i64) -> Result<()> {
        if !self.hex.in_first_zone(t) {
            return Err(Error::OutOfZone(format!(
                "slice {t} is outside the first zone [0, {}]",
                self.hex.first_zone_end()
            )));
        }
        Ok(())
    }

    fn check_point(&self, t: i64, x: i64) -> Result<()> {
        self.check_zone(t)?;
        let (lo, hi) = self.hex.slice_range(t)?;
        if x < lo || x > hi {
            return Err(Error::Domain(format!("({t}, {x}) is not a lattice point of the hexagon")));
        }
        Ok(())
    }

    /// Orthonormal basis on slice `t` (cached).
    pub fn basis(&self, t: i64) -> Result<Arc<SliceBasis>> {
        self.check_zone(t)?;
        if let Some(b) = self.bases.lock().expect("cache poisoned").get(&t) {
            return Ok(b.clone());
        }
        let b = Arc::new(SliceBasis::new(self.hex, &self.params, t)?);
        self.bases.lock().expect("cache poisoned").insert(t, b.clone());
        Ok(b)
    }

    /// `C̃_n^t = √((q^{n−t−N}−1)(1−q^{T+N−t−n−1}))`, zero exactly at `n = N+t`.
    pub fn c_tilde(&self, n: i64, t: i64) -> Result<BigReal> {
        if let Some(v) = self.ctilde.lock().expect("cache poisoned").get(&(n, t)) {
            return Ok(v.clone());
        }
        let (tt, _, nn) = self.hex.tsn();
        if n < 0 || n > nn + t {
            return Err(Error::Domain(format!("C̃ needs 0 ≤ n ≤ N+t, got n={n}, t={t}")));
        }
        let p = &self.params;
        let a = -p.one_minus(&QPower::q(n - t - nn));
        let b = p.one_minus(&QPower::q(tt + nn - t - n - 1));
        let v = sqrt_checked(a * b, "C̃²")?;
        self.ctilde.lock().expect("cache poisoned").insert((n, t), v.clone());
        Ok(v)
    }

    /// `K̃(s,x;t,y)`.
    pub fn kernel(&self, s: i64, x: i64, t: i64, y: i64) -> Result<BigReal> {
        self.check_point(s, x)?;
        self.check_point(t, y)?;
        let nn = self.hex.paths;
        let p = &self.params;
        let fs = self.basis(s)?.column(x)?;
        let ft = self.basis(t)?.column(y)?;
        let mut sum = p.zero();
        if s >= t {
            for n in 0..nn {
                let mut prod = p.one();
                for j in t..s {
                    prod *= self.c_tilde(n, j)?;
                }
                let term = Float::with_val(p.bits(), &fs[n as usize] * &ft[n as usize]) / prod;
                sum += term;
            }
        } else {
            for n in nn..nn + s {
                let mut prod = p.one();
                for j in s..t {
                    prod *= self.c_tilde(n, j)?;
                }
                sum -= prod * &fs[n as usize] * &ft[n as usize];
            }
        }
        Ok(sum)
    }

    /// Gauge-transformed weight `w̃_t(x)` (positive).
    pub fn w_tilde(&self, t: i64, x: i64) -> Result<BigReal> {
        self.check_point(t, x)?;
        let (tt, s, nn) = self.hex.tsn();
        let p = &self.params;
        let mut num = p.qpow(x * (2 * nn + tt - 1)) * p.one_minus(&QPower::kappa_sq_q(2 * x - t - s + 1));
        if (t + s) % 2 != 0 {
            num = -num;
        }
        let qinv = QPower::q(-1);
        let den = qpoch_qp(p, QPower::q(1), x as usize)
            * qpoch_qp(p, QPower::q(1), (tt - s - t + x) as usize)
            * qpoch_qp_inv(p, qinv, (t + nn - x - 1) as usize)
            * qpoch_qp_inv(p, qinv, (s + nn - x - 1) as usize)
            * qpoch_qp(p, QPower::kappa_sq_q(x - tt + 1), (tt + nn - t) as usize)
            * qpoch_qp(p, QPower::kappa_sq_q(x - t - s + 1), (nn + t) as usize);
        let v = num / den;
        if v.is_sign_negative() || v.is_zero() {
            return Err(Error::NegativeRadicand {
                what: format!("w̃({t},{x})"), value: crate::num::format_sci(&v, 12)
            });
        }
        Ok(v)
    }

    /// `G(t,x) = i^{phase} · r`, returned as `(phase, r)`.
    pub fn g_factor(&self, t: i64, x: i64) -> Result<(i64, BigReal)> {
        self.check_point(t, x)?;
        let (tt, s, nn) = self.hex.tsn();
        let p = &self.params;
        // exponent x(T+N−t−1) + t(S−1)/2 + t(t+1)/4, kept exact
        let e = num_rational::Rational64::new(4 * x * (tt + nn - t - 1) + 2 * t * (s - 1) + t * (t + 1), 4);
        let mut r = p.qpow_rat(e) * p.kappa_pow(-t) * p.one_minus(&QPower::kappa_sq_q(2 * x - t - s + 1));
        if x.rem_euclid(2) == 1 {
            r = -r;
        }
        let den = qpoch_qp_inv(p, QPower::q(-1), (s + nn - 1 - x) as usize)
            * qpoch_qp(p, QPower::q(1), (tt - s + x - t) as usize)
            * qpoch_qp(p, QPower::kappa_sq_q(x - tt + 1), (tt + nn - t) as usize);
        let r = r / den / self.w_tilde(t, x)?.sqrt();
        Ok((-t, r))
    }

    /// `Kast⁻¹(s,x;t,y)` for black triangle `(s,x)` and white triangle `(t,y)`.
    pub fn kast_inv(&self, s: i64, x: i64, t: i64, y: i64) -> Result<BigComplex> {
        let (ps, rs) = self.g_factor(s, x)?;
        let (pt, rt) = self.g_factor(t, y)?;
        let v = w_lozenge_im(&self.params, self.hex.shift, 2 * x - s + 2);
        let mut body = -self.kernel(s, x, t, y)?;
        if s == t && x == y {
            body += 1;
        }
        let r = rs / rt / v * body;
        // 1/𝗐 = 1/(i v) = i³/v
        Ok(BigComplex::from_phase(ps - pt + 3, r))
    }

    /// Kasteleyn matrix entry of a lozenge.
    pub fn kasteleyn_entry(&self, l: &Lozenge) -> BigComplex {
        match *l {
            Lozenge::Horizontal { t, y } => w_lozenge(&self.params, self.hex.shift, 2 * y - t + 2),
            _ => BigComplex::one(self.params.prec()),
        }
    }

    /// Probability that a random tiling contains all the given lozenges:
    /// `Π Kast(w_i,b_i) · det[Kast⁻¹(b_i; w_j)]`.
    pub fn lozenge_probability(&self, lozenges: &[Lozenge]) -> Result<BigComplex> {
        let prec = self.params.prec();
        let mut weight = BigComplex::one(prec);
        for l in lozenges {
            weight = &weight * &self.kasteleyn_entry(l);
        }
        let mut m = Vec::with_capacity(lozenges.len());
        for bi in lozenges {
            let (s, x) = bi.black();
            let row: Vec<BigComplex> = lozenges
                .iter()
                .map(|wj| {
                    let (t, y) = wj.white();
                    self.kast_inv(s, x, t, y)
                })
                .collect::<Result<_>>()?;
            m.push(row);
        }
        Ok(&weight * &det_complex(m, prec))
    }

    /// Gauge factor `λ(t)` up to a slice-independent constant.
    pub fn gauge_lambda(&self, t: i64) -> BigReal {
        let (tt, s, nn) = self.hex.tsn();
        let p = &self.params;
        let mut v = p.qpow_half(t * (2 * nn + t - 1))
            * qpoch_qp_inv(p, QPower::kappa_sq_q(nn), t as usize)
            * qpoch_qp_inv(p, QPower::q(tt - s), t as usize)
            / (qpoch_qp(p, QPower::q(nn), t as usize) * qpoch_qp_inv(p, QPower::kappa_sq_q(1 - s), t as usize));
        if t % 2 != 0 {
            v = -v;
        }
        v
    }

    /// Coefficients `a₀^t(x)` and `a₁^t(x)` of the inter-slice recursion.
    pub fn inter_slice_coeffs(&self, t: i64, x: i64) -> (BigReal, BigReal) {
        let (tt, s, nn) = self.hex.tsn();
        let p = &self.params;
        let den = p.one_minus(&QPower::kappa_sq_q(2 * x - t - s + 1));
        let a0 = p.one_minus(&QPower::q(x + tt - t - s)) * p.one_minus(&QPower::kappa_sq_q(x + nn - t)) / &den;
        let a1 = p.qpow(tt + nn - 1 - t)
            * -p.one_minus(&QPower::q(x - s - nn + 1))
            * p.one_minus(&QPower::kappa_sq_q(x - tt + 1))
            / den;
        (a0, a1)
    }

    /// The operator `𝔘_t` in orthonormal coordinates.
    pub fn inter_slice_op(&self, t: i64) -> Result<InterSliceOp> {
        self.check_zone(t)?;
        self.check_zone(t + 1)?;
        let (lo, hi) = self.hex.slice_range(t)?;
        let mut u0 = Vec::new();
        let mut u1 = Vec::new();
        for x in lo..=hi {
            let (a0, a1) = self.inter_slice_coeffs(t, x);
            let wt = self.w_tilde(t, x)?;
            let r0 = Float::with_val(self.params.bits(), &wt / self.w_tilde(t + 1, x)?);
            let r1 = Float::with_val(self.params.bits(), &wt / self.w_tilde(t + 1, x + 1)?);
            u0.push(sqrt_checked(r0, "w̃_t/w̃_{t+1}")? * a0);
            u1.push(sqrt_checked(r1, "w̃_t/w̃_{t+1}")? * a1);
        }
        Ok(InterSliceOp { t, u0, u1 })
    }

    /// Kernel matrix `K̃(s_i,x_i; t_j,y_j)` over a list of points.
    pub fn kernel_matrix(&self, points: &[(i64, i64)]) -> Result<KernelMatrix<BigReal>> {
        let entries: Vec<Vec<BigReal>> = points
            .par_iter()
            .map(|&(s, x)| points.iter().map(|&(t, y)| self.kernel(s, x, t, y)).collect())
            .collect::<Result<_>>()?;
        Ok(KernelMatrix {
            row_labels: points.to_vec(),
            col_labels: points.to_vec(),
            entries,
            source: format!(
                "two-dimensional kernel T={} S={} N={} {}",
                self.hex.horizon,
                self.hex.shift,
                self.hex.paths,
                self.params.describe()
            ),
        })
    }
}

/// Barcode kernel along the horizontal line through `(T₀, X₀)`:
/// `Kbar(s,t) = Kast⁻¹(T₀+s, X₀; T₀+t−1, X₀)`, optionally conjugated by
/// `i^{t−s} q^{c(s−t)}`.
#[derive(Debug)]
pub struct BarcodeKernel {
    kernel: TwoDimKernel,
    pub t0: i64,
    pub x0: i64,
    /// Exponent `c` of the conjugation `q^{c(s−t)}`.
    pub conj_exp: i64,
}

impl BarcodeKernel {
    pub fn new(hex: HexagonParams, params: &QRacahParams, t0: i64, x0: i64, conj_exp: i64) -> Self {
        BarcodeKernel { kernel: TwoDimKernel::new(hex, params), t0, x0, conj_exp }
    }

    /// Canonical family `T = 8L`, `N = S = 4L`, probe point `(2L, 3L)`,
    /// conjugation exponent `2L`.
    pub fn canonical(scale: i64, params: &QRacahParams) -> Result<Self> {
        let hex = HexagonParams::canonical(scale)?;
        Ok(Self::new(hex, params, 2 * scale, 3 * scale, 2 * scale))
    }

    pub fn two_dim(&self) -> &TwoDimKernel {
        &self.kernel
    }

    /// Unconjugated `Kbar(s,t)`.
    pub fn raw(&self, s: i64, t: i64) -> Result<BigComplex> {
        self.kernel.kast_inv(self.t0 + s, self.x0, self.t0 + t - 1, self.x0)
    }

    /// Conjugated kernel `K̂(s,t) = i^{t−s} q^{c(s−t)} Kbar(s,t)`, which is real.
    pub fn conjugated(&self, s: i64, t: i64) -> Result<BigReal> {
        let raw = self.raw(s, t)?;
        let p = self.kernel.params();
        let z = &BigComplex::from_phase(t - s, p.qpow(self.conj_exp * (s - t))) * &raw;
        let tol = z.re.clone().abs().max(&p.one()) * p.prec().ten_pow_neg(p.prec().digits() as i32 - 20);
        if z.im.clone().abs() > tol {
            return Err(Error::Domain(format!("conjugated barcode kernel at ({s},{t}) is not real: {z}")));
        }
        Ok(z.re)
    }

    /// `det[K̂(t_i,t_j)]`: the probability of square lozenges at all `t_i`.
    ///
    /// Uses the conjugated kernel; conjugation by a diagonal matrix leaves
    /// the determinant unchanged.
    pub fn square_lozenge_probability(&self, ts: &[i64]) -> Result<BigReal> {
        let mut sorted = ts.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != ts.len() {
            return Err(Error::Domain("square lozenge positions must be distinct".into()));
        }
        let m: Vec<Vec<BigReal>> =
            ts.par_iter().map(|&a| ts.iter().map(|&b| self.conjugated(a, b)).collect()).collect::<Result<_>>()?;
        Ok(det_real(m, self.kernel.params().prec()))
    }
}

/// `K̂_{(L)}(s,t)` on the canonical hexagon of scale `L`.
pub fn prelimit_barcode(scale: i64, params: &QRacahParams, s: i64, t: i64) -> Result<BigReal> {
    BarcodeKernel::canonical(scale, params)?.conjugated(s, t)
}

/// Starting precision for barcode evaluation on a hexagon with `N` paths.
///
/// The terminating series behind the basis functions loses roughly
/// `N²·log₁₀(1/q)` digits to cancellation; the adaptive driver corrects an
/// underestimate.
pub fn barcode_start_digits(hex: &HexagonParams, params: &QRacahParams) -> u32 {
    let lq = -params.q().to_f64().log10();
    let n = hex.paths as f64;
    (0.75 * n * n * lq) as u32 + 60
}

/// Conjugated barcode kernel entries at precision chosen so that two
/// independent precisions agree to `target` significant digits.
pub fn barcode_entries_adaptive(
    hex: HexagonParams,
    params: &QRacahParams,
    t0: i64,
    x0: i64,
    conj_exp: i64,
    pairs: &[(i64, i64)],
    target: u32,
) -> Result<(Vec<BigReal>, crate::num::Precision)> {
    let start = barcode_start_digits(&hex, params).max(params.prec().digits());
    crate::num::adaptive_eval(params, start, target, |p| {
        let k = BarcodeKernel::new(hex, p, t0, x0, conj_exp);
        pairs.par_iter().map(|&(s, t)| k.conjugated(s, t)).collect()
    })
}

/// `K̂_{(L)}(s,t)` for each pair, with adaptive precision.
pub fn prelimit_barcode_adaptive(
    scale: i64,
    params: &QRacahParams,
    pairs: &[(i64, i64)],
    target: u32,
) -> Result<(Vec<BigReal>, crate::num::Precision)> {
    let hex = HexagonParams::canonical(scale)?;
    barcode_entries_adaptive(hex, params, 2 * scale, 3 * scale, 2 * scale, pairs, target)
}
