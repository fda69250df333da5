//! q-Pochhammer symbols, Jacobi theta, terminating basic hypergeometric
//! series and continuous q⁻¹-Hermite polynomials.

use std::ops::{Div, Mul};

use num_rational::Rational64;
use num_traits::Zero;
use rug::ops::Pow;
use rug::Float;

use crate::error::{Error, Result};
use crate::num::{BigComplex, BigReal, QRacahParams};

/// Exact monomial `sign · |κ|^kappa_exp · q^q_exp`.
///
/// Zone parameters and the factors of the weights are all of this form;
/// keeping the exponents exact lets us detect factors `1 − 1 = 0` without
/// rounding.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct QPower {
    pub sign: i8,
    pub kappa_exp: i32,
    pub q_exp: Rational64,
}

impl QPower {
    pub fn one() -> Self {
        QPower { sign: 1, kappa_exp: 0, q_exp: Rational64::zero() }
    }

    /// `q^e`.
    pub fn q(e: i64) -> Self {
        QPower { sign: 1, kappa_exp: 0, q_exp: Rational64::from_integer(e) }
    }

    /// `q^e` with rational `e`.
    pub fn q_rat(e: Rational64) -> Self {
        QPower { sign: 1, kappa_exp: 0, q_exp: e }
    }

    /// `κ² = −|κ|²`.
    pub fn kappa_sq() -> Self {
        QPower { sign: -1, kappa_exp: 2, q_exp: Rational64::zero() }
    }

    /// `κ²·q^e`.
    pub fn kappa_sq_q(e: i64) -> Self {
        QPower::kappa_sq() * QPower::q(e)
    }

    pub fn is_one(&self) -> bool {
        self.sign == 1 && self.kappa_exp == 0 && self.q_exp.is_zero()
    }

    pub fn inv(self) -> Self {
        QPower { sign: self.sign, kappa_exp: -self.kappa_exp, q_exp: -self.q_exp }
    }

    pub fn powi(self, k: i32) -> Self {
        QPower {
            sign: if k % 2 == 0 { 1 } else { self.sign },
            kappa_exp: self.kappa_exp * k,
            q_exp: self.q_exp * Rational64::from_integer(k as i64),
        }
    }

    /// Multiply by `q^k`.
    pub fn shift(self, k: i64) -> Self {
        QPower { q_exp: self.q_exp + Rational64::from_integer(k), ..self }
    }

    pub fn neg(self) -> Self {
        QPower { sign: -self.sign, ..self }
    }
}

impl Mul for QPower {
    type Output = QPower;
    fn mul(self, o: QPower) -> QPower {
        QPower { sign: self.sign * o.sign, kappa_exp: self.kappa_exp + o.kappa_exp, q_exp: self.q_exp + o.q_exp }
    }
}

impl Div for QPower {
    type Output = QPower;
    fn div(self, o: QPower) -> QPower {
        self * o.inv()
    }
}

/// Finite q-Pochhammer symbol `(a;q)_k = Π_{j<k} (1 − a q^j)`.
pub fn qpoch_finite(a: &BigReal, q: &BigReal, k: usize) -> BigReal {
    let prec = a.prec().max(q.prec());
    let mut out = Float::with_val(prec, 1);
    let mut term = Float::with_val(prec, a);
    for _ in 0..k {
        out *= Float::with_val(prec, 1 - &term);
        term *= q;
    }
    out
}

/// `(a;q)_k` for a monomial `a`, with exact zero factors.
pub fn qpoch_qp(p: &QRacahParams, a: QPower, k: usize) -> BigReal {
    let mut out = p.one();
    let mut cur = a;
    let mut val = p.eval(&a);
    for _ in 0..k {
        if cur.is_one() {
            return p.zero();
        }
        out *= Float::with_val(p.bits(), 1 - &val);
        cur = cur.shift(1);
        val *= p.q();
    }
    out
}

/// `(a;q^{-1})_k` for a monomial `a`, with exact zero factors.
pub fn qpoch_qp_inv(p: &QRacahParams, a: QPower, k: usize) -> BigReal {
    let mut out = p.one();
    let mut cur = a;
    for _ in 0..k {
        out *= p.one_minus(&cur);
        cur = cur.shift(-1);
    }
    out
}

/// Number of factors needed so that the tail of `(a;q)_∞` is below `2^{-bits}`.
///
/// Uses `|log(1−aq^k)| ≤ 2|a|q^k` once `|a|q^k ≤ 1/2`; the tail of the
/// logarithm is then at most `2|a|q^k/(1−q)`.
fn infinite_cutoff(a_abs: f64, q: f64, bits: u32) -> usize {
    let ln_q = q.ln();
    let ln2 = std::f64::consts::LN_2;
    let target = -(bits as f64) * ln2 - 2.0 - (2.0 / (1.0 - q)).ln();
    if a_abs == 0.0 {
        return 0;
    }
    let need_half = ((0.5f64).ln() - a_abs.ln()) / ln_q;
    let need_tail = (target - a_abs.ln()) / ln_q;
    need_half.max(need_tail).max(0.0).ceil() as usize + 1
}

/// Infinite q-Pochhammer symbol `(a;q)_∞`.
pub fn qpoch_infinite(a: &BigReal, q: &BigReal) -> Result<BigReal> {
    if *q >= 1 || *q <= 0 {
        return Err(Error::InvalidParameter("(a;q)_inf needs 0 < q < 1".into()));
    }
    let prec = a.prec().max(q.prec());
    let k = infinite_cutoff(a.to_f64().abs(), q.to_f64(), prec);
    Ok(qpoch_finite(a, q, k))
}

fn qpoch_infinite_complex(a: &BigComplex, q: &BigReal) -> BigComplex {
    let prec = a.prec().max(q.prec());
    let k = infinite_cutoff(a.abs().to_f64(), q.to_f64(), prec);
    let mut out = BigComplex::real(Float::with_val(prec, 1));
    let mut term = a.clone();
    let one = BigComplex::real(Float::with_val(prec, 1));
    for _ in 0..k {
        out = &out * &(&one - &term);
        term = term.scale(q);
    }
    out
}

/// Jacobi theta function `θ_q(z) = (z;q)_∞ (q/z;q)_∞`.
pub fn theta(q: &BigReal, z: &BigReal) -> Result<BigReal> {
    if z.is_zero() {
        return Err(Error::Domain("theta(q, 0) is undefined".into()));
    }
    let qz = Float::with_val(z.prec(), q / z);
    Ok(qpoch_infinite(z, q)? * qpoch_infinite(&qz, q)?)
}

/// Complex-argument theta function.
pub fn theta_complex(q: &BigReal, z: &BigComplex) -> Result<BigComplex> {
    if z.is_zero() {
        return Err(Error::Domain("theta(q, 0) is undefined".into()));
    }
    if *q >= 1 || *q <= 0 {
        return Err(Error::InvalidParameter("theta needs 0 < q < 1".into()));
    }
    let qz = z.recip().scale(q);
    Ok(&qpoch_infinite_complex(z, q) * &qpoch_infinite_complex(&qz, q))
}

/// Theta function through the triple product series
/// `Σ_m (−1)^m q^{m(m−1)/2} z^m / (q;q)_∞`.
pub fn theta_series(q: &BigReal, z: &BigReal) -> Result<BigReal> {
    if z.is_zero() {
        return Err(Error::Domain("theta(q, 0) is undefined".into()));
    }
    let prec = z.prec().max(q.prec());
    let qq = qpoch_infinite(q, q)?;
    let ln_q = q.to_f64().ln();
    let ln_z = z.to_f64().abs().ln();
    let target = -(prec as f64) * std::f64::consts::LN_2 - 10.0;
    let mut sum = Float::new(prec);
    for sign in [1i64, -1] {
        let mut m: i64 = if sign == 1 { 0 } else { -1 };
        loop {
            let mf = m as f64;
            let log_mag = mf * (mf - 1.0) / 2.0 * ln_q + mf * ln_z;
            let qe = Float::with_val(prec, Pow::pow(q, (m * (m - 1) / 2) as i32));
            let zm = Float::with_val(prec, Pow::pow(z, m as i32));
            let mut term = qe * zm;
            if m.rem_euclid(2) == 1 {
                term = -term;
            }
            sum += term;
            // the terms are log-concave in m, so once past the peak and small we stop
            let past_peak = (sign == 1 && mf > 0.5 - ln_z / ln_q) || (sign == -1 && mf < 0.5 - ln_z / ln_q);
            if past_peak && log_mag < target {
                break;
            }
            m += sign;
        }
    }
    Ok(sum / qq)
}

/// Terminating ₄φ₃ with argument `z`:
/// `Σ_k (a₁,a₂,a₃,a₄;q)_k / (b₁,b₂,b₃,q;q)_k · z^k`.
///
/// The first numerator must be `q^{-n}` for an integer `n ≥ 0`. Factors are
/// carried as monomials so that vanishing factors are exactly zero.
pub fn phi43_terminating(p: &QRacahParams, num: &[QPower; 4], den: &[QPower; 3], z: &BigReal) -> Result<BigReal> {
    let lead = num[0];
    if lead.sign != 1 || lead.kappa_exp != 0 || !lead.q_exp.is_integer() || lead.q_exp > Rational64::zero() {
        return Err(Error::Domain(format!("4phi3 is not terminating: first numerator is {lead:?}")));
    }
    let n = (-lead.q_exp).to_integer() as usize;
    let mut cur_num = *num;
    let mut cur_den = *den;
    let mut val_num: Vec<BigReal> = num.iter().map(|a| p.eval(a)).collect();
    let mut val_den: Vec<BigReal> = den.iter().map(|b| p.eval(b)).collect();
    let mut qk1 = p.q().clone();
    let mut term = p.one();
    let mut sum = p.one();
    for _ in 0..n {
        let mut numer = Float::with_val(p.bits(), z);
        let mut zero = false;
        for (c, v) in cur_num.iter().zip(&val_num) {
            if c.is_one() {
                zero = true;
                break;
            }
            numer *= Float::with_val(p.bits(), 1 - v);
        }
        if zero {
            break;
        }
        let mut denom = Float::with_val(p.bits(), 1 - &qk1);
        for (c, v) in cur_den.iter().zip(&val_den) {
            if c.is_one() {
                return Err(Error::Domain(format!("4phi3 denominator parameter {c:?} hits 1")));
            }
            denom *= Float::with_val(p.bits(), 1 - v);
        }
        term *= numer;
        term /= denom;
        sum += &term;
        for (c, v) in cur_num.iter_mut().zip(val_num.iter_mut()) {
            *c = c.shift(1);
            *v *= p.q();
        }
        for (c, v) in cur_den.iter_mut().zip(val_den.iter_mut()) {
            *c = c.shift(1);
            *v *= p.q();
        }
        qk1 *= p.q();
    }
    Ok(sum)
}

/// `₂φ₀(q^n, 0; –; q^{-1}; λ² q^{-n})`, the series behind `H_n(λ|q^{-1})`.
///
/// Only `λ²` enters, so this also covers imaginary `λ` (negative `λ²`).
pub fn hermite_phi20(n: usize, lam_sq: &BigReal, q: &BigReal) -> BigReal {
    let prec = lam_sq.prec().max(q.prec());
    let qn = Float::with_val(prec, Pow::pow(q, n as i32));
    let z = Float::with_val(prec, lam_sq / &qn);
    let qinv = Float::with_val(prec, q.recip_ref());
    let mut a = qn;
    let mut qinv_k = qinv.clone();
    // q^{k(k-1)/2}: grows by q^k at step k
    let mut qk = Float::with_val(prec, 1);
    let mut term = Float::with_val(prec, 1);
    let mut sum = Float::with_val(prec, 1);
    for _ in 0..n {
        // term_{k+1}/term_k = (1 − q^n q^{-k}) / (1 − q^{-(k+1)}) · (−1) · q^k · z
        let numer = Float::with_val(prec, 1 - &a);
        let denom = Float::with_val(prec, 1 - &qinv_k);
        term = -(term * numer / denom * &qk * &z);
        sum += &term;
        a *= &qinv;
        qinv_k *= &qinv;
        qk *= q;
    }
    sum
}

/// Continuous q⁻¹-Hermite polynomial `H_n(λ | q^{-1}) = λ^{-n} ₂φ₀(…; λ²q^{-n})`.
pub fn cont_qinv_hermite(n: usize, lam: &BigReal, q: &BigReal) -> Result<BigReal> {
    if lam.is_zero() {
        return Err(Error::Domain("continuous q^-1-Hermite needs lambda != 0".into()));
    }
    let lam_sq = Float::with_val(lam.prec(), lam.square_ref());
    let s = hermite_phi20(n, &lam_sq, q);
    let lam_n = Float::with_val(lam.prec(), Pow::pow(lam, n as i32));
    Ok(s / lam_n)
}

/// The q-binomial coefficient `(q;q)_n / ((q;q)_k (q;q)_{n−k})`.
pub fn qbinomial(n: usize, k: usize, q: &BigReal) -> BigReal {
    if k > n {
        return Float::new(q.prec());
    }
    qpoch_finite(q, q, n) / (qpoch_finite(q, q, k) * qpoch_finite(q, q, n - k))
}

/// Powers `q^0, …, q^{len-1}` as a table.
pub fn power_table(q: &BigReal, len: usize) -> Vec<BigReal> {
    let mut out = Vec::with_capacity(len);
    let mut cur = Float::with_val(q.prec(), 1);
    for _ in 0..len {
        out.push(cur.clone());
        cur *= q;
    }
    out
}

impl QPower {
    /// Evaluate at the given parameters.
    pub fn value(&self, p: &QRacahParams) -> BigReal {
        p.eval(self)
    }
}
