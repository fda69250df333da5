//! Arbitrary precision scalars and the global parameters `(q, |κ|)`.
//!
//! Reals are MPFR floats, whose exponent range is far wider than anything a
//! hexagon of desk-scale size produces. Complex values only ever arise as a
//! real magnitude times a power of `i`, but a small general complex type is
//! kept for determinants and checks.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_rational::Rational64;
use rug::ops::Pow;
use rug::{Float, Rational};

use crate::error::{Error, Result};
use crate::qspecial::QPower;

/// Arbitrary precision real number.
pub type BigReal = Float;

const GUARD_BITS: u32 = 64;

/// Working precision expressed in decimal digits.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Precision {
    digits: u32,
}

impl Precision {
    pub const DEFAULT_DIGITS: u32 = 120;

    pub fn new(digits: u32) -> Self {
        Precision { digits: digits.max(10) }
    }

    pub fn digits(self) -> u32 {
        self.digits
    }

    /// Mantissa bits, including guard bits.
    pub fn bits(self) -> u32 {
        (self.digits as f64 * std::f64::consts::LOG2_10).ceil() as u32 + GUARD_BITS
    }

    pub fn doubled(self) -> Self {
        Precision::new(self.digits * 2)
    }

    pub fn zero(self) -> BigReal {
        Float::new(self.bits())
    }

    pub fn one(self) -> BigReal {
        Float::with_val(self.bits(), 1)
    }

    pub fn int(self, v: i64) -> BigReal {
        Float::with_val(self.bits(), v)
    }

    pub fn f64(self, v: f64) -> BigReal {
        Float::with_val(self.bits(), v)
    }

    pub fn rational(self, r: &Rational) -> BigReal {
        Float::with_val(self.bits(), r)
    }

    pub fn ratio(self, r: Rational64) -> BigReal {
        Float::with_val(self.bits(), *r.numer()) / Float::with_val(self.bits(), *r.denom())
    }

    /// `10^{-digits}`: the nominal relative accuracy.
    pub fn epsilon(self) -> BigReal {
        Float::with_val(self.bits(), 10).pow(-(self.digits as i32))
    }

    /// `10^{-e}` at this precision.
    pub fn ten_pow_neg(self, e: i32) -> BigReal {
        Float::with_val(self.bits(), 10).pow(-e)
    }
}

impl Default for Precision {
    fn default() -> Self {
        Precision::new(Self::DEFAULT_DIGITS)
    }
}

/// Square root with a runtime positivity check on the radicand.
pub fn sqrt_checked(x: BigReal, what: &str) -> Result<BigReal> {
    if x.is_sign_negative() && !x.is_zero() {
        return Err(Error::NegativeRadicand { what: what.to_string(), value: format_sci(&x, 12) });
    }
    Ok(x.sqrt())
}

/// Parse a rational literal: `2/3`, `0.7`, `4.3`, `-1.5e-2`, `7`.
pub fn parse_rational(s: &str) -> Result<Rational> {
    let s = s.trim();
    if s.is_empty() {
        return Err(Error::Parse("empty number".into()));
    }
    if let Some((a, b)) = s.split_once('/') {
        let num = parse_rational(a)?;
        let den = parse_rational(b)?;
        if den == 0 {
            return Err(Error::Parse(format!("zero denominator in {s}")));
        }
        return Ok(num / den);
    }
    let (mantissa, exp) = match s.find(['e', 'E']) {
        Some(pos) => {
            let e: i32 = s[pos + 1..].parse().map_err(|_| Error::Parse(format!("bad exponent in {s}")))?;
            (&s[..pos], e)
        }
        None => (s, 0),
    };
    let (neg, body) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = body.split_once('.').unwrap_or((body, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(Error::Parse(format!("no digits in {s}")));
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return Err(Error::Parse(format!("not a number: {s}")));
    }
    let digits = format!("{int_part}{frac_part}");
    let mut r = Rational::from(
        rug::Integer::from_str_radix(if digits.is_empty() { "0" } else { &digits }, 10)
            .map_err(|e| Error::Parse(e.to_string()))?,
    );
    let scale = exp - frac_part.len() as i32;
    let ten = rug::Integer::from(10);
    if scale >= 0 {
        r *= Rational::from(ten.pow(scale as u32));
    } else {
        r /= Rational::from(ten.pow((-scale) as u32));
    }
    if neg {
        r = -r;
    }
    Ok(r)
}

/// Scientific notation with `sig` significant digits, e.g. `4.65570050e-1`.
pub fn format_sci(x: &BigReal, sig: usize) -> String {
    if x.is_zero() {
        return format!("{:.*}e0", sig.saturating_sub(1), 0.0);
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let (neg, digits, exp) = x.to_sign_string_exp(10, Some(sig.max(1)));
    let exp = exp.unwrap_or(0) - 1;
    let (head, tail) = digits.split_at(1);
    let sign = if neg { "-" } else { "" };
    if tail.is_empty() {
        format!("{sign}{head}e{exp}")
    } else {
        format!("{sign}{head}.{tail}e{exp}")
    }
}

/// Fixed-point rendering truncated (not rounded) to `decimals` places, the way
/// printed tables usually cut their digits.
pub fn format_truncated(x: &BigReal, decimals: usize) -> String {
    let scale = Float::with_val(x.prec(), 10).pow(decimals as i32);
    let scaled = Float::with_val(x.prec(), x * &scale);
    let int = scaled.trunc().to_integer().unwrap_or_default();
    let neg = int < 0 || (int == 0 && x.is_sign_negative() && !x.is_zero());
    let digits = int.abs().to_string();
    let digits = if digits.len() <= decimals {
        format!("{}{}", "0".repeat(decimals + 1 - digits.len()), digits)
    } else {
        digits
    };
    let (a, b) = digits.split_at(digits.len() - decimals);
    let sign = if neg { "-" } else { "" };
    if decimals == 0 {
        format!("{sign}{a}")
    } else {
        format!("{sign}{a}.{b}")
    }
}

/// Fixed-point rendering rounded half away from zero to `decimals` places.
pub fn format_rounded(x: &BigReal, decimals: usize) -> String {
    let half = Float::with_val(x.prec(), 10).pow(-(decimals as i32)) / 2;
    let shifted =
        if x.is_sign_negative() { Float::with_val(x.prec(), x - &half) } else { Float::with_val(x.prec(), x + &half) };
    format_truncated(&shifted, decimals)
}

/// Complex number with arbitrary precision parts.
#[derive(Clone, Debug, PartialEq)]
pub struct BigComplex {
    pub re: BigReal,
    pub im: BigReal,
}

impl BigComplex {
    pub fn new(re: BigReal, im: BigReal) -> Self {
        BigComplex { re, im }
    }

    pub fn real(re: BigReal) -> Self {
        let im = Float::new(re.prec());
        BigComplex { re, im }
    }

    /// `i^phase · r`, exact in the phase.
    pub fn from_phase(phase: i64, r: BigReal) -> Self {
        let zero = Float::new(r.prec());
        match phase.rem_euclid(4) {
            0 => BigComplex { re: r, im: zero },
            1 => BigComplex { re: zero, im: r },
            2 => BigComplex { re: -r, im: zero },
            _ => BigComplex { re: zero, im: -r },
        }
    }

    pub fn prec(&self) -> u32 {
        self.re.prec().max(self.im.prec())
    }

    pub fn zero(prec: Precision) -> Self {
        BigComplex::real(prec.zero())
    }

    pub fn one(prec: Precision) -> Self {
        BigComplex::real(prec.one())
    }

    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    /// |z|, computed with hypot so it cannot overflow.
    pub fn abs(&self) -> BigReal {
        Float::with_val(self.prec(), self.re.hypot_ref(&self.im))
    }

    pub fn conj(&self) -> Self {
        BigComplex { re: self.re.clone(), im: -self.im.clone() }
    }

    pub fn scale(&self, r: &BigReal) -> Self {
        BigComplex { re: self.re.clone() * r, im: self.im.clone() * r }
    }

    pub fn recip(&self) -> Self {
        let n = self.re.clone().square() + self.im.clone().square();
        BigComplex { re: self.re.clone() / &n, im: -(self.im.clone() / &n) }
    }

    pub fn div(&self, other: &BigComplex) -> Self {
        self * &other.recip()
    }
}

impl Add for &BigComplex {
    type Output = BigComplex;
    fn add(self, o: &BigComplex) -> BigComplex {
        BigComplex { re: self.re.clone() + &o.re, im: self.im.clone() + &o.im }
    }
}

impl Sub for &BigComplex {
    type Output = BigComplex;
    fn sub(self, o: &BigComplex) -> BigComplex {
        BigComplex { re: self.re.clone() - &o.re, im: self.im.clone() - &o.im }
    }
}

impl Mul for &BigComplex {
    type Output = BigComplex;
    fn mul(self, o: &BigComplex) -> BigComplex {
        let re = self.re.clone() * &o.re - self.im.clone() * &o.im;
        let im = self.re.clone() * &o.im + self.im.clone() * &o.re;
        BigComplex { re, im }
    }
}

impl Neg for BigComplex {
    type Output = BigComplex;
    fn neg(self) -> BigComplex {
        BigComplex { re: -self.re, im: -self.im }
    }
}

impl fmt::Display for BigComplex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sig = f.precision().unwrap_or(20);
        write!(f, "{} + {}i", format_sci(&self.re, sig), format_sci(&self.im, sig))
    }
}

/// The global model parameters: `0 < q < 1` and `κ = i·|κ|` with `|κ| > 0`.
///
/// Both are kept as exact rationals (they come from the command line as
/// `2/3` or `4.3`) together with cached high precision values.
#[derive(Clone, Debug)]
pub struct QRacahParams {
    prec: Precision,
    q_exact: Rational,
    kappa_exact: Rational,
    q: BigReal,
    kappa: BigReal,
    kappa_sq_abs: BigReal,
    sqrt_q: BigReal,
    ln_q: BigReal,
    ln_kappa: BigReal,
}

impl QRacahParams {
    pub fn new(q: Rational, kappa_abs: Rational, prec: Precision) -> Result<Self> {
        if q <= 0 || q >= 1 {
            return Err(Error::InvalidParameter(format!("q must lie in (0,1), got {q}")));
        }
        if kappa_abs <= 0 {
            return Err(Error::InvalidParameter(format!("|kappa| must be positive, got {kappa_abs}")));
        }
        let qf = prec.rational(&q);
        let kf = prec.rational(&kappa_abs);
        Ok(QRacahParams {
            prec,
            kappa_sq_abs: kf.clone().square(),
            sqrt_q: qf.clone().sqrt(),
            ln_q: qf.clone().ln(),
            ln_kappa: kf.clone().ln(),
            q: qf,
            kappa: kf,
            q_exact: q,
            kappa_exact: kappa_abs,
        })
    }

    /// Parse `q` (e.g. `2/3`) and the imaginary part of κ (e.g. `4.3`).
    pub fn parse(q: &str, kappa_abs: &str, prec: Precision) -> Result<Self> {
        Self::new(parse_rational(q)?, parse_rational(kappa_abs)?, prec)
    }

    pub fn with_precision(&self, prec: Precision) -> Self {
        Self::new(self.q_exact.clone(), self.kappa_exact.clone(), prec).expect("parameters already validated")
    }

    pub fn prec(&self) -> Precision {
        self.prec
    }

    pub fn bits(&self) -> u32 {
        self.prec.bits()
    }

    pub fn q_exact(&self) -> &Rational {
        &self.q_exact
    }

    pub fn kappa_exact(&self) -> &Rational {
        &self.kappa_exact
    }

    pub fn q(&self) -> &BigReal {
        &self.q
    }

    pub fn sqrt_q(&self) -> &BigReal {
        &self.sqrt_q
    }

    pub fn ln_q(&self) -> &BigReal {
        &self.ln_q
    }

    /// `|κ|`.
    pub fn kappa_abs(&self) -> &BigReal {
        &self.kappa
    }

    /// `κ² = −|κ|²` (a negative real).
    pub fn kappa_sq(&self) -> BigReal {
        -self.kappa_sq_abs.clone()
    }

    /// `−κ² = |κ|²`.
    pub fn minus_kappa_sq(&self) -> &BigReal {
        &self.kappa_sq_abs
    }

    pub fn zero(&self) -> BigReal {
        self.prec.zero()
    }

    pub fn one(&self) -> BigReal {
        self.prec.one()
    }

    pub fn int(&self, v: i64) -> BigReal {
        self.prec.int(v)
    }

    /// `q^e` for integer `e`.
    pub fn qpow(&self, e: i64) -> BigReal {
        Float::with_val(self.bits(), Pow::pow(&self.q, clamp_exp(e)))
    }

    /// `q^{e/2}`.
    pub fn qpow_half(&self, two_e: i64) -> BigReal {
        if two_e % 2 == 0 {
            self.qpow(two_e / 2)
        } else {
            Float::with_val(self.bits(), Pow::pow(&self.sqrt_q, clamp_exp(two_e)))
        }
    }

    /// `q^e` for rational `e`.
    pub fn qpow_rat(&self, e: Rational64) -> BigReal {
        match *e.denom() {
            1 => self.qpow(*e.numer()),
            2 => self.qpow_half(*e.numer()),
            _ => {
                let ef = self.prec.ratio(e);
                (ef * &self.ln_q).exp()
            }
        }
    }

    /// `|κ|^a`.
    pub fn kappa_pow(&self, a: i64) -> BigReal {
        if a % 2 == 0 {
            Float::with_val(self.bits(), Pow::pow(&self.kappa_sq_abs, clamp_exp(a / 2)))
        } else {
            Float::with_val(self.bits(), Pow::pow(&self.kappa, clamp_exp(a)))
        }
    }

    /// Evaluate a monomial `sign·|κ|^a·q^e`.
    pub fn eval(&self, p: &QPower) -> BigReal {
        let mut v = self.qpow_rat(p.q_exp);
        if p.kappa_exp != 0 {
            v *= self.kappa_pow(p.kappa_exp as i64);
        }
        if p.sign < 0 {
            v = -v;
        }
        v
    }

    /// `1 − p`, returning an exact zero when the monomial is exactly one.
    pub fn one_minus(&self, p: &QPower) -> BigReal {
        if p.is_one() {
            self.zero()
        } else {
            self.one() - self.eval(p)
        }
    }

    /// `log(−κ²)/log q`, the exponent that makes `−κ² = q^𝐤`.
    pub fn kappa_exponent(&self) -> BigReal {
        Float::with_val(self.bits(), &self.ln_kappa * 2u32) / &self.ln_q
    }

    /// True when `|κ|` is (numerically) an integer power of `√q`, where
    /// `θ_{√q}(|κ|)` vanishes and the limiting barcode formulas blow up.
    pub fn is_theta_singular(&self) -> bool {
        let two = Float::with_val(self.bits(), &self.ln_kappa * 2u32);
        let m = two / &self.ln_q;
        let frac = Float::with_val(self.bits(), &m - m.clone().round()).abs();
        frac < self.prec.ten_pow_neg((self.prec.digits() / 2) as i32)
    }

    pub fn describe(&self) -> String {
        format!("q={} kappa={}i precision={}", self.q_exact, self.kappa_exact, self.prec.digits)
    }
}

fn clamp_exp(e: i64) -> i32 {
    e.clamp(i32::MIN as i64 + 1, i32::MAX as i64) as i32
}

/// Determinant by Gaussian elimination with partial pivoting.
pub fn det_real(mut m: Vec<Vec<BigReal>>, prec: Precision) -> BigReal {
    let n = m.len();
    let mut det = prec.one();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&a, &b| m[a][col].clone().abs().partial_cmp(&m[b][col].clone().abs()).unwrap_or(Ordering::Equal))
            .unwrap_or(col);
        if m[pivot][col].is_zero() {
            return prec.zero();
        }
        if pivot != col {
            m.swap(pivot, col);
            det = -det;
        }
        det *= &m[col][col];
        for row in col + 1..n {
            let factor = m[row][col].clone() / &m[col][col];
            if factor.is_zero() {
                continue;
            }
            for k in col..n {
                let sub = Float::with_val(prec.bits(), &factor * &m[col][k]);
                m[row][k] -= sub;
            }
        }
    }
    det
}

/// Complex determinant by Gaussian elimination with partial pivoting.
pub fn det_complex(mut m: Vec<Vec<BigComplex>>, prec: Precision) -> BigComplex {
    let n = m.len();
    let mut det = BigComplex::one(prec);
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&a, &b| m[a][col].abs().partial_cmp(&m[b][col].abs()).unwrap_or(Ordering::Equal))
            .unwrap_or(col);
        if m[pivot][col].is_zero() {
            return BigComplex::zero(prec);
        }
        if pivot != col {
            m.swap(pivot, col);
            det = -det;
        }
        det = &det * &m[col][col];
        let inv = m[col][col].recip();
        for row in col + 1..n {
            let factor = &m[row][col] * &inv;
            if factor.is_zero() {
                continue;
            }
            for k in col..n {
                let sub = &factor * &m[col][k];
                m[row][k] = &m[row][k] - &sub;
            }
        }
    }
    det
}

/// Largest working precision the adaptive driver will try.
pub const MAX_ADAPTIVE_DIGITS: u32 = 40_000;

/// Evaluate `eval` at increasing precision until two runs agree.
///
/// Each round evaluates at `d` and `d + max(32, d/4)` digits and accepts when
/// every entry agrees to `target` significant digits (relative to
/// `max(1, |v|)`); otherwise `d` doubles. Returns the values from the higher
/// precision run together with that precision.
pub fn adaptive_eval<F>(
    params: &QRacahParams,
    start_digits: u32,
    target: u32,
    eval: F,
) -> Result<(Vec<BigReal>, Precision)>
where
    F: Fn(&QRacahParams) -> Result<Vec<BigReal>>,
{
    let mut d = start_digits.max(target + 20);
    loop {
        let lo = params.with_precision(Precision::new(d));
        let hi_prec = Precision::new(d + (d / 4).max(32));
        let hi = params.with_precision(hi_prec);
        let a = eval(&lo)?;
        let b = eval(&hi)?;
        let tol = hi_prec.ten_pow_neg(target as i32);
        let agree = a.len() == b.len()
            && a.iter().zip(&b).all(|(x, y)| {
                if !x.is_finite() || !y.is_finite() {
                    return false;
                }
                let scale = Float::with_val(y.prec(), y.abs_ref()).max(&Float::with_val(y.prec(), 1));
                let diff = Float::with_val(y.prec(), x - y).abs();
                diff <= Float::with_val(y.prec(), &tol * &scale)
            });
        if agree {
            return Ok((b, hi_prec));
        }
        if d >= MAX_ADAPTIVE_DIGITS {
            return Err(Error::SizeGuard(format!(
                "no agreement to {target} digits below {MAX_ADAPTIVE_DIGITS} digits of precision"
            )));
        }
        d = (2 * d).min(MAX_ADAPTIVE_DIGITS);
    }
}
