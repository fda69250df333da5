//! Objects that live after the scaling limit: limiting coefficients of the
//! scaled difference operator, the center-line eigensystem, the limiting
//! inter-slice operator, the theta-function family `𝓕_n`, and the regularized
//! partial sums for the barcode kernel and its density.
//!
//! Half-integers `n, x ∈ ½ℤ` are always passed doubled (`two_n`, `two_x`).

use std::collections::HashMap;
use std::sync::Mutex;

use num_rational::Rational64;
use rug::Float;

use crate::error::{Error, Result};
use crate::hexagon::HexagonParams;
use crate::num::{adaptive_eval, det_real, sqrt_checked, BigReal, Precision, QRacahParams};
use crate::qspecial::{qpoch_infinite, theta, QPower};

/// Position of a vertical-slice point relative to the waterfall band.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum LimitCase {
    BelowWaterfall,
    LowerBoundary,
    LowerInterior,
    Center,
    UpperInterior,
    UpperBoundary,
    AboveWaterfall,
    /// Slice outside `(𝗍_l, 𝗍_r)`, where there is no waterfall.
    OutsideWaterfallSlice,
}

/// Which coefficient of the three-diagonal operator.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CoeffKind {
    Diagonal,
    /// The coefficient coupling `Δx−1` and `Δx`.
    OffDiagonal,
}

/// Case of the point `(t, x_floor)` of a hexagon at scale `L`.
///
/// The band edges are compared exactly in lattice units: the boundary cases
/// need `2⌊L𝗑⌋ = S+t∓N` on the nose.
pub fn limit_case(hex: &HexagonParams, scale: i64, t: i64, x_floor: i64) -> Result<LimitCase> {
    let (tt, s, n) = hex.tsn();
    let l = scale as f64;
    let geom = crate::hexagon::ScaledGeometry::new(tt as f64 / l, s as f64 / l, n as f64 / l)?;
    let ts = t as f64 / l;
    if !geom.has_waterfall() || ts <= geom.t_left() || ts >= geom.t_right() {
        return Ok(LimitCase::OutsideWaterfallSlice);
    }
    let d = 2 * x_floor - s - t;
    Ok(match d {
        d if d < -n => LimitCase::BelowWaterfall,
        d if d == -n => LimitCase::LowerBoundary,
        d if d < 0 => LimitCase::LowerInterior,
        0 => LimitCase::Center,
        d if d < n => LimitCase::UpperInterior,
        d if d == n => LimitCase::UpperBoundary,
        _ => LimitCase::AboveWaterfall,
    })
}

/// Closed-form limit of a coefficient of the scaled difference operator.
pub fn limit_coeff(p: &QRacahParams, case: LimitCase, dx: i64, kind: CoeffKind) -> BigReal {
    let k2 = p.kappa_sq();
    let k2inv = Float::with_val(p.bits(), k2.recip_ref());
    let one_plus_q = p.one() + p.q();
    match (case, kind) {
        (
            LimitCase::BelowWaterfall | LimitCase::AboveWaterfall | LimitCase::OutsideWaterfallSlice,
            CoeffKind::Diagonal,
        ) => -p.one(),
        (
            LimitCase::BelowWaterfall | LimitCase::AboveWaterfall | LimitCase::OutsideWaterfallSlice,
            CoeffKind::OffDiagonal,
        ) => p.zero(),
        (LimitCase::LowerInterior, CoeffKind::Diagonal) => -(k2inv * one_plus_q * p.qpow(-1 - 2 * dx)),
        (LimitCase::LowerBoundary, CoeffKind::Diagonal) => -p.one() - k2inv * one_plus_q * p.qpow(-1 - 2 * dx),
        (LimitCase::LowerInterior | LimitCase::LowerBoundary, CoeffKind::OffDiagonal) => {
            -(k2inv * p.qpow_half(1 - 4 * dx))
        }
        (LimitCase::Center, CoeffKind::Diagonal) => a_ctr(p, dx),
        (LimitCase::Center, CoeffKind::OffDiagonal) => d_ctr(p, dx),
        (LimitCase::UpperInterior, CoeffKind::Diagonal) => -(k2 * one_plus_q * p.qpow(2 * dx + 1)),
        (LimitCase::UpperBoundary, CoeffKind::Diagonal) => -p.one() - k2 * one_plus_q * p.qpow(2 * dx + 1),
        (LimitCase::UpperInterior | LimitCase::UpperBoundary, CoeffKind::OffDiagonal) => {
            -(k2 * p.qpow_half(4 * dx + 1))
        }
    }
}

/// Off-diagonal center-line coefficient `d^ctr(x)`.
pub fn d_ctr(p: &QRacahParams, x: i64) -> BigReal {
    let num = -(p.kappa_sq() * p.qpow_half(4 * x + 1));
    let den = p.one_minus(&QPower::kappa_sq_q(2 * x))
        * (p.one_minus(&QPower::kappa_sq_q(2 * x - 1)) * p.one_minus(&QPower::kappa_sq_q(2 * x + 1))).sqrt();
    num / den
}

/// Diagonal center-line coefficient `a^ctr(x)`.
pub fn a_ctr(p: &QRacahParams, x: i64) -> BigReal {
    let num = -(p.kappa_sq() * (p.one() + p.q()) * p.qpow(2 * x + 1));
    num / (p.one_minus(&QPower::kappa_sq_q(2 * x)) * p.one_minus(&QPower::kappa_sq_q(2 * x + 2)))
}

/// `(𝔗^ctr g)(x) = d(x+1)g(x+1) + a(x)g(x) + d(x)g(x−1)` on the window
/// `x0 .. x0+len`, with `g` taken as zero outside it.
pub fn tctr_apply(p: &QRacahParams, x0: i64, g: &[BigReal]) -> Vec<BigReal> {
    let n = g.len();
    (0..n)
        .map(|i| {
            let x = x0 + i as i64;
            let mut v = a_ctr(p, x) * &g[i];
            if i + 1 < n {
                v += d_ctr(p, x + 1) * &g[i + 1];
            }
            if i > 0 {
                v += d_ctr(p, x) * &g[i - 1];
            }
            v
        })
        .collect()
}

/// Center-line eigenfunction `g_n(x)`, eigenvalue `q^{n+1}`.
pub fn gctr(p: &QRacahParams, n: u32, x: i64) -> BigReal {
    let k2 = p.kappa_sq();
    let mut pref = p.qpow(x * (x + 1)) * p.kappa_pow(2 * x);
    let rad = p.qpow(-x) - k2.clone() * p.qpow(x + 1);
    pref *= rad.sqrt();
    let q = p.q();
    let mut sum = p.zero();
    let ni = n as i64;
    for i in 0..=ni {
        let binom = crate::qspecial::qbinomial(n as usize, i as usize, q);
        let term = p.kappa_pow(2 * i) * p.qpow((2 * i - ni) * x - i * (ni - i - 1)) * binom;
        if i % 2 == 1 {
            sum -= term;
        } else {
            sum += term;
        }
    }
    pref * sum
}

/// `𝔞(x)` at `x = two_x/2`.
pub fn afun(p: &QRacahParams, two_x: i64) -> BigReal {
    let num = p.minus_kappa_sq().clone() * p.qpow(two_x - 1);
    let den = p.one_minus(&QPower::kappa_sq_q(two_x)) * p.one_minus(&QPower::kappa_sq_q(two_x - 1));
    (num / den).sqrt()
}

/// `(𝔘^barcode_t f)(x) = 𝔞(x−t/2) f(x−1) + 𝔞(x−t/2+½) f(x)`.
///
/// `f[k]` is the value at `x = two_x0/2 + k`; values off the window are zero,
/// and the output covers the window extended by one site to the right.
pub fn u_barcode_apply(p: &QRacahParams, t: i64, two_x0: i64, f: &[BigReal]) -> Vec<BigReal> {
    let n = f.len();
    (0..=n)
        .map(|k| {
            let two_x = two_x0 + 2 * k as i64;
            let mut v = p.zero();
            if k > 0 {
                v += afun(p, two_x - t) * &f[k - 1];
            }
            if k < n {
                v += afun(p, two_x - t + 1) * &f[k];
            }
            v
        })
        .collect()
}

/// Half-parity lattice for norms and sums.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HalfLattice {
    /// `ℤ`
    Integers,
    /// `ℤ + ½`
    Shifted,
}

/// The family `𝓕_n(x)`, `n ∈ ½ℤ≥0`, `x ∈ ½ℤ`, with cached values.
#[derive(Debug)]
pub struct FnFamily {
    params: QRacahParams,
    sqrt_q: BigReal,
    theta_kappa: BigReal,
    norm_const: BigReal,
    qq: Mutex<Vec<BigReal>>,
    cache: Mutex<HashMap<(i64, i64), BigReal>>,
}

impl FnFamily {
    /// Fails with a domain error when `θ_{√q}(|κ|)` vanishes to working
    /// precision, i.e. `|κ|` is an integer power of `√q`.
    pub fn new(params: &QRacahParams) -> Result<Self> {
        if params.is_theta_singular() {
            return Err(Error::Domain(format!(
                "theta(sqrt q, |kappa|) vanishes at {}: |kappa| is a power of sqrt q",
                params.describe()
            )));
        }
        let p = params;
        let sqrt_q = p.sqrt_q().clone();
        let theta_kappa = theta(&sqrt_q, p.kappa_abs())?;
        let k2inv = Float::with_val(p.bits(), p.kappa_sq().recip_ref());
        let norm_const = qpoch_infinite(p.q(), p.q())? * p.minus_kappa_sq() * theta(p.q(), &k2inv)?
            / Float::with_val(p.bits(), theta_kappa.square_ref());
        Ok(FnFamily {
            params: params.clone(),
            sqrt_q,
            theta_kappa,
            norm_const,
            qq: Mutex::new(vec![p.one()]),
            cache: Mutex::new(HashMap::new()),
        })
    }

    pub fn params(&self) -> &QRacahParams {
        &self.params
    }

    /// `(q;q)_k`
    fn qq(&self, k: i64) -> BigReal {
        let mut tab = self.qq.lock().expect("cache poisoned");
        while tab.len() as i64 <= k {
            let j = tab.len() as i64;
            let next = tab[tab.len() - 1].clone() * self.params.one_minus(&QPower::q(j));
            tab.push(next);
        }
        tab[k as usize].clone()
    }

    fn radical(&self, two_x: i64) -> BigReal {
        // 1 − κ^{-2}q^{-2x} = 1 + q^{-2x}/|κ|²
        let p = &self.params;
        let v = p.qpow(-two_x) / p.minus_kappa_sq() + 1u32;
        v.sqrt()
    }

    /// Summation indices `i` with the half-parity of `n`, doubled.
    fn indices(two_n: i64) -> impl Iterator<Item = i64> {
        (-two_n..=two_n).step_by(2)
    }

    /// `𝓕_n(x)` straight from the definition, one theta value per term.
    pub fn f_theta(&self, two_n: i64, two_x: i64) -> Result<BigReal> {
        check_n(two_n)?;
        let p = &self.params;
        let mut sum = p.zero();
        for two_i in Self::indices(two_n) {
            let arg = p.kappa_abs().clone() * p.qpow_half(two_x + two_i + 1);
            let th = theta(&self.sqrt_q, &arg)?;
            let mut term = p.qpow_rat(Rational64::new(-two_i, 4))
                / (self.qq((two_n - two_i) / 2) * self.qq((two_n + two_i) / 2))
                / th;
            if ((two_n + two_i) / 2).rem_euclid(2) == 1 {
                term = -term;
            }
            sum += term;
        }
        Ok(self.radical(two_x) * sum)
    }

    /// `𝓕_n(x)` with each theta value reduced to `θ_{√q}(|κ|)` by
    /// quasi-periodicity (cached).
    pub fn f(&self, two_n: i64, two_x: i64) -> Result<BigReal> {
        check_n(two_n)?;
        if let Some(v) = self.cache.lock().expect("cache poisoned").get(&(two_n, two_x)) {
            return Ok(v.clone());
        }
        let p = &self.params;
        let mut sum = p.zero();
        for two_i in Self::indices(two_n) {
            // θ_p(p^m z) = (−1)^m p^{−m(m−1)/2} z^{−m} θ_p(z), p = √q, z = |κ|
            let m = two_x + two_i + 1;
            let mut term = p.qpow_rat(Rational64::new(-two_i, 4)) * p.qpow_half(m * (m - 1) / 2) * p.kappa_pow(m)
                / (self.qq((two_n - two_i) / 2) * self.qq((two_n + two_i) / 2));
            if ((two_n + two_i) / 2 + m).rem_euclid(2) == 1 {
                term = -term;
            }
            sum += term;
        }
        let v = self.radical(two_x) * sum / &self.theta_kappa;
        self.cache.lock().expect("cache poisoned").insert((two_n, two_x), v.clone());
        Ok(v)
    }

    /// `𝓕_n(x)` through the terminating `₂φ₀` (continuous `q⁻¹`-Hermite) form.
    pub fn f_hyper(&self, two_n: i64, two_x: i64) -> Result<BigReal> {
        check_n(two_n)?;
        let p = &self.params;
        // λ² = κ²q^{2x}, and the series argument is λ² q^{−2n}
        let lam_sq = p.kappa_sq() * p.qpow(two_x);
        let series = crate::qspecial::hermite_phi20(two_n as usize, &lam_sq, p.q());
        let d = two_n - two_x;
        let mut pref = p.qpow_rat(Rational64::new(d * d, 4) + Rational64::new(two_x, 4))
            * p.kappa_pow(two_x - two_n + 1)
            * self.radical(two_x)
            / (self.qq(two_n) * &self.theta_kappa);
        if (two_n + two_x + 1).rem_euclid(2) == 1 {
            pref = -pref;
        }
        Ok(pref * series)
    }

    /// Closed-form `‖𝓕_n‖²` in `ℓ²(ℤ)` (equal to the `ℓ²(ℤ+½)` norm).
    pub fn norm_sq(&self, two_n: i64) -> Result<BigReal> {
        check_n(two_n)?;
        Ok(self.norm_const.clone() / (self.params.qpow_half(two_n) * self.qq(two_n)))
    }

    /// `Σ 𝓕_n(x)𝓕_m(x)` over the chosen lattice, extending the window until
    /// the squared values fall below `10^{−digits−10}` of the running total.
    pub fn direct_inner(&self, two_n: i64, two_m: i64, lattice: HalfLattice) -> Result<BigReal> {
        let p = &self.params;
        let shift = match lattice {
            HalfLattice::Integers => 0,
            HalfLattice::Shifted => 1,
        };
        let tol = p.prec().ten_pow_neg(p.prec().digits() as i32 + 10);
        let mut sum = p.zero();
        let mut scale = p.zero();
        let term = |x: i64| -> Result<(BigReal, BigReal)> {
            let a = self.f(two_n, 2 * x + shift)?;
            let b = self.f(two_m, 2 * x + shift)?;
            let sq = Float::with_val(p.bits(), a.square_ref()) + Float::with_val(p.bits(), b.square_ref());
            Ok((a * b, sq))
        };
        let (v, sq) = term(0)?;
        sum += v;
        scale += sq;
        for dir in [1i64, -1] {
            let mut x = dir;
            let mut quiet = 0;
            while quiet < 4 {
                let (v, sq) = term(x)?;
                sum += v;
                scale += &sq;
                if sq <= Float::with_val(p.bits(), &tol * &scale) {
                    quiet += 1;
                } else {
                    quiet = 0;
                }
                x += dir;
                if x.abs() > 100_000 {
                    return Err(Error::SizeGuard("F_n window did not close".into()));
                }
            }
        }
        Ok(sum)
    }

    /// `Σ_{n ≤ n_max} 𝓕_n(x)𝓕_n(y)/‖𝓕_n‖²`.
    ///
    /// Tends to `1_{x=y}` when `x−y ∈ ℤ`; for mixed half-parity it does not
    /// tend to zero.
    pub fn identity_partial_sum(&self, two_x: i64, two_y: i64, two_nmax: i64) -> Result<BigReal> {
        let mut sum = self.params.zero();
        for two_n in 0..=two_nmax {
            sum += self.f(two_n, two_x)? * self.f(two_n, two_y)? / self.norm_sq(two_n)?;
        }
        Ok(sum)
    }

    /// Largest residual of the three-term relation
    /// `𝔞(x)𝓕_n(x−½) + 𝔞(x+½)𝓕_n(x+½) + q^n𝓕_n(x)` over `two_x ∈ window`.
    pub fn three_term_residual(&self, two_n: i64, window: std::ops::RangeInclusive<i64>) -> Result<BigReal> {
        let p = &self.params;
        let mut worst = p.zero();
        for two_x in window {
            let r = afun(p, two_x) * self.f(two_n, two_x - 1)?
                + afun(p, two_x + 1) * self.f(two_n, two_x + 1)?
                + p.qpow_half(two_n) * self.f(two_n, two_x)?;
            let r = r.abs();
            if r > worst {
                worst = r;
            }
        }
        Ok(worst)
    }
}

fn check_n(two_n: i64) -> Result<()> {
    if two_n < 0 {
        return Err(Error::Domain(format!("n must be nonnegative, got {}/2", two_n)));
    }
    Ok(())
}

/// How the divergent barcode series is cut off.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Regularization {
    /// Sum through `n = M+½` with factor `q^{(M+1)(s−t)}`.
    #[default]
    HalfStep,
    /// Sum through `n = M` with factor `q^{(M+½)(s−t)}`; expected to give the
    /// kernel at `(s+1, t+1)`.
    IntegerStep,
}

/// Regularized partial sums of the limiting barcode kernel.
#[derive(Debug)]
pub struct LimitBarcode {
    family: FnFamily,
    pub m: i64,
    pub regularization: Regularization,
}

impl LimitBarcode {
    pub fn new(params: &QRacahParams, m: i64) -> Result<Self> {
        if m < 0 {
            return Err(Error::InvalidParameter(format!("truncation M must be nonnegative, got {m}")));
        }
        Ok(LimitBarcode { family: FnFamily::new(params)?, m, regularization: Regularization::HalfStep })
    }

    pub fn with_regularization(mut self, r: Regularization) -> Self {
        self.regularization = r;
        self
    }

    pub fn family(&self) -> &FnFamily {
        &self.family
    }

    pub fn params(&self) -> &QRacahParams {
        self.family.params()
    }

    fn last_two_n(&self, m: i64) -> i64 {
        match self.regularization {
            Regularization::HalfStep => 2 * m + 1,
            Regularization::IntegerStep => 2 * m,
        }
    }

    /// `𝒦_{(M)}(s,t)`, symmetric by construction.
    pub fn kernel(&self, s: i64, t: i64) -> Result<BigReal> {
        self.kernel_at(self.m, s, t)
    }

    fn kernel_at(&self, m: i64, s: i64, t: i64) -> Result<BigReal> {
        if s < t {
            return self.half(m, t, s);
        }
        self.half(m, s, t)
    }

    /// The `s ≥ t` formula.
    fn half(&self, m: i64, s: i64, t: i64) -> Result<BigReal> {
        let p = self.params();
        let f = &self.family;
        let e = t - 1 - s;
        let mut sum = p.zero();
        for two_n in 0..=self.last_two_n(m) {
            let mut term = p.qpow_half(two_n * e) * f.f(two_n, 2 - t)? * f.f(two_n, 1 - s)? / f.norm_sq(two_n)?;
            if e.rem_euclid(2) == 1 {
                term = -term;
            }
            sum += term;
        }
        let reg = match self.regularization {
            Regularization::HalfStep => p.qpow((m + 1) * (s - t)),
            Regularization::IntegerStep => p.qpow_half((2 * m + 1) * (s - t)),
        };
        let k2 = p.minus_kappa_sq();
        let rad = k2.clone() / (p.one_minus(&QPower::kappa_sq_q(2 - t)) * p.one_minus(&QPower::kappa_sq_q(1 - s)));
        // −q^{1−s}·q^{(s−1)/2}·(−Σ) = q^{(1−s)/2} Σ
        let mut v = reg * p.qpow_half(1 - s) * sqrt_checked(rad, "barcode prefactor")? * sum;
        if (s - t).rem_euclid(2) == 1 {
            v = -v;
        }
        Ok(v)
    }

    /// `|𝒦_{(M)}(s,t) − 𝒦_{(M−1)}(s,t)|`, the empirical error proxy.
    pub fn last_increment(&self, s: i64, t: i64) -> Result<BigReal> {
        if self.m == 0 {
            return Err(Error::Domain("last increment needs M ≥ 1".into()));
        }
        let a = self.kernel_at(self.m, s, t)?;
        let b = self.kernel_at(self.m - 1, s, t)?;
        Ok((a - b).abs())
    }

    /// `det[𝒦(t_i, t_j)]`.
    pub fn det(&self, ts: &[i64]) -> Result<BigReal> {
        let m: Vec<Vec<BigReal>> =
            ts.iter().map(|&a| ts.iter().map(|&b| self.kernel(a, b)).collect()).collect::<Result<_>>()?;
        Ok(det_real(m, self.params().prec()))
    }

    /// `ρ₀(t)` (through `M+½`) or `ρ₁(t)` (through `M`):
    /// `𝔞(1−t/2) Σ −q^{−n} 𝓕_n^t(0) 𝓕_n^{t−1}(0) / ‖𝓕_n‖²`.
    pub fn density_partial(&self, t: i64, half_step: bool) -> Result<BigReal> {
        let p = self.params();
        let f = &self.family;
        let last = if half_step { 2 * self.m + 1 } else { 2 * self.m };
        let mut sum = p.zero();
        for two_n in 0..=last {
            sum -= p.qpow_half(-two_n) * f.f(two_n, 1 - t)? * f.f(two_n, 2 - t)? / f.norm_sq(two_n)?;
        }
        Ok(afun(p, 2 - t) * sum)
    }

    /// `(ρ_even, ρ_odd) = (𝒦(0,0), 𝒦(1,1))`.
    pub fn rho_even_odd(&self) -> Result<(BigReal, BigReal)> {
        Ok((self.kernel(0, 0)?, self.kernel(1, 1)?))
    }

    /// Covariance `−𝒦(0,t)²` and the decay-plot value `log|𝒦(0,t)|/log q`.
    pub fn two_point(&self, t: i64) -> Result<(BigReal, BigReal)> {
        if t < 1 {
            return Err(Error::Domain(format!("two-point offset must be ≥ 1, got {t}")));
        }
        let k = self.kernel(0, t)?;
        let cov = -Float::with_val(k.prec(), k.square_ref());
        let lr = k.abs().ln() / self.params().ln_q();
        Ok((cov, lr))
    }
}

/// `𝒦_{(M)}(s,t)` for several pairs at precision high enough that two runs
/// agree to `target` digits.
pub fn k_limit_adaptive(
    params: &QRacahParams,
    m: i64,
    regularization: Regularization,
    pairs: &[(i64, i64)],
    target: u32,
) -> Result<(Vec<BigReal>, Precision)> {
    // the terms grow like q^{−n(s−t)}; the regularization factor removes it
    let spread = pairs.iter().map(|&(s, t)| (s - t).abs() + 1).max().unwrap_or(1) as f64;
    let lq = -params.q().to_f64().log10();
    let start = (spread * (m as f64 + 1.0) * lq) as u32 + target + 40;
    adaptive_eval(params, start.max(params.prec().digits()), target, |p| {
        let k = LimitBarcode::new(p, m)?.with_regularization(regularization);
        pairs.iter().map(|&(s, t)| k.kernel(s, t)).collect()
    })
}

/// One point of the density surface: `ρ_even = 𝒦_{(M)}(0,0)`.
pub fn rho_even_at(params: &QRacahParams, m: i64) -> Result<BigReal> {
    LimitBarcode::new(params, m)?.kernel(0, 0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::num::Precision;

    fn params(q: &str, k: &str, d: u32) -> QRacahParams {
        QRacahParams::parse(q, k, Precision::new(d)).unwrap()
    }

    fn close(a: &BigReal, b: &BigReal, e: i32) -> bool {
        let d = Float::with_val(a.prec(), a - b).abs();
        d < Precision::new(40).ten_pow_neg(e)
    }

    #[test]
    fn limit_coefficients_outside_the_band() {
        let p = params("1/2", "1", 30);
        for c in [LimitCase::BelowWaterfall, LimitCase::AboveWaterfall, LimitCase::OutsideWaterfallSlice] {
            assert_eq!(limit_coeff(&p, c, 3, CoeffKind::Diagonal), -1);
            assert!(limit_coeff(&p, c, 3, CoeffKind::OffDiagonal).is_zero());
        }
    }

    #[test]
    fn center_coefficients_match_the_operator() {
        let p = params("1/3", "2", 40);
        for dx in -3..4 {
            assert_eq!(limit_coeff(&p, LimitCase::Center, dx, CoeffKind::Diagonal), a_ctr(&p, dx));
            // −κ²q^{2Δx+1/2} in the upper interior
            let up = limit_coeff(&p, LimitCase::UpperInterior, dx, CoeffKind::OffDiagonal);
            let expect = 4.0 * (1.0f64 / 3.0).powf(2.0 * dx as f64 + 0.5);
            assert!((up.to_f64() - expect).abs() < 1e-12 * expect);
        }
    }

    #[test]
    fn center_line_eigenfunctions() {
        let p = params("1/2", "1", 80);
        let x0 = -40;
        for n in 0..=8u32 {
            let g: Vec<BigReal> = (x0..=40).map(|x| gctr(&p, n, x)).collect();
            let tg = tctr_apply(&p, x0, &g);
            let lam = p.qpow(n as i64 + 1);
            let scale = g.iter().map(|v| v.to_f64().abs()).fold(0.0, f64::max);
            // interior rows only: the window edges see the truncation
            for i in 2..g.len() - 2 {
                let r = Float::with_val(p.bits(), &tg[i] - &lam * g[i].clone()).abs();
                assert!(r.to_f64() <= 1e-60 * scale.max(1.0), "n={n} i={i}");
            }
        }
    }

    #[test]
    fn center_line_orthogonality() {
        let p = params("1/2", "1", 60);
        let g: Vec<Vec<BigReal>> = (0..=4u32).map(|n| (-40..=40).map(|x| gctr(&p, n, x)).collect()).collect();
        for a in 0..g.len() {
            for b in 0..a {
                let dot: BigReal = g[a].iter().zip(&g[b]).fold(p.zero(), |acc, (u, v)| acc + u.clone() * v);
                let na: BigReal = g[a].iter().fold(p.zero(), |acc, u| acc + u.clone() * u);
                let nb: BigReal = g[b].iter().fold(p.zero(), |acc, u| acc + u.clone() * u);
                assert!((dot / (na * nb).sqrt()).abs() < 1e-40);
            }
        }
    }

    #[test]
    fn afun_is_positive_and_decays() {
        let p = params("1/3", "2", 40);
        for two_x in -20..=20 {
            assert!(afun(&p, two_x) > 0);
        }
        assert!(afun(&p, 60) < 1e-10);
        assert!(afun(&p, -60) < 1e-10);
    }

    #[test]
    fn three_forms_of_f_agree() {
        let p = params("1/2", "3/2", 60);
        let fam = FnFamily::new(&p).unwrap();
        for two_n in 0..=8 {
            for two_x in -12..=12 {
                let a = fam.f(two_n, two_x).unwrap();
                let b = fam.f_theta(two_n, two_x).unwrap();
                let c = fam.f_hyper(two_n, two_x).unwrap();
                let s = a.to_f64().abs().max(1e-30);
                assert!(Float::with_val(a.prec(), &a - &b).abs().to_f64() < 1e-45 * s.max(1.0), "n={two_n} x={two_x}");
                assert!(
                    Float::with_val(a.prec(), &a - &c).abs().to_f64() < 1e-45 * s.max(1.0),
                    "n={two_n} x={two_x}: {a} {c}"
                );
            }
        }
    }

    #[test]
    fn three_term_relation() {
        let p = params("1/3", "2", 120);
        let fam = FnFamily::new(&p).unwrap();
        for two_n in 0..=12 {
            let r = fam.three_term_residual(two_n, -20..=20).unwrap();
            assert!(r < Precision::new(120).ten_pow_neg(90), "n={two_n}: {r}");
        }
    }

    #[test]
    fn norms_match_direct_sums() {
        let p = params("1/3", "2", 100);
        let fam = FnFamily::new(&p).unwrap();
        for two_n in 0..=3 {
            let closed = fam.norm_sq(two_n).unwrap();
            for lat in [HalfLattice::Integers, HalfLattice::Shifted] {
                let direct = fam.direct_inner(two_n, two_n, lat).unwrap();
                let rel = (Float::with_val(p.bits(), &direct - &closed) / &closed).abs();
                assert!(rel < Precision::new(100).ten_pow_neg(80), "n={two_n} {lat:?}");
            }
            for two_m in 0..two_n {
                let ip = fam.direct_inner(two_n, two_m, HalfLattice::Integers).unwrap();
                assert!(ip.abs() < Precision::new(100).ten_pow_neg(80));
            }
        }
    }

    #[test]
    fn theta_singular_pair_is_a_domain_error() {
        // |κ| = √q^3 with q = 1/4
        let p = params("1/4", "1/8", 40);
        assert!(matches!(FnFamily::new(&p), Err(Error::Domain(_))));
    }

    #[test]
    fn f_barcode_intertwining() {
        let p = params("1/3", "2", 80);
        let fam = FnFamily::new(&p).unwrap();
        for t in -2..3i64 {
            for two_n in 0..=6 {
                // x ∈ ℤ window −15..15; 𝓕_n^t(x) = 𝓕_n(x − (t−1)/2)
                let f: Vec<BigReal> = (-15..=15i64).map(|x| fam.f(two_n, 2 * x - t + 1).unwrap()).collect();
                let out = u_barcode_apply(&p, t, -30, &f);
                for (k, v) in out.iter().enumerate().take(f.len()).skip(1) {
                    let x = -15 + k as i64;
                    let target = -(p.qpow_half(two_n) * fam.f(two_n, 2 * x - t).unwrap());
                    assert!(close(v, &target, 60), "t={t} n={two_n} x={x}");
                }
            }
        }
    }

    #[test]
    fn kernel_is_symmetric_by_construction() {
        let p = params("1/7", "3", 80);
        let k = LimitBarcode::new(&p, 10).unwrap();
        for (s, t) in [(3, 1), (0, -2), (5, 5)] {
            assert_eq!(k.kernel(s, t).unwrap(), k.kernel(t, s).unwrap());
        }
    }
}
