//! Piecewise-linear exponent calculus for ratios of slice probabilities:
//! `𝒲`, `𝒢`, `𝓔`, `𝓗`, the distance `d`, the minimizing packed
//! configurations, the cdf representation and the continuous profile `𝖧`.
//!
//! Everything is generic over [`Exponent`], implemented for `Rational64`
//! (exact) and `f64`.

use num_rational::Rational64;
use num_traits::ToPrimitive;
use rug::ops::Pow;
use rug::{Integer, Rational};

use crate::error::{Error, Result};
use crate::hexagon::ScaledGeometry;
use crate::num::QRacahParams;

/// Scalar type for exponents.
pub trait Exponent:
    Copy
    + PartialOrd
    + std::fmt::Debug
    + std::ops::Add<Output = Self>
    + std::ops::Sub<Output = Self>
    + std::ops::Mul<Output = Self>
    + std::ops::Neg<Output = Self>
{
    fn int(v: i64) -> Self;
    fn half(self) -> Self;
    fn floor_i64(self) -> i64;
    fn to_f64(self) -> f64;

    fn zero() -> Self {
        Self::int(0)
    }
    /// `a⁻ = min(a, 0)`
    fn neg_part(self) -> Self {
        if self < Self::zero() {
            self
        } else {
            Self::zero()
        }
    }
    fn min_of(self, other: Self) -> Self {
        if other < self {
            other
        } else {
            self
        }
    }
    fn abs_val(self) -> Self {
        if self < Self::zero() {
            -self
        } else {
            self
        }
    }
}

impl Exponent for Rational64 {
    fn int(v: i64) -> Self {
        Rational64::from_integer(v)
    }
    fn half(self) -> Self {
        self / 2
    }
    fn floor_i64(self) -> i64 {
        self.floor().to_integer()
    }
    fn to_f64(self) -> f64 {
        ToPrimitive::to_f64(&self).unwrap_or(f64::NAN)
    }
}

impl Exponent for f64 {
    fn int(v: i64) -> Self {
        v as f64
    }
    fn half(self) -> Self {
        self / 2.0
    }
    fn floor_i64(self) -> i64 {
        self.floor() as i64
    }
    fn to_f64(self) -> f64 {
        self
    }
}

/// Slack used to flag floating `𝐤` values that sit on a kink.
pub const NEAR_TIE_EPS: f64 = 1e-9;

/// Checks that a floating `𝐤` is not within [`NEAR_TIE_EPS`] of an integer.
///
/// All kinks of the functions here sit where `𝐤` plus an integer (or twice
/// an integer plus one) crosses an integer, so this single test covers every
/// branch decision.
pub fn check_real_k(k: f64) -> Result<()> {
    if !k.is_finite() {
        return Err(Error::InvalidParameter(format!("k = {k} is not finite")));
    }
    if (k - k.round()).abs() < NEAR_TIE_EPS {
        return Err(Error::NearTie(format!(
            "k = {k} is within {NEAR_TIE_EPS} of an integer; min/abs branches are ambiguous, use a rational k"
        )));
    }
    Ok(())
}

/// `𝐤 = log(−κ²)/log q` as an exact rational when `|κ|² = q^{a/b}` for
/// some `b ≤ max_den`, else `None`.
pub fn exact_k(params: &QRacahParams, max_den: i64) -> Option<Rational64> {
    let k = params.kappa_exponent().to_f64();
    let q = params.q_exact();
    let kappa = params.kappa_exact();
    for den in 1..=max_den {
        let num = (k * den as f64).round() as i64;
        if (num as f64 - k * den as f64).abs() > 1e-6 || num.unsigned_abs() > 4096 {
            continue;
        }
        // q^num == |κ|^{2 den}
        let lhs = rational_pow(q, num);
        let rhs = rational_pow(kappa, 2 * den);
        if lhs == rhs {
            return Some(Rational64::new(num, den));
        }
    }
    None
}

fn rational_pow(r: &Rational, e: i64) -> Rational {
    let (n, d) = r.clone().into_numer_denom();
    let ea = e.unsigned_abs() as u32;
    let n: Integer = Pow::pow(n, ea);
    let d: Integer = Pow::pow(d, ea);
    if e >= 0 {
        Rational::from((n, d))
    } else {
        Rational::from((d, n))
    }
}

/// Parameters `(T, S, N, t, 𝐤)` of a vertical slice.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConcentrationParams<K> {
    pub horizon: i64,
    pub shift: i64,
    pub paths: i64,
    pub t: i64,
    pub k: K,
}

/// Densely packed `N−1` particles `{z₀, …, z₀+count−1}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PackedConfig {
    pub z0: i64,
    pub count: i64,
}

impl PackedConfig {
    pub fn sites(&self) -> impl Iterator<Item = i64> {
        self.z0..self.z0 + self.count
    }
}

/// Which of the two candidate minimizing intervals.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum IntervalVariant {
    I,
    IPrime,
}

/// `𝒢_𝐤(x,y,z | A) = (z−x)⁻ + (z−A+x+𝐤+1)⁻ − (z−y)⁻ − (z−A+y+𝐤+1)⁻`.
pub fn g_exp<K: Exponent>(k: K, x: i64, y: i64, z: i64, a: i64) -> K {
    let one = K::int(1);
    K::int(z - x).neg_part() + (K::int(z - a + x) + k + one).neg_part()
        - K::int(z - y).neg_part()
        - (K::int(z - a + y) + k + one).neg_part()
}

/// One telescoping step `g_𝐤(x, z | A)`, with
/// `𝒢(x,y,z) = sgn(y−x) Σ_{u=min}^{max−1} g(u, z)`.
pub fn g_step<K: Exponent>(k: K, x: i64, z: i64, a: i64) -> K {
    let one = K::int(1);
    K::int(z - x).neg_part() + (K::int(z - a + x) + k + one).neg_part()
        - K::int(z - x - 1).neg_part()
        - (K::int(z - a + x + 1) + k + one).neg_part()
}

/// `d_𝐤^A(x;y) = |x − ½(A−𝐤−1)| − |y − ½(A−𝐤−1)|`.
pub fn d_dist<K: Exponent>(k: K, a: i64, x: i64, y: i64) -> K {
    let mid = (K::int(a - 1) - k).half();
    (K::int(x) - mid).abs_val() - (K::int(y) - mid).abs_val()
}

/// The `(N−1)`-point interval `I` or `I′` around `½(A−𝐤−1)`.
pub fn minimizing_interval<K: Exponent>(k: K, a: i64, n: i64, variant: IntervalVariant) -> PackedConfig {
    let m = (K::int(a - 1) - k).half().floor_i64();
    let (lo, hi) = match variant {
        IntervalVariant::I => (m - (n - 1).div_euclid(2) + 1, m + n.div_euclid(2)),
        IntervalVariant::IPrime => (m - n.div_euclid(2) + 1, m + (n - 1).div_euclid(2)),
    };
    PackedConfig { z0: lo, count: hi - lo + 1 }
}

/// `Σ_{z ∈ config} 𝒢_𝐤(x,y,z | A)`.
pub fn g_sum<K: Exponent>(k: K, x: i64, y: i64, a: i64, sites: impl Iterator<Item = i64>) -> K {
    sites.fold(K::zero(), |acc, z| acc + g_exp(k, x, y, z, a))
}

/// Cdf of Lebesgue measure on `[a, b]` at `u`.
pub fn cdf<K: Exponent>(a: K, b: K, u: K) -> K {
    if u <= a {
        K::zero()
    } else if u >= b {
        b - a
    } else {
        u - a
    }
}

impl<K: Exponent> ConcentrationParams<K> {
    pub fn new(horizon: i64, shift: i64, paths: i64, t: i64, k: K) -> Self {
        ConcentrationParams { horizon, shift, paths, t, k }
    }

    /// `A = S + t`.
    pub fn a(&self) -> i64 {
        self.shift + self.t
    }

    /// `𝒲_𝐤(x | T,S,N,t)`.
    pub fn w_exp(&self, x: i64) -> K {
        let (tt, s, n, t, k) = (self.horizon, self.shift, self.paths, self.t, self.k);
        let i = K::int;
        i(s + t - 2 * x - 1)
            + i(s).min_of(i(n + x + 1) + k)
            + i(t).min_of(i(n + x + 1) + k)
            + i(s + t).min_of(k + i(2 * x + 1))
            - i(tt).min_of(i(x + 1) + k)
            - i(s + t).min_of(i(x + 1) + k)
            - i(s + t).min_of(k + i(2 * x + 3))
    }

    /// `sgn(x−y) Σ_{u=min}^{max−1} 𝒲(u)`.
    pub fn w_sum(&self, x: i64, y: i64) -> K {
        let s = (x.min(y)..x.max(y)).fold(K::zero(), |acc, u| acc + self.w_exp(u));
        if x > y {
            s
        } else {
            -s
        }
    }

    /// `𝓔_𝐤(x, y | z⃗) = −sgn(x−y) Σ 𝒲 + 2 Σ_i 𝒢(x, y, z_i | S+t)`.
    pub fn e_exp(&self, x: i64, y: i64, config: &[i64]) -> Result<K> {
        if config.iter().any(|&z| z == x || z == y) {
            return Err(Error::Domain(format!("configuration overlaps the moved points {x}, {y}")));
        }
        let g = g_sum(self.k, x, y, self.a(), config.iter().copied());
        Ok(-self.w_sum(x, y) + g + g)
    }

    /// `𝓗_𝐤(u, z₀)`.
    pub fn h_exp(&self, u: i64, z0: i64) -> K {
        let (s, n, t, k) = (self.shift, self.paths, self.t, self.k);
        let i = K::int;
        let br =
            (i(z0 - s - t + u + 1) + k).neg_part() - i(z0 - u - 1).neg_part() - (i(z0 - s - t + u + n) + k).neg_part()
                + i(z0 - u + n - 2).neg_part();
        self.w_exp(u) + br + br
    }

    /// `sgn(y−x) Σ_{u=min}^{max−1} 𝓗(u, z₀)`.
    pub fn h_integral(&self, x: i64, y: i64, z0: i64) -> K {
        let s = (x.min(y)..x.max(y)).fold(K::zero(), |acc, u| acc + self.h_exp(u, z0));
        if y > x {
            s
        } else {
            -s
        }
    }

    /// `𝓗` written through cdfs of segments.
    pub fn h_cdf(&self, u: i64, z0: i64) -> K {
        let (tt, s, n, t, k) = (self.horizon, self.shift, self.paths, self.t, self.k);
        let i = K::int;
        let uu = i(u);
        let one = i(1);
        let mid = (i(s + t - 1) - k).half();
        let two = |v: K| v + v;
        i(s + t - 2 * u - 1) - cdf(i(s - n - 1) - k, i(tt - 1) - k, uu) - cdf(i(t - n - 1) - k, i(t + s - 1) - k, uu)
            + two(cdf(i(z0 - 1), i(z0 + n - 2), uu))
            + two(cdf(i(s + t - n - z0) - k, i(s + t - 1 - z0) - k, uu))
            + two(cdf(mid - one, mid, uu))
    }

    /// Lower bound for `Σ 𝒢` when `y` sits in the packed block `z⃗*`:
    /// the packed sum plus [`ConcentrationParams::second_line`].
    pub fn stronger_bound(&self, x: i64, y: i64, packed: PackedConfig) -> K {
        g_sum(self.k, x, y, self.a(), packed.sites()) + self.second_line(x, y, packed)
    }

    /// The second line `−𝒢(x,y,y) + min{𝒢(x,y,z₀−1), 𝒢(x,y,z₀+N−1)}`.
    pub fn second_line(&self, x: i64, y: i64, packed: PackedConfig) -> K {
        let a = self.a();
        let k = self.k;
        let left = g_exp(k, x, y, packed.z0 - 1, a);
        let right = g_exp(k, x, y, packed.z0 + packed.count, a);
        left.min_of(right) - g_exp(k, x, y, y, a)
    }
}

/// Continuous profile `𝖧(𝘂) = 𝖲+𝗍−2𝘂 − F_{𝖲−𝖭,𝖳}(𝘂) − F_{𝗍−𝖭,𝗍+𝖲}(𝘂) + 4F_{½(𝖲+𝗍−𝖭),½(𝖲+𝗍+𝖭)}(𝘂)`.
pub fn h_continuous(geo: &ScaledGeometry, t: f64, u: f64) -> Result<f64> {
    if !(geo.has_waterfall() && t > geo.t_left() && t < geo.t_right()) {
        return Err(Error::Domain(format!("slice t = {t} has no waterfall")));
    }
    let (tt, s, n) = (geo.horizon, geo.shift, geo.paths);
    Ok(s + t - 2.0 * u - cdf(s - n, tt, u) - cdf(t - n, t + s, u) + 4.0 * cdf(0.5 * (s + t - n), 0.5 * (s + t + n), u))
}

/// `¾(𝗑−𝘆) + (1−2𝗑)⁻ − (1−2𝘆)⁻`, positive on the triangle with vertices
/// `(0,0)`, `(4/5,0)`, `(½,½)`.
pub fn boundary_inequality<K: Exponent>(x: K, y: K) -> Result<K> {
    if !(x >= y && y > K::zero()) {
        return Err(Error::Domain(format!("need x ≥ y > 0, got ({x:?}, {y:?})")));
    }
    let one = K::int(1);
    let three_quarters = K::int(3).half().half();
    Ok(three_quarters * (x - y) + (one - (x + x)).neg_part() - (one - (y + y)).neg_part())
}

/// Brute force `min Σ_{z∈Z} 𝒢(x,y,z|A)` over `(N−1)`-subsets `Z` of
/// `window`, excluding `x` and `y` only if `avoid` is set.
pub fn brute_force_min<K: Exponent>(
    k: K,
    x: i64,
    y: i64,
    a: i64,
    count: usize,
    window: std::ops::Range<i64>,
    avoid: bool,
) -> Option<K> {
    let sites: Vec<i64> = window.filter(|&z| !avoid || (z != x && z != y)).collect();
    let vals: Vec<K> = sites.iter().map(|&z| g_exp(k, x, y, z, a)).collect();
    let mut best: Option<K> = None;
    let mut idx: Vec<usize> = (0..count).collect();
    if count > vals.len() {
        return None;
    }
    loop {
        let s = idx.iter().fold(K::zero(), |acc, &i| acc + vals[i]);
        best = Some(match best {
            Some(b) if b <= s => b,
            _ => s,
        });
        // next combination
        let mut i = count;
        loop {
            if i == 0 {
                return best;
            }
            i -= 1;
            if idx[i] != i + vals.len() - count {
                break;
            }
            if i == 0 && idx[0] == vals.len() - count {
                return best;
            }
        }
        idx[i] += 1;
        for j in i + 1..count {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// Ratio helper: `𝐤` as `f64` from the global parameters.
pub fn k_of(params: &QRacahParams) -> f64 {
    params.kappa_exponent().to_f64()
}

/// `|x|` of an exponent, for reporting.
pub fn magnitude<K: Exponent>(v: K) -> f64 {
    v.to_f64().abs()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn r(n: i64, d: i64) -> Rational64 {
        Rational64::new(n, d)
    }

    #[test]
    fn g_vanishes_on_the_diagonal() {
        for z in -10..10 {
            assert_eq!(g_exp(r(43, 10), 3, 3, z, 15), r(0, 1));
        }
    }

    #[test]
    fn g_shape_on_the_sample_parameters() {
        // For (4, 10) the distance is negative; the nonpositive valley
        // shape belongs to the swapped pair, and 𝒢 is antisymmetric.
        let (x, y, a, k) = (10, 4, 15, r(43, 10));
        assert!(d_dist(k, a, x, y) > r(0, 1));
        for z in -10..30 {
            assert_eq!(g_exp(k, x, y, z, a), -g_exp(k, y, x, z, a));
        }
        let vals: Vec<Rational64> = (-10..30).map(|z| g_exp(k, x, y, z, a)).collect();
        assert!(vals.iter().all(|v| *v <= r(0, 1)));
        let mid = (Rational64::from_integer(a - 1) - k) / 2;
        for (i, w) in vals.windows(2).enumerate() {
            let z = -10 + i as i64;
            if Rational64::from_integer(z + 1) <= mid {
                assert!(w[1] <= w[0], "not decreasing at {z}");
            } else if Rational64::from_integer(z) >= mid {
                assert!(w[1] >= w[0], "not increasing at {z}");
            }
        }
    }

    #[test]
    fn d_properties() {
        let k = r(-11, 5);
        for x in -5..5 {
            for y in -5..5 {
                assert_eq!(d_dist(k, 7, x, y), -d_dist(k, 7, y, x));
            }
            assert_eq!(d_dist(k, 7, x, x), r(0, 1));
        }
    }

    #[test]
    fn odd_n_intervals_coincide() {
        for n in [1, 3, 5, 7] {
            for kn in -20..20 {
                let k = r(kn, 7);
                assert_eq!(
                    minimizing_interval(k, 11, n, IntervalVariant::I),
                    minimizing_interval(k, 11, n, IntervalVariant::IPrime)
                );
            }
        }
    }

    #[test]
    fn even_n_candidate_sums_differ_by_at_most_one() {
        for n in [2, 4, 6] {
            for kn in -30..30 {
                let k = r(kn, 4);
                for x in -6..20 {
                    for y in -6..20 {
                        if d_dist(k, 13, x, y) <= r(0, 1) {
                            continue;
                        }
                        let i = minimizing_interval(k, 13, n, IntervalVariant::I);
                        let ip = minimizing_interval(k, 13, n, IntervalVariant::IPrime);
                        let d = g_sum(k, x, y, 13, i.sites()) - g_sum(k, x, y, 13, ip.sites());
                        assert!(d.abs_val() <= r(1, 1), "n={n} k={k} x={x} y={y}");
                    }
                }
            }
        }
    }

    #[test]
    fn packed_interval_is_minimal() {
        for n in 2..=5i64 {
            for kn in [-7, -3, 0, 2, 5, 9] {
                let k = r(kn, 3);
                let a = 12;
                for (x, y) in [(0, 5), (-1, 6), (11, 4), (2, 3), (13, 1)] {
                    if d_dist(k, a, x, y) <= r(0, 1) {
                        continue;
                    }
                    let best = brute_force_min(k, x, y, a, (n - 1) as usize, -1..13, false).unwrap();
                    let i = g_sum(k, x, y, a, minimizing_interval(k, a, n, IntervalVariant::I).sites());
                    let ip = g_sum(k, x, y, a, minimizing_interval(k, a, n, IntervalVariant::IPrime).sites());
                    assert_eq!(best, i.min_of(ip), "n={n} k={k} x={x} y={y}");
                }
            }
        }
    }

    #[test]
    fn boundary_inequality_samples() {
        assert_eq!(boundary_inequality(r(1, 2), r(1, 2)).unwrap(), r(0, 1));
        assert!(boundary_inequality(0.4, 0.1).unwrap() > 0.0);
        assert!(boundary_inequality(0.9, 0.1).unwrap() <= 0.0);
        assert!(boundary_inequality(0.1, 0.4).is_err());
    }

    #[test]
    fn continuous_profile_signs() {
        let geo = ScaledGeometry::new(4.0, 2.0, 1.0).unwrap();
        let t = 2.0;
        assert_eq!(h_continuous(&geo, t, 2.0).unwrap(), 0.0);
        assert!(h_continuous(&geo, t, 0.5).unwrap() > 0.0);
        assert!(h_continuous(&geo, t, 3.5).unwrap() < 0.0);
        assert!(h_continuous(&geo, 0.5, 1.0).is_err());
    }

    #[test]
    fn near_tie_detection() {
        assert!(matches!(check_real_k(3.0 + 1e-12), Err(Error::NearTie(_))));
        assert!(check_real_k(-2.2).is_ok());
    }

    #[test]
    fn exact_k_recovers_rational_exponents() {
        use crate::num::Precision;
        // |κ|² = 4 = (1/2)^{-2}
        let p = QRacahParams::parse("1/2", "2", Precision::new(40)).unwrap();
        assert_eq!(exact_k(&p, 12), Some(r(-2, 1)));
        // |κ|² = 1/3 = (1/9)^{1/2}
        let p = QRacahParams::parse("1/9", "0.5773502691896257", Precision::new(40)).unwrap();
        assert_eq!(exact_k(&p, 12), None);
        let p = QRacahParams::parse("1/7", "4.3", Precision::new(40)).unwrap();
        assert_eq!(exact_k(&p, 12), None);
    }

    fn params_strategy() -> impl Strategy<Value = (ConcentrationParams<Rational64>, i64, i64, i64)> {
        (2i64..30, 1i64..30, 1i64..30, -40i64..40, 1i64..6)
            .prop_flat_map(|(tt, s, n, kn, kd)| {
                let s = s.min(tt - 1).max(1);
                (Just((tt, s, n, kn, kd)), 0..tt + 1)
            })
            .prop_flat_map(|((tt, s, n, kn, kd), t)| {
                let p = ConcentrationParams::new(tt, s, n, t, Rational64::new(kn, kd));
                (Just(p), -20i64..60, -20i64..60, -20i64..60)
            })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn packed_energy_is_a_discrete_integral((p, x, y, z0) in params_strategy()) {
            let packed: Vec<i64> = (z0..z0 + p.paths - 1).collect();
            prop_assume!(!packed.contains(&x) && !packed.contains(&y));
            let e = p.e_exp(x, y, &packed).unwrap();
            prop_assert_eq!(e, p.h_integral(x, y, z0));
        }

        #[test]
        fn h_equals_its_cdf_form((p, u, _y, z0) in params_strategy()) {
            prop_assert_eq!(p.h_exp(u, z0), p.h_cdf(u, z0));
        }

        #[test]
        fn g_telescopes((p, x, y, z) in params_strategy()) {
            let a = p.a();
            let s = (x.min(y)..x.max(y)).fold(Rational64::from_integer(0), |acc, u| acc + g_step(p.k, u, z, a));
            let s = if y > x { s } else { -s };
            prop_assert_eq!(g_exp(p.k, x, y, z, a), s);
        }

        #[test]
        fn w_sum_is_antisymmetric((p, x, y, _z) in params_strategy()) {
            prop_assert_eq!(p.w_sum(x, y), -p.w_sum(y, x));
        }

        #[test]
        fn continuous_profile_sign_structure(
            tt in 1.0f64..5.0, sf in 0.05f64..0.95, nf in 0.05f64..0.95, tf in 0.01f64..0.99, uf in 0.0f64..1.0
        ) {
            let s = sf * tt;
            let n = nf * tt;
            let geo = ScaledGeometry::new(tt, s, n).unwrap();
            prop_assume!(geo.has_waterfall() && geo.t_right() > geo.t_left());
            let t = geo.t_left() + tf * (geo.t_right() - geo.t_left());
            let lo = 0.5 * (s + t - n);
            let hi = 0.5 * (s + t + n);
            let u = lo - 1.0 + uf * (hi - lo + 2.0);
            let h = h_continuous(&geo, t, u).unwrap();
            if u < lo - 1e-9 {
                prop_assert!(h > 0.0);
            } else if u > hi + 1e-9 {
                prop_assert!(h < 0.0);
            } else if u > lo + 1e-9 && u < hi - 1e-9 {
                prop_assert!(h.abs() < 1e-9);
            }
        }
    }
}
