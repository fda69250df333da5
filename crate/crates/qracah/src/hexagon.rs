//! Hexagon geometry: slices, parameter zones, coordinate shifts, and the
//! region classifier of the scaled picture.
//!
//! A hexagon with side lengths `a, b, c` is described by `T = b + c`
//! (number of steps), `S = c` (shift of the end points) and `N = a`
//! (number of paths).

use crate::error::{Error, Result};
use crate::qspecial::QPower;

/// Integer hexagon `(T, S, N)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct HexagonParams {
    /// `T = b + c`, the number of slices minus one.
    pub horizon: i64,
    /// `S = c`, how far the paths climb in total.
    pub shift: i64,
    /// `N = a`, the number of paths.
    pub paths: i64,
    /// Scale `L` of the canonical family `T = 8L`, `N = S = 4L`, if any.
    pub scale: Option<i64>,
}

impl HexagonParams {
    pub fn new(horizon: i64, shift: i64, paths: i64) -> Result<Self> {
        if !(horizon > shift && shift > 0 && paths > 0) {
            return Err(Error::InvalidParameter(format!(
                "need T > S > 0 and N > 0, got T={horizon} S={shift} N={paths}"
            )));
        }
        Ok(HexagonParams { horizon, shift, paths, scale: None })
    }

    /// Hexagon with sides `a, b, c`.
    pub fn from_sides(a: i64, b: i64, c: i64) -> Result<Self> {
        Self::new(b + c, c, a)
    }

    /// Canonical family `T = 8L`, `N = S = 4L`.
    pub fn canonical(scale: i64) -> Result<Self> {
        if scale < 1 {
            return Err(Error::InvalidParameter(format!("scale must be positive, got {scale}")));
        }
        let mut h = Self::new(8 * scale, 4 * scale, 4 * scale)?;
        h.scale = Some(scale);
        Ok(h)
    }

    /// `(T, S, N)`.
    pub fn tsn(&self) -> (i64, i64, i64) {
        (self.horizon, self.shift, self.paths)
    }

    fn check_slice(&self, t: i64) -> Result<()> {
        if t < 0 || t > self.horizon {
            return Err(Error::Domain(format!("slice {t} outside [0, {}]", self.horizon)));
        }
        Ok(())
    }

    /// Inclusive admissible positions on slice `t`.
    pub fn slice_range(&self, t: i64) -> Result<(i64, i64)> {
        self.check_slice(t)?;
        let (tt, s, n) = self.tsn();
        Ok(((t + s - tt).max(0), (t + n - 1).min(s + n - 1)))
    }

    /// Number of holes (horizontal lozenges) on slice `t`.
    pub fn holes_on_slice(&self, t: i64) -> Result<i64> {
        let (lo, hi) = self.slice_range(t)?;
        Ok(hi - lo + 1 - self.paths)
    }

    /// Which zone formula applies on slice `t` (1 to 4). Border slices get the
    /// lower-numbered zone.
    pub fn zone_index(&self, t: i64) -> Result<u8> {
        self.check_slice(t)?;
        let (tt, s, _) = self.tsn();
        Ok(if t <= (s - 1).min(tt - s - 1) {
            1
        } else if s <= t && t < tt - s {
            2
        } else if tt - s <= t && t < s {
            3
        } else {
            4
        })
    }

    /// Zone parameters on slice `t`.
    pub fn zone_of(&self, t: i64) -> Result<ZoneParams> {
        let z = self.zone_index(t)?;
        Ok(self.zone_formula(z, t))
    }

    /// The formula of zone `zone` evaluated at slice `t`, regardless of
    /// whether `t` lies in that zone. Used to check border agreement.
    pub fn zone_formula(&self, zone: u8, t: i64) -> ZoneParams {
        let (tt, s, n) = self.tsn();
        let (m, a, b, g, d) = match zone {
            1 => (t + n - 1, -s - n, s - tt - n, -t - n, -s + n),
            2 => (s + n - 1, -t - n, t - tt - n, -s - n, -t + n),
            3 => (tt - s + n - 1, -tt - n + t, -t - n, -tt - n + s, -tt + t + n),
            _ => (tt - t + n - 1, -tt - n + s, -s - n, -tt - n + t, -tt + s + n),
        };
        ZoneParams {
            zone,
            m,
            alpha: QPower::q(a),
            beta: QPower::q(b),
            gamma: QPower::q(g),
            delta: QPower::kappa_sq_q(d),
        }
    }

    /// The zone coordinate `x̃` of slice position `x`.
    pub fn tilde_x(&self, t: i64, x: i64) -> Result<i64> {
        let z = self.zone_index(t)?;
        let (tt, s, _) = self.tsn();
        Ok(if z <= 2 { x } else { x + tt - t - s })
    }

    /// Inverse of [`tilde_x`](Self::tilde_x).
    pub fn untilde_x(&self, t: i64, xt: i64) -> Result<i64> {
        let z = self.zone_index(t)?;
        let (tt, s, _) = self.tsn();
        Ok(if z <= 2 { xt } else { xt - (tt - t - s) })
    }

    /// Last slice of the first zone, `min(S−1, T−S−1)`.
    pub fn first_zone_end(&self) -> i64 {
        (self.shift - 1).min(self.horizon - self.shift - 1)
    }

    pub fn in_first_zone(&self, t: i64) -> bool {
        t >= 0 && t <= self.first_zone_end()
    }

    /// Total number of holes, `S(T−S)`.
    pub fn total_holes(&self) -> i64 {
        self.shift * (self.horizon - self.shift)
    }

    pub fn scaled(&self) -> ScaledGeometry {
        let l = self.scale.unwrap_or(1) as f64;
        ScaledGeometry::new(self.horizon as f64 / l, self.shift as f64 / l, self.paths as f64 / l)
            .expect("a valid hexagon has positive sides")
    }
}

/// The parameters `(M, α, β, γ, δ)` of the q-Racah ensemble on a slice.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct ZoneParams {
    pub zone: u8,
    pub m: i64,
    pub alpha: QPower,
    pub beta: QPower,
    pub gamma: QPower,
    pub delta: QPower,
}

impl ZoneParams {
    /// Same parameters, ignoring which zone label produced them.
    pub fn same_values(&self, other: &ZoneParams) -> bool {
        self.m == other.m
            && self.alpha == other.alpha
            && self.beta == other.beta
            && self.gamma == other.gamma
            && self.delta == other.delta
    }
}

/// Region of the scaled hexagon containing a point.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Region {
    OutsideHexagon,
    /// The center line `𝗑 = (𝗍+𝖲)/2` inside the waterfall.
    Center,
    /// The waterfall (closed; its boundary is reported here too).
    Waterfall,
    /// Frozen region above the saturation band.
    Above,
    /// Frozen region below the saturation band.
    Below,
    /// Saturation band outside the waterfall.
    BandOutsideWaterfall,
}

/// Scaled hexagon `(𝖳, 𝖲, 𝖭)` with positive real sides.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScaledGeometry {
    pub horizon: f64,
    pub shift: f64,
    pub paths: f64,
}

const EPS: f64 = 1e-12;

impl ScaledGeometry {
    pub fn new(horizon: f64, shift: f64, paths: f64) -> Result<Self> {
        if !(horizon > 0.0 && shift > 0.0 && paths > 0.0 && horizon > shift) {
            return Err(Error::InvalidParameter(format!("need T > S > 0 and N > 0, got {horizon}, {shift}, {paths}")));
        }
        Ok(ScaledGeometry { horizon, shift, paths })
    }

    /// Left end `𝗍_l = |𝖭−𝖲|` of the waterfall.
    pub fn t_left(&self) -> f64 {
        (self.paths - self.shift).abs()
    }

    /// Right end `𝗍_r = min(𝖭+𝖲, 2𝖳−𝖭−𝖲)`.
    pub fn t_right(&self) -> f64 {
        (self.paths + self.shift).min(2.0 * self.horizon - self.paths - self.shift)
    }

    pub fn has_waterfall(&self) -> bool {
        self.paths < self.horizon
    }

    pub fn in_hexagon(&self, t: f64, x: f64) -> bool {
        let (tt, s, n) = (self.horizon, self.shift, self.paths);
        0.0 < t && t < tt && (t - tt + s).max(0.0) < x && x < (s + n).min(t + n)
    }

    fn in_band_range(&self, t: f64) -> bool {
        self.t_left() < t && t < self.t_right()
    }

    /// Point above the saturation band.
    pub fn above(&self, t: f64, x: f64) -> bool {
        let (tt, s, n) = (self.horizon, self.shift, self.paths);
        if n > tt {
            return x > n + (t - tt + s).max(0.0);
        }
        (self.in_band_range(t) && x > 0.5 * (s + t + n))
            || (t <= self.t_left() && n > s && x > n)
            || (t >= self.t_right() && s + n > tt && x > s + n + t - tt)
    }

    /// Point below the saturation band.
    pub fn below(&self, t: f64, x: f64) -> bool {
        let (tt, s, n) = (self.horizon, self.shift, self.paths);
        (self.in_band_range(t) && x < 0.5 * (s + t - n))
            || (t <= self.t_left() && n < s && x < t)
            || (t >= self.t_right() && s + n < tt && x < s)
    }

    /// Tag a point. Precedence: outside, center, waterfall (closed), above,
    /// below, rest of the band.
    pub fn classify(&self, t: f64, x: f64) -> Region {
        if !self.in_hexagon(t, x) {
            return Region::OutsideHexagon;
        }
        if self.has_waterfall() {
            let (tl, tr) = (self.t_left(), self.t_right());
            if tl < t && t < tr && (2.0 * x - self.shift - t).abs() < EPS {
                return Region::Center;
            }
            if tl - EPS <= t && t <= tr + EPS && (2.0 * x - self.shift - t).abs() <= self.paths + EPS {
                return Region::Waterfall;
            }
        }
        if self.above(t, x) {
            Region::Above
        } else if self.below(t, x) {
            Region::Below
        } else {
            Region::BandOutsideWaterfall
        }
    }
}
