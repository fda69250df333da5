//! Reference tables, limiting densities, correlation decay, the density
//! surface and direct kernel evaluation.

use clap::Args;
use rug::Float;
use serde::Serialize;

use qracah::hexagon::HexagonParams;
use qracah::kernels2d::{
    barcode_entries_adaptive, barcode_start_digits, prelimit_barcode_adaptive, Lozenge, TwoDimKernel,
};
use qracah::limits::{k_limit_adaptive, LimitBarcode, Regularization};
use qracah::num::{format_rounded, format_sci, format_truncated, parse_rational, MAX_ADAPTIVE_DIGITS};
use qracah::{BigReal, QRacahParams};

use crate::output::{
    params, CliError, CliResult, GlobalArgs, IntList, IntRange, PairList, RealRange, Report, SIG_DIGITS,
};

fn sci(x: &BigReal) -> String {
    format_sci(x, SIG_DIGITS)
}

/// `(a_{k+1} − a_{k+2}) / (a_k − a_{k+1})` for each `k` with both neighbours.
fn ratios(a: &[BigReal]) -> Vec<Option<BigReal>> {
    (0..a.len())
        .map(|k| {
            if k + 2 >= a.len() {
                return None;
            }
            let num = Float::with_val(a[k].prec(), &a[k + 1] - &a[k + 2]);
            let den = Float::with_val(a[k].prec(), &a[k] - &a[k + 1]);
            if den.is_zero() {
                None
            } else {
                Some(num / den)
            }
        })
        .collect()
}

fn ratio_cell(r: &Option<BigReal>) -> String {
    r.as_ref().map(|v| format_sci(v, 10)).unwrap_or_default()
}

#[derive(Args, Debug, Serialize)]
pub struct PrelimitArgs {
    #[arg(long, default_value = "2/3")]
    pub q: String,
    /// Imaginary part of κ.
    #[arg(long, default_value = "2")]
    pub kappa: String,
    /// Scales of the canonical hexagon.
    #[arg(long = "L", default_value = "10..20")]
    pub scales: IntRange,
    /// Kernel arguments `s,t`, separated by `;`.
    #[arg(long, default_value = "0,0;6,1")]
    pub pairs: PairList,
    /// Significant digits two independent precisions must agree to.
    #[arg(long, default_value_t = 30)]
    pub target: u32,
    /// Decimals of the truncated column.
    #[arg(long, default_value_t = 8)]
    pub decimals: usize,
}

/// Barcode kernel on the canonical hexagons across scales.
pub fn prelimit_table(a: &PrelimitArgs, g: &GlobalArgs) -> CliResult<Report> {
    let p = params(&a.q, &a.kappa, g.digits(120))?;
    if a.scales.lo < 1 {
        return Err(CliError::Config("scales must be positive".into()));
    }
    for l in a.scales.iter() {
        let hex = HexagonParams::canonical(l)?;
        let est = barcode_start_digits(&hex, &p);
        if est > MAX_ADAPTIVE_DIGITS {
            return Err(CliError::SizeGuard(format!(
                "L={l} needs about {est} digits of precision (limit {MAX_ADAPTIVE_DIGITS}); each kernel entry then costs minutes to hours"
            )));
        }
    }
    let mut values = Vec::new();
    let mut precs = Vec::new();
    for l in a.scales.iter() {
        let (v, prec) = prelimit_barcode_adaptive(l, &p, &a.pairs.0, a.target)?;
        values.push(v);
        precs.push(prec.digits());
    }
    let mut r = Report::new(&["L", "s", "t", "value", "truncated", "ratio", "digits"]);
    for (j, &(s, t)) in a.pairs.0.iter().enumerate() {
        let col: Vec<BigReal> = values.iter().map(|v| v[j].clone()).collect();
        let rat = ratios(&col);
        for (i, l) in a.scales.iter().enumerate() {
            r.push(vec![
                l.to_string(),
                s.to_string(),
                t.to_string(),
                sci(&col[i]),
                format_truncated(&col[i], a.decimals),
                ratio_cell(&rat[i]),
                precs[i].to_string(),
            ]);
        }
    }
    r.notes.push("ratio = (a(L+1) - a(L+2)) / (a(L) - a(L+1)) along each (s,t) column".into());
    Ok(r)
}

#[derive(Args, Debug, Serialize)]
pub struct LimitArgs {
    #[arg(long, default_value = "2/3")]
    pub q: String,
    #[arg(long, default_value = "2")]
    pub kappa: String,
    /// Truncation orders of the limiting series.
    #[arg(long = "M", default_value = "12..22")]
    pub orders: IntRange,
    #[arg(long, default_value = "0,0;6,1")]
    pub pairs: PairList,
    #[arg(long, default_value_t = 30)]
    pub target: u32,
    #[arg(long, default_value_t = 8)]
    pub decimals: usize,
}

/// Limiting barcode kernel across truncation orders.
pub fn limit_table(a: &LimitArgs, g: &GlobalArgs) -> CliResult<Report> {
    let p = params(&a.q, &a.kappa, g.digits(60))?;
    if a.orders.lo < 0 || a.orders.hi > 400 {
        return Err(CliError::SizeGuard(format!("orders must lie in 0..400, got {}", a.orders)));
    }
    let mut values = Vec::new();
    let mut incs = Vec::new();
    let mut precs = Vec::new();
    for m in a.orders.iter() {
        let (v, prec) = k_limit_adaptive(&p, m, Regularization::HalfStep, &a.pairs.0, a.target)?;
        let k = LimitBarcode::new(&p.with_precision(prec), m)?;
        let inc = a.pairs.0.iter().map(|&(s, t)| k.last_increment(s, t)).collect::<qracah::Result<Vec<_>>>()?;
        values.push(v);
        incs.push(inc);
        precs.push(prec.digits());
    }
    let mut r = Report::new(&["M", "s", "t", "value", "truncated", "last_increment", "ratio", "digits"]);
    for (j, &(s, t)) in a.pairs.0.iter().enumerate() {
        let col: Vec<BigReal> = values.iter().map(|v| v[j].clone()).collect();
        let rat = ratios(&col);
        for (i, m) in a.orders.iter().enumerate() {
            r.push(vec![
                m.to_string(),
                s.to_string(),
                t.to_string(),
                sci(&col[i]),
                format_truncated(&col[i], a.decimals),
                format_sci(&incs[i][j], 6),
                ratio_cell(&rat[i]),
                precs[i].to_string(),
            ]);
        }
    }
    r.notes.push("last_increment = |k(M) - k(M-1)|, the error proxy of the truncated series".into());
    Ok(r)
}

#[derive(Args, Debug, Serialize)]
pub struct DiagonalArgs {
    #[arg(long, default_value = "1/7")]
    pub q: String,
    #[arg(long, default_value = "3")]
    pub kappa: String,
    /// Scale of the canonical hexagon for the finite column.
    #[arg(long = "L", default_value_t = 6)]
    pub scale: i64,
    /// Truncation order of the limiting column.
    #[arg(long = "M", default_value_t = 20)]
    pub order: i64,
    /// Diagonal offsets `t` of `K(t,t)`.
    #[arg(long, default_value = "-7..7", allow_hyphen_values = true)]
    pub range: IntRange,
    #[arg(long, default_value_t = 25)]
    pub target: u32,
    #[arg(long, default_value_t = 10)]
    pub decimals: usize,
}

/// Diagonal of the finite and the limiting barcode kernels side by side.
pub fn diagonal_table(a: &DiagonalArgs, g: &GlobalArgs) -> CliResult<Report> {
    let p = params(&a.q, &a.kappa, g.digits(60))?;
    let pairs: Vec<(i64, i64)> = a.range.iter().map(|t| (t, t)).collect();
    let (pre, pre_prec) = prelimit_barcode_adaptive(a.scale, &p, &pairs, a.target)?;
    let (lim, lim_prec) = k_limit_adaptive(&p, a.order, Regularization::HalfStep, &pairs, a.target)?;
    let mut r = Report::new(&["t", "finite", "finite_truncated", "limit", "limit_truncated", "difference"]);
    for (i, t) in a.range.iter().enumerate() {
        let d = Float::with_val(pre[i].prec(), &pre[i] - &lim[i]);
        r.push(vec![
            t.to_string(),
            sci(&pre[i]),
            format_truncated(&pre[i], a.decimals),
            sci(&lim[i]),
            format_truncated(&lim[i], a.decimals),
            format_sci(&d, 6),
        ]);
    }
    let ends = Float::with_val(lim[0].prec(), &lim[lim.len() - 1] - &lim[0]).abs();
    r.notes.push(format!(
        "finite column at {} digits, limit column at {} digits",
        pre_prec.digits(),
        lim_prec.digits()
    ));
    r.notes.push(format!("|k({hi},{hi}) - k({lo},{lo})| = {}", format_sci(&ends, 6), hi = a.range.hi, lo = a.range.lo));
    Ok(r)
}

#[derive(Args, Debug, Serialize)]
pub struct KasteleynArgs {
    #[arg(long, default_value = "1/7")]
    pub q: String,
    #[arg(long, default_value = "3")]
    pub kappa: String,
    #[arg(long = "L", default_value_t = 16)]
    pub scale: i64,
    /// Slice offset of the probe.
    #[arg(long, default_value_t = 8)]
    pub t0: i64,
    /// Probe lines, comma separated.
    #[arg(long, default_value = "36,48")]
    pub x0: IntList,
    /// Exponent of the conjugating factor.
    #[arg(long, default_value_t = 0)]
    pub conj: i64,
    #[arg(long, default_value = "-2..2", allow_hyphen_values = true)]
    pub range: IntRange,
    #[arg(long, default_value_t = 50)]
    pub target: u32,
    #[arg(long, default_value_t = 42)]
    pub decimals: usize,
}

/// Diagonal barcode entries of the inverse Kasteleyn matrix at high precision.
pub fn kasteleyn_table(a: &KasteleynArgs, g: &GlobalArgs) -> CliResult<Report> {
    let hex = HexagonParams::canonical(a.scale)?;
    let probe = params(&a.q, &a.kappa, 30)?;
    let est = barcode_start_digits(&hex, &probe);
    if est > MAX_ADAPTIVE_DIGITS {
        return Err(CliError::SizeGuard(format!("L={} needs about {est} digits of precision", a.scale)));
    }
    // start above the cancellation estimate so one round usually suffices
    let p = params(&a.q, &a.kappa, g.digits(est + est / 4))?;
    let pairs: Vec<(i64, i64)> = a.range.iter().map(|t| (t, t)).collect();
    let sig = a.decimals + 3;
    let mut r = Report::new(&["t", "x0", "value", "truncated", "digits"]);
    for &x0 in &a.x0.0 {
        let (v, prec) = barcode_entries_adaptive(hex, &p, a.t0, x0, a.conj, &pairs, a.target)?;
        for (i, t) in a.range.iter().enumerate() {
            r.push(vec![
                t.to_string(),
                x0.to_string(),
                format_sci(&v[i], sig),
                format_truncated(&v[i], a.decimals),
                prec.digits().to_string(),
            ]);
        }
    }
    Ok(r)
}

#[derive(Args, Debug, Serialize)]
pub struct DensityArgs {
    #[arg(long, default_value = "1/7")]
    pub q: String,
    #[arg(long, default_value = "4.3")]
    pub kappa: String,
    #[arg(long = "M", default_value_t = 20)]
    pub order: i64,
    #[arg(long, default_value_t = 25)]
    pub target: u32,
}

/// One- and two-point statistics of the limiting barcode process.
pub fn densities(a: &DensityArgs, g: &GlobalArgs) -> CliResult<Report> {
    let p = params(&a.q, &a.kappa, g.digits(60))?;
    let pairs: Vec<(i64, i64)> = (0..=3).flat_map(|s| (0..=3).map(move |t| (s, t))).collect();
    let (_, prec) = k_limit_adaptive(&p, a.order, Regularization::HalfStep, &pairs, a.target)?;
    let k = LimitBarcode::new(&p.with_precision(prec), a.order)?;
    let (even, odd) = k.rho_even_odd()?;
    let sum = Float::with_val(even.prec(), &even + &odd);
    let mut r = Report::new(&["quantity", "value", "truncated", "rounded"]);
    let mut row = |name: &str, v: BigReal| {
        r.push(vec![name.to_string(), sci(&v), format_truncated(&v, 6), format_rounded(&v, 6)])
    };
    row("rho_even", even);
    row("rho_odd", odd);
    row("rho_even+rho_odd", sum);
    row("det[0,1]", k.det(&[0, 1])?);
    row("det[1,2]", k.det(&[1, 2])?);
    row("det[0,2]", k.det(&[0, 2])?);
    row("det[1,3]", k.det(&[1, 3])?);
    row("last_increment(0,0)", k.last_increment(0, 0)?);
    row("last_increment(1,1)", k.last_increment(1, 1)?);
    r.notes.push(format!("evaluated at {} digits", prec.digits()));
    Ok(r)
}

#[derive(Args, Debug, Serialize)]
pub struct DecayArgs {
    #[arg(long, default_value = "1/7")]
    pub q: String,
    #[arg(long, default_value = "3")]
    pub kappa: String,
    #[arg(long = "M", default_value_t = 20)]
    pub order: i64,
    /// Largest separation.
    #[arg(long, default_value_t = 16)]
    pub tmax: i64,
    #[arg(long, default_value_t = 20)]
    pub target: u32,
}

/// Covariance `−K(0,t)²` and `log|K(0,t)| / log q` against the separation.
pub fn corr_decay(a: &DecayArgs, g: &GlobalArgs) -> CliResult<Report> {
    if a.tmax < 1 || a.tmax > 200 {
        return Err(CliError::Config(format!("tmax must lie in 1..200, got {}", a.tmax)));
    }
    let p = params(&a.q, &a.kappa, g.digits(60))?;
    let pairs: Vec<(i64, i64)> = (1..=a.tmax).map(|t| (0, t)).collect();
    let (_, prec) = k_limit_adaptive(&p, a.order, Regularization::HalfStep, &pairs, a.target)?;
    let k = LimitBarcode::new(&p.with_precision(prec), a.order)?;
    let mut r = Report::new(&["t", "kernel", "covariance", "log_ratio"]);
    for t in 1..=a.tmax {
        let (cov, lr) = k.two_point(t)?;
        r.push(vec![t.to_string(), sci(&k.kernel(0, t)?), sci(&cov), format_sci(&lr, 10)]);
    }
    Ok(r)
}

#[derive(Args, Debug, Serialize)]
pub struct SurfaceArgs {
    #[arg(long = "q-range", default_value = "0.05..0.95")]
    pub q_range: RealRange,
    #[arg(long = "kappa-range", default_value = "0.1..3")]
    pub kappa_range: RealRange,
    #[arg(long, default_value_t = 0.05)]
    pub step: f64,
    #[arg(long = "M", default_value_t = 12)]
    pub order: i64,
    #[arg(long, default_value_t = 12)]
    pub target: u32,
}

/// Rational grid coordinate `lo + i·step`, kept to six decimals.
fn grid_value(lo: f64, step: f64, i: usize) -> String {
    let s = format!("{:.6}", lo + step * i as f64);
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s.is_empty() {
        "0".into()
    } else {
        s.to_string()
    }
}

fn grid(r: RealRange, step: f64) -> Vec<String> {
    let n = ((r.hi - r.lo) / step + 1e-9).floor() as usize;
    (0..=n).map(|i| grid_value(r.lo, step, i)).collect()
}

/// `ρ_even` over a `(q, κ)` grid; singular pairs are flagged instead of evaluated.
pub fn density_surface(a: &SurfaceArgs, g: &GlobalArgs) -> CliResult<Report> {
    if !(a.step > 0.0) {
        return Err(CliError::Config("step must be positive".into()));
    }
    if a.q_range.lo <= 0.0 || a.q_range.hi >= 1.0 || a.kappa_range.lo <= 0.0 {
        return Err(CliError::Config("need 0 < q < 1 and kappa > 0".into()));
    }
    let qs = grid(a.q_range, a.step);
    let ks = grid(a.kappa_range, a.step);
    if qs.len() * ks.len() > 100_000 {
        return Err(CliError::SizeGuard(format!("{} grid points", qs.len() * ks.len())));
    }
    let mut r = Report::new(&["q", "kappa", "rho_even", "flag"]);
    for qv in &qs {
        for kv in &ks {
            let p: QRacahParams = params(qv, kv, g.digits(40))?;
            let mutual = parse_rational(qv).ok().zip(parse_rational(kv).ok()).is_some_and(|(a, b)| a * b == 1);
            if mutual || p.is_theta_singular() {
                r.push(vec![qv.clone(), kv.clone(), String::new(), "singular".into()]);
                continue;
            }
            match k_limit_adaptive(&p, a.order, Regularization::HalfStep, &[(0, 0)], a.target) {
                Ok((v, _)) => r.push(vec![qv.clone(), kv.clone(), format_sci(&v[0], 12), String::new()]),
                Err(e) => r.push(vec![qv.clone(), kv.clone(), String::new(), format!("error: {e}")]),
            }
        }
    }
    r.notes.push(
        "the surface is computed in the fixed conjugation regime; no (q,kappa) -> (1/q,1/kappa) symmetry is assumed"
            .into(),
    );
    Ok(r)
}

#[derive(Args, Clone, Debug, Serialize)]
pub struct KernelEvalArgs {
    #[arg(long = "T", default_value_t = 4)]
    pub horizon: i64,
    #[arg(long = "S", default_value_t = 2)]
    pub shift: i64,
    #[arg(long = "N", default_value_t = 2)]
    pub paths: i64,
    #[arg(long, default_value = "1/2")]
    pub q: String,
    #[arg(long, default_value = "3/2")]
    pub kappa: String,
    /// Points `s,x,t,y` separated by `;`: kernel and inverse Kasteleyn entries.
    #[arg(long, allow_hyphen_values = true)]
    pub points: Option<String>,
    /// Lozenges `H|S|V:t:y` separated by `,`: joint probability.
    #[arg(long, allow_hyphen_values = true)]
    pub lozenges: Option<String>,
}

fn parse_lozenge(s: &str) -> CliResult<Lozenge> {
    let parts: Vec<&str> = s.trim().split(':').collect();
    let bad = || CliError::Config(format!("lozenge {s:?}: expected H|S|V:t:y"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let t: i64 = parts[1].parse().map_err(|_| bad())?;
    let y: i64 = parts[2].parse().map_err(|_| bad())?;
    Ok(match parts[0] {
        "H" | "h" => Lozenge::Horizontal { t, y },
        "S" | "s" => Lozenge::Square { t, y },
        "V" | "v" => Lozenge::Vertical { t, y },
        _ => return Err(bad()),
    })
}

/// Direct evaluation of the two-dimensional kernel on a small hexagon.
pub fn kernel_eval(a: &KernelEvalArgs, g: &GlobalArgs) -> CliResult<Report> {
    let hex = HexagonParams::new(a.horizon, a.shift, a.paths)?;
    let p = params(&a.q, &a.kappa, g.digits(60))?;
    let k = TwoDimKernel::new(hex, &p);
    let mut r = Report::new(&["quantity", "arguments", "real", "imaginary"]);
    if a.points.is_none() && a.lozenges.is_none() {
        return Err(CliError::Config("give --points or --lozenges".into()));
    }
    if let Some(pts) = &a.points {
        for item in pts.split(';') {
            let v: IntList = item.parse().map_err(CliError::Config)?;
            let [s, x, t, y] = v.0[..] else {
                return Err(CliError::Config(format!("point {item:?}: expected s,x,t,y")));
            };
            let kv = k.kernel(s, x, t, y)?;
            r.push(vec!["kernel".into(), item.trim().into(), sci(&kv), sci(&p.zero())]);
            let inv = k.kast_inv(s, x, t, y)?;
            r.push(vec!["inverse_kasteleyn".into(), item.trim().into(), sci(&inv.re), sci(&inv.im)]);
        }
    }
    if let Some(ls) = &a.lozenges {
        let list = ls.split(',').map(parse_lozenge).collect::<CliResult<Vec<_>>>()?;
        let v = k.lozenge_probability(&list)?;
        r.push(vec!["probability".into(), ls.clone(), sci(&v.re), sci(&v.im)]);
    }
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn global() -> GlobalArgs {
        GlobalArgs { precision: None, seed: 1, out: None, format: None }
    }

    #[test]
    fn grid_values_are_exact_decimals() {
        let g = grid(RealRange { lo: 0.05, hi: 0.2 }, 0.05);
        assert_eq!(g, vec!["0.05", "0.1", "0.15", "0.2"]);
    }

    #[test]
    fn ratios_of_geometric_sequence() {
        let p = params("1/2", "1", 30).unwrap();
        let a: Vec<BigReal> = (0..5).map(|k| p.one() - p.qpow(k)).collect();
        let r = ratios(&a);
        assert!((r[0].as_ref().unwrap().to_f64() - 0.5).abs() < 1e-25);
        assert!(r[3].is_none() && r[4].is_none());
    }

    #[test]
    fn kernel_eval_probabilities_of_one_triangle_sum_to_one() {
        let a = KernelEvalArgs {
            horizon: 4,
            shift: 2,
            paths: 2,
            q: "1/2".into(),
            kappa: "3/2".into(),
            points: Some("0,0,0,0".into()),
            lozenges: None,
        };
        let r = kernel_eval(&a, &global()).unwrap();
        assert_eq!(r.rows.len(), 2);
        let mut total = 0.0;
        for l in ["H:0:1", "S:0:1", "V:0:1"] {
            let a = KernelEvalArgs { points: None, lozenges: Some(l.into()), ..a.clone() };
            let r = kernel_eval(&a, &global()).unwrap();
            total += r.rows[0][2].parse::<f64>().unwrap();
        }
        assert!((total - 1.0).abs() < 1e-20);
    }

    #[test]
    fn densities_match_reference() {
        let r =
            densities(&DensityArgs { q: "1/7".into(), kappa: "4.3".into(), order: 20, target: 20 }, &global()).unwrap();
        assert_eq!(r.rows[0][2], "0.345174");
        assert_eq!(r.rows[1][2], "0.654825");
        assert_eq!(r.rows[1][3], "0.654826");
    }

    #[test]
    fn bad_lozenge_is_a_config_error() {
        assert!(matches!(parse_lozenge("X:1:2"), Err(CliError::Config(_))));
        assert_eq!(parse_lozenge("v:1:-2").unwrap(), Lozenge::Vertical { t: 1, y: -2 });
    }
}
