//! Invariant suites behind `qracah verify`.

use std::collections::HashMap;

use clap::{Args, ValueEnum};
use num_rational::Rational64;
use rand::Rng;
use rug::Float;
use serde::Serialize;

use qracah::concentration::{
    brute_force_min, d_dist, g_exp, g_step, g_sum, minimizing_interval, ConcentrationParams, IntervalVariant,
};
use qracah::hexagon::HexagonParams;
use qracah::kernels2d::{Lozenge, TwoDimKernel};
use qracah::limits::{gctr, k_limit_adaptive, tctr_apply, FnFamily, HalfLattice, Regularization};
use qracah::ope::{slice_kernel, SliceBasis};
use qracah::sampling::{
    enumerate, enumeration_one_point, enumeration_probability, ChainConfig, ChainWeights, PathEnsemble, RngState,
};
use qracah::BigReal;

use crate::output::{params, CliResult, GlobalArgs, Report};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    /// Orthonormal bases and fixed-slice kernels.
    Ope,
    /// Lozenge probabilities from the two-dimensional kernel against enumeration.
    Kernels,
    /// Limiting barcode kernel and the center-line operator.
    Limits,
    /// The half-integer family and its identities.
    #[value(alias = "appendixA")]
    Family,
    /// Exact exponent calculus.
    Concentration,
    /// Enumeration, determinant formula and Markov chains on the (2,2,2) hexagon.
    OracleTriangle,
}

#[derive(Args, Debug, Serialize)]
pub struct VerifyArgs {
    #[arg(value_enum)]
    pub suite: Suite,
}

struct Check {
    name: String,
    ok: bool,
    value: String,
    tolerance: String,
}

#[derive(Default)]
struct Checks(Vec<Check>);

impl Checks {
    fn below(&mut self, name: &str, value: f64, tol: f64) {
        self.0.push(Check {
            name: name.into(),
            ok: value < tol,
            value: format!("{value:.3e}"),
            tolerance: format!("< {tol:.0e}"),
        });
    }

    fn holds(&mut self, name: &str, ok: bool, value: String) {
        self.0.push(Check { name: name.into(), ok, value, tolerance: "holds".into() });
    }
}

fn diff(a: &BigReal, b: &BigReal) -> f64 {
    Float::with_val(a.prec().max(b.prec()), a - b).abs().to_f64()
}

/// Runs a suite. The report has one row per check; the flag is false if any failed.
pub fn run(a: &VerifyArgs, g: &GlobalArgs) -> CliResult<(Report, bool)> {
    let mut c = Checks::default();
    match a.suite {
        Suite::Ope => ope(&mut c, g)?,
        Suite::Kernels => kernels(&mut c, g)?,
        Suite::Limits => limits(&mut c, g)?,
        Suite::Family => family(&mut c, g)?,
        Suite::Concentration => concentration(&mut c, g),
        Suite::OracleTriangle => oracle(&mut c, g)?,
    }
    let ok = c.0.iter().all(|k| k.ok);
    let mut r = Report::new(&["check", "ok", "value", "tolerance"]);
    for k in c.0 {
        r.push(vec![k.name, k.ok.to_string(), k.value, k.tolerance]);
    }
    Ok((r, ok))
}

fn ope(c: &mut Checks, g: &GlobalArgs) -> CliResult<()> {
    let hex = HexagonParams::new(7, 3, 3)?;
    let p = params("1/2", "3/2", g.digits(60))?;
    let (mut orth, mut idem, mut trace): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for t in 0..=hex.horizon {
        let b = SliceBasis::new(hex, &p, t)?;
        let cols: Vec<_> = b.positions().map(|x| b.column(x)).collect::<qracah::Result<_>>()?;
        let dim = (b.m() + 1) as usize;
        for n in 0..dim {
            for m in 0..dim {
                let mut s = p.zero();
                for col in &cols {
                    s += Float::with_val(p.bits(), &col[n] * &col[m]);
                }
                orth = orth.max(diff(&s, &if n == m { p.one() } else { p.zero() }));
            }
        }
        let k = slice_kernel(&b)?.entries;
        let mut tr = p.zero();
        for i in 0..k.len() {
            tr += &k[i][i];
            for j in 0..k.len() {
                let mut s = p.zero();
                for (l, row) in k.iter().enumerate() {
                    s += Float::with_val(p.bits(), &k[i][l] * &row[j]);
                }
                idem = idem.max(diff(&s, &k[i][j]));
            }
        }
        trace = trace.max(diff(&tr, &p.int(hex.paths)));
    }
    c.below("basis orthonormal on every slice of T=7 S=3 N=3", orth, 1e-40);
    c.below("slice kernel is a projection", idem, 1e-40);
    c.below("slice kernel trace equals N", trace, 1e-40);
    Ok(())
}

fn kernels(c: &mut Checks, g: &GlobalArgs) -> CliResult<()> {
    let hex = HexagonParams::from_sides(2, 3, 2)?;
    let p = params("1/2", "3/2", g.digits(60))?;
    let list = enumerate(hex, &p)?;
    let k = TwoDimKernel::new(hex, &p);
    let (tt, s, n) = hex.tsn();
    let mut singles = Vec::new();
    let (mut worst, mut imag): (f64, f64) = (0.0, 0.0);
    for t in 0..tt {
        for y in -1..=s + n + 1 {
            for l in [Lozenge::Horizontal { t, y }, Lozenge::Square { t, y }, Lozenge::Vertical { t, y }] {
                if let Ok(v) = k.lozenge_probability(&[l]) {
                    worst = worst.max(diff(&v.re, &enumeration_probability(&list, &[l])));
                    imag = imag.max(v.im.clone().abs().to_f64());
                    singles.push(l);
                }
            }
        }
    }
    for (i, a) in singles.iter().enumerate() {
        for b in &singles[i + 1..] {
            if let Ok(v) = k.lozenge_probability(&[*a, *b]) {
                worst = worst.max(diff(&v.re, &enumeration_probability(&list, &[*a, *b])));
                imag = imag.max(v.im.clone().abs().to_f64());
            }
        }
    }
    c.below("single and paired lozenge probabilities against enumeration", worst, 1e-40);
    c.below("imaginary parts vanish", imag, 1e-40);
    c.holds("lozenges covered", singles.len() >= 6, format!("{} single lozenges", singles.len()));
    Ok(())
}

fn limits(c: &mut Checks, g: &GlobalArgs) -> CliResult<()> {
    let p = params("1/7", "3", g.digits(60))?;
    let pairs: Vec<(i64, i64)> = (0..6).flat_map(|s| (0..6).map(move |t| (s, t))).collect();
    let (v, _) = k_limit_adaptive(&p, 20, Regularization::HalfStep, &pairs, 20)?;
    let k: HashMap<(i64, i64), BigReal> = pairs.into_iter().zip(v).collect();
    let (mut toeplitz, mut sym): (f64, f64) = (0.0, 0.0);
    for s in 0..4 {
        for t in 0..4 {
            toeplitz = toeplitz.max(diff(&k[&(s, t)], &k[&(s + 2, t + 2)]));
            sym = sym.max(diff(&k[&(s, t)], &k[&(t, s)]));
        }
    }
    c.below("limiting kernel is 2-periodic along the diagonal", toeplitz, 1e-8);
    c.below("limiting kernel is symmetric", sym, 1e-10);

    let p = params("1/3", "2", g.digits(120))?;
    let x0 = -30i64;
    let mut worst: f64 = 0.0;
    for n in 0..=6u32 {
        let gs: Vec<BigReal> = (x0..=-x0).map(|x| gctr(&p, n, x)).collect();
        let tg = tctr_apply(&p, x0, &gs);
        let lambda = p.qpow(n as i64 + 1);
        let scale = gs.iter().map(|v| v.clone().abs().to_f64()).fold(1.0, f64::max);
        for i in 1..gs.len() - 1 {
            worst = worst.max(diff(&tg[i], &Float::with_val(p.bits(), &lambda * &gs[i])) / scale);
        }
    }
    c.below("center-line eigenfunctions, relative residual", worst, 1e-60);
    Ok(())
}

fn family(c: &mut Checks, g: &GlobalArgs) -> CliResult<()> {
    let p = params("1/3", "2", g.digits(100))?;
    let fam = FnFamily::new(&p)?;
    let (mut resid, mut norms): (f64, f64) = (0.0, 0.0);
    for two_n in 0..=8 {
        resid = resid.max(fam.three_term_residual(two_n, -20..=20)?.to_f64());
        let closed = fam.norm_sq(two_n)?;
        for lattice in [HalfLattice::Integers, HalfLattice::Shifted] {
            norms = norms.max(diff(&closed, &fam.direct_inner(two_n, two_n, lattice)?) / closed.to_f64());
        }
    }
    c.below("three-term relation", resid, 1e-70);
    c.below("closed-form norms against direct sums, relative", norms, 1e-70);
    let mut ident: f64 = 0.0;
    for (two_x, two_y) in [(0, 0), (1, 1), (2, 0), (-1, 1), (3, 3), (-2, 2)] {
        let s = fam.identity_partial_sum(two_x, two_y, 40)?;
        ident = ident.max(diff(&s, &if two_x == two_y { p.one() } else { p.zero() }));
    }
    c.below("identity partial sums at equal half-parity, n <= 20", ident, 1e-6);
    let mixed = fam.identity_partial_sum(1, 0, 40)?.to_f64();
    c.holds("mixed half-parity partial sum stays away from zero", mixed.abs() > 1e-2, format!("{mixed:.6}"));
    Ok(())
}

fn concentration(c: &mut Checks, g: &GlobalArgs) {
    let mut rng = RngState::new(g.seed, 0).rng();
    let zero = Rational64::from_integer(0);
    let (mut bad, mut draws) = (0, 0);
    while draws < 500 {
        let tt = rng.random_range(2..30i64);
        let s = rng.random_range(1..30i64).min(tt - 1).max(1);
        let n = rng.random_range(1..30i64);
        let t = rng.random_range(0..=tt);
        let k = Rational64::new(rng.random_range(-40..40i64), rng.random_range(1..6i64));
        let p = ConcentrationParams::new(tt, s, n, t, k);
        let (x, y, z0) = (rng.random_range(-20..60i64), rng.random_range(-20..60i64), rng.random_range(-20..60i64));
        let packed: Vec<i64> = (z0..z0 + n - 1).collect();
        if packed.contains(&x) || packed.contains(&y) {
            continue;
        }
        draws += 1;
        let a = p.a();
        let tele = (x.min(y)..x.max(y)).fold(zero, |acc, u| acc + g_step(k, u, z0, a));
        let tele = if y > x { tele } else { -tele };
        let ok = p.e_exp(x, y, &packed).ok() == Some(p.h_integral(x, y, z0))
            && p.h_exp(x, z0) == p.h_cdf(x, z0)
            && g_exp(k, x, y, z0, a) == tele
            && p.w_sum(x, y) == -p.w_sum(y, x);
        bad += usize::from(!ok);
    }
    c.holds("exact identities on 500 random draws", bad == 0, format!("{bad} mismatches"));
    let mut wrong = 0;
    for n in 2..=4i64 {
        for kn in [-7, -3, 0, 2, 5, 9] {
            let k = Rational64::new(kn, 3);
            for (x, y) in [(0, 5), (-1, 6), (11, 4), (2, 3), (13, 1)] {
                if d_dist(k, 12, x, y) <= zero {
                    continue;
                }
                let best = brute_force_min(k, x, y, 12, (n - 1) as usize, -1..13, false);
                let i = g_sum(k, x, y, 12, minimizing_interval(k, 12, n, IntervalVariant::I).sites());
                let ip = g_sum(k, x, y, 12, minimizing_interval(k, 12, n, IntervalVariant::IPrime).sites());
                wrong += usize::from(best != Some(i.min(ip)));
            }
        }
    }
    c.holds("packed intervals attain the exhaustive minimum", wrong == 0, format!("{wrong} mismatches"));
}

/// Largest batch-means z-score of visit frequencies against exact probabilities.
fn chain_z<F>(
    list: &[(PathEnsemble, BigReal)],
    start: PathEnsemble,
    burn_in: u64,
    batches: usize,
    batch: usize,
    mut step: F,
) -> f64
where
    F: FnMut(&mut PathEnsemble),
{
    let index: HashMap<&PathEnsemble, usize> = list.iter().enumerate().map(|(i, (pe, _))| (pe, i)).collect();
    let mut pe = start;
    for _ in 0..burn_in {
        step(&mut pe);
    }
    let mut freq = vec![vec![0.0; list.len()]; batches];
    for f in freq.iter_mut() {
        for _ in 0..batch {
            step(&mut pe);
            f[index[&pe]] += 1.0 / batch as f64;
        }
    }
    let mut worst: f64 = 0.0;
    for (i, (_, w)) in list.iter().enumerate() {
        let mean = freq.iter().map(|f| f[i]).sum::<f64>() / batches as f64;
        let var = freq.iter().map(|f| (f[i] - mean).powi(2)).sum::<f64>() / (batches - 1) as f64;
        let sigma = (var / batches as f64).sqrt().max(1e-12);
        worst = worst.max((mean - w.to_f64()).abs() / sigma);
    }
    worst
}

fn oracle(c: &mut Checks, g: &GlobalArgs) -> CliResult<()> {
    let hex = HexagonParams::from_sides(2, 2, 2)?;
    let p = params("1/2", "3/2", g.digits(60))?;
    let list = enumerate(hex, &p)?;
    let total = list.iter().fold(p.zero(), |acc, (_, w)| acc + w);
    c.holds("20 tilings", list.len() == 20, list.len().to_string());
    c.below("enumerated probabilities sum to one", diff(&total, &p.one()), 1e-50);
    let mut worst: f64 = 0.0;
    for t in 0..=hex.horizon {
        let km = slice_kernel(&SliceBasis::new(hex, &p, t)?)?;
        for (i, &(ts, x)) in km.row_labels.iter().enumerate() {
            worst = worst.max(diff(&km.entries[i][i], &enumeration_one_point(&list, ts, x)));
        }
    }
    c.below("slice kernel diagonals against enumeration", worst, 1e-40);
    let w = ChainWeights::from_params(hex, &p)?;
    let burn = ChainConfig::single_site(&hex, 0).burn_in;
    let mut rng = RngState::new(g.seed, 0).rng();
    let z = chain_z(&list, PathEnsemble::packed(hex), burn, 50, 20_000, |pe| {
        pe.heat_bath_step(&w, &mut rng);
    });
    c.below("heat bath law, max batch-means z over 1e6 steps", z, 4.0);
    let mut rng = RngState::new(g.seed, 1).rng();
    let z = chain_z(&list, PathEnsemble::packed(hex), 10, 50, 4_000, |pe| {
        pe.sweep(&w, &mut rng);
    });
    c.below("slice sweeps law, max batch-means z over 2e5 sweeps", z, 4.0);
    Ok(())
}
