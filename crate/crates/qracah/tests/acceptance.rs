//! Acceptance checks: one PASS/FAIL line per criterion.
//!
//! Run with `cargo test --test acceptance`; pass criterion numbers after `--`
//! to run a subset. A clause marked as a known gap is reported as a failure
//! but does not fail the process; any other failing clause does.

use std::collections::HashMap;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rug::Float;

use num_rational::Rational64;
use qracah::concentration::{
    brute_force_min, d_dist, g_exp, g_step, g_sum, minimizing_interval, ConcentrationParams, IntervalVariant,
};
use qracah::hexagon::HexagonParams;
use qracah::kernels2d::{barcode_entries_adaptive, prelimit_barcode_adaptive, Lozenge, TwoDimKernel};
use qracah::limits::{
    gctr, k_limit_adaptive, limit_case, limit_coeff, tctr_apply, CoeffKind, FnFamily, HalfLattice, LimitBarcode,
    Regularization,
};
use qracah::num::{format_rounded, format_truncated};
use qracah::ope::{build_scaled_operator, slice_kernel, SliceBasis};
use qracah::sampling::{
    barcode_stats, default_probe_line, enumerate, enumeration_one_point, enumeration_probability, full_line_barcode,
    sample_ensembles, ChainConfig, ChainWeights, PathEnsemble, RngState,
};
use qracah::{BigReal, Precision, QRacahParams};

// ---------------------------------------------------------------- reference data

const PRELIMIT_Q23_00: [&str; 11] = [
    "0.46557005",
    "0.46659216",
    "0.46729892",
    "0.46778127",
    "0.46810778",
    "0.46832764",
    "0.46847518",
    "0.46857397",
    "0.46864002",
    "0.46868414",
    "0.46871359",
];
const PRELIMIT_Q13_00: [&str; 11] = [
    "0.43591993",
    "0.43592101",
    "0.43592137",
    "0.43592149",
    "0.43592153",
    "0.43592154",
    "0.43592155",
    "0.43592155",
    "0.43592155",
    "0.43592155",
    "0.43592155",
];
const PRELIMIT_Q23_61: [&str; 11] = [
    "0.05154306",
    "0.05233498",
    "0.05284846",
    "0.05318396",
    "0.05340448",
    "0.05355006",
    "0.05364646",
    "0.05371044",
    "0.05375296",
    "0.05378125",
    "0.05380008",
];
const PRELIMIT_Q13_61: [&str; 11] = [
    "0.01901038",
    "0.01901074",
    "0.01901086",
    "0.01901090",
    "0.01901091",
    "0.01901092",
    "0.01901092",
    "0.01901092",
    "0.01901092",
    "0.01901092",
    "0.01901092",
];
const PRELIMIT_RATIOS_Q23_00: [&str; 9] =
    ["0.69146", "0.68248", "0.67691", "0.67336", "0.67107", "0.66958", "0.66860", "0.66795", "0.66752"];
const PRELIMIT_RATIOS_Q23_61: [&str; 9] =
    ["0.64841", "0.65338", "0.65728", "0.66016", "0.66222", "0.66365", "0.66463", "0.66530", "0.66575"];

const LIMIT_Q23_00: [&str; 11] = [
    "0.46719254",
    "0.46771795",
    "0.46806893",
    "0.46830323",
    "0.46845957",
    "0.46856386",
    "0.46863342",
    "0.46867980",
    "0.46871072",
    "0.46873134",
    "0.46874509",
];
const LIMIT_Q13_00: [&str; 11] = [
    "0.43592134",
    "0.43592148",
    "0.43592153",
    "0.43592154",
    "0.43592155",
    "0.43592155",
    "0.43592155",
    "0.43592155",
    "0.43592155",
    "0.43592155",
    "0.43592155",
];
const LIMIT_Q23_61: [&str; 11] = [
    "0.05141315",
    "0.05224775",
    "0.05278962",
    "0.05314430",
    "0.05337781",
    "0.05353216",
    "0.05363448",
    "0.05370242",
    "0.05374761",
    "0.05377768",
    "0.05379770",
];
const LIMIT_Q13_61: [&str; 11] = [
    "0.01901026",
    "0.01901070",
    "0.01901085",
    "0.01901089",
    "0.01901091",
    "0.01901092",
    "0.01901092",
    "0.01901092",
    "0.01901092",
    "0.01901092",
    "0.01901092",
];

const DIAGONAL_PRELIMIT_L6: [&str; 15] = [
    "0.5523372977",
    "0.4387439934",
    "0.5598645425",
    "0.4388625943",
    "0.5609384574",
    "0.4388797292",
    "0.5610918461",
    "0.4388821809",
    "0.5611137582",
    "0.4388825313",
    "0.5611168883",
    "0.4388825813",
    "0.5611173341",
    "0.4388825883",
    "0.5611173877",
];
const DIAGONAL_LIMIT_ODD: &str = "0.5611174103";
const DIAGONAL_LIMIT_EVEN: &str = "0.4388825896";

const INVERSE_KASTELEYN_X36: [&str; 5] = [
    "0.438744002701398029726330344950846261091117",
    "0.559864542689336428941964543890893079446439",
    "0.438862595645192998493904028142472069596241",
    "0.560938457463989285851404171643209418839516",
    "0.438879729391405022754197543436512517729097",
];
const INVERSE_KASTELEYN_X48: [&str; 5] = [
    "0.438744002701397996670004043029846077414593",
    "0.559864542689336428425425841013168294080068",
    "0.438862595645192993780780403343843713850882",
    "0.560938457463989285776297216171385214228610",
    "0.438879729391405022081083055826078202044213",
];

// ---------------------------------------------------------------- reporting

struct Clause {
    name: String,
    ok: bool,
    known_gap: bool,
    detail: String,
}

#[derive(Default)]
struct Outcome {
    clauses: Vec<Clause>,
    notes: Vec<String>,
}

impl Outcome {
    fn check(&mut self, name: impl Into<String>, ok: bool, detail: impl Into<String>) {
        self.clauses.push(Clause { name: name.into(), ok, known_gap: false, detail: detail.into() });
    }

    /// A clause that cannot hold as stated against the published data.
    fn check_known_gap(&mut self, name: impl Into<String>, ok: bool, detail: impl Into<String>) {
        self.clauses.push(Clause { name: name.into(), ok, known_gap: true, detail: detail.into() });
    }

    fn note(&mut self, s: impl Into<String>) {
        self.notes.push(s.into());
    }

    fn error(name: &str, e: impl std::fmt::Display) -> Outcome {
        let mut o = Outcome::default();
        o.check(name, false, format!("error: {e}"));
        o
    }

    fn pass(&self) -> bool {
        self.clauses.iter().all(|c| c.ok)
    }

    fn unexpected_failures(&self) -> usize {
        self.clauses.iter().filter(|c| !c.ok && !c.known_gap).count()
    }
}

fn f(x: &BigReal) -> f64 {
    x.to_f64()
}

fn abs_diff(a: &BigReal, b: &BigReal) -> BigReal {
    Float::with_val(a.prec().max(b.prec()), a - b).abs()
}

fn parse_big(s: &str, prec: u32) -> BigReal {
    Float::with_val(prec, Float::parse(s).expect("decimal literal"))
}

/// Matches `printed` either truncated or rounded to its number of decimals.
fn digit_match(x: &BigReal, printed: &str) -> Option<&'static str> {
    let d = printed.split('.').nth(1).map_or(0, str::len);
    if format_truncated(x, d) == printed {
        Some("truncated")
    } else if format_rounded(x, d) == printed {
        Some("rounded")
    } else {
        None
    }
}

/// Checks a column against printed values; returns (ok, summary).
fn column_match(values: &[BigReal], printed: &[&str], truncated_only: bool) -> (bool, String) {
    let mut bad = Vec::new();
    let mut rounded = 0;
    for (i, (v, p)) in values.iter().zip(printed).enumerate() {
        match digit_match(v, p) {
            Some("rounded") if truncated_only => bad.push(format!("#{i}: got {} want {p}", format_truncated(v, 12))),
            Some("rounded") => rounded += 1,
            Some(_) => {}
            None => bad.push(format!("#{i}: got {} want {p}", format_truncated(v, p.len() + 2))),
        }
    }
    let ok = bad.is_empty() && values.len() == printed.len();
    let msg = if ok {
        format!("{}/{} match ({} only after rounding)", values.len(), printed.len(), rounded)
    } else {
        format!("mismatches: {}", bad.join("; "))
    };
    (ok, msg)
}

fn params(q: &str, kappa: &str, digits: u32) -> QRacahParams {
    QRacahParams::parse(q, kappa, Precision::new(digits)).expect("valid parameters")
}

// ---------------------------------------------------------------- criteria

fn prelimit_table() -> Outcome {
    let mut o = Outcome::default();
    let pairs = [(0, 0), (6, 1)];
    for (qs, qv, c00, c61) in
        [("2/3", 2.0 / 3.0, &PRELIMIT_Q23_00, &PRELIMIT_Q23_61), ("1/3", 1.0 / 3.0, &PRELIMIT_Q13_00, &PRELIMIT_Q13_61)]
    {
        let p = params(qs, "2", 120);
        let mut a00 = Vec::new();
        let mut a61 = Vec::new();
        for l in 10..=20 {
            match prelimit_barcode_adaptive(l, &p, &pairs, 30) {
                Ok((v, _)) => {
                    a00.push(v[0].clone());
                    a61.push(v[1].clone());
                }
                Err(e) => return Outcome::error("prelimit evaluation", e),
            }
        }
        let (ok, msg) = column_match(&a00, c00, false);
        o.check(format!("q={qs} (0,0) digits"), ok, msg);
        let (ok, msg) = column_match(&a61, c61, false);
        o.check(format!("q={qs} (6,1) digits"), ok, msg);
        for (label, a) in [("(0,0)", &a00), ("(6,1)", &a61)] {
            let r = successive_ratios(a);
            let worst = r[6..].iter().map(|x| (x - qv).abs()).fold(0.0, f64::max);
            o.check(
                format!("q={qs} {label} ratios within 0.02 of q for L>=16"),
                worst < 0.02,
                format!("max |ratio-q| = {worst:.5}, ratios L=16..18: {:?}", fmt_list(&r[6..], 5)),
            );
        }
        if qs == "2/3" {
            for (label, a, printed) in
                [("(0,0)", &a00, &PRELIMIT_RATIOS_Q23_00), ("(6,1)", &a61, &PRELIMIT_RATIOS_Q23_61)]
            {
                let r = successive_ratios(a);
                let worst = r
                    .iter()
                    .zip(printed.iter())
                    .map(|(x, p)| (x - p.parse::<f64>().unwrap()).abs())
                    .fold(0.0, f64::max);
                o.check(format!("q={qs} {label} printed ratios"), worst < 1e-5, format!("max deviation {worst:.1e}"));
            }
        }
    }
    o
}

/// `(a_{k+1} − a_{k+2}) / (a_k − a_{k+1})`, computed in the working precision.
fn successive_ratios(a: &[BigReal]) -> Vec<f64> {
    a.windows(3)
        .map(|w| {
            let num = Float::with_val(w[0].prec(), &w[1] - &w[2]);
            let den = Float::with_val(w[0].prec(), &w[0] - &w[1]);
            f(&(num / den))
        })
        .collect()
}

fn fmt_list(v: &[f64], d: usize) -> Vec<String> {
    v.iter().map(|x| format!("{x:.d$}")).collect()
}

fn limit_table() -> Outcome {
    let mut o = Outcome::default();
    let pairs = [(0, 0), (6, 1)];
    for (qs, c00, c61) in [("2/3", &LIMIT_Q23_00, &LIMIT_Q23_61), ("1/3", &LIMIT_Q13_00, &LIMIT_Q13_61)] {
        let p = params(qs, "2", 60);
        let mut a00 = Vec::new();
        let mut a61 = Vec::new();
        for m in 12..=22 {
            match k_limit_adaptive(&p, m, Regularization::HalfStep, &pairs, 30) {
                Ok((v, _)) => {
                    a00.push(v[0].clone());
                    a61.push(v[1].clone());
                }
                Err(e) => return Outcome::error("limit evaluation", e),
            }
        }
        let (ok, msg) = column_match(&a00, c00, false);
        o.check(format!("q={qs} (0,0) digits"), ok, msg);
        let (ok, msg) = column_match(&a61, c61, false);
        o.check(format!("q={qs} (6,1) digits"), ok, msg);
        if qs == "1/3" {
            // first M from which every later value shows the stable digits
            let settle = |a: &[BigReal], target: &str| {
                let idx = (0..a.len()).find(|&i| a[i..].iter().all(|v| digit_match(v, target).is_some()));
                idx.map(|i| 12 + i as i64)
            };
            let s00 = settle(&a00, "0.43592155");
            let s61 = settle(&a61, "0.01901092");
            let ok = s00.is_some_and(|m| m <= 15) && s61.is_some_and(|m| m <= 15);
            let at = |m: Option<i64>| m.map_or("beyond M=22".to_string(), |m| format!("M={m}"));
            o.check_known_gap(
                "q=1/3 stabilizes by M=15",
                ok,
                format!(
                    "(0,0) settles at {}, (6,1) at {}; the printed table itself shows {} and {} at M=15",
                    at(s00),
                    at(s61),
                    LIMIT_Q13_00[3],
                    LIMIT_Q13_61[3]
                ),
            );
        }
    }
    o
}

fn diagonal_table() -> Outcome {
    let mut o = Outcome::default();
    let p = params("1/7", "3", 60);
    let pairs: Vec<(i64, i64)> = (-7..=7).map(|t| (t, t)).collect();
    let pre = match prelimit_barcode_adaptive(6, &p, &pairs, 25) {
        Ok((v, _)) => v,
        Err(e) => return Outcome::error("prelimit diagonal", e),
    };
    // several printed entries are rounded rather than truncated
    let (ok, msg) = column_match(&pre, &DIAGONAL_PRELIMIT_L6, false);
    o.check("L=6 column to 10 printed decimals", ok, msg);
    let lim = match k_limit_adaptive(&p, 20, Regularization::HalfStep, &pairs, 25) {
        Ok((v, _)) => v,
        Err(e) => return Outcome::error("limit diagonal", e),
    };
    let printed: Vec<&str> =
        (-7..=7i64).map(|t| if t.rem_euclid(2) == 1 { DIAGONAL_LIMIT_ODD } else { DIAGONAL_LIMIT_EVEN }).collect();
    let (ok, msg) = column_match(&lim, &printed, true);
    o.check("M=20 limit column, truncated to 10 decimals", ok, msg);
    let d = f(&abs_diff(&lim[14], &lim[0]));
    o.check("|k(7,7) - k(-7,-7)| < 1e-14", d < 1e-14, format!("{d:.2e}"));
    o
}

fn inverse_kasteleyn_table() -> Outcome {
    let mut o = Outcome::default();
    let hex = HexagonParams::canonical(16).expect("hexagon");
    // the series needs about 3300 digits here; starting above that avoids a doubling
    let p = params("1/7", "3", 3600);
    let pairs: Vec<(i64, i64)> = (-2..=2).map(|t| (t, t)).collect();
    let mut cols = Vec::new();
    for (x0, printed) in [(36, &INVERSE_KASTELEYN_X36), (48, &INVERSE_KASTELEYN_X48)] {
        match barcode_entries_adaptive(hex, &p, 8, x0, 0, &pairs, 50) {
            Ok((v, prec)) => {
                let (ok, msg) = column_match(&v, printed, false);
                o.check(format!("x0={x0} column to 42 printed digits"), ok, msg);
                o.note(format!("x0={x0} evaluated at {} digits", prec.digits()));
                cols.push(v);
            }
            Err(e) => return Outcome::error("inverse Kasteleyn entries", e),
        }
    }
    let worst = cols[0].iter().zip(&cols[1]).map(|(a, b)| f(&abs_diff(a, b))).fold(0.0, f64::max);
    let printed_gap = INVERSE_KASTELEYN_X36
        .iter()
        .zip(INVERSE_KASTELEYN_X48.iter())
        .map(|(a, b)| f(&abs_diff(&parse_big(a, 256), &parse_big(b, 256))))
        .fold(0.0, f64::max);
    o.check_known_gap(
        "columns agree to >= 30 decimals",
        worst < 1e-30,
        format!("computed max gap {worst:.2e}; the printed columns themselves differ by {printed_gap:.2e}"),
    );
    o
}

fn density_and_patterns() -> Outcome {
    let mut o = Outcome::default();
    let p = params("1/7", "43/10", 60);
    let pairs: Vec<(i64, i64)> = (0..=3).flat_map(|s| (0..=3).map(move |t| (s, t))).collect();
    let prec = match k_limit_adaptive(&p, 20, Regularization::HalfStep, &pairs, 25) {
        Ok((_, prec)) => prec,
        Err(e) => return Outcome::error("limit kernel", e),
    };
    let k = match LimitBarcode::new(&p.with_precision(prec), 20) {
        Ok(k) => k,
        Err(e) => return Outcome::error("limit kernel", e),
    };
    let run = || -> qracah::Result<(BigReal, BigReal, [BigReal; 4])> {
        let (e, od) = k.rho_even_odd()?;
        Ok((e, od, [k.det(&[0, 1])?, k.det(&[1, 2])?, k.det(&[0, 2])?, k.det(&[1, 3])?]))
    };
    let (even, odd, dets) = match run() {
        Ok(v) => v,
        Err(e) => return Outcome::error("limit kernel", e),
    };
    let (even, odd) = (f(&even), f(&odd));
    o.check("rho_even = 0.345174 +- 1e-6", (even - 0.345174).abs() < 1e-6, format!("{even:.8}"));
    o.check("rho_odd = 0.654826 +- 1e-6", (odd - 0.654826).abs() < 1e-6, format!("{odd:.8}"));
    o.check("rho_even + rho_odd = 1 +- 1e-5", (even + odd - 1.0).abs() < 1e-5, format!("{:.2e}", even + odd - 1.0));
    let dets: Vec<f64> = dets.iter().map(f).collect();
    o.check_known_gap(
        "offset-1 determinant translation invariant",
        (dets[1] - 0.132142).abs() < 1e-6,
        format!(
            "det[1,2] = {:.8} against det[0,1] = {:.8}; the finite hexagon at L=8 gives 0.13258874 and 0.13214202, so the kernel is 2-periodic, not shift invariant",
            dets[1], dets[0]
        ),
    );
    for (label, v, want) in [
        ("det[0,1] = 0.132142", dets[0], 0.132142),
        ("det[0,2] = 0.108658", dets[2], 0.108658),
        ("det[1,3] = 0.418309", dets[3], 0.418309),
    ] {
        o.check(format!("{label} +- 1e-6"), (v - want).abs() < 1e-6, format!("{v:.8}"));
    }
    o
}

fn toeplitz_and_symmetry() -> Outcome {
    let mut o = Outcome::default();
    let p = params("1/7", "3", 60);
    let pairs: Vec<(i64, i64)> = (0..8).flat_map(|s| (0..8).map(move |t| (s, t))).collect();
    let vals = match k_limit_adaptive(&p, 20, Regularization::HalfStep, &pairs, 25) {
        Ok((v, _)) => v,
        Err(e) => return Outcome::error("limit kernel", e),
    };
    let k: HashMap<(i64, i64), BigReal> = pairs.into_iter().zip(vals).collect();
    let mut toeplitz: f64 = 0.0;
    let mut sym: f64 = 0.0;
    for s in 0..6 {
        for t in 0..6 {
            toeplitz = toeplitz.max(f(&abs_diff(&k[&(s, t)], &k[&(s + 2, t + 2)])));
            sym = sym.max(f(&abs_diff(&k[&(s, t)], &k[&(t, s)])));
        }
    }
    o.check("|k(s,t) - k(s+2,t+2)| < 1e-8 on 6x6", toeplitz < 1e-8, format!("max {toeplitz:.2e}"));
    o.check("|k(s,t) - k(t,s)| < 1e-10 on 6x6", sym < 1e-10, format!("max {sym:.2e}"));
    o
}

fn oracle_triangle() -> Outcome {
    let mut o = Outcome::default();
    let hex = HexagonParams::from_sides(2, 2, 2).expect("hexagon");
    let p = params("1/2", "3/2", 60);
    let list = match enumerate(hex, &p) {
        Ok(l) => l,
        Err(e) => return Outcome::error("enumeration", e),
    };
    let total = list.iter().fold(p.zero(), |acc, (_, w)| acc + w);
    let dev = f(&abs_diff(&total, &p.one()));
    o.check(
        "20 tilings, probabilities sum to 1",
        list.len() == 20 && dev <= 1e-55,
        format!("{} tilings, |sum-1| = {dev:.1e}", list.len()),
    );

    // determinant formula against enumeration
    let kernel = TwoDimKernel::new(hex, &p);
    let (tt, s, n) = hex.tsn();
    let mut singles = Vec::new();
    for t in 0..tt {
        for y in -1..=s + n + 1 {
            for l in [Lozenge::Horizontal { t, y }, Lozenge::Square { t, y }, Lozenge::Vertical { t, y }] {
                if let Ok(v) = kernel.lozenge_probability(&[l]) {
                    singles.push((l, v));
                }
            }
        }
    }
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    for (l, v) in &singles {
        let e = enumeration_probability(&list, &[*l]);
        worst = worst.max(f(&abs_diff(&v.re, &e))).max(f(&v.im.clone().abs()));
        checked += 1;
    }
    for (i, (a, _)) in singles.iter().enumerate() {
        for (b, _) in &singles[i + 1..] {
            if let Ok(v) = kernel.lozenge_probability(&[*a, *b]) {
                let e = enumeration_probability(&list, &[*a, *b]);
                worst = worst.max(f(&abs_diff(&v.re, &e))).max(f(&v.im.clone().abs()));
                checked += 1;
            }
        }
    }
    for t in 0..=tt {
        let run = || -> qracah::Result<f64> {
            let basis = SliceBasis::new(hex, &p, t)?;
            let km = slice_kernel(&basis)?;
            let mut w: f64 = 0.0;
            for (i, &(ts, x)) in km.row_labels.iter().enumerate() {
                w = w.max(f(&abs_diff(&km.entries[i][i], &enumeration_one_point(&list, ts, x))));
            }
            Ok(w)
        };
        match run() {
            Ok(w) => {
                worst = worst.max(w);
                checked += 1;
            }
            Err(e) => return Outcome::error("slice kernel", e),
        }
    }
    o.check(
        "determinant formula vs enumeration < 1e-25 at 60 digits",
        worst < 1e-25 && singles.len() >= 6,
        format!("{checked} patterns ({} single lozenges, all slices), max error {worst:.1e}", singles.len()),
    );

    // heat bath against enumeration, batch means over 10^7 steps
    let w = match ChainWeights::from_params(hex, &p) {
        Ok(w) => w,
        Err(e) => return Outcome::error("chain weights", e),
    };
    let index: HashMap<PathEnsemble, usize> = list.iter().enumerate().map(|(i, (pe, _))| (pe.clone(), i)).collect();
    let probs: Vec<f64> = list.iter().map(|(_, w)| f(w)).collect();
    let mut rng = RngState::new(20240611, 0).rng();
    let mut pe = PathEnsemble::packed(hex);
    for _ in 0..ChainConfig::single_site(&hex, 0).burn_in {
        pe.heat_bath_step(&w, &mut rng);
    }
    const BATCHES: usize = 100;
    const BATCH_LEN: usize = 100_000;
    let mut batch_freq = vec![vec![0.0; list.len()]; BATCHES];
    for freq in batch_freq.iter_mut() {
        let mut counts = vec![0u64; list.len()];
        for _ in 0..BATCH_LEN {
            pe.heat_bath_step(&w, &mut rng);
            counts[index[&pe]] += 1;
        }
        for (fq, c) in freq.iter_mut().zip(counts) {
            *fq = c as f64 / BATCH_LEN as f64;
        }
    }
    let mut worst_z: f64 = 0.0;
    for (i, &pi) in probs.iter().enumerate() {
        let mean = batch_freq.iter().map(|b| b[i]).sum::<f64>() / BATCHES as f64;
        let var = batch_freq.iter().map(|b| (b[i] - mean).powi(2)).sum::<f64>() / (BATCHES - 1) as f64;
        let sigma = (var / BATCHES as f64).sqrt().max(1e-12);
        worst_z = worst_z.max((mean - pi).abs() / sigma);
    }
    o.check(
        "heat bath law within 4 sigma over 1e7 steps",
        worst_z < 4.0,
        format!("max |z| = {worst_z:.2} over {} tilings (batch means, {BATCHES} x {BATCH_LEN})", list.len()),
    );
    o
}

fn half_integer_family() -> Outcome {
    let mut o = Outcome::default();
    let p = params("1/3", "2", 120);
    let fam = match FnFamily::new(&p) {
        Ok(fam) => fam,
        Err(e) => return Outcome::error("family", e),
    };
    let run = |o: &mut Outcome| -> qracah::Result<()> {
        let mut resid: f64 = 0.0;
        for two_n in 0..=12 {
            resid = resid.max(f(&fam.three_term_residual(two_n, -40..=40)?));
        }
        o.check("three-term residual < 1e-90, n <= 6", resid < 1e-90, format!("max {resid:.1e}"));

        let mut norm_err: f64 = 0.0;
        for two_n in 0..=12 {
            let closed = fam.norm_sq(two_n)?;
            for lattice in [HalfLattice::Integers, HalfLattice::Shifted] {
                let direct = fam.direct_inner(two_n, two_n, lattice)?;
                let rel = Float::with_val(p.bits(), abs_diff(&closed, &direct) / &closed);
                norm_err = norm_err.max(f(&rel));
            }
        }
        o.check("closed-form norms vs direct sums < 1e-80", norm_err < 1e-80, format!("max relative {norm_err:.1e}"));

        let id_err = |two_nmax: i64| -> qracah::Result<f64> {
            let mut worst: f64 = 0.0;
            for two_x in -4..=4i64 {
                for two_y in -4..=4i64 {
                    if (two_x - two_y).rem_euclid(2) != 0 {
                        continue;
                    }
                    let s = fam.identity_partial_sum(two_x, two_y, two_nmax)?;
                    let delta = if two_x == two_y { 1.0 } else { 0.0 };
                    worst = worst.max((f(&s) - delta).abs());
                }
            }
            Ok(worst)
        };
        let (e12, e18, e24) = (id_err(24)?, id_err(36)?, id_err(48)?);
        // the tail is geometric with ratio q per unit of n
        let rate = (e24 / e12).powf(1.0 / 12.0);
        o.check_known_gap(
            "identity partial sums within 1e-6 at n_max = 12",
            e12 < 1e-6,
            format!(
                "max {e12:.1e} over |x|,|y| <= 2; the tail decays like q^n_max, so 1e-6 first holds near n_max = 14"
            ),
        );
        o.check(
            "identity partial sums converge geometrically at rate q",
            (rate - 1.0 / 3.0).abs() < 0.02 && e24 < 1e-10,
            format!("max error {e12:.1e} / {e18:.1e} / {e24:.1e} at n_max 12 / 18 / 24, rate {rate:.4}"),
        );

        let mixed: Vec<f64> = [24, 48]
            .iter()
            .map(|&nmax| fam.identity_partial_sum(1, 0, nmax).map(|v| f(&v)))
            .collect::<qracah::Result<_>>()?;
        o.check(
            "mixed half-parity partial sum bounded away from 0",
            mixed.iter().all(|v| v.abs() > 1e-2) && (mixed[0] - mixed[1]).abs() < 1e-6,
            format!("S(1/2, 0) = {:.6} at n_max 12 and {:.6} at n_max 24", mixed[0], mixed[1]),
        );
        Ok(())
    };
    if let Err(e) = run(&mut o) {
        o.check("family evaluation", false, format!("error: {e}"));
    }
    o
}

fn center_operator() -> Outcome {
    let mut o = Outcome::default();
    let p = params("1/3", "2", 120);
    let x0 = -41i64;
    let mut worst: f64 = 0.0;
    for n in 0..=8u32 {
        let g: Vec<BigReal> = (x0..=-x0).map(|x| gctr(&p, n, x)).collect();
        let tg = tctr_apply(&p, x0, &g);
        let lambda = p.qpow(n as i64 + 1);
        let scale = g.iter().map(|v| f(&v.clone().abs())).fold(1.0, f64::max);
        for i in 1..g.len() - 1 {
            let r = Float::with_val(p.bits(), &tg[i] - Float::with_val(p.bits(), &lambda * &g[i])).abs();
            worst = worst.max(f(&r) / scale);
        }
    }
    o.check("center-line eigenrelation residual < 1e-80, n <= 8, |x| <= 40", worst < 1e-80, format!("max {worst:.1e}"));

    let p = params("1/3", "2", 60);
    let q = 1.0 / 3.0;
    let scales: Vec<i64> = (6..=14).step_by(2).collect();
    let mut errs: HashMap<&'static str, Vec<f64>> = HashMap::new();
    for &l in &scales {
        let hex = HexagonParams::canonical(l).expect("hexagon");
        let t = 2 * l;
        let basis = match SliceBasis::new(hex, &p, t) {
            Ok(b) => b,
            Err(e) => return Outcome::error("slice basis", e),
        };
        for (label, xf) in [
            ("center", 3 * l),
            ("lower interior", 2 * l),
            ("upper interior", 4 * l),
            ("lower boundary", l),
            ("upper boundary", 5 * l),
            ("below", l / 2),
        ] {
            let err = (|| -> qracah::Result<f64> {
                let op = build_scaled_operator(&basis, xf)?;
                let case = limit_case(&hex, l, t, xf)?;
                let mut err: f64 = 0.0;
                for dx in -2..=2i64 {
                    let idx = (xf + dx - op.offset) as usize;
                    let d = abs_diff(&op.diagonal[idx], &limit_coeff(&p, case, dx, CoeffKind::Diagonal));
                    let od = abs_diff(&op.offdiagonal[idx - 1], &limit_coeff(&p, case, dx, CoeffKind::OffDiagonal));
                    err = err.max(f(&d)).max(f(&od));
                }
                Ok(err)
            })();
            match err {
                Ok(e) => errs.entry(label).or_default().push(e),
                Err(e) => return Outcome::error("scaled operator", e),
            }
        }
    }
    let span = (scales[scales.len() - 1] - scales[0]) as f64;
    let mut rates = Vec::new();
    let mut ok = true;
    let mut labels: Vec<_> = errs.keys().copied().collect();
    labels.sort();
    for label in labels {
        let e = &errs[label];
        let rate = (e[e.len() - 1] / e[0]).powf(1.0 / span);
        ok &= rate <= q * 1.05 && e[e.len() - 1] < 1e-4;
        rates.push(format!("{label} {rate:.3} (err {:.1e} at L=14)", e[e.len() - 1]));
    }
    o.check("scaled operator converges at rate <= q per unit L", ok, rates.join(", "));
    o
}

fn exponent_calculus() -> Outcome {
    let mut o = Outcome::default();
    let mut rng = ChaCha8Rng::seed_from_u64(5_000_003);
    let mut failures = Vec::new();
    let mut draws = 0;
    while draws < 200 {
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
        match p.e_exp(x, y, &packed) {
            Ok(e) if e == p.h_integral(x, y, z0) => {}
            other => failures.push(format!("telescoping at {tt},{s},{n},{t},{k},{x},{y},{z0}: {other:?}")),
        }
        if p.h_exp(x, z0) != p.h_cdf(x, z0) {
            failures.push(format!("cdf form at {tt},{s},{n},{t},{k},{x},{z0}"));
        }
        let a = p.a();
        let sum = (x.min(y)..x.max(y)).fold(Rational64::from_integer(0), |acc, u| acc + g_step(k, u, z0, a));
        let sum = if y > x { sum } else { -sum };
        if g_exp(k, x, y, z0, a) != sum {
            failures.push(format!("g telescoping at {k},{x},{y},{z0},{a}"));
        }
    }
    o.check(
        "telescoping and cdf identities exact on 200 random draws",
        failures.is_empty(),
        if failures.is_empty() { "0 mismatches".to_string() } else { failures.join("; ") },
    );

    let mut cases = 0;
    let mut bad = Vec::new();
    for n in 2..=5i64 {
        for kn in [-7, -3, 0, 2, 5, 9] {
            let k = Rational64::new(kn, 3);
            let a = 12;
            for (x, y) in [(0, 5), (-1, 6), (11, 4), (2, 3), (13, 1)] {
                if d_dist(k, a, x, y) <= Rational64::from_integer(0) {
                    continue;
                }
                cases += 1;
                let best = brute_force_min(k, x, y, a, (n - 1) as usize, -1..13, false);
                let i = g_sum(k, x, y, a, minimizing_interval(k, a, n, IntervalVariant::I).sites());
                let ip = g_sum(k, x, y, a, minimizing_interval(k, a, n, IntervalVariant::IPrime).sites());
                if best != Some(i.min(ip)) {
                    bad.push(format!("N={n} k={k} x={x} y={y}"));
                }
            }
        }
    }
    o.check(
        "packed intervals minimize exhaustively for N <= 5",
        bad.is_empty() && cases > 0,
        format!("{cases} cases, {} mismatches {}", bad.len(), bad.join("; ")),
    );
    o
}

fn simulation_statistics() -> Outcome {
    let mut o = Outcome::default();
    let hex = HexagonParams::new(400, 200, 200).expect("hexagon");
    let w = match ChainWeights::new(hex, 1.0 / 7.0, 4.3) {
        Ok(w) => w,
        Err(e) => return Outcome::error("chain weights", e),
    };
    let chains = sample_ensembles(&w, &ChainConfig::sweeps(400, 0), 100, 7_777);
    let x0 = default_probe_line(&hex);
    let barcodes: Vec<_> = match chains.iter().map(|(pe, _)| full_line_barcode(pe, x0)).collect() {
        Ok(b) => b,
        Err(e) => return Outcome::error("barcodes", e),
    };
    let st = match barcode_stats(&barcodes, 5) {
        Ok(s) => s,
        Err(e) => return Outcome::error("barcode statistics", e),
    };
    o.note(format!("100 chains x 400 slice sweeps, probe line x = {x0}, margin 5, {} defect sites", st.defects));
    for (label, v, want) in [
        ("even frequency 0.345128", st.even_frequency(), 0.345128),
        ("odd frequency 0.654564", st.odd_frequency(), 0.654564),
        ("pattern 11 frequency 0.133933", st.pair_frequency(), 0.133933),
        ("pattern 1*1 even 0.10653", st.gap_even_frequency(), 0.10653),
        ("pattern 1*1 odd 0.413419", st.gap_odd_frequency(), 0.413419),
    ] {
        o.check(format!("{label} +- 0.01"), (v - want).abs() < 0.01, format!("{v:.6}"));
    }
    o
}

// ---------------------------------------------------------------- driver

type Criterion = (u32, &'static str, fn() -> Outcome);

const CRITERIA: [Criterion; 11] = [
    (1, "prelimit barcode kernel table", prelimit_table),
    (2, "limiting barcode kernel table", limit_table),
    (3, "diagonal prelimit and limit columns", diagonal_table),
    (4, "high-precision inverse Kasteleyn columns", inverse_kasteleyn_table),
    (5, "limiting densities and pattern determinants", density_and_patterns),
    (6, "block-Toeplitz and symmetry", toeplitz_and_symmetry),
    (7, "oracle triangle on the 2x2x2 hexagon", oracle_triangle),
    (8, "half-integer function family", half_integer_family),
    (9, "center-line operator and scaled-operator limits", center_operator),
    (10, "exponent calculus (exact)", exponent_calculus),
    (11, "MCMC barcode statistics", simulation_statistics),
];

fn main() {
    let selected: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let start = Instant::now();
    let mut passed = 0;
    let mut failed = 0;
    let mut unexpected = 0;
    for (id, title, run) in CRITERIA {
        if !selected.is_empty() && !selected.contains(&id) {
            continue;
        }
        let t = Instant::now();
        let outcome = run();
        let verdict = if outcome.pass() { "PASS" } else { "FAIL" };
        println!("[{verdict}] criterion {id:2}: {title} ({:.1}s)", t.elapsed().as_secs_f64());
        for c in &outcome.clauses {
            let mark = match (c.ok, c.known_gap) {
                (true, _) => "ok  ",
                (false, true) => "GAP ",
                (false, false) => "FAIL",
            };
            println!("        {mark} {}: {}", c.name, c.detail);
        }
        for n in &outcome.notes {
            println!("        note {n}");
        }
        if outcome.pass() {
            passed += 1;
        } else {
            failed += 1;
        }
        unexpected += outcome.unexpected_failures();
    }
    println!(
        "acceptance: {passed} passed, {failed} failed, {unexpected} unexpected clause failures ({:.1}s)",
        start.elapsed().as_secs_f64()
    );
    if failed > 0 {
        println!("GAP marks a clause that cannot hold as stated; the detail on that line gives the evidence. It is reported, not waived.");
    }
    if unexpected > 0 {
        std::process::exit(1);
    }
}
