//! Sampling runs, barcode records and tiling pictures.

use std::path::PathBuf;

use clap::{Args, ValueEnum};
use serde::Serialize;

use qracah::hexagon::HexagonParams;
use qracah::sampling::{
    barcode_stats, default_probe_line, full_line_barcode, height_fluctuations, render_svg, run_chain, sample_ensembles,
    write_barcodes, ChainConfig, ChainWeights, MoveKind, PathEnsemble, RecordHeader, RngState, SvgStyle,
};

use crate::output::{params, write_atomic, CliError, CliResult, Format, GlobalArgs, Report};

/// Largest `chains × steps × T × N` a run may request.
const WORK_LIMIT: f64 = 2e11;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Moves {
    /// Exact resampling of whole slices.
    Slice,
    /// Single-site heat bath.
    Site,
}

#[derive(Args, Debug, Serialize)]
pub struct HexArgs {
    #[arg(long = "T", default_value_t = 400)]
    pub horizon: i64,
    #[arg(long = "S", default_value_t = 200)]
    pub shift: i64,
    #[arg(long = "N", default_value_t = 200)]
    pub paths: i64,
    /// Canonical hexagon `(8L, 4L, 4L)`; overrides T, S and N.
    #[arg(long = "L")]
    pub scale: Option<i64>,
    #[arg(long, default_value = "1/7")]
    pub q: String,
    #[arg(long, default_value = "4.3")]
    pub kappa: String,
}

impl HexArgs {
    fn hexagon(&self) -> CliResult<HexagonParams> {
        Ok(match self.scale {
            Some(l) => HexagonParams::canonical(l)?,
            None => HexagonParams::new(self.horizon, self.shift, self.paths)?,
        })
    }

    fn weights(&self, hex: HexagonParams) -> CliResult<ChainWeights> {
        let p = params(&self.q, &self.kappa, 30)?;
        Ok(ChainWeights::from_params(hex, &p)?)
    }
}

fn chain_config(hex: &HexagonParams, moves: Moves, steps: u64, burn_in: Option<u64>) -> ChainConfig {
    match moves {
        Moves::Slice => ChainConfig::sweeps(burn_in.unwrap_or(0), steps),
        Moves::Site => {
            let mut c = ChainConfig::single_site(hex, steps);
            if let Some(b) = burn_in {
                c.burn_in = b;
            }
            c
        }
    }
}

fn guard(hex: &HexagonParams, cfg: &ChainConfig, chains: usize) -> CliResult<()> {
    let (tt, _, n) = hex.tsn();
    let per_step = match cfg.moves {
        MoveKind::SliceSweep => (tt * n) as f64,
        MoveKind::SingleSite => 1.0,
    };
    let work = chains as f64 * (cfg.burn_in + cfg.steps) as f64 * per_step;
    if work > WORK_LIMIT {
        return Err(CliError::SizeGuard(format!("about {work:.1e} elementary updates (limit {WORK_LIMIT:.0e})")));
    }
    Ok(())
}

#[derive(Args, Debug, Serialize)]
pub struct SampleArgs {
    #[command(flatten)]
    pub hex: HexArgs,
    /// Independent chains, one sample each.
    #[arg(long, default_value_t = 100)]
    pub chains: usize,
    #[arg(long, value_enum, default_value_t = Moves::Slice)]
    pub moves: Moves,
    /// Sweeps (slice moves) or updates (site moves) per chain after burn-in.
    #[arg(long, default_value_t = 400)]
    pub steps: u64,
    /// Burn-in; site moves default to 40·T·S·N updates.
    #[arg(long)]
    pub burn_in: Option<u64>,
    /// Horizontal probe line; defaults to ⌊(S+N)/2⌋.
    #[arg(long)]
    pub x0: Option<i64>,
    /// Sites trimmed from each end before counting.
    #[arg(long, default_value_t = 5)]
    pub margin: usize,
    /// Barcode record file (one bit string per sample).
    #[arg(long)]
    pub barcodes: Option<PathBuf>,
    /// Height fluctuation CSV, one column per sample.
    #[arg(long)]
    pub heights: Option<PathBuf>,
    /// Directory for one SVG picture per sample.
    #[arg(long)]
    pub svg_dir: Option<PathBuf>,
}

/// Runs the chains and reports barcode frequencies along the probe line.
pub fn sample(a: &SampleArgs, g: &GlobalArgs) -> CliResult<Report> {
    let hex = a.hex.hexagon()?;
    let w = a.hex.weights(hex)?;
    let cfg = chain_config(&hex, a.moves, a.steps, a.burn_in);
    if a.chains == 0 {
        return Err(CliError::Config("need at least one chain".into()));
    }
    guard(&hex, &cfg, a.chains)?;
    let x0 = a.x0.unwrap_or_else(|| default_probe_line(&hex));
    let runs = sample_ensembles(&w, &cfg, a.chains, g.seed);
    let barcodes = runs.iter().map(|(pe, _)| full_line_barcode(pe, x0)).collect::<qracah::Result<Vec<_>>>()?;
    let st = barcode_stats(&barcodes, a.margin)?;

    if let Some(path) = &a.barcodes {
        let header = RecordHeader {
            horizon: hex.horizon,
            shift: hex.shift,
            paths: hex.paths,
            q: a.hex.q.clone(),
            kappa: a.hex.kappa.clone(),
            seed: g.seed,
        };
        let mut buf = Vec::new();
        write_barcodes(&mut buf, &header, &barcodes)?;
        write_atomic(Some(path), &buf)?;
    }
    if let Some(path) = &a.heights {
        let cols: Vec<Vec<f64>> = barcodes.iter().map(|bc| height_fluctuations(bc, a.margin)).collect();
        let len = cols.iter().map(Vec::len).max().unwrap_or(0);
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut head = vec!["t".to_string()];
        head.extend((0..cols.len()).map(|i| format!("sample{i}")));
        w.write_record(&head).map_err(|e| CliError::Io(e.to_string()))?;
        for j in 0..len {
            let mut row = vec![(barcodes[0].first + (a.margin + j) as i64).to_string()];
            row.extend(cols.iter().map(|c| c.get(j).map(|v| format!("{v}")).unwrap_or_default()));
            w.write_record(&row).map_err(|e| CliError::Io(e.to_string()))?;
        }
        let buf = w.into_inner().map_err(|e| CliError::Io(e.to_string()))?;
        write_atomic(Some(path), &buf)?;
    }
    if let Some(dir) = &a.svg_dir {
        std::fs::create_dir_all(dir)?;
        let style = SvgStyle::default();
        for (i, (pe, _)) in runs.iter().enumerate() {
            write_atomic(Some(&dir.join(format!("sample{i:04}.svg"))), render_svg(pe, &style).as_bytes())?;
        }
    }

    let mut r = Report::new(&["statistic", "value", "ones", "sites"]);
    let mut row = |name: &str, v: f64, ones: u64, sites: u64| {
        r.push(vec![name.into(), format!("{v:.6}"), ones.to_string(), sites.to_string()]);
    };
    row("even", st.even_frequency(), st.even_ones, st.even_sites);
    row("odd", st.odd_frequency(), st.odd_ones, st.odd_sites);
    row("pattern 11", st.pair_frequency(), st.pair_ones, st.pair_sites);
    row("pattern 1*1 even", st.gap_even_frequency(), st.gap_even_ones, st.gap_even_sites);
    row("pattern 1*1 odd", st.gap_odd_frequency(), st.gap_odd_ones, st.gap_odd_sites);
    let flips: f64 = runs.iter().map(|(_, rep)| rep.flip_rate()).sum::<f64>() / runs.len() as f64;
    r.notes.push(format!(
        "{} samples, probe line x = {x0}, margin {}, {} defect sites, mean flip rate {flips:.4}, rng {}",
        st.samples,
        a.margin,
        st.defects,
        RngState::ALGORITHM
    ));
    Ok(r)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Start {
    Packed,
    Lowest,
    Highest,
}

#[derive(Args, Debug, Serialize)]
pub struct SvgArgs {
    #[command(flatten)]
    pub hex: HexArgs,
    #[arg(long, value_enum, default_value_t = Start::Packed)]
    pub start: Start,
    #[arg(long, value_enum, default_value_t = Moves::Slice)]
    pub moves: Moves,
    /// Sweeps or updates applied to the start before drawing.
    #[arg(long, default_value_t = 200)]
    pub steps: u64,
    /// Overlay the paths.
    #[arg(long = "paths")]
    pub draw_paths: bool,
    /// Also print the barcode along this probe line as a note.
    #[arg(long)]
    pub x0: Option<i64>,
}

/// One tiling drawn as SVG.
pub fn render(a: &SvgArgs, g: &GlobalArgs) -> CliResult<(String, Option<String>)> {
    if let Some(f) = g.format {
        if f != Format::Svg {
            return Err(CliError::Config("render-svg writes svg only".into()));
        }
    }
    let hex = a.hex.hexagon()?;
    let w = a.hex.weights(hex)?;
    let cfg = chain_config(&hex, a.moves, a.steps, Some(0));
    guard(&hex, &cfg, 1)?;
    let mut pe = match a.start {
        Start::Packed => PathEnsemble::packed(hex),
        Start::Lowest => PathEnsemble::lowest(hex),
        Start::Highest => PathEnsemble::highest(hex),
    };
    let mut rng = RngState::new(g.seed, 0).rng();
    run_chain(&mut pe, &w, &cfg, &mut rng);
    let style = SvgStyle { draw_paths: a.draw_paths, ..SvgStyle::default() };
    let bits = match a.x0 {
        Some(x0) => Some(full_line_barcode(&pe, x0)?.to_bit_string()),
        None => None,
    };
    Ok((render_svg(&pe, &style), bits))
}
