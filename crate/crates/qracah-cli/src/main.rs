//! `qracah`: tables, densities, sampling and checks for q-Racah lozenge tilings.

mod commands;
mod output;
mod simulate;
mod verify;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use output::{emit, write_atomic, CliError, CliResult, Format, GlobalArgs};

#[derive(Parser, Debug)]
#[command(name = "qracah", version = output::BUILD, about = "Kernels, barcodes and samples of q-Racah lozenge tilings")]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Prelimit barcode kernel on canonical hexagons, with successive ratios.
    #[command(visible_alias = "table1")]
    PrelimitTable(commands::PrelimitArgs),
    /// Regularized partial sums of the limiting barcode kernel.
    #[command(visible_alias = "table2")]
    LimitTable(commands::LimitArgs),
    /// Diagonal of the barcode kernel, prelimit and limit.
    #[command(visible_alias = "table3")]
    DiagonalTable(commands::DiagonalArgs),
    /// Inverse Kasteleyn entries along a horizontal line.
    #[command(visible_alias = "table4")]
    KasteleynTable(commands::KasteleynArgs),
    /// Barcode densities and small determinants.
    #[command(visible_alias = "eq77")]
    Densities(commands::DensityArgs),
    /// Decay of barcode correlations.
    CorrDecay(commands::DecayArgs),
    /// Even-site density over a (q, kappa) grid.
    DensitySurface(commands::SurfaceArgs),
    /// Markov chain samples and barcode statistics.
    Sample(simulate::SampleArgs),
    /// Run an invariant suite.
    Verify(verify::VerifyArgs),
    /// Draw one tiling as SVG.
    RenderSvg(simulate::SvgArgs),
    /// Kernel values and lozenge probabilities on a small hexagon.
    KernelEval(commands::KernelEvalArgs),
}

fn run(cli: &Cli) -> CliResult<()> {
    let g = &cli.global;
    match &cli.command {
        Command::PrelimitTable(a) => emit("prelimit-table", a, g, &commands::prelimit_table(a, g)?, Format::Csv),
        Command::LimitTable(a) => emit("limit-table", a, g, &commands::limit_table(a, g)?, Format::Csv),
        Command::DiagonalTable(a) => emit("diagonal-table", a, g, &commands::diagonal_table(a, g)?, Format::Csv),
        Command::KasteleynTable(a) => emit("kasteleyn-table", a, g, &commands::kasteleyn_table(a, g)?, Format::Csv),
        Command::Densities(a) => emit("densities", a, g, &commands::densities(a, g)?, Format::Csv),
        Command::CorrDecay(a) => emit("corr-decay", a, g, &commands::corr_decay(a, g)?, Format::Csv),
        Command::DensitySurface(a) => emit("density-surface", a, g, &commands::density_surface(a, g)?, Format::Csv),
        Command::KernelEval(a) => emit("kernel-eval", a, g, &commands::kernel_eval(a, g)?, Format::Csv),
        Command::Sample(a) => emit("sample", a, g, &simulate::sample(a, g)?, Format::Csv),
        Command::Verify(a) => {
            let (report, ok) = verify::run(a, g)?;
            emit("verify", a, g, &report, Format::Json)?;
            if ok {
                Ok(())
            } else {
                let failed = report.rows.iter().filter(|r| r[1] == "false").map(|r| r[0].as_str()).collect::<Vec<_>>();
                Err(CliError::Check(failed.join("; ")))
            }
        }
        Command::RenderSvg(a) => {
            let (svg, bits) = simulate::render(a, g)?;
            write_atomic(g.out.as_deref(), svg.as_bytes())?;
            if let Some(b) = bits {
                eprintln!("barcode: {b}");
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("qracah: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

#[cfg(test)]
mod tests {
    use clap::CommandFactory;

    #[test]
    fn command_line_is_well_formed() {
        super::Cli::command().debug_assert();
    }
}
