use clap::error::ErrorKind;
use clap::{Parser, Subcommand};
use editcert_cli::commands::{calibrate, certify, gen, metrics_cmd, train, verify};

/// Certified edit-distance robustness for sequence classifiers.
#[derive(Parser, Debug)]
#[command(name = "editcert", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a seeded synthetic corpus with train/val/test manifests.
    Gen(gen::GenArgs),
    /// Train the built-in histogram model with noise-injected training.
    Train(train::TrainArgs),
    /// Tune the base decision threshold to a target false-positive rate.
    Calibrate(calibrate::CalibrateArgs),
    /// Certify every manifest row and stream JSON-line run records.
    Certify(certify::CertifyArgs),
    /// Score a records file against ground-truth labels.
    Metrics(metrics_cmd::MetricsArgs),
    /// Run the exhaustive certificate-soundness suite.
    Verify(verify::VerifyArgs),
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    let result = match &cli.command {
        Command::Gen(args) => gen::run(args),
        Command::Train(args) => train::run(args),
        Command::Calibrate(args) => calibrate::run(args),
        Command::Certify(args) => certify::run(args),
        Command::Metrics(args) => metrics_cmd::run(args),
        Command::Verify(args) => verify::run(args),
    };
    if let Err(e) = result {
        eprintln!("editcert: {e}");
        std::process::exit(e.exit_code());
    }
}
