//! Reference implementation of the subprocess classifier protocol.
//!
//! Reads `PREDICT <base64 of token bytes>` lines on stdin and answers
//! `CLASS <int>` on stdout. Ships as a loopback test double and as a
//! template for wiring real detectors behind the line protocol.

use std::io::{BufRead, Write};

use clap::Parser;
use editcert_core::classifiers::BaseClassifier;
use editcert_core::classifiers::HistogramModel;
use editcert_core::seq::TokenSeq;

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
enum Rule {
    /// Always answer --class.
    Constant,
    /// Answer the parity of the sequence length.
    LenParity,
    /// Answer 1 iff the byte --token occurs.
    Contains,
    /// Answer with a histogram model loaded from --model.
    Model,
}

#[derive(Parser, Debug)]
#[command(name = "editcert-stub")]
struct Args {
    #[arg(long, value_enum, default_value_t = Rule::Constant)]
    rule: Rule,
    #[arg(long, default_value_t = 1)]
    class: usize,
    #[arg(long, default_value_t = 7)]
    token: u8,
    #[arg(long)]
    model: Option<std::path::PathBuf>,
    /// Advertise pipelining with a CAPS handshake line.
    #[arg(long)]
    caps: Option<usize>,
}

fn decode(b64: &str) -> Result<Vec<u8>, String> {
    use base64::Engine;
    base64::engine::general_purpose::STANDARD
        .decode(b64.trim())
        .map_err(|e| format!("bad base64: {e}"))
}

fn main() {
    let args = Args::parse();
    let model = args.model.as_ref().map(|path| {
        let file = std::fs::File::open(path).expect("model file opens");
        HistogramModel::load(std::io::BufReader::new(file)).expect("model file parses")
    });
    let stdin = std::io::stdin().lock();
    let mut stdout = std::io::stdout().lock();
    if let Some(n) = args.caps {
        writeln!(stdout, "CAPS concurrent={n}").unwrap();
        stdout.flush().unwrap();
    }
    for line in stdin.lines() {
        let line = match line {
            Ok(l) => l,
            Err(_) => break,
        };
        let reply = match line.strip_prefix("PREDICT ") {
            None => format!("ERR unknown request {line:?}"),
            Some(payload) => match decode(payload) {
                Err(msg) => format!("ERR {msg}"),
                Ok(bytes) => {
                    let class = match args.rule {
                        Rule::Constant => args.class,
                        Rule::LenParity => bytes.len() % 2,
                        Rule::Contains => usize::from(bytes.contains(&args.token)),
                        Rule::Model => {
                            let seq = TokenSeq::from_bytes(&bytes);
                            model
                                .as_ref()
                                .expect("--rule model requires --model")
                                .query(&seq)
                                .expect("histogram queries cannot fail on bytes")
                        }
                    };
                    format!("CLASS {class}")
                }
            },
        };
        writeln!(stdout, "{reply}").unwrap();
        stdout.flush().unwrap();
    }
}
