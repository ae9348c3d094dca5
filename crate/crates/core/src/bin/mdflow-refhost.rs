//! Reference script host.
//!
//! ```text
//! mdflow-refhost [--extra-port] [--hang-exec] [--ignore-bye] <behavior> [script]
//! ```
//!
//! Serves the wire protocol on stdio using a built-in behavior. The
//! manifest comes from the script's annotations; the `xyz` importer
//! behavior needs no script.

use std::io::{self, BufReader, BufWriter};
use std::path::Path;
use std::process::ExitCode;

use mdflow_core::script::serve::behavior;
use mdflow_core::script::{importer_manifest, manifest_of, serve, ServeQuirks};

fn usage() -> ExitCode {
    eprintln!(
        "usage: mdflow-refhost [--extra-port] [--hang-exec] [--ignore-bye] <behavior> [script]\nbehaviors: {}",
        behavior::NAMES.join(", ")
    );
    ExitCode::from(2)
}

fn main() -> ExitCode {
    let mut quirks = ServeQuirks::default();
    let mut positional = Vec::new();
    for arg in std::env::args().skip(1) {
        match arg.as_str() {
            "--extra-port" => quirks.extra_port = true,
            "--hang-exec" => quirks.hang_on_exec = true,
            "--ignore-bye" => quirks.ignore_bye = true,
            "-h" | "--help" => return usage(),
            s if s.starts_with("--") => return usage(),
            _ => positional.push(arg),
        }
    }
    let Some(name) = positional.first() else { return usage() };
    let Some(body) = behavior::by_name(name) else {
        eprintln!("unknown behavior `{name}`");
        return usage();
    };
    let manifest = match positional.get(1) {
        Some(script) => match manifest_of(Path::new(script), None) {
            Ok(m) => m,
            Err(e) => {
                eprintln!("{script}: {e}");
                return ExitCode::from(1);
            }
        },
        None if name == "xyz" => importer_manifest("xyz"),
        None => return usage(),
    };
    let mut input = BufReader::new(io::stdin().lock());
    let mut output = BufWriter::new(io::stdout().lock());
    match serve(&mut input, &mut output, &manifest, body, &quirks) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("mdflow-refhost: {e}");
            ExitCode::from(1)
        }
    }
}
