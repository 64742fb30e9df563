use std::path::PathBuf;
use std::process::ExitCode;

use clap::{value_parser, Arg, ArgAction, ArgMatches, Command};
use latop::{Boundary, Caps};
use latop_cli::commands;
use latop_cli::config::{RawConfig, RunConfig, KEYS};
use latop_cli::gen::{read_target, write_dataset, GenSpec};
use latop_cli::{CliError, CliResult};

fn path_arg(name: &'static str, help: &'static str) -> Arg {
    Arg::new(name)
        .long(name)
        .value_name("FILE")
        .value_parser(value_parser!(PathBuf))
        .help(help)
}

fn caps_args() -> [Arg; 2] {
    [
        Arg::new("table_cap")
            .long("table-cap")
            .value_parser(value_parser!(usize))
            .default_value("20"),
        Arg::new("basis_cap")
            .long("basis-cap")
            .value_parser(value_parser!(usize))
            .default_value("16"),
    ]
}

fn cli() -> Command {
    let train_flags = KEYS.iter().map(|(key, help)| {
        Arg::new(*key)
            .long(key.replace('_', "-"))
            .value_name("VALUE")
            .help(*help)
    });
    Command::new("latop")
        .version(env!("CARGO_PKG_VERSION"))
        .about("Learn binary image operators by lattice descent")
        .subcommand_required(true)
        .subcommand(
            Command::new("gen")
                .about("Generate pairs from a planted operator")
                .arg(path_arg("target", "planted parameter point or table").required(true))
                .arg(
                    Arg::new("count")
                        .long("count")
                        .value_parser(value_parser!(usize))
                        .default_value("20"),
                )
                .arg(
                    Arg::new("height")
                        .long("height")
                        .value_parser(value_parser!(usize))
                        .default_value("32"),
                )
                .arg(
                    Arg::new("width")
                        .long("width")
                        .value_parser(value_parser!(usize))
                        .default_value("32"),
                )
                .arg(
                    Arg::new("density")
                        .long("density")
                        .value_parser(value_parser!(f64))
                        .default_value("0.4"),
                )
                .arg(
                    Arg::new("noise_rate")
                        .long("noise-rate")
                        .value_parser(value_parser!(f64))
                        .default_value("0"),
                )
                .arg(
                    Arg::new("seed")
                        .long("seed")
                        .value_parser(value_parser!(u64))
                        .default_value("0"),
                )
                .arg(path_arg("out", "output directory").required(true))
                .args(caps_args()),
        )
        .subcommand(
            Command::new("train")
                .about("Fit a parameter point to the pairs of a manifest")
                .arg(path_arg("config", "run configuration (key = value lines)"))
                .arg(path_arg("manifest", "tab-separated input/target list").required(true))
                .args(train_flags),
        )
        .subcommand(
            Command::new("eval")
                .about("Pooled pixel error and IoU of a parameter point")
                .arg(path_arg("theta", "serialized parameter point").required(true))
                .arg(path_arg("manifest", "tab-separated input/target list").required(true))
                .arg(Arg::new("boundary").long("boundary").default_value("zero-pad"))
                .args(caps_args()),
        )
        .subcommand(
            Command::new("basis")
                .about("Basis intervals and structural flags of a parameter point")
                .arg(path_arg("theta", "serialized parameter point").required(true))
                .args(caps_args()),
        )
        .subcommand(
            Command::new("inspect-trace").about("Summarize a trace CSV").arg(
                Arg::new("trace")
                    .value_parser(value_parser!(PathBuf))
                    .required(true)
                    .action(ArgAction::Set),
            ),
        )
}

fn caps(m: &ArgMatches) -> CliResult<Caps> {
    let caps = Caps {
        table: m.get_one("table_cap").copied().unwrap(),
        basis: m.get_one("basis_cap").copied().unwrap(),
    };
    if caps.table > latop::lattice::MAX_WINDOW_BITS || caps.basis > caps.table {
        return Err(CliError::config("caps must satisfy basis_cap <= table_cap <= 31"));
    }
    Ok(caps)
}

fn path<'a>(m: &'a ArgMatches, name: &str) -> &'a PathBuf {
    m.get_one::<PathBuf>(name).expect("required argument")
}

fn run(matches: &ArgMatches) -> CliResult<String> {
    match matches.subcommand() {
        Some(("gen", m)) => {
            let spec = GenSpec {
                count: *m.get_one("count").unwrap(),
                height: *m.get_one("height").unwrap(),
                width: *m.get_one("width").unwrap(),
                density: *m.get_one("density").unwrap(),
                noise_rate: *m.get_one("noise_rate").unwrap(),
                seed: *m.get_one("seed").unwrap(),
            };
            spec.validate().map_err(|e| CliError::config(e.to_string()))?;
            let target = read_target(path(m, "target"), caps(m)?)?;
            let out = path(m, "out");
            write_dataset(&target, &spec, out)?;
            Ok(format!(
                "wrote {} pairs to {}\n",
                spec.count,
                out.join("manifest.tsv").display()
            ))
        }
        Some(("train", m)) => {
            let mut raw = match m.get_one::<PathBuf>("config") {
                Some(p) => RawConfig::parse(&std::fs::read_to_string(p).map_err(|e| CliError::io(p, e))?)
                    .map_err(|e| CliError::config(format!("{}: {e}", p.display())))?,
                None => RawConfig::default(),
            };
            for (key, _) in KEYS {
                if let Some(v) = m.get_one::<String>(key) {
                    raw.set_flag(key, v)?;
                }
            }
            let cfg = RunConfig::from_raw(&raw)?;
            commands::train(&cfg, path(m, "manifest"))
        }
        Some(("eval", m)) => {
            let boundary = Boundary::parse(m.get_one::<String>("boundary").unwrap())
                .map_err(|e| CliError::config(e.to_string()))?;
            commands::eval(path(m, "theta"), path(m, "manifest"), boundary, caps(m)?)
        }
        Some(("basis", m)) => commands::basis(path(m, "theta"), caps(m)?),
        Some(("inspect-trace", m)) => commands::inspect_trace(path(m, "trace")),
        _ => unreachable!("subcommand required"),
    }
}

fn main() -> ExitCode {
    let matches = cli().get_matches();
    match run(&matches) {
        Ok(text) => {
            print!("{text}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error[{}]: {e}", e.category());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
