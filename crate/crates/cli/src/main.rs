//! `gmwb`: price, calibrate and hedge GMWB riders from the command line.

mod commands;
mod config;

use std::io::Write as _;
use std::path::Path;
use std::process::ExitCode;

use clap::parser::ValueSource;
use clap::{Arg, ArgMatches};

use commands::{CliError, Command};
use config::{RunConfig, KEYS};

const SUBCOMMANDS: &[(&str, &str)] = &[
    ("price", "contract value V_0 and rider value U_0 at a fee"),
    ("fair-fee", "fee rate at which the contract is worth the premium"),
    ("trigger-dist", "distribution of the trigger time (and surrender time with a schedule)"),
    ("hedge-sim", "profit of the hedged and unhedged insurer"),
    ("lapse-value", "values with and without surrenders, or the surrender region"),
    ("mc-benchmark", "Monte Carlo value and fair fee against the annual lattice"),
];

fn cli() -> clap::Command {
    let mut cmd = clap::Command::new("gmwb")
        .version(env!("CARGO_PKG_VERSION"))
        .about("Binomial pricing, fair fees and hedging of GMWB riders")
        .after_help(
            "Settings come from defaults, then --config FILE (key = value lines), then flags.\n\
             Exit status: 0 ok, 1 domain error or failed reproduction, 2 usage error.",
        )
        .subcommand_required(true)
        .arg_required_else_help(true)
        .arg(
            Arg::new("config")
                .long("config")
                .short('c')
                .global(true)
                .value_name("FILE")
                .help("plain-text key = value configuration"),
        );
    for key in KEYS {
        let mut arg = Arg::new(key.name).long(key.name).global(true).help(key.help);
        arg = if key.switch {
            arg.num_args(0..=1).default_missing_value("true").value_name("BOOL")
        } else {
            arg.value_name("VALUE").allow_negative_numbers(true)
        };
        cmd = cmd.arg(arg);
    }
    for (name, about) in SUBCOMMANDS {
        cmd = cmd.subcommand(clap::Command::new(*name).about(*about));
    }
    cmd.subcommand(
        clap::Command::new("reproduce")
            .about("rerun a reference table and diff it against the stored targets")
            .arg(
                Arg::new("table")
                    .required(true)
                    .value_parser(["table1", "table3", "table5", "table6", "table9", "table12", "table13"]),
            ),
    )
}

fn configure(matches: &ArgMatches) -> Result<RunConfig, CliError> {
    let mut cfg = RunConfig::default();
    if let Some(path) = matches.get_one::<String>("config") {
        cfg.apply_file(Path::new(path)).map_err(CliError::Usage)?;
    }
    for key in KEYS {
        if matches.value_source(key.name) == Some(ValueSource::CommandLine) {
            if let Some(value) = matches.get_one::<String>(key.name) {
                cfg.set(key.name, value).map_err(CliError::Usage)?;
            }
        }
    }
    Ok(cfg)
}

fn execute(matches: &ArgMatches) -> Result<bool, CliError> {
    let (name, sub) = matches.subcommand().expect("subcommand required");
    let command = match name {
        "price" => Command::Price,
        "fair-fee" => Command::FairFee,
        "trigger-dist" => Command::TriggerDist,
        "hedge-sim" => Command::HedgeSim,
        "lapse-value" => Command::LapseValue,
        "mc-benchmark" => Command::McBenchmark,
        "reproduce" => {
            let table = sub.get_one::<String>("table").expect("required");
            Command::Reproduce(table.parse().map_err(|e: gmwb::Error| CliError::Usage(e.to_string()))?)
        }
        _ => unreachable!("unknown subcommand {name}"),
    };
    let cfg = configure(sub)?;
    if let Some(threads) = cfg.threads {
        if threads == 0 {
            return Err(CliError::Usage("`threads` must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| CliError::Usage(format!("thread pool: {e}")))?;
    }

    let output = commands::run(command, &cfg)?;
    let text = format!("# gmwb {} {name}\n{}{}", env!("CARGO_PKG_VERSION"), cfg.echo(), output.body);
    match &cfg.output {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| CliError::Domain(format!("cannot write {}: {e}", path.display())))?,
        None => {
            let mut stdout = std::io::stdout().lock();
            let _ = stdout.write_all(text.as_bytes());
        }
    }
    Ok(output.ok)
}

fn main() -> ExitCode {
    let matches = cli().get_matches();
    match execute(&matches) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(CliError::Domain(msg)) => {
            eprintln!("gmwb: error: {msg}");
            ExitCode::from(1)
        }
        Err(CliError::Usage(msg)) => {
            eprintln!("gmwb: usage error: {msg}");
            ExitCode::from(2)
        }
    }
}

#[cfg(test)]
mod tests {
    #[test]
    fn cli_is_well_formed() {
        super::cli().debug_assert();
    }
}
