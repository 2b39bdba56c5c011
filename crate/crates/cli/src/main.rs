use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Arg, ArgAction, Command};
use gravcat_cli::config::key_names;
use gravcat_cli::{build_config, merge_entries, parse_entries, run, CliError, Entry};

fn command() -> Command {
    let mut cmd = Command::new("gravcat")
        .version(env!("CARGO_PKG_VERSION"))
        .about("LIV decoherence experiments on two-qubit gravcat states")
        .arg(
            Arg::new("mode_arg")
                .value_name("MODE")
                .help("evolve, sweep, trajectories, timescales, energy_scale or reproduce"),
        )
        .arg(
            Arg::new("config")
                .long("config")
                .short('c')
                .value_name("FILE")
                .help("flat `key = value` config file"),
        );
    for key in key_names() {
        let long = key.replace('_', "-");
        let mut arg = Arg::new(key)
            .long(long)
            .value_name("VALUE")
            .allow_hyphen_values(true)
            .action(ArgAction::Set);
        arg = match key {
            "base_seed" => arg.visible_alias("seed"),
            "output_path" => arg.visible_alias("output").short('o'),
            _ => arg,
        };
        cmd = cmd.arg(arg);
    }
    cmd
}

fn execute() -> Result<Vec<PathBuf>, CliError> {
    let matches = command().get_matches();
    let file = match matches.get_one::<String>("config") {
        Some(path) => {
            let path = PathBuf::from(path);
            let text = std::fs::read_to_string(&path).map_err(|source| CliError::Io { path, source })?;
            parse_entries(&text)?
        }
        None => Vec::new(),
    };
    let mut flags = Vec::new();
    if let Some(mode) = matches.get_one::<String>("mode_arg") {
        flags.push(Entry::flag("mode", mode));
    }
    for key in key_names() {
        if let Some(v) = matches.get_one::<String>(key) {
            flags.push(Entry::flag(key, v));
        }
    }
    let cfg = build_config(merge_entries(file, flags))?;
    Ok(run(&cfg)?.outputs)
}

fn main() -> ExitCode {
    match execute() {
        Ok(outputs) => {
            for path in outputs {
                println!("wrote {}", path.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("gravcat: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
