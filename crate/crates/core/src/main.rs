use bilinear_lab::cli::{run, Scenario, Subcommand};
use clap::{Arg, ArgAction, Command};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

fn command() -> Command {
    let mut cmd = Command::new("bilab")
        .version(env!("CARGO_PKG_VERSION"))
        .about("Simulation and control synthesis for bilinearly controlled fourth-order parabolic equations")
        .subcommand_required(true)
        .after_help("Exit codes: 0 all checks pass, 2 configuration or I/O error, 3 numerical failure, 4 a check failed.");
    for sub in Subcommand::ALL {
        let keys: Vec<String> = sub.schema().iter().map(|(k, d)| format!("  {k} = {d}")).collect();
        let help = format!("Keys (default):\n{}\n\nOutputs:\n{}", keys.join("\n"), sub.artifacts_help());
        cmd = cmd.subcommand(
            Command::new(sub.name())
                .after_help(help)
                .arg(Arg::new("config").long("config").short('c').value_name("FILE").help("config file or manifest.json to replay"))
                .arg(
                    Arg::new("set")
                        .long("set")
                        .short('s')
                        .value_name("KEY=VALUE")
                        .action(ArgAction::Append)
                        .help("override one key (repeatable)"),
                )
                .arg(Arg::new("model").long("model").value_name("ks|ch").help("shorthand for --set model=..."))
                .arg(Arg::new("out").long("out").short('o').value_name("DIR").default_value("bilab_out")),
        );
    }
    cmd
}

fn main() -> ExitCode {
    let matches = command().get_matches();
    let (name, m) = matches.subcommand().expect("subcommand is required");
    let sub: Subcommand = name.parse().expect("subcommands come from the same table");
    let mut sets: Vec<String> = m.get_many::<String>("set").map(|v| v.cloned().collect()).unwrap_or_default();
    if let Some(model) = m.get_one::<String>("model") {
        sets.push(format!("model={model}"));
    }
    let out = PathBuf::from(m.get_one::<String>("out").expect("has default"));
    let config = m.get_one::<String>("config").map(Path::new);
    let outcome = Scenario::new(sub, config, &sets, out).and_then(|sc| run(&sc));
    match outcome {
        Ok(o) => {
            for (k, v) in &o.checks {
                println!("{k}: {}", if *v { "pass" } else { "FAIL" });
            }
            println!("manifest: {}", o.manifest.display());
            ExitCode::from(o.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("bilab {name}: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
