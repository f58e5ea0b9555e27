mod commands;
mod config;
mod error;

use clap::Parser;

use config::{Cli, Command};
use error::CliError;

fn dispatch(command: Command) -> Result<(), CliError> {
    match command {
        Command::VieSolve(a) => commands::vie_solve(a),
        Command::VieConverge(a) => commands::vie_converge(a),
        Command::StabScan(a) => commands::stab_scan(a),
        Command::StabRoots(a) => commands::stab_roots(a),
        Command::WeightsDump(a) => commands::weights_dump(a),
        Command::BasisDump(a) => commands::basis_dump(a),
        Command::MeshGen(a) => commands::mesh_gen(a),
        Command::TdbieRun(a) => commands::tdbie_run(a),
    }
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    let name = cli.command.name();
    if let Err(e) = dispatch(cli.command) {
        eprintln!("{name}: {e}");
        std::process::exit(e.exit_code());
    }
}
