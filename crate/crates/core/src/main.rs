use clap::Parser;

use cdpr_core::cli::{run, Cli, FailureClass};

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) if !err.use_stderr() => err.exit(),
        Err(err) => {
            let _ = err.print();
            std::process::exit(FailureClass::Usage.exit_code());
        }
    };
    match run(&cli) {
        Ok(output) => {
            print!("{}", output.report);
            for f in &output.files {
                println!("wrote {}", f.display());
            }
        }
        Err(err) => {
            eprintln!("{err}");
            std::process::exit(err.class.exit_code());
        }
    }
}
