use clap::Parser;
use ot_select::cli::{exit_code, run, Cli, EXIT_OK};

fn main() {
    let cli = Cli::parse();
    match run(&cli) {
        Ok((stdout, warnings)) => {
            for w in warnings {
                eprintln!("{w}");
            }
            print!("{stdout}");
            std::process::exit(EXIT_OK);
        }
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(exit_code(&e));
        }
    }
}
