use clap::Parser;

use esurv::cli::{error_record, run, Cli};

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let mut stdout = std::io::stdout().lock();
    if let Err(err) = run(cli, &mut stdout) {
        eprintln!("{}", error_record(&err));
        std::process::exit(err.class().exit_code());
    }
}
