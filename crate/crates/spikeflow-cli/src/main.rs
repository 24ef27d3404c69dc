use clap::Parser;

fn main() {
    let cli = spikeflow_cli::Cli::parse();
    let job = match spikeflow_cli::resolve(cli) {
        Ok(job) => job,
        Err(err) => {
            eprintln!("{err}");
            std::process::exit(err.exit_code());
        }
    };
    if let Err(err) = spikeflow_cli::run(&job) {
        eprintln!("{err}");
        std::process::exit(err.exit_code());
    }
}
