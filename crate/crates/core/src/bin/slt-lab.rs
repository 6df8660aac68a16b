use clap::Parser;

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = slt_lab::cli::Cli::parse();
    std::process::exit(slt_lab::cli::dispatch(cli));
}
