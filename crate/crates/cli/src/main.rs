use clap::Parser;

fn main() {
    let cli = mfg_cli::Cli::parse();
    std::process::exit(mfg_cli::run(&cli));
}
