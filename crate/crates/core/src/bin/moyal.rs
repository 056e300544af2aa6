use clap::Parser;

fn main() {
    env_logger::init();
    std::process::exit(moyal::cli::main_with(moyal::cli::Cli::parse()));
}
