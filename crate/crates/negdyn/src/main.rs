fn main() { std::process::exit(negdyn::cli::run()); }
