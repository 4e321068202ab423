fn main() {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("CCRS_LOG", "warn")).init();
    std::process::exit(ccrs_cli::cli::run(std::env::args_os()));
}
