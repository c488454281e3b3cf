use log::LevelFilter;

fn main() {
    env_logger::Builder::new().filter_level(LevelFilter::Warn).format_timestamp(None).init();
    std::process::exit(midsurface::cli::run(std::env::args_os()));
}
