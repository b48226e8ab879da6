fn main() {
    std::process::exit(parcelsight::cli::run(std::env::args_os()));
}
