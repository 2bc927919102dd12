fn main() {
    std::process::exit(valuepref::cli::run(std::env::args_os()));
}
