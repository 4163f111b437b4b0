fn main() {
    std::process::exit(rdbprofile_cli::run(std::env::args_os()));
}
