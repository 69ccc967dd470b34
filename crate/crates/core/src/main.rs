fn main() {
    std::process::exit(levelset_clt::cli::run(std::env::args_os()));
}
