fn main() {
    std::process::exit(ganmf::cli::run(std::env::args_os()));
}
