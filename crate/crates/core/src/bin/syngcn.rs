fn main() {
    std::process::exit(syngcn::cli::run(std::env::args_os()));
}
