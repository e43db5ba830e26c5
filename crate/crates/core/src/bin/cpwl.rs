fn main() {
    std::process::exit(cpwl::cli::main_with_args(std::env::args()));
}
