fn main() {
    std::process::exit(lrl_cli::cli::main_impl());
}
