fn main() {
    std::process::exit(gsp_core::cli::main());
}
