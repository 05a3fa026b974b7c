fn main() {
    std::process::exit(stillness_core::cli::cli_main());
}
