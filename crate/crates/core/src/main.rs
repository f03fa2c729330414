fn main() {
    std::process::exit(qfi_lab::cli::run(std::env::args_os()));
}
