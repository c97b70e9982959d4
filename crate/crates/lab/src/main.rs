fn main() {
    std::process::exit(carleman_lab::cli::main_with(std::env::args_os()));
}
