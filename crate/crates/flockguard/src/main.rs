fn main() {
    std::process::exit(flockguard::cli::main_entry(std::env::args_os()));
}
