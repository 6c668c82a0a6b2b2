fn main() {
    std::process::exit(droopstab::cli::run(std::env::args_os()));
}
