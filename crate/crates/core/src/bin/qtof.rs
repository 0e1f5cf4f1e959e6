fn main() {
    std::process::exit(tof_core::cli::run(std::env::args_os()));
}
