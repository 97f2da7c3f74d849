fn main() {
    std::process::exit(repro_bound::run(std::env::args_os()));
}
