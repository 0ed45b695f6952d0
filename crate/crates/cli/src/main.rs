fn main() {
    std::process::exit(wz_sentinel::run(std::env::args_os()));
}
