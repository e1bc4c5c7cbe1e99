fn main() {
    std::process::exit(ddlab::run(std::env::args_os()));
}
