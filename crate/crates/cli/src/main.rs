fn main() {
    std::process::exit(pesvlab::run(std::env::args_os()));
}
