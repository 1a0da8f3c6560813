fn main() {
    std::process::exit(sobtrace::report::run(std::env::args_os()));
}
