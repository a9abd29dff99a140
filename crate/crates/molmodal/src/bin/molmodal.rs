fn main() {
    std::process::exit(molmodal::cli::run(std::env::args_os()));
}
