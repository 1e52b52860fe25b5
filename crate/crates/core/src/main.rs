fn main() {
    std::process::exit(saliency_lab::cli::run(std::env::args_os()));
}
