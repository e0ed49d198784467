fn main() {
    std::process::exit(rankclust::cli::run(std::env::args_os()));
}
