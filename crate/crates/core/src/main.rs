fn main() {
    let argv: Vec<String> = std::env::args().collect();
    std::process::exit(oparma::cli::parse_and_dispatch(&argv));
}
