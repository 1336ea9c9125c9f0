fn main() {
    std::process::exit(graph_sandwich::cli::run());
}
