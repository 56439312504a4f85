fn main() {
    std::process::exit(margin_scope_cli::run(std::env::args()));
}
