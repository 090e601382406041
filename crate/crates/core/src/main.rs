fn main() {
    std::process::exit(topic_ident::cli::run(std::env::args_os()));
}
