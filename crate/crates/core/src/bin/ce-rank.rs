fn main() {
    std::process::exit(ce_rank::cli::main())
}
