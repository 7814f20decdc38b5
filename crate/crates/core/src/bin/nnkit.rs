fn main() {
    nnkit::cli::main()
}
