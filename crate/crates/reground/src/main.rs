fn main() -> anyhow::Result<()> {
    reground::cli::main()
}
