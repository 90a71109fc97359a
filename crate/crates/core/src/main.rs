fn main() {
    std::process::exit(branekernels::run());
}
