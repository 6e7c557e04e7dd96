fn main() {
    std::process::exit(keyscope::run());
}
