fn main() {
    eprintln!("s2d2: command-line interface not wired up yet");
    std::process::exit(1);
}
