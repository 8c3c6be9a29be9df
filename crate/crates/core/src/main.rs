fn main() {
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    let code = diffctl::cli::run(std::env::args_os().skip(1), &mut stdout.lock(), &mut stderr.lock());
    std::process::exit(code);
}
