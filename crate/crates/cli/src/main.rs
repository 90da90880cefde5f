use std::io::Write;

fn main() {
    let (code, out) = kazhdan_cli::run(std::env::args_os());
    let mut stdout = std::io::stdout().lock();
    // A closed pipe downstream is not an error worth reporting.
    let _ = stdout.write_all(out.as_bytes());
    let _ = stdout.flush();
    std::process::exit(code);
}
