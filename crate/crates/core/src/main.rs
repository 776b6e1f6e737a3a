use std::io::Write;

fn main() {
    env_logger::init();
    let out = thurston::cli::run(std::env::args_os());
    let _ = std::io::stderr().write_all(out.stderr.as_bytes());
    let mut stdout = std::io::stdout().lock();
    let _ = stdout.write_all(out.stdout.as_bytes());
    let _ = stdout.flush();
    std::process::exit(out.code);
}
