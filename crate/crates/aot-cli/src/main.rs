use std::io::Write;

fn main() {
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    let result = aot_cli::run_from_args(std::env::args_os(), &mut out);
    let _ = out.flush();
    if let Err(e) = result {
        eprintln!("adapted-ot: {e}");
        std::process::exit(e.exit_code());
    }
}
