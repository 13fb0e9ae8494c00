use std::process::ExitCode;

fn main() -> ExitCode {
    let out = morph_cli::run_command(std::env::args());
    if out.exit_code == morph_cli::EXIT_USAGE {
        eprint!("{}", out.rendered);
    } else {
        print!("{}", out.rendered);
    }
    ExitCode::from(out.exit_code as u8)
}
