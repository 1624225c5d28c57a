use std::process::ExitCode;

fn main() -> ExitCode {
    std::panic::set_hook(Box::new(|info| eprintln!("fluidbound: internal error: {info}")));
    ExitCode::from(fluidbound_cli::run_from(std::env::args_os().collect()) as u8)
}
