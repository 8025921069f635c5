use std::process::ExitCode;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let code = splash_core::cli_io::run_cli(std::env::args().skip(1));
    ExitCode::from(u8::try_from(code).unwrap_or(1))
}
