use std::process::ExitCode;

fn main() -> ExitCode {
    let env_out = std::env::var_os(rotocool_cli::OUT_ENV).map(Into::into);
    ExitCode::from(rotocool_cli::run(std::env::args_os(), env_out))
}
