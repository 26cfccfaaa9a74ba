use std::io::Write;

fn main() {
    env_logger::Builder::from_env(env_logger::Env::new().filter("SELBAYES_LOG")).format_timestamp(None).init();
    let outcome = selbayes::run(std::env::args_os());
    std::io::stdout().write_all(outcome.stdout.as_bytes()).ok();
    std::io::stderr().write_all(outcome.stderr.as_bytes()).ok();
    std::process::exit(outcome.code);
}
