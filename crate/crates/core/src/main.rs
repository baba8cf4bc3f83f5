use std::io;

fn main() {
    let env_out_dir = std::env::var_os(contests::cli::OUT_DIR_ENV).map(Into::into);
    let code = contests::cli::run(
        std::env::args_os(),
        env_out_dir,
        &mut io::stdout().lock(),
        &mut io::stderr().lock(),
    );
    std::process::exit(code);
}
