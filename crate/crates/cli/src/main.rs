use clap::Parser;

use diffstab::{run, Cli, Io};

fn main() {
    let cli = Cli::parse();
    let (mut out, mut err) = (std::io::stdout().lock(), std::io::stderr().lock());
    let code = run(
        cli,
        &mut Io {
            out: &mut out,
            err: &mut err,
        },
    );
    std::process::exit(code);
}
