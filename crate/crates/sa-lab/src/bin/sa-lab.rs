//! Thin command-line front end; all logic lives in the library.

fn main() {
    std::process::exit(sa_lab::cli::run());
}
