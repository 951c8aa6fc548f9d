//! Thin command-line front end; all real work lives in the library.

fn main() {
    std::process::exit(bsato::cli::run());
}
