//! Writes the observer model for a given `lam` and gain-fit degree.
//!
//! ```text
//! cargo run -p piecert-cli --example gen_observer -- 5 1 > models/observer_rd.pde
//! ```

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let (lambda, degree) = match args.as_slice() {
        [l, d] => match (l.parse::<f64>(), d.parse::<usize>()) {
            (Ok(l), Ok(d)) => (l, d),
            _ => usage(),
        },
        _ => usage(),
    };
    print!("{}", piecert::models::observer_model(lambda, degree));
}

fn usage() -> ! {
    eprintln!("usage: gen_observer LAMBDA DEGREE");
    std::process::exit(2);
}
