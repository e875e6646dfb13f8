//! Write a synthetic benchmark panel as long CSV to stdout.
//!
//! Usage: synth_panel [case] [n_units] [seed]
//!   case     1 (shared trends, default) or 2 (partially parallel trends)
//!   n_units  number of units (default 500)
//!   seed     generator seed (default 7)

use didbracket::simulation::{generate, DgpConfig};

fn main() {
    let mut args = std::env::args().skip(1);
    let case = args.next().unwrap_or_else(|| "1".into());
    let n: usize = args
        .next()
        .map(|s| s.parse().expect("n_units"))
        .unwrap_or(500);
    let seed: u64 = args.next().map(|s| s.parse().expect("seed")).unwrap_or(7);
    let cfg = match case.as_str() {
        "1" => DgpConfig::case1(n),
        "2" => DgpConfig::case2(n),
        other => panic!("unknown case {other:?} (expected 1 or 2)"),
    };
    let ds = generate(&cfg, seed).expect("generation succeeds");
    ds.write_long_csv(std::io::stdout().lock())
        .expect("write to stdout");
}
