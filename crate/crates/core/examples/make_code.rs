//! Writes a (3,6)-regular length-504 code without length-4 cycles as alist.
//!
//! cargo run --release -p gsbp-core --example make_code > codes/regular_504_252.alist

use gsbp_core::tanner::{
    count_four_cycles, random_regular_graph, remove_four_cycles, serialize_alist,
};

fn main() {
    let g = random_regular_graph(504, 3, 6, 504_252).expect("valid degrees");
    eprintln!("initial length-4 cycles: {}", count_four_cycles(&g));
    let g = remove_four_cycles(&g, 504_252, 1_000_000).expect("cycles removed");
    print!("{}", serialize_alist(&g));
}
