//! Regenerates `fixtures/texture_linear_3x8x8.json`:
//! `cargo run -p stba-core --example write_fixture_model -- fixtures/texture_linear_3x8x8.json`

fn main() {
    let path = std::env::args().nth(1).expect("output path");
    std::fs::write(path, stba_core::fixtures::texture_model().to_json()).unwrap();
}
