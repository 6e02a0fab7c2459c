fn main() {
    println!("calderon CLI placeholder");
}
