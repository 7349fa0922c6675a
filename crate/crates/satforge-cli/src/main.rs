fn main() {
    println!("satforge");
}
