fn main() {
    println!("holab scenario runner");
}
